use std::fmt;
use std::str::FromStr;

use crate::config::SensorConfig;
use crate::series::{TimeSeries, Unit};
use crate::types::{Payload, SensorId, SensorRecord, LED_GREEN, LED_IR, LED_RED};
use crate::units::{imu_raw_to_physical, ECG_MV_PER_COUNT};

/// One scalar signal carried inside the sensor records.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Channel {
    Ecg,
    Resp,
    PpgGreen,
    PpgRed,
    PpgIr,
    AccelX,
    AccelY,
    AccelZ,
    GyroX,
    GyroY,
    GyroZ,
}

impl Channel {
    pub const ALL: [Channel; 11] = [
        Channel::Ecg,
        Channel::Resp,
        Channel::PpgGreen,
        Channel::PpgRed,
        Channel::PpgIr,
        Channel::AccelX,
        Channel::AccelY,
        Channel::AccelZ,
        Channel::GyroX,
        Channel::GyroY,
        Channel::GyroZ,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Channel::Ecg => "ecg",
            Channel::Resp => "resp",
            Channel::PpgGreen => "ppg-green",
            Channel::PpgRed => "ppg-red",
            Channel::PpgIr => "ppg-ir",
            Channel::AccelX => "accel-x",
            Channel::AccelY => "accel-y",
            Channel::AccelZ => "accel-z",
            Channel::GyroX => "gyro-x",
            Channel::GyroY => "gyro-y",
            Channel::GyroZ => "gyro-z",
        }
    }

    pub fn sensor(self) -> SensorId {
        match self {
            Channel::Ecg | Channel::Resp => SensorId::EcgResp,
            Channel::PpgGreen | Channel::PpgRed | Channel::PpgIr => SensorId::Ppg,
            _ => SensorId::Imu,
        }
    }

    pub fn unit(self) -> Unit {
        match self {
            Channel::Ecg | Channel::Resp => Unit::Millivolts,
            Channel::PpgGreen | Channel::PpgRed | Channel::PpgIr => Unit::Counts,
            Channel::AccelX | Channel::AccelY | Channel::AccelZ => Unit::G,
            _ => Unit::Dps,
        }
    }

    /// Whether the configuration produces this channel.
    pub fn enabled_in(self, cfg: &SensorConfig) -> bool {
        let led = |bit| cfg.ppg.enabled && cfg.ppg_led_mask & bit != 0;
        match self {
            Channel::Ecg | Channel::Resp => cfg.ecg.enabled,
            Channel::PpgGreen => led(LED_GREEN),
            Channel::PpgRed => led(LED_RED),
            Channel::PpgIr => led(LED_IR),
            _ => cfg.imu.enabled,
        }
    }

    /// The channel's value in a record, in physical units (PPG stays in
    /// counts). `None` if the record does not carry this channel.
    pub fn value(self, record: &SensorRecord) -> Option<f64> {
        match (&record.payload, self) {
            (Payload::EcgResp(s), Channel::Ecg) => Some(s.ch1_counts as f64 * ECG_MV_PER_COUNT),
            (Payload::EcgResp(s), Channel::Resp) => Some(s.ch2_counts as f64 * ECG_MV_PER_COUNT),
            (Payload::Ppg(s), Channel::PpgGreen) => s.led(LED_GREEN).map(f64::from),
            (Payload::Ppg(s), Channel::PpgRed) => s.led(LED_RED).map(f64::from),
            (Payload::Ppg(s), Channel::PpgIr) => s.led(LED_IR).map(f64::from),
            (Payload::Imu(s), ch) => {
                let p = imu_raw_to_physical(*s);
                match ch {
                    Channel::AccelX => Some(p.accel_g[0]),
                    Channel::AccelY => Some(p.accel_g[1]),
                    Channel::AccelZ => Some(p.accel_g[2]),
                    Channel::GyroX => Some(p.gyro_dps[0]),
                    Channel::GyroY => Some(p.gyro_dps[1]),
                    Channel::GyroZ => Some(p.gyro_dps[2]),
                    _ => None,
                }
            }
            _ => None,
        }
    }
}

impl fmt::Display for Channel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Channel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let ch = match s.to_ascii_lowercase().as_str() {
            "ecg" => Channel::Ecg,
            "resp" => Channel::Resp,
            "ppg" | "ppg-green" => Channel::PpgGreen,
            "ppg-red" => Channel::PpgRed,
            "ppg-ir" => Channel::PpgIr,
            "ax" | "accel-x" => Channel::AccelX,
            "ay" | "accel-y" => Channel::AccelY,
            "az" | "accel-z" => Channel::AccelZ,
            "gx" | "gyro-x" => Channel::GyroX,
            "gy" | "gyro-y" => Channel::GyroY,
            "gz" | "gyro-z" => Channel::GyroZ,
            _ => return Err(format!("unknown channel '{s}'")),
        };
        Ok(ch)
    }
}

/// Pulls one channel out of a record sequence as a uniform series at the
/// configured rate, starting at the first sample's timestamp.
///
/// Returns `None` when no record carries the channel.
pub fn extract_channel(records: &[SensorRecord], cfg: &SensorConfig, channel: Channel) -> Option<TimeSeries> {
    let sensor = channel.sensor();
    let rate = cfg.channel(sensor)?.rate_hz as f64;
    let mut start = None;
    let samples: Vec<f64> = records
        .iter()
        .filter(|r| r.sensor_id == sensor)
        .filter_map(|r| {
            let v = channel.value(r)?;
            start.get_or_insert(r.timestamp_us);
            Some(v)
        })
        .collect();
    Some(TimeSeries::new(start?, rate, channel.unit(), samples))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::ImuSample;

    #[test]
    fn names_round_trip() {
        for ch in Channel::ALL {
            assert_eq!(ch.name().parse::<Channel>(), Ok(ch));
        }
        assert_eq!("gz".parse::<Channel>(), Ok(Channel::GyroZ));
        assert!("gyro-w".parse::<Channel>().is_err());
    }

    #[test]
    fn extraction_scales_and_filters() {
        let cfg = SensorConfig::default();
        let recs = vec![
            SensorRecord::ecg(0, 0, 10),
            SensorRecord::imu(0, ImuSample { az: 16384, gz: -131, ..Default::default() }),
            SensorRecord::ecg(8000, 1 << 20, -10),
        ];
        let ecg = extract_channel(&recs, &cfg, Channel::Ecg).unwrap();
        assert_eq!(ecg.rate_hz, 125.0);
        assert_eq!(ecg.samples, vec![0.0, (1 << 20) as f64 * ECG_MV_PER_COUNT]);
        let gz = extract_channel(&recs, &cfg, Channel::GyroZ).unwrap();
        assert_eq!(gz.samples, vec![-1.0]);
        assert!(extract_channel(&recs, &cfg, Channel::PpgGreen).is_none());
    }
}
