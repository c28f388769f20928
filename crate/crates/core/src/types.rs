//! Sensor identities and the per-sample record that every logged or
//! streamed measurement is carried in.

use std::fmt;

/// Signed 24-bit range of the ECG/RESP front-end.
pub const ECG_COUNTS_MIN: i32 = -(1 << 23);
pub const ECG_COUNTS_MAX: i32 = (1 << 23) - 1;

/// PPG LED bits.
pub const LED_GREEN: u8 = 0b001;
pub const LED_RED: u8 = 0b010;
pub const LED_IR: u8 = 0b100;
pub const LED_ALL: u8 = LED_GREEN | LED_RED | LED_IR;

/// Record source tag. Audio is not a record source; it lives in its own file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SensorId {
    EcgResp,
    Ppg,
    Imu,
    Marker,
    Unknown(u8),
}

impl SensorId {
    pub const fn from_u8(raw: u8) -> Self {
        match raw {
            0x01 => SensorId::EcgResp,
            0x02 => SensorId::Ppg,
            0x03 => SensorId::Imu,
            0x7F => SensorId::Marker,
            other => SensorId::Unknown(other),
        }
    }

    pub const fn as_u8(self) -> u8 {
        match self {
            SensorId::EcgResp => 0x01,
            SensorId::Ppg => 0x02,
            SensorId::Imu => 0x03,
            SensorId::Marker => 0x7F,
            SensorId::Unknown(raw) => raw,
        }
    }

    /// Short lowercase name used in listings and CLI filters.
    pub fn name(self) -> String {
        match self {
            SensorId::EcgResp => "ecg".into(),
            SensorId::Ppg => "ppg".into(),
            SensorId::Imu => "imu".into(),
            SensorId::Marker => "marker".into(),
            SensorId::Unknown(raw) => format!("0x{raw:02x}"),
        }
    }
}

impl From<u8> for SensorId {
    fn from(raw: u8) -> Self {
        SensorId::from_u8(raw)
    }
}

impl From<SensorId> for u8 {
    fn from(id: SensorId) -> u8 {
        id.as_u8()
    }
}

impl fmt::Display for SensorId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

/// One ECG front-end conversion: channel 1 is ECG, channel 2 is respiration.
/// Both hold signed 24-bit counts in a 32-bit container.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EcgRespSample {
    pub ch1_counts: i32,
    pub ch2_counts: i32,
}

/// One PPG conversion. `counts` holds one value per set bit of `led_mask`,
/// ordered green, red, IR.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PpgSample {
    pub led_mask: u8,
    pub counts: Vec<u32>,
}

impl PpgSample {
    /// Count for one LED bit, if that LED is active.
    pub fn led(&self, led_bit: u8) -> Option<u32> {
        if self.led_mask & led_bit == 0 {
            return None;
        }
        let idx = (self.led_mask & (led_bit - 1)).count_ones() as usize;
        self.counts.get(idx).copied()
    }
}

/// Raw IMU output, ±2 g / ±250 dps full scale.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ImuSample {
    pub ax: i16,
    pub ay: i16,
    pub az: i16,
    pub gx: i16,
    pub gy: i16,
    pub gz: i16,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Payload {
    EcgResp(EcgRespSample),
    Ppg(PpgSample),
    Imu(ImuSample),
    Marker {
        code: u8,
    },
    /// Opaque payload of a sensor this build does not know.
    Raw(Vec<u8>),
}

/// One timestamped, ID-tagged sample.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SensorRecord {
    pub sensor_id: SensorId,
    /// Microseconds since session start.
    pub timestamp_us: u64,
    pub payload: Payload,
}

impl SensorRecord {
    pub fn ecg(timestamp_us: u64, ch1_counts: i32, ch2_counts: i32) -> Self {
        SensorRecord {
            sensor_id: SensorId::EcgResp,
            timestamp_us,
            payload: Payload::EcgResp(EcgRespSample { ch1_counts, ch2_counts }),
        }
    }

    pub fn ppg(timestamp_us: u64, led_mask: u8, counts: Vec<u32>) -> Self {
        SensorRecord { sensor_id: SensorId::Ppg, timestamp_us, payload: Payload::Ppg(PpgSample { led_mask, counts }) }
    }

    pub fn imu(timestamp_us: u64, sample: ImuSample) -> Self {
        SensorRecord { sensor_id: SensorId::Imu, timestamp_us, payload: Payload::Imu(sample) }
    }

    pub fn marker(timestamp_us: u64, code: u8) -> Self {
        SensorRecord { sensor_id: SensorId::Marker, timestamp_us, payload: Payload::Marker { code } }
    }

    /// Ordering key of the record file: time first, then sensor id.
    pub fn sort_key(&self) -> (u64, u8) {
        (self.timestamp_us, self.sensor_id.as_u8())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sensor_id_round_trips_every_byte() {
        for raw in 0..=u8::MAX {
            assert_eq!(SensorId::from_u8(raw).as_u8(), raw);
        }
    }

    #[test]
    fn defined_ids_are_stable() {
        assert_eq!(SensorId::EcgResp.as_u8(), 0x01);
        assert_eq!(SensorId::Ppg.as_u8(), 0x02);
        assert_eq!(SensorId::Imu.as_u8(), 0x03);
        assert_eq!(SensorId::Marker.as_u8(), 0x7F);
        assert_eq!(SensorId::from_u8(0x42), SensorId::Unknown(0x42));
    }

    #[test]
    fn ppg_led_lookup_follows_mask_order() {
        let s = PpgSample { led_mask: LED_GREEN | LED_IR, counts: vec![10, 30] };
        assert_eq!(s.led(LED_GREEN), Some(10));
        assert_eq!(s.led(LED_RED), None);
        assert_eq!(s.led(LED_IR), Some(30));
    }
}
