use super::ambient::{mix_into_stethoscope, synth_ambient};
use super::beats::beat_times_us;
use super::ecg::render_ecg;
use super::pcg::synth_pcg;
use super::ppg::render_ppg;
use super::resp::{render_imu, render_resp, RespPhase};
use super::{check_duration, SimError};
use crate::codec::{Event, EventFile, EventKind, Session, SessionHeader, StereoPcm};
use crate::config::ValidatedConfig;
use crate::profile::PhysioProfile;
use crate::types::{ImuSample, SensorRecord, LED_GREEN, LED_IR, LED_RED};
use crate::units::{dps_to_raw, g_to_raw, mv_to_ecg_counts};

/// Wall-clock anchor written into simulated headers (2024-01-01T00:00:00Z).
/// Fixed so that output files depend only on (profile, config, seed).
pub const SESSION_EPOCH_US: u64 = 1_704_067_200_000_000;

const PPG_DC_COUNTS: f64 = 200_000.0;
const PPG_COUNTS_PER_UNIT: f64 = 20_000.0;

/// What the simulator knows exactly about a session.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub r_peak_times_us: Vec<u64>,
    pub s1_times_us: Vec<u64>,
    pub s2_times_us: Vec<u64>,
    pub breath_times_us: Vec<u64>,
    pub mean_hr_bpm: f64,
    pub mean_rr_brpm: f64,
}

impl GroundTruth {
    pub fn to_events(&self) -> EventFile {
        let mut events: Vec<Event> = [
            (EventKind::RPeak, &self.r_peak_times_us),
            (EventKind::S1, &self.s1_times_us),
            (EventKind::S2, &self.s2_times_us),
            (EventKind::Breath, &self.breath_times_us),
        ]
        .into_iter()
        .flat_map(|(kind, times)| times.iter().map(move |&t| Event::new(kind, t)))
        .collect();
        events.sort_by_key(|e| (e.time_us, e.kind));
        EventFile {
            meta: vec![("mean_hr_bpm".into(), self.mean_hr_bpm), ("mean_rr_brpm".into(), self.mean_rr_brpm)],
            events,
        }
    }

    pub fn from_events(file: &EventFile) -> Self {
        GroundTruth {
            r_peak_times_us: file.times(EventKind::RPeak),
            s1_times_us: file.times(EventKind::S1),
            s2_times_us: file.times(EventKind::S2),
            breath_times_us: file.times(EventKind::Breath),
            mean_hr_bpm: file.meta("mean_hr_bpm").unwrap_or(f64::NAN),
            mean_rr_brpm: file.meta("mean_rr_brpm").unwrap_or(f64::NAN),
        }
    }
}

/// Mean of the per-interval rates, or the nominal rate with fewer than two
/// beats.
fn mean_hr(r_peaks_us: &[u64], nominal: f64) -> f64 {
    if r_peaks_us.len() < 2 {
        return nominal;
    }
    let bpm: Vec<f64> = r_peaks_us.windows(2).map(|w| 60e6 / (w[1] - w[0]) as f64).collect();
    bpm.iter().sum::<f64>() / bpm.len() as f64
}

/// Record timestamps for `duration_us` at an integer rate: sample `k` is
/// stamped `round(k · 1e6 / rate)`, so the error never accumulates.
fn sample_stamps(duration_us: u64, rate_hz: u32) -> impl Iterator<Item = u64> {
    let rate = rate_hz as u64;
    let n = (duration_us * rate).div_ceil(1_000_000);
    (0..n).map(move |k| (k * 1_000_000 + rate / 2) / rate)
}

/// Simulates a full recording session.
pub fn generate_session(
    profile: &PhysioProfile,
    duration_s: f64,
    cfg: &ValidatedConfig,
    seed: u64,
) -> Result<(Session, GroundTruth), SimError> {
    profile.validate()?;
    check_duration(duration_s)?;
    let duration_us = (duration_s * 1e6).round() as u64;
    let dur = duration_us as f64 / 1e6;

    let r_peaks = beat_times_us(profile, dur, seed);
    let phase = RespPhase::from_profile(profile, seed);
    let systole_us = (profile.s1_s2_interval_s * 1e6).round() as u64;
    let truth = GroundTruth {
        s1_times_us: r_peaks.clone(),
        s2_times_us: r_peaks.iter().map(|t| t + systole_us).filter(|&t| t < duration_us).collect(),
        breath_times_us: phase.breath_times_us(dur),
        mean_hr_bpm: mean_hr(&r_peaks, profile.heart_rate_bpm),
        mean_rr_brpm: profile.resp_rate_brpm,
        r_peak_times_us: r_peaks,
    };

    let mut records = Vec::new();
    if cfg.ecg.enabled {
        let rate = cfg.ecg.rate_hz;
        let stamps: Vec<u64> = sample_stamps(duration_us, rate).collect();
        let span = stamps.len() as f64 / rate as f64;
        let ecg = render_ecg(profile, &truth.r_peak_times_us, rate as f64, span, seed);
        let resp = render_resp(profile, &phase, rate as f64, span, seed);
        for (i, &t) in stamps.iter().enumerate() {
            records.push(SensorRecord::ecg(t, mv_to_ecg_counts(ecg.samples[i]), mv_to_ecg_counts(resp.samples[i])));
        }
    }
    if cfg.ppg.enabled {
        let rate = cfg.ppg.rate_hz;
        let stamps: Vec<u64> = sample_stamps(duration_us, rate).collect();
        let span = stamps.len() as f64 / rate as f64;
        let leds: Vec<Vec<f64>> = [LED_GREEN, LED_RED, LED_IR]
            .iter()
            .enumerate()
            .filter(|(_, &bit)| cfg.ppg_led_mask & bit != 0)
            .map(|(i, _)| render_ppg(&truth.r_peak_times_us, &phase, profile, rate as f64, span, seed, i).samples)
            .collect();
        let to_counts = |v: f64| (PPG_DC_COUNTS + PPG_COUNTS_PER_UNIT * v).round().clamp(0.0, u32::MAX as f64) as u32;
        for (i, &t) in stamps.iter().enumerate() {
            let counts = leds.iter().map(|l| to_counts(l[i])).collect();
            records.push(SensorRecord::ppg(t, cfg.ppg_led_mask, counts));
        }
    }
    if cfg.imu.enabled {
        let rate = cfg.imu.rate_hz;
        let stamps: Vec<u64> = sample_stamps(duration_us, rate).collect();
        let span = stamps.len() as f64 / rate as f64;
        let imu = render_imu(profile, &phase, rate as f64, span, seed);
        for (i, &t) in stamps.iter().enumerate() {
            let s = ImuSample {
                ax: g_to_raw(imu.ax.samples[i]),
                ay: g_to_raw(imu.ay.samples[i]),
                az: g_to_raw(imu.az.samples[i]),
                gx: dps_to_raw(imu.gx.samples[i]),
                gy: dps_to_raw(imu.gy.samples[i]),
                gz: dps_to_raw(imu.gz.samples[i]),
            };
            records.push(SensorRecord::imu(t, s));
        }
    }
    records.sort_by_key(SensorRecord::sort_key);

    let audio = if cfg.audio.enabled {
        let rate = cfg.audio.sample_rate_hz as f64;
        let mut pcg = synth_pcg(&truth.r_peak_times_us, profile, rate, dur, seed)?;
        let ambient = synth_ambient(&profile.ambient, rate, dur, seed)?;
        mix_into_stethoscope(
            &mut pcg.stethoscope.samples,
            &ambient.samples,
            profile.ambient.leak_gain,
            profile.ambient.leak_delay_samples,
        )?;
        Some(StereoPcm::from_channels(cfg.audio.sample_rate_hz, &pcg.stethoscope.samples, &ambient.samples))
    } else {
        None
    };

    let session = Session { header: SessionHeader::new(SESSION_EPOCH_US, *cfg), records, audio };
    Ok((session, truth))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{validate_config, SensorConfig};
    use crate::types::SensorId;

    fn count(s: &Session, id: SensorId) -> usize {
        s.records.iter().filter(|r| r.sensor_id == id).count()
    }

    #[test]
    fn stamps_are_drift_free() {
        let s: Vec<u64> = sample_stamps(3_600_000_000, 125).collect();
        assert_eq!(s.len(), 450_000);
        assert!(s.windows(2).all(|w| w[1] - w[0] == 8000));
        let s: Vec<u64> = sample_stamps(1_000_000, 3).collect();
        assert_eq!(s, vec![0, 333_333, 666_667]);
    }

    #[test]
    fn default_minute_has_device_rates() {
        let (s, truth) = generate_session(&PhysioProfile::default(), 60.0, &ValidatedConfig::default(), 1).unwrap();
        assert_eq!(count(&s, SensorId::EcgResp), 7500);
        assert_eq!(count(&s, SensorId::Ppg), 6000);
        assert_eq!(count(&s, SensorId::Imu), 3000);
        assert_eq!(s.audio.as_ref().unwrap().frames(), 480_000);
        assert!(s.records.windows(2).all(|w| w[0].sort_key() <= w[1].sort_key()));
        assert!((truth.mean_hr_bpm - 72.0).abs() < 2.0);
    }

    #[test]
    fn disabled_sensor_is_absent_and_others_unchanged() {
        let p = PhysioProfile::default();
        let all = generate_session(&p, 5.0, &ValidatedConfig::default(), 3).unwrap().0;
        let mut cfg = SensorConfig::default();
        cfg.imu.enabled = false;
        let no_imu = generate_session(&p, 5.0, &validate_config(cfg).unwrap(), 3).unwrap().0;
        assert_eq!(count(&no_imu, SensorId::Imu), 0);
        let strip =
            |s: &Session| s.records.iter().filter(|r| r.sensor_id != SensorId::Imu).cloned().collect::<Vec<_>>();
        assert_eq!(strip(&all), strip(&no_imu));
        assert_eq!(all.audio, no_imu.audio);
    }

    #[test]
    fn ground_truth_round_trips_through_events() {
        let (_, truth) = generate_session(&PhysioProfile::default(), 10.0, &ValidatedConfig::default(), 2).unwrap();
        let back = GroundTruth::from_events(&truth.to_events());
        assert_eq!(back.r_peak_times_us, truth.r_peak_times_us);
        assert_eq!(back.s2_times_us, truth.s2_times_us);
        assert_eq!(back.breath_times_us, truth.breath_times_us);
        assert!((back.mean_hr_bpm - truth.mean_hr_bpm).abs() < 1e-5);
    }

    #[test]
    fn bad_duration_is_rejected() {
        let cfg = ValidatedConfig::default();
        assert!(generate_session(&PhysioProfile::default(), 0.0, &cfg, 1).is_err());
        assert!(generate_session(&PhysioProfile::default(), 86_401.0, &cfg, 1).is_err());
    }
}
