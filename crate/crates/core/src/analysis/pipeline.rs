use std::str::FromStr;

use super::channels::{extract_channel, Channel};
use super::heart_sounds::{detect_heart_sounds, HeartSoundKind};
use super::nlms::cancel_noise;
use super::report::{Flag, Metric, Report};
use super::rpeaks::{detect_r_peaks, heart_rate};
use super::spectral::{ppg_heart_rate, respiration_rate, SpectralEstimate};
use super::AnalysisError;
use crate::codec::{Event, EventFile, EventKind, Session};
use crate::series::TimeSeries;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MetricSet {
    /// Heart rate from ECG and from PPG.
    Hr,
    /// Respiration rate.
    Rr,
    /// Heart sound counts and systolic interval.
    S1S2,
}

impl FromStr for MetricSet {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "hr" => Ok(MetricSet::Hr),
            "rr" => Ok(MetricSet::Rr),
            "s1s2" => Ok(MetricSet::S1S2),
            _ => Err(format!("unknown metric set '{s}' (hr|rr|s1s2)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnalyzeOptions {
    pub metrics: Vec<MetricSet>,
    /// Single channel for the respiration metric. `None` reports RESP and
    /// gyro-y.
    pub rr_input: Option<Channel>,
    /// Run noise cancellation on the stethoscope channel first.
    pub denoise: bool,
}

impl Default for AnalyzeOptions {
    fn default() -> Self {
        AnalyzeOptions { metrics: vec![MetricSet::Hr, MetricSet::Rr, MetricSet::S1S2], rr_input: None, denoise: false }
    }
}

fn channel(session: &Session, ch: Channel) -> Result<TimeSeries, AnalysisError> {
    extract_channel(&session.records, &session.header.config, ch).ok_or(AnalysisError::ChannelAbsent(ch.name()))
}

fn spectral_metric(name: &str, unit: &str, est: Result<SpectralEstimate, AnalysisError>) -> Metric {
    match est {
        Ok(e) => Metric {
            flag: if e.at_band_edge { Flag::BandEdge } else { Flag::Ok },
            ..Metric::ok(name, e.per_minute, unit)
        },
        Err(e) => Metric::failed(name, unit, e),
    }
}

/// Runs the selected analyses over a session. Each metric succeeds or fails
/// on its own; failures become `FAIL` lines in the report.
///
/// The events file carries the detected R peaks and heart sounds, plus
/// `mean_hr_bpm` / `mean_rr_brpm` metadata, in the ground-truth layout.
pub fn analyze_session(session: &Session, opts: &AnalyzeOptions) -> (Report, EventFile) {
    let mut report = Report::default();
    let mut events = EventFile::default();
    let wants = |m| opts.metrics.contains(&m);

    let r_peaks = channel(session, Channel::Ecg).and_then(|ecg| detect_r_peaks(&ecg));

    if wants(MetricSet::Hr) {
        let hr = r_peaks.clone().and_then(|r| heart_rate(&r));
        match hr {
            Ok(hr) => {
                report.push(Metric::ok("hr_ecg", hr.mean_bpm, "bpm"));
                events.meta.push(("mean_hr_bpm".into(), hr.mean_bpm));
            }
            Err(e) => report.push(Metric::failed("hr_ecg", "bpm", e)),
        }
        if let Ok(r) = &r_peaks {
            events.events.extend(r.iter().map(|&t| Event::new(EventKind::RPeak, t)));
        }
        let ppg = [Channel::PpgGreen, Channel::PpgRed, Channel::PpgIr]
            .into_iter()
            .map(|ch| channel(session, ch))
            .find(Result::is_ok)
            .unwrap_or(Err(AnalysisError::ChannelAbsent("ppg")));
        report.push(spectral_metric("hr_ppg", "bpm", ppg.and_then(|x| ppg_heart_rate(&x))));
    }

    if wants(MetricSet::Rr) {
        let inputs = match opts.rr_input {
            Some(ch) => vec![ch],
            None => vec![Channel::Resp, Channel::GyroY],
        };
        for ch in inputs {
            let name = match (opts.rr_input, ch) {
                (None, Channel::GyroY) => "rr_gyro".to_string(),
                _ => format!("rr_{}", ch.name().replace('-', "_")),
            };
            let m = spectral_metric(&name, "brpm", channel(session, ch).and_then(|x| respiration_rate(&x)));
            if let (Some(v), true) = (m.value, events.meta("mean_rr_brpm").is_none()) {
                events.meta.push(("mean_rr_brpm".into(), v));
            }
            report.push(m);
        }
    }

    if wants(MetricSet::S1S2) {
        let sounds = session.audio.as_ref().ok_or(AnalysisError::ChannelAbsent("audio")).and_then(|pcm| {
            let audio = pcm.to_audio();
            let pcg = if opts.denoise { cancel_noise(&audio.stethoscope, &audio.ambient)? } else { audio.stethoscope };
            detect_heart_sounds(&pcg, r_peaks.as_deref().ok())
        });
        match sounds {
            Ok(ev) => {
                let count = |k| ev.iter().filter(|e| e.kind == k).count() as f64;
                report.push(Metric::ok("s1_count", count(HeartSoundKind::S1), "count"));
                report.push(Metric::ok("s2_count", count(HeartSoundKind::S2), "count"));
                let gaps: Vec<f64> = ev
                    .windows(2)
                    .filter(|w| w[0].kind == HeartSoundKind::S1)
                    .map(|w| (w[1].time_us - w[0].time_us) as f64 / 1e3)
                    .collect();
                if gaps.is_empty() {
                    report.push(Metric::failed("systolic_interval", "ms", "no S1-S2 pair"));
                } else {
                    report.push(Metric::ok("systolic_interval", gaps.iter().sum::<f64>() / gaps.len() as f64, "ms"));
                }
                events.events.extend(ev.iter().map(|e| {
                    let kind = match e.kind {
                        HeartSoundKind::S1 => EventKind::S1,
                        HeartSoundKind::S2 => EventKind::S2,
                    };
                    Event { kind, time_us: e.time_us, value: Some(e.amplitude) }
                }));
            }
            Err(e) => {
                let why = match e {
                    AnalysisError::ChannelAbsent(_) => "channel absent".to_string(),
                    e => e.to_string(),
                };
                for (name, unit) in [("s1_count", "count"), ("s2_count", "count"), ("systolic_interval", "ms")] {
                    report.push(Metric::failed(name, unit, &why));
                }
            }
        }
    }

    events.events.sort_by_key(|e| (e.time_us, e.kind));
    (report, events)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{validate_config, SensorConfig};
    use crate::profile::PhysioProfile;
    use crate::sim::generate_session;

    #[test]
    fn default_session_report() {
        let p = PhysioProfile::default();
        let (s, truth) = generate_session(&p, 40.0, &Default::default(), 12).unwrap();
        let (report, events) = analyze_session(&s, &AnalyzeOptions::default());
        assert!((report.value("hr_ecg").unwrap() - truth.mean_hr_bpm).abs() <= 1.0, "{report}");
        assert!((report.value("hr_ppg").unwrap() - 72.0).abs() <= 2.0, "{report}");
        assert!((report.value("rr_resp").unwrap() - 15.0).abs() <= 1.0, "{report}");
        assert!((report.value("rr_gyro").unwrap() - 15.0).abs() <= 1.0, "{report}");
        assert!(report.value("s1_count").unwrap() >= truth.s1_times_us.len() as f64 - 1.0, "{report}");
        assert!((report.value("systolic_interval").unwrap() - 300.0).abs() <= 10.0, "{report}");
        assert_eq!(
            events.count(EventKind::RPeak),
            report.get("hr_ecg").map(|_| events.times(EventKind::RPeak).len()).unwrap()
        );
    }

    #[test]
    fn missing_audio_fails_only_heart_sounds() {
        let mut cfg = SensorConfig::default();
        cfg.audio.enabled = false;
        let (s, _) = generate_session(&PhysioProfile::default(), 30.0, &validate_config(cfg).unwrap(), 1).unwrap();
        let (report, _) = analyze_session(&s, &AnalyzeOptions::default());
        assert_eq!(report.get("s1_count").unwrap().flag, Flag::Fail("channel absent".into()));
        assert!(!report.get("hr_ecg").unwrap().is_failed());
        assert!(!report.all_failed());
    }

    #[test]
    fn single_rr_input() {
        let p = PhysioProfile::default().with_resp_rate(10.0);
        let (s, _) = generate_session(&p, 60.0, &Default::default(), 2).unwrap();
        let opts = AnalyzeOptions { metrics: vec![MetricSet::Rr], rr_input: Some(Channel::GyroZ), denoise: false };
        let (report, _) = analyze_session(&s, &opts);
        assert_eq!(report.metrics.len(), 1);
        assert!((report.value("rr_gyro_z").unwrap() - 10.0).abs() <= 1.0, "{report}");
    }
}
