use std::fmt;

use super::rpeaks::parabolic_offset;
use super::{require, AnalysisError};
use crate::dsp::Cascade;
use crate::series::TimeSeries;

pub const MIN_RATE_HZ: f64 = 4000.0;
pub const ENVELOPE_HOP_S: f64 = 0.005;
const ENVELOPE_WINDOW_S: f64 = 0.020;
const BAND_HZ: (f64, f64) = (20.0, 150.0);
/// Envelope peaks closer than this are one sound.
const MIN_SEPARATION_S: f64 = 0.100;
/// Largest distance from an R peak at which a sound is still its S1.
const S1_SEARCH_S: f64 = 0.100;
const MIN_GAP_RATIO: f64 = 1.2;
/// Anything quieter than this is silence.
const SILENCE_RMS: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum HeartSoundKind {
    S1,
    S2,
}

impl fmt::Display for HeartSoundKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            HeartSoundKind::S1 => "S1",
            HeartSoundKind::S2 => "S2",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeartSoundEvent {
    pub kind: HeartSoundKind,
    pub time_us: u64,
    /// Envelope value at the peak.
    pub amplitude: f64,
}

struct Envelope {
    values: Vec<f64>,
    /// Session time of value `j`.
    t0_us: f64,
    hop_us: f64,
}

impl Envelope {
    fn time_us(&self, j: f64) -> f64 {
        self.t0_us + j * self.hop_us
    }
}

/// Band-limited RMS envelope, one value per hop, each centred on its hop.
fn envelope(pcg: &TimeSeries) -> Envelope {
    let fs = pcg.rate_hz;
    let band = Cascade::butter_bandpass(fs, BAND_HZ.0, BAND_HZ.1, 4).filtfilt(&pcg.samples);
    let hop = (ENVELOPE_HOP_S * fs).round() as usize;
    let half = (ENVELOPE_WINDOW_S * fs / 2.0).round() as usize;
    let mut prefix = Vec::with_capacity(band.len() + 1);
    prefix.push(0.0);
    for v in &band {
        prefix.push(prefix.last().unwrap() + v * v);
    }
    let n = band.len();
    let values = (0..n)
        .step_by(hop)
        .map(|c| {
            let lo = c.saturating_sub(half);
            let hi = (c + half).min(n);
            ((prefix[hi] - prefix[lo]) / (hi - lo).max(1) as f64).sqrt()
        })
        .collect();
    Envelope { values, t0_us: pcg.start_us as f64, hop_us: hop as f64 * 1e6 / fs }
}

struct Peak {
    time_us: f64,
    amplitude: f64,
}

fn quantile(x: &[f64], q: f64) -> f64 {
    let mut s = x.to_vec();
    s.sort_by(f64::total_cmp);
    s[((s.len() - 1) as f64 * q).round() as usize]
}

/// Local maxima well above the envelope floor, thinned so no two are
/// closer than the minimum separation (the louder one wins).
fn envelope_peaks(env: &Envelope) -> Vec<Peak> {
    let e = &env.values;
    if e.len() < 3 {
        return Vec::new();
    }
    let floor = quantile(e, 0.5);
    let top = quantile(e, 0.995);
    if top < SILENCE_RMS {
        return Vec::new();
    }
    let thr = floor + 0.15 * (top - floor);
    let mut idx: Vec<usize> = (1..e.len() - 1).filter(|&j| e[j] > thr && e[j] > e[j - 1] && e[j] >= e[j + 1]).collect();

    let sep = MIN_SEPARATION_S * 1e6 / env.hop_us;
    idx.sort_by(|&a, &b| e[b].total_cmp(&e[a]));
    let mut kept: Vec<usize> = Vec::new();
    for j in idx {
        if kept.iter().all(|&k| (k as f64 - j as f64).abs() >= sep) {
            kept.push(j);
        }
    }
    kept.sort_unstable();
    kept.into_iter()
        .map(|j| Peak { time_us: env.time_us(j as f64 + parabolic_offset(e, j)), amplitude: e[j] })
        .collect()
}

/// Finds S1 and S2 in a stethoscope recording.
///
/// With R times, the sound nearest each R peak is S1 and the next sound
/// before the following S1 is S2. Without them, the gaps between sounds are
/// split into a short (systolic) and a long (diastolic) cluster and a sound
/// followed by a short gap starts a pair. Either way the result starts at an
/// S1 and alternates.
pub fn detect_heart_sounds(
    pcg: &TimeSeries,
    r_times_us: Option<&[u64]>,
) -> Result<Vec<HeartSoundEvent>, AnalysisError> {
    require(pcg, MIN_RATE_HZ, 0.0)?;
    let peaks = envelope_peaks(&envelope(pcg));
    if peaks.is_empty() {
        return Err(AnalysisError::NoEventsFound);
    }
    let labeled = match r_times_us {
        Some(r) => label_with_r(&peaks, r),
        None => label_by_gaps(&peaks)?,
    };
    let events = alternate(labeled, &peaks);
    if events.is_empty() {
        return Err(AnalysisError::NoEventsFound);
    }
    Ok(events)
}

fn label_with_r(peaks: &[Peak], r_times_us: &[u64]) -> Vec<(usize, HeartSoundKind)> {
    let window = S1_SEARCH_S * 1e6;
    let mut s1: Vec<usize> = r_times_us
        .iter()
        .filter_map(|&r| {
            let r = r as f64;
            (0..peaks.len())
                .filter(|&i| (peaks[i].time_us - r).abs() <= window)
                .min_by(|&a, &b| (peaks[a].time_us - r).abs().total_cmp(&(peaks[b].time_us - r).abs()))
        })
        .collect();
    s1.dedup();
    let mut out = Vec::new();
    for (n, &i) in s1.iter().enumerate() {
        out.push((i, HeartSoundKind::S1));
        let next_s1 = s1.get(n + 1).copied().unwrap_or(peaks.len());
        // the loudest sound of the rest of the cycle
        if let Some(j) = (i + 1..next_s1).max_by(|&a, &b| peaks[a].amplitude.total_cmp(&peaks[b].amplitude)) {
            out.push((j, HeartSoundKind::S2));
        }
    }
    out
}

/// Best two-cluster split of sorted values: index of the first value of the
/// upper cluster.
fn two_means_split(sorted: &[f64]) -> usize {
    let sse = |s: &[f64]| {
        let m = s.iter().sum::<f64>() / s.len() as f64;
        s.iter().map(|v| (v - m) * (v - m)).sum::<f64>()
    };
    (1..sorted.len())
        .min_by(|&a, &b| (sse(&sorted[..a]) + sse(&sorted[a..])).total_cmp(&(sse(&sorted[..b]) + sse(&sorted[b..]))))
        .unwrap_or(1)
}

fn label_by_gaps(peaks: &[Peak]) -> Result<Vec<(usize, HeartSoundKind)>, AnalysisError> {
    if peaks.len() < 3 {
        return Err(AnalysisError::AmbiguousPairing { ratio: 1.0 });
    }
    let gaps: Vec<f64> = peaks.windows(2).map(|w| w[1].time_us - w[0].time_us).collect();
    let mut sorted = gaps.clone();
    sorted.sort_by(f64::total_cmp);
    let split = two_means_split(&sorted);
    let mean = |s: &[f64]| s.iter().sum::<f64>() / s.len() as f64;
    let (short, long) = (mean(&sorted[..split]), mean(&sorted[split..]));
    let ratio = long / short;
    if ratio < MIN_GAP_RATIO {
        return Err(AnalysisError::AmbiguousPairing { ratio });
    }
    let boundary = 0.5 * (short + long);

    let mut out = Vec::new();
    let mut i = 0;
    while i < peaks.len() {
        match gaps.get(i) {
            Some(&g) if g < boundary => {
                out.push((i, HeartSoundKind::S1));
                out.push((i + 1, HeartSoundKind::S2));
                i += 2;
            }
            // a trailing sound after a diastolic gap is an S1 whose S2 fell
            // off the end
            None if i > 0 && gaps[i - 1] >= boundary => {
                out.push((i, HeartSoundKind::S1));
                i += 1;
            }
            _ => i += 1,
        }
    }
    Ok(out)
}

/// Drops labels that would break strict S1/S2 alternation. An S1 with no S2
/// before the next S1 is dropped unless it is the last event.
fn alternate(labeled: Vec<(usize, HeartSoundKind)>, peaks: &[Peak]) -> Vec<HeartSoundEvent> {
    let mut out: Vec<HeartSoundEvent> = Vec::new();
    for (i, kind) in labeled {
        let ev =
            HeartSoundEvent { kind, time_us: peaks[i].time_us.max(0.0).round() as u64, amplitude: peaks[i].amplitude };
        match (out.last().map(|e| e.kind), kind) {
            (None, HeartSoundKind::S2) => continue,
            (Some(HeartSoundKind::S1), HeartSoundKind::S1) => {
                out.pop();
            }
            (Some(HeartSoundKind::S2), HeartSoundKind::S2) => continue,
            _ => {}
        }
        out.push(ev);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profile::{NoiseLevels, PhysioProfile};
    use crate::sim::{beat_times_us, synth_pcg};

    fn clean60() -> PhysioProfile {
        PhysioProfile {
            hr_variability_frac: 0.0,
            noise: NoiseLevels::none(),
            ..PhysioProfile::default().with_heart_rate(60.0)
        }
    }

    fn kinds(ev: &[HeartSoundEvent], k: HeartSoundKind) -> Vec<u64> {
        ev.iter().filter(|e| e.kind == k).map(|e| e.time_us).collect()
    }

    #[test]
    fn clean_pcg_with_r_reference() {
        let p = PhysioProfile { noise: NoiseLevels { pcg: 0.002, ..NoiseLevels::none() }, ..clean60() };
        let r = beat_times_us(&p, 60.0, 5);
        let out = synth_pcg(&r, &p, 8000.0, 60.0, 5).unwrap();
        let ev = detect_heart_sounds(&out.stethoscope, Some(&r)).unwrap();
        let s1 = kinds(&ev, HeartSoundKind::S1);
        let s2 = kinds(&ev, HeartSoundKind::S2);
        assert!(s1.len().abs_diff(60) <= 1, "{}", s1.len());
        assert!(s2.len().abs_diff(60) <= 1, "{}", s2.len());
        for (&d, &t) in s1.iter().zip(&out.s1_times_us) {
            assert!(d.abs_diff(t) <= 20_000, "{d} vs {t}");
        }
        let gaps: Vec<f64> = ev
            .windows(2)
            .filter(|w| w[0].kind == HeartSoundKind::S1)
            .map(|w| (w[1].time_us - w[0].time_us) as f64)
            .collect();
        let mean_gap = gaps.iter().sum::<f64>() / gaps.len() as f64;
        assert!((mean_gap - 300_000.0).abs() <= 10_000.0, "{mean_gap}");
        assert!(gaps.iter().all(|g| (g - 300_000.0).abs() <= 2.0 * ENVELOPE_HOP_S * 1e6 + 2_000.0));

        let blind = detect_heart_sounds(&out.stethoscope, None).unwrap();
        assert_eq!(blind, ev);
    }

    #[test]
    fn output_alternates() {
        let p = PhysioProfile { hr_variability_frac: 0.08, ..PhysioProfile::default().with_heart_rate(80.0) };
        let r = beat_times_us(&p, 30.0, 8);
        let out = synth_pcg(&r, &p, 4000.0, 30.0, 8).unwrap();
        for ev in [
            detect_heart_sounds(&out.stethoscope, Some(&r)).unwrap(),
            detect_heart_sounds(&out.stethoscope, None).unwrap(),
        ] {
            assert_eq!(ev[0].kind, HeartSoundKind::S1);
            assert!(ev.windows(2).all(|w| w[0].kind != w[1].kind && w[0].time_us < w[1].time_us));
        }
    }

    #[test]
    fn silence_has_no_events() {
        let x = TimeSeries::zeros(8000.0, crate::series::Unit::Normalized, 8000 * 5);
        assert_eq!(detect_heart_sounds(&x, None), Err(AnalysisError::NoEventsFound));
        assert_eq!(detect_heart_sounds(&x, Some(&[1_000_000])), Err(AnalysisError::NoEventsFound));
    }

    #[test]
    fn evenly_spaced_sounds_are_ambiguous() {
        // S2 placed half a beat after S1 leaves nothing to tell them apart
        let p = PhysioProfile { s1_s2_interval_s: 0.5, ..clean60() };
        let r = beat_times_us(&p, 20.0, 2);
        let out = synth_pcg(&r, &p, 8000.0, 20.0, 2).unwrap();
        assert!(matches!(detect_heart_sounds(&out.stethoscope, None), Err(AnalysisError::AmbiguousPairing { .. })));
    }

    #[test]
    fn rate_floor() {
        let x = TimeSeries::zeros(2000.0, crate::series::Unit::Normalized, 2000);
        assert!(matches!(detect_heart_sounds(&x, None), Err(AnalysisError::RateTooLow { .. })));
    }
}
