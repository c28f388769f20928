use super::beats::beat_times_us;
use super::rng::{gaussian, stream_rng, Stream};
use super::{check_duration, sample_count, SimError};
use crate::profile::PhysioProfile;
use crate::series::{TimeSeries, Unit};

pub const ECG_MIN_RATE_HZ: f64 = 100.0;

/// One Gaussian wave of the PQRST complex: offset from R (s, at a 1 s beat),
/// amplitude relative to R, width (s).
struct Wave {
    offset_s: f64,
    amplitude: f64,
    width_s: f64,
}

const PQRST: [Wave; 5] = [
    Wave { offset_s: -0.20, amplitude: 0.12, width_s: 0.025 },
    Wave { offset_s: -0.035, amplitude: -0.15, width_s: 0.010 },
    Wave { offset_s: 0.0, amplitude: 1.0, width_s: 0.010 },
    Wave { offset_s: 0.035, amplitude: -0.25, width_s: 0.010 },
    Wave { offset_s: 0.28, amplitude: 0.30, width_s: 0.040 },
];

/// Template value at `dt` seconds from the R peak. P and T positions scale
/// with the square root of the beat period; the QRS does not.
fn template(dt: f64, stretch: f64) -> f64 {
    PQRST
        .iter()
        .map(|w| {
            let off = if w.offset_s.abs() > 0.1 { w.offset_s * stretch } else { w.offset_s };
            let z = (dt - off) / w.width_s;
            w.amplitude * (-0.5 * z * z).exp()
        })
        .sum()
}

/// Noise-free-or-not ECG in millivolts for given R times, with no rate
/// check. The session generator uses this for arbitrary configured rates.
pub fn render_ecg(profile: &PhysioProfile, r_peaks_us: &[u64], rate_hz: f64, duration_s: f64, seed: u64) -> TimeSeries {
    let n = sample_count(duration_s, rate_hz);
    let mut x = vec![0.0; n];
    let stretch = profile.beat_period_s().sqrt().clamp(0.5, 1.5);
    let (before, after) = (0.3 * stretch + 0.15, 0.28 * stretch + 0.2);
    for &r in r_peaks_us {
        let rt = r as f64 / 1e6;
        let lo = ((rt - before) * rate_hz).ceil().max(0.0) as usize;
        let hi = (((rt + after) * rate_hz).floor().max(-1.0) + 1.0) as usize;
        for (k, v) in x.iter_mut().enumerate().take(hi.min(n)).skip(lo) {
            *v += profile.ecg_amplitude_mv * template(k as f64 / rate_hz - rt, stretch);
        }
    }
    if profile.noise.ecg_mv > 0.0 {
        let mut rng = stream_rng(seed, Stream::EcgNoise);
        for v in x.iter_mut() {
            *v += gaussian(&mut rng, profile.noise.ecg_mv);
        }
    }
    TimeSeries::new(0, rate_hz, Unit::Millivolts, x)
}

/// Sum-of-Gaussians ECG and the R-peak times it was built from.
pub fn synth_ecg(
    profile: &PhysioProfile,
    rate_hz: f64,
    duration_s: f64,
    seed: u64,
) -> Result<(TimeSeries, Vec<u64>), SimError> {
    profile.validate()?;
    check_duration(duration_s)?;
    if rate_hz < ECG_MIN_RATE_HZ {
        return Err(SimError::RateTooLowForMorphology { rate_hz, min_hz: ECG_MIN_RATE_HZ });
    }
    let r = beat_times_us(profile, duration_s, seed);
    Ok((render_ecg(profile, &r, rate_hz, duration_s, seed), r))
}
