use std::f64::consts::PI;

use super::rng::{gaussian, stream_rng, Stream};
use super::{check_duration, sample_count, SimError};
use crate::dsp::Cascade;
use crate::profile::PhysioProfile;
use crate::series::{TimeSeries, Unit};

pub const PCG_MIN_RATE_HZ: f64 = 4000.0;

pub const S1_FREQ_HZ: f64 = 60.0;
pub const S1_DURATION_S: f64 = 0.070;
pub const S1_AMPLITUDE: f64 = 0.5;
pub const S2_FREQ_HZ: f64 = 90.0;
pub const S2_DURATION_S: f64 = 0.050;
pub const S2_AMPLITUDE: f64 = 0.35;

const ATTACK_S: f64 = 0.005;
const HEAD_LO_HZ: f64 = 20.0;
const HEAD_HI_HZ: f64 = 2000.0;

#[derive(Debug, Clone, PartialEq)]
pub struct PcgOutput {
    /// Body signal as picked up through the stethoscope head, no ambient leak.
    pub stethoscope: TimeSeries,
    pub s1_times_us: Vec<u64>,
    pub s2_times_us: Vec<u64>,
}

/// Decaying tone burst starting at `u = 0`: 5 ms raised-sine attack, then
/// exponential decay with time constant `duration/4`, faded to zero over the
/// last fifth of the burst.
fn burst(u: f64, freq: f64, duration: f64) -> f64 {
    if u < 0.0 || u >= duration {
        return 0.0;
    }
    let attack = if u < ATTACK_S { (0.5 * PI * u / ATTACK_S).sin().powi(2) } else { 1.0 };
    let decay = (-(u - ATTACK_S).max(0.0) / (duration / 4.0)).exp();
    let fade_start = 0.8 * duration;
    let fade = if u > fade_start { 0.5 * (1.0 + (PI * (u - fade_start) / (duration - fade_start)).cos()) } else { 1.0 };
    attack * decay * fade * (2.0 * PI * freq * u).sin()
}

fn add_burst(x: &mut [f64], rate_hz: f64, onset_s: f64, freq: f64, duration: f64, amplitude: f64) {
    let lo = (onset_s * rate_hz).ceil().max(0.0) as usize;
    let hi = (((onset_s + duration) * rate_hz).ceil().max(0.0) as usize).min(x.len());
    for (k, v) in x.iter_mut().enumerate().take(hi).skip(lo) {
        *v += amplitude * burst(k as f64 / rate_hz - onset_s, freq, duration);
    }
}

/// Heart sounds on the stethoscope channel: S1 at each R peak, S2 one
/// systolic interval later, plus body noise, band-limited to the head's
/// 20 Hz to 2 kHz passband.
pub fn synth_pcg(
    r_peaks_us: &[u64],
    profile: &PhysioProfile,
    audio_rate_hz: f64,
    duration_s: f64,
    seed: u64,
) -> Result<PcgOutput, SimError> {
    check_duration(duration_s)?;
    if audio_rate_hz < PCG_MIN_RATE_HZ {
        return Err(SimError::RateTooLowForMorphology { rate_hz: audio_rate_hz, min_hz: PCG_MIN_RATE_HZ });
    }
    let systole_us = (profile.s1_s2_interval_s * 1e6).round() as u64;
    for w in r_peaks_us.windows(2) {
        if w[0] + systole_us >= w[1] {
            return Err(SimError::IntervalExceedsBeat { s2_us: w[0] + systole_us, next_s1_us: w[1] });
        }
    }
    let duration_us = duration_s * 1e6;
    let s1: Vec<u64> = r_peaks_us.iter().copied().filter(|&t| (t as f64) < duration_us).collect();
    let s2: Vec<u64> = s1.iter().map(|t| t + systole_us).filter(|&t| (t as f64) < duration_us).collect();

    let n = sample_count(duration_s, audio_rate_hz);
    let mut x = vec![0.0; n];
    for &t in &s1 {
        add_burst(&mut x, audio_rate_hz, t as f64 / 1e6, S1_FREQ_HZ, S1_DURATION_S, S1_AMPLITUDE);
    }
    for &t in &s2 {
        add_burst(&mut x, audio_rate_hz, t as f64 / 1e6, S2_FREQ_HZ, S2_DURATION_S, S2_AMPLITUDE);
    }
    if profile.noise.pcg > 0.0 {
        let mut rng = stream_rng(seed, Stream::PcgNoise);
        for v in x.iter_mut() {
            *v += gaussian(&mut rng, profile.noise.pcg);
        }
    }
    let head = Cascade::butter_bandpass(audio_rate_hz, HEAD_LO_HZ, HEAD_HI_HZ, 4);
    let x = head.filtfilt(&x);
    Ok(PcgOutput {
        stethoscope: TimeSeries::new(0, audio_rate_hz, Unit::Normalized, x),
        s1_times_us: s1,
        s2_times_us: s2,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsp::{energy_fraction_above, rms};
    use crate::profile::NoiseLevels;
    use crate::sim::beat_times_us;

    fn profile60() -> PhysioProfile {
        PhysioProfile { hr_variability_frac: 0.0, ..PhysioProfile::default().with_heart_rate(60.0) }
    }

    #[test]
    fn s2_follows_s1_by_the_systolic_interval() {
        let p = profile60();
        let r = beat_times_us(&p, 10.0, 1);
        let out = synth_pcg(&r, &p, 8000.0, 10.0, 1).unwrap();
        assert_eq!(out.s1_times_us, r);
        assert_eq!(out.s1_times_us.len(), out.s2_times_us.len());
        for (a, b) in out.s1_times_us.iter().zip(&out.s2_times_us) {
            assert_eq!(b - a, 300_000);
        }
        assert_eq!(out.stethoscope.len(), 80_000);
    }

    #[test]
    fn energy_stays_inside_head_passband() {
        let p = profile60();
        let r = beat_times_us(&p, 10.0, 1);
        for rate in [8000.0, 16000.0] {
            let out = synth_pcg(&r, &p, rate, 10.0, 1).unwrap();
            let frac = energy_fraction_above(&out.stethoscope.samples, rate, 2000.0);
            assert!(frac <= 0.01, "{rate}: {frac}");
        }
    }

    #[test]
    fn no_beats_gives_body_noise_only() {
        let p = profile60();
        let out = synth_pcg(&[], &p, 8000.0, 2.0, 1).unwrap();
        assert!(out.s1_times_us.is_empty() && out.s2_times_us.is_empty());
        let level = rms(&out.stethoscope.samples);
        assert!(level > 0.0 && level < 2.0 * p.noise.pcg, "{level}");
        let silent = PhysioProfile { noise: NoiseLevels::none(), ..p };
        let out = synth_pcg(&[], &silent, 8000.0, 2.0, 1).unwrap();
        assert!(out.stethoscope.samples.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn overlapping_s2_is_rejected() {
        let mut p = profile60();
        p.s1_s2_interval_s = 0.45;
        let err = synth_pcg(&[0, 400_000], &p, 8000.0, 1.0, 1).unwrap_err();
        assert!(matches!(err, SimError::IntervalExceedsBeat { .. }));
    }

    #[test]
    fn audio_rate_floor() {
        assert!(synth_pcg(&[], &profile60(), 2000.0, 1.0, 1).is_err());
    }
}
