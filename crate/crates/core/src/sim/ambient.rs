use std::f64::consts::PI;

use rand::Rng;

use super::rng::{gaussian, stream_rng, Stream};
use super::{check_duration, sample_count, SimError};
use crate::dsp::db_to_amplitude;
use crate::profile::{AmbientMode, AmbientProfile};
use crate::series::{TimeSeries, Unit};

/// RMS level of the ambient channel in a quiet room.
pub const QUIET_DBFS: f64 = -60.0;

/// Tonal interference in noisy mode (mains harmonic and a fan-like hum).
const TONES_HZ: [f64; 2] = [120.0, 310.0];

/// Ambient microphone signal. Quiet mode is white Gaussian noise at
/// -60 dBFS RMS. Noisy mode splits `interference_dbfs` of total power
/// evenly between white noise and the two tones.
pub fn synth_ambient(
    ambient: &AmbientProfile,
    rate_hz: f64,
    duration_s: f64,
    seed: u64,
) -> Result<TimeSeries, SimError> {
    check_duration(duration_s)?;
    let n = sample_count(duration_s, rate_hz);
    let mut rng = stream_rng(seed, Stream::Ambient);
    let x = match ambient.mode {
        AmbientMode::Quiet => {
            let sigma = db_to_amplitude(QUIET_DBFS);
            (0..n).map(|_| gaussian(&mut rng, sigma)).collect()
        }
        AmbientMode::Noisy => {
            let total = db_to_amplitude(ambient.interference_dbfs).powi(2);
            let sigma = (total / 2.0).sqrt();
            // each tone gets a quarter of the power: a^2/2 = total/4
            let a = (total / 2.0).sqrt();
            let phases: Vec<f64> = TONES_HZ.iter().map(|_| rng.random_range(0.0..2.0 * PI)).collect();
            (0..n)
                .map(|k| {
                    let t = k as f64 / rate_hz;
                    let tones: f64 =
                        TONES_HZ.iter().zip(&phases).map(|(f, ph)| a * (2.0 * PI * f * t + ph).sin()).sum();
                    tones + gaussian(&mut rng, sigma)
                })
                .collect()
        }
    };
    Ok(TimeSeries::new(0, rate_hz, Unit::Normalized, x))
}

/// Adds `leak_gain · ambient[n - delay]` into the stethoscope channel.
pub fn mix_into_stethoscope(
    stethoscope: &mut [f64],
    ambient: &[f64],
    leak_gain: f64,
    delay_samples: usize,
) -> Result<(), SimError> {
    if !(0.0..=1.0).contains(&leak_gain) {
        return Err(SimError::BadLeakGain(leak_gain));
    }
    if leak_gain == 0.0 {
        return Ok(());
    }
    for (n, v) in stethoscope.iter_mut().enumerate().skip(delay_samples) {
        if let Some(a) = ambient.get(n - delay_samples) {
            *v += leak_gain * a;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsp::{dbfs, xcorr};
    use crate::profile::PhysioProfile;
    use crate::sim::{beat_times_us, synth_pcg};

    #[test]
    fn quiet_room_is_quiet() {
        let a = synth_ambient(&AmbientProfile::default(), 8000.0, 5.0, 3).unwrap();
        let level = dbfs(&a.samples);
        assert!(level <= -55.0, "{level}");
        assert!((level - QUIET_DBFS).abs() < 0.5);
    }

    #[test]
    fn noisy_room_hits_requested_level() {
        let amb = AmbientProfile { mode: AmbientMode::Noisy, interference_dbfs: -25.0, ..Default::default() };
        let a = synth_ambient(&amb, 8000.0, 5.0, 3).unwrap();
        assert!((dbfs(&a.samples) + 25.0).abs() < 0.3, "{}", dbfs(&a.samples));
    }

    fn stethoscope_with_leak(gain: f64, mode: AmbientMode, seed: u64) -> (Vec<f64>, Vec<f64>) {
        let p = PhysioProfile::default();
        let r = beat_times_us(&p, 10.0, seed);
        let mut s = synth_pcg(&r, &p, 8000.0, 10.0, seed).unwrap().stethoscope.samples;
        let amb = AmbientProfile { mode, interference_dbfs: -30.0, ..Default::default() };
        let a = synth_ambient(&amb, 8000.0, 10.0, seed).unwrap().samples;
        mix_into_stethoscope(&mut s, &a, gain, 5).unwrap();
        (s, a)
    }

    #[test]
    fn zero_leak_leaves_channels_uncorrelated() {
        let (s, a) = stethoscope_with_leak(0.0, AmbientMode::Quiet, 11);
        let c = xcorr(&s, &a, 50);
        let chance = 5.0 / (s.len() as f64).sqrt();
        let peak = c.iter().map(|v| v.abs()).fold(0.0, f64::max);
        assert!(peak < chance, "{peak} vs {chance}");
    }

    #[test]
    fn leak_shows_up_at_its_delay() {
        let (s, a) = stethoscope_with_leak(0.5, AmbientMode::Noisy, 11);
        let c = xcorr(&s, &a, 50);
        let lag = c.iter().enumerate().max_by(|x, y| x.1.abs().total_cmp(&y.1.abs())).unwrap().0 as isize - 50;
        assert_eq!(lag, 5);
    }

    #[test]
    fn leak_gain_bounds() {
        let mut s = vec![0.0; 4];
        assert!(mix_into_stethoscope(&mut s, &[1.0; 4], 1.5, 0).is_err());
        mix_into_stethoscope(&mut s, &[1.0, 2.0, 3.0, 4.0], 0.5, 1).unwrap();
        assert_eq!(s, vec![0.0, 0.5, 1.0, 1.5]);
    }
}
