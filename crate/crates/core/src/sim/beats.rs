use rand::Rng;

use super::rng::{stream_rng, Stream};
use crate::profile::PhysioProfile;

/// R-peak times for a session. The first beat falls half a (jittered)
/// interval in; each later interval is `60/HR · (1 + u)` with `u` uniform in
/// `±hr_variability_frac`.
pub fn beat_times_us(profile: &PhysioProfile, duration_s: f64, seed: u64) -> Vec<u64> {
    let mut rng = stream_rng(seed, Stream::Beats);
    let v = profile.hr_variability_frac;
    let interval = |rng: &mut rand_chacha::ChaCha8Rng| {
        let u = if v > 0.0 { rng.random_range(-v..=v) } else { 0.0 };
        profile.beat_period_s() * (1.0 + u)
    };
    let mut out = Vec::new();
    let mut t = 0.5 * interval(&mut rng);
    while t < duration_s {
        out.push((t * 1e6).round() as u64);
        t += interval(&mut rng);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jitter_free_beats_are_periodic() {
        let p = PhysioProfile { hr_variability_frac: 0.0, ..PhysioProfile::default().with_heart_rate(60.0) };
        let b = beat_times_us(&p, 60.0, 1);
        assert_eq!(b.len(), 60);
        assert_eq!(b[0], 500_000);
        assert!(b.windows(2).all(|w| w[1] - w[0] == 1_000_000));
    }

    #[test]
    fn jitter_stays_in_bounds() {
        let p = PhysioProfile { hr_variability_frac: 0.1, ..PhysioProfile::default().with_heart_rate(90.0) };
        let b = beat_times_us(&p, 120.0, 3);
        for w in b.windows(2) {
            let d = (w[1] - w[0]) as f64 / 1e6;
            assert!((0.6 - 1e-6..=0.7334).contains(&d), "{d}");
        }
        assert_eq!(b, beat_times_us(&p, 120.0, 3));
        assert_ne!(b, beat_times_us(&p, 120.0, 4));
    }
}
