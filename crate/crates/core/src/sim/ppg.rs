use super::resp::RespPhase;
use super::rng::{gaussian, stream_rng, Stream};
use super::{check_duration, sample_count, SimError};
use crate::profile::PhysioProfile;
use crate::series::{TimeSeries, Unit};

pub const PPG_MIN_RATE_HZ: f64 = 25.0;
/// Pulse foot lag behind the R peak (pulse transit time).
pub const PPG_DELAY_S: f64 = 0.250;

const RISE_S: f64 = 0.06;
const DECAY_S: f64 = 0.25;
/// Respiratory baseline wander relative to the pulse amplitude.
const RESP_WANDER: f64 = 0.5;

/// Unit-peak pulse starting at its foot `u = 0`. The slope is positive at
/// the foot, so the foot is the local minimum of the summed waveform.
fn pulse(u: f64) -> f64 {
    if !(0.0..2.5).contains(&u) {
        return 0.0;
    }
    let peak_u = RISE_S * (1.0 + DECAY_S / RISE_S).ln();
    let shape = |u: f64| (1.0 - (-u / RISE_S).exp()) * (-u / DECAY_S).exp();
    shape(u) / shape(peak_u)
}

/// Relative PPG waveform: one pulse per beat with its foot 250 ms after the
/// R peak, respiratory baseline wander, and white noise (`noise.ppg`).
/// `stream` selects the LED's noise stream (0 green, 1 red, 2 IR).
pub fn synth_ppg(
    r_peaks_us: &[u64],
    resp: &RespPhase,
    profile: &PhysioProfile,
    rate_hz: f64,
    duration_s: f64,
    seed: u64,
    led: usize,
) -> Result<TimeSeries, SimError> {
    check_duration(duration_s)?;
    if rate_hz < PPG_MIN_RATE_HZ {
        return Err(SimError::RateTooLowForMorphology { rate_hz, min_hz: PPG_MIN_RATE_HZ });
    }
    Ok(render_ppg(r_peaks_us, resp, profile, rate_hz, duration_s, seed, led))
}

pub(crate) fn render_ppg(
    r_peaks_us: &[u64],
    resp: &RespPhase,
    profile: &PhysioProfile,
    rate_hz: f64,
    duration_s: f64,
    seed: u64,
    led: usize,
) -> TimeSeries {
    let n = sample_count(duration_s, rate_hz);
    let mut x: Vec<f64> =
        (0..n).map(|k| RESP_WANDER * profile.resp_amplitude * resp.value(k as f64 / rate_hz)).collect();
    for &r in r_peaks_us {
        let foot = r as f64 / 1e6 + PPG_DELAY_S;
        let lo = (foot * rate_hz).ceil().max(0.0) as usize;
        let hi = (((foot + 2.5) * rate_hz).ceil() as usize).min(n);
        for (k, v) in x.iter_mut().enumerate().take(hi).skip(lo) {
            *v += pulse(k as f64 / rate_hz - foot);
        }
    }
    if profile.noise.ppg > 0.0 {
        let stream = [Stream::PpgGreen, Stream::PpgRed, Stream::PpgIr][led.min(2)];
        let mut rng = stream_rng(seed, stream);
        for v in x.iter_mut() {
            *v += gaussian(&mut rng, profile.noise.ppg);
        }
    }
    TimeSeries::new(0, rate_hz, Unit::Normalized, x)
}
