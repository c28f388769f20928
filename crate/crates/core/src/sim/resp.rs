use std::f64::consts::PI;

use rand::Rng;

use super::rng::{gaussian, stream_rng, Stream};
use super::{check_duration, sample_count, SimError};
use crate::profile::PhysioProfile;
use crate::series::{TimeSeries, Unit};

/// RESP channel amplitude at `resp_amplitude = 1`.
pub const RESP_MV: f64 = 0.3;
/// Respiratory motion on the IMU at `resp_amplitude = 1`.
pub const GYRO_Y_DPS: f64 = 2.0;
pub const GYRO_Z_DPS: f64 = -1.5;
pub const ACCEL_Z_G: f64 = 0.01;

/// Breathing oscillation `sin(2π f t + φ)`; inhalation peaks are breaths.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RespPhase {
    pub freq_hz: f64,
    pub phase_rad: f64,
}

impl RespPhase {
    pub fn from_profile(profile: &PhysioProfile, seed: u64) -> Self {
        let mut rng = stream_rng(seed, Stream::RespPhase);
        RespPhase { freq_hz: profile.resp_rate_brpm / 60.0, phase_rad: rng.random_range(0.0..2.0 * PI) }
    }

    pub fn value(&self, t_s: f64) -> f64 {
        (2.0 * PI * self.freq_hz * t_s + self.phase_rad).sin()
    }

    /// Times where the oscillation peaks, within `[0, duration)`.
    pub fn breath_times_us(&self, duration_s: f64) -> Vec<u64> {
        let period = 1.0 / self.freq_hz;
        let mut t = (0.25 - self.phase_rad / (2.0 * PI)).rem_euclid(1.0) * period;
        let mut out = Vec::new();
        while t < duration_s {
            out.push((t * 1e6).round() as u64);
            t += period;
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImuChannels {
    pub ax: TimeSeries,
    pub ay: TimeSeries,
    pub az: TimeSeries,
    pub gx: TimeSeries,
    pub gy: TimeSeries,
    pub gz: TimeSeries,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RespAndImu {
    pub phase: RespPhase,
    pub resp: TimeSeries,
    pub imu: ImuChannels,
}

/// Respiration on the RESP channel, gyro y/z and accel z (with +1 g of
/// gravity); gx, ax and ay carry noise only.
pub fn synth_resp_and_imu(
    profile: &PhysioProfile,
    resp_rate_hz: f64,
    imu_rate_hz: f64,
    duration_s: f64,
    seed: u64,
) -> Result<RespAndImu, SimError> {
    profile.validate()?;
    check_duration(duration_s)?;
    let phase = RespPhase::from_profile(profile, seed);
    Ok(RespAndImu {
        phase,
        resp: render_resp(profile, &phase, resp_rate_hz, duration_s, seed),
        imu: render_imu(profile, &phase, imu_rate_hz, duration_s, seed),
    })
}

pub(crate) fn render_resp(
    profile: &PhysioProfile,
    phase: &RespPhase,
    rate_hz: f64,
    duration_s: f64,
    seed: u64,
) -> TimeSeries {
    let mut rng = stream_rng(seed, Stream::RespNoise);
    let amp = RESP_MV * profile.resp_amplitude;
    let x = (0..sample_count(duration_s, rate_hz))
        .map(|k| amp * phase.value(k as f64 / rate_hz) + gaussian(&mut rng, profile.noise.resp_mv))
        .collect();
    TimeSeries::new(0, rate_hz, Unit::Millivolts, x)
}

pub(crate) fn render_imu(
    profile: &PhysioProfile,
    phase: &RespPhase,
    rate_hz: f64,
    duration_s: f64,
    seed: u64,
) -> ImuChannels {
    let n = sample_count(duration_s, rate_hz);
    let mut rng = stream_rng(seed, Stream::ImuNoise);
    let (na, ng) = (profile.noise.accel_g, profile.noise.gyro_dps);
    let amp = profile.resp_amplitude;
    let mut axes: [Vec<f64>; 6] = Default::default();
    for k in 0..n {
        let r = phase.value(k as f64 / rate_hz);
        // draw order is fixed: ax ay az gx gy gz
        axes[0].push(gaussian(&mut rng, na));
        axes[1].push(gaussian(&mut rng, na));
        axes[2].push(1.0 + amp * ACCEL_Z_G * r + gaussian(&mut rng, na));
        axes[3].push(gaussian(&mut rng, ng));
        axes[4].push(amp * GYRO_Y_DPS * r + gaussian(&mut rng, ng));
        axes[5].push(amp * GYRO_Z_DPS * r + gaussian(&mut rng, ng));
    }
    let [ax, ay, az, gx, gy, gz] = axes;
    let ts = |v, unit| TimeSeries::new(0, rate_hz, unit, v);
    ImuChannels {
        ax: ts(ax, Unit::G),
        ay: ts(ay, Unit::G),
        az: ts(az, Unit::G),
        gx: ts(gx, Unit::Dps),
        gy: ts(gy, Unit::Dps),
        gz: ts(gz, Unit::Dps),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsp::{mean, welch};

    fn band_power(x: &TimeSeries, lo: f64, hi: f64) -> f64 {
        let psd = welch(&x.samples, x.rate_hz, x.len(), 4 * x.len().next_power_of_two());
        psd.band(lo, hi).map(|k| psd.power[k]).sum()
    }

    #[test]
    fn respiration_lands_on_the_right_channels() {
        let p = PhysioProfile::default().with_resp_rate(15.0);
        let out = synth_resp_and_imu(&p, 125.0, 50.0, 60.0, 5).unwrap();
        assert_eq!(out.resp.len(), 7500);
        assert_eq!(out.imu.gx.len(), 3000);
        let psd = welch(&out.resp.samples, 125.0, 7500, 32768);
        let k = psd.band(0.08, 0.8).max_by(|&a, &b| psd.power[a].total_cmp(&psd.power[b])).unwrap();
        assert!((psd.freq(k) - 0.25).abs() <= psd.df);

        let (lo, hi) = (0.2, 0.3);
        let gy = band_power(&out.imu.gy, lo, hi);
        assert!(band_power(&out.imu.gx, lo, hi) <= 0.1 * gy);
        assert!(band_power(&out.imu.gz, lo, hi) > 0.3 * gy);
        assert!(band_power(&out.imu.ax, lo, hi) <= 0.1 * band_power(&out.imu.az, lo, hi));
        assert!((mean(&out.imu.az.samples) - 1.0).abs() <= 0.02);
    }

    #[test]
    fn breath_times_sit_on_inhalation_peaks() {
        let ph = RespPhase { freq_hz: 0.25, phase_rad: 1.0 };
        let b = ph.breath_times_us(20.0);
        assert_eq!(b.len(), 5);
        for t in b {
            assert!((ph.value(t as f64 / 1e6) - 1.0).abs() < 1e-9);
        }
    }
}
