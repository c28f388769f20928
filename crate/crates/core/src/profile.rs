//! Physiological parameters that drive the simulator.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhysioProfile {
    pub heart_rate_bpm: f64,
    pub resp_rate_brpm: f64,
    /// S1 to S2 (systolic) interval.
    pub s1_s2_interval_s: f64,
    /// Each beat interval is scaled by `1 + u`, `u` uniform in ±this.
    pub hr_variability_frac: f64,
    /// Peak R-wave amplitude.
    pub ecg_amplitude_mv: f64,
    /// Scales the respiration component on every channel that carries it.
    pub resp_amplitude: f64,
    pub noise: NoiseLevels,
    pub ambient: AmbientProfile,
}

/// Standard deviations of the additive white noise on each channel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseLevels {
    pub ecg_mv: f64,
    pub resp_mv: f64,
    /// Relative to a unit pulse amplitude.
    pub ppg: f64,
    pub accel_g: f64,
    pub gyro_dps: f64,
    /// Body noise on the stethoscope channel, full scale = 1.
    pub pcg: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AmbientMode {
    /// Room noise at -60 dBFS RMS.
    Quiet,
    /// Broadband noise plus tonal interference at `interference_dbfs`.
    Noisy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AmbientProfile {
    pub mode: AmbientMode,
    /// Total RMS of the ambient channel in noisy mode.
    pub interference_dbfs: f64,
    /// Fraction of the ambient signal that leaks into the stethoscope.
    pub leak_gain: f64,
    /// Acoustic delay of the leak path, in audio samples.
    pub leak_delay_samples: usize,
}

impl Default for PhysioProfile {
    fn default() -> Self {
        PhysioProfile {
            heart_rate_bpm: 72.0,
            resp_rate_brpm: 15.0,
            s1_s2_interval_s: 0.30,
            hr_variability_frac: 0.02,
            ecg_amplitude_mv: 1.2,
            resp_amplitude: 1.0,
            noise: NoiseLevels::default(),
            ambient: AmbientProfile::default(),
        }
    }
}

impl Default for NoiseLevels {
    fn default() -> Self {
        NoiseLevels { ecg_mv: 0.02, resp_mv: 0.01, ppg: 0.27, accel_g: 0.003, gyro_dps: 0.3, pcg: 0.002 }
    }
}

impl NoiseLevels {
    pub fn none() -> Self {
        NoiseLevels { ecg_mv: 0.0, resp_mv: 0.0, ppg: 0.0, accel_g: 0.0, gyro_dps: 0.0, pcg: 0.0 }
    }
}

impl Default for AmbientProfile {
    fn default() -> Self {
        AmbientProfile { mode: AmbientMode::Quiet, interference_dbfs: -20.0, leak_gain: 0.5, leak_delay_samples: 5 }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProfileError {
    #[error("{field} = {value} is outside [{min}, {max}]")]
    OutOfRange { field: &'static str, value: f64, min: f64, max: f64 },
    #[error("systolic interval {interval_s} s does not fit in a {beat_s} s beat")]
    IntervalExceedsBeat { interval_s: f64, beat_s: f64 },
}

fn check(field: &'static str, value: f64, min: f64, max: f64) -> Result<(), ProfileError> {
    // NaN fails the contains check too.
    if (min..=max).contains(&value) {
        Ok(())
    } else {
        Err(ProfileError::OutOfRange { field, value, min, max })
    }
}

impl PhysioProfile {
    pub fn with_heart_rate(mut self, bpm: f64) -> Self {
        self.heart_rate_bpm = bpm;
        self
    }

    pub fn with_resp_rate(mut self, brpm: f64) -> Self {
        self.resp_rate_brpm = brpm;
        self
    }

    pub fn beat_period_s(&self) -> f64 {
        60.0 / self.heart_rate_bpm
    }

    pub fn validate(&self) -> Result<(), ProfileError> {
        check("heart_rate_bpm", self.heart_rate_bpm, 30.0, 220.0)?;
        check("resp_rate_brpm", self.resp_rate_brpm, 4.0, 60.0)?;
        check("hr_variability_frac", self.hr_variability_frac, 0.0, 0.2)?;
        check("s1_s2_interval_s", self.s1_s2_interval_s, 0.0, f64::MAX)?;
        check("ecg_amplitude_mv", self.ecg_amplitude_mv, 0.0, 100.0)?;
        check("resp_amplitude", self.resp_amplitude, 0.0, 100.0)?;
        check("ambient.leak_gain", self.ambient.leak_gain, 0.0, 1.0)?;
        let n = &self.noise;
        for (field, v) in [
            ("noise.ecg_mv", n.ecg_mv),
            ("noise.resp_mv", n.resp_mv),
            ("noise.ppg", n.ppg),
            ("noise.accel_g", n.accel_g),
            ("noise.gyro_dps", n.gyro_dps),
            ("noise.pcg", n.pcg),
        ] {
            check(field, v, 0.0, f64::MAX)?;
        }
        if self.s1_s2_interval_s >= self.beat_period_s() {
            return Err(ProfileError::IntervalExceedsBeat {
                interval_s: self.s1_s2_interval_s,
                beat_s: self.beat_period_s(),
            });
        }
        Ok(())
    }
}
