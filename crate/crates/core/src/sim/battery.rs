use thiserror::Error;

use crate::config::SensorConfig;

/// Things that draw current besides the always-on base load.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Load {
    Audio,
    EcgResp,
    Ppg,
    Imu,
}

/// Linear battery model: hours = capacity / (base + Σ enabled loads).
///
/// The default split is a plausible guess that sums to 20 mA with every
/// sensor on, so a 400 mAh cell lasts 20 h. Only that total is calibrated.
#[derive(Debug, Clone, PartialEq)]
pub struct BatteryModel {
    pub capacity_mah: f64,
    pub base_current_ma: f64,
    pub audio_ma: f64,
    pub ecg_ma: f64,
    pub ppg_ma: f64,
    pub imu_ma: f64,
}

impl Default for BatteryModel {
    fn default() -> Self {
        BatteryModel { capacity_mah: 400.0, base_current_ma: 3.0, audio_ma: 8.0, ecg_ma: 3.0, ppg_ma: 4.0, imu_ma: 2.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BatteryError {
    #[error("no sensor is drawing current")]
    NoLoad,
    #[error("battery model has a non-positive {0}")]
    InvalidModel(&'static str),
}

impl BatteryModel {
    pub fn current_ma(&self, load: Load) -> f64 {
        match load {
            Load::Audio => self.audio_ma,
            Load::EcgResp => self.ecg_ma,
            Load::Ppg => self.ppg_ma,
            Load::Imu => self.imu_ma,
        }
    }

    pub fn validate(&self) -> Result<(), BatteryError> {
        for (name, v) in [
            ("capacity_mah", self.capacity_mah),
            ("base_current_ma", self.base_current_ma),
            ("audio_ma", self.audio_ma),
            ("ecg_ma", self.ecg_ma),
            ("ppg_ma", self.ppg_ma),
            ("imu_ma", self.imu_ma),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(BatteryError::InvalidModel(name));
            }
        }
        Ok(())
    }

    /// Runtime with the given loads on top of the base load.
    pub fn hours(&self, loads: &[Load]) -> f64 {
        let total = self.base_current_ma + loads.iter().map(|&l| self.current_ma(l)).sum::<f64>();
        self.capacity_mah / total
    }
}

pub fn enabled_loads(cfg: &SensorConfig) -> Vec<Load> {
    [
        (cfg.audio.enabled, Load::Audio),
        (cfg.ecg.enabled, Load::EcgResp),
        (cfg.ppg.enabled, Load::Ppg),
        (cfg.imu.enabled, Load::Imu),
    ]
    .into_iter()
    .filter_map(|(on, l)| on.then_some(l))
    .collect()
}

/// Battery life in hours for a configuration.
pub fn estimate_battery_life(cfg: &SensorConfig, model: &BatteryModel) -> Result<f64, BatteryError> {
    model.validate()?;
    let loads = enabled_loads(cfg);
    if loads.is_empty() {
        return Err(BatteryError::NoLoad);
    }
    Ok(model.hours(&loads))
}
