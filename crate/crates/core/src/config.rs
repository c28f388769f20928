//! Sensor enable/rate configuration and its validation.
//!
//! The on-disk form is a small TOML file:
//!
//! ```toml
//! [ecg]
//! enabled = true
//! rate_hz = 125
//!
//! [ppg]
//! enabled = true
//! rate_hz = 100
//! led_mask = 1        # bit0 green, bit1 red, bit2 IR
//!
//! [imu]
//! enabled = true
//! rate_hz = 50
//!
//! [audio]
//! enabled = true
//! sample_rate_hz = 8000
//!
//! [profile]            # optional, see PhysioProfile
//! heart_rate_bpm = 72.0
//! ```
//!
//! Every key is optional; missing keys take the defaults below.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::profile::PhysioProfile;
use crate::types::{SensorId, LED_ALL, LED_GREEN};

pub const MIN_SENSOR_RATE_HZ: u32 = 1;
pub const MAX_SENSOR_RATE_HZ: u32 = 1000;
pub const AUDIO_RATES_HZ: [u32; 3] = [4000, 8000, 16000];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ChannelConfig {
    pub enabled: bool,
    pub rate_hz: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AudioConfig {
    pub enabled: bool,
    pub sample_rate_hz: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SensorConfig {
    pub ecg: ChannelConfig,
    pub ppg: ChannelConfig,
    pub imu: ChannelConfig,
    pub ppg_led_mask: u8,
    pub audio: AudioConfig,
}

impl Default for SensorConfig {
    fn default() -> Self {
        SensorConfig {
            ecg: ChannelConfig { enabled: true, rate_hz: 125 },
            ppg: ChannelConfig { enabled: true, rate_hz: 100 },
            imu: ChannelConfig { enabled: true, rate_hz: 50 },
            ppg_led_mask: LED_GREEN,
            audio: AudioConfig { enabled: true, sample_rate_hz: 8000 },
        }
    }
}

impl SensorConfig {
    /// Everything off; a starting point for building configs by hand.
    pub fn all_disabled() -> Self {
        let mut cfg = SensorConfig::default();
        cfg.ecg.enabled = false;
        cfg.ppg.enabled = false;
        cfg.imu.enabled = false;
        cfg.audio.enabled = false;
        cfg
    }

    /// Channel settings for a record-producing sensor.
    pub fn channel(&self, id: SensorId) -> Option<&ChannelConfig> {
        match id {
            SensorId::EcgResp => Some(&self.ecg),
            SensorId::Ppg => Some(&self.ppg),
            SensorId::Imu => Some(&self.imu),
            _ => None,
        }
    }

    pub fn channel_mut(&mut self, id: SensorId) -> Option<&mut ChannelConfig> {
        match id {
            SensorId::EcgResp => Some(&mut self.ecg),
            SensorId::Ppg => Some(&mut self.ppg),
            SensorId::Imu => Some(&mut self.imu),
            _ => None,
        }
    }

    /// Record sensors that are switched on, in id order.
    pub fn enabled_sensors(&self) -> Vec<SensorId> {
        [SensorId::EcgResp, SensorId::Ppg, SensorId::Imu]
            .into_iter()
            .filter(|id| self.channel(*id).is_some_and(|c| c.enabled))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConfigError {
    #[error("{field} = {value} is out of range")]
    RateOutOfRange { field: &'static str, value: u32 },
    #[error("no sensor is enabled")]
    NoSensorEnabled,
    #[error("{field} must select at least one LED while PPG is enabled")]
    EmptyLedMask { field: &'static str },
    #[error("{field} = {value:#x} sets bits beyond green/red/IR")]
    InvalidLedMask { field: &'static str, value: u8 },
}

/// A [`SensorConfig`] that passed [`validate_config`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ValidatedConfig(SensorConfig);

impl ValidatedConfig {
    pub fn get(&self) -> &SensorConfig {
        &self.0
    }

    pub fn into_inner(self) -> SensorConfig {
        self.0
    }
}

impl std::ops::Deref for ValidatedConfig {
    type Target = SensorConfig;
    fn deref(&self) -> &SensorConfig {
        &self.0
    }
}

pub fn validate_config(cfg: SensorConfig) -> Result<ValidatedConfig, ConfigError> {
    let channels = [("ecg.rate_hz", cfg.ecg), ("ppg.rate_hz", cfg.ppg), ("imu.rate_hz", cfg.imu)];
    for (field, ch) in channels {
        if !(MIN_SENSOR_RATE_HZ..=MAX_SENSOR_RATE_HZ).contains(&ch.rate_hz) {
            return Err(ConfigError::RateOutOfRange { field, value: ch.rate_hz });
        }
    }
    if !AUDIO_RATES_HZ.contains(&cfg.audio.sample_rate_hz) {
        return Err(ConfigError::RateOutOfRange { field: "audio.sample_rate_hz", value: cfg.audio.sample_rate_hz });
    }
    if cfg.ppg_led_mask & !LED_ALL != 0 {
        return Err(ConfigError::InvalidLedMask { field: "ppg.led_mask", value: cfg.ppg_led_mask });
    }
    if cfg.ppg.enabled && cfg.ppg_led_mask == 0 {
        return Err(ConfigError::EmptyLedMask { field: "ppg.led_mask" });
    }
    if !(cfg.ecg.enabled || cfg.ppg.enabled || cfg.imu.enabled || cfg.audio.enabled) {
        return Err(ConfigError::NoSensorEnabled);
    }
    Ok(ValidatedConfig(cfg))
}

// ---------------------------------------------------------------------------
// File schema

#[derive(Debug, Clone, Default, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct ConfigFile {
    pub ecg: ChannelSection,
    pub ppg: PpgSection,
    pub imu: ImuSection,
    pub audio: AudioSection,
    pub profile: Option<PhysioProfile>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct ChannelSection {
    pub enabled: bool,
    pub rate_hz: u32,
}

impl Default for ChannelSection {
    fn default() -> Self {
        ChannelSection { enabled: true, rate_hz: 125 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct PpgSection {
    pub enabled: bool,
    pub rate_hz: u32,
    pub led_mask: u8,
}

impl Default for PpgSection {
    fn default() -> Self {
        PpgSection { enabled: true, rate_hz: 100, led_mask: LED_GREEN }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct ImuSection {
    pub enabled: bool,
    pub rate_hz: u32,
}

impl Default for ImuSection {
    fn default() -> Self {
        ImuSection { enabled: true, rate_hz: 50 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct AudioSection {
    pub enabled: bool,
    pub sample_rate_hz: u32,
}

impl Default for AudioSection {
    fn default() -> Self {
        AudioSection { enabled: true, sample_rate_hz: 8000 }
    }
}

#[derive(Debug, Error)]
pub enum ConfigFileError {
    #[error("config file: {0}")]
    Parse(#[from] toml::de::Error),
    #[error(transparent)]
    Invalid(#[from] ConfigError),
    #[error(transparent)]
    Profile(#[from] crate::profile::ProfileError),
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self, ConfigFileError> {
        Ok(toml::from_str(text)?)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config schema always serializes")
    }

    pub fn sensor_config(&self) -> SensorConfig {
        SensorConfig {
            ecg: ChannelConfig { enabled: self.ecg.enabled, rate_hz: self.ecg.rate_hz },
            ppg: ChannelConfig { enabled: self.ppg.enabled, rate_hz: self.ppg.rate_hz },
            imu: ChannelConfig { enabled: self.imu.enabled, rate_hz: self.imu.rate_hz },
            ppg_led_mask: self.ppg.led_mask,
            audio: AudioConfig { enabled: self.audio.enabled, sample_rate_hz: self.audio.sample_rate_hz },
        }
    }

    pub fn from_sensor_config(cfg: &SensorConfig, profile: Option<PhysioProfile>) -> Self {
        ConfigFile {
            ecg: ChannelSection { enabled: cfg.ecg.enabled, rate_hz: cfg.ecg.rate_hz },
            ppg: PpgSection { enabled: cfg.ppg.enabled, rate_hz: cfg.ppg.rate_hz, led_mask: cfg.ppg_led_mask },
            imu: ImuSection { enabled: cfg.imu.enabled, rate_hz: cfg.imu.rate_hz },
            audio: AudioSection { enabled: cfg.audio.enabled, sample_rate_hz: cfg.audio.sample_rate_hz },
            profile,
        }
    }

    /// Validated sensor config plus the profile (default when absent).
    pub fn resolve(&self) -> Result<(ValidatedConfig, PhysioProfile), ConfigFileError> {
        let cfg = validate_config(self.sensor_config())?;
        let profile = self.profile.clone().unwrap_or_default();
        profile.validate()?;
        Ok((cfg, profile))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn default_config_is_valid_with_device_rates() {
        let cfg = validate_config(SensorConfig::default()).unwrap();
        assert_eq!(cfg.ecg.rate_hz, 125);
        assert_eq!(cfg.ppg.rate_hz, 100);
        assert_eq!(cfg.imu.rate_hz, 50);
        assert_eq!(cfg.ppg_led_mask, LED_GREEN);
        assert_eq!(cfg.audio.sample_rate_hz, 8000);
    }

    #[test]
    fn everything_off_is_rejected() {
        assert_eq!(validate_config(SensorConfig::all_disabled()), Err(ConfigError::NoSensorEnabled));
    }

    #[test]
    fn zero_ecg_rate_names_the_field() {
        let mut cfg = SensorConfig::default();
        cfg.ecg.rate_hz = 0;
        assert_eq!(validate_config(cfg), Err(ConfigError::RateOutOfRange { field: "ecg.rate_hz", value: 0 }));
        cfg.ecg.rate_hz = 1001;
        assert!(matches!(validate_config(cfg), Err(ConfigError::RateOutOfRange { .. })));
        cfg.ecg.rate_hz = 1000;
        assert!(validate_config(cfg).is_ok());
    }

    #[test]
    fn audio_rate_must_be_in_set() {
        let mut cfg = SensorConfig::default();
        cfg.audio.sample_rate_hz = 44100;
        assert_eq!(
            validate_config(cfg),
            Err(ConfigError::RateOutOfRange { field: "audio.sample_rate_hz", value: 44100 })
        );
    }

    #[test]
    fn empty_led_mask_only_matters_when_ppg_on() {
        let mut cfg = SensorConfig::default();
        cfg.ppg_led_mask = 0;
        assert_eq!(validate_config(cfg), Err(ConfigError::EmptyLedMask { field: "ppg.led_mask" }));
        cfg.ppg.enabled = false;
        assert!(validate_config(cfg).is_ok());
    }

    #[test]
    fn audio_only_is_a_valid_session() {
        let mut cfg = SensorConfig::all_disabled();
        cfg.audio.enabled = true;
        assert!(validate_config(cfg).is_ok());
    }

    #[test]
    fn config_file_defaults_match_sensor_defaults() {
        let file = ConfigFile::parse("").unwrap();
        assert_eq!(file.sensor_config(), SensorConfig::default());
        let file = ConfigFile::parse("[imu]\nenabled = false\n[ppg]\nled_mask = 7\n").unwrap();
        let cfg = file.sensor_config();
        assert!(!cfg.imu.enabled);
        assert_eq!(cfg.imu.rate_hz, 50);
        assert_eq!(cfg.ppg_led_mask, 7);
    }

    #[test]
    fn config_file_rejects_unknown_keys() {
        assert!(ConfigFile::parse("[ecg]\nrate = 3\n").is_err());
    }

    #[test]
    fn config_file_round_trips_through_toml() {
        let mut cfg = SensorConfig::default();
        cfg.imu.enabled = false;
        cfg.ppg_led_mask = 5;
        let file = ConfigFile::from_sensor_config(&cfg, Some(PhysioProfile::default()));
        let back = ConfigFile::parse(&file.to_toml()).unwrap();
        assert_eq!(back, file);
    }

    fn arb_config() -> impl Strategy<Value = SensorConfig> {
        (
            (any::<bool>(), 0u32..1200),
            (any::<bool>(), 0u32..1200),
            (any::<bool>(), 0u32..1200),
            0u8..16,
            (any::<bool>(), prop::sample::select(vec![0u32, 4000, 8000, 16000, 22050])),
        )
            .prop_map(|(e, p, i, mask, a)| SensorConfig {
                ecg: ChannelConfig { enabled: e.0, rate_hz: e.1 },
                ppg: ChannelConfig { enabled: p.0, rate_hz: p.1 },
                imu: ChannelConfig { enabled: i.0, rate_hz: i.1 },
                ppg_led_mask: mask,
                audio: AudioConfig { enabled: a.0, sample_rate_hz: a.1 },
            })
    }

    proptest! {
        #[test]
        fn validation_is_idempotent(cfg in arb_config()) {
            if let Ok(v) = validate_config(cfg) {
                prop_assert_eq!(v.into_inner(), cfg);
                prop_assert_eq!(validate_config(v.into_inner()), Ok(v));
            }
        }
    }
}
