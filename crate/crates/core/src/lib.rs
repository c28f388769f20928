//! A virtual wearable stethoscope patch.
//!
//! The device carries a stethoscope microphone with an ambient reference
//! microphone, a dual-channel ECG/respiration front-end, a PPG module and a
//! 6-axis IMU, all on one session clock. This crate generates those signals,
//! logs them in a compact binary record format plus a stereo WAV file,
//! streams them over a framed notify protocol and analyzes them.
//!
//! Module map:
//!
//! * [`types`], [`config`], [`units`], [`profile`], [`series`]: shared domain types.
//! * [`codec`]: `.pks` record files, WAV audio and the `.truth` event sidecar.
//! * [`sim`]: deterministic multimodal session generator and battery model.
//! * [`analysis`]: alignment, R-peaks, heart sounds, spectral rates, noise cancellation.
//! * [`stream`]: framed command/notify protocol, server and monitoring client.

pub mod analysis;
pub mod codec;
pub mod config;
pub mod crc;
pub mod dsp;
pub mod profile;
pub mod series;
pub mod sim;
pub mod stream;
pub mod types;
pub mod units;

pub use config::{validate_config, ConfigError, SensorConfig, ValidatedConfig};
pub use profile::PhysioProfile;
pub use series::{TimeSeries, Unit};
pub use types::{EcgRespSample, ImuSample, Payload, PpgSample, SensorId, SensorRecord};
