//! Deterministic virtual device.
//!
//! Every channel draws from its own ChaCha stream derived from the master
//! seed, so switching one sensor on or off never changes another sensor's
//! samples. Cardiac and respiratory timing is shared by all channels, which
//! is what makes the cross-modality relations (S1 at the R peak, PPG foot
//! 250 ms after it, respiration on RESP/gyro/az) hold by construction.

mod ambient;
mod battery;
mod beats;
mod ecg;
mod pcg;
mod ppg;
mod resp;
mod rng;
mod session;

pub use ambient::{mix_into_stethoscope, synth_ambient, QUIET_DBFS};
pub use battery::{estimate_battery_life, BatteryError, BatteryModel, Load};
pub use beats::beat_times_us;
pub use ecg::{render_ecg, synth_ecg, ECG_MIN_RATE_HZ};
pub use pcg::{synth_pcg, PcgOutput, PCG_MIN_RATE_HZ, S1_DURATION_S, S1_FREQ_HZ, S2_DURATION_S, S2_FREQ_HZ};
pub use ppg::{synth_ppg, PPG_DELAY_S, PPG_MIN_RATE_HZ};
pub use resp::{synth_resp_and_imu, ImuChannels, RespAndImu, RespPhase};
pub use session::{generate_session, GroundTruth, SESSION_EPOCH_US};

use thiserror::Error;

use crate::profile::ProfileError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("invalid profile: {0}")]
    Profile(#[from] ProfileError),
    #[error("duration {0} s is outside (0, 86400]")]
    BadDuration(f64),
    #[error("{rate_hz} Hz is too low for this channel (needs {min_hz} Hz)")]
    RateTooLowForMorphology { rate_hz: f64, min_hz: f64 },
    #[error("S2 at {s2_us} us would land after the next S1 at {next_s1_us} us")]
    IntervalExceedsBeat { s2_us: u64, next_s1_us: u64 },
    #[error("leak gain {0} is outside [0, 1]")]
    BadLeakGain(f64),
}

pub(crate) fn check_duration(duration_s: f64) -> Result<(), SimError> {
    if duration_s > 0.0 && duration_s <= 86_400.0 {
        Ok(())
    } else {
        Err(SimError::BadDuration(duration_s))
    }
}

/// Sample count for `duration_s` at `rate_hz`.
pub(crate) fn sample_count(duration_s: f64, rate_hz: f64) -> usize {
    (duration_s * rate_hz).round() as usize
}
