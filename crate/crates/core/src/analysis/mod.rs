//! Offline analysis of recorded or simulated sessions.
//!
//! Everything here is a pure function over [`TimeSeries`] values or parsed
//! records. Detectors use relative, adaptive thresholds so that a positive
//! gain on the input never changes the detected event times.

mod align;
mod channels;
mod heart_sounds;
mod nlms;
mod pipeline;
mod report;
mod rpeaks;
mod spectral;

pub use align::{align_streams, AlignMode, AlignedFrame, Alignment};
pub use channels::{extract_channel, Channel};
pub use heart_sounds::{detect_heart_sounds, HeartSoundEvent, HeartSoundKind, ENVELOPE_HOP_S};
pub use nlms::{cancel_noise, cancel_noise_with, Nlms, NLMS_STEP, NLMS_TAPS};
pub use pipeline::{analyze_session, AnalyzeOptions, MetricSet};
pub use report::{Flag, Metric, Report, ReportParseError};
pub use rpeaks::{detect_r_peaks, heart_rate, HeartRate};
pub use spectral::{ppg_heart_rate, respiration_rate, spectral_peak, SpectralEstimate, MIN_PROMINENCE};

use thiserror::Error;

use crate::series::TimeSeries;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalysisError {
    #[error("input is {got_s:.2} s long, needs at least {need_s} s")]
    TooShort { need_s: f64, got_s: f64 },
    #[error("sample rate {rate_hz} Hz is below the {min_hz} Hz minimum")]
    RateTooLow { rate_hz: f64, min_hz: f64 },
    #[error("need at least two peaks")]
    NotEnoughPeaks,
    #[error("no events found")]
    NoEventsFound,
    #[error("cannot tell systole from diastole (gap ratio {ratio:.2})")]
    AmbiguousPairing { ratio: f64 },
    #[error("no spectral peak stands out (prominence {prominence:.2})")]
    NoSpectralPeak { prominence: f64 },
    #[error("inputs differ in length ({a} vs {b})")]
    LengthMismatch { a: usize, b: usize },
    #[error("inputs differ in sample rate ({a} vs {b} Hz)")]
    RateMismatch { a: f64, b: f64 },
    #[error("session has no sensor records")]
    EmptySession,
    #[error("bad target rate {0} Hz")]
    BadRate(f64),
    #[error("channel absent")]
    ChannelAbsent(&'static str),
}

pub(crate) fn require(x: &TimeSeries, min_rate_hz: f64, min_duration_s: f64) -> Result<(), AnalysisError> {
    if x.rate_hz < min_rate_hz {
        return Err(AnalysisError::RateTooLow { rate_hz: x.rate_hz, min_hz: min_rate_hz });
    }
    let got_s = x.duration_s();
    // half a sample of slack so that exactly-long-enough recordings pass
    if got_s + 0.5 / x.rate_hz < min_duration_s {
        return Err(AnalysisError::TooShort { need_s: min_duration_s, got_s });
    }
    Ok(())
}
