use super::{require, AnalysisError};
use crate::dsp::{detrend, welch};
use crate::series::TimeSeries;

/// Peak-to-median power ratio in the search band below which a peak is
/// not trusted.
pub const MIN_PROMINENCE: f64 = 6.0;
/// Zero-padding factor for the FFT, for a finer frequency grid.
const PAD: usize = 8;

pub const HR_BAND_HZ: (f64, f64) = (0.7, 3.0);
pub const RESP_BAND_HZ: (f64, f64) = (0.08, 0.8);
const PPG_MIN_DURATION_S: f64 = 20.0;
const PPG_MIN_RATE_HZ: f64 = 25.0;
const PPG_SEGMENT_S: f64 = 20.0;
const RESP_MIN_DURATION_S: f64 = 30.0;
const RESP_SEGMENT_S: f64 = 30.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralEstimate {
    pub freq_hz: f64,
    /// `freq_hz` in events per minute.
    pub per_minute: f64,
    /// Peak power over the median power of the band.
    pub prominence: f64,
    /// The peak is within one resolution bin of a band limit, so the true
    /// maximum may lie outside the band.
    pub at_band_edge: bool,
    /// Bin spacing of the unpadded segment.
    pub resolution_hz: f64,
}

/// Strongest Welch peak in `[lo, hi]` Hz.
///
/// Segments are `segment_s` long, or half the input when that is shorter,
/// so at least three half-overlapping segments are averaged. Ties go to the
/// lowest frequency.
pub fn spectral_peak(x: &TimeSeries, lo: f64, hi: f64, segment_s: f64) -> Result<SpectralEstimate, AnalysisError> {
    let fs = x.rate_hz;
    let seg = ((segment_s * fs).round() as usize).min(x.len() / 2).max(8);
    let nfft = (seg * PAD).next_power_of_two();
    let psd = welch(&detrend(&x.samples), fs, seg, nfft);
    let band = psd.band(lo, hi);
    let (first, last) = (*band.start(), *band.end());
    if first > last {
        return Err(AnalysisError::NoSpectralPeak { prominence: 0.0 });
    }
    let p = &psd.power[first..=last];
    let mut k = 0;
    for (i, &v) in p.iter().enumerate() {
        if v > p[k] {
            k = i;
        }
    }
    let mut sorted = p.to_vec();
    sorted.sort_by(f64::total_cmp);
    let median = sorted[sorted.len() / 2];
    let prominence = if p[k] <= 0.0 {
        0.0
    } else if median <= 0.0 {
        f64::INFINITY
    } else {
        p[k] / median
    };
    if prominence < MIN_PROMINENCE {
        return Err(AnalysisError::NoSpectralPeak { prominence });
    }
    let freq_hz = psd.freq(first + k);
    let resolution_hz = fs / seg as f64;
    Ok(SpectralEstimate {
        freq_hz,
        per_minute: 60.0 * freq_hz,
        prominence,
        at_band_edge: freq_hz - lo < resolution_hz || hi - freq_hz < resolution_hz,
        resolution_hz,
    })
}

/// Heart rate from a PPG channel, in bpm.
pub fn ppg_heart_rate(ppg: &TimeSeries) -> Result<SpectralEstimate, AnalysisError> {
    require(ppg, PPG_MIN_RATE_HZ, PPG_MIN_DURATION_S)?;
    spectral_peak(ppg, HR_BAND_HZ.0, HR_BAND_HZ.1, PPG_SEGMENT_S)
}

/// Breathing rate from any channel that carries respiration (RESP, gyro,
/// accelerometer), in breaths per minute.
pub fn respiration_rate(series: &TimeSeries) -> Result<SpectralEstimate, AnalysisError> {
    require(series, 0.0, RESP_MIN_DURATION_S)?;
    spectral_peak(series, RESP_BAND_HZ.0, RESP_BAND_HZ.1, RESP_SEGMENT_S)
}
