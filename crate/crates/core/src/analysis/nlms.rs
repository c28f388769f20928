use super::AnalysisError;
use crate::series::TimeSeries;

pub const NLMS_TAPS: usize = 64;
pub const NLMS_STEP: f64 = 0.1;
/// Regularizer on the reference energy.
const EPS: f64 = 1e-12;

/// Normalized LMS adaptive filter predicting the primary input from the
/// last `taps` reference samples.
#[derive(Debug, Clone)]
pub struct Nlms {
    weights: Vec<f64>,
    /// Circular history of the reference, newest at `head`.
    history: Vec<f64>,
    head: usize,
    energy: f64,
    step: f64,
}

impl Nlms {
    pub fn new(taps: usize, step: f64) -> Self {
        assert!(taps > 0);
        Nlms { weights: vec![0.0; taps], history: vec![0.0; taps], head: 0, energy: 0.0, step }
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Feeds one (primary, reference) pair and returns the error, which is
    /// the cleaned primary sample.
    pub fn process(&mut self, primary: f64, reference: f64) -> f64 {
        let n = self.history.len();
        self.head = (self.head + n - 1) % n;
        let old = self.history[self.head];
        self.history[self.head] = reference;
        self.energy = (self.energy + reference * reference - old * old).max(0.0);

        let mut y = 0.0;
        for (i, w) in self.weights.iter().enumerate() {
            y += w * self.history[(self.head + i) % n];
        }
        let e = primary - y;
        if self.energy > 0.0 {
            let g = self.step * e / (EPS + self.energy);
            for (i, w) in self.weights.iter_mut().enumerate() {
                *w += g * self.history[(self.head + i) % n];
            }
        }
        e
    }
}

/// Removes the part of the stethoscope channel that is predictable from
/// the ambient reference (64 taps, normalized step 0.1).
pub fn cancel_noise(stethoscope: &TimeSeries, ambient: &TimeSeries) -> Result<TimeSeries, AnalysisError> {
    cancel_noise_with(stethoscope, ambient, NLMS_TAPS, NLMS_STEP)
}

pub fn cancel_noise_with(
    stethoscope: &TimeSeries,
    ambient: &TimeSeries,
    taps: usize,
    step: f64,
) -> Result<TimeSeries, AnalysisError> {
    if stethoscope.len() != ambient.len() {
        return Err(AnalysisError::LengthMismatch { a: stethoscope.len(), b: ambient.len() });
    }
    if stethoscope.rate_hz != ambient.rate_hz {
        return Err(AnalysisError::RateMismatch { a: stethoscope.rate_hz, b: ambient.rate_hz });
    }
    let mut f = Nlms::new(taps, step);
    let out = stethoscope.samples.iter().zip(&ambient.samples).map(|(&d, &x)| f.process(d, x)).collect();
    Ok(stethoscope.with_samples(out))
}
