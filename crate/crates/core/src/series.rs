//! Uniformly sampled channel data.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Unit {
    Millivolts,
    Counts,
    G,
    Dps,
    /// Arbitrary acoustic pressure units.
    Pascal,
    /// Dimensionless, full scale = 1.
    Normalized,
}

impl Unit {
    pub fn symbol(self) -> &'static str {
        match self {
            Unit::Millivolts => "mV",
            Unit::Counts => "counts",
            Unit::G => "g",
            Unit::Dps => "dps",
            Unit::Pascal => "Pa",
            Unit::Normalized => "FS",
        }
    }
}

/// Sample `k` sits at `start_us + k * 1e6 / rate_hz`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    pub start_us: u64,
    pub rate_hz: f64,
    pub unit: Unit,
    pub samples: Vec<f64>,
}

impl TimeSeries {
    pub fn new(start_us: u64, rate_hz: f64, unit: Unit, samples: Vec<f64>) -> Self {
        assert!(rate_hz > 0.0 && rate_hz.is_finite(), "sample rate must be positive");
        TimeSeries { start_us, rate_hz, unit, samples }
    }

    pub fn zeros(rate_hz: f64, unit: Unit, len: usize) -> Self {
        TimeSeries::new(0, rate_hz, unit, vec![0.0; len])
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn period_us(&self) -> f64 {
        1e6 / self.rate_hz
    }

    /// Exact (fractional) time of sample `k` in microseconds.
    pub fn time_us(&self, k: usize) -> f64 {
        self.start_us as f64 + k as f64 * 1e6 / self.rate_hz
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.rate_hz
    }

    /// Same timing, new sample values.
    pub fn with_samples(&self, samples: Vec<f64>) -> Self {
        TimeSeries { samples, ..self.clone() }
    }

    pub fn scaled(&self, k: f64) -> Self {
        self.with_samples(self.samples.iter().map(|v| v * k).collect())
    }
}
