//! Small DSP toolbox shared by the simulator and the analysis code:
//! Butterworth biquad cascades, zero-phase filtering, Welch PSD and a few
//! signal statistics.

use std::f64::consts::PI;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

/// Direct form II transposed biquad.
#[derive(Debug, Clone, Copy)]
pub struct Biquad {
    b0: f64,
    b1: f64,
    b2: f64,
    a1: f64,
    a2: f64,
    z1: f64,
    z2: f64,
}

impl Biquad {
    fn normalized(b: [f64; 3], a: [f64; 3]) -> Self {
        Biquad { b0: b[0] / a[0], b1: b[1] / a[0], b2: b[2] / a[0], a1: a[1] / a[0], a2: a[2] / a[0], z1: 0.0, z2: 0.0 }
    }

    pub fn lowpass(fs: f64, fc: f64, q: f64) -> Self {
        let w0 = 2.0 * PI * fc / fs;
        let (s, c) = w0.sin_cos();
        let alpha = s / (2.0 * q);
        Biquad::normalized([(1.0 - c) / 2.0, 1.0 - c, (1.0 - c) / 2.0], [1.0 + alpha, -2.0 * c, 1.0 - alpha])
    }

    pub fn highpass(fs: f64, fc: f64, q: f64) -> Self {
        let w0 = 2.0 * PI * fc / fs;
        let (s, c) = w0.sin_cos();
        let alpha = s / (2.0 * q);
        Biquad::normalized([(1.0 + c) / 2.0, -(1.0 + c), (1.0 + c) / 2.0], [1.0 + alpha, -2.0 * c, 1.0 - alpha])
    }

    #[inline]
    pub fn process(&mut self, x: f64) -> f64 {
        let y = self.b0 * x + self.z1;
        self.z1 = self.b1 * x - self.a1 * y + self.z2;
        self.z2 = self.b2 * x - self.a2 * y;
        y
    }

    pub fn reset(&mut self) {
        self.z1 = 0.0;
        self.z2 = 0.0;
    }

    /// Puts the state where a constant input `x` would have left it and
    /// returns the matching constant output.
    fn settle_to(&mut self, x: f64) -> f64 {
        let y = x * (self.b0 + self.b1 + self.b2) / (1.0 + self.a1 + self.a2);
        self.z1 = y - self.b0 * x;
        self.z2 = self.b2 * x - self.a2 * y;
        y
    }
}

/// Q of each second-order section of an even-order Butterworth filter.
fn butterworth_qs(order: usize) -> impl Iterator<Item = f64> {
    assert!(order >= 2 && order.is_multiple_of(2), "Butterworth order must be even");
    (0..order / 2).map(move |k| 1.0 / (2.0 * (PI * (2 * k + 1) as f64 / (2 * order) as f64).sin()))
}

/// Cascade of biquads.
#[derive(Debug, Clone)]
pub struct Cascade {
    sections: Vec<Biquad>,
    /// Rough settling length, used as the reflection pad for zero-phase runs.
    settle: usize,
}

impl Cascade {
    pub fn identity() -> Self {
        Cascade { sections: Vec::new(), settle: 0 }
    }

    pub fn butter_lowpass(fs: f64, fc: f64, order: usize) -> Self {
        let sections = butterworth_qs(order).map(|q| Biquad::lowpass(fs, fc, q)).collect();
        Cascade { sections, settle: (3.0 * fs / fc).ceil() as usize }
    }

    pub fn butter_highpass(fs: f64, fc: f64, order: usize) -> Self {
        let sections = butterworth_qs(order).map(|q| Biquad::highpass(fs, fc, q)).collect();
        Cascade { sections, settle: (3.0 * fs / fc).ceil() as usize }
    }

    /// Highpass at `lo` followed by lowpass at `hi`. A lowpass at or above
    /// 0.45·fs is dropped since it would sit on top of Nyquist.
    pub fn butter_bandpass(fs: f64, lo: f64, hi: f64, order: usize) -> Self {
        let mut c = Cascade::butter_highpass(fs, lo, order);
        if hi < 0.45 * fs {
            c = c.then(Cascade::butter_lowpass(fs, hi, order));
        }
        c
    }

    pub fn then(mut self, other: Cascade) -> Self {
        self.settle = self.settle.max(other.settle);
        self.sections.extend(other.sections);
        self
    }

    pub fn reset(&mut self) {
        self.sections.iter_mut().for_each(Biquad::reset);
    }

    fn settle_to(&mut self, x: f64) {
        self.sections.iter_mut().fold(x, |acc, s| s.settle_to(acc));
    }

    #[inline]
    pub fn process(&mut self, x: f64) -> f64 {
        self.sections.iter_mut().fold(x, |acc, s| s.process(acc))
    }

    /// Causal run from rest.
    pub fn filter(&self, x: &[f64]) -> Vec<f64> {
        let mut c = self.clone();
        c.reset();
        x.iter().map(|&v| c.process(v)).collect()
    }

    /// Forward-backward (zero-phase) run with odd reflection padding at
    /// both ends. The magnitude response is squared.
    pub fn filtfilt(&self, x: &[f64]) -> Vec<f64> {
        if x.is_empty() {
            return Vec::new();
        }
        let n = x.len();
        let pad = self.settle.min(n - 1);
        let mut ext = Vec::with_capacity(n + 2 * pad);
        let (first, last) = (x[0], x[n - 1]);
        ext.extend((1..=pad).rev().map(|i| 2.0 * first - x[i]));
        ext.extend_from_slice(x);
        ext.extend((1..=pad).map(|i| 2.0 * last - x[n - 1 - i]));

        // start each pass in the steady state for its first sample, so a
        // constant input produces no start-up transient
        let mut c = self.clone();
        c.settle_to(ext[0]);
        for v in ext.iter_mut() {
            *v = c.process(*v);
        }
        c.settle_to(*ext.last().unwrap());
        for v in ext.iter_mut().rev() {
            *v = c.process(*v);
        }
        ext[pad..pad + n].to_vec()
    }
}

pub fn mean(x: &[f64]) -> f64 {
    if x.is_empty() {
        0.0
    } else {
        x.iter().sum::<f64>() / x.len() as f64
    }
}

pub fn power(x: &[f64]) -> f64 {
    if x.is_empty() {
        0.0
    } else {
        x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64
    }
}

pub fn rms(x: &[f64]) -> f64 {
    power(x).sqrt()
}

/// RMS relative to full scale 1.0, in dB.
pub fn dbfs(x: &[f64]) -> f64 {
    20.0 * rms(x).log10()
}

pub fn db_to_amplitude(db: f64) -> f64 {
    10f64.powf(db / 20.0)
}

/// Removes the least-squares line.
pub fn detrend(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    if n < 2 {
        return vec![0.0; n];
    }
    let nf = n as f64;
    let tm = (nf - 1.0) / 2.0;
    let ym = mean(x);
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (i, &y) in x.iter().enumerate() {
        let dt = i as f64 - tm;
        sxy += dt * (y - ym);
        sxx += dt * dt;
    }
    let slope = sxy / sxx;
    x.iter().enumerate().map(|(i, &y)| y - ym - slope * (i as f64 - tm)).collect()
}

pub fn hann(n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![1.0];
    }
    (0..n).map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / n as f64).cos()).collect()
}

/// One-sided power spectral density.
#[derive(Debug, Clone)]
pub struct Psd {
    /// Bin spacing in Hz.
    pub df: f64,
    pub power: Vec<f64>,
    pub segments: usize,
}

impl Psd {
    pub fn freq(&self, bin: usize) -> f64 {
        bin as f64 * self.df
    }

    /// Bin range covering `[lo, hi]` Hz, clipped to the spectrum.
    pub fn band(&self, lo: f64, hi: f64) -> std::ops::RangeInclusive<usize> {
        let first = (lo / self.df).ceil().max(0.0) as usize;
        let last = ((hi / self.df).floor() as usize).min(self.power.len().saturating_sub(1));
        first..=last
    }
}

/// Welch PSD: Hann-windowed segments of `seg_len` samples at 50 % overlap,
/// each zero-padded to `nfft`, averaged. Each segment is linearly detrended.
pub fn welch(x: &[f64], fs: f64, seg_len: usize, nfft: usize) -> Psd {
    let seg_len = seg_len.min(x.len()).max(1);
    let nfft = nfft.max(seg_len);
    let hop = (seg_len / 2).max(1);
    let window = hann(seg_len);
    let wpow: f64 = window.iter().map(|w| w * w).sum();
    let fft = FftPlanner::new().plan_fft_forward(nfft);
    let nbins = nfft / 2 + 1;
    let mut acc = vec![0.0; nbins];
    let mut buf = vec![Complex::new(0.0, 0.0); nfft];
    let mut segments = 0;
    let mut start = 0;
    while start + seg_len <= x.len() {
        let seg = detrend(&x[start..start + seg_len]);
        for (i, b) in buf.iter_mut().enumerate() {
            *b = if i < seg_len { Complex::new(seg[i] * window[i], 0.0) } else { Complex::new(0.0, 0.0) };
        }
        fft.process(&mut buf);
        for (k, a) in acc.iter_mut().enumerate() {
            *a += buf[k].norm_sqr();
        }
        segments += 1;
        start += hop;
    }
    let scale = 1.0 / (fs * wpow * segments.max(1) as f64);
    for (k, a) in acc.iter_mut().enumerate() {
        *a *= scale;
        if k != 0 && !(nfft.is_multiple_of(2) && k == nfft / 2) {
            *a *= 2.0;
        }
    }
    Psd { df: fs / nfft as f64, power: acc, segments }
}

/// Amplitude of the sinusoidal component at exactly `freq` Hz, by
/// projection onto sine and cosine.
pub fn tone_amplitude(x: &[f64], fs: f64, freq: f64) -> f64 {
    let (mut re, mut im) = (0.0, 0.0);
    for (i, &v) in x.iter().enumerate() {
        let ph = 2.0 * PI * freq * i as f64 / fs;
        re += v * ph.cos();
        im += v * ph.sin();
    }
    2.0 * (re * re + im * im).sqrt() / x.len() as f64
}

/// Normalized cross-correlation `sum x[n + lag] y[n]` for lags in
/// `-max_lag..=max_lag`, returned in that order.
pub fn xcorr(x: &[f64], y: &[f64], max_lag: usize) -> Vec<f64> {
    let n = x.len().min(y.len());
    let norm = (x[..n].iter().map(|v| v * v).sum::<f64>() * y[..n].iter().map(|v| v * v).sum::<f64>()).sqrt();
    let lags = -(max_lag as isize)..=(max_lag as isize);
    lags.map(|lag| {
        if norm == 0.0 {
            return 0.0;
        }
        let mut s = 0.0;
        for (j, &yv) in y[..n].iter().enumerate() {
            let i = j as isize + lag;
            if i >= 0 && (i as usize) < n {
                s += x[i as usize] * yv;
            }
        }
        s / norm
    })
    .collect()
}

/// Fraction of energy above `cutoff_hz` in a single full-length periodogram.
pub fn energy_fraction_above(x: &[f64], fs: f64, cutoff_hz: f64) -> f64 {
    let n = x.len();
    let fft = FftPlanner::new().plan_fft_forward(n);
    let mut buf: Vec<Complex<f64>> = x.iter().map(|&v| Complex::new(v, 0.0)).collect();
    fft.process(&mut buf);
    let (mut total, mut above) = (0.0, 0.0);
    for (k, c) in buf.iter().enumerate().take(n / 2 + 1) {
        let e = c.norm_sqr();
        total += e;
        if k as f64 * fs / n as f64 > cutoff_hz {
            above += e;
        }
    }
    if total == 0.0 {
        0.0
    } else {
        above / total
    }
}
