use super::{require, AnalysisError};
use crate::dsp::Cascade;
use crate::series::TimeSeries;

pub const MIN_RATE_HZ: f64 = 100.0;
pub const MIN_DURATION_S: f64 = 3.0;
const REFRACTORY_S: f64 = 0.250;
const MWI_S: f64 = 0.150;
/// Half-width of the window in which a QRS detection is refined to the R
/// apex.
const REFINE_S: f64 = 0.080;

/// Differentiate-square-integrate QRS detector with adaptive signal and
/// noise levels, a 250 ms refractory period and searchback for missed beats.
///
/// Returned times are the R apex, refined to sub-sample precision on the
/// baseline-corrected ECG.
pub fn detect_r_peaks(ecg: &TimeSeries) -> Result<Vec<u64>, AnalysisError> {
    require(ecg, MIN_RATE_HZ, MIN_DURATION_S)?;
    let fs = ecg.rate_hz;
    let x = &ecg.samples;

    let band = Cascade::butter_bandpass(fs, 5.0, 15.0, 2).filtfilt(x);
    let d = derivative(&band, fs);
    let sq: Vec<f64> = d.iter().map(|v| v * v).collect();
    let mwi = moving_average(&sq, ((MWI_S * fs).round() as usize).max(1));

    let peak = mwi.iter().cloned().fold(0.0, f64::max);
    if peak <= 0.0 {
        return Ok(Vec::new());
    }
    let qrs = classify(&mwi, fs);

    let hp = Cascade::butter_highpass(fs, 0.5, 2).filtfilt(x);
    let half = (REFINE_S * fs).round() as usize;
    let mut out: Vec<u64> = Vec::with_capacity(qrs.len());
    for q in qrs {
        let lo = q.saturating_sub(half);
        let hi = (q + half + 1).min(hp.len());
        let k = (lo..hi).max_by(|&a, &b| hp[a].total_cmp(&hp[b])).unwrap();
        let t = ecg.time_us(k) + parabolic_offset(&hp, k) * ecg.period_us();
        let t = t.max(0.0).round() as u64;
        // two detections refined onto the same apex
        if out.last().is_none_or(|&p| t > p) {
            out.push(t);
        }
    }
    Ok(out)
}

/// Five-point centred derivative.
fn derivative(x: &[f64], fs: f64) -> Vec<f64> {
    let n = x.len();
    let at = |i: isize| x[i.clamp(0, n as isize - 1) as usize];
    (0..n as isize).map(|i| (2.0 * at(i + 2) + at(i + 1) - at(i - 1) - 2.0 * at(i - 2)) * fs / 8.0).collect()
}

/// Centred moving average of width `w`.
fn moving_average(x: &[f64], w: usize) -> Vec<f64> {
    let n = x.len();
    let mut prefix = Vec::with_capacity(n + 1);
    prefix.push(0.0);
    for v in x {
        prefix.push(prefix.last().unwrap() + v);
    }
    let before = w / 2;
    let after = w - before;
    (0..n)
        .map(|i| {
            let lo = i.saturating_sub(before);
            let hi = (i + after).min(n);
            (prefix[hi] - prefix[lo]) / w as f64
        })
        .collect()
}

/// Fractional offset of the vertex of the parabola through `k-1, k, k+1`.
pub(crate) fn parabolic_offset(y: &[f64], k: usize) -> f64 {
    if k == 0 || k + 1 >= y.len() {
        return 0.0;
    }
    let (a, b, c) = (y[k - 1], y[k], y[k + 1]);
    let den = a - 2.0 * b + c;
    if den >= 0.0 {
        return 0.0;
    }
    (0.5 * (a - c) / den).clamp(-0.5, 0.5)
}

/// Adaptive-threshold classification of MWI local maxima into QRS
/// complexes. Returns MWI sample indices.
fn classify(mwi: &[f64], fs: f64) -> Vec<usize> {
    let refractory = (REFRACTORY_S * fs).round() as usize;
    let candidates: Vec<usize> =
        (1..mwi.len().saturating_sub(1)).filter(|&i| mwi[i] > mwi[i - 1] && mwi[i] >= mwi[i + 1]).collect();

    // levels learned from the first two seconds
    let learn = ((2.0 * fs) as usize).min(mwi.len());
    let mut spki = 0.25 * mwi[..learn].iter().cloned().fold(0.0, f64::max);
    let mut npki = 0.5 * mwi[..learn].iter().sum::<f64>() / learn as f64;
    let threshold = |spki: f64, npki: f64| npki + 0.25 * (spki - npki);

    let mut qrs: Vec<usize> = Vec::new();
    let mut rr: Vec<usize> = Vec::new();
    let mut last_search = 0usize;
    let mut ci = 0;
    while ci < candidates.len() {
        let i = candidates[ci];
        let thr = threshold(spki, npki);

        // searchback: a gap of 1.66 mean RR means a missed beat
        if let (Some(&last), false) = (qrs.last(), rr.is_empty()) {
            let mean_rr = rr.iter().rev().take(8).sum::<usize>() / rr.len().min(8);
            if i > last + mean_rr * 166 / 100 && last > last_search {
                last_search = last;
                let best = candidates[..ci]
                    .iter()
                    .filter(|&&c| c > last + refractory && mwi[c] > 0.5 * thr)
                    .max_by(|&&a, &&b| mwi[a].total_cmp(&mwi[b]));
                if let Some(&c) = best {
                    rr.push(c - last);
                    qrs.push(c);
                    spki = 0.25 * mwi[c] + 0.75 * spki;
                    continue;
                }
            }
        }

        let v = mwi[i];
        if v > thr && qrs.last().is_none_or(|&last| i >= last + refractory) {
            if let Some(&last) = qrs.last() {
                rr.push(i - last);
            }
            qrs.push(i);
            spki = 0.125 * v + 0.875 * spki;
        } else if v > thr {
            // inside the refractory period: keep the larger of the two
            let last = qrs.last_mut().unwrap();
            if v > mwi[*last] {
                if let Some(r) = rr.last_mut() {
                    *r += i - *last;
                }
                *last = i;
            }
        } else {
            npki = 0.125 * v + 0.875 * npki;
        }
        ci += 1;
    }
    qrs
}

#[derive(Debug, Clone, PartialEq)]
pub struct HeartRate {
    pub mean_bpm: f64,
    /// Instantaneous rate of each interval.
    pub per_interval_bpm: Vec<f64>,
}

pub fn heart_rate(r_times_us: &[u64]) -> Result<HeartRate, AnalysisError> {
    if r_times_us.len() < 2 {
        return Err(AnalysisError::NotEnoughPeaks);
    }
    let per_interval_bpm: Vec<f64> =
        r_times_us.windows(2).map(|w| 60e6 / w[1].saturating_sub(w[0]).max(1) as f64).collect();
    let mean_bpm = per_interval_bpm.iter().sum::<f64>() / per_interval_bpm.len() as f64;
    Ok(HeartRate { mean_bpm, per_interval_bpm })
}
