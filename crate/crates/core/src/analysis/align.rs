use std::str::FromStr;

use super::channels::Channel;
use super::AnalysisError;
use crate::codec::Session;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AlignMode {
    /// Latest sample at or before the frame time.
    Hold,
    /// Straight line between the neighbouring samples; past the last sample
    /// the last value is held.
    Linear,
}

impl FromStr for AlignMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "hold" => Ok(AlignMode::Hold),
            "linear" => Ok(AlignMode::Linear),
            _ => Err(format!("unknown alignment mode '{s}' (hold|linear)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlignedFrame {
    pub t_us: u64,
    /// One slot per [`Alignment::channels`] entry.
    pub values: Vec<Option<f64>>,
    /// Timestamp of the sample each value was taken from. In linear mode this
    /// is the left neighbour.
    pub source_us: Vec<Option<u64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Alignment {
    pub channels: Vec<Channel>,
    /// Record rate of each channel.
    pub rates_hz: Vec<f64>,
    pub frames: Vec<AlignedFrame>,
}

impl Alignment {
    pub fn column(&self, ch: Channel) -> Option<usize> {
        self.channels.iter().position(|&c| c == ch)
    }
}

struct Track {
    times: Vec<u64>,
    values: Vec<f64>,
}

/// Resamples every record channel of a session onto one uniform grid.
///
/// Frame `k` sits at `round(k · 1e6 / target_rate_hz)` µs and frames cover
/// the session up to the end of its longest channel. Audio is not included;
/// it is already sample-aligned to session time zero.
pub fn align_streams(session: &Session, target_rate_hz: f64, mode: AlignMode) -> Result<Alignment, AnalysisError> {
    let cfg = session.header.config;
    let channels: Vec<Channel> = Channel::ALL.into_iter().filter(|c| c.enabled_in(&cfg)).collect();
    let mut tracks: Vec<Track> = channels.iter().map(|_| Track { times: Vec::new(), values: Vec::new() }).collect();
    for r in &session.records {
        for (ch, tr) in channels.iter().zip(tracks.iter_mut()) {
            if let Some(v) = ch.value(r) {
                tr.times.push(r.timestamp_us);
                tr.values.push(v);
            }
        }
    }
    let rates_hz: Vec<f64> = channels.iter().map(|c| cfg.channel(c.sensor()).unwrap().rate_hz as f64).collect();
    if tracks.iter().all(|t| t.times.is_empty()) {
        return Err(AnalysisError::EmptySession);
    }
    let max_rate = rates_hz.iter().cloned().fold(0.0, f64::max);
    if !(target_rate_hz > 0.0 && target_rate_hz <= max_rate) {
        return Err(AnalysisError::BadRate(target_rate_hz));
    }

    // end of the last sample period of any channel
    let end_us = tracks
        .iter()
        .zip(&rates_hz)
        .filter_map(|(t, &rate)| t.times.last().map(|&last| last as f64 + 1e6 / rate))
        .fold(0.0, f64::max);
    let n_frames = (end_us * target_rate_hz / 1e6 - 1e-9).ceil().max(1.0) as usize;

    let mut cursors = vec![0usize; tracks.len()];
    let mut frames = Vec::with_capacity(n_frames);
    for k in 0..n_frames {
        let t_us = (k as f64 * 1e6 / target_rate_hz).round() as u64;
        let mut values = Vec::with_capacity(tracks.len());
        let mut source_us = Vec::with_capacity(tracks.len());
        for (tr, cur) in tracks.iter().zip(cursors.iter_mut()) {
            while *cur < tr.times.len() && tr.times[*cur] <= t_us {
                *cur += 1;
            }
            // samples [0, cur) are at or before t
            if *cur == 0 {
                values.push(None);
                source_us.push(None);
                continue;
            }
            let i = *cur - 1;
            let v = match mode {
                AlignMode::Hold => tr.values[i],
                AlignMode::Linear if i + 1 < tr.times.len() => {
                    let (t0, t1) = (tr.times[i] as f64, tr.times[i + 1] as f64);
                    let w = (t_us as f64 - t0) / (t1 - t0);
                    tr.values[i] + w * (tr.values[i + 1] - tr.values[i])
                }
                AlignMode::Linear => tr.values[i],
            };
            values.push(Some(v));
            source_us.push(Some(tr.times[i]));
        }
        frames.push(AlignedFrame { t_us, values, source_us });
    }
    Ok(Alignment { channels, rates_hz, frames })
}
