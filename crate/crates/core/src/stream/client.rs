//! Monitoring side of the streaming protocol.

use std::collections::{BTreeMap, VecDeque};
use std::io::{self, Read, Write};
use std::thread;
use std::time::Duration;

use crossbeam_channel::{bounded, Receiver, RecvTimeoutError};
use thiserror::Error;

use super::command::{Command, ErrorCode, Subscription};
use super::notify::Reassembler;
use super::packet::{frame, DeframeItem, Deframer, Packet, PacketType};
use super::transport::Connection;
use crate::analysis::{detect_r_peaks, heart_rate, Channel};
use crate::config::SensorConfig;
use crate::series::{TimeSeries, Unit};
use crate::types::{SensorId, SensorRecord};

/// ECG history the rolling heart rate is computed over.
pub const HR_WINDOW_S: f64 = 10.0;
/// Stream time between rolling updates.
pub const UPDATE_PERIOD_S: f64 = 1.0;

#[derive(Debug, Clone)]
pub struct MonitorOptions {
    pub subscription: Subscription,
    /// Sent before START when set.
    pub config: Option<SensorConfig>,
    /// Longest silence tolerated from the server.
    pub timeout: Duration,
    /// Send STOP after this much stream time. Otherwise run until the
    /// server hangs up.
    pub max_stream_s: Option<f64>,
    /// Keep every decoded record in the summary.
    pub keep_records: bool,
}

impl Default for MonitorOptions {
    fn default() -> Self {
        MonitorOptions {
            subscription: Subscription::ALL,
            config: None,
            timeout: Duration::from_secs(5),
            max_stream_s: None,
            keep_records: false,
        }
    }
}

/// Rolling state handed to the caller once per update period.
#[derive(Debug, Clone, PartialEq)]
pub struct MonitorUpdate {
    /// Time since the first record.
    pub stream_time_s: f64,
    pub hr_bpm: Option<f64>,
    pub counts: BTreeMap<SensorId, u64>,
    pub dropped: u64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct MonitorSummary {
    pub records: Vec<SensorRecord>,
    pub counts: BTreeMap<SensorId, u64>,
    pub notify_packets: u64,
    /// NOTIFY packets missing from the sequence.
    pub dropped: u64,
    pub crc_errors: u64,
    /// Payloads that did not decode to a record.
    pub bad_records: u64,
    /// Last rolling heart rate.
    pub hr_bpm: Option<f64>,
    /// (stream time s, bpm) at each update that had enough ECG.
    pub hr_history: Vec<(f64, f64)>,
}

impl MonitorSummary {
    pub fn total_records(&self) -> u64 {
        self.counts.values().sum()
    }
}

#[derive(Debug, Error)]
pub enum MonitorError {
    #[error("no reply from server within {0:?}")]
    Timeout(Duration),
    #[error("protocol violation: {0}")]
    ProtocolViolation(String),
    #[error("transport: {0}")]
    Transport(#[from] io::Error),
    #[error("server rejected opcode 0x{opcode:02x}: {code:?}")]
    CommandRejected { opcode: u8, code: ErrorCode },
    #[error("server closed the connection before answering")]
    Closed,
}

/// Subscribes, starts the stream and decodes it until the server hangs up
/// or `max_stream_s` of stream time has passed. `on_update` runs once per
/// second of stream time.
pub fn client_monitor(
    conn: Connection,
    opts: &MonitorOptions,
    on_update: impl FnMut(&MonitorUpdate),
) -> Result<MonitorSummary, MonitorError> {
    let Connection { reader, writer, closer } = conn;
    let (tx, rx) = bounded(1024);
    let reader_thread = thread::spawn(move || {
        let mut reader: Box<dyn Read + Send> = reader;
        let mut deframer = Deframer::new();
        let mut buf = [0u8; 4096];
        while let Ok(n @ 1..) = reader.read(&mut buf) {
            deframer.push(&buf[..n]);
            for item in deframer.by_ref() {
                if tx.send(item).is_err() {
                    return;
                }
            }
        }
        deframer.finish();
        for item in deframer {
            if tx.send(item).is_err() {
                return;
            }
        }
    });
    let mut client =
        Client { writer, rx, timeout: opts.timeout, seq: 0, state: Decoder::new(opts.keep_records, on_update) };
    let result = client.session(opts);
    closer();
    drop(client.rx);
    let _ = reader_thread.join();
    result.map(|_| client.state.finish())
}

struct Client<F> {
    writer: Box<dyn Write + Send>,
    rx: Receiver<DeframeItem>,
    timeout: Duration,
    seq: u16,
    state: Decoder<F>,
}

impl<F: FnMut(&MonitorUpdate)> Client<F> {
    fn session(&mut self, opts: &MonitorOptions) -> Result<(), MonitorError> {
        self.command(Command::Subscribe(opts.subscription))?;
        if let Some(cfg) = opts.config {
            self.command(Command::SetConfig(cfg))?;
        }
        self.command(Command::Start)?;
        let limit_us = opts.max_stream_s.map(|s| (s * 1e6) as u64);
        loop {
            if limit_us.is_some_and(|l| self.state.stream_time_us() >= l) {
                return self.command(Command::Stop);
            }
            match self.next()? {
                Some(p) => self.unsolicited(p)?,
                None => return Ok(()),
            }
        }
    }

    /// Next packet, or `None` when the server has hung up.
    fn next(&mut self) -> Result<Option<Packet>, MonitorError> {
        loop {
            match self.rx.recv_timeout(self.timeout) {
                Ok(DeframeItem::Packet(p)) => return Ok(Some(p)),
                Ok(DeframeItem::CrcError) => self.state.summary.crc_errors += 1,
                Err(RecvTimeoutError::Timeout) => return Err(MonitorError::Timeout(self.timeout)),
                Err(RecvTimeoutError::Disconnected) => return Ok(None),
            }
        }
    }

    fn unsolicited(&mut self, p: Packet) -> Result<(), MonitorError> {
        match p.kind {
            PacketType::Notify => {
                self.state.notify(p.seq, &p.payload);
                Ok(())
            }
            PacketType::Ack | PacketType::Err => {
                Err(MonitorError::ProtocolViolation(format!("reply to seq {} that was never sent", p.seq)))
            }
            PacketType::Cmd => Err(MonitorError::ProtocolViolation("command sent by server".into())),
            PacketType::Unknown(t) => Err(MonitorError::ProtocolViolation(format!("unknown packet type 0x{t:02x}"))),
        }
    }

    fn command(&mut self, cmd: Command) -> Result<(), MonitorError> {
        let seq = self.seq;
        self.seq = seq.wrapping_add(1);
        let bytes = frame(PacketType::Cmd, seq, &cmd.encode()).map_err(io::Error::other)?;
        self.writer.write_all(&bytes)?;
        self.writer.flush()?;
        loop {
            let p = self.next()?.ok_or(MonitorError::Closed)?;
            match p.kind {
                PacketType::Ack if p.seq == seq => return Ok(()),
                PacketType::Err if p.seq == seq => {
                    let code = ErrorCode::from_u8(p.payload.first().copied().unwrap_or(0));
                    return Err(MonitorError::CommandRejected { opcode: cmd.opcode(), code });
                }
                _ => self.unsolicited(p)?,
            }
        }
    }
}

struct Decoder<F> {
    summary: MonitorSummary,
    keep: bool,
    reassembler: Reassembler,
    expected_seq: Option<u16>,
    first_us: Option<u64>,
    latest_us: u64,
    next_update_us: u64,
    ecg: VecDeque<(u64, f64)>,
    on_update: F,
}

impl<F: FnMut(&MonitorUpdate)> Decoder<F> {
    fn new(keep: bool, on_update: F) -> Self {
        Decoder {
            summary: MonitorSummary::default(),
            keep,
            reassembler: Reassembler::new(),
            expected_seq: None,
            first_us: None,
            latest_us: 0,
            next_update_us: 0,
            ecg: VecDeque::new(),
            on_update,
        }
    }

    fn stream_time_us(&self) -> u64 {
        self.first_us.map_or(0, |f| self.latest_us - f)
    }

    fn notify(&mut self, seq: u16, payload: &[u8]) {
        self.summary.notify_packets += 1;
        if let Some(want) = self.expected_seq {
            let gap = seq.wrapping_sub(want);
            if gap != 0 {
                self.summary.dropped += u64::from(gap);
                self.reassembler.reset();
            }
        }
        self.expected_seq = Some(seq.wrapping_add(1));
        match self.reassembler.push(payload) {
            Ok(Some(rec)) => self.record(rec),
            Ok(None) => {}
            Err(_) => self.summary.bad_records += 1,
        }
    }

    fn record(&mut self, rec: SensorRecord) {
        let t = rec.timestamp_us;
        if self.first_us.is_none() {
            self.first_us = Some(t);
            self.next_update_us = t + (UPDATE_PERIOD_S * 1e6) as u64;
        }
        // records arrive in time order, so everything before the boundary is in
        while t >= self.next_update_us {
            self.update();
            self.next_update_us += (UPDATE_PERIOD_S * 1e6) as u64;
        }
        self.latest_us = self.latest_us.max(t);
        *self.summary.counts.entry(rec.sensor_id).or_default() += 1;
        if let Some(mv) = Channel::Ecg.value(&rec) {
            self.ecg.push_back((t, mv));
            let horizon = t.saturating_sub((HR_WINDOW_S * 1e6) as u64);
            while self.ecg.front().is_some_and(|&(s, _)| s < horizon) {
                self.ecg.pop_front();
            }
        }
        if self.keep {
            self.summary.records.push(rec);
        }
    }

    fn update(&mut self) {
        let hr = rolling_hr(&self.ecg);
        let stream_time_s = (self.next_update_us - self.first_us.unwrap_or(0)) as f64 / 1e6;
        if let Some(bpm) = hr {
            self.summary.hr_bpm = Some(bpm);
            self.summary.hr_history.push((stream_time_s, bpm));
        }
        let update = MonitorUpdate {
            stream_time_s,
            hr_bpm: hr,
            counts: self.summary.counts.clone(),
            dropped: self.summary.dropped,
        };
        (self.on_update)(&update);
    }

    fn finish(mut self) -> MonitorSummary {
        if !self.ecg.is_empty() {
            if let Some(bpm) = rolling_hr(&self.ecg) {
                self.summary.hr_bpm = Some(bpm);
            }
        }
        self.summary
    }
}

/// Heart rate over the buffered ECG. The sample rate is taken from the
/// median timestamp step.
fn rolling_hr(ecg: &VecDeque<(u64, f64)>) -> Option<f64> {
    if ecg.len() < 16 {
        return None;
    }
    let mut steps: Vec<u64> = ecg.iter().zip(ecg.iter().skip(1)).map(|(a, b)| b.0 - a.0).collect();
    steps.sort_unstable();
    let step = steps[steps.len() / 2];
    if step == 0 {
        return None;
    }
    let series = TimeSeries::new(ecg[0].0, 1e6 / step as f64, Unit::Millivolts, ecg.iter().map(|s| s.1).collect());
    let peaks = detect_r_peaks(&series).ok()?;
    heart_rate(&peaks).ok().map(|h| h.mean_bpm)
}
