//! Device side of the streaming protocol.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{self, BufWriter, Read, Write};
use std::path::PathBuf;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::thread::{self, JoinHandle};
use std::time::{Duration, Instant};

use crossbeam_channel::{bounded, never, select, Receiver, Sender};

use super::command::{Command, ErrorCode, Subscription};
use super::notify::fragment;
use super::packet::{frame, DeframeItem, Deframer, PacketType};
use super::transport::Connection;
use crate::codec::{RecordWriter, Session, SessionHeader};
use crate::config::{validate_config, ValidatedConfig};
use crate::profile::PhysioProfile;
use crate::sim::{generate_session, SESSION_EPOCH_US};
use crate::types::{SensorId, SensorRecord};

/// Records buffered between the producer and the sender. A full queue
/// blocks the producer; nothing is dropped on the server side.
pub const QUEUE_CAPACITY: usize = 256;

pub enum Source {
    /// Simulated on START from the current configuration. Audio is never
    /// streamed.
    Live { profile: PhysioProfile, duration_s: f64, seed: u64 },
    /// A recorded session, sent from its first record on every START.
    Replay(Session),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Pacing {
    /// As fast as the transport takes them.
    Unpaced,
    /// Record timestamps against a monotonic clock.
    RealTime,
    /// Real time sped up by the given factor.
    Speed(f64),
}

impl Pacing {
    fn speed(self) -> Option<f64> {
        match self {
            Pacing::Unpaced => None,
            Pacing::RealTime => Some(1.0),
            Pacing::Speed(s) => Some(s),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ServeOptions {
    pub pacing: Pacing,
    pub queue_capacity: usize,
    /// Also log every produced record to this `.pks` file, whatever the
    /// subscription. Rewritten on each START.
    pub log: Option<PathBuf>,
}

impl Default for ServeOptions {
    fn default() -> Self {
        ServeOptions { pacing: Pacing::RealTime, queue_capacity: QUEUE_CAPACITY, log: None }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ServeStats {
    pub commands: u64,
    pub acks: u64,
    pub errors: u64,
    pub crc_errors: u64,
    pub notify_packets: u64,
    pub bytes_sent: u64,
    pub records_sent: BTreeMap<SensorId, u64>,
    pub records_logged: u64,
    /// The source ran to its end, after which the server hung up.
    pub completed: bool,
    pub transport_error: Option<String>,
    pub log_error: Option<String>,
}

impl ServeStats {
    pub fn total_records(&self) -> u64 {
        self.records_sent.values().sum()
    }
}

struct Run {
    rx: Receiver<SensorRecord>,
    cancel: Arc<AtomicBool>,
    handle: JoinHandle<Result<u64, String>>,
}

impl Run {
    fn stop(self, stats: &mut ServeStats) {
        let Run { rx, cancel, handle } = self;
        cancel.store(true, Ordering::Relaxed);
        drop(rx);
        Self::finish(handle, stats);
    }

    fn join(self, stats: &mut ServeStats) {
        Self::finish(self.handle, stats);
    }

    fn finish(handle: JoinHandle<Result<u64, String>>, stats: &mut ServeStats) {
        match handle.join() {
            Ok(Ok(n)) => stats.records_logged += n,
            Ok(Err(e)) => stats.log_error = Some(e),
            Err(_) => stats.log_error = Some("producer panicked".into()),
        }
    }
}

struct Server<'a> {
    source: Arc<Source>,
    cfg: ValidatedConfig,
    opts: &'a ServeOptions,
    writer: Box<dyn Write + Send>,
    subscription: Subscription,
    notify_seq: u16,
    stats: ServeStats,
}

/// Serves one connection until the client hangs up, the transport fails,
/// or a started source runs out.
pub fn serve(source: Source, conn: Connection, cfg: ValidatedConfig, opts: &ServeOptions) -> ServeStats {
    let Connection { reader, writer, closer } = conn;
    let (cmd_tx, cmd_rx) = bounded(64);
    let reader_thread = thread::spawn(move || read_items(reader, cmd_tx));
    let mut server = Server {
        source: Arc::new(source),
        cfg,
        opts,
        writer,
        subscription: Subscription::default(),
        notify_seq: 0,
        stats: ServeStats::default(),
    };
    let mut run: Option<Run> = None;
    loop {
        let rec_rx = run.as_ref().map_or_else(never, |r| r.rx.clone());
        let step = select! {
            recv(cmd_rx) -> item => match item {
                Ok(DeframeItem::Packet(p)) if p.kind == PacketType::Cmd => server.command(p.seq, &p.payload, &mut run),
                Ok(DeframeItem::Packet(_)) => Ok(true),
                Ok(DeframeItem::CrcError) => {
                    server.stats.crc_errors += 1;
                    Ok(true)
                }
                Err(_) => Ok(false),
            },
            recv(rec_rx) -> rec => match rec {
                Ok(rec) => server.notify(&rec).map(|_| true),
                Err(_) => {
                    run.take().unwrap().join(&mut server.stats);
                    server.stats.completed = true;
                    Ok(false)
                }
            },
        };
        match step {
            Ok(true) => {}
            Ok(false) => break,
            Err(e) => {
                server.stats.transport_error = Some(e.to_string());
                break;
            }
        }
    }
    if let Some(r) = run.take() {
        r.stop(&mut server.stats);
    }
    let _ = server.writer.flush();
    closer();
    let _ = reader_thread.join();
    server.stats
}

fn read_items(mut reader: Box<dyn Read + Send>, tx: Sender<DeframeItem>) {
    let mut deframer = Deframer::new();
    let mut buf = [0u8; 4096];
    loop {
        let n = match reader.read(&mut buf) {
            Ok(0) | Err(_) => break,
            Ok(n) => n,
        };
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
}

impl Server<'_> {
    fn send(&mut self, kind: PacketType, seq: u16, payload: &[u8]) -> io::Result<()> {
        let bytes = frame(kind, seq, payload).map_err(io::Error::other)?;
        self.writer.write_all(&bytes)?;
        self.writer.flush()?;
        self.stats.bytes_sent += bytes.len() as u64;
        Ok(())
    }

    fn ack(&mut self, seq: u16) -> io::Result<bool> {
        self.stats.acks += 1;
        self.send(PacketType::Ack, seq, &[]).map(|_| true)
    }

    fn err(&mut self, seq: u16, code: ErrorCode, opcode: u8) -> io::Result<bool> {
        self.stats.errors += 1;
        self.send(PacketType::Err, seq, &[code.as_u8(), opcode]).map(|_| true)
    }

    /// Returns whether to keep serving.
    fn command(&mut self, seq: u16, payload: &[u8], run: &mut Option<Run>) -> io::Result<bool> {
        self.stats.commands += 1;
        let opcode = payload.first().copied().unwrap_or(0);
        let cmd = match Command::decode(payload) {
            Ok(c) => c,
            Err(e) => return self.err(seq, e.code(), opcode),
        };
        match cmd {
            Command::SetConfig(_) | Command::Start if run.is_some() => self.err(seq, ErrorCode::IllegalState, opcode),
            Command::SetConfig(cfg) => match validate_config(cfg) {
                Ok(v) => {
                    self.cfg = v;
                    self.ack(seq)
                }
                Err(_) => self.err(seq, ErrorCode::BadPayload, opcode),
            },
            Command::Start => {
                *run = Some(self.start());
                self.ack(seq)
            }
            Command::Stop => {
                if let Some(r) = run.take() {
                    r.stop(&mut self.stats);
                }
                self.ack(seq)
            }
            Command::Subscribe(m) => {
                self.subscription.0 |= m.0;
                self.ack(seq)
            }
            Command::Unsubscribe(m) => {
                self.subscription.0 &= !m.0;
                self.ack(seq)
            }
        }
    }

    fn start(&self) -> Run {
        let (tx, rx) = bounded(self.opts.queue_capacity.max(1));
        let cancel = Arc::new(AtomicBool::new(false));
        let job = Producer {
            source: self.source.clone(),
            cfg: self.cfg,
            speed: self.opts.pacing.speed(),
            log: self.opts.log.clone(),
            cancel: cancel.clone(),
        };
        let handle = thread::spawn(move || job.run(tx));
        Run { rx, cancel, handle }
    }

    fn notify(&mut self, rec: &SensorRecord) -> io::Result<()> {
        if !self.subscription.contains(rec.sensor_id) {
            return Ok(());
        }
        let parts = fragment(rec).map_err(io::Error::other)?;
        for p in parts {
            let seq = self.notify_seq;
            self.notify_seq = seq.wrapping_add(1);
            self.send(PacketType::Notify, seq, &p)?;
            self.stats.notify_packets += 1;
        }
        *self.stats.records_sent.entry(rec.sensor_id).or_default() += 1;
        Ok(())
    }
}

struct Producer {
    source: Arc<Source>,
    cfg: ValidatedConfig,
    speed: Option<f64>,
    log: Option<PathBuf>,
    cancel: Arc<AtomicBool>,
}

impl Producer {
    /// Feeds records into the queue. Returns how many were logged.
    fn run(self, tx: Sender<SensorRecord>) -> Result<u64, String> {
        let generated;
        let (header, records) = match &*self.source {
            Source::Replay(s) => (s.header, &s.records),
            Source::Live { profile, duration_s, seed } => {
                let mut cfg = self.cfg.into_inner();
                cfg.audio.enabled = false;
                let cfg = validate_config(cfg).map_err(|e| e.to_string())?;
                generated = generate_session(profile, *duration_s, &cfg, *seed).map_err(|e| e.to_string())?.0;
                (SessionHeader::new(SESSION_EPOCH_US, cfg), &generated.records)
            }
        };
        let mut log = match &self.log {
            Some(path) => {
                let file = File::create(path).map_err(|e| format!("{}: {e}", path.display()))?;
                Some(RecordWriter::new(BufWriter::new(file), &header).map_err(|e| e.to_string())?)
            }
            None => None,
        };
        let mut logged = 0;
        let t0 = Instant::now();
        let first_us = records.first().map_or(0, |r| r.timestamp_us);
        for rec in records {
            if self.cancel.load(Ordering::Relaxed) {
                break;
            }
            if let Some(speed) = self.speed {
                let due = Duration::from_secs_f64((rec.timestamp_us - first_us) as f64 / 1e6 / speed);
                if let Some(wait) = due.checked_sub(t0.elapsed()) {
                    thread::sleep(wait);
                }
            }
            if let Some(w) = log.as_mut() {
                w.push(rec).map_err(|e| e.to_string())?;
                logged += 1;
            }
            if tx.send(rec.clone()).is_err() {
                break;
            }
        }
        if let Some(w) = log {
            w.finish().map_err(|e| e.to_string())?;
        }
        Ok(logged)
    }
}
