//! Line-oriented event files: the simulator's `.truth` sidecar and the
//! analyzer's `.events` output share this schema.
//!
//! ```text
//! # mean_hr_bpm 60.000000
//! RPEAK 500000
//! S1 500000
//! S2 800000 0.4123
//! BREATH 1000000
//! ```
//!
//! Each event line is `<kind> <time_us> [value]`. Lines starting with `#`
//! carry `name value` metadata; blank lines are ignored.

use std::fmt;
use std::io::{self, BufRead, Write};
use std::str::FromStr;

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EventKind {
    RPeak,
    S1,
    S2,
    Breath,
}

impl EventKind {
    pub fn tag(self) -> &'static str {
        match self {
            EventKind::RPeak => "RPEAK",
            EventKind::S1 => "S1",
            EventKind::S2 => "S2",
            EventKind::Breath => "BREATH",
        }
    }
}

impl fmt::Display for EventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for EventKind {
    type Err = ();
    fn from_str(s: &str) -> Result<Self, ()> {
        match s {
            "RPEAK" => Ok(EventKind::RPeak),
            "S1" => Ok(EventKind::S1),
            "S2" => Ok(EventKind::S2),
            "BREATH" => Ok(EventKind::Breath),
            _ => Err(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Event {
    pub kind: EventKind,
    pub time_us: u64,
    pub value: Option<f64>,
}

impl Event {
    pub fn new(kind: EventKind, time_us: u64) -> Self {
        Event { kind, time_us, value: None }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct EventFile {
    pub meta: Vec<(String, f64)>,
    pub events: Vec<Event>,
}

impl EventFile {
    pub fn times(&self, kind: EventKind) -> Vec<u64> {
        self.events.iter().filter(|e| e.kind == kind).map(|e| e.time_us).collect()
    }

    pub fn count(&self, kind: EventKind) -> usize {
        self.events.iter().filter(|e| e.kind == kind).count()
    }

    pub fn meta(&self, name: &str) -> Option<f64> {
        self.meta.iter().find(|(n, _)| n == name).map(|(_, v)| *v)
    }
}

#[derive(Debug, Error)]
pub enum EventsError {
    #[error("i/o: {0}")]
    Io(#[from] io::Error),
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
}

pub fn write_events<W: Write>(file: &EventFile, mut sink: W) -> io::Result<()> {
    for (name, value) in &file.meta {
        writeln!(sink, "# {name} {value:.6}")?;
    }
    for e in &file.events {
        match e.value {
            Some(v) => writeln!(sink, "{} {} {v:.6}", e.kind, e.time_us)?,
            None => writeln!(sink, "{} {}", e.kind, e.time_us)?,
        }
    }
    sink.flush()
}

pub fn read_events<R: BufRead>(source: R) -> Result<EventFile, EventsError> {
    let mut file = EventFile::default();
    for (i, line) in source.lines().enumerate() {
        let line = line?;
        let lineno = i + 1;
        let err = |reason: &str| EventsError::Parse { line: lineno, reason: reason.to_string() };
        let text = line.trim();
        if text.is_empty() {
            continue;
        }
        if let Some(meta) = text.strip_prefix('#') {
            let mut parts = meta.split_whitespace();
            if let (Some(name), Some(v), None) = (parts.next(), parts.next(), parts.next()) {
                if let Ok(v) = v.parse() {
                    file.meta.push((name.to_string(), v));
                }
            }
            continue;
        }
        let mut parts = text.split_whitespace();
        let kind = parts.next().unwrap().parse().map_err(|_| err("unknown event kind"))?;
        let time_us = parts.next().ok_or_else(|| err("missing time"))?.parse().map_err(|_| err("bad time"))?;
        let value = match parts.next() {
            Some(v) => Some(v.parse().map_err(|_| err("bad value"))?),
            None => None,
        };
        if parts.next().is_some() {
            return Err(err("trailing fields"));
        }
        file.events.push(Event { kind, time_us, value });
    }
    Ok(file)
}
