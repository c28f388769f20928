use std::fmt;
use std::str::FromStr;

use thiserror::Error;

/// How far a metric can be trusted.
#[derive(Debug, Clone, PartialEq)]
pub enum Flag {
    Ok,
    /// Spectral peak on the edge of its search band.
    BandEdge,
    Fail(String),
}

impl fmt::Display for Flag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Flag::Ok => f.write_str("ok"),
            Flag::BandEdge => f.write_str("band-edge"),
            Flag::Fail(why) => write!(f, "FAIL: {why}"),
        }
    }
}

/// One report line: `name value unit flag`. A failed metric has no value
/// and prints `-` in its place.
#[derive(Debug, Clone, PartialEq)]
pub struct Metric {
    pub name: String,
    pub value: Option<f64>,
    pub unit: String,
    pub flag: Flag,
}

impl Metric {
    pub fn ok(name: &str, value: f64, unit: &str) -> Self {
        Metric { name: name.into(), value: Some(value), unit: unit.into(), flag: Flag::Ok }
    }

    pub fn failed(name: &str, unit: &str, why: impl fmt::Display) -> Self {
        Metric { name: name.into(), value: None, unit: unit.into(), flag: Flag::Fail(why.to_string()) }
    }

    pub fn is_failed(&self) -> bool {
        matches!(self.flag, Flag::Fail(_))
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.value {
            Some(v) => write!(f, "{} {:.3} {} {}", self.name, v, self.unit, self.flag),
            None => write!(f, "{} - {} {}", self.name, self.unit, self.flag),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Report {
    pub metrics: Vec<Metric>,
}

impl Report {
    pub fn push(&mut self, m: Metric) {
        self.metrics.push(m);
    }

    pub fn get(&self, name: &str) -> Option<&Metric> {
        self.metrics.iter().find(|m| m.name == name)
    }

    pub fn value(&self, name: &str) -> Option<f64> {
        self.get(name).and_then(|m| m.value)
    }

    /// True when there is nothing but failures (or nothing at all).
    pub fn all_failed(&self) -> bool {
        self.metrics.iter().all(Metric::is_failed)
    }
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for m in &self.metrics {
            writeln!(f, "{m}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("report line {line}: {reason}")]
pub struct ReportParseError {
    pub line: usize,
    pub reason: String,
}

impl FromStr for Report {
    type Err = ReportParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut metrics = Vec::new();
        for (i, line) in s.lines().enumerate() {
            let err = |reason: &str| ReportParseError { line: i + 1, reason: reason.into() };
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut parts = line.splitn(4, ' ');
            let (Some(name), Some(value), Some(unit), Some(flag)) =
                (parts.next(), parts.next(), parts.next(), parts.next())
            else {
                return Err(err("expected four fields"));
            };
            let value = match value {
                "-" => None,
                v => Some(v.parse::<f64>().map_err(|_| err("bad value"))?),
            };
            let flag = match flag {
                "ok" => Flag::Ok,
                "band-edge" => Flag::BandEdge,
                f => Flag::Fail(f.strip_prefix("FAIL: ").ok_or_else(|| err("bad flag"))?.to_string()),
            };
            metrics.push(Metric { name: name.into(), value, unit: unit.into(), flag });
        }
        Ok(Report { metrics })
    }
}
