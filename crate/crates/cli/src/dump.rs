use std::collections::BTreeMap;
use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::Args;
use patchkeeper::analysis::{align_streams, AlignMode, Channel};
use patchkeeper::codec::{read_audio_pcm, read_session, Session, SessionHeader, SessionLog};
use patchkeeper::types::{LED_GREEN, LED_IR, LED_RED};
use patchkeeper::{Payload, SensorId, SensorRecord};
use serde_json::{json, Value};

#[derive(Debug, Args)]
pub struct DumpArgs {
    /// Session `.pks` file or stem.
    path: PathBuf,
    /// List every record after the summary.
    #[arg(long)]
    records: bool,
    /// Only records, one JSON object per line.
    #[arg(long, conflicts_with_all = ["records", "aligned"])]
    json_lines: bool,
    /// On a damaged record, keep what came before it and exit 0.
    #[arg(long)]
    tolerant: bool,
    /// Print every record channel resampled to this rate, one row per frame.
    #[arg(long, value_name = "HZ")]
    aligned: Option<f64>,
    /// Resampling used by --aligned.
    #[arg(long, default_value = "hold")]
    mode: AlignMode,
}

pub fn run(args: &DumpArgs) -> Result<ExitCode> {
    let log = SessionLog::open(&args.path);
    let path = &log.records_path;
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let (header, reader) = read_session(BufReader::new(file)).with_context(|| path.display().to_string())?;
    let mut records = Vec::new();
    for r in reader {
        match r {
            Ok(r) => records.push(r),
            Err(e) if args.tolerant => {
                eprintln!("pk: warning: {}: {e}; showing the {} records before it", path.display(), records.len());
                break;
            }
            Err(e) => return Err(e).with_context(|| path.display().to_string()),
        }
    }

    let out = io::stdout();
    let mut out = BufWriter::new(out.lock());
    if args.json_lines {
        for r in &records {
            writeln!(out, "{}", record_json(r))?;
        }
        out.flush()?;
        return Ok(ExitCode::SUCCESS);
    }

    summary(&mut out, &log, &header, &records)?;
    if args.records {
        writeln!(out)?;
        for r in &records {
            writeln!(out, "{}", record_line(r))?;
        }
    }
    if let Some(rate) = args.aligned {
        let session = Session { header, records, audio: None };
        let a = align_streams(&session, rate, args.mode)?;
        writeln!(out)?;
        write!(out, "t_us")?;
        for ch in &a.channels {
            write!(out, "\t{ch}")?;
        }
        writeln!(out)?;
        for f in &a.frames {
            write!(out, "{}", f.t_us)?;
            for v in &f.values {
                match v {
                    Some(v) => write!(out, "\t{v:.6}")?,
                    None => write!(out, "\t-")?,
                }
            }
            writeln!(out)?;
        }
    }
    out.flush()?;
    Ok(ExitCode::SUCCESS)
}

fn leds(mask: u8) -> String {
    let names: Vec<&str> = [(LED_GREEN, "green"), (LED_RED, "red"), (LED_IR, "ir")]
        .iter()
        .filter(|(b, _)| mask & b != 0)
        .map(|p| p.1)
        .collect();
    names.join("+")
}

fn summary(out: &mut impl Write, log: &SessionLog, header: &SessionHeader, records: &[SensorRecord]) -> Result<()> {
    let cfg = &header.config;
    let onoff = |b: bool| if b { "on" } else { "off" };
    writeln!(out, "file {}", log.records_path.display())?;
    writeln!(out, "session_start_epoch_us {}", header.session_start_epoch_us)?;
    writeln!(out, "config ecg {} Hz {}", cfg.ecg.rate_hz, onoff(cfg.ecg.enabled))?;
    writeln!(out, "config ppg {} Hz {} leds={}", cfg.ppg.rate_hz, onoff(cfg.ppg.enabled), leds(cfg.ppg_led_mask))?;
    writeln!(out, "config imu {} Hz {}", cfg.imu.rate_hz, onoff(cfg.imu.enabled))?;
    writeln!(out, "config audio {} Hz {}", cfg.audio.sample_rate_hz, onoff(cfg.audio.enabled))?;

    // (count, first, last) per sensor
    let mut seen: BTreeMap<SensorId, (u64, u64, u64)> = BTreeMap::new();
    for id in [SensorId::EcgResp, SensorId::Ppg, SensorId::Imu, SensorId::Marker] {
        seen.insert(id, (0, 0, 0));
    }
    for r in records {
        let e = seen.entry(r.sensor_id).or_insert((0, 0, 0));
        if e.0 == 0 {
            e.1 = r.timestamp_us;
        }
        e.0 += 1;
        e.2 = r.timestamp_us;
    }
    writeln!(out, "sensor count rate_hz")?;
    for (id, (n, first, last)) in &seen {
        // rate over the covered span, so the estimate does not depend on
        // where the session ends
        let rate = if *n >= 2 && last > first {
            format!("{:.3}", (n - 1) as f64 * 1e6 / (last - first) as f64)
        } else {
            "-".into()
        };
        writeln!(out, "{id} {n} {rate}")?;
    }
    writeln!(out, "records {}", records.len())?;
    if let Some(p) = &log.audio_path {
        let pcm = read_audio_pcm(BufReader::new(File::open(p)?)).with_context(|| p.display().to_string())?;
        let frames = pcm.frames();
        writeln!(out, "audio {} frames {:.3} s at {} Hz", frames, frames as f64 / f64::from(pcm.rate_hz), pcm.rate_hz)?;
    }
    Ok(())
}

fn record_line(r: &SensorRecord) -> String {
    let body = match &r.payload {
        Payload::EcgResp(s) => format!(
            "ch1={} ch2={} ecg_mv={:.4} resp_mv={:.4}",
            s.ch1_counts,
            s.ch2_counts,
            Channel::Ecg.value(r).unwrap_or(f64::NAN),
            Channel::Resp.value(r).unwrap_or(f64::NAN)
        ),
        Payload::Ppg(s) => format!("leds={} counts={:?}", leds(s.led_mask), s.counts),
        Payload::Imu(s) => format!("ax={} ay={} az={} gx={} gy={} gz={}", s.ax, s.ay, s.az, s.gx, s.gy, s.gz),
        Payload::Marker { code } => format!("code={code}"),
        Payload::Raw(b) => format!("raw={}", hex(b)),
    };
    format!("{} {} {}", r.timestamp_us, r.sensor_id, body)
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

fn record_json(r: &SensorRecord) -> Value {
    let mut v = json!({ "sensor": r.sensor_id.name(), "id": r.sensor_id.as_u8(), "t_us": r.timestamp_us });
    let fields = match &r.payload {
        Payload::EcgResp(s) => json!({ "ch1": s.ch1_counts, "ch2": s.ch2_counts }),
        Payload::Ppg(s) => json!({ "led_mask": s.led_mask, "counts": s.counts }),
        Payload::Imu(s) => json!({ "ax": s.ax, "ay": s.ay, "az": s.az, "gx": s.gx, "gy": s.gy, "gz": s.gz }),
        Payload::Marker { code } => json!({ "code": code }),
        Payload::Raw(b) => json!({ "raw": hex(b) }),
    };
    if let (Value::Object(dst), Value::Object(src)) = (&mut v, fields) {
        dst.extend(src);
    }
    v
}
