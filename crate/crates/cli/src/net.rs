use std::io::Write;
use std::net::{TcpListener, TcpStream};
use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;
use std::thread;
use std::time::Duration;

use anyhow::{Context, Result};
use clap::Args;
use patchkeeper::codec::SessionLog;
use patchkeeper::stream::{
    client_monitor, serve as serve_conn, Connection, MonitorOptions, MonitorUpdate, Pacing, ServeOptions, ServeStats,
    Source, Subscription,
};
use patchkeeper::{PhysioProfile, SensorConfig, SensorId};

use crate::{resolve, usage, ProfileArgs};

#[derive(Debug, Args)]
pub struct ServeArgs {
    /// Address to listen on; port 0 picks a free port.
    #[arg(long, default_value = "127.0.0.1:7878")]
    listen: String,
    /// Stream this recorded session instead of a live simulation.
    #[arg(long, value_name = "PKS")]
    replay: Option<PathBuf>,
    /// Length of each live run in seconds.
    #[arg(long, default_value_t = 300.0)]
    duration: f64,
    /// `realtime`, `none`, or a speed-up factor such as `10`.
    #[arg(long, default_value = "realtime")]
    pace: PaceArg,
    /// Serve a single connection, then exit.
    #[arg(long)]
    once: bool,
    /// Also log every produced record to this `.pks` file.
    #[arg(long, value_name = "PKS")]
    log: Option<PathBuf>,
    #[command(flatten)]
    profile: ProfileArgs,
}

#[derive(Debug, Clone, Copy)]
struct PaceArg(Pacing);

impl FromStr for PaceArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "realtime" => Ok(PaceArg(Pacing::RealTime)),
            "none" => Ok(PaceArg(Pacing::Unpaced)),
            _ => match s.parse::<f64>() {
                Ok(f) if f.is_finite() && f > 0.0 => Ok(PaceArg(Pacing::Speed(f))),
                _ => Err(format!("expected realtime, none or a positive factor, got '{s}'")),
            },
        }
    }
}

#[derive(Debug, Args)]
pub struct MonitorArgs {
    /// Server address.
    #[arg(long, default_value = "127.0.0.1:7878")]
    connect: String,
    /// Sensors to subscribe to (ecg, ppg, imu, marker).
    #[arg(long, value_delimiter = ',', default_value = "ecg,ppg,imu,marker")]
    subscribe: Vec<String>,
    /// Stop after this many seconds of stream time.
    #[arg(long)]
    duration: Option<f64>,
    /// Give up after this many seconds without a packet.
    #[arg(long, default_value_t = 5.0)]
    timeout: f64,
}

fn print_stats(stats: &ServeStats) {
    let mut line = format!(
        "served records={} packets={} bytes={} commands={} errors={} completed={}",
        stats.total_records(),
        stats.notify_packets,
        stats.bytes_sent,
        stats.commands,
        stats.errors,
        stats.completed
    );
    if let Some(e) = &stats.transport_error {
        line.push_str(&format!(" transport_error=\"{e}\""));
    }
    if let Some(e) = &stats.log_error {
        line.push_str(&format!(" log_error=\"{e}\""));
    }
    eprintln!("{line}");
}

pub fn serve(args: &ServeArgs, cfg: SensorConfig, base: PhysioProfile, seed: u64) -> Result<ExitCode> {
    let (cfg, profile) = resolve(cfg, &args.profile, base)?;
    let replay = match &args.replay {
        Some(p) => Some(SessionLog::open(p).load()?),
        None => {
            if !(args.duration.is_finite() && args.duration > 0.0) {
                return Err(usage(format!("--duration must be positive, got {}", args.duration)));
            }
            None
        }
    };
    let cfg = replay.as_ref().map_or(cfg, |s| s.header.config);
    let listener = TcpListener::bind(&args.listen).with_context(|| format!("binding {}", args.listen))?;
    println!("listening on {}", listener.local_addr()?);
    std::io::stdout().flush()?;
    let opts = ServeOptions { pacing: args.pace.0, log: args.log.clone(), ..Default::default() };
    let make_source = || match &replay {
        Some(s) => Source::Replay(s.clone()),
        None => Source::Live { profile: profile.clone(), duration_s: args.duration, seed },
    };
    if args.once {
        let (stream, _) = listener.accept()?;
        let stats = serve_conn(make_source(), Connection::tcp(stream)?, cfg, &opts);
        print_stats(&stats);
        return Ok(ExitCode::SUCCESS);
    }
    thread::scope(|scope| -> Result<ExitCode> {
        for stream in listener.incoming() {
            let conn = Connection::tcp(stream?)?;
            let (source, opts) = (make_source(), opts.clone());
            scope.spawn(move || print_stats(&serve_conn(source, conn, cfg, &opts)));
        }
        Ok(ExitCode::SUCCESS)
    })
}

fn subscription(names: &[String]) -> Result<Subscription> {
    let mut ids = Vec::new();
    for n in names {
        ids.push(match n.as_str() {
            "ecg" => SensorId::EcgResp,
            "ppg" => SensorId::Ppg,
            "imu" => SensorId::Imu,
            "marker" => SensorId::Marker,
            other => return Err(usage(format!("unknown sensor '{other}' (ecg, ppg, imu, marker)"))),
        });
    }
    Ok(Subscription::of(&ids))
}

fn counters(counts: &std::collections::BTreeMap<SensorId, u64>) -> String {
    [SensorId::EcgResp, SensorId::Ppg, SensorId::Imu, SensorId::Marker]
        .iter()
        .map(|id| format!("{id}={}", counts.get(id).copied().unwrap_or(0)))
        .collect::<Vec<_>>()
        .join(" ")
}

fn hr_text(hr: Option<f64>) -> String {
    hr.map_or("-".into(), |v| format!("{v:.1}"))
}

pub fn monitor(args: &MonitorArgs) -> Result<ExitCode> {
    let subscription = subscription(&args.subscribe)?;
    if !(args.timeout.is_finite() && args.timeout > 0.0) {
        return Err(usage("--timeout must be positive"));
    }
    let stream = TcpStream::connect(&args.connect).with_context(|| format!("connecting to {}", args.connect))?;
    let opts = MonitorOptions {
        subscription,
        timeout: Duration::from_secs_f64(args.timeout),
        max_stream_s: args.duration,
        ..Default::default()
    };
    let print = |u: &MonitorUpdate| {
        println!("t={:.1}s hr={} {} dropped={}", u.stream_time_s, hr_text(u.hr_bpm), counters(&u.counts), u.dropped);
    };
    let summary = client_monitor(Connection::tcp(stream)?, &opts, print).context("monitor")?;
    println!(
        "total {} records={} packets={} dropped={} crc_errors={} hr={}",
        counters(&summary.counts),
        summary.total_records(),
        summary.notify_packets,
        summary.dropped,
        summary.crc_errors,
        hr_text(summary.hr_bpm)
    );
    Ok(ExitCode::SUCCESS)
}
