//! `pk`: simulate, inspect, analyze and stream patchkeeper sessions.

mod dump;
mod net;

use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use patchkeeper::analysis::{analyze_session, AnalyzeOptions, Channel, MetricSet};
use patchkeeper::codec::{write_events, SessionLog};
use patchkeeper::config::ConfigFile;
use patchkeeper::profile::AmbientMode;
use patchkeeper::sim::generate_session;
use patchkeeper::{validate_config, PhysioProfile, SensorConfig, ValidatedConfig};

/// Exit status for bad flags or flag values; runtime failures use 1.
const EXIT_USAGE: u8 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "pk",
    version,
    about = "Virtual wearable stethoscope: simulate, dump, analyze, serve and monitor sessions"
)]
struct Cli {
    /// TOML file with sensor settings and an optional [profile] table.
    /// Flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed for every random stream.
    #[arg(long, global = true, default_value_t = 1)]
    seed: u64,
    /// Where outputs are written. Defaults to the current directory for
    /// `simulate` and the session's directory for `analyze`.
    #[arg(long, global = true, env = "PK_OUT_DIR")]
    out_dir: Option<PathBuf>,
    /// More detail on stderr; repeat for more.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a session: <stem>.pks, <stem>.wav and <stem>.truth.
    Simulate {
        #[command(flatten)]
        profile: ProfileArgs,
        /// Session length in seconds.
        #[arg(long, default_value_t = 60.0)]
        duration: f64,
        /// Turn sensors off (repeat or comma-separate).
        #[arg(long, value_enum, value_delimiter = ',')]
        disable: Vec<Sensor>,
        /// Base name of the output files.
        #[arg(long, default_value = "session")]
        stem: String,
    },
    /// Print a session's header, per-sensor counts and rate estimates.
    Dump(dump::DumpArgs),
    /// Run the analyses and write <stem>.report and <stem>.events.
    Analyze {
        /// Session `.pks` file or stem.
        path: PathBuf,
        /// Metric groups to compute.
        #[arg(long, value_delimiter = ',', default_value = "hr,rr,s1s2")]
        metrics: Vec<MetricSet>,
        /// Single channel for the respiration metric (resp, gyro-y, gz, az, ...).
        #[arg(long)]
        input: Option<Channel>,
        /// Cancel ambient noise from the stethoscope channel first.
        #[arg(long)]
        denoise: bool,
    },
    /// Stream a live simulation or a recorded session over TCP.
    Serve(net::ServeArgs),
    /// Connect to a server, print rolling heart rate and counters at 1 Hz.
    Monitor(net::MonitorArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Sensor {
    Ecg,
    Ppg,
    Imu,
    Audio,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Ambient {
    Quiet,
    Noisy,
}

/// Overrides for the physiological profile.
#[derive(Debug, Clone, Default, Args)]
struct ProfileArgs {
    /// Mean heart rate, bpm.
    #[arg(long)]
    hr: Option<f64>,
    /// Respiration rate, breaths per minute.
    #[arg(long)]
    rr: Option<f64>,
    /// Beat-to-beat variability as a fraction of the interval.
    #[arg(long)]
    hrv: Option<f64>,
    /// S1 to S2 interval, seconds.
    #[arg(long)]
    s1s2: Option<f64>,
    /// Ambient microphone scene.
    #[arg(long, value_enum)]
    ambient: Option<Ambient>,
    /// RMS level of the noisy ambient scene, dBFS.
    #[arg(long, allow_hyphen_values = true)]
    interference_dbfs: Option<f64>,
    /// Fraction of ambient sound leaking into the stethoscope.
    #[arg(long)]
    leak_gain: Option<f64>,
}

impl ProfileArgs {
    fn apply(&self, mut p: PhysioProfile) -> PhysioProfile {
        if let Some(v) = self.hr {
            p.heart_rate_bpm = v;
        }
        if let Some(v) = self.rr {
            p.resp_rate_brpm = v;
        }
        if let Some(v) = self.hrv {
            p.hr_variability_frac = v;
        }
        if let Some(v) = self.s1s2 {
            p.s1_s2_interval_s = v;
        }
        if let Some(a) = self.ambient {
            p.ambient.mode = match a {
                Ambient::Quiet => AmbientMode::Quiet,
                Ambient::Noisy => AmbientMode::Noisy,
            };
        }
        if let Some(v) = self.interference_dbfs {
            p.ambient.interference_dbfs = v;
        }
        if let Some(v) = self.leak_gain {
            p.ambient.leak_gain = v;
        }
        p
    }
}

/// A flag value that parsed but makes no sense.
#[derive(Debug)]
struct UsageError(String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(msg: impl std::fmt::Display) -> anyhow::Error {
    UsageError(msg.to_string()).into()
}

/// Sensor config and profile from the config file, before flag overrides.
fn load_settings(path: Option<&Path>) -> Result<(SensorConfig, PhysioProfile)> {
    let Some(path) = path else {
        return Ok((SensorConfig::default(), PhysioProfile::default()));
    };
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let file = ConfigFile::parse(&text).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    Ok((file.sensor_config(), file.profile.unwrap_or_default()))
}

fn resolve(cfg: SensorConfig, profile: &ProfileArgs, base: PhysioProfile) -> Result<(ValidatedConfig, PhysioProfile)> {
    let cfg = validate_config(cfg).map_err(usage)?;
    let profile = profile.apply(base);
    profile.validate().map_err(usage)?;
    Ok((cfg, profile))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        // stdout closed early, e.g. piped into `head`
        Err(e)
            if e.chain().any(|c| {
                c.downcast_ref::<std::io::Error>().is_some_and(|io| io.kind() == std::io::ErrorKind::BrokenPipe)
            }) =>
        {
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("pk: {e:#}");
            if e.downcast_ref::<UsageError>().is_some() {
                ExitCode::from(EXIT_USAGE)
            } else {
                ExitCode::FAILURE
            }
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    let (file_cfg, file_profile) = load_settings(cli.config.as_deref())?;
    match cli.command {
        Command::Simulate { profile, duration, disable, stem } => {
            let mut cfg = file_cfg;
            for s in disable {
                match s {
                    Sensor::Ecg => cfg.ecg.enabled = false,
                    Sensor::Ppg => cfg.ppg.enabled = false,
                    Sensor::Imu => cfg.imu.enabled = false,
                    Sensor::Audio => cfg.audio.enabled = false,
                }
            }
            let (cfg, profile) = resolve(cfg, &profile, file_profile)?;
            if !(duration.is_finite() && duration > 0.0) {
                return Err(usage(format!("--duration must be positive, got {duration}")));
            }
            let (session, truth) = generate_session(&profile, duration, &cfg, cli.seed).map_err(usage)?;
            let dir = cli.out_dir.unwrap_or_else(|| PathBuf::from("."));
            fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
            let log = SessionLog::write(&dir, &stem, &session, Some(&truth.to_events()))?;
            println!("{}", log.records_path.display());
            if let Some(p) = &log.audio_path {
                println!("{}", p.display());
            }
            if let Some(p) = &log.truth_path {
                println!("{}", p.display());
            }
            if cli.verbose > 0 {
                eprintln!("{} records, seed {}", session.records.len(), cli.seed);
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Dump(args) => dump::run(&args),
        Command::Analyze { path, metrics, input, denoise } => {
            let log = SessionLog::open(&path);
            let session = log.load()?;
            let opts = AnalyzeOptions { metrics, rr_input: input, denoise };
            let (report, events) = analyze_session(&session, &opts);
            let stem = log.records_path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
            let dir = match cli.out_dir {
                Some(d) => d,
                None => log.records_path.parent().map(Path::to_path_buf).unwrap_or_default(),
            };
            fs::create_dir_all(&dir).ok();
            let report_path = dir.join(format!("{stem}.report"));
            let events_path = dir.join(format!("{stem}.events"));
            fs::write(&report_path, report.to_string())
                .with_context(|| format!("writing {}", report_path.display()))?;
            let f = fs::File::create(&events_path).with_context(|| format!("writing {}", events_path.display()))?;
            write_events(&events, BufWriter::new(f))?;
            print!("{report}");
            if report.all_failed() {
                eprintln!("pk: every metric failed");
                return Ok(ExitCode::FAILURE);
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Serve(args) => net::serve(&args, file_cfg, file_profile, cli.seed),
        Command::Monitor(args) => net::monitor(&args),
    }
}
