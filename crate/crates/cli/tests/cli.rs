use std::io::{BufRead, BufReader};
use std::path::Path;
use std::process::{Command, Output, Stdio};

use patchkeeper::codec::{Session, SessionHeader, SessionLog};
use patchkeeper::{validate_config, SensorConfig};

fn pk(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pk")).current_dir(dir).env_remove("PK_OUT_DIR").args(args).output().unwrap()
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = pk(dir, args);
    assert!(out.status.success(), "pk {args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn field<'a>(text: &'a str, key: &str) -> Option<&'a str> {
    text.lines().find_map(|l| l.strip_prefix(key).and_then(|r| r.strip_prefix(' ')))
}

fn metric(report: &str, name: &str) -> f64 {
    field(report, name).and_then(|r| r.split_whitespace().next()).and_then(|v| v.parse().ok()).unwrap_or(f64::NAN)
}

fn truth(dir: &Path, stem: &str, key: &str) -> f64 {
    let text = std::fs::read_to_string(dir.join(format!("{stem}.truth"))).unwrap();
    field(&text, &format!("# {key}")).unwrap().trim().parse().unwrap()
}

#[test]
fn simulate_is_reproducible_byte_for_byte() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    for stem in ["a", "b"] {
        ok(d, &["simulate", "--duration", "5", "--seed", "42", "--stem", stem]);
    }
    for ext in ["pks", "wav", "truth"] {
        let a = std::fs::read(d.join(format!("a.{ext}"))).unwrap();
        let b = std::fs::read(d.join(format!("b.{ext}"))).unwrap();
        assert!(a == b, "{ext} differs");
    }
    ok(d, &["simulate", "--duration", "5", "--seed", "43", "--stem", "c"]);
    assert_ne!(std::fs::read(d.join("a.pks")).unwrap(), std::fs::read(d.join("c.pks")).unwrap());
}

#[test]
fn default_session_dump_rates() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &["simulate", "--duration", "60", "--disable", "audio"]);
    let text = ok(d, &["dump", "session.pks"]);
    for (sensor, rate) in [("ecg", 125.0), ("ppg", 100.0), ("imu", 50.0)] {
        let line = field(&text, sensor).unwrap();
        let est: f64 = line.split_whitespace().nth(1).unwrap().parse().unwrap();
        assert!((est - rate).abs() <= 0.5, "{sensor} {est}");
    }
    // json lines agree with the summary's record count
    let total: usize = field(&text, "records").unwrap().parse().unwrap();
    let json = ok(d, &["dump", "--json-lines", "session"]);
    assert_eq!(json.lines().count(), total);
    let first: serde_json::Value = serde_json::from_str(json.lines().next().unwrap()).unwrap();
    assert!(first.get("t_us").is_some());
}

#[test]
fn disabled_sensor_has_no_records() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &["simulate", "--duration", "5", "--disable", "imu,audio"]);
    let text = ok(d, &["dump", "session"]);
    assert_eq!(field(&text, "imu").unwrap().split_whitespace().next(), Some("0"));
    assert!(!d.join("session.wav").exists());
}

#[test]
fn truth_has_one_r_peak_per_beat() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &["simulate", "--duration", "60", "--hr", "60", "--hrv", "0", "--disable", "audio"]);
    let text = std::fs::read_to_string(d.join("session.truth")).unwrap();
    let peaks = text.lines().filter(|l| l.starts_with("RPEAK ")).count() as i64;
    assert!((peaks - 60).abs() <= 1, "{peaks}");
}

#[test]
fn empty_session_dumps_zero_counts() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let mut cfg = SensorConfig::default();
    cfg.audio.enabled = false;
    let header = SessionHeader::new(0, validate_config(cfg).unwrap());
    SessionLog::write(d, "empty", &Session { header, records: Vec::new(), audio: None }, None).unwrap();
    let text = ok(d, &["dump", "empty.pks"]);
    for sensor in ["ecg", "ppg", "imu", "marker"] {
        assert_eq!(field(&text, sensor).unwrap().split_whitespace().next(), Some("0"), "{sensor}");
    }
    assert_eq!(field(&text, "records"), Some("0"));
}

#[test]
fn tolerant_dump_of_corrupted_file() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &["simulate", "--duration", "2", "--disable", "audio"]);
    let path = d.join("session.pks");
    let mut bytes = std::fs::read(&path).unwrap();
    let mid = bytes.len() / 2;
    bytes[mid] ^= 0x5a;
    std::fs::write(&path, &bytes).unwrap();

    let strict = pk(d, &["dump", "session.pks"]);
    assert_eq!(strict.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&strict.stderr);
    assert!(stderr.contains("offset"), "{stderr}");

    let out = pk(d, &["dump", "--tolerant", "session.pks"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stderr).contains("warning"));
    let text = String::from_utf8(out.stdout).unwrap();
    let n: usize = field(&text, "records").unwrap().parse().unwrap();
    assert!(n > 0 && n < 500, "{n}");
}

#[test]
fn analyze_matches_truth() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &["simulate", "--duration", "60", "--seed", "7"]);
    let report = ok(d, &["analyze", "session.pks"]);
    let want = truth(d, "session", "mean_hr_bpm");
    let got = metric(&report, "hr_ecg");
    assert!((got - want).abs() <= 1.0, "{got} vs {want}");
    // written next to the session and parseable
    let saved: patchkeeper::analysis::Report =
        std::fs::read_to_string(d.join("session.report")).unwrap().parse().unwrap();
    assert!(!saved.all_failed());
    assert!(d.join("session.events").exists());

    let rr = ok(d, &["analyze", "session", "--metrics", "rr", "--input", "gyro-z"]);
    let want = truth(d, "session", "mean_rr_brpm");
    let got = metric(&rr, "rr_gyro_z");
    assert!((got - want).abs() <= 1.0, "{got} vs {want}\n{rr}");
}

#[test]
fn analyze_without_audio_reports_channel_absent() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &["simulate", "--duration", "20", "--disable", "audio"]);
    let report = ok(d, &["analyze", "session", "--metrics", "s1s2,hr"]);
    assert!(field(&report, "s1_count").unwrap().contains("channel absent"), "{report}");
    assert!(field(&report, "hr_ecg").unwrap().ends_with("ok"), "{report}");
    // only s1s2 requested: everything fails, exit 1
    assert_eq!(pk(d, &["analyze", "session", "--metrics", "s1s2"]).status.code(), Some(1));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(pk(d, &["simulate", "--hr", "-5"]).status.code(), Some(2));
    assert_eq!(pk(d, &["simulate", "--duration", "0"]).status.code(), Some(2));
    assert_eq!(pk(d, &["frobnicate"]).status.code(), Some(2));
    assert_eq!(pk(d, &["dump", "missing.pks"]).status.code(), Some(1));
    assert_eq!(pk(d, &["monitor", "--subscribe", "eeg"]).status.code(), Some(2));
}

#[test]
fn out_dir_from_env() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let out = Command::new(env!("CARGO_BIN_EXE_pk"))
        .current_dir(d)
        .env("PK_OUT_DIR", d.join("runs"))
        .args(["simulate", "--duration", "1"])
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(d.join("runs/session.pks").exists());
}

#[test]
fn monitor_against_closed_port() {
    let port = std::net::TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
    let dir = tempfile::tempdir().unwrap();
    let out = pk(dir.path(), &["monitor", "--connect", &format!("127.0.0.1:{port}")]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("connecting"));
}

/// Starts `pk serve --once`, runs `pk monitor` against it, returns monitor stdout.
fn serve_and_monitor(dir: &Path, serve_args: &[&str]) -> String {
    let mut server = Command::new(env!("CARGO_BIN_EXE_pk"))
        .current_dir(dir)
        .args(["serve", "--listen", "127.0.0.1:0", "--once"])
        .args(serve_args)
        .stdout(Stdio::piped())
        .stderr(Stdio::null())
        .spawn()
        .unwrap();
    let mut line = String::new();
    BufReader::new(server.stdout.take().unwrap()).read_line(&mut line).unwrap();
    let addr = line.trim().strip_prefix("listening on ").unwrap().to_string();
    let out = ok(dir, &["monitor", "--connect", &addr]);
    assert!(server.wait().unwrap().success());
    out
}

fn totals(text: &str) -> String {
    text.lines().find(|l| l.starts_with("total ")).unwrap().to_string()
}

#[test]
fn serve_replay_totals_match_file() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &["simulate", "--duration", "10", "--disable", "audio"]);
    let dump = ok(d, &["dump", "session"]);
    let out = serve_and_monitor(d, &["--replay", "session.pks", "--pace", "none"]);
    let total = totals(&out);
    for sensor in ["ecg", "ppg", "imu", "marker"] {
        let n = field(&dump, sensor).unwrap().split_whitespace().next().unwrap();
        assert!(total.contains(&format!(" {sensor}={n} ")), "{sensor}={n} not in {total}");
    }
    assert!(total.contains(&format!(" records={} ", field(&dump, "records").unwrap())), "{total}");
    assert!(total.contains(" dropped=0 "), "{total}");
}

#[test]
fn serve_live_heart_rate() {
    let dir = tempfile::tempdir().unwrap();
    let out = serve_and_monitor(dir.path(), &["--hr", "72", "--duration", "30", "--pace", "none"]);
    let total = totals(&out);
    let hr: f64 = total.rsplit("hr=").next().unwrap().parse().unwrap();
    assert!((hr - 72.0).abs() <= 2.0, "{total}");
    let updates = out.lines().filter(|l| l.starts_with("t=")).count();
    assert!(updates >= 25, "{updates}");
}
