use std::path::Path;
use std::process::{Command, Output};

fn relaycs(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_relaycs"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn write_config(dir: &Path, body: &str) -> String {
    let path = dir.join("cfg.toml");
    std::fs::write(&path, body).unwrap();
    path.to_string_lossy().into_owned()
}

const SMALL_FIG2: &str = r#"
n_bs = 16
g_bs = 16
n_ms = 8
g_ms = 8
m_bs = [8, 16]
m_ms = 2
faults = [2]
trials = 3
"#;

#[test]
fn fig2_writes_csv_and_metadata() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL_FIG2);
    let out_dir = dir.path().join("out");
    let out = relaycs(&["fig2", "--config", &cfg, "--out", out_dir.to_str().unwrap(), "--seed", "9"]);
    assert!(out.status.success(), "{}", stderr(&out));

    let summary = std::fs::read_to_string(out_dir.join("fig2.csv")).unwrap();
    assert!(summary.starts_with("m_bs,m_ms,snr_db,blockage,faults,regime,"));
    // 2 points x (fault-free, baseline, unaware, relay, baseline)
    assert_eq!(summary.lines().count(), 1 + 2 * 5);
    let trials = std::fs::read_to_string(out_dir.join("fig2_trials.csv")).unwrap();
    assert_eq!(trials.lines().count(), 1 + 2 * 5 * 3);

    let meta: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("fig2.meta.json")).unwrap()).unwrap();
    assert_eq!(meta["seed"], 9);
    assert_eq!(meta["trials"], 3);
    assert_eq!(meta["config"]["m_ms"], 2);
    assert_eq!(meta["scenario"], "fig2_nmse_vs_measurements");
}

#[test]
fn trials_flag_overrides_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL_FIG2);
    let out_dir = dir.path().join("out");
    let out = relaycs(&["custom", "--config", &cfg, "--out", out_dir.to_str().unwrap(), "--trials", "2", "--threads", "1"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let meta = std::fs::read_to_string(out_dir.join("custom.meta.json")).unwrap();
    let meta: serde_json::Value = serde_json::from_str(&meta).unwrap();
    assert_eq!(meta["trials"], 2);
    assert_eq!(meta["scenario"], "custom");
}

#[test]
fn config_errors_name_the_field() {
    let dir = tempfile::tempdir().unwrap();
    for (body, field) in [
        ("m_bs = [9]\nm_ms = 4\n", "m_bs"),
        ("trials = 0\n", "trials"),
        ("snr_db = []\n", "snr_db"),
        ("unknown_key = 1\n", "unknown_key"),
    ] {
        let cfg = write_config(dir.path(), body);
        let out = relaycs(&["fig2", "--config", &cfg, "--out", dir.path().to_str().unwrap()]);
        assert!(!out.status.success(), "{body} accepted");
        assert!(stderr(&out).contains(field), "{body}: {}", stderr(&out));
    }
}

#[test]
fn missing_config_file_is_reported() {
    let out = relaycs(&["fig1", "--config", "/nonexistent/cfg.toml"]);
    assert!(!out.status.success());
    assert!(stderr(&out).contains("/nonexistent/cfg.toml"));
}

#[test]
fn zero_threads_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let out = relaycs(&["fig1", "--threads", "0", "--trials", "1", "--out", dir.path().to_str().unwrap()]);
    assert!(!out.status.success());
    assert!(stderr(&out).contains("--threads"));
}
