use std::io::Write;
use std::path::{Path, PathBuf};

use serde_json::json;

use super::runner::{ExperimentReport, Records};
use crate::{Error, Result};

/// Paths written by [`emit_csv`].
#[derive(Debug, Clone)]
pub struct Artifacts {
    pub summary: PathBuf,
    pub trials: PathBuf,
    pub metadata: PathBuf,
}

/// 11 significant digits, scientific notation.
fn num(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.10e}")
    } else if v.is_nan() {
        "nan".into()
    } else if v > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

fn writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(w)
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(source) => Error::Io {
            path: path.to_path_buf(),
            source,
        },
        other => Error::invalid(format!("csv encoding failed: {other:?}")),
    }
}

pub const SUCCESS_COLUMNS: [&str; 9] = [
    "m_bs",
    "blockage",
    "faults",
    "relay_snr_db",
    "trials",
    "success_rate",
    "std_err",
    "mean_missed",
    "mean_false_alarm",
];

pub const NMSE_COLUMNS: [&str; 11] = [
    "m_bs",
    "m_ms",
    "snr_db",
    "blockage",
    "faults",
    "regime",
    "trials",
    "mean_nmse",
    "std_err",
    "mean_nmse_db",
    "diagnosis_success_rate",
];

/// Writes the summary table of `report` as CSV.
pub fn write_summary_csv<W: Write>(report: &ExperimentReport, out: W) -> csv::Result<()> {
    let mut w = writer(out);
    match &report.records {
        Records::Diagnosis { summary, .. } => {
            w.write_record(SUCCESS_COLUMNS)?;
            for r in summary {
                w.write_record([
                    r.m_bs.to_string(),
                    r.blockage.to_string(),
                    r.faults.to_string(),
                    num(r.relay_snr_db),
                    r.trials.to_string(),
                    num(r.success_rate),
                    num(r.std_err),
                    num(r.mean_missed),
                    num(r.mean_false_alarm),
                ])?;
            }
        }
        Records::Nmse { summary, .. } => {
            w.write_record(NMSE_COLUMNS)?;
            for r in summary {
                w.write_record([
                    r.m_bs.to_string(),
                    r.m_ms.to_string(),
                    num(r.snr_db),
                    opt(r.blockage),
                    r.faults.to_string(),
                    r.regime.to_string(),
                    r.trials.to_string(),
                    num(r.mean_nmse),
                    num(r.std_err),
                    num(r.mean_nmse_db),
                    r.diagnosis_success_rate.map(num).unwrap_or_default(),
                ])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

/// Writes one row per trial and curve point.
pub fn write_trials_csv<W: Write>(report: &ExperimentReport, out: W) -> csv::Result<()> {
    let mut w = writer(out);
    match &report.records {
        Records::Diagnosis { trials, .. } => {
            w.write_record(["m_bs", "blockage", "faults", "trial", "success", "missed", "false_alarm"])?;
            for r in trials {
                w.write_record([
                    r.m_bs.to_string(),
                    r.blockage.to_string(),
                    r.faults.to_string(),
                    r.trial.to_string(),
                    u8::from(r.success).to_string(),
                    r.missed.to_string(),
                    r.false_alarm.to_string(),
                ])?;
            }
        }
        Records::Nmse { trials, .. } => {
            w.write_record([
                "m_bs",
                "m_ms",
                "snr_db",
                "blockage",
                "faults",
                "regime",
                "trial",
                "nmse",
                "diagnosis_success",
            ])?;
            for r in trials {
                w.write_record([
                    r.m_bs.to_string(),
                    r.m_ms.to_string(),
                    num(r.snr_db),
                    opt(r.blockage),
                    r.faults.to_string(),
                    r.regime.to_string(),
                    r.trial.to_string(),
                    num(r.nmse),
                    opt(r.diagnosis_success.map(u8::from)),
                ])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

/// Writes `<stem>.csv`, `<stem>_trials.csv` and the `<stem>.meta.json`
/// sidecar into `dir`, creating it if needed.
pub fn emit_csv(report: &ExperimentReport, dir: &Path) -> Result<Artifacts> {
    std::fs::create_dir_all(dir).map_err(|source| Error::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let stem = report.config.scenario.stem();
    let arts = Artifacts {
        summary: dir.join(format!("{stem}.csv")),
        trials: dir.join(format!("{stem}_trials.csv")),
        metadata: dir.join(format!("{stem}.meta.json")),
    };
    let create = |p: &Path| {
        std::fs::File::create(p).map(std::io::BufWriter::new).map_err(|source| Error::Io {
            path: p.to_path_buf(),
            source,
        })
    };
    write_summary_csv(report, create(&arts.summary)?).map_err(|e| csv_err(&arts.summary, e))?;
    write_trials_csv(report, create(&arts.trials)?).map_err(|e| csv_err(&arts.trials, e))?;

    let file_name = |p: &Path| p.file_name().map(|f| f.to_string_lossy().into_owned());
    let meta = json!({
        "artifact": env!("CARGO_PKG_NAME"),
        "version": env!("CARGO_PKG_VERSION"),
        "scenario": report.config.scenario.as_str(),
        "seed": report.config.seed,
        "trials": report.config.trials,
        "summary_file": file_name(&arts.summary),
        "trials_file": file_name(&arts.trials),
        "config": report.config,
        "config_toml": report.config.to_toml_string()?,
    });
    let text = serde_json::to_string_pretty(&meta).map_err(|e| Error::invalid(e.to_string()))?;
    std::fs::write(&arts.metadata, text + "\n").map_err(|source| Error::Io {
        path: arts.metadata.clone(),
        source,
    })?;
    Ok(arts)
}
