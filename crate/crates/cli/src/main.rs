use std::path::PathBuf;
use std::time::Instant;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use relaycs::experiments::{emit_csv, run, ExperimentConfig, ExperimentReport, Records, Scenario};

#[derive(Parser, Debug)]
#[command(name = "relaycs", version, about = "Relay-aided mmWave channel estimation experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Relay diagnosis success rate against the number of beams.
    Fig1(RunArgs),
    /// Channel NMSE against the number of beams.
    Fig2(RunArgs),
    /// Channel NMSE against the MS link SNR.
    Fig3(RunArgs),
    /// Full grid over every axis of the config file.
    Custom(RunArgs),
}

#[derive(Args, Debug)]
struct RunArgs {
    /// TOML file layered over the scenario defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed; overrides the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, default_value = "results")]
    out: PathBuf,
    /// Monte Carlo trials per sweep point; overrides the config.
    #[arg(long)]
    trials: Option<usize>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    let (scenario, args) = match cli.command {
        Command::Fig1(a) => (Scenario::Fig1Diagnosis, a),
        Command::Fig2(a) => (Scenario::Fig2NmseVsMeasurements, a),
        Command::Fig3(a) => (Scenario::Fig3NmseVsSnr, a),
        Command::Custom(a) => (Scenario::Custom, a),
    };
    let mut cfg = match &args.config {
        Some(path) => ExperimentConfig::from_path(path, scenario)
            .with_context(|| format!("loading {}", path.display()))?,
        None => ExperimentConfig::defaults_for(scenario),
    };
    // the subcommand wins over a `scenario` key in the file
    cfg.scenario = scenario;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(trials) = args.trials {
        cfg.trials = trials;
    }
    cfg.validate()?;

    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = args.threads {
        anyhow::ensure!(n > 0, "--threads must be positive");
        pool = pool.num_threads(n);
    }
    let pool = pool.build().context("building the worker pool")?;

    eprintln!(
        "{}: {} trials, seed {}, {} threads",
        cfg.scenario,
        cfg.trials,
        cfg.seed,
        pool.current_num_threads()
    );
    let started = Instant::now();
    let report = pool.install(|| run(&cfg))?;
    let arts = emit_csv(&report, &args.out)?;
    eprintln!("done in {:.1?}", started.elapsed());
    print_summary(&report);
    eprintln!("wrote {}", arts.summary.display());
    eprintln!("wrote {}", arts.trials.display());
    eprintln!("wrote {}", arts.metadata.display());
    Ok(())
}

fn print_summary(report: &ExperimentReport) {
    match &report.records {
        Records::Diagnosis { summary, .. } => {
            println!("{:>6} {:>9} {:>6} {:>9} {:>8}", "m_bs", "blockage", "faults", "success", "std_err");
            for r in summary {
                println!(
                    "{:>6} {:>9} {:>6} {:>9.4} {:>8.4}",
                    r.m_bs, r.blockage, r.faults, r.success_rate, r.std_err
                );
            }
        }
        Records::Nmse { summary, .. } => {
            println!(
                "{:>6} {:>7} {:>9} {:>6} {:>15} {:>10} {:>8}",
                "m_bs", "snr_db", "blockage", "faults", "regime", "nmse_db", "diag"
            );
            for r in summary {
                println!(
                    "{:>6} {:>7.1} {:>9} {:>6} {:>15} {:>10.3} {:>8}",
                    r.m_bs,
                    r.snr_db,
                    r.blockage.map(|b| b.to_string()).unwrap_or_else(|| "-".into()),
                    r.faults,
                    r.regime,
                    r.mean_nmse_db,
                    r.diagnosis_success_rate.map(|s| format!("{s:.3}")).unwrap_or_default()
                );
            }
        }
    }
}
