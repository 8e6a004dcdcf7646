//! Acceptance suite. Runs every criterion and prints one PASS/FAIL line each.
//! Failures make the process exit non-zero only with `ACCEPTANCE_STRICT=1`.
//!
//! `cargo test -p relaycs-cli --test acceptance -- 5 9` runs a subset.

use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::Instant;

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use relaycs::array::SteeringDictionary;
use relaycs::channel::{sample_channel, vec_transpose};
use relaycs::diagnosis::{coefficients_from_innovation, RelayLink};
use relaycs::estimator::{estimate_channel, nmse, EstimationRegime};
use relaycs::experiments::{run_fig1, run_fig2, run_fig3, ExperimentConfig, ExperimentReport};
use relaycs::impairments::{corrupt_channel, BlockageKind, BlockageMask};
use relaycs::linalg::{kron, matvec};
use relaycs::recovery::{lasso_solve, omp_solve, soft_threshold, sparse_estimate, LassoOptions, SolverConfig};
use relaycs::sounding::{assemble_psi, sample_codebook, simulate_measurements, Formulation, SoundingCodebook};
use relaycs::{complex_gaussian, C64};

struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Self {
            pass,
            detail: detail.into(),
        }
    }
}

type Criterion = (u32, &'static str, fn() -> Outcome);

const CRITERIA: [Criterion; 9] = [
    (1, "stacking identity", stacking_identity),
    (2, "corruption factorization", corruption_factorization),
    (3, "noiseless CS exactness", noiseless_exactness),
    (4, "diagnosis reconstruction identity", reconstruction_identity),
    (5, "diagnosis success trend", diagnosis_trend),
    (6, "NMSE vs measurements trends", nmse_vs_measurements),
    (7, "NMSE vs SNR trends", nmse_vs_snr),
    (8, "solver oracle suite", solver_oracles),
    (9, "determinism", determinism),
];

fn main() -> ExitCode {
    let selected: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = Vec::new();
    for (id, name, check) in CRITERIA {
        if !selected.is_empty() && !selected.contains(&id) {
            continue;
        }
        let started = Instant::now();
        let out = check();
        let verdict = if out.pass { "PASS" } else { "FAIL" };
        println!(
            "criterion {id} ({name}): {verdict} [{:.1}s] {}",
            started.elapsed().as_secs_f64(),
            out.detail
        );
        if !out.pass {
            failed.push(id);
        }
    }
    if failed.is_empty() {
        println!("acceptance: all selected criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: failed criteria {failed:?}");
        if std::env::var("ACCEPTANCE_STRICT").is_ok_and(|v| v == "1") {
            ExitCode::FAILURE
        } else {
            ExitCode::SUCCESS
        }
    }
}

fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Array2<C64> {
    Array2::from_shape_simple_fn((rows, cols), || complex_gaussian(rng, 1.0))
}

fn random_codebook(rng: &mut ChaCha8Rng) -> SoundingCodebook {
    let n_bs = rng.random_range(1..=8);
    let n_ms = rng.random_range(1..=8);
    let m_ms = rng.random_range(1..=4);
    let m = rng.random_range(1..=5);
    sample_codebook(rng, n_bs, n_ms, m_ms * m, m_ms).expect("valid shape")
}

/// `q_c^H H p_b` by explicit summation.
fn bilinear(q: &Array2<C64>, h: &Array2<C64>, p: &Array2<C64>, c: usize, b: usize) -> C64 {
    let mut acc = C64::new(0.0, 0.0);
    for i in 0..h.nrows() {
        for j in 0..h.ncols() {
            acc += q[[i, c]].conj() * h[[i, j]] * p[[j, b]];
        }
    }
    acc
}

fn stacking_identity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let cb = random_codebook(&mut rng);
        let h = random_matrix(&mut rng, cb.n_ms(), cb.n_bs());
        let y = matvec(&assemble_psi(&cb).view(), vec_transpose(&h).as_slice().unwrap());
        for c in 0..cb.m_ms() {
            for n in 0..cb.m() {
                let want = bilinear(cb.q(), &h, cb.p(), c, c * cb.m() + n);
                worst = worst.max((y[c * cb.m() + n] - want).norm());
            }
        }
    }
    Outcome::new(worst <= 1e-12, format!("max entry error {worst:.2e} over 100 instances (tol 1e-12)"))
}

fn corruption_factorization() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(102);
    let mut worst = 0.0f64;
    for i in 0..100 {
        let cb = random_codebook(&mut rng);
        let h = random_matrix(&mut rng, cb.n_ms(), cb.n_bs());
        let kind = [BlockageKind::Complete, BlockageKind::Partial, BlockageKind::Mixed][i % 3];
        let bs_faults = rng.random_range(0..=cb.n_bs());
        let ms_faults = rng.random_range(0..=cb.n_ms());
        let bs = BlockageMask::sample(&mut rng, cb.n_bs(), bs_faults, kind).unwrap();
        let ms = BlockageMask::sample(&mut rng, cb.n_ms(), ms_faults, kind).unwrap();
        let diag = |c: &[C64]| Array2::from_diag(&ndarray::Array1::from(c.to_vec()));
        let b_ms = diag(ms.coefficients());
        let b_bs_conj = diag(ms_conj(bs.coefficients()).as_slice());
        let psi = assemble_psi(&cb);
        let lhs_op = psi.dot(&kron(&b_ms.view(), &b_bs_conj.view()));
        let lhs = matvec(&lhs_op.view(), vec_transpose(&h).as_slice().unwrap());
        let corrupted = corrupt_channel(&h, &bs, &ms).unwrap();
        let rhs = matvec(&psi.view(), vec_transpose(&corrupted).as_slice().unwrap());
        for (a, b) in lhs.iter().zip(&rhs) {
            worst = worst.max((a - b).norm());
        }
    }
    Outcome::new(worst <= 1e-12, format!("max entry error {worst:.2e} over 100 instances (tol 1e-12)"))
}

fn ms_conj(v: &[C64]) -> Vec<C64> {
    v.iter().map(|c| c.conj()).collect()
}

/// Noiseless fault-free trials with debiased LASSO; returns (exact, total).
fn noiseless_trials(m_bs: usize, m_ms: usize, trials: u64) -> relaycs::Result<(usize, u64)> {
    let bs = SteeringDictionary::sine_uniform(64, 64)?;
    let ms = SteeringDictionary::sine_uniform(32, 32)?;
    let cfg = SolverConfig::default();
    let mut exact = 0;
    for seed in 0..trials {
        let mut rng = ChaCha8Rng::seed_from_u64(3000 + seed);
        let cb = sample_codebook(&mut rng, 64, 32, m_bs, m_ms)?;
        let ch = sample_channel(&mut rng, 3, &bs, &ms)?;
        let batch = simulate_measurements(&mut rng, &cb, Formulation::Proposed, &ch.matrix, f64::INFINITY)?;
        let est = estimate_channel(&batch, &cb, &bs, &ms, EstimationRegime::FaultFree, None, &cfg)?;
        if nmse(&ch.matrix, &est.matrix)? < 1e-6 {
            exact += 1;
        }
    }
    Ok((exact, trials))
}

fn noiseless_exactness() -> Outcome {
    match noiseless_trials(121, 4, 100) {
        Ok((exact, n)) => Outcome::new(exact >= 99, format!("{exact}/{n} trials with NMSE < 1e-6 (need 99)")),
        Err(e) => {
            let nearest = match noiseless_trials(120, 4, 100) {
                Ok((exact, n)) => format!("nearest valid point M_BS=120, M_MS=4: {exact}/{n} exact"),
                Err(e) => format!("nearest valid point failed: {e}"),
            };
            Outcome::new(false, format!("M_BS=121, M_MS=4 is not a valid codebook ({e}); {nearest}"))
        }
    }
}

fn reconstruction_identity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(104);
    let mut worst = 0.0f64;
    let mut checked = 0;
    for i in 0..60 {
        let n = [16, 32, 64][i % 3];
        let kind = [BlockageKind::Complete, BlockageKind::Partial, BlockageKind::Mixed][(i / 3) % 3];
        let aod = rng.random::<f64>() * std::f64::consts::TAU;
        let gain = complex_gaussian(&mut rng, 1.0);
        let link = RelayLink::new(n, 1.0, gain, aod, 30.0).unwrap();
        let faults = rng.random_range(0..=n / 2);
        let mask = BlockageMask::sample(&mut rng, n, faults, kind).unwrap();
        let g: Vec<C64> = link
            .h_r
            .iter()
            .zip(mask.coefficients())
            .map(|(h, b)| (b - 1.0) * h)
            .collect();
        let b_hat = coefficients_from_innovation(&g, link.h_r.as_slice().unwrap()).unwrap();
        for (est, truth) in b_hat.iter().zip(mask.coefficients()) {
            worst = worst.max((est - truth).norm());
            checked += 1;
        }
    }
    Outcome::new(worst <= 1e-12, format!("max coefficient error {worst:.2e} over {checked} elements (tol 1e-12)"))
}

fn diagnosis_trend() -> Outcome {
    let mut cfg = ExperimentConfig::fig1();
    cfg.faults = vec![8];
    cfg.trials = 500;
    cfg.relay.snr_db = 30.0;
    let report = match run_fig1(&cfg) {
        Ok(r) => r,
        Err(e) => return Outcome::new(false, format!("run failed: {e}")),
    };
    let curve = |kind| -> Vec<(usize, f64, f64)> {
        cfg.m_bs
            .iter()
            .map(|&m| {
                let r = report.success_at(kind, 8, m).expect("row present");
                (m, r.success_rate, r.std_err)
            })
            .collect()
    };
    let complete = curve(BlockageKind::Complete);
    let partial = curve(BlockageKind::Partial);
    let monotone = complete
        .windows(2)
        .all(|w| w[1].1 >= w[0].1 - 2.0 * (w[0].2.powi(2) + w[1].2.powi(2)).sqrt());
    let reach = complete.iter().find(|c| c.0 <= 64 && c.1 >= 0.99).map(|c| c.0);
    let ordered = complete.iter().zip(&partial).all(|(c, p)| p.1 <= c.1);
    let excess: Vec<String> = complete
        .iter()
        .zip(&partial)
        .filter(|(c, p)| p.1 > c.1)
        .map(|(c, p)| {
            let se = (c.2.powi(2) + p.2.powi(2)).sqrt();
            let within = if se > 0.0 { format!("{:.2} SE", (p.1 - c.1) / se) } else { "zero-variance".into() };
            format!("M_BS={} by {:.3} ({within})", c.0, p.1 - c.1)
        })
        .collect();
    let fmt = |v: &[(usize, f64, f64)]| v.iter().map(|c| format!("{}:{:.3}", c.0, c.1)).collect::<Vec<_>>().join(" ");
    Outcome::new(
        monotone && reach.is_some() && ordered,
        format!(
            "non-decreasing within 2 SE: {monotone}; first M_BS with >= 0.99: {reach:?}; partial <= complete: {ordered} {excess:?}; complete [{}]; partial [{}]",
            fmt(&complete),
            fmt(&partial)
        ),
    )
}

fn db(report: &ExperimentReport, regime: EstimationRegime, faults: usize, m_bs: usize, snr: f64) -> f64 {
    report
        .nmse_at(regime, faults, m_bs, snr)
        .unwrap_or_else(|| panic!("missing row {regime} S={faults} M_BS={m_bs} snr={snr}"))
        .mean_nmse_db
}

fn nmse_vs_measurements() -> Outcome {
    use EstimationRegime::*;
    let cfg = ExperimentConfig::fig2();
    assert_eq!(cfg.m_ms, 4);
    let report = match run_fig2(&cfg) {
        Ok(r) => r,
        Err(e) => return Outcome::new(false, format!("run failed: {e}")),
    };
    let snr = cfg.snr_db[0];
    let d = |regime, faults, m| db(&report, regime, faults, m, snr);
    let mut notes = Vec::new();

    // (a)
    let a = cfg
        .m_bs
        .iter()
        .all(|&m| d(FaultUnaware, 16, m) > d(FaultUnaware, 8, m) && d(FaultUnaware, 8, m) > d(FaultFree, 0, m));
    notes.push(format!("(a) {}", if a { "ok" } else { "violated" }));

    // (b)
    let mut b = true;
    let mut pairs = 0;
    for &m in &cfg.m_bs {
        if !cfg.m_bs.contains(&(2 * m)) {
            continue;
        }
        for s in [8, 16] {
            let g1 = d(FaultUnaware, s, m) - d(FaultFree, 0, m);
            let g2 = d(FaultUnaware, s, 2 * m) - d(FaultFree, 0, 2 * m);
            pairs += 1;
            if g2 < 0.9 * g1 {
                b = false;
                notes.push(format!("(b) S={s} gap {g1:.2} dB at {m} -> {g2:.2} dB at {}", 2 * m));
            }
        }
    }
    notes.push(format!("(b) {} over {pairs} doublings", if b { "ok" } else { "violated" }));

    // (c)
    let mut c = true;
    let mut eligible = 0;
    for row in report.nmse_rows().iter().filter(|r| r.regime == RelayAided) {
        if row.diagnosis_success_rate.is_some_and(|s| s > 0.99) {
            eligible += 1;
            let gap = row.mean_nmse_db - d(FaultFree, 0, row.m_bs);
            if gap.abs() > 1.0 {
                c = false;
                notes.push(format!("(c) S={} M_BS={} relay gap {gap:.2} dB", row.faults, row.m_bs));
            }
        }
    }
    let max_success = report
        .nmse_rows()
        .iter()
        .filter_map(|r| r.diagnosis_success_rate)
        .fold(0.0, f64::max);
    notes.push(format!(
        "(c) {} at {eligible} points with diagnosis success > 0.99 (max success {max_success:.3})",
        if c { "ok" } else { "violated" }
    ));

    // (d)
    let mut dd = true;
    for &m in &cfg.m_bs {
        let cases = [(FaultFree, 0), (FaultUnaware, 8), (FaultUnaware, 16)];
        for (regime, s) in cases {
            let proposed = d(regime, s, m);
            let baseline = d(BaselinePsiA, s, m);
            if proposed > baseline {
                dd = false;
                notes.push(format!("(d) S={s} M_BS={m}: proposed {proposed:.2} dB > baseline {baseline:.2} dB"));
            }
        }
    }
    notes.push(format!("(d) {}", if dd { "ok" } else { "violated" }));

    let curve = cfg
        .m_bs
        .iter()
        .map(|&m| {
            format!(
                "{m}: ff {:.2} u8 {:.2} u16 {:.2} r8 {:.2} r16 {:.2} bl {:.2}",
                d(FaultFree, 0, m),
                d(FaultUnaware, 8, m),
                d(FaultUnaware, 16, m),
                d(RelayAided, 8, m),
                d(RelayAided, 16, m),
                d(BaselinePsiA, 0, m)
            )
        })
        .collect::<Vec<_>>()
        .join("; ");
    notes.push(format!("curves dB [{curve}]"));
    Outcome::new(a && b && c && dd, notes.join("; "))
}

fn nmse_vs_snr() -> Outcome {
    use EstimationRegime::*;
    let cfg = ExperimentConfig::fig3();
    assert_eq!(cfg.m_bs, vec![121]);
    let report = match run_fig3(&cfg) {
        Ok(r) => r,
        Err(e) => return Outcome::new(false, format!("run failed: {e}")),
    };
    let d = |regime, faults, snr| db(&report, regime, faults, 121, snr);
    let snrs = &cfg.snr_db;
    let n = snrs.len();
    let mut notes = Vec::new();
    let mut saturates = true;
    for s in [8, 16] {
        let curve: Vec<f64> = snrs.iter().map(|&x| d(FaultUnaware, s, x)).collect();
        let decreasing = curve.windows(2).all(|w| w[1] <= w[0]) && curve[n - 1] < curve[0];
        let tail = (curve[n - 1] - curve[n - 2]).abs();
        let ok = decreasing && tail < 0.5;
        saturates &= ok;
        notes.push(format!(
            "unaware S={s} [{}] decreasing {decreasing}, last step {tail:.2} dB (need < 0.5)",
            curve.iter().map(|v| format!("{v:.2}")).collect::<Vec<_>>().join(" ")
        ));
    }
    let gap = |s| snrs.iter().map(|&x| d(RelayAided, s, x) - d(FaultFree, 0, x)).sum::<f64>() / n as f64;
    let (g8, g16) = (gap(8), gap(16));
    let wider = g16 > g8;
    notes.push(format!("mean relay gap S=8 {g8:.3} dB, S=16 {g16:.3} dB"));
    Outcome::new(saturates && wider, notes.join("; "))
}

fn solver_oracles() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(108);
    // orthonormal designs: columns of a unitary DFT
    let known = LassoOptions {
        lipschitz: Some(1.0),
        ..LassoOptions::default()
    };
    let mut worst = 0.0f64;
    for trial in 0..20 {
        let m = 32;
        let n = 8 + trial % 24;
        let dft = SteeringDictionary::sine_uniform(m, m).unwrap();
        let cols: Vec<usize> = rand::seq::index::sample(&mut rng, m, n).into_vec();
        let a = dft.matrix().select(ndarray::Axis(1), &cols);
        let y: Vec<C64> = (0..m).map(|_| complex_gaussian(&mut rng, 1.0)).collect();
        let lambda = 0.3 + rng.random::<f64>();
        let res = lasso_solve(&a, &y, lambda, &known).unwrap();
        for (j, x) in res.estimate.iter().enumerate() {
            let corr: C64 = a.column(j).iter().zip(&y).map(|(c, v)| c.conj() * v).sum();
            worst = worst.max((x - soft_threshold(corr, lambda)).norm());
        }
    }
    let closed_form = worst <= 1e-8;

    let mut agree = 0;
    for _ in 0..200 {
        let rows = rng.random_range(40..=64);
        let cols = rng.random_range(128..=256);
        let k = rng.random_range(1..=4);
        let a = Array2::from_shape_simple_fn((rows, cols), || complex_gaussian(&mut rng, 1.0 / rows as f64));
        let support: Vec<usize> = {
            let mut s = rand::seq::index::sample(&mut rng, cols, k).into_vec();
            s.sort_unstable();
            s
        };
        let mut x = vec![C64::new(0.0, 0.0); cols];
        for &i in &support {
            let mag = 0.5 + rng.random::<f64>();
            x[i] = C64::from_polar(mag, rng.random::<f64>() * std::f64::consts::TAU);
        }
        let y = matvec(&a.view(), &x);
        let lasso = sparse_estimate(&a, &y, 0.0, &SolverConfig::default()).unwrap();
        let omp = omp_solve(&a, &y, k).unwrap();
        if lasso.support == support && omp.support == support {
            agree += 1;
        }
    }
    let agreement = agree >= 190;
    Outcome::new(
        closed_form && agreement,
        format!("orthonormal LASSO vs soft threshold max error {worst:.2e} (tol 1e-8); LASSO = OMP = truth on {agree}/200 (need 190)"),
    )
}

fn run_cli(out: &Path, extra: &[&str]) -> Result<(), String> {
    let status = Command::new(env!("CARGO_BIN_EXE_relaycs"))
        .args(["fig1", "--seed", "42", "--out"])
        .arg(out)
        .args(extra)
        .stdout(std::process::Stdio::null())
        .stderr(std::process::Stdio::null())
        .status()
        .map_err(|e| e.to_string())?;
    status.success().then_some(()).ok_or_else(|| format!("exit status {status}"))
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().expect("tempdir");
    let runs = [("a", vec![]), ("b", vec![]), ("t1", vec!["--threads", "1"]), ("t3", vec!["--threads", "3"])];
    for (name, extra) in &runs {
        if let Err(e) = run_cli(&dir.path().join(name), extra) {
            return Outcome::new(false, format!("run {name} failed: {e}"));
        }
    }
    let read = |run: &str, file: &str| std::fs::read(dir.path().join(run).join(file)).expect("output written");
    let mut identical = true;
    let mut notes = Vec::new();
    for file in ["fig1.csv", "fig1_trials.csv"] {
        let reference = read("a", file);
        for (run, _) in &runs[1..] {
            if read(run, file) != reference {
                identical = false;
                notes.push(format!("{file} differs in run {run}"));
            }
        }
    }
    notes.push(format!(
        "repeat runs and --threads 1/3 {}",
        if identical { "byte-identical" } else { "differ" }
    ));
    Outcome::new(identical, notes.join("; "))
}
