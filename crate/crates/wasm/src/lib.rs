//! Browser bindings. Every entry point takes plain numbers and returns a JSON
//! string; the `*_report` functions are the same computations for native use.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use relaycs::array::{steering_vector, SteeringDictionary};
use relaycs::channel::sample_channel;
use relaycs::diagnosis::{diagnose, RelayLink};
use relaycs::estimator::{estimate_channel, nmse, EstimationRegime};
use relaycs::impairments::{corrupt_channel, BlockageKind, BlockageMask};
use relaycs::recovery::SolverConfig;
use relaycs::sounding::{sample_beams, sample_codebook, simulate_measurements};
use relaycs::C64;
use serde::Serialize;
use wasm_bindgen::prelude::*;

const PATTERN_POINTS: usize = 361;
/// Floor for dB plots.
const FLOOR_DB: f64 = -60.0;

fn db(p: f64) -> f64 {
    (10.0 * p.log10()).max(FLOOR_DB)
}

fn kind_of(name: &str) -> relaycs::Result<BlockageKind> {
    name.parse()
}

#[derive(Debug, Serialize)]
pub struct BeamPattern {
    /// Degrees, -90..=90.
    pub angles: Vec<f64>,
    pub ideal_db: Vec<f64>,
    pub faulty_db: Vec<f64>,
    pub blocked: Vec<usize>,
    pub coefficients: Vec<[f64; 2]>,
}

/// Array gain `N·|a(θ)^H B a(θ₀)|²` of an `n`-element array steered to
/// `steer_deg`, with and without `faults` blocked elements.
pub fn beam_pattern_report(n: usize, faults: usize, kind: &str, steer_deg: f64, seed: u64) -> relaycs::Result<BeamPattern> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mask = BlockageMask::sample(&mut rng, n, faults, kind_of(kind)?)?;
    let steer = steering_vector(n, steer_deg.to_radians())?;
    let weights: Vec<C64> = steer.iter().zip(mask.coefficients()).map(|(a, b)| a * b).collect();
    let mut out = BeamPattern {
        angles: Vec::with_capacity(PATTERN_POINTS),
        ideal_db: Vec::with_capacity(PATTERN_POINTS),
        faulty_db: Vec::with_capacity(PATTERN_POINTS),
        blocked: mask.support().to_vec(),
        coefficients: mask.coefficients().iter().map(|c| [c.re, c.im]).collect(),
    };
    for i in 0..PATTERN_POINTS {
        let deg = -90.0 + 180.0 * i as f64 / (PATTERN_POINTS - 1) as f64;
        let a = steering_vector(n, deg.to_radians())?;
        let ideal: C64 = a.iter().zip(steer.iter()).map(|(x, w)| x.conj() * w).sum();
        let faulty: C64 = a.iter().zip(&weights).map(|(x, w)| x.conj() * w).sum();
        out.angles.push(deg);
        out.ideal_db.push(db(n as f64 * ideal.norm_sqr()));
        out.faulty_db.push(db(n as f64 * faulty.norm_sqr()));
    }
    Ok(out)
}

#[derive(Debug, Serialize)]
pub struct DiagnosisDemo {
    pub success: bool,
    pub missed: usize,
    pub false_alarm: usize,
    pub true_blocked: Vec<usize>,
    pub estimated_blocked: Vec<usize>,
    /// `|b_i|` per element.
    pub true_magnitude: Vec<f64>,
    pub estimated_magnitude: Vec<f64>,
}

/// One relay diagnosis of `faults` blocked elements from `m_bs` beams.
pub fn diagnosis_report(n: usize, m_bs: usize, faults: usize, kind: &str, snr_db: f64, seed: u64) -> relaycs::Result<DiagnosisDemo> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let truth = BlockageMask::sample(&mut rng, n, faults, kind_of(kind)?)?;
    let p = sample_beams(&mut rng, n, m_bs);
    let link = RelayLink::new(n, 1.0, C64::new(1.0, 0.0), 0.5, snr_db)?;
    let res = diagnose(&mut rng, &p, &link, &truth, &SolverConfig::default())?;
    let mags = |m: &BlockageMask| m.coefficients().iter().map(|c| c.norm()).collect();
    Ok(DiagnosisDemo {
        success: res.success,
        missed: res.support_errors.0,
        false_alarm: res.support_errors.1,
        true_blocked: truth.support().to_vec(),
        estimated_blocked: res.estimated_mask.support().to_vec(),
        true_magnitude: mags(&truth),
        estimated_magnitude: mags(&res.estimated_mask),
    })
}

#[derive(Debug, Serialize)]
pub struct RegimeResult {
    pub regime: &'static str,
    pub nmse_db: f64,
}

#[derive(Debug, Serialize)]
pub struct EstimationDemo {
    pub n_bs: usize,
    pub n_ms: usize,
    pub diagnosis_success: bool,
    pub results: Vec<RegimeResult>,
}

/// One channel estimated under every regime on a `n_ms × n_bs` link.
pub fn estimation_report(
    n_bs: usize,
    n_ms: usize,
    m_bs: usize,
    m_ms: usize,
    faults: usize,
    snr_db: f64,
    seed: u64,
) -> relaycs::Result<EstimationDemo> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bs = SteeringDictionary::sine_uniform(n_bs, n_bs)?;
    let ms = SteeringDictionary::sine_uniform(n_ms, n_ms)?;
    let cfg = SolverConfig::default();
    let cb = sample_codebook(&mut rng, n_bs, n_ms, m_bs, m_ms)?;
    let h = sample_channel(&mut rng, 3, &bs, &ms)?.matrix;
    let mask = BlockageMask::sample(&mut rng, n_bs, faults, BlockageKind::Mixed)?;
    let faulty = corrupt_channel(&h, &mask, &BlockageMask::identity(n_ms))?;
    let link = RelayLink::new(n_bs, 1.0, C64::new(1.0, 0.0), 0.5, 30.0)?;
    let diag = diagnose(&mut rng, cb.p(), &link, &mask, &cfg)?;

    let mut results = Vec::new();
    for regime in EstimationRegime::ALL {
        let channel = if regime == EstimationRegime::FaultFree { &h } else { &faulty };
        let batch = simulate_measurements(&mut rng, &cb, regime.formulation(), channel, snr_db)?;
        let est = estimate_channel(&batch, &cb, &bs, &ms, regime, Some(&diag.estimated_mask), &cfg)?;
        results.push(RegimeResult {
            regime: regime.as_str(),
            nmse_db: 10.0 * nmse(&h, &est.matrix)?.log10(),
        });
    }
    Ok(EstimationDemo {
        n_bs,
        n_ms,
        diagnosis_success: diag.success,
        results,
    })
}

fn to_js<T: Serialize>(r: relaycs::Result<T>) -> Result<String, JsError> {
    let v = r.map_err(|e| JsError::new(&e.to_string()))?;
    serde_json::to_string(&v).map_err(|e| JsError::new(&e.to_string()))
}

#[wasm_bindgen]
pub fn beam_pattern(n: usize, faults: usize, kind: &str, steer_deg: f64, seed: u64) -> Result<String, JsError> {
    to_js(beam_pattern_report(n, faults, kind, steer_deg, seed))
}

#[wasm_bindgen]
pub fn relay_diagnosis(n: usize, m_bs: usize, faults: usize, kind: &str, snr_db: f64, seed: u64) -> Result<String, JsError> {
    to_js(diagnosis_report(n, m_bs, faults, kind, snr_db, seed))
}

#[wasm_bindgen]
pub fn channel_estimation(
    n_bs: usize,
    n_ms: usize,
    m_bs: usize,
    m_ms: usize,
    faults: usize,
    snr_db: f64,
    seed: u64,
) -> Result<String, JsError> {
    to_js(estimation_report(n_bs, n_ms, m_bs, m_ms, faults, snr_db, seed))
}
