use ndarray::{s, Array2};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::config::{ExperimentConfig, Scenario};
use crate::array::SteeringDictionary;
use crate::channel::{channel_of_sparse, sample_channel};
use crate::diagnosis::{diagnose, RelayLink};
use crate::estimator::{nmse, EstimationRegime};
use crate::impairments::{corrupt_channel, BlockageKind, BlockageMask};
use crate::recovery::SensingOperator;
use crate::sounding::{
    baseline_to_standard, measure, sample_beams, Formulation, NoiseRealization, SoundingCodebook,
};
use crate::{noise_variance_for_snr, Result, C64};

const SLOT_BEAMS: u64 = 0;
const SLOT_COMBINERS: u64 = 1;
const SLOT_CHANNEL: u64 = 2;
const SLOT_MS_NOISE: u64 = 3;
const SLOT_MASK: u64 = 1 << 16;
const SLOT_RELAY_NOISE: u64 = 2 << 16;

/// Independent stream for one random component of one trial.
///
/// Streams do not depend on the sweep point, so every point of a sweep sees
/// the same beams, channel, masks and unit-variance noise, and a larger
/// `M_BS` extends the beams and noise of a smaller one.
pub fn trial_stream(seed: u64, trial: u64, slot: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&trial.to_le_bytes());
    key[16..24].copy_from_slice(&slot.to_le_bytes());
    ChaCha8Rng::from_seed(key)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiagnosisRecord {
    pub m_bs: usize,
    pub blockage: BlockageKind,
    pub faults: usize,
    pub trial: usize,
    pub success: bool,
    pub missed: usize,
    pub false_alarm: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NmseRecord {
    pub m_bs: usize,
    pub m_ms: usize,
    pub snr_db: f64,
    /// `None` for fault-free rows.
    pub blockage: Option<BlockageKind>,
    pub faults: usize,
    pub regime: EstimationRegime,
    pub trial: usize,
    pub nmse: f64,
    /// Relay outcome behind a relay-aided estimate.
    pub diagnosis_success: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuccessRow {
    pub m_bs: usize,
    pub blockage: BlockageKind,
    pub faults: usize,
    pub relay_snr_db: f64,
    pub trials: usize,
    pub success_rate: f64,
    pub std_err: f64,
    pub mean_missed: f64,
    pub mean_false_alarm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NmseRow {
    pub m_bs: usize,
    pub m_ms: usize,
    pub snr_db: f64,
    pub blockage: Option<BlockageKind>,
    pub faults: usize,
    pub regime: EstimationRegime,
    pub trials: usize,
    pub mean_nmse: f64,
    pub std_err: f64,
    pub mean_nmse_db: f64,
    pub diagnosis_success_rate: Option<f64>,
}

#[derive(Debug, Clone)]
pub enum Records {
    Diagnosis {
        trials: Vec<DiagnosisRecord>,
        summary: Vec<SuccessRow>,
    },
    Nmse {
        trials: Vec<NmseRecord>,
        summary: Vec<NmseRow>,
    },
}

#[derive(Debug, Clone)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub records: Records,
}

impl ExperimentReport {
    pub fn success_rows(&self) -> &[SuccessRow] {
        match &self.records {
            Records::Diagnosis { summary, .. } => summary,
            Records::Nmse { .. } => &[],
        }
    }

    pub fn nmse_rows(&self) -> &[NmseRow] {
        match &self.records {
            Records::Nmse { summary, .. } => summary,
            Records::Diagnosis { .. } => &[],
        }
    }

    /// Summary row for one curve point, if present.
    pub fn nmse_at(
        &self,
        regime: EstimationRegime,
        faults: usize,
        m_bs: usize,
        snr_db: f64,
    ) -> Option<&NmseRow> {
        self.nmse_rows()
            .iter()
            .find(|r| r.regime == regime && r.faults == faults && r.m_bs == m_bs && r.snr_db == snr_db)
    }

    pub fn success_at(&self, kind: BlockageKind, faults: usize, m_bs: usize) -> Option<&SuccessRow> {
        self.success_rows()
            .iter()
            .find(|r| r.blockage == kind && r.faults == faults && r.m_bs == m_bs)
    }
}

/// Runs the scenario named in `cfg`.
pub fn run(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    match cfg.scenario {
        Scenario::Fig1Diagnosis => run_fig1(cfg),
        _ => run_nmse(cfg),
    }
}

/// Relay diagnosis success rate over `m_bs × blockage × faults`.
pub fn run_fig1(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let m_max = *cfg.m_bs.iter().max().expect("validated non-empty");
    let link = RelayLink::new(cfg.n_bs, cfg.relay.gain, cfg.relay.path_gain, cfg.relay.aod, cfg.relay.snr_db)?;
    let per_trial = map_trials(cfg.trials, |trial| {
        let t = trial as u64;
        let beams = sample_beams(&mut trial_stream(cfg.seed, t, SLOT_BEAMS), cfg.n_bs, m_max);
        let mut out = Vec::new();
        for &m_bs in &cfg.m_bs {
            let p = beams.slice(s![.., ..m_bs]).to_owned();
            for (fi, &faults) in cfg.faults.iter().enumerate() {
                for &kind in &cfg.blockage {
                    let mask = sample_mask(cfg, t, fi, faults, kind)?;
                    let mut noise = trial_stream(cfg.seed, t, SLOT_RELAY_NOISE + fi as u64);
                    let res = diagnose(&mut noise, &p, &link, &mask, &cfg.diagnosis)?;
                    out.push(DiagnosisRecord {
                        m_bs,
                        blockage: kind,
                        faults,
                        trial,
                        success: res.success,
                        missed: res.support_errors.0,
                        false_alarm: res.support_errors.1,
                    });
                }
            }
        }
        Ok(out)
    })?;
    let summary = summarize(&per_trial, |rows| {
        let first = &rows[0];
        let success: Vec<f64> = rows.iter().map(|r| f64::from(u8::from(r.success))).collect();
        let (success_rate, std_err) = mean_and_std_err(&success);
        let n = rows.len() as f64;
        SuccessRow {
            m_bs: first.m_bs,
            blockage: first.blockage,
            faults: first.faults,
            relay_snr_db: cfg.relay.snr_db,
            trials: rows.len(),
            success_rate,
            std_err,
            mean_missed: rows.iter().map(|r| r.missed as f64).sum::<f64>() / n,
            mean_false_alarm: rows.iter().map(|r| r.false_alarm as f64).sum::<f64>() / n,
        }
    });
    Ok(ExperimentReport {
        config: cfg.clone(),
        records: Records::Diagnosis {
            trials: per_trial.into_iter().flatten().collect(),
            summary,
        },
    })
}

/// Channel NMSE against the number of beams.
pub fn run_fig2(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    run_nmse(cfg)
}

/// Channel NMSE against the MS link SNR.
pub fn run_fig3(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    run_nmse(cfg)
}

/// Channel NMSE over `m_bs × snr_db × faults × blockage` for every regime
/// listed in the config.
pub fn run_nmse(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let bs = SteeringDictionary::sine_uniform(cfg.n_bs, cfg.g_bs)?;
    let ms = SteeringDictionary::sine_uniform(cfg.n_ms, cfg.g_ms)?;
    let link = RelayLink::new(cfg.n_bs, cfg.relay.gain, cfg.relay.path_gain, cfg.relay.aod, cfg.relay.snr_db)?;
    let ctx = NmseContext { cfg, bs: &bs, ms: &ms, link: &link };
    let per_trial = map_trials(cfg.trials, |trial| ctx.trial(trial))?;
    let summary = summarize(&per_trial, |rows| {
        let first = &rows[0];
        let values: Vec<f64> = rows.iter().map(|r| r.nmse).collect();
        let (mean_nmse, std_err) = mean_and_std_err(&values);
        let diag: Vec<f64> = rows
            .iter()
            .filter_map(|r| r.diagnosis_success.map(|s| f64::from(u8::from(s))))
            .collect();
        NmseRow {
            m_bs: first.m_bs,
            m_ms: first.m_ms,
            snr_db: first.snr_db,
            blockage: first.blockage,
            faults: first.faults,
            regime: first.regime,
            trials: rows.len(),
            mean_nmse,
            std_err,
            mean_nmse_db: 10.0 * mean_nmse.log10(),
            diagnosis_success_rate: (!diag.is_empty()).then(|| mean_and_std_err(&diag).0),
        }
    });
    Ok(ExperimentReport {
        config: cfg.clone(),
        records: Records::Nmse {
            trials: per_trial.into_iter().flatten().collect(),
            summary,
        },
    })
}

struct NmseContext<'a> {
    cfg: &'a ExperimentConfig,
    bs: &'a SteeringDictionary,
    ms: &'a SteeringDictionary,
    link: &'a RelayLink,
}

struct Faulty {
    faults: usize,
    kind: BlockageKind,
    mask: BlockageMask,
    channel: Array2<C64>,
}

impl NmseContext<'_> {
    fn wants(&self, regime: EstimationRegime) -> bool {
        self.cfg.regimes.contains(&regime)
    }

    fn trial(&self, trial: usize) -> Result<Vec<NmseRecord>> {
        let cfg = self.cfg;
        let t = trial as u64;
        let m_max = *cfg.m_bs.iter().max().expect("validated non-empty");
        let beams = sample_beams(&mut trial_stream(cfg.seed, t, SLOT_BEAMS), cfg.n_bs, m_max);
        let q = sample_beams(&mut trial_stream(cfg.seed, t, SLOT_COMBINERS), cfg.n_ms, cfg.m_ms);
        let ch = sample_channel(&mut trial_stream(cfg.seed, t, SLOT_CHANNEL), cfg.paths, self.bs, self.ms)?;
        let mut faulty = Vec::new();
        for (fi, &faults) in cfg.faults.iter().enumerate() {
            for &kind in &cfg.blockage {
                let mask = sample_mask(cfg, t, fi, faults, kind)?;
                let channel = corrupt_channel(&ch.matrix, &mask, &BlockageMask::identity(cfg.n_ms))?;
                faulty.push((fi, Faulty { faults, kind, mask, channel }));
            }
        }

        let mut out = Vec::new();
        for &m_bs in &cfg.m_bs {
            let cb = SoundingCodebook::new(beams.slice(s![.., ..m_bs]).to_owned(), q.clone())?;
            let psi = Formulation::Proposed.psi(&cb);
            let proposed = SensingOperator::new(&Formulation::Proposed.sensing_matrix(&psi, self.bs, self.ms, None, None)?, &cfg.estimator);
            let baseline = if self.wants(EstimationRegime::BaselinePsiA) {
                let psi_a = Formulation::Baseline.psi(&cb);
                Some(SensingOperator::new(
                    &Formulation::Baseline.sensing_matrix(&psi_a, self.bs, self.ms, None, None)?,
                    &cfg.estimator,
                ))
            } else {
                None
            };
            // Relay outcome and corrected operator do not depend on the MS SNR.
            let mut relay = Vec::with_capacity(faulty.len());
            for (fi, f) in &faulty {
                if !self.wants(EstimationRegime::RelayAided) {
                    relay.push(None);
                    continue;
                }
                let mut noise = trial_stream(cfg.seed, t, SLOT_RELAY_NOISE + *fi as u64);
                let diag = diagnose(&mut noise, cb.p(), self.link, &f.mask, &cfg.diagnosis)?;
                let phi = Formulation::Proposed.sensing_matrix(&psi, self.bs, self.ms, Some(&diag.estimated_mask), None)?;
                relay.push(Some((diag.success, SensingOperator::new(&phi, &cfg.estimator))));
            }

            for &snr_db in &cfg.snr_db {
                let variance = noise_variance_for_snr(snr_db);
                let noise = NoiseRealization::sample(&mut trial_stream(cfg.seed, t, SLOT_MS_NOISE), m_bs, cfg.n_ms, variance);
                let record = |blockage, faults, regime, nmse, diagnosis_success| NmseRecord {
                    m_bs,
                    m_ms: cfg.m_ms,
                    snr_db,
                    blockage,
                    faults,
                    regime,
                    trial,
                    nmse,
                    diagnosis_success,
                };
                if self.wants(EstimationRegime::FaultFree) {
                    let e = self.score(&proposed, Formulation::Proposed, &cb, &ch.matrix, &ch.matrix, &noise)?;
                    out.push(record(None, 0, EstimationRegime::FaultFree, e, None));
                }
                if let Some(op) = &baseline {
                    let e = self.score(op, Formulation::Baseline, &cb, &ch.matrix, &ch.matrix, &noise)?;
                    out.push(record(None, 0, EstimationRegime::BaselinePsiA, e, None));
                }
                for ((_, f), relay) in faulty.iter().zip(&relay) {
                    let kind = Some(f.kind);
                    if self.wants(EstimationRegime::FaultUnaware) {
                        let e = self.score(&proposed, Formulation::Proposed, &cb, &f.channel, &ch.matrix, &noise)?;
                        out.push(record(kind, f.faults, EstimationRegime::FaultUnaware, e, None));
                    }
                    if let Some((success, op)) = relay {
                        let e = self.score(op, Formulation::Proposed, &cb, &f.channel, &ch.matrix, &noise)?;
                        out.push(record(kind, f.faults, EstimationRegime::RelayAided, e, Some(*success)));
                    }
                    if let Some(op) = &baseline {
                        let e = self.score(op, Formulation::Baseline, &cb, &f.channel, &ch.matrix, &noise)?;
                        out.push(record(kind, f.faults, EstimationRegime::BaselinePsiA, e, None));
                    }
                }
            }
        }
        Ok(out)
    }

    /// Measures `effective`, estimates against `op` and scores the estimate
    /// against the true channel `truth`.
    #[allow(clippy::too_many_arguments)]
    fn score(
        &self,
        op: &SensingOperator,
        formulation: Formulation,
        cb: &SoundingCodebook,
        effective: &Array2<C64>,
        truth: &Array2<C64>,
        noise: &NoiseRealization,
    ) -> Result<f64> {
        let batch = measure(cb, formulation, effective, Some(noise), None)?;
        let est = op.estimate(&batch.y, batch.noise_variance.sqrt(), &self.cfg.estimator)?;
        let z = match formulation {
            Formulation::Proposed => est.estimate,
            Formulation::Baseline => baseline_to_standard(&est.estimate, self.bs, self.ms),
        };
        nmse(truth, &channel_of_sparse(&z, self.bs, self.ms)?)
    }
}

fn sample_mask(cfg: &ExperimentConfig, trial: u64, fault_index: usize, faults: usize, kind: BlockageKind) -> Result<BlockageMask> {
    let mut rng = trial_stream(cfg.seed, trial, SLOT_MASK + fault_index as u64);
    BlockageMask::sample(&mut rng, cfg.n_bs, faults, kind)
}

fn map_trials<T, F>(trials: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> Result<T> + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..trials).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..trials).map(f).collect()
    }
}

/// Every trial emits its records in the same order; row `k` of the summary
/// aggregates record `k` of every trial, in trial order.
fn summarize<R, S>(per_trial: &[Vec<R>], row: impl Fn(&[&R]) -> S) -> Vec<S> {
    let Some(first) = per_trial.first() else {
        return Vec::new();
    };
    (0..first.len())
        .map(|k| {
            let column: Vec<&R> = per_trial.iter().map(|t| &t[k]).collect();
            row(&column)
        })
        .collect()
}

/// Sample mean and standard error of the mean.
pub fn mean_and_std_err(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}
