//! Channel estimation at the MS under the four comparison regimes, and the
//! NMSE score.

use std::fmt;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::array::SteeringDictionary;
use crate::channel::channel_of_sparse;
use crate::impairments::BlockageMask;
use crate::recovery::{SensingOperator, SolverConfig, SparseEstimate};
use crate::sounding::{baseline_to_standard, Formulation, MeasurementBatch, SoundingCodebook};
use crate::{Error, Result, C64};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimationRegime {
    /// Fault-free arrays, fault-free sensing matrix.
    FaultFree,
    /// Faulty BS array, but the MS keeps the fault-free sensing matrix.
    FaultUnaware,
    /// Faulty BS array, sensing matrix corrected with the relay's mask.
    RelayAided,
    /// Prior-art `Ψ_A` formulation (fault-unaware when the BS is faulty).
    BaselinePsiA,
}

impl EstimationRegime {
    pub const ALL: [EstimationRegime; 4] = [
        EstimationRegime::FaultFree,
        EstimationRegime::FaultUnaware,
        EstimationRegime::RelayAided,
        EstimationRegime::BaselinePsiA,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            EstimationRegime::FaultFree => "fault_free",
            EstimationRegime::FaultUnaware => "fault_unaware",
            EstimationRegime::RelayAided => "relay_aided",
            EstimationRegime::BaselinePsiA => "baseline_psi_a",
        }
    }

    pub fn formulation(&self) -> Formulation {
        match self {
            EstimationRegime::BaselinePsiA => Formulation::Baseline,
            _ => Formulation::Proposed,
        }
    }
}

impl fmt::Display for EstimationRegime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone)]
pub struct ChannelEstimate {
    /// `H̃`, `N_MS × N_BS`.
    pub matrix: Array2<C64>,
    pub recovery: SparseEstimate,
}

/// Sparse recovery against a prepared sensing matrix in `formulation`'s
/// column layout, then dictionary synthesis of `H̃`.
pub fn estimate_with_sensing(
    phi: &SensingOperator,
    formulation: Formulation,
    batch: &MeasurementBatch,
    bs: &SteeringDictionary,
    ms: &SteeringDictionary,
    cfg: &SolverConfig,
) -> Result<ChannelEstimate> {
    if batch.formulation != formulation {
        return Err(Error::invalid(format!(
            "measurements were taken with {:?} sounding, sensing matrix is {:?}",
            batch.formulation, formulation
        )));
    }
    if phi.matrix().ncols() != bs.grid_size() * ms.grid_size() {
        return Err(Error::invalid("sensing matrix does not match the dictionaries"));
    }
    let recovery = phi.estimate(&batch.y, batch.noise_variance.sqrt(), cfg)?;
    let z = match formulation {
        Formulation::Proposed => recovery.estimate.clone(),
        Formulation::Baseline => baseline_to_standard(&recovery.estimate, bs, ms),
    };
    let matrix = channel_of_sparse(&z, bs, ms)?;
    Ok(ChannelEstimate { matrix, recovery })
}

/// Estimates `H` from `batch` under `regime`.
///
/// `mask_knowledge` is the relay's BS mask estimate and is required for
/// [`EstimationRegime::RelayAided`]; the other regimes ignore it.
pub fn estimate_channel(
    batch: &MeasurementBatch,
    cb: &SoundingCodebook,
    bs: &SteeringDictionary,
    ms: &SteeringDictionary,
    regime: EstimationRegime,
    mask_knowledge: Option<&BlockageMask>,
    cfg: &SolverConfig,
) -> Result<ChannelEstimate> {
    let formulation = regime.formulation();
    let bs_mask = match regime {
        EstimationRegime::RelayAided => Some(mask_knowledge.ok_or_else(|| {
            Error::invalid("relay-aided estimation needs the relay's mask estimate")
        })?),
        _ => None,
    };
    let psi = formulation.psi(cb);
    let phi = formulation.sensing_matrix(&psi, bs, ms, bs_mask, None)?;
    estimate_with_sensing(&SensingOperator::new(&phi, cfg), formulation, batch, bs, ms, cfg)
}

/// `‖H − H̃‖_F² / ‖H‖_F²`.
pub fn nmse(h: &Array2<C64>, h_tilde: &Array2<C64>) -> Result<f64> {
    if h.dim() != h_tilde.dim() {
        return Err(Error::invalid(format!(
            "shapes differ: {:?} vs {:?}",
            h.dim(),
            h_tilde.dim()
        )));
    }
    let den: f64 = h.iter().map(|v| v.norm_sqr()).sum();
    if den == 0.0 {
        return Err(Error::UndefinedMetric("NMSE of a zero channel".into()));
    }
    let num: f64 = h.iter().zip(h_tilde).map(|(a, b)| (a - b).norm_sqr()).sum();
    Ok(num / den)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::sample_channel;
    use crate::complex_gaussian;
    use crate::impairments::{corrupt_channel, BlockageKind};
    use crate::sounding::{sample_codebook, simulate_measurements};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn nmse_trivial_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let h = Array2::from_shape_simple_fn((3, 4), || complex_gaussian(&mut rng, 1.0));
        assert_eq!(nmse(&h, &h).unwrap(), 0.0);
        assert!((nmse(&h, &Array2::zeros((3, 4))).unwrap() - 1.0).abs() < 1e-15);
        assert!((nmse(&h, &(&h * C64::new(2.0, 0.0))).unwrap() - 1.0).abs() < 1e-14);
        assert!(matches!(nmse(&Array2::zeros((2, 2)), &h.slice(ndarray::s![0..2, 0..2]).to_owned()), Err(Error::UndefinedMetric(_))));
        assert!(nmse(&h, &Array2::zeros((4, 3))).is_err());
    }

    #[test]
    fn nmse_scale_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let h = Array2::from_shape_simple_fn((3, 4), || complex_gaussian(&mut rng, 1.0));
        let g = Array2::from_shape_simple_fn((3, 4), || complex_gaussian(&mut rng, 1.0));
        let c = C64::new(-0.3, 2.1);
        let a = nmse(&h, &g).unwrap();
        let b = nmse(&(&h * c), &(&g * c)).unwrap();
        assert!((a - b).abs() < 1e-12 * a);
    }

    #[test]
    fn relay_aided_requires_mask() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let bs = SteeringDictionary::sine_uniform(8, 8).unwrap();
        let ms = SteeringDictionary::sine_uniform(4, 4).unwrap();
        let cb = sample_codebook(&mut rng, 8, 4, 12, 2).unwrap();
        let ch = sample_channel(&mut rng, 1, &bs, &ms).unwrap();
        let batch = simulate_measurements(&mut rng, &cb, Formulation::Proposed, &ch.matrix, 20.0).unwrap();
        let cfg = SolverConfig::default();
        assert!(estimate_channel(&batch, &cb, &bs, &ms, EstimationRegime::RelayAided, None, &cfg).is_err());
        assert!(estimate_channel(&batch, &cb, &bs, &ms, EstimationRegime::BaselinePsiA, None, &cfg).is_err());
    }

    #[test]
    fn noiseless_small_instance_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let bs = SteeringDictionary::sine_uniform(16, 16).unwrap();
        let ms = SteeringDictionary::sine_uniform(8, 8).unwrap();
        let cb = sample_codebook(&mut rng, 16, 8, 60, 4).unwrap();
        let ch = sample_channel(&mut rng, 2, &bs, &ms).unwrap();
        let batch = simulate_measurements(&mut rng, &cb, Formulation::Proposed, &ch.matrix, f64::INFINITY).unwrap();
        let est = estimate_channel(&batch, &cb, &bs, &ms, EstimationRegime::FaultFree, None, &SolverConfig::default()).unwrap();
        assert!(nmse(&ch.matrix, &est.matrix).unwrap() < 1e-10);
    }

    #[test]
    fn relay_aided_with_true_mask_is_exact_when_noiseless() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let bs = SteeringDictionary::sine_uniform(16, 16).unwrap();
        let ms = SteeringDictionary::sine_uniform(8, 8).unwrap();
        let cb = sample_codebook(&mut rng, 16, 8, 60, 4).unwrap();
        let ch = sample_channel(&mut rng, 2, &bs, &ms).unwrap();
        let mask = BlockageMask::sample(&mut rng, 16, 3, BlockageKind::Mixed).unwrap();
        let hh = corrupt_channel(&ch.matrix, &mask, &BlockageMask::identity(8)).unwrap();
        let batch = simulate_measurements(&mut rng, &cb, Formulation::Proposed, &hh, f64::INFINITY).unwrap();
        let cfg = SolverConfig::default();
        let aided = estimate_channel(&batch, &cb, &bs, &ms, EstimationRegime::RelayAided, Some(&mask), &cfg).unwrap();
        assert!(nmse(&ch.matrix, &aided.matrix).unwrap() < 1e-10);
        let unaware = estimate_channel(&batch, &cb, &bs, &ms, EstimationRegime::FaultUnaware, None, &cfg).unwrap();
        assert!(nmse(&ch.matrix, &unaware.matrix).unwrap() > 1e-3);
    }
}
