//! Relay-side diagnosis of BS antenna blockages.
//!
//! The relay has a line-of-sight link `h_r = α_r a_BS(φ_r)` to the BS and
//! overhears the same training beams `P` that the MS uses. Its received
//! vector is
//!
//! ```text
//! y* = γ P^H B_BS h_r + ε = γ P^H h_r + γ P^H g + ε,    g = (B_BS − I) h_r
//! ```
//!
//! Subtracting the known fault-free pattern leaves a sparse recovery problem
//! in the innovation `g`, whose support marks the faulty elements. Each
//! blocked coefficient then follows from `b_i = g_i / h_r[i] + 1`.

use ndarray::{Array1, Array2};
use rand::Rng;

use crate::array::steering_vector;
use crate::impairments::{BlockageKind, BlockageMask};
use crate::linalg::{adjoint, matvec};
use crate::recovery::{sparse_estimate, SolverConfig};
use crate::{complex_gaussian, noise_variance_for_snr, Error, Result, C64};

/// Modulus below which a relay-link entry is treated as zero.
pub const DEGENERATE_LINK: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct RelayLink {
    pub gain: f64,
    pub path_gain: C64,
    pub aod: f64,
    pub h_r: Array1<C64>,
    pub snr_db: f64,
}

impl RelayLink {
    pub fn new(n_bs: usize, gain: f64, path_gain: C64, aod: f64, snr_db: f64) -> Result<Self> {
        let h_r = steering_vector(n_bs, aod)? * path_gain;
        Ok(Self {
            gain,
            path_gain,
            aod,
            h_r,
            snr_db,
        })
    }

    pub fn n_bs(&self) -> usize {
        self.h_r.len()
    }

    /// Relay noise variance `σ_r²`.
    ///
    /// The SNR is referenced to the mean power of one fault-free relay sample,
    /// `E|γ p^H h_r|² = γ² ‖h_r‖² / N_BS` for unit-norm random beams.
    pub fn noise_variance(&self) -> f64 {
        let power = self.gain.powi(2) * self.h_r.iter().map(|v| v.norm_sqr()).sum::<f64>() / self.n_bs() as f64;
        power * noise_variance_for_snr(self.snr_db)
    }

    /// `γ P^H`, the relay's sensing matrix for `g`.
    pub fn sensing(&self, p: &Array2<C64>) -> Result<Array2<C64>> {
        if p.nrows() != self.n_bs() {
            return Err(Error::invalid(format!(
                "beam matrix has {} rows, relay link has {} BS elements",
                p.nrows(),
                self.n_bs()
            )));
        }
        Ok(adjoint(&p.view()) * C64::new(self.gain, 0.0))
    }

    /// Known fault-free pattern `γ P^H h_r`.
    pub fn error_free_pattern(&self, p: &Array2<C64>) -> Result<Vec<C64>> {
        Ok(matvec(&self.sensing(p)?.view(), self.h_r.as_slice().expect("contiguous")))
    }
}

/// `y* = γ P^H B_BS h_r + ε`, `ε ~ CN(0, σ_r² I)`.
pub fn simulate_relay_measurements<R: Rng + ?Sized>(
    rng: &mut R,
    p: &Array2<C64>,
    link: &RelayLink,
    bs_mask: &BlockageMask,
) -> Result<Vec<C64>> {
    if bs_mask.len() != link.n_bs() {
        return Err(Error::invalid(format!(
            "mask has {} elements, relay link has {}",
            bs_mask.len(),
            link.n_bs()
        )));
    }
    let blocked: Vec<C64> = link
        .h_r
        .iter()
        .zip(bs_mask.coefficients())
        .map(|(h, b)| b * h)
        .collect();
    let mut y = matvec(&link.sensing(p)?.view(), &blocked);
    let var = link.noise_variance();
    if var > 0.0 {
        for v in y.iter_mut() {
            *v += complex_gaussian(rng, var);
        }
    }
    Ok(y)
}

/// Innovation measurements `y_s = y* − γ P^H h_r` and their sensing matrix.
#[derive(Debug, Clone)]
pub struct Innovation {
    pub y_s: Vec<C64>,
    pub sensing: Array2<C64>,
}

pub fn innovation(y_star: &[C64], p: &Array2<C64>, link: &RelayLink) -> Result<Innovation> {
    if y_star.len() != p.ncols() {
        return Err(Error::invalid(format!(
            "{} relay samples for {} beams",
            y_star.len(),
            p.ncols()
        )));
    }
    let sensing = link.sensing(p)?;
    let pattern = matvec(&sensing.view(), link.h_r.as_slice().expect("contiguous"));
    let y_s = y_star.iter().zip(&pattern).map(|(a, b)| a - b).collect();
    Ok(Innovation { y_s, sensing })
}

/// `b_i = g_i / h_r[i] + 1` for every element.
pub fn coefficients_from_innovation(g: &[C64], h_r: &[C64]) -> Result<Vec<C64>> {
    if g.len() != h_r.len() {
        return Err(Error::invalid("innovation and relay link lengths differ"));
    }
    check_link(h_r)?;
    Ok(g.iter().zip(h_r).map(|(g, h)| g / h + 1.0).collect())
}

fn check_link(h_r: &[C64]) -> Result<()> {
    match h_r.iter().enumerate().find(|(_, h)| h.norm() < DEGENERATE_LINK) {
        Some((index, h)) => Err(Error::DegenerateLink {
            index,
            modulus: h.norm(),
        }),
        None => Ok(()),
    }
}

/// The relay's estimate of `B_BS`.
#[derive(Debug, Clone)]
pub struct MaskEstimate {
    pub mask: BlockageMask,
    /// Debiased innovation estimate `ĝ`.
    pub innovation: Vec<C64>,
    pub iterations: usize,
    pub converged: bool,
}

/// Recovers `g` from the innovation by LASSO, detects its support and rebuilds
/// the blocked coefficients from the least-squares refit.
pub fn recover_mask(innov: &Innovation, link: &RelayLink, cfg: &SolverConfig) -> Result<MaskEstimate> {
    let h_r = link.h_r.as_slice().expect("contiguous");
    check_link(h_r)?;
    let est = sparse_estimate(&innov.sensing, &innov.y_s, link.noise_variance().sqrt(), cfg)?;
    let blocked: Vec<(usize, C64)> = est
        .support
        .iter()
        .map(|&i| (i, est.estimate[i] / h_r[i] + 1.0))
        .collect();
    let mask = BlockageMask::from_blocked(link.n_bs(), &blocked, BlockageKind::Mixed)?;
    Ok(MaskEstimate {
        mask,
        innovation: est.estimate,
        iterations: est.lasso.iterations,
        converged: est.lasso.converged,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SupportScore {
    pub success: bool,
    pub missed: usize,
    pub false_alarm: usize,
}

/// Exact-support comparison of an estimated and a true mask.
pub fn score_success(estimated: &BlockageMask, truth: &BlockageMask) -> Result<SupportScore> {
    if estimated.len() != truth.len() {
        return Err(Error::invalid("masks have different lengths"));
    }
    let est = estimated.support();
    let tru = truth.support();
    let missed = tru.iter().filter(|i| est.binary_search(i).is_err()).count();
    let false_alarm = est.iter().filter(|i| tru.binary_search(i).is_err()).count();
    Ok(SupportScore {
        success: missed == 0 && false_alarm == 0,
        missed,
        false_alarm,
    })
}

#[derive(Debug, Clone)]
pub struct DiagnosisResult {
    pub estimated_mask: BlockageMask,
    pub innovation: Vec<C64>,
    pub success: bool,
    /// `(missed, false_alarm)`.
    pub support_errors: (usize, usize),
    pub iterations: usize,
}

/// One full relay diagnosis: simulate, subtract, recover, score.
pub fn diagnose<R: Rng + ?Sized>(
    rng: &mut R,
    p: &Array2<C64>,
    link: &RelayLink,
    truth: &BlockageMask,
    cfg: &SolverConfig,
) -> Result<DiagnosisResult> {
    let y_star = simulate_relay_measurements(rng, p, link, truth)?;
    let innov = innovation(&y_star, p, link)?;
    let est = recover_mask(&innov, link, cfg)?;
    let score = score_success(&est.mask, truth)?;
    Ok(DiagnosisResult {
        estimated_mask: est.mask,
        innovation: est.innovation,
        success: score.success,
        support_errors: (score.missed, score.false_alarm),
        iterations: est.iterations,
    })
}
