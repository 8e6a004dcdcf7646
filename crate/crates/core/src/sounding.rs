//! Training codebooks, measurement operators and sensing matrices.
//!
//! Two sounding formulations are supported:
//!
//! - [`Formulation::Proposed`]: combiner `q_m` observes its own group `P_m` of
//!   `M = M_BS / M_MS` beams, so all `M_BS` beams are independent. Rows of `Ψ`
//!   are `q_m^H ⊗ p_n^T`, acting on `vec(H^T)` (combiner-major ordering).
//! - [`Formulation::Baseline`]: every combiner observes the same first group
//!   `P_1`, giving `Ψ_A = P_1^T ⊗ Q^H` acting on `vec(H)`.
//!
//! Each formulation is paired with its own dictionary Kronecker ordering, see
//! [`sensing_matrix`] and [`baseline_sensing_matrix`].

use ndarray::{s, Array2, ArrayView2};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::array::SteeringDictionary;
use crate::impairments::BlockageMask;
use crate::linalg::kron;
use crate::{complex_gaussian, noise_variance_for_snr, Error, Result, C64};

/// Beam matrix `P` (`N_BS × M_BS`) and combiner matrix `Q` (`N_MS × M_MS`).
#[derive(Debug, Clone, PartialEq)]
pub struct SoundingCodebook {
    p: Array2<C64>,
    q: Array2<C64>,
    snapshots_per_combiner: usize,
}

impl SoundingCodebook {
    pub fn new(p: Array2<C64>, q: Array2<C64>) -> Result<Self> {
        let (m_bs, m_ms) = (p.ncols(), q.ncols());
        if m_bs == 0 || m_ms == 0 || p.nrows() == 0 || q.nrows() == 0 {
            return Err(Error::invalid("codebook dimensions must be positive"));
        }
        if !m_bs.is_multiple_of(m_ms) {
            return Err(Error::invalid(format!(
                "M_MS = {m_ms} does not divide M_BS = {m_bs}"
            )));
        }
        Ok(Self {
            p,
            q,
            snapshots_per_combiner: m_bs / m_ms,
        })
    }

    pub fn p(&self) -> &Array2<C64> {
        &self.p
    }

    pub fn q(&self) -> &Array2<C64> {
        &self.q
    }

    pub fn n_bs(&self) -> usize {
        self.p.nrows()
    }

    pub fn n_ms(&self) -> usize {
        self.q.nrows()
    }

    pub fn m_bs(&self) -> usize {
        self.p.ncols()
    }

    pub fn m_ms(&self) -> usize {
        self.q.ncols()
    }

    /// Snapshots per combiner, `M = M_BS / M_MS`.
    pub fn m(&self) -> usize {
        self.snapshots_per_combiner
    }

    /// Beam group `P_m` (columns `m·M .. (m+1)·M`).
    pub fn beam_group(&self, m: usize) -> ArrayView2<'_, C64> {
        let w = self.snapshots_per_combiner;
        self.p.slice(s![.., m * w..(m + 1) * w])
    }
}

const ALPHABET: [C64; 4] = [
    C64::new(1.0, 0.0),
    C64::new(-1.0, 0.0),
    C64::new(0.0, 1.0),
    C64::new(0.0, -1.0),
];

fn random_phase_matrix<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> Array2<C64> {
    let scale = 1.0 / (rows as f64).sqrt();
    let mut out = Array2::zeros((rows, cols));
    for c in 0..cols {
        for r in 0..rows {
            out[[r, c]] = ALPHABET[rng.random_range(0..4)] * scale;
        }
    }
    out
}

/// `n × m` matrix of unit-norm beams with i.i.d. entries from `{±1, ±j}/√n`.
/// Columns are drawn in order, so a longer draw from the same stream extends
/// a shorter one.
pub fn sample_beams<R: Rng + ?Sized>(rng: &mut R, n: usize, m: usize) -> Array2<C64> {
    random_phase_matrix(rng, n, m)
}

/// Draws `P` and `Q` with i.i.d. entries from `{±1, ±j}/√N`.
pub fn sample_codebook<R: Rng + ?Sized>(
    rng: &mut R,
    n_bs: usize,
    n_ms: usize,
    m_bs: usize,
    m_ms: usize,
) -> Result<SoundingCodebook> {
    if n_bs == 0 || n_ms == 0 || m_bs == 0 || m_ms == 0 {
        return Err(Error::invalid("codebook dimensions must be positive"));
    }
    if !m_bs.is_multiple_of(m_ms) {
        return Err(Error::invalid(format!(
            "M_MS = {m_ms} does not divide M_BS = {m_bs}"
        )));
    }
    let p = random_phase_matrix(rng, n_bs, m_bs);
    let q = random_phase_matrix(rng, n_ms, m_ms);
    SoundingCodebook::new(p, q)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Formulation {
    Proposed,
    Baseline,
}

impl Formulation {
    /// `(combiner, beam)` index of every snapshot, in measurement order.
    pub fn snapshot_pairs(&self, cb: &SoundingCodebook) -> Vec<(usize, usize)> {
        let (m_ms, m) = (cb.m_ms(), cb.m());
        match self {
            Formulation::Proposed => (0..m_ms)
                .flat_map(|c| (0..m).map(move |n| (c, c * m + n)))
                .collect(),
            Formulation::Baseline => (0..m)
                .flat_map(|n| (0..m_ms).map(move |c| (c, n)))
                .collect(),
        }
    }

    pub fn psi(&self, cb: &SoundingCodebook) -> Array2<C64> {
        match self {
            Formulation::Proposed => assemble_psi(cb),
            Formulation::Baseline => assemble_psi_baseline(cb),
        }
    }

    pub fn sensing_matrix(
        &self,
        psi: &Array2<C64>,
        bs: &SteeringDictionary,
        ms: &SteeringDictionary,
        bs_mask: Option<&BlockageMask>,
        ms_mask: Option<&BlockageMask>,
    ) -> Result<Array2<C64>> {
        match self {
            Formulation::Proposed => sensing_matrix(psi, bs, ms, bs_mask, ms_mask),
            Formulation::Baseline => baseline_sensing_matrix(psi, bs, ms, bs_mask, ms_mask),
        }
    }
}

/// Stacked operator `Ψ`: block `m` is `q_m^H ⊗ P_m^T`.
pub fn assemble_psi(cb: &SoundingCodebook) -> Array2<C64> {
    let (n_bs, n_ms, m) = (cb.n_bs(), cb.n_ms(), cb.m());
    let mut psi = Array2::zeros((cb.m_bs(), n_ms * n_bs));
    for c in 0..cb.m_ms() {
        let q_h = cb.q().slice(s![.., c..c + 1]).t().mapv(|v| v.conj());
        let p_t = cb.beam_group(c).t().to_owned();
        let block = kron(&q_h.view(), &p_t.view());
        psi.slice_mut(s![c * m..(c + 1) * m, ..]).assign(&block);
    }
    psi
}

/// Prior-art operator `Ψ_A = P_1^T ⊗ Q^H`, acting on column-stacked `vec(H)`.
pub fn assemble_psi_baseline(cb: &SoundingCodebook) -> Array2<C64> {
    let p1_t = cb.beam_group(0).t().to_owned();
    let q_h = cb.q().t().mapv(|v| v.conj());
    kron(&p1_t.view(), &q_h.view())
}

fn mask_or_identity(mask: Option<&BlockageMask>, n: usize, what: &str) -> Result<Vec<C64>> {
    match mask {
        None => Ok(vec![C64::new(1.0, 0.0); n]),
        Some(m) if m.len() == n => Ok(m.coefficients().to_vec()),
        Some(m) => Err(Error::invalid(format!(
            "{what} mask has {} elements, array has {n}",
            m.len()
        ))),
    }
}

/// Multiplies every row of `op` (reshaped row-major to `n1 × n2`, scaled
/// entrywise by `w1[i]·w2[j]`) as `left^T · R · right`, flattening the
/// `g1 × g2` result row-major.
fn apply_dictionary(
    op: &Array2<C64>,
    left: &Array2<C64>,
    right: &Array2<C64>,
    w1: &[C64],
    w2: &[C64],
) -> Array2<C64> {
    let (n1, g1) = left.dim();
    let (n2, g2) = right.dim();
    let rows = op.nrows();
    let mut scaled = Array2::zeros((rows * n1, n2));
    for r in 0..rows {
        for i in 0..n1 {
            for j in 0..n2 {
                scaled[[r * n1 + i, j]] = op[[r, i * n2 + j]] * w1[i] * w2[j];
            }
        }
    }
    let partial = scaled.dot(right);
    let left_t = left.t().to_owned();
    let mut out = Array2::zeros((rows, g1 * g2));
    for r in 0..rows {
        let block = left_t.dot(&partial.slice(s![r * n1..(r + 1) * n1, ..]));
        out.row_mut(r)
            .assign(&ndarray::Array1::from_iter(block.iter().copied()));
    }
    out
}

/// `Φ̂ = Ψ · (B_MS ⊗ conj(B_BS)) · (A_MS ⊗ conj(A_BS))`; with no masks this is
/// the fault-free `Φ`. Columns follow the crate's sparse layout
/// (`l·G_BS + k`).
pub fn sensing_matrix(
    psi: &Array2<C64>,
    bs: &SteeringDictionary,
    ms: &SteeringDictionary,
    bs_mask: Option<&BlockageMask>,
    ms_mask: Option<&BlockageMask>,
) -> Result<Array2<C64>> {
    let (n_bs, n_ms) = (bs.num_elements(), ms.num_elements());
    if psi.ncols() != n_bs * n_ms {
        return Err(Error::invalid(format!(
            "Ψ has {} columns, arrays need {}",
            psi.ncols(),
            n_bs * n_ms
        )));
    }
    let w_ms = mask_or_identity(ms_mask, n_ms, "MS")?;
    let w_bs: Vec<C64> = mask_or_identity(bs_mask, n_bs, "BS")?
        .into_iter()
        .map(|b| b.conj())
        .collect();
    let conj_bs = bs.matrix().mapv(|v| v.conj());
    Ok(apply_dictionary(psi, ms.matrix(), &conj_bs, &w_ms, &w_bs))
}

/// Sensing matrix of the baseline formulation:
/// `Ψ_A · (conj(B_BS) ⊗ B_MS) · (conj(A_BS) ⊗ A_MS)`. Columns are ordered
/// `k·G_MS + l`; use [`baseline_to_standard`] to reorder an estimate.
pub fn baseline_sensing_matrix(
    psi_a: &Array2<C64>,
    bs: &SteeringDictionary,
    ms: &SteeringDictionary,
    bs_mask: Option<&BlockageMask>,
    ms_mask: Option<&BlockageMask>,
) -> Result<Array2<C64>> {
    let (n_bs, n_ms) = (bs.num_elements(), ms.num_elements());
    if psi_a.ncols() != n_bs * n_ms {
        return Err(Error::invalid(format!(
            "Ψ_A has {} columns, arrays need {}",
            psi_a.ncols(),
            n_bs * n_ms
        )));
    }
    let w_ms = mask_or_identity(ms_mask, n_ms, "MS")?;
    let w_bs: Vec<C64> = mask_or_identity(bs_mask, n_bs, "BS")?
        .into_iter()
        .map(|b| b.conj())
        .collect();
    let conj_bs = bs.matrix().mapv(|v| v.conj());
    Ok(apply_dictionary(psi_a, &conj_bs, ms.matrix(), &w_bs, &w_ms))
}

/// Reorders a baseline-layout vector (`k·G_MS + l`) into the crate's sparse
/// layout (`l·G_BS + k`).
pub fn baseline_to_standard(z_a: &[C64], bs: &SteeringDictionary, ms: &SteeringDictionary) -> Vec<C64> {
    let (gb, gm) = (bs.grid_size(), ms.grid_size());
    let mut z = vec![C64::new(0.0, 0.0); gb * gm];
    for k in 0..gb {
        for l in 0..gm {
            z[l * gb + k] = z_a[k * gm + l];
        }
    }
    z
}

/// Per-snapshot receiver noise before combining, one `N_MS` vector per row.
#[derive(Debug, Clone)]
pub struct NoiseRealization {
    pub samples: Array2<C64>,
    pub variance: f64,
}

impl NoiseRealization {
    pub fn sample<R: Rng + ?Sized>(rng: &mut R, snapshots: usize, n_ms: usize, variance: f64) -> Self {
        let samples = if variance > 0.0 {
            Array2::from_shape_simple_fn((snapshots, n_ms), || complex_gaussian(rng, variance))
        } else {
            Array2::zeros((snapshots, n_ms))
        };
        Self { samples, variance }
    }
}

/// Received training vector `y_MS`.
#[derive(Debug, Clone)]
pub struct MeasurementBatch {
    pub y: Vec<C64>,
    pub noise_variance: f64,
    pub snr_db: f64,
    pub formulation: Formulation,
}

/// `y[r] = q_m^H H p_n + q_m^H B_MS e_r` over the formulation's snapshots.
///
/// `h` is the effective (possibly corrupted) `N_MS × N_BS` channel.
pub fn measure(
    cb: &SoundingCodebook,
    formulation: Formulation,
    h: &Array2<C64>,
    noise: Option<&NoiseRealization>,
    ms_mask: Option<&BlockageMask>,
) -> Result<MeasurementBatch> {
    if h.dim() != (cb.n_ms(), cb.n_bs()) {
        return Err(Error::invalid(format!(
            "channel is {:?}, codebook expects ({}, {})",
            h.dim(),
            cb.n_ms(),
            cb.n_bs()
        )));
    }
    if let Some(nz) = noise {
        if nz.samples.dim() != (cb.m_bs(), cb.n_ms()) {
            return Err(Error::invalid("noise realization does not match the codebook"));
        }
    }
    let w_ms = mask_or_identity(ms_mask, cb.n_ms(), "MS")?;
    let hp = h.dot(cb.p());
    let pairs = formulation.snapshot_pairs(cb);
    let mut y = Vec::with_capacity(pairs.len());
    for (r, &(c, n)) in pairs.iter().enumerate() {
        let q = cb.q().column(c);
        let mut v: C64 = q.iter().zip(hp.column(n).iter()).map(|(a, b)| a.conj() * b).sum();
        if let Some(nz) = noise {
            v += q
                .iter()
                .zip(nz.samples.row(r).iter())
                .zip(&w_ms)
                .map(|((a, e), b)| a.conj() * b * e)
                .sum::<C64>();
        }
        y.push(v);
    }
    let variance = noise.map_or(0.0, |n| n.variance);
    Ok(MeasurementBatch {
        y,
        noise_variance: variance,
        snr_db: -10.0 * variance.log10(),
        formulation,
    })
}

/// Noisy measurements at `snr_db`, where the noise variance is
/// `10^(-snr_db/10)`.
///
/// With unit-norm beams and combiners drawn independently of the channel,
/// `E|q^H H p|² = E‖H‖_F² / (N_BS·N_MS) = 1`, so that variance gives the
/// requested ratio of mean signal to mean combined-noise power.
pub fn simulate_measurements<R: Rng + ?Sized>(
    rng: &mut R,
    cb: &SoundingCodebook,
    formulation: Formulation,
    h: &Array2<C64>,
    snr_db: f64,
) -> Result<MeasurementBatch> {
    let variance = noise_variance_for_snr(snr_db);
    let noise = NoiseRealization::sample(rng, cb.m_bs(), cb.n_ms(), variance);
    let mut batch = measure(cb, formulation, h, Some(&noise), None)?;
    batch.snr_db = snr_db;
    Ok(batch)
}
