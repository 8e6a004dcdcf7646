//! On-grid geometric channels.
//!
//! The sparse coefficient vector `z` uses the layout fixed by column-stacking
//! `vec(H^T)`: with `H = A_MS · Z · A_BS^H` and `Z` the `G_MS × G_BS` matrix of
//! path coefficients,
//!
//! ```text
//! vec(H^T) = (A_MS ⊗ conj(A_BS)) · vec(Z^T),    z[l · G_BS + k] = Z[l, k]
//! ```
//!
//! where `l` indexes the MS (arrival) grid and `k` the BS (departure) grid.

use ndarray::{Array1, Array2, ArrayView2};
use rand::Rng;

use crate::array::SteeringDictionary;
use crate::linalg::{adjoint, kron};
use crate::{complex_gaussian, Error, Result, C64};

/// Path gains and their grid directions.
#[derive(Debug, Clone, PartialEq)]
pub struct PathSet {
    gains: Vec<C64>,
    aod_indices: Vec<usize>,
    aoa_indices: Vec<usize>,
}

impl PathSet {
    pub fn new(gains: Vec<C64>, aod_indices: Vec<usize>, aoa_indices: Vec<usize>) -> Result<Self> {
        if gains.is_empty() {
            return Err(Error::invalid("a channel needs at least one path"));
        }
        if gains.len() != aod_indices.len() || gains.len() != aoa_indices.len() {
            return Err(Error::invalid(format!(
                "path lists disagree: {} gains, {} AoDs, {} AoAs",
                gains.len(),
                aod_indices.len(),
                aoa_indices.len()
            )));
        }
        let mut pairs: Vec<_> = aod_indices.iter().zip(&aoa_indices).collect();
        pairs.sort();
        if pairs.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::invalid("(AoD, AoA) index pairs must be distinct"));
        }
        Ok(Self {
            gains,
            aod_indices,
            aoa_indices,
        })
    }

    pub fn len(&self) -> usize {
        self.gains.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gains.is_empty()
    }

    pub fn gains(&self) -> &[C64] {
        &self.gains
    }

    pub fn aod_indices(&self) -> &[usize] {
        &self.aod_indices
    }

    pub fn aoa_indices(&self) -> &[usize] {
        &self.aoa_indices
    }

    fn check_range(&self, bs: &SteeringDictionary, ms: &SteeringDictionary) -> Result<()> {
        if let Some(&k) = self.aod_indices.iter().find(|&&k| k >= bs.grid_size()) {
            return Err(Error::invalid(format!(
                "AoD index {k} outside BS grid of {}",
                bs.grid_size()
            )));
        }
        if let Some(&l) = self.aoa_indices.iter().find(|&&l| l >= ms.grid_size()) {
            return Err(Error::invalid(format!(
                "AoA index {l} outside MS grid of {}",
                ms.grid_size()
            )));
        }
        Ok(())
    }

    /// Amplitude factor `√(N_BS·N_MS/L)` applied to every path.
    pub fn scale(&self, bs: &SteeringDictionary, ms: &SteeringDictionary) -> f64 {
        ((bs.num_elements() * ms.num_elements()) as f64 / self.len() as f64).sqrt()
    }
}

/// One channel draw: its paths, dense `N_MS × N_BS` matrix and sparse form.
#[derive(Debug, Clone)]
pub struct ChannelRealization {
    pub paths: PathSet,
    pub matrix: Array2<C64>,
    pub sparse_coeffs: Array1<C64>,
}

impl ChannelRealization {
    pub fn from_paths(paths: PathSet, bs: &SteeringDictionary, ms: &SteeringDictionary) -> Result<Self> {
        let matrix = assemble(&paths, bs, ms)?;
        let sparse_coeffs = sparse_vector_of(&paths, bs, ms)?;
        Ok(Self {
            paths,
            matrix,
            sparse_coeffs,
        })
    }
}

/// Draws `num_paths` CN(0,1) gains on distinct grid directions.
pub fn sample_channel<R: Rng + ?Sized>(
    rng: &mut R,
    num_paths: usize,
    bs: &SteeringDictionary,
    ms: &SteeringDictionary,
) -> Result<ChannelRealization> {
    let cells = bs.grid_size() * ms.grid_size();
    if num_paths == 0 || num_paths > cells {
        return Err(Error::invalid(format!(
            "path count {num_paths} must lie in 1..={cells}"
        )));
    }
    let picks = rand::seq::index::sample(rng, cells, num_paths);
    let mut aod = Vec::with_capacity(num_paths);
    let mut aoa = Vec::with_capacity(num_paths);
    for flat in picks.iter() {
        aoa.push(flat / bs.grid_size());
        aod.push(flat % bs.grid_size());
    }
    let gains = (0..num_paths).map(|_| complex_gaussian(rng, 1.0)).collect();
    ChannelRealization::from_paths(PathSet::new(gains, aod, aoa)?, bs, ms)
}

/// `√(N_BS·N_MS/L) · Σ α_ℓ a_MS(θ_ℓ) a_BS(φ_ℓ)^H`.
pub fn assemble(paths: &PathSet, bs: &SteeringDictionary, ms: &SteeringDictionary) -> Result<Array2<C64>> {
    paths.check_range(bs, ms)?;
    let scale = paths.scale(bs, ms);
    let a_bs = bs.matrix();
    let a_ms = ms.matrix();
    let mut h = Array2::zeros((ms.num_elements(), bs.num_elements()));
    for ((&g, &k), &l) in paths.gains.iter().zip(&paths.aod_indices).zip(&paths.aoa_indices) {
        let at = a_bs.column(k);
        let ar = a_ms.column(l);
        let c = g * scale;
        for ((r, col), v) in h.indexed_iter_mut() {
            *v += c * ar[r] * at[col].conj();
        }
    }
    Ok(h)
}

/// Sparse coefficient vector `z` of length `G_BS·G_MS`; the path scale is
/// folded into the nonzero entries.
pub fn sparse_vector_of(paths: &PathSet, bs: &SteeringDictionary, ms: &SteeringDictionary) -> Result<Array1<C64>> {
    paths.check_range(bs, ms)?;
    let scale = paths.scale(bs, ms);
    let mut z = Array1::zeros(bs.grid_size() * ms.grid_size());
    for ((&g, &k), &l) in paths.gains.iter().zip(&paths.aod_indices).zip(&paths.aoa_indices) {
        z[l * bs.grid_size() + k] += g * scale;
    }
    Ok(z)
}

/// Dense channel synthesised from a sparse vector in the crate's layout.
pub fn channel_of_sparse(z: &[C64], bs: &SteeringDictionary, ms: &SteeringDictionary) -> Result<Array2<C64>> {
    let (gb, gm) = (bs.grid_size(), ms.grid_size());
    if z.len() != gb * gm {
        return Err(Error::invalid(format!(
            "sparse vector has length {} but grids need {}",
            z.len(),
            gb * gm
        )));
    }
    let zmat = ArrayView2::from_shape((gm, gb), z).expect("length checked");
    Ok(ms.matrix().dot(&zmat).dot(&adjoint(&bs.matrix().view())))
}

/// Dense dictionary operator `A_MS ⊗ conj(A_BS)` mapping `z` to `vec(H^T)`.
/// Size grows as `(N_MS·N_BS) × (G_MS·G_BS)`; meant for small arrays.
pub fn dictionary_operator(bs: &SteeringDictionary, ms: &SteeringDictionary) -> Array2<C64> {
    let conj_bs = bs.matrix().mapv(|v| v.conj());
    kron(&ms.matrix().view(), &conj_bs.view())
}

/// Column-stacking `vec(H^T)`: entry `i·N_BS + j` is `H[i, j]`.
pub fn vec_transpose(h: &Array2<C64>) -> Array1<C64> {
    // ndarray iterates in logical row-major order whatever the memory layout.
    Array1::from_iter(h.iter().copied())
}
