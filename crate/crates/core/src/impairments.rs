//! Antenna blockage masks.
//!
//! A mask is the diagonal of `B`: blocked element `i` carries
//! `b_i = κ_i e^{jΦ_i}` with `0 ≤ κ_i ≤ 1`, every other element carries 1.

use std::f64::consts::{FRAC_PI_4, TAU};
use std::fmt;
use std::str::FromStr;

use ndarray::Array2;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result, C64};

/// Phase imposed by the fixed-phase partial blockage ensemble.
pub const PARTIAL_PHASE: f64 = FRAC_PI_4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BlockageKind {
    /// `b_i = 0`.
    Complete,
    /// `κ_i ~ U[0,1]`, phase fixed at [`PARTIAL_PHASE`].
    Partial,
    /// `κ_i ~ U[0,1]`, `Φ_i ~ U[0, 2π)`.
    Mixed,
}

impl BlockageKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            BlockageKind::Complete => "complete",
            BlockageKind::Partial => "partial",
            BlockageKind::Mixed => "mixed",
        }
    }
}

impl fmt::Display for BlockageKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for BlockageKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "complete" => Ok(Self::Complete),
            "partial" => Ok(Self::Partial),
            "mixed" => Ok(Self::Mixed),
            other => Err(Error::invalid(format!("unknown blockage kind `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlockageMask {
    coefficients: Vec<C64>,
    support: Vec<usize>,
    kind: BlockageKind,
}

impl BlockageMask {
    /// Fault-free array of `n` elements.
    pub fn identity(n: usize) -> Self {
        Self {
            coefficients: vec![C64::new(1.0, 0.0); n],
            support: Vec::new(),
            kind: BlockageKind::Mixed,
        }
    }

    /// Builds a mask from explicit blocked elements; every other element is 1.
    pub fn from_blocked(n: usize, blocked: &[(usize, C64)], kind: BlockageKind) -> Result<Self> {
        let mut coefficients = vec![C64::new(1.0, 0.0); n];
        let mut support = Vec::with_capacity(blocked.len());
        for &(i, b) in blocked {
            if i >= n {
                return Err(Error::invalid(format!("blocked element {i} outside array of {n}")));
            }
            if support.contains(&i) {
                return Err(Error::invalid(format!("element {i} listed twice")));
            }
            coefficients[i] = b;
            support.push(i);
        }
        support.sort_unstable();
        Ok(Self {
            coefficients,
            support,
            kind,
        })
    }

    pub fn len(&self) -> usize {
        self.coefficients.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coefficients.is_empty()
    }

    pub fn coefficients(&self) -> &[C64] {
        &self.coefficients
    }

    /// Sorted indices of blocked elements.
    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn kind(&self) -> BlockageKind {
        self.kind
    }

    pub fn is_identity(&self) -> bool {
        self.support.is_empty()
    }

    /// Draws `faults` blocked elements uniformly without replacement.
    pub fn sample<R: Rng + ?Sized>(rng: &mut R, n: usize, faults: usize, kind: BlockageKind) -> Result<Self> {
        if faults > n {
            return Err(Error::invalid(format!(
                "cannot block {faults} elements of a {n}-element array"
            )));
        }
        let mut support: Vec<usize> = rand::seq::index::sample(rng, n, faults).into_vec();
        support.sort_unstable();
        let mut coefficients = vec![C64::new(1.0, 0.0); n];
        for &i in &support {
            coefficients[i] = match kind {
                BlockageKind::Complete => C64::new(0.0, 0.0),
                BlockageKind::Partial => C64::from_polar(rng.random::<f64>(), PARTIAL_PHASE),
                BlockageKind::Mixed => {
                    let kappa = rng.random::<f64>();
                    let phase = rng.random::<f64>() * TAU;
                    C64::from_polar(kappa, phase)
                }
            };
        }
        Ok(Self {
            coefficients,
            support,
            kind,
        })
    }
}

/// `B_MS · H · B_BS^H` for an `N_MS × N_BS` channel.
pub fn corrupt_channel(h: &Array2<C64>, bs_mask: &BlockageMask, ms_mask: &BlockageMask) -> Result<Array2<C64>> {
    let (rows, cols) = h.dim();
    if ms_mask.len() != rows || bs_mask.len() != cols {
        return Err(Error::invalid(format!(
            "masks ({} MS, {} BS) do not match a {rows}×{cols} channel",
            ms_mask.len(),
            bs_mask.len()
        )));
    }
    let mut out = h.clone();
    for ((r, c), v) in out.indexed_iter_mut() {
        *v = ms_mask.coefficients[r] * *v * bs_mask.coefficients[c].conj();
    }
    Ok(out)
}
