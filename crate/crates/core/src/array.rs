//! Uniform linear array responses and angle-grid dictionaries.

use std::f64::consts::{PI, TAU};

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::{Error, Result, C64};

/// Ordered set of quantized angles, in radians within `[0, 2π)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AngleGrid {
    points: Vec<f64>,
}

impl AngleGrid {
    pub fn new(points: Vec<f64>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::invalid("angle grid must not be empty"));
        }
        if let Some(p) = points.iter().find(|p| !(0.0..TAU).contains(*p)) {
            return Err(Error::invalid(format!("grid angle {p} outside [0, 2π)")));
        }
        if points.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::invalid("grid angles must be strictly increasing"));
        }
        Ok(Self { points })
    }

    /// `count` angles whose sines are uniformly spaced over `[-1, 1)`.
    ///
    /// A half-wavelength ULA only sees `sin θ`, so spacing the grid in sine
    /// space gives `count` distinct dictionary columns.
    pub fn sine_uniform(count: usize) -> Result<Self> {
        if count == 0 {
            return Err(Error::invalid("angle grid must not be empty"));
        }
        let mut points: Vec<f64> = (0..count)
            .map(|k| {
                let s = -1.0 + 2.0 * k as f64 / count as f64;
                wrap_angle(s.asin())
            })
            .collect();
        points.sort_by(f64::total_cmp);
        Self::new(points)
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn count(&self) -> usize {
        self.points.len()
    }
}

/// Maps any angle into `[0, 2π)`.
pub fn wrap_angle(angle: f64) -> f64 {
    let w = angle.rem_euclid(TAU);
    // rem_euclid can round up to exactly 2π for tiny negative inputs.
    if w >= TAU {
        0.0
    } else {
        w
    }
}

/// Unit-norm response of a half-wavelength ULA:
/// entry `n` is `exp(jπ n sin θ) / √N`.
pub fn steering_vector(num_elements: usize, angle: f64) -> Result<Array1<C64>> {
    if num_elements == 0 {
        return Err(Error::invalid("array must have at least one element"));
    }
    let scale = 1.0 / (num_elements as f64).sqrt();
    let phase_step = PI * angle.sin();
    Ok(Array1::from_iter((0..num_elements).map(|n| {
        C64::from_polar(scale, phase_step * n as f64)
    })))
}

/// Steering vectors of one array evaluated on every grid angle.
#[derive(Debug, Clone, PartialEq)]
pub struct SteeringDictionary {
    grid: AngleGrid,
    num_elements: usize,
    matrix: Array2<C64>,
}

impl SteeringDictionary {
    pub fn build(num_elements: usize, grid: AngleGrid) -> Result<Self> {
        if num_elements == 0 {
            return Err(Error::invalid("array must have at least one element"));
        }
        let mut matrix = Array2::zeros((num_elements, grid.count()));
        for (k, &angle) in grid.points().iter().enumerate() {
            matrix.column_mut(k).assign(&steering_vector(num_elements, angle)?);
        }
        Ok(Self {
            grid,
            num_elements,
            matrix,
        })
    }

    /// Dictionary over a [`AngleGrid::sine_uniform`] grid of `grid_size` points.
    pub fn sine_uniform(num_elements: usize, grid_size: usize) -> Result<Self> {
        Self::build(num_elements, AngleGrid::sine_uniform(grid_size)?)
    }

    pub fn grid(&self) -> &AngleGrid {
        &self.grid
    }

    pub fn num_elements(&self) -> usize {
        self.num_elements
    }

    pub fn grid_size(&self) -> usize {
        self.grid.count()
    }

    /// `num_elements × grid_size` matrix whose columns are steering vectors.
    pub fn matrix(&self) -> &Array2<C64> {
        &self.matrix
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn broadside_is_all_equal() {
        let a = steering_vector(4, 0.0).unwrap();
        for v in a.iter() {
            assert_eq!(*v, C64::new(0.5, 0.0));
        }
    }

    #[test]
    fn endfire_alternates_sign() {
        let a = steering_vector(4, FRAC_PI_2).unwrap();
        let expected = [0.5, -0.5, 0.5, -0.5];
        for (v, e) in a.iter().zip(expected) {
            assert!((v - C64::new(e, 0.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn zero_elements_rejected() {
        assert!(matches!(steering_vector(0, 0.1), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn inner_product_against_geometric_series() {
        let a = steering_vector(8, 0.3).unwrap();
        let b = steering_vector(8, 0.9).unwrap();
        let self_ip: C64 = a.iter().map(|v| v.conj() * v).sum();
        assert!((self_ip - C64::new(1.0, 0.0)).norm() < 1e-14);

        // Brute-force length-8 geometric sum of exp(jπ n (sin 0.9 − sin 0.3)).
        let delta = PI * (0.9f64.sin() - 0.3f64.sin());
        let mut d = C64::new(0.0, 0.0);
        for n in 0..8 {
            d += C64::from_polar(1.0, delta * n as f64);
        }
        let ip: C64 = a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum();
        assert!((ip.norm() - d.norm() / 8.0).abs() < 1e-14);
    }

    #[test]
    fn default_grid_sizes() {
        let bs = SteeringDictionary::sine_uniform(64, 64).unwrap();
        assert_eq!(bs.matrix().dim(), (64, 64));
        let ms = SteeringDictionary::sine_uniform(32, 32).unwrap();
        assert_eq!(ms.matrix().dim(), (32, 32));
    }

    #[test]
    fn single_element_dictionary_is_ones() {
        let d = SteeringDictionary::sine_uniform(1, 7).unwrap();
        assert_eq!(d.matrix().dim(), (1, 7));
        assert!(d.matrix().iter().all(|v| (v - C64::new(1.0, 0.0)).norm() < 1e-15));
    }

    #[test]
    fn grid_validation() {
        assert!(AngleGrid::new(vec![]).is_err());
        assert!(AngleGrid::new(vec![0.2, 0.1]).is_err());
        assert!(AngleGrid::new(vec![0.1, TAU]).is_err());
        assert!(AngleGrid::new(vec![-0.1, 0.5]).is_err());
        assert!(SteeringDictionary::build(4, AngleGrid::new(vec![0.0]).unwrap()).is_ok());
    }

    #[test]
    fn sine_grid_has_distinct_columns() {
        let d = SteeringDictionary::sine_uniform(16, 16).unwrap();
        let g = d.grid().points();
        let mut sines: Vec<f64> = g.iter().map(|a| a.sin()).collect();
        sines.sort_by(f64::total_cmp);
        for (k, s) in sines.iter().enumerate() {
            assert!((s - (-1.0 + 2.0 * k as f64 / 16.0)).abs() < 1e-12);
        }
        // Sine-uniform grid with G = N gives an orthonormal (DFT-like) dictionary.
        let gram = crate::linalg::adjoint(&d.matrix().view()).dot(d.matrix());
        for ((i, j), v) in gram.indexed_iter() {
            let e = if i == j { 1.0 } else { 0.0 };
            assert!((v - C64::new(e, 0.0)).norm() < 1e-12);
        }
    }
}
