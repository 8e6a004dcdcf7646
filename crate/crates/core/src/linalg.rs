//! Small dense complex linear-algebra kernels.
//!
//! Matrices are `ndarray::Array2<C64>`; vectors are plain slices so that the
//! hot solver loops stay allocation-free.

use ndarray::{Array2, ArrayView2, Axis};
use num_complex::ComplexFloat;

use crate::{Error, Result, C64};

/// `A · x`.
pub fn matvec(a: &ArrayView2<C64>, x: &[C64]) -> Vec<C64> {
    let mut out = vec![C64::new(0.0, 0.0); a.nrows()];
    matvec_into(a, x, &mut out);
    out
}

pub fn matvec_into(a: &ArrayView2<C64>, x: &[C64], out: &mut [C64]) {
    assert_eq!(a.ncols(), x.len());
    assert_eq!(a.nrows(), out.len());
    for (row, o) in a.axis_iter(Axis(0)).zip(out.iter_mut()) {
        *o = match row.as_slice() {
            Some(r) => dot(r, x),
            None => row.iter().zip(x).map(|(a, b)| a * b).sum(),
        };
    }
}

/// `A^H · y`.
pub fn matvec_adjoint(a: &ArrayView2<C64>, y: &[C64]) -> Vec<C64> {
    let mut out = vec![C64::new(0.0, 0.0); a.ncols()];
    matvec_adjoint_into(a, y, &mut out);
    out
}

pub fn matvec_adjoint_into(a: &ArrayView2<C64>, y: &[C64], out: &mut [C64]) {
    assert_eq!(a.nrows(), y.len());
    assert_eq!(a.ncols(), out.len());
    out.iter_mut().for_each(|o| *o = C64::new(0.0, 0.0));
    for (row, &yr) in a.axis_iter(Axis(0)).zip(y) {
        if yr == C64::new(0.0, 0.0) {
            continue;
        }
        match row.as_slice() {
            Some(r) => {
                for (o, a) in out.iter_mut().zip(r) {
                    *o += a.conj() * yr;
                }
            }
            None => {
                for (o, a) in out.iter_mut().zip(row.iter()) {
                    *o += a.conj() * yr;
                }
            }
        }
    }
}

#[inline]
fn dot(a: &[C64], b: &[C64]) -> C64 {
    let (mut re, mut im) = (0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        re += x.re * y.re - x.im * y.im;
        im += x.re * y.im + x.im * y.re;
    }
    C64::new(re, im)
}

pub fn norm2(x: &[C64]) -> f64 {
    x.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
}

pub fn frobenius(a: &ArrayView2<C64>) -> f64 {
    a.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
}

/// Euclidean norm of every column.
pub fn column_norms(a: &ArrayView2<C64>) -> Vec<f64> {
    let mut acc = vec![0.0; a.ncols()];
    for row in a.axis_iter(Axis(0)) {
        for (s, v) in acc.iter_mut().zip(row.iter()) {
            *s += v.norm_sqr();
        }
    }
    acc.into_iter().map(f64::sqrt).collect()
}

/// Conjugate transpose.
pub fn adjoint(a: &ArrayView2<C64>) -> Array2<C64> {
    a.t().mapv(|v| v.conj())
}

/// Dense Kronecker product `A ⊗ B`.
pub fn kron(a: &ArrayView2<C64>, b: &ArrayView2<C64>) -> Array2<C64> {
    let (ar, ac) = a.dim();
    let (br, bc) = b.dim();
    let mut out = Array2::zeros((ar * br, ac * bc));
    for ((i, j), &av) in a.indexed_iter() {
        if av == C64::new(0.0, 0.0) {
            continue;
        }
        let mut block = out.slice_mut(ndarray::s![i * br..(i + 1) * br, j * bc..(j + 1) * bc]);
        block.zip_mut_with(b, |o, &bv| *o = av * bv);
    }
    out
}

/// Largest squared singular value of `A`, by power iteration on the smaller
/// of the two Gram matrices.
pub fn spectral_norm_sq(a: &ArrayView2<C64>) -> f64 {
    let (m, n) = a.dim();
    if m == 0 || n == 0 {
        return 0.0;
    }
    let gram = if m <= n {
        a.dot(&adjoint(a))
    } else {
        adjoint(a).dot(a)
    };
    let k = gram.nrows();
    // Deterministic, non-symmetric start vector avoids orthogonality to the
    // top eigenvector for structured matrices.
    let mut v: Vec<C64> = (0..k)
        .map(|i| C64::new(1.0 + 0.1 * (i as f64).sin(), 0.05 * (i as f64 * 0.7).cos()))
        .collect();
    let mut w = vec![C64::new(0.0, 0.0); k];
    let mut estimate = 0.0;
    for _ in 0..500 {
        let nv = norm2(&v);
        if nv == 0.0 {
            return 0.0;
        }
        v.iter_mut().for_each(|x| *x /= nv);
        matvec_into(&gram.view(), &v, &mut w);
        let next = norm2(&w);
        std::mem::swap(&mut v, &mut w);
        if (next - estimate).abs() <= 1e-12 * next {
            estimate = next;
            break;
        }
        estimate = next;
    }
    estimate
}

/// Least-squares solution of `A · x ≈ b` through Householder QR.
///
/// Fails with [`Error::NumericalRank`] when `A` has fewer rows than columns or
/// a diagonal entry of `R` collapses below `1e-10` of the largest one.
pub fn lstsq(a: &ArrayView2<C64>, b: &[C64]) -> Result<Vec<C64>> {
    let (m, n) = a.dim();
    if b.len() != m {
        return Err(Error::invalid(format!(
            "least squares: {m} rows but right-hand side has length {}",
            b.len()
        )));
    }
    if n > m {
        return Err(Error::NumericalRank(format!(
            "{n} unknowns from {m} equations"
        )));
    }
    let mut r = a.to_owned();
    let mut rhs = b.to_vec();
    let mut diag = Vec::with_capacity(n);
    let mut v = vec![C64::new(0.0, 0.0); m];
    for k in 0..n {
        let col_norm = (k..m).map(|i| r[[i, k]].norm_sqr()).sum::<f64>().sqrt();
        if col_norm == 0.0 {
            diag.push(0.0);
            continue;
        }
        let x0 = r[[k, k]];
        let phase = if x0.abs() == 0.0 {
            C64::new(1.0, 0.0)
        } else {
            x0 / x0.abs()
        };
        let alpha = -phase * col_norm;
        for i in k..m {
            v[i] = r[[i, k]];
        }
        v[k] -= alpha;
        let vn = (k..m).map(|i| v[i].norm_sqr()).sum::<f64>().sqrt();
        if vn > 0.0 {
            for vi in v[k..m].iter_mut() {
                *vi /= vn;
            }
            for j in k..n {
                let s: C64 = (k..m).map(|i| v[i].conj() * r[[i, j]]).sum();
                for i in k..m {
                    r[[i, j]] -= 2.0 * v[i] * s;
                }
            }
            let s: C64 = (k..m).map(|i| v[i].conj() * rhs[i]).sum();
            for i in k..m {
                rhs[i] -= 2.0 * v[i] * s;
            }
        }
        diag.push(r[[k, k]].abs());
    }
    let max_diag = diag.iter().cloned().fold(0.0, f64::max);
    if let Some((k, d)) = diag
        .iter()
        .enumerate()
        .find(|(_, &d)| d <= 1e-10 * max_diag || d == 0.0)
    {
        return Err(Error::NumericalRank(format!(
            "R[{k},{k}] = {d:e} against max {max_diag:e}"
        )));
    }
    let mut x = vec![C64::new(0.0, 0.0); n];
    for k in (0..n).rev() {
        let mut s = rhs[k];
        for j in k + 1..n {
            s -= r[[k, j]] * x[j];
        }
        x[k] = s / r[[k, k]];
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn kron_of_small_matrices() {
        let a = array![[c(1.0, 0.0), c(2.0, 0.0)], [c(0.0, 1.0), c(0.0, 0.0)]];
        let b = array![[c(0.0, 1.0)], [c(3.0, 0.0)]];
        let k = kron(&a.view(), &b.view());
        assert_eq!(k.dim(), (4, 2));
        assert_eq!(k[[0, 0]], c(0.0, 1.0));
        assert_eq!(k[[1, 1]], c(6.0, 0.0));
        assert_eq!(k[[2, 0]], c(-1.0, 0.0));
        assert_eq!(k[[3, 1]], c(0.0, 0.0));
    }

    #[test]
    fn lstsq_recovers_exact_solution() {
        let a = array![
            [c(1.0, 0.5), c(0.0, 2.0)],
            [c(-1.0, 0.0), c(1.0, 1.0)],
            [c(0.3, -0.2), c(2.0, 0.0)]
        ];
        let x = [c(0.7, -1.1), c(2.0, 0.25)];
        let b = matvec(&a.view(), &x);
        let got = lstsq(&a.view(), &b).unwrap();
        for (g, e) in got.iter().zip(&x) {
            assert!((g - e).norm() < 1e-12);
        }
    }

    #[test]
    fn lstsq_rejects_rank_deficiency() {
        let a = array![[c(1.0, 0.0), c(2.0, 0.0)], [c(2.0, 0.0), c(4.0, 0.0)]];
        let err = lstsq(&a.view(), &[c(1.0, 0.0), c(2.0, 0.0)]).unwrap_err();
        assert!(matches!(err, Error::NumericalRank(_)));
    }

    #[test]
    fn spectral_norm_of_diagonal() {
        let a = array![[c(3.0, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(0.0, -2.0)], [c(0.0, 0.0), c(0.0, 0.0)]];
        assert!((spectral_norm_sq(&a.view()) - 9.0).abs() < 1e-9);
    }

    #[test]
    fn adjoint_matvec_matches_explicit_adjoint() {
        let a = array![[c(1.0, 2.0), c(0.5, -1.0), c(0.0, 1.0)], [c(-1.0, 0.0), c(2.0, 2.0), c(1.0, 0.0)]];
        let y = [c(0.3, 0.1), c(-0.2, 0.9)];
        let direct = matvec(&adjoint(&a.view()).view(), &y);
        let fast = matvec_adjoint(&a.view(), &y);
        for (d, f) in direct.iter().zip(&fast) {
            assert!((d - f).norm() < 1e-14);
        }
    }
}
