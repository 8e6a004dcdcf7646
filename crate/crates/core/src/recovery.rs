//! Complex-valued sparse recovery: LASSO by monotone accelerated proximal
//! gradient, orthogonal matching pursuit, least-squares debiasing and support
//! detection.

use ndarray::{Array2, Axis};
use serde::{Deserialize, Serialize};

use crate::linalg::{column_norms, lstsq, matvec_adjoint_into, norm2, spectral_norm_sq};
use crate::{Error, Result, C64};

const ZERO: C64 = C64::new(0.0, 0.0);

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default)]
pub struct LassoOptions {
    pub max_iterations: usize,
    /// Stop once the objective changes by less than this fraction.
    pub tolerance: f64,
    /// Known `σ_max(A)²`; estimated by power iteration when absent.
    #[serde(skip)]
    pub lipschitz: Option<f64>,
    /// Record the objective at every iteration.
    #[serde(skip)]
    pub track_objective: bool,
}

impl Default for LassoOptions {
    fn default() -> Self {
        Self {
            max_iterations: 2000,
            tolerance: 1e-8,
            lipschitz: None,
            track_objective: false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RecoveryResult {
    pub estimate: Vec<C64>,
    /// `{ i : |estimate[i]| > threshold }`.
    pub support: Vec<usize>,
    pub threshold: f64,
    pub iterations: usize,
    /// `‖y − A·estimate‖₂` at return.
    pub residual_norm: f64,
    pub lambda: f64,
    pub converged: bool,
    pub objective_trace: Vec<f64>,
}

impl RecoveryResult {
    fn finish(a: &Array2<C64>, y: &[C64], estimate: Vec<C64>, threshold: f64) -> Self {
        let support = detect_support(&estimate, SupportRule::Absolute(threshold));
        let residual_norm = residual_norm(a, y, &estimate);
        Self {
            estimate,
            support,
            threshold,
            iterations: 0,
            residual_norm,
            lambda: 0.0,
            converged: true,
            objective_trace: Vec::new(),
        }
    }
}

fn check_dims(a: &Array2<C64>, y: &[C64]) -> Result<()> {
    if a.nrows() != y.len() {
        return Err(Error::invalid(format!(
            "matrix has {} rows but measurement vector has length {}",
            a.nrows(),
            y.len()
        )));
    }
    Ok(())
}

/// `A·x`, skipping zero coefficients.
fn apply(a: &Array2<C64>, a_t: &Array2<C64>, x: &[C64], out: &mut [C64]) {
    out.iter_mut().for_each(|o| *o = ZERO);
    for (j, &xj) in x.iter().enumerate() {
        if xj == ZERO {
            continue;
        }
        let col = a_t.row(j);
        let col = col.as_slice().expect("owned transpose is contiguous");
        for (o, &c) in out.iter_mut().zip(col) {
            *o += c * xj;
        }
    }
    debug_assert_eq!(out.len(), a.nrows());
}

fn residual_norm(a: &Array2<C64>, y: &[C64], x: &[C64]) -> f64 {
    let ax = crate::linalg::matvec(&a.view(), x);
    y.iter().zip(&ax).map(|(u, v)| (u - v).norm_sqr()).sum::<f64>().sqrt()
}

/// Complex soft threshold: `v · max(1 − τ/|v|, 0)`.
pub fn soft_threshold(v: C64, tau: f64) -> C64 {
    let m = v.norm();
    if m <= tau {
        ZERO
    } else {
        v * (1.0 - tau / m)
    }
}

/// `½‖y − A x‖² + λ‖x‖₁` with the complex modulus in the ℓ₁ term.
pub fn lasso_objective(a: &Array2<C64>, y: &[C64], x: &[C64], lambda: f64) -> f64 {
    let r = residual_norm(a, y, x);
    0.5 * r * r + lambda * x.iter().map(|v| v.norm()).sum::<f64>()
}

/// `‖A^H y‖_∞`, the smallest λ for which zero solves the LASSO.
pub fn lambda_max(a: &Array2<C64>, y: &[C64]) -> f64 {
    let mut c = vec![ZERO; a.ncols()];
    matvec_adjoint_into(&a.view(), y, &mut c);
    c.iter().map(|v| v.norm()).fold(0.0, f64::max)
}

/// Worst violation of the LASSO optimality conditions at `x`:
/// `A^H(y − Ax)` must equal `λ x_i/|x_i|` on nonzeros and stay within `λ`
/// in modulus elsewhere.
pub fn kkt_residual(a: &Array2<C64>, y: &[C64], x: &[C64], lambda: f64) -> f64 {
    let ax = crate::linalg::matvec(&a.view(), x);
    let r: Vec<C64> = y.iter().zip(&ax).map(|(u, v)| u - v).collect();
    let mut c = vec![ZERO; a.ncols()];
    matvec_adjoint_into(&a.view(), &r, &mut c);
    c.iter()
        .zip(x)
        .map(|(ci, xi)| {
            if *xi == ZERO {
                (ci.norm() - lambda).max(0.0)
            } else {
                (ci - xi / xi.norm() * lambda).norm()
            }
        })
        .fold(0.0, f64::max)
}

/// Solves `min_x ½‖y − A x‖₂² + λ‖x‖₁` over complex `x`.
///
/// Monotone FISTA with step `1/L`, `L = σ_max(A)²`. The objective sequence of
/// accepted iterates never increases. Running out of iterations is not an
/// error: the result carries `converged = false`.
pub fn lasso_solve(a: &Array2<C64>, y: &[C64], lambda: f64, opts: &LassoOptions) -> Result<RecoveryResult> {
    check_dims(a, y)?;
    if !(lambda >= 0.0) {
        return Err(Error::invalid(format!("lambda must be non-negative, got {lambda}")));
    }
    let n = a.ncols();
    let m = a.nrows();
    let lam_max = lambda_max(a, y);
    if n == 0 || lambda >= lam_max {
        let mut res = RecoveryResult::finish(a, y, vec![ZERO; n], 0.0);
        res.lambda = lambda;
        if opts.track_objective {
            res.objective_trace.push(0.5 * norm2(y).powi(2));
        }
        return Ok(res);
    }
    let lip = opts
        .lipschitz
        .unwrap_or_else(|| spectral_norm_sq(&a.view()) * 1.0001);
    if lip <= 0.0 {
        return Ok(RecoveryResult::finish(a, y, vec![ZERO; n], 0.0));
    }
    let step = 1.0 / lip;
    let a_t = a.t().as_standard_layout().into_owned();
    let l1 = |x: &[C64]| x.iter().map(|v| v.norm()).sum::<f64>();
    let half_sq = |ax: &[C64]| 0.5 * y.iter().zip(ax).map(|(u, v)| (u - v).norm_sqr()).sum::<f64>();

    let mut x = vec![ZERO; n];
    let mut ax = vec![ZERO; m];
    let mut fx = half_sq(&ax);
    let mut w = x.clone();
    let mut aw = ax.clone();
    let mut t = 1.0f64;

    let mut grad = vec![ZERO; n];
    let mut resid = vec![ZERO; m];
    let mut z = vec![ZERO; n];
    let mut az = vec![ZERO; m];
    let mut trace = Vec::new();
    if opts.track_objective {
        trace.push(fx);
    }
    let mut converged = false;
    let mut iterations = 0;
    while iterations < opts.max_iterations {
        iterations += 1;
        for ((r, &awi), &yi) in resid.iter_mut().zip(&aw).zip(y) {
            *r = awi - yi;
        }
        matvec_adjoint_into(&a.view(), &resid, &mut grad);
        for ((zi, &wi), &gi) in z.iter_mut().zip(&w).zip(&grad) {
            *zi = soft_threshold(wi - gi * step, lambda * step);
        }
        apply(a, &a_t, &z, &mut az);
        let fz = half_sq(&az) + lambda * l1(&z);

        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        let c_z = t / t_next;
        let c_x = (t - 1.0) / t_next;
        let fx_old = fx;
        let accepted = fz <= fx;
        if accepted {
            // w = z + ((t−1)/t_next)(z − x_old)
            for i in 0..n {
                let zi = z[i];
                w[i] = zi + c_x * (zi - x[i]);
                x[i] = zi;
            }
            for i in 0..m {
                let azi = az[i];
                aw[i] = azi + c_x * (azi - ax[i]);
                ax[i] = azi;
            }
            fx = fz;
        } else {
            // w = x + (t/t_next)(z − x)
            for i in 0..n {
                w[i] = x[i] + c_z * (z[i] - x[i]);
            }
            for i in 0..m {
                aw[i] = ax[i] + c_z * (az[i] - ax[i]);
            }
        }
        t = t_next;
        if opts.track_objective {
            trace.push(fx);
        }
        if accepted && fx_old - fz <= opts.tolerance * fx_old.max(f64::MIN_POSITIVE) {
            converged = true;
            break;
        }
    }
    let mut res = RecoveryResult::finish(a, y, x, 0.0);
    res.iterations = iterations;
    res.lambda = lambda;
    res.converged = converged;
    res.objective_trace = trace;
    Ok(res)
}

/// Greedy recovery of `sparsity` atoms with a least-squares refit after every
/// selection. Atoms are ranked by `|a_j^H r| / ‖a_j‖`.
pub fn omp_solve(a: &Array2<C64>, y: &[C64], sparsity: usize) -> Result<RecoveryResult> {
    check_dims(a, y)?;
    let n = a.ncols();
    if sparsity == 0 || sparsity > n {
        return Err(Error::invalid(format!(
            "sparsity {sparsity} must lie in 1..={n}"
        )));
    }
    let norms = column_norms(&a.view());
    let y_norm = norm2(y);
    let mut selected: Vec<usize> = Vec::with_capacity(sparsity);
    let mut coef: Vec<C64> = Vec::new();
    let mut residual = y.to_vec();
    let mut corr = vec![ZERO; n];
    while selected.len() < sparsity {
        if norm2(&residual) <= 1e-12 * y_norm.max(f64::MIN_POSITIVE) {
            break;
        }
        matvec_adjoint_into(&a.view(), &residual, &mut corr);
        let best = (0..n)
            .filter(|j| !selected.contains(j) && norms[*j] > 0.0)
            .map(|j| (j, corr[j].norm() / norms[j]))
            .max_by(|a, b| a.1.total_cmp(&b.1));
        let Some((j, _)) = best else { break };
        selected.push(j);
        let sub = a.select(Axis(1), &selected);
        coef = lstsq(&sub.view(), y)?;
        let fit = crate::linalg::matvec(&sub.view(), &coef);
        for ((r, &yi), f) in residual.iter_mut().zip(y).zip(&fit) {
            *r = yi - f;
        }
    }
    let mut estimate = vec![ZERO; n];
    for (&j, &c) in selected.iter().zip(&coef) {
        estimate[j] = c;
    }
    let mut res = RecoveryResult::finish(a, y, estimate, 0.0);
    res.iterations = selected.len();
    Ok(res)
}

/// Least-squares refit restricted to `support`; zeros elsewhere.
pub fn debias(a: &Array2<C64>, y: &[C64], support: &[usize]) -> Result<Vec<C64>> {
    check_dims(a, y)?;
    if support.is_empty() {
        return Err(Error::invalid("debiasing needs a nonempty support"));
    }
    if support.len() > a.nrows() {
        return Err(Error::invalid(format!(
            "support of {} exceeds {} measurements",
            support.len(),
            a.nrows()
        )));
    }
    if let Some(&j) = support.iter().find(|&&j| j >= a.ncols()) {
        return Err(Error::invalid(format!("support index {j} out of range")));
    }
    let sub = a.select(Axis(1), support);
    let coef = lstsq(&sub.view(), y)?;
    let mut out = vec![ZERO; a.ncols()];
    for (&j, c) in support.iter().zip(coef) {
        out[j] = c;
    }
    Ok(out)
}

/// Threshold rule for turning an estimate into a support set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", content = "value", rename_all = "lowercase")]
pub enum SupportRule {
    /// `|x_i| > τ`.
    Absolute(f64),
    /// `|x_i| > ρ · max_j |x_j|`.
    Relative(f64),
}

impl SupportRule {
    pub fn threshold(&self, estimate: &[C64]) -> f64 {
        match *self {
            SupportRule::Absolute(t) => t,
            SupportRule::Relative(rho) => rho * estimate.iter().map(|v| v.norm()).fold(0.0, f64::max),
        }
    }
}

pub fn detect_support(estimate: &[C64], rule: SupportRule) -> Vec<usize> {
    let t = rule.threshold(estimate);
    estimate
        .iter()
        .enumerate()
        .filter(|(_, v)| v.norm() > t)
        .map(|(i, _)| i)
        .collect()
}

/// λ policy and post-processing shared by the channel estimator and the
/// relay diagnoser.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default)]
pub struct SolverConfig {
    /// `c` in `λ = c · σ · √(2 ln n) · max_j ‖a_j‖`.
    pub lambda_scale: f64,
    /// Lower bound on λ as a fraction of `‖A^H y‖_∞`; keeps noiseless
    /// problems sparse.
    pub lambda_floor_ratio: f64,
    pub support_rule: SupportRule,
    /// Solve against unit-norm columns, i.e. weight each `|x_j|` in the
    /// penalty by `‖a_j‖`. Support detection then acts on the rescaled
    /// coefficients `‖a_j‖·|x_j|`.
    pub normalize_columns: bool,
    #[serde(flatten)]
    pub lasso: LassoOptions,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            lambda_scale: 1.0,
            lambda_floor_ratio: 1e-3,
            support_rule: SupportRule::Relative(0.1),
            normalize_columns: true,
            lasso: LassoOptions::default(),
        }
    }
}

impl SolverConfig {
    pub fn lambda(&self, a: &Array2<C64>, y: &[C64], noise_std: f64) -> f64 {
        let n = a.ncols().max(2) as f64;
        let max_norm = column_norms(&a.view()).into_iter().fold(0.0, f64::max);
        let universal = self.lambda_scale * noise_std * (2.0 * n.ln()).sqrt() * max_norm;
        universal.max(self.lambda_floor_ratio * lambda_max(a, y))
    }
}

/// LASSO followed by support detection and a least-squares refit.
#[derive(Debug, Clone)]
pub struct SparseEstimate {
    pub lasso: RecoveryResult,
    pub support: Vec<usize>,
    /// Refit on `support`; equals the LASSO estimate if the refit was
    /// rank-deficient (see `debiased`).
    pub estimate: Vec<C64>,
    pub debiased: bool,
}

/// A sensing matrix prepared for repeated [`SparseEstimate`] solves: columns
/// optionally scaled to unit norm, Lipschitz constant computed once.
#[derive(Debug, Clone)]
pub struct SensingOperator {
    matrix: Array2<C64>,
    scales: Option<Vec<f64>>,
    lipschitz: f64,
}

impl SensingOperator {
    /// Honours `cfg.normalize_columns`; a preset `cfg.lasso.lipschitz` is
    /// taken as the constant of the (possibly normalized) matrix.
    pub fn new(a: &Array2<C64>, cfg: &SolverConfig) -> Self {
        let mut matrix = a.clone();
        let scales = cfg.normalize_columns.then(|| {
            let sc: Vec<f64> = column_norms(&a.view())
                .into_iter()
                .map(|c| if c > 0.0 { c } else { 1.0 })
                .collect();
            for (mut col, &c) in matrix.axis_iter_mut(Axis(1)).zip(&sc) {
                col.mapv_inplace(|v| v / c);
            }
            sc
        });
        let lipschitz = cfg
            .lasso
            .lipschitz
            .unwrap_or_else(|| spectral_norm_sq(&matrix.view()) * 1.0001);
        Self {
            matrix,
            scales,
            lipschitz,
        }
    }

    /// The matrix the LASSO actually sees.
    pub fn matrix(&self) -> &Array2<C64> {
        &self.matrix
    }

    /// Column norms of the original matrix, when normalized.
    pub fn scales(&self) -> Option<&[f64]> {
        self.scales.as_deref()
    }

    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    /// LASSO, support detection, least-squares refit. Estimates are returned
    /// in the original column scaling.
    pub fn estimate(&self, y: &[C64], noise_std: f64, cfg: &SolverConfig) -> Result<SparseEstimate> {
        let a = &self.matrix;
        check_dims(a, y)?;
        let opts = LassoOptions {
            lipschitz: Some(self.lipschitz),
            ..cfg.lasso.clone()
        };
        let mut lasso = lasso_solve(a, y, cfg.lambda(a, y, noise_std), &opts)?;
        let mut support = detect_support(&lasso.estimate, cfg.support_rule);
        if support.len() > a.nrows() {
            support.sort_by(|&i, &j| lasso.estimate[j].norm().total_cmp(&lasso.estimate[i].norm()));
            support.truncate(a.nrows());
            support.sort_unstable();
        }
        let (mut estimate, debiased) = if support.is_empty() {
            (vec![ZERO; a.ncols()], true)
        } else {
            match debias(a, y, &support) {
                Ok(x) => (x, true),
                Err(Error::NumericalRank(_)) => (lasso.estimate.clone(), false),
                Err(e) => return Err(e),
            }
        };
        if let Some(sc) = &self.scales {
            for ((x, l), &c) in estimate.iter_mut().zip(lasso.estimate.iter_mut()).zip(sc) {
                *x /= c;
                *l /= c;
            }
        }
        Ok(SparseEstimate {
            lasso,
            support,
            estimate,
            debiased,
        })
    }
}

/// One-shot [`SensingOperator::estimate`].
pub fn sparse_estimate(a: &Array2<C64>, y: &[C64], noise_std: f64, cfg: &SolverConfig) -> Result<SparseEstimate> {
    check_dims(a, y)?;
    SensingOperator::new(a, cfg).estimate(y, noise_std, cfg)
}
