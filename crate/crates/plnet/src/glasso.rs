//! Sparse inverse-covariance estimation:
//! `min -(n/2) logdet(Omega) + (n/2) tr(SigmaHat Omega) + lambda ||Omega||_1,off`
//! over positive-definite `Omega`, by block coordinate descent over the
//! columns of the working covariance `W`, each block a lasso solved by
//! coordinate descent. The diagonal is never penalized.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg;

/// Inputs of the penalized Gaussian maximum-likelihood subproblem.
#[derive(Debug, Clone)]
pub struct GlassoProblem {
    sigma_hat: DMatrix<f64>,
    lambda: f64,
    n: usize,
}

impl GlassoProblem {
    pub fn new(sigma_hat: DMatrix<f64>, lambda: f64, n: usize) -> Result<Self> {
        if sigma_hat.nrows() != sigma_hat.ncols() {
            return Err(Error::Dimension {
                context: "covariance matrix",
                expected: "square".into(),
                found: format!("{}x{}", sigma_hat.nrows(), sigma_hat.ncols()),
            });
        }
        if lambda < 0.0 {
            return Err(Error::InvalidInput(format!("lambda must be non-negative, got {lambda}")));
        }
        if n == 0 {
            return Err(Error::InvalidInput("sample count must be positive".into()));
        }
        if sigma_hat.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("covariance has non-finite entries".into()));
        }
        if (0..sigma_hat.nrows()).any(|j| sigma_hat[(j, j)] <= 0.0) {
            return Err(Error::InvalidInput("covariance diagonal must be positive".into()));
        }
        Ok(Self { sigma_hat: linalg::symmetrize(&sigma_hat), lambda, n })
    }

    pub fn sigma_hat(&self) -> &DMatrix<f64> {
        &self.sigma_hat
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Penalty on the scale of the normalized objective
    /// `-logdet + tr + rho ||.||_1,off`.
    fn rho(&self) -> f64 {
        2.0 * self.lambda / self.n as f64
    }
}

/// Solver output: precision estimate, working covariance, final objective.
#[derive(Debug, Clone)]
pub struct GlassoSolution {
    pub omega: DMatrix<f64>,
    pub w: DMatrix<f64>,
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Smallest penalty at which the solution is exactly diagonal:
/// `(n/2) max_{j != k} |SigmaHat_jk|`. Returns 0 when p < 2.
pub fn lambda_max(sigma_hat: &DMatrix<f64>, n: usize) -> f64 {
    if sigma_hat.nrows() < 2 {
        return 0.0;
    }
    0.5 * n as f64 * linalg::offdiag_max_abs(sigma_hat)
}

/// `-(n/2) logdet(Omega) + (n/2) tr(SigmaHat Omega) + lambda ||Omega||_1,off`.
pub fn objective(problem: &GlassoProblem, omega: &DMatrix<f64>) -> Result<f64> {
    let chol = linalg::cholesky(omega, "candidate precision in objective")?;
    let half_n = 0.5 * problem.n as f64;
    Ok(half_n * (linalg::trace_product_sym(problem.sigma_hat(), omega) - linalg::logdet(&chol))
        + problem.lambda * linalg::offdiag_l1(omega))
}

fn soft_threshold(x: f64, t: f64) -> f64 {
    if x > t {
        x - t
    } else if x < -t {
        x + t
    } else {
        0.0
    }
}

/// One lasso block: minimize `b' W11 b / 2 - b's12 + rho |b|_1` by cyclic
/// coordinate descent. `active` maps the p-1 block coordinates to global
/// indices; `beta` is updated in place.
fn lasso_block(
    w: &DMatrix<f64>,
    sigma_hat: &DMatrix<f64>,
    col: usize,
    beta: &mut DVector<f64>,
    rho: f64,
    inner_tol: f64,
    inner_max_iter: usize,
) {
    let p = w.nrows();
    let active: Vec<usize> = (0..p).filter(|&k| k != col).collect();
    for _ in 0..inner_max_iter {
        let mut max_delta = 0.0_f64;
        for (a, &k) in active.iter().enumerate() {
            let mut r = sigma_hat[(k, col)];
            for (b, &l) in active.iter().enumerate() {
                if b != a {
                    r -= w[(k, l)] * beta[b];
                }
            }
            let new = soft_threshold(r, rho) / w[(k, k)];
            max_delta = max_delta.max((new - beta[a]).abs());
            beta[a] = new;
        }
        if max_delta <= inner_tol {
            break;
        }
    }
}

/// Reconstructs the precision matrix from the working covariance and the
/// per-column lasso coefficients, averaging the two triangles. An
/// off-diagonal entry is zero exactly when both column problems
/// soft-thresholded it to zero.
fn recover_omega(w: &DMatrix<f64>, betas: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let p = w.nrows();
    let mut omega = DMatrix::zeros(p, p);
    for col in 0..p {
        let mut fitted = 0.0;
        let mut a = 0usize;
        for k in 0..p {
            if k == col {
                continue;
            }
            fitted += w[(k, col)] * betas[(a, col)];
            a += 1;
        }
        let denom = w[(col, col)] - fitted;
        if !(denom > 0.0) {
            return Err(Error::NotPositiveDefinite(
                "working covariance lost positive definiteness".into(),
            ));
        }
        let ojj = 1.0 / denom;
        omega[(col, col)] = ojj;
        let mut a = 0usize;
        for k in 0..p {
            if k == col {
                continue;
            }
            omega[(k, col)] = -betas[(a, col)] * ojj;
            a += 1;
        }
    }
    for j in 0..p {
        for k in (j + 1)..p {
            let v = 0.5 * (omega[(j, k)] + omega[(k, j)]);
            omega[(j, k)] = v;
            omega[(k, j)] = v;
        }
    }
    Ok(omega)
}

pub fn solve(
    problem: &GlassoProblem,
    tol: f64,
    max_iter: usize,
    warm: Option<&GlassoSolution>,
) -> Result<GlassoSolution> {
    solve_impl(problem, tol, max_iter, warm, None)
}

pub(crate) fn solve_impl(
    problem: &GlassoProblem,
    tol: f64,
    max_iter: usize,
    warm: Option<&GlassoSolution>,
    mut sweep_objectives: Option<&mut Vec<f64>>,
) -> Result<GlassoSolution> {
    if tol <= 0.0 {
        return Err(Error::InvalidInput(format!("tolerance must be positive, got {tol}")));
    }
    let sigma_hat = problem.sigma_hat();
    let p = sigma_hat.nrows();

    if problem.lambda() == 0.0 {
        // direct inverse path
        let chol = nalgebra::Cholesky::new(sigma_hat.clone()).ok_or(Error::SingularCovariance)?;
        let omega = linalg::symmetrize(&chol.inverse());
        let obj = objective(problem, &omega)?;
        return Ok(GlassoSolution {
            omega,
            w: sigma_hat.clone(),
            objective: obj,
            iterations: 0,
            converged: true,
        });
    }

    let rho = problem.rho();
    let mean_offdiag = if p < 2 {
        0.0
    } else {
        linalg::offdiag_l1(sigma_hat) / (p * (p - 1)) as f64
    };
    let threshold = tol * mean_offdiag;
    let inner_tol = threshold / 10.0;

    let mut w = sigma_hat.clone();
    // column c of betas holds the p-1 lasso coefficients of block c
    let mut betas = DMatrix::zeros(p.saturating_sub(1).max(1), p);
    if let Some(ws) = warm {
        if ws.omega.nrows() == p {
            w = linalg::symmetrize(&ws.w);
            for j in 0..p {
                w[(j, j)] = sigma_hat[(j, j)];
            }
            for col in 0..p {
                let mut a = 0usize;
                for k in 0..p {
                    if k == col {
                        continue;
                    }
                    betas[(a, col)] = -ws.omega[(k, col)] / ws.omega[(col, col)];
                    a += 1;
                }
            }
        }
    }

    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iter {
        iterations += 1;
        let mut change = 0.0;
        for col in 0..p {
            let mut beta = betas.column(col).clone_owned();
            lasso_block(&w, sigma_hat, col, &mut beta, rho, inner_tol, 1000);
            betas.set_column(col, &beta);
            // w12 = W11 beta, written symmetrically
            let mut a = 0usize;
            for k in 0..p {
                if k == col {
                    continue;
                }
                let mut v = 0.0;
                let mut b = 0usize;
                for l in 0..p {
                    if l == col {
                        continue;
                    }
                    v += w[(k, l)] * beta[b];
                    b += 1;
                }
                change += (w[(k, col)] - v).abs();
                w[(k, col)] = v;
                w[(col, k)] = v;
                a += 1;
            }
            let _ = a;
        }
        if let Some(trace) = sweep_objectives.as_deref_mut() {
            let omega = recover_omega(&w, &betas)?;
            trace.push(objective(problem, &omega)?);
        }
        let avg_change = if p < 2 { 0.0 } else { change / (p * (p - 1)) as f64 };
        if avg_change <= threshold {
            converged = true;
            break;
        }
    }

    let omega = recover_omega(&w, &betas)?;
    let obj = objective(problem, &omega)?;
    Ok(GlassoSolution { omega, w, objective: obj, iterations, converged })
}
