//! Model and variational parameters, the variational objective and its
//! analytic gradients, count moments, and partial-correlation extraction.
//!
//! The latent layer is Gaussian with sparse precision `Omega`; counts are
//! conditionally Poisson with log-rate `o_ij + x_i'beta_j + z_ij`. The
//! objective below is the closed-form lower bound of the observed-data
//! log-likelihood under a diagonal Gaussian variational family.

use nalgebra::{DMatrix, DVector};

use crate::data::CountDataset;
use crate::error::{check_dims, Error, Result};
use crate::linalg;

/// Lower box bound on variational variances. The objective's `log S` and
/// the gradient's elementwise reciprocal both diverge at zero.
pub const VAR_FLOOR: f64 = 1e-8;

/// Relative tolerance under which an almost-symmetric precision input is
/// accepted and symmetrized exactly.
const SYM_TOL: f64 = 1e-10;

/// Regression coefficients `B` (d x p) and precision matrix `Omega` (p x p).
#[derive(Debug, Clone)]
pub struct ModelParams {
    b: DMatrix<f64>,
    omega: DMatrix<f64>,
}

impl ModelParams {
    pub fn new(b: DMatrix<f64>, omega: DMatrix<f64>) -> Result<Self> {
        if b.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("coefficient matrix has non-finite entries".into()));
        }
        if omega.nrows() != omega.ncols() {
            return Err(Error::Dimension {
                context: "precision matrix",
                expected: "square".into(),
                found: format!("{}x{}", omega.nrows(), omega.ncols()),
            });
        }
        if b.ncols() != omega.nrows() {
            return Err(Error::Dimension {
                context: "coefficients vs precision",
                expected: format!("{} columns", omega.nrows()),
                found: format!("{} columns", b.ncols()),
            });
        }
        let scale = omega.iter().fold(1.0_f64, |acc, v| acc.max(v.abs()));
        let p = omega.nrows();
        for j in 0..p {
            for k in (j + 1)..p {
                if (omega[(j, k)] - omega[(k, j)]).abs() > SYM_TOL * scale {
                    return Err(Error::InvalidInput(format!(
                        "precision matrix asymmetric at ({j}, {k})"
                    )));
                }
            }
        }
        let omega = linalg::symmetrize(&omega);
        linalg::cholesky(&omega, "precision matrix at construction")?;
        Ok(Self { b, omega })
    }

    pub fn coefficients(&self) -> &DMatrix<f64> {
        &self.b
    }

    pub fn precision(&self) -> &DMatrix<f64> {
        &self.omega
    }

    pub fn n_variables(&self) -> usize {
        self.omega.nrows()
    }

    pub fn n_covariates(&self) -> usize {
        self.b.nrows()
    }
}

/// Variational Gaussian means `M` (n x p) and variances `S` (n x p).
/// Row i of `S` stores the diagonal of the i-th sample's covariance.
#[derive(Debug, Clone)]
pub struct VariationalParams {
    m: DMatrix<f64>,
    s: DMatrix<f64>,
}

impl VariationalParams {
    pub fn new(m: DMatrix<f64>, s: DMatrix<f64>) -> Result<Self> {
        check_dims("variational variances", m.shape(), s.shape())?;
        if m.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("variational means have non-finite entries".into()));
        }
        if let Some(idx) = s.iter().position(|&v| !v.is_finite() || v < VAR_FLOOR) {
            let (i, j) = (idx % s.nrows(), idx / s.nrows());
            return Err(Error::InvalidInput(format!(
                "variational variance ({i}, {j}) = {} below floor {VAR_FLOOR}",
                s[(i, j)]
            )));
        }
        Ok(Self { m, s })
    }

    pub fn means(&self) -> &DMatrix<f64> {
        &self.m
    }

    pub fn variances(&self) -> &DMatrix<f64> {
        &self.s
    }

    pub fn n_samples(&self) -> usize {
        self.m.nrows()
    }

    pub fn n_variables(&self) -> usize {
        self.m.ncols()
    }
}

/// Matrix of expected counts `A_ij = exp(o_ij + x_i'beta_j + m_ij + s_ij/2)`.
#[derive(Debug, Clone)]
pub struct ExpectedCounts {
    a: DMatrix<f64>,
}

impl ExpectedCounts {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.a
    }
}

/// Estimated latent covariance `n^-1 (M'M + diag(colsum S))`.
#[derive(Debug, Clone)]
pub struct LatentCovariance {
    sigma: DMatrix<f64>,
}

impl LatentCovariance {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.sigma
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.sigma
    }
}

/// Edge of the conditional-dependence graph with its partial correlation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PartialCorrelation {
    pub i: usize,
    pub j: usize,
    pub value: f64,
}

/// Edges (i < j) whose precision entries exceed a threshold in magnitude,
/// weighted by `rho_ij = -Omega_ij / sqrt(Omega_ii Omega_jj)`.
#[derive(Debug, Clone)]
pub struct PartialCorrelationGraph {
    pub n_nodes: usize,
    pub edges: Vec<PartialCorrelation>,
}

fn check_triplet(
    data: &CountDataset,
    params: &ModelParams,
    vparams: &VariationalParams,
) -> Result<()> {
    let (n, p, d) = (data.n_samples(), data.n_variables(), data.n_covariates());
    check_dims("variational parameters", (n, p), (vparams.n_samples(), vparams.n_variables()))?;
    check_dims("model parameters", (d, p), (params.n_covariates(), params.n_variables()))?;
    Ok(())
}

/// Log-rates `O + XB + M` shared by the objective and the gradients.
fn log_rate(data: &CountDataset, params: &ModelParams, vparams: &VariationalParams) -> DMatrix<f64> {
    let mut r = data.design() * params.coefficients();
    r += data.offsets();
    r += vparams.means();
    r
}

fn expected_counts_matrix(log_rate: &DMatrix<f64>, s: &DMatrix<f64>) -> DMatrix<f64> {
    log_rate.zip_map(s, |r, s| (r + 0.5 * s).exp())
}

/// Expected counts under the variational posterior.
///
/// Fails with the offending cell coordinates when the exponent overflows.
pub fn expected_counts(
    data: &CountDataset,
    params: &ModelParams,
    vparams: &VariationalParams,
) -> Result<ExpectedCounts> {
    check_triplet(data, params, vparams)?;
    let a = expected_counts_matrix(&log_rate(data, params, vparams), vparams.variances());
    if let Some(idx) = a.iter().position(|v| !v.is_finite()) {
        let (i, j) = (idx % a.nrows(), idx / a.nrows());
        return Err(Error::NonFinite { row: i, col: j, what: "expected count" });
    }
    Ok(ExpectedCounts { a })
}

/// Latent covariance estimate `n^-1 (M'M + diag(colsum S))`.
pub fn latent_covariance(vparams: &VariationalParams) -> LatentCovariance {
    let n = vparams.n_samples() as f64;
    let m = vparams.means();
    let mut sigma = m.transpose() * m;
    for j in 0..vparams.n_variables() {
        sigma[(j, j)] += vparams.variances().column(j).sum();
    }
    sigma /= n;
    LatentCovariance { sigma: linalg::symmetrize(&sigma) }
}

/// Variational objective
/// `J = 1'(Y.(O+XB+M) - A + log(S)/2)1 + n/2 (logdet Omega - tr(SigmaHat Omega)) + np/2 - K(Y)`.
///
/// Returns `-inf` when the expected counts overflow; errors only when the
/// precision matrix is not positive-definite.
pub fn elbo(data: &CountDataset, params: &ModelParams, vparams: &VariationalParams) -> Result<f64> {
    check_triplet(data, params, vparams)?;
    let chol = linalg::cholesky(params.precision(), "precision matrix in objective")?;
    let logdet = linalg::logdet(&chol);
    Ok(elbo_with_logdet(data, params, vparams, logdet))
}

/// Objective value with the precision log-determinant precomputed; never
/// fails, mapping overflow to `-inf` so that line searches can reject.
pub(crate) fn elbo_with_logdet(
    data: &CountDataset,
    params: &ModelParams,
    vparams: &VariationalParams,
    logdet_omega: f64,
) -> f64 {
    let n = data.n_samples() as f64;
    let p = data.n_variables() as f64;
    let rate = log_rate(data, params, vparams);
    let a = expected_counts_matrix(&rate, vparams.variances());
    let mut acc = 0.0;
    for ((&y, &r), (&av, &s)) in data
        .counts()
        .iter()
        .zip(rate.iter())
        .zip(a.iter().zip(vparams.variances().iter()))
    {
        acc += y * r - av + 0.5 * s.ln();
    }
    let sigma_hat = latent_covariance(vparams);
    let trace = linalg::trace_product_sym(sigma_hat.matrix(), params.precision());
    let j = acc + 0.5 * n * (logdet_omega - trace) + 0.5 * n * p - data.log_factorial_sum();
    if j.is_nan() {
        f64::NEG_INFINITY
    } else {
        j
    }
}

/// `J - lambda * sum_{j != k} |Omega_jk|`.
pub fn penalized_elbo(
    data: &CountDataset,
    params: &ModelParams,
    vparams: &VariationalParams,
    lambda: f64,
) -> Result<f64> {
    if lambda < 0.0 {
        return Err(Error::InvalidInput(format!("lambda must be non-negative, got {lambda}")));
    }
    Ok(elbo(data, params, vparams)? - lambda * linalg::offdiag_l1(params.precision()))
}

/// Gradient of the objective with respect to the coefficients: `X'(Y - A)`.
pub fn grad_coefficients(
    data: &CountDataset,
    params: &ModelParams,
    vparams: &VariationalParams,
) -> Result<DMatrix<f64>> {
    let a = expected_counts(data, params, vparams)?;
    Ok(data.design().transpose() * (data.counts() - a.matrix()))
}

/// Gradient with respect to the variational means: `Y - A - M Omega`.
pub fn grad_means(
    data: &CountDataset,
    params: &ModelParams,
    vparams: &VariationalParams,
) -> Result<DMatrix<f64>> {
    let a = expected_counts(data, params, vparams)?;
    Ok(data.counts() - a.matrix() - vparams.means() * params.precision())
}

/// Gradient with respect to the variational variances:
/// `(1/S - A - 1_n diag(Omega)') / 2`.
pub fn grad_variances(
    data: &CountDataset,
    params: &ModelParams,
    vparams: &VariationalParams,
) -> Result<DMatrix<f64>> {
    let a = expected_counts(data, params, vparams)?;
    let omega_diag = params.precision().diagonal();
    let mut g = vparams.s.map(|s| 1.0 / s);
    g -= a.matrix();
    for i in 0..g.nrows() {
        for j in 0..g.ncols() {
            g[(i, j)] = 0.5 * (g[(i, j)] - omega_diag[j]);
        }
    }
    Ok(g)
}

/// Extracts the partial-correlation graph from the precision matrix.
/// An edge is reported when `|Omega_jk| > threshold`.
pub fn partial_correlations(params: &ModelParams, threshold: f64) -> Result<PartialCorrelationGraph> {
    if threshold < 0.0 {
        return Err(Error::InvalidInput(format!(
            "threshold must be non-negative, got {threshold}"
        )));
    }
    let omega = params.precision();
    linalg::cholesky(omega, "precision matrix for partial correlations")?;
    let p = omega.nrows();
    let mut edges = Vec::new();
    for i in 0..p {
        for j in (i + 1)..p {
            if omega[(i, j)].abs() > threshold {
                let value = -omega[(i, j)] / (omega[(i, i)] * omega[(j, j)]).sqrt();
                edges.push(PartialCorrelation { i, j, value });
            }
        }
    }
    Ok(PartialCorrelationGraph { n_nodes: p, edges })
}

/// First and second moments of the count distribution implied by a latent
/// Gaussian layer with mean `mu` and covariance `sigma`:
/// `mean_j = exp(mu_j + sigma_jj/2)`,
/// `var_j = mean_j + (exp(sigma_jj) - 1) mean_j^2`,
/// `cov_jk = (exp(sigma_jk) - 1) mean_j mean_k` for `j != k`.
pub fn pln_moments(
    mu: &DVector<f64>,
    sigma: &DMatrix<f64>,
) -> Result<(DVector<f64>, DVector<f64>, DMatrix<f64>)> {
    let p = mu.len();
    check_dims("latent covariance", (p, p), sigma.shape())?;
    linalg::cholesky(sigma, "latent covariance in moment formulas")?;
    let mean = DVector::from_fn(p, |j, _| (mu[j] + 0.5 * sigma[(j, j)]).exp());
    let var = DVector::from_fn(p, |j, _| {
        mean[j] + (sigma[(j, j)].exp() - 1.0) * mean[j] * mean[j]
    });
    let mut cov = DMatrix::from_fn(p, p, |j, k| (sigma[(j, k)].exp() - 1.0) * mean[j] * mean[k]);
    for j in 0..p {
        cov[(j, j)] = var[j];
    }
    Ok((mean, var, cov))
}
