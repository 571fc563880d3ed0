//! Observed count data together with its design and offset matrices.

use nalgebra::DMatrix;

use crate::error::{check_dims, Error, Result};

/// Immutable input of every fit: counts `Y` (n x p), design `X` (n x d)
/// and offsets `O` (n x p), plus row/column identifiers.
///
/// Counts must be non-negative integers stored as `f64`; the design is
/// expected to carry an explicit intercept column when one is wanted.
#[derive(Debug, Clone)]
pub struct CountDataset {
    y: DMatrix<f64>,
    x: DMatrix<f64>,
    o: DMatrix<f64>,
    sample_ids: Vec<String>,
    variable_ids: Vec<String>,
    log_factorial_sum: f64,
}

impl CountDataset {
    /// Builds a dataset after validating shapes and entries.
    pub fn new(
        y: DMatrix<f64>,
        x: DMatrix<f64>,
        o: DMatrix<f64>,
        sample_ids: Vec<String>,
        variable_ids: Vec<String>,
    ) -> Result<Self> {
        let (n, p) = y.shape();
        if n == 0 || p == 0 {
            return Err(Error::InvalidInput("count matrix is empty".into()));
        }
        if x.nrows() != n {
            return Err(Error::Dimension {
                context: "design matrix rows",
                expected: format!("{n}"),
                found: format!("{}", x.nrows()),
            });
        }
        if x.ncols() == 0 {
            return Err(Error::InvalidInput("design matrix has no columns".into()));
        }
        check_dims("offset matrix", (n, p), o.shape())?;
        if sample_ids.len() != n {
            return Err(Error::InvalidInput(format!(
                "expected {n} sample identifiers, found {}",
                sample_ids.len()
            )));
        }
        if variable_ids.len() != p {
            return Err(Error::InvalidInput(format!(
                "expected {p} variable identifiers, found {}",
                variable_ids.len()
            )));
        }
        for (idx, v) in y.iter().enumerate() {
            if !v.is_finite() || *v < 0.0 || v.fract() != 0.0 {
                let (i, j) = (idx % n, idx / n);
                return Err(Error::InvalidInput(format!(
                    "count ({i}, {j}) is {v}; counts must be non-negative integers"
                )));
            }
        }
        if let Some(idx) = x.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                row: idx % n,
                col: idx / n,
                what: "design entry",
            });
        }
        if let Some(idx) = o.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                row: idx % n,
                col: idx / n,
                what: "offset entry",
            });
        }
        let log_factorial_sum = y.iter().map(|&v| statrs::function::gamma::ln_gamma(v + 1.0)).sum();
        Ok(Self {
            y,
            x,
            o,
            sample_ids,
            variable_ids,
            log_factorial_sum,
        })
    }

    /// Dataset with an intercept-only design and zero offsets.
    pub fn from_counts(y: DMatrix<f64>) -> Result<Self> {
        let (n, p) = y.shape();
        let sample_ids = (0..n).map(|i| format!("s{i}")).collect();
        let variable_ids = (0..p).map(|j| format!("v{j}")).collect();
        let x = DMatrix::from_element(n, 1, 1.0);
        let o = DMatrix::zeros(n, p);
        Self::new(y, x, o, sample_ids, variable_ids)
    }

    pub fn n_samples(&self) -> usize {
        self.y.nrows()
    }

    pub fn n_variables(&self) -> usize {
        self.y.ncols()
    }

    pub fn n_covariates(&self) -> usize {
        self.x.ncols()
    }

    pub fn counts(&self) -> &DMatrix<f64> {
        &self.y
    }

    pub fn design(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn offsets(&self) -> &DMatrix<f64> {
        &self.o
    }

    pub fn sample_ids(&self) -> &[String] {
        &self.sample_ids
    }

    pub fn variable_ids(&self) -> &[String] {
        &self.variable_ids
    }

    /// Sum of log(Y_ij!) over all cells, computed once via log-gamma.
    pub fn log_factorial_sum(&self) -> f64 {
        self.log_factorial_sum
    }

    /// Restriction to a subset of rows (used by resampling schemes).
    pub fn subset_rows(&self, rows: &[usize]) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::InvalidInput("row subset is empty".into()));
        }
        if let Some(&r) = rows.iter().find(|&&r| r >= self.n_samples()) {
            return Err(Error::InvalidInput(format!(
                "row index {r} out of range (n = {})",
                self.n_samples()
            )));
        }
        let y = DMatrix::from_fn(rows.len(), self.n_variables(), |i, j| self.y[(rows[i], j)]);
        let x = DMatrix::from_fn(rows.len(), self.n_covariates(), |i, j| self.x[(rows[i], j)]);
        let o = DMatrix::from_fn(rows.len(), self.n_variables(), |i, j| self.o[(rows[i], j)]);
        let ids = rows.iter().map(|&r| self.sample_ids[r].clone()).collect();
        Self::new(y, x, o, ids, self.variable_ids.clone())
    }

    /// Replaces the offsets with `log(max(rowsum(Y), 1))` in every column.
    pub fn with_total_count_offsets(mut self) -> Self {
        for i in 0..self.n_samples() {
            let total: f64 = self.y.row(i).sum();
            let v = total.max(1.0).ln();
            for j in 0..self.n_variables() {
                self.o[(i, j)] = v;
            }
        }
        self
    }

    /// Replaces the design with an intercept-only column.
    pub fn with_intercept_only(mut self) -> Self {
        self.x = DMatrix::from_element(self.n_samples(), 1, 1.0);
        self
    }
}
