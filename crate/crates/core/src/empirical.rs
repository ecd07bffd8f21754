//! Sample containers, the empirical CDF and covariance estimation.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Responses and covariates observed separately, with no record linkage.
#[derive(Debug, Clone, PartialEq)]
pub struct UnmatchedSample {
    ys: Vec<f64>,
    xs: DMatrix<f64>,
}

impl UnmatchedSample {
    pub fn new(ys: Vec<f64>, xs: DMatrix<f64>) -> Result<Self> {
        if ys.is_empty() {
            return Err(Error::InsufficientRows { needed: 1, found: 0 });
        }
        if xs.nrows() == 0 {
            return Err(Error::InsufficientRows { needed: 1, found: 0 });
        }
        if xs.ncols() == 0 {
            return Err(Error::InvalidParameter("covariates need at least one column".into()));
        }
        check_finite("responses", ys.iter())?;
        check_finite("covariates", xs.iter())?;
        Ok(UnmatchedSample { ys, xs })
    }

    pub fn from_rows(ys: Vec<f64>, rows: &[Vec<f64>]) -> Result<Self> {
        Self::new(ys, matrix_from_rows(rows)?)
    }

    pub fn ys(&self) -> &[f64] {
        &self.ys
    }

    /// `n_X × d` covariate matrix.
    pub fn xs(&self) -> &DMatrix<f64> {
        &self.xs
    }

    pub fn n_y(&self) -> usize {
        self.ys.len()
    }

    pub fn n_x(&self) -> usize {
        self.xs.nrows()
    }

    pub fn dim(&self) -> usize {
        self.xs.ncols()
    }

    /// Center and scale `Y` and every covariate column to unit variance.
    pub fn standardize(&self) -> Result<(UnmatchedSample, Standardization)> {
        let (y_mean, y_sd) = mean_sd(&self.ys)?;
        let mut x_means = Vec::with_capacity(self.dim());
        let mut x_sds = Vec::with_capacity(self.dim());
        let mut xs = self.xs.clone();
        for (j, mut col) in xs.column_iter_mut().enumerate() {
            let v: Vec<f64> = col.iter().copied().collect();
            let (m, s) = mean_sd(&v).map_err(|_| {
                Error::DegenerateInput(format!("covariate column x{} has zero variance", j + 1))
            })?;
            col.apply(|x| *x = (*x - m) / s);
            x_means.push(m);
            x_sds.push(s);
        }
        let ys = self.ys.iter().map(|y| (y - y_mean) / y_sd).collect();
        Ok((
            UnmatchedSample { ys, xs },
            Standardization {
                y_mean,
                y_sd,
                x_means,
                x_sds,
            },
        ))
    }

    /// Warnings about tied values; the estimator's theory assumes continuous
    /// covariates but discrete data are accepted.
    pub fn discreteness_warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        let fy = tie_fraction(&self.ys);
        if fy > DISCRETE_TIE_FRACTION {
            out.push(format!(
                "response has {:.1}% tied values; data look discrete",
                100.0 * fy
            ));
        }
        for (j, col) in self.xs.column_iter().enumerate() {
            let v: Vec<f64> = col.iter().copied().collect();
            let f = tie_fraction(&v);
            if f > DISCRETE_TIE_FRACTION {
                out.push(format!(
                    "covariate x{} has {:.1}% tied values; data look discrete",
                    j + 1,
                    100.0 * f
                ));
            }
        }
        out
    }
}

const DISCRETE_TIE_FRACTION: f64 = 0.05;

/// Paired `(X̃_k, Ỹ_k)` rows.
#[derive(Debug, Clone, PartialEq)]
pub struct MatchedSample {
    ys: Vec<f64>,
    xs: DMatrix<f64>,
}

impl MatchedSample {
    pub fn new(ys: Vec<f64>, xs: DMatrix<f64>) -> Result<Self> {
        if ys.len() != xs.nrows() {
            return Err(Error::DimensionMismatch {
                expected: ys.len(),
                found: xs.nrows(),
            });
        }
        if ys.is_empty() {
            return Err(Error::InsufficientRows { needed: 1, found: 0 });
        }
        if xs.ncols() == 0 {
            return Err(Error::InvalidParameter("covariates need at least one column".into()));
        }
        check_finite("matched responses", ys.iter())?;
        check_finite("matched covariates", xs.iter())?;
        Ok(MatchedSample { ys, xs })
    }

    pub fn from_rows(ys: Vec<f64>, rows: &[Vec<f64>]) -> Result<Self> {
        Self::new(ys, matrix_from_rows(rows)?)
    }

    pub fn ys(&self) -> &[f64] {
        &self.ys
    }

    pub fn xs(&self) -> &DMatrix<f64> {
        &self.xs
    }

    pub fn len(&self) -> usize {
        self.ys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ys.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.xs.ncols()
    }
}

/// Affine transform applied on ingestion; estimates are reported on the
/// standardized scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardization {
    pub y_mean: f64,
    pub y_sd: f64,
    pub x_means: Vec<f64>,
    pub x_sds: Vec<f64>,
}

/// Symmetric positive semi-definite `d × d` covariance estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct SigmaEstimate {
    matrix: DMatrix<f64>,
}

impl SigmaEstimate {
    pub fn new(matrix: DMatrix<f64>) -> Result<Self> {
        if !matrix.is_square() || matrix.nrows() == 0 {
            return Err(Error::InvalidParameter(format!(
                "covariance must be square and non-empty, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        check_finite("covariance", matrix.iter())?;
        let scale = matrix.amax().max(1.0);
        let asym = (&matrix - matrix.transpose()).amax();
        if asym > 1e-12 * scale {
            return Err(Error::InvalidParameter(format!("covariance is not symmetric ({asym:e})")));
        }
        let min_eig = matrix.clone().symmetric_eigenvalues().min();
        if min_eig < -1e-10 * scale {
            return Err(Error::InvalidParameter(format!(
                "covariance is not positive semi-definite (eigenvalue {min_eig:e})"
            )));
        }
        Ok(SigmaEstimate { matrix })
    }

    pub fn identity(d: usize) -> Self {
        SigmaEstimate {
            matrix: DMatrix::identity(d, d),
        }
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace()
    }
}

impl Serialize for SigmaEstimate {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let rows: Vec<Vec<f64>> = self
            .matrix
            .row_iter()
            .map(|r| r.iter().copied().collect())
            .collect();
        rows.serialize(s)
    }
}

/// `F_n(v_i) = #{j : v_j ≤ v_i} / n` for every input point, ties included.
pub fn ecdf_at_sample(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut out = vec![0.0; n];
    let nf = n as f64;
    let mut i = 0;
    while i < n {
        let mut j = i + 1;
        while j < n && values[order[j]] == values[order[i]] {
            j += 1;
        }
        let f = j as f64 / nf;
        for &k in &order[i..j] {
            out[k] = f;
        }
        i = j;
    }
    out
}

/// Unbiased (`n − 1` divisor) covariance of the rows of `xs`.
pub fn empirical_covariance(xs: &DMatrix<f64>) -> Result<SigmaEstimate> {
    let n = xs.nrows();
    if n < 2 {
        return Err(Error::InsufficientRows { needed: 2, found: n });
    }
    let d = xs.ncols();
    let means: Vec<f64> = xs.column_iter().map(|c| c.sum() / n as f64).collect();
    let mut cov = DMatrix::zeros(d, d);
    for a in 0..d {
        for b in a..d {
            let s: f64 = (0..n)
                .map(|i| (xs[(i, a)] - means[a]) * (xs[(i, b)] - means[b]))
                .sum();
            let v = s / (n as f64 - 1.0);
            cov[(a, b)] = v;
            cov[(b, a)] = v;
        }
    }
    SigmaEstimate::new(cov)
}

/// `‖β‖_{2,Σ} = √(βᵀΣβ)`.
pub fn sigma_norm(beta: &[f64], sigma: &SigmaEstimate) -> Result<f64> {
    let d = sigma.dim();
    if beta.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: beta.len(),
        });
    }
    let m = sigma.matrix();
    let mut q = 0.0;
    for a in 0..d {
        for b in 0..d {
            q += beta[a] * m[(a, b)] * beta[b];
        }
    }
    Ok(q.max(0.0).sqrt())
}

pub fn sample_variance(v: &[f64]) -> f64 {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0)
}

fn mean_sd(v: &[f64]) -> Result<(f64, f64)> {
    if v.len() < 2 {
        return Err(Error::InsufficientRows {
            needed: 2,
            found: v.len(),
        });
    }
    let m = v.iter().sum::<f64>() / v.len() as f64;
    let s = sample_variance(v).sqrt();
    if !(s > 0.0) {
        return Err(Error::DegenerateInput("zero variance".into()));
    }
    Ok((m, s))
}

fn tie_fraction(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    s.dedup();
    1.0 - s.len() as f64 / v.len() as f64
}

fn check_finite<'a>(what: &str, mut it: impl Iterator<Item = &'a f64>) -> Result<()> {
    if it.any(|v| !v.is_finite()) {
        Err(Error::Data(format!("{what} contain non-finite values")))
    } else {
        Ok(())
    }
}

pub(crate) fn matrix_from_rows(rows: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let d = rows.first().map_or(0, Vec::len);
    if let Some(bad) = rows.iter().find(|r| r.len() != d) {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: bad.len(),
        });
    }
    Ok(DMatrix::from_fn(rows.len(), d, |i, j| rows[i][j]))
}
