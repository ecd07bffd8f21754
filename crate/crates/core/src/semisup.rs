//! Semi-supervised estimators: a small matched sample supplies the
//! direction (OLS), the large unmatched sample supplies the norm.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::dlse::{fit_dlse, FitConfig, FitResult};
use crate::empirical::{empirical_covariance, sample_variance, sigma_norm, MatchedSample, SigmaEstimate, UnmatchedSample};
use crate::error::{Error, Result};
use crate::noise::NoiseModel;

/// Largest condition number of the design accepted by [`ols`].
pub const MAX_CONDITION: f64 = 1e12;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OlsFit {
    pub coefficients: Vec<f64>,
    pub intercept: Option<f64>,
    pub residuals: Vec<f64>,
    pub condition_number: f64,
}

/// Least squares fit of the matched sample, through the origin unless
/// `intercept` is set.
pub fn ols(matched: &MatchedSample, intercept: bool) -> Result<OlsFit> {
    let m = matched.len();
    let d = matched.dim();
    let cols = d + usize::from(intercept);
    if m <= cols {
        return Err(Error::InsufficientRows {
            needed: cols + 1,
            found: m,
        });
    }
    let design = if intercept {
        DMatrix::from_fn(m, cols, |i, j| if j == 0 { 1.0 } else { matched.xs()[(i, j - 1)] })
    } else {
        matched.xs().clone()
    };
    let y = DVector::from_column_slice(matched.ys());
    let svd = design.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    let condition = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    if !(condition <= MAX_CONDITION) {
        return Err(Error::RankDeficient { condition });
    }
    let coef = svd
        .solve(&y, 0.0)
        .map_err(|e| Error::Numerical(format!("least squares solve failed: {e}")))?;
    let residuals: Vec<f64> = (&y - &design * &coef).iter().copied().collect();
    let (icpt, slopes) = if intercept {
        (Some(coef[0]), coef.iter().skip(1).copied().collect())
    } else {
        (None, coef.iter().copied().collect())
    };
    Ok(OlsFit {
        coefficients: slopes,
        intercept: icpt,
        residuals,
        condition_number: condition,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NormEstimate {
    pub r_n: f64,
    /// Set when the sample variance fell below `Var(ε)` and `r_n` was clamped to 0.
    pub clamped: bool,
}

/// `r_n = √max(Var̂(Y) − Var(ε), 0)`, estimating `‖β₀‖_{2,Σ}`.
pub fn variance_norm_estimate(ys: &[f64], noise: &NoiseModel) -> Result<NormEstimate> {
    if ys.len() < 2 {
        return Err(Error::InsufficientRows {
            needed: 2,
            found: ys.len(),
        });
    }
    let diff = sample_variance(ys) - noise.variance();
    Ok(NormEstimate {
        r_n: diff.max(0.0).sqrt(),
        clamped: diff < 0.0,
    })
}

fn rescale(beta: &[f64], target: f64, sigma: &SigmaEstimate) -> Result<Vec<f64>> {
    if !(target.is_finite() && target >= 0.0) {
        return Err(Error::InvalidParameter(format!("target norm must be >= 0, got {target}")));
    }
    let norm = sigma_norm(beta, sigma)?;
    if !(norm > 0.0) {
        return Err(Error::DegenerateInput("OLS estimate has zero Σ̂-norm".into()));
    }
    Ok(beta.iter().map(|b| b * target / norm).collect())
}

/// `β† = β̃_m ‖β̂_n‖_{2,Σ̂} / ‖β̃_m‖_{2,Σ̂}`.
pub fn beta_dagger(beta_ols: &[f64], dlse_norm: f64, sigma: &SigmaEstimate) -> Result<Vec<f64>> {
    rescale(beta_ols, dlse_norm, sigma)
}

/// `β̃_{n,m} = β̃_m r_n / ‖β̃_m‖_{2,Σ̂}`.
pub fn beta_tilde(beta_ols: &[f64], r_n: f64, sigma: &SigmaEstimate) -> Result<Vec<f64>> {
    rescale(beta_ols, r_n, sigma)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SemiDiagnostics {
    pub ols_norm: f64,
    pub tilde_norm: f64,
    pub dagger_norm: Option<f64>,
    pub dlse_norm: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SemiResult {
    pub beta_ols: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub intercept: Option<f64>,
    pub beta_dagger: Option<Vec<f64>>,
    pub beta_tilde: Vec<f64>,
    pub r_n: f64,
    pub r_n_clamped: bool,
    pub sigma_hat: SigmaEstimate,
    pub noise: NoiseModel,
    pub diagnostics: SemiDiagnostics,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dlse: Option<FitResult>,
}

#[derive(Debug, Clone, Default)]
pub struct SemiOptions {
    pub intercept: bool,
    /// Fit the unmatched estimator to obtain `β†`; skipped when `None`.
    pub fit: Option<FitConfig>,
}

/// All three estimators for one matched/unmatched pair. `Σ̂` always comes
/// from the unmatched covariates.
pub fn semi_supervised(
    matched: &MatchedSample,
    unmatched: &UnmatchedSample,
    noise: &NoiseModel,
    opts: &SemiOptions,
) -> Result<SemiResult> {
    if matched.dim() != unmatched.dim() {
        return Err(Error::DimensionMismatch {
            expected: unmatched.dim(),
            found: matched.dim(),
        });
    }
    let fit = ols(matched, opts.intercept)?;
    let sigma_hat = empirical_covariance(unmatched.xs())?;
    let r = variance_norm_estimate(unmatched.ys(), noise)?;
    let tilde = beta_tilde(&fit.coefficients, r.r_n, &sigma_hat)?;
    let dlse = match &opts.fit {
        Some(cfg) => Some(fit_dlse(unmatched, noise, cfg)?),
        None => None,
    };
    let dlse_norm = dlse.as_ref().map(|f| f.sigma_norm_hat);
    let dagger = match dlse_norm {
        Some(nrm) => Some(beta_dagger(&fit.coefficients, nrm, &sigma_hat)?),
        None => None,
    };
    let diagnostics = SemiDiagnostics {
        ols_norm: sigma_norm(&fit.coefficients, &sigma_hat)?,
        tilde_norm: sigma_norm(&tilde, &sigma_hat)?,
        dagger_norm: dagger.as_deref().map(|b| sigma_norm(b, &sigma_hat)).transpose()?,
        dlse_norm,
    };
    Ok(SemiResult {
        beta_ols: fit.coefficients,
        intercept: fit.intercept,
        beta_dagger: dagger,
        beta_tilde: tilde,
        r_n: r.r_n,
        r_n_clamped: r.clamped,
        sigma_hat,
        noise: noise.clone(),
        diagnostics,
        dlse,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ols_examples() {
        let exact = MatchedSample::from_rows(vec![2.0, 4.0, -6.0], &[vec![1.0], vec![2.0], vec![-3.0]]).unwrap();
        assert!((ols(&exact, false).unwrap().coefficients[0] - 2.0).abs() < 1e-12);

        let m = MatchedSample::from_rows(vec![1.0, 2.0, 4.0], &[vec![1.0], vec![2.0], vec![3.0]]).unwrap();
        assert!((ols(&m, false).unwrap().coefficients[0] - 17.0 / 14.0).abs() < 1e-14);

        let square = MatchedSample::from_rows(vec![1.0, 2.0], &[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        assert!(matches!(ols(&square, false), Err(Error::InsufficientRows { .. })));

        let collinear =
            MatchedSample::from_rows(vec![1.0, 2.0, 3.0], &[vec![1.0, 2.0], vec![2.0, 4.0], vec![3.0, 6.0]]).unwrap();
        assert!(matches!(ols(&collinear, false), Err(Error::RankDeficient { .. })));
    }

    #[test]
    fn ols_residuals_are_orthogonal() {
        let rows = vec![vec![1.0, 0.3], vec![-0.4, 2.0], vec![0.7, -1.1], vec![2.2, 0.4], vec![-1.5, -0.2]];
        let m = MatchedSample::from_rows(vec![0.9, 1.7, -2.0, 3.1, -0.6], &rows).unwrap();
        for intercept in [false, true] {
            let fit = ols(&m, intercept).unwrap();
            for j in 0..2 {
                let dot: f64 = fit.residuals.iter().zip(&rows).map(|(r, x)| r * x[j]).sum();
                assert!(dot.abs() < 1e-8);
            }
            if intercept {
                assert!(fit.residuals.iter().sum::<f64>().abs() < 1e-8);
            }
        }
    }

    #[test]
    fn rescaling_examples() {
        let i2 = SigmaEstimate::identity(2);
        assert_eq!(beta_dagger(&[3.0, 0.0], 1.0, &i2).unwrap(), vec![1.0, 0.0]);
        assert_eq!(beta_tilde(&[0.0, 4.0], 2.0, &i2).unwrap(), vec![0.0, 2.0]);
        assert_eq!(beta_tilde(&[0.0, 4.0], 0.0, &i2).unwrap(), vec![0.0, 0.0]);
        let b = [1.5, -2.5];
        let same = beta_dagger(&b, sigma_norm(&b, &i2).unwrap(), &i2).unwrap();
        assert!(same.iter().zip(&b).all(|(x, y)| (x - y).abs() < 1e-15));
        assert!(matches!(beta_dagger(&[0.0, 0.0], 1.0, &i2), Err(Error::DegenerateInput(_))));
    }

    #[test]
    fn variance_norm_clamps() {
        let noise = NoiseModel::normal(2.0).unwrap();
        let r = variance_norm_estimate(&[0.0, 1.0, 2.0], &noise).unwrap();
        assert_eq!(r.r_n, 0.0);
        assert!(r.clamped);
        let r = variance_norm_estimate(&[0.0, 4.0, 8.0], &NoiseModel::normal(1.0).unwrap()).unwrap();
        assert!((r.r_n - 15f64.sqrt()).abs() < 1e-14);
        assert!(!r.clamped);
        assert!(variance_norm_estimate(&[1.0], &noise).is_err());
    }
}
