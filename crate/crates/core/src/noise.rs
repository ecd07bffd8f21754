//! Noise laws `F^ε`: CDF, density, variance and sampling.
//!
//! Models are immutable once built. All kinds are parameterised in natural
//! units (σ for the normal, λ for the Laplace, kernel residuals and bandwidth
//! for the kernel density estimate) plus a location shift that defaults to 0.

use std::f64::consts::{PI, SQRT_2};
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special::{normal_cdf, normal_pdf};

/// Beyond this many scale units a normal CDF is within 1e-17 of 0 or 1.
pub(crate) const NORMAL_TAIL: f64 = 8.5;
/// Same for the Laplace CDF, `0.5 * exp(-39) < 1e-17`.
const LAPLACE_TAIL: f64 = 39.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NoiseKind {
    Normal { sigma: f64 },
    Laplace { lambda: f64 },
    /// Gaussian-kernel density estimate placed on `residuals`.
    EmpiricalKde { residuals: Vec<f64>, bandwidth: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct NoiseRecord {
    #[serde(flatten)]
    kind: NoiseKind,
    #[serde(default)]
    location: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "NoiseRecord", into = "NoiseRecord")]
pub struct NoiseModel {
    kind: NoiseKind,
    location: f64,
}

impl TryFrom<NoiseRecord> for NoiseModel {
    type Error = Error;

    fn try_from(rec: NoiseRecord) -> Result<Self> {
        let model = NoiseModel {
            kind: rec.kind,
            location: rec.location,
        };
        model.validate()?;
        Ok(model)
    }
}

impl From<NoiseModel> for NoiseRecord {
    fn from(m: NoiseModel) -> Self {
        NoiseRecord {
            kind: m.kind,
            location: m.location,
        }
    }
}

fn check_scale(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} must be finite and > 0, got {v}")))
    }
}

impl NoiseModel {
    pub fn normal(sigma: f64) -> Result<Self> {
        check_scale("sigma", sigma)?;
        Ok(NoiseModel {
            kind: NoiseKind::Normal { sigma },
            location: 0.0,
        })
    }

    pub fn laplace(lambda: f64) -> Result<Self> {
        check_scale("lambda", lambda)?;
        Ok(NoiseModel {
            kind: NoiseKind::Laplace { lambda },
            location: 0.0,
        })
    }

    /// Laplace law with the given standard deviation, `λ = sd / √2`.
    pub fn laplace_with_sd(sd: f64) -> Result<Self> {
        check_scale("sd", sd)?;
        Self::laplace(sd / SQRT_2)
    }

    pub fn kde(residuals: Vec<f64>, bandwidth: f64) -> Result<Self> {
        let model = NoiseModel {
            kind: NoiseKind::EmpiricalKde {
                residuals,
                bandwidth,
            },
            location: 0.0,
        };
        model.validate()?;
        Ok(model)
    }

    pub fn with_location(mut self, location: f64) -> Result<Self> {
        if !location.is_finite() {
            return Err(Error::InvalidParameter(format!("location must be finite, got {location}")));
        }
        self.location = location;
        Ok(self)
    }

    fn validate(&self) -> Result<()> {
        if !self.location.is_finite() {
            return Err(Error::InvalidParameter("location must be finite".into()));
        }
        match &self.kind {
            NoiseKind::Normal { sigma } => check_scale("sigma", *sigma),
            NoiseKind::Laplace { lambda } => check_scale("lambda", *lambda),
            NoiseKind::EmpiricalKde {
                residuals,
                bandwidth,
            } => {
                check_scale("bandwidth", *bandwidth)?;
                if residuals.len() < 2 {
                    return Err(Error::InvalidParameter(format!(
                        "kde needs at least 2 residuals, got {}",
                        residuals.len()
                    )));
                }
                if residuals.iter().any(|r| !r.is_finite()) {
                    return Err(Error::InvalidParameter("kde residuals must be finite".into()));
                }
                Ok(())
            }
        }
    }

    pub fn kind(&self) -> &NoiseKind {
        &self.kind
    }

    pub fn location(&self) -> f64 {
        self.location
    }

    pub fn cdf(&self, t: f64) -> f64 {
        let x = t - self.location;
        match &self.kind {
            NoiseKind::Normal { sigma } => normal_cdf(x / sigma),
            NoiseKind::Laplace { lambda } => laplace_cdf(x / lambda),
            NoiseKind::EmpiricalKde {
                residuals,
                bandwidth,
            } => {
                let s: f64 = residuals.iter().map(|r| normal_cdf((x - r) / bandwidth)).sum();
                s / residuals.len() as f64
            }
        }
    }

    pub fn pdf(&self, t: f64) -> f64 {
        let x = t - self.location;
        match &self.kind {
            NoiseKind::Normal { sigma } => normal_pdf(x / sigma) / sigma,
            NoiseKind::Laplace { lambda } => 0.5 * (-(x / lambda).abs()).exp() / lambda,
            NoiseKind::EmpiricalKde {
                residuals,
                bandwidth,
            } => {
                let s: f64 = residuals.iter().map(|r| normal_pdf((x - r) / bandwidth)).sum();
                s / (residuals.len() as f64 * bandwidth)
            }
        }
    }

    pub fn mean(&self) -> f64 {
        match &self.kind {
            NoiseKind::EmpiricalKde { residuals, .. } => self.location + mean(residuals),
            _ => self.location,
        }
    }

    /// Variance of the law. For a kernel estimate this is the spread of the
    /// residual atoms (divisor `n`) plus the squared bandwidth, which is the
    /// exact variance of the Gaussian mixture.
    pub fn variance(&self) -> f64 {
        match &self.kind {
            NoiseKind::Normal { sigma } => sigma * sigma,
            NoiseKind::Laplace { lambda } => 2.0 * lambda * lambda,
            NoiseKind::EmpiricalKde {
                residuals,
                bandwidth,
            } => {
                let m = mean(residuals);
                let ss: f64 = residuals.iter().map(|r| (r - m) * (r - m)).sum();
                ss / residuals.len() as f64 + bandwidth * bandwidth
            }
        }
    }

    pub fn sd(&self) -> f64 {
        self.variance().sqrt()
    }

    /// Centre of symmetry, when the law is symmetric by construction.
    pub fn symmetry_center(&self) -> Option<f64> {
        match self.kind {
            NoiseKind::Normal { .. } | NoiseKind::Laplace { .. } => Some(self.location),
            NoiseKind::EmpiricalKde { .. } => None,
        }
    }

    /// Interval `(lo, hi)` outside of which the CDF is 0 or 1 up to 1e-17.
    pub fn effective_support(&self) -> (f64, f64) {
        let (lo, hi) = match &self.kind {
            NoiseKind::Normal { sigma } => (-NORMAL_TAIL * sigma, NORMAL_TAIL * sigma),
            NoiseKind::Laplace { lambda } => (-LAPLACE_TAIL * lambda, LAPLACE_TAIL * lambda),
            NoiseKind::EmpiricalKde {
                residuals,
                bandwidth,
            } => {
                let (mn, mx) = min_max(residuals);
                (mn - NORMAL_TAIL * bandwidth, mx + NORMAL_TAIL * bandwidth)
            }
        };
        (lo + self.location, hi + self.location)
    }

    pub fn sample<R: Rng + ?Sized>(&self, count: usize, rng: &mut R) -> Vec<f64> {
        (0..count).map(|_| self.draw(rng)).collect()
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let x = match &self.kind {
            NoiseKind::Normal { sigma } => {
                let z: f64 = StandardNormal.sample(rng);
                sigma * z
            }
            NoiseKind::Laplace { lambda } => {
                // Inverse CDF on u in (-1/2, 1/2].
                let u: f64 = rng.random::<f64>() - 0.5;
                -lambda * u.signum() * (1.0 - 2.0 * u.abs()).ln()
            }
            NoiseKind::EmpiricalKde {
                residuals,
                bandwidth,
            } => {
                let k = rng.random_range(0..residuals.len());
                let z: f64 = StandardNormal.sample(rng);
                residuals[k] + bandwidth * z
            }
        };
        x + self.location
    }
}

#[inline]
pub(crate) fn laplace_cdf(u: f64) -> f64 {
    if u < 0.0 {
        0.5 * u.exp()
    } else {
        1.0 - 0.5 * (-u).exp()
    }
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn min_max(v: &[f64]) -> (f64, f64) {
    v.iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)))
}

/// Bandwidth selector for [`fit_kde_noise`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BandwidthRule {
    /// `1.06 · sd · n^(-1/5)`.
    #[default]
    Silverman,
    /// Solve-the-equation plug-in selector of Sheather and Jones.
    SheatherJones,
    Fixed(f64),
}

impl fmt::Display for BandwidthRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BandwidthRule::Silverman => f.write_str("silverman"),
            BandwidthRule::SheatherJones => f.write_str("sj"),
            BandwidthRule::Fixed(h) => write!(f, "{h}"),
        }
    }
}

impl FromStr for BandwidthRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "silverman" | "nrd" => Ok(BandwidthRule::Silverman),
            "sj" | "sheather_jones" | "sheather-jones" => Ok(BandwidthRule::SheatherJones),
            other => other
                .parse::<f64>()
                .ok()
                .filter(|h| h.is_finite() && *h > 0.0)
                .map(BandwidthRule::Fixed)
                .ok_or_else(|| Error::InvalidParameter(format!("unknown bandwidth rule `{s}`"))),
        }
    }
}

/// Build a Gaussian-kernel noise model from (typically OLS) residuals.
pub fn fit_kde_noise(residuals: &[f64], rule: BandwidthRule) -> Result<NoiseModel> {
    if residuals.len() < 2 {
        return Err(Error::InsufficientRows {
            needed: 2,
            found: residuals.len(),
        });
    }
    if residuals.iter().any(|r| !r.is_finite()) {
        return Err(Error::InvalidParameter("residuals must be finite".into()));
    }
    let (mn, mx) = min_max(residuals);
    if mn == mx {
        return Err(Error::DegenerateInput("all residuals are identical".into()));
    }
    let h = match rule {
        BandwidthRule::Silverman => silverman_bandwidth(residuals),
        BandwidthRule::SheatherJones => sheather_jones_bandwidth(residuals)?,
        BandwidthRule::Fixed(h) => h,
    };
    if !(h.is_finite() && h > 0.0) {
        return Err(Error::DegenerateInput(format!("bandwidth rule produced {h}")));
    }
    NoiseModel::kde(residuals.to_vec(), h)
}

fn sample_sd(x: &[f64]) -> f64 {
    let m = mean(x);
    let ss: f64 = x.iter().map(|v| (v - m) * (v - m)).sum();
    (ss / (x.len() as f64 - 1.0)).sqrt()
}

pub fn silverman_bandwidth(x: &[f64]) -> f64 {
    1.06 * sample_sd(x) * (x.len() as f64).powf(-0.2)
}

/// Type-7 sample quantile of sorted data.
fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Sheather–Jones "solve-the-equation" bandwidth with exact (unbinned)
/// pairwise functional estimates. The root is bracketed and bisected to a
/// bandwidth tolerance of 1e-6.
pub fn sheather_jones_bandwidth(x: &[f64]) -> Result<f64> {
    let n = x.len();
    let nf = n as f64;
    let mut sorted = x.to_vec();
    sorted.sort_by(f64::total_cmp);
    let iqr = quantile_sorted(&sorted, 0.75) - quantile_sorted(&sorted, 0.25);
    let sd = sample_sd(x);
    let scale = if iqr > 0.0 { sd.min(iqr / 1.349) } else { sd };
    if !(scale > 0.0) {
        return Err(Error::DegenerateInput("zero spread in residuals".into()));
    }

    // Sums over pairs i<j of a kernel derivative evaluated at (x_i - x_j)/h.
    let pair_sum = |h: f64, poly: &dyn Fn(f64) -> f64| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                let u = (x[i] - x[j]) / h;
                let d = u * u;
                if d < 1000.0 {
                    s += (-0.5 * d).exp() * poly(d);
                }
            }
        }
        s
    };
    let norm = |h: f64, pow: i32| nf * (nf - 1.0) * h.powi(pow) * (2.0 * PI).sqrt();
    let phi4 = |h: f64| (2.0 * pair_sum(h, &|d| d * d - 6.0 * d + 3.0) + 3.0 * nf) / norm(h, 5);
    let phi6 = |h: f64| {
        (2.0 * pair_sum(h, &|d| d * d * d - 15.0 * d * d + 45.0 * d - 15.0) - 15.0 * nf)
            / norm(h, 7)
    };

    let a = 1.24 * scale * nf.powf(-1.0 / 7.0);
    let b = 1.23 * scale * nf.powf(-1.0 / 9.0);
    let c1 = 1.0 / (2.0 * PI.sqrt() * nf);
    let td = -phi6(b);
    if !(td.is_finite() && td > 0.0) {
        return Err(Error::DegenerateInput("sample too sparse for Sheather-Jones".into()));
    }
    let alpha2 = 1.357 * (phi4(a) / td).powf(1.0 / 7.0);
    if !alpha2.is_finite() {
        return Err(Error::DegenerateInput("sample too sparse for Sheather-Jones".into()));
    }
    let f = |h: f64| (c1 / phi4(alpha2 * h.powf(5.0 / 7.0))).powf(0.2) - h;

    let hmax = 1.144 * scale * nf.powf(-0.2);
    let (mut lo, mut hi) = (0.1 * hmax, hmax);
    let (mut flo, mut fhi) = (f(lo), f(hi));
    let mut tries = 1;
    while !(flo * fhi <= 0.0) {
        if tries > 99 || !(flo.is_finite() || fhi.is_finite()) {
            return Err(Error::Numerical("Sheather-Jones equation has no root in range".into()));
        }
        if tries % 2 == 1 {
            hi *= 1.2;
            fhi = f(hi);
        } else {
            lo /= 1.2;
            flo = f(lo);
        }
        tries += 1;
    }
    while hi - lo > 1e-6 {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        if fm.is_nan() {
            return Err(Error::Numerical("Sheather-Jones equation evaluated to NaN".into()));
        }
        if (fm <= 0.0) == (flo <= 0.0) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}
