use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::dlse::{fit_dlse, ordered, FitConfig, FitResult};
use crate::empirical::UnmatchedSample;
use crate::error::{Error, Result};
use crate::noise::NoiseModel;
use crate::report::fmt_f64;
use crate::rng;
use crate::special::normal_quantile;

/// Largest tolerated fraction of failed resamples.
const MAX_FAILED_FRACTION: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Interval {
    pub lower: f64,
    pub upper: f64,
}

/// Percentile and normal-approximation intervals for one scalar functional.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IntervalSet {
    pub percentile: Interval,
    pub normal: Interval,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BootstrapRow {
    pub index: usize,
    /// `None` when the refit failed outright.
    pub beta: Option<Vec<f64>>,
    pub sigma_norm: Option<f64>,
    pub objective: Option<f64>,
    pub converged: bool,
    pub multimodal: bool,
    pub error: Option<String>,
}

impl BootstrapRow {
    fn usable(&self) -> bool {
        self.beta.is_some() && self.converged
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BootstrapReport {
    pub resamples: usize,
    pub alpha: f64,
    pub seed: u64,
    /// Fit on the original data.
    pub estimate: FitResult,
    pub rows: Vec<BootstrapRow>,
    pub failed: usize,
    pub coordinates: Vec<IntervalSet>,
    pub ordered_coordinates: Vec<IntervalSet>,
    pub sigma_norm: IntervalSet,
    pub warnings: Vec<String>,
}

impl BootstrapReport {
    /// `B × d` matrix of usable per-resample estimates, in resample order.
    pub fn estimates(&self) -> Vec<Vec<f64>> {
        self.rows
            .iter()
            .filter(|r| r.usable())
            .filter_map(|r| r.beta.clone())
            .collect()
    }

    /// Intervals recomputed at another level from the same resamples:
    /// `(coordinates, ordered coordinates, Σ̂-norm)`.
    pub fn intervals_at(&self, alpha: f64) -> Result<(Vec<IntervalSet>, Vec<IntervalSet>, IntervalSet)> {
        check_alpha(alpha)?;
        Ok(summarise(&self.rows, self.estimate.beta_hat.len(), alpha))
    }

    /// One line per resample: `index,status,beta1..betad,sigma_norm,objective`.
    pub fn to_csv(&self) -> String {
        let d = self.estimate.beta_hat.len();
        let betas: Vec<String> = (1..=d).map(|j| format!("beta{j}")).collect();
        let mut s = format!("index,status,{},sigma_norm,objective\n", betas.join(","));
        for r in &self.rows {
            let status = if r.error.is_some() {
                "failed"
            } else if !r.converged {
                "not_converged"
            } else {
                "ok"
            };
            let cells = match &r.beta {
                Some(b) => b.iter().map(|v| fmt_f64(*v)).collect(),
                None => vec![String::new(); d],
            };
            s.push_str(&format!(
                "{},{status},{},{},{}\n",
                r.index,
                cells.join(","),
                r.sigma_norm.map(fmt_f64).unwrap_or_default(),
                r.objective.map(fmt_f64).unwrap_or_default(),
            ));
        }
        s
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("alpha must lie in (0, 1), got {alpha}")))
    }
}

/// Percentile interval from order statistics: ranks
/// `max(1, ⌊Bα/2⌋)` and `min(B, ⌈B(1 − α/2)⌉)` of the sorted values.
fn percentile_interval(values: &[f64], alpha: f64) -> Interval {
    let mut s = values.to_vec();
    s.sort_by(f64::total_cmp);
    let b = s.len() as f64;
    // Guard the products against representation error, e.g. 20 * 0.25.
    let lo = ((b * alpha / 2.0 + 1e-9).floor() as usize).max(1);
    let hi = ((b * (1.0 - alpha / 2.0) - 1e-9).ceil() as usize).min(s.len());
    Interval {
        lower: s[lo - 1],
        upper: s[hi - 1],
    }
}

fn normal_interval(values: &[f64], alpha: f64) -> Interval {
    let (mean, sd) = super::mean_sd(values);
    let z = normal_quantile(1.0 - alpha / 2.0);
    Interval {
        lower: mean - z * sd,
        upper: mean + z * sd,
    }
}

fn interval_set(values: &[f64], alpha: f64) -> IntervalSet {
    IntervalSet {
        percentile: percentile_interval(values, alpha),
        normal: normal_interval(values, alpha),
    }
}

fn summarise(rows: &[BootstrapRow], d: usize, alpha: f64) -> (Vec<IntervalSet>, Vec<IntervalSet>, IntervalSet) {
    let good: Vec<&BootstrapRow> = rows.iter().filter(|r| r.usable()).collect();
    let betas: Vec<&Vec<f64>> = good.iter().filter_map(|r| r.beta.as_ref()).collect();
    let sorted: Vec<Vec<f64>> = betas.iter().map(|b| ordered(b)).collect();
    let column = |k: usize| -> Vec<f64> { betas.iter().map(|b| b[k]).collect() };
    let ordered_column = |k: usize| -> Vec<f64> { sorted.iter().map(|b| b[k]).collect() };
    let norms: Vec<f64> = good.iter().filter_map(|r| r.sigma_norm).collect();
    (
        (0..d).map(|k| interval_set(&column(k), alpha)).collect(),
        (0..d).map(|k| interval_set(&ordered_column(k), alpha)).collect(),
        interval_set(&norms, alpha),
    )
}

fn resample<R: Rng + ?Sized>(data: &UnmatchedSample, rng: &mut R) -> Result<UnmatchedSample> {
    let ys = data.ys();
    let xs = data.xs();
    let new_ys: Vec<f64> = (0..ys.len()).map(|_| ys[rng.random_range(0..ys.len())]).collect();
    let rows: Vec<usize> = (0..xs.nrows()).map(|_| rng.random_range(0..xs.nrows())).collect();
    let new_xs = xs.select_rows(rows.iter());
    UnmatchedSample::new(new_ys, new_xs)
}

/// Nonparametric bootstrap of the estimator.
///
/// `Y` and `X` are resampled independently with replacement, which keeps the
/// resamples unmatched. Resample `b` uses streams derived from `(seed, b)`,
/// so the report depends only on `seed`. Failed or non-converged refits are
/// kept as flagged rows and excluded from the intervals; more than 20%
/// of them is an error.
pub fn bootstrap_dlse(
    data: &UnmatchedSample,
    noise: &NoiseModel,
    config: &FitConfig,
    resamples: usize,
    alpha: f64,
    seed: u64,
) -> Result<BootstrapReport> {
    if resamples < 20 {
        return Err(Error::InvalidParameter(format!("B must be >= 20, got {resamples}")));
    }
    check_alpha(alpha)?;
    let estimate = fit_dlse(data, noise, config)?;

    let rows: Vec<BootstrapRow> = (0..resamples)
        .into_par_iter()
        .map(|b| {
            let mut r = rng::stream(seed, "bootstrap-resample", b as u64);
            let cfg = config.clone().with_seed(rng::derive_seed(seed, "bootstrap-fit", b as u64));
            match resample(data, &mut r).and_then(|boot| fit_dlse(&boot, noise, &cfg)) {
                Ok(fit) => BootstrapRow {
                    index: b,
                    multimodal: fit.is_multimodal(),
                    sigma_norm: Some(fit.sigma_norm_hat),
                    objective: Some(fit.objective),
                    converged: fit.converged,
                    beta: Some(fit.beta_hat),
                    error: None,
                },
                Err(e) => BootstrapRow {
                    index: b,
                    beta: None,
                    sigma_norm: None,
                    objective: None,
                    converged: false,
                    multimodal: false,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect();

    let failed = rows.iter().filter(|r| !r.usable()).count();
    if failed as f64 > MAX_FAILED_FRACTION * resamples as f64 {
        return Err(Error::Numerical(format!(
            "{failed} of {resamples} bootstrap refits failed or did not converge"
        )));
    }
    let mut warnings = estimate.warnings.clone();
    if failed > 0 {
        warnings.push(format!("{failed} resamples excluded from the intervals"));
    }
    if estimate.is_multimodal() || rows.iter().any(|r| r.multimodal) {
        warnings.push(
            "restarts reached distinct near-optimal points; coordinate intervals may mix \
             equivalent solutions, prefer the norm and ordered-coordinate intervals"
                .into(),
        );
    }
    let (coordinates, ordered_coordinates, sigma_norm) = summarise(&rows, data.dim(), alpha);
    Ok(BootstrapReport {
        resamples,
        alpha,
        seed,
        estimate,
        rows,
        failed,
        coordinates,
        ordered_coordinates,
        sigma_norm,
        warnings,
    })
}
