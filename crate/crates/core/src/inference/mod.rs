//! Uncertainty quantification (bootstrap) and the Monte Carlo harness for
//! the simulation designs.

mod bootstrap;
mod montecarlo;
mod qq;

pub use bootstrap::{bootstrap_dlse, BootstrapReport, BootstrapRow, Interval, IntervalSet};
pub use montecarlo::{
    run_monte_carlo, ColumnLaw, MonteCarloOptions, MonteCarloReport, MonteCarloRow, MonteCarloSummary, OlsComparison,
    Scenario, SemiRow, SemiSummary,
};
pub use qq::{qq_against_normal, QqDiagnostic};

/// Mean and sample standard deviation (divisor `n − 1`; 0 for one value).
pub(crate) fn mean_sd(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (mean, 0.0);
    }
    let var = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

pub(crate) fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let k = s.len();
    if k % 2 == 1 {
        s[k / 2]
    } else {
        0.5 * (s[k / 2 - 1] + s[k / 2])
    }
}
