use serde::Serialize;

use crate::error::{Error, Result};
use crate::special::normal_quantile;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QqDiagnostic {
    /// `(normal quantile, standardized order statistic)` pairs.
    pub pairs: Vec<(f64, f64)>,
    pub correlation: f64,
}

/// Normal QQ pairs at plotting positions `(i − 0.5)/n` and their Pearson
/// correlation.
pub fn qq_against_normal(values: &[f64]) -> Result<QqDiagnostic> {
    let n = values.len();
    if n < 10 {
        return Err(Error::InsufficientRows { needed: 10, found: n });
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter("qq values must be finite".into()));
    }
    let (mean, sd) = super::mean_sd(values);
    if !(sd > 0.0) {
        return Err(Error::DegenerateInput("all values are equal; qq correlation undefined".into()));
    }
    let mut z: Vec<f64> = values.iter().map(|v| (v - mean) / sd).collect();
    z.sort_by(f64::total_cmp);
    let nf = n as f64;
    let q: Vec<f64> = (0..n).map(|i| normal_quantile((i as f64 + 0.5) / nf)).collect();
    let correlation = pearson(&q, &z).clamp(-1.0, 1.0);
    Ok(QqDiagnostic {
        pairs: q.into_iter().zip(z).collect(),
        correlation,
    })
}

fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let (ma, _) = super::mean_sd(a);
    let (mb, _) = super::mean_sd(b);
    let mut sab = 0.0;
    let mut saa = 0.0;
    let mut sbb = 0.0;
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    sab / (saa * sbb).sqrt()
}
