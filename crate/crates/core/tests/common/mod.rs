//! Shared helpers for the integration tests: an independent brute-force
//! criterion and random instance generation.

#![allow(dead_code)]

use dlse::rng::{stream, StreamRng};
use dlse::{NoiseModel, UnmatchedSample};
use rand::Rng;

/// Noise law described independently of the library's implementation.
#[derive(Debug, Clone)]
pub enum NoiseDesc {
    Normal { sigma: f64, loc: f64 },
    Laplace { lambda: f64, loc: f64 },
    Kde { residuals: Vec<f64>, h: f64, loc: f64 },
}

fn phi(x: f64) -> f64 {
    // erf rather than erfc: a different code path from the library's CDF.
    0.5 * (1.0 + libm::erf(x / std::f64::consts::SQRT_2))
}

impl NoiseDesc {
    pub fn cdf(&self, t: f64) -> f64 {
        match self {
            NoiseDesc::Normal { sigma, loc } => phi((t - loc) / sigma),
            NoiseDesc::Laplace { lambda, loc } => {
                let u = (t - loc) / lambda;
                if u < 0.0 {
                    0.5 * u.exp()
                } else {
                    1.0 - 0.5 * (-u).exp()
                }
            }
            NoiseDesc::Kde { residuals, h, loc } => {
                residuals.iter().map(|r| phi((t - loc - r) / h)).sum::<f64>() / residuals.len() as f64
            }
        }
    }

    pub fn model(&self) -> NoiseModel {
        match self {
            NoiseDesc::Normal { sigma, loc } => NoiseModel::normal(*sigma).unwrap().with_location(*loc).unwrap(),
            NoiseDesc::Laplace { lambda, loc } => NoiseModel::laplace(*lambda).unwrap().with_location(*loc).unwrap(),
            NoiseDesc::Kde { residuals, h, loc } => NoiseModel::kde(residuals.clone(), *h)
                .unwrap()
                .with_location(*loc)
                .unwrap(),
        }
    }
}

/// `(1/n_Y) Σ_j |#{k: Y_k ≤ Y_j}/n_Y − (1/n_X) Σ_i F(Y_j − βᵀX_i)|^p` by two
/// plain loops.
pub fn naive_objective(beta: &[f64], ys: &[f64], xs: &[Vec<f64>], noise: &NoiseDesc, p: u32) -> f64 {
    let ny = ys.len() as f64;
    let nx = xs.len() as f64;
    let mut total = 0.0;
    for &y in ys {
        let ecdf = ys.iter().filter(|&&v| v <= y).count() as f64 / ny;
        let mut conv = 0.0;
        for x in xs {
            let proj: f64 = beta.iter().zip(x).map(|(b, v)| b * v).sum();
            conv += noise.cdf(y - proj);
        }
        total += (ecdf - conv / nx).abs().powi(p as i32);
    }
    total / ny
}

pub struct Instance {
    pub ys: Vec<f64>,
    pub rows: Vec<Vec<f64>>,
    pub beta: Vec<f64>,
    pub noise: NoiseDesc,
    pub p: u32,
}

impl Instance {
    pub fn sample(&self) -> UnmatchedSample {
        UnmatchedSample::from_rows(self.ys.clone(), &self.rows).unwrap()
    }
}

fn uniform(r: &mut StreamRng, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * r.random::<f64>()
}

/// Random instance `k`: sizes up to 64, dimension up to 3, p in {1, 2},
/// noise kind cycling through normal, Laplace and KDE. Every fourth
/// instance rounds the responses so that the ECDF has ties.
pub fn random_instance(seed: u64, k: u64) -> Instance {
    let mut r = stream(seed, "oracle-instance", k);
    let d = r.random_range(1..=3usize);
    let ny = r.random_range(2..=64usize);
    let nx = r.random_range(2..=64usize);
    let loc = if k.is_multiple_of(5) { uniform(&mut r, -0.5, 0.5) } else { 0.0 };
    let noise = match k % 3 {
        0 => NoiseDesc::Normal {
            sigma: uniform(&mut r, 0.05, 3.0),
            loc,
        },
        1 => NoiseDesc::Laplace {
            lambda: uniform(&mut r, 0.05, 2.0),
            loc,
        },
        _ => {
            let m = r.random_range(2..=12usize);
            NoiseDesc::Kde {
                residuals: (0..m).map(|_| uniform(&mut r, -2.0, 2.0)).collect(),
                h: uniform(&mut r, 0.05, 1.0),
                loc,
            }
        }
    };
    let rows: Vec<Vec<f64>> = (0..nx)
        .map(|_| (0..d).map(|_| uniform(&mut r, -3.0, 3.0)).collect())
        .collect();
    let mut ys: Vec<f64> = (0..ny).map(|_| uniform(&mut r, -6.0, 6.0)).collect();
    if k.is_multiple_of(4) {
        ys.iter_mut().for_each(|y| *y = y.round());
    }
    let beta = (0..d).map(|_| uniform(&mut r, -2.5, 2.5)).collect();
    let p = if k.is_multiple_of(2) { 2 } else { 1 };
    Instance { ys, rows, beta, noise, p }
}
