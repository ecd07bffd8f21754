//! Writes the bundled synthetic data sets under `data/`:
//!
//! * `ex1_{y,x}.csv` — the normal/exponential design with β0 = (1, 2), n = 2000;
//! * `census_{y,x}.csv` — a discrete one-covariate stand-in for the census
//!   workflow (integer-valued responses and covariates);
//! * `powerplant_{y,x}.csv` plus `powerplant_matched.csv` — a four-covariate
//!   correlated Gaussian design with a matched sample of 10 rows;
//! * `custom_scenario.json` — a custom design for `simulate --scenario-file`.
//!
//! Usage: `cargo run --example generate_data -- [output-dir]`.

use std::path::PathBuf;

use dlse::dataio::{write_covariates, write_matched, write_responses};
use dlse::inference::{ColumnLaw, Scenario};
use dlse::rng::stream;
use dlse::{MatchedSample, NoiseModel};
use nalgebra::DMatrix;
use rand_distr::{Distribution, Poisson, StandardNormal};

fn main() -> dlse::Result<()> {
    let dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "data".into()));
    std::fs::create_dir_all(&dir).map_err(|source| dlse::Error::Io {
        path: dir.display().to_string(),
        source,
    })?;

    let ex1 = Scenario::builtin("ex1")?.with_n(2000).generate(2024, 0)?;
    write_responses(&dir.join("ex1_y.csv"), ex1.ys())?;
    write_covariates(&dir.join("ex1_x.csv"), ex1.xs())?;

    // Discrete stand-in: counts regressed with slope 1.27, responses rounded.
    let n = 1500;
    let pois = Poisson::new(6.0).unwrap();
    let noise = NoiseModel::normal(0.2)?;
    let mut rx = stream(7, "census-x", 0);
    let mut ry = stream(7, "census-y", 0);
    let xs = DMatrix::from_fn(n, 1, |_, _| pois.sample(&mut rx));
    let ys: Vec<f64> = (0..n)
        .map(|_| (1.27 * pois.sample(&mut ry) + noise.draw(&mut ry)).round())
        .collect();
    write_responses(&dir.join("census_y.csv"), &ys)?;
    write_covariates(&dir.join("census_x.csv"), &xs)?;

    // Correlated Gaussian covariates X = A Z; responses with noise sd 0.3.
    let a = DMatrix::from_row_slice(4, 4, &[
        1.0, 0.0, 0.0, 0.0,
        0.6, 0.8, 0.0, 0.0,
        -0.3, 0.2, 0.9, 0.0,
        0.4, -0.1, 0.3, 0.85,
    ]);
    let beta = [0.55, -0.35, 0.2, 0.5];
    let noise = NoiseModel::normal(0.3)?;
    let draw = |r: &mut dlse::rng::StreamRng| -> Vec<f64> {
        let z: Vec<f64> = (0..4).map(|_| StandardNormal.sample(r)).collect();
        (0..4).map(|i| (0..4).map(|j| a[(i, j)] * z[j]).sum()).collect()
    };
    let row = |x: &[f64], r: &mut dlse::rng::StreamRng| -> f64 {
        x.iter().zip(&beta).map(|(p, q)| p * q).sum::<f64>() + noise.draw(r)
    };
    let n = 4000;
    let mut rx = stream(11, "plant-x", 0);
    let mut ry = stream(11, "plant-y", 0);
    let mut rm = stream(11, "plant-matched", 0);
    let mut xs = DMatrix::zeros(n, 4);
    for i in 0..n {
        for (j, v) in draw(&mut rx).into_iter().enumerate() {
            xs[(i, j)] = v;
        }
    }
    let ys: Vec<f64> = (0..n)
        .map(|_| {
            let x = draw(&mut ry);
            row(&x, &mut ry)
        })
        .collect();
    write_responses(&dir.join("powerplant_y.csv"), &ys)?;
    write_covariates(&dir.join("powerplant_x.csv"), &xs)?;
    let m = 10;
    let mut mx = DMatrix::zeros(m, 4);
    let mut my = Vec::with_capacity(m);
    for i in 0..m {
        let x = draw(&mut rm);
        my.push(row(&x, &mut rm));
        for (j, v) in x.into_iter().enumerate() {
            mx[(i, j)] = v;
        }
    }
    write_matched(&dir.join("powerplant_matched.csv"), &MatchedSample::new(my, mx)?)?;

    // Example design file for `simulate --scenario-file`.
    let custom = Scenario {
        name: "custom".into(),
        columns: vec![ColumnLaw::Exponential { rate: 2.0 }],
        beta0: vec![1.0],
        noise: NoiseModel::laplace_with_sd(0.5)?,
        n: 500,
        matched: None,
    };
    std::fs::write(dir.join("custom_scenario.json"), dlse::report::to_json(&custom)?).map_err(|source| {
        dlse::Error::Io {
            path: "custom_scenario.json".into(),
            source,
        }
    })?;
    Ok(())
}
