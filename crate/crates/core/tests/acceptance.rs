//! Acceptance suite. Runs every criterion at its stated size and tolerance,
//! prints one PASS/FAIL line per criterion and exits non-zero on failure.
//!
//! Run alone with `cargo test --release --test acceptance`.

mod common;

use std::time::Instant;

use dlse::inference::{run_monte_carlo, ColumnLaw, MonteCarloOptions, MonteCarloReport, Scenario};
use dlse::rng::stream;
use dlse::{
    beta_dagger, beta_tilde, ecdf_at_sample, fit_dlse, objective_value, sigma_norm, FitConfig, NoiseModel, Objective,
    ObjectiveSpec, SigmaEstimate,
};
use nalgebra::DMatrix;
use rand::Rng;

const SEED: u64 = 20_240_601;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: String) -> Verdict {
    Verdict { pass, detail }
}

fn monte_carlo(name: &str, n: usize, reps: usize, seed: u64) -> MonteCarloReport {
    let s = Scenario::builtin(name).unwrap().with_n(n);
    let opts = MonteCarloOptions {
        replications: reps,
        seed,
        ..MonteCarloOptions::default()
    };
    run_monte_carlo(&s, &opts).unwrap()
}

fn fitted(rep: &MonteCarloReport) -> Vec<&dlse::inference::MonteCarloRow> {
    rep.rows.iter().filter(|r| r.beta_hat.is_some()).collect()
}

fn criterion_1() -> Verdict {
    let mut worst = 0.0f64;
    for k in 0..100 {
        let inst = common::random_instance(SEED, k);
        let got = objective_value(&inst.beta, &inst.sample(), &inst.noise.model(), ObjectiveSpec::full(inst.p)).unwrap();
        let want = common::naive_objective(&inst.beta, &inst.ys, &inst.rows, &inst.noise, inst.p);
        worst = worst.max((got - want).abs());
    }
    verdict(worst <= 1e-12, format!("100 instances, max |diff| = {worst:.3e} (tol 1e-12)"))
}

fn criterion_2() -> Verdict {
    let noise = NoiseModel::normal(1.0).unwrap();
    let mut worst = 0.0f64;
    for k in 0..20u64 {
        let mut r = stream(SEED, "grid-instance", k);
        let beta0 = r.random_range(-3.0..3.0);
        let design = Scenario {
            name: "grid".into(),
            columns: vec![ColumnLaw::Exponential { rate: 1.0 }],
            beta0: vec![beta0],
            noise: noise.clone(),
            n: 1000,
            matched: None,
        };
        let data = design.generate(SEED, k).unwrap();
        let fit = fit_dlse(&data, &noise, &FitConfig::default().with_seed(k)).unwrap();
        let obj = Objective::new(&data, &noise, ObjectiveSpec::full(2)).unwrap();
        let grid = (0..=800)
            .map(|i| -4.0 + 0.01 * f64::from(i))
            .map(|b| (obj.value(&[b]), b))
            .fold((f64::INFINITY, 0.0), |a, c| if c.0 < a.0 { c } else { a })
            .1;
        worst = worst.max((fit.beta_hat[0] - grid).abs());
    }
    verdict(worst <= 0.02, format!("20 instances, max |fit - grid argmin| = {worst:.4} (tol 0.02)"))
}

fn criteria_3_and_7(ex1: &MonteCarloReport) -> (Verdict, Verdict) {
    let rows = fitted(ex1);
    let first: Vec<&Vec<f64>> = rows.iter().take(50).filter_map(|r| r.beta_hat.as_ref()).collect();
    let k = first.len() as f64;
    let beta0 = [1.0, 2.0];
    let mean: Vec<f64> = (0..2).map(|j| first.iter().map(|b| b[j]).sum::<f64>() / k).collect();
    let mae: Vec<f64> = (0..2)
        .map(|j| first.iter().map(|b| (b[j] - beta0[j]).abs()).sum::<f64>() / k)
        .collect();
    let pass3 = first.len() == 50
        && (0..2).all(|j| (mean[j] - beta0[j]).abs() <= 0.08 && mae[j] <= 0.12);
    let c3 = verdict(
        pass3,
        format!(
            "n=2000, {} reps: means ({:.4}, {:.4}) (tol ±0.08), MAE ({:.4}, {:.4}) (tol 0.12)",
            first.len(),
            mean[0],
            mean[1],
            mae[0],
            mae[1]
        ),
    );
    let summary = ex1.summary.as_ref().unwrap();
    let qq: Vec<f64> = summary
        .qq
        .as_ref()
        .map(|v| v.iter().map(|q| q.correlation).collect())
        .unwrap_or_default();
    let pass7 = summary.fits == 100 && qq.len() == 2 && qq.iter().all(|c| *c >= 0.97);
    let c7 = verdict(
        pass7,
        format!("n=2000, {} reps: qq correlations {:?} (min 0.97)", summary.fits, rounded(&qq)),
    );
    (c3, c7)
}

fn rounded(v: &[f64]) -> Vec<f64> {
    v.iter().map(|x| (x * 1e4).round() / 1e4).collect()
}

fn criterion_4() -> Verdict {
    let rep = monte_carlo("ex2", 2000, 50, SEED + 4);
    let s = rep.summary.unwrap();
    let pass = s.fits == 50 && (4.6..=5.4).contains(&s.sq_norm_mean);
    verdict(
        pass,
        format!(
            "n=2000, {} reps: mean |beta|^2 = {:.4} (sd {:.4}), range [4.6, 5.4]",
            s.fits, s.sq_norm_mean, s.sq_norm_sd
        ),
    )
}

fn criterion_5() -> Verdict {
    let rep = monte_carlo("ex3", 4000, 30, SEED + 5);
    let s = rep.summary.unwrap();
    let target = [-1.0, 1.0, 2.0];
    let pass = s.fits == 30 && s.ordered_mean.iter().zip(&target).all(|(m, t)| (m - t).abs() <= 0.15);
    verdict(
        pass,
        format!(
            "n=4000, {} reps: ordered means {:?} vs [-1, 1, 2] (tol ±0.15)",
            s.fits,
            rounded(&s.ordered_mean)
        ),
    )
}

fn criterion_6(ex1: &MonteCarloReport) -> Verdict {
    let big: Vec<f64> = fitted(ex1)
        .iter()
        .take(30)
        .filter_map(|r| r.objective)
        .map(|d| 2000.0 * d)
        .collect();
    let small_rep = monte_carlo("ex1", 500, 30, SEED + 6);
    let small: Vec<f64> = fitted(&small_rep).iter().filter_map(|r| r.objective).map(|d| 500.0 * d).collect();
    let med = |v: &[f64]| {
        let mut s = v.to_vec();
        s.sort_by(f64::total_cmp);
        let k = s.len();
        if k % 2 == 1 {
            s[k / 2]
        } else {
            0.5 * (s[k / 2 - 1] + s[k / 2])
        }
    };
    let (m_big, m_small) = (med(&big), med(&small));
    let pass = big.len() == 30 && small.len() == 30 && m_big <= 3.0 * m_small;
    verdict(
        pass,
        format!(
            "median n*D: {m_big:.4} at n=2000 vs {m_small:.4} at n=500, ratio {:.3} (max 3)",
            m_big / m_small
        ),
    )
}

fn criterion_8() -> Verdict {
    let s = Scenario::builtin("ex4").unwrap().with_n(4000).with_matched(Some(10));
    let opts = MonteCarloOptions {
        replications: 50,
        seed: SEED + 8,
        run_dlse: false,
        semi: true,
        ..MonteCarloOptions::default()
    };
    let rep = run_monte_carlo(&s, &opts).unwrap();
    let semi = rep.semi.unwrap();
    let pass = semi.tilde_risk < semi.ols_risk && semi.tilde_sq_norm_sd <= 0.5 * semi.ols_sq_norm_sd;
    verdict(
        pass,
        format!(
            "m=10, n=4000, 50 reps: risk {:.4} vs OLS {:.4}; sd of squared norm {:.4} vs OLS {:.4}; \
             beta_tilde better in {}/50 (sign test p = {:.2e})",
            semi.tilde_risk, semi.ols_risk, semi.tilde_sq_norm_sd, semi.ols_sq_norm_sd, semi.tilde_wins, semi.sign_test_p
        ),
    )
}

fn criterion_9() -> Verdict {
    let mut failures: Vec<String> = Vec::new();
    let mut r = stream(SEED, "properties", 0);

    // ECDF with ties.
    for case in 0..200 {
        let n = r.random_range(1..50usize);
        let v: Vec<f64> = (0..n).map(|_| f64::from(r.random_range(-5..5i32))).collect();
        let f = ecdf_at_sample(&v);
        for (x, fx) in v.iter().zip(&f) {
            let want = v.iter().filter(|y| *y <= x).count() as f64 / n as f64;
            if *fx != want {
                failures.push(format!("ecdf case {case}"));
                break;
            }
        }
    }

    // Σ-norm scaling and direction preservation of the rescaled estimators.
    for case in 0..200 {
        let a = DMatrix::from_fn(3, 3, |_, _| r.random_range(-2.0..2.0));
        let sigma = SigmaEstimate::new(a.transpose() * &a + DMatrix::identity(3, 3) * 0.1).unwrap();
        let beta: Vec<f64> = (0..3).map(|_| r.random_range(-3.0..3.0)).collect();
        let c: f64 = r.random_range(-4.0..4.0);
        let norm = sigma_norm(&beta, &sigma).unwrap();
        let scaled: Vec<f64> = beta.iter().map(|b| c * b).collect();
        if (sigma_norm(&scaled, &sigma).unwrap() - c.abs() * norm).abs() > 1e-12 * (1.0 + norm) {
            failures.push(format!("sigma-norm scaling case {case}"));
        }
        let target: f64 = r.random_range(0.01..10.0);
        for est in [beta_dagger(&beta, target, &sigma).unwrap(), beta_tilde(&beta, target, &sigma).unwrap()] {
            let dot: f64 = est.iter().zip(&beta).map(|(x, y)| x * y).sum();
            let cos = dot / (est.iter().map(|x| x * x).sum::<f64>().sqrt() * beta.iter().map(|x| x * x).sum::<f64>().sqrt());
            if (cos - 1.0).abs() > 1e-10 || (sigma_norm(&est, &sigma).unwrap() - target).abs() > 1e-10 * (1.0 + target) {
                failures.push(format!("direction preservation case {case}"));
            }
        }
    }

    // Determinism under seeds and worker-count independence of output bytes.
    let s = Scenario::builtin("ex1").unwrap().with_n(400);
    let data = s.generate(SEED, 99).unwrap();
    let cfg = FitConfig {
        restarts: 6,
        ..FitConfig::default().with_seed(SEED)
    };
    let bytes = |k: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(k).build().unwrap();
        pool.install(|| dlse::report::to_json(&fit_dlse(&data, &s.noise, &cfg).unwrap()).unwrap())
    };
    let reference = bytes(1);
    if reference != bytes(1) {
        failures.push("fit not deterministic under a fixed seed".into());
    }
    for k in [2, 3, 8] {
        if reference != bytes(k) {
            failures.push(format!("fit output differs with {k} workers"));
        }
    }
    verdict(
        failures.is_empty(),
        if failures.is_empty() {
            "ECDF ties, sigma-norm scaling, direction preservation, seed determinism, worker independence".into()
        } else {
            format!("failures: {}", failures.join("; "))
        },
    )
}

fn main() {
    // Respect `cargo test -- <filter>`: run only when unfiltered or asked for.
    let args: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    if !args.is_empty() && !args.iter().any(|a| "acceptance".contains(a.as_str())) {
        return;
    }
    let start = Instant::now();
    let mut results: Vec<(u32, &str, Verdict)> = Vec::new();
    let mut record = |id: u32, name: &'static str, v: Verdict| {
        println!(
            "[{}] criterion {id} ({name}): {} [{:.0}s]",
            if v.pass { "PASS" } else { "FAIL" },
            v.detail,
            start.elapsed().as_secs_f64()
        );
        results.push((id, name, v));
    };

    record(1, "oracle equivalence", criterion_1());
    record(2, "grid-oracle fit", criterion_2());
    let ex1 = monte_carlo("ex1", 2000, 100, SEED + 3);
    let (c3, c7) = criteria_3_and_7(&ex1);
    record(3, "example 1 scaled", c3);
    record(4, "example 2 scaled", criterion_4());
    record(5, "ordered estimator", criterion_5());
    record(6, "rate check", criterion_6(&ex1));
    record(7, "normality diagnostic", c7);
    record(8, "semi-supervised improvement", criterion_8());
    record(9, "property suites", criterion_9());

    let failed: Vec<u32> = results.iter().filter(|r| !r.2.pass).map(|r| r.0).collect();
    println!(
        "acceptance: {}/{} criteria passed in {:.0}s",
        results.len() - failed.len(),
        results.len(),
        start.elapsed().as_secs_f64()
    );
    if !failed.is_empty() {
        println!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
