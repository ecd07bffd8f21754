use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Distribution, Exp, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dlse::{fit_dlse, ordered, FitConfig};
use crate::empirical::{empirical_covariance, sigma_norm, MatchedSample, UnmatchedSample};
use crate::error::{Error, Result};
use crate::noise::NoiseModel;
use crate::report::fmt_f64;
use crate::rng::{self, StreamRng};
use crate::semisup::{beta_dagger, beta_tilde, ols, variance_norm_estimate};

use super::{mean_sd, median, qq_against_normal, QqDiagnostic};

/// Law of one covariate column; columns are independent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case")]
pub enum ColumnLaw {
    Normal { mean: f64, sd: f64 },
    Exponential { rate: f64 },
}

impl ColumnLaw {
    fn validate(&self) -> Result<()> {
        let ok = match *self {
            ColumnLaw::Normal { mean, sd } => mean.is_finite() && sd.is_finite() && sd > 0.0,
            ColumnLaw::Exponential { rate } => rate.is_finite() && rate > 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!("invalid covariate law {self:?}")))
        }
    }

    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            ColumnLaw::Normal { mean, sd } => Normal::new(mean, sd).expect("validated").sample(rng),
            ColumnLaw::Exponential { rate } => Exp::new(rate).expect("validated").sample(rng),
        }
    }
}

/// A simulation design: covariate law, true coefficients, noise and sizes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub name: String,
    pub columns: Vec<ColumnLaw>,
    pub beta0: Vec<f64>,
    pub noise: NoiseModel,
    /// Size of both unmatched samples.
    pub n: usize,
    /// Size of the matched sample for the semi-supervised estimators.
    #[serde(default)]
    pub matched: Option<usize>,
}

const BUILTIN: [&str; 4] = ["ex1", "ex2", "ex3", "ex4"];

impl Scenario {
    pub fn builtin_names() -> &'static [&'static str] {
        &BUILTIN
    }

    /// The four simulation designs: `ex1` normal/exponential identifiable
    /// design, `ex2` isotropic Gaussian (norm-identified), `ex3` i.i.d.
    /// exponential (permutation-identified), `ex4` Gaussian `d = 3` with a
    /// matched sample of size 10.
    pub fn builtin(name: &str) -> Result<Scenario> {
        let std_normal = ColumnLaw::Normal { mean: 0.0, sd: 1.0 };
        let exp1 = ColumnLaw::Exponential { rate: 1.0 };
        let noise = NoiseModel::normal(1.0)?;
        let s = match name {
            "ex1" => Scenario {
                name: name.into(),
                columns: vec![ColumnLaw::Normal { mean: 1.0, sd: 1.0 }, exp1],
                beta0: vec![1.0, 2.0],
                noise,
                n: 4000,
                matched: None,
            },
            "ex2" => Scenario {
                name: name.into(),
                columns: vec![std_normal; 2],
                beta0: vec![1.0, 2.0],
                noise,
                n: 4000,
                matched: None,
            },
            "ex3" => Scenario {
                name: name.into(),
                columns: vec![exp1; 3],
                beta0: vec![1.0, 2.0, -1.0],
                noise,
                n: 8000,
                matched: None,
            },
            "ex4" => Scenario {
                name: name.into(),
                columns: vec![std_normal; 3],
                beta0: vec![1.0, -1.0, 2.0],
                noise,
                n: 10_000,
                matched: Some(10),
            },
            _ => {
                return Err(Error::InvalidParameter(format!(
                    "unknown scenario `{name}`; valid names: {}",
                    BUILTIN.join(", ")
                )))
            }
        };
        Ok(s)
    }

    pub fn with_n(mut self, n: usize) -> Self {
        self.n = n;
        self
    }

    pub fn with_noise(mut self, noise: NoiseModel) -> Self {
        self.noise = noise;
        self
    }

    pub fn with_matched(mut self, m: Option<usize>) -> Self {
        self.matched = m;
        self
    }

    pub fn dim(&self) -> usize {
        self.columns.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.columns.is_empty() {
            return Err(Error::InvalidParameter("scenario needs at least one covariate".into()));
        }
        if self.beta0.len() != self.columns.len() {
            return Err(Error::DimensionMismatch {
                expected: self.columns.len(),
                found: self.beta0.len(),
            });
        }
        if self.beta0.iter().any(|b| !b.is_finite()) {
            return Err(Error::InvalidParameter("beta0 must be finite".into()));
        }
        if self.n < 2 {
            return Err(Error::InvalidParameter(format!("n must be >= 2, got {}", self.n)));
        }
        if let Some(m) = self.matched {
            if m <= self.dim() {
                return Err(Error::InvalidParameter(format!(
                    "matched size must exceed d = {}, got {m}",
                    self.dim()
                )));
            }
        }
        self.columns.iter().try_for_each(ColumnLaw::validate)
    }

    pub fn draw_x<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        self.columns.iter().map(|c| c.draw(rng)).collect()
    }

    fn draw_y<R: Rng + ?Sized>(&self, rng: &mut R) -> (Vec<f64>, f64) {
        let x = self.draw_x(rng);
        let y = x.iter().zip(&self.beta0).map(|(a, b)| a * b).sum::<f64>() + self.noise.draw(rng);
        (x, y)
    }

    fn matrix<R: Rng + ?Sized>(&self, rows: usize, rng: &mut R) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(rows, self.dim());
        for i in 0..rows {
            for (j, v) in self.draw_x(rng).into_iter().enumerate() {
                m[(i, j)] = v;
            }
        }
        m
    }

    /// Unmatched sample for replication `rep`. Covariates come from one
    /// stream; responses are built from an independent covariate copy on a
    /// second stream, so the two samples are unlinked.
    pub fn generate(&self, seed: u64, rep: u64) -> Result<UnmatchedSample> {
        self.validate()?;
        let mut rx = rng::stream(seed, "mc-x", rep);
        let mut ry = rng::stream(seed, "mc-y", rep);
        let xs = self.matrix(self.n, &mut rx);
        let ys = (0..self.n).map(|_| self.draw_y(&mut ry).1).collect();
        UnmatchedSample::new(ys, xs)
    }

    /// Matched sample of size `m` for replication `rep`.
    pub fn generate_matched(&self, m: usize, seed: u64, rep: u64) -> Result<MatchedSample> {
        self.validate()?;
        let mut r: StreamRng = rng::stream(seed, "mc-matched", rep);
        let mut xs = DMatrix::zeros(m, self.dim());
        let mut ys = Vec::with_capacity(m);
        for i in 0..m {
            let (x, y) = self.draw_y(&mut r);
            for (j, v) in x.into_iter().enumerate() {
                xs[(i, j)] = v;
            }
            ys.push(y);
        }
        MatchedSample::new(ys, xs)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonteCarloOptions {
    pub replications: usize,
    pub seed: u64,
    pub fit: FitConfig,
    /// Run the unmatched estimator in every replication.
    pub run_dlse: bool,
    /// Fit OLS on an independent matched sample of size `n` per replication.
    pub compare_ols: bool,
    /// Semi-supervised estimators on a matched sample of `scenario.matched` rows.
    pub semi: bool,
}

impl Default for MonteCarloOptions {
    fn default() -> Self {
        MonteCarloOptions {
            replications: 100,
            seed: 0,
            fit: FitConfig::default(),
            run_dlse: true,
            compare_ols: false,
            semi: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SemiRow {
    pub beta_ols: Vec<f64>,
    pub beta_tilde: Vec<f64>,
    pub beta_dagger: Option<Vec<f64>>,
    pub r_n: f64,
    pub r_n_clamped: bool,
    pub ols_sq_norm: f64,
    pub tilde_sq_norm: f64,
    pub ols_risk: f64,
    pub tilde_risk: f64,
    pub dagger_risk: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonteCarloRow {
    pub replication: usize,
    pub beta_hat: Option<Vec<f64>>,
    pub ordered_beta: Option<Vec<f64>>,
    pub sigma_norm: Option<f64>,
    pub objective: Option<f64>,
    pub converged: Option<bool>,
    pub multimodal: Option<bool>,
    pub beta_ols: Option<Vec<f64>>,
    pub semi: Option<SemiRow>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OlsComparison {
    pub ols_mae: Vec<f64>,
    /// `mean|β̃ − β0| / mean|β̂ − β0|` per coordinate.
    pub ratio: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SemiSummary {
    pub ols_risk: f64,
    pub tilde_risk: f64,
    pub dagger_risk: Option<f64>,
    pub ols_sq_norm_mean: f64,
    pub ols_sq_norm_sd: f64,
    pub tilde_sq_norm_mean: f64,
    pub tilde_sq_norm_sd: f64,
    /// Replications where `β̃_{n,m}` beat OLS, and the two-sided sign test p-value.
    pub tilde_wins: usize,
    pub sign_test_p: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonteCarloSummary {
    pub fits: usize,
    pub failed: usize,
    pub mean: Vec<f64>,
    pub sd: Vec<f64>,
    pub ordered_mean: Vec<f64>,
    pub ordered_sd: Vec<f64>,
    /// Euclidean `‖β̂‖²`.
    pub sq_norm_mean: f64,
    pub sq_norm_sd: f64,
    pub mae: Vec<f64>,
    /// QQ diagnostics of `√n(β̂ − β0)` per coordinate (needs ≥ 10 fits).
    pub qq: Option<Vec<QqDiagnostic>>,
    /// Median of `n · D(β̂)`.
    pub median_scaled_objective: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonteCarloReport {
    pub scenario: Scenario,
    pub replications: usize,
    pub seed: u64,
    pub rows: Vec<MonteCarloRow>,
    pub summary: Option<MonteCarloSummary>,
    pub ols: Option<OlsComparison>,
    pub semi: Option<SemiSummary>,
    pub warnings: Vec<String>,
}

impl MonteCarloReport {
    /// One line per replication; the semi-supervised and OLS columns are
    /// present only when those parts ran.
    pub fn to_csv(&self) -> String {
        let d = self.scenario.dim();
        let cols = |p: &str| (1..=d).map(|j| format!("{p}{j}")).collect::<Vec<_>>().join(",");
        let opt = |v: Option<f64>| v.map(fmt_f64).unwrap_or_default();
        let vec_cells = |v: Option<&Vec<f64>>| match v {
            Some(b) => b.iter().map(|x| fmt_f64(*x)).collect::<Vec<_>>().join(","),
            None => vec![""; d].join(","),
        };
        let with_ols = self.ols.is_some();
        let with_semi = self.semi.is_some();
        let mut header = format!(
            "replication,status,{},{},sigma_norm,objective",
            cols("beta"),
            cols("ordered")
        );
        if with_ols {
            header.push_str(&format!(",{}", cols("ols")));
        }
        if with_semi {
            header.push_str(&format!(",{},{},r_n,ols_risk,tilde_risk", cols("matched_ols"), cols("tilde")));
        }
        let mut s = header + "\n";
        for r in &self.rows {
            let status = match (&r.error, r.converged) {
                (Some(_), _) => "failed",
                (None, Some(false)) => "not_converged",
                _ => "ok",
            };
            s.push_str(&format!(
                "{},{status},{},{},{},{}",
                r.replication,
                vec_cells(r.beta_hat.as_ref()),
                vec_cells(r.ordered_beta.as_ref()),
                opt(r.sigma_norm),
                opt(r.objective)
            ));
            if with_ols {
                s.push_str(&format!(",{}", vec_cells(r.beta_ols.as_ref())));
            }
            if with_semi {
                let semi = r.semi.as_ref();
                s.push_str(&format!(
                    ",{},{},{},{},{}",
                    vec_cells(semi.map(|x| &x.beta_ols)),
                    vec_cells(semi.map(|x| &x.beta_tilde)),
                    opt(semi.map(|x| x.r_n)),
                    opt(semi.map(|x| x.ols_risk)),
                    opt(semi.map(|x| x.tilde_risk))
                ));
            }
            s.push('\n');
        }
        s
    }
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn semi_row(
    scenario: &Scenario,
    data: &UnmatchedSample,
    m: usize,
    dlse_norm: Option<f64>,
    seed: u64,
    rep: u64,
) -> Result<SemiRow> {
    let matched = scenario.generate_matched(m, seed, rep)?;
    let fit = ols(&matched, false)?;
    let sigma = empirical_covariance(data.xs())?;
    let r = variance_norm_estimate(data.ys(), &scenario.noise)?;
    let tilde = beta_tilde(&fit.coefficients, r.r_n, &sigma)?;
    let dagger = dlse_norm
        .map(|nrm| beta_dagger(&fit.coefficients, nrm, &sigma))
        .transpose()?;
    let ols_norm = sigma_norm(&fit.coefficients, &sigma)?;
    let tilde_norm = sigma_norm(&tilde, &sigma)?;
    Ok(SemiRow {
        ols_risk: sq_dist(&fit.coefficients, &scenario.beta0),
        tilde_risk: sq_dist(&tilde, &scenario.beta0),
        dagger_risk: dagger.as_deref().map(|b| sq_dist(b, &scenario.beta0)),
        ols_sq_norm: ols_norm * ols_norm,
        tilde_sq_norm: tilde_norm * tilde_norm,
        beta_ols: fit.coefficients,
        beta_tilde: tilde,
        beta_dagger: dagger,
        r_n: r.r_n,
        r_n_clamped: r.clamped,
    })
}

fn run_replication(scenario: &Scenario, opts: &MonteCarloOptions, rep: usize) -> MonteCarloRow {
    let mut row = MonteCarloRow {
        replication: rep,
        beta_hat: None,
        ordered_beta: None,
        sigma_norm: None,
        objective: None,
        converged: None,
        multimodal: None,
        beta_ols: None,
        semi: None,
        error: None,
    };
    let rep64 = rep as u64;
    let result = (|| -> Result<()> {
        let data = scenario.generate(opts.seed, rep64)?;
        if opts.run_dlse {
            let cfg = opts.fit.clone().with_seed(rng::derive_seed(opts.seed, "mc-fit", rep64));
            let fit = fit_dlse(&data, &scenario.noise, &cfg)?;
            row.ordered_beta = Some(fit.ordered_beta.clone());
            row.sigma_norm = Some(fit.sigma_norm_hat);
            row.objective = Some(fit.objective);
            row.converged = Some(fit.converged);
            row.multimodal = Some(fit.is_multimodal());
            row.beta_hat = Some(fit.beta_hat);
        }
        if opts.compare_ols {
            let matched = scenario.generate_matched(scenario.n, opts.seed, rep64)?;
            row.beta_ols = Some(ols(&matched, false)?.coefficients);
        }
        if opts.semi {
            let m = scenario
                .matched
                .ok_or_else(|| Error::InvalidParameter("scenario has no matched sample size".into()))?;
            row.semi = Some(semi_row(scenario, &data, m, row.sigma_norm, opts.seed, rep64)?);
        }
        Ok(())
    })();
    if let Err(e) = result {
        row.error = Some(e.to_string());
    }
    row
}

/// Two-sided exact sign test p-value for `wins` successes out of `trials`.
fn sign_test(wins: usize, trials: usize) -> f64 {
    if trials == 0 {
        return 1.0;
    }
    let k = wins.min(trials - wins);
    // log C(n, i) accumulated incrementally.
    let n = trials as f64;
    let mut log_c = 0.0f64;
    let mut tail = 0.0;
    for i in 0..=k {
        if i > 0 {
            log_c += ((n - i as f64 + 1.0) / i as f64).ln();
        }
        tail += (log_c - n * std::f64::consts::LN_2).exp();
    }
    (2.0 * tail).min(1.0)
}

fn summarise_fits(scenario: &Scenario, rows: &[MonteCarloRow]) -> Option<MonteCarloSummary> {
    let ok: Vec<&MonteCarloRow> = rows.iter().filter(|r| r.beta_hat.is_some()).collect();
    if ok.is_empty() {
        return None;
    }
    let d = scenario.dim();
    let n = scenario.n as f64;
    let betas: Vec<&Vec<f64>> = ok.iter().filter_map(|r| r.beta_hat.as_ref()).collect();
    let sorted: Vec<Vec<f64>> = betas.iter().map(|b| ordered(b)).collect();
    let col = |k: usize| betas.iter().map(|b| b[k]).collect::<Vec<f64>>();
    let (mean, sd): (Vec<f64>, Vec<f64>) = (0..d).map(|k| mean_sd(&col(k))).unzip();
    let (ordered_mean, ordered_sd): (Vec<f64>, Vec<f64>) = (0..d)
        .map(|k| mean_sd(&sorted.iter().map(|b| b[k]).collect::<Vec<_>>()))
        .unzip();
    let sq: Vec<f64> = betas.iter().map(|b| b.iter().map(|x| x * x).sum()).collect();
    let (sq_norm_mean, sq_norm_sd) = mean_sd(&sq);
    let mae = (0..d)
        .map(|k| col(k).iter().map(|b| (b - scenario.beta0[k]).abs()).sum::<f64>() / betas.len() as f64)
        .collect();
    let qq = if betas.len() >= 10 {
        (0..d)
            .map(|k| {
                let z: Vec<f64> = col(k).iter().map(|b| n.sqrt() * (b - scenario.beta0[k])).collect();
                qq_against_normal(&z)
            })
            .collect::<Result<Vec<_>>>()
            .ok()
    } else {
        None
    };
    let scaled: Vec<f64> = ok.iter().filter_map(|r| r.objective).map(|o| n * o).collect();
    Some(MonteCarloSummary {
        fits: betas.len(),
        failed: rows.len() - betas.len(),
        mean,
        sd,
        ordered_mean,
        ordered_sd,
        sq_norm_mean,
        sq_norm_sd,
        mae,
        qq,
        median_scaled_objective: median(&scaled),
    })
}

fn summarise_ols(scenario: &Scenario, rows: &[MonteCarloRow], fits: Option<&MonteCarloSummary>) -> Option<OlsComparison> {
    let betas: Vec<&Vec<f64>> = rows.iter().filter_map(|r| r.beta_ols.as_ref()).collect();
    if betas.is_empty() {
        return None;
    }
    let ols_mae: Vec<f64> = (0..scenario.dim())
        .map(|k| betas.iter().map(|b| (b[k] - scenario.beta0[k]).abs()).sum::<f64>() / betas.len() as f64)
        .collect();
    let ratio = match fits {
        Some(s) => ols_mae.iter().zip(&s.mae).map(|(o, d)| o / d).collect(),
        None => Vec::new(),
    };
    Some(OlsComparison { ols_mae, ratio })
}

fn summarise_semi(rows: &[MonteCarloRow]) -> Option<SemiSummary> {
    let semi: Vec<&SemiRow> = rows.iter().filter_map(|r| r.semi.as_ref()).collect();
    if semi.is_empty() {
        return None;
    }
    let k = semi.len() as f64;
    let avg = |f: &dyn Fn(&SemiRow) -> f64| semi.iter().map(|s| f(s)).sum::<f64>() / k;
    let (ols_sq_norm_mean, ols_sq_norm_sd) = mean_sd(&semi.iter().map(|s| s.ols_sq_norm).collect::<Vec<_>>());
    let (tilde_sq_norm_mean, tilde_sq_norm_sd) = mean_sd(&semi.iter().map(|s| s.tilde_sq_norm).collect::<Vec<_>>());
    let dagger: Vec<f64> = semi.iter().filter_map(|s| s.dagger_risk).collect();
    let tilde_wins = semi.iter().filter(|s| s.tilde_risk < s.ols_risk).count();
    let decided = semi.iter().filter(|s| s.tilde_risk != s.ols_risk).count();
    Some(SemiSummary {
        ols_risk: avg(&|s| s.ols_risk),
        tilde_risk: avg(&|s| s.tilde_risk),
        dagger_risk: (dagger.len() == semi.len()).then(|| dagger.iter().sum::<f64>() / k),
        ols_sq_norm_mean,
        ols_sq_norm_sd,
        tilde_sq_norm_mean,
        tilde_sq_norm_sd,
        tilde_wins,
        sign_test_p: sign_test(tilde_wins, decided),
    })
}

/// Repeat a design `replications` times with fresh data and summarise.
///
/// Replication `r` draws its data and its fit seed from streams derived from
/// `(seed, r)`; replications run in parallel and are collected in order, so
/// the report is independent of the worker count.
pub fn run_monte_carlo(scenario: &Scenario, opts: &MonteCarloOptions) -> Result<MonteCarloReport> {
    scenario.validate()?;
    if opts.replications < 2 {
        return Err(Error::InvalidParameter(format!(
            "replications must be >= 2, got {}",
            opts.replications
        )));
    }
    if opts.semi && scenario.matched.is_none() {
        return Err(Error::InvalidParameter(format!(
            "scenario `{}` has no matched sample size",
            scenario.name
        )));
    }
    opts.fit.validate()?;
    let rows: Vec<MonteCarloRow> = (0..opts.replications)
        .into_par_iter()
        .map(|rep| run_replication(scenario, opts, rep))
        .collect();

    let mut warnings = Vec::new();
    let failed = rows.iter().filter(|r| r.error.is_some()).count();
    if failed > 0 {
        warnings.push(format!("{failed} of {} replications failed", rows.len()));
    }
    let unconverged = rows.iter().filter(|r| r.converged == Some(false)).count();
    if unconverged > 0 {
        warnings.push(format!("{unconverged} fits did not meet the simplex tolerance"));
    }
    let summary = if opts.run_dlse {
        summarise_fits(scenario, &rows)
    } else {
        None
    };
    let ols = summarise_ols(scenario, &rows, summary.as_ref());
    let semi = summarise_semi(&rows);
    Ok(MonteCarloReport {
        scenario: scenario.clone(),
        replications: opts.replications,
        seed: opts.seed,
        rows,
        summary,
        ols,
        semi,
        warnings,
    })
}
