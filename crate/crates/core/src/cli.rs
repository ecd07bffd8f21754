//! Command-line front end: argument parsing, noise specs, output files and
//! exit codes. `main` only forwards to [`run`].
//!
//! Exit codes: 0 success, 2 usage, 3 data, 4 numerical failure. Errors are
//! written to stderr as `{"error": {"kind": ..., "message": ...}}`.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::dataio::{read_matched, read_unmatched, write_file};
use crate::dlse::{fit_dlse, FitConfig};
use crate::empirical::{MatchedSample, Standardization, UnmatchedSample};
use crate::error::{Error, Result};
use crate::inference::{bootstrap_dlse, run_monte_carlo, MonteCarloOptions, Scenario};
use crate::noise::{fit_kde_noise, BandwidthRule, NoiseModel};
use crate::objective::{profile_csv, profile_noise, NoiseFamily, ObjectiveSpec, DEFAULT_QUANTILE_POINTS};
use crate::report::to_json;
use crate::semisup::{ols, semi_supervised, SemiOptions, SemiResult};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_DATA: i32 = 3;
pub const EXIT_NUMERICAL: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "dlse", version, about = "Linear regression on unmatched data by deconvolution least squares")]
pub struct Cli {
    /// Master seed; every random stream is derived from it.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,

    /// Worker threads (default: all cores). Never changes the output.
    #[arg(long, global = true)]
    pub workers: Option<usize>,

    /// Output file; stdout when omitted.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    /// Center and scale Y and each covariate to unit variance before fitting.
    /// Estimates and the noise spec are then in standardized units.
    #[arg(long, global = true)]
    pub standardize: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit the estimator to unmatched response and covariate files.
    Fit {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        noise: NoiseArgs,
        #[command(flatten)]
        fit: FitArgs,
    },
    /// Minimised criterion over a grid of noise standard deviations.
    Profile {
        #[command(flatten)]
        data: DataArgs,
        /// Noise family: normal or laplace.
        #[arg(long, default_value = "normal")]
        family: NoiseFamily,
        /// `start:stop:step` (inclusive) or a comma-separated list.
        #[arg(long)]
        sd_grid: String,
        #[command(flatten)]
        fit: FitArgs,
    },
    /// Semi-supervised estimators from a small matched file plus unmatched files.
    Semifit {
        /// Matched CSV with columns `y,x1..xd`.
        #[arg(long)]
        matched: PathBuf,
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        noise: NoiseArgs,
        /// Include an intercept in the matched OLS fit.
        #[arg(long)]
        intercept: bool,
        /// Skip the unmatched fit (no β†).
        #[arg(long)]
        no_dlse: bool,
        #[command(flatten)]
        fit: FitArgs,
    },
    /// Monte Carlo experiment on a built-in or custom design.
    Simulate {
        /// Built-in design: ex1, ex2, ex3 or ex4.
        #[arg(long, conflicts_with = "scenario_file")]
        scenario: Option<String>,
        /// JSON scenario with columns, beta0, noise, n and optional matched.
        #[arg(long)]
        scenario_file: Option<PathBuf>,
        #[arg(long, default_value_t = 100)]
        replications: usize,
        /// Override the sample size of the design.
        #[arg(long)]
        n: Option<usize>,
        /// Override the matched sample size of the design.
        #[arg(long)]
        matched_size: Option<usize>,
        /// Override the noise law, e.g. `normal:sd=2`.
        #[arg(long)]
        noise: Option<String>,
        /// Also fit OLS on a matched sample of size n per replication.
        #[arg(long)]
        compare_ols: bool,
        /// Also compute the semi-supervised estimators.
        #[arg(long)]
        semi: bool,
        /// Skip the unmatched fit (semi-supervised β̃ only).
        #[arg(long)]
        no_dlse: bool,
        /// Per-replication CSV; defaults to the `--out` path with a `.csv` extension.
        #[arg(long)]
        csv: Option<PathBuf>,
        #[command(flatten)]
        fit: FitArgs,
    },
    /// Bootstrap intervals for the coefficients, ordered coefficients and Σ̂-norm.
    Bootstrap {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        noise: NoiseArgs,
        #[arg(long, default_value_t = 200)]
        resamples: usize,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
        /// Per-resample CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
        #[command(flatten)]
        fit: FitArgs,
    },
}

#[derive(Debug, Args)]
pub struct DataArgs {
    /// Response CSV with a single `y` column.
    #[arg(long)]
    pub y: PathBuf,
    /// Covariate CSV with columns `x1..xd`.
    #[arg(long)]
    pub x: PathBuf,
}

#[derive(Debug, Args)]
pub struct NoiseArgs {
    /// `normal:sd=S`, `laplace:sd=S` or `kde:bandwidth=silverman|sj|H`; an
    /// optional `,location=L` shifts the law.
    #[arg(long, conflicts_with = "noise_file")]
    pub noise: Option<String>,
    /// Noise model as JSON.
    #[arg(long)]
    pub noise_file: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[arg(long, default_value_t = 12)]
    pub restarts: usize,
    /// Quantile points of the search criterion.
    #[arg(long, default_value_t = DEFAULT_QUANTILE_POINTS)]
    pub quantile_points: usize,
    /// Search on the full criterion instead of the quantile subsample.
    #[arg(long)]
    pub full_grid: bool,
    /// Exponent of the criterion.
    #[arg(long, default_value_t = 2)]
    pub p: u32,
    #[arg(long, default_value_t = 2000)]
    pub max_iterations: usize,
    #[arg(long, default_value_t = 200)]
    pub polish_iterations: usize,
    #[arg(long, default_value_t = 1e-8)]
    pub tolerance: f64,
}

impl FitArgs {
    fn config(&self, seed: u64) -> FitConfig {
        FitConfig {
            restarts: self.restarts,
            simplex_tolerance: self.tolerance,
            max_iterations: self.max_iterations,
            polish_iterations: self.polish_iterations,
            seed,
            objective: if self.full_grid {
                ObjectiveSpec::full(self.p)
            } else {
                ObjectiveSpec::subsampled(self.p, self.quantile_points)
            },
            ..FitConfig::default()
        }
    }
}

/// A parsed `--noise` value.
#[derive(Debug, Clone, PartialEq)]
pub enum NoiseSpec {
    Model(NoiseModel),
    /// Kernel estimate to be fitted from matched OLS residuals.
    Kde { rule: BandwidthRule, location: f64 },
}

/// Parse `family:key=value,...`.
pub fn parse_noise_spec(spec: &str) -> Result<NoiseSpec> {
    let bad = |msg: String| Error::InvalidParameter(format!("noise spec `{spec}`: {msg}"));
    let (family, rest) = spec.split_once(':').unwrap_or((spec, ""));
    let mut sd = None;
    let mut location = 0.0;
    let mut bandwidth = None;
    for kv in rest.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let (k, v) = kv.split_once('=').ok_or_else(|| bad(format!("expected key=value, got `{kv}`")))?;
        let num = || v.trim().parse::<f64>().map_err(|_| bad(format!("`{k}` is not a number")));
        match k.trim() {
            "sd" => sd = Some(num()?),
            "location" => location = num()?,
            "bandwidth" => bandwidth = Some(v.trim().parse::<BandwidthRule>()?),
            other => return Err(bad(format!("unknown key `{other}`"))),
        }
    }
    match family.trim() {
        "normal" | "laplace" => {
            if bandwidth.is_some() {
                return Err(bad("bandwidth applies to kde only".into()));
            }
            let sd = sd.ok_or_else(|| bad("missing sd".into()))?;
            let fam: NoiseFamily = family.trim().parse()?;
            Ok(NoiseSpec::Model(fam.with_sd(sd)?.with_location(location)?))
        }
        "kde" => {
            if sd.is_some() {
                return Err(bad("kde takes a bandwidth, not sd".into()));
            }
            Ok(NoiseSpec::Kde {
                rule: bandwidth.unwrap_or_default(),
                location,
            })
        }
        other => Err(bad(format!("unknown family `{other}`; use normal, laplace or kde"))),
    }
}

/// `start:stop:step` (stop included up to rounding) or `a,b,c`.
pub fn parse_grid(s: &str) -> Result<Vec<f64>> {
    let bad = |msg: &str| Error::InvalidParameter(format!("grid `{s}`: {msg}"));
    let num = |t: &str| t.trim().parse::<f64>().map_err(|_| bad(&format!("`{t}` is not a number")));
    if s.contains(':') {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 3 {
            return Err(bad("expected start:stop:step"));
        }
        let (a, b, h) = (num(parts[0])?, num(parts[1])?, num(parts[2])?);
        if !(h > 0.0 && b >= a && a.is_finite() && b.is_finite()) {
            return Err(bad("need start <= stop and step > 0"));
        }
        let count = ((b - a) / h + 1e-9).floor() as usize + 1;
        if count > 100_000 {
            return Err(bad("too many grid points"));
        }
        Ok((0..count).map(|i| a + i as f64 * h).collect())
    } else {
        let v = s.split(',').map(num).collect::<Result<Vec<_>>>()?;
        if v.is_empty() {
            return Err(bad("empty grid"));
        }
        Ok(v)
    }
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::InvalidParameter(_) | Error::Precondition(_) => EXIT_USAGE,
        Error::Data(_)
        | Error::Io { .. }
        | Error::DimensionMismatch { .. }
        | Error::InsufficientRows { .. }
        | Error::DegenerateInput(_) => EXIT_DATA,
        Error::RankDeficient { .. } | Error::Numerical(_) => EXIT_NUMERICAL,
    }
}

#[derive(Serialize)]
struct ErrorRecord<'a> {
    error: ErrorBody<'a>,
}

#[derive(Serialize)]
struct ErrorBody<'a> {
    kind: &'a str,
    message: String,
}

fn error_json(kind: &str, message: String) -> String {
    let rec = ErrorRecord {
        error: ErrorBody { kind, message },
    };
    serde_json::to_string(&rec).expect("error record serializes") + "\n"
}

/// Parse `args` (including the program name) and run the command.
/// Returns the process exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = write!(stdout, "{e}");
                return EXIT_OK;
            }
            let _ = stderr.write_all(error_json("usage", e.to_string().trim_end().to_string()).as_bytes());
            return EXIT_USAGE;
        }
    };
    let outcome = match cli.workers {
        Some(0) => Err(Error::InvalidParameter("--workers must be >= 1".into())),
        Some(k) => rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build()
            .map_err(|e| Error::Numerical(format!("cannot start worker pool: {e}")))
            .and_then(|pool| pool.install(|| execute(&cli))),
        None => execute(&cli),
    }
    .and_then(|text| emit(&cli, &text, stdout));
    match outcome {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = stderr.write_all(error_json(e.kind(), e.to_string()).as_bytes());
            exit_code(&e)
        }
    }
}

fn emit(cli: &Cli, text: &str, stdout: &mut dyn Write) -> Result<()> {
    match &cli.out {
        Some(p) => write_file(p, text),
        None => stdout.write_all(text.as_bytes()).map_err(|source| Error::Io {
            path: "<stdout>".into(),
            source,
        }),
    }
}

fn load_unmatched(cli: &Cli, data: &DataArgs) -> Result<(UnmatchedSample, Option<Standardization>)> {
    let sample = read_unmatched(&data.y, &data.x)?;
    if cli.standardize {
        let (s, t) = sample.standardize()?;
        Ok((s, Some(t)))
    } else {
        Ok((sample, None))
    }
}

fn read_noise_file(path: &Path) -> Result<NoiseModel> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|e| Error::Data(format!("{}: invalid noise model: {e}", path.display())))
}

fn noise_spec(args: &NoiseArgs) -> Result<NoiseSpec> {
    match (&args.noise, &args.noise_file) {
        (Some(s), None) => parse_noise_spec(s),
        (None, Some(p)) => Ok(NoiseSpec::Model(read_noise_file(p)?)),
        _ => Err(Error::InvalidParameter("exactly one of --noise or --noise-file is required".into())),
    }
}

fn plain_noise(args: &NoiseArgs) -> Result<NoiseModel> {
    match noise_spec(args)? {
        NoiseSpec::Model(m) => Ok(m),
        NoiseSpec::Kde { .. } => Err(Error::InvalidParameter(
            "kde noise is estimated from matched residuals; use `semifit` or pass a fitted model with --noise-file"
                .into(),
        )),
    }
}

fn standardize_matched(m: &MatchedSample, t: &Standardization) -> Result<MatchedSample> {
    let ys = m.ys().iter().map(|y| (y - t.y_mean) / t.y_sd).collect();
    let mut xs = m.xs().clone();
    for (j, mut col) in xs.column_iter_mut().enumerate() {
        col.apply(|x| *x = (*x - t.x_means[j]) / t.x_sds[j]);
    }
    MatchedSample::new(ys, xs)
}

#[derive(Serialize)]
struct SemiOutput {
    #[serde(flatten)]
    result: SemiResult,
    #[serde(skip_serializing_if = "Option::is_none")]
    bandwidth_rule: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    transform: Option<Standardization>,
}

fn csv_path(explicit: &Option<PathBuf>, out: &Option<PathBuf>) -> Option<PathBuf> {
    explicit.clone().or_else(|| out.as_ref().map(|p| p.with_extension("csv")))
}

/// Run the command, writing any side files, and return the main output.
fn execute(cli: &Cli) -> Result<String> {
    match &cli.command {
        Command::Fit { data, noise, fit } => {
            let noise = plain_noise(noise)?;
            let (sample, transform) = load_unmatched(cli, data)?;
            let mut result = fit_dlse(&sample, &noise, &fit.config(cli.seed))?;
            result.transform = transform;
            Ok(to_json(&result)?)
        }
        Command::Profile {
            data,
            family,
            sd_grid,
            fit,
        } => {
            let grid = parse_grid(sd_grid)?;
            let (sample, _) = load_unmatched(cli, data)?;
            let points = profile_noise(&sample, *family, &grid, &fit.config(cli.seed))?;
            Ok(profile_csv(*family, sample.dim(), &points))
        }
        Command::Semifit {
            matched,
            data,
            noise,
            intercept,
            no_dlse,
            fit,
        } => {
            let spec = noise_spec(noise)?;
            let (sample, transform) = load_unmatched(cli, data)?;
            let mut m = read_matched(matched)?;
            if let Some(t) = &transform {
                m = standardize_matched(&m, t)?;
            }
            let (noise, rule) = match spec {
                NoiseSpec::Model(model) => (model, None),
                NoiseSpec::Kde { rule, location } => {
                    let residuals = ols(&m, *intercept)?.residuals;
                    (fit_kde_noise(&residuals, rule)?.with_location(location)?, Some(rule.to_string()))
                }
            };
            let opts = SemiOptions {
                intercept: *intercept,
                fit: (!no_dlse).then(|| fit.config(cli.seed)),
            };
            let result = semi_supervised(&m, &sample, &noise, &opts)?;
            let out = SemiOutput {
                result,
                bandwidth_rule: rule,
                transform,
            };
            Ok(to_json(&out)?)
        }
        Command::Simulate {
            scenario,
            scenario_file,
            replications,
            n,
            matched_size,
            noise,
            compare_ols,
            semi,
            no_dlse,
            csv,
            fit,
        } => {
            if cli.standardize {
                return Err(Error::InvalidParameter("--standardize does not apply to simulate".into()));
            }
            let mut design = match (scenario, scenario_file) {
                (Some(name), None) => Scenario::builtin(name)?,
                (None, Some(p)) => {
                    let text = std::fs::read_to_string(p).map_err(|source| Error::Io {
                        path: p.display().to_string(),
                        source,
                    })?;
                    serde_json::from_str(&text)
                        .map_err(|e| Error::Data(format!("{}: invalid scenario: {e}", p.display())))?
                }
                _ => {
                    return Err(Error::InvalidParameter(format!(
                        "one of --scenario ({}) or --scenario-file is required",
                        Scenario::builtin_names().join(", ")
                    )))
                }
            };
            if let Some(n) = n {
                design = design.with_n(*n);
            }
            if matched_size.is_some() {
                design = design.with_matched(*matched_size);
            }
            if let Some(spec) = noise {
                match parse_noise_spec(spec)? {
                    NoiseSpec::Model(m) => design = design.with_noise(m),
                    NoiseSpec::Kde { .. } => {
                        return Err(Error::InvalidParameter("kde noise cannot drive a simulation".into()))
                    }
                }
            }
            let opts = MonteCarloOptions {
                replications: *replications,
                seed: cli.seed,
                fit: fit.config(cli.seed),
                run_dlse: !no_dlse,
                compare_ols: *compare_ols,
                semi: *semi,
            };
            let report = run_monte_carlo(&design, &opts)?;
            if let Some(p) = csv_path(csv, &cli.out) {
                write_file(&p, &report.to_csv())?;
            }
            Ok(to_json(&report)?)
        }
        Command::Bootstrap {
            data,
            noise,
            resamples,
            alpha,
            csv,
            fit,
        } => {
            let noise = plain_noise(noise)?;
            let (sample, transform) = load_unmatched(cli, data)?;
            let mut report = bootstrap_dlse(&sample, &noise, &fit.config(cli.seed), *resamples, *alpha, cli.seed)?;
            report.estimate.transform = transform;
            if let Some(p) = csv {
                write_file(p, &report.to_csv())?;
            }
            Ok(to_json(&report)?)
        }
    }
}
