//! Monte Carlo harness: error tables, timing, coverage and residuals.
//!
//! Every replication draws its graph from a seed derived from the base
//! seed, the cell index and the replication index, and results are
//! gathered in replication order, so output does not depend on the number
//! of threads.

use std::fmt::{self, Write as _};
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use rand::RngCore;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::asymptotics::global_table;
use crate::error::{Error, Result};
use crate::estimator::{estimate_graph, Method};
use crate::inference::{z_crit, Fitted};
use crate::mle::fit_mle;
use crate::model::{dyad_probs, linear_design, sample_graph, ParamVector};
use crate::stats::{mean, variance};

/// Density parameter as a function of `n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SpecRepr", into = "String")]
pub enum ThetaSpec {
    Constant(f64),
    /// `−(log n)/c`.
    LogOver(f64),
    /// `−log(log n)`.
    LogLog,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum SpecRepr {
    Number(f64),
    Text(String),
}

impl TryFrom<SpecRepr> for ThetaSpec {
    type Error = Error;

    fn try_from(r: SpecRepr) -> Result<Self> {
        match r {
            SpecRepr::Number(x) => Ok(ThetaSpec::Constant(x)),
            SpecRepr::Text(s) => s.parse(),
        }
    }
}

impl From<ThetaSpec> for String {
    fn from(s: ThetaSpec) -> String {
        s.to_string()
    }
}

impl fmt::Display for ThetaSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ThetaSpec::Constant(x) => write!(f, "{x}"),
            ThetaSpec::LogOver(c) => write!(f, "-log(n)/{c}"),
            ThetaSpec::LogLog => write!(f, "-log(log(n))"),
        }
    }
}

impl FromStr for ThetaSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        if let Ok(x) = t.parse::<f64>() {
            return Ok(ThetaSpec::Constant(x));
        }
        if t == "-log(log(n))" {
            return Ok(ThetaSpec::LogLog);
        }
        if t == "-log(n)" {
            return Ok(ThetaSpec::LogOver(1.0));
        }
        if let Some(c) = t.strip_prefix("-log(n)/").and_then(|c| c.parse::<f64>().ok()) {
            return Ok(ThetaSpec::LogOver(c));
        }
        Err(Error::Config(format!("unrecognised theta spec {s:?}")))
    }
}

impl ThetaSpec {
    pub fn value(&self, n: usize) -> Result<f64> {
        let ln = (n as f64).ln();
        let v = match *self {
            ThetaSpec::Constant(x) => x,
            ThetaSpec::LogOver(c) => -ln / c,
            ThetaSpec::LogLog => -ln.ln(),
        };
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::Config(format!("theta spec {self} is not finite at n={n}")))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EstimatorKind {
    Tdre,
    Mle,
}

impl EstimatorKind {
    pub fn label(self) -> &'static str {
        match self {
            EstimatorKind::Tdre => "tdre",
            EstimatorKind::Mle => "mle",
        }
    }
}

fn default_rho() -> f64 {
    0.5
}
fn default_estimators() -> Vec<EstimatorKind> {
    vec![EstimatorKind::Tdre]
}
fn default_level() -> f64 {
    0.95
}
fn default_timing() -> usize {
    10
}
fn default_tol() -> f64 {
    1e-8
}
fn default_max_iter() -> usize {
    1000
}

/// Simulation grid over `n_values × theta_specs` at the linear design.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub n_values: Vec<usize>,
    pub theta_specs: Vec<ThetaSpec>,
    #[serde(default = "default_rho")]
    pub rho: f64,
    pub replications: usize,
    pub seed: u64,
    #[serde(default = "default_estimators")]
    pub estimators: Vec<EstimatorKind>,
    #[serde(default)]
    pub outputs: Option<PathBuf>,
    /// Confidence level of the coverage intervals.
    #[serde(default = "default_level")]
    pub level: f64,
    #[serde(default = "default_timing")]
    pub timing_repetitions: usize,
    #[serde(default = "default_tol")]
    pub mle_tol: f64,
    #[serde(default = "default_max_iter")]
    pub mle_max_iter: usize,
}

impl ExperimentConfig {
    /// A TDRE-only grid with defaults for everything else.
    pub fn new(n_values: Vec<usize>, theta_specs: Vec<ThetaSpec>, replications: usize, seed: u64) -> Self {
        ExperimentConfig {
            n_values,
            theta_specs,
            rho: default_rho(),
            replications,
            seed,
            estimators: default_estimators(),
            outputs: None,
            level: default_level(),
            timing_repetitions: default_timing(),
            mle_tol: default_tol(),
            mle_max_iter: default_max_iter(),
        }
    }

    /// Reads TOML, or JSON when the extension is `.json`.
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        let cfg: ExperimentConfig = if path.extension().is_some_and(|e| e == "json") {
            serde_json::from_str(&text).map_err(|e| Error::Config(e.to_string()))?
        } else {
            toml::from_str(&text).map_err(|e| Error::Config(e.to_string()))?
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.replications == 0 {
            return Err(Error::Config("replications must be at least 1".into()));
        }
        if self.n_values.is_empty() || self.theta_specs.is_empty() {
            return Err(Error::Config("empty n_values or theta_specs".into()));
        }
        if !(self.level > 0.0 && self.level < 1.0) {
            return Err(Error::Config(format!("level {} outside (0, 1)", self.level)));
        }
        if !self.rho.is_finite() {
            return Err(Error::Config("rho must be finite".into()));
        }
        for &n in &self.n_values {
            if n < 2 || n % 2 == 1 {
                return Err(Error::InvalidDesign(n));
            }
            for s in &self.theta_specs {
                s.value(n)?;
            }
        }
        Ok(())
    }

    /// `(cell index, n, spec)` in grid order.
    pub fn cells(&self) -> Vec<(usize, usize, ThetaSpec)> {
        self.n_values
            .iter()
            .flat_map(|&n| self.theta_specs.iter().map(move |&s| (n, s)))
            .enumerate()
            .map(|(k, (n, s))| (k, n, s))
            .collect()
    }

    pub fn params(&self, n: usize, spec: ThetaSpec) -> Result<ParamVector> {
        linear_design(n, self.rho, spec.value(n)?)
    }
}

/// Seed of replication `rep` in cell `cell`: ChaCha stream `(cell, rep)`.
pub fn replication_seed(base: u64, cell: usize, rep: usize) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(base);
    rng.set_stream(((cell as u64) << 32) | rep as u64);
    rng.next_u64()
}

/// Node indices `1, n/2, n` (1-based) as 0-based indices.
pub fn tracked_nodes(n: usize) -> [usize; 3] {
    [0, n / 2 - 1, n - 1]
}

/// Absolute errors of one successful fit.
#[derive(Debug, Clone, Copy)]
struct Errors {
    theta: f64,
    rho: f64,
    alpha_sup: f64,
    alpha_nodes: [f64; 3],
}

fn errors(est: &ParamVector, truth: &ParamVector) -> Errors {
    let alpha_sup = est.alpha.iter().zip(&truth.alpha).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let idx = tracked_nodes(truth.n());
    Errors {
        theta: (est.theta - truth.theta).abs(),
        rho: (est.rho - truth.rho).abs(),
        alpha_sup,
        alpha_nodes: idx.map(|i| (est.alpha[i] - truth.alpha[i]).abs()),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorRow {
    pub n: usize,
    pub theta_spec: String,
    pub theta: f64,
    pub estimator: String,
    pub replications: usize,
    pub successes: usize,
    pub degenerate: usize,
    /// `None` when every replication failed.
    pub mean_abs_theta: Option<f64>,
    pub mean_abs_rho: Option<f64>,
    pub mean_sup_alpha: Option<f64>,
    /// `|α̂_i − α_i|` at `i = 1, n/2, n`.
    pub mean_abs_alpha_nodes: Option<[f64; 3]>,
}

fn fit(kind: EstimatorKind, g: &crate::model::Digraph, cfg: &ExperimentConfig) -> Result<ParamVector> {
    match kind {
        EstimatorKind::Tdre => estimate_graph(g, Method::Auto)?.to_params(),
        EstimatorKind::Mle => fit_mle(g, cfg.mle_tol, cfg.mle_max_iter).map(|r| r.theta_tilde),
    }
}

/// Mean absolute errors per cell and estimator.
pub fn run_error_table(cfg: &ExperimentConfig) -> Result<Vec<ErrorRow>> {
    cfg.validate()?;
    let mut rows = Vec::new();
    for (cell, n, spec) in cfg.cells() {
        let truth = cfg.params(n, spec)?;
        let per_rep: Vec<Vec<Option<Errors>>> = (0..cfg.replications)
            .into_par_iter()
            .map(|r| {
                let g = sample_graph(&truth, replication_seed(cfg.seed, cell, r));
                cfg.estimators.iter().map(|&k| fit(k, &g, cfg).ok().map(|e| errors(&e, &truth))).collect()
            })
            .collect();
        for (k, &kind) in cfg.estimators.iter().enumerate() {
            let ok: Vec<Errors> = per_rep.iter().filter_map(|r| r[k]).collect();
            let avg = |f: &dyn Fn(&Errors) -> f64| {
                (!ok.is_empty()).then(|| mean(&ok.iter().map(f).collect::<Vec<_>>()))
            };
            rows.push(ErrorRow {
                n,
                theta_spec: spec.to_string(),
                theta: truth.theta,
                estimator: kind.label().into(),
                replications: cfg.replications,
                successes: ok.len(),
                degenerate: cfg.replications - ok.len(),
                mean_abs_theta: avg(&|e| e.theta),
                mean_abs_rho: avg(&|e| e.rho),
                mean_sup_alpha: avg(&|e| e.alpha_sup),
                mean_abs_alpha_nodes: avg(&|e| e.alpha_nodes[0])
                    .map(|a| [a, avg(&|e| e.alpha_nodes[1]).unwrap(), avg(&|e| e.alpha_nodes[2]).unwrap()]),
            });
        }
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingRow {
    pub n: usize,
    pub theta_spec: String,
    pub repetitions: usize,
    /// Mean wall-clock seconds over successful runs.
    pub tdre_seconds: Option<f64>,
    pub mle_seconds: Option<f64>,
    pub tdre_failures: usize,
    pub mle_failures: usize,
}

impl TimingRow {
    pub fn ratio(&self) -> Option<f64> {
        Some(self.tdre_seconds? / self.mle_seconds?)
    }
}

/// Sequential wall-clock comparison of TDRE and MLE on the same graphs.
pub fn run_timing(cfg: &ExperimentConfig) -> Result<Vec<TimingRow>> {
    cfg.validate()?;
    let reps = cfg.timing_repetitions.max(1);
    let mut rows = Vec::new();
    for (cell, n, spec) in cfg.cells() {
        let truth = cfg.params(n, spec)?;
        let (mut td, mut ml) = (Vec::new(), Vec::new());
        for r in 0..reps {
            let g = sample_graph(&truth, replication_seed(cfg.seed, cell, r));
            let start = Instant::now();
            if estimate_graph(&g, Method::Auto).is_ok() {
                td.push(start.elapsed().as_secs_f64());
            }
            let start = Instant::now();
            if fit_mle(&g, cfg.mle_tol, cfg.mle_max_iter).is_ok() {
                ml.push(start.elapsed().as_secs_f64());
            }
        }
        rows.push(TimingRow {
            n,
            theta_spec: spec.to_string(),
            repetitions: reps,
            tdre_seconds: (!td.is_empty()).then(|| mean(&td)),
            mle_seconds: (!ml.is_empty()).then(|| mean(&ml)),
            tdre_failures: reps - td.len(),
            mle_failures: reps - ml.len(),
        });
    }
    Ok(rows)
}

/// Parameters tracked for coverage, in output order.
pub const COVERAGE_PARAMS: [&str; 8] = ["rho", "theta", "alpha_1", "alpha_mid", "alpha_n", "beta_1", "beta_mid", "beta_n"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageRow {
    pub n: usize,
    pub theta_spec: String,
    pub parameter: String,
    pub level: f64,
    pub replications: usize,
    pub successes: usize,
    pub degenerate: usize,
    pub covered: usize,
    /// `covered / successes`; `None` when nothing succeeded.
    pub coverage: Option<f64>,
}

/// Standardised residual of one parameter in one replication.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Residual {
    pub n: usize,
    pub theta_spec: String,
    pub replication: usize,
    pub parameter: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageResult {
    pub rows: Vec<CoverageRow>,
    pub residuals: Vec<Residual>,
}

/// Standardised residuals `(ρ̂ − ρ − ρ̂*)/σ̂_ρ`, `(θ̂ − θ − θ̂*)/σ̂_θ` and
/// `(α̂_i − α_i)/σ̂_αᵢ`, `(β̂_i − β_i)/σ̂_βᵢ` in [`COVERAGE_PARAMS`] order.
pub fn standardized_residuals(fit: &Fitted, truth: &ParamVector) -> [f64; 8] {
    let (e, t) = (&fit.estimate, &fit.table);
    let idx = tracked_nodes(truth.n());
    let a = |k: usize| (e.alpha[idx[k]] - truth.alpha[idx[k]]) / t.sigma_alpha2[idx[k]].sqrt();
    let b = |k: usize| (e.beta[idx[k]] - truth.beta[idx[k]]) / t.sigma_beta2[idx[k]].sqrt();
    [
        (fit.rho_corrected() - truth.rho) / t.sigma_rho2.sqrt(),
        (fit.theta_corrected() - truth.theta) / t.sigma_theta2.sqrt(),
        a(0),
        a(1),
        a(2),
        b(0),
        b(1),
        b(2),
    ]
}

/// Coverage of the bias-corrected plug-in intervals at confidence `level`.
pub fn run_coverage(cfg: &ExperimentConfig, level: f64) -> Result<CoverageResult> {
    cfg.validate()?;
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::Config(format!("level {level} outside (0, 1)")));
    }
    let z = z_crit(1.0 - level);
    let mut rows = Vec::new();
    let mut residuals = Vec::new();
    for (cell, n, spec) in cfg.cells() {
        let truth = cfg.params(n, spec)?;
        let per_rep: Vec<Option<[f64; 8]>> = (0..cfg.replications)
            .into_par_iter()
            .map(|r| {
                let g = sample_graph(&truth, replication_seed(cfg.seed, cell, r));
                let fit = Fitted::from_graph(&g, Method::Auto, true).ok()?;
                let res = standardized_residuals(&fit, &truth);
                res.iter().all(|x| x.is_finite()).then_some(res)
            })
            .collect();
        let ok: Vec<(usize, [f64; 8])> = per_rep.iter().enumerate().filter_map(|(r, x)| x.map(|x| (r, x))).collect();
        for (k, name) in COVERAGE_PARAMS.iter().enumerate() {
            let covered = ok.iter().filter(|(_, x)| x[k].abs() <= z).count();
            rows.push(CoverageRow {
                n,
                theta_spec: spec.to_string(),
                parameter: name.to_string(),
                level,
                replications: cfg.replications,
                successes: ok.len(),
                degenerate: cfg.replications - ok.len(),
                covered,
                coverage: (!ok.is_empty()).then(|| covered as f64 / ok.len() as f64),
            });
        }
        for (r, x) in &ok {
            for (k, name) in COVERAGE_PARAMS.iter().enumerate() {
                residuals.push(Residual {
                    n,
                    theta_spec: spec.to_string(),
                    replication: *r,
                    parameter: name.to_string(),
                    value: x[k],
                });
            }
        }
    }
    Ok(CoverageResult { rows, residuals })
}

/// Empirical moments of `θ̂` and `ρ̂` against the asymptotic table at the
/// true parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarianceRow {
    pub n: usize,
    pub theta_spec: String,
    pub successes: usize,
    pub degenerate: usize,
    pub var_theta: f64,
    pub var_rho: f64,
    pub bias_theta: f64,
    pub bias_rho: f64,
    pub sigma_theta2: f64,
    pub sigma_rho2: f64,
    pub theta_star: f64,
    pub rho_star: f64,
}

pub fn run_variance(cfg: &ExperimentConfig) -> Result<Vec<VarianceRow>> {
    cfg.validate()?;
    let mut rows = Vec::new();
    for (cell, n, spec) in cfg.cells() {
        let truth = cfg.params(n, spec)?;
        let table = global_table(&dyad_probs(&truth))?;
        let est: Vec<(f64, f64)> = (0..cfg.replications)
            .into_par_iter()
            .filter_map(|r| {
                let g = sample_graph(&truth, replication_seed(cfg.seed, cell, r));
                let e = estimate_graph(&g, Method::Auto).ok()?;
                (e.rho.is_finite() && e.theta.is_finite()).then_some((e.theta - truth.theta, e.rho - truth.rho))
            })
            .collect();
        let th: Vec<f64> = est.iter().map(|e| e.0).collect();
        let rh: Vec<f64> = est.iter().map(|e| e.1).collect();
        let nan_if_short = |f: fn(&[f64]) -> f64, x: &[f64]| if x.len() < 2 { f64::NAN } else { f(x) };
        rows.push(VarianceRow {
            n,
            theta_spec: spec.to_string(),
            successes: est.len(),
            degenerate: cfg.replications - est.len(),
            var_theta: nan_if_short(variance, &th),
            var_rho: nan_if_short(variance, &rh),
            bias_theta: nan_if_short(mean, &th),
            bias_rho: nan_if_short(mean, &rh),
            sigma_theta2: table.sigma_theta2,
            sigma_rho2: table.sigma_rho2,
            theta_star: table.theta_star,
            rho_star: table.rho_star,
        });
    }
    Ok(rows)
}

fn opt(x: Option<f64>) -> String {
    x.map_or(String::new(), |v| v.to_string())
}

pub fn error_table_csv(rows: &[ErrorRow]) -> String {
    let mut s = String::from(
        "n,theta_spec,theta,estimator,replications,successes,degenerate,mean_abs_theta,mean_abs_rho,mean_sup_alpha,mean_abs_alpha_1,mean_abs_alpha_mid,mean_abs_alpha_n\n",
    );
    for r in rows {
        let nodes = r.mean_abs_alpha_nodes.map_or([None; 3], |a| a.map(Some));
        writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.n,
            r.theta_spec,
            r.theta,
            r.estimator,
            r.replications,
            r.successes,
            r.degenerate,
            opt(r.mean_abs_theta),
            opt(r.mean_abs_rho),
            opt(r.mean_sup_alpha),
            opt(nodes[0]),
            opt(nodes[1]),
            opt(nodes[2])
        )
        .unwrap();
    }
    s
}

pub fn timing_csv(rows: &[TimingRow]) -> String {
    let mut s = String::from("n,theta_spec,repetitions,tdre_seconds,mle_seconds,ratio,tdre_failures,mle_failures\n");
    for r in rows {
        writeln!(
            s,
            "{},{},{},{},{},{},{},{}",
            r.n,
            r.theta_spec,
            r.repetitions,
            opt(r.tdre_seconds),
            opt(r.mle_seconds),
            opt(r.ratio()),
            r.tdre_failures,
            r.mle_failures
        )
        .unwrap();
    }
    s
}

pub fn coverage_csv(rows: &[CoverageRow]) -> String {
    let mut s = String::from("n,theta_spec,parameter,level,replications,successes,degenerate,covered,coverage\n");
    for r in rows {
        writeln!(
            s,
            "{},{},{},{},{},{},{},{},{}",
            r.n,
            r.theta_spec,
            r.parameter,
            r.level,
            r.replications,
            r.successes,
            r.degenerate,
            r.covered,
            opt(r.coverage)
        )
        .unwrap();
    }
    s
}

pub fn residuals_csv(rows: &[Residual]) -> String {
    let mut s = String::from("n,theta_spec,replication,parameter,value\n");
    for r in rows {
        writeln!(s, "{},{},{},{},{}", r.n, r.theta_spec, r.replication, r.parameter, r.value).unwrap();
    }
    s
}

/// Everything one suite run produces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteResult {
    pub config: ExperimentConfig,
    pub errors: Vec<ErrorRow>,
    pub coverage: Vec<CoverageRow>,
    #[serde(skip)]
    pub residuals: Vec<Residual>,
    /// Present only when timing was requested.
    #[serde(skip)]
    pub timing: Option<Vec<TimingRow>>,
}

/// Error table and coverage, plus timing when `timing` is set and the MLE
/// is among the estimators.
pub fn run_suite(cfg: &ExperimentConfig, timing: bool) -> Result<SuiteResult> {
    let errors = run_error_table(cfg)?;
    let cov = run_coverage(cfg, cfg.level)?;
    let timing = if timing && cfg.estimators.contains(&EstimatorKind::Mle) { Some(run_timing(cfg)?) } else { None };
    Ok(SuiteResult { config: cfg.clone(), errors, coverage: cov.rows, residuals: cov.residuals, timing })
}

/// Writes `errors.csv`, `coverage.csv`, `residuals.csv`, `summary.json`
/// and (if present) `timing.csv` into `dir`. Only `timing.csv` holds
/// wall-clock values.
pub fn write_suite(res: &SuiteResult, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut files = vec![
        (dir.join("errors.csv"), error_table_csv(&res.errors)),
        (dir.join("coverage.csv"), coverage_csv(&res.coverage)),
        (dir.join("residuals.csv"), residuals_csv(&res.residuals)),
        (
            dir.join("summary.json"),
            serde_json::to_string_pretty(res).map_err(|e| Error::Io(e.to_string()))? + "\n",
        ),
    ];
    if let Some(t) = &res.timing {
        files.push((dir.join("timing.csv"), timing_csv(t)));
    }
    for (p, text) in &files {
        fs::write(p, text)?;
    }
    Ok(files.into_iter().map(|(p, _)| p).collect())
}
