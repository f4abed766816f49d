//! Command-line front end.
//!
//! Reports go to stdout (or `--output`) as JSON, a one-line summary goes to
//! stderr. Exit status is 0 on success, 1 for malformed input and 2 when
//! the data are degenerate or the MLE does not converge. Set
//! `TDRE_THREADS` to fix the worker count.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use tdre::analysis::{analyze, DEFAULT_MIN_DEGREE};
use tdre::experiments::{run_suite, write_suite, ExperimentConfig, ThetaSpec};
use tdre::inference::{compare_graphs, test_equality, test_reciprocity, Fitted, Side};
use tdre::io::{node_csv, parse_edge_list, read_params, write_edge_list, write_params};
use tdre::mle::{fit_mle_from, MleInit};
use tdre::model::{linear_design, sample_graph, sample_graph_sparse, Digraph};
use tdre::{estimate_graph, Error, Method, Result};

const THREADS_VAR: &str = "TDRE_THREADS";

#[derive(Parser)]
#[command(name = "tdre", version, about = "Triple-dyad ratio estimation for directed networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct GraphInput {
    /// Edge list, one `src,dst` pair per line.
    #[arg(long)]
    input: PathBuf,
    /// Node count; defaults to the file's `# nodes=` line or the largest index plus one.
    #[arg(long)]
    nodes: Option<usize>,
}

impl GraphInput {
    fn load(&self) -> Result<Digraph> {
        parse_edge_list(&self.input, self.nodes)
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Dense,
    Sparse,
    Auto,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Method {
        match m {
            MethodArg::Dense => Method::Dense,
            MethodArg::Sparse => Method::Sparse,
            MethodArg::Auto => Method::Auto,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum SideArg {
    Alpha,
    Beta,
}

#[derive(Clone, Copy, ValueEnum)]
enum InitArg {
    Tdre,
    Zeros,
}

#[derive(Subcommand)]
enum Command {
    /// Sample a graph from the model.
    Simulate {
        /// Node count for the linear design.
        #[arg(long, required_unless_present = "params")]
        n: Option<usize>,
        #[arg(long, default_value_t = 0.5)]
        rho: f64,
        /// Constant, `-log(n)/c` or `-log(log(n))`.
        #[arg(long, default_value = "0", allow_hyphen_values = true)]
        theta: String,
        /// Parameter file (JSON) instead of the linear design.
        #[arg(long, conflicts_with = "n")]
        params: Option<PathBuf>,
        #[arg(long)]
        seed: u64,
        /// Use the edge-proportional sampler.
        #[arg(long)]
        sparse: bool,
        /// Edge-list destination.
        #[arg(long)]
        output: PathBuf,
        /// Also write the true parameters here.
        #[arg(long)]
        params_out: Option<PathBuf>,
    },
    /// Ratio estimates of all parameters.
    Estimate {
        #[command(flatten)]
        graph: GraphInput,
        #[arg(long, value_enum, default_value = "auto")]
        method: MethodArg,
        /// Add plug-in standard errors and bias terms.
        #[arg(long)]
        se: bool,
        /// Per-node CSV destination.
        #[arg(long)]
        node_csv: Option<PathBuf>,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Maximum-likelihood fit.
    Mle {
        #[command(flatten)]
        graph: GraphInput,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
        #[arg(long, default_value_t = 1000)]
        max_iter: usize,
        #[arg(long, value_enum, default_value = "tdre")]
        init: InitArg,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Test `rho = rho0` with the bias-corrected statistic.
    TestReciprocity {
        #[command(flatten)]
        graph: GraphInput,
        /// Significance level.
        #[arg(long, default_value_t = 0.05)]
        level: f64,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        rho0: f64,
        #[arg(long, value_enum, default_value = "auto")]
        method: MethodArg,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Test equality of expansiveness or popularity across nodes.
    TestEquality {
        #[command(flatten)]
        graph: GraphInput,
        #[arg(long, value_enum)]
        side: SideArg,
        /// Comma-separated node indices (at least two).
        #[arg(long, value_delimiter = ',', required = true)]
        indices: Vec<usize>,
        #[arg(long, default_value_t = 0.05)]
        level: f64,
        #[arg(long, value_enum, default_value = "auto")]
        method: MethodArg,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Compare the reciprocity of two independent graphs.
    Compare {
        #[command(flatten)]
        graph: GraphInput,
        /// Second edge list.
        #[arg(long)]
        other: PathBuf,
        #[arg(long)]
        other_nodes: Option<usize>,
        #[arg(long, default_value_t = 0.05)]
        level: f64,
        #[arg(long, value_enum, default_value = "auto")]
        method: MethodArg,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Degree-filtered estimation and reciprocity test for observed data.
    Analyze {
        #[command(flatten)]
        graph: GraphInput,
        #[arg(long, default_value_t = DEFAULT_MIN_DEGREE)]
        min_in: usize,
        #[arg(long, default_value_t = DEFAULT_MIN_DEGREE)]
        min_out: usize,
        #[arg(long, default_value_t = 0.05)]
        level: f64,
        #[arg(long, default_value_t = 20)]
        bins: usize,
        #[arg(long, value_enum, default_value = "auto")]
        method: MethodArg,
        #[arg(long)]
        node_csv: Option<PathBuf>,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Run a simulation suite from a TOML or JSON config.
    Bench {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the config's seed.
        #[arg(long)]
        seed: u64,
        /// Output directory; defaults to the config's `outputs`, then `bench-out`.
        #[arg(long)]
        out_dir: Option<PathBuf>,
        /// Also time TDRE against the MLE.
        #[arg(long)]
        timing: bool,
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

struct Outcome {
    report: Value,
    summary: String,
    output: Option<PathBuf>,
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    Ok(fs::write(path, text)?)
}

fn fitted(g: &Digraph, method: MethodArg, nodes: bool) -> Result<Fitted> {
    let est = estimate_graph(g, method.into())?;
    Fitted::new(est, nodes)
}

fn run(cmd: Command) -> Result<Outcome> {
    match cmd {
        Command::Simulate { n, rho, theta, params, seed, sparse, output, params_out } => {
            let v = match (params, n) {
                (Some(p), _) => read_params(&p)?,
                (None, Some(n)) => linear_design(n, rho, theta.parse::<ThetaSpec>()?.value(n)?)?,
                (None, None) => return Err(Error::Config("either --n or --params is required".into())),
            };
            let g = if sparse { sample_graph_sparse(&v, seed) } else { sample_graph(&v, seed) };
            write_edge_list(&g, &output)?;
            if let Some(p) = &params_out {
                write_params(&v, p)?;
            }
            let summary = format!("sampled {} nodes, {} edges, {} mutual dyads", g.n(), g.edge_count(), g.mutual_dyads());
            let report = json!({
                "n": g.n(),
                "edges": g.edge_count(),
                "mutual_dyads": g.mutual_dyads(),
                "seed": seed,
                "edge_list": output,
                "params": params_out,
            });
            Ok(Outcome { report, summary, output: None })
        }
        Command::Estimate { graph, method, se, node_csv: csv, output } => {
            let g = graph.load()?;
            let est = estimate_graph(&g, method.into())?;
            let table = if se { Some(Fitted::new(est.clone(), true)?.table) } else { None };
            if let Some(p) = &csv {
                write_text(p, &node_csv(&est, table.as_ref()))?;
            }
            let summary = format!("theta = {:.6}, rho = {:.6}, {} skipped nodes", est.theta, est.rho, est.skipped.len());
            Ok(Outcome { report: json!({ "estimate": est, "asymptotics": table }), summary, output })
        }
        Command::Mle { graph, tol, max_iter, init, output } => {
            let g = graph.load()?;
            let init = match init {
                InitArg::Tdre => MleInit::Tdre,
                InitArg::Zeros => MleInit::Zeros,
            };
            let r = fit_mle_from(&g, tol, max_iter, init)?;
            let summary = format!(
                "theta = {:.6}, rho = {:.6} after {} sweeps",
                r.theta_tilde.theta, r.theta_tilde.rho, r.iterations
            );
            Ok(Outcome { report: json!(r), summary, output })
        }
        Command::TestReciprocity { graph, level, rho0, method, output } => {
            let fit = fitted(&graph.load()?, method, false)?;
            let t = test_reciprocity(&fit, level, rho0)?;
            let summary = format!("statistic {:.4}, p = {:.4e}, reject = {}", t.statistic, t.p_value, t.reject);
            let report = json!({ "test": t, "rho_hat": fit.estimate.rho, "rho_star": fit.table.rho_star, "sigma_rho": fit.table.sigma_rho2.sqrt() });
            Ok(Outcome { report, summary, output })
        }
        Command::TestEquality { graph, side, indices, level, method, output } => {
            let fit = fitted(&graph.load()?, method, true)?;
            let side = match side {
                SideArg::Alpha => Side::Alpha,
                SideArg::Beta => Side::Beta,
            };
            let t = test_equality(&fit, side, &indices, level)?;
            let summary = format!("statistic {:.4}, p = {:.4e}, reject = {}", t.statistic, t.p_value, t.reject);
            Ok(Outcome { report: json!({ "test": t, "indices": indices }), summary, output })
        }
        Command::Compare { graph, other, other_nodes, level, method, output } => {
            let a = fitted(&graph.load()?, method, false)?;
            let b = fitted(&parse_edge_list(&other, other_nodes)?, method, false)?;
            let t = compare_graphs(&a, &b, level)?;
            let summary = format!("statistic {:.4}, p = {:.4e}, reject = {}", t.statistic, t.p_value, t.reject);
            let report = json!({
                "test": t,
                "rho_corrected": [a.rho_corrected(), b.rho_corrected()],
                "sigma_rho": [a.table.sigma_rho2.sqrt(), b.table.sigma_rho2.sqrt()],
            });
            Ok(Outcome { report, summary, output })
        }
        Command::Analyze { graph, min_in, min_out, level, bins, method, node_csv: csv, output } => {
            let g = graph.load()?;
            let r = analyze(&g, min_in, min_out, level, bins, method.into())?;
            if let Some(p) = &csv {
                write_text(p, &node_csv(&r.estimate, None))?;
            }
            let summary = format!(
                "|Gamma| = {}, rho = {:.6}, reciprocity p = {:.4e}",
                r.gamma_size, r.estimate.rho, r.reciprocity.p_value
            );
            Ok(Outcome { report: json!(r), summary, output })
        }
        Command::Bench { config, seed, out_dir, timing, output } => {
            let mut cfg = ExperimentConfig::from_path(&config)?;
            cfg.seed = seed;
            let dir = out_dir.or_else(|| cfg.outputs.clone()).unwrap_or_else(|| PathBuf::from("bench-out"));
            let res = run_suite(&cfg, timing)?;
            let files = write_suite(&res, &dir)?;
            let summary = format!("{} error rows, {} coverage rows written to {}", res.errors.len(), res.coverage.len(), dir.display());
            let report = json!({ "files": files, "errors": res.errors, "coverage": res.coverage, "timing": res.timing });
            Ok(Outcome { report, summary, output })
        }
    }
}

fn error_value(e: &Error) -> Value {
    let mut v = json!({ "kind": e.kind(), "message": e.to_string() });
    match e {
        Error::DegenerateCounts { nodes } => v["nodes"] = json!(nodes),
        Error::Parse { line, .. } => v["line"] = json!(line),
        Error::SelfLoop(line) | Error::DuplicateEdge(line) => v["line"] = json!(line),
        Error::NotConverged(g) => v["grad_norm"] = json!(g),
        _ => {}
    }
    json!({ "error": v })
}

fn emit(value: &Value, output: Option<&Path>) -> std::result::Result<(), String> {
    let text = serde_json::to_string_pretty(value).expect("json") + "\n";
    match output {
        Some(p) => fs::write(p, text).map_err(|e| e.to_string()),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn init_threads() -> std::result::Result<(), String> {
    let Ok(v) = std::env::var(THREADS_VAR) else { return Ok(()) };
    let n: usize = v.parse().map_err(|_| format!("{THREADS_VAR} must be a positive integer, got {v:?}"))?;
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| e.to_string())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let msg = e.to_string();
            eprint!("{msg}");
            let _ = emit(&json!({ "error": { "kind": "Usage", "message": msg.trim() } }), None);
            return ExitCode::from(1);
        }
    };
    if let Err(msg) = init_threads() {
        eprintln!("{msg}");
        let _ = emit(&json!({ "error": { "kind": "Config", "message": msg } }), None);
        return ExitCode::from(1);
    }
    let output = match &cli.command {
        Command::Estimate { output, .. }
        | Command::Mle { output, .. }
        | Command::TestReciprocity { output, .. }
        | Command::TestEquality { output, .. }
        | Command::Compare { output, .. }
        | Command::Analyze { output, .. }
        | Command::Bench { output, .. } => output.clone(),
        Command::Simulate { .. } => None,
    };
    match run(cli.command) {
        Ok(o) => {
            eprintln!("{}", o.summary);
            match emit(&o.report, o.output.as_deref()) {
                Ok(()) => ExitCode::SUCCESS,
                Err(msg) => {
                    eprintln!("error: {msg}");
                    ExitCode::from(1)
                }
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            let _ = emit(&error_value(&e), output.as_deref());
            ExitCode::from(if e.is_degeneracy() { 2 } else { 1 })
        }
    }
}
