//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Run with `cargo test -p tdre-core --test acceptance`. Pass criterion
//! numbers (e.g. `-- 1 3 9`) to run a subset.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::OnceLock;
use std::time::Instant;

use num_bigint::BigInt;
use num_rational::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use common::{alpha_count, beta_count, diag_count, naive_asymptotics, COMBOS};
use tdre::asymptotics::{eta_zeta, g_m, kappa_xi, mu_values, variance_table, Combo};
use tdre::estimator::{alpha_terms, beta_terms, estimate_global_sparse, estimate_rho, estimate_theta, graph_counts, triple_counts, triple_counts_sparse, MethodTag};
use tdre::experiments::{
    error_table_csv, replication_seed, residuals_csv, run_coverage, run_error_table, run_timing, run_variance,
    CoverageResult, EstimatorKind, ExperimentConfig, ThetaSpec,
};
use tdre::inference::{normal_cdf, test_reciprocity, Fitted};
use tdre::mle::{fit_mle, log_likelihood, score_residual};
use tdre::model::{dyad_probs, linear_design, sample_graph, sample_graph_sparse, Config, Digraph, DyadProbTable, ParamVector};
use tdre::stats::ks_distance;
use tdre::{estimate_graph, tally, Method, SparseTally};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn random_params(n: usize, rng: &mut ChaCha8Rng, scale: f64) -> ParamVector {
    let mut u = || scale * (2.0 * rng.random::<f64>() - 1.0);
    let alpha = (0..n).map(|_| u()).collect();
    let beta = (0..n).map(|_| u()).collect();
    ParamVector::new(u(), u(), alpha, beta).unwrap()
}

fn lr(a: u64, b: u64) -> Option<f64> {
    (a > 0 && b > 0).then(|| (a as f64 / b as f64).ln())
}

fn mean_opt(n: usize, f: impl Fn(usize) -> Option<f64>) -> Option<f64> {
    let mut s = 0.0;
    for t in 0..n {
        s += f(t)?;
    }
    Some(s / n as f64)
}

/// Compares every count and estimate of `g` with its defining sum.
/// Returns `(counts exact and degeneracy agrees, max estimate error,
/// defined estimates checked)`.
fn oracle_check(g: &Digraph) -> (bool, f64, usize) {
    use Config::*;
    let n = g.n();
    let dense = triple_counts(&tally(g));
    let mut exact = dense == triple_counts_sparse(&SparseTally::from_graph(g));
    for a in 0..n {
        exact &= dense.b1(a, a) == diag_count(g, C01, C00, a);
        exact &= dense.b2(a, a) == diag_count(g, C00, C01, a);
        exact &= dense.b3_diag[a] == diag_count(g, C11, C10, a);
        exact &= dense.b4_diag[a] == diag_count(g, C10, C11, a);
        for b in 0..n {
            exact &= dense.b1(b, a) == alpha_count(g, C01, C00, a, b);
            exact &= dense.b2(a, b) == alpha_count(g, C00, C01, a, b);
            exact &= dense.b1(a, b) == beta_count(g, C01, C00, a, b);
            exact &= dense.b2(b, a) == beta_count(g, C00, C01, a, b);
        }
    }
    let d = dense.diagonals();
    let mut err: f64 = 0.0;
    let mut checked = 0;
    let mut defined = true;
    let mut agree = |got: Option<f64>, want: Option<f64>, exact: &mut bool| match (got, want) {
        (Some(a), Some(b)) => {
            err = err.max((a - b).abs());
            checked += 1;
        }
        (None, None) => defined = false,
        _ => *exact = false,
    };
    let theta = mean_opt(n, |t| lr(diag_count(g, C01, C00, t), diag_count(g, C00, C01, t)));
    agree(estimate_theta(&d).ok().map(|x| x.0), theta, &mut exact);
    if let Some(th) = theta {
        let rho = mean_opt(n, |t| lr(diag_count(g, C11, C10, t), diag_count(g, C10, C11, t))).map(|r| r - th);
        agree(estimate_rho(&d, th).ok().map(|x| x.0), rho, &mut exact);
    }
    let (at, bt) = (alpha_terms(&dense).ok(), beta_terms(&dense).ok());
    let mut all_nodes = true;
    for i in 0..n {
        let a = mean_opt(n, |t| lr(alpha_count(g, C01, C00, i, t), alpha_count(g, C00, C01, i, t)));
        let b = mean_opt(n, |t| lr(beta_count(g, C01, C00, i, t), beta_count(g, C00, C01, i, t)));
        all_nodes &= a.is_some() && b.is_some();
        if let (Some(at), Some(a)) = (&at, a) {
            err = err.max((at[i] - a).abs());
            checked += 1;
        }
        if let (Some(bt), Some(b)) = (&bt, b) {
            err = err.max((bt[i] - b).abs());
            checked += 1;
        }
    }
    exact &= at.is_some() == (0..n).all(|i| mean_opt(n, |t| lr(alpha_count(g, C01, C00, i, t), alpha_count(g, C00, C01, i, t))).is_some());
    exact &= bt.is_some() == (0..n).all(|i| mean_opt(n, |t| lr(beta_count(g, C01, C00, i, t), beta_count(g, C00, C01, i, t))).is_some());
    match estimate_graph(g, Method::Dense) {
        Ok(est) => {
            exact &= defined && all_nodes;
            if let (Ok((th, _)), Some(at)) = (estimate_theta(&d), &at) {
                err = (0..n).map(|i| (est.alpha[i] - (at[i] - th)).abs()).fold(err, f64::max);
            }
        }
        Err(_) => exact &= !(defined && all_nodes),
    }
    (exact, err, checked)
}

fn criterion_1() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut graphs = Vec::new();
    for s in 0..140u64 {
        let v = if s < 100 {
            let n = rng.random_range(3..=12);
            let scale = rng.random_range(0.0..1.5);
            random_params(n, &mut rng, scale)
        } else {
            // Balanced configurations large enough for defined estimates.
            let n = rng.random_range(24..=32);
            let a = (0..n).map(|_| rng.random_range(-0.1..0.1)).collect();
            let b = (0..n).map(|_| rng.random_range(-0.1..0.1)).collect();
            ParamVector::new(rng.random_range(-0.3..0.3), rng.random_range(-0.2..0.2), a, b).unwrap()
        };
        graphs.push(sample_graph(&v, s));
    }
    for n in [6, 12] {
        graphs.push(Digraph::empty(n));
        let tournament: Vec<(usize, usize)> = (0..n).flat_map(|i| ((i + 1)..n).map(move |j| (i, j))).collect();
        graphs.push(Digraph::from_edges(n, tournament).unwrap());
        graphs.push(Digraph::complete(n));
    }
    let (mut exact, mut err, mut checked) = (true, 0.0f64, 0);
    for g in &graphs {
        let (e, d, c) = oracle_check(g);
        exact &= e;
        err = err.max(d);
        checked += c;
    }
    outcome(
        exact && err <= 1e-12 && checked > 0,
        format!("{} graphs, counts exact = {exact}, {checked} defined estimates, max |error| = {err:.2e}", graphs.len()),
    )
}

fn criterion_2() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let n = rng.random_range(3..=10);
        let a: Vec<f64> = (0..n).map(|_| rng.random_range(-0.5..0.5)).collect();
        let b: Vec<f64> = (0..n).map(|_| rng.random_range(-0.5..0.5)).collect();
        let v = ParamVector::new(rng.random_range(-2.0..2.0), rng.random_range(-1.0..1.0), a, b).unwrap().center();
        assert!(v.sup_norm() <= 2.0 + 1e-12);
        let p = dyad_probs(&v);
        let mut pick = || rng.random_range(0..n);
        let (i, j, t) = loop {
            let (i, j, t) = (pick(), pick(), pick());
            if i != j && j != t && i != t {
                break (i, j, t);
            }
        };
        let lhs_theta = (p.p01[[i, t]] * p.p00[[i, j]] * p.p01[[t, j]] / (p.p00[[i, t]] * p.p01[[i, j]] * p.p00[[t, j]])).ln();
        let lhs_rho = (p.p11[[i, t]] * p.p10[[i, j]] * p.p11[[t, j]] / (p.p10[[i, t]] * p.p11[[i, j]] * p.p10[[t, j]])).ln();
        let base = v.theta + v.alpha[t] + v.beta[t];
        worst = worst.max((lhs_theta - base).abs()).max((lhs_rho - base - v.rho).abs());
    }
    outcome(worst <= 1e-10, format!("1000 draws, max |residual| = {worst:.2e}"))
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / (a.abs().max(b.abs()).max(1e-300))
}

fn worst_matrix(got: &ndarray::Array2<f64>, want: &[Vec<f64>]) -> f64 {
    let n = want.len();
    let mut w: f64 = 0.0;
    for i in 0..n {
        for j in (0..n).filter(|&j| j != i) {
            w = w.max(rel(got[[i, j]], want[i][j]));
        }
    }
    w
}

fn asymptotic_deviation(p: &DyadProbTable) -> [f64; 8] {
    let naive = naive_asymptotics(p);
    let mu = mu_values(p);
    let ez = eta_zeta(p, &mu).unwrap();
    let kx = kappa_xi(p, &mu).unwrap();
    let t = variance_table(p).unwrap();
    let mut d = [0.0f64; 8];
    for (c, combo) in Combo::ALL.into_iter().enumerate() {
        assert_eq!(combo.configs(), COMBOS[c]);
        for k in 0..p.n() {
            d[0] = d[0].max(rel(mu.t(combo)[k], naive.mu_t[c][k]));
        }
        d[0] = d[0].max(worst_matrix(mu.it(combo), &naive.mu_it[c]));
        d[1] = d[1].max(worst_matrix(ez.eta(combo), &naive.eta[c]));
        d[2] = d[2].max(worst_matrix(ez.zeta1(combo), &naive.zeta1[c])).max(worst_matrix(ez.zeta2(combo), &naive.zeta2[c]));
    }
    d[3] = worst_matrix(&kx.kappa1, &naive.kappa1).max(worst_matrix(&kx.kappa2, &naive.kappa2));
    d[4] = worst_matrix(&kx.xi1, &naive.xi1).max(worst_matrix(&kx.xi2, &naive.xi2));
    d[5] = rel(t.sigma_theta2, naive.sigma_theta2).max(rel(t.sigma_rho2, naive.sigma_rho2));
    for i in 0..p.n() {
        d[5] = d[5]
            .max(rel(t.sigma_alpha2[i], naive.sigma_alpha2[i]))
            .max(rel(t.sigma_beta2[i], naive.sigma_beta2[i]))
            .max(rel(t.sigma_cross[i], naive.sigma_cross[i]));
    }
    d[6] = rel(t.theta_star, naive.theta_star);
    d[7] = rel(t.rho_star, naive.rho_star);
    d
}

fn exact_g(x: &[f64], y: &[f64]) -> f64 {
    let r = |v: f64| BigRational::from_float(v).unwrap();
    let zero = BigRational::from_integer(BigInt::from(0));
    let sq = x.iter().zip(y).fold(zero.clone(), |s, (a, b)| s + r(*a) * r(*a) * r(*b));
    let lin = x.iter().zip(y).fold(zero, |s, (a, b)| s + r(*a) * r(*b));
    let e = sq - lin.clone() * lin;
    let scale = BigInt::from(10u64).pow(40);
    ((e.numer() * &scale) / e.denom()).to_string().parse::<f64>().unwrap() / 1e40
}

fn criterion_3() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst = [0.0f64; 8];
    for n in 4..=12 {
        let v = random_params(n, &mut rng, 1.0);
        for (w, d) in worst.iter_mut().zip(asymptotic_deviation(&dyad_probs(&v))) {
            *w = w.max(d);
        }
    }
    let mut g_worst: f64 = 0.0;
    for _ in 0..200 {
        let m = rng.random_range(1..6);
        let x: Vec<f64> = (0..m).map(|_| rng.random_range(-2.0..2.0)).collect();
        let y: Vec<f64> = (0..m).map(|_| rng.random_range(0.0..1.0 / m as f64)).collect();
        let e = exact_g(&x, &y);
        g_worst = g_worst.max((g_m(&x, &y).unwrap() - e).abs() / e.abs().max(1e-3));
    }
    let all = worst.iter().copied().fold(g_worst, f64::max);
    let names = ["mu", "eta", "zeta", "kappa", "xi", "sigma2", "theta*", "rho*"];
    let parts: Vec<String> = names.iter().zip(worst).map(|(k, v)| format!("{k} {v:.1e}")).collect();
    outcome(all <= 1e-10, format!("max relative deviation: {}, g_m {g_worst:.1e}", parts.join(", ")))
}

fn criterion_4() -> Outcome {
    let cfg = ExperimentConfig::new(vec![300], vec![ThetaSpec::Constant(0.0)], 2000, 4);
    let r = &run_variance(&cfg).unwrap()[0];
    let vt = r.var_theta / r.sigma_theta2;
    let vr = r.var_rho / r.sigma_rho2;
    let se_bias = (r.var_theta / r.successes as f64).sqrt();
    let z_bias = (r.bias_theta - r.theta_star) / se_bias;
    let pass = (vt - 1.0).abs() <= 0.15 && (vr - 1.0).abs() <= 0.15 && z_bias.abs() <= 3.0;
    outcome(
        pass,
        format!(
            "{} runs ({} degenerate): Var(theta)/sigma^2 = {vt:.3}, Var(rho)/sigma^2 = {vr:.3}, bias(theta) = {:.3e} vs theta* = {:.3e} ({z_bias:+.2} SE)",
            r.successes, r.degenerate, r.bias_theta, r.theta_star
        ),
    )
}

fn criterion_5() -> Outcome {
    let cfg = ExperimentConfig::new(vec![500], vec![ThetaSpec::Constant(0.0)], 200, 5);
    let r = &run_error_table(&cfg).unwrap()[0];
    let (t, p, a) = (r.mean_abs_theta.unwrap_or(f64::NAN), r.mean_abs_rho.unwrap_or(f64::NAN), r.mean_sup_alpha.unwrap_or(f64::NAN));
    let pass = (0.005..=0.02).contains(&t) && (0.006..=0.03).contains(&p) && (0.35..=0.8).contains(&a);
    outcome(pass, format!("{} runs: |theta| {t:.4}, |rho| {p:.4}, sup|alpha| {a:.3}", r.successes))
}

fn coverage_run() -> &'static CoverageResult {
    static RUN: OnceLock<CoverageResult> = OnceLock::new();
    RUN.get_or_init(|| {
        let cfg = ExperimentConfig::new(vec![300], vec![ThetaSpec::Constant(0.0)], 500, 6);
        run_coverage(&cfg, 0.95).unwrap()
    })
}

fn criterion_6() -> Outcome {
    let res = coverage_run();
    let required = ["rho", "theta", "alpha_1", "alpha_mid", "alpha_n", "beta_1"];
    let mut pass = true;
    let mut parts = Vec::new();
    for row in &res.rows {
        let c = row.coverage.unwrap_or(f64::NAN);
        if required.contains(&row.parameter.as_str()) {
            pass &= (0.925..=0.975).contains(&c);
        }
        parts.push(format!("{} {:.1}", row.parameter, 100.0 * c));
    }
    outcome(pass, format!("{} runs: {}", res.rows[0].successes, parts.join(", ")))
}

fn criterion_7() -> Outcome {
    let res = coverage_run();
    let pick = |name: &str| -> Vec<f64> { res.residuals.iter().filter(|r| r.parameter == name).map(|r| r.value).collect() };
    let (th, rh) = (pick("theta"), pick("rho"));
    let crit = 1.6276 / (th.len() as f64).sqrt();
    let (dt, dr) = (ks_distance(&th, normal_cdf), ks_distance(&rh, normal_cdf));
    outcome(dt < crit && dr < crit, format!("{} residuals: KS theta {dt:.4}, rho {dr:.4}, 1% critical {crit:.4}", th.len()))
}

fn rejection_rate(n: usize, rho: f64, reps: usize, seed: u64) -> (f64, usize) {
    let v = linear_design(n, rho, 0.0).unwrap();
    let decisions: Vec<Option<bool>> = (0..reps)
        .into_par_iter()
        .map(|r| {
            let g = sample_graph(&v, replication_seed(seed, 0, r));
            let fit = Fitted::from_graph(&g, Method::Auto, false).ok()?;
            test_reciprocity(&fit, 0.05, 0.0).ok().map(|t| t.reject)
        })
        .collect();
    let ok: Vec<bool> = decisions.into_iter().flatten().collect();
    (ok.iter().filter(|&&x| x).count() as f64 / ok.len() as f64, ok.len())
}

fn criterion_8() -> Outcome {
    let (size, m0) = rejection_rate(300, 0.0, 500, 8);
    let (power, m1) = rejection_rate(500, 0.5, 200, 9);
    outcome(
        (0.03..=0.08).contains(&size) && power >= 0.9,
        format!("size {size:.3} over {m0} runs at n=300, power {power:.3} over {m1} runs at n=500"),
    )
}

fn criterion_9() -> Outcome {
    let mut worst_score: f64 = 0.0;
    let mut worst_gap = f64::INFINITY;
    let mut fits = 0;
    for (k, v) in [ParamVector::zeros(200), linear_design(200, 0.5, 0.0).unwrap()].iter().enumerate() {
        for s in 0..3 {
            let g = sample_graph(v, 900 + 10 * k as u64 + s);
            let m = fit_mle(&g, 1e-8, 1000).unwrap();
            worst_score = worst_score.max(score_residual(&g, &m.theta_tilde));
            if let Ok(t) = estimate_graph(&g, Method::Auto).and_then(|e| e.to_params()) {
                worst_gap = worst_gap.min(m.log_lik - log_likelihood(&g, &t));
            }
            fits += 1;
        }
    }
    let mut cfg = ExperimentConfig::new(vec![500, 1000, 2000], vec![ThetaSpec::Constant(0.0)], 1, 10);
    cfg.estimators = vec![EstimatorKind::Tdre, EstimatorKind::Mle];
    cfg.timing_repetitions = 10;
    let rows = run_timing(&cfg).unwrap();
    let mut order = true;
    let mut parts = Vec::new();
    for r in &rows {
        let (t, m) = (r.tdre_seconds.unwrap_or(f64::NAN), r.mle_seconds.unwrap_or(f64::NAN));
        order &= t < m;
        if r.n == 2000 {
            order &= t / m < 1.0 / 3.0;
        }
        parts.push(format!("n={} {t:.3}s vs {m:.3}s", r.n));
    }
    let pass = worst_score <= 1e-8 && worst_gap >= -1e-8 && order;
    outcome(
        pass,
        format!(
            "{fits} fits: max score residual {worst_score:.1e}, min loglik gain {worst_gap:.3e}; timing {}; ratio at 2000 {:.3}",
            parts.join(", "),
            rows[2].ratio().unwrap_or(f64::NAN)
        ),
    )
}

fn peak_rss_kib() -> Option<u64> {
    let s = std::fs::read_to_string("/proc/self/status").ok()?;
    let line = s.lines().find(|l| l.starts_with("VmHWM"))?;
    line.split_whitespace().nth(1)?.parse().ok()
}

fn criterion_10() -> Outcome {
    let mut equal = true;
    let mut instances = 0;
    for (n, spec) in [(200, "0"), (600, "-log(n)/4"), (1000, "-log(n)/2"), (2000, "-log(n)/2")] {
        let v = linear_design(n, 0.5, spec.parse::<ThetaSpec>().unwrap().value(n).unwrap()).unwrap();
        let g = sample_graph(&v, n as u64);
        let (d, _) = graph_counts(&g, Method::Dense);
        let (s, tag) = graph_counts(&g, Method::Sparse);
        equal &= tag == MethodTag::Sparse && d == s;
        instances += 1;
    }
    let n = 100_000;
    let theta = (1e-3f64).ln();
    let v = ParamVector::new(0.5, theta, vec![0.0; n], vec![0.0; n]).unwrap();
    let g = sample_graph_sparse(&v, 10);
    let density = g.edge_count() as f64 / (n * (n - 1)) as f64;
    let start = Instant::now();
    let est = estimate_global_sparse(&SparseTally::from_graph(&g));
    let secs = start.elapsed().as_secs_f64();
    let rss_gib = peak_rss_kib().map_or(f64::NAN, |k| k as f64 / (1024.0 * 1024.0));
    let (theta_hat, rho_note) = match &est {
        Ok(e) => {
            let d = &e.counts;
            let usable = (0..n).filter(|&t| d.b3[t] > 0 && d.b4[t] > 0).count();
            let rho = match e.rho {
                Some(r) => format!("rho {r:.4}"),
                None => format!("rho undefined ({} of {n} anchors lack mutual triples, {usable} usable)", e.rho_degenerate.len()),
            };
            (e.theta, rho)
        }
        Err(err) => (f64::NAN, format!("error {err}")),
    };
    let pass = equal && secs <= 300.0 && rss_gib <= 4.0 && (theta_hat - theta).abs() < 0.05;
    outcome(
        pass,
        format!(
            "dense == sparse on {instances} instances: {equal}; n=1e5 density {density:.2e}: {secs:.1}s, peak RSS {rss_gib:.2} GiB, theta {theta_hat:.4} (true {theta:.4}), {rho_note}"
        ),
    )
}

fn determinism_fingerprint() -> String {
    let mut cfg = ExperimentConfig::new(vec![100, 160], vec![ThetaSpec::Constant(0.0), ThetaSpec::LogLog], 6, 11);
    cfg.estimators = vec![EstimatorKind::Tdre, EstimatorKind::Mle];
    let mut out = error_table_csv(&run_error_table(&cfg).unwrap());
    out += &residuals_csv(&run_coverage(&cfg, 0.95).unwrap().residuals);
    let g = sample_graph(&linear_design(400, 0.5, 0.0).unwrap(), 3);
    out += &serde_json::to_string(&estimate_graph(&g, Method::Dense).unwrap()).unwrap();
    out += &serde_json::to_string(&estimate_graph(&g, Method::Sparse).unwrap()).unwrap();
    let s = sample_graph_sparse(&ParamVector::new(0.5, -6.0, vec![0.0; 5000], vec![0.0; 5000]).unwrap(), 4);
    out += &format!("{:?}", estimate_global_sparse(&SparseTally::from_graph(&s)).map(|e| (e.theta, e.rho)));
    out
}

fn criterion_11() -> Outcome {
    let prints: Vec<String> = [1, 4, 8]
        .iter()
        .map(|&k| rayon::ThreadPoolBuilder::new().num_threads(k).build().unwrap().install(determinism_fingerprint))
        .collect();
    let same = prints.windows(2).all(|w| w[0] == w[1]);
    outcome(same, format!("{} bytes of output, identical across 1/4/8 threads: {same}", prints[0].len()))
}

const CRITERIA: [(&str, fn() -> Outcome); 11] = [
    ("oracle equivalence", criterion_1),
    ("analytic identities", criterion_2),
    ("formula transcription", criterion_3),
    ("variance semantics", criterion_4),
    ("error table spot-check", criterion_5),
    ("coverage", criterion_6),
    ("normality", criterion_7),
    ("test size and power", criterion_8),
    ("MLE contract and timing", criterion_9),
    ("sparse fast path", criterion_10),
    ("determinism", criterion_11),
];

fn main() {
    let wanted: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    for (k, (name, run)) in CRITERIA.iter().enumerate() {
        let id = k + 1;
        if !wanted.is_empty() && !wanted.contains(&id) {
            continue;
        }
        let start = Instant::now();
        let res = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            outcome(false, format!("panicked: {msg}"))
        });
        let tag = if res.pass { "PASS" } else { "FAIL" };
        println!("criterion {id:>2} {tag}  {name}: {} [{:.1}s]", res.detail, start.elapsed().as_secs_f64());
        failed += usize::from(!res.pass);
    }
    if failed > 0 {
        println!("{failed} criterion(s) failed");
        std::process::exit(1);
    }
}
