//! Maximum-likelihood fitting by cyclic coordinate ascent.
//!
//! With `x = e^{θ+α_i+β_j}`, `y = e^{θ+α_j+β_i}` and `r = e^ρ` the dyad
//! law is `(1, y, x, xyr)/(1 + x + y + xyr)`, so
//! `E[X_ij] = x(1 + yr)/(1 + y + x(1 + yr))`: a logistic function of `α_i`
//! (and of `β_j`) with the other parameters held fixed. Each sweep solves
//! the one-dimensional score equation of every `α_i` and `β_j` in turn,
//! then takes a Newton step in `(θ, ρ)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::{estimate_graph, Method};
use crate::model::{log_norm_const, Digraph, ParamVector};
use crate::stats::CompensatedSum;

/// `Σ_{i<j} log p_ij^{(X_ij, X_ji)}(Θ)`.
pub fn log_likelihood(g: &Digraph, v: &ParamVector) -> f64 {
    let n = g.n();
    let mut s = CompensatedSum::new();
    for i in 0..n {
        for j in (i + 1)..n {
            let e_ij = v.theta + v.alpha[i] + v.beta[j];
            let e_ji = v.theta + v.alpha[j] + v.beta[i];
            let (a, b) = (g.has_edge(i, j), g.has_edge(j, i));
            let mut l = -log_norm_const(e_ij, e_ji, v.rho);
            if a {
                l += e_ij;
            }
            if b {
                l += e_ji;
            }
            if a && b {
                l += v.rho;
            }
            s.add(l);
        }
    }
    s.value()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MleInit {
    /// Ratio estimates when they exist, zeros otherwise.
    Tdre,
    Zeros,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MleResult {
    /// Centred estimates.
    pub theta_tilde: ParamVector,
    pub log_lik: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Largest absolute score-equation residual.
    pub grad_norm: f64,
}

/// Observed sufficient statistics.
struct Observed {
    out_deg: Vec<f64>,
    in_deg: Vec<f64>,
    edges: f64,
    mutual: f64,
}

impl Observed {
    fn new(g: &Digraph) -> Self {
        Observed {
            out_deg: g.out_degrees().into_iter().map(|d| d as f64).collect(),
            in_deg: g.in_degrees().into_iter().map(|d| d as f64).collect(),
            edges: g.edge_count() as f64,
            mutual: g.mutual_dyads() as f64,
        }
    }
}

/// Exponentiated state: `ea_i = e^{θ+α_i}`, `eb_j = e^{β_j}`, `r = e^ρ`.
struct State {
    theta: f64,
    rho: f64,
    alpha: Vec<f64>,
    beta: Vec<f64>,
}

impl State {
    fn from_params(v: &ParamVector) -> Self {
        State { theta: v.theta, rho: v.rho, alpha: v.alpha.clone(), beta: v.beta.clone() }
    }

    fn to_params(&self) -> Result<ParamVector> {
        ParamVector::new(self.rho, self.theta, self.alpha.clone(), self.beta.clone()).map(|v| v.center())
    }

    fn finite(&self) -> bool {
        self.theta.is_finite()
            && self.rho.is_finite()
            && self.alpha.iter().chain(&self.beta).all(|x| x.is_finite())
    }
}

/// Solves `Σ_j w B_j/(C_j + w B_j) = target` for `log w`, starting at `x0`.
fn solve_logistic_sum(x0: f64, target: f64, terms: &[(f64, f64)]) -> f64 {
    let mut x = x0;
    for _ in 0..4 {
        let w = x.exp();
        let (mut f, mut d) = (0.0, 0.0);
        for &(b, c) in terms {
            let den = c + w * b;
            let p = w * b / den;
            f += p;
            d += p * c / den;
        }
        if d <= 0.0 {
            break;
        }
        let step = ((target - f) / d).clamp(-1.0, 1.0);
        x += step;
        if step.abs() < 1e-15 {
            break;
        }
    }
    x
}

fn sweep_alpha(s: &mut State, obs: &Observed) {
    let n = s.alpha.len();
    let r = s.rho.exp();
    let mut terms = Vec::with_capacity(n);
    for i in 0..n {
        // x = e^{α_i}·b_j with b_j = e^{θ+β_j}; y = e^{θ+α_j+β_i}
        terms.clear();
        for j in (0..n).filter(|&j| j != i) {
            let b = (s.theta + s.beta[j]).exp();
            let y = (s.theta + s.alpha[j] + s.beta[i]).exp();
            terms.push((b * (1.0 + y * r), 1.0 + y));
        }
        s.alpha[i] = solve_logistic_sum(s.alpha[i], obs.out_deg[i], &terms);
    }
}

fn sweep_beta(s: &mut State, obs: &Observed) {
    let n = s.beta.len();
    let r = s.rho.exp();
    let mut terms = Vec::with_capacity(n);
    for j in 0..n {
        // x = e^{β_j}·a_i with a_i = e^{θ+α_i}; y = e^{θ+α_j+β_i}
        terms.clear();
        for i in (0..n).filter(|&i| i != j) {
            let a = (s.theta + s.alpha[i]).exp();
            let y = (s.theta + s.alpha[j] + s.beta[i]).exp();
            terms.push((a * (1.0 + y * r), 1.0 + y));
        }
        s.beta[j] = solve_logistic_sum(s.beta[j], obs.in_deg[j], &terms);
    }
}

/// Expected statistics and the `(θ, ρ)` information block.
struct Moments {
    out_deg: Vec<f64>,
    in_deg: Vec<f64>,
    edges: f64,
    mutual: f64,
    info: [[f64; 2]; 2],
}

fn moments(s: &State) -> Moments {
    let n = s.alpha.len();
    let r = s.rho.exp();
    let ea: Vec<f64> = s.alpha.iter().map(|a| (s.theta + a).exp()).collect();
    let eb: Vec<f64> = s.beta.iter().map(|b| b.exp()).collect();
    let mut m = Moments {
        out_deg: vec![0.0; n],
        in_deg: vec![0.0; n],
        edges: 0.0,
        mutual: 0.0,
        info: [[0.0; 2]; 2],
    };
    let (mut e_sum, mut m_sum) = (CompensatedSum::new(), CompensatedSum::new());
    let (mut v_ee, mut v_em, mut v_mm) = (0.0, 0.0, 0.0);
    for i in 0..n {
        for j in (i + 1)..n {
            let x = ea[i] * eb[j];
            let y = ea[j] * eb[i];
            let xyr = x * y * r;
            let k = 1.0 + x + y + xyr;
            let (p01, p10, p11) = (y / k, x / k, xyr / k);
            let q_ij = p10 + p11;
            let q_ji = p01 + p11;
            m.out_deg[i] += q_ij;
            m.in_deg[j] += q_ij;
            m.out_deg[j] += q_ji;
            m.in_deg[i] += q_ji;
            e_sum.add(q_ij + q_ji);
            m_sum.add(p11);
            // edges in the dyad: D = X_ij + X_ji ∈ {0, 1, 2}
            let ed = p01 + p10 + 2.0 * p11;
            let ed2 = p01 + p10 + 4.0 * p11;
            v_ee += ed2 - ed * ed;
            v_em += 2.0 * p11 - ed * p11;
            v_mm += p11 * (1.0 - p11);
        }
    }
    m.edges = e_sum.value();
    m.mutual = m_sum.value();
    m.info = [[v_ee, v_em], [v_em, v_mm]];
    m
}

fn residual(obs: &Observed, m: &Moments) -> f64 {
    let deg = obs
        .out_deg
        .iter()
        .zip(&m.out_deg)
        .chain(obs.in_deg.iter().zip(&m.in_deg))
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    deg.max((obs.edges - m.edges).abs()).max((obs.mutual - m.mutual).abs())
}

fn newton_theta_rho(s: &mut State, obs: &Observed, m: &Moments) {
    let g = [obs.edges - m.edges, obs.mutual - m.mutual];
    let [[a, b], [_, d]] = m.info;
    let det = a * d - b * b;
    if !(det > 0.0) {
        return;
    }
    let step = [(d * g[0] - b * g[1]) / det, (a * g[1] - b * g[0]) / det];
    let scale = 1.0f64.min(1.0 / step[0].abs().max(step[1].abs()).max(1e-300));
    s.theta += scale * step[0];
    s.rho += scale * step[1];
}

/// Centred estimates beyond this size mean the likelihood has no finite
/// maximiser (a node with no edges, say) and the iterates are escaping.
pub const DIVERGENCE_BOUND: f64 = 40.0;

/// Fits the model, warm-started from the ratio estimates.
pub fn fit_mle(g: &Digraph, tol: f64, max_iter: usize) -> Result<MleResult> {
    fit_mle_from(g, tol, max_iter, MleInit::Tdre)
}

pub fn fit_mle_from(g: &Digraph, tol: f64, max_iter: usize, init: MleInit) -> Result<MleResult> {
    let n = g.n();
    let start = match init {
        MleInit::Tdre => estimate_graph(g, Method::Auto)
            .ok()
            .and_then(|r| r.to_params().ok())
            .filter(|v| v.sup_norm().is_finite())
            .unwrap_or_else(|| ParamVector::zeros(n)),
        MleInit::Zeros => ParamVector::zeros(n),
    };
    fit_mle_at(g, tol, max_iter, &start)
}

/// True when an observed sufficient statistic sits on the boundary of its
/// range, so the likelihood has no finite maximiser.
pub fn on_boundary(g: &Digraph) -> bool {
    let n = g.n();
    let pairs = n * n.saturating_sub(1) / 2;
    let extreme = |d: &usize| *d == 0 || *d + 1 == n;
    g.out_degrees().iter().any(extreme)
        || g.in_degrees().iter().any(extreme)
        || g.mutual_dyads() == 0
        || g.mutual_dyads() == pairs
}

/// Fits the model from an explicit starting point.
pub fn fit_mle_at(g: &Digraph, tol: f64, max_iter: usize, start: &ParamVector) -> Result<MleResult> {
    let obs = Observed::new(g);
    let mut s = State::from_params(start);
    let mut ll = log_likelihood(g, start);
    let mut grad = residual(&obs, &moments(&s));
    if on_boundary(g) {
        return Err(Error::NotConverged(grad));
    }
    let mut iterations = 0;
    while grad > tol && iterations < max_iter {
        iterations += 1;
        sweep_alpha(&mut s, &obs);
        sweep_beta(&mut s, &obs);
        let m = moments(&s);
        newton_theta_rho(&mut s, &obs, &m);
        if !s.finite() {
            return Err(Error::Diverged(f64::NAN));
        }
        let m = moments(&s);
        grad = residual(&obs, &m);
        let centred = s.to_params()?;
        if centred.sup_norm() > DIVERGENCE_BOUND {
            return Err(Error::NotConverged(grad));
        }
        let next = log_likelihood(g, &centred);
        if next < ll - 1e-9 * ll.abs().max(1.0) {
            return Err(Error::Diverged(ll - next));
        }
        ll = next;
    }
    if grad > tol {
        return Err(Error::NotConverged(grad));
    }
    let theta_tilde = s.to_params()?;
    if theta_tilde.sup_norm() > DIVERGENCE_BOUND {
        return Err(Error::NotConverged(grad));
    }
    Ok(MleResult { log_lik: log_likelihood(g, &theta_tilde), theta_tilde, iterations, converged: true, grad_norm: grad })
}

/// Largest score-equation residual of `v` on `g`.
pub fn score_residual(g: &Digraph, v: &ParamVector) -> f64 {
    residual(&Observed::new(g), &moments(&State::from_params(v)))
}
