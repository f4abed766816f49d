//! Triple-dyad ratio estimators.
//!
//! With configuration matrices `A^{ab}`, the four count matrices are
//!
//! ```text
//! B1 = A01·A00·A01    B2 = A00·A01·A00
//! B3 = A11·A10·A11    B4 = A01·A11·A01
//! ```
//!
//! and the estimators are anchor averages of log-ratios:
//!
//! ```text
//! θ̂  = (1/n) Σ_t log(B1[t][t] / B2[t][t])
//! ρ̂  = (1/n) Σ_t log(B3[t][t] / B4[t][t]) − θ̂
//! α̂_i = (1/n) Σ_t log(B1[t][i] / B2[i][t]) − θ̂
//! β̂_j = (1/n) Σ_t log(B1[j][t] / B2[t][j]) − θ̂
//! ```
//!
//! The `t = i` term of `α̂_i` (and `t = j` of `β̂_j`) is the diagonal ratio,
//! which estimates `θ + α_i + β_i` and therefore belongs in the average.
//! All sums run in ascending node order.

mod dense;
mod sparse;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Digraph, ParamVector};
use crate::tally::{tally, DyadTally, SparseTally};

/// Edge density below which [`Method::Auto`] picks the sparse path.
pub const SPARSE_DENSITY_THRESHOLD: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Dense,
    Sparse,
    /// Sparse when the edge density is below [`SPARSE_DENSITY_THRESHOLD`].
    Auto,
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dense" => Ok(Method::Dense),
            "sparse" => Ok(Method::Sparse),
            "auto" => Ok(Method::Auto),
            other => Err(Error::Config(format!("unknown method {other:?}"))),
        }
    }
}

/// Path that actually produced a report.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MethodTag {
    Dense,
    Sparse,
    Bruteforce,
}

/// `B1`, `B2` in full (row-major) and the diagonals of `B3`, `B4`.
///
/// Only the diagonals of `B3` and `B4` enter any estimator.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TripleCounts {
    pub n: usize,
    pub b1: Vec<u64>,
    pub b2: Vec<u64>,
    pub b3_diag: Vec<u64>,
    pub b4_diag: Vec<u64>,
}

impl TripleCounts {
    #[inline]
    pub fn b1(&self, r: usize, c: usize) -> u64 {
        self.b1[r * self.n + c]
    }

    #[inline]
    pub fn b2(&self, r: usize, c: usize) -> u64 {
        self.b2[r * self.n + c]
    }

    pub fn diagonals(&self) -> DiagonalCounts {
        let n = self.n;
        DiagonalCounts {
            b1: (0..n).map(|t| self.b1(t, t)).collect(),
            b2: (0..n).map(|t| self.b2(t, t)).collect(),
            b3: self.b3_diag.clone(),
            b4: self.b4_diag.clone(),
        }
    }
}

/// Per-anchor diagonal counts; enough for `θ̂` and `ρ̂`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiagonalCounts {
    pub b1: Vec<u64>,
    pub b2: Vec<u64>,
    pub b3: Vec<u64>,
    pub b4: Vec<u64>,
}

impl DiagonalCounts {
    pub fn n(&self) -> usize {
        self.b1.len()
    }
}

/// Counts via bit-packed dense products.
pub fn triple_counts(t: &DyadTally) -> TripleCounts {
    dense::triple_counts_dense(t)
}

/// Counts via the complement decomposition of `A^{00}`; identical to
/// [`triple_counts`].
pub fn triple_counts_sparse(t: &SparseTally) -> TripleCounts {
    sparse::triple_counts_sparse(t)
}

/// Diagonal counts in `O(n·d²)` time and `O(edges)` memory.
pub fn diagonal_counts_sparse(t: &SparseTally) -> DiagonalCounts {
    sparse::diagonal_counts_sparse(t)
}

#[inline]
fn log_ratio(num: u64, den: u64) -> f64 {
    (num as f64 / den as f64).ln()
}

fn degenerate_anchors(num: &[u64], den: &[u64]) -> Vec<usize> {
    (0..num.len()).filter(|&t| num[t] == 0 || den[t] == 0).collect()
}

fn mean_ascending(xs: impl Iterator<Item = f64>, m: usize) -> f64 {
    xs.fold(0.0, |s, x| s + x) / m as f64
}

/// `θ̂` and the per-anchor terms `log(B1[t][t]/B2[t][t])`.
pub fn estimate_theta(d: &DiagonalCounts) -> Result<(f64, Vec<f64>)> {
    let bad = degenerate_anchors(&d.b1, &d.b2);
    if !bad.is_empty() {
        return Err(Error::DegenerateCounts { nodes: bad });
    }
    let terms: Vec<f64> = d.b1.iter().zip(&d.b2).map(|(&a, &b)| log_ratio(a, b)).collect();
    Ok((mean_ascending(terms.iter().copied(), terms.len()), terms))
}

/// `ρ̂` and the per-anchor terms `log(B3[t][t]/B4[t][t])`.
pub fn estimate_rho(d: &DiagonalCounts, theta_hat: f64) -> Result<(f64, Vec<f64>)> {
    let bad = degenerate_anchors(&d.b3, &d.b4);
    if !bad.is_empty() {
        return Err(Error::DegenerateCounts { nodes: bad });
    }
    let terms: Vec<f64> = d.b3.iter().zip(&d.b4).map(|(&a, &b)| log_ratio(a, b)).collect();
    Ok((mean_ascending(terms.iter().copied(), terms.len()) - theta_hat, terms))
}

fn node_average(
    c: &TripleCounts,
    anchors: &[usize],
    pick: impl Fn(usize, usize) -> (u64, u64) + Sync,
) -> Vec<Option<f64>> {
    (0..c.n)
        .into_par_iter()
        .map(|i| {
            let mut s = 0.0;
            for &t in anchors {
                let (num, den) = pick(i, t);
                if num == 0 || den == 0 {
                    return None;
                }
                s += log_ratio(num, den);
            }
            Some(s / anchors.len() as f64)
        })
        .collect()
}

fn unwrap_nodes(v: Vec<Option<f64>>) -> Result<Vec<f64>> {
    let bad: Vec<usize> = v.iter().enumerate().filter(|(_, x)| x.is_none()).map(|(i, _)| i).collect();
    if bad.is_empty() {
        Ok(v.into_iter().map(|x| x.unwrap()).collect())
    } else {
        Err(Error::DegenerateCounts { nodes: bad })
    }
}

/// Averaged log-ratios `(1/n) Σ_t log(B1[t][i]/B2[i][t])` (that is,
/// `α̂_i + θ̂`).
pub fn alpha_terms(c: &TripleCounts) -> Result<Vec<f64>> {
    let all: Vec<usize> = (0..c.n).collect();
    unwrap_nodes(node_average(c, &all, |i, t| (c.b1(t, i), c.b2(i, t))))
}

/// Averaged log-ratios `(1/n) Σ_t log(B1[j][t]/B2[t][j])` (that is,
/// `β̂_j + θ̂`).
pub fn beta_terms(c: &TripleCounts) -> Result<Vec<f64>> {
    let all: Vec<usize> = (0..c.n).collect();
    unwrap_nodes(node_average(c, &all, |j, t| (c.b1(j, t), c.b2(t, j))))
}

pub fn estimate_alpha(c: &TripleCounts, theta_hat: f64) -> Result<Vec<f64>> {
    Ok(alpha_terms(c)?.into_iter().map(|x| x - theta_hat).collect())
}

pub fn estimate_beta(c: &TripleCounts, theta_hat: f64) -> Result<Vec<f64>> {
    Ok(beta_terms(c)?.into_iter().map(|x| x - theta_hat).collect())
}

/// Per-node log-ratio terms kept for auditing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeTerms {
    pub theta: Vec<f64>,
    pub rho: Vec<f64>,
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
}

/// Estimates of the full parameter vector.
///
/// Skipped nodes (filtered estimation only) carry `NaN` estimates, which
/// serialise as `null`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    pub theta: f64,
    pub rho: f64,
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    pub skipped: Vec<usize>,
    pub method: MethodTag,
    pub terms: NodeTerms,
}

impl EstimateReport {
    pub fn n(&self) -> usize {
        self.alpha.len()
    }

    /// Estimated parameters as a [`ParamVector`]; fails when nodes were
    /// skipped.
    pub fn to_params(&self) -> Result<ParamVector> {
        if !self.skipped.is_empty() {
            return Err(Error::DegenerateCounts { nodes: self.skipped.clone() });
        }
        ParamVector::new(self.rho, self.theta, self.alpha.clone(), self.beta.clone())
    }

    /// Relabels node `v` as `perm[v]`.
    pub fn permuted(&self, perm: &[usize]) -> EstimateReport {
        let apply = |v: &[f64]| {
            let mut out = vec![0.0; v.len()];
            for (k, &x) in v.iter().enumerate() {
                out[perm[k]] = x;
            }
            out
        };
        let mut skipped: Vec<usize> = self.skipped.iter().map(|&k| perm[k]).collect();
        skipped.sort_unstable();
        EstimateReport {
            theta: self.theta,
            rho: self.rho,
            alpha: apply(&self.alpha),
            beta: apply(&self.beta),
            skipped,
            method: self.method,
            terms: NodeTerms {
                theta: apply(&self.terms.theta),
                rho: apply(&self.terms.rho),
                alpha: apply(&self.terms.alpha),
                beta: apply(&self.terms.beta),
            },
        }
    }
}

/// Runs all four estimators on precomputed counts.
pub fn estimate_from_counts(c: &TripleCounts, method: MethodTag) -> Result<EstimateReport> {
    let d = c.diagonals();
    let mut bad = Vec::new();
    let theta = estimate_theta(&d);
    let theta_hat = theta.as_ref().map(|x| x.0).unwrap_or(0.0);
    let rho = estimate_rho(&d, theta_hat);
    let at = alpha_terms(c);
    let bt = beta_terms(c);
    for e in [theta.as_ref().err(), rho.as_ref().err(), at.as_ref().err(), bt.as_ref().err()]
        .into_iter()
        .flatten()
    {
        if let Error::DegenerateCounts { nodes } = e {
            bad.extend_from_slice(nodes);
        }
    }
    if !bad.is_empty() {
        bad.sort_unstable();
        bad.dedup();
        return Err(Error::DegenerateCounts { nodes: bad });
    }
    let (theta_hat, theta_terms) = theta?;
    let (rho_hat, rho_terms) = rho?;
    let at = at?;
    let bt = bt?;
    Ok(EstimateReport {
        theta: theta_hat,
        rho: rho_hat,
        alpha: at.iter().map(|x| x - theta_hat).collect(),
        beta: bt.iter().map(|x| x - theta_hat).collect(),
        skipped: Vec::new(),
        method,
        terms: NodeTerms { theta: theta_terms, rho: rho_terms, alpha: at, beta: bt },
    })
}

fn resolve(method: Method, density: f64) -> MethodTag {
    match method {
        Method::Dense => MethodTag::Dense,
        Method::Sparse => MethodTag::Sparse,
        Method::Auto if density < SPARSE_DENSITY_THRESHOLD => MethodTag::Sparse,
        Method::Auto => MethodTag::Dense,
    }
}

/// Full estimation from a tally.
pub fn estimate_all(t: &DyadTally, method: Method) -> Result<EstimateReport> {
    match resolve(method, t.edge_density()) {
        MethodTag::Sparse => estimate_from_counts(&triple_counts_sparse(&SparseTally::from_tally(t)), MethodTag::Sparse),
        _ => estimate_from_counts(&triple_counts(t), MethodTag::Dense),
    }
}

fn graph_density(g: &Digraph) -> f64 {
    let n = g.n();
    if n < 2 {
        0.0
    } else {
        g.edge_count() as f64 / (n * (n - 1)) as f64
    }
}

/// Counts for `g`, built along the requested path without materialising
/// the dense tally on the sparse path.
pub fn graph_counts(g: &Digraph, method: Method) -> (TripleCounts, MethodTag) {
    match resolve(method, graph_density(g)) {
        MethodTag::Sparse => (triple_counts_sparse(&SparseTally::from_graph(g)), MethodTag::Sparse),
        _ => (triple_counts(&tally(g)), MethodTag::Dense),
    }
}

/// Full estimation straight from a graph.
pub fn estimate_graph(g: &Digraph, method: Method) -> Result<EstimateReport> {
    let (c, tag) = graph_counts(g, method);
    estimate_from_counts(&c, tag)
}

/// Global estimates `(θ̂, ρ̂)` with their per-anchor terms, for graphs too
/// large for the full count matrices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlobalEstimate {
    pub theta: f64,
    pub rho: Option<f64>,
    pub theta_terms: Vec<f64>,
    /// Anchors whose `B3`/`B4` diagonal vanishes.
    pub rho_degenerate: Vec<usize>,
    pub counts: DiagonalCounts,
}

/// `θ̂` (required) and `ρ̂` (when defined) from sparse diagonals only.
pub fn estimate_global_sparse(t: &SparseTally) -> Result<GlobalEstimate> {
    let counts = diagonal_counts_sparse(t);
    let (theta, theta_terms) = estimate_theta(&counts)?;
    let (rho, rho_degenerate) = match estimate_rho(&counts, theta) {
        Ok((r, _)) => (Some(r), Vec::new()),
        Err(Error::DegenerateCounts { nodes }) => (None, nodes),
        Err(e) => return Err(e),
    };
    Ok(GlobalEstimate { theta, rho, theta_terms, rho_degenerate, counts })
}

/// `(α̂_i, β̂_i)` for selected nodes from the sparse rows of the count
/// matrices.
pub fn node_estimates_sparse(t: &SparseTally, nodes: &[usize], theta_hat: f64) -> Result<Vec<(f64, f64)>> {
    let rows = sparse::node_rows_sparse(t, nodes);
    let n = t.n() as f64;
    let mut bad = Vec::new();
    let mut out = Vec::with_capacity(nodes.len());
    for (&i, r) in nodes.iter().zip(rows) {
        let mut a = 0.0;
        let mut b = 0.0;
        let mut ok = true;
        for t in 0..t.n() {
            if r.b1t[t] == 0 || r.b2[t] == 0 || r.b1[t] == 0 || r.b2t[t] == 0 {
                ok = false;
                break;
            }
            a += log_ratio(r.b1t[t], r.b2[t]);
            b += log_ratio(r.b1[t], r.b2t[t]);
        }
        if !ok {
            bad.push(i);
        }
        out.push((a / n - theta_hat, b / n - theta_hat));
    }
    if bad.is_empty() {
        Ok(out)
    } else {
        Err(Error::DegenerateCounts { nodes: bad })
    }
}

/// Anchors with out-degree `≥ min_out`, in-degree `≥ min_in` and all four
/// diagonal counts strictly positive.
pub fn gamma_filter_counts(t: &DyadTally, d: &DiagonalCounts, min_out: usize, min_in: usize) -> Vec<usize> {
    (0..t.n())
        .filter(|&v| {
            let out_deg = t.a10.row_count(v) + t.a11.row_count(v);
            let in_deg = t.a01.row_count(v) + t.a11.row_count(v);
            out_deg >= min_out
                && in_deg >= min_in
                && d.b1[v] > 0
                && d.b2[v] > 0
                && d.b3[v] > 0
                && d.b4[v] > 0
        })
        .collect()
}

/// [`gamma_filter_counts`] with the counts computed from the tally.
pub fn gamma_filter(t: &DyadTally, min_out: usize, min_in: usize) -> Vec<usize> {
    gamma_filter_counts(t, &triple_counts(t).diagonals(), min_out, min_in)
}

/// `θ̂` averaged over the anchors in `gamma` only.
pub fn estimate_theta_filtered(d: &DiagonalCounts, gamma: &[usize]) -> Result<f64> {
    if gamma.is_empty() {
        return Err(Error::EmptyFilter);
    }
    let bad: Vec<usize> = gamma.iter().copied().filter(|&t| d.b1[t] == 0 || d.b2[t] == 0).collect();
    if !bad.is_empty() {
        return Err(Error::DegenerateCounts { nodes: bad });
    }
    Ok(mean_ascending(gamma.iter().map(|&t| log_ratio(d.b1[t], d.b2[t])), gamma.len()))
}

/// Estimation restricted to anchors in `gamma`.
///
/// `θ̂` and `ρ̂` average over `t ∈ Γ`; `α̂_i`, `β̂_i` are reported for
/// `i ∈ Γ` with the same anchor set. Nodes outside `Γ`, and nodes in `Γ`
/// whose off-diagonal counts vanish for some anchor, are listed in
/// `skipped` with `NaN` estimates.
pub fn estimate_filtered(c: &TripleCounts, gamma: &[usize], method: MethodTag) -> Result<EstimateReport> {
    if gamma.is_empty() {
        return Err(Error::EmptyFilter);
    }
    let mut gamma = gamma.to_vec();
    gamma.sort_unstable();
    gamma.dedup();
    let d = c.diagonals();
    let theta = estimate_theta_filtered(&d, &gamma)?;
    let bad: Vec<usize> = gamma.iter().copied().filter(|&t| d.b3[t] == 0 || d.b4[t] == 0).collect();
    if !bad.is_empty() {
        return Err(Error::DegenerateCounts { nodes: bad });
    }
    let rho = mean_ascending(gamma.iter().map(|&t| log_ratio(d.b3[t], d.b4[t])), gamma.len()) - theta;
    let at = node_average(c, &gamma, |i, t| (c.b1(t, i), c.b2(i, t)));
    let bt = node_average(c, &gamma, |j, t| (c.b1(j, t), c.b2(t, j)));
    let n = c.n;
    let mut in_gamma = vec![false; n];
    for &v in &gamma {
        in_gamma[v] = true;
    }
    let mut skipped = Vec::new();
    let mut alpha = vec![f64::NAN; n];
    let mut beta = vec![f64::NAN; n];
    let mut a_terms = vec![f64::NAN; n];
    let mut b_terms = vec![f64::NAN; n];
    for v in 0..n {
        match (in_gamma[v], at[v], bt[v]) {
            (true, Some(a), Some(b)) => {
                a_terms[v] = a;
                b_terms[v] = b;
                alpha[v] = a - theta;
                beta[v] = b - theta;
            }
            _ => skipped.push(v),
        }
    }
    let diag_term = |num: &[u64], den: &[u64]| -> Vec<f64> {
        (0..n)
            .map(|t| if in_gamma[t] { log_ratio(num[t], den[t]) } else { f64::NAN })
            .collect()
    };
    Ok(EstimateReport {
        theta,
        rho,
        alpha,
        beta,
        skipped,
        method,
        terms: NodeTerms {
            theta: diag_term(&d.b1, &d.b2),
            rho: diag_term(&d.b3, &d.b4),
            alpha: a_terms,
            beta: b_terms,
        },
    })
}
