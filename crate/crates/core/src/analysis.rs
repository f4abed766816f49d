//! Degree-filtered analysis of an observed network.

use serde::{Deserialize, Serialize};

use crate::asymptotics::{plug_in_params, AsymptoticTable};
use crate::error::{Error, Result};
use crate::estimator::{estimate_filtered, gamma_filter_counts, graph_counts, EstimateReport, Method};
use crate::inference::{ci_theta, test_reciprocity, Fitted, TestReport};
use crate::model::{Digraph, ParamVector};
use crate::tally::tally;

pub const DEFAULT_MIN_DEGREE: usize = 5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    /// `bins + 1` edges of equal-width bins.
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
}

impl Histogram {
    /// Equal-width bins over `[min, max]`; the last bin is closed.
    pub fn new(values: &[f64], bins: usize) -> Histogram {
        let bins = bins.max(1);
        let finite: Vec<f64> = values.iter().copied().filter(|x| x.is_finite()).collect();
        if finite.is_empty() {
            return Histogram { edges: Vec::new(), counts: Vec::new() };
        }
        let lo = finite.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = finite.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let width = if hi > lo { (hi - lo) / bins as f64 } else { 1.0 };
        let edges = (0..=bins).map(|k| lo + k as f64 * width).collect();
        let mut counts = vec![0; bins];
        for x in finite {
            let k = (((x - lo) / width) as usize).min(bins - 1);
            counts[k] += 1;
        }
        Histogram { edges, counts }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub n: usize,
    pub edges: usize,
    pub mutual_dyads: usize,
    pub min_in: usize,
    pub min_out: usize,
    pub gamma_size: usize,
    pub gamma: Vec<usize>,
    pub estimate: EstimateReport,
    /// Plug-in table for the subgraph induced by the retained nodes.
    pub asymptotics: AsymptoticTable,
    pub reciprocity: TestReport,
    pub density: TestReport,
    pub alpha_histogram: Histogram,
    pub beta_histogram: Histogram,
}

/// Keeps nodes with out-degree `≥ min_out`, in-degree `≥ min_in` and
/// positive triple counts, estimates over those anchors, and tests
/// `ρ = 0` at significance `level`.
pub fn analyze(g: &Digraph, min_in: usize, min_out: usize, level: f64, bins: usize, method: Method) -> Result<AnalysisReport> {
    let t = tally(g);
    let (counts, tag) = graph_counts(g, method);
    let gamma = gamma_filter_counts(&t, &counts.diagonals(), min_out, min_in);
    if gamma.is_empty() {
        return Err(Error::EmptyFilter);
    }
    let estimate = estimate_filtered(&counts, &gamma, tag)?;
    let kept: Vec<usize> = gamma.iter().copied().filter(|v| !estimate.skipped.contains(v)).collect();
    if kept.len() < 2 {
        return Err(Error::DegenerateCounts { nodes: estimate.skipped.clone() });
    }
    let sub = ParamVector::new(
        estimate.rho,
        estimate.theta,
        kept.iter().map(|&v| estimate.alpha[v]).collect(),
        kept.iter().map(|&v| estimate.beta[v]).collect(),
    )?;
    let asymptotics = plug_in_params(&sub, false)?;
    let fit = Fitted { estimate: estimate.clone(), table: asymptotics.clone() };
    let reciprocity = test_reciprocity(&fit, level, 0.0)?;
    let density = ci_theta(&fit, level)?;
    Ok(AnalysisReport {
        n: g.n(),
        edges: g.edge_count(),
        mutual_dyads: g.mutual_dyads(),
        min_in,
        min_out,
        gamma_size: gamma.len(),
        alpha_histogram: Histogram::new(&sub.alpha, bins),
        beta_histogram: Histogram::new(&sub.beta, bins),
        gamma,
        estimate,
        asymptotics,
        reciprocity,
        density,
    })
}
