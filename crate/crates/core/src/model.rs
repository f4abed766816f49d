//! The p₁ model: parameters, the dyad probability law, identification,
//! and graph sampling.
//!
//! Dyads `(X_ij, X_ji)` are independent across unordered pairs. Writing
//! `e_ij = θ + α_i + β_j`, the four configurations have unnormalised
//! weights `1`, `exp(e_ji)`, `exp(e_ij)` and `exp(e_ij + e_ji + ρ)` for
//! `(0,0)`, `(0,1)`, `(1,0)` and `(1,1)` respectively.

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dyad configuration `(a, b) = (X_ij, X_ji)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Config {
    C00,
    C01,
    C10,
    C11,
}

impl Config {
    pub const ALL: [Config; 4] = [Config::C00, Config::C01, Config::C10, Config::C11];

    pub fn from_bits(a: bool, b: bool) -> Self {
        match (a, b) {
            (false, false) => Config::C00,
            (false, true) => Config::C01,
            (true, false) => Config::C10,
            (true, true) => Config::C11,
        }
    }

    /// The configuration of the same dyad seen from the other endpoint.
    pub fn swapped(self) -> Self {
        match self {
            Config::C01 => Config::C10,
            Config::C10 => Config::C01,
            c => c,
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

/// Parameter vector `(ρ, θ, α₁..αₙ, β₁..βₙ)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawParams")]
pub struct ParamVector {
    pub rho: f64,
    pub theta: f64,
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
}

#[derive(Deserialize)]
struct RawParams {
    rho: f64,
    theta: f64,
    alpha: Vec<f64>,
    beta: Vec<f64>,
}

impl TryFrom<RawParams> for ParamVector {
    type Error = Error;

    fn try_from(r: RawParams) -> Result<Self> {
        ParamVector::new(r.rho, r.theta, r.alpha, r.beta)
    }
}

impl ParamVector {
    pub fn new(rho: f64, theta: f64, alpha: Vec<f64>, beta: Vec<f64>) -> Result<Self> {
        if alpha.len() != beta.len() {
            return Err(Error::InvalidParams(format!(
                "alpha has {} entries but beta has {}",
                alpha.len(),
                beta.len()
            )));
        }
        if alpha.is_empty() {
            return Err(Error::InvalidParams("empty parameter vector".into()));
        }
        let finite = rho.is_finite()
            && theta.is_finite()
            && alpha.iter().chain(beta.iter()).all(|x| x.is_finite());
        if !finite {
            return Err(Error::InvalidParams("non-finite entry".into()));
        }
        Ok(ParamVector { rho, theta, alpha, beta })
    }

    /// All-zero parameters on `n` nodes.
    pub fn zeros(n: usize) -> Self {
        ParamVector { rho: 0.0, theta: 0.0, alpha: vec![0.0; n], beta: vec![0.0; n] }
    }

    pub fn n(&self) -> usize {
        self.alpha.len()
    }

    /// `true` when `|Σα|` and `|Σβ|` are both within `1e-9·n`.
    pub fn is_identified(&self) -> bool {
        let tol = 1e-9 * self.n() as f64;
        self.alpha.iter().sum::<f64>().abs() <= tol && self.beta.iter().sum::<f64>().abs() <= tol
    }

    /// Observationally equivalent vector with `Σα = Σβ = 0`.
    pub fn center(&self) -> ParamVector {
        let n = self.n() as f64;
        let abar = self.alpha.iter().sum::<f64>() / n;
        let bbar = self.beta.iter().sum::<f64>() / n;
        ParamVector {
            rho: self.rho,
            theta: self.theta + abar + bbar,
            alpha: self.alpha.iter().map(|a| a - abar).collect(),
            beta: self.beta.iter().map(|b| b - bbar).collect(),
        }
    }

    /// `max(|ρ|, |θ|, |αᵢ|, |βⱼ|)`.
    pub fn sup_norm(&self) -> f64 {
        self.alpha
            .iter()
            .chain(self.beta.iter())
            .chain([self.rho, self.theta].iter())
            .fold(0.0f64, |m, x| m.max(x.abs()))
    }

    /// Probabilities of `(00, 01, 10, 11)` for the dyad `(X_ij, X_ji)`.
    ///
    /// Exponents are shifted by their maximum before exponentiating.
    pub fn dyad_probs_at(&self, i: usize, j: usize) -> [f64; 4] {
        let e_ij = self.theta + self.alpha[i] + self.beta[j];
        let e_ji = self.theta + self.alpha[j] + self.beta[i];
        dyad_law(e_ij, e_ji, self.rho)
    }
}

/// Normalised probabilities of `(00, 01, 10, 11)` given the two directed
/// edge exponents and the reciprocity parameter.
pub fn dyad_law(e_ij: f64, e_ji: f64, rho: f64) -> [f64; 4] {
    let x = [0.0, e_ji, e_ij, e_ij + e_ji + rho];
    let m = x.iter().fold(f64::NEG_INFINITY, |m, &v| m.max(v));
    let w = x.map(|v| (v - m).exp());
    let k = w[0] + w[1] + w[2] + w[3];
    w.map(|v| v / k)
}

/// Log of the normalising constant `k_ij`, computed stably.
pub fn log_norm_const(e_ij: f64, e_ji: f64, rho: f64) -> f64 {
    let x = [0.0, e_ji, e_ij, e_ij + e_ji + rho];
    let m = x.iter().fold(f64::NEG_INFINITY, |m, &v| m.max(v));
    m + x.iter().map(|v| (v - m).exp()).sum::<f64>().ln()
}

/// The `p_ij^{ab}` tables of a parameter vector. Diagonals are zero.
#[derive(Debug, Clone, PartialEq)]
pub struct DyadProbTable {
    pub p00: Array2<f64>,
    pub p01: Array2<f64>,
    pub p10: Array2<f64>,
    pub p11: Array2<f64>,
}

impl DyadProbTable {
    pub fn n(&self) -> usize {
        self.p00.nrows()
    }

    pub fn get(&self, c: Config) -> &Array2<f64> {
        match c {
            Config::C00 => &self.p00,
            Config::C01 => &self.p01,
            Config::C10 => &self.p10,
            Config::C11 => &self.p11,
        }
    }

    /// `(max, min)` of the off-diagonal `p^{01}` entries, the sparsity
    /// diagnostics `(C_n, c_n)`.
    pub fn sparsity_constants(&self) -> (f64, f64) {
        let n = self.n();
        let mut hi = f64::NEG_INFINITY;
        let mut lo = f64::INFINITY;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    let v = self.p01[[i, j]];
                    hi = hi.max(v);
                    lo = lo.min(v);
                }
            }
        }
        (hi, lo)
    }
}

/// Dyad probability table of `theta_vec`.
pub fn dyad_probs(theta_vec: &ParamVector) -> DyadProbTable {
    let n = theta_vec.n();
    let mut t = DyadProbTable {
        p00: Array2::zeros((n, n)),
        p01: Array2::zeros((n, n)),
        p10: Array2::zeros((n, n)),
        p11: Array2::zeros((n, n)),
    };
    for i in 0..n {
        for j in (i + 1)..n {
            let [q00, q01, q10, q11] = theta_vec.dyad_probs_at(i, j);
            t.p00[[i, j]] = q00;
            t.p00[[j, i]] = q00;
            t.p11[[i, j]] = q11;
            t.p11[[j, i]] = q11;
            t.p01[[i, j]] = q01;
            t.p10[[j, i]] = q01;
            t.p10[[i, j]] = q10;
            t.p01[[j, i]] = q10;
        }
    }
    t
}

/// The linear expansiveness/popularity design: `αᵢ = βᵢ = i/(n/2)` for
/// `i ≤ n/2` and `−(i − n/2)/(n/2)` above, 1-based, then centred.
pub fn linear_design(n: usize, rho: f64, theta: f64) -> Result<ParamVector> {
    if n == 0 || n % 2 != 0 {
        return Err(Error::InvalidDesign(n));
    }
    let alpha = linear_design_raw(n);
    let v = ParamVector::new(rho, theta, alpha.clone(), alpha)?;
    Ok(v.center())
}

/// The uncentred linear design values.
pub fn linear_design_raw(n: usize) -> Vec<f64> {
    let half = (n / 2) as f64;
    (1..=n)
        .map(|i| {
            let i = i as f64;
            if i <= half {
                i / half
            } else {
                -(i - half) / half
            }
        })
        .collect()
}

/// A simple directed graph on `0..n` without self-loops.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Digraph {
    n: usize,
    /// Sorted out-neighbour lists.
    out: Vec<Vec<usize>>,
}

impl Digraph {
    pub fn empty(n: usize) -> Self {
        Digraph { n, out: vec![Vec::new(); n] }
    }

    /// Builds a graph, rejecting self-loops, duplicates and out-of-range
    /// endpoints.
    pub fn from_edges<I>(n: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let mut out = vec![Vec::new(); n];
        for (i, j) in edges {
            if i >= n || j >= n {
                return Err(Error::InvalidGraph(format!("edge ({i},{j}) out of range for n={n}")));
            }
            if i == j {
                return Err(Error::InvalidGraph(format!("self-loop at {i}")));
            }
            out[i].push(j);
        }
        for (i, row) in out.iter_mut().enumerate() {
            row.sort_unstable();
            if row.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::InvalidGraph(format!("duplicate edge out of {i}")));
            }
        }
        Ok(Digraph { n, out })
    }

    /// Complete digraph: every ordered pair is an edge.
    pub fn complete(n: usize) -> Self {
        let out = (0..n).map(|i| (0..n).filter(|&j| j != i).collect()).collect();
        Digraph { n, out }
    }

    pub(crate) fn from_sorted_adjacency(n: usize, out: Vec<Vec<usize>>) -> Self {
        debug_assert!(out.iter().all(|r| r.windows(2).all(|w| w[0] < w[1])));
        Digraph { n, out }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.out.iter().map(Vec::len).sum()
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.out[i].binary_search(&j).is_ok()
    }

    pub fn out_neighbors(&self, i: usize) -> &[usize] {
        &self.out[i]
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.out.iter().enumerate().flat_map(|(i, row)| row.iter().map(move |&j| (i, j)))
    }

    /// Sorted in-neighbour lists.
    pub fn in_adjacency(&self) -> Vec<Vec<usize>> {
        let mut inn = vec![Vec::new(); self.n];
        for (i, j) in self.edges() {
            inn[j].push(i);
        }
        inn
    }

    pub fn out_degrees(&self) -> Vec<usize> {
        self.out.iter().map(Vec::len).collect()
    }

    pub fn in_degrees(&self) -> Vec<usize> {
        let mut d = vec![0; self.n];
        for (_, j) in self.edges() {
            d[j] += 1;
        }
        d
    }

    /// Number of mutual (reciprocated) dyads.
    pub fn mutual_dyads(&self) -> usize {
        self.edges().filter(|&(i, j)| i < j && self.has_edge(j, i)).count()
    }

    /// Configuration of the dyad `(X_ij, X_ji)`.
    pub fn config(&self, i: usize, j: usize) -> Config {
        Config::from_bits(self.has_edge(i, j), self.has_edge(j, i))
    }

    /// Relabels node `v` as `perm[v]`.
    pub fn relabel(&self, perm: &[usize]) -> Digraph {
        let edges = self.edges().map(|(i, j)| (perm[i], perm[j]));
        Digraph::from_edges(self.n, edges).expect("a permutation preserves validity")
    }

    /// Subgraph induced by `nodes`, relabelled `0..nodes.len()` in the
    /// given order.
    pub fn induced(&self, nodes: &[usize]) -> Digraph {
        let mut map = vec![usize::MAX; self.n];
        for (k, &v) in nodes.iter().enumerate() {
            map[v] = k;
        }
        let edges = self
            .edges()
            .filter(|&(i, j)| map[i] != usize::MAX && map[j] != usize::MAX)
            .map(|(i, j)| (map[i], map[j]));
        Digraph::from_edges(nodes.len(), edges).expect("induced subgraph is valid")
    }
}

fn row_rng(seed: u64, row: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(row as u64);
    rng
}

fn draw_config(probs: &[f64; 4], u: f64) -> Config {
    let mut acc = probs[0];
    if u < acc {
        return Config::C00;
    }
    acc += probs[1];
    if u < acc {
        return Config::C01;
    }
    acc += probs[2];
    if u < acc {
        return Config::C10;
    }
    Config::C11
}

fn assemble(n: usize, rows: Vec<Vec<(usize, Config)>>) -> Digraph {
    let mut out = vec![Vec::new(); n];
    for (i, row) in rows.into_iter().enumerate() {
        for (j, c) in row {
            match c {
                Config::C00 => {}
                Config::C01 => out[j].push(i),
                Config::C10 => out[i].push(j),
                Config::C11 => {
                    out[i].push(j);
                    out[j].push(i);
                }
            }
        }
    }
    for row in &mut out {
        row.sort_unstable();
    }
    Digraph::from_sorted_adjacency(n, out)
}

/// Draws every dyad independently from the model.
///
/// Row `i` (pairs `(i, j)`, `j > i`) consumes ChaCha stream `i` of `seed`,
/// so the result does not depend on the thread count.
pub fn sample_graph(theta_vec: &ParamVector, seed: u64) -> Digraph {
    let n = theta_vec.n();
    let rows: Vec<Vec<(usize, Config)>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut rng = row_rng(seed, i);
            let mut row = Vec::new();
            for j in (i + 1)..n {
                let p = theta_vec.dyad_probs_at(i, j);
                let c = draw_config(&p, rng.random::<f64>());
                if c != Config::C00 {
                    row.push((j, c));
                }
            }
            row
        })
        .collect();
    assemble(n, rows)
}

/// Sampler for sparse parameter regimes.
///
/// Candidate non-null dyads are proposed by geometric skipping at the
/// largest non-null probability of the design and accepted by thinning,
/// so the law is exact while the cost scales with the edge count. Draws
/// differ from [`sample_graph`] for the same seed.
pub fn sample_graph_sparse(theta_vec: &ParamVector, seed: u64) -> Digraph {
    let n = theta_vec.n();
    let amax = theta_vec.alpha.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let bmax = theta_vec.beta.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let emax = theta_vec.theta + amax + bmax;
    let qbar = 1.0 - dyad_law(emax, emax, theta_vec.rho)[0];
    let log_miss = (1.0 - qbar).ln();
    let rows: Vec<Vec<(usize, Config)>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut rng = row_rng(seed, i);
            let mut row = Vec::new();
            let mut j = i;
            loop {
                let skip = if qbar >= 1.0 {
                    0
                } else {
                    let u: f64 = 1.0 - rng.random::<f64>();
                    let g = (u.ln() / log_miss).floor();
                    if g >= (n - j) as f64 {
                        break;
                    }
                    g as usize
                };
                j += skip + 1;
                if j >= n {
                    break;
                }
                let p = theta_vec.dyad_probs_at(i, j);
                let q = 1.0 - p[0];
                let u: f64 = rng.random::<f64>() * qbar;
                if u < q {
                    let c = if u < p[1] {
                        Config::C01
                    } else if u < p[1] + p[2] {
                        Config::C10
                    } else {
                        Config::C11
                    };
                    row.push((j, c));
                }
            }
            row
        })
        .collect();
    assemble(n, rows)
}
