//! Asymptotic variances and bias terms of the ratio estimators.
//!
//! Each combination `(abc)` pairs the configuration tables `Q = p^{ca}`
//! and `R = p^{cb}` (diagonals zero). All the double and quadruple sums
//! reduce to `O(n³)` matrix products:
//!
//! ```text
//! n²·μ_t      = Σ_i Q[i][t]·(R·Qᵀ)[i][t]
//! n²·μ_it     = (Qᵀ·R·Qᵀ)[i][t] − Q[t][i]·(h[t] + g[i] − R[t][i]·Q[t][i])
//!               h[t] = Σ_l R[t][l]·Q[t][l],  g[i] = Σ_k Q[k][i]·R[k][i]
//! U[i][t]     = (R·Qᵀ)[i][t] / μ_t,   V[i][t] = (Qᵀ·R)[i][t] / μ_i
//! η           = (U + V − R·diag(1/μ^{(bac)})·R) / n
//! ζ₁[i][t]    = (U[i][t]² + V[i][t]²) / (2n³)
//! ζ₂[i][t]    = U[i][t]·V[t][i] / n³
//! ```
//!
//! Terms with coincident indices vanish on their own because every table
//! has a zero diagonal, except the `k = t` and `l = i` terms of `μ_it`,
//! which are removed explicitly.

use ndarray::{Array1, Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::EstimateReport;
use crate::model::{dyad_probs, Config, DyadProbTable, ParamVector};
use crate::stats::CompensatedSum;

/// `g_m(x; y) = Σ x_k² y_k − (Σ x_k y_k)²`.
pub fn g_m(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() || x.is_empty() {
        return Err(Error::InvalidArity(x.len(), y.len()));
    }
    Ok(g_unchecked(x, y))
}

#[inline]
fn g_unchecked(x: &[f64], y: &[f64]) -> f64 {
    let mut sq = 0.0;
    let mut lin = 0.0;
    for (&a, &b) in x.iter().zip(y) {
        sq += a * a * b;
        lin += a * b;
    }
    sq - lin * lin
}

/// The index combinations `(abc)` entering the variances and biases.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Combo {
    #[serde(rename = "100")]
    C100,
    #[serde(rename = "010")]
    C010,
    #[serde(rename = "011")]
    C011,
    #[serde(rename = "101")]
    C101,
}

impl Combo {
    pub const ALL: [Combo; 4] = [Combo::C100, Combo::C010, Combo::C011, Combo::C101];

    pub fn label(self) -> &'static str {
        match self {
            Combo::C100 => "100",
            Combo::C010 => "010",
            Combo::C011 => "011",
            Combo::C101 => "101",
        }
    }

    /// `(bac)`.
    pub fn swapped(self) -> Combo {
        match self {
            Combo::C100 => Combo::C010,
            Combo::C010 => Combo::C100,
            Combo::C011 => Combo::C101,
            Combo::C101 => Combo::C011,
        }
    }

    /// Configurations `(ca, cb)`.
    pub fn configs(self) -> (Config, Config) {
        match self {
            Combo::C100 => (Config::C01, Config::C00),
            Combo::C010 => (Config::C00, Config::C01),
            Combo::C011 => (Config::C10, Config::C11),
            Combo::C101 => (Config::C11, Config::C10),
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

/// `μ_t^{(abc)}` and `μ_it^{(abc)}` for every [`Combo`].
#[derive(Debug, Clone, PartialEq)]
pub struct MuValues {
    pub mu_t: [Vec<f64>; 4],
    /// Zero on the diagonal, where `μ_it` is undefined.
    pub mu_it: [Array2<f64>; 4],
}

impl MuValues {
    pub fn t(&self, c: Combo) -> &[f64] {
        &self.mu_t[c.index()]
    }

    pub fn it(&self, c: Combo) -> &Array2<f64> {
        &self.mu_it[c.index()]
    }
}

fn tables(p: &DyadProbTable, c: Combo) -> (ArrayView2<'_, f64>, ArrayView2<'_, f64>) {
    let (ca, cb) = c.configs();
    (p.get(ca).view(), p.get(cb).view())
}

fn mu_for(p: &DyadProbTable, c: Combo) -> (Vec<f64>, Array2<f64>) {
    let n = p.n();
    let n2 = (n * n) as f64;
    let (q, r) = tables(p, c);
    let rqt = r.dot(&q.t());
    let mu_t: Vec<f64> = (0..n)
        .map(|t| {
            let mut s = CompensatedSum::new();
            for i in 0..n {
                s.add(q[[i, t]] * rqt[[i, t]]);
            }
            s.value() / n2
        })
        .collect();
    let full = q.t().dot(&r).dot(&q.t());
    let h: Vec<f64> = (0..n).map(|t| (0..n).map(|l| r[[t, l]] * q[[t, l]]).sum()).collect();
    let g: Vec<f64> = (0..n).map(|i| (0..n).map(|k| q[[k, i]] * r[[k, i]]).sum()).collect();
    let mut mu_it = Array2::zeros((n, n));
    for i in 0..n {
        for t in 0..n {
            if i != t {
                let corr = q[[t, i]] * (h[t] + g[i] - r[[t, i]] * q[[t, i]]);
                mu_it[[i, t]] = (full[[i, t]] - corr) / n2;
            }
        }
    }
    (mu_t, mu_it)
}

pub fn mu_values(p: &DyadProbTable) -> MuValues {
    let parts = Combo::ALL.map(|c| mu_for(p, c));
    MuValues {
        mu_t: parts.clone().map(|(t, _)| t),
        mu_it: parts.map(|(_, it)| it),
    }
}

fn check_mu_t(c: Combo, mu: &[f64]) -> Result<()> {
    match mu.iter().position(|&m| !(m > 0.0 && m.is_finite())) {
        Some(t) => Err(Error::ZeroMu { combo: c.label(), index: (t, t) }),
        None => Ok(()),
    }
}

fn check_mu_it(c: Combo, mu: &Array2<f64>) -> Result<()> {
    for ((i, t), &m) in mu.indexed_iter() {
        if i != t && !(m > 0.0 && m.is_finite()) {
            return Err(Error::ZeroMu { combo: c.label(), index: (i, t) });
        }
    }
    Ok(())
}

/// `η_it^{(abc)}`, `ζ_{it,1}^{(abc)}` and `ζ_{it,2}^{(abc)}` per combination;
/// diagonals are zero.
#[derive(Debug, Clone, PartialEq)]
pub struct EtaZeta {
    pub eta: [Array2<f64>; 4],
    pub zeta1: [Array2<f64>; 4],
    pub zeta2: [Array2<f64>; 4],
}

impl EtaZeta {
    pub fn eta(&self, c: Combo) -> &Array2<f64> {
        &self.eta[c.index()]
    }

    pub fn zeta1(&self, c: Combo) -> &Array2<f64> {
        &self.zeta1[c.index()]
    }

    pub fn zeta2(&self, c: Combo) -> &Array2<f64> {
        &self.zeta2[c.index()]
    }
}

fn eta_zeta_for(p: &DyadProbTable, c: Combo, mu: &[f64], mu_swap: &[f64]) -> [Array2<f64>; 3] {
    let n = p.n();
    let nf = n as f64;
    let (q, r) = tables(p, c);
    let rqt = r.dot(&q.t());
    let qtr = q.t().dot(&r);
    let inv_swap = Array1::from_iter(mu_swap.iter().map(|m| 1.0 / m));
    let w = (&r * &inv_swap.view().insert_axis(Axis(0))).dot(&r);
    let mut eta = Array2::zeros((n, n));
    let mut z1 = Array2::zeros((n, n));
    let mut z2 = Array2::zeros((n, n));
    let n3 = nf * nf * nf;
    for i in 0..n {
        for t in 0..n {
            if i == t {
                continue;
            }
            let u = rqt[[i, t]] / mu[t];
            let v = qtr[[i, t]] / mu[i];
            let v_ti = qtr[[t, i]] / mu[t];
            eta[[i, t]] = (u + v - w[[i, t]]) / nf;
            z1[[i, t]] = (u * u + v * v) / (2.0 * n3);
            z2[[i, t]] = u * v_ti / n3;
        }
    }
    [eta, z1, z2]
}

pub fn eta_zeta(p: &DyadProbTable, mu: &MuValues) -> Result<EtaZeta> {
    for c in Combo::ALL {
        check_mu_t(c, mu.t(c))?;
    }
    let parts = Combo::ALL.map(|c| eta_zeta_for(p, c, mu.t(c), mu.t(c.swapped())));
    let [a, b, c, d] = parts;
    let [e0, z10, z20] = a;
    let [e1, z11, z21] = b;
    let [e2, z12, z22] = c;
    let [e3, z13, z23] = d;
    Ok(EtaZeta { eta: [e0, e1, e2, e3], zeta1: [z10, z11, z12, z13], zeta2: [z20, z21, z22, z23] })
}

/// `κ^{(1)}, κ^{(2)}, ξ^{(1)}, ξ^{(2)}`; diagonals are zero.
#[derive(Debug, Clone, PartialEq)]
pub struct KappaXi {
    pub kappa1: Array2<f64>,
    pub kappa2: Array2<f64>,
    pub xi1: Array2<f64>,
    pub xi2: Array2<f64>,
}

fn reciprocal_offdiag(m: &Array2<f64>) -> Array2<f64> {
    let mut z = m.mapv(|v| 1.0 / v);
    z.diag_mut().fill(0.0);
    z
}

/// `n²κ[i][k] = (Z·G)[i][k] − Z[i][k]·G[k][k] − Y[k][i]·(s[i] − Z[i][k]·X[k][i])`
/// with `G = X·Yᵀ` and `s[i] = Σ_t Z[i][t]·X[t][i]`.
fn kappa(x: ArrayView2<f64>, y: ArrayView2<f64>, z: &Array2<f64>) -> Array2<f64> {
    let n = x.nrows();
    let n2 = (n * n) as f64;
    let g = x.dot(&y.t());
    let zg = z.dot(&g);
    let s: Vec<f64> = (0..n).map(|i| (0..n).map(|t| z[[i, t]] * x[[t, i]]).sum()).collect();
    Array2::from_shape_fn((n, n), |(i, k)| {
        if i == k {
            0.0
        } else {
            (zg[[i, k]] - z[[i, k]] * g[[k, k]] - y[[k, i]] * (s[i] - z[[i, k]] * x[[k, i]])) / n2
        }
    })
}

/// `n²ξ[j][l] = (Z̃·H)[j][l] − Z̃[j][l]·H[l][l] − Y[j][l]·(s[j] − Z̃[j][l]·X[j][l])`
/// with `Z̃ = Zᵀ`, `H = Xᵀ·Y` and `s[j] = Σ_t Z̃[j][t]·X[j][t]`.
fn xi(x: ArrayView2<f64>, y: ArrayView2<f64>, z: &Array2<f64>) -> Array2<f64> {
    let n = x.nrows();
    let n2 = (n * n) as f64;
    let zt = z.t();
    let h = x.t().dot(&y);
    let zh = zt.dot(&h);
    let s: Vec<f64> = (0..n).map(|j| (0..n).map(|t| zt[[j, t]] * x[[j, t]]).sum()).collect();
    Array2::from_shape_fn((n, n), |(j, l)| {
        if j == l {
            0.0
        } else {
            (zh[[j, l]] - zt[[j, l]] * h[[l, l]] - y[[j, l]] * (s[j] - zt[[j, l]] * x[[j, l]])) / n2
        }
    })
}

pub fn kappa_xi(p: &DyadProbTable, mu: &MuValues) -> Result<KappaXi> {
    check_mu_it(Combo::C100, mu.it(Combo::C100))?;
    check_mu_it(Combo::C010, mu.it(Combo::C010))?;
    let z1 = reciprocal_offdiag(mu.it(Combo::C100));
    let z2 = reciprocal_offdiag(mu.it(Combo::C010));
    let (p01, p00) = (p.p01.view(), p.p00.view());
    Ok(KappaXi {
        kappa1: kappa(p01, p00, &z1),
        kappa2: kappa(p00, p01, &z2),
        xi1: xi(p01, p00, &z1),
        xi2: xi(p00, p01, &z2),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    True,
    Plugin,
}

/// Asymptotic variances and biases of the estimators.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticTable {
    pub source: Source,
    pub n: usize,
    pub sigma_theta2: f64,
    pub sigma_rho2: f64,
    /// Empty for global-only tables.
    pub sigma_alpha2: Vec<f64>,
    pub sigma_beta2: Vec<f64>,
    /// Asymptotic `Cov(α̂_i, β̂_i)`.
    pub sigma_cross: Vec<f64>,
    /// `σ_ii` with weights `p01·p01` and `p00(1 − p01)` on the last two terms.
    pub sigma_cross_alt: Vec<f64>,
    pub theta_star: f64,
    pub rho_star: f64,
    /// `ρ*` with the opposite sign on the `ζ₂^{(011)}` cross term.
    pub rho_star_alt: f64,
    /// `(C_n, c_n)`: max and min off-diagonal `p^{01}`.
    pub sparsity: (f64, f64),
}

impl AsymptoticTable {
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("table serialises")
    }
}

fn pair_sum(n: usize, f: impl Fn(usize, usize) -> f64) -> f64 {
    let mut s = CompensatedSum::new();
    for i in 0..n {
        for t in 0..i {
            s.add(f(i, t));
        }
    }
    s.value()
}

fn sigma_theta_rho(p: &DyadProbTable, ez: &EtaZeta) -> (f64, f64) {
    let n = p.n();
    let n4 = (n as f64).powi(4);
    let (e100, e010, e011, e101) =
        (ez.eta(Combo::C100), ez.eta(Combo::C010), ez.eta(Combo::C011), ez.eta(Combo::C101));
    let theta = pair_sum(n, |i, t| {
        let x = [e100[[i, t]], e100[[t, i]], -(e010[[i, t]] + e010[[t, i]])];
        let y = [p.p01[[i, t]], p.p10[[i, t]], p.p00[[i, t]]];
        g_unchecked(&x, &y)
    }) / n4;
    let rho = pair_sum(n, |i, t| {
        let x = [
            -(e100[[i, t]] + e011[[t, i]]),
            e010[[i, t]] + e010[[t, i]],
            e101[[i, t]] + e101[[t, i]],
            -(e011[[i, t]] + e100[[t, i]]),
        ];
        let y = [p.p01[[i, t]], p.p00[[i, t]], p.p11[[i, t]], p.p10[[i, t]]];
        g_unchecked(&x, &y)
    }) / n4;
    (theta, rho)
}

/// `(θ*, ρ*, ρ*_alt)`.
fn bias(p: &DyadProbTable, ez: &EtaZeta) -> (f64, f64, f64) {
    let n = p.n();
    let n2 = (n * n) as f64;
    let z1 = |c: Combo, i: usize, t: usize| ez.zeta1(c)[[i, t]];
    let z2 = |c: Combo, i: usize, t: usize| ez.zeta2(c)[[i, t]];
    let both = |c: Combo, i: usize, t: usize| z1(c, i, t) + z1(c, t, i) + z2(c, i, t) + z2(c, t, i);
    let var = |x: f64| x * (1.0 - x);
    let theta = pair_sum(n, |i, t| {
        let (q01, q10, q00) = (p.p01[[i, t]], p.p10[[i, t]], p.p00[[i, t]]);
        -z1(Combo::C100, i, t) * var(q01) - z1(Combo::C100, t, i) * var(q10)
            + (z2(Combo::C100, i, t) + z2(Combo::C100, t, i)) * q10 * q01
            + both(Combo::C010, i, t) * var(q00)
    }) / n2;
    let rho_parts = |sign: f64| {
        pair_sum(n, |i, t| {
            let (q01, q10, q00, q11) = (p.p01[[i, t]], p.p10[[i, t]], p.p00[[i, t]], p.p11[[i, t]]);
            (z1(Combo::C100, i, t) + z1(Combo::C011, t, i)) * var(q01)
                + (z1(Combo::C100, t, i) + z1(Combo::C011, i, t)) * var(q10)
                - both(Combo::C101, i, t) * var(q11)
                - both(Combo::C010, i, t) * var(q00)
                - (z2(Combo::C100, i, t) + z2(Combo::C100, t, i)
                    + sign * (z2(Combo::C011, i, t) + z2(Combo::C011, t, i)))
                    * q01
                    * q10
        }) / n2
    };
    (theta, rho_parts(1.0), rho_parts(-1.0))
}

/// `(σ_α², σ_β², σ_ii, σ_ii alt)`.
fn node_variances(p: &DyadProbTable, kx: &KappaXi) -> [Vec<f64>; 4] {
    let n = p.n();
    let n2 = (n * n) as f64;
    let row_sum = |i: usize, f: &dyn Fn(usize) -> f64| {
        let mut s = CompensatedSum::new();
        for k in (0..n).filter(|&k| k != i) {
            s.add(f(k));
        }
        s.value() / n2
    };
    let alpha = (0..n)
        .map(|i| {
            row_sum(i, &|k| {
                g_unchecked(&[kx.kappa1[[i, k]], -kx.kappa2[[i, k]]], &[p.p01[[k, i]], p.p00[[k, i]]])
            })
        })
        .collect();
    let beta = (0..n)
        .map(|j| {
            row_sum(j, &|l| g_unchecked(&[kx.xi1[[j, l]], -kx.xi2[[j, l]]], &[p.p01[[j, l]], p.p00[[j, l]]]))
        })
        .collect();
    let cross = |alt: bool| -> Vec<f64> {
        (0..n)
            .map(|i| {
                row_sum(i, &|l| {
                    let (k1, k2, x1, x2) = (kx.kappa1[[i, l]], kx.kappa2[[i, l]], kx.xi1[[i, l]], kx.xi2[[i, l]]);
                    let (q01, q10, q00) = (p.p01[[i, l]], p.p10[[i, l]], p.p00[[i, l]]);
                    let (w3, w4) = if alt { (q01 * q01, q00 * (1.0 - q01)) } else { (q00 * q01, q00 * (1.0 - q00)) };
                    -k1 * x1 * q10 * q01 + k1 * x2 * q10 * q00 + k2 * x1 * w3 + k2 * x2 * w4
                })
            })
            .collect()
    };
    [alpha, beta, cross(false), cross(true)]
}

fn table(p: &DyadProbTable, source: Source, nodes: bool) -> Result<AsymptoticTable> {
    let mu = mu_values(p);
    let ez = eta_zeta(p, &mu)?;
    let (sigma_theta2, sigma_rho2) = sigma_theta_rho(p, &ez);
    let (theta_star, rho_star, rho_star_alt) = bias(p, &ez);
    drop(ez);
    let [sigma_alpha2, sigma_beta2, sigma_cross, sigma_cross_alt] = if nodes {
        node_variances(p, &kappa_xi(p, &mu)?)
    } else {
        Default::default()
    };
    Ok(AsymptoticTable {
        source,
        n: p.n(),
        sigma_theta2,
        sigma_rho2,
        sigma_alpha2,
        sigma_beta2,
        sigma_cross,
        sigma_cross_alt,
        theta_star,
        rho_star,
        rho_star_alt,
        sparsity: p.sparsity_constants(),
    })
}

/// Full table at the true probabilities.
pub fn variance_table(p: &DyadProbTable) -> Result<AsymptoticTable> {
    table(p, Source::True, true)
}

/// `σ_θ², σ_ρ², θ*, ρ*` only; the node-level vectors are left empty.
pub fn global_table(p: &DyadProbTable) -> Result<AsymptoticTable> {
    table(p, Source::True, false)
}

/// `(θ*, ρ*)`.
pub fn bias_terms(p: &DyadProbTable) -> Result<(f64, f64)> {
    let mu = mu_values(p);
    let ez = eta_zeta(p, &mu)?;
    let (theta, rho, _) = bias(p, &ez);
    Ok((theta, rho))
}

/// Table evaluated at `dyad_probs(Θ̂)`.
pub fn plug_in(est: &EstimateReport) -> Result<AsymptoticTable> {
    plug_in_params(&est.to_params()?, true)
}

/// Plug-in table for a parameter estimate; `nodes = false` skips the
/// node-level variances.
pub fn plug_in_params(theta_hat: &ParamVector, nodes: bool) -> Result<AsymptoticTable> {
    let mut t = table(&dyad_probs(theta_hat), Source::Plugin, nodes)?;
    t.source = Source::Plugin;
    Ok(t)
}
