//! Definitional (loop-by-loop) reference implementations.
#![allow(dead_code)]

use tdre::model::{Config, Digraph, DyadProbTable};

fn ind(g: &Digraph, c: Config, i: usize, j: usize) -> u64 {
    u64::from(i != j && g.config(i, j) == c)
}

/// `Σ_{i,j≠t} I_it^{x} I_ij^{y} I_tj^{x}`.
pub fn diag_count(g: &Digraph, x: Config, y: Config, t: usize) -> u64 {
    let n = g.n();
    let mut s = 0;
    for i in (0..n).filter(|&i| i != t) {
        for j in (0..n).filter(|&j| j != t) {
            s += ind(g, x, i, t) * ind(g, y, i, j) * ind(g, x, t, j);
        }
    }
    s
}

/// `Σ_{k,l≠i,t} I_ki^{x} I_kl^{y} I_tl^{x}`.
pub fn alpha_count(g: &Digraph, x: Config, y: Config, i: usize, t: usize) -> u64 {
    let n = g.n();
    let mut s = 0;
    for k in (0..n).filter(|&k| k != i && k != t) {
        for l in (0..n).filter(|&l| l != i && l != t) {
            s += ind(g, x, k, i) * ind(g, y, k, l) * ind(g, x, t, l);
        }
    }
    s
}

/// `Σ_{k,l≠j,t} I_kt^{x} I_kl^{y} I_jl^{x}`.
pub fn beta_count(g: &Digraph, x: Config, y: Config, j: usize, t: usize) -> u64 {
    let n = g.n();
    let mut s = 0;
    for k in (0..n).filter(|&k| k != j && k != t) {
        for l in (0..n).filter(|&l| l != j && l != t) {
            s += ind(g, x, k, t) * ind(g, y, k, l) * ind(g, x, j, l);
        }
    }
    s
}

pub struct NaiveEstimate {
    pub theta: Option<f64>,
    pub rho: Option<f64>,
    pub alpha: Option<Vec<f64>>,
    pub beta: Option<Vec<f64>>,
}

fn lr(a: u64, b: u64) -> Option<f64> {
    (a > 0 && b > 0).then(|| (a as f64 / b as f64).ln())
}

/// Estimators straight from their defining sums; each is `None` when one
/// of its counts vanishes.
pub fn naive_estimate(g: &Digraph, nodes: bool) -> NaiveEstimate {
    use Config::*;
    let n = g.n();
    let nf = n as f64;
    let avg = |f: &dyn Fn(usize) -> Option<f64>| -> Option<f64> {
        let mut s = 0.0;
        for t in 0..n {
            s += f(t)?;
        }
        Some(s / nf)
    };
    let theta = avg(&|t| lr(diag_count(g, C01, C00, t), diag_count(g, C00, C01, t)));
    let rho = theta.and_then(|th| avg(&|t| lr(diag_count(g, C11, C10, t), diag_count(g, C10, C11, t))).map(|r| r - th));
    let node = |count: fn(&Digraph, Config, Config, usize, usize) -> u64| -> Option<Vec<f64>> {
        let th = theta?;
        (0..n)
            .map(|i| avg(&|t| lr(count(g, C01, C00, i, t), count(g, C00, C01, i, t))).map(|a| a - th))
            .collect()
    };
    let (alpha, beta) = if nodes { (node(alpha_count), node(beta_count)) } else { (None, None) };
    NaiveEstimate { theta, rho, alpha, beta }
}

/// Combination `(abc)` as `(ca, cb)` configurations, in table order
/// 100, 010, 011, 101.
pub const COMBOS: [(Config, Config); 4] = [
    (Config::C01, Config::C00),
    (Config::C00, Config::C01),
    (Config::C10, Config::C11),
    (Config::C11, Config::C10),
];
pub const SWAP: [usize; 4] = [1, 0, 3, 2];

pub struct NaiveAsymptotics {
    pub mu_t: Vec<Vec<f64>>,
    pub mu_it: Vec<Vec<Vec<f64>>>,
    pub eta: Vec<Vec<Vec<f64>>>,
    pub zeta1: Vec<Vec<Vec<f64>>>,
    pub zeta2: Vec<Vec<Vec<f64>>>,
    pub kappa1: Vec<Vec<f64>>,
    pub kappa2: Vec<Vec<f64>>,
    pub xi1: Vec<Vec<f64>>,
    pub xi2: Vec<Vec<f64>>,
    pub sigma_theta2: f64,
    pub sigma_rho2: f64,
    pub sigma_alpha2: Vec<f64>,
    pub sigma_beta2: Vec<f64>,
    pub sigma_cross: Vec<f64>,
    pub theta_star: f64,
    pub rho_star: f64,
}

fn g(x: &[f64], y: &[f64]) -> f64 {
    let lin: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    x.iter().zip(y).map(|(a, b)| a * a * b).sum::<f64>() - lin * lin
}

pub fn naive_asymptotics(p: &DyadProbTable) -> NaiveAsymptotics {
    let n = p.n();
    let nf = n as f64;
    let pr = |c: Config, i: usize, j: usize| p.get(c)[[i, j]];
    let zero2 = || vec![vec![0.0; n]; n];

    let mut mu_t = vec![vec![0.0; n]; 4];
    let mut mu_it = vec![zero2(); 4];
    for (c, &(ca, cb)) in COMBOS.iter().enumerate() {
        for t in 0..n {
            let mut s = 0.0;
            for i in (0..n).filter(|&i| i != t) {
                for j in (0..n).filter(|&j| j != t && j != i) {
                    s += pr(ca, i, t) * pr(cb, i, j) * pr(ca, t, j);
                }
            }
            mu_t[c][t] = s / (nf * nf);
        }
        for i in 0..n {
            for t in (0..n).filter(|&t| t != i) {
                let mut s = 0.0;
                for k in (0..n).filter(|&k| k != i && k != t) {
                    for l in (0..n).filter(|&l| l != i && l != t && l != k) {
                        s += pr(ca, k, i) * pr(cb, k, l) * pr(ca, t, l);
                    }
                }
                mu_it[c][i][t] = s / (nf * nf);
            }
        }
    }

    let mut eta = vec![zero2(); 4];
    let mut zeta1 = vec![zero2(); 4];
    let mut zeta2 = vec![zero2(); 4];
    for (c, &(ca, cb)) in COMBOS.iter().enumerate() {
        let sw = SWAP[c];
        for i in 0..n {
            for t in (0..n).filter(|&t| t != i) {
                let mut e = 0.0;
                for j in (0..n).filter(|&j| j != i && j != t) {
                    e += pr(ca, t, j) * pr(cb, i, j) / mu_t[c][t] + pr(ca, j, i) * pr(cb, j, t) / mu_t[c][i]
                        - pr(cb, i, j) * pr(cb, j, t) / mu_t[sw][j];
                }
                eta[c][i][t] = e / nf;
                let (mut a, mut b, mut d) = (0.0, 0.0, 0.0);
                for j in (0..n).filter(|&j| j != t) {
                    a += pr(ca, t, j) * pr(cb, i, j);
                    b += pr(ca, j, i) * pr(cb, j, t);
                    d += pr(ca, j, t) * pr(cb, j, i);
                }
                let (a, b, d) = (a / mu_t[c][t], b / mu_t[c][i], d / mu_t[c][t]);
                zeta1[c][i][t] = (a * a + b * b) / (2.0 * nf.powi(3));
                zeta2[c][i][t] = a * d / nf.powi(3);
            }
        }
    }

    let mut kappa1 = zero2();
    let mut kappa2 = zero2();
    let mut xi1 = zero2();
    let mut xi2 = zero2();
    for a in 0..n {
        for b in (0..n).filter(|&b| b != a) {
            let (mut k1, mut k2, mut x1, mut x2) = (0.0, 0.0, 0.0, 0.0);
            for t in (0..n).filter(|&t| t != a && t != b) {
                for m in (0..n).filter(|&m| m != a && m != b && m != t) {
                    // κ_ab: i = a, k = b, l = m
                    k1 += pr(Config::C01, t, m) * pr(Config::C00, b, m) / mu_it[0][a][t];
                    k2 += pr(Config::C00, t, m) * pr(Config::C01, b, m) / mu_it[1][a][t];
                    // ξ_ab: j = a, l = b, k = m
                    x1 += pr(Config::C01, m, t) * pr(Config::C00, m, b) / mu_it[0][t][a];
                    x2 += pr(Config::C00, m, t) * pr(Config::C01, m, b) / mu_it[1][t][a];
                }
            }
            kappa1[a][b] = k1 / (nf * nf);
            kappa2[a][b] = k2 / (nf * nf);
            xi1[a][b] = x1 / (nf * nf);
            xi2[a][b] = x2 / (nf * nf);
        }
    }

    use Config::*;
    let (mut st, mut sr, mut ts, mut rs) = (0.0, 0.0, 0.0, 0.0);
    for t in 0..n {
        for i in (t + 1)..n {
            let (q01, q10, q00, q11) = (pr(C01, i, t), pr(C10, i, t), pr(C00, i, t), pr(C11, i, t));
            let e = |c: usize, a: usize, b: usize| eta[c][a][b];
            st += g(&[e(0, i, t), e(0, t, i), -(e(1, i, t) + e(1, t, i))], &[q01, q10, q00]);
            sr += g(
                &[
                    -(e(0, i, t) + e(2, t, i)),
                    e(1, i, t) + e(1, t, i),
                    e(3, i, t) + e(3, t, i),
                    -(e(2, i, t) + e(0, t, i)),
                ],
                &[q01, q00, q11, q10],
            );
            let z1 = |c: usize, a: usize, b: usize| zeta1[c][a][b];
            let z2 = |c: usize, a: usize, b: usize| zeta2[c][a][b];
            ts += -z1(0, i, t) * q01 * (1.0 - q01) - z1(0, t, i) * q10 * (1.0 - q10)
                + (z2(0, i, t) + z2(0, t, i)) * q10 * q01
                + (z1(1, i, t) + z1(1, t, i) + z2(1, i, t) + z2(1, t, i)) * q00 * (1.0 - q00);
            rs += (z1(0, i, t) + z1(2, t, i)) * q01 * (1.0 - q01) + (z1(0, t, i) + z1(2, i, t)) * q10 * (1.0 - q10)
                - (z1(3, i, t) + z1(3, t, i) + z2(3, i, t) + z2(3, t, i)) * q11 * (1.0 - q11)
                - (z1(1, i, t) + z1(1, t, i) + z2(1, i, t) + z2(1, t, i)) * q00 * (1.0 - q00)
                - (z2(0, i, t) + z2(0, t, i) + z2(2, i, t) + z2(2, t, i)) * q01 * q10;
        }
    }
    let n4 = nf.powi(4);
    let n2 = nf * nf;
    let mut sigma_alpha2 = vec![0.0; n];
    let mut sigma_beta2 = vec![0.0; n];
    let mut sigma_cross = vec![0.0; n];
    for i in 0..n {
        for k in (0..n).filter(|&k| k != i) {
            sigma_alpha2[i] += g(&[kappa1[i][k], -kappa2[i][k]], &[pr(C01, k, i), pr(C00, k, i)]);
            sigma_beta2[i] += g(&[xi1[i][k], -xi2[i][k]], &[pr(C01, i, k), pr(C00, i, k)]);
            let (q01, q10, q00) = (pr(C01, i, k), pr(C10, i, k), pr(C00, i, k));
            sigma_cross[i] += -kappa1[i][k] * xi1[i][k] * q10 * q01
                + kappa1[i][k] * xi2[i][k] * q10 * q00
                + kappa2[i][k] * xi1[i][k] * q00 * q01
                + kappa2[i][k] * xi2[i][k] * q00 * (1.0 - q00);
        }
        sigma_alpha2[i] /= n2;
        sigma_beta2[i] /= n2;
        sigma_cross[i] /= n2;
    }
    NaiveAsymptotics {
        mu_t,
        mu_it,
        eta,
        zeta1,
        zeta2,
        kappa1,
        kappa2,
        xi1,
        xi2,
        sigma_theta2: st / n4,
        sigma_rho2: sr / n4,
        sigma_alpha2,
        sigma_beta2,
        sigma_cross,
        theta_star: ts / n2,
        rho_star: rs / n2,
    }
}

/// Relative closeness with an absolute floor.
pub fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()).max(1e-300)
}
