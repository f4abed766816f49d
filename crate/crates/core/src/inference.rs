//! Bias-corrected intervals and tests from plug-in asymptotics.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};

use crate::asymptotics::{plug_in_params, AsymptoticTable};
use crate::error::{Error, Result};
use crate::estimator::{estimate_graph, EstimateReport, Method};
use crate::model::Digraph;

fn std_normal() -> Normal {
    Normal::standard()
}

/// `Φ(z) = erfc(−z/√2)/2`.
pub fn normal_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z / std::f64::consts::SQRT_2)
}

/// Upper tail `1 − Φ(z)`, accurate far into the tail.
pub fn normal_sf(z: f64) -> f64 {
    normal_cdf(-z)
}

/// `Φ⁻¹(p)`, refined by Newton steps on `Φ`.
pub fn normal_quantile(p: f64) -> f64 {
    if p <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if p >= 1.0 {
        return f64::INFINITY;
    }
    let mut z = std_normal().inverse_cdf(p);
    for _ in 0..3 {
        let pdf = (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt();
        if pdf == 0.0 {
            break;
        }
        let err = if p < 0.5 { normal_cdf(z) - p } else { (1.0 - p) - normal_sf(z) };
        z -= err / pdf;
    }
    z
}

/// Two-sided critical value `z_{1−level/2}`.
pub fn z_crit(level: f64) -> f64 {
    normal_quantile(1.0 - level / 2.0)
}

/// `P(χ²_df > x)`.
pub fn chi_square_sf(x: f64, df: usize) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    ChiSquared::new(df as f64).expect("df ≥ 1").sf(x)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "kebab-case")]
pub enum NullDistribution {
    StandardNormal,
    ChiSquare { df: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestReport {
    pub name: String,
    /// Bias-corrected point estimate the statistic and interval are built on.
    pub estimate: f64,
    pub statistic: f64,
    pub null_distribution: NullDistribution,
    pub p_value: f64,
    pub level: f64,
    pub reject: bool,
    pub ci: Option<(f64, f64)>,
}

fn check_level(level: f64) -> Result<()> {
    if level > 0.0 && level < 1.0 {
        Ok(())
    } else {
        Err(Error::Config(format!("level {level} outside (0, 1)")))
    }
}

/// Two-sided z-test of `estimate = null` with standard error `se`.
fn z_test(name: &str, estimate: f64, null: f64, se: f64, level: f64) -> Result<TestReport> {
    check_level(level)?;
    if !(se > 0.0 && se.is_finite()) {
        return Err(Error::SingularCovariance(se));
    }
    let statistic = (estimate - null).abs() / se;
    let p_value = (2.0 * normal_sf(statistic)).min(1.0);
    let half = z_crit(level) * se;
    Ok(TestReport {
        name: name.to_string(),
        estimate,
        statistic,
        null_distribution: NullDistribution::StandardNormal,
        p_value,
        level,
        reject: p_value < level,
        ci: Some((estimate - half, estimate + half)),
    })
}

/// Estimates together with their plug-in asymptotic table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fitted {
    pub estimate: EstimateReport,
    pub table: AsymptoticTable,
}

impl Fitted {
    /// Plug-in fit; `nodes = false` computes only the global quantities.
    pub fn new(estimate: EstimateReport, nodes: bool) -> Result<Fitted> {
        let table = plug_in_params(&estimate.to_params()?, nodes)?;
        Ok(Fitted { estimate, table })
    }

    pub fn from_graph(g: &Digraph, method: Method, nodes: bool) -> Result<Fitted> {
        Fitted::new(estimate_graph(g, method)?, nodes)
    }

    /// `ρ̂ − ρ̂*`.
    pub fn rho_corrected(&self) -> f64 {
        self.estimate.rho - self.table.rho_star
    }

    /// `θ̂ − θ̂*`.
    pub fn theta_corrected(&self) -> f64 {
        self.estimate.theta - self.table.theta_star
    }

    fn node_table(&self) -> Result<()> {
        if self.table.sigma_alpha2.len() == self.estimate.n() {
            Ok(())
        } else {
            Err(Error::Config("node-level variances were not computed".into()))
        }
    }
}

/// Test of `ρ = rho0` with statistic `|ρ̂ − ρ̂* − ρ₀|/σ̂_ρ` and the
/// bias-corrected interval `ρ̂ − ρ̂* ± z·σ̂_ρ`.
pub fn test_reciprocity(fit: &Fitted, level: f64, rho0: f64) -> Result<TestReport> {
    z_test("reciprocity", fit.rho_corrected(), rho0, fit.table.sigma_rho2.sqrt(), level)
}

/// Bias-corrected interval `θ̂ − θ̂* ± z·σ̂_θ` (with the test of `θ = 0`).
pub fn ci_theta(fit: &Fitted, level: f64) -> Result<TestReport> {
    z_test("density", fit.theta_corrected(), 0.0, fit.table.sigma_theta2.sqrt(), level)
}

/// Two independent graphs: `T = {(ρ̂₁ − ρ̂₁*) − (ρ̂₂ − ρ̂₂*)}/(σ̂²_{ρ,1} + σ̂²_{ρ,2})^{1/2}`.
///
/// `statistic` keeps the sign of `T`; rejection uses `|T|`.
pub fn compare_graphs(a: &Fitted, b: &Fitted, level: f64) -> Result<TestReport> {
    let diff = a.rho_corrected() - b.rho_corrected();
    let se = (a.table.sigma_rho2 + b.table.sigma_rho2).sqrt();
    let mut r = z_test("compare-reciprocity", diff, 0.0, se, level)?;
    r.statistic = diff / se;
    Ok(r)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Alpha,
    Beta,
}

impl Side {
    fn label(self) -> &'static str {
        match self {
            Side::Alpha => "alpha",
            Side::Beta => "beta",
        }
    }

    fn values<'a>(self, fit: &'a Fitted) -> (&'a [f64], &'a [f64]) {
        match self {
            Side::Alpha => (&fit.estimate.alpha, &fit.table.sigma_alpha2),
            Side::Beta => (&fit.estimate.beta, &fit.table.sigma_beta2),
        }
    }
}

fn check_indices(indices: &[usize], n: usize) -> Result<()> {
    if indices.len() < 2 {
        return Err(Error::InvalidIndices(format!("need at least two indices, got {}", indices.len())));
    }
    if let Some(&bad) = indices.iter().find(|&&i| i >= n) {
        return Err(Error::InvalidIndices(format!("index {bad} out of range for n = {n}")));
    }
    let mut seen = indices.to_vec();
    seen.sort_unstable();
    if seen.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::InvalidIndices("indices must be distinct".into()));
    }
    Ok(())
}

/// Interval `x̂_i − x̂_j ± z(σ̂_i² + σ̂_j²)^{1/2}` with its z-test.
pub fn ci_diff(fit: &Fitted, side: Side, i: usize, j: usize, level: f64) -> Result<TestReport> {
    fit.node_table()?;
    check_indices(&[i, j], fit.estimate.n())?;
    let (x, s) = side.values(fit);
    z_test(&format!("{}-difference", side.label()), x[i] - x[j], 0.0, (s[i] + s[j]).sqrt(), level)
}

pub fn ci_alpha_diff(fit: &Fitted, i: usize, j: usize, level: f64) -> Result<TestReport> {
    ci_diff(fit, Side::Alpha, i, j, level)
}

pub fn ci_beta_diff(fit: &Fitted, i: usize, j: usize, level: f64) -> Result<TestReport> {
    ci_diff(fit, Side::Beta, i, j, level)
}

/// Interval for `α_i − β_i`, whose variance carries the cross term
/// `σ_ii`: `σ̂_αᵢ² + σ̂_βᵢ² − 2σ̂_ii`.
pub fn ci_alpha_minus_beta(fit: &Fitted, i: usize, level: f64) -> Result<TestReport> {
    fit.node_table()?;
    if i >= fit.estimate.n() {
        return Err(Error::InvalidIndices(format!("index {i} out of range")));
    }
    let t = &fit.table;
    let var = t.sigma_alpha2[i] + t.sigma_beta2[i] - 2.0 * t.sigma_cross[i];
    z_test("alpha-minus-beta", fit.estimate.alpha[i] - fit.estimate.beta[i], 0.0, var.max(0.0).sqrt(), level)
}

/// Covariance of successive differences `(x₁ − x₂, …, x_{k−1} − x_k)` of
/// independent estimates with variances `s`: tridiagonal with
/// `s_m + s_{m+1}` on the diagonal and `−s_{m+1}` beside it.
pub fn difference_covariance(s: &[f64]) -> Vec<Vec<f64>> {
    let m = s.len().saturating_sub(1);
    let mut c = vec![vec![0.0; m]; m];
    for r in 0..m {
        c[r][r] = s[r] + s[r + 1];
        if r + 1 < m {
            c[r][r + 1] = -s[r + 1];
            c[r + 1][r] = -s[r + 1];
        }
    }
    c
}

/// Cholesky factor of a symmetric positive definite matrix.
fn cholesky(a: &[Vec<f64>]) -> Option<Vec<Vec<f64>>> {
    let m = a.len();
    let mut l = vec![vec![0.0; m]; m];
    for i in 0..m {
        for j in 0..=i {
            let s: f64 = (0..j).map(|k| l[i][k] * l[j][k]).sum();
            if i == j {
                let d = a[i][i] - s;
                if !(d > 0.0) {
                    return None;
                }
                l[i][i] = d.sqrt();
            } else {
                l[i][j] = (a[i][j] - s) / l[j][j];
            }
        }
    }
    Some(l)
}

fn cholesky_solve(l: &[Vec<f64>], b: &[f64]) -> Vec<f64> {
    let m = l.len();
    let mut y = vec![0.0; m];
    for i in 0..m {
        y[i] = (b[i] - (0..i).map(|k| l[i][k] * y[k]).sum::<f64>()) / l[i][i];
    }
    let mut x = vec![0.0; m];
    for i in (0..m).rev() {
        x[i] = (y[i] - ((i + 1)..m).map(|k| l[k][i] * x[k]).sum::<f64>()) / l[i][i];
    }
    x
}

/// Inverse of a symmetric positive definite matrix, or the condition
/// number when it exceeds `1e12`.
pub fn spd_inverse(a: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    let m = a.len();
    let l = cholesky(a).ok_or(Error::SingularCovariance(f64::INFINITY))?;
    let cols: Vec<Vec<f64>> = (0..m)
        .map(|c| {
            let mut e = vec![0.0; m];
            e[c] = 1.0;
            cholesky_solve(&l, &e)
        })
        .collect();
    let inv: Vec<Vec<f64>> = (0..m).map(|r| (0..m).map(|c| cols[c][r]).collect()).collect();
    let norm1 = |x: &[Vec<f64>]| (0..m).map(|c| (0..m).map(|r| x[r][c].abs()).sum::<f64>()).fold(0.0, f64::max);
    let cond = norm1(a) * norm1(&inv);
    if !(cond <= 1e12) {
        return Err(Error::SingularCovariance(cond));
    }
    Ok(inv)
}

/// `dᵀ C⁻¹ d`.
pub fn wald_statistic(d: &[f64], cov: &[Vec<f64>]) -> Result<f64> {
    spd_inverse(cov)?;
    let l = cholesky(cov).ok_or(Error::SingularCovariance(f64::INFINITY))?;
    let x = cholesky_solve(&l, d);
    Ok(d.iter().zip(&x).map(|(a, b)| a * b).sum())
}

/// Equality of `α` (or `β`) over `indices`: a z-test for two indices and a
/// Wald test on successive differences with `k − 1` degrees of freedom
/// otherwise.
pub fn test_equality(fit: &Fitted, side: Side, indices: &[usize], level: f64) -> Result<TestReport> {
    fit.node_table()?;
    check_indices(indices, fit.estimate.n())?;
    check_level(level)?;
    if indices.len() == 2 {
        let mut r = ci_diff(fit, side, indices[0], indices[1], level)?;
        r.name = format!("{}-equality", side.label());
        return Ok(r);
    }
    let (x, s) = side.values(fit);
    let d: Vec<f64> = indices.windows(2).map(|w| x[w[0]] - x[w[1]]).collect();
    let sv: Vec<f64> = indices.iter().map(|&i| s[i]).collect();
    let statistic = wald_statistic(&d, &difference_covariance(&sv))?;
    let df = indices.len() - 1;
    let p_value = chi_square_sf(statistic, df);
    Ok(TestReport {
        name: format!("{}-equality", side.label()),
        estimate: d[0],
        statistic,
        null_distribution: NullDistribution::ChiSquare { df },
        p_value,
        level,
        reject: p_value < level,
        ci: None,
    })
}

pub fn test_alpha_equality(fit: &Fitted, indices: &[usize], level: f64) -> Result<TestReport> {
    test_equality(fit, Side::Alpha, indices, level)
}

pub fn test_beta_equality(fit: &Fitted, indices: &[usize], level: f64) -> Result<TestReport> {
    test_equality(fit, Side::Beta, indices, level)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{linear_design, sample_graph};

    #[test]
    fn normal_values() {
        assert_eq!(normal_cdf(0.0), 0.5);
        assert!((normal_cdf(1.959963984540054) - 0.975).abs() < 1e-12);
        for z in [-7.5, -3.0, -0.3, 0.1, 2.2, 6.0] {
            assert!((normal_cdf(z) + normal_cdf(-z) - 1.0).abs() < 1e-14);
        }
        for p in [1e-10, 0.001, 0.025, 0.3, 0.5, 0.8, 0.975, 0.999999] {
            assert!((normal_cdf(normal_quantile(p)) - p).abs() < 1e-10 * p.max(1e-3));
        }
        assert!((z_crit(0.05) - 1.959963984540054).abs() < 1e-10);
    }

    #[test]
    fn chi_square_values() {
        // P(χ²₁ > 3.841458820694124) = 0.05; P(χ²₂ > x) = e^{−x/2}
        assert!((chi_square_sf(3.841458820694124, 1) - 0.05).abs() < 1e-12);
        assert!((chi_square_sf(3.0, 2) - (-1.5f64).exp()).abs() < 1e-12);
        assert_eq!(chi_square_sf(0.0, 3), 1.0);
    }

    #[test]
    fn tridiagonal_signs() {
        let c = difference_covariance(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(c, vec![vec![3.0, -2.0, 0.0], vec![-2.0, 5.0, -3.0], vec![0.0, -3.0, 7.0]]);
    }

    #[test]
    fn wald_solve_matches_explicit_inverse() {
        let c = difference_covariance(&[0.011, 0.02, 0.017, 0.03]);
        let d = [0.3, -0.1, 0.25];
        let inv = spd_inverse(&c).unwrap();
        let explicit: f64 = (0..3).map(|r| (0..3).map(|k| d[r] * inv[r][k] * d[k]).sum::<f64>()).sum();
        assert!((wald_statistic(&d, &c).unwrap() - explicit).abs() < 1e-10);
    }

    #[test]
    fn singular_covariance_is_rejected() {
        let c = vec![vec![1.0, 1.0], vec![1.0, 1.0]];
        assert!(matches!(wald_statistic(&[1.0, 0.0], &c), Err(Error::SingularCovariance(_))));
        let c = vec![vec![1.0, 0.0], vec![0.0, 1e-14]];
        assert!(matches!(spd_inverse(&c), Err(Error::SingularCovariance(_))));
    }

    fn fitted() -> Fitted {
        let g = sample_graph(&linear_design(120, 0.5, 0.0).unwrap(), 2);
        Fitted::from_graph(&g, Method::Dense, true).unwrap()
    }

    #[test]
    fn reports_are_consistent() {
        let f = fitted();
        let r = test_reciprocity(&f, 0.05, 0.0).unwrap();
        assert_eq!(r.reject, r.p_value < 0.05);
        let (lo, hi) = r.ci.unwrap();
        assert!(lo < r.estimate && r.estimate < hi);
        assert!((r.estimate - (f.estimate.rho - f.table.rho_star)).abs() < 1e-15);
        let c = compare_graphs(&f, &f, 0.05).unwrap();
        assert_eq!(c.statistic, 0.0);
        assert!(!c.reject);
        assert!(matches!(test_alpha_equality(&f, &[3, 3], 0.05), Err(Error::InvalidIndices(_))));
        assert!(matches!(ci_alpha_diff(&f, 4, 4, 0.05), Err(Error::InvalidIndices(_))));
        assert!(matches!(test_alpha_equality(&f, &[1], 0.05), Err(Error::InvalidIndices(_))));
        let w = test_alpha_equality(&f, &[1, 2, 3, 4], 0.05).unwrap();
        assert_eq!(w.null_distribution, NullDistribution::ChiSquare { df: 3 });
        let narrow = ci_alpha_diff(&f, 1, 7, 0.2).unwrap().ci.unwrap();
        let wide = ci_alpha_diff(&f, 1, 7, 0.01).unwrap().ci.unwrap();
        assert!(wide.0 < narrow.0 && narrow.1 < wide.1);
        assert!(ci_alpha_minus_beta(&f, 5, 0.05).unwrap().ci.is_some());
    }
}
