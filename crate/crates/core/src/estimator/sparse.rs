//! Triple counts from sparse configuration lists.
//!
//! `A^{00}` is dense for sparse graphs, so it is never formed. Writing
//! `A^{00} = J − I − S` turns every product into sparse–sparse work plus
//! rank-one corrections built from column sums:
//!
//! * `X·A00·Y = |X_i|·colsum(Y) − X·Y − X·S·Y` (row `i`)
//! * `A00·X·A00 = (J − I − S)·X·(J − I − S)`, expanded per row below.

use rayon::prelude::*;

use crate::tally::{Csr, SparseTally};

use super::{DiagonalCounts, TripleCounts};

/// Per-thread scratch space.
struct Scratch {
    mult: Vec<i64>,
    touched: Vec<u32>,
    mark: Vec<bool>,
}

impl Scratch {
    fn new(n: usize) -> Self {
        Scratch { mult: vec![0; n], touched: Vec::new(), mark: vec![false; n] }
    }

    #[inline]
    fn bump(&mut self, l: u32, by: i64) {
        let slot = &mut self.mult[l as usize];
        if *slot == 0 {
            self.touched.push(l);
        }
        *slot += by;
    }

    fn set_marks(&mut self, row: &[u32]) {
        for &l in row {
            self.mark[l as usize] = true;
        }
    }

    fn clear_marks(&mut self, row: &[u32]) {
        for &l in row {
            self.mark[l as usize] = false;
        }
    }

    fn count_marked(&self, row: &[u32]) -> i64 {
        row.iter().filter(|&&l| self.mark[l as usize]).count() as i64
    }
}

fn column_sums(n: usize, m: &Csr) -> Vec<i64> {
    let mut c = vec![0i64; n];
    for i in 0..n {
        for &j in m.row(i) {
            c[j as usize] += 1;
        }
    }
    c
}

/// `z = colsum(X)·S`; `S` is symmetric so `z[m] = Σ_{l∈S_m} colsum(X)[l]`.
fn colsum_times_s(n: usize, cx: &[i64], s: &Csr) -> Vec<i64> {
    (0..n).map(|m| s.row(m).iter().map(|&l| cx[l as usize]).sum()).collect()
}

/// Operand `X·A00·Y` with its precomputed column sums.
struct XaY<'a> {
    x: &'a Csr,
    y: &'a Csr,
    yt: &'a Csr,
    s: &'a Csr,
    cy: Vec<i64>,
}

impl<'a> XaY<'a> {
    fn new(n: usize, x: &'a Csr, y: &'a Csr, yt: &'a Csr, s: &'a Csr) -> Self {
        XaY { x, y, yt, s, cy: column_sums(n, y) }
    }

    fn row(&self, i: usize, out: &mut [i64], sc: &mut Scratch) {
        let xi = self.x.row(i);
        let deg = xi.len() as i64;
        for (o, &c) in out.iter_mut().zip(&self.cy) {
            *o = deg * c;
        }
        for &k in xi {
            for &m in self.y.row(k as usize) {
                out[m as usize] -= 1;
            }
            for &l in self.s.row(k as usize) {
                sc.bump(l, 1);
            }
        }
        for idx in 0..sc.touched.len() {
            let l = sc.touched[idx] as usize;
            let w = sc.mult[l];
            for &m in self.y.row(l) {
                out[m as usize] -= w;
            }
            sc.mult[l] = 0;
        }
        sc.touched.clear();
    }

    /// `|X_i|·colsum(Y)[i] − Σ_{k∈X_i} Y[k][i] − Σ_{k∈X_i} Σ_{l∈S_k} Y[l][i]`,
    /// with column `i` of `Y` marked.
    fn diag(&self, i: usize, sc: &mut Scratch) -> i64 {
        let xi = self.x.row(i);
        let col = self.yt.row(i);
        sc.set_marks(col);
        let mut v = xi.len() as i64 * self.cy[i];
        for &k in xi {
            v -= i64::from(sc.mark[k as usize]);
            v -= sc.count_marked(self.s.row(k as usize));
        }
        sc.clear_marks(col);
        v
    }
}

/// Operand `A00·X·A00` with its precomputed correction vectors.
struct AxA<'a> {
    x: &'a Csr,
    s: &'a Csr,
    cx: Vec<i64>,
    z: Vec<i64>,
    nnz: i64,
}

impl<'a> AxA<'a> {
    fn new(n: usize, x: &'a Csr, s: &'a Csr) -> Self {
        let cx = column_sums(n, x);
        let z = colsum_times_s(n, &cx, s);
        AxA { x, s, cx, z, nnz: x.nnz() as i64 }
    }

    /// Accumulates `w = X_i + Σ_{k∈S_i} X_k` into the scratch multiplicities
    /// and returns `Σ w`.
    fn load_w(&self, i: usize, sc: &mut Scratch) -> i64 {
        let mut total = 0;
        for &l in self.x.row(i) {
            sc.bump(l, 1);
            total += 1;
        }
        for &k in self.s.row(i) {
            for &l in self.x.row(k as usize) {
                sc.bump(l, 1);
                total += 1;
            }
        }
        total
    }

    fn row(&self, i: usize, out: &mut [i64], sc: &mut Scratch) {
        let sum_v = self.nnz - self.load_w(i, sc);
        for ((o, &c), &z) in out.iter_mut().zip(&self.cx).zip(&self.z) {
            *o = sum_v - c - z;
        }
        for idx in 0..sc.touched.len() {
            let l = sc.touched[idx] as usize;
            let w = sc.mult[l];
            out[l] += w;
            for &m in self.s.row(l) {
                out[m as usize] += w;
            }
            sc.mult[l] = 0;
        }
        sc.touched.clear();
    }

    fn diag(&self, i: usize, sc: &mut Scratch) -> i64 {
        let si = self.s.row(i);
        sc.set_marks(si);
        let xi = self.x.row(i);
        // Σ w, w[i] and (wS)[i] = Σ_{l∈S_i} w_l
        let mut sum_w = xi.len() as i64;
        let mut w_i = 0;
        let mut ws_i = sc.count_marked(xi);
        for &k in si {
            let xk = self.x.row(k as usize);
            sum_w += xk.len() as i64;
            if xk.binary_search(&(i as u32)).is_ok() {
                w_i += 1;
            }
            ws_i += sc.count_marked(xk);
        }
        sc.clear_marks(si);
        (self.nnz - sum_w) - self.cx[i] + w_i - self.z[i] + ws_i
    }
}

/// `diag(X·Y·Z)` for sparse `X`, `Y` and `Zᵀ`.
fn sparse_triple_diag(x: &Csr, y: &Csr, zt: &Csr, i: usize, sc: &mut Scratch) -> i64 {
    let col = zt.row(i);
    sc.set_marks(col);
    let v = x.row(i).iter().map(|&k| sc.count_marked(y.row(k as usize))).sum();
    sc.clear_marks(col);
    v
}

fn to_u64(v: i64) -> u64 {
    debug_assert!(v >= 0, "negative triple count {v}");
    v as u64
}

fn full_rows<F>(n: usize, f: F) -> Vec<u64>
where
    F: Fn(usize, &mut [i64], &mut Scratch) + Sync,
{
    let mut out = vec![0u64; n * n];
    out.par_chunks_mut(n.max(1)).enumerate().for_each_init(
        || (Scratch::new(n), vec![0i64; n]),
        |(sc, buf), (i, row)| {
            f(i, buf, sc);
            for (o, &v) in row.iter_mut().zip(buf.iter()) {
                *o = to_u64(v);
            }
        },
    );
    out
}

fn diagonal<F>(n: usize, f: F) -> Vec<u64>
where
    F: Fn(usize, &mut Scratch) -> i64 + Sync,
{
    (0..n)
        .into_par_iter()
        .map_init(|| Scratch::new(n), |sc, i| to_u64(f(i, sc)))
        .collect()
}

pub(crate) fn triple_counts_sparse(t: &SparseTally) -> TripleCounts {
    let n = t.n();
    let b1_op = XaY::new(n, &t.a01, &t.a01, &t.a10, &t.s);
    let b2_op = AxA::new(n, &t.a01, &t.s);
    let b1 = full_rows(n, |i, out, sc| b1_op.row(i, out, sc));
    let b2 = full_rows(n, |i, out, sc| b2_op.row(i, out, sc));
    let b3_diag = diagonal(n, |i, sc| sparse_triple_diag(&t.a11, &t.a10, &t.a11, i, sc));
    let b4_diag = diagonal(n, |i, sc| sparse_triple_diag(&t.a01, &t.a11, &t.a10, i, sc));
    TripleCounts { n, b1, b2, b3_diag, b4_diag }
}

/// Diagonals only; `O(n·d²)` for maximum non-null degree `d`.
pub(crate) fn diagonal_counts_sparse(t: &SparseTally) -> DiagonalCounts {
    let n = t.n();
    let b1_op = XaY::new(n, &t.a01, &t.a01, &t.a10, &t.s);
    let b2_op = AxA::new(n, &t.a01, &t.s);
    DiagonalCounts {
        b1: diagonal(n, |i, sc| b1_op.diag(i, sc)),
        b2: diagonal(n, |i, sc| b2_op.diag(i, sc)),
        b3: diagonal(n, |i, sc| sparse_triple_diag(&t.a11, &t.a10, &t.a11, i, sc)),
        b4: diagonal(n, |i, sc| sparse_triple_diag(&t.a01, &t.a11, &t.a10, i, sc)),
    }
}

/// Rows needed for the node-level estimates of `i`:
/// `(row_i(B1ᵀ), row_i(B2), row_i(B1), row_i(B2ᵀ))`.
pub(crate) struct NodeRows {
    pub b1t: Vec<u64>,
    pub b2: Vec<u64>,
    pub b1: Vec<u64>,
    pub b2t: Vec<u64>,
}

pub(crate) fn node_rows_sparse(t: &SparseTally, nodes: &[usize]) -> Vec<NodeRows> {
    let n = t.n();
    // B1ᵀ = A10·A00·A10 and B2ᵀ = A00·A10·A00
    let b1_op = XaY::new(n, &t.a01, &t.a01, &t.a10, &t.s);
    let b1t_op = XaY::new(n, &t.a10, &t.a10, &t.a01, &t.s);
    let b2_op = AxA::new(n, &t.a01, &t.s);
    let b2t_op = AxA::new(n, &t.a10, &t.s);
    nodes
        .par_iter()
        .map_init(
            || (Scratch::new(n), vec![0i64; n]),
            |(sc, buf), &i| {
                let mut take = |f: &dyn Fn(&mut [i64], &mut Scratch)| {
                    f(buf, sc);
                    buf.iter().map(|&v| to_u64(v)).collect::<Vec<u64>>()
                };
                NodeRows {
                    b1t: take(&|o, s| b1t_op.row(i, o, s)),
                    b2: take(&|o, s| b2_op.row(i, o, s)),
                    b1: take(&|o, s| b1_op.row(i, o, s)),
                    b2t: take(&|o, s| b2t_op.row(i, o, s)),
                }
            },
        )
        .collect()
}
