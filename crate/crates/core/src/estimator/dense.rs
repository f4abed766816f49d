//! Triple products of bit-packed configuration matrices.
//!
//! `X·Y·Z` is evaluated as `X·M` with `M[k][l] = popcount(Y_k & (Zᵀ)_l)`;
//! the outer product then adds the rows of `M` selected by each row of `X`.

use rayon::prelude::*;

use crate::tally::{BitMatrix, DyadTally};

use super::TripleCounts;

fn inner_product_matrix(y: &BitMatrix, zt: &BitMatrix) -> Vec<u32> {
    let n = y.n();
    let mut m = vec![0u32; n * n];
    m.par_chunks_mut(n.max(1)).enumerate().for_each(|(k, row)| {
        let yk = y.row(k);
        for (l, out) in row.iter_mut().enumerate() {
            *out = yk.iter().zip(zt.row(l)).map(|(a, b)| (a & b).count_ones()).sum();
        }
    });
    m
}

/// Full product `X·Y·Z` given `Zᵀ`, row-major.
pub(crate) fn triple_product(x: &BitMatrix, y: &BitMatrix, zt: &BitMatrix) -> Vec<u64> {
    let n = x.n();
    let m = inner_product_matrix(y, zt);
    let mut out = vec![0u64; n * n];
    // entries are at most (n-1)(n-2); u32 accumulation is exact below this size
    let narrow = n < 60_000;
    out.par_chunks_mut(n.max(1)).enumerate().for_each_init(
        || vec![0u32; n],
        |acc, (t, row)| {
            if narrow {
                acc.iter_mut().for_each(|a| *a = 0);
                for k in x.row_ones(t) {
                    for (a, &v) in acc.iter_mut().zip(&m[k * n..(k + 1) * n]) {
                        *a += v;
                    }
                }
                for (o, &a) in row.iter_mut().zip(acc.iter()) {
                    *o = a as u64;
                }
            } else {
                for k in x.row_ones(t) {
                    for (o, &v) in row.iter_mut().zip(&m[k * n..(k + 1) * n]) {
                        *o += v as u64;
                    }
                }
            }
        },
    );
    out
}

/// Diagonal of `X·Y·Z` given `Zᵀ`.
pub(crate) fn triple_diagonal(x: &BitMatrix, y: &BitMatrix, zt: &BitMatrix) -> Vec<u64> {
    (0..x.n())
        .into_par_iter()
        .map(|t| {
            let zt_t = zt.row(t);
            x.row_ones(t)
                .map(|k| y.row(k).iter().zip(zt_t).map(|(a, b)| (a & b).count_ones() as u64).sum::<u64>())
                .sum()
        })
        .collect()
}

pub(crate) fn triple_counts_dense(t: &DyadTally) -> TripleCounts {
    let n = t.n();
    // A01ᵀ = A10, A00ᵀ = A00, A11ᵀ = A11
    let b1 = triple_product(&t.a01, &t.a00, &t.a10);
    let b2 = triple_product(&t.a00, &t.a01, &t.a00);
    let b3_diag = triple_diagonal(&t.a11, &t.a10, &t.a11);
    let b4_diag = triple_diagonal(&t.a01, &t.a11, &t.a10);
    TripleCounts { n, b1, b2, b3_diag, b4_diag }
}
