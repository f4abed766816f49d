//! Dyad configuration matrices `A^{ab}[i][j] = 1{(X_ij, X_ji) = (a, b)}`.

use crate::model::{Config, Digraph};

/// Dense 0/1 matrix with bit-packed rows.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BitMatrix {
    n: usize,
    words: usize,
    bits: Vec<u64>,
}

impl BitMatrix {
    pub fn zeros(n: usize) -> Self {
        let words = n.div_ceil(64);
        BitMatrix { n, words, bits: vec![0; n * words] }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> bool {
        self.bits[i * self.words + j / 64] >> (j % 64) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize) {
        self.bits[i * self.words + j / 64] |= 1 << (j % 64);
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[u64] {
        &self.bits[i * self.words..(i + 1) * self.words]
    }

    fn row_mut(&mut self, i: usize) -> &mut [u64] {
        &mut self.bits[i * self.words..(i + 1) * self.words]
    }

    pub fn row_ones(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        self.row(i).iter().enumerate().flat_map(|(w, &word)| BitIter { word, base: w * 64 })
    }

    pub fn row_count(&self, i: usize) -> usize {
        self.row(i).iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn count_ones(&self) -> usize {
        self.bits.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn transpose(&self) -> BitMatrix {
        let mut t = BitMatrix::zeros(self.n);
        for i in 0..self.n {
            for j in self.row_ones(i) {
                t.set(j, i);
            }
        }
        t
    }
}

struct BitIter {
    word: u64,
    base: usize,
}

impl Iterator for BitIter {
    type Item = usize;

    #[inline]
    fn next(&mut self) -> Option<usize> {
        if self.word == 0 {
            return None;
        }
        let tz = self.word.trailing_zeros() as usize;
        self.word &= self.word - 1;
        Some(self.base + tz)
    }
}

/// The four configuration matrices of a graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DyadTally {
    pub a00: BitMatrix,
    pub a01: BitMatrix,
    pub a10: BitMatrix,
    pub a11: BitMatrix,
}

impl DyadTally {
    pub fn n(&self) -> usize {
        self.a00.n()
    }

    pub fn get(&self, c: Config) -> &BitMatrix {
        match c {
            Config::C00 => &self.a00,
            Config::C01 => &self.a01,
            Config::C10 => &self.a10,
            Config::C11 => &self.a11,
        }
    }

    /// `I_ij^{ab}`; zero on the diagonal.
    pub fn indicator(&self, c: Config, i: usize, j: usize) -> bool {
        self.get(c).get(i, j)
    }

    /// Fraction of ordered pairs carrying an edge.
    pub fn edge_density(&self) -> f64 {
        let n = self.n();
        if n < 2 {
            return 0.0;
        }
        let edges = self.a10.count_ones() + self.a11.count_ones();
        edges as f64 / (n * (n - 1)) as f64
    }
}

/// Builds the configuration matrices of `g`.
pub fn tally(g: &Digraph) -> DyadTally {
    let n = g.n();
    let mut out = BitMatrix::zeros(n);
    let mut inn = BitMatrix::zeros(n);
    for (i, j) in g.edges() {
        out.set(i, j);
        inn.set(j, i);
    }
    let mut t = DyadTally {
        a00: BitMatrix::zeros(n),
        a01: BitMatrix::zeros(n),
        a10: BitMatrix::zeros(n),
        a11: BitMatrix::zeros(n),
    };
    let words = n.div_ceil(64);
    for i in 0..n {
        let (o, b) = (out.row(i), inn.row(i));
        for w in 0..words {
            let mut valid = !0u64;
            if w == words - 1 && n % 64 != 0 {
                valid = (1u64 << (n % 64)) - 1;
            }
            if w == i / 64 {
                valid &= !(1u64 << (i % 64));
            }
            t.a11.row_mut(i)[w] = o[w] & b[w];
            t.a10.row_mut(i)[w] = o[w] & !b[w];
            t.a01.row_mut(i)[w] = !o[w] & b[w];
            t.a00.row_mut(i)[w] = !o[w] & !b[w] & valid;
        }
    }
    t
}

/// Compressed sparse rows of a 0/1 matrix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Csr {
    offsets: Vec<usize>,
    cols: Vec<u32>,
}

impl Csr {
    fn from_rows(rows: impl Iterator<Item = Vec<u32>>) -> Self {
        let mut offsets = vec![0];
        let mut cols = Vec::new();
        for r in rows {
            cols.extend_from_slice(&r);
            offsets.push(cols.len());
        }
        Csr { offsets, cols }
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[u32] {
        &self.cols[self.offsets[i]..self.offsets[i + 1]]
    }

    pub fn nnz(&self) -> usize {
        self.cols.len()
    }
}

/// Sparse form of the non-null configuration matrices. `A^{00}` is never
/// stored: it equals `J − I − S` with `S = A^{01} + A^{10} + A^{11}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SparseTally {
    n: usize,
    pub a01: Csr,
    pub a10: Csr,
    pub a11: Csr,
    /// Row `i` lists every `j` whose dyad with `i` is non-null.
    pub s: Csr,
}

impl SparseTally {
    pub fn from_graph(g: &Digraph) -> Self {
        let n = g.n();
        let inn = g.in_adjacency();
        let mut r01 = Vec::with_capacity(n);
        let mut r10 = Vec::with_capacity(n);
        let mut r11 = Vec::with_capacity(n);
        let mut rs = Vec::with_capacity(n);
        for i in 0..n {
            let (o, b) = (g.out_neighbors(i), &inn[i]);
            let (mut x01, mut x10, mut x11, mut xs) = (vec![], vec![], vec![], vec![]);
            let (mut p, mut q) = (0, 0);
            while p < o.len() || q < b.len() {
                let next_o = o.get(p).copied().unwrap_or(usize::MAX);
                let next_b = b.get(q).copied().unwrap_or(usize::MAX);
                if next_o == next_b {
                    x11.push(next_o as u32);
                    xs.push(next_o as u32);
                    p += 1;
                    q += 1;
                } else if next_o < next_b {
                    x10.push(next_o as u32);
                    xs.push(next_o as u32);
                    p += 1;
                } else {
                    x01.push(next_b as u32);
                    xs.push(next_b as u32);
                    q += 1;
                }
            }
            r01.push(x01);
            r10.push(x10);
            r11.push(x11);
            rs.push(xs);
        }
        SparseTally {
            n,
            a01: Csr::from_rows(r01.into_iter()),
            a10: Csr::from_rows(r10.into_iter()),
            a11: Csr::from_rows(r11.into_iter()),
            s: Csr::from_rows(rs.into_iter()),
        }
    }

    pub fn from_tally(t: &DyadTally) -> Self {
        let n = t.n();
        let rows = |m: &BitMatrix| Csr::from_rows((0..n).map(|i| m.row_ones(i).map(|j| j as u32).collect()));
        let s = Csr::from_rows((0..n).map(|i| {
            let mut r: Vec<u32> = t.a01.row_ones(i).chain(t.a10.row_ones(i)).chain(t.a11.row_ones(i)).map(|j| j as u32).collect();
            r.sort_unstable();
            r
        }));
        SparseTally { n, a01: rows(&t.a01), a10: rows(&t.a10), a11: rows(&t.a11), s }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, c: Config) -> Option<&Csr> {
        match c {
            Config::C00 => None,
            Config::C01 => Some(&self.a01),
            Config::C10 => Some(&self.a10),
            Config::C11 => Some(&self.a11),
        }
    }
}
