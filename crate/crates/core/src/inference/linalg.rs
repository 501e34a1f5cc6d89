//! Dense column-major matrices and a Householder QR with an in-order rank
//! filter.

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::math::{abs, sqrt};

/// Column-major dense matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    /// Builds from row slices; all rows must have the same length.
    pub fn from_rows(rows: &[&[f64]]) -> Self {
        let n = rows.len();
        let k = rows.first().map_or(0, |r| r.len());
        let mut m = Self::zeros(n, k);
        for (i, r) in rows.iter().enumerate() {
            assert_eq!(r.len(), k, "ragged rows");
            for (j, v) in r.iter().enumerate() {
                m.set(i, j, *v);
            }
        }
        m
    }

    pub fn from_columns(rows: usize, columns: Vec<Vec<f64>>) -> Self {
        let cols = columns.len();
        let mut data = Vec::with_capacity(rows * cols);
        for c in columns {
            assert_eq!(c.len(), rows, "column length mismatch");
            data.extend(c);
        }
        Self { rows, cols, data }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[j * self.rows + i]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[j * self.rows + i] = v;
    }

    pub fn col(&self, j: usize) -> &[f64] {
        &self.data[j * self.rows..(j + 1) * self.rows]
    }

    pub fn col_mut(&mut self, j: usize) -> &mut [f64] {
        &mut self.data[j * self.rows..(j + 1) * self.rows]
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        (0..self.cols).map(|j| self.get(i, j)).collect()
    }

    /// Keeps the listed columns, in the listed order.
    pub fn select_columns(&self, cols: &[usize]) -> Matrix {
        Matrix::from_columns(self.rows, cols.iter().map(|&j| self.col(j).to_vec()).collect())
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(self.cols, self.rows);
        for j in 0..self.cols {
            for i in 0..self.rows {
                t.set(j, i, self.get(i, j));
            }
        }
        t
    }

    pub fn matmul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.cols, other.rows, "inner dimension mismatch");
        let mut out = Matrix::zeros(self.rows, other.cols);
        for j in 0..other.cols {
            for l in 0..self.cols {
                let b = other.get(l, j);
                if b == 0.0 {
                    continue;
                }
                let a = self.col(l);
                let o = out.col_mut(j);
                for i in 0..a.len() {
                    o[i] += a[i] * b;
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(self.cols, v.len());
        let mut out = vec![0.0; self.rows];
        for (j, &b) in v.iter().enumerate() {
            if b == 0.0 {
                continue;
            }
            for (o, a) in out.iter_mut().zip(self.col(j)) {
                *o += a * b;
            }
        }
        out
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn max_abs_diff(&self, other: &Matrix) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| abs(a - b))
            .fold(0.0, f64::max)
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    // Scaled to avoid overflow on large entries.
    let scale = a.iter().fold(0.0f64, |m, v| m.max(abs(*v)));
    if scale == 0.0 {
        return 0.0;
    }
    let ss: f64 = a.iter().map(|v| (v / scale) * (v / scale)).sum();
    scale * sqrt(ss)
}

/// Relative tolerance under which a column counts as linearly dependent
/// on the columns kept before it.
pub const RANK_TOLERANCE: f64 = 1e-10;

struct Reflector {
    start: usize,
    v: Vec<f64>,
    beta: f64,
}

impl Reflector {
    fn apply(&self, x: &mut [f64]) {
        let tail = &mut x[self.start..];
        let s = self.beta * dot(&self.v, tail);
        if s != 0.0 {
            for (t, v) in tail.iter_mut().zip(&self.v) {
                *t -= s * v;
            }
        }
    }
}

/// Householder QR of `X` that walks columns left to right and drops any
/// column whose remaining norm falls below `RANK_TOLERANCE` times its
/// original norm. Kept columns keep their relative order.
pub struct RankFilteredQr {
    rows: usize,
    reflectors: Vec<Reflector>,
    /// Upper triangular, rank × rank, over kept columns.
    r: Matrix,
    kept: Vec<usize>,
    dropped: Vec<usize>,
}

impl RankFilteredQr {
    pub fn factor(x: &Matrix) -> Self {
        let (n, k) = (x.rows(), x.cols());
        let mut work = x.clone();
        let orig_norms: Vec<f64> = (0..k).map(|j| norm(x.col(j))).collect();
        let mut reflectors: Vec<Reflector> = Vec::new();
        let mut kept = Vec::new();
        let mut dropped = Vec::new();
        let mut r_cols: Vec<Vec<f64>> = Vec::new();

        for (j, &orig_norm) in orig_norms.iter().enumerate() {
            let s = reflectors.len();
            let col = work.col(j);
            let tail_norm = if s < n { norm(&col[s..]) } else { 0.0 };
            if orig_norm == 0.0 || tail_norm <= RANK_TOLERANCE * orig_norm {
                dropped.push(j);
                continue;
            }
            let alpha = if col[s] > 0.0 { -tail_norm } else { tail_norm };
            let mut v: Vec<f64> = col[s..].to_vec();
            v[0] -= alpha;
            let vnorm2 = dot(&v, &v);
            let beta = if vnorm2 == 0.0 { 0.0 } else { 2.0 / vnorm2 };
            let refl = Reflector { start: s, v, beta };

            let mut rc = col[..s].to_vec();
            rc.push(alpha);
            r_cols.push(rc);

            for jj in (j + 1)..k {
                refl.apply(work.col_mut(jj));
            }
            reflectors.push(refl);
            kept.push(j);
        }

        let rank = kept.len();
        let mut r = Matrix::zeros(rank, rank);
        for (c, rc) in r_cols.iter().enumerate() {
            for (i, v) in rc.iter().enumerate() {
                r.set(i, c, *v);
            }
        }
        Self {
            rows: n,
            reflectors,
            r,
            kept,
            dropped,
        }
    }

    pub fn rank(&self) -> usize {
        self.kept.len()
    }

    pub fn kept(&self) -> &[usize] {
        &self.kept
    }

    pub fn dropped(&self) -> &[usize] {
        &self.dropped
    }

    pub fn r(&self) -> &Matrix {
        &self.r
    }

    /// Least-squares coefficients for the kept columns.
    pub fn solve(&self, y: &[f64]) -> Vec<f64> {
        assert_eq!(y.len(), self.rows);
        let mut qty = y.to_vec();
        for refl in &self.reflectors {
            refl.apply(&mut qty);
        }
        let rank = self.rank();
        let mut beta = vec![0.0; rank];
        for i in (0..rank).rev() {
            let mut s = qty[i];
            for (j, b) in beta.iter().enumerate().skip(i + 1) {
                s -= self.r.get(i, j) * b;
            }
            beta[i] = s / self.r.get(i, i);
        }
        beta
    }

    /// `R^{-1}` (upper triangular).
    pub fn r_inverse(&self) -> Matrix {
        let k = self.rank();
        let mut inv = Matrix::zeros(k, k);
        for c in 0..k {
            // Solve R x = e_c; x is zero below row c.
            for i in (0..=c).rev() {
                let mut s = if i == c { 1.0 } else { 0.0 };
                for j in (i + 1)..=c {
                    s -= self.r.get(i, j) * inv.get(j, c);
                }
                inv.set(i, c, s / self.r.get(i, i));
            }
        }
        inv
    }

    /// `(X'X)^{-1}` over the kept columns, as `R^{-1} R^{-T}`.
    pub fn xtx_inverse(&self) -> Matrix {
        let ri = self.r_inverse();
        let k = self.rank();
        let mut out = Matrix::zeros(k, k);
        for i in 0..k {
            for j in i..k {
                let start = j.max(i);
                let mut s = 0.0;
                for l in start..k {
                    s += ri.get(i, l) * ri.get(j, l);
                }
                out.set(i, j, s);
                out.set(j, i, s);
            }
        }
        out
    }
}
