//! Sparse symmetric matrices and the two solvers used for the step system:
//! a profile (skyline) Cholesky factorization and Jacobi-preconditioned
//! conjugate gradients.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Square matrix in compressed sparse row form with both triangles stored.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl CsrMatrix {
    /// Build from `(row, col, value)` triplets; duplicates are summed.
    pub fn from_triplets(n: usize, mut triplets: Vec<(usize, usize, f64)>) -> Self {
        triplets.sort_unstable_by_key(|&(r, c, _)| (r, c));
        let mut row_ptr = vec![0usize; n + 1];
        let mut cols = Vec::with_capacity(triplets.len());
        let mut vals: Vec<f64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in triplets {
            debug_assert!(r < n && c < n);
            if last == Some((r, c)) {
                *vals.last_mut().unwrap() += v;
                continue;
            }
            cols.push(c);
            vals.push(v);
            row_ptr[r + 1] += 1;
            last = Some((r, c));
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        Self { n, row_ptr, cols, vals }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    /// `(col, value)` pairs of one row, columns ascending.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[span.clone()].iter().copied().zip(self.vals[span].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.row(i).find(|&(c, _)| c == j).map_or(0.0, |(_, v)| v)
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    /// `y = A x`.
    pub fn mul_into(&self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate().take(self.n) {
            *yi = self.row(i).map(|(c, v)| v * x[c]).sum();
        }
    }

    pub fn mul(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.mul_into(x, &mut y);
        y
    }

    /// Leading `k × k` block, used to drop trailing Dirichlet rows.
    pub fn leading_block(&self, k: usize) -> Self {
        let triplets = (0..k)
            .flat_map(|i| self.row(i).filter(move |&(c, _)| c < k).map(move |(c, v)| (i, c, v)))
            .collect();
        Self::from_triplets(k, triplets)
    }

    /// `self + s·other`, same dimension.
    pub fn add_scaled(&self, s: f64, other: &Self) -> Self {
        assert_eq!(self.n, other.n);
        let triplets = (0..self.n)
            .flat_map(|i| {
                self.row(i)
                    .map(move |(c, v)| (i, c, v))
                    .chain(other.row(i).map(move |(c, v)| (i, c, s * v)))
            })
            .collect();
        Self::from_triplets(self.n, triplets)
    }

    pub fn scaled(&self, s: f64) -> Self {
        let mut out = self.clone();
        out.vals.iter_mut().for_each(|v| *v *= s);
        out
    }

    /// Largest `|a_ij − a_ji|` relative to the largest entry.
    pub fn asymmetry(&self) -> f64 {
        let scale = self.vals.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let mut worst = 0.0f64;
        for i in 0..self.n {
            for (c, v) in self.row(i) {
                worst = worst.max((v - self.get(c, i)).abs());
            }
        }
        if scale == 0.0 {
            0.0
        } else {
            worst / scale
        }
    }
}

/// Cholesky factor `L` stored by rows from each row's first nonzero column.
/// Fill-in of a Cholesky factorization stays inside this profile.
#[derive(Debug, Clone)]
pub struct SkylineCholesky {
    first: Vec<usize>,
    start: Vec<usize>,
    data: Vec<f64>,
}

/// Bytes a profile factorization of `a` would occupy.
pub fn skyline_bytes(a: &CsrMatrix) -> usize {
    (0..a.dim())
        .map(|i| i + 1 - a.row(i).next().map_or(i, |(c, _)| c.min(i)))
        .sum::<usize>()
        * core::mem::size_of::<f64>()
}

impl SkylineCholesky {
    pub fn factor(a: &CsrMatrix) -> Result<Self> {
        let n = a.dim();
        let first: Vec<usize> = (0..n).map(|i| a.row(i).next().map_or(i, |(c, _)| c.min(i))).collect();
        let mut start = vec![0usize; n + 1];
        for i in 0..n {
            start[i + 1] = start[i] + (i + 1 - first[i]);
        }
        let mut data = vec![0.0; start[n]];
        for i in 0..n {
            for (c, v) in a.row(i).filter(|&(c, _)| c <= i) {
                data[start[i] + c - first[i]] = v;
            }
        }
        for i in 0..n {
            let fi = first[i];
            for j in fi..=i {
                let fj = first[j];
                let k0 = fi.max(fj);
                let row_i = &data[start[i] + k0 - fi..start[i] + j - fi];
                let row_j = &data[start[j] + k0 - fj..start[j] + j - fj];
                let dot: f64 = row_i.iter().zip(row_j).map(|(x, y)| x * y).sum();
                let s = data[start[i] + j - fi] - dot;
                if j == i {
                    if !(s > 0.0) {
                        return Err(Error::Factorization { row: i, pivot: s });
                    }
                    data[start[i] + i - fi] = libm::sqrt(s);
                } else {
                    let d = data[start[j] + j - fj];
                    data[start[i] + j - fi] = s / d;
                }
            }
        }
        Ok(Self { first, start, data })
    }

    pub fn dim(&self) -> usize {
        self.first.len()
    }

    /// Solve `L Lᵀ x = b` in place.
    pub fn solve_in_place(&self, x: &mut [f64]) {
        let n = self.dim();
        for i in 0..n {
            let fi = self.first[i];
            let row = &self.data[self.start[i]..self.start[i + 1]];
            let dot: f64 = row[..i - fi].iter().zip(&x[fi..i]).map(|(l, v)| l * v).sum();
            x[i] = (x[i] - dot) / row[i - fi];
        }
        for i in (0..n).rev() {
            let fi = self.first[i];
            let row = &self.data[self.start[i]..self.start[i + 1]];
            x[i] /= row[i - fi];
            let xi = x[i];
            for (l, v) in row[..i - fi].iter().zip(&mut x[fi..i]) {
                *v -= l * xi;
            }
        }
    }
}

/// Jacobi-preconditioned conjugate gradients on an SPD matrix, starting
/// from the contents of `x`. Returns the iteration count.
pub fn pcg(a: &CsrMatrix, b: &[f64], x: &mut [f64], rel_tol: f64, max_iters: usize) -> Result<usize> {
    let n = a.dim();
    let inv_diag: Vec<f64> = a.diagonal().iter().map(|d| 1.0 / d).collect();
    let b_norm = norm(b);
    if b_norm == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return Ok(0);
    }
    let mut r = a.mul(x);
    for (ri, bi) in r.iter_mut().zip(b) {
        *ri = bi - *ri;
    }
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(r, d)| r * d).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];
    for iter in 0..=max_iters {
        if norm(&r) <= rel_tol * b_norm {
            return Ok(iter);
        }
        if iter == max_iters {
            break;
        }
        a.mul_into(&p, &mut ap);
        let alpha = rz / dot(&p, &ap);
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        let rz_next = dot(&r, &z);
        let beta = rz_next / rz;
        rz = rz_next;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(Error::SolveNotConverged {
        tolerance: rel_tol,
        iterations: max_iters,
    })
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    libm::sqrt(dot(a, a))
}

#[cfg(test)]
mod tests {
    use super::*;

    // 1D Laplacian plus a corner coupling, so the profile is not a plain band
    fn test_matrix(n: usize) -> CsrMatrix {
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 4.0));
            if i + 1 < n {
                t.push((i, i + 1, -1.0));
                t.push((i + 1, i, -1.0));
            }
        }
        t.push((0, n - 1, -0.5));
        t.push((n - 1, 0, -0.5));
        CsrMatrix::from_triplets(n, t)
    }

    #[test]
    fn triplets_are_merged() {
        let a = CsrMatrix::from_triplets(2, vec![(0, 0, 1.0), (0, 0, 2.0), (1, 0, 5.0)]);
        assert_eq!(a.get(0, 0), 3.0);
        assert_eq!(a.get(1, 0), 5.0);
        assert_eq!(a.get(0, 1), 0.0);
        assert_eq!(a.nnz(), 2);
    }

    #[test]
    fn cholesky_solves() {
        let a = test_matrix(30);
        let x_true: Vec<f64> = (0..30).map(|i| (i as f64 * 0.37).sin()).collect();
        let mut x = a.mul(&x_true);
        SkylineCholesky::factor(&a).unwrap().solve_in_place(&mut x);
        for (u, v) in x.iter().zip(&x_true) {
            assert!((u - v).abs() < 1e-13);
        }
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let a = test_matrix(10).scaled(-1.0);
        assert!(matches!(SkylineCholesky::factor(&a), Err(Error::Factorization { row: 0, .. })));
    }

    #[test]
    fn pcg_agrees_with_cholesky() {
        let a = test_matrix(50);
        let b: Vec<f64> = (0..50).map(|i| 1.0 + i as f64).collect();
        let mut x_direct = b.clone();
        SkylineCholesky::factor(&a).unwrap().solve_in_place(&mut x_direct);
        let mut x = vec![0.0; 50];
        pcg(&a, &b, &mut x, 1e-12, 500).unwrap();
        for (u, v) in x.iter().zip(&x_direct) {
            assert!((u - v).abs() < 1e-10);
        }
    }

    #[test]
    fn leading_block_drops_trailing_rows() {
        let a = test_matrix(5).leading_block(3);
        assert_eq!(a.dim(), 3);
        assert_eq!(a.get(2, 2), 4.0);
        assert_eq!(a.get(0, 1), -1.0);
        assert_eq!(a.get(0, 2), 0.0);
    }
}
