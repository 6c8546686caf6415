//! Sparse matrices and the deflated conjugate-gradient solver used by the Hodge machinery.

use crate::error::{Error, Result};

/// Compressed sparse row matrix.
#[derive(Clone, Debug)]
pub struct CsrMatrix {
    nrows: usize,
    ncols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    data: Vec<f64>,
}

impl CsrMatrix {
    /// Build from `(row, col, value)` triplets; duplicates are summed.
    pub fn from_triplets(nrows: usize, ncols: usize, mut triplets: Vec<(usize, usize, f64)>) -> Self {
        triplets.sort_by_key(|t| (t.0, t.1));
        let mut indptr = vec![0; nrows + 1];
        let mut indices = Vec::with_capacity(triplets.len());
        let mut data: Vec<f64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in triplets {
            assert!(r < nrows && c < ncols, "triplet ({r}, {c}) out of bounds");
            if last == Some((r, c)) {
                *data.last_mut().unwrap() += v;
                continue;
            }
            indices.push(c);
            data.push(v);
            indptr[r + 1] += 1;
            last = Some((r, c));
        }
        for r in 0..nrows {
            indptr[r + 1] += indptr[r];
        }
        CsrMatrix { nrows, ncols, indptr, indices, data }
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.ncols);
        (0..self.nrows)
            .map(|r| (self.indptr[r]..self.indptr[r + 1]).map(|k| self.data[k] * x[self.indices[k]]).sum())
            .collect()
    }

    pub fn transpose(&self) -> CsrMatrix {
        let triplets = self.triplets().map(|(r, c, v)| (c, r, v)).collect();
        CsrMatrix::from_triplets(self.ncols, self.nrows, triplets)
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.nrows)
            .flat_map(move |r| (self.indptr[r]..self.indptr[r + 1]).map(move |k| (r, self.indices[k], self.data[k])))
    }

    /// `self * diag(d) * other`, all sparse.
    pub fn mul_diag_mul(&self, d: &[f64], other: &CsrMatrix) -> CsrMatrix {
        assert_eq!(self.ncols, other.nrows);
        assert_eq!(d.len(), self.ncols);
        let mut triplets = Vec::new();
        for (r, k, a) in self.triplets() {
            for idx in other.indptr[k]..other.indptr[k + 1] {
                triplets.push((r, other.indices[idx], a * d[k] * other.data[idx]));
            }
        }
        CsrMatrix::from_triplets(self.nrows, other.ncols, triplets)
    }

    pub fn diagonal(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.nrows.min(self.ncols)];
        for (r, c, v) in self.triplets() {
            if r == c {
                d[r] += v;
            }
        }
        d
    }

    /// Dense copy, for small diagnostic problems.
    pub fn to_dense(&self) -> nalgebra::DMatrix<f64> {
        let mut m = nalgebra::DMatrix::zeros(self.nrows, self.ncols);
        for (r, c, v) in self.triplets() {
            m[(r, c)] += v;
        }
        m
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn remove_mean(v: &mut [f64]) {
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    v.iter_mut().for_each(|x| *x -= mean);
}

/// Outcome of a conjugate-gradient solve.
#[derive(Clone, Debug)]
pub struct CgSolution {
    pub x: Vec<f64>,
    pub iterations: usize,
    pub relative_residual: f64,
}

/// Jacobi-preconditioned CG for a symmetric positive semi-definite system whose
/// kernel is the constant vector. The right-hand side and the iterates are kept
/// mean-free, and the returned solution has zero mean.
pub fn solve_deflated(a: &CsrMatrix, b: &[f64], rel_tol: f64, max_iter: usize) -> Result<CgSolution> {
    let n = b.len();
    let mut rhs = b.to_vec();
    remove_mean(&mut rhs);
    let bnorm = dot(&rhs, &rhs).sqrt();
    if bnorm == 0.0 {
        return Ok(CgSolution { x: vec![0.0; n], iterations: 0, relative_residual: 0.0 });
    }
    let inv_diag: Vec<f64> = a.diagonal().iter().map(|&d| if d > 0.0 { 1.0 / d } else { 1.0 }).collect();
    let precondition = |r: &[f64]| -> Vec<f64> {
        let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(x, d)| x * d).collect();
        remove_mean(&mut z);
        z
    };
    let mut x = vec![0.0; n];
    let mut r = rhs.clone();
    let mut z = precondition(&r);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut rel = 1.0;
    for iter in 1..=max_iter {
        let ap = a.mul_vec(&p);
        let pap = dot(&p, &ap);
        if pap <= 0.0 {
            break;
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        remove_mean(&mut r);
        rel = dot(&r, &r).sqrt() / bnorm;
        if rel <= rel_tol {
            remove_mean(&mut x);
            return Ok(CgSolution { x, iterations: iter, relative_residual: rel });
        }
        z = precondition(&r);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    // recompute the true residual before giving up
    remove_mean(&mut x);
    let ax = a.mul_vec(&x);
    let mut res: Vec<f64> = rhs.iter().zip(&ax).map(|(b, a)| b - a).collect();
    remove_mean(&mut res);
    let true_rel = dot(&res, &res).sqrt() / bnorm;
    if true_rel <= rel_tol * 10.0 {
        return Ok(CgSolution { x, iterations: max_iter, relative_residual: true_rel });
    }
    Err(Error::Numerical {
        message: format!("conjugate gradient stalled after {max_iter} iterations"),
        residual: true_rel.max(rel),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cycle_laplacian(n: usize) -> CsrMatrix {
        let mut t = Vec::new();
        for i in 0..n {
            let j = (i + 1) % n;
            t.push((i, i, 1.0));
            t.push((j, j, 1.0));
            t.push((i, j, -1.0));
            t.push((j, i, -1.0));
        }
        CsrMatrix::from_triplets(n, n, t)
    }

    #[test]
    fn duplicate_triplets_are_summed() {
        let m = CsrMatrix::from_triplets(2, 2, vec![(0, 0, 1.0), (0, 0, 2.0), (1, 0, -1.0)]);
        assert_eq!(m.mul_vec(&[1.0, 5.0]), vec![3.0, -1.0]);
        assert_eq!(m.transpose().mul_vec(&[1.0, 1.0]), vec![2.0, 0.0]);
    }

    #[test]
    fn solves_singular_cycle_laplacian() {
        let n = 40;
        let a = cycle_laplacian(n);
        let truth: Vec<f64> = (0..n).map(|i| (i as f64 * 0.3).sin()).collect();
        let mut truth_centered = truth.clone();
        remove_mean(&mut truth_centered);
        let b = a.mul_vec(&truth);
        let sol = solve_deflated(&a, &b, 1e-13, 500).unwrap();
        for (x, t) in sol.x.iter().zip(&truth_centered) {
            assert!((x - t).abs() < 1e-10);
        }
    }

    #[test]
    fn reports_non_convergence() {
        let a = cycle_laplacian(200);
        let b: Vec<f64> = (0..200).map(|i| if i == 3 { 1.0 } else { 0.0 }).collect();
        assert!(matches!(solve_deflated(&a, &b, 1e-14, 2), Err(Error::Numerical { .. })));
    }
}
