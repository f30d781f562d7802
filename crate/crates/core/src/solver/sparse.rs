use num_complex::Complex64;
use rayon::prelude::*;

/// Row-compressed complex matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseOp {
    pub nrows: usize,
    pub ncols: usize,
    pub row_ptr: Vec<usize>,
    pub col_idx: Vec<usize>,
    pub vals: Vec<Complex64>,
}

impl SparseOp {
    /// Builds from per-row entry lists; duplicate columns are summed and
    /// exact zeros dropped.
    pub fn from_rows(ncols: usize, rows: Vec<Vec<(usize, Complex64)>>) -> Self {
        let mut row_ptr = Vec::with_capacity(rows.len() + 1);
        let mut col_idx = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        let nrows = rows.len();
        for mut row in rows {
            row.sort_by_key(|&(c, _)| c);
            let mut i = 0;
            while i < row.len() {
                let c = row[i].0;
                let mut v = Complex64::new(0.0, 0.0);
                while i < row.len() && row[i].0 == c {
                    v += row[i].1;
                    i += 1;
                }
                assert!(c < ncols, "column out of range");
                if v != Complex64::new(0.0, 0.0) {
                    col_idx.push(c);
                    vals.push(v);
                }
            }
            row_ptr.push(col_idx.len());
        }
        Self { nrows, ncols, row_ptr, col_idx, vals }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_rows(n, (0..n).map(|i| vec![(i, Complex64::new(1.0, 0.0))]).collect())
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    /// `A x`, parallel over rows with each row summed in column order.
    pub fn matvec(&self, x: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(x.len(), self.ncols);
        (0..self.nrows)
            .into_par_iter()
            .map(|i| {
                let mut acc = Complex64::new(0.0, 0.0);
                for p in self.row_ptr[i]..self.row_ptr[i + 1] {
                    acc += self.vals[p] * x[self.col_idx[p]];
                }
                acc
            })
            .collect()
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> SparseOp {
        let mut rows: Vec<Vec<(usize, Complex64)>> = vec![Vec::new(); self.ncols];
        for i in 0..self.nrows {
            for p in self.row_ptr[i]..self.row_ptr[i + 1] {
                rows[self.col_idx[p]].push((i, self.vals[p].conj()));
            }
        }
        SparseOp::from_rows(self.nrows, rows)
    }

    /// Scales row `i` by `s[i]`.
    pub fn scale_rows(&self, s: &[f64]) -> SparseOp {
        let mut out = self.clone();
        for i in 0..self.nrows {
            for p in self.row_ptr[i]..self.row_ptr[i + 1] {
                out.vals[p] *= s[i];
            }
        }
        out
    }

    /// Product `self · other`.
    pub fn compose(&self, other: &SparseOp) -> SparseOp {
        assert_eq!(self.ncols, other.nrows);
        let rows = (0..self.nrows)
            .into_par_iter()
            .map(|i| {
                let mut row = Vec::new();
                for p in self.row_ptr[i]..self.row_ptr[i + 1] {
                    let (k, a) = (self.col_idx[p], self.vals[p]);
                    for q in other.row_ptr[k]..other.row_ptr[k + 1] {
                        row.push((other.col_idx[q], a * other.vals[q]));
                    }
                }
                row
            })
            .collect();
        SparseOp::from_rows(other.ncols, rows)
    }
}

/// Sequential sum of `|v_i|²` in index order.
pub fn norm2(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

#[derive(Clone, Debug, PartialEq)]
pub struct LsqResult {
    pub u: Vec<Complex64>,
    pub iterations: usize,
    pub converged: bool,
    /// `‖W^{1/2}(Au − f)‖` after each iteration.
    pub history: Vec<f64>,
    /// `‖A†W(Au − f)‖ / ‖A†Wf‖` at exit.
    pub normal_residual: f64,
}

/// Minimizes `Σ_i w_i |(Au − f)_i|²` by CGLS on `W^{1/2}A` from `u = 0`,
/// stopping when the normal-equation residual falls below
/// `tol·‖A†Wf‖` or after `maxit` iterations.
pub fn lsq_solve(a: &SparseOp, f: &[Complex64], w: &[f64], tol: f64, maxit: usize) -> LsqResult {
    assert_eq!(f.len(), a.nrows);
    assert_eq!(w.len(), a.nrows);
    let sw: Vec<f64> = w.iter().map(|v| v.sqrt()).collect();
    let b_mat = a.scale_rows(&sw);
    let b_adj = b_mat.adjoint();
    let b: Vec<Complex64> = f.iter().zip(&sw).map(|(v, s)| v * s).collect();

    let mut x = vec![Complex64::new(0.0, 0.0); a.ncols];
    let mut r = b.clone();
    let mut s = b_adj.matvec(&r);
    let s0 = norm2(&s);
    let mut p = s.clone();
    let mut gamma = norm2(&s).powi(2);
    let mut history = Vec::new();
    if s0 == 0.0 {
        return LsqResult { u: x, iterations: 0, converged: true, history, normal_residual: 0.0 };
    }
    let mut it = 0;
    let mut rel = 1.0;
    while it < maxit {
        let q = b_mat.matvec(&p);
        let qq = norm2(&q).powi(2);
        if qq == 0.0 {
            break;
        }
        let alpha = gamma / qq;
        for (xi, pi) in x.iter_mut().zip(&p) {
            *xi += pi * alpha;
        }
        for (ri, qi) in r.iter_mut().zip(&q) {
            *ri -= qi * alpha;
        }
        s = b_adj.matvec(&r);
        let gamma_new = norm2(&s).powi(2);
        it += 1;
        history.push(norm2(&r));
        rel = gamma_new.sqrt() / s0;
        if rel <= tol {
            break;
        }
        let beta = gamma_new / gamma;
        gamma = gamma_new;
        for (pi, si) in p.iter_mut().zip(&s) {
            *pi = si + *pi * beta;
        }
    }
    LsqResult { u: x, iterations: it, converged: rel <= tol, history, normal_residual: rel }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn identity_solves_in_one_step() {
        let a = SparseOp::identity(5);
        let f: Vec<Complex64> = (0..5).map(|i| c(i as f64, -1.0)).collect();
        let res = lsq_solve(&a, &f, &[1.0; 5], 1e-12, 10);
        assert!(res.converged && res.iterations <= 2);
        for (u, v) in res.u.iter().zip(&f) {
            assert!((u - v).norm() < 1e-14);
        }
    }

    #[test]
    fn overdetermined_least_squares() {
        // Rows 1, 1, 1 against a single unknown: the minimizer is the weighted mean.
        let a = SparseOp::from_rows(1, vec![vec![(0, c(1.0, 0.0))]; 3]);
        let f = [c(1.0, 0.0), c(2.0, 0.0), c(6.0, 0.0)];
        let res = lsq_solve(&a, &f, &[1.0, 1.0, 2.0], 1e-12, 10);
        assert!((res.u[0] - c(15.0 / 4.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn adjoint_and_duplicates() {
        let a = SparseOp::from_rows(2, vec![vec![(1, c(1.0, 1.0)), (1, c(1.0, 0.0))], vec![(0, c(0.0, 0.0))]]);
        assert_eq!(a.nnz(), 1);
        let t = a.adjoint();
        assert_eq!(t.matvec(&[c(1.0, 0.0), c(0.0, 0.0)]), vec![c(0.0, 0.0), c(2.0, -1.0)]);
    }
}
