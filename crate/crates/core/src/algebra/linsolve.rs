//! Gaussian elimination over the rational-function field, plus a double
//! precision rank routine for sampled coefficient matrices.

use num_complex::Complex64;

use super::RatFun;

/// Outcome of solving `A x = b` exactly.
#[derive(Clone, Debug, PartialEq)]
pub enum LinSolve {
    Unique(Vec<RatFun>),
    /// Free variables set to zero, leaving the lexicographically minimal
    /// pivot solution.
    NonUnique { solution: Vec<RatFun>, kernel_dim: usize },
    /// `row` is the original index of a row reducing to `0 = nonzero`;
    /// `partial` is the pivot solution of the consistent rows.
    Inconsistent { row: usize, partial: Vec<RatFun> },
}

impl LinSolve {
    pub fn solution(&self) -> Option<&[RatFun]> {
        match self {
            LinSolve::Unique(x) | LinSolve::NonUnique { solution: x, .. } => Some(x),
            LinSolve::Inconsistent { .. } => None,
        }
    }
}

struct Echelon {
    rows: Vec<Vec<RatFun>>,
    rhs: Vec<RatFun>,
    origin: Vec<usize>,
    pivots: Vec<usize>,
}

fn eliminate(a: &[Vec<RatFun>], b: &[RatFun], ncols: usize) -> Echelon {
    let mut rows: Vec<Vec<RatFun>> = a.to_vec();
    let mut rhs: Vec<RatFun> = b.to_vec();
    let mut origin: Vec<usize> = (0..rows.len()).collect();
    let mut pivots = Vec::new();
    let mut r = 0;
    for col in 0..ncols {
        let Some(p) = (r..rows.len()).find(|&i| !rows[i][col].is_zero()) else {
            continue;
        };
        rows.swap(r, p);
        rhs.swap(r, p);
        origin.swap(r, p);
        let inv = rows[r][col].inv().unwrap();
        for c in col..ncols {
            rows[r][c] = &rows[r][c] * &inv;
        }
        rhs[r] = &rhs[r] * &inv;
        for i in 0..rows.len() {
            if i == r || rows[i][col].is_zero() {
                continue;
            }
            let factor = rows[i][col].clone();
            for c in col..ncols {
                if !rows[r][c].is_zero() {
                    let t = &factor * &rows[r][c];
                    rows[i][c] = &rows[i][c] - &t;
                }
            }
            let t = &factor * &rhs[r];
            rhs[i] = &rhs[i] - &t;
        }
        pivots.push(col);
        r += 1;
        if r == rows.len() {
            break;
        }
    }
    Echelon { rows, rhs, origin, pivots }
}

/// Solves the `m × k` system `A x = b` (row-major `a`) by reduced row
/// echelon form with leftmost pivots.
pub fn solve(a: &[Vec<RatFun>], b: &[RatFun], ncols: usize, nvars: usize) -> LinSolve {
    assert_eq!(a.len(), b.len());
    let e = eliminate(a, b, ncols);
    let rank = e.pivots.len();
    let mut x = vec![RatFun::zero(nvars); ncols];
    for (i, &col) in e.pivots.iter().enumerate() {
        x[col] = e.rhs[i].clone();
    }
    for i in rank..e.rows.len() {
        if !e.rhs[i].is_zero() {
            return LinSolve::Inconsistent { row: e.origin[i], partial: x };
        }
    }
    if rank == ncols {
        LinSolve::Unique(x)
    } else {
        LinSolve::NonUnique { solution: x, kernel_dim: ncols - rank }
    }
}

/// Rank over the rational-function field.
pub fn rank(a: &[Vec<RatFun>], ncols: usize, nvars: usize) -> usize {
    let b = vec![RatFun::zero(nvars); a.len()];
    eliminate(a, &b, ncols).pivots.len()
}

/// Numeric rank by complete-pivoting elimination: pivots below
/// `rel_tol · max|entry|` count as zero.
pub fn numeric_rank(a: &[Vec<Complex64>], rel_tol: f64) -> usize {
    let mut m: Vec<Vec<Complex64>> = a.to_vec();
    let rows = m.len();
    if rows == 0 {
        return 0;
    }
    let cols = m[0].len();
    let scale = m.iter().flatten().map(|z| z.norm()).fold(0.0, f64::max);
    if scale == 0.0 {
        return 0;
    }
    let thresh = rel_tol * scale;
    let mut rank = 0;
    while rank < rows.min(cols) {
        let mut best = (0.0, rank, rank);
        for i in rank..rows {
            for j in rank..cols {
                let v = m[i][j].norm();
                if v > best.0 {
                    best = (v, i, j);
                }
            }
        }
        if best.0 <= thresh {
            break;
        }
        let (_, pi, pj) = best;
        m.swap(rank, pi);
        for row in m.iter_mut() {
            row.swap(rank, pj);
        }
        let piv = m[rank][rank];
        for i in rank + 1..rows {
            let f = m[i][rank] / piv;
            if f == Complex64::new(0.0, 0.0) {
                continue;
            }
            for j in rank..cols {
                let t = f * m[rank][j];
                m[i][j] -= t;
            }
        }
        rank += 1;
    }
    rank
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{default_names, parse_ratfun};

    fn rf(s: &str) -> RatFun {
        parse_ratfun(s, &default_names(2)).unwrap()
    }

    #[test]
    fn unique_solution_over_field() {
        // [[x1, 1], [1, x2]] · (u, v) = (1, 0)
        let a = vec![vec![rf("x1"), rf("1")], vec![rf("1"), rf("x2")]];
        let b = vec![rf("1"), rf("0")];
        let LinSolve::Unique(x) = solve(&a, &b, 2, 2) else { panic!() };
        assert_eq!(x[0], rf("x2/(x1 x2 - 1)"));
        assert_eq!(x[1], rf("-1/(x1 x2 - 1)"));
    }

    #[test]
    fn dependent_and_inconsistent() {
        let a = vec![vec![rf("1"), rf("x1")], vec![rf("2"), rf("2 x1")]];
        let res = solve(&a, &[rf("1"), rf("2")], 2, 2);
        assert_eq!(res, LinSolve::NonUnique { solution: vec![rf("1"), rf("0")], kernel_dim: 1 });
        assert!(matches!(solve(&a, &[rf("1"), rf("3")], 2, 2), LinSolve::Inconsistent { row: 1, .. }));
        assert_eq!(rank(&a, 2, 2), 1);
    }

    #[test]
    fn numeric_rank_thresholds() {
        let z = |a: f64| Complex64::new(a, 0.0);
        let a = vec![vec![z(1.0), z(2.0)], vec![z(2.0), z(4.0 + 1e-14)]];
        assert_eq!(numeric_rank(&a, 1e-9), 1);
        let b = vec![vec![z(1.0), z(0.0)], vec![z(0.0), Complex64::new(0.0, 1.0)]];
        assert_eq!(numeric_rank(&b, 1e-9), 2);
        assert_eq!(numeric_rank(&[vec![z(0.0)]], 1e-9), 0);
    }
}
