//! Weighted least-squares solution of `𝒫_q u = f` on tensor grids with
//! second-order finite differences.

mod grid;
mod sparse;

pub use grid::{Grid, GridField, GridFieldFile, GridSpec};
pub use sparse::{lsq_solve, norm2, LsqResult, SparseOp};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::algebra::RatFun;
use crate::complex::{build_matrix, ComplexError};
use crate::diffop::DiffOp;
use crate::multiindex::{binomial, enumerate};
use crate::system::{OperatorSystem, SystemError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolverError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("invalid grid field: {0}")]
    InvalidField(String),
    #[error("pole at grid node {point:?}")]
    Pole { point: Vec<f64> },
    #[error("weight function is not real valued")]
    ComplexWeight,
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("zero-order terms incompatible for pair ({j},{k}): residual {residual}")]
    Incompatible { j: usize, k: usize, residual: String },
    #[error(transparent)]
    Complex(#[from] ComplexError),
    #[error(transparent)]
    System(#[from] SystemError),
}

pub const DEFAULT_TOL: f64 = 1e-8;

/// `200·⌈√unknowns⌉`.
pub fn default_maxit(unknowns: usize) -> usize {
    200 * ((unknowns as f64).sqrt().ceil() as usize).max(1)
}

/// Second-order difference weights for `∂` along `axis` at `node`:
/// centered inside the grid, one-sided on its faces.
fn stencil(grid: &Grid, node: usize, axis: usize) -> [(isize, f64); 3] {
    let s = 1.0 / (2.0 * grid.h[axis]);
    let i = grid.multi(node)[axis];
    if i == 0 {
        [(0, -3.0 * s), (1, 4.0 * s), (2, -s)]
    } else if i + 1 == grid.n {
        [(0, 3.0 * s), (-1, -4.0 * s), (-2, s)]
    } else {
        [(-1, -s), (1, s), (0, 0.0)]
    }
}

/// Whether every stencil of `node` stays inside `mask`.
pub fn stencil_fits(grid: &Grid, mask: &[bool], node: usize) -> bool {
    mask[node]
        && (0..grid.dim()).all(|axis| {
            let stride = grid.stride(axis) as isize;
            stencil(grid, node, axis).iter().all(|&(off, _)| mask[(node as isize + off * stride) as usize])
        })
}

fn eval_at(f: &RatFun, x: &[f64]) -> Result<Complex64, SolverError> {
    if f.is_zero() {
        return Ok(Complex64::new(0.0, 0.0));
    }
    f.evaluate(x).map_err(|_| SolverError::Pole { point: x.to_vec() })
}

/// Appends the row entries of `op` at `node`, columns offset by `col0`.
fn push_entries(
    op: &DiffOp,
    grid: &Grid,
    node: usize,
    col0: usize,
    row: &mut Vec<(usize, Complex64)>,
) -> Result<(), SolverError> {
    let x = grid.point(node);
    let a0 = eval_at(&op.a0, &x)?;
    if a0 != Complex64::new(0.0, 0.0) {
        row.push((col0 + node, a0));
    }
    for (axis, a) in op.a.iter().enumerate() {
        if a.is_zero() {
            continue;
        }
        let av = eval_at(a, &x)?;
        let stride = grid.stride(axis) as isize;
        for (off, w) in stencil(grid, node, axis) {
            if w != 0.0 {
                let k = (node as isize + off * stride) as usize;
                row.push((col0 + k, av * w));
            }
        }
    }
    Ok(())
}

/// Finite-difference matrix of `𝒫_q`: rows `(J, node)`, columns
/// `(I, node)`, blocks in multi-index order.
pub fn discretize_p(sys: &OperatorSystem, q: usize, grid: &Grid) -> Result<SparseOp, SolverError> {
    discretize_p_masked(sys, q, grid, None)
}

/// Restriction of `discretize_p` to `mask`: only rows at nodes whose
/// stencils stay inside the mask are kept, the rest are empty.
pub fn discretize_p_masked(
    sys: &OperatorSystem,
    q: usize,
    grid: &Grid,
    mask: Option<&[bool]>,
) -> Result<SparseOp, SolverError> {
    if grid.dim() != sys.n {
        return Err(SolverError::DimensionMismatch(format!("grid has {} axes, system {} variables", grid.dim(), sys.n)));
    }
    let len = grid.len();
    let ncols = binomial(sys.r, q - 1) * len;
    if q == sys.r + 1 {
        return Ok(SparseOp::from_rows(ncols, Vec::new()));
    }
    let m = build_matrix(sys, q)?;
    let cols = enumerate(sys.r, q - 1);
    let row_ops: Vec<Vec<(usize, &DiffOp)>> = enumerate(sys.r, q)
        .iter()
        .map(|j| {
            m.rows
                .get(j)
                .map(|r| r.iter().map(|(i, op)| (cols.binary_search(i).unwrap(), op)).collect())
                .unwrap_or_default()
        })
        .collect();
    let rows: Result<Vec<Vec<(usize, Complex64)>>, SolverError> = (0..row_ops.len() * len)
        .into_par_iter()
        .map(|ri| {
            let (jpos, node) = (ri / len, ri % len);
            let mut row = Vec::new();
            if mask.is_some_and(|m| !stencil_fits(grid, m, node)) {
                return Ok(row);
            }
            for &(ipos, op) in &row_ops[jpos] {
                push_entries(op, grid, node, ipos * len, &mut row)?;
            }
            Ok(row)
        })
        .collect();
    Ok(SparseOp::from_rows(ncols, rows?))
}

/// `e^{−φ}` at every node.
pub fn node_weights(grid: &Grid, phi: Option<&RatFun>) -> Result<Vec<f64>, SolverError> {
    let Some(phi) = phi else {
        return Ok(vec![1.0; grid.len()]);
    };
    if phi.conj() != *phi {
        return Err(SolverError::ComplexWeight);
    }
    (0..grid.len())
        .map(|k| {
            let x = grid.point(k);
            Ok((-eval_at(phi, &x)?.re).exp())
        })
        .collect()
}

fn tile(w: &[f64], blocks: usize) -> Vec<f64> {
    (0..blocks).flat_map(|_| w.iter().copied()).collect()
}

fn weighted_norm(v: &[Complex64], w: &[f64]) -> f64 {
    v.iter().zip(w).map(|(z, w)| w * z.norm_sqr()).sum::<f64>().sqrt()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SolveReport {
    pub q: usize,
    pub nodes_per_axis: usize,
    pub unknowns: usize,
    pub equations: usize,
    pub iterations: usize,
    pub converged: bool,
    /// `‖Au − f‖_w / ‖f‖_w`
    pub residual: f64,
    /// `max |Au − f|`
    pub residual_inf: f64,
    /// `‖D_{q+1} f‖_w / ‖f‖_w`, absent at the top level.
    pub compatibility_defect: Option<f64>,
    /// The defect exceeds `10·tol`; the data may be incompatible.
    pub compatibility_warning: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LevelSolution {
    pub u: GridField,
    pub report: SolveReport,
    pub history: Vec<f64>,
}

/// Solves `𝒫_q u = f` in the weighted least-squares sense.
pub fn solve_level(
    sys: &OperatorSystem,
    q: usize,
    f: &GridField,
    phi: Option<&RatFun>,
    tol: f64,
    maxit: Option<usize>,
) -> Result<LevelSolution, SolverError> {
    if f.q != q || f.r != sys.r {
        return Err(SolverError::DimensionMismatch(format!(
            "right-hand side has (q, r) = ({}, {}), expected ({q}, {})",
            f.q, f.r, sys.r
        )));
    }
    if q == 0 || q > sys.r {
        return Err(ComplexError::LevelOutOfRange { q, r: sys.r }.into());
    }
    let grid = &f.grid;
    let a = discretize_p(sys, q, grid)?;
    let wn = node_weights(grid, phi)?;
    let w = tile(&wn, binomial(sys.r, q));
    let rhs = f.flatten();
    let maxit = maxit.unwrap_or_else(|| default_maxit(a.ncols));
    let res = lsq_solve(&a, &rhs, &w, tol, maxit);
    let au = a.matvec(&res.u);
    let diff: Vec<Complex64> = au.iter().zip(&rhs).map(|(x, y)| x - y).collect();
    let fnorm = weighted_norm(&rhs, &w);
    let rel = |v: f64| if fnorm == 0.0 { v } else { v / fnorm };
    let residual = rel(weighted_norm(&diff, &w));
    let residual_inf = diff.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let compatibility_defect = if q < sys.r {
        let d = discretize_p(sys, q + 1, grid)?;
        let df = d.matvec(&rhs);
        Some(rel(weighted_norm(&df, &tile(&wn, binomial(sys.r, q + 1)))))
    } else {
        None
    };
    let report = SolveReport {
        q,
        nodes_per_axis: grid.n,
        unknowns: a.ncols,
        equations: a.nrows,
        iterations: res.iterations,
        converged: res.converged,
        residual,
        residual_inf,
        compatibility_warning: compatibility_defect.is_some_and(|d| d > 10.0 * tol),
        compatibility_defect,
    };
    Ok(LevelSolution { u: GridField::from_flat(q - 1, sys.r, grid, &res.u), report, history: res.history })
}

/// Checks `p_j a⁰_k − p_k a⁰_j = c_{jk}^l a⁰_l` for all `j < k`.
pub fn check_eta_compatibility(sys: &OperatorSystem) -> Result<(), SolverError> {
    let c = sys.c()?;
    let r = sys.r;
    for j in 0..r {
        for k in j + 1..r {
            let mut res = &sys.p(j).apply(&sys.ops[k].a0) - &sys.p(k).apply(&sys.ops[j].a0);
            for l in 0..r {
                res = &res - &(&c[j][k][l] * &sys.ops[l].a0);
            }
            if !res.is_zero() {
                return Err(SolverError::Incompatible {
                    j: j + 1,
                    k: k + 1,
                    residual: res.display(&sys.varnames).to_string(),
                });
            }
        }
    }
    Ok(())
}

/// Solves `p_j η = a⁰_j`, `j = 1…r`, stacked, in least squares.
pub fn solve_eta(sys: &OperatorSystem, grid: &Grid, tol: f64) -> Result<LevelSolution, SolverError> {
    check_eta_compatibility(sys)?;
    let principal: Vec<DiffOp> = sys.ops.iter().map(DiffOp::principal).collect();
    let mut psys = OperatorSystem::new(principal)?.with_c(sys.c()?.clone())?;
    psys.varnames = sys.varnames.clone();
    let mut f = GridField::zeros(1, sys.r, grid);
    for (j, comp) in f.components.iter_mut() {
        let a0 = &sys.ops[j.entries()[0] - 1].a0;
        for (k, v) in comp.iter_mut().enumerate() {
            *v = eval_at(a0, &grid.point(k))?;
        }
    }
    solve_level(&psys, 1, &f, None, tol, None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{default_names, parse_ratfun};
    use crate::system::builtin::{derham, dolbeault};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn rf(n: usize, s: &str) -> RatFun {
        parse_ratfun(s, &default_names(n)).unwrap()
    }

    fn scalar(grid: &Grid, r: usize, f: impl Fn(&[f64]) -> Complex64) -> GridField {
        GridField::from_fn(0, r, grid, |_, x| f(x))
    }

    #[test]
    fn stencils_are_exact_on_quadratics() {
        let sys = derham(1).unwrap();
        let g = Grid::new(vec![(0.0, 1.0)], 64).unwrap();
        let a = discretize_p(&sys, 1, &g).unwrap();
        let u = scalar(&g, 1, |x| c(x[0] * x[0], 0.0)).flatten();
        for (k, v) in a.matvec(&u).iter().enumerate() {
            assert!((v - c(2.0 * g.point(k)[0], 0.0)).norm() < 1e-10);
        }
        let ones = vec![c(1.0, 0.0); g.len()];
        assert!(a.matvec(&ones).iter().all(|v| v.norm() < 1e-12));
    }

    #[test]
    fn dolbeault_of_zbar_is_one() {
        let sys = dolbeault(1).unwrap();
        let g = Grid::new(vec![(-1.0, 1.0); 2], 16).unwrap();
        let a = discretize_p(&sys, 1, &g).unwrap();
        let u = scalar(&g, 1, |x| c(x[0], -x[1])).flatten();
        assert!(a.matvec(&u).iter().all(|v| (v - c(1.0, 0.0)).norm() < 1e-10));
    }

    #[test]
    fn derham_gradient_field() {
        let sys = derham(2).unwrap();
        let g = Grid::new(vec![(-1.0, 1.0); 2], 16).unwrap();
        let f = GridField::from_fn(1, 2, &g, |j, x| if j.entries()[0] == 1 { c(x[1], 0.0) } else { c(x[0], 0.0) });
        let sol = solve_level(&sys, 1, &f, None, 1e-10, None).unwrap();
        assert!(sol.report.converged);
        assert!(sol.report.residual < 1e-8);
        assert!(sol.report.compatibility_defect.unwrap() < 1e-12);
        let bad = GridField::from_fn(1, 2, &g, |j, x| if j.entries()[0] == 1 { c(x[1], 0.0) } else { c(0.0, 0.0) });
        let sol = solve_level(&sys, 1, &bad, None, 1e-10, None).unwrap();
        assert!(sol.report.residual > 1e-2);
        assert!(sol.report.compatibility_warning);
    }

    #[test]
    fn weights_scale_out() {
        let sys = dolbeault(1).unwrap();
        let g = Grid::new(vec![(-1.0, 1.0); 2], 12).unwrap();
        let f = GridField::from_fn(1, 1, &g, |_, x| c(x[0] * x[1], x[0]));
        let a = solve_level(&sys, 1, &f, Some(&rf(2, "x1^2 + x2^2")), 1e-12, None).unwrap();
        let b = solve_level(&sys, 1, &f, Some(&rf(2, "x1^2 + x2^2 - 3")), 1e-12, None).unwrap();
        for (x, y) in a.u.flatten().iter().zip(&b.u.flatten()) {
            assert!((x - y).norm() < 1e-10);
        }
    }

    #[test]
    fn eta_examples() {
        let names = default_names(1);
        let op = DiffOp::new(vec![parse_ratfun("1", &names).unwrap()], parse_ratfun("1", &names).unwrap());
        let sys = OperatorSystem::new(vec![op]).unwrap().with_c(crate::system::zero_table(1, 1)).unwrap();
        let g = Grid::new(vec![(0.0, 1.0)], 32).unwrap();
        let sol = solve_eta(&sys, &g, 1e-12).unwrap();
        assert!(sol.report.residual < 1e-6);
        let eta = sol.u.component(&crate::multiindex::MultiIndex::empty());
        for k in 1..g.len() {
            assert!(((eta[k] - eta[0]) - c(g.point(k)[0], 0.0)).norm() < 1e-6);
        }
        let zero = solve_eta(&derham(2).unwrap(), &Grid::new(vec![(0.0, 1.0); 2], 8).unwrap(), 1e-12).unwrap();
        assert_eq!(zero.u.max_abs(), 0.0);
    }

    #[test]
    fn eta_incompatibility_is_reported() {
        let mut sys = derham(2).unwrap();
        sys.ops[0].a0 = rf(2, "x2");
        let g = Grid::new(vec![(0.0, 1.0); 2], 8).unwrap();
        assert!(matches!(solve_eta(&sys, &g, 1e-8), Err(SolverError::Incompatible { j: 1, k: 2, .. })));
    }

    #[test]
    fn discrete_complex_is_second_order_small() {
        let sys = crate::system::random_involutive(5, 2, 2, 2);
        let mut errs = Vec::new();
        for n in [16, 32, 64] {
            let g = Grid::new(vec![(-0.5, 0.5); 2], n).unwrap();
            let d1 = discretize_p(&sys, 1, &g).unwrap();
            let d2 = discretize_p(&sys, 2, &g).unwrap();
            let u = scalar(&g, 2, |x| c((x[0] + 2.0 * x[1]).sin(), x[0].exp())).flatten();
            let v = d2.matvec(&d1.matvec(&u));
            errs.push(v.iter().map(|z| z.norm()).fold(0.0, f64::max));
        }
        assert!(errs[0] > 1e-4);
        assert!(errs[0] / errs[1] > 3.5 && errs[1] / errs[2] > 3.5, "{errs:?}");
    }
}
