//! Additive Cousin data on covers by axis-aligned boxes: cocycle checks,
//! a smooth partition of unity, and splitting through one global solve.

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

use crate::algebra::RatFun;
use crate::solver::{discretize_p_masked, solve_level, stencil_fits, Grid, GridField, SolveReport, SolverError};
use crate::system::OperatorSystem;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CousinError {
    #[error("cover leaves node {point:?} uncovered")]
    CoverGap { point: Vec<f64> },
    #[error("invalid cover: {0}")]
    InvalidCover(String),
    #[error("invalid datum: {0}")]
    InvalidDatum(String),
    #[error("patched right-hand side disagrees across overlap ({a},{b}) by {defect:e}")]
    GlueDefect { a: usize, b: usize, defect: f64 },
    #[error(transparent)]
    Solver(#[from] SolverError),
}

/// Ramp width, as a fraction of the box width, for an edge no other box reaches across.
pub const RAMP_FRACTION: f64 = 0.25;

/// A finite cover of the grid's box by axis-aligned boxes.
#[derive(Clone, Debug, PartialEq)]
pub struct Cover {
    pub grid: Grid,
    pub boxes: Vec<Vec<(f64, f64)>>,
    masks: Vec<Vec<bool>>,
}

impl Cover {
    pub fn new(grid: Grid, boxes: Vec<Vec<(f64, f64)>>) -> Result<Self, CousinError> {
        if boxes.is_empty() {
            return Err(CousinError::InvalidCover("no boxes".into()));
        }
        let eps: Vec<f64> = grid.h.iter().map(|h| 1e-9 * h).collect();
        for (a, b) in boxes.iter().enumerate() {
            if b.len() != grid.dim() {
                return Err(CousinError::InvalidCover(format!("box {a} has {} axes, grid {}", b.len(), grid.dim())));
            }
            for (ax, &(lo, hi)) in b.iter().enumerate() {
                let (glo, ghi) = grid.bbox[ax];
                if !(lo < hi) || lo < glo - eps[ax] || hi > ghi + eps[ax] {
                    return Err(CousinError::InvalidCover(format!("box {a} axis {} is not inside the grid box", ax + 1)));
                }
            }
        }
        let points = grid.points();
        let masks: Vec<Vec<bool>> = boxes
            .iter()
            .map(|b| {
                points
                    .iter()
                    .map(|x| x.iter().zip(b).zip(&eps).all(|((v, &(lo, hi)), e)| *v >= lo - e && *v <= hi + e))
                    .collect()
            })
            .collect();
        for (k, x) in points.iter().enumerate() {
            if !masks.iter().any(|m| m[k]) {
                return Err(CousinError::CoverGap { point: x.clone() });
            }
        }
        Ok(Self { grid, boxes, masks })
    }

    pub fn len(&self) -> usize {
        self.boxes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.boxes.is_empty()
    }

    pub fn mask(&self, a: usize) -> &[bool] {
        &self.masks[a]
    }

    pub fn overlap(&self, idx: &[usize]) -> Vec<bool> {
        (0..self.grid.len()).map(|k| idx.iter().all(|&a| self.masks[a][k])).collect()
    }
}

/// `6t⁵ − 15t⁴ + 10t³` clamped to `[0, 1]`; C² at both ends.
fn smoothstep(t: f64) -> f64 {
    let t = t.clamp(0.0, 1.0);
    t * t * t * (t * (6.0 * t - 15.0) + 10.0)
}

/// Depth of the band behind an interior edge of box `a` that other boxes
/// cover, capped at half the box width.
fn edge_band(cover: &Cover, a: usize, axis: usize, lower: bool) -> f64 {
    let b = &cover.boxes[a];
    let (lo, hi) = b[axis];
    let tol = 1e-9 * cover.grid.h[axis];
    let mut band: f64 = 0.0;
    for (c, other) in cover.boxes.iter().enumerate() {
        let meets = (0..b.len()).all(|k| k == axis || (other[k].0 < b[k].1 && other[k].1 > b[k].0));
        if c == a || !meets {
            continue;
        }
        let (olo, ohi) = other[axis];
        let reach = if lower {
            if olo < lo - tol && ohi > lo + tol { ohi.min(hi) - lo } else { 0.0 }
        } else if ohi > hi + tol && olo < hi - tol {
            hi - olo.max(lo)
        } else {
            0.0
        };
        band = band.max(reach);
    }
    let width = hi - lo;
    if band == 0.0 {
        band = RAMP_FRACTION * width;
    }
    band.min(width / 2.0)
}

/// Per-axis bump of box `a`: zero on the outer third of each interior edge
/// band, one past its inner third, with a quintic ramp in between.
fn profile(cover: &Cover, a: usize, axis: usize, x: f64) -> f64 {
    let (lo, hi) = cover.boxes[a][axis];
    let (glo, ghi) = cover.grid.bbox[axis];
    let tol = 1e-9 * cover.grid.h[axis];
    let mut v = 1.0;
    if lo > glo + tol {
        let d = edge_band(cover, a, axis, true) / 3.0;
        v *= smoothstep((x - lo - d) / d);
    }
    if hi < ghi - tol {
        let d = edge_band(cover, a, axis, false) / 3.0;
        v *= smoothstep((hi - d - x) / d);
    }
    v
}

/// Nonnegative weights `h_α` supported in `Ω_α` with `Σ_α h_α = 1`. Each
/// `h_α` is locally constant next to every interior box edge, so masked
/// stencils of neighbouring patches agree there.
pub fn partition_of_unity(cover: &Cover) -> Result<Vec<Vec<f64>>, CousinError> {
    let grid = &cover.grid;
    let mut chi: Vec<Vec<f64>> = vec![vec![0.0; grid.len()]; cover.len()];
    for k in 0..grid.len() {
        let x = grid.point(k);
        for (a, c) in chi.iter_mut().enumerate() {
            if cover.mask(a)[k] {
                c[k] = (0..grid.dim()).map(|ax| profile(cover, a, ax, x[ax])).product();
            }
        }
        let total: f64 = chi.iter().map(|c| c[k]).sum();
        if total <= 0.0 {
            return Err(CousinError::CoverGap { point: x });
        }
        for c in chi.iter_mut() {
            c[k] /= total;
        }
    }
    Ok(chi)
}

/// Sections `u_{αβ}` for `α < β`, stored on the full grid; only values on
/// the overlap are read. `u_{βα} = −u_{αβ}`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct CousinDatum {
    pub pairs: BTreeMap<(usize, usize), Vec<Complex64>>,
}

impl CousinDatum {
    pub fn insert(&mut self, a: usize, b: usize, values: Vec<Complex64>) {
        assert!(a < b, "store pairs with a < b");
        self.pairs.insert((a, b), values);
    }

    /// `u_{ab}` at node `k`; zero for an absent pair.
    pub fn get(&self, a: usize, b: usize, k: usize) -> Complex64 {
        if a == b {
            return Complex64::new(0.0, 0.0);
        }
        let (lo, hi, sign) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };
        self.pairs.get(&(lo, hi)).map_or(Complex64::new(0.0, 0.0), |v| v[k] * sign)
    }

    pub fn from_fn(cover: &Cover, f: impl Fn(usize, usize, &[f64]) -> Complex64) -> Self {
        let mut d = Self::default();
        for a in 0..cover.len() {
            for b in a + 1..cover.len() {
                let ov = cover.overlap(&[a, b]);
                if !ov.iter().any(|&v| v) {
                    continue;
                }
                let vals = (0..cover.grid.len())
                    .map(|k| if ov[k] { f(a, b, &cover.grid.point(k)) } else { Complex64::new(0.0, 0.0) })
                    .collect();
                d.insert(a, b, vals);
            }
        }
        d
    }

    fn check(&self, cover: &Cover) -> Result<(), CousinError> {
        for (&(a, b), v) in &self.pairs {
            if a >= b || b >= cover.len() {
                return Err(CousinError::InvalidDatum(format!("pair ({a},{b}) does not index the cover")));
            }
            if v.len() != cover.grid.len() {
                return Err(CousinError::InvalidDatum(format!("pair ({a},{b}) has {} values", v.len())));
            }
        }
        Ok(())
    }
}

/// Nodes of `mask` whose difference stencils stay inside it.
fn interior(grid: &Grid, mask: &[bool]) -> Vec<bool> {
    (0..grid.len()).map(|k| stencil_fits(grid, mask, k)).collect()
}

/// `𝒫₁ u` at the interior nodes of `mask`, zero elsewhere.
fn p1_on(sys: &OperatorSystem, grid: &Grid, mask: &[bool], u: &[Complex64]) -> Result<Vec<Vec<Complex64>>, CousinError> {
    let a = discretize_p_masked(sys, 1, grid, Some(mask))?;
    let v = a.matvec(u);
    Ok(v.chunks(grid.len()).map(<[Complex64]>::to_vec).collect())
}

fn max_on(mask: &[bool], comps: &[Vec<Complex64>]) -> f64 {
    comps
        .iter()
        .flat_map(|c| c.iter().zip(mask).filter(|(_, &m)| m).map(|(v, _)| v.norm()))
        .fold(0.0, f64::max)
}

/// `(Σ |v|² · cell volume)^{1/2}` over the masked nodes.
fn l2_on(grid: &Grid, mask: &[bool], comps: &[Vec<Complex64>]) -> f64 {
    let cell: f64 = grid.h.iter().product();
    let s: f64 = comps.iter().flat_map(|c| c.iter().zip(mask).filter(|(_, &m)| m).map(|(v, _)| v.norm_sqr())).sum();
    (s * cell).sqrt()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PairCheck {
    pub pair: (usize, usize),
    pub max_residual: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TripleCheck {
    pub triple: (usize, usize, usize),
    pub max_defect: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DatumReport {
    pub pass: bool,
    pub homogeneous: Vec<PairCheck>,
    pub cocycle: Vec<TripleCheck>,
}

/// Checks that every `u_{αβ}` solves `𝒫₁u = 0` on its overlap and that
/// `u_{αβ} + u_{βγ} + u_{γα} = 0` on triple overlaps.
pub fn verify_datum(sys: &OperatorSystem, cover: &Cover, datum: &CousinDatum, tol: f64) -> Result<DatumReport, CousinError> {
    datum.check(cover)?;
    let grid = &cover.grid;
    let mut homogeneous = Vec::new();
    for (&(a, b), v) in &datum.pairs {
        let ov = cover.overlap(&[a, b]);
        if !ov.iter().any(|&m| m) {
            continue;
        }
        let res = p1_on(sys, grid, &ov, v)?;
        let max_residual = max_on(&interior(grid, &ov), &res);
        homogeneous.push(PairCheck { pair: (a, b), max_residual, pass: max_residual <= tol });
    }
    let mut cocycle = Vec::new();
    let m = cover.len();
    for a in 0..m {
        for b in a + 1..m {
            for c in b + 1..m {
                let ov = cover.overlap(&[a, b, c]);
                if !ov.iter().any(|&v| v) {
                    continue;
                }
                let max_defect = (0..grid.len())
                    .filter(|&k| ov[k])
                    .map(|k| (datum.get(a, b, k) + datum.get(b, c, k) + datum.get(c, a, k)).norm())
                    .fold(0.0, f64::max);
                cocycle.push(TripleCheck { triple: (a, b, c), max_defect, pass: max_defect <= tol });
            }
        }
    }
    let pass = homogeneous.iter().all(|p| p.pass) && cocycle.iter().all(|t| t.pass);
    Ok(DatumReport { pass, homogeneous, cocycle })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SplitOptions {
    pub solver_tol: f64,
    /// Largest accepted disagreement of `𝒫₁w_α` across overlaps.
    pub glue_tol: f64,
    pub maxit: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SplitReport {
    /// `max |𝒫₁w_α − 𝒫₁w_β|` over nodes interior to both boxes.
    pub glue_defect: f64,
    /// `max |(w_β − w_α) − u_{αβ}|` before the solve.
    pub w_consistency: f64,
    /// `max_{αβ} ‖(u_β − u_α) − u_{αβ}‖_∞ / ‖u_{αβ}‖_∞`.
    pub splitting_defect: f64,
    /// `‖𝒫₁u_α‖_∞` over the nodes of `Ω_α` whose stencils stay in `Ω_α`.
    pub residual_inf: Vec<f64>,
    /// Same nodes, cell-volume weighted `L²`.
    pub residual_l2: Vec<f64>,
    pub solve: SolveReport,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Split {
    /// `u_α` on the full grid, zero outside `Ω_α`.
    pub u: Vec<Vec<Complex64>>,
    pub report: SplitReport,
}

/// Writes `u_{αβ} = u_β − u_α` with `𝒫₁u_α ≈ 0` on `Ω_α`.
pub fn split(
    sys: &OperatorSystem,
    cover: &Cover,
    datum: &CousinDatum,
    phi: Option<&RatFun>,
    opts: SplitOptions,
) -> Result<Split, CousinError> {
    datum.check(cover)?;
    let grid = &cover.grid;
    let len = grid.len();
    let m = cover.len();
    let h = partition_of_unity(cover)?;
    let zero = Complex64::new(0.0, 0.0);

    // w_α = Σ_γ h_γ u_{γα} on Ω_α.
    let w: Vec<Vec<Complex64>> = (0..m)
        .map(|a| {
            (0..len)
                .map(|k| {
                    if !cover.mask(a)[k] {
                        return zero;
                    }
                    (0..m).filter(|&g| cover.mask(g)[k]).map(|g| datum.get(g, a, k) * h[g][k]).sum()
                })
                .collect()
        })
        .collect();

    let mut w_consistency: f64 = 0.0;
    for a in 0..m {
        for b in a + 1..m {
            let ov = cover.overlap(&[a, b]);
            for k in (0..len).filter(|&k| ov[k]) {
                w_consistency = w_consistency.max((w[b][k] - w[a][k] - datum.get(a, b, k)).norm());
            }
        }
    }

    let inner: Vec<Vec<bool>> = (0..m).map(|a| interior(grid, cover.mask(a))).collect();
    for (a, ha) in h.iter().enumerate() {
        if let Some(k) = (0..len).find(|&k| ha[k] > 0.0 && !inner[a][k]) {
            return Err(CousinError::InvalidCover(format!(
                "box {a} carries weight at {:?} where its difference stencils leave the box; refine the grid",
                grid.point(k)
            )));
        }
    }
    let pw: Vec<Vec<Vec<Complex64>>> =
        (0..m).map(|a| p1_on(sys, grid, cover.mask(a), &w[a])).collect::<Result<_, _>>()?;
    let mut glue_defect: f64 = 0.0;
    for a in 0..m {
        for b in a + 1..m {
            let mut d: f64 = 0.0;
            for (ca, cb) in pw[a].iter().zip(&pw[b]) {
                for k in (0..len).filter(|&k| inner[a][k] && inner[b][k]) {
                    d = d.max((ca[k] - cb[k]).norm());
                }
            }
            if d > opts.glue_tol {
                return Err(CousinError::GlueDefect { a, b, defect: d });
            }
            glue_defect = glue_defect.max(d);
        }
    }

    // g = Σ_α h_α 𝒫₁w_α.
    let mut g = GridField::zeros(1, sys.r, grid);
    for (j, comp) in g.components.values_mut().enumerate() {
        for (k, v) in comp.iter_mut().enumerate() {
            *v = (0..m).filter(|&a| cover.mask(a)[k]).map(|a| pw[a][j][k] * h[a][k]).sum();
        }
    }
    let sol = solve_level(sys, 1, &g, phi, opts.solver_tol, opts.maxit)?;
    let v = sol.u.flatten();

    let u: Vec<Vec<Complex64>> = (0..m)
        .map(|a| (0..len).map(|k| if cover.mask(a)[k] { w[a][k] - v[k] } else { zero }).collect())
        .collect();

    let mut splitting_defect: f64 = 0.0;
    for (&(a, b), vals) in &datum.pairs {
        let ov = cover.overlap(&[a, b]);
        let scale = (0..len).filter(|&k| ov[k]).map(|k| vals[k].norm()).fold(0.0, f64::max);
        let d = (0..len).filter(|&k| ov[k]).map(|k| (u[b][k] - u[a][k] - vals[k]).norm()).fold(0.0, f64::max);
        splitting_defect = splitting_defect.max(if scale > 0.0 { d / scale } else { d });
    }
    let mut residual_inf = Vec::with_capacity(m);
    let mut residual_l2 = Vec::with_capacity(m);
    for (a, ua) in u.iter().enumerate() {
        let res = p1_on(sys, grid, cover.mask(a), ua)?;
        let inner = interior(grid, cover.mask(a));
        residual_inf.push(max_on(&inner, &res));
        residual_l2.push(l2_on(grid, &inner, &res));
    }
    Ok(Split {
        u,
        report: SplitReport { glue_defect, w_consistency, splitting_defect, residual_inf, residual_l2, solve: sol.report },
    })
}
