use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::{format_op, zero_table, CheckReport, OperatorSystem, SystemError, Table, Witness};
use crate::algebra::linsolve::{numeric_rank, rank, solve};
use crate::algebra::{LinSolve, RatFun};
use crate::diffop::DiffOp;

/// Result of solving (A1) for the structure constants.
#[derive(Clone, Debug, PartialEq)]
pub enum StructureSolve {
    Unique(Table),
    /// Some pair admits several solutions; the pivot solution is kept.
    /// `kernel_dim` is the largest kernel dimension over all pairs.
    NonUnique { table: Table, kernel_dim: usize, pairs: Vec<(usize, usize)> },
    /// 0-based pair `(j, k)`; `row` is 0 for the zero-order coefficient and
    /// `ν` for `∂_ν`.
    NoSolution { pair: (usize, usize), row: usize },
}

fn pairs(r: usize) -> Vec<(usize, usize)> {
    (0..r).flat_map(|j| (j + 1..r).map(move |k| (j, k))).collect()
}

/// Column `l` holds `(a_l⁰, a_l¹, …, a_lⁿ)`.
fn coefficient_rows(sys: &OperatorSystem, with_zero_order: bool) -> Vec<Vec<RatFun>> {
    let mut rows = Vec::new();
    if with_zero_order {
        rows.push(sys.ops.iter().map(|p| p.a0.clone()).collect());
    }
    for nu in 0..sys.n {
        rows.push(sys.ops.iter().map(|p| p.a[nu].clone()).collect());
    }
    rows
}

fn op_as_column(op: &DiffOp) -> Vec<RatFun> {
    std::iter::once(op.a0.clone()).chain(op.a.iter().cloned()).collect()
}

pub fn solve_structure_constants(sys: &OperatorSystem) -> StructureSolve {
    let (n, r) = (sys.n, sys.r);
    let a = coefficient_rows(sys, true);
    let solved: Vec<((usize, usize), LinSolve)> = pairs(r)
        .into_par_iter()
        .map(|(j, k)| {
            let b = op_as_column(&sys.ops[j].bracket(&sys.ops[k]));
            ((j, k), solve(&a, &b, r, n))
        })
        .collect();
    let mut table = zero_table(r, n);
    let mut kernel = 0;
    let mut flagged = Vec::new();
    for ((j, k), res) in solved {
        let x = match res {
            LinSolve::Unique(x) => x,
            LinSolve::NonUnique { solution, kernel_dim } => {
                kernel = kernel.max(kernel_dim);
                flagged.push((j, k));
                solution
            }
            LinSolve::Inconsistent { row, .. } => return StructureSolve::NoSolution { pair: (j, k), row },
        };
        for (l, c) in x.into_iter().enumerate() {
            table[k][j][l] = -&c;
            table[j][k][l] = c;
        }
    }
    if flagged.is_empty() {
        StructureSolve::Unique(table)
    } else {
        StructureSolve::NonUnique { table, kernel_dim: kernel, pairs: flagged }
    }
}

/// `[P_j, P_k] − Σ_l c_{jk}^l P_l` for 0-based `j, k`.
pub fn a1_residual(sys: &OperatorSystem, c: &Table, j: usize, k: usize) -> DiffOp {
    let mut res = sys.ops[j].bracket(&sys.ops[k]);
    for (l, cl) in c[j][k].iter().enumerate() {
        if !cl.is_zero() {
            res = &res - &sys.ops[l].scale(cl);
        }
    }
    res
}

/// (A1): every bracket lies in the span with the declared (or solved) `c`.
pub fn check_a1(sys: &OperatorSystem) -> Result<CheckReport, SystemError> {
    let mut note = None;
    let owned;
    let c = match &sys.c {
        Some(c) => c,
        None => {
            owned = match solve_structure_constants(sys) {
                StructureSolve::Unique(t) => t,
                StructureSolve::NonUnique { table, kernel_dim, .. } => {
                    note = Some(format!("structure constants not unique (kernel dimension {kernel_dim})"));
                    table
                }
                StructureSolve::NoSolution { pair, row } => {
                    let res = sys.ops[pair.0].bracket(&sys.ops[pair.1]);
                    return Ok(CheckReport::fail(
                        "a1",
                        Witness::Indices {
                            indices: vec![pair.0 + 1, pair.1 + 1],
                            residual: format_op(&res, &sys.varnames),
                        },
                    )
                    .with_note(format!("no structure constants solve coefficient row {row}")));
                }
            };
            &owned
        }
    };
    let residuals: Vec<((usize, usize), DiffOp)> =
        pairs(sys.r).into_par_iter().map(|(j, k)| ((j, k), a1_residual(sys, c, j, k))).collect();
    for ((j, k), res) in residuals {
        if !res.is_zero() {
            return Ok(CheckReport::fail(
                "a1",
                Witness::Indices { indices: vec![j + 1, k + 1], residual: format_op(&res, &sys.varnames) },
            ));
        }
    }
    let report = CheckReport::pass("a1");
    Ok(match note {
        Some(n) => report.with_note(n),
        None => report,
    })
}

/// Difference of the two sides of the (A2) identity at 0-based `(k, k', l', l)`.
pub fn a2_defect(sys: &OperatorSystem, c: &Table, k: usize, kp: usize, lp: usize, l: usize) -> RatFun {
    let mut lhs = RatFun::zero(sys.n);
    for s in 0..sys.r {
        for (x, y) in [(&c[k][kp][s], &c[s][lp][l]), (&c[kp][lp][s], &c[s][k][l]), (&c[lp][k][s], &c[s][kp][l])] {
            if !x.is_zero() && !y.is_zero() {
                lhs = &lhs + &(x * y);
            }
        }
    }
    let rhs = &(&sys.ops[lp].apply_principal(&c[k][kp][l]) + &sys.ops[k].apply_principal(&c[kp][lp][l]))
        + &sys.ops[kp].apply_principal(&c[lp][k][l]);
    &lhs - &rhs
}

/// (A2): the cyclic structure-constant identity for all index quadruples.
pub fn check_a2(sys: &OperatorSystem) -> Result<CheckReport, SystemError> {
    let c = sys.c()?;
    let r = sys.r;
    let quads: Vec<[usize; 4]> = (0..r)
        .flat_map(|k| (0..r).flat_map(move |kp| (0..r).flat_map(move |lp| (0..r).map(move |l| [k, kp, lp, l]))))
        .collect();
    let first_bad = quads
        .par_iter()
        .map(|&[k, kp, lp, l]| {
            let d = a2_defect(sys, c, k, kp, lp, l);
            (!d.is_zero()).then_some(([k, kp, lp, l], d))
        })
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .next();
    Ok(match first_bad {
        None => CheckReport::pass("a2"),
        Some((q, d)) => CheckReport::fail(
            "a2",
            Witness::Indices { indices: q.iter().map(|i| i + 1).collect(), residual: d.display(&sys.varnames).to_string() },
        ),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RankMode {
    /// Rows `ν = 0…n`, the sufficient condition for (A2).
    IncludeZeroOrder,
    /// Rows `ν = 1…n`, the pointwise condition (A2)*.
    PrincipalOnly,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RankReport {
    pub mode: RankMode,
    pub r: usize,
    pub generic_rank: usize,
    pub samples: usize,
    pub pole_samples: usize,
    /// Sample points where the numeric rank falls below the generic rank.
    pub drop_points: Vec<Vec<f64>>,
}

impl RankReport {
    pub fn full(&self) -> bool {
        self.generic_rank == self.r && self.drop_points.is_empty()
    }

    pub fn to_check(&self) -> CheckReport {
        let id = match self.mode {
            RankMode::IncludeZeroOrder => "rank-full",
            RankMode::PrincipalOnly => "rank-principal",
        };
        let base = if self.generic_rank < self.r {
            CheckReport::fail(
                id,
                Witness::Indices { indices: vec![], residual: format!("generic rank {} < r = {}", self.generic_rank, self.r) },
            )
        } else if let Some(p) = self.drop_points.first() {
            CheckReport::fail(id, Witness::Point { point: p.clone(), detail: "numeric rank drops".into() })
        } else {
            CheckReport::pass(id)
        };
        base.with_note(match self.mode {
            RankMode::IncludeZeroOrder => "coefficient rows 0..n (sufficient condition for a2)",
            RankMode::PrincipalOnly => "coefficient rows 1..n (pointwise a2*)",
        })
    }
}

/// Generic rank of the coefficient matrix plus numeric rank at seeded samples.
pub fn check_rank(sys: &OperatorSystem, mode: RankMode, seed: u64, samples: usize) -> RankReport {
    let rows = coefficient_rows(sys, mode == RankMode::IncludeZeroOrder);
    let generic_rank = rank(&rows, sys.r, sys.n);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let points: Vec<Vec<f64>> = (0..samples)
        .map(|_| sys.bbox.iter().map(|&(lo, hi)| rng.random_range(lo..hi)).collect())
        .collect();
    let evaluated: Vec<Option<usize>> = points
        .par_iter()
        .map(|x| {
            let mut m = Vec::with_capacity(rows.len());
            for row in &rows {
                let vals: Result<Vec<Complex64>, _> = row.iter().map(|f| f.evaluate(x)).collect();
                m.push(vals.ok()?);
            }
            Some(numeric_rank(&m, 1e-9))
        })
        .collect();
    let mut pole_samples = 0;
    let mut drop_points = Vec::new();
    for (x, rk) in points.into_iter().zip(evaluated) {
        match rk {
            None => pole_samples += 1,
            Some(k) if k < generic_rank => drop_points.push(x),
            Some(_) => {}
        }
    }
    RankReport { mode, r: sys.r, generic_rank, samples, pole_samples, drop_points }
}

/// Outcome of (A3): `[p_j, p̄_k] = d_{jk}^l p_l − e_{jk}^l p̄_l`.
#[derive(Clone, Debug, PartialEq)]
pub enum A3Outcome {
    InSpan { d: Table, e: Table, non_unique: bool },
    /// 0-based pair and the part of the bracket left after the pivot
    /// solution of the consistent rows.
    NotInSpan { pair: (usize, usize), residual: DiffOp },
}

pub fn check_a3(sys: &OperatorSystem) -> A3Outcome {
    let (n, r) = (sys.n, sys.r);
    let p: Vec<DiffOp> = (0..r).map(|j| sys.p(j)).collect();
    let pbar: Vec<DiffOp> = p.iter().map(DiffOp::bar).collect();
    // Columns: p_1..p_r, then −p̄_1..−p̄_r; rows ν = 1..n.
    let a: Vec<Vec<RatFun>> = (0..n)
        .map(|nu| p.iter().map(|q| q.a[nu].clone()).chain(pbar.iter().map(|q| -&q.a[nu])).collect())
        .collect();
    let all: Vec<(usize, usize)> = (0..r).flat_map(|j| (0..r).map(move |k| (j, k))).collect();
    let solved: Vec<((usize, usize), DiffOp, LinSolve)> = all
        .into_par_iter()
        .map(|(j, k)| {
            let b = p[j].bracket(&pbar[k]);
            let res = solve(&a, &b.a, 2 * r, n);
            ((j, k), b, res)
        })
        .collect();
    let mut d = zero_table(r, n);
    let mut e = zero_table(r, n);
    let mut non_unique = false;
    for ((j, k), b, res) in solved {
        let x = match res {
            LinSolve::Unique(x) => x,
            LinSolve::NonUnique { solution, .. } => {
                non_unique = true;
                solution
            }
            LinSolve::Inconsistent { partial, .. } => {
                let mut residual = b;
                for l in 0..r {
                    residual = &residual - &p[l].scale(&partial[l]);
                    residual = &residual + &pbar[l].scale(&partial[r + l]);
                }
                return A3Outcome::NotInSpan { pair: (j, k), residual };
            }
        };
        d[j][k].clone_from_slice(&x[..r]);
        e[j][k].clone_from_slice(&x[r..]);
    }
    A3Outcome::InSpan { d, e, non_unique }
}

/// A named assumption check selectable at runtime.
pub trait CheckRunner: Send + Sync {
    fn id(&self) -> &'static str;
    fn run(&self, sys: &OperatorSystem, seed: u64) -> Result<CheckReport, SystemError>;
}

struct A1;
struct A2;
struct A3;
struct Rank(RankMode);

impl CheckRunner for A1 {
    fn id(&self) -> &'static str {
        "a1"
    }
    fn run(&self, sys: &OperatorSystem, _seed: u64) -> Result<CheckReport, SystemError> {
        check_a1(sys)
    }
}

impl CheckRunner for A2 {
    fn id(&self) -> &'static str {
        "a2"
    }
    fn run(&self, sys: &OperatorSystem, _seed: u64) -> Result<CheckReport, SystemError> {
        let mut sys = sys.clone();
        sys.ensure_c()?;
        check_a2(&sys)
    }
}

impl CheckRunner for A3 {
    fn id(&self) -> &'static str {
        "a3"
    }
    fn run(&self, sys: &OperatorSystem, _seed: u64) -> Result<CheckReport, SystemError> {
        Ok(match check_a3(sys) {
            A3Outcome::InSpan { non_unique, .. } => {
                let rep = CheckReport::pass("a3");
                if non_unique {
                    rep.with_note("d, e not unique; pivot solution kept")
                } else {
                    rep
                }
            }
            A3Outcome::NotInSpan { pair, residual } => CheckReport::fail(
                "a3",
                Witness::Indices { indices: vec![pair.0 + 1, pair.1 + 1], residual: format_op(&residual, &sys.varnames) },
            ),
        })
    }
}

impl CheckRunner for Rank {
    fn id(&self) -> &'static str {
        match self.0 {
            RankMode::IncludeZeroOrder => "rank-full",
            RankMode::PrincipalOnly => "rank-principal",
        }
    }
    fn run(&self, sys: &OperatorSystem, seed: u64) -> Result<CheckReport, SystemError> {
        Ok(check_rank(sys, self.0, seed, 100).to_check())
    }
}

/// Assumption checks registered by id, run in registration order.
pub struct CheckRegistry {
    checks: Vec<Box<dyn CheckRunner>>,
}

impl Default for CheckRegistry {
    fn default() -> Self {
        let mut reg = Self { checks: Vec::new() };
        reg.register(Box::new(A1));
        reg.register(Box::new(A2));
        reg.register(Box::new(A3));
        reg.register(Box::new(Rank(RankMode::IncludeZeroOrder)));
        reg.register(Box::new(Rank(RankMode::PrincipalOnly)));
        reg
    }
}

impl CheckRegistry {
    pub fn register(&mut self, check: Box<dyn CheckRunner>) {
        self.checks.retain(|c| c.id() != check.id());
        self.checks.push(check);
    }

    pub fn ids(&self) -> Vec<&'static str> {
        self.checks.iter().map(|c| c.id()).collect()
    }

    pub fn get(&self, id: &str) -> Option<&dyn CheckRunner> {
        self.checks.iter().find(|c| c.id() == id).map(|c| c.as_ref())
    }

    /// Runs the selected checks (all when `ids` is empty) in registry order.
    pub fn run(&self, sys: &OperatorSystem, ids: &[&str], seed: u64) -> Result<Vec<CheckReport>, SystemError> {
        self.checks
            .iter()
            .filter(|c| ids.is_empty() || ids.contains(&c.id()))
            .map(|c| c.run(sys, seed))
            .collect()
    }
}
