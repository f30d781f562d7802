//! Operator systems `P = (P₁,…,P_r)` with structure-constant tables, the
//! involutivity checks, builtin systems and a randomized generator.

pub mod builtin;
mod checks;
mod io;
mod poles;
mod random;

use serde::Serialize;
use thiserror::Error;

use crate::algebra::{default_names, ParseError, RatFun};
use crate::diffop::DiffOp;

pub use builtin::{BuiltinRegistry, Params, SystemBuilder};
pub use checks::{
    check_a1, check_a2, check_a3, check_rank, solve_structure_constants, A3Outcome, CheckRegistry,
    CheckRunner, RankMode, RankReport, StructureSolve,
};
pub use io::{json_error_offset, OperatorFile, SystemFile};
pub use poles::{check_pole_free, sample_grid};
pub use random::{gauge_system, random_involutive};

/// `table[j][k][l]` holds `c_{jk}^l` with 0-based indices.
pub type Table = Vec<Vec<Vec<RatFun>>>;

pub fn zero_table(r: usize, nvars: usize) -> Table {
    vec![vec![vec![RatFun::zero(nvars); r]; r]; r]
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SystemError {
    #[error("invalid JSON at byte {offset}: {message}")]
    Json { offset: usize, message: String },
    #[error("in {field}: {source}")]
    Parse {
        field: String,
        #[source]
        source: ParseError,
    },
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("structure constants not antisymmetric at (j,k,l) = ({j},{k},{l})")]
    NotAntisymmetric { j: usize, k: usize, l: usize },
    #[error("structure constants missing and not solvable: {0}")]
    MissingC(String),
    #[error("(A3) data missing: {0}")]
    MissingA3(String),
    #[error("bad builtin parameters: {0}")]
    BadParams(String),
    #[error("unknown builtin `{0}`")]
    UnknownBuiltin(String),
    #[error("{what} has a pole near {point:?}")]
    PoleInBox { what: String, point: Vec<f64> },
}

/// An r-tuple of first-order operators on a box in ℝⁿ.
#[derive(Clone, Debug, PartialEq)]
pub struct OperatorSystem {
    pub n: usize,
    pub r: usize,
    pub ops: Vec<DiffOp>,
    pub c: Option<Table>,
    pub d: Option<Table>,
    pub e: Option<Table>,
    pub varnames: Vec<String>,
    pub bbox: Vec<(f64, f64)>,
}

impl OperatorSystem {
    /// A system without structure-constant tables, on `[-1, 1]ⁿ`.
    pub fn new(ops: Vec<DiffOp>) -> Result<Self, SystemError> {
        let r = ops.len();
        if r == 0 {
            return Err(SystemError::Shape("at least one operator is required".into()));
        }
        let n = ops[0].nvars();
        if ops.iter().any(|p| p.nvars() != n) {
            return Err(SystemError::Shape("operators act on different dimensions".into()));
        }
        Ok(Self {
            n,
            r,
            ops,
            c: None,
            d: None,
            e: None,
            varnames: default_names(n),
            bbox: vec![(-1.0, 1.0); n],
        })
    }

    pub fn with_c(mut self, c: Table) -> Result<Self, SystemError> {
        check_table_shape(&c, self.r, "c")?;
        check_antisymmetric(&c)?;
        self.c = Some(c);
        Ok(self)
    }

    pub fn with_box(mut self, bbox: Vec<(f64, f64)>) -> Result<Self, SystemError> {
        if bbox.len() != self.n || bbox.iter().any(|(lo, hi)| !(lo < hi)) {
            return Err(SystemError::Shape(format!("box must have {} intervals with lo < hi", self.n)));
        }
        self.bbox = bbox;
        Ok(self)
    }

    /// Principal part `p_j` of `P_j` (0-based `j`).
    pub fn p(&self, j: usize) -> DiffOp {
        self.ops[j].principal()
    }

    pub fn c(&self) -> Result<&Table, SystemError> {
        self.c.as_ref().ok_or_else(|| SystemError::MissingC("no c table".into()))
    }

    /// Fills `c` by solving (A1) if absent.
    pub fn ensure_c(&mut self) -> Result<(), SystemError> {
        if self.c.is_some() {
            return Ok(());
        }
        match solve_structure_constants(self) {
            StructureSolve::Unique(c) | StructureSolve::NonUnique { table: c, .. } => {
                self.c = Some(c);
                Ok(())
            }
            StructureSolve::NoSolution { pair, row } => Err(SystemError::MissingC(format!(
                "bracket of ({},{}) leaves the span at coefficient row {row}",
                pair.0 + 1,
                pair.1 + 1
            ))),
        }
    }

    /// Fills `d`, `e` from (A3) if absent.
    pub fn ensure_a3(&mut self) -> Result<(), SystemError> {
        if self.d.is_some() && self.e.is_some() {
            return Ok(());
        }
        match check_a3(self) {
            A3Outcome::InSpan { d, e, .. } => {
                self.d = Some(d);
                self.e = Some(e);
                Ok(())
            }
            A3Outcome::NotInSpan { pair, .. } => Err(SystemError::MissingA3(format!(
                "[p_{}, conj p_{}] is not in the span",
                pair.0 + 1,
                pair.1 + 1
            ))),
        }
    }
}

pub(crate) fn check_table_shape(t: &Table, r: usize, name: &str) -> Result<(), SystemError> {
    let ok = t.len() == r && t.iter().all(|row| row.len() == r && row.iter().all(|v| v.len() == r));
    if ok {
        Ok(())
    } else {
        Err(SystemError::Shape(format!("table {name} must be {r}×{r}×{r}")))
    }
}

pub(crate) fn check_antisymmetric(c: &Table) -> Result<(), SystemError> {
    let r = c.len();
    for j in 0..r {
        for k in j..r {
            for l in 0..r {
                if c[j][k][l] != -&c[k][j][l] {
                    return Err(SystemError::NotAntisymmetric { j: j + 1, k: k + 1, l: l + 1 });
                }
            }
        }
    }
    Ok(())
}

/// Outcome of one assumption check, serialized into CLI reports.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckReport {
    pub id: String,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<Witness>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Witness {
    /// 1-based index tuple with a residual printed in the input grammar.
    Indices { indices: Vec<usize>, residual: String },
    Point { point: Vec<f64>, detail: String },
}

impl CheckReport {
    pub fn pass(id: &str) -> Self {
        Self { id: id.into(), pass: true, witness: None, notes: Vec::new() }
    }

    pub fn fail(id: &str, witness: Witness) -> Self {
        Self { id: id.into(), pass: false, witness: Some(witness), notes: Vec::new() }
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.notes.push(note.into());
        self
    }
}

/// Prints a first-order operator as `a1 ∂1 + … + a0`.
pub fn format_op(op: &DiffOp, names: &[String]) -> String {
    let mut parts = Vec::new();
    for (v, c) in op.a.iter().enumerate() {
        if !c.is_zero() {
            parts.push(format!("({})∂{}", c.display(names), v + 1));
        }
    }
    if !op.a0.is_zero() {
        parts.push(format!("({})", op.a0.display(names)));
    }
    if parts.is_empty() {
        "0".into()
    } else {
        parts.join(" + ")
    }
}
