use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use involute::algebra::{parse_ratfun, RatFun};
use involute::multiindex::MultiIndex;
use involute::solver::{GridField, GridFieldFile, GridSpec, SolverError};
use involute::system::{json_error_offset, OperatorSystem, SystemError, SystemFile};
use num_complex::Complex64;
use serde::Deserialize;
use thiserror::Error;

use crate::report::InputDigest;

/// Anything that makes a run exit with code 2.
#[derive(Debug, Error)]
pub enum InputError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    System {
        path: PathBuf,
        #[source]
        source: SystemError,
    },
    #[error("{path}: invalid JSON at byte {offset}: {message}")]
    Json { path: PathBuf, offset: usize, message: String },
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Solver(#[from] SolverError),
}

pub fn read(path: &Path, digest: &mut InputDigest) -> Result<String, InputError> {
    let text = fs::read_to_string(path).map_err(|source| InputError::Io { path: path.into(), source })?;
    digest.add(&path.display().to_string(), text.as_bytes());
    Ok(text)
}

pub fn load_system(path: &Path, digest: &mut InputDigest) -> Result<OperatorSystem, InputError> {
    let text = read(path, digest)?;
    SystemFile::parse(&text).map_err(|source| InputError::System { path: path.into(), source })
}

pub fn parse_json<T: for<'de> Deserialize<'de>>(path: &Path, text: &str) -> Result<T, InputError> {
    serde_json::from_str(text).map_err(|e| InputError::Json {
        path: path.into(),
        offset: json_error_offset(text, &e),
        message: e.to_string(),
    })
}

pub fn parse_expr(text: &str, sys: &OperatorSystem, what: &str) -> Result<RatFun, InputError> {
    parse_ratfun(text, &sys.varnames).map_err(|e| InputError::Invalid(format!("{what}: {e}")))
}

/// A grid field given either by samples or by one expression per component.
#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
pub enum FieldInput {
    Samples(GridFieldFile),
    Exprs(ExprField),
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExprField {
    pub q: usize,
    pub grid: GridSpec,
    /// Component key (`"1.2"`, `""` for q = 0) to expression.
    pub expr: BTreeMap<String, String>,
}

/// Samples `f` at every node; poles are input errors.
pub fn sample(f: &RatFun, grid: &involute::solver::Grid) -> Result<Vec<Complex64>, InputError> {
    (0..grid.len())
        .map(|k| {
            let x = grid.point(k);
            f.evaluate(&x).map_err(|_| InputError::Invalid(format!("expression has a pole at node {x:?}")))
        })
        .collect()
}

impl FieldInput {
    pub fn into_field(self, sys: &OperatorSystem) -> Result<GridField, InputError> {
        match self {
            FieldInput::Samples(file) => Ok(GridField::from_file(file, sys.r)?),
            FieldInput::Exprs(e) => {
                let grid = e.grid.to_grid()?;
                if grid.dim() != sys.n {
                    return Err(InputError::Invalid(format!("grid has {} axes, system {} variables", grid.dim(), sys.n)));
                }
                if e.q > sys.r {
                    return Err(InputError::Invalid(format!("q = {} exceeds r = {}", e.q, sys.r)));
                }
                let mut field = GridField::zeros(e.q, sys.r, &grid);
                for (key, text) in &e.expr {
                    let j = MultiIndex::from_key(key).map_err(|_| InputError::Invalid(format!("bad component key `{key}`")))?;
                    let slot = field
                        .components
                        .get_mut(&j)
                        .ok_or_else(|| InputError::Invalid(format!("`{key}` is not a {}-index in 1..={}", e.q, sys.r)))?;
                    *slot = sample(&parse_expr(text, sys, &format!("component `{key}`"))?, &grid)?;
                }
                Ok(field)
            }
        }
    }
}

pub fn load_field(path: &Path, sys: &OperatorSystem, digest: &mut InputDigest) -> Result<GridField, InputError> {
    let text = read(path, digest)?;
    parse_json::<FieldInput>(path, &text)?.into_field(sys)
}
