use serde::{Deserialize, Serialize};

use super::{check_antisymmetric, check_table_shape, OperatorSystem, SystemError, Table};
use crate::algebra::{parse_ratfun, RatFun};
use crate::diffop::DiffOp;

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OperatorFile {
    pub principal: Vec<String>,
    #[serde(default = "zero_string")]
    pub zero_order: String,
}

fn zero_string() -> String {
    "0".into()
}

/// On-disk form of an operator system; tables are indexed `[j][k][l]`
/// with 0-based indices.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemFile {
    pub n: usize,
    pub r: usize,
    pub vars: Vec<String>,
    #[serde(rename = "box", default, skip_serializing_if = "Option::is_none")]
    pub bbox: Option<Vec<[f64; 2]>>,
    pub operators: Vec<OperatorFile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<Vec<Vec<Vec<String>>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d: Option<Vec<Vec<Vec<String>>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub e: Option<Vec<Vec<Vec<String>>>>,
}

/// Byte offset of a serde_json error position in `text`.
pub fn json_error_offset(text: &str, err: &serde_json::Error) -> usize {
    let line = err.line().max(1);
    let start: usize = text.split_inclusive('\n').take(line - 1).map(str::len).sum();
    (start + err.column().saturating_sub(1)).min(text.len())
}

fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

impl SystemFile {
    pub fn parse(text: &str) -> Result<OperatorSystem, SystemError> {
        let file: SystemFile = serde_json::from_str(text).map_err(|e| SystemError::Json {
            offset: json_error_offset(text, &e),
            message: e.to_string(),
        })?;
        file.into_system()
    }

    pub fn into_system(self) -> Result<OperatorSystem, SystemError> {
        let (n, r) = (self.n, self.r);
        if n == 0 || n > crate::algebra::MAX_VARS {
            return Err(SystemError::Shape(format!("n = {n} outside 1..={}", crate::algebra::MAX_VARS)));
        }
        if self.vars.len() != n {
            return Err(SystemError::Shape(format!("expected {n} variable names, got {}", self.vars.len())));
        }
        for (i, v) in self.vars.iter().enumerate() {
            if !is_identifier(v) || v == "i" || self.vars[..i].contains(v) {
                return Err(SystemError::Shape(format!("invalid or repeated variable name `{v}`")));
            }
        }
        if self.operators.len() != r || r == 0 {
            return Err(SystemError::Shape(format!("expected {r} operators, got {}", self.operators.len())));
        }
        let vars = self.vars.clone();
        let parse = |field: String, s: &str| -> Result<RatFun, SystemError> {
            parse_ratfun(s, &vars).map_err(|source| SystemError::Parse { field, source })
        };
        let mut ops = Vec::with_capacity(r);
        for (j, op) in self.operators.iter().enumerate() {
            if op.principal.len() != n {
                return Err(SystemError::Shape(format!("operators[{j}].principal needs {n} entries")));
            }
            let a = op
                .principal
                .iter()
                .enumerate()
                .map(|(v, s)| parse(format!("operators[{j}].principal[{v}]"), s))
                .collect::<Result<Vec<_>, _>>()?;
            let a0 = parse(format!("operators[{j}].zero_order"), &op.zero_order)?;
            ops.push(DiffOp::new(a, a0));
        }
        let mut sys = OperatorSystem::new(ops)?;
        sys.varnames = vars.clone();
        if let Some(b) = &self.bbox {
            sys = sys.with_box(b.iter().map(|[lo, hi]| (*lo, *hi)).collect())?;
        }
        let table = |name: &str, t: &Option<Vec<Vec<Vec<String>>>>| -> Result<Option<Table>, SystemError> {
            let Some(t) = t else { return Ok(None) };
            let mut out = Vec::with_capacity(t.len());
            for (j, row) in t.iter().enumerate() {
                let mut orow = Vec::with_capacity(row.len());
                for (k, col) in row.iter().enumerate() {
                    let cells = col
                        .iter()
                        .enumerate()
                        .map(|(l, s)| parse(format!("{name}[{j}][{k}][{l}]"), s))
                        .collect::<Result<Vec<_>, _>>()?;
                    orow.push(cells);
                }
                out.push(orow);
            }
            check_table_shape(&out, r, name)?;
            Ok(Some(out))
        };
        sys.c = table("c", &self.c)?;
        if let Some(c) = &sys.c {
            check_antisymmetric(c)?;
        }
        sys.d = table("d", &self.d)?;
        sys.e = table("e", &self.e)?;
        Ok(sys)
    }

    pub fn from_system(sys: &OperatorSystem) -> SystemFile {
        let names = &sys.varnames;
        let table = |t: &Option<Table>| {
            t.as_ref().map(|t| {
                t.iter()
                    .map(|row| {
                        row.iter().map(|col| col.iter().map(|f| f.display(names).to_string()).collect()).collect()
                    })
                    .collect()
            })
        };
        SystemFile {
            n: sys.n,
            r: sys.r,
            vars: names.clone(),
            bbox: Some(sys.bbox.iter().map(|&(lo, hi)| [lo, hi]).collect()),
            operators: sys
                .ops
                .iter()
                .map(|op| {
                    let (principal, zero_order) = op.to_strings(names);
                    OperatorFile { principal, zero_order }
                })
                .collect(),
            c: table(&sys.c),
            d: table(&sys.d),
            e: table(&sys.e),
        }
    }

    pub fn to_json(sys: &OperatorSystem) -> String {
        serde_json::to_string_pretty(&Self::from_system(sys)).expect("serializable")
    }
}
