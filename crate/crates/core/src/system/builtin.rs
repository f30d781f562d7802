use std::collections::BTreeMap;

use super::{random_involutive, zero_table, OperatorSystem, SystemError};
use crate::algebra::{GaussRat, RatFun};
use crate::diffop::DiffOp;

/// Integer parameters of a builtin, e.g. `n = 3`.
pub type Params = BTreeMap<String, i64>;

fn param(params: &Params, key: &str, default: Option<i64>) -> Result<i64, SystemError> {
    params
        .get(key)
        .copied()
        .or(default)
        .ok_or_else(|| SystemError::BadParams(format!("missing parameter `{key}`")))
}

fn in_range(v: i64, lo: i64, hi: i64, key: &str) -> Result<usize, SystemError> {
    if (lo..=hi).contains(&v) {
        Ok(v as usize)
    } else {
        Err(SystemError::BadParams(format!("{key} = {v} outside {lo}..={hi}")))
    }
}

/// A named constructor for a family of operator systems.
pub trait SystemBuilder: Send + Sync {
    fn name(&self) -> &'static str;
    /// Parameter names accepted by `build`.
    fn params(&self) -> &'static [&'static str];
    fn build(&self, params: &Params) -> Result<OperatorSystem, SystemError>;
}

/// `P_j = ∂_j`, `j = 1…n`.
pub struct DeRham;

impl SystemBuilder for DeRham {
    fn name(&self) -> &'static str {
        "derham"
    }
    fn params(&self) -> &'static [&'static str] {
        &["n"]
    }
    fn build(&self, params: &Params) -> Result<OperatorSystem, SystemError> {
        let n = in_range(param(params, "n", None)?, 1, 8, "n")?;
        derham(n)
    }
}

pub fn derham(n: usize) -> Result<OperatorSystem, SystemError> {
    let ops = (0..n).map(|v| DiffOp::partial(n, v)).collect();
    let mut sys = OperatorSystem::new(ops)?.with_c(zero_table(n, n))?;
    sys.d = Some(zero_table(n, n));
    sys.e = Some(zero_table(n, n));
    Ok(sys)
}

/// `P_j = ½∂_{x_j} + (i/2)∂_{y_j}` with `x_j = x_{2j−1}`, `y_j = x_{2j}`.
pub struct Dolbeault;

impl SystemBuilder for Dolbeault {
    fn name(&self) -> &'static str {
        "dolbeault"
    }
    fn params(&self) -> &'static [&'static str] {
        &["m"]
    }
    fn build(&self, params: &Params) -> Result<OperatorSystem, SystemError> {
        let m = in_range(param(params, "m", None)?, 1, 4, "m")?;
        dolbeault(m)
    }
}

pub fn dolbeault(m: usize) -> Result<OperatorSystem, SystemError> {
    let n = 2 * m;
    let ops = (0..m)
        .map(|j| {
            let mut op = DiffOp::zero(n);
            op.a[2 * j] = RatFun::constant(n, GaussRat::from_frac(1, 2));
            op.a[2 * j + 1] = RatFun::constant(n, GaussRat::imag_frac(1, 2));
            op
        })
        .collect();
    let mut sys = OperatorSystem::new(ops)?.with_c(zero_table(m, n))?;
    sys.d = Some(zero_table(m, n));
    sys.e = Some(zero_table(m, n));
    Ok(sys)
}

/// The Lewy operator `∂_z̄ − iz∂_t` on ℝ³ with `z = x₁ + ix₂`, `t = x₃`.
pub struct Lewy;

impl SystemBuilder for Lewy {
    fn name(&self) -> &'static str {
        "lewy"
    }
    fn params(&self) -> &'static [&'static str] {
        &[]
    }
    fn build(&self, _params: &Params) -> Result<OperatorSystem, SystemError> {
        lewy()
    }
}

pub fn lewy() -> Result<OperatorSystem, SystemError> {
    let n = 3;
    let mut op = DiffOp::zero(n);
    op.a[0] = RatFun::constant(n, GaussRat::from_frac(1, 2));
    op.a[1] = RatFun::constant(n, GaussRat::imag_frac(1, 2));
    // −iz = x₂ − i x₁
    op.a[2] = &RatFun::var(n, 1) - &RatFun::var(n, 0).scale(&GaussRat::i());
    OperatorSystem::new(vec![op])?.with_c(zero_table(1, n))
}

/// Seeded gauge transform of commuting coordinate fields.
pub struct Gauge;

impl SystemBuilder for Gauge {
    fn name(&self) -> &'static str {
        "gauge"
    }
    fn params(&self) -> &'static [&'static str] {
        &["seed", "n", "r", "deg"]
    }
    fn build(&self, params: &Params) -> Result<OperatorSystem, SystemError> {
        let seed = param(params, "seed", Some(0))?;
        let n = in_range(param(params, "n", Some(2))?, 1, 4, "n")?;
        let r = in_range(param(params, "r", Some(n as i64))?, 1, n as i64, "r")?;
        let deg = in_range(param(params, "deg", Some(1))?, 0, 2, "deg")?;
        if seed < 0 {
            return Err(SystemError::BadParams("seed must be non-negative".into()));
        }
        Ok(random_involutive(seed as u64, n, r, deg))
    }
}

/// Builtin systems registered by name.
pub struct BuiltinRegistry {
    builders: BTreeMap<&'static str, Box<dyn SystemBuilder>>,
}

impl Default for BuiltinRegistry {
    fn default() -> Self {
        let mut reg = Self { builders: BTreeMap::new() };
        reg.register(Box::new(DeRham));
        reg.register(Box::new(Dolbeault));
        reg.register(Box::new(Lewy));
        reg.register(Box::new(Gauge));
        reg
    }
}

impl BuiltinRegistry {
    pub fn register(&mut self, builder: Box<dyn SystemBuilder>) {
        self.builders.insert(builder.name(), builder);
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.builders.keys().copied().collect()
    }

    pub fn get(&self, name: &str) -> Option<&dyn SystemBuilder> {
        self.builders.get(name).map(|b| b.as_ref())
    }

    pub fn build(&self, name: &str, params: &Params) -> Result<OperatorSystem, SystemError> {
        let b = self.get(name).ok_or_else(|| SystemError::UnknownBuiltin(name.into()))?;
        if let Some(k) = params.keys().find(|k| !b.params().contains(&k.as_str())) {
            return Err(SystemError::BadParams(format!("`{name}` takes no parameter `{k}`")));
        }
        b.build(params)
    }
}
