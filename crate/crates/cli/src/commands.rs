use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use involute::complex::certificate::{divergence_certificate, random_cochain};
use involute::complex::{verify_adjoint, verify_complex, ComplexError};
use involute::cousin::{split, verify_datum, Cover, CousinDatum, SplitOptions};
use involute::qform::{check_induced_spectrum, pconvexity_scan, qform_matrix, FormSource, QFormReport};
use involute::solver::{solve_eta, solve_level, GridField, GridFieldFile, GridSpec, SolverError};
use involute::system::{BuiltinRegistry, CheckRegistry, OperatorSystem, Params, SystemError, SystemFile};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;
use serde_json::{json, Value};

use crate::inputs::{load_field, load_system, parse_expr, parse_json, read, sample, FieldInput, InputError};
use crate::report::{CheckEntry, InputDigest, Outcome, Timings};

pub struct Ctx {
    pub seed: u64,
    pub tol: f64,
    pub digest: InputDigest,
    pub timings: Timings,
}

fn to_value<T: serde::Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("report types serialize")
}

fn write_out(path: &Path, text: &str) -> Result<(), InputError> {
    fs::write(path, text).map_err(|source| InputError::Io { path: path.into(), source })
}

/// Structure constants are solved when the file omits them; failure is a
/// failed check rather than an input error.
fn with_c(sys: &mut OperatorSystem, checks: &mut Vec<CheckEntry>) -> bool {
    match sys.ensure_c() {
        Ok(()) => true,
        Err(e) => {
            checks.push(CheckEntry::new("a1", false, json!({ "error": e.to_string() })));
            false
        }
    }
}

fn complex_failure(e: &ComplexError) -> Value {
    match e {
        ComplexError::CompositionNonzero { k, i, coefficient, value } => json!({
            "target": k.entries(), "source": i.entries(), "coefficient": coefficient, "value": value,
        }),
        ComplexError::AdjointMismatch { i, j, expected, found } => json!({
            "row": i.entries(), "column": j.entries(), "expected": expected, "found": found,
        }),
        other => json!({ "error": other.to_string() }),
    }
}

fn levels(sys: &OperatorSystem, q: Option<usize>) -> Result<Vec<usize>, InputError> {
    match q {
        Some(q) if q == 0 || q > sys.r => Err(InputError::Invalid(format!("--q {q} outside 1..={}", sys.r))),
        Some(q) => Ok(vec![q]),
        None => Ok((1..=sys.r).collect()),
    }
}

pub fn check(ctx: &mut Ctx, system: &Path, ids: Vec<&str>) -> Result<Outcome, InputError> {
    let sys = load_system(system, &mut ctx.digest)?;
    ctx.timings.lap("load");
    let registry = CheckRegistry::default();
    let ids: Vec<&str> = if ids.is_empty() { registry.ids() } else { ids };
    let mut checks = Vec::new();
    for id in ids {
        let runner = registry.get(id).ok_or_else(|| InputError::Invalid(format!("unknown check `{id}`")))?;
        let entry = match runner.run(&sys, ctx.seed) {
            Ok(rep) => {
                let mut detail = to_value(&rep);
                if let Some(obj) = detail.as_object_mut() {
                    obj.remove("id");
                    obj.remove("pass");
                }
                let detail = if detail.as_object().is_some_and(|o| o.is_empty()) { Value::Null } else { detail };
                CheckEntry::new(id, rep.pass, detail)
            }
            Err(e @ (SystemError::MissingC(_) | SystemError::MissingA3(_))) => {
                CheckEntry::new(id, false, json!({ "error": e.to_string() }))
            }
            Err(source) => return Err(InputError::System { path: system.into(), source }),
        };
        checks.push(entry);
        ctx.timings.lap(id);
    }
    Ok(Outcome { checks, results: json!({ "n": sys.n, "r": sys.r }) })
}

pub fn complex(ctx: &mut Ctx, system: &Path, q: Option<usize>, adjoint: bool) -> Result<Outcome, InputError> {
    let mut sys = load_system(system, &mut ctx.digest)?;
    let qs = levels(&sys, q)?;
    let mut checks = Vec::new();
    let mut proofs = Vec::new();
    if with_c(&mut sys, &mut checks) {
        for q in qs {
            match verify_complex(&sys, q) {
                Ok(p) => {
                    checks.push(CheckEntry::new(format!("complex-q{q}"), true, Value::Null));
                    proofs.push(to_value(&p));
                }
                Err(e) => checks.push(CheckEntry::new(format!("complex-q{q}"), false, complex_failure(&e))),
            }
            ctx.timings.lap(&format!("complex-q{q}"));
            if adjoint {
                adjoint_level(&sys, q, &mut checks, &mut proofs);
                ctx.timings.lap(&format!("adjoint-q{q}"));
            }
        }
    }
    Ok(Outcome { checks, results: json!({ "proofs": proofs }) })
}

fn adjoint_level(sys: &OperatorSystem, q: usize, checks: &mut Vec<CheckEntry>, proofs: &mut Vec<Value>) {
    match verify_adjoint(sys, q) {
        Ok(p) => {
            checks.push(CheckEntry::new(format!("adjoint-q{q}"), true, Value::Null));
            proofs.push(to_value(&p));
        }
        Err(e) => checks.push(CheckEntry::new(format!("adjoint-q{q}"), false, complex_failure(&e))),
    }
}

pub fn adjoint(ctx: &mut Ctx, system: &Path, q: Option<usize>, pairs: usize) -> Result<Outcome, InputError> {
    let mut sys = load_system(system, &mut ctx.digest)?;
    let qs = levels(&sys, q)?;
    let mut checks = Vec::new();
    let mut proofs = Vec::new();
    if with_c(&mut sys, &mut checks) {
        let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed);
        for q in qs {
            adjoint_level(&sys, q, &mut checks, &mut proofs);
            let mut failed = 0;
            for _ in 0..pairs {
                let g = random_cochain(&mut rng, q - 1, sys.r, sys.n, 2);
                let f = random_cochain(&mut rng, q, sys.r, sys.n, 2);
                match divergence_certificate(&sys, q, &g, &f) {
                    Ok(c) if c.holds() => {}
                    _ => failed += 1,
                }
            }
            checks.push(CheckEntry::new(
                format!("certificate-q{q}"),
                failed == 0,
                json!({ "pairs": pairs, "failed": failed }),
            ));
            ctx.timings.lap(&format!("adjoint-q{q}"));
        }
    }
    Ok(Outcome { checks, results: json!({ "proofs": proofs }) })
}

pub struct QFormArgs {
    pub phi: String,
    pub point: Option<Vec<f64>>,
    pub grid: usize,
    pub q: usize,
    pub source: FormSource,
}

pub fn qform(ctx: &mut Ctx, system: &Path, args: QFormArgs) -> Result<Outcome, InputError> {
    let mut sys = load_system(system, &mut ctx.digest)?;
    let phi = parse_expr(&args.phi, &sys, "--phi")?;
    if args.q == 0 || args.q > sys.r {
        return Err(InputError::Invalid(format!("--q {} outside 1..={}", args.q, sys.r)));
    }
    let mut checks = Vec::new();
    if let Err(e) = sys.ensure_a3() {
        checks.push(CheckEntry::new("a3", false, json!({ "error": e.to_string() })));
        return Ok(Outcome { checks, results: Value::Null });
    }
    let invalid = |e: involute::qform::QFormError| InputError::Invalid(e.to_string());
    let results = if let Some(x) = args.point {
        if x.len() != sys.n {
            return Err(InputError::Invalid(format!("--point needs {} coordinates", sys.n)));
        }
        let sample = qform_matrix(&sys, &phi, &x, args.source).map_err(invalid)?;
        let rep = QFormReport::from_matrix(x, &sample.h).map_err(invalid)?;
        let spectrum = check_induced_spectrum(&sample.h, args.q, 1e-9).map_err(invalid)?;
        checks.push(CheckEntry::new("psd", rep.psd, Value::Null));
        checks.push(CheckEntry::new(format!("rank-q{}", args.q), rep.rank_condition[args.q - 1], Value::Null));
        checks.push(CheckEntry::new("induced-eigenvalues", spectrum.pass, json!({ "max_diff": spectrum.max_diff })));
        json!({ "sample": rep, "induced": spectrum })
    } else {
        let scan = pconvexity_scan(&sys, &phi, &sys.bbox, args.grid, args.q, args.source).map_err(invalid)?;
        checks.push(CheckEntry::new("psd", scan.non_psd == 0, json!({ "non_psd": scan.non_psd })));
        checks.push(CheckEntry::new(format!("rank-q{}", args.q), scan.rank_condition, Value::Null));
        to_value(&scan)
    };
    ctx.timings.lap("qform");
    Ok(Outcome { checks, results })
}

pub struct SolveArgs {
    pub system: PathBuf,
    pub q: usize,
    pub rhs: PathBuf,
    pub grid: Option<usize>,
    pub weight: Option<String>,
    pub maxit: Option<usize>,
    pub out: Option<PathBuf>,
}

pub fn solve(ctx: &mut Ctx, args: SolveArgs) -> Result<Outcome, InputError> {
    let sys = load_system(&args.system, &mut ctx.digest)?;
    let text = read(&args.rhs, &mut ctx.digest)?;
    let mut input: FieldInput = parse_json(&args.rhs, &text)?;
    if let (Some(n), FieldInput::Exprs(e)) = (args.grid, &mut input) {
        e.grid.n = n;
    }
    let f = input.into_field(&sys)?;
    if args.grid.is_some_and(|n| n != f.grid.n) {
        return Err(InputError::Invalid(format!("--grid {} differs from the sampled right-hand side (N = {})", args.grid.unwrap(), f.grid.n)));
    }
    if f.q != args.q {
        return Err(InputError::Invalid(format!("right-hand side has q = {}, --q is {}", f.q, args.q)));
    }
    let phi = args.weight.as_deref().map(|w| parse_expr(w, &sys, "--weight")).transpose()?;
    ctx.timings.lap("load");
    let sol = solve_level(&sys, args.q, &f, phi.as_ref(), ctx.tol, args.maxit)?;
    ctx.timings.lap("solve");
    if let Some(out) = &args.out {
        write_out(out, &serde_json::to_string(&sol.u.to_file()).expect("field serializes"))?;
    }
    let checks = vec![
        CheckEntry::new("converged", sol.report.converged, json!({ "iterations": sol.report.iterations })),
        CheckEntry::new(
            "compatible",
            !sol.report.compatibility_warning,
            json!({ "compatibility_defect": sol.report.compatibility_defect }),
        ),
    ];
    Ok(Outcome { checks, results: to_value(&sol.report) })
}

pub fn eta(ctx: &mut Ctx, system: &Path, n: usize, out: Option<&Path>) -> Result<Outcome, InputError> {
    let mut sys = load_system(system, &mut ctx.digest)?;
    let mut checks = Vec::new();
    if !with_c(&mut sys, &mut checks) {
        return Ok(Outcome { checks, results: Value::Null });
    }
    let grid = involute::solver::Grid::new(sys.bbox.clone(), n)?;
    let sol = match solve_eta(&sys, &grid, ctx.tol) {
        Ok(s) => s,
        Err(SolverError::Incompatible { j, k, residual }) => {
            checks.push(CheckEntry::new("eta-compatible", false, json!({ "pair": [j, k], "residual": residual })));
            return Ok(Outcome { checks, results: Value::Null });
        }
        Err(e) => return Err(e.into()),
    };
    ctx.timings.lap("solve");
    if let Some(out) = out {
        write_out(out, &serde_json::to_string(&sol.u.to_file()).expect("field serializes"))?;
    }
    checks.push(CheckEntry::new("eta-compatible", true, Value::Null));
    checks.push(CheckEntry::new("converged", sol.report.converged, json!({ "iterations": sol.report.iterations })));
    Ok(Outcome { checks, results: to_value(&sol.report) })
}

/// One overlap section of a Cousin config.
#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
enum DatumInput {
    Path(PathBuf),
    Expr {
        expr: String,
    },
    Samples(GridFieldFile),
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct CousinConfig {
    system: PathBuf,
    grid: GridSpec,
    cover: Vec<Vec<[f64; 2]>>,
    /// Keys `"a-b"` with 0-based box indices `a < b`.
    datum: BTreeMap<String, DatumInput>,
    #[serde(default)]
    weight: Option<String>,
    #[serde(default = "default_datum_tol")]
    datum_tol: f64,
    #[serde(default = "default_splitting_bound")]
    splitting_bound: f64,
    #[serde(default = "default_residual_bound")]
    residual_bound: f64,
    #[serde(default = "default_glue_tol")]
    glue_tol: f64,
}

fn default_datum_tol() -> f64 {
    1e-3
}
fn default_splitting_bound() -> f64 {
    5e-3
}
fn default_residual_bound() -> f64 {
    1e-4
}
fn default_glue_tol() -> f64 {
    1e-3
}

fn pair_key(key: &str, m: usize) -> Result<(usize, usize), InputError> {
    let bad = || InputError::Invalid(format!("datum key `{key}` is not `a-b` with a < b < {m}"));
    let (a, b) = key.split_once('-').ok_or_else(bad)?;
    let (a, b): (usize, usize) = (a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?);
    if a < b && b < m {
        Ok((a, b))
    } else {
        Err(bad())
    }
}

pub fn cousin(ctx: &mut Ctx, config: &Path) -> Result<Outcome, InputError> {
    let text = read(config, &mut ctx.digest)?;
    let cfg: CousinConfig = parse_json(config, &text)?;
    let base = config.parent().unwrap_or(Path::new("."));
    let sys = load_system(&base.join(&cfg.system), &mut ctx.digest)?;
    let grid = cfg.grid.to_grid()?;
    if grid.dim() != sys.n {
        return Err(InputError::Invalid(format!("grid has {} axes, system {} variables", grid.dim(), sys.n)));
    }
    let boxes = cfg.cover.iter().map(|b| b.iter().map(|&[lo, hi]| (lo, hi)).collect()).collect();
    let cover = Cover::new(grid.clone(), boxes).map_err(|e| InputError::Invalid(e.to_string()))?;
    let mut datum = CousinDatum::default();
    for (key, input) in cfg.datum {
        let (a, b) = pair_key(&key, cover.len())?;
        let values = match input {
            DatumInput::Expr { expr } => sample(&parse_expr(&expr, &sys, &format!("datum `{key}`"))?, &grid)?,
            DatumInput::Path(p) => scalar_field(load_field(&base.join(p), &sys, &mut ctx.digest)?, &grid, &key)?,
            DatumInput::Samples(file) => scalar_field(GridField::from_file(file, sys.r)?, &grid, &key)?,
        };
        datum.insert(a, b, values);
    }
    let phi = cfg.weight.as_deref().map(|w| parse_expr(w, &sys, "weight")).transpose()?;
    ctx.timings.lap("load");

    let datum_report = verify_datum(&sys, &cover, &datum, cfg.datum_tol).map_err(|e| InputError::Invalid(e.to_string()))?;
    let mut checks = vec![CheckEntry::new("datum", datum_report.pass, to_value(&datum_report))];
    ctx.timings.lap("verify");
    if !datum_report.pass {
        return Ok(Outcome { checks, results: Value::Null });
    }
    let mut convexity = Value::Null;
    if let Some(phi) = &phi {
        let mut s = sys.clone();
        if s.ensure_a3().is_ok() {
            if let Ok(scan) = pconvexity_scan(&s, phi, &grid.bbox, 8, 1, FormSource::UseE) {
                convexity = json!({ "p_convex": scan.p_convex, "min_eigenvalue": scan.min_eigenvalue });
            }
        }
    }
    let opts = SplitOptions { solver_tol: ctx.tol, glue_tol: cfg.glue_tol, maxit: None };
    let s = match split(&sys, &cover, &datum, phi.as_ref(), opts) {
        Ok(s) => s,
        Err(e @ involute::cousin::CousinError::GlueDefect { .. }) => {
            checks.push(CheckEntry::new("glue", false, json!({ "error": e.to_string() })));
            return Ok(Outcome { checks, results: Value::Null });
        }
        Err(e) => return Err(InputError::Invalid(e.to_string())),
    };
    ctx.timings.lap("split");
    let rep = &s.report;
    let worst = rep.residual_inf.iter().copied().fold(0.0, f64::max);
    checks.push(CheckEntry::new(
        "splitting",
        rep.splitting_defect <= cfg.splitting_bound,
        json!({ "defect": rep.splitting_defect, "bound": cfg.splitting_bound }),
    ));
    checks.push(CheckEntry::new(
        "homogeneous",
        worst <= cfg.residual_bound,
        json!({ "max_residual": worst, "bound": cfg.residual_bound }),
    ));
    Ok(Outcome { checks, results: json!({ "split": rep, "pconvexity": convexity }) })
}

fn scalar_field(f: GridField, grid: &involute::solver::Grid, key: &str) -> Result<Vec<num_complex::Complex64>, InputError> {
    if f.q != 0 || f.grid != *grid {
        return Err(InputError::Invalid(format!("datum `{key}` must be a q = 0 field on the config grid")));
    }
    Ok(f.flatten())
}

pub fn builtin(ctx: &mut Ctx, name: &str, mut params: Params, out: Option<&Path>) -> Result<Outcome, InputError> {
    let registry = BuiltinRegistry::default();
    if registry.get(name).is_some_and(|b| b.params().contains(&"seed")) {
        params.insert("seed".into(), ctx.seed as i64);
    }
    ctx.digest.add("builtin", format!("{name} {params:?}").as_bytes());
    let sys = registry
        .build(name, &params)
        .map_err(|source| InputError::System { path: PathBuf::from(name), source })?;
    let text = SystemFile::to_json(&sys);
    if let Some(out) = out {
        write_out(out, &text)?;
    }
    let mut results = json!({ "name": name, "params": params, "n": sys.n, "r": sys.r });
    if out.is_none() {
        results["system"] = serde_json::from_str(&text).expect("valid JSON");
    }
    Ok(Outcome { checks: Vec::new(), results })
}
