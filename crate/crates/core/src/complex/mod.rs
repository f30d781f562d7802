//! The compatibility complex `𝒫₁, …, 𝒫_r` of an involutive system, its
//! formal adjoints, and exact verification of `𝒫_{q+1} ∘ 𝒫_q = 0`.

pub mod certificate;
pub mod decomposition;

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::algebra::{GaussRat, RatFun};
use crate::diffop::DiffOp;
use crate::multiindex::{enumerate, perm_sign, position_sign, Cochain, MultiIndex};
use crate::system::{OperatorSystem, Table};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ComplexError {
    #[error("level q = {q} outside 1..={r}")]
    LevelOutOfRange { q: usize, r: usize },
    #[error("expected a cochain of degree {expected}, got {got}")]
    DegreeMismatch { expected: usize, got: usize },
    #[error("structure constants c are required")]
    MissingC,
    #[error("composition nonzero: target {k}, source {i}, coefficient {coefficient} = {value}")]
    CompositionNonzero { k: MultiIndex, i: MultiIndex, coefficient: String, value: String },
    #[error("adjoint mismatch at row {i}, column {j}: expected {expected}, found {found}")]
    AdjointMismatch { i: MultiIndex, j: MultiIndex, expected: String, found: String },
}

fn table(sys: &OperatorSystem) -> Result<&Table, ComplexError> {
    sys.c.as_ref().ok_or(ComplexError::MissingC)
}

fn check_level(sys: &OperatorSystem, q: usize) -> Result<(), ComplexError> {
    if q == 0 || q > sys.r {
        return Err(ComplexError::LevelOutOfRange { q, r: sys.r });
    }
    Ok(())
}

fn signed(f: RatFun, sign: i64) -> RatFun {
    if sign < 0 {
        -f
    } else {
        f
    }
}

/// Entries of `J ∖ {m, n}` in order, as a tuple.
fn remove2(j: &MultiIndex, m: usize, n: usize) -> Vec<usize> {
    j.entries().iter().copied().filter(|&x| x != m && x != n).collect()
}

/// `sgn(J over mn·(J∖{m,n}))`.
fn pair_sign(j: &MultiIndex, m: usize, n: usize) -> i64 {
    let mut bottom = vec![m, n];
    bottom.extend(remove2(j, m, n));
    perm_sign(j.entries(), &bottom).expect("m, n in J")
}

/// `(𝒫_q f)_J` for one strictly increasing `J` with `|J| = q`.
pub fn apply_p_component(sys: &OperatorSystem, c: &Table, f: &Cochain, jj: &MultiIndex) -> RatFun {
    let n = sys.n;
    let mut acc = RatFun::zero(n);
    for &j in jj.entries() {
        let rest = jj.without(j);
        let g = f.get(&rest);
        if !g.is_zero() {
            acc = &acc + &signed(sys.ops[j - 1].apply(&g), position_sign(j, &rest));
        }
    }
    let e = jj.entries();
    for a in 0..e.len() {
        for b in a + 1..e.len() {
            let (m, nn) = (e[a], e[b]);
            let sg = pair_sign(jj, m, nn);
            let rest = remove2(jj, m, nn);
            for s in 1..=sys.r {
                let cs = &c[m - 1][nn - 1][s - 1];
                if cs.is_zero() {
                    continue;
                }
                let mut tuple = vec![s];
                tuple.extend_from_slice(&rest);
                let g = f.antisym_get(&tuple);
                if !g.is_zero() {
                    acc = &acc - &signed(cs * &g, sg);
                }
            }
        }
    }
    acc
}

/// `𝒫_q f` for a cochain `f` of degree `q − 1`; `𝒫_{r+1} = 0`.
pub fn apply_p(sys: &OperatorSystem, q: usize, f: &Cochain) -> Result<Cochain, ComplexError> {
    if f.q() + 1 != q {
        return Err(ComplexError::DegreeMismatch { expected: q.saturating_sub(1), got: f.q() });
    }
    if q == sys.r + 1 {
        return Ok(Cochain::zero(sys.r, sys.r, sys.n));
    }
    check_level(sys, q)?;
    let c = table(sys)?;
    let mut out = Cochain::zero(q, sys.r, sys.n);
    for jj in enumerate(sys.r, q) {
        let v = apply_p_component(sys, c, f, &jj);
        out.set(jj, v);
    }
    Ok(out)
}

/// `(ᵗ𝒫_q f)_I` for one strictly increasing `I` with `|I| = q − 1`.
pub fn apply_pt_component(sys: &OperatorSystem, c: &Table, f: &Cochain, ii: &MultiIndex) -> RatFun {
    let n = sys.n;
    let mut acc = RatFun::zero(n);
    for j in 1..=sys.r {
        if ii.contains(j) {
            continue;
        }
        let mut tuple = vec![j];
        tuple.extend_from_slice(ii.entries());
        let g = f.antisym_get(&tuple);
        if !g.is_zero() {
            acc = &acc + &sys.ops[j - 1].formal_adjoint().apply(&g);
        }
    }
    for &s in ii.entries() {
        let rest = ii.without(s);
        let s_sign = position_sign(s, &rest);
        for m in 1..=sys.r {
            if rest.contains(m) {
                continue;
            }
            for nn in m + 1..=sys.r {
                if rest.contains(nn) {
                    continue;
                }
                let cs = &c[m - 1][nn - 1][s - 1];
                if cs.is_zero() {
                    continue;
                }
                let mut top = rest.entries().to_vec();
                top.extend([m, nn]);
                let mut bottom = vec![m, nn];
                bottom.extend_from_slice(rest.entries());
                let sg = perm_sign(&top, &bottom).expect("distinct entries");
                let g = f.antisym_get(&top);
                if !g.is_zero() {
                    acc = &acc - &signed(&cs.conj() * &g, s_sign * sg);
                }
            }
        }
    }
    acc
}

/// `ᵗ𝒫_q f` for a cochain `f` of degree `q`.
pub fn apply_pt(sys: &OperatorSystem, q: usize, f: &Cochain) -> Result<Cochain, ComplexError> {
    check_level(sys, q)?;
    if f.q() != q {
        return Err(ComplexError::DegreeMismatch { expected: q, got: f.q() });
    }
    let c = table(sys)?;
    let mut out = Cochain::zero(q - 1, sys.r, sys.n);
    for ii in enumerate(sys.r, q - 1) {
        let v = apply_pt_component(sys, c, f, &ii);
        out.set(ii, v);
    }
    Ok(out)
}

/// Matrix of first-order operators: `rows[J][I]` maps component `I` of
/// the source to component `J` of the target. Absent entries are zero.
#[derive(Clone, Debug, PartialEq)]
pub struct LevelOperator {
    pub q: usize,
    pub source_degree: usize,
    pub target_degree: usize,
    pub rows: BTreeMap<MultiIndex, BTreeMap<MultiIndex, DiffOp>>,
}

impl LevelOperator {
    pub fn entry(&self, row: &MultiIndex, col: &MultiIndex) -> Option<&DiffOp> {
        self.rows.get(row).and_then(|r| r.get(col))
    }

    pub fn apply(&self, f: &Cochain, r: usize) -> Cochain {
        assert_eq!(f.q(), self.source_degree);
        let mut out = Cochain::zero(self.target_degree, r, f.nvars());
        for (row, cols) in &self.rows {
            let mut acc = RatFun::zero(f.nvars());
            for (col, op) in cols {
                let g = f.get(col);
                if !g.is_zero() {
                    acc = &acc + &op.apply(&g);
                }
            }
            out.set(row.clone(), acc);
        }
        out
    }

    /// Transpose with the formal adjoint taken entrywise.
    pub fn mechanical_adjoint(&self) -> LevelOperator {
        let mut rows: BTreeMap<MultiIndex, BTreeMap<MultiIndex, DiffOp>> = BTreeMap::new();
        for (row, cols) in &self.rows {
            for (col, op) in cols {
                rows.entry(col.clone()).or_default().insert(row.clone(), op.formal_adjoint());
            }
        }
        LevelOperator { q: self.q, source_degree: self.target_degree, target_degree: self.source_degree, rows }
    }

    fn insert(&mut self, row: &MultiIndex, col: MultiIndex, op: DiffOp) {
        let cols = self.rows.entry(row.clone()).or_default();
        let updated = match cols.remove(&col) {
            Some(prev) => &prev + &op,
            None => op,
        };
        if !updated.is_zero() {
            cols.insert(col, updated);
        }
        if cols.is_empty() {
            self.rows.remove(row);
        }
    }
}

/// Explicit matrix of `𝒫_q`.
pub fn build_matrix(sys: &OperatorSystem, q: usize) -> Result<LevelOperator, ComplexError> {
    check_level(sys, q)?;
    let c = table(sys)?;
    let mut m = LevelOperator { q, source_degree: q - 1, target_degree: q, rows: BTreeMap::new() };
    for jj in enumerate(sys.r, q) {
        for &j in jj.entries() {
            let rest = jj.without(j);
            let op = sys.ops[j - 1].clone();
            let op = if position_sign(j, &rest) < 0 { -&op } else { op };
            m.insert(&jj, rest, op);
        }
        let e = jj.entries();
        for a in 0..e.len() {
            for b in a + 1..e.len() {
                let (mm, nn) = (e[a], e[b]);
                let sg = pair_sign(&jj, mm, nn);
                let rest = remove2(&jj, mm, nn);
                for s in 1..=sys.r {
                    let cs = &c[mm - 1][nn - 1][s - 1];
                    if cs.is_zero() || rest.contains(&s) {
                        continue;
                    }
                    let mut tuple = vec![s];
                    tuple.extend_from_slice(&rest);
                    let col = MultiIndex::sorted(&tuple).unwrap();
                    let inner = perm_sign(col.entries(), &tuple).unwrap();
                    let coef = signed(cs.clone(), -sg * inner);
                    m.insert(&jj, col, DiffOp::multiplication(coef));
                }
            }
        }
    }
    Ok(m)
}

/// Recovers the first-order operator `g ↦ L(g)` from its values on `1` and
/// the coordinate functions.
pub fn probe_first_order(n: usize, l: impl Fn(&RatFun) -> RatFun) -> DiffOp {
    let b0 = l(&RatFun::one(n));
    let a = (0..n)
        .map(|mu| {
            let x = RatFun::var(n, mu);
            &l(&x) - &(&x * &b0)
        })
        .collect();
    DiffOp { a, a0: b0 }
}

/// The matrix realizing `ᵗ𝒫_q` as computed by `apply_pt`, extracted by
/// probing with `1` and `x_μ` in each source component.
pub fn adjoint_matrix(sys: &OperatorSystem, q: usize) -> Result<LevelOperator, ComplexError> {
    check_level(sys, q)?;
    let c = table(sys)?;
    let sources = enumerate(sys.r, q);
    let targets = enumerate(sys.r, q - 1);
    let entries: Vec<(MultiIndex, MultiIndex, DiffOp)> = targets
        .par_iter()
        .flat_map_iter(|ii| {
            sources.iter().map(move |jj| {
                let op = probe_first_order(sys.n, |g| {
                    let mut f = Cochain::zero(q, sys.r, sys.n);
                    f.set(jj.clone(), g.clone());
                    apply_pt_component(sys, c, &f, ii)
                });
                (ii.clone(), jj.clone(), op)
            })
        })
        .collect();
    let mut m = LevelOperator { q, source_degree: q, target_degree: q - 1, rows: BTreeMap::new() };
    for (ii, jj, op) in entries {
        if !op.is_zero() {
            m.insert(&ii, jj, op);
        }
    }
    Ok(m)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AdjointProof {
    pub q: usize,
    pub entries_compared: usize,
}

/// Exact entrywise equality of the mechanical adjoint of `build_matrix` and
/// the matrix realized by `apply_pt`.
pub fn verify_adjoint(sys: &OperatorSystem, q: usize) -> Result<AdjointProof, ComplexError> {
    let mech = build_matrix(sys, q)?.mechanical_adjoint();
    let formula = adjoint_matrix(sys, q)?;
    let zero = DiffOp::zero(sys.n);
    let mut compared = 0;
    for ii in enumerate(sys.r, q - 1) {
        for jj in enumerate(sys.r, q) {
            let a = mech.entry(&ii, &jj).unwrap_or(&zero);
            let b = formula.entry(&ii, &jj).unwrap_or(&zero);
            compared += 1;
            if a != b {
                return Err(ComplexError::AdjointMismatch {
                    i: ii,
                    j: jj,
                    expected: crate::system::format_op(a, &sys.varnames),
                    found: crate::system::format_op(b, &sys.varnames),
                });
            }
        }
    }
    Ok(AdjointProof { q, entries_compared: compared })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ComplexProof {
    pub q: usize,
    /// Source components probed.
    pub sources: usize,
    /// Target components checked per source.
    pub targets: usize,
    /// Recovered coefficients, all exactly zero.
    pub coefficients_checked: usize,
    /// True when `𝒫_{q+1} = 0` makes the statement trivial.
    pub trivial: bool,
}

fn probes(n: usize) -> Vec<(String, Vec<usize>)> {
    let mut out = vec![("1".to_string(), vec![])];
    for mu in 0..n {
        out.push((format!("x{}", mu + 1), vec![mu]));
    }
    for mu in 0..n {
        for nu in mu..n {
            out.push((format!("x{}x{}", mu + 1, nu + 1), vec![mu, nu]));
        }
    }
    out
}

/// Proves `𝒫_{q+1} ∘ 𝒫_q = 0` by recovering every coefficient of each
/// second-order entry from monomial probes and checking it is zero.
pub fn verify_complex(sys: &OperatorSystem, q: usize) -> Result<ComplexProof, ComplexError> {
    check_level(sys, q)?;
    table(sys)?;
    let (n, r) = (sys.n, sys.r);
    let sources = enumerate(r, q - 1);
    if q == r {
        return Ok(ComplexProof { q, sources: sources.len(), targets: 0, coefficients_checked: 0, trivial: true });
    }
    let targets = enumerate(r, q + 1);
    let probe_list = probes(n);
    let results: Vec<Result<usize, ComplexError>> = sources
        .par_iter()
        .map(|ii| {
            // values[p][K] = (𝒫_{q+1} 𝒫_q f)_K for f = probe p in slot I.
            let mut values: Vec<Cochain> = Vec::with_capacity(probe_list.len());
            for (_, vars) in &probe_list {
                let mut g = RatFun::one(n);
                for &v in vars {
                    g = &g * &RatFun::var(n, v);
                }
                let mut f = Cochain::zero(q - 1, r, n);
                f.set(ii.clone(), g);
                let once = apply_p(sys, q, &f)?;
                values.push(apply_p(sys, q + 1, &once)?);
            }
            let mut checked = 0;
            for kk in &targets {
                let l = |p: usize| values[p].get(kk);
                let b0 = l(0);
                let b1: Vec<RatFun> = (0..n).map(|mu| &l(1 + mu) - &(&RatFun::var(n, mu) * &b0)).collect();
                let mut witness = |label: String, v: &RatFun| -> Result<(), ComplexError> {
                    checked += 1;
                    if v.is_zero() {
                        Ok(())
                    } else {
                        Err(ComplexError::CompositionNonzero {
                            k: kk.clone(),
                            i: ii.clone(),
                            coefficient: label,
                            value: v.display(&sys.varnames).to_string(),
                        })
                    }
                };
                witness("b0".into(), &b0)?;
                for (mu, b) in b1.iter().enumerate() {
                    witness(format!("b{}", mu + 1), b)?;
                }
                let mut p = 1 + n;
                for mu in 0..n {
                    for nu in mu..n {
                        let xm = RatFun::var(n, mu);
                        let xn = RatFun::var(n, nu);
                        let mut v = l(p);
                        v = &v - &(&xn * &b1[mu]);
                        v = &v - &(&xm * &b1[nu]);
                        v = &v - &(&(&xm * &xn) * &b0);
                        if mu == nu {
                            v = v.scale(&GaussRat::from_frac(1, 2));
                        }
                        witness(format!("b{}{}", mu + 1, nu + 1), &v)?;
                        p += 1;
                    }
                }
            }
            Ok(checked)
        })
        .collect();
    let mut total = 0;
    for r in results {
        total += r?;
    }
    Ok(ComplexProof { q, sources: sources.len(), targets: targets.len(), coefficients_checked: total, trivial: false })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{default_names, parse_ratfun};
    use crate::system::builtin::{derham, dolbeault};

    fn rf(n: usize, s: &str) -> RatFun {
        parse_ratfun(s, &default_names(n)).unwrap()
    }

    fn mi(v: &[usize]) -> MultiIndex {
        MultiIndex::new(v.to_vec()).unwrap()
    }

    #[test]
    fn level_one_is_the_tuple_of_operators() {
        let sys = derham(3).unwrap();
        let f = Cochain::scalar(3, rf(3, "x1^2 x2 + x3"));
        let g = apply_p(&sys, 1, &f).unwrap();
        assert_eq!(g.get(&mi(&[1])), rf(3, "2 x1 x2"));
        assert_eq!(g.get(&mi(&[2])), rf(3, "x1^2"));
        assert_eq!(g.get(&mi(&[3])), rf(3, "1"));
    }

    #[test]
    fn derham_level_two_example() {
        let sys = derham(3).unwrap();
        let mut f = Cochain::zero(1, 3, 3);
        f.set(mi(&[1]), rf(3, "x2"));
        let g = apply_p(&sys, 2, &f).unwrap();
        assert_eq!(g.get(&mi(&[1, 2])), rf(3, "-1"));
        assert!(g.get(&mi(&[1, 3])).is_zero());
        assert!(g.get(&mi(&[2, 3])).is_zero());
    }

    #[test]
    fn derham_top_level_matrix() {
        let sys = derham(3).unwrap();
        let m = build_matrix(&sys, 3).unwrap();
        let row = mi(&[1, 2, 3]);
        assert_eq!(m.entry(&row, &mi(&[2, 3])), Some(&DiffOp::partial(3, 0)));
        assert_eq!(m.entry(&row, &mi(&[1, 3])), Some(&-&DiffOp::partial(3, 1)));
        assert_eq!(m.entry(&row, &mi(&[1, 2])), Some(&DiffOp::partial(3, 2)));
        let m1 = build_matrix(&sys, 1).unwrap();
        for j in 1..=3 {
            assert_eq!(m1.entry(&mi(&[j]), &MultiIndex::empty()), Some(&DiffOp::partial(3, j - 1)));
        }
    }

    #[test]
    fn derham_adjoint_top_level() {
        let sys = derham(2).unwrap();
        let mut f = Cochain::zero(2, 2, 2);
        f.set(mi(&[1, 2]), rf(2, "x1"));
        let g = apply_pt(&sys, 2, &f).unwrap();
        // ᵗ∂ = −∂: component 1 is ᵗP₂ f₂₁ = ∂₂x₁ = 0, component 2 is ᵗP₁ f₁₂ = −1.
        assert!(g.get(&mi(&[1])).is_zero());
        assert_eq!(g.get(&mi(&[2])), rf(2, "-1"));
    }

    #[test]
    fn builtins_form_complexes() {
        let sys = derham(3).unwrap();
        for q in 1..=3 {
            assert!(verify_complex(&sys, q).is_ok());
            assert!(verify_adjoint(&sys, q).is_ok());
        }
        let sys = dolbeault(2).unwrap();
        for q in 1..=2 {
            assert!(verify_complex(&sys, q).is_ok());
            assert!(verify_adjoint(&sys, q).is_ok());
        }
    }

    #[test]
    fn corrupted_structure_constants_are_caught() {
        let mut sys = derham(3).unwrap();
        let c = sys.c.as_mut().unwrap();
        c[0][1][2] = rf(3, "1");
        c[1][0][2] = rf(3, "-1");
        match verify_complex(&sys, 1) {
            Err(ComplexError::CompositionNonzero { k, i, .. }) => {
                assert_eq!(k, mi(&[1, 2]));
                assert_eq!(i, MultiIndex::empty());
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn gauge_systems_pass_both_proofs() {
        use crate::system::random_involutive;
        for seed in 0..3 {
            let sys = random_involutive(seed, 4, 3, 2);
            for q in 1..=3 {
                verify_complex(&sys, q).unwrap();
                verify_adjoint(&sys, q).unwrap();
            }
        }
    }

    #[test]
    fn matrix_action_matches_apply_p() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let sys = crate::system::random_involutive(5, 3, 3, 2);
        for q in 1..=3 {
            let m = build_matrix(&sys, q).unwrap();
            for _ in 0..20 {
                let f = certificate::random_cochain(&mut rng, q - 1, 3, 3, 2);
                assert_eq!(m.apply(&f, 3), apply_p(&sys, q, &f).unwrap());
            }
        }
    }

    #[test]
    fn degree_checks() {
        let sys = derham(2).unwrap();
        assert!(matches!(apply_p(&sys, 2, &Cochain::zero(0, 2, 2)), Err(ComplexError::DegreeMismatch { .. })));
        assert!(matches!(build_matrix(&sys, 3), Err(ComplexError::LevelOutOfRange { .. })));
        assert!(apply_p(&sys, 3, &Cochain::zero(2, 2, 2)).unwrap().is_zero());
    }
}
