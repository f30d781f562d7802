//! First-order differential operators `Σ a^ν ∂_ν + a⁰` with rational
//! coefficients.

use std::ops::{Add, Neg, Sub};

use crate::algebra::RatFun;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct DiffOp {
    /// Principal coefficients `a^ν`, `ν = 1..n`.
    pub a: Vec<RatFun>,
    /// Zero-order coefficient `a⁰`.
    pub a0: RatFun,
}

/// Second-order operator `Σ_{μ≤ν} a^{μν} ∂_μ∂_ν + Σ a^ν ∂_ν + a⁰`; only used
/// to expose compositions of first-order operators.
#[derive(Clone, Debug, PartialEq)]
pub struct SecondOrder {
    /// Upper-triangular coefficients, `a2[μ][ν]` for `μ ≤ ν`.
    pub a2: Vec<Vec<RatFun>>,
    pub first: DiffOp,
}

impl DiffOp {
    pub fn new(a: Vec<RatFun>, a0: RatFun) -> Self {
        assert!(a.iter().all(|c| c.nvars() == a0.nvars()), "coefficients must share nvars");
        assert_eq!(a.len(), a0.nvars(), "one principal coefficient per variable");
        Self { a, a0 }
    }

    pub fn zero(n: usize) -> Self {
        Self { a: vec![RatFun::zero(n); n], a0: RatFun::zero(n) }
    }

    /// The multiplication operator `f ↦ g f`.
    pub fn multiplication(g: RatFun) -> Self {
        let n = g.nvars();
        Self { a: vec![RatFun::zero(n); n], a0: g }
    }

    /// `∂_ν` for 0-based `v`.
    pub fn partial(n: usize, v: usize) -> Self {
        let mut op = Self::zero(n);
        op.a[v] = RatFun::one(n);
        op
    }

    pub fn nvars(&self) -> usize {
        self.a.len()
    }

    pub fn is_zero(&self) -> bool {
        self.a0.is_zero() && self.a.iter().all(|c| c.is_zero())
    }

    pub fn is_principal(&self) -> bool {
        self.a0.is_zero()
    }

    /// `Σ a^ν ∂_ν f + a⁰ f`.
    pub fn apply(&self, f: &RatFun) -> RatFun {
        let mut acc = &self.a0 * f;
        for (v, c) in self.a.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let d = f.derivative(v);
            if !d.is_zero() {
                acc = &acc + &(c * &d);
            }
        }
        acc
    }

    /// `Σ a^ν ∂_ν f`, the principal part alone.
    pub fn apply_principal(&self, f: &RatFun) -> RatFun {
        let mut acc = RatFun::zero(self.nvars());
        for (v, c) in self.a.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let d = f.derivative(v);
            if !d.is_zero() {
                acc = &acc + &(c * &d);
            }
        }
        acc
    }

    pub fn principal(&self) -> DiffOp {
        Self { a: self.a.clone(), a0: RatFun::zero(self.nvars()) }
    }

    pub fn bar(&self) -> DiffOp {
        Self { a: self.a.iter().map(RatFun::conj).collect(), a0: self.a0.conj() }
    }

    /// Left multiplication by a function: `g·P`.
    pub fn scale(&self, g: &RatFun) -> DiffOp {
        Self { a: self.a.iter().map(|c| g * c).collect(), a0: g * &self.a0 }
    }

    /// `P ∘ Q` as a second-order operator.
    pub fn compose(&self, q: &DiffOp) -> SecondOrder {
        let n = self.nvars();
        let mut a2 = vec![vec![RatFun::zero(n); n]; n];
        for mu in 0..n {
            for nu in 0..n {
                let t = &self.a[mu] * &q.a[nu];
                if t.is_zero() {
                    continue;
                }
                let (i, j) = if mu <= nu { (mu, nu) } else { (nu, mu) };
                a2[i][j] = &a2[i][j] + &t;
            }
        }
        let mut a = Vec::with_capacity(n);
        for nu in 0..n {
            let mut c = self.apply_principal(&q.a[nu]);
            c = &c + &(&self.a[nu] * &q.a0);
            c = &c + &(&self.a0 * &q.a[nu]);
            a.push(c);
        }
        let a0 = self.apply(&q.a0);
        SecondOrder { a2, first: DiffOp { a, a0 } }
    }

    /// Commutator `[P, Q] = PQ − QP`.
    pub fn bracket(&self, q: &DiffOp) -> DiffOp {
        let pq = self.compose(q);
        let qp = q.compose(self);
        let diff = pq.sub(&qp);
        assert!(
            diff.a2.iter().flatten().all(RatFun::is_zero),
            "second-order terms of a commutator must cancel"
        );
        diff.first
    }

    /// Formal adjoint for the pairing `∫ f ḡ`: principal `−ā^ν`,
    /// zero order `ā⁰ − Σ ∂_ν ā^ν`.
    pub fn formal_adjoint(&self) -> DiffOp {
        let abar: Vec<RatFun> = self.a.iter().map(RatFun::conj).collect();
        let mut a0 = self.a0.conj();
        for (v, c) in abar.iter().enumerate() {
            a0 = &a0 - &c.derivative(v);
        }
        Self { a: abar.iter().map(|c| -c).collect(), a0 }
    }

    /// Coefficients printed in the input grammar: (principal, zero order).
    pub fn to_strings(&self, names: &[String]) -> (Vec<String>, String) {
        (
            self.a.iter().map(|c| c.display(names).to_string()).collect(),
            self.a0.display(names).to_string(),
        )
    }
}

impl SecondOrder {
    pub fn apply(&self, f: &RatFun) -> RatFun {
        let n = self.first.nvars();
        let mut acc = self.first.apply(f);
        for mu in 0..n {
            for nu in mu..n {
                let c = &self.a2[mu][nu];
                if !c.is_zero() {
                    acc = &acc + &(c * &f.derivative(mu).derivative(nu));
                }
            }
        }
        acc
    }

    pub fn sub(&self, other: &SecondOrder) -> SecondOrder {
        let a2 = self
            .a2
            .iter()
            .zip(&other.a2)
            .map(|(r, s)| r.iter().zip(s).map(|(x, y)| x - y).collect())
            .collect();
        SecondOrder { a2, first: &self.first - &other.first }
    }

    pub fn is_zero(&self) -> bool {
        self.first.is_zero() && self.a2.iter().flatten().all(RatFun::is_zero)
    }
}

impl<'a> Add<&'a DiffOp> for &'a DiffOp {
    type Output = DiffOp;
    fn add(self, rhs: &DiffOp) -> DiffOp {
        DiffOp {
            a: self.a.iter().zip(&rhs.a).map(|(x, y)| x + y).collect(),
            a0: &self.a0 + &rhs.a0,
        }
    }
}

impl<'a> Sub<&'a DiffOp> for &'a DiffOp {
    type Output = DiffOp;
    fn sub(self, rhs: &DiffOp) -> DiffOp {
        DiffOp {
            a: self.a.iter().zip(&rhs.a).map(|(x, y)| x - y).collect(),
            a0: &self.a0 - &rhs.a0,
        }
    }
}

impl Neg for &DiffOp {
    type Output = DiffOp;
    fn neg(self) -> DiffOp {
        DiffOp { a: self.a.iter().map(|c| -c).collect(), a0: -&self.a0 }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{default_names, parse_ratfun};

    fn rf(n: usize, s: &str) -> RatFun {
        parse_ratfun(s, &default_names(n)).unwrap()
    }

    fn op(n: usize, a: &[&str], a0: &str) -> DiffOp {
        DiffOp::new(a.iter().map(|s| rf(n, s)).collect(), rf(n, a0))
    }

    fn lewy() -> DiffOp {
        op(3, &["1/2", "1/2i", "x2 - i x1"], "0")
    }

    #[test]
    fn apply_examples() {
        assert_eq!(op(1, &["1"], "0").apply(&rf(1, "x1^2")), rf(1, "2 x1"));
        assert_eq!(op(2, &["x2", "0"], "1").apply(&rf(2, "x1")), rf(2, "x2 + x1"));
        assert_eq!(lewy().apply(&rf(3, "x3")), rf(3, "x2 - i x1"));
    }

    #[test]
    fn principal_and_bar() {
        assert_eq!(op(1, &["1"], "1").principal(), op(1, &["1"], "0"));
        assert_eq!(op(1, &["i"], "0").bar(), op(1, &["-i"], "0"));
        let p = op(2, &["(1+i) x2", "x1"], "i x1");
        assert_eq!(p.principal().bar(), p.bar().principal());
    }

    #[test]
    fn bracket_examples() {
        let d1 = op(1, &["1"], "0");
        let x_d1 = op(1, &["x1"], "0");
        assert_eq!(d1.bracket(&x_d1), d1);
        assert!(op(2, &["1", "0"], "0").bracket(&op(2, &["0", "1"], "0")).is_zero());
        let p = lewy();
        assert_eq!(p.bracket(&p.bar()), op(3, &["0", "0", "2i"], "0"));
    }

    #[test]
    fn bracket_zero_order_part() {
        // [∂₁ + x₂, x₁∂₂] = ∂₂ − x₁
        let p = op(2, &["1", "0"], "x2");
        let q = op(2, &["0", "x1"], "0");
        let b = p.bracket(&q);
        assert_eq!(b, op(2, &["0", "1"], "-x1"));
    }

    #[test]
    fn adjoint_examples() {
        assert_eq!(op(1, &["1"], "0").formal_adjoint(), op(1, &["-1"], "0"));
        assert_eq!(op(1, &["x1"], "0").formal_adjoint(), op(1, &["-x1"], "-1"));
        let p = op(2, &["i x2", "1/(x1 + 2)"], "x1 x2");
        assert_eq!(p.formal_adjoint().formal_adjoint(), p);
    }

    #[test]
    fn composition_acts_as_product() {
        let p = op(2, &["x2", "1"], "x1");
        let q = op(2, &["i", "x1^2"], "1");
        let f = rf(2, "x1^3 x2 + x2^2");
        assert_eq!(p.compose(&q).apply(&f), p.apply(&q.apply(&f)));
    }
}
