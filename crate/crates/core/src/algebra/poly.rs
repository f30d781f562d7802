use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;
use num_traits::{One, Zero};

use super::GaussRat;

/// Largest number of real variables a polynomial may carry.
pub const MAX_VARS: usize = 8;
/// Per-variable exponent bound.
pub const DEGREE_BOUND: u32 = 32;

/// Dense exponent vector packed one byte per variable, variable 0 in the most
/// significant byte, so integer order is lexicographic order with x₁ > x₂ > ….
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Default)]
pub struct Monomial(u64);

impl Monomial {
    pub const ONE: Monomial = Monomial(0);

    fn shift(v: usize) -> u32 {
        8 * (MAX_VARS - 1 - v) as u32
    }

    pub fn from_exponents(exps: &[u32]) -> Self {
        assert!(exps.len() <= MAX_VARS, "at most {MAX_VARS} variables");
        let mut packed = 0u64;
        for (v, &e) in exps.iter().enumerate() {
            assert!(e <= DEGREE_BOUND, "exponent {e} exceeds degree bound {DEGREE_BOUND}");
            packed |= (e as u64) << Self::shift(v);
        }
        Monomial(packed)
    }

    pub fn var(v: usize) -> Self {
        Monomial(1u64 << Self::shift(v))
    }

    pub fn exp(self, v: usize) -> u32 {
        ((self.0 >> Self::shift(v)) & 0xff) as u32
    }

    pub fn exponents(self, nvars: usize) -> Vec<u32> {
        (0..nvars).map(|v| self.exp(v)).collect()
    }

    pub fn total_degree(self) -> u32 {
        self.0.to_be_bytes().iter().map(|&b| b as u32).sum()
    }

    pub fn is_one(self) -> bool {
        self.0 == 0
    }

    /// Product; `None` if a variable would exceed the degree bound.
    pub fn checked_mul(self, other: Monomial) -> Option<Monomial> {
        let a = self.0.to_be_bytes();
        let b = other.0.to_be_bytes();
        let mut out = [0u8; 8];
        for k in 0..8 {
            let s = a[k] as u32 + b[k] as u32;
            if s > DEGREE_BOUND {
                return None;
            }
            out[k] = s as u8;
        }
        Some(Monomial(u64::from_be_bytes(out)))
    }

    pub fn divides(self, other: Monomial) -> bool {
        let a = self.0.to_be_bytes();
        let b = other.0.to_be_bytes();
        a.iter().zip(b.iter()).all(|(x, y)| x <= y)
    }

    /// `other / self`, assuming `self.divides(other)`.
    pub fn quotient_of(self, other: Monomial) -> Monomial {
        debug_assert!(self.divides(other));
        Monomial(other.0 - self.0)
    }

    /// The monomial with the exponent of `v` set to zero.
    pub fn without(self, v: usize) -> Monomial {
        Monomial(self.0 & !(0xffu64 << Self::shift(v)))
    }

    pub fn with_exp(self, v: usize, e: u32) -> Monomial {
        assert!(e <= DEGREE_BOUND);
        Monomial(self.without(v).0 | ((e as u64) << Self::shift(v)))
    }
}

/// Sparse multivariate polynomial over ℚ(i) in `nvars` real variables.
///
/// Terms are sorted by descending lexicographic monomial order and carry no
/// zero coefficients, so structural equality is polynomial equality.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct Poly {
    nvars: usize,
    terms: Vec<(Monomial, GaussRat)>,
}

impl Poly {
    pub fn zero(nvars: usize) -> Self {
        assert!(nvars <= MAX_VARS, "at most {MAX_VARS} variables");
        Self { nvars, terms: Vec::new() }
    }

    pub fn one(nvars: usize) -> Self {
        Self::constant(nvars, GaussRat::one())
    }

    pub fn constant(nvars: usize, c: GaussRat) -> Self {
        Self::term(nvars, Monomial::ONE, c)
    }

    pub fn term(nvars: usize, m: Monomial, c: GaussRat) -> Self {
        let mut p = Self::zero(nvars);
        if !c.is_zero() {
            p.terms.push((m, c));
        }
        p
    }

    /// The coordinate function x_{v+1} (`v` is 0-based).
    pub fn var(nvars: usize, v: usize) -> Self {
        assert!(v < nvars);
        Self::term(nvars, Monomial::var(v), GaussRat::one())
    }

    /// Builds from arbitrary (possibly repeated, possibly zero) terms.
    pub fn from_terms(nvars: usize, terms: impl IntoIterator<Item = (Monomial, GaussRat)>) -> Self {
        let mut acc: BTreeMap<Monomial, GaussRat> = BTreeMap::new();
        for (m, c) in terms {
            *acc.entry(m).or_insert_with(GaussRat::zero) += &c;
        }
        Self::from_map(nvars, acc)
    }

    fn from_map(nvars: usize, acc: BTreeMap<Monomial, GaussRat>) -> Self {
        let terms = acc.into_iter().rev().filter(|(_, c)| !c.is_zero()).collect();
        Self { nvars, terms }
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn terms(&self) -> &[(Monomial, GaussRat)] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_constant(&self) -> bool {
        self.terms.is_empty() || (self.terms.len() == 1 && self.terms[0].0.is_one())
    }

    pub fn is_one(&self) -> bool {
        self.terms.len() == 1 && self.terms[0].0.is_one() && self.terms[0].1.is_one()
    }

    pub fn constant_value(&self) -> Option<GaussRat> {
        match self.terms.as_slice() {
            [] => Some(GaussRat::zero()),
            [(m, c)] if m.is_one() => Some(c.clone()),
            _ => None,
        }
    }

    /// Lexicographically leading term.
    pub fn leading(&self) -> Option<&(Monomial, GaussRat)> {
        self.terms.first()
    }

    pub fn leading_coeff(&self) -> Option<&GaussRat> {
        self.terms.first().map(|(_, c)| c)
    }

    pub fn total_degree(&self) -> u32 {
        self.terms.iter().map(|(m, _)| m.total_degree()).max().unwrap_or(0)
    }

    pub fn degree_in(&self, v: usize) -> u32 {
        self.terms.iter().map(|(m, _)| m.exp(v)).max().unwrap_or(0)
    }

    /// Bitmask of variables that occur.
    pub fn support_vars(&self) -> u32 {
        let mut mask = 0;
        for (m, _) in &self.terms {
            for v in 0..self.nvars {
                if m.exp(v) > 0 {
                    mask |= 1 << v;
                }
            }
        }
        mask
    }

    pub fn is_real(&self) -> bool {
        self.terms.iter().all(|(_, c)| c.is_real())
    }

    pub fn scale(&self, c: &GaussRat) -> Poly {
        if c.is_zero() {
            return Poly::zero(self.nvars);
        }
        Poly {
            nvars: self.nvars,
            terms: self.terms.iter().map(|(m, a)| (*m, a * c)).collect(),
        }
    }

    /// Product, or `None` if some variable would exceed the degree bound.
    pub fn try_mul(&self, other: &Poly) -> Option<Poly> {
        let fits = (0..self.nvars).all(|v| self.degree_in(v) + other.degree_in(v) <= DEGREE_BOUND);
        fits.then(|| self * other)
    }

    pub fn mul_monomial(&self, m: Monomial) -> Poly {
        Poly {
            nvars: self.nvars,
            terms: self
                .terms
                .iter()
                .map(|(t, a)| (t.checked_mul(m).expect("degree bound exceeded"), a.clone()))
                .collect(),
        }
    }

    pub fn conj(&self) -> Poly {
        Poly {
            nvars: self.nvars,
            terms: self.terms.iter().map(|(m, c)| (*m, c.conj())).collect(),
        }
    }

    /// ∂/∂x_{v+1}.
    pub fn derivative(&self, v: usize) -> Poly {
        assert!(v < self.nvars);
        // Differentiation keeps relative lex order of the surviving terms.
        let terms = self
            .terms
            .iter()
            .filter_map(|(m, c)| {
                let e = m.exp(v);
                (e > 0).then(|| (m.with_exp(v, e - 1), c * &GaussRat::from_int(e as i64)))
            })
            .collect();
        Poly { nvars: self.nvars, terms }
    }

    pub fn pow(&self, k: u32) -> Poly {
        let mut acc = Poly::one(self.nvars);
        for _ in 0..k {
            acc = &acc * self;
        }
        acc
    }

    pub fn eval_exact(&self, x: &[GaussRat]) -> GaussRat {
        assert_eq!(x.len(), self.nvars);
        let mut acc = GaussRat::zero();
        for (m, c) in &self.terms {
            let mut t = c.clone();
            for (v, xv) in x.iter().enumerate() {
                for _ in 0..m.exp(v) {
                    t = &t * xv;
                }
            }
            acc += &t;
        }
        acc
    }

    pub fn eval_f64(&self, x: &[f64]) -> Complex64 {
        assert_eq!(x.len(), self.nvars);
        let mut acc = Complex64::new(0.0, 0.0);
        for (m, c) in &self.terms {
            let mut t = 1.0;
            for (v, xv) in x.iter().enumerate() {
                t *= xv.powi(m.exp(v) as i32);
            }
            acc += c.to_complex() * t;
        }
        acc
    }

    /// Σ |coefficient|, used to scale pole tolerances.
    pub fn coeff_l1(&self) -> f64 {
        self.terms.iter().map(|(_, c)| c.abs_f64()).sum()
    }

    /// Univariate view in `v`: entry `k` is the coefficient of x_v^k.
    pub fn coeffs_in(&self, v: usize) -> Vec<Poly> {
        let d = self.degree_in(v) as usize;
        let mut buckets: Vec<BTreeMap<Monomial, GaussRat>> = vec![BTreeMap::new(); d + 1];
        for (m, c) in &self.terms {
            buckets[m.exp(v) as usize].insert(m.without(v), c.clone());
        }
        buckets.into_iter().map(|b| Poly::from_map(self.nvars, b)).collect()
    }

    /// Inverse of `coeffs_in`.
    pub fn from_coeffs_in(nvars: usize, v: usize, coeffs: &[Poly]) -> Poly {
        let mut terms = Vec::new();
        for (k, c) in coeffs.iter().enumerate() {
            for (m, a) in &c.terms {
                terms.push((m.with_exp(v, k as u32), a.clone()));
            }
        }
        Poly::from_terms(nvars, terms)
    }

    /// Exact quotient `self / d` when `d` divides `self`, otherwise `None`.
    pub fn div_exact(&self, d: &Poly) -> Option<Poly> {
        assert!(!d.is_zero(), "division by zero polynomial");
        if let Some(c) = d.constant_value() {
            return Some(self.scale(&c.inv()?));
        }
        let (lm, lc) = d.leading().unwrap().clone();
        let lc_inv = lc.inv()?;
        let mut rem = self.clone();
        let mut quot: Vec<(Monomial, GaussRat)> = Vec::new();
        while let Some((m, c)) = rem.leading().cloned() {
            if !lm.divides(m) {
                return None;
            }
            let qm = lm.quotient_of(m);
            let qc = &c * &lc_inv;
            rem = &rem - &d.mul_monomial(qm).scale(&qc);
            quot.push((qm, qc));
        }
        Some(Poly::from_terms(self.nvars, quot))
    }

    fn check_compat(&self, other: &Poly) {
        assert_eq!(self.nvars, other.nvars, "polynomials live in different variable counts");
    }

    fn merge(&self, other: &Poly, negate: bool) -> Poly {
        self.check_compat(other);
        let mut out = Vec::with_capacity(self.terms.len() + other.terms.len());
        let (mut i, mut j) = (0, 0);
        while i < self.terms.len() || j < other.terms.len() {
            let pick = match (self.terms.get(i), other.terms.get(j)) {
                (Some(a), Some(b)) => a.0.cmp(&b.0),
                (Some(_), None) => std::cmp::Ordering::Greater,
                (None, Some(_)) => std::cmp::Ordering::Less,
                (None, None) => unreachable!(),
            };
            match pick {
                std::cmp::Ordering::Greater => {
                    out.push(self.terms[i].clone());
                    i += 1;
                }
                std::cmp::Ordering::Less => {
                    let (m, c) = &other.terms[j];
                    out.push((*m, if negate { -c } else { c.clone() }));
                    j += 1;
                }
                std::cmp::Ordering::Equal => {
                    let (m, a) = &self.terms[i];
                    let b = &other.terms[j].1;
                    let s = if negate { a - b } else { a + b };
                    if !s.is_zero() {
                        out.push((*m, s));
                    }
                    i += 1;
                    j += 1;
                }
            }
        }
        Poly { nvars: self.nvars, terms: out }
    }
}

impl<'a> Add<&'a Poly> for &'a Poly {
    type Output = Poly;
    fn add(self, rhs: &Poly) -> Poly {
        self.merge(rhs, false)
    }
}

impl<'a> Sub<&'a Poly> for &'a Poly {
    type Output = Poly;
    fn sub(self, rhs: &Poly) -> Poly {
        self.merge(rhs, true)
    }
}

impl<'a> Mul<&'a Poly> for &'a Poly {
    type Output = Poly;
    fn mul(self, rhs: &Poly) -> Poly {
        self.check_compat(rhs);
        if self.is_zero() || rhs.is_zero() {
            return Poly::zero(self.nvars);
        }
        if let Some(c) = self.constant_value() {
            return rhs.scale(&c);
        }
        if let Some(c) = rhs.constant_value() {
            return self.scale(&c);
        }
        let mut acc: BTreeMap<Monomial, GaussRat> = BTreeMap::new();
        for (ma, ca) in &self.terms {
            for (mb, cb) in &rhs.terms {
                let m = ma.checked_mul(*mb).expect("degree bound exceeded");
                let p = ca * cb;
                match acc.get_mut(&m) {
                    Some(e) => *e += &p,
                    None => {
                        acc.insert(m, p);
                    }
                }
            }
        }
        Poly::from_map(self.nvars, acc)
    }
}

impl Neg for &Poly {
    type Output = Poly;
    fn neg(self) -> Poly {
        Poly {
            nvars: self.nvars,
            terms: self.terms.iter().map(|(m, c)| (*m, -c)).collect(),
        }
    }
}

macro_rules! forward_owned {
    ($tr:ident, $f:ident) => {
        impl $tr for Poly {
            type Output = Poly;
            fn $f(self, rhs: Poly) -> Poly {
                (&self).$f(&rhs)
            }
        }
    };
}
forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

/// Polynomial printer bound to a list of variable names.
pub struct PolyDisplay<'a> {
    pub poly: &'a Poly,
    pub names: &'a [String],
}

impl fmt::Display for PolyDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.poly.is_zero() {
            return write!(f, "0");
        }
        for (k, (m, c)) in self.poly.terms.iter().enumerate() {
            let neg = c.is_negative_display();
            let c = if neg { -c } else { c.clone() };
            match (k, neg) {
                (0, true) => write!(f, "-")?,
                (0, false) => {}
                (_, true) => write!(f, " - ")?,
                (_, false) => write!(f, " + ")?,
            }
            let mut first = true;
            if m.is_one() || !c.is_one() {
                write!(f, "{c}")?;
                first = false;
            }
            for v in 0..self.poly.nvars {
                let e = m.exp(v);
                if e == 0 {
                    continue;
                }
                if !first {
                    write!(f, " ")?;
                }
                first = false;
                write!(f, "{}", self.names[v])?;
                if e > 1 {
                    write!(f, "^{e}")?;
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn x(n: usize, v: usize) -> Poly {
        Poly::var(n, v)
    }

    #[test]
    fn monomial_order_is_lex() {
        let a = Monomial::from_exponents(&[1, 0]);
        let b = Monomial::from_exponents(&[0, 5]);
        assert!(a > b);
        assert_eq!(a.checked_mul(b).unwrap().exponents(2), vec![1, 5]);
        assert!(Monomial::from_exponents(&[32]).checked_mul(Monomial::var(0)).is_none());
    }

    #[test]
    fn exact_division() {
        let p = &(&x(2, 0) + &x(2, 1)) * &(&x(2, 0) - &x(2, 1));
        let q = p.div_exact(&(&x(2, 0) - &x(2, 1))).unwrap();
        assert_eq!(q, &x(2, 0) + &x(2, 1));
        assert!(p.div_exact(&x(2, 0)).is_none());
    }

    #[test]
    fn univariate_view_roundtrip() {
        let p = &(&x(3, 0) * &x(3, 2)) + &x(3, 2).pow(3);
        let cs = p.coeffs_in(2);
        assert_eq!(cs.len(), 4);
        assert_eq!(Poly::from_coeffs_in(3, 2, &cs), p);
    }

    #[test]
    fn derivative_basic() {
        let p = &x(2, 0).pow(2) * &x(2, 1);
        assert_eq!(p.derivative(0), (&x(2, 0) * &x(2, 1)).scale(&GaussRat::from_int(2)));
        assert!(Poly::one(2).derivative(0).is_zero());
    }
}
