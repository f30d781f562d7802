use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_complex::Complex64;
use num_traits::{One, Zero};

use super::gcd::{gcd, make_monic};
use super::{AlgebraError, GaussRat, Poly, PolyDisplay};

/// Element of the fraction field ℚ(i)(x₁,…,x_n), kept canonical:
/// `gcd(num, den) = 1` and the lex-leading coefficient of `den` is 1.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct RatFun {
    num: Poly,
    den: Poly,
}

impl RatFun {
    pub fn zero(nvars: usize) -> Self {
        Self { num: Poly::zero(nvars), den: Poly::one(nvars) }
    }

    pub fn one(nvars: usize) -> Self {
        Self { num: Poly::one(nvars), den: Poly::one(nvars) }
    }

    pub fn constant(nvars: usize, c: GaussRat) -> Self {
        Self::from_poly(Poly::constant(nvars, c))
    }

    pub fn from_int(nvars: usize, k: i64) -> Self {
        Self::constant(nvars, GaussRat::from_int(k))
    }

    pub fn var(nvars: usize, v: usize) -> Self {
        Self::from_poly(Poly::var(nvars, v))
    }

    pub fn from_poly(p: Poly) -> Self {
        let n = p.nvars();
        Self { num: p, den: Poly::one(n) }
    }

    /// `num/den` in canonical form; `None` when `den` is zero.
    pub fn new(num: Poly, den: Poly) -> Option<Self> {
        assert_eq!(num.nvars(), den.nvars());
        if den.is_zero() {
            return None;
        }
        Some(Self::canonical(num, den))
    }

    fn canonical(num: Poly, den: Poly) -> Self {
        let n = num.nvars();
        if num.is_zero() {
            return Self::zero(n);
        }
        if let Some(c) = den.constant_value() {
            let inv = c.inv().expect("nonzero denominator");
            return Self { num: num.scale(&inv), den: Poly::one(n) };
        }
        let g = gcd(&num, &den);
        let (num, den) = if g.is_one() {
            (num, den)
        } else {
            (num.div_exact(&g).unwrap(), den.div_exact(&g).unwrap())
        };
        let lc = den.leading_coeff().unwrap().clone();
        if lc.is_one() {
            Self { num, den }
        } else {
            let inv = lc.inv().unwrap();
            Self { num: num.scale(&inv), den: make_monic(&den) }
        }
    }

    pub fn num(&self) -> &Poly {
        &self.num
    }

    pub fn den(&self) -> &Poly {
        &self.den
    }

    pub fn nvars(&self) -> usize {
        self.num.nvars()
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.den.is_one() && self.num.is_one()
    }

    pub fn is_polynomial(&self) -> bool {
        self.den.is_one()
    }

    pub fn as_poly(&self) -> Option<&Poly> {
        self.is_polynomial().then_some(&self.num)
    }

    pub fn constant_value(&self) -> Option<GaussRat> {
        if self.is_polynomial() {
            self.num.constant_value()
        } else {
            None
        }
    }

    pub fn is_real(&self) -> bool {
        self.num.is_real() && self.den.is_real()
    }

    pub fn scale(&self, c: &GaussRat) -> RatFun {
        if c.is_zero() {
            return RatFun::zero(self.nvars());
        }
        Self { num: self.num.scale(c), den: self.den.clone() }
    }

    pub fn inv(&self) -> Option<RatFun> {
        if self.is_zero() {
            return None;
        }
        Some(Self::canonical(self.den.clone(), self.num.clone()))
    }

    /// Quotient-rule derivative ∂/∂x_{v+1}.
    pub fn derivative(&self, v: usize) -> RatFun {
        if self.is_polynomial() {
            return Self::from_poly(self.num.derivative(v));
        }
        let dn = self.num.derivative(v);
        let dd = self.den.derivative(v);
        let top = &(&dn * &self.den) - &(&self.num * &dd);
        Self::canonical(top, &self.den * &self.den)
    }

    /// Conjugates every coefficient; variables are real.
    pub fn conj(&self) -> RatFun {
        // Conjugation is a ring automorphism, so the form stays canonical.
        Self { num: self.num.conj(), den: self.den.conj() }
    }

    /// Double-precision value, with `PoleError` near zeros of the denominator.
    pub fn evaluate(&self, x: &[f64]) -> Result<Complex64, AlgebraError> {
        if x.len() != self.nvars() {
            return Err(AlgebraError::DimensionMismatch { expected: self.nvars(), got: x.len() });
        }
        let n = self.num.eval_f64(x);
        if self.is_polynomial() {
            return Ok(n);
        }
        let d = self.den.eval_f64(x);
        if d.norm() < 1e-14 * (1.0 + self.den.coeff_l1()) {
            return Err(AlgebraError::Pole { point: x.to_vec() });
        }
        Ok(n / d)
    }

    pub fn display<'a>(&'a self, names: &'a [String]) -> RatFunDisplay<'a> {
        RatFunDisplay { f: self, names }
    }

    pub fn pow(&self, k: u32) -> RatFun {
        let mut acc = RatFun::one(self.nvars());
        for _ in 0..k {
            acc = &acc * self;
        }
        acc
    }
}

impl<'a> Add<&'a RatFun> for &'a RatFun {
    type Output = RatFun;
    fn add(self, rhs: &RatFun) -> RatFun {
        if self.is_zero() {
            return rhs.clone();
        }
        if rhs.is_zero() {
            return self.clone();
        }
        if self.den == rhs.den {
            let num = &self.num + &rhs.num;
            if self.is_polynomial() {
                return RatFun::from_poly(num);
            }
            return RatFun::canonical(num, self.den.clone());
        }
        let num = &(&self.num * &rhs.den) + &(&rhs.num * &self.den);
        RatFun::canonical(num, &self.den * &rhs.den)
    }
}

impl Neg for &RatFun {
    type Output = RatFun;
    fn neg(self) -> RatFun {
        RatFun { num: -&self.num, den: self.den.clone() }
    }
}

impl Neg for RatFun {
    type Output = RatFun;
    fn neg(self) -> RatFun {
        -&self
    }
}

impl<'a> Sub<&'a RatFun> for &'a RatFun {
    type Output = RatFun;
    fn sub(self, rhs: &RatFun) -> RatFun {
        if rhs.is_zero() {
            return self.clone();
        }
        self + &(-rhs)
    }
}

impl<'a> Mul<&'a RatFun> for &'a RatFun {
    type Output = RatFun;
    fn mul(self, rhs: &RatFun) -> RatFun {
        if self.is_zero() || rhs.is_zero() {
            return RatFun::zero(self.nvars());
        }
        if self.is_polynomial() && rhs.is_polynomial() {
            return RatFun::from_poly(&self.num * &rhs.num);
        }
        RatFun::canonical(&self.num * &rhs.num, &self.den * &rhs.den)
    }
}

impl<'a> Div<&'a RatFun> for &'a RatFun {
    type Output = RatFun;
    fn div(self, rhs: &RatFun) -> RatFun {
        let inv = rhs.inv().expect("division by the zero rational function");
        self * &inv
    }
}

macro_rules! forward_owned {
    ($tr:ident, $f:ident) => {
        impl $tr for RatFun {
            type Output = RatFun;
            fn $f(self, rhs: RatFun) -> RatFun {
                (&self).$f(&rhs)
            }
        }
    };
}
forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);
forward_owned!(Div, div);

impl Zero for RatFun {
    fn zero() -> Self {
        // Only meaningful as an additive identity; prefer `RatFun::zero(n)`.
        RatFun::zero(0)
    }
    fn is_zero(&self) -> bool {
        self.num.is_zero()
    }
}

pub struct RatFunDisplay<'a> {
    f: &'a RatFun,
    names: &'a [String],
}

/// Prints `expr` or `expr/(expr)` in the input grammar.
impl fmt::Display for RatFunDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", PolyDisplay { poly: &self.f.num, names: self.names })?;
        if !self.f.den.is_one() {
            write!(f, "/({})", PolyDisplay { poly: &self.f.den, names: self.names })?;
        }
        Ok(())
    }
}

/// Default variable names `x1 … xn`.
pub fn default_names(n: usize) -> Vec<String> {
    (1..=n).map(|k| format!("x{k}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn x(v: usize) -> RatFun {
        RatFun::var(2, v)
    }
    fn k(c: i64) -> RatFun {
        RatFun::from_int(2, c)
    }

    #[test]
    fn field_examples() {
        assert_eq!(&x(0) + &x(1), RatFun::from_poly(&Poly::var(2, 0) + &Poly::var(2, 1)));
        assert!((&(&x(0) / &x(1)) * &(&x(1) / &x(0))).is_one());
        let lhs = &(&k(1) / &(&x(0) - &k(1))) + &(&k(1) / &(&x(0) + &k(1)));
        let rhs = &(&k(2) * &x(0)) / &(&(&x(0) * &x(0)) - &k(1));
        assert_eq!(lhs, rhs);
        assert!(lhs.den().leading_coeff().unwrap().is_one());
    }

    #[test]
    fn quotient_rule() {
        let f = &k(1) / &x(0);
        assert_eq!(f.derivative(0), -&(&k(1) / &(&x(0) * &x(0))));
        assert!(k(7).derivative(1).is_zero());
        let g = &(&x(0) * &x(0)) * &x(1);
        assert_eq!(g.derivative(0), &(&k(2) * &x(0)) * &x(1));
    }

    #[test]
    fn normalizes_denominator_sign_and_scale() {
        let f = RatFun::new(Poly::var(2, 1), Poly::var(2, 0).scale(&GaussRat::from_int(-3))).unwrap();
        assert!(!f.den().is_one());
        assert!(f.den().leading_coeff().unwrap().is_one());
        assert_eq!(f, &(&k(-1) * &x(1)) / &(&k(3) * &x(0)));
        assert!(RatFun::new(Poly::one(2), Poly::zero(2)).is_none());
    }

    #[test]
    fn evaluation_and_poles() {
        let f = &(&x(0) * &x(0)) + &k(1);
        assert_eq!(f.evaluate(&[2.0, 0.0]).unwrap(), Complex64::new(5.0, 0.0));
        let g = &k(1) / &x(0);
        assert!(matches!(g.evaluate(&[0.0, 1.0]), Err(AlgebraError::Pole { .. })));
        let h = RatFun::var(1, 0).scale(&(&GaussRat::from_frac(1, 2) + &GaussRat::imag_frac(1, 2)));
        assert_eq!(h.evaluate(&[3.0]).unwrap(), Complex64::new(1.5, 1.5));
    }

    #[test]
    fn conjugation() {
        let f = RatFun::var(1, 0).scale(&(&GaussRat::one() + &GaussRat::i()));
        let g = RatFun::var(1, 0).scale(&(&GaussRat::one() - &GaussRat::i()));
        assert_eq!(f.conj(), g);
        let real = &RatFun::var(1, 0) * &RatFun::var(1, 0);
        assert_eq!(real.conj(), real);
    }
}
