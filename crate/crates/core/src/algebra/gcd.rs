//! Multivariate gcd over ℚ(i) by recursive content / primitive part and
//! primitive pseudo-remainder sequences.

use num_traits::One;

use super::{GaussRat, Monomial, Poly};

/// Scales `p` so its lexicographically leading coefficient is 1.
pub fn make_monic(p: &Poly) -> Poly {
    match p.leading_coeff() {
        None => p.clone(),
        Some(c) if c.is_one() => p.clone(),
        Some(c) => p.scale(&c.inv().unwrap()),
    }
}

/// Monic greatest common divisor; `gcd(0, 0) = 0`.
pub fn gcd(a: &Poly, b: &Poly) -> Poly {
    make_monic(&gcd_raw(a, b))
}

fn gcd_raw(a: &Poly, b: &Poly) -> Poly {
    let n = a.nvars();
    if a.is_zero() {
        return b.clone();
    }
    if b.is_zero() {
        return a.clone();
    }
    if a.is_constant() || b.is_constant() {
        return Poly::one(n);
    }
    if a == b {
        return a.clone();
    }
    // Shared single-term factor shortcut: gcd of monomials.
    if a.terms().len() == 1 && b.terms().len() == 1 {
        let (ma, _) = a.terms()[0];
        let (mb, _) = b.terms()[0];
        let exps: Vec<u32> = (0..n).map(|v| ma.exp(v).min(mb.exp(v))).collect();
        return Poly::term(n, Monomial::from_exponents(&exps), GaussRat::one());
    }
    let mask = a.support_vars() | b.support_vars();
    // Main variable: the highest-index variable present.
    let v = (31 - mask.leading_zeros()) as usize;

    let (ca, pa) = content_split(a, v);
    let (cb, pb) = content_split(b, v);
    let cont = gcd_raw(&ca, &cb);
    let prim = primitive_gcd(pa, pb, v);
    &cont * &prim
}

/// Splits `p` into (content in the other variables, primitive part in `v`).
pub fn content_split(p: &Poly, v: usize) -> (Poly, Poly) {
    let coeffs = p.coeffs_in(v);
    let mut cont = Poly::zero(p.nvars());
    for c in coeffs.iter().rev() {
        if c.is_zero() {
            continue;
        }
        cont = if cont.is_zero() { c.clone() } else { gcd_raw(&cont, c) };
        if cont.is_constant() {
            break;
        }
    }
    let cont = make_monic(&cont);
    let prim = p.div_exact(&cont).expect("content divides its polynomial");
    (cont, prim)
}

fn primitive_gcd(mut a: Poly, mut b: Poly, v: usize) -> Poly {
    let n = a.nvars();
    if a.degree_in(v) < b.degree_in(v) {
        std::mem::swap(&mut a, &mut b);
    }
    loop {
        if b.degree_in(v) == 0 {
            // b is primitive with no x_v: a unit unless it is zero.
            return if b.is_zero() { a } else { Poly::one(n) };
        }
        let r = pseudo_rem(&a, &b, v);
        if r.is_zero() {
            return b;
        }
        if r.degree_in(v) == 0 {
            return Poly::one(n);
        }
        let (_, pr) = content_split(&r, v);
        a = b;
        b = pr;
    }
}

/// Sparse pseudo-remainder of `a` by `b` in the variable `v`.
pub fn pseudo_rem(a: &Poly, b: &Poly, v: usize) -> Poly {
    let db = b.degree_in(v);
    let bc = b.coeffs_in(v);
    let lb = bc[db as usize].clone();
    let mut r = a.clone();
    while !r.is_zero() && r.degree_in(v) >= db {
        let dr = r.degree_in(v);
        let lr = r.coeffs_in(v)[dr as usize].clone();
        let shift = Monomial::var(v);
        let mut t = &lr * b;
        for _ in 0..(dr - db) {
            t = t.mul_monomial(shift);
        }
        r = &(&lb * &r) - &t;
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;

    fn x(v: usize) -> Poly {
        Poly::var(3, v)
    }

    fn c(k: i64) -> Poly {
        Poly::constant(3, GaussRat::from_int(k))
    }

    #[test]
    fn univariate_gcd() {
        let a = &(&x(0) - &c(1)) * &(&x(0) + &c(1));
        let b = &(&x(0) - &c(1)) * &(&x(0) + &c(2));
        assert_eq!(gcd(&a, &b), &x(0) - &c(1));
    }

    #[test]
    fn multivariate_common_factor() {
        let f = &(&x(0) * &x(1)) + &x(2);
        let g1 = &(&x(0) + &x(2)) * &f;
        let g2 = &(&x(1).pow(2) - &c(3)) * &f;
        let g = gcd(&g1, &g2);
        assert_eq!(g, make_monic(&f));
    }

    #[test]
    fn coprime_and_units() {
        assert!(gcd(&x(0), &x(1)).is_one());
        assert!(gcd(&c(5), &x(1)).is_one());
        assert_eq!(gcd(&Poly::zero(3), &x(1).scale(&GaussRat::from_int(3))), x(1));
    }

    #[test]
    fn gaussian_coefficients() {
        // (x + i y)(x - i y) and (x + i y)^2 share x + i y.
        let zi = &x(0) + &x(1).scale(&GaussRat::i());
        let zbar = &x(0) - &x(1).scale(&GaussRat::i());
        let g = gcd(&(&zi * &zbar), &(&zi * &zi));
        assert_eq!(g, zi);
    }

    #[test]
    fn content_in_other_variable() {
        let a = &(&x(1) + &c(1)) * &x(0).pow(2);
        let b = &(&x(1) + &c(1)) * &(&x(0) + &c(3));
        assert_eq!(gcd(&a, &b), &x(1) + &c(1));
    }
}
