//! Divergence certificate for the adjoint: for cochains `g` of degree
//! `q − 1` and `f` of degree `q`,
//! `⟨𝒫_q g, f⟩ − ⟨g, ᵗ𝒫_q f⟩ = Σ_ν ∂_ν V^ν` with
//! `V^ν = Σ_J Σ_{j∈J} (−1)^{(j,J∖j)} a_j^ν g_{J∖j} f̄_J`.

use rand::Rng;

use super::{apply_p, apply_pt, ComplexError};
use crate::algebra::{GaussRat, Monomial, Poly, RatFun};
use crate::multiindex::{enumerate, position_sign, Cochain};
use crate::system::OperatorSystem;

/// `Σ_J u_J v̄_J`.
pub fn pairing(u: &Cochain, v: &Cochain) -> RatFun {
    let mut acc = RatFun::zero(u.nvars());
    for (j, uj) in u.iter() {
        let vj = v.get(j);
        if !vj.is_zero() {
            acc = &acc + &(uj * &vj.conj());
        }
    }
    acc
}

/// The vector field `V` of the certificate.
pub fn certificate_field(sys: &OperatorSystem, q: usize, g: &Cochain, f: &Cochain) -> Vec<RatFun> {
    let n = sys.n;
    let mut v = vec![RatFun::zero(n); n];
    for (jj, fj) in f.iter() {
        let fbar = fj.conj();
        for &j in jj.entries() {
            let rest = jj.without(j);
            let gi = g.get(&rest);
            if gi.is_zero() {
                continue;
            }
            let prod = &gi * &fbar;
            let prod = if position_sign(j, &rest) < 0 { -&prod } else { prod };
            for (nu, a) in sys.ops[j - 1].a.iter().enumerate() {
                if !a.is_zero() {
                    v[nu] = &v[nu] + &(a * &prod);
                }
            }
        }
    }
    debug_assert_eq!(f.q(), q);
    v
}

#[derive(Clone, Debug, PartialEq)]
pub struct Certificate {
    /// `⟨𝒫_q g, f⟩ − ⟨g, ᵗ𝒫_q f⟩`
    pub defect: RatFun,
    pub field: Vec<RatFun>,
    /// `defect − div V`, zero when the certificate holds.
    pub residual: RatFun,
}

impl Certificate {
    pub fn holds(&self) -> bool {
        self.residual.is_zero()
    }
}

pub fn divergence_certificate(
    sys: &OperatorSystem,
    q: usize,
    g: &Cochain,
    f: &Cochain,
) -> Result<Certificate, ComplexError> {
    let pg = apply_p(sys, q, g)?;
    let ptf = apply_pt(sys, q, f)?;
    let defect = &pairing(&pg, f) - &pairing(g, &ptf);
    let field = certificate_field(sys, q, g, f);
    let mut div = RatFun::zero(sys.n);
    for (nu, v) in field.iter().enumerate() {
        div = &div + &v.derivative(nu);
    }
    let residual = &defect - &div;
    Ok(Certificate { defect, field, residual })
}

/// A random polynomial of total degree ≤ `deg` with small Gaussian integer
/// coefficients.
pub fn random_poly(rng: &mut impl Rng, n: usize, deg: usize, terms: usize) -> RatFun {
    let mut out = Vec::with_capacity(terms);
    for _ in 0..terms {
        let mut exps = vec![0u32; n];
        for _ in 0..rng.random_range(0..=deg) {
            exps[rng.random_range(0..n)] += 1;
        }
        let c = GaussRat::from_ints(rng.random_range(-3..=3), rng.random_range(-3..=3));
        out.push((Monomial::from_exponents(&exps), c));
    }
    RatFun::from_poly(Poly::from_terms(n, out))
}

/// A random cochain of degree `q` with polynomial components.
pub fn random_cochain(rng: &mut impl Rng, q: usize, r: usize, n: usize, deg: usize) -> Cochain {
    let mut c = Cochain::zero(q, r, n);
    for j in enumerate(r, q) {
        c.set(j, random_poly(rng, n, deg, 3));
    }
    c
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::system::builtin::{dolbeault, lewy};
    use crate::system::random_involutive;

    #[test]
    fn certificate_holds_on_random_pairs() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let systems = [random_involutive(1, 3, 3, 2), dolbeault(2).unwrap(), lewy().unwrap()];
        for sys in &systems {
            for q in 1..=sys.r {
                let g = random_cochain(&mut rng, q - 1, sys.r, sys.n, 2);
                let f = random_cochain(&mut rng, q, sys.r, sys.n, 2);
                let cert = divergence_certificate(sys, q, &g, &f).unwrap();
                assert!(cert.holds(), "q = {q}");
            }
        }
    }

    #[test]
    fn pairing_is_sesquilinear() {
        let n = 2;
        let mut u = Cochain::zero(0, 1, n);
        u.set(crate::multiindex::MultiIndex::empty(), RatFun::constant(n, GaussRat::i()));
        assert_eq!(pairing(&u, &u), RatFun::one(n));
    }
}
