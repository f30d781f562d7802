//! The four-term expansion of `𝒫_{q+1}𝒫_q f = I − II − III + IV` and its
//! finer split into `II′, II″, III′, III″, IV′, IV″`, assembled directly
//! from the structure data so each cancellation can be checked on its own.

use crate::algebra::RatFun;
use crate::multiindex::{enumerate, perm_sign, position_sign, Cochain, MultiIndex};
use crate::system::{OperatorSystem, Table};

use super::ComplexError;

/// Partial sums indexed by the target component `K`, `|K| = q + 1`.
#[derive(Clone, Debug)]
pub struct PartialSums {
    pub i: Cochain,
    pub ii1: Cochain,
    pub ii2: Cochain,
    pub iii1: Cochain,
    pub iii2: Cochain,
    pub iv1: Cochain,
    pub iv2: Cochain,
}

impl PartialSums {
    /// `I − (II′ + II″) − (III′ + III″) + (IV′ + IV″)`.
    pub fn total(&self) -> Cochain {
        let mut out = Cochain::zero(self.i.q(), self.i.r(), self.i.nvars());
        for k in enumerate(self.i.r(), self.i.q()) {
            let mut acc = self.i.get(&k);
            acc = &acc - &self.ii1.get(&k);
            acc = &acc - &self.ii2.get(&k);
            acc = &acc - &self.iii1.get(&k);
            acc = &acc - &self.iii2.get(&k);
            acc = &acc + &self.iv1.get(&k);
            acc = &acc + &self.iv2.get(&k);
            out.set(k, acc);
        }
        out
    }
}

fn sgn(top: &[usize], bottom: &[usize]) -> i64 {
    perm_sign(top, bottom).expect("permutation of distinct entries")
}

fn minus(set: &[usize], drop: &[usize]) -> Vec<usize> {
    set.iter().copied().filter(|x| !drop.contains(x)).collect()
}

fn cat(head: &[usize], tail: &[usize]) -> Vec<usize> {
    head.iter().chain(tail).copied().collect()
}

fn add_signed(acc: &mut RatFun, sign: i64, v: &RatFun) {
    if sign > 0 {
        *acc = &*acc + v;
    } else {
        *acc = &*acc - v;
    }
}

fn pairs(set: &[usize]) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for a in 0..set.len() {
        for b in a + 1..set.len() {
            let (m, n) = (set[a].min(set[b]), set[a].max(set[b]));
            out.push((m, n));
        }
    }
    out
}

/// Computes every partial sum for a cochain `f` of degree `q − 1`.
pub fn partial_sums(sys: &OperatorSystem, q: usize, f: &Cochain) -> Result<PartialSums, ComplexError> {
    if q == 0 || q >= sys.r {
        return Err(ComplexError::LevelOutOfRange { q, r: sys.r.saturating_sub(1) });
    }
    if f.q() + 1 != q {
        return Err(ComplexError::DegreeMismatch { expected: q - 1, got: f.q() });
    }
    let c: &Table = sys.c.as_ref().ok_or(ComplexError::MissingC)?;
    let (n, r) = (sys.n, sys.r);
    let cc = |m: usize, nn: usize, s: usize| &c[m - 1][nn - 1][s - 1];
    let p = |j: usize, g: &RatFun| sys.ops[j - 1].apply(g);
    let pk = |j: usize, g: &RatFun| sys.ops[j - 1].apply_principal(g);

    let zero = || Cochain::zero(q + 1, r, n);
    let mut out = PartialSums {
        i: zero(),
        ii1: zero(),
        ii2: zero(),
        iii1: zero(),
        iii2: zero(),
        iv1: zero(),
        iv2: zero(),
    };

    for kk in enumerate(r, q + 1) {
        let ke = kk.entries();
        let mut i_acc = RatFun::zero(n);
        let mut ii1 = RatFun::zero(n);
        let mut ii2 = RatFun::zero(n);
        let mut iii1 = RatFun::zero(n);
        let mut iii2 = RatFun::zero(n);
        let mut iv1 = RatFun::zero(n);
        let mut iv2 = RatFun::zero(n);

        // I: Σ_k Σ_{j∈K∖k} (−1)^{(k,K∖k)+(j,K∖{k,j})} P_k P_j f_{K∖{k,j}}
        for &k in ke {
            let kk_k = kk.without(k);
            let sk = position_sign(k, &kk_k);
            for &j in kk_k.entries() {
                let rest = kk_k.without(j);
                let g = f.get(&rest);
                if g.is_zero() {
                    continue;
                }
                add_signed(&mut i_acc, sk * position_sign(j, &rest), &p(k, &p(j, &g)));
            }
        }

        for (m, nn) in pairs(ke) {
            let l = minus(ke, &[m, nn]);
            let s_k = sgn(ke, &cat(&[m, nn], &l));
            for s in 1..=r {
                let cs = cc(m, nn, s);
                if cs.is_zero() {
                    continue;
                }
                // II′: the j = s term, c_{mn}^s P_s f_{K∖{m,n}}.
                let g = f.antisym_get(&l);
                if !g.is_zero() {
                    add_signed(&mut ii1, s_k, &(cs * &p(s, &g)));
                }
                // II″: j ∈ K∖{m,n} with sign (j, K∖{m,n,j}) + 1.
                for &j in &l {
                    let lj = minus(&l, &[j]);
                    let g = f.antisym_get(&cat(&[s], &lj));
                    if g.is_zero() {
                        continue;
                    }
                    let e = position_sign(j, &MultiIndex::new(lj.clone()).unwrap());
                    add_signed(&mut ii2, -s_k * e, &(cs * &p(j, &g)));
                }
                // IV: the c-part of (𝒫_q f)_{sK∖{m,n}}, zero when s repeats.
                if l.contains(&s) {
                    continue;
                }
                let sl = cat(&[s], &l);
                for (m2, n2) in pairs(&sl) {
                    let rest = minus(&sl, &[m2, n2]);
                    let inner = sgn(&sl, &cat(&[m2, n2], &rest));
                    for t in 1..=r {
                        let ct = cc(m2, n2, t);
                        if ct.is_zero() {
                            continue;
                        }
                        let g = f.antisym_get(&cat(&[t], &rest));
                        if g.is_zero() {
                            continue;
                        }
                        let term = &(cs * ct) * &g;
                        if m2 == s || n2 == s {
                            add_signed(&mut iv2, s_k * inner, &term);
                        } else {
                            add_signed(&mut iv1, s_k * inner, &term);
                        }
                    }
                }
            }
        }

        // III: Σ_k (−1)^{(k,K∖k)} Σ_{m'<n'∈K∖k} sgn · P_k(c_{m'n'}^l f_{lK∖{k,m',n'}})
        for &k in ke {
            let kk_k = kk.without(k);
            let sk = position_sign(k, &kk_k);
            for (m, nn) in pairs(kk_k.entries()) {
                let rest = minus(kk_k.entries(), &[m, nn]);
                let sp = sgn(kk_k.entries(), &cat(&[m, nn], &rest));
                for l in 1..=r {
                    let cl = cc(m, nn, l);
                    if cl.is_zero() {
                        continue;
                    }
                    let g = f.antisym_get(&cat(&[l], &rest));
                    if g.is_zero() {
                        continue;
                    }
                    add_signed(&mut iii1, sk * sp, &(cl * &p(k, &g)));
                    add_signed(&mut iii2, sk * sp, &(&pk(k, cl) * &g));
                }
            }
        }

        out.i.set(kk.clone(), i_acc);
        out.ii1.set(kk.clone(), ii1);
        out.ii2.set(kk.clone(), ii2);
        out.iii1.set(kk.clone(), iii1);
        out.iii2.set(kk.clone(), iii2);
        out.iv1.set(kk.clone(), iv1);
        out.iv2.set(kk, iv2);
    }
    Ok(out)
}

/// Outcome of checking each cancellation on one probe.
#[derive(Clone, Debug, PartialEq, Eq, serde::Serialize)]
pub struct Cancellations {
    /// `I − II′ = 0`
    pub i_minus_ii1: bool,
    /// `II″ + III′ = 0`
    pub ii2_plus_iii1: bool,
    /// `IV′ = 0`
    pub iv1_zero: bool,
    /// `III″ − IV″ = 0`
    pub iii2_minus_iv2: bool,
    /// The partial sums reassemble `𝒫_{q+1}𝒫_q f`.
    pub reassembles: bool,
}

impl Cancellations {
    pub fn all(&self) -> bool {
        self.i_minus_ii1 && self.ii2_plus_iii1 && self.iv1_zero && self.iii2_minus_iv2 && self.reassembles
    }
}

fn all_zero(a: &Cochain, b: &Cochain, sign: i64) -> bool {
    enumerate(a.r(), a.q()).iter().all(|k| {
        let (x, y) = (a.get(k), b.get(k));
        if sign > 0 {
            (&x + &y).is_zero()
        } else {
            (&x - &y).is_zero()
        }
    })
}

pub fn check_cancellations(sys: &OperatorSystem, q: usize, f: &Cochain) -> Result<Cancellations, ComplexError> {
    let ps = partial_sums(sys, q, f)?;
    let direct = super::apply_p(sys, q + 1, &super::apply_p(sys, q, f)?)?;
    Ok(Cancellations {
        i_minus_ii1: all_zero(&ps.i, &ps.ii1, -1),
        ii2_plus_iii1: all_zero(&ps.ii2, &ps.iii1, 1),
        iv1_zero: ps.iv1.is_zero(),
        iii2_minus_iv2: all_zero(&ps.iii2, &ps.iv2, -1),
        reassembles: all_zero(&ps.total(), &direct, -1),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::system::builtin::derham;
    use crate::system::random_involutive;

    fn probes(sys: &OperatorSystem, q: usize) -> Vec<Cochain> {
        let n = sys.n;
        let mut monos = vec![RatFun::one(n)];
        for a in 0..n {
            monos.push(RatFun::var(n, a));
            for b in a..n {
                monos.push(&RatFun::var(n, a) * &RatFun::var(n, b));
            }
        }
        let mut out = Vec::new();
        for ii in enumerate(sys.r, q - 1) {
            for g in &monos {
                let mut f = Cochain::zero(q - 1, sys.r, n);
                f.set(ii.clone(), g.clone());
                out.push(f);
            }
        }
        out
    }

    #[test]
    fn cancellations_hold_for_gauge_systems() {
        for seed in 0..4 {
            let sys = random_involutive(seed, 3, 3, 2);
            for q in 1..=2 {
                for f in probes(&sys, q) {
                    let c = check_cancellations(&sys, q, &f).unwrap();
                    assert!(c.all(), "seed {seed} q {q}: {c:?}");
                }
            }
        }
    }

    #[test]
    fn derham_terms_vanish_individually() {
        let sys = derham(3).unwrap();
        for f in probes(&sys, 2) {
            let ps = partial_sums(&sys, 2, &f).unwrap();
            assert!(ps.ii1.is_zero() && ps.iii1.is_zero() && ps.iv2.is_zero());
            assert!(ps.i.is_zero());
        }
    }

    #[test]
    fn broken_a2_breaks_only_the_last_cancellation() {
        // II″ + III′ and IV′ cancel for any antisymmetric c.
        let mut sys = random_involutive(2, 3, 3, 2);
        let c = sys.c.as_mut().unwrap();
        let bump = RatFun::var(3, 0);
        c[0][1][2] = &c[0][1][2] + &bump;
        c[1][0][2] = &c[1][0][2] - &bump;
        let mut broken = false;
        for f in probes(&sys, 2) {
            let c = check_cancellations(&sys, 2, &f).unwrap();
            assert!(c.ii2_plus_iii1 && c.iv1_zero && c.reassembles, "{c:?}");
            broken |= !c.iii2_minus_iv2 || !c.i_minus_ii1;
        }
        assert!(broken);
    }
}
