//! Strictly increasing multi-indices, permutation signs and antisymmetric
//! cochains.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::algebra::RatFun;

/// A strictly increasing list of 1-based indices.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Default)]
pub struct MultiIndex(Vec<usize>);

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum IndexError {
    #[error("{bottom:?} is not a permutation of {top:?}")]
    NotAPermutation { top: Vec<usize>, bottom: Vec<usize> },
    #[error("indices {0:?} are not strictly increasing")]
    NotIncreasing(Vec<usize>),
}

impl MultiIndex {
    pub fn new(entries: Vec<usize>) -> Result<Self, IndexError> {
        if entries.windows(2).any(|w| w[0] >= w[1]) || entries.first() == Some(&0) {
            return Err(IndexError::NotIncreasing(entries));
        }
        Ok(Self(entries))
    }

    pub fn empty() -> Self {
        Self(Vec::new())
    }

    /// Sorts arbitrary distinct entries; `None` if an entry repeats.
    pub fn sorted(entries: &[usize]) -> Option<Self> {
        let mut v = entries.to_vec();
        v.sort_unstable();
        if v.windows(2).any(|w| w[0] == w[1]) {
            return None;
        }
        Some(Self(v))
    }

    pub fn entries(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, k: usize) -> bool {
        self.0.binary_search(&k).is_ok()
    }

    /// `J ∖ {k}`.
    pub fn without(&self, k: usize) -> MultiIndex {
        MultiIndex(self.0.iter().copied().filter(|&j| j != k).collect())
    }

    /// `J ∪ {k}` kept sorted; `None` if `k ∈ J`.
    pub fn with(&self, k: usize) -> Option<MultiIndex> {
        match self.0.binary_search(&k) {
            Ok(_) => None,
            Err(p) => {
                let mut v = self.0.clone();
                v.insert(p, k);
                Some(MultiIndex(v))
            }
        }
    }

    /// Dotted key, e.g. `1.3`; the empty index is `""`.
    pub fn key(&self) -> String {
        self.0.iter().map(|j| j.to_string()).collect::<Vec<_>>().join(".")
    }

    pub fn from_key(key: &str) -> Result<Self, IndexError> {
        if key.is_empty() {
            return Ok(Self::empty());
        }
        let entries: Vec<usize> = key
            .split('.')
            .map(|s| s.parse::<usize>())
            .collect::<Result<_, _>>()
            .map_err(|_| IndexError::NotIncreasing(Vec::new()))?;
        Self::new(entries)
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({})", self.0.iter().map(|j| j.to_string()).collect::<Vec<_>>().join(","))
    }
}

/// `(k, J)`: the number of entries of `J` strictly less than `k`.
pub fn position_count(k: usize, j: &MultiIndex) -> usize {
    j.0.iter().filter(|&&x| x < k).count()
}

/// `(-1)^(k, J)`.
pub fn position_sign(k: usize, j: &MultiIndex) -> i64 {
    if position_count(k, j).is_multiple_of(2) {
        1
    } else {
        -1
    }
}

/// Sign of the permutation carrying the tuple `top` to the tuple `bottom`.
pub fn perm_sign(top: &[usize], bottom: &[usize]) -> Result<i64, IndexError> {
    let bad = || IndexError::NotAPermutation { top: top.to_vec(), bottom: bottom.to_vec() };
    if top.len() != bottom.len() {
        return Err(bad());
    }
    let mut seen = vec![false; top.len()];
    let mut pos = Vec::with_capacity(bottom.len());
    for b in bottom {
        let p = top.iter().position(|t| t == b).ok_or_else(bad)?;
        if seen[p] {
            return Err(bad());
        }
        seen[p] = true;
        pos.push(p);
    }
    if top.iter().enumerate().any(|(i, t)| top[..i].contains(t)) {
        return Err(bad());
    }
    let mut inversions = 0;
    for i in 0..pos.len() {
        for j in i + 1..pos.len() {
            if pos[i] > pos[j] {
                inversions += 1;
            }
        }
    }
    Ok(if inversions % 2 == 0 { 1 } else { -1 })
}

/// All strictly increasing indices of length `q` from `1..=r`, lexicographic.
pub fn enumerate(r: usize, q: usize) -> Vec<MultiIndex> {
    assert!(q <= r, "q = {q} exceeds r = {r}");
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(q);
    fn rec(start: usize, r: usize, q: usize, cur: &mut Vec<usize>, out: &mut Vec<MultiIndex>) {
        if cur.len() == q {
            out.push(MultiIndex(cur.clone()));
            return;
        }
        for k in start..=r {
            if r - k + 1 < q - cur.len() {
                break;
            }
            cur.push(k);
            rec(k + 1, r, q, cur, out);
            cur.pop();
        }
    }
    rec(1, r, q, &mut cur, &mut out);
    out
}

pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
}

/// Antisymmetric `q`-cochain with `RatFun` components, stored sparsely.
#[derive(Clone, Debug, PartialEq)]
pub struct Cochain {
    q: usize,
    r: usize,
    nvars: usize,
    comps: BTreeMap<MultiIndex, RatFun>,
}

impl Cochain {
    pub fn zero(q: usize, r: usize, nvars: usize) -> Self {
        assert!(q <= r);
        Self { q, r, nvars, comps: BTreeMap::new() }
    }

    /// A 0-cochain holding a single function.
    pub fn scalar(r: usize, f: RatFun) -> Self {
        let mut c = Self::zero(0, r, f.nvars());
        c.set(MultiIndex::empty(), f);
        c
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn set(&mut self, j: MultiIndex, f: RatFun) {
        assert_eq!(j.len(), self.q, "component index has wrong length");
        assert!(j.0.last().is_none_or(|&m| m <= self.r));
        if f.is_zero() {
            self.comps.remove(&j);
        } else {
            self.comps.insert(j, f);
        }
    }

    pub fn get(&self, j: &MultiIndex) -> RatFun {
        self.comps.get(j).cloned().unwrap_or_else(|| RatFun::zero(self.nvars))
    }

    /// Component at an arbitrary tuple, extended antisymmetrically.
    pub fn antisym_get(&self, tuple: &[usize]) -> RatFun {
        let Some(sorted) = MultiIndex::sorted(tuple) else {
            return RatFun::zero(self.nvars);
        };
        let Some(f) = self.comps.get(&sorted) else {
            return RatFun::zero(self.nvars);
        };
        match perm_sign(sorted.entries(), tuple).unwrap() {
            1 => f.clone(),
            _ => -f,
        }
    }

    /// Nonzero components in index order.
    pub fn iter(&self) -> impl Iterator<Item = (&MultiIndex, &RatFun)> {
        self.comps.iter()
    }

    pub fn is_zero(&self) -> bool {
        self.comps.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mi(v: &[usize]) -> MultiIndex {
        MultiIndex::new(v.to_vec()).unwrap()
    }

    #[test]
    fn position_count_examples() {
        assert_eq!(position_count(2, &mi(&[1, 3])), 1);
        assert_eq!(position_count(1, &mi(&[2, 3])), 0);
        assert_eq!(position_count(4, &mi(&[1, 2, 3])), 3);
    }

    #[test]
    fn perm_sign_examples() {
        assert_eq!(perm_sign(&[1, 2, 3], &[1, 2, 3]), Ok(1));
        assert_eq!(perm_sign(&[1, 2, 3], &[2, 1, 3]), Ok(-1));
        assert_eq!(perm_sign(&[1, 2, 3, 4], &[2, 3, 1, 4]), Ok(1));
        assert!(perm_sign(&[1, 2], &[1, 1]).is_err());
        assert!(perm_sign(&[1, 2], &[1, 3]).is_err());
        assert!(perm_sign(&[1, 1], &[1, 1]).is_err());
        assert!(perm_sign(&[1, 2], &[1]).is_err());
    }

    #[test]
    fn antisym_get_examples() {
        let x = RatFun::var(1, 0);
        let mut f = Cochain::zero(2, 3, 1);
        f.set(mi(&[1, 2]), x.clone());
        assert_eq!(f.antisym_get(&[2, 1]), -&x);
        assert!(f.antisym_get(&[1, 1]).is_zero());
        let mut g = Cochain::zero(3, 3, 1);
        g.set(mi(&[1, 2, 3]), x.clone());
        assert_eq!(g.antisym_get(&[2, 3, 1]), x);
    }

    #[test]
    fn enumerate_examples() {
        assert_eq!(enumerate(3, 2), vec![mi(&[1, 2]), mi(&[1, 3]), mi(&[2, 3])]);
        assert_eq!(enumerate(5, 0), vec![MultiIndex::empty()]);
        assert_eq!(enumerate(4, 4), vec![mi(&[1, 2, 3, 4])]);
        for r in 0..7 {
            for q in 0..=r {
                assert_eq!(enumerate(r, q).len(), binomial(r, q));
            }
        }
    }

    #[test]
    fn keys_roundtrip() {
        assert_eq!(mi(&[1, 3]).key(), "1.3");
        assert_eq!(MultiIndex::from_key("1.3").unwrap(), mi(&[1, 3]));
        assert_eq!(MultiIndex::from_key("").unwrap(), MultiIndex::empty());
        assert!(MultiIndex::from_key("3.1").is_err());
    }

    #[test]
    fn insertion_sign_agrees_with_perm_sign() {
        for r in 1..=6 {
            for q in 0..r {
                for j in enumerate(r, q) {
                    for k in 1..=r {
                        if j.contains(k) {
                            continue;
                        }
                        let kj = j.with(k).unwrap();
                        let mut tuple = vec![k];
                        tuple.extend_from_slice(j.entries());
                        assert_eq!(position_sign(k, &j), perm_sign(kj.entries(), &tuple).unwrap());
                    }
                }
            }
        }
    }

    #[test]
    fn sign_exchange_identity_exhaustive() {
        // (k,K∖k) + (j,K∖{j,k}) + 1 ≡ (j,K∖j) + (k,K∖{j,k}) mod 2 for k < j in K.
        for r in 1..=6 {
            for q in 2..=r {
                for kk in enumerate(r, q) {
                    for &k in kk.entries() {
                        for &j in kk.entries() {
                            if k >= j {
                                continue;
                            }
                            let kjk = kk.without(j).without(k);
                            let lhs = position_count(k, &kk.without(k)) + position_count(j, &kjk) + 1;
                            let rhs = position_count(j, &kk.without(j)) + position_count(k, &kjk);
                            assert_eq!(lhs % 2, rhs % 2, "K={kk} k={k} j={j}");
                        }
                    }
                }
            }
        }
    }
}
