use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::SolverError;
use crate::multiindex::{enumerate, MultiIndex};

/// Uniform tensor grid, nodes numbered row-major with `x₁` fastest.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid {
    pub bbox: Vec<(f64, f64)>,
    pub n: usize,
    pub h: Vec<f64>,
}

impl Grid {
    pub fn new(bbox: Vec<(f64, f64)>, n: usize) -> Result<Self, SolverError> {
        if n < 8 {
            return Err(SolverError::InvalidGrid(format!("need at least 8 nodes per axis, got {n}")));
        }
        if bbox.is_empty() || bbox.iter().any(|&(lo, hi)| !(lo.is_finite() && hi.is_finite() && lo < hi)) {
            return Err(SolverError::InvalidGrid("box must be a nonempty list of finite intervals lo < hi".into()));
        }
        let h = bbox.iter().map(|&(lo, hi)| (hi - lo) / (n - 1) as f64).collect();
        Ok(Self { bbox, n, h })
    }

    pub fn dim(&self) -> usize {
        self.bbox.len()
    }

    pub fn len(&self) -> usize {
        self.n.pow(self.dim() as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Per-axis indices of node `k`.
    pub fn multi(&self, mut k: usize) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.dim());
        for _ in 0..self.dim() {
            out.push(k % self.n);
            k /= self.n;
        }
        out
    }

    pub fn stride(&self, axis: usize) -> usize {
        self.n.pow(axis as u32)
    }

    pub fn coord(&self, axis: usize, i: usize) -> f64 {
        let (lo, hi) = self.bbox[axis];
        if i + 1 == self.n {
            hi
        } else {
            lo + self.h[axis] * i as f64
        }
    }

    pub fn point(&self, k: usize) -> Vec<f64> {
        self.multi(k).iter().enumerate().map(|(a, &i)| self.coord(a, i)).collect()
    }

    pub fn points(&self) -> Vec<Vec<f64>> {
        (0..self.len()).map(|k| self.point(k)).collect()
    }
}

/// Grid values of a `q`-cochain: one complex array per strictly increasing
/// multi-index.
#[derive(Clone, Debug, PartialEq)]
pub struct GridField {
    pub q: usize,
    pub r: usize,
    pub grid: Grid,
    pub components: BTreeMap<MultiIndex, Vec<Complex64>>,
}

impl GridField {
    pub fn zeros(q: usize, r: usize, grid: &Grid) -> Self {
        let components = enumerate(r, q).into_iter().map(|j| (j, vec![Complex64::new(0.0, 0.0); grid.len()])).collect();
        Self { q, r, grid: grid.clone(), components }
    }

    /// Samples `f(J, x)` at every node.
    pub fn from_fn(q: usize, r: usize, grid: &Grid, f: impl Fn(&MultiIndex, &[f64]) -> Complex64) -> Self {
        let pts = grid.points();
        let components =
            enumerate(r, q).into_iter().map(|j| { let v = pts.iter().map(|x| f(&j, x)).collect(); (j, v) }).collect();
        Self { q, r, grid: grid.clone(), components }
    }

    pub fn component(&self, j: &MultiIndex) -> &[Complex64] {
        &self.components[j]
    }

    /// Components concatenated in index order.
    pub fn flatten(&self) -> Vec<Complex64> {
        self.components.values().flatten().copied().collect()
    }

    pub fn from_flat(q: usize, r: usize, grid: &Grid, data: &[Complex64]) -> Self {
        let len = grid.len();
        let components = enumerate(r, q)
            .into_iter()
            .enumerate()
            .map(|(i, j)| (j, data[i * len..(i + 1) * len].to_vec()))
            .collect();
        Self { q, r, grid: grid.clone(), components }
    }

    pub fn max_abs(&self) -> f64 {
        self.components.values().flatten().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn to_file(&self) -> GridFieldFile {
        GridFieldFile {
            q: self.q,
            r: Some(self.r),
            grid: GridSpec { n: self.grid.n, bbox: self.grid.bbox.iter().map(|&(a, b)| [a, b]).collect() },
            components: self
                .components
                .iter()
                .map(|(j, v)| (j.key(), v.iter().map(|c| [c.re, c.im]).collect()))
                .collect(),
        }
    }

    /// Reads a field for a system with `r` operators.
    pub fn from_file(file: GridFieldFile, r: usize) -> Result<Self, SolverError> {
        if file.r.is_some_and(|fr| fr != r) || file.q > r {
            return Err(SolverError::InvalidField(format!("field (q = {}, r = {:?}) does not fit r = {r}", file.q, file.r)));
        }
        let grid = file.grid.to_grid()?;
        let expected = enumerate(r, file.q);
        let mut components = BTreeMap::new();
        for (key, vals) in file.components {
            let j = MultiIndex::from_key(&key)
                .map_err(|_| SolverError::InvalidField(format!("bad component key `{key}`")))?;
            if !expected.contains(&j) {
                return Err(SolverError::InvalidField(format!("component `{key}` is not a {}-index in 1..={r}", file.q)));
            }
            if vals.len() != grid.len() {
                return Err(SolverError::InvalidField(format!(
                    "component `{key}` has {} values, grid has {} nodes",
                    vals.len(),
                    grid.len()
                )));
            }
            if vals.iter().flatten().any(|v| !v.is_finite()) {
                return Err(SolverError::InvalidField(format!("component `{key}` has non-finite values")));
            }
            components.insert(j, vals.into_iter().map(|[a, b]| Complex64::new(a, b)).collect());
        }
        for j in expected {
            components.entry(j).or_insert_with(|| vec![Complex64::new(0.0, 0.0); grid.len()]);
        }
        Ok(Self { q: file.q, r, grid, components })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "box")]
    pub bbox: Vec<[f64; 2]>,
}

impl GridSpec {
    pub fn to_grid(&self) -> Result<Grid, SolverError> {
        Grid::new(self.bbox.iter().map(|&[a, b]| (a, b)).collect(), self.n)
    }
}

/// On-disk grid field. Missing components are zero.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridFieldFile {
    pub q: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r: Option<usize>,
    pub grid: GridSpec,
    pub components: BTreeMap<String, Vec<[f64; 2]>>,
}
