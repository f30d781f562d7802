//! Hörmander's Hermitian form `Q_{φ,x}`, the forms it induces on
//! `q`-vectors, and grid scans for positivity and rank.

mod jacobi;

pub use jacobi::eigen_hermitian;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::algebra::{AlgebraError, RatFun};
use crate::multiindex::{binomial, enumerate, position_sign, MultiIndex};
use crate::system::{sample_grid, OperatorSystem};

pub type CMatrix = Vec<Vec<Complex64>>;

/// Relative threshold for numeric rank and definiteness.
pub const RANK_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QFormError {
    #[error("matrix is not Hermitian (defect {defect:e})")]
    NotHermitian { defect: f64 },
    #[error("weight function is not real valued")]
    NotReal,
    #[error("(A3) data d, e missing")]
    MissingA3,
    #[error("pole at {point:?}")]
    Pole { point: Vec<f64> },
    #[error("level q = {q} outside 1..={r}")]
    LevelOutOfRange { q: usize, r: usize },
    #[error(transparent)]
    Algebra(AlgebraError),
}

impl From<AlgebraError> for QFormError {
    fn from(e: AlgebraError) -> Self {
        match e {
            AlgebraError::Pole { point } => QFormError::Pole { point },
            other => QFormError::Algebra(other),
        }
    }
}

/// Which bracket coefficients complete the second-order term.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FormSource {
    /// `p_j p̄_k φ + e_{jk}^l p̄_l φ`
    UseE,
    /// `p_j p̄_k φ + d_{jk}^l p_l φ`
    UseD,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HermitianSample {
    pub point: Vec<f64>,
    pub h: CMatrix,
}

/// Entries `M_{jk}` as rational functions; `M_{jk}` multiplies `ξ_k ξ̄_j`.
pub fn qform_symbolic(sys: &OperatorSystem, phi: &RatFun, source: FormSource) -> Result<Vec<Vec<RatFun>>, QFormError> {
    if phi.conj() != *phi {
        return Err(QFormError::NotReal);
    }
    let table = match source {
        FormSource::UseE => sys.e.as_ref(),
        FormSource::UseD => sys.d.as_ref(),
    }
    .ok_or(QFormError::MissingA3)?;
    let r = sys.r;
    let p: Vec<_> = (0..r).map(|j| sys.p(j)).collect();
    let pphi: Vec<RatFun> = p.iter().map(|op| op.apply(phi)).collect();
    let pbar_phi: Vec<RatFun> = p.iter().map(|op| op.bar().apply(phi)).collect();
    let first = match source {
        FormSource::UseE => &pbar_phi,
        FormSource::UseD => &pphi,
    };
    Ok((0..r)
        .map(|j| {
            (0..r)
                .map(|k| {
                    let mut m = p[j].apply(&pbar_phi[k]);
                    for (l, f) in first.iter().enumerate() {
                        let t = &table[j][k][l];
                        if !t.is_zero() && !f.is_zero() {
                            m = &m + &(t * f);
                        }
                    }
                    m
                })
                .collect()
        })
        .collect())
}

/// `(M + M†)/2`.
pub fn hermitize(m: &CMatrix) -> CMatrix {
    let r = m.len();
    (0..r).map(|j| (0..r).map(|k| (m[j][k] + m[k][j].conj()) * 0.5).collect()).collect()
}

fn evaluate(entries: &[Vec<RatFun>], x: &[f64]) -> Result<CMatrix, QFormError> {
    let mut m = Vec::with_capacity(entries.len());
    for row in entries {
        let mut out = Vec::with_capacity(row.len());
        for f in row {
            out.push(f.evaluate(x).map_err(|_| QFormError::Pole { point: x.to_vec() })?);
        }
        m.push(out);
    }
    Ok(m)
}

/// The Hermitized form at `x`.
pub fn qform_matrix(
    sys: &OperatorSystem,
    phi: &RatFun,
    x: &[f64],
    source: FormSource,
) -> Result<HermitianSample, QFormError> {
    let entries = qform_symbolic(sys, phi, source)?;
    Ok(HermitianSample { point: x.to_vec(), h: hermitize(&evaluate(&entries, x)?) })
}

/// `Re⟨Hξ, ξ⟩ = Σ_{j,k} H_{jk} ξ_k ξ̄_j`.
pub fn form_value(h: &CMatrix, xi: &[Complex64]) -> f64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for (j, row) in h.iter().enumerate() {
        for (k, v) in row.iter().enumerate() {
            acc += v * xi[k] * xi[j].conj();
        }
    }
    acc.re
}

/// Matrix of `ξ ↦ Σ_{|I|=q−1} Q(ξ_I, ξ_I)` on the basis of strictly
/// increasing `J`, `|J| = q`.
pub fn induced_matrix(h: &CMatrix, q: usize) -> CMatrix {
    let r = h.len();
    assert!((1..=r).contains(&q), "need 1 ≤ q ≤ r");
    let basis = enumerate(r, q);
    let pos = |j: &MultiIndex| basis.binary_search(j).expect("basis element");
    let mut out = vec![vec![Complex64::new(0.0, 0.0); basis.len()]; basis.len()];
    for ii in enumerate(r, q - 1) {
        for j in 1..=r {
            let Some(a) = ii.with(j) else { continue };
            let sj = position_sign(j, &ii) as f64;
            for k in 1..=r {
                let Some(b) = ii.with(k) else { continue };
                let sk = position_sign(k, &ii) as f64;
                out[pos(&a)][pos(&b)] += h[j - 1][k - 1] * (sj * sk);
            }
        }
    }
    out
}

/// `{Σ_{j∈J} λ_j : |J| = q}`, sorted.
pub fn subset_sums(lambda: &[f64], q: usize) -> Vec<f64> {
    let mut out: Vec<f64> =
        enumerate(lambda.len(), q).iter().map(|j| j.entries().iter().map(|&k| lambda[k - 1]).sum()).collect();
    out.sort_by(f64::total_cmp);
    out
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpectrumCheck {
    pub pass: bool,
    pub q: usize,
    pub induced: Vec<f64>,
    pub predicted: Vec<f64>,
    pub max_diff: f64,
}

/// Compares the spectrum of the induced form against subset sums of the
/// spectrum of `h`.
pub fn check_induced_spectrum(h: &CMatrix, q: usize, tol: f64) -> Result<SpectrumCheck, QFormError> {
    let lambda = eigen_hermitian(h)?;
    let induced = eigen_hermitian(&induced_matrix(h, q))?;
    let predicted = subset_sums(&lambda, q);
    let max_diff = induced.iter().zip(&predicted).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    Ok(SpectrumCheck { pass: max_diff <= tol && induced.len() == predicted.len(), q, induced, predicted, max_diff })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct QFormReport {
    pub point: Vec<f64>,
    pub eigenvalues: Vec<f64>,
    pub min_eigenvalue: f64,
    pub rank: usize,
    pub psd: bool,
    /// `rank ≥ r − q + 1` for `q = 1..=r`.
    pub rank_condition: Vec<bool>,
}

impl QFormReport {
    pub fn from_matrix(point: Vec<f64>, h: &CMatrix) -> Result<Self, QFormError> {
        let eigenvalues = eigen_hermitian(h)?;
        let r = eigenvalues.len();
        let radius = eigenvalues.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let tol = RANK_TOL * radius;
        let rank = eigenvalues.iter().filter(|v| v.abs() > tol).count();
        let min_eigenvalue = eigenvalues.first().copied().unwrap_or(0.0);
        Ok(Self {
            point,
            psd: min_eigenvalue >= -tol,
            rank_condition: (1..=r).map(|q| rank + q > r).collect(),
            eigenvalues,
            min_eigenvalue,
            rank,
        })
    }

    pub fn positive_definite(&self) -> bool {
        self.rank == self.eigenvalues.len() && self.psd && self.min_eigenvalue > 0.0
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScanReport {
    pub q: usize,
    pub source: FormSource,
    pub per_axis: usize,
    pub samples: Vec<QFormReport>,
    pub pole_points: Vec<Vec<f64>>,
    pub min_eigenvalue: f64,
    pub non_psd: usize,
    /// `rank ≥ r − q + 1` at every evaluated sample.
    pub rank_condition: bool,
    /// Positive definite at every evaluated sample.
    pub p_convex: bool,
}

fn grid(bbox: &[(f64, f64)], per_axis: usize) -> Vec<Vec<f64>> {
    let (_, pts) = sample_grid(bbox, per_axis.pow(bbox.len() as u32));
    pts
}

/// Evaluates the form on the `N^n` grid of the box.
pub fn pconvexity_scan(
    sys: &OperatorSystem,
    phi: &RatFun,
    bbox: &[(f64, f64)],
    per_axis: usize,
    q: usize,
    source: FormSource,
) -> Result<ScanReport, QFormError> {
    if q == 0 || q > sys.r {
        return Err(QFormError::LevelOutOfRange { q, r: sys.r });
    }
    let entries = qform_symbolic(sys, phi, source)?;
    let points = grid(bbox, per_axis.max(2));
    let evaluated: Vec<Result<QFormReport, QFormError>> = points
        .into_par_iter()
        .map(|x| {
            let m = evaluate(&entries, &x)?;
            QFormReport::from_matrix(x, &hermitize(&m))
        })
        .collect();
    let mut samples = Vec::new();
    let mut pole_points = Vec::new();
    for e in evaluated {
        match e {
            Ok(s) => samples.push(s),
            Err(QFormError::Pole { point }) => pole_points.push(point),
            Err(other) => return Err(other),
        }
    }
    let min_eigenvalue = samples.iter().map(|s| s.min_eigenvalue).fold(f64::INFINITY, f64::min);
    Ok(ScanReport {
        q,
        source,
        per_axis: per_axis.max(2),
        non_psd: samples.iter().filter(|s| !s.psd).count(),
        rank_condition: samples.iter().all(|s| s.rank_condition[q - 1]),
        p_convex: !samples.is_empty() && samples.iter().all(QFormReport::positive_definite),
        min_eigenvalue,
        samples,
        pole_points,
    })
}

/// At a critical point `y` of `φ` (with `φ(y) = 0`) the form reduces to the
/// coefficient-weighted Hessian `a_j^μ ā_k^ν ∂_μ∂_ν φ(y)`. Returns that
/// matrix, Hermitized.
pub fn critical_point_form(sys: &OperatorSystem, phi: &RatFun, y: &[f64]) -> Result<CMatrix, QFormError> {
    let n = sys.n;
    let hess: Vec<Vec<Complex64>> = (0..n)
        .map(|mu| (0..n).map(|nu| phi.derivative(mu).derivative(nu).evaluate(y)).collect::<Result<Vec<_>, _>>())
        .collect::<Result<_, _>>()?;
    let a: Vec<Vec<Complex64>> = sys
        .ops
        .iter()
        .map(|op| op.a.iter().map(|c| c.evaluate(y)).collect::<Result<Vec<_>, _>>())
        .collect::<Result<_, _>>()?;
    let r = sys.r;
    let mut m = vec![vec![Complex64::new(0.0, 0.0); r]; r];
    for j in 0..r {
        for k in 0..r {
            for mu in 0..n {
                for nu in 0..n {
                    m[j][k] += a[j][mu] * a[k][nu].conj() * hess[mu][nu];
                }
            }
        }
    }
    Ok(hermitize(&m))
}

/// Largest entrywise deviation between two matrices.
pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    a.iter().flatten().zip(b.iter().flatten()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

/// Trace identity for induced forms: `tr Q_q = C(r−1, q−1) tr Q`.
pub fn induced_trace_factor(r: usize, q: usize) -> usize {
    binomial(r - 1, q - 1)
}
