use num_complex::Complex64;

use super::{CMatrix, QFormError};

const MAX_SWEEPS: usize = 100;

fn frobenius(a: &CMatrix) -> f64 {
    a.iter().flatten().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
}

fn off_diagonal(a: &CMatrix) -> f64 {
    let mut s = 0.0;
    for (j, row) in a.iter().enumerate() {
        for (k, v) in row.iter().enumerate() {
            if j != k {
                s += v.norm_sqr();
            }
        }
    }
    s.sqrt()
}

/// Eigenvalues of a Hermitian matrix in ascending order, by cyclic complex
/// Jacobi rotations in row-major pair order.
pub fn eigen_hermitian(h: &CMatrix) -> Result<Vec<f64>, QFormError> {
    let r = h.len();
    let norm = frobenius(h);
    let mut defect: f64 = 0.0;
    for j in 0..r {
        assert_eq!(h[j].len(), r, "matrix must be square");
        for k in 0..r {
            defect = defect.max((h[j][k] - h[k][j].conj()).norm());
        }
    }
    if defect > 1e-10 * norm.max(1.0) {
        return Err(QFormError::NotHermitian { defect });
    }
    let mut a: CMatrix = (0..r).map(|j| (0..r).map(|k| (h[j][k] + h[k][j].conj()) * 0.5).collect()).collect();
    let target = 1e-13 * norm;
    for _ in 0..MAX_SWEEPS {
        if off_diagonal(&a) <= target {
            break;
        }
        for p in 0..r {
            for q in p + 1..r {
                rotate(&mut a, p, q);
            }
        }
    }
    let mut ev: Vec<f64> = (0..r).map(|j| a[j][j].re).collect();
    ev.sort_by(f64::total_cmp);
    Ok(ev)
}

/// Zeroes `a[p][q]` with the unitary `G = diag(1, e^{−iθ})·R(c, s)` acting on
/// the `(p, q)` plane: `A ← G† A G`.
fn rotate(a: &mut CMatrix, p: usize, q: usize) {
    let h = a[p][q];
    let mag = h.norm();
    if mag == 0.0 {
        return;
    }
    let phase = h / mag;
    let tau = (a[q][q].re - a[p][p].re) / (2.0 * mag);
    let t = if tau >= 0.0 { 1.0 / (tau + (1.0 + tau * tau).sqrt()) } else { -1.0 / (-tau + (1.0 + tau * tau).sqrt()) };
    let c = 1.0 / (1.0 + t * t).sqrt();
    let s = t * c;
    let gpp = Complex64::new(c, 0.0);
    let gpq = Complex64::new(s, 0.0);
    let gqp = -phase.conj() * s;
    let gqq = phase.conj() * c;
    let r = a.len();
    for row in a.iter_mut() {
        let (x, y) = (row[p], row[q]);
        row[p] = x * gpp + y * gqp;
        row[q] = x * gpq + y * gqq;
    }
    for k in 0..r {
        let (x, y) = (a[p][k], a[q][k]);
        a[p][k] = gpp.conj() * x + gqp.conj() * y;
        a[q][k] = gpq.conj() * x + gqq.conj() * y;
    }
    a[p][q] = Complex64::new(0.0, 0.0);
    a[q][p] = Complex64::new(0.0, 0.0);
    a[p][p].im = 0.0;
    a[q][q].im = 0.0;
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn close(a: &[f64], b: &[f64]) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() < 1e-12)
    }

    #[test]
    fn small_examples() {
        let d = vec![
            vec![c(3.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)],
            vec![c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)],
            vec![c(0.0, 0.0), c(0.0, 0.0), c(2.0, 0.0)],
        ];
        assert!(close(&eigen_hermitian(&d).unwrap(), &[1.0, 2.0, 3.0]));
        let x = vec![vec![c(0.0, 0.0), c(1.0, 0.0)], vec![c(1.0, 0.0), c(0.0, 0.0)]];
        assert!(close(&eigen_hermitian(&x).unwrap(), &[-1.0, 1.0]));
        let y = vec![vec![c(0.0, 0.0), c(0.0, 1.0)], vec![c(0.0, -1.0), c(0.0, 0.0)]];
        assert!(close(&eigen_hermitian(&y).unwrap(), &[-1.0, 1.0]));
    }

    #[test]
    fn rejects_non_hermitian() {
        let m = vec![vec![c(0.0, 0.0), c(1.0, 0.0)], vec![c(0.0, 0.0), c(0.0, 0.0)]];
        assert!(matches!(eigen_hermitian(&m), Err(QFormError::NotHermitian { .. })));
    }

    #[test]
    fn empty_and_zero() {
        assert!(eigen_hermitian(&vec![]).unwrap().is_empty());
        assert!(close(&eigen_hermitian(&vec![vec![c(0.0, 0.0); 2]; 2]).unwrap(), &[0.0, 0.0]));
    }
}
