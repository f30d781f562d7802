use num_traits::{Signed, Zero};

use super::{OperatorSystem, SystemError};
use crate::algebra::{GaussRat, Poly};

/// Uniform tensor grid with about `total` nodes (at least 2 per axis),
/// lexicographic with the first coordinate slowest.
pub fn sample_grid(bbox: &[(f64, f64)], total: usize) -> (Vec<usize>, Vec<Vec<f64>>) {
    let n = bbox.len();
    let k = ((total as f64).powf(1.0 / n as f64).ceil() as usize).max(2);
    let counts = vec![k; n];
    let mut points = Vec::with_capacity(k.pow(n as u32));
    let mut idx = vec![0usize; n];
    loop {
        points.push(
            idx.iter()
                .zip(bbox)
                .map(|(&i, &(lo, hi))| lo + (hi - lo) * i as f64 / (k - 1) as f64)
                .collect(),
        );
        let mut ax = n;
        loop {
            if ax == 0 {
                return (counts, points);
            }
            ax -= 1;
            idx[ax] += 1;
            if idx[ax] < k {
                break;
            }
            idx[ax] = 0;
        }
    }
}

fn sign(v: &num_rational::BigRational) -> i8 {
    if v.is_zero() {
        0
    } else if v.is_positive() {
        1
    } else {
        -1
    }
}

/// Samples every non-constant denominator on a ~1000-node grid of the box.
///
/// Fails on an exact zero at a node, or when the real and imaginary parts
/// both change sign over the corners of one grid cell (for real
/// denominators: any sign change). Zeros that produce no sign change, such
/// as double roots between nodes, are not detected.
pub fn check_pole_free(sys: &OperatorSystem) -> Result<(), SystemError> {
    let mut dens: Vec<(String, Poly)> = Vec::new();
    let mut push = |what: String, d: &Poly| {
        if !d.is_constant() && !dens.iter().any(|(_, e)| e == d) {
            dens.push((what, d.clone()));
        }
    };
    for (j, op) in sys.ops.iter().enumerate() {
        for (v, a) in op.a.iter().enumerate() {
            push(format!("operators[{j}].principal[{v}]"), a.den());
        }
        push(format!("operators[{j}].zero_order"), op.a0.den());
    }
    for (name, t) in [("c", &sys.c), ("d", &sys.d), ("e", &sys.e)] {
        if let Some(t) = t {
            for (j, row) in t.iter().enumerate() {
                for (k, col) in row.iter().enumerate() {
                    for (l, f) in col.iter().enumerate() {
                        push(format!("{name}[{j}][{k}][{l}]"), f.den());
                    }
                }
            }
        }
    }
    if dens.is_empty() {
        return Ok(());
    }
    let (counts, points) = sample_grid(&sys.bbox, 1000);
    let exact: Vec<Vec<GaussRat>> = points
        .iter()
        .map(|p| p.iter().map(|&x| GaussRat::from_f64(x).expect("finite box")).collect())
        .collect();
    let n = sys.n;
    let mut strides = vec![1usize; n];
    for ax in (0..n.saturating_sub(1)).rev() {
        strides[ax] = strides[ax + 1] * counts[ax + 1];
    }
    for (what, den) in &dens {
        let vals: Vec<GaussRat> = exact.iter().map(|x| den.eval_exact(x)).collect();
        for (i, v) in vals.iter().enumerate() {
            if v.is_zero() {
                return Err(SystemError::PoleInBox { what: what.clone(), point: points[i].clone() });
            }
        }
        // Every cell is spanned by a lower corner and its 2ⁿ neighbours.
        for (i, _) in vals.iter().enumerate() {
            if (0..n).any(|ax| (i / strides[ax]) % counts[ax] + 1 == counts[ax]) {
                continue;
            }
            let (mut re, mut im) = ((i8::MAX, i8::MIN), (i8::MAX, i8::MIN));
            for corner in 0..(1usize << n) {
                let off: usize = (0..n).filter(|ax| corner >> ax & 1 == 1).map(|ax| strides[ax]).sum();
                let v = &vals[i + off];
                let (a, b) = (sign(&v.re), sign(&v.im));
                re = (re.0.min(a), re.1.max(a));
                im = (im.0.min(b), im.1.max(b));
            }
            if re.0 <= 0 && re.1 >= 0 && im.0 <= 0 && im.1 >= 0 {
                let far = i + strides.iter().sum::<usize>();
                let mid: Vec<f64> = points[i].iter().zip(&points[far]).map(|(a, b)| 0.5 * (a + b)).collect();
                return Err(SystemError::PoleInBox { what: what.clone(), point: mid });
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{default_names, parse_ratfun};
    use crate::diffop::DiffOp;

    fn sys_with(coef: &str, bbox: Vec<(f64, f64)>) -> OperatorSystem {
        let names = default_names(2);
        let f = parse_ratfun(coef, &names).unwrap();
        let op = DiffOp::new(vec![f, parse_ratfun("1", &names).unwrap()], parse_ratfun("0", &names).unwrap());
        OperatorSystem::new(vec![op]).unwrap().with_box(bbox).unwrap()
    }

    #[test]
    fn grid_size() {
        let (counts, pts) = sample_grid(&[(0.0, 1.0), (0.0, 1.0), (0.0, 1.0)], 1000);
        assert_eq!(counts, vec![10, 10, 10]);
        assert_eq!(pts.len(), 1000);
        assert_eq!(pts[1], vec![0.0, 0.0, 1.0 / 9.0]);
    }

    #[test]
    fn detects_real_sign_change_and_complex_zero() {
        assert!(check_pole_free(&sys_with("1/(x1 - 1/3)", vec![(-1.0, 1.0); 2])).is_err());
        assert!(check_pole_free(&sys_with("1/(x1 - 2)", vec![(-1.0, 1.0); 2])).is_ok());
        assert!(check_pole_free(&sys_with("1/(x1 + i x2 - 2)", vec![(-1.0, 1.0); 2])).is_ok());
        assert!(check_pole_free(&sys_with("1/(x1 + i x2 - 1/7)", vec![(-1.0, 1.0); 2])).is_err());
        assert!(check_pole_free(&sys_with("1/(x1^2 + x2^2 + 1)", vec![(-1.0, 1.0); 2])).is_ok());
    }
}
