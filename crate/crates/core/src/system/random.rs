use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{zero_table, OperatorSystem};
use crate::algebra::{GaussRat, Monomial, Poly, RatFun};
use crate::diffop::DiffOp;

/// `P'_i = Σ_k G_i^k ∂_k` for a unipotent upper-triangular `r × r` matrix `G`
/// of polynomials in `n` variables, with exact structure constants.
pub fn gauge_system(n: usize, g: &[Vec<Poly>]) -> OperatorSystem {
    let r = g.len();
    assert!(r <= n, "need r ≤ n");
    for (i, row) in g.iter().enumerate() {
        assert_eq!(row.len(), r);
        assert!(row[i].is_one(), "G must be unipotent");
        assert!(row[..i].iter().all(Poly::is_zero), "G must be upper triangular");
    }
    let ops: Vec<DiffOp> = g
        .iter()
        .map(|row| {
            let mut op = DiffOp::zero(n);
            for (k, gk) in row.iter().enumerate() {
                op.a[k] = RatFun::from_poly(gk.clone());
            }
            op
        })
        .collect();

    // Inverse of a unipotent upper-triangular matrix by back substitution.
    let mut ginv = vec![vec![Poly::zero(n); r]; r];
    for i in (0..r).rev() {
        ginv[i][i] = Poly::one(n);
        for j in i + 1..r {
            let mut acc = Poly::zero(n);
            for k in i + 1..=j {
                acc = &acc - &(&g[i][k] * &ginv[k][j]);
            }
            ginv[i][j] = acc;
        }
    }

    let mut c = zero_table(r, n);
    for i in 0..r {
        for j in i + 1..r {
            // [P'_i, P'_j] = Σ_m B^m ∂_m and ∂_m = Σ_l (G⁻¹)_m^l P'_l.
            let b: Vec<Poly> = (0..r)
                .map(|m| {
                    let mut acc = Poly::zero(n);
                    for k in 0..r {
                        acc = &acc + &(&g[i][k] * &g[j][m].derivative(k));
                        acc = &acc - &(&g[j][k] * &g[i][m].derivative(k));
                    }
                    acc
                })
                .collect();
            for l in 0..r {
                let mut acc = Poly::zero(n);
                for m in 0..r {
                    acc = &acc + &(&b[m] * &ginv[m][l]);
                }
                let f = RatFun::from_poly(acc);
                c[j][i][l] = -&f;
                c[i][j][l] = f;
            }
        }
    }
    OperatorSystem::new(ops).expect("nonempty system").with_c(c).expect("antisymmetric by construction")
}

/// Seeded involutive system: a sparse random unipotent gauge of `∂₁…∂_r`
/// with polynomial entries of total degree ≤ `deg`.
pub fn random_involutive(seed: u64, n: usize, r: usize, deg: usize) -> OperatorSystem {
    assert!(r >= 1 && r <= n && n <= 4, "need 1 ≤ r ≤ n ≤ 4");
    assert!(deg <= 2, "need deg ≤ 2");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let coeffs = [
        GaussRat::from_int(1),
        GaussRat::from_int(-1),
        GaussRat::from_int(2),
        GaussRat::from_int(-2),
        GaussRat::i(),
        -GaussRat::i(),
    ];
    let mut g = vec![vec![Poly::zero(n); r]; r];
    for i in 0..r {
        g[i][i] = Poly::one(n);
        for k in i + 1..r {
            if !rng.random_bool(0.6) {
                continue;
            }
            let nterms = rng.random_range(1..=2);
            let mut terms = Vec::new();
            for _ in 0..nterms {
                let d = rng.random_range(0..=deg);
                let mut exps = vec![0u32; n];
                for _ in 0..d {
                    exps[rng.random_range(0..n)] += 1;
                }
                let c = coeffs[rng.random_range(0..coeffs.len())].clone();
                terms.push((Monomial::from_exponents(&exps), c));
            }
            g[i][k] = Poly::from_terms(n, terms);
        }
    }
    gauge_system(n, &g)
}
