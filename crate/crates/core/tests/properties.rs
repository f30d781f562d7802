use num_complex::Complex64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use involute::algebra::RatFun;
use involute::complex::certificate::random_poly;
use involute::cousin::{partition_of_unity, Cover};
use involute::diffop::DiffOp;
use involute::multiindex::{binomial, enumerate, perm_sign, position_sign, MultiIndex};
use involute::qform::{eigen_hermitian, induced_matrix, induced_trace_factor, CMatrix};
use involute::solver::Grid;
use involute::system::{check_a1, random_involutive, OperatorSystem, SystemFile};

fn poly(seed: u64, n: usize, deg: usize) -> RatFun {
    random_poly(&mut ChaCha8Rng::seed_from_u64(seed), n, deg, 3)
}

fn field(seed: u64, n: usize) -> DiffOp {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = (0..n).map(|_| random_poly(&mut rng, n, 2, 2)).collect();
    DiffOp::new(a, random_poly(&mut rng, n, 1, 2))
}

fn hermitian(entries: &[(f64, f64)], r: usize) -> CMatrix {
    let mut h = vec![vec![Complex64::new(0.0, 0.0); r]; r];
    let mut it = entries.iter();
    for j in 0..r {
        h[j][j] = Complex64::new(it.next().unwrap().0, 0.0);
        for k in j + 1..r {
            let &(re, im) = it.next().unwrap();
            h[j][k] = Complex64::new(re, im);
            h[k][j] = Complex64::new(re, -im);
        }
    }
    h
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn ring_laws(a in any::<u64>(), b in any::<u64>(), c in any::<u64>()) {
        let (f, g, h) = (poly(a, 3, 2), poly(b, 3, 2), poly(c, 3, 2));
        prop_assert_eq!(&f * &g, &g * &f);
        prop_assert_eq!(&f * &(&g + &h), &(&f * &g) + &(&f * &h));
        prop_assert_eq!(&(&f - &g) + &g, f.clone());
        prop_assert_eq!(f.conj().conj(), f);
    }

    #[test]
    fn leibniz_and_quotient_rules(a in any::<u64>(), b in any::<u64>(), v in 0usize..3) {
        let (f, g) = (poly(a, 3, 2), poly(b, 3, 2));
        prop_assert_eq!((&f * &g).derivative(v), &(&f.derivative(v) * &g) + &(&f * &g.derivative(v)));
        if let Some(ginv) = (&g + &RatFun::one(3)).inv() {
            // (1/g)' = −g'/g²
            let lhs = ginv.derivative(v);
            let rhs = -&(&g.derivative(v) * &(&ginv * &ginv));
            prop_assert_eq!(lhs, rhs);
        }
    }

    #[test]
    fn bracket_is_a_lie_bracket(a in any::<u64>(), b in any::<u64>(), c in any::<u64>()) {
        let (p, q, r) = (field(a, 2), field(b, 2), field(c, 2));
        prop_assert_eq!(p.bracket(&q), -&q.bracket(&p));
        let jacobi = &(&p.bracket(&q.bracket(&r)) + &q.bracket(&r.bracket(&p))) + &r.bracket(&p.bracket(&q));
        prop_assert!(jacobi.is_zero());
    }

    #[test]
    fn bracket_acts_as_commutator(a in any::<u64>(), b in any::<u64>(), c in any::<u64>()) {
        let (p, q) = (field(a, 2), field(b, 2));
        let f = poly(c, 2, 3);
        let pb = p.principal();
        let qb = q.principal();
        prop_assert_eq!(pb.bracket(&qb).apply(&f), &pb.apply(&qb.apply(&f)) - &qb.apply(&pb.apply(&f)));
    }

    #[test]
    fn insertion_signs_match_permutations(r in 2usize..7, pick in any::<u64>()) {
        let all: Vec<MultiIndex> = (0..=r).flat_map(|q| enumerate(r, q)).collect();
        let j = &all[(pick as usize) % all.len()];
        for k in (1..=r).filter(|k| !j.contains(*k)) {
            let sorted = j.with(k).unwrap();
            let mut front = vec![k];
            front.extend_from_slice(j.entries());
            prop_assert_eq!(perm_sign(&front, sorted.entries()).unwrap(), position_sign(k, j));
        }
    }

    #[test]
    fn enumeration_is_sorted_and_complete(r in 0usize..8, q in 0usize..8) {
        prop_assume!(q <= r);
        let e = enumerate(r, q);
        prop_assert_eq!(e.len(), binomial(r, q));
        prop_assert!(e.windows(2).all(|w| w[0] < w[1]));
        for j in &e {
            prop_assert_eq!(&MultiIndex::from_key(&j.key()).unwrap(), j);
        }
    }

    #[test]
    fn induced_trace_and_psd(r in 1usize..6, q in 1usize..6, vals in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 15)) {
        prop_assume!(q <= r);
        let h = hermitian(&vals, r);
        let ind = induced_matrix(&h, q);
        let tr: f64 = (0..r).map(|j| h[j][j].re).sum();
        let tr_ind: f64 = (0..ind.len()).map(|j| ind[j][j].re).sum();
        prop_assert!((tr_ind - induced_trace_factor(r, q) as f64 * tr).abs() < 1e-12);

        // A positive semidefinite form induces positive semidefinite forms.
        let lambda = eigen_hermitian(&h).unwrap();
        let shift = Complex64::new(-lambda[0], 0.0);
        let mut psd = h.clone();
        for (j, row) in psd.iter_mut().enumerate() {
            row[j] += shift;
        }
        let min = eigen_hermitian(&induced_matrix(&psd, q)).unwrap()[0];
        prop_assert!(min > -1e-10);
    }

    #[test]
    fn partition_sums_to_one(cut in -0.6f64..0.6, overlap in 0.15f64..0.5, n in 12usize..33) {
        let grid = Grid::new(vec![(-1.0, 1.0); 2], n).unwrap();
        let boxes = vec![
            vec![(-1.0, cut + overlap / 2.0), (-1.0, 1.0)],
            vec![(cut - overlap / 2.0, 1.0), (-1.0, 1.0)],
        ];
        let cover = Cover::new(grid, boxes).unwrap();
        let h = partition_of_unity(&cover).unwrap();
        for k in 0..cover.grid.len() {
            let s: f64 = h.iter().map(|ha| ha[k]).sum();
            prop_assert!((s - 1.0).abs() < 1e-12);
            for (a, ha) in h.iter().enumerate() {
                prop_assert!(ha[k] >= 0.0);
                prop_assert!(ha[k] == 0.0 || cover.mask(a)[k]);
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn generated_systems_survive_json(seed in any::<u64>(), n in 2usize..5, deg in 0usize..3) {
        let sys = random_involutive(seed, n, 2.min(n), deg);
        let back: OperatorSystem = SystemFile::parse(&SystemFile::to_json(&sys)).unwrap();
        prop_assert_eq!(&back.ops, &sys.ops);
        prop_assert_eq!(&back.c, &sys.c);
        prop_assert!(check_a1(&back).unwrap().pass);
    }
}
