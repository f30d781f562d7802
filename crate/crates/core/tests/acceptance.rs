//! Acceptance suite. Every test prints one `PASS`/`FAIL` line and then
//! asserts it, so `cargo test --test acceptance -- --nocapture` doubles as
//! a report.

use std::time::{Duration, Instant};

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use involute::algebra::{GaussRat, RatFun};
use involute::complex::certificate::{divergence_certificate, random_cochain, random_poly};
use involute::complex::decomposition::check_cancellations;
use involute::complex::{verify_adjoint, verify_complex};
use involute::cousin::{split, Cover, CousinDatum, SplitOptions};
use involute::diffop::DiffOp;
use involute::multiindex::{enumerate, position_sign, Cochain};
use involute::qform::{
    eigen_hermitian, form_value, induced_matrix, max_abs_diff, qform_matrix, subset_sums, CMatrix, FormSource,
};
use involute::solver::{discretize_p, solve_level, Grid, GridField};
use involute::system::builtin::{derham, dolbeault, lewy};
use involute::system::{check_a1, check_a2, check_a3, check_rank, random_involutive, A3Outcome, OperatorSystem, RankMode};

fn verdict(id: u32, name: &str, pass: bool, elapsed: Duration, detail: String) {
    let tag = if pass { "PASS" } else { "FAIL" };
    println!("[{tag}] criterion {id:>2} {name}: {detail} ({:.2} s)", elapsed.as_secs_f64());
    assert!(pass, "criterion {id} ({name}) failed: {detail}");
}

fn sci(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x:.2e}")).collect();
    format!("[{}]", parts.join(", "))
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// derham(3), dolbeault(2) and 20 seeded gauge systems with `n ≤ 4`,
/// `r ≤ 3`, coefficient degree ≤ 2.
fn exact_suite() -> Vec<(String, OperatorSystem)> {
    let mut out = vec![
        ("derham(3)".to_string(), derham(3).unwrap()),
        ("dolbeault(2)".to_string(), dolbeault(2).unwrap()),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for seed in 0..20u64 {
        let n = rng.random_range(2..=4);
        let r = rng.random_range(2..=n.min(3));
        let deg = rng.random_range(1..=2);
        out.push((format!("gauge(seed={seed},n={n},r={r},deg={deg})"), random_involutive(seed, n, r, deg)));
    }
    out
}

#[test]
fn criterion_01_complex_property() {
    let t = Instant::now();
    let mut levels = 0;
    let mut coefficients = 0;
    let mut failure = None;
    for (name, sys) in exact_suite() {
        let qs: Vec<usize> = match name.as_str() {
            "derham(3)" => vec![1, 2],
            "dolbeault(2)" => vec![1],
            _ => (1..=sys.r).collect(),
        };
        for q in qs {
            match verify_complex(&sys, q) {
                Ok(p) => {
                    levels += 1;
                    coefficients += p.coefficients_checked;
                }
                Err(e) => failure = failure.or(Some(format!("{name} q={q}: {e}"))),
            }
        }
    }
    let elapsed = t.elapsed();
    let pass = failure.is_none() && elapsed < Duration::from_secs(60);
    let detail = failure
        .unwrap_or_else(|| format!("{levels} levels, {coefficients} second-order coefficients exactly zero"));
    verdict(1, "complex property", pass, elapsed, detail);
}

#[test]
fn criterion_02_adjoint_identity() {
    let t = Instant::now();
    let suite = exact_suite();
    let mut entries = 0;
    let mut failure = None;
    for (name, sys) in &suite {
        for q in 1..=sys.r {
            match verify_adjoint(sys, q) {
                Ok(p) => entries += p.entries_compared,
                Err(e) => failure = failure.or(Some(format!("{name} q={q}: {e}"))),
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut certified = 0;
    for k in 0..50 {
        let (name, sys) = &suite[k % suite.len()];
        let q = rng.random_range(1..=sys.r);
        let g = random_cochain(&mut rng, q - 1, sys.r, sys.n, 2);
        let f = random_cochain(&mut rng, q, sys.r, sys.n, 2);
        match divergence_certificate(sys, q, &g, &f) {
            Ok(cert) if cert.holds() => certified += 1,
            Ok(cert) => {
                failure = failure.or(Some(format!(
                    "{name} q={q}: certificate residual {}",
                    cert.residual.display(&sys.varnames)
                )))
            }
            Err(e) => failure = failure.or(Some(format!("{name} q={q}: {e}"))),
        }
    }
    let elapsed = t.elapsed();
    let pass = failure.is_none() && certified == 50 && elapsed < Duration::from_secs(30);
    let detail = failure.unwrap_or_else(|| format!("{entries} adjoint entries equal, {certified}/50 certificates exact"));
    verdict(2, "adjoint identity", pass, elapsed, detail);
}

fn random_hermitian(rng: &mut impl Rng, r: usize) -> CMatrix {
    let mut h = vec![vec![c(0.0, 0.0); r]; r];
    for j in 0..r {
        h[j][j] = c(rng.random_range(-1.0..1.0), 0.0);
        for k in j + 1..r {
            let v = c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            h[j][k] = v;
            h[k][j] = v.conj();
        }
    }
    h
}

fn oracle_eigenvalues(h: &CMatrix) -> Vec<f64> {
    let m = DMatrix::from_fn(h.len(), h.len(), |i, j| h[i][j]);
    let mut ev: Vec<f64> = m.symmetric_eigen().eigenvalues.iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

#[test]
fn criterion_03_eigenvalue_law() {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let mut worst: f64 = 0.0;
    let mut cases = 0;
    let mut size_mismatch = false;
    for _ in 0..100 {
        let r = rng.random_range(1..=5);
        let h = random_hermitian(&mut rng, r);
        let lambda = oracle_eigenvalues(&h);
        for q in 1..=r {
            let induced = induced_matrix(&h, q);
            let ours = eigen_hermitian(&induced).unwrap();
            let oracle = oracle_eigenvalues(&induced);
            let predicted = subset_sums(&lambda, q);
            size_mismatch |= ours.len() != predicted.len() || oracle.len() != predicted.len();
            for ((a, b), p) in ours.iter().zip(&oracle).zip(&predicted) {
                worst = worst.max((a - p).abs()).max((b - p).abs());
            }
            cases += 1;
        }
    }
    let elapsed = t.elapsed();
    let pass = !size_mismatch && worst <= 1e-9 && elapsed < Duration::from_secs(10);
    verdict(3, "eigenvalue law", pass, elapsed, format!("{cases} (matrix, q) cases, max deviation {worst:.2e}"));
}

/// Seeded involutive systems in three flavours: a plain gauge, the gauge
/// conjugated by `e^h` (adds zero-order terms `p_j h`), and the gauge with
/// each operator rescaled by a nonvanishing real polynomial.
fn rank_suite_system(seed: u64) -> OperatorSystem {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let n = rng.random_range(2..=4);
    let r = rng.random_range(2..=n.min(3));
    let base = random_involutive(seed, n, r, rng.random_range(1..=2));
    let ops: Vec<DiffOp> = match seed % 3 {
        0 => base.ops.clone(),
        1 => {
            let h = random_poly(&mut rng, n, 2, 3);
            base.ops.iter().map(|p| DiffOp::new(p.a.clone(), &p.a0 + &p.apply_principal(&h))).collect()
        }
        _ => base
            .ops
            .iter()
            .enumerate()
            .map(|(j, p)| {
                let x = RatFun::var(n, j % n);
                let f = &RatFun::one(n) + &(&x * &x).scale(&GaussRat::from_int(rng.random_range(1..=3)));
                p.scale(&f)
            })
            .collect(),
    };
    OperatorSystem::new(ops).unwrap()
}

#[test]
fn criterion_04_rank_implies_a2() {
    let t = Instant::now();
    let mut applicable = 0;
    let mut failure = None;
    for seed in 0..50u64 {
        let mut sys = rank_suite_system(seed);
        assert!(sys.c.is_none());
        let rank = check_rank(&sys, RankMode::IncludeZeroOrder, seed, 64);
        if !rank.full() || !check_a1(&sys).unwrap().pass {
            continue;
        }
        applicable += 1;
        sys.ensure_c().unwrap();
        let a2 = check_a2(&sys).unwrap();
        if !a2.pass {
            failure = failure.or(Some(format!("seed {seed}: {:?}", a2.witness)));
        }
    }
    let elapsed = t.elapsed();
    let pass = failure.is_none() && applicable > 0;
    let detail = failure.unwrap_or_else(|| format!("{applicable}/50 seeded systems full rank with a1, all pass a2"));
    verdict(4, "full rank and a1 imply a2", pass, elapsed, detail);
}

#[test]
fn criterion_05_lewy_rejected() {
    let t = Instant::now();
    let sys = lewy().unwrap();
    let mut expected = DiffOp::zero(3);
    expected.a[2] = RatFun::constant(3, GaussRat::from_ints(0, 2));
    let (pass, detail) = match check_a3(&sys) {
        A3Outcome::NotInSpan { pair, residual } => {
            let text = format!("pair {:?}, residual {}", (pair.0 + 1, pair.1 + 1), involute::system::format_op(&residual, &sys.varnames));
            (residual == expected, text)
        }
        A3Outcome::InSpan { .. } => (false, "bracket reported in span".to_string()),
    };
    verdict(5, "lewy negative control", pass, t.elapsed(), detail);
}

/// First two seeded square gauge systems whose (A3) data exist.
fn a3_gauge_systems() -> Vec<(String, OperatorSystem)> {
    let mut out = Vec::new();
    for (n, seed) in [(2usize, 0u64..), (3, 100..)].into_iter().flat_map(|(n, s)| s.take(50).map(move |k| (n, k))) {
        if out.iter().any(|(_, s): &(String, OperatorSystem)| s.n == n) {
            continue;
        }
        let mut sys = random_involutive(seed, n, n, 2);
        if sys.ensure_a3().is_ok() {
            out.push((format!("gauge(seed={seed},n={n},r={n})"), sys));
        }
    }
    out
}

#[test]
fn criterion_06_use_e_matches_use_d() {
    let t = Instant::now();
    let mut systems = vec![("dolbeault(2)".to_string(), dolbeault(2).unwrap())];
    systems.extend(a3_gauge_systems());
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst: f64 = 0.0;
    let mut samples = 0;
    for (_, sys) in &systems {
        let n = sys.n;
        // φ = |x|² + x₁x₂ + x₁³/3, real with a nonconstant Hessian.
        let x1 = RatFun::var(n, 0);
        let mut phi = &x1 * &RatFun::var(n, 1);
        for v in 0..n {
            phi = &phi + &RatFun::var(n, v).pow(2);
        }
        phi = &phi + &x1.pow(3).scale(&GaussRat::from_frac(1, 3));
        for _ in 0..1000 {
            let x: Vec<f64> = sys.bbox.iter().map(|&(lo, hi)| rng.random_range(lo..hi)).collect();
            let he = qform_matrix(sys, &phi, &x, FormSource::UseE).unwrap().h;
            let hd = qform_matrix(sys, &phi, &x, FormSource::UseD).unwrap().h;
            let xi: Vec<Complex64> =
                (0..sys.r).map(|_| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect();
            worst = worst.max(max_abs_diff(&he, &hd)).max((form_value(&he, &xi) - form_value(&hd, &xi)).abs());
            samples += 1;
        }
    }
    let names: Vec<&str> = systems.iter().map(|(n, _)| n.as_str()).collect();
    let pass = systems.len() == 3 && worst <= 1e-9;
    verdict(
        6,
        "use_e and use_d forms agree",
        pass,
        t.elapsed(),
        format!("{samples} samples on {names:?}, max difference {worst:.2e}"),
    );
}

#[test]
fn criterion_07_solver_convergence() {
    let t = Instant::now();
    let sys = dolbeault(1).unwrap();
    let zbar = |x: &[f64]| c(x[0], -x[1]);
    // u₀ = z̄²/2 + e^z satisfies ∂̄u₀ = z̄; the e^z part is not resolved
    // exactly by the difference quotients.
    let u0 = |x: &[f64]| zbar(x) * zbar(x) * 0.5 + c(x[0], x[1]).exp();
    let mut truncation = Vec::new();
    for n in [32, 64, 128] {
        let grid = Grid::new(vec![(-1.0, 1.0); 2], n).unwrap();
        let u = GridField::from_fn(0, 1, &grid, |_, x| u0(x)).flatten();
        let f = GridField::from_fn(1, 1, &grid, |_, x| zbar(x)).flatten();
        let du = discretize_p(&sys, 1, &grid).unwrap().matvec(&u);
        truncation.push(du.iter().zip(&f).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max));
    }
    let orders: Vec<f64> = truncation.windows(2).map(|w| (w[0] / w[1]).log2()).collect();

    let grid = Grid::new(vec![(-1.0, 1.0); 2], 64).unwrap();
    let f = GridField::from_fn(1, 1, &grid, |_, x| zbar(x));
    let phi = &RatFun::var(2, 0).pow(2) + &RatFun::var(2, 1).pow(2);
    let sol = solve_level(&sys, 1, &f, Some(&phi), 1e-10, None).unwrap();
    let elapsed = t.elapsed();
    let pass = orders.iter().all(|&p| p >= 1.8)
        && sol.report.converged
        && sol.report.residual <= 1e-6
        && elapsed < Duration::from_secs(30);
    verdict(
        7,
        "solver convergence",
        pass,
        elapsed,
        format!(
            "truncation {}, orders {orders:.3?}, weighted residual at N=64 {:.2e} after {} iterations",
            sci(&truncation),
            sol.report.residual,
            sol.report.iterations
        ),
    );
}

#[test]
fn criterion_08_de_rham_level_one() {
    let t = Instant::now();
    let sys = derham(2).unwrap();
    let grid = Grid::new(vec![(-1.0, 1.0); 2], 32).unwrap();
    let exact = GridField::from_fn(1, 2, &grid, |j, x| c(if j.entries() == [1] { x[1] } else { x[0] }, 0.0));
    let obstructed = GridField::from_fn(1, 2, &grid, |j, x| c(if j.entries() == [1] { x[1] } else { 0.0 }, 0.0));
    let good = solve_level(&sys, 1, &exact, None, 1e-10, None).unwrap().report;
    let bad = solve_level(&sys, 1, &obstructed, None, 1e-10, None).unwrap().report;
    let pass = good.residual <= 1e-6 && bad.residual >= 1e-2;
    verdict(
        8,
        "de Rham level-1 exactness",
        pass,
        t.elapsed(),
        format!("(x2, x1) residual {:.2e}, (x2, 0) residual {:.2e}", good.residual, bad.residual),
    );
}

#[test]
fn criterion_09_cousin_gluing() {
    let t = Instant::now();
    let sys = dolbeault(1).unwrap();
    let grid = Grid::new(vec![(-1.0, 1.0); 2], 64).unwrap();
    let cover = Cover::new(grid, vec![vec![(-1.0, 0.0), (-1.0, 1.0)], vec![(-0.5, 1.0), (-1.0, 1.0)]]).unwrap();
    let datum = CousinDatum::from_fn(&cover, |_, _, x| (c(x[0], x[1]) - c(2.0, 0.0)).inv());
    let opts = SplitOptions { solver_tol: 1e-8, glue_tol: 1e-3, maxit: None };
    let s = split(&sys, &cover, &datum, None, opts).unwrap();
    let rep = &s.report;
    let elapsed = t.elapsed();
    let pass = rep.splitting_defect <= 5e-3
        && rep.residual_inf.iter().all(|&r| r <= 1e-4)
        && elapsed < Duration::from_secs(60);
    verdict(
        9,
        "Cousin gluing",
        pass,
        elapsed,
        format!(
            "splitting defect {:.2e}, max residuals {}, L2 residuals {}",
            rep.splitting_defect,
            sci(&rep.residual_inf),
            sci(&rep.residual_l2)
        ),
    );
}

fn monomial_probes(n: usize) -> Vec<RatFun> {
    let mut out = vec![RatFun::one(n)];
    for a in 0..n {
        out.push(RatFun::var(n, a));
        for b in a..n {
            out.push(&RatFun::var(n, a) * &RatFun::var(n, b));
        }
    }
    out
}

#[test]
fn criterion_10_combinatorial_identities() {
    let t = Instant::now();
    let r = 3;
    // Removing j then k from K gives the opposite sign to removing k then j.
    let mut sign_cases = 0;
    let mut sign_ok = true;
    for size in 2..=r {
        for kk in enumerate(r, size) {
            for &k in kk.entries() {
                for &j in kk.entries().iter().filter(|&&j| j > k) {
                    let both = kk.without(j).without(k);
                    let lhs = position_sign(j, &kk.without(j)) * position_sign(k, &both);
                    let rhs = position_sign(k, &kk.without(k)) * position_sign(j, &both);
                    sign_ok &= lhs == -rhs;
                    sign_cases += 1;
                }
            }
        }
    }

    let mut systems = vec![derham(3).unwrap()];
    systems.extend((0..3).map(|s| random_involutive(s, 3, 3, 2)));
    systems.extend((3..5).map(|s| random_involutive(s, 4, 3, 2)));
    let mut probes = 0;
    let mut failure = None;
    for (idx, sys) in systems.iter().enumerate() {
        let monos = monomial_probes(sys.n);
        for q in 1..r {
            for ii in enumerate(r, q - 1) {
                for g in &monos {
                    let mut f = Cochain::zero(q - 1, r, sys.n);
                    f.set(ii.clone(), g.clone());
                    let res = check_cancellations(sys, q, &f).unwrap();
                    if !res.all() {
                        failure = failure.or(Some(format!("system {idx} q={q} slot {ii:?}: {res:?}")));
                    }
                    probes += 1;
                }
            }
        }
    }
    let pass = sign_ok && failure.is_none();
    let detail = failure.unwrap_or_else(|| {
        format!("{sign_cases} sign exchanges, {probes} probes with every partial-sum cancellation exact")
    });
    verdict(10, "combinatorial identities", pass, t.elapsed(), detail);
}
