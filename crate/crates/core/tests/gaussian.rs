use majsos::algebra::{Polynomial, C64};
use majsos::gaussian::*;
use majsos::linalg::{self, CMat, RMat};
use majsos::{repr, syk};
use proptest::prelude::*;

fn random_antisym(n: usize, seed: u64) -> RMat {
    let mut s = syk::NormalStream::new(seed, 11);
    let mut a = RMat::zeros(n, n);
    for i in 0..n {
        for j in i + 1..n {
            let v = s.next();
            a.write(i, j, v);
            a.write(j, i, -v);
        }
    }
    a
}

fn random_state_cov(n: usize, seed: u64) -> CovarianceMatrix {
    let a = random_antisym(n, seed);
    let c = CovarianceMatrix::new(a.clone()).unwrap();
    let u = syk::NormalStream::new(seed, 12).uniform();
    CovarianceMatrix::new(&a * faer::scale(u / c.opnorm())).unwrap()
}

fn dense_expect(rho: &repr::DenseOperator, rep: &repr::GraphReduction, s: &[usize]) -> C64 {
    let p = Polynomial::monomial(rep.n, s.to_vec(), C64::new(1.0, 0.0)).unwrap();
    let op = repr::represent(&p, rep).unwrap_or_else(|_| {
        // non-Hermitian monomials: build the matrix directly
        repr::DenseOperator { dim: rep.dim(), mat: rep.monomial(s).to_dense(rep.qubits), hermitian: false }
    });
    linalg::ntrace_prod(&rho.mat, &op.mat)
}

#[test]
fn wick_matches_dense_states() {
    for n in [6usize, 8] {
        let rep = repr::build_gamma_representation(n).unwrap();
        for seed in 0..4 {
            let cov = random_state_cov(n, seed);
            let rho = dense_gaussian_state(&cov, &rep).unwrap();
            assert!((rho.ntrace().re - 1.0).abs() < 1e-10);
            let ev = linalg::herm_eigvals(&rho.mat);
            assert!(ev[0] >= -1e-10);
            for s in [vec![1, 2], vec![2, 5], vec![1, 3, 4, 6], vec![1, 2, 3, 4, 5, 6]] {
                let w = wick_expectation(&cov, &s);
                let d = dense_expect(&rho, &rep, &s);
                assert!((w - d).norm() < 1e-10, "n={n} S={s:?}: {w} vs {d}");
            }
            // Σ_jk = tr(ρ iχ_jχ_k)
            let d = dense_expect(&rho, &rep, &[2, 3]) * C64::new(0.0, 1.0);
            assert!((d.re - cov.sigma.read(1, 2)).abs() < 1e-10);
        }
    }
}

#[test]
fn ket0_and_maximally_mixed() {
    let n = 6;
    let rep = repr::build_gamma_representation(n).unwrap();
    let rho = dense_gaussian_state(&CovarianceMatrix::blocks(&[-1.0; 3]), &rep).unwrap();
    for r in 0..8 {
        for c in 0..8 {
            let want = if r == 0 && c == 0 { 8.0 } else { 0.0 };
            assert!((rho.mat.read(r, c).re - want).abs() < 1e-12 && rho.mat.read(r, c).im.abs() < 1e-12);
        }
    }
    let id = dense_gaussian_state(&CovarianceMatrix::zero(n), &rep).unwrap();
    assert!(linalg::max_abs_diff(&id.mat, &CMat::identity(8, 8)) < 1e-14);
}

#[test]
fn four_point_wick_example() {
    let cov = CovarianceMatrix::blocks(&[1.0, 1.0]);
    assert!((wick_expectation(&cov, &[1, 2, 3, 4]) - C64::new(-1.0, 0.0)).norm() < 1e-15);
    assert_eq!(wick_expectation(&cov, &[1, 2, 3]), C64::new(0.0, 0.0));
    let h = Polynomial::monomial(4, vec![1, 2, 3, 4], C64::new(1.0, 0.0)).unwrap();
    assert_eq!(expectation_deg4(&CovarianceMatrix::zero(4), &h).unwrap(), 0.0);
}

#[test]
fn pair_square_value_and_sdp_matrix() {
    let cov = CovarianceMatrix::blocks(&[1.0; 4]);
    let h1 = syk::pair_square(8).unwrap();
    assert!((expectation(&cov, &h1).unwrap().re - 16.0).abs() < 1e-12);
    let quartic = h1.homogeneous_part(4);
    let hm = build_sdp_objective(&quartic).unwrap();
    let v = RMat::from_fn(64, 1, |r, _| cov.sigma.read(r / 8, r % 8));
    let trh = (v.transpose() * &hm * &v).read(0, 0);
    assert!((trh + 4.0 - 16.0).abs() < 1e-12);
}

#[test]
fn sdp_objective_consistency() {
    let h = syk::sample_syk(8, 4, 6).unwrap().h;
    let hm = build_sdp_objective(&h).unwrap();
    for seed in 0..20 {
        let cov = random_state_cov(8, 100 + seed);
        let v = RMat::from_fn(64, 1, |r, _| cov.sigma.read(r / 8, r % 8));
        let a = (v.transpose() * &hm * &v).read(0, 0);
        let b = expectation_deg4(&cov, &h).unwrap();
        assert!((a - b).abs() < 1e-10);
    }
    let single = Polynomial::monomial(6, vec![1, 2, 4, 6], C64::new(1.0, 0.0)).unwrap();
    let hs = build_sdp_objective(&single).unwrap();
    let mut nz = 0;
    for r in 0..36 {
        for c in 0..36 {
            if hs.read(r, c) != 0.0 {
                nz += 1;
            }
        }
    }
    assert_eq!(nz, 6);
}

#[test]
fn quadratic_exact() {
    let n = 8;
    let mut h2 = Polynomial::zero(n);
    for j in 0..n / 2 {
        h2.add_term(vec![2 * j + 1, 2 * j + 2], C64::new(0.0, -1.0));
    }
    assert!((solve_quadratic_exact(&h2).unwrap().opt_value - 4.0).abs() < 1e-12);

    let rep = repr::build_gamma_representation(4).unwrap();
    let h = Polynomial::monomial(4, vec![1, 2], C64::new(0.0, 1.0)).unwrap();
    let sol = solve_quadratic_exact(&h).unwrap();
    assert!((sol.opt_value - 1.0).abs() < 1e-12);
    let rho = dense_gaussian_state(&sol.cov, &rep).unwrap();
    let e = linalg::ntrace_prod(&rho.mat, &repr::represent(&h, &rep).unwrap().mat);
    assert!((e.re - 1.0).abs() < 1e-12);

    let rep = repr::build_gamma_representation(10).unwrap();
    for seed in 0..5 {
        let a = random_antisym(10, 50 + seed);
        let h2 = quadratic_from_coefficients(&a);
        let sol = solve_quadratic_exact(&h2).unwrap();
        let opt = repr::opt(&h2, &rep).unwrap();
        assert!((sol.opt_value - opt).abs() < 1e-9);
        assert!((expectation(&sol.cov, &h2).unwrap().re - opt).abs() < 1e-9);
        assert!(sol.cov.opnorm() <= 1.0 + 1e-10);
    }
    assert!(solve_quadratic_exact(&Polynomial::monomial(4, vec![1, 2], C64::new(1.0, 0.0)).unwrap()).is_err());
}

#[test]
fn pfaffian_squares_to_determinant() {
    for n in [2usize, 4, 6, 8, 10, 12] {
        for seed in 0..5 {
            let a = random_antisym(n, 1000 + seed);
            let pf = pfaffian(&a);
            let det = a.determinant();
            assert!((pf * pf - det).abs() <= 1e-9 * det.abs().max(1.0), "n={n}");
        }
    }
    assert_eq!(pfaffian(&RMat::zeros(3, 3)), 0.0);
}

#[test]
fn sdp_on_pair_square_and_rounding() {
    let h = syk::pair_square_quartic(12).unwrap();
    let sol = solve_sdp_gauss(&h, None, SDP_DEFAULT_MAX_ITER).unwrap();
    assert!(sol.objective >= 15f64.sqrt() - 1e-4);
    assert!(sol.residuals.psd_min_eig >= -1e-7 && sol.residuals.trace1_excess <= 1e-7);
    assert!(sol.residuals.trace2_excess <= 1e-7 && sol.residuals.antisym_violation <= 1e-9);
    let r = round_to_gaussian(&sol, &h, None, 20, 1).unwrap();
    assert!(r.value >= 0.1 * sol.objective);
    assert!(r.cov.opnorm() <= 1.0 + 1e-10);
    let zero = solve_sdp_gauss(&Polynomial::zero(8), None, 100).unwrap();
    assert_eq!(zero.objective, 0.0);
}

#[test]
fn rounding_law_matches_r() {
    let h = syk::sample_syk(8, 4, 2).unwrap().h;
    let sol = solve_sdp_gauss(&h, None, SDP_DEFAULT_MAX_ITER).unwrap();
    let r = sol.r();
    let samples = rounding_samples(&sol, 2000, 9);
    let mut mean = RMat::zeros(64, 64);
    for s in &samples {
        let v = RMat::from_fn(64, 1, |i, _| s.read(i / 8, i % 8));
        mean += &v * v.transpose();
    }
    mean = mean * faer::scale(1.0 / 2000.0);
    let rel = (&mean - &r).norm_l2() / r.norm_l2();
    assert!(rel <= 0.05, "relative Frobenius error {rel}");
}

#[test]
fn truncation_is_noop_inside_ball() {
    let cov = random_state_cov(8, 4);
    let t = truncate_covariance(&cov.sigma);
    assert!((&t - &cov.sigma).norm_l2() < 1e-14);
    let big = &cov.sigma * faer::scale(5.0 / cov.opnorm());
    let t = truncate_covariance(&big);
    assert!(CovarianceMatrix::new(t).unwrap().is_state);
}

#[test]
fn witness_on_syk16() {
    let rep = repr::build_gamma_representation(16).unwrap();
    for seed in 0..3 {
        let h = syk::sample_syk(16, 4, seed).unwrap().h;
        let w = syk_gaussian_witness(&h).unwrap();
        assert!(w.cov.opnorm() <= 1.0 + 1e-10);
        assert!((0.05..=3.0).contains(&w.value), "{}", w.value);
        assert!(w.value <= repr::opt(&h, &rep).unwrap() + 1e-7);
    }
    assert!(syk_gaussian_witness(&syk::sample_syk(10, 4, 0).unwrap().h).is_err());
}

#[test]
fn lowrank_pair_square() {
    for n in [8usize, 12] {
        let mut a = RMat::zeros(n, n);
        for j in 0..n / 2 {
            a.write(2 * j, 2 * j + 1, 1.0);
            a.write(2 * j + 1, 2 * j, -1.0);
        }
        let r = lowrank_optimize(&[(1.0, a.clone())]).unwrap();
        let want = (n as f64 / 2.0).powi(2);
        assert!((r.value - want).abs() < 1e-9, "{}", r.value);
        let p = lowrank_polynomial(&[(1.0, a.clone())]).unwrap();
        assert!(p.max_abs_diff(&syk::pair_square(n).unwrap()) < 1e-12);
        // maximizing a negative square: t = 0, and Q² keeps its scalar part n/2
        let neg = lowrank_optimize(&[(-1.0, a)]).unwrap();
        assert_eq!(*neg.objective_trace.last().unwrap(), 0.0);
        assert!(neg.cov.sigma.norm_l2() == 0.0);
        assert!((neg.value + n as f64 / 2.0).abs() < 1e-12);
    }
}

#[test]
fn lowrank_random_is_sound_and_monotone() {
    let rep = repr::build_gamma_representation(10).unwrap();
    for seed in 0..4 {
        let terms: Vec<(f64, RMat)> = (0..3).map(|k| (1.0 + k as f64 * 0.5, random_antisym(10, 10 * seed + k))).collect();
        let r = lowrank_optimize(&terms).unwrap();
        assert!(r.objective_trace.windows(2).all(|w| w[1] >= w[0]));
        let p = lowrank_polynomial(&terms).unwrap();
        let opt = repr::opt(&p, &rep).unwrap();
        assert!(r.value <= opt + 1e-7, "{} > {opt}", r.value);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn youla_reconstructs(seed in 0u64..10_000, n in prop::sample::select(vec![2usize, 4, 6, 10])) {
        let a = random_antisym(n, seed);
        let (o, l) = youla(&a);
        let lam = CovarianceMatrix::blocks(&l);
        let back = o.transpose() * &lam.sigma * &o;
        prop_assert!((&back - &a).norm_l2() < 1e-9 * a.norm_l2().max(1.0));
        prop_assert!((o.transpose() * &o - RMat::identity(n, n)).norm_l2() < 1e-9);
    }

    #[test]
    fn rounding_outputs_states(seed in 0u64..1000) {
        let h = syk::sample_syk(8, 4, seed).unwrap().h;
        let sol = solve_sdp_gauss(&h, None, 400).unwrap();
        let r = round_to_gaussian(&sol, &h, None, 3, seed).unwrap();
        prop_assert!(r.cov.opnorm() <= 1.0 + 1e-10);
        let opt = repr::opt(&h, &repr::build_gamma_representation(8).unwrap()).unwrap();
        prop_assert!(r.value <= opt + 1e-7);
    }
}
