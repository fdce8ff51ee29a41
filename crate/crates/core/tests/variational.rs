use majsos::algebra::{Polynomial, C64};
use majsos::error::Error;
use majsos::linalg;
use majsos::repr;
use majsos::syk;
use majsos::variational::*;
use proptest::prelude::*;

fn assert_state(rho: &linalg::CMat) {
    let d = rho.nrows();
    let tr: f64 = (0..d).map(|i| rho.read(i, i).re).sum::<f64>() / d as f64;
    assert!((tr - 1.0).abs() <= 1e-10, "trace {tr}");
    let min = linalg::herm_eigvals(rho)[0];
    assert!(min >= -1e-9, "min eig {min}");
}

fn chi_sigma_form(n1: usize, n: usize) -> Polynomial {
    // (i/√n) Σ χ_mσ_m
    let mut h = Polynomial::zero(n1 + 2 * n);
    for m in 1..=n {
        h.add_term(vec![n1 + m, n1 + n + m], C64::new(0.0, 1.0 / (n as f64).sqrt()));
    }
    h
}

#[test]
fn reference_expectations() {
    for (n1, n) in [(8, 2), (12, 4)] {
        let inst = syk::sample_2col(n1, n, 5).unwrap();
        let s = prepare_reference(&inst).unwrap();
        assert_state(&s.rho0.mat);
        assert!(conjugated_value(&s, &inst.h, 0.0).unwrap().abs() < 1e-12);
        let rt = (n as f64).sqrt();
        // ρ₀ = Π(1 − iσχ) gives E[iσ_mχ_m] = −1, so the σχ-ordered form sits at −√n
        assert!((conjugated_value(&s, &sigma_chi_form(n1, n), 0.0).unwrap() + rt).abs() < 1e-10);
        assert!((conjugated_value(&s, &chi_sigma_form(n1, n), 0.0).unwrap() - rt).abs() < 1e-10);
    }
}

#[test]
fn first_order_matches_tau_norms() {
    // h = (i/√n)Σ τ_mχ_m, so tr(ρ₀[ζ,h]) = (2/√n) Σ_m tr(τ_m²)
    for seed in 0..3 {
        let inst = syk::sample_2col(8, 2, seed).unwrap();
        let s = prepare_reference(&inst).unwrap();
        let norms: f64 = s.taus.iter().map(|t| t.terms().map(|(_, c)| c.norm_sqr()).sum::<f64>()).sum();
        let want = 2.0 * norms / 2f64.sqrt();
        assert!((s.first_order - want).abs() < 1e-9 * want, "{} vs {want}", s.first_order);
    }
}

#[test]
fn derivative_at_zero_is_first_order() {
    let inst = syk::sample_2col(12, 4, 2).unwrap();
    let s = prepare_reference(&inst).unwrap();
    let ev = s.evaluator(&inst.h).unwrap();
    let h = 1e-5;
    let fd = (ev.value(h) - ev.value(-h)) / (2.0 * h);
    assert!((fd - s.first_order).abs() <= 1e-4 * s.first_order.abs(), "{fd} vs {}", s.first_order);
    for t in [0.1, 0.7, 1.4] {
        assert!(ev.value_complex(t).im.abs() < 1e-10);
    }
}

#[test]
fn sweep_is_positive_and_sound() {
    for seed in 0..2 {
        let inst = syk::sample_2col(12, 4, seed).unwrap();
        let s = prepare_reference(&inst).unwrap();
        let sw = theta_sweep(&s, &inst.h, &default_grid()).unwrap();
        assert_eq!(sw.curve.len(), 40);
        assert_eq!(sw.curve[0].0, 0.0);
        assert!((sw.curve[39].0 - 1.5).abs() < 1e-15);
        assert!(s.first_order > 0.0 && sw.best_value > 0.0);
        let rep = repr::build_gamma_representation(16).unwrap();
        let opt = repr::opt(&inst.h, &rep).unwrap();
        assert!(sw.best_value <= opt + 1e-7, "{} > {opt}", sw.best_value);
        assert_state(&s.state(sw.best_theta).mat);
    }
    let inst = syk::sample_2col(8, 2, 0).unwrap();
    let s = prepare_reference(&inst).unwrap();
    assert!(matches!(theta_sweep(&s, &inst.h, &[]), Err(Error::Input(_))));
}

#[test]
fn bch_remainder() {
    let inst = syk::sample_2col(12, 4, 7).unwrap();
    let s = prepare_reference(&inst).unwrap();
    assert!(bch_residual(&s, &inst.h, 0.0).unwrap().lhs < 1e-12);
    let r = bch_residual(&s, &inst.h, 0.3).unwrap();
    assert!(r.lhs <= r.bound + 1e-8, "{r:?}");
    // lhs/θ² increases toward ‖[ζ,[ζ,h]]‖/2 = bound/θ²
    let ratios: Vec<(f64, f64)> = [0.2, 0.1, 0.05]
        .iter()
        .map(|&t| {
            let r = bch_residual(&s, &inst.h, t).unwrap();
            (r.lhs / (t * t), r.bound / (t * t))
        })
        .collect();
    for w in ratios.windows(2) {
        assert!(w[1].0 >= w[0].0 - 1e-9, "{ratios:?}");
    }
    for (q, b) in &ratios {
        assert!(*q <= b + 1e-8);
    }
    assert!((ratios[2].0 - ratios[2].1).abs() < 0.05 * ratios[2].1, "{ratios:?}");
    let both = bch_residuals(&s, &inst.h, &[0.3, 0.2]).unwrap();
    assert!((both[0].lhs - r.lhs).abs() < 1e-12 && (both[1].bound - ratios[0].1 * 0.04).abs() < 1e-9);
    assert!(matches!(bch_residual(&s, &inst.h, 1.5), Err(Error::Input(_))));
}

#[test]
fn trotter_converges() {
    let inst = syk::sample_2col(8, 2, 3).unwrap();
    let s = prepare_reference(&inst).unwrap();
    assert!(trotter_unitarity_defect(&s, 0.5, 1).unwrap() <= 1e-12);
    let exact = conjugated_value(&s, &inst.h, 0.5).unwrap();
    let hm = repr::represent(&inst.h.embed(12).unwrap(), &s.rep).unwrap();
    let err = |steps| {
        let t = trotter_state(&s, 0.5, steps).unwrap();
        assert_state(&t.state.mat);
        ((linalg::ntrace_prod(&t.state.mat, &hm.mat).re - exact).abs(), t.relative_error)
    };
    let (e1, f1) = err(1);
    let (e2, f2) = err(2);
    assert!(f2 < f1 && e2 < e1, "{e1} {e2} {f1} {f2}");
    let (e200, _) = err(200);
    assert!(e200 <= 1e-3, "{e200}");
    assert!(matches!(trotter_state(&s, 0.5, 0), Err(Error::Input(_))));
}

#[test]
fn pipeline_is_linear_and_sound() {
    for seed in 0..3 {
        let inst = syk::sample_syk(8, 4, seed).unwrap();
        let w = witness_pipeline(&inst, &default_grid()).unwrap();
        assert!((w.value - w.value_in - w.value_out).abs() < 1e-10);
        // independent: dense ρ_θ against the full h
        let (view, _, _, _) = two_color_view(&inst).unwrap();
        let setup = prepare_reference(&view).unwrap();
        let hm = repr::represent(&inst.h.embed(setup.total_majoranas()).unwrap(), &setup.rep).unwrap();
        let dense = linalg::ntrace_prod(&setup.state(w.theta).mat, &hm.mat).re;
        assert!((w.value - dense).abs() < 1e-9, "{} vs {dense}", w.value);
        let rep = repr::build_gamma_representation(8).unwrap();
        assert!(w.value <= repr::opt(&inst.h, &rep).unwrap() + 1e-7);
        assert_eq!((w.n1, w.n_chi), (6, 2));
    }
    // 3n/4 = 9 is odd: total 15 Majoranas
    let inst = syk::sample_syk(12, 4, 1).unwrap();
    let w = witness_pipeline(&inst, &default_grid()).unwrap();
    let rep = repr::build_gamma_representation(12).unwrap();
    assert!(w.value <= repr::opt(&inst.h, &rep).unwrap() + 1e-7);
    assert_eq!((w.n1, w.n_chi), (9, 3));
    let odd = syk::sample_syk(10, 4, 0).unwrap();
    assert!(matches!(witness_pipeline(&odd, &default_grid()), Err(Error::Input(_))));
}

#[test]
fn refusals() {
    let big = syk::sample_2col(18, 4, 0).unwrap();
    assert!(matches!(prepare_reference(&big), Err(Error::Resource(_))));
    let plain = syk::sample_syk(8, 4, 0).unwrap();
    assert!(prepare_reference(&plain).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]
    #[test]
    fn conjugated_states_are_valid(seed in 0u64..1000, theta in -1.5f64..1.5) {
        let inst = syk::sample_2col(6, 2, seed).unwrap();
        let s = prepare_reference(&inst).unwrap();
        let rho = s.state(theta);
        assert_state(&rho.mat);
        let rep = repr::build_gamma_representation(8).unwrap();
        let opt = repr::opt(&inst.h, &rep).unwrap();
        let v = conjugated_value(&s, &inst.h, theta).unwrap();
        prop_assert!(v <= opt + 1e-7);
        let direct = linalg::ntrace_prod(&rho.mat, &repr::represent(&s.h, &s.rep).unwrap().mat).re;
        prop_assert!((v - direct).abs() < 1e-9);
    }
}
