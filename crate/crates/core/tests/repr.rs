use faer::complex_native::c64;
use majsos::algebra::*;
use majsos::linalg::{self, CMat};
use majsos::repr::*;
use majsos::syk;
use proptest::prelude::*;

fn pauli(name: char) -> CMat {
    let z = c64::new(0.0, 0.0);
    let one = c64::new(1.0, 0.0);
    let i = c64::new(0.0, 1.0);
    let e = match name {
        'I' => [one, z, z, one],
        'X' => [z, one, one, z],
        'Y' => [z, -i, i, z],
        _ => [one, z, z, -one],
    };
    CMat::from_fn(2, 2, |r, c| e[2 * r + c])
}

fn kron(a: &CMat, b: &CMat) -> CMat {
    let (m, n) = (b.nrows(), b.ncols());
    CMat::from_fn(a.nrows() * m, a.ncols() * n, |r, c| a.read(r / m, c / n) * b.read(r % m, c % n))
}

fn gf2_rank(g: &AnticommGraph) -> usize {
    let n = g.n();
    let mut rows: Vec<u64> = (1..=n)
        .map(|j| (1..=n).filter(|&k| k != j && g.anticommute(j, k)).fold(0u64, |acc, k| acc | 1 << (k - 1)))
        .collect();
    let mut rank = 0;
    for bit in 0..n {
        if let Some(p) = (rank..n).find(|&r| rows[r] >> bit & 1 == 1) {
            rows.swap(rank, p);
            for r in 0..n {
                if r != rank && rows[r] >> bit & 1 == 1 {
                    rows[r] ^= rows[rank];
                }
            }
            rank += 1;
        }
    }
    rank
}

fn graph_strategy(n: usize) -> impl Strategy<Value = AnticommGraph> {
    prop::collection::vec(any::<bool>(), n * (n - 1) / 2).prop_map(move |bits| {
        let mut edges = Vec::new();
        let mut it = bits.into_iter();
        for j in 1..=n {
            for k in j + 1..=n {
                if it.next().unwrap() {
                    edges.push((j, k));
                }
            }
        }
        AnticommGraph::new(n, &edges).unwrap()
    })
}

fn terms_strategy(n: usize) -> impl Strategy<Value = Vec<(u32, f64, f64)>> {
    prop::collection::vec((0u32..(1 << n), -1.0f64..1.0, -1.0f64..1.0), 0..6)
}

fn poly(n: usize, terms: &[(u32, f64, f64)], max_deg: usize) -> Polynomial {
    let mut p = Polynomial::zero(n);
    for &(m, re, im) in terms {
        let s: Vec<usize> = (0..n).filter(|b| m >> b & 1 == 1).map(|b| b + 1).take(max_deg).collect();
        p.add_term(s, C64::new(re, im));
    }
    p
}

#[test]
fn gamma_matrices_at_n4() {
    let rep = build_gamma_representation(4).unwrap();
    let want = [
        kron(&pauli('X'), &pauli('I')),
        kron(&pauli('Y'), &pauli('I')),
        kron(&pauli('Z'), &pauli('X')),
        kron(&pauli('Z'), &pauli('Y')),
    ];
    for (j, w) in want.iter().enumerate() {
        assert!(linalg::max_abs_diff(&rep.generator_matrix(j + 1), w) < 1e-15, "γ_{}", j + 1);
    }
}

#[test]
fn gamma_anticommutation_at_n8() {
    let rep = build_gamma_representation(8).unwrap();
    for j in 1..=8 {
        for k in j + 1..=8 {
            let (a, b) = (rep.generator_matrix(j), rep.generator_matrix(k));
            let s = &a * &b + &b * &a;
            assert!(linalg::max_abs_diff(&s, &CMat::zeros(16, 16)) <= 1e-14);
        }
    }
}

#[test]
fn i_chi1_chi2_is_minus_z() {
    let rep = build_gamma_representation(2).unwrap();
    let h = Polynomial::monomial(2, vec![1, 2], C64::new(0.0, 1.0)).unwrap();
    let op = represent(&h, &rep).unwrap();
    assert!(linalg::max_abs_diff(&op.mat, &(pauli('Z') * faer::scale(c64::new(-1.0, 0.0)))) < 1e-15);
}

#[test]
fn pair_square_optimum() {
    // Opt of the squared pair sum is (n/2)²
    for n in [4usize, 8] {
        let h = syk::pair_square(n).unwrap();
        let rep = build_gamma_representation(n).unwrap();
        let e = eig_extremes(&represent(&h, &rep).unwrap(), EigMode::Max).unwrap();
        assert!((e.value() - (n * n / 4) as f64).abs() < 1e-9);
        assert!(e.residual <= 1e-9 * (n * n) as f64);
    }
}

#[test]
fn linear_form_opt_is_norm() {
    let a = [0.6, -0.8, 0.0, 0.0];
    let h = Polynomial::linear(&a);
    let g = AnticommGraph::complete(4);
    let rep = build_gamma_representation(4).unwrap();
    assert!((opt(&h, &rep).unwrap() - 1.0).abs() < 1e-12);
    assert!((opt_pm(&h, &rep, &g).unwrap() - 1.0).abs() < 1e-12);
    assert!(opt_pm(&Polynomial::zero(4), &rep, &g).unwrap().abs() < 1e-12);
}

#[test]
fn opt_pm_matches_full_spectrum() {
    let inst = syk::sample_syk(12, 4, 1).unwrap();
    let rep = build_gamma_representation(12).unwrap();
    let spec = eig_extremes(&represent(&inst.h, &rep).unwrap(), EigMode::Full).unwrap().values;
    let norm = spec[0].abs().max(spec[spec.len() - 1].abs());
    assert!((opt_pm(&inst.h, &rep, &inst.graph()).unwrap() - norm).abs() < 1e-8);
}

#[test]
fn non_hermitian_eigensolve_is_contract_error() {
    let rep = build_gamma_representation(2).unwrap();
    let h = Polynomial::monomial(2, vec![1, 2], C64::new(1.0, 0.0)).unwrap();
    let op = represent(&h, &rep).unwrap();
    assert!(matches!(eig_extremes(&op, EigMode::Max), Err(majsos::error::Error::Contract(_))));
    assert!(matches!(build_gamma_representation(5), Err(majsos::error::Error::Input(_))));
}

#[test]
fn skew_conjugation_first_order() {
    let n = 6;
    let g = AnticommGraph::complete(n);
    let rep = build_gamma_representation(n).unwrap();
    // ζ = χ1χ2χ3 + χ2χ4/2 is skew-adjoint; ρ = 1 + iχ1χ2/2
    let mut z = Polynomial::zero(n);
    z.add_term(vec![1, 2, 3], C64::new(1.0, 0.0));
    z.add_term(vec![2, 4], C64::new(0.5, 0.0));
    let mut rho = Polynomial::scalar(n, C64::new(1.0, 0.0));
    rho.add_term(vec![1, 2], C64::new(0.0, 0.5));
    let h = syk::sample_syk(n, 4, 3).unwrap().h;
    let zeta = represent(&z, &rep).unwrap();
    let rho_d = represent(&rho, &rep).unwrap();
    let hd = represent(&h, &rep).unwrap();
    let theta = 0.01;
    let out = skew_exponential_conjugate(&zeta, theta, &rho_d).unwrap();
    assert!((out.ntrace() - rho_d.ntrace()).norm() < 1e-10);
    assert!(linalg::hermitian_defect(&out.mat) < 1e-12);
    let zh = commutator(&z, &h, &g, false).unwrap();
    let zzh = commutator(&z, &zh, &g, false).unwrap();
    let lin = trace_product(&rho, &h, &g).unwrap() + theta * trace_product(&rho, &zh, &g).unwrap();
    let got = linalg::ntrace_prod(&out.mat, &hd.mat);
    let second = linalg::herm_opnorm(&represent(&zzh, &rep).unwrap().mat);
    let rho_norm = linalg::herm_opnorm(&rho_d.mat);
    assert!((got - lin).norm() <= theta * theta * second / 2.0 * rho_norm + 1e-12);
    assert!(unitarity_defect(&SkewConjugator::new(&zeta).unwrap().unitary(0.7)) < 1e-10);
    // Hermitian ζ is refused
    let herm = represent(&h, &rep).unwrap();
    assert!(SkewConjugator::new(&herm).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn reduction_contract_and_dimension_law(g in graph_strategy(7)) {
        let rep = reduce_graph_f2(&g).unwrap();
        rep.verify(&g).unwrap();
        let rank = gf2_rank(&g);
        prop_assert_eq!(2 * rep.r, rank);
        prop_assert_eq!(rep.dim(), 1usize << (7 - rep.r));
        for j in 1..=7 {
            let m = rep.generator_matrix(j);
            prop_assert!(linalg::hermitian_defect(&m) <= 1e-12);
            prop_assert!(linalg::max_abs_diff(&(&m * &m), &CMat::identity(rep.dim(), rep.dim())) <= 1e-12);
        }
    }

    #[test]
    fn representation_is_a_homomorphism(g in graph_strategy(6), a in terms_strategy(6), b in terms_strategy(6)) {
        let rep = reduce_graph_f2(&g).unwrap();
        let (f, h) = (poly(6, &a, 3), poly(6, &b, 3));
        let lhs = represent(&multiply(&f, &h, &g).unwrap(), &rep).unwrap();
        let rhs = &represent(&f, &rep).unwrap().mat * &represent(&h, &rep).unwrap().mat;
        prop_assert!(linalg::max_abs_diff(&lhs.mat, &rhs) <= 1e-9);
        prop_assert!((lhs.ntrace() - multiply(&f, &h, &g).unwrap().trace()).norm() <= 1e-10);
    }

    #[test]
    fn opt_shifts_with_identity(seed in 0u64..500, c in -3.0f64..3.0) {
        let inst = syk::sample_syk(8, 4, seed).unwrap();
        let rep = build_gamma_representation(8).unwrap();
        let shifted = inst.h.add(&Polynomial::scalar(8, C64::new(c, 0.0))).unwrap();
        prop_assert!((opt(&shifted, &rep).unwrap() - opt(&inst.h, &rep).unwrap() - c).abs() < 1e-10);
    }
}
