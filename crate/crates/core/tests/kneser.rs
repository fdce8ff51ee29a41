use majsos::algebra::AnticommGraph;
use majsos::combin::binom;
use majsos::kneser::*;
use proptest::prelude::*;

#[test]
fn g_even_8_4_structure_and_alpha() {
    let g = build_kg_graph(8, 4, &even_distances(4)).unwrap();
    assert_eq!(g.vertices.len(), 70);
    for u in 0..70 {
        for v in u + 1..70 {
            let inter = g.vertices[u].iter().filter(|x| g.vertices[v].contains(x)).count();
            assert_eq!(g.graph.has_edge(u, v), inter % 2 == 1);
        }
    }
    assert_eq!(alpha_exact(&g.graph).unwrap(), 14);
}

#[test]
fn empty_and_ekr_graphs() {
    let g = build_kg_graph(7, 3, &[1, 2, 3]).unwrap();
    assert_eq!(g.graph.edge_count(), 0);
    // EKR with k=1: adjacent iff disjoint
    let g = build_kg_graph(6, 3, &[1, 2]).unwrap();
    for u in 0..g.vertices.len() {
        for v in u + 1..g.vertices.len() {
            let disjoint = g.vertices[u].iter().all(|x| !g.vertices[v].contains(x));
            assert_eq!(g.graph.has_edge(u, v), disjoint);
        }
    }
}

#[test]
fn explicit_size_cap() {
    assert!(matches!(build_kg_graph(30, 5, &[2, 4]), Err(majsos::Error::Resource(_))));
}

#[test]
fn independent_set_constructions() {
    let s = construct_independent_set(12, 4, IndependentSetVariant::Def1).unwrap();
    assert_eq!(s.len(), 15);
    for t in &s {
        assert!(t[0] % 2 == 1 && t[1] == t[0] + 1 && t[2] % 2 == 1 && t[3] == t[2] + 1);
    }
    let f = construct_independent_set(8, 4, IndependentSetVariant::Fano8).unwrap();
    assert_eq!(f.len(), 14);
    let lines: Vec<&Vec<usize>> = f.iter().filter(|t| t.contains(&8)).collect();
    assert_eq!(lines.len(), 7);
    for i in 0..7 {
        for j in i + 1..7 {
            assert_eq!(lines[i].iter().filter(|x| lines[j].contains(x)).count(), 2);
        }
    }
    // the full family has pairwise even distance
    for i in 0..14 {
        for j in i + 1..14 {
            assert_eq!(f[i].iter().filter(|x| f[j].contains(x)).count() % 2, 0);
        }
    }
    let o = construct_independent_set(9, 3, IndependentSetVariant::Def1).unwrap();
    assert_eq!(o.len(), 4);
    assert!(o.iter().all(|t| t.contains(&9)));
    assert!(construct_independent_set(11, 4, IndependentSetVariant::Def1).is_err());
    assert!(construct_independent_set(10, 4, IndependentSetVariant::Fano8).is_err());
    // pairwise even distance
    let g = build_kg_graph(12, 4, &even_distances(4)).unwrap();
    let ids: Vec<usize> = s.iter().map(|t| g.vertices.iter().position(|v| v == t).unwrap()).collect();
    assert!(g.graph.is_independent(&ids));
}

#[test]
fn dual_hahn_matches_a1_spectrum() {
    let a1 = johnson_relation(8, 3, 1).unwrap();
    let ev = majsos::linalg::sym_eigvals(&a1);
    let mut distinct: Vec<f64> = Vec::new();
    for x in ev {
        if !distinct.iter().any(|y| (x - y).abs() < 1e-8) {
            distinct.push(x);
        }
    }
    let mut want: Vec<f64> = (0..=3).map(|z| dual_hahn_eigenvalue(8, 3, 1, z).unwrap() as f64).collect();
    want.sort_by(f64::total_cmp);
    distinct.sort_by(f64::total_cmp);
    assert_eq!(distinct.len(), want.len());
    for (a, b) in distinct.iter().zip(&want) {
        assert!((a - b).abs() < 1e-8);
    }
}

#[test]
fn delsarte_examples() {
    let ekr = delsarte_theta(10, 3, &[1, 2]).unwrap();
    assert!((ekr.theta_value - 36.0).abs() < 1e-9);
    let empty = delsarte_theta(9, 4, &[1, 2, 3, 4]).unwrap();
    assert_eq!(empty.theta_value, binom(9, 4) as f64);
    let t16 = delsarte_theta(16, 4, &[2, 4]).unwrap();
    assert!((t16.theta_value - 28.0).abs() < 1e-9);
}

#[test]
fn delsarte_agrees_with_closed_form() {
    for n in (12..=40).step_by(2) {
        let a = delsarte_theta(n, 4, &[2, 4]).unwrap().theta_value;
        let b = theta4_closed_form(n).unwrap().theta_value;
        assert!((a - b).abs() <= 1e-9 * b, "n={n}: {a} vs {b}");
    }
}

#[test]
fn certificates_are_psd_on_explicit_scheme() {
    for (n, q, d) in [(12, 4, even_distances(4)), (9, 3, vec![2]), (10, 3, vec![1, 2]), (11, 5, even_distances(5))] {
        let c = delsarte_theta(n, q, &d).unwrap();
        let m = certificate_min_eig(&c).unwrap();
        assert!(m >= -1e-7 * c.theta_value, "(n,q)=({n},{q}) min eig {m}");
    }
    let cf = theta4_closed_form(12).unwrap();
    assert!(certificate_min_eig(&cf).unwrap() >= -1e-7);
}

#[test]
fn def_bound_dominates_theta_even_q() {
    for q in [4usize, 6] {
        for n in [4 * q + 2, 4 * q + 3, 6 * q, 10 * q + 1] {
            let d = even_distances(q);
            let t = delsarte_theta(n, q, &d).unwrap().theta_value;
            let b = def_product_bound(n, q, &d);
            assert!(t <= b * (1.0 + 1e-9), "n={n} q={q}: θ={t} DEF={b}");
        }
    }
}

// For odd q the LP value sits strictly above the product bound (e.g. θ ≈ 3n/4
// against (n−1)/2 for q = 3), and for q = 6 the bound only kicks in from
// n = 26.  Recorded here so a change in either direction is noticed.
#[test]
fn def_bound_observed_exceedances() {
    let t = delsarte_theta(13, 3, &[2]).unwrap().theta_value;
    assert!((t - 10.0).abs() < 1e-9);
    assert!(t > def_product_bound(13, 3, &[2]));
    let t = delsarte_theta(24, 6, &even_distances(6)).unwrap().theta_value;
    assert!(t > def_product_bound(24, 6, &even_distances(6)));
    let t = delsarte_theta(26, 6, &even_distances(6)).unwrap().theta_value;
    assert!((t - def_product_bound(26, 6, &even_distances(6))).abs() < 1e-9 * t);
}

#[test]
fn psi_examples() {
    let c5 = psi_local_search(&AnticommGraph::cycle(5), 8, 1).unwrap();
    assert!((c5.independent_set_value - 2.0).abs() < 1e-9);
    assert!((c5.best_value - 2.0).abs() < 1e-8);
    assert!(c5.trial_values.iter().all(|&v| v <= 2.0 + 1e-8));
    let k = psi_local_search(&AnticommGraph::complete(6), 4, 2).unwrap();
    assert!((k.best_value - 1.0).abs() < 1e-9);
    let e = psi_local_search(&AnticommGraph::empty(4), 4, 3).unwrap();
    assert!((e.best_value - 4.0).abs() < 1e-8);
}

#[test]
fn sandwich_alpha_psi_theta() {
    for g in [AnticommGraph::cycle(5), AnticommGraph::cycle(6), AnticommGraph::cycle(7), AnticommGraph::matching(3)] {
        let sg = SimpleGraph::from_anticomm(&g);
        let alpha = alpha_exact(&sg).unwrap() as f64;
        let psi = psi_local_search(&g, 6, 11).unwrap().best_value;
        assert!(alpha <= psi + 1e-8);
        if let Ok(theta) = theta_transitive(&sg) {
            assert!(psi <= theta + 1e-8, "psi {psi} theta {theta}");
        }
    }
}

#[test]
fn local_opt_examples() {
    let c5 = local_opt_check(&AnticommGraph::cycle(5), &[1, 3]).unwrap();
    assert!(c5.maximal);
    assert_ne!(c5.status, LocalOptStatus::SkippedDegenerate);
    assert!(c5.grad_norm <= 1e-5, "{c5:?}");
    assert!(c5.hessian_max_eig <= 1e-5, "{c5:?}");

    let m = local_opt_check(&AnticommGraph::matching(3), &[1, 3, 5]).unwrap();
    assert!(m.grad_norm <= 1e-5);
    assert!(m.hessian_max_eig.abs() <= 1e-5, "{m:?}");

    let k2 = local_opt_check(&AnticommGraph::complete(2), &[1]).unwrap();
    assert!(k2.grad_norm <= 1e-8);

    assert!(local_opt_check(&AnticommGraph::cycle(5), &[1, 2]).is_err());
    assert!(!local_opt_check(&AnticommGraph::cycle(6), &[1]).unwrap().maximal);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn theta_certificates_valid(q in 2usize..=6, extra in 1usize..8, mask in 1u32..64) {
        let n = 2 * q + extra;
        let d: Vec<usize> = (1..=q).filter(|e| mask >> (e - 1) & 1 == 1).collect();
        let c = delsarte_theta(n, q, &d).unwrap();
        prop_assert!(c.p_values[1..].iter().all(|&p| p >= -1e-9));
        prop_assert!(c.theta_value >= 1.0 - 1e-9);
        prop_assert!(c.theta_value <= binom(n as i64, q as i64) as f64 * (1.0 + 1e-12));
    }

    #[test]
    fn theta_at_least_alpha_small(mask in 1u32..8) {
        let (n, q) = (8usize, 3usize);
        let d: Vec<usize> = (1..=q).filter(|e| mask >> (e - 1) & 1 == 1).collect();
        let g = build_kg_graph(n, q, &d).unwrap();
        if g.vertices.len() <= MAX_ALPHA_VERTICES {
            let a = alpha_exact(&g.graph).unwrap() as f64;
            let t = delsarte_theta(n, q, &d).unwrap().theta_value;
            prop_assert!(a <= t + 1e-7);
        }
    }
}
