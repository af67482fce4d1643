use copkit::bounds::{
    conjecture_probe, lovasz_theta, odd_cycle_theta, theta_r, zeta_closed_form, zeta_direct, zeta_exceeds_alpha,
    zeta_report, BoundValue,
};
use copkit::cones::{ConeConfig, Decision};
use copkit::graphs::{alpha, Graph};
use copkit::rational::{ratio, Rational};
use copkit::sdpcore::SolverConfig;
use proptest::prelude::*;

fn random_graph() -> impl Strategy<Value = Graph> {
    (2usize..=7).prop_flat_map(|n| {
        proptest::collection::vec(any::<bool>(), n * (n - 1) / 2).prop_map(move |bits| {
            let mut g = Graph::empty(n).unwrap();
            let mut k = 0;
            for i in 0..n {
                for j in 0..i {
                    if bits[k] {
                        g.add_edge(i, j).unwrap();
                    }
                    k += 1;
                }
            }
            g
        })
    })
}

#[test]
fn zeta_table_for_c5() {
    let g = Graph::cycle(5).unwrap();
    let got: Vec<Option<Rational>> = (0..6).map(|r| zeta_closed_form(&g, r)).collect();
    let want = vec![None, Some(ratio(3, 1)), Some(ratio(3, 1)), Some(ratio(5, 2)), Some(ratio(5, 2)), Some(ratio(7, 3))];
    assert_eq!(got, want);
    assert!(matches!(zeta_report(&g, 0).value, BoundValue::Infinite));
}

#[test]
fn theta_is_monotone_on_odd_cycles() {
    let cfg = SolverConfig::default();
    for n in [5, 7] {
        let g = Graph::cycle(n).unwrap();
        let t0 = theta_r(&g, 0, &cfg).unwrap().value.as_f64();
        let t1 = theta_r(&g, 1, &cfg).unwrap().value.as_f64();
        assert!((t0 - odd_cycle_theta(n)).abs() < 1e-5, "C{n}: {t0}");
        assert!(t1 <= t0 + 1e-6);
        assert!(t1 >= alpha(&g) as f64 - 1e-6);
    }
}

#[test]
fn lovasz_on_perfect_graphs() {
    let cfg = SolverConfig::default();
    for g in [Graph::path(4).unwrap(), Graph::complete(4).unwrap(), Graph::cycle(6).unwrap()] {
        let t = lovasz_theta(&g, &cfg).unwrap();
        assert!((t - alpha(&g) as f64).abs() < 1e-5, "{}: {t}", g.name());
    }
}

#[test]
fn probe_on_c5() {
    let v = conjecture_probe(&Graph::cycle(5).unwrap(), &ConeConfig::default()).unwrap();
    assert_eq!(v.decision, Decision::Yes);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn zeta_is_nonincreasing_and_above_alpha(g in random_graph(), r in 0u32..8) {
        let a = Rational::from_integer(alpha(&g).into());
        let (z0, z1) = (zeta_closed_form(&g, r), zeta_closed_form(&g, r + 1));
        if let Some(z0) = &z0 {
            let z1 = z1.clone().expect("finite value stays finite");
            prop_assert!(z1 <= *z0);
        }
        if let Some(z) = &z1 {
            if alpha(&g) >= 2 {
                prop_assert!(*z > a);
            } else {
                prop_assert_eq!(z, &a);
            }
        }
        prop_assert_eq!(zeta_exceeds_alpha(&g, r), alpha(&g) >= 2);
    }

    #[test]
    fn direct_agrees_on_random_graphs(g in random_graph(), r in 0u32..5) {
        prop_assert_eq!(zeta_direct(&g, r), zeta_closed_form(&g, r));
    }
}
