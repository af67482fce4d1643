use copkit::catalog;
use copkit::copositivity::{
    check_scc, copositivity_class, copositivity_class_numeric, k0_zero_consistency, simplex_minimize, zeros_in_simplex,
    CopositivityClass, SimplexPoint,
};
use copkit::rational::{rat, ratio};
use copkit::symlin::RatMat;
use proptest::prelude::*;

#[test]
fn classes_of_small_matrices() {
    assert_eq!(copositivity_class(&RatMat::identity(3)).unwrap().class, CopositivityClass::StrictlyCopositive);
    assert_eq!(copositivity_class(&catalog::horn()).unwrap().class, CopositivityClass::Boundary);
    let bad = RatMat::from_rows(&[vec![rat(1), rat(-2)], vec![rat(-2), rat(1)]]).unwrap();
    let rep = copositivity_class(&bad).unwrap();
    assert_eq!(rep.class, CopositivityClass::NotCopositive);
    assert_eq!(rep.min_value, ratio(-1, 2));
    assert_eq!(bad.quad(&rep.witness.coords), rep.min_value);
}

#[test]
fn horn_zero_set() {
    let z = zeros_in_simplex(&catalog::horn()).unwrap();
    assert_eq!(z.value, rat(0));
    assert!(!z.is_finite);
    for p in &z.finite_zeros {
        assert_eq!(catalog::horn().quad(&p.coords), rat(0));
    }
}

#[test]
fn matrix_m_zero_set() {
    let m = catalog::matrix_m();
    let z = simplex_minimize(&m).unwrap();
    assert_eq!(z.value, rat(0));
    for p in &z.finite_zeros {
        assert_eq!(m.quad(&p.coords), rat(0));
        assert_eq!(p.coords.iter().sum::<num_rational::BigRational>(), rat(1));
    }
    assert!(!z.is_finite);
    assert!(check_scc(&m).is_err());
    let c6 = copkit::graphs::graph_matrix(&copkit::graphs::Graph::cycle(6).unwrap());
    assert_eq!(check_scc(&c6).unwrap().len(), 2);
}

#[test]
fn zero_consistent_with_spn_split() {
    // M = P with P = vvᵀ, v = (1, -1): the zero (1/2, 1/2) must annihilate P.
    let m = RatMat::from_rows(&[vec![rat(1), rat(-1)], vec![rat(-1), rat(1)]]).unwrap();
    let x = SimplexPoint::new(vec![ratio(1, 2), ratio(1, 2)]);
    assert!(k0_zero_consistency(&m, &m, &x).unwrap());
}

#[test]
fn numeric_class_matches_exact() {
    for m in [RatMat::identity(3), catalog::horn(), catalog::matrix_m()] {
        let exact = copositivity_class(&m).unwrap().class;
        let numeric = copositivity_class_numeric(&m.to_f64(), 1e-9).unwrap().class;
        assert_eq!(exact, numeric);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn minimum_is_attained_and_not_beaten(v in proptest::collection::vec(-4i64..=4, 6), x in proptest::collection::vec(0i64..5, 3)) {
        let m = RatMat::from_fn(3, |i, j| {
            let (a, b) = if i >= j { (i, j) } else { (j, i) };
            rat(v[a * (a + 1) / 2 + b])
        });
        let rep = copositivity_class(&m).unwrap();
        prop_assert_eq!(m.quad(&rep.witness.coords), rep.min_value.clone());
        let s: i64 = x.iter().sum();
        prop_assume!(s > 0);
        let pt: Vec<_> = x.iter().map(|&k| ratio(k, s)).collect();
        prop_assert!(m.quad(&pt) >= rep.min_value);
    }
}
