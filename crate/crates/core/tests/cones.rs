use copkit::catalog;
use copkit::cones::{
    c_membership, certificate_from_json, certificate_to_json, k1_from_spn, k1_membership, kr_membership,
    las_simplex_membership, qr_from_polya, qr_membership, spn_membership, spn_shortcut, verify_certificate,
    AnyCertificate, Certificate, ConeConfig, Decision, VerifyMode,
};
use copkit::rational::{rat, ratio, Rational};
use copkit::symlin::RatMat;
use proptest::prelude::*;

fn sym3() -> impl Strategy<Value = RatMat> {
    proptest::collection::vec((-4i64..=4, 1i64..=2), 6).prop_map(|v| {
        let mut m = RatMat::zeros(3);
        let mut k = 0;
        for i in 0..3 {
            for j in 0..=i {
                let (p, q) = v[k];
                m.set(i, j, if i == j { ratio(p.abs(), q) } else { ratio(p, q) });
                k += 1;
            }
        }
        m
    })
}

fn exact_pass(m: &RatMat, c: &Certificate<Rational>) -> bool {
    verify_certificate(m, &AnyCertificate::Exact(c.clone()), VerifyMode::Exact).unwrap().pass
}

#[test]
fn horn_ladder() {
    let h = catalog::horn();
    let cfg = ConeConfig::default();
    assert_eq!(spn_membership(&h, &cfg).unwrap().decision, Decision::No);
    assert_eq!(k1_membership(&h, &cfg).unwrap().decision, Decision::Yes);
    assert_eq!(kr_membership(&h, 1, &cfg).unwrap().decision, Decision::Yes);
    assert_eq!(qr_membership(&h, 0, &cfg).unwrap().decision, Decision::No);
    assert_eq!(qr_membership(&h, 1, &cfg).unwrap().decision, Decision::Yes);
    assert_eq!(c_membership(&h, 0).decision, Decision::No);
}

#[test]
fn identity_is_interior() {
    let v = k1_membership(&RatMat::identity(4), &ConeConfig::default()).unwrap();
    assert_eq!(v.decision, Decision::Yes);
    assert!(v.margin > 0.1);
}

#[test]
fn not_copositive_has_refutation() {
    let m = RatMat::from_rows(&[vec![rat(1), rat(-2)], vec![rat(-2), rat(1)]]).unwrap();
    let v = spn_membership(&m, &ConeConfig::default()).unwrap();
    assert_eq!(v.decision, Decision::No);
    assert!(v.margin < -0.1);
    assert_eq!(las_simplex_membership(&m, 3, &ConeConfig::default()).unwrap().decision, Decision::No);
}

#[test]
fn json_round_trip_and_tamper() {
    let h = catalog::horn();
    let v = k1_membership(&h, &ConeConfig::default()).unwrap();
    let cert = v.certificate.unwrap();
    let json = certificate_to_json(&h, &cert);
    let back = certificate_from_json(&json).unwrap();
    assert_eq!(back.certificate, cert);
    assert!(verify_certificate(&h, &back.certificate, VerifyMode::Exact).unwrap().pass);
    let other = catalog::horn_scaled(&rat(2));
    assert!(!verify_certificate(&other, &back.certificate, VerifyMode::Exact).unwrap().pass);
    let mut broken = json.clone();
    broken["schema"] = "copkit/0".into();
    assert!(certificate_from_json(&broken).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn polya_order_is_monotone(m in sym3(), r in 0u32..4) {
        if c_membership(&m, r).decision == Decision::Yes {
            prop_assert_eq!(c_membership(&m, r + 1).decision, Decision::Yes);
        }
    }

    #[test]
    fn polya_certificates_lift_to_qr(m in sym3(), r in 0u32..3) {
        let v = c_membership(&m, r);
        if let Some(AnyCertificate::Exact(c)) = &v.certificate {
            prop_assert!(exact_pass(&m, c));
            let q = qr_from_polya(3, c).expect("Pólya certificate lifts");
            prop_assert!(exact_pass(&m, &q));
        }
    }

    #[test]
    fn spn_certificates_lift_to_k1(m in sym3()) {
        if let Some(c) = spn_shortcut(&m) {
            prop_assert!(exact_pass(&m, &c));
            let Certificate::Spn { p, n } = &c else { panic!("shortcut is not an SPN certificate") };
            prop_assert!(exact_pass(&m, &k1_from_spn(p, n)));
        }
    }

    #[test]
    fn membership_respects_inclusions(m in sym3()) {
        let cfg = ConeConfig::default();
        let spn = spn_membership(&m, &cfg).unwrap();
        let k1 = k1_membership(&m, &cfg).unwrap();
        if spn.decision == Decision::Yes {
            prop_assert_ne!(k1.decision, Decision::No);
        }
        if k1.decision == Decision::No {
            prop_assert_ne!(spn.decision, Decision::Yes);
        }
        // n = 3: every copositive matrix is SPN, so C^(0) YES forces SPN YES.
        if c_membership(&m, 0).decision == Decision::Yes {
            prop_assert_ne!(spn.decision, Decision::No);
        }
    }

    #[test]
    fn lasserre_inside_k_on_two_by_two(a in 0i64..4, b in 0i64..4, c in -4i64..=4) {
        let m = RatMat::from_rows(&[vec![rat(a), rat(c)], vec![rat(c), rat(b)]]).unwrap();
        let cfg = ConeConfig::default();
        let las = las_simplex_membership(&m, 3, &cfg).unwrap();
        let k1 = kr_membership(&m, 1, &cfg).unwrap();
        if las.decision == Decision::Yes {
            prop_assert_ne!(k1.decision, Decision::No);
        }
    }
}
