use copkit::rational::rat;
use copkit::sdpcore::{margin_maximize, presolve, residuals, solve, MarginTargets, SdpProblem, Sense, SolverConfig, Status, VarRef};
use proptest::prelude::*;

/// `min X00` subject to `X01 = 1`, `X11 = 1`, `X ⪰ 0`; optimum 1.
fn schur_problem() -> SdpProblem {
    let mut p = SdpProblem::new();
    let b = p.add_psd_block(2);
    p.add_constraint(vec![(VarRef::psd(b, 1, 0), rat(1))], rat(1));
    p.add_constraint(vec![(VarRef::psd(b, 1, 1), rat(1))], rat(1));
    p.set_objective(vec![(VarRef::psd(b, 0, 0), rat(1))], Sense::Minimize);
    p
}

#[test]
fn schur_complement_optimum() {
    let p = schur_problem();
    let s = solve(&p, &SolverConfig::default()).unwrap();
    assert_eq!(s.status, Status::Optimal);
    assert!((s.objective - 1.0).abs() < 1e-7, "{}", s.objective);
    let r = residuals(&p, &s).unwrap();
    assert!(r.primal < 1e-8 && r.dual < 1e-8);
}

#[test]
fn lp_with_free_variable() {
    // max x + t subject to x + s = 3, t = 2 - x, x, s >= 0
    let mut p = SdpProblem::new();
    let x = p.add_nonneg(2);
    let t = p.add_free(1);
    p.add_constraint(vec![(VarRef::NonNeg(x), rat(1)), (VarRef::NonNeg(x + 1), rat(1))], rat(3));
    p.add_constraint(vec![(VarRef::Free(t), rat(1)), (VarRef::NonNeg(x), rat(1))], rat(2));
    p.set_objective(vec![(VarRef::NonNeg(x), rat(2)), (VarRef::Free(t), rat(1))], Sense::Maximize);
    let s = solve(&p, &SolverConfig::default()).unwrap();
    assert!((s.objective - 5.0).abs() < 1e-6, "{}", s.objective);
}

#[test]
fn margin_of_identity_feasibility() {
    // X ⪰ 0 with diagonal fixed to 1: largest λ with X - λI ⪰ 0 is 1.
    let mut p = SdpProblem::new();
    let b = p.add_psd_block(3);
    for i in 0..3 {
        p.add_constraint(vec![(VarRef::psd(b, i, i), rat(1))], rat(1));
    }
    let (lambda, _) = margin_maximize(&p, &MarginTargets::All, &SolverConfig::default()).unwrap();
    assert!((lambda - 1.0).abs() < 1e-6, "{lambda}");
}

#[test]
fn presolve_drops_duplicate_rows() {
    let mut p = schur_problem();
    p.add_constraint(vec![(VarRef::psd(0, 1, 1), rat(2))], rat(2));
    let kept = presolve(&p).unwrap();
    assert_eq!(kept.len(), 2);
}

#[test]
fn invalid_reference_is_rejected() {
    let mut p = schur_problem();
    p.add_constraint(vec![(VarRef::psd(3, 0, 0), rat(1))], rat(1));
    assert!(p.validate().is_err());
    assert!(solve(&p, &SolverConfig::default()).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn solves_are_deterministic(diag in proptest::collection::vec(1i64..5, 3), off in -2i64..=2, seed in 0u64..4) {
        let mut p = SdpProblem::new();
        let b = p.add_psd_block(3);
        for (i, d) in diag.iter().enumerate() {
            p.add_constraint(vec![(VarRef::psd(b, i, i), rat(1))], rat(*d));
        }
        p.set_objective(vec![(VarRef::psd(b, 1, 0), rat(off)), (VarRef::psd(b, 2, 1), rat(1))], Sense::Minimize);
        let cfg = SolverConfig { seed, ..SolverConfig::default() };
        let a = solve(&p, &cfg).unwrap();
        let c = solve(&p, &cfg).unwrap();
        prop_assert_eq!(format!("{a:?}"), format!("{c:?}"));
    }
}
