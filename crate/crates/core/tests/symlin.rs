use copkit::rational::{rat, ratio, Rational};
use copkit::symlin::{psd_check_exact, solve_rational, sym_eigenvalues, Dense, PsdCheck, RatMat};
use proptest::prelude::*;

fn factor(n: usize) -> impl Strategy<Value = Vec<Vec<i64>>> {
    proptest::collection::vec(proptest::collection::vec(-3i64..=3, n), 1..=n)
}

/// `Σ v vᵀ - shift·I` from integer vectors.
fn gram(vs: &[Vec<i64>], shift: i64) -> RatMat {
    let n = vs[0].len();
    RatMat::from_fn(n, |i, j| {
        let s: i64 = vs.iter().map(|v| v[i] * v[j]).sum();
        rat(s - if i == j { shift } else { 0 })
    })
}

#[test]
fn text_round_trip() {
    let m = RatMat::from_rows(&[vec![rat(1), ratio(-1, 2)], vec![ratio(-1, 2), rat(3)]]).unwrap();
    assert_eq!(RatMat::parse(&m.to_text()).unwrap(), m);
    assert_eq!(RatMat::parse(&m.canonical_text()).unwrap(), m);
    assert!(RatMat::parse("2\n1 2\n3 4\n").is_err());
}

#[test]
fn not_psd_has_witness() {
    let m = RatMat::from_rows(&[vec![rat(1), rat(2)], vec![rat(2), rat(1)]]).unwrap();
    match psd_check_exact(&m) {
        PsdCheck::NotPsd { witness, value } => {
            assert_eq!(m.quad(&witness), value);
            assert!(value < rat(0));
        }
        PsdCheck::Psd(_) => panic!("indefinite matrix reported PSD"),
    }
}

#[test]
fn rational_solve_finds_kernel() {
    let a = vec![vec![rat(1), rat(2), rat(3)], vec![rat(2), rat(4), rat(6)]];
    let (x, kernel) = solve_rational(&a, &[rat(6), rat(12)]).unwrap();
    let row = |r: &[Rational], v: &[Rational]| r.iter().zip(v).map(|(a, b)| a * b).sum::<Rational>();
    assert_eq!(row(&a[0], &x), rat(6));
    assert_eq!(kernel.len(), 2);
    for k in &kernel {
        assert_eq!(row(&a[0], k), rat(0));
    }
    assert!(solve_rational(&a, &[rat(1), rat(1)]).is_none());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn exact_psd_agrees_with_eigenvalues(vs in factor(4), shift in 0i64..=3) {
        let m = gram(&vs, shift);
        let eig = sym_eigenvalues(&Dense::from_sym(&m.to_f64())).unwrap();
        let min = eig.iter().cloned().fold(f64::INFINITY, f64::min);
        let exact = psd_check_exact(&m).is_psd();
        if min > 1e-9 { prop_assert!(exact); }
        if min < -1e-9 { prop_assert!(!exact); }
    }

    #[test]
    fn principal_submatrix_of_psd_is_psd(vs in factor(5), mask in 1u32..32) {
        let m = gram(&vs, 0);
        let s: Vec<usize> = (0..5).filter(|i| mask >> i & 1 == 1).collect();
        prop_assert!(psd_check_exact(&m.principal_submatrix(&s).unwrap()).is_psd());
    }

    #[test]
    fn ldl_reconstructs(vs in factor(4)) {
        let m = gram(&vs, 0);
        let PsdCheck::Psd(ldl) = psd_check_exact(&m) else { panic!("Gram matrix not PSD") };
        prop_assert!(ldl.d.iter().all(|d| *d >= rat(0)));
        let n = ldl.perm.len();
        let r = ldl.d.len();
        for a in 0..n {
            for b in 0..n {
                let mut s = rat(0);
                for k in 0..r {
                    let la = ldl.l.get(a).and_then(|row| row.get(k)).cloned().unwrap_or_else(|| rat(0));
                    let lb = ldl.l.get(b).and_then(|row| row.get(k)).cloned().unwrap_or_else(|| rat(0));
                    s += la * lb * &ldl.d[k];
                }
                prop_assert_eq!(&s, m.get(ldl.perm[a], ldl.perm[b]));
            }
        }
    }
}
