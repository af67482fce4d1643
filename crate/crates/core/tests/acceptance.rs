//! Acceptance gate: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

use std::collections::BTreeSet;
use std::time::{Duration, Instant};

use num_bigint::BigInt;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use copkit::bounds::{floor_convergence_check, lovasz_theta, odd_cycle_theta, theta_r, zeta_closed_form, zeta_direct};
use copkit::catalog::{self, TPsiParams};
use copkit::cones::{
    certificate_to_json, k1_membership, las_simplex_membership, round_certificate, sos_membership, spn_membership,
    verify_certificate, AnyCertificate, ConeConfig, Decision, VerifyMode,
};
use copkit::copositivity::{check_scc, copositivity_class, copositivity_class_numeric, zeros_in_simplex, CopositivityClass};
use copkit::graphs::{critical_edges, graph_matrix, graph_matrix_zeros, check_zero_characterization, Graph};
use copkit::rational::{rat, ratio, Rational};
use copkit::sdpcore::{residuals, solve, Sense, SdpProblem, SolverConfig, VarRef};
use copkit::symlin::RatMat;

type Outcome = Result<String, String>;

/// YES certificates collected for the round-trip criterion.
#[derive(Default)]
struct Ledger {
    yes: Vec<(String, RatMat, AnyCertificate)>,
}

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn fixtures() -> Vec<Graph> {
    let mut g = Vec::new();
    for n in 3..=7 {
        g.push(Graph::cycle(n).unwrap());
    }
    for n in 2..=5 {
        g.push(Graph::path(n).unwrap());
    }
    for n in 2..=5 {
        g.push(Graph::complete(n).unwrap());
    }
    g.push(Graph::petersen());
    g
}

fn c1_zeta_equivalence(_: &mut Ledger) -> Outcome {
    let start = Instant::now();
    let mut cells = 0;
    for g in fixtures() {
        for r in 0..=6 {
            let (a, b) = (zeta_direct(&g, r), zeta_closed_form(&g, r));
            ensure(a == b, format!("{} r={r}: direct {a:?} vs closed form {b:?}", g.name()))?;
            cells += 1;
        }
    }
    let t = start.elapsed();
    ensure(t < Duration::from_secs(30), format!("took {t:?}"))?;
    Ok(format!("{cells} (graph, r) cells agree exactly in {:.1}s", t.as_secs_f64()))
}

fn c2_floor_law(_: &mut Ledger) -> Outcome {
    let two = BigInt::from(2);
    let c5 = Graph::cycle(5).unwrap();
    for r in 0..=12 {
        let z = zeta_closed_form(&c5, r);
        let direct = zeta_direct(&c5, r);
        ensure(z == direct, format!("C5 r={r}: closed form and direct differ"))?;
        let floor = z.map(|v| v.floor().to_integer());
        if r >= 3 {
            ensure(floor.as_ref() == Some(&two), format!("C5 r={r}: floor {floor:?}"))?;
        } else {
            ensure(floor.as_ref().is_none_or(|f| *f > two), format!("C5 r={r}: floor {floor:?} not above 2"))?;
        }
    }
    let c7 = Graph::cycle(7).unwrap();
    let rows = floor_convergence_check(&c7, 14);
    let threshold = rows.iter().find(|row| row.equals_alpha).map(|row| row.r);
    ensure(threshold == Some(8), format!("C7 threshold {threshold:?}"))?;
    ensure(rows.iter().all(|row| row.consistent()), "C7 floors disagree with r >= alpha^2 - 1")?;
    for r in 7..=9 {
        ensure(zeta_direct(&c7, r) == zeta_closed_form(&c7, r), format!("C7 r={r}: direct differs"))?;
    }
    Ok("C5 threshold r = 3, C7 threshold r = 8".into())
}

fn c3_horn_k1(led: &mut Ledger) -> Outcome {
    let start = Instant::now();
    ensure(catalog::verify_horn_identity(), "Horn K1 identity does not hold")?;
    let h = catalog::horn();
    let raw = ConeConfig { denominators: vec![], ..ConeConfig::default() };
    let v = k1_membership(&h, &raw).map_err(|e| e.to_string())?;
    ensure(v.margin >= -1e-7, format!("margin {:.3e}", v.margin))?;
    let Some(AnyCertificate::Float(fc)) = &v.certificate else {
        return Err(format!("no float candidate (decision {})", v.decision));
    };
    let exact = round_certificate(&h, fc, 27_720).map_err(|e| e.to_string())?;
    let exact = AnyCertificate::Exact(exact);
    let rep = verify_certificate(&h, &exact, VerifyMode::Exact).map_err(|e| e.to_string())?;
    ensure(rep.pass, "rounded certificate fails exact verification")?;
    let v = k1_membership(&h, &ConeConfig::default()).map_err(|e| e.to_string())?;
    ensure(v.decision == Decision::Yes, format!("k1_membership(H) gave {}", v.decision))?;
    led.yes.push(("horn k1 (rounded)".into(), h.clone(), exact));
    led.yes.push(("horn k1".into(), h, v.certificate.unwrap()));
    let t = start.elapsed();
    ensure(t < Duration::from_secs(10), format!("took {t:?}"))?;
    Ok(format!("margin {:.2e}, exact rational certificate in {:.2}s", v.margin, t.as_secs_f64()))
}

fn c4_horn_not_spn(_: &mut Ledger) -> Outcome {
    let v = spn_membership(&catalog::horn(), &ConeConfig::default()).map_err(|e| e.to_string())?;
    ensure(v.decision == Decision::No && v.margin <= -1e-4, format!("{} margin {:.3e}", v.decision, v.margin))?;
    Ok(format!("NO, margin {:.4e}", v.margin))
}

fn c5_theta_c5(led: &mut Ledger) -> Outcome {
    let cfg = SolverConfig::default();
    let c5 = Graph::cycle(5).unwrap();
    let t0 = theta_r(&c5, 0, &cfg).map_err(|e| e.to_string())?.value.as_f64();
    let t1 = theta_r(&c5, 1, &cfg).map_err(|e| e.to_string())?.value.as_f64();
    let lov = lovasz_theta(&c5, &cfg).map_err(|e| e.to_string())?;
    let s5 = 5f64.sqrt();
    ensure((t0 - s5).abs() <= 1e-4, format!("theta0 {t0}"))?;
    ensure((lov - s5).abs() <= 1e-4, format!("lovasz {lov}"))?;
    ensure((odd_cycle_theta(5) - t0).abs() <= 1e-4, "odd-cycle closed form differs")?;
    ensure((t1 - 2.0).abs() <= 1e-4, format!("theta1 {t1}"))?;
    // Membership at the bounds: sqrt(5) rounded up lies in K^(0); t = 2 in K^(1).
    let b = RatMat::from_fn(5, |i, j| if i == j || c5.has_edge(i, j) { rat(1) } else { rat(0) });
    let t = ratio(22361, 10000);
    let m0 = b.scale(&t).sub(&RatMat::ones(5)).unwrap();
    let cc = ConeConfig::default();
    let v0 = spn_membership(&m0, &cc).map_err(|e| e.to_string())?;
    ensure(v0.decision == Decision::Yes, format!("t = 2.2361 not certified in K0: {}", v0.decision))?;
    let mg = graph_matrix(&c5);
    let v1 = k1_membership(&mg, &cc).map_err(|e| e.to_string())?;
    ensure(v1.decision == Decision::Yes, format!("M_C5 not certified in K1: {}", v1.decision))?;
    led.yes.push(("2.2361(A+I)-J in K0".into(), m0, v0.certificate.unwrap()));
    led.yes.push(("M_C5 in K1".into(), mg, v1.certificate.unwrap()));
    Ok(format!("theta0 = {t0:.7}, lovasz = {lov:.7}, theta1 = {t1:.7}"))
}

fn random_rational(rng: &mut ChaCha8Rng, lo: i64, hi: i64) -> Rational {
    ratio(rng.gen_range(lo..=hi), rng.gen_range(1..=3))
}

fn c6_diananda(_: &mut Ledger) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let cfg = ConeConfig::default();
    let (mut agree, mut band, mut cop) = (0, 0, 0);
    for k in 0..100 {
        let mut m = RatMat::zeros(4);
        for i in 0..4 {
            m.set(i, i, random_rational(&mut rng, 0, 4));
            for j in 0..i {
                m.set(i, j, random_rational(&mut rng, -3, 3));
            }
        }
        let class = copositivity_class(&m).map_err(|e| e.to_string())?.class;
        let v = spn_membership(&m, &cfg).map_err(|e| e.to_string())?;
        let copositive = class != CopositivityClass::NotCopositive;
        cop += copositive as usize;
        match v.decision {
            Decision::Inconclusive => band += 1,
            Decision::Yes if copositive => agree += 1,
            Decision::No if !copositive => agree += 1,
            d => return Err(format!("matrix {k}: class {class:?} but spn {d} (margin {:.3e})", v.margin)),
        }
    }
    ensure(band < 5, format!("{band} band hits"))?;
    Ok(format!("{agree} agree ({cop} copositive), {band} band hits"))
}

fn c7_motzkin(_: &mut Ledger) -> Outcome {
    let v = sos_membership(&catalog::motzkin_poly(), &ConeConfig::default()).map_err(|e| e.to_string())?;
    ensure(v.decision == Decision::No && v.margin <= -1e-4, format!("{} margin {:.3e}", v.decision, v.margin))?;
    ensure(catalog::verify_motzkin_certificate(), "Motzkin certificate identity fails")?;
    Ok(format!("NO, margin {:.4e}; certificate identity exact", v.margin))
}

fn zero_keys(z: &copkit::copositivity::ZeroSet) -> (BTreeSet<Vec<Rational>>, BTreeSet<(Vec<usize>, usize)>) {
    (
        z.finite_zeros.iter().map(|p| p.coords.clone()).collect(),
        z.infinite_families.iter().map(|f| (f.support.clone(), f.dimension)).collect(),
    )
}

fn c8_zero_structure(_: &mut Ledger) -> Outcome {
    let c4 = graph_matrix_zeros(&Graph::cycle(4).unwrap());
    let h = ratio(1, 2);
    let want: BTreeSet<Vec<Rational>> =
        [vec![h.clone(), rat(0), h.clone(), rat(0)], vec![rat(0), h.clone(), rat(0), h.clone()]].into_iter().collect();
    let (got, fam) = zero_keys(&c4);
    ensure(got == want && fam.is_empty() && c4.is_finite, "C4 zeros differ")?;
    let c5 = graph_matrix_zeros(&Graph::cycle(5).unwrap());
    ensure(!c5.is_finite && !c5.infinite_families.is_empty(), "C5 should have infinite families")?;
    let third = ratio(1, 3);
    let x_t = [h.clone(), rat(0), &third / rat(2), (rat(1) - &third) / rat(2), rat(0)];
    let z = check_zero_characterization(&Graph::cycle(5).unwrap(), &x_t).map_err(|e| e.to_string())?;
    ensure(z.is_zero, "C5 family point is not a zero")?;
    let mut checked = 0;
    for g in fixtures().into_iter().filter(|g| g.n() <= 10) {
        let comb = graph_matrix_zeros(&g);
        let oracle = zeros_in_simplex(&graph_matrix(&g)).map_err(|e| format!("{}: {e}", g.name()))?;
        ensure(!comb.truncated, format!("{}: enumeration truncated", g.name()))?;
        ensure(zero_keys(&comb) == zero_keys(&oracle), format!("{}: oracle and characterization differ", g.name()))?;
        ensure(comb.is_finite == oracle.is_finite, format!("{}: finiteness differs", g.name()))?;
        ensure(comb.is_finite == critical_edges(&g).is_empty(), format!("{}: finiteness vs acriticality", g.name()))?;
        for p in &comb.finite_zeros {
            let c = check_zero_characterization(&g, &p.coords).map_err(|e| format!("{}: {e}", g.name()))?;
            ensure(c.is_zero, format!("{}: listed zero fails", g.name()))?;
        }
        checked += 1;
    }
    Ok(format!("C4 exact, C5 has {} families, {checked} fixtures agree", c5.infinite_families.len()))
}

fn c9_critical_edges(_: &mut Ledger) -> Outcome {
    let counts = [
        critical_edges(&Graph::cycle(5).unwrap()).len(),
        critical_edges(&Graph::cycle(6).unwrap()).len(),
        critical_edges(&Graph::petersen()).len(),
    ];
    ensure(counts == [5, 0, 0], format!("counts {counts:?}"))?;
    Ok("C5: 5, C6: 0, Petersen: 0".into())
}

fn c10_acritical_scc(_: &mut Ledger) -> Outcome {
    let mut total = 0;
    for g in [Graph::cycle(6).unwrap(), Graph::petersen()] {
        let reps = check_scc(&graph_matrix(&g)).map_err(|e| e.to_string())?;
        ensure(!reps.is_empty(), format!("{}: no zeros", g.name()))?;
        ensure(reps.iter().all(|r| r.holds), format!("{}: SCC fails", g.name()))?;
        total += reps.len();
    }
    Ok(format!("{total} zeros satisfy strict complementarity"))
}

fn c11_counterexamples(led: &mut Ledger) -> Outcome {
    let cfg = ConeConfig::default();
    let h0 = catalog::horn_plus_zero();
    let s = spn_membership(&h0, &cfg).map_err(|e| e.to_string())?;
    let k = k1_membership(&h0, &cfg).map_err(|e| e.to_string())?;
    ensure(s.decision == Decision::No && s.margin <= -1e-5, format!("H+0 spn {} {:.3e}", s.decision, s.margin))?;
    ensure(k.decision == Decision::No && k.margin <= -1e-5, format!("H+0 k1 {} {:.3e}", k.decision, k.margin))?;
    let m = catalog::matrix_m();
    let l = las_simplex_membership(&m, 3, &cfg).map_err(|e| e.to_string())?;
    ensure(l.decision == Decision::No, format!("matrix M las r=3: {} {:.3e}", l.decision, l.margin))?;
    let c = copkit::cones::c_membership(&m, 0);
    ensure(c.decision == Decision::Yes, "matrix M not in C^(0)")?;
    led.yes.push(("matrix M in C0".into(), m, c.certificate.unwrap()));
    Ok(format!("H+0 margins {:.3e} / {:.3e}; M: LAS3 margin {:.3e}, C0 YES", s.margin, k.margin, l.margin))
}

fn c12_las_two_by_two(led: &mut Ledger) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let cfg = ConeConfig::default();
    let mut worst = f64::INFINITY;
    let mut yes = 0;
    for k in 0..50 {
        let m = if k % 5 == 4 {
            let a = random_rational(&mut rng, 1, 5);
            RatMat::from_rows(&[vec![a.clone(), -a.clone()], vec![-a.clone(), a]]).unwrap()
        } else {
            let (l00, l10, l11) =
                (random_rational(&mut rng, -3, 3), random_rational(&mut rng, -3, 3), random_rational(&mut rng, -3, 3));
            let p = RatMat::from_rows(&[
                vec![&l00 * &l00, &l00 * &l10],
                vec![&l00 * &l10, &l10 * &l10 + &l11 * &l11],
            ])
            .unwrap();
            let nv: [Rational; 3] = std::array::from_fn(|_| random_rational(&mut rng, 0, 2));
            let n = RatMat::from_fn(2, |i, j| if (i + j + k) % 2 == 0 { nv[i + j].clone() } else { rat(0) });
            p.add(&n).unwrap()
        };
        let v = las_simplex_membership(&m, 3, &cfg).map_err(|e| e.to_string())?;
        ensure(v.margin >= -1e-6, format!("matrix {k} {m:?}: margin {:.3e}", v.margin))?;
        worst = worst.min(v.margin);
        if v.decision == Decision::Yes {
            yes += 1;
            led.yes.push((format!("2x2 LAS #{k}"), m, v.certificate.unwrap()));
        }
    }
    Ok(format!("50 matrices, worst margin {worst:.3e}, {yes} YES"))
}

fn c13_t_psi(_: &mut Ledger) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let mut worst: f64 = 0.0;
    for k in 0..25 {
        let raw: [f64; 5] = std::array::from_fn(|_| rng.gen_range(0.05..1.0));
        let total: f64 = raw.iter().sum();
        let scale = rng.gen_range(0.3..0.95) * std::f64::consts::PI / total;
        let p = TPsiParams::new(raw.map(|v| v * scale)).map_err(|e| e.to_string())?;
        let t = catalog::t_psi(&p);
        for v in catalog::t_psi_zeros(&p) {
            let q = t.quad(&v);
            worst = worst.max(q.abs());
            ensure(q.abs() <= 1e-10, format!("psi #{k}: zero value {q:.3e}"))?;
        }
        let c = copositivity_class_numeric(&t, 1e-9).map_err(|e| e.to_string())?;
        ensure(c.class == CopositivityClass::Boundary, format!("psi #{k}: class {:?}", c.class))?;
    }
    Ok(format!("25 parameter draws, max |v^T T v| = {worst:.2e}, all boundary"))
}

/// A random SDP with optimum `X* = diag(D, 0)`, `Z* = diag(0, E)` and
/// objective value `bᵀy*`.
fn constructed_sdp(rng: &mut ChaCha8Rng) -> (SdpProblem, f64) {
    let mut p = SdpProblem::new();
    let k = rng.gen_range(2..=5);
    let rank = rng.gen_range(1..k);
    let nl = rng.gen_range(0..=3);
    let lp_support = if nl > 0 { rng.gen_range(0..=nl) } else { 0 };
    let x = p.add_psd_block(k);
    let s0 = if nl > 0 { p.add_nonneg(nl) } else { 0 };
    let nvars = k * (k + 1) / 2 + nl;
    let m = rng.gen_range(1..nvars.min(8));
    let xstar: Vec<i64> = (0..k).map(|i| if i < rank { rng.gen_range(1..=4) } else { 0 }).collect();
    let zstar: Vec<i64> = (0..k).map(|i| if i < rank { 0 } else { rng.gen_range(1..=4) }).collect();
    let xl: Vec<i64> = (0..nl).map(|i| if i < lp_support { rng.gen_range(1..=4) } else { 0 }).collect();
    let zl: Vec<i64> = (0..nl).map(|i| if i < lp_support { 0 } else { rng.gen_range(1..=4) }).collect();
    let ystar: Vec<i64> = (0..m).map(|_| rng.gen_range(-3..=3)).collect();
    let mut c_blk = vec![vec![0i64; k]; k];
    let mut c_lp = vec![0i64; nl];
    for yi in &ystar {
        let mut a = vec![vec![0i64; k]; k];
        for i in 0..k {
            for j in 0..=i {
                let v = rng.gen_range(-3..=3);
                a[i][j] = v;
                a[j][i] = v;
            }
        }
        let al: Vec<i64> = (0..nl).map(|_| rng.gen_range(-3..=3)).collect();
        let mut terms = Vec::new();
        for i in 0..k {
            for j in 0..=i {
                let coef = if i == j { a[i][i] } else { 2 * a[i][j] };
                terms.push((VarRef::psd(x, i, j), rat(coef)));
                c_blk[i][j] += yi * a[i][j];
            }
        }
        for l in 0..nl {
            terms.push((VarRef::NonNeg(s0 + l), rat(al[l])));
            c_lp[l] += yi * al[l];
        }
        let b: i64 = (0..k).map(|i| a[i][i] * xstar[i]).sum::<i64>() + (0..nl).map(|l| al[l] * xl[l]).sum::<i64>();
        p.add_constraint(terms, rat(b));
    }
    let mut obj = Vec::new();
    for i in 0..k {
        for j in 0..=i {
            let c = c_blk[i][j] + if i == j { zstar[i] } else { 0 };
            obj.push((VarRef::psd(x, i, j), rat(if i == j { c } else { 2 * c })));
        }
    }
    for l in 0..nl {
        obj.push((VarRef::NonNeg(s0 + l), rat(c_lp[l] + zl[l])));
    }
    p.set_objective(obj, Sense::Minimize);
    let opt: i64 = (0..k).map(|i| (c_blk[i][i] + zstar[i]) * xstar[i]).sum::<i64>()
        + (0..nl).map(|l| (c_lp[l] + zl[l]) * xl[l]).sum::<i64>();
    (p, opt as f64)
}

fn c14_solver_health(_: &mut Ledger) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let cfg = SolverConfig::default();
    let (mut worst_obj, mut worst_res): (f64, f64) = (0.0, 0.0);
    for k in 0..50 {
        let (p, opt) = constructed_sdp(&mut rng);
        let s = solve(&p, &cfg).map_err(|e| format!("problem {k}: {e}"))?;
        let r = residuals(&p, &s).map_err(|e| e.to_string())?;
        let err = (s.objective - opt).abs();
        worst_obj = worst_obj.max(err);
        let res = r.primal.max(r.dual);
        worst_res = worst_res.max(res);
        ensure(err <= 1e-6, format!("problem {k}: objective {} vs {opt} ({:?})", s.objective, s.status))?;
        ensure(res <= 1e-7, format!("problem {k}: residuals {r:?} ({:?})", s.status))?;
        let again = solve(&p, &cfg).map_err(|e| e.to_string())?;
        ensure(format!("{s:?}") == format!("{again:?}"), format!("problem {k}: runs differ"))?;
    }
    Ok(format!("50 problems, max objective error {worst_obj:.2e}, max residual {worst_res:.2e}, deterministic"))
}

fn c15_round_trip(led: &mut Ledger) -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let cfg = copkit_cli::RunConfig::default();
    ensure(led.yes.len() >= 4, format!("only {} YES verdicts collected", led.yes.len()))?;
    for (k, (label, m, c)) in led.yes.iter().enumerate() {
        let mpath = dir.path().join(format!("m{k}.txt"));
        let cpath = dir.path().join(format!("c{k}.json"));
        std::fs::write(&mpath, m.to_text()).map_err(|e| e.to_string())?;
        std::fs::write(&cpath, certificate_to_json(m, c).to_string()).map_err(|e| e.to_string())?;
        let mut out = Vec::new();
        let code = copkit_cli::cmd_verify(&cpath, mpath.to_str().unwrap(), &cfg, &mut out);
        ensure(code == 0, format!("{label}: exit {code}\n{}", String::from_utf8_lossy(&out)))?;
    }
    let exact = led.yes.iter().filter(|(_, _, c)| c.is_exact()).count();
    Ok(format!("{} certificates re-verify ({exact} exact)", led.yes.len()))
}

fn main() {
    let criteria: [(&str, fn(&mut Ledger) -> Outcome); 15] = [
        ("zeta direct = closed form", c1_zeta_equivalence),
        ("zeta floor law", c2_floor_law),
        ("Horn in K1", c3_horn_k1),
        ("Horn not in K0", c4_horn_not_spn),
        ("theta hierarchy on C5", c5_theta_c5),
        ("SPN = COP on 4x4", c6_diananda),
        ("Motzkin not SOS", c7_motzkin),
        ("graph matrix zeros", c8_zero_structure),
        ("critical edges", c9_critical_edges),
        ("acritical strict complementarity", c10_acritical_scc),
        ("counterexample instances", c11_counterexamples),
        ("LAS exact for n = 2", c12_las_two_by_two),
        ("T(psi) zeros", c13_t_psi),
        ("solver health", c14_solver_health),
        ("certificate round trip", c15_round_trip),
    ];
    let mut led = Ledger::default();
    let mut failed = 0;
    for (k, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let out = f(&mut led);
        let t = start.elapsed().as_secs_f64();
        match out {
            Ok(detail) => println!("PASS {:>2} {name}: {detail} [{t:.2}s]", k + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {why} [{t:.2}s]", k + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
