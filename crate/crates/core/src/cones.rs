//! Membership tests for the inner approximations of the copositive cone.
//!
//! Every SDP-based test builds a coefficient-matching system, maximizes the
//! uniform margin `λ` by which all Gram blocks and nonnegative multipliers
//! can be shifted, and decides by the sign of `λ`. A positive or boundary
//! margin triggers rational rounding; a certificate that survives exact
//! verification makes the verdict YES regardless of float noise.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_traits::{Signed, Zero};

use crate::error::{Error, Result};
use crate::polyarena::{exponents_of_degree, exponents_up_to, Exponent, PolyaMode, Polynomial};
use crate::rational::{approximate, rat, Rational, Scalar};
use crate::sdpcore::{margin_maximize, MarginTargets, SdpProblem, SdpSolution, SolverConfig, Status, VarRef};
use crate::symlin::{jacobi_eigen, psd_check_exact, sparse_rref, sym_eigenvalues, Dense, FloatMat, RatMat, SparseRow, SymMat, JACOBI_MAX_SWEEPS};

mod json;

pub use json::{certificate_from_json, certificate_to_json, matrix_sha, CertificateFile, SCHEMA};

/// Margins with absolute value at or below this are inconclusive.
pub const DECISION_TOL: f64 = 1e-7;
/// Residual and eigenvalue tolerance for float certificates.
pub const VERIFY_TOL: f64 = 1e-6;
/// Residual level at which a stalled solve still decides a clear sign.
pub const NEAR_OPTIMAL: f64 = 1e-6;
/// Largest Gram basis (summed over blocks) the SOS-type tests will build.
pub const MAX_BASIS: usize = 600;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Decision {
    Yes,
    No,
    Inconclusive,
}

impl fmt::Display for Decision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Decision::Yes => "YES",
            Decision::No => "NO",
            Decision::Inconclusive => "INCONCLUSIVE",
        })
    }
}

/// A Gram matrix over a monomial basis: the polynomial `bᵀ G b`.
#[derive(Clone, Debug, PartialEq)]
pub struct GramBlock<T> {
    pub basis: Vec<Exponent>,
    pub gram: SymMat<T>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Certificate<T> {
    /// Every coefficient of `(Σ xᵢ)^r xᵀMx`, listed over all exponents of degree `r + 2`.
    Polya { order: u32, coefficients: Vec<(Exponent, T)> },
    /// `M = P + N`, `P ⪰ 0`, `N ≥ 0`.
    Spn { p: SymMat<T>, n: SymMat<T> },
    /// The blocks `P(1), ..., P(n)` of the order-one characterization.
    K1 { blocks: Vec<SymMat<T>> },
    /// Gram blocks, one per exponent parity class, of a sum-of-squares identity.
    Sos { blocks: Vec<GramBlock<T>> },
    /// `(Σ xᵢ)^r xᵀMx = Σ_β x^β xᵀ S_β x + Σ_γ c_γ x^γ`.
    Qr { order: u32, sigma: Vec<(Exponent, SymMat<T>)>, c: Vec<(Exponent, T)> },
    /// `xᵀMx = σ₀ + Σ xᵢ σᵢ + q (Σ xᵢ - 1)`.
    Lasserre { order: u32, sigma0: GramBlock<T>, sigma: Vec<GramBlock<T>>, q: Vec<(Exponent, T)> },
}

impl<T> Certificate<T> {
    pub fn cone(&self) -> &'static str {
        match self {
            Certificate::Polya { .. } => "polya",
            Certificate::Spn { .. } => "spn",
            Certificate::K1 { .. } => "k1",
            Certificate::Sos { .. } => "sos",
            Certificate::Qr { .. } => "qr",
            Certificate::Lasserre { .. } => "lasserre",
        }
    }

    /// Hierarchy order; for `Sos` this is the basis degree minus two.
    pub fn order(&self) -> u32 {
        match self {
            Certificate::Polya { order, .. } | Certificate::Qr { order, .. } | Certificate::Lasserre { order, .. } => *order,
            Certificate::Spn { .. } => 0,
            Certificate::K1 { .. } => 1,
            Certificate::Sos { blocks } => {
                blocks.first().and_then(|b| b.basis.first()).map_or(0, |e| e.degree().saturating_sub(2))
            }
        }
    }
}

/// A certificate in either exact or floating-point data.
#[derive(Clone, Debug, PartialEq)]
pub enum AnyCertificate {
    Exact(Certificate<Rational>),
    Float(Certificate<f64>),
}

impl AnyCertificate {
    pub fn cone(&self) -> &'static str {
        match self {
            AnyCertificate::Exact(c) => c.cone(),
            AnyCertificate::Float(c) => c.cone(),
        }
    }

    pub fn order(&self) -> u32 {
        match self {
            AnyCertificate::Exact(c) => c.order(),
            AnyCertificate::Float(c) => c.order(),
        }
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, AnyCertificate::Exact(_))
    }
}

#[derive(Clone, Debug)]
pub struct Verdict {
    pub decision: Decision,
    /// Optimal margin; `+∞` for exact coefficient tests, `-∞` when the
    /// identity system itself is inconsistent, NaN when the solver failed.
    pub margin: f64,
    /// Present for YES; an INCONCLUSIVE verdict may carry the unverified
    /// float candidate.
    pub certificate: Option<AnyCertificate>,
    /// Final dual multipliers of a NO verdict (informal, not verified).
    pub refutation: Option<Vec<f64>>,
    pub note: Option<String>,
}

impl Verdict {
    fn yes(margin: f64, cert: AnyCertificate) -> Self {
        Verdict { decision: Decision::Yes, margin, certificate: Some(cert), refutation: None, note: None }
    }

    fn other(decision: Decision, margin: f64, note: Option<String>) -> Self {
        Verdict { decision, margin, certificate: None, refutation: None, note }
    }
}

#[derive(Clone, Debug)]
pub struct ConeConfig {
    pub decision_tol: f64,
    pub verify_tol: f64,
    pub solver: SolverConfig,
    /// Denominator bounds tried in turn when rounding; empty disables rounding.
    pub denominators: Vec<u64>,
}

impl Default for ConeConfig {
    fn default() -> Self {
        ConeConfig {
            decision_tol: DECISION_TOL,
            verify_tol: VERIFY_TOL,
            solver: SolverConfig::default(),
            denominators: vec![12, 840, 27_720],
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum VerifyMode {
    Exact,
    Float(f64),
}

#[derive(Clone, Debug, PartialEq)]
pub struct VerifyReport {
    /// Largest absolute coefficient mismatch of the reconstructed identity.
    pub identity_residual: f64,
    /// Smallest eigenvalue over all Gram blocks (`+∞` if there are none).
    pub psd_margin: f64,
    /// Smallest nonnegative multiplier or inequality slack (`+∞` if none).
    pub nonneg_margin: f64,
    pub pass: bool,
}

// ---------------------------------------------------------------------------
// Coefficient maps generic over the scalar type.

type Coeffs<T> = BTreeMap<Exponent, T>;

fn acc<T: Scalar>(map: &mut Coeffs<T>, e: Exponent, v: T) {
    if v.is_zero() {
        return;
    }
    let slot = map.entry(e).or_insert_with(T::zero);
    *slot += v;
}

fn coeffs_of<T: Scalar>(p: &Polynomial) -> Coeffs<T> {
    p.terms().iter().map(|(e, c)| (e.clone(), T::from_rational(c))).collect()
}

fn coeffs_mul<T: Scalar>(a: &Coeffs<T>, b: &Coeffs<T>) -> Coeffs<T> {
    let mut out = Coeffs::new();
    for (ea, ca) in a {
        for (eb, cb) in b {
            acc(&mut out, ea.add(eb), ca.clone() * cb.clone());
        }
    }
    out
}

fn coeffs_add<T: Scalar>(a: &mut Coeffs<T>, b: &Coeffs<T>, scale: &T) {
    for (e, c) in b {
        acc(a, e.clone(), c.clone() * scale.clone());
    }
}

/// `(Σ_{i,j} G_ij b_i b_j) * mult`.
fn gram_coeffs<T: Scalar>(basis: &[Exponent], gram: &SymMat<T>, mult: &Coeffs<T>) -> Coeffs<T> {
    let two = T::from_i64(2);
    let mut out = Coeffs::new();
    for i in 0..basis.len() {
        for j in 0..=i {
            let g = if i == j { gram.get(i, i).clone() } else { gram.get(i, j).clone() * two.clone() };
            if g.is_zero() {
                continue;
            }
            let e = basis[i].add(&basis[j]);
            for (me, mc) in mult {
                acc(&mut out, e.add(me), g.clone() * mc.clone());
            }
        }
    }
    out
}

fn max_mismatch<T: Scalar>(a: &Coeffs<T>, b: &Coeffs<T>) -> T {
    let keys: BTreeSet<&Exponent> = a.keys().chain(b.keys()).collect();
    let mut worst = T::zero();
    for e in keys {
        let d = a.get(e).cloned().unwrap_or_else(T::zero) - b.get(e).cloned().unwrap_or_else(T::zero);
        let d = d.abs();
        if d > worst {
            worst = d;
        }
    }
    worst
}

fn unit_coeffs<T: Scalar>(n: usize) -> Coeffs<T> {
    let mut m = Coeffs::new();
    m.insert(Exponent::zero(n), T::one());
    m
}

fn var_coeffs<T: Scalar>(n: usize, i: usize) -> Coeffs<T> {
    let mut m = Coeffs::new();
    m.insert(Exponent::unit(n, i), T::one());
    m
}

fn quad_coeffs<T: Scalar>(m: &RatMat) -> Coeffs<T> {
    coeffs_of(&Polynomial::quad_form(m))
}

/// Divides `g` by `Σ xᵢ - 1` treating it as monic in the last variable.
/// Returns the quotient; any remainder is dropped.
fn divide_by_simplex<T: Scalar>(g: &Coeffs<T>, n: usize) -> Coeffs<T> {
    let last = n - 1;
    let mut slices: BTreeMap<u32, Coeffs<T>> = BTreeMap::new();
    for (e, c) in g {
        let k = e.entries()[last];
        let mut ent = e.entries().to_vec();
        ent[last] = 0;
        acc(slices.entry(k).or_default(), Exponent::new(ent), c.clone());
    }
    let top = match slices.keys().next_back() {
        Some(&d) if d > 0 => d,
        _ => return Coeffs::new(),
    };
    // a = 1 - Σ_{i<n} x_i, so that Σx - 1 = x_n - a.
    let mut a: Coeffs<T> = unit_coeffs(n);
    for i in 0..last {
        acc(&mut a, Exponent::unit(n, i), -T::one());
    }
    let mut quotient = Coeffs::new();
    let mut qk = slices.get(&top).cloned().unwrap_or_default();
    let mut k = top;
    loop {
        // qk is the coefficient of x_n^(k-1).
        for (e, c) in &qk {
            let mut ent = e.entries().to_vec();
            ent[last] = k - 1;
            acc(&mut quotient, Exponent::new(ent), c.clone());
        }
        if k == 1 {
            break;
        }
        k -= 1;
        let mut next = slices.get(&k).cloned().unwrap_or_default();
        coeffs_add(&mut next, &coeffs_mul(&a, &qk), &T::one());
        qk = next;
    }
    quotient
}

fn extend_exponent(e: &Exponent) -> Exponent {
    let mut ent = e.entries().to_vec();
    ent.push(0);
    Exponent::new(ent)
}

// ---------------------------------------------------------------------------
// Verification.

/// Everything a certificate asserts: an identity residual plus the PSD
/// blocks and scalars that must be nonnegative.
struct Obligations<T> {
    residual: T,
    psd: Vec<SymMat<T>>,
    nonneg: Vec<T>,
}

fn check_dim<T: Scalar>(m: &SymMat<T>, n: usize, what: &str) -> Result<()> {
    if m.n() != n {
        return Err(Error::Certificate(format!("{what} is {}x{}, expected {n}x{n}", m.n(), m.n())));
    }
    Ok(())
}

fn obligations<T: Scalar>(m: &RatMat, c: &Certificate<T>) -> Result<Obligations<T>> {
    let n = m.n();
    let mt: SymMat<T> = m.map(T::from_rational);
    match c {
        Certificate::Polya { order, coefficients } => {
            let want: Coeffs<T> = coeffs_of(&Polynomial::polya_expand(m, *order, PolyaMode::Convolution));
            let mut have = Coeffs::new();
            for (e, v) in coefficients {
                if e.len() != n || e.degree() != order + 2 {
                    return Err(Error::Certificate("Polya exponent of wrong shape".into()));
                }
                acc(&mut have, e.clone(), v.clone());
            }
            let listed: BTreeSet<&Exponent> = coefficients.iter().map(|(e, _)| e).collect();
            if listed.len() != coefficients.len() || listed.len() != exponents_of_degree(n, order + 2).len() {
                return Err(Error::Certificate("Polya coefficient list is not complete".into()));
            }
            Ok(Obligations {
                residual: max_mismatch(&want, &have),
                psd: vec![],
                nonneg: coefficients.iter().map(|(_, v)| v.clone()).collect(),
            })
        }
        Certificate::Spn { p, n: nn } => {
            check_dim(p, n, "P")?;
            check_dim(nn, n, "N")?;
            let diff = mt.sub(&p.add(nn)?)?;
            let mut nonneg = Vec::new();
            for i in 0..n {
                for j in 0..=i {
                    nonneg.push(nn.get(i, j).clone());
                }
            }
            Ok(Obligations { residual: max_abs_entry(&diff), psd: vec![p.clone()], nonneg })
        }
        Certificate::K1 { blocks } => {
            if blocks.len() != n {
                return Err(Error::Certificate(format!("{} K1 blocks for n = {n}", blocks.len())));
            }
            for b in blocks {
                check_dim(b, n, "K1 block")?;
            }
            let two = T::from_i64(2);
            let mut residual = T::zero();
            let mut bump = |v: T| {
                let v = v.abs();
                if v > residual {
                    residual = v;
                }
            };
            for i in 0..n {
                bump(blocks[i].get(i, i).clone() - mt.get(i, i).clone());
                for j in 0..n {
                    if i != j {
                        let lhs = two.clone() * blocks[i].get(i, j).clone() + blocks[j].get(i, i).clone();
                        let rhs = two.clone() * mt.get(i, j).clone() + mt.get(i, i).clone();
                        bump(lhs - rhs);
                    }
                }
            }
            let mut nonneg = Vec::new();
            for i in 0..n {
                for j in i + 1..n {
                    for k in j + 1..n {
                        let lhs = blocks[i].get(j, k).clone() + blocks[j].get(i, k).clone() + blocks[k].get(i, j).clone();
                        let rhs = mt.get(i, j).clone() + mt.get(i, k).clone() + mt.get(j, k).clone();
                        nonneg.push(rhs - lhs);
                    }
                }
            }
            Ok(Obligations { residual, psd: blocks.clone(), nonneg })
        }
        Certificate::Sos { blocks } => {
            let r = c.order();
            for b in blocks {
                if b.basis.iter().any(|e| e.len() != n || e.degree() != r + 2) {
                    return Err(Error::Certificate("Sos basis is not homogeneous of degree r + 2".into()));
                }
            }
            let target: Coeffs<T> = coeffs_of(&kr_target(m, r));
            let have = sum_gram_blocks(blocks, n)?;
            Ok(Obligations {
                residual: max_mismatch(&target, &have),
                psd: blocks.iter().map(|b| b.gram.clone()).collect(),
                nonneg: vec![],
            })
        }
        Certificate::Qr { order, sigma, c: scalars } => {
            let target: Coeffs<T> = coeffs_of(&Polynomial::polya_expand(m, *order, PolyaMode::Convolution));
            let linear: Vec<Exponent> = (0..n).map(|i| Exponent::unit(n, i)).collect();
            let mut have = Coeffs::new();
            for (beta, s) in sigma {
                check_dim(s, n, "Q block")?;
                if beta.len() != n || beta.degree() != *order {
                    return Err(Error::Certificate("Q block key of wrong degree".into()));
                }
                let mut mult = Coeffs::new();
                mult.insert(beta.clone(), T::one());
                coeffs_add(&mut have, &gram_coeffs(&linear, s, &mult), &T::one());
            }
            for (gamma, v) in scalars {
                if gamma.len() != n || gamma.degree() != order + 2 {
                    return Err(Error::Certificate("Q scalar key of wrong degree".into()));
                }
                acc(&mut have, gamma.clone(), v.clone());
            }
            Ok(Obligations {
                residual: max_mismatch(&target, &have),
                psd: sigma.iter().map(|(_, s)| s.clone()).collect(),
                nonneg: scalars.iter().map(|(_, v)| v.clone()).collect(),
            })
        }
        Certificate::Lasserre { order, sigma0, sigma, q } => {
            if sigma.len() != n {
                return Err(Error::Certificate(format!("{} multiplier blocks for n = {n}", sigma.len())));
            }
            let mut blocks = vec![sigma0];
            blocks.extend(sigma.iter());
            for b in &blocks {
                if b.basis.len() != b.gram.n() || b.basis.iter().any(|e| e.len() != n) {
                    return Err(Error::Certificate("Lasserre block shape".into()));
                }
            }
            if sigma0.basis.iter().any(|e| 2 * e.degree() > *order)
                || sigma.iter().any(|b| b.basis.iter().any(|e| 2 * e.degree() + 1 > *order))
                || q.iter().any(|(e, _)| e.len() != n || e.degree() + 1 > *order)
            {
                return Err(Error::Certificate("Lasserre degree bound exceeded".into()));
            }
            let mut have = gram_coeffs(&sigma0.basis, &sigma0.gram, &unit_coeffs(n));
            for (i, b) in sigma.iter().enumerate() {
                coeffs_add(&mut have, &gram_coeffs(&b.basis, &b.gram, &var_coeffs(n, i)), &T::one());
            }
            let mut simplex: Coeffs<T> = Coeffs::new();
            for i in 0..n {
                acc(&mut simplex, Exponent::unit(n, i), T::one());
            }
            acc(&mut simplex, Exponent::zero(n), -T::one());
            let qc: Coeffs<T> = q.iter().cloned().collect();
            coeffs_add(&mut have, &coeffs_mul(&qc, &simplex), &T::one());
            Ok(Obligations {
                residual: max_mismatch(&quad_coeffs(m), &have),
                psd: blocks.iter().map(|b| b.gram.clone()).collect(),
                nonneg: vec![],
            })
        }
    }
}

fn sum_gram_blocks<T: Scalar>(blocks: &[GramBlock<T>], n: usize) -> Result<Coeffs<T>> {
    let mut have = Coeffs::new();
    for b in blocks {
        if b.basis.len() != b.gram.n() {
            return Err(Error::Certificate("Gram block size differs from its basis".into()));
        }
        coeffs_add(&mut have, &gram_coeffs(&b.basis, &b.gram, &unit_coeffs(n)), &T::one());
    }
    Ok(have)
}

fn max_abs_entry<T: Scalar>(m: &SymMat<T>) -> T {
    let mut worst = T::zero();
    for i in 0..m.n() {
        for j in 0..=i {
            let v = m.get(i, j).abs();
            if v > worst {
                worst = v;
            }
        }
    }
    worst
}

fn min_eigenvalue(m: &FloatMat) -> f64 {
    if m.n() == 0 {
        return f64::INFINITY;
    }
    sym_eigenvalues(&Dense::from_sym(m)).map(|v| v[0]).unwrap_or(f64::NAN)
}

fn report_exact(ob: Obligations<Rational>) -> VerifyReport {
    let psd_ok = ob.psd.iter().all(|b| psd_check_exact(b).is_psd());
    let nonneg_ok = ob.nonneg.iter().all(|v| !v.is_negative());
    let psd_margin = ob.psd.iter().map(|b| min_eigenvalue(&b.to_f64())).fold(f64::INFINITY, f64::min);
    let nonneg_margin = ob.nonneg.iter().map(|v| v.as_f64()).fold(f64::INFINITY, f64::min);
    VerifyReport {
        identity_residual: ob.residual.as_f64(),
        psd_margin,
        nonneg_margin,
        pass: ob.residual.is_zero() && psd_ok && nonneg_ok,
    }
}

fn report_float(ob: Obligations<f64>, tol: f64) -> VerifyReport {
    let psd_margin = ob.psd.iter().map(min_eigenvalue).fold(f64::INFINITY, f64::min);
    let nonneg_margin = ob.nonneg.iter().copied().fold(f64::INFINITY, f64::min);
    let pass = ob.residual <= tol && psd_margin >= -tol && nonneg_margin >= -tol;
    VerifyReport { identity_residual: ob.residual, psd_margin, nonneg_margin, pass }
}

/// Re-derives the defining identity of `c` against `m` and checks every
/// PSD and sign obligation. Exact mode requires rational data.
pub fn verify_certificate(m: &RatMat, c: &AnyCertificate, mode: VerifyMode) -> Result<VerifyReport> {
    match (c, mode) {
        (AnyCertificate::Exact(c), VerifyMode::Exact) => Ok(report_exact(obligations(m, c)?)),
        (AnyCertificate::Exact(c), VerifyMode::Float(tol)) => {
            let fc = certificate_to_f64(c);
            Ok(report_float(obligations(m, &fc)?, tol))
        }
        (AnyCertificate::Float(_), VerifyMode::Exact) => {
            Err(Error::Precondition("exact verification needs a rational certificate".into()))
        }
        (AnyCertificate::Float(c), VerifyMode::Float(tol)) => Ok(report_float(obligations(m, c)?, tol)),
    }
}

/// Checks `p = Σ bᵀ G b` for an `Sos` certificate of a general polynomial.
pub fn verify_sos_certificate(p: &Polynomial, c: &AnyCertificate, mode: VerifyMode) -> Result<VerifyReport> {
    fn ob<T: Scalar>(p: &Polynomial, c: &Certificate<T>) -> Result<Obligations<T>> {
        let Certificate::Sos { blocks } = c else {
            return Err(Error::Certificate(format!("expected an sos certificate, got {}", c.cone())));
        };
        if blocks.iter().any(|b| b.basis.iter().any(|e| e.len() != p.nvars())) {
            return Err(Error::Certificate("basis exponents have the wrong length".into()));
        }
        let have = sum_gram_blocks(blocks, p.nvars())?;
        Ok(Obligations {
            residual: max_mismatch(&coeffs_of(p), &have),
            psd: blocks.iter().map(|b| b.gram.clone()).collect(),
            nonneg: vec![],
        })
    }
    match (c, mode) {
        (AnyCertificate::Exact(c), VerifyMode::Exact) => Ok(report_exact(ob(p, c)?)),
        (AnyCertificate::Exact(c), VerifyMode::Float(tol)) => Ok(report_float(ob(p, &certificate_to_f64(c))?, tol)),
        (AnyCertificate::Float(_), VerifyMode::Exact) => {
            Err(Error::Precondition("exact verification needs a rational certificate".into()))
        }
        (AnyCertificate::Float(c), VerifyMode::Float(tol)) => Ok(report_float(ob(p, c)?, tol)),
    }
}

pub fn certificate_to_f64(c: &Certificate<Rational>) -> Certificate<f64> {
    let f = |v: &Rational| v.as_f64();
    let fm = |m: &RatMat| m.to_f64();
    let fb = |b: &GramBlock<Rational>| GramBlock { basis: b.basis.clone(), gram: b.gram.to_f64() };
    let fl = |l: &Vec<(Exponent, Rational)>| l.iter().map(|(e, v)| (e.clone(), f(v))).collect();
    match c {
        Certificate::Polya { order, coefficients } => Certificate::Polya { order: *order, coefficients: fl(coefficients) },
        Certificate::Spn { p, n } => Certificate::Spn { p: fm(p), n: fm(n) },
        Certificate::K1 { blocks } => Certificate::K1 { blocks: blocks.iter().map(fm).collect() },
        Certificate::Sos { blocks } => Certificate::Sos { blocks: blocks.iter().map(fb).collect() },
        Certificate::Qr { order, sigma, c } => Certificate::Qr {
            order: *order,
            sigma: sigma.iter().map(|(e, s)| (e.clone(), fm(s))).collect(),
            c: fl(c),
        },
        Certificate::Lasserre { order, sigma0, sigma, q } => Certificate::Lasserre {
            order: *order,
            sigma0: fb(sigma0),
            sigma: sigma.iter().map(fb).collect(),
            q: fl(q),
        },
    }
}

// ---------------------------------------------------------------------------
// Programs: an SDP whose variables decode into a certificate.

#[derive(Clone, Debug)]
enum Layout {
    Spn { n: usize },
    K1 { n: usize },
    /// One block per basis; `target` is the polynomial the blocks sum to.
    Sos { bases: Vec<Vec<Exponent>> },
    Qr { order: u32, betas: Vec<Exponent>, gammas: Vec<Exponent> },
    /// Blocks over reduced variables: σ₀, then σ₁..σₙ.
    Las { order: u32, bases: Vec<Vec<Exponent>> },
}

#[derive(Clone, Debug)]
struct Program {
    sdp: SdpProblem,
    layout: Layout,
    /// The identity has a nonzero target coefficient no variable can reach.
    unreachable: bool,
}

/// Variable values of a program, in its block / scalar order.
#[derive(Clone, Debug)]
struct Values<T> {
    blocks: Vec<SymMat<T>>,
    nonneg: Vec<T>,
}

/// Collects coefficient-matching rows keyed by monomial.
struct IdentityBuilder {
    sdp: SdpProblem,
    rows: BTreeMap<Exponent, Vec<(VarRef, Rational)>>,
}

impl IdentityBuilder {
    fn new() -> Self {
        IdentityBuilder { sdp: SdpProblem::new(), rows: BTreeMap::new() }
    }

    fn gram(&mut self, basis: &[Exponent], mult: &[(Exponent, Rational)]) {
        let b = self.sdp.add_psd_block(basis.len());
        for i in 0..basis.len() {
            for j in 0..=i {
                let f = if i == j { rat(1) } else { rat(2) };
                let e = basis[i].add(&basis[j]);
                for (me, mc) in mult {
                    self.rows.entry(e.add(me)).or_default().push((VarRef::psd(b, i, j), &f * mc));
                }
            }
        }
    }

    fn scalar(&mut self, e: &Exponent) {
        let k = self.sdp.add_nonneg(1);
        self.rows.entry(e.clone()).or_default().push((VarRef::NonNeg(k), rat(1)));
    }

    fn finish(mut self, target: &Polynomial, layout: Layout) -> Program {
        let keys: BTreeSet<Exponent> = self.rows.keys().chain(target.terms().keys()).cloned().collect();
        let mut unreachable = false;
        for e in keys {
            let terms = self.rows.remove(&e).unwrap_or_default();
            let rhs = target.coeff(&e);
            if terms.is_empty() {
                unreachable |= !rhs.is_zero();
                continue;
            }
            self.sdp.add_constraint(terms, rhs);
        }
        Program { sdp: self.sdp, layout, unreachable }
    }
}

fn spn_program(m: &RatMat) -> Program {
    let n = m.n();
    let mut sdp = SdpProblem::new();
    let b = sdp.add_psd_block(n);
    let s0 = sdp.add_nonneg(n * (n + 1) / 2);
    for (k, (i, j)) in lower_pairs(n).enumerate() {
        sdp.add_constraint(vec![(VarRef::psd(b, i, j), rat(1)), (VarRef::NonNeg(s0 + k), rat(1))], m.get(i, j).clone());
    }
    Program { sdp, layout: Layout::Spn { n }, unreachable: false }
}

/// Pairs `(i, j)` with `j <= i`, row by row.
fn lower_pairs(n: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..n).flat_map(|i| (0..=i).map(move |j| (i, j)))
}

fn triples(n: usize) -> impl Iterator<Item = (usize, usize, usize)> {
    (0..n).flat_map(move |i| (i + 1..n).flat_map(move |j| (j + 1..n).map(move |k| (i, j, k))))
}

fn k1_program(m: &RatMat) -> Program {
    let n = m.n();
    let mut sdp = SdpProblem::new();
    for _ in 0..n {
        sdp.add_psd_block(n);
    }
    for i in 0..n {
        sdp.add_constraint(vec![(VarRef::psd(i, i, i), rat(1))], m.get(i, i).clone());
    }
    for i in 0..n {
        for j in 0..n {
            if i != j {
                sdp.add_constraint(
                    vec![(VarRef::psd(i, i, j), rat(2)), (VarRef::psd(j, i, i), rat(1))],
                    rat(2) * m.get(i, j) + m.get(i, i),
                );
            }
        }
    }
    for (i, j, k) in triples(n) {
        let s = sdp.add_nonneg(1);
        sdp.add_constraint(
            vec![
                (VarRef::psd(i, j, k), rat(1)),
                (VarRef::psd(j, i, k), rat(1)),
                (VarRef::psd(k, i, j), rat(1)),
                (VarRef::NonNeg(s), rat(1)),
            ],
            m.get(i, j) + m.get(i, k) + m.get(j, k),
        );
    }
    Program { sdp, layout: Layout::K1 { n }, unreachable: false }
}

/// `(Σ xᵢ²)^r (x∘x)ᵀ M (x∘x)`.
pub fn kr_target(m: &RatMat, r: u32) -> Polynomial {
    let n = m.n();
    &Polynomial::sum_of_squares(n).pow(r) * &Polynomial::quad_form(m).substitute_squares()
}

/// Splits a basis into exponent-parity classes, in first-seen order.
fn parity_classes(basis: Vec<Exponent>) -> Vec<Vec<Exponent>> {
    let mut classes: BTreeMap<u64, Vec<Exponent>> = BTreeMap::new();
    for e in basis {
        classes.entry(e.parity()).or_default().push(e);
    }
    classes.into_values().collect()
}

fn check_basis_cap(size: usize) -> Result<()> {
    if size > MAX_BASIS {
        return Err(Error::Cap(format!("Gram basis of size {size} exceeds {MAX_BASIS}")));
    }
    Ok(())
}

fn sos_program(target: &Polynomial, bases: Vec<Vec<Exponent>>) -> Result<Program> {
    check_basis_cap(bases.iter().map(Vec::len).sum())?;
    let n = target.nvars();
    let mut ib = IdentityBuilder::new();
    let one = [(Exponent::zero(n), rat(1))];
    for b in &bases {
        ib.gram(b, &one);
    }
    Ok(ib.finish(target, Layout::Sos { bases }))
}

fn kr_program(m: &RatMat, r: u32) -> Result<Program> {
    let n = m.n();
    let basis = exponents_of_degree(n, r + 2);
    check_basis_cap(basis.len())?;
    sos_program(&kr_target(m, r), parity_classes(basis))
}

fn qr_program(m: &RatMat, r: u32) -> Result<Program> {
    let n = m.n();
    let betas = exponents_of_degree(n, r);
    let gammas = exponents_of_degree(n, r + 2);
    check_basis_cap(betas.len() * n)?;
    let linear: Vec<Exponent> = (0..n).map(|i| Exponent::unit(n, i)).collect();
    let mut ib = IdentityBuilder::new();
    for beta in &betas {
        ib.gram(&linear, &[(beta.clone(), rat(1))]);
    }
    for g in &gammas {
        ib.scalar(g);
    }
    let target = Polynomial::polya_expand(m, r, PolyaMode::ClosedForm);
    Ok(ib.finish(&target, Layout::Qr { order: r, betas, gammas }))
}

/// Reduced simplex formulation: `x_n = 1 - Σ_{i<n} yᵢ` turns the ideal term
/// into an exact substitution, leaving σ's over `n - 1` variables.
fn las_program(m: &RatMat, r: u32) -> Result<Program> {
    let n = m.n();
    let k = n - 1;
    let lin: Vec<Polynomial> = (0..n)
        .map(|i| if i < k { Polynomial::var(k, i) } else { &Polynomial::one(k) - &Polynomial::sum_of_vars(k) })
        .collect();
    let mut target = Polynomial::zero(k);
    for i in 0..n {
        for j in 0..n {
            target = &target + &(&lin[i] * &lin[j]).scale(m.get(i, j));
        }
    }
    let b0 = exponents_up_to(k, r / 2);
    let bi = exponents_up_to(k, (r - 1) / 2);
    check_basis_cap(b0.len() + n * bi.len())?;
    let mut ib = IdentityBuilder::new();
    ib.gram(&b0, &[(Exponent::zero(k), rat(1))]);
    for i in 0..n {
        let mult: Vec<(Exponent, Rational)> = lin[i].terms().iter().map(|(e, c)| (e.clone(), c.clone())).collect();
        ib.gram(&bi, &mult);
    }
    let mut bases = vec![b0];
    bases.extend(std::iter::repeat_n(bi, n));
    Ok(ib.finish(&target, Layout::Las { order: r, bases }))
}

impl Program {
    fn decode<T: Scalar>(&self, m: Option<&RatMat>, v: Values<T>) -> Certificate<T> {
        match &self.layout {
            Layout::Spn { n } => {
                let mut nn = SymMat::zeros(*n);
                for (k, (i, j)) in lower_pairs(*n).enumerate() {
                    nn.set(i, j, v.nonneg[k].clone());
                }
                Certificate::Spn { p: v.blocks[0].clone(), n: nn }
            }
            Layout::K1 { .. } => Certificate::K1 { blocks: v.blocks },
            Layout::Sos { bases } => Certificate::Sos {
                blocks: bases.iter().zip(v.blocks).map(|(b, g)| GramBlock { basis: b.clone(), gram: g }).collect(),
            },
            Layout::Qr { order, betas, gammas } => Certificate::Qr {
                order: *order,
                sigma: betas.iter().cloned().zip(v.blocks).collect(),
                c: gammas.iter().cloned().zip(v.nonneg).collect(),
            },
            Layout::Las { order, bases } => {
                let m = m.expect("Lasserre decoding needs the matrix");
                let n = m.n();
                let mut blocks: Vec<GramBlock<T>> = bases
                    .iter()
                    .zip(v.blocks)
                    .map(|(b, g)| GramBlock { basis: b.iter().map(extend_exponent).collect(), gram: g })
                    .collect();
                let sigma0 = blocks.remove(0);
                let mut rest = quad_coeffs::<T>(m);
                coeffs_add(&mut rest, &gram_coeffs(&sigma0.basis, &sigma0.gram, &unit_coeffs(n)), &-T::one());
                for (i, b) in blocks.iter().enumerate() {
                    coeffs_add(&mut rest, &gram_coeffs(&b.basis, &b.gram, &var_coeffs(n, i)), &-T::one());
                }
                let q = divide_by_simplex(&rest, n).into_iter().collect();
                Certificate::Lasserre { order: *order, sigma0, sigma: blocks, q }
            }
        }
    }

    /// Inverse of `decode` for the layouts whose variables are all visible
    /// in the certificate; slacks are recomputed from `m`.
    fn encode(&self, m: &RatMat, c: &Certificate<f64>) -> Result<Values<f64>> {
        let mismatch = || Error::Certificate(format!("certificate {} does not fit this program", c.cone()));
        match (&self.layout, c) {
            (Layout::Spn { n }, Certificate::Spn { p, n: nn }) => {
                Ok(Values { blocks: vec![p.clone()], nonneg: lower_pairs(*n).map(|(i, j)| *nn.get(i, j)).collect() })
            }
            (Layout::K1 { n }, Certificate::K1 { blocks }) => {
                let mf = m.to_f64();
                let nonneg = triples(*n)
                    .map(|(i, j, k)| {
                        mf.get(i, j) + mf.get(i, k) + mf.get(j, k)
                            - blocks[i].get(j, k)
                            - blocks[j].get(i, k)
                            - blocks[k].get(i, j)
                    })
                    .collect();
                Ok(Values { blocks: blocks.clone(), nonneg })
            }
            (Layout::Sos { bases }, Certificate::Sos { blocks }) => {
                let mut out = Vec::new();
                for b in bases {
                    let found = blocks.iter().find(|g| &g.basis == b).ok_or_else(mismatch)?;
                    out.push(found.gram.clone());
                }
                Ok(Values { blocks: out, nonneg: vec![] })
            }
            (Layout::Qr { betas, gammas, .. }, Certificate::Qr { sigma, c, .. }) => {
                let sm: BTreeMap<&Exponent, &FloatMat> = sigma.iter().map(|(e, s)| (e, s)).collect();
                let cm: BTreeMap<&Exponent, f64> = c.iter().map(|(e, v)| (e, *v)).collect();
                let n = m.n();
                Ok(Values {
                    blocks: betas.iter().map(|b| sm.get(b).map_or_else(|| SymMat::zeros(n), |s| (*s).clone())).collect(),
                    nonneg: gammas.iter().map(|g| cm.get(g).copied().unwrap_or(0.0)).collect(),
                })
            }
            (Layout::Las { bases, .. }, Certificate::Lasserre { sigma0, sigma, .. }) => {
                let mut out = Vec::new();
                for (b, g) in bases.iter().zip(std::iter::once(sigma0).chain(sigma.iter())) {
                    let ext: Vec<Exponent> = b.iter().map(extend_exponent).collect();
                    if ext != g.basis {
                        return Err(mismatch());
                    }
                    out.push(g.gram.clone());
                }
                Ok(Values { blocks: out, nonneg: vec![] })
            }
            _ => Err(mismatch()),
        }
    }
}

fn values_of(sol: &SdpSolution) -> Values<f64> {
    Values { blocks: sol.blocks.clone(), nonneg: sol.nonneg.clone() }
}

// ---------------------------------------------------------------------------
// Rounding.

/// Indexes the scalar unknowns of a program: lower-triangle block entries,
/// then nonnegative scalars.
struct Columns {
    block_offset: Vec<usize>,
    sizes: Vec<usize>,
    scalar_offset: usize,
    total: usize,
}

impl Columns {
    fn new(p: &SdpProblem) -> Self {
        let mut block_offset = Vec::new();
        let mut off = 0;
        for &s in &p.psd_blocks {
            block_offset.push(off);
            off += s * (s + 1) / 2;
        }
        Columns { block_offset, sizes: p.psd_blocks.clone(), scalar_offset: off, total: off + p.nonneg }
    }

    fn entry(&self, b: usize, i: usize, j: usize) -> usize {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        self.block_offset[b] + i * (i + 1) / 2 + j
    }

    fn of(&self, v: &VarRef) -> usize {
        match *v {
            VarRef::Psd { block, row, col } => self.entry(block, row, col),
            VarRef::NonNeg(k) => self.scalar_offset + k,
            VarRef::Free(_) => unreachable!("membership programs have no free variables"),
        }
    }
}

/// Rational vectors spanning the numerically-null eigenspace of `g`.
fn rational_kernel(g: &FloatMat, den: u64) -> Option<Vec<Vec<Rational>>> {
    let n = g.n();
    let (vals, vecs) = jacobi_eigen(&Dense::from_sym(g), 1e-14, JACOBI_MAX_SWEEPS).ok()?;
    let scale = vals.iter().fold(1.0f64, |a, v| a.max(v.abs()));
    let cut = 1e-6 * scale;
    let kernel: Vec<usize> = (0..n).filter(|&k| vals[k] < cut).collect();
    if kernel.is_empty() {
        return Some(vec![]);
    }
    if kernel.len() == n {
        return Some((0..n).map(|i| (0..n).map(|j| if i == j { rat(1) } else { rat(0) }).collect()).collect());
    }
    // Float RREF of the kernel basis (rows), then entrywise rounding.
    let mut rows: Vec<Vec<f64>> = kernel.iter().map(|&k| (0..n).map(|i| vecs[(i, k)]).collect()).collect();
    let mut lead = 0;
    let mut r = 0;
    while r < rows.len() && lead < n {
        let piv = (r..rows.len()).max_by(|&a, &b| rows[a][lead].abs().total_cmp(&rows[b][lead].abs()))?;
        if rows[piv][lead].abs() < 1e-8 {
            lead += 1;
            continue;
        }
        rows.swap(r, piv);
        let d = rows[r][lead];
        for v in rows[r].iter_mut() {
            *v /= d;
        }
        for o in 0..rows.len() {
            if o != r {
                let f = rows[o][lead];
                if f != 0.0 {
                    for c in 0..n {
                        rows[o][c] -= f * rows[r][c];
                    }
                }
            }
        }
        r += 1;
        lead += 1;
    }
    Some(rows.iter().map(|row| row.iter().map(|&x| approximate(x, den)).collect()).collect())
}

fn round_values(p: &SdpProblem, v: &Values<f64>, den: u64) -> Option<Values<Rational>> {
    let cols = Columns::new(p);
    let mut rows: Vec<SparseRow> = Vec::new();
    let mut rhs: Vec<Rational> = Vec::new();
    for c in &p.constraints {
        let mut row: Vec<(usize, Rational)> = c.terms.iter().map(|(v, a)| (cols.of(v), a.clone())).collect();
        row.sort_by_key(|(c, _)| *c);
        rows.push(row);
        rhs.push(c.rhs.clone());
    }
    // Kernel-aware snapping: numerically singular directions become exact.
    for (b, g) in v.blocks.iter().enumerate() {
        for kv in rational_kernel(g, den)? {
            for i in 0..cols.sizes[b] {
                let mut row: BTreeMap<usize, Rational> = BTreeMap::new();
                for (j, x) in kv.iter().enumerate() {
                    if !x.is_zero() {
                        *row.entry(cols.entry(b, i, j)).or_insert_with(Rational::zero) += x;
                    }
                }
                let row: SparseRow = row.into_iter().filter(|(_, x)| !x.is_zero()).collect();
                if !row.is_empty() {
                    rows.push(row);
                    rhs.push(Rational::zero());
                }
            }
        }
    }
    let scale = v.nonneg.iter().fold(1.0f64, |a, x| a.max(x.abs()));
    for (k, &x) in v.nonneg.iter().enumerate() {
        if x < 1e-6 * scale {
            rows.push(vec![(cols.scalar_offset + k, rat(1))]);
            rhs.push(Rational::zero());
        }
    }
    let ech = sparse_rref(&rows, &rhs).ok()?;
    let mut x = vec![Rational::zero(); cols.total];
    for (b, g) in v.blocks.iter().enumerate() {
        for (i, j) in lower_pairs(cols.sizes[b]) {
            x[cols.entry(b, i, j)] = approximate(*g.get(i, j), den);
        }
    }
    for (k, &s) in v.nonneg.iter().enumerate() {
        x[cols.scalar_offset + k] = approximate(s, den);
    }
    ech.back_substitute(&mut x);
    let blocks: Vec<RatMat> = (0..cols.sizes.len())
        .map(|b| SymMat::from_fn(cols.sizes[b], |i, j| x[cols.entry(b, i, j)].clone()))
        .collect();
    let nonneg: Vec<Rational> = (0..p.nonneg).map(|k| x[cols.scalar_offset + k].clone()).collect();
    if nonneg.iter().any(|s| s.is_negative()) || !blocks.iter().all(|b| psd_check_exact(b).is_psd()) {
        return None;
    }
    Some(Values { blocks, nonneg })
}

enum Target<'a> {
    Matrix(&'a RatMat),
    Poly(&'a Polynomial),
}

impl Target<'_> {
    fn verify(&self, c: &AnyCertificate, mode: VerifyMode) -> Result<VerifyReport> {
        match self {
            Target::Matrix(m) => verify_certificate(m, c, mode),
            Target::Poly(p) => verify_sos_certificate(p, c, mode),
        }
    }

    fn matrix(&self) -> Option<&RatMat> {
        match self {
            Target::Matrix(m) => Some(m),
            Target::Poly(_) => None,
        }
    }
}

/// Tries each denominator bound in turn; returns the first rounded
/// certificate that verifies exactly.
fn round_program(prog: &Program, target: &Target<'_>, v: &Values<f64>, dens: &[u64]) -> Option<Certificate<Rational>> {
    for &den in dens {
        let Some(rv) = round_values(&prog.sdp, v, den) else { continue };
        let cert = prog.decode(target.matrix(), rv);
        let any = AnyCertificate::Exact(cert);
        if matches!(target.verify(&any, VerifyMode::Exact), Ok(r) if r.pass) {
            let AnyCertificate::Exact(c) = any else { unreachable!() };
            return Some(c);
        }
    }
    None
}

fn program_for(m: &RatMat, c: &Certificate<f64>) -> Result<Program> {
    match c {
        Certificate::Polya { .. } => Err(Error::Precondition("Polya certificates need no rounding".into())),
        Certificate::Spn { .. } => Ok(spn_program(m)),
        Certificate::K1 { .. } => Ok(k1_program(m)),
        Certificate::Sos { .. } => kr_program(m, c.order()),
        Certificate::Qr { order, .. } => qr_program(m, *order),
        Certificate::Lasserre { order, .. } => las_program(m, *order),
    }
}

/// Rounds a float certificate entrywise to rationals with denominators at
/// most `denominator_bound`, snaps it onto the exact identity constraints
/// and returns it if exact verification passes.
pub fn round_certificate(m: &RatMat, c: &Certificate<f64>, denominator_bound: u64) -> Result<Certificate<Rational>> {
    if let Certificate::Polya { order, .. } = c {
        let v = c_membership(m, *order);
        return match v.certificate {
            Some(AnyCertificate::Exact(cert)) => Ok(cert),
            _ => Err(Error::Certificate("Polya expansion has a negative coefficient".into())),
        };
    }
    let prog = program_for(m, c)?;
    let values = prog.encode(m, c)?;
    round_program(&prog, &Target::Matrix(m), &values, &[denominator_bound])
        .ok_or_else(|| Error::Certificate(format!("rounding with denominators <= {denominator_bound} failed")))
}

/// Membership systems that admit a matrix pencil `t B + C`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ConeKind {
    Spn,
    K1,
    Kr(u32),
}

fn program_of_kind(kind: ConeKind, m: &RatMat) -> Result<Program> {
    match kind {
        ConeKind::Spn => Ok(spn_program(m)),
        ConeKind::K1 => Ok(k1_program(m)),
        ConeKind::Kr(r) => kr_program(m, r),
    }
}

/// The membership system of `t B + C` with `t` as free variable 0 and
/// objective `min t`. Constraint right-hand sides are linear in the matrix,
/// so the system is built once for `B` and once for `C` and merged.
pub fn pencil_program(kind: ConeKind, b: &RatMat, c: &RatMat) -> Result<SdpProblem> {
    if b.n() != c.n() {
        return Err(Error::Dimension(format!("pencil of {}x{} and {}x{}", b.n(), b.n(), c.n(), c.n())));
    }
    let pb = program_of_kind(kind, b)?;
    let pc = program_of_kind(kind, c)?;
    if pb.sdp.constraints.len() != pc.sdp.constraints.len() || pb.unreachable || pc.unreachable {
        return Err(Error::Invariant("pencil systems differ in shape".into()));
    }
    let mut sdp = pc.sdp;
    let t = sdp.add_free(1);
    for (row, rb) in sdp.constraints.iter_mut().zip(&pb.sdp.constraints) {
        if !rb.rhs.is_zero() {
            row.terms.push((VarRef::Free(t), -rb.rhs.clone()));
        }
    }
    sdp.set_objective(vec![(VarRef::Free(t), rat(1))], crate::sdpcore::Sense::Minimize);
    Ok(sdp)
}

// ---------------------------------------------------------------------------
// Decision procedure.

fn decide(prog: &Program, target: Target<'_>, cfg: &ConeConfig, shortcut: Option<Certificate<Rational>>) -> Verdict {
    if prog.unreachable {
        return Verdict::other(Decision::No, f64::NEG_INFINITY, Some("identity has an unreachable coefficient".into()));
    }
    let solved = margin_maximize(&prog.sdp, &MarginTargets::All, &cfg.solver);
    let (lambda, sol) = match solved {
        Ok(x) => x,
        Err(Error::Inconsistent(msg)) => {
            return Verdict::other(Decision::No, f64::NEG_INFINITY, Some(format!("identity system inconsistent: {msg}")))
        }
        Err(e) => {
            if let Some(c) = shortcut {
                return Verdict::yes(f64::NAN, AnyCertificate::Exact(c));
            }
            return Verdict::other(Decision::Inconclusive, f64::NAN, Some(format!("solver failed: {e}")));
        }
    };
    if let Some(c) = shortcut {
        return Verdict::yes(lambda, AnyCertificate::Exact(c));
    }
    let r = &sol.residuals;
    let healthy = sol.status == Status::Optimal || r.primal.max(r.dual).max(r.gap) <= NEAR_OPTIMAL;
    let note = (!healthy).then(|| format!("solver stopped with status {:?}", sol.status));
    if !lambda.is_finite() {
        return Verdict::other(Decision::Inconclusive, lambda, note);
    }
    if lambda < -cfg.decision_tol {
        if !healthy {
            return Verdict::other(Decision::Inconclusive, lambda, note);
        }
        let mut v = Verdict::other(Decision::No, lambda, None);
        v.refutation = Some(sol.y.clone());
        return v;
    }
    let values = values_of(&sol);
    if let Some(c) = round_program(prog, &target, &values, &cfg.denominators) {
        let mut v = Verdict::yes(lambda, AnyCertificate::Exact(c));
        if lambda <= cfg.decision_tol {
            v.note = Some("margin inside tolerance band; exact certificate found".into());
        }
        return v;
    }
    let cert = AnyCertificate::Float(prog.decode(target.matrix(), values));
    let mut v = if lambda > cfg.decision_tol {
        if matches!(target.verify(&cert, VerifyMode::Float(cfg.verify_tol)), Ok(r) if r.pass) {
            return Verdict::yes(lambda, cert);
        }
        Verdict::other(Decision::Inconclusive, lambda, Some("float certificate failed verification".into()))
    } else {
        Verdict::other(Decision::Inconclusive, lambda, note.or_else(|| Some("margin inside tolerance band".into())))
    };
    // The unrounded candidate, for callers that round it themselves.
    v.certificate = Some(cert);
    v
}

fn require_square(m: &RatMat, min_n: usize) -> Result<()> {
    if m.n() < min_n {
        return Err(Error::Dimension(format!("need at least {min_n} rows, got {}", m.n())));
    }
    Ok(())
}

/// Exact Pólya test: YES iff every coefficient of `(Σ xᵢ)^r xᵀMx` is nonnegative.
pub fn c_membership(m: &RatMat, r: u32) -> Verdict {
    let p = Polynomial::polya_expand(m, r, PolyaMode::ClosedForm);
    let coefficients: Vec<(Exponent, Rational)> =
        exponents_of_degree(m.n(), r + 2).into_iter().map(|e| (e.clone(), p.coeff(&e))).collect();
    match coefficients.iter().find(|(_, c)| c.is_negative()) {
        None => Verdict::yes(f64::INFINITY, AnyCertificate::Exact(Certificate::Polya { order: r, coefficients })),
        Some((e, c)) => Verdict::other(
            Decision::No,
            f64::NEG_INFINITY,
            Some(format!("coefficient of {:?} is {}", e.entries(), crate::rational::format_rational(c))),
        ),
    }
}

/// Exact SPN certificate when `M` is entrywise nonnegative or PSD.
pub fn spn_shortcut(m: &RatMat) -> Option<Certificate<Rational>> {
    let n = m.n();
    if lower_pairs(n).all(|(i, j)| !m.get(i, j).is_negative()) {
        return Some(Certificate::Spn { p: SymMat::zeros(n), n: m.clone() });
    }
    if psd_check_exact(m).is_psd() {
        return Some(Certificate::Spn { p: m.clone(), n: SymMat::zeros(n) });
    }
    None
}

/// Lifts `M = P + N` to order-one blocks: `P(i) = P + D(i)` with `D(i)`
/// diagonal, `D(i)_ii = N_ii` and `D(i)_jj = 2 N_ij + N_jj`.
pub fn k1_from_spn<T: Scalar>(p: &SymMat<T>, nn: &SymMat<T>) -> Certificate<T> {
    let n = p.n();
    let two = T::from_i64(2);
    let blocks = (0..n)
        .map(|i| {
            let mut b = p.clone();
            for j in 0..n {
                let d = if i == j { nn.get(i, i).clone() } else { two.clone() * nn.get(i, j).clone() + nn.get(j, j).clone() };
                let v = b.get(j, j).clone() + d;
                b.set(j, j, v);
            }
            b
        })
        .collect();
    Certificate::K1 { blocks }
}

/// `C^(r) ⊆ Q^(r)`: zero Gram blocks and the Pólya coefficients as scalars.
pub fn qr_from_polya(n: usize, c: &Certificate<Rational>) -> Option<Certificate<Rational>> {
    let Certificate::Polya { order, coefficients } = c else { return None };
    Some(Certificate::Qr {
        order: *order,
        sigma: exponents_of_degree(n, *order).into_iter().map(|b| (b, SymMat::zeros(n))).collect(),
        c: coefficients.clone(),
    })
}

pub fn spn_membership(m: &RatMat, cfg: &ConeConfig) -> Result<Verdict> {
    require_square(m, 1)?;
    Ok(decide(&spn_program(m), Target::Matrix(m), cfg, spn_shortcut(m)))
}

pub fn k0_membership(m: &RatMat, cfg: &ConeConfig) -> Result<Verdict> {
    spn_membership(m, cfg)
}

pub fn k1_membership(m: &RatMat, cfg: &ConeConfig) -> Result<Verdict> {
    require_square(m, 1)?;
    let shortcut = spn_shortcut(m).and_then(|c| match c {
        Certificate::Spn { p, n } => Some(k1_from_spn(&p, &n)),
        _ => None,
    });
    Ok(decide(&k1_program(m), Target::Matrix(m), cfg, shortcut))
}

/// SOS test for `(Σ xᵢ²)^r (x∘x)ᵀ M (x∘x)` over the degree `r + 2`
/// monomials, block-diagonalized by exponent parity.
pub fn kr_membership(m: &RatMat, r: u32, cfg: &ConeConfig) -> Result<Verdict> {
    require_square(m, 1)?;
    let prog = kr_program(m, r)?;
    Ok(decide(&prog, Target::Matrix(m), cfg, None))
}

pub fn qr_membership(m: &RatMat, r: u32, cfg: &ConeConfig) -> Result<Verdict> {
    require_square(m, 1)?;
    let prog = qr_program(m, r)?;
    let shortcut = c_membership(m, r).certificate.and_then(|c| match c {
        AnyCertificate::Exact(c) => qr_from_polya(m.n(), &c),
        AnyCertificate::Float(_) => None,
    });
    Ok(decide(&prog, Target::Matrix(m), cfg, shortcut))
}

/// `xᵀMx = σ₀ + Σ xᵢσᵢ + q (Σ xᵢ - 1)` with `deg σ₀ ≤ r`, `deg σᵢ ≤ r - 1`,
/// `deg q ≤ r - 1`.
pub fn las_simplex_membership(m: &RatMat, r: u32, cfg: &ConeConfig) -> Result<Verdict> {
    if r < 2 {
        return Err(Error::Precondition(format!("Lasserre order must be at least 2, got {r}")));
    }
    require_square(m, 2)?;
    let prog = las_program(m, r)?;
    Ok(decide(&prog, Target::Matrix(m), cfg, None))
}

/// Whether `p` is a sum of squares, using every monomial up to half its
/// degree; parity blocks are used when `p` is even in every variable.
pub fn sos_membership(p: &Polynomial, cfg: &ConeConfig) -> Result<Verdict> {
    let deg = p.degree().ok_or_else(|| Error::Precondition("zero polynomial".into()))?;
    if deg % 2 == 1 {
        return Ok(Verdict::other(Decision::No, f64::NEG_INFINITY, Some("odd degree".into())));
    }
    let n = p.nvars();
    let basis =
        if p.is_homogeneous() { exponents_of_degree(n, deg / 2) } else { exponents_up_to(n, deg / 2) };
    let even = p.terms().keys().all(Exponent::all_even);
    let bases = if even { parity_classes(basis) } else { vec![basis] };
    let prog = sos_program(p, bases)?;
    Ok(decide(&prog, Target::Poly(p), cfg, None))
}
