//! Upper bounds on the stability number from the copositive hierarchies.
//!
//! `ζ^(r)(G)` (Pólya cones) is exact: the smallest `t` with
//! `t (A + I) - J ∈ C^(r)` is a maximum of coefficient ratios, and it also
//! has a closed form in `α(G)`. `ϑ^(r)(G)` (sum-of-squares cones) is one SDP
//! with `t` as a free scalar.

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::Zero;

use crate::cones::{kr_membership, pencil_program, ConeConfig, ConeKind, Verdict};
use crate::error::{Error, Result};
use crate::graphs::{alpha, graph_matrix, Graph};
use crate::polyarena::{exponents_of_degree, polya_coefficient};
use crate::rational::{format_rational, Rational};
use crate::sdpcore::{solve, Sense, SdpProblem, SolverConfig, Status, VarRef};
use crate::symlin::RatMat;

/// A bound value; `ζ` is exact or infinite, SDP bounds are floats.
#[derive(Clone, Debug, PartialEq)]
pub enum BoundValue {
    Exact(Rational),
    Float(f64),
    Infinite,
}

impl BoundValue {
    pub fn as_f64(&self) -> f64 {
        match self {
            BoundValue::Exact(r) => crate::rational::to_f64(r),
            BoundValue::Float(v) => *v,
            BoundValue::Infinite => f64::INFINITY,
        }
    }

    /// Exact floor for exact values, `floor(v + 1e-6)` for floats.
    pub fn floor(&self) -> Option<BigInt> {
        match self {
            BoundValue::Exact(r) => Some(r.floor().to_integer()),
            BoundValue::Float(v) => Some(BigInt::from((v + 1e-6).floor() as i64)),
            BoundValue::Infinite => None,
        }
    }
}

impl fmt::Display for BoundValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BoundValue::Exact(r) => f.write_str(&format_rational(r)),
            BoundValue::Float(v) => write!(f, "{v:.8}"),
            BoundValue::Infinite => f.write_str("inf"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Hierarchy {
    Zeta,
    Theta,
    Lovasz,
}

impl fmt::Display for Hierarchy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Hierarchy::Zeta => "zeta",
            Hierarchy::Theta => "theta",
            Hierarchy::Lovasz => "lovasz",
        })
    }
}

#[derive(Clone, Debug)]
pub struct BoundReport {
    pub graph: String,
    pub hierarchy: Hierarchy,
    pub order: u32,
    pub value: BoundValue,
    pub floor: Option<BigInt>,
    pub alpha: usize,
    pub notes: String,
}

/// `A_G + I`.
fn closed_adjacency(g: &Graph) -> RatMat {
    RatMat::from_fn(g.n(), |i, j| {
        if i == j || g.has_edge(i, j) {
            Rational::from_integer(1.into())
        } else {
            Rational::zero()
        }
    })
}

fn binom2(k: u64) -> u64 {
    k * k.saturating_sub(1) / 2
}

/// `C(r+2, 2) / (C(u, 2) α + u v)` with `r + 2 = u α + v`; `None` for `+∞`.
pub fn zeta_closed_form(g: &Graph, r: u32) -> Option<Rational> {
    zeta_formula(alpha(g) as u64, r)
}

fn zeta_formula(a: u64, r: u32) -> Option<Rational> {
    let (u, v) = (u64::from(r) + 2).div_rem(&a);
    let den = binom2(u) * a + u * v;
    if den == 0 {
        return None;
    }
    Some(Rational::new(BigInt::from(binom2(u64::from(r) + 2)), BigInt::from(den)))
}

/// Smallest `t` with `t (A + I) - J ∈ C^(r)`, as the largest ratio
/// `c_β(J) / c_β(A + I)` over `|β| = r + 2`; `None` when some `c_β(A + I)` vanishes.
pub fn zeta_direct(g: &Graph, r: u32) -> Option<Rational> {
    let n = g.n();
    let b = closed_adjacency(g);
    let j = RatMat::ones(n);
    let mut best: Option<Rational> = None;
    for beta in exponents_of_degree(n, r + 2) {
        let den = polya_coefficient(&b, r, &beta);
        if den.is_zero() {
            return None;
        }
        let ratio = polya_coefficient(&j, r, &beta) / den;
        if best.as_ref().is_none_or(|x| ratio > *x) {
            best = Some(ratio);
        }
    }
    best
}

#[derive(Clone, Debug, PartialEq)]
pub struct FloorRow {
    pub r: u32,
    /// `⌊ζ^(r)⌋`, `None` for `+∞`.
    pub floor: Option<BigInt>,
    pub equals_alpha: bool,
    /// Whether `r ≥ α² - 1`.
    pub predicted: bool,
}

impl FloorRow {
    pub fn consistent(&self) -> bool {
        self.equals_alpha == self.predicted
    }
}

/// `⌊ζ^(r)⌋` for `r = 0..=r_max`, with the predicted threshold `r ≥ α² - 1`.
pub fn floor_convergence_check(g: &Graph, r_max: u32) -> Vec<FloorRow> {
    let a = alpha(g) as u64;
    (0..=r_max)
        .map(|r| {
            let floor = zeta_formula(a, r).map(|z| z.floor().to_integer());
            let equals_alpha = floor.as_ref() == Some(&BigInt::from(a));
            FloorRow { r, floor, equals_alpha, predicted: u64::from(r) + 1 >= a * a }
        })
        .collect()
}

fn solve_value(p: &SdpProblem, cfg: &SolverConfig, what: &str) -> Result<f64> {
    let sol = solve(p, cfg)?;
    let res = &sol.residuals;
    if sol.status != Status::Optimal && res.primal.max(res.dual).max(res.gap) > 1e-6 {
        return Err(Error::Numerical(format!("{what}: solver status {:?}", sol.status)));
    }
    Ok(sol.objective)
}

/// `min { t : t (A + I) - J ∈ K^(r) }`, with the order-one cone in its
/// `P(i)` form and higher orders through the parity-blocked SOS system.
pub fn theta_r(g: &Graph, r: u32, cfg: &SolverConfig) -> Result<BoundReport> {
    let n = g.n();
    let b = closed_adjacency(g);
    let c = RatMat::ones(n).scale(&Rational::from_integer((-1).into()));
    let kind = match r {
        0 => ConeKind::Spn,
        1 => ConeKind::K1,
        _ => ConeKind::Kr(r),
    };
    let p = pencil_program(kind, &b, &c)?;
    let t = solve_value(&p, cfg, "theta")?;
    let value = BoundValue::Float(t);
    Ok(BoundReport {
        graph: g.name().to_string(),
        hierarchy: Hierarchy::Theta,
        order: r,
        floor: value.floor(),
        value,
        alpha: alpha(g),
        notes: format!("single SDP, {} constraints", p.constraints.len()),
    })
}

pub fn zeta_report(g: &Graph, r: u32) -> BoundReport {
    let value = match zeta_closed_form(g, r) {
        Some(z) => BoundValue::Exact(z),
        None => BoundValue::Infinite,
    };
    BoundReport {
        graph: g.name().to_string(),
        hierarchy: Hierarchy::Zeta,
        order: r,
        floor: value.floor(),
        value,
        alpha: alpha(g),
        notes: "closed form".into(),
    }
}

/// `max ⟨J, X⟩` over `tr X = 1`, `X_ij = 0` on edges, `X ⪰ 0`.
pub fn lovasz_theta(g: &Graph, cfg: &SolverConfig) -> Result<f64> {
    let n = g.n();
    if n == 0 {
        return Ok(0.0);
    }
    let mut p = SdpProblem::new();
    let x = p.add_psd_block(n);
    let one = Rational::from_integer(1.into());
    let two = Rational::from_integer(2.into());
    p.add_constraint((0..n).map(|i| (VarRef::psd(x, i, i), one.clone())).collect(), one.clone());
    for (i, j) in g.edges() {
        p.add_constraint(vec![(VarRef::psd(x, i, j), one.clone())], Rational::zero());
    }
    let mut obj = Vec::new();
    for i in 0..n {
        for j in 0..=i {
            obj.push((VarRef::psd(x, i, j), if i == j { one.clone() } else { two.clone() }));
        }
    }
    p.set_objective(obj, Sense::Maximize);
    solve_value(&p, cfg, "lovasz theta")
}

pub fn lovasz_report(g: &Graph, cfg: &SolverConfig) -> Result<BoundReport> {
    let value = BoundValue::Float(lovasz_theta(g, cfg)?);
    Ok(BoundReport {
        graph: g.name().to_string(),
        hierarchy: Hierarchy::Lovasz,
        order: 0,
        floor: value.floor(),
        value,
        alpha: alpha(g),
        notes: "theta SDP".into(),
    })
}

/// `n cos(π/n) / (1 + cos(π/n))`, the theta number of the odd cycle `C_n`.
pub fn odd_cycle_theta(n: usize) -> f64 {
    let c = (std::f64::consts::PI / n as f64).cos();
    n as f64 * c / (1.0 + c)
}

/// Tests `M_G ∈ K^(α(G) - 1)`.
pub fn conjecture_probe(g: &Graph, cfg: &ConeConfig) -> Result<Verdict> {
    let a = alpha(g);
    if a == 0 {
        return Err(Error::Precondition("graph has no vertices".into()));
    }
    kr_membership(&graph_matrix(g), (a - 1) as u32, cfg)
}

/// Whether `ζ^(r)(G) > α(G)` (vacuous for `+∞`).
pub fn zeta_exceeds_alpha(g: &Graph, r: u32) -> bool {
    match zeta_closed_form(g, r) {
        Some(z) => z > Rational::from_integer(BigInt::from(alpha(g))),
        None => true,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{rat, ratio};

    #[test]
    fn zeta_examples_on_c5() {
        let g = Graph::cycle(5).unwrap();
        assert_eq!(zeta_closed_form(&g, 0), None);
        assert_eq!(zeta_closed_form(&g, 1), Some(rat(3)));
        assert_eq!(zeta_closed_form(&g, 2), Some(rat(3)));
        assert_eq!(zeta_closed_form(&g, 3), Some(ratio(5, 2)));
        assert_eq!(zeta_direct(&g, 3), Some(ratio(5, 2)));
        assert_eq!(zeta_direct(&g, 1), Some(rat(3)));
        assert_eq!(zeta_direct(&g, 0), None);
    }

    #[test]
    fn complete_graph_zeta_is_one() {
        let g = Graph::complete(3).unwrap();
        assert_eq!(zeta_direct(&g, 0), Some(rat(1)));
        assert_eq!(zeta_closed_form(&g, 0), Some(rat(1)));
    }

    #[test]
    fn c5_floor_threshold() {
        let rows = floor_convergence_check(&Graph::cycle(5).unwrap(), 6);
        assert!(rows.iter().all(FloorRow::consistent));
        assert_eq!(rows[2].floor, Some(BigInt::from(3)));
        assert_eq!(rows[3].floor, Some(BigInt::from(2)));
    }

    #[test]
    fn lovasz_theta_trivial_graphs() {
        let cfg = SolverConfig::default();
        assert!((lovasz_theta(&Graph::complete(4).unwrap(), &cfg).unwrap() - 1.0).abs() < 1e-6);
        assert!((lovasz_theta(&Graph::empty(4).unwrap(), &cfg).unwrap() - 4.0).abs() < 1e-6);
        let c5 = lovasz_theta(&Graph::cycle(5).unwrap(), &cfg).unwrap();
        assert!((c5 - 5f64.sqrt()).abs() < 1e-6);
        assert!((odd_cycle_theta(5) - 5f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn theta_hierarchy_on_c5_and_path() {
        let cfg = SolverConfig::default();
        let c5 = Graph::cycle(5).unwrap();
        assert!((theta_r(&c5, 0, &cfg).unwrap().value.as_f64() - 5f64.sqrt()).abs() < 1e-5);
        assert!((theta_r(&c5, 1, &cfg).unwrap().value.as_f64() - 2.0).abs() < 1e-5);
        let p4 = Graph::path(4).unwrap();
        assert!((theta_r(&p4, 0, &cfg).unwrap().value.as_f64() - 2.0).abs() < 1e-5);
    }
}
