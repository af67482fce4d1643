//! Exact copositivity for small matrices by minimizing `x^T M x` over the
//! standard simplex.
//!
//! Every support `S` contributes the stationarity system
//! `M[S] y = λ e, e^T y = 1`. The global minimum is attained at a point whose
//! system is nonsingular, so `λ*` is the least `λ` over nonsingular supports
//! with `y > 0`. Those minimizers are the vertices of the minimizer set; a
//! face carries a positive-dimensional family exactly when the vertices
//! lying in it cover its support.

use num_traits::{One, Signed, Zero};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::rational::{format_rational, Rational};
use crate::symlin::{solve_rational, FloatMat, RatMat};

/// Largest order accepted by the support enumeration.
pub const MAX_ORDER: usize = 20;

#[derive(Clone, Debug, PartialEq)]
pub struct SimplexPoint {
    pub coords: Vec<Rational>,
    pub support: Vec<usize>,
}

impl SimplexPoint {
    pub fn new(coords: Vec<Rational>) -> Self {
        let support = coords.iter().enumerate().filter(|(_, v)| !v.is_zero()).map(|(i, _)| i).collect();
        SimplexPoint { coords, support }
    }

    pub fn render(&self) -> String {
        let c: Vec<String> = self.coords.iter().map(format_rational).collect();
        format!("({})", c.join(", "))
    }
}

/// Positive-dimensional set of minimizers whose support is exactly `support`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ZeroFamily {
    pub support: Vec<usize>,
    pub dimension: usize,
}

/// Minimizers of `x^T M x` over the simplex, grouped by exact support.
/// For a boundary matrix `value` is zero and these are the zeros.
#[derive(Clone, Debug)]
pub struct ZeroSet {
    pub value: Rational,
    pub finite_zeros: Vec<SimplexPoint>,
    pub infinite_families: Vec<ZeroFamily>,
    pub is_finite: bool,
    /// Set when an enumeration cap cut the family list short.
    pub truncated: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub enum CopositivityClass {
    StrictlyCopositive,
    Boundary,
    NotCopositive,
}

#[derive(Clone, Debug)]
pub struct ClassReport {
    pub class: CopositivityClass,
    pub min_value: Rational,
    pub witness: SimplexPoint,
}

struct Stationary {
    mask: u32,
    y: Vec<Rational>,
    lambda: Rational,
}

fn support_of(mask: u32, n: usize) -> Vec<usize> {
    (0..n).filter(|&i| mask >> i & 1 == 1).collect()
}

/// Solves the stationarity system on `s`; `None` when singular, inconsistent
/// or not strictly positive.
fn stationary_point(m: &RatMat, s: &[usize]) -> Option<(Vec<Rational>, Rational)> {
    let k = s.len();
    let mut a = vec![vec![Rational::zero(); k + 1]; k + 1];
    for (r, &i) in s.iter().enumerate() {
        for (c, &j) in s.iter().enumerate() {
            a[r][c] = m.get(i, j).clone();
        }
        a[r][k] = -Rational::one();
        a[k][r] = Rational::one();
    }
    let mut b = vec![Rational::zero(); k + 1];
    b[k] = Rational::one();
    let (x, null) = solve_rational(&a, &b)?;
    if !null.is_empty() {
        return None;
    }
    if x[..k].iter().any(|v| !v.is_positive()) {
        return None;
    }
    let lambda = x[k].clone();
    Some((x[..k].to_vec(), lambda))
}

fn check_order(n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::Precondition("empty matrix".into()));
    }
    if n > MAX_ORDER {
        return Err(Error::Cap(format!("support enumeration is capped at order {MAX_ORDER}, got {n}")));
    }
    Ok(())
}

/// Exact minimum of `x^T M x` over the standard simplex together with the
/// full minimizer set.
pub fn simplex_minimize(m: &RatMat) -> Result<ZeroSet> {
    let n = m.n();
    check_order(n)?;
    let total: u32 = if n == 32 { u32::MAX } else { (1u32 << n) - 1 };
    let points: Vec<Stationary> = (1..=total)
        .into_par_iter()
        .filter_map(|mask| {
            let s = support_of(mask, n);
            stationary_point(m, &s).map(|(y, lambda)| Stationary { mask, y, lambda })
        })
        .collect();
    let value = points.iter().map(|p| &p.lambda).min().cloned().expect("singletons are always stationary");
    let mut verts: Vec<(u32, u32, SimplexPoint)> = Vec::new();
    for p in points.iter().filter(|p| p.lambda == value) {
        let s = support_of(p.mask, n);
        let mut coords = vec![Rational::zero(); n];
        for (k, &i) in s.iter().enumerate() {
            coords[i] = p.y[k].clone();
        }
        let mx = m.mul_vec(&coords);
        let eq = (0..n).filter(|&i| mx[i] == value).fold(0u32, |acc, i| acc | 1 << i);
        verts.push((p.mask, eq, SimplexPoint::new(coords)));
    }
    let families: Vec<ZeroFamily> = (1..=total)
        .into_par_iter()
        .filter_map(|s| {
            let members: Vec<&SimplexPoint> =
                verts.iter().filter(|(sup, eq, _)| sup & !s == 0 && s & !eq == 0).map(|(_, _, p)| p).collect();
            if members.len() < 2 {
                return None;
            }
            let cover = verts.iter().filter(|(sup, eq, _)| sup & !s == 0 && s & !eq == 0).fold(0u32, |a, (sup, _, _)| a | sup);
            if cover != s {
                return None;
            }
            let dimension = affine_rank(&members);
            (dimension >= 1).then(|| ZeroFamily { support: support_of(s, n), dimension })
        })
        .collect();
    let finite_zeros: Vec<SimplexPoint> = verts.into_iter().map(|(_, _, p)| p).collect();
    Ok(ZeroSet { value, is_finite: families.is_empty(), finite_zeros, infinite_families: families, truncated: false })
}

fn affine_rank(points: &[&SimplexPoint]) -> usize {
    let base = &points[0].coords;
    let rows: Vec<Vec<Rational>> =
        points[1..].iter().map(|p| p.coords.iter().zip(base).map(|(a, b)| a - b).collect()).collect();
    rational_rank(rows)
}

fn rational_rank(mut rows: Vec<Vec<Rational>>) -> usize {
    let ncols = rows.first().map_or(0, |r| r.len());
    let mut rank = 0;
    for c in 0..ncols {
        let Some(p) = (rank..rows.len()).find(|&r| !rows[r][c].is_zero()) else { continue };
        rows.swap(rank, p);
        let pivot = rows[rank][c].clone();
        for r in 0..rows.len() {
            if r != rank && !rows[r][c].is_zero() {
                let f = &rows[r][c] / &pivot;
                for k in c..ncols {
                    let v = &f * &rows[rank][k];
                    rows[r][k] -= v;
                }
            }
        }
        rank += 1;
    }
    rank
}

pub fn copositivity_class(m: &RatMat) -> Result<ClassReport> {
    let z = simplex_minimize(m)?;
    let class = if z.value.is_positive() {
        CopositivityClass::StrictlyCopositive
    } else if z.value.is_zero() {
        CopositivityClass::Boundary
    } else {
        CopositivityClass::NotCopositive
    };
    let witness = z.finite_zeros[0].clone();
    Ok(ClassReport { class, min_value: z.value, witness })
}

/// All zeros of a boundary matrix.
pub fn zeros_in_simplex(m: &RatMat) -> Result<ZeroSet> {
    let z = simplex_minimize(m)?;
    if !z.value.is_zero() {
        return Err(Error::Precondition(format!(
            "matrix is not on the copositive boundary (simplex minimum {})",
            format_rational(&z.value)
        )));
    }
    Ok(z)
}

#[derive(Clone, Debug)]
pub struct SccReport {
    pub zero: SimplexPoint,
    /// `(M u)_i` for every `i` off the support.
    pub off_support: Vec<(usize, Rational)>,
    pub holds: bool,
}

/// Strict complementarity at every zero of a boundary matrix with finitely many zeros.
pub fn check_scc(m: &RatMat) -> Result<Vec<SccReport>> {
    let z = zeros_in_simplex(m)?;
    if !z.is_finite {
        return Err(Error::Precondition("zero set is infinite".into()));
    }
    Ok(z.finite_zeros.iter().map(|u| scc_at(m, u)).collect())
}

pub fn scc_at(m: &RatMat, u: &SimplexPoint) -> SccReport {
    let mu = m.mul_vec(&u.coords);
    let off: Vec<(usize, Rational)> =
        (0..m.n()).filter(|i| !u.support.contains(i)).map(|i| (i, mu[i].clone())).collect();
    let holds = off.iter().all(|(_, v)| v.is_positive());
    SccReport { zero: u.clone(), off_support: off, holds }
}

/// Checks `P x = 0` and `P[S] = M[S]` for `S = supp(x)`, exactly.
pub fn k0_zero_consistency(m: &RatMat, p: &RatMat, x: &SimplexPoint) -> Result<bool> {
    if m.n() != p.n() || x.coords.len() != m.n() {
        return Err(Error::Dimension("matrix and point sizes differ".into()));
    }
    if !m.quad(&x.coords).is_zero() {
        return Err(Error::Precondition("point is not a zero of the form".into()));
    }
    if x.coords.iter().any(|v| v.is_negative()) || x.coords.iter().fold(Rational::zero(), |a, b| a + b) != Rational::one() {
        return Err(Error::Precondition("point is not in the simplex".into()));
    }
    if !m.sub(p)?.entrywise_nonneg(0.0) {
        return Ok(false);
    }
    let px_zero = p.mul_vec(&x.coords).iter().all(|v| v.is_zero());
    let s = &x.support;
    let blocks_agree = s.iter().all(|&i| s.iter().all(|&j| p.get(i, j) == m.get(i, j)));
    Ok(px_zero && blocks_agree)
}

/// Float counterpart of [`k0_zero_consistency`].
pub fn k0_zero_consistency_f64(m: &FloatMat, p: &FloatMat, x: &[f64], tol: f64) -> bool {
    let n = m.n();
    if p.n() != n || x.len() != n {
        return false;
    }
    let s: Vec<usize> = (0..n).filter(|&i| x[i] > tol).collect();
    let px = p.mul_vec(x);
    let n_ok = (0..n).all(|i| (0..=i).all(|j| m.get(i, j) - p.get(i, j) >= -tol));
    n_ok && px.iter().all(|v| v.abs() <= tol) && s.iter().all(|&i| s.iter().all(|&j| (p.get(i, j) - m.get(i, j)).abs() <= tol))
}

/// Result of the floating-point enumeration; every verdict here is numeric.
#[derive(Clone, Debug)]
pub struct NumericClassReport {
    pub class: CopositivityClass,
    pub min_value: f64,
    pub minimizers: Vec<Vec<f64>>,
}

/// Floating-point support enumeration for matrices with irrational entries.
/// Systems with a relative pivot below `1e-10` count as singular and values
/// within `tol` of zero count as zero.
pub fn copositivity_class_numeric(m: &FloatMat, tol: f64) -> Result<NumericClassReport> {
    let n = m.n();
    check_order(n)?;
    let total: u32 = (1u32 << n) - 1;
    let pts: Vec<(Vec<f64>, f64)> = (1..=total)
        .into_par_iter()
        .filter_map(|mask| {
            let s = support_of(mask, n);
            let k = s.len();
            let mut a = vec![vec![0.0; k + 2]; k + 1];
            for (r, &i) in s.iter().enumerate() {
                for (c, &j) in s.iter().enumerate() {
                    a[r][c] = *m.get(i, j);
                }
                a[r][k] = -1.0;
                a[k][r] = 1.0;
            }
            a[k][k + 1] = 1.0;
            let sol = gauss_f64(a)?;
            if sol[..k].iter().any(|&v| v <= 1e-12) {
                return None;
            }
            let mut x = vec![0.0; n];
            for (c, &i) in s.iter().enumerate() {
                x[i] = sol[c];
            }
            let v = m.quad(&x);
            Some((x, v))
        })
        .collect();
    let min_value = pts.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
    let minimizers: Vec<Vec<f64>> = pts.into_iter().filter(|p| p.1 <= min_value + tol).map(|p| p.0).collect();
    let class = if min_value > tol {
        CopositivityClass::StrictlyCopositive
    } else if min_value >= -tol {
        CopositivityClass::Boundary
    } else {
        CopositivityClass::NotCopositive
    };
    Ok(NumericClassReport { class, min_value, minimizers })
}

/// Gaussian elimination with partial pivoting on an augmented matrix.
fn gauss_f64(mut a: Vec<Vec<f64>>) -> Option<Vec<f64>> {
    let n = a.len();
    let scale = a.iter().flat_map(|r| r[..n].iter()).fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
    for c in 0..n {
        let p = (c..n).max_by(|&x, &y| a[x][c].abs().total_cmp(&a[y][c].abs()))?;
        if a[p][c].abs() < 1e-10 * scale {
            return None;
        }
        a.swap(c, p);
        for r in c + 1..n {
            let f = a[r][c] / a[c][c];
            if f != 0.0 {
                for k in c..=n {
                    a[r][k] -= f * a[c][k];
                }
            }
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let mut s = a[r][n];
        for k in r + 1..n {
            s -= a[r][k] * x[k];
        }
        x[r] = s / a[r][r];
    }
    Some(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{rat, ratio};

    fn rm(rows: &[&[i64]]) -> RatMat {
        RatMat::from_rows(&rows.iter().map(|r| r.iter().map(|&v| rat(v)).collect()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn rank_one_psd_has_midpoint_zero() {
        let z = simplex_minimize(&rm(&[&[1, -1], &[-1, 1]])).unwrap();
        assert_eq!(z.value, rat(0));
        assert_eq!(z.finite_zeros.len(), 1);
        assert_eq!(z.finite_zeros[0].coords, vec![ratio(1, 2), ratio(1, 2)]);
        assert!(z.is_finite);
    }

    #[test]
    fn identity_is_strict() {
        let r = copositivity_class(&RatMat::identity(3)).unwrap();
        assert_eq!(r.class, CopositivityClass::StrictlyCopositive);
        assert_eq!(r.min_value, ratio(1, 3));
    }

    #[test]
    fn negative_diagonal_is_not_copositive() {
        let r = copositivity_class(&rm(&[&[0, 1], &[1, -1]])).unwrap();
        assert_eq!(r.class, CopositivityClass::NotCopositive);
        assert_eq!(r.min_value, rat(-1));
        assert_eq!(r.witness.coords, vec![rat(0), rat(1)]);
    }

    #[test]
    fn zero_matrix_is_one_family() {
        let z = simplex_minimize(&RatMat::zeros(3)).unwrap();
        assert!(!z.is_finite);
        assert!(z.infinite_families.iter().any(|f| f.support == vec![0, 1, 2] && f.dimension == 2));
    }

    #[test]
    fn scc_fails_on_degenerate_diagonal() {
        let m = rm(&[&[0, 0], &[0, 1]]);
        let rep = check_scc(&m).unwrap();
        assert_eq!(rep.len(), 1);
        assert!(!rep[0].holds);
    }

    #[test]
    fn k0_consistency_on_rank_one() {
        let m = rm(&[&[1, -1], &[-1, 1]]);
        let x = SimplexPoint::new(vec![ratio(1, 2), ratio(1, 2)]);
        assert!(k0_zero_consistency(&m, &m, &x).unwrap());
        let bad = rm(&[&[2, -1], &[-1, 1]]);
        assert!(!k0_zero_consistency(&m, &bad, &x).unwrap());
    }

    #[test]
    fn numeric_path_matches_exact_on_integer_matrix() {
        let m = rm(&[&[1, -1, 0], &[-1, 1, 0], &[0, 0, 1]]);
        let r = copositivity_class_numeric(&m.to_f64(), 1e-10).unwrap();
        assert_eq!(r.class, CopositivityClass::Boundary);
        assert!(r.minimizers.iter().any(|x| (x[0] - 0.5).abs() < 1e-12 && (x[1] - 0.5).abs() < 1e-12));
    }

    #[test]
    fn rank_of_points() {
        let pts = [
            SimplexPoint::new(vec![rat(1), rat(0), rat(0)]),
            SimplexPoint::new(vec![rat(0), rat(1), rat(0)]),
            SimplexPoint::new(vec![rat(0), rat(0), rat(1)]),
        ];
        let refs: Vec<&SimplexPoint> = pts.iter().collect();
        assert_eq!(affine_rank(&refs), 2);
    }
}
