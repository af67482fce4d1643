//! Sparse multivariate polynomials with exact rational coefficients.
//!
//! Terms live in a `BTreeMap` keyed by [`Exponent`] under graded
//! lexicographic order, so two polynomials are equal iff their maps are.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::rational::{factorial, format_rational, to_f64, Rational};
use crate::symlin::RatMat;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Exponent {
    entries: Vec<u32>,
    degree: u32,
}

impl Exponent {
    pub fn new(entries: Vec<u32>) -> Self {
        let degree = entries.iter().sum();
        Exponent { entries, degree }
    }

    pub fn zero(n: usize) -> Self {
        Exponent { entries: vec![0; n], degree: 0 }
    }

    pub fn unit(n: usize, i: usize) -> Self {
        let mut e = vec![0; n];
        e[i] = 1;
        Exponent { entries: e, degree: 1 }
    }

    pub fn entries(&self) -> &[u32] {
        &self.entries
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn add(&self, other: &Exponent) -> Exponent {
        let entries = self.entries.iter().zip(&other.entries).map(|(a, b)| a + b).collect();
        Exponent { entries, degree: self.degree + other.degree }
    }

    /// `self - other`, if every entry stays nonnegative.
    pub fn checked_sub(&self, other: &Exponent) -> Option<Exponent> {
        let mut entries = Vec::with_capacity(self.entries.len());
        for (a, b) in self.entries.iter().zip(&other.entries) {
            entries.push(a.checked_sub(*b)?);
        }
        Some(Exponent { entries, degree: self.degree - other.degree })
    }

    pub fn doubled(&self) -> Exponent {
        Exponent { entries: self.entries.iter().map(|a| 2 * a).collect(), degree: 2 * self.degree }
    }

    /// Entrywise parity, packed into a bitmask (bit i set iff entry i is odd).
    pub fn parity(&self) -> u64 {
        self.entries.iter().enumerate().fold(0u64, |m, (i, a)| if a % 2 == 1 { m | (1 << i) } else { m })
    }

    pub fn all_even(&self) -> bool {
        self.entries.iter().all(|a| a % 2 == 0)
    }

    /// Entrywise half; `None` unless every entry is even.
    pub fn halved(&self) -> Option<Exponent> {
        if !self.all_even() {
            return None;
        }
        Some(Exponent { entries: self.entries.iter().map(|a| a / 2).collect(), degree: self.degree / 2 })
    }

    pub fn support(&self) -> Vec<usize> {
        self.entries.iter().enumerate().filter(|(_, &a)| a > 0).map(|(i, _)| i).collect()
    }
}

impl Ord for Exponent {
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree.cmp(&other.degree).then_with(|| self.entries.cmp(&other.entries))
    }
}

impl PartialOrd for Exponent {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// All exponents in `n` variables of total degree exactly `d`, in graded-lex order.
pub fn exponents_of_degree(n: usize, d: u32) -> Vec<Exponent> {
    let mut out = Vec::new();
    if n == 0 {
        if d == 0 {
            out.push(Exponent::zero(0));
        }
        return out;
    }
    let mut cur = vec![0u32; n];
    fn rec(i: usize, left: u32, cur: &mut Vec<u32>, out: &mut Vec<Exponent>) {
        let n = cur.len();
        if i == n - 1 {
            cur[i] = left;
            out.push(Exponent::new(cur.clone()));
            return;
        }
        for a in 0..=left {
            cur[i] = a;
            rec(i + 1, left - a, cur, out);
        }
        cur[i] = 0;
    }
    rec(0, d, &mut cur, &mut out);
    out
}

/// All exponents of total degree at most `d`, ascending by degree.
pub fn exponents_up_to(n: usize, d: u32) -> Vec<Exponent> {
    (0..=d).flat_map(|k| exponents_of_degree(n, k)).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PolyaMode {
    ClosedForm,
    Convolution,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Polynomial {
    nvars: usize,
    terms: BTreeMap<Exponent, Rational>,
}

impl Polynomial {
    pub fn zero(nvars: usize) -> Self {
        Polynomial { nvars, terms: BTreeMap::new() }
    }

    pub fn one(nvars: usize) -> Self {
        Self::constant(nvars, Rational::one())
    }

    pub fn constant(nvars: usize, c: Rational) -> Self {
        Self::monomial(Exponent::zero(nvars), c)
    }

    pub fn var(nvars: usize, i: usize) -> Self {
        Self::monomial(Exponent::unit(nvars, i), Rational::one())
    }

    pub fn monomial(e: Exponent, c: Rational) -> Self {
        let nvars = e.len();
        let mut p = Polynomial::zero(nvars);
        p.add_term(e, c);
        p
    }

    /// Builds from `(exponent entries, coefficient)` pairs; repeated exponents accumulate.
    pub fn from_terms<I>(nvars: usize, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Vec<u32>, Rational)>,
    {
        let mut p = Polynomial::zero(nvars);
        for (e, c) in terms {
            if e.len() != nvars {
                return Err(Error::Dimension(format!("exponent of length {} in {nvars} variables", e.len())));
            }
            p.add_term(Exponent::new(e), c);
        }
        Ok(p)
    }

    /// `x_1 + ... + x_n`.
    pub fn sum_of_vars(nvars: usize) -> Self {
        let mut p = Polynomial::zero(nvars);
        for i in 0..nvars {
            p.add_term(Exponent::unit(nvars, i), Rational::one());
        }
        p
    }

    /// `x_1^2 + ... + x_n^2`.
    pub fn sum_of_squares(nvars: usize) -> Self {
        Self::sum_of_vars(nvars).substitute_squares()
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn terms(&self) -> &BTreeMap<Exponent, Rational> {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coeff(&self, e: &Exponent) -> Rational {
        self.terms.get(e).cloned().unwrap_or_else(Rational::zero)
    }

    /// Total degree; `None` for the zero polynomial.
    pub fn degree(&self) -> Option<u32> {
        self.terms.keys().next_back().map(|e| e.degree())
    }

    pub fn is_homogeneous(&self) -> bool {
        let mut degs = self.terms.keys().map(|e| e.degree());
        match degs.next() {
            None => true,
            Some(d) => degs.all(|x| x == d),
        }
    }

    pub fn add_term(&mut self, e: Exponent, c: Rational) {
        debug_assert_eq!(e.len(), self.nvars);
        if c.is_zero() {
            return;
        }
        match self.terms.entry(e) {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    fn check_vars(&self, other: &Polynomial) -> Result<()> {
        if self.nvars != other.nvars {
            return Err(Error::Dimension(format!("{} vs {} variables", self.nvars, other.nvars)));
        }
        Ok(())
    }

    pub fn try_add(&self, other: &Polynomial) -> Result<Polynomial> {
        self.check_vars(other)?;
        let mut out = self.clone();
        for (e, c) in &other.terms {
            out.add_term(e.clone(), c.clone());
        }
        Ok(out)
    }

    pub fn try_sub(&self, other: &Polynomial) -> Result<Polynomial> {
        self.check_vars(other)?;
        let mut out = self.clone();
        for (e, c) in &other.terms {
            out.add_term(e.clone(), -c.clone());
        }
        Ok(out)
    }

    pub fn try_mul(&self, other: &Polynomial) -> Result<Polynomial> {
        self.check_vars(other)?;
        let mut out = Polynomial::zero(self.nvars);
        for (ea, ca) in &self.terms {
            for (eb, cb) in &other.terms {
                out.add_term(ea.add(eb), ca * cb);
            }
        }
        Ok(out)
    }

    pub fn scale(&self, c: &Rational) -> Polynomial {
        if c.is_zero() {
            return Polynomial::zero(self.nvars);
        }
        Polynomial { nvars: self.nvars, terms: self.terms.iter().map(|(e, v)| (e.clone(), v * c)).collect() }
    }

    pub fn pow(&self, r: u32) -> Polynomial {
        let mut acc = Polynomial::one(self.nvars);
        let mut base = self.clone();
        let mut k = r;
        while k > 0 {
            if k & 1 == 1 {
                acc = &acc * &base;
            }
            k >>= 1;
            if k > 0 {
                base = &base * &base;
            }
        }
        acc
    }

    /// Replaces every `x_i` by `x_i^2`.
    pub fn substitute_squares(&self) -> Polynomial {
        Polynomial { nvars: self.nvars, terms: self.terms.iter().map(|(e, c)| (e.doubled(), c.clone())).collect() }
    }

    /// `x^T M x`.
    pub fn quad_form(m: &RatMat) -> Polynomial {
        let n = m.n();
        let mut p = Polynomial::zero(n);
        for i in 0..n {
            let mut e = vec![0; n];
            e[i] = 2;
            p.add_term(Exponent::new(e), m.get(i, i).clone());
            for j in 0..i {
                let mut e = vec![0; n];
                e[i] = 1;
                e[j] = 1;
                p.add_term(Exponent::new(e), m.get(i, j) * Rational::from_integer(BigInt::from(2)));
            }
        }
        p
    }

    /// `(x_1 + ... + x_n)^r * x^T M x`.
    pub fn polya_expand(m: &RatMat, r: u32, mode: PolyaMode) -> Polynomial {
        let n = m.n();
        match mode {
            PolyaMode::Convolution => &Polynomial::sum_of_vars(n).pow(r) * &Polynomial::quad_form(m),
            PolyaMode::ClosedForm => {
                let mut p = Polynomial::zero(n);
                for beta in exponents_of_degree(n, r + 2) {
                    let c = polya_coefficient(m, r, &beta);
                    p.add_term(beta, c);
                }
                p
            }
        }
    }

    pub fn eval(&self, x: &[Rational]) -> Result<Rational> {
        if x.len() != self.nvars {
            return Err(Error::Dimension(format!("point of length {} for {} variables", x.len(), self.nvars)));
        }
        let mut total = Rational::zero();
        for (e, c) in &self.terms {
            let mut t = c.clone();
            for (xi, &a) in x.iter().zip(e.entries()) {
                if a > 0 {
                    t *= num_traits::pow(xi.clone(), a as usize);
                }
            }
            total += t;
        }
        Ok(total)
    }

    pub fn eval_f64(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.nvars {
            return Err(Error::Dimension(format!("point of length {} for {} variables", x.len(), self.nvars)));
        }
        Ok(self
            .terms
            .iter()
            .map(|(e, c)| {
                e.entries().iter().zip(x).fold(to_f64(c), |acc, (&a, &xi)| acc * xi.powi(a as i32))
            })
            .sum())
    }

    pub fn min_coefficient(&self) -> Option<&Rational> {
        self.terms.values().min()
    }

    pub fn max_abs_coefficient(&self) -> Rational {
        self.terms.values().map(|c| c.abs()).max().unwrap_or_else(Rational::zero)
    }
}

/// Coefficient of `x^beta` in `(sum x)^r x^T M x`, for `|beta| = r + 2`:
/// `r! (beta^T M beta - sum_i M_ii beta_i) / prod_i beta_i!`.
pub fn polya_coefficient(m: &RatMat, r: u32, beta: &Exponent) -> Rational {
    let n = m.n();
    let b = beta.entries();
    let mut quad = Rational::zero();
    for i in 0..n {
        if b[i] == 0 {
            continue;
        }
        let bi = Rational::from_integer(BigInt::from(b[i]));
        quad += m.get(i, i) * (&bi * &bi - &bi);
        for j in 0..i {
            if b[j] > 0 {
                quad += m.get(i, j) * Rational::from_integer(BigInt::from(2 * b[i] as u64 * b[j] as u64));
            }
        }
    }
    if quad.is_zero() {
        return quad;
    }
    let denom = b.iter().fold(num_bigint::BigUint::one(), |acc, &a| acc * factorial(a as usize));
    quad * Rational::new(BigInt::from(factorial(r as usize)), BigInt::from(denom))
}

impl Add for &Polynomial {
    type Output = Polynomial;
    fn add(self, rhs: &Polynomial) -> Polynomial {
        self.try_add(rhs).expect("variable count mismatch")
    }
}

impl Sub for &Polynomial {
    type Output = Polynomial;
    fn sub(self, rhs: &Polynomial) -> Polynomial {
        self.try_sub(rhs).expect("variable count mismatch")
    }
}

impl Mul for &Polynomial {
    type Output = Polynomial;
    fn mul(self, rhs: &Polynomial) -> Polynomial {
        self.try_mul(rhs).expect("variable count mismatch")
    }
}

impl Neg for &Polynomial {
    type Output = Polynomial;
    fn neg(self) -> Polynomial {
        self.scale(&-Rational::one())
    }
}

impl fmt::Display for Polynomial {
    /// Renders terms as `c x1^a1 x2^a2`, highest degree first.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (k, (e, c)) in self.terms.iter().rev().enumerate() {
            let neg = c.is_negative();
            let mag = c.abs();
            if k == 0 {
                if neg {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {} ", if neg { '-' } else { '+' })?;
            }
            let vars: Vec<String> = e
                .entries()
                .iter()
                .enumerate()
                .filter(|(_, &a)| a > 0)
                .map(|(i, &a)| if a == 1 { format!("x{}", i + 1) } else { format!("x{}^{}", i + 1, a) })
                .collect();
            if vars.is_empty() {
                write!(f, "{}", format_rational(&mag))?;
            } else if mag.is_one() {
                write!(f, "{}", vars.join(" "))?;
            } else {
                write!(f, "{} {}", format_rational(&mag), vars.join(" "))?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{rat, ratio};

    fn x(n: usize, i: usize) -> Polynomial {
        Polynomial::var(n, i)
    }

    #[test]
    fn difference_of_squares() {
        let a = &x(2, 0) + &x(2, 1);
        let b = &x(2, 0) - &x(2, 1);
        let expect = &x(2, 0).pow(2) - &x(2, 1).pow(2);
        assert_eq!(&a * &b, expect);
        assert_eq!(&a * &Polynomial::one(2), a);
    }

    #[test]
    fn sum_of_cubes() {
        let (px, py) = (x(2, 0), x(2, 1));
        let p = &(&px.pow(2) - &(&px * &py)) + &py.pow(2);
        assert_eq!(&(&px + &py) * &p, &px.pow(3) + &py.pow(3));
    }

    #[test]
    fn zero_power_is_one() {
        assert_eq!((&x(3, 0) + &x(3, 2)).pow(0), Polynomial::one(3));
    }

    #[test]
    fn trinomial_square_matches_brute_force() {
        let s = Polynomial::sum_of_vars(3).pow(2);
        for i in 0..3 {
            for j in i..3 {
                let mut e = vec![0; 3];
                e[i] += 1;
                e[j] += 1;
                let want = if i == j { rat(1) } else { rat(2) };
                assert_eq!(s.coeff(&Exponent::new(e)), want);
            }
        }
        assert_eq!(s.len(), 6);
    }

    #[test]
    fn quad_form_doubles_off_diagonal() {
        let m = RatMat::from_rows(&[vec![rat(0), rat(1)], vec![rat(1), rat(0)]]).unwrap();
        let q = Polynomial::quad_form(&m);
        assert_eq!(q, Polynomial::from_terms(2, [(vec![1, 1], rat(2))]).unwrap());
        assert_eq!(Polynomial::quad_form(&RatMat::identity(2)), Polynomial::sum_of_squares(2));
    }

    #[test]
    fn substitute_squares_doubles_exponents() {
        let p = &x(2, 0) * &x(2, 1);
        assert_eq!(p.substitute_squares(), &x(2, 0).pow(2) * &x(2, 1).pow(2));
        let c = Polynomial::constant(2, ratio(3, 4));
        assert_eq!(c.substitute_squares(), c);
    }

    #[test]
    fn polya_small_cases() {
        let m = RatMat::from_rows(&[vec![ratio(5, 3)]]).unwrap();
        let p = Polynomial::polya_expand(&m, 0, PolyaMode::ClosedForm);
        assert_eq!(p.coeff(&Exponent::new(vec![2])), ratio(5, 3));
        let p = Polynomial::polya_expand(&RatMat::identity(2), 1, PolyaMode::ClosedForm);
        assert_eq!(p.len(), 4);
        assert!(p.terms().values().all(|c| c.is_one()));
        assert_eq!(p, Polynomial::polya_expand(&RatMat::identity(2), 1, PolyaMode::Convolution));
    }

    #[test]
    fn eval_at_origin_gives_constant() {
        let p = &(&x(2, 0) * &x(2, 1)) + &Polynomial::constant(2, ratio(-7, 2));
        assert_eq!(p.eval(&[rat(0), rat(0)]).unwrap(), ratio(-7, 2));
        assert!(p.eval(&[rat(0)]).is_err());
    }

    #[test]
    fn mismatched_variables_error() {
        assert!(x(2, 0).try_mul(&x(3, 0)).is_err());
    }

    #[test]
    fn renders_terms() {
        let p = &(&x(2, 0).pow(2).scale(&rat(3)) - &(&x(2, 0) * &x(2, 1))) + &Polynomial::constant(2, ratio(1, 2));
        assert_eq!(p.to_string(), "3 x1^2 - x1 x2 + 1/2");
        assert_eq!(Polynomial::zero(2).to_string(), "0");
    }

    #[test]
    fn exponent_enumeration_counts() {
        assert_eq!(exponents_of_degree(3, 2).len(), 6);
        assert_eq!(exponents_of_degree(5, 3).len(), 35);
        assert_eq!(exponents_up_to(2, 2).len(), 6);
        let e = exponents_of_degree(4, 3);
        assert!(e.windows(2).all(|w| w[0] < w[1]));
    }
}
