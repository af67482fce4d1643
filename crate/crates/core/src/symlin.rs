//! Dense symmetric matrices over exact rationals or `f64`, with an exact
//! LDLᵀ semidefiniteness test, a Jacobi eigensolver, and small dense and
//! sparse linear-algebra kernels used by the solver and the rounding code.

use std::collections::BTreeMap;
use std::fmt;

use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::rational::{format_rational, parse_rational, Rational, Scalar};

/// Symmetric matrix storing the packed lower triangle row by row.
#[derive(Clone, Debug, PartialEq)]
pub struct SymMat<T> {
    n: usize,
    data: Vec<T>,
}

pub type RatMat = SymMat<Rational>;
pub type FloatMat = SymMat<f64>;

#[inline]
fn idx(i: usize, j: usize) -> usize {
    let (a, b) = if i >= j { (i, j) } else { (j, i) };
    a * (a + 1) / 2 + b
}

impl<T: Scalar> SymMat<T> {
    pub fn zeros(n: usize) -> Self {
        SymMat { n, data: vec![T::zero(); n * (n + 1) / 2] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.set(i, i, T::one());
        }
        m
    }

    /// All-ones matrix.
    pub fn ones(n: usize) -> Self {
        SymMat { n, data: vec![T::one(); n * (n + 1) / 2] }
    }

    pub fn from_fn(n: usize, f: impl Fn(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(n * (n + 1) / 2);
        for i in 0..n {
            for j in 0..=i {
                data.push(f(i, j));
            }
        }
        SymMat { n, data }
    }

    /// Builds from full rows; rejects ragged or asymmetric input.
    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let n = rows.len();
        for (i, r) in rows.iter().enumerate() {
            if r.len() != n {
                return Err(Error::Dimension(format!("row {} has {} entries, expected {n}", i + 1, r.len())));
            }
        }
        for i in 0..n {
            for j in 0..i {
                if rows[i][j] != rows[j][i] {
                    return Err(Error::Parse(format!("matrix not symmetric at ({}, {})", i + 1, j + 1)));
                }
            }
        }
        Ok(Self::from_fn(n, |i, j| rows[i][j].clone()))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> &T {
        &self.data[idx(i, j)]
    }

    pub fn set(&mut self, i: usize, j: usize, v: T) {
        self.data[idx(i, j)] = v;
    }

    pub fn rows(&self) -> Vec<Vec<T>> {
        (0..self.n).map(|i| (0..self.n).map(|j| self.get(i, j).clone()).collect()).collect()
    }

    pub fn map<U: Scalar>(&self, f: impl Fn(&T) -> U) -> SymMat<U> {
        SymMat { n: self.n, data: self.data.iter().map(f).collect() }
    }

    pub fn to_f64(&self) -> FloatMat {
        self.map(|v| v.as_f64())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_same(other)?;
        Ok(SymMat { n: self.n, data: self.data.iter().zip(&other.data).map(|(a, b)| a.clone() + b.clone()).collect() })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_same(other)?;
        Ok(SymMat { n: self.n, data: self.data.iter().zip(&other.data).map(|(a, b)| a.clone() - b.clone()).collect() })
    }

    pub fn scale(&self, c: &T) -> Self {
        SymMat { n: self.n, data: self.data.iter().map(|a| a.clone() * c.clone()).collect() }
    }

    fn check_same(&self, other: &Self) -> Result<()> {
        if self.n != other.n {
            return Err(Error::Dimension(format!("{}x{} vs {}x{}", self.n, self.n, other.n, other.n)));
        }
        Ok(())
    }

    pub fn mul_vec(&self, v: &[T]) -> Vec<T> {
        (0..self.n)
            .map(|i| {
                let mut s = T::zero();
                for (j, vj) in v.iter().enumerate() {
                    s += self.get(i, j).clone() * vj.clone();
                }
                s
            })
            .collect()
    }

    /// `v^T M v`.
    pub fn quad(&self, v: &[T]) -> T {
        let mv = self.mul_vec(v);
        let mut s = T::zero();
        for (a, b) in mv.into_iter().zip(v) {
            s += a * b.clone();
        }
        s
    }

    /// Rows and columns `s`, in the order given.
    pub fn principal_submatrix(&self, s: &[usize]) -> Result<Self> {
        if s.is_empty() {
            return Err(Error::Precondition("empty index set".into()));
        }
        if let Some(&bad) = s.iter().find(|&&i| i >= self.n) {
            return Err(Error::Dimension(format!("index {} out of range for order {}", bad + 1, self.n)));
        }
        Ok(Self::from_fn(s.len(), |i, j| self.get(s[i], s[j]).clone()))
    }

    /// Block-diagonal sum `self ⊕ other`.
    pub fn direct_sum(&self, other: &Self) -> Self {
        let n = self.n;
        Self::from_fn(n + other.n, |i, j| {
            if i < n && j < n {
                self.get(i, j).clone()
            } else if i >= n && j >= n {
                other.get(i - n, j - n).clone()
            } else {
                T::zero()
            }
        })
    }

    pub fn entrywise_nonneg(&self, tol: f64) -> bool {
        if T::EXACT && tol == 0.0 {
            return self.data.iter().all(|v| !v.is_negative());
        }
        self.data.iter().all(|v| v.as_f64() >= -tol)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|v| v.as_f64().abs()).fold(0.0, f64::max)
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|v| v.is_zero())
    }

    /// Frobenius inner product `<A, B>`.
    pub fn inner(&self, other: &Self) -> T {
        let mut s = T::zero();
        for i in 0..self.n {
            for j in 0..=i {
                let p = self.get(i, j).clone() * other.get(i, j).clone();
                s += if i == j { p } else { p.clone() + p };
            }
        }
        s
    }

    pub fn trace(&self) -> T {
        let mut s = T::zero();
        for i in 0..self.n {
            s += self.get(i, i).clone();
        }
        s
    }

    /// Text form: `n` on the first line, then the rows.
    pub fn to_text(&self) -> String {
        let mut s = format!("{}\n", self.n);
        for row in self.rows() {
            let cells: Vec<String> = row.iter().map(|v| v.render()).collect();
            s.push_str(&cells.join(" "));
            s.push('\n');
        }
        s
    }
}

impl RatMat {
    /// Parses the matrix text format. Blank lines and `#` comments are skipped.
    pub fn parse(text: &str) -> Result<RatMat> {
        let mut lines = text
            .lines()
            .map(|l| l.split('#').next().unwrap_or("").trim())
            .filter(|l| !l.is_empty());
        let header = lines.next().ok_or_else(|| Error::Parse("empty matrix file".into()))?;
        let n: usize = header.parse().map_err(|_| Error::Parse(format!("bad order line {header:?}")))?;
        if n == 0 {
            return Err(Error::Parse("matrix order must be positive".into()));
        }
        let mut rows = Vec::with_capacity(n);
        for line in lines {
            let row = line.split_whitespace().map(parse_rational).collect::<Result<Vec<_>>>()?;
            rows.push(row);
        }
        if rows.len() != n {
            return Err(Error::Parse(format!("expected {n} rows, found {}", rows.len())));
        }
        RatMat::from_rows(&rows)
    }

    /// Canonical text used for hashing: integer or `p/q` entries, single spaces.
    pub fn canonical_text(&self) -> String {
        let mut s = format!("{}\n", self.n);
        for row in self.rows() {
            let cells: Vec<String> = row.iter().map(format_rational).collect();
            s.push_str(&cells.join(" "));
            s.push('\n');
        }
        s
    }
}

impl<T: Scalar> fmt::Display for SymMat<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let cells: Vec<Vec<String>> = self.rows().iter().map(|r| r.iter().map(|v| v.render()).collect()).collect();
        let width = cells.iter().flatten().map(|c| c.len()).max().unwrap_or(1);
        for row in cells {
            let padded: Vec<String> = row.iter().map(|c| format!("{c:>width$}")).collect();
            writeln!(f, "{}", padded.join(" "))?;
        }
        Ok(())
    }
}

/// Rational LDLᵀ factorization in pivot order: `P A Pᵀ = L D Lᵀ`.
#[derive(Clone, Debug)]
pub struct Ldl {
    /// Original indices in pivot order.
    pub perm: Vec<usize>,
    /// Unit lower-triangular factor in pivot order.
    pub l: Vec<Vec<Rational>>,
    pub d: Vec<Rational>,
}

#[derive(Clone, Debug)]
pub enum PsdCheck {
    Psd(Ldl),
    /// `v^T M v < 0`.
    NotPsd { witness: Vec<Rational>, value: Rational },
}

impl PsdCheck {
    pub fn is_psd(&self) -> bool {
        matches!(self, PsdCheck::Psd(_))
    }
}

/// Exact semidefiniteness test by LDLᵀ with diagonal pivoting.
pub fn psd_check_exact(m: &RatMat) -> PsdCheck {
    let n = m.n();
    let mut a = m.rows();
    let mut active: Vec<usize> = (0..n).collect();
    let mut perm = Vec::with_capacity(n);
    let mut pivots: Vec<(usize, Rational, Vec<(usize, Rational)>)> = Vec::new();

    let not_psd = |w_idx: Vec<(usize, Rational)>, pivots: &[(usize, Rational, Vec<(usize, Rational)>)]| {
        let mut v = vec![Rational::zero(); n];
        for (i, val) in w_idx {
            v[i] = val;
        }
        for (k, _, mults) in pivots.iter().rev() {
            let mut s = Rational::zero();
            for (i, l) in mults {
                s += l * &v[*i];
            }
            v[*k] = -s;
        }
        let value = m.quad(&v);
        debug_assert!(value.is_negative());
        PsdCheck::NotPsd { witness: v, value }
    };

    while !active.is_empty() {
        if let Some(&i) = active.iter().find(|&&i| a[i][i].is_negative()) {
            return not_psd(vec![(i, Rational::one())], &pivots);
        }
        let best = active.iter().copied().filter(|&i| a[i][i].is_positive()).max_by(|&x, &y| a[x][x].cmp(&a[y][y]));
        let Some(k) = best else {
            for (p, &i) in active.iter().enumerate() {
                for &j in &active[p + 1..] {
                    if !a[i][j].is_zero() {
                        let b = a[i][j].clone();
                        return not_psd(vec![(i, Rational::one()), (j, -b)], &pivots);
                    }
                }
            }
            for &i in &active {
                perm.push(i);
            }
            break;
        };
        let p = a[k][k].clone();
        active.retain(|&i| i != k);
        let mut mults = Vec::with_capacity(active.len());
        for &i in &active {
            if !a[i][k].is_zero() {
                mults.push((i, &a[i][k] / &p));
            }
        }
        for (x, (i, li)) in mults.iter().enumerate() {
            for (j, _) in &mults[..=x] {
                let upd = li * &a[k][*j];
                a[*i][*j] -= &upd;
                if i != j {
                    a[*j][*i] = a[*i][*j].clone();
                }
            }
        }
        perm.push(k);
        pivots.push((k, p, mults));
    }

    let pos: BTreeMap<usize, usize> = perm.iter().enumerate().map(|(p, &i)| (i, p)).collect();
    let mut l = vec![vec![Rational::zero(); n]; n];
    let mut d = vec![Rational::zero(); n];
    for (p, row) in l.iter_mut().enumerate() {
        row[p] = Rational::one();
    }
    for (col, (_, piv, mults)) in pivots.iter().enumerate() {
        d[col] = piv.clone();
        for (i, li) in mults {
            l[pos[i]][col] = li.clone();
        }
    }
    PsdCheck::Psd(Ldl { perm, l, d })
}

/// Row-major dense `f64` matrix used by the numerical kernels.
#[derive(Clone, Debug, PartialEq)]
pub struct Dense {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Dense {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Dense { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn from_sym(m: &FloatMat) -> Self {
        let n = m.n();
        let mut d = Self::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                d.data[i * n + j] = *m.get(i, j);
            }
        }
        d
    }

    /// Symmetric part as a [`FloatMat`].
    pub fn to_sym(&self) -> FloatMat {
        FloatMat::from_fn(self.rows, |i, j| 0.5 * (self[(i, j)] + self[(j, i)]))
    }

    pub fn transpose(&self) -> Dense {
        let mut t = Dense::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.data[j * self.rows + i] = self.data[i * self.cols + j];
            }
        }
        t
    }

    pub fn matmul(&self, b: &Dense) -> Dense {
        assert_eq!(self.cols, b.rows);
        let mut c = Dense::zeros(self.rows, b.cols);
        for i in 0..self.rows {
            let crow = &mut c.data[i * b.cols..(i + 1) * b.cols];
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a == 0.0 {
                    continue;
                }
                let brow = &b.data[k * b.cols..(k + 1) * b.cols];
                for (cv, bv) in crow.iter_mut().zip(brow) {
                    *cv += a * bv;
                }
            }
        }
        c
    }

    pub fn add_scaled(&mut self, b: &Dense, s: f64) {
        for (x, y) in self.data.iter_mut().zip(&b.data) {
            *x += s * y;
        }
    }

    pub fn scaled(&self, s: f64) -> Dense {
        Dense { rows: self.rows, cols: self.cols, data: self.data.iter().map(|v| v * s).collect() }
    }

    pub fn symmetrize(&mut self) {
        let n = self.rows;
        for i in 0..n {
            for j in 0..i {
                let v = 0.5 * (self.data[i * n + j] + self.data[j * n + i]);
                self.data[i * n + j] = v;
                self.data[j * n + i] = v;
            }
        }
    }

    pub fn frob(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn dot(&self, b: &Dense) -> f64 {
        self.data.iter().zip(&b.data).map(|(x, y)| x * y).sum()
    }

    pub fn trace(&self) -> f64 {
        (0..self.rows).map(|i| self[(i, i)]).sum()
    }

    /// Lower Cholesky factor; `None` unless numerically positive definite.
    pub fn cholesky(&self) -> Option<Dense> {
        let n = self.rows;
        let mut l = Dense::zeros(n, n);
        for j in 0..n {
            let mut d = self[(j, j)];
            for k in 0..j {
                d -= l[(j, k)] * l[(j, k)];
            }
            if d <= 0.0 || !d.is_finite() {
                return None;
            }
            let d = d.sqrt();
            l[(j, j)] = d;
            for i in j + 1..n {
                let mut s = self[(i, j)];
                for k in 0..j {
                    s -= l[(i, k)] * l[(j, k)];
                }
                l[(i, j)] = s / d;
            }
        }
        Some(l)
    }

    /// Inverse of a lower-triangular matrix.
    pub fn lower_inverse(&self) -> Dense {
        let n = self.rows;
        let mut inv = Dense::zeros(n, n);
        for j in 0..n {
            inv[(j, j)] = 1.0 / self[(j, j)];
            for i in j + 1..n {
                let mut s = 0.0;
                for k in j..i {
                    s += self[(i, k)] * inv[(k, j)];
                }
                inv[(i, j)] = -s / self[(i, i)];
            }
        }
        inv
    }
}

impl std::ops::Index<(usize, usize)> for Dense {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Dense {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

/// Solves `L y = b` then `Lᵀ x = y` for a lower Cholesky factor.
pub fn cholesky_solve(l: &Dense, b: &[f64]) -> Vec<f64> {
    let n = l.rows;
    let mut y = b.to_vec();
    for i in 0..n {
        let mut s = y[i];
        for k in 0..i {
            s -= l[(i, k)] * y[k];
        }
        y[i] = s / l[(i, i)];
    }
    for i in (0..n).rev() {
        let mut s = y[i];
        for k in i + 1..n {
            s -= l[(k, i)] * y[k];
        }
        y[i] = s / l[(i, i)];
    }
    y
}

/// Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.
/// Returns eigenvalues in ascending order and the matching eigenvectors as
/// the columns of the second value.
pub fn jacobi_eigen(a: &Dense, tol: f64, max_sweeps: usize) -> Result<(Vec<f64>, Dense)> {
    let n = a.rows;
    let mut m = a.clone();
    m.symmetrize();
    let mut v = Dense::identity(n);
    let off = |m: &Dense| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..i {
                s += 2.0 * m[(i, j)] * m[(i, j)];
            }
        }
        s.sqrt()
    };
    let mut converged = off(&m) <= tol;
    let mut sweep = 0;
    while !converged && sweep < max_sweeps {
        sweep += 1;
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let app = m[(p, p)];
                let aqq = m[(q, q)];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[(k, p)];
                    let mkq = m[(k, q)];
                    m[(k, p)] = c * mkp - s * mkq;
                    m[(k, q)] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[(p, k)];
                    let mqk = m[(q, k)];
                    m[(p, k)] = c * mpk - s * mqk;
                    m[(q, k)] = s * mpk + c * mqk;
                }
                m[(p, q)] = 0.0;
                m[(q, p)] = 0.0;
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
        converged = off(&m) <= tol;
    }
    if !converged {
        return Err(Error::Numerical(format!("Jacobi did not converge in {max_sweeps} sweeps")));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| m[(x, x)].total_cmp(&m[(y, y)]));
    let vals = order.iter().map(|&i| m[(i, i)]).collect();
    let mut vecs = Dense::zeros(n, n);
    for (c, &i) in order.iter().enumerate() {
        for k in 0..n {
            vecs[(k, c)] = v[(k, i)];
        }
    }
    Ok((vals, vecs))
}

/// Default sweep cap for [`jacobi_eigen`].
pub const JACOBI_MAX_SWEEPS: usize = 100;

/// Eigenvalues of a symmetric matrix, ascending, to working precision.
pub fn sym_eigenvalues(a: &Dense) -> Result<Vec<f64>> {
    let tol = 1e-15 * a.frob().max(1e-300);
    jacobi_eigen(a, tol, JACOBI_MAX_SWEEPS).map(|(v, _)| v)
}

/// Smallest eigenvalue, with the off-diagonal mass driven below `tol`.
pub fn min_eig_estimate(m: &FloatMat, tol: f64) -> Result<f64> {
    if tol <= 0.0 {
        return Err(Error::Precondition("tolerance must be positive".into()));
    }
    if m.n() == 0 {
        return Err(Error::Precondition("empty matrix".into()));
    }
    let (vals, _) = jacobi_eigen(&Dense::from_sym(m), tol, JACOBI_MAX_SWEEPS)?;
    Ok(vals[0])
}

/// Sparse rational row: sorted `(column, value)` pairs with nonzero values.
pub type SparseRow = Vec<(usize, Rational)>;

/// Outcome of sparse rational Gauss-Jordan elimination.
#[derive(Clone, Debug)]
pub struct Echelon {
    /// Reduced rows; row `k` has leading 1 in column `pivots[k]` and zeros in all other pivot columns.
    pub rows: Vec<SparseRow>,
    pub rhs: Vec<Rational>,
    pub pivots: Vec<usize>,
    /// Original row index each reduced row came from.
    pub origin: Vec<usize>,
    /// Original rows that reduced to `0 = 0`.
    pub dependent: Vec<usize>,
}

fn axpy_sparse(row: &SparseRow, factor: &Rational, other: &SparseRow) -> SparseRow {
    // row - factor * other
    let mut out = Vec::with_capacity(row.len() + other.len());
    let (mut a, mut b) = (0, 0);
    while a < row.len() || b < other.len() {
        if b >= other.len() || (a < row.len() && row[a].0 < other[b].0) {
            out.push(row[a].clone());
            a += 1;
        } else if a >= row.len() || other[b].0 < row[a].0 {
            out.push((other[b].0, -(factor * &other[b].1)));
            b += 1;
        } else {
            let v = &row[a].1 - factor * &other[b].1;
            if !v.is_zero() {
                out.push((row[a].0, v));
            }
            a += 1;
            b += 1;
        }
    }
    out
}

fn row_value(row: &SparseRow, col: usize) -> Option<&Rational> {
    row.binary_search_by_key(&col, |(c, _)| *c).ok().map(|k| &row[k].1)
}

/// Reduces `rows · x = rhs` to reduced row-echelon form in exact arithmetic.
/// Pivots are chosen by smallest column index among the sparsest candidates.
/// Fails if the system is inconsistent.
pub fn sparse_rref(rows: &[SparseRow], rhs: &[Rational]) -> Result<Echelon> {
    let mut work: Vec<(SparseRow, Rational, usize)> =
        rows.iter().zip(rhs).enumerate().map(|(k, (r, b))| (r.clone(), b.clone(), k)).collect();
    let mut done: Vec<(SparseRow, Rational, usize)> = Vec::new();
    let mut pivots: Vec<usize> = Vec::new();
    let mut dependent = Vec::new();
    // Column -> indices of working rows touching it, rebuilt lazily per pivot.
    while !work.is_empty() {
        // Choose the sparsest row, pivot on its first column.
        let (wi, _) = work.iter().enumerate().min_by_key(|(k, (r, _, _))| (r.is_empty() as usize, r.len(), *k)).unwrap();
        let (row, b, origin) = work.swap_remove(wi);
        if row.is_empty() {
            if !b.is_zero() {
                return Err(Error::Inconsistent(format!("row {} reduces to 0 = {}", origin, format_rational(&b))));
            }
            dependent.push(origin);
            continue;
        }
        let col = row[0].0;
        let inv = row[0].1.recip();
        let row: SparseRow = row.into_iter().map(|(c, v)| (c, v * &inv)).collect();
        let b = b * &inv;
        for (r, rb, _) in work.iter_mut() {
            if let Some(f) = row_value(r, col).cloned() {
                *r = axpy_sparse(r, &f, &row);
                *rb -= &f * &b;
            }
        }
        for (r, rb, _) in done.iter_mut() {
            if let Some(f) = row_value(r, col).cloned() {
                *r = axpy_sparse(r, &f, &row);
                *rb -= &f * &b;
            }
        }
        pivots.push(col);
        done.push((row, b, origin));
    }
    let mut order: Vec<usize> = (0..done.len()).collect();
    order.sort_by_key(|&k| pivots[k]);
    dependent.sort_unstable();
    Ok(Echelon {
        rows: order.iter().map(|&k| done[k].0.clone()).collect(),
        rhs: order.iter().map(|&k| done[k].1.clone()).collect(),
        pivots: order.iter().map(|&k| pivots[k]).collect(),
        origin: order.iter().map(|&k| done[k].2).collect(),
        dependent,
    })
}

impl Echelon {
    /// Completes a full solution from values for the non-pivot columns.
    /// Entries of `x` at pivot columns are overwritten.
    pub fn back_substitute(&self, x: &mut [Rational]) {
        for (k, row) in self.rows.iter().enumerate() {
            let p = self.pivots[k];
            let mut s = self.rhs[k].clone();
            for (c, v) in row {
                if *c != p {
                    s -= v * &x[*c];
                }
            }
            x[p] = s;
        }
    }
}

/// Solves a dense square or rectangular rational system exactly.
/// Returns a particular solution (free variables zero) and a nullspace basis,
/// or `None` when inconsistent.
pub fn solve_rational(a: &[Vec<Rational>], b: &[Rational]) -> Option<(Vec<Rational>, Vec<Vec<Rational>>)> {
    let ncols = a.first().map_or(0, |r| r.len());
    let rows: Vec<SparseRow> = a
        .iter()
        .map(|r| r.iter().enumerate().filter(|(_, v)| !v.is_zero()).map(|(c, v)| (c, v.clone())).collect())
        .collect();
    let ech = sparse_rref(&rows, b).ok()?;
    let mut x = vec![Rational::zero(); ncols];
    ech.back_substitute(&mut x);
    let is_pivot: Vec<bool> = (0..ncols).map(|c| ech.pivots.binary_search(&c).is_ok()).collect();
    let mut null = Vec::new();
    for f in (0..ncols).filter(|&c| !is_pivot[c]) {
        let mut v = vec![Rational::zero(); ncols];
        v[f] = Rational::one();
        for (k, row) in ech.rows.iter().enumerate() {
            if let Some(val) = row_value(row, f) {
                v[ech.pivots[k]] = -val.clone();
            }
        }
        null.push(v);
    }
    Some((x, null))
}
