//! Dense multi-block semidefinite programming.
//!
//! Problems are stated over PSD blocks, nonnegative scalars and free
//! scalars, with exact rational equality constraints. The solver is an
//! infeasible primal-dual path-following method with Nesterov-Todd scaling
//! and Mehrotra predictor-corrector steps.
//!
//! Conventions: a coefficient `a` on the lower-triangle entry `X[i][j]` of a
//! block contributes `a * X[i][j]` to the functional. Off the diagonal this
//! is the trace inner product with a matrix holding `a/2` at `(i, j)` and
//! `(j, i)`.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use num_traits::{ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::rational::{format_rational, to_f64, Rational};
use crate::symlin::{cholesky_solve, jacobi_eigen, Dense, FloatMat, SparseRow};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum VarRef {
    /// Entry `(row, col)` of a PSD block, normalized to `row >= col`.
    Psd { block: usize, row: usize, col: usize },
    NonNeg(usize),
    Free(usize),
}

impl VarRef {
    pub fn psd(block: usize, i: usize, j: usize) -> VarRef {
        let (row, col) = if i >= j { (i, j) } else { (j, i) };
        VarRef::Psd { block, row, col }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sense {
    Minimize,
    Maximize,
}

#[derive(Clone, Debug, Default)]
pub struct Constraint {
    pub terms: Vec<(VarRef, Rational)>,
    pub rhs: Rational,
}

#[derive(Clone, Debug)]
pub struct SdpProblem {
    pub psd_blocks: Vec<usize>,
    pub nonneg: usize,
    pub free: usize,
    pub constraints: Vec<Constraint>,
    pub objective: Vec<(VarRef, Rational)>,
    pub sense: Sense,
}

impl Default for SdpProblem {
    fn default() -> Self {
        Self::new()
    }
}

impl SdpProblem {
    pub fn new() -> Self {
        SdpProblem {
            psd_blocks: Vec::new(),
            nonneg: 0,
            free: 0,
            constraints: Vec::new(),
            objective: Vec::new(),
            sense: Sense::Minimize,
        }
    }

    pub fn add_psd_block(&mut self, size: usize) -> usize {
        self.psd_blocks.push(size);
        self.psd_blocks.len() - 1
    }

    /// Declares `k` nonnegative scalars and returns the index of the first.
    pub fn add_nonneg(&mut self, k: usize) -> usize {
        self.nonneg += k;
        self.nonneg - k
    }

    pub fn add_free(&mut self, k: usize) -> usize {
        self.free += k;
        self.free - k
    }

    /// Adds `sum terms = rhs`, merging repeated variables and dropping zeros.
    pub fn add_constraint(&mut self, terms: Vec<(VarRef, Rational)>, rhs: Rational) {
        self.constraints.push(Constraint { terms: merge_terms(terms), rhs });
    }

    pub fn set_objective(&mut self, terms: Vec<(VarRef, Rational)>, sense: Sense) {
        self.objective = merge_terms(terms);
        self.sense = sense;
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(b) = self.psd_blocks.iter().position(|&s| s == 0) {
            return Err(Error::Precondition(format!("block {b} has size 0")));
        }
        if self.psd_blocks.is_empty() && self.nonneg == 0 && self.free == 0 {
            return Err(Error::Precondition("problem has no variables".into()));
        }
        let check = |v: &VarRef| -> Result<()> {
            let ok = match *v {
                VarRef::Psd { block, row, col } => {
                    block < self.psd_blocks.len() && row < self.psd_blocks[block] && col <= row
                }
                VarRef::NonNeg(i) => i < self.nonneg,
                VarRef::Free(i) => i < self.free,
            };
            if ok {
                Ok(())
            } else {
                Err(Error::Dimension(format!("undeclared variable {v:?}")))
            }
        };
        for c in &self.constraints {
            for (v, _) in &c.terms {
                check(v)?;
            }
        }
        for (v, _) in &self.objective {
            check(v)?;
        }
        Ok(())
    }

    /// Plain-text dump: a header, the objective, then one constraint per line
    /// as `var:coef` triplets followed by `= rhs`. Block entries are written
    /// `X<block>(<row>,<col>)`, scalars `s<i>` and `f<i>`.
    pub fn dump(&self) -> String {
        let var = |v: &VarRef| match *v {
            VarRef::Psd { block, row, col } => format!("X{block}({row},{col})"),
            VarRef::NonNeg(i) => format!("s{i}"),
            VarRef::Free(i) => format!("f{i}"),
        };
        let mut out = String::new();
        let blocks: Vec<String> = self.psd_blocks.iter().map(|b| b.to_string()).collect();
        let _ = writeln!(out, "blocks {} nonneg {} free {}", blocks.join(","), self.nonneg, self.free);
        let sense = match self.sense {
            Sense::Minimize => "min",
            Sense::Maximize => "max",
        };
        let obj: Vec<String> = self.objective.iter().map(|(v, c)| format!("{}:{}", var(v), format_rational(c))).collect();
        let _ = writeln!(out, "{sense} {}", obj.join(" "));
        for c in &self.constraints {
            let t: Vec<String> = c.terms.iter().map(|(v, a)| format!("{}:{}", var(v), format_rational(a))).collect();
            let _ = writeln!(out, "{} = {}", t.join(" "), format_rational(&c.rhs));
        }
        out
    }
}

fn merge_terms(terms: Vec<(VarRef, Rational)>) -> Vec<(VarRef, Rational)> {
    let mut map: BTreeMap<VarRef, Rational> = BTreeMap::new();
    for (v, c) in terms {
        let v = match v {
            VarRef::Psd { block, row, col } => VarRef::psd(block, row, col),
            other => other,
        };
        *map.entry(v).or_insert_with(Rational::zero) += c;
    }
    map.into_iter().filter(|(_, c)| !c.is_zero()).collect()
}

#[derive(Clone, Debug)]
pub struct SolverConfig {
    pub tol_gap: f64,
    pub tol_feas: f64,
    pub max_iters: usize,
    /// Zero gives the plain identity start; other values add a seeded jitter.
    pub seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig { tol_gap: 1e-9, tol_feas: 1e-9, max_iters: 100, seed: 0 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Optimal,
    MaxIterations,
    NumericalFailure,
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Residuals {
    pub primal: f64,
    pub dual: f64,
    pub gap: f64,
}

#[derive(Clone, Debug)]
pub struct SdpSolution {
    pub status: Status,
    pub blocks: Vec<FloatMat>,
    pub nonneg: Vec<f64>,
    pub free: Vec<f64>,
    /// Equality multipliers, one per constraint of the original problem.
    pub y: Vec<f64>,
    pub dual_blocks: Vec<FloatMat>,
    pub dual_nonneg: Vec<f64>,
    pub objective: f64,
    pub dual_objective: f64,
    pub residuals: Residuals,
    pub iterations: usize,
}

/// Drops exactly dependent rows; errors if the rows are inconsistent.
/// Returns the indices of the kept rows.
pub fn presolve(p: &SdpProblem) -> Result<Vec<usize>> {
    let index = VarIndex::new(p);
    let rows: Vec<SparseRow> = p
        .constraints
        .iter()
        .map(|c| {
            let mut r: Vec<(usize, Rational)> = c.terms.iter().map(|(v, a)| (index.of(v), a.clone())).collect();
            r.sort_by_key(|(k, _)| *k);
            r
        })
        .collect();
    let rhs: Vec<Rational> = p.constraints.iter().map(|c| c.rhs.clone()).collect();
    independent_rows(&rows, &rhs)
}

/// Forward elimination keeping the first maximal independent subset of rows.
fn independent_rows(rows: &[SparseRow], rhs: &[Rational]) -> Result<Vec<usize>> {
    let mut basis: BTreeMap<usize, (SparseRow, Rational)> = BTreeMap::new();
    let mut keep = Vec::new();
    for (k, (row, b)) in rows.iter().zip(rhs).enumerate() {
        let mut r = row.clone();
        let mut rb = b.clone();
        loop {
            let Some(&(lead, ref val)) = r.first() else { break };
            match basis.get(&lead) {
                Some((br, bb)) => {
                    let f = val.clone();
                    r = sub_scaled(&r, &f, br);
                    rb -= &f * bb;
                }
                None => break,
            }
        }
        match r.first() {
            None => {
                if !rb.is_zero() {
                    return Err(Error::Inconsistent(format!("constraint {k} contradicts earlier rows")));
                }
                log::warn!("presolve dropped dependent constraint {k}");
            }
            Some(&(lead, ref val)) => {
                let inv = val.recip();
                let r: SparseRow = r.iter().map(|(c, v)| (*c, v * &inv)).collect();
                basis.insert(lead, (r, rb * &inv));
                keep.push(k);
            }
        }
    }
    Ok(keep)
}

fn sub_scaled(a: &SparseRow, f: &Rational, b: &SparseRow) -> SparseRow {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() || j < b.len() {
        if j >= b.len() || (i < a.len() && a[i].0 < b[j].0) {
            out.push(a[i].clone());
            i += 1;
        } else if i >= a.len() || b[j].0 < a[i].0 {
            out.push((b[j].0, -(f * &b[j].1)));
            j += 1;
        } else {
            let v = &a[i].1 - f * &b[j].1;
            if !v.is_zero() {
                out.push((a[i].0, v));
            }
            i += 1;
            j += 1;
        }
    }
    out
}

struct VarIndex {
    offsets: Vec<usize>,
    nonneg_start: usize,
    free_start: usize,
}

impl VarIndex {
    fn new(p: &SdpProblem) -> Self {
        let mut offsets = Vec::with_capacity(p.psd_blocks.len());
        let mut acc = 0;
        for &s in &p.psd_blocks {
            offsets.push(acc);
            acc += s * (s + 1) / 2;
        }
        VarIndex { offsets, nonneg_start: acc, free_start: acc + p.nonneg }
    }

    fn of(&self, v: &VarRef) -> usize {
        match *v {
            VarRef::Psd { block, row, col } => self.offsets[block] + row * (row + 1) / 2 + col,
            VarRef::NonNeg(i) => self.nonneg_start + i,
            VarRef::Free(i) => self.free_start + i,
        }
    }
}

/// Float form of a problem restricted to some rows, in minimization form.
struct Internal {
    sizes: Vec<usize>,
    nl: usize,
    nf: usize,
    /// Per row: per block `(block, entries (p, q, matrix value) with p >= q)`.
    a_blk: Vec<Vec<(usize, Vec<(usize, usize, f64)>)>>,
    a_lp: Vec<Vec<(usize, f64)>>,
    a_free: Vec<Vec<(usize, f64)>>,
    b: Vec<f64>,
    c_blk: Vec<Dense>,
    c_lp: Vec<f64>,
    c_free: Vec<f64>,
    /// Row scale factors applied to the original rows.
    scale: Vec<f64>,
}

impl Internal {
    fn build(p: &SdpProblem, rows: &[usize]) -> Internal {
        let sign = match p.sense {
            Sense::Minimize => 1.0,
            Sense::Maximize => -1.0,
        };
        let mut c_blk: Vec<Dense> = p.psd_blocks.iter().map(|&s| Dense::zeros(s, s)).collect();
        let mut c_lp = vec![0.0; p.nonneg];
        let mut c_free = vec![0.0; p.free];
        for (v, a) in &p.objective {
            let a = sign * to_f64(a);
            match *v {
                VarRef::Psd { block, row, col } => {
                    if row == col {
                        c_blk[block][(row, col)] += a;
                    } else {
                        c_blk[block][(row, col)] += 0.5 * a;
                        c_blk[block][(col, row)] += 0.5 * a;
                    }
                }
                VarRef::NonNeg(i) => c_lp[i] += a,
                VarRef::Free(i) => c_free[i] += a,
            }
        }
        let mut a_blk = Vec::with_capacity(rows.len());
        let mut a_lp = Vec::with_capacity(rows.len());
        let mut a_free = Vec::with_capacity(rows.len());
        let mut b = Vec::with_capacity(rows.len());
        let mut scale = Vec::with_capacity(rows.len());
        for &r in rows {
            let c = &p.constraints[r];
            let s = c.terms.iter().map(|(_, a)| to_f64(a).abs()).fold(0.0, f64::max);
            let s = if s > 0.0 { 1.0 / s } else { 1.0 };
            let mut blk: BTreeMap<usize, Vec<(usize, usize, f64)>> = BTreeMap::new();
            let mut lp = Vec::new();
            let mut fr = Vec::new();
            for (v, a) in &c.terms {
                let a = s * to_f64(a);
                match *v {
                    VarRef::Psd { block, row, col } => {
                        let val = if row == col { a } else { 0.5 * a };
                        blk.entry(block).or_default().push((row, col, val));
                    }
                    VarRef::NonNeg(i) => lp.push((i, a)),
                    VarRef::Free(i) => fr.push((i, a)),
                }
            }
            a_blk.push(blk.into_iter().collect());
            a_lp.push(lp);
            a_free.push(fr);
            b.push(s * to_f64(&c.rhs));
            scale.push(s);
        }
        Internal { sizes: p.psd_blocks.clone(), nl: p.nonneg, nf: p.free, a_blk, a_lp, a_free, b, c_blk, c_lp, c_free, scale }
    }

    fn m(&self) -> usize {
        self.b.len()
    }

    fn apply(&self, xb: &[Dense], xl: &[f64], xf: &[f64]) -> Vec<f64> {
        (0..self.m())
            .map(|i| {
                let mut s = 0.0;
                for (blk, ents) in &self.a_blk[i] {
                    let x = &xb[*blk];
                    for &(p, q, a) in ents {
                        s += if p == q { a * x[(p, p)] } else { 2.0 * a * x[(p, q)] };
                    }
                }
                for &(k, a) in &self.a_lp[i] {
                    s += a * xl[k];
                }
                for &(k, a) in &self.a_free[i] {
                    s += a * xf[k];
                }
                s
            })
            .collect()
    }

    fn adjoint(&self, y: &[f64]) -> (Vec<Dense>, Vec<f64>, Vec<f64>) {
        let mut zb: Vec<Dense> = self.sizes.iter().map(|&s| Dense::zeros(s, s)).collect();
        let mut zl = vec![0.0; self.nl];
        let mut zf = vec![0.0; self.nf];
        for (i, &yi) in y.iter().enumerate() {
            if yi == 0.0 {
                continue;
            }
            for (blk, ents) in &self.a_blk[i] {
                let z = &mut zb[*blk];
                for &(p, q, a) in ents {
                    z[(p, q)] += yi * a;
                    if p != q {
                        z[(q, p)] += yi * a;
                    }
                }
            }
            for &(k, a) in &self.a_lp[i] {
                zl[k] += yi * a;
            }
            for &(k, a) in &self.a_free[i] {
                zf[k] += yi * a;
            }
        }
        (zb, zl, zf)
    }
}

struct Iterate {
    xb: Vec<Dense>,
    xl: Vec<f64>,
    xf: Vec<f64>,
    y: Vec<f64>,
    zb: Vec<Dense>,
    zl: Vec<f64>,
}

struct Direction {
    dxb: Vec<Dense>,
    dxl: Vec<f64>,
    dxf: Vec<f64>,
    dy: Vec<f64>,
    dzb: Vec<Dense>,
    dzl: Vec<f64>,
}

struct Scaling {
    g: Dense,
    ginv: Dense,
    w: Dense,
    v: Vec<f64>,
}

fn nt_scaling(x: &Dense, z: &Dense) -> Option<Scaling> {
    let l = x.cholesky()?;
    let mut lzl = l.transpose().matmul(z).matmul(&l);
    lzl.symmetrize();
    let tol = 1e-15 * lzl.frob().max(1e-300);
    let (lam, u) = jacobi_eigen(&lzl, tol, 200).ok()?;
    if lam.iter().any(|&v| v <= 0.0 || !v.is_finite()) {
        return None;
    }
    let n = x.rows;
    let mut uq = u.clone();
    let mut uqt = u.transpose();
    for i in 0..n {
        let f = lam[i].powf(-0.25);
        for k in 0..n {
            uq[(k, i)] *= f;
            uqt[(i, k)] /= f;
        }
    }
    let g = l.matmul(&uq);
    let ginv = uqt.matmul(&l.lower_inverse());
    let mut w = g.matmul(&g.transpose());
    w.symmetrize();
    Some(Scaling { g, ginv, w, v: lam.iter().map(|v| v.sqrt()).collect() })
}

/// Largest step in `[0, inf)` keeping `x + a * dx` PSD.
fn max_step_psd(x: &Dense, dx: &Dense) -> f64 {
    let Some(l) = x.cholesky() else { return 0.0 };
    let li = l.lower_inverse();
    let mut t = li.matmul(dx).matmul(&li.transpose());
    t.symmetrize();
    let tol = 1e-14 * t.frob().max(1e-300);
    match jacobi_eigen(&t, tol, 200) {
        Ok((vals, _)) => {
            let lo = vals[0];
            if lo >= 0.0 {
                f64::INFINITY
            } else {
                -1.0 / lo
            }
        }
        Err(_) => 0.0,
    }
}

fn max_step_lp(x: &[f64], dx: &[f64]) -> f64 {
    x.iter().zip(dx).filter(|(_, &d)| d < 0.0).map(|(&v, &d)| -v / d).fold(f64::INFINITY, f64::min)
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Cholesky factorization parallel over rows within each column.
fn cholesky_par(a: &Dense) -> Option<Dense> {
    let n = a.rows;
    let mut l = a.clone();
    for i in 0..n {
        for j in i + 1..n {
            l.data[i * n + j] = 0.0;
        }
    }
    for j in 0..n {
        let (head, tail) = l.data.split_at_mut((j + 1) * n);
        let rowj = &mut head[j * n..(j + 1) * n];
        let mut d = rowj[j];
        for k in 0..j {
            d -= rowj[k] * rowj[k];
        }
        if d <= 0.0 || !d.is_finite() {
            return None;
        }
        let d = d.sqrt();
        rowj[j] = d;
        let rowj: &[f64] = rowj;
        tail.par_chunks_mut(n).for_each(|rowi| {
            let mut s = rowi[j];
            for k in 0..j {
                s -= rowi[k] * rowj[k];
            }
            rowi[j] = s / d;
        });
    }
    Some(l)
}

struct Schur {
    chol: Dense,
    /// Factor of `A_f^T M^-1 A_f` and the columns `M^-1 A_f`.
    free: Option<(Dense, Vec<Vec<f64>>)>,
}

fn relative_residuals(ip: &Internal, it: &Iterate) -> (f64, f64, f64, f64, f64) {
    let ax = ip.apply(&it.xb, &it.xl, &it.xf);
    let rp: Vec<f64> = ip.b.iter().zip(&ax).map(|(b, a)| b - a).collect();
    let (atb, atl, atf) = ip.adjoint(&it.y);
    let mut dn = 0.0;
    let mut cn = 0.0;
    for k in 0..ip.sizes.len() {
        let mut r = ip.c_blk[k].clone();
        r.add_scaled(&atb[k], -1.0);
        r.add_scaled(&it.zb[k], -1.0);
        dn += r.dot(&r);
        cn += ip.c_blk[k].dot(&ip.c_blk[k]);
    }
    for k in 0..ip.nl {
        let r = ip.c_lp[k] - atl[k] - it.zl[k];
        dn += r * r;
        cn += ip.c_lp[k] * ip.c_lp[k];
    }
    for k in 0..ip.nf {
        let r = ip.c_free[k] - atf[k];
        dn += r * r;
        cn += ip.c_free[k] * ip.c_free[k];
    }
    let pobj = (0..ip.sizes.len()).map(|k| ip.c_blk[k].dot(&it.xb[k])).sum::<f64>()
        + dot(&ip.c_lp, &it.xl)
        + dot(&ip.c_free, &it.xf);
    let dobj = dot(&ip.b, &it.y);
    let relp = norm(&rp) / (1.0 + norm(&ip.b));
    let reld = dn.sqrt() / (1.0 + cn.sqrt());
    let gap = (pobj - dobj).abs() / (1.0 + pobj.abs() + dobj.abs());
    (relp, reld, gap, pobj, dobj)
}

/// Solves the problem. Presolve errors (inconsistent rows) are returned as
/// `Err`; numerical trouble is reported through [`Status`].
pub fn solve(p: &SdpProblem, cfg: &SolverConfig) -> Result<SdpSolution> {
    p.validate()?;
    let rows = presolve(p)?;
    let ip = Internal::build(p, &rows);
    let (it, status, iters) = run_ipm(&ip, cfg);
    let mut y = vec![0.0; p.constraints.len()];
    for (k, &r) in rows.iter().enumerate() {
        y[r] = it.y[k] * ip.scale[k];
    }
    let sign = match p.sense {
        Sense::Minimize => 1.0,
        Sense::Maximize => -1.0,
    };
    let mut sol = SdpSolution {
        status,
        blocks: it.xb.iter().map(|d| d.to_sym()).collect(),
        nonneg: it.xl.clone(),
        free: it.xf.clone(),
        y: y.iter().map(|v| sign * v).collect(),
        dual_blocks: it.zb.iter().map(|d| d.to_sym()).collect(),
        dual_nonneg: it.zl.clone(),
        objective: 0.0,
        dual_objective: 0.0,
        residuals: Residuals::default(),
        iterations: iters,
    };
    let (obj, dobj, res) = evaluate(p, &sol)?;
    sol.objective = obj;
    sol.dual_objective = dobj;
    sol.residuals = res;
    Ok(sol)
}

fn run_ipm(ip: &Internal, cfg: &SolverConfig) -> (Iterate, Status, usize) {
    let m = ip.m();
    let data_max = ip
        .b
        .iter()
        .map(|v| v.abs())
        .chain(ip.c_blk.iter().flat_map(|c| c.data.iter().map(|v| v.abs())))
        .chain(ip.c_lp.iter().map(|v| v.abs()))
        .fold(0.0, f64::max);
    let tau = 1.0 + data_max;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut jitter = |t: f64| if cfg.seed == 0 { t } else { t * (1.0 + 0.1 * rng.gen::<f64>()) };
    let mut it = Iterate {
        xb: ip.sizes.iter().map(|&s| Dense::identity(s).scaled(tau)).collect(),
        xl: vec![tau; ip.nl],
        xf: vec![0.0; ip.nf],
        y: vec![0.0; m],
        zb: ip.sizes.iter().map(|&s| Dense::identity(s).scaled(tau)).collect(),
        zl: vec![tau; ip.nl],
    };
    for x in it.xb.iter_mut().chain(it.zb.iter_mut()) {
        for i in 0..x.rows {
            x[(i, i)] = jitter(x[(i, i)]);
        }
    }
    for v in it.xl.iter_mut().chain(it.zl.iter_mut()) {
        *v = jitter(*v);
    }
    let ncone = ip.sizes.iter().sum::<usize>() + ip.nl;
    let ncone = ncone.max(1) as f64;
    let mut best: Option<(f64, Iterate)> = None;

    for iter in 0..cfg.max_iters {
        let (relp, reld, gap, _, _) = relative_residuals(ip, &it);
        let merit = relp.max(reld).max(gap);
        log::trace!("iter {iter}: primal {relp:.2e} dual {reld:.2e} gap {gap:.2e}");
        if relp <= cfg.tol_feas && reld <= cfg.tol_feas && gap <= cfg.tol_gap {
            return (it, Status::Optimal, iter);
        }
        if best.as_ref().is_none_or(|(b, _)| merit < *b) {
            best = Some((merit, clone_iterate(&it)));
        }
        let mu = ((0..ip.sizes.len()).map(|k| it.xb[k].dot(&it.zb[k])).sum::<f64>() + dot(&it.xl, &it.zl)) / ncone;

        let mut scal = Vec::with_capacity(ip.sizes.len());
        for k in 0..ip.sizes.len() {
            match nt_scaling(&it.xb[k], &it.zb[k]) {
                Some(s) => scal.push(s),
                None => return finish(best, it, iter),
            }
        }
        let wl: Vec<f64> = it.xl.iter().zip(&it.zl).map(|(x, z)| (x / z).sqrt()).collect();
        let vl: Vec<f64> = it.xl.iter().zip(&it.zl).map(|(x, z)| (x * z).sqrt()).collect();

        let Some(schur) = factor_schur(ip, &scal, &wl) else { return finish(best, it, iter) };

        // Residuals of the current iterate.
        let ax = ip.apply(&it.xb, &it.xl, &it.xf);
        let rp: Vec<f64> = ip.b.iter().zip(&ax).map(|(b, a)| b - a).collect();
        let (atb, atl, atf) = ip.adjoint(&it.y);
        let rd_b: Vec<Dense> = (0..ip.sizes.len())
            .map(|k| {
                let mut r = ip.c_blk[k].clone();
                r.add_scaled(&atb[k], -1.0);
                r.add_scaled(&it.zb[k], -1.0);
                r.symmetrize();
                r
            })
            .collect();
        let rd_l: Vec<f64> = (0..ip.nl).map(|k| ip.c_lp[k] - atl[k] - it.zl[k]).collect();
        let rd_f: Vec<f64> = (0..ip.nf).map(|k| ip.c_free[k] - atf[k]).collect();

        // Predictor.
        let rc_b: Vec<Dense> = scal.iter().map(|s| diag(&s.v.iter().map(|v| -v * v).collect::<Vec<_>>())).collect();
        let rc_l: Vec<f64> = vl.iter().map(|v| -v * v).collect();
        let aff = direction(ip, &scal, &wl, &vl, &schur, &rp, &rd_b, &rd_l, &rd_f, &rc_b, &rc_l);
        let (ap, ad) = step_lengths(&it, &aff, 1.0);
        let mu_aff = ((0..ip.sizes.len())
            .map(|k| {
                let mut x = it.xb[k].clone();
                x.add_scaled(&aff.dxb[k], ap);
                let mut z = it.zb[k].clone();
                z.add_scaled(&aff.dzb[k], ad);
                x.dot(&z)
            })
            .sum::<f64>()
            + (0..ip.nl).map(|k| (it.xl[k] + ap * aff.dxl[k]) * (it.zl[k] + ad * aff.dzl[k])).sum::<f64>())
            / ncone;
        let sigma = (mu_aff / mu).clamp(0.0, 1.0).powi(3);

        // Corrector.
        let rc_b: Vec<Dense> = scal
            .iter()
            .enumerate()
            .map(|(k, s)| {
                let dxs = s.ginv.matmul(&aff.dxb[k]).matmul(&s.ginv.transpose());
                let dzs = s.g.transpose().matmul(&aff.dzb[k]).matmul(&s.g);
                let mut prod = dxs.matmul(&dzs);
                prod.symmetrize();
                let n = s.v.len();
                let mut r = prod.scaled(-1.0);
                for i in 0..n {
                    r[(i, i)] += sigma * mu - s.v[i] * s.v[i];
                }
                r
            })
            .collect();
        let rc_l: Vec<f64> = (0..ip.nl)
            .map(|k| {
                let dxs = aff.dxl[k] / wl[k];
                let dzs = aff.dzl[k] * wl[k];
                sigma * mu - vl[k] * vl[k] - dxs * dzs
            })
            .collect();
        let dir = direction(ip, &scal, &wl, &vl, &schur, &rp, &rd_b, &rd_l, &rd_f, &rc_b, &rc_l);
        let (ap, ad) = step_lengths(&it, &dir, 0.95);
        if ap < 1e-12 && ad < 1e-12 {
            return finish(best, it, iter);
        }
        for k in 0..ip.sizes.len() {
            it.xb[k].add_scaled(&dir.dxb[k], ap);
            it.xb[k].symmetrize();
            it.zb[k].add_scaled(&dir.dzb[k], ad);
            it.zb[k].symmetrize();
        }
        for k in 0..ip.nl {
            it.xl[k] += ap * dir.dxl[k];
            it.zl[k] += ad * dir.dzl[k];
        }
        for k in 0..ip.nf {
            it.xf[k] += ap * dir.dxf[k];
        }
        for k in 0..m {
            it.y[k] += ad * dir.dy[k];
        }
    }
    let (relp, reld, gap, _, _) = relative_residuals(ip, &it);
    if relp <= cfg.tol_feas && reld <= cfg.tol_feas && gap <= cfg.tol_gap {
        return (it, Status::Optimal, cfg.max_iters);
    }
    let merit = relp.max(reld).max(gap);
    match best {
        Some((b, bi)) if b < merit => (bi, Status::MaxIterations, cfg.max_iters),
        _ => (it, Status::MaxIterations, cfg.max_iters),
    }
}

fn finish(best: Option<(f64, Iterate)>, it: Iterate, iter: usize) -> (Iterate, Status, usize) {
    log::debug!("interior-point loop stalled at iteration {iter}");
    match best {
        Some((_, b)) => (b, Status::NumericalFailure, iter),
        None => (it, Status::NumericalFailure, iter),
    }
}

fn clone_iterate(it: &Iterate) -> Iterate {
    Iterate {
        xb: it.xb.clone(),
        xl: it.xl.clone(),
        xf: it.xf.clone(),
        y: it.y.clone(),
        zb: it.zb.clone(),
        zl: it.zl.clone(),
    }
}

fn diag(v: &[f64]) -> Dense {
    let mut d = Dense::zeros(v.len(), v.len());
    for (i, x) in v.iter().enumerate() {
        d[(i, i)] = *x;
    }
    d
}

fn step_lengths(it: &Iterate, d: &Direction, gamma: f64) -> (f64, f64) {
    let mut ap = f64::INFINITY;
    let mut ad = f64::INFINITY;
    for k in 0..it.xb.len() {
        ap = ap.min(max_step_psd(&it.xb[k], &d.dxb[k]));
        ad = ad.min(max_step_psd(&it.zb[k], &d.dzb[k]));
    }
    ap = ap.min(max_step_lp(&it.xl, &d.dxl));
    ad = ad.min(max_step_lp(&it.zl, &d.dzl));
    ((gamma * ap).min(1.0), (gamma * ad).min(1.0))
}

fn factor_schur(ip: &Internal, scal: &[Scaling], wl: &[f64]) -> Option<Schur> {
    let m = ip.m();
    // Rows touching each block.
    let mut touching: Vec<Vec<usize>> = vec![Vec::new(); ip.sizes.len()];
    for i in 0..m {
        for (blk, _) in &ip.a_blk[i] {
            touching[*blk].push(i);
        }
    }
    let mut lp_rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); ip.nl];
    for i in 0..m {
        for &(k, a) in &ip.a_lp[i] {
            lp_rows[k].push((i, a));
        }
    }
    let columns: Vec<Vec<(usize, f64)>> = (0..m)
        .into_par_iter()
        .map(|j| {
            let mut col: BTreeMap<usize, f64> = BTreeMap::new();
            for (blk, ents) in &ip.a_blk[j] {
                let w = &scal[*blk].w;
                let n = w.rows;
                // T = W A_j W
                let mut t = Dense::zeros(n, n);
                for &(p, q, a) in ents {
                    for r in 0..n {
                        let wrp = w[(r, p)];
                        let wrq = w[(r, q)];
                        for s in 0..n {
                            let mut v = wrp * w[(q, s)];
                            if p != q {
                                v += wrq * w[(p, s)];
                            }
                            t.data[r * n + s] += a * v;
                        }
                    }
                }
                for &i in &touching[*blk] {
                    let ents_i = ip.a_blk[i].iter().find(|(b, _)| b == blk).map(|(_, e)| e).unwrap();
                    let mut s = 0.0;
                    for &(p, q, a) in ents_i {
                        s += if p == q { a * t[(p, p)] } else { 2.0 * a * t[(p, q)] };
                    }
                    *col.entry(i).or_insert(0.0) += s;
                }
            }
            for &(k, aj) in &ip.a_lp[j] {
                let w2 = wl[k] * wl[k];
                for &(i, ai) in &lp_rows[k] {
                    *col.entry(i).or_insert(0.0) += ai * w2 * aj;
                }
            }
            col.into_iter().collect()
        })
        .collect();
    let mut mm = Dense::zeros(m, m);
    for (j, col) in columns.iter().enumerate() {
        for &(i, v) in col {
            mm[(i, j)] = v;
        }
    }
    mm.symmetrize();
    let maxdiag = (0..m).map(|i| mm[(i, i)]).fold(0.0, f64::max).max(1e-300);
    let mut chol = cholesky_par(&mm);
    let mut reg = 1e-15;
    while chol.is_none() && reg < 1e-6 {
        let mut mr = mm.clone();
        for i in 0..m {
            mr[(i, i)] += reg * maxdiag;
        }
        chol = cholesky_par(&mr);
        reg *= 100.0;
    }
    let chol = chol?;
    let free = if ip.nf > 0 {
        let mut af_cols = vec![vec![0.0; m]; ip.nf];
        for i in 0..m {
            for &(k, a) in &ip.a_free[i] {
                af_cols[k][i] += a;
            }
        }
        let minv_af: Vec<Vec<f64>> = af_cols.iter().map(|c| cholesky_solve(&chol, c)).collect();
        let mut s = Dense::zeros(ip.nf, ip.nf);
        for a in 0..ip.nf {
            for b in 0..ip.nf {
                s[(a, b)] = dot(&af_cols[a], &minv_af[b]);
            }
        }
        s.symmetrize();
        let sdiag = (0..ip.nf).map(|i| s[(i, i)]).fold(0.0, f64::max).max(1e-300);
        let mut sc = s.cholesky();
        let mut reg = 1e-15;
        while sc.is_none() && reg < 1e-6 {
            let mut sr = s.clone();
            for i in 0..ip.nf {
                sr[(i, i)] += reg * sdiag;
            }
            sc = sr.cholesky();
            reg *= 100.0;
        }
        Some((sc?, minv_af))
    } else {
        None
    };
    Some(Schur { chol, free })
}

#[allow(clippy::too_many_arguments)]
fn direction(
    ip: &Internal,
    scal: &[Scaling],
    wl: &[f64],
    vl: &[f64],
    schur: &Schur,
    rp: &[f64],
    rd_b: &[Dense],
    rd_l: &[f64],
    rd_f: &[f64],
    rc_b: &[Dense],
    rc_l: &[f64],
) -> Direction {
    let nb = ip.sizes.len();
    // GEG^T and W Rd W per block.
    let mut geg = Vec::with_capacity(nb);
    let mut wrw = Vec::with_capacity(nb);
    for k in 0..nb {
        let s = &scal[k];
        let n = s.v.len();
        let mut e = Dense::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                e[(i, j)] = 2.0 * rc_b[k][(i, j)] / (s.v[i] + s.v[j]);
            }
        }
        let mut t = s.g.matmul(&e).matmul(&s.g.transpose());
        t.symmetrize();
        geg.push(t);
        let mut t = s.w.matmul(&rd_b[k]).matmul(&s.w);
        t.symmetrize();
        wrw.push(t);
    }
    let el: Vec<f64> = rc_l.iter().zip(vl).map(|(r, v)| r / v).collect();
    let base_b: Vec<Dense> = (0..nb)
        .map(|k| {
            let mut t = geg[k].clone();
            t.add_scaled(&wrw[k], -1.0);
            t
        })
        .collect();
    let base_l: Vec<f64> = (0..ip.nl).map(|k| wl[k] * el[k] - wl[k] * wl[k] * rd_l[k]).collect();
    let abase = ip.apply(&base_b, &base_l, &vec![0.0; ip.nf]);
    let h: Vec<f64> = rp.iter().zip(&abase).map(|(r, a)| r - a).collect();

    let minv_h = cholesky_solve(&schur.chol, &h);
    let (dy, dxf) = match &schur.free {
        None => (minv_h, Vec::new()),
        Some((sc, minv_af)) => {
            // (A_f^T M^-1 A_f) df = A_f^T M^-1 h - rd_f
            let m = ip.m();
            let mut af_cols = vec![vec![0.0; m]; ip.nf];
            for i in 0..m {
                for &(k, a) in &ip.a_free[i] {
                    af_cols[k][i] += a;
                }
            }
            let rhs: Vec<f64> = (0..ip.nf).map(|a| dot(&af_cols[a], &minv_h) - rd_f[a]).collect();
            let df = cholesky_solve(sc, &rhs);
            let mut dy = minv_h.clone();
            for (a, dfa) in df.iter().enumerate() {
                for (d, mv) in dy.iter_mut().zip(&minv_af[a]) {
                    *d -= dfa * mv;
                }
            }
            (dy, df)
        }
    };
    let (atb, atl, _) = ip.adjoint(&dy);
    let mut dzb = Vec::with_capacity(nb);
    let mut dxb = Vec::with_capacity(nb);
    for k in 0..nb {
        let mut dz = rd_b[k].clone();
        dz.add_scaled(&atb[k], -1.0);
        dz.symmetrize();
        let mut dx = geg[k].clone();
        dx.add_scaled(&scal[k].w.matmul(&dz).matmul(&scal[k].w), -1.0);
        dx.symmetrize();
        dzb.push(dz);
        dxb.push(dx);
    }
    let dzl: Vec<f64> = (0..ip.nl).map(|k| rd_l[k] - atl[k]).collect();
    let dxl: Vec<f64> = (0..ip.nl).map(|k| wl[k] * el[k] - wl[k] * wl[k] * dzl[k]).collect();
    Direction { dxb, dxl, dxf, dy, dzb, dzl }
}

/// Objective values and relative residuals recomputed from the solution.
fn evaluate(p: &SdpProblem, s: &SdpSolution) -> Result<(f64, f64, Residuals)> {
    if s.blocks.len() != p.psd_blocks.len()
        || s.blocks.iter().zip(&p.psd_blocks).any(|(b, &n)| b.n() != n)
        || s.nonneg.len() != p.nonneg
        || s.free.len() != p.free
        || s.y.len() != p.constraints.len()
        || s.dual_blocks.len() != p.psd_blocks.len()
        || s.dual_nonneg.len() != p.nonneg
    {
        return Err(Error::Dimension("solution shape does not match the problem".into()));
    }
    let value = |v: &VarRef| -> f64 {
        match *v {
            VarRef::Psd { block, row, col } => *s.blocks[block].get(row, col),
            VarRef::NonNeg(i) => s.nonneg[i],
            VarRef::Free(i) => s.free[i],
        }
    };
    let mut rp2 = 0.0;
    let mut b2 = 0.0;
    let mut dobj = 0.0;
    // Dual slack is Z = C - A^T y when minimizing and Z = A^T y - C when maximizing.
    let zsign = match p.sense {
        Sense::Minimize => 1.0,
        Sense::Maximize => -1.0,
    };
    let mut res_b: Vec<FloatMat> = p.psd_blocks.iter().map(|&n| FloatMat::zeros(n)).collect();
    let mut res_l = vec![0.0; p.nonneg];
    let mut res_f = vec![0.0; p.free];
    let mut c2 = 0.0;
    let add = |v: &VarRef, a: f64, res_b: &mut Vec<FloatMat>, res_l: &mut Vec<f64>, res_f: &mut Vec<f64>| match *v {
        VarRef::Psd { block, row, col } => {
            let val = if row == col { a } else { 0.5 * a };
            let cur = *res_b[block].get(row, col);
            res_b[block].set(row, col, cur + val);
        }
        VarRef::NonNeg(i) => res_l[i] += a,
        VarRef::Free(i) => res_f[i] += a,
    };
    let mut pobj = 0.0;
    for (v, a) in &p.objective {
        let a = to_f64(a);
        pobj += a * value(v);
        add(v, a, &mut res_b, &mut res_l, &mut res_f);
    }
    for b in &res_b {
        c2 += b.inner(b);
    }
    c2 += res_l.iter().chain(&res_f).map(|v| v * v).sum::<f64>();
    for (c, &yi) in p.constraints.iter().zip(&s.y) {
        let mut ax = 0.0;
        for (v, a) in &c.terms {
            let a = to_f64(a);
            ax += a * value(v);
            add(v, -yi * a, &mut res_b, &mut res_l, &mut res_f);
        }
        let b = to_f64(&c.rhs);
        rp2 += (b - ax) * (b - ax);
        b2 += b * b;
        dobj += b * yi;
    }
    let mut d2 = 0.0;
    for (k, r) in res_b.iter().enumerate() {
        let d = r.sub(&s.dual_blocks[k].scale(&zsign))?;
        d2 += d.inner(&d);
    }
    for (k, r) in res_l.iter().enumerate() {
        d2 += (r - zsign * s.dual_nonneg[k]).powi(2);
    }
    d2 += res_f.iter().map(|v| v * v).sum::<f64>();
    let res = Residuals {
        primal: rp2.sqrt() / (1.0 + b2.sqrt()),
        dual: d2.sqrt() / (1.0 + c2.sqrt()),
        gap: (pobj - dobj).abs() / (1.0 + pobj.abs() + dobj.abs()),
    };
    Ok((pobj, dobj, res))
}

/// Relative primal infeasibility, dual infeasibility and duality gap,
/// recomputed from the solution's variables.
pub fn residuals(p: &SdpProblem, s: &SdpSolution) -> Result<Residuals> {
    evaluate(p, s).map(|(_, _, r)| r)
}

/// Which variables a margin problem shifts by `λ`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum MarginTargets {
    /// Every PSD block and every nonnegative scalar.
    All,
    /// The listed PSD blocks only.
    Blocks(Vec<usize>),
}

/// Solves `max λ` subject to the problem's constraints with each targeted
/// variable `G` written as `G' + λ I` (`G' ⪰ 0`, resp. `g' + λ` with
/// `g' ≥ 0`). The returned solution is expressed in the original
/// variables. Any objective on `p` is ignored.
pub fn margin_maximize(p: &SdpProblem, targets: &MarginTargets, cfg: &SolverConfig) -> Result<(f64, SdpSolution)> {
    p.validate()?;
    let shifted_block = |b: usize| match targets {
        MarginTargets::All => true,
        MarginTargets::Blocks(v) => v.contains(&b),
    };
    let shift_lp = matches!(targets, MarginTargets::All);
    if let MarginTargets::Blocks(v) = targets {
        if v.is_empty() || v.iter().any(|&b| b >= p.psd_blocks.len()) {
            return Err(Error::Precondition("margin blocks out of range".into()));
        }
    }
    let mut q = p.clone();
    let lam = q.add_free(1);
    for c in q.constraints.iter_mut() {
        let mut extra = Rational::zero();
        for (v, a) in &c.terms {
            match *v {
                VarRef::Psd { block, row, col } if row == col && shifted_block(block) => extra += a,
                VarRef::NonNeg(_) if shift_lp => extra += a,
                _ => {}
            }
        }
        if !extra.is_zero() {
            c.terms.push((VarRef::Free(lam), extra));
        }
    }
    q.set_objective(vec![(VarRef::Free(lam), Rational::from_integer(1.into()))], Sense::Maximize);
    let sol = solve(&q, cfg)?;
    let l = sol.free[lam];
    let mut out = sol.clone();
    out.free.truncate(p.free);
    for (b, blk) in out.blocks.iter_mut().enumerate() {
        if shifted_block(b) {
            for i in 0..blk.n() {
                let v = *blk.get(i, i);
                blk.set(i, i, v + l);
            }
        }
    }
    if shift_lp {
        for v in out.nonneg.iter_mut() {
            *v += l;
        }
    }
    out.objective = l;
    out.dual_objective = sol.dual_objective;
    out.residuals = sol.residuals;
    Ok((l, out))
}

/// Float value of a rational constant, used by callers building data.
pub fn approx(r: &Rational) -> f64 {
    r.to_f64().unwrap_or_else(|| to_f64(r))
}
