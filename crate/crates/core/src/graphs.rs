//! Simple graphs, stability numbers, critical edges and graph matrices
//! `M_G = α(G)(I + A_G) - J`.

use std::collections::BTreeSet;

use num_bigint::BigInt;
use num_traits::{One, Zero};

use crate::copositivity::{SimplexPoint, ZeroFamily, ZeroSet};
use crate::error::{Error, Result};
use crate::rational::Rational;
use crate::symlin::RatMat;

/// Largest order accepted by the exact routines.
pub const MAX_VERTICES: usize = 40;

/// Extra vertices beyond `α` allowed in an enumerated zero support.
pub const FAMILY_SUPPORT_SLACK: usize = 4;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    adj: Vec<u64>,
    name: String,
}

impl Graph {
    pub fn empty(n: usize) -> Result<Graph> {
        if n > MAX_VERTICES {
            return Err(Error::Cap(format!("graphs are capped at {MAX_VERTICES} vertices, got {n}")));
        }
        Ok(Graph { n, adj: vec![0; n], name: format!("empty:{n}") })
    }

    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Graph> {
        let mut g = Graph::empty(n)?;
        for &(i, j) in edges {
            g.add_edge(i, j)?;
        }
        g.name = format!("graph:{n}");
        Ok(g)
    }

    pub fn add_edge(&mut self, i: usize, j: usize) -> Result<()> {
        if i >= self.n || j >= self.n {
            return Err(Error::Dimension(format!("edge ({}, {}) outside {} vertices", i + 1, j + 1, self.n)));
        }
        if i == j {
            return Err(Error::Parse(format!("loop at vertex {}", i + 1)));
        }
        if self.has_edge(i, j) {
            return Err(Error::Parse(format!("duplicate edge ({}, {})", i + 1, j + 1)));
        }
        self.adj[i] |= 1 << j;
        self.adj[j] |= 1 << i;
        Ok(())
    }

    pub fn cycle(n: usize) -> Result<Graph> {
        if n < 3 {
            return Err(Error::Precondition("cycles need at least 3 vertices".into()));
        }
        let edges: Vec<_> = (0..n).map(|i| (i, (i + 1) % n)).collect();
        Graph::from_edges(n, &edges).map(|g| g.named(format!("cycle:{n}")))
    }

    pub fn path(n: usize) -> Result<Graph> {
        let edges: Vec<_> = (1..n).map(|i| (i - 1, i)).collect();
        Graph::from_edges(n, &edges).map(|g| g.named(format!("path:{n}")))
    }

    pub fn complete(n: usize) -> Result<Graph> {
        let edges: Vec<_> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
        Graph::from_edges(n, &edges).map(|g| g.named(format!("complete:{n}")))
    }

    pub fn petersen() -> Graph {
        let mut edges = Vec::new();
        for i in 0..5 {
            edges.push((i, (i + 1) % 5));
            edges.push((i, i + 5));
            edges.push((5 + i, 5 + (i + 2) % 5));
        }
        Graph::from_edges(10, &edges).expect("valid edge list").named("petersen".into())
    }

    fn named(mut self, name: String) -> Graph {
        self.name = name;
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Parses a generator spec (`cycle:N`, `path:N`, `complete:N`, `empty:N`, `petersen`).
    pub fn from_spec(spec: &str) -> Result<Graph> {
        let (kind, arg) = spec.split_once(':').unwrap_or((spec, ""));
        let num = || arg.parse::<usize>().map_err(|_| Error::Parse(format!("bad vertex count in {spec:?}")));
        match kind {
            "cycle" => Graph::cycle(num()?),
            "path" => Graph::path(num()?),
            "complete" => Graph::complete(num()?),
            "empty" => Graph::empty(num()?),
            "petersen" if arg.is_empty() => Ok(Graph::petersen()),
            _ => Err(Error::Parse(format!("unknown graph generator {spec:?}"))),
        }
    }

    /// Edge-list text: `n m`, then `m` lines `i j` with 1-based vertices.
    pub fn parse(text: &str) -> Result<Graph> {
        let mut lines = text
            .lines()
            .map(|l| l.split('#').next().unwrap_or("").trim())
            .filter(|l| !l.is_empty());
        let header = lines.next().ok_or_else(|| Error::Parse("empty graph file".into()))?;
        let nums: Vec<usize> = header
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| Error::Parse(format!("bad header {header:?}"))))
            .collect::<Result<_>>()?;
        let [n, m] = nums[..] else { return Err(Error::Parse(format!("header must be \"n m\", got {header:?}"))) };
        let mut g = Graph::empty(n)?;
        let mut count = 0;
        for line in lines {
            let ends: Vec<usize> = line
                .split_whitespace()
                .map(|t| t.parse().map_err(|_| Error::Parse(format!("bad edge line {line:?}"))))
                .collect::<Result<_>>()?;
            let [i, j] = ends[..] else { return Err(Error::Parse(format!("edge line must be \"i j\", got {line:?}"))) };
            if i == 0 || j == 0 {
                return Err(Error::Parse(format!("vertices are 1-based, got {line:?}")));
            }
            g.add_edge(i - 1, j - 1)?;
            count += 1;
        }
        if count != m {
            return Err(Error::Parse(format!("header announces {m} edges, found {count}")));
        }
        Ok(g)
    }

    pub fn to_text(&self) -> String {
        let edges = self.edges();
        let mut s = format!("{} {}\n", self.n, edges.len());
        for (i, j) in edges {
            s.push_str(&format!("{} {}\n", i + 1, j + 1));
        }
        s
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.adj[i] >> j & 1 == 1
    }

    pub fn neighbors(&self, i: usize) -> u64 {
        self.adj[i]
    }

    pub fn edges(&self) -> Vec<(usize, usize)> {
        (0..self.n).flat_map(|i| (i + 1..self.n).filter(move |&j| self.has_edge(i, j)).map(move |j| (i, j))).collect()
    }

    pub fn without_edge(&self, i: usize, j: usize) -> Graph {
        let mut g = self.clone();
        g.adj[i] &= !(1 << j);
        g.adj[j] &= !(1 << i);
        g
    }

    pub fn is_stable(&self, set: &[usize]) -> bool {
        set.iter().enumerate().all(|(k, &i)| set[k + 1..].iter().all(|&j| !self.has_edge(i, j)))
    }

    pub fn is_clique(&self, set: &[usize]) -> bool {
        set.iter().enumerate().all(|(k, &i)| set[k + 1..].iter().all(|&j| self.has_edge(i, j)))
    }

    pub fn adjacency(&self) -> RatMat {
        RatMat::from_fn(self.n, |i, j| if self.has_edge(i, j) { Rational::one() } else { Rational::zero() })
    }
}

fn bits(mut m: u64) -> impl Iterator<Item = usize> {
    std::iter::from_fn(move || {
        if m == 0 {
            None
        } else {
            let i = m.trailing_zeros() as usize;
            m &= m - 1;
            Some(i)
        }
    })
}

fn mask_to_vec(m: u64) -> Vec<usize> {
    bits(m).collect()
}

/// Number of cliques in a greedy clique cover of `p`; bounds α(G[p]).
fn clique_cover_bound(g: &Graph, mut p: u64) -> usize {
    let mut count = 0;
    while p != 0 {
        let v = p.trailing_zeros() as usize;
        let mut cand = p & g.adj[v];
        p &= !(1 << v);
        while cand != 0 {
            let u = cand.trailing_zeros() as usize;
            p &= !(1 << u);
            cand &= g.adj[u];
        }
        count += 1;
    }
    count
}

fn stable_bb(g: &Graph, r: u64, size: usize, p: u64, best: &mut usize, found: &mut Vec<u64>) {
    if p == 0 {
        if size > *best {
            *best = size;
            found.clear();
        }
        if size == *best {
            found.push(r);
        }
        return;
    }
    if size + clique_cover_bound(g, p) < *best {
        return;
    }
    let v = p.trailing_zeros() as usize;
    stable_bb(g, r | 1 << v, size + 1, p & !(1 << v) & !g.adj[v], best, found);
    // Excluding v only makes sense if some neighbour of v can still be chosen.
    stable_bb(g, r, size, p & !(1 << v), best, found);
}

/// Exact stability number and every maximum stable set (sorted).
pub fn stability_number(g: &Graph) -> (usize, Vec<Vec<usize>>) {
    let mut best = 0;
    let mut found = Vec::new();
    let all = if g.n == 64 { u64::MAX } else { (1u64 << g.n) - 1 };
    stable_bb(g, 0, 0, all, &mut best, &mut found);
    let mut sets: Vec<Vec<usize>> = found.into_iter().map(mask_to_vec).collect();
    sets.sort();
    sets.dedup();
    (best, sets)
}

pub fn alpha(g: &Graph) -> usize {
    stability_number(g).0
}

/// Edges whose removal raises the stability number.
pub fn critical_edges(g: &Graph) -> Vec<(usize, usize)> {
    let a = alpha(g);
    g.edges().into_iter().filter(|&(i, j)| alpha(&g.without_edge(i, j)) == a + 1).collect()
}

#[derive(Clone, Debug)]
pub struct GraphReport {
    pub alpha: usize,
    pub max_stable_sets: Vec<Vec<usize>>,
    pub critical_edges: Vec<(usize, usize)>,
    pub acritical: bool,
}

pub fn report(g: &Graph) -> GraphReport {
    let (alpha, max_stable_sets) = stability_number(g);
    let critical_edges = critical_edges(g);
    let acritical = critical_edges.is_empty();
    GraphReport { alpha, max_stable_sets, critical_edges, acritical }
}

/// `α(G)(I + A_G) - J`.
pub fn graph_matrix(g: &Graph) -> RatMat {
    let a = Rational::from_integer(BigInt::from(alpha(g)));
    RatMat::from_fn(g.n, |i, j| {
        let base = if i == j || g.has_edge(i, j) { a.clone() } else { Rational::zero() };
        base - Rational::one()
    })
}

/// Every clique of `g` with at most `max_size` vertices, as bitmasks.
fn small_cliques(g: &Graph, max_size: usize) -> Vec<u64> {
    let mut out = Vec::new();
    fn grow(g: &Graph, cur: u64, cand: u64, size: usize, max: usize, out: &mut Vec<u64>) {
        out.push(cur);
        if size == max {
            return;
        }
        for v in bits(cand) {
            // Extend only with larger vertices to list each clique once.
            let higher = cand & g.adj[v] & !((1u64 << (v + 1)) - 1);
            grow(g, cur | 1 << v, higher, size + 1, max, out);
        }
    }
    for v in 0..g.n {
        let higher = g.adj[v] & !((1u64 << (v + 1)) - 1);
        grow(g, 1 << v, higher, 1, max_size, &mut out);
    }
    out
}

/// Zeros of `x^T M_G x` on the simplex from the clique characterization:
/// supports made of `α` pairwise non-adjacent cliques, each of weight `1/α`.
pub fn graph_matrix_zeros(g: &Graph) -> ZeroSet {
    let (a, _) = stability_number(g);
    let cap = a + FAMILY_SUPPORT_SLACK;
    let cliques = small_cliques(g, cap.saturating_sub(a - 1).max(1));
    let closed: Vec<u64> = cliques.iter().map(|&c| bits(c).fold(c, |acc, v| acc | g.adj[v])).collect();
    let mut finite = Vec::new();
    let mut families = BTreeSet::new();
    let mut truncated = false;
    let mut stack: Vec<usize> = Vec::new();
    #[allow(clippy::too_many_arguments)]
    fn rec(
        idx: usize,
        blocked: u64,
        size: usize,
        ctx: (&[u64], &[u64], usize, usize),
        stack: &mut Vec<usize>,
        out: &mut Vec<Vec<usize>>,
        truncated: &mut bool,
    ) {
        let (cliques, closed, a, cap) = ctx;
        if stack.len() == a {
            out.push(stack.clone());
            return;
        }
        for k in idx..cliques.len() {
            let c = cliques[k];
            if c & blocked != 0 {
                continue;
            }
            let s = size + c.count_ones() as usize;
            if s > cap {
                *truncated = true;
                continue;
            }
            stack.push(k);
            rec(k + 1, blocked | closed[k], s, ctx, stack, out, truncated);
            stack.pop();
        }
    }
    let mut tuples = Vec::new();
    rec(0, 0, 0, (&cliques, &closed, a, cap), &mut stack, &mut tuples, &mut truncated);
    // A clique larger than the size filter would be excluded silently; flag it.
    if small_cliques(g, cap + 1).iter().any(|c| c.count_ones() as usize > cap.saturating_sub(a - 1).max(1)) {
        truncated = true;
    }
    let w = Rational::new(BigInt::one(), BigInt::from(a));
    for t in tuples {
        let support: u64 = t.iter().fold(0, |acc, &k| acc | cliques[k]);
        let dim: usize = t.iter().map(|&k| cliques[k].count_ones() as usize - 1).sum();
        if dim == 0 {
            let mut coords = vec![Rational::zero(); g.n];
            for v in bits(support) {
                coords[v] = w.clone();
            }
            finite.push(SimplexPoint::new(coords));
        } else {
            families.insert((mask_to_vec(support), dim));
        }
    }
    finite.sort_by(|x, y| x.support.cmp(&y.support));
    let infinite_families: Vec<ZeroFamily> =
        families.into_iter().map(|(support, dimension)| ZeroFamily { support, dimension }).collect();
    if truncated {
        log::warn!("zero families with supports larger than alpha + {FAMILY_SUPPORT_SLACK} were not enumerated");
    }
    ZeroSet { value: Rational::zero(), is_finite: infinite_families.is_empty() && !truncated, finite_zeros: finite, infinite_families, truncated }
}

#[derive(Clone, Debug)]
pub struct ZeroCharacterization {
    pub is_zero: bool,
    /// Components of the support, in order of their smallest vertex.
    pub components: Vec<Vec<usize>>,
}

/// Decides `x^T M_G x = 0` from the clique criterion and by direct
/// evaluation; the two must agree.
pub fn check_zero_characterization(g: &Graph, x: &[Rational]) -> Result<ZeroCharacterization> {
    if x.len() != g.n {
        return Err(Error::Dimension(format!("point of length {} for {} vertices", x.len(), g.n)));
    }
    if x.iter().any(|v| v < &Rational::zero()) || x.iter().fold(Rational::zero(), |s, v| s + v) != Rational::one() {
        return Err(Error::Precondition("point is not in the simplex".into()));
    }
    let a = alpha(g);
    let support: u64 = x.iter().enumerate().filter(|(_, v)| !v.is_zero()).fold(0, |m, (i, _)| m | 1 << i);
    let mut components = Vec::new();
    let mut left = support;
    while left != 0 {
        let start = left.trailing_zeros() as usize;
        let mut comp = 1u64 << start;
        loop {
            let grown = bits(comp).fold(comp, |acc, v| acc | (g.adj[v] & support));
            if grown == comp {
                break;
            }
            comp = grown;
        }
        left &= !comp;
        components.push(mask_to_vec(comp));
    }
    let w = Rational::new(BigInt::one(), BigInt::from(a));
    let combinatorial = components.len() == a
        && components.iter().all(|c| g.is_clique(c) && c.iter().fold(Rational::zero(), |s, &i| s + &x[i]) == w);
    let direct = graph_matrix(g).quad(x).is_zero();
    if combinatorial != direct {
        return Err(Error::Invariant(format!(
            "clique criterion says {combinatorial} but direct evaluation says {direct}"
        )));
    }
    Ok(ZeroCharacterization { is_zero: direct, components })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{rat, ratio};

    fn brute_alpha(g: &Graph) -> usize {
        (0u64..1 << g.n()).filter(|&m| g.is_stable(&mask_to_vec(m))).map(|m| m.count_ones() as usize).max().unwrap()
    }

    #[test]
    fn stability_numbers() {
        let (a, sets) = stability_number(&Graph::cycle(5).unwrap());
        assert_eq!(a, 2);
        assert_eq!(sets.len(), 5);
        assert_eq!(alpha(&Graph::complete(6).unwrap()), 1);
        let p = Graph::petersen();
        assert_eq!(alpha(&p), 4);
        assert_eq!(alpha(&p), brute_alpha(&p));
    }

    #[test]
    fn critical_edge_counts() {
        assert_eq!(critical_edges(&Graph::cycle(5).unwrap()).len(), 5);
        assert!(critical_edges(&Graph::cycle(6).unwrap()).is_empty());
        assert!(critical_edges(&Graph::petersen()).is_empty());
    }

    #[test]
    fn graph_matrices() {
        assert!(graph_matrix(&Graph::complete(4).unwrap()).is_zero());
        assert_eq!(graph_matrix(&Graph::empty(1).unwrap()), RatMat::zeros(1));
        let m = graph_matrix(&Graph::cycle(5).unwrap());
        assert_eq!(m.get(0, 1), &rat(1));
        assert_eq!(m.get(0, 2), &rat(-1));
    }

    #[test]
    fn c4_zeros() {
        let z = graph_matrix_zeros(&Graph::cycle(4).unwrap());
        assert!(z.is_finite);
        let pts: Vec<Vec<Rational>> = z.finite_zeros.iter().map(|p| p.coords.clone()).collect();
        let h = ratio(1, 2);
        assert_eq!(
            pts,
            vec![vec![h.clone(), rat(0), h.clone(), rat(0)], vec![rat(0), h.clone(), rat(0), h.clone()]]
        );
    }

    #[test]
    fn c5_has_clique_families() {
        let z = graph_matrix_zeros(&Graph::cycle(5).unwrap());
        assert!(!z.is_finite);
        assert!(z.infinite_families.iter().any(|f| f.support == vec![0, 2, 3] && f.dimension == 1));
    }

    #[test]
    fn zero_characterization() {
        let c4 = Graph::cycle(4).unwrap();
        let h = ratio(1, 2);
        assert!(check_zero_characterization(&c4, &[h.clone(), rat(0), h.clone(), rat(0)]).unwrap().is_zero);
        assert!(!check_zero_characterization(&c4, &[h.clone(), h.clone(), rat(0), rat(0)]).unwrap().is_zero);
        let c5 = Graph::cycle(5).unwrap();
        let x = [ratio(1, 2), rat(0), ratio(1, 4), ratio(1, 4), rat(0)];
        assert!(check_zero_characterization(&c5, &x).unwrap().is_zero);
    }

    #[test]
    fn parse_edge_list() {
        let g = Graph::parse("# c4\n4 4\n1 2\n2 3\n\n3 4\n4 1\n").unwrap();
        assert_eq!(g.edges(), Graph::cycle(4).unwrap().edges());
        assert!(Graph::parse("3 1\n1 1\n").is_err());
        assert!(Graph::parse("3 2\n1 2\n").is_err());
        assert!(Graph::parse("3 2\n1 2\n1 2\n").is_err());
        assert_eq!(Graph::parse(&g.to_text()).unwrap().edges(), g.edges());
    }

    #[test]
    fn generators() {
        assert_eq!(Graph::from_spec("cycle:7").unwrap().edges().len(), 7);
        assert_eq!(Graph::from_spec("path:4").unwrap().edges().len(), 3);
        assert_eq!(Graph::from_spec("petersen").unwrap().edges().len(), 15);
        assert!(Graph::from_spec("wheel:5").is_err());
        assert!(Graph::empty(41).is_err());
    }
}
