//! Graphs, vertex subsets and the exhaustive oracles used to validate the
//! relaxations: stable-set enumeration, the stability number and the 0/1
//! optimum of a polyhedral cone.

use std::cmp::Ordering;
use std::fmt;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hierarchy::PolyhedralCone;

/// A subset of `{0, .., 127}` stored as a 128-bit mask.
///
/// Ordering is size-major, colexicographic within a size. For masks of equal
/// popcount colex order coincides with numeric order of the mask, so the
/// comparison is `(len, bits)`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct VertexSet(u128);

impl VertexSet {
    pub const CAPACITY: usize = 128;
    pub const EMPTY: VertexSet = VertexSet(0);

    pub fn from_bits(bits: u128) -> Self {
        VertexSet(bits)
    }

    pub fn bits(self) -> u128 {
        self.0
    }

    pub fn singleton(i: usize) -> Self {
        assert!(i < Self::CAPACITY, "vertex {i} out of range");
        VertexSet(1u128 << i)
    }

    pub fn pair(i: usize, j: usize) -> Self {
        Self::singleton(i).with(j)
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn contains(self, i: usize) -> bool {
        i < Self::CAPACITY && (self.0 >> i) & 1 == 1
    }

    pub fn with(self, i: usize) -> Self {
        VertexSet(self.0 | Self::singleton(i).0)
    }

    pub fn without(self, i: usize) -> Self {
        VertexSet(self.0 & !Self::singleton(i).0)
    }

    pub fn union(self, other: Self) -> Self {
        VertexSet(self.0 | other.0)
    }

    pub fn intersection(self, other: Self) -> Self {
        VertexSet(self.0 & other.0)
    }

    pub fn difference(self, other: Self) -> Self {
        VertexSet(self.0 & !other.0)
    }

    pub fn is_subset_of(self, other: Self) -> bool {
        self.0 & !other.0 == 0
    }

    /// Largest element, if any.
    pub fn max_element(self) -> Option<usize> {
        (self.0 != 0).then(|| 127 - self.0.leading_zeros() as usize)
    }

    pub fn iter(self) -> Elements {
        Elements(self.0)
    }

    /// All subsets of `self`, in canonical order.
    pub fn subsets(self) -> Vec<VertexSet> {
        let mut out = Vec::with_capacity(1usize << self.len().min(20));
        let mut sub = 0u128;
        loop {
            out.push(VertexSet(sub));
            if sub == self.0 {
                break;
            }
            sub = (sub.wrapping_sub(self.0)) & self.0;
        }
        out.sort();
        out
    }

    /// All `S'` with `self ⊆ S' ⊆ upper`, in canonical order. Empty if
    /// `self` is not contained in `upper`.
    pub fn supersets_within(self, upper: VertexSet) -> Vec<VertexSet> {
        if !self.is_subset_of(upper) {
            return Vec::new();
        }
        let mut out: Vec<_> = upper.difference(self).subsets().into_iter().map(|d| d.union(self)).collect();
        out.sort();
        out
    }
}

impl Ord for VertexSet {
    fn cmp(&self, other: &Self) -> Ordering {
        self.len().cmp(&other.len()).then(self.0.cmp(&other.0))
    }
}

impl PartialOrd for VertexSet {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl FromIterator<usize> for VertexSet {
    fn from_iter<I: IntoIterator<Item = usize>>(iter: I) -> Self {
        iter.into_iter().fold(VertexSet::EMPTY, VertexSet::with)
    }
}

impl fmt::Debug for VertexSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for VertexSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (k, i) in self.iter().enumerate() {
            if k > 0 {
                f.write_str(",")?;
            }
            write!(f, "{i}")?;
        }
        f.write_str("}")
    }
}

/// Iterator over the elements of a [`VertexSet`] in increasing order.
#[derive(Clone, Debug)]
pub struct Elements(u128);

impl Iterator for Elements {
    type Item = usize;

    fn next(&mut self) -> Option<usize> {
        if self.0 == 0 {
            return None;
        }
        let i = self.0.trailing_zeros() as usize;
        self.0 &= self.0 - 1;
        Some(i)
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let k = self.0.count_ones() as usize;
        (k, Some(k))
    }
}

impl ExactSizeIterator for Elements {}

fn check_capacity(n: usize) -> Result<()> {
    if n > VertexSet::CAPACITY {
        return Err(Error::Capacity(format!(
            "{n} vertices exceed the {}-bit vertex mask",
            VertexSet::CAPACITY
        )));
    }
    Ok(())
}

/// All subsets of `{0..n-1}` of size `k`, in increasing mask order.
fn subsets_of_size(n: usize, k: usize, out: &mut Vec<VertexSet>) {
    if k > n {
        return;
    }
    if k == 0 {
        out.push(VertexSet::EMPTY);
        return;
    }
    let limit: u128 = if n == 128 { u128::MAX } else { (1u128 << n) - 1 };
    let mut s: u128 = if k == 128 { u128::MAX } else { (1u128 << k) - 1 };
    loop {
        out.push(VertexSet(s));
        // Gosper's hack; stop when the top bit would leave the ground set.
        let c = s & s.wrapping_neg();
        let (r, overflow) = s.overflowing_add(c);
        if overflow || r == 0 {
            break;
        }
        let next = (((r ^ s) >> 2) / c) | r;
        if next & !limit != 0 {
            break;
        }
        s = next;
    }
}

/// All subsets of `{0..n-1}` with at most `r` elements, size-major and
/// colexicographic within a size. `r > n` is clamped to `n`.
pub fn enumerate_subsets(n: usize, r: usize) -> Result<Vec<VertexSet>> {
    check_capacity(n)?;
    let mut out = Vec::new();
    for k in 0..=r.min(n) {
        subsets_of_size(n, k, &mut out);
    }
    Ok(out)
}

/// All `k`-subsets of `{0..n-1}` in colex order.
pub fn subsets_exact(n: usize, k: usize) -> Result<Vec<VertexSet>> {
    check_capacity(n)?;
    let mut out = Vec::new();
    subsets_of_size(n, k, &mut out);
    Ok(out)
}

/// Σ_{i=0}^{r} C(n, i).
pub fn binomial_prefix_sum(n: usize, r: usize) -> u128 {
    (0..=r.min(n)).map(|i| binomial(n, i)).sum()
}

pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc
}

/// Simple undirected graph on `0..n`.
#[derive(Clone, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    edges: Vec<(usize, usize)>,
    adj: Vec<VertexSet>,
}

impl fmt::Debug for Graph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Graph").field("n", &self.n).field("edges", &self.edges).finish()
    }
}

impl Graph {
    /// Builds a graph from an edge list. Edges are normalised to `i < j`
    /// and deduplicated; loops and out-of-range endpoints are rejected.
    pub fn new(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        check_capacity(n)?;
        let mut list = Vec::new();
        for (i, j) in edges {
            if i == j {
                return Err(Error::InvalidParameter(format!("loop at vertex {i}")));
            }
            if i >= n || j >= n {
                return Err(Error::InvalidParameter(format!("edge ({i},{j}) out of range for n = {n}")));
            }
            list.push((i.min(j), i.max(j)));
        }
        list.sort_unstable();
        list.dedup();
        let mut adj = vec![VertexSet::EMPTY; n];
        for &(i, j) in &list {
            adj[i] = adj[i].with(j);
            adj[j] = adj[j].with(i);
        }
        Ok(Graph { n, edges: list, adj })
    }

    pub fn empty(n: usize) -> Result<Self> {
        Self::new(n, [])
    }

    pub fn complete(n: usize) -> Result<Self> {
        Self::new(n, (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))))
    }

    pub fn cycle(n: usize) -> Result<Self> {
        if n < 3 {
            return Err(Error::InvalidParameter(format!("cycle needs at least 3 vertices, got {n}")));
        }
        Self::new(n, (0..n).map(|i| (i, (i + 1) % n)))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn neighbors(&self, i: usize) -> VertexSet {
        self.adj[i]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.adj[i].len()
    }

    pub fn adjacent(&self, i: usize, j: usize) -> bool {
        self.adj[i].contains(j)
    }

    pub fn vertex_set(&self) -> VertexSet {
        (0..self.n).collect()
    }

    /// True if no two elements of `s` are adjacent.
    pub fn is_stable(&self, s: VertexSet) -> bool {
        s.iter().all(|i| self.adj[i].intersection(s).is_empty())
    }

    pub fn complement(&self) -> Graph {
        let edges = (0..self.n).flat_map(|i| (i + 1..self.n).map(move |j| (i, j)));
        let edges: Vec<_> = edges.filter(|&(i, j)| !self.adjacent(i, j)).collect();
        Graph::new(self.n, edges).expect("complement of a valid graph is valid")
    }

    /// Parses the `p <n> <m>` / `e <i> <j>` text format.
    pub fn read_text<R: BufRead>(reader: R) -> Result<Graph> {
        let mut header: Option<(usize, usize)> = None;
        let mut edges = Vec::new();
        for (idx, line) in reader.lines().enumerate() {
            let lineno = idx + 1;
            let line = line.map_err(|e| Error::Parse { line: lineno, msg: e.to_string() })?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('c') {
                continue;
            }
            let mut toks = line.split_whitespace();
            let kind = toks.next().unwrap_or_default();
            let nums: Vec<usize> = toks
                .map(|t| t.parse::<usize>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::Parse { line: lineno, msg: format!("bad integer: {e}") })?;
            match (kind, nums.as_slice()) {
                ("p", &[n, m]) => {
                    if header.is_some() {
                        return Err(Error::Parse { line: lineno, msg: "duplicate header".into() });
                    }
                    header = Some((n, m));
                }
                ("e", &[i, j]) => {
                    let (n, _) = header.ok_or(Error::Parse { line: lineno, msg: "edge before header".into() })?;
                    if i >= n || j >= n || i == j {
                        return Err(Error::Validation { line: lineno, msg: format!("invalid edge ({i},{j}) for n = {n}") });
                    }
                    edges.push((i, j));
                }
                _ => return Err(Error::Parse { line: lineno, msg: format!("unrecognised line '{line}'") }),
            }
        }
        let (n, m) = header.ok_or(Error::Parse { line: 0, msg: "missing 'p <n> <m>' header".into() })?;
        if edges.len() != m {
            return Err(Error::Validation { line: 0, msg: format!("header declares {m} edges, found {}", edges.len()) });
        }
        Graph::new(n, edges)
    }

    pub fn write_text<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "p {} {}", self.n, self.edges.len())?;
        for &(i, j) in &self.edges {
            writeln!(w, "e {i} {j}")?;
        }
        Ok(())
    }
}

fn is_prime(q: u64) -> bool {
    if q < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= q {
        if q % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

/// Paley graph on the prime field of order `q`: `u ~ v` iff `u - v` is a
/// nonzero square mod `q`.
pub fn paley(q: usize) -> Result<Graph> {
    if !is_prime(q as u64) {
        return Err(Error::UnsupportedField(format!("q = {q} is not prime; only prime fields are supported")));
    }
    if q % 4 != 1 {
        return Err(Error::InvalidParameter(format!("q = {q} is not 1 mod 4, so -1 is not a square")));
    }
    check_capacity(q)?;
    let mut square = vec![false; q];
    for x in 1..q {
        square[x * x % q] = true;
    }
    let edges = (0..q).flat_map(|u| (u + 1..q).map(move |v| (u, v)));
    Graph::new(q, edges.filter(|&(u, v)| square[(v - u) % q]).collect::<Vec<_>>())
}

/// Largest vertex count accepted by [`stability_number`].
pub const ALPHA_ORACLE_MAX_N: usize = 64;

/// Exact stability number by branch and bound.
pub fn stability_number(g: &Graph) -> Result<usize> {
    if g.n() > ALPHA_ORACLE_MAX_N {
        return Err(Error::Capacity(format!(
            "stability oracle is limited to {ALPHA_ORACLE_MAX_N} vertices, got {}",
            g.n()
        )));
    }
    let mut best = greedy_stable_set(g, g.vertex_set()).len();
    branch(g, g.vertex_set(), 0, &mut best);
    Ok(best)
}

/// Min-degree greedy stable set inside `cand`.
fn greedy_stable_set(g: &Graph, mut cand: VertexSet) -> VertexSet {
    let mut chosen = VertexSet::EMPTY;
    while !cand.is_empty() {
        let v = cand.iter().min_by_key(|&v| (g.neighbors(v).intersection(cand).len(), v)).unwrap();
        chosen = chosen.with(v);
        cand = cand.difference(g.neighbors(v)).without(v);
    }
    chosen
}

/// Upper bound on the stability number of the subgraph induced by `cand`:
/// the smaller of a greedy clique cover and the degree bound
/// `|cand| - ceil(m / Δ)`.
fn stable_upper_bound(g: &Graph, cand: VertexSet) -> usize {
    let k = cand.len();
    let mut edges = 0usize;
    let mut max_deg = 0usize;
    for v in cand.iter() {
        let d = g.neighbors(v).intersection(cand).len();
        edges += d;
        max_deg = max_deg.max(d);
    }
    edges /= 2;
    let degree_bound = if max_deg == 0 { k } else { k - edges.div_ceil(max_deg) };

    let mut left = cand;
    let mut cliques = 0;
    while let Some(v) = left.max_element() {
        let mut clique_cand = g.neighbors(v).intersection(left);
        left = left.without(v);
        while let Some(w) = clique_cand.max_element() {
            left = left.without(w);
            clique_cand = clique_cand.intersection(g.neighbors(w));
        }
        cliques += 1;
    }
    degree_bound.min(cliques)
}

fn branch(g: &Graph, cand: VertexSet, size: usize, best: &mut usize) {
    if cand.is_empty() {
        *best = (*best).max(size);
        return;
    }
    if size + stable_upper_bound(g, cand) <= *best {
        return;
    }
    let v = cand.iter().max_by_key(|&v| (g.neighbors(v).intersection(cand).len(), v)).unwrap();
    if g.neighbors(v).intersection(cand).is_empty() {
        // every remaining vertex is isolated in the candidate subgraph
        *best = (*best).max(size + cand.len());
        return;
    }
    branch(g, cand.difference(g.neighbors(v)).without(v), size + 1, best);
    branch(g, cand.without(v), size, best);
}

/// All stable sets with at most `r` vertices, in canonical order (∅ first).
pub fn stable_subsets(g: &Graph, r: usize) -> Vec<VertexSet> {
    stable_subsets_capped(g, r, usize::MAX).expect("uncapped enumeration")
}

/// Like [`stable_subsets`], but gives up with `None` as soon as more than
/// `cap` sets have been found.
pub fn stable_subsets_capped(g: &Graph, r: usize, cap: usize) -> Option<Vec<VertexSet>> {
    let mut out = vec![VertexSet::EMPTY];
    let mut level = vec![VertexSet::EMPTY];
    for _ in 0..r.min(g.n()) {
        let mut next = Vec::new();
        for &s in &level {
            let start = s.max_element().map_or(0, |m| m + 1);
            for v in start..g.n() {
                if g.neighbors(v).intersection(s).is_empty() {
                    next.push(s.with(v));
                    if out.len() + next.len() > cap {
                        return None;
                    }
                }
            }
        }
        if next.is_empty() {
            break;
        }
        next.sort();
        out.extend_from_slice(&next);
        level = next;
    }
    Some(out)
}

/// Largest vertex count accepted by [`zero_one_optimum`].
pub const ZERO_ONE_ORACLE_MAX_N: usize = 20;

/// Maximum of `c^T (1, x)` over 0/1 vectors `x` with `(1, x)` in the cone,
/// by enumeration of all `2^n` points. Returns `-inf` when no such point
/// exists. `c` is indexed like the cone rows: entry 0 is the homogenizing
/// coordinate.
pub fn zero_one_optimum(k: &PolyhedralCone, c: &[f64]) -> Result<f64> {
    let n = k.n();
    if n > ZERO_ONE_ORACLE_MAX_N {
        return Err(Error::Capacity(format!(
            "0/1 oracle is limited to {ZERO_ONE_ORACLE_MAX_N} vertices, got {n}"
        )));
    }
    if c.len() != n + 1 {
        return Err(Error::Argument(format!("objective has length {}, expected {}", c.len(), n + 1)));
    }
    let mut best = f64::NEG_INFINITY;
    for mask in 0u32..(1u32 << n) {
        let value = |a: &[f64]| a[0] + (0..n).filter(|&i| mask >> i & 1 == 1).map(|i| a[i + 1]).sum::<f64>();
        if k.rows().iter().all(|a| value(a) >= -1e-12) {
            best = best.max(value(c));
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute_alpha(g: &Graph) -> usize {
        (0u64..(1u64 << g.n()))
            .map(|m| VertexSet::from_bits(m as u128))
            .filter(|&s| g.is_stable(s))
            .map(|s| s.len())
            .max()
            .unwrap()
    }

    #[test]
    fn subset_counts() {
        let s = enumerate_subsets(3, 2).unwrap();
        let expected: Vec<VertexSet> = vec![
            VertexSet::EMPTY,
            VertexSet::singleton(0),
            VertexSet::singleton(1),
            VertexSet::singleton(2),
            VertexSet::pair(0, 1),
            VertexSet::pair(0, 2),
            VertexSet::pair(1, 2),
        ];
        assert_eq!(s, expected);
        assert_eq!(enumerate_subsets(5, 2).unwrap().len(), 16);
        assert_eq!(enumerate_subsets(61, 3).unwrap().len(), 37882);
        assert!(matches!(enumerate_subsets(129, 1), Err(Error::Capacity(_))));
        assert_eq!(enumerate_subsets(128, 1).unwrap().len(), 129);
    }

    #[test]
    fn subsets_are_sorted_and_distinct() {
        let s = enumerate_subsets(7, 7).unwrap();
        assert_eq!(s.len(), 128);
        assert!(s.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn supersets_between() {
        let s = VertexSet::singleton(1);
        let t: VertexSet = [1, 2, 3].into_iter().collect();
        let sup = s.supersets_within(t);
        assert_eq!(sup.len(), 4);
        assert!(sup.iter().all(|x| s.is_subset_of(*x) && x.is_subset_of(t)));
        assert!(VertexSet::singleton(5).supersets_within(t).is_empty());
    }

    #[test]
    fn paley_five_is_the_pentagon() {
        let g = paley(5).unwrap();
        assert_eq!(g.edges(), &[(0, 1), (0, 4), (1, 2), (2, 3), (3, 4)]);
    }

    #[test]
    fn paley_thirteen_is_regular() {
        let g = paley(13).unwrap();
        assert_eq!(g.num_edges(), 39);
        assert!((0..13).all(|v| g.degree(v) == 6));
    }

    #[test]
    fn paley_parameter_errors() {
        assert!(matches!(paley(8), Err(Error::UnsupportedField(_))));
        assert!(matches!(paley(7), Err(Error::InvalidParameter(_))));
        assert!(matches!(paley(9), Err(Error::UnsupportedField(_))));
        assert!(matches!(paley(12), Err(Error::UnsupportedField(_))));
    }

    #[test]
    fn paley_regularity_up_to_113() {
        for q in (5..=113).filter(|&q| is_prime(q as u64) && q % 4 == 1) {
            let g = paley(q).unwrap();
            assert_eq!(g.num_edges(), q * (q - 1) / 4, "q = {q}");
            assert!((0..q).all(|v| g.degree(v) == (q - 1) / 2));
            assert_eq!(g.complement().num_edges(), g.num_edges());
        }
    }

    #[test]
    fn alpha_small_cases() {
        assert_eq!(stability_number(&Graph::complete(5).unwrap()).unwrap(), 1);
        assert_eq!(stability_number(&paley(13).unwrap()).unwrap(), 3);
        assert_eq!(brute_alpha(&paley(13).unwrap()), 3);
        assert_eq!(stability_number(&Graph::cycle(5).unwrap()).unwrap(), 2);
        assert_eq!(stability_number(&Graph::empty(6).unwrap()).unwrap(), 6);
        assert!(matches!(stability_number(&Graph::empty(65).unwrap()), Err(Error::Capacity(_))));
    }

    #[test]
    fn alpha_paley_61() {
        assert_eq!(stability_number(&paley(61).unwrap()).unwrap(), 5);
    }

    #[test]
    fn stable_subset_examples() {
        assert_eq!(stable_subsets(&Graph::complete(3).unwrap(), 3).len(), 4);
        assert_eq!(stable_subsets(&paley(13).unwrap(), 2).len(), 53);
        assert_eq!(stable_subsets(&Graph::empty(4).unwrap(), 2).len(), 11);
        let all = stable_subsets(&paley(13).unwrap(), 13);
        assert!(all.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(all.last().unwrap().len(), 3);
    }

    #[test]
    fn text_format_round_trip() {
        let g = paley(13).unwrap();
        let mut buf = Vec::new();
        g.write_text(&mut buf).unwrap();
        let text = format!("c a comment\n\n{}", String::from_utf8(buf).unwrap());
        let h = Graph::read_text(text.as_bytes()).unwrap();
        assert_eq!(g, h);
    }

    #[test]
    fn text_format_errors() {
        assert!(matches!(Graph::read_text("e 0 1\n".as_bytes()), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(Graph::read_text("p 2 1\ne 0 2\n".as_bytes()), Err(Error::Validation { line: 2, .. })));
        assert!(matches!(Graph::read_text("p 2 2\ne 0 1\n".as_bytes()), Err(Error::Validation { .. })));
        assert!(matches!(Graph::read_text("p 2 x\n".as_bytes()), Err(Error::Parse { line: 1, .. })));
    }

    #[test]
    fn graph_rejects_loops_and_dedups() {
        assert!(Graph::new(3, [(1, 1)]).is_err());
        assert!(Graph::new(3, [(0, 3)]).is_err());
        assert_eq!(Graph::new(3, [(0, 1), (1, 0), (0, 1)]).unwrap().num_edges(), 1);
    }
}
