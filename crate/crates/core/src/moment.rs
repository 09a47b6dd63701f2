//! Moment vectors and the matrices built from them: the blocks `A_S(y)`,
//! their alternating sums `A(S,T)(y)`, the principal submatrices `M(T;y)`,
//! full moment matrices `M_t(y)` and the shifted vector `a·y`.
//!
//! Every operation is generic over [`MomentValue`], so the same code path
//! evaluates numeric moment vectors (`f64`) and builds constraint matrices
//! symbolically ([`LinExpr`]).

use std::collections::HashMap;
use std::fmt::Debug;
use std::sync::Arc;

use faer::Mat;

use crate::error::{Error, Result};
use crate::graphs::{enumerate_subsets, stable_subsets, Graph, VertexSet};
use crate::linexpr::LinExpr;

/// Entry type of moment vectors and moment matrices.
pub trait MomentValue: Clone + Debug + PartialEq + Send + Sync {
    fn zero() -> Self;
    /// `self += factor · other`.
    fn add_scaled(&mut self, other: &Self, factor: f64);
    fn is_zero(&self) -> bool;
}

impl MomentValue for f64 {
    fn zero() -> Self {
        0.0
    }
    fn add_scaled(&mut self, other: &Self, factor: f64) {
        *self += factor * other;
    }
    fn is_zero(&self) -> bool {
        *self == 0.0
    }
}

impl MomentValue for LinExpr {
    fn zero() -> Self {
        LinExpr::zero()
    }
    fn add_scaled(&mut self, other: &Self, factor: f64) {
        LinExpr::add_scaled(self, other, factor)
    }
    fn is_zero(&self) -> bool {
        LinExpr::is_zero(self)
    }
}

/// Which subsets carry a stored value.
#[derive(Clone, Debug)]
pub enum Domain {
    /// Every subset of size at most the bound.
    AllSubsets,
    /// Only stable sets of the graph; every other subset reads as zero.
    StableOnly(Arc<Graph>),
}

/// Partial assignment `I ↦ y_I` on subsets of size at most `bound`.
#[derive(Clone, Debug)]
pub struct MomentVector<V = f64> {
    n: usize,
    bound: usize,
    domain: Domain,
    values: HashMap<VertexSet, V>,
}

impl<V: MomentValue> MomentVector<V> {
    /// Builds the vector by evaluating `f` on every subset of the domain.
    pub fn from_fn(n: usize, bound: usize, domain: Domain, mut f: impl FnMut(VertexSet) -> V) -> Result<Self> {
        let keys = match &domain {
            Domain::AllSubsets => enumerate_subsets(n, bound)?,
            Domain::StableOnly(g) => {
                if g.n() != n {
                    return Err(Error::Argument(format!("graph has {} vertices, expected {n}", g.n())));
                }
                stable_subsets(g, bound)
            }
        };
        let values = keys.into_iter().map(|k| (k, f(k))).collect();
        Ok(MomentVector { n, bound, domain, values })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn bound(&self) -> usize {
        self.bound
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    /// Stored keys in canonical order.
    pub fn keys(&self) -> Vec<VertexSet> {
        let mut k: Vec<_> = self.values.keys().copied().collect();
        k.sort();
        k
    }

    /// Value at `s`. Sets outside the stored domain (non-stable sets under
    /// [`Domain::StableOnly`]) read as zero; `|s|` above the bound is an
    /// error.
    pub fn get(&self, s: VertexSet) -> Result<V> {
        if s.len() > self.bound {
            return Err(Error::Domain(format!("subset {s} exceeds moment bound {}", self.bound)));
        }
        Ok(self.at(s))
    }

    /// Unchecked lookup used once the size bound has been validated.
    fn at(&self, s: VertexSet) -> V {
        match self.values.get(&s) {
            Some(v) => v.clone(),
            None => {
                debug_assert!(
                    s.len() <= self.bound && matches!(self.domain, Domain::StableOnly(_)),
                    "missing moment entry {s}"
                );
                V::zero()
            }
        }
    }

    /// Overwrites a stored entry.
    pub fn set(&mut self, s: VertexSet, v: V) -> Result<()> {
        match self.values.get_mut(&s) {
            Some(slot) => {
                *slot = v;
                Ok(())
            }
            None => Err(Error::Domain(format!("subset {s} is not in the moment domain"))),
        }
    }

    fn require_bound(&self, needed: usize, what: &str) -> Result<()> {
        if needed > self.bound {
            return Err(Error::Domain(format!(
                "{what} needs moments up to size {needed}, vector stores up to {}",
                self.bound
            )));
        }
        Ok(())
    }
}

impl MomentVector<f64> {
    pub fn map_values(&self, f: impl Fn(f64) -> f64) -> Self {
        let mut out = self.clone();
        out.values.values_mut().for_each(|v| *v = f(*v));
        out
    }
}

impl MomentVector<LinExpr> {
    /// Symbolic vector: `y_∅ = 1`, every other stored entry is its own
    /// moment variable.
    pub fn symbolic(n: usize, bound: usize, domain: Domain) -> Result<Self> {
        Self::from_fn(n, bound, domain, LinExpr::moment)
    }
}

/// Symmetric matrix with one stored triangle and a (multi)set of row labels.
#[derive(Clone, Debug, PartialEq)]
pub struct SymMatrix<V = f64> {
    labels: Vec<VertexSet>,
    // packed lower triangle, row-major: (i, j) with j <= i at i(i+1)/2 + j
    data: Vec<V>,
}

impl<V: MomentValue> SymMatrix<V> {
    pub fn zeros(labels: Vec<VertexSet>) -> Self {
        let k = labels.len();
        SymMatrix { labels, data: vec![V::zero(); k * (k + 1) / 2] }
    }

    pub fn order(&self) -> usize {
        self.labels.len()
    }

    pub fn labels(&self) -> &[VertexSet] {
        &self.labels
    }

    fn idx(i: usize, j: usize) -> usize {
        let (r, c) = if i >= j { (i, j) } else { (j, i) };
        r * (r + 1) / 2 + c
    }

    pub fn get(&self, i: usize, j: usize) -> &V {
        &self.data[Self::idx(i, j)]
    }

    pub fn set(&mut self, i: usize, j: usize, v: V) {
        let k = Self::idx(i, j);
        self.data[k] = v;
    }

    pub fn entry_mut(&mut self, i: usize, j: usize) -> &mut V {
        let k = Self::idx(i, j);
        &mut self.data[k]
    }

    /// `self += factor · other` (labels of `self` are kept).
    pub fn add_scaled(&mut self, other: &SymMatrix<V>, factor: f64) {
        assert_eq!(self.order(), other.order());
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            a.add_scaled(b, factor);
        }
    }

    /// Principal submatrix on the given row indices.
    pub fn principal(&self, rows: &[usize]) -> SymMatrix<V> {
        let labels = rows.iter().map(|&r| self.labels[r]).collect();
        let mut out = SymMatrix::zeros(labels);
        for (a, &ra) in rows.iter().enumerate() {
            for (b, &rb) in rows.iter().enumerate().take(a + 1) {
                out.set(a, b, self.get(ra, rb).clone());
            }
        }
        out
    }
}

impl SymMatrix<f64> {
    pub fn to_mat(&self) -> Mat<f64> {
        let k = self.order();
        Mat::from_fn(k, k, |i, j| *self.get(i, j))
    }
}

/// `ζ_x`: `y_I = Π_{i∈I} x_i` for all `|I| <= bound`.
pub fn zeta_lift(x: &[u8], bound: usize) -> Result<MomentVector<f64>> {
    if let Some(bad) = x.iter().find(|&&v| v > 1) {
        return Err(Error::Argument(format!("zeta lift needs a 0/1 vector, found entry {bad}")));
    }
    let support: VertexSet = x.iter().enumerate().filter(|(_, &v)| v == 1).map(|(i, _)| i).collect();
    MomentVector::from_fn(x.len(), bound, Domain::AllSubsets, |s| if s.is_subset_of(support) { 1.0 } else { 0.0 })
}

/// Row labels `S, S∪{0}, .., S∪{n-1}` of `A_S(y)`.
fn block_labels(n: usize, s: VertexSet) -> Vec<VertexSet> {
    std::iter::once(s).chain((0..n).map(|i| s.with(i))).collect()
}

/// `A_S(y)`: order `n+1`, entries `y_S`, `y_{S∪i}`, `y_{S∪{i,j}}`.
pub fn block_a_s<V: MomentValue>(y: &MomentVector<V>, s: VertexSet) -> Result<SymMatrix<V>> {
    y.require_bound(s.len() + 2, "A_S(y)")?;
    let labels = block_labels(y.n(), s);
    let mut m = SymMatrix::zeros(labels);
    for p in 0..=y.n() {
        for q in 0..=p {
            let set = match (p, q) {
                (0, 0) => s,
                (p, 0) => s.with(p - 1),
                (p, q) => s.with(p - 1).with(q - 1),
            };
            m.set(p, q, y.at(set));
        }
    }
    Ok(m)
}

/// `A(S,T)(y) = Σ_{S ⊆ S' ⊆ T} (-1)^{|S'∖S|} A_{S'}(y)`, summed in canonical
/// order of `S'`.
pub fn block_a_st<V: MomentValue>(y: &MomentVector<V>, s: VertexSet, t: VertexSet) -> Result<SymMatrix<V>> {
    if !s.is_subset_of(t) {
        return Err(Error::Argument(format!("A(S,T) needs S ⊆ T, got S = {s}, T = {t}")));
    }
    y.require_bound(t.len() + 2, "A(S,T)(y)")?;
    let n = y.n();
    let terms: Vec<(VertexSet, f64)> = s
        .supersets_within(t)
        .into_iter()
        .map(|sp| (sp, if sp.difference(s).len() % 2 == 0 { 1.0 } else { -1.0 }))
        .collect();
    let mut m = SymMatrix::zeros(block_labels(n, s));
    for p in 0..=n {
        for q in 0..=p {
            let extra = match (p, q) {
                (0, 0) => VertexSet::EMPTY,
                (p, 0) => VertexSet::singleton(p - 1),
                (p, q) => VertexSet::pair(p - 1, q - 1),
            };
            let entry: &mut V = m.entry_mut(p, q);
            for &(sp, sign) in &terms {
                entry.add_scaled(&y.at(sp.union(extra)), sign);
            }
        }
    }
    Ok(m)
}

/// `M(T;y)`: rows indexed by the multiset `∪_{S⊆T} A_S`, with block
/// `(S, S')` equal to `A_{S∪S'}(y)`. Repeated labels are kept.
pub fn assemble_m_t<V: MomentValue>(y: &MomentVector<V>, t: VertexSet) -> Result<SymMatrix<V>> {
    y.require_bound(t.len() + 2, "M(T;y)")?;
    let n = y.n();
    let subs = t.subsets();
    let blocks: HashMap<VertexSet, SymMatrix<V>> =
        subs.iter().map(|&s| Ok((s, block_a_s(y, s)?))).collect::<Result<_>>()?;
    let mut cache: HashMap<VertexSet, SymMatrix<V>> = blocks;
    for &a in &subs {
        for &b in &subs {
            let u = a.union(b);
            if !cache.contains_key(&u) {
                cache.insert(u, block_a_s(y, u)?);
            }
        }
    }
    let labels: Vec<VertexSet> = subs.iter().flat_map(|&s| block_labels(n, s)).collect();
    let k = n + 1;
    let mut m = SymMatrix::zeros(labels);
    for (bi, &a) in subs.iter().enumerate() {
        for (bj, &b) in subs.iter().enumerate().take(bi + 1) {
            let blk = &cache[&a.union(b)];
            for p in 0..k {
                for q in 0..k {
                    let (r, c) = (bi * k + p, bj * k + q);
                    if c <= r {
                        m.set(r, c, blk.get(p, q).clone());
                    }
                }
            }
        }
    }
    Ok(m)
}

/// `M_t(y) = (y_{I∪J})` over `P_t(V)` in canonical order.
pub fn moment_matrix<V: MomentValue>(y: &MomentVector<V>, t: usize) -> Result<SymMatrix<V>> {
    // unions never exceed n elements
    y.require_bound((2 * t).min(y.n()), "M_t(y)")?;
    let index = enumerate_subsets(y.n(), t)?;
    let mut m = SymMatrix::zeros(index.clone());
    for (i, &a) in index.iter().enumerate() {
        for (j, &b) in index.iter().enumerate().take(i + 1) {
            m.set(i, j, y.at(a.union(b)));
        }
    }
    Ok(m)
}

/// Moment matrix restricted to a given index family (e.g. stable sets).
pub fn moment_matrix_on<V: MomentValue>(y: &MomentVector<V>, index: &[VertexSet]) -> Result<SymMatrix<V>> {
    let needed = index
        .iter()
        .enumerate()
        .flat_map(|(i, &a)| index[..=i].iter().map(move |&b| a.union(b).len()))
        .max()
        .unwrap_or(0);
    y.require_bound(needed, "moment matrix")?;
    let mut m = SymMatrix::zeros(index.to_vec());
    for (i, &a) in index.iter().enumerate() {
        for (j, &b) in index.iter().enumerate().take(i + 1) {
            m.set(i, j, y.at(a.union(b)));
        }
    }
    Ok(m)
}

/// `(a·y)_I = a_0 y_I + Σ_i a_i y_{I∪i}`, on subsets of size `bound - 1`.
pub fn apply_linear<V: MomentValue>(a: &[f64], y: &MomentVector<V>) -> Result<MomentVector<V>> {
    let n = y.n();
    if a.len() != n + 1 {
        return Err(Error::Argument(format!("linear form has length {}, expected {}", a.len(), n + 1)));
    }
    if y.bound() == 0 {
        return Err(Error::Domain("a·y needs a moment vector with bound >= 1".into()));
    }
    MomentVector::from_fn(n, y.bound() - 1, y.domain().clone(), |s| {
        let mut v = V::zero();
        v.add_scaled(&y.at(s), a[0]);
        for (i, &ai) in a[1..].iter().enumerate() {
            if ai != 0.0 {
                v.add_scaled(&y.at(s.with(i)), ai);
            }
        }
        v
    })
}

/// `Σ_{S ⊆ S' ⊆ V} (-1)^{|S'∖S|} y_{S'}` on a vector over all of `P(V)`.
pub fn alternating_sum(y: &MomentVector<f64>, s: VertexSet) -> Result<f64> {
    if y.bound() != y.n() {
        return Err(Error::Domain(format!(
            "alternating sum needs moments over all of P(V) (bound {} != n {})",
            y.bound(),
            y.n()
        )));
    }
    let all: VertexSet = (0..y.n()).collect();
    let mut acc = 0.0;
    for sp in s.supersets_within(all) {
        let sign = if sp.difference(s).len() % 2 == 0 { 1.0 } else { -1.0 };
        acc += sign * y.at(sp);
    }
    Ok(acc)
}

/// The block matrix `Z` of the block-diagonalization: rows and columns are
/// indexed by `S ⊆ T` (canonical order), block `(S, S')` is the identity of
/// order `n+1` when `S ⊆ S'` and zero otherwise. `M(T;y) = Z D Zᵀ` with `D`
/// the block diagonal of the `A(S,T)(y)`.
pub fn inclusion_factor(n: usize, t: VertexSet) -> Mat<f64> {
    let subs = t.subsets();
    let k = n + 1;
    let dim = subs.len() * k;
    Mat::from_fn(dim, dim, |r, c| {
        let (a, b) = (subs[r / k], subs[c / k]);
        if r % k == c % k && a.is_subset_of(b) {
            1.0
        } else {
            0.0
        }
    })
}

/// `diag(A(S,T)(y))` over `S ⊆ T` in canonical order.
pub fn block_diagonal(y: &MomentVector<f64>, t: VertexSet) -> Result<Mat<f64>> {
    let subs = t.subsets();
    let k = y.n() + 1;
    let mut d = Mat::zeros(subs.len() * k, subs.len() * k);
    for (b, &s) in subs.iter().enumerate() {
        let blk = block_a_st(y, s, t)?;
        for p in 0..k {
            for q in 0..k {
                d.write(b * k + p, b * k + q, *blk.get(p, q));
            }
        }
    }
    Ok(d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::min_eigenvalue;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn set(v: &[usize]) -> VertexSet {
        v.iter().copied().collect()
    }

    fn random_y(n: usize, bound: usize, rng: &mut ChaCha8Rng) -> MomentVector<f64> {
        MomentVector::from_fn(n, bound, Domain::AllSubsets, |_| rng.gen_range(-1.0..1.0)).unwrap()
    }

    #[test]
    fn zeta_examples() {
        let y = zeta_lift(&[0, 1, 0, 1], 2).unwrap();
        for k in y.keys() {
            let expect = [set(&[]), set(&[1]), set(&[3]), set(&[1, 3])].contains(&k);
            assert_eq!(y.get(k).unwrap(), if expect { 1.0 } else { 0.0 }, "{k}");
        }
        let z = zeta_lift(&[0, 0, 0], 3).unwrap();
        assert_eq!(z.keys().iter().filter(|&&k| z.get(k).unwrap() != 0.0).count(), 1);
        let o = zeta_lift(&[1, 1, 1], 3).unwrap();
        assert_eq!(o.keys().len(), 8);
        assert!(o.keys().iter().all(|&k| o.get(k).unwrap() == 1.0));
        assert!(zeta_lift(&[2], 1).is_err());
    }

    #[test]
    fn a_empty_is_first_moment_matrix() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let y = random_y(4, 3, &mut rng);
        let a = block_a_s(&y, VertexSet::EMPTY).unwrap();
        let m1 = moment_matrix(&y, 1).unwrap();
        assert_eq!(a.to_mat(), m1.to_mat());
        let mt = assemble_m_t(&y, VertexSet::EMPTY).unwrap();
        assert_eq!(mt.to_mat(), m1.to_mat());
    }

    #[test]
    fn a_s_on_a_lift() {
        // x = (0, 1), S = {1}: labels {1}, {0,1}, {1}
        let y = zeta_lift(&[0, 1], 3).unwrap();
        let a = block_a_s(&y, set(&[1])).unwrap();
        assert_eq!(a.labels(), &[set(&[1]), set(&[0, 1]), set(&[1])]);
        assert_eq!(*a.get(0, 0), 1.0);
        assert_eq!(*a.get(0, 2), 1.0);
        assert_eq!(*a.get(2, 2), 1.0);
        assert_eq!(*a.get(1, 1), 0.0);
        assert_eq!(*a.get(0, 1), 0.0);
        assert_eq!(*a.get(1, 2), 0.0);
    }

    #[test]
    fn a_s_scales_on_lifts() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..50 {
            let n = rng.gen_range(2..=6);
            let x: Vec<u8> = (0..n).map(|_| rng.gen_range(0..=1)).collect();
            let y = zeta_lift(&x, n).unwrap();
            let s: VertexSet = (0..n).filter(|_| rng.gen_bool(0.3)).take(n - 2).collect();
            let prod: f64 = s.iter().map(|i| x[i] as f64).product();
            let a = block_a_s(&y, s).unwrap();
            let a0 = block_a_s(&y, VertexSet::EMPTY).unwrap();
            for p in 0..=n {
                for q in 0..=p {
                    assert_eq!(*a.get(p, q), prod * a0.get(p, q));
                }
            }
        }
    }

    #[test]
    fn a_st_special_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let y = random_y(5, 4, &mut rng);
        let t = set(&[1, 2]);
        assert_eq!(block_a_st(&y, t, t).unwrap(), block_a_s(&y, t).unwrap());
        let mut expect = block_a_s(&y, VertexSet::EMPTY).unwrap();
        expect.add_scaled(&block_a_s(&y, set(&[1])).unwrap(), -1.0);
        expect.add_scaled(&block_a_s(&y, set(&[2])).unwrap(), -1.0);
        expect.add_scaled(&block_a_s(&y, set(&[1, 2])).unwrap(), 1.0);
        let got = block_a_st(&y, VertexSet::EMPTY, t).unwrap();
        for p in 0..6 {
            for q in 0..=p {
                assert!((got.get(p, q) - expect.get(p, q)).abs() < 1e-14);
            }
        }
        assert!(block_a_st(&y, set(&[3]), t).is_err());
        assert!(block_a_st(&y, VertexSet::EMPTY, set(&[0, 1, 2])).is_err());
    }

    #[test]
    fn a_st_factorises_on_lifts() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..200 {
            let n = rng.gen_range(2..=8);
            let x: Vec<u8> = (0..n).map(|_| rng.gen_range(0..=1)).collect();
            let y = zeta_lift(&x, n).unwrap();
            let tmax = (n - 2).min(4);
            let t: VertexSet = (0..n).filter(|_| rng.gen_bool(0.5)).take(tmax).collect();
            let s: VertexSet = t.iter().filter(|_| rng.gen_bool(0.5)).collect();
            let weight: f64 = s.iter().map(|i| x[i] as f64).product::<f64>()
                * t.difference(s).iter().map(|i| 1.0 - x[i] as f64).product::<f64>();
            let a = block_a_st(&y, s, t).unwrap();
            let a0 = block_a_s(&y, VertexSet::EMPTY).unwrap();
            for p in 0..=n {
                for q in 0..=p {
                    assert_eq!(*a.get(p, q), weight * a0.get(p, q));
                }
            }
        }
    }

    #[test]
    fn m_t_layout_matches_blocks() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let y = random_y(4, 4, &mut rng);
        let t = set(&[1, 2]);
        let m = assemble_m_t(&y, t).unwrap();
        assert_eq!(m.order(), 4 * 5);
        let subs = t.subsets();
        assert_eq!(subs, vec![set(&[]), set(&[1]), set(&[2]), set(&[1, 2])]);
        for (bi, &a) in subs.iter().enumerate() {
            for (bj, &b) in subs.iter().enumerate() {
                let blk = block_a_s(&y, a.union(b)).unwrap();
                for p in 0..5 {
                    for q in 0..5 {
                        assert_eq!(m.get(bi * 5 + p, bj * 5 + q), blk.get(p, q));
                    }
                }
            }
        }
    }

    #[test]
    fn factorization_residual() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..60 {
            let n = rng.gen_range(3..=6);
            let tsize = rng.gen_range(0..=3.min(n - 1));
            let y = random_y(n, tsize + 2, &mut rng);
            let t: VertexSet = (0..n).rev().take(tsize).collect();
            let m = assemble_m_t(&y, t).unwrap().to_mat();
            let z = inclusion_factor(n, t);
            let d = block_diagonal(&y, t).unwrap();
            let zdz = &z * &d * z.transpose();
            let mut worst: f64 = 0.0;
            for i in 0..m.nrows() {
                for j in 0..m.ncols() {
                    worst = worst.max((m.read(i, j) - zdz.read(i, j)).abs());
                }
            }
            assert!(worst <= 1e-12, "residual {worst}");
        }
    }

    #[test]
    fn moment_matrix_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let y = random_y(3, 2, &mut rng);
        let m0 = moment_matrix(&y, 0).unwrap();
        assert_eq!(m0.order(), 1);
        assert_eq!(*m0.get(0, 0), y.get(VertexSet::EMPTY).unwrap());
        assert!(moment_matrix(&y, 2).is_err());
        let x = [1u8, 0, 1, 1];
        let z = zeta_lift(&x, 4).unwrap();
        let m2 = moment_matrix(&z, 2).unwrap();
        let v: Vec<f64> = m2.labels().iter().map(|s| s.iter().map(|i| x[i] as f64).product()).collect();
        for i in 0..m2.order() {
            for j in 0..m2.order() {
                assert_eq!(*m2.get(i, j), v[i] * v[j]);
            }
        }
        assert!(min_eigenvalue(&m2.to_mat()) > -1e-12);
    }

    #[test]
    fn apply_linear_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let y = random_y(3, 3, &mut rng);
        let mut e1 = vec![0.0; 4];
        e1[2] = 1.0;
        let ay = apply_linear(&e1, &y).unwrap();
        assert_eq!(ay.bound(), 2);
        for k in ay.keys() {
            assert_eq!(ay.get(k).unwrap(), y.get(k.with(1)).unwrap());
        }
        let z = zeta_lift(&[0, 0, 0], 2).unwrap();
        let edge = [1.0, -1.0, -1.0, 0.0];
        assert_eq!(apply_linear(&edge, &z).unwrap().get(VertexSet::EMPTY).unwrap(), 1.0);
        for _ in 0..50 {
            let n = rng.gen_range(1..=6);
            let x: Vec<u8> = (0..n).map(|_| rng.gen_range(0..=1)).collect();
            let a: Vec<f64> = (0..=n).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let y = zeta_lift(&x, n).unwrap();
            let ay = apply_linear(&a, &y).unwrap();
            let ax = a[0] + (0..n).map(|i| a[i + 1] * x[i] as f64).sum::<f64>();
            for k in ay.keys() {
                let prod: f64 = k.iter().map(|i| x[i] as f64).product();
                assert!((ay.get(k).unwrap() - ax * prod).abs() <= 1e-14);
            }
        }
    }

    #[test]
    fn alternating_sum_examples() {
        let y = MomentVector::from_fn(2, 2, Domain::AllSubsets, |s| match s.bits() {
            0 | 1 | 2 => 1.0,
            _ => 0.0,
        })
        .unwrap();
        assert_eq!(alternating_sum(&y, VertexSet::EMPTY).unwrap(), -1.0);
        let w = [1u8, 0, 1];
        let z = zeta_lift(&w, 3).unwrap();
        for s in enumerate_subsets(3, 3).unwrap() {
            let expect = if s == set(&[0, 2]) { 1.0 } else { 0.0 };
            assert_eq!(alternating_sum(&z, s).unwrap(), expect);
        }
        assert!(alternating_sum(&zeta_lift(&w, 2).unwrap(), VertexSet::EMPTY).is_err());
    }

    #[test]
    fn stable_only_reads_zero_off_domain() {
        let g = Arc::new(Graph::new(3, [(0, 1)]).unwrap());
        let y = MomentVector::from_fn(3, 2, Domain::StableOnly(g), |_| 1.0).unwrap();
        assert_eq!(y.get(set(&[0, 1])).unwrap(), 0.0);
        assert_eq!(y.get(set(&[0, 2])).unwrap(), 1.0);
        assert!(y.get(set(&[0, 1, 2])).is_err());
        assert_eq!(y.keys().len(), 1 + 3 + 2);
    }

    #[test]
    fn symbolic_and_numeric_paths_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut y = random_y(4, 4, &mut rng);
        y.set(VertexSet::EMPTY, 1.0).unwrap();
        let sym = MomentVector::<LinExpr>::symbolic(4, 4, Domain::AllSubsets).unwrap();
        let (s, t) = (set(&[2]), set(&[2, 3]));
        let a_num = block_a_st(&y, s, t).unwrap();
        let a_sym = block_a_st(&sym, s, t).unwrap();
        for p in 0..5 {
            for q in 0..=p {
                let v = a_sym.get(p, q).eval(|v| match v {
                    crate::linexpr::Var::Moment(k) => y.get(k).unwrap(),
                    _ => unreachable!(),
                });
                assert!((v - a_num.get(p, q)).abs() < 1e-14);
            }
        }
    }
}
