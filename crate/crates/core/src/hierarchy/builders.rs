use std::sync::Arc;

use serde::Serialize;

use super::cone::{fr_cone, PolyhedralCone};
use super::presolve::{compile, Emitted, SymbolicModel};
use crate::error::{Error, Result};
use crate::graphs::{stable_subsets_capped, subsets_exact, Graph, VertexSet};
use crate::linexpr::{LinExpr, Var};
use crate::moment::{apply_linear, block_a_st, moment_matrix, Domain, MomentVector, SymMatrix};
use crate::sdpsolve::{solve, BlockKind, BlockSdp, SolveOptions, SolveResult};

/// Upper limit on symbolic variables created by a builder before presolve.
pub const BUILD_VAR_CAP: usize = 40_000;
/// Largest `n` for Lasserre levels `t >= 2`.
pub const LASSERRE_MAX_N: usize = 16;
/// Largest `n` for [`build_nplus_th`].
pub const NPLUS_TH_MAX_N: usize = 20;
/// Largest `n` and `t` for [`build_nplus_explicit`].
pub const NPLUS_EXPLICIT_MAX_N: usize = 8;
pub const NPLUS_EXPLICIT_MAX_T: usize = 2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Hierarchy {
    #[serde(rename = "theta")]
    Theta,
    #[serde(rename = "l")]
    Lt,
    #[serde(rename = "tildel")]
    TildeLt,
    #[serde(rename = "lasserre")]
    Lasserre,
    #[serde(rename = "nplus")]
    NplusExplicit,
    #[serde(rename = "nplus-th")]
    NplusTh,
}

impl Hierarchy {
    pub const ALL: [Hierarchy; 6] = [
        Hierarchy::Theta,
        Hierarchy::Lt,
        Hierarchy::TildeLt,
        Hierarchy::Lasserre,
        Hierarchy::NplusExplicit,
        Hierarchy::NplusTh,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            Hierarchy::Theta => "theta",
            Hierarchy::Lt => "l",
            Hierarchy::TildeLt => "tildel",
            Hierarchy::Lasserre => "lasserre",
            Hierarchy::NplusExplicit => "nplus",
            Hierarchy::NplusTh => "nplus-th",
        }
    }

    pub fn from_tag(s: &str) -> Option<Hierarchy> {
        Hierarchy::ALL.into_iter().find(|h| h.tag() == s)
    }
}

impl std::fmt::Display for Hierarchy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.tag())
    }
}

/// A compiled relaxation: maximizing `sdp` and adding `objective_constant`
/// gives the bound.
#[derive(Clone, Debug)]
pub struct RelaxationInstance {
    pub sdp: BlockSdp,
    /// Label of each free variable.
    pub labels: Vec<Var>,
    pub hierarchy: Hierarchy,
    pub n: usize,
    pub t: usize,
    pub nonneg: bool,
    pub objective_constant: f64,
    pub emitted: Emitted,
}

/// Size of a compiled instance.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct InstanceStats {
    pub variables: usize,
    pub psd_blocks: usize,
    /// `(order, count)`, descending order.
    pub block_orders: Vec<(usize, usize)>,
    pub scalar_constraints: usize,
}

impl RelaxationInstance {
    pub fn stats(&self) -> InstanceStats {
        let mut orders: std::collections::BTreeMap<usize, usize> = Default::default();
        let mut scalars = 0;
        for b in &self.sdp.blocks {
            match b.kind {
                BlockKind::Dense => *orders.entry(b.order).or_default() += 1,
                BlockKind::Diagonal => scalars += b.order,
            }
        }
        InstanceStats {
            variables: self.sdp.num_vars,
            psd_blocks: orders.values().sum(),
            block_orders: orders.into_iter().rev().collect(),
            scalar_constraints: scalars,
        }
    }

    /// Bound implied by a solve of `self.sdp`.
    pub fn bound(&self, r: &SolveResult) -> f64 {
        r.objective + self.objective_constant
    }

    pub fn solve(&self, opts: &SolveOptions) -> Result<(f64, SolveResult)> {
        let r = solve(&self.sdp, opts)?;
        Ok((self.bound(&r), r))
    }
}

fn singleton_objective(n: usize) -> LinExpr {
    let mut obj = LinExpr::zero();
    for i in 0..n {
        obj.add_scaled(&LinExpr::moment(VertexSet::singleton(i)), 1.0);
    }
    obj
}

fn finish(model: SymbolicModel, hierarchy: Hierarchy, n: usize, t: usize, nonneg: bool) -> Result<RelaxationInstance> {
    let c = compile(model)?;
    Ok(RelaxationInstance {
        sdp: c.sdp,
        labels: c.labels,
        hierarchy,
        n,
        t,
        nonneg,
        objective_constant: c.objective_constant,
        emitted: c.emitted,
    })
}

fn stable_domain(g: &Graph, bound: usize) -> Result<(Domain, Vec<VertexSet>)> {
    let sets = stable_subsets_capped(g, bound, BUILD_VAR_CAP).ok_or_else(|| {
        Error::Capacity(format!(
            "more than {BUILD_VAR_CAP} stable sets of size <= {bound}; instance exceeds desk scale"
        ))
    })?;
    Ok((Domain::StableOnly(Arc::new(g.clone())), sets))
}

fn check_all_subsets(n: usize, bound: usize) -> Result<()> {
    if crate::graphs::binomial_prefix_sum(n, bound) > BUILD_VAR_CAP as u128 {
        return Err(Error::Capacity(format!(
            "{} moment variables (n = {n}, size <= {bound}) exceed the builder cap {BUILD_VAR_CAP}",
            crate::graphs::binomial_prefix_sum(n, bound)
        )));
    }
    Ok(())
}

fn nonneg_scalars(sets: &[VertexSet]) -> Vec<LinExpr> {
    sets.iter().filter(|s| !s.is_empty()).map(|&s| LinExpr::moment(s)).collect()
}

/// Theta body: `M_1(y) ⪰ 0` over stable moments (`y_ij = 0` on edges).
pub fn build_theta(g: &Graph) -> Result<RelaxationInstance> {
    theta_with(g, false, Hierarchy::Theta)
}

fn theta_with(g: &Graph, nonneg: bool, hierarchy: Hierarchy) -> Result<RelaxationInstance> {
    let (domain, sets) = stable_domain(g, 2)?;
    let y = MomentVector::<LinExpr>::symbolic(g.n(), 2, domain)?;
    let model = SymbolicModel {
        blocks: vec![moment_matrix(&y, 1)?],
        scalars: if nonneg { nonneg_scalars(&sets) } else { Vec::new() },
        equalities: Vec::new(),
        objective: singleton_objective(g.n()),
    };
    finish(model, hierarchy, g.n(), 1, nonneg)
}

/// Blocks `A(S,T)(y)` for every `T` of size `t-1` and `S ⊆ T`, in canonical
/// `T` order, built concurrently.
fn ast_blocks(y: &MomentVector<LinExpr>, t: usize, skip_s: impl Fn(VertexSet) -> bool + Sync) -> Result<Vec<SymMatrix<LinExpr>>> {
    let ts = subsets_exact(y.n(), t - 1)?;
    let per_t: Vec<Result<Vec<SymMatrix<LinExpr>>>> = crate::par::map(&ts, |&tset| {
        tset.subsets()
            .into_iter()
            .filter(|&s| !skip_s(s))
            .map(|s| block_a_st(y, s, tset))
            .collect()
    });
    let mut out = Vec::new();
    for r in per_t {
        out.extend(r?);
    }
    Ok(out)
}

/// `L^t(G)`: blocks `A(S,T)(y)` over stable moments of size `<= t+1`; with
/// `nonneg`, also `y_I >= 0` for every variable. `t = 1` is the theta body.
pub fn build_lt_graph(g: &Graph, t: usize, nonneg: bool) -> Result<RelaxationInstance> {
    if t == 0 {
        return Err(Error::InvalidParameter("level t must be at least 1".into()));
    }
    if t == 1 {
        return theta_with(g, nonneg, Hierarchy::Lt);
    }
    let (domain, sets) = stable_domain(g, t + 1)?;
    let y = MomentVector::<LinExpr>::symbolic(g.n(), t + 1, domain)?;
    let blocks = ast_blocks(&y, t, |s| !g.is_stable(s))?;
    let model = SymbolicModel {
        blocks,
        scalars: if nonneg { nonneg_scalars(&sets) } else { Vec::new() },
        equalities: Vec::new(),
        objective: singleton_objective(g.n()),
    };
    finish(model, Hierarchy::Lt, g.n(), t, nonneg)
}

/// `L^t(G)` over all subsets with the edge equalities `y_ij = 0` stated
/// explicitly instead of eliminating non-stable moments up front.
pub fn build_lt_graph_with_edge_equalities(g: &Graph, t: usize) -> Result<RelaxationInstance> {
    if t < 2 {
        return Err(Error::InvalidParameter("explicit edge-equality variant needs t >= 2".into()));
    }
    check_all_subsets(g.n(), t + 1)?;
    let y = MomentVector::<LinExpr>::symbolic(g.n(), t + 1, Domain::AllSubsets)?;
    let blocks = ast_blocks(&y, t, |_| false)?;
    let equalities = g.edges().iter().map(|&(i, j)| LinExpr::moment(VertexSet::pair(i, j))).collect();
    let model = SymbolicModel { blocks, scalars: Vec::new(), equalities, objective: singleton_objective(g.n()) };
    finish(model, Hierarchy::Lt, g.n(), t, false)
}

/// Lasserre level `t` of the cone: `M_t(y) ⪰ 0` and `M_{t-1}(a_l y) ⪰ 0`.
/// With `graph`, moments indexed by non-stable sets are eliminated; this is
/// only accepted for `t >= 2`, where the edge equalities are implied by the
/// localizing matrices of the edge rows.
pub fn build_lasserre(k: &PolyhedralCone, t: usize, graph: Option<&Graph>) -> Result<RelaxationInstance> {
    let n = k.n();
    if t == 0 {
        return Err(Error::InvalidParameter("level t must be at least 1".into()));
    }
    if t >= 2 && n > LASSERRE_MAX_N {
        return Err(Error::Capacity(format!("Lasserre level {t} is limited to n <= {LASSERRE_MAX_N}, got {n}")));
    }
    let domain = match graph {
        Some(g) => {
            if t < 2 {
                return Err(Error::InvalidParameter("the edge-simplified Lasserre variant needs t >= 2".into()));
            }
            if g.n() != n {
                return Err(Error::Argument(format!("graph has {} vertices, cone has {n}", g.n())));
            }
            stable_domain(g, 2 * t)?.0
        }
        None => {
            check_all_subsets(n, 2 * t)?;
            Domain::AllSubsets
        }
    };
    let y = MomentVector::<LinExpr>::symbolic(n, 2 * t, domain)?;
    let mut blocks = vec![moment_matrix(&y, t)?];
    let localizing: Vec<Result<SymMatrix<LinExpr>>> =
        crate::par::map(k.rows(), |a| moment_matrix(&apply_linear(a, &y)?, t - 1));
    for b in localizing {
        blocks.push(b?);
    }
    let model = SymbolicModel { blocks, scalars: Vec::new(), equalities: Vec::new(), objective: singleton_objective(n) };
    finish(model, Hierarchy::Lasserre, n, t, false)
}

/// `a_lᵀ A e_i` and `a_lᵀ A (e_0 − e_i)` for every row and `i`.
fn membership_scalars(a_mat: &SymMatrix<LinExpr>, k: &PolyhedralCone, out: &mut Vec<LinExpr>) {
    let n = k.n();
    for i in 1..=n {
        for a in k.rows() {
            let mut col_i = LinExpr::zero();
            let mut col_0 = LinExpr::zero();
            for (p, &ap) in a.iter().enumerate() {
                if ap != 0.0 {
                    col_i.add_scaled(a_mat.get(p, i), ap);
                    col_0.add_scaled(a_mat.get(p, 0), ap);
                }
            }
            let mut rest = col_0;
            rest.add_scaled(&col_i, -1.0);
            out.push(col_i);
            out.push(rest);
        }
    }
}

/// `L̃^t(K)`: blocks `A(S,T)(y)` over all moments of size `<= t+1`, and the
/// conditions `A(S,T)(y) e_i ∈ K`, `A(S,T)(y)(e_0 − e_i) ∈ K`.
pub fn build_tilde_lt(k: &PolyhedralCone, t: usize) -> Result<RelaxationInstance> {
    if t == 0 {
        return Err(Error::InvalidParameter("level t must be at least 1".into()));
    }
    let n = k.n();
    check_all_subsets(n, t + 1)?;
    let y = MomentVector::<LinExpr>::symbolic(n, t + 1, Domain::AllSubsets)?;
    let blocks = ast_blocks(&y, t, |_| false)?;
    let mut scalars = Vec::new();
    for b in &blocks {
        membership_scalars(b, k, &mut scalars);
    }
    let model = SymbolicModel { blocks, scalars, equalities: Vec::new(), objective: singleton_objective(n) };
    finish(model, Hierarchy::TildeLt, n, t, false)
}

/// Matrix of `M_{+,V}` whose first column is `col0`; every off-diagonal
/// entry outside row/column 0 is a fresh variable unless `zero(p, q)`.
fn linked_matrix(id: u32, col0: &[LinExpr], zero: impl Fn(usize, usize) -> bool) -> SymMatrix<LinExpr> {
    let k = col0.len();
    let mut m = SymMatrix::zeros(vec![VertexSet::EMPTY; k]);
    for p in 0..k {
        m.set(p, 0, col0[p].clone());
        if p > 0 {
            m.set(p, p, col0[p].clone());
        }
        for q in 1..p {
            if !zero(p, q) {
                m.set(p, q, LinExpr::var(Var::Entry { matrix: id, row: p as u32, col: q as u32 }));
            }
        }
    }
    m
}

fn column(m: &SymMatrix<LinExpr>, c: usize) -> Vec<LinExpr> {
    (0..m.order()).map(|p| m.get(p, c).clone()).collect()
}

fn column_diff(m: &SymMatrix<LinExpr>, i: usize) -> Vec<LinExpr> {
    (0..m.order())
        .map(|p| {
            let mut e = m.get(p, 0).clone();
            e.add_scaled(m.get(p, i), -1.0);
            e
        })
        .collect()
}

// Sets column `i` equal to column 0 (the `σ = +1` degeneracy).
fn copy_first_column(m: &mut SymMatrix<LinExpr>, i: usize) {
    for p in 0..m.order() {
        let v = m.get(p, 0).clone();
        m.set(p.max(i), p.min(i), v);
    }
}

/// `N_+(TH(G))`: `Y = M_1(y)` and, per vertex `i`, matrices `Y^i`, `Z^i` of
/// `M_{+,V}` with zero edge entries and first columns `Y e_i`,
/// `Y (e_0 − e_i)`.
pub fn build_nplus_th(g: &Graph) -> Result<RelaxationInstance> {
    let n = g.n();
    if n > NPLUS_TH_MAX_N {
        return Err(Error::Capacity(format!("N+(TH(G)) is limited to n <= {NPLUS_TH_MAX_N}, got {n}")));
    }
    let (domain, _) = stable_domain(g, 2)?;
    let y = MomentVector::<LinExpr>::symbolic(n, 2, domain)?;
    let big_y = moment_matrix(&y, 1)?;
    let edge = |p: usize, q: usize| g.adjacent(p - 1, q - 1);
    let mut blocks = vec![big_y.clone()];
    for i in 0..n {
        let mut yi = linked_matrix(1 + 2 * i as u32, &column(&big_y, i + 1), edge);
        copy_first_column(&mut yi, i + 1);
        let zi = linked_matrix(2 + 2 * i as u32, &column_diff(&big_y, i + 1), edge);
        blocks.push(yi);
        blocks.push(zi);
    }
    let model = SymbolicModel { blocks, scalars: Vec::new(), equalities: Vec::new(), objective: singleton_objective(n) };
    finish(model, Hierarchy::NplusTh, n, 1, false)
}

/// Explicit `N_+^t(K)` formulation with matrices `Y^{σ_1..σ_s}_{i_1..i_s}`,
/// `s < t`, linked through their first columns, and the membership
/// conditions on the last level.
pub fn build_nplus_explicit(k: &PolyhedralCone, t: usize) -> Result<RelaxationInstance> {
    let n = k.n();
    if t == 0 {
        return Err(Error::InvalidParameter("level t must be at least 1".into()));
    }
    if t > NPLUS_EXPLICIT_MAX_T || n > NPLUS_EXPLICIT_MAX_N {
        return Err(Error::Capacity(format!(
            "explicit N+^t is limited to t <= {NPLUS_EXPLICIT_MAX_T}, n <= {NPLUS_EXPLICIT_MAX_N}; got t = {t}, n = {n}"
        )));
    }
    let y = MomentVector::<LinExpr>::symbolic(n, 2, Domain::AllSubsets)?;
    let root = moment_matrix(&y, 1)?;
    let mut blocks = vec![root];
    let mut level: Vec<usize> = vec![0];
    let mut next_id: u32 = 1;
    for _s in 1..t {
        let mut next = Vec::new();
        for &parent in &level {
            for i in 1..=n {
                let plus_col = column(&blocks[parent], i);
                let minus_col = column_diff(&blocks[parent], i);
                let mut plus = linked_matrix(next_id, &plus_col, |_, _| false);
                copy_first_column(&mut plus, i);
                let minus = linked_matrix(next_id + 1, &minus_col, |_, _| false);
                next_id += 2;
                blocks.push(plus);
                next.push(blocks.len() - 1);
                blocks.push(minus);
                next.push(blocks.len() - 1);
            }
        }
        level = next;
    }
    let mut scalars = Vec::new();
    for &b in &level {
        membership_scalars(&blocks[b], k, &mut scalars);
    }
    let model = SymbolicModel { blocks, scalars, equalities: Vec::new(), objective: singleton_objective(n) };
    finish(model, Hierarchy::NplusExplicit, n, t, false)
}

/// Builds `hierarchy` at level `t` for the stable set problem on `g`
/// (cone-based hierarchies use `FR(G)`).
pub fn build_for_graph(g: &Graph, hierarchy: Hierarchy, t: usize, nonneg: bool) -> Result<RelaxationInstance> {
    if nonneg && hierarchy != Hierarchy::Lt {
        return Err(Error::InvalidParameter("--nonneg applies to the l relaxation only".into()));
    }
    match hierarchy {
        Hierarchy::Theta => build_theta(g),
        Hierarchy::Lt => build_lt_graph(g, t, nonneg),
        Hierarchy::TildeLt => build_tilde_lt(&fr_cone(g), t),
        Hierarchy::Lasserre => build_lasserre(&fr_cone(g), t, (t >= 2).then_some(g)),
        Hierarchy::NplusExplicit => build_nplus_explicit(&fr_cone(g), t),
        Hierarchy::NplusTh => build_nplus_th(g),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graphs::paley;

    fn bound(inst: &RelaxationInstance) -> f64 {
        inst.solve(&SolveOptions::default()).unwrap().0
    }

    #[test]
    fn theta_of_c5_and_p13() {
        let c5 = Graph::cycle(5).unwrap();
        assert!((bound(&build_theta(&c5).unwrap()) - 5f64.sqrt()).abs() < 1e-6);
        let p13 = paley(13).unwrap();
        assert!((bound(&build_theta(&p13).unwrap()) - 13f64.sqrt()).abs() < 1e-6);
    }

    #[test]
    fn level_two_is_exact_on_c5() {
        let c5 = Graph::cycle(5).unwrap();
        let b = bound(&build_lt_graph(&c5, 2, false).unwrap());
        assert!((b - 2.0).abs() < 1e-5, "{b}");
    }

    #[test]
    fn small_hierarchies_bracket_alpha() {
        let c5 = Graph::cycle(5).unwrap();
        let theta = 5f64.sqrt();
        for h in Hierarchy::ALL {
            let inst = build_for_graph(&c5, h, 1, false).unwrap();
            let b = bound(&inst);
            // level-1 Lasserre on FR does not see y_ij = 0 and meets the LP bound
            let upper = if h == Hierarchy::Lasserre { 2.5 } else { theta };
            assert!(b >= 2.0 - 1e-6 && b <= upper + 1e-6, "{h}: {b}");
        }
    }

    #[test]
    fn emitted_sizes_match_counters() {
        let k = PolyhedralCone::cube(5);
        let m = k.rows().len() as u128;
        for t in 1..=3 {
            let inst = build_tilde_lt(&k, t).unwrap();
            let s = crate::hierarchy::formulation_stats(Hierarchy::TildeLt, 5, t);
            assert_eq!(inst.emitted.variables as u128 + 1, s.variables);
            assert_eq!(inst.emitted.psd_blocks as u128, s.matrices);
            assert_eq!(inst.emitted.scalars as u128, s.k_conditions * m);
        }
        let k = PolyhedralCone::cube(4);
        let m = k.rows().len() as u128;
        for t in 1..=2 {
            let inst = build_nplus_explicit(&k, t).unwrap();
            let s = crate::hierarchy::formulation_stats(Hierarchy::NplusExplicit, 4, t);
            assert_eq!(inst.emitted.psd_blocks as u128, s.matrices);
            assert_eq!(inst.emitted.scalars as u128, s.k_conditions * m);
        }
    }

    #[test]
    fn tags_round_trip() {
        for h in Hierarchy::ALL {
            assert_eq!(Hierarchy::from_tag(h.tag()), Some(h));
        }
        assert_eq!(Hierarchy::from_tag("x"), None);
    }

    #[test]
    fn capacity_is_reported() {
        let g = paley(61).unwrap();
        assert!(matches!(build_lasserre(&fr_cone(&g), 2, Some(&g)), Err(Error::Capacity(_))));
        assert!(matches!(build_nplus_th(&g), Err(Error::Capacity(_))));
        assert!(matches!(build_tilde_lt(&fr_cone(&g), 3), Err(Error::Capacity(_))));
    }
}
