//! Compiles a symbolic relaxation (PSD blocks, scalar inequalities and
//! equalities over [`LinExpr`]) into a numeric [`BlockSdp`].
//!
//! Reductions, all of which preserve the feasible set:
//! - equalities are eliminated by substitution;
//! - a scalar pair `e ≥ 0`, `−e ≥ 0` becomes the equality `e = 0`;
//! - a PSD row with identically zero diagonal forces its whole row to zero;
//! - a PSD row equal to another row is dropped (the difference of the two
//!   unit vectors lies in the kernel);
//! - constant, empty and duplicate constraints are dropped.

use std::collections::{BTreeSet, HashMap, HashSet};

use crate::error::{Error, Result};
use crate::linexpr::{LinExpr, Var};
use crate::moment::SymMatrix;
use crate::sdpsolve::{Block, BlockKind, BlockSdp};

const CONSTANT_TOL: f64 = 1e-9;

/// Symbolic model `max objective` s.t. blocks ⪰ 0, scalars ≥ 0,
/// equalities = 0.
#[derive(Clone, Debug, Default)]
pub struct SymbolicModel {
    pub blocks: Vec<SymMatrix<LinExpr>>,
    pub scalars: Vec<LinExpr>,
    pub equalities: Vec<LinExpr>,
    pub objective: LinExpr,
}

#[derive(Clone, Debug)]
pub struct Compiled {
    pub sdp: BlockSdp,
    /// Variable of each column of the compiled model.
    pub labels: Vec<Var>,
    /// Constant part of the objective after substitution.
    pub objective_constant: f64,
    /// Variables eliminated by substitution.
    pub eliminated: usize,
    /// Size of the symbolic model before any reduction.
    pub emitted: Emitted,
}

/// Counts of a symbolic model as the builder produced it.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, serde::Serialize)]
pub struct Emitted {
    /// Distinct variables, the normalized `y_∅` excluded.
    pub variables: usize,
    pub psd_blocks: usize,
    pub scalars: usize,
    pub equalities: usize,
}

impl SymbolicModel {
    pub fn emitted(&self) -> Emitted {
        let mut vars: HashSet<Var> = HashSet::new();
        for b in &self.blocks {
            for (_, _, e) in block_entries(b) {
                vars.extend(e.terms().iter().map(|t| t.0));
            }
        }
        for e in self.scalars.iter().chain(&self.equalities) {
            vars.extend(e.terms().iter().map(|t| t.0));
        }
        Emitted {
            variables: vars.len(),
            psd_blocks: self.blocks.len(),
            scalars: self.scalars.len(),
            equalities: self.equalities.len(),
        }
    }
}

fn block_entries(b: &SymMatrix<LinExpr>) -> impl Iterator<Item = (usize, usize, &LinExpr)> {
    (0..b.order()).flat_map(move |i| (0..=i).map(move |j| (i, j, b.get(i, j))))
}

fn substitute_block(b: &SymMatrix<LinExpr>, subs: &HashMap<Var, LinExpr>) -> SymMatrix<LinExpr> {
    let mut out = b.clone();
    for i in 0..b.order() {
        for j in 0..=i {
            let e = b.get(i, j);
            if e.terms().iter().any(|(v, _)| subs.contains_key(v)) {
                out.set(i, j, e.substitute(subs));
            }
        }
    }
    out
}

// Pivot for eliminating `e = 0`: among variables whose coefficient is at
// least half the largest, prefer non-singletons, then the largest variable.
fn pivot(e: &LinExpr) -> (Var, f64) {
    let maxc = e.terms().iter().fold(0.0f64, |m, t| m.max(t.1.abs()));
    *e.terms()
        .iter()
        .filter(|t| t.1.abs() >= 0.5 * maxc)
        .max_by_key(|t| (!t.0.is_singleton(), t.0))
        .expect("non-constant expression")
}

fn row_key(b: &SymMatrix<LinExpr>, i: usize) -> Vec<(u64, Vec<(Var, u64)>)> {
    (0..b.order()).map(|k| b.get(i, k).key()).collect()
}

fn is_psd_constant(b: &SymMatrix<LinExpr>) -> bool {
    let m = faer::Mat::from_fn(b.order(), b.order(), |i, j| b.get(i, j).constant_part());
    crate::linalg::min_eigenvalue(&m) >= -CONSTANT_TOL
}

/// Runs the reductions and numbers the surviving variables in [`Var`]
/// order.
pub fn compile(model: SymbolicModel) -> Result<Compiled> {
    let emitted = model.emitted();
    let SymbolicModel { mut blocks, mut scalars, equalities, mut objective } = model;
    let mut subs: HashMap<Var, LinExpr> = HashMap::new();
    let mut pending = equalities;
    loop {
        // Equalities to substitutions.
        let mut fresh: HashMap<Var, LinExpr> = HashMap::new();
        for e in pending.drain(..) {
            let e = e.substitute(&fresh);
            if e.is_constant() {
                if e.constant_part().abs() > CONSTANT_TOL {
                    return Err(Error::Infeasible(format!("equality {e:?} = 0 has no solution")));
                }
                continue;
            }
            let (v, c) = pivot(&e);
            let mut rest = e.clone();
            rest.add_scaled(&LinExpr::var(v), -c);
            let value = rest.scaled(-1.0 / c);
            let one = HashMap::from([(v, value.clone())]);
            for val in fresh.values_mut() {
                if val.coefficient(v) != 0.0 {
                    *val = val.substitute(&one);
                }
            }
            fresh.insert(v, value);
        }
        if !fresh.is_empty() {
            for val in subs.values_mut() {
                if val.terms().iter().any(|(v, _)| fresh.contains_key(v)) {
                    *val = val.substitute(&fresh);
                }
            }
            subs.extend(fresh.iter().map(|(k, v)| (*k, v.clone())));
            blocks = crate::par::map(&blocks, |b| substitute_block(b, &fresh));
            for s in &mut scalars {
                *s = s.substitute(&fresh);
            }
            objective = objective.substitute(&fresh);
        }

        // Scalars: constants and opposing pairs.
        let mut kept: Vec<LinExpr> = Vec::with_capacity(scalars.len());
        for s in scalars.drain(..) {
            if s.is_constant() {
                if s.constant_part() < -CONSTANT_TOL {
                    return Err(Error::Infeasible(format!("constant constraint {} >= 0", s.constant_part())));
                }
            } else {
                kept.push(s.normalized());
            }
        }
        let index: HashMap<_, usize> = kept.iter().enumerate().map(|(k, s)| (s.key(), k)).collect();
        let mut paired = vec![false; kept.len()];
        for k in 0..kept.len() {
            if paired[k] {
                continue;
            }
            if let Some(&o) = index.get(&kept[k].negated().key()) {
                if !paired[o] && o != k {
                    paired[k] = true;
                    paired[o] = true;
                    pending.push(kept[k].clone());
                }
            }
        }
        scalars = kept.into_iter().zip(&paired).filter(|(_, p)| !**p).map(|(s, _)| s).collect();

        // Blocks: rows with identically zero diagonal.
        for b in &mut blocks {
            let zero_rows: Vec<usize> = (0..b.order()).filter(|&i| b.get(i, i).is_zero()).collect();
            if zero_rows.is_empty() {
                continue;
            }
            let zero: HashSet<usize> = zero_rows.iter().copied().collect();
            for &i in &zero_rows {
                for k in 0..b.order() {
                    let e = b.get(i, k);
                    // each off-diagonal pair once
                    if !e.is_zero() && !(zero.contains(&k) && k < i) {
                        pending.push(e.clone());
                    }
                }
            }
            let keep: Vec<usize> = (0..b.order()).filter(|i| !zero.contains(i)).collect();
            *b = b.principal(&keep);
        }

        if pending.is_empty() {
            break;
        }
    }

    // Duplicate rows, empty and constant blocks, order-1 blocks.
    let mut dense: Vec<SymMatrix<LinExpr>> = Vec::new();
    for b in blocks {
        let mut seen: HashMap<Vec<(u64, Vec<(Var, u64)>)>, usize> = HashMap::new();
        let mut keep = Vec::with_capacity(b.order());
        for i in 0..b.order() {
            if seen.insert(row_key(&b, i), i).is_none() {
                keep.push(i);
            }
        }
        let b = if keep.len() < b.order() { b.principal(&keep) } else { b };
        if b.order() == 0 {
            continue;
        }
        if block_entries(&b).all(|(_, _, e)| e.is_constant()) {
            if !is_psd_constant(&b) {
                return Err(Error::Infeasible("constant block is not positive semidefinite".into()));
            }
            continue;
        }
        if b.order() == 1 {
            scalars.push(b.get(0, 0).normalized());
            continue;
        }
        dense.push(b);
    }
    let mut fingerprints = HashSet::new();
    dense.retain(|b| {
        let fp: Vec<_> = block_entries(b).map(|(_, _, e)| e.key()).chain(std::iter::once((b.order() as u64, vec![]))).collect();
        fingerprints.insert(fp)
    });
    let mut scalar_keys = HashSet::new();
    scalars.retain(|s| {
        if s.is_constant() {
            return false;
        }
        scalar_keys.insert(s.key())
    });

    // Number the surviving variables.
    let mut vars: BTreeSet<Var> = BTreeSet::new();
    for b in &dense {
        for (_, _, e) in block_entries(b) {
            vars.extend(e.terms().iter().map(|t| t.0));
        }
    }
    for s in &scalars {
        vars.extend(s.terms().iter().map(|t| t.0));
    }
    if let Some((v, _)) = objective.terms().iter().find(|(v, _)| !vars.contains(v)) {
        return Err(Error::Model(format!("objective variable {v:?} is unconstrained")));
    }
    let labels: Vec<Var> = vars.into_iter().collect();
    let col: HashMap<Var, usize> = labels.iter().enumerate().map(|(k, v)| (*v, k)).collect();

    let mut out_blocks = Vec::with_capacity(dense.len() + 1);
    for b in &dense {
        let mut constant = Vec::new();
        let mut coeffs: HashMap<usize, Vec<(usize, usize, f64)>> = HashMap::new();
        for (i, j, e) in block_entries(b) {
            if e.constant_part() != 0.0 {
                constant.push((i, j, -e.constant_part()));
            }
            for &(v, c) in e.terms() {
                coeffs.entry(col[&v]).or_default().push((i, j, c));
            }
        }
        let mut coeffs: Vec<_> = coeffs.into_iter().collect();
        coeffs.sort_by_key(|c| c.0);
        out_blocks.push(Block::from_parts(BlockKind::Dense, b.order(), constant, coeffs)?);
    }
    if !scalars.is_empty() {
        let rows: Vec<(Vec<(usize, f64)>, f64)> = scalars
            .iter()
            .map(|s| (s.terms().iter().map(|&(v, c)| (col[&v], c)).collect(), -s.constant_part()))
            .collect();
        out_blocks.push(Block::diagonal(&rows));
    }
    let mut c = vec![0.0; labels.len()];
    for &(v, coef) in objective.terms() {
        c[col[&v]] = coef;
    }
    let sdp = BlockSdp::new(c, out_blocks)?;
    Ok(Compiled { sdp, labels, objective_constant: objective.constant_part(), eliminated: subs.len(), emitted })
}
