//! Primal-dual path-following solver with Nesterov–Todd scaling and
//! Mehrotra-style predictor-corrector steps.
//!
//! The model is `max cᵀy` s.t. `S_b(y) = Σ_j y_j F_j^b − F_0^b ⪰ 0`. Its dual
//! is `min −Σ_b <F_0^b, X_b>` s.t. `Σ_b <F_j^b, X_b> = −c_j`, `X_b ⪰ 0`. Both
//! are solved together from an infeasible start.

use faer::linalg::triangular_solve::solve_lower_triangular_in_place;
use faer::prelude::SpSolver;
use faer::{Mat, Parallelism, Side};
use serde::Serialize;

use super::model::{BlockKind, BlockSdp, SparseSym};
use crate::error::{Error, Result};
use crate::par;

// Objective magnitude, relative to the data, treated as divergence.
const DIVERGENCE: f64 = 1e12;
// Iterative refinement passes on each Schur solve.
const REFINE_STEPS: usize = 3;

/// Solver settings.
#[derive(Clone, Debug)]
pub struct SolveOptions {
    /// Relative duality gap target.
    pub gap: f64,
    /// Relative primal and dual residual target.
    pub feas_tol: f64,
    pub max_iter: usize,
    /// Refuse models with more free variables (dense Schur complement).
    pub max_vars: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions { gap: 1e-8, feas_tol: 1e-8, max_iter: 200, max_vars: 8000 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolveStatus {
    Optimal,
    MaxIterations,
    NumericalFailure,
}

impl std::fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SolveStatus::Optimal => "optimal",
            SolveStatus::MaxIterations => "max-iterations",
            SolveStatus::NumericalFailure => "numerical-failure",
        })
    }
}

/// Block of a block-diagonal symmetric matrix.
#[derive(Clone, Debug, PartialEq)]
pub enum BlockMatrix {
    Dense(Mat<f64>),
    Diagonal(Vec<f64>),
}

impl BlockMatrix {
    pub fn order(&self) -> usize {
        match self {
            BlockMatrix::Dense(m) => m.nrows(),
            BlockMatrix::Diagonal(d) => d.len(),
        }
    }

    pub fn min_eigenvalue(&self) -> f64 {
        match self {
            BlockMatrix::Dense(m) => crate::linalg::min_eigenvalue(m),
            BlockMatrix::Diagonal(d) => d.iter().copied().fold(f64::INFINITY, f64::min),
        }
    }

    /// `<self, other>`.
    pub fn dot(&self, other: &BlockMatrix) -> f64 {
        match (self, other) {
            (BlockMatrix::Dense(a), BlockMatrix::Dense(b)) => crate::linalg::frobenius_dot(a.as_ref(), b.as_ref()),
            (BlockMatrix::Diagonal(a), BlockMatrix::Diagonal(b)) => a.iter().zip(b).map(|(p, q)| p * q).sum(),
            _ => panic!("block kind mismatch"),
        }
    }

    /// `<self, F>` for a sparse symmetric `F`.
    pub fn dot_sparse(&self, f: &SparseSym) -> f64 {
        match self {
            BlockMatrix::Dense(m) => dense_dot_sparse(m, f),
            BlockMatrix::Diagonal(d) => f.entries().iter().map(|&(r, _, v)| v * d[r]).sum(),
        }
    }

    pub fn frobenius_sq(&self) -> f64 {
        self.dot(self)
    }

    fn axpy(&mut self, alpha: f64, other: &BlockMatrix) {
        match (self, other) {
            (BlockMatrix::Dense(a), BlockMatrix::Dense(b)) => {
                let n = a.nrows();
                for j in 0..n {
                    for i in 0..n {
                        a.write(i, j, a.read(i, j) + alpha * b.read(i, j));
                    }
                }
            }
            (BlockMatrix::Diagonal(a), BlockMatrix::Diagonal(b)) => a.iter_mut().zip(b).for_each(|(p, q)| *p += alpha * q),
            _ => panic!("block kind mismatch"),
        }
    }

    fn add_sparse(&mut self, f: &SparseSym, alpha: f64) {
        match self {
            BlockMatrix::Dense(m) => {
                for &(r, c, v) in f.entries() {
                    m.write(r, c, m.read(r, c) + alpha * v);
                    if r != c {
                        m.write(c, r, m.read(c, r) + alpha * v);
                    }
                }
            }
            BlockMatrix::Diagonal(d) => {
                for &(r, _, v) in f.entries() {
                    d[r] += alpha * v;
                }
            }
        }
    }

    fn scaled_identity(kind: BlockKind, order: usize, v: f64) -> BlockMatrix {
        match kind {
            BlockKind::Dense => BlockMatrix::Dense(Mat::from_fn(order, order, |i, j| if i == j { v } else { 0.0 })),
            BlockKind::Diagonal => BlockMatrix::Diagonal(vec![v; order]),
        }
    }
}

fn dense_dot_sparse(m: &Mat<f64>, f: &SparseSym) -> f64 {
    f.entries()
        .iter()
        .map(|&(r, c, v)| if r == c { v * m.read(r, r) } else { v * (m.read(r, c) + m.read(c, r)) })
        .sum()
}

/// `S_b(y) = Σ_j y_j F_j^b − F_0^b` for every block.
pub fn slack_matrices(p: &BlockSdp, y: &[f64]) -> Vec<BlockMatrix> {
    p.blocks
        .iter()
        .map(|b| {
            let mut s = BlockMatrix::scaled_identity(b.kind, b.order, 0.0);
            s.add_sparse(&b.constant, -1.0);
            for (j, f) in &b.coeffs {
                s.add_sparse(f, y[*j]);
            }
            s
        })
        .collect()
}

/// `−c_j − Σ_b <F_j^b, X_b>`: residual of the dual equality constraints.
pub fn dual_residual(p: &BlockSdp, x: &[BlockMatrix]) -> Vec<f64> {
    let mut r: Vec<f64> = p.objective.iter().map(|c| -c).collect();
    for (b, xb) in p.blocks.iter().zip(x) {
        for (j, f) in &b.coeffs {
            r[*j] -= xb.dot_sparse(f);
        }
    }
    r
}

/// `−Σ_b <F_0^b, X_b>`.
pub fn dual_objective(p: &BlockSdp, x: &[BlockMatrix]) -> f64 {
    -p.blocks.iter().zip(x).map(|(b, xb)| xb.dot_sparse(&b.constant)).sum::<f64>()
}

/// `|u − l| / (1 + |u| + |l|)`.
pub fn relative_gap(lower: f64, upper: f64) -> f64 {
    (upper - lower).abs() / (1.0 + upper.abs() + lower.abs())
}

/// One line of the iteration history.
#[derive(Clone, Debug, Serialize)]
pub struct IterationLog {
    pub iter: usize,
    /// `cᵀy`.
    pub primal_objective: f64,
    /// `−<F_0, X>`.
    pub dual_objective: f64,
    /// `<X, Z>`.
    pub complementarity: f64,
    /// `<Rd, X> + yᵀrp`, the part of the objective gap caused by infeasibility.
    pub infeasibility_gap: f64,
    pub rel_gap: f64,
    pub slack_infeasibility: f64,
    pub dual_infeasibility: f64,
    pub step_primal: f64,
    pub step_dual: f64,
}

#[derive(Clone, Debug)]
pub struct SolveResult {
    pub status: SolveStatus,
    /// `cᵀy` at the final iterate.
    pub objective: f64,
    /// `−<F_0, X>` at the final iterate.
    pub upper_bound: f64,
    pub y: Vec<f64>,
    /// `S_b(y)` per block.
    pub slacks: Vec<BlockMatrix>,
    /// Dual matrices `X_b`.
    pub duals: Vec<BlockMatrix>,
    pub rel_gap: f64,
    pub iterations: usize,
    pub slack_infeasibility: f64,
    pub dual_infeasibility: f64,
    pub history: Vec<IterationLog>,
    pub message: String,
}

// Per-block data fixed for the whole solve.
struct Prepared<'a> {
    coeffs: &'a [(usize, SparseSym)],
    // dense: union of lower-triangle positions touched by any F_j
    pattern: Vec<(usize, usize)>,
    // dense: per local variable, (pattern index, value)
    local: Vec<Vec<(u32, f64)>>,
    // diagonal: per row, (variable, value)
    rows: Vec<Vec<(usize, f64)>>,
}

fn prepare(p: &BlockSdp) -> Vec<Prepared<'_>> {
    p.blocks
        .iter()
        .map(|b| {
            let mut pr = Prepared {
                coeffs: &b.coeffs,
                pattern: Vec::new(),
                local: Vec::new(),
                rows: Vec::new(),
            };
            match b.kind {
                BlockKind::Dense => {
                    let mut pos: Vec<(usize, usize)> =
                        b.coeffs.iter().flat_map(|(_, f)| f.entries().iter().map(|&(r, c, _)| (r, c))).collect();
                    pos.sort_unstable();
                    pos.dedup();
                    pr.local = b
                        .coeffs
                        .iter()
                        .map(|(_, f)| {
                            f.entries()
                                .iter()
                                .map(|&(r, c, v)| (pos.binary_search(&(r, c)).unwrap() as u32, v))
                                .collect()
                        })
                        .collect();
                    pr.pattern = pos;
                }
                BlockKind::Diagonal => {
                    pr.rows = vec![Vec::new(); b.order];
                    for (j, f) in &b.coeffs {
                        for &(r, _, v) in f.entries() {
                            pr.rows[r].push((*j, v));
                        }
                    }
                }
            }
            pr
        })
        .collect()
}

// NT scaling of one dense block: W = G Gᵀ with Gᵀ Z G = G⁻¹ X G⁻ᵀ = D.
struct Scaling {
    g: Mat<f64>,
    ginv: Mat<f64>,
    w: Mat<f64>,
    d: Vec<f64>,
    linv: Mat<f64>,
    rinv: Mat<f64>,
}

fn lower_inverse(l: &Mat<f64>) -> Mat<f64> {
    let n = l.nrows();
    let mut inv = Mat::<f64>::identity(n, n);
    solve_lower_triangular_in_place(l.as_ref(), inv.as_mut(), Parallelism::None);
    inv
}

fn nt_scaling(x: &Mat<f64>, z: &Mat<f64>) -> Option<Scaling> {
    let l = x.cholesky(Side::Lower).ok()?.compute_l();
    let r = z.cholesky(Side::Lower).ok()?.compute_l();
    let svd = (r.transpose() * &l).svd();
    let v = svd.v();
    let s = svd.s_diagonal();
    let n = x.nrows();
    let d: Vec<f64> = (0..n).map(|k| s.read(k)).collect();
    if d.iter().any(|&v| !(v > 0.0) || !v.is_finite()) {
        return None;
    }
    let lv = &l * v;
    let g = Mat::from_fn(n, n, |i, j| lv.read(i, j) / d[j].sqrt());
    let linv = lower_inverse(&l);
    let vtl = v.transpose() * &linv;
    let ginv = Mat::from_fn(n, n, |i, j| vtl.read(i, j) * d[i].sqrt());
    let mut w = &g * g.transpose();
    crate::linalg::symmetrize_from_lower(&mut w);
    let rinv = lower_inverse(&r);
    Some(Scaling { g, ginv, w, d, linv, rinv })
}

fn symmetrize(m: &mut Mat<f64>) {
    let n = m.nrows();
    for j in 0..n {
        for i in 0..j {
            let v = 0.5 * (m.read(i, j) + m.read(j, i));
            m.write(i, j, v);
            m.write(j, i, v);
        }
    }
}

/// `W A W` for symmetric `A`.
fn sandwich(w: &Mat<f64>, a: &Mat<f64>) -> Mat<f64> {
    let mut out = w * (a * w);
    symmetrize(&mut out);
    out
}

// Longest step α with `M + α dM ⪰ 0`, given `M = L Lᵀ` and `L⁻¹`.
fn max_step_dense(linv: &Mat<f64>, dm: &Mat<f64>) -> f64 {
    let mut t = linv * (dm * linv.transpose());
    symmetrize(&mut t);
    let lam = crate::linalg::min_eigenvalue(&t);
    if lam >= 0.0 {
        f64::INFINITY
    } else {
        -1.0 / lam
    }
}

fn max_step_diag(x: &[f64], dx: &[f64]) -> f64 {
    x.iter()
        .zip(dx)
        .filter(|(_, d)| **d < 0.0)
        .map(|(v, d)| -v / d)
        .fold(f64::INFINITY, f64::min)
}

enum BlockScaling {
    Dense(Scaling),
    Diagonal(Vec<f64>),
}

// Adds block contributions `<F_i, W F_j W>` to the lower triangle of `schur`.
fn assemble_schur(prep: &[Prepared<'_>], scal: &[BlockScaling], schur: &mut Mat<f64>) {
    for (pb, sc) in prep.iter().zip(scal) {
        match sc {
            BlockScaling::Dense(s) => {
                let w = &s.w;
                let nv = pb.coeffs.len();
                let rows: Vec<Vec<f64>> = par::map_range(nv, |a| {
                    let fa = &pb.coeffs[a].1;
                    let g: Vec<f64> = pb
                        .pattern
                        .iter()
                        .map(|&(p, q)| {
                            let mut acc = 0.0;
                            for &(r, c, v) in fa.entries() {
                                acc += if r == c {
                                    v * w.read(p, r) * w.read(r, q)
                                } else {
                                    v * (w.read(p, r) * w.read(c, q) + w.read(p, c) * w.read(r, q))
                                };
                            }
                            acc
                        })
                        .collect();
                    (a..nv)
                        .map(|b| {
                            pb.local[b]
                                .iter()
                                .map(|&(k, u)| {
                                    let (p, q) = pb.pattern[k as usize];
                                    if p == q {
                                        u * g[k as usize]
                                    } else {
                                        2.0 * u * g[k as usize]
                                    }
                                })
                                .sum()
                        })
                        .collect()
                });
                for (a, row) in rows.into_iter().enumerate() {
                    let ga = pb.coeffs[a].0;
                    for (off, val) in row.into_iter().enumerate() {
                        let gb = pb.coeffs[a + off].0;
                        schur.write(gb, ga, schur.read(gb, ga) + val);
                    }
                }
            }
            BlockScaling::Diagonal(wk) => {
                for (k, row) in pb.rows.iter().enumerate() {
                    for &(ja, va) in row {
                        for &(jb, vb) in row {
                            if jb >= ja {
                                schur.write(jb, ja, schur.read(jb, ja) + wk[k] * va * vb);
                            }
                        }
                    }
                }
            }
        }
    }
}

struct Direction {
    dy: Vec<f64>,
    dx: Vec<BlockMatrix>,
    dz: Vec<BlockMatrix>,
}

struct Iterate {
    y: Vec<f64>,
    x: Vec<BlockMatrix>,
    z: Vec<BlockMatrix>,
}

/// Solves `p`. Model errors and capacity violations are returned as `Err`;
/// numerical trouble is reported through [`SolveStatus`].
pub fn solve(p: &BlockSdp, opts: &SolveOptions) -> Result<SolveResult> {
    p.validate()?;
    if !(opts.gap > 0.0 && opts.feas_tol > 0.0) {
        return Err(Error::InvalidParameter("tolerances must be positive".into()));
    }
    let m = p.num_vars;
    if m > opts.max_vars {
        return Err(Error::Capacity(format!(
            "{m} free variables exceed the dense Schur complement cap of {}",
            opts.max_vars
        )));
    }
    let used = p.used_vars();
    if let Some(j) = (0..m).find(|&j| !used[j] && p.objective[j] != 0.0) {
        return Err(Error::Model(format!("variable {j} has a nonzero objective but appears in no block (unbounded)")));
    }
    let prep = prepare(p);
    let n_total: usize = p.total_order().max(1);
    let c_norm = p.objective.iter().map(|c| c * c).sum::<f64>().sqrt();
    let f0_norm = p.blocks.iter().map(|b| b.constant.frobenius().powi(2)).sum::<f64>().sqrt();

    let delta = 1.0 + p.blocks.iter().map(|b| b.constant.max_abs()).fold(0.0, f64::max);
    let mut it = Iterate {
        y: vec![0.0; m],
        x: p
            .blocks
            .iter()
            .map(|b| {
                let s = b.order as f64;
                let ratio = b
                    .coeffs
                    .iter()
                    .map(|(j, f)| (1.0 + p.objective[*j].abs()) / (1.0 + f.frobenius()))
                    .fold(0.0, f64::max);
                let xi = 10f64.max(s.sqrt()).max(s * ratio);
                BlockMatrix::scaled_identity(b.kind, b.order, xi)
            })
            .collect(),
        z: p.blocks.iter().map(|b| BlockMatrix::scaled_identity(b.kind, b.order, delta)).collect(),
    };

    let mut history = Vec::new();
    let mut status = SolveStatus::MaxIterations;
    let mut message = String::new();
    let mut stalls = 0;
    let mut iter = 0;
    loop {
        let slack = slack_matrices(p, &it.y);
        let rd: Vec<BlockMatrix> = slack
            .iter()
            .zip(&it.z)
            .map(|(s, z)| {
                let mut r = s.clone();
                r.axpy(-1.0, z);
                r
            })
            .collect();
        let rp = dual_residual(p, &it.x);
        let pobj: f64 = p.objective.iter().zip(&it.y).map(|(c, y)| c * y).sum();
        let dobj = dual_objective(p, &it.x);
        let xz: f64 = it.x.iter().zip(&it.z).map(|(x, z)| x.dot(z)).sum();
        let mu = xz / n_total as f64;
        let rel_gap = relative_gap(pobj, dobj);
        let slack_inf = rd.iter().map(|r| r.frobenius_sq()).sum::<f64>().sqrt() / (1.0 + f0_norm);
        let dual_inf = rp.iter().map(|r| r * r).sum::<f64>().sqrt() / (1.0 + c_norm);
        let infeas_gap = rd.iter().zip(&it.x).map(|(r, x)| r.dot(x)).sum::<f64>()
            + rp.iter().zip(&it.y).map(|(r, y)| r * y).sum::<f64>();
        let mut log_entry = IterationLog {
            iter,
            primal_objective: pobj,
            dual_objective: dobj,
            complementarity: xz,
            infeasibility_gap: infeas_gap,
            rel_gap,
            slack_infeasibility: slack_inf,
            dual_infeasibility: dual_inf,
            step_primal: 0.0,
            step_dual: 0.0,
        };
        log::debug!(
            "iter {iter:3} pobj {pobj:.10e} dobj {dobj:.10e} gap {rel_gap:.2e} pinf {slack_inf:.2e} dinf {dual_inf:.2e} mu {mu:.2e}"
        );
        if !pobj.is_finite() || !dobj.is_finite() || !mu.is_finite() {
            status = SolveStatus::NumericalFailure;
            message = "non-finite iterate".into();
            break;
        }
        // No infeasibility certificates: runaway objectives are reported as an
        // unfinished solve.
        if pobj.abs().max(dobj.abs()) > DIVERGENCE * (1.0 + f0_norm + c_norm) {
            history.push(log_entry);
            message = format!("iterates diverge at iteration {iter}; the model is likely infeasible or unbounded");
            break;
        }
        if rel_gap <= opts.gap && slack_inf <= opts.feas_tol && dual_inf <= opts.feas_tol {
            history.push(log_entry);
            status = SolveStatus::Optimal;
            break;
        }
        if iter >= opts.max_iter {
            history.push(log_entry);
            message = format!("iteration limit {} reached", opts.max_iter);
            break;
        }

        let scal: Option<Vec<BlockScaling>> = par::map(&prep.iter().zip(it.x.iter().zip(&it.z)).collect::<Vec<_>>(), |(_, (x, z))| {
            match (x, z) {
                (BlockMatrix::Dense(x), BlockMatrix::Dense(z)) => nt_scaling(x, z).map(BlockScaling::Dense),
                (BlockMatrix::Diagonal(x), BlockMatrix::Diagonal(z)) => {
                    Some(BlockScaling::Diagonal(x.iter().zip(z).map(|(a, b)| a / b).collect()))
                }
                _ => None,
            }
        })
        .into_iter()
        .collect();
        let Some(scal) = scal else {
            history.push(log_entry);
            status = SolveStatus::NumericalFailure;
            message = format!("iterate lost definiteness at iteration {iter}");
            break;
        };

        let mut schur = Mat::<f64>::zeros(m, m);
        assemble_schur(&prep, &scal, &mut schur);
        for j in 0..m {
            if !used[j] {
                schur.write(j, j, 1.0);
            }
        }
        let Some(chol) = factor_schur(&schur) else {
            history.push(log_entry);
            status = SolveStatus::NumericalFailure;
            message = format!("Schur complement not positive definite after regularization at iteration {iter}");
            break;
        };
        drop(schur);

        let direction = |rc: &[BlockMatrix]| -> Direction {
            let mut rhs: Vec<f64> = rp.iter().map(|r| -r).collect();
            for (((pb, sc), rcb), rdb) in prep.iter().zip(&scal).zip(rc).zip(&rd) {
                let q = match (sc, rcb, rdb) {
                    (BlockScaling::Dense(s), BlockMatrix::Dense(rc), BlockMatrix::Dense(rd)) => {
                        let mut q = rc.clone();
                        let wrw = sandwich(&s.w, rd);
                        BlockMatrix::Dense({
                            q -= &wrw;
                            q
                        })
                    }
                    (BlockScaling::Diagonal(w), BlockMatrix::Diagonal(rc), BlockMatrix::Diagonal(rd)) => {
                        BlockMatrix::Diagonal(rc.iter().zip(rd).zip(w).map(|((a, b), w)| a - w * b).collect())
                    }
                    _ => unreachable!(),
                };
                for (j, f) in pb.coeffs {
                    rhs[*j] += q.dot_sparse(f);
                }
            }
            let solve_schur = |r: &[f64]| -> Vec<f64> {
                let sol = chol.solve(&Mat::from_fn(m, 1, |i, _| r[i]));
                (0..m).map(|i| sol.read(i, 0)).collect()
            };
            let recover = |dy: &[f64]| -> (Vec<BlockMatrix>, Vec<BlockMatrix>) {
                let mut dx = Vec::with_capacity(prep.len());
                let mut dz = Vec::with_capacity(prep.len());
                for (((pb, sc), rcb), rdb) in prep.iter().zip(&scal).zip(rc).zip(&rd) {
                    let mut dzb = rdb.clone();
                    for (j, f) in pb.coeffs {
                        dzb.add_sparse(f, dy[*j]);
                    }
                    let dxb = match (sc, rcb, &dzb) {
                        (BlockScaling::Dense(s), BlockMatrix::Dense(rc), BlockMatrix::Dense(dzm)) => {
                            let mut d = rc.clone();
                            d -= &sandwich(&s.w, dzm);
                            symmetrize(&mut d);
                            BlockMatrix::Dense(d)
                        }
                        (BlockScaling::Diagonal(w), BlockMatrix::Diagonal(rc), BlockMatrix::Diagonal(dzv)) => {
                            BlockMatrix::Diagonal(rc.iter().zip(dzv).zip(w).map(|((a, b), w)| a - w * b).collect())
                        }
                        _ => unreachable!(),
                    };
                    dx.push(dxb);
                    dz.push(dzb);
                }
                (dx, dz)
            };
            // A full step must cancel the equality residual: <F_j, dX> = rp_j.
            let defect = |dx: &[BlockMatrix]| -> Vec<f64> {
                let mut e = rp.clone();
                for (pb, dxb) in prep.iter().zip(dx) {
                    for (j, f) in pb.coeffs {
                        e[*j] -= dxb.dot_sparse(f);
                    }
                }
                e
            };
            let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
            let mut dy = solve_schur(&rhs);
            let (mut dx, mut dz) = recover(&dy);
            let mut e = defect(&dx);
            // Iterative refinement against the true defect; the Schur matrix is
            // badly conditioned near degenerate optima.
            for _ in 0..REFINE_STEPS {
                let err = norm(&e);
                if err <= f64::EPSILON * (1.0 + norm(&rp)) {
                    break;
                }
                let neg: Vec<f64> = e.iter().map(|v| -v).collect();
                let cand: Vec<f64> = dy.iter().zip(solve_schur(&neg)).map(|(a, b)| a + b).collect();
                let (cx, cz) = recover(&cand);
                let ce = defect(&cx);
                if norm(&ce) >= err {
                    break;
                }
                (dy, dx, dz, e) = (cand, cx, cz, ce);
            }
            Direction { dy, dx, dz }
        };
        let steps = |d: &Direction| -> (f64, f64) {
            let mut ap = f64::INFINITY;
            let mut ad = f64::INFINITY;
            for ((sc, (x, z)), (dx, dz)) in scal.iter().zip(it.x.iter().zip(&it.z)).zip(d.dx.iter().zip(&d.dz)) {
                match (sc, dx, dz) {
                    (BlockScaling::Dense(s), BlockMatrix::Dense(dx), BlockMatrix::Dense(dz)) => {
                        ap = ap.min(max_step_dense(&s.linv, dx));
                        ad = ad.min(max_step_dense(&s.rinv, dz));
                    }
                    (BlockScaling::Diagonal(_), BlockMatrix::Diagonal(dx), BlockMatrix::Diagonal(dz)) => {
                        let (BlockMatrix::Diagonal(xv), BlockMatrix::Diagonal(zv)) = (x, z) else { unreachable!() };
                        ap = ap.min(max_step_diag(xv, dx));
                        ad = ad.min(max_step_diag(zv, dz));
                    }
                    _ => unreachable!(),
                }
            }
            (ap, ad)
        };

        // Predictor.
        let rc_aff: Vec<BlockMatrix> = it
            .x
            .iter()
            .map(|x| {
                let mut r = x.clone();
                r.axpy(-2.0, x);
                r
            })
            .collect();
        let aff = direction(&rc_aff);
        let (ap, ad) = steps(&aff);
        let (ap, ad) = (ap.min(1.0), ad.min(1.0));
        let mut xz_aff = 0.0;
        for b in 0..prep.len() {
            let mut x = it.x[b].clone();
            x.axpy(ap, &aff.dx[b]);
            let mut z = it.z[b].clone();
            z.axpy(ad, &aff.dz[b]);
            xz_aff += x.dot(&z);
        }
        let mu_aff = xz_aff / n_total as f64;
        let expon = (3.0 * ap.min(ad).powi(2)).max(1.0);
        let sigma = if mu > 0.0 { (mu_aff.max(0.0) / mu).powf(expon).min(1.0) } else { 0.0 };

        // Corrector.
        let rc_cor: Vec<BlockMatrix> = scal
            .iter()
            .enumerate()
            .map(|(b, sc)| match (sc, &aff.dx[b], &aff.dz[b], &it.x[b], &it.z[b]) {
                (BlockScaling::Dense(s), BlockMatrix::Dense(dx), BlockMatrix::Dense(dz), _, _) => {
                    let k = s.d.len();
                    let dxt = &s.ginv * (dx * s.ginv.transpose());
                    let dzt = s.g.transpose() * (dz * &s.g);
                    let cross = &dxt * &dzt;
                    let kmat = Mat::from_fn(k, k, |p, q| {
                        let mut r = -(cross.read(p, q) + cross.read(q, p));
                        if p == q {
                            r += 2.0 * sigma * mu - 2.0 * s.d[p] * s.d[p];
                        }
                        r / (s.d[p] + s.d[q])
                    });
                    let mut rc = &s.g * (&kmat * s.g.transpose());
                    symmetrize(&mut rc);
                    BlockMatrix::Dense(rc)
                }
                (BlockScaling::Diagonal(_), BlockMatrix::Diagonal(dx), BlockMatrix::Diagonal(dz), BlockMatrix::Diagonal(x), BlockMatrix::Diagonal(z)) => {
                    BlockMatrix::Diagonal(
                        (0..x.len()).map(|k| (sigma * mu - x[k] * z[k] - dx[k] * dz[k]) / z[k]).collect(),
                    )
                }
                _ => unreachable!(),
            })
            .collect();
        let cor = direction(&rc_cor);
        let (ap, ad) = steps(&cor);
        let ap = (0.98 * ap).min(1.0);
        let ad = (0.98 * ad).min(1.0);
        for b in 0..prep.len() {
            it.x[b].axpy(ap, &cor.dx[b]);
            it.z[b].axpy(ad, &cor.dz[b]);
        }
        for (y, d) in it.y.iter_mut().zip(&cor.dy) {
            *y += ad * d;
        }
        log_entry.step_primal = ap;
        log_entry.step_dual = ad;
        history.push(log_entry);
        if ap < 1e-10 && ad < 1e-10 {
            stalls += 1;
            if stalls >= 3 {
                status = SolveStatus::NumericalFailure;
                message = format!("steps stalled at iteration {iter}");
                iter += 1;
                break;
            }
        } else {
            stalls = 0;
        }
        iter += 1;
    }

    let last = history.last().expect("at least one iteration logged");
    let slacks = slack_matrices(p, &it.y);
    Ok(SolveResult {
        status,
        objective: last.primal_objective,
        upper_bound: last.dual_objective,
        rel_gap: last.rel_gap,
        slack_infeasibility: last.slack_infeasibility,
        dual_infeasibility: last.dual_infeasibility,
        iterations: iter,
        y: it.y,
        slacks,
        duals: it.x,
        history,
        message,
    })
}

fn factor_schur(schur: &Mat<f64>) -> Option<faer::solvers::Cholesky<f64>> {
    if let Ok(c) = schur.cholesky(Side::Lower) {
        return Some(c);
    }
    let m = schur.nrows();
    let trace: f64 = (0..m).map(|i| schur.read(i, i)).sum::<f64>().max(f64::MIN_POSITIVE);
    for scale in [1e-12, 1e-10, 1e-8] {
        let mut reg = schur.clone();
        for i in 0..m {
            reg.write(i, i, reg.read(i, i) + scale * trace);
        }
        if let Ok(c) = reg.cholesky(Side::Lower) {
            log::debug!("Schur complement regularized with {scale:e}·trace");
            return Some(c);
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sdpsolve::model::Block;

    #[test]
    fn one_by_one() {
        let blk = Block::dense(&[vec![-1.0]], &[(0, vec![vec![-1.0]])]).unwrap();
        let p = BlockSdp::new(vec![1.0], vec![blk]).unwrap();
        let r = solve(&p, &SolveOptions::default()).unwrap();
        assert_eq!(r.status, SolveStatus::Optimal);
        assert!((r.objective - 1.0).abs() < 1e-7);
    }

    #[test]
    fn two_by_two() {
        let blk = Block::dense(
            &[vec![-1.0, 0.0], vec![0.0, -1.0]],
            &[(0, vec![vec![0.0, 1.0], vec![1.0, 0.0]])],
        )
        .unwrap();
        let p = BlockSdp::new(vec![2.0], vec![blk]).unwrap();
        let r = solve(&p, &SolveOptions::default()).unwrap();
        assert_eq!(r.status, SolveStatus::Optimal);
        assert!((r.objective - 2.0).abs() < 1e-7, "{}", r.objective);
        assert!((r.y[0] - 1.0).abs() < 1e-6);
    }

    #[test]
    fn diagonal_block_lp() {
        // max y1 + y2 s.t. y1 ≤ 1, y2 ≤ 2, y1 + y2 ≤ 2.5, y ≥ 0.
        let blk = Block::diagonal(&[
            (vec![(0, -1.0)], -1.0),
            (vec![(1, -1.0)], -2.0),
            (vec![(0, -1.0), (1, -1.0)], -2.5),
            (vec![(0, 1.0)], 0.0),
            (vec![(1, 1.0)], 0.0),
        ]);
        let p = BlockSdp::new(vec![1.0, 1.0], vec![blk]).unwrap();
        let r = solve(&p, &SolveOptions::default()).unwrap();
        assert_eq!(r.status, SolveStatus::Optimal);
        assert!((r.objective - 2.5).abs() < 1e-7);
    }

    #[test]
    fn unused_variable_with_objective_is_rejected() {
        let blk = Block::dense(&[vec![-1.0]], &[(0, vec![vec![-1.0]])]).unwrap();
        let p = BlockSdp::new(vec![1.0, 1.0], vec![blk]).unwrap();
        assert!(solve(&p, &SolveOptions::default()).is_err());
        let opts = SolveOptions { max_vars: 1, ..Default::default() };
        assert!(matches!(solve(&p, &opts), Err(Error::Capacity(_))));
    }
}
