//! Randomized property suites behind `blockhier verify`.
//!
//! Every suite draws its instances from a seeded generator, runs its trials
//! (concurrently when enabled) and reports per-trial failures.

use std::time::Instant;

use clap::ValueEnum;
use faer::Mat;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::graphs::{enumerate_subsets, paley, stability_number, subsets_exact, zero_one_optimum, Graph, VertexSet};
use crate::hierarchy::{
    build_lasserre, build_lt_graph, build_lt_graph_with_edge_equalities, build_nplus_explicit, build_nplus_th, build_theta,
    build_tilde_lt, fr_cone, PolyhedralCone, RelaxationInstance,
};
use crate::linalg::min_eigenvalue;
use crate::moment::{
    alternating_sum, apply_linear, assemble_m_t, block_a_st, block_diagonal, inclusion_factor, moment_matrix,
    moment_matrix_on, zeta_lift, Domain, MomentVector,
};
use crate::sdpsolve::{export_sdpa, import_sdpa, solve, verify_solution, Block, BlockSdp, SolveOptions, SolveStatus};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Scale {
    Small,
    Full,
}

#[derive(Clone, Debug, Serialize)]
pub struct SuiteReport {
    pub name: String,
    pub passed: usize,
    pub failed: usize,
    pub seconds: f64,
    pub failures: Vec<String>,
}

impl SuiteReport {
    pub fn ok(&self) -> bool {
        self.failed == 0 && self.passed > 0
    }
}

type Trial = std::result::Result<(), String>;

/// Runs `trials` independent trials; trial `k` gets a generator seeded
/// from `(seed, k)`.
pub fn run_trials(name: &str, trials: usize, seed: u64, f: impl Fn(usize, &mut ChaCha8Rng) -> Trial + Sync + Send) -> SuiteReport {
    let start = Instant::now();
    let outcomes = crate::par::map_range(trials, |k| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ k as u64);
        f(k, &mut rng).map_err(|e| format!("trial {k}: {e}"))
    });
    let failures: Vec<String> = outcomes.into_iter().filter_map(|o| o.err()).collect();
    SuiteReport {
        name: name.to_string(),
        passed: trials - failures.len(),
        failed: failures.len(),
        seconds: start.elapsed().as_secs_f64(),
        failures,
    }
}

pub fn random_graph(rng: &mut impl Rng, n: usize, p: f64) -> Graph {
    let edges: Vec<(usize, usize)> =
        (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).filter(|_| rng.gen_bool(p)).collect();
    Graph::new(n, edges).expect("random graph is valid")
}

/// Random graph with `α = 2`, by rejection on dense random graphs.
pub fn random_alpha_two_graph(rng: &mut impl Rng, n: usize) -> Graph {
    loop {
        let g = random_graph(rng, n, 0.75);
        if stability_number(&g).expect("small graph") == 2 {
            return g;
        }
    }
}

/// Cube rows plus random integer rows `a_0 + Σ a_i x_i ≥ 0` whose offset
/// keeps every 0/1 point of weight at most 2 strictly feasible.
pub fn random_cone(rng: &mut impl Rng, n: usize) -> PolyhedralCone {
    let mut rows = PolyhedralCone::cube(n).rows().to_vec();
    let extra = rng.gen_range(1..=3);
    for _ in 0..extra {
        let a: Vec<f64> = (0..n).map(|_| rng.gen_range(-2..=2) as f64).collect();
        let mut worst = 0.0f64;
        for i in 0..n {
            worst = worst.max(-a[i]);
            for j in i + 1..n {
                worst = worst.max(-a[i] - a[j]);
            }
        }
        let mut row = vec![worst + 0.5];
        row.extend(a);
        rows.push(row);
    }
    PolyhedralCone::new(n, rows).expect("random cone is valid")
}

/// Solves, requires an optimal status and a passing certificate at 10x the
/// solve tolerance, and returns the bound.
pub fn certified_bound(inst: crate::Result<RelaxationInstance>) -> std::result::Result<f64, String> {
    let inst = inst.map_err(|e| e.to_string())?;
    let opts = SolveOptions::default();
    let (v, r) = inst.solve(&opts).map_err(|e| e.to_string())?;
    if r.status != SolveStatus::Optimal {
        return Err(format!("solver stopped: {} ({})", r.status, r.message));
    }
    let rep = verify_solution(&inst.sdp, &r, 10.0 * opts.gap);
    if !rep.pass {
        return Err(format!("optimal result fails verification: {:?}", rep.checks));
    }
    Ok(v)
}

// Random moment vector over `P_bound`: a nonnegative combination of
// ζ-lifts, plus noise in half of the draws.
fn random_moments(rng: &mut impl Rng, n: usize, bound: usize) -> MomentVector<f64> {
    let mut y = MomentVector::from_fn(n, bound, Domain::AllSubsets, |_| 0.0).expect("bound within n");
    let points = rng.gen_range(1..=4);
    for _ in 0..points {
        let x: Vec<u8> = (0..n).map(|_| rng.gen_range(0..=1)).collect();
        let z = zeta_lift(&x, bound).expect("0/1 point");
        let w: f64 = rng.gen_range(0.1..1.0);
        for k in y.keys() {
            let v = y.get(k).unwrap() + w * z.get(k).unwrap();
            y.set(k, v).unwrap();
        }
    }
    if rng.gen_bool(0.5) {
        for k in y.keys() {
            let v = y.get(k).unwrap() + rng.gen_range(-0.3..0.3);
            y.set(k, v).unwrap();
        }
    }
    y
}

const PSD_TOL: f64 = 1e-9;

/// `M(T;y) ⪰ 0` iff every `A(S,T)(y) ⪰ 0`, and `M(T;y) = Z D Zᵀ`.
pub fn block_diagonalization(trials: usize, seed: u64) -> SuiteReport {
    run_trials("block-diagonalization", trials, seed, |_, rng| {
        let n = rng.gen_range(2..=6);
        let tsize = rng.gen_range(0..=3.min(n));
        let mut verts: Vec<usize> = (0..n).collect();
        verts.shuffle(rng);
        let t: VertexSet = verts[..tsize].iter().copied().collect();
        let y = random_moments(rng, n, tsize + 2);
        let m = assemble_m_t(&y, t).map_err(|e| e.to_string())?.to_mat();
        let big = min_eigenvalue(&m) >= -PSD_TOL;
        let mut blocks = true;
        for s in t.subsets() {
            let a = block_a_st(&y, s, t).map_err(|e| e.to_string())?.to_mat();
            blocks &= min_eigenvalue(&a) >= -PSD_TOL;
        }
        if big != blocks {
            return Err(format!("PSD(M) = {big} but PSD(blocks) = {blocks}"));
        }
        let z = inclusion_factor(n, t);
        let d = block_diagonal(&y, t).map_err(|e| e.to_string())?;
        let zdz = &z * &d * z.transpose();
        let r = crate::linalg::max_abs((&m - &zdz).as_ref());
        if r > 1e-12 {
            return Err(format!("factorization residual {r:e}"));
        }
        Ok(())
    })
}

/// Full moment matrix test against the alternating-sum test: cone
/// combinations of ζ-lifts pass both; a vector with one negative
/// alternating sum fails the PSD test.
pub fn moment_cone_oracle(trials: usize, seed: u64) -> SuiteReport {
    run_trials("moment-cone-oracle", trials, seed, |k, rng| {
        let n = rng.gen_range(1..=5);
        let all = enumerate_subsets(n, n).map_err(|e| e.to_string())?;
        let weights: Vec<f64> = all.iter().map(|_| if rng.gen_bool(0.6) { rng.gen_range(0.0..1.0) } else { 0.0 }).collect();
        let adversarial = k % 2 == 1;
        let mut weights = weights;
        let bad = rng.gen_range(0..all.len());
        if adversarial {
            weights[bad] = -rng.gen_range(0.05..1.0);
        }
        // y_I = Σ_{x ⊇ I} w_x
        let y = MomentVector::from_fn(n, n, Domain::AllSubsets, |s| {
            all.iter().zip(&weights).filter(|(x, _)| s.is_subset_of(**x)).map(|(_, w)| w).sum()
        })
        .map_err(|e| e.to_string())?;
        let psd = min_eigenvalue(&moment_matrix(&y, n).map_err(|e| e.to_string())?.to_mat()) >= -PSD_TOL;
        let mut sums_ok = true;
        for &s in &all {
            sums_ok &= alternating_sum(&y, s).map_err(|e| e.to_string())? >= -PSD_TOL;
        }
        match (adversarial, psd, sums_ok) {
            (false, true, true) | (true, false, false) => Ok(()),
            _ => Err(format!("adversarial = {adversarial}, psd = {psd}, alternating sums ok = {sums_ok}")),
        }
    })
}

/// Membership conditions `A(S,T)(y) e_i ∈ K`, `A(S,T)(y)(e_0 − e_i) ∈ K`
/// for `|T| = t−1` hold iff `M_T(a_l y) ⪰ 0` for `|T| = t`.
pub fn membership_encoding(trials: usize, seed: u64) -> SuiteReport {
    let t = 2;
    run_trials("membership-encoding", trials, seed, move |_, rng| {
        let n = rng.gen_range(2..=5);
        let k = random_cone(rng, n);
        let y = random_moments(rng, n, t + 1);
        let mut cond_a = true;
        for tt in subsets_exact(n, t - 1).map_err(|e| e.to_string())? {
            for s in tt.subsets() {
                let a = block_a_st(&y, s, tt).map_err(|e| e.to_string())?.to_mat();
                for i in 1..=n {
                    for row in k.rows() {
                        let ei: f64 = (0..=n).map(|p| row[p] * a.read(p, i)).sum();
                        let e0: f64 = (0..=n).map(|p| row[p] * a.read(p, 0)).sum();
                        cond_a &= ei >= -PSD_TOL && e0 - ei >= -PSD_TOL;
                    }
                }
            }
        }
        let mut cond_b = true;
        for row in k.rows() {
            let ay = apply_linear(row, &y).map_err(|e| e.to_string())?;
            for tt in subsets_exact(n, t).map_err(|e| e.to_string())? {
                let m = moment_matrix_on(&ay, &tt.subsets()).map_err(|e| e.to_string())?.to_mat();
                cond_b &= min_eigenvalue(&m) >= -PSD_TOL;
            }
        }
        if cond_a != cond_b {
            return Err(format!("condition (a) = {cond_a}, M_T(a_l y) condition = {cond_b}"));
        }
        Ok(())
    })
}

/// `α ≤ L^3 ≤ L^2 ≤ θ` with one-sided slack.
pub fn sandwich(trials: usize, seed: u64, max_n: usize) -> SuiteReport {
    run_trials("sandwich", trials, seed, move |_, rng| {
        let n = rng.gen_range(4..=max_n);
        let p = rng.gen_range(0.2..0.7);
        let g = random_graph(rng, n, p);
        let alpha = stability_number(&g).map_err(|e| e.to_string())? as f64;
        let l3 = certified_bound(build_lt_graph(&g, 3, false))?;
        let l2 = certified_bound(build_lt_graph(&g, 2, false))?;
        let th = certified_bound(build_theta(&g))?;
        let tol = 1e-6;
        if alpha - tol <= l3 && l3 <= l2 + tol && l2 <= th + tol {
            Ok(())
        } else {
            Err(format!("n = {n}: alpha {alpha}, L3 {l3}, L2 {l2}, theta {th}"))
        }
    })
}

/// `Q^2(FR(G)) ≤ L^2(G) ≤ N_+(TH(G))` with one-sided slack.
pub fn lasserre_chain(trials: usize, seed: u64, max_n: usize, with_nplus: bool) -> SuiteReport {
    run_trials("lasserre-chain", trials, seed, move |_, rng| {
        let n = rng.gen_range(3..=max_n);
        let p = rng.gen_range(0.2..0.7);
        let g = random_graph(rng, n, p);
        let q2 = certified_bound(build_lasserre(&fr_cone(&g), 2, Some(&g)))?;
        let l2 = certified_bound(build_lt_graph(&g, 2, false))?;
        let np = if with_nplus { certified_bound(build_nplus_th(&g))? } else { f64::INFINITY };
        if q2 <= l2 + 1e-6 && l2 <= np + 1e-6 {
            Ok(())
        } else {
            Err(format!("n = {n}: Q2 {q2}, L2 {l2}, N+(TH) {np}"))
        }
    })
}

/// `L̃^1(K)` and the explicit `N_+(K)` give the same bound.
pub fn tilde_equals_nplus(trials: usize, seed: u64) -> SuiteReport {
    run_trials("tilde-l1-equals-nplus", trials, seed, |_, rng| {
        let n = rng.gen_range(2..=6);
        let k = random_cone(rng, n);
        let a = certified_bound(build_tilde_lt(&k, 1))?;
        let b = certified_bound(build_nplus_explicit(&k, 1))?;
        let opt = zero_one_optimum(&k, &std::iter::once(0.0).chain(std::iter::repeat(1.0).take(n)).collect::<Vec<_>>())
            .map_err(|e| e.to_string())?;
        if (a - b).abs() > 1e-6 {
            return Err(format!("n = {n}: tilde-L1 {a}, N+ {b}"));
        }
        if a < opt - 1e-6 {
            return Err(format!("n = {n}: bound {a} below the 0/1 optimum {opt}"));
        }
        Ok(())
    })
}

/// `L^2(G) = 2` whenever `α(G) = 2`.
pub fn exactness(trials: usize, seed: u64, max_n: usize) -> SuiteReport {
    run_trials("exactness-alpha-two", trials, seed, move |_, rng| {
        let n = rng.gen_range(3..=max_n);
        let g = random_alpha_two_graph(rng, n);
        let l2 = certified_bound(build_lt_graph(&g, 2, false))?;
        if (l2 - 2.0).abs() <= 1e-5 {
            Ok(())
        } else {
            Err(format!("n = {n}: L2 = {l2}"))
        }
    })
}

/// Eliminating non-stable moments matches stating `y_ij = 0` explicitly.
pub fn elimination_soundness(trials: usize, seed: u64) -> SuiteReport {
    run_trials("elimination-soundness", trials, seed, |_, rng| {
        let n = rng.gen_range(3..=7);
        let p = rng.gen_range(0.2..0.6);
        let g = random_graph(rng, n, p);
        let a = certified_bound(build_lt_graph(&g, 2, false))?;
        let b = certified_bound(build_lt_graph_with_edge_equalities(&g, 2))?;
        if (a - b).abs() <= 1e-7 {
            Ok(())
        } else {
            Err(format!("n = {n}: eliminated {a}, explicit {b}"))
        }
    })
}

fn random_symmetric(rng: &mut impl Rng, k: usize, density: f64) -> Vec<Vec<f64>> {
    let mut m = vec![vec![0.0; k]; k];
    for i in 0..k {
        for j in 0..=i {
            if rng.gen_bool(density) {
                let v = (rng.gen_range(-4.0f64..4.0) * 8.0).round() / 8.0;
                m[i][j] = v;
                m[j][i] = v;
            }
        }
    }
    m
}

/// Random model with at most `max_m` variables, 5 blocks and order 8.
pub fn random_sdp(rng: &mut impl Rng, max_m: usize) -> BlockSdp {
    let m = rng.gen_range(1..=max_m);
    let nb = rng.gen_range(1..=5);
    let mut blocks = Vec::new();
    for _ in 0..nb {
        let k = rng.gen_range(1..=8);
        if rng.gen_bool(0.25) {
            let rows: Vec<(Vec<(usize, f64)>, f64)> = (0..k)
                .map(|_| {
                    let mut terms = Vec::new();
                    for j in 0..m {
                        if rng.gen_bool(0.3) {
                            terms.push((j, rng.gen_range(-2.0..2.0)));
                        }
                    }
                    (terms, rng.gen_range(-1.0..1.0))
                })
                .collect();
            blocks.push(Block::diagonal(&rows));
        } else {
            let f0 = random_symmetric(rng, k, 0.4);
            let mut fs: Vec<(usize, Vec<Vec<f64>>)> = Vec::new();
            for j in 0..m {
                if rng.gen_bool(0.4) {
                    fs.push((j, random_symmetric(rng, k, 0.3)));
                }
            }
            blocks.push(Block::dense(&f0, &fs).expect("symmetric by construction"));
        }
    }
    let c = (0..m).map(|_| rng.gen_range(-3.0..3.0)).collect();
    BlockSdp::new(c, blocks).expect("valid random model")
}

/// Export followed by import is the identity.
pub fn sdpa_round_trip(trials: usize, seed: u64) -> SuiteReport {
    run_trials("sdpa-round-trip", trials, seed, |_, rng| {
        let p = random_sdp(rng, 30);
        let q = import_sdpa(&export_sdpa(&p)).map_err(|e| e.to_string())?;
        if p == q {
            Ok(())
        } else {
            Err("round trip changed the model".into())
        }
    })
}

fn random_orthogonal(rng: &mut impl Rng, k: usize) -> Mat<f64> {
    let a = Mat::from_fn(k, k, |_, _| rng.gen_range(-1.0..1.0));
    a.qr().compute_q()
}

/// A model with a known optimum from a strictly complementary pair
/// `X* Z* = 0`, together with that optimum.
pub fn constructed_optimum(rng: &mut impl Rng) -> (BlockSdp, f64) {
    let nb = rng.gen_range(1..=3);
    let orders: Vec<usize> = (0..nb).map(|_| rng.gen_range(2..=10)).collect();
    let m = rng.gen_range(2..=12);
    let ystar: Vec<f64> = (0..m).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let mut blocks = Vec::new();
    let mut c = vec![0.0; m];
    for &k in &orders {
        let q = random_orthogonal(rng, k);
        let rank = rng.gen_range(1..k);
        let xs = Mat::from_fn(k, k, |i, j| {
            (0..rank).map(|r| q.read(i, r) * q.read(j, r) * (1.0 + r as f64 * 0.5)).sum::<f64>()
        });
        let zs = Mat::from_fn(k, k, |i, j| (rank..k).map(|r| q.read(i, r) * q.read(j, r) * (0.5 + r as f64 * 0.3)).sum::<f64>());
        let fs: Vec<Vec<Vec<f64>>> = (0..m).map(|_| random_symmetric(rng, k, 0.5)).collect();
        // F_0 = Σ y*_j F_j − Z*
        let f0: Vec<Vec<f64>> = (0..k)
            .map(|i| (0..k).map(|j| (0..m).map(|v| ystar[v] * fs[v][i][j]).sum::<f64>() - 0.5 * (zs.read(i, j) + zs.read(j, i))).collect())
            .collect();
        for (v, f) in fs.iter().enumerate() {
            let dot: f64 = (0..k).flat_map(|i| (0..k).map(move |j| (i, j))).map(|(i, j)| f[i][j] * xs.read(i, j)).sum();
            c[v] -= dot;
        }
        let fs: Vec<(usize, Vec<Vec<f64>>)> = fs.into_iter().enumerate().collect();
        blocks.push(Block::dense(&f0, &fs).expect("symmetric by construction"));
    }
    let value = c.iter().zip(&ystar).map(|(a, b)| a * b).sum();
    (BlockSdp::new(c, blocks).expect("valid constructed model"), value)
}

/// Constructed optima are recovered and every optimal result certifies.
pub fn solver_soundness(trials: usize, seed: u64) -> SuiteReport {
    run_trials("solver-constructed-optima", trials, seed, |_, rng| {
        let (p, value) = constructed_optimum(rng);
        let opts = SolveOptions::default();
        let r = solve(&p, &opts).map_err(|e| e.to_string())?;
        if r.status != SolveStatus::Optimal {
            return Err(format!("status {} ({})", r.status, r.message));
        }
        if (r.objective - value).abs() > 1e-7 * (1.0 + value.abs()) {
            return Err(format!("objective {} vs constructed {value}", r.objective));
        }
        let rep = verify_solution(&p, &r, 10.0 * opts.gap);
        if !rep.pass {
            return Err(format!("verification failed: {:?}", rep.checks));
        }
        Ok(())
    })
}

/// Paley bounds that must fall in `[lo, hi]`.
pub fn paley_values(cases: &[(usize, &'static str, f64, f64)]) -> SuiteReport {
    let cases = cases.to_vec();
    run_trials("paley-values", cases.len(), 0, move |k, _| {
        let (q, relax, lo, hi) = cases[k];
        let g = paley(q).map_err(|e| e.to_string())?;
        let v = match relax {
            "theta" => certified_bound(build_theta(&g))?,
            "l2" => certified_bound(build_lt_graph(&g, 2, false))?,
            other => return Err(format!("unknown relaxation {other}")),
        };
        if lo <= v && v <= hi {
            Ok(())
        } else {
            Err(format!("q = {q}, {relax}: {v} outside [{lo}, {hi}]"))
        }
    })
}

/// All suites at the given scale.
pub fn run(scale: Scale) -> Vec<SuiteReport> {
    let full = scale == Scale::Full;
    let mut out = vec![
        block_diagonalization(200, 1),
        moment_cone_oracle(200, 2),
        membership_encoding(if full { 100 } else { 40 }, 3),
        sdpa_round_trip(50, 4),
        solver_soundness(if full { 40 } else { 15 }, 5),
        tilde_equals_nplus(if full { 20 } else { 8 }, 6),
        exactness(if full { 20 } else { 8 }, 7, 10),
        sandwich(if full { 50 } else { 12 }, 8, 10),
        lasserre_chain(if full { 20 } else { 8 }, 9, 8, true),
        elimination_soundness(if full { 20 } else { 8 }, 10),
    ];
    let around = |v: f64, tol: f64| (v - tol, v + tol);
    let (a, b) = around(5f64.sqrt(), 1e-5);
    let (c, d) = around(13f64.sqrt(), 1e-5);
    // α(P_13) = 3 ≤ L^2 ≤ θ
    let mut values = vec![(5, "theta", a, b), (13, "theta", c, d), (13, "l2", 3.0 - 1e-6, 13f64.sqrt() + 1e-6)];
    if full {
        let (e, f) = around(7.810, 1e-3);
        let (g, h) = around(5.465, 1e-2);
        values.push((61, "theta", e, f));
        values.push((61, "l2", g, h));
    }
    out.push(paley_values(&values));
    out
}
