use serde::Serialize;

use super::ipm::{dual_objective, dual_residual, relative_gap, slack_matrices, SolveResult};
use super::model::BlockSdp;

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub value: f64,
    pub pass: bool,
}

/// Independent recomputation of the certificates carried by a result.
#[derive(Clone, Debug, Serialize)]
pub struct VerifyReport {
    pub checks: Vec<Check>,
    pub pass: bool,
}

impl VerifyReport {
    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

/// Recomputes `S(y)`, `X`-side residuals and the gap from `p`, `r.y` and
/// `r.duals` only. Every check must be within `tol`.
pub fn verify_solution(p: &BlockSdp, r: &SolveResult, tol: f64) -> VerifyReport {
    let mut checks = Vec::new();
    if r.y.len() != p.num_vars || r.duals.len() != p.blocks.len() {
        checks.push(Check { name: "shape", value: f64::NAN, pass: false });
        return VerifyReport { checks, pass: false };
    }
    let shapes_ok = r.duals.iter().zip(&p.blocks).all(|(x, b)| x.order() == b.order);
    checks.push(Check { name: "shape", value: 0.0, pass: shapes_ok });
    if !shapes_ok {
        return VerifyReport { checks, pass: false };
    }

    let slacks = slack_matrices(p, &r.y);
    let slack_min = slacks.iter().map(|s| s.min_eigenvalue()).fold(f64::INFINITY, f64::min);
    let slack_min = if slack_min.is_infinite() { 0.0 } else { slack_min };
    checks.push(Check { name: "slack-min-eigenvalue", value: slack_min, pass: slack_min >= -tol });

    let dual_min = r.duals.iter().map(|x| x.min_eigenvalue()).fold(f64::INFINITY, f64::min);
    let dual_min = if dual_min.is_infinite() { 0.0 } else { dual_min };
    checks.push(Check { name: "dual-min-eigenvalue", value: dual_min, pass: dual_min >= -tol });

    let c_norm = p.objective.iter().map(|c| c * c).sum::<f64>().sqrt();
    let res = dual_residual(p, &r.duals);
    let res_rel = res.iter().map(|v| v * v).sum::<f64>().sqrt() / (1.0 + c_norm);
    checks.push(Check { name: "dual-residual", value: res_rel, pass: res_rel <= tol });

    let lower: f64 = p.objective.iter().zip(&r.y).map(|(c, y)| c * y).sum();
    let upper = dual_objective(p, &r.duals);
    let gap = relative_gap(lower, upper);
    checks.push(Check { name: "duality-gap", value: gap, pass: gap <= tol });

    let drift = (lower - r.objective).abs() / (1.0 + lower.abs());
    checks.push(Check { name: "objective", value: drift, pass: drift <= tol });

    let pass = checks.iter().all(|c| c.pass);
    VerifyReport { checks, pass }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sdpsolve::{solve, Block, SolveOptions};

    #[test]
    fn perturbation_is_caught() {
        let blk = Block::dense(
            &[vec![-1.0, 0.0], vec![0.0, -1.0]],
            &[(0, vec![vec![0.0, 1.0], vec![1.0, 0.0]])],
        )
        .unwrap();
        let p = BlockSdp::new(vec![2.0], vec![blk]).unwrap();
        let mut r = solve(&p, &SolveOptions::default()).unwrap();
        let rep = verify_solution(&p, &r, 1e-7);
        assert!(rep.pass, "{rep:?}");
        r.y[0] += 1e-3;
        let rep = verify_solution(&p, &r, 1e-7);
        assert!(!rep.check("slack-min-eigenvalue").unwrap().pass);
    }
}
