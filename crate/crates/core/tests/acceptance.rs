//! Acceptance criteria 1-11. Prints one PASS/FAIL line per criterion and
//! exits nonzero if any fails.

use std::time::{Duration, Instant};

use blockhier::graphs::{paley, stability_number, Graph};
use blockhier::hierarchy::{
    build_lt_graph, build_nplus_explicit, build_nplus_th, build_theta, build_tilde_lt, formulation_stats, fr_cone, h,
    Hierarchy,
};
use blockhier::suites::{self, certified_bound, SuiteReport};

const THETA_TOL: f64 = 1e-4;
const THETA_BUDGET: Duration = Duration::from_secs(60);
const L2_61_TARGET: f64 = 5.465;
const L2_61_TOL: f64 = 1e-2;
const L2_61_BUDGET: Duration = Duration::from_secs(30 * 60);
const CHAIN_SLACK: f64 = 1e-5;
const CHAIN_BUDGET: Duration = Duration::from_secs(10 * 60);
const SUITE_BUDGET: Duration = Duration::from_secs(30);
const FR_C5_TOL: f64 = 1e-5;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn from_suites(reports: &[SuiteReport], budget: Option<Duration>) -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for r in reports {
        let slow = budget.is_some_and(|b| r.seconds > b.as_secs_f64());
        pass &= r.ok() && !slow;
        parts.push(format!("{} {}/{} in {:.1} s{}", r.name, r.passed, r.passed + r.failed, r.seconds, if slow { " (over budget)" } else { "" }));
        for f in r.failures.iter().take(3) {
            parts.push(format!("  {f}"));
        }
    }
    outcome(pass, parts.join("; "))
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, Duration) {
    let s = Instant::now();
    let v = f();
    (v, s.elapsed())
}

fn c1_theta_on_paley() -> Outcome {
    let mut pass = true;
    let mut worst: f64 = 0.0;
    let mut slowest = Duration::ZERO;
    let mut errors = Vec::new();
    for q in [5, 13, 17, 29, 37, 41, 53, 61, 73, 89, 97, 101] {
        let g = paley(q).unwrap();
        let (v, dt) = timed(|| certified_bound(build_theta(&g)));
        slowest = slowest.max(dt);
        match v {
            Ok(v) => {
                let err = (v - (q as f64).sqrt()).abs();
                worst = worst.max(err);
                pass &= err <= THETA_TOL && dt <= THETA_BUDGET;
            }
            Err(e) => {
                pass = false;
                errors.push(format!("q = {q}: {e}"));
            }
        }
    }
    outcome(pass, format!("max |theta - sqrt(q)| = {worst:.2e}, slowest solve {:.1} s {}", slowest.as_secs_f64(), errors.join("; ")))
}

fn c2_l2_paley_61() -> Outcome {
    let g = paley(61).unwrap();
    let (v, dt) = timed(|| certified_bound(build_lt_graph(&g, 2, false)));
    match v {
        Ok(v) => outcome(
            (v - L2_61_TARGET).abs() <= L2_61_TOL && dt <= L2_61_BUDGET,
            format!("L2(P61) = {v:.6} (target {L2_61_TARGET} ± {L2_61_TOL}) in {:.1} s", dt.as_secs_f64()),
        ),
        Err(e) => outcome(false, e),
    }
}

fn c3_substituted_chains() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for q in [13, 17] {
        let g = paley(q).unwrap();
        let alpha = stability_number(&g).unwrap() as f64;
        let (res, dt) = timed(|| -> Result<[f64; 4], String> {
            Ok([
                certified_bound(build_theta(&g))?,
                certified_bound(build_lt_graph(&g, 2, false))?,
                certified_bound(build_lt_graph(&g, 3, false))?,
                certified_bound(build_nplus_th(&g))?,
            ])
        });
        match res {
            Ok([l1, l2, l3, np]) => {
                let a = alpha <= l3 + CHAIN_SLACK
                    && l3 <= l2 + CHAIN_SLACK
                    && l2 <= l1 + CHAIN_SLACK
                    && (l1 - (q as f64).sqrt()).abs() <= CHAIN_SLACK;
                let b = l2 <= np + CHAIN_SLACK && np <= l1 + CHAIN_SLACK;
                pass &= a && b && dt <= CHAIN_BUDGET;
                parts.push(format!(
                    "q = {q}: alpha {alpha} <= L3 {l3:.6} <= L2 {l2:.6} <= L1 {l1:.6}; N+(TH) {np:.6} ({:.1} s)",
                    dt.as_secs_f64()
                ));
            }
            Err(e) => {
                pass = false;
                parts.push(format!("q = {q}: {e}"));
            }
        }
    }
    outcome(pass, parts.join("; "))
}

fn c6_tilde_equals_nplus() -> Outcome {
    let suite = suites::tilde_equals_nplus(20, 601);
    let c5 = Graph::cycle(5).unwrap();
    let k = fr_cone(&c5);
    let tl = certified_bound(build_tilde_lt(&k, 1));
    let np = certified_bound(build_nplus_explicit(&k, 1));
    let mut o = from_suites(&[suite], None);
    match (tl, np) {
        (Ok(a), Ok(b)) => {
            o.pass &= (a - 2.0).abs() <= FR_C5_TOL && (b - 2.0).abs() <= FR_C5_TOL;
            o.detail += &format!("; FR(C5): tilde-L1 {a:.7}, N+ {b:.7}");
        }
        (a, b) => {
            o.pass = false;
            o.detail += &format!("; FR(C5): {a:?} {b:?}");
        }
    }
    o
}

// Independent count of Σ_{i≤r} C(n,i).
fn binomial_sum_oracle(n: u128, r: u128) -> u128 {
    let mut total = 0;
    let mut c = 1u128;
    for i in 0..=r {
        if i > 0 {
            c = c * (n - i + 1) / i;
        }
        total += c;
    }
    total
}

fn c11_formulation_counters() -> Outcome {
    let tl = formulation_stats(Hierarchy::TildeLt, 61, 2);
    let np = formulation_stats(Hierarchy::NplusExplicit, 61, 2);
    let vars_ok = tl.variables == 37882 && tl.variables == binomial_sum_oracle(61, 3);
    let h_ok = h(61, 2) == 123 && np.matrices == 123 && h(61, 2) == 1 + 2 * 61;
    let tl_flag = tl.flags.iter().any(|f| f.starts_with("k_conditions"));
    let np_flag = np.flags.iter().any(|f| f.starts_with("matrices"));
    let mut sizes_ok = true;
    for t in 1..=3 {
        let s = formulation_stats(Hierarchy::TildeLt, 7, t);
        sizes_ok &= s.variables == binomial_sum_oracle(7, t as u128 + 1);
    }
    outcome(
        vars_ok && h_ok && tl_flag && np_flag && sizes_ok,
        format!(
            "tilde-L2 variables {} (n = 61), h(61,2) = {}, flags: tilde-L {:?}, N+ {:?}",
            tl.variables,
            h(61, 2),
            tl.flags,
            np.flags
        ),
    )
}

fn main() {
    let criteria: Vec<(&str, Box<dyn Fn() -> Outcome>)> = vec![
        ("theta on Paley graphs", Box::new(c1_theta_on_paley)),
        ("L2 on paley:61", Box::new(c2_l2_paley_61)),
        ("substituted chains for q in {13, 17}", Box::new(c3_substituted_chains)),
        ("block-diagonalization", Box::new(|| from_suites(&[suites::block_diagonalization(200, 401)], Some(SUITE_BUDGET)))),
        ("moment cone oracle", Box::new(|| from_suites(&[suites::moment_cone_oracle(200, 501)], Some(SUITE_BUDGET)))),
        ("tilde-L1 = N+", Box::new(c6_tilde_equals_nplus)),
        ("exactness at t >= alpha", Box::new(|| from_suites(&[suites::exactness(20, 701, 10)], None))),
        ("monotonicity and sandwich", Box::new(|| from_suites(&[suites::sandwich(50, 801, 10)], None))),
        ("Lasserre refinement", Box::new(|| from_suites(&[suites::lasserre_chain(20, 901, 8, false)], None))),
        (
            "solver soundness",
            Box::new(|| from_suites(&[suites::solver_soundness(30, 1001), suites::sdpa_round_trip(50, 1002)], None)),
        ),
        ("formulation counters", Box::new(c11_formulation_counters)),
    ];
    let mut failed = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        let (o, dt) = timed(run);
        if !o.pass {
            failed += 1;
        }
        println!(
            "{} criterion {:>2} ({name}): {} [{:.1} s]",
            if o.pass { "PASS" } else { "FAIL" },
            k + 1,
            o.detail,
            dt.as_secs_f64()
        );
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
