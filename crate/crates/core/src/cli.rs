//! Command-line front end.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graphs::{paley, stability_number, Graph, ALPHA_ORACLE_MAX_N};
use crate::hierarchy::{build_for_graph, Hierarchy, InstanceStats, RelaxationInstance};
use crate::hierarchy::presolve::Emitted;
use crate::sdpsolve::{export_sdpa, verify_solution, Check, SolveOptions, SolveStatus};
use crate::suites::{self, Scale, SuiteReport};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERIFY: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_CAPACITY: i32 = 3;
pub const EXIT_NUMERICAL: i32 = 4;

#[derive(Parser, Debug)]
#[command(name = "blockhier", version, about = "Block-diagonal SDP hierarchies for stable sets")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve one relaxation and print the bound.
    Bound {
        #[command(flatten)]
        relax: RelaxArgs,
        #[command(flatten)]
        solver: SolverArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Bounds for several Paley graphs and relaxations.
    Table {
        /// Comma-separated primes q ≡ 1 (mod 4).
        #[arg(long, value_delimiter = ',', required = true)]
        q: Vec<usize>,
        /// Comma-separated columns: theta, l<t>, l<t>+ (with y ≥ 0),
        /// tildel<t>, lasserre<t>, nplus<t>, nplus-th.
        #[arg(long, value_delimiter = ',', default_value = "theta,l2")]
        columns: Vec<String>,
        #[command(flatten)]
        solver: SolverArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Run the property suites.
    Verify {
        #[arg(long, value_enum, default_value_t = Scale::Small)]
        scale: Scale,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Write a relaxation in SDPA sparse format.
    Export {
        #[command(flatten)]
        relax: RelaxArgs,
        /// Destination `.dat-s` file.
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
}

#[derive(Args, Debug)]
struct RelaxArgs {
    /// Graph file (`p n m` / `e i j` lines) or `paley:q`.
    #[arg(long)]
    graph: String,
    #[arg(long, value_enum, default_value_t = RelaxTag::Theta)]
    relax: RelaxTag,
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u32).range(1..))]
    t: u32,
    /// Add y ≥ 0 (relaxation `l` only).
    #[arg(long)]
    nonneg: bool,
}

#[derive(Args, Debug)]
struct SolverArgs {
    #[arg(long, default_value_t = 1e-8)]
    gap: f64,
    #[arg(long, default_value_t = 200)]
    max_iter: usize,
}

#[derive(Args, Debug)]
struct OutputArgs {
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (0 = all cores).
    #[arg(long, default_value_t = 0)]
    workers: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum RelaxTag {
    Theta,
    L,
    Tildel,
    Lasserre,
    NplusTh,
    Nplus,
}

impl From<RelaxTag> for Hierarchy {
    fn from(t: RelaxTag) -> Hierarchy {
        match t {
            RelaxTag::Theta => Hierarchy::Theta,
            RelaxTag::L => Hierarchy::Lt,
            RelaxTag::Tildel => Hierarchy::TildeLt,
            RelaxTag::Lasserre => Hierarchy::Lasserre,
            RelaxTag::NplusTh => Hierarchy::NplusTh,
            RelaxTag::Nplus => Hierarchy::NplusExplicit,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Text,
    Json,
    Csv,
}

/// Where the graph comes from.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum GraphSource {
    File(PathBuf),
    Paley(usize),
}

impl GraphSource {
    pub fn parse(s: &str) -> Result<GraphSource> {
        match s.strip_prefix("paley:") {
            Some(q) => q
                .trim()
                .parse()
                .map(GraphSource::Paley)
                .map_err(|_| Error::InvalidParameter(format!("bad Paley order '{q}'"))),
            None => Ok(GraphSource::File(PathBuf::from(s))),
        }
    }

    pub fn load(&self) -> Result<Graph> {
        match self {
            GraphSource::Paley(q) => paley(*q),
            GraphSource::File(p) => {
                let f = std::fs::File::open(p).map_err(|e| Error::io(p, e))?;
                Graph::read_text(std::io::BufReader::new(f))
            }
        }
    }
}

impl std::fmt::Display for GraphSource {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            GraphSource::File(p) => write!(f, "{}", p.display()),
            GraphSource::Paley(q) => write!(f, "paley:{q}"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct RunConfig {
    pub graph: GraphSource,
    pub relax: Hierarchy,
    pub t: usize,
    pub nonneg: bool,
    pub opts: SolveOptions,
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.t < 1 {
            return Err(Error::InvalidParameter("t must be at least 1".into()));
        }
        if !(self.opts.gap > 0.0 && self.opts.feas_tol > 0.0) {
            return Err(Error::InvalidParameter("tolerances must be positive".into()));
        }
        if self.nonneg && self.relax != Hierarchy::Lt {
            return Err(Error::InvalidParameter("--nonneg applies to --relax l only".into()));
        }
        Ok(())
    }

    pub fn build(&self) -> Result<(Graph, RelaxationInstance)> {
        self.validate()?;
        let g = self.graph.load()?;
        let inst = build_for_graph(&g, self.relax, self.t, self.nonneg)?;
        Ok((g, inst))
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct BoundReport {
    pub graph: String,
    pub n: usize,
    pub relax: Hierarchy,
    pub t: usize,
    pub nonneg: bool,
    pub value: f64,
    pub status: SolveStatus,
    pub rel_gap: f64,
    pub iterations: usize,
    pub verified: bool,
    pub checks: Vec<Check>,
    pub alpha: Option<usize>,
    pub stats: InstanceStats,
    pub emitted: Emitted,
    pub seconds: f64,
}

fn alpha_if_small(g: &Graph) -> Option<usize> {
    (g.n() <= ALPHA_ORACLE_MAX_N).then(|| stability_number(g).ok()).flatten()
}

/// Builds, solves and verifies one relaxation.
pub fn cmd_bound(cfg: &RunConfig) -> Result<BoundReport> {
    let start = Instant::now();
    let (g, inst) = cfg.build()?;
    let (value, r) = inst.solve(&cfg.opts)?;
    let report = verify_solution(&inst.sdp, &r, 10.0 * cfg.opts.gap.max(cfg.opts.feas_tol));
    Ok(BoundReport {
        graph: cfg.graph.to_string(),
        n: g.n(),
        relax: cfg.relax,
        t: cfg.t,
        nonneg: cfg.nonneg,
        value,
        status: r.status,
        rel_gap: r.rel_gap,
        iterations: r.iterations,
        verified: report.pass,
        checks: report.checks,
        alpha: alpha_if_small(&g),
        stats: inst.stats(),
        emitted: inst.emitted,
        seconds: start.elapsed().as_secs_f64(),
    })
}

fn orders_text(stats: &InstanceStats) -> String {
    if stats.block_orders.is_empty() {
        return "none".into();
    }
    stats.block_orders.iter().map(|(o, c)| format!("{c} of order {o}")).collect::<Vec<_>>().join(", ")
}

pub fn render_bound(r: &BoundReport, format: Format) -> Result<String> {
    Ok(match format {
        Format::Json => serde_json::to_string_pretty(r).map_err(|e| Error::Argument(e.to_string()))? + "\n",
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            let row = [
                r.graph.clone(),
                r.n.to_string(),
                r.relax.to_string(),
                r.t.to_string(),
                r.nonneg.to_string(),
                format!("{:?}", r.value),
                r.status.to_string(),
                format!("{:?}", r.rel_gap),
                r.iterations.to_string(),
                r.verified.to_string(),
                r.alpha.map(|a| a.to_string()).unwrap_or_default(),
                r.stats.variables.to_string(),
                r.stats.psd_blocks.to_string(),
                r.stats.scalar_constraints.to_string(),
                format!("{:.3}", r.seconds),
            ];
            let head = [
                "graph", "n", "relax", "t", "nonneg", "value", "status", "rel_gap", "iterations", "verified", "alpha",
                "variables", "psd_blocks", "scalar_constraints", "seconds",
            ];
            w.write_record(head).and_then(|_| w.write_record(&row)).map_err(|e| Error::Argument(e.to_string()))?;
            String::from_utf8(w.into_inner().map_err(|e| Error::Argument(e.to_string()))?).expect("utf-8 csv")
        }
        Format::Text => {
            let mut s = String::new();
            let _ = writeln!(s, "graph       {} (n = {})", r.graph, r.n);
            let nn = if r.nonneg { ", y >= 0" } else { "" };
            let _ = writeln!(s, "relaxation  {}, t = {}{nn}", r.relax, r.t);
            let _ = writeln!(s, "bound       {:.6}", r.value);
            let _ = writeln!(s, "status      {} (rel. gap {:.1e}, {} iterations)", r.status, r.rel_gap, r.iterations);
            let _ = writeln!(s, "verified    {}", if r.verified { "yes" } else { "NO" });
            if let Some(a) = r.alpha {
                let _ = writeln!(s, "alpha       {a}");
            }
            let _ = writeln!(
                s,
                "size        {} variables, PSD blocks {}, {} scalar constraints",
                r.stats.variables,
                orders_text(&r.stats),
                r.stats.scalar_constraints
            );
            let _ = writeln!(s, "time        {:.2} s", r.seconds);
            s
        }
    })
}

/// One table column: a relaxation at a level.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Column {
    pub label: String,
    pub relax: Hierarchy,
    pub t: usize,
    pub nonneg: bool,
}

impl Column {
    pub fn parse(label: &str) -> Result<Column> {
        let bad = || Error::InvalidParameter(format!("unknown column '{label}'"));
        let (body, nonneg) = match label.strip_suffix('+') {
            Some(b) => (b, true),
            None => (label, false),
        };
        if body == "theta" || body == "nplus-th" {
            if nonneg {
                return Err(bad());
            }
            let relax = Hierarchy::from_tag(body).ok_or_else(bad)?;
            return Ok(Column { label: label.into(), relax, t: 1, nonneg });
        }
        let split = body.find(|c: char| c.is_ascii_digit()).ok_or_else(bad)?;
        let relax = Hierarchy::from_tag(&body[..split]).ok_or_else(bad)?;
        let t: usize = body[split..].parse().map_err(|_| bad())?;
        if t == 0 || (nonneg && relax != Hierarchy::Lt) {
            return Err(bad());
        }
        Ok(Column { label: label.into(), relax, t, nonneg })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Cell {
    pub column: String,
    pub value: Option<f64>,
    /// Three-decimal rendering, or "-".
    pub display: String,
    pub status: Option<SolveStatus>,
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TableRow {
    pub q: usize,
    pub cells: Vec<Cell>,
    pub alpha: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<TableRow>,
}

fn table_cell(g: &Graph, col: &Column, opts: &SolveOptions) -> Cell {
    let outcome = build_for_graph(g, col.relax, col.t, col.nonneg).and_then(|inst| inst.solve(opts));
    match outcome {
        Ok((v, r)) if r.status == SolveStatus::Optimal => Cell {
            column: col.label.clone(),
            value: Some(v),
            display: format!("{v:.3}"),
            status: Some(r.status),
            error: None,
        },
        Ok((_, r)) => Cell {
            column: col.label.clone(),
            value: None,
            display: "-".into(),
            status: Some(r.status),
            error: Some(format!("solver stopped: {}", r.status)),
        },
        Err(e) => Cell { column: col.label.clone(), value: None, display: "-".into(), status: None, error: Some(e.to_string()) },
    }
}

/// One row per `q`, cells computed concurrently and assembled in
/// `(q, column)` order.
pub fn cmd_table(qs: &[usize], columns: &[String], opts: &SolveOptions) -> Result<Table> {
    if qs.is_empty() {
        return Err(Error::Argument("empty q list".into()));
    }
    if columns.is_empty() {
        return Err(Error::Argument("empty column list".into()));
    }
    let cols = columns.iter().map(|c| Column::parse(c.trim())).collect::<Result<Vec<_>>>()?;
    let graphs = qs.iter().map(|&q| paley(q)).collect::<Result<Vec<_>>>()?;
    let jobs: Vec<(usize, usize)> = (0..qs.len()).flat_map(|r| (0..cols.len()).map(move |c| (r, c))).collect();
    let cells = crate::par::map(&jobs, |&(r, c)| table_cell(&graphs[r], &cols[c], opts));
    let alphas = crate::par::map(&graphs, alpha_if_small);
    let mut cells = cells.into_iter();
    let rows = qs
        .iter()
        .zip(alphas)
        .map(|(&q, alpha)| TableRow { q, cells: cells.by_ref().take(cols.len()).collect(), alpha })
        .collect();
    Ok(Table { columns: cols.into_iter().map(|c| c.label).collect(), rows })
}

pub fn render_table(t: &Table, format: Format) -> Result<String> {
    Ok(match format {
        Format::Json => serde_json::to_string_pretty(t).map_err(|e| Error::Argument(e.to_string()))? + "\n",
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            let mut head = vec!["q".to_string()];
            head.extend(t.columns.iter().cloned());
            head.push("alpha".into());
            w.write_record(&head).map_err(|e| Error::Argument(e.to_string()))?;
            for r in &t.rows {
                let mut rec = vec![r.q.to_string()];
                rec.extend(r.cells.iter().map(|c| c.value.map(|v| format!("{v:?}")).unwrap_or_default()));
                rec.push(r.alpha.map(|a| a.to_string()).unwrap_or_default());
                w.write_record(&rec).map_err(|e| Error::Argument(e.to_string()))?;
            }
            String::from_utf8(w.into_inner().map_err(|e| Error::Argument(e.to_string()))?).expect("utf-8 csv")
        }
        Format::Text => {
            let width = t.columns.iter().map(|c| c.chars().count()).max().unwrap_or(0).max(8);
            let mut s = format!("{:>5}", "q");
            for c in &t.columns {
                let _ = write!(s, "  {c:>width$}");
            }
            let _ = writeln!(s, "  {:>5}", "alpha");
            let mut notes = Vec::new();
            for r in &t.rows {
                let _ = write!(s, "{:>5}", r.q);
                for c in &r.cells {
                    let _ = write!(s, "  {:>width$}", c.display);
                    if let Some(e) = &c.error {
                        notes.push(format!("q = {}, {}: {e}", r.q, c.column));
                    }
                }
                let alpha = r.alpha.map(|a| a.to_string()).unwrap_or_else(|| "-".into());
                let _ = writeln!(s, "  {alpha:>5}");
            }
            for n in notes {
                let _ = writeln!(s, "  {n}");
            }
            s
        }
    })
}

pub fn render_suites(reports: &[SuiteReport], format: Format) -> Result<String> {
    Ok(match format {
        Format::Json => serde_json::to_string_pretty(reports).map_err(|e| Error::Argument(e.to_string()))? + "\n",
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(["suite", "passed", "failed", "seconds"]).map_err(|e| Error::Argument(e.to_string()))?;
            for r in reports {
                w.write_record([r.name.to_string(), r.passed.to_string(), r.failed.to_string(), format!("{:.3}", r.seconds)])
                    .map_err(|e| Error::Argument(e.to_string()))?;
            }
            String::from_utf8(w.into_inner().map_err(|e| Error::Argument(e.to_string()))?).expect("utf-8 csv")
        }
        Format::Text => {
            let mut s = String::new();
            for r in reports {
                let verdict = if r.failed == 0 { "PASS" } else { "FAIL" };
                let _ = writeln!(s, "{verdict} {:<28} {:>4}/{:<4} {:>8.2} s", r.name, r.passed, r.passed + r.failed, r.seconds);
                for f in r.failures.iter().take(5) {
                    let _ = writeln!(s, "     {f}");
                }
            }
            s
        }
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct ExportReport {
    pub path: PathBuf,
    pub graph: String,
    pub relax: Hierarchy,
    pub t: usize,
    pub stats: InstanceStats,
    pub emitted: Emitted,
}

pub fn cmd_export(cfg: &RunConfig, out: &std::path::Path) -> Result<ExportReport> {
    let (_, inst) = cfg.build()?;
    std::fs::write(out, export_sdpa(&inst.sdp)).map_err(|e| Error::io(out, e))?;
    Ok(ExportReport {
        path: out.to_path_buf(),
        graph: cfg.graph.to_string(),
        relax: cfg.relax,
        t: cfg.t,
        stats: inst.stats(),
        emitted: inst.emitted,
    })
}

fn render_export(r: &ExportReport, format: Format) -> Result<String> {
    Ok(match format {
        Format::Json => serde_json::to_string_pretty(r).map_err(|e| Error::Argument(e.to_string()))? + "\n",
        Format::Csv => format!(
            "path,variables,psd_blocks,scalar_constraints\n{},{},{},{}\n",
            r.path.display(),
            r.stats.variables,
            r.stats.psd_blocks,
            r.stats.scalar_constraints
        ),
        Format::Text => format!(
            "wrote {}\nvariables   {}\nPSD blocks  {}\nscalars     {}\nemitted     {} variables, {} PSD blocks, {} scalars before presolve\n",
            r.path.display(),
            r.stats.variables,
            orders_text(&r.stats),
            r.stats.scalar_constraints,
            r.emitted.variables,
            r.emitted.psd_blocks,
            r.emitted.scalars
        ),
    })
}

/// Exit code for an error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Capacity(_) => EXIT_CAPACITY,
        Error::Numerical(_) | Error::Infeasible(_) | Error::Model(_) => EXIT_NUMERICAL,
        _ => EXIT_USAGE,
    }
}

fn emit(text: &str, out: Option<&PathBuf>) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, text).map_err(|e| Error::io(p, e)),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn config(relax: &RelaxArgs, solver: Option<&SolverArgs>) -> Result<RunConfig> {
    let mut opts = SolveOptions::default();
    if let Some(s) = solver {
        opts.gap = s.gap;
        opts.max_iter = s.max_iter;
    }
    let cfg = RunConfig {
        graph: GraphSource::parse(&relax.graph)?,
        relax: relax.relax.into(),
        t: relax.t as usize,
        nonneg: relax.nonneg,
        opts,
    };
    cfg.validate()?;
    Ok(cfg)
}

fn execute(cmd: Command) -> Result<i32> {
    match cmd {
        Command::Bound { relax, solver, output } => {
            let cfg = config(&relax, Some(&solver))?;
            let r = crate::par::with_workers(output.workers, || cmd_bound(&cfg))?;
            emit(&render_bound(&r, output.format)?, output.out.as_ref())?;
            Ok(if r.status != SolveStatus::Optimal {
                EXIT_NUMERICAL
            } else if !r.verified {
                EXIT_VERIFY
            } else {
                EXIT_OK
            })
        }
        Command::Table { q, columns, solver, output } => {
            let opts = SolveOptions { gap: solver.gap, max_iter: solver.max_iter, ..SolveOptions::default() };
            if !(opts.gap > 0.0) {
                return Err(Error::InvalidParameter("--gap must be positive".into()));
            }
            let t = crate::par::with_workers(output.workers, || cmd_table(&q, &columns, &opts))?;
            emit(&render_table(&t, output.format)?, output.out.as_ref())?;
            Ok(EXIT_OK)
        }
        Command::Verify { scale, output } => {
            let reports = crate::par::with_workers(output.workers, || suites::run(scale));
            emit(&render_suites(&reports, output.format)?, output.out.as_ref())?;
            Ok(if reports.iter().all(|r| r.failed == 0) { EXIT_OK } else { EXIT_VERIFY })
        }
        Command::Export { relax, out, format } => {
            let cfg = config(&relax, None)?;
            let r = cmd_export(&cfg, &out)?;
            emit(&render_export(&r, format)?, None)?;
            Ok(EXIT_OK)
        }
    }
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match execute(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
