//! `metpart` command-line front end.

mod verify;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use metpart::io::load_graph;
use metpart::search::{
    maximize_with, minimize_with, sweep_length, sweep_p, OptimizeOptions, SearchOptions, SweepRow,
};
use metpart::spectral::{eigenvalues, Method};
use metpart::{MetricGraph, OptResult, PExp, PartitionClass, Problem};
use serde::Serialize;

#[derive(Parser, Debug)]
#[command(name = "metpart", version, about = "Spectral partitions of metric graphs")]
struct Cli {
    /// Worker threads (default: available cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Print the first eigenvalues of a graph.
    Eig(EigArgs),
    /// Optimal partitions.
    #[command(subcommand)]
    Partition(PartitionCommand),
    /// Optimal energies over a grid of exponents or edge lengths.
    Sweep(SweepArgs),
    /// Run the fixture verification suite.
    Verify(VerifyArgs),
}

#[derive(Subcommand, Debug)]
enum PartitionCommand {
    /// Minimal energy over the chosen class.
    Minimize(PartitionArgs),
    /// Largest smallest-cluster eigenvalue over rigid partitions.
    Maximize(PartitionArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum EigMethod {
    Secular,
    Fem,
    CrossCheck,
}

#[derive(Args, Debug)]
struct Output {
    /// Write results here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(Args, Debug)]
struct EigArgs {
    #[arg(long)]
    graph: PathBuf,
    /// Number of eigenvalues.
    #[arg(long, default_value_t = 6)]
    count: usize,
    #[arg(long, value_enum, default_value = "secular")]
    method: EigMethod,
    #[command(flatten)]
    output: Output,
}

#[derive(Args, Debug)]
struct SearchArgs {
    #[arg(long)]
    graph: PathBuf,
    #[arg(long)]
    k: usize,
    #[arg(long, default_value = "dirichlet")]
    problem: Problem,
    #[arg(long, default_value = "rigid")]
    class: PartitionClass,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Interior cuts allowed per edge (default k - 1).
    #[arg(long)]
    max_cuts_per_edge: Option<usize>,
}

#[derive(Args, Debug)]
struct PartitionArgs {
    #[command(flatten)]
    search: SearchArgs,
    /// Power-mean exponent, a positive number or `inf`.
    #[arg(long, default_value = "inf")]
    p: PExp,
    #[command(flatten)]
    output: Output,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[command(flatten)]
    search: SearchArgs,
    /// Comma-separated exponents (`inf` allowed).
    #[arg(long, value_delimiter = ',', conflicts_with_all = ["edge", "lengths"])]
    p_grid: Option<Vec<String>>,
    /// Edge whose length is swept.
    #[arg(long, requires = "lengths")]
    edge: Option<String>,
    /// Comma-separated lengths for `--edge`.
    #[arg(long, value_delimiter = ',', requires = "edge")]
    lengths: Option<Vec<String>>,
    /// Exponent for a length sweep.
    #[arg(long, default_value = "inf")]
    p: PExp,
    #[command(flatten)]
    output: Output,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    /// Only check this fixture.
    #[arg(long)]
    fixture: Option<String>,
    /// Replace every check tolerance.
    #[arg(long)]
    tolerance: Option<f64>,
    #[command(flatten)]
    output: Output,
}

/// 2 for file and parse failures, 3 for invalid requests.
fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<metpart::Error>() {
            return match e {
                metpart::Error::Io(_) | metpart::Error::Json(_) => 2,
                _ => 3,
            };
        }
        if cause.downcast_ref::<std::io::Error>().is_some()
            || cause.downcast_ref::<csv::Error>().is_some()
            || cause.downcast_ref::<serde_json::Error>().is_some()
        {
            return 2;
        }
    }
    3
}

fn emit(output: &Output, default: Format, json: impl Serialize, csv_rows: impl FnOnce(&mut csv::Writer<Vec<u8>>) -> Result<()>) -> Result<()> {
    let bytes = match output.format.unwrap_or(default) {
        Format::Json => {
            let mut s = serde_json::to_string_pretty(&json)?;
            s.push('\n');
            s.into_bytes()
        }
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            csv_rows(&mut w)?;
            w.into_inner().context("flushing csv")?
        }
    };
    match &output.out {
        Some(path) => fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))?,
        None => std::io::stdout().write_all(&bytes)?,
    }
    Ok(())
}

fn graph(path: &Path) -> Result<MetricGraph> {
    load_graph(path).with_context(|| format!("reading graph {}", path.display()))
}

fn search_options(a: &SearchArgs) -> SearchOptions {
    SearchOptions {
        class: a.class,
        max_cuts_per_edge: a.max_cuts_per_edge,
        optimize: OptimizeOptions {
            seed: a.seed,
            ..OptimizeOptions::default()
        },
        ..SearchOptions::default()
    }
}

fn json_cell<T: Serialize>(x: &T) -> Result<String> {
    Ok(serde_json::to_string(x)?)
}

fn cmd_eig(a: &EigArgs) -> Result<u8> {
    let g = graph(&a.graph)?;
    let method = match a.method {
        EigMethod::Secular => Method::Secular,
        EigMethod::Fem => Method::Fem,
        EigMethod::CrossCheck => Method::CrossCheck,
    };
    let r = eigenvalues(&g, a.count, method)?;
    for (i, v) in r.eigenvalues.iter().enumerate() {
        eprintln!("mu_{:<3} {v:.12}  (multiplicity {})", i + 1, r.multiplicities[i]);
    }
    emit(&a.output, Format::Json, &r, |w| {
        w.write_record(["index", "eigenvalue", "multiplicity", "error", "fem"])?;
        for (i, v) in r.eigenvalues.iter().enumerate() {
            let fem = r.fem.as_ref().map(|f| f[i].to_string()).unwrap_or_default();
            w.write_record([
                (i + 1).to_string(),
                v.to_string(),
                r.multiplicities[i].to_string(),
                r.errors[i].to_string(),
                fem,
            ])?;
        }
        Ok(())
    })?;
    Ok(0)
}

fn summarise(r: &OptResult) {
    eprintln!("value     {:.12}", r.value);
    eprintln!("template  {}", r.template.id);
    eprintln!("positions {:?}", r.positions);
    let f = r.summary.flags;
    eprintln!(
        "flags     rigid={} faithful={} internally-connected={} proper={}",
        f.rigid, f.faithful, f.internally_connected, f.proper
    );
    if !r.ties.is_empty() {
        eprintln!("ties      {}", r.ties.join("; "));
    }
    if r.boundary {
        eprintln!("note      optimum lies on the boundary of its template");
    }
}

fn cmd_partition(cmd: &PartitionCommand) -> Result<u8> {
    let (a, maximize) = match cmd {
        PartitionCommand::Minimize(a) => (a, false),
        PartitionCommand::Maximize(a) => (a, true),
    };
    let g = graph(&a.search.graph)?;
    let opts = search_options(&a.search);
    let r = if maximize {
        if a.search.class != PartitionClass::Rigid {
            bail!(metpart::Error::Precondition("maximisation runs over rigid partitions".into()));
        }
        maximize_with(&g, a.search.k, a.search.problem, &opts)?
    } else {
        minimize_with(&g, a.search.k, a.search.problem, a.p, &opts)?
    };
    summarise(&r);
    emit(&a.output, Format::Json, &r, |w| {
        w.write_record(["value", "template", "positions", "boundary", "ties", "certified"])?;
        w.write_record([
            r.value.to_string(),
            r.template.id.clone(),
            json_cell(&r.positions)?,
            r.boundary.to_string(),
            r.ties.join(";"),
            r.certified.to_string(),
        ])?;
        Ok(())
    })?;
    Ok(0)
}

fn parse_list<T: std::str::FromStr<Err = metpart::Error>>(items: &[String]) -> Result<Vec<T>> {
    items
        .iter()
        .filter(|s| !s.trim().is_empty())
        .map(|s| s.trim().parse::<T>().map_err(anyhow::Error::from))
        .collect()
}

fn parse_lengths(items: &[String]) -> Result<Vec<f64>> {
    items
        .iter()
        .filter(|s| !s.trim().is_empty())
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| metpart::Error::Precondition(format!("invalid length `{s}`")).into())
        })
        .collect()
}

fn cmd_sweep(a: &SweepArgs) -> Result<u8> {
    let g = graph(&a.search.graph)?;
    // report every tied template so switches are visible
    let opts = SearchOptions {
        exhaustive: true,
        ..search_options(&a.search)
    };
    let (kind, rows): (&str, Vec<SweepRow>) = match (&a.p_grid, &a.edge, &a.lengths) {
        (Some(ps), _, _) => {
            let ps: Vec<PExp> = parse_list(ps)?;
            ("p", sweep_p(&g, a.search.k, a.search.problem, &ps, &opts)?)
        }
        (None, Some(edge), Some(ls)) => {
            let e = g
                .edge_index(edge)
                .ok_or_else(|| metpart::Error::UnknownEdge(edge.clone()))?;
            let ls = parse_lengths(ls)?;
            let rows = sweep_length(&g, e, &ls, a.search.k, a.search.problem, a.p, &opts)?;
            ("length", rows)
        }
        _ => bail!(metpart::Error::Precondition(
            "give --p-grid or --edge with --lengths".into()
        )),
    };
    for r in &rows {
        eprintln!(
            "{kind}={:<8} {:.12} {}{}",
            r.parameter,
            r.value,
            r.template,
            if r.switch { "  (switch)" } else { "" }
        );
    }
    emit(&a.output, Format::Csv, &rows, |w| {
        w.write_record([kind, "value", "template", "positions", "boundary", "switch", "ties"])?;
        for r in &rows {
            let param = if r.parameter.is_infinite() {
                "inf".to_string()
            } else {
                r.parameter.to_string()
            };
            w.write_record([
                param,
                r.value.to_string(),
                r.template.clone(),
                json_cell(&r.positions)?,
                r.boundary.to_string(),
                r.switch.to_string(),
                r.ties.join(";"),
            ])?;
        }
        Ok(())
    })?;
    Ok(0)
}

fn cmd_verify(a: &VerifyArgs) -> Result<u8> {
    if let Some(t) = a.tolerance {
        if !(t.is_finite() && t > 0.0) {
            bail!(metpart::Error::Precondition(format!("tolerance must be positive, got {t}")));
        }
    }
    let checks = verify::run(a.fixture.as_deref(), a.tolerance)?;
    let failed = checks.iter().filter(|c| !c.pass).count();
    for c in &checks {
        let values = match (c.value, c.expected, c.tolerance) {
            (Some(v), Some(e), Some(t)) => format!(" value={v:.12} expected={e:.12} tol={t:.1e}"),
            _ => String::new(),
        };
        eprintln!(
            "{} {:<16} {}{}{}",
            if c.pass { "PASS" } else { "FAIL" },
            c.fixture,
            c.check,
            values,
            if c.detail.is_empty() { String::new() } else { format!(" ({})", c.detail) }
        );
    }
    eprintln!("{} checks, {} failed", checks.len(), failed);
    emit(&a.output, Format::Json, &checks, |w| {
        w.write_record(["fixture", "check", "value", "expected", "tolerance", "pass", "detail"])?;
        let opt = |x: Option<f64>| x.map(|v| v.to_string()).unwrap_or_default();
        for c in &checks {
            w.write_record([
                c.fixture.clone(),
                c.check.clone(),
                opt(c.value),
                opt(c.expected),
                opt(c.tolerance),
                c.pass.to_string(),
                c.detail.clone(),
            ])?;
        }
        Ok(())
    })?;
    Ok(if failed == 0 { 0 } else { 1 })
}

fn run(cli: &Cli) -> Result<u8> {
    if let Some(n) = cli.threads {
        if n == 0 {
            bail!(metpart::Error::Precondition("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the thread pool")
            .map_err(|e| anyhow::anyhow!(metpart::Error::Precondition(format!("{e:#}"))))?;
    }
    match &cli.command {
        Command::Eig(a) => cmd_eig(a),
        Command::Partition(c) => cmd_partition(c),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Verify(a) => cmd_verify(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 3 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
