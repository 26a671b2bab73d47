//! Command-line front end: corpus generation, single-problem inspection and
//! the timing and error benchmarks.

pub mod study;
pub mod svg;

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use kbassoc::io::{corpus_write, read_problems};
use kbassoc::oracle::{
    permanent_marginals, true_marginals, EnumerationBudget, DEFAULT_MAX_ASSIGNMENTS,
    DEFAULT_TOP_TERMS,
};
use kbassoc::{
    generate_corpus, kbest, marginals, par, AssignmentProblem, Execution, MarginalTable,
    ScenarioConfig, Target,
};

use study::{ErrorOptions, TimingOptions, ERROR_HEADER, TIMING_HEADER};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "kbassoc",
    version,
    about = "K-best marginal association probabilities"
)]
pub struct Cli {
    /// Worker threads for parallel stages (default: all cores).
    #[arg(long, global = true)]
    pub workers: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a JSONL problem corpus from a scenario.
    Gen(GenArgs),
    /// Approximate marginals of each problem in a file.
    Solve(SolveArgs),
    /// Exact marginals by enumeration or permanents.
    Oracle(OracleArgs),
    /// Per-problem wall time of the marginal computation.
    BenchTiming(TimingArgs),
    /// Worst-case marginal error against exact truth.
    BenchError(ErrorArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Csv,
    Json,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum OracleMethod {
    Enumerate,
    Permanent,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    /// Scenario config (JSON). Defaults to the built-in street scenario.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Frame count of the built-in scenario.
    #[arg(long, default_value_t = 600)]
    pub frames: usize,
    /// Scenario seed (overrides the config).
    #[arg(long)]
    pub seed: Option<u64>,
    /// Null log-likelihood (overrides the config).
    #[arg(long, allow_hyphen_values = true)]
    pub null_cost: Option<f64>,
    /// Gating threshold on the ellipsoid distance (overrides the config).
    #[arg(long)]
    pub gate: Option<f64>,
    /// Output file (default: stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also write the effective scenario config here.
    #[arg(long)]
    pub write_config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    /// Problem file: one JSON problem or JSONL corpus.
    pub problems: PathBuf,
    /// Number of ranked assignments.
    #[arg(long, default_value_t = 200, value_parser = clap::value_parser!(u64).range(1..))]
    pub k: u64,
    /// Add exact marginals and the worst-case error.
    #[arg(long)]
    pub oracle: bool,
    /// Enumeration budget for exact truth (assignments).
    #[arg(long, default_value_t = DEFAULT_MAX_ASSIGNMENTS)]
    pub budget: u64,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    pub format: Format,
    /// Output file (default: stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    /// Problem file: one JSON problem or JSONL corpus.
    pub problems: PathBuf,
    /// Brute-force enumeration or permanent ratios.
    #[arg(long, value_enum, default_value_t = OracleMethod::Enumerate)]
    pub method: OracleMethod,
    /// Enumeration budget for exact truth (assignments).
    #[arg(long, default_value_t = DEFAULT_MAX_ASSIGNMENTS)]
    pub budget: u64,
    /// Fall back to the likeliest T assignments when over budget.
    #[arg(long)]
    pub top_terms: Option<usize>,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    pub format: Format,
    /// Output file (default: stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TimingArgs {
    /// JSONL problem corpus.
    pub corpus: PathBuf,
    /// Comma-separated K values.
    #[arg(long, value_delimiter = ',', default_value = "200", value_parser = clap::value_parser!(u64).range(1..))]
    pub k: Vec<u64>,
    /// Untimed runs before each measurement.
    #[arg(long, default_value_t = 0)]
    pub warmup: usize,
    /// Largest square completion also timed with the exact permanent (0 disables).
    #[arg(long, default_value_t = 20)]
    pub ryser_max_dim: usize,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Output file (default: stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also write an SVG plot here.
    #[arg(long)]
    pub svg: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ErrorArgs {
    /// JSONL problem corpus.
    pub corpus: PathBuf,
    /// Comma-separated K values.
    #[arg(long, value_delimiter = ',', default_value = "20,200", value_parser = clap::value_parser!(u64).range(1..))]
    pub k: Vec<u64>,
    /// Enumeration budget for exact truth (assignments).
    #[arg(long, default_value_t = DEFAULT_MAX_ASSIGNMENTS)]
    pub budget: u64,
    /// Truth from the likeliest T assignments when over budget (0 disables).
    #[arg(long, default_value_t = DEFAULT_TOP_TERMS)]
    pub top_terms: usize,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Output file (default: stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also write an SVG plot here.
    #[arg(long)]
    pub svg: Option<PathBuf>,
}

/// Parses `args` and runs the command, returning the process exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = write!(stderr, "{}", e.render());
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    if cli.workers == Some(0) {
        let _ = writeln!(stderr, "error: --workers must be at least 1");
        return EXIT_USAGE;
    }
    match execute(&cli, stdout, stderr) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e:#}");
            if matches!(
                e.downcast_ref::<kbassoc::Error>(),
                Some(kbassoc::Error::Usage(_))
            ) {
                EXIT_USAGE
            } else {
                EXIT_DATA
            }
        }
    }
}

fn execute(cli: &Cli, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<()> {
    match &cli.command {
        Command::Gen(a) => gen(a, cli.workers, stdout, stderr),
        Command::Solve(a) => solve(a, stdout),
        Command::Oracle(a) => oracle(a, cli.workers, stdout),
        Command::BenchTiming(a) => bench_timing(a, stdout, stderr),
        Command::BenchError(a) => bench_error(a, cli.workers, stdout, stderr),
    }
}

fn emit(out: Option<&Path>, text: &str, stdout: &mut dyn Write) -> Result<()> {
    match out {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => stdout.write_all(text.as_bytes()).context("writing output"),
    }
}

fn load(path: &Path) -> Result<Vec<AssignmentProblem>> {
    read_problems(path).with_context(|| format!("reading {}", path.display()))
}

fn ks(k: &[u64]) -> Vec<usize> {
    k.iter().map(|&k| k as usize).collect()
}

fn gen(
    a: &GenArgs,
    workers: Option<usize>,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> Result<()> {
    let mut cfg = match &a.config {
        Some(path) => {
            let text =
                fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            ScenarioConfig::from_json(&text).with_context(|| format!("in {}", path.display()))?
        }
        None => ScenarioConfig::demo(a.frames, a.seed.unwrap_or(1)),
    };
    if let Some(seed) = a.seed {
        cfg.seed = seed;
    }
    if let Some(v) = a.null_cost {
        cfg.null_log_lik = v;
    }
    if let Some(v) = a.gate {
        cfg.gate = v;
    }
    if let Some(path) = &a.write_config {
        fs::write(path, cfg.to_json() + "\n")
            .with_context(|| format!("writing {}", path.display()))?;
    }
    let corpus = par::with_workers(workers, || generate_corpus(&cfg, Execution::Parallel))?;
    let _ = writeln!(stderr, "generated {} problems", corpus.len());
    emit(a.out.as_deref(), &corpus_write(&corpus), stdout)
}

fn column_names(p: &AssignmentProblem) -> Vec<String> {
    (0..p.n_land())
        .map(|j| format!("l{j}"))
        .chain(std::iter::once("null".to_string()))
        .collect()
}

fn text_table(out: &mut String, p: &AssignmentProblem, t: &MarginalTable) {
    use std::fmt::Write as _;
    let cols = column_names(p);
    let _ = write!(out, "{:>6}", "meas");
    for c in &cols {
        let _ = write!(out, " {c:>10}");
    }
    out.push('\n');
    for k in 0..p.n_meas() {
        let _ = write!(out, "{k:>6}");
        for v in t.row(k) {
            let _ = write!(out, " {v:>10.6}");
        }
        out.push('\n');
    }
}

fn target_label(c: usize, n_land: usize) -> String {
    match Target::from_column(c, n_land) {
        Target::Landmark(j) => j.to_string(),
        Target::Null => "null".to_string(),
    }
}

fn solve(a: &SolveArgs, stdout: &mut dyn Write) -> Result<()> {
    use std::fmt::Write as _;
    let problems = load(&a.problems)?;
    let k = a.k as usize;
    let mut text = String::new();
    let mut csv = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["problem_id", "meas", "target", "w_bar"];
    if a.oracle {
        header.push("w_true");
    }
    csv.write_record(&header)?;
    let mut json = Vec::new();
    for (i, p) in problems.iter().enumerate() {
        let id = study::problem_id(p, i);
        let start = Instant::now();
        let ranked = kbest(p, k);
        let approx = marginals(p, &ranked);
        let elapsed = start.elapsed();
        let truth = if a.oracle {
            Some(true_marginals(p, EnumerationBudget::new(a.budget))?)
        } else {
            None
        };
        let delta = truth.as_ref().map(|t| t.max_abs_diff(&approx));
        match a.format {
            Format::Text => {
                let _ = writeln!(
                    text,
                    "problem {id}: n_meas={} n_land={} K={k} used={} exhausted={} gamma={:e} time={:.3}ms",
                    p.n_meas(),
                    p.n_land(),
                    approx.k_used,
                    ranked.exhausted,
                    approx.gamma,
                    elapsed.as_secs_f64() * 1e3
                );
                text_table(&mut text, p, &approx);
                if let (Some(t), Some(d)) = (&truth, delta) {
                    let _ = writeln!(text, "exact marginals:");
                    text_table(&mut text, p, t);
                    let _ = writeln!(text, "delta={d:e}");
                }
                text.push('\n');
            }
            Format::Csv => {
                for kk in 0..p.n_meas() {
                    for c in 0..approx.n_cols() {
                        let mut row = vec![
                            id.clone(),
                            kk.to_string(),
                            target_label(c, p.n_land()),
                            format!("{:e}", approx.at(kk, c)),
                        ];
                        if let Some(t) = &truth {
                            row.push(format!("{:e}", t.at(kk, c)));
                        }
                        csv.write_record(&row)?;
                    }
                }
            }
            Format::Json => {
                let rows: Vec<&[f64]> = (0..p.n_meas()).map(|r| approx.row(r)).collect();
                let mut obj = serde_json::json!({
                    "problem_id": id,
                    "k": k,
                    "k_used": approx.k_used,
                    "exhausted": ranked.exhausted,
                    "gamma": approx.gamma,
                    "columns": column_names(p),
                    "w_bar": rows,
                    "wall_time_ns": elapsed.as_nanos() as u64,
                });
                if let (Some(t), Some(d)) = (&truth, delta) {
                    let rows: Vec<&[f64]> = (0..p.n_meas()).map(|r| t.row(r)).collect();
                    obj["w_true"] = serde_json::json!(rows);
                    obj["delta"] = serde_json::json!(d);
                }
                json.push(obj);
            }
        }
    }
    let output = match a.format {
        Format::Text => text,
        Format::Csv => String::from_utf8(csv.into_inner()?)?,
        Format::Json => serde_json::to_string_pretty(&json)? + "\n",
    };
    emit(a.out.as_deref(), &output, stdout)
}

fn oracle(a: &OracleArgs, workers: Option<usize>, stdout: &mut dyn Write) -> Result<()> {
    use std::fmt::Write as _;
    let problems = load(&a.problems)?;
    let mut budget = EnumerationBudget::new(a.budget);
    if let Some(t) = a.top_terms {
        budget = budget.with_top_terms(t);
    }
    let tables = par::with_workers(workers, || {
        problems
            .iter()
            .map(|p| match a.method {
                OracleMethod::Enumerate => true_marginals(p, budget),
                OracleMethod::Permanent => permanent_marginals(p),
            })
            .collect::<kbassoc::Result<Vec<_>>>()
    })?;
    let mut text = String::new();
    let mut csv = csv::Writer::from_writer(Vec::new());
    csv.write_record(["problem_id", "meas", "target", "w"])?;
    let mut json = Vec::new();
    for (i, (p, t)) in problems.iter().zip(&tables).enumerate() {
        let id = study::problem_id(p, i);
        match a.format {
            Format::Text => {
                let _ = writeln!(
                    text,
                    "problem {id}: n_meas={} n_land={} truncated={}",
                    p.n_meas(),
                    p.n_land(),
                    t.truncated
                );
                text_table(&mut text, p, t);
                text.push('\n');
            }
            Format::Csv => {
                for k in 0..p.n_meas() {
                    for c in 0..t.n_cols() {
                        csv.write_record([
                            id.clone(),
                            k.to_string(),
                            target_label(c, p.n_land()),
                            format!("{:e}", t.at(k, c)),
                        ])?;
                    }
                }
            }
            Format::Json => {
                let rows: Vec<&[f64]> = (0..p.n_meas()).map(|r| t.row(r)).collect();
                json.push(serde_json::json!({
                    "problem_id": id,
                    "truncated": t.truncated,
                    "columns": column_names(p),
                    "w": rows,
                }));
            }
        }
    }
    let output = match a.format {
        Format::Text => text,
        Format::Csv => String::from_utf8(csv.into_inner()?)?,
        Format::Json => serde_json::to_string_pretty(&json)? + "\n",
    };
    emit(a.out.as_deref(), &output, stdout)
}

fn bench_timing(a: &TimingArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<()> {
    let corpus = load(&a.corpus)?;
    let opts = TimingOptions {
        ks: ks(&a.k),
        warmup: a.warmup,
        ryser_max_dim: a.ryser_max_dim,
    };
    // single worker so measurements are uncontended
    let records = study::run_timing(&corpus, &opts)?;
    let _ = writeln!(
        stderr,
        "timed {} runs over {} problems",
        records.len(),
        corpus.len()
    );
    let output = match a.format {
        Format::Json => {
            let v: Vec<_> = records.iter().map(|r| r.to_json()).collect();
            serde_json::to_string_pretty(&v)? + "\n"
        }
        _ => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(TIMING_HEADER)?;
            for r in &records {
                w.write_record(r.csv_row())?;
            }
            String::from_utf8(w.into_inner()?)?
        }
    };
    emit(a.out.as_deref(), &output, stdout)?;
    if let Some(path) = &a.svg {
        fs::write(path, svg::timing_scatter(&records))
            .with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}

fn bench_error(
    a: &ErrorArgs,
    workers: Option<usize>,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> Result<()> {
    let corpus = load(&a.corpus)?;
    let mut budget = EnumerationBudget::new(a.budget);
    if a.top_terms > 0 {
        budget = budget.with_top_terms(a.top_terms);
    }
    let opts = ErrorOptions {
        ks: ks(&a.k),
        budget,
        exec: Execution::Parallel,
    };
    let s = par::with_workers(workers, || study::run_error_study(&corpus, &opts))?;
    let _ = writeln!(
        stderr,
        "{} problems with exact truth, {} with truncated truth, {} skipped over budget",
        s.exact, s.truncated, s.skipped
    );
    if s.skipped > 0 {
        let _ = writeln!(
            stderr,
            "warning: {} problems exceeded the enumeration budget",
            s.skipped
        );
    }
    let output = match a.format {
        Format::Json => {
            let v: Vec<_> = s.records.iter().map(|r| r.to_json()).collect();
            serde_json::to_string_pretty(&v)? + "\n"
        }
        _ => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(ERROR_HEADER)?;
            for r in &s.records {
                w.write_record(r.csv_row())?;
            }
            String::from_utf8(w.into_inner()?)?
        }
    };
    emit(a.out.as_deref(), &output, stdout)?;
    if let Some(path) = &a.svg {
        fs::write(path, svg::error_order_statistics(&s.records, &opts.ks))
            .with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}
