//! Batch experiment driver: single runs, n-sweeps and rate fits, with the
//! plain-text table formats used for plotting.

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use crate::analysis::{align, error_norms, fit_rate};
use crate::measure::{build_test_case, exact_solution, TestCase};
use crate::solver::{solve, SolveTrace, SolverConfig};
use crate::{Error, Result};

pub const ITERATION_HEADER: &str = "k residual damping";
pub const ERROR_HEADER: &str = "N Linfty L2 L1";
pub const DEFAULT_N_LIST: [usize; 5] = [8, 16, 32, 64, 128];

/// Resolutions above this are accepted but slow.
const LONG_RUNNING_N: usize = 128;

#[derive(Parser, Debug)]
#[command(name = "moment-measure", version, about = "Damped Newton solver for discrete moment measures")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Solve one test case and write its residual history.
    Run(RunArgs),
    /// Solve a test case for several resolutions and write the error table.
    Sweep(SweepArgs),
    /// Fit convergence slopes from an error table.
    Rates(RatesArgs),
}

#[derive(Args, Debug, Clone)]
pub struct SolveArgs {
    /// Test case id.
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..=5))]
    pub test: u32,
    /// Newton stopping tolerance, relative to |nu|.
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    /// Maximum number of Newton iterations.
    #[arg(long, default_value_t = 100)]
    pub max_iter: usize,
    /// Output directory.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct RunArgs {
    #[command(flatten)]
    pub solve: SolveArgs,
    /// Grid resolution (positive, even).
    #[arg(long)]
    pub n: usize,
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    #[command(flatten)]
    pub solve: SolveArgs,
    /// Comma-separated grid resolutions.
    #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_N_LIST)]
    pub n_list: Vec<usize>,
    /// Worker threads for independent runs (default: all cores).
    #[arg(long)]
    pub threads: Option<usize>,
}

#[derive(Args, Debug)]
pub struct RatesArgs {
    /// Table in the `N Linfty L2 L1` format.
    pub file: PathBuf,
}

impl SolveArgs {
    pub fn config(&self) -> Result<SolverConfig> {
        let config = SolverConfig {
            tolerance: self.tol,
            max_newton_iterations: self.max_iter,
            ..SolverConfig::default()
        };
        config.validate()?;
        Ok(config)
    }
}

/// One row of a residual history file.
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct IterationRecord {
    pub k: usize,
    pub residual: f64,
    /// 1 iff the step taken from this iterate was damped.
    pub damping: u8,
}

pub fn iteration_records(trace: &SolveTrace) -> Vec<IterationRecord> {
    trace
        .iterations
        .iter()
        .map(|it| IterationRecord { k: it.k, residual: it.residual, damping: it.damped() as u8 })
        .collect()
}

/// Summary of one solve followed by error measurement.
#[derive(Clone, Debug, PartialEq)]
pub struct RunRecord {
    pub test: u32,
    pub n: usize,
    pub big_n: usize,
    pub l_inf: f64,
    pub l2_nu: f64,
    pub l1_nu: f64,
    pub newton_iterations: usize,
    pub wall_time: Duration,
    pub iterations: Vec<IterationRecord>,
}

impl fmt::Display for RunRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "test {} n {} N {}: Linfty {:.6e} L2 {:.6e} L1 {:.6e}, {} Newton iterations, {:.2} s",
            self.test,
            self.n,
            self.big_n,
            self.l_inf,
            self.l2_nu,
            self.l1_nu,
            self.newton_iterations,
            self.wall_time.as_secs_f64()
        )
    }
}

/// One row of an error table.
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct ErrorRow {
    pub big_n: usize,
    pub l_inf: f64,
    pub l2: f64,
    pub l1: f64,
}

impl From<&RunRecord> for ErrorRow {
    fn from(r: &RunRecord) -> Self {
        ErrorRow { big_n: r.big_n, l_inf: r.l_inf, l2: r.l2_nu, l1: r.l1_nu }
    }
}

#[derive(Copy, Clone, Debug, PartialEq)]
pub struct Slopes {
    pub l_inf: f64,
    pub l2: f64,
    pub l1: f64,
}

impl fmt::Display for Slopes {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "slopes: Linfty {:.4} L2 {:.4} L1 {:.4}", self.l_inf, self.l2, self.l1)
    }
}

pub fn iteration_file_name(test: u32, n: usize) -> String {
    format!("test{test}-n{n}.txt")
}

pub fn error_file_name(test: u32) -> String {
    format!("test{test}.txt")
}

// `{:e}` prints the shortest representation that parses back to the same f64.
pub fn format_iterations(rows: &[IterationRecord]) -> String {
    let mut s = format!("{ITERATION_HEADER}\n");
    for r in rows {
        s.push_str(&format!("{} {:e} {}\n", r.k, r.residual, r.damping));
    }
    s
}

pub fn format_error_table(rows: &[ErrorRow]) -> String {
    let mut s = format!("{ERROR_HEADER}\n");
    for r in rows {
        s.push_str(&format!("{} {:e} {:e} {:e}\n", r.big_n, r.l_inf, r.l2, r.l1));
    }
    s
}

fn parse_field<T: std::str::FromStr>(field: &str, line: usize, what: &str) -> Result<T> {
    field.parse().map_err(|_| Error::Parse { line, message: format!("invalid {what} `{field}`") })
}

pub fn parse_error_table(text: &str) -> Result<Vec<ErrorRow>> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    match lines.next() {
        Some((_, header)) if header.split_whitespace().eq(ERROR_HEADER.split(' ')) => {}
        Some((line, header)) => {
            return Err(Error::Parse { line, message: format!("expected header `{ERROR_HEADER}`, found `{header}`") })
        }
        None => return Err(Error::Parse { line: 1, message: "empty file".into() }),
    }
    let mut rows = Vec::new();
    for (line, text) in lines {
        if text.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = text.split_whitespace().collect();
        if fields.len() != 4 {
            return Err(Error::Parse { line, message: format!("expected 4 columns, found {}", fields.len()) });
        }
        let big_n = parse_field(fields[0], line, "N")?;
        let mut errs = [0.0f64; 3];
        for (e, f) in errs.iter_mut().zip(&fields[1..]) {
            *e = parse_field(f, line, "error value")?;
            if !(*e > 0.0 && e.is_finite()) {
                return Err(Error::Parse { line, message: format!("error value `{f}` must be positive") });
            }
        }
        rows.push(ErrorRow { big_n, l_inf: errs[0], l2: errs[1], l1: errs[2] });
    }
    Ok(rows)
}

pub fn fit_slopes(rows: &[ErrorRow]) -> Result<Slopes> {
    if rows.len() < 2 {
        return Err(Error::DegenerateFit(format!("need ≥ 2 rows, got {}", rows.len())));
    }
    let column = |f: fn(&ErrorRow) -> f64| fit_rate(&rows.iter().map(|r| (r.big_n, f(r))).collect::<Vec<_>>());
    Ok(Slopes { l_inf: column(|r| r.l_inf)?, l2: column(|r| r.l2)?, l1: column(|r| r.l1)? })
}

/// Writes through a temporary file in the same directory and renames it, so
/// a failed write never leaves a partial file behind.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let name = path
        .file_name()
        .ok_or_else(|| Error::InvalidInput(format!("not a file path: {}", path.display())))?;
    let tmp = dir.join(format!(".{}.tmp", name.to_string_lossy()));
    let result = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(contents.as_bytes())?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    Ok(result?)
}

/// Solves test case `test` at resolution `n` and measures its errors.
pub fn run_case(test: u32, n: usize, config: &SolverConfig) -> Result<RunRecord> {
    let case = TestCase::from_id(test)?;
    let nu = build_test_case(test, n)?;
    let start = Instant::now();
    let (potential, trace) = solve(&nu, config)?;
    let wall_time = start.elapsed();
    let exact = exact_solution(test)?;
    let (alignment, _) = align(&exact, &nu, &potential)?;
    let errors = error_norms(&exact, &nu, &potential, &alignment)?;
    if errors.ray_exceeds_vertices {
        eprintln!("warning: test {test} n {n}: a far ray point exceeds the vertex error maximum");
    }
    Ok(RunRecord {
        test,
        n,
        big_n: case.support_size(n),
        l_inf: errors.l_inf,
        l2_nu: errors.l2_nu,
        l1_nu: errors.l1_nu,
        newton_iterations: trace.newton_steps(),
        wall_time,
        iterations: iteration_records(&trace),
    })
}

fn warn_if_long(n: usize) {
    if n > LONG_RUNNING_N {
        eprintln!("note: n = {n} is long-running");
    }
}

pub fn cmd_run(test: u32, n: usize, config: &SolverConfig, out: &Path) -> Result<RunRecord> {
    warn_if_long(n);
    let record = run_case(test, n, config)?;
    fs::create_dir_all(out)?;
    write_atomic(&out.join(iteration_file_name(test, n)), &format_iterations(&record.iterations))?;
    Ok(record)
}

/// Runs every resolution, writes the per-run histories and the error table,
/// and fits slopes when at least two resolutions were given.
pub fn cmd_sweep(
    test: u32,
    ns: &[usize],
    config: &SolverConfig,
    out: &Path,
    threads: Option<usize>,
) -> Result<(Vec<RunRecord>, Option<Slopes>)> {
    TestCase::from_id(test)?;
    if ns.is_empty() {
        return Err(Error::InvalidInput("empty n list".into()));
    }
    let mut ns = ns.to_vec();
    ns.sort_unstable();
    ns.dedup();
    for &n in &ns {
        build_test_case(test, n)?;
        warn_if_long(n);
    }
    fs::create_dir_all(out)?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = threads {
        if t == 0 {
            return Err(Error::InvalidInput("--threads must be positive".into()));
        }
        builder = builder.num_threads(t);
    }
    let pool = builder.build().map_err(|e| Error::InvalidInput(e.to_string()))?;
    let records: Vec<RunRecord> = pool.install(|| {
        ns.par_iter()
            .map(|&n| {
                let record = run_case(test, n, config)?;
                write_atomic(&out.join(iteration_file_name(test, n)), &format_iterations(&record.iterations))?;
                Ok(record)
            })
            .collect::<Result<_>>()
    })?;
    let rows: Vec<ErrorRow> = records.iter().map(ErrorRow::from).collect();
    write_atomic(&out.join(error_file_name(test)), &format_error_table(&rows))?;
    let slopes = if rows.len() >= 2 { Some(fit_slopes(&rows)?) } else { None };
    Ok((records, slopes))
}

pub fn cmd_rates(path: &Path) -> Result<Slopes> {
    fit_slopes(&parse_error_table(&fs::read_to_string(path)?)?)
}

/// Executes a parsed command line, printing results to stdout.
pub fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run(args) => {
            let record = cmd_run(args.solve.test, args.n, &args.solve.config()?, &args.solve.out)?;
            println!("{record}");
        }
        Command::Sweep(args) => {
            let config = args.solve.config()?;
            let (records, slopes) =
                cmd_sweep(args.solve.test, &args.n_list, &config, &args.solve.out, args.threads)?;
            for r in &records {
                println!("{r}");
            }
            match slopes {
                Some(s) => println!("{s}"),
                None => println!("slopes: need at least 2 resolutions"),
            }
        }
        Command::Rates(args) => println!("{}", cmd_rates(&args.file)?),
    }
    Ok(())
}
