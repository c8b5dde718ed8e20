//! `s4-bench`: correctness suites, timing and memory reports, and exact
//! growth diagnostics.
//!
//! Exit codes: 0 on success, 1 when a verify check fails or a run errors,
//! 2 on a usage error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use s4::bench::{run_bench, BenchConfig, BenchReport, Mode, OutputFormat};
use s4::hippo::HippoFamily;

#[global_allocator]
static ALLOC: s4::alloc::CountingAllocator = s4::alloc::CountingAllocator;

#[derive(Parser)]
#[command(name = "s4-bench", version, about = "Structured SSM kernel verification and benchmarks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every invariant suite against its oracle.
    Verify(Args),
    /// Time the fast kernel against the Krylov oracle and the recurrence.
    BenchKernel(Args),
    /// Time recurrent stepping and the layer's two execution modes.
    BenchStep(Args),
    /// Exact growth of the LegS eigenvectors and characteristic-polynomial inverse.
    Diagnose(Args),
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
    Table,
}

#[derive(clap::Args)]
struct Args {
    /// State sizes, comma-separated.
    #[arg(long, value_delimiter = ',')]
    n: Option<Vec<usize>>,
    /// Sequence lengths, comma-separated.
    #[arg(long, value_delimiter = ',')]
    l: Option<Vec<usize>>,
    /// Layer feature count.
    #[arg(long)]
    h: Option<usize>,
    /// legs, legt or lagt. Verify defaults to all three.
    #[arg(long)]
    family: Option<HippoFamily>,
    #[arg(long)]
    delta: Option<f64>,
    /// Timed runs per case, at least 3.
    #[arg(long, value_parser = parse_repeats)]
    repeats: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value = "table")]
    format: Format,
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for the data-parallel paths.
    #[arg(long)]
    threads: Option<usize>,
    /// Refuse oracle runs estimated above this many multiply-adds.
    #[arg(long)]
    budget: Option<f64>,
    #[arg(long, hide = true)]
    inject_kernel_perturbation: Option<f64>,
}

fn parse_repeats(s: &str) -> Result<usize, String> {
    let v: usize = s.parse().map_err(|e| format!("{e}"))?;
    if v < 3 {
        return Err(format!("must be at least 3, got {v}"));
    }
    Ok(v)
}

fn config(mode: Mode, a: &Args) -> BenchConfig {
    let mut c = BenchConfig::new(mode);
    if let Some(n) = &a.n {
        c.n = n.clone();
    }
    if let Some(l) = &a.l {
        c.l = l.clone();
    }
    if let Some(h) = a.h {
        c.h = h;
    }
    c.family = a.family;
    if let Some(d) = a.delta {
        c.delta = d;
    }
    if let Some(r) = a.repeats {
        c.repeats = r;
    }
    c.seed = a.seed;
    c.format = match a.format {
        Format::Json => OutputFormat::Json,
        Format::Csv => OutputFormat::Csv,
        Format::Table => OutputFormat::Table,
    };
    if let Some(b) = a.budget {
        c.budget = b;
    }
    c.kernel_perturbation = a.inject_kernel_perturbation.unwrap_or(0.0);
    c
}

fn emit(report: &BenchReport, out: &Option<PathBuf>) -> Result<(), String> {
    let text = report.render(report.config.format).map_err(|e| e.to_string())?;
    match out {
        Some(path) => std::fs::write(path, text).map_err(|e| format!("{}: {e}", path.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

#[cfg(feature = "parallel")]
fn run_with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T, String> {
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(t) = threads {
        pool = pool.num_threads(t);
    }
    Ok(pool.build().map_err(|e| e.to_string())?.install(f))
}

#[cfg(not(feature = "parallel"))]
fn run_with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T, String> {
    if threads.is_some_and(|t| t > 1) {
        eprintln!("warning: built without the `parallel` feature; running on one thread");
    }
    Ok(f())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (mode, args) = match &cli.command {
        Command::Verify(a) => (Mode::Verify, a),
        Command::BenchKernel(a) => (Mode::Kernel, a),
        Command::BenchStep(a) => (Mode::Step, a),
        Command::Diagnose(a) => (Mode::Diagnose, a),
    };
    let cfg = config(mode, args);
    if let Err(e) = cfg.validate() {
        eprintln!("error: {e}");
        return ExitCode::from(2);
    }
    let report = match run_with_threads(args.threads, || run_bench(&cfg)) {
        Ok(Ok(r)) => r,
        Ok(Err(e)) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    if let Err(e) = emit(&report, &args.out) {
        eprintln!("error: {e}");
        return ExitCode::from(1);
    }
    if !report.passed() {
        if let Some(w) = report.worst_check() {
            eprintln!(
                "verify failed: worst case {} family={} n={} l={} error={:.3e} tolerance={:.1e}",
                w.suite, w.family, w.n, w.l, w.error, w.tolerance
            );
        }
        return ExitCode::from(1);
    }
    ExitCode::SUCCESS
}
