//! Command-line front end: generate instances, run solvers, prove optima,
//! export the MIP, and drive benchmark campaigns.
//!
//! Exit codes: 0 on success, 1 on usage errors, 2 on runtime failures.
//! Human summaries go to stdout; machine artifacts are written to files so
//! the tool stays scriptable. No subcommand modifies its input files.

use std::path::{Path, PathBuf};
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use stepsched::bench::{self, ExperimentPlan};
use stepsched::exact;
use stepsched::instance::{self, GeneratorConfig, Instance, IntervalClass};
use stepsched::mbhg;
use stepsched::schedule::{decode, NestVector};
use stepsched::solvers::{self, HdcsParams, RunResult};

/// Environment variable holding the default worker count for `bench`.
const WORKERS_ENV: &str = "STEPSCHED_WORKERS";

#[derive(Parser)]
#[command(
    name = "stepsched",
    version,
    about = "Parallel-machine scheduling with step-deteriorating jobs and setup times",
    after_help = "Exit codes: 0 success, 1 usage error, 2 runtime failure."
)]
struct Cli {
    /// Print extra progress information to stderr.
    #[arg(long, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a random instance file.
    Generate(GenerateArgs),
    /// Run a heuristic solver on an instance.
    Solve(SolveArgs),
    /// Prove an optimum by branch and bound.
    Exact(ExactArgs),
    /// Write the mixed-integer model in LP format.
    ExportLp(ExportLpArgs),
    /// Run a benchmark plan and write CSV plus raw records.
    Bench(BenchArgs),
    /// Summarize a results CSV per interval class.
    Report(ReportArgs),
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    m: usize,
    /// Penalty scale in (0, 1].
    #[arg(long, default_value_t = 0.5)]
    xi: f64,
    #[arg(long, value_enum, default_value_t = IntervalArg::H1)]
    interval: IntervalArg,
    #[arg(long, default_value_t = 1)]
    setup_min: i64,
    #[arg(long, default_value_t = 10)]
    setup_max: i64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Instance label; derived from the parameters when omitted.
    #[arg(long)]
    label: Option<String>,
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long, value_enum)]
    algo: AlgoArg,
    #[arg(long)]
    instance: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Population size.
    #[arg(long, default_value_t = 30)]
    pop: usize,
    /// Discovery probability.
    #[arg(long, default_value_t = 0.8)]
    rho: f64,
    #[arg(long, default_value_t = 200)]
    tmax: u32,
    #[arg(long, default_value_t = 50)]
    tnip: u32,
    /// Write the result document to this file.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Print the decoded schedule, one machine per line.
    #[arg(long)]
    dump_schedule: bool,
}

#[derive(Args)]
struct ExactArgs {
    #[arg(long)]
    instance: PathBuf,
    /// Search budget in seconds.
    #[arg(long, default_value_t = 60.0)]
    time_limit: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ExportLpArgs {
    #[arg(long)]
    instance: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct BenchArgs {
    /// Experiment plan (JSON).
    #[arg(long)]
    plan: PathBuf,
    /// Output directory for results.csv and raw.jsonl.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ReportArgs {
    /// results.csv produced by `bench`.
    #[arg(long)]
    input: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum AlgoArg {
    Hdcs,
    Dcs,
    Vns,
    Mbhg,
}

#[derive(Clone, Copy, ValueEnum)]
enum IntervalArg {
    H1,
    H2,
    H3,
}

impl From<IntervalArg> for IntervalClass {
    fn from(value: IntervalArg) -> Self {
        match value {
            IntervalArg::H1 => IntervalClass::H1,
            IntervalArg::H2 => IntervalClass::H2,
            IntervalArg::H3 => IntervalClass::H3,
        }
    }
}

fn main() {
    // Die quietly when a downstream pager or `head` closes the pipe, like
    // any other command-line tool. Result files are written before human
    // output, so artifacts survive a truncated pipeline.
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            use clap::error::ErrorKind;
            match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    print!("{err}");
                    std::process::exit(0);
                }
                _ => {
                    eprint!("{err}");
                    std::process::exit(1);
                }
            }
        }
    };
    if let Err(err) = run(cli) {
        eprintln!("error: {err:#}");
        std::process::exit(2);
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Generate(args) => generate_cmd(args, cli.verbose),
        Command::Solve(args) => solve_cmd(args, cli.verbose),
        Command::Exact(args) => exact_cmd(args),
        Command::ExportLp(args) => export_lp_cmd(args),
        Command::Bench(args) => bench_cmd(args, cli.verbose),
        Command::Report(args) => report_cmd(args),
    }
}

fn load_instance(path: &Path) -> Result<Instance> {
    let instance = instance::read_instance(path)?;
    let violations = instance.validate();
    if !violations.is_empty() {
        let listing = violations
            .iter()
            .map(|v| format!("  - {v}"))
            .collect::<Vec<_>>()
            .join("\n");
        bail!(
            "instance {} violates its invariants:\n{listing}",
            path.display()
        );
    }
    Ok(instance)
}

fn generate_cmd(args: GenerateArgs, verbose: bool) -> Result<()> {
    let config = GeneratorConfig {
        n: args.n,
        m: args.m,
        xi: args.xi,
        interval_class: args.interval.into(),
        setup_range: (args.setup_min, args.setup_max),
        seed: args.seed,
    };
    let mut generated = instance::generate(&config)?;
    if let Some(label) = args.label {
        generated.label = label;
    }
    match args.out {
        Some(path) => {
            instance::write_instance(&generated, &path)?;
            if verbose {
                eprintln!(
                    "generated {} jobs on {} machines (seed {})",
                    args.n, args.m, args.seed
                );
            }
            println!("wrote {}", path.display());
        }
        None => print!("{}", instance::instance_to_json(&generated)),
    }
    Ok(())
}

/// Machine-readable result document for the population solvers. Wall time is
/// reported on stdout only, keeping the document reproducible byte for byte
/// under a fixed seed.
#[derive(Serialize)]
struct SolveDocument<'a> {
    algorithm: &'a str,
    /// True for the VNS baseline, which is a generic reconstruction rather
    /// than a published algorithm.
    reconstruction: bool,
    instance_label: &'a str,
    params: &'a HdcsParams,
    seed: u64,
    best_value: i64,
    best_perm: &'a NestVector,
    iterations_executed: u32,
    best_value_history: &'a [i64],
}

#[derive(Serialize)]
struct MbhgDocument<'a> {
    algorithm: &'a str,
    instance_label: &'a str,
    omega: f64,
    value: i64,
    machines: &'a [Vec<usize>],
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

fn solve_cmd(args: SolveArgs, verbose: bool) -> Result<()> {
    let instance = load_instance(&args.instance)?;
    let params = HdcsParams {
        population: args.pop,
        discovery_prob: args.rho,
        t_nip: args.tnip,
        seed: args.seed,
        ..HdcsParams::default()
    }
    .with_t_max(args.tmax);

    if let AlgoArg::Mbhg = args.algo {
        let result = mbhg::mbhg(&instance);
        if let Some(path) = &args.out {
            write_json(
                path,
                &MbhgDocument {
                    algorithm: "mbhg",
                    instance_label: &instance.label,
                    omega: result.omega,
                    value: result.value,
                    machines: &result.schedule.machine_sequences,
                },
            )?;
        }
        println!(
            "mbhg: value {} at weight {} on '{}'",
            result.value, result.omega, instance.label
        );
        if args.dump_schedule {
            print!("{}", result.schedule.dump());
        }
        return Ok(());
    }

    params.validate()?;
    let (name, runner): (&str, fn(&Instance, &HdcsParams) -> RunResult) = match args.algo {
        AlgoArg::Hdcs => ("hdcs", solvers::hdcs),
        AlgoArg::Dcs => ("dcs", solvers::dcs),
        AlgoArg::Vns => ("vns", solvers::vns_baseline),
        AlgoArg::Mbhg => unreachable!("handled above"),
    };
    if verbose {
        eprintln!(
            "running {name} with seed {} on '{}'",
            args.seed, instance.label
        );
    }
    let result = runner(&instance, &params);
    if let Some(path) = &args.out {
        write_json(
            path,
            &SolveDocument {
                algorithm: name,
                reconstruction: matches!(args.algo, AlgoArg::Vns),
                instance_label: &instance.label,
                params: &params,
                seed: result.seed,
                best_value: result.best_value,
                best_perm: &result.best_nest,
                iterations_executed: result.iterations_executed,
                best_value_history: &result.best_value_history,
            },
        )?;
    }
    println!(
        "{name}: best value {} after {} iterations in {:.3}s (seed {})",
        result.best_value,
        result.iterations_executed,
        result.elapsed.as_secs_f64(),
        result.seed
    );
    if args.dump_schedule {
        let schedule = decode(&instance, &result.best_nest)?;
        print!("{}", schedule.dump());
    }
    Ok(())
}

#[derive(Serialize)]
struct ExactDocument<'a> {
    algorithm: &'a str,
    instance_label: &'a str,
    proven_optimal: bool,
    value: i64,
    machines: &'a [Vec<usize>],
    time_limit_s: f64,
}

fn exact_cmd(args: ExactArgs) -> Result<()> {
    let instance = load_instance(&args.instance)?;
    let limit = Duration::from_secs_f64(args.time_limit);
    let result = exact::branch_and_bound(&instance, Some(limit));
    if let Some(path) = &args.out {
        write_json(
            path,
            &ExactDocument {
                algorithm: "exact",
                instance_label: &instance.label,
                proven_optimal: result.proven_optimal,
                value: result.schedule.total_tardiness,
                machines: &result.schedule.machine_sequences,
                time_limit_s: args.time_limit,
            },
        )?;
    }
    let status = if result.proven_optimal {
        "optimal"
    } else {
        "time limit reached, best incumbent"
    };
    println!(
        "exact: {status} with total tardiness {} ({} nodes)",
        result.schedule.total_tardiness, result.nodes_explored
    );
    print!("{}", result.schedule.dump());
    Ok(())
}

fn export_lp_cmd(args: ExportLpArgs) -> Result<()> {
    let instance = load_instance(&args.instance)?;
    exact::export_lp(&instance, &args.out)
        .with_context(|| format!("writing {}", args.out.display()))?;
    println!("wrote {}", args.out.display());
    Ok(())
}

fn bench_cmd(args: BenchArgs, verbose: bool) -> Result<()> {
    if let Ok(workers) = std::env::var(WORKERS_ENV) {
        let workers: usize = workers
            .parse()
            .with_context(|| format!("{WORKERS_ENV} must be a positive integer"))?;
        // Ignore the error if a pool already exists (e.g. repeated calls).
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build_global();
    }
    let text = std::fs::read_to_string(&args.plan)
        .with_context(|| format!("reading {}", args.plan.display()))?;
    let plan: ExperimentPlan =
        serde_json::from_str(&text).with_context(|| format!("parsing {}", args.plan.display()))?;
    if verbose {
        eprintln!(
            "bench: {} combos x {} intervals x {} replicates, algorithms {:?}",
            plan.combos.len(),
            plan.interval_classes.len(),
            plan.replicates,
            plan.algorithms
                .iter()
                .map(|a| a.to_string())
                .collect::<Vec<_>>()
        );
    }
    let outcome = bench::run_experiment(&plan)?;
    std::fs::create_dir_all(&args.out)
        .with_context(|| format!("creating {}", args.out.display()))?;
    let csv_path = args.out.join("results.csv");
    let raw_path = args.out.join("raw.jsonl");
    std::fs::write(&csv_path, bench::rows_to_csv(&outcome.rows))?;
    std::fs::write(&raw_path, bench::raw_to_jsonl(&outcome.raw))?;

    let footnotes: usize = outcome.rows.iter().map(|r| r.excluded_infinite).sum();
    if footnotes > 0 {
        println!(
            "note: {footnotes} replicate(s) had an infinite deviation (zero best value) \
             and were excluded from the averages"
        );
    }
    print_summary(&bench::summarize(&outcome.rows));
    println!("wrote {} and {}", csv_path.display(), raw_path.display());
    Ok(())
}

fn report_cmd(args: ReportArgs) -> Result<()> {
    let text = std::fs::read_to_string(&args.input)
        .with_context(|| format!("reading {}", args.input.display()))?;
    let rows = bench::rows_from_csv(&text)?;
    print_summary(&bench::summarize(&rows));
    Ok(())
}

fn print_summary(summary: &[bench::SummaryRow]) {
    println!(
        "{:<8} {:<6} {:>10} {:>10} {:>10} {:>12}",
        "interval", "algo", "rpd_best", "rpd_avg", "rpd_worst", "mean_time_s"
    );
    for row in summary {
        println!(
            "{:<8} {:<6} {:>10.2} {:>10.2} {:>10.2} {:>12.4}",
            row.interval.to_string(),
            row.algorithm.to_string(),
            row.rpd_best,
            row.rpd_avg,
            row.rpd_worst,
            row.mean_time_s
        );
    }
}
