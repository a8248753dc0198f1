//! Command-line entry point: run tournaments from plan files, build reports
//! from completed stores, print brute-force oracle facts and validate plans.
//!
//! Exit codes: 0 ok, 2 plan error, 3 incomplete store, 4 runtime failure.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use tunebench::error::Error;
use tunebench::objective::{ObjectiveKind, ObjectiveSpec};
use tunebench::plan::PlanFile;
use tunebench::report::{build_report_from_store, emit, Format};
use tunebench::space::{ParamRange, SearchSpace};
use tunebench::tournament::run_tournament;

/// Environment variable holding the default output directory.
const OUT_ENV: &str = "TUNEBENCH_OUT";

const EXIT_PLAN: u8 = 2;
const EXIT_INCOMPLETE: u8 = 3;
const EXIT_RUNTIME: u8 = 4;

#[derive(Parser)]
#[command(name = "tunebench", version, about = "Autotuning search-strategy workbench")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the tournament described by a plan file.
    Run {
        /// Plan file (TOML).
        #[arg(long)]
        plan: PathBuf,
        /// Output directory; defaults to $TUNEBENCH_OUT or ./tunebench-out.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads; defaults to the available parallelism.
        #[arg(long)]
        parallelism: Option<usize>,
        /// Continue an interrupted run in the same output directory.
        #[arg(long)]
        resume: bool,
        /// Suppress the progress/ETA line.
        #[arg(long)]
        quiet: bool,
    },
    /// Build report files from a completed raw store.
    Report {
        /// Store directory written by `run`.
        #[arg(long)]
        store: PathBuf,
        /// Comma-separated output formats: csv, json, svg.
        #[arg(long, default_value = "csv,json,svg")]
        formats: String,
        /// Report directory; defaults to <store>/report.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print space facts and the brute-force optimum of a synthetic landscape.
    Oracle {
        /// Synthetic benchmark kind (synthetic-add, synthetic-harris,
        /// synthetic-mandelbrot).
        #[arg(long)]
        benchmark: String,
        /// Take the space from a plan file instead of the defaults.
        #[arg(long)]
        plan: Option<PathBuf>,
        /// Thread range for all three dims, as lo:hi.
        #[arg(long)]
        thread_range: Option<String>,
        /// Work-group range for all three dims, as lo:hi.
        #[arg(long)]
        workgroup_range: Option<String>,
        /// Work-group product limit.
        #[arg(long)]
        limit: Option<u64>,
    },
    /// Parse and validate a plan; print the resolved plan to stdout.
    Validate {
        #[arg(long)]
        plan: PathBuf,
    },
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(match err {
                Error::Plan(_) | Error::Domain(_) | Error::Budget(_) => EXIT_PLAN,
                Error::IncompleteStore(_) => EXIT_INCOMPLETE,
                _ => EXIT_RUNTIME,
            })
        }
    }
}

fn dispatch(command: Command) -> Result<(), Error> {
    match command {
        Command::Run { plan, out, parallelism, resume, quiet } => {
            cmd_run(&plan, out, parallelism, resume, quiet)
        }
        Command::Report { store, formats, out } => cmd_report(&store, &formats, out),
        Command::Oracle { benchmark, plan, thread_range, workgroup_range, limit } => {
            cmd_oracle(&benchmark, plan.as_deref(), thread_range, workgroup_range, limit)
        }
        Command::Validate { plan } => cmd_validate(&plan),
    }
}

fn default_out_dir() -> PathBuf {
    std::env::var_os(OUT_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("tunebench-out"))
}

fn cmd_run(
    plan_path: &Path,
    out: Option<PathBuf>,
    parallelism: Option<usize>,
    resume: bool,
    quiet: bool,
) -> Result<(), Error> {
    let plan = PlanFile::load(plan_path)?.to_plan()?;
    let out_dir = out.unwrap_or_else(default_out_dir);
    let workers = parallelism.unwrap_or_else(|| {
        std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
    });
    let summary = run_tournament(&plan, &out_dir, workers, resume, !quiet)?;
    println!(
        "completed {} experiments ({} resumed) into {}",
        summary.total_experiments,
        summary.resumed_experiments,
        out_dir.display()
    );
    Ok(())
}

fn cmd_report(store: &Path, formats: &str, out: Option<PathBuf>) -> Result<(), Error> {
    let mut parsed = Vec::new();
    for f in formats.split(',').filter(|f| !f.is_empty()) {
        parsed.push(match f.trim() {
            "csv" => Format::Csv,
            "json" => Format::Json,
            "svg" => Format::Svg,
            other => return Err(Error::Plan(format!("unknown report format {other:?}"))),
        });
    }
    if parsed.is_empty() {
        return Err(Error::Plan("no report formats requested".into()));
    }
    let report = build_report_from_store(store)?;
    let out_dir = out.unwrap_or_else(|| store.join("report"));
    let written = emit(&report, &parsed, &out_dir)?;
    for path in written {
        println!("{}", path.display());
    }
    Ok(())
}

fn parse_range(text: &str) -> Result<ParamRange, Error> {
    let (lo, hi) = text
        .split_once(':')
        .ok_or_else(|| Error::Plan(format!("range {text:?} must look like lo:hi")))?;
    let lo: u32 = lo.parse().map_err(|_| Error::Plan(format!("bad range bound {lo:?}")))?;
    let hi: u32 = hi.parse().map_err(|_| Error::Plan(format!("bad range bound {hi:?}")))?;
    if lo < 1 || hi < lo {
        return Err(Error::Plan(format!("range {text:?} must satisfy 1 <= lo <= hi")));
    }
    Ok(ParamRange::new(lo, hi))
}

fn cmd_oracle(
    benchmark: &str,
    plan: Option<&Path>,
    thread_range: Option<String>,
    workgroup_range: Option<String>,
    limit: Option<u64>,
) -> Result<(), Error> {
    let kind = match benchmark {
        "synthetic-add" => ObjectiveKind::SyntheticAdd,
        "synthetic-harris" => ObjectiveKind::SyntheticHarris,
        "synthetic-mandelbrot" => ObjectiveKind::SyntheticMandelbrot,
        other => {
            return Err(Error::Plan(format!(
                "oracle only supports synthetic benchmarks, got {other:?}"
            )))
        }
    };
    let mut space = match plan {
        Some(path) => PlanFile::load(path)?.to_plan()?.space,
        None => SearchSpace::default(),
    };
    if let Some(r) = thread_range {
        space.thread_ranges = [parse_range(&r)?; 3];
    }
    if let Some(r) = workgroup_range {
        space.workgroup_ranges = [parse_range(&r)?; 3];
    }
    if let Some(l) = limit {
        space.constraint_limit = l;
    }

    let objective = ObjectiveSpec::synthetic(kind, 0.0);
    let configs = space.enumerate_valid()?;
    let (best_config, best_value) = configs
        .iter()
        .map(|c| (*c, objective.base_value(c).expect("synthetic")))
        .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap().then(a.0.cmp(&b.0)))
        .ok_or_else(|| Error::Domain("the space has no valid configuration".into()))?;

    println!("benchmark: {}", kind.name());
    println!("total_size: {}", space.total_size());
    println!("valid: {}", configs.len());
    println!(
        "optimum_config: {},{},{},{},{},{}",
        best_config.xt, best_config.yt, best_config.zt,
        best_config.xw, best_config.yw, best_config.zw
    );
    println!("optimum_value_ms: {best_value}");
    Ok(())
}

fn cmd_validate(plan_path: &Path) -> Result<(), Error> {
    let plan = PlanFile::load(plan_path)?.to_plan()?;
    print!("{}", PlanFile::resolved_text(&plan)?);
    Ok(())
}
