//! Command-line front end: plan printing, experiment execution, policy
//! disclosure.
//!
//! Exit codes: 0 success, 2 configuration error, 3 partial cell failure,
//! 4 engine abort (accounting bug).

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use latlab::bench::{self, run_experiment};
use latlab::config::{RunConfig, ScaleFactor};
use latlab::model::RunMode;
use latlab::multilevel::BundleFactor;
use latlab::policy::PolicyPreset;
use latlab::Micros;

const EXIT_CONFIG: u8 = 2;
const EXIT_PARTIAL: u8 = 3;
const EXIT_ABORT: u8 = 4;

#[derive(Parser)]
#[command(
    name = "latlab",
    version,
    about = "Deterministic cluster-scheduler latency and utilization benchmark"
)]
struct Cli {
    /// TOML run configuration; built-in defaults reproduce the full
    /// reference plan.
    #[arg(short, long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the derived parameter-set table (P, T_job, t, n, N)
    Plan(PlanArgs),
    /// Run the experiment and write CSV/JSON reports
    Run(RunArgs),
    /// List the selected scheduler policies with every tuning knob
    Policies,
}

#[derive(Args, Default)]
struct PlanArgs {
    /// Rescale the processor count, e.g. 0.5 or 1/22
    #[arg(long, value_name = "RATIONAL")]
    scale: Option<String>,
    /// Parameter sets to keep: comma-separated 1-based indices, or "all"
    #[arg(long, value_name = "LIST|all")]
    sets: Option<String>,
    /// Override the trial count of every set
    #[arg(long, value_name = "N")]
    trials: Option<u32>,
}

#[derive(Args, Default)]
struct RunArgs {
    #[command(flatten)]
    plan: PlanArgs,
    /// Policies to run (comma-separated preset or custom names)
    #[arg(long, value_delimiter = ',', value_name = "LIST")]
    policy: Vec<String>,
    /// Modes to run: direct, multilevel
    #[arg(long, value_delimiter = ',', value_name = "LIST")]
    mode: Vec<String>,
    /// Base seed; falls back to LATLAB_SEED, then the config file
    #[arg(long, env = "LATLAB_SEED", value_name = "N")]
    seed: Option<u64>,
    /// Bundle size for multilevel mode: a count, or "n" for one launch per
    /// processor
    #[arg(long, value_name = "N|n")]
    bundle_factor: Option<String>,
    /// Intra-bundle switching overhead in seconds
    #[arg(long, value_name = "SECONDS")]
    eps: Option<f64>,
    /// Report directory
    #[arg(long, value_name = "DIR")]
    output: Option<PathBuf>,
    /// Dump one tab-separated trace file per trial
    #[arg(long)]
    trace: bool,
    /// Concurrent trial workers (0 = one per core)
    #[arg(long, value_name = "N")]
    jobs: Option<usize>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let config = match load_config(&cli.config) {
        Ok(c) => c,
        Err(msg) => return config_error(&msg),
    };
    let result = match cli.command {
        Command::Plan(args) => cmd_plan(config, &args),
        Command::Run(args) => cmd_run(config, &args),
        Command::Policies => cmd_policies(&config),
    };
    match result {
        Ok(code) => code,
        Err(msg) => config_error(&msg),
    }
}

fn config_error(msg: &str) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(EXIT_CONFIG)
}

fn load_config(path: &Option<PathBuf>) -> Result<RunConfig, String> {
    match path {
        None => Ok(RunConfig::default()),
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| format!("{}: {e}", p.display()))?;
            RunConfig::from_toml(&text).map_err(|e| format!("{}: {e}", p.display()))
        }
    }
}

fn apply_plan_args(config: &mut RunConfig, args: &PlanArgs) -> Result<(), String> {
    if let Some(scale) = &args.scale {
        config.scale = scale.parse::<ScaleFactor>().map_err(|e| e.to_string())?;
    }
    if let Some(sets) = &args.sets {
        if sets != "all" {
            let selection = sets
                .split(',')
                .map(|s| s.trim().parse::<usize>().map_err(|_| format!("bad set index '{s}'")))
                .collect::<Result<Vec<_>, _>>()?;
            config.select_sets(&selection).map_err(|e| e.to_string())?;
        }
    }
    if let Some(trials) = args.trials {
        if trials == 0 {
            return Err("trials must be at least 1".to_string());
        }
        config.trials = Some(trials);
    }
    Ok(())
}

fn apply_run_args(config: &mut RunConfig, args: &RunArgs) -> Result<(), String> {
    apply_plan_args(config, &args.plan)?;
    if !args.policy.is_empty() {
        config.policies = args.policy.clone();
    }
    if !args.mode.is_empty() {
        config.modes = args
            .mode
            .iter()
            .map(|m| match m.as_str() {
                "direct" => Ok(RunMode::Direct),
                "multilevel" => Ok(RunMode::Multilevel),
                other => Err(format!("unknown mode '{other}' (direct|multilevel)")),
            })
            .collect::<Result<Vec<_>, _>>()?;
    }
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if let Some(b) = &args.bundle_factor {
        config.bundle_factor = if b == "n" {
            BundleFactor::PER_PROCESSOR
        } else {
            let count: u32 =
                b.parse().map_err(|_| format!("bad bundle factor '{b}' (count or \"n\")"))?;
            if count == 0 {
                return Err("bundle factor must be at least 1".to_string());
            }
            BundleFactor::Fixed(count)
        };
    }
    if let Some(eps) = args.eps {
        if !eps.is_finite() || eps < 0.0 {
            return Err(format!("eps must be a non-negative duration, got {eps}"));
        }
        config.intra_bundle_overhead = Micros::from_secs_f64(eps);
    }
    if let Some(out) = &args.output {
        config.output_dir = out.clone();
    }
    if args.trace {
        config.trace = true;
    }
    if let Some(jobs) = args.jobs {
        config.jobs = jobs;
    }
    Ok(())
}

fn cmd_plan(mut config: RunConfig, args: &PlanArgs) -> Result<ExitCode, String> {
    apply_plan_args(&mut config, args)?;
    let sets = config.resolved_sets().map_err(|e| e.to_string())?;
    print!("{}", bench::plan_table(&sets));
    Ok(ExitCode::SUCCESS)
}

fn cmd_run(mut config: RunConfig, args: &RunArgs) -> Result<ExitCode, String> {
    apply_run_args(&mut config, args)?;
    let plan = config.to_plan().map_err(|e| e.to_string())?;
    fs::create_dir_all(&config.output_dir)
        .map_err(|e| format!("{}: {e}", config.output_dir.display()))?;

    eprintln!(
        "running {} cells ({} trials) with {} workers",
        plan.cell_count(),
        plan.trial_count(),
        plan.jobs
    );
    let report = run_experiment(&plan);

    let csv_path = config.output_dir.join("report.csv");
    let json_path = config.output_dir.join("report.json");
    write_file(&csv_path, |w| bench::write_csv(&report, w))?;
    write_file(&json_path, |w| bench::write_json(&report, w))?;

    print!("{}", bench::summary_table(&report));
    for note in &report.notes {
        println!("note: {note}");
    }
    println!("wrote {} and {}", csv_path.display(), json_path.display());

    if report.engine_aborted() {
        eprintln!("error: engine abort (see cell diagnostics in the report)");
        Ok(ExitCode::from(EXIT_ABORT))
    } else if report.failed_cells() > 0 {
        eprintln!("warning: {} cell(s) failed", report.failed_cells());
        Ok(ExitCode::from(EXIT_PARTIAL))
    } else {
        Ok(ExitCode::SUCCESS)
    }
}

fn write_file(
    path: &std::path::Path,
    write: impl FnOnce(&mut std::io::BufWriter<fs::File>) -> std::io::Result<()>,
) -> Result<(), String> {
    let file = fs::File::create(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let mut writer = std::io::BufWriter::new(file);
    write(&mut writer).map_err(|e| format!("{}: {e}", path.display()))
}

fn cmd_policies(config: &RunConfig) -> Result<ExitCode, String> {
    #[derive(Serialize)]
    struct Listing {
        custom_policies: Vec<PolicyPreset>,
    }
    let mut selected = Vec::new();
    for name in &config.policies {
        let preset = config
            .available_policies()
            .into_iter()
            .find(|p| p.name == *name)
            .ok_or_else(|| format!("policy '{name}' is neither a preset nor defined in custom_policies"))?;
        preset.config.validate().map_err(|e| format!("policy '{name}': {e}"))?;
        selected.push(preset);
    }
    println!("# {} policies; durations are integer microseconds.", selected.len());
    println!("# Paste a block into a config file under [[custom_policies]] to tweak it.");
    let listing = Listing { custom_policies: selected };
    print!("{}", toml::to_string_pretty(&listing).map_err(|e| e.to_string())?);
    Ok(ExitCode::SUCCESS)
}
