mod commands;
mod manifest;
mod svg;

use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "dll",
    version,
    about = "Simulate a long-memory birth/death chain and check it against the delayed logistic flow"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one trajectory and write it as CSV.
    Simulate(SimFlags),
    /// Run a replica ensemble against the reference solution.
    Compare(CompareFlags),
    /// Write the pathwise decomposition of one trajectory.
    Decompose(SimFlags),
    /// Sweep the scaling parameter and fit a convergence exponent.
    Sweep(SweepFlags),
    /// Re-run the command recorded in a manifest.
    Replay {
        #[arg(long)]
        manifest: PathBuf,
    },
}

#[derive(Args, Clone)]
struct SimFlags {
    /// Scaling parameter N.
    #[arg(long = "N")]
    n: u64,
    /// Macroscopic delay.
    #[arg(long)]
    tau: f64,
    /// Initial density.
    #[arg(long)]
    mu: f64,
    /// Macroscopic horizon T.
    #[arg(long = "T")]
    t_end: f64,
    /// Recording step.
    #[arg(long = "dt", default_value_t = 0.01)]
    dt: f64,
    /// Master seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output path (simulate/decompose: the CSV file; compare/sweep: a prefix).
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Clone)]
struct CompareFlags {
    #[command(flatten)]
    sim: SimFlags,
    /// Number of replicas.
    #[arg(long, default_value_t = 20)]
    replicas: usize,
    /// Reference-solver steps per delay interval.
    #[arg(long = "steps-per-delay", default_value_t = 64)]
    steps_per_delay: u32,
    /// Also emit an SVG chart of the reference curve and the replica band.
    #[arg(long)]
    svg: bool,
}

#[derive(Args, Clone)]
struct SweepFlags {
    /// Comma-separated increasing list of N values (at least 3).
    #[arg(long = "N-list", value_delimiter = ',')]
    n_list: Vec<u64>,
    /// Metric to sweep (e.g. max_jump, qv_T, sup_initial_dev, sup_error).
    #[arg(long)]
    metric: String,
    #[arg(long)]
    tau: f64,
    #[arg(long)]
    mu: f64,
    #[arg(long = "T")]
    t_end: f64,
    #[arg(long = "dt", default_value_t = 0.01)]
    dt: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 20)]
    replicas: usize,
    #[arg(long = "steps-per-delay", default_value_t = 64)]
    steps_per_delay: u32,
    #[arg(long)]
    out: PathBuf,
}

fn init_workers() {
    if let Ok(raw) = std::env::var("DLL_WORKERS") {
        if let Ok(workers) = raw.trim().parse::<usize>() {
            if workers >= 1 {
                let _ = rayon::ThreadPoolBuilder::new()
                    .num_threads(workers)
                    .build_global();
            }
        }
    }
}

const EXIT_USAGE: u8 = 2;

fn main() -> ExitCode {
    let cli = Cli::parse();
    init_workers();
    if let Command::Sweep(flags) = &cli.command {
        if flags.n_list.len() < 3 {
            eprintln!(
                "error: --N-list needs at least 3 values, got {}",
                flags.n_list.len()
            );
            return ExitCode::from(EXIT_USAGE);
        }
        if flags.n_list.windows(2).any(|w| w[0] >= w[1]) {
            eprintln!("error: --N-list values must be strictly increasing");
            return ExitCode::from(EXIT_USAGE);
        }
        if dll_core::Metric::parse(&flags.metric).is_none() {
            eprintln!("error: unknown metric `{}`", flags.metric);
            return ExitCode::from(EXIT_USAGE);
        }
    }
    let outcome = match cli.command {
        Command::Simulate(flags) => commands::simulate_cmd(&flags),
        Command::Compare(flags) => commands::compare_cmd(&flags),
        Command::Decompose(flags) => commands::decompose_cmd(&flags),
        Command::Sweep(flags) => commands::sweep_cmd(&flags),
        Command::Replay { manifest } => commands::replay(&manifest),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}
