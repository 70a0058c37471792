//! `curvprof`: curvature profiles of graphs, distance matrices and point
//! clouds from the command line.

mod commands;
mod input;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::{CompareArgs, EmbedArgs, EstimateArgs, GenerateArgs, ProfileArgs, RhoArgs};

#[derive(Debug, Parser)]
#[command(
    name = "curvprof",
    version,
    about = "Discrete sectional-curvature profiles of metric spaces"
)]
struct Cli {
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true, env = "CURVPROF_THREADS")]
    threads: Option<usize>,
    /// Log more (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Curvature profile of a graph, distance matrix or point cloud.
    Profile(ProfileArgs),
    /// W1 distance between two saved profiles.
    Compare(CompareArgs),
    /// Classical MDS or Isomap embeddings.
    Embed(EmbedArgs),
    /// Synthetic graphs and point clouds.
    Generate(GenerateArgs),
    /// Embedding dimension whose profile best matches the original.
    EstimateDim(EstimateArgs),
    /// ρ and Gromov products of a single vertex triple.
    Rho(RhoArgs),
}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<curvprof::Error>() {
            return match e {
                curvprof::Error::EmptyProfile(_) => 3,
                curvprof::Error::Internal(_) => 4,
                _ => 2,
            };
        }
    }
    2
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();
    if let Some(t) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
        {
            log::warn!("could not size the worker pool: {e}");
        }
    }
    let result = match cli.command {
        Command::Profile(a) => commands::profile(a),
        Command::Compare(a) => commands::compare(a),
        Command::Embed(a) => commands::embed(a),
        Command::Generate(a) => commands::generate(a),
        Command::EstimateDim(a) => commands::estimate_dim(a),
        Command::Rho(a) => commands::rho(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
