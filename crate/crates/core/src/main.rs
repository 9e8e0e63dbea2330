use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use loopsoup::runner::{run, ExperimentKind, Overrides, RunManifest};
use loopsoup::Error;

/// Brownian loop soup experiments driven by TOML manifests.
#[derive(Parser)]
#[command(name = "loopsoup", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample soups and dump them.
    Soup(RunArgs),
    /// Cluster the loops of sampled soups.
    Clusters(RunArgs),
    /// Outer boundaries of the largest clusters and their dimensions.
    Boundaries(RunArgs),
    /// Box-counting dimensions (carpet, free points, loop frontier).
    Dimensions(RunArgs),
    /// Crossing probabilities under monotone coupling in c.
    Percolation(RunArgs),
    /// SLE(κ) / SLE(κ, ρ) traces.
    Sle(RunArgs),
    /// Right boundary of a restriction curve plus attached clusters.
    Chordal(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Manifest file (TOML).
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    samples: Option<usize>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (0 = all cores).
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    resolution: Option<usize>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let (kind, args) = match cli.command {
        Command::Soup(a) => (ExperimentKind::Soup, a),
        Command::Clusters(a) => (ExperimentKind::Clusters, a),
        Command::Boundaries(a) => (ExperimentKind::Boundaries, a),
        Command::Dimensions(a) => (ExperimentKind::Dimensions, a),
        Command::Percolation(a) => (ExperimentKind::Percolation, a),
        Command::Sle(a) => (ExperimentKind::Sle, a),
        Command::Chordal(a) => (ExperimentKind::Chordal, a),
    };
    let text = match std::fs::read_to_string(&args.config) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("loopsoup: cannot read {}: {e}", args.config.display());
            return ExitCode::from(1);
        }
    };
    let manifest = RunManifest::parse(&text, Some(kind)).and_then(|mut m| {
        m.apply(&Overrides {
            seed: args.seed,
            samples: args.samples,
            output: args.out,
            threads: args.threads,
            resolution: args.resolution,
        });
        m.validate()?;
        Ok(m)
    });
    let manifest = match manifest {
        Ok(m) => m,
        Err(e) => {
            eprintln!("loopsoup: {}: {e}", args.config.display());
            return ExitCode::from(1);
        }
    };
    match run(&manifest) {
        Ok(out) => {
            println!("manifest sha256 {}", out.manifest_hash);
            for p in &out.artifacts {
                println!("{}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("loopsoup: {e}");
            match e {
                // missing output directory and other manifest-level problems
                Error::Config(_) => ExitCode::from(1),
                _ => ExitCode::from(2),
            }
        }
    }
}
