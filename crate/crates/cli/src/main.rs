use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};

use narmap_cli::config::PipelineConfig;
use narmap_cli::pipeline;

/// Maps narrative text into a latent semantic factor space, segments the
/// sequence chronologically with permutation-test significance, and tracks
/// emotion-bearing terms and character dyads through that space.
#[derive(Parser)]
#[command(name = "narmap", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Pipeline configuration file (TOML)
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides [output].dir
    #[arg(long)]
    out: Option<PathBuf>,
    /// Master seed; overrides [clustering].seed
    #[arg(long)]
    seed: Option<u64>,
    /// Print each written artifact
    #[arg(long)]
    verbose: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Execute the full pipeline and write a manifest
    Run(Common),
    /// Tokenize the source into units.jsonl
    Ingest(Common),
    /// Build and filter the units-by-words table
    Table(Common),
    /// Fit Correspondence Analysis and export coordinates and diagnostics
    Ca(Common),
    /// Build the sequence-constrained dendrogram (and cut it, if configured)
    Cluster(Common),
    /// Segment the sequence with permutation-test gating
    Segment(Common),
    /// Track configured terms and dyads through the factor space
    Track(Common),
    /// Write a text report of inertia shares and salient points
    Report(Common),
}

fn effective(common: &Common) -> Result<(PipelineConfig, PathBuf)> {
    let mut config = PipelineConfig::load(&common.config)?;
    if let Some(seed) = common.seed {
        config.clustering.seed = Some(seed);
    }
    let out_dir = common.out.clone().unwrap_or_else(|| config.out_dir.clone());
    Ok((config, out_dir))
}

fn dispatch(cli: Cli) -> Result<()> {
    let (common, stage): (&Common, &str) = match &cli.command {
        Command::Run(c) => (c, "run"),
        Command::Ingest(c) => (c, "ingest"),
        Command::Table(c) => (c, "table"),
        Command::Ca(c) => (c, "ca"),
        Command::Cluster(c) => (c, "cluster"),
        Command::Segment(c) => (c, "segment"),
        Command::Track(c) => (c, "track"),
        Command::Report(c) => (c, "report"),
    };
    let (config, out_dir) = effective(common)?;
    let written = match stage {
        "run" => {
            let manifest = pipeline::run(&config, &out_dir)?;
            if common.verbose {
                for entry in &manifest.artifacts {
                    eprintln!("wrote {} ({} bytes)", entry.path, entry.bytes);
                }
            }
            println!(
                "wrote {} artifacts and {} to {}",
                manifest.artifacts.len(),
                pipeline::MANIFEST,
                out_dir.display()
            );
            return Ok(());
        }
        "ingest" => pipeline::stage_ingest(&config, &out_dir)?,
        "table" => pipeline::stage_table(&config, &out_dir)?,
        "ca" => pipeline::stage_ca(&config, &out_dir)?,
        "cluster" => pipeline::stage_cluster(&config, &out_dir)?,
        "segment" => pipeline::stage_segment(&config, &out_dir)?,
        "track" => pipeline::stage_track(&config, &out_dir)?,
        "report" => pipeline::stage_report(&config, &out_dir)?,
        _ => unreachable!(),
    };
    if common.verbose {
        for path in &written {
            eprintln!("wrote {}", path.display());
        }
    }
    println!(
        "{stage}: {} artifacts in {}",
        written.len(),
        out_dir.display()
    );
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(error) => {
            eprintln!("error: {error:#}");
            ExitCode::FAILURE
        }
    }
}
