use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use finex_core::pipeline::{self, Overrides, RunConfig, Target};
use finex_core::Error;

/// Small-area financial-exclusion index.
#[derive(Debug, Parser)]
#[command(name = "finex", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Validate and summarize the inputs without scoring.
    IngestCheck(Common),
    /// Write per-area catchment counts and cash-access scores.
    Catchment(Common),
    /// Write nearest-neighbour statistics per infrastructure kind.
    Nni(Common),
    /// Write the composite index and its classes.
    Index(Common),
    /// Compare ward rankings against the historical ranking.
    Validate(Common),
    /// Run the configured intervention scenario.
    Scenario(Common),
    /// Run every stage and write all artifacts plus a run report.
    RunAll(Common),
}

#[derive(Debug, Args)]
struct Common {
    /// Path to the TOML run configuration.
    #[arg(long, short)]
    config: PathBuf,
    /// Catchment radius in metres.
    #[arg(long)]
    radius: Option<f64>,
    /// Distance beyond which an ATM counts as lonely, in metres.
    #[arg(long)]
    lonely_threshold: Option<f64>,
    /// Number of natural-breaks classes.
    #[arg(long)]
    jenks_k: Option<usize>,
    /// Output directory (overrides the config).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write CSV numbers at full precision.
    #[arg(long)]
    full_precision: bool,
}

impl Common {
    fn load(&self) -> Result<RunConfig, Error> {
        let mut config = RunConfig::load(&self.config).map_err(|e| e.in_stage("config"))?;
        config
            .apply(&Overrides {
                radius_m: self.radius,
                lonely_threshold_m: self.lonely_threshold,
                jenks_k: self.jenks_k,
                output_dir: self.out.clone(),
                full_precision: self.full_precision,
            })
            .map_err(|e| e.in_stage("config"))?;
        Ok(config)
    }
}

fn run(cli: Cli) -> Result<(), Error> {
    let (common, target) = match &cli.command {
        Command::IngestCheck(c) => {
            let ingested = pipeline::ingest_check(&c.load()?)?;
            let r = &ingested.report;
            println!("areas: {}", r.areas);
            println!("points: {}", r.points);
            for (kind, n) in &r.points_by_kind {
                println!("  {kind}: {n}");
            }
            println!("dropped: {}", r.dropped.len());
            for d in &r.dropped {
                println!("  {} ({}): {}", d.id, d.postcode, d.reason);
            }
            if let Some(crs) = &r.crs {
                println!("crs: {crs}");
            }
            println!(
                "ward lookup: {}",
                if ingested.wards.is_some() {
                    "yes"
                } else {
                    "no"
                }
            );
            println!(
                "historical ranks: {}",
                if ingested.historical.is_some() {
                    "yes"
                } else {
                    "no"
                }
            );
            return Ok(());
        }
        Command::Catchment(c) => (c, Target::Catchment),
        Command::Nni(c) => (c, Target::Nni),
        Command::Index(c) => (c, Target::Index),
        Command::Validate(c) => (c, Target::Validate),
        Command::Scenario(c) => (c, Target::Scenario),
        Command::RunAll(c) => (c, Target::All),
    };
    let config = common.load()?;
    let (_, written) = pipeline::run_to_disk(&config, target)?;
    for p in written {
        println!("{}", p.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
