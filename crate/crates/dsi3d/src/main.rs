use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use dsi3d::commands;
use dsi3d::config::Method;
use dsi3d::{Error, Result, RunConfig};
use serde_json::json;

#[derive(Parser)]
#[command(name = "dsi3d", version, about = "Generative retrieval for LiDAR place recognition")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build the dataset and write descriptors, poses and the split manifest.
    Prepare(Common),
    /// Assign a docid to every scene.
    Encode(Common),
    /// Train the decoder on the TRAIN split.
    Train(Common),
    /// Retrieve references for every query scene.
    Retrieve(WithMethod),
    /// Score retrieval records.
    Eval(WithMethod),
    /// Time exact, LSH and generative retrieval across reference sizes.
    Bench(Common),
}

#[derive(Args)]
struct Common {
    /// JSON configuration file; defaults apply to missing keys.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory shared by all subcommands.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override a configuration key, e.g. `--set train.epochs=5`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Args)]
struct WithMethod {
    #[command(flatten)]
    common: Common,
    #[arg(long, value_enum)]
    method: Option<Method>,
}

impl Common {
    fn load(&self) -> Result<RunConfig> {
        let mut cfg = RunConfig::load(self.config.as_deref(), &self.overrides)?;
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(out) = &self.out {
            cfg.out = out.clone();
        }
        Ok(cfg)
    }
}

impl WithMethod {
    fn load(&self) -> Result<RunConfig> {
        let mut cfg = self.common.load()?;
        if let Some(m) = self.method {
            cfg.retrieval.method = m;
        }
        Ok(cfg)
    }
}

fn summary<T: serde::Serialize>(value: &T) -> Result<()> {
    let text = serde_json::to_string(value).map_err(|e| Error::Config(e.to_string()))?;
    println!("{text}");
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Prepare(c) => {
            let cfg = c.load()?;
            let ds = commands::prepare(&cfg)?;
            summary(&json!({"scenes": ds.len(), "descriptor_dim": ds.descriptor_dim, "out": cfg.out}))
        }
        Command::Encode(c) => summary(&commands::encode(&c.load()?)?),
        Command::Train(c) => {
            let meta = commands::train_cmd(&c.load()?)?;
            summary(&json!({"best_epoch": meta.best_epoch, "strategy": meta.strategy}))
        }
        Command::Retrieve(c) => summary(&json!({"records": commands::retrieve(&c.load()?)?})),
        Command::Eval(c) => {
            let r = commands::eval(&c.load()?)?;
            summary(&json!({
                "method": r.method,
                "queries": r.queries,
                "eligible_queries": r.eligible_queries,
                "hits_at_1": r.hits_at_1,
                "hits_at_5": r.hits_at_5,
                "f1_max": r.f1_max,
            }))
        }
        Command::Bench(c) => {
            let r = commands::bench(&c.load()?)?;
            summary(&json!({"crossovers": r.crossovers}))
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::FAILURE
        }
    }
}
