//! `gamerep` subcommands: generate, split, train, eval and reproduce.
//!
//! Every command is deterministic given its seed flags. Failures map to exit
//! code 2 (configuration), 3 (data) or 4 (numeric).

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use gamerep_core::{Error, ErrorKind, Result};
use serde::de::DeserializeOwned;

pub mod evaluate;
pub mod generate;
pub mod reproduce;
pub mod split;
pub mod train;

#[derive(Debug, Parser)]
#[command(name = "gamerep", version, about = "Game-image representation learning experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Render a synthetic corpus and write its manifest.
    Generate(generate::GenerateArgs),
    /// Write a game-disjoint train/validation split.
    Split(split::SplitArgs),
    /// Train a model with one of the two procedures.
    Train(train::TrainArgs),
    /// Evaluate a checkpoint, or compare two reports.
    Eval(evaluate::EvalArgs),
    /// Run the full untrained / supervised / contrastive comparison.
    Reproduce(reproduce::ReproduceArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Supervised,
    Contrastive,
}

/// Training flags shared by `train` and `reproduce`. Unset flags keep the
/// value from the config file or the built-in default.
#[derive(Debug, Clone, Default, Args)]
pub struct TrainOverrides {
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub batch: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub margin: Option<f64>,
    /// Steps per epoch: `full`, `tenth` or a positive count.
    #[arg(long)]
    pub steps: Option<String>,
}

impl TrainOverrides {
    pub fn apply(&self, cfg: &mut gamerep_core::training::TrainConfig) -> Result<()> {
        use gamerep_core::training::StepsPerEpoch;
        if let Some(v) = self.epochs {
            cfg.epochs = v;
        }
        if let Some(v) = self.batch {
            cfg.batch_size = v;
        }
        if let Some(v) = self.lr {
            cfg.learning_rate = v;
        }
        if let Some(v) = self.margin {
            cfg.margin = v;
        }
        if let Some(s) = &self.steps {
            cfg.steps_per_epoch = match s.as_str() {
                "full" => StepsPerEpoch::FullPass,
                "tenth" => StepsPerEpoch::Tenth,
                n => StepsPerEpoch::Fixed(
                    n.parse().map_err(|_| Error::Config(format!("invalid --steps value {n:?}")))?,
                ),
            };
        }
        cfg.validate()
    }
}

pub fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Generate(a) => generate::run(a),
        Command::Split(a) => split::run(a),
        Command::Train(a) => train::run(a),
        Command::Eval(a) => evaluate::run(a),
        Command::Reproduce(a) => reproduce::run(a),
    }
}

pub fn exit_code(e: &Error) -> u8 {
    match e.kind() {
        ErrorKind::Config => 2,
        ErrorKind::Data => 3,
        ErrorKind::Numeric => 4,
    }
}

/// Reads a JSON config file; unknown or malformed content is a config error.
pub fn read_config<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

pub fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    fs::write(path, serde_json::to_string_pretty(value)? + "\n").map_err(|e| Error::io(path, e))
}

pub fn create_dir(path: &Path) -> Result<PathBuf> {
    fs::create_dir_all(path).map_err(|e| Error::io(path, e))?;
    Ok(path.to_path_buf())
}

/// Directory that relative image paths in a manifest are resolved against.
pub fn manifest_dir(manifest: &Path) -> PathBuf {
    manifest.parent().map(Path::to_path_buf).unwrap_or_default()
}
