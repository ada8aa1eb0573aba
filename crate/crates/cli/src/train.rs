use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::Args;
use gamerep_core::dataset::{load_manifest, partition, DatasetManifest, ImageSample, SplitSpec};
use gamerep_core::model::{checkpoint, ModelConfig, Parameters};
use gamerep_core::training::{
    fit_classifier_frozen, pretrain_contrastive, train_fully_supervised, EpochRecord, TrainConfig, TrainingHistory,
};
use gamerep_core::{Error, Result};

use crate::{create_dir, manifest_dir, read_config, write_json, Method, TrainOverrides};

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long)]
    pub split: PathBuf,
    #[arg(long, value_enum)]
    pub method: Method,
    #[command(flatten)]
    pub overrides: TrainOverrides,
    #[arg(long)]
    pub seed: Option<u64>,
    /// JSON file with training settings; flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Record per-epoch wall time in the history log.
    #[arg(long)]
    pub timing: bool,
    #[arg(long)]
    pub out: PathBuf,
}

/// Manifest, split and the samples of the split's games.
pub struct Corpus {
    pub manifest: DatasetManifest,
    pub split: SplitSpec,
    pub samples: Vec<ImageSample>,
}

impl Corpus {
    pub fn load(manifest_path: &Path, split_path: &Path) -> Result<Self> {
        let manifest = load_manifest(manifest_path)?;
        let split = SplitSpec::load(split_path)?;
        split.check(&manifest)?;
        let games = split.train_games.union(&split.val_games).cloned().collect();
        let samples = manifest.load_samples(&manifest_dir(manifest_path), Some(&games))?;
        Ok(Self { manifest, split, samples })
    }

    pub fn sides(&self) -> (Vec<&ImageSample>, Vec<&ImageSample>) {
        partition(&self.samples, &self.split)
    }
}

/// Streams epoch records to a JSONL file as they complete.
pub struct HistoryLog {
    writer: BufWriter<File>,
    path: PathBuf,
    timing: bool,
}

impl HistoryLog {
    pub fn create(path: &Path, timing: bool) -> Result<Self> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        Ok(Self { writer: BufWriter::new(file), path: path.to_path_buf(), timing })
    }

    pub fn record(&mut self, record: &EpochRecord) -> Result<()> {
        let r = if self.timing { record.clone() } else { record.without_timing() };
        writeln!(self.writer, "{}", r.to_json_line()?).map_err(|e| Error::io(&self.path, e))?;
        self.writer.flush().map_err(|e| Error::io(&self.path, e))
    }
}

/// Runs one training method, streaming records to `log` and echoing them to
/// stdout when `echo` is set.
pub fn train_method(
    method: Method,
    train: &[&ImageSample],
    val: &[&ImageSample],
    model: &ModelConfig,
    cfg: &TrainConfig,
    log: &mut HistoryLog,
    echo: bool,
) -> Result<(Parameters, Option<Parameters>, TrainingHistory)> {
    let mut observer = |r: &EpochRecord, _: &Parameters| {
        if echo {
            println!("{}", format_record(r));
        }
        log.record(r)
    };
    match method {
        Method::Supervised => {
            let (params, history) = train_fully_supervised(train, val, model, cfg, &mut observer)?;
            Ok((params, None, history))
        }
        Method::Contrastive => {
            let (pre, mut history) = pretrain_contrastive(train, model, cfg, &mut observer)?;
            let (params, fit) = fit_classifier_frozen(&pre, train, val, cfg, &mut observer)?;
            history.extend(fit);
            Ok((params, Some(pre), history))
        }
    }
}

pub fn format_record(r: &EpochRecord) -> String {
    let acc = |v: Option<f64>| v.map_or_else(|| "-".to_string(), |v| format!("{v:.4}"));
    format!(
        "{:>20} epoch {:>3}  loss {:.5}  train_acc {}  val_acc {}",
        r.stage.as_str(),
        r.epoch,
        r.loss,
        acc(r.train_acc),
        acc(r.val_acc)
    )
}

pub fn run(args: &TrainArgs) -> Result<()> {
    let mut cfg: TrainConfig = match &args.config {
        Some(path) => read_config(path)?,
        None => TrainConfig::default(),
    };
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    args.overrides.apply(&mut cfg)?;
    let corpus = Corpus::load(&args.manifest, &args.split)?;
    let (train, val) = corpus.sides();
    let model = ModelConfig::desk(corpus.manifest.image_size, corpus.manifest.n_genres());

    let out = create_dir(&args.out)?;
    write_json(&out.join("train_config.json"), &cfg)?;
    let mut log = HistoryLog::create(&out.join("history.jsonl"), args.timing)?;
    let (params, pretrained, _) = train_method(args.method, &train, &val, &model, &cfg, &mut log, true)?;
    if let Some(pre) = pretrained {
        checkpoint::save(&pre, &out.join("pretrained.bin"))?;
    }
    checkpoint::save(&params, &out.join("checkpoint.bin"))?;
    println!("wrote {}", out.join("checkpoint.bin").display());
    Ok(())
}
