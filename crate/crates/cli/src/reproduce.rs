//! Untrained / fully supervised / supervised contrastive comparison over
//! several training seeds on one synthetic corpus and split.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::Args;
use gamerep_core::dataset::{generate_synthetic, partition, stratified_game_split, SyntheticConfig};
use gamerep_core::eval::{evaluate_model, summarize, EvalOptions, EvalReport, Summary};
use gamerep_core::model::{checkpoint, init_params, ModelConfig};
use gamerep_core::training::TrainConfig;
use gamerep_core::{Error, Result};
use serde::{Deserialize, Serialize};

use crate::train::{train_method, HistoryLog};
use crate::{create_dir, read_config, write_json, Method, TrainOverrides};

#[derive(Debug, Args)]
pub struct ReproduceArgs {
    /// Training seeds, comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    pub seeds: Vec<u64>,
    #[arg(long)]
    pub out: PathBuf,
    /// JSON file with corpus settings; defaults to 6 genres x 6 games x 200 images.
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    #[arg(long, default_value_t = 0.75)]
    pub ratio: f64,
    #[arg(long, default_value_t = 0)]
    pub split_seed: u64,
    #[command(flatten)]
    pub overrides: TrainOverrides,
    /// Record per-epoch wall time in history logs.
    #[arg(long)]
    pub timing: bool,
}

/// One row of the comparison table. Accuracy is absent for the untrained
/// encoder, whose classifier head is random.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub method: String,
    pub train_acc: Option<Summary>,
    pub val_acc: Option<Summary>,
    pub silhouette: Summary,
    /// Per-seed values in seed order.
    pub per_seed: Vec<SeedValues>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedValues {
    pub seed: u64,
    pub train_acc: Option<f64>,
    pub val_acc: Option<f64>,
    pub silhouette: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReproductionTable {
    pub seeds: Vec<u64>,
    pub corpus: SyntheticConfig,
    pub train: TrainConfig,
    pub rows: Vec<TableRow>,
}

impl ReproductionTable {
    pub fn row(&self, method: &str) -> Option<&TableRow> {
        self.rows.iter().find(|r| r.method == method)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Schema(format!("{}: {e}", path.display())))
    }

    /// Plain-text table: mean ± sample standard deviation over seeds.
    pub fn render(&self) -> String {
        let cell = |s: Option<&Summary>| match s {
            Some(s) => format!("{:.3} ± {:.3}", s.mean, s.std),
            None => "-".to_string(),
        };
        let mut out = format!("seeds: {:?} (mean ± sample std)\n", self.seeds);
        writeln!(out, "{:24} {:>15} {:>15} {:>15}", "method", "train acc", "val acc", "silhouette").unwrap();
        for r in &self.rows {
            writeln!(
                out,
                "{:24} {:>15} {:>15} {:>15}",
                r.method,
                cell(r.train_acc.as_ref()),
                cell(r.val_acc.as_ref()),
                cell(Some(&r.silhouette))
            )
            .unwrap();
        }
        out
    }
}

pub const UNTRAINED: &str = "untrained";
pub const SUPERVISED: &str = "fully supervised";
pub const CONTRASTIVE: &str = "supervised contrastive";

fn row(method: &str, values: Vec<SeedValues>) -> TableRow {
    let collect = |f: &dyn Fn(&SeedValues) -> Option<f64>| -> Option<Summary> {
        let v: Option<Vec<f64>> = values.iter().map(f).collect();
        v.map(|v| summarize(&v))
    };
    TableRow {
        method: method.to_string(),
        train_acc: collect(&|v| v.train_acc),
        val_acc: collect(&|v| v.val_acc),
        silhouette: summarize(&values.iter().map(|v| v.silhouette).collect::<Vec<_>>()),
        per_seed: values,
    }
}

fn values(seed: u64, report: &EvalReport, with_accuracy: bool) -> SeedValues {
    SeedValues {
        seed,
        train_acc: with_accuracy.then_some(report.train_acc),
        val_acc: with_accuracy.then_some(report.val_acc),
        silhouette: report.silhouette,
    }
}

pub fn run(args: &ReproduceArgs) -> Result<()> {
    let corpus: SyntheticConfig = match &args.corpus {
        Some(path) => read_config(path)?,
        None => SyntheticConfig::reproduction(),
    };
    let mut base = TrainConfig::default();
    args.overrides.apply(&mut base)?;
    let mut seeds = args.seeds.clone();
    seeds.dedup();
    if seeds.is_empty() {
        return Err(Error::Config("at least one seed is required".into()));
    }

    let out = create_dir(&args.out)?;
    let (manifest, samples) = generate_synthetic(&corpus)?;
    let split = stratified_game_split(&manifest, args.ratio, args.split_seed)?;
    manifest.save(&out.join("manifest.json"))?;
    split.save(&out.join("split.json"))?;
    let (train, val) = partition(&samples, &split);
    println!("corpus: {} games, {} train / {} val images", manifest.games.len(), train.len(), val.len());
    let model = ModelConfig::desk(manifest.image_size, manifest.n_genres());

    let (mut untrained, mut supervised, mut contrastive) = (Vec::new(), Vec::new(), Vec::new());
    for &seed in &seeds {
        let cfg = TrainConfig { seed, ..base.clone() };
        let dir = create_dir(&out.join(format!("seed-{seed}")))?;
        let opts = EvalOptions { seeds: vec![seed], ..EvalOptions::default() };

        let params = init_params(&model, seed)?;
        let report = evaluate_model(&params, &manifest, &train, &val, &opts)?.report;
        report.save(&create_dir(&dir.join("untrained"))?.join("report.json"))?;
        println!("seed {seed} {UNTRAINED}: silhouette {:.4}", report.silhouette);
        untrained.push(values(seed, &report, false));

        for (method, name, sink) in [
            (Method::Supervised, SUPERVISED, &mut supervised),
            (Method::Contrastive, CONTRASTIVE, &mut contrastive),
        ] {
            let sub = create_dir(&dir.join(if method == Method::Supervised { "supervised" } else { "contrastive" }))?;
            let mut log = HistoryLog::create(&sub.join("history.jsonl"), args.timing)?;
            let (params, _, _) = train_method(method, &train, &val, &model, &cfg, &mut log, false)?;
            checkpoint::save(&params, &sub.join("checkpoint.bin"))?;
            let report = evaluate_model(&params, &manifest, &train, &val, &opts)?.report;
            report.save(&sub.join("report.json"))?;
            println!(
                "seed {seed} {name}: train_acc {:.4} val_acc {:.4} silhouette {:.4}",
                report.train_acc, report.val_acc, report.silhouette
            );
            sink.push(values(seed, &report, true));
        }
    }

    let table = ReproductionTable {
        seeds,
        corpus,
        train: base,
        rows: vec![row(UNTRAINED, untrained), row(SUPERVISED, supervised), row(CONTRASTIVE, contrastive)],
    };
    write_json(&out.join("table.json"), &table)?;
    let text = table.render();
    fs::write(out.join("table.txt"), &text).map_err(|e| Error::io(out.join("table.txt"), e))?;
    print!("{text}");
    Ok(())
}
