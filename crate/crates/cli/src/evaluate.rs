use std::path::PathBuf;

use clap::Args;
use gamerep_core::eval::{
    compare, evaluate_model, save_scatter_png, write_projection_csv, write_representations_csv, EvalOptions,
    EvalReport, SilhouetteSpace, TsneConfig,
};
use gamerep_core::model::checkpoint;
use gamerep_core::training::TrainConfig;
use gamerep_core::{Error, Result};

use crate::create_dir;
use crate::train::Corpus;

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    #[arg(long)]
    pub split: Option<PathBuf>,
    /// Write a t-SNE projection of the validation representations (CSV + PNG).
    #[arg(long)]
    pub tsne: bool,
    /// Write validation representations as CSV.
    #[arg(long)]
    pub csv: bool,
    /// Measure the silhouette on projected embeddings instead of representations.
    #[arg(long)]
    pub embedding_silhouette: bool,
    #[arg(long, default_value_t = 30.0)]
    pub perplexity: f64,
    #[arg(long, default_value_t = 1000)]
    pub tsne_iterations: usize,
    #[arg(long, default_value_t = 0)]
    pub tsne_seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Print the signed differences `B - A` between two report files.
    #[arg(long, num_args = 2, value_names = ["A", "B"])]
    pub compare: Option<Vec<PathBuf>>,
}

fn required<'a>(value: &'a Option<PathBuf>, flag: &str) -> Result<&'a PathBuf> {
    value.as_ref().ok_or_else(|| Error::Config(format!("eval requires --{flag}")))
}

pub fn run(args: &EvalArgs) -> Result<()> {
    if let Some(paths) = &args.compare {
        let (a, b) = (EvalReport::load(&paths[0])?, EvalReport::load(&paths[1])?);
        let d = compare(&a, &b);
        println!("{:12} {:>10} {:>10} {:>10}", "metric", "a", "b", "b - a");
        for (name, va, vb, delta) in [
            ("train_acc", a.train_acc, b.train_acc, d.train_acc),
            ("val_acc", a.val_acc, b.val_acc, d.val_acc),
            ("silhouette", a.silhouette, b.silhouette, d.silhouette),
        ] {
            println!("{name:12} {va:>10.4} {vb:>10.4} {delta:>+10.4}");
        }
        return Ok(());
    }

    let checkpoint_path = required(&args.checkpoint, "checkpoint")?;
    let corpus = Corpus::load(required(&args.manifest, "manifest")?, required(&args.split, "split")?)?;
    let out = create_dir(required(&args.out, "out")?)?;
    let params = checkpoint::load(checkpoint_path)?;
    let (train, val) = corpus.sides();

    // The training seed is recorded next to checkpoints written by `train`.
    let seeds = checkpoint_path
        .parent()
        .map(|dir| dir.join("train_config.json"))
        .filter(|p| p.exists())
        .map(|p| crate::read_config::<TrainConfig>(&p))
        .transpose()?
        .map(|cfg| vec![cfg.seed])
        .unwrap_or_default();
    let tsne = args.tsne.then(|| TsneConfig {
        perplexity: args.perplexity,
        iterations: args.tsne_iterations,
        seed: args.tsne_seed,
        ..TsneConfig::default()
    });
    let space = if args.embedding_silhouette { SilhouetteSpace::Embedding } else { SilhouetteSpace::Representation };
    let evaluation = evaluate_model(&params, &corpus.manifest, &train, &val, &EvalOptions { space, tsne, seeds })?;

    let report = &evaluation.report;
    report.save(&out.join("report.json"))?;
    println!("train_acc  {:.4}", report.train_acc);
    println!("val_acc    {:.4}", report.val_acc);
    println!("silhouette {:.4}", report.silhouette);
    if args.csv {
        write_representations_csv(&out.join("representations.csv"), &evaluation.val_representations, &val)?;
    }
    if let Some(coords) = &evaluation.projection {
        write_projection_csv(&out.join("tsne.csv"), coords, &val)?;
        save_scatter_png(&out.join("tsne.png"), coords, &val, 800)?;
    }
    println!("wrote {}", out.join("report.json").display());
    Ok(())
}
