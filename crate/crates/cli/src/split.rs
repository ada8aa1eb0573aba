use std::path::PathBuf;

use clap::Args;
use gamerep_core::dataset::{load_manifest, stratified_game_split};
use gamerep_core::Result;

#[derive(Debug, Args)]
pub struct SplitArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// Fraction of each genre's games assigned to training.
    #[arg(long, default_value_t = 0.75)]
    pub ratio: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

pub fn run(args: &SplitArgs) -> Result<()> {
    let manifest = load_manifest(&args.manifest)?;
    let split = stratified_game_split(&manifest, args.ratio, args.seed)?;
    split.save(&args.out)?;
    println!("{:20} {:>5} {:>5}", "genre", "train", "val");
    for (genre, (train, val)) in manifest.genres.iter().zip(split.counts_per_genre(&manifest)) {
        println!("{:20} {train:>5} {val:>5}", genre.name);
    }
    println!("wrote {}", args.out.display());
    Ok(())
}
