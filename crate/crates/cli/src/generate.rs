use std::path::PathBuf;

use clap::Args;
use gamerep_core::dataset::synthetic::{render, synthetic_manifest};
use gamerep_core::dataset::{DatasetManifest, ImageSource, SyntheticConfig};
use gamerep_core::Result;

use crate::{create_dir, read_config};

#[derive(Debug, Args)]
pub struct GenerateArgs {
    /// JSON file with synthetic corpus settings; defaults apply when omitted.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    /// Overrides the seed in the config file.
    #[arg(long)]
    pub seed: Option<u64>,
}

pub fn run(args: &GenerateArgs) -> Result<()> {
    let mut config: SyntheticConfig = match &args.config {
        Some(path) => read_config(path)?,
        None => SyntheticConfig::default(),
    };
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    let manifest = write_corpus(&config, &args.out)?;
    println!("wrote {} images for {} games to {}", manifest.total_images(), manifest.games.len(), args.out.display());
    print!("{}", style_table(&manifest));
    Ok(())
}

/// Renders every image to `out/images/<game>/<index>.png` and writes
/// `out/manifest.json` listing the files.
pub fn write_corpus(config: &SyntheticConfig, out: &std::path::Path) -> Result<DatasetManifest> {
    let mut manifest = synthetic_manifest(config)?;
    create_dir(out)?;
    for game in &mut manifest.games {
        let ImageSource::Generator { generator_ref } = &game.source else { continue };
        let dir = create_dir(&out.join("images").join(&game.id))?;
        let mut images = Vec::with_capacity(generator_ref.images);
        for i in 0..generator_ref.images {
            let sample = render(config, generator_ref.genre, generator_ref.game, i);
            let name = format!("{i:04}.png");
            sample.pixels.save_png(&dir.join(&name))?;
            images.push(format!("images/{}/{name}", game.id));
        }
        game.source = ImageSource::Files { images };
    }
    manifest.save(&out.join("manifest.json"))?;
    Ok(manifest)
}

/// Games per genre and style, one row per genre.
pub fn style_table(manifest: &DatasetManifest) -> String {
    let counts = manifest.genre_style_counts();
    let width = manifest.genres.iter().map(|g| g.name.len()).max().unwrap_or(5).max(5);
    let cols: Vec<usize> = manifest.styles.iter().map(|s| s.name.len().max(4)).collect();
    let mut out = format!("{:width$}", "genre");
    for (style, w) in manifest.styles.iter().zip(&cols) {
        out += &format!(" {:>w$}", style.name);
    }
    out += &format!(" {:>6}\n", "total");
    for (genre, row) in manifest.genres.iter().zip(&counts) {
        out += &format!("{:width$}", genre.name);
        for (c, w) in row.iter().zip(&cols) {
            out += &format!(" {c:>w$}");
        }
        out += &format!(" {:>6}\n", row.iter().sum::<usize>());
    }
    out
}
