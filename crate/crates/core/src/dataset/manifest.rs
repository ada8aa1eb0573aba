use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dataset::image::{resize_image, Image, ImageSample};
use crate::dataset::synthetic::{self, SyntheticConfig};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenreInfo {
    pub id: usize,
    pub name: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StyleInfo {
    pub id: usize,
    pub name: String,
}

/// Regeneration handle for a synthetic game.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GeneratorRef {
    pub genre: usize,
    pub game: usize,
    pub images: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ImageSource {
    Files { images: Vec<String> },
    Generator { generator_ref: GeneratorRef },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GameEntry {
    pub id: String,
    pub genre_id: usize,
    pub style_id: usize,
    #[serde(flatten)]
    pub source: ImageSource,
}

impl GameEntry {
    pub fn image_count(&self) -> usize {
        match &self.source {
            ImageSource::Files { images } => images.len(),
            ImageSource::Generator { generator_ref } => generator_ref.images,
        }
    }
}

/// Corpus inventory. Image paths are relative to the manifest's directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub genres: Vec<GenreInfo>,
    pub styles: Vec<StyleInfo>,
    pub games: Vec<GameEntry>,
    /// `[height, width]`.
    pub image_size: [usize; 2],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generator: Option<SyntheticConfig>,
}

impl DatasetManifest {
    pub fn validate(&self) -> Result<()> {
        if self.games.is_empty() {
            return Err(Error::Validation("manifest lists no games".into()));
        }
        if self.genres.len() < 2 {
            return Err(Error::Validation(format!(
                "at least 2 genres are required, found {}",
                self.genres.len()
            )));
        }
        check_dense("genre", self.genres.iter().map(|g| g.id))?;
        check_dense("style", self.styles.iter().map(|s| s.id))?;
        let [h, w] = self.image_size;
        if h < 8 || w < 8 {
            return Err(Error::Validation(format!("image size {h}x{w} is below 8x8")));
        }

        let mut seen = BTreeSet::new();
        for game in &self.games {
            if !seen.insert(game.id.as_str()) {
                return Err(Error::DuplicateGame { game: game.id.clone() });
            }
            if game.genre_id >= self.genres.len() {
                return Err(Error::Schema(format!(
                    "game {} references unknown genre {}",
                    game.id, game.genre_id
                )));
            }
            if game.style_id >= self.styles.len() {
                return Err(Error::Schema(format!(
                    "game {} references unknown style {}",
                    game.id, game.style_id
                )));
            }
            if game.image_count() == 0 {
                return Err(Error::Validation(format!("game {} has no images", game.id)));
            }
            if matches!(game.source, ImageSource::Generator { .. }) && self.generator.is_none() {
                return Err(Error::Schema(format!(
                    "game {} uses a generator reference but the manifest has no generator",
                    game.id
                )));
            }
        }
        if let Some(generator) = &self.generator {
            generator.validate()?;
        }
        for (genre, games) in self.games_per_genre().iter().enumerate() {
            if *games < 2 {
                return Err(Error::TooFewGames { genre, games: *games });
            }
        }
        Ok(())
    }

    pub fn n_genres(&self) -> usize {
        self.genres.len()
    }

    pub fn games_per_genre(&self) -> Vec<usize> {
        let mut counts = vec![0; self.genres.len()];
        for g in &self.games {
            if let Some(c) = counts.get_mut(g.genre_id) {
                *c += 1;
            }
        }
        counts
    }

    /// Game counts per (genre, style), the Table-I style summary.
    pub fn genre_style_counts(&self) -> Vec<Vec<usize>> {
        let mut counts = vec![vec![0; self.styles.len()]; self.genres.len()];
        for g in &self.games {
            counts[g.genre_id][g.style_id] += 1;
        }
        counts
    }

    pub fn game(&self, id: &str) -> Option<&GameEntry> {
        self.games.iter().find(|g| g.id == id)
    }

    pub fn games_by_genre(&self) -> BTreeMap<usize, Vec<&GameEntry>> {
        let mut map: BTreeMap<usize, Vec<&GameEntry>> = BTreeMap::new();
        for g in &self.games {
            map.entry(g.genre_id).or_default().push(g);
        }
        map
    }

    pub fn total_images(&self) -> usize {
        self.games.iter().map(GameEntry::image_count).sum()
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let manifest: Self = serde_json::from_str(text).map_err(|e| Error::Schema(e.to_string()))?;
        manifest.validate()?;
        Ok(manifest)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    /// Loads every image of the listed games (all games when `games` is
    /// `None`), resizing file-backed images to the manifest image size.
    /// Samples come out in manifest game order.
    pub fn load_samples(&self, base_dir: &Path, games: Option<&BTreeSet<String>>) -> Result<Vec<ImageSample>> {
        let [h, w] = self.image_size;
        let mut out = Vec::new();
        for game in &self.games {
            if games.is_some_and(|set| !set.contains(&game.id)) {
                continue;
            }
            match &game.source {
                ImageSource::Files { images } => {
                    for rel in images {
                        let path: PathBuf = base_dir.join(rel);
                        let mut pixels = Image::load_png(&path)?;
                        if pixels.height() != h || pixels.width() != w {
                            pixels = resize_image(&pixels, h, w)?;
                        }
                        out.push(ImageSample {
                            pixels,
                            genre: game.genre_id,
                            game: game.id.clone(),
                            style: game.style_id,
                        });
                    }
                }
                ImageSource::Generator { generator_ref } => {
                    let config = self.generator.as_ref().ok_or_else(|| {
                        Error::Schema(format!("game {} needs a generator", game.id))
                    })?;
                    for i in 0..generator_ref.images {
                        let mut sample =
                            synthetic::render(config, generator_ref.genre, generator_ref.game, i);
                        sample.genre = game.genre_id;
                        sample.style = game.style_id;
                        sample.game = game.id.clone();
                        if sample.pixels.height() != h || sample.pixels.width() != w {
                            sample.pixels = resize_image(&sample.pixels, h, w)?;
                        }
                        out.push(sample);
                    }
                }
            }
        }
        Ok(out)
    }
}

fn check_dense(what: &str, ids: impl Iterator<Item = usize>) -> Result<()> {
    for (expected, id) in ids.enumerate() {
        if id != expected {
            return Err(Error::Schema(format!(
                "{what} ids must be dense and ordered from 0; found {id} at position {expected}"
            )));
        }
    }
    Ok(())
}

pub fn load_manifest(path: &Path) -> Result<DatasetManifest> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    DatasetManifest::from_json(&text)
}
