use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::dataset::manifest::DatasetManifest;
use crate::error::{Error, Result};
use crate::rng::{stream, tag};

/// Game-disjoint train/validation partition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train_games: BTreeSet<String>,
    pub val_games: BTreeSet<String>,
    pub ratio: f64,
    pub seed: u64,
}

impl SplitSpec {
    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Schema(e.to_string()))
    }

    /// Checks disjointness, totality and per-genre coverage against a manifest.
    pub fn check(&self, manifest: &DatasetManifest) -> Result<()> {
        if let Some(g) = self.train_games.intersection(&self.val_games).next() {
            return Err(Error::Validation(format!("game {g} is on both sides of the split")));
        }
        let all: BTreeSet<&str> = manifest.games.iter().map(|g| g.id.as_str()).collect();
        let covered: BTreeSet<&str> =
            self.train_games.iter().chain(&self.val_games).map(String::as_str).collect();
        if all != covered {
            return Err(Error::Validation("split does not cover exactly the manifest games".into()));
        }
        for (genre, games) in manifest.games_by_genre() {
            let train = games.iter().filter(|g| self.train_games.contains(&g.id)).count();
            if train == 0 || train == games.len() {
                return Err(Error::Validation(format!("genre {genre} is missing from one split side")));
            }
        }
        Ok(())
    }

    /// Per-genre (train, val) game counts.
    pub fn counts_per_genre(&self, manifest: &DatasetManifest) -> Vec<(usize, usize)> {
        let mut counts = vec![(0, 0); manifest.n_genres()];
        for g in &manifest.games {
            if self.train_games.contains(&g.id) {
                counts[g.genre_id].0 += 1;
            } else if self.val_games.contains(&g.id) {
                counts[g.genre_id].1 += 1;
            }
        }
        counts
    }
}

/// Train-side game count for a genre with `games` games: `ratio * games`
/// rounded to the nearest integer, with exact halves going to validation.
pub fn train_quota(games: usize, ratio: f64) -> usize {
    let target = (ratio * games as f64 - 0.5).ceil().max(0.0) as usize;
    target.clamp(1, games - 1)
}

/// Style-balanced, game-disjoint split.
///
/// Per genre the train quota is [`train_quota`], clamped so both sides
/// keep at least one game. Games are bucketed by style; each bucket receives
/// `floor(quota * size / games)` train slots and the leftover slots go to the
/// buckets with the largest fractional share (seeded order breaks ties).
/// Within a bucket the train games are the head of a seeded shuffle.
pub fn stratified_game_split(manifest: &DatasetManifest, ratio: f64, seed: u64) -> Result<SplitSpec> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(Error::Config(format!("split ratio {ratio} must lie strictly between 0 and 1")));
    }
    let mut train_games = BTreeSet::new();
    let mut val_games = BTreeSet::new();
    let by_genre = manifest.games_by_genre();
    for genre in 0..manifest.n_genres() {
        let games = by_genre.get(&genre).map(Vec::as_slice).unwrap_or(&[]);
        if games.len() < 2 {
            return Err(Error::InfeasibleSplit(format!(
                "genre {genre} has {} game(s); a game-disjoint split needs at least 2",
                games.len()
            )));
        }
        let n = games.len();
        let quota = train_quota(n, ratio);
        let mut rng = stream(seed, &[tag::SPLIT, genre as u64]);

        let mut buckets: BTreeMap<usize, Vec<&str>> = BTreeMap::new();
        for g in games {
            buckets.entry(g.style_id).or_default().push(g.id.as_str());
        }
        let mut buckets: Vec<Vec<&str>> = buckets.into_values().collect();
        for bucket in &mut buckets {
            bucket.sort_unstable();
            bucket.shuffle(&mut rng);
        }

        let mut slots: Vec<usize> = buckets.iter().map(|b| quota * b.len() / n).collect();
        let assigned: usize = slots.iter().sum();
        let mut order: Vec<usize> = (0..buckets.len()).collect();
        order.shuffle(&mut rng);
        // Largest remainder first; the shuffled order is kept among equals.
        order.sort_by_key(|&i| std::cmp::Reverse(quota * buckets[i].len() % n));
        for &i in order.iter().take(quota - assigned) {
            slots[i] += 1;
        }

        for (bucket, take) in buckets.iter().zip(slots) {
            for (k, id) in bucket.iter().enumerate() {
                if k < take {
                    train_games.insert(id.to_string());
                } else {
                    val_games.insert(id.to_string());
                }
            }
        }
    }
    Ok(SplitSpec { train_games, val_games, ratio, seed })
}
