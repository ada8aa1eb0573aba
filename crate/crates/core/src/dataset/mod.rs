//! Corpus generation, ingestion, game-disjoint splitting and augmentation.

pub mod augment;
pub mod image;
pub mod manifest;
pub mod split;
pub mod synthetic;

pub use augment::{augment, augment_image, AugmentationConfig, RandomTransform};
pub use image::{resize, resize_image, Image, ImageSample};
pub use manifest::{load_manifest, DatasetManifest, GameEntry, GenreInfo, ImageSource, StyleInfo};
pub use split::{stratified_game_split, train_quota, SplitSpec};
pub use synthetic::{generate_synthetic, synthetic_manifest, SyntheticConfig, Texture};

/// Partitions samples by split side, preserving order.
pub fn partition<'a>(samples: &'a [ImageSample], split: &SplitSpec) -> (Vec<&'a ImageSample>, Vec<&'a ImageSample>) {
    let train = samples.iter().filter(|s| split.train_games.contains(&s.game)).collect();
    let val = samples.iter().filter(|s| split.val_games.contains(&s.game)).collect();
    (train, val)
}
