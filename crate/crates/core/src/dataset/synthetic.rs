//! Procedural game-image corpus with separate content and style factors.
//!
//! Content is a genre-specific motif (a fixed layout of geometric primitives,
//! jittered per image index). Style is a preset from a pool shared by all
//! genres (palette, background texture, noise), lightly jittered per game.
//! Image `k` of every game in a genre shares the same content draw, so two
//! games of one genre differ only in style, and no colour scheme belongs to a
//! single genre.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::dataset::image::{Image, ImageSample};
use crate::dataset::manifest::{
    DatasetManifest, GameEntry, GeneratorRef, GenreInfo, ImageSource, StyleInfo,
};
use crate::error::{Error, Result};
use crate::rng::{stream, tag};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticConfig {
    pub genres: usize,
    pub games_per_genre: usize,
    pub images_per_game: usize,
    pub height: usize,
    pub width: usize,
    /// Size of the style pool shared across genres. Each genre walks a seeded
    /// permutation of the pool, so with `styles == games_per_genre` every
    /// style occurs once in every genre.
    pub styles: usize,
    /// Background textures available to style draws.
    pub textures: Vec<Texture>,
    /// Per-game Gaussian noise standard deviation range.
    pub noise: [f64; 2],
    /// Per-image uniform colour shift amplitude applied to the whole palette
    /// (scene lighting); keeps the average colour of an image from
    /// identifying its game.
    pub scene_jitter: f64,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            genres: 10,
            games_per_genre: 6,
            images_per_game: 200,
            height: 32,
            width: 32,
            styles: 6,
            textures: Texture::ALL.to_vec(),
            noise: [0.0, 0.06],
            scene_jitter: 0.3,
            seed: 0,
        }
    }
}

impl SyntheticConfig {
    /// The 6 x 6 x 200 corpus used by the reproduction experiment.
    pub fn reproduction() -> Self {
        Self { genres: 6, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        let counts = [
            ("genres", self.genres),
            ("games_per_genre", self.games_per_genre),
            ("images_per_game", self.images_per_game),
            ("styles", self.styles),
            ("textures", self.textures.len()),
        ];
        if let Some((name, _)) = counts.iter().find(|(_, n)| *n == 0) {
            return Err(Error::Config(format!("synthetic {name} must be at least 1")));
        }
        if self.genres > MOTIF_COUNT {
            return Err(Error::Config(format!(
                "at most {MOTIF_COUNT} synthetic genres are available, got {}",
                self.genres
            )));
        }
        if self.height < 8 || self.width < 8 {
            return Err(Error::Config("synthetic images must be at least 8x8".into()));
        }
        if !(0.0..=0.5).contains(&self.scene_jitter) {
            return Err(Error::Config(format!("scene jitter {} must lie in [0, 0.5]", self.scene_jitter)));
        }
        let [lo, hi] = self.noise;
        if !(0.0..=0.5).contains(&lo) || !(lo..=0.5).contains(&hi) {
            return Err(Error::Config(format!("noise range [{lo}, {hi}] is invalid")));
        }
        Ok(())
    }

    pub fn total_images(&self) -> usize {
        self.genres * self.games_per_genre * self.images_per_game
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Texture {
    Flat,
    HorizontalGradient,
    VerticalGradient,
    Checker,
    Stripes,
    Radial,
}

impl Texture {
    pub const ALL: [Texture; 6] = [
        Texture::Flat,
        Texture::HorizontalGradient,
        Texture::VerticalGradient,
        Texture::Checker,
        Texture::Stripes,
        Texture::Radial,
    ];
}

pub const MOTIF_COUNT: usize = 10;

/// Display names for the synthetic genres, indexed by motif id.
pub const GENRE_NAMES: [&str; MOTIF_COUNT] = [
    "disc_grid",
    "goal_stripes",
    "oval_track",
    "centre_ring",
    "court_lines",
    "diagonal_bands",
    "cross",
    "triangle",
    "twin_tables",
    "nested_squares",
];

/// Per-game rendering style.
#[derive(Debug, Clone, PartialEq)]
pub struct StyleDraw {
    /// Index of the shared style preset.
    pub preset: usize,
    pub background: [f32; 3],
    pub foreground: [f32; 3],
    pub accent: [f32; 3],
    pub texture: Texture,
    pub texture_period: f32,
    pub texture_phase: f32,
    pub texture_amplitude: f32,
    pub noise: f32,
}

/// Per-image content draw; independent of the game.
#[derive(Debug, Clone, PartialEq)]
struct ContentDraw {
    dx: f32,
    dy: f32,
    players: [(f32, f32); 3],
}

pub fn game_id(genre: usize, game: usize) -> String {
    format!("g{genre:02}_{game:02}")
}

fn palette(seed: u64, index: usize) -> [[f32; 3]; 3] {
    let mut rng = stream(seed, &[tag::SYNTH, 1, index as u64]);
    let color = |rng: &mut rand_chacha::ChaCha8Rng| -> [f32; 3] {
        [rng.random::<f32>(), rng.random::<f32>(), rng.random::<f32>()]
    };
    // Motifs are drawn lighter than the field, whatever the hues.
    let background = loop {
        let c = color(&mut rng);
        if luma(&c) <= 0.45 {
            break c;
        }
    };
    let foreground = loop {
        let c = color(&mut rng);
        if luma(&c) >= luma(&background) + 0.3 && max_channel_gap(&c, &background) >= 0.45 {
            break c;
        }
    };
    let accent = loop {
        let c = color(&mut rng);
        if max_channel_gap(&c, &background) >= 0.35 && max_channel_gap(&c, &foreground) >= 0.25 {
            break c;
        }
    };
    [background, foreground, accent]
}

fn luma(c: &[f32; 3]) -> f32 {
    0.299 * c[0] + 0.587 * c[1] + 0.114 * c[2]
}

fn max_channel_gap(a: &[f32; 3], b: &[f32; 3]) -> f32 {
    (0..3).map(|c| (a[c] - b[c]).abs()).fold(0.0, f32::max)
}

/// Pool index of the style preset used by `game` of `genre`.
pub fn style_preset(config: &SyntheticConfig, genre: usize, game: usize) -> usize {
    let mut order: Vec<usize> = (0..config.styles).collect();
    let mut genre_rng = stream(config.seed, &[tag::SYNTH, 2, genre as u64]);
    rand::seq::SliceRandom::shuffle(order.as_mut_slice(), &mut genre_rng);
    order[game % config.styles]
}

/// Deterministic style draw for one game: its preset plus a small per-game
/// colour shift, texture phase and noise level.
pub fn style_draw(config: &SyntheticConfig, genre: usize, game: usize) -> StyleDraw {
    let preset = style_preset(config, genre, game);
    let [background, foreground, accent] = palette(config.seed, preset);
    let mut preset_rng = stream(config.seed, &[tag::SYNTH, 6, preset as u64]);
    let texture = config.textures[preset % config.textures.len()];
    let texture_period = preset_rng.random_range(0.15f32..0.5);
    let texture_amplitude = preset_rng.random_range(0.08f32..0.22);

    let mut rng = stream(config.seed, &[tag::SYNTH, 3, genre as u64, game as u64]);
    let mut shift = |c: [f32; 3]| c.map(|v| (v + rng.random_range(-0.04f32..0.04)).clamp(0.0, 1.0));
    let (background, foreground, accent) = (shift(background), shift(foreground), shift(accent));
    let [lo, hi] = config.noise;
    StyleDraw {
        preset,
        background,
        foreground,
        accent,
        texture,
        texture_period,
        texture_phase: rng.random_range(0.0f32..1.0),
        texture_amplitude,
        noise: if hi > lo { rng.random_range(lo..hi) as f32 } else { lo as f32 },
    }
}

/// Style category of a synthetic game: its preset index.
pub fn style_category(config: &SyntheticConfig, genre: usize, game: usize) -> usize {
    style_preset(config, genre, game)
}

/// Display name of a style preset.
pub fn style_name(config: &SyntheticConfig, preset: usize) -> String {
    let texture = config.textures[preset % config.textures.len()];
    let name = serde_json::to_value(texture).ok().and_then(|v| v.as_str().map(str::to_string)).unwrap_or_default();
    format!("{name}_{preset}")
}

fn content_draw(config: &SyntheticConfig, genre: usize, image: usize) -> ContentDraw {
    let mut rng = stream(config.seed, &[tag::SYNTH, 4, genre as u64, image as u64]);
    let mut jitter = || rng.random_range(-0.06f32..0.06);
    let (dx, dy) = (jitter(), jitter());
    let mut players = [(0.0, 0.0); 3];
    for p in &mut players {
        *p = (rng.random_range(0.1f32..0.9), rng.random_range(0.1f32..0.9));
    }
    ContentDraw { dx, dy, players }
}

/// Genre motif occupancy at normalized coordinates `(u, v)` in `[0, 1]^2`.
fn motif(genre: usize, u: f32, v: f32) -> bool {
    let (cu, cv) = (u - 0.5, v - 0.5);
    let r = (cu * cu + cv * cv).sqrt();
    match genre {
        0 => {
            let fu = (u * 3.0).fract() - 0.5;
            let fv = (v * 3.0).fract() - 0.5;
            (0.0..1.0).contains(&u) && (0.0..1.0).contains(&v) && fu * fu + fv * fv < 0.09
        }
        1 => {
            let stripe = ((v - 0.2) / 0.3).rem_euclid(1.0) < 0.25 && (0.15..0.85).contains(&v);
            let goal = (v - 0.5).abs() < 0.18 && (u < 0.12 || u > 0.88);
            stripe || goal
        }
        2 => {
            let e = (cu / 0.42).powi(2) + (cv / 0.28).powi(2);
            (0.55..1.0).contains(&e)
        }
        3 => (0.22..0.32).contains(&r) || r < 0.07,
        4 => {
            let frame = (cu.abs() < 0.4 && cv.abs() < 0.3) && (cu.abs() > 0.35 || cv.abs() > 0.25);
            frame || cu.abs() < 0.03
        }
        5 => ((u + v) * 3.0).rem_euclid(1.0) < 0.35,
        6 => (cu.abs() < 0.09 && cv.abs() < 0.38) || (cv.abs() < 0.09 && cu.abs() < 0.38),
        7 => cv < 0.3 && cv > -0.35 && cu.abs() < (cv + 0.35) * 0.6,
        8 => cv.abs() < 0.18 && ((0.06..0.4).contains(&cu) || (-0.4..-0.06).contains(&cu)),
        9 => {
            let m = cu.abs().max(cv.abs());
            (0.1..0.16).contains(&m) || (0.26..0.32).contains(&m) || (0.4..0.46).contains(&m)
        }
        _ => false,
    }
}

fn texture_value(style: &StyleDraw, u: f32, v: f32) -> f32 {
    let p = style.texture_period;
    let phase = style.texture_phase;
    let t = match style.texture {
        Texture::Flat => 0.0,
        Texture::HorizontalGradient => u - 0.5,
        Texture::VerticalGradient => v - 0.5,
        Texture::Checker => {
            let a = ((u / p + phase).floor() + (v / p).floor()) as i64;
            if a.rem_euclid(2) == 0 { 0.5 } else { -0.5 }
        }
        Texture::Stripes => {
            if ((u - v) / p + phase).rem_euclid(1.0) < 0.5 { 0.5 } else { -0.5 }
        }
        Texture::Radial => ((u - 0.5).hypot(v - 0.5) / p + phase).fract() - 0.5,
    };
    t * 2.0 * style.texture_amplitude
}

/// Foreground mask of image `image` in `genre`: motif plus player sprites.
pub fn content_mask(config: &SyntheticConfig, genre: usize, image: usize) -> Vec<bool> {
    let content = content_draw(config, genre, image);
    let (h, w) = (config.height, config.width);
    let mut mask = Vec::with_capacity(h * w);
    for y in 0..h {
        for x in 0..w {
            mask.push(cell(&content, genre, h, w, y, x) != Cell::Background);
        }
    }
    mask
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Cell {
    Background,
    Motif,
    Player,
}

fn cell(content: &ContentDraw, genre: usize, h: usize, w: usize, y: usize, x: usize) -> Cell {
    let u = (x as f32 + 0.5) / w as f32;
    let v = (y as f32 + 0.5) / h as f32;
    let half = 0.045f32;
    if content.players.iter().any(|&(pu, pv)| (u - pu).abs() < half && (v - pv).abs() < half) {
        return Cell::Player;
    }
    if motif(genre, u - content.dx, v - content.dy) {
        Cell::Motif
    } else {
        Cell::Background
    }
}

/// Renders image `image` of game `game` in `genre`.
pub fn render(config: &SyntheticConfig, genre: usize, game: usize, image: usize) -> ImageSample {
    let style = style_draw(config, genre, game);
    let content = content_draw(config, genre, image);
    let mut noise_rng =
        stream(config.seed, &[tag::SYNTH, 5, genre as u64, game as u64, image as u64]);
    let noise = Normal::new(0.0f32, style.noise.max(f32::MIN_POSITIVE)).expect("valid sigma");
    let j = config.scene_jitter as f32;
    let scene: [f32; 3] = std::array::from_fn(|_| if j > 0.0 { noise_rng.random_range(-j..j) } else { 0.0 });
    let (h, w) = (config.height, config.width);
    let pixels = Image::from_fn(h, w, |y, x| {
        let u = (x as f32 + 0.5) / w as f32;
        let v = (y as f32 + 0.5) / h as f32;
        let base = match cell(&content, genre, h, w, y, x) {
            Cell::Player => style.accent,
            Cell::Motif => style.foreground,
            Cell::Background => {
                let t = texture_value(&style, u, v);
                style.background.map(|c| c + t)
            }
        };
        let mut out = [0f32; 3];
        for c in 0..3 {
            let n = if style.noise > 0.0 { noise.sample(&mut noise_rng) } else { 0.0 };
            out[c] = base[c] + scene[c] + n;
        }
        out
    });
    ImageSample {
        pixels,
        genre,
        game: game_id(genre, game),
        style: style_category(config, genre, game),
    }
}

/// Builds the manifest describing a synthetic corpus. Games carry generator
/// references so the manifest alone can regenerate every image.
pub fn synthetic_manifest(config: &SyntheticConfig) -> Result<DatasetManifest> {
    config.validate()?;
    let genres = (0..config.genres)
        .map(|id| GenreInfo { id, name: GENRE_NAMES[id].to_string() })
        .collect();
    let styles = (0..config.styles).map(|id| StyleInfo { id, name: style_name(config, id) }).collect();
    let mut games = Vec::with_capacity(config.genres * config.games_per_genre);
    for genre in 0..config.genres {
        for game in 0..config.games_per_genre {
            games.push(GameEntry {
                id: game_id(genre, game),
                genre_id: genre,
                style_id: style_category(config, genre, game),
                source: ImageSource::Generator {
                    generator_ref: GeneratorRef { genre, game, images: config.images_per_game },
                },
            });
        }
    }
    Ok(DatasetManifest {
        genres,
        styles,
        games,
        image_size: [config.height, config.width],
        generator: Some(config.clone()),
    })
}

/// Generates the full corpus: manifest plus samples ordered by genre, game,
/// image index.
pub fn generate_synthetic(config: &SyntheticConfig) -> Result<(DatasetManifest, Vec<ImageSample>)> {
    let manifest = synthetic_manifest(config)?;
    let mut samples = Vec::with_capacity(config.total_images());
    for genre in 0..config.genres {
        for game in 0..config.games_per_genre {
            samples.extend((0..config.images_per_game).map(|i| render(config, genre, game, i)));
        }
    }
    Ok((manifest, samples))
}
