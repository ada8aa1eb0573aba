use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::image::{Image, ImageSample};
use crate::error::{Error, Result};

/// Probability of applying a transform and the range its parameter is drawn from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RandomTransform {
    pub p: f64,
    pub range: [f64; 2],
}

impl RandomTransform {
    pub const fn new(p: f64, lo: f64, hi: f64) -> Self {
        Self { p, range: [lo, hi] }
    }

    fn validate(&self, name: &str) -> Result<()> {
        let [lo, hi] = self.range;
        if !(0.0..=1.0).contains(&self.p) {
            return Err(Error::Config(format!("{name} probability {} outside [0, 1]", self.p)));
        }
        if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
            return Err(Error::Config(format!("{name} range [{lo}, {hi}] is empty")));
        }
        Ok(())
    }

    /// Draws the transform parameter, or `None` when the transform is skipped.
    /// Both random numbers are always consumed so the stream position does not
    /// depend on the outcome.
    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Option<f64> {
        let gate: f64 = rng.random();
        let u: f64 = rng.random();
        let [lo, hi] = self.range;
        (gate < self.p).then(|| lo + (hi - lo) * u)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AugmentationConfig {
    pub flip_p: f64,
    /// Isotropic scale factor.
    pub zoom: RandomTransform,
    /// Multiplicative intensity factor.
    pub brightness: RandomTransform,
    /// Independent per-axis scale factor.
    pub rescale: RandomTransform,
    /// Rotation angle in degrees.
    pub rotation: RandomTransform,
}

impl Default for AugmentationConfig {
    fn default() -> Self {
        Self {
            flip_p: 0.5,
            zoom: RandomTransform::new(0.3, 0.85, 1.15),
            brightness: RandomTransform::new(0.3, 0.7, 1.3),
            rescale: RandomTransform::new(0.2, 0.9, 1.1),
            rotation: RandomTransform::new(0.2, -10.0, 10.0),
        }
    }
}

impl AugmentationConfig {
    pub fn disabled() -> Self {
        Self {
            flip_p: 0.0,
            zoom: RandomTransform { p: 0.0, ..Self::default().zoom },
            brightness: RandomTransform { p: 0.0, ..Self::default().brightness },
            rescale: RandomTransform { p: 0.0, ..Self::default().rescale },
            rotation: RandomTransform { p: 0.0, ..Self::default().rotation },
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.flip_p) {
            return Err(Error::Config(format!("flip probability {} outside [0, 1]", self.flip_p)));
        }
        self.zoom.validate("zoom")?;
        self.brightness.validate("brightness")?;
        self.rescale.validate("rescale")?;
        self.rotation.validate("rotation")?;
        if self.zoom.range[0] <= 0.0 || self.rescale.range[0] <= 0.0 {
            return Err(Error::Config("scale factors must be positive".into()));
        }
        Ok(())
    }
}

/// Random train-time augmentation. Geometric transforms (zoom, per-axis
/// rescale, rotation) are composed into one inverse affine map about the image
/// centre and resampled once; out-of-frame pixels replicate the nearest edge.
pub fn augment<R: Rng + ?Sized>(sample: &ImageSample, config: &AugmentationConfig, rng: &mut R) -> ImageSample {
    ImageSample { pixels: augment_image(&sample.pixels, config, rng), ..sample.clone() }
}

pub fn augment_image<R: Rng + ?Sized>(image: &Image, config: &AugmentationConfig, rng: &mut R) -> Image {
    let flip = rng.random::<f64>() < config.flip_p;
    let zoom = config.zoom.draw(rng).unwrap_or(1.0);
    let rescale_gate = rng.random::<f64>() < config.rescale.p;
    let (uy, ux): (f64, f64) = (rng.random(), rng.random());
    let [lo, hi] = config.rescale.range;
    let (sy, sx) = if rescale_gate { (lo + (hi - lo) * uy, lo + (hi - lo) * ux) } else { (1.0, 1.0) };
    let angle = config.rotation.draw(rng).unwrap_or(0.0).to_radians();
    let brightness = config.brightness.draw(rng).unwrap_or(1.0);

    let mut out = if flip { image.flip_horizontal() } else { image.clone() };

    // Forward map: scale then rotate. Sample with its inverse.
    let (cos, sin) = (angle.cos(), angle.sin());
    let (ky, kx) = (zoom * sy, zoom * sx);
    let identity = ky == 1.0 && kx == 1.0 && sin == 0.0 && cos == 1.0;
    if !identity {
        let cy = (out.height() as f64 - 1.0) / 2.0;
        let cx = (out.width() as f64 - 1.0) / 2.0;
        let src = out.clone();
        out = Image::from_fn(src.height(), src.width(), |y, x| {
            let dy = y as f64 - cy;
            let dx = x as f64 - cx;
            let ry = cos * dy - sin * dx;
            let rx = sin * dy + cos * dx;
            src.sample_bilinear(cy + ry / ky, cx + rx / kx)
        });
    }
    if brightness != 1.0 {
        let b = brightness as f32;
        out.map_in_place(|v| v * b);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn textured() -> Image {
        Image::from_fn(24, 20, |y, x| {
            let v = ((y * 7 + x * 13) % 17) as f32 / 16.0;
            [v, 1.0 - v, (y as f32) / 23.0]
        })
    }

    fn sample() -> ImageSample {
        ImageSample { pixels: textured(), genre: 3, game: "g03_01".into(), style: 2 }
    }

    #[test]
    fn zero_probability_is_identity() {
        let cfg = AugmentationConfig::disabled();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..20 {
            assert_eq!(augment(&sample(), &cfg, &mut rng), sample());
        }
    }

    #[test]
    fn neutral_parameters_are_identity() {
        let cfg = AugmentationConfig {
            flip_p: 0.0,
            zoom: RandomTransform::new(1.0, 1.0, 1.0),
            brightness: RandomTransform::new(1.0, 1.0, 1.0),
            rescale: RandomTransform::new(1.0, 1.0, 1.0),
            rotation: RandomTransform::new(1.0, 0.0, 0.0),
        };
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..20 {
            assert_eq!(augment(&sample(), &cfg, &mut rng).pixels, textured());
        }
    }

    #[test]
    fn double_flip_restores() {
        let cfg = AugmentationConfig { flip_p: 1.0, ..AugmentationConfig::disabled() };
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let once = augment(&sample(), &cfg, &mut rng);
        assert_ne!(once.pixels, textured());
        let twice = augment(&once, &cfg, &mut rng);
        assert_eq!(twice.pixels, textured());
    }

    #[test]
    fn rotation_of_constant_image_is_constant() {
        let cfg = AugmentationConfig {
            rotation: RandomTransform::new(1.0, 30.0, 30.0),
            ..AugmentationConfig::disabled()
        };
        let img = Image::filled(16, 16, 0.6);
        let out = augment_image(&img, &cfg, &mut ChaCha8Rng::seed_from_u64(0));
        assert!(out.data().iter().all(|&v| v == 0.6));
    }

    #[test]
    fn brightness_scales_and_clamps() {
        let cfg = AugmentationConfig {
            brightness: RandomTransform::new(1.0, 2.0, 2.0),
            ..AugmentationConfig::disabled()
        };
        let img = Image::from_fn(8, 8, |_, x| if x < 4 { [0.2; 3] } else { [0.8; 3] });
        let out = augment_image(&img, &cfg, &mut ChaCha8Rng::seed_from_u64(0));
        assert_eq!(out.pixel(0, 0), [0.4; 3]);
        assert_eq!(out.pixel(0, 7), [1.0; 3]);
    }

    #[test]
    fn invalid_config_rejected() {
        let mut cfg = AugmentationConfig::default();
        cfg.validate().unwrap();
        cfg.zoom.p = 1.5;
        assert!(cfg.validate().is_err());
        let mut cfg = AugmentationConfig::default();
        cfg.rotation.range = [5.0, -5.0];
        assert!(cfg.validate().is_err());
    }

    proptest::proptest! {
        #[test]
        fn preserves_shape_labels_and_range(seed in proptest::prelude::any::<u64>()) {
            let cfg = AugmentationConfig {
                flip_p: 0.5,
                zoom: RandomTransform::new(0.7, 0.6, 1.5),
                brightness: RandomTransform::new(0.7, 0.2, 3.0),
                rescale: RandomTransform::new(0.7, 0.7, 1.3),
                rotation: RandomTransform::new(0.7, -45.0, 45.0),
            };
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let out = augment(&sample(), &cfg, &mut rng);
            proptest::prop_assert_eq!((out.pixels.height(), out.pixels.width()), (24, 20));
            proptest::prop_assert_eq!((out.genre, out.style, out.game.as_str()), (3, 2, "g03_01"));
            proptest::prop_assert!(out.pixels.data().iter().all(|v| (0.0..=1.0).contains(v)));
        }
    }
}
