use std::path::Path;

use crate::error::{Error, Result};

/// Interleaved `h x w x 3` RGB buffer with channel values in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    height: usize,
    width: usize,
    data: Vec<f32>,
}

impl Image {
    pub fn new(height: usize, width: usize, data: Vec<f32>) -> Result<Self> {
        if data.len() != height * width * 3 {
            return Err(Error::Shape(format!(
                "buffer of {} values cannot hold a {height}x{width}x3 image",
                data.len()
            )));
        }
        if let Some(v) = data.iter().find(|v| !v.is_finite() || **v < 0.0 || **v > 1.0) {
            return Err(Error::Validation(format!("pixel value {v} outside [0, 1]")));
        }
        Ok(Self { height, width, data })
    }

    pub fn filled(height: usize, width: usize, value: f32) -> Self {
        Self { height, width, data: vec![value.clamp(0.0, 1.0); height * width * 3] }
    }

    /// Builds an image by evaluating `f(y, x) -> [r, g, b]`; values are clamped.
    pub fn from_fn(height: usize, width: usize, mut f: impl FnMut(usize, usize) -> [f32; 3]) -> Self {
        let mut data = Vec::with_capacity(height * width * 3);
        for y in 0..height {
            for x in 0..width {
                data.extend(f(y, x).iter().map(|v| v.clamp(0.0, 1.0)));
            }
        }
        Self { height, width, data }
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn get(&self, y: usize, x: usize, c: usize) -> f32 {
        self.data[(y * self.width + x) * 3 + c]
    }

    pub fn pixel(&self, y: usize, x: usize) -> [f32; 3] {
        let i = (y * self.width + x) * 3;
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    pub fn channel_means(&self) -> [f64; 3] {
        let mut sums = [0f64; 3];
        for px in self.data.chunks_exact(3) {
            for c in 0..3 {
                sums[c] += px[c] as f64;
            }
        }
        let n = (self.height * self.width) as f64;
        sums.map(|s| s / n)
    }

    pub(crate) fn map_in_place(&mut self, f: impl Fn(f32) -> f32) {
        for v in &mut self.data {
            *v = f(*v).clamp(0.0, 1.0);
        }
    }

    pub fn flip_horizontal(&self) -> Self {
        Self::from_fn(self.height, self.width, |y, x| self.pixel(y, self.width - 1 - x))
    }

    /// Bilinear sample at continuous source coordinates, replicating edges.
    pub(crate) fn sample_bilinear(&self, sy: f64, sx: f64) -> [f32; 3] {
        let max_y = (self.height - 1) as f64;
        let max_x = (self.width - 1) as f64;
        let sy = sy.clamp(0.0, max_y);
        let sx = sx.clamp(0.0, max_x);
        let y0 = sy.floor() as usize;
        let x0 = sx.floor() as usize;
        let y1 = (y0 + 1).min(self.height - 1);
        let x1 = (x0 + 1).min(self.width - 1);
        let ty = (sy - y0 as f64) as f32;
        let tx = (sx - x0 as f64) as f32;
        let (p00, p01, p10, p11) =
            (self.pixel(y0, x0), self.pixel(y0, x1), self.pixel(y1, x0), self.pixel(y1, x1));
        let mut out = [0f32; 3];
        for c in 0..3 {
            let top = lerp(p00[c], p01[c], tx);
            let bottom = lerp(p10[c], p11[c], tx);
            out[c] = lerp(top, bottom, ty);
        }
        out
    }

    pub fn load_png(path: &Path) -> Result<Self> {
        let reader = image::ImageReader::open(path).map_err(|e| Error::io(path, e))?;
        let rgb = reader.with_guessed_format().map_err(|e| Error::io(path, e))?.decode()?.to_rgb8();
        let (w, h) = rgb.dimensions();
        let data = rgb.as_raw().iter().map(|&v| v as f32 / 255.0).collect();
        Ok(Self { height: h as usize, width: w as usize, data })
    }

    pub fn to_rgb8(&self) -> image::RgbImage {
        let raw = self.data.iter().map(|v| (v * 255.0).round().clamp(0.0, 255.0) as u8).collect();
        image::RgbImage::from_raw(self.width as u32, self.height as u32, raw)
            .expect("buffer length matches dimensions")
    }

    pub fn save_png(&self, path: &Path) -> Result<()> {
        self.to_rgb8().save(path)?;
        Ok(())
    }
}

// Exact at both ends, so constant neighbourhoods are reproduced bit-for-bit.
fn lerp(a: f32, b: f32, t: f32) -> f32 {
    a + (b - a) * t
}

/// One labelled gameplay image.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageSample {
    pub pixels: Image,
    pub genre: usize,
    pub game: String,
    pub style: usize,
}

/// Bilinear resampling (half-pixel centres, edge replication).
pub fn resize(sample: &ImageSample, height: usize, width: usize) -> Result<ImageSample> {
    Ok(ImageSample { pixels: resize_image(&sample.pixels, height, width)?, ..sample.clone() })
}

pub fn resize_image(image: &Image, height: usize, width: usize) -> Result<Image> {
    if height < 8 || width < 8 {
        return Err(Error::Config(format!("target size {height}x{width} is below the 8x8 minimum")));
    }
    if image.height == height && image.width == width {
        return Ok(image.clone());
    }
    Ok(resample(image, height, width))
}

pub(crate) fn resample(image: &Image, height: usize, width: usize) -> Image {
    let scale_y = image.height as f64 / height as f64;
    let scale_x = image.width as f64 / width as f64;
    Image::from_fn(height, width, |y, x| {
        let sy = (y as f64 + 0.5) * scale_y - 0.5;
        let sx = (x as f64 + 0.5) * scale_x - 0.5;
        image.sample_bilinear(sy, sx)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(pixels: Image) -> ImageSample {
        ImageSample { pixels, genre: 0, game: "g".into(), style: 0 }
    }

    #[test]
    fn same_size_is_identity() {
        let img = Image::from_fn(64, 64, |y, x| [(y as f32) / 64.0, (x as f32) / 64.0, 0.25]);
        let out = resize(&sample(img.clone()), 64, 64).unwrap();
        assert_eq!(out.pixels, img);
    }

    #[test]
    fn constant_image_is_preserved() {
        let img = Image::filled(100, 80, 0.37);
        let out = resize(&sample(img), 32, 32).unwrap();
        assert!(out.pixels.data().iter().all(|&v| v == 0.37));
        assert_eq!((out.pixels.height(), out.pixels.width()), (32, 32));
    }

    #[test]
    fn checkerboard_upsample_centre_is_half() {
        let img = Image::from_fn(2, 2, |y, x| if (y + x) % 2 == 0 { [0.0; 3] } else { [1.0; 3] });
        // The public op rejects targets below 8x8, so go through the kernel.
        let out = resample(&img, 3, 3);
        // Hand-evaluated: source (0.5, 0.5) weights all four corners 1/4.
        assert_eq!(out.pixel(1, 1), [0.5; 3]);
        assert_eq!(out.pixel(0, 0), [0.0; 3]);
    }

    #[test]
    fn rejects_tiny_targets() {
        let img = Image::filled(16, 16, 0.5);
        assert!(matches!(resize(&sample(img), 4, 16), Err(Error::Config(_))));
    }

    #[test]
    fn new_validates_range_and_shape() {
        assert!(Image::new(2, 2, vec![0.5; 12]).is_ok());
        assert!(Image::new(2, 2, vec![0.5; 11]).is_err());
        assert!(Image::new(1, 1, vec![0.5, 1.5, 0.0]).is_err());
        assert!(Image::new(1, 1, vec![0.5, f32::NAN, 0.0]).is_err());
    }

    #[test]
    fn png_round_trip_is_quantized() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.png");
        let img = Image::from_fn(8, 9, |y, x| [y as f32 / 7.0, x as f32 / 8.0, 1.0]);
        img.save_png(&path).unwrap();
        let back = Image::load_png(&path).unwrap();
        assert_eq!((back.height(), back.width()), (8, 9));
        for (a, b) in img.data().iter().zip(back.data()) {
            assert!((a - b).abs() <= 0.5 / 255.0 + 1e-6);
        }
    }

    proptest::proptest! {
        #[test]
        fn resize_keeps_range(h in 8usize..40, w in 8usize..40, seed in 0u64..1000) {
            let img = Image::from_fn(13, 17, |y, x| {
                let v = ((y * 31 + x * 7) as u64 ^ seed) % 101;
                [v as f32 / 100.0, 1.0 - v as f32 / 100.0, 0.5]
            });
            let out = resize_image(&img, h, w).unwrap();
            proptest::prop_assert!(out.data().iter().all(|v| (0.0..=1.0).contains(v)));
        }
    }
}
