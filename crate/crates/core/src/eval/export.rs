//! CSV and PNG exports of representations and 2-D projections.

use std::collections::BTreeMap;
use std::path::Path;

use image::{Rgb, RgbImage};

use crate::dataset::ImageSample;
use crate::error::{Error, Result};
use crate::linalg::Matrix;

fn check_rows(points: &Matrix, samples: &[&ImageSample]) -> Result<()> {
    if points.rows() != samples.len() {
        return Err(Error::Shape(format!("{} rows for {} samples", points.rows(), samples.len())));
    }
    Ok(())
}

fn write_rows(path: &Path, header: Vec<String>, points: &Matrix, samples: &[&ImageSample]) -> Result<()> {
    check_rows(points, samples)?;
    let csv_err = |e: csv::Error| Error::Io { path: path.to_path_buf(), source: e.into() };
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(&header).map_err(csv_err)?;
    for (i, (row, s)) in points.iter_rows().zip(samples).enumerate() {
        let mut record = vec![i.to_string(), s.game.clone(), s.genre.to_string(), s.style.to_string()];
        record.extend(row.iter().map(|v| v.to_string()));
        w.write_record(&record).map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Writes `id,game,genre,style,x0..x{d-1}`.
pub fn write_representations_csv(path: &Path, reps: &Matrix, samples: &[&ImageSample]) -> Result<()> {
    let mut header: Vec<String> = ["id", "game", "genre", "style"].map(String::from).to_vec();
    header.extend((0..reps.cols()).map(|j| format!("x{j}")));
    write_rows(path, header, reps, samples)
}

/// Writes `id,game,genre,style,tx,ty`.
pub fn write_projection_csv(path: &Path, coords: &Matrix, samples: &[&ImageSample]) -> Result<()> {
    if coords.cols() != 2 {
        return Err(Error::Shape(format!("projection has {} columns, expected 2", coords.cols())));
    }
    let header = ["id", "game", "genre", "style", "tx", "ty"].map(String::from).to_vec();
    write_rows(path, header, coords, samples)
}

const COLORS: [[u8; 3]; 10] = [
    [31, 119, 180],
    [255, 127, 14],
    [44, 160, 44],
    [214, 39, 40],
    [148, 103, 189],
    [140, 86, 75],
    [227, 119, 194],
    [127, 127, 127],
    [188, 189, 34],
    [23, 190, 207],
];

#[derive(Debug, Clone, Copy)]
enum Marker {
    Disc,
    Square,
    Triangle,
    Cross,
    Diamond,
    Ring,
}

const MARKERS: [Marker; 6] = [Marker::Disc, Marker::Square, Marker::Triangle, Marker::Cross, Marker::Diamond, Marker::Ring];

fn covers(marker: Marker, dx: i32, dy: i32, r: i32) -> bool {
    let (fx, fy, fr) = (dx as f64, dy as f64, r as f64);
    match marker {
        Marker::Disc => fx * fx + fy * fy <= fr * fr,
        Marker::Square => dx.abs() <= r - 1 && dy.abs() <= r - 1,
        Marker::Triangle => dy <= r - 1 && dy >= -r && fx.abs() <= (fy + fr) * 0.6,
        Marker::Cross => (dx - dy).abs() <= 1 || (dx + dy).abs() <= 1,
        Marker::Diamond => dx.abs() + dy.abs() <= r,
        Marker::Ring => {
            let d2 = fx * fx + fy * fy;
            d2 <= fr * fr && d2 >= (fr - 1.6) * (fr - 1.6)
        }
    }
}

/// Renders a scatter plot of 2-D points, coloured by genre, with the marker
/// shape cycling over the games of each genre.
pub fn scatter_plot(coords: &Matrix, samples: &[&ImageSample], size: u32) -> Result<RgbImage> {
    check_rows(coords, samples)?;
    if coords.cols() != 2 || size < 64 {
        return Err(Error::Shape("scatter needs n x 2 points and at least 64 px".into()));
    }
    let mut img = RgbImage::from_pixel(size, size, Rgb([255, 255, 255]));
    if coords.rows() == 0 {
        return Ok(img);
    }
    let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
    for row in coords.iter_rows() {
        for c in 0..2 {
            lo[c] = lo[c].min(row[c]);
            hi[c] = hi[c].max(row[c]);
        }
    }
    let mut game_slot: BTreeMap<(usize, &str), usize> = BTreeMap::new();
    let mut per_genre: BTreeMap<usize, usize> = BTreeMap::new();
    for s in samples {
        game_slot.entry((s.genre, s.game.as_str())).or_insert_with(|| {
            let next = per_genre.entry(s.genre).or_insert(0);
            *next += 1;
            *next - 1
        });
    }
    let margin = (size / 20) as f64;
    let span = size as f64 - 2.0 * margin;
    let radius = (size as i32 / 160).max(3);
    for (row, s) in coords.iter_rows().zip(samples) {
        let px = |c: usize| {
            let range = hi[c] - lo[c];
            let t = if range > 0.0 { (row[c] - lo[c]) / range } else { 0.5 };
            margin + t * span
        };
        let (cx, cy) = (px(0).round() as i32, (size as f64 - px(1)).round() as i32);
        let color = Rgb(COLORS[s.genre % COLORS.len()]);
        let marker = MARKERS[game_slot[&(s.genre, s.game.as_str())] % MARKERS.len()];
        for dy in -radius..=radius {
            for dx in -radius..=radius {
                let (x, y) = (cx + dx, cy + dy);
                if x >= 0 && y >= 0 && (x as u32) < size && (y as u32) < size && covers(marker, dx, dy, radius) {
                    img.put_pixel(x as u32, y as u32, color);
                }
            }
        }
    }
    Ok(img)
}

pub fn save_scatter_png(path: &Path, coords: &Matrix, samples: &[&ImageSample], size: u32) -> Result<()> {
    scatter_plot(coords, samples, size)?.save(path).map_err(Error::from)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::Image;

    fn samples(n: usize) -> Vec<ImageSample> {
        (0..n)
            .map(|i| ImageSample { pixels: Image::filled(8, 8, 0.0), genre: i % 2, game: format!("g{}", i % 4), style: i % 3 })
            .collect()
    }

    #[test]
    fn csv_headers_and_rows() {
        let owned = samples(3);
        let refs: Vec<&ImageSample> = owned.iter().collect();
        let dir = tempfile::tempdir().unwrap();
        let reps = Matrix::from_rows(&[[0.5, 1.0, 2.0], [0.0, 0.0, 0.0], [1.0, -1.0, 3.0]]);
        let path = dir.path().join("reps.csv");
        write_representations_csv(&path, &reps, &refs).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "id,game,genre,style,x0,x1,x2");
        assert_eq!(lines[1], "0,g0,0,0,0.5,1,2");
        assert_eq!(lines.len(), 4);

        let coords = Matrix::from_rows(&[[0.0, 1.0], [2.0, 3.0], [4.0, 5.0]]);
        let path = dir.path().join("tsne.csv");
        write_projection_csv(&path, &coords, &refs).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "id,game,genre,style,tx,ty");
        assert_eq!(lines[3], "2,g2,0,2,4,5");
        assert!(write_projection_csv(&path, &reps, &refs).is_err());
    }

    #[test]
    fn scatter_draws_every_point() {
        let owned = samples(8);
        let refs: Vec<&ImageSample> = owned.iter().collect();
        let coords = Matrix::from_rows(&(0..8).map(|i| [i as f64, (i * i) as f64]).collect::<Vec<_>>());
        let img = scatter_plot(&coords, &refs, 200).unwrap();
        let colored = img.pixels().filter(|p| p.0 != [255, 255, 255]).count();
        assert!(colored > 8 * 10);
        assert!(img.pixels().any(|p| p.0 == COLORS[0]) && img.pixels().any(|p| p.0 == COLORS[1]));
    }
}
