//! Input builders shared by the benchmarks.

use gamerep_core::dataset::Image;
use gamerep_core::linalg::Matrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn random_images(n: usize, size: usize, seed: u64) -> Vec<Image> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| Image::from_fn(size, size, |_, _| [rng.random(), rng.random(), rng.random()])).collect()
}

/// `clusters` Gaussian-ish blobs of `per` points in `dim` dimensions.
pub fn blobs(clusters: usize, per: usize, dim: usize, seed: u64) -> (Matrix, Vec<usize>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let centers: Vec<Vec<f64>> = (0..clusters).map(|_| (0..dim).map(|_| rng.random_range(-4.0..4.0)).collect()).collect();
    let mut rows = Vec::with_capacity(clusters * per);
    let mut labels = Vec::with_capacity(clusters * per);
    for (k, c) in centers.iter().enumerate() {
        for _ in 0..per {
            rows.push(c.iter().map(|v| v + rng.random_range(-1.0..1.0)).collect::<Vec<f64>>());
            labels.push(k);
        }
    }
    (Matrix::from_rows(&rows), labels)
}

pub fn unit_rows(n: usize, dim: usize, seed: u64) -> Matrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut m = Matrix::from_vec(n, dim, (0..n * dim).map(|_| rng.random_range(-1.0..1.0)).collect());
    for i in 0..n {
        let norm = m.row(i).iter().map(|v| v * v).sum::<f64>().sqrt();
        m.row_mut(i).iter_mut().for_each(|v| *v /= norm);
    }
    m
}
