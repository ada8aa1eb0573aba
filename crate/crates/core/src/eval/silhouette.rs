//! Silhouette coefficients over Euclidean distances.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{dist, Matrix};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SilhouettePoint {
    /// Mean distance to the other members of the point's own cluster.
    pub a: f64,
    /// Smallest mean distance to the members of another cluster.
    pub b: f64,
    pub s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SilhouetteReport {
    /// Mean coefficient over all points.
    pub score: f64,
    /// Mean coefficient of the points carrying each label.
    pub per_label: BTreeMap<usize, f64>,
    pub points: Vec<SilhouettePoint>,
}

/// Per-point silhouette `s = (b - a) / max(a, b)`.
///
/// Points in singleton clusters get `s = 0`, as do points with
/// `a = b = 0` (every point coincident). At least two distinct labels are
/// required. Cost is `O(n^2 d)`; rows are processed in parallel and reduced
/// in index order.
pub fn silhouette(points: &Matrix, labels: &[usize]) -> Result<SilhouetteReport> {
    let n = points.rows();
    if labels.len() != n {
        return Err(Error::Shape(format!("{} labels for {n} points", labels.len())));
    }
    let clusters: BTreeMap<usize, usize> =
        labels.iter().copied().collect::<std::collections::BTreeSet<_>>().into_iter().enumerate().map(|(i, l)| (l, i)).collect();
    if clusters.len() < 2 {
        return Err(Error::SingleLabel);
    }
    let k = clusters.len();
    let dense: Vec<usize> = labels.iter().map(|l| clusters[l]).collect();
    let mut sizes = vec![0usize; k];
    for &c in &dense {
        sizes[c] += 1;
    }

    let coefficients: Vec<SilhouettePoint> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut sums = vec![0.0; k];
            let row = points.row(i);
            for j in 0..n {
                if j != i {
                    sums[dense[j]] += dist(row, points.row(j));
                }
            }
            let own = dense[i];
            let a = if sizes[own] > 1 { sums[own] / (sizes[own] - 1) as f64 } else { 0.0 };
            let b = (0..k)
                .filter(|&c| c != own)
                .map(|c| sums[c] / sizes[c] as f64)
                .fold(f64::INFINITY, f64::min);
            let max = a.max(b);
            let s = if sizes[own] == 1 || max <= 0.0 { 0.0 } else { (b - a) / max };
            SilhouettePoint { a, b, s }
        })
        .collect();

    let score = coefficients.iter().map(|p| p.s).sum::<f64>() / n as f64;
    let mut per_label = BTreeMap::new();
    for (&label, &c) in &clusters {
        let (sum, count) = coefficients
            .iter()
            .zip(&dense)
            .filter(|(_, d)| **d == c)
            .fold((0.0, 0usize), |(s, n), (p, _)| (s + p.s, n + 1));
        per_label.insert(label, sum / count as f64);
    }
    Ok(SilhouetteReport { score, per_label, points: coefficients })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn separated_tight_clusters_score_one() {
        let m = Matrix::from_rows(&[[0.0, 0.0], [0.0, 0.0], [5.0, 5.0], [5.0, 5.0]]);
        let r = silhouette(&m, &[0, 0, 1, 1]).unwrap();
        assert!(r.points.iter().all(|p| p.s == 1.0));
        assert_eq!(r.score, 1.0);
    }

    #[test]
    fn coincident_points_score_zero() {
        let m = Matrix::from_rows(&[[1.0, 2.0]; 4]);
        let r = silhouette(&m, &[0, 1, 0, 1]).unwrap();
        assert!(r.points.iter().all(|p| p.a == 0.0 && p.b == 0.0 && p.s == 0.0));
        assert_eq!(r.score, 0.0);
    }

    #[test]
    fn one_dimensional_example() {
        let m = Matrix::from_rows(&[[0.0], [1.0], [5.0], [6.0]]);
        let r = silhouette(&m, &[0, 0, 1, 1]).unwrap();
        let p = r.points[0];
        assert_eq!((p.a, p.b), (1.0, 5.5));
        assert!((p.s - 4.5 / 5.5).abs() < 1e-15);
        assert!((p.s - 0.8182).abs() < 1e-4);
    }

    #[test]
    fn singleton_cluster_scores_zero() {
        let m = Matrix::from_rows(&[[0.0], [1.0], [9.0]]);
        let r = silhouette(&m, &[0, 0, 1]).unwrap();
        assert_eq!(r.points[2].s, 0.0);
        assert_eq!(r.per_label[&1], 0.0);
    }

    #[test]
    fn single_label_rejected() {
        let m = Matrix::from_rows(&[[0.0], [1.0]]);
        assert!(matches!(silhouette(&m, &[3, 3]), Err(Error::SingleLabel)));
    }

    #[test]
    fn sparse_labels_are_keyed_by_value() {
        let m = Matrix::from_rows(&[[0.0], [0.1], [4.0], [4.2]]);
        let r = silhouette(&m, &[7, 7, 2, 2]).unwrap();
        assert_eq!(r.per_label.keys().copied().collect::<Vec<_>>(), vec![2, 7]);
    }
}
