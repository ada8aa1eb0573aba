//! Categorical cross-entropy and the max-margin pairwise contrastive loss.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{dist, Matrix};

/// Floor applied to probabilities before taking logs.
pub const PROB_FLOOR: f64 = 1e-12;

/// In-batch pairs split by label agreement. All pairs satisfy `i < j`.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct PairSet {
    pub positives: Vec<(usize, usize)>,
    pub negatives: Vec<(usize, usize)>,
}

impl PairSet {
    pub fn len(&self) -> usize {
        self.positives.len() + self.negatives.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LossValue {
    pub value: f64,
    /// Per-sample (cross-entropy) or per-pair (contrastive, positives then
    /// negatives) contributions before averaging.
    pub terms: Vec<f64>,
}

pub fn build_pairs(labels: &[usize]) -> Result<PairSet> {
    if labels.len() < 2 {
        return Err(Error::DegenerateBatch(labels.len()));
    }
    let mut pairs = PairSet::default();
    for i in 0..labels.len() {
        for j in (i + 1)..labels.len() {
            if labels[i] == labels[j] {
                pairs.positives.push((i, j));
            } else {
                pairs.negatives.push((i, j));
            }
        }
    }
    Ok(pairs)
}

fn check_labels(labels: &[usize], rows: usize, classes: usize) -> Result<()> {
    if labels.len() != rows {
        return Err(Error::Shape(format!("{} labels for {rows} rows", labels.len())));
    }
    if let Some(&label) = labels.iter().find(|&&l| l >= classes) {
        return Err(Error::LabelOutOfRange { label, classes });
    }
    Ok(())
}

/// Mean over the batch of `-ln(max(p_true, 1e-12))`.
pub fn cross_entropy(probs: &Matrix, labels: &[usize]) -> Result<LossValue> {
    check_labels(labels, probs.rows(), probs.cols())?;
    if labels.is_empty() {
        return Err(Error::DegenerateBatch(0));
    }
    let terms: Vec<f64> = labels.iter().enumerate().map(|(i, &y)| -probs.get(i, y).max(PROB_FLOOR).ln()).collect();
    let value = terms.iter().sum::<f64>() / terms.len() as f64;
    Ok(LossValue { value, terms })
}

/// Gradient of [`cross_entropy`] with respect to the probabilities.
pub fn cross_entropy_grad(probs: &Matrix, labels: &[usize]) -> Result<Matrix> {
    check_labels(labels, probs.rows(), probs.cols())?;
    let b = labels.len() as f64;
    let mut g = Matrix::zeros(probs.rows(), probs.cols());
    for (i, &y) in labels.iter().enumerate() {
        let p = probs.get(i, y);
        if p > PROB_FLOOR {
            g.row_mut(i)[y] = -1.0 / (p * b);
        }
    }
    Ok(g)
}

/// Pulls a probability-space gradient back through a row-wise softmax.
pub fn softmax_backward(probs: &Matrix, d_probs: &Matrix) -> Matrix {
    let mut d = Matrix::zeros(probs.rows(), probs.cols());
    for i in 0..probs.rows() {
        let p = probs.row(i);
        let g = d_probs.row(i);
        let dot: f64 = p.iter().zip(g).map(|(a, b)| a * b).sum();
        for ((o, pi), gi) in d.row_mut(i).iter_mut().zip(p).zip(g) {
            *o = pi * (gi - dot);
        }
    }
    d
}

fn pair_term(za: &[f64], zb: &[f64], positive: bool, margin: f64) -> f64 {
    let d = dist(za, zb);
    if positive {
        d * d
    } else {
        (margin - d).max(0.0).powi(2)
    }
}

/// Max-margin contrastive loss averaged over every in-batch pair: squared
/// distance for same-label pairs, `max(0, m - d)^2` for different-label pairs.
pub fn contrastive_max_margin(embeddings: &Matrix, labels: &[usize], margin: f64) -> Result<LossValue> {
    Ok(contrastive_with_grad(embeddings, labels, margin, false)?.0)
}

/// Loss and its gradient with respect to the embeddings.
pub fn contrastive_grad(embeddings: &Matrix, labels: &[usize], margin: f64) -> Result<(LossValue, Matrix)> {
    contrastive_with_grad(embeddings, labels, margin, true)
}

fn contrastive_with_grad(embeddings: &Matrix, labels: &[usize], margin: f64, want_grad: bool) -> Result<(LossValue, Matrix)> {
    if !(margin > 0.0 && margin.is_finite()) {
        return Err(Error::Config(format!("margin {margin} must be positive")));
    }
    if labels.len() != embeddings.rows() {
        return Err(Error::Shape(format!("{} labels for {} embeddings", labels.len(), embeddings.rows())));
    }
    let pairs = build_pairs(labels)?;
    let count = pairs.len() as f64;
    let mut grad = Matrix::zeros(if want_grad { embeddings.rows() } else { 0 }, embeddings.cols());
    let mut terms = Vec::with_capacity(pairs.len());
    let tagged = pairs.positives.iter().map(|p| (p, true)).chain(pairs.negatives.iter().map(|p| (p, false)));
    for (&(i, j), positive) in tagged {
        let (zi, zj) = (embeddings.row(i), embeddings.row(j));
        terms.push(pair_term(zi, zj, positive, margin));
        if !want_grad {
            continue;
        }
        // d term / d z_i; d term / d z_j is its negation.
        let coef = if positive {
            2.0
        } else {
            let d = dist(zi, zj);
            if d < margin && d > 0.0 {
                -2.0 * (margin - d) / d
            } else {
                0.0
            }
        } / count;
        if coef == 0.0 {
            continue;
        }
        let diff: Vec<f64> = zi.iter().zip(zj).map(|(a, b)| coef * (a - b)).collect();
        for (g, v) in grad.row_mut(i).iter_mut().zip(&diff) {
            *g += v;
        }
        for (g, v) in grad.row_mut(j).iter_mut().zip(&diff) {
            *g -= v;
        }
    }
    let value = terms.iter().sum::<f64>() / count;
    Ok((LossValue { value, terms }, grad))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pair_enumeration() {
        let p = build_pairs(&[0, 0, 1]).unwrap();
        assert_eq!(p.positives, vec![(0, 1)]);
        assert_eq!(p.negatives, vec![(0, 2), (1, 2)]);
        let same = build_pairs(&[2; 4]).unwrap();
        assert_eq!((same.positives.len(), same.negatives.len()), (6, 0));
        let distinct = build_pairs(&[0, 1, 2, 3]).unwrap();
        assert_eq!((distinct.positives.len(), distinct.negatives.len()), (0, 6));
        assert!(matches!(build_pairs(&[1]), Err(Error::DegenerateBatch(1))));
    }

    #[test]
    fn cross_entropy_examples() {
        let one_hot = Matrix::from_rows(&[[0.0, 1.0, 0.0]]);
        assert_eq!(cross_entropy(&one_hot, &[1]).unwrap().value, 0.0);
        let uniform = Matrix::from_rows(&[[0.1; 10]]);
        assert!((cross_entropy(&uniform, &[4]).unwrap().value - 10f64.ln()).abs() < 1e-12);
        let half = Matrix::from_rows(&[[0.5, 0.5]]);
        assert!((cross_entropy(&half, &[0]).unwrap().value - 2f64.ln()).abs() < 1e-12);
        assert!(matches!(cross_entropy(&half, &[2]), Err(Error::LabelOutOfRange { label: 2, classes: 2 })));
    }

    #[test]
    fn cross_entropy_floor_keeps_loss_finite() {
        let wrong = Matrix::from_rows(&[[1.0, 0.0]]);
        let v = cross_entropy(&wrong, &[1]).unwrap().value;
        assert!((v - (-PROB_FLOOR.ln())).abs() < 1e-9);
    }

    #[test]
    fn contrastive_pair_examples() {
        let z = Matrix::from_rows(&[[1.0, 0.0], [1.0, 0.0]]);
        assert_eq!(contrastive_max_margin(&z, &[0, 0], 1.0).unwrap().value, 0.0);
        assert_eq!(contrastive_max_margin(&z, &[0, 1], 1.0).unwrap().value, 1.0);
        let ortho = Matrix::from_rows(&[[1.0, 0.0], [0.0, 1.0]]);
        assert_eq!(contrastive_max_margin(&ortho, &[0, 1], 1.0).unwrap().value, 0.0);
    }

    fn brute_force(z: &Matrix, labels: &[usize], m: f64) -> f64 {
        let mut sum = 0.0;
        let mut count = 0;
        for i in 0..labels.len() {
            for j in (i + 1)..labels.len() {
                let d = dist(z.row(i), z.row(j));
                sum += if labels[i] == labels[j] { d * d } else { (m - d).max(0.0).powi(2) };
                count += 1;
            }
        }
        sum / count as f64
    }

    #[test]
    fn contrastive_three_point_batch() {
        // z0 = z2 with different labels: the hinge is fully active (term 1).
        let z = Matrix::from_rows(&[[1.0, 0.0], [0.0, 1.0], [1.0, 0.0]]);
        let loss = contrastive_max_margin(&z, &[0, 0, 1], 1.0).unwrap();
        for (t, e) in loss.terms.iter().zip([2.0, 1.0, 0.0]) {
            assert!((t - e).abs() < 1e-12);
        }
        assert!((loss.value - 1.0).abs() < 1e-12);
        assert!((loss.value - brute_force(&z, &[0, 0, 1], 1.0)).abs() < 1e-12);

        // Antipodal negative: both hinges inactive, mean 2/3.
        let z = Matrix::from_rows(&[[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0]]);
        let loss = contrastive_max_margin(&z, &[0, 0, 1], 1.0).unwrap();
        assert!((loss.value - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn contrastive_rejects_bad_inputs() {
        let z = Matrix::from_rows(&[[1.0, 0.0]]);
        assert!(matches!(contrastive_max_margin(&z, &[0], 1.0), Err(Error::DegenerateBatch(1))));
        let z2 = Matrix::from_rows(&[[1.0, 0.0], [0.0, 1.0]]);
        assert!(contrastive_max_margin(&z2, &[0, 1], 0.0).is_err());
    }

    #[test]
    fn softmax_backward_of_uniform_gradient_is_zero() {
        let p = Matrix::from_rows(&[[0.2, 0.3, 0.5]]);
        let g = Matrix::from_rows(&[[1.0, 1.0, 1.0]]);
        assert!(softmax_backward(&p, &g).data().iter().all(|v| v.abs() < 1e-15));
    }
}
