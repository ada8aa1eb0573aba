use serde::{Deserialize, Serialize};

use crate::linalg::Matrix;

/// Index of the largest entry; ties go to the lowest index.
pub fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in row.iter().enumerate() {
        if v > row[best] {
            best = i;
        }
    }
    best
}

pub fn predictions(probs: &Matrix) -> Vec<usize> {
    probs.iter_rows().map(argmax).collect()
}

/// Fraction of rows whose argmax equals the label. Empty input yields 0.
pub fn accuracy(probs: &Matrix, labels: &[usize]) -> f64 {
    if labels.is_empty() {
        return 0.0;
    }
    let hits = probs.iter_rows().zip(labels).filter(|(row, &y)| argmax(row) == y).count();
    hits as f64 / labels.len() as f64
}

/// Counts with rows indexed by true label and columns by prediction.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn from_predictions(predicted: &[usize], labels: &[usize], classes: usize) -> Self {
        let mut counts = vec![vec![0u64; classes]; classes];
        for (&p, &y) in predicted.iter().zip(labels) {
            counts[y][p] += 1;
        }
        Self { counts }
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> u64 {
        self.counts.iter().enumerate().map(|(i, row)| row[i]).sum()
    }

    pub fn accuracy(&self) -> f64 {
        match self.total() {
            0 => 0.0,
            t => self.trace() as f64 / t as f64,
        }
    }

    /// Row-normalised percentages; empty rows stay zero.
    pub fn row_percentages(&self) -> Vec<Vec<f64>> {
        self.counts
            .iter()
            .map(|row| {
                let sum: u64 = row.iter().sum();
                row.iter().map(|&c| if sum == 0 { 0.0 } else { 100.0 * c as f64 / sum as f64 }).collect()
            })
            .collect()
    }
}

pub fn confusion(probs: &Matrix, labels: &[usize]) -> ConfusionMatrix {
    ConfusionMatrix::from_predictions(&predictions(probs), labels, probs.cols())
}

/// Mean, sample standard deviation and 95% Student-t half-width.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    pub std: f64,
    pub ci95: f64,
    pub n: usize,
}

/// Two-sided 97.5% Student-t quantiles for 1..=30 degrees of freedom.
const T975: [f64; 30] = [
    12.706, 4.303, 3.182, 2.776, 2.571, 2.447, 2.365, 2.306, 2.262, 2.228, 2.201, 2.179, 2.160, 2.145, 2.131,
    2.120, 2.110, 2.101, 2.093, 2.086, 2.080, 2.074, 2.069, 2.064, 2.060, 2.056, 2.052, 2.048, 2.045, 2.042,
];

pub fn summarize(values: &[f64]) -> Summary {
    let n = values.len();
    if n == 0 {
        return Summary { mean: f64::NAN, std: f64::NAN, ci95: f64::NAN, n };
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return Summary { mean, std: 0.0, ci95: 0.0, n };
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let std = var.sqrt();
    let t = T975.get(n - 2).copied().unwrap_or(1.96);
    Summary { mean, std, ci95: t * std / (n as f64).sqrt(), n }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one_hot(preds: &[usize], classes: usize) -> Matrix {
        let rows: Vec<Vec<f64>> =
            preds.iter().map(|&p| (0..classes).map(|c| if c == p { 0.9 } else { 0.1 / classes as f64 }).collect()).collect();
        Matrix::from_rows(&rows)
    }

    #[test]
    fn accuracy_examples() {
        assert_eq!(accuracy(&one_hot(&[0, 1, 2], 3), &[0, 1, 2]), 1.0);
        assert_eq!(accuracy(&one_hot(&[1, 2, 0], 3), &[0, 1, 2]), 0.0);
        assert_eq!(accuracy(&one_hot(&[0, 1, 1, 0], 2), &[0, 1, 1, 1]), 0.75);
    }

    #[test]
    fn ties_break_low() {
        assert_eq!(argmax(&[0.25, 0.25, 0.25, 0.25]), 0);
        assert_eq!(argmax(&[0.1, 0.45, 0.45]), 1);
    }

    #[test]
    fn confusion_tally() {
        let labels = [0, 0, 0, 1, 1, 2, 2, 2, 2];
        let preds = [0, 1, 0, 1, 2, 2, 2, 0, 2];
        let cm = confusion(&one_hot(&preds, 3), &labels);
        // Independent tally by hand.
        assert_eq!(cm.counts, vec![vec![2, 1, 0], vec![0, 1, 1], vec![1, 0, 3]]);
        assert_eq!(cm.total(), 9);
        assert_eq!(cm.accuracy(), accuracy(&one_hot(&preds, 3), &labels));
        for row in cm.row_percentages() {
            assert!((row.iter().sum::<f64>() - 100.0).abs() < 1e-9);
        }
    }

    #[test]
    fn perfect_is_diagonal() {
        let labels = [0, 1, 2, 1];
        let cm = confusion(&one_hot(&labels, 3), &labels);
        for (i, row) in cm.counts.iter().enumerate() {
            for (j, &c) in row.iter().enumerate() {
                assert!(i == j || c == 0);
            }
        }
    }

    #[test]
    fn summary_stats() {
        let s = summarize(&[1.0, 2.0, 3.0]);
        assert_eq!(s.mean, 2.0);
        assert!((s.std - 1.0).abs() < 1e-12);
        assert!((s.ci95 - 4.303 / 3f64.sqrt()).abs() < 1e-12);
        assert_eq!(summarize(&[5.0]).ci95, 0.0);
    }

    proptest::proptest! {
        #[test]
        fn accuracy_is_confusion_trace(
            pairs in proptest::collection::vec((0usize..5, 0usize..5), 1..60)
        ) {
            let (preds, labels): (Vec<usize>, Vec<usize>) = pairs.into_iter().unzip();
            let probs = one_hot(&preds, 5);
            let cm = confusion(&probs, &labels);
            proptest::prop_assert_eq!(cm.total() as usize, labels.len());
            proptest::prop_assert_eq!(cm.accuracy(), accuracy(&probs, &labels));
        }
    }
}
