//! Analytic gradients against central finite differences.

use gamerep_core::dataset::Image;
use gamerep_core::linalg::Matrix;
use gamerep_core::losses::{contrastive_grad, contrastive_max_margin, cross_entropy, cross_entropy_grad, softmax_backward};
use gamerep_core::model::{init_params, softmax_rows, ConvBlock, ModelConfig, Parameters};
use gamerep_core::training::{contrastive_objective, supervised_objective};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn rel_err(a: &[f64], b: &[f64]) -> f64 {
    let diff: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na.max(nb) < 1e-12 {
        0.0
    } else {
        diff / na.max(nb)
    }
}

fn random_labels(rng: &mut ChaCha8Rng, n: usize, classes: usize) -> Vec<usize> {
    loop {
        let labels: Vec<usize> = (0..n).map(|_| rng.random_range(0..classes)).collect();
        if labels.iter().any(|&l| l != labels[0]) {
            return labels;
        }
    }
}

#[test]
fn cross_entropy_gradient_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let h = 1e-6;
    for _ in 0..100 {
        let classes = rng.random_range(2..6);
        let logits = Matrix::from_vec(8, classes, (0..8 * classes).map(|_| rng.random_range(-3.0..3.0)).collect());
        let labels: Vec<usize> = (0..8).map(|_| rng.random_range(0..classes)).collect();
        let loss = |l: &Matrix| cross_entropy(&softmax_rows(l), &labels).unwrap().value;
        let probs = softmax_rows(&logits);
        let analytic = softmax_backward(&probs, &cross_entropy_grad(&probs, &labels).unwrap());
        let mut numeric = vec![0.0; logits.data().len()];
        for (k, slot) in numeric.iter_mut().enumerate() {
            let mut plus = logits.clone();
            plus.data_mut()[k] += h;
            let mut minus = logits.clone();
            minus.data_mut()[k] -= h;
            *slot = (loss(&plus) - loss(&minus)) / (2.0 * h);
        }
        let err = rel_err(analytic.data(), &numeric);
        assert!(err < 1e-4, "relative error {err}");
    }
}

#[test]
fn contrastive_gradient_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let h = 1e-6;
    for _ in 0..100 {
        let dim = rng.random_range(2..8);
        let z = Matrix::from_vec(8, dim, (0..8 * dim).map(|_| rng.random_range(-0.6..0.6)).collect());
        let labels = random_labels(&mut rng, 8, 3);
        let (_, analytic) = contrastive_grad(&z, &labels, 1.0).unwrap();
        let loss = |m: &Matrix| contrastive_max_margin(m, &labels, 1.0).unwrap().value;
        let mut numeric = vec![0.0; z.data().len()];
        for (k, slot) in numeric.iter_mut().enumerate() {
            let mut plus = z.clone();
            plus.data_mut()[k] += h;
            let mut minus = z.clone();
            minus.data_mut()[k] -= h;
            *slot = (loss(&plus) - loss(&minus)) / (2.0 * h);
        }
        let err = rel_err(analytic.data(), &numeric);
        assert!(err < 1e-4, "relative error {err}");
    }
}

fn tiny_config() -> ModelConfig {
    ModelConfig {
        input: [8, 8],
        encoder: vec![ConvBlock::relu(4, 3, 2), ConvBlock::relu(8, 3, 2)],
        projection_dim: 16,
        classifier_hidden: 8,
        classes: 3,
        dropout: 0.2,
    }
}

fn random_images(rng: &mut ChaCha8Rng, n: usize) -> Vec<Image> {
    (0..n).map(|_| Image::from_fn(8, 8, |_, _| [rng.random(), rng.random(), rng.random()])).collect()
}

/// Finite-difference gradient of `loss` for every entry of every tensor.
fn numeric_gradients(params: &Parameters, loss: impl Fn(&Parameters) -> f64) -> Vec<Vec<f64>> {
    let h = 1e-5;
    let mut out = Vec::new();
    let mut p = params.clone();
    for t in 0..params.tensors.len() {
        let mut g = vec![0.0; params.tensors[t].data.len()];
        for (k, slot) in g.iter_mut().enumerate() {
            let orig = p.tensors[t].data[k];
            p.tensors[t].data[k] = orig + h;
            let up = loss(&p);
            p.tensors[t].data[k] = orig - h;
            let down = loss(&p);
            p.tensors[t].data[k] = orig;
            *slot = (up - down) / (2.0 * h);
        }
        out.push(g);
    }
    out
}

#[test]
fn full_model_supervised_gradients() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for seed in 0..3 {
        let params = init_params(&tiny_config(), seed).unwrap();
        let images = random_images(&mut rng, 4);
        let refs: Vec<&Image> = images.iter().collect();
        let labels = random_labels(&mut rng, 4, 3);
        let (_, analytic, _) = supervised_objective(&params, &refs, &labels, None).unwrap();
        let numeric = numeric_gradients(&params, |p| supervised_objective(p, &refs, &labels, None).unwrap().0);
        for (t, tensor) in params.tensors.iter().enumerate() {
            let err = rel_err(&analytic.tensors[t], &numeric[t]);
            assert!(err < 1e-3, "{}: relative error {err}", tensor.name);
        }
    }
}

#[test]
fn full_model_contrastive_gradients() {
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    for seed in 0..3 {
        let params = init_params(&tiny_config(), seed).unwrap();
        let images = random_images(&mut rng, 4);
        let refs: Vec<&Image> = images.iter().collect();
        let labels = random_labels(&mut rng, 4, 2);
        let (_, analytic) = contrastive_objective(&params, &refs, &labels, 1.0).unwrap();
        let numeric = numeric_gradients(&params, |p| contrastive_objective(p, &refs, &labels, 1.0).unwrap().0);
        for (t, tensor) in params.tensors.iter().enumerate() {
            let err = rel_err(&analytic.tensors[t], &numeric[t]);
            assert!(err < 1e-3, "{}: relative error {err}", tensor.name);
        }
    }
}
