//! Fully supervised training and the two-stage contrastive procedure.

use std::time::Instant;

use rand::seq::SliceRandom;
use rayon::prelude::*;

use crate::dataset::{augment_image, AugmentationConfig, Image, ImageSample};
use crate::error::{Error, Result};
use crate::eval::metrics::accuracy;
use crate::losses::{contrastive_grad, cross_entropy, cross_entropy_grad, softmax_backward};
use crate::model::{
    classifier_backward, classify, classify_train, encode, encode_train, encoder_backward, init_params, project_train,
    projection_backward, Gradients, Group, Mode, ModelConfig, Parameters, RepresentationBatch,
};
use crate::rng::{stream, tag};
use crate::training::adam::{adam_step, OptimizerState};
use crate::training::config::TrainConfig;
use crate::training::history::{EpochRecord, Stage, TrainingHistory};

/// Receives each completed epoch, e.g. to stream logs or write checkpoints.
pub trait EpochObserver {
    fn on_epoch(&mut self, record: &EpochRecord, params: &Parameters) -> Result<()>;
}

impl EpochObserver for () {
    fn on_epoch(&mut self, _: &EpochRecord, _: &Parameters) -> Result<()> {
        Ok(())
    }
}

impl<F: FnMut(&EpochRecord, &Parameters) -> Result<()>> EpochObserver for F {
    fn on_epoch(&mut self, record: &EpochRecord, params: &Parameters) -> Result<()> {
        self(record, params)
    }
}

/// Cross-entropy objective of the full model on one batch, with gradients
/// for every tensor. `dropout_seed` fixes the dropout mask; `None` evaluates
/// the classifier without dropout.
pub fn supervised_objective(
    params: &Parameters,
    images: &[&Image],
    labels: &[usize],
    dropout_seed: Option<u64>,
) -> Result<(f64, Gradients, f64)> {
    let mut grads = params.zeros_like();
    let (reps, enc_cache) = encode_train(params, images)?;
    let (probs, cls_cache) = match dropout_seed {
        Some(seed) => classify_train(params, &reps, Mode::Train(&mut stream(seed, &[tag::DROPOUT]))),
        None => classify_train(params, &reps, Mode::eval()),
    };
    let loss = cross_entropy(&probs, labels)?;
    let d_logits = softmax_backward(&probs, &cross_entropy_grad(&probs, labels)?);
    let d_reps = classifier_backward(params, &reps, &cls_cache, &d_logits, &mut grads);
    encoder_backward(params, &enc_cache, &d_reps, &mut grads);
    Ok((loss.value, grads, accuracy(&probs, labels)))
}

/// Contrastive objective `L_con(p(r(X)))` on one batch, with gradients for
/// the encoder and projection tensors.
pub fn contrastive_objective(
    params: &Parameters,
    images: &[&Image],
    labels: &[usize],
    margin: f64,
) -> Result<(f64, Gradients)> {
    let mut grads = params.zeros_like();
    let (reps, enc_cache) = encode_train(params, images)?;
    let (z, proj_cache) = project_train(params, &reps);
    let (loss, d_z) = contrastive_grad(&z, labels, margin)?;
    let d_reps = projection_backward(params, &reps, &proj_cache, &d_z, &mut grads);
    encoder_backward(params, &enc_cache, &d_reps, &mut grads);
    Ok((loss.value, grads))
}

fn check_split(train: &[&ImageSample], cfg: &TrainConfig) -> Result<()> {
    cfg.validate()?;
    if train.is_empty() {
        return Err(Error::Validation("training split is empty".into()));
    }
    if train.len() < cfg.batch_size {
        return Err(Error::Config(format!(
            "training split has {} images, fewer than one batch of {}",
            train.len(),
            cfg.batch_size
        )));
    }
    Ok(())
}

/// Seeded epoch order plus the per-step batch slicing (partial batch dropped).
struct Schedule {
    steps: usize,
    batch: usize,
}

impl Schedule {
    fn new(cfg: &TrainConfig, n: usize) -> Self {
        Self { steps: cfg.steps_per_epoch.resolve(n, cfg.batch_size), batch: cfg.batch_size }
    }

    fn order(&self, cfg: &TrainConfig, stage: Stage, epoch: usize, n: usize) -> Vec<usize> {
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut stream(cfg.seed, &[tag::SHUFFLE, stage.tag(), epoch as u64]));
        order
    }

    fn batch<'a>(&self, order: &'a [usize], step: usize) -> impl Iterator<Item = usize> + 'a {
        let start = step * self.batch;
        (start..start + self.batch).map(move |k| order[k % order.len()])
    }
}

fn augmented_batch(
    samples: &[&ImageSample],
    idx: &[usize],
    aug: &AugmentationConfig,
    seed: u64,
    path: [u64; 3],
) -> (Vec<Image>, Vec<usize>) {
    let images = idx
        .par_iter()
        .enumerate()
        .map(|(slot, &i)| {
            let mut rng = stream(seed, &[tag::AUGMENT, path[0], path[1], path[2], slot as u64]);
            augment_image(&samples[i].pixels, aug, &mut rng)
        })
        .collect();
    (images, idx.iter().map(|&i| samples[i].genre).collect())
}

/// Eval-mode accuracy of the full model on unaugmented samples.
pub fn evaluate_accuracy(params: &Parameters, samples: &[&ImageSample]) -> Result<f64> {
    if samples.is_empty() {
        return Ok(0.0);
    }
    let images: Vec<&Image> = samples.iter().map(|s| &s.pixels).collect();
    let labels: Vec<usize> = samples.iter().map(|s| s.genre).collect();
    let reps = encode(params, &images)?;
    Ok(accuracy(&classify(params, &reps, Mode::eval()), &labels))
}

fn finite(loss: f64, stage: Stage, epoch: usize) -> Result<f64> {
    if loss.is_finite() {
        Ok(loss)
    } else {
        Err(Error::Numeric(format!("{stage:?} loss became non-finite in epoch {}", epoch + 1)))
    }
}

/// Trains encoder and classifier jointly with cross-entropy on augmented
/// batches. Validation accuracy uses unaugmented images.
pub fn train_fully_supervised(
    train: &[&ImageSample],
    val: &[&ImageSample],
    model: &ModelConfig,
    cfg: &TrainConfig,
    observer: &mut dyn EpochObserver,
) -> Result<(Parameters, TrainingHistory)> {
    check_split(train, cfg)?;
    if val.is_empty() {
        return Err(Error::Validation("validation split is empty".into()));
    }
    let stage = Stage::Supervised;
    let mut params = init_params(model, cfg.seed)?;
    let mut state = OptimizerState::new(&params);
    let schedule = Schedule::new(cfg, train.len());
    let mut history = TrainingHistory::default();
    for epoch in 0..cfg.epochs {
        let started = Instant::now();
        let lr = cfg.learning_rate_at(epoch);
        let order = schedule.order(cfg, stage, epoch, train.len());
        let (mut loss_sum, mut acc_sum) = (0.0, 0.0);
        for step in 0..schedule.steps {
            let idx: Vec<usize> = schedule.batch(&order, step).collect();
            let path = [stage.tag(), epoch as u64, step as u64];
            let (images, labels) = augmented_batch(train, &idx, &cfg.augmentation, cfg.seed, path);
            let refs: Vec<&Image> = images.iter().collect();
            let dropout_seed = crate::rng::derive_seed(cfg.seed, &path);
            let (loss, grads, acc) = supervised_objective(&params, &refs, &labels, Some(dropout_seed))?;
            loss_sum += finite(loss, stage, epoch)?;
            acc_sum += acc;
            adam_step(&mut params, &grads, &mut state, lr, &cfg.adam)?;
        }
        let steps = schedule.steps as f64;
        let record = EpochRecord {
            stage,
            epoch: epoch + 1,
            loss: loss_sum / steps,
            train_acc: Some(acc_sum / steps),
            val_acc: Some(evaluate_accuracy(&params, val)?),
            seconds: Some(started.elapsed().as_secs_f64()),
        };
        observer.on_epoch(&record, &params)?;
        history.records.push(record);
    }
    Ok((params, history))
}

/// Stage one of the contrastive procedure: encoder and projection are trained
/// with the max-margin pairwise loss on projected embeddings. The classifier
/// keeps its initial weights.
pub fn pretrain_contrastive(
    train: &[&ImageSample],
    model: &ModelConfig,
    cfg: &TrainConfig,
    observer: &mut dyn EpochObserver,
) -> Result<(Parameters, TrainingHistory)> {
    check_split(train, cfg)?;
    let stage = Stage::ContrastivePretrain;
    let mut params = init_params(model, cfg.seed)?;
    params.set_trainable(Group::Classifier, false);
    let mut state = OptimizerState::new(&params);
    let schedule = Schedule::new(cfg, train.len());
    let mut history = TrainingHistory::default();
    for epoch in 0..cfg.epochs {
        let started = Instant::now();
        let lr = cfg.learning_rate_at(epoch);
        let order = schedule.order(cfg, stage, epoch, train.len());
        let mut loss_sum = 0.0;
        for step in 0..schedule.steps {
            let idx: Vec<usize> = schedule.batch(&order, step).collect();
            let path = [stage.tag(), epoch as u64, step as u64];
            let (images, labels) = augmented_batch(train, &idx, &cfg.augmentation, cfg.seed, path);
            let refs: Vec<&Image> = images.iter().collect();
            let (loss, grads) = contrastive_objective(&params, &refs, &labels, cfg.margin)?;
            loss_sum += finite(loss, stage, epoch)?;
            adam_step(&mut params, &grads, &mut state, lr, &cfg.adam)?;
        }
        let record = EpochRecord {
            stage,
            epoch: epoch + 1,
            loss: loss_sum / schedule.steps as f64,
            train_acc: None,
            val_acc: None,
            seconds: Some(started.elapsed().as_secs_f64()),
        };
        observer.on_epoch(&record, &params)?;
        history.records.push(record);
    }
    params.set_trainable(Group::Classifier, true);
    Ok((params, history))
}

/// Stage two: the encoder is frozen, the projection head is unused, and the
/// classifier is trained with cross-entropy on `r(aug(X))`.
pub fn fit_classifier_frozen(
    pretrained: &Parameters,
    train: &[&ImageSample],
    val: &[&ImageSample],
    cfg: &TrainConfig,
    observer: &mut dyn EpochObserver,
) -> Result<(Parameters, TrainingHistory)> {
    check_split(train, cfg)?;
    if val.is_empty() {
        return Err(Error::Validation("validation split is empty".into()));
    }
    let stage = Stage::ClassifierFit;
    let mut params = pretrained.clone();
    params.set_trainable(Group::Encoder, false);
    params.set_trainable(Group::Projection, false);
    params.set_trainable(Group::Classifier, true);
    let encoder_sum = params.checksum(Group::Encoder);

    let mut state = OptimizerState::new(&params);
    let schedule = Schedule::new(cfg, train.len());
    let val_images: Vec<&Image> = val.iter().map(|s| &s.pixels).collect();
    let val_labels: Vec<usize> = val.iter().map(|s| s.genre).collect();
    // The encoder is frozen, so validation representations never change.
    let val_reps = encode(&params, &val_images)?;
    let mut history = TrainingHistory::default();
    for epoch in 0..cfg.epochs {
        let started = Instant::now();
        let lr = cfg.learning_rate_at(epoch);
        let order = schedule.order(cfg, stage, epoch, train.len());
        let (mut loss_sum, mut acc_sum) = (0.0, 0.0);
        for step in 0..schedule.steps {
            let idx: Vec<usize> = schedule.batch(&order, step).collect();
            let path = [stage.tag(), epoch as u64, step as u64];
            let (images, labels) = augmented_batch(train, &idx, &cfg.augmentation, cfg.seed, path);
            let refs: Vec<&Image> = images.iter().collect();
            let reps = encode(&params, &refs)?;
            let mut dropout = stream(crate::rng::derive_seed(cfg.seed, &path), &[tag::DROPOUT]);
            let (probs, cache) = classify_train(&params, &reps, Mode::Train(&mut dropout));
            let loss = cross_entropy(&probs, &labels)?;
            let d_logits = softmax_backward(&probs, &cross_entropy_grad(&probs, &labels)?);
            let mut grads = params.zeros_like();
            classifier_backward(&params, &reps, &cache, &d_logits, &mut grads);
            loss_sum += finite(loss.value, stage, epoch)?;
            acc_sum += accuracy(&probs, &labels);
            adam_step(&mut params, &grads, &mut state, lr, &cfg.adam)?;
        }
        let steps = schedule.steps as f64;
        let record = EpochRecord {
            stage,
            epoch: epoch + 1,
            loss: loss_sum / steps,
            train_acc: Some(acc_sum / steps),
            val_acc: Some(accuracy(&classify(&params, &val_reps, Mode::eval()), &val_labels)),
            seconds: Some(started.elapsed().as_secs_f64()),
        };
        observer.on_epoch(&record, &params)?;
        history.records.push(record);
    }
    debug_assert_eq!(params.checksum(Group::Encoder), encoder_sum);
    Ok((params, history))
}

/// Representations of unaugmented samples.
pub fn represent(params: &Parameters, samples: &[&ImageSample]) -> Result<RepresentationBatch> {
    let images: Vec<&Image> = samples.iter().map(|s| &s.pixels).collect();
    encode(params, &images)
}
