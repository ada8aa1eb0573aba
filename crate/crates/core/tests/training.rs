//! Training behaviour on a small two-genre synthetic fixture.

use std::sync::OnceLock;

use gamerep_core::dataset::{generate_synthetic, partition, stratified_game_split, ImageSample, SyntheticConfig};
use gamerep_core::eval::{evaluate_model, EvalOptions};
use gamerep_core::linalg::dist;
use gamerep_core::model::{init_params, project, Group, ModelConfig, Parameters};
use gamerep_core::training::{
    fit_classifier_frozen, pretrain_contrastive, represent, train_fully_supervised, EpochRecord, Stage, TrainConfig,
    TrainingHistory,
};

struct Fixture {
    manifest: gamerep_core::dataset::DatasetManifest,
    samples: Vec<ImageSample>,
    split: gamerep_core::dataset::SplitSpec,
}

fn fixture() -> &'static Fixture {
    static F: OnceLock<Fixture> = OnceLock::new();
    F.get_or_init(|| {
        let cfg = SyntheticConfig { genres: 2, games_per_genre: 3, styles: 3, images_per_game: 100, seed: 5, ..Default::default() };
        let (manifest, samples) = generate_synthetic(&cfg).unwrap();
        let split = stratified_game_split(&manifest, 0.75, 1).unwrap();
        Fixture { manifest, samples, split }
    })
}

fn sides() -> (Vec<&'static ImageSample>, Vec<&'static ImageSample>) {
    let f = fixture();
    partition(&f.samples, &f.split)
}

fn model() -> ModelConfig {
    ModelConfig::desk([32, 32], 2)
}

fn config() -> TrainConfig {
    TrainConfig { batch_size: 32, epochs: 8, seed: 9, ..Default::default() }
}

fn supervised() -> &'static (Parameters, TrainingHistory) {
    static S: OnceLock<(Parameters, TrainingHistory)> = OnceLock::new();
    S.get_or_init(|| {
        let (train, val) = sides();
        train_fully_supervised(&train, &val, &model(), &config(), &mut ()).unwrap()
    })
}

fn pretrained() -> &'static (Parameters, TrainingHistory) {
    static P: OnceLock<(Parameters, TrainingHistory)> = OnceLock::new();
    P.get_or_init(|| {
        let (train, _) = sides();
        pretrain_contrastive(&train, &model(), &config(), &mut ()).unwrap()
    })
}

#[test]
fn supervised_fits_training_set_and_loss_falls() {
    let (params, history) = supervised();
    assert_eq!(history.records.len(), 8);
    assert!(history.records.iter().all(|r| r.stage == Stage::Supervised));
    assert!(history.records.last().unwrap().loss < history.records[0].loss);
    let f = fixture();
    let (train, val) = sides();
    let report = evaluate_model(params, &f.manifest, &train, &val, &EvalOptions::default()).unwrap().report;
    assert!(report.train_acc >= 0.95, "train accuracy {}", report.train_acc);
}

#[test]
fn contrastive_pretraining_separates_held_out_genres() {
    let (params, history) = pretrained();
    assert!(history.records.iter().all(|r| r.stage == Stage::ContrastivePretrain));
    assert!(history.records.last().unwrap().loss < history.records[0].loss);
    // Classifier is untouched by pretraining.
    let init = init_params(&model(), config().seed).unwrap();
    assert_eq!(params.checksum(Group::Classifier), init.checksum(Group::Classifier));

    let (_, val) = sides();
    let z = project(params, &represent(params, &val).unwrap());
    for i in 0..z.rows() {
        assert!((z.row(i).iter().map(|v| v * v).sum::<f64>().sqrt() - 1.0).abs() < 1e-6);
    }
    let (mut pos, mut neg) = ((0.0, 0usize), (0.0, 0usize));
    for i in 0..val.len() {
        for j in (i + 1)..val.len() {
            let d = dist(z.row(i), z.row(j));
            let slot = if val[i].genre == val[j].genre { &mut pos } else { &mut neg };
            slot.0 += d;
            slot.1 += 1;
        }
    }
    let (pos, neg) = (pos.0 / pos.1 as f64, neg.0 / neg.1 as f64);
    assert!(pos < neg, "positive {pos} vs negative {neg}");
}

#[test]
fn frozen_fit_keeps_encoder_and_classifies_held_out_games() {
    let (pre, _) = pretrained();
    let (train, val) = sides();
    let before = (pre.checksum(Group::Encoder), pre.checksum(Group::Projection));
    let mut records: Vec<EpochRecord> = Vec::new();
    let mut observer = |r: &EpochRecord, p: &Parameters| {
        assert_eq!(p.checksum(Group::Encoder), before.0);
        records.push(r.clone());
        Ok(())
    };
    let (fitted, history) = fit_classifier_frozen(pre, &train, &val, &config(), &mut observer).unwrap();
    assert_eq!(records.len(), 8);
    assert!(history.records.iter().all(|r| r.stage == Stage::ClassifierFit));
    assert_eq!(fitted.checksum(Group::Encoder), before.0);
    assert_eq!(fitted.checksum(Group::Projection), before.1);
    assert_eq!(pre.checksum(Group::Encoder), before.0);
    let val_acc = history.records.last().unwrap().val_acc.unwrap();
    assert!(val_acc >= 0.9, "validation accuracy {val_acc}");
}

#[test]
fn training_is_deterministic() {
    let (train, val) = sides();
    let cfg = TrainConfig { epochs: 1, ..config() };
    let a = train_fully_supervised(&train, &val, &model(), &cfg, &mut ()).unwrap();
    let b = train_fully_supervised(&train, &val, &model(), &cfg, &mut ()).unwrap();
    assert_eq!(a.0, b.0);
    assert_eq!(a.1.to_jsonl(false).unwrap(), b.1.to_jsonl(false).unwrap());
    let c = train_fully_supervised(&train, &val, &model(), &TrainConfig { seed: 10, ..cfg }, &mut ()).unwrap();
    assert_ne!(a.0, c.0);
}

#[test]
fn untrained_silhouette_is_near_zero() {
    let cfg = SyntheticConfig::reproduction();
    let cfg = SyntheticConfig { images_per_game: 40, ..cfg };
    let (manifest, samples) = generate_synthetic(&cfg).unwrap();
    let split = stratified_game_split(&manifest, 0.75, 0).unwrap();
    let (train, val) = partition(&samples, &split);
    for seed in 1..=3 {
        let params = init_params(&ModelConfig::desk([32, 32], 6), seed).unwrap();
        let report = evaluate_model(&params, &manifest, &train, &val, &EvalOptions::default()).unwrap().report;
        assert!((-0.15..=0.15).contains(&report.silhouette), "seed {seed}: {}", report.silhouette);
        assert_eq!(report.val_acc, report.confusion.iter().enumerate().map(|(i, r)| r[i]).sum::<u64>() as f64 / report.val_samples as f64);
    }
}
