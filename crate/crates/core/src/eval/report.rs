//! Model evaluation reports.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dataset::{DatasetManifest, ImageSample};
use crate::error::{Error, Result};
use crate::eval::metrics::{confusion, ConfusionMatrix};
use crate::eval::silhouette::silhouette;
use crate::eval::tsne::{tsne, TsneConfig};
use crate::linalg::Matrix;
use crate::model::{classify, project, Mode, Parameters};
use crate::training::represent;

/// Space in which the silhouette score is measured.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SilhouetteSpace {
    /// Encoder output `x = r(X)`.
    #[default]
    Representation,
    /// Unit-norm projection `z = p(x)`; diagnostic only.
    Embedding,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct EvalOptions {
    pub space: SilhouetteSpace,
    /// Project validation representations to 2-D when set.
    pub tsne: Option<TsneConfig>,
    /// Seeds recorded in the report.
    pub seeds: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub train_acc: f64,
    pub val_acc: f64,
    /// Silhouette score of the validation set, labelled by genre.
    pub silhouette: f64,
    pub per_genre_silhouette: BTreeMap<String, f64>,
    /// Validation counts; rows are true genres, columns predictions.
    pub confusion: Vec<Vec<u64>>,
    pub confusion_percent: Vec<Vec<f64>>,
    pub silhouette_space: SilhouetteSpace,
    pub train_samples: usize,
    pub val_samples: usize,
    pub seeds: Vec<u64>,
}

impl EvalReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Schema(format!("{}: {e}", path.display())))
    }
}

/// A report plus the validation-side matrices it was computed from.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub report: EvalReport,
    pub val_representations: Matrix,
    pub val_confusion: ConfusionMatrix,
    /// `n_val x 2` t-SNE coordinates when requested.
    pub projection: Option<Matrix>,
}

fn labels(samples: &[&ImageSample]) -> Vec<usize> {
    samples.iter().map(|s| s.genre).collect()
}

/// Evaluates a model on unaugmented train and validation samples.
pub fn evaluate_model(
    params: &Parameters,
    manifest: &DatasetManifest,
    train: &[&ImageSample],
    val: &[&ImageSample],
    opts: &EvalOptions,
) -> Result<Evaluation> {
    if train.is_empty() || val.is_empty() {
        return Err(Error::Validation("evaluation needs non-empty train and validation sides".into()));
    }
    if params.config.classes != manifest.n_genres() {
        return Err(Error::Validation(format!(
            "model predicts {} classes but the manifest has {} genres",
            params.config.classes,
            manifest.n_genres()
        )));
    }
    let train_labels = labels(train);
    let val_labels = labels(val);
    let train_reps = represent(params, train)?;
    let train_conf = confusion(&classify(params, &train_reps, Mode::eval()), &train_labels);
    drop(train_reps);

    let val_reps = represent(params, val)?;
    if !val_reps.is_finite() {
        return Err(Error::Numeric("validation representations are not finite".into()));
    }
    let val_conf = confusion(&classify(params, &val_reps, Mode::eval()), &val_labels);
    let sil = match opts.space {
        SilhouetteSpace::Representation => silhouette(&val_reps, &val_labels)?,
        SilhouetteSpace::Embedding => silhouette(&project(params, &val_reps), &val_labels)?,
    };
    let per_genre_silhouette = sil
        .per_label
        .iter()
        .map(|(&g, &s)| (manifest.genres.get(g).map_or_else(|| g.to_string(), |info| info.name.clone()), s))
        .collect();
    let projection = match &opts.tsne {
        Some(cfg) => Some(tsne(&val_reps, cfg)?.coords),
        None => None,
    };
    let report = EvalReport {
        train_acc: train_conf.accuracy(),
        val_acc: val_conf.accuracy(),
        silhouette: sil.score,
        per_genre_silhouette,
        confusion: val_conf.counts.clone(),
        confusion_percent: val_conf.row_percentages(),
        silhouette_space: opts.space,
        train_samples: train.len(),
        val_samples: val.len(),
        seeds: opts.seeds.clone(),
    };
    Ok(Evaluation { report, val_representations: val_reps.0, val_confusion: val_conf, projection })
}

/// Signed differences `b - a` between two reports.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReportDelta {
    pub train_acc: f64,
    pub val_acc: f64,
    pub silhouette: f64,
}

pub fn compare(a: &EvalReport, b: &EvalReport) -> ReportDelta {
    ReportDelta {
        train_acc: b.train_acc - a.train_acc,
        val_acc: b.val_acc - a.val_acc,
        silhouette: b.silhouette - a.silhouette,
    }
}
