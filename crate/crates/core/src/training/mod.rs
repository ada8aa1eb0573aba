//! Optimisation: Adam, learning-rate schedule and the two training procedures.

pub mod adam;
pub mod config;
pub mod history;
pub mod loops;

pub use adam::{adam_step, AdamConfig, OptimizerState};
pub use config::{LrDecay, StepsPerEpoch, TrainConfig};
pub use history::{EpochRecord, Stage, TrainingHistory};
pub use loops::{
    contrastive_objective, evaluate_accuracy, fit_classifier_frozen, pretrain_contrastive, represent,
    supervised_objective, train_fully_supervised, EpochObserver,
};
