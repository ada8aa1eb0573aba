use serde::{Deserialize, Serialize};

use crate::dataset::AugmentationConfig;
use crate::error::{Error, Result};
use crate::training::adam::AdamConfig;

/// How many optimisation steps make up one epoch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepsPerEpoch {
    /// One pass over the training set (`|D^T| / batch`, partial batch dropped).
    FullPass,
    /// `|D^T| / (10 * batch)`, the subsampled schedule.
    Tenth,
    Fixed(usize),
}

impl StepsPerEpoch {
    pub fn resolve(self, train_len: usize, batch: usize) -> usize {
        match self {
            StepsPerEpoch::FullPass => train_len / batch,
            StepsPerEpoch::Tenth => (train_len / (10 * batch)).max(1),
            StepsPerEpoch::Fixed(n) => n,
        }
    }
}

/// Step decay: the rate is multiplied by `factor` every `every` epochs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LrDecay {
    pub factor: f64,
    pub every: usize,
}

impl Default for LrDecay {
    fn default() -> Self {
        Self { factor: 0.5, every: 3 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub epochs: usize,
    pub steps_per_epoch: StepsPerEpoch,
    pub learning_rate: f64,
    pub decay: LrDecay,
    pub margin: f64,
    pub adam: AdamConfig,
    pub augmentation: AugmentationConfig,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            batch_size: 64,
            epochs: 10,
            steps_per_epoch: StepsPerEpoch::FullPass,
            learning_rate: 1e-3,
            decay: LrDecay::default(),
            margin: 1.0,
            adam: AdamConfig::default(),
            augmentation: AugmentationConfig::default(),
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size < 2 {
            return Err(Error::Config("batch size must be at least 2".into()));
        }
        if self.epochs == 0 {
            return Err(Error::Config("at least one epoch is required".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config(format!("learning rate {} must be positive", self.learning_rate)));
        }
        if !(self.margin > 0.0 && self.margin.is_finite()) {
            return Err(Error::Config(format!("margin {} must be positive", self.margin)));
        }
        if !(self.decay.factor > 0.0 && self.decay.factor <= 1.0) || self.decay.every == 0 {
            return Err(Error::Config("decay needs a factor in (0, 1] and a positive period".into()));
        }
        let a = &self.adam;
        if !((0.0..1.0).contains(&a.beta1) && (0.0..1.0).contains(&a.beta2) && a.eps > 0.0) {
            return Err(Error::Config("Adam betas must lie in [0, 1) and eps must be positive".into()));
        }
        if self.steps_per_epoch == StepsPerEpoch::Fixed(0) {
            return Err(Error::Config("fixed steps per epoch must be positive".into()));
        }
        self.augmentation.validate()
    }

    /// Learning rate in effect during `epoch` (0-based).
    pub fn learning_rate_at(&self, epoch: usize) -> f64 {
        self.learning_rate * self.decay.factor.powi((epoch / self.decay.every) as i32)
    }
}
