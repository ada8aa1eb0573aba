use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Stage {
    #[serde(rename = "supervised")]
    Supervised,
    #[serde(rename = "contrastive-pretrain")]
    ContrastivePretrain,
    #[serde(rename = "classifier-fit")]
    ClassifierFit,
}

impl Stage {
    /// Tag written to history logs.
    pub fn as_str(self) -> &'static str {
        match self {
            Stage::Supervised => "supervised",
            Stage::ContrastivePretrain => "contrastive-pretrain",
            Stage::ClassifierFit => "classifier-fit",
        }
    }

    pub(crate) fn tag(self) -> u64 {
        self as u64 + 1
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub stage: Stage,
    /// 1-based epoch number within the stage.
    pub epoch: usize,
    pub loss: f64,
    pub train_acc: Option<f64>,
    pub val_acc: Option<f64>,
    pub seconds: Option<f64>,
}

impl EpochRecord {
    /// Record with wall time removed, as written to history logs.
    pub fn without_timing(&self) -> Self {
        Self { seconds: None, ..self.clone() }
    }

    pub fn to_json_line(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainingHistory {
    pub records: Vec<EpochRecord>,
}

impl TrainingHistory {
    pub fn stage(&self, stage: Stage) -> impl Iterator<Item = &EpochRecord> {
        self.records.iter().filter(move |r| r.stage == stage)
    }

    pub fn extend(&mut self, other: TrainingHistory) {
        self.records.extend(other.records);
    }

    /// Line-delimited JSON. Wall time is only included on request so logs of
    /// seeded runs are byte-reproducible.
    pub fn to_jsonl(&self, with_timing: bool) -> Result<String> {
        let mut out = String::new();
        for r in &self.records {
            let r = if with_timing { r.clone() } else { r.without_timing() };
            writeln!(out, "{}", r.to_json_line()?).expect("string write");
        }
        Ok(out)
    }

    pub fn write_jsonl(&self, path: &Path, with_timing: bool) -> Result<()> {
        fs::write(path, self.to_jsonl(with_timing)?).map_err(|e| Error::io(path, e))
    }

    pub fn read_jsonl(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let records = text
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(serde_json::from_str)
            .collect::<std::result::Result<_, _>>()?;
        Ok(Self { records })
    }
}
