use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::model::config::ModelConfig;
use crate::rng::{stream, tag};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Group {
    Encoder,
    Projection,
    Classifier,
}

impl Group {
    pub const ALL: [Group; 3] = [Group::Encoder, Group::Projection, Group::Classifier];

    fn index(self) -> usize {
        self as usize
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    pub name: String,
    pub group: Group,
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
}

impl Tensor {
    fn zeros(name: String, group: Group, shape: Vec<usize>) -> Self {
        let len = shape.iter().product();
        Self { name, group, shape, data: vec![0.0; len] }
    }

    pub fn is_bias(&self) -> bool {
        self.name.ends_with(".bias")
    }

    /// Fan-in of a weight tensor: everything but the leading (output) axis.
    pub fn fan_in(&self) -> usize {
        self.shape[1..].iter().product::<usize>().max(1)
    }
}

/// Index of each tensor within [`Parameters::tensors`], fixed by the layout.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Layout {
    pub blocks: usize,
}

impl Layout {
    pub fn conv_weight(&self, i: usize) -> usize {
        2 * i
    }
    pub fn conv_bias(&self, i: usize) -> usize {
        2 * i + 1
    }
    pub fn proj_weight(&self) -> usize {
        2 * self.blocks
    }
    pub fn proj_bias(&self) -> usize {
        2 * self.blocks + 1
    }
    pub fn hidden_weight(&self) -> usize {
        2 * self.blocks + 2
    }
    pub fn hidden_bias(&self) -> usize {
        2 * self.blocks + 3
    }
    pub fn out_weight(&self) -> usize {
        2 * self.blocks + 4
    }
    pub fn out_bias(&self) -> usize {
        2 * self.blocks + 5
    }
}

/// Weights of every layer plus a trainability flag per group.
#[derive(Debug, Clone, PartialEq)]
pub struct Parameters {
    pub config: ModelConfig,
    pub tensors: Vec<Tensor>,
    trainable: [bool; 3],
}

impl Parameters {
    /// All-zero tensors laid out for `config`.
    pub fn zeros(config: &ModelConfig) -> Result<Self> {
        config.validate()?;
        let mut tensors = Vec::new();
        let mut in_ch = 3;
        for (i, b) in config.encoder.iter().enumerate() {
            tensors.push(Tensor::zeros(
                format!("encoder.conv{i}.weight"),
                Group::Encoder,
                vec![b.filters, in_ch, b.kernel, b.kernel],
            ));
            tensors.push(Tensor::zeros(format!("encoder.conv{i}.bias"), Group::Encoder, vec![b.filters]));
            in_ch = b.filters;
        }
        let d = config.representation_dim();
        let (p, h, n) = (config.projection_dim, config.classifier_hidden, config.classes);
        tensors.push(Tensor::zeros("projection.weight".into(), Group::Projection, vec![p, d]));
        tensors.push(Tensor::zeros("projection.bias".into(), Group::Projection, vec![p]));
        tensors.push(Tensor::zeros("classifier.hidden.weight".into(), Group::Classifier, vec![h, d]));
        tensors.push(Tensor::zeros("classifier.hidden.bias".into(), Group::Classifier, vec![h]));
        tensors.push(Tensor::zeros("classifier.output.weight".into(), Group::Classifier, vec![n, h]));
        tensors.push(Tensor::zeros("classifier.output.bias".into(), Group::Classifier, vec![n]));
        Ok(Self { config: config.clone(), tensors, trainable: [true; 3] })
    }

    pub(crate) fn layout(&self) -> Layout {
        Layout { blocks: self.config.encoder.len() }
    }

    pub fn is_trainable(&self, group: Group) -> bool {
        self.trainable[group.index()]
    }

    pub fn set_trainable(&mut self, group: Group, trainable: bool) {
        self.trainable[group.index()] = trainable;
    }

    pub fn tensor(&self, name: &str) -> Option<&Tensor> {
        self.tensors.iter().find(|t| t.name == name)
    }

    pub fn group_tensors(&self, group: Group) -> impl Iterator<Item = &Tensor> {
        self.tensors.iter().filter(move |t| t.group == group)
    }

    pub fn parameter_count(&self) -> usize {
        self.tensors.iter().map(|t| t.data.len()).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.tensors.iter().all(|t| t.data.iter().all(|v| v.is_finite()))
    }

    /// Zeroed buffers with the same layout, for gradients and moments.
    pub fn zeros_like(&self) -> Gradients {
        Gradients { tensors: self.tensors.iter().map(|t| vec![0.0; t.data.len()]).collect() }
    }

    /// FNV-1a over the bit patterns of a group's tensors.
    pub fn checksum(&self, group: Group) -> u64 {
        let mut h = 0xcbf2_9ce4_8422_2325u64;
        for t in self.group_tensors(group) {
            for v in &t.data {
                for byte in v.to_bits().to_le_bytes() {
                    h = (h ^ byte as u64).wrapping_mul(0x0100_0000_01b3);
                }
            }
        }
        h
    }

    /// Replaces every value with its nearest `f32`, as stored in checkpoints.
    pub fn round_to_f32(&mut self) {
        for t in &mut self.tensors {
            for v in &mut t.data {
                *v = *v as f32 as f64;
            }
        }
    }
}

/// Per-tensor buffers aligned with [`Parameters::tensors`].
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub tensors: Vec<Vec<f64>>,
}

impl Gradients {
    pub fn fill_zero(&mut self) {
        for t in &mut self.tensors {
            t.iter_mut().for_each(|v| *v = 0.0);
        }
    }
}

/// He-scaled uniform initialisation: weights `~ U(-a, a)` with
/// `a = sqrt(6 / fan_in)` (variance `2 / fan_in`); biases zero.
pub fn init_params(config: &ModelConfig, seed: u64) -> Result<Parameters> {
    let mut params = Parameters::zeros(config)?;
    for (i, t) in params.tensors.iter_mut().enumerate() {
        if t.is_bias() {
            continue;
        }
        let bound = (6.0 / t.fan_in() as f64).sqrt();
        let mut rng = stream(seed, &[tag::INIT, i as u64]);
        for v in &mut t.data {
            *v = rng.random_range(-bound..bound);
        }
    }
    Ok(params)
}
