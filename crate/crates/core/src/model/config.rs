use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Relu,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConvBlock {
    pub filters: usize,
    pub kernel: usize,
    pub stride: usize,
    pub activation: Activation,
}

impl ConvBlock {
    pub const fn relu(filters: usize, kernel: usize, stride: usize) -> Self {
        Self { filters, kernel, stride, activation: Activation::Relu }
    }

    /// Zero padding that keeps `ceil(size / stride)` outputs for odd kernels.
    pub fn padding(&self) -> usize {
        self.kernel / 2
    }

    pub fn output_size(&self, input: usize) -> usize {
        (input + 2 * self.padding() - self.kernel) / self.stride + 1
    }
}

/// Architecture of the encoder `r`, projection head `p` and classifier `c`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    /// `[height, width]` of input images.
    pub input: [usize; 2],
    /// Convolution blocks, followed by global average pooling.
    pub encoder: Vec<ConvBlock>,
    pub projection_dim: usize,
    pub classifier_hidden: usize,
    pub classes: usize,
    pub dropout: f64,
}

impl ModelConfig {
    /// Desk-scale default: three stride-2 3x3 ReLU blocks (16, 32, 64 filters),
    /// so `d = 64`.
    pub fn desk(input: [usize; 2], classes: usize) -> Self {
        Self {
            input,
            encoder: vec![ConvBlock::relu(16, 3, 2), ConvBlock::relu(32, 3, 2), ConvBlock::relu(64, 3, 2)],
            projection_dim: 128,
            classifier_hidden: 64,
            classes,
            dropout: 0.2,
        }
    }

    pub fn representation_dim(&self) -> usize {
        self.encoder.last().map_or(0, |b| b.filters)
    }

    /// Spatial size after each block, starting with the input.
    pub fn spatial_sizes(&self) -> Vec<[usize; 2]> {
        let mut sizes = vec![self.input];
        for block in &self.encoder {
            let [h, w] = *sizes.last().expect("non-empty");
            sizes.push([block.output_size(h), block.output_size(w)]);
        }
        sizes
    }

    pub fn validate(&self) -> Result<()> {
        if self.encoder.is_empty() {
            return Err(Error::Config("encoder needs at least one convolution block".into()));
        }
        let mut size = self.input;
        for (i, b) in self.encoder.iter().enumerate() {
            if b.filters == 0 || b.kernel == 0 || b.stride == 0 || b.kernel % 2 == 0 {
                return Err(Error::Config(format!("conv block {i} needs positive filters/stride and an odd kernel")));
            }
            if size[0] + 2 * b.padding() < b.kernel || size[1] + 2 * b.padding() < b.kernel {
                return Err(Error::Config(format!("conv block {i} kernel exceeds its input")));
            }
            size = [b.output_size(size[0]), b.output_size(size[1])];
        }
        if self.representation_dim() < 2 {
            return Err(Error::Config("representation dimension must be at least 2".into()));
        }
        if self.projection_dim < 2 {
            return Err(Error::Config("projection dimension must be at least 2".into()));
        }
        if self.classifier_hidden == 0 || self.classes < 2 {
            return Err(Error::Config("classifier needs a hidden layer and at least 2 classes".into()));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::Config(format!("dropout {} outside [0, 1)", self.dropout)));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn desk_default_shapes() {
        let c = ModelConfig::desk([32, 32], 6);
        c.validate().unwrap();
        assert_eq!(c.representation_dim(), 64);
        assert_eq!(c.spatial_sizes(), vec![[32, 32], [16, 16], [8, 8], [4, 4]]);
    }

    #[test]
    fn invalid_configs() {
        let base = ModelConfig::desk([32, 32], 6);
        assert!(ModelConfig { dropout: 1.0, ..base.clone() }.validate().is_err());
        assert!(ModelConfig { projection_dim: 1, ..base.clone() }.validate().is_err());
        assert!(ModelConfig { encoder: vec![ConvBlock::relu(1, 3, 2)], ..base.clone() }.validate().is_err());
        assert!(ModelConfig { encoder: vec![], ..base }.validate().is_err());
    }
}
