//! The composite network `f = c . r` plus the projection head `p`.

pub mod checkpoint;
pub mod config;
pub mod network;
pub mod params;

pub use config::{Activation, ConvBlock, ModelConfig};
pub use network::{
    classifier_backward, classifier_logits, classify, classify_train, encode, encode_train, encoder_backward,
    normalize_rows, project, project_train, projection_backward, softmax_rows, ClassifierCache, EmbeddingBatch,
    EncoderCache, Mode, ProbabilityBatch, ProjectionCache, RepresentationBatch, NORM_EPS,
};
pub use params::{init_params, Gradients, Group, Parameters, Tensor};
