//! Representation learning for game images: a synthetic content/style corpus,
//! a small convolutional encoder trained either fully supervised or with a
//! max-margin supervised contrastive objective, and the evaluation tools
//! (silhouette, confusion, t-SNE) used to compare the two.

pub mod dataset;
pub mod error;
pub mod eval;
pub mod linalg;
pub mod losses;
pub mod model;
pub mod rng;
pub mod training;

pub use error::{Error, ErrorKind, Result};
pub use linalg::Matrix;
