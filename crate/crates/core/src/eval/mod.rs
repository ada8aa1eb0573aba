//! Generalisation metrics: silhouette, accuracy, confusion and t-SNE.

pub mod export;
pub mod metrics;
pub mod report;
pub mod silhouette;
pub mod tsne;

pub use export::{save_scatter_png, scatter_plot, write_projection_csv, write_representations_csv};
pub use metrics::{accuracy, argmax, confusion, predictions, summarize, ConfusionMatrix, Summary};
pub use report::{compare, evaluate_model, EvalOptions, EvalReport, Evaluation, ReportDelta, SilhouetteSpace};
pub use silhouette::{silhouette, SilhouettePoint, SilhouetteReport};
pub use tsne::{joint_probabilities, kl_divergence, tsne, Affinities, Calibration, TsneConfig, TsneResult};
