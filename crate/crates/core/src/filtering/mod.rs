//! Noise-trained discriminator for ranking generated image / mask pairs.
//!
//! Normal patch features are contrasted with Gaussian-perturbed copies; the
//! resulting scorer yields a per-pixel anomaly map whose mean over the
//! aligned mask (the anomaly region score, ARS) ranks each pair.

mod model;
mod patch;
mod score;
mod select;

pub use model::{loss_and_grad, param_count, train_filter, FilterModel, LossKind, TrainConfig};
pub use patch::{extract_local_features, PatchFeatureMap, LOCAL_FEATURE_DIM};
pub use score::{ars, score_image, ScoreMap, Upsample};
pub use select::{auroc, select_top};
