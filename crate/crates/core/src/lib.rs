//! Soft-contrastive distillation for cross-lingual sentence embeddings.
//!
//! A student encoder is trained so that its cross-lingual similarities
//! follow the mono-lingual similarities measured by a frozen teacher:
//! instead of the usual hard positive/negative assignment, the contrastive
//! targets are row-stochastic soft labels derived from teacher similarity
//! softmaxes. The crate provides:
//!
//! - [`simcore`]: dense matrix primitives (cosine, temperature scaling,
//!   row softmax);
//! - [`labels`]: hard, priority, and average label construction with
//!   anchor-language selection;
//! - [`loss`]: cross-lingual and mono-lingual losses, their combination,
//!   the MSE distillation baseline, and exact analytic gradients;
//! - [`model`]: the toy trainable student encoder and the frozen teacher
//!   oracle (file-backed or synthetic);
//! - [`data`]: corpus loading, seeded sampling/splitting, overlap
//!   filtering, vocabulary building, and the synthetic task generator;
//! - [`trainer`]: AdamW with linear learning-rate decay, shard pooling,
//!   early stopping, checkpoints;
//! - [`eval`]: bidirectional retrieval accuracy, margin-scored alignment
//!   error, Spearman STS correlation, and teacher-agreement diagnostics.

// index loops are deliberate: reduction order is part of the determinism
// contract, and most loops walk parallel arrays
#![allow(clippy::needless_range_loop)]

pub mod data;
pub mod error;
pub mod eval;
pub mod labels;
pub mod loss;
pub mod model;
pub mod rng;
pub mod simcore;
pub mod trainer;

pub use error::{Error, Result};
