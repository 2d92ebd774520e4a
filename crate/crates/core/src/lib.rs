//! Coupled online-offline learning (CO₂) on multi-distributional data streams.
//!
//! A stream is cut into fixed-size intervals, each drawn from its own
//! distribution. While the current (online) interval fills up, a meta-expert
//! mixes a pool of frozen offline experts, each trained on a past interval,
//! with one online expert updated by projected online gradient descent. When
//! the interval completes, a new offline expert is trained on it with a
//! regularizer that pulls it toward the meta-expert's final mixture, the pool
//! is refreshed by priority and a new interval begins.
//!
//! Module map:
//!
//! - [`hypothesis`]: bounded vectors, the radius-`R` ball and its projection.
//! - [`loss`]: normalized logistic loss, bounded in `[0, 1]` and `β`-smooth.
//! - [`meta`]: exponentially weighted forecaster over the expert pool.
//! - [`online`]: projected OGD expert.
//! - [`offline`]: regularized ERM training of new offline experts.
//! - [`pool`]: the interval lifecycle tying the above together.
//! - [`stream`]: synthetic drift streams, LIBSVM ingestion, noise injection.
//! - [`bounds`]: closed-form regret and generalization bound calculators.
//! - [`harness`]: ERM oracle, seeded experiments and report emission.

pub mod bounds;
pub mod error;
pub mod harness;
pub mod hypothesis;
pub mod loss;
pub mod meta;
pub mod offline;
pub mod online;
pub mod pool;
pub mod solver;
pub mod stream;

pub use error::{Error, Result};
pub use hypothesis::{HypothesisVector, Label, ProblemConstants, Sample};
pub use loss::LossSpec;
pub use meta::MetaWeights;
pub use pool::{ExpertPool, PriorityStrategy, StepRecord};
