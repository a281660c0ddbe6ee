//! Inner updates, learning-rate policies, variable-shot meta-objectives,
//! the outer optimizer and checkpoints.

mod adam;
mod checkpoint;
mod config;
mod inner;
mod learner;
mod lr;
mod objective;

pub use adam::{clip_global_norm, AdamConfig, AdamState};
pub use checkpoint::{Checkpoint, CheckpointEntry, CHECKPOINT_VERSION};
pub use config::{MetaOptimizerConfig, ShotDistribution};
pub use inner::{inner_update, inner_update_graph, InnerConfig};
pub use learner::{MetaLearner, MetaStepReport};
pub use lr::{
    scaled_rate, GraphRate, LearningRatePolicy, PolicyVars, ScaledLearningRate, StepRate,
};
pub use objective::{
    meta_gradients, meta_objective_naive, meta_objective_vs, MetaGradients, MetaObjective,
    TaskSample,
};
