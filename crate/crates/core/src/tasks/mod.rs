//! Synthetic task distributions and incrementally arriving per-task data.

mod data;
mod family;
mod stream;

pub use data::{
    batch_from_indices, point, sample_batch, sinusoid_target, DataArrivalSchedule,
    IncrementalDataset, Point, PointStream, Split, X_RANGE,
};
pub use family::{
    sample_task, TaskDistribution, TaskFamily, TaskParams, TaskSpec, ValueRange, AMPLITUDE_BOUNDS,
    N_CLASSES, OFFSET_BOUND, PHASE_BOUNDS, ROTATIONS, SCALES,
};
pub use stream::{task_seed, TaskStream};
