use std::f64::consts::PI;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::family::{TaskFamily, TaskParams, TaskSpec, N_CLASSES};
use crate::autodiff::Tensor;
use crate::error::{Error, Result};
use crate::model::{Batch, Targets};
use crate::seed::rng_for;

/// Sinusoid inputs are drawn from `[-X_RANGE, X_RANGE]`.
pub const X_RANGE: f64 = 5.0;

/// First index of the reserved test range. Train points use indices below
/// it, so the two splits can never share a point.
const TEST_INDEX_BASE: u64 = 1 << 62;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Split {
    Train,
    Test,
}

/// The `index`-th datapoint of a task. Points are a pure function of
/// `(task, index)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Point {
    Regression { x: f64, y: f64 },
    Classification { x: [f64; 2], class: usize },
}

pub fn sinusoid_target(amplitude: f64, phase: f64, x: f64) -> f64 {
    amplitude * (x + phase).sin()
}

/// Base ring radius for each class. Scaling by 0.5 keeps each class inside
/// its own radial band, so one model can in principle label every task.
fn class_radius(class: usize) -> f64 {
    3f64.powi(class as i32) / 3.0
}

pub fn point(task: &TaskSpec, index: u64) -> Point {
    let mut rng = rng_for(&[task.seed, index]);
    match task.params {
        TaskParams::Sinusoid { amplitude, phase } => {
            let x = rng.random_range(-X_RANGE..=X_RANGE);
            Point::Regression {
                x,
                y: sinusoid_target(amplitude, phase, x),
            }
        }
        TaskParams::TransformedClassification {
            rotation_deg,
            scale,
            offset,
        } => {
            let class = rng.random_range(0..N_CLASSES);
            let angle = rng.random_range(0.0..2.0 * PI);
            let jitter: f64 = rng.sample(StandardNormal);
            let r = class_radius(class) * (1.0 + 0.1 * jitter);
            let (bx, by) = (r * angle.cos(), r * angle.sin());
            let (s, c) = (rotation_deg as f64).to_radians().sin_cos();
            let x = [
                scale * (c * bx - s * by) + offset[0],
                scale * (s * bx + c * by) + offset[1],
            ];
            Point::Classification { x, class }
        }
    }
}

/// Builds a batch from the points at `indices`.
pub fn batch_from_indices(task: &TaskSpec, indices: impl IntoIterator<Item = u64>) -> Batch {
    let indices = indices.into_iter();
    let n = indices.size_hint().0;
    match task.family() {
        TaskFamily::Sinusoid => {
            let mut xs = Vec::with_capacity(n);
            let mut ys = Vec::with_capacity(n);
            for i in indices {
                if let Point::Regression { x, y } = point(task, i) {
                    xs.push(x);
                    ys.push(y);
                }
            }
            Batch::new(Tensor::column(xs), Targets::Values(Tensor::column(ys)))
                .expect("rows and targets agree")
        }
        TaskFamily::TransformedClassification => {
            let mut xs = Vec::with_capacity(2 * n);
            let mut classes = Vec::with_capacity(n);
            for i in indices {
                if let Point::Classification { x, class } = point(task, i) {
                    xs.extend_from_slice(&x);
                    classes.push(class);
                }
            }
            Batch::new(
                Tensor::from_vec(classes.len(), 2, xs),
                Targets::Classes(classes),
            )
            .expect("rows and targets agree")
        }
    }
}

/// A cursor over one split of a task's datapoints. Reading `n` points
/// advances the cursor by `n`, so consecutive reads concatenate to a single
/// larger read.
#[derive(Debug, Clone, PartialEq)]
pub struct PointStream {
    task: TaskSpec,
    split: Split,
    next: u64,
}

impl PointStream {
    pub fn new(task: TaskSpec, split: Split) -> Self {
        Self {
            task,
            split,
            next: 0,
        }
    }

    pub fn split(&self) -> Split {
        self.split
    }

    /// Points handed out so far.
    pub fn position(&self) -> u64 {
        self.next
    }

    fn base(&self) -> u64 {
        match self.split {
            Split::Train => 0,
            Split::Test => TEST_INDEX_BASE,
        }
    }

    /// Global indices of the next `n` points, consuming them.
    pub fn take_indices(&mut self, n: usize) -> std::ops::Range<u64> {
        let start = self.base() + self.next;
        self.next += n as u64;
        start..start + n as u64
    }
}

/// `n` points of `task` from `stream`. `n = 0` gives an empty batch.
pub fn sample_batch(task: &TaskSpec, n: usize, stream: &mut PointStream) -> Result<Batch> {
    if stream.task != *task {
        return Err(Error::InvalidDistribution(
            "point stream belongs to a different task".into(),
        ));
    }
    Ok(batch_from_indices(task, stream.take_indices(n)))
}

/// How data arrives within a task: `batch_size` new points every `interval`
/// meta-update steps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataArrivalSchedule {
    pub batch_size: usize,
    pub interval: usize,
}

impl DataArrivalSchedule {
    pub fn new(batch_size: usize, interval: usize) -> Result<Self> {
        let s = Self {
            batch_size,
            interval,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 || self.interval == 0 {
            return Err(Error::Config(format!(
                "arrival schedule needs batch_size >= 1 and interval >= 1, got {self:?}"
            )));
        }
        Ok(())
    }

    /// Dataset size after `arrivals` arrival events.
    pub fn target_after(&self, arrivals: usize) -> usize {
        self.batch_size * arrivals
    }
}

/// The growing dataset of one task plus its fixed, disjoint test split.
#[derive(Debug, Clone, PartialEq)]
pub struct IncrementalDataset {
    task: TaskSpec,
    arrived: Batch,
    test_split: Batch,
    train_stream: PointStream,
}

impl IncrementalDataset {
    /// Empty dataset with a test split of `test_size` points.
    pub fn new(task: TaskSpec, test_size: usize) -> Self {
        let mut test_stream = PointStream::new(task, Split::Test);
        let test_split = batch_from_indices(&task, test_stream.take_indices(test_size));
        let arrived = test_split.empty_like();
        Self {
            task,
            arrived,
            test_split,
            train_stream: PointStream::new(task, Split::Train),
        }
    }

    pub fn task(&self) -> &TaskSpec {
        &self.task
    }

    pub fn arrived(&self) -> &Batch {
        &self.arrived
    }

    pub fn test_split(&self) -> &Batch {
        &self.test_split
    }

    /// `s`, the number of points received so far.
    pub fn shot_count(&self) -> usize {
        self.arrived.n()
    }

    /// Appends `n` fresh train points.
    pub fn receive(&mut self, n: usize) {
        let fresh = batch_from_indices(&self.task, self.train_stream.take_indices(n));
        self.arrived
            .extend(&fresh)
            .expect("points of one task share a layout");
    }

    /// One arrival event under `schedule`.
    pub fn arrival_step(&mut self, schedule: &DataArrivalSchedule) {
        self.receive(schedule.batch_size);
    }
}
