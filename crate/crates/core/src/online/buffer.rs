use crate::error::{Error, Result};
use crate::model::Batch;
use crate::tasks::{IncrementalDataset, TaskSpec};

/// A finished task and the data it had when the learner moved on.
#[derive(Debug, Clone, PartialEq)]
pub struct FrozenTask {
    pub task: TaskSpec,
    pub data: Batch,
}

/// Every task seen so far: frozen earlier tasks plus the live current one.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TaskBuffer {
    frozen: Vec<FrozenTask>,
    current: Option<IncrementalDataset>,
}

impl TaskBuffer {
    pub fn new() -> Self {
        Self::default()
    }

    /// Makes `dataset` the current task. The previous one must be frozen.
    pub fn begin(&mut self, dataset: IncrementalDataset) -> Result<()> {
        if self.current.is_some() {
            return Err(Error::Config(
                "cannot begin a task before freezing the current one".into(),
            ));
        }
        self.current = Some(dataset);
        Ok(())
    }

    /// Freezes the current task's data.
    pub fn freeze(&mut self) -> Result<&FrozenTask> {
        let current = self
            .current
            .take()
            .ok_or_else(|| Error::Config("no current task to freeze".into()))?;
        self.frozen.push(FrozenTask {
            task: *current.task(),
            data: current.arrived().clone(),
        });
        Ok(self.frozen.last().expect("just pushed"))
    }

    pub fn current(&self) -> Option<&IncrementalDataset> {
        self.current.as_ref()
    }

    pub fn current_mut(&mut self) -> Option<&mut IncrementalDataset> {
        self.current.as_mut()
    }

    pub fn frozen(&self) -> &[FrozenTask] {
        &self.frozen
    }

    /// `t`: frozen tasks plus the current one, if any.
    pub fn n_tasks(&self) -> usize {
        self.frozen.len() + usize::from(self.current.is_some())
    }

    pub fn is_empty(&self) -> bool {
        self.n_tasks() == 0
    }

    /// Data of task `j` (0-based, in arrival order).
    pub fn pool(&self, j: usize) -> Option<&Batch> {
        if j < self.frozen.len() {
            Some(&self.frozen[j].data)
        } else if j == self.frozen.len() {
            self.current.as_ref().map(|c| c.arrived())
        } else {
            None
        }
    }

    /// Points across every task.
    pub fn total_points(&self) -> usize {
        (0..self.n_tasks())
            .filter_map(|j| self.pool(j))
            .map(Batch::n)
            .sum()
    }

    /// Maps a position in the concatenation of all pools to `(task, row)`.
    pub fn locate(&self, mut global: usize) -> Option<(usize, usize)> {
        for j in 0..self.n_tasks() {
            let n = self.pool(j)?.n();
            if global < n {
                return Some((j, global));
            }
            global -= n;
        }
        None
    }
}
