//! Fixtures shared by the benchmarks.

use varshot_core::meta::TaskSample;
use varshot_core::model::{Activation, Mlp, ParamVector};
use varshot_core::online::TaskBuffer;
use varshot_core::seed::rng_for;
use varshot_core::tasks::{batch_from_indices, IncrementalDataset, TaskDistribution, TaskStream};

/// A sinusoid regressor with two hidden layers of `width`.
pub fn sinusoid_net(width: usize) -> (Mlp, ParamVector) {
    let mlp = Mlp::new(vec![1, width, width, 1], Activation::Tanh).expect("valid shape");
    let theta = ParamVector::glorot(&mlp.sizes, &mut rng_for(&[0xBE, width as u64]));
    (mlp, theta)
}

/// `n_tasks` sinusoid tasks, each with `shots` support and 10 validation
/// points.
pub fn meta_batch(n_tasks: usize, shots: usize) -> Vec<TaskSample> {
    let mut rng = rng_for(&[0xBE, 1]);
    TaskStream::generate(&TaskDistribution::sinusoid(), n_tasks, 0)
        .expect("stream")
        .tasks()
        .iter()
        .map(|t| {
            let pool = batch_from_indices(t, 0..(shots + 10) as u64);
            TaskSample::from_pool(&pool, shots, 10, &mut rng).expect("non-empty pool")
        })
        .collect()
}

/// A buffer of `n_tasks` frozen sinusoid tasks with `points` points each.
pub fn frozen_buffer(n_tasks: usize, points: usize) -> TaskBuffer {
    let mut buffer = TaskBuffer::new();
    let stream = TaskStream::generate(&TaskDistribution::sinusoid(), n_tasks, 0).expect("stream");
    for task in stream.tasks() {
        let mut d = IncrementalDataset::new(*task, 10);
        d.receive(points);
        buffer.begin(d).expect("no task in progress");
        buffer.freeze().expect("task in progress");
    }
    buffer
}
