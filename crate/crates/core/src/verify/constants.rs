//! Monte-Carlo estimates of the gradient-noise constants `C1` and `C2`.

use rand::Rng;

use super::family::GradientFamily;
use crate::error::{Error, Result};

/// `C1`: expected trace of the per-example gradient covariance.
/// `C2`: expected squared norm of the task's mean gradient.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantEstimate {
    pub c1: f64,
    pub c2: f64,
    /// Standard errors across tasks.
    pub c1_se: f64,
    pub c2_se: f64,
    pub n_tasks: usize,
    pub n_per_task: usize,
}

impl ConstantEstimate {
    /// `c2` uses the squared norm of each task's sample mean, which
    /// overshoots by `C1 / n_per_task` in expectation. This removes it.
    pub fn c2_debiased(&self) -> f64 {
        self.c2 - self.c1 / self.n_per_task as f64
    }
}

/// Per task, draws `n_per_task` example gradients at `theta`. `C1` averages
/// the summed unbiased per-coordinate variances; `C2` averages the squared
/// norm of the sample-mean gradient.
pub fn estimate_c1_c2<F: GradientFamily, R: Rng + ?Sized>(
    family: &F,
    theta: &[f64],
    n_tasks: usize,
    n_per_task: usize,
    rng: &mut R,
) -> Result<ConstantEstimate> {
    if n_per_task < 2 || n_tasks < 2 {
        return Err(Error::Config(format!(
            "constant estimate needs at least 2 tasks and 2 points per task, got {n_tasks} and {n_per_task}"
        )));
    }
    let p = family.param_count();
    let mut var_sums = Vec::with_capacity(n_tasks);
    let mut mean_norms = Vec::with_capacity(n_tasks);
    let mut mean = vec![0.0; p];
    let mut m2 = vec![0.0; p];
    for t in 0..n_tasks {
        let task = family.sample_task(rng)?;
        mean.fill(0.0);
        m2.fill(0.0);
        for k in 0..n_per_task {
            let g = family.example_gradient(&task, theta, rng).map_err(|e| {
                Error::NumericalFailure {
                    what: "example gradient",
                    task: t,
                    shots: k,
                    source: Box::new(e),
                }
            })?;
            let n = (k + 1) as f64;
            for i in 0..p {
                let d = g[i] - mean[i];
                mean[i] += d / n;
                m2[i] += d * (g[i] - mean[i]);
            }
        }
        var_sums.push(m2.iter().sum::<f64>() / (n_per_task - 1) as f64);
        mean_norms.push(mean.iter().map(|m| m * m).sum::<f64>());
    }
    let (c1, c1_se) = mean_and_se(&var_sums);
    let (c2, c2_se) = mean_and_se(&mean_norms);
    Ok(ConstantEstimate {
        c1,
        c2,
        c1_se,
        c2_se,
        n_tasks,
        n_per_task,
    })
}

/// Sample mean and standard error of the mean.
pub(crate) fn mean_and_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}
