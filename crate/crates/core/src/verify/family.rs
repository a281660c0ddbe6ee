//! Task families whose per-example loss gradients can be sampled.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::model::{risk_and_gradient, Loss, Mlp, ParamVector};
use crate::tasks::{batch_from_indices, sample_task, TaskDistribution, TaskSpec};

/// Exclusive upper bound of train-split point indices.
const TRAIN_INDEX_END: u64 = 1 << 62;

pub trait GradientFamily {
    type Task;

    fn param_count(&self) -> usize;

    fn sample_task<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Self::Task>;

    /// Loss gradient at `theta` for one fresh example of `task`.
    fn example_gradient<R: Rng + ?Sized>(
        &self,
        task: &Self::Task,
        theta: &[f64],
        rng: &mut R,
    ) -> Result<Vec<f64>>;

    /// Mean of `s` fresh example gradients.
    fn mean_gradient<R: Rng + ?Sized>(
        &self,
        task: &Self::Task,
        theta: &[f64],
        s: usize,
        rng: &mut R,
    ) -> Result<Vec<f64>> {
        let mut sum = vec![0.0; self.param_count()];
        for _ in 0..s {
            let g = self.example_gradient(task, theta, rng)?;
            sum.iter_mut().zip(&g).for_each(|(a, b)| *a += b);
        }
        let inv = 1.0 / s as f64;
        sum.iter_mut().for_each(|a| *a *= inv);
        Ok(sum)
    }
}

/// Families whose population gradient has a closed form.
pub trait ExactGradientFamily: GradientFamily {
    fn population_gradient(&self, task: &Self::Task, theta: &[f64]) -> Vec<f64>;
}

/// Linear regression with squared loss: `x ~ N(0, I)`, task weights
/// `w ~ N(mean, tau^2 I)`, targets `y = w.x + noise * e` with `e ~ N(0, 1)`.
/// The model is `theta.x` with no bias.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearRegression {
    mean: Vec<f64>,
    tau: f64,
    noise: f64,
}

impl LinearRegression {
    pub fn new(mean: Vec<f64>, tau: f64, noise: f64) -> Result<Self> {
        if mean.is_empty() || !mean.iter().all(|m| m.is_finite()) {
            return Err(Error::Config(
                "linear family needs a nonempty finite mean".into(),
            ));
        }
        if !(tau.is_finite() && tau >= 0.0 && noise.is_finite() && noise >= 0.0) {
            return Err(Error::Config(format!(
                "linear family needs finite tau, noise >= 0, got {tau}, {noise}"
            )));
        }
        Ok(Self { mean, tau, noise })
    }

    /// Two-dimensional family used by the verification report.
    pub fn reference() -> Self {
        Self::new(vec![0.5, -0.5], 1.0, 1.0).expect("valid constants")
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    /// Exact `(C1, C2)` at `theta`. With `R = |theta - mean|^2 + d tau^2`,
    /// `C1 = 4((d + 1) R + d noise^2)` and `C2 = 4 R`.
    pub fn constants(&self, theta: &[f64]) -> Result<(f64, f64)> {
        self.check_theta(theta)?;
        let d = self.dim() as f64;
        let r = theta
            .iter()
            .zip(&self.mean)
            .map(|(t, m)| (t - m).powi(2))
            .sum::<f64>()
            + d * self.tau * self.tau;
        Ok((4.0 * ((d + 1.0) * r + d * self.noise * self.noise), 4.0 * r))
    }

    fn check_theta(&self, theta: &[f64]) -> Result<()> {
        if theta.len() != self.dim() {
            return Err(Error::Dimension(format!(
                "theta has {} entries, family has dimension {}",
                theta.len(),
                self.dim()
            )));
        }
        Ok(())
    }
}

impl GradientFamily for LinearRegression {
    type Task = Vec<f64>;

    fn param_count(&self) -> usize {
        self.dim()
    }

    fn sample_task<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Vec<f64>> {
        Ok(self
            .mean
            .iter()
            .map(|m| m + self.tau * rng.sample::<f64, _>(StandardNormal))
            .collect())
    }

    fn example_gradient<R: Rng + ?Sized>(
        &self,
        task: &Vec<f64>,
        theta: &[f64],
        rng: &mut R,
    ) -> Result<Vec<f64>> {
        self.check_theta(theta)?;
        let x: Vec<f64> = (0..self.dim())
            .map(|_| rng.sample(StandardNormal))
            .collect();
        let e: f64 = rng.sample(StandardNormal);
        let residual: f64 = x
            .iter()
            .zip(theta.iter().zip(task))
            .map(|(xi, (t, w))| xi * (t - w))
            .sum::<f64>()
            - self.noise * e;
        let g: Vec<f64> = x.iter().map(|xi| 2.0 * residual * xi).collect();
        if !g.iter().all(|v| v.is_finite()) {
            return Err(Error::format("gradient", "non-finite linear gradient"));
        }
        Ok(g)
    }
}

impl ExactGradientFamily for LinearRegression {
    fn population_gradient(&self, task: &Vec<f64>, theta: &[f64]) -> Vec<f64> {
        theta.iter().zip(task).map(|(t, w)| 2.0 * (t - w)).collect()
    }
}

/// A network and loss over one of the synthetic task distributions.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelFamily {
    pub mlp: Mlp,
    pub loss: Loss,
    pub dist: TaskDistribution,
}

impl ModelFamily {
    /// Mean loss gradient over the points of `task` at `indices`.
    pub fn batch_gradient(
        &self,
        task: &TaskSpec,
        theta: &[f64],
        indices: impl IntoIterator<Item = u64>,
    ) -> Result<Vec<f64>> {
        let params = ParamVector::from_flat(&self.mlp.sizes, theta)?;
        let batch = batch_from_indices(task, indices);
        Ok(risk_and_gradient(&self.mlp, &params, &batch, self.loss)?.1)
    }

    pub fn random_index<R: Rng + ?Sized>(rng: &mut R) -> u64 {
        rng.random_range(0..TRAIN_INDEX_END)
    }
}

impl GradientFamily for ModelFamily {
    type Task = TaskSpec;

    fn param_count(&self) -> usize {
        self.mlp.param_count()
    }

    fn sample_task<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<TaskSpec> {
        sample_task(&self.dist, rng)
    }

    fn example_gradient<R: Rng + ?Sized>(
        &self,
        task: &TaskSpec,
        theta: &[f64],
        rng: &mut R,
    ) -> Result<Vec<f64>> {
        self.batch_gradient(task, theta, [Self::random_index(rng)])
    }

    fn mean_gradient<R: Rng + ?Sized>(
        &self,
        task: &TaskSpec,
        theta: &[f64],
        s: usize,
        rng: &mut R,
    ) -> Result<Vec<f64>> {
        let indices: Vec<u64> = (0..s).map(|_| Self::random_index(rng)).collect();
        self.batch_gradient(task, theta, indices)
    }
}
