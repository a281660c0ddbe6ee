//! Empirical check that averaging `s` i.i.d. example gradients divides
//! their variance by `s`.

use rand::Rng;

use super::family::ModelFamily;
use crate::error::{Error, Result};
use crate::tasks::TaskSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sampling {
    /// Each shot is a fresh point.
    Iid,
    /// All shots copy one fresh point.
    Duplicated,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VarianceRow {
    pub s: usize,
    /// Summed per-coordinate variance of the `s`-shot mean gradient.
    pub variance: f64,
    /// `s * variance / variance(1)`.
    pub ratio: f64,
}

/// Trace variance of the `s`-shot mean gradient over `n_reps` independent
/// batches.
fn shot_variance<R: Rng + ?Sized>(
    family: &ModelFamily,
    task: &TaskSpec,
    theta: &[f64],
    s: usize,
    n_reps: usize,
    sampling: Sampling,
    rng: &mut R,
) -> Result<f64> {
    let p = family.mlp.param_count();
    let mut mean = vec![0.0; p];
    let mut m2 = vec![0.0; p];
    let mut indices = vec![0u64; s];
    for rep in 0..n_reps {
        match sampling {
            Sampling::Iid => indices
                .iter_mut()
                .for_each(|i| *i = ModelFamily::random_index(rng)),
            Sampling::Duplicated => indices.fill(ModelFamily::random_index(rng)),
        }
        let g = family
            .batch_gradient(task, theta, indices.iter().copied())
            .map_err(|e| Error::NumericalFailure {
                what: "shot-mean gradient",
                task: rep,
                shots: s,
                source: Box::new(e),
            })?;
        let n = (rep + 1) as f64;
        for i in 0..p {
            let d = g[i] - mean[i];
            mean[i] += d / n;
            m2[i] += d * (g[i] - mean[i]);
        }
    }
    Ok(m2.iter().sum::<f64>() / (n_reps - 1) as f64)
}

/// Ratios `s * Var_s / Var_1` for each `s`. The one-shot reference is always
/// measured, on its own draws.
pub fn variance_law_check<R: Rng + ?Sized>(
    family: &ModelFamily,
    task: &TaskSpec,
    theta: &[f64],
    s_values: &[usize],
    n_reps: usize,
    sampling: Sampling,
    rng: &mut R,
) -> Result<Vec<VarianceRow>> {
    if n_reps < 2 || s_values.contains(&0) {
        return Err(Error::Config(format!(
            "variance check needs n_reps >= 2 and positive shot counts, got {n_reps} and {s_values:?}"
        )));
    }
    let var1 = shot_variance(family, task, theta, 1, n_reps, sampling, rng)?;
    let mut rows = Vec::with_capacity(s_values.len());
    for &s in s_values {
        let variance = if s == 1 {
            var1
        } else {
            shot_variance(family, task, theta, s, n_reps, sampling, rng)?
        };
        rows.push(VarianceRow {
            s,
            variance,
            ratio: s as f64 * variance / var1,
        });
    }
    Ok(rows)
}
