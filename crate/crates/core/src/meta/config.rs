use serde::{Deserialize, Serialize};

use super::inner::InnerConfig;
use crate::error::{Error, Result};

/// How the support-set size `K` of each sampled task is drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ShotDistribution {
    /// Uniform on `{0, ..., min(M, |D|)}`.
    Uniform,
    /// Always `min(k, |D|)`.
    Constant { k: usize },
}

/// Outer-loop hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MetaOptimizerConfig {
    /// Adam step size.
    pub outer_rate: f64,
    /// Inner gradient steps per adaptation.
    pub inner_steps: usize,
    /// Meta-updates between consecutive arrival events.
    pub meta_steps_per_arrival: usize,
    /// Global-norm clip on the outer gradient.
    pub grad_clip: f64,
    /// Global-norm clip on each inner gradient; `None` disables it.
    pub inner_grad_clip: Option<f64>,
    pub adam_betas: (f64, f64),
    pub adam_eps: f64,
    /// Largest support set used for adaptation.
    pub max_shots: usize,
    pub first_order: bool,
    /// Tasks per meta-update.
    pub task_batch: usize,
    pub shot_distribution: ShotDistribution,
    /// Largest validation set per sampled task.
    pub val_cap: usize,
}

impl Default for MetaOptimizerConfig {
    fn default() -> Self {
        Self {
            outer_rate: 1e-4,
            inner_steps: 5,
            meta_steps_per_arrival: 1,
            grad_clip: 10.0,
            inner_grad_clip: Some(10.0),
            adam_betas: (0.9, 0.999),
            adam_eps: 1e-8,
            max_shots: 20,
            first_order: false,
            task_batch: 25,
            shot_distribution: ShotDistribution::Uniform,
            val_cap: 20,
        }
    }
}

impl MetaOptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |field: &str, why: &str| Err(Error::Config(format!("meta.{field}: {why}")));
        if !(self.outer_rate.is_finite() && self.outer_rate > 0.0) {
            return fail("outer_rate", "must be positive");
        }
        if self.inner_steps == 0 {
            return fail("inner_steps", "must be at least 1");
        }
        if self.meta_steps_per_arrival == 0 {
            return fail("meta_steps_per_arrival", "must be at least 1");
        }
        if self.grad_clip.is_nan() || self.grad_clip <= 0.0 {
            return fail("grad_clip", "must be positive");
        }
        if matches!(self.inner_grad_clip, Some(c) if c.is_nan() || c <= 0.0) {
            return fail("inner_grad_clip", "must be positive");
        }
        let (b1, b2) = self.adam_betas;
        if !((0.0..1.0).contains(&b1) && (0.0..1.0).contains(&b2)) {
            return fail("adam_betas", "each must lie in [0, 1)");
        }
        if self.adam_eps.is_nan() || self.adam_eps <= 0.0 {
            return fail("adam_eps", "must be positive");
        }
        if self.max_shots == 0 {
            return fail("max_shots", "must be at least 1");
        }
        if self.task_batch == 0 {
            return fail("task_batch", "must be at least 1");
        }
        if self.val_cap == 0 {
            return fail("val_cap", "must be at least 1");
        }
        Ok(())
    }

    pub fn inner(&self) -> InnerConfig {
        InnerConfig {
            steps: self.inner_steps,
            grad_clip: self.inner_grad_clip,
            first_order: self.first_order,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        MetaOptimizerConfig::default().validate().unwrap();
    }

    #[test]
    fn rejects_bad_fields() {
        let bad = [
            MetaOptimizerConfig {
                outer_rate: 0.0,
                ..Default::default()
            },
            MetaOptimizerConfig {
                inner_steps: 0,
                ..Default::default()
            },
            MetaOptimizerConfig {
                max_shots: 0,
                ..Default::default()
            },
            MetaOptimizerConfig {
                adam_betas: (1.0, 0.999),
                ..Default::default()
            },
        ];
        for c in bad {
            let err = c.validate().unwrap_err().to_string();
            assert!(err.contains("meta."), "{err}");
        }
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let r: std::result::Result<MetaOptimizerConfig, _> =
            serde_json::from_str(r#"{"outer_rate": 0.01, "typo": 1}"#);
        assert!(r.is_err());
        let c: MetaOptimizerConfig = serde_json::from_str(r#"{"outer_rate": 0.01}"#).unwrap();
        assert_eq!(c.max_shots, 20);
    }
}
