//! Meta-learner state: model parameters, rate policy and optimizer moments.

use super::adam::{AdamConfig, AdamState};
use super::checkpoint::Checkpoint;
use super::config::MetaOptimizerConfig;
use super::inner::inner_update;
use super::lr::{LearningRatePolicy, ScaledLearningRate};
use super::objective::{meta_gradients, meta_objective_vs, TaskSample};
use crate::autodiff::{DerivativeOrder, GradientVector, Tensor};
use crate::error::{Error, Result};
use crate::model::{
    empirical_risk, risk_and_gradient, Activation, Batch, Layer, Loss, Mlp, ParamVector,
};

/// What one meta-update saw and did.
#[derive(Debug, Clone, PartialEq)]
pub struct MetaStepReport {
    /// `J` before the step; `None` when no sampled task had data.
    pub objective: Option<f64>,
    pub theta_grad: GradientVector,
    /// Gradients of the policy's learnable entries.
    pub policy_grad: Vec<f64>,
    /// Support size of each sampled task.
    pub shots: Vec<usize>,
}

/// One experiment's meta-learning state. A single Adam state covers the
/// parameters followed by the policy's learnable entries.
#[derive(Debug, Clone, PartialEq)]
pub struct MetaLearner {
    mlp: Mlp,
    loss: Loss,
    theta: ParamVector,
    policy: LearningRatePolicy,
    adam: AdamState,
    config: MetaOptimizerConfig,
}

impl MetaLearner {
    pub fn new(
        mlp: Mlp,
        loss: Loss,
        theta: ParamVector,
        policy: LearningRatePolicy,
        config: MetaOptimizerConfig,
    ) -> Result<Self> {
        config.validate()?;
        if theta.sizes() != mlp.sizes {
            return Err(Error::Dimension(format!(
                "parameters have shape {:?}, network expects {:?}",
                theta.sizes(),
                mlp.sizes
            )));
        }
        policy.validate(config.max_shots, theta.len())?;
        let adam = AdamState::new(theta.len() + policy.n_learnables());
        Ok(Self {
            mlp,
            loss,
            theta,
            policy,
            adam,
            config,
        })
    }

    pub fn mlp(&self) -> &Mlp {
        &self.mlp
    }

    pub fn loss(&self) -> Loss {
        self.loss
    }

    pub fn theta(&self) -> &ParamVector {
        &self.theta
    }

    pub fn policy(&self) -> &LearningRatePolicy {
        &self.policy
    }

    pub fn adam(&self) -> &AdamState {
        &self.adam
    }

    pub fn config(&self) -> &MetaOptimizerConfig {
        &self.config
    }

    pub fn adam_config(&self) -> AdamConfig {
        AdamConfig {
            rate: self.config.outer_rate,
            betas: self.config.adam_betas,
            eps: self.config.adam_eps,
            clip: Some(self.config.grad_clip),
        }
    }

    fn zero_report(&self, shots: Vec<usize>) -> MetaStepReport {
        MetaStepReport {
            objective: None,
            theta_grad: GradientVector {
                entries: vec![0.0; self.theta.len()],
                order: self.order(),
            },
            policy_grad: vec![0.0; self.policy.n_learnables()],
            shots,
        }
    }

    fn order(&self) -> DerivativeOrder {
        if self.config.first_order {
            DerivativeOrder::First
        } else {
            DerivativeOrder::Second
        }
    }

    /// Outer gradients of `J` over `tasks` at the current state, without
    /// stepping.
    pub fn meta_gradients(&self, tasks: &[TaskSample]) -> Result<MetaStepReport> {
        let shots = tasks.iter().map(TaskSample::shots).collect();
        if tasks.is_empty() {
            return Ok(self.zero_report(shots));
        }
        let mut j = meta_objective_vs(
            &self.mlp,
            self.loss,
            &self.theta,
            &self.policy,
            tasks,
            &self.config.inner(),
        )?;
        let g = meta_gradients(&mut j)?;
        Ok(MetaStepReport {
            objective: Some(j.value()),
            theta_grad: g.theta,
            policy_grad: g.policy,
            shots,
        })
    }

    /// One Adam step on `J` over `tasks`. With no tasks nothing moves,
    /// including the optimizer moments.
    pub fn meta_step(&mut self, tasks: &[TaskSample]) -> Result<MetaStepReport> {
        let report = self.meta_gradients(tasks)?;
        if report.objective.is_some() {
            let mut grads = report.theta_grad.entries.clone();
            grads.extend_from_slice(&report.policy_grad);
            self.apply(&grads)?;
        }
        Ok(report)
    }

    /// One supervised Adam step on the plain empirical risk of `batch`,
    /// without adaptation. Returns the risk before the step.
    pub fn supervised_step(&mut self, batch: &Batch) -> Result<f64> {
        let (risk, mut grads) = risk_and_gradient(&self.mlp, &self.theta, batch, self.loss)?;
        grads.resize(self.adam.len(), 0.0);
        self.apply(&grads)?;
        Ok(risk)
    }

    fn apply(&mut self, grads: &[f64]) -> Result<()> {
        let mut values = self.theta.to_flat();
        values.extend(self.policy.learnables());
        let config = self.adam_config();
        self.adam.update(&mut values, grads, &config)?;
        let (theta, policy) = values.split_at(self.theta.len());
        self.theta = self.theta.with_flat(theta)?;
        self.policy.set_learnables(policy)?;
        Ok(())
    }

    /// Parameters adapted to `train` at the policy's rate for `|train|`.
    pub fn adapt(&self, train: &Batch) -> Result<ParamVector> {
        let rate = self.policy.rate(train.n())?;
        inner_update(
            &self.mlp,
            &self.theta,
            &rate,
            train,
            self.loss,
            &self.config.inner(),
        )
    }

    /// Risk on `test` after adapting to `train`.
    pub fn adapted_risk(&self, train: &Batch, test: &Batch) -> Result<f64> {
        let adapted = self.adapt(train)?;
        empirical_risk(&self.mlp, &adapted, test, self.loss)
    }

    pub fn to_checkpoint(&self) -> Checkpoint {
        let mut c = Checkpoint::new();
        for (i, layer) in self.theta.layers().iter().enumerate() {
            let (r, k) = layer.weight.shape();
            c.push(
                format!("theta.layer{i}.weight"),
                vec![r, k],
                layer.weight.data().to_vec(),
            );
            c.push(
                format!("theta.layer{i}.bias"),
                vec![layer.bias.cols()],
                layer.bias.data().to_vec(),
            );
        }
        match &self.policy {
            LearningRatePolicy::Fixed { alpha } => {
                c.push("policy.fixed.alpha", vec![1], vec![*alpha])
            }
            LearningRatePolicy::PerShot { rates } => {
                c.push("policy.per_shot", vec![rates.len()], rates.clone())
            }
            LearningRatePolicy::PerParameter { rates } => {
                c.push("policy.per_parameter", vec![rates.len()], rates.clone())
            }
            LearningRatePolicy::Scaled(s) => {
                c.push("policy.beta_raw", vec![1], vec![s.beta_raw]);
                c.push("policy.eta_raw", vec![1], vec![s.eta_raw]);
                c.push("policy.beta_scale", vec![1], vec![s.beta_scale]);
                c.push("policy.eta_scale", vec![1], vec![s.eta_scale]);
            }
        }
        c.push("adam.m", vec![self.adam.len()], self.adam.m.clone());
        c.push("adam.v", vec![self.adam.len()], self.adam.v.clone());
        c.push("adam.step", vec![1], vec![self.adam.step as f64]);
        c
    }

    /// Restores state saved by [`MetaLearner::to_checkpoint`]. Architecture,
    /// loss and hyperparameters come from the caller.
    pub fn from_checkpoint(
        checkpoint: &Checkpoint,
        activation: Activation,
        loss: Loss,
        config: MetaOptimizerConfig,
    ) -> Result<Self> {
        let mut layers = Vec::new();
        while let Some(w) = checkpoint.get(&format!("theta.layer{}.weight", layers.len())) {
            let b = checkpoint.require(&format!("theta.layer{}.bias", layers.len()))?;
            let [rows, cols] = w.dims[..] else {
                return Err(Error::format(
                    "checkpoint",
                    format!("`{}` is not 2-D", w.name),
                ));
            };
            layers.push(Layer {
                weight: Tensor::from_vec(rows, cols, w.data.clone()),
                bias: Tensor::row(b.data.clone()),
            });
        }
        if layers.is_empty() {
            return Err(Error::format("checkpoint", "no parameter layers"));
        }
        let theta = ParamVector::new(layers)?;
        let scalar = |name: &str| -> Result<f64> {
            let e = checkpoint.require(name)?;
            e.data
                .first()
                .copied()
                .ok_or_else(|| Error::format("checkpoint", format!("`{name}` is empty")))
        };
        let policy = if let Some(e) = checkpoint.get("policy.per_shot") {
            LearningRatePolicy::PerShot {
                rates: e.data.clone(),
            }
        } else if let Some(e) = checkpoint.get("policy.per_parameter") {
            LearningRatePolicy::PerParameter {
                rates: e.data.clone(),
            }
        } else if checkpoint.get("policy.beta_raw").is_some() {
            LearningRatePolicy::Scaled(ScaledLearningRate {
                beta_raw: scalar("policy.beta_raw")?,
                eta_raw: scalar("policy.eta_raw")?,
                beta_scale: scalar("policy.beta_scale")?,
                eta_scale: scalar("policy.eta_scale")?,
            })
        } else {
            LearningRatePolicy::Fixed {
                alpha: scalar("policy.fixed.alpha")?,
            }
        };
        let mlp = Mlp::new(theta.sizes(), activation)?;
        let mut learner = Self::new(mlp, loss, theta, policy, config)?;
        let m = checkpoint.require("adam.m")?;
        let v = checkpoint.require("adam.v")?;
        if m.data.len() != learner.adam.len() || v.data.len() != learner.adam.len() {
            return Err(Error::format(
                "checkpoint",
                "optimizer moments have the wrong length",
            ));
        }
        learner.adam.m = m.data.clone();
        learner.adam.v = v.data.clone();
        learner.adam.step = scalar("adam.step")? as u64;
        Ok(learner)
    }
}
