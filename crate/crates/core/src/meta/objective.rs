//! Variable-shot meta-objectives and their exact gradients.

use rand::seq::index;
use rand::Rng;

use super::inner::{inner_update_graph, InnerConfig};
use super::lr::{LearningRatePolicy, PolicyVars};
use crate::autodiff::{DerivativeOrder, GradientVector, Graph, Var};
use crate::error::{Error, Result};
use crate::model::{empirical_risk_graph, Batch, Loss, Mlp, ParamVars, ParamVector};

/// One sampled task: a support set of `K` points and a validation set.
#[derive(Debug, Clone, PartialEq)]
pub struct TaskSample {
    pub train: Batch,
    pub val: Batch,
}

impl TaskSample {
    /// Splits `pool` into `min(k, |pool|)` support points and up to
    /// `val_cap` validation points. The two are disjoint whenever points
    /// remain after the support draw; otherwise validation points are drawn
    /// from the whole pool with replacement. Returns `None` for an empty pool.
    pub fn from_pool<R: Rng + ?Sized>(
        pool: &Batch,
        k: usize,
        val_cap: usize,
        rng: &mut R,
    ) -> Option<Self> {
        let n = pool.n();
        if n == 0 {
            return None;
        }
        let k = k.min(n);
        let picked = index::sample(rng, n, n.min(k + val_cap)).into_vec();
        let (train_idx, val_idx) = picked.split_at(k);
        let val = if val_idx.is_empty() {
            let m = n.min(val_cap);
            let idx: Vec<usize> = (0..m).map(|_| rng.random_range(0..n)).collect();
            pool.select(&idx)
        } else {
            pool.select(val_idx)
        };
        Some(Self {
            train: pool.select(train_idx),
            val,
        })
    }

    pub fn shots(&self) -> usize {
        self.train.n()
    }
}

/// A recorded objective `J` together with the handles needed to
/// differentiate it.
#[derive(Debug, Clone)]
pub struct MetaObjective {
    pub graph: Graph,
    pub theta: ParamVars,
    pub policy: PolicyVars,
    pub output: Var,
    pub order: DerivativeOrder,
}

impl MetaObjective {
    pub fn value(&self) -> f64 {
        self.graph.scalar(self.output)
    }
}

/// Outer gradients: one entry per parameter and one per learnable policy
/// entry, in [`LearningRatePolicy::learnables`] order.
#[derive(Debug, Clone, PartialEq)]
pub struct MetaGradients {
    pub theta: GradientVector,
    pub policy: Vec<f64>,
}

/// Mean post-adaptation validation risk over `tasks`, each adapted with the
/// policy's rate for its own support size.
pub fn meta_objective_vs(
    mlp: &Mlp,
    loss: Loss,
    theta: &ParamVector,
    policy: &LearningRatePolicy,
    tasks: &[TaskSample],
    inner: &InnerConfig,
) -> Result<MetaObjective> {
    if tasks.is_empty() {
        return Err(Error::EmptyBatch("meta-objective task list"));
    }
    let mut graph = Graph::new();
    let theta_vars = theta.register(&mut graph);
    let policy_vars = policy.register(&mut graph, theta)?;
    let mut total: Option<Var> = None;
    for task in tasks {
        let rate = policy_vars.rate(&mut graph, task.shots())?;
        let adapted = inner_update_graph(
            &mut graph,
            mlp,
            &theta_vars,
            &rate,
            &task.train,
            loss,
            inner,
        )?;
        let risk = empirical_risk_graph(&mut graph, mlp, &adapted, &task.val, loss)?;
        total = Some(match total {
            None => risk,
            Some(t) => graph.add(t, risk)?,
        });
    }
    let total = total.expect("tasks is nonempty");
    let output = graph.scale(total, 1.0 / tasks.len() as f64)?;
    Ok(MetaObjective {
        graph,
        theta: theta_vars,
        policy: policy_vars,
        output,
        order: if inner.first_order {
            DerivativeOrder::First
        } else {
            DerivativeOrder::Second
        },
    })
}

/// The fixed-rate objective: every task adapts at the same `alpha`
/// whatever its support size.
pub fn meta_objective_naive(
    mlp: &Mlp,
    loss: Loss,
    theta: &ParamVector,
    alpha: f64,
    tasks: &[TaskSample],
    inner: &InnerConfig,
) -> Result<MetaObjective> {
    meta_objective_vs(
        mlp,
        loss,
        theta,
        &LearningRatePolicy::Fixed { alpha },
        tasks,
        inner,
    )
}

/// Gradients of `J` with respect to `theta` and every learnable policy entry.
pub fn meta_gradients(objective: &mut MetaObjective) -> Result<MetaGradients> {
    let value = objective.value();
    if !value.is_finite() {
        return Err(Error::Format {
            what: "meta-objective",
            detail: format!("value {value} is not finite"),
        });
    }
    let theta_vars = objective.theta.vars().to_vec();
    let policy_vars = objective.policy.learnable_vars();
    let mut wrt = theta_vars.clone();
    wrt.extend_from_slice(&policy_vars);
    let grads = objective.graph.grad(objective.output, &wrt)?;
    let (g_theta, g_policy) = grads.split_at(theta_vars.len());
    Ok(MetaGradients {
        theta: GradientVector {
            entries: ParamVars::flatten_values(&objective.graph, g_theta),
            order: objective.order,
        },
        policy: ParamVars::flatten_values(&objective.graph, g_policy),
    })
}
