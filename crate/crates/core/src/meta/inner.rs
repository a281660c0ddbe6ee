//! The inner update `theta' = theta - alpha * grad f(theta)` on a task's
//! support set, recorded on the tape so an outer objective can differentiate
//! through it.

use super::lr::{GraphRate, StepRate};
use crate::autodiff::{Graph, Var};
use crate::error::Result;
use crate::model::{empirical_risk_graph, Batch, Loss, Mlp, ParamVars, ParamVector};

/// Settings shared by every inner update of a run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InnerConfig {
    /// Gradient steps per update, all at the same rate.
    pub steps: usize,
    /// Global-norm clip applied to each inner gradient.
    pub grad_clip: Option<f64>,
    /// Treat inner gradients as constants in the outer pass.
    pub first_order: bool,
}

impl Default for InnerConfig {
    fn default() -> Self {
        Self {
            steps: 5,
            grad_clip: Some(10.0),
            first_order: false,
        }
    }
}

/// True when the update cannot move the parameters.
fn is_identity(rate: &GraphRate, train: &Batch, steps: usize) -> bool {
    train.is_empty() || steps == 0 || matches!(rate, GraphRate::Const(a) if *a == 0.0)
}

/// Records `config.steps` gradient steps from `theta` on `graph`. With no
/// data or a zero constant rate the input handles are returned untouched.
pub fn inner_update_graph(
    graph: &mut Graph,
    mlp: &Mlp,
    theta: &ParamVars,
    rate: &GraphRate,
    train: &Batch,
    loss: Loss,
    config: &InnerConfig,
) -> Result<ParamVars> {
    if is_identity(rate, train, config.steps) {
        return Ok(theta.clone());
    }
    let mut current = theta.clone();
    for _ in 0..config.steps {
        let risk = empirical_risk_graph(graph, mlp, &current, train, loss)?;
        let mut grads = graph.grad(risk, current.vars())?;
        if config.first_order {
            grads = grads.iter().map(|&g| graph.detach(g)).collect();
        }
        if let Some(clip) = config.grad_clip {
            let norm = grads
                .iter()
                .map(|&g| graph.value(g).squared_norm())
                .sum::<f64>()
                .sqrt();
            if norm > clip {
                // the factor is a constant in the backward pass
                let factor = clip / norm;
                grads = grads
                    .iter()
                    .map(|&g| graph.scale(g, factor))
                    .collect::<Result<_, _>>()?;
            }
        }
        let mut next = Vec::with_capacity(grads.len());
        for (i, (&p, &g)) in current.vars().iter().zip(&grads).enumerate() {
            let delta: Var = match rate {
                GraphRate::Const(a) => graph.scale(g, *a)?,
                GraphRate::Scalar(a) => graph.scalar_mul(*a, g)?,
                GraphRate::PerParameter(r) => graph.mul(r.vars()[i], g)?,
            };
            next.push(graph.sub(p, delta)?);
        }
        current = ParamVars::from_vars(next);
    }
    Ok(current)
}

/// Adapted parameters for `train` at a fixed step size.
pub fn inner_update(
    mlp: &Mlp,
    theta: &ParamVector,
    rate: &StepRate,
    train: &Batch,
    loss: Loss,
    config: &InnerConfig,
) -> Result<ParamVector> {
    if train.is_empty() || config.steps == 0 {
        return Ok(theta.clone());
    }
    let mut graph = Graph::new();
    let vars = theta.register(&mut graph);
    let rate = GraphRate::constant(rate, &mut graph, theta)?;
    let adapted = inner_update_graph(&mut graph, mlp, &vars, &rate, train, loss, config)?;
    Ok(adapted.values(&graph))
}
