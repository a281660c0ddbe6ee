use serde::{Deserialize, Serialize};

use super::batch::{Batch, Targets};
use super::mlp::Mlp;
use super::params::{ParamVars, ParamVector};
use crate::autodiff::{Graph, Tensor, Var};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Loss {
    /// Squared error summed over output columns, averaged over rows.
    Mse,
    /// Softmax cross-entropy against class indices.
    SoftmaxXent,
}

/// Records the mean per-example loss of `predictions` against `targets`.
/// Errors on an empty batch.
pub fn risk_graph(
    graph: &mut Graph,
    predictions: Var,
    targets: &Targets,
    loss: Loss,
) -> Result<Var> {
    let (n, d_out) = graph.value(predictions).shape();
    if n == 0 {
        return Err(Error::EmptyBatch("empirical risk"));
    }
    if targets.n() != n {
        return Err(Error::Dimension(format!(
            "{n} predictions for {} targets",
            targets.n()
        )));
    }
    let inv_n = 1.0 / n as f64;
    match (loss, targets) {
        (Loss::Mse, Targets::Values(t)) => {
            if t.cols() != d_out {
                return Err(Error::Dimension(format!(
                    "targets have width {}, predictions {d_out}",
                    t.cols()
                )));
            }
            let target = graph.leaf(t.clone());
            let diff = graph.sub(predictions, target)?;
            let sq = graph.mul(diff, diff)?;
            let total = graph.sum(sq)?;
            Ok(graph.scale(total, inv_n)?)
        }
        (Loss::SoftmaxXent, Targets::Classes(classes)) => {
            let mut onehot = Tensor::zeros(n, d_out);
            for (r, &c) in classes.iter().enumerate() {
                if c >= d_out {
                    return Err(Error::Dimension(format!(
                        "class {c} out of range for {d_out} logits"
                    )));
                }
                onehot.set(r, c, 1.0);
            }
            let onehot = graph.leaf(onehot);
            let lse = graph.log_sum_exp_rows(predictions)?;
            let lse_total = graph.sum(lse)?;
            let picked = graph.mul(predictions, onehot)?;
            let picked_total = graph.sum(picked)?;
            let diff = graph.sub(lse_total, picked_total)?;
            Ok(graph.scale(diff, inv_n)?)
        }
        (loss, _) => Err(Error::Dimension(format!(
            "{loss:?} does not match the batch's target kind"
        ))),
    }
}

/// Forward pass plus risk, recorded on `graph`.
pub fn empirical_risk_graph(
    graph: &mut Graph,
    mlp: &Mlp,
    params: &ParamVars,
    batch: &Batch,
    loss: Loss,
) -> Result<Var> {
    if batch.is_empty() {
        return Err(Error::EmptyBatch("empirical risk"));
    }
    let x = graph.leaf(batch.inputs().clone());
    let pred = mlp.forward_graph(graph, params, x)?;
    risk_graph(graph, pred, batch.targets(), loss)
}

/// Mean loss of `mlp` with `params` over `batch`. `batch.n` must be at least 1.
pub fn empirical_risk(mlp: &Mlp, params: &ParamVector, batch: &Batch, loss: Loss) -> Result<f64> {
    let mut graph = Graph::new();
    let vars = params.register(&mut graph);
    let r = empirical_risk_graph(&mut graph, mlp, &vars, batch, loss)?;
    Ok(graph.scalar(r))
}

/// Risk and its flat gradient with respect to `params`.
pub fn risk_and_gradient(
    mlp: &Mlp,
    params: &ParamVector,
    batch: &Batch,
    loss: Loss,
) -> Result<(f64, Vec<f64>)> {
    let mut graph = Graph::new();
    let vars = params.register(&mut graph);
    let r = empirical_risk_graph(&mut graph, mlp, &vars, batch, loss)?;
    let grads = graph.grad(r, vars.vars())?;
    Ok((graph.scalar(r), ParamVars::flatten_values(&graph, &grads)))
}

/// Fraction of rows whose arg-max logit is the labelled class.
pub fn accuracy(mlp: &Mlp, params: &ParamVector, batch: &Batch) -> Result<f64> {
    let Targets::Classes(classes) = batch.targets() else {
        return Err(Error::Dimension("accuracy needs class targets".into()));
    };
    if batch.is_empty() {
        return Err(Error::EmptyBatch("accuracy"));
    }
    let logits = mlp.forward(params, batch.inputs())?;
    let hits = classes
        .iter()
        .enumerate()
        .filter(|&(r, &c)| {
            let row = logits.row_slice(r);
            let best = row
                .iter()
                .enumerate()
                .fold(
                    (0, f64::NEG_INFINITY),
                    |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc },
                )
                .0;
            best == c
        })
        .count();
    Ok(hits as f64 / classes.len() as f64)
}
