//! Inner learning-rate policies.
//!
//! The shot-scaled rate is `alpha_s = (1 - 1/(1 + eta * s)) * beta`: zero with
//! no data, rising monotonically towards `beta` as shots accumulate. `beta`
//! plays the role of the infinite-shot optimal rate and `eta` the ratio of
//! squared mean-gradient norm to per-example gradient variance.

use serde::{Deserialize, Serialize};

use crate::autodiff::{softplus, Graph, Var};
use crate::error::{Error, Result};
use crate::model::{ParamVars, ParamVector};

/// Scale `c` with `c * softplus(0) == y` exactly when some nearby `c` allows it.
fn unit_scale(y: f64) -> f64 {
    assert!(
        y > 0.0 && y.is_finite(),
        "rates must be positive and finite"
    );
    let base = softplus(0.0);
    let c = y / base;
    let (mut up, mut down) = (c, c);
    for _ in 0..8 {
        for candidate in [up, down] {
            if base * candidate == y {
                return candidate;
            }
        }
        up = up.next_up();
        down = down.next_down();
    }
    c
}

/// `(1 - 1/(1 + eta * s)) * beta`.
pub fn scaled_rate(beta: f64, eta: f64, shots: usize) -> f64 {
    (1.0 - 1.0 / (1.0 + eta * shots as f64)) * beta
}

/// Learnable `(beta, eta)`, each stored as `scale * softplus(raw)` so both
/// stay positive whatever the outer optimizer does. Only the raw values are
/// learned; the scales are fixed at construction so that `raw = 0`
/// reproduces the requested initial values exactly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaledLearningRate {
    pub beta_raw: f64,
    pub eta_raw: f64,
    pub beta_scale: f64,
    pub eta_scale: f64,
}

impl ScaledLearningRate {
    pub fn new(beta: f64, eta: f64) -> Self {
        Self {
            beta_raw: 0.0,
            eta_raw: 0.0,
            beta_scale: unit_scale(beta),
            eta_scale: unit_scale(eta),
        }
    }

    pub fn beta(&self) -> f64 {
        softplus(self.beta_raw) * self.beta_scale
    }

    pub fn eta(&self) -> f64 {
        softplus(self.eta_raw) * self.eta_scale
    }

    pub fn rate(&self, shots: usize) -> f64 {
        scaled_rate(self.beta(), self.eta(), shots)
    }
}

/// How the inner step size is chosen.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum LearningRatePolicy {
    /// One constant rate, not learned.
    Fixed { alpha: f64 },
    /// A learned rate per shot count, `alpha_0 ..= alpha_M`.
    PerShot { rates: Vec<f64> },
    /// A learned rate per model parameter, in flat parameter order.
    PerParameter { rates: Vec<f64> },
    /// The learned shot-scaled rate.
    Scaled(ScaledLearningRate),
}

/// A concrete step size for one inner update.
#[derive(Debug, Clone, PartialEq)]
pub enum StepRate {
    Scalar(f64),
    PerParameter(Vec<f64>),
}

impl LearningRatePolicy {
    pub fn name(&self) -> &'static str {
        match self {
            LearningRatePolicy::Fixed { .. } => "fixed",
            LearningRatePolicy::PerShot { .. } => "per-shot",
            LearningRatePolicy::PerParameter { .. } => "per-parameter",
            LearningRatePolicy::Scaled(_) => "scaled",
        }
    }

    pub fn validate(&self, max_shots: usize, param_count: usize) -> Result<()> {
        match self {
            LearningRatePolicy::PerShot { rates } if rates.len() != max_shots + 1 => {
                Err(Error::Config(format!(
                    "per-shot table has {} entries, needs {}",
                    rates.len(),
                    max_shots + 1
                )))
            }
            LearningRatePolicy::PerParameter { rates } if rates.len() != param_count => {
                Err(Error::Config(format!(
                    "per-parameter rates have {} entries, model has {param_count}",
                    rates.len()
                )))
            }
            _ => Ok(()),
        }
    }

    /// Entries the outer optimizer updates, in a fixed order.
    pub fn learnables(&self) -> Vec<f64> {
        match self {
            LearningRatePolicy::Fixed { .. } => Vec::new(),
            LearningRatePolicy::PerShot { rates } | LearningRatePolicy::PerParameter { rates } => {
                rates.clone()
            }
            LearningRatePolicy::Scaled(s) => vec![s.beta_raw, s.eta_raw],
        }
    }

    pub fn n_learnables(&self) -> usize {
        match self {
            LearningRatePolicy::Fixed { .. } => 0,
            LearningRatePolicy::PerShot { rates } | LearningRatePolicy::PerParameter { rates } => {
                rates.len()
            }
            LearningRatePolicy::Scaled(_) => 2,
        }
    }

    pub fn set_learnables(&mut self, values: &[f64]) -> Result<()> {
        if values.len() != self.n_learnables() {
            return Err(Error::Dimension(format!(
                "{} policy has {} learnables, got {}",
                self.name(),
                self.n_learnables(),
                values.len()
            )));
        }
        match self {
            LearningRatePolicy::Fixed { .. } => {}
            LearningRatePolicy::PerShot { rates } | LearningRatePolicy::PerParameter { rates } => {
                rates.copy_from_slice(values)
            }
            LearningRatePolicy::Scaled(s) => {
                s.beta_raw = values[0];
                s.eta_raw = values[1];
            }
        }
        Ok(())
    }

    /// Step size for an update on `shots` datapoints.
    pub fn rate(&self, shots: usize) -> Result<StepRate> {
        Ok(match self {
            LearningRatePolicy::Fixed { alpha } => StepRate::Scalar(*alpha),
            LearningRatePolicy::PerShot { rates } => {
                StepRate::Scalar(*rates.get(shots).ok_or_else(|| {
                    Error::Dimension(format!(
                        "no per-shot rate for {shots} shots (table covers 0..={})",
                        rates.len().saturating_sub(1)
                    ))
                })?)
            }
            LearningRatePolicy::PerParameter { rates } => StepRate::PerParameter(rates.clone()),
            LearningRatePolicy::Scaled(s) => StepRate::Scalar(s.rate(shots)),
        })
    }

    /// Registers learnable entries on `graph`.
    pub fn register(&self, graph: &mut Graph, theta: &ParamVector) -> Result<PolicyVars> {
        Ok(match self {
            LearningRatePolicy::Fixed { alpha } => PolicyVars::Fixed(*alpha),
            LearningRatePolicy::PerShot { rates } => {
                PolicyVars::PerShot(rates.iter().map(|&r| graph.scalar_leaf(r)).collect())
            }
            LearningRatePolicy::PerParameter { rates } => {
                let shaped = theta.with_flat(rates)?;
                PolicyVars::PerParameter(shaped.register(graph))
            }
            LearningRatePolicy::Scaled(s) => {
                let beta_raw = graph.scalar_leaf(s.beta_raw);
                let eta_raw = graph.scalar_leaf(s.eta_raw);
                let beta = graph.softplus(beta_raw)?;
                let beta = graph.scale(beta, s.beta_scale)?;
                let eta = graph.softplus(eta_raw)?;
                let eta = graph.scale(eta, s.eta_scale)?;
                PolicyVars::Scaled {
                    beta_raw,
                    eta_raw,
                    beta,
                    eta,
                }
            }
        })
    }
}

/// A step size as seen from inside a graph.
#[derive(Debug, Clone)]
pub enum GraphRate {
    Const(f64),
    Scalar(Var),
    PerParameter(ParamVars),
}

/// Graph handles of a policy's learnable entries.
#[derive(Debug, Clone)]
pub enum PolicyVars {
    Fixed(f64),
    PerShot(Vec<Var>),
    PerParameter(ParamVars),
    Scaled {
        beta_raw: Var,
        eta_raw: Var,
        beta: Var,
        eta: Var,
    },
}

impl PolicyVars {
    /// Handles in the same order as [`LearningRatePolicy::learnables`].
    pub fn learnable_vars(&self) -> Vec<Var> {
        match self {
            PolicyVars::Fixed(_) => Vec::new(),
            PolicyVars::PerShot(v) => v.clone(),
            PolicyVars::PerParameter(p) => p.vars().to_vec(),
            PolicyVars::Scaled {
                beta_raw, eta_raw, ..
            } => vec![*beta_raw, *eta_raw],
        }
    }

    /// Records the step size for `shots` datapoints.
    pub fn rate(&self, graph: &mut Graph, shots: usize) -> Result<GraphRate> {
        Ok(match self {
            PolicyVars::Fixed(alpha) => GraphRate::Const(*alpha),
            PolicyVars::PerShot(v) => {
                GraphRate::Scalar(*v.get(shots).ok_or_else(|| {
                    Error::Dimension(format!("no per-shot rate for {shots} shots"))
                })?)
            }
            PolicyVars::PerParameter(p) => GraphRate::PerParameter(p.clone()),
            PolicyVars::Scaled { beta, eta, .. } => {
                // same operation order as `scaled_rate`, so values agree bitwise
                let es = graph.scale(*eta, shots as f64)?;
                let denom = graph.add_const(es, 1.0)?;
                let inv = graph.recip(denom)?;
                let neg = graph.neg(inv)?;
                let frac = graph.add_const(neg, 1.0)?;
                GraphRate::Scalar(graph.mul(frac, *beta)?)
            }
        })
    }
}

impl GraphRate {
    pub fn value(&self, graph: &Graph) -> StepRate {
        match self {
            GraphRate::Const(a) => StepRate::Scalar(*a),
            GraphRate::Scalar(v) => StepRate::Scalar(graph.scalar(*v)),
            GraphRate::PerParameter(p) => StepRate::PerParameter(p.values(graph).to_flat()),
        }
    }

    pub(crate) fn constant(
        rate: &StepRate,
        graph: &mut Graph,
        theta: &ParamVector,
    ) -> Result<Self> {
        Ok(match rate {
            StepRate::Scalar(a) => GraphRate::Const(*a),
            StepRate::PerParameter(r) => {
                GraphRate::PerParameter(theta.with_flat(r)?.register(graph))
            }
        })
    }
}
