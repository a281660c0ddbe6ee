//! Dense networks, batches and losses.

mod batch;
mod loss;
mod mlp;
mod params;

pub use batch::{Batch, Targets};
pub use loss::{
    accuracy, empirical_risk, empirical_risk_graph, risk_and_gradient, risk_graph, Loss,
};
pub use mlp::{Activation, Mlp};
pub use params::{Layer, ParamVars, ParamVector};
