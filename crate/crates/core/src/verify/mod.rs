//! Brute-force oracles for the shot-scaled learning rate: gradient-noise
//! constants, a grid-search optimal rate, the bias-variance decomposition
//! of its objective, and the `1/s` variance law.

mod constants;
mod family;
mod oracle;
mod variance;

pub use constants::{estimate_c1_c2, ConstantEstimate};
pub use family::{ExactGradientFamily, GradientFamily, LinearRegression, ModelFamily};
pub use oracle::{
    alpha_grid, closed_form_alpha, oracle_alpha, predicted_mse, sampled_mse, scaling_rule_report,
    MseCurve, OracleAlpha, ScalingRow, ScalingRuleEstimate, GRID_SPAN, MIN_GRID_POINTS,
    MIN_MC_DRAWS,
};
pub use variance::{variance_law_check, Sampling, VarianceRow};
