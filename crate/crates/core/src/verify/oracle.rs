//! Brute-force search for the MSE-optimal finite-shot learning rate.
//!
//! For a task with population gradient `g` and an `s`-shot sample-mean
//! gradient `g_s`, the finite-shot update `theta - a g_s` is compared with the
//! infinite-shot update `theta - beta g` through
//! `MSE(a) = E |a g_s - beta g|^2`. Every grid rate is scored on the same
//! Monte-Carlo draws, so the sampled curve is smooth in `a` and its minimizer
//! is not swamped by independent noise at neighbouring grid points.

use std::fmt::Write as _;

use rand::Rng;

use super::constants::mean_and_se;
use super::family::ExactGradientFamily;
use super::LinearRegression;
use crate::error::{Error, Result};
use crate::meta::scaled_rate;
use crate::seed::rng_for;

/// Minimum grid resolution accepted by [`oracle_alpha`].
pub const MIN_GRID_POINTS: usize = 200;
/// Minimum Monte-Carlo draws accepted by [`oracle_alpha`].
pub const MIN_MC_DRAWS: usize = 10_000;
/// Default grids extend past `beta` so that a minimizer at `beta` is interior.
pub const GRID_SPAN: f64 = 1.25;

/// `points` evenly spaced rates over `[0, GRID_SPAN * beta]`.
pub fn alpha_grid(beta: f64, points: usize) -> Vec<f64> {
    let top = GRID_SPAN * beta;
    let last = points.saturating_sub(1).max(1) as f64;
    (0..points).map(|i| top * i as f64 / last).collect()
}

/// The rate the scaling rule assigns to `s` shots when `eta = C2 / C1`.
pub fn closed_form_alpha(c1: f64, c2: f64, beta: f64, s: usize) -> f64 {
    if s == 0 {
        0.0
    } else if c1 == 0.0 {
        beta
    } else {
        scaled_rate(beta, c2 / c1, s)
    }
}

/// `a^2 C1 / s + (a - beta)^2 C2`.
pub fn predicted_mse(c1: f64, c2: f64, beta: f64, s: usize, alpha: f64) -> f64 {
    alpha * alpha * c1 / s as f64 + (alpha - beta).powi(2) * c2
}

/// Sampled `MSE(a)` with its standard error at each grid rate.
#[derive(Debug, Clone, PartialEq)]
pub struct MseCurve {
    pub alphas: Vec<f64>,
    pub mse: Vec<f64>,
    pub se: Vec<f64>,
    pub shots: usize,
    pub n_mc: usize,
}

impl MseCurve {
    pub fn argmin(&self) -> usize {
        self.mse
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .map(|(i, _)| i)
            .expect("grid is nonempty")
    }

    /// Largest `|sampled - predicted| / se` over the grid.
    pub fn max_z(&self, predicted: impl Fn(f64) -> f64) -> f64 {
        self.alphas
            .iter()
            .zip(self.mse.iter().zip(&self.se))
            .map(|(&a, (&m, &se))| {
                let diff = (m - predicted(a)).abs();
                if diff == 0.0 {
                    0.0
                } else {
                    diff / se
                }
            })
            .fold(0.0, f64::max)
    }

    /// Leading coefficient of a least-squares parabola through the grid
    /// points within `radius` indices of the minimizer.
    pub fn local_curvature(&self, radius: usize) -> f64 {
        let c = self.argmin();
        let lo = c.saturating_sub(radius);
        let hi = (c + radius + 1).min(self.alphas.len());
        let x0 = self.alphas[c];
        let pts: Vec<(f64, f64)> = (lo..hi)
            .map(|i| (self.alphas[i] - x0, self.mse[i]))
            .collect();
        fit_parabola(&pts)[2]
    }
}

/// Coefficients `[c0, c1, c2]` of `c0 + c1 x + c2 x^2` by normal equations.
fn fit_parabola(pts: &[(f64, f64)]) -> [f64; 3] {
    let mut a = [[0.0; 4]; 3];
    for &(x, y) in pts {
        let p = [1.0, x, x * x];
        for r in 0..3 {
            for c in 0..3 {
                a[r][c] += p[r] * p[c];
            }
            a[r][3] += p[r] * y;
        }
    }
    for col in 0..3 {
        let pivot = (col..3)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .expect("nonempty range");
        a.swap(col, pivot);
        let pivot_row = a[col];
        for (r, row) in a.iter_mut().enumerate() {
            if r != col {
                let f = row[col] / pivot_row[col];
                for (x, p) in row.iter_mut().zip(pivot_row).skip(col) {
                    *x -= f * p;
                }
            }
        }
    }
    [a[0][3] / a[0][0], a[1][3] / a[1][1], a[2][3] / a[2][2]]
}

/// Scores every rate in `alphas` on the same `n_mc` draws of
/// (task, `s`-shot gradient).
pub fn sampled_mse<F: ExactGradientFamily, R: Rng + ?Sized>(
    family: &F,
    theta: &[f64],
    beta: f64,
    s: usize,
    alphas: &[f64],
    n_mc: usize,
    rng: &mut R,
) -> Result<MseCurve> {
    if s == 0 || n_mc < 2 || alphas.is_empty() {
        return Err(Error::Config(format!(
            "sampled MSE needs s >= 1, n_mc >= 2 and a nonempty grid, got s = {s}, n_mc = {n_mc}"
        )));
    }
    // Per draw: |g_s|^2, g_s.g and |g|^2.
    let mut terms = Vec::with_capacity(n_mc);
    for draw in 0..n_mc {
        let task = family.sample_task(rng)?;
        let g = family.population_gradient(&task, theta);
        let gs =
            family
                .mean_gradient(&task, theta, s, rng)
                .map_err(|e| Error::NumericalFailure {
                    what: "sampled gradient",
                    task: draw,
                    shots: s,
                    source: Box::new(e),
                })?;
        let dot = |u: &[f64], v: &[f64]| u.iter().zip(v).map(|(a, b)| a * b).sum::<f64>();
        terms.push((dot(&gs, &gs), dot(&gs, &g), dot(&g, &g)));
    }
    let mut mse = Vec::with_capacity(alphas.len());
    let mut se = Vec::with_capacity(alphas.len());
    let mut values = vec![0.0; n_mc];
    for &a in alphas {
        for (v, &(ss, sg, gg)) in values.iter_mut().zip(&terms) {
            *v = a * a * ss - 2.0 * a * beta * sg + beta * beta * gg;
        }
        let (m, e) = mean_and_se(&values);
        mse.push(m);
        se.push(e);
    }
    Ok(MseCurve {
        alphas: alphas.to_vec(),
        mse,
        se,
        shots: s,
        n_mc,
    })
}

/// The grid rate minimizing the sampled MSE.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleAlpha {
    pub alpha: f64,
    pub curve: MseCurve,
}

/// Grid-search minimizer of the sampled MSE. Fails if the grid is too coarse,
/// too few draws are requested, or the minimizer sits on a grid endpoint.
pub fn oracle_alpha<F: ExactGradientFamily, R: Rng + ?Sized>(
    family: &F,
    theta: &[f64],
    beta: f64,
    s: usize,
    alphas: &[f64],
    n_mc: usize,
    rng: &mut R,
) -> Result<OracleAlpha> {
    if alphas.len() < MIN_GRID_POINTS {
        return Err(Error::Grid(format!(
            "{} grid points, at least {MIN_GRID_POINTS} required",
            alphas.len()
        )));
    }
    if !alphas.windows(2).all(|w| w[0] < w[1]) || alphas[0] < 0.0 {
        return Err(Error::Grid(
            "grid must be nonnegative and increasing".into(),
        ));
    }
    if n_mc < MIN_MC_DRAWS {
        return Err(Error::Grid(format!(
            "{n_mc} Monte-Carlo draws, at least {MIN_MC_DRAWS} required"
        )));
    }
    let curve = sampled_mse(family, theta, beta, s, alphas, n_mc, rng)?;
    let i = curve.argmin();
    if i == 0 || i + 1 == alphas.len() {
        return Err(Error::Grid(format!(
            "minimizer at grid endpoint {} for s = {s}; widen the grid",
            alphas[i]
        )));
    }
    Ok(OracleAlpha {
        alpha: alphas[i],
        curve,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalingRow {
    pub s: usize,
    pub alpha_closed: f64,
    pub alpha_oracle: f64,
    /// `|oracle - closed| / closed`.
    pub gap: f64,
}

/// Closed-form and brute-force finite-shot rates side by side.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalingRuleEstimate {
    pub c1: f64,
    pub c2: f64,
    pub beta_star: f64,
    pub n_mc: usize,
    pub rows: Vec<ScalingRow>,
}

impl ScalingRuleEstimate {
    pub fn alpha_closed(&self, s: usize) -> f64 {
        closed_form_alpha(self.c1, self.c2, self.beta_star, s)
    }

    pub fn max_gap(&self) -> f64 {
        self.rows.iter().map(|r| r.gap).fold(0.0, f64::max)
    }

    /// Comma-separated table with a header row.
    pub fn to_table(&self) -> String {
        let mut out = String::from("s,c1,c2,beta_star,alpha_closed,alpha_oracle,rel_gap\n");
        for r in &self.rows {
            writeln!(
                out,
                "{},{},{},{},{},{},{}",
                r.s, self.c1, self.c2, self.beta_star, r.alpha_closed, r.alpha_oracle, r.gap
            )
            .expect("writing to a string");
        }
        out
    }
}

/// Runs the oracle for each `s` on the linear family, each with its own
/// generator derived from `(seed, s)`, and compares with the closed form
/// under the family's exact constants.
pub fn scaling_rule_report(
    family: &LinearRegression,
    theta: &[f64],
    beta_star: f64,
    s_values: &[usize],
    grid_points: usize,
    n_mc: usize,
    seed: u64,
) -> Result<ScalingRuleEstimate> {
    let (c1, c2) = family.constants(theta)?;
    let grid = alpha_grid(beta_star, grid_points);
    let mut rows = Vec::with_capacity(s_values.len());
    for &s in s_values {
        let mut rng = rng_for(&[seed, s as u64]);
        let oracle = oracle_alpha(family, theta, beta_star, s, &grid, n_mc, &mut rng)?;
        let closed = closed_form_alpha(c1, c2, beta_star, s);
        rows.push(ScalingRow {
            s,
            alpha_closed: closed,
            alpha_oracle: oracle.alpha,
            gap: (oracle.alpha - closed).abs() / closed,
        });
    }
    Ok(ScalingRuleEstimate {
        c1,
        c2,
        beta_star,
        n_mc,
        rows,
    })
}
