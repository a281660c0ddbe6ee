//! Adam with global-norm gradient clipping.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub rate: f64,
    pub betas: (f64, f64),
    pub eps: f64,
    /// Gradients with a larger global norm are rescaled to this norm
    /// before the moment update.
    pub clip: Option<f64>,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            rate: 1e-3,
            betas: (0.9, 0.999),
            eps: 1e-8,
            clip: None,
        }
    }
}

/// Moment estimates and step counter.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub step: u64,
}

/// Rescales `grads` in place so their global norm is at most `clip`.
/// Returns the norm before clipping.
pub fn clip_global_norm(grads: &mut [f64], clip: f64) -> f64 {
    let norm = grads.iter().map(|g| g * g).sum::<f64>().sqrt();
    if norm > clip {
        let factor = clip / norm;
        grads.iter_mut().for_each(|g| *g *= factor);
    }
    norm
}

impl AdamState {
    pub fn new(n: usize) -> Self {
        Self {
            m: vec![0.0; n],
            v: vec![0.0; n],
            step: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.m.len()
    }

    pub fn is_empty(&self) -> bool {
        self.m.is_empty()
    }

    /// One bias-corrected Adam step on `params`.
    pub fn update(&mut self, params: &mut [f64], grads: &[f64], config: &AdamConfig) -> Result<()> {
        if params.len() != self.len() || grads.len() != self.len() {
            return Err(Error::Dimension(format!(
                "Adam state has {} entries, got {} parameters and {} gradients",
                self.len(),
                params.len(),
                grads.len()
            )));
        }
        let mut g = grads.to_vec();
        if let Some(clip) = config.clip {
            clip_global_norm(&mut g, clip);
        }
        self.step += 1;
        let (b1, b2) = config.betas;
        let c1 = 1.0 - b1.powi(self.step as i32);
        let c2 = 1.0 - b2.powi(self.step as i32);
        for i in 0..params.len() {
            self.m[i] = b1 * self.m[i] + (1.0 - b1) * g[i];
            self.v[i] = b2 * self.v[i] + (1.0 - b2) * g[i] * g[i];
            let m_hat = self.m[i] / c1;
            let v_hat = self.v[i] / c2;
            params[i] -= config.rate * m_hat / (v_hat.sqrt() + config.eps);
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradient_is_a_fixed_point() {
        let mut state = AdamState::new(3);
        let mut p = vec![1.0, -2.0, 0.5];
        state
            .update(&mut p, &[0.0; 3], &AdamConfig::default())
            .unwrap();
        assert_eq!(p, vec![1.0, -2.0, 0.5]);
    }

    #[test]
    fn first_step_has_magnitude_rate() {
        let config = AdamConfig {
            rate: 0.01,
            eps: 0.0,
            ..Default::default()
        };
        for g in [3.0, -0.002, 150.0] {
            let mut state = AdamState::new(1);
            let mut p = vec![0.0];
            state.update(&mut p, &[g], &config).unwrap();
            assert!(
                (p[0] + 0.01 * f64::signum(g)).abs() < 1e-15,
                "g={g}: {}",
                p[0]
            );
        }
    }

    #[test]
    fn clipping_caps_the_norm() {
        let mut g = vec![60.0, 80.0];
        let before = clip_global_norm(&mut g, 10.0);
        assert_eq!(before, 100.0);
        let after = g.iter().map(|x| x * x).sum::<f64>().sqrt();
        assert!((after - 10.0).abs() < 1e-12);
        assert!((g[0] / g[1] - 0.75).abs() < 1e-15);
    }

    #[test]
    fn small_gradients_pass_unclipped() {
        let mut g = vec![0.3, 0.4];
        clip_global_norm(&mut g, 10.0);
        assert_eq!(g, vec![0.3, 0.4]);
    }

    #[test]
    fn length_mismatch_is_an_error() {
        let mut state = AdamState::new(2);
        assert!(state
            .update(&mut [0.0], &[1.0, 2.0], &AdamConfig::default())
            .is_err());
    }
}
