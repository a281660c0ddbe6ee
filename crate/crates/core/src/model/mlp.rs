use serde::{Deserialize, Serialize};

use super::params::{ParamVars, ParamVector};
use crate::autodiff::{Graph, Tensor, Var};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Activation {
    Tanh,
    Relu,
}

/// Fully connected network shape. Hidden layers use `activation`; the output
/// layer is linear.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Mlp {
    pub sizes: Vec<usize>,
    pub activation: Activation,
}

impl Mlp {
    pub fn new(sizes: Vec<usize>, activation: Activation) -> Result<Self> {
        if sizes.len() < 2 || sizes.contains(&0) {
            return Err(Error::Config(format!(
                "network needs at least two nonzero layer widths, got {sizes:?}"
            )));
        }
        Ok(Self { sizes, activation })
    }

    /// 1-40-40-1 tanh network for sinusoid regression.
    pub fn regression_default() -> Self {
        Self {
            sizes: vec![1, 40, 40, 1],
            activation: Activation::Tanh,
        }
    }

    /// `d_in`-64-64-`n_classes` relu network.
    pub fn classification_default(d_in: usize, n_classes: usize) -> Self {
        Self {
            sizes: vec![d_in, 64, 64, n_classes],
            activation: Activation::Relu,
        }
    }

    pub fn input_dim(&self) -> usize {
        self.sizes[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.sizes.last().expect("validated nonempty")
    }

    pub fn param_count(&self) -> usize {
        self.sizes.windows(2).map(|w| (w[0] + 1) * w[1]).sum()
    }

    fn check_params(&self, params: &ParamVector) -> Result<()> {
        if params.sizes() != self.sizes {
            return Err(Error::Dimension(format!(
                "parameters have shape {:?}, network expects {:?}",
                params.sizes(),
                self.sizes
            )));
        }
        Ok(())
    }

    /// Records the forward pass on `graph`.
    pub fn forward_graph(&self, graph: &mut Graph, params: &ParamVars, inputs: Var) -> Result<Var> {
        let width = graph.value(inputs).cols();
        if width != self.input_dim() {
            return Err(Error::Dimension(format!(
                "input width {width}, network expects {}",
                self.input_dim()
            )));
        }
        let mut h = inputs;
        let n_layers = params.n_layers();
        for i in 0..n_layers {
            let (w, b) = params.layer(i);
            let z = graph.matmul(h, w)?;
            h = graph.add_row(z, b)?;
            if i + 1 < n_layers {
                h = match self.activation {
                    Activation::Tanh => graph.tanh(h)?,
                    Activation::Relu => graph.relu(h)?,
                };
            }
        }
        Ok(h)
    }

    /// `n x d_out` predictions. Pure; an `n = 0` input yields an empty matrix.
    pub fn forward(&self, params: &ParamVector, inputs: &Tensor) -> Result<Tensor> {
        self.check_params(params)?;
        if inputs.cols() != self.input_dim() {
            return Err(Error::Dimension(format!(
                "input width {}, network expects {}",
                inputs.cols(),
                self.input_dim()
            )));
        }
        let n_layers = params.layers().len();
        let mut h = inputs.clone();
        for (i, layer) in params.layers().iter().enumerate() {
            h = h.matmul(&layer.weight).add_row(&layer.bias);
            if i + 1 < n_layers {
                h = match self.activation {
                    Activation::Tanh => h.map(f64::tanh),
                    Activation::Relu => h.map(|x| x.max(0.0)),
                };
            }
        }
        Ok(h)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::params::Layer;

    #[test]
    fn single_affine_layer() {
        let mlp = Mlp::new(vec![1, 1], Activation::Tanh).unwrap();
        let params = ParamVector::new(vec![Layer {
            weight: Tensor::scalar(2.0),
            bias: Tensor::scalar(1.0),
        }])
        .unwrap();
        let y = mlp.forward(&params, &Tensor::scalar(3.0)).unwrap();
        assert_eq!(y.data(), &[7.0]);
    }

    #[test]
    fn zero_network_predicts_zero() {
        let mlp = Mlp::regression_default();
        let params = ParamVector::zeros(&mlp.sizes);
        let x = Tensor::column(vec![-2.0, 0.3, 4.0]);
        let y = mlp.forward(&params, &x).unwrap();
        assert_eq!(y.data(), &[0.0, 0.0, 0.0]);
    }

    #[test]
    fn empty_input_gives_empty_output() {
        let mlp = Mlp::regression_default();
        let params = ParamVector::zeros(&mlp.sizes);
        let y = mlp.forward(&params, &Tensor::zeros(0, 1)).unwrap();
        assert_eq!(y.shape(), (0, 1));
    }

    #[test]
    fn width_mismatch_is_an_error() {
        let mlp = Mlp::regression_default();
        let params = ParamVector::zeros(&mlp.sizes);
        assert!(mlp.forward(&params, &Tensor::zeros(2, 3)).is_err());
        let wrong = ParamVector::zeros(&[1, 3, 1]);
        assert!(mlp.forward(&wrong, &Tensor::zeros(2, 1)).is_err());
    }

    #[test]
    fn graph_and_direct_forward_agree_bitwise() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for mlp in [Mlp::regression_default(), Mlp::classification_default(2, 4)] {
            let params = ParamVector::glorot(&mlp.sizes, &mut rng);
            let x = Tensor::from_vec(
                5,
                mlp.input_dim(),
                (0..5 * mlp.input_dim())
                    .map(|i| (i as f64 * 0.37).sin())
                    .collect(),
            );
            let mut g = Graph::new();
            let vars = params.register(&mut g);
            let xv = g.leaf(x.clone());
            let out = mlp.forward_graph(&mut g, &vars, xv).unwrap();
            assert_eq!(g.value(out), &mlp.forward(&params, &x).unwrap());
        }
    }
}
