use rand::Rng;

use crate::autodiff::{Graph, Tensor, Var};
use crate::error::{Error, Result};

/// One dense layer: `weight` is `fan_in x fan_out`, `bias` is `1 x fan_out`.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub weight: Tensor,
    pub bias: Tensor,
}

impl Layer {
    pub fn fan_in(&self) -> usize {
        self.weight.rows()
    }

    pub fn fan_out(&self) -> usize {
        self.weight.cols()
    }
}

/// Structured parameters of a dense network.
///
/// The flat view lists each layer's weight (row-major) followed by its bias,
/// layer by layer.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamVector {
    layers: Vec<Layer>,
}

impl ParamVector {
    pub fn new(layers: Vec<Layer>) -> Result<Self> {
        for (i, layer) in layers.iter().enumerate() {
            if layer.bias.shape() != (1, layer.fan_out()) {
                return Err(Error::Dimension(format!(
                    "layer {i}: bias {:?} does not match weight {:?}",
                    layer.bias.shape(),
                    layer.weight.shape()
                )));
            }
            if i > 0 && layers[i - 1].fan_out() != layer.fan_in() {
                return Err(Error::Dimension(format!(
                    "layer {i} takes {} inputs but layer {} emits {}",
                    layer.fan_in(),
                    i - 1,
                    layers[i - 1].fan_out()
                )));
            }
        }
        Ok(Self { layers })
    }

    pub fn zeros(sizes: &[usize]) -> Self {
        let layers = sizes
            .windows(2)
            .map(|w| Layer {
                weight: Tensor::zeros(w[0], w[1]),
                bias: Tensor::zeros(1, w[1]),
            })
            .collect();
        Self { layers }
    }

    /// Glorot-uniform weights, zero biases.
    pub fn glorot<R: Rng + ?Sized>(sizes: &[usize], rng: &mut R) -> Self {
        let layers = sizes
            .windows(2)
            .map(|w| {
                let limit = (6.0 / (w[0] + w[1]) as f64).sqrt();
                let data = (0..w[0] * w[1])
                    .map(|_| rng.random_range(-limit..=limit))
                    .collect();
                Layer {
                    weight: Tensor::from_vec(w[0], w[1], data),
                    bias: Tensor::zeros(1, w[1]),
                }
            })
            .collect();
        Self { layers }
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    /// Layer widths, input first.
    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes: Vec<usize> = self.layers.iter().map(Layer::fan_in).collect();
        if let Some(last) = self.layers.last() {
            sizes.push(last.fan_out());
        }
        sizes
    }

    pub fn len(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weight.len() + l.bias.len())
            .sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn to_flat(&self) -> Vec<f64> {
        let mut flat = Vec::with_capacity(self.len());
        for l in &self.layers {
            flat.extend_from_slice(l.weight.data());
            flat.extend_from_slice(l.bias.data());
        }
        flat
    }

    /// Rebuilds parameters with this layout from a flat slice.
    pub fn with_flat(&self, flat: &[f64]) -> Result<Self> {
        if flat.len() != self.len() {
            return Err(Error::Dimension(format!(
                "flat vector has {} entries, layout needs {}",
                flat.len(),
                self.len()
            )));
        }
        let mut offset = 0;
        let mut take = |rows: usize, cols: usize| {
            let t = Tensor::from_vec(rows, cols, flat[offset..offset + rows * cols].to_vec());
            offset += rows * cols;
            t
        };
        let layers = self
            .layers
            .iter()
            .map(|l| Layer {
                weight: take(l.fan_in(), l.fan_out()),
                bias: take(1, l.fan_out()),
            })
            .collect();
        Ok(Self { layers })
    }

    pub fn from_flat(sizes: &[usize], flat: &[f64]) -> Result<Self> {
        Self::zeros(sizes).with_flat(flat)
    }

    /// Registers every tensor as a leaf on `graph`.
    pub fn register(&self, graph: &mut Graph) -> ParamVars {
        ParamVars {
            vars: self
                .layers
                .iter()
                .flat_map(|l| [l.weight.clone(), l.bias.clone()])
                .map(|t| graph.leaf(t))
                .collect(),
        }
    }
}

/// Graph handles for a [`ParamVector`]: `[w0, b0, w1, b1, ...]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamVars {
    vars: Vec<Var>,
}

impl ParamVars {
    pub fn from_vars(vars: Vec<Var>) -> Self {
        assert!(
            vars.len().is_multiple_of(2),
            "params come in weight/bias pairs"
        );
        Self { vars }
    }

    pub fn vars(&self) -> &[Var] {
        &self.vars
    }

    pub fn n_layers(&self) -> usize {
        self.vars.len() / 2
    }

    pub fn layer(&self, i: usize) -> (Var, Var) {
        (self.vars[2 * i], self.vars[2 * i + 1])
    }

    /// Reads the current values back into structured form.
    pub fn values(&self, graph: &Graph) -> ParamVector {
        let layers = self
            .vars
            .chunks(2)
            .map(|wb| Layer {
                weight: graph.value(wb[0]).clone(),
                bias: graph.value(wb[1]).clone(),
            })
            .collect();
        ParamVector { layers }
    }

    /// Concatenates per-tensor gradient nodes into a flat vector in the
    /// [`ParamVector`] flat order.
    pub fn flatten_values(graph: &Graph, vars: &[Var]) -> Vec<f64> {
        let mut out = Vec::new();
        for &v in vars {
            out.extend_from_slice(graph.value(v).data());
        }
        out
    }
}
