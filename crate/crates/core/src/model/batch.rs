use crate::autodiff::Tensor;
use crate::error::{Error, Result};

/// Supervision attached to a batch.
#[derive(Debug, Clone, PartialEq)]
pub enum Targets {
    /// `n x d_out` regression targets.
    Values(Tensor),
    /// One class index per row.
    Classes(Vec<usize>),
}

impl Targets {
    pub fn n(&self) -> usize {
        match self {
            Targets::Values(t) => t.rows(),
            Targets::Classes(c) => c.len(),
        }
    }
}

/// `n` labelled examples. `n = 0` is legal and means "no shots".
#[derive(Debug, Clone, PartialEq)]
pub struct Batch {
    inputs: Tensor,
    targets: Targets,
}

impl Batch {
    pub fn new(inputs: Tensor, targets: Targets) -> Result<Self> {
        if inputs.rows() != targets.n() {
            return Err(Error::Dimension(format!(
                "batch has {} input rows but {} targets",
                inputs.rows(),
                targets.n()
            )));
        }
        if let Targets::Values(t) = &targets {
            if t.rows() == 0 && t.cols() == 0 && inputs.rows() > 0 {
                return Err(Error::Dimension(
                    "regression targets have no columns".into(),
                ));
            }
        }
        Ok(Self { inputs, targets })
    }

    /// A zero-row batch with the same widths as `self`.
    pub fn empty_like(&self) -> Batch {
        self.select(&[])
    }

    pub fn n(&self) -> usize {
        self.inputs.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.n() == 0
    }

    pub fn inputs(&self) -> &Tensor {
        &self.inputs
    }

    pub fn targets(&self) -> &Targets {
        &self.targets
    }

    pub fn input_dim(&self) -> usize {
        self.inputs.cols()
    }

    /// Rows at `indices`, in that order (repeats allowed).
    pub fn select(&self, indices: &[usize]) -> Batch {
        let d = self.inputs.cols();
        let mut inputs = Vec::with_capacity(indices.len() * d);
        for &i in indices {
            inputs.extend_from_slice(self.inputs.row_slice(i));
        }
        let inputs = Tensor::from_vec(indices.len(), d, inputs);
        let targets = match &self.targets {
            Targets::Values(t) => {
                let k = t.cols();
                let mut v = Vec::with_capacity(indices.len() * k);
                for &i in indices {
                    v.extend_from_slice(t.row_slice(i));
                }
                Targets::Values(Tensor::from_vec(indices.len(), k, v))
            }
            Targets::Classes(c) => Targets::Classes(indices.iter().map(|&i| c[i]).collect()),
        };
        Batch { inputs, targets }
    }

    /// Appends `other`'s rows. Widths and target kinds must agree.
    pub fn extend(&mut self, other: &Batch) -> Result<()> {
        if other.is_empty() {
            return Ok(());
        }
        if self.inputs.cols() != other.inputs.cols() {
            return Err(Error::Dimension(format!(
                "cannot append width {} rows to width {} batch",
                other.inputs.cols(),
                self.inputs.cols()
            )));
        }
        let compatible = match (&self.targets, &other.targets) {
            (Targets::Values(a), Targets::Values(b)) => a.cols() == b.cols() || a.rows() == 0,
            (Targets::Classes(_), Targets::Classes(_)) => true,
            _ => false,
        };
        if !compatible {
            return Err(Error::Dimension("mismatched target kinds".into()));
        }
        let n = self.n() + other.n();
        let mut inputs = std::mem::replace(&mut self.inputs, Tensor::zeros(0, 0)).into_vec();
        inputs.extend_from_slice(other.inputs.data());
        self.inputs = Tensor::from_vec(n, other.inputs.cols(), inputs);
        match (&mut self.targets, &other.targets) {
            (Targets::Values(a), Targets::Values(b)) => {
                let cols = b.cols();
                let mut v = std::mem::replace(a, Tensor::zeros(0, 0)).into_vec();
                v.extend_from_slice(b.data());
                *a = Tensor::from_vec(n, cols, v);
            }
            (Targets::Classes(a), Targets::Classes(b)) => a.extend_from_slice(b),
            _ => unreachable!("checked above"),
        }
        Ok(())
    }
}
