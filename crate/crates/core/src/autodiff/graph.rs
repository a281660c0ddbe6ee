//! Tape-based reverse mode over matrix expressions.
//!
//! Values are computed eagerly as operations are recorded. [`Graph::grad`]
//! walks the tape backwards and records the adjoint computation as new
//! nodes on the same tape, so a gradient is itself an ordinary node that can
//! be differentiated again. This is what lets an outer objective see through
//! an inner gradient step.

use super::tensor::Tensor;
use super::AutodiffError;

/// Handle to a node on a [`Graph`]. Handles are only meaningful for the
/// graph that issued them.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Clone, Copy, Debug)]
enum Op {
    Leaf,
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    Neg(Var),
    Scale(Var, f64),
    AddConst(Var, f64),
    /// `1 x 1` times any tensor.
    ScalarMul(Var, Var),
    MatMul(Var, Var),
    Transpose(Var),
    AddRow(Var, Var),
    SumRows(Var),
    SumCols(Var),
    BroadcastRows(Var, usize),
    BroadcastCols(Var, usize),
    Sum(Var),
    Fill(Var, usize, usize),
    Tanh(Var),
    Relu(Var),
    /// Heaviside step of the input; has no gradient.
    Step(Var),
    Sigmoid(Var),
    Softplus(Var),
    Exp(Var),
    Log(Var),
    Recip(Var),
    LogSumExpRows(Var),
}

impl Op {
    fn name(&self) -> &'static str {
        match self {
            Op::Leaf => "leaf",
            Op::Add(..) => "add",
            Op::Sub(..) => "sub",
            Op::Mul(..) => "mul",
            Op::Neg(..) => "neg",
            Op::Scale(..) => "scale",
            Op::AddConst(..) => "add_const",
            Op::ScalarMul(..) => "scalar_mul",
            Op::MatMul(..) => "matmul",
            Op::Transpose(..) => "transpose",
            Op::AddRow(..) => "add_row",
            Op::SumRows(..) => "sum_rows",
            Op::SumCols(..) => "sum_cols",
            Op::BroadcastRows(..) => "broadcast_rows",
            Op::BroadcastCols(..) => "broadcast_cols",
            Op::Sum(..) => "sum",
            Op::Fill(..) => "fill",
            Op::Tanh(..) => "tanh",
            Op::Relu(..) => "relu",
            Op::Step(..) => "step",
            Op::Sigmoid(..) => "sigmoid",
            Op::Softplus(..) => "softplus",
            Op::Exp(..) => "exp",
            Op::Log(..) => "log",
            Op::Recip(..) => "recip",
            Op::LogSumExpRows(..) => "log_sum_exp_rows",
        }
    }

    fn parents(&self) -> [Option<Var>; 2] {
        use Op::*;
        match *self {
            Leaf => [None, None],
            Add(a, b) | Sub(a, b) | Mul(a, b) | ScalarMul(a, b) | MatMul(a, b) | AddRow(a, b) => {
                [Some(a), Some(b)]
            }
            Neg(a)
            | Scale(a, _)
            | AddConst(a, _)
            | Transpose(a)
            | SumRows(a)
            | SumCols(a)
            | BroadcastRows(a, _)
            | BroadcastCols(a, _)
            | Sum(a)
            | Fill(a, _, _)
            | Tanh(a)
            | Relu(a)
            | Step(a)
            | Sigmoid(a)
            | Softplus(a)
            | Exp(a)
            | Log(a)
            | Recip(a)
            | LogSumExpRows(a) => [Some(a), None],
        }
    }
}

#[derive(Clone, Debug)]
struct Node {
    op: Op,
    value: Tensor,
}

/// An expression tape. Single-threaded; build one per computation.
#[derive(Clone, Debug, Default)]
pub struct Graph {
    nodes: Vec<Node>,
}

pub(crate) fn softplus(x: f64) -> f64 {
    // log(1 + e^x) without overflow for large x
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

impl Graph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, v: Var) -> &Tensor {
        &self.nodes[v.0].value
    }

    /// Scalar value of a `1 x 1` node.
    pub fn scalar(&self, v: Var) -> f64 {
        self.nodes[v.0].value.item()
    }

    pub fn is_leaf(&self, v: Var) -> bool {
        matches!(self.nodes[v.0].op, Op::Leaf)
    }

    /// Registers an input, parameter or constant.
    pub fn leaf(&mut self, value: Tensor) -> Var {
        self.nodes.push(Node {
            op: Op::Leaf,
            value,
        });
        Var(self.nodes.len() - 1)
    }

    pub fn scalar_leaf(&mut self, value: f64) -> Var {
        self.leaf(Tensor::scalar(value))
    }

    /// A new leaf carrying `v`'s current value; gradients stop here.
    pub fn detach(&mut self, v: Var) -> Var {
        let value = self.nodes[v.0].value.clone();
        self.leaf(value)
    }

    fn check(&self, v: Var) -> Result<(), AutodiffError> {
        if v.0 >= self.nodes.len() {
            return Err(AutodiffError::UnknownVar {
                index: v.0,
                len: self.nodes.len(),
            });
        }
        Ok(())
    }

    fn shape_of(&self, v: Var) -> (usize, usize) {
        self.nodes[v.0].value.shape()
    }

    fn validate(&self, op: &Op) -> Result<(), AutodiffError> {
        for p in op.parents().into_iter().flatten() {
            self.check(p)?;
        }
        let mismatch = |lhs, rhs| AutodiffError::ShapeMismatch {
            op: op.name(),
            lhs,
            rhs,
        };
        match *op {
            Op::Add(a, b) | Op::Sub(a, b) | Op::Mul(a, b) => {
                let (sa, sb) = (self.shape_of(a), self.shape_of(b));
                if sa != sb {
                    return Err(mismatch(sa, sb));
                }
            }
            Op::ScalarMul(s, t) => {
                let ss = self.shape_of(s);
                if ss != (1, 1) {
                    return Err(mismatch(ss, self.shape_of(t)));
                }
            }
            Op::MatMul(a, b) => {
                let (sa, sb) = (self.shape_of(a), self.shape_of(b));
                if sa.1 != sb.0 {
                    return Err(mismatch(sa, sb));
                }
            }
            Op::AddRow(m, r) => {
                let (sm, sr) = (self.shape_of(m), self.shape_of(r));
                if sr.0 != 1 || sr.1 != sm.1 {
                    return Err(mismatch(sm, sr));
                }
            }
            Op::BroadcastRows(a, n) => {
                let sa = self.shape_of(a);
                if sa.0 != 1 {
                    return Err(mismatch(sa, (n, sa.1)));
                }
            }
            Op::BroadcastCols(a, c) => {
                let sa = self.shape_of(a);
                if sa.1 != 1 {
                    return Err(mismatch(sa, (sa.0, c)));
                }
            }
            Op::Fill(a, r, c) => {
                let sa = self.shape_of(a);
                if sa != (1, 1) {
                    return Err(mismatch(sa, (r, c)));
                }
            }
            _ => {}
        }
        Ok(())
    }

    fn compute(&self, op: &Op) -> Tensor {
        let val = |v: Var| &self.nodes[v.0].value;
        match *op {
            Op::Leaf => unreachable!("leaves are not computed"),
            Op::Add(a, b) => val(a).zip_map(val(b), |x, y| x + y),
            Op::Sub(a, b) => val(a).zip_map(val(b), |x, y| x - y),
            Op::Mul(a, b) => val(a).zip_map(val(b), |x, y| x * y),
            Op::Neg(a) => val(a).map(|x| -x),
            Op::Scale(a, c) => val(a).map(|x| x * c),
            Op::AddConst(a, c) => val(a).map(|x| x + c),
            Op::ScalarMul(s, t) => {
                let s = val(s).item();
                val(t).map(|x| s * x)
            }
            Op::MatMul(a, b) => val(a).matmul(val(b)),
            Op::Transpose(a) => val(a).transpose(),
            Op::AddRow(m, r) => val(m).add_row(val(r)),
            Op::SumRows(a) => val(a).sum_rows(),
            Op::SumCols(a) => val(a).sum_cols(),
            Op::BroadcastRows(a, n) => val(a).broadcast_rows(n),
            Op::BroadcastCols(a, c) => val(a).broadcast_cols(c),
            Op::Sum(a) => Tensor::scalar(val(a).sum()),
            Op::Fill(a, r, c) => Tensor::filled(r, c, val(a).item()),
            Op::Tanh(a) => val(a).map(f64::tanh),
            Op::Relu(a) => val(a).map(|x| x.max(0.0)),
            Op::Step(a) => val(a).map(|x| if x > 0.0 { 1.0 } else { 0.0 }),
            Op::Sigmoid(a) => val(a).map(sigmoid),
            Op::Softplus(a) => val(a).map(softplus),
            Op::Exp(a) => val(a).map(f64::exp),
            Op::Log(a) => val(a).map(f64::ln),
            Op::Recip(a) => val(a).map(|x| 1.0 / x),
            Op::LogSumExpRows(a) => val(a).log_sum_exp_rows(),
        }
    }

    fn push(&mut self, op: Op) -> Result<Var, AutodiffError> {
        self.validate(&op)?;
        let value = self.compute(&op);
        let index = self.nodes.len();
        if !value.is_finite() {
            return Err(AutodiffError::NonFinite {
                op: op.name(),
                node: index,
            });
        }
        self.nodes.push(Node { op, value });
        Ok(Var(index))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var, AutodiffError> {
        self.push(Op::Add(a, b))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var, AutodiffError> {
        self.push(Op::Sub(a, b))
    }

    /// Element-wise product.
    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var, AutodiffError> {
        self.push(Op::Mul(a, b))
    }

    pub fn neg(&mut self, a: Var) -> Result<Var, AutodiffError> {
        self.push(Op::Neg(a))
    }

    /// Multiplies by a constant that is not part of the graph.
    pub fn scale(&mut self, a: Var, c: f64) -> Result<Var, AutodiffError> {
        self.push(Op::Scale(a, c))
    }

    pub fn add_const(&mut self, a: Var, c: f64) -> Result<Var, AutodiffError> {
        self.push(Op::AddConst(a, c))
    }

    /// `s * t` where `s` is `1 x 1`.
    pub fn scalar_mul(&mut self, s: Var, t: Var) -> Result<Var, AutodiffError> {
        self.push(Op::ScalarMul(s, t))
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var, AutodiffError> {
        self.push(Op::MatMul(a, b))
    }

    pub fn transpose(&mut self, a: Var) -> Result<Var, AutodiffError> {
        self.push(Op::Transpose(a))
    }

    /// Adds a `1 x cols` row to each row of `m`.
    pub fn add_row(&mut self, m: Var, row: Var) -> Result<Var, AutodiffError> {
        self.push(Op::AddRow(m, row))
    }

    pub fn sum_rows(&mut self, a: Var) -> Result<Var, AutodiffError> {
        self.push(Op::SumRows(a))
    }

    pub fn sum_cols(&mut self, a: Var) -> Result<Var, AutodiffError> {
        self.push(Op::SumCols(a))
    }

    pub fn broadcast_rows(&mut self, a: Var, rows: usize) -> Result<Var, AutodiffError> {
        self.push(Op::BroadcastRows(a, rows))
    }

    pub fn broadcast_cols(&mut self, a: Var, cols: usize) -> Result<Var, AutodiffError> {
        self.push(Op::BroadcastCols(a, cols))
    }

    /// Sum of all entries, as a `1 x 1` node.
    pub fn sum(&mut self, a: Var) -> Result<Var, AutodiffError> {
        self.push(Op::Sum(a))
    }

    /// Mean of all entries. Errors on an empty tensor.
    pub fn mean(&mut self, a: Var) -> Result<Var, AutodiffError> {
        let n = self.nodes[a.0].value.len();
        if n == 0 {
            return Err(AutodiffError::EmptyReduction { op: "mean" });
        }
        let s = self.sum(a)?;
        self.scale(s, 1.0 / n as f64)
    }

    /// Broadcasts a `1 x 1` node to `rows x cols`.
    pub fn fill(&mut self, a: Var, rows: usize, cols: usize) -> Result<Var, AutodiffError> {
        self.push(Op::Fill(a, rows, cols))
    }

    pub fn tanh(&mut self, a: Var) -> Result<Var, AutodiffError> {
        self.push(Op::Tanh(a))
    }

    pub fn relu(&mut self, a: Var) -> Result<Var, AutodiffError> {
        self.push(Op::Relu(a))
    }

    pub fn step(&mut self, a: Var) -> Result<Var, AutodiffError> {
        self.push(Op::Step(a))
    }

    pub fn sigmoid(&mut self, a: Var) -> Result<Var, AutodiffError> {
        self.push(Op::Sigmoid(a))
    }

    pub fn softplus(&mut self, a: Var) -> Result<Var, AutodiffError> {
        self.push(Op::Softplus(a))
    }

    pub fn exp(&mut self, a: Var) -> Result<Var, AutodiffError> {
        self.push(Op::Exp(a))
    }

    pub fn ln(&mut self, a: Var) -> Result<Var, AutodiffError> {
        self.push(Op::Log(a))
    }

    pub fn recip(&mut self, a: Var) -> Result<Var, AutodiffError> {
        self.push(Op::Recip(a))
    }

    /// Row-wise `log(sum(exp(.)))`, computed with max subtraction.
    pub fn log_sum_exp_rows(&mut self, a: Var) -> Result<Var, AutodiffError> {
        self.push(Op::LogSumExpRows(a))
    }

    /// Re-runs the forward pass with new leaf values.
    ///
    /// Every recorded operation, including adjoint nodes added by
    /// [`Graph::grad`], is recomputed in tape order. Leaves that are not
    /// rebound (constants, detached values) keep their recorded values.
    pub fn evaluate(&mut self, bindings: &[(Var, Tensor)]) -> Result<(), AutodiffError> {
        for (v, t) in bindings {
            self.check(*v)?;
            let node = &mut self.nodes[v.0];
            if !matches!(node.op, Op::Leaf) {
                return Err(AutodiffError::NotALeaf { index: v.0 });
            }
            if node.value.shape() != t.shape() {
                return Err(AutodiffError::ShapeMismatch {
                    op: "bind",
                    lhs: node.value.shape(),
                    rhs: t.shape(),
                });
            }
            if !t.is_finite() {
                return Err(AutodiffError::NonFinite {
                    op: "bind",
                    node: v.0,
                });
            }
            node.value = t.clone();
        }
        for i in 0..self.nodes.len() {
            let op = self.nodes[i].op;
            if matches!(op, Op::Leaf) {
                continue;
            }
            self.validate(&op)?;
            let value = self.compute(&op);
            if !value.is_finite() {
                return Err(AutodiffError::NonFinite {
                    op: op.name(),
                    node: i,
                });
            }
            self.nodes[i].value = value;
        }
        Ok(())
    }

    /// Reverse-mode gradient of the scalar `output` with respect to each
    /// node in `wrt`.
    ///
    /// The adjoint computation is recorded on this graph, so the returned
    /// nodes can themselves be differentiated. Nodes in `wrt` that `output`
    /// does not depend on get a zero gradient.
    pub fn grad(&mut self, output: Var, wrt: &[Var]) -> Result<Vec<Var>, AutodiffError> {
        self.check(output)?;
        for &w in wrt {
            self.check(w)?;
        }
        let out_shape = self.shape_of(output);
        if out_shape != (1, 1) {
            return Err(AutodiffError::NotScalar { shape: out_shape });
        }

        let end = output.0 + 1;
        // Marks nodes lying downstream of some `wrt` entry; only those carry
        // adjoints worth propagating.
        let mut depends = vec![false; end];
        let mut start = end;
        for &w in wrt {
            if w.0 < end {
                depends[w.0] = true;
                start = start.min(w.0);
            }
        }
        for i in start..end {
            if depends[i] {
                continue;
            }
            depends[i] = self.nodes[i]
                .op
                .parents()
                .into_iter()
                .flatten()
                .any(|p| depends[p.0]);
        }

        let mut adjoint: Vec<Option<Var>> = vec![None; end];
        if depends[output.0] {
            adjoint[output.0] = Some(self.scalar_leaf(1.0));
        }
        for i in (start..end).rev() {
            let Some(g) = adjoint[i] else { continue };
            if !depends[i] {
                continue;
            }
            let op = self.nodes[i].op;
            let contributions = self.vjp(Var(i), op, g, &depends)?;
            for (parent, contrib) in contributions.into_iter().flatten() {
                adjoint[parent.0] = Some(match adjoint[parent.0] {
                    Some(acc) => self.add(acc, contrib)?,
                    None => contrib,
                });
            }
        }

        wrt.iter()
            .map(|&w| match adjoint.get(w.0).copied().flatten() {
                Some(g) => Ok(g),
                None => {
                    let (r, c) = self.shape_of(w);
                    Ok(self.leaf(Tensor::zeros(r, c)))
                }
            })
            .collect()
    }

    /// Vector-Jacobian products of node `y = op(..)` for the parents that
    /// need them.
    fn vjp(
        &mut self,
        y: Var,
        op: Op,
        g: Var,
        depends: &[bool],
    ) -> Result<[Option<(Var, Var)>; 2], AutodiffError> {
        let wants = |v: Var| depends[v.0];
        let mut out = [None, None];
        match op {
            Op::Leaf | Op::Step(_) => {}
            Op::Add(a, b) => {
                if wants(a) {
                    out[0] = Some((a, g));
                }
                if wants(b) {
                    out[1] = Some((b, g));
                }
            }
            Op::Sub(a, b) => {
                if wants(a) {
                    out[0] = Some((a, g));
                }
                if wants(b) {
                    out[1] = Some((b, self.neg(g)?));
                }
            }
            Op::Mul(a, b) => {
                if wants(a) {
                    out[0] = Some((a, self.mul(g, b)?));
                }
                if wants(b) {
                    out[1] = Some((b, self.mul(g, a)?));
                }
            }
            Op::Neg(a) => out[0] = Some((a, self.neg(g)?)),
            Op::Scale(a, c) => out[0] = Some((a, self.scale(g, c)?)),
            Op::AddConst(a, _) => out[0] = Some((a, g)),
            Op::ScalarMul(s, t) => {
                if wants(s) {
                    let prod = self.mul(g, t)?;
                    out[0] = Some((s, self.sum(prod)?));
                }
                if wants(t) {
                    out[1] = Some((t, self.scalar_mul(s, g)?));
                }
            }
            Op::MatMul(a, b) => {
                if wants(a) {
                    let bt = self.transpose(b)?;
                    out[0] = Some((a, self.matmul(g, bt)?));
                }
                if wants(b) {
                    let at = self.transpose(a)?;
                    out[1] = Some((b, self.matmul(at, g)?));
                }
            }
            Op::Transpose(a) => out[0] = Some((a, self.transpose(g)?)),
            Op::AddRow(m, r) => {
                if wants(m) {
                    out[0] = Some((m, g));
                }
                if wants(r) {
                    out[1] = Some((r, self.sum_rows(g)?));
                }
            }
            Op::SumRows(a) => {
                let n = self.shape_of(a).0;
                out[0] = Some((a, self.broadcast_rows(g, n)?));
            }
            Op::SumCols(a) => {
                let c = self.shape_of(a).1;
                out[0] = Some((a, self.broadcast_cols(g, c)?));
            }
            Op::BroadcastRows(a, _) => out[0] = Some((a, self.sum_rows(g)?)),
            Op::BroadcastCols(a, _) => out[0] = Some((a, self.sum_cols(g)?)),
            Op::Sum(a) => {
                let (r, c) = self.shape_of(a);
                out[0] = Some((a, self.fill(g, r, c)?));
            }
            Op::Fill(a, _, _) => out[0] = Some((a, self.sum(g)?)),
            Op::Tanh(a) => {
                // g * (1 - y^2)
                let y2 = self.mul(y, y)?;
                let gy2 = self.mul(g, y2)?;
                out[0] = Some((a, self.sub(g, gy2)?));
            }
            Op::Relu(a) => {
                let mask = self.step(a)?;
                out[0] = Some((a, self.mul(g, mask)?));
            }
            Op::Sigmoid(a) => {
                let ny = self.neg(y)?;
                let one_minus = self.add_const(ny, 1.0)?;
                let dy = self.mul(y, one_minus)?;
                out[0] = Some((a, self.mul(g, dy)?));
            }
            Op::Softplus(a) => {
                let s = self.sigmoid(a)?;
                out[0] = Some((a, self.mul(g, s)?));
            }
            Op::Exp(a) => out[0] = Some((a, self.mul(g, y)?)),
            Op::Log(a) => {
                let r = self.recip(a)?;
                out[0] = Some((a, self.mul(g, r)?));
            }
            Op::Recip(a) => {
                let y2 = self.mul(y, y)?;
                let gy2 = self.mul(g, y2)?;
                out[0] = Some((a, self.neg(gy2)?));
            }
            Op::LogSumExpRows(a) => {
                // g_i * softmax(a)_ij, with softmax written as exp(a - lse)
                let c = self.shape_of(a).1;
                let lse = self.broadcast_cols(y, c)?;
                let shifted = self.sub(a, lse)?;
                let softmax = self.exp(shifted)?;
                let gb = self.broadcast_cols(g, c)?;
                out[0] = Some((a, self.mul(gb, softmax)?));
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * (1.0 + b.abs())
    }

    #[test]
    fn square_value_and_gradient() {
        let mut g = Graph::new();
        let x = g.scalar_leaf(3.0);
        let y = g.mul(x, x).unwrap();
        assert_eq!(g.scalar(y), 9.0);
        let dx = g.grad(y, &[x]).unwrap()[0];
        assert_eq!(g.scalar(dx), 6.0);
    }

    #[test]
    fn tanh_at_origin() {
        let mut g = Graph::new();
        let x = g.scalar_leaf(0.0);
        let y = g.tanh(x).unwrap();
        assert_eq!(g.scalar(y), 0.0);
    }

    #[test]
    fn mean_of_four() {
        let mut g = Graph::new();
        let x = g.leaf(Tensor::row(vec![1.0, 2.0, 3.0, 4.0]));
        let m = g.mean(x).unwrap();
        assert_eq!(g.scalar(m), 2.5);
    }

    #[test]
    fn second_derivative_of_cube() {
        let mut g = Graph::new();
        let x = g.scalar_leaf(2.0);
        let x2 = g.mul(x, x).unwrap();
        let x3 = g.mul(x2, x).unwrap();
        let d1 = g.grad(x3, &[x]).unwrap()[0];
        assert_eq!(g.scalar(d1), 12.0);
        let d2 = g.grad(d1, &[x]).unwrap()[0];
        assert_eq!(g.scalar(d2), 12.0);
    }

    #[test]
    fn sigmoid_slope_at_origin() {
        let mut g = Graph::new();
        let x = g.scalar_leaf(0.0);
        let y = g.sigmoid(x).unwrap();
        let d = g.grad(y, &[x]).unwrap()[0];
        assert_eq!(g.scalar(d), 0.25);
    }

    #[test]
    fn non_finite_names_the_op() {
        let mut g = Graph::new();
        let x = g.scalar_leaf(0.0);
        let err = g.ln(x).unwrap_err();
        match err {
            AutodiffError::NonFinite { op, node } => {
                assert_eq!(op, "log");
                assert_eq!(node, 1);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn shape_mismatch_is_reported() {
        let mut g = Graph::new();
        let a = g.leaf(Tensor::zeros(2, 3));
        let b = g.leaf(Tensor::zeros(2, 3));
        assert!(matches!(
            g.matmul(a, b),
            Err(AutodiffError::ShapeMismatch { op: "matmul", .. })
        ));
        let c = g.leaf(Tensor::zeros(3, 2));
        assert!(g.add(a, c).is_err());
    }

    #[test]
    fn non_scalar_output_rejected() {
        let mut g = Graph::new();
        let a = g.leaf(Tensor::zeros(2, 1));
        assert!(matches!(
            g.grad(a, &[a]),
            Err(AutodiffError::NotScalar { .. })
        ));
    }

    #[test]
    fn unknown_var_rejected() {
        let mut g = Graph::new();
        let a = g.scalar_leaf(1.0);
        let mut other = Graph::new();
        for _ in 0..5 {
            other.scalar_leaf(0.0);
        }
        let foreign = other.scalar_leaf(0.0);
        assert!(matches!(
            g.grad(a, &[foreign]),
            Err(AutodiffError::UnknownVar { .. })
        ));
    }

    #[test]
    fn unreachable_wrt_gets_zero() {
        let mut g = Graph::new();
        let a = g.scalar_leaf(1.0);
        let b = g.scalar_leaf(5.0);
        let y = g.mul(a, a).unwrap();
        let grads = g.grad(y, &[b]).unwrap();
        assert_eq!(g.scalar(grads[0]), 0.0);
    }

    #[test]
    fn matmul_gradient_matches_hand_derivation() {
        // y = sum(A x), dy/dx = A^T 1
        let mut g = Graph::new();
        let a = g.leaf(Tensor::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]));
        let x = g.leaf(Tensor::column(vec![0.5, -1.0]));
        let ax = g.matmul(a, x).unwrap();
        let y = g.sum(ax).unwrap();
        let dx = g.grad(y, &[x]).unwrap()[0];
        assert_eq!(g.value(dx).data(), &[4.0, 6.0]);
    }

    #[test]
    fn replay_recomputes_gradients() {
        let mut g = Graph::new();
        let x = g.scalar_leaf(3.0);
        let x2 = g.mul(x, x).unwrap();
        let d = g.grad(x2, &[x]).unwrap()[0];
        g.evaluate(&[(x, Tensor::scalar(-1.5))]).unwrap();
        assert_eq!(g.scalar(x2), 2.25);
        assert_eq!(g.scalar(d), -3.0);
        assert!(matches!(
            g.evaluate(&[(x2, Tensor::scalar(0.0))]),
            Err(AutodiffError::NotALeaf { .. })
        ));
    }

    #[test]
    fn log_sum_exp_gradient_is_softmax() {
        let mut g = Graph::new();
        let z = g.leaf(Tensor::row(vec![0.0, 0.0]));
        let l = g.log_sum_exp_rows(z).unwrap();
        let s = g.sum(l).unwrap();
        assert!(close(g.scalar(s), 2f64.ln(), 1e-15));
        let dz = g.grad(s, &[z]).unwrap()[0];
        assert_eq!(g.value(dz).data(), &[0.5, 0.5]);
    }

    #[test]
    fn softplus_is_stable_at_extremes() {
        assert_eq!(softplus(800.0), 800.0);
        assert!(softplus(-800.0) >= 0.0);
        assert!(close(softplus(0.0), 2f64.ln(), 1e-15));
    }
}
