use std::sync::Arc;

use super::ops::{check_matrix, gemm, segment_softmax_into, Activation};
use super::{ParamId, ParamStore, Tensor};
use crate::{Error, Result};

/// Handle to a value recorded on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Var(usize);

#[derive(Debug, Clone)]
enum Coeff {
    Const(Arc<[f64]>),
    Var(Var),
}

#[derive(Debug, Clone)]
enum Op {
    Constant,
    Param(ParamId),
    MatMul(Var, Var),
    Add(Var, Var),
    AddRow(Var, Var),
    Scale(Var, f64),
    Activate(Var, Activation),
    GatherRows(Var, Arc<[usize]>),
    Propagate {
        x: Var,
        src: Arc<[usize]>,
        dst: Arc<[usize]>,
        coeff: Coeff,
    },
    SegmentSoftmax(Var, Arc<[usize]>),
    ConcatCols(Vec<Var>),
    SliceRows(Var, usize),
    Mse(Var, Tensor),
    Sum(Var),
}

#[derive(Debug, Clone)]
struct Node {
    value: Tensor,
    op: Op,
}

/// Records a forward computation for reverse-mode differentiation.
///
/// Nodes are appended in evaluation order; [`Tape::backward`] walks them in
/// reverse and accumulates into the gradients of the parameters read through
/// [`Tape::param`].
#[derive(Debug, Clone, Default)]
pub struct Tape {
    nodes: Vec<Node>,
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, value: Tensor, op: Op) -> Var {
        self.nodes.push(Node { value, op });
        Var(self.nodes.len() - 1)
    }

    pub fn value(&self, v: Var) -> &Tensor {
        &self.nodes[v.0].value
    }

    pub fn shape(&self, v: Var) -> &[usize] {
        self.nodes[v.0].value.shape()
    }

    pub fn constant(&mut self, t: Tensor) -> Var {
        self.push(t, Op::Constant)
    }

    pub fn param(&mut self, store: &ParamStore, id: ParamId) -> Var {
        self.push(store.get(id).value.clone(), Op::Param(id))
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let out = super::matmul(self.value(a), self.value(b))?;
        Ok(self.push(out, Op::MatMul(a, b)))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        let (x, y) = (self.value(a), self.value(b));
        x.same_shape(y, "add")?;
        let mut out = x.clone();
        out.add_assign(y);
        Ok(self.push(out, Op::Add(a, b)))
    }

    /// `x [n×f]` plus a broadcast row `b` holding `f` values.
    pub fn add_row(&mut self, x: Var, b: Var) -> Result<Var> {
        let (xv, bv) = (self.value(x), self.value(b));
        check_matrix(xv, "add_row")?;
        if bv.len() != xv.cols() {
            return Err(Error::Shape {
                op: "add_row",
                lhs: xv.shape().to_vec(),
                rhs: bv.shape().to_vec(),
            });
        }
        let mut out = xv.clone();
        let f = xv.cols();
        if f > 0 {
            for row in out.data_mut().chunks_exact_mut(f) {
                for (o, b) in row.iter_mut().zip(bv.data()) {
                    *o += b;
                }
            }
        }
        Ok(self.push(out, Op::AddRow(x, b)))
    }

    pub fn scale(&mut self, x: Var, c: f64) -> Var {
        let mut out = self.value(x).clone();
        out.data_mut().iter_mut().for_each(|v| *v *= c);
        self.push(out, Op::Scale(x, c))
    }

    pub fn activate(&mut self, x: Var, kind: Activation) -> Result<Var> {
        let out = super::elementwise_activation(self.value(x), kind)?;
        Ok(self.push(out, Op::Activate(x, kind)))
    }

    pub fn relu(&mut self, x: Var) -> Var {
        let out = super::relu(self.value(x));
        self.push(out, Op::Activate(x, Activation::Relu))
    }

    pub fn leaky_relu(&mut self, x: Var, slope: f64) -> Result<Var> {
        self.activate(x, Activation::LeakyRelu(slope))
    }

    pub fn gather_rows(&mut self, x: Var, index: &[usize]) -> Result<Var> {
        let xv = self.value(x);
        if let Some(&bad) = index.iter().find(|&&i| i >= xv.rows()) {
            return Err(Error::invalid(format!(
                "gather_rows index {bad} out of range for {} rows",
                xv.rows()
            )));
        }
        let out = xv.select_rows(index);
        Ok(self.push(out, Op::GatherRows(x, index.into())))
    }

    fn check_edges(&self, x: Var, src: &[usize], dst: &[usize], n_out: usize) -> Result<()> {
        let rows = self.value(x).rows();
        if src.len() != dst.len() {
            return Err(Error::invalid(
                "edge source and target lists differ in length",
            ));
        }
        if src.iter().any(|&s| s >= rows) || dst.iter().any(|&d| d >= n_out) {
            return Err(Error::invalid("edge endpoint out of range"));
        }
        Ok(())
    }

    /// Edge-weighted message passing with fixed coefficients:
    /// `out[dst[e]] += coeff[e] · x[src[e]]` over `n_out` output rows.
    pub fn propagate(
        &mut self,
        x: Var,
        src: &[usize],
        dst: &[usize],
        coeff: &[f64],
        n_out: usize,
    ) -> Result<Var> {
        self.check_edges(x, src, dst, n_out)?;
        if coeff.len() != src.len() {
            return Err(Error::invalid("one coefficient per edge required"));
        }
        let out = propagate_forward(self.value(x), src, dst, coeff, n_out);
        Ok(self.push(
            out,
            Op::Propagate {
                x,
                src: src.into(),
                dst: dst.into(),
                coeff: Coeff::Const(coeff.into()),
            },
        ))
    }

    /// As [`Tape::propagate`], with coefficients read from the recorded
    /// `weights` (one value per edge) so they receive gradients too.
    pub fn propagate_weighted(
        &mut self,
        x: Var,
        src: &[usize],
        dst: &[usize],
        weights: Var,
        n_out: usize,
    ) -> Result<Var> {
        self.check_edges(x, src, dst, n_out)?;
        if self.value(weights).len() != src.len() {
            return Err(Error::invalid("one weight per edge required"));
        }
        let out = propagate_forward(self.value(x), src, dst, self.value(weights).data(), n_out);
        Ok(self.push(
            out,
            Op::Propagate {
                x,
                src: src.into(),
                dst: dst.into(),
                coeff: Coeff::Var(weights),
            },
        ))
    }

    /// Softmax of a column of logits within groups given by `segments`.
    pub fn segment_softmax(&mut self, logits: Var, segments: &[usize]) -> Result<Var> {
        let lv = self.value(logits);
        if segments.is_empty() {
            return Err(Error::invalid("segment_softmax needs at least one segment"));
        }
        if lv.len() != segments.len() {
            return Err(Error::Shape {
                op: "segment_softmax",
                lhs: lv.shape().to_vec(),
                rhs: vec![segments.len()],
            });
        }
        let n_seg = segments.iter().max().map_or(0, |m| m + 1);
        let mut out = Tensor::zeros(lv.shape());
        segment_softmax_into(lv.data(), segments, n_seg, out.data_mut());
        Ok(self.push(out, Op::SegmentSoftmax(logits, segments.into())))
    }

    pub fn concat_cols(&mut self, parts: &[Var]) -> Result<Var> {
        let first = parts
            .first()
            .ok_or_else(|| Error::invalid("concat_cols of nothing"))?;
        let rows = self.value(*first).rows();
        for p in parts {
            let v = self.value(*p);
            check_matrix(v, "concat_cols")?;
            if v.rows() != rows {
                return Err(Error::Shape {
                    op: "concat_cols",
                    lhs: self.value(*first).shape().to_vec(),
                    rhs: v.shape().to_vec(),
                });
            }
        }
        let total: usize = parts.iter().map(|p| self.value(*p).cols()).sum();
        let mut out = Tensor::zeros(&[rows, total]);
        let mut offset = 0;
        for p in parts {
            let v = self.value(*p);
            let c = v.cols();
            for r in 0..rows {
                out.row_mut(r)[offset..offset + c].copy_from_slice(v.row(r));
            }
            offset += c;
        }
        Ok(self.push(out, Op::ConcatCols(parts.to_vec())))
    }

    /// Rows `start..start + len` of `x`.
    pub fn slice_rows(&mut self, x: Var, start: usize, len: usize) -> Result<Var> {
        let xv = self.value(x);
        if start + len > xv.rows() {
            return Err(Error::invalid(format!(
                "slice_rows {start}..{} beyond {} rows",
                start + len,
                xv.rows()
            )));
        }
        let c = xv.cols();
        let mut shape = xv.shape().to_vec();
        shape[0] = len;
        let out = Tensor::new(shape, xv.data()[start * c..(start + len) * c].to_vec())?;
        Ok(self.push(out, Op::SliceRows(x, start)))
    }

    /// Mean squared error against a fixed target.
    pub fn mse(&mut self, pred: Var, target: &Tensor) -> Result<Var> {
        let loss = super::mse_loss(self.value(pred), target)?;
        Ok(self.push(Tensor::scalar(loss), Op::Mse(pred, target.clone())))
    }

    pub fn sum(&mut self, x: Var) -> Var {
        let s = self.value(x).data().iter().sum();
        self.push(Tensor::scalar(s), Op::Sum(x))
    }

    /// Reverse pass from the scalar `loss`, adding each parameter's gradient
    /// into `store`. Existing gradients are accumulated into, not replaced.
    pub fn backward(&self, loss: Var, store: &mut ParamStore) -> Result<()> {
        let lv = self.value(loss);
        if lv.len() != 1 {
            return Err(Error::invalid(format!(
                "backward needs a scalar, got shape {:?}",
                lv.shape()
            )));
        }
        let mut grads: Vec<Option<Tensor>> = vec![None; loss.0 + 1];
        grads[loss.0] = Some(Tensor::full(lv.shape(), 1.0));
        for i in (0..=loss.0).rev() {
            let Some(g) = grads[i].take() else { continue };
            let node = &self.nodes[i];
            match &node.op {
                Op::Constant => {}
                Op::Param(id) => {
                    let p = store.get_mut(*id);
                    p.grad.same_shape(&g, "backward")?;
                    p.grad.add_assign(&g);
                }
                Op::MatMul(a, b) => {
                    let (av, bv) = (self.value(*a), self.value(*b));
                    let (m, k, n) = (av.rows(), av.cols(), bv.cols());
                    // dA = G · Bᵀ
                    let da = grad_slot(&mut grads, *a, av.shape());
                    gemm(
                        m,
                        n,
                        k,
                        g.data(),
                        (n as isize, 1),
                        bv.data(),
                        (1, n as isize),
                        da.data_mut(),
                        true,
                    );
                    // dB = Aᵀ · G
                    let db = grad_slot(&mut grads, *b, bv.shape());
                    gemm(
                        k,
                        m,
                        n,
                        av.data(),
                        (1, k as isize),
                        g.data(),
                        (n as isize, 1),
                        db.data_mut(),
                        true,
                    );
                }
                Op::Add(a, b) => {
                    grad_slot(&mut grads, *a, g.shape()).add_assign(&g);
                    grad_slot(&mut grads, *b, g.shape()).add_assign(&g);
                }
                Op::AddRow(x, b) => {
                    grad_slot(&mut grads, *x, g.shape()).add_assign(&g);
                    let db = grad_slot(&mut grads, *b, self.value(*b).shape());
                    let f = g.cols();
                    if f > 0 {
                        for row in g.data().chunks_exact(f) {
                            for (d, v) in db.data_mut().iter_mut().zip(row) {
                                *d += v;
                            }
                        }
                    }
                }
                Op::Scale(x, c) => {
                    let dx = grad_slot(&mut grads, *x, g.shape());
                    for (d, v) in dx.data_mut().iter_mut().zip(g.data()) {
                        *d += c * v;
                    }
                }
                Op::Activate(x, kind) => {
                    let xv = self.value(*x);
                    let dx = grad_slot(&mut grads, *x, g.shape());
                    for ((d, v), input) in dx.data_mut().iter_mut().zip(g.data()).zip(xv.data()) {
                        *d += kind.slope_at(*input) * v;
                    }
                }
                Op::GatherRows(x, index) => {
                    let dx = grad_slot(&mut grads, *x, self.value(*x).shape());
                    for (r, &i) in index.iter().enumerate() {
                        for (d, v) in dx.row_mut(i).iter_mut().zip(g.row(r)) {
                            *d += v;
                        }
                    }
                }
                Op::Propagate { x, src, dst, coeff } => {
                    let xv = self.value(*x);
                    let c: &[f64] = match coeff {
                        Coeff::Const(c) => c,
                        Coeff::Var(w) => self.value(*w).data(),
                    };
                    let dx = grad_slot(&mut grads, *x, xv.shape());
                    for e in 0..src.len() {
                        let ce = c[e];
                        let (drow, grow) = (dx.row_mut(src[e]), g.row(dst[e]));
                        for (d, v) in drow.iter_mut().zip(grow) {
                            *d += ce * v;
                        }
                    }
                    if let Coeff::Var(w) = coeff {
                        let dw = grad_slot(&mut grads, *w, self.value(*w).shape());
                        for e in 0..src.len() {
                            let dot: f64 = g
                                .row(dst[e])
                                .iter()
                                .zip(xv.row(src[e]))
                                .map(|(a, b)| a * b)
                                .sum();
                            dw.data_mut()[e] += dot;
                        }
                    }
                }
                Op::SegmentSoftmax(x, seg) => {
                    let y = node.value.data();
                    let n_seg = seg.iter().max().map_or(0, |m| m + 1);
                    let mut inner = vec![0.0; n_seg];
                    for ((yv, gv), &s) in y.iter().zip(g.data()).zip(seg.iter()) {
                        inner[s] += yv * gv;
                    }
                    let dx = grad_slot(&mut grads, *x, g.shape());
                    for (((d, yv), gv), &s) in dx
                        .data_mut()
                        .iter_mut()
                        .zip(y)
                        .zip(g.data())
                        .zip(seg.iter())
                    {
                        *d += yv * (gv - inner[s]);
                    }
                }
                Op::ConcatCols(parts) => {
                    let mut offset = 0;
                    for p in parts {
                        let shape = self.value(*p).shape().to_vec();
                        let c = shape[1];
                        let dp = grad_slot(&mut grads, *p, &shape);
                        for r in 0..g.rows() {
                            for (d, v) in
                                dp.row_mut(r).iter_mut().zip(&g.row(r)[offset..offset + c])
                            {
                                *d += v;
                            }
                        }
                        offset += c;
                    }
                }
                Op::SliceRows(x, start) => {
                    let dx = grad_slot(&mut grads, *x, self.value(*x).shape());
                    let c = g.cols();
                    let block = &mut dx.data_mut()[start * c..start * c + g.len()];
                    for (d, v) in block.iter_mut().zip(g.data()) {
                        *d += v;
                    }
                }
                Op::Mse(pred, target) => {
                    let pv = self.value(*pred);
                    let scale = 2.0 * g.item() / pv.len() as f64;
                    let dp = grad_slot(&mut grads, *pred, pv.shape());
                    for ((d, p), t) in dp.data_mut().iter_mut().zip(pv.data()).zip(target.data()) {
                        *d += scale * (p - t);
                    }
                }
                Op::Sum(x) => {
                    let gv = g.item();
                    let dx = grad_slot(&mut grads, *x, self.value(*x).shape());
                    dx.data_mut().iter_mut().for_each(|d| *d += gv);
                }
            }
        }
        Ok(())
    }
}

fn grad_slot<'a>(grads: &'a mut [Option<Tensor>], v: Var, shape: &[usize]) -> &'a mut Tensor {
    grads[v.0].get_or_insert_with(|| Tensor::zeros(shape))
}

fn propagate_forward(
    x: &Tensor,
    src: &[usize],
    dst: &[usize],
    coeff: &[f64],
    n_out: usize,
) -> Tensor {
    let f = x.cols();
    let mut out = Tensor::zeros(&[n_out, f]);
    for e in 0..src.len() {
        let ce = coeff[e];
        let xrow = x.row(src[e]);
        for (o, v) in out.row_mut(dst[e]).iter_mut().zip(xrow) {
            *o += ce * v;
        }
    }
    out
}
