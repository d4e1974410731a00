use crate::numkern::{Activation, ParamId, ParamStore, Tape, Tensor, Var};
use crate::scenegraph::InteractionGraph;
use crate::{Error, Result};

/// Negative slope of the leaky ReLU applied to attention logits.
pub const ATTENTION_SLOPE: f64 = 0.2;

/// Affine map `x W + b`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DenseParams {
    pub w: ParamId,
    pub b: ParamId,
}

/// Interaction-blind per-node network: hidden layers with ReLU, then a
/// linear output layer.
#[derive(Debug, Clone, PartialEq)]
pub struct FfParams {
    pub hidden: Vec<DenseParams>,
    pub output: DenseParams,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GcnLayerParams {
    pub w: ParamId,
    /// Ego transformation; required in [`GcnMode::Adapted`].
    pub w_s: Option<ParamId>,
}

/// One attention head: a feature transform and the attention vector over
/// `[W h_i, W h_j, e_ij]` (receiver, sender, optional edge feature).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GatHeadParams {
    pub w: ParamId,
    pub attention: ParamId,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GatLayerParams {
    pub heads: Vec<GatHeadParams>,
    /// Shared ego transformation added before the nonlinearity.
    pub w_s: Option<ParamId>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GcnMode {
    /// Normalised aggregation over a graph that includes self-loops.
    Base,
    /// Aggregation over neighbours only, plus a separate ego transform.
    Adapted,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HeadMerge {
    Concat,
    Mean,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GatOptions {
    pub use_edge_features: bool,
    pub merge: HeadMerge,
    pub activation: Activation,
}

pub fn dense(
    tape: &mut Tape,
    store: &ParamStore,
    x: Var,
    p: &DenseParams,
    act: Activation,
) -> Result<Var> {
    let w = tape.param(store, p.w);
    let b = tape.param(store, p.b);
    let xw = tape.matmul(x, w)?;
    let y = tape.add_row(xw, b)?;
    match act {
        Activation::Identity => Ok(y),
        other => tape.activate(y, other),
    }
}

/// Feed-forward baseline applied to every row of `x` independently.
pub fn ff_forward(tape: &mut Tape, store: &ParamStore, x: Var, p: &FfParams) -> Result<Var> {
    let mut h = x;
    for layer in &p.hidden {
        h = dense(tape, store, h, layer, Activation::Relu)?;
    }
    dense(tape, store, h, &p.output, Activation::Identity)
}

/// One graph convolution.
///
/// Base: `σ(Σ_{j→i} c_ji · h_j W)`. Adapted: `σ(Σ_{j→i, j≠i} c_ji · h_j W + h_i W_s)`.
/// Coefficients come from [`gcn_normalization`](crate::scenegraph::gcn_normalization).
pub fn gcn_layer(
    tape: &mut Tape,
    store: &ParamStore,
    h: Var,
    g: &InteractionGraph,
    p: &GcnLayerParams,
    mode: GcnMode,
    act: Activation,
) -> Result<Var> {
    let n = tape.shape(h)[0];
    if n != g.num_nodes() {
        return Err(Error::config(format!(
            "{} feature rows for {} graph nodes",
            n,
            g.num_nodes()
        )));
    }
    let coeff = g
        .norm_coeff()
        .ok_or_else(|| Error::config("GCN layer needs normalisation coefficients"))?;
    let w = tape.param(store, p.w);
    let hw = tape.matmul(h, w)?;
    let agg = match mode {
        GcnMode::Base => tape.propagate(hw, g.sources(), g.targets(), coeff, n)?,
        GcnMode::Adapted => {
            let keep: Vec<usize> = (0..g.num_edges())
                .filter(|&e| g.sources()[e] != g.targets()[e])
                .collect();
            let src: Vec<usize> = keep.iter().map(|&e| g.sources()[e]).collect();
            let dst: Vec<usize> = keep.iter().map(|&e| g.targets()[e]).collect();
            let c: Vec<f64> = keep.iter().map(|&e| coeff[e]).collect();
            tape.propagate(hw, &src, &dst, &c, n)?
        }
    };
    let pre = match (mode, p.w_s) {
        (GcnMode::Base, _) => agg,
        (GcnMode::Adapted, Some(ws)) => {
            let ws = tape.param(store, ws);
            let ego = tape.matmul(h, ws)?;
            tape.add(agg, ego)?
        }
        (GcnMode::Adapted, None) => {
            return Err(Error::config(
                "adapted GCN layer needs residual weights W_s",
            ));
        }
    };
    tape.activate(pre, act)
}

/// One multi-head graph attention layer.
///
/// Per head, logits `leaky_relu(a · [W h_i, W h_j, e_ij])` are normalised
/// over the in-edges of each receiver `i` and weight the messages `W h_j`.
/// Heads are concatenated (or averaged), the ego transform `h_i W_s` is
/// added if present, then the activation is applied. A node without
/// in-edges aggregates to zero.
pub fn gat_layer(
    tape: &mut Tape,
    store: &ParamStore,
    h: Var,
    g: &InteractionGraph,
    p: &GatLayerParams,
    opts: GatOptions,
) -> Result<Var> {
    let n = tape.shape(h)[0];
    if n != g.num_nodes() {
        return Err(Error::config(format!(
            "{} feature rows for {} graph nodes",
            n,
            g.num_nodes()
        )));
    }
    if p.heads.is_empty() {
        return Err(Error::config("GAT layer without heads"));
    }
    let (src, dst) = (g.sources(), g.targets());
    let edge_feat = if opts.use_edge_features && g.num_edges() > 0 {
        let f = g.edge_feature().ok_or_else(|| {
            Error::config("GAT with edge features needs edge features on the graph")
        })?;
        let data = f.iter().flat_map(|e| e.iter().copied()).collect();
        Some(tape.constant(Tensor::matrix(f.len(), 2, data)?))
    } else {
        None
    };

    let mut outputs = Vec::with_capacity(p.heads.len());
    for head in &p.heads {
        let w = tape.param(store, head.w);
        let hw = tape.matmul(h, w)?;
        let d = tape.shape(hw)[1];
        let expected = 2 * d + if opts.use_edge_features { 2 } else { 0 };
        let att_len = store.get(head.attention).value.len();
        if att_len != expected {
            return Err(Error::config(format!(
                "attention vector has {att_len} entries, expected {expected}"
            )));
        }
        if g.num_edges() == 0 {
            outputs.push(tape.constant(Tensor::zeros(&[n, d])));
            continue;
        }
        let a = tape.param(store, head.attention);
        let a_recv = tape.slice_rows(a, 0, d)?;
        let a_send = tape.slice_rows(a, d, d)?;
        let score_recv = tape.matmul(hw, a_recv)?;
        let score_send = tape.matmul(hw, a_send)?;
        let per_recv = tape.gather_rows(score_recv, dst)?;
        let per_send = tape.gather_rows(score_send, src)?;
        let mut logits = tape.add(per_recv, per_send)?;
        if let Some(ef) = edge_feat {
            let a_edge = tape.slice_rows(a, 2 * d, 2)?;
            let edge_term = tape.matmul(ef, a_edge)?;
            logits = tape.add(logits, edge_term)?;
        }
        let logits = tape.leaky_relu(logits, ATTENTION_SLOPE)?;
        let alpha = tape.segment_softmax(logits, dst)?;
        outputs.push(tape.propagate_weighted(hw, src, dst, alpha, n)?);
    }
    let merged = match opts.merge {
        HeadMerge::Concat => tape.concat_cols(&outputs)?,
        HeadMerge::Mean => {
            let mut acc = outputs[0];
            for o in &outputs[1..] {
                acc = tape.add(acc, *o)?;
            }
            tape.scale(acc, 1.0 / outputs.len() as f64)
        }
    };
    let pre = match p.w_s {
        Some(ws) => {
            let ws = tape.param(store, ws);
            let ego = tape.matmul(h, ws)?;
            tape.add(merged, ego)?
        }
        None => merged,
    };
    match opts.activation {
        Activation::Identity => Ok(pre),
        act => tape.activate(pre, act),
    }
}
