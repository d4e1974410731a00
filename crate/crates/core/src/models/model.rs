use super::layers::{
    dense, ff_forward, gat_layer, gcn_layer, DenseParams, FfParams, GatHeadParams, GatLayerParams,
    GatOptions, GcnLayerParams, GcnMode, HeadMerge,
};
use super::{ModelConfig, ModelKind, Normalizer};
use crate::numkern::{glorot_init, Activation, ParamId, ParamStore, Tape, Tensor, Var};
use crate::scenegraph::{
    build_graph, gcn_normalization, inverse_distance_weights, relative_position_edge_features,
    InteractionGraph, NormMode, SceneFrame, Strategy,
};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
enum Body {
    Ff(FfParams),
    Gcn(Vec<GcnLayerParams>),
    Gat(Vec<GatLayerParams>),
}

/// An assembled predictor: configuration, connection strategy and weights.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    config: ModelConfig,
    strategy: Strategy,
    params: ParamStore,
    body: Body,
    head: Option<DenseParams>,
    normalizer: Normalizer,
}

/// SplitMix64 step, used to give every parameter its own init stream.
fn derive_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed
        .wrapping_add(0x9E37_79B9_7F4A_7C15)
        .wrapping_add(index.wrapping_mul(0xBF58_476D_1CE4_E5B9));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

struct Builder {
    store: ParamStore,
    seed: u64,
}

impl Builder {
    fn weight(&mut self, name: String, rows: usize, cols: usize) -> Result<ParamId> {
        let t = glorot_init(rows, cols, derive_seed(self.seed, self.store.len() as u64))?;
        Ok(self.store.add(name, t))
    }

    fn dense(&mut self, name: &str, rows: usize, cols: usize) -> Result<DenseParams> {
        let w = self.weight(format!("{name}.w"), rows, cols)?;
        let b = self
            .store
            .add(format!("{name}.b"), Tensor::zeros(&[1, cols]));
        Ok(DenseParams { w, b })
    }
}

impl Model {
    /// Fresh model with Glorot-initialised weights and zero biases.
    pub fn new(config: ModelConfig, strategy: Strategy, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut b = Builder {
            store: ParamStore::new(),
            seed,
        };
        let h = config.hidden_dim;
        let layers = config.num_layers;
        let graph_head = config.kind != ModelKind::Ff && config.use_ff_output;
        // a graph layer is the network output when no head follows it
        let is_final = |l: usize| l + 1 == layers && !graph_head && config.kind != ModelKind::Ff;
        let width = |l: usize| if is_final(l) { config.output_dim } else { h };
        let in_width = |l: usize| if l == 0 { config.input_dim } else { h };
        let body = match config.kind {
            ModelKind::Ff => {
                let hidden = (0..layers)
                    .map(|l| b.dense(&format!("ff{l}"), in_width(l), h))
                    .collect::<Result<_>>()?;
                let output = b.dense("out", h, config.output_dim)?;
                Body::Ff(FfParams { hidden, output })
            }
            ModelKind::Gcn => Body::Gcn(
                (0..layers)
                    .map(|l| {
                        let w = b.weight(format!("gcn{l}.w"), in_width(l), width(l))?;
                        let w_s = if config.use_residual {
                            Some(b.weight(format!("gcn{l}.w_s"), in_width(l), width(l))?)
                        } else {
                            None
                        };
                        Ok(GcnLayerParams { w, w_s })
                    })
                    .collect::<Result<_>>()?,
            ),
            ModelKind::Gat => Body::Gat(
                (0..layers)
                    .map(|l| {
                        let head_width = if is_final(l) {
                            config.output_dim
                        } else {
                            config.head_dim()
                        };
                        let att_len = 2 * head_width + if config.use_edge_features { 2 } else { 0 };
                        let heads = (0..config.heads)
                            .map(|k| {
                                Ok(GatHeadParams {
                                    w: b.weight(
                                        format!("gat{l}.head{k}.w"),
                                        in_width(l),
                                        head_width,
                                    )?,
                                    attention: b.weight(format!("gat{l}.head{k}.a"), att_len, 1)?,
                                })
                            })
                            .collect::<Result<_>>()?;
                        let w_s = if config.use_residual {
                            Some(b.weight(format!("gat{l}.w_s"), in_width(l), width(l))?)
                        } else {
                            None
                        };
                        Ok(GatLayerParams { heads, w_s })
                    })
                    .collect::<Result<_>>()?,
            ),
        };
        let head = if graph_head {
            Some(b.dense("head", h, config.output_dim)?)
        } else {
            None
        };
        Ok(Model {
            normalizer: Normalizer::identity(config.input_dim, config.output_dim),
            config,
            strategy,
            params: b.store,
            body,
            head,
        })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn strategy(&self) -> Strategy {
        self.strategy
    }

    pub fn params(&self) -> &ParamStore {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut ParamStore {
        &mut self.params
    }

    pub fn normalizer(&self) -> &Normalizer {
        &self.normalizer
    }

    pub fn set_normalizer(&mut self, normalizer: Normalizer) -> Result<()> {
        normalizer.validate()?;
        if normalizer.input_dim() != self.config.input_dim
            || normalizer.output_dim() != self.config.output_dim
        {
            return Err(Error::config(
                "normalizer dimensions do not match the model",
            ));
        }
        self.normalizer = normalizer;
        Ok(())
    }

    /// Graph for `frame` with exactly the attributes this model reads.
    pub fn prepare_graph(&self, frame: &SceneFrame) -> Result<InteractionGraph> {
        prepare_graph(&self.config, self.strategy, frame)
    }

    fn gcn_mode(&self) -> GcnMode {
        if self.config.use_residual {
            GcnMode::Adapted
        } else {
            GcnMode::Base
        }
    }

    /// Records the forward pass on raw features and returns the `N × 10`
    /// output in normalised units.
    pub fn forward(
        &self,
        tape: &mut Tape,
        features: &Tensor,
        graph: &InteractionGraph,
    ) -> Result<Var> {
        self.forward_with(&self.params, tape, features, graph)
    }

    /// As [`Model::forward`], reading parameter values from `params`, which
    /// must have the layout of [`Model::params`].
    pub fn forward_with(
        &self,
        params: &ParamStore,
        tape: &mut Tape,
        features: &Tensor,
        graph: &InteractionGraph,
    ) -> Result<Var> {
        if params.len() != self.params.len() {
            return Err(Error::config("parameter store does not match the model"));
        }
        if features.shape().len() != 2 || features.cols() != self.config.input_dim {
            return Err(Error::Shape {
                op: "model input",
                lhs: features.shape().to_vec(),
                rhs: vec![graph.num_nodes(), self.config.input_dim],
            });
        }
        if features.rows() != graph.num_nodes() {
            return Err(Error::config(format!(
                "{} feature rows for {} graph nodes",
                features.rows(),
                graph.num_nodes()
            )));
        }
        let x = tape.constant(self.normalizer.normalize_inputs(features)?);
        let n_layers = self.config.num_layers;
        let act = |l: usize| {
            if l + 1 == n_layers && self.head.is_none() {
                Activation::Identity
            } else {
                Activation::Relu
            }
        };
        let mut h = x;
        match &self.body {
            Body::Ff(p) => return ff_forward(tape, params, x, p),
            Body::Gcn(layers) => {
                for (l, p) in layers.iter().enumerate() {
                    h = gcn_layer(tape, params, h, graph, p, self.gcn_mode(), act(l))?;
                }
            }
            Body::Gat(layers) => {
                for (l, p) in layers.iter().enumerate() {
                    let merge = if l + 1 == n_layers && self.head.is_none() {
                        HeadMerge::Mean
                    } else {
                        HeadMerge::Concat
                    };
                    let opts = GatOptions {
                        use_edge_features: self.config.use_edge_features,
                        merge,
                        activation: act(l),
                    };
                    h = gat_layer(tape, params, h, graph, p, opts)?;
                }
            }
        }
        match &self.head {
            Some(p) => dense(tape, params, h, p, Activation::Identity),
            None => Ok(h),
        }
    }

    pub fn predict(&self, features: &Tensor, graph: &InteractionGraph) -> Result<Tensor> {
        let mut tape = Tape::new();
        let out = self.forward(&mut tape, features, graph)?;
        self.normalizer.denormalize_outputs(tape.value(out))
    }

    pub(crate) fn from_parts(
        config: ModelConfig,
        strategy: Strategy,
        normalizer: Normalizer,
        values: Vec<Tensor>,
    ) -> Result<Self> {
        let mut m = Model::new(config, strategy, 0)?;
        m.set_normalizer(normalizer)
            .map_err(|e| Error::Format(e.to_string()))?;
        if values.len() != m.params.len() {
            return Err(Error::Format(format!(
                "{} parameter tensors for a model that has {}",
                values.len(),
                m.params.len()
            )));
        }
        for (id, v) in m.params.ids().collect::<Vec<_>>().into_iter().zip(values) {
            let p = m.params.get_mut(id);
            if p.value.shape() != v.shape() {
                return Err(Error::Format(format!(
                    "parameter {} has shape {:?}, expected {:?}",
                    id.index(),
                    v.shape(),
                    p.value.shape()
                )));
            }
            p.value = v;
        }
        Ok(m)
    }
}

/// Builds the interaction graph a model with `config` expects:
/// inverse-distance weights and degree normalisation for GCN, relative
/// position features for GAT.
pub fn prepare_graph(
    config: &ModelConfig,
    strategy: Strategy,
    frame: &SceneFrame,
) -> Result<InteractionGraph> {
    match config.kind {
        // the feed-forward model never reads edges
        ModelKind::Ff => build_graph(frame, Strategy::SelfConnections),
        ModelKind::Gcn => {
            let mut g = build_graph(frame, strategy)?;
            if config.use_weighted_edges {
                g = inverse_distance_weights(&g, frame)?;
            }
            let mode = if config.use_residual {
                NormMode::AdaptedNoSelfLoops
            } else {
                NormMode::BaseWithSelfLoops
            };
            Ok(gcn_normalization(&g, mode))
        }
        ModelKind::Gat => {
            let g = build_graph(frame, strategy)?;
            if config.use_edge_features {
                relative_position_edge_features(&g, frame)
            } else {
                Ok(g)
            }
        }
    }
}
