use std::fmt;
use std::str::FromStr;

use super::{INPUT_DIM, OUTPUT_DIM};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModelKind {
    /// Per-vehicle feed-forward network; ignores the graph.
    Ff,
    Gcn,
    Gat,
}

impl ModelKind {
    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Ff => "ff",
            ModelKind::Gcn => "gcn",
            ModelKind::Gat => "gat",
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            ModelKind::Ff => "FF",
            ModelKind::Gcn => "GCN",
            ModelKind::Gat => "GAT",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ff" => Ok(ModelKind::Ff),
            "gcn" => Ok(ModelKind::Gcn),
            "gat" => Ok(ModelKind::Gat),
            other => Err(Error::invalid(format!(
                "unknown model {other:?} (expected ff, gcn or gat)"
            ))),
        }
    }
}

/// Architecture of one predictor. The constructors give the default
/// variants: residual weights and a feed-forward head on, edge weights off,
/// edge features on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ModelConfig {
    pub kind: ModelKind,
    pub hidden_dim: usize,
    pub num_layers: usize,
    /// Attention heads per GAT layer; each gets `hidden_dim / heads` columns.
    pub heads: usize,
    pub use_residual: bool,
    pub use_ff_output: bool,
    pub use_edge_features: bool,
    pub use_weighted_edges: bool,
    pub input_dim: usize,
    pub output_dim: usize,
}

impl ModelConfig {
    pub fn new(kind: ModelKind) -> Self {
        ModelConfig {
            kind,
            hidden_dim: 256,
            num_layers: 2,
            heads: 4,
            use_residual: true,
            use_ff_output: true,
            use_edge_features: true,
            use_weighted_edges: false,
            input_dim: INPUT_DIM,
            output_dim: OUTPUT_DIM,
        }
    }

    pub fn ff() -> Self {
        Self::new(ModelKind::Ff)
    }

    pub fn gcn() -> Self {
        Self::new(ModelKind::Gcn)
    }

    pub fn gat() -> Self {
        Self::new(ModelKind::Gat)
    }

    pub fn with_hidden_dim(mut self, hidden_dim: usize) -> Self {
        self.hidden_dim = hidden_dim;
        self
    }

    pub fn head_dim(&self) -> usize {
        self.hidden_dim / self.heads.max(1)
    }

    pub fn validate(&self) -> Result<()> {
        if self.hidden_dim == 0 || self.num_layers == 0 {
            return Err(Error::config("hidden_dim and num_layers must be positive"));
        }
        if self.input_dim != INPUT_DIM || self.output_dim != OUTPUT_DIM {
            return Err(Error::config(format!(
                "models map {INPUT_DIM} inputs to {OUTPUT_DIM} outputs, got {}→{}",
                self.input_dim, self.output_dim
            )));
        }
        if self.kind == ModelKind::Gat
            && (self.heads == 0 || !self.hidden_dim.is_multiple_of(self.heads))
        {
            return Err(Error::config(format!(
                "{} heads do not divide hidden_dim {}",
                self.heads, self.hidden_dim
            )));
        }
        Ok(())
    }

    /// Short description of the ablation switches that differ from the
    /// default variant, e.g. `no-residual+weighted-edges`.
    pub fn variant_name(&self) -> String {
        let mut parts = Vec::new();
        if self.kind != ModelKind::Ff {
            if !self.use_ff_output {
                parts.push("no-ff-output");
            }
            if !self.use_residual {
                parts.push("no-residual");
            }
        }
        match self.kind {
            ModelKind::Gcn if self.use_weighted_edges => parts.push("weighted-edges"),
            ModelKind::Gat if !self.use_edge_features => parts.push("no-edge-features"),
            _ => {}
        }
        if parts.is_empty() {
            "default".into()
        } else {
            parts.join("+")
        }
    }
}
