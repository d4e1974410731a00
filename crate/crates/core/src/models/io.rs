//! Binary parameter files.
//!
//! Layout, all integers `u32` and floats `f64`, little-endian:
//!
//! ```text
//! magic    8 bytes  "TRAJGNN\0"
//! version  u32      1
//! kind     u8       0 = ff, 1 = gcn, 2 = gat
//! strategy u8       0 = self, 1 = all, 2 = preceding, 3 = neighbour
//! flags    u8       bit 0 residual, 1 ff output, 2 edge features, 3 weighted edges
//! reserved u8       0
//! hidden_dim, num_layers, heads, input_dim, output_dim   u32 each
//! normalizer  f64 × (2 × input_dim + 2 × output_dim):
//!             input mean, input std, output mean, output std
//! count    u32      number of parameter tensors
//! count × { ndim u32, dims u32 × ndim, values f64 × product(dims) }
//! ```
//!
//! Tensors appear in declaration order.

use std::path::Path;

use super::{Model, ModelConfig, ModelKind, Normalizer};
use crate::numkern::Tensor;
use crate::scenegraph::Strategy;
use crate::{Error, Result};

const MAGIC: &[u8; 8] = b"TRAJGNN\0";
const VERSION: u32 = 1;

fn strategy_code(s: Strategy) -> u8 {
    match s {
        Strategy::SelfConnections => 0,
        Strategy::AllConnections => 1,
        Strategy::PrecedingConnection => 2,
        Strategy::NeighbourConnection => 3,
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.buf.len())
            .ok_or_else(|| Error::Format("model file truncated".into()))?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

impl Model {
    pub fn to_bytes(&self) -> Vec<u8> {
        let c = self.config();
        let mut out = Vec::with_capacity(64 + 8 * self.params().num_values());
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.push(match c.kind {
            ModelKind::Ff => 0,
            ModelKind::Gcn => 1,
            ModelKind::Gat => 2,
        });
        out.push(strategy_code(self.strategy()));
        let flags = c.use_residual as u8
            | (c.use_ff_output as u8) << 1
            | (c.use_edge_features as u8) << 2
            | (c.use_weighted_edges as u8) << 3;
        out.push(flags);
        out.push(0);
        for v in [
            c.hidden_dim,
            c.num_layers,
            c.heads,
            c.input_dim,
            c.output_dim,
        ] {
            out.extend_from_slice(&(v as u32).to_le_bytes());
        }
        let n = self.normalizer();
        for v in [&n.input_mean, &n.input_std, &n.output_mean, &n.output_std] {
            for x in v {
                out.extend_from_slice(&x.to_le_bytes());
            }
        }
        out.extend_from_slice(&(self.params().len() as u32).to_le_bytes());
        for p in self.params().iter() {
            let shape = p.value.shape();
            out.extend_from_slice(&(shape.len() as u32).to_le_bytes());
            for &d in shape {
                out.extend_from_slice(&(d as u32).to_le_bytes());
            }
            for v in p.value.data() {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(buf: &[u8]) -> Result<Self> {
        let mut r = Reader { buf, pos: 0 };
        if r.take(8)? != MAGIC {
            return Err(Error::Format("not a trajgnn model file".into()));
        }
        let version = r.u32()?;
        if version != VERSION {
            return Err(Error::Format(format!(
                "unsupported model file version {version}"
            )));
        }
        let kind = match r.u8()? {
            0 => ModelKind::Ff,
            1 => ModelKind::Gcn,
            2 => ModelKind::Gat,
            k => return Err(Error::Format(format!("unknown model kind {k}"))),
        };
        let strategy = match r.u8()? {
            0 => Strategy::SelfConnections,
            1 => Strategy::AllConnections,
            2 => Strategy::PrecedingConnection,
            3 => Strategy::NeighbourConnection,
            s => return Err(Error::Format(format!("unknown strategy {s}"))),
        };
        let flags = r.u8()?;
        r.u8()?;
        let mut dims = [0usize; 5];
        for d in &mut dims {
            *d = r.u32()? as usize;
        }
        let config = ModelConfig {
            kind,
            hidden_dim: dims[0],
            num_layers: dims[1],
            heads: dims[2],
            input_dim: dims[3],
            output_dim: dims[4],
            use_residual: flags & 1 != 0,
            use_ff_output: flags & 2 != 0,
            use_edge_features: flags & 4 != 0,
            use_weighted_edges: flags & 8 != 0,
        };
        config
            .validate()
            .map_err(|e| Error::Format(e.to_string()))?;
        let mut vec = |len: usize| (0..len).map(|_| r.f64()).collect::<Result<Vec<_>>>();
        let normalizer = Normalizer {
            input_mean: vec(config.input_dim)?,
            input_std: vec(config.input_dim)?,
            output_mean: vec(config.output_dim)?,
            output_std: vec(config.output_dim)?,
        };
        let count = r.u32()? as usize;
        let mut values = Vec::with_capacity(count.min(1024));
        for _ in 0..count {
            let ndim = r.u32()? as usize;
            let shape = (0..ndim)
                .map(|_| r.u32().map(|d| d as usize))
                .collect::<Result<Vec<_>>>()?;
            let n: usize = shape.iter().product();
            if n > buf.len() / 8 {
                return Err(Error::Format("model file truncated".into()));
            }
            let data = (0..n).map(|_| r.f64()).collect::<Result<Vec<_>>>()?;
            values.push(Tensor::new(shape, data)?);
        }
        if r.pos != buf.len() {
            return Err(Error::Format(
                "trailing bytes after model parameters".into(),
            ));
        }
        Model::from_parts(config, strategy, normalizer, values)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let buf = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Model::from_bytes(&buf)
    }
}
