//! Binary weight container.
//!
//! Little-endian layout:
//!
//! ```text
//! magic    "GNNW1\0"
//! header   L: u32, h: u32, l_mlp: u32, eps: f32
//! tensors  until end of file, each:
//!          name_len: u32, name: utf-8, rank: u32, dims: u32 * rank,
//!          data: f32 * prod(dims), row-major
//! ```
//!
//! Tensor names (`l` is the layer index, `k` the MLP layer index):
//!
//! | name | shape |
//! |------|-------|
//! | `node_embed.weight` / `.bias` | `[h, 3]` / `[h]` |
//! | `dist_embed.weight` / `.bias` | `[h/2, 1]` / `[h/2]` |
//! | `kind_embed.weight` | `[3, h/2]` (rows: k-NN, solution edge, self-loop) |
//! | `layers.l.W1` ... `layers.l.W5` `.weight` / `.bias` | `[h, h]` / `[h]` |
//! | `layers.l.bn_node.{weight,bias,running_mean,running_var}` | `[h]` |
//! | `layers.l.bn_edge.{weight,bias,running_mean,running_var}` | `[h]` |
//! | `mlp.k.weight` / `.bias` | `[h, h]` / `[h]`, last `[1, h]` / `[1]` |

use std::collections::HashMap;
use std::io::Write;
use std::path::Path;

use ndarray::{Array1, Array2};

use crate::error::ModelError;
use crate::scalar::Scalar;

use super::model::{BatchNorm, ConvLayer, Linear, SelectorModel};

pub const MAGIC: &[u8; 6] = b"GNNW1\0";
const MAX_NAME: usize = 256;
const MAX_RANK: usize = 4;
const MAX_LAYERS: u32 = 1024;
const MAX_HIDDEN: u32 = 1 << 14;

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8], ModelError> {
        if self.buf.len() - self.pos < n {
            return Err(ModelError::Truncated(what.to_string()));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self, what: &str) -> Result<u32, ModelError> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().expect("4 bytes")))
    }

    fn f32(&mut self, what: &str) -> Result<f32, ModelError> {
        Ok(f32::from_le_bytes(self.take(4, what)?.try_into().expect("4 bytes")))
    }

    fn remaining(&self) -> usize {
        self.buf.len() - self.pos
    }
}

type Raw = HashMap<String, (Vec<usize>, Vec<f32>)>;

pub fn load_weights<T: Scalar>(path: impl AsRef<Path>) -> Result<SelectorModel<T>, ModelError> {
    let bytes = std::fs::read(path)?;
    parse_weights(&bytes)
}

/// Decodes a container. Either the whole model is returned or an error;
/// there is no partial result.
pub fn parse_weights<T: Scalar>(bytes: &[u8]) -> Result<SelectorModel<T>, ModelError> {
    let mut cur = Cursor { buf: bytes, pos: 0 };
    if cur.take(MAGIC.len(), "magic").map_err(|_| ModelError::BadMagic)? != MAGIC {
        return Err(ModelError::BadMagic);
    }
    let layers = cur.u32("header")?;
    let hidden = cur.u32("header")?;
    let mlp_layers = cur.u32("header")?;
    let eps = cur.f32("header")?;
    if layers > MAX_LAYERS {
        return Err(ModelError::InvalidHeader(format!("{layers} layers")));
    }
    if hidden < 2 || hidden % 2 != 0 || hidden > MAX_HIDDEN {
        return Err(ModelError::InvalidHeader(format!("hidden width {hidden} must be even")));
    }
    if mlp_layers == 0 || mlp_layers > MAX_LAYERS {
        return Err(ModelError::InvalidHeader(format!("{mlp_layers} MLP layers")));
    }
    if !(eps.is_finite() && eps > 0.0) {
        return Err(ModelError::InvalidHeader(format!("gate epsilon {eps}")));
    }

    let mut raw: Raw = HashMap::new();
    while cur.remaining() > 0 {
        let name_len = cur.u32("tensor name length")? as usize;
        if name_len == 0 || name_len > MAX_NAME {
            return Err(ModelError::InvalidHeader(format!("tensor name length {name_len}")));
        }
        let name = String::from_utf8(cur.take(name_len, "tensor name")?.to_vec())
            .map_err(|_| ModelError::InvalidHeader("tensor name is not utf-8".into()))?;
        let rank = cur.u32(&name)? as usize;
        if rank > MAX_RANK {
            return Err(ModelError::InvalidHeader(format!("tensor {name} has rank {rank}")));
        }
        let mut dims = Vec::with_capacity(rank);
        for _ in 0..rank {
            dims.push(cur.u32(&name)? as usize);
        }
        let count = dims.iter().try_fold(1usize, |a, &d| a.checked_mul(d));
        let count = match count {
            Some(c) if c <= cur.remaining() / 4 => c,
            _ => return Err(ModelError::Truncated(name)),
        };
        let data = cur
            .take(count * 4, &name)?
            .chunks_exact(4)
            .map(|b| f32::from_le_bytes(b.try_into().expect("4 bytes")))
            .collect();
        if raw.insert(name.clone(), (dims, data)).is_some() {
            return Err(ModelError::DuplicateTensor(name));
        }
    }

    let skeleton = SelectorModel::<f32>::skeleton(layers as usize, hidden as usize, mlp_layers as usize);
    let expected: HashMap<String, Vec<usize>> = skeleton.tensors().into_iter().map(|(n, s, _)| (n, s)).collect();
    let mut unknown: Vec<&String> = raw.keys().filter(|k| !expected.contains_key(*k)).collect();
    unknown.sort();
    if let Some(name) = unknown.first() {
        return Err(ModelError::UnknownTensor((*name).clone()));
    }
    let mut b = Builder { raw, expected };
    let h = hidden as usize;
    let model = SelectorModel {
        hidden: h,
        eps: T::of(eps as f64),
        node_embed: b.linear("node_embed")?,
        dist_embed: b.linear("dist_embed")?,
        kind_embed: b.matrix("kind_embed.weight")?,
        layers: (0..layers as usize)
            .map(|l| {
                Ok(ConvLayer {
                    w: [
                        b.linear(&format!("layers.{l}.W1"))?,
                        b.linear(&format!("layers.{l}.W2"))?,
                        b.linear(&format!("layers.{l}.W3"))?,
                        b.linear(&format!("layers.{l}.W4"))?,
                        b.linear(&format!("layers.{l}.W5"))?,
                    ],
                    bn_node: b.batch_norm(&format!("layers.{l}.bn_node"))?,
                    bn_edge: b.batch_norm(&format!("layers.{l}.bn_edge"))?,
                })
            })
            .collect::<Result<_, ModelError>>()?,
        mlp: (0..mlp_layers as usize)
            .map(|k| b.linear(&format!("mlp.{k}")))
            .collect::<Result<_, ModelError>>()?,
    };
    model.validate()?;
    Ok(model)
}

struct Builder {
    raw: Raw,
    expected: HashMap<String, Vec<usize>>,
}

impl Builder {
    fn data(&mut self, name: &str) -> Result<Vec<f32>, ModelError> {
        let (dims, data) = self
            .raw
            .remove(name)
            .ok_or_else(|| ModelError::MissingTensor(name.into()))?;
        let want = &self.expected[name];
        if &dims != want {
            return Err(ModelError::ShapeMismatch {
                name: name.into(),
                expected: want.clone(),
                found: dims,
            });
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(ModelError::NonFinite(name.into()));
        }
        if name.ends_with("running_var") && data.iter().any(|&v| v <= 0.0) {
            return Err(ModelError::NonPositiveVariance(name.into()));
        }
        Ok(data)
    }

    fn vector<T: Scalar>(&mut self, name: &str) -> Result<Array1<T>, ModelError> {
        Ok(self.data(name)?.into_iter().map(|v| T::of(v as f64)).collect())
    }

    fn matrix<T: Scalar>(&mut self, name: &str) -> Result<Array2<T>, ModelError> {
        let shape = self.expected[name].clone();
        let data = self.data(name)?.into_iter().map(|v| T::of(v as f64)).collect();
        Ok(Array2::from_shape_vec((shape[0], shape[1]), data).expect("shape checked"))
    }

    fn linear<T: Scalar>(&mut self, prefix: &str) -> Result<Linear<T>, ModelError> {
        Ok(Linear {
            weight: self.matrix(&format!("{prefix}.weight"))?,
            bias: self.vector(&format!("{prefix}.bias"))?,
        })
    }

    fn batch_norm<T: Scalar>(&mut self, prefix: &str) -> Result<BatchNorm<T>, ModelError> {
        Ok(BatchNorm {
            gamma: self.vector(&format!("{prefix}.weight"))?,
            beta: self.vector(&format!("{prefix}.bias"))?,
            running_mean: self.vector(&format!("{prefix}.running_mean"))?,
            running_var: self.vector(&format!("{prefix}.running_var"))?,
        })
    }
}

/// Encodes `model` as f32 tensors.
pub fn encode_weights<T: Scalar>(model: &SelectorModel<T>) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    for v in [model.layers.len(), model.hidden, model.mlp.len()] {
        out.extend_from_slice(&(v as u32).to_le_bytes());
    }
    out.extend_from_slice(&(model.eps.to_f64_lossy() as f32).to_le_bytes());
    for (name, shape, data) in model.tensors() {
        out.extend_from_slice(&(name.len() as u32).to_le_bytes());
        out.extend_from_slice(name.as_bytes());
        out.extend_from_slice(&(shape.len() as u32).to_le_bytes());
        for d in shape {
            out.extend_from_slice(&(d as u32).to_le_bytes());
        }
        for v in data {
            out.extend_from_slice(&(v.to_f64_lossy() as f32).to_le_bytes());
        }
    }
    out
}

pub fn save_weights<T: Scalar>(model: &SelectorModel<T>, path: impl AsRef<Path>) -> Result<(), ModelError> {
    let mut f = std::fs::File::create(path)?;
    f.write_all(&encode_weights(model))?;
    Ok(())
}
