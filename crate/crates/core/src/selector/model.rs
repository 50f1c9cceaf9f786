//! Selector network parameters.

use ndarray::{Array1, Array2};
use rand::Rng;

use crate::error::ModelError;
use crate::scalar::Scalar;

use super::graph::EdgeKind;

/// Batch-norm variance guard, fixed on both sides of the weight contract.
pub const BN_EPS: f64 = 1e-5;
/// Default gate normalisation constant.
pub const DEFAULT_GATE_EPS: f64 = 1e-2;

/// `y = W x + b` with `W` stored `[out, in]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Linear<T> {
    pub weight: Array2<T>,
    pub bias: Array1<T>,
}

impl<T: Scalar> Linear<T> {
    pub fn zeros(out: usize, inp: usize) -> Self {
        Self {
            weight: Array2::zeros((out, inp)),
            bias: Array1::zeros(out),
        }
    }

    pub fn random<R: Rng + ?Sized>(out: usize, inp: usize, rng: &mut R) -> Self {
        let bound = 1.0 / (inp as f64).sqrt();
        Self {
            weight: Array2::from_shape_fn((out, inp), |_| T::of(rng.gen_range(-bound..bound))),
            bias: Array1::from_shape_fn(out, |_| T::of(rng.gen_range(-bound..bound))),
        }
    }

    pub fn out_dim(&self) -> usize {
        self.weight.nrows()
    }

    pub fn in_dim(&self) -> usize {
        self.weight.ncols()
    }

    fn cast<U: Scalar>(&self) -> Linear<U> {
        Linear {
            weight: self.weight.mapv(|v| U::of(v.to_f64_lossy())),
            bias: self.bias.mapv(|v| U::of(v.to_f64_lossy())),
        }
    }
}

/// Inference-mode batch norm.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchNorm<T> {
    pub gamma: Array1<T>,
    pub beta: Array1<T>,
    pub running_mean: Array1<T>,
    pub running_var: Array1<T>,
}

impl<T: Scalar> BatchNorm<T> {
    pub fn identity(h: usize) -> Self {
        Self {
            gamma: Array1::ones(h),
            beta: Array1::zeros(h),
            running_mean: Array1::zeros(h),
            running_var: Array1::ones(h),
        }
    }

    pub fn random<R: Rng + ?Sized>(h: usize, rng: &mut R) -> Self {
        Self {
            gamma: Array1::from_shape_fn(h, |_| T::of(rng.gen_range(0.5..1.5))),
            beta: Array1::from_shape_fn(h, |_| T::of(rng.gen_range(-0.2..0.2))),
            running_mean: Array1::from_shape_fn(h, |_| T::of(rng.gen_range(-0.2..0.2))),
            running_var: Array1::from_shape_fn(h, |_| T::of(rng.gen_range(0.5..2.0))),
        }
    }

    /// Per-component `(scale, shift)` so that `bn(v) = v * scale + shift`.
    pub fn affine(&self) -> (Array1<T>, Array1<T>) {
        let eps = T::of(BN_EPS);
        let scale: Array1<T> = self
            .gamma
            .iter()
            .zip(self.running_var.iter())
            .map(|(&g, &v)| g / (v + eps).sqrt())
            .collect();
        let shift: Array1<T> = self
            .beta
            .iter()
            .zip(self.running_mean.iter())
            .zip(scale.iter())
            .map(|((&b, &m), &s)| b - m * s)
            .collect();
        (scale, shift)
    }

    fn cast<U: Scalar>(&self) -> BatchNorm<U> {
        let c = |a: &Array1<T>| a.mapv(|v| U::of(v.to_f64_lossy()));
        BatchNorm {
            gamma: c(&self.gamma),
            beta: c(&self.beta),
            running_mean: c(&self.running_mean),
            running_var: c(&self.running_var),
        }
    }
}

/// One gated graph-convolution layer. `w[0]..w[4]` are W1..W5.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvLayer<T> {
    pub w: [Linear<T>; 5],
    pub bn_node: BatchNorm<T>,
    pub bn_edge: BatchNorm<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelectorModel<T> {
    pub hidden: usize,
    /// Gate normalisation constant.
    pub eps: T,
    /// 3 -> h
    pub node_embed: Linear<T>,
    /// 1 -> h/2
    pub dist_embed: Linear<T>,
    /// `[3, h/2]`, one row per [`EdgeKind`].
    pub kind_embed: Array2<T>,
    pub layers: Vec<ConvLayer<T>>,
    /// h -> h ... -> 1
    pub mlp: Vec<Linear<T>>,
}

impl<T: Scalar> SelectorModel<T> {
    pub fn num_layers(&self) -> usize {
        self.layers.len()
    }

    pub fn mlp_layers(&self) -> usize {
        self.mlp.len()
    }

    /// Randomly initialised model, for fixtures and tests.
    pub fn random<R: Rng + ?Sized>(layers: usize, hidden: usize, mlp_layers: usize, eps: f64, rng: &mut R) -> Self {
        assert!(hidden >= 2 && hidden % 2 == 0, "hidden width must be even");
        assert!(mlp_layers >= 1);
        let half = hidden / 2;
        Self {
            hidden,
            eps: T::of(eps),
            node_embed: Linear::random(hidden, 3, rng),
            dist_embed: Linear::random(half, 1, rng),
            kind_embed: Array2::from_shape_fn((EdgeKind::COUNT, half), |_| T::of(rng.gen_range(-1.0..1.0))),
            layers: (0..layers)
                .map(|_| ConvLayer {
                    w: std::array::from_fn(|_| Linear::random(hidden, hidden, rng)),
                    bn_node: BatchNorm::random(hidden, rng),
                    bn_edge: BatchNorm::random(hidden, rng),
                })
                .collect(),
            mlp: (0..mlp_layers)
                .map(|k| Linear::random(if k + 1 == mlp_layers { 1 } else { hidden }, hidden, rng))
                .collect(),
        }
    }

    /// Same parameters in another float type.
    pub fn cast<U: Scalar>(&self) -> SelectorModel<U> {
        SelectorModel {
            hidden: self.hidden,
            eps: U::of(self.eps.to_f64_lossy()),
            node_embed: self.node_embed.cast(),
            dist_embed: self.dist_embed.cast(),
            kind_embed: self.kind_embed.mapv(|v| U::of(v.to_f64_lossy())),
            layers: self
                .layers
                .iter()
                .map(|l| ConvLayer {
                    w: std::array::from_fn(|i| l.w[i].cast()),
                    bn_node: l.bn_node.cast(),
                    bn_edge: l.bn_edge.cast(),
                })
                .collect(),
            mlp: self.mlp.iter().map(|m| m.cast()).collect(),
        }
    }

    /// Named tensors in container order, with their shapes.
    pub fn tensors(&self) -> Vec<(String, Vec<usize>, Vec<T>)> {
        let mut out = Vec::new();
        let lin = |name: &str, l: &Linear<T>, out: &mut Vec<(String, Vec<usize>, Vec<T>)>| {
            out.push((
                format!("{name}.weight"),
                l.weight.shape().to_vec(),
                l.weight.iter().copied().collect(),
            ));
            out.push((format!("{name}.bias"), l.bias.shape().to_vec(), l.bias.to_vec()));
        };
        lin("node_embed", &self.node_embed, &mut out);
        lin("dist_embed", &self.dist_embed, &mut out);
        out.push((
            "kind_embed.weight".into(),
            self.kind_embed.shape().to_vec(),
            self.kind_embed.iter().copied().collect(),
        ));
        for (i, layer) in self.layers.iter().enumerate() {
            for (k, w) in layer.w.iter().enumerate() {
                lin(&format!("layers.{i}.W{}", k + 1), w, &mut out);
            }
            for (tag, bn) in [("bn_node", &layer.bn_node), ("bn_edge", &layer.bn_edge)] {
                for (field, a) in [
                    ("weight", &bn.gamma),
                    ("bias", &bn.beta),
                    ("running_mean", &bn.running_mean),
                    ("running_var", &bn.running_var),
                ] {
                    out.push((format!("layers.{i}.{tag}.{field}"), vec![a.len()], a.to_vec()));
                }
            }
        }
        for (k, m) in self.mlp.iter().enumerate() {
            lin(&format!("mlp.{k}"), m, &mut out);
        }
        out
    }

    /// Checks shapes, finiteness and positive running variances.
    pub fn validate(&self) -> Result<(), ModelError> {
        let h = self.hidden;
        if h < 2 || h % 2 != 0 {
            return Err(ModelError::InvalidHeader(format!(
                "hidden width {h} must be even and positive"
            )));
        }
        if self.mlp.is_empty() {
            return Err(ModelError::InvalidHeader("MLP needs at least one layer".into()));
        }
        let eps = self.eps.to_f64_lossy();
        if !(eps.is_finite() && eps > 0.0) {
            return Err(ModelError::InvalidHeader(format!(
                "gate epsilon {eps} must be positive"
            )));
        }
        let reference = Self::skeleton(self.layers.len(), h, self.mlp.len());
        for ((name, shape, data), (_, want, _)) in self.tensors().into_iter().zip(reference.tensors()) {
            if shape != want {
                return Err(ModelError::ShapeMismatch {
                    name,
                    expected: want,
                    found: shape,
                });
            }
            if data.iter().any(|v| !v.is_finite()) {
                return Err(ModelError::NonFinite(name));
            }
            if name.ends_with("running_var") && data.iter().any(|&v| v <= T::zero()) {
                return Err(ModelError::NonPositiveVariance(name));
            }
        }
        Ok(())
    }

    /// Zero weights and identity batch norms with the given shape.
    pub fn skeleton(layers: usize, hidden: usize, mlp_layers: usize) -> Self {
        let half = hidden / 2;
        Self {
            hidden,
            eps: T::of(DEFAULT_GATE_EPS),
            node_embed: Linear::zeros(hidden, 3),
            dist_embed: Linear::zeros(half, 1),
            kind_embed: Array2::zeros((EdgeKind::COUNT, half)),
            layers: (0..layers)
                .map(|_| ConvLayer {
                    w: std::array::from_fn(|_| Linear::zeros(hidden, hidden)),
                    bn_node: BatchNorm::identity(hidden),
                    bn_edge: BatchNorm::identity(hidden),
                })
                .collect(),
            mlp: (0..mlp_layers)
                .map(|k| Linear::zeros(if k + 1 == mlp_layers { 1 } else { hidden }, hidden))
                .collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn random_model_validates() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let m = SelectorModel::<f32>::random(2, 8, 3, 1e-2, &mut rng);
        m.validate().unwrap();
        assert_eq!(m.tensors().len(), 4 + 1 + 2 * (10 + 8) + 6);
    }

    #[test]
    fn negative_variance_is_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut m = SelectorModel::<f64>::random(1, 4, 2, 1e-2, &mut rng);
        m.layers[0].bn_edge.running_var[2] = 0.0;
        assert!(matches!(m.validate(), Err(ModelError::NonPositiveVariance(n)) if n == "layers.0.bn_edge.running_var"));
    }

    #[test]
    fn cast_round_trip_is_exact_from_f32() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let m = SelectorModel::<f32>::random(1, 4, 2, 1e-2, &mut rng);
        assert_eq!(m.cast::<f64>().cast::<f32>(), m);
    }
}
