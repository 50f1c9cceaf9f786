//! Inference pass of the selector network.

use ndarray::{concatenate, s, Array1, Array2, ArrayView2, Axis, Zip};

use crate::error::ModelError;
use crate::scalar::{sigmoid, Scalar};

use super::graph::SparseGraph;
use super::model::{BatchNorm, Linear, SelectorModel};

#[derive(Debug, Clone, PartialEq)]
pub struct ForwardOutput<T> {
    /// Per directed edge, in graph order.
    pub probs: Array1<T>,
    pub node_embeddings: Array2<T>,
    pub edge_embeddings: Array2<T>,
}

fn linear<T: Scalar>(x: ArrayView2<'_, T>, l: &Linear<T>) -> Array2<T> {
    let mut y = x.dot(&l.weight.t());
    y += &l.bias;
    y
}

/// `base + relu(bn(pre))`, in place on `pre`.
fn residual_bn_relu<T: Scalar>(base: &Array2<T>, mut pre: Array2<T>, bn: &BatchNorm<T>) -> Array2<T> {
    let (scale, shift) = bn.affine();
    pre *= &scale;
    pre += &shift;
    pre.mapv_inplace(|v| v.max(T::zero()));
    pre += base;
    pre
}

pub fn check_graph<T: Scalar>(model: &SelectorModel<T>, g: &SparseGraph<T>) -> Result<(), ModelError> {
    let n = g.num_nodes();
    let m = g.num_edges();
    let dim = |msg: String| Err(ModelError::Dimension(msg));
    if g.node_features.dim() != (n, model.node_embed.in_dim()) {
        return dim(format!(
            "node features {:?}, expected ({n}, {})",
            g.node_features.dim(),
            model.node_embed.in_dim()
        ));
    }
    if g.dst.len() != m || g.edge_distance.len() != m || g.edge_kind.len() != m || g.s0_mask.len() != m {
        return dim("edge arrays differ in length".into());
    }
    if g.offsets.len() != n + 1 || g.offsets[n] != m {
        return dim("edge offsets do not cover the edge list".into());
    }
    for i in 0..n {
        if g.offsets[i] > g.offsets[i + 1] || g.src[g.offsets[i]..g.offsets[i + 1]].iter().any(|&s| s != i) {
            return dim(format!("edges of node {i} are not contiguous"));
        }
    }
    if let Some(&j) = g.dst.iter().find(|&&j| j >= n) {
        return dim(format!("edge target {j} out of range for {n} nodes"));
    }
    if model.hidden % 2 != 0 || model.dist_embed.out_dim() * 2 != model.hidden {
        return dim(format!("hidden width {} cannot be split in half", model.hidden));
    }
    Ok(())
}

/// Gate weights `eta_ij = sig(e_ij) / (sum_j' sig(e_ij') + eps)` per
/// directed edge and component.
pub fn gates<T: Scalar>(edge_emb: &Array2<T>, g: &SparseGraph<T>, eps: T) -> Array2<T> {
    let mut sig = edge_emb.mapv(sigmoid);
    let h = sig.ncols();
    for i in 0..g.num_nodes() {
        let (lo, hi) = (g.offsets[i], g.offsets[i + 1]);
        let mut denom = Array1::<T>::from_elem(h, eps);
        for e in lo..hi {
            denom += &sig.row(e);
        }
        sig.slice_mut(s![lo..hi, ..])
            .axis_iter_mut(Axis(0))
            .for_each(|mut row| row /= &denom);
    }
    sig
}

/// Per node and component, the sum of its outgoing gates.
pub fn gate_sums<T: Scalar>(edge_emb: &Array2<T>, g: &SparseGraph<T>, eps: T) -> Array2<T> {
    let eta = gates(edge_emb, g, eps);
    let mut out = Array2::zeros((g.num_nodes(), eta.ncols()));
    for i in 0..g.num_nodes() {
        let mut row = out.row_mut(i);
        for e in g.offsets[i]..g.offsets[i + 1] {
            row += &eta.row(e);
        }
    }
    out
}

/// Initial node and edge embeddings.
pub fn embed<T: Scalar>(model: &SelectorModel<T>, g: &SparseGraph<T>) -> (Array2<T>, Array2<T>) {
    let x = linear(g.node_features.view(), &model.node_embed);
    let d = Array2::from_shape_vec((g.num_edges(), 1), g.edge_distance.clone()).expect("one column");
    let de = linear(d.view(), &model.dist_embed);
    let half = model.hidden / 2;
    let mut ke = Array2::<T>::zeros((g.num_edges(), half));
    for (mut row, kind) in ke.axis_iter_mut(Axis(0)).zip(&g.edge_kind) {
        row.assign(&model.kind_embed.row(kind.index()));
    }
    let e = concatenate![Axis(1), de, ke];
    (x, e)
}

/// Runs all layers and the edge head.
pub fn forward<T: Scalar>(model: &SelectorModel<T>, g: &SparseGraph<T>) -> Result<ForwardOutput<T>, ModelError> {
    check_graph(model, g)?;
    let (mut x, mut e) = embed(model, g);
    let src = &g.src;
    let dst = &g.dst;
    for layer in &model.layers {
        let [w1, w2, w3, w4, w5] = &layer.w;

        let eta = gates(&e, g, model.eps);
        let msg = linear(x.view(), w2);
        let mut node_pre = linear(x.view(), w1);
        for i in 0..g.num_nodes() {
            let mut acc = node_pre.row_mut(i);
            for k in g.offsets[i]..g.offsets[i + 1] {
                Zip::from(&mut acc)
                    .and(&eta.row(k))
                    .and(&msg.row(dst[k]))
                    .for_each(|a, &w, &v| *a += w * v);
            }
        }

        let from_src = linear(x.view(), w4);
        let from_dst = linear(x.view(), w5);
        let mut edge_pre = linear(e.view(), w3);
        for (k, mut row) in edge_pre.axis_iter_mut(Axis(0)).enumerate() {
            row += &from_src.row(src[k]);
            row += &from_dst.row(dst[k]);
        }

        x = residual_bn_relu(&x, node_pre, &layer.bn_node);
        e = residual_bn_relu(&e, edge_pre, &layer.bn_edge);
    }

    let mut z = e.clone();
    let last = model.mlp.len() - 1;
    for (k, l) in model.mlp.iter().enumerate() {
        z = linear(z.view(), l);
        if k < last {
            z.mapv_inplace(|v| v.max(T::zero()));
        }
    }
    let probs = z.column(0).mapv(sigmoid);
    Ok(ForwardOutput {
        probs,
        node_embeddings: x,
        edge_embeddings: e,
    })
}

/// Edge probabilities only.
pub fn edge_probabilities<T: Scalar>(model: &SelectorModel<T>, g: &SparseGraph<T>) -> Result<Array1<T>, ModelError> {
    forward(model, g).map(|o| o.probs)
}
