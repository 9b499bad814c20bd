//! Layer forward/backward math. Everything is plain `ndarray` arithmetic with
//! explicit neighbor loops — no autodiff, no framework. Each forward has a cached
//! variant used during training; the backward functions consume those caches and
//! return parameter gradients plus the gradient w.r.t. the layer input.
//!
//! Conventions: `h` is |V|×d_in (row per node), weights are d_in×d_out, biases are
//! length d_out and broadcast over rows. All reductions run in fixed order (edge
//! order, then node order), so repeated runs produce bit-identical floats.

use ndarray::{Array1, Array2, Axis};

use super::adjacency::MessageGraph;
use super::model::ModelError;

/// GIN's ε: the weight on the node's own embedding relative to the neighbor sum.
pub const GIN_EPS: f64 = 0.0;

/// Negative-side slope of GAT's LeakyReLU attention nonlinearity.
pub const GAT_LEAKY_SLOPE: f64 = 0.2;

fn check_shapes(
    mg: &MessageGraph,
    h: &Array2<f64>,
    w: &Array2<f64>,
    b: &Array1<f64>,
) -> Result<(), ModelError> {
    if mg.node_count() != h.nrows() {
        return Err(ModelError::shape(format!(
            "graph has {} nodes but H has {} rows",
            mg.node_count(),
            h.nrows()
        )));
    }
    if h.ncols() != w.nrows() {
        return Err(ModelError::shape(format!(
            "H is |V|x{} but W is {}x{}",
            h.ncols(),
            w.nrows(),
            w.ncols()
        )));
    }
    if b.len() != w.ncols() {
        return Err(ModelError::shape(format!(
            "bias has length {} but W has {} columns",
            b.len(),
            w.ncols()
        )));
    }
    Ok(())
}

/// Elementwise ReLU.
pub(crate) fn relu(z: &Array2<f64>) -> Array2<f64> {
    z.mapv(|v| v.max(0.0))
}

/// ReLU backward: zeroes the gradient where the pre-activation was ≤ 0.
pub(crate) fn relu_backward(dz: &Array2<f64>, pre: &Array2<f64>) -> Array2<f64> {
    let mut out = dz.clone();
    out.zip_mut_with(pre, |g, p| {
        if *p <= 0.0 {
            *g = 0.0;
        }
    });
    out
}

/// `h·W + b` with the bias broadcast over rows.
pub(crate) fn affine(h: &Array2<f64>, w: &Array2<f64>, b: &Array1<f64>) -> Array2<f64> {
    h.dot(w) + b
}

// ---------------------------------------------------------------------------
// Aggregation primitives
// ---------------------------------------------------------------------------

/// GCN aggregation: `msg[v] = Σ_{(u,c) ∈ row v} c · h[u]`, self-loop included.
pub(crate) fn gcn_aggregate(mg: &MessageGraph, h: &Array2<f64>) -> Array2<f64> {
    let mut msg = Array2::zeros(h.raw_dim());
    for v in 0..mg.node_count() {
        for &(u, c) in mg.gcn_row(v) {
            let src = h.row(u).to_owned() * c;
            let mut row = msg.row_mut(v);
            row += &src;
        }
    }
    msg
}

/// Transpose of [`gcn_aggregate`]: distributes row gradients back to sources.
pub(crate) fn gcn_aggregate_transpose(mg: &MessageGraph, y: &Array2<f64>) -> Array2<f64> {
    let mut out = Array2::zeros(y.raw_dim());
    for u in 0..mg.node_count() {
        for &(v, c) in mg.gcn_col(u) {
            let contrib = y.row(v).to_owned() * c;
            let mut row = out.row_mut(u);
            row += &contrib;
        }
    }
    out
}

/// Mean over in-neighbors (with multiplicity); empty neighborhood → zero row.
pub(crate) fn neighbor_mean(mg: &MessageGraph, h: &Array2<f64>) -> Array2<f64> {
    let mut mean = Array2::zeros(h.raw_dim());
    for v in 0..mg.node_count() {
        let neighbors = mg.in_neighbors(v);
        if neighbors.is_empty() {
            continue;
        }
        let inv = 1.0 / neighbors.len() as f64;
        for &u in neighbors {
            let src = h.row(u).to_owned() * inv;
            let mut row = mean.row_mut(v);
            row += &src;
        }
    }
    mean
}

/// Transpose of [`neighbor_mean`].
pub(crate) fn neighbor_mean_transpose(mg: &MessageGraph, y: &Array2<f64>) -> Array2<f64> {
    let mut out = Array2::zeros(y.raw_dim());
    for v in 0..mg.node_count() {
        let neighbors = mg.in_neighbors(v);
        if neighbors.is_empty() {
            continue;
        }
        let inv = 1.0 / neighbors.len() as f64;
        let scaled = y.row(v).to_owned() * inv;
        for &u in neighbors {
            let mut row = out.row_mut(u);
            row += &scaled;
        }
    }
    out
}

/// Sum over in-neighbors (with multiplicity).
pub(crate) fn neighbor_sum(mg: &MessageGraph, h: &Array2<f64>) -> Array2<f64> {
    let mut sum = Array2::zeros(h.raw_dim());
    for v in 0..mg.node_count() {
        for &u in mg.in_neighbors(v) {
            let src = h.row(u).to_owned();
            let mut row = sum.row_mut(v);
            row += &src;
        }
    }
    sum
}

/// Transpose of [`neighbor_sum`].
pub(crate) fn neighbor_sum_transpose(mg: &MessageGraph, y: &Array2<f64>) -> Array2<f64> {
    let mut out = Array2::zeros(y.raw_dim());
    for v in 0..mg.node_count() {
        for &u in mg.in_neighbors(v) {
            let contrib = y.row(v).to_owned();
            let mut row = out.row_mut(u);
            row += &contrib;
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Public layer operations (forward only, optional hidden-layer activation)
// ---------------------------------------------------------------------------

/// GCN layer: `act( D̂^{-1/2} Â D̂^{-1/2} H W + b )` where `Â` is the message
/// adjacency (per the graph's [`Direction`](super::Direction)) plus self-loops and
/// `D̂` its degree. `relu` selects whether the hidden-layer activation applies.
pub fn layer_forward_gcn(
    mg: &MessageGraph,
    h: &Array2<f64>,
    w: &Array2<f64>,
    b: &Array1<f64>,
    relu_after: bool,
) -> Result<Array2<f64>, ModelError> {
    check_shapes(mg, h, w, b)?;
    let z = affine(&gcn_aggregate(mg, h), w, b);
    Ok(if relu_after { relu(&z) } else { z })
}

/// GraphSAGE layer with mean aggregation:
/// `act( H(v)·W_self + mean_{u∈N(v)} H(u)·W_neigh + b )`; an empty neighborhood
/// contributes a zero vector.
pub fn layer_forward_sage(
    mg: &MessageGraph,
    h: &Array2<f64>,
    w_self: &Array2<f64>,
    w_neigh: &Array2<f64>,
    b: &Array1<f64>,
    relu_after: bool,
) -> Result<Array2<f64>, ModelError> {
    check_shapes(mg, h, w_self, b)?;
    check_shapes(mg, h, w_neigh, b)?;
    let z = h.dot(w_self) + neighbor_mean(mg, h).dot(w_neigh) + b;
    Ok(if relu_after { relu(&z) } else { z })
}

/// GIN layer: `mlp2( (1+ε)·H(v) + Σ_{u∈N(v)} H(u) )` with ε = [`GIN_EPS`] and
/// `mlp2(x) = relu(x·W1 + b1)·W2 + b2`. No outer activation — GIN's nonlinearity
/// lives inside its perceptron.
pub fn layer_forward_gin(
    mg: &MessageGraph,
    h: &Array2<f64>,
    w1: &Array2<f64>,
    b1: &Array1<f64>,
    w2: &Array2<f64>,
    b2: &Array1<f64>,
) -> Result<Array2<f64>, ModelError> {
    check_shapes(mg, h, w1, b1)?;
    if w2.nrows() != w1.ncols() || b2.len() != w2.ncols() {
        return Err(ModelError::shape(format!(
            "GIN inner maps disagree: W1 is {}x{}, W2 is {}x{}",
            w1.nrows(),
            w1.ncols(),
            w2.nrows(),
            w2.ncols()
        )));
    }
    let s = h * (1.0 + GIN_EPS) + neighbor_sum(mg, h);
    let u1 = affine(&s, w1, b1);
    Ok(affine(&relu(&u1), w2, b2))
}

/// GAT layer, single head. For target `v` with candidate sources
/// `S(v) = N(v) ∪ {v}` (multiplicity kept; self appended once):
///
/// ```text
/// score(u→v) = leaky( a_src·(H(u)W) + a_dst·(H(v)W) )      (slope 0.2)
/// α(·→v)     = softmax over S(v)
/// H'(v)      = act( Σ_u α(u→v) · H(u)W + b )
/// ```
pub fn layer_forward_gat(
    mg: &MessageGraph,
    h: &Array2<f64>,
    w: &Array2<f64>,
    a_src: &Array1<f64>,
    a_dst: &Array1<f64>,
    b: &Array1<f64>,
    relu_after: bool,
) -> Result<Array2<f64>, ModelError> {
    check_shapes(mg, h, w, b)?;
    if a_src.len() != w.ncols() || a_dst.len() != w.ncols() {
        return Err(ModelError::shape(format!(
            "attention vectors have lengths {}/{} but W has {} columns",
            a_src.len(),
            a_dst.len(),
            w.ncols()
        )));
    }
    let (z, _cache) = gat_forward_cached(mg, h, w, a_src, a_dst, b);
    Ok(if relu_after { relu(&z) } else { z })
}

/// MLP layer: per-node dense map `act(H·W + b)`; edges are ignored entirely.
pub fn forward_mlp(
    h: &Array2<f64>,
    w: &Array2<f64>,
    b: &Array1<f64>,
    relu_after: bool,
) -> Result<Array2<f64>, ModelError> {
    if h.ncols() != w.nrows() || b.len() != w.ncols() {
        return Err(ModelError::shape(format!(
            "H is |V|x{} but W is {}x{} with bias {}",
            h.ncols(),
            w.nrows(),
            w.ncols(),
            b.len()
        )));
    }
    let z = affine(h, w, b);
    Ok(if relu_after { relu(&z) } else { z })
}

/// Column-wise mean over nodes: the graph readout.
///
/// # Errors
///
/// [`ModelError::EmptyGraph`] when the matrix has no rows.
pub fn readout_mean(h: &Array2<f64>) -> Result<Array1<f64>, ModelError> {
    h.mean_axis(Axis(0)).ok_or(ModelError::EmptyGraph)
}

// ---------------------------------------------------------------------------
// Cached forwards + backwards (training path)
// ---------------------------------------------------------------------------

/// Intermediates kept by a layer's forward pass for its backward pass.
#[derive(Debug)]
pub(crate) enum LayerCache {
    /// Dense/MLP: the layer input.
    Dense { h: Array2<f64> },
    /// GCN: the normalized aggregate `msg = Â_norm·H` (the effective affine input).
    Gcn { msg: Array2<f64> },
    /// SAGE: the layer input and the neighbor means.
    Sage { h: Array2<f64>, mean: Array2<f64> },
    /// GIN: aggregate `s`, inner pre-activation `u1`, inner activation `a1`.
    Gin {
        s: Array2<f64>,
        u1: Array2<f64>,
        a1: Array2<f64>,
    },
    /// GAT: input, projected rows `g = H·W`, and per-target attention state
    /// (pre-nonlinearity scores and softmax weights, aligned with `S(v)`).
    Gat {
        h: Array2<f64>,
        g: Array2<f64>,
        pres: Vec<Vec<f64>>,
        alphas: Vec<Vec<f64>>,
    },
}

/// Gradients of one layer's parameters, mirroring its tensor layout.
#[derive(Debug)]
pub(crate) enum LayerGrads {
    Dense {
        dw: Array2<f64>,
        db: Array1<f64>,
    },
    Sage {
        dw_self: Array2<f64>,
        dw_neigh: Array2<f64>,
        db: Array1<f64>,
    },
    Gin {
        dw1: Array2<f64>,
        db1: Array1<f64>,
        dw2: Array2<f64>,
        db2: Array1<f64>,
    },
    Gat {
        dw: Array2<f64>,
        db: Array1<f64>,
        da_src: Array1<f64>,
        da_dst: Array1<f64>,
    },
}

pub(crate) fn dense_fwd_cached(h: &Array2<f64>, w: &Array2<f64>, b: &Array1<f64>) -> (Array2<f64>, LayerCache) {
    (affine(h, w, b), LayerCache::Dense { h: h.clone() })
}

pub(crate) fn dense_bwd(
    cache: &LayerCache,
    w: &Array2<f64>,
    dz: &Array2<f64>,
) -> (LayerGrads, Array2<f64>) {
    let LayerCache::Dense { h } = cache else {
        unreachable!("dense backward requires a dense cache");
    };
    let dw = h.t().dot(dz);
    let db = dz.sum_axis(Axis(0));
    let dh = dz.dot(&w.t());
    (LayerGrads::Dense { dw, db }, dh)
}

pub(crate) fn gcn_fwd_cached(
    mg: &MessageGraph,
    h: &Array2<f64>,
    w: &Array2<f64>,
    b: &Array1<f64>,
) -> (Array2<f64>, LayerCache) {
    let msg = gcn_aggregate(mg, h);
    let z = affine(&msg, w, b);
    (z, LayerCache::Gcn { msg })
}

pub(crate) fn gcn_bwd(
    mg: &MessageGraph,
    cache: &LayerCache,
    w: &Array2<f64>,
    dz: &Array2<f64>,
) -> (LayerGrads, Array2<f64>) {
    let LayerCache::Gcn { msg } = cache else {
        unreachable!("gcn backward requires a gcn cache");
    };
    let dw = msg.t().dot(dz);
    let db = dz.sum_axis(Axis(0));
    // dH = Âᵀ_norm · (dZ Wᵀ)
    let y = dz.dot(&w.t());
    let dh = gcn_aggregate_transpose(mg, &y);
    (LayerGrads::Dense { dw, db }, dh)
}

pub(crate) fn sage_fwd_cached(
    mg: &MessageGraph,
    h: &Array2<f64>,
    w_self: &Array2<f64>,
    w_neigh: &Array2<f64>,
    b: &Array1<f64>,
) -> (Array2<f64>, LayerCache) {
    let mean = neighbor_mean(mg, h);
    let z = h.dot(w_self) + mean.dot(w_neigh) + b;
    (
        z,
        LayerCache::Sage {
            h: h.clone(),
            mean,
        },
    )
}

pub(crate) fn sage_bwd(
    mg: &MessageGraph,
    cache: &LayerCache,
    w_self: &Array2<f64>,
    w_neigh: &Array2<f64>,
    dz: &Array2<f64>,
) -> (LayerGrads, Array2<f64>) {
    let LayerCache::Sage { h, mean } = cache else {
        unreachable!("sage backward requires a sage cache");
    };
    let dw_self = h.t().dot(dz);
    let dw_neigh = mean.t().dot(dz);
    let db = dz.sum_axis(Axis(0));
    let y = dz.dot(&w_neigh.t());
    let dh = dz.dot(&w_self.t()) + neighbor_mean_transpose(mg, &y);
    (
        LayerGrads::Sage {
            dw_self,
            dw_neigh,
            db,
        },
        dh,
    )
}

pub(crate) fn gin_fwd_cached(
    mg: &MessageGraph,
    h: &Array2<f64>,
    w1: &Array2<f64>,
    b1: &Array1<f64>,
    w2: &Array2<f64>,
    b2: &Array1<f64>,
) -> (Array2<f64>, LayerCache) {
    let s = h * (1.0 + GIN_EPS) + neighbor_sum(mg, h);
    let u1 = affine(&s, w1, b1);
    let a1 = relu(&u1);
    let z = affine(&a1, w2, b2);
    (z, LayerCache::Gin { s, u1, a1 })
}

pub(crate) fn gin_bwd(
    mg: &MessageGraph,
    cache: &LayerCache,
    w1: &Array2<f64>,
    w2: &Array2<f64>,
    dz: &Array2<f64>,
) -> (LayerGrads, Array2<f64>) {
    let LayerCache::Gin { s, u1, a1 } = cache else {
        unreachable!("gin backward requires a gin cache");
    };
    let dw2 = a1.t().dot(dz);
    let db2 = dz.sum_axis(Axis(0));
    let da1 = dz.dot(&w2.t());
    let du1 = relu_backward(&da1, u1);
    let dw1 = s.t().dot(&du1);
    let db1 = du1.sum_axis(Axis(0));
    let ds = du1.dot(&w1.t());
    let dh = &ds * (1.0 + GIN_EPS) + neighbor_sum_transpose(mg, &ds);
    (
        LayerGrads::Gin {
            dw1,
            db1,
            dw2,
            db2,
        },
        dh,
    )
}

pub(crate) fn gat_forward_cached(
    mg: &MessageGraph,
    h: &Array2<f64>,
    w: &Array2<f64>,
    a_src: &Array1<f64>,
    a_dst: &Array1<f64>,
    b: &Array1<f64>,
) -> (Array2<f64>, LayerCache) {
    let n = mg.node_count();
    let g = h.dot(w);
    // Per-row attention contributions: s_src[u] = a_src·g[u], s_dst[v] = a_dst·g[v].
    let s_src = g.dot(a_src);
    let s_dst = g.dot(a_dst);

    let mut z = Array2::zeros((n, w.ncols()));
    let mut pres: Vec<Vec<f64>> = Vec::with_capacity(n);
    let mut alphas: Vec<Vec<f64>> = Vec::with_capacity(n);
    for v in 0..n {
        // Candidate sources: in-neighbors (multiplicity kept) plus the node itself.
        let sources = gat_sources(mg, v);
        let pre: Vec<f64> = sources
            .iter()
            .map(|&u| leaky(s_src[u] + s_dst[v]))
            .collect();
        let alpha = stable_softmax(&pre);
        for (k, &u) in sources.iter().enumerate() {
            let contrib = g.row(u).to_owned() * alpha[k];
            let mut row = z.row_mut(v);
            row += &contrib;
        }
        let mut row = z.row_mut(v);
        row += b;
        pres.push(pre);
        alphas.push(alpha);
    }
    (
        z,
        LayerCache::Gat {
            h: h.clone(),
            g,
            pres,
            alphas,
        },
    )
}

pub(crate) fn gat_bwd(
    mg: &MessageGraph,
    cache: &LayerCache,
    w: &Array2<f64>,
    a_src: &Array1<f64>,
    a_dst: &Array1<f64>,
    dz: &Array2<f64>,
) -> (LayerGrads, Array2<f64>) {
    let LayerCache::Gat { h, g, pres, alphas } = cache else {
        unreachable!("gat backward requires a gat cache");
    };
    let n = mg.node_count();
    let d_out = g.ncols();
    let db = dz.sum_axis(Axis(0));
    let mut dg = Array2::zeros((n, d_out));
    let mut da_src = Array1::zeros(d_out);
    let mut da_dst = Array1::zeros(d_out);

    for v in 0..n {
        let sources = gat_sources(mg, v);
        let alpha = &alphas[v];
        let pre = &pres[v];
        let dout = dz.row(v);

        // dα_k = dout · g[u_k]; also push the direct path dG[u_k] += α_k · dout.
        let mut dalpha = vec![0.0; sources.len()];
        for (k, &u) in sources.iter().enumerate() {
            dalpha[k] = dout.dot(&g.row(u));
            let contrib = dout.to_owned() * alpha[k];
            let mut row = dg.row_mut(u);
            row += &contrib;
        }
        // Softmax backward: de_k = α_k (dα_k − Σ_j α_j dα_j).
        let dot: f64 = alpha.iter().zip(&dalpha).map(|(a, d)| a * d).sum();
        for (k, &u) in sources.iter().enumerate() {
            let de = alpha[k] * (dalpha[k] - dot);
            // LeakyReLU backward on the raw score.
            let dpre = de * if pre[k] > 0.0 { 1.0 } else { GAT_LEAKY_SLOPE };
            // score = a_src·g[u] + a_dst·g[v]
            da_src.scaled_add(dpre, &g.row(u));
            da_dst.scaled_add(dpre, &g.row(v));
            dg.row_mut(u).scaled_add(dpre, a_src);
            dg.row_mut(v).scaled_add(dpre, a_dst);
        }
    }

    let dw = h.t().dot(&dg);
    let dh = dg.dot(&w.t());
    (
        LayerGrads::Gat {
            dw,
            db,
            da_src,
            da_dst,
        },
        dh,
    )
}

/// Candidate message sources for GAT's softmax: in-neighbors plus self, appended
/// last. An explicit self-edge in the graph additionally appears among the
/// in-neighbors, consistent with multiplicity counting everywhere else.
fn gat_sources(mg: &MessageGraph, v: usize) -> Vec<usize> {
    let mut sources = mg.in_neighbors(v).to_vec();
    sources.push(v);
    sources
}

fn leaky(x: f64) -> f64 {
    if x > 0.0 {
        x
    } else {
        GAT_LEAKY_SLOPE * x
    }
}

/// Numerically stable softmax (max-subtracted).
fn stable_softmax(scores: &[f64]) -> Vec<f64> {
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}
