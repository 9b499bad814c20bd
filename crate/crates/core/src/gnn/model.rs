//! Model assembly: configuration, parameter containers, the stacked forward
//! pass, and single-graph inference.
//!
//! A model is `num_layers` graph layers (all of one architecture) followed by a
//! mean readout and a dense classification head. ReLU is applied after every
//! graph layer except the last; GIN is the exception — its nonlinearity lives
//! inside its two-layer perceptron, so it never gets an outer activation.

use std::fmt;
use std::str::FromStr;

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::adjacency::{Direction, MessageGraph};
use super::layers::{
    self, dense_bwd, dense_fwd_cached, gat_bwd, gat_forward_cached, gcn_bwd, gcn_fwd_cached,
    gin_bwd, gin_fwd_cached, sage_bwd, sage_fwd_cached, LayerCache, LayerGrads,
};
use crate::cashflow::CashFlowGraph;
use crate::features::FEATURE_DIM;

/// Errors from model construction, forward passes, and training.
#[derive(Debug, Error)]
pub enum ModelError {
    /// Tensor dimensions disagree with the configuration or each other.
    #[error("shape mismatch: {message}")]
    Shape { message: String },
    /// The graph has no feature matrix; run feature assembly first.
    #[error("graph has no feature matrix; assemble features before classifying")]
    FeatureMissing,
    /// The graph has no nodes, so there is nothing to read out.
    #[error("cannot run a model on an empty graph")]
    EmptyGraph,
    /// A training set with fewer than two classes cannot fit a classifier.
    #[error("training set does not contain both classes")]
    DegenerateDataset,
    /// A training graph is missing its supervision label.
    #[error("training graph has no label")]
    MissingLabel,
    /// The loss became non-finite during optimization.
    #[error("training diverged: non-finite loss at epoch {epoch}")]
    NumericalDivergence { epoch: usize },
    /// The configuration itself is unusable (zero layers, zero dims, ...).
    #[error("invalid model configuration: {message}")]
    Config { message: String },
}

impl ModelError {
    pub(crate) fn shape(message: impl Into<String>) -> Self {
        ModelError::Shape {
            message: message.into(),
        }
    }

    pub(crate) fn config(message: impl Into<String>) -> Self {
        ModelError::Config {
            message: message.into(),
        }
    }
}

/// Which message-passing architecture the graph layers use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Arch {
    /// Edge-blind per-node MLP baseline.
    Mlp,
    /// Graph convolution with symmetric degree normalization.
    Gcn,
    /// GraphSAGE with mean aggregation.
    #[serde(rename = "graphsage")]
    GraphSage,
    /// Graph isomorphism network (sum aggregation + inner 2-layer MLP).
    Gin,
    /// Single-head graph attention.
    Gat,
}

impl Arch {
    /// All architectures, in the canonical benchmarking order.
    pub const ALL: [Arch; 5] = [Arch::Mlp, Arch::Gcn, Arch::GraphSage, Arch::Gin, Arch::Gat];

    /// Stable lowercase name (matches the serialized form).
    pub fn as_str(&self) -> &'static str {
        match self {
            Arch::Mlp => "mlp",
            Arch::Gcn => "gcn",
            Arch::GraphSage => "graphsage",
            Arch::Gin => "gin",
            Arch::Gat => "gat",
        }
    }
}

impl fmt::Display for Arch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Arch {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "mlp" => Ok(Arch::Mlp),
            "gcn" => Ok(Arch::Gcn),
            "graphsage" => Ok(Arch::GraphSage),
            "gin" => Ok(Arch::Gin),
            "gat" => Ok(Arch::Gat),
            other => Err(format!(
                "unknown architecture {other:?} (expected one of: mlp, gcn, graphsage, gin, gat)"
            )),
        }
    }
}

/// Hyperparameters describing a model's shape (not its weights).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub arch: Arch,
    /// Number of stacked graph layers.
    pub num_layers: usize,
    /// Input feature width (per node).
    pub in_dim: usize,
    /// Hidden width of every graph layer.
    pub hidden_dim: usize,
    /// Output logits (2 for the binary classifier).
    pub out_dim: usize,
    /// Edge orientation for message passing.
    pub direction: Direction,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            arch: Arch::GraphSage,
            num_layers: 2,
            in_dim: FEATURE_DIM,
            hidden_dim: 16,
            out_dim: 2,
            direction: Direction::Symmetrized,
        }
    }
}

impl ModelConfig {
    /// Rejects configurations that cannot produce a runnable model.
    pub fn validate(&self) -> Result<(), ModelError> {
        if self.num_layers == 0 {
            return Err(ModelError::config("num_layers must be at least 1"));
        }
        if self.in_dim == 0 || self.hidden_dim == 0 || self.out_dim == 0 {
            return Err(ModelError::config("all dimensions must be nonzero"));
        }
        Ok(())
    }

    /// Input width of graph layer `i` (layer 0 reads the features).
    pub(crate) fn layer_in_dim(&self, i: usize) -> usize {
        if i == 0 {
            self.in_dim
        } else {
            self.hidden_dim
        }
    }
}

/// A dense affine map: weight matrix plus bias vector.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseParams {
    /// `d_in × d_out` weight matrix.
    pub w: Array2<f64>,
    /// Length-`d_out` bias.
    pub b: Array1<f64>,
}

impl DenseParams {
    pub(crate) fn zeros(d_in: usize, d_out: usize) -> Self {
        DenseParams {
            w: Array2::zeros((d_in, d_out)),
            b: Array1::zeros(d_out),
        }
    }
}

/// Parameters of one graph layer; the variant matches the architecture.
#[derive(Debug, Clone, PartialEq)]
pub enum LayerParams {
    /// MLP baseline: a plain dense map.
    Dense(DenseParams),
    /// GCN: dense map applied to the normalized aggregate.
    Gcn(DenseParams),
    /// GraphSAGE: separate self and neighbor maps sharing one bias.
    Sage {
        w_self: Array2<f64>,
        w_neigh: Array2<f64>,
        b: Array1<f64>,
    },
    /// GIN: the two dense maps of the inner perceptron.
    Gin { lin1: DenseParams, lin2: DenseParams },
    /// GAT: shared projection plus the split attention vector.
    Gat {
        lin: DenseParams,
        a_src: Array1<f64>,
        a_dst: Array1<f64>,
    },
}

impl LayerParams {
    /// Flattens this layer's tensors in canonical order (row-major matrices).
    fn flatten_into(&self, out: &mut Vec<f64>) {
        match self {
            LayerParams::Dense(d) | LayerParams::Gcn(d) => {
                out.extend(d.w.iter());
                out.extend(d.b.iter());
            }
            LayerParams::Sage {
                w_self,
                w_neigh,
                b,
            } => {
                out.extend(w_self.iter());
                out.extend(w_neigh.iter());
                out.extend(b.iter());
            }
            LayerParams::Gin { lin1, lin2 } => {
                out.extend(lin1.w.iter());
                out.extend(lin1.b.iter());
                out.extend(lin2.w.iter());
                out.extend(lin2.b.iter());
            }
            LayerParams::Gat { lin, a_src, a_dst } => {
                out.extend(lin.w.iter());
                out.extend(lin.b.iter());
                out.extend(a_src.iter());
                out.extend(a_dst.iter());
            }
        }
    }

    /// Reads this layer's tensors back from `src`, advancing the cursor.
    fn unflatten_from(&mut self, src: &[f64], cursor: &mut usize) {
        fn take_matrix(m: &mut Array2<f64>, src: &[f64], cursor: &mut usize) {
            for slot in m.iter_mut() {
                *slot = src[*cursor];
                *cursor += 1;
            }
        }
        fn take_vector(v: &mut Array1<f64>, src: &[f64], cursor: &mut usize) {
            for slot in v.iter_mut() {
                *slot = src[*cursor];
                *cursor += 1;
            }
        }
        match self {
            LayerParams::Dense(d) | LayerParams::Gcn(d) => {
                take_matrix(&mut d.w, src, cursor);
                take_vector(&mut d.b, src, cursor);
            }
            LayerParams::Sage {
                w_self,
                w_neigh,
                b,
            } => {
                take_matrix(w_self, src, cursor);
                take_matrix(w_neigh, src, cursor);
                take_vector(b, src, cursor);
            }
            LayerParams::Gin { lin1, lin2 } => {
                take_matrix(&mut lin1.w, src, cursor);
                take_vector(&mut lin1.b, src, cursor);
                take_matrix(&mut lin2.w, src, cursor);
                take_vector(&mut lin2.b, src, cursor);
            }
            LayerParams::Gat { lin, a_src, a_dst } => {
                take_matrix(&mut lin.w, src, cursor);
                take_vector(&mut lin.b, src, cursor);
                take_vector(a_src, src, cursor);
                take_vector(a_dst, src, cursor);
            }
        }
    }

    fn len(&self) -> usize {
        match self {
            LayerParams::Dense(d) | LayerParams::Gcn(d) => d.w.len() + d.b.len(),
            LayerParams::Sage {
                w_self,
                w_neigh,
                b,
            } => w_self.len() + w_neigh.len() + b.len(),
            LayerParams::Gin { lin1, lin2 } => {
                lin1.w.len() + lin1.b.len() + lin2.w.len() + lin2.b.len()
            }
            LayerParams::Gat { lin, a_src, a_dst } => {
                lin.w.len() + lin.b.len() + a_src.len() + a_dst.len()
            }
        }
    }

    /// A zero-valued layer with the same tensor shapes (gradient accumulator).
    pub(crate) fn zeros_like(&self) -> LayerParams {
        match self {
            LayerParams::Dense(d) => {
                LayerParams::Dense(DenseParams::zeros(d.w.nrows(), d.w.ncols()))
            }
            LayerParams::Gcn(d) => LayerParams::Gcn(DenseParams::zeros(d.w.nrows(), d.w.ncols())),
            LayerParams::Sage {
                w_self, w_neigh, ..
            } => LayerParams::Sage {
                w_self: Array2::zeros(w_self.raw_dim()),
                w_neigh: Array2::zeros(w_neigh.raw_dim()),
                b: Array1::zeros(w_self.ncols()),
            },
            LayerParams::Gin { lin1, lin2 } => LayerParams::Gin {
                lin1: DenseParams::zeros(lin1.w.nrows(), lin1.w.ncols()),
                lin2: DenseParams::zeros(lin2.w.nrows(), lin2.w.ncols()),
            },
            LayerParams::Gat { lin, a_src, a_dst } => LayerParams::Gat {
                lin: DenseParams::zeros(lin.w.nrows(), lin.w.ncols()),
                a_src: Array1::zeros(a_src.len()),
                a_dst: Array1::zeros(a_dst.len()),
            },
        }
    }

    /// Accumulates `grads` into this layer (used when summing over a batch).
    pub(crate) fn accumulate(&mut self, grads: &LayerGrads) {
        match (self, grads) {
            (LayerParams::Dense(d), LayerGrads::Dense { dw, db })
            | (LayerParams::Gcn(d), LayerGrads::Dense { dw, db }) => {
                d.w += dw;
                d.b += db;
            }
            (
                LayerParams::Sage {
                    w_self, w_neigh, b, ..
                },
                LayerGrads::Sage {
                    dw_self,
                    dw_neigh,
                    db,
                },
            ) => {
                *w_self += dw_self;
                *w_neigh += dw_neigh;
                *b += db;
            }
            (
                LayerParams::Gin { lin1, lin2 },
                LayerGrads::Gin {
                    dw1,
                    db1,
                    dw2,
                    db2,
                },
            ) => {
                lin1.w += dw1;
                lin1.b += db1;
                lin2.w += dw2;
                lin2.b += db2;
            }
            (
                LayerParams::Gat { lin, a_src, a_dst },
                LayerGrads::Gat {
                    dw,
                    db,
                    da_src,
                    da_dst,
                },
            ) => {
                lin.w += dw;
                lin.b += db;
                *a_src += da_src;
                *a_dst += da_dst;
            }
            _ => unreachable!("gradient variant does not match layer variant"),
        }
    }
}

/// Full model state: configuration, init seed, graph layers, and the head.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub config: ModelConfig,
    /// Seed the weights were initialized from (recorded for reproducibility).
    pub seed: u64,
    pub layers: Vec<LayerParams>,
    /// Dense classification head applied to the mean readout.
    pub head: DenseParams,
}

impl ModelParams {
    /// Total number of scalar parameters.
    pub fn param_count(&self) -> usize {
        self.layers.iter().map(LayerParams::len).sum::<usize>()
            + self.head.w.len()
            + self.head.b.len()
    }

    /// Flattens all parameters into one vector. The order — layers in stack
    /// order, tensors in declaration order, matrices row-major — is the shared
    /// contract between [`flatten`](Self::flatten), [`apply_flat`](Self::apply_flat),
    /// and the gradient vectors produced by training.
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        for layer in &self.layers {
            layer.flatten_into(&mut out);
        }
        out.extend(self.head.w.iter());
        out.extend(self.head.b.iter());
        out
    }

    /// Writes a flat vector (same layout as [`flatten`](Self::flatten)) back
    /// into the structured tensors.
    pub fn apply_flat(&mut self, flat: &[f64]) -> Result<(), ModelError> {
        if flat.len() != self.param_count() {
            return Err(ModelError::shape(format!(
                "flat vector has {} values but the model has {} parameters",
                flat.len(),
                self.param_count()
            )));
        }
        let mut cursor = 0;
        for layer in &mut self.layers {
            layer.unflatten_from(flat, &mut cursor);
        }
        for slot in self.head.w.iter_mut() {
            *slot = flat[cursor];
            cursor += 1;
        }
        for slot in self.head.b.iter_mut() {
            *slot = flat[cursor];
            cursor += 1;
        }
        debug_assert_eq!(cursor, flat.len());
        Ok(())
    }

    /// A zero-valued copy with identical shapes (gradient accumulator).
    pub(crate) fn zeros_like(&self) -> ModelParams {
        ModelParams {
            config: self.config.clone(),
            seed: self.seed,
            layers: self.layers.iter().map(LayerParams::zeros_like).collect(),
            head: DenseParams::zeros(self.head.w.nrows(), self.head.w.ncols()),
        }
    }
}

/// A graph preprocessed for the model: feature matrix + message structure.
///
/// Preparing once lets training touch each graph's adjacency work a single
/// time instead of once per epoch.
#[derive(Debug)]
pub struct PreparedGraph {
    /// |V|×d feature matrix.
    pub x: Array2<f64>,
    /// Message-passing structure under the model's direction setting.
    pub mg: MessageGraph,
}

impl PreparedGraph {
    /// Extracts features and adjacency from a graph.
    ///
    /// # Errors
    ///
    /// [`ModelError::FeatureMissing`] when features were never assembled,
    /// [`ModelError::EmptyGraph`] for node-less graphs, and
    /// [`ModelError::Shape`] when the feature width differs from `in_dim`.
    pub fn new(graph: &CashFlowGraph, config: &ModelConfig) -> Result<Self, ModelError> {
        let features = graph.features.as_ref().ok_or(ModelError::FeatureMissing)?;
        if graph.nodes.is_empty() {
            return Err(ModelError::EmptyGraph);
        }
        if features.ncols() != config.in_dim {
            return Err(ModelError::shape(format!(
                "graph features are {} wide but the model expects {}",
                features.ncols(),
                config.in_dim
            )));
        }
        Ok(PreparedGraph {
            x: features.as_array().clone(),
            mg: MessageGraph::from_graph(graph, config.direction),
        })
    }
}

/// Everything the backward pass needs from one forward pass.
pub(crate) struct ForwardTrace {
    /// Per graph layer: (cache, pre-activation) — the pre-activation is what
    /// ReLU was applied to (unused for the last layer and for GIN).
    pub layer_state: Vec<(LayerCache, Array2<f64>)>,
    /// Node embeddings entering the readout.
    pub h_final: Array2<f64>,
    /// Mean readout vector.
    pub readout: Array1<f64>,
    /// Output logits.
    pub logits: Array1<f64>,
}

/// Whether ReLU follows graph layer `i` in a stack of `total` layers.
fn relu_after(arch: Arch, i: usize, total: usize) -> bool {
    arch != Arch::Gin && i + 1 < total
}

/// Runs one graph layer forward, returning the pre-activation and its cache.
fn layer_fwd(
    layer: &LayerParams,
    mg: &MessageGraph,
    h: &Array2<f64>,
) -> Result<(Array2<f64>, LayerCache), ModelError> {
    check_layer_input(layer, h)?;
    Ok(match layer {
        LayerParams::Dense(d) => dense_fwd_cached(h, &d.w, &d.b),
        LayerParams::Gcn(d) => gcn_fwd_cached(mg, h, &d.w, &d.b),
        LayerParams::Sage {
            w_self,
            w_neigh,
            b,
        } => sage_fwd_cached(mg, h, w_self, w_neigh, b),
        LayerParams::Gin { lin1, lin2 } => {
            gin_fwd_cached(mg, h, &lin1.w, &lin1.b, &lin2.w, &lin2.b)
        }
        LayerParams::Gat { lin, a_src, a_dst } => {
            gat_forward_cached(mg, h, &lin.w, a_src, a_dst, &lin.b)
        }
    })
}

fn check_layer_input(layer: &LayerParams, h: &Array2<f64>) -> Result<(), ModelError> {
    let expected = match layer {
        LayerParams::Dense(d) | LayerParams::Gcn(d) => d.w.nrows(),
        LayerParams::Sage { w_self, .. } => w_self.nrows(),
        LayerParams::Gin { lin1, .. } => lin1.w.nrows(),
        LayerParams::Gat { lin, .. } => lin.w.nrows(),
    };
    if h.ncols() != expected {
        return Err(ModelError::shape(format!(
            "layer expects {} input columns, got {}",
            expected,
            h.ncols()
        )));
    }
    Ok(())
}

/// Backward through one graph layer given `dZ` (gradient at the pre-activation).
pub(crate) fn layer_bwd(
    layer: &LayerParams,
    mg: &MessageGraph,
    cache: &LayerCache,
    dz: &Array2<f64>,
) -> (LayerGrads, Array2<f64>) {
    match layer {
        LayerParams::Dense(d) => dense_bwd(cache, &d.w, dz),
        LayerParams::Gcn(d) => gcn_bwd(mg, cache, &d.w, dz),
        LayerParams::Sage {
            w_self,
            w_neigh,
            ..
        } => sage_bwd(mg, cache, w_self, w_neigh, dz),
        LayerParams::Gin { lin1, lin2 } => gin_bwd(mg, cache, &lin1.w, &lin2.w, dz),
        LayerParams::Gat { lin, a_src, a_dst } => gat_bwd(mg, cache, &lin.w, a_src, a_dst, dz),
    }
}

/// Full forward pass with caches retained, used by training and grad checks.
pub(crate) fn forward_traced(
    prepared: &PreparedGraph,
    params: &ModelParams,
) -> Result<ForwardTrace, ModelError> {
    let total = params.layers.len();
    let mut h = prepared.x.clone();
    let mut layer_state = Vec::with_capacity(total);
    for (i, layer) in params.layers.iter().enumerate() {
        let (z, cache) = layer_fwd(layer, &prepared.mg, &h)?;
        h = if relu_after(params.config.arch, i, total) {
            layers::relu(&z)
        } else {
            z.clone()
        };
        layer_state.push((cache, z));
    }
    let readout = layers::readout_mean(&h)?;
    let logits = readout.dot(&params.head.w) + &params.head.b;
    Ok(ForwardTrace {
        layer_state,
        h_final: h,
        readout,
        logits,
    })
}

/// Computes the model's output logits for one graph.
///
/// The stack is: graph layers (ReLU between, per the architecture's rule) →
/// mean readout → dense head. Returns a length-`out_dim` logit vector.
pub fn model_forward(
    graph: &CashFlowGraph,
    params: &ModelParams,
) -> Result<Array1<f64>, ModelError> {
    let prepared = PreparedGraph::new(graph, &params.config)?;
    forward_prepared(&prepared, params)
}

/// [`model_forward`] on an already-prepared graph.
pub fn forward_prepared(
    prepared: &PreparedGraph,
    params: &ModelParams,
) -> Result<Array1<f64>, ModelError> {
    Ok(forward_traced(prepared, params)?.logits)
}

/// A classification outcome: hard label plus the positive-class probability.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    /// 1 = manipulation, 0 = benign.
    pub label: u8,
    /// Softmax probability of the positive class, in `[0, 1]`.
    pub score: f64,
}

/// Softmax probability of class 1 from a two-logit vector (stable form).
pub(crate) fn positive_probability(logits: &Array1<f64>) -> f64 {
    let m = logits[0].max(logits[1]);
    let e0 = (logits[0] - m).exp();
    let e1 = (logits[1] - m).exp();
    e1 / (e0 + e1)
}

/// Classifies one graph: softmax over the two logits, positive iff the
/// positive-class probability strictly exceeds ½ (ties go to benign).
pub fn infer(graph: &CashFlowGraph, params: &ModelParams) -> Result<Prediction, ModelError> {
    if params.config.out_dim != 2 {
        return Err(ModelError::shape(format!(
            "binary inference needs out_dim = 2, model has {}",
            params.config.out_dim
        )));
    }
    let logits = model_forward(graph, params)?;
    let score = positive_probability(&logits);
    Ok(Prediction {
        label: if score > 0.5 { 1 } else { 0 },
        score,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gnn::init_params;

    fn tiny_graph(arch: Arch) -> (CashFlowGraph, ModelParams) {
        let graph = crate::cashflow::test_support::ring_graph(4);
        let config = ModelConfig {
            arch,
            ..ModelConfig::default()
        };
        let params = init_params(&config, 7).unwrap();
        (graph, params)
    }

    #[test]
    fn flatten_apply_roundtrip_preserves_every_arch() {
        for arch in Arch::ALL {
            let config = ModelConfig {
                arch,
                ..ModelConfig::default()
            };
            let params = init_params(&config, 99).unwrap();
            let flat = params.flatten();
            assert_eq!(flat.len(), params.param_count());
            let mut other = init_params(&config, 1).unwrap();
            other.apply_flat(&flat).unwrap();
            assert_eq!(other.flatten(), flat);
            assert_eq!(other.layers, params.layers);
            assert_eq!(other.head, params.head);
        }
    }

    #[test]
    fn apply_flat_rejects_wrong_length() {
        let config = ModelConfig::default();
        let mut params = init_params(&config, 3).unwrap();
        let err = params.apply_flat(&[0.0; 3]).unwrap_err();
        assert!(matches!(err, ModelError::Shape { .. }));
    }

    #[test]
    fn forward_yields_two_finite_logits() {
        for arch in Arch::ALL {
            let (graph, params) = tiny_graph(arch);
            let logits = model_forward(&graph, &params).unwrap();
            assert_eq!(logits.len(), 2, "{arch}");
            assert!(logits.iter().all(|v| v.is_finite()), "{arch}");
        }
    }

    #[test]
    fn infer_score_in_unit_interval_and_label_consistent() {
        for arch in Arch::ALL {
            let (graph, params) = tiny_graph(arch);
            let p = infer(&graph, &params).unwrap();
            assert!((0.0..=1.0).contains(&p.score), "{arch}");
            assert_eq!(p.label, u8::from(p.score > 0.5), "{arch}");
        }
    }

    #[test]
    fn tie_score_maps_to_benign() {
        // Zero head on any input → equal logits → score exactly 0.5 → label 0.
        let (graph, mut params) = tiny_graph(Arch::GraphSage);
        params.head.w.fill(0.0);
        params.head.b.fill(0.0);
        let p = infer(&graph, &params).unwrap();
        assert_eq!(p.score, 0.5);
        assert_eq!(p.label, 0);
    }

    #[test]
    fn missing_features_is_reported() {
        let (mut graph, params) = tiny_graph(Arch::Gcn);
        graph.features = None;
        assert!(matches!(
            model_forward(&graph, &params),
            Err(ModelError::FeatureMissing)
        ));
    }

    #[test]
    fn mlp_forward_ignores_edges() {
        // Same nodes/features, different wiring: identical logits for the MLP.
        let g1 = crate::cashflow::test_support::ring_graph(5);
        let mut g2 = g1.clone();
        g2.edges = g2.edges.iter().map(|&(s, r)| (r, s)).collect();
        let config = ModelConfig {
            arch: Arch::Mlp,
            ..ModelConfig::default()
        };
        let params = init_params(&config, 11).unwrap();
        let l1 = model_forward(&g1, &params).unwrap();
        let l2 = model_forward(&g2, &params).unwrap();
        assert_eq!(l1, l2);
    }

    #[test]
    fn arch_roundtrips_through_strings() {
        for arch in Arch::ALL {
            let s = arch.as_str();
            assert_eq!(s.parse::<Arch>().unwrap(), arch);
            let json = serde_json::to_string(&arch).unwrap();
            assert_eq!(json, format!("\"{s}\""));
            assert_eq!(serde_json::from_str::<Arch>(&json).unwrap(), arch);
        }
        assert!("tgn".parse::<Arch>().is_err());
    }
}
