//! From-scratch graph neural networks for binary graph classification.
//!
//! Five architectures share one skeleton: a stack of graph layers (8→16, then 16→16)
//! with ReLU after every layer except the last, a mean readout over nodes, and a dense
//! head mapping the 16-dim graph embedding to 2 logits. The MLP baseline uses the same
//! skeleton with edge-blind dense layers.
//!
//! * **MLP** — per-node dense layers; ignores edges entirely.
//! * **GCN** — symmetric-normalized convolution `D̂^{-1/2} Â D̂^{-1/2} H W + b` with
//!   self-loops added to the message adjacency.
//! * **GraphSAGE** — `H W_self + mean_{u∈N(v)} H(u) W_neigh + b`, mean aggregator,
//!   empty neighborhoods contribute a zero vector.
//! * **GIN** — `mlp2((1+ε)·H(v) + Σ_{u∈N(v)} H(u))` with ε = 0 and an internal
//!   two-layer perceptron (ReLU between its maps, no outer activation).
//! * **GAT** — single-head attention with LeakyReLU(0.2) scoring and softmax over
//!   in-neighbors ∪ self.
//!
//! Message passing follows the [`Direction`] flag: cash-flow edges are directed, and
//! by default the adjacency is symmetrized (reverse edges added for message passing
//! only) so upstream and downstream behavior both inform embeddings; `forward_edges`
//! keeps the raw direction for ablation.
//!
//! Training is full-batch gradient descent with Adam on the mean cross-entropy over
//! 2 logits, with hand-written reverse-mode gradients per layer (no autodiff). All
//! randomness flows from a seeded splitmix64 sequence, making checkpoints
//! bit-reproducible across platforms.

mod adjacency;
mod checkpoint;
mod init;
mod layers;
mod model;
mod train;

pub use adjacency::{Direction, MessageGraph};
pub use checkpoint::{load_checkpoint, save_checkpoint, checkpoint_to_json, CheckpointError};
pub use init::{init_params, SplitMix64};
pub use layers::{
    forward_mlp, layer_forward_gat, layer_forward_gcn, layer_forward_gin, layer_forward_sage,
    readout_mean, GAT_LEAKY_SLOPE, GIN_EPS,
};
pub use model::{
    infer, model_forward, Arch, DenseParams, LayerParams, ModelConfig, ModelError, ModelParams,
    Prediction, PreparedGraph,
};
pub use train::{batch_gradients, train, TrainConfig, TrainResult};
