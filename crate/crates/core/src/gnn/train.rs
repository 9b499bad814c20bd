//! Full-batch training with hand-written backpropagation and Adam.
//!
//! One epoch is one Adam step over the mean cross-entropy of the whole training
//! batch. The batch iteration order is a seeded permutation fixed once at the
//! start of training, so accumulation order — and therefore every float — is
//! identical across runs with the same inputs and seed.

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use super::init::{init_params, SplitMix64};
use super::layers::relu_backward;
use super::model::{
    forward_traced, layer_bwd, Arch, ModelConfig, ModelError, ModelParams, PreparedGraph,
};
use crate::cashflow::CashFlowGraph;

/// Optimization hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    /// Number of full-batch Adam steps.
    pub epochs: usize,
    /// Graphs drawn from each class when a caller builds a balanced split.
    pub train_size_per_class: usize,
    /// Adam step size.
    pub learning_rate: f64,
    /// Adam first-moment decay.
    pub adam_beta1: f64,
    /// Adam second-moment decay.
    pub adam_beta2: f64,
    /// Adam denominator fuzz.
    pub adam_eps: f64,
    /// Seed for weight init and the batch permutation.
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 100,
            train_size_per_class: 100,
            learning_rate: 0.01,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_eps: 1e-8,
            seed: 42,
        }
    }
}

/// The outcome of a training run.
#[derive(Debug)]
pub struct TrainResult {
    /// Trained weights (config and seed recorded inside).
    pub params: ModelParams,
    /// Mean training loss after each epoch's step, one entry per epoch.
    pub loss_trace: Vec<f64>,
}

/// Mean cross-entropy loss and logit gradients for one graph.
///
/// Stable form: `loss = logsumexp(z) − z_y`; gradient is `softmax(z) − onehot(y)`.
fn cross_entropy(logits: &Array1<f64>, label: u8) -> (f64, Array1<f64>) {
    let m = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps = logits.mapv(|z| (z - m).exp());
    let sum: f64 = exps.sum();
    let loss = m + sum.ln() - logits[label as usize];
    let mut grad = exps / sum;
    grad[label as usize] -= 1.0;
    (loss, grad)
}

/// Backpropagates one graph's logit gradient into a flat gradient accumulator.
fn accumulate_graph_gradient(
    params: &ModelParams,
    prepared: &PreparedGraph,
    label: u8,
    scale: f64,
    grad_acc: &mut ModelParams,
) -> Result<f64, ModelError> {
    let trace = forward_traced(prepared, params)?;
    let (loss, mut dlogits) = cross_entropy(&trace.logits, label);
    dlogits *= scale;

    // Head: logits = readout·W + b.
    let readout_col = trace
        .readout
        .view()
        .into_shape_with_order((trace.readout.len(), 1))
        .expect("readout reshapes to a column");
    let dlogits_row = dlogits
        .view()
        .into_shape_with_order((1, dlogits.len()))
        .expect("dlogits reshapes to a row");
    grad_acc.head.w += &readout_col.dot(&dlogits_row);
    grad_acc.head.b += &dlogits;
    let dreadout = params.head.w.dot(&dlogits);

    // Readout: mean over rows → every node gets dreadout / n.
    let n = trace.h_final.nrows();
    let mut dh: Array2<f64> = Array2::zeros(trace.h_final.raw_dim());
    let per_node = &dreadout / n as f64;
    for mut row in dh.rows_mut() {
        row += &per_node;
    }

    // Graph layers, last to first. `dh` arrives as the gradient at layer i's
    // *post-activation* output; peel the ReLU (when one was applied) to get dZ.
    let total = params.layers.len();
    for i in (0..total).rev() {
        let (cache, pre) = &trace.layer_state[i];
        let dz = if params.config.arch != Arch::Gin && i + 1 < total {
            relu_backward(&dh, pre)
        } else {
            dh
        };
        let (layer_grads, dh_prev) = layer_bwd(&params.layers[i], &prepared.mg, cache, &dz);
        grad_acc.layers[i].accumulate(&layer_grads);
        dh = dh_prev;
    }
    Ok(loss)
}

/// Computes the flat gradient of the mean cross-entropy over `batch`, plus the
/// loss itself. The gradient vector uses the same layout as
/// [`ModelParams::flatten`]; graphs are visited in slice order.
pub fn batch_gradients(
    params: &ModelParams,
    batch: &[(PreparedGraph, u8)],
) -> Result<(Vec<f64>, f64), ModelError> {
    if batch.is_empty() {
        return Err(ModelError::config("gradient batch is empty"));
    }
    let scale = 1.0 / batch.len() as f64;
    let mut grad_acc = params.zeros_like();
    let mut loss_sum = 0.0;
    for (prepared, label) in batch {
        loss_sum +=
            accumulate_graph_gradient(params, prepared, *label, scale, &mut grad_acc)?;
    }
    Ok((grad_acc.flatten(), loss_sum * scale))
}

/// Prepares labeled graphs for training, validating labels and class balance.
fn prepare_batch(
    graphs: &[CashFlowGraph],
    config: &ModelConfig,
) -> Result<Vec<(PreparedGraph, u8)>, ModelError> {
    let mut batch = Vec::with_capacity(graphs.len());
    let (mut saw_pos, mut saw_neg) = (false, false);
    for graph in graphs {
        let label = graph.label.ok_or(ModelError::MissingLabel)?;
        match label {
            0 => saw_neg = true,
            _ => saw_pos = true,
        }
        batch.push((PreparedGraph::new(graph, config)?, label));
    }
    if !(saw_pos && saw_neg) {
        return Err(ModelError::DegenerateDataset);
    }
    Ok(batch)
}

/// Fisher–Yates shuffle driven by splitmix64 (stable across platforms).
fn shuffled_indices(len: usize, rng: &mut SplitMix64) -> Vec<usize> {
    let mut order: Vec<usize> = (0..len).collect();
    for i in (1..len).rev() {
        let j = (rng.next_u64() % (i as u64 + 1)) as usize;
        order.swap(i, j);
    }
    order
}

/// Trains a model on labeled graphs.
///
/// Initializes from `train.seed`, fixes a seeded batch permutation, then runs
/// `epochs` full-batch Adam steps on the mean cross-entropy.
///
/// # Errors
///
/// [`ModelError::MissingLabel`] / [`ModelError::DegenerateDataset`] for bad
/// supervision, feature/shape errors from preparation, and
/// [`ModelError::NumericalDivergence`] if the loss leaves the finite range.
pub fn train(
    graphs: &[CashFlowGraph],
    model_config: &ModelConfig,
    train_config: &TrainConfig,
) -> Result<TrainResult, ModelError> {
    let batch = prepare_batch(graphs, model_config)?;
    train_prepared(batch, model_config, train_config)
}

/// [`train`] on graphs that are already prepared and labeled.
pub(crate) fn train_prepared(
    batch: Vec<(PreparedGraph, u8)>,
    model_config: &ModelConfig,
    train_config: &TrainConfig,
) -> Result<TrainResult, ModelError> {
    if batch.is_empty() {
        return Err(ModelError::DegenerateDataset);
    }
    let mut params = init_params(model_config, train_config.seed)?;

    // Fix the iteration order once, up front; epochs then accumulate in the
    // exact same order every time.
    let mut perm_rng = SplitMix64::new(train_config.seed ^ 0x5DEE_CE66_D1CE_B00C);
    let order = shuffled_indices(batch.len(), &mut perm_rng);
    let mut slots: Vec<Option<(PreparedGraph, u8)>> = batch.into_iter().map(Some).collect();
    let items: Vec<(PreparedGraph, u8)> = order
        .iter()
        .map(|&i| slots[i].take().expect("permutation visits each index once"))
        .collect();

    let mut flat = params.flatten();
    let mut adam = AdamState::new(flat.len());
    let mut loss_trace = Vec::with_capacity(train_config.epochs);
    for epoch in 0..train_config.epochs {
        params.apply_flat(&flat)?;
        let (grads, loss) = batch_gradients(&params, &items)?;
        if !loss.is_finite() || grads.iter().any(|g| !g.is_finite()) {
            return Err(ModelError::NumericalDivergence { epoch });
        }
        adam.step(&mut flat, &grads, train_config);
        loss_trace.push(loss);
    }
    params.apply_flat(&flat)?;
    Ok(TrainResult { params, loss_trace })
}

/// Adam's moment buffers and step counter.
struct AdamState {
    m: Vec<f64>,
    v: Vec<f64>,
    t: u32,
}

impl AdamState {
    fn new(len: usize) -> Self {
        AdamState {
            m: vec![0.0; len],
            v: vec![0.0; len],
            t: 0,
        }
    }

    fn step(&mut self, flat: &mut [f64], grads: &[f64], cfg: &TrainConfig) {
        self.t += 1;
        let b1 = cfg.adam_beta1;
        let b2 = cfg.adam_beta2;
        let bias1 = 1.0 - b1.powi(self.t as i32);
        let bias2 = 1.0 - b2.powi(self.t as i32);
        for i in 0..flat.len() {
            self.m[i] = b1 * self.m[i] + (1.0 - b1) * grads[i];
            self.v[i] = b2 * self.v[i] + (1.0 - b2) * grads[i] * grads[i];
            let m_hat = self.m[i] / bias1;
            let v_hat = self.v[i] / bias2;
            flat[i] -= cfg.learning_rate * m_hat / (v_hat.sqrt() + cfg.adam_eps);
        }
    }
}
