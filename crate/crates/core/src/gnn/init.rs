//! Deterministic parameter initialization.
//!
//! Reproducibility across platforms rules out `rand`'s unspecified distributions for
//! anything that ends up inside a checkpoint, so initialization uses a hand-rolled
//! splitmix64 sequence with a documented draw order. Two builds on different machines
//! given the same seed produce bit-identical parameters.

use ndarray::{Array1, Array2};

use super::model::{Arch, DenseParams, LayerParams, ModelConfig, ModelError, ModelParams};

/// The splitmix64 generator (Steele, Lea & Flood's SplittableRandom finalizer).
///
/// State advances by the golden-gamma constant; output is the mix of the new state.
/// Simple, fast, full 64-bit period, and — unlike library RNGs — trivially stable
/// across versions and platforms.
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    /// Seeds the sequence.
    pub fn new(seed: u64) -> SplitMix64 {
        SplitMix64 { state: seed }
    }

    /// Next raw 64-bit output.
    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform draw in [0, 1): the top 53 bits scaled by 2^-53.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform draw in [lo, hi).
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }

    /// One mixing step as a pure function: used to derive per-cell seeds.
    pub fn mix(seed: u64) -> u64 {
        SplitMix64::new(seed).next_u64()
    }
}

/// Fills a (rows × cols) matrix with Glorot-uniform draws in row-major order:
/// `U(−limit, limit)` with `limit = sqrt(6 / (fan_in + fan_out))`.
fn glorot(rng: &mut SplitMix64, rows: usize, cols: usize, fan_in: usize, fan_out: usize) -> Array2<f64> {
    let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
    let mut m = Array2::zeros((rows, cols));
    for i in 0..rows {
        for j in 0..cols {
            m[[i, j]] = rng.uniform(-limit, limit);
        }
    }
    m
}

fn dense(rng: &mut SplitMix64, fan_in: usize, fan_out: usize) -> DenseParams {
    DenseParams {
        w: glorot(rng, fan_in, fan_out, fan_in, fan_out),
        b: Array1::zeros(fan_out),
    }
}

/// Initializes parameters for `config` from `seed`.
///
/// Draw order is part of the format: one splitmix64 stream, consumed by each graph
/// layer in stack order and then by the head. Within a layer, tensors initialize in
/// declaration order — weights Glorot-uniform (row-major), biases zero, and GAT's
/// attention halves as one logical `(2·d_out × 1)` Glorot tensor (`a_src` first).
pub fn init_params(config: &ModelConfig, seed: u64) -> Result<ModelParams, ModelError> {
    config.validate()?;
    let mut rng = SplitMix64::new(seed);
    let mut layers = Vec::with_capacity(config.num_layers);
    for layer_idx in 0..config.num_layers {
        let d_in = if layer_idx == 0 {
            config.in_dim
        } else {
            config.hidden_dim
        };
        let d_out = config.hidden_dim;
        let layer = match config.arch {
            Arch::Mlp => LayerParams::Dense(dense(&mut rng, d_in, d_out)),
            Arch::Gcn => LayerParams::Gcn(dense(&mut rng, d_in, d_out)),
            Arch::GraphSage => LayerParams::Sage {
                w_self: glorot(&mut rng, d_in, d_out, d_in, d_out),
                w_neigh: glorot(&mut rng, d_in, d_out, d_in, d_out),
                b: Array1::zeros(d_out),
            },
            Arch::Gin => LayerParams::Gin {
                lin1: dense(&mut rng, d_in, d_out),
                lin2: dense(&mut rng, d_out, d_out),
            },
            Arch::Gat => {
                let lin = DenseParams {
                    w: glorot(&mut rng, d_in, d_out, d_in, d_out),
                    b: Array1::zeros(d_out),
                };
                // One attention vector a = [a_src ‖ a_dst], Glorot over (2·d_out → 1).
                let attn = glorot(&mut rng, 2 * d_out, 1, 2 * d_out, 1);
                let a_src = attn.column(0).slice(ndarray::s![0..d_out]).to_owned();
                let a_dst = attn.column(0).slice(ndarray::s![d_out..2 * d_out]).to_owned();
                LayerParams::Gat { lin, a_src, a_dst }
            }
        };
        layers.push(layer);
    }
    let head = dense(&mut rng, config.hidden_dim, config.out_dim);
    Ok(ModelParams {
        config: config.clone(),
        seed,
        layers,
        head,
    })
}
