//! Synthetic labeled-graph generation.
//!
//! Real PMA corpora are not publicly available at interesting scale, so the
//! harness manufactures datasets where exactly one feature family (or, for
//! `structure_only`, the wiring alone) separates the classes. Each family is
//! constructed so the *other* families are indistinguishable between classes —
//! that isolation is what makes ablation and baseline comparisons meaningful.
//!
//! Generation is deterministic: one seeded ChaCha20 stream drives every draw,
//! and addresses embed the graph and node indices, so a config generates the
//! same serialized dataset on every run.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::cashflow::{construct_graph, CashFlowGraph};
use crate::features::{assemble_features, AccountDb};
use crate::txparse::{Address, AssetId, Transfer, U256};

/// Which signal the positive class carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignalFamily {
    /// Positives run a transfer cycle that drains most of the flow into one
    /// node (profit feature); negatives are uniform cycles with zero net flow.
    ProfitCycle,
    /// Positives add a high-multiplicity ping-pong between two cycle members
    /// (frequency feature); amounts cancel so no profit appears.
    FrequencyBurst,
    /// Positives run hub-and-spoke round trips in several distinct tokens
    /// (diversity feature); negatives do the same in a single asset.
    DiversitySpread,
    /// Classes differ *only* in topology: identical per-node feature multisets,
    /// different wiring. Feature-blind models cannot beat chance here.
    StructureOnly,
}

impl SignalFamily {
    /// Stable snake_case name (matches the serialized form).
    pub fn as_str(&self) -> &'static str {
        match self {
            SignalFamily::ProfitCycle => "profit_cycle",
            SignalFamily::FrequencyBurst => "frequency_burst",
            SignalFamily::DiversitySpread => "diversity_spread",
            SignalFamily::StructureOnly => "structure_only",
        }
    }
}

impl std::fmt::Display for SignalFamily {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for SignalFamily {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "profit_cycle" => Ok(SignalFamily::ProfitCycle),
            "frequency_burst" => Ok(SignalFamily::FrequencyBurst),
            "diversity_spread" => Ok(SignalFamily::DiversitySpread),
            "structure_only" => Ok(SignalFamily::StructureOnly),
            other => Err(format!(
                "unknown signal family {other:?} (expected one of: profit_cycle, \
                 frequency_burst, diversity_spread, structure_only)"
            )),
        }
    }
}

/// Parameters of one synthetic dataset.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SynthConfig {
    /// Graphs generated per class (total = 2 × this).
    pub count_per_class: usize,
    /// Inclusive node-count range sampled per graph.
    pub node_range: (usize, usize),
    pub family: SignalFamily,
    pub seed: u64,
}

impl SynthConfig {
    fn validate(&self) -> Result<(), HarnessError> {
        if self.count_per_class == 0 {
            return Err(HarnessError::config("count_per_class must be ≥ 1"));
        }
        let (lo, hi) = self.node_range;
        if lo > hi {
            return Err(HarnessError::config(format!(
                "node range {lo}..={hi} is empty"
            )));
        }
        let min_needed = match self.family {
            SignalFamily::ProfitCycle | SignalFamily::FrequencyBurst => 3,
            SignalFamily::DiversitySpread => 4,
            SignalFamily::StructureOnly => 6,
        };
        if hi < min_needed {
            return Err(HarnessError::config(format!(
                "family {} needs at least {min_needed} nodes, range tops out at {hi}",
                self.family
            )));
        }
        Ok(())
    }
}

/// Deterministic synthetic address: marker byte, then graph and node indices.
fn synth_addr(graph_idx: usize, node_idx: usize) -> Address {
    let mut bytes = [0u8; 20];
    bytes[0] = 0x5a;
    bytes[4..12].copy_from_slice(&(graph_idx as u64).to_be_bytes());
    bytes[12..20].copy_from_slice(&(node_idx as u64).to_be_bytes());
    Address(bytes)
}

/// Deterministic synthetic token contract for asset index `k`.
fn synth_token(k: usize) -> AssetId {
    let mut bytes = [0u8; 20];
    bytes[0] = 0xc0;
    bytes[12..20].copy_from_slice(&(k as u64).to_be_bytes());
    AssetId::Token(Address(bytes))
}

fn transfer(
    graph_idx: usize,
    from: usize,
    to: usize,
    asset: AssetId,
    amount: u64,
) -> Transfer {
    Transfer {
        sender: synth_addr(graph_idx, from),
        receiver: synth_addr(graph_idx, to),
        asset,
        amount: U256::from(amount),
    }
}

/// Uniform native-asset cycle v0 → v1 → … → v0.
fn ring(graph_idx: usize, n: usize, amount: u64) -> Vec<Transfer> {
    (0..n)
        .map(|i| transfer(graph_idx, i, (i + 1) % n, AssetId::Native, amount))
        .collect()
}

fn sample_n(rng: &mut ChaCha20Rng, range: (usize, usize), min: usize) -> usize {
    let lo = range.0.max(min);
    rng.gen_range(lo..=range.1)
}

fn gen_profit_cycle(
    rng: &mut ChaCha20Rng,
    graph_idx: usize,
    range: (usize, usize),
    positive: bool,
) -> Vec<Transfer> {
    let n = sample_n(rng, range, 3);
    let base: u64 = rng.gen_range(1_000_000..=1_000_000_000);
    let mut transfers = ring(graph_idx, n, base);
    if positive {
        // One swap in the cycle moves 8–64× the base flow: its receiver nets
        // profit 1 − 1/r ≥ 0.875, its sender the mirror image. Everyone else
        // stays at zero, and the raw profits still sum to zero.
        let ratio: u64 = rng.gen_range(8..=64);
        transfers[0] = transfer(graph_idx, 0, 1, AssetId::Native, base * ratio);
    }
    transfers
}

fn gen_frequency_burst(
    rng: &mut ChaCha20Rng,
    graph_idx: usize,
    range: (usize, usize),
    positive: bool,
) -> Vec<Transfer> {
    let n = sample_n(rng, range, 3);
    let base: u64 = rng.gen_range(1_000_000..=1_000_000_000);
    let mut transfers = ring(graph_idx, n, base);
    if positive {
        // A ping-pong burst between two cycle members: k transfers each way of
        // the same amount, so flows cancel (no profit) and the asset set is
        // unchanged (no diversity) — only the degree distribution moves.
        let k: u64 = rng.gen_range(4..=8);
        for _ in 0..k {
            transfers.push(transfer(graph_idx, 0, 1, AssetId::Native, base));
            transfers.push(transfer(graph_idx, 1, 0, AssetId::Native, base));
        }
    }
    transfers
}

fn gen_diversity_spread(
    rng: &mut ChaCha20Rng,
    graph_idx: usize,
    range: (usize, usize),
    positive: bool,
) -> Vec<Transfer> {
    let n = sample_n(rng, range, 4);
    let base: u64 = rng.gen_range(1_000_000..=1_000_000_000);
    let leaves = n - 1;
    let distinct = if positive {
        rng.gen_range(3..=leaves.min(6))
    } else {
        1
    };
    // Hub (node 0) round-trips the same amount with every leaf; in the positive
    // class the legs rotate through `distinct` tokens. Per-asset flows cancel,
    // and every node's degree profile matches the negative class exactly.
    let mut transfers = Vec::with_capacity(2 * leaves);
    for leaf in 1..n {
        let asset = synth_token((leaf - 1) % distinct);
        transfers.push(transfer(graph_idx, 0, leaf, asset, base));
        transfers.push(transfer(graph_idx, leaf, 0, asset, base));
    }
    transfers
}

/// The six-node motifs behind `structure_only`. Both wirings produce the exact
/// same multiset of per-node feature rows — two pure sources of out-degree 2,
/// two pure sinks of in-degree 2, two transit nodes — but the positive motif
/// closes a two-cycle between its transit nodes while the negative chains them
/// between sources and sinks. Only message passing can tell them apart; a mean
/// readout over node-local features is provably identical.
const MOTIF_POS: [(usize, usize); 6] = [(0, 2), (0, 3), (1, 2), (1, 3), (4, 5), (5, 4)];
const MOTIF_NEG: [(usize, usize); 6] = [(0, 4), (0, 2), (1, 3), (1, 5), (4, 2), (5, 3)];

fn gen_structure_only(
    rng: &mut ChaCha20Rng,
    graph_idx: usize,
    range: (usize, usize),
    positive: bool,
) -> Vec<Transfer> {
    let n = sample_n(rng, range, 6);
    let copies = n / 6;
    let base: u64 = rng.gen_range(1_000_000..=1_000_000_000);
    let motif = if positive { &MOTIF_POS } else { &MOTIF_NEG };
    let mut transfers = Vec::with_capacity(6 * copies);
    for c in 0..copies {
        let offset = 6 * c;
        for &(s, r) in motif {
            transfers.push(transfer(
                graph_idx,
                offset + s,
                offset + r,
                AssetId::Native,
                base,
            ));
        }
    }
    transfers
}

/// Generates a featurized, labeled synthetic dataset.
///
/// Graphs come out in a fixed order — for each index `i`, the negative then the
/// positive instance — and the whole dataset is a pure function of the config.
///
/// # Errors
///
/// [`HarnessError::Config`] when the range is empty, the count is zero, or the
/// range cannot accommodate the family's minimum size.
pub fn synth_dataset(cfg: &SynthConfig) -> Result<Vec<CashFlowGraph>, HarnessError> {
    cfg.validate()?;
    let mut rng = ChaCha20Rng::seed_from_u64(cfg.seed);
    let db = AccountDb::empty();
    let mut graphs = Vec::with_capacity(2 * cfg.count_per_class);
    for i in 0..cfg.count_per_class {
        for positive in [false, true] {
            let graph_idx = 2 * i + usize::from(positive);
            let transfers = match cfg.family {
                SignalFamily::ProfitCycle => {
                    gen_profit_cycle(&mut rng, graph_idx, cfg.node_range, positive)
                }
                SignalFamily::FrequencyBurst => {
                    gen_frequency_burst(&mut rng, graph_idx, cfg.node_range, positive)
                }
                SignalFamily::DiversitySpread => {
                    gen_diversity_spread(&mut rng, graph_idx, cfg.node_range, positive)
                }
                SignalFamily::StructureOnly => {
                    gen_structure_only(&mut rng, graph_idx, cfg.node_range, positive)
                }
            };
            let graph = construct_graph(&transfers).expect("generators emit ≥ 1 transfer");
            let mut graph = assemble_features(graph, &db).expect("synthetic amounts are valid");
            graph.label = Some(u8::from(positive));
            graphs.push(graph);
        }
    }
    Ok(graphs)
}
