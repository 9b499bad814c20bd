//! Latency measurement for the classification phase and the full pipeline.
//!
//! Two distributions matter operationally: how long `infer` takes on a graph
//! that is already featurized (the hot path of a service with warm caches), and
//! how long the whole fixture pipeline takes cold (parse → build → featurize →
//! classify). The bench builds a bed of deterministic synthetic transactions at
//! a configurable node count, loads the model once, and reports percentiles —
//! model load time is excluded by construction.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::cashflow::construct_graph;
use crate::features::{assemble_features, AccountDb};
use crate::gnn::{infer, ModelParams};
use crate::pipeline::classify_fixture;
use crate::txparse::{
    fixture_to_json, Address, CallKind, CallTrace, Chain, RawTransaction, TxHash,
};
use primitive_types::U256;

/// Bench workload parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BenchConfig {
    /// Number of transactions to measure.
    pub graphs: usize,
    /// Nodes per generated transaction graph.
    pub nodes: usize,
    /// Workload generation seed.
    pub seed: u64,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            graphs: 1000,
            nodes: 100,
            seed: 42,
        }
    }
}

/// Summary statistics of one latency distribution, in milliseconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatencyStats {
    pub p50_ms: f64,
    pub p95_ms: f64,
    pub mean_ms: f64,
    pub min_ms: f64,
    pub max_ms: f64,
}

impl LatencyStats {
    fn from_samples(mut samples: Vec<f64>) -> LatencyStats {
        samples.sort_by(|a, b| a.partial_cmp(b).expect("durations are finite"));
        let n = samples.len();
        let percentile = |p: f64| samples[((p * (n - 1) as f64).round()) as usize];
        LatencyStats {
            p50_ms: percentile(0.50),
            p95_ms: percentile(0.95),
            mean_ms: samples.iter().sum::<f64>() / n as f64,
            min_ms: samples[0],
            max_ms: samples[n - 1],
        }
    }
}

/// Latency report for one bench run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    /// Workload shape this report was measured on.
    pub graphs: usize,
    pub nodes: usize,
    /// `infer` on pre-featurized graphs.
    pub classify: LatencyStats,
    /// Full fixture pipeline (parse + build + featurize + classify).
    pub pipeline: LatencyStats,
}

fn bench_addr(node: usize) -> Address {
    let mut bytes = [0u8; 20];
    bytes[0] = 0xbe;
    bytes[12..20].copy_from_slice(&(node as u64).to_be_bytes());
    Address(bytes)
}

/// A deterministic `nodes`-account transaction: one native-value ring.
fn bench_transaction(idx: usize, nodes: usize, seed: u64) -> RawTransaction {
    let mut hash = [0u8; 32];
    hash[0..8].copy_from_slice(&seed.to_be_bytes());
    hash[8..16].copy_from_slice(&(idx as u64).to_be_bytes());
    // Amounts vary per transaction so graphs are not literally identical.
    let amount = 1_000_000 + (seed.wrapping_mul(31).wrapping_add(idx as u64) % 1_000_000);
    let traces = (0..nodes)
        .map(|i| CallTrace {
            caller: bench_addr(i),
            callee: bench_addr((i + 1) % nodes),
            value: U256::from(amount + i as u64),
            depth: i as u32,
            call_kind: CallKind::Call,
        })
        .collect();
    RawTransaction {
        tx_hash: TxHash(hash),
        chain: Chain::Ethereum,
        traces,
        logs: vec![],
        label: None,
    }
}

/// Measures classification and pipeline latency over a synthetic workload.
///
/// # Errors
///
/// [`HarnessError::Config`] for degenerate workloads; pipeline errors propagate
/// (they cannot occur on the generated inputs short of a model/feature
/// dimension mismatch).
pub fn run_bench(
    cfg: &BenchConfig,
    params: &ModelParams,
    db: &AccountDb,
) -> Result<BenchReport, HarnessError> {
    if cfg.graphs == 0 {
        return Err(HarnessError::config("bench needs at least one graph"));
    }
    if cfg.nodes < 2 {
        return Err(HarnessError::config("bench graphs need at least two nodes"));
    }

    // Prepare the workload up front: fixtures for the cold path, featurized
    // graphs for the hot path. Neither preparation is timed.
    let transactions: Vec<RawTransaction> = (0..cfg.graphs)
        .map(|i| bench_transaction(i, cfg.nodes, cfg.seed))
        .collect();
    let fixtures: Vec<Vec<u8>> = transactions
        .iter()
        .map(|tx| fixture_to_json(tx).into_bytes())
        .collect();
    let featurized: Vec<_> = transactions
        .iter()
        .map(|tx| {
            let transfers = crate::txparse::extract_transfers(tx).transfers;
            let graph = construct_graph(&transfers)?;
            assemble_features(graph, db)
        })
        .collect::<Result<_, _>>()?;

    let mut classify_samples = Vec::with_capacity(cfg.graphs);
    for graph in &featurized {
        let start = Instant::now();
        let prediction = infer(graph, params)?;
        classify_samples.push(start.elapsed().as_secs_f64() * 1e3);
        // Keep the optimizer honest: the prediction feeds a check.
        debug_assert!((0.0..=1.0).contains(&prediction.score));
        std::hint::black_box(prediction);
    }

    let mut pipeline_samples = Vec::with_capacity(cfg.graphs);
    for fixture in &fixtures {
        let start = Instant::now();
        let response = classify_fixture(fixture, params, db)?;
        pipeline_samples.push(start.elapsed().as_secs_f64() * 1e3);
        std::hint::black_box(response);
    }

    Ok(BenchReport {
        graphs: cfg.graphs,
        nodes: cfg.nodes,
        classify: LatencyStats::from_samples(classify_samples),
        pipeline: LatencyStats::from_samples(pipeline_samples),
    })
}
