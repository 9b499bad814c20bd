//! End-to-end classification: parse → build → featurize → classify, with
//! per-phase wall-clock timing.
//!
//! The pipeline is the library-level engine behind both the CLI `classify`
//! subcommand and the HTTP service. Every phase boundary sits on a pure
//! function, so the timing report maps one-to-one onto the stage breakdown:
//! `parse_ms` covers input decoding (or RPC fetch), `build_ms` covers transfer
//! extraction, graph construction, and feature assembly, `classify_ms` covers
//! the model forward pass.
//!
//! Transactions that move nothing produce an empty transfer list. At this
//! boundary that is *not* an error: a monitoring consumer must not treat boring
//! transactions as failures, so such inputs yield `prediction = 0` with the
//! `no_transfers` flag set and zeroed graph statistics.

use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cashflow::{construct_graph, graph_stats, CashFlowGraph, GraphError, GraphStats};
use crate::features::{assemble_features, AccountDb};
use crate::gnn::{infer, ModelError, ModelParams, Prediction};
use crate::txparse::{
    extract_transfers, fetch_transaction, parse_fixture, FetchError, FixtureError,
    RawTransaction, TxHash,
};

/// Wall-clock milliseconds spent in each pipeline phase.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimingReport {
    /// Input decoding: fixture parsing, or the RPC fetch in RPC mode.
    pub parse_ms: f64,
    /// Transfer extraction + graph construction + feature assembly.
    pub build_ms: f64,
    /// Model forward pass.
    pub classify_ms: f64,
    /// Whole pipeline, measured around the other three phases.
    pub total_ms: f64,
}

/// The result of classifying one transaction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassifyResponse {
    pub tx_hash: TxHash,
    /// 1 = price-manipulation attack, 0 = benign.
    pub prediction: u8,
    /// Positive-class probability in `[0, 1]`.
    pub score: f64,
    /// Set when the transaction moved no assets; such inputs are reported as
    /// benign rather than failing the pipeline.
    pub no_transfers: bool,
    pub timing: TimingReport,
    pub graph_stats: GraphStats,
}

/// A pipeline failure, tagged with the phase that produced it.
#[derive(Debug, Error)]
pub enum PipelineError {
    /// Fixture bytes could not be decoded.
    #[error("parse: {0}")]
    Parse(#[from] FixtureError),
    /// RPC fetch failed.
    #[error("fetch: {0}")]
    Fetch(#[from] FetchError),
    /// Graph construction or feature assembly failed.
    #[error("build: {0}")]
    Build(#[from] GraphError),
    /// The model rejected the graph.
    #[error("classify: {0}")]
    Classify(#[from] ModelError),
}

impl PipelineError {
    /// Which pipeline phase failed: `"parse"`, `"fetch"`, `"build"`, or
    /// `"classify"`. Service and CLI error reports attribute failures by this.
    pub fn phase(&self) -> &'static str {
        match self {
            PipelineError::Parse(_) => "parse",
            PipelineError::Fetch(_) => "fetch",
            PipelineError::Build(_) => "build",
            PipelineError::Classify(_) => "classify",
        }
    }
}

fn ms_since(start: Instant) -> f64 {
    start.elapsed().as_secs_f64() * 1e3
}

/// Builds the featurized cash flow graph of a transaction, or `None` when the
/// transaction moved nothing.
fn build_graph(
    tx: &RawTransaction,
    db: &AccountDb,
) -> Result<Option<CashFlowGraph>, PipelineError> {
    let report = extract_transfers(tx);
    if report.transfers.is_empty() {
        return Ok(None);
    }
    let graph = construct_graph(&report.transfers)?;
    Ok(Some(assemble_features(graph, db)?))
}

fn respond(
    tx_hash: TxHash,
    outcome: Option<(Prediction, GraphStats)>,
    parse_ms: f64,
    build_ms: f64,
    classify_ms: f64,
    started: Instant,
) -> ClassifyResponse {
    let (prediction, score, no_transfers, stats) = match outcome {
        Some((p, stats)) => (p.label, p.score, false, stats),
        None => (
            0,
            0.0,
            true,
            GraphStats {
                node_count: 0,
                edge_count: 0,
                asset_count: 0,
                max_node_degree: 0,
            },
        ),
    };
    ClassifyResponse {
        tx_hash,
        prediction,
        score,
        no_transfers,
        timing: TimingReport {
            parse_ms,
            build_ms,
            classify_ms,
            total_ms: ms_since(started),
        },
        graph_stats: stats,
    }
}

/// Classifies an already-decoded transaction (`parse_ms` records the decode
/// cost the caller measured, or the fetch time in RPC mode).
pub fn classify_transaction(
    tx: &RawTransaction,
    params: &ModelParams,
    db: &AccountDb,
    parse_ms: f64,
    started: Instant,
) -> Result<ClassifyResponse, PipelineError> {
    let build_start = Instant::now();
    let graph = build_graph(tx, db)?;
    let build_ms = ms_since(build_start);

    let Some(graph) = graph else {
        return Ok(respond(tx.tx_hash, None, parse_ms, build_ms, 0.0, started));
    };

    let classify_start = Instant::now();
    let prediction = infer(&graph, params)?;
    let classify_ms = ms_since(classify_start);

    let stats = graph_stats(&graph);
    Ok(respond(
        tx.tx_hash,
        Some((prediction, stats)),
        parse_ms,
        build_ms,
        classify_ms,
        started,
    ))
}

/// Runs the full pipeline on fixture bytes.
pub fn classify_fixture(
    raw: &[u8],
    params: &ModelParams,
    db: &AccountDb,
) -> Result<ClassifyResponse, PipelineError> {
    let started = Instant::now();
    let tx = parse_fixture(raw)?;
    let parse_ms = ms_since(started);
    classify_transaction(&tx, params, db, parse_ms, started)
}

/// Runs the full pipeline against a live archive node: fetches the transaction
/// by hash, then classifies it. The fetch is reported as the parse phase.
pub async fn classify_rpc(
    tx_hash: TxHash,
    endpoint: &str,
    params: &ModelParams,
    db: &AccountDb,
) -> Result<ClassifyResponse, PipelineError> {
    let started = Instant::now();
    let tx = fetch_transaction(endpoint, &tx_hash).await?;
    let parse_ms = ms_since(started);
    classify_transaction(&tx, params, db, parse_ms, started)
}
