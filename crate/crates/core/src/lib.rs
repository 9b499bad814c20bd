//! Detection pipeline for price-manipulation attacks (PMAs) in EVM transactions.
//!
//! The library turns a single transaction — its call traces and event logs — into a
//! *cash flow graph*, attaches per-account features, and classifies the graph with a
//! small, from-scratch graph neural network. The stages compose as a pipeline:
//!
//! ```text
//! fixture bytes / RPC replay
//!         │  txparse:   decode + filter native & ERC-20 transfers
//!         ▼
//!     Vec<Transfer>
//!         │  cashflow:  directed multigraph (nodes = accounts, edges = transfers)
//!         ▼
//!     CashFlowGraph
//!         │  features:  node type / frequency / diversity / profit → |V|×8 matrix
//!         ▼
//!     featurized CashFlowGraph
//!         │  gnn:       2-layer MLP / GCN / GraphSAGE / GIN / GAT + mean readout
//!         ▼
//!     Prediction { label ∈ {0,1}, score ∈ [0,1] }
//! ```
//!
//! [`harness`] adds dataset management, metrics (accuracy / TPR / FPR / AUC-ROC),
//! synthetic labeled-graph generators, ablation and hyperparameter sweeps, and a
//! latency benchmark. [`pipeline`] wires the stages together with per-phase wall-clock
//! timing; the `pmascan` binary crate exposes all of it as a CLI and an HTTP service.
//!
//! Everything here is deterministic by construction: seeded PRNGs, no iteration over
//! hash maps where order can leak into results, and floating-point reductions in fixed
//! order. Identical inputs and seeds produce bitwise-identical checkpoints, splits,
//! synthetic datasets, and CSV reports.

pub mod cashflow;
pub mod features;
pub mod gnn;
pub mod harness;
pub mod pipeline;
pub mod txparse;
