//! Experiment harness: metrics, synthetic data, dataset persistence,
//! ablation/sweep drivers, and latency benchmarking.
//!
//! The harness exists to answer "does the classifier behave as claimed?"
//! end-to-end. Its cornerstone property is reproducibility: every output —
//! splits, trained checkpoints, metric tables, generated datasets — is a pure
//! function of the input bytes, the configurations, and the seeds. Drivers may
//! run cells in parallel in principle (each owns its model and RNG stream);
//! results are keyed by cell coordinates, never by completion order.

mod bench;
mod dataset;
mod metrics;
mod runs;
mod synth;

pub use bench::{run_bench, BenchConfig, BenchReport, LatencyStats};
pub use dataset::{load_dataset, save_dataset, ManifestEntry};
pub use metrics::{
    auc_roc, compute_metrics, loss_trace_csv, metrics_csv, Metrics, MetricsError,
};
pub use runs::{
    ablation_csv, ablation_run, evaluate, split_dataset, sweep, sweep_csv, AblationMask,
    SplitIndices, SweepCell,
};
pub use synth::{synth_dataset, SignalFamily, SynthConfig};

use thiserror::Error;

use crate::cashflow::GraphError;
use crate::gnn::ModelError;
use crate::pipeline::PipelineError;

/// Errors from harness drivers.
#[derive(Debug, Error)]
pub enum HarnessError {
    /// A configuration cannot be satisfied (bad grid, range, mask, or split).
    #[error("configuration: {message}")]
    Config { message: String },
    /// Model construction, training, or inference failed.
    #[error(transparent)]
    Model(#[from] ModelError),
    /// Metric computation rejected its inputs.
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    /// A graph document could not be decoded.
    #[error(transparent)]
    Graph(#[from] GraphError),
    /// The bench pipeline failed.
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    /// Dataset directory I/O or consistency failure.
    #[error("dataset {path}: {message}")]
    DatasetIo { path: String, message: String },
}

impl HarnessError {
    pub(crate) fn config(message: impl Into<String>) -> Self {
        HarnessError::Config {
            message: message.into(),
        }
    }
}
