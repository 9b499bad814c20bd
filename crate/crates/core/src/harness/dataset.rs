//! Dataset directories: one graph document per transaction plus a manifest.
//!
//! Layout:
//!
//! ```text
//! dataset/
//!   manifest.json      [{ "file": "g00000.json", "label": 0, "chain": "ethereum" }, …]
//!   g00000.json        cash flow graph documents
//!   g00001.json
//!   …
//! ```
//!
//! The manifest is the source of truth for ordering; loaders read files in
//! manifest order, so a dataset round-trips byte-for-byte and in sequence.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::cashflow::{graph_from_json, graph_to_json, CashFlowGraph};
use crate::txparse::Chain;

/// One manifest row.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    /// Graph document filename, relative to the dataset directory.
    pub file: String,
    /// Mirror of the graph's label (kept here so tooling can filter without
    /// opening every file).
    pub label: Option<u8>,
    /// Chain the transaction came from; synthetic data reports `ethereum`.
    pub chain: Chain,
}

fn io_err(path: &Path, err: impl std::fmt::Display) -> HarnessError {
    HarnessError::DatasetIo {
        path: path.display().to_string(),
        message: err.to_string(),
    }
}

/// Writes `graphs` into `dir` (created if needed) with a fresh manifest.
///
/// Files are named `g00000.json`, `g00001.json`, … in input order. Both the
/// graph documents and the manifest serialize deterministically, so saving the
/// same dataset twice produces identical bytes.
pub fn save_dataset(
    dir: impl AsRef<Path>,
    graphs: &[CashFlowGraph],
    chain: Chain,
) -> Result<(), HarnessError> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    let mut manifest = Vec::with_capacity(graphs.len());
    for (idx, graph) in graphs.iter().enumerate() {
        let file = format!("g{idx:05}.json");
        let path = dir.join(&file);
        fs::write(&path, graph_to_json(graph)).map_err(|e| io_err(&path, e))?;
        manifest.push(ManifestEntry {
            file,
            label: graph.label,
            chain,
        });
    }
    let manifest_path = dir.join("manifest.json");
    let mut text =
        serde_json::to_string_pretty(&manifest).expect("manifest entries always serialize");
    text.push('\n');
    fs::write(&manifest_path, text).map_err(|e| io_err(&manifest_path, e))?;
    Ok(())
}

/// Loads every graph listed in `dir`'s manifest, in manifest order.
///
/// # Errors
///
/// [`HarnessError::DatasetIo`] for missing/unreadable files or a label that
/// disagrees between the manifest and the graph document;
/// [`HarnessError::Graph`] when a graph document is malformed.
pub fn load_dataset(dir: impl AsRef<Path>) -> Result<Vec<CashFlowGraph>, HarnessError> {
    let dir = dir.as_ref();
    let manifest_path = dir.join("manifest.json");
    let manifest_bytes = fs::read(&manifest_path).map_err(|e| io_err(&manifest_path, e))?;
    let manifest: Vec<ManifestEntry> =
        serde_json::from_slice(&manifest_bytes).map_err(|e| io_err(&manifest_path, e))?;
    let mut graphs = Vec::with_capacity(manifest.len());
    for entry in &manifest {
        let path = dir.join(&entry.file);
        let bytes = fs::read(&path).map_err(|e| io_err(&path, e))?;
        let graph = graph_from_json(&bytes)?;
        if graph.label != entry.label {
            return Err(io_err(
                &path,
                format!(
                    "label disagrees with manifest ({:?} vs {:?})",
                    graph.label, entry.label
                ),
            ));
        }
        graphs.push(graph);
    }
    Ok(graphs)
}
