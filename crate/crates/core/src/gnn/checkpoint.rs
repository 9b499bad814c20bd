//! Checkpoint serialization.
//!
//! Checkpoints are versioned, self-describing JSON: configuration, init seed,
//! and every tensor in plain nested arrays. Serialization uses the shortest
//! round-trippable float form, so saving the same weights twice yields
//! byte-identical files — checkpoints participate in the pipeline's bitwise
//! determinism guarantee.

use std::fs;
use std::path::Path;

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::model::{Arch, DenseParams, LayerParams, ModelConfig, ModelParams};

/// Magic string identifying checkpoint files.
const FORMAT: &str = "pmascan-checkpoint";
/// Current format version; bump on any layout change.
const VERSION: u32 = 1;

/// Errors from saving or loading checkpoints.
#[derive(Debug, Error)]
pub enum CheckpointError {
    /// Filesystem failure.
    #[error("checkpoint io: {0}")]
    Io(#[from] std::io::Error),
    /// The file is not valid JSON.
    #[error("checkpoint is not valid JSON: {0}")]
    Json(#[from] serde_json::Error),
    /// The file parses but is not a checkpoint this version understands.
    #[error("unrecognized checkpoint: {message}")]
    Format { message: String },
    /// Tensors disagree with the embedded configuration.
    #[error("checkpoint shape mismatch: {message}")]
    Shape { message: String },
    /// A weight is NaN or infinite.
    #[error("checkpoint contains non-finite values")]
    NonFinite,
}

impl CheckpointError {
    fn format(message: impl Into<String>) -> Self {
        CheckpointError::Format {
            message: message.into(),
        }
    }

    fn shape(message: impl Into<String>) -> Self {
        CheckpointError::Shape {
            message: message.into(),
        }
    }
}

#[derive(Serialize, Deserialize)]
struct CheckpointDoc {
    format: String,
    version: u32,
    config: ModelConfig,
    seed: u64,
    layers: Vec<LayerDoc>,
    head: DenseDoc,
}

#[derive(Serialize, Deserialize)]
struct DenseDoc {
    w: Vec<Vec<f64>>,
    b: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
enum LayerDoc {
    Dense {
        w: Vec<Vec<f64>>,
        b: Vec<f64>,
    },
    Gcn {
        w: Vec<Vec<f64>>,
        b: Vec<f64>,
    },
    Sage {
        w_self: Vec<Vec<f64>>,
        w_neigh: Vec<Vec<f64>>,
        b: Vec<f64>,
    },
    Gin {
        w1: Vec<Vec<f64>>,
        b1: Vec<f64>,
        w2: Vec<Vec<f64>>,
        b2: Vec<f64>,
    },
    Gat {
        w: Vec<Vec<f64>>,
        b: Vec<f64>,
        a_src: Vec<f64>,
        a_dst: Vec<f64>,
    },
}

fn matrix_to_rows(m: &Array2<f64>) -> Vec<Vec<f64>> {
    m.rows().into_iter().map(|r| r.to_vec()).collect()
}

fn rows_to_matrix(rows: &[Vec<f64>], what: &str) -> Result<Array2<f64>, CheckpointError> {
    let nrows = rows.len();
    let ncols = rows.first().map_or(0, Vec::len);
    if nrows == 0 || ncols == 0 {
        return Err(CheckpointError::shape(format!("{what} is empty")));
    }
    let mut m = Array2::zeros((nrows, ncols));
    for (i, row) in rows.iter().enumerate() {
        if row.len() != ncols {
            return Err(CheckpointError::shape(format!(
                "{what} row {i} has {} values, expected {ncols}",
                row.len()
            )));
        }
        for (j, v) in row.iter().enumerate() {
            m[[i, j]] = *v;
        }
    }
    Ok(m)
}

fn dense_to_doc(d: &DenseParams) -> DenseDoc {
    DenseDoc {
        w: matrix_to_rows(&d.w),
        b: d.b.to_vec(),
    }
}

fn doc_to_dense(
    doc: &DenseDoc,
    d_in: usize,
    d_out: usize,
    what: &str,
) -> Result<DenseParams, CheckpointError> {
    let w = rows_to_matrix(&doc.w, what)?;
    expect_shape(&w, d_in, d_out, what)?;
    expect_len(&doc.b, d_out, what)?;
    Ok(DenseParams {
        w,
        b: Array1::from_vec(doc.b.clone()),
    })
}

fn expect_shape(
    m: &Array2<f64>,
    rows: usize,
    cols: usize,
    what: &str,
) -> Result<(), CheckpointError> {
    if m.nrows() != rows || m.ncols() != cols {
        return Err(CheckpointError::shape(format!(
            "{what} is {}x{}, expected {rows}x{cols}",
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(())
}

fn expect_len(v: &[f64], len: usize, what: &str) -> Result<(), CheckpointError> {
    if v.len() != len {
        return Err(CheckpointError::shape(format!(
            "{what} bias has {} values, expected {len}",
            v.len()
        )));
    }
    Ok(())
}

fn layer_to_doc(layer: &LayerParams) -> LayerDoc {
    match layer {
        LayerParams::Dense(d) => LayerDoc::Dense {
            w: matrix_to_rows(&d.w),
            b: d.b.to_vec(),
        },
        LayerParams::Gcn(d) => LayerDoc::Gcn {
            w: matrix_to_rows(&d.w),
            b: d.b.to_vec(),
        },
        LayerParams::Sage {
            w_self,
            w_neigh,
            b,
        } => LayerDoc::Sage {
            w_self: matrix_to_rows(w_self),
            w_neigh: matrix_to_rows(w_neigh),
            b: b.to_vec(),
        },
        LayerParams::Gin { lin1, lin2 } => LayerDoc::Gin {
            w1: matrix_to_rows(&lin1.w),
            b1: lin1.b.to_vec(),
            w2: matrix_to_rows(&lin2.w),
            b2: lin2.b.to_vec(),
        },
        LayerParams::Gat { lin, a_src, a_dst } => LayerDoc::Gat {
            w: matrix_to_rows(&lin.w),
            b: lin.b.to_vec(),
            a_src: a_src.to_vec(),
            a_dst: a_dst.to_vec(),
        },
    }
}

fn doc_to_layer(
    doc: &LayerDoc,
    arch: Arch,
    d_in: usize,
    d_out: usize,
    idx: usize,
) -> Result<LayerParams, CheckpointError> {
    let what = format!("layer {idx}");
    match (doc, arch) {
        (LayerDoc::Dense { w, b }, Arch::Mlp) => {
            let dense = doc_to_dense(&DenseDoc { w: w.clone(), b: b.clone() }, d_in, d_out, &what)?;
            Ok(LayerParams::Dense(dense))
        }
        (LayerDoc::Gcn { w, b }, Arch::Gcn) => {
            let dense = doc_to_dense(&DenseDoc { w: w.clone(), b: b.clone() }, d_in, d_out, &what)?;
            Ok(LayerParams::Gcn(dense))
        }
        (
            LayerDoc::Sage {
                w_self,
                w_neigh,
                b,
            },
            Arch::GraphSage,
        ) => {
            let ws = rows_to_matrix(w_self, &what)?;
            let wn = rows_to_matrix(w_neigh, &what)?;
            expect_shape(&ws, d_in, d_out, &what)?;
            expect_shape(&wn, d_in, d_out, &what)?;
            expect_len(b, d_out, &what)?;
            Ok(LayerParams::Sage {
                w_self: ws,
                w_neigh: wn,
                b: Array1::from_vec(b.clone()),
            })
        }
        (LayerDoc::Gin { w1, b1, w2, b2 }, Arch::Gin) => {
            let lin1 =
                doc_to_dense(&DenseDoc { w: w1.clone(), b: b1.clone() }, d_in, d_out, &what)?;
            let lin2 =
                doc_to_dense(&DenseDoc { w: w2.clone(), b: b2.clone() }, d_out, d_out, &what)?;
            Ok(LayerParams::Gin { lin1, lin2 })
        }
        (
            LayerDoc::Gat {
                w,
                b,
                a_src,
                a_dst,
            },
            Arch::Gat,
        ) => {
            let lin = doc_to_dense(&DenseDoc { w: w.clone(), b: b.clone() }, d_in, d_out, &what)?;
            if a_src.len() != d_out || a_dst.len() != d_out {
                return Err(CheckpointError::shape(format!(
                    "{what} attention vectors are {}/{} long, expected {d_out}",
                    a_src.len(),
                    a_dst.len()
                )));
            }
            Ok(LayerParams::Gat {
                lin,
                a_src: Array1::from_vec(a_src.clone()),
                a_dst: Array1::from_vec(a_dst.clone()),
            })
        }
        _ => Err(CheckpointError::format(format!(
            "{what} kind does not match configured architecture {arch}"
        ))),
    }
}

/// Renders a checkpoint as its canonical JSON document.
///
/// The output is deterministic: fixed key order, shortest-round-trip floats,
/// two-space indentation, trailing newline.
pub fn checkpoint_to_json(params: &ModelParams) -> Result<String, CheckpointError> {
    if params.flatten().iter().any(|v| !v.is_finite()) {
        return Err(CheckpointError::NonFinite);
    }
    let doc = CheckpointDoc {
        format: FORMAT.to_string(),
        version: VERSION,
        config: params.config.clone(),
        seed: params.seed,
        layers: params.layers.iter().map(layer_to_doc).collect(),
        head: dense_to_doc(&params.head),
    };
    let mut text = serde_json::to_string_pretty(&doc)?;
    text.push('\n');
    Ok(text)
}

/// Writes `params` to `path` as canonical checkpoint JSON.
pub fn save_checkpoint(params: &ModelParams, path: impl AsRef<Path>) -> Result<(), CheckpointError> {
    fs::write(path, checkpoint_to_json(params)?)?;
    Ok(())
}

/// Loads and validates a checkpoint.
///
/// Rejects unknown formats/versions, tensors whose shapes disagree with the
/// embedded configuration, mismatched layer kinds, and non-finite weights.
pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<ModelParams, CheckpointError> {
    let bytes = fs::read(path)?;
    let doc: CheckpointDoc = serde_json::from_slice(&bytes)?;
    if doc.format != FORMAT {
        return Err(CheckpointError::format(format!(
            "format is {:?}, expected {FORMAT:?}",
            doc.format
        )));
    }
    if doc.version != VERSION {
        return Err(CheckpointError::format(format!(
            "version {} is not supported (this build reads version {VERSION})",
            doc.version
        )));
    }
    doc.config
        .validate()
        .map_err(|e| CheckpointError::format(e.to_string()))?;
    if doc.layers.len() != doc.config.num_layers {
        return Err(CheckpointError::shape(format!(
            "checkpoint has {} layers but config declares {}",
            doc.layers.len(),
            doc.config.num_layers
        )));
    }
    let mut layers = Vec::with_capacity(doc.layers.len());
    for (idx, layer_doc) in doc.layers.iter().enumerate() {
        let d_in = doc.config.layer_in_dim(idx);
        layers.push(doc_to_layer(
            layer_doc,
            doc.config.arch,
            d_in,
            doc.config.hidden_dim,
            idx,
        )?);
    }
    let head = doc_to_dense(
        &doc.head,
        doc.config.hidden_dim,
        doc.config.out_dim,
        "head",
    )?;
    let params = ModelParams {
        config: doc.config,
        seed: doc.seed,
        layers,
        head,
    };
    if params.flatten().iter().any(|v| !v.is_finite()) {
        return Err(CheckpointError::NonFinite);
    }
    Ok(params)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gnn::init_params;
    use crate::gnn::model::ModelConfig;

    fn params_for(arch: Arch) -> ModelParams {
        let config = ModelConfig {
            arch,
            ..ModelConfig::default()
        };
        init_params(&config, 2024).unwrap()
    }

    #[test]
    fn roundtrip_preserves_every_arch_exactly() {
        let dir = tempfile::tempdir().unwrap();
        for arch in Arch::ALL {
            let params = params_for(arch);
            let path = dir.path().join(format!("{arch}.json"));
            save_checkpoint(&params, &path).unwrap();
            let loaded = load_checkpoint(&path).unwrap();
            assert_eq!(loaded.flatten(), params.flatten(), "{arch}");
            assert_eq!(loaded.config, params.config, "{arch}");
            assert_eq!(loaded.seed, params.seed, "{arch}");
        }
    }

    #[test]
    fn serialization_is_byte_stable() {
        let params = params_for(Arch::Gat);
        let a = checkpoint_to_json(&params).unwrap();
        let b = checkpoint_to_json(&params).unwrap();
        assert_eq!(a, b);
        // And through a save/load cycle.
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.json");
        save_checkpoint(&params, &path).unwrap();
        let reloaded = load_checkpoint(&path).unwrap();
        assert_eq!(checkpoint_to_json(&reloaded).unwrap(), a);
    }

    #[test]
    fn wrong_format_string_is_rejected() {
        let params = params_for(Arch::Gcn);
        let text = checkpoint_to_json(&params)
            .unwrap()
            .replace("pmascan-checkpoint", "other-format");
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.json");
        std::fs::write(&path, text).unwrap();
        assert!(matches!(
            load_checkpoint(&path),
            Err(CheckpointError::Format { .. })
        ));
    }

    #[test]
    fn future_version_is_rejected() {
        let params = params_for(Arch::Mlp);
        let text = checkpoint_to_json(&params)
            .unwrap()
            .replace("\"version\": 1", "\"version\": 2");
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("v2.json");
        std::fs::write(&path, text).unwrap();
        assert!(matches!(
            load_checkpoint(&path),
            Err(CheckpointError::Format { .. })
        ));
    }

    #[test]
    fn layer_kind_must_match_config_arch() {
        // Claim GCN in the config but store a dense layer.
        let params = params_for(Arch::Gcn);
        let text = checkpoint_to_json(&params)
            .unwrap()
            .replace("\"kind\": \"gcn\"", "\"kind\": \"dense\"");
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("kind.json");
        std::fs::write(&path, text).unwrap();
        assert!(matches!(
            load_checkpoint(&path),
            Err(CheckpointError::Format { .. })
        ));
    }

    #[test]
    fn truncated_tensor_is_a_shape_error() {
        let params = params_for(Arch::GraphSage);
        let mut doc: serde_json::Value =
            serde_json::from_str(&checkpoint_to_json(&params).unwrap()).unwrap();
        let b = doc["layers"][0]["b"].as_array_mut().unwrap();
        b.pop();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("short.json");
        std::fs::write(&path, serde_json::to_string(&doc).unwrap()).unwrap();
        assert!(matches!(
            load_checkpoint(&path),
            Err(CheckpointError::Shape { .. })
        ));
    }

    #[test]
    fn non_finite_weights_are_rejected_on_save() {
        let mut params = params_for(Arch::Mlp);
        params.head.b[0] = f64::NAN;
        assert!(matches!(
            checkpoint_to_json(&params),
            Err(CheckpointError::NonFinite)
        ));
    }

    #[test]
    fn missing_file_is_io_error() {
        assert!(matches!(
            load_checkpoint("/nonexistent/path/model.json"),
            Err(CheckpointError::Io(_))
        ));
    }
}
