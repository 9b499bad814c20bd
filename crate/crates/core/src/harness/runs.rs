//! Experiment drivers: balanced splits, evaluation, feature ablation, and
//! epoch × train-size sweeps.
//!
//! Every driver is a pure function of (dataset, configs, seeds). Splits and
//! sweep cells derive their randomness from splitmix64 streams keyed on the
//! caller's seed (and, for sweeps, the cell coordinates), so re-running any
//! experiment reproduces it bit for bit.

use serde::{Deserialize, Serialize};

use super::metrics::{compute_metrics, Metrics};
use super::HarnessError;
use crate::cashflow::CashFlowGraph;
use crate::features::FEATURE_DIM;
use crate::gnn::{infer, train, ModelConfig, ModelParams, Prediction, SplitMix64, TrainConfig};

/// Which feature families stay in the input (ablation removes whole families,
/// shrinking the model's input width accordingly).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AblationMask {
    /// Node-type one-hot (columns 0–2).
    pub include_type: bool,
    /// Transfer frequency (columns 3–4).
    pub include_frequency: bool,
    /// Transfer diversity (columns 5–6).
    pub include_diversity: bool,
    /// Profit score (column 7).
    pub include_profit: bool,
}

impl Default for AblationMask {
    /// The identity mask: everything included.
    fn default() -> Self {
        AblationMask {
            include_type: true,
            include_frequency: true,
            include_diversity: true,
            include_profit: true,
        }
    }
}

impl AblationMask {
    /// A mask excluding exactly one family (the "without X" ablation variant).
    pub fn without(family: &str) -> Result<Self, HarnessError> {
        let mut mask = AblationMask::default();
        match family {
            "type" => mask.include_type = false,
            "frequency" => mask.include_frequency = false,
            "diversity" => mask.include_diversity = false,
            "profit" => mask.include_profit = false,
            other => {
                return Err(HarnessError::config(format!(
                    "unknown feature family {other:?} (expected type, frequency, diversity, or profit)"
                )))
            }
        }
        Ok(mask)
    }

    /// Feature-matrix column indices this mask keeps, in ascending order.
    pub fn columns(&self) -> Vec<usize> {
        let mut cols = Vec::with_capacity(FEATURE_DIM);
        if self.include_type {
            cols.extend([0, 1, 2]);
        }
        if self.include_frequency {
            cols.extend([3, 4]);
        }
        if self.include_diversity {
            cols.extend([5, 6]);
        }
        if self.include_profit {
            cols.push(7);
        }
        cols
    }

    /// Model input width under this mask.
    pub fn input_dim(&self) -> usize {
        self.columns().len()
    }

    /// Human-readable summary, e.g. `type+frequency+diversity+profit`.
    pub fn describe(&self) -> String {
        let names: Vec<&str> = [
            ("type", self.include_type),
            ("frequency", self.include_frequency),
            ("diversity", self.include_diversity),
            ("profit", self.include_profit),
        ]
        .iter()
        .filter(|(_, on)| *on)
        .map(|(name, _)| *name)
        .collect();
        names.join("+")
    }

    fn validate(&self) -> Result<(), HarnessError> {
        if self.input_dim() == 0 {
            return Err(HarnessError::config(
                "ablation mask removes every feature family",
            ));
        }
        Ok(())
    }
}

/// A train/test partition, stored as indices into the dataset slice.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitIndices {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

fn shuffle(indices: &mut [usize], rng: &mut SplitMix64) {
    for i in (1..indices.len()).rev() {
        let j = (rng.next_u64() % (i as u64 + 1)) as usize;
        indices.swap(i, j);
    }
}

/// Draws a balanced training sample — `train_size_per_class` uniformly from
/// each class, without replacement — and returns the remainder as the test
/// set. Both index lists come back sorted ascending. Deterministic per seed.
///
/// # Errors
///
/// [`HarnessError::Config`] when a graph lacks a label or a class does not
/// have *strictly more* members than the requested train size (an empty test
/// class would make evaluation meaningless).
pub fn split_dataset(
    dataset: &[CashFlowGraph],
    train_size_per_class: usize,
    seed: u64,
) -> Result<SplitIndices, HarnessError> {
    let mut by_class: [Vec<usize>; 2] = [Vec::new(), Vec::new()];
    for (idx, graph) in dataset.iter().enumerate() {
        match graph.label {
            Some(l @ (0 | 1)) => by_class[l as usize].push(idx),
            Some(other) => {
                return Err(HarnessError::config(format!(
                    "graph {idx} has label {other}, expected 0 or 1"
                )))
            }
            None => {
                return Err(HarnessError::config(format!(
                    "graph {idx} has no label; splits need labeled data"
                )))
            }
        }
    }
    for (class, members) in by_class.iter().enumerate() {
        if members.len() <= train_size_per_class {
            return Err(HarnessError::config(format!(
                "class {class} has {} graphs, need more than {train_size_per_class} \
                 to leave a test remainder",
                members.len()
            )));
        }
    }

    let mut rng = SplitMix64::new(seed);
    let mut train = Vec::with_capacity(2 * train_size_per_class);
    let mut test = Vec::with_capacity(dataset.len() - 2 * train_size_per_class);
    for members in by_class.iter_mut() {
        shuffle(members, &mut rng);
        train.extend_from_slice(&members[..train_size_per_class]);
        test.extend_from_slice(&members[train_size_per_class..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok(SplitIndices { train, test })
}

fn gather(dataset: &[CashFlowGraph], indices: &[usize]) -> Vec<CashFlowGraph> {
    indices.iter().map(|&i| dataset[i].clone()).collect()
}

/// Classifies every graph and scores the predictions against its labels.
///
/// # Errors
///
/// [`HarnessError::Config`] for unlabeled graphs; model and metric errors
/// propagate.
pub fn evaluate(params: &ModelParams, dataset: &[CashFlowGraph]) -> Result<Metrics, HarnessError> {
    let mut predictions: Vec<Prediction> = Vec::with_capacity(dataset.len());
    let mut labels = Vec::with_capacity(dataset.len());
    for (idx, graph) in dataset.iter().enumerate() {
        let label = graph.label.ok_or_else(|| {
            HarnessError::config(format!("graph {idx} has no label; cannot evaluate"))
        })?;
        predictions.push(infer(graph, params)?);
        labels.push(label);
    }
    Ok(compute_metrics(&predictions, &labels)?)
}

/// Projects a graph's features onto the mask's columns.
fn project(graph: &CashFlowGraph, columns: &[usize]) -> Result<CashFlowGraph, HarnessError> {
    let features = graph.features.as_ref().ok_or_else(|| {
        HarnessError::config("graph has no features; featurize before running experiments")
    })?;
    let mut out = graph.clone();
    out.features = Some(features.select_columns(columns));
    Ok(out)
}

/// One full train→evaluate cycle under a feature-family mask.
///
/// The masked columns are removed from every graph (the model's input width
/// shrinks to match), the model retrains from the same seed, and the metrics
/// come from the held-out remainder of a balanced split. The identity mask
/// reproduces the unablated run bit for bit — projection onto all eight
/// columns copies the exact same floats through the exact same code path.
pub fn ablation_run(
    dataset: &[CashFlowGraph],
    mask: &AblationMask,
    model_config: &ModelConfig,
    train_config: &TrainConfig,
) -> Result<Metrics, HarnessError> {
    mask.validate()?;
    let columns = mask.columns();
    let projected: Vec<CashFlowGraph> = dataset
        .iter()
        .map(|g| project(g, &columns))
        .collect::<Result<_, _>>()?;
    let split = split_dataset(&projected, train_config.train_size_per_class, train_config.seed)?;
    let config = ModelConfig {
        in_dim: columns.len(),
        ..model_config.clone()
    };
    let trained = train(&gather(&projected, &split.train), &config, train_config)?;
    evaluate(&trained.params, &gather(&projected, &split.test))
}

/// One sweep cell: the grid coordinates plus the resulting metrics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub epochs: usize,
    pub train_size: usize,
    pub metrics: Metrics,
}

/// Seed for one sweep cell: decorrelates cells while staying a pure function
/// of (base seed, coordinates).
fn cell_seed(base: u64, epochs: usize, train_size: usize) -> u64 {
    let mut rng = SplitMix64::new(base ^ ((epochs as u64) << 32) ^ train_size as u64);
    rng.next_u64()
}

/// Trains and evaluates one cell per (epochs, train size) pair, row-major over
/// `epochs_grid` × `train_size_grid`. Each cell draws its own split and
/// training seed from [`cell_seed`], so cells are independent and the whole
/// grid is reproducible. The result order is the iteration order, ready to
/// pivot into a heatmap (rows = epochs, columns = train size).
///
/// # Errors
///
/// [`HarnessError::Config`] (naming the cell) when a train size cannot be
/// satisfied; training and evaluation errors propagate.
pub fn sweep(
    dataset: &[CashFlowGraph],
    epochs_grid: &[usize],
    train_size_grid: &[usize],
    model_config: &ModelConfig,
    base: &TrainConfig,
) -> Result<Vec<SweepCell>, HarnessError> {
    if epochs_grid.is_empty() || train_size_grid.is_empty() {
        return Err(HarnessError::config("sweep grids must be nonempty"));
    }
    let mut cells = Vec::with_capacity(epochs_grid.len() * train_size_grid.len());
    for &epochs in epochs_grid {
        for &train_size in train_size_grid {
            let seed = cell_seed(base.seed, epochs, train_size);
            let split = split_dataset(dataset, train_size, seed).map_err(|e| match e {
                HarnessError::Config { message } => HarnessError::config(format!(
                    "cell (epochs={epochs}, train_size={train_size}): {message}"
                )),
                other => other,
            })?;
            let train_config = TrainConfig {
                epochs,
                train_size_per_class: train_size,
                seed,
                ..base.clone()
            };
            let trained = train(&gather(dataset, &split.train), model_config, &train_config)?;
            let metrics = evaluate(&trained.params, &gather(dataset, &split.test))?;
            cells.push(SweepCell {
                epochs,
                train_size,
                metrics,
            });
        }
    }
    Ok(cells)
}

fn csv_float(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn metric_fields(m: &Metrics) -> [String; 8] {
    [
        m.true_pos.to_string(),
        m.false_neg.to_string(),
        m.false_pos.to_string(),
        m.true_neg.to_string(),
        m.accuracy.to_string(),
        csv_float(m.tpr),
        csv_float(m.fpr),
        csv_float(m.auc),
    ]
}

/// Renders sweep results as CSV with header
/// `epochs,train_size,tp,fn,fp,tn,accuracy,tpr,fpr,auc`.
pub fn sweep_csv(cells: &[SweepCell]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "epochs",
        "train_size",
        "tp",
        "fn",
        "fp",
        "tn",
        "accuracy",
        "tpr",
        "fpr",
        "auc",
    ])
    .expect("in-memory csv");
    for cell in cells {
        let mut record = vec![cell.epochs.to_string(), cell.train_size.to_string()];
        record.extend(metric_fields(&cell.metrics));
        w.write_record(&record).expect("in-memory csv");
    }
    String::from_utf8(w.into_inner().expect("in-memory csv")).expect("csv is utf-8")
}

/// Renders ablation results as CSV with header
/// `mask,input_dim,tp,fn,fp,tn,accuracy,tpr,fpr,auc`.
pub fn ablation_csv(rows: &[(AblationMask, Metrics)]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "mask",
        "input_dim",
        "tp",
        "fn",
        "fp",
        "tn",
        "accuracy",
        "tpr",
        "fpr",
        "auc",
    ])
    .expect("in-memory csv");
    for (mask, metrics) in rows {
        let mut record = vec![mask.describe(), mask.input_dim().to_string()];
        record.extend(metric_fields(metrics));
        w.write_record(&record).expect("in-memory csv");
    }
    String::from_utf8(w.into_inner().expect("in-memory csv")).expect("csv is utf-8")
}
