//! Subcommand definitions and implementations.
//!
//! Conventions shared by every subcommand:
//!
//! * The primary artifact goes to `--output` (or the command's dedicated
//!   `--*-out` flag) when given, otherwise to stdout. Diagnostics go to stderr.
//! * Flag values can be supplied through `PMASCAN_*` environment variables
//!   where the flag's help text says so.
//! * Usage errors (unknown flags, missing required arguments) exit with
//!   status 2 via clap; operational errors (bad files, failed training, RPC
//!   trouble) exit with status 1 and name the pipeline phase that failed
//!   where one applies.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use clap::{ArgGroup, Args, Parser, Subcommand};

use pmascan_core::cashflow::{construct_graph, graph_from_json, graph_to_json, CashFlowGraph};
use pmascan_core::features::{assemble_features, AccountDb, FEATURE_DIM};
use pmascan_core::gnn::{
    init_params, load_checkpoint, save_checkpoint, train, Arch, Direction, ModelConfig,
    ModelParams, TrainConfig,
};
use pmascan_core::harness::{
    ablation_csv, ablation_run, evaluate, load_dataset, loss_trace_csv, metrics_csv, run_bench,
    save_dataset, split_dataset, sweep, sweep_csv, synth_dataset, AblationMask, BenchConfig,
    SignalFamily, SplitIndices, SynthConfig,
};
use pmascan_core::pipeline::{classify_fixture, classify_rpc, PipelineError};
use pmascan_core::txparse::{extract_transfers, parse_fixture, Chain, TxHash};

/// Top-level argument parser.
#[derive(Debug, Parser)]
#[command(
    name = "pmascan",
    version,
    about = "Detect price-manipulation attacks in EVM transactions",
    after_help = "Environment: PMASCAN_MODEL, PMASCAN_RPC, PMASCAN_ACCOUNT_DB, PMASCAN_BIND \
                  and PMASCAN_LOG override the matching flags/verbosity."
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

/// Model shape flags shared by the commands that build a model from scratch.
#[derive(Debug, Args)]
pub struct ModelOpts {
    /// Architecture: mlp, gcn, graphsage, gin, or gat.
    #[arg(long, default_value = "graphsage")]
    pub arch: String,
    /// Number of message-passing (or dense) layers before the readout.
    #[arg(long = "num-layers", default_value_t = 2)]
    pub num_layers: usize,
    /// Width of every hidden layer.
    #[arg(long = "hidden-dim", default_value_t = 16)]
    pub hidden_dim: usize,
    /// Message direction: symmetrized (default) or forward.
    #[arg(long, default_value = "symmetrized")]
    pub direction: String,
}

impl ModelOpts {
    fn config(&self) -> Result<ModelConfig> {
        let arch: Arch = self.arch.parse().map_err(|e: String| anyhow!(e))?;
        let direction = parse_direction(&self.direction)?;
        Ok(ModelConfig {
            arch,
            num_layers: self.num_layers,
            in_dim: FEATURE_DIM,
            hidden_dim: self.hidden_dim,
            out_dim: 2,
            direction,
        })
    }
}

/// Optimization flags shared by the training-style commands.
#[derive(Debug, Args)]
pub struct TrainOpts {
    /// Number of full-batch epochs.
    #[arg(long, default_value_t = 100)]
    pub epochs: usize,
    /// Training graphs drawn per class; the rest of the dataset is held out.
    #[arg(long = "train-size", default_value_t = 100)]
    pub train_size: usize,
    /// Adam learning rate.
    #[arg(long = "learning-rate", default_value_t = 0.01)]
    pub learning_rate: f64,
    /// Seed for initialization, shuffling, and splits.
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
}

impl TrainOpts {
    fn config(&self) -> TrainConfig {
        TrainConfig {
            epochs: self.epochs,
            train_size_per_class: self.train_size,
            learning_rate: self.learning_rate,
            seed: self.seed,
            ..TrainConfig::default()
        }
    }
}

/// Input selection for `classify`: exactly one of a fixture file or a
/// transaction hash (the latter fetched over JSON-RPC).
#[derive(Debug, Args)]
#[command(group(ArgGroup::new("source").required(true).args(["fixture", "tx_hash"])))]
pub struct ClassifyOpts {
    /// Checkpoint file produced by `train`.
    #[arg(long, env = "PMASCAN_MODEL")]
    pub model: PathBuf,
    /// Offline fixture document to classify.
    #[arg(long)]
    pub fixture: Option<PathBuf>,
    /// Transaction hash to fetch and classify (needs --rpc).
    #[arg(long = "tx-hash", requires = "rpc")]
    pub tx_hash: Option<String>,
    /// JSON-RPC endpoint for --tx-hash.
    #[arg(long, env = "PMASCAN_RPC")]
    pub rpc: Option<String>,
    /// Account database for node typing; omitted means every address
    /// defaults to EOA/unverified.
    #[arg(long = "account-db", env = "PMASCAN_ACCOUNT_DB")]
    pub account_db: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Decode a fixture document and dump the extracted transfers.
    Parse {
        /// Fixture document (JSON) to decode.
        #[arg(long)]
        fixture: PathBuf,
        /// Write the transfer dump here instead of stdout.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Build a cash-flow graph document from a fixture.
    Build {
        /// Fixture document (JSON) to decode.
        #[arg(long)]
        fixture: PathBuf,
        /// Write the graph document here instead of stdout.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Attach node feature vectors to a graph document.
    Featurize {
        /// Graph document produced by `build`.
        #[arg(long)]
        graph: PathBuf,
        /// Account database for node typing.
        #[arg(long = "account-db", env = "PMASCAN_ACCOUNT_DB")]
        account_db: Option<PathBuf>,
        /// Write the featurized graph here instead of stdout.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Generate a labeled synthetic dataset of attack/benign graph pairs.
    Synth {
        /// Signal family: profit_cycle, frequency_burst, diversity_spread,
        /// or structure_only.
        #[arg(long)]
        family: String,
        /// Graphs generated per class (dataset size is twice this).
        #[arg(long = "count-per-class", default_value_t = 100)]
        count_per_class: usize,
        /// Inclusive node-count range per graph, as lo..hi.
        #[arg(long, default_value = "6..12")]
        nodes: String,
        /// Generator seed.
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Dataset directory to create.
        #[arg(long)]
        out: PathBuf,
    },
    /// Train a model on a labeled dataset directory.
    Train {
        /// Dataset directory (manifest.json plus graph documents).
        #[arg(long)]
        data: PathBuf,
        #[command(flatten)]
        model: ModelOpts,
        #[command(flatten)]
        train: TrainOpts,
        /// Where to write the trained checkpoint.
        #[arg(long = "model-out")]
        model_out: PathBuf,
        /// Where to write the per-epoch loss trace CSV.
        #[arg(long = "loss-out")]
        loss_out: Option<PathBuf>,
        /// Where to write the train/test split indices (JSON), for later
        /// held-out evaluation with `eval --split`.
        #[arg(long = "split-out")]
        split_out: Option<PathBuf>,
    },
    /// Evaluate a checkpoint on a labeled dataset directory.
    Eval {
        /// Checkpoint file produced by `train`.
        #[arg(long, env = "PMASCAN_MODEL")]
        model: PathBuf,
        /// Dataset directory to evaluate on.
        #[arg(long)]
        data: PathBuf,
        /// Split file from `train --split-out`; evaluation is then restricted
        /// to its held-out test indices.
        #[arg(long)]
        split: Option<PathBuf>,
        /// Write the metrics CSV here instead of stdout.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Retrain under feature-family masks and compare held-out metrics.
    Ablate {
        /// Dataset directory (manifest.json plus graph documents).
        #[arg(long)]
        data: PathBuf,
        #[command(flatten)]
        model: ModelOpts,
        #[command(flatten)]
        train: TrainOpts,
        /// Feature family to drop (type, frequency, diversity, profit); may
        /// repeat for one row per family. Without it, the full baseline plus
        /// all four single-family ablations run.
        #[arg(long = "without")]
        without: Vec<String>,
        /// Write the ablation CSV here instead of stdout.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Train and evaluate over an epochs × train-size grid.
    Sweep {
        /// Dataset directory (manifest.json plus graph documents).
        #[arg(long)]
        data: PathBuf,
        #[command(flatten)]
        model: ModelOpts,
        #[command(flatten)]
        train: TrainOpts,
        /// Epoch grid: comma list (20,50,100) or range with step (20..100:20).
        #[arg(long = "epochs-grid")]
        epochs_grid: String,
        /// Train-size grid, same syntax as --epochs-grid.
        #[arg(long = "train-size-grid")]
        train_size_grid: String,
        /// Write the sweep CSV here instead of stdout.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Classify one transaction and print the response document.
    Classify(ClassifyOpts),
    /// Serve the classifier over HTTP (POST /classify, GET /health).
    Serve {
        /// Address to bind, host:port.
        #[arg(long, env = "PMASCAN_BIND", default_value = "127.0.0.1:8080")]
        bind: String,
        /// Checkpoint file to serve.
        #[arg(long, env = "PMASCAN_MODEL")]
        model: PathBuf,
        /// Account database for node typing.
        #[arg(long = "account-db", env = "PMASCAN_ACCOUNT_DB")]
        account_db: Option<PathBuf>,
        /// Default JSON-RPC endpoint for tx_hash requests that do not carry
        /// their own.
        #[arg(long, env = "PMASCAN_RPC")]
        rpc: Option<String>,
        /// Reject request bodies larger than this many bytes with 413.
        #[arg(long = "max-body-bytes", default_value_t = 2 * 1024 * 1024)]
        max_body_bytes: usize,
    },
    /// Measure classification latency on a synthetic workload.
    Bench {
        /// Number of transactions to classify.
        #[arg(long, default_value_t = 1000)]
        graphs: usize,
        /// Nodes per generated graph.
        #[arg(long, default_value_t = 100)]
        nodes: usize,
        /// Workload seed (also the init seed when no checkpoint is given).
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Checkpoint to benchmark; without it a freshly initialized
        /// default model is used.
        #[arg(long, env = "PMASCAN_MODEL")]
        model: Option<PathBuf>,
    },
}

/// Executes a parsed invocation. Errors bubble to `main` for exit-code 1.
pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Parse { fixture, output } => cmd_parse(&fixture, output.as_deref()),
        Command::Build { fixture, output } => cmd_build(&fixture, output.as_deref()),
        Command::Featurize {
            graph,
            account_db,
            output,
        } => cmd_featurize(&graph, account_db.as_deref(), output.as_deref()),
        Command::Synth {
            family,
            count_per_class,
            nodes,
            seed,
            out,
        } => cmd_synth(&family, count_per_class, &nodes, seed, &out),
        Command::Train {
            data,
            model,
            train,
            model_out,
            loss_out,
            split_out,
        } => cmd_train(
            &data,
            &model,
            &train,
            &model_out,
            loss_out.as_deref(),
            split_out.as_deref(),
        ),
        Command::Eval {
            model,
            data,
            split,
            output,
        } => cmd_eval(&model, &data, split.as_deref(), output.as_deref()),
        Command::Ablate {
            data,
            model,
            train,
            without,
            output,
        } => cmd_ablate(&data, &model, &train, &without, output.as_deref()),
        Command::Sweep {
            data,
            model,
            train,
            epochs_grid,
            train_size_grid,
            output,
        } => cmd_sweep(
            &data,
            &model,
            &train,
            &epochs_grid,
            &train_size_grid,
            output.as_deref(),
        ),
        Command::Classify(opts) => cmd_classify(&opts),
        Command::Serve {
            bind,
            model,
            account_db,
            rpc,
            max_body_bytes,
        } => cmd_serve(&bind, &model, account_db.as_deref(), rpc, max_body_bytes),
        Command::Bench {
            graphs,
            nodes,
            seed,
            model,
        } => cmd_bench(graphs, nodes, seed, model.as_deref()),
    }
}

// ---------------------------------------------------------------------------
// Shared helpers
// ---------------------------------------------------------------------------

/// Writes `contents` to `output`, or stdout when no path was given. A missing
/// trailing newline is added so shell pipelines see a complete final line.
fn emit(output: Option<&Path>, contents: &str) -> Result<()> {
    let mut text = contents.to_owned();
    if !text.ends_with('\n') {
        text.push('\n');
    }
    match output {
        Some(path) => {
            fs::write(path, text).with_context(|| format!("writing {}", path.display()))
        }
        None => {
            io::stdout()
                .write_all(text.as_bytes())
                .context("writing to stdout")?;
            Ok(())
        }
    }
}

fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).with_context(|| format!("reading {}", path.display()))
}

fn load_account_db(path: Option<&Path>) -> Result<AccountDb> {
    match path {
        Some(p) => AccountDb::from_path(p).map_err(|e| anyhow!("account db: {e}")),
        None => Ok(AccountDb::empty()),
    }
}

fn load_model(path: &Path) -> Result<ModelParams> {
    load_checkpoint(path).with_context(|| format!("loading checkpoint {}", path.display()))
}

/// Tags a pipeline error with the phase it failed in, so exit-1 messages read
/// e.g. `classification failed in phase parse: …`.
fn phase_error(e: PipelineError) -> anyhow::Error {
    anyhow!("classification failed in phase {}: {e}", e.phase())
}

fn parse_direction(s: &str) -> Result<Direction> {
    match s {
        "symmetrized" => Ok(Direction::Symmetrized),
        "forward" | "forward_edges" => Ok(Direction::ForwardEdges),
        other => bail!("unknown direction '{other}', expected symmetrized or forward"),
    }
}

/// Parses a grid spec: either a comma list (`20,50,100`) or an inclusive
/// range with step (`20..100:20`).
fn parse_grid(spec: &str) -> Result<Vec<usize>> {
    if let Some((range, step)) = spec.split_once(':') {
        let (lo, hi) = parse_range(range)?;
        let step: usize = step
            .trim()
            .parse()
            .map_err(|_| anyhow!("bad grid step '{step}'"))?;
        if step == 0 {
            bail!("grid step must be positive");
        }
        return Ok((lo..=hi).step_by(step).collect());
    }
    if spec.contains("..") {
        let (lo, hi) = parse_range(spec)?;
        return Ok((lo..=hi).collect());
    }
    spec.split(',')
        .map(|part| {
            part.trim()
                .parse::<usize>()
                .map_err(|_| anyhow!("bad grid value '{part}'"))
        })
        .collect()
}

/// Parses `lo..hi` as an inclusive range.
fn parse_range(spec: &str) -> Result<(usize, usize)> {
    let (lo, hi) = spec
        .split_once("..")
        .ok_or_else(|| anyhow!("bad range '{spec}', expected lo..hi"))?;
    let lo: usize = lo
        .trim()
        .parse()
        .map_err(|_| anyhow!("bad range start '{lo}'"))?;
    let hi: usize = hi
        .trim()
        .parse()
        .map_err(|_| anyhow!("bad range end '{hi}'"))?;
    if lo > hi {
        bail!("range start {lo} exceeds end {hi}");
    }
    Ok((lo, hi))
}

fn runtime() -> Result<tokio::runtime::Runtime> {
    tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .context("starting async runtime")
}

fn gather(dataset: &[CashFlowGraph], indices: &[usize]) -> Vec<CashFlowGraph> {
    indices.iter().map(|&i| dataset[i].clone()).collect()
}

// ---------------------------------------------------------------------------
// Subcommand bodies
// ---------------------------------------------------------------------------

fn cmd_parse(fixture: &Path, output: Option<&Path>) -> Result<()> {
    let bytes = read_bytes(fixture)?;
    let tx = parse_fixture(&bytes)
        .map_err(PipelineError::from)
        .map_err(phase_error)?;
    let report = extract_transfers(&tx);
    let doc = serde_json::json!({
        "tx_hash": tx.tx_hash.to_string(),
        "chain": tx.chain.as_str(),
        "transfers": report
            .transfers
            .iter()
            .map(|t| serde_json::json!({
                "sender": t.sender.to_string(),
                "receiver": t.receiver.to_string(),
                "asset": t.asset.to_string(),
                "amount": t.amount.to_string(),
            }))
            .collect::<Vec<_>>(),
        "skipped_traces": report.skipped_traces,
        "skipped_logs": report.skipped_logs,
        "malformed_events": report
            .malformed_events
            .iter()
            .map(|m| serde_json::json!({
                "log_index": m.log_index,
                "emitter": m.emitter.to_string(),
                "reason": m.reason,
            }))
            .collect::<Vec<_>>(),
    });
    emit(output, &serde_json::to_string_pretty(&doc)?)
}

fn cmd_build(fixture: &Path, output: Option<&Path>) -> Result<()> {
    let bytes = read_bytes(fixture)?;
    let tx = parse_fixture(&bytes)
        .map_err(PipelineError::from)
        .map_err(phase_error)?;
    let report = extract_transfers(&tx);
    let graph = construct_graph(&report.transfers)
        .map_err(PipelineError::from)
        .map_err(phase_error)?;
    emit(output, &graph_to_json(&graph))
}

fn cmd_featurize(graph: &Path, account_db: Option<&Path>, output: Option<&Path>) -> Result<()> {
    let bytes = read_bytes(graph)?;
    let parsed = graph_from_json(&bytes)
        .map_err(PipelineError::from)
        .map_err(phase_error)?;
    let db = load_account_db(account_db)?;
    let featurized = assemble_features(parsed, &db)
        .map_err(PipelineError::from)
        .map_err(phase_error)?;
    emit(output, &graph_to_json(&featurized))
}

fn cmd_synth(family: &str, count_per_class: usize, nodes: &str, seed: u64, out: &Path) -> Result<()> {
    let family: SignalFamily = family.parse().map_err(|e: String| anyhow!(e))?;
    let node_range = parse_range(nodes)?;
    let cfg = SynthConfig {
        count_per_class,
        node_range,
        family,
        seed,
    };
    let graphs = synth_dataset(&cfg)?;
    save_dataset(out, &graphs, Chain::Ethereum)?;
    println!(
        "wrote {} graphs ({count_per_class} per class, {family}) to {}",
        graphs.len(),
        out.display()
    );
    Ok(())
}

fn cmd_train(
    data: &Path,
    model: &ModelOpts,
    opts: &TrainOpts,
    model_out: &Path,
    loss_out: Option<&Path>,
    split_out: Option<&Path>,
) -> Result<()> {
    let dataset = load_dataset(data)?;
    let model_config = model.config()?;
    let train_config = opts.config();
    let split = split_dataset(&dataset, train_config.train_size_per_class, train_config.seed)?;
    let result = train(&gather(&dataset, &split.train), &model_config, &train_config)?;
    save_checkpoint(&result.params, model_out)
        .with_context(|| format!("writing checkpoint {}", model_out.display()))?;
    if let Some(path) = loss_out {
        emit(Some(path), &loss_trace_csv(&result.loss_trace))?;
    }
    if let Some(path) = split_out {
        emit(Some(path), &serde_json::to_string_pretty(&split)?)?;
    }
    let summary = serde_json::json!({
        "model": model_out.display().to_string(),
        "arch": model_config.arch.as_str(),
        "epochs": train_config.epochs,
        "train_graphs": split.train.len(),
        "held_out_graphs": split.test.len(),
        "final_loss": result.loss_trace.last().copied(),
    });
    println!("{}", serde_json::to_string_pretty(&summary)?);
    Ok(())
}

fn cmd_eval(model: &Path, data: &Path, split: Option<&Path>, output: Option<&Path>) -> Result<()> {
    let params = load_model(model)?;
    let dataset = load_dataset(data)?;
    let subset = match split {
        Some(path) => {
            let bytes = read_bytes(path)?;
            let indices: SplitIndices = serde_json::from_slice(&bytes)
                .with_context(|| format!("parsing split file {}", path.display()))?;
            if let Some(&max) = indices.test.iter().max() {
                if max >= dataset.len() {
                    bail!(
                        "split file {} indexes graph {max}, but the dataset has only {} graphs",
                        path.display(),
                        dataset.len()
                    );
                }
            }
            gather(&dataset, &indices.test)
        }
        None => dataset,
    };
    let metrics = evaluate(&params, &subset)?;
    emit(output, &metrics_csv(&metrics))
}

fn cmd_ablate(
    data: &Path,
    model: &ModelOpts,
    opts: &TrainOpts,
    without: &[String],
    output: Option<&Path>,
) -> Result<()> {
    let dataset = load_dataset(data)?;
    let model_config = model.config()?;
    let train_config = opts.config();
    let mut masks = vec![AblationMask::default()];
    if without.is_empty() {
        for family in ["type", "frequency", "diversity", "profit"] {
            masks.push(AblationMask::without(family)?);
        }
    } else {
        for family in without {
            masks.push(AblationMask::without(family)?);
        }
    }
    let mut rows = Vec::with_capacity(masks.len());
    for mask in masks {
        let metrics = ablation_run(&dataset, &mask, &model_config, &train_config)?;
        rows.push((mask, metrics));
    }
    emit(output, &ablation_csv(&rows))
}

fn cmd_sweep(
    data: &Path,
    model: &ModelOpts,
    opts: &TrainOpts,
    epochs_grid: &str,
    train_size_grid: &str,
    output: Option<&Path>,
) -> Result<()> {
    let dataset = load_dataset(data)?;
    let model_config = model.config()?;
    let base = opts.config();
    let epochs = parse_grid(epochs_grid)?;
    let sizes = parse_grid(train_size_grid)?;
    let cells = sweep(&dataset, &epochs, &sizes, &model_config, &base)?;
    emit(output, &sweep_csv(&cells))
}

fn cmd_classify(opts: &ClassifyOpts) -> Result<()> {
    let params = load_model(&opts.model)?;
    let db = load_account_db(opts.account_db.as_deref())?;
    let response = match (&opts.fixture, &opts.tx_hash) {
        (Some(fixture), None) => {
            let bytes = read_bytes(fixture)?;
            classify_fixture(&bytes, &params, &db).map_err(phase_error)?
        }
        (None, Some(hash)) => {
            let tx_hash: TxHash = hash
                .parse()
                .map_err(|e| anyhow!("invalid transaction hash: {e}"))?;
            let endpoint = opts
                .rpc
                .as_deref()
                .ok_or_else(|| anyhow!("--tx-hash needs --rpc or PMASCAN_RPC"))?;
            runtime()?
                .block_on(classify_rpc(tx_hash, endpoint, &params, &db))
                .map_err(phase_error)?
        }
        // clap's ArgGroup guarantees exactly one source.
        _ => unreachable!("argument group enforces one input source"),
    };
    emit(None, &serde_json::to_string_pretty(&response)?)
}

fn cmd_serve(
    bind: &str,
    model: &Path,
    account_db: Option<&Path>,
    rpc: Option<String>,
    max_body_bytes: usize,
) -> Result<()> {
    let params = load_model(model)?;
    let db = load_account_db(account_db)?;
    let state = crate::server::AppState {
        params,
        db,
        default_rpc: rpc,
        model_path: model.display().to_string(),
    };
    runtime()?.block_on(crate::server::serve(bind, state, max_body_bytes))
}

fn cmd_bench(graphs: usize, nodes: usize, seed: u64, model: Option<&Path>) -> Result<()> {
    let params = match model {
        Some(path) => load_model(path)?,
        None => init_params(&ModelConfig::default(), seed)?,
    };
    let cfg = BenchConfig {
        graphs,
        nodes,
        seed,
    };
    let report = run_bench(&cfg, &params, &AccountDb::empty())?;
    emit(None, &serde_json::to_string_pretty(&report)?)
}
