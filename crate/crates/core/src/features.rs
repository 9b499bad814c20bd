//! Node features: the |V|×8 matrix attached to a cash flow graph.
//!
//! Four families, concatenated per node in fixed column order:
//!
//! | columns | family    | meaning                                                   |
//! |---------|-----------|-----------------------------------------------------------|
//! | 0–2     | type      | one-hot: opaque contract / transparent contract / EOA      |
//! | 3–4     | frequency | in/out edge counts ÷ graph-wide maxima (parallel edges count) |
//! | 5–6     | diversity | distinct in/out assets ÷ graph-wide maxima                 |
//! | 7       | profit    | net flow per asset ÷ that asset's max transfer, summed, clamped to [−1,1] |
//!
//! Account type comes from a local snapshot of a verified-contract database
//! ([`AccountDb`]): present-and-unverified → opaque contract `[1,0,0]`,
//! present-and-verified → transparent contract `[0,1,0]`, absent → externally owned
//! account `[0,0,1]`. Absence is meaningful, not an error.
//!
//! Frequency and diversity normalize by the graph's maxima; a direction with no edges
//! anywhere would divide by zero, so its components are defined as 0. The profit score
//! accumulates `amount / maxAmount(asset)` ratios (+ at the receiver, − at the sender)
//! and clamps once, after full accumulation; the pre-clamp values sum to zero across
//! the graph because every edge contributes `+x` and `−x`.

use std::collections::HashMap;
use std::path::Path;

use ndarray::{Array1, Array2};
use primitive_types::U256;

use crate::cashflow::{CashFlowGraph, GraphError};
use crate::txparse::{Address, AssetId};

/// Number of feature columns in the standard layout.
pub const FEATURE_DIM: usize = 8;

/// Snapshot of the verified-contract database: address → source-verified flag.
///
/// Addresses absent from the snapshot are treated as externally owned accounts.
/// Lookups are exact-match on canonical addresses; the map is never iterated, so its
/// internal order cannot influence results.
#[derive(Debug, Clone, Default)]
pub struct AccountDb {
    entries: HashMap<Address, bool>,
}

impl AccountDb {
    /// An empty snapshot: every address classifies as an EOA.
    pub fn empty() -> Self {
        Self::default()
    }

    /// Loads a snapshot from its JSON form: an object mapping address → boolean.
    ///
    /// ```json
    /// { "0xabc…": true, "0xdef…": false }
    /// ```
    pub fn from_json(raw: &[u8]) -> Result<Self, String> {
        let entries: HashMap<Address, bool> =
            serde_json::from_slice(raw).map_err(|e| format!("account db: {e}"))?;
        Ok(AccountDb { entries })
    }

    /// Loads a snapshot file.
    pub fn from_path(path: &Path) -> Result<Self, String> {
        let raw = std::fs::read(path).map_err(|e| format!("account db {path:?}: {e}"))?;
        Self::from_json(&raw)
    }

    /// Inserts or replaces one entry.
    pub fn insert(&mut self, address: Address, verified: bool) {
        self.entries.insert(address, verified);
    }

    /// Exact-match lookup; `None` means "not a known contract".
    pub fn lookup(&self, address: &Address) -> Option<bool> {
        self.entries.get(address).copied()
    }

    /// Number of known contracts.
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    /// True when the snapshot has no entries.
    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// The per-node feature matrix.
///
/// Standard layout is [`FEATURE_DIM`] = 8 columns; ablation variants (in-memory only)
/// carry the masked column subset. Serialized graphs always store the full 8 columns.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    data: Array2<f64>,
}

impl FeatureMatrix {
    /// Wraps a matrix. Every entry must be finite.
    pub fn new(data: Array2<f64>) -> Result<Self, String> {
        if data.iter().any(|v| !v.is_finite()) {
            return Err("feature matrix contains a non-finite value".into());
        }
        Ok(FeatureMatrix { data })
    }

    /// Rows (= node count).
    pub fn nrows(&self) -> usize {
        self.data.nrows()
    }

    /// Columns (8 in the standard layout).
    pub fn ncols(&self) -> usize {
        self.data.ncols()
    }

    /// Read-only view of the underlying matrix.
    pub fn as_array(&self) -> &Array2<f64> {
        &self.data
    }

    /// Copies out the selected columns (ablation masking), preserving row order.
    pub fn select_columns(&self, columns: &[usize]) -> FeatureMatrix {
        let mut out = Array2::zeros((self.data.nrows(), columns.len()));
        for (j, &c) in columns.iter().enumerate() {
            out.column_mut(j).assign(&self.data.column(c));
        }
        FeatureMatrix { data: out }
    }

    /// Row-major nested vectors, for serialization.
    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.data
            .rows()
            .into_iter()
            .map(|r| r.to_vec())
            .collect()
    }

    /// Rebuilds from nested vectors, validating shape and finiteness.
    pub fn from_rows(rows: &[Vec<f64>], expected_nodes: usize) -> Result<Self, String> {
        if rows.len() != expected_nodes {
            return Err(format!(
                "expected {expected_nodes} feature rows, found {}",
                rows.len()
            ));
        }
        for (i, row) in rows.iter().enumerate() {
            if row.len() != FEATURE_DIM {
                return Err(format!(
                    "feature row {i} has {} columns, expected {FEATURE_DIM}",
                    row.len()
                ));
            }
        }
        let flat: Vec<f64> = rows.iter().flatten().copied().collect();
        let data = Array2::from_shape_vec((rows.len(), FEATURE_DIM), flat)
            .expect("row-major shape matches");
        FeatureMatrix::new(data)
    }
}

/// Converts a 256-bit integer to the nearest `f64`, rounding ties to even.
///
/// This is the full-precision conversion: take the top 53 significand bits, inspect
/// the remainder, and round exactly as `f64` arithmetic would. The result matches
/// parsing the decimal expansion with `f64::from_str` bit-for-bit (checked by a
/// property test), and values near 2^256 round up to 2^256 without overflow.
pub fn u256_to_f64(v: U256) -> f64 {
    if v.is_zero() {
        return 0.0;
    }
    let bits = 256 - v.leading_zeros() as usize; // position of the highest set bit + 1
    if bits <= 53 {
        return v.low_u64() as f64; // exactly representable
    }
    let shift = bits - 53;
    let mut mantissa = (v >> shift).low_u64();
    let remainder = v & ((U256::one() << shift) - 1);
    let half = U256::one() << (shift - 1);
    // Round to nearest, ties to even.
    if remainder > half || (remainder == half && mantissa & 1 == 1) {
        mantissa += 1; // may carry into 2^53; the float multiply below absorbs it
    }
    (mantissa as f64) * (shift as f64).exp2()
}

/// Column triples for the node-type family: one-hot account classification.
///
/// Returned per node: `[1,0,0]` opaque contract, `[0,1,0]` transparent contract,
/// `[0,0,1]` EOA (address absent from the snapshot).
pub fn node_type(g: &CashFlowGraph, db: &AccountDb) -> Vec<[f64; 3]> {
    g.nodes
        .iter()
        .map(|n| match db.lookup(&n.address) {
            Some(false) => [1.0, 0.0, 0.0],
            Some(true) => [0.0, 1.0, 0.0],
            None => [0.0, 0.0, 1.0],
        })
        .collect()
}

/// Column pairs for the frequency family: `[in_freq, out_freq]`.
///
/// Edge counts per node (parallel edges count) divided by the graph-wide maxima.
/// If a direction has no edges at all, its maximum is 0 and every component of that
/// direction is defined as 0.
pub fn transfer_frequency(g: &CashFlowGraph) -> Vec<[f64; 2]> {
    let n = g.nodes.len();
    let mut in_count = vec![0usize; n];
    let mut out_count = vec![0usize; n];
    for (s, r) in &g.edges {
        out_count[s.0] += 1;
        in_count[r.0] += 1;
    }
    let max_in = in_count.iter().copied().max().unwrap_or(0);
    let max_out = out_count.iter().copied().max().unwrap_or(0);
    let ratio = |count: usize, max: usize| {
        if max == 0 {
            0.0
        } else {
            count as f64 / max as f64
        }
    };
    (0..n)
        .map(|v| [ratio(in_count[v], max_in), ratio(out_count[v], max_out)])
        .collect()
}

/// Assigns each distinct asset a dense index in first-appearance (edge) order.
/// The map is lookup-only; iteration happens over the returned dense vectors, so
/// results never depend on hash order.
fn index_assets(g: &CashFlowGraph) -> (HashMap<AssetId, usize>, usize) {
    let mut index = HashMap::new();
    let mut count = 0usize;
    for m in &g.edge_meta {
        index.entry(m.asset).or_insert_with(|| {
            let i = count;
            count += 1;
            i
        });
    }
    (index, count)
}

/// Column pairs for the diversity family: `[in_div, out_div]`.
///
/// Distinct assets received/sent per node, divided by the graph-wide maxima of those
/// distinct counts; zero denominator → 0 as for frequency.
pub fn transfer_diversity(g: &CashFlowGraph) -> Vec<[f64; 2]> {
    let n = g.nodes.len();
    let (asset_index, asset_count) = index_assets(g);
    // seen[v][a]: node v moved asset a in the given direction.
    let mut seen_in = vec![vec![false; asset_count]; n];
    let mut seen_out = vec![vec![false; asset_count]; n];
    for ((s, r), m) in g.edges.iter().zip(&g.edge_meta) {
        let a = asset_index[&m.asset];
        seen_out[s.0][a] = true;
        seen_in[r.0][a] = true;
    }
    let distinct = |seen: &[bool]| seen.iter().filter(|b| **b).count();
    let in_counts: Vec<usize> = seen_in.iter().map(|s| distinct(s)).collect();
    let out_counts: Vec<usize> = seen_out.iter().map(|s| distinct(s)).collect();
    let max_in = in_counts.iter().copied().max().unwrap_or(0);
    let max_out = out_counts.iter().copied().max().unwrap_or(0);
    let ratio = |count: usize, max: usize| {
        if max == 0 {
            0.0
        } else {
            count as f64 / max as f64
        }
    };
    (0..n)
        .map(|v| [ratio(in_counts[v], max_in), ratio(out_counts[v], max_out)])
        .collect()
}

/// Per-node profit scores *before* clamping.
///
/// For every edge with asset `a` and amount `m`, the ratio `m / maxAmount(a)` is
/// added to the receiver and subtracted from the sender (ratios in `f64`, amounts
/// converted via [`u256_to_f64`]). Accumulation order is edge order, then asset-index
/// order, so results are deterministic. The raw scores sum to ~0 across nodes (exact
/// up to float rounding).
pub fn profit_score_raw(g: &CashFlowGraph) -> Vec<f64> {
    let n = g.nodes.len();
    let (asset_index, asset_count) = index_assets(g);

    // Max single-transfer amount per asset, found in exact integer arithmetic.
    let mut max_amount = vec![U256::zero(); asset_count];
    for m in &g.edge_meta {
        let a = asset_index[&m.asset];
        if m.amount > max_amount[a] {
            max_amount[a] = m.amount;
        }
    }
    let max_f: Vec<f64> = max_amount.into_iter().map(u256_to_f64).collect();

    // Net flow per (node, asset) in f64, accumulated in edge order.
    let mut net = vec![vec![0.0f64; asset_count]; n];
    for ((s, r), m) in g.edges.iter().zip(&g.edge_meta) {
        let a = asset_index[&m.asset];
        let ratio = u256_to_f64(m.amount) / max_f[a]; // max ≥ amount > 0
        net[r.0][a] += ratio;
        net[s.0][a] -= ratio;
    }

    // Sum over assets in dense index order (fixed order keeps float sums stable).
    net.into_iter().map(|per_asset| per_asset.iter().sum()).collect()
}

/// Per-node profit scores, clamped once to [−1, 1] after full accumulation.
pub fn profit_score(g: &CashFlowGraph) -> Vec<f64> {
    profit_score_raw(g)
        .into_iter()
        .map(|p| p.clamp(-1.0, 1.0))
        .collect()
}

/// Runs all four feature algorithms and attaches the assembled matrix to the graph.
///
/// Row layout per node: `type(3) ++ frequency(2) ++ diversity(2) ++ profit(1)`.
/// The graph is otherwise unchanged (edges, metadata, label all preserved).
///
/// # Errors
///
/// [`GraphError::EmptyGraph`] for a graph with no nodes (cannot arise from
/// [`construct_graph`](crate::cashflow::construct_graph), but deserialized inputs go
/// through here too).
pub fn assemble_features(
    mut g: CashFlowGraph,
    db: &AccountDb,
) -> Result<CashFlowGraph, GraphError> {
    if g.nodes.is_empty() || g.edges.is_empty() {
        return Err(GraphError::EmptyGraph);
    }
    let types = node_type(&g, db);
    let freq = transfer_frequency(&g);
    let div = transfer_diversity(&g);
    let profit = profit_score(&g);

    let n = g.nodes.len();
    let mut data = Array2::zeros((n, FEATURE_DIM));
    for v in 0..n {
        let row: Array1<f64> = ndarray::arr1(&[
            types[v][0], types[v][1], types[v][2], freq[v][0], freq[v][1], div[v][0], div[v][1],
            profit[v],
        ]);
        data.row_mut(v).assign(&row);
    }
    g.features = Some(FeatureMatrix::new(data).expect("feature algorithms produce finite values"));
    Ok(g)
}
