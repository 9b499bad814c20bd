//! Cash flow graphs: the directed multigraph built from one transaction's transfers.
//!
//! Nodes are the distinct accounts that sent or received assets, indexed densely in
//! first-appearance order. Every [`Transfer`] becomes one directed edge carrying its
//! asset and amount; parallel edges are kept (collapsing them would corrupt the
//! frequency features), and self-loops are allowed.
//!
//! Graphs serialize to UTF-8 JSON:
//!
//! ```json
//! {
//!   "nodes": [ { "address": "0x…" } ],
//!   "edges": [ { "s": 0, "r": 1, "asset": "native" | "0x…", "amount": "120000000" } ],
//!   "features": [[…8 floats…]] | null,
//!   "label": 0 | 1 | null
//! }
//! ```
//!
//! Amounts are decimal strings (256-bit integers do not fit JSON numbers).

use std::collections::HashMap;
use std::fmt;

use primitive_types::U256;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::features::FeatureMatrix;
use crate::txparse::{Address, AssetId, Transfer};

/// Dense node index, assigned in first-appearance order of addresses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub usize);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "v{}", self.0)
    }
}

/// Per-node metadata: currently the account address alone. Node identity *is* the
/// address — assets are edge metadata, not node splits.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NodeMeta {
    pub address: Address,
}

/// Per-edge metadata: which asset moved and how much.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EdgeMeta {
    pub asset: AssetId,
    /// Strictly positive; zero-amount movements never become edges.
    pub amount: U256,
}

/// The directed cash flow multigraph of one transaction.
///
/// Invariants: `edges.len() == edge_meta.len() >= 1`; every endpoint indexes into
/// `nodes`; every node appears in at least one edge. `features`/`label` are attached
/// by later stages and absent on a freshly constructed graph.
#[derive(Debug, Clone, PartialEq)]
pub struct CashFlowGraph {
    pub nodes: Vec<NodeMeta>,
    /// `(sender, receiver)` per transfer, in input order.
    pub edges: Vec<(NodeId, NodeId)>,
    /// Parallel to `edges`.
    pub edge_meta: Vec<EdgeMeta>,
    /// Node feature rows, once extracted.
    pub features: Option<FeatureMatrix>,
    /// Ground-truth class if known (1 = price-manipulation attack).
    pub label: Option<u8>,
}

/// Headline statistics of a graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphStats {
    pub node_count: usize,
    pub edge_count: usize,
    /// Distinct assets across all edges.
    pub asset_count: usize,
    /// Maximum over nodes of in-degree + out-degree, counting parallel edges.
    /// A self-loop contributes one to each side.
    pub max_node_degree: usize,
}

/// Why a graph could not be built or decoded.
#[derive(Debug, Error)]
pub enum GraphError {
    /// No transfers: the transaction carries no cash flow, so there is no graph.
    #[error("no transfers: cannot build an empty cash flow graph")]
    EmptyGraph,
    /// Serialized graph document is not valid JSON.
    #[error("malformed graph document at byte {offset}: {message}")]
    Parse { offset: usize, message: String },
    /// Serialized graph document violates the schema.
    #[error("graph schema violation at {field}: {message}")]
    Schema { field: String, message: String },
    /// An amount does not fit in 256 bits.
    #[error("value out of range at {field}: exceeds 2^256 - 1")]
    Range { field: String },
}

impl GraphError {
    fn schema(field: impl Into<String>, message: impl Into<String>) -> Self {
        GraphError::Schema {
            field: field.into(),
            message: message.into(),
        }
    }
}

/// Builds the cash flow graph for a transfer list.
///
/// Nodes are created in first-appearance order (sender before receiver within one
/// transfer); edges follow input order exactly. The construction is deterministic: the
/// address→node map is used for lookups only, never iterated.
///
/// # Errors
///
/// [`GraphError::EmptyGraph`] when `transfers` is empty — transfer-free transactions
/// are not forwarded through the pipeline.
pub fn construct_graph(transfers: &[Transfer]) -> Result<CashFlowGraph, GraphError> {
    if transfers.is_empty() {
        return Err(GraphError::EmptyGraph);
    }
    let mut index: HashMap<Address, NodeId> = HashMap::new();
    let mut nodes: Vec<NodeMeta> = Vec::new();
    let mut intern = |addr: Address, nodes: &mut Vec<NodeMeta>| -> NodeId {
        *index.entry(addr).or_insert_with(|| {
            nodes.push(NodeMeta { address: addr });
            NodeId(nodes.len() - 1)
        })
    };

    let mut edges = Vec::with_capacity(transfers.len());
    let mut edge_meta = Vec::with_capacity(transfers.len());
    for t in transfers {
        debug_assert!(!t.amount.is_zero(), "upstream filters zero amounts");
        let s = intern(t.sender, &mut nodes);
        let r = intern(t.receiver, &mut nodes);
        edges.push((s, r));
        edge_meta.push(EdgeMeta {
            asset: t.asset,
            amount: t.amount,
        });
    }

    Ok(CashFlowGraph {
        nodes,
        edges,
        edge_meta,
        features: None,
        label: None,
    })
}

/// Computes [`GraphStats`] by direct counting.
///
/// `max_node_degree` counts parallel edges; the degree of a node is the number of
/// edge endpoints touching it.
pub fn graph_stats(g: &CashFlowGraph) -> GraphStats {
    let mut degree = vec![0usize; g.nodes.len()];
    for (s, r) in &g.edges {
        degree[s.0] += 1;
        degree[r.0] += 1;
    }
    // Distinct assets: collect into a sorted, deduped list (order-free counting).
    let mut assets: Vec<AssetId> = g.edge_meta.iter().map(|m| m.asset).collect();
    assets.sort_unstable();
    assets.dedup();

    GraphStats {
        node_count: g.nodes.len(),
        edge_count: g.edges.len(),
        asset_count: assets.len(),
        max_node_degree: degree.iter().copied().max().unwrap_or(0),
    }
}

// ---------------------------------------------------------------------------
// JSON serialization
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct GraphDoc {
    nodes: Vec<NodeDoc>,
    edges: Vec<EdgeDoc>,
    features: Option<Vec<Vec<f64>>>,
    label: Option<u8>,
}

#[derive(Serialize, Deserialize)]
struct NodeDoc {
    address: String,
}

#[derive(Serialize, Deserialize)]
struct EdgeDoc {
    s: usize,
    r: usize,
    asset: String,
    amount: String,
}

/// Serializes a graph to its JSON document form.
///
/// Deterministic: field order is fixed, addresses are canonical, amounts are decimal,
/// and floats render in shortest round-trip form — equal graphs produce identical
/// bytes.
pub fn graph_to_json(g: &CashFlowGraph) -> String {
    let doc = GraphDoc {
        nodes: g
            .nodes
            .iter()
            .map(|n| NodeDoc {
                address: n.address.to_string(),
            })
            .collect(),
        edges: g
            .edges
            .iter()
            .zip(&g.edge_meta)
            .map(|((s, r), m)| EdgeDoc {
                s: s.0,
                r: r.0,
                asset: m.asset.to_string(),
                amount: m.amount.to_string(),
            })
            .collect(),
        features: g.features.as_ref().map(FeatureMatrix::to_rows),
        label: g.label,
    };
    serde_json::to_string_pretty(&doc).expect("graph document serializes")
}

/// Decodes a graph from its JSON document form, validating every invariant.
///
/// # Errors
///
/// * [`GraphError::Parse`] — not valid JSON.
/// * [`GraphError::Schema`] — bad addresses/indices/feature shape, or an isolated
///   node, naming the offending field.
/// * [`GraphError::Range`] — an amount exceeding 256 bits.
/// * [`GraphError::EmptyGraph`] — a document with no edges.
pub fn graph_from_json(raw: &[u8]) -> Result<CashFlowGraph, GraphError> {
    let doc: GraphDoc = serde_json::from_slice(raw).map_err(|e| {
        if e.is_syntax() || e.is_eof() {
            GraphError::Parse {
                offset: e.column().saturating_sub(1),
                message: e.to_string(),
            }
        } else {
            GraphError::schema("$", e.to_string())
        }
    })?;

    if doc.edges.is_empty() {
        return Err(GraphError::EmptyGraph);
    }

    let mut nodes = Vec::with_capacity(doc.nodes.len());
    for (i, n) in doc.nodes.iter().enumerate() {
        let address: Address = n
            .address
            .parse()
            .map_err(|e| GraphError::schema(format!("nodes[{i}].address"), format!("{e}")))?;
        nodes.push(NodeMeta { address });
    }

    let mut edges = Vec::with_capacity(doc.edges.len());
    let mut edge_meta = Vec::with_capacity(doc.edges.len());
    let mut touched = vec![false; nodes.len()];
    for (i, e) in doc.edges.iter().enumerate() {
        let field = |part: &str| format!("edges[{i}].{part}");
        if e.s >= nodes.len() {
            return Err(GraphError::schema(field("s"), "endpoint out of node range"));
        }
        if e.r >= nodes.len() {
            return Err(GraphError::schema(field("r"), "endpoint out of node range"));
        }
        let asset: AssetId = e
            .asset
            .parse()
            .map_err(|err| GraphError::schema(field("asset"), format!("{err}")))?;
        let amount = U256::from_dec_str(&e.amount).map_err(|err| match err {
            uint::FromDecStrErr::InvalidLength => GraphError::Range {
                field: field("amount"),
            },
            other => GraphError::schema(field("amount"), format!("{other}")),
        })?;
        if amount.is_zero() {
            return Err(GraphError::schema(field("amount"), "amount must be > 0"));
        }
        touched[e.s] = true;
        touched[e.r] = true;
        edges.push((NodeId(e.s), NodeId(e.r)));
        edge_meta.push(EdgeMeta { asset, amount });
    }

    if let Some(idx) = touched.iter().position(|t| !t) {
        return Err(GraphError::schema(
            format!("nodes[{idx}]"),
            "node appears in no edge",
        ));
    }

    let features = match doc.features {
        None => None,
        Some(rows) => Some(
            FeatureMatrix::from_rows(&rows, nodes.len())
                .map_err(|m| GraphError::schema("features", m))?,
        ),
    };

    if let Some(label) = doc.label {
        if label > 1 {
            return Err(GraphError::schema("label", "expected 0 or 1"));
        }
    }

    Ok(CashFlowGraph {
        nodes,
        edges,
        edge_meta,
        features,
        label: doc.label,
    })
}

/// Tiny featurized graphs shared by unit tests across the crate.
#[cfg(test)]
pub(crate) mod test_support {
    use super::*;
    use crate::features::{assemble_features, AccountDb};

    fn addr(fill: u8) -> Address {
        Address([fill; 20])
    }

    /// A native-asset ring over the given amounts (node i → node i+1 mod n),
    /// with features assembled against an empty account database.
    pub(crate) fn ring_with_amounts(amounts: &[u64]) -> CashFlowGraph {
        let n = amounts.len();
        let transfers: Vec<Transfer> = amounts
            .iter()
            .enumerate()
            .map(|(i, &amount)| Transfer {
                sender: addr(i as u8 + 1),
                receiver: addr(((i + 1) % n) as u8 + 1),
                asset: AssetId::Native,
                amount: U256::from(amount),
            })
            .collect();
        let g = construct_graph(&transfers).expect("ring is nonempty");
        assemble_features(g, &AccountDb::empty()).expect("ring features assemble")
    }

    /// A uniform `n`-node ring.
    pub(crate) fn ring_graph(n: usize) -> CashFlowGraph {
        ring_with_amounts(&vec![100; n])
    }

    /// A hub spraying equal native payments at `k` leaves. Its frequency,
    /// diversity, and clamped-profit column means all differ from a ring's,
    /// so a (ring, fan) pair stays separable after mean readout even for
    /// models without message passing.
    pub(crate) fn fan_graph(k: usize) -> CashFlowGraph {
        let transfers: Vec<Transfer> = (0..k)
            .map(|i| Transfer {
                sender: addr(0xF0),
                receiver: addr(i as u8 + 1),
                asset: AssetId::Native,
                amount: U256::from(100u64),
            })
            .collect();
        let g = construct_graph(&transfers).expect("fan is nonempty");
        assemble_features(g, &AccountDb::empty()).expect("fan features assemble")
    }

    /// One benign uniform ring (label 0) and one ring with a 16× heavy edge
    /// (label 1) — separable through the profit feature alone.
    pub(crate) fn labeled_pair(n: usize) -> Vec<CashFlowGraph> {
        let mut neg = ring_graph(n);
        neg.label = Some(0);
        let mut amounts = vec![100; n];
        amounts[0] = 1600;
        let mut pos = ring_with_amounts(&amounts);
        pos.label = Some(1);
        vec![neg, pos]
    }
}
