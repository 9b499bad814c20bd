//! Message-passing adjacency: which nodes feed which, and with what coefficients.
//!
//! Built once per (graph, direction) pair and shared by forward and backward passes.
//! Parallel edges are kept as repeated entries, so an account that received three
//! transfers from the same counterparty weighs that neighbor three times — the
//! multigraph carries signal, and collapsing it here would throw that away.

use serde::{Deserialize, Serialize};

use crate::cashflow::CashFlowGraph;

/// How directed cash-flow edges become message-passing edges.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    /// Messages flow along transfer direction only: an edge s→r lets r hear from s.
    ForwardEdges,
    /// Messages flow both ways: each edge also acts as its own reverse (default).
    #[default]
    Symmetrized,
}

impl std::str::FromStr for Direction {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "forward_edges" => Ok(Direction::ForwardEdges),
            "symmetrized" => Ok(Direction::Symmetrized),
            other => Err(format!(
                "unknown direction {other:?} (expected forward_edges|symmetrized)"
            )),
        }
    }
}

/// Precomputed neighbor lists and normalization coefficients for one graph.
///
/// `in_lists[v]` holds the message sources of node `v` (with multiplicity) in a fixed
/// order: original edges first, then — under [`Direction::Symmetrized`] — the reverse
/// edges, each group in input edge order. Fixed ordering keeps floating-point
/// reductions identical across runs.
///
/// For GCN, `gcn_rows[v]` holds `(u, coeff)` pairs over `u ∈ N(v) ∪ {v}` where
/// `coeff = 1 / sqrt(deĝ(v) · deĝ(u))` and `deĝ(x)` is the message in-degree of `x`
/// plus one for the self-loop. `gcn_cols` is the exact transpose (same coefficients,
/// grouped by source), used by the backward pass.
#[derive(Debug, Clone)]
pub struct MessageGraph {
    n: usize,
    in_lists: Vec<Vec<usize>>,
    out_lists: Vec<Vec<usize>>,
    gcn_rows: Vec<Vec<(usize, f64)>>,
    gcn_cols: Vec<Vec<(usize, f64)>>,
}

impl MessageGraph {
    /// Builds the message structure for `n` nodes and the given directed edges.
    pub fn new(n: usize, edges: &[(usize, usize)], direction: Direction) -> MessageGraph {
        let mut in_lists: Vec<Vec<usize>> = vec![Vec::new(); n];
        let mut out_lists: Vec<Vec<usize>> = vec![Vec::new(); n];
        let push = |s: usize, r: usize, in_l: &mut Vec<Vec<usize>>, out_l: &mut Vec<Vec<usize>>| {
            in_l[r].push(s);
            out_l[s].push(r);
        };
        for &(s, r) in edges {
            push(s, r, &mut in_lists, &mut out_lists);
        }
        if direction == Direction::Symmetrized {
            for &(s, r) in edges {
                push(r, s, &mut in_lists, &mut out_lists);
            }
        }

        // deĝ = message in-degree + 1 (self-loop). Under symmetrization this equals
        // the classic undirected GCN degree.
        let deg_hat: Vec<f64> = (0..n).map(|v| in_lists[v].len() as f64 + 1.0).collect();
        let mut gcn_rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        let mut gcn_cols: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for v in 0..n {
            for &u in &in_lists[v] {
                let coeff = 1.0 / (deg_hat[v] * deg_hat[u]).sqrt();
                gcn_rows[v].push((u, coeff));
                gcn_cols[u].push((v, coeff));
            }
            let self_coeff = 1.0 / deg_hat[v];
            gcn_rows[v].push((v, self_coeff));
            gcn_cols[v].push((v, self_coeff));
        }

        MessageGraph {
            n,
            in_lists,
            out_lists,
            gcn_rows,
            gcn_cols,
        }
    }

    /// Builds from a cash flow graph's edge list.
    pub fn from_graph(g: &CashFlowGraph, direction: Direction) -> MessageGraph {
        let edges: Vec<(usize, usize)> = g.edges.iter().map(|(s, r)| (s.0, r.0)).collect();
        MessageGraph::new(g.nodes.len(), &edges, direction)
    }

    /// Node count.
    pub fn node_count(&self) -> usize {
        self.n
    }

    /// Message sources of `v`, with multiplicity (no self entry).
    pub fn in_neighbors(&self, v: usize) -> &[usize] {
        &self.in_lists[v]
    }

    /// Message targets fed by `v`, with multiplicity (transpose of `in_neighbors`).
    pub fn out_neighbors(&self, v: usize) -> &[usize] {
        &self.out_lists[v]
    }

    /// GCN row `v`: `(source, coefficient)` over `N(v) ∪ {v}`.
    pub fn gcn_row(&self, v: usize) -> &[(usize, f64)] {
        &self.gcn_rows[v]
    }

    /// GCN transpose column `u`: `(target, coefficient)` pairs mirroring `gcn_row`.
    pub fn gcn_col(&self, u: usize) -> &[(usize, f64)] {
        &self.gcn_cols[u]
    }
}
