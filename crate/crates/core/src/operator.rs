//! The operator `P = dQ` and source vector `B` of the equation `X = PX + B`.
//!
//! Column `j` of `Q` is the out-edge distribution of node `j`, normalised by
//! its out-degree weight. Dangling nodes have an all-zero column, so `Q` is
//! sub-stochastic and every column of `P` sums to either `d` or `0`.

use std::collections::{BTreeMap, BTreeSet};

use crate::error::SolveError;
use crate::graph::{Graph, NodeId};

pub const DEFAULT_DAMPING: f64 = 0.85;

/// How fluid is injected on nodes appended by a node-addition update.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum NodeFluidMode {
    /// New nodes receive `(1-d)/(N+k)`, so the resumed limit solves the new
    /// equation exactly.
    #[default]
    Consistent,
    /// New nodes receive `1/(N+k)`, without the `(1-d)` factor.
    FullUnit,
}

impl std::str::FromStr for NodeFluidMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "consistent" => Ok(NodeFluidMode::Consistent),
            "full" | "full_unit" => Ok(NodeFluidMode::FullUnit),
            other => Err(format!("unknown node fluid mode `{other}`")),
        }
    }
}

/// Sparse column of `P`: `(row, value)` with distinct sorted rows and
/// nonzero values.
pub type SparseColumn = Vec<(NodeId, f64)>;

#[derive(Clone, Debug)]
pub struct RankOperator {
    graph: Graph,
    damping: f64,
    node_fluid_mode: NodeFluidMode,
    /// `d / out_degree_weight(j)`, or 0 for dangling nodes.
    column_scale: Vec<f64>,
}

impl RankOperator {
    pub fn new(graph: Graph, damping: f64) -> Result<Self, SolveError> {
        Self::with_mode(graph, damping, NodeFluidMode::default())
    }

    pub fn with_mode(
        graph: Graph,
        damping: f64,
        node_fluid_mode: NodeFluidMode,
    ) -> Result<Self, SolveError> {
        if !(damping > 0.0 && damping < 1.0) {
            return Err(SolveError::InvalidArgument(format!(
                "damping {damping} not in (0, 1)"
            )));
        }
        let column_scale = (0..graph.node_count())
            .map(|j| {
                let w = graph.out_degree_weight(NodeId(j));
                if w > 0.0 {
                    damping / w
                } else {
                    0.0
                }
            })
            .collect();
        Ok(RankOperator {
            graph,
            damping,
            node_fluid_mode,
            column_scale,
        })
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn damping(&self) -> f64 {
        self.damping
    }

    pub fn node_fluid_mode(&self) -> NodeFluidMode {
        self.node_fluid_mode
    }

    pub fn node_count(&self) -> usize {
        self.graph.node_count()
    }

    /// Entries of column `j` without allocating.
    #[inline]
    pub fn column_iter(&self, j: NodeId) -> impl Iterator<Item = (NodeId, f64)> + '_ {
        let scale = self.column_scale[j.0];
        self.graph.out_edges(j).map(move |(i, w)| (i, scale * w))
    }

    pub fn column(&self, j: NodeId) -> SparseColumn {
        self.column_iter(j).collect()
    }

    /// Uniform source `(1-d)/N`.
    pub fn source_value(&self) -> f64 {
        (1.0 - self.damping) / self.node_count() as f64
    }

    pub fn b_vector(&self) -> Vec<f64> {
        vec![self.source_value(); self.node_count()]
    }

    /// `y = P x`, accumulated column by column.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.node_count()];
        for (j, &xj) in x.iter().enumerate() {
            if xj != 0.0 {
                for (i, v) in self.column_iter(NodeId(j)) {
                    y[i.0] += v * xj;
                }
            }
        }
        y
    }

    /// Operator over the same graph and mode with `k` isolated nodes appended.
    pub fn with_added_nodes(&self, k: usize) -> RankOperator {
        let (graph, _) = self
            .graph
            .apply_mutations(&crate::graph::MutationBatch::Nodes(k))
            .expect("node additions cannot fail");
        let mut column_scale = self.column_scale.clone();
        column_scale.resize(graph.node_count(), 0.0);
        RankOperator {
            graph,
            damping: self.damping,
            node_fluid_mode: self.node_fluid_mode,
            column_scale,
        }
    }
}

/// `column(new, j) - column(old, j)` for every `j` in `changed`, dropping
/// entries that cancel exactly and columns that end up empty.
///
/// Nodes of `new` beyond `old`'s range are treated as having an empty old
/// column.
pub fn delta_columns(
    old: &RankOperator,
    new: &RankOperator,
    changed: &BTreeSet<NodeId>,
) -> BTreeMap<NodeId, SparseColumn> {
    let mut out = BTreeMap::new();
    for &j in changed {
        let before: SparseColumn = if j.0 < old.node_count() {
            old.column(j)
        } else {
            Vec::new()
        };
        let after = new.column(j);
        let delta = merge_difference(&before, &after);
        if !delta.is_empty() {
            out.insert(j, delta);
        }
    }
    out
}

fn merge_difference(before: &[(NodeId, f64)], after: &[(NodeId, f64)]) -> SparseColumn {
    let mut delta = Vec::with_capacity(before.len().max(after.len()));
    let (mut a, mut b) = (0, 0);
    while a < before.len() || b < after.len() {
        let (row, value) = match (before.get(a), after.get(b)) {
            (Some(&(ra, va)), Some(&(rb, vb))) if ra == rb => {
                a += 1;
                b += 1;
                (ra, vb - va)
            }
            (Some(&(ra, va)), Some(&(rb, _))) if ra < rb => {
                a += 1;
                (ra, -va)
            }
            (Some(&(ra, va)), None) => {
                a += 1;
                (ra, -va)
            }
            (_, Some(&(rb, vb))) => {
                b += 1;
                (rb, vb)
            }
            (None, None) => unreachable!(),
        };
        if value != 0.0 {
            delta.push((row, value));
        }
    }
    delta
}
