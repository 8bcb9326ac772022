//! Weighted directed graphs in compressed sparse out-adjacency form.
//!
//! Edges are stored sorted by `(src, dst)`. Repeated additions of the same
//! pair are merged into one stored edge whose weight is the number of times
//! the pair was added, so the link count `L` counts addition events while the
//! stored edge count counts distinct pairs.

use std::collections::BTreeSet;
use std::fmt;
use std::io::{BufRead, Write};

use crate::error::GraphError;

/// Index of a node in a [`Graph`], 0-based.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub usize);

impl NodeId {
    #[inline]
    pub fn index(self) -> usize {
        self.0
    }
}

impl From<usize> for NodeId {
    fn from(i: usize) -> Self {
        NodeId(i)
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Graph {
    node_count: usize,
    /// `offsets[j]..offsets[j + 1]` indexes the out-edges of node `j`.
    offsets: Vec<usize>,
    targets: Vec<NodeId>,
    /// Multiplicity of each stored edge.
    weights: Vec<u32>,
    link_count: u64,
}

/// A staged set of additions. Link and node additions are never mixed.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum MutationBatch {
    Links(Vec<(NodeId, NodeId)>),
    Nodes(usize),
}

impl MutationBatch {
    pub fn empty() -> Self {
        MutationBatch::Links(Vec::new())
    }

    pub fn added_links(&self) -> &[(NodeId, NodeId)] {
        match self {
            MutationBatch::Links(links) => links,
            MutationBatch::Nodes(_) => &[],
        }
    }

    pub fn added_nodes(&self) -> usize {
        match self {
            MutationBatch::Links(_) => 0,
            MutationBatch::Nodes(k) => *k,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.added_links().is_empty() && self.added_nodes() == 0
    }
}

impl Graph {
    /// Builds a graph from `(src, dst)` link events. Every event adds weight 1.
    pub fn from_links<I>(node_count: usize, links: I) -> Result<Graph, GraphError>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let mut pairs: Vec<(usize, usize)> = Vec::new();
        for (src, dst) in links {
            for node in [src, dst] {
                if node >= node_count {
                    return Err(GraphError::NodeOutOfRange { node, node_count });
                }
            }
            pairs.push((src, dst));
        }
        Ok(Self::from_sorted_pairs(node_count, pairs))
    }

    /// An empty graph with `node_count` isolated nodes.
    pub fn isolated(node_count: usize) -> Graph {
        Graph {
            node_count,
            offsets: vec![0; node_count + 1],
            targets: Vec::new(),
            weights: Vec::new(),
            link_count: 0,
        }
    }

    fn from_sorted_pairs(node_count: usize, mut pairs: Vec<(usize, usize)>) -> Graph {
        pairs.sort_unstable();
        let link_count = pairs.len() as u64;
        let mut offsets = vec![0usize; node_count + 1];
        let mut targets = Vec::with_capacity(pairs.len());
        let mut weights: Vec<u32> = Vec::with_capacity(pairs.len());
        let mut last: Option<(usize, usize)> = None;
        for (src, dst) in pairs {
            if last == Some((src, dst)) {
                *weights.last_mut().expect("merged edge has a predecessor") += 1;
                continue;
            }
            last = Some((src, dst));
            offsets[src + 1] += 1;
            targets.push(NodeId(dst));
            weights.push(1);
        }
        for j in 0..node_count {
            offsets[j + 1] += offsets[j];
        }
        Graph {
            node_count,
            offsets,
            targets,
            weights,
            link_count,
        }
    }

    /// Parses the plain edge-list format.
    ///
    /// Lines are `src dst` (whitespace separated, 0-based). Empty lines and
    /// lines starting with `#` are skipped. An optional `N <count>` line before
    /// the first edge fixes the node count; otherwise it is one more than the
    /// largest index seen.
    pub fn load_edge_list<R: BufRead>(reader: R) -> Result<Graph, GraphError> {
        let mut declared: Option<usize> = None;
        let mut pairs = Vec::new();
        let mut max_seen: Option<usize> = None;

        for (idx, line) in reader.lines().enumerate() {
            let line_no = idx + 1;
            let line = line?;
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let mut tokens = trimmed.split_whitespace();
            let first = tokens.next().expect("non-empty line has a token");
            if first == "N" {
                if declared.is_some() || !pairs.is_empty() {
                    return Err(parse_err(line_no, "node-count header must precede all edges"));
                }
                let count = tokens
                    .next()
                    .ok_or_else(|| parse_err(line_no, "missing count after `N`"))?;
                let count = parse_index(count, line_no)?;
                if tokens.next().is_some() {
                    return Err(parse_err(line_no, "trailing tokens after node count"));
                }
                declared = Some(count);
                continue;
            }
            let second = tokens
                .next()
                .ok_or_else(|| parse_err(line_no, "expected `src dst`"))?;
            if tokens.next().is_some() {
                return Err(parse_err(line_no, "expected exactly two fields"));
            }
            let src = parse_index(first, line_no)?;
            let dst = parse_index(second, line_no)?;
            if let Some(n) = declared {
                if src >= n || dst >= n {
                    return Err(parse_err(
                        line_no,
                        &format!("node index exceeds declared count {n}"),
                    ));
                }
            }
            max_seen = Some(max_seen.map_or(src.max(dst), |m| m.max(src).max(dst)));
            pairs.push((src, dst));
        }

        let node_count = declared.unwrap_or_else(|| max_seen.map_or(0, |m| m + 1));
        Ok(Self::from_sorted_pairs(node_count, pairs))
    }

    /// Writes the canonical edge list: header, then one line per link event
    /// in `(src, dst)` order.
    pub fn write_edge_list<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "N {}", self.node_count)?;
        for (src, dst, w) in self.links() {
            for _ in 0..w {
                writeln!(out, "{} {}", src, dst)?;
            }
        }
        Ok(())
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    /// Number of link-addition events, i.e. the sum of all edge multiplicities.
    pub fn link_count(&self) -> u64 {
        self.link_count
    }

    /// Number of distinct stored `(src, dst)` pairs.
    pub fn edge_count(&self) -> usize {
        self.targets.len()
    }

    pub fn out_edge_count(&self, j: NodeId) -> usize {
        self.offsets[j.0 + 1] - self.offsets[j.0]
    }

    pub fn out_degree_weight(&self, j: NodeId) -> f64 {
        let (lo, hi) = (self.offsets[j.0], self.offsets[j.0 + 1]);
        self.weights[lo..hi].iter().map(|&w| f64::from(w)).sum()
    }

    /// Out-edges of `j` as `(dst, weight)` sorted by destination.
    pub fn out_edges(&self, j: NodeId) -> impl Iterator<Item = (NodeId, f64)> + '_ {
        let (lo, hi) = (self.offsets[j.0], self.offsets[j.0 + 1]);
        self.targets[lo..hi]
            .iter()
            .zip(&self.weights[lo..hi])
            .map(|(&t, &w)| (t, f64::from(w)))
    }

    /// All stored edges as `(src, dst, multiplicity)` in canonical order.
    pub fn links(&self) -> impl Iterator<Item = (NodeId, NodeId, u32)> + '_ {
        (0..self.node_count).flat_map(move |src| {
            let (lo, hi) = (self.offsets[src], self.offsets[src + 1]);
            (lo..hi).map(move |e| (NodeId(src), self.targets[e], self.weights[e]))
        })
    }

    pub fn is_dangling(&self, j: NodeId) -> bool {
        self.out_edge_count(j) == 0
    }

    pub fn dangling_nodes(&self) -> impl Iterator<Item = NodeId> + '_ {
        (0..self.node_count)
            .map(NodeId)
            .filter(move |&j| self.is_dangling(j))
    }

    pub fn dangling_count(&self) -> usize {
        self.dangling_nodes().count()
    }

    /// Subgraph induced by nodes `0..n`. `n >= node_count` returns a copy.
    pub fn restrict_first_n(&self, n: usize) -> Graph {
        if n >= self.node_count {
            return self.clone();
        }
        let mut offsets = Vec::with_capacity(n + 1);
        offsets.push(0);
        let mut targets = Vec::new();
        let mut weights = Vec::new();
        let mut link_count = 0u64;
        for src in 0..n {
            let (lo, hi) = (self.offsets[src], self.offsets[src + 1]);
            for e in lo..hi {
                if self.targets[e].0 < n {
                    targets.push(self.targets[e]);
                    weights.push(self.weights[e]);
                    link_count += u64::from(self.weights[e]);
                }
            }
            offsets.push(targets.len());
        }
        Graph {
            node_count: n,
            offsets,
            targets,
            weights,
            link_count,
        }
    }

    /// Applies a batch and returns the mutated graph plus the set of nodes
    /// whose out-edges changed.
    pub fn apply_mutations(
        &self,
        batch: &MutationBatch,
    ) -> Result<(Graph, BTreeSet<NodeId>), GraphError> {
        match batch {
            MutationBatch::Nodes(k) => {
                let mut g = self.clone();
                let last = *g.offsets.last().expect("offsets is never empty");
                g.offsets.extend(std::iter::repeat_n(last, *k));
                g.node_count += k;
                Ok((g, BTreeSet::new()))
            }
            MutationBatch::Links(added) => {
                let n = self.node_count;
                let mut changed = BTreeSet::new();
                for &(src, dst) in added {
                    for node in [src, dst] {
                        if node.0 >= n {
                            return Err(GraphError::NodeOutOfRange {
                                node: node.0,
                                node_count: n,
                            });
                        }
                    }
                    changed.insert(src);
                }
                if added.is_empty() {
                    return Ok((self.clone(), changed));
                }
                let mut pairs: Vec<(usize, usize)> =
                    Vec::with_capacity(self.link_count as usize + added.len());
                for (src, dst, w) in self.links() {
                    pairs.extend(std::iter::repeat_n((src.0, dst.0), w as usize));
                }
                pairs.extend(added.iter().map(|&(s, d)| (s.0, d.0)));
                Ok((Self::from_sorted_pairs(n, pairs), changed))
            }
        }
    }
}

fn parse_err(line: usize, message: &str) -> GraphError {
    GraphError::Parse {
        line,
        message: message.to_string(),
    }
}

fn parse_index(token: &str, line: usize) -> Result<usize, GraphError> {
    match token.parse::<i64>() {
        Ok(v) if v < 0 => Err(parse_err(line, &format!("negative node index {v}"))),
        Ok(v) => Ok(v as usize),
        Err(_) => Err(parse_err(line, &format!("invalid integer `{token}`"))),
    }
}
