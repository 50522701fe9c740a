//! Undirected weighted graphs with dense node indexing.
//!
//! Nodes are identified by a dense index in `0..node_count`. Graphs parsed
//! from text keep a bijective side table between the original string
//! identifiers and those indices; indices are handed out in order of first
//! appearance so that a given input file always produces the same layout.
//!
//! Adjacency is stored in compressed sparse row form. Each undirected edge is
//! stored twice (once per endpoint) and every neighbor list is sorted by index.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt::Write as _;
use std::io::BufRead;

use log::warn;

use crate::error::{Error, Result};

/// Dense node index, `0 <= id < node_count`.
pub type NodeId = usize;

#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    offsets: Vec<usize>,
    targets: Vec<NodeId>,
    weights: Vec<f64>,
    ids: Vec<String>,
    index: HashMap<String, NodeId>,
}

impl Graph {
    /// Builds a graph from an undirected edge list over `node_count` nodes.
    ///
    /// Self-loops are dropped and duplicate edges (in either orientation) are
    /// merged by summing their weights. Node identifiers default to the
    /// decimal index.
    pub fn from_edges(node_count: usize, edges: &[(NodeId, NodeId, f64)]) -> Result<Self> {
        let ids = (0..node_count).map(|i| i.to_string()).collect();
        Self::build(ids, edges.iter().copied())
    }

    fn build(
        ids: Vec<String>,
        edges: impl IntoIterator<Item = (NodeId, NodeId, f64)>,
    ) -> Result<Self> {
        let node_count = ids.len();
        let mut merged: BTreeMap<(NodeId, NodeId), f64> = BTreeMap::new();
        for (a, b, w) in edges {
            if a >= node_count || b >= node_count {
                return Err(Error::NodeOutOfRange {
                    index: a.max(b),
                    node_count,
                });
            }
            if !(w.is_finite() && w > 0.0) {
                return Err(Error::invalid(format!(
                    "edge ({a}, {b}) has non-positive weight {w}"
                )));
            }
            if a == b {
                warn!("dropping self-loop on node `{}`", ids[a]);
                continue;
            }
            *merged.entry((a.min(b), a.max(b))).or_insert(0.0) += w;
        }

        let mut degree = vec![0usize; node_count];
        for &(a, b) in merged.keys() {
            degree[a] += 1;
            degree[b] += 1;
        }
        let mut offsets = Vec::with_capacity(node_count + 1);
        offsets.push(0);
        for d in &degree {
            offsets.push(offsets.last().unwrap() + d);
        }
        let total = *offsets.last().unwrap();
        let mut targets = vec![0; total];
        let mut weights = vec![0.0; total];
        let mut cursor = offsets[..node_count].to_vec();
        // BTreeMap iteration is ordered by (low, high), which fills every
        // neighbor list in ascending index order.
        for (&(a, b), &w) in &merged {
            targets[cursor[a]] = b;
            weights[cursor[a]] = w;
            cursor[a] += 1;
        }
        for (&(a, b), &w) in &merged {
            targets[cursor[b]] = a;
            weights[cursor[b]] = w;
            cursor[b] += 1;
        }
        for k in 0..node_count {
            let range = offsets[k]..offsets[k + 1];
            let mut pairs: Vec<_> = targets[range.clone()]
                .iter()
                .copied()
                .zip(weights[range.clone()].iter().copied())
                .collect();
            pairs.sort_by_key(|&(t, _)| t);
            for (slot, (t, w)) in range.zip(pairs) {
                targets[slot] = t;
                weights[slot] = w;
            }
        }

        let index = ids
            .iter()
            .cloned()
            .enumerate()
            .map(|(i, id)| (id, i))
            .collect();
        Ok(Graph {
            offsets,
            targets,
            weights,
            ids,
            index,
        })
    }

    pub fn node_count(&self) -> usize {
        self.ids.len()
    }

    /// Number of undirected edges.
    pub fn edge_count(&self) -> usize {
        self.targets.len() / 2
    }

    pub fn is_undirected(&self) -> bool {
        true
    }

    pub fn degree(&self, k: NodeId) -> usize {
        self.offsets[k + 1] - self.offsets[k]
    }

    /// Neighbor indices of `k`, ascending.
    #[inline]
    pub fn neighbor_ids(&self, k: NodeId) -> &[NodeId] {
        &self.targets[self.offsets[k]..self.offsets[k + 1]]
    }

    /// Edge weights aligned with [`Graph::neighbor_ids`].
    #[inline]
    pub fn neighbor_weights(&self, k: NodeId) -> &[f64] {
        &self.weights[self.offsets[k]..self.offsets[k + 1]]
    }

    /// Checked neighbor lookup returning `(neighbor, weight)` pairs sorted by index.
    pub fn neighbors(&self, k: NodeId) -> Result<Vec<(NodeId, f64)>> {
        self.check_node(k)?;
        Ok(self
            .neighbor_ids(k)
            .iter()
            .copied()
            .zip(self.neighbor_weights(k).iter().copied())
            .collect())
    }

    pub fn edge_weight(&self, a: NodeId, b: NodeId) -> Option<f64> {
        let ids = self.neighbor_ids(a);
        ids.binary_search(&b)
            .ok()
            .map(|pos| self.neighbor_weights(a)[pos])
    }

    /// Iterates each undirected edge once as `(low, high, weight)`.
    pub fn edges(&self) -> impl Iterator<Item = (NodeId, NodeId, f64)> + '_ {
        (0..self.node_count()).flat_map(move |a| {
            self.neighbor_ids(a)
                .iter()
                .zip(self.neighbor_weights(a))
                .filter(move |(&b, _)| b > a)
                .map(move |(&b, &w)| (a, b, w))
        })
    }

    pub fn check_node(&self, k: NodeId) -> Result<()> {
        if k < self.node_count() {
            Ok(())
        } else {
            Err(Error::NodeOutOfRange {
                index: k,
                node_count: self.node_count(),
            })
        }
    }

    /// Original identifier of a dense index.
    pub fn node_name(&self, k: NodeId) -> &str {
        &self.ids[k]
    }

    /// Dense index of an original identifier.
    pub fn node_index(&self, id: &str) -> Option<NodeId> {
        self.index.get(id).copied()
    }

    pub fn node_names(&self) -> &[String] {
        &self.ids
    }

    /// Same topology with every edge weight replaced by 1.0.
    pub fn binarized(&self) -> Graph {
        Graph {
            weights: vec![1.0; self.weights.len()],
            ..self.clone()
        }
    }

    /// Hop distances from `source`; unreachable nodes are `None`.
    pub fn bfs_hops(&self, source: NodeId) -> Vec<Option<usize>> {
        let mut hops = vec![None; self.node_count()];
        let mut queue = std::collections::VecDeque::new();
        hops[source] = Some(0);
        queue.push_back(source);
        while let Some(v) = queue.pop_front() {
            let next = hops[v].unwrap() + 1;
            for &u in self.neighbor_ids(v) {
                if hops[u].is_none() {
                    hops[u] = Some(next);
                    queue.push_back(u);
                }
            }
        }
        hops
    }

    /// Serializes the graph as an edge list that parses back to an identical
    /// graph (weighted mode).
    ///
    /// Lines are ordered so that first-appearance indexing on re-parse
    /// reproduces the current indices. A node that cannot be introduced
    /// through one of its edges is introduced through a self-loop line, which
    /// the parser drops after registering the node.
    pub fn to_edge_list(&self) -> String {
        let n = self.node_count();
        let mut out = String::new();
        let mut written: HashSet<(NodeId, NodeId)> = HashSet::new();
        let mut seen = 0;
        let line = |out: &mut String, a: NodeId, b: NodeId, w: f64| {
            writeln!(out, "{} {} {}", self.ids[a], self.ids[b], w).unwrap();
        };
        while seen < n {
            let k = seen;
            let lower = self.neighbor_ids(k).iter().position(|&m| m < k);
            if let Some(pos) = lower {
                let m = self.neighbor_ids(k)[pos];
                line(&mut out, k, m, self.neighbor_weights(k)[pos]);
                written.insert((m, k));
                seen += 1;
            } else if let Some(w) = self.edge_weight(k, k + 1) {
                line(&mut out, k, k + 1, w);
                written.insert((k, k + 1));
                seen += 2;
            } else {
                line(&mut out, k, k, 1.0);
                seen += 1;
            }
        }
        for (a, b, w) in self.edges() {
            if !written.contains(&(a, b)) {
                line(&mut out, a, b, w);
            }
        }
        out
    }

    /// "dense_index original_id" per line.
    pub fn mapping_table(&self) -> String {
        let mut out = String::new();
        for (i, id) in self.ids.iter().enumerate() {
            writeln!(out, "{i} {id}").unwrap();
        }
        out
    }
}

/// Parses a whitespace-separated edge list.
///
/// Each non-comment line is `src dst` or `src dst weight`; lines starting
/// with `#` and blank lines are skipped. With `weighted == false` every edge
/// gets weight 1.0, including merged duplicates.
pub fn parse_edge_list<R: BufRead>(reader: R, weighted: bool) -> Result<Graph> {
    let mut ids: Vec<String> = Vec::new();
    let mut index: HashMap<String, NodeId> = HashMap::new();
    let mut edges = Vec::new();
    let mut intern = |id: &str, ids: &mut Vec<String>| -> NodeId {
        if let Some(&i) = index.get(id) {
            return i;
        }
        let i = ids.len();
        ids.push(id.to_owned());
        index.insert(id.to_owned(), i);
        i
    };

    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = lineno + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let tokens: Vec<&str> = trimmed.split_whitespace().collect();
        let weight = match tokens.len() {
            2 => 1.0,
            3 => {
                let w: f64 = tokens[2]
                    .parse()
                    .map_err(|_| Error::parse(lineno, format!("invalid weight `{}`", tokens[2])))?;
                if !(w.is_finite() && w > 0.0) {
                    return Err(Error::parse(lineno, format!("non-positive weight {w}")));
                }
                w
            }
            n => {
                return Err(Error::parse(
                    lineno,
                    format!("expected 2 or 3 tokens, found {n}"),
                ))
            }
        };
        let a = intern(tokens[0], &mut ids);
        let b = intern(tokens[1], &mut ids);
        edges.push((a, b, if weighted { weight } else { 1.0 }));
    }

    let graph = Graph::build(ids, edges)?;
    if graph.edge_count() == 0 {
        return Err(Error::EmptyGraph);
    }
    Ok(if weighted { graph } else { graph.binarized() })
}

/// Single categorical label per node.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelMap {
    labels: Vec<Option<usize>>,
    vocabulary: Vec<String>,
}

impl LabelMap {
    pub fn from_assignments(node_count: usize, assignments: &[(NodeId, &str)]) -> Result<Self> {
        let mut map = LabelMap {
            labels: vec![None; node_count],
            vocabulary: Vec::new(),
        };
        for &(node, label) in assignments {
            if node >= node_count {
                return Err(Error::NodeOutOfRange {
                    index: node,
                    node_count,
                });
            }
            map.assign(node, label, &node.to_string())?;
        }
        Ok(map)
    }

    fn assign(&mut self, node: NodeId, label: &str, name: &str) -> Result<()> {
        let class = match self.vocabulary.iter().position(|l| l == label) {
            Some(c) => c,
            None => {
                self.vocabulary.push(label.to_owned());
                self.vocabulary.len() - 1
            }
        };
        match self.labels[node] {
            Some(existing) if existing != class => Err(Error::LabelConflict {
                node: name.to_owned(),
                first: self.vocabulary[existing].clone(),
                second: label.to_owned(),
            }),
            _ => {
                self.labels[node] = Some(class);
                Ok(())
            }
        }
    }

    /// Class index of `node`, if labeled. Class indices follow first
    /// appearance in the label input.
    pub fn label(&self, node: NodeId) -> Option<usize> {
        self.labels.get(node).copied().flatten()
    }

    pub fn node_count(&self) -> usize {
        self.labels.len()
    }

    pub fn vocabulary(&self) -> &[String] {
        &self.vocabulary
    }

    pub fn class_count(&self) -> usize {
        self.vocabulary.len()
    }

    /// Labeled nodes in ascending index order.
    pub fn labeled_nodes(&self) -> Vec<NodeId> {
        (0..self.labels.len())
            .filter(|&k| self.labels[k].is_some())
            .collect()
    }

    pub fn labeled_count(&self) -> usize {
        self.labels.iter().filter(|l| l.is_some()).count()
    }
}

/// Parses "node_id label" lines against the graph's identifier table.
pub fn parse_labels<R: BufRead>(reader: R, graph: &Graph) -> Result<LabelMap> {
    let mut map = LabelMap {
        labels: vec![None; graph.node_count()],
        vocabulary: Vec::new(),
    };
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let tokens: Vec<&str> = trimmed.split_whitespace().collect();
        if tokens.len() != 2 {
            return Err(Error::parse(
                lineno + 1,
                format!("expected `node_id label`, found {} tokens", tokens.len()),
            ));
        }
        let node = graph
            .node_index(tokens[0])
            .ok_or_else(|| Error::UnknownNode(tokens[0].to_owned()))?;
        map.assign(node, tokens[1], tokens[0])?;
    }
    Ok(map)
}

/// `rows x cols` lattice with 4-neighbor connectivity and unit weights.
/// Node `(r, c)` has index `r * cols + c`.
pub fn grid_graph(rows: usize, cols: usize) -> Result<Graph> {
    if rows == 0 || cols == 0 {
        return Err(Error::invalid(format!(
            "grid dimensions must be positive, got {rows}x{cols}"
        )));
    }
    let mut edges = Vec::with_capacity(2 * rows * cols);
    for r in 0..rows {
        for c in 0..cols {
            let k = r * cols + c;
            if c + 1 < cols {
                edges.push((k, k + 1, 1.0));
            }
            if r + 1 < rows {
                edges.push((k, k + cols, 1.0));
            }
        }
    }
    Graph::from_edges(rows * cols, &edges)
}
