//! Interned node identities, the directed engagement graph and the projected
//! coengagement graph.
//!
//! Ordinals are dense `u32` values assigned in lexicographic order of the
//! handle strings, so the same set of handles always yields the same ordinals
//! regardless of the order rows were read in. Every other module works on
//! ordinals and resolves handles only at the edges (I/O, labeling).

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense ordinal of an interned handle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct NodeId(pub u32);

impl NodeId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

/// Bijection between handles and ordinals.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Interner {
    handles: Vec<String>,
}

impl Interner {
    /// Interns `handles`, deduplicating and assigning ordinals by sorted order.
    pub fn from_handles<I, S>(handles: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut handles: Vec<String> = handles.into_iter().map(Into::into).collect();
        if handles.iter().any(String::is_empty) {
            return Err(Error::Validation("empty handle".into()));
        }
        handles.sort_unstable();
        handles.dedup();
        if handles.len() > u32::MAX as usize {
            return Err(Error::Capacity {
                phase: "interning",
                detail: format!(
                    "{} distinct handles exceed the u32 ordinal space",
                    handles.len()
                ),
            });
        }
        Ok(Self { handles })
    }

    pub fn len(&self) -> usize {
        self.handles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.handles.is_empty()
    }

    pub fn get(&self, handle: &str) -> Option<NodeId> {
        self.handles
            .binary_search_by(|h| h.as_str().cmp(handle))
            .ok()
            .map(|i| NodeId(i as u32))
    }

    /// # Panics
    /// If `id` was not produced by this interner.
    pub fn handle(&self, id: NodeId) -> &str {
        &self.handles[id.index()]
    }

    pub fn try_handle(&self, id: NodeId) -> Option<&str> {
        self.handles.get(id.index()).map(String::as_str)
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = (NodeId, &str)> + '_ {
        self.handles
            .iter()
            .enumerate()
            .map(|(i, h)| (NodeId(i as u32), h.as_str()))
    }
}

/// Interns a sequence of handles; see [`Interner::from_handles`].
pub fn intern_nodes<S: AsRef<str>>(handles: &[S]) -> Result<Interner> {
    Interner::from_handles(handles.iter().map(|h| h.as_ref().to_owned()))
}

/// Filtering thresholds of a coengagement projection.
///
/// An edge joins two receiving accounts when at least `n` engagers each
/// engaged both of them at least `s` times.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ProjectionParams {
    pub n: u64,
    pub s: u64,
}

impl ProjectionParams {
    pub fn new(n: u64, s: u64) -> Result<Self> {
        let params = Self { n, s };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InvalidParams("n must be >= 1".into()));
        }
        if self.s == 0 {
            return Err(Error::InvalidParams("s must be >= 1".into()));
        }
        Ok(())
    }
}

impl fmt::Display for ProjectionParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(n={}, s={})", self.n, self.s)
    }
}

/// Directed weighted engagement graph in compressed sparse row form.
///
/// Rows of the out-adjacency are the engaging side of each account, the
/// referenced targets the receiving side. Both directions are kept so that
/// in-degree and audience lookups are linear in the answer size.
#[derive(Debug, Clone)]
pub struct EngagementGraph {
    interner: Arc<Interner>,
    out_offsets: Vec<usize>,
    out_targets: Vec<NodeId>,
    out_weights: Vec<u64>,
    in_offsets: Vec<usize>,
    in_sources: Vec<NodeId>,
    in_weights: Vec<u64>,
    total_weight: u64,
}

impl EngagementGraph {
    /// Builds the graph from `(engager, target, weight)` triples over `interner`.
    /// Duplicate pairs are summed; zero weights are rejected.
    pub fn from_edges(
        interner: Arc<Interner>,
        mut edges: Vec<(NodeId, NodeId, u64)>,
    ) -> Result<Self> {
        let node_count = interner.len();
        for &(u, t, w) in &edges {
            if u.index() >= node_count || t.index() >= node_count {
                return Err(Error::Validation(format!(
                    "edge ({u}, {t}) references an ordinal outside the interner"
                )));
            }
            if w == 0 {
                return Err(Error::Validation(format!("edge ({u}, {t}) has weight 0")));
            }
        }
        edges.sort_unstable_by_key(|&(u, t, _)| (u, t));
        let mut merged: Vec<(NodeId, NodeId, u64)> = Vec::with_capacity(edges.len());
        for (u, t, w) in edges {
            match merged.last_mut() {
                Some(last) if last.0 == u && last.1 == t => last.2 += w,
                _ => merged.push((u, t, w)),
            }
        }

        let mut out_offsets = vec![0usize; node_count + 1];
        let mut in_offsets = vec![0usize; node_count + 1];
        for &(u, t, _) in &merged {
            out_offsets[u.index() + 1] += 1;
            in_offsets[t.index() + 1] += 1;
        }
        for i in 0..node_count {
            out_offsets[i + 1] += out_offsets[i];
            in_offsets[i + 1] += in_offsets[i];
        }
        let out_targets = merged.iter().map(|e| e.1).collect();
        let out_weights = merged.iter().map(|e| e.2).collect();
        let total_weight = merged.iter().map(|e| e.2).sum();

        // Filling in edge order keeps every in-row sorted by source ordinal.
        let mut cursor = in_offsets.clone();
        let mut in_sources = vec![NodeId(0); merged.len()];
        let mut in_weights = vec![0u64; merged.len()];
        for &(u, t, w) in &merged {
            let slot = &mut cursor[t.index()];
            in_sources[*slot] = u;
            in_weights[*slot] = w;
            *slot += 1;
        }

        Ok(Self {
            interner,
            out_offsets,
            out_targets,
            out_weights,
            in_offsets,
            in_sources,
            in_weights,
            total_weight,
        })
    }

    /// Convenience constructor from handle triples; interns every handle seen.
    pub fn from_handle_edges<S: AsRef<str>>(edges: &[(S, S, u64)]) -> Result<Self> {
        let mut builder = EngagementGraphBuilder::default();
        for (u, t, w) in edges {
            builder.add(u.as_ref(), t.as_ref(), *w)?;
        }
        Ok(builder.build()?.0)
    }

    pub fn interner(&self) -> &Arc<Interner> {
        &self.interner
    }

    pub fn node_count(&self) -> usize {
        self.interner.len()
    }

    /// Number of distinct (engager, target) pairs.
    pub fn edge_count(&self) -> usize {
        self.out_targets.len()
    }

    /// Sum of all engagement weights.
    pub fn total_weight(&self) -> u64 {
        self.total_weight
    }

    pub fn handle(&self, id: NodeId) -> &str {
        self.interner.handle(id)
    }

    pub fn node(&self, handle: &str) -> Option<NodeId> {
        self.interner.get(handle)
    }

    /// Targets engaged by `engager`, sorted by ordinal, with weights.
    pub fn out_edges(&self, engager: NodeId) -> (&[NodeId], &[u64]) {
        if engager.index() >= self.node_count() {
            return (&[], &[]);
        }
        let range = self.out_offsets[engager.index()]..self.out_offsets[engager.index() + 1];
        (&self.out_targets[range.clone()], &self.out_weights[range])
    }

    /// Engagers of `target`, sorted by ordinal, with weights.
    pub fn in_edges(&self, target: NodeId) -> (&[NodeId], &[u64]) {
        if target.index() >= self.node_count() {
            return (&[], &[]);
        }
        let range = self.in_offsets[target.index()]..self.in_offsets[target.index() + 1];
        (&self.in_sources[range.clone()], &self.in_weights[range])
    }

    /// w(engager, target), 0 when the pair never occurred.
    pub fn weight(&self, engager: NodeId, target: NodeId) -> u64 {
        let (targets, weights) = self.out_edges(engager);
        targets
            .binary_search(&target)
            .map(|i| weights[i])
            .unwrap_or(0)
    }

    pub fn out_degree(&self, engager: NodeId) -> usize {
        self.out_edges(engager).0.len()
    }

    /// Number of accounts with at least one outgoing engagement.
    pub fn engager_count(&self) -> usize {
        (0..self.node_count())
            .filter(|&i| self.out_offsets[i + 1] > self.out_offsets[i])
            .count()
    }

    /// Total number of times `node` was engaged.
    pub fn weighted_in_degree(&self, node: NodeId) -> Result<u64> {
        if node.index() >= self.node_count() {
            return Err(Error::NotFound(format!("node {node}")));
        }
        Ok(self.in_edges(node).1.iter().sum())
    }

    /// Weighted in-degree of every node, indexed by ordinal.
    pub fn weighted_in_degrees(&self) -> Vec<u64> {
        (0..self.node_count())
            .map(|i| {
                self.in_weights[self.in_offsets[i]..self.in_offsets[i + 1]]
                    .iter()
                    .sum()
            })
            .collect()
    }
}

/// Accumulates engagements keyed by arbitrary handles, interning at the end.
///
/// Handles receive provisional ids in arrival order; [`build`](Self::build)
/// re-keys them lexicographically and returns the provisional → final map so
/// callers can translate side tables (e.g. timestamped rows).
#[derive(Debug, Default)]
pub struct EngagementGraphBuilder {
    ids: HashMap<String, u32>,
    names: Vec<String>,
    edges: Vec<(u32, u32, u64)>,
}

impl EngagementGraphBuilder {
    pub fn provisional_id(&mut self, handle: &str) -> Result<u32> {
        if handle.is_empty() {
            return Err(Error::Validation("empty handle".into()));
        }
        if let Some(&id) = self.ids.get(handle) {
            return Ok(id);
        }
        let id = u32::try_from(self.names.len()).map_err(|_| Error::Capacity {
            phase: "interning",
            detail: "more than u32::MAX distinct handles".into(),
        })?;
        self.ids.insert(handle.to_owned(), id);
        self.names.push(handle.to_owned());
        Ok(id)
    }

    /// Adds `count` engagements from `engager` to `target`; returns the
    /// provisional ids of both.
    pub fn add(&mut self, engager: &str, target: &str, count: u64) -> Result<(u32, u32)> {
        if count == 0 {
            return Err(Error::Validation("count must be >= 1".into()));
        }
        let u = self.provisional_id(engager)?;
        let t = self.provisional_id(target)?;
        self.edges.push((u, t, count));
        Ok((u, t))
    }

    pub fn build(self) -> Result<(EngagementGraph, Vec<NodeId>)> {
        let EngagementGraphBuilder { names, edges, .. } = self;
        let mut order: Vec<u32> = (0..names.len() as u32).collect();
        order.sort_unstable_by(|&a, &b| names[a as usize].cmp(&names[b as usize]));
        let mut remap = vec![NodeId(0); names.len()];
        for (ordinal, &provisional) in order.iter().enumerate() {
            remap[provisional as usize] = NodeId(ordinal as u32);
        }
        let mut sorted_names: Vec<Option<String>> = names.into_iter().map(Some).collect();
        let handles: Vec<String> = order
            .iter()
            .map(|&p| sorted_names[p as usize].take().unwrap_or_default())
            .collect();
        let interner = Arc::new(Interner { handles });
        let edges = edges
            .into_iter()
            .map(|(u, t, w)| (remap[u as usize], remap[t as usize], w))
            .collect();
        let graph = EngagementGraph::from_edges(interner, edges)?;
        Ok((graph, remap))
    }
}

/// One undirected coengagement edge with `a < b`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CoEdge {
    pub a: NodeId,
    pub b: NodeId,
    pub weight: u64,
}

/// Undirected weighted projection over receiving accounts.
///
/// Node-local indices (`0..node_count()`) follow ordinal order and are what
/// clustering operates on.
#[derive(Debug, Clone)]
pub struct CoengagementGraph {
    params: ProjectionParams,
    interner: Arc<Interner>,
    nodes: Vec<NodeId>,
    edges: Vec<CoEdge>,
    adj_offsets: Vec<usize>,
    adj: Vec<(u32, u64)>,
    weighted_degrees: Vec<u64>,
}

impl CoengagementGraph {
    /// Validates and indexes `edges`. Edges may arrive in any order but must
    /// satisfy `a < b`, `weight >= params.n` and be unique per pair.
    pub fn new(
        params: ProjectionParams,
        interner: Arc<Interner>,
        mut edges: Vec<CoEdge>,
    ) -> Result<Self> {
        params.validate()?;
        edges.sort_unstable();
        for pair in edges.windows(2) {
            if (pair[0].a, pair[0].b) == (pair[1].a, pair[1].b) {
                return Err(Error::Validation(format!(
                    "duplicate coengagement edge ({}, {})",
                    interner.handle(pair[0].a),
                    interner.handle(pair[0].b)
                )));
            }
        }
        for e in &edges {
            if e.b.index() >= interner.len() {
                return Err(Error::Validation(format!(
                    "edge endpoint {} not interned",
                    e.b
                )));
            }
            if e.a >= e.b {
                return Err(Error::Validation(format!(
                    "edge ({}, {}) is not ordered a < b",
                    interner.handle(e.a),
                    interner.handle(e.b)
                )));
            }
            if e.weight < params.n {
                return Err(Error::Validation(format!(
                    "edge ({}, {}) has weight {} below n = {}",
                    interner.handle(e.a),
                    interner.handle(e.b),
                    e.weight,
                    params.n
                )));
            }
        }

        let mut nodes: Vec<NodeId> = edges.iter().flat_map(|e| [e.a, e.b]).collect();
        nodes.sort_unstable();
        nodes.dedup();

        let local = |id: NodeId| nodes.binary_search(&id).expect("endpoint is a node") as u32;
        let mut adj_offsets = vec![0usize; nodes.len() + 1];
        let endpoints: Vec<(u32, u32, u64)> = edges
            .iter()
            .map(|e| (local(e.a), local(e.b), e.weight))
            .collect();
        for &(a, b, _) in &endpoints {
            adj_offsets[a as usize + 1] += 1;
            adj_offsets[b as usize + 1] += 1;
        }
        for i in 0..nodes.len() {
            adj_offsets[i + 1] += adj_offsets[i];
        }
        let mut cursor = adj_offsets.clone();
        let mut adj = vec![(0u32, 0u64); endpoints.len() * 2];
        let mut weighted_degrees = vec![0u64; nodes.len()];
        for &(a, b, w) in &endpoints {
            adj[cursor[a as usize]] = (b, w);
            cursor[a as usize] += 1;
            adj[cursor[b as usize]] = (a, w);
            cursor[b as usize] += 1;
            weighted_degrees[a as usize] += w;
            weighted_degrees[b as usize] += w;
        }
        for i in 0..nodes.len() {
            adj[adj_offsets[i]..adj_offsets[i + 1]].sort_unstable_by_key(|&(j, _)| j);
        }

        Ok(Self {
            params,
            interner,
            nodes,
            edges,
            adj_offsets,
            adj,
            weighted_degrees,
        })
    }

    pub fn empty(params: ProjectionParams, interner: Arc<Interner>) -> Self {
        Self {
            params,
            interner,
            nodes: Vec::new(),
            edges: Vec::new(),
            adj_offsets: vec![0],
            adj: Vec::new(),
            weighted_degrees: Vec::new(),
        }
    }

    pub fn params(&self) -> ProjectionParams {
        self.params
    }

    pub fn interner(&self) -> &Arc<Interner> {
        &self.interner
    }

    /// Nodes sorted by ordinal.
    pub fn nodes(&self) -> &[NodeId] {
        &self.nodes
    }

    /// Edges sorted by `(a, b)`.
    pub fn edges(&self) -> &[CoEdge] {
        &self.edges
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn total_weight(&self) -> u64 {
        self.edges.iter().map(|e| e.weight).sum()
    }

    pub fn handle(&self, id: NodeId) -> &str {
        self.interner.handle(id)
    }

    pub fn contains(&self, id: NodeId) -> bool {
        self.local_index(id).is_some()
    }

    pub fn local_index(&self, id: NodeId) -> Option<usize> {
        self.nodes.binary_search(&id).ok()
    }

    /// Neighbours of the node at `local` as `(local index, weight)`, sorted.
    pub fn neighbors(&self, local: usize) -> &[(u32, u64)] {
        &self.adj[self.adj_offsets[local]..self.adj_offsets[local + 1]]
    }

    pub fn degree_local(&self, local: usize) -> usize {
        self.adj_offsets[local + 1] - self.adj_offsets[local]
    }

    pub fn weighted_degree_local(&self, local: usize) -> u64 {
        self.weighted_degrees[local]
    }

    /// Sum of incident edge weights.
    pub fn weighted_degree(&self, node: NodeId) -> Result<u64> {
        self.local_index(node)
            .map(|i| self.weighted_degrees[i])
            .ok_or_else(|| Error::NotFound(format!("node {node} is not in the projection")))
    }

    /// Weight of the edge between `a` and `b` in either order.
    pub fn weight(&self, a: NodeId, b: NodeId) -> Option<u64> {
        let (a, b) = if a <= b { (a, b) } else { (b, a) };
        self.edges
            .binary_search_by(|e| (e.a, e.b).cmp(&(a, b)))
            .ok()
            .map(|i| self.edges[i].weight)
    }
}
