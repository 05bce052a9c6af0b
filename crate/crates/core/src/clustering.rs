//! Louvain community detection and landmark labeling.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::model::{CoengagementGraph, NodeId};

pub const DEFAULT_RESOLUTION: f64 = 1.0;
pub const DEFAULT_SEED: u64 = 42;

/// A level stops when it improves modularity by no more than this.
const MIN_IMPROVEMENT: f64 = 1e-9;
/// Gains must beat the incumbent by more than this to count as a move.
const GAIN_EPSILON: f64 = 1e-12;
const MAX_SWEEPS_PER_LEVEL: usize = 1_000;

/// Community membership of every node of a coengagement graph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterAssignment {
    /// Nodes in ordinal order, aligned with `community`.
    nodes: Vec<NodeId>,
    community: Vec<u32>,
    community_count: usize,
    pub modularity: f64,
    /// Modularity after each aggregation level.
    pub level_modularity: Vec<f64>,
    pub resolution: f64,
    pub seed: u64,
    /// Label per community index; `None` when no landmark fell into it.
    labels: Vec<Option<String>>,
}

impl ClusterAssignment {
    /// Builds an assignment from explicit memberships (nodes sorted by
    /// ordinal). Community indices are renumbered by first appearance and
    /// modularity is evaluated on `x`.
    pub fn from_membership(x: &CoengagementGraph, community: &[u32], resolution: f64) -> Self {
        assert_eq!(community.len(), x.node_count());
        let community = renumber(community);
        let community_count = community.iter().map(|&c| c as usize + 1).max().unwrap_or(0);
        let modularity = modularity(x, &community, resolution);
        Self {
            nodes: x.nodes().to_vec(),
            community,
            community_count,
            modularity,
            level_modularity: Vec::new(),
            resolution,
            seed: 0,
            labels: vec![None; community_count],
        }
    }

    pub fn nodes(&self) -> &[NodeId] {
        &self.nodes
    }

    /// Community index per node, aligned with [`nodes`](Self::nodes).
    pub fn membership(&self) -> &[u32] {
        &self.community
    }

    pub fn community_count(&self) -> usize {
        self.community_count
    }

    pub fn community_of(&self, node: NodeId) -> Option<u32> {
        self.nodes
            .binary_search(&node)
            .ok()
            .map(|i| self.community[i])
    }

    pub fn label(&self, community: u32) -> Option<&str> {
        self.labels
            .get(community as usize)
            .and_then(|l| l.as_deref())
    }

    pub fn labels(&self) -> &[Option<String>] {
        &self.labels
    }

    /// Label of the community containing `node`.
    pub fn node_label(&self, node: NodeId) -> Option<&str> {
        self.community_of(node).and_then(|c| self.label(c))
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0usize; self.community_count];
        for &c in &self.community {
            sizes[c as usize] += 1;
        }
        sizes
    }

    /// Members of every community, in ordinal order.
    pub fn members(&self) -> Vec<Vec<NodeId>> {
        let mut members = vec![Vec::new(); self.community_count];
        for (&node, &c) in self.nodes.iter().zip(&self.community) {
            members[c as usize].push(node);
        }
        members
    }

    /// Community indices that carry a label, with the label.
    pub fn labeled_communities(&self) -> impl Iterator<Item = (u32, &str)> + '_ {
        self.labels
            .iter()
            .enumerate()
            .filter_map(|(c, l)| l.as_deref().map(|l| (c as u32, l)))
    }
}

fn renumber(community: &[u32]) -> Vec<u32> {
    let mut map: BTreeMap<u32, u32> = BTreeMap::new();
    community
        .iter()
        .map(|&c| {
            let next = map.len() as u32;
            *map.entry(c).or_insert(next)
        })
        .collect()
}

/// Weighted modularity of `membership` (aligned with `x.nodes()`):
///
/// `Q = sum_c [ L_c / m - resolution * (D_c / 2m)^2 ]`
///
/// where `L_c` is the total weight of edges inside `c`, `D_c` the total
/// weighted degree of `c` and `m` the total edge weight.
pub fn modularity(x: &CoengagementGraph, membership: &[u32], resolution: f64) -> f64 {
    let m = x.total_weight() as f64;
    if m == 0.0 {
        return 0.0;
    }
    let count = membership
        .iter()
        .map(|&c| c as usize + 1)
        .max()
        .unwrap_or(0);
    let mut internal = vec![0.0f64; count];
    let mut degree = vec![0.0f64; count];
    for (i, &c) in membership.iter().enumerate() {
        degree[c as usize] += x.weighted_degree_local(i) as f64;
    }
    for e in x.edges() {
        let a = x.local_index(e.a).expect("endpoint");
        let b = x.local_index(e.b).expect("endpoint");
        if membership[a] == membership[b] {
            internal[membership[a] as usize] += e.weight as f64;
        }
    }
    internal
        .iter()
        .zip(&degree)
        .map(|(&l, &d)| l / m - resolution * (d / (2.0 * m)).powi(2))
        .sum()
}

/// Weighted graph over compact indices as seen by one Louvain level.
/// `self_loops[i]` holds the internal weight collapsed into node `i`
/// (counted once per edge).
struct LevelGraph {
    adj: Vec<Vec<(usize, f64)>>,
    self_loops: Vec<f64>,
    degree: Vec<f64>,
}

impl LevelGraph {
    fn from_coengagement(x: &CoengagementGraph) -> Self {
        let n = x.node_count();
        let adj: Vec<Vec<(usize, f64)>> = (0..n)
            .map(|i| {
                x.neighbors(i)
                    .iter()
                    .map(|&(j, w)| (j as usize, w as f64))
                    .collect()
            })
            .collect();
        let degree = (0..n).map(|i| x.weighted_degree_local(i) as f64).collect();
        Self {
            adj,
            self_loops: vec![0.0; n],
            degree,
        }
    }

    fn len(&self) -> usize {
        self.adj.len()
    }

    /// Collapses communities (compact indices `0..k`) into nodes.
    fn aggregate(&self, community: &[usize], k: usize) -> Self {
        let mut maps: Vec<BTreeMap<usize, f64>> = vec![BTreeMap::new(); k];
        let mut self_loops = vec![0.0; k];
        let mut degree = vec![0.0; k];
        for i in 0..self.len() {
            let ci = community[i];
            self_loops[ci] += self.self_loops[i];
            degree[ci] += self.degree[i];
            for &(j, w) in &self.adj[i] {
                let cj = community[j];
                if ci == cj {
                    // Each internal edge is seen from both ends.
                    self_loops[ci] += w / 2.0;
                } else {
                    *maps[ci].entry(cj).or_insert(0.0) += w;
                }
            }
        }
        let adj = maps.into_iter().map(|m| m.into_iter().collect()).collect();
        Self {
            adj,
            self_loops,
            degree,
        }
    }

    fn modularity(&self, community: &[usize], m: f64, resolution: f64) -> f64 {
        let k = community.iter().map(|&c| c + 1).max().unwrap_or(0);
        let mut internal = vec![0.0; k];
        let mut tot = vec![0.0; k];
        for i in 0..self.len() {
            let c = community[i];
            internal[c] += self.self_loops[i];
            tot[c] += self.degree[i];
            for &(j, w) in &self.adj[i] {
                if community[j] == c {
                    internal[c] += w / 2.0;
                }
            }
        }
        internal
            .iter()
            .zip(&tot)
            .map(|(&l, &d)| l / m - resolution * (d / (2.0 * m)).powi(2))
            .sum()
    }
}

/// One round of local moves. Returns `true` if any node changed community.
fn local_moves(
    graph: &LevelGraph,
    community: &mut [usize],
    m: f64,
    resolution: f64,
    rng: &mut ChaCha8Rng,
) -> bool {
    let n = graph.len();
    let mut tot = vec![0.0f64; n];
    for i in 0..n {
        tot[community[i]] += graph.degree[i];
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);

    let mut links = vec![0.0f64; n];
    let mut seen: Vec<usize> = Vec::new();
    let mut moved_any = false;

    for _ in 0..MAX_SWEEPS_PER_LEVEL {
        let mut moved = false;
        for &i in &order {
            let current = community[i];
            let k_i = graph.degree[i];

            // Neighbour communities in scan order with link weights from i.
            for &(j, w) in &graph.adj[i] {
                let c = community[j];
                // Weights are positive, so a zero entry means unseen.
                if links[c] == 0.0 {
                    seen.push(c);
                }
                links[c] += w;
            }

            tot[current] -= k_i;
            let gain = |c: usize, links: &[f64]| links[c] - resolution * tot[c] * k_i / (2.0 * m);
            let mut best = current;
            let mut best_gain = gain(current, &links);
            for &c in &seen {
                let g = gain(c, &links);
                if g > best_gain + GAIN_EPSILON {
                    best = c;
                    best_gain = g;
                }
            }
            tot[best] += k_i;
            if best != current {
                community[i] = best;
                moved = true;
            }

            for &c in &seen {
                links[c] = 0.0;
            }
            links[current] = 0.0;
            seen.clear();
        }
        if !moved {
            break;
        }
        moved_any = true;
    }
    moved_any
}

fn compact(community: &mut [usize]) -> usize {
    let mut map: BTreeMap<usize, usize> = BTreeMap::new();
    for c in community.iter_mut() {
        let next = map.len();
        *c = *map.entry(*c).or_insert(next);
    }
    map.len()
}

/// Two-phase Louvain on the weighted coengagement graph.
///
/// Node visit order is shuffled by a generator seeded with `seed`; for a
/// fixed `(graph, resolution, seed)` the result is fully deterministic.
/// Moves go to the first neighbouring community (in adjacency scan order)
/// with the strictly largest gain; the current community wins ties.
pub fn louvain(x: &CoengagementGraph, resolution: f64, seed: u64) -> ClusterAssignment {
    let n = x.node_count();
    let m = x.total_weight() as f64;
    if n == 0 || m == 0.0 {
        let mut assignment = ClusterAssignment::from_membership(x, &vec![0; n], resolution);
        assignment.seed = seed;
        return assignment;
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut graph = LevelGraph::from_coengagement(x);
    // Membership of each original node in the current level's node space.
    let mut membership: Vec<usize> = (0..n).collect();
    let mut level_modularity = Vec::new();
    let mut current_q = graph.modularity(&(0..n).collect::<Vec<_>>(), m, resolution);

    loop {
        let mut community: Vec<usize> = (0..graph.len()).collect();
        let moved = local_moves(&graph, &mut community, m, resolution, &mut rng);
        if !moved {
            break;
        }
        let k = compact(&mut community);
        let q = graph.modularity(&community, m, resolution);
        if q - current_q <= MIN_IMPROVEMENT {
            break;
        }
        for slot in membership.iter_mut() {
            *slot = community[*slot];
        }
        level_modularity.push(q);
        current_q = q;
        graph = graph.aggregate(&community, k);
        if k == 1 {
            break;
        }
    }

    let membership: Vec<u32> = membership.into_iter().map(|c| c as u32).collect();
    let mut assignment = ClusterAssignment::from_membership(x, &membership, resolution);
    assignment.level_modularity = level_modularity;
    assignment.seed = seed;
    assignment
}

/// Landmark handles per cluster label.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LandmarkSet {
    labels: BTreeMap<String, BTreeSet<String>>,
}

impl LandmarkSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, label: impl Into<String>, handle: impl Into<String>) {
        self.labels
            .entry(label.into())
            .or_default()
            .insert(handle.into());
    }

    pub fn from_pairs<L, H>(pairs: impl IntoIterator<Item = (L, H)>) -> Self
    where
        L: Into<String>,
        H: Into<String>,
    {
        let mut set = Self::new();
        for (l, h) in pairs {
            set.insert(l, h);
        }
        set
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> impl Iterator<Item = &str> {
        self.labels.keys().map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &BTreeSet<String>)> {
        self.labels.iter().map(|(l, h)| (l.as_str(), h))
    }

    pub fn handles(&self, label: &str) -> Option<&BTreeSet<String>> {
        self.labels.get(label)
    }
}

/// Label text for a community holding landmarks of several labels.
pub fn merged_label<'a>(labels: impl IntoIterator<Item = &'a str>) -> String {
    let sorted: BTreeSet<&str> = labels.into_iter().collect();
    format!(
        "merged({})",
        sorted.into_iter().collect::<Vec<_>>().join(",")
    )
}

/// Landmark labels found in each community, keyed by community index.
pub fn landmark_communities(
    x: &CoengagementGraph,
    assignment: &ClusterAssignment,
    landmarks: &LandmarkSet,
) -> BTreeMap<u32, BTreeSet<String>> {
    let mut found: BTreeMap<u32, BTreeSet<String>> = BTreeMap::new();
    for (label, handles) in landmarks.iter() {
        for handle in handles {
            let community = x
                .interner()
                .get(handle)
                .and_then(|id| assignment.community_of(id));
            if let Some(c) = community {
                found.entry(c).or_default().insert(label.to_owned());
            }
        }
    }
    found
}

/// Attaches landmark labels to communities. A community holding landmarks of
/// one label takes that label; one holding several takes
/// `merged(L1,L2,...)`; the rest stay unlabeled.
pub fn label_clusters(
    x: &CoengagementGraph,
    assignment: &ClusterAssignment,
    landmarks: &LandmarkSet,
) -> ClusterAssignment {
    let mut labeled = assignment.clone();
    labeled.labels = vec![None; assignment.community_count()];
    for (c, labels) in landmark_communities(x, assignment, landmarks) {
        labeled.labels[c as usize] = Some(if labels.len() == 1 {
            labels.into_iter().next().expect("one label")
        } else {
            merged_label(labels.iter().map(String::as_str))
        });
    }
    labeled
}
