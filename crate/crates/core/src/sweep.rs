//! Cluster salience across a grid of `(n, s)` projection parameters.
//!
//! A label is *salient* in a cell when at least one of its landmarks survives
//! the projection and every community holding its landmarks holds no landmark
//! of another label. A label with no surviving landmark is *absent*; one
//! whose landmarks share a community with another label's is *subsumed*.
//! This is one concrete operationalization of "detected as its own cluster";
//! other salience tests are possible.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::clustering::{landmark_communities, louvain, ClusterAssignment, LandmarkSet};
use crate::error::{Error, Result};
use crate::io::write_table_csv;
use crate::model::{CoengagementGraph, EngagementGraph, ProjectionParams};
use crate::projection::{project, ProjectOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Salience {
    Salient,
    Absent,
    Subsumed,
}

/// Salience of every landmark label under one clustering.
pub fn label_salience(
    x: &CoengagementGraph,
    assignment: &ClusterAssignment,
    landmarks: &LandmarkSet,
) -> BTreeMap<String, Salience> {
    let by_community = landmark_communities(x, assignment, landmarks);
    landmarks
        .labels()
        .map(|label| {
            let homes: Vec<&BTreeSet<String>> = by_community
                .values()
                .filter(|labels| labels.contains(label))
                .collect();
            let salience = if homes.is_empty() {
                Salience::Absent
            } else if homes.iter().all(|labels| labels.len() == 1) {
                Salience::Salient
            } else {
                Salience::Subsumed
            };
            (label.to_owned(), salience)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub n: u64,
    pub s: u64,
    pub node_count: usize,
    pub edge_count: usize,
    pub community_count: usize,
    pub modularity: f64,
    pub seed: u64,
    pub salient: BTreeSet<String>,
    pub absent: BTreeSet<String>,
    pub subsumed: BTreeSet<String>,
}

impl SweepCell {
    pub fn status(&self, label: &str) -> Option<Salience> {
        if self.salient.contains(label) {
            Some(Salience::Salient)
        } else if self.absent.contains(label) {
            Some(Salience::Absent)
        } else if self.subsumed.contains(label) {
            Some(Salience::Subsumed)
        } else {
            None
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ExistenceMap {
    pub n_values: Vec<u64>,
    pub s_values: Vec<u64>,
    /// Row-major over `n_values` then `s_values`.
    pub cells: Vec<SweepCell>,
}

impl ExistenceMap {
    pub fn cell(&self, n: u64, s: u64) -> Option<&SweepCell> {
        self.cells.iter().find(|c| c.n == n && c.s == s)
    }
}

#[derive(Debug, Clone)]
pub struct SweepOptions {
    pub resolution: f64,
    /// Cell `i` (row-major) is clustered with `seed + i`.
    pub seed: u64,
    pub project: ProjectOptions,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self {
            resolution: crate::clustering::DEFAULT_RESOLUTION,
            seed: crate::clustering::DEFAULT_SEED,
            project: ProjectOptions::default(),
        }
    }
}

fn check_axis(name: &str, values: &[u64]) -> Result<()> {
    if values.is_empty() {
        return Err(Error::InvalidParams(format!("{name} list is empty")));
    }
    if values.contains(&0) {
        return Err(Error::InvalidParams(format!(
            "{name} values must be positive"
        )));
    }
    if values.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidParams(format!(
            "{name} values must be strictly ascending"
        )));
    }
    Ok(())
}

/// Projects, clusters and labels every `(n, s)` cell independently.
/// Cells run in parallel on the current rayon pool; each cell's projection
/// runs inline.
pub fn sweep(
    g: &EngagementGraph,
    n_values: &[u64],
    s_values: &[u64],
    landmarks: &LandmarkSet,
    options: &SweepOptions,
) -> Result<ExistenceMap> {
    check_axis("n", n_values)?;
    check_axis("s", s_values)?;
    let grid: Vec<(u64, u64)> = n_values
        .iter()
        .flat_map(|&n| s_values.iter().map(move |&s| (n, s)))
        .collect();
    let cell_options = ProjectOptions {
        threads: Some(1),
        progress: false,
        ..options.project.clone()
    };

    let cells = grid
        .par_iter()
        .enumerate()
        .map(|(index, &(n, s))| {
            let params = ProjectionParams::new(n, s)?;
            let x = project(g, params, &cell_options)?.graph;
            let seed = options.seed.wrapping_add(index as u64);
            let assignment = louvain(&x, options.resolution, seed);
            let mut cell = SweepCell {
                n,
                s,
                node_count: x.node_count(),
                edge_count: x.edge_count(),
                community_count: assignment.community_count(),
                modularity: assignment.modularity,
                seed,
                salient: BTreeSet::new(),
                absent: BTreeSet::new(),
                subsumed: BTreeSet::new(),
            };
            for (label, status) in label_salience(&x, &assignment, landmarks) {
                match status {
                    Salience::Salient => cell.salient.insert(label),
                    Salience::Absent => cell.absent.insert(label),
                    Salience::Subsumed => cell.subsumed.insert(label),
                };
            }
            log::info!(
                "sweep cell (n={n}, s={s}): {} nodes, {} edges, salient [{}]",
                cell.node_count,
                cell.edge_count,
                join(&cell.salient)
            );
            Ok(cell)
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(ExistenceMap {
        n_values: n_values.to_vec(),
        s_values: s_values.to_vec(),
        cells,
    })
}

fn join(labels: &BTreeSet<String>) -> String {
    labels
        .iter()
        .map(String::as_str)
        .collect::<Vec<_>>()
        .join(";")
}

pub const EXISTENCE_HEADER: &[&str] = &[
    "n",
    "s",
    "node_count",
    "edge_count",
    "salient_labels",
    "absent_labels",
    "subsumed_labels",
];

/// Writes `n,s,node_count,edge_count,salient_labels,absent_labels,subsumed_labels`
/// with labels `;`-joined in sorted order.
pub fn write_existence_csv(map: &ExistenceMap, path: impl AsRef<Path>) -> Result<()> {
    let rows: Vec<(u64, u64, usize, usize, String, String, String)> = map
        .cells
        .iter()
        .map(|c| {
            (
                c.n,
                c.s,
                c.node_count,
                c.edge_count,
                join(&c.salient),
                join(&c.absent),
                join(&c.subsumed),
            )
        })
        .collect();
    write_table_csv(EXISTENCE_HEADER, &rows, path)
}
