//! Run summary written as JSON next to the exported graphs.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::analysis::{
    AudienceSeries, BridgeRow, CoverageStats, FollowbackReport, OverlapRow, OverlayRow, Satellite,
};
use crate::clustering::ClusterAssignment;
use crate::io::{AttributeReport, IngestReport};
use crate::model::{CoengagementGraph, ProjectionParams};
use crate::projection::ProjectionReport;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphCounts {
    pub node_count: usize,
    pub edge_count: usize,
    pub total_edge_weight: u64,
}

impl GraphCounts {
    pub fn of(x: &CoengagementGraph) -> Self {
        Self {
            node_count: x.node_count(),
            edge_count: x.edge_count(),
            total_edge_weight: x.total_weight(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterSize {
    pub community: u32,
    pub label: Option<String>,
    pub size: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusteringSummary {
    pub resolution: f64,
    pub seed: u64,
    pub modularity: f64,
    pub level_modularity: Vec<f64>,
    pub community_count: usize,
    pub cluster_sizes: Vec<ClusterSize>,
}

impl ClusteringSummary {
    pub fn of(assignment: &ClusterAssignment) -> Self {
        Self {
            resolution: assignment.resolution,
            seed: assignment.seed,
            modularity: assignment.modularity,
            level_modularity: assignment.level_modularity.clone(),
            community_count: assignment.community_count(),
            cluster_sizes: assignment
                .sizes()
                .into_iter()
                .enumerate()
                .map(|(c, size)| ClusterSize {
                    community: c as u32,
                    label: assignment.label(c as u32).map(str::to_owned),
                    size,
                })
                .collect(),
        }
    }
}

/// Results of the structural diagnostics; sections that were not requested
/// stay empty.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AnalysisSection {
    pub bridge_table: Vec<BridgeRow>,
    pub satellites: Vec<Satellite>,
    pub followback: Option<FollowbackReport>,
    pub self_audience_overlap: Vec<OverlapRow>,
    pub overlay: Vec<OverlayRow>,
    pub coverage: Option<CoverageStats>,
    pub audience_timeseries: Option<AudienceSeries>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub schema_version: u32,
    pub command: String,
    pub params: Option<ProjectionParams>,
    /// Every effective option of the run, defaults included.
    pub settings: BTreeMap<String, serde_json::Value>,
    pub ingest: Option<IngestReport>,
    pub attributes: Option<AttributeReport>,
    pub projection: Option<ProjectionReport>,
    pub graph: Option<GraphCounts>,
    pub clustering: Option<ClusteringSummary>,
    pub analysis: AnalysisSection,
}

impl Summary {
    pub fn new(command: impl Into<String>) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            command: command.into(),
            params: None,
            settings: BTreeMap::new(),
            ingest: None,
            attributes: None,
            projection: None,
            graph: None,
            clustering: None,
            analysis: AnalysisSection::default(),
        }
    }

    pub fn setting(&mut self, key: &str, value: impl Serialize) -> &mut Self {
        self.settings.insert(
            key.to_owned(),
            serde_json::to_value(value).unwrap_or(serde_json::Value::Null),
        );
        self
    }
}
