//! Structural diagnostics over a labeled coengagement graph: bridging
//! accounts, satellite audiences, followback signatures, attribute overlays,
//! coverage of the engagement graph and per-audience time series.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use chrono::{Datelike, Duration, NaiveDate};
use serde::{Deserialize, Serialize};

use crate::clustering::ClusterAssignment;
use crate::error::{Error, Result};
use crate::io::{AttributeTable, NodeAttributes, TimedEngagement};
use crate::model::{CoengagementGraph, EngagementGraph, NodeId, ProjectionParams};

pub const DEFAULT_PARITY_EPSILON: f64 = 0.2;

/// Maps every node of `x` (by local index) to its ordinal in `g`.
fn graph_ids(g: &EngagementGraph, x: &CoengagementGraph) -> Vec<Option<NodeId>> {
    if Arc::ptr_eq(g.interner(), x.interner()) {
        return x.nodes().iter().map(|&n| Some(n)).collect();
    }
    x.nodes().iter().map(|&n| g.node(x.handle(n))).collect()
}

/// Per-node share of the cross-cluster connections between two labels.
///
/// Each cross edge is attributed to both of its endpoints, so the counts of
/// one label pair sum to twice its number of cross edges and the shares sum
/// to 2.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BridgeRow {
    pub label_a: String,
    pub label_b: String,
    pub node: String,
    pub cross_edge_count: u64,
    pub pair_edge_count: u64,
    pub share: f64,
    pub cross_weight: u64,
    pub pair_weight: u64,
    pub weight_share: f64,
}

pub const BRIDGE_HEADER: &[&str] = &[
    "label_a",
    "label_b",
    "node",
    "cross_edge_count",
    "pair_edge_count",
    "share",
    "cross_weight",
    "pair_weight",
    "weight_share",
];

/// Cross-cluster connection shares for every pair of labels. Rows are grouped
/// by label pair and sorted by descending edge count, then by node ordinal.
pub fn bridge_table(x: &CoengagementGraph, labeled: &ClusterAssignment) -> Vec<BridgeRow> {
    if labeled.labeled_communities().count() < 2 {
        return Vec::new();
    }
    // (label pair) -> (edges, weight, per-node (count, weight))
    type PairTally<'a> = (u64, u64, BTreeMap<NodeId, (u64, u64)>);
    let mut pairs: BTreeMap<(&str, &str), PairTally<'_>> = BTreeMap::new();
    for e in x.edges() {
        let (Some(la), Some(lb)) = (labeled.node_label(e.a), labeled.node_label(e.b)) else {
            continue;
        };
        if la == lb {
            continue;
        }
        let key = if la < lb { (la, lb) } else { (lb, la) };
        let entry = pairs.entry(key).or_default();
        entry.0 += 1;
        entry.1 += e.weight;
        for node in [e.a, e.b] {
            let t = entry.2.entry(node).or_default();
            t.0 += 1;
            t.1 += e.weight;
        }
    }

    let mut rows = Vec::new();
    for ((la, lb), (edges, weight, nodes)) in pairs {
        let mut block: Vec<(NodeId, u64, u64)> =
            nodes.into_iter().map(|(n, (c, w))| (n, c, w)).collect();
        block.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
        rows.extend(block.into_iter().map(|(node, count, w)| BridgeRow {
            label_a: la.to_owned(),
            label_b: lb.to_owned(),
            node: x.handle(node).to_owned(),
            cross_edge_count: count,
            pair_edge_count: edges,
            share: count as f64 / edges as f64,
            cross_weight: w,
            pair_weight: weight,
            weight_share: w as f64 / weight as f64,
        }));
    }
    rows
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Satellite {
    pub hub: String,
    pub satellite: String,
    pub edge_weight: u64,
    pub hub_weighted_degree: u64,
}

pub const SATELLITE_HEADER: &[&str] = &["hub", "satellite", "edge_weight", "hub_weighted_degree"];

/// Degree-one nodes whose single neighbour has weighted degree of at least
/// `hub_min_weighted_degree`, sorted by hub then satellite ordinal.
pub fn satellites(x: &CoengagementGraph, hub_min_weighted_degree: u64) -> Vec<Satellite> {
    let mut found: Vec<(usize, usize, u64)> = Vec::new();
    for local in 0..x.node_count() {
        if x.degree_local(local) != 1 {
            continue;
        }
        let (hub, w) = x.neighbors(local)[0];
        let hub = hub as usize;
        if x.weighted_degree_local(hub) >= hub_min_weighted_degree {
            found.push((hub, local, w));
        }
    }
    found.sort_unstable();
    found
        .into_iter()
        .map(|(hub, sat, w)| Satellite {
            hub: x.handle(x.nodes()[hub]).to_owned(),
            satellite: x.handle(x.nodes()[sat]).to_owned(),
            edge_weight: w,
            hub_weighted_degree: x.weighted_degree_local(hub),
        })
        .collect()
}

/// Satellites grouped by hub handle.
pub fn satellites_by_hub(list: &[Satellite]) -> BTreeMap<String, Vec<String>> {
    let mut grouped: BTreeMap<String, Vec<String>> = BTreeMap::new();
    for s in list {
        grouped
            .entry(s.hub.clone())
            .or_default()
            .push(s.satellite.clone());
    }
    grouped
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FollowbackRow {
    pub community: u32,
    pub label: Option<String>,
    pub members: usize,
    /// Members with both counts and a non-zero following count.
    pub attributed: usize,
    /// Members with a following count of zero.
    pub excluded: usize,
    pub median_ratio: f64,
    pub near_parity_fraction: f64,
}

pub const FOLLOWBACK_HEADER: &[&str] = &[
    "community",
    "label",
    "members",
    "attributed",
    "excluded",
    "median_ratio",
    "near_parity_fraction",
];

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FollowbackReport {
    pub epsilon: f64,
    pub rows: Vec<FollowbackRow>,
    /// Communities with no attributed member.
    pub omitted_communities: Vec<u32>,
}

fn median(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
    }
}

/// Follower/following ratio summary per community.
pub fn followback_metrics(
    x: &CoengagementGraph,
    attrs: &AttributeTable,
    clusters: &ClusterAssignment,
    epsilon: f64,
) -> FollowbackReport {
    let mut report = FollowbackReport {
        epsilon,
        ..Default::default()
    };
    for (c, members) in clusters.members().into_iter().enumerate() {
        let mut ratios = Vec::new();
        let mut excluded = 0;
        for node in &members {
            let Some(NodeAttributes {
                followers: Some(followers),
                following: Some(following),
                ..
            }) = attrs.get(x.handle(*node))
            else {
                continue;
            };
            if *following == 0 {
                excluded += 1;
            } else {
                ratios.push(*followers as f64 / *following as f64);
            }
        }
        if ratios.is_empty() {
            report.omitted_communities.push(c as u32);
            continue;
        }
        ratios.sort_by(f64::total_cmp);
        let near = ratios
            .iter()
            .filter(|&&r| r >= 1.0 - epsilon && r <= 1.0 + epsilon)
            .count();
        report.rows.push(FollowbackRow {
            community: c as u32,
            label: clusters.label(c as u32).map(str::to_owned),
            members: members.len(),
            attributed: ratios.len(),
            excluded,
            median_ratio: median(&ratios),
            near_parity_fraction: near as f64 / ratios.len() as f64,
        });
    }
    if !report.omitted_communities.is_empty() {
        log::info!(
            "followback: {} communities without attributed members omitted",
            report.omitted_communities.len()
        );
    }
    report
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverlapRow {
    pub community: u32,
    pub label: String,
    pub internal_edges: usize,
    /// Distinct engagers behind the community's internal edges.
    pub engagers: usize,
    pub engagers_in_projection: usize,
    /// `None` when the community has no internal edges.
    pub fraction: Option<f64>,
}

pub const OVERLAP_HEADER: &[&str] = &[
    "community",
    "label",
    "internal_edges",
    "engagers",
    "engagers_in_projection",
    "fraction",
];

/// For each labeled community, the share of engagers behind its internal
/// edges that are themselves nodes of the projection.
pub fn self_audience_overlap(
    g: &EngagementGraph,
    x: &CoengagementGraph,
    clusters: &ClusterAssignment,
    params: ProjectionParams,
) -> Vec<OverlapRow> {
    let ids = graph_ids(g, x);
    let in_projection: HashSet<NodeId> = ids.iter().flatten().copied().collect();
    let qualifying = |local: usize| -> Vec<NodeId> {
        let Some(id) = ids[local] else {
            return Vec::new();
        };
        let (sources, weights) = g.in_edges(id);
        sources
            .iter()
            .zip(weights)
            .filter(|&(_, &w)| w >= params.s)
            .map(|(&u, _)| u)
            .collect()
    };

    let membership = clusters.membership();
    let mut rows = Vec::new();
    for (c, label) in clusters.labeled_communities() {
        let mut audience: BTreeMap<usize, Vec<NodeId>> = BTreeMap::new();
        let mut engagers: BTreeSet<NodeId> = BTreeSet::new();
        let mut internal_edges = 0;
        for a in (0..x.node_count()).filter(|&i| membership[i] == c) {
            for &(b, _) in x.neighbors(a) {
                let b = b as usize;
                if b <= a || membership[b] != c {
                    continue;
                }
                internal_edges += 1;
                for end in [a, b] {
                    audience.entry(end).or_insert_with(|| qualifying(end));
                }
                let (ua, ub) = (&audience[&a], &audience[&b]);
                let (mut i, mut j) = (0, 0);
                while i < ua.len() && j < ub.len() {
                    match ua[i].cmp(&ub[j]) {
                        std::cmp::Ordering::Less => i += 1,
                        std::cmp::Ordering::Greater => j += 1,
                        std::cmp::Ordering::Equal => {
                            engagers.insert(ua[i]);
                            i += 1;
                            j += 1;
                        }
                    }
                }
            }
        }
        let inside = engagers
            .iter()
            .filter(|u| in_projection.contains(u))
            .count();
        rows.push(OverlapRow {
            community: c,
            label: label.to_owned(),
            internal_edges,
            engagers: engagers.len(),
            engagers_in_projection: inside,
            fraction: (internal_edges > 0 && !engagers.is_empty())
                .then(|| inside as f64 / engagers.len() as f64),
        });
    }
    rows
}

/// Boolean node attributes usable as overlays.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoolAttribute {
    Suspended,
}

impl BoolAttribute {
    pub fn get(self, attrs: &NodeAttributes) -> Option<bool> {
        match self {
            BoolAttribute::Suspended => attrs.suspended,
        }
    }
}

impl FromStr for BoolAttribute {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "suspended" => Ok(Self::Suspended),
            other => Err(Error::InvalidParams(format!(
                "{other:?} is not a boolean attribute (expected `suspended`)"
            ))),
        }
    }
}

impl fmt::Display for BoolAttribute {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BoolAttribute::Suspended => "suspended",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverlayRow {
    pub community: u32,
    pub label: String,
    pub members: usize,
    pub known: usize,
    pub true_count: usize,
    pub unknown: usize,
    /// `true_count / known`; `None` if no member has the attribute.
    pub rate: Option<f64>,
}

pub const OVERLAY_HEADER: &[&str] = &[
    "community",
    "label",
    "members",
    "known",
    "true_count",
    "unknown",
    "rate",
];

/// Rate of `attribute == true` among members of each labeled community.
pub fn overlay_rates(
    x: &CoengagementGraph,
    clusters: &ClusterAssignment,
    attrs: &AttributeTable,
    attribute: BoolAttribute,
) -> Vec<OverlayRow> {
    let members = clusters.members();
    clusters
        .labeled_communities()
        .map(|(c, label)| {
            let list = &members[c as usize];
            let values: Vec<bool> = list
                .iter()
                .filter_map(|&n| attrs.get(x.handle(n)).and_then(|a| attribute.get(a)))
                .collect();
            let true_count = values.iter().filter(|&&v| v).count();
            OverlayRow {
                community: c,
                label: label.to_owned(),
                members: list.len(),
                known: values.len(),
                true_count,
                unknown: list.len() - values.len(),
                rate: (!values.is_empty()).then(|| true_count as f64 / values.len() as f64),
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageStats {
    pub k_requested: usize,
    pub k: usize,
    pub clamped: bool,
    pub top_k_present: usize,
    pub top_k_fraction: f64,
    pub projected_weight: u64,
    pub total_weight: u64,
    pub retweet_share: f64,
}

/// How much of the engagement graph the projection represents: the fraction
/// of the `k` most-engaged accounts that appear in `x`, and the share of all
/// engagements received by accounts in `x`. Ties at rank `k` go to the lower
/// ordinal.
pub fn coverage_stats(
    g: &EngagementGraph,
    x: &CoengagementGraph,
    k: usize,
) -> Result<CoverageStats> {
    if k == 0 {
        return Err(Error::InvalidParams("k must be >= 1".into()));
    }
    let in_degree = g.weighted_in_degrees();
    let k_used = k.min(g.node_count());
    if k_used < k {
        log::info!("coverage: k = {k} clamped to {k_used} nodes");
    }
    let present: HashSet<NodeId> = graph_ids(g, x).into_iter().flatten().collect();

    let mut ranking: Vec<NodeId> = (0..g.node_count() as u32).map(NodeId).collect();
    ranking.sort_unstable_by(|a, b| {
        in_degree[b.index()]
            .cmp(&in_degree[a.index()])
            .then(a.cmp(b))
    });
    let top_k_present = ranking[..k_used]
        .iter()
        .filter(|n| present.contains(n))
        .count();
    let projected_weight: u64 = present.iter().map(|n| in_degree[n.index()]).sum();
    let total_weight = g.total_weight();

    Ok(CoverageStats {
        k_requested: k,
        k: k_used,
        clamped: k_used < k,
        top_k_present,
        top_k_fraction: if k_used == 0 {
            0.0
        } else {
            top_k_present as f64 / k_used as f64
        },
        projected_weight,
        total_weight,
        retweet_share: if total_weight == 0 {
            0.0
        } else {
            projected_weight as f64 / total_weight as f64
        },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Bucket {
    Day,
    Week,
}

impl Bucket {
    /// First day of the bucket containing `date` (weeks start on Monday).
    pub fn start(self, date: NaiveDate) -> NaiveDate {
        match self {
            Bucket::Day => date,
            Bucket::Week => date - Duration::days(i64::from(date.weekday().num_days_from_monday())),
        }
    }
}

impl FromStr for Bucket {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "day" => Ok(Self::Day),
            "week" => Ok(Self::Week),
            other => Err(Error::InvalidParams(format!(
                "unknown bucket {other:?} (expected day or week)"
            ))),
        }
    }
}

/// Which labeled clusters an engager engaged, apart from the focal account.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum AudienceClass {
    Exclusive(String),
    Mixed,
    Unaffiliated,
}

impl fmt::Display for AudienceClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AudienceClass::Exclusive(label) => write!(f, "exclusive:{label}"),
            AudienceClass::Mixed => f.write_str("mixed"),
            AudienceClass::Unaffiliated => f.write_str("unaffiliated"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimeseriesRow {
    pub bucket: NaiveDate,
    pub class: String,
    pub engagements: u64,
    pub engagers: u64,
}

pub const TIMESERIES_HEADER: &[&str] = &["bucket", "class", "engagements", "engagers"];

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AudienceSeries {
    pub focal: String,
    pub bucket: Option<Bucket>,
    /// Number of distinct engagers of the focal account per class.
    pub engager_classes: BTreeMap<String, u64>,
    pub rows: Vec<TimeseriesRow>,
    pub notice: Option<String>,
}

/// Engagements of `focal` over time, split by the class of each engager.
///
/// An engager's class is decided by the labeled clusters whose members it
/// engaged anywhere in `rows`, ignoring its engagements of `focal` itself:
/// exactly one label gives `exclusive:<label>`, several give `mixed`, none
/// gives `unaffiliated`.
pub fn audience_timeseries(
    g: &EngagementGraph,
    rows: &[TimedEngagement],
    focal: &str,
    x: &CoengagementGraph,
    clusters: &ClusterAssignment,
    bucket: Bucket,
) -> Result<AudienceSeries> {
    let focal_id = g
        .node(focal)
        .ok_or_else(|| Error::NotFound(format!("focal account {focal:?}")))?;
    let mut series = AudienceSeries {
        focal: focal.to_owned(),
        bucket: Some(bucket),
        ..Default::default()
    };
    if rows.is_empty() {
        series.notice = Some("no timestamped rows".into());
        log::warn!("audience time series for {focal}: no timestamped rows");
        return Ok(series);
    }

    let same_space = Arc::ptr_eq(g.interner(), x.interner());
    let label_of = |target: NodeId| -> Option<&str> {
        let id = if same_space {
            target
        } else {
            x.interner().get(g.handle(target))?
        };
        clusters.node_label(id)
    };

    let mut touched: BTreeMap<NodeId, BTreeSet<&str>> = BTreeMap::new();
    for r in rows {
        if r.target == focal_id {
            touched.entry(r.engager).or_default();
        } else if let Some(label) = label_of(r.target) {
            touched.entry(r.engager).or_default().insert(label);
        }
    }
    let class_of = |engager: NodeId| -> AudienceClass {
        match touched.get(&engager) {
            Some(labels) if labels.len() == 1 => {
                AudienceClass::Exclusive((*labels.iter().next().expect("one")).to_owned())
            }
            Some(labels) if labels.len() > 1 => AudienceClass::Mixed,
            _ => AudienceClass::Unaffiliated,
        }
    };

    let mut cells: BTreeMap<(NaiveDate, AudienceClass), (u64, BTreeSet<NodeId>)> = BTreeMap::new();
    let mut classes: BTreeMap<AudienceClass, BTreeSet<NodeId>> = BTreeMap::new();
    for r in rows.iter().filter(|r| r.target == focal_id) {
        let class = class_of(r.engager);
        let day = bucket.start(r.timestamp.date_naive());
        classes.entry(class.clone()).or_default().insert(r.engager);
        let cell = cells.entry((day, class)).or_default();
        cell.0 += r.count;
        cell.1.insert(r.engager);
    }
    if cells.is_empty() {
        series.notice = Some(format!("no timestamped engagements of {focal}"));
    }
    series.engager_classes = classes
        .into_iter()
        .map(|(c, set)| (c.to_string(), set.len() as u64))
        .collect();
    series.rows = cells
        .into_iter()
        .map(|((day, class), (count, engagers))| TimeseriesRow {
            bucket: day,
            class: class.to_string(),
            engagements: count,
            engagers: engagers.len() as u64,
        })
        .collect();
    Ok(series)
}
