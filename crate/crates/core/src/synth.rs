//! Deterministic synthetic engagement data with planted structures:
//! mainstream clusters, bridging accounts, followback groups and satellite
//! audiences.
//!
//! Every threshold-critical quantity (who engages whom, and how often) is
//! fixed by the scenario; the seed only affects audience handle suffixes,
//! timestamps and follower counts. Alongside the data the generator emits a
//! manifest with, for every pair of receiving accounts, the histogram of
//! `min(w(u, a), w(u, b))` over their common engagers. The expected
//! projection at any `(n, s)` follows from it without running the pipeline.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs;
use std::path::Path;

use chrono::{DateTime, Duration, TimeZone, Utc};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::clustering::LandmarkSet;
use crate::error::{Error, Result};
use crate::io::{write_json, InteractionRecord, NodeAttributes};
use crate::model::{EngagementGraph, EngagementGraphBuilder, ProjectionParams};

fn default_rate() -> f64 {
    1.0
}

fn default_counts() -> Vec<u64> {
    vec![1]
}

fn default_one() -> u64 {
    1
}

fn default_satellite_audience() -> usize {
    5
}

fn default_true() -> bool {
    true
}

/// A mainstream cluster: `influencers` receiving accounts engaged by a
/// dedicated audience.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClusterSpec {
    pub label: String,
    pub influencers: usize,
    pub audience: usize,
    /// Fraction of influencers each audience member engages, realized by a
    /// fixed stride pattern rather than by sampling.
    #[serde(default = "default_rate")]
    pub engagement_rate: f64,
    /// Per-member engagement counts, assigned cyclically: member `j` engages
    /// each of its influencers `counts[j % len]` times.
    #[serde(default = "default_counts")]
    pub counts: Vec<u64>,
    /// Leading fraction of influencers marked suspended.
    #[serde(default)]
    pub suspended_fraction: f64,
}

/// A bridging account engaged by the first `overlaps[k]` audience members of
/// cluster `labels[k]`, each with that member's cluster count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BridgeSpec {
    pub handle: String,
    pub labels: Vec<String>,
    pub overlaps: Vec<usize>,
}

/// A group whose members all engage each other `internal_count` times and
/// engage the first influencer of `attached_label` `attached_count` times.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FollowbackSpec {
    pub label: String,
    pub size: usize,
    pub internal_count: u64,
    #[serde(default)]
    pub attached_label: Option<String>,
    #[serde(default = "default_one")]
    pub attached_count: u64,
    #[serde(default)]
    pub suspended_fraction: f64,
}

/// `count` degree-one accounts hanging off `hub`, each with a private
/// audience of `audience` engagers who engage only the hub and the satellite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SatelliteSpec {
    pub hub: String,
    pub count: usize,
    #[serde(default = "default_satellite_audience")]
    pub audience: usize,
    #[serde(default = "default_one")]
    pub engagement_count: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    pub seed: u64,
    #[serde(default)]
    pub clusters: Vec<ClusterSpec>,
    #[serde(default)]
    pub bridges: Vec<BridgeSpec>,
    #[serde(default)]
    pub followback_groups: Vec<FollowbackSpec>,
    #[serde(default)]
    pub satellites: Vec<SatelliteSpec>,
    /// Emit one row per engagement event instead of one row per pair with a
    /// `count` column.
    #[serde(default = "default_true")]
    pub expand_counts: bool,
    /// Attach timestamps spread over 2020-09-01 .. 2020-12-18.
    #[serde(default = "default_true")]
    pub timestamps: bool,
}

impl ScenarioSpec {
    pub fn empty(seed: u64) -> Self {
        Self {
            seed,
            clusters: Vec::new(),
            bridges: Vec::new(),
            followback_groups: Vec::new(),
            satellites: Vec::new(),
            expand_counts: true,
            timestamps: true,
        }
    }

    fn validate(&self) -> Result<()> {
        let invalid = |msg: String| Err(Error::Validation(msg));
        let mut labels = BTreeSet::new();
        for c in &self.clusters {
            if c.label.is_empty() || !labels.insert(c.label.as_str()) {
                return invalid(format!(
                    "cluster label {:?} is empty or duplicated",
                    c.label
                ));
            }
            if !(c.engagement_rate > 0.0 && c.engagement_rate <= 1.0) {
                return invalid(format!(
                    "cluster {}: engagement_rate must be in (0, 1]",
                    c.label
                ));
            }
            if c.counts.is_empty() || c.counts.contains(&0) {
                return invalid(format!(
                    "cluster {}: counts must be non-empty and >= 1",
                    c.label
                ));
            }
            if !(0.0..=1.0).contains(&c.suspended_fraction) {
                return invalid(format!(
                    "cluster {}: suspended_fraction outside [0, 1]",
                    c.label
                ));
            }
        }
        for f in &self.followback_groups {
            if f.label.is_empty() || !labels.insert(f.label.as_str()) {
                return invalid(format!(
                    "followback label {:?} is empty or duplicated",
                    f.label
                ));
            }
            if f.internal_count == 0 || f.attached_count == 0 {
                return invalid(format!("followback {}: counts must be >= 1", f.label));
            }
            if let Some(attached) = &f.attached_label {
                match self.clusters.iter().find(|c| &c.label == attached) {
                    None => {
                        return invalid(format!(
                            "followback {} attaches to unknown cluster {attached:?}",
                            f.label
                        ))
                    }
                    Some(c) if c.influencers == 0 => {
                        return invalid(format!(
                            "followback {} attaches to cluster {attached} without influencers",
                            f.label
                        ))
                    }
                    Some(_) => {}
                }
            }
            if !(0.0..=1.0).contains(&f.suspended_fraction) {
                return invalid(format!(
                    "followback {}: suspended_fraction outside [0, 1]",
                    f.label
                ));
            }
        }
        for b in &self.bridges {
            if b.handle.is_empty() {
                return invalid("bridge with empty handle".into());
            }
            if b.labels.len() != b.overlaps.len() {
                return invalid(format!(
                    "bridge {}: labels and overlaps differ in length",
                    b.handle
                ));
            }
            for (label, &overlap) in b.labels.iter().zip(&b.overlaps) {
                let Some(c) = self.clusters.iter().find(|c| &c.label == label) else {
                    return invalid(format!(
                        "bridge {} references unknown label {label:?}",
                        b.handle
                    ));
                };
                if overlap > c.audience {
                    return invalid(format!(
                        "bridge {}: overlap {overlap} exceeds audience of {label}",
                        b.handle
                    ));
                }
            }
        }
        for s in &self.satellites {
            if s.engagement_count == 0 {
                return invalid(format!(
                    "satellites of {}: engagement_count must be >= 1",
                    s.hub
                ));
            }
        }
        Ok(())
    }
}

pub fn influencer_handle(label: &str, i: usize) -> String {
    format!("{label}.inf{i:03}")
}

pub fn followback_handle(label: &str, i: usize) -> String {
    format!("{label}.fb{i:03}")
}

pub fn satellite_handle(hub: &str, q: usize) -> String {
    format!("{hub}.sat{q:03}")
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupTruth {
    pub kind: String,
    pub members: Vec<String>,
    pub landmarks: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairAudience {
    pub a: String,
    pub b: String,
    /// `min(w(u, a), w(u, b))` -> number of common engagers `u`.
    pub min_count_histogram: BTreeMap<u64, u64>,
}

impl PairAudience {
    /// Number of common engagers with at least `s` engagements of each.
    pub fn qualifying(&self, s: u64) -> u64 {
        self.min_count_histogram.range(s..).map(|(_, c)| c).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SatelliteTruth {
    pub hub: String,
    pub satellite: String,
    pub audience: usize,
    pub engagement_count: u64,
}

/// Ground truth of a generated scenario.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub seed: u64,
    pub rows: u64,
    pub total_weight: u64,
    pub groups: BTreeMap<String, GroupTruth>,
    pub bridges: BTreeMap<String, Vec<String>>,
    pub satellites: Vec<SatelliteTruth>,
    /// Every pair of receiving accounts with at least one common engager,
    /// sorted by `(a, b)` with `a < b`.
    pub pairs: Vec<PairAudience>,
}

impl Manifest {
    /// Edges `(a, b, weight)` the projection must produce under `params`.
    pub fn expected_edges(&self, params: ProjectionParams) -> Vec<(String, String, u64)> {
        self.pairs
            .iter()
            .filter_map(|p| {
                let c = p.qualifying(params.s);
                (c >= params.n).then(|| (p.a.clone(), p.b.clone(), c))
            })
            .collect()
    }

    /// `(node_count, edge_count)` of the expected projection.
    pub fn expected_size(&self, params: ProjectionParams) -> (usize, usize) {
        let edges = self.expected_edges(params);
        let nodes: BTreeSet<&str> = edges
            .iter()
            .flat_map(|(a, b, _)| [a.as_str(), b.as_str()])
            .collect();
        (nodes.len(), edges.len())
    }
}

/// A generated scenario: the engagement plan plus derived tables.
#[derive(Debug, Clone)]
pub struct Scenario {
    handles: Vec<String>,
    /// `(engager, target, count)` over `handles`, in generation order.
    plan: Vec<(u32, u32, u64)>,
    pub attributes: Vec<NodeAttributes>,
    pub landmarks: LandmarkSet,
    pub manifest: Manifest,
    seed: u64,
    expand_counts: bool,
    timestamps: bool,
}

struct Planner {
    ids: HashMap<String, u32>,
    handles: Vec<String>,
    plan: Vec<(u32, u32, u64)>,
}

impl Planner {
    fn id(&mut self, handle: &str) -> u32 {
        if let Some(&id) = self.ids.get(handle) {
            return id;
        }
        let id = self.handles.len() as u32;
        self.ids.insert(handle.to_owned(), id);
        self.handles.push(handle.to_owned());
        id
    }

    fn engage(&mut self, engager: &str, target: &str, count: u64) {
        let (u, t) = (self.id(engager), self.id(target));
        self.plan.push((u, t, count));
    }
}

fn suspended_prefix(fraction: f64, size: usize) -> usize {
    (fraction * size as f64).round() as usize
}

/// Builds the scenario described by `spec`.
pub fn generate(spec: &ScenarioSpec) -> Result<Scenario> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut planner = Planner {
        ids: HashMap::new(),
        handles: Vec::new(),
        plan: Vec::new(),
    };
    let mut attributes: Vec<NodeAttributes> = Vec::new();
    let mut landmarks = LandmarkSet::new();
    let mut groups = BTreeMap::new();
    let mut receivers: BTreeSet<String> = BTreeSet::new();

    // Audience member handles per cluster, with their counts.
    let mut audiences: BTreeMap<&str, Vec<(String, u64)>> = BTreeMap::new();

    for c in &spec.clusters {
        let influencers: Vec<String> = (0..c.influencers)
            .map(|i| influencer_handle(&c.label, i))
            .collect();
        let per_member = ((c.engagement_rate * c.influencers as f64).round() as usize)
            .clamp(1.min(c.influencers), c.influencers);
        let mut members = Vec::with_capacity(c.audience);
        for j in 0..c.audience {
            let handle = format!("{}.aud{j:06}.{:04x}", c.label, rng.gen::<u16>());
            let count = c.counts[j % c.counts.len()];
            // Member j engages a window of `per_member` influencers starting
            // at j, wrapping around.
            for step in 0..per_member {
                let i = (j + step) % c.influencers;
                planner.engage(&handle, &influencers[i], count);
            }
            members.push((handle, count));
        }
        audiences.insert(c.label.as_str(), members);

        let suspended = suspended_prefix(c.suspended_fraction, c.influencers);
        for (i, handle) in influencers.iter().enumerate() {
            let following: u64 = rng.gen_range(100..5_000);
            let log_ratio: f64 = rng.gen_range(-2.0..2.0);
            attributes.push(NodeAttributes {
                handle: handle.clone(),
                display_label: None,
                followers: Some((following as f64 * 10f64.powf(log_ratio)).round() as u64),
                following: Some(following),
                suspended: Some(i < suspended),
                cluster_hint: Some(c.label.clone()),
            });
            receivers.insert(handle.clone());
        }
        if let Some(first) = influencers.first() {
            landmarks.insert(c.label.clone(), first.clone());
        }
        if let Some(second) = influencers.get(1) {
            landmarks.insert(c.label.clone(), second.clone());
        }
        groups.insert(
            c.label.clone(),
            GroupTruth {
                kind: "cluster".into(),
                landmarks: influencers.iter().take(2).cloned().collect(),
                members: influencers,
            },
        );
    }

    let mut bridges = BTreeMap::new();
    for b in &spec.bridges {
        for (label, &overlap) in b.labels.iter().zip(&b.overlaps) {
            for (member, count) in &audiences[label.as_str()][..overlap] {
                planner.engage(member, &b.handle, *count);
            }
        }
        let following: u64 = rng.gen_range(100..5_000);
        attributes.push(NodeAttributes {
            handle: b.handle.clone(),
            display_label: None,
            followers: Some(following * 10),
            following: Some(following),
            suspended: Some(false),
            cluster_hint: None,
        });
        receivers.insert(b.handle.clone());
        bridges.insert(b.handle.clone(), b.labels.clone());
    }

    for f in &spec.followback_groups {
        let members: Vec<String> = (0..f.size)
            .map(|i| followback_handle(&f.label, i))
            .collect();
        for a in &members {
            for b in &members {
                if a != b {
                    planner.engage(a, b, f.internal_count);
                }
            }
            if let Some(attached) = &f.attached_label {
                planner.engage(a, &influencer_handle(attached, 0), f.attached_count);
            }
        }
        let suspended = suspended_prefix(f.suspended_fraction, f.size);
        for (i, handle) in members.iter().enumerate() {
            let following: u64 = rng.gen_range(1_000..5_000);
            let jitter: f64 = rng.gen_range(-0.05..0.05);
            attributes.push(NodeAttributes {
                handle: handle.clone(),
                display_label: None,
                followers: Some((following as f64 * (1.0 + jitter)).round() as u64),
                following: Some(following),
                suspended: Some(i < suspended),
                cluster_hint: Some(f.label.clone()),
            });
            receivers.insert(handle.clone());
        }
        for handle in members.iter().take(2) {
            landmarks.insert(f.label.clone(), handle.clone());
        }
        groups.insert(
            f.label.clone(),
            GroupTruth {
                kind: "followback".into(),
                landmarks: members.iter().take(2).cloned().collect(),
                members,
            },
        );
    }

    let mut satellites = Vec::new();
    for s in &spec.satellites {
        if !receivers.contains(&s.hub) {
            return Err(Error::Validation(format!(
                "satellite hub {:?} is not a planted receiving account",
                s.hub
            )));
        }
        for q in 0..s.count {
            let satellite = satellite_handle(&s.hub, q);
            for r in 0..s.audience {
                let engager = format!("{satellite}.aud{r:03}");
                planner.engage(&engager, &s.hub, s.engagement_count);
                planner.engage(&engager, &satellite, s.engagement_count);
            }
            satellites.push(SatelliteTruth {
                hub: s.hub.clone(),
                satellite: satellite.clone(),
                audience: s.audience,
                engagement_count: s.engagement_count,
            });
        }
    }

    let Planner { handles, plan, .. } = planner;
    let pairs = pair_audiences(&handles, &plan);
    let total_weight: u64 = plan.iter().map(|e| e.2).sum();
    let rows = if spec.expand_counts {
        total_weight
    } else {
        plan.len() as u64
    };
    attributes.sort_by(|a, b| a.handle.cmp(&b.handle));

    Ok(Scenario {
        handles,
        plan,
        attributes,
        landmarks,
        manifest: Manifest {
            seed: spec.seed,
            rows,
            total_weight,
            groups,
            bridges,
            satellites,
            pairs,
        },
        seed: spec.seed,
        expand_counts: spec.expand_counts,
        timestamps: spec.timestamps,
    })
}

/// Per-engager enumeration of target pairs over the plan.
fn pair_audiences(handles: &[String], plan: &[(u32, u32, u64)]) -> Vec<PairAudience> {
    let mut per_engager: BTreeMap<u32, BTreeMap<u32, u64>> = BTreeMap::new();
    for &(u, t, c) in plan {
        *per_engager.entry(u).or_default().entry(t).or_default() += c;
    }
    let mut hist: HashMap<(u32, u32), BTreeMap<u64, u64>> = HashMap::new();
    for targets in per_engager.values() {
        let list: Vec<(u32, u64)> = targets.iter().map(|(&t, &c)| (t, c)).collect();
        for (x, &(ta, ca)) in list.iter().enumerate() {
            for &(tb, cb) in &list[x + 1..] {
                let key = if handles[ta as usize] < handles[tb as usize] {
                    (ta, tb)
                } else {
                    (tb, ta)
                };
                *hist.entry(key).or_default().entry(ca.min(cb)).or_default() += 1;
            }
        }
    }
    let mut pairs: Vec<PairAudience> = hist
        .into_iter()
        .map(|((a, b), h)| PairAudience {
            a: handles[a as usize].clone(),
            b: handles[b as usize].clone(),
            min_count_histogram: h,
        })
        .collect();
    pairs.sort_by(|p, q| (&p.a, &p.b).cmp(&(&q.a, &q.b)));
    pairs
}

fn window_start() -> DateTime<Utc> {
    Utc.with_ymd_and_hms(2020, 9, 1, 0, 0, 0)
        .single()
        .expect("valid date")
}

const WINDOW_SECONDS: i64 = 108 * 24 * 3600;

impl Scenario {
    pub fn is_empty(&self) -> bool {
        self.plan.is_empty()
    }

    /// Interaction rows in generation order. Timestamps come from a generator
    /// seeded independently of the plan, so they are stable per seed.
    pub fn records(&self) -> impl Iterator<Item = InteractionRecord> + '_ {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed ^ 0x7469_6d65);
        let start = window_start();
        let timestamps = self.timestamps;
        let expand = self.expand_counts;
        self.plan.iter().flat_map(move |&(u, t, c)| {
            let reps = if expand { c } else { 1 };
            let count = if expand { 1 } else { c };
            let stamps: Vec<Option<DateTime<Utc>>> = (0..reps)
                .map(|_| {
                    timestamps.then(|| start + Duration::seconds(rng.gen_range(0..WINDOW_SECONDS)))
                })
                .collect();
            let (engager, target) = (
                self.handles[u as usize].clone(),
                self.handles[t as usize].clone(),
            );
            stamps.into_iter().map(move |timestamp| InteractionRecord {
                engager: engager.clone(),
                target: target.clone(),
                count,
                timestamp,
            })
        })
    }

    /// The engagement graph the rows aggregate to, built without going
    /// through files.
    pub fn engagement_graph(&self) -> Result<EngagementGraph> {
        let mut builder = EngagementGraphBuilder::default();
        for &(u, t, c) in &self.plan {
            builder.add(&self.handles[u as usize], &self.handles[t as usize], c)?;
        }
        Ok(builder.build()?.0)
    }

    /// Writes `interactions.csv`, `attributes.csv`, `landmarks.csv` and
    /// `manifest.json` into `dir`.
    pub fn write(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;

        let path = dir.join("interactions.csv");
        let file = fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
        let mut wtr = csv::Writer::from_writer(std::io::BufWriter::new(file));
        let csv_err = |e| Error::csv(&path, e);
        wtr.write_record(["engager", "target", "count", "timestamp"])
            .map_err(csv_err)?;
        for r in self.records() {
            let ts = r
                .timestamp
                .map(|t| t.format("%Y-%m-%dT%H:%M:%SZ").to_string())
                .unwrap_or_default();
            wtr.write_record([
                r.engager.as_str(),
                r.target.as_str(),
                &r.count.to_string(),
                &ts,
            ])
            .map_err(csv_err)?;
        }
        wtr.flush().map_err(|e| Error::io(&path, e))?;

        let path = dir.join("attributes.csv");
        let rows: Vec<(String, String, String, String, String, String)> = self
            .attributes
            .iter()
            .map(|a| {
                let opt = |v: Option<u64>| v.map(|v| v.to_string()).unwrap_or_default();
                (
                    a.handle.clone(),
                    a.display_label.clone().unwrap_or_default(),
                    opt(a.followers),
                    opt(a.following),
                    a.suspended.map(|s| s.to_string()).unwrap_or_default(),
                    a.cluster_hint.clone().unwrap_or_default(),
                )
            })
            .collect();
        crate::io::write_table_csv(
            &[
                "node",
                "label",
                "followers",
                "following",
                "suspended",
                "cluster_hint",
            ],
            &rows,
            &path,
        )?;

        let path = dir.join("landmarks.csv");
        let rows: Vec<(&str, &str)> = self
            .landmarks
            .iter()
            .flat_map(|(label, handles)| handles.iter().map(move |h| (label, h.as_str())))
            .collect();
        crate::io::write_table_csv(&["label", "handle"], &rows, &path)?;

        write_json(&self.manifest, dir.join("manifest.json"))
    }
}
