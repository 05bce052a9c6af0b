//! Independent reference implementations and fixtures shared by the
//! integration tests and the acceptance target. Nothing here calls into the
//! library's algorithms; the oracles work from raw rows.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::Cursor;
use std::path::Path;
use std::sync::Arc;

use coengage::analysis::{
    audience_timeseries, bridge_table, coverage_stats, followback_metrics, overlay_rates,
    satellites, self_audience_overlap, BoolAttribute, Bucket,
};
use coengage::io::{read_interactions_from, AttributeTable, IngestOptions, InputFormat};
use coengage::synth::{
    generate, BridgeSpec, ClusterSpec, FollowbackSpec, SatelliteSpec, ScenarioSpec,
};
use coengage::{
    intern_nodes, label_clusters, louvain, project, sweep, ClusterAssignment, CoEdge,
    CoengagementGraph, EngagementGraph, LandmarkSet, ProjectOptions, ProjectionParams, Salience,
    SweepOptions,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type Rows = Vec<(String, String, u64)>;
pub type EdgeMap = BTreeMap<(String, String), u64>;
pub type Check = Result<(), String>;
pub type NamedCheck = (&'static str, fn() -> Check);

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if $cond {
        } else {
            return Err(format!($($msg)+));
        }
    };
}

// ---------------------------------------------------------------- graphs

/// Random directed multigraph: up to `max_engagers` engagers, `max_targets`
/// targets and `max_rows` interaction rows. Targets are skewed towards low
/// indices so that pairs share engagers and repeated engagement happens.
pub fn random_rows(
    rng: &mut ChaCha8Rng,
    max_engagers: usize,
    max_targets: usize,
    max_rows: usize,
) -> Rows {
    let engagers = rng.gen_range(1..=max_engagers);
    let targets = rng.gen_range(2..=max_targets);
    let rows = rng.gen_range(1..=max_rows);
    let mut out = Vec::with_capacity(rows);
    for _ in 0..rows {
        let u = rng.gen_range(0..engagers);
        let engager = format!("u{u:02}");
        let target = if rng.gen_bool(0.1) && engagers > 1 {
            // engagers can be engaged too
            let mut v = rng.gen_range(0..engagers);
            if v == u {
                v = (v + 1) % engagers;
            }
            format!("u{v:02}")
        } else {
            let r: f64 = rng.gen();
            format!("t{:02}", (r * r * targets as f64) as usize)
        };
        let count = if rng.gen_bool(0.7) {
            1
        } else {
            rng.gen_range(2..=4)
        };
        out.push((engager, target, count));
    }
    out
}

pub fn engagement_graph(rows: &Rows) -> EngagementGraph {
    EngagementGraph::from_handle_edges(rows).expect("valid rows")
}

/// `w(u, t)` by a plain scan of the rows.
pub fn aggregate(rows: &Rows) -> HashMap<(String, String), u64> {
    let mut w = HashMap::new();
    for (u, t, c) in rows {
        *w.entry((u.clone(), t.clone())).or_insert(0) += c;
    }
    w
}

/// The O(T^2 * U) pair-count oracle.
pub fn brute_projection(rows: &Rows, n: u64, s: u64) -> EdgeMap {
    let w = aggregate(rows);
    let targets: BTreeSet<&String> = rows.iter().map(|r| &r.1).collect();
    let engagers: BTreeSet<&String> = rows.iter().map(|r| &r.0).collect();
    let targets: Vec<&String> = targets.into_iter().collect();
    let weight = |u: &String, t: &String| w.get(&(u.clone(), t.clone())).copied().unwrap_or(0);
    let mut out = EdgeMap::new();
    for i in 0..targets.len() {
        for j in i + 1..targets.len() {
            let c = engagers
                .iter()
                .filter(|u| weight(u, targets[i]) >= s && weight(u, targets[j]) >= s)
                .count() as u64;
            if c >= n {
                out.insert((targets[i].clone(), targets[j].clone()), c);
            }
        }
    }
    out
}

pub fn edge_map(x: &CoengagementGraph) -> EdgeMap {
    x.edges()
        .iter()
        .map(|e| {
            let (a, b) = (x.handle(e.a).to_owned(), x.handle(e.b).to_owned());
            let key = if a < b { (a, b) } else { (b, a) };
            (key, e.weight)
        })
        .collect()
}

pub fn project_rows(rows: &Rows, n: u64, s: u64) -> CoengagementGraph {
    let g = engagement_graph(rows);
    let params = ProjectionParams::new(n, s).expect("params");
    project(&g, params, &ProjectOptions::default())
        .expect("projection")
        .graph
}

/// Builds a coengagement graph straight from `(a, b, weight)` handle triples.
pub fn coengagement(params: ProjectionParams, edges: &[(&str, &str, u64)]) -> CoengagementGraph {
    let handles: BTreeSet<&str> = edges.iter().flat_map(|e| [e.0, e.1]).collect();
    let handles: Vec<&str> = handles.into_iter().collect();
    let interner = Arc::new(intern_nodes(&handles).expect("handles"));
    let edges = edges
        .iter()
        .map(|&(a, b, weight)| {
            let (a, b) = (interner.get(a).unwrap(), interner.get(b).unwrap());
            CoEdge {
                a: a.min(b),
                b: a.max(b),
                weight,
            }
        })
        .collect();
    CoengagementGraph::new(params, interner, edges).expect("coengagement graph")
}

// ------------------------------------------------------------ modularity

/// Q = sum_c [ L_c / m - gamma * (D_c / 2m)^2 ] over an undirected weighted
/// edge list on nodes `0..nodes`.
pub fn oracle_modularity(
    nodes: usize,
    edges: &[(usize, usize, f64)],
    membership: &[u32],
    gamma: f64,
) -> f64 {
    let m: f64 = edges.iter().map(|e| e.2).sum();
    if m == 0.0 {
        return 0.0;
    }
    let k = membership
        .iter()
        .copied()
        .max()
        .map_or(0, |c| c as usize + 1);
    let mut internal = vec![0.0; k];
    let mut degree = vec![0.0; k];
    let mut node_degree = vec![0.0; nodes];
    for &(a, b, w) in edges {
        node_degree[a] += w;
        node_degree[b] += w;
        if membership[a] == membership[b] {
            internal[membership[a] as usize] += w;
        }
    }
    for (v, d) in node_degree.iter().enumerate() {
        degree[membership[v] as usize] += d;
    }
    (0..k)
        .map(|c| internal[c] / m - gamma * (degree[c] / (2.0 * m)).powi(2))
        .sum()
}

/// Best modularity over every partition of `0..nodes`, enumerated as
/// restricted growth strings.
pub fn best_modularity(nodes: usize, edges: &[(usize, usize, f64)], gamma: f64) -> f64 {
    fn rec(
        v: usize,
        max: u32,
        membership: &mut Vec<u32>,
        nodes: usize,
        edges: &[(usize, usize, f64)],
        gamma: f64,
        best: &mut f64,
    ) {
        if v == nodes {
            *best = best.max(oracle_modularity(nodes, edges, membership, gamma));
            return;
        }
        for c in 0..=max + 1 {
            membership[v] = c;
            rec(v + 1, max.max(c), membership, nodes, edges, gamma, best);
        }
    }
    if nodes == 0 {
        return 0.0;
    }
    let mut membership = vec![0u32; nodes];
    let mut best = f64::NEG_INFINITY;
    // node 0 is always in community 0
    rec(1, 0, &mut membership, nodes, edges, gamma, &mut best);
    best
}

/// Random small weighted graph, every node with at least one edge.
pub fn random_small_graph(rng: &mut ChaCha8Rng, max_nodes: usize) -> CoengagementGraph {
    loop {
        let nodes = rng.gen_range(2..=max_nodes);
        let p = rng.gen_range(0.2..0.8);
        let names: Vec<String> = (0..nodes).map(|i| format!("v{i}")).collect();
        let mut edges = Vec::new();
        for a in 0..nodes {
            for b in a + 1..nodes {
                if rng.gen_bool(p) {
                    edges.push((
                        names[a].as_str(),
                        names[b].as_str(),
                        rng.gen_range(1..=5u64),
                    ));
                }
            }
        }
        let touched: BTreeSet<&str> = edges.iter().flat_map(|e| [e.0, e.1]).collect();
        if touched.len() == nodes {
            return coengagement(ProjectionParams::new(1, 1).unwrap(), &edges);
        }
    }
}

pub fn local_edges(x: &CoengagementGraph) -> Vec<(usize, usize, f64)> {
    x.edges()
        .iter()
        .map(|e| {
            (
                x.local_index(e.a).unwrap(),
                x.local_index(e.b).unwrap(),
                e.weight as f64,
            )
        })
        .collect()
}

// ---------------------------------------------------------------- GEXF

#[derive(Debug, PartialEq, Eq)]
pub struct GexfCounts {
    pub nodes: usize,
    pub edges: usize,
}

/// Structural validation against the GEXF 1.2 schema: element nesting,
/// required attributes, enumerated values, attribute typing and referential
/// integrity of edges.
pub fn validate_gexf(xml: &str) -> Result<GexfCounts, String> {
    const NS: &str = "http://www.gexf.net/1.2draft";
    let doc = roxmltree::Document::parse(xml).map_err(|e| format!("not well-formed: {e}"))?;
    let root = doc.root_element();
    ensure!(
        root.tag_name().name() == "gexf",
        "root is <{}>",
        root.tag_name().name()
    );
    ensure!(root.tag_name().namespace() == Some(NS), "wrong namespace");
    ensure!(
        root.attribute("version") == Some("1.2"),
        "version must be 1.2"
    );

    let children: Vec<_> = root.children().filter(|n| n.is_element()).collect();
    let names: Vec<&str> = children.iter().map(|n| n.tag_name().name()).collect();
    ensure!(
        names == ["meta", "graph"] || names == ["graph"],
        "gexf children {names:?}"
    );
    for el in root.descendants().filter(|n| n.is_element()) {
        ensure!(
            el.tag_name().namespace() == Some(NS),
            "<{}> outside namespace",
            el.tag_name().name()
        );
    }
    let graph = *children.last().unwrap();
    let mode = graph.attribute("mode").unwrap_or("static");
    ensure!(["static", "dynamic"].contains(&mode), "graph mode {mode}");
    let edge_type = graph.attribute("defaultedgetype").unwrap_or("undirected");
    ensure!(
        ["directed", "undirected", "mutual"].contains(&edge_type),
        "defaultedgetype {edge_type}"
    );

    let mut declared: HashMap<String, String> = HashMap::new();
    let mut node_ids = BTreeSet::new();
    let mut edge_count = 0;
    let mut edge_ids = BTreeSet::new();
    for section in graph.children().filter(|n| n.is_element()) {
        match section.tag_name().name() {
            "attributes" => {
                ensure!(
                    matches!(section.attribute("class"), Some("node" | "edge")),
                    "attributes class"
                );
                for a in section.children().filter(|n| n.is_element()) {
                    ensure!(
                        a.tag_name().name() == "attribute",
                        "unexpected <{}>",
                        a.tag_name().name()
                    );
                    let id = a.attribute("id").ok_or("attribute without id")?;
                    ensure!(
                        a.attribute("title").is_some(),
                        "attribute {id} without title"
                    );
                    let ty = a.attribute("type").ok_or("attribute without type")?;
                    ensure!(
                        [
                            "integer",
                            "long",
                            "double",
                            "float",
                            "boolean",
                            "liststring",
                            "string",
                            "anyURI"
                        ]
                        .contains(&ty),
                        "attribute type {ty}"
                    );
                    declared.insert(id.to_owned(), ty.to_owned());
                }
            }
            "nodes" => {
                let mut seen = 0;
                for node in section.children().filter(|n| n.is_element()) {
                    ensure!(
                        node.tag_name().name() == "node",
                        "unexpected <{}>",
                        node.tag_name().name()
                    );
                    let id = node.attribute("id").ok_or("node without id")?;
                    ensure!(node_ids.insert(id.to_owned()), "duplicate node id {id}");
                    seen += 1;
                    for values in node.children().filter(|n| n.is_element()) {
                        ensure!(
                            values.tag_name().name() == "attvalues",
                            "unexpected node child"
                        );
                        for v in values.children().filter(|n| n.is_element()) {
                            ensure!(
                                v.tag_name().name() == "attvalue",
                                "unexpected attvalues child"
                            );
                            let key = v.attribute("for").ok_or("attvalue without for")?;
                            let value = v.attribute("value").ok_or("attvalue without value")?;
                            let ty = declared
                                .get(key)
                                .ok_or(format!("undeclared attribute {key}"))?;
                            let ok = match ty.as_str() {
                                "integer" => value.parse::<i32>().is_ok(),
                                "long" => value.parse::<i64>().is_ok(),
                                "double" | "float" => value.parse::<f64>().is_ok(),
                                "boolean" => value == "true" || value == "false",
                                _ => true,
                            };
                            ensure!(ok, "value {value:?} is not a {ty}");
                        }
                    }
                }
                if let Some(count) = section.attribute("count") {
                    ensure!(
                        count.parse::<usize>() == Ok(seen),
                        "nodes count {count} != {seen}"
                    );
                }
            }
            "edges" => {
                let mut seen = 0;
                for edge in section.children().filter(|n| n.is_element()) {
                    ensure!(
                        edge.tag_name().name() == "edge",
                        "unexpected <{}>",
                        edge.tag_name().name()
                    );
                    let id = edge.attribute("id").ok_or("edge without id")?;
                    ensure!(edge_ids.insert(id.to_owned()), "duplicate edge id {id}");
                    for end in ["source", "target"] {
                        let v = edge
                            .attribute(end)
                            .ok_or(format!("edge {id} without {end}"))?;
                        ensure!(node_ids.contains(v), "edge {id} {end} {v} is not a node");
                    }
                    if let Some(w) = edge.attribute("weight") {
                        ensure!(w.parse::<f64>().is_ok(), "edge weight {w}");
                    }
                    seen += 1;
                }
                if let Some(count) = section.attribute("count") {
                    ensure!(
                        count.parse::<usize>() == Ok(seen),
                        "edges count {count} != {seen}"
                    );
                }
                edge_count = seen;
            }
            other => return Err(format!("unexpected graph child <{other}>")),
        }
    }
    Ok(GexfCounts {
        nodes: node_ids.len(),
        edges: edge_count,
    })
}

// ------------------------------------------------------ projection checks

pub fn schematic_rows() -> Rows {
    [
        ("red", "blue"),
        ("red", "yellow"),
        ("yellow", "blue"),
        ("yellow", "green"),
    ]
    .iter()
    .map(|&(u, t)| (u.to_owned(), t.to_owned(), 1))
    .collect()
}

fn pairs(list: &[(&str, &str, u64)]) -> EdgeMap {
    list.iter()
        .map(|&(a, b, w)| ((a.to_owned(), b.to_owned()), w))
        .collect()
}

pub fn check_schematic() -> Check {
    let rows = schematic_rows();
    let got = edge_map(&project_rows(&rows, 1, 1));
    let want = pairs(&[("blue", "green", 1), ("blue", "yellow", 1)]);
    ensure!(got == want, "(1,1): {got:?}");
    for (n, s) in [(2, 1), (1, 2)] {
        let got = edge_map(&project_rows(&rows, n, s));
        ensure!(got.is_empty(), "({n},{s}) should be empty: {got:?}");
    }

    // three engagers each engaging {a, b} twice
    let rows: Rows = (0..3)
        .flat_map(|u| {
            [
                (format!("e{u}"), "a".to_owned(), 2),
                (format!("e{u}"), "b".to_owned(), 2),
            ]
        })
        .collect();
    ensure!(
        edge_map(&project_rows(&rows, 3, 2)) == pairs(&[("a", "b", 3)]),
        "(3,2)"
    );
    ensure!(
        edge_map(&project_rows(&rows, 4, 2)).is_empty(),
        "(4,2) should be empty"
    );
    ensure!(
        edge_map(&project_rows(&rows, 3, 3)).is_empty(),
        "(3,3) should be empty"
    );
    Ok(())
}

pub const ORACLE_GRID: [(u64, u64); 9] = [
    (1, 1),
    (1, 2),
    (1, 5),
    (2, 1),
    (2, 2),
    (2, 5),
    (3, 1),
    (3, 2),
    (3, 5),
];

/// `graphs` random multigraphs, every `(n, s)` of the grid, exact match.
pub fn check_oracle_equivalence(graphs: u64) -> Check {
    for seed in 0..graphs {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rows = random_rows(&mut rng, 50, 30, 500);
        let g = engagement_graph(&rows);
        for (n, s) in ORACLE_GRID {
            let params = ProjectionParams::new(n, s).unwrap();
            let x = project(&g, params, &ProjectOptions::default())
                .map_err(|e| e.to_string())?
                .graph;
            let want = brute_projection(&rows, n, s);
            ensure!(
                edge_map(&x) == want,
                "graph {seed} at ({n},{s}) differs from oracle"
            );
        }
    }
    Ok(())
}

/// Edge-set inclusion and per-pair weight anti-monotonicity in `s` over
/// `triples` sampled `(graph, n1 <= n2, s1 <= s2)`.
pub fn check_monotonicity(triples: u64) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(0x6d6f6e6f);
    for t in 0..triples {
        let rows = random_rows(&mut rng, 30, 20, 300);
        let g = engagement_graph(&rows);
        let (n1, s1) = (rng.gen_range(1..=4u64), rng.gen_range(1..=4u64));
        let (n2, s2) = (n1 + rng.gen_range(0..=3), s1 + rng.gen_range(0..=3));
        let run = |n, s| {
            project(
                &g,
                ProjectionParams::new(n, s).unwrap(),
                &ProjectOptions::default(),
            )
            .map(|p| edge_map(&p.graph))
            .map_err(|e| e.to_string())
        };
        let loose = run(n1, s1)?;
        let strict = run(n2, s2)?;
        for (pair, w) in &strict {
            ensure!(
                loose.contains_key(pair),
                "triple {t}: {pair:?} not in looser projection"
            );
            ensure!(
                *w <= loose[pair],
                "triple {t}: weight grew from s={s1} to s={s2}"
            );
        }
        // same n, larger s: weights never increase
        let same_n = run(n1, s2)?;
        for (pair, w) in &same_n {
            ensure!(
                loose.get(pair).is_some_and(|l| w <= l),
                "triple {t}: s anti-monotonicity on {pair:?}"
            );
        }
    }
    Ok(())
}

/// Louvain on `graphs` random graphs of at most 8 nodes against exhaustive
/// partition enumeration.
pub fn check_louvain(graphs: u64) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(0x6c6f7576);
    for t in 0..graphs {
        let x = random_small_graph(&mut rng, 8);
        let edges = local_edges(&x);
        let a = louvain(&x, 1.0, t);
        let direct = oracle_modularity(x.node_count(), &edges, a.membership(), 1.0);
        ensure!(
            (direct - a.modularity).abs() <= 1e-9,
            "graph {t}: reported Q {} vs formula {direct}",
            a.modularity
        );
        let best = best_modularity(x.node_count(), &edges, 1.0);
        ensure!(
            a.modularity >= 0.9 * best - 1e-12,
            "graph {t}: Q {} below 0.9 x optimum {best}",
            a.modularity
        );
    }
    Ok(())
}

// ------------------------------------------------------- planted sweep

/// Two mainstream clusters with audiences of at least 1000 and counts below
/// 25, plus a followback group of 30 engaging each other 25 times.
pub fn planted_spec() -> ScenarioSpec {
    ScenarioSpec {
        clusters: vec![
            ClusterSpec {
                label: "mainstream_a".into(),
                influencers: 6,
                audience: 1500,
                engagement_rate: 1.0,
                counts: vec![1, 2, 4, 8, 16],
                suspended_fraction: 0.0,
            },
            ClusterSpec {
                label: "mainstream_b".into(),
                influencers: 6,
                audience: 1200,
                engagement_rate: 1.0,
                counts: vec![1, 3],
                suspended_fraction: 0.0,
            },
        ],
        followback_groups: vec![FollowbackSpec {
            label: "followback".into(),
            size: 30,
            internal_count: 25,
            attached_label: Some("mainstream_a".into()),
            attached_count: 1,
            suspended_fraction: 0.7,
        }],
        ..ScenarioSpec::empty(7)
    }
}

pub const PLANTED_N: [u64; 5] = [1, 25, 100, 1000, 10000];
pub const PLANTED_S: [u64; 4] = [1, 5, 25, 26];

/// Runs the sweep over the planted scenario and checks every cell's size
/// against the manifest and the salience pattern at the two key cells.
pub fn check_planted_sweep(spec: &ScenarioSpec) -> Check {
    let scenario = generate(spec).map_err(|e| e.to_string())?;
    let g = scenario.engagement_graph().map_err(|e| e.to_string())?;
    let map = sweep(
        &g,
        &PLANTED_N,
        &PLANTED_S,
        &scenario.landmarks,
        &SweepOptions::default(),
    )
    .map_err(|e| e.to_string())?;
    for cell in &map.cells {
        let want = scenario
            .manifest
            .expected_size(ProjectionParams::new(cell.n, cell.s).unwrap());
        ensure!(
            (cell.node_count, cell.edge_count) == want,
            "cell ({},{}): {:?} vs manifest {want:?}",
            cell.n,
            cell.s,
            (cell.node_count, cell.edge_count)
        );
    }
    let status = |n, s, label: &str| map.cell(n, s).and_then(|c| c.status(label));
    for label in ["mainstream_a", "mainstream_b"] {
        ensure!(
            status(1000, 1, label) == Some(Salience::Salient),
            "{label} not salient at (1000,1)"
        );
        ensure!(
            status(25, 25, label) == Some(Salience::Absent),
            "{label} present at (25,25)"
        );
    }
    ensure!(
        status(1000, 1, "followback") != Some(Salience::Salient),
        "followback salient at (1000,1)"
    );
    ensure!(
        status(25, 25, "followback") == Some(Salience::Salient),
        "followback not salient at (25,25)"
    );
    ensure!(
        status(25, 26, "followback") == Some(Salience::Absent),
        "followback present at (25,26)"
    );
    Ok(())
}

// ------------------------------------------------------ analysis fixtures

fn project_scenario(
    spec: &ScenarioSpec,
    n: u64,
    s: u64,
) -> Result<
    (
        coengage::synth::Scenario,
        EngagementGraph,
        CoengagementGraph,
    ),
    String,
> {
    let scenario = generate(spec).map_err(|e| e.to_string())?;
    let g = scenario.engagement_graph().map_err(|e| e.to_string())?;
    let x = project(
        &g,
        ProjectionParams::new(n, s).unwrap(),
        &ProjectOptions::default(),
    )
    .map_err(|e| e.to_string())?
    .graph;
    Ok((scenario, g, x))
}

fn cluster_spec(label: &str, influencers: usize, audience: usize) -> ClusterSpec {
    ClusterSpec {
        label: label.into(),
        influencers,
        audience,
        engagement_rate: 1.0,
        counts: vec![1],
        suspended_fraction: 0.0,
    }
}

/// Two clusters joined only through one planted bridging account.
pub fn check_bridge_fixture() -> Check {
    let spec = ScenarioSpec {
        clusters: vec![cluster_spec("left", 3, 20), cluster_spec("right", 3, 20)],
        bridges: vec![BridgeSpec {
            handle: "bridge".into(),
            labels: vec!["left".into(), "right".into()],
            overlaps: vec![20, 20],
        }],
        ..ScenarioSpec::empty(11)
    };
    let (scenario, _, x) = project_scenario(&spec, 1, 1)?;
    let labeled = label_clusters(&x, &louvain(&x, 1.0, 42), &scenario.landmarks);
    let table = bridge_table(&x, &labeled);

    // recount: every edge whose endpoints carry different labels
    let mut cross: BTreeMap<String, u64> = BTreeMap::new();
    let mut total = 0;
    for e in x.edges() {
        let (la, lb) = (labeled.node_label(e.a), labeled.node_label(e.b));
        if let (Some(la), Some(lb)) = (la, lb) {
            if la != lb {
                total += 1;
                *cross.entry(x.handle(e.a).to_owned()).or_default() += 1;
                *cross.entry(x.handle(e.b).to_owned()).or_default() += 1;
            }
        }
    }
    ensure!(
        total == 3,
        "expected the bridge's 3 edges into the far cluster, got {total}"
    );
    ensure!(
        table.len() == cross.len(),
        "table has {} rows, oracle {}",
        table.len(),
        cross.len()
    );
    for row in &table {
        ensure!(
            row.pair_edge_count == total,
            "pair edge count {}",
            row.pair_edge_count
        );
        ensure!(
            row.cross_edge_count == cross[&row.node],
            "count for {}",
            row.node
        );
        ensure!(
            row.share == cross[&row.node] as f64 / total as f64,
            "share for {}",
            row.node
        );
    }
    let bridge = table
        .iter()
        .find(|r| r.node == "bridge")
        .ok_or("bridge missing from table")?;
    ensure!(
        bridge.share == 1.0 && bridge.weight_share == 1.0,
        "bridge share {}",
        bridge.share
    );
    ensure!(
        table.iter().filter(|r| r.share == 1.0).count() == 1,
        "another node carries every cross edge"
    );
    Ok(())
}

/// Degree-one accounts attached to a single hub.
pub fn check_satellite_fixture() -> Check {
    let spec = ScenarioSpec {
        clusters: vec![cluster_spec("core", 3, 30)],
        satellites: vec![SatelliteSpec {
            hub: "core.inf000".into(),
            count: 4,
            audience: 5,
            engagement_count: 1,
        }],
        ..ScenarioSpec::empty(5)
    };
    let (scenario, _, x) = project_scenario(&spec, 1, 1)?;
    // hub degree: 30 to each of two influencers plus 4 satellites of 5
    let hub_degree = 2 * 30 + 4 * 5;
    let got: BTreeSet<(String, String, u64, u64)> = satellites(&x, 50)
        .into_iter()
        .map(|s| (s.hub, s.satellite, s.edge_weight, s.hub_weighted_degree))
        .collect();
    let want: BTreeSet<(String, String, u64, u64)> = scenario
        .manifest
        .satellites
        .iter()
        .map(|s| {
            (
                s.hub.clone(),
                s.satellite.clone(),
                s.audience as u64,
                hub_degree,
            )
        })
        .collect();
    ensure!(want.len() == 4, "manifest lists {} satellites", want.len());
    ensure!(got == want, "satellites {got:?}");
    ensure!(
        satellites(&x, hub_degree + 1).is_empty(),
        "hub threshold not applied"
    );
    Ok(())
}

/// `|U(C) ∩ nodes(x)| / |U(C)|` per labeled community, from raw rows.
fn overlap_oracle(
    rows: &Rows,
    x: &CoengagementGraph,
    labeled: &ClusterAssignment,
    s: u64,
) -> BTreeMap<String, (usize, usize, usize)> {
    let w = aggregate(rows);
    let engagers: BTreeSet<&String> = rows.iter().map(|r| &r.0).collect();
    let in_x: BTreeSet<&str> = x.nodes().iter().map(|&v| x.handle(v)).collect();
    let mut out = BTreeMap::new();
    for (c, label) in labeled.labeled_communities() {
        let mut internal = 0;
        let mut audience: BTreeSet<&String> = BTreeSet::new();
        for e in x.edges() {
            if labeled.community_of(e.a) == Some(c) && labeled.community_of(e.b) == Some(c) {
                internal += 1;
                let (a, b) = (x.handle(e.a).to_owned(), x.handle(e.b).to_owned());
                for u in &engagers {
                    let wa = w.get(&((*u).clone(), a.clone())).copied().unwrap_or(0);
                    let wb = w.get(&((*u).clone(), b.clone())).copied().unwrap_or(0);
                    if wa >= s && wb >= s {
                        audience.insert(u);
                    }
                }
            }
        }
        let inside = audience
            .iter()
            .filter(|u| in_x.contains(u.as_str()))
            .count();
        out.insert(label.to_owned(), (internal, audience.len(), inside));
    }
    out
}

fn compare_overlap(
    rows: &Rows,
    n: u64,
    s: u64,
    landmarks: Option<&LandmarkSet>,
) -> Result<Vec<(String, Option<f64>)>, String> {
    let g = engagement_graph(rows);
    let params = ProjectionParams::new(n, s).unwrap();
    let x = project(&g, params, &ProjectOptions::default())
        .map_err(|e| e.to_string())?
        .graph;
    let assignment = louvain(&x, 1.0, 42);
    let generated;
    let landmarks = match landmarks {
        Some(l) => l,
        None => {
            // label every community after its lowest member
            generated =
                LandmarkSet::from_pairs(assignment.members().iter().enumerate().filter_map(
                    |(c, m)| {
                        m.first()
                            .map(|&v| (format!("c{c}"), x.handle(v).to_owned()))
                    },
                ));
            &generated
        }
    };
    let labeled = label_clusters(&x, &assignment, landmarks);
    let rows_out = self_audience_overlap(&g, &x, &labeled, params);
    let want = overlap_oracle(rows, &x, &labeled, s);
    ensure!(
        rows_out.len() == want.len(),
        "{} rows vs oracle {}",
        rows_out.len(),
        want.len()
    );
    let mut out = Vec::new();
    for r in rows_out {
        let &(internal, engagers, inside) =
            want.get(&r.label).ok_or(format!("label {}", r.label))?;
        ensure!(
            r.internal_edges == internal,
            "{}: internal edges {}",
            r.label,
            r.internal_edges
        );
        ensure!(
            r.engagers == engagers,
            "{}: engagers {} vs {engagers}",
            r.label,
            r.engagers
        );
        ensure!(
            r.engagers_in_projection == inside,
            "{}: inside {}",
            r.label,
            r.engagers_in_projection
        );
        let fraction = (engagers > 0).then(|| inside as f64 / engagers as f64);
        ensure!(
            r.fraction == fraction,
            "{}: fraction {:?}",
            r.label,
            r.fraction
        );
        out.push((r.label, r.fraction));
    }
    Ok(out)
}

fn scenario_rows(spec: &ScenarioSpec) -> Result<(Rows, LandmarkSet), String> {
    let scenario = generate(spec).map_err(|e| e.to_string())?;
    let rows = scenario
        .records()
        .map(|r| (r.engager, r.target, r.count))
        .collect();
    Ok((rows, scenario.landmarks))
}

pub fn check_overlap_fixture() -> Check {
    let spec = ScenarioSpec {
        clusters: vec![cluster_spec("main", 2, 10)],
        followback_groups: vec![FollowbackSpec {
            label: "fb".into(),
            size: 6,
            internal_count: 3,
            attached_label: Some("main".into()),
            attached_count: 1,
            suspended_fraction: 0.0,
        }],
        ..ScenarioSpec::empty(3)
    };
    let (rows, landmarks) = scenario_rows(&spec)?;
    // at s = 2 only the followback clique survives and it is its own audience
    let got = compare_overlap(&rows, 3, 2, Some(&landmarks))?;
    ensure!(
        got == vec![("fb".to_owned(), Some(1.0))],
        "followback overlap {got:?}"
    );
    compare_overlap(&rows, 3, 1, Some(&landmarks))?;
    compare_overlap(&rows, 1, 1, Some(&landmarks))?;
    for seed in 0..20 {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
        let rows = random_rows(&mut rng, 40, 25, 400);
        compare_overlap(&rows, 2, 1, None)?;
        compare_overlap(&rows, 1, 2, None)?;
    }
    Ok(())
}

/// Suspension overlay: a followback group built 71% suspended next to a
/// mainstream cluster built 2% suspended.
pub fn check_overlay_fixture() -> Check {
    let spec = ScenarioSpec {
        clusters: vec![ClusterSpec {
            suspended_fraction: 0.02,
            ..cluster_spec("mainstream", 100, 3)
        }],
        followback_groups: vec![FollowbackSpec {
            label: "followback".into(),
            size: 100,
            internal_count: 2,
            attached_label: None,
            attached_count: 1,
            suspended_fraction: 0.71,
        }],
        ..ScenarioSpec::empty(71)
    };
    let (scenario, _, x) = project_scenario(&spec, 1, 1)?;
    let labeled = label_clusters(&x, &louvain(&x, 1.0, 42), &scenario.landmarks);
    let attrs = AttributeTable::from_entries(scenario.attributes.clone());
    let rates: BTreeMap<String, (usize, usize, usize, Option<f64>)> =
        overlay_rates(&x, &labeled, &attrs, BoolAttribute::Suspended)
            .into_iter()
            .map(|r| (r.label, (r.members, r.true_count, r.unknown, r.rate)))
            .collect();
    ensure!(
        rates.get("followback") == Some(&(100, 71, 0, Some(0.71))),
        "followback {:?}",
        rates.get("followback")
    );
    ensure!(
        rates.get("mainstream") == Some(&(100, 2, 0, Some(0.02))),
        "mainstream {:?}",
        rates.get("mainstream")
    );

    // the followback group's near-parity share beats the mainstream cluster's
    let report = followback_metrics(&x, &attrs, &labeled, 0.2);
    let parity = |label: &str| {
        report
            .rows
            .iter()
            .find(|r| r.label.as_deref() == Some(label))
            .map(|r| r.near_parity_fraction)
    };
    let (fb, main) = (parity("followback"), parity("mainstream"));
    ensure!(fb == Some(1.0), "followback near-parity {fb:?}");
    ensure!(
        main.is_some_and(|m| m < 0.5),
        "mainstream near-parity {main:?}"
    );
    Ok(())
}

/// Coverage against a full sort of in-degrees recomputed from the rows.
pub fn check_coverage_fixture() -> Check {
    for seed in 0..25 {
        let mut rng = ChaCha8Rng::seed_from_u64(2000 + seed);
        let rows = random_rows(&mut rng, 50, 30, 500);
        let g = engagement_graph(&rows);
        let mut in_degree: BTreeMap<&str, u64> = BTreeMap::new();
        for (u, t, c) in &rows {
            in_degree.entry(u.as_str()).or_default();
            *in_degree.entry(t.as_str()).or_default() += c;
        }
        let mut ranking: Vec<(&str, u64)> = in_degree.iter().map(|(h, d)| (*h, *d)).collect();
        ranking.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
        let total: u64 = rows.iter().map(|r| r.2).sum();
        for (n, s) in [(1, 1), (2, 2), (3, 1)] {
            let x = project(
                &g,
                ProjectionParams::new(n, s).unwrap(),
                &ProjectOptions::default(),
            )
            .map_err(|e| e.to_string())?
            .graph;
            let present: BTreeSet<&str> = x.nodes().iter().map(|&v| x.handle(v)).collect();
            let projected: u64 = present.iter().map(|h| in_degree[h]).sum();
            for k in [1, 5, 10, 10_000] {
                let stats = coverage_stats(&g, &x, k).map_err(|e| e.to_string())?;
                let k_used = k.min(ranking.len());
                let hits = ranking[..k_used]
                    .iter()
                    .filter(|(h, _)| present.contains(h))
                    .count();
                ensure!(
                    stats.k == k_used && stats.clamped == (k_used < k),
                    "seed {seed}: clamp"
                );
                ensure!(
                    stats.top_k_present == hits,
                    "seed {seed} k {k}: top-k {} vs {hits}",
                    stats.top_k_present
                );
                ensure!(
                    stats.top_k_fraction == hits as f64 / k_used as f64,
                    "seed {seed}: fraction"
                );
                ensure!(
                    stats.projected_weight == projected && stats.total_weight == total,
                    "seed {seed}: weights"
                );
                ensure!(
                    stats.retweet_share == projected as f64 / total as f64,
                    "seed {seed}: share"
                );
            }
        }
    }
    Ok(())
}

pub const TIMESERIES_ROWS: &str = "\
engager,target,count,timestamp
u1,a1,1,2020-10-01T10:00:00Z
u1,focal,1,2020-10-01T12:00:00Z
u1,focal,2,2020-10-02T09:00:00Z
u2,a2,1,2020-10-01T08:00:00Z
u2,b1,1,2020-10-03T08:00:00Z
u2,focal,1,2020-10-01T20:00:00Z
u3,focal,1,2020-10-02T13:00:00Z
u4,b2,3,2020-09-30T00:00:00Z
u4,focal,1,2020-10-02T23:59:59Z
a1,focal,1,2020-10-02T05:00:00Z
u5,a1,1,2020-10-02T06:00:00Z
";

/// Focal account engaged by engagers of two labeled clusters; every count
/// below is enumerated by hand from `TIMESERIES_ROWS`.
pub fn check_timeseries_fixture() -> Check {
    let options = IngestOptions {
        collect_timestamps: true,
        ..IngestOptions::default()
    };
    let ingested = read_interactions_from(
        Cursor::new(TIMESERIES_ROWS),
        InputFormat::Csv,
        &options,
        Path::new("timeseries.csv"),
    )
    .map_err(|e| e.to_string())?;
    let x = coengagement(
        ProjectionParams::new(1, 1).unwrap(),
        &[("a1", "a2", 1), ("b1", "b2", 1)],
    );
    let landmarks = LandmarkSet::from_pairs([("A", "a1"), ("B", "b1")]);
    let labeled = label_clusters(&x, &louvain(&x, 1.0, 42), &landmarks);

    let row = |d: &str, class: &str, engagements, engagers| {
        (d.to_owned(), class.to_owned(), engagements, engagers)
    };
    let series = |bucket| -> Result<Vec<(String, String, u64, u64)>, String> {
        let s = audience_timeseries(
            &ingested.graph,
            &ingested.timed,
            "focal",
            &x,
            &labeled,
            bucket,
        )
        .map_err(|e| e.to_string())?;
        let classes: Vec<(&str, u64)> = s
            .engager_classes
            .iter()
            .map(|(k, v)| (k.as_str(), *v))
            .collect();
        ensure!(
            classes
                == [
                    ("exclusive:A", 1),
                    ("exclusive:B", 1),
                    ("mixed", 1),
                    ("unaffiliated", 2)
                ],
            "classes {classes:?}"
        );
        Ok(s.rows
            .into_iter()
            .map(|r| (r.bucket.to_string(), r.class, r.engagements, r.engagers))
            .collect())
    };
    let daily = series(Bucket::Day)?;
    let want = vec![
        row("2020-10-01", "exclusive:A", 1, 1),
        row("2020-10-01", "mixed", 1, 1),
        row("2020-10-02", "exclusive:A", 2, 1),
        row("2020-10-02", "exclusive:B", 1, 1),
        row("2020-10-02", "unaffiliated", 2, 2),
    ];
    ensure!(daily == want, "daily series {daily:?}");
    let weekly = series(Bucket::Week)?;
    let want = vec![
        row("2020-09-28", "exclusive:A", 3, 1),
        row("2020-09-28", "exclusive:B", 1, 1),
        row("2020-09-28", "mixed", 1, 1),
        row("2020-09-28", "unaffiliated", 2, 2),
    ];
    ensure!(weekly == want, "weekly series {weekly:?}");
    Ok(())
}

pub fn analysis_checks() -> Vec<NamedCheck> {
    vec![
        ("bridge_table", check_bridge_fixture as fn() -> Check),
        ("satellites", check_satellite_fixture),
        ("self_audience_overlap", check_overlap_fixture),
        ("overlay_rates", check_overlay_fixture),
        ("coverage_stats", check_coverage_fixture),
        ("audience_timeseries", check_timeseries_fixture),
    ]
}
