//! Coengagement projection.
//!
//! Two receiving accounts `i` and `j` are joined when at least `n` engagers
//! directed at least `s` engagements at each of them. The weight of the edge
//! is the number of such engagers.
//!
//! The projection is computed as a thresholded sparse product of the
//! qualifying bipartite adjacency with its transpose. Each engager's
//! qualifying target list `T_s(u)` is extracted once; then, for every target
//! `i` in ordinal order, the engagers that qualify for `i` are walked and the
//! tails of their lists above `i` are counted in a dense per-worker counter.
//! Every unordered pair is therefore counted exactly once, in the row of its
//! smaller endpoint, and rows can be processed by any number of workers and
//! concatenated in order without changing a single bit of the result.

use std::sync::atomic::{AtomicU64, AtomicUsize, Ordering};
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{CoEdge, CoengagementGraph, EngagementGraph, NodeId, ProjectionParams};

/// Rows per unit of parallel work.
const ROW_CHUNK: usize = 256;

#[derive(Debug, Clone, Default)]
pub struct ProjectOptions {
    /// Engagers whose qualifying fan-out exceeds this produce a warning.
    pub max_fanout_cap: Option<usize>,
    /// Skip (rather than only report) engagers above `max_fanout_cap`.
    pub cap_hard: bool,
    /// Log phase progress at `info` level.
    pub progress: bool,
    /// `None` runs on the current rayon pool, `Some(1)` runs inline, `Some(k)`
    /// builds a dedicated pool of `k` workers.
    pub threads: Option<usize>,
    /// Approximate upper bound on working memory of the projection.
    pub memory_budget_bytes: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FanoutWarning {
    pub engager: String,
    pub fanout: usize,
    pub skipped: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProjectionReport {
    /// Engagers with at least two qualifying targets (the only ones that can
    /// contribute to an edge).
    pub contributing_engagers: usize,
    /// Number of `(engager, pair)` increments performed.
    pub pair_expansions: u64,
    pub fanout_warnings: Vec<FanoutWarning>,
    pub skipped_engagers: usize,
}

#[derive(Debug, Clone)]
pub struct Projection {
    pub graph: CoengagementGraph,
    pub report: ProjectionReport,
}

/// `T_s(engager)`: targets the engager engaged at least `s` times, by ordinal.
pub fn qualifying_targets(g: &EngagementGraph, engager: NodeId, s: u64) -> Vec<NodeId> {
    let (targets, weights) = g.out_edges(engager);
    targets
        .iter()
        .zip(weights)
        .filter(|&(_, &w)| w >= s)
        .map(|(&t, _)| t)
        .collect()
}

/// Qualifying bipartite structure: per-engager target lists and the
/// transposed per-target engager lists.
struct Qualified {
    engager_offsets: Vec<usize>,
    engager_targets: Vec<u32>,
    target_offsets: Vec<usize>,
    target_engagers: Vec<u32>,
}

impl Qualified {
    fn targets_of(&self, engager: u32) -> &[u32] {
        let e = engager as usize;
        &self.engager_targets[self.engager_offsets[e]..self.engager_offsets[e + 1]]
    }

    fn engagers_of(&self, target: usize) -> &[u32] {
        &self.target_engagers[self.target_offsets[target]..self.target_offsets[target + 1]]
    }
}

fn check_budget(options: &ProjectOptions, phase: &'static str, bytes: u64) -> Result<()> {
    match options.memory_budget_bytes {
        Some(budget) if bytes > budget => Err(Error::Capacity {
            phase,
            detail: format!("needs ~{bytes} bytes, budget is {budget} bytes"),
        }),
        _ => Ok(()),
    }
}

fn qualify(
    g: &EngagementGraph,
    params: ProjectionParams,
    options: &ProjectOptions,
    report: &mut ProjectionReport,
) -> Result<Qualified> {
    let node_count = g.node_count();
    let mut engager_offsets = vec![0usize; node_count + 1];
    let mut engager_targets: Vec<u32> = Vec::new();
    for u in 0..node_count {
        let engager = NodeId(u as u32);
        let (targets, weights) = g.out_edges(engager);
        let start = engager_targets.len();
        engager_targets.extend(
            targets
                .iter()
                .zip(weights)
                .filter(|&(_, &w)| w >= params.s)
                .map(|(t, _)| t.0),
        );
        let fanout = engager_targets.len() - start;
        if fanout < 2 {
            // Cannot be a co-engager of any pair.
            engager_targets.truncate(start);
        } else {
            if let Some(cap) = options.max_fanout_cap {
                if fanout > cap {
                    report.fanout_warnings.push(FanoutWarning {
                        engager: g.handle(engager).to_owned(),
                        fanout,
                        skipped: options.cap_hard,
                    });
                    if options.cap_hard {
                        report.skipped_engagers += 1;
                        engager_targets.truncate(start);
                        engager_offsets[u + 1] = engager_targets.len();
                        continue;
                    }
                }
            }
            report.contributing_engagers += 1;
            let f = fanout as u64;
            report.pair_expansions += f * (f - 1) / 2;
        }
        engager_offsets[u + 1] = engager_targets.len();
    }
    check_budget(
        options,
        "qualify",
        (engager_targets.len() as u64) * 8 + (node_count as u64 + 1) * 16,
    )?;

    let mut target_offsets = vec![0usize; node_count + 1];
    for &t in &engager_targets {
        target_offsets[t as usize + 1] += 1;
    }
    for i in 0..node_count {
        target_offsets[i + 1] += target_offsets[i];
    }
    let mut cursor = target_offsets.clone();
    let mut target_engagers = vec![0u32; engager_targets.len()];
    for u in 0..node_count {
        for &t in &engager_targets[engager_offsets[u]..engager_offsets[u + 1]] {
            target_engagers[cursor[t as usize]] = u as u32;
            cursor[t as usize] += 1;
        }
    }

    Ok(Qualified {
        engager_offsets,
        engager_targets,
        target_offsets,
        target_engagers,
    })
}

/// Per-worker scratch space: a dense counter over target ordinals plus the
/// list of slots touched in the current row.
struct Scratch {
    counts: Vec<u32>,
    touched: Vec<u32>,
}

impl Scratch {
    fn new(node_count: usize) -> Self {
        Self {
            counts: vec![0; node_count],
            touched: Vec::new(),
        }
    }
}

struct RowContext<'a> {
    qualified: &'a Qualified,
    n: u64,
    emitted: &'a AtomicU64,
    rows_done: &'a AtomicUsize,
    edge_limit: u64,
    node_count: usize,
    progress: bool,
}

impl RowContext<'_> {
    fn chunk(&self, scratch: &mut Scratch, rows: std::ops::Range<usize>) -> Result<Vec<CoEdge>> {
        let mut out = Vec::new();
        for i in rows.clone() {
            for &u in self.qualified.engagers_of(i) {
                let targets = self.qualified.targets_of(u);
                let tail = targets.partition_point(|&t| t as usize <= i);
                for &j in &targets[tail..] {
                    let slot = &mut scratch.counts[j as usize];
                    if *slot == 0 {
                        scratch.touched.push(j);
                    }
                    *slot += 1;
                }
            }
            scratch.touched.sort_unstable();
            for &j in &scratch.touched {
                let c = u64::from(std::mem::take(&mut scratch.counts[j as usize]));
                if c >= self.n {
                    out.push(CoEdge {
                        a: NodeId(i as u32),
                        b: NodeId(j),
                        weight: c,
                    });
                }
            }
            scratch.touched.clear();
        }
        let total = self.emitted.fetch_add(out.len() as u64, Ordering::Relaxed) + out.len() as u64;
        if total > self.edge_limit {
            return Err(Error::Capacity {
                phase: "emit",
                detail: format!("projection produced more than {} edges", self.edge_limit),
            });
        }
        if self.progress {
            let before = self.rows_done.fetch_add(rows.len(), Ordering::Relaxed);
            let after = before + rows.len();
            let decile = |r: usize| r * 10 / self.node_count.max(1);
            if decile(before) != decile(after) {
                log::info!("projection: {}% of rows counted", decile(after) * 10);
            }
        }
        Ok(out)
    }
}

/// Projects `g` to its coengagement graph under `params`.
pub fn project(
    g: &EngagementGraph,
    params: ProjectionParams,
    options: &ProjectOptions,
) -> Result<Projection> {
    params.validate()?;
    let mut report = ProjectionReport::default();
    let node_count = g.node_count();
    if options.progress {
        log::info!(
            "projection {params}: qualifying {} engagements over {node_count} accounts",
            g.edge_count()
        );
    }
    let qualified = qualify(g, params, options, &mut report)?;
    for w in &report.fanout_warnings {
        log::warn!(
            "engager {} has {} qualifying targets (cap {}){}",
            w.engager,
            w.fanout,
            options.max_fanout_cap.unwrap_or_default(),
            if w.skipped { "; skipped" } else { "" }
        );
    }
    if options.progress {
        log::info!(
            "projection {params}: {} contributing engagers, {} pair expansions",
            report.contributing_engagers,
            report.pair_expansions
        );
    }

    let workers = match options.threads {
        Some(k) => k.max(1),
        None => rayon::current_num_threads(),
    };
    check_budget(
        options,
        "accumulate",
        workers as u64 * node_count as u64 * 8,
    )?;
    let edge_limit = options
        .memory_budget_bytes
        .map(|b| b / std::mem::size_of::<CoEdge>() as u64)
        .unwrap_or(u64::MAX);

    let emitted = AtomicU64::new(0);
    let rows_done = AtomicUsize::new(0);
    let ctx = RowContext {
        qualified: &qualified,
        n: params.n,
        emitted: &emitted,
        rows_done: &rows_done,
        edge_limit,
        node_count,
        progress: options.progress,
    };
    let chunks: Vec<std::ops::Range<usize>> = (0..node_count)
        .step_by(ROW_CHUNK)
        .map(|start| start..(start + ROW_CHUNK).min(node_count))
        .collect();

    let parts: Vec<Vec<CoEdge>> = match options.threads {
        Some(1) => {
            let mut scratch = Scratch::new(node_count);
            chunks
                .into_iter()
                .map(|rows| ctx.chunk(&mut scratch, rows))
                .collect::<Result<_>>()?
        }
        Some(k) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(k)
                .build()
                .map_err(|e| Error::Validation(format!("cannot build thread pool: {e}")))?;
            pool.install(|| run_parallel(&ctx, chunks))?
        }
        None => run_parallel(&ctx, chunks)?,
    };

    let edges: Vec<CoEdge> = parts.concat();
    if options.progress {
        log::info!("projection {params}: {} edges", edges.len());
    }
    let graph = CoengagementGraph::new(params, Arc::clone(g.interner()), edges)?;
    Ok(Projection { graph, report })
}

fn run_parallel(
    ctx: &RowContext<'_>,
    chunks: Vec<std::ops::Range<usize>>,
) -> Result<Vec<Vec<CoEdge>>> {
    chunks
        .into_par_iter()
        .map_init(
            || Scratch::new(ctx.node_count),
            |scratch, rows| ctx.chunk(scratch, rows),
        )
        .collect()
}
