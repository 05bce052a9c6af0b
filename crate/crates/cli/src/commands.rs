use std::fs;
use std::path::Path;

use coengage::analysis::{
    self, BRIDGE_HEADER, FOLLOWBACK_HEADER, OVERLAP_HEADER, OVERLAY_HEADER, SATELLITE_HEADER,
    TIMESERIES_HEADER,
};
use coengage::io::{self, IngestOptions, Ingested};
use coengage::summary::{ClusteringSummary, GraphCounts, Summary};
use coengage::sweep::{write_existence_csv, SweepOptions};
use coengage::synth::{self, ScenarioSpec};
use coengage::{
    label_clusters, louvain, project as run_projection, Error, ProjectOptions, ProjectionParams,
    Result,
};

use crate::{
    AnalyzeArgs, ClusterArgs, InputArgs, ProjectArgs, ProjectionArgs, SweepArgs, SynthArgs,
};

fn ingest(input: &InputArgs, collect_timestamps: bool) -> Result<Ingested> {
    let options = IngestOptions {
        keep_self_loops: input.keep_self_loops,
        strict: input.strict,
        collect_timestamps,
    };
    let ingested = io::read_interactions(&input.input, input.format, &options)?;
    let r = &ingested.report;
    if r.rejected_rows > 0 {
        log::warn!(
            "{}: {} of {} rows rejected (see ingest report)",
            input.input.display(),
            r.rejected_rows,
            r.total_rows
        );
    }
    if r.dropped_self_loops > 0 {
        log::info!(
            "{}: {} self-loop rows dropped",
            input.input.display(),
            r.dropped_self_loops
        );
    }
    Ok(ingested)
}

fn projection_options(args: &ProjectionArgs, progress: bool) -> ProjectOptions {
    ProjectOptions {
        max_fanout_cap: args.max_fanout_cap,
        cap_hard: args.cap_hard,
        progress,
        threads: None,
        memory_budget_bytes: args.memory_budget_mb.map(|mb| mb * 1024 * 1024),
    }
}

fn record_input(summary: &mut Summary, input: &InputArgs) {
    summary
        .setting("input", input.input.display().to_string())
        .setting("format", input.format)
        .setting("keep_self_loops", input.keep_self_loops)
        .setting("strict", input.strict);
}

fn record_projection(summary: &mut Summary, args: &ProjectionArgs) {
    summary
        .setting("max_fanout_cap", args.max_fanout_cap)
        .setting("cap_hard", args.cap_hard)
        .setting("memory_budget_mb", args.memory_budget_mb);
}

pub fn project(args: ProjectArgs, progress: bool) -> Result<()> {
    let params = ProjectionParams::new(args.n, args.s)?;
    let ingested = ingest(&args.input, false)?;
    let projection = run_projection(
        &ingested.graph,
        params,
        &projection_options(&args.projection, progress),
    )?;
    let x = &projection.graph;

    io::write_edge_csv(x, &args.out_edges)?;
    io::write_gexf(x, None, None, &args.out_gexf)?;

    let mut summary = Summary::new("project");
    summary.params = Some(params);
    record_input(&mut summary, &args.input);
    record_projection(&mut summary, &args.projection);
    summary.ingest = Some(ingested.report);
    summary.projection = Some(projection.report);
    summary.graph = Some(GraphCounts::of(x));
    io::write_json(&summary, &args.out_summary)
}

pub fn cluster(args: ClusterArgs) -> Result<()> {
    let params = ProjectionParams::new(args.n, args.s)?;
    let x = io::read_edge_csv(&args.edges, params)?;
    let landmarks = io::read_landmarks(&args.landmarks)?;
    let assignment = louvain(&x, args.clustering.resolution, args.clustering.seed);
    let labeled = label_clusters(&x, &assignment, &landmarks);

    if let Some(path) = &args.out_assignments {
        io::write_assignments_csv(&x, &labeled, path)?;
    }
    if let Some(path) = &args.out_gexf {
        io::write_gexf(&x, Some(&labeled), None, path)?;
    }

    let mut summary = Summary::new("cluster");
    summary.params = Some(params);
    summary
        .setting("edges", args.edges.display().to_string())
        .setting("landmarks", args.landmarks.display().to_string())
        .setting("resolution", args.clustering.resolution)
        .setting("seed", args.clustering.seed);
    summary.graph = Some(GraphCounts::of(&x));
    summary.clustering = Some(ClusteringSummary::of(&labeled));
    io::write_json(&summary, &args.out_summary)
}

pub fn sweep(args: SweepArgs, progress: bool) -> Result<()> {
    let landmarks = io::read_landmarks(&args.landmarks)?;
    let ingested = ingest(&args.input, false)?;
    let options = SweepOptions {
        resolution: args.clustering.resolution,
        seed: args.clustering.seed,
        project: projection_options(&args.projection, progress),
    };
    let map = coengage::sweep(
        &ingested.graph,
        &args.n_list.0,
        &args.s_list.0,
        &landmarks,
        &options,
    )?;
    write_existence_csv(&map, &args.out)?;

    if let Some(path) = &args.out_summary {
        let mut summary = Summary::new("sweep");
        record_input(&mut summary, &args.input);
        record_projection(&mut summary, &args.projection);
        summary
            .setting("n_list", &args.n_list.0)
            .setting("s_list", &args.s_list.0)
            .setting("landmarks", args.landmarks.display().to_string())
            .setting("resolution", args.clustering.resolution)
            .setting("seed", args.clustering.seed)
            .setting("existence_map", &map);
        summary.ingest = Some(ingested.report);
        io::write_json(&summary, path)?;
    }
    Ok(())
}

pub fn analyze(args: AnalyzeArgs, progress: bool) -> Result<()> {
    let params = ProjectionParams::new(args.n, args.s)?;
    if args.epsilon.is_nan() || args.epsilon < 0.0 {
        return Err(Error::InvalidParams("epsilon must be non-negative".into()));
    }
    if args.top_k == 0 {
        return Err(Error::InvalidParams("top-k must be >= 1".into()));
    }
    let landmarks = io::read_landmarks(&args.landmarks)?;
    let attrs = args.attrs.as_ref().map(io::read_attributes).transpose()?;
    let ingested = ingest(&args.input, args.focal.is_some())?;
    let g = &ingested.graph;

    let projection = run_projection(g, params, &projection_options(&args.projection, progress))?;
    let x = &projection.graph;
    let assignment = louvain(x, args.clustering.resolution, args.clustering.seed);
    let labeled = label_clusters(x, &assignment, &landmarks);
    let hub_min = args.hub_min_degree.unwrap_or(10 * params.n);

    let mut summary = Summary::new("analyze");
    summary.params = Some(params);
    record_input(&mut summary, &args.input);
    record_projection(&mut summary, &args.projection);
    summary
        .setting("landmarks", args.landmarks.display().to_string())
        .setting(
            "attrs",
            args.attrs.as_ref().map(|p| p.display().to_string()),
        )
        .setting("overlay", args.overlay)
        .setting("focal", &args.focal)
        .setting("bucket", args.bucket)
        .setting("hub_min_degree", hub_min)
        .setting("epsilon", args.epsilon)
        .setting("top_k", args.top_k)
        .setting("resolution", args.clustering.resolution)
        .setting("seed", args.clustering.seed);

    let a = &mut summary.analysis;
    a.bridge_table = analysis::bridge_table(x, &labeled);
    a.satellites = analysis::satellites(x, hub_min);
    a.self_audience_overlap = analysis::self_audience_overlap(g, x, &labeled, params);
    a.coverage = Some(analysis::coverage_stats(g, x, args.top_k)?);
    if let Some(attrs) = &attrs {
        a.followback = Some(analysis::followback_metrics(
            x,
            attrs,
            &labeled,
            args.epsilon,
        ));
        if let Some(attribute) = args.overlay {
            a.overlay = analysis::overlay_rates(x, &labeled, attrs, attribute);
        }
    }
    if let Some(focal) = &args.focal {
        a.audience_timeseries = Some(analysis::audience_timeseries(
            g,
            &ingested.timed,
            focal,
            x,
            &labeled,
            args.bucket,
        )?);
    }

    let dir = &args.out_dir;
    fs::create_dir_all(dir).map_err(|e| Error::Io {
        path: dir.clone(),
        source: e,
    })?;
    io::write_edge_csv(x, dir.join("edges.csv"))?;
    io::write_gexf(x, Some(&labeled), attrs.as_ref(), dir.join("graph.gexf"))?;
    io::write_assignments_csv(x, &labeled, dir.join("assignments.csv"))?;
    write_tables(dir, &summary)?;

    summary.ingest = Some(ingested.report);
    summary.attributes = attrs.map(|t| t.report);
    summary.projection = Some(projection.report);
    summary.graph = Some(GraphCounts::of(x));
    summary.clustering = Some(ClusteringSummary::of(&labeled));
    io::write_json(&summary, dir.join("summary.json"))
}

fn write_tables(dir: &Path, summary: &Summary) -> Result<()> {
    let a = &summary.analysis;
    io::write_table_csv(BRIDGE_HEADER, &a.bridge_table, dir.join("bridges.csv"))?;
    io::write_table_csv(SATELLITE_HEADER, &a.satellites, dir.join("satellites.csv"))?;
    io::write_table_csv(
        OVERLAP_HEADER,
        &a.self_audience_overlap,
        dir.join("overlap.csv"),
    )?;
    if let Some(fb) = &a.followback {
        io::write_table_csv(FOLLOWBACK_HEADER, &fb.rows, dir.join("followback.csv"))?;
    }
    if !a.overlay.is_empty() {
        io::write_table_csv(OVERLAY_HEADER, &a.overlay, dir.join("overlay.csv"))?;
    }
    if let Some(series) = &a.audience_timeseries {
        io::write_table_csv(TIMESERIES_HEADER, &series.rows, dir.join("timeseries.csv"))?;
    }
    Ok(())
}

pub fn synth(args: SynthArgs) -> Result<()> {
    let spec: ScenarioSpec = io::read_json(&args.spec)?;
    let scenario = synth::generate(&spec)?;
    scenario.write(&args.out_dir)
}
