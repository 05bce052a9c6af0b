//! Reading interaction logs and node attributes; writing edge lists, GEXF and
//! JSON summaries.
//!
//! Every writer emits nodes and edges in ordinal order so that identical
//! inputs give byte-identical files.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::str::FromStr;
use std::sync::Arc;

use chrono::{DateTime, NaiveDate, Utc};
use serde::{Deserialize, Serialize};

use crate::clustering::{ClusterAssignment, LandmarkSet};
use crate::error::{Error, Result};
use crate::model::{
    CoEdge, CoengagementGraph, EngagementGraph, EngagementGraphBuilder, Interner, NodeId,
    ProjectionParams,
};

/// Stop recording individual row errors past this many; counts stay exact.
const MAX_RECORDED_ERRORS: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InputFormat {
    Csv,
    Jsonl,
}

impl FromStr for InputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(Self::Csv),
            "jsonl" | "ndjson" => Ok(Self::Jsonl),
            other => Err(Error::InvalidParams(format!(
                "unknown input format {other:?}"
            ))),
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct IngestOptions {
    pub keep_self_loops: bool,
    /// Abort on the first malformed row instead of skipping it.
    pub strict: bool,
    /// Keep accepted timestamped rows in [`Ingested::timed`].
    pub collect_timestamps: bool,
}

/// One engagement event, as read from an interaction file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InteractionRecord {
    pub engager: String,
    pub target: String,
    #[serde(default = "one")]
    pub count: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timestamp: Option<DateTime<Utc>>,
}

fn one() -> u64 {
    1
}

/// An accepted row that carried a timestamp, keyed by graph ordinals.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TimedEngagement {
    pub engager: NodeId,
    pub target: NodeId,
    pub count: u64,
    pub timestamp: DateTime<Utc>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RowError {
    pub line: u64,
    pub reason: String,
}

/// Machine-readable account of what happened to every input row.
///
/// `accepted_rows + dropped_self_loops + rejected_rows == total_rows`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestReport {
    pub total_rows: u64,
    pub accepted_rows: u64,
    /// Sum of `count` over accepted rows; equals the graph's total weight.
    pub accepted_weight: u64,
    /// Accepted rows merged into an already-seen (engager, target) pair.
    pub aggregated_rows: u64,
    pub distinct_edges: u64,
    pub dropped_self_loops: u64,
    pub rejected_rows: u64,
    pub timestamped_rows: u64,
    pub errors: Vec<RowError>,
    pub errors_truncated: bool,
}

impl IngestReport {
    fn reject(&mut self, line: u64, reason: String, strict: bool) -> Result<()> {
        if strict {
            return Err(Error::MalformedRow { line, reason });
        }
        self.rejected_rows += 1;
        if self.errors.len() < MAX_RECORDED_ERRORS {
            self.errors.push(RowError { line, reason });
        } else {
            self.errors_truncated = true;
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct Ingested {
    pub graph: EngagementGraph,
    pub report: IngestReport,
    /// Accepted rows that carried timestamps, in input order; empty unless
    /// requested through [`IngestOptions::collect_timestamps`].
    pub timed: Vec<TimedEngagement>,
}

/// Parses an ISO 8601 instant. Offsets are converted to UTC; a bare date is
/// taken as midnight UTC.
pub fn parse_timestamp(raw: &str) -> Option<DateTime<Utc>> {
    if let Ok(t) = DateTime::parse_from_rfc3339(raw) {
        return Some(t.with_timezone(&Utc));
    }
    if let Ok(t) = chrono::NaiveDateTime::parse_from_str(raw, "%Y-%m-%dT%H:%M:%S") {
        return Some(t.and_utc());
    }
    if let Ok(t) = chrono::NaiveDateTime::parse_from_str(raw, "%Y-%m-%d %H:%M:%S") {
        return Some(t.and_utc());
    }
    NaiveDate::parse_from_str(raw, "%Y-%m-%d")
        .ok()
        .and_then(|d| d.and_hms_opt(0, 0, 0))
        .map(|t| t.and_utc())
}

struct Ingest {
    options: IngestOptions,
    builder: EngagementGraphBuilder,
    report: IngestReport,
    timed: Vec<(u32, u32, u64, DateTime<Utc>)>,
}

impl Ingest {
    fn new(options: &IngestOptions) -> Self {
        Self {
            options: options.clone(),
            builder: EngagementGraphBuilder::default(),
            report: IngestReport::default(),
            timed: Vec::new(),
        }
    }

    fn row(
        &mut self,
        line: u64,
        engager: &str,
        target: &str,
        count: Option<&str>,
        timestamp: Option<&str>,
    ) -> Result<()> {
        self.report.total_rows += 1;
        let strict = self.options.strict;
        if engager.is_empty() || target.is_empty() {
            return self
                .report
                .reject(line, "empty engager or target".into(), strict);
        }
        let count = match count.map(str::trim).filter(|c| !c.is_empty()) {
            None => 1,
            Some(raw) => match raw.parse::<i64>() {
                Ok(c) if c >= 1 => c as u64,
                Ok(c) => {
                    return self
                        .report
                        .reject(line, format!("count {c} is not positive"), strict)
                }
                Err(_) => {
                    return self.report.reject(
                        line,
                        format!("count {raw:?} is not an integer"),
                        strict,
                    )
                }
            },
        };
        let timestamp = match timestamp.map(str::trim).filter(|t| !t.is_empty()) {
            None => None,
            Some(raw) => match parse_timestamp(raw) {
                Some(t) => Some(t),
                None => {
                    return self.report.reject(
                        line,
                        format!("timestamp {raw:?} is not ISO 8601"),
                        strict,
                    )
                }
            },
        };
        if engager == target && !self.options.keep_self_loops {
            self.report.dropped_self_loops += 1;
            return Ok(());
        }
        let (u, t) = self.builder.add(engager, target, count)?;
        self.report.accepted_rows += 1;
        self.report.accepted_weight += count;
        if let Some(ts) = timestamp {
            self.report.timestamped_rows += 1;
            if self.options.collect_timestamps {
                self.timed.push((u, t, count, ts));
            }
        }
        Ok(())
    }

    fn finish(mut self) -> Result<Ingested> {
        let (graph, remap) = self.builder.build()?;
        self.report.distinct_edges = graph.edge_count() as u64;
        self.report.aggregated_rows = self.report.accepted_rows - self.report.distinct_edges;
        let timed = self
            .timed
            .into_iter()
            .map(|(u, t, count, timestamp)| TimedEngagement {
                engager: remap[u as usize],
                target: remap[t as usize],
                count,
                timestamp,
            })
            .collect();
        Ok(Ingested {
            graph,
            report: self.report,
            timed,
        })
    }
}

/// Reads an interaction file into an aggregated engagement graph.
pub fn read_interactions(
    path: impl AsRef<Path>,
    format: InputFormat,
    options: &IngestOptions,
) -> Result<Ingested> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_interactions_from(BufReader::new(file), format, options, path)
}

/// Like [`read_interactions`] over any reader; `source` names it in errors.
pub fn read_interactions_from<R: Read>(
    reader: R,
    format: InputFormat,
    options: &IngestOptions,
    source: &Path,
) -> Result<Ingested> {
    let mut ingest = Ingest::new(options);
    match format {
        InputFormat::Csv => read_csv_rows(reader, &mut ingest, source)?,
        InputFormat::Jsonl => read_jsonl_rows(reader, &mut ingest, source)?,
    }
    ingest.finish()
}

fn column(headers: &csv::StringRecord, name: &str) -> Option<usize> {
    headers.iter().position(|h| h.trim() == name)
}

fn read_csv_rows<R: Read>(reader: R, ingest: &mut Ingest, source: &Path) -> Result<()> {
    let mut rdr = csv::ReaderBuilder::new().flexible(true).from_reader(reader);
    let headers = rdr.headers().map_err(|e| Error::csv(source, e))?.clone();
    let (Some(engager_col), Some(target_col)) =
        (column(&headers, "engager"), column(&headers, "target"))
    else {
        return Err(Error::Validation(format!(
            "{}: header must contain `engager` and `target`",
            source.display()
        )));
    };
    let count_col = column(&headers, "count");
    let timestamp_col = column(&headers, "timestamp");
    let width = headers.len();

    let mut record = csv::StringRecord::new();
    loop {
        match rdr.read_record(&mut record) {
            Ok(false) => break,
            Ok(true) => {
                let line = record.position().map_or(0, |p| p.line());
                if record.len() != width {
                    ingest.report.total_rows += 1;
                    ingest.report.reject(
                        line,
                        format!("expected {width} fields, found {}", record.len()),
                        ingest.options.strict,
                    )?;
                    continue;
                }
                ingest.row(
                    line,
                    record[engager_col].trim(),
                    record[target_col].trim(),
                    count_col.map(|c| &record[c]),
                    timestamp_col.map(|c| &record[c]),
                )?;
            }
            Err(e) => {
                let line = e.position().map_or(0, |p| p.line());
                if matches!(e.kind(), csv::ErrorKind::Io(_)) {
                    return Err(Error::csv(source, e));
                }
                ingest.report.total_rows += 1;
                ingest
                    .report
                    .reject(line, e.to_string(), ingest.options.strict)?;
            }
        }
    }
    Ok(())
}

#[derive(Deserialize)]
struct JsonRow {
    engager: String,
    target: String,
    #[serde(default)]
    count: Option<serde_json::Value>,
    #[serde(default)]
    timestamp: Option<String>,
}

fn read_jsonl_rows<R: Read>(reader: R, ingest: &mut Ingest, source: &Path) -> Result<()> {
    let reader = BufReader::new(reader);
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx as u64 + 1;
        let text = line.map_err(|e| Error::io(source, e))?;
        if text.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<JsonRow>(&text) {
            Ok(row) => {
                let count = row.count.map(|c| match c {
                    serde_json::Value::String(s) => s,
                    other => other.to_string(),
                });
                ingest.row(
                    line_no,
                    row.engager.trim(),
                    row.target.trim(),
                    count.as_deref(),
                    row.timestamp.as_deref(),
                )?;
            }
            Err(e) => {
                ingest.report.total_rows += 1;
                ingest.report.reject(
                    line_no,
                    format!("invalid JSON row: {e}"),
                    ingest.options.strict,
                )?;
            }
        }
    }
    Ok(())
}

/// Per-account metadata used by the followback and overlay diagnostics.
/// Absent cells stay `None`; in particular a missing `suspended` is not
/// `false`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeAttributes {
    pub handle: String,
    pub display_label: Option<String>,
    pub followers: Option<u64>,
    pub following: Option<u64>,
    pub suspended: Option<bool>,
    pub cluster_hint: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttributeReport {
    pub total_rows: u64,
    pub accepted_rows: u64,
    pub rejected: Vec<RowError>,
    /// Rows that replaced an earlier row for the same handle.
    pub duplicate_handles: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AttributeTable {
    entries: BTreeMap<String, NodeAttributes>,
    pub report: AttributeReport,
}

impl AttributeTable {
    pub fn from_entries(entries: impl IntoIterator<Item = NodeAttributes>) -> Self {
        Self {
            entries: entries.into_iter().map(|a| (a.handle.clone(), a)).collect(),
            report: AttributeReport::default(),
        }
    }

    pub fn get(&self, handle: &str) -> Option<&NodeAttributes> {
        self.entries.get(handle)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &NodeAttributes> {
        self.entries.values()
    }
}

fn parse_bool(raw: &str) -> Option<bool> {
    match raw.to_ascii_lowercase().as_str() {
        "true" | "t" | "1" | "yes" | "y" => Some(true),
        "false" | "f" | "0" | "no" | "n" => Some(false),
        _ => None,
    }
}

/// Reads `node,label,followers,following,suspended[,cluster_hint]`.
/// Duplicate handles keep the last row.
pub fn read_attributes(path: impl AsRef<Path>) -> Result<AttributeTable> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_attributes_from(BufReader::new(file), path)
}

pub fn read_attributes_from<R: Read>(reader: R, source: &Path) -> Result<AttributeTable> {
    let mut rdr = csv::ReaderBuilder::new().flexible(true).from_reader(reader);
    let headers = rdr.headers().map_err(|e| Error::csv(source, e))?.clone();
    let Some(node_col) = column(&headers, "node") else {
        return Err(Error::Validation(format!(
            "{}: attribute header must contain `node`",
            source.display()
        )));
    };
    let label_col = column(&headers, "label");
    let followers_col = column(&headers, "followers");
    let following_col = column(&headers, "following");
    let suspended_col = column(&headers, "suspended");
    let hint_col = column(&headers, "cluster_hint");

    let mut table = AttributeTable::default();
    let mut record = csv::StringRecord::new();
    loop {
        let line = match rdr.read_record(&mut record) {
            Ok(false) => break,
            Ok(true) => record.position().map_or(0, |p| p.line()),
            Err(e) => {
                table.report.total_rows += 1;
                table.report.rejected.push(RowError {
                    line: e.position().map_or(0, |p| p.line()),
                    reason: e.to_string(),
                });
                continue;
            }
        };
        table.report.total_rows += 1;
        let cell = |col: Option<usize>| -> Option<&str> {
            col.and_then(|c| record.get(c))
                .map(str::trim)
                .filter(|s| !s.is_empty())
        };
        let Some(handle) = cell(Some(node_col)) else {
            table.report.rejected.push(RowError {
                line,
                reason: "empty node handle".into(),
            });
            continue;
        };
        let count = |col: Option<usize>, name: &str| -> Result<Option<u64>, String> {
            cell(col)
                .map(|raw| {
                    raw.parse::<u64>()
                        .map_err(|_| format!("{name} {raw:?} is not a non-negative integer"))
                })
                .transpose()
        };
        let parsed = (|| -> Result<NodeAttributes, String> {
            let suspended = cell(suspended_col)
                .map(|raw| {
                    parse_bool(raw).ok_or_else(|| format!("suspended {raw:?} is not a boolean"))
                })
                .transpose()?;
            Ok(NodeAttributes {
                handle: handle.to_owned(),
                display_label: cell(label_col).map(str::to_owned),
                followers: count(followers_col, "followers")?,
                following: count(following_col, "following")?,
                suspended,
                cluster_hint: cell(hint_col).map(str::to_owned),
            })
        })();
        match parsed {
            Ok(attrs) => {
                table.report.accepted_rows += 1;
                if table.entries.insert(attrs.handle.clone(), attrs).is_some() {
                    table.report.duplicate_handles += 1;
                }
            }
            Err(reason) => table.report.rejected.push(RowError { line, reason }),
        }
    }
    if table.report.duplicate_handles > 0 {
        log::warn!(
            "{}: {} duplicate handle rows, last row wins",
            source.display(),
            table.report.duplicate_handles
        );
    }
    Ok(table)
}

/// Reads a `label,handle` landmark file.
pub fn read_landmarks(path: impl AsRef<Path>) -> Result<LandmarkSet> {
    let path = path.as_ref();
    let mut rdr = csv::Reader::from_path(path).map_err(|e| Error::csv(path, e))?;
    let headers = rdr.headers().map_err(|e| Error::csv(path, e))?.clone();
    let (Some(label_col), Some(handle_col)) =
        (column(&headers, "label"), column(&headers, "handle"))
    else {
        return Err(Error::Validation(format!(
            "{}: landmark header must be `label,handle`",
            path.display()
        )));
    };
    let mut set = LandmarkSet::new();
    for record in rdr.records() {
        let record = record.map_err(|e| Error::csv(path, e))?;
        let line = record.position().map_or(0, |p| p.line());
        let label = record.get(label_col).map(str::trim).unwrap_or_default();
        let handle = record.get(handle_col).map(str::trim).unwrap_or_default();
        if label.is_empty() || handle.is_empty() {
            return Err(Error::Validation(format!(
                "{}: line {line}: empty label or handle",
                path.display()
            )));
        }
        set.insert(label, handle);
    }
    Ok(set)
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

fn finish(mut w: BufWriter<File>, path: &Path) -> Result<()> {
    w.flush().map_err(|e| Error::io(path, e))
}

/// Writes `source,target,weight` rows sorted by ordinal pair.
pub fn write_edge_csv(x: &CoengagementGraph, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut wtr = csv::Writer::from_writer(create(path)?);
    let csv_err = |e| Error::csv(path, e);
    wtr.write_record(["source", "target", "weight"])
        .map_err(csv_err)?;
    for e in x.edges() {
        wtr.write_record([x.handle(e.a), x.handle(e.b), &e.weight.to_string()])
            .map_err(csv_err)?;
    }
    wtr.flush().map_err(|e| Error::io(path, e))
}

/// Reads an edge CSV written by [`write_edge_csv`] back into a graph whose
/// interner holds exactly the endpoint handles.
pub fn read_edge_csv(
    path: impl AsRef<Path>,
    params: ProjectionParams,
) -> Result<CoengagementGraph> {
    let path = path.as_ref();
    let mut rdr = csv::Reader::from_path(path).map_err(|e| Error::csv(path, e))?;
    let headers = rdr.headers().map_err(|e| Error::csv(path, e))?.clone();
    let (Some(src), Some(dst), Some(wcol)) = (
        column(&headers, "source"),
        column(&headers, "target"),
        column(&headers, "weight"),
    ) else {
        return Err(Error::Validation(format!(
            "{}: edge header must be `source,target,weight`",
            path.display()
        )));
    };
    let mut raw: Vec<(String, String, u64)> = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| Error::csv(path, e))?;
        let line = record.position().map_or(0, |p| p.line());
        let field = |c: usize| record.get(c).map(str::trim).unwrap_or_default();
        let (a, b) = (field(src), field(dst));
        if a.is_empty() || b.is_empty() {
            return Err(Error::MalformedRow {
                line,
                reason: "empty endpoint".into(),
            });
        }
        if a == b {
            return Err(Error::MalformedRow {
                line,
                reason: format!("self-edge on {a}"),
            });
        }
        let w = field(wcol)
            .parse::<u64>()
            .map_err(|_| Error::MalformedRow {
                line,
                reason: format!("weight {:?} is not an integer", field(wcol)),
            })?;
        raw.push((a.to_owned(), b.to_owned(), w));
    }
    let interner = Arc::new(Interner::from_handles(
        raw.iter().flat_map(|(a, b, _)| [a.clone(), b.clone()]),
    )?);
    let edges = raw
        .iter()
        .map(|(a, b, w)| {
            let (a, b) = (
                interner.get(a).expect("interned"),
                interner.get(b).expect("interned"),
            );
            CoEdge {
                a: a.min(b),
                b: a.max(b),
                weight: *w,
            }
        })
        .collect();
    CoengagementGraph::new(params, interner, edges)
}

fn xml_escape(raw: &str) -> String {
    let mut out = String::with_capacity(raw.len());
    for ch in raw.chars() {
        match ch {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            // Characters outside the XML 1.0 Char production are dropped.
            c if (c as u32) < 0x20 && !matches!(c, '\t' | '\n' | '\r') => {}
            c => out.push(c),
        }
    }
    out
}

/// Cluster attribute value: the landmark label when the community has one,
/// otherwise `community-<index>`.
pub fn cluster_name(assignment: &ClusterAssignment, community: u32) -> String {
    assignment
        .label(community)
        .map(str::to_owned)
        .unwrap_or_else(|| format!("community-{community}"))
}

/// Renders a GEXF 1.2 document (undirected, static).
pub fn gexf_string(
    x: &CoengagementGraph,
    clusters: Option<&ClusterAssignment>,
    attrs: Option<&AttributeTable>,
) -> String {
    let mut out = String::new();
    let params = x.params();
    out.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    out.push_str(
        "<gexf xmlns=\"http://www.gexf.net/1.2draft\" \
         xmlns:xsi=\"http://www.w3.org/2001/XMLSchema-instance\" \
         xsi:schemaLocation=\"http://www.gexf.net/1.2draft http://www.gexf.net/1.2draft/gexf.xsd\" \
         version=\"1.2\">\n",
    );
    out.push_str("  <meta>\n    <creator>coengage</creator>\n");
    let _ = writeln!(
        out,
        "    <description>coengagement network n={} s={}</description>",
        params.n, params.s
    );
    out.push_str("  </meta>\n");
    out.push_str("  <graph mode=\"static\" defaultedgetype=\"undirected\">\n");
    out.push_str("    <attributes class=\"node\" mode=\"static\">\n");
    out.push_str(
        "      <attribute id=\"weighted_degree\" title=\"weighted_degree\" type=\"long\"/>\n",
    );
    if clusters.is_some() {
        out.push_str("      <attribute id=\"cluster\" title=\"cluster\" type=\"string\"/>\n");
        out.push_str("      <attribute id=\"community\" title=\"community\" type=\"integer\"/>\n");
    }
    if attrs.is_some() {
        out.push_str("      <attribute id=\"suspended\" title=\"suspended\" type=\"boolean\"/>\n");
    }
    out.push_str("    </attributes>\n");

    let _ = writeln!(out, "    <nodes count=\"{}\">", x.node_count());
    for (local, &node) in x.nodes().iter().enumerate() {
        let handle = x.handle(node);
        let node_attrs = attrs.and_then(|a| a.get(handle));
        let label = node_attrs
            .and_then(|a| a.display_label.as_deref())
            .unwrap_or(handle);
        let _ = writeln!(
            out,
            "      <node id=\"{}\" label=\"{}\">",
            xml_escape(handle),
            xml_escape(label)
        );
        out.push_str("        <attvalues>\n");
        let _ = writeln!(
            out,
            "          <attvalue for=\"weighted_degree\" value=\"{}\"/>",
            x.weighted_degree_local(local)
        );
        if let Some(c) = clusters.and_then(|a| a.community_of(node).map(|c| (a, c))) {
            let (assignment, community) = c;
            let _ = writeln!(
                out,
                "          <attvalue for=\"cluster\" value=\"{}\"/>",
                xml_escape(&cluster_name(assignment, community))
            );
            let _ = writeln!(
                out,
                "          <attvalue for=\"community\" value=\"{community}\"/>"
            );
        }
        if let Some(s) = node_attrs.and_then(|a| a.suspended) {
            let _ = writeln!(out, "          <attvalue for=\"suspended\" value=\"{s}\"/>");
        }
        out.push_str("        </attvalues>\n");
        out.push_str("      </node>\n");
    }
    out.push_str("    </nodes>\n");

    let _ = writeln!(out, "    <edges count=\"{}\">", x.edge_count());
    for (id, e) in x.edges().iter().enumerate() {
        let _ = writeln!(
            out,
            "      <edge id=\"{id}\" source=\"{}\" target=\"{}\" weight=\"{}\"/>",
            xml_escape(x.handle(e.a)),
            xml_escape(x.handle(e.b)),
            e.weight
        );
    }
    out.push_str("    </edges>\n  </graph>\n</gexf>\n");
    out
}

pub fn write_gexf(
    x: &CoengagementGraph,
    clusters: Option<&ClusterAssignment>,
    attrs: Option<&AttributeTable>,
    path: impl AsRef<Path>,
) -> Result<()> {
    let path = path.as_ref();
    if x.is_empty() {
        log::warn!("{}: writing GEXF for an empty graph", path.display());
    }
    let mut w = create(path)?;
    w.write_all(gexf_string(x, clusters, attrs).as_bytes())
        .map_err(|e| Error::io(path, e))?;
    finish(w, path)
}

/// Pretty-printed JSON with a trailing newline. Struct field order is
/// declaration order and maps are `BTreeMap`s, so output is deterministic.
pub fn write_json<T: Serialize>(value: &T, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| Error::json(path, e))?;
    w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    finish(w, path)
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: impl AsRef<Path>) -> Result<T> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_reader(BufReader::new(file)).map_err(|e| Error::json(path, e))
}

/// Writes a CSV table with an explicit header, so empty tables still carry
/// their header line.
pub fn write_table_csv<T: Serialize>(
    header: &[&str],
    rows: &[T],
    path: impl AsRef<Path>,
) -> Result<()> {
    let path = path.as_ref();
    let mut wtr = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(create(path)?);
    wtr.write_record(header).map_err(|e| Error::csv(path, e))?;
    for row in rows {
        wtr.serialize(row).map_err(|e| Error::csv(path, e))?;
    }
    wtr.flush().map_err(|e| Error::io(path, e))
}

/// Writes `node,community,cluster` for every node of `x`.
pub fn write_assignments_csv(
    x: &CoengagementGraph,
    clusters: &ClusterAssignment,
    path: impl AsRef<Path>,
) -> Result<()> {
    let rows: Vec<(&str, u32, String)> = x
        .nodes()
        .iter()
        .zip(clusters.membership())
        .map(|(&node, &c)| (x.handle(node), c, cluster_name(clusters, c)))
        .collect();
    write_table_csv(&["node", "community", "cluster"], &rows, path)
}
