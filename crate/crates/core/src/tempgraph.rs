//! Discrete-time temporal graphs: a dense sequence of undirected snapshots
//! over a fixed node set, plus edge-list I/O and static projections.

use std::collections::{BTreeMap, HashMap};
use std::io::{BufRead, Write};

use thiserror::Error;

/// Unordered node pair stored with the smaller index first.
pub type Edge = (u32, u32);

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("no events")]
    NoEvents,
    #[error("gap must be positive")]
    BadGap,
    #[error("edge ({0}, {1}) has an endpoint outside the node set")]
    NodeOutOfRange(u32, u32),
    #[error("hour slicing needs a gap that divides 3600 or is a multiple of it, got {0}")]
    HourMisaligned(u64),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[inline]
pub fn normalize(a: u32, b: u32) -> Edge {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

/// One layer: a simple undirected graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Snapshot {
    edges: Vec<Edge>,
    adjacency: Vec<Vec<u32>>,
}

impl Snapshot {
    /// Builds a simple graph on `node_count` nodes. Self-loops are dropped and
    /// duplicate pairs collapse.
    pub fn from_edges(node_count: usize, edges: impl IntoIterator<Item = Edge>) -> Result<Self, GraphError> {
        let mut list: Vec<Edge> = Vec::new();
        for (a, b) in edges {
            if a as usize >= node_count || b as usize >= node_count {
                return Err(GraphError::NodeOutOfRange(a, b));
            }
            if a != b {
                list.push(normalize(a, b));
            }
        }
        list.sort_unstable();
        list.dedup();
        let mut adjacency = vec![Vec::new(); node_count];
        for &(a, b) in &list {
            adjacency[a as usize].push(b);
            adjacency[b as usize].push(a);
        }
        for nbrs in &mut adjacency {
            nbrs.sort_unstable();
        }
        Ok(Snapshot { edges: list, adjacency })
    }

    pub fn empty(node_count: usize) -> Self {
        Snapshot { edges: Vec::new(), adjacency: vec![Vec::new(); node_count] }
    }

    /// Sorted, normalized edge list.
    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn neighbors(&self, node: u32) -> &[u32] {
        &self.adjacency[node as usize]
    }

    pub fn degree(&self, node: u32) -> usize {
        self.adjacency[node as usize].len()
    }

    pub fn degrees(&self) -> Vec<u32> {
        self.adjacency.iter().map(|n| n.len() as u32).collect()
    }

    pub fn has_edge(&self, a: u32, b: u32) -> bool {
        self.adjacency[a as usize].binary_search(&b).is_ok()
    }

    pub fn node_count(&self) -> usize {
        self.adjacency.len()
    }
}

/// Self-loop and duplicate counters collected while parsing.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ParseStats {
    pub events: usize,
    pub self_loops_skipped: usize,
    pub duplicates_collapsed: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TemporalGraph {
    node_count: usize,
    snapshots: Vec<Snapshot>,
    gap: u64,
    epoch: i64,
    labels: Vec<String>,
}

impl TemporalGraph {
    /// Graph with nodes labelled by their index.
    pub fn new(node_count: usize, snapshots: Vec<Snapshot>, gap: u64, epoch: i64) -> Result<Self, GraphError> {
        let labels = (0..node_count).map(|i| i.to_string()).collect();
        Self::with_labels(labels, snapshots, gap, epoch)
    }

    pub fn with_labels(labels: Vec<String>, snapshots: Vec<Snapshot>, gap: u64, epoch: i64) -> Result<Self, GraphError> {
        if gap == 0 {
            return Err(GraphError::BadGap);
        }
        let node_count = labels.len();
        for s in &snapshots {
            if s.node_count() != node_count {
                if let Some(&(a, b)) = s.edges.iter().find(|&&(_, b)| b as usize >= node_count) {
                    return Err(GraphError::NodeOutOfRange(a, b));
                }
            }
        }
        // Snapshots built for a smaller node set are widened.
        let snapshots = snapshots
            .into_iter()
            .map(|s| {
                if s.node_count() == node_count {
                    s
                } else {
                    Snapshot::from_edges(node_count, s.edges).expect("edges checked above")
                }
            })
            .collect();
        Ok(TemporalGraph { node_count, snapshots, gap, epoch, labels })
    }

    /// Convenience constructor from raw per-layer edge lists.
    pub fn from_layers(node_count: usize, layers: &[Vec<Edge>], gap: u64, epoch: i64) -> Result<Self, GraphError> {
        let snapshots = layers
            .iter()
            .map(|l| Snapshot::from_edges(node_count, l.iter().copied()))
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(node_count, snapshots, gap, epoch)
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn len(&self) -> usize {
        self.snapshots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.snapshots.is_empty()
    }

    pub fn snapshots(&self) -> &[Snapshot] {
        &self.snapshots
    }

    pub fn snapshot(&self, t: usize) -> &Snapshot {
        &self.snapshots[t]
    }

    pub fn gap(&self) -> u64 {
        self.gap
    }

    pub fn epoch(&self) -> i64 {
        self.epoch
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// Wall-clock time (seconds) of snapshot `t`.
    pub fn time_of(&self, t: usize) -> i64 {
        self.epoch + t as i64 * self.gap as i64
    }

    pub fn edge_counts(&self) -> Vec<usize> {
        self.snapshots.iter().map(Snapshot::edge_count).collect()
    }

    pub fn total_edges(&self) -> usize {
        self.snapshots.iter().map(Snapshot::edge_count).sum()
    }

    /// Sub-graph made of snapshots `range`, keeping wall-clock alignment.
    pub fn slice(&self, range: std::ops::Range<usize>) -> TemporalGraph {
        TemporalGraph {
            node_count: self.node_count,
            snapshots: self.snapshots[range.clone()].to_vec(),
            gap: self.gap,
            epoch: self.time_of(range.start),
            labels: self.labels.clone(),
        }
    }
}

/// Weighted static projection: number of snapshots containing each edge.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct AggregatedGraph {
    pub node_count: usize,
    pub weights: BTreeMap<Edge, u32>,
}

impl AggregatedGraph {
    pub fn from_snapshots<'a>(node_count: usize, snapshots: impl IntoIterator<Item = &'a Snapshot>) -> Self {
        let mut weights = BTreeMap::new();
        for s in snapshots {
            for &e in s.edges() {
                *weights.entry(e).or_insert(0) += 1;
            }
        }
        AggregatedGraph { node_count, weights }
    }

    pub fn edge_count(&self) -> usize {
        self.weights.len()
    }

    pub fn total_weight(&self) -> u64 {
        self.weights.values().map(|&w| w as u64).sum()
    }

    /// Weighted adjacency lists, neighbors sorted by index.
    pub fn adjacency(&self) -> Vec<Vec<(u32, u32)>> {
        let mut adj = vec![Vec::new(); self.node_count];
        for (&(a, b), &w) in &self.weights {
            adj[a as usize].push((b, w));
            adj[b as usize].push((a, w));
        }
        for l in &mut adj {
            l.sort_unstable();
        }
        adj
    }
}

pub fn aggregate(g: &TemporalGraph) -> AggregatedGraph {
    AggregatedGraph::from_snapshots(g.node_count(), g.snapshots())
}

/// Number of snapshots per hour slice for a given gap.
pub fn snapshots_per_hour(gap: u64) -> Result<usize, GraphError> {
    if gap == 0 {
        return Err(GraphError::BadGap);
    }
    if 3600 % gap == 0 {
        Ok((3600 / gap) as usize)
    } else if gap.is_multiple_of(3600) {
        Ok(1)
    } else {
        Err(GraphError::HourMisaligned(gap))
    }
}

/// Aggregates consecutive runs of snapshots covering one hour each. A partial
/// trailing hour becomes the last slice.
pub fn hour_slices(g: &TemporalGraph) -> Result<Vec<AggregatedGraph>, GraphError> {
    let per = snapshots_per_hour(g.gap())?;
    Ok(g.snapshots()
        .chunks(per)
        .map(|c| AggregatedGraph::from_snapshots(g.node_count(), c))
        .collect())
}

#[derive(Default)]
struct Header {
    snapshots: Option<usize>,
    gap: Option<u64>,
    epoch: Option<i64>,
}

fn parse_header(line: &str, header: &mut Header, labels: &mut Vec<String>, index: &mut HashMap<String, u32>, lineno: usize) -> Result<(), GraphError> {
    let body = line.trim_start_matches('#').trim();
    if let Some(rest) = body.strip_prefix("node") {
        let mut parts = rest.split('\t').filter(|s| !s.is_empty());
        let (Some(idx), Some(label)) = (parts.next(), parts.next()) else {
            return Err(GraphError::Parse { line: lineno, msg: "bad node header".into() });
        };
        let idx: usize = idx.trim().parse().map_err(|_| GraphError::Parse { line: lineno, msg: format!("bad node index {idx:?}") })?;
        if idx != labels.len() || index.contains_key(label) {
            return Err(GraphError::Parse { line: lineno, msg: "node headers must list distinct labels in index order".into() });
        }
        index.insert(label.to_string(), idx as u32);
        labels.push(label.to_string());
        return Ok(());
    }
    for token in body.split(|c: char| c == '#' || c.is_whitespace()).filter(|s| !s.is_empty()) {
        let Some((key, value)) = token.split_once('=') else { continue };
        let bad = || GraphError::Parse { line: lineno, msg: format!("bad header value {token:?}") };
        match key {
            "snapshots" => header.snapshots = Some(value.parse().map_err(|_| bad())?),
            "gap" => header.gap = Some(value.parse().map_err(|_| bad())?),
            "epoch" => header.epoch = Some(value.parse().map_err(|_| bad())?),
            _ => {}
        }
    }
    Ok(())
}

/// Reads `t<TAB>i<TAB>j` events into snapshots of width `gap` seconds.
///
/// Labels are re-indexed densely in order of first appearance. Lines starting
/// with `#` are comments; the headers written by [`write_edge_list`] are
/// honoured so that export/import round-trips exactly. Any whitespace is
/// accepted as a field separator and trailing columns are ignored.
pub fn parse_edge_list<R: BufRead>(reader: R, gap: u64) -> Result<(TemporalGraph, ParseStats), GraphError> {
    if gap == 0 {
        return Err(GraphError::BadGap);
    }
    let mut header = Header::default();
    let mut labels: Vec<String> = Vec::new();
    let mut index: HashMap<String, u32> = HashMap::new();
    let mut events: Vec<(i64, u32, u32)> = Vec::new();
    let mut stats = ParseStats::default();

    for (i, line) in reader.lines().enumerate() {
        let lineno = i + 1;
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        if trimmed.starts_with('#') {
            parse_header(trimmed, &mut header, &mut labels, &mut index, lineno)?;
            continue;
        }
        let mut fields = trimmed.split_whitespace();
        let (Some(t), Some(a), Some(b)) = (fields.next(), fields.next(), fields.next()) else {
            return Err(GraphError::Parse { line: lineno, msg: "expected three fields".into() });
        };
        let t: i64 = t.parse().map_err(|_| GraphError::Parse { line: lineno, msg: format!("bad timestamp {t:?}") })?;
        if a == b {
            stats.self_loops_skipped += 1;
            continue;
        }
        let mut intern = |label: &str| -> u32 {
            if let Some(&id) = index.get(label) {
                id
            } else {
                let id = labels.len() as u32;
                labels.push(label.to_string());
                index.insert(label.to_string(), id);
                id
            }
        };
        let ia = intern(a);
        let ib = intern(b);
        events.push((t, ia, ib));
        stats.events += 1;
    }
    if stats.self_loops_skipped > 0 {
        log::warn!("skipped {} self-loop events", stats.self_loops_skipped);
    }

    let header_applies = header.gap.is_none_or(|g| g == gap);
    let t_min = events.iter().map(|e| e.0).min();
    let epoch = match (header.epoch.filter(|_| header_applies), t_min) {
        (Some(e), _) => e,
        (None, Some(t)) => t,
        (None, None) => return Err(GraphError::NoEvents),
    };
    let declared = header.snapshots.filter(|_| header_applies && header.epoch.is_some());
    if events.is_empty() && declared.is_none() {
        return Err(GraphError::NoEvents);
    }

    let mut bins: Vec<Vec<Edge>> = Vec::new();
    for &(t, a, b) in &events {
        if t < epoch {
            return Err(GraphError::Parse { line: 0, msg: format!("timestamp {t} precedes epoch {epoch}") });
        }
        let bin = ((t - epoch) as u64 / gap) as usize;
        if bins.len() <= bin {
            bins.resize_with(bin + 1, Vec::new);
        }
        bins[bin].push(normalize(a, b));
    }
    if let Some(m) = declared {
        if bins.len() > m {
            return Err(GraphError::Parse { line: 0, msg: format!("events beyond declared {m} snapshots") });
        }
        bins.resize_with(m, Vec::new);
    }
    let n = labels.len();
    let mut snapshots = Vec::with_capacity(bins.len());
    for bin in bins {
        let raw = bin.len();
        let s = Snapshot::from_edges(n, bin)?;
        stats.duplicates_collapsed += raw - s.edge_count();
        snapshots.push(s);
    }
    let g = TemporalGraph::with_labels(labels, snapshots, gap, epoch)?;
    Ok((g, stats))
}

/// Writes `g` as an event list with a `#snapshots=m #gap=Δt #epoch=e` header
/// and `#node<TAB>index<TAB>label` lines, one event per edge per snapshot.
pub fn write_edge_list<W: Write>(g: &TemporalGraph, mut sink: W) -> Result<(), GraphError> {
    writeln!(sink, "#snapshots={} #gap={} #epoch={}", g.len(), g.gap(), g.epoch())?;
    for (i, label) in g.labels().iter().enumerate() {
        writeln!(sink, "#node\t{i}\t{label}")?;
    }
    for (t, s) in g.snapshots().iter().enumerate() {
        let time = g.time_of(t);
        for &(a, b) in s.edges() {
            writeln!(sink, "{time}\t{}\t{}", g.labels()[a as usize], g.labels()[b as usize])?;
        }
    }
    sink.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str, gap: u64) -> TemporalGraph {
        parse_edge_list(text.as_bytes(), gap).unwrap().0
    }

    #[test]
    fn bins_events_by_gap() {
        let g = parse("0\ta\tb\n100\ta\tb\n300\tb\tc\n", 300);
        assert_eq!(g.node_count(), 3);
        assert_eq!(g.len(), 2);
        assert_eq!(g.snapshot(0).edges(), &[(0, 1)]);
        assert_eq!(g.snapshot(1).edges(), &[(1, 2)]);
        assert_eq!(g.labels(), &["a", "b", "c"]);
    }

    #[test]
    fn empty_stream_is_an_error() {
        let err = parse_edge_list("".as_bytes(), 300).unwrap_err();
        assert_eq!(err.to_string(), "no events");
        assert!(matches!(parse_edge_list("# only comments\n".as_bytes(), 300), Err(GraphError::NoEvents)));
    }

    #[test]
    fn malformed_line_reports_line_number() {
        let err = parse_edge_list("0\ta\tb\nxyz\ta\tb\n".as_bytes(), 300).unwrap_err();
        match err {
            GraphError::Parse { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(parse_edge_list("0\ta\n".as_bytes(), 300), Err(GraphError::Parse { line: 1, .. })));
    }

    #[test]
    fn self_loops_are_counted_and_skipped() {
        let (g, stats) = parse_edge_list("0\ta\ta\n0\ta\tb\n10\tb\ta\n".as_bytes(), 300).unwrap();
        assert_eq!(stats.self_loops_skipped, 1);
        assert_eq!(stats.duplicates_collapsed, 1);
        assert_eq!(g.total_edges(), 1);
    }

    #[test]
    fn empty_bins_are_materialized() {
        let g = parse("0\ta\tb\n1000\ta\tb\n", 300);
        assert_eq!(g.len(), 4);
        assert_eq!(g.edge_counts(), vec![1, 0, 0, 1]);
    }

    #[test]
    fn aggregate_counts_snapshots() {
        let g = TemporalGraph::from_layers(3, &[vec![(0, 1)], vec![(0, 1), (1, 2)], vec![(1, 2)]], 300, 0).unwrap();
        let agg = aggregate(&g);
        assert_eq!(agg.weights.into_iter().collect::<Vec<_>>(), vec![((0, 1), 2), ((1, 2), 2)]);

        let always = TemporalGraph::from_layers(2, &vec![vec![(0, 1)]; 5], 300, 0).unwrap();
        assert_eq!(aggregate(&always).weights[&(0, 1)], 5);

        let empty = TemporalGraph::from_layers(4, &vec![vec![]; 3], 300, 0).unwrap();
        assert!(aggregate(&empty).weights.is_empty());
    }

    #[test]
    fn hour_slicing() {
        let g = TemporalGraph::from_layers(2, &vec![vec![(0, 1)]; 24], 300, 0).unwrap();
        let slices = hour_slices(&g).unwrap();
        assert_eq!(slices.len(), 2);
        assert!(slices.iter().all(|s| s.weights[&(0, 1)] == 12));

        let g = TemporalGraph::from_layers(2, &vec![vec![(0, 1)]; 13], 300, 0).unwrap();
        let sizes: Vec<u32> = hour_slices(&g).unwrap().iter().map(|s| s.weights[&(0, 1)]).collect();
        assert_eq!(sizes, vec![12, 1]);

        let g = TemporalGraph::from_layers(2, &vec![vec![(0, 1)]; 5], 3600, 0).unwrap();
        assert_eq!(hour_slices(&g).unwrap().len(), 5);

        let g = TemporalGraph::from_layers(2, &vec![vec![]; 5], 7200, 0).unwrap();
        assert_eq!(hour_slices(&g).unwrap().len(), 5);

        let g = TemporalGraph::from_layers(2, &vec![vec![]; 5], 700, 0).unwrap();
        assert!(matches!(hour_slices(&g), Err(GraphError::HourMisaligned(700))));
    }

    #[test]
    fn write_format() {
        let g = TemporalGraph::from_layers(2, &[vec![(0, 1)], vec![]], 300, 0).unwrap();
        let mut out = Vec::new();
        write_edge_list(&g, &mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert!(text.starts_with("#snapshots=2 #gap=300 #epoch=0\n"));
        assert!(text.lines().any(|l| l == "0\t0\t1"));
        assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 1);
        let back = parse(&text, 300);
        assert_eq!(back, g);
    }

    #[test]
    fn round_trip_keeps_isolated_nodes_and_label_order() {
        let g = TemporalGraph::from_layers(5, &[vec![], vec![(3, 1)], vec![(0, 4), (1, 3)], vec![]], 60, 1_000).unwrap();
        let mut out = Vec::new();
        write_edge_list(&g, &mut out).unwrap();
        assert_eq!(parse(std::str::from_utf8(&out).unwrap(), 60), g);
    }
}
