//! Topological fidelity: seventeen metric distributions and four distances
//! between an original network and a surrogate.

pub mod distance;
pub mod louvain;
pub mod static_graph;

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use thiserror::Error;

use crate::par;
use crate::tempgraph::{aggregate, hour_slices, AggregatedGraph, Edge, GraphError, Snapshot, TemporalGraph};
pub use distance::{emd, js_divergence, kl_divergence, ks_distance, DistanceError};
use static_graph::StaticGraph;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Distance(#[from] DistanceError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Conventions recorded alongside every report.
pub const CONVENTIONS: &[&str] = &[
    "density denominator uses all N nodes",
    "connected components exclude isolated nodes",
    "hour assortativity skipped when degree variance is zero",
    "weighted betweenness uses edge length 1/weight",
    "centralities computed over nodes with at least one edge",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Metric {
    Density,
    InteractingIndividuals,
    NewConversations,
    ConnectedComponents,
    ContactDuration,
    HourSMetric,
    HourClustering,
    HourAssortativity,
    HourAvgShortestPath,
    HourModularity,
    HourBetweenness,
    HourWeightedBetweenness,
    HourCloseness,
    Betweenness,
    WeightedBetweenness,
    Closeness,
    EdgeStrength,
}

/// What one sample of a metric refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SampleUnit {
    Snapshot,
    Pair,
    Hour,
    Node,
    Edge,
}

impl Metric {
    pub const ALL: [Metric; 17] = [
        Metric::Density,
        Metric::InteractingIndividuals,
        Metric::NewConversations,
        Metric::ConnectedComponents,
        Metric::ContactDuration,
        Metric::HourSMetric,
        Metric::HourClustering,
        Metric::HourAssortativity,
        Metric::HourAvgShortestPath,
        Metric::HourModularity,
        Metric::HourBetweenness,
        Metric::HourWeightedBetweenness,
        Metric::HourCloseness,
        Metric::Betweenness,
        Metric::WeightedBetweenness,
        Metric::Closeness,
        Metric::EdgeStrength,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Metric::Density => "density",
            Metric::InteractingIndividuals => "interacting_individuals",
            Metric::NewConversations => "new_conversations",
            Metric::ConnectedComponents => "connected_components",
            Metric::ContactDuration => "contact_duration",
            Metric::HourSMetric => "hour_s_metric",
            Metric::HourClustering => "hour_clustering",
            Metric::HourAssortativity => "hour_assortativity",
            Metric::HourAvgShortestPath => "hour_avg_shortest_path",
            Metric::HourModularity => "hour_modularity",
            Metric::HourBetweenness => "hour_betweenness",
            Metric::HourWeightedBetweenness => "hour_weighted_betweenness",
            Metric::HourCloseness => "hour_closeness",
            Metric::Betweenness => "betweenness",
            Metric::WeightedBetweenness => "weighted_betweenness",
            Metric::Closeness => "closeness",
            Metric::EdgeStrength => "edge_strength",
        }
    }

    pub fn unit(self) -> SampleUnit {
        use Metric::*;
        match self {
            Density | InteractingIndividuals | NewConversations | ConnectedComponents => SampleUnit::Snapshot,
            ContactDuration => SampleUnit::Pair,
            HourSMetric | HourClustering | HourAssortativity | HourAvgShortestPath | HourModularity | HourBetweenness
            | HourWeightedBetweenness | HourCloseness => SampleUnit::Hour,
            Betweenness | WeightedBetweenness | Closeness => SampleUnit::Node,
            EdgeStrength => SampleUnit::Edge,
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl fmt::Display for SampleUnit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SampleUnit::Snapshot => "per-snapshot",
            SampleUnit::Pair => "per-pair",
            SampleUnit::Hour => "per-hour",
            SampleUnit::Node => "per-node",
            SampleUnit::Edge => "per-edge",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum DistanceKind {
    Ks,
    Js,
    Kl,
    Emd,
}

impl DistanceKind {
    pub const ALL: [DistanceKind; 4] = [DistanceKind::Ks, DistanceKind::Js, DistanceKind::Kl, DistanceKind::Emd];

    pub fn name(self) -> &'static str {
        match self {
            DistanceKind::Ks => "ks",
            DistanceKind::Js => "js",
            DistanceKind::Kl => "kl",
            DistanceKind::Emd => "emd",
        }
    }

    pub fn apply(self, a: &[f64], b: &[f64]) -> Result<f64, DistanceError> {
        match self {
            DistanceKind::Ks => ks_distance(a, b),
            DistanceKind::Js => js_divergence(a, b),
            DistanceKind::Kl => kl_divergence(a, b),
            DistanceKind::Emd => emd(a, b),
        }
    }
}

impl fmt::Display for DistanceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DistanceKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        DistanceKind::ALL.into_iter().find(|k| k.name() == s).ok_or_else(|| format!("unknown distance {s:?}"))
    }
}

/// Per-snapshot distributions.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SnapshotMetrics {
    pub density: Vec<f64>,
    pub interacting_individuals: Vec<f64>,
    /// Defined from the second snapshot on.
    pub new_conversations: Vec<f64>,
    pub connected_components: Vec<f64>,
}

fn active_components(s: &Snapshot) -> usize {
    let n = s.node_count();
    let mut seen = vec![false; n];
    let mut count = 0;
    let mut stack = Vec::new();
    for v in 0..n as u32 {
        if seen[v as usize] || s.degree(v) == 0 {
            continue;
        }
        count += 1;
        seen[v as usize] = true;
        stack.push(v);
        while let Some(u) = stack.pop() {
            for &w in s.neighbors(u) {
                if !seen[w as usize] {
                    seen[w as usize] = true;
                    stack.push(w);
                }
            }
        }
    }
    count
}

pub fn snapshot_metrics(g: &TemporalGraph) -> SnapshotMetrics {
    let n = g.node_count() as f64;
    let possible = n * (n - 1.0) / 2.0;
    let mut out = SnapshotMetrics::default();
    for (t, s) in g.snapshots().iter().enumerate() {
        let e = s.edge_count() as f64;
        out.density.push(if possible > 0.0 { e / possible } else { 0.0 });
        out.interacting_individuals.push((0..g.node_count() as u32).filter(|&v| s.degree(v) > 0).count() as f64);
        out.connected_components.push(active_components(s) as f64);
        if t > 0 {
            let prev = g.snapshot(t - 1);
            let fresh = s.edges().iter().filter(|&&(a, b)| !prev.has_edge(a, b)).count();
            out.new_conversations.push(fresh as f64);
        }
    }
    out
}

/// Mean length of the maximal runs of consecutive presence, per pair that is
/// ever in contact; ordered by pair.
pub fn contact_durations(g: &TemporalGraph) -> Vec<f64> {
    let mut running: HashMap<Edge, u64> = HashMap::new();
    let mut stats: BTreeMap<Edge, (u64, u64)> = BTreeMap::new();
    let close = |e: Edge, len: u64, stats: &mut BTreeMap<Edge, (u64, u64)>| {
        let entry = stats.entry(e).or_insert((0, 0));
        entry.0 += len;
        entry.1 += 1;
    };
    for s in g.snapshots() {
        let mut next: HashMap<Edge, u64> = HashMap::with_capacity(s.edge_count());
        for &e in s.edges() {
            next.insert(e, running.get(&e).copied().unwrap_or(0) + 1);
        }
        for (e, len) in running.drain() {
            if !next.contains_key(&e) {
                close(e, len, &mut stats);
            }
        }
        running = next;
    }
    for (e, len) in running.drain() {
        close(e, len, &mut stats);
    }
    stats.values().map(|&(total, runs)| total as f64 / runs as f64).collect()
}

/// Measures of one hour slice.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HourValues {
    pub s_metric: f64,
    pub clustering: f64,
    pub assortativity: Option<f64>,
    pub avg_shortest_path: f64,
    pub modularity: f64,
    pub betweenness: f64,
    pub weighted_betweenness: f64,
    pub closeness: f64,
}

/// Measures of one aggregated graph; an edgeless slice yields zeros and no
/// assortativity.
pub fn hour_values(agg: &AggregatedGraph) -> HourValues {
    let g = StaticGraph::from_aggregate(agg);
    let partition = louvain::louvain(&g);
    HourValues {
        s_metric: static_graph::s_metric(&g),
        clustering: static_graph::global_clustering(&g),
        assortativity: static_graph::assortativity(&g),
        avg_shortest_path: static_graph::avg_shortest_path(&g),
        modularity: louvain::modularity(&g, &partition),
        betweenness: static_graph::mean(&static_graph::betweenness(&g, false)),
        weighted_betweenness: static_graph::mean(&static_graph::betweenness(&g, true)),
        closeness: static_graph::mean(&static_graph::closeness(&g)),
    }
}

pub fn hour_metrics(g: &TemporalGraph) -> Result<Vec<HourValues>, GraphError> {
    let slices = hour_slices(g)?;
    Ok(par::map_slice(&slices, hour_values))
}

/// Per-node and per-edge distributions on the full projection.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct AggregatedMetrics {
    pub betweenness: Vec<f64>,
    pub weighted_betweenness: Vec<f64>,
    pub closeness: Vec<f64>,
    pub edge_strength: Vec<f64>,
}

pub fn aggregated_metrics(g: &TemporalGraph) -> AggregatedMetrics {
    let agg = aggregate(g);
    let sg = StaticGraph::from_aggregate(&agg);
    AggregatedMetrics {
        betweenness: static_graph::betweenness(&sg, false),
        weighted_betweenness: static_graph::betweenness(&sg, true),
        closeness: static_graph::closeness(&sg),
        edge_strength: agg.weights.values().map(|&w| w as f64).collect(),
    }
}

/// All metric samples of one network.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MetricReport {
    pub samples: BTreeMap<Metric, Vec<f64>>,
}

impl MetricReport {
    pub fn compute(g: &TemporalGraph) -> Result<Self, GraphError> {
        let snap = snapshot_metrics(g);
        let hours = hour_metrics(g)?;
        let agg = aggregated_metrics(g);
        let mut samples = BTreeMap::new();
        samples.insert(Metric::Density, snap.density);
        samples.insert(Metric::InteractingIndividuals, snap.interacting_individuals);
        samples.insert(Metric::NewConversations, snap.new_conversations);
        samples.insert(Metric::ConnectedComponents, snap.connected_components);
        samples.insert(Metric::ContactDuration, contact_durations(g));
        let col = |f: fn(&HourValues) -> f64| hours.iter().map(f).collect::<Vec<f64>>();
        samples.insert(Metric::HourSMetric, col(|h| h.s_metric));
        samples.insert(Metric::HourClustering, col(|h| h.clustering));
        samples.insert(Metric::HourAssortativity, hours.iter().filter_map(|h| h.assortativity).collect());
        samples.insert(Metric::HourAvgShortestPath, col(|h| h.avg_shortest_path));
        samples.insert(Metric::HourModularity, col(|h| h.modularity));
        samples.insert(Metric::HourBetweenness, col(|h| h.betweenness));
        samples.insert(Metric::HourWeightedBetweenness, col(|h| h.weighted_betweenness));
        samples.insert(Metric::HourCloseness, col(|h| h.closeness));
        samples.insert(Metric::Betweenness, agg.betweenness);
        samples.insert(Metric::WeightedBetweenness, agg.weighted_betweenness);
        samples.insert(Metric::Closeness, agg.closeness);
        samples.insert(Metric::EdgeStrength, agg.edge_strength);
        Ok(MetricReport { samples })
    }

    pub fn get(&self, metric: Metric) -> &[f64] {
        self.samples.get(&metric).map_or(&[], Vec::as_slice)
    }

    /// Raw samples as `metric,unit,index,value` rows.
    pub fn write_samples_csv<W: Write>(&self, mut sink: W) -> std::io::Result<()> {
        for c in CONVENTIONS {
            writeln!(sink, "# {c}")?;
        }
        writeln!(sink, "metric,unit,index,value")?;
        for (metric, values) in &self.samples {
            for (i, v) in values.iter().enumerate() {
                writeln!(sink, "{metric},{},{i},{v}", metric.unit())?;
            }
        }
        sink.flush()
    }
}

/// Distance per (metric, distance kind). A metric with no samples on both
/// sides scores 0; with samples on one side only it is undefined (NaN).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DistanceReport {
    pub values: BTreeMap<(Metric, DistanceKind), f64>,
}

impl DistanceReport {
    pub fn get(&self, metric: Metric, kind: DistanceKind) -> f64 {
        self.values.get(&(metric, kind)).copied().unwrap_or(f64::NAN)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Long form: `metric,unit,distance,value`.
    pub fn write_csv<W: Write>(&self, mut sink: W) -> std::io::Result<()> {
        writeln!(sink, "metric,unit,distance,value")?;
        for ((metric, kind), v) in &self.values {
            writeln!(sink, "{metric},{},{kind},{v}", metric.unit())?;
        }
        sink.flush()
    }

    /// Wide form: one row per metric, one column per distance.
    pub fn write_summary_csv<W: Write>(&self, mut sink: W) -> std::io::Result<()> {
        let kinds: Vec<DistanceKind> = {
            let mut k: Vec<DistanceKind> = self.values.keys().map(|(_, k)| *k).collect();
            k.sort();
            k.dedup();
            k
        };
        let header: Vec<&str> = kinds.iter().map(|k| k.name()).collect();
        writeln!(sink, "metric,{}", header.join(","))?;
        for metric in Metric::ALL {
            if !kinds.iter().any(|&k| self.values.contains_key(&(metric, k))) {
                continue;
            }
            let row: Vec<String> = kinds.iter().map(|&k| format!("{}", self.get(metric, k))).collect();
            writeln!(sink, "{metric},{}", row.join(","))?;
        }
        sink.flush()
    }
}

pub fn compare_reports(a: &MetricReport, b: &MetricReport, kinds: &[DistanceKind]) -> DistanceReport {
    let mut values = BTreeMap::new();
    for metric in Metric::ALL {
        let (sa, sb) = (a.get(metric), b.get(metric));
        for &kind in kinds {
            let v = match (sa.is_empty(), sb.is_empty()) {
                (true, true) => 0.0,
                (false, false) => kind.apply(sa, sb).expect("both samples non-empty"),
                _ => f64::NAN,
            };
            values.insert((metric, kind), v);
        }
    }
    DistanceReport { values }
}

/// Every metric on both networks, every distance on every metric pair.
pub fn compare(original: &TemporalGraph, generated: &TemporalGraph) -> Result<DistanceReport, MetricsError> {
    let a = MetricReport::compute(original)?;
    let b = MetricReport::compute(generated)?;
    Ok(compare_reports(&a, &b, &DistanceKind::ALL))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn snapshot_fixture() {
        let g = TemporalGraph::from_layers(10, &[vec![(0, 1), (1, 2), (3, 4)], vec![]], 300, 0).unwrap();
        let m = snapshot_metrics(&g);
        assert!((m.density[0] - 3.0 / 45.0).abs() < 1e-15);
        assert_eq!(m.interacting_individuals, vec![5.0, 0.0]);
        assert_eq!(m.connected_components, vec![2.0, 0.0]);
        assert_eq!(m.density[1], 0.0);
        assert_eq!(m.new_conversations, vec![0.0]);
    }

    #[test]
    fn new_conversations_count_fresh_edges() {
        let g = TemporalGraph::from_layers(4, &[vec![(0, 1)], vec![(0, 1)], vec![(0, 1), (2, 3)]], 300, 0).unwrap();
        assert_eq!(snapshot_metrics(&g).new_conversations, vec![0.0, 1.0]);
    }

    #[test]
    fn durations() {
        let g = TemporalGraph::from_layers(4, &[vec![(0, 1), (2, 3)], vec![(0, 1), (2, 3)], vec![(0, 1)], vec![(2, 3)]], 300, 0).unwrap();
        assert_eq!(contact_durations(&g), vec![3.0, 1.5]);
    }

    #[test]
    fn empty_hour_is_degenerate_not_missing() {
        let h = hour_values(&AggregatedGraph { node_count: 5, weights: Default::default() });
        assert_eq!(h.s_metric, 0.0);
        assert_eq!(h.assortativity, None);
        assert_eq!(h.closeness, 0.0);
    }

    #[test]
    fn self_comparison_is_zero_with_full_shape() {
        let layers: Vec<Vec<Edge>> = (0..30).map(|t| vec![(0, 1), (1, (2 + t % 3) as u32), (3, 4)]).collect();
        let g = TemporalGraph::from_layers(6, &layers, 300, 0).unwrap();
        let report = compare(&g, &g).unwrap();
        assert_eq!(report.len(), 17 * 4);
        assert!(report.values.values().all(|&v| v == 0.0), "{report:?}");
    }

    #[test]
    fn csv_shapes() {
        let g = TemporalGraph::from_layers(3, &[vec![(0, 1)], vec![(1, 2)]], 300, 0).unwrap();
        let report = compare(&g, &g).unwrap();
        let mut long = Vec::new();
        report.write_csv(&mut long).unwrap();
        assert_eq!(String::from_utf8(long).unwrap().lines().count(), 1 + 68);
        let mut wide = Vec::new();
        report.write_summary_csv(&mut wide).unwrap();
        let wide = String::from_utf8(wide).unwrap();
        assert!(wide.starts_with("metric,ks,js,kl,emd\n"));
        assert_eq!(wide.lines().count(), 18);
    }
}
