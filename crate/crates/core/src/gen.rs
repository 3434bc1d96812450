//! Layer-by-layer surrogate generation.
//!
//! Each new layer is grown from the previous `k` layers: every node samples
//! an extension of its current neighborhood, the extension is turned into
//! link requests (to existing neighbors) and stubs (to unknown partners), and
//! the requests are then reconciled into a simple undirected graph.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::io::Write;

use rand::seq::SliceRandom;
use rand::Rng;
use thiserror::Error;

use crate::bucket::{BucketKey, Bucketing};
use crate::etn::{Etn, EtnSignature};
use crate::model::{LocalModel, SampleSource};
use crate::par;
use crate::rng::{phase, substream};
use crate::tempgraph::{normalize, Edge, GraphError, Snapshot, TemporalGraph};

#[derive(Debug, Error)]
pub enum GenError {
    #[error("need at least 2 nodes, got {0}")]
    TooFewNodes(usize),
    #[error("need at least k + 1 = {need} snapshots, got {got}")]
    TooFewSnapshots { need: usize, got: usize },
    #[error("alpha must lie in [0, 1], got {0}")]
    BadAlpha(f64),
    #[error("k must be at least 1")]
    ZeroDepth,
    #[error("model depth {model} is smaller than requested k = {requested}")]
    ModelTooShallow { model: usize, requested: usize },
    #[error(transparent)]
    Graph(#[from] GraphError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenConfig {
    pub n_nodes: usize,
    pub n_snapshots: usize,
    pub k: usize,
    /// Probability of confirming a one-directional request.
    pub alpha: f64,
    pub seed: u64,
    /// Wall-clock time of the first generated layer; the model's training
    /// epoch when unset.
    pub epoch: Option<i64>,
    /// Degrees for the seed layer; the model's first training layer when
    /// unset. Resampled with replacement when the length differs from
    /// `n_nodes`.
    pub seed_degrees: Option<Vec<u32>>,
}

impl GenConfig {
    pub fn new(n_nodes: usize, n_snapshots: usize) -> Self {
        GenConfig { n_nodes, n_snapshots, k: 2, alpha: 0.5, seed: 0, epoch: None, seed_degrees: None }
    }

    pub fn validate(&self) -> Result<(), GenError> {
        if self.k == 0 {
            return Err(GenError::ZeroDepth);
        }
        if self.n_nodes < 2 {
            return Err(GenError::TooFewNodes(self.n_nodes));
        }
        if self.n_snapshots < self.k + 1 {
            return Err(GenError::TooFewSnapshots { need: self.k + 1, got: self.n_snapshots });
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(GenError::BadAlpha(self.alpha));
        }
        Ok(())
    }
}

/// Validation probability that keeps the density of a seed graph with
/// `n_hat` nodes when growing it to `n` nodes.
pub fn expansion_alpha(n_hat: usize, n: usize) -> f64 {
    let ratio = (n_hat * (n_hat - 1)) as f64 / (n * (n - 1)) as f64;
    (1.0 - 0.5 * ratio).clamp(0.0, 1.0)
}

/// Directed requests plus anonymous stubs, before reconciliation.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ProvisionalLayer {
    pub requests: BTreeSet<(u32, u32)>,
    pub stubs: Vec<u32>,
}

/// What happened while building one layer.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct LayerDiagnostics {
    pub t: usize,
    pub reciprocal: usize,
    pub one_directional_confirmed: usize,
    pub one_directional_rejected: usize,
    pub stub_edges: usize,
    pub stubs_dropped: usize,
    pub unmatched_strings: usize,
    pub from_bucket: usize,
    pub from_global: usize,
    pub from_empty_bucket: usize,
    pub from_empty_global: usize,
    pub isolated: usize,
}

impl LayerDiagnostics {
    fn record(&mut self, source: SampleSource) {
        match source {
            SampleSource::Bucket => self.from_bucket += 1,
            SampleSource::Global => self.from_global += 1,
            SampleSource::EmptyPrefixBucket => self.from_empty_bucket += 1,
            SampleSource::EmptyPrefixGlobal => self.from_empty_global += 1,
            SampleSource::Isolated => self.isolated += 1,
        }
    }
}

pub const DIAGNOSTICS_HEADER: &str = "t,reciprocal,one_directional_confirmed,one_directional_rejected,stub_edges,stubs_dropped,unmatched_strings,from_bucket,from_global,from_empty_prefix_bucket,from_empty_prefix_global,isolated";

pub fn write_diagnostics_csv<W: Write>(rows: &[LayerDiagnostics], mut sink: W) -> std::io::Result<()> {
    writeln!(sink, "{DIAGNOSTICS_HEADER}")?;
    for d in rows {
        writeln!(
            sink,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            d.t,
            d.reciprocal,
            d.one_directional_confirmed,
            d.one_directional_rejected,
            d.stub_edges,
            d.stubs_dropped,
            d.unmatched_strings,
            d.from_bucket,
            d.from_global,
            d.from_empty_bucket,
            d.from_empty_global,
            d.isolated
        )?;
    }
    sink.flush()
}

/// Randomly pairs stubs. A pair that would form a self-loop or repeat an edge
/// in `taken` is re-drawn, up to `10 * stubs.len()` times in total. Returns
/// the new edges and the number of stubs left unpaired.
fn pair_stubs<R: Rng + ?Sized>(mut pool: Vec<u32>, taken: &mut HashSet<Edge>, rng: &mut R) -> (Vec<Edge>, usize) {
    let mut retries = 10 * pool.len();
    let mut edges = Vec::new();
    while pool.len() >= 2 {
        let i = rng.gen_range(0..pool.len());
        let mut j = rng.gen_range(0..pool.len() - 1);
        if j >= i {
            j += 1;
        }
        let (a, b) = (pool[i], pool[j]);
        let e = normalize(a, b);
        if a != b && !taken.contains(&e) {
            taken.insert(e);
            edges.push(e);
            let (hi, lo) = if i > j { (i, j) } else { (j, i) };
            pool.swap_remove(hi);
            pool.swap_remove(lo);
        } else if retries == 0 {
            break;
        } else {
            retries -= 1;
        }
    }
    (edges, pool.len())
}

/// Configuration-model layer with the given degrees. Illegal pairings are
/// re-drawn a bounded number of times and otherwise discarded, so realized
/// degrees can fall short of the request.
pub fn seed_layer<R: Rng + ?Sized>(degrees: &[u32], rng: &mut R) -> Snapshot {
    let n = degrees.len();
    let mut degrees = degrees.to_vec();
    if degrees.iter().map(|&d| d as u64).sum::<u64>() % 2 == 1 {
        let positive: Vec<usize> = (0..n).filter(|&i| degrees[i] > 0).collect();
        let pick = positive[rng.gen_range(0..positive.len())];
        degrees[pick] -= 1;
    }
    let stubs: Vec<u32> = degrees.iter().enumerate().flat_map(|(i, &d)| std::iter::repeat_n(i as u32, d as usize)).collect();
    let (edges, _) = pair_stubs(stubs, &mut HashSet::new(), rng);
    Snapshot::from_edges(n, edges).expect("stub endpoints are valid nodes")
}

/// Per-neighbor activity strings of `ego` over `window` (oldest first),
/// sorted by neighbor id.
fn neighbor_strings(window: &[Snapshot], ego: u32) -> Vec<(u32, u16)> {
    let width = window.len();
    let mut marks: Vec<(u32, u16)> = Vec::new();
    for (offset, s) in window.iter().enumerate() {
        let bit = 1u16 << (width - 1 - offset);
        marks.extend(s.neighbors(ego).iter().map(|&u| (u, bit)));
    }
    marks.sort_unstable_by_key(|m| m.0);
    let mut out: Vec<(u32, u16)> = Vec::new();
    for (u, bit) in marks {
        match out.last_mut() {
            Some((last, bits)) if *last == u => *bits |= bit,
            _ => out.push((u, bit)),
        }
    }
    out
}

/// One node's share of a provisional layer.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct NodeProposal {
    pub targets: Vec<u32>,
    pub stubs: usize,
    pub unmatched: usize,
}

/// Maps the strings of `extension` that end in a link onto concrete partners:
/// a string whose older bits are non-zero continues a current neighbor with
/// exactly those bits (chosen uniformly among equals); an all-zero history is
/// a stub.
pub fn bind_extension<R: Rng + ?Sized>(neighbors: &[(u32, u16)], extension: &EtnSignature, rng: &mut R) -> NodeProposal {
    let mut by_history: HashMap<u16, Vec<u32>> = HashMap::new();
    for &(u, bits) in neighbors {
        by_history.entry(bits).or_default().push(u);
    }
    let mut proposal = NodeProposal::default();
    for &s in extension.strings() {
        if s & 1 == 0 {
            continue;
        }
        let history = s >> 1;
        if history == 0 {
            proposal.stubs += 1;
            continue;
        }
        match by_history.get_mut(&history) {
            Some(pool) if !pool.is_empty() => {
                let i = rng.gen_range(0..pool.len());
                proposal.targets.push(pool.swap_remove(i));
            }
            _ => proposal.unmatched += 1,
        }
    }
    proposal
}

/// Samples an extension for every node and collects requests and stubs.
/// Node `e` of layer `t` draws from its own stream `(seed, t, e)`.
pub fn propose_layer(
    window: &[Snapshot],
    model: &LocalModel,
    bucket: BucketKey,
    seed: u64,
    t: usize,
) -> (ProvisionalLayer, LayerDiagnostics) {
    let depth = window.len();
    let n = window[0].node_count();
    let per_node = par::map_range(n, |ego| {
        let mut rng = substream(seed, &[phase::PROPOSE, t as u64, ego as u64]);
        let neighbors = neighbor_strings(window, ego as u32);
        let mut strings: Vec<u16> = neighbors.iter().map(|&(_, b)| b).collect();
        strings.sort_unstable();
        let prefix = Etn::new(depth, strings).expect("window strings are non-zero");
        let (ext, source) = model.sample_extension(bucket, depth, &prefix, &mut rng);
        (bind_extension(&neighbors, &ext, &mut rng), source)
    });
    let mut layer = ProvisionalLayer::default();
    let mut diag = LayerDiagnostics { t, ..Default::default() };
    for (ego, (p, source)) in per_node.into_iter().enumerate() {
        diag.record(source);
        diag.unmatched_strings += p.unmatched;
        for target in p.targets {
            layer.requests.insert((ego as u32, target));
        }
        layer.stubs.extend(std::iter::repeat_n(ego as u32, p.stubs));
    }
    (layer, diag)
}

/// Reconciles a provisional layer: reciprocal requests always become edges,
/// one-directional ones with probability `alpha`, and stubs are paired at
/// random (an odd leftover stub is dropped first).
pub fn validate_layer<R: Rng + ?Sized>(
    layer: &ProvisionalLayer,
    node_count: usize,
    alpha: f64,
    rng: &mut R,
) -> (Snapshot, LayerDiagnostics) {
    let mut diag = LayerDiagnostics::default();
    let mut taken: HashSet<Edge> = HashSet::new();
    let mut edges: Vec<Edge> = Vec::new();
    for &(i, j) in &layer.requests {
        debug_assert_ne!(i, j);
        if layer.requests.contains(&(j, i)) {
            if i < j {
                diag.reciprocal += 1;
                taken.insert((i, j));
                edges.push((i, j));
            }
        } else if rng.gen_bool(alpha) {
            diag.one_directional_confirmed += 1;
            taken.insert(normalize(i, j));
            edges.push(normalize(i, j));
        } else {
            diag.one_directional_rejected += 1;
        }
    }
    let mut stubs = layer.stubs.clone();
    if stubs.len() % 2 == 1 {
        let drop = rng.gen_range(0..stubs.len());
        stubs.swap_remove(drop);
        diag.stubs_dropped += 1;
    }
    let (paired, left) = pair_stubs(stubs, &mut taken, rng);
    diag.stub_edges = paired.len();
    diag.stubs_dropped += left;
    edges.extend(paired);
    (Snapshot::from_edges(node_count, edges).expect("request endpoints are valid nodes"), diag)
}

/// A generated network and its per-layer diagnostics.
#[derive(Debug, Clone)]
pub struct Generated {
    pub graph: TemporalGraph,
    pub diagnostics: Vec<LayerDiagnostics>,
}

fn seed_degrees(model: &LocalModel, cfg: &GenConfig) -> Vec<u32> {
    let source = cfg.seed_degrees.clone().unwrap_or_else(|| model.meta().first_layer_degrees.clone());
    let cap = (cfg.n_nodes - 1) as u32;
    let degrees = if source.len() == cfg.n_nodes || source.is_empty() {
        let mut d = source;
        d.resize(cfg.n_nodes, 0);
        d
    } else {
        let mut rng = substream(cfg.seed, &[phase::RESAMPLE_DEGREES]);
        (0..cfg.n_nodes).map(|_| *source.choose(&mut rng).expect("non-empty")).collect()
    };
    degrees.into_iter().map(|d| d.min(cap)).collect()
}

/// Appends layers until `layers.len() == until`, using depth
/// `min(layers.len(), k)` for each new layer.
fn extend_layers(
    layers: &mut Vec<Snapshot>,
    diagnostics: &mut Vec<LayerDiagnostics>,
    until: usize,
    model: &LocalModel,
    cfg: &GenConfig,
    bucketing: &Bucketing,
) {
    let n = cfg.n_nodes;
    while layers.len() < until {
        let t = layers.len();
        let depth = t.min(cfg.k);
        let (provisional, mut diag) = propose_layer(&layers[t - depth..t], model, bucketing.key(t), cfg.seed, t);
        let mut rng = substream(cfg.seed, &[phase::VALIDATE, t as u64]);
        let (snapshot, v) = validate_layer(&provisional, n, cfg.alpha, &mut rng);
        diag.reciprocal = v.reciprocal;
        diag.one_directional_confirmed = v.one_directional_confirmed;
        diag.one_directional_rejected = v.one_directional_rejected;
        diag.stub_edges = v.stub_edges;
        diag.stubs_dropped = v.stubs_dropped;
        layers.push(snapshot);
        diagnostics.push(diag);
    }
}

fn bucketing(model: &LocalModel, cfg: &GenConfig) -> Bucketing {
    Bucketing::new(model.periodicity(), cfg.epoch.unwrap_or(model.meta().epoch), model.meta().gap)
}

/// The first `k` layers: the seed, then layer `i` grown from the preceding
/// `i` layers at depth `i`.
pub fn bootstrap(seed: Snapshot, model: &LocalModel, cfg: &GenConfig) -> Result<(Vec<Snapshot>, Vec<LayerDiagnostics>), GenError> {
    cfg.validate()?;
    if model.k() < cfg.k {
        return Err(GenError::ModelTooShallow { model: model.k(), requested: cfg.k });
    }
    let mut layers = vec![seed];
    let mut diagnostics = vec![LayerDiagnostics { stub_edges: layers[0].edge_count(), ..Default::default() }];
    extend_layers(&mut layers, &mut diagnostics, cfg.k, model, cfg, &bucketing(model, cfg));
    Ok((layers, diagnostics))
}

/// Generates `cfg.n_snapshots` layers over `cfg.n_nodes` nodes. The result
/// depends only on `model` and `cfg`, not on the worker count.
pub fn generate(model: &LocalModel, cfg: &GenConfig) -> Result<Generated, GenError> {
    cfg.validate()?;
    if model.k() < cfg.k {
        return Err(GenError::ModelTooShallow { model: model.k(), requested: cfg.k });
    }
    let degrees = seed_degrees(model, cfg);
    let mut rng = substream(cfg.seed, &[phase::SEED_LAYER]);
    let seed = seed_layer(&degrees, &mut rng);
    let (mut layers, mut diagnostics) = bootstrap(seed, model, cfg)?;
    let buckets = bucketing(model, cfg);
    extend_layers(&mut layers, &mut diagnostics, cfg.n_snapshots, model, cfg, &buckets);
    let graph = TemporalGraph::new(cfg.n_nodes, layers, model.meta().gap, buckets.epoch)?;
    Ok(Generated { graph, diagnostics })
}
