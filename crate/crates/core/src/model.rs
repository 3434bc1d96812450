//! Bucketed prefix → extension distributions.
//!
//! Probabilities are maximum-likelihood frequencies kept as integer counts;
//! they are normalized only when queried or sampled, so saving and loading a
//! model is exact.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bucket::{BucketKey, Bucketing, Periodicity};
use crate::etn::{mine_counts, Etn, EtnCounts, EtnError, EtnPrefix, EtnSignature};
use crate::tempgraph::TemporalGraph;

pub const MODEL_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("no neighborhoods observed at depth {0}")]
    EmptyDepth(usize),
    #[error("model file version {found}, expected {MODEL_VERSION}")]
    Version { found: u32 },
    #[error("malformed model: {0}")]
    Malformed(String),
    #[error(transparent)]
    Etn(#[from] EtnError),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Candidate extensions of one prefix with their observed counts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExtensionDistribution {
    entries: Vec<(EtnSignature, u64)>,
    cumulative: Vec<u64>,
}

impl ExtensionDistribution {
    /// Zero counts are dropped. Entries are kept in signature order.
    pub fn from_counts(counts: impl IntoIterator<Item = (EtnSignature, u64)>) -> Self {
        let mut merged: BTreeMap<EtnSignature, u64> = BTreeMap::new();
        for (s, c) in counts {
            if c > 0 {
                *merged.entry(s).or_insert(0) += c;
            }
        }
        let entries: Vec<(EtnSignature, u64)> = merged.into_iter().collect();
        let mut acc = 0u64;
        let cumulative = entries
            .iter()
            .map(|(_, c)| {
                acc += c;
                acc
            })
            .collect();
        ExtensionDistribution { entries, cumulative }
    }

    pub fn total(&self) -> u64 {
        self.cumulative.last().copied().unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn entries(&self) -> &[(EtnSignature, u64)] {
        &self.entries
    }

    pub fn probability(&self, sig: &EtnSignature) -> f64 {
        match self.entries.binary_search_by(|(s, _)| s.cmp(sig)) {
            Ok(i) => self.entries[i].1 as f64 / self.total() as f64,
            Err(_) => 0.0,
        }
    }

    pub fn probabilities(&self) -> impl Iterator<Item = (&EtnSignature, f64)> + '_ {
        let total = self.total() as f64;
        self.entries.iter().map(move |(s, c)| (s, *c as f64 / total))
    }

    /// Draws one extension; `None` only for an empty distribution.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Option<&EtnSignature> {
        let total = self.total();
        if total == 0 {
            return None;
        }
        let x = rng.gen_range(0..total);
        let i = self.cumulative.partition_point(|&c| c <= x);
        Some(&self.entries[i].0)
    }
}

/// Which table answered a sampling query.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SampleSource {
    Bucket,
    Global,
    EmptyPrefixBucket,
    EmptyPrefixGlobal,
    Isolated,
}

/// Training-set metadata carried alongside the tables.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModelMeta {
    pub periodicity: Periodicity,
    pub gap: u64,
    pub epoch: i64,
    pub node_count: usize,
    pub first_layer_degrees: Vec<u32>,
}

impl ModelMeta {
    pub fn of_graph(g: &TemporalGraph, periodicity: Periodicity) -> Self {
        ModelMeta {
            periodicity,
            gap: g.gap(),
            epoch: g.epoch(),
            node_count: g.node_count(),
            first_layer_degrees: g.snapshots().first().map(|s| s.degrees()).unwrap_or_default(),
        }
    }
}

type TableKey = (BucketKey, usize, EtnPrefix);

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LocalModel {
    k: usize,
    meta: ModelMeta,
    tables: BTreeMap<TableKey, ExtensionDistribution>,
    global: BTreeMap<(usize, EtnPrefix), ExtensionDistribution>,
}

fn group_by_prefix<K: Ord + Clone>(
    counts: impl IntoIterator<Item = (K, EtnSignature, u64)>,
) -> BTreeMap<(K, EtnPrefix), Vec<(EtnSignature, u64)>> {
    let mut grouped: BTreeMap<(K, EtnPrefix), Vec<(EtnSignature, u64)>> = BTreeMap::new();
    for (key, sig, c) in counts {
        grouped.entry((key, sig.prefix())).or_default().push((sig, c));
    }
    grouped
}

/// Normalizes counts per (bucket, depth, prefix); the bucket-free tables are
/// fitted on bucket-summed counts.
pub fn fit(counts: &EtnCounts, meta: ModelMeta) -> Result<LocalModel, ModelError> {
    if counts.k == 0 {
        return Err(ModelError::EmptyDepth(0));
    }
    for depth in 1..=counts.k {
        if counts.depth_total(depth) == 0 {
            return Err(ModelError::EmptyDepth(depth));
        }
    }
    let bucketed = counts
        .table
        .iter()
        .flat_map(|((b, d), sigs)| sigs.iter().map(move |(s, &c)| ((*b, *d), s.clone(), c)));
    let tables = group_by_prefix(bucketed)
        .into_iter()
        .map(|(((b, d), p), entries)| ((b, d, p), ExtensionDistribution::from_counts(entries)))
        .collect();
    let global = build_global(&tables);
    Ok(LocalModel { k: counts.k, meta, tables, global })
}

fn build_global(tables: &BTreeMap<TableKey, ExtensionDistribution>) -> BTreeMap<(usize, EtnPrefix), ExtensionDistribution> {
    let mut summed: BTreeMap<(usize, EtnPrefix), Vec<(EtnSignature, u64)>> = BTreeMap::new();
    for ((_, d, p), dist) in tables {
        summed.entry((*d, p.clone())).or_default().extend(dist.entries().iter().cloned());
    }
    summed.into_iter().map(|(k, v)| (k, ExtensionDistribution::from_counts(v))).collect()
}

impl LocalModel {
    /// Mines depths `1..=k` of `g` and fits.
    pub fn train(g: &TemporalGraph, k: usize, periodicity: Periodicity) -> Result<Self, ModelError> {
        let counts = mine_counts(g, k, &Bucketing::for_graph(g, periodicity))?;
        fit(&counts, ModelMeta::of_graph(g, periodicity))
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn meta(&self) -> &ModelMeta {
        &self.meta
    }

    pub fn periodicity(&self) -> Periodicity {
        self.meta.periodicity
    }

    pub fn tables(&self) -> &BTreeMap<TableKey, ExtensionDistribution> {
        &self.tables
    }

    pub fn global_tables(&self) -> &BTreeMap<(usize, EtnPrefix), ExtensionDistribution> {
        &self.global
    }

    pub fn distribution(&self, bucket: BucketKey, depth: usize, prefix: &EtnPrefix) -> Option<&ExtensionDistribution> {
        self.tables.get(&(bucket, depth, prefix.clone()))
    }

    pub fn bucket_count(&self) -> usize {
        let mut b: Vec<BucketKey> = self.tables.keys().map(|k| k.0).collect();
        b.sort_unstable();
        b.dedup();
        b.len()
    }

    pub fn signature_count(&self) -> usize {
        self.tables.values().map(ExtensionDistribution::len).sum()
    }

    /// Draws an extension of `prefix`, falling back from the bucket table to
    /// the bucket-free table, then to the empty-prefix tables, and finally to
    /// the empty neighborhood.
    pub fn sample_extension<R: Rng + ?Sized>(
        &self,
        bucket: BucketKey,
        depth: usize,
        prefix: &EtnPrefix,
        rng: &mut R,
    ) -> (EtnSignature, SampleSource) {
        assert!((1..=self.k).contains(&depth), "depth {depth} outside 1..={}", self.k);
        let key = (bucket, depth, prefix.clone());
        if let Some(s) = self.tables.get(&key).and_then(|d| d.sample(rng)) {
            return (s.clone(), SampleSource::Bucket);
        }
        let (_, _, prefix) = key;
        let key = (depth, prefix);
        if let Some(s) = self.global.get(&key).and_then(|d| d.sample(rng)) {
            return (s.clone(), SampleSource::Global);
        }
        let empty = Etn::empty(depth);
        if let Some(s) = self.tables.get(&(bucket, depth, empty.clone())).and_then(|d| d.sample(rng)) {
            return (s.clone(), SampleSource::EmptyPrefixBucket);
        }
        if let Some(s) = self.global.get(&(depth, empty)).and_then(|d| d.sample(rng)) {
            return (s.clone(), SampleSource::EmptyPrefixGlobal);
        }
        (Etn::empty(depth + 1), SampleSource::Isolated)
    }

    pub fn save<W: Write>(&self, sink: W) -> Result<(), ModelError> {
        let file = ModelFile {
            version: MODEL_VERSION,
            k: self.k,
            periodicity: self.meta.periodicity,
            gap: self.meta.gap,
            epoch: self.meta.epoch,
            node_count: self.meta.node_count,
            first_layer_degrees: self.meta.first_layer_degrees.clone(),
            tables: self
                .tables
                .iter()
                .map(|((b, d, p), dist)| TableEntry {
                    bucket: b.to_string(),
                    depth: *d,
                    prefix: p.to_string(),
                    extensions: dist
                        .entries()
                        .iter()
                        .map(|(s, c)| ExtensionEntry { sig: s.to_string(), count: *c })
                        .collect(),
                })
                .collect(),
        };
        serde_json::to_writer(sink, &file)?;
        Ok(())
    }

    pub fn load<R: Read>(source: R) -> Result<Self, ModelError> {
        let file: ModelFile = serde_json::from_reader(source)?;
        if file.version != MODEL_VERSION {
            return Err(ModelError::Version { found: file.version });
        }
        let mut tables = BTreeMap::new();
        for entry in file.tables {
            let bucket: BucketKey = entry.bucket.parse().map_err(ModelError::Malformed)?;
            if entry.depth == 0 || entry.depth > file.k {
                return Err(ModelError::Malformed(format!("depth {} outside 1..={}", entry.depth, file.k)));
            }
            let prefix = Etn::parse(&entry.prefix, entry.depth)?;
            let mut exts = Vec::with_capacity(entry.extensions.len());
            for e in entry.extensions {
                let sig = Etn::parse(&e.sig, entry.depth + 1)?;
                if sig.prefix() != prefix {
                    return Err(ModelError::Malformed(format!("extension {sig} does not continue prefix {prefix}")));
                }
                if e.count == 0 {
                    return Err(ModelError::Malformed(format!("zero count for {sig}")));
                }
                exts.push((sig, e.count));
            }
            tables.insert((bucket, entry.depth, prefix), ExtensionDistribution::from_counts(exts));
        }
        let global = build_global(&tables);
        let meta = ModelMeta {
            periodicity: file.periodicity,
            gap: file.gap,
            epoch: file.epoch,
            node_count: file.node_count,
            first_layer_degrees: file.first_layer_degrees,
        };
        Ok(LocalModel { k: file.k, meta, tables, global })
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    version: u32,
    k: usize,
    periodicity: Periodicity,
    gap: u64,
    epoch: i64,
    node_count: usize,
    first_layer_degrees: Vec<u32>,
    tables: Vec<TableEntry>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TableEntry {
    bucket: String,
    depth: usize,
    prefix: String,
    extensions: Vec<ExtensionEntry>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ExtensionEntry {
    sig: String,
    count: u64,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::substream;

    fn sig(text: &str, width: usize) -> Etn {
        Etn::parse(text, width).unwrap()
    }

    fn meta() -> ModelMeta {
        ModelMeta { periodicity: Periodicity::Daily, gap: 300, epoch: 0, node_count: 3, first_layer_degrees: vec![1, 1, 0] }
    }

    fn counts_with(entries: &[(&str, u64)]) -> EtnCounts {
        let mut counts = EtnCounts::new(1);
        for &(s, c) in entries {
            counts.add(BucketKey::daily(0), 1, sig(s, 2), c);
        }
        counts
    }

    #[test]
    fn maximum_likelihood_normalization() {
        let mut counts = EtnCounts::new(2);
        counts.add(BucketKey::daily(0), 1, Etn::empty(2), 1);
        counts.add(BucketKey::daily(0), 2, sig("111", 3), 7);
        counts.add(BucketKey::daily(0), 2, sig("110", 3), 3);
        let model = fit(&counts, meta()).unwrap();
        let dist = model.distribution(BucketKey::daily(0), 2, &sig("11", 2)).unwrap();
        assert!((dist.probability(&sig("111", 3)) - 0.7).abs() < 1e-15);
        assert!((dist.probability(&sig("110", 3)) - 0.3).abs() < 1e-15);
    }

    #[test]
    fn single_extension_is_certain() {
        let model = fit(&counts_with(&[("11", 4)]), meta()).unwrap();
        let dist = model.distribution(BucketKey::daily(0), 1, &sig("1", 1)).unwrap();
        assert_eq!(dist.probability(&sig("11", 2)), 1.0);
        let mut rng = substream(0, &[]);
        for _ in 0..20 {
            let (s, src) = model.sample_extension(BucketKey::daily(0), 1, &sig("1", 1), &mut rng);
            assert_eq!(s, sig("11", 2));
            assert_eq!(src, SampleSource::Bucket);
        }
    }

    #[test]
    fn empty_depth_fails() {
        let mut counts = EtnCounts::new(2);
        counts.add(BucketKey::daily(0), 1, Etn::empty(2), 1);
        assert!(matches!(fit(&counts, meta()), Err(ModelError::EmptyDepth(2))));
    }

    #[test]
    fn fallback_chain() {
        let mut counts = EtnCounts::new(1);
        counts.add(BucketKey::daily(1), 1, sig("11", 2), 5);
        counts.add(BucketKey::daily(2), 1, sig("01", 2), 5);
        let model = fit(&counts, meta()).unwrap();
        let mut rng = substream(1, &[]);
        // prefix "1" unseen in hour 2, seen globally
        let (s, src) = model.sample_extension(BucketKey::daily(2), 1, &sig("1", 1), &mut rng);
        assert_eq!((s, src), (sig("11", 2), SampleSource::Global));
        // prefix "1|1" never seen: empty-prefix table of the bucket
        let (s, src) = model.sample_extension(BucketKey::daily(2), 1, &sig("1|1", 1), &mut rng);
        assert_eq!((s, src), (sig("01", 2), SampleSource::EmptyPrefixBucket));
        let (s, src) = model.sample_extension(BucketKey::daily(5), 1, &sig("1|1", 1), &mut rng);
        assert_eq!((s, src), (sig("01", 2), SampleSource::EmptyPrefixGlobal));

        let only_active = fit(&counts_with(&[("11", 2)]), meta()).unwrap();
        let (s, src) = only_active.sample_extension(BucketKey::daily(0), 1, &Etn::empty(1), &mut rng);
        assert_eq!((s, src), (Etn::empty(2), SampleSource::Isolated));
    }

    #[test]
    fn monte_carlo_frequency() {
        let dist = ExtensionDistribution::from_counts([(sig("11", 2), 7), (sig("10", 2), 3)]);
        let mut rng = substream(42, &[]);
        let n = 100_000;
        let hits = (0..n).filter(|_| dist.sample(&mut rng) == Some(&sig("11", 2))).count();
        let freq = hits as f64 / n as f64;
        assert!((freq - 0.7).abs() < 0.01, "{freq}");
    }

    #[test]
    fn save_load_round_trip_and_errors() {
        let mut counts = counts_with(&[("11", 3), ("10", 1), ("01", 9)]);
        counts.add(BucketKey::daily(4), 1, Etn::empty(2), 2);
        let model = fit(&counts, meta()).unwrap();
        let mut buf = Vec::new();
        model.save(&mut buf).unwrap();
        let back = LocalModel::load(buf.as_slice()).unwrap();
        assert_eq!(back, model);

        assert!(LocalModel::load(&buf[..buf.len() / 2]).is_err());
        let text = String::from_utf8(buf).unwrap().replacen("\"version\":1", "\"version\":9", 1);
        assert!(matches!(LocalModel::load(text.as_bytes()), Err(ModelError::Version { found: 9 })));
    }
}
