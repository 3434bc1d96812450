//! Egocentric temporal neighborhoods.
//!
//! A neighborhood of width `w` records, for every node linked to the ego in
//! at least one of `w` consecutive snapshots, a `w`-bit activity string.
//! Links between neighbors and neighbor identities are discarded; the strings
//! are kept as a sorted multiset, which makes the encoding canonical.
//!
//! Strings are stored as integers with the oldest snapshot in the most
//! significant of the `w` bits, so integer order equals lexicographic order of
//! the written form ("011" < "110").

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::io::{BufRead, Write};

use thiserror::Error;

use crate::bucket::{BucketKey, Bucketing};
use crate::par;
use crate::tempgraph::TemporalGraph;

/// Widest supported window (k + 1).
pub const MAX_WIDTH: usize = 16;

/// Written form of the empty neighborhood.
pub const EMPTY_SENTINEL: &str = "∅";

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EtnError {
    #[error("window of width {width} ending at snapshot {t_end} starts before the graph")]
    WindowOutOfRange { width: usize, t_end: usize },
    #[error("window width must be in 1..={MAX_WIDTH}, got {0}")]
    BadWidth(usize),
    #[error("bad neighborhood string {0:?}")]
    BadString(String),
    #[error("cosine distance undefined for an all-zero count vector")]
    ZeroVector,
    #[error("line {line}: {msg}")]
    Dump { line: usize, msg: String },
}

/// Canonical neighborhood: sorted activity strings of one window width.
///
/// Used both for full signatures (width k+1) and for prefixes (width k).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Etn {
    width: u8,
    strings: Vec<u16>,
}

pub type EtnSignature = Etn;
pub type EtnPrefix = Etn;

impl Etn {
    /// Sorts `strings`; zero strings and bits beyond `width` are rejected.
    pub fn new(width: usize, mut strings: Vec<u16>) -> Result<Self, EtnError> {
        if width == 0 || width > MAX_WIDTH {
            return Err(EtnError::BadWidth(width));
        }
        let limit = full_mask(width);
        if let Some(&bad) = strings.iter().find(|&&s| s == 0 || s & !limit != 0) {
            return Err(EtnError::BadString(format!("{bad:#b}")));
        }
        strings.sort_unstable();
        Ok(Etn { width: width as u8, strings })
    }

    pub fn empty(width: usize) -> Self {
        Etn { width: width as u8, strings: Vec::new() }
    }

    pub(crate) fn from_sorted(width: usize, strings: Vec<u16>) -> Self {
        debug_assert!(strings.windows(2).all(|p| p[0] <= p[1]));
        Etn { width: width as u8, strings }
    }

    pub fn width(&self) -> usize {
        self.width as usize
    }

    pub fn strings(&self) -> &[u16] {
        &self.strings
    }

    /// Number of neighbors.
    pub fn len(&self) -> usize {
        self.strings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.strings.is_empty()
    }

    /// Drops the newest snapshot and the neighbors that only appeared there.
    pub fn prefix(&self) -> Etn {
        assert!(self.width >= 2, "prefix of a width-1 neighborhood");
        let strings: Vec<u16> = self.strings.iter().map(|s| s >> 1).filter(|&s| s != 0).collect();
        // Shifting is monotone, so the order survives.
        Etn::from_sorted(self.width() - 1, strings)
    }

    /// Parses the `"011|110"` form; `∅` needs the width from context.
    pub fn parse(text: &str, width: usize) -> Result<Self, EtnError> {
        if text == EMPTY_SENTINEL {
            return Ok(Etn::empty(width));
        }
        let strings = text
            .split('|')
            .map(|s| {
                if s.len() != width || !s.bytes().all(|b| b == b'0' || b == b'1') {
                    return Err(EtnError::BadString(s.to_string()));
                }
                Ok(u16::from_str_radix(s, 2).expect("checked binary"))
            })
            .collect::<Result<Vec<_>, _>>()?;
        Etn::new(width, strings)
    }
}

pub fn prefix_of(sig: &EtnSignature) -> EtnPrefix {
    sig.prefix()
}

#[inline]
pub(crate) fn full_mask(width: usize) -> u16 {
    if width >= 16 {
        u16::MAX
    } else {
        (1u16 << width) - 1
    }
}

/// Renders one activity string, oldest snapshot first.
pub fn string_repr(bits: u16, width: usize) -> String {
    (0..width).rev().map(|i| if bits >> i & 1 == 1 { '1' } else { '0' }).collect()
}

impl fmt::Display for Etn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.strings.is_empty() {
            return f.write_str(EMPTY_SENTINEL);
        }
        for (i, &s) in self.strings.iter().enumerate() {
            if i > 0 {
                f.write_str("|")?;
            }
            f.write_str(&string_repr(s, self.width()))?;
        }
        Ok(())
    }
}

/// Neighborhood of `ego` over snapshots `t_end + 1 - width ..= t_end`.
pub fn extract_etn(g: &TemporalGraph, ego: u32, t_end: usize, width: usize) -> Result<EtnSignature, EtnError> {
    if width == 0 || width > MAX_WIDTH {
        return Err(EtnError::BadWidth(width));
    }
    if t_end + 1 < width || t_end >= g.len() {
        return Err(EtnError::WindowOutOfRange { width, t_end });
    }
    let start = t_end + 1 - width;
    let mut marks: Vec<(u32, u16)> = Vec::new();
    for (offset, t) in (start..=t_end).enumerate() {
        let bit = 1u16 << (width - 1 - offset);
        marks.extend(g.snapshot(t).neighbors(ego).iter().map(|&u| (u, bit)));
    }
    marks.sort_unstable_by_key(|m| m.0);
    let mut strings: Vec<u16> = Vec::new();
    let mut current: Option<(u32, u16)> = None;
    for (u, bit) in marks {
        match &mut current {
            Some((node, bits)) if *node == u => *bits |= bit,
            _ => {
                if let Some((_, bits)) = current.take() {
                    strings.push(bits);
                }
                current = Some((u, bit));
            }
        }
    }
    if let Some((_, bits)) = current {
        strings.push(bits);
    }
    strings.sort_unstable();
    Ok(Etn::from_sorted(width, strings))
}

/// Occurrence counts per bucket and depth. Depth `d` holds signatures of
/// width `d + 1`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct EtnCounts {
    pub k: usize,
    pub table: BTreeMap<(BucketKey, usize), BTreeMap<EtnSignature, u64>>,
}

impl EtnCounts {
    pub fn new(k: usize) -> Self {
        EtnCounts { k, table: BTreeMap::new() }
    }

    pub fn add(&mut self, bucket: BucketKey, depth: usize, sig: EtnSignature, count: u64) {
        *self.table.entry((bucket, depth)).or_default().entry(sig).or_insert(0) += count;
    }

    pub fn get(&self, bucket: BucketKey, depth: usize, sig: &EtnSignature) -> u64 {
        self.table.get(&(bucket, depth)).and_then(|m| m.get(sig)).copied().unwrap_or(0)
    }

    /// Bucket-summed counts at one depth.
    pub fn at_depth(&self, depth: usize) -> BTreeMap<EtnSignature, u64> {
        let mut out = BTreeMap::new();
        for ((_, d), sigs) in &self.table {
            if *d == depth {
                for (s, &c) in sigs {
                    *out.entry(s.clone()).or_insert(0) += c;
                }
            }
        }
        out
    }

    pub fn depth_total(&self, depth: usize) -> u64 {
        self.table.iter().filter(|((_, d), _)| *d == depth).flat_map(|(_, m)| m.values()).sum()
    }

    pub fn buckets(&self) -> Vec<BucketKey> {
        let mut b: Vec<BucketKey> = self.table.keys().map(|(b, _)| *b).collect();
        b.dedup();
        b.sort_unstable();
        b.dedup();
        b
    }

    /// Writes `bucket<TAB>depth<TAB>signature<TAB>count` lines.
    pub fn write_dump<W: Write>(&self, mut sink: W) -> std::io::Result<()> {
        writeln!(sink, "#k={}", self.k)?;
        for ((bucket, depth), sigs) in &self.table {
            for (sig, count) in sigs {
                writeln!(sink, "{bucket}\t{depth}\t{sig}\t{count}")?;
            }
        }
        sink.flush()
    }

    pub fn read_dump<R: BufRead>(reader: R) -> Result<Self, EtnError> {
        let mut counts = EtnCounts::new(0);
        for (i, line) in reader.lines().enumerate() {
            let line_no = i + 1;
            let err = |msg: String| EtnError::Dump { line: line_no, msg };
            let line = line.map_err(|e| err(e.to_string()))?;
            if let Some(k) = line.strip_prefix("#k=") {
                counts.k = k.trim().parse().map_err(|_| err("bad k".into()))?;
                continue;
            }
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            let [bucket, depth, sig, count] = fields[..] else {
                return Err(err("expected four fields".into()));
            };
            let bucket: BucketKey = bucket.parse().map_err(err)?;
            let depth: usize = depth.parse().map_err(|_| err("bad depth".into()))?;
            let sig = Etn::parse(sig, depth + 1).map_err(|e| err(e.to_string()))?;
            let count: u64 = count.parse().map_err(|_| err("bad count".into()))?;
            counts.add(bucket, depth, sig, count);
        }
        Ok(counts)
    }
}

type LocalCounts = HashMap<(usize, usize), HashMap<Etn, u64>>;

/// Sliding-window miner for one ego: keeps a per-neighbor activity register
/// of the last `k + 1` snapshots and reads every depth off it.
fn mine_ego(g: &TemporalGraph, ego: u32, k: usize, bucket_of: &[usize]) -> LocalCounts {
    let width = k + 1;
    let mask = full_mask(width);
    let mut register = vec![0u16; g.node_count()];
    let mut active: Vec<u32> = Vec::new();
    let mut local: LocalCounts = HashMap::new();
    let mut strings: Vec<u16> = Vec::new();

    for (t, &bucket) in bucket_of.iter().enumerate() {
        for &u in &active {
            register[u as usize] = (register[u as usize] << 1) & mask;
        }
        active.retain(|&u| register[u as usize] != 0);
        for &v in g.snapshot(t).neighbors(ego) {
            if register[v as usize] == 0 {
                active.push(v);
            }
            register[v as usize] |= 1;
        }

        for depth in 1..=k.min(t) {
            let window = full_mask(depth + 1);
            strings.clear();
            strings.extend(active.iter().map(|&u| register[u as usize] & window).filter(|&s| s != 0));
            strings.sort_unstable();
            let sig = Etn::from_sorted(depth + 1, strings.clone());
            *local.entry((bucket, depth)).or_default().entry(sig).or_insert(0) += 1;
        }
    }
    local
}

/// Counts every neighborhood of depth `1..=k` for every ego and window end,
/// keyed by the bucket of the window's last snapshot. Isolated egos
/// contribute the empty neighborhood.
pub fn mine_counts(g: &TemporalGraph, k: usize, bucketing: &Bucketing) -> Result<EtnCounts, EtnError> {
    if k == 0 || k + 1 > MAX_WIDTH {
        return Err(EtnError::BadWidth(k + 1));
    }
    let keys: Vec<BucketKey> = (0..g.len()).map(|t| bucketing.key(t)).collect();
    let mut distinct = keys.clone();
    distinct.sort_unstable();
    distinct.dedup();
    let bucket_of: Vec<usize> = keys.iter().map(|k| distinct.binary_search(k).unwrap()).collect();

    let per_ego = par::map_range(g.node_count(), |ego| mine_ego(g, ego as u32, k, &bucket_of));

    let mut counts = EtnCounts::new(k);
    for local in per_ego {
        for ((b, depth), sigs) in local {
            let slot = counts.table.entry((distinct[b], depth)).or_default();
            for (sig, c) in sigs {
                *slot.entry(sig).or_insert(0) += c;
            }
        }
    }
    Ok(counts)
}

/// `1 - cos(a, b)` over the union of keys, missing keys counting as zero.
pub fn etn_cosine_distance(a: &BTreeMap<EtnSignature, u64>, b: &BTreeMap<EtnSignature, u64>) -> Result<f64, EtnError> {
    let norm = |m: &BTreeMap<EtnSignature, u64>| m.values().map(|&c| (c as f64).powi(2)).sum::<f64>().sqrt();
    let (na, nb) = (norm(a), norm(b));
    if na == 0.0 || nb == 0.0 {
        return Err(EtnError::ZeroVector);
    }
    let dot: f64 = a.iter().filter_map(|(s, &ca)| b.get(s).map(|&cb| ca as f64 * cb as f64)).sum();
    Ok((1.0 - dot / (na * nb)).clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bucket::Periodicity;

    fn sig(text: &str, width: usize) -> Etn {
        Etn::parse(text, width).unwrap()
    }

    #[test]
    fn returning_neighbor_is_counted_once() {
        let g = TemporalGraph::from_layers(2, &[vec![(0, 1)], vec![], vec![(0, 1)]], 300, 0).unwrap();
        let counts = mine_counts(&g, 1, &Bucketing::for_graph(&g, Periodicity::Daily)).unwrap();
        let depth1 = counts.at_depth(1);
        assert_eq!(depth1.get(&sig("10", 2)), Some(&2));
        assert_eq!(depth1.get(&sig("01", 2)), Some(&2));
        assert_eq!(depth1.len(), 2);
    }

    #[test]
    fn extraction_examples() {
        let g = TemporalGraph::from_layers(2, &vec![vec![(0, 1)]; 3], 300, 0).unwrap();
        assert_eq!(extract_etn(&g, 0, 2, 3).unwrap().to_string(), "111");

        let g = TemporalGraph::from_layers(3, &vec![vec![(1, 2)]; 3], 300, 0).unwrap();
        assert!(extract_etn(&g, 0, 2, 3).unwrap().is_empty());

        // u = 1 at {t-1, t}, v = 2 at {t-2, t-1}
        let g = TemporalGraph::from_layers(3, &[vec![(0, 2)], vec![(0, 1), (0, 2)], vec![(0, 1)]], 300, 0).unwrap();
        assert_eq!(extract_etn(&g, 0, 2, 3).unwrap().to_string(), "011|110");
    }

    #[test]
    fn window_before_start_is_rejected() {
        let g = TemporalGraph::from_layers(2, &vec![vec![(0, 1)]; 3], 300, 0).unwrap();
        assert_eq!(extract_etn(&g, 0, 1, 3), Err(EtnError::WindowOutOfRange { width: 3, t_end: 1 }));
    }

    #[test]
    fn prefixes() {
        assert_eq!(sig("111", 3).prefix().to_string(), "11");
        assert!(sig("001", 3).prefix().is_empty());
        assert_eq!(sig("011|110", 3).prefix().to_string(), "01|11");
        assert_eq!(prefix_of(&sig("001|001|100", 3)).to_string(), "10");
    }

    #[test]
    fn text_form() {
        assert_eq!(Etn::empty(3).to_string(), "∅");
        assert_eq!(Etn::parse("∅", 2).unwrap(), Etn::empty(2));
        assert_eq!(sig("110|011", 3).to_string(), "011|110");
        assert!(Etn::parse("11", 3).is_err());
        assert!(Etn::parse("000", 3).is_err());
        assert!(Etn::parse("1a1", 3).is_err());
        assert!(Etn::new(3, vec![0b1000]).is_err());
    }

    #[test]
    fn two_snapshot_single_edge() {
        let g = TemporalGraph::from_layers(2, &vec![vec![(0, 1)]; 2], 300, 0).unwrap();
        let counts = mine_counts(&g, 1, &Bucketing::for_graph(&g, Periodicity::Daily)).unwrap();
        let at1 = counts.at_depth(1);
        assert_eq!(at1.len(), 1);
        assert_eq!(at1[&sig("11", 2)], 2);
    }

    #[test]
    fn empty_graph_counts_only_empty() {
        let g = TemporalGraph::from_layers(4, &vec![vec![]; 5], 300, 0).unwrap();
        let counts = mine_counts(&g, 2, &Bucketing::for_graph(&g, Periodicity::Daily)).unwrap();
        assert_eq!(counts.at_depth(1).into_iter().collect::<Vec<_>>(), vec![(Etn::empty(2), 4 * 4)]);
        assert_eq!(counts.at_depth(2).into_iter().collect::<Vec<_>>(), vec![(Etn::empty(3), 4 * 3)]);
    }

    #[test]
    fn dump_round_trip() {
        let g = TemporalGraph::from_layers(3, &[vec![(0, 1)], vec![(1, 2)], vec![(0, 1), (0, 2)]], 1800, 0).unwrap();
        let counts = mine_counts(&g, 2, &Bucketing::for_graph(&g, Periodicity::Weekly)).unwrap();
        let mut out = Vec::new();
        counts.write_dump(&mut out).unwrap();
        assert_eq!(EtnCounts::read_dump(out.as_slice()).unwrap(), counts);
        assert!(matches!(EtnCounts::read_dump("h01\t1\t11\n".as_bytes()), Err(EtnError::Dump { line: 1, .. })));
    }

    #[test]
    fn cosine_examples() {
        let s1 = sig("11", 2);
        let s2 = sig("01", 2);
        let a = BTreeMap::from([(s1.clone(), 3), (s2.clone(), 4)]);
        let b = BTreeMap::from([(s1.clone(), 3)]);
        assert!((etn_cosine_distance(&a, &b).unwrap() - 0.4).abs() < 1e-12);
        assert!(etn_cosine_distance(&a, &a).unwrap().abs() < 1e-12);
        let c = BTreeMap::from([(sig("10", 2), 5)]);
        assert!((etn_cosine_distance(&a, &c).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(etn_cosine_distance(&a, &BTreeMap::new()), Err(EtnError::ZeroVector));
    }
}
