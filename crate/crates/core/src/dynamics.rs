//! Dynamical probes on temporal networks: a temporal random walk (coverage,
//! mean first passage time) and SIR spreading (R₀).
//!
//! One snapshot is one step. All runs draw from their own substream of the
//! configured seed, so results do not depend on the number of workers.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rand::Rng;
use thiserror::Error;

use crate::par;
use crate::rng::{phase, substream};
use crate::tempgraph::TemporalGraph;

#[derive(Debug, Error, PartialEq)]
pub enum DynError {
    #[error("graph has no edges")]
    NoEdges,
    #[error("graph has no snapshots")]
    Empty,
    #[error("no node has an edge at snapshot {0}")]
    NoConnectedNode(usize),
    #[error("start snapshot {t} beyond graph of length {len}")]
    StartOutOfRange { t: usize, len: usize },
    #[error("{0} must lie in [0, 1]")]
    BadProbability(&'static str),
    #[error("run counts must be at least 1")]
    ZeroRuns,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum StartPolicy {
    /// First snapshot.
    T0,
    /// Snapshot `m / 2`.
    Half,
    /// First snapshot with the largest edge count.
    FirstPeak,
}

impl StartPolicy {
    pub const ALL: [StartPolicy; 3] = [StartPolicy::T0, StartPolicy::Half, StartPolicy::FirstPeak];

    pub fn name(self) -> &'static str {
        match self {
            StartPolicy::T0 => "t0",
            StartPolicy::Half => "half",
            StartPolicy::FirstPeak => "peak",
        }
    }

    pub fn resolve(self, g: &TemporalGraph) -> Result<usize, DynError> {
        if g.is_empty() {
            return Err(DynError::Empty);
        }
        match self {
            StartPolicy::T0 => Ok(0),
            StartPolicy::Half => Ok(g.len() / 2),
            StartPolicy::FirstPeak => first_peak(g),
        }
    }
}

impl fmt::Display for StartPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for StartPolicy {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "t0" | "0" => Ok(StartPolicy::T0),
            "half" => Ok(StartPolicy::Half),
            "peak" | "first_peak" => Ok(StartPolicy::FirstPeak),
            other => Err(format!("unknown start {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DynConfig {
    pub start: StartPolicy,
    pub rw_runs: usize,
    pub mfpt_repeats: usize,
    pub sir_runs: usize,
    /// Transmission probability per contact and step.
    pub lambda: f64,
    /// Recovery probability per step.
    pub mu: f64,
    pub seed: u64,
}

impl Default for DynConfig {
    fn default() -> Self {
        DynConfig { start: StartPolicy::T0, rw_runs: 1000, mfpt_repeats: 5, sir_runs: 100, lambda: 0.25, mu: 0.055, seed: 0 }
    }
}

impl DynConfig {
    pub fn validate(&self) -> Result<(), DynError> {
        if !(0.0..=1.0).contains(&self.lambda) {
            return Err(DynError::BadProbability("lambda"));
        }
        if !(0.0..=1.0).contains(&self.mu) {
            return Err(DynError::BadProbability("mu"));
        }
        if self.rw_runs == 0 || self.mfpt_repeats == 0 || self.sir_runs == 0 {
            return Err(DynError::ZeroRuns);
        }
        Ok(())
    }
}

/// Smallest snapshot index attaining the maximum edge count.
pub fn first_peak(g: &TemporalGraph) -> Result<usize, DynError> {
    let counts = g.edge_counts();
    let max = counts.iter().copied().max().ok_or(DynError::Empty)?;
    if max == 0 {
        return Err(DynError::NoEdges);
    }
    Ok(counts.iter().position(|&c| c == max).expect("max is attained"))
}

/// A walk's start node and its position after every step.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Walk {
    pub start: u32,
    pub trace: Vec<u32>,
}

impl Walk {
    /// Distinct nodes visited, start included.
    pub fn coverage(&self) -> usize {
        let mut seen: Vec<u32> = self.trace.clone();
        seen.push(self.start);
        seen.sort_unstable();
        seen.dedup();
        seen.len()
    }
}

/// One jump per snapshot from `t_start` to the end; a walker with no
/// neighbors waits in place.
pub fn random_walk<R: Rng + ?Sized>(g: &TemporalGraph, start: u32, t_start: usize, rng: &mut R) -> Walk {
    let mut at = start;
    let trace = (t_start..g.len())
        .map(|t| {
            let nbrs = g.snapshot(t).neighbors(at);
            if !nbrs.is_empty() {
                at = nbrs[rng.gen_range(0..nbrs.len())];
            }
            at
        })
        .collect();
    Walk { start, trace }
}

fn check_start(g: &TemporalGraph, t: usize) -> Result<(), DynError> {
    if t >= g.len() {
        Err(DynError::StartOutOfRange { t, len: g.len() })
    } else {
        Ok(())
    }
}

/// Walks from uniformly random start nodes.
pub fn walks(g: &TemporalGraph, cfg: &DynConfig) -> Result<Vec<Walk>, DynError> {
    cfg.validate()?;
    let t_start = cfg.start.resolve(g)?;
    check_start(g, t_start)?;
    let n = g.node_count() as u32;
    Ok(par::map_range(cfg.rw_runs, |run| {
        let mut rng = substream(cfg.seed, &[phase::WALK, t_start as u64, run as u64]);
        let start = rng.gen_range(0..n);
        random_walk(g, start, t_start, &mut rng)
    }))
}

pub fn coverage_distribution(g: &TemporalGraph, cfg: &DynConfig) -> Result<Vec<f64>, DynError> {
    Ok(walks(g, cfg)?.iter().map(|w| w.coverage() as f64).collect())
}

/// Mean distinct-visited count after each step, over a set of walks.
pub fn coverage_series(walks: &[Walk]) -> Vec<f64> {
    let steps = walks.iter().map(|w| w.trace.len()).max().unwrap_or(0);
    let mut sums = vec![0.0; steps + 1];
    for w in walks {
        let mut seen = std::collections::HashSet::new();
        seen.insert(w.start);
        sums[0] += 1.0;
        for (s, &v) in w.trace.iter().enumerate() {
            seen.insert(v);
            sums[s + 1] += seen.len() as f64;
        }
    }
    let n = walks.len().max(1) as f64;
    sums.into_iter().map(|x| x / n).collect()
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct MfptSamples {
    pub samples: Vec<f64>,
    /// Walks that never reached their target before the last snapshot.
    pub censored: usize,
}

/// Walks from `from` until `to` is first reached; the step number, if any.
fn first_hit<R: Rng + ?Sized>(g: &TemporalGraph, from: u32, to: u32, t_start: usize, rng: &mut R) -> Option<usize> {
    let mut at = from;
    for (step, t) in (t_start..g.len()).enumerate() {
        let nbrs = g.snapshot(t).neighbors(at);
        if !nbrs.is_empty() {
            at = nbrs[rng.gen_range(0..nbrs.len())];
        }
        if at == to {
            return Some(step + 1);
        }
    }
    None
}

/// First-passage times for every ordered pair of distinct nodes,
/// `mfpt_repeats` walks each. Censored walks are discarded and counted.
pub fn mfpt_distribution(g: &TemporalGraph, cfg: &DynConfig) -> Result<MfptSamples, DynError> {
    cfg.validate()?;
    let t_start = cfg.start.resolve(g)?;
    check_start(g, t_start)?;
    let n = g.node_count();
    let per_source = par::map_range(n, |from| {
        let mut hits = Vec::new();
        let mut censored = 0;
        for to in (0..n).filter(|&to| to != from) {
            for rep in 0..cfg.mfpt_repeats {
                let mut rng = substream(cfg.seed, &[phase::MFPT, t_start as u64, from as u64, to as u64, rep as u64]);
                match first_hit(g, from as u32, to as u32, t_start, &mut rng) {
                    Some(s) => hits.push(s as f64),
                    None => censored += 1,
                }
            }
        }
        (hits, censored)
    });
    let mut out = MfptSamples::default();
    for (hits, censored) in per_source {
        out.samples.extend(hits);
        out.censored += censored;
    }
    Ok(out)
}

/// Compartment sizes after one step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SirCounts {
    pub susceptible: usize,
    pub infected: usize,
    pub recovered: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SirRun {
    pub seed_node: u32,
    /// Nodes infected directly by the seed.
    pub r0: usize,
    pub series: Vec<SirCounts>,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum State {
    Susceptible,
    Infected,
    Recovered,
}

/// SIR from a single infected node at `t_start`. Within a step, nodes that
/// were infected at its beginning first try to infect each susceptible
/// neighbor (probability `lambda`), then recover (probability `mu`); nodes
/// infected during a step transmit from the next one.
pub fn sir_run<R: Rng + ?Sized>(g: &TemporalGraph, seed_node: u32, t_start: usize, lambda: f64, mu: f64, rng: &mut R) -> SirRun {
    let n = g.node_count();
    let mut state = vec![State::Susceptible; n];
    state[seed_node as usize] = State::Infected;
    let mut infected: Vec<u32> = vec![seed_node];
    let mut recovered = 0usize;
    let mut r0 = 0;
    let mut series = Vec::new();
    for t in t_start..g.len() {
        if infected.is_empty() {
            break;
        }
        let snapshot = g.snapshot(t);
        let mut fresh = Vec::new();
        for &v in &infected {
            for &u in snapshot.neighbors(v) {
                if state[u as usize] == State::Susceptible && rng.gen_bool(lambda) {
                    state[u as usize] = State::Infected;
                    fresh.push(u);
                    if v == seed_node {
                        r0 += 1;
                    }
                }
            }
        }
        infected.retain(|&v| {
            if rng.gen_bool(mu) {
                state[v as usize] = State::Recovered;
                recovered += 1;
                false
            } else {
                true
            }
        });
        infected.extend(fresh);
        series.push(SirCounts { susceptible: n - infected.len() - recovered, infected: infected.len(), recovered });
    }
    SirRun { seed_node, r0, series }
}

/// `sir_runs` epidemics seeded uniformly among nodes with an edge at the
/// start snapshot.
pub fn sir_runs(g: &TemporalGraph, cfg: &DynConfig) -> Result<Vec<SirRun>, DynError> {
    cfg.validate()?;
    let t_start = cfg.start.resolve(g)?;
    check_start(g, t_start)?;
    let s = g.snapshot(t_start);
    let connected: Vec<u32> = (0..g.node_count() as u32).filter(|&v| s.degree(v) > 0).collect();
    if connected.is_empty() {
        return Err(DynError::NoConnectedNode(t_start));
    }
    Ok(par::map_range(cfg.sir_runs, |run| {
        let mut rng = substream(cfg.seed, &[phase::SIR, t_start as u64, cfg.lambda.to_bits(), run as u64]);
        let seed_node = connected[rng.gen_range(0..connected.len())];
        sir_run(g, seed_node, t_start, cfg.lambda, cfg.mu, &mut rng)
    }))
}

pub fn sir_r0_distribution(g: &TemporalGraph, cfg: &DynConfig) -> Result<Vec<f64>, DynError> {
    Ok(sir_runs(g, cfg)?.iter().map(|r| r.r0 as f64).collect())
}

/// Mean infected count after each step.
pub fn infected_series(runs: &[SirRun]) -> Vec<f64> {
    let steps = runs.iter().map(|r| r.series.len()).max().unwrap_or(0);
    let mut sums = vec![0.0; steps];
    for r in runs {
        for (i, c) in r.series.iter().enumerate() {
            sums[i] += c.infected as f64;
        }
    }
    let n = runs.len().max(1) as f64;
    sums.into_iter().map(|x| x / n).collect()
}

/// Raw samples from every probe at one start policy.
#[derive(Debug, Clone, PartialEq)]
pub struct DynReport {
    pub start: StartPolicy,
    pub t_start: usize,
    pub coverage: Vec<f64>,
    pub coverage_series: Vec<f64>,
    pub mfpt: MfptSamples,
    /// `(lambda, R₀ samples, mean infected per step)`.
    pub r0: Vec<(f64, Vec<f64>, Vec<f64>)>,
}

/// Runs the random walk probes and SIR for every `lambda`.
pub fn run_probes(g: &TemporalGraph, cfg: &DynConfig, lambdas: &[f64], walk: bool, sir: bool) -> Result<DynReport, DynError> {
    cfg.validate()?;
    let t_start = cfg.start.resolve(g)?;
    let (coverage, coverage_series, mfpt) = if walk {
        let w = walks(g, cfg)?;
        (w.iter().map(|w| w.coverage() as f64).collect(), self::coverage_series(&w), mfpt_distribution(g, cfg)?)
    } else {
        (Vec::new(), Vec::new(), MfptSamples::default())
    };
    let mut r0 = Vec::new();
    if sir {
        for &lambda in lambdas {
            let runs = sir_runs(g, &DynConfig { lambda, ..cfg.clone() })?;
            r0.push((lambda, runs.iter().map(|r| r.r0 as f64).collect(), infected_series(&runs)));
        }
    }
    Ok(DynReport { start: cfg.start, t_start, coverage, coverage_series, mfpt, r0 })
}

impl DynReport {
    /// `probe,start,lambda,index,value` rows.
    pub fn write_samples_csv<W: Write>(&self, mut sink: W, header: bool) -> std::io::Result<()> {
        if header {
            writeln!(sink, "probe,start,lambda,index,value")?;
        }
        for (i, v) in self.coverage.iter().enumerate() {
            writeln!(sink, "coverage,{},,{i},{v}", self.start)?;
        }
        for (i, v) in self.mfpt.samples.iter().enumerate() {
            writeln!(sink, "mfpt,{},,{i},{v}", self.start)?;
        }
        for (lambda, samples, _) in &self.r0 {
            for (i, v) in samples.iter().enumerate() {
                writeln!(sink, "r0,{},{lambda},{i},{v}", self.start)?;
            }
        }
        Ok(())
    }

    /// `series,start,lambda,step,value` rows: mean visited and mean infected.
    pub fn write_series_csv<W: Write>(&self, mut sink: W, header: bool) -> std::io::Result<()> {
        if header {
            writeln!(sink, "series,start,lambda,step,value")?;
        }
        for (s, v) in self.coverage_series.iter().enumerate() {
            writeln!(sink, "visited,{},,{s},{v}", self.start)?;
        }
        for (lambda, _, series) in &self.r0 {
            for (s, v) in series.iter().enumerate() {
                writeln!(sink, "infected,{},{lambda},{},{v}", self.start, s + 1)?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::StreamRng;

    fn rng(seed: u64) -> StreamRng {
        substream(seed, &[7])
    }

    fn static_graph(n: usize, edges: &[(u32, u32)], m: usize) -> TemporalGraph {
        TemporalGraph::from_layers(n, &vec![edges.to_vec(); m], 300, 0).unwrap()
    }

    #[test]
    fn first_peak_examples() {
        let layers: Vec<Vec<(u32, u32)>> =
            [1usize, 3, 3, 2].iter().map(|&c| (0..c as u32).map(|i| (i, i + 1)).collect()).collect();
        let g = TemporalGraph::from_layers(5, &layers, 300, 0).unwrap();
        assert_eq!(first_peak(&g), Ok(1));
        assert_eq!(first_peak(&static_graph(2, &[(0, 1)], 1)), Ok(0));
        let rising: Vec<Vec<(u32, u32)>> = (0..4u32).map(|c| (0..c).map(|i| (i, i + 1)).collect()).collect();
        assert_eq!(first_peak(&TemporalGraph::from_layers(5, &rising, 300, 0).unwrap()), Ok(3));
        assert_eq!(first_peak(&static_graph(3, &[], 4)), Err(DynError::NoEdges));
    }

    #[test]
    fn forced_walks() {
        let g = static_graph(2, &[(0, 1)], 5);
        let w = random_walk(&g, 0, 0, &mut rng(0));
        assert_eq!(w.trace, vec![1, 0, 1, 0, 1]);

        let g = static_graph(3, &[(1, 2)], 5);
        let w = random_walk(&g, 0, 2, &mut rng(0));
        assert_eq!(w.trace, vec![0, 0, 0]);
        assert_eq!(w.coverage(), 1);

        let w = random_walk(&g, 0, 5, &mut rng(0));
        assert!(w.trace.is_empty());
        assert_eq!(w.coverage(), 1);
    }

    #[test]
    fn uniform_neighbor_choice() {
        let k4 = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];
        let g = static_graph(4, &k4, 1);
        let mut hits = [0usize; 4];
        let mut r = rng(3);
        for _ in 0..10_000 {
            hits[random_walk(&g, 0, 0, &mut r).trace[0] as usize] += 1;
        }
        assert_eq!(hits[0], 0);
        for &h in &hits[1..] {
            assert!((h as f64 / 10_000.0 - 1.0 / 3.0).abs() < 0.02);
        }
    }

    #[test]
    fn mfpt_on_a_single_edge() {
        let g = static_graph(2, &[(0, 1)], 4);
        let cfg = DynConfig { mfpt_repeats: 3, ..Default::default() };
        let m = mfpt_distribution(&g, &cfg).unwrap();
        assert_eq!(m.samples, vec![1.0; 6]);
        assert_eq!(m.censored, 0);

        let g = static_graph(4, &[(0, 1), (2, 3)], 4);
        let m = mfpt_distribution(&g, &cfg).unwrap();
        assert_eq!(m.samples.len(), 4 * 3);
        assert_eq!(m.censored, 8 * 3);
    }

    #[test]
    fn sir_examples() {
        let star = static_graph(4, &[(0, 1), (0, 2), (0, 3)], 5);
        for seed in 0..20 {
            let run = sir_run(&star, 0, 0, 1.0, 1.0, &mut rng(seed));
            assert_eq!(run.r0, 3);
        }
        let cfg = DynConfig { lambda: 0.0, ..Default::default() };
        assert!(sir_r0_distribution(&star, &cfg).unwrap().iter().all(|&r| r == 0.0));

        let quiet = static_graph(3, &[], 3);
        assert_eq!(sir_runs(&quiet, &DynConfig::default()).unwrap_err(), DynError::NoConnectedNode(0));
        let late = TemporalGraph::from_layers(3, &[vec![], vec![(0, 1)]], 300, 0).unwrap();
        assert_eq!(sir_runs(&late, &DynConfig::default()).unwrap_err(), DynError::NoConnectedNode(0));
    }

    #[test]
    fn sir_compartments_are_conserved() {
        let layers: Vec<Vec<(u32, u32)>> = (0..40u32).map(|t| vec![(t % 7, (t + 3) % 7), (1, 2), (4, (t % 3) + 5)]).collect();
        let g = TemporalGraph::from_layers(8, &layers, 300, 0).unwrap();
        for seed in 0..30 {
            let run = sir_run(&g, 1, 0, 0.6, 0.2, &mut rng(seed));
            let mut last_r = 0;
            for c in &run.series {
                assert_eq!(c.susceptible + c.infected + c.recovered, 8);
                assert!(c.recovered >= last_r);
                last_r = c.recovered;
            }
        }
    }

    #[test]
    fn probes_are_reproducible() {
        let g = static_graph(5, &[(0, 1), (1, 2), (2, 3), (3, 4)], 10);
        let cfg = DynConfig { rw_runs: 50, sir_runs: 20, ..Default::default() };
        let a = run_probes(&g, &cfg, &[0.25, 0.01], true, true).unwrap();
        let b = run_probes(&g, &cfg, &[0.25, 0.01], true, true).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.coverage.len(), 50);
        assert_eq!(a.r0.len(), 2);
        let mut out = Vec::new();
        a.write_samples_csv(&mut out, true).unwrap();
        a.write_series_csv(&mut out, true).unwrap();
        assert!(String::from_utf8(out).unwrap().contains("r0,t0,0.25,0,"));
    }
}
