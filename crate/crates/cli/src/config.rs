//! Flag values merged over an optional TOML file: flag, then file, then the
//! built-in default.

use std::path::Path;

use etngen::dynamics::StartPolicy;
use etngen::metrics::DistanceKind;
use serde::Deserialize;

use crate::args::{Alpha, EvalOpts, FitOpts, GenOpts, PeriodicityArg, Probe};
use crate::error::{CliError, CliResult};

pub const DEFAULT_GAP: u64 = 300;
pub const DEFAULT_K: usize = 2;
pub const DEFAULT_ALPHA: f64 = 0.5;
pub const DEFAULT_LAMBDAS: [f64; 3] = [0.25, 0.13, 0.01];

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub threads: Option<u32>,
    pub seed: Option<u64>,
    pub gap: Option<u64>,
    pub k: Option<usize>,
    pub periodicity: Option<PeriodicityArg>,
    pub nodes: Option<usize>,
    pub snapshots: Option<usize>,
    /// A number or "auto".
    pub alpha: Option<toml::Value>,
    pub seed_degrees: Option<String>,
    pub resample_degrees: Option<bool>,
    pub starts: Option<Vec<String>>,
    pub distances: Option<Vec<String>>,
    pub dynamics: Option<Vec<Probe>>,
    pub lambda: Option<Vec<f64>>,
    pub mu: Option<f64>,
    pub rw_runs: Option<usize>,
    pub mfpt_repeats: Option<usize>,
    pub sir_runs: Option<usize>,
    pub stability: Option<bool>,
}

impl FileConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::input(path, e))?;
        toml::from_str(&text).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))
    }

    fn alpha(&self) -> CliResult<Option<Alpha>> {
        match &self.alpha {
            None => Ok(None),
            Some(toml::Value::String(s)) => s.parse().map(Some).map_err(|e| CliError::usage(format!("config alpha: {e}"))),
            Some(toml::Value::Float(a)) => a.to_string().parse().map(Some).map_err(|e| CliError::usage(format!("config alpha: {e}"))),
            Some(toml::Value::Integer(a)) => a.to_string().parse().map(Some).map_err(|e| CliError::usage(format!("config alpha: {e}"))),
            Some(other) => Err(CliError::usage(format!("config alpha: expected a number or \"auto\", got {other}"))),
        }
    }
}

fn parse_list<T: std::str::FromStr<Err = String>>(items: &[String], what: &str) -> CliResult<Vec<T>> {
    items.iter().map(|s| s.parse().map_err(|e| CliError::usage(format!("config {what}: {e}")))).collect()
}

#[derive(Debug, Clone)]
pub struct FitSettings {
    pub gap: u64,
    pub k: usize,
    pub periodicity: PeriodicityArg,
}

impl FitSettings {
    pub fn resolve(opts: &FitOpts, file: &FileConfig) -> CliResult<Self> {
        let k = opts.k.map(|k| k as usize).or(file.k).unwrap_or(DEFAULT_K);
        if !(1..etngen::etn::MAX_WIDTH).contains(&k) {
            return Err(CliError::usage(format!("k must lie in 1..{}, got {k}", etngen::etn::MAX_WIDTH)));
        }
        Ok(FitSettings {
            gap: gap(opts.gap, file)?,
            k,
            periodicity: opts.periodicity.or(file.periodicity).unwrap_or(PeriodicityArg::Auto),
        })
    }
}

pub fn gap(flag: Option<u64>, file: &FileConfig) -> CliResult<u64> {
    let gap = flag.or(file.gap).unwrap_or(DEFAULT_GAP);
    if gap == 0 {
        return Err(CliError::usage("gap must be positive"));
    }
    Ok(gap)
}

#[derive(Debug, Clone)]
pub struct GenSettings {
    pub nodes: Option<usize>,
    pub snapshots: Option<usize>,
    pub alpha: Alpha,
    pub seed: u64,
    pub seed_degrees: Option<std::path::PathBuf>,
    pub resample_degrees: bool,
}

impl GenSettings {
    pub fn resolve(opts: &GenOpts, file: &FileConfig) -> CliResult<Self> {
        Ok(GenSettings {
            nodes: opts.nodes.or(file.nodes),
            snapshots: opts.snapshots.or(file.snapshots),
            alpha: match opts.alpha {
                Some(a) => a,
                None => file.alpha()?.unwrap_or(Alpha::Fixed(DEFAULT_ALPHA)),
            },
            seed: opts.seed.or(file.seed).unwrap_or(0),
            seed_degrees: opts.seed_degrees.clone().or_else(|| file.seed_degrees.as_ref().map(Into::into)),
            resample_degrees: opts.resample_degrees || file.resample_degrees.unwrap_or(false),
        })
    }
}

#[derive(Debug, Clone)]
pub struct EvalSettings {
    pub starts: Vec<StartPolicy>,
    pub distances: Vec<DistanceKind>,
    pub walk: bool,
    pub sir: bool,
    pub lambdas: Vec<f64>,
    pub mu: f64,
    pub rw_runs: usize,
    pub mfpt_repeats: usize,
    pub sir_runs: usize,
    pub seed: u64,
    pub stability: bool,
}

impl EvalSettings {
    pub fn resolve(opts: &EvalOpts, seed: Option<u64>, file: &FileConfig) -> CliResult<Self> {
        let starts = match (&opts.starts, &file.starts) {
            (Some(s), _) => s.clone(),
            (None, Some(s)) => parse_list(s, "starts")?,
            (None, None) => StartPolicy::ALL.to_vec(),
        };
        let distances = match (&opts.distances, &file.distances) {
            (Some(d), _) => d.clone(),
            (None, Some(d)) => parse_list(d, "distances")?,
            (None, None) => DistanceKind::ALL.to_vec(),
        };
        let probes = opts.dynamics.clone().or_else(|| file.dynamics.clone()).unwrap_or_else(|| vec![Probe::Rw, Probe::Sir]);
        let defaults = etngen::dynamics::DynConfig::default();
        let settings = EvalSettings {
            starts,
            distances,
            walk: probes.contains(&Probe::Rw),
            sir: probes.contains(&Probe::Sir),
            lambdas: opts.lambda.clone().or_else(|| file.lambda.clone()).unwrap_or_else(|| DEFAULT_LAMBDAS.to_vec()),
            mu: opts.mu.or(file.mu).unwrap_or(defaults.mu),
            rw_runs: opts.rw_runs.or(file.rw_runs).unwrap_or(defaults.rw_runs),
            mfpt_repeats: opts.mfpt_repeats.or(file.mfpt_repeats).unwrap_or(defaults.mfpt_repeats),
            sir_runs: opts.sir_runs.or(file.sir_runs).unwrap_or(defaults.sir_runs),
            seed: seed.or(file.seed).unwrap_or(0),
            stability: opts.stability || file.stability.unwrap_or(false),
        };
        if let Some(l) = settings.lambdas.iter().find(|l| !(0.0..=1.0).contains(*l)) {
            return Err(CliError::usage(format!("lambda must lie in [0, 1], got {l}")));
        }
        Ok(settings)
    }

    pub fn dyn_config(&self, start: StartPolicy) -> etngen::dynamics::DynConfig {
        etngen::dynamics::DynConfig {
            start,
            rw_runs: self.rw_runs,
            mfpt_repeats: self.mfpt_repeats,
            sir_runs: self.sir_runs,
            lambda: self.lambdas.first().copied().unwrap_or(DEFAULT_LAMBDAS[0]),
            mu: self.mu,
            seed: self.seed,
        }
    }
}
