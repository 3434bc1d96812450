//! Distances between two empirical samples.

use thiserror::Error;

/// Histogram resolution for the KL and JS divergences.
pub const HISTOGRAM_BINS: usize = 100;
/// Additive smoothing applied to every histogram bin.
pub const SMOOTHING: f64 = 1e-10;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum DistanceError {
    #[error("distance between empty samples")]
    Empty,
}

fn sorted(values: &[f64]) -> Vec<f64> {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

fn check(a: &[f64], b: &[f64]) -> Result<(), DistanceError> {
    if a.is_empty() || b.is_empty() {
        Err(DistanceError::Empty)
    } else {
        Ok(())
    }
}

/// Walks the merged support in increasing order, calling `f(x, next_x, Fa(x), Fb(x))`
/// after all samples equal to `x` have been absorbed.
fn walk_cdfs(a: &[f64], b: &[f64], mut f: impl FnMut(f64, Option<f64>, f64, f64)) {
    let (a, b) = (sorted(a), sorted(b));
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    while i < a.len() || j < b.len() {
        let x = match (a.get(i), b.get(j)) {
            (Some(&p), Some(&q)) => p.min(q),
            (Some(&p), None) => p,
            (None, Some(&q)) => q,
            (None, None) => unreachable!(),
        };
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        let next = match (a.get(i), b.get(j)) {
            (Some(&p), Some(&q)) => Some(p.min(q)),
            (Some(&p), None) => Some(p),
            (None, Some(&q)) => Some(q),
            (None, None) => None,
        };
        f(x, next, i as f64 / na, j as f64 / nb);
    }
}

/// Two-sample Kolmogorov–Smirnov statistic `sup |Fa − Fb|`.
pub fn ks_distance(a: &[f64], b: &[f64]) -> Result<f64, DistanceError> {
    check(a, b)?;
    let mut best = 0.0f64;
    walk_cdfs(a, b, |_, _, fa, fb| best = best.max((fa - fb).abs()));
    Ok(best)
}

/// 1-D Wasserstein-1 distance `∫ |Fa − Fb| dx`.
pub fn emd(a: &[f64], b: &[f64]) -> Result<f64, DistanceError> {
    check(a, b)?;
    let mut total = 0.0;
    walk_cdfs(a, b, |x, next, fa, fb| {
        if let Some(nx) = next {
            total += (fa - fb).abs() * (nx - x);
        }
    });
    Ok(total)
}

/// Smoothed histograms of both samples over their joint range. `None` when
/// the joint range is a single point.
fn histograms(a: &[f64], b: &[f64]) -> Option<(Vec<f64>, Vec<f64>)> {
    let lo = a.iter().chain(b).copied().fold(f64::INFINITY, f64::min);
    let hi = a.iter().chain(b).copied().fold(f64::NEG_INFINITY, f64::max);
    if hi <= lo {
        return None;
    }
    let hist = |values: &[f64]| {
        let mut counts = vec![0.0; HISTOGRAM_BINS];
        for &x in values {
            let bin = (((x - lo) / (hi - lo)) * HISTOGRAM_BINS as f64) as usize;
            counts[bin.min(HISTOGRAM_BINS - 1)] += 1.0;
        }
        let n = values.len() as f64;
        let smoothed: Vec<f64> = counts.iter().map(|c| c / n + SMOOTHING).collect();
        let z: f64 = smoothed.iter().sum();
        smoothed.into_iter().map(|p| p / z).collect::<Vec<f64>>()
    };
    Some((hist(a), hist(b)))
}

fn kl(p: &[f64], q: &[f64]) -> f64 {
    p.iter().zip(q).map(|(&pi, &qi)| pi * (pi / qi).ln()).sum::<f64>().max(0.0)
}

/// `KL(a ‖ b)` in nats on shared-support histograms.
pub fn kl_divergence(a: &[f64], b: &[f64]) -> Result<f64, DistanceError> {
    check(a, b)?;
    Ok(histograms(a, b).map_or(0.0, |(p, q)| kl(&p, &q)))
}

/// Jensen–Shannon divergence in nats; lies in `[0, ln 2]`.
pub fn js_divergence(a: &[f64], b: &[f64]) -> Result<f64, DistanceError> {
    check(a, b)?;
    Ok(histograms(a, b).map_or(0.0, |(p, q)| {
        let m: Vec<f64> = p.iter().zip(&q).map(|(x, y)| 0.5 * (x + y)).collect();
        (0.5 * kl(&p, &m) + 0.5 * kl(&q, &m)).min(std::f64::consts::LN_2)
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ks_fixtures() {
        let a = [0.3, 1.0, 7.0];
        assert_eq!(ks_distance(&a, &a).unwrap(), 0.0);
        assert_eq!(ks_distance(&[0.0; 5], &[1.0; 3]).unwrap(), 1.0);
        assert_eq!(ks_distance(&[1.0, 2.0], &[1.0, 1.0]).unwrap(), 0.5);
        assert_eq!(ks_distance(&[], &a), Err(DistanceError::Empty));
    }

    #[test]
    fn identical_samples_have_zero_divergence() {
        let a = [1.0, 2.0, 2.0, 5.0];
        assert_eq!(emd(&a, &a).unwrap(), 0.0);
        assert!(kl_divergence(&a, &a).unwrap().abs() < 1e-12);
        assert!(js_divergence(&a, &a).unwrap().abs() < 1e-12);
        assert_eq!(js_divergence(&[3.0], &[3.0, 3.0]).unwrap(), 0.0);
    }

    #[test]
    fn emd_moves_mass() {
        assert!((emd(&[0.0, 1.0], &[0.0, 0.0]).unwrap() - 0.5).abs() < 1e-12);
        assert!((emd(&[0.0], &[3.0]).unwrap() - 3.0).abs() < 1e-12);
        assert!((emd(&[0.0, 2.0], &[1.0]).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn disjoint_histograms_saturate_js() {
        let js = js_divergence(&[0.0; 10], &[1.0; 10]).unwrap();
        assert!((js - std::f64::consts::LN_2).abs() < 1e-6);
        assert!(kl_divergence(&[0.0; 10], &[1.0; 10]).unwrap() > 10.0);
    }
}
