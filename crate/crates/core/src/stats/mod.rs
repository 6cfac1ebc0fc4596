//! Replicated experiments and the fits run on their output.
//!
//! Every estimator derives one random stream per replication from
//! `(seed, estimator tag, replication index, ..)`, runs replications on the
//! rayon pool and collects them in index order, so results do not depend on
//! the number of worker threads.

pub mod ballot;
pub mod clt;
pub mod escape;
pub mod fpt;
pub mod frontier;
pub mod maxima;
pub mod twodesc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::engine::{Brw, PrunePolicy, Target};
use crate::error::{Error, Result};
use crate::laws::{IncrementLaw, OffspringLaw};
use crate::ratefn::{solve_constants, Asymptote};
use crate::rng::RandomStream;

pub const BOOTSTRAP_RESAMPLES: usize = 1000;

/// Top-level stream labels, one per estimator.
pub(crate) mod tag {
    pub const FPT: u64 = 1;
    pub const MAXIMA: u64 = 2;
    pub const CLT: u64 = 3;
    pub const TWO_DESCENDANTS: u64 = 4;
    pub const ESCAPE: u64 = 5;
    pub const BALLOT: u64 = 6;
    pub const FRONTIER: u64 = 7;
    pub const BOOTSTRAP: u64 = 99;
}

/// Laws together with their solved constants.
#[derive(Debug, Clone)]
pub struct Model {
    pub increment: IncrementLaw,
    pub offspring: OffspringLaw,
    pub asymptote: Asymptote,
}

impl Model {
    pub fn new(increment: IncrementLaw, offspring: OffspringLaw) -> Result<Self> {
        let constants = solve_constants(&increment, &offspring)?;
        Ok(Self {
            increment,
            offspring,
            asymptote: Asymptote::new(constants),
        })
    }

    pub fn dimension(&self) -> usize {
        self.increment.dimension()
    }

    pub fn brw(&self, policy: PrunePolicy) -> Brw<'_> {
        Brw::new(&self.increment, &self.offspring, policy, self.asymptote.pivot()).expect("pivot is a unit vector of the law's dimension")
    }

    /// Frontier pruning tuned by the pivot tilt.
    pub fn frontier_policy(&self, capacity: usize) -> PrunePolicy {
        PrunePolicy::frontier(self.asymptote.pivot_tilt(), capacity)
    }
}

/// Simulation knobs shared by the branching estimators.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSettings {
    pub seed: u64,
    pub replications: usize,
    pub horizon: u32,
    pub policy: PrunePolicy,
    pub max_restarts: usize,
    /// Radius of the target balls.
    pub target_radius: f64,
}

impl RunSettings {
    /// Ball of radius `target_radius` around `x e1`.
    pub fn target(&self, dimension: usize, x: f64) -> Result<Target> {
        let mut center = vec![0.0; dimension];
        center[0] = x;
        Target::new(center, self.target_radius)
    }
}

/// JSON summary of one estimator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub estimate: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub target: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl Summary {
    /// `pass` when `|estimate − target| <= tolerance · |target|`.
    pub fn relative(estimate: f64, ci: (f64, f64), target: f64, tolerance: f64) -> Self {
        Self {
            estimate,
            ci_low: ci.0,
            ci_high: ci.1,
            target,
            tolerance,
            pass: (estimate - target).abs() <= tolerance * target.abs(),
        }
    }

    /// `pass` when `|estimate − target| <= tolerance`.
    pub fn absolute(estimate: f64, ci: (f64, f64), target: f64, tolerance: f64) -> Self {
        Self {
            estimate,
            ci_low: ci.0,
            ci_high: ci.1,
            target,
            tolerance,
            pass: (estimate - target).abs() <= tolerance,
        }
    }
}

/// Least-squares line `y = slope · x + intercept`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub x_min: f64,
    pub x_max: f64,
    pub points: usize,
}

pub fn fit_line(xs: &[f64], ys: &[f64]) -> Result<TailFit> {
    assert_eq!(xs.len(), ys.len());
    let n = xs.len();
    if n < 2 {
        return Err(Error::InsufficientEvents {
            what: "points for a line fit".into(),
            found: n,
            needed: 2,
        });
    }
    let mx = xs.iter().sum::<f64>() / n as f64;
    let my = ys.iter().sum::<f64>() / n as f64;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    if sxx <= 0.0 {
        return Err(Error::InvalidArgument("line fit needs distinct abscissae".into()));
    }
    let slope = sxy / sxx;
    let r_squared = if syy > 0.0 { (sxy * sxy / (sxx * syy)).clamp(0.0, 1.0) } else { 1.0 };
    Ok(TailFit {
        slope,
        intercept: my - slope * mx,
        r_squared,
        x_min: xs.iter().copied().fold(f64::INFINITY, f64::min),
        x_max: xs.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        points: n,
    })
}

/// Ordinary least squares on the columns of `design` (row-major, `k` per row).
pub fn least_squares(design: &[f64], k: usize, ys: &[f64]) -> Result<Vec<f64>> {
    let n = ys.len();
    assert_eq!(design.len(), n * k);
    if n < k {
        return Err(Error::InsufficientEvents {
            what: "points for a regression".into(),
            found: n,
            needed: k,
        });
    }
    let mut a = vec![0.0; k * k];
    let mut b = vec![0.0; k];
    for r in 0..n {
        let row = &design[r * k..(r + 1) * k];
        for i in 0..k {
            b[i] += row[i] * ys[r];
            for j in 0..k {
                a[i * k + j] += row[i] * row[j];
            }
        }
    }
    // Cholesky of the normal matrix
    let mut l = vec![0.0; k * k];
    for i in 0..k {
        for j in 0..=i {
            let s: f64 = (0..j).map(|p| l[i * k + p] * l[j * k + p]).sum();
            if i == j {
                let v = a[i * k + i] - s;
                if v <= 1e-300 {
                    return Err(Error::InvalidArgument("singular regression design".into()));
                }
                l[i * k + i] = v.sqrt();
            } else {
                l[i * k + j] = (a[i * k + j] - s) / l[j * k + j];
            }
        }
    }
    let mut z = vec![0.0; k];
    for i in 0..k {
        let s: f64 = (0..i).map(|p| l[i * k + p] * z[p]).sum();
        z[i] = (b[i] - s) / l[i * k + i];
    }
    let mut x = vec![0.0; k];
    for i in (0..k).rev() {
        let s: f64 = (i + 1..k).map(|p| l[p * k + i] * x[p]).sum();
        x[i] = (z[i] - s) / l[i * k + i];
    }
    Ok(x)
}

/// Linear-interpolation quantile of sorted data.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty(), "quantile of empty sample");
    let h = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn quantile(values: &[f64], q: f64) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    quantile_sorted(&v, q)
}

pub fn median(values: &[f64]) -> f64 {
    quantile(values, 0.5)
}

pub fn iqr(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    quantile_sorted(&v, 0.75) - quantile_sorted(&v, 0.25)
}

/// Quantile of integer data treated as grouped on unit cells
/// `[k − ½, k + ½)`: `k − ½ + (qN − #{< k}) / #{= k}` for the cell `k`
/// holding the `qN`-th observation.
pub fn grouped_quantile(values: &[u32], q: f64) -> f64 {
    assert!(!values.is_empty(), "quantile of empty sample");
    let mut v = values.to_vec();
    v.sort_unstable();
    let target = q.clamp(0.0, 1.0) * v.len() as f64;
    let pos = (target.ceil() as usize).clamp(1, v.len()) - 1;
    let k = v[pos];
    let below = v.partition_point(|&t| t < k) as f64;
    let at = (v.partition_point(|&t| t <= k) as f64) - below;
    k as f64 - 0.5 + (target - below) / at
}

pub fn grouped_median(values: &[u32]) -> f64 {
    grouped_quantile(values, 0.5)
}

pub fn grouped_iqr(values: &[u32]) -> f64 {
    grouped_quantile(values, 0.75) - grouped_quantile(values, 0.25)
}

/// Runs `f(i)` for `i in 0..n` on the pool; results in index order.
pub fn par_map<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    (0..n).into_par_iter().map(f).collect()
}

/// Fallible [`par_map`]; the error of the lowest failing index wins.
pub fn try_par_map<T, F>(n: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> Result<T> + Sync + Send,
{
    par_map(n, f).into_iter().collect()
}

/// Percentile bootstrap over replication indices. `stat` receives a
/// resampled index multiset and may decline with `None`. The interval is
/// widened to contain `point` if needed.
pub fn bootstrap_ci<F>(n: usize, seed: u64, point: f64, stat: F) -> (f64, f64)
where
    F: Fn(&[usize]) -> Option<f64> + Sync + Send,
{
    bootstrap_ci_with(n, seed, BOOTSTRAP_RESAMPLES, 0.95, point, stat)
}

pub fn bootstrap_ci_with<F>(n: usize, seed: u64, resamples: usize, level: f64, point: f64, stat: F) -> (f64, f64)
where
    F: Fn(&[usize]) -> Option<f64> + Sync + Send,
{
    if n == 0 {
        return (point, point);
    }
    let values: Vec<f64> = par_map(resamples, |b| {
        let mut rng = RandomStream::derive(seed, &[tag::BOOTSTRAP, b as u64]);
        let idx: Vec<usize> = (0..n).map(|_| ((rng.uniform() * n as f64) as usize).min(n - 1)).collect();
        stat(&idx)
    })
    .into_iter()
    .flatten()
    .filter(|v| v.is_finite())
    .collect();
    if values.is_empty() {
        return (point, point);
    }
    let mut v = values;
    v.sort_by(f64::total_cmp);
    let alpha = (1.0 - level) / 2.0;
    let lo = quantile_sorted(&v, alpha).min(point);
    let hi = quantile_sorted(&v, 1.0 - alpha).max(point);
    (lo, hi)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn line_fit_recovers_exact_line() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        let ys: Vec<f64> = xs.iter().map(|x| 2.5 - 0.75 * x).collect();
        let f = fit_line(&xs, &ys).unwrap();
        assert!((f.slope + 0.75).abs() < 1e-12 && (f.intercept - 2.5).abs() < 1e-12);
        assert!((f.r_squared - 1.0).abs() < 1e-12);
        assert!(fit_line(&[1.0], &[2.0]).is_err());
    }

    #[test]
    fn least_squares_two_regressors() {
        let xs = [20.0, 30.0, 45.0, 65.0, 95.0];
        let mut design = Vec::new();
        let mut ys = Vec::new();
        for &x in &xs {
            design.extend_from_slice(&[x, f64::ln(x), 1.0]);
            ys.push(0.85 * x + 1.44 * f64::ln(x) - 3.0);
        }
        let beta = least_squares(&design, 3, &ys).unwrap();
        assert!((beta[0] - 0.85).abs() < 1e-9 && (beta[1] - 1.44).abs() < 1e-8 && (beta[2] + 3.0).abs() < 1e-7);
    }

    #[test]
    fn quantiles() {
        let v = [3.0, 1.0, 2.0, 4.0];
        assert_eq!(median(&v), 2.5);
        assert_eq!(iqr(&v), 1.5);
        assert_eq!(quantile(&v, 0.0), 1.0);
    }

    #[test]
    fn grouped_median_interpolates_ties() {
        assert_eq!(grouped_median(&[5, 5, 5, 5]), 5.0);
        // 2 below 6, 2 at 6 -> 6 - 0.5 + (2 - 2)/2 = 5.5
        assert_eq!(grouped_median(&[5, 5, 6, 6]), 5.5);
        assert_eq!(grouped_median(&[4, 6, 6, 6]), 5.5 + 1.0 / 3.0);
        assert_eq!(grouped_median(&[1, 2, 3]), 2.0);
        assert_eq!(grouped_iqr(&[1, 2, 3, 4]), 2.0);
    }

    #[test]
    fn bootstrap_is_deterministic_and_contains_point() {
        let data: Vec<f64> = (0..200).map(|i| (i as f64 * 0.37).sin()).collect();
        let point = data.iter().sum::<f64>() / 200.0;
        let stat = |idx: &[usize]| Some(idx.iter().map(|&i| data[i]).sum::<f64>() / idx.len() as f64);
        let a = bootstrap_ci(200, 11, point, stat);
        let b = bootstrap_ci(200, 11, point, stat);
        assert_eq!(a, b);
        assert!(a.0 <= point && point <= a.1 && a.0 < a.1);
    }
}
