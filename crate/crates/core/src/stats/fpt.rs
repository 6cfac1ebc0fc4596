//! First-passage sweeps and concentration of the first passage time.

use serde::{Deserialize, Serialize};

use super::{bootstrap_ci, fit_line, grouped_iqr, grouped_median, least_squares, tag, try_par_map, Model, RunSettings, Summary, TailFit};
use crate::engine::{run_conditioned_on_survival, MultiOutcome, Target};
use crate::error::{Error, Result};

pub const MIN_HITS: usize = 50;

/// One conditioned replication: first-passage generation per target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FptSample {
    pub taus: Vec<Option<u32>>,
    pub restarts: usize,
    pub dropped: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FptPoint {
    pub x: f64,
    pub hits: usize,
    pub t_x: f64,
    pub median: f64,
    /// Interquartile range of `τ − t_x`.
    pub iqr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FptSweep {
    pub x_grid: Vec<f64>,
    pub samples: Vec<FptSample>,
    pub points: Vec<FptPoint>,
    /// Slope of `median(τ) − x / c1` against `log x`; `None` with fewer than two targets.
    pub log_correction: Option<Summary>,
    /// Coefficient of `x` in `median(τ) ≈ a x + b log x + c`; needs three targets.
    pub inverse_speed: Option<Summary>,
    /// Number of grid steps where the IQR of `τ − t_x` increases.
    pub iqr_increases: usize,
}

/// Runs conditioned replications recording the first passage into the unit
/// ball around `x e1` for every `x` of the grid at once.
pub fn collect_first_passages(model: &Model, settings: &RunSettings, x_grid: &[f64]) -> Result<Vec<FptSample>> {
    let d = model.dimension();
    let targets: Vec<Target> = x_grid.iter().map(|&x| settings.target(d, x)).collect::<Result<_>>()?;
    let brw = model.brw(settings.policy.clone());
    try_par_map(settings.replications, |rep| {
        let out: MultiOutcome = run_conditioned_on_survival(
            settings.seed,
            &[tag::FPT, rep as u64],
            settings.max_restarts,
            |rng| brw.run_first_passage_multi(&targets, settings.horizon, rng),
        )?;
        Ok(FptSample {
            taus: out.taus,
            restarts: out.restarts,
            dropped: out.arena.prune_log().iter().map(|r| r.dropped()).sum(),
        })
    })
}

fn taus_at(samples: &[FptSample], idx: impl Iterator<Item = usize>, j: usize) -> Vec<u32> {
    idx.filter_map(|i| samples[i].taus[j]).collect()
}

/// Medians per target over the replications `idx`.
fn medians(samples: &[FptSample], idx: &[usize], targets: usize) -> Option<Vec<f64>> {
    (0..targets)
        .map(|j| {
            let t = taus_at(samples, idx.iter().copied(), j);
            (!t.is_empty()).then(|| grouped_median(&t))
        })
        .collect()
}

fn log_slope(model: &Model, x_grid: &[f64], med: &[f64]) -> Option<f64> {
    let speed = model.asymptote.fpt_speed();
    let xs: Vec<f64> = x_grid.iter().map(|x| x.ln()).collect();
    let ys: Vec<f64> = x_grid.iter().zip(med).map(|(x, m)| m - x / speed).collect();
    fit_line(&xs, &ys).ok().map(|f| f.slope)
}

fn speed_coefficient(x_grid: &[f64], med: &[f64]) -> Option<f64> {
    let design: Vec<f64> = x_grid.iter().flat_map(|&x| [x, x.ln(), 1.0]).collect();
    least_squares(&design, 3, med).ok().map(|b| b[0])
}

pub fn fpt_sweep(model: &Model, settings: &RunSettings, x_grid: &[f64]) -> Result<FptSweep> {
    let samples = collect_first_passages(model, settings, x_grid)?;
    summarize_sweep(model, settings.seed, x_grid, samples)
}

/// Medians, IQRs and the two regressions, from raw samples.
pub fn summarize_sweep(model: &Model, seed: u64, x_grid: &[f64], samples: Vec<FptSample>) -> Result<FptSweep> {
    let a = &model.asymptote;
    let all: Vec<usize> = (0..samples.len()).collect();
    let mut points = Vec::with_capacity(x_grid.len());
    for (j, &x) in x_grid.iter().enumerate() {
        let taus = taus_at(&samples, all.iter().copied(), j);
        if taus.len() < MIN_HITS {
            return Err(Error::InsufficientHits {
                x,
                found: taus.len(),
                needed: MIN_HITS,
            });
        }
        points.push(FptPoint {
            x,
            hits: taus.len(),
            t_x: a.t_of_x(x),
            median: grouped_median(&taus),
            iqr: grouped_iqr(&taus),
        });
    }
    let med: Vec<f64> = points.iter().map(|p| p.median).collect();
    let k = x_grid.len();

    let log_correction = (k >= 2).then(|| {
        let est = log_slope(model, x_grid, &med).unwrap_or(f64::NAN);
        let ci = bootstrap_ci(samples.len(), seed, est, |idx| {
            medians(&samples, idx, k).and_then(|m| log_slope(model, x_grid, &m))
        });
        Summary::relative(est, ci, a.log_coefficient(), 0.35)
    });
    let inverse_speed = (k >= 3).then(|| {
        let est = speed_coefficient(x_grid, &med).unwrap_or(f64::NAN);
        let ci = bootstrap_ci(samples.len(), seed ^ 0x5eed, est, |idx| {
            medians(&samples, idx, k).and_then(|m| speed_coefficient(x_grid, &m))
        });
        Summary::relative(est, ci, 1.0 / a.fpt_speed(), 0.05)
    });
    let iqr_increases = points.windows(2).filter(|w| w[1].iqr > w[0].iqr).count();
    Ok(FptSweep {
        x_grid: x_grid.to_vec(),
        samples,
        points,
        log_correction,
        inverse_speed,
        iqr_increases,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Concentration {
    pub x: f64,
    pub taus: Vec<u32>,
    pub median: f64,
    /// `(y, P(|τ − median| > y))` on the fitted range.
    pub exceedance: Vec<(f64, f64)>,
    /// Fit of `log P(|τ − median| > y)` against `y`.
    pub fit: TailFit,
}

/// Smallest exceedance count kept in the tail fit.
pub const MIN_TAIL_EVENTS: usize = 5;

/// Tail of `|τ − median|` at one target, fitted on a log scale.
pub fn concentration_fit(model: &Model, settings: &RunSettings, x: f64) -> Result<Concentration> {
    let samples = collect_first_passages(model, settings, &[x])?;
    let taus: Vec<u32> = samples.iter().filter_map(|s| s.taus[0]).collect();
    concentration_from_taus(x, taus)
}

pub fn concentration_from_taus(x: f64, taus: Vec<u32>) -> Result<Concentration> {
    if taus.len() < MIN_HITS {
        return Err(Error::InsufficientHits {
            x,
            found: taus.len(),
            needed: MIN_HITS,
        });
    }
    let med = grouped_median(&taus);
    let n = taus.len() as f64;
    let mut exceedance = Vec::new();
    let mut y = 0.0;
    loop {
        let count = taus.iter().filter(|&&t| (t as f64 - med).abs() > y).count();
        if count < MIN_TAIL_EVENTS {
            break;
        }
        exceedance.push((y, count as f64 / n));
        y += 1.0;
    }
    let xs: Vec<f64> = exceedance.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = exceedance.iter().map(|p| p.1.ln()).collect();
    let fit = fit_line(&xs, &ys).map_err(|_| Error::InsufficientHits {
        x,
        found: taus.len(),
        needed: MIN_HITS,
    })?;
    Ok(Concentration {
        x,
        taus,
        median: med,
        exceedance,
        fit,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::PrunePolicy;
    use crate::laws::{IncrementLaw, OffspringLaw};

    fn model(d: usize) -> Model {
        Model::new(IncrementLaw::isotropic_gaussian(d, 1.0).unwrap(), OffspringLaw::deterministic(2)).unwrap()
    }

    #[test]
    fn single_target_reports_medians_only() {
        let m = model(1);
        let settings = RunSettings {
            seed: 3,
            replications: 60,
            horizon: 40,
            policy: m.frontier_policy(2000),
            max_restarts: 10,
            target_radius: 1.0,
        };
        let sweep = fpt_sweep(&m, &settings, &[6.0]).unwrap();
        assert!(sweep.log_correction.is_none() && sweep.inverse_speed.is_none());
        assert_eq!(sweep.points[0].hits, 60);
        assert!(sweep.points[0].median > 3.0 && sweep.points[0].median < 10.0);
    }

    #[test]
    fn too_few_hits_is_an_error() {
        let m = model(2);
        let settings = RunSettings {
            seed: 3,
            replications: 10,
            horizon: 30,
            policy: PrunePolicy::off(),
            max_restarts: 0,
            target_radius: 1.0,
        };
        let err = fpt_sweep(&m, &settings, &[3.0, 4.0]).unwrap_err();
        assert!(matches!(err, Error::InsufficientHits { found: 10, .. }));
    }

    #[test]
    fn exceedance_starts_at_one_or_below() {
        let taus: Vec<u32> = (0..400).map(|i| 40 + (i % 7) + (i % 3)).collect();
        let c = concentration_from_taus(45.0, taus).unwrap();
        assert_eq!(c.exceedance[0].0, 0.0);
        assert!(c.exceedance.iter().all(|p| p.1 <= 1.0));
        assert!(c.exceedance.windows(2).all(|w| w[1].1 <= w[0].1));
        assert!(c.fit.slope < 0.0);
    }
}
