//! Experiments on the genealogy of the frontier: production numbers and
//! clusters at the first passage, barrier crossings and particle counts
//! below the maximum.

use serde::{Deserialize, Serialize};

use super::{bootstrap_ci, fit_line, median, tag, try_par_map, Model, RunSettings, Summary, TailFit};
use crate::engine::{run_conditioned_on_survival, RunOutcome, RunStatus};
use crate::error::{Error, Result};
use crate::genealogy::{
    barrier_crossings, clusters, default_anchor_lag, particle_count_profile, production_numbers, production_numbers_band,
    ProductionCurve,
};

fn first_passage(model: &Model, settings: &RunSettings, x: f64, label: &[u64]) -> Result<RunOutcome> {
    let brw = model.brw(settings.policy.clone());
    let target = settings.target(model.dimension(), x)?;
    run_conditioned_on_survival(settings.seed, label, settings.max_restarts, |rng| {
        brw.run_first_passage(&target, settings.horizon, rng)
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProductionRun {
    pub tau: u32,
    pub halfspace: ProductionCurve,
    pub band: ProductionCurve,
    pub growth_share: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProductionReport {
    pub x: f64,
    /// Half-width of the middle interval, `⌈(log x)²⌉`.
    pub margin: u32,
    pub runs: Vec<ProductionRun>,
    pub median_share: Option<f64>,
    pub all_monotone: bool,
}

/// Production numbers at the first passage to `x`, per conditioned run.
pub fn production_experiment(model: &Model, settings: &RunSettings, x: f64) -> Result<ProductionReport> {
    let a = &model.asymptote;
    let pivot = a.pivot();
    let level = a.pivot_level(x);
    let margin = default_anchor_lag(x);
    let runs: Vec<Option<ProductionRun>> = try_par_map(settings.replications, |rep| {
        let out = first_passage(model, settings, x, &[tag::FRONTIER, 0, rep as u64])?;
        if out.status != RunStatus::TargetHit {
            return Ok(None);
        }
        let t = out.tau.expect("hit");
        let halfspace = production_numbers(&out.arena, &pivot, level, t);
        let band = production_numbers_band(&out.arena, &pivot, level, t, 0.5);
        let growth_share = halfspace.middle_growth_share(margin as usize);
        Ok(Some(ProductionRun {
            tau: t,
            halfspace,
            band,
            growth_share,
        }))
    })?;
    let runs: Vec<ProductionRun> = runs.into_iter().flatten().collect();
    let shares: Vec<f64> = runs.iter().filter_map(|r| r.growth_share).collect();
    Ok(ProductionReport {
        x,
        margin,
        median_share: (!shares.is_empty()).then(|| median(&shares)),
        all_monotone: runs.iter().all(|r| r.halfspace.is_non_decreasing() && r.band.is_non_decreasing()),
        runs,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterRow {
    pub x: f64,
    pub replication: usize,
    pub tau: u32,
    pub frontier: usize,
    pub blocks: usize,
    /// Block sizes, lca ages, `g` offsets and dispersions, in block order.
    pub cardinality: Vec<usize>,
    pub lca_age: Vec<u32>,
    pub g: Vec<f64>,
    pub dispersion: Vec<f64>,
    pub linear_m: Vec<bool>,
    pub exact: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterScaling {
    pub x_grid: Vec<f64>,
    pub rows: Vec<ClusterRow>,
    pub median_blocks: Vec<f64>,
    /// Fit of `log median(#blocks)` against `log x`.
    pub fit: Option<TailFit>,
    pub summary: Option<Summary>,
}

fn block_slope(x_grid: &[f64], med: &[f64]) -> Option<TailFit> {
    let (xs, ys): (Vec<f64>, Vec<f64>) = x_grid
        .iter()
        .zip(med)
        .filter(|(_, m)| **m > 0.0)
        .map(|(x, m)| (x.ln(), m.ln()))
        .unzip();
    fit_line(&xs, &ys).ok()
}

/// Clusters of the frontier at the first passage, for each `x`; the anchor
/// lag is `⌈(log x)²⌉` and the heterogeneity lag is `lag_k`.
pub fn cluster_scaling(model: &Model, settings: &RunSettings, x_grid: &[f64], lag_k: u32) -> Result<ClusterScaling> {
    let mut rows = Vec::new();
    for (xi, &x) in x_grid.iter().enumerate() {
        let per_x: Vec<Option<ClusterRow>> = try_par_map(settings.replications, |rep| {
            let out = first_passage(model, settings, x, &[tag::FRONTIER, 1, xi as u64, rep as u64])?;
            if out.status != RunStatus::TargetHit {
                return Ok(None);
            }
            let t = out.tau.expect("hit");
            let lag = default_anchor_lag(x).min(t);
            let part = clusters(&out.arena, &model.asymptote, x, t, lag, lag_k)?;
            Ok(Some(ClusterRow {
                x,
                replication: rep,
                tau: t,
                frontier: part.frontier.len(),
                blocks: part.blocks.len(),
                cardinality: part.stats.iter().map(|s| s.cardinality).collect(),
                lca_age: part.stats.iter().map(|s| s.lca_age).collect(),
                g: part.stats.iter().map(|s| s.heterogeneity.g).collect(),
                dispersion: part.stats.iter().map(|s| s.dispersion).collect(),
                linear_m: part.stats.iter().map(|s| s.heterogeneity.linear_m).collect(),
                exact: part.exact,
            }))
        })?;
        rows.extend(per_x.into_iter().flatten());
    }
    let counts_at = |x: f64, rows: &[&ClusterRow]| -> Vec<f64> {
        rows.iter().filter(|r| r.x == x).map(|r| r.blocks as f64).collect()
    };
    let all: Vec<&ClusterRow> = rows.iter().collect();
    let median_blocks: Vec<f64> = x_grid
        .iter()
        .map(|&x| {
            let c = counts_at(x, &all);
            if c.is_empty() {
                0.0
            } else {
                median(&c)
            }
        })
        .collect();
    let fit = block_slope(x_grid, &median_blocks);
    let d = model.dimension();
    let summary = fit.map(|f| {
        // resample replication indices jointly across x
        let reps = settings.replications;
        let ci = bootstrap_ci(reps, settings.seed, f.slope, |idx| {
            let med: Vec<f64> = x_grid
                .iter()
                .map(|&x| {
                    let c: Vec<f64> = idx
                        .iter()
                        .flat_map(|&i| rows.iter().filter(move |r| r.x == x && r.replication == i))
                        .map(|r| r.blocks as f64)
                        .collect();
                    if c.is_empty() {
                        0.0
                    } else {
                        median(&c)
                    }
                })
                .collect();
            block_slope(x_grid, &med).map(|f| f.slope)
        });
        Summary::absolute(f.slope, ci, (d as f64 - 1.0) / 2.0, 0.4)
    });
    Ok(ClusterScaling {
        x_grid: x_grid.to_vec(),
        rows,
        median_blocks,
        fit,
        summary,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BarrierReport {
    pub n: u32,
    pub betas: Vec<f64>,
    pub crossings: Vec<usize>,
    pub frequency: Vec<f64>,
    pub exact: bool,
    /// Fit of `log frequency` against `β`.
    pub fit: Option<TailFit>,
    pub summary: Option<Summary>,
}

/// Frequency of the barrier event for each `β` over conditioned runs of `n` generations.
pub fn barrier_frequency(model: &Model, settings: &RunSettings, n: u32, betas: &[f64]) -> Result<BarrierReport> {
    let brw = model.brw(settings.policy.clone());
    let rows: Vec<(Vec<bool>, bool)> = try_par_map(settings.replications, |rep| {
        let out = run_conditioned_on_survival(settings.seed, &[tag::FRONTIER, 2, rep as u64], settings.max_restarts, |rng| {
            brw.run_generations(n, rng)
        })?;
        let mut exact = true;
        let crossed = betas
            .iter()
            .map(|&b| {
                let o = barrier_crossings(&out.arena, &model.asymptote, b, n)?;
                exact &= o.exact;
                Ok(o.crossed)
            })
            .collect::<Result<Vec<bool>>>()?;
        Ok((crossed, exact))
    })?;
    let runs = rows.len() as f64;
    let crossings: Vec<usize> = (0..betas.len()).map(|j| rows.iter().filter(|r| r.0[j]).count()).collect();
    let frequency: Vec<f64> = crossings.iter().map(|&c| c as f64 / runs).collect();
    let (xs, ys): (Vec<f64>, Vec<f64>) = betas
        .iter()
        .zip(&frequency)
        .filter(|(_, f)| **f > 0.0)
        .map(|(b, f)| (*b, f.ln()))
        .unzip();
    let fit = fit_line(&xs, &ys).ok();
    let summary = fit.map(|f| Summary::relative(f.slope, (f.slope, f.slope), -model.asymptote.pivot_tilt(), 0.30));
    Ok(BarrierReport {
        n,
        betas: betas.to_vec(),
        crossings,
        frequency,
        exact: rows.iter().all(|r| r.1),
        fit,
        summary,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountProfile {
    pub n: u32,
    pub x_grid: Vec<f64>,
    /// One row of counts per run.
    pub counts: Vec<Vec<usize>>,
    pub median_counts: Vec<f64>,
    /// Fit of `log median count` against `x`.
    pub fit: Option<TailFit>,
    pub summary: Option<Summary>,
}

fn count_slope(x_grid: &[f64], med: &[f64]) -> Option<TailFit> {
    let (xs, ys): (Vec<f64>, Vec<f64>) = x_grid
        .iter()
        .zip(med)
        .filter(|(_, m)| **m > 0.0)
        .map(|(x, m)| (*x, m.ln()))
        .unzip();
    fit_line(&xs, &ys).ok()
}

/// Number of generation-`n` particles above `m_n − x`, for each `x`.
pub fn count_profile(model: &Model, settings: &RunSettings, n: u32, x_grid: &[f64]) -> Result<CountProfile> {
    if x_grid.is_empty() {
        return Err(Error::InvalidArgument("empty x grid".into()));
    }
    let brw = model.brw(settings.policy.clone());
    let counts: Vec<Vec<usize>> = try_par_map(settings.replications, |rep| {
        let out = run_conditioned_on_survival(settings.seed, &[tag::FRONTIER, 3, rep as u64], settings.max_restarts, |rng| {
            brw.run_generations(n, rng)
        })?;
        Ok(particle_count_profile(&out.arena, &model.asymptote, n, x_grid))
    })?;
    let med_of = |idx: &[usize]| -> Vec<f64> {
        (0..x_grid.len())
            .map(|j| median(&idx.iter().map(|&i| counts[i][j] as f64).collect::<Vec<_>>()))
            .collect()
    };
    let all: Vec<usize> = (0..counts.len()).collect();
    let median_counts = med_of(&all);
    let fit = count_slope(x_grid, &median_counts);
    let summary = fit.map(|f| {
        let ci = bootstrap_ci(counts.len(), settings.seed, f.slope, |idx| count_slope(x_grid, &med_of(idx)).map(|f| f.slope));
        Summary::relative(f.slope, ci, model.asymptote.pivot_tilt(), 0.25)
    });
    Ok(CountProfile {
        n,
        x_grid: x_grid.to_vec(),
        counts,
        median_counts,
        fit,
        summary,
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

    fn settings(reps: usize) -> RunSettings {
        RunSettings {
            seed: 12,
            replications: reps,
            horizon: 60,
            policy: PrunePolicy::off(),
            max_restarts: 0,
            target_radius: 1.0,
        }
    }

    #[test]
    fn production_curves_are_monotone_and_end_at_the_frontier() {
        let m = model(1);
        let r = production_experiment(&m, &settings(20), 8.0).unwrap();
        assert_eq!(r.runs.len(), 20);
        assert!(r.all_monotone);
        for run in &r.runs {
            // a hit only guarantees pivot >= x - 1, so the half-space may be empty
            let last = *run.halfspace.values.last().unwrap();
            assert_eq!(run.halfspace.values[0], usize::from(last > 0));
        }
    }

    #[test]
    fn barrier_frequency_decreases_in_beta() {
        let m = model(1);
        let r = barrier_frequency(&m, &settings(200), 8, &[-1e9, 2.0, 1e9]).unwrap();
        assert_eq!(r.crossings[0], 200);
        assert_eq!(r.crossings[2], 0);
        assert!(r.exact);
    }

    #[test]
    fn count_profile_extremes() {
        let m = model(1);
        let r = count_profile(&m, &settings(10), 6, &[-1e9, 1e9]).unwrap();
        assert!(r.counts.iter().all(|c| c[0] == 0 && c[1] == 64));
    }
}
