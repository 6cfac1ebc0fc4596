//! Tightness and upper tail of the maximum `M_n` around `m_n`.

use serde::{Deserialize, Serialize};

use super::{bootstrap_ci, fit_line, median, tag, try_par_map, Model, RunSettings, Summary, TailFit};
use crate::engine::{max_position, run_conditioned_on_survival, GenealogyArena, Outcome, RunOutcome};
use crate::error::{Error, Result};

struct MaxRun {
    maxima: Vec<f64>,
    extinct: bool,
    restarts: usize,
}

impl Outcome for MaxRun {
    fn is_extinct(&self) -> bool {
        self.extinct
    }

    fn set_restarts(&mut self, restarts: usize) {
        self.restarts = restarts;
    }
}

/// Pivot maxima at each generation of `n_grid`, one row per conditioned replication.
pub fn collect_maxima(model: &Model, settings: &RunSettings, n_grid: &[u32], label: u64) -> Result<Vec<Vec<f64>>> {
    let n_max = n_grid.iter().copied().max().unwrap_or(0);
    let brw = model.brw(settings.policy.clone());
    let pivot = model.asymptote.pivot();
    try_par_map(settings.replications, |rep| {
        let run = run_conditioned_on_survival(settings.seed, &[tag::MAXIMA, label, rep as u64], settings.max_restarts, |rng| {
            let mut arena = GenealogyArena::new(model.dimension());
            let mut at = vec![f64::NAN; n_max as usize + 1];
            at[0] = 0.0;
            for g in 1..=n_max {
                brw.step(&mut arena, rng)?;
                if arena.alive_count() == 0 {
                    return Ok(MaxRun {
                        maxima: Vec::new(),
                        extinct: true,
                        restarts: 0,
                    });
                }
                at[g as usize] = max_position(&arena, &pivot)?.0;
            }
            Ok(MaxRun {
                maxima: n_grid.iter().map(|&n| at[n as usize]).collect(),
                extinct: false,
                restarts: 0,
            })
        })?;
        Ok(run.maxima)
    })
}

/// Re-runs replication `rep` of [`collect_maxima`] for `n` generations and
/// returns the whole run.
pub fn replay_run(model: &Model, settings: &RunSettings, n: u32, label: u64, rep: usize) -> Result<RunOutcome> {
    let brw = model.brw(settings.policy.clone());
    run_conditioned_on_survival(settings.seed, &[tag::MAXIMA, label, rep as u64], settings.max_restarts, |rng| {
        brw.run_generations(n, rng)
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaxTightness {
    pub n_grid: Vec<u32>,
    pub maxima: Vec<Vec<f64>>,
    /// `median(M_n) − m_n` per `n`.
    pub offsets: Vec<f64>,
    /// Max minus min of the offsets over `n ∈ [30, 80]`; `None` with fewer than two such `n`.
    pub band: Option<f64>,
    pub band_limit: f64,
    /// Largest `|median shift|` after doubling the capacity, when requested.
    pub doubling_shift: Option<f64>,
}

impl MaxTightness {
    pub fn band_pass(&self) -> Option<bool> {
        self.band.map(|b| b <= self.band_limit)
    }
}

fn offsets(model: &Model, n_grid: &[u32], rows: &[Vec<f64>]) -> Vec<f64> {
    n_grid
        .iter()
        .enumerate()
        .map(|(j, &n)| {
            let col: Vec<f64> = rows.iter().map(|r| r[j]).collect();
            median(&col) - model.asymptote.m_of_n(n as f64)
        })
        .collect()
}

pub fn max_tightness(
    model: &Model,
    settings: &RunSettings,
    n_grid: &[u32],
    band_limit: f64,
    check_doubling: bool,
) -> Result<MaxTightness> {
    if n_grid.is_empty() || n_grid.contains(&0) || n_grid.contains(&1) {
        return Err(Error::InvalidArgument("generations must be at least 2".into()));
    }
    let maxima = collect_maxima(model, settings, n_grid, 0)?;
    let offs = offsets(model, n_grid, &maxima);
    let in_range: Vec<f64> = n_grid
        .iter()
        .zip(&offs)
        .filter(|(n, _)| (30..=80).contains(*n))
        .map(|(_, o)| *o)
        .collect();
    let band = (in_range.len() >= 2).then(|| {
        in_range.iter().copied().fold(f64::NEG_INFINITY, f64::max) - in_range.iter().copied().fold(f64::INFINITY, f64::min)
    });
    let doubling_shift = if check_doubling {
        let mut doubled = settings.clone();
        doubled.policy.capacity = doubled.policy.capacity.saturating_mul(2);
        doubled.policy.compact_above = doubled.policy.compact_above.map(|c| c.saturating_mul(2));
        let rows = collect_maxima(model, &doubled, n_grid, 1)?;
        let o2 = offsets(model, n_grid, &rows);
        Some(offs.iter().zip(&o2).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
    } else {
        None
    };
    Ok(MaxTightness {
        n_grid: n_grid.to_vec(),
        maxima,
        offsets: offs,
        band,
        band_limit,
        doubling_shift,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaxTail {
    pub n: u32,
    pub maxima: Vec<f64>,
    pub z_grid: Vec<f64>,
    /// `P(M_n > m_n + z)` per `z`.
    pub frequency: Vec<f64>,
    pub fit: TailFit,
    /// Slope against `−c2`, tolerance 30%.
    pub summary: Summary,
}

fn tail_slope(m_n: f64, maxima: &[f64], idx: &[usize], z_grid: &[f64]) -> Option<TailFit> {
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for &z in z_grid {
        let c = idx.iter().filter(|&&i| maxima[i] > m_n + z).count();
        if c > 0 {
            xs.push(z);
            ys.push((c as f64 / idx.len() as f64).ln());
        }
    }
    fit_line(&xs, &ys).ok()
}

pub fn max_tail(model: &Model, settings: &RunSettings, n: u32, z_grid: &[f64]) -> Result<MaxTail> {
    let rows = collect_maxima(model, settings, &[n], 2)?;
    let maxima: Vec<f64> = rows.into_iter().map(|r| r[0]).collect();
    max_tail_from(model, settings.seed, n, maxima, z_grid)
}

pub fn max_tail_from(model: &Model, seed: u64, n: u32, maxima: Vec<f64>, z_grid: &[f64]) -> Result<MaxTail> {
    let m_n = model.asymptote.m_of_n(n as f64);
    let frequency: Vec<f64> = z_grid
        .iter()
        .map(|&z| maxima.iter().filter(|&&m| m > m_n + z).count() as f64 / maxima.len() as f64)
        .collect();
    let all: Vec<usize> = (0..maxima.len()).collect();
    let fit = tail_slope(m_n, &maxima, &all, z_grid).ok_or_else(|| Error::InsufficientEvents {
        what: "maxima above m_n + z".into(),
        found: frequency.iter().filter(|f| **f > 0.0).count(),
        needed: 2,
    })?;
    let ci = bootstrap_ci(maxima.len(), seed, fit.slope, |idx| tail_slope(m_n, &maxima, idx, z_grid).map(|f| f.slope));
    let summary = Summary::relative(fit.slope, ci, -model.asymptote.pivot_tilt(), 0.30);
    Ok(MaxTail {
        n,
        maxima,
        z_grid: z_grid.to_vec(),
        frequency,
        fit,
        summary,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::PrunePolicy;
    use crate::laws::{IncrementLaw, OffspringLaw};

    #[test]
    fn single_generation_has_no_band() {
        let m = Model::new(IncrementLaw::isotropic_gaussian(1, 1.0).unwrap(), OffspringLaw::deterministic(2)).unwrap();
        let settings = RunSettings {
            seed: 1,
            replications: 20,
            horizon: 0,
            policy: PrunePolicy::off(),
            max_restarts: 0,
            target_radius: 1.0,
        };
        let r = max_tightness(&m, &settings, &[2], 2.0, false).unwrap();
        assert_eq!(r.offsets.len(), 1);
        assert!(r.band.is_none() && r.band_pass().is_none());
        // M_2 is the max of four correlated Gaussian paths
        assert!(r.offsets[0].abs() < 2.0);
    }

    #[test]
    fn tail_frequencies_decrease() {
        let m = Model::new(IncrementLaw::isotropic_gaussian(1, 1.0).unwrap(), OffspringLaw::deterministic(2)).unwrap();
        let maxima: Vec<f64> = (0..1000).map(|i| m.asymptote.m_of_n(10.0) + (i as f64 / 1000.0) * 6.0 - 2.0).collect();
        let t = max_tail_from(&m, 0, 10, maxima, &[1.0, 2.0, 3.0]).unwrap();
        assert!(t.frequency.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn replay_reproduces_the_collected_maximum() {
        let m = Model::new(IncrementLaw::isotropic_gaussian(1, 1.0).unwrap(), OffspringLaw::from_pairs(&[(0, 0.2), (2, 0.8)]).unwrap()).unwrap();
        let settings = RunSettings {
            seed: 3,
            replications: 5,
            horizon: 0,
            policy: PrunePolicy::off(),
            max_restarts: 100,
            target_radius: 1.0,
        };
        let rows = collect_maxima(&m, &settings, &[6], 0).unwrap();
        for (rep, row) in rows.iter().enumerate() {
            let out = replay_run(&m, &settings, 6, 0, rep).unwrap();
            assert_eq!(max_position(&out.arena, &[1.0]).unwrap().0, row[0]);
        }
    }
}
