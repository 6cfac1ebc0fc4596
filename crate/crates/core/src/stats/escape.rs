//! Probability that every generation-`n` particle lies outside the unit ball
//! around the origin.

use serde::{Deserialize, Serialize};

use super::{fit_line, tag, try_par_map, Model, RunSettings, TailFit};
use crate::engine::{run_conditioned_on_survival, GenealogyArena, Outcome};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Escape {
    pub n_grid: Vec<u32>,
    pub runs: usize,
    pub escapes: Vec<usize>,
    pub frequency: Vec<f64>,
    pub strictly_decreasing: bool,
    /// Fit of `log frequency` against `sqrt(n)` over the positive frequencies.
    pub sqrt_fit: Option<TailFit>,
}

struct EscapeRun {
    escaped: Vec<bool>,
    extinct: bool,
}

impl Outcome for EscapeRun {
    fn is_extinct(&self) -> bool {
        self.extinct
    }

    fn set_restarts(&mut self, _: usize) {}
}

fn all_outside(arena: &GenealogyArena) -> bool {
    arena
        .alive()
        .all(|v| arena.position(v as u32).expect("alive").iter().map(|x| x * x).sum::<f64>() > 1.0)
}

pub fn escape_prob(model: &Model, settings: &RunSettings, n_grid: &[u32]) -> Result<Escape> {
    if n_grid.is_empty() {
        return Err(Error::InvalidArgument("empty generation grid".into()));
    }
    let n_max = *n_grid.iter().max().expect("non-empty");
    let brw = model.brw(settings.policy.clone());
    let rows = try_par_map(settings.replications, |rep| {
        let run = run_conditioned_on_survival(settings.seed, &[tag::ESCAPE, rep as u64], settings.max_restarts, |rng| {
            let mut arena = GenealogyArena::new(model.dimension());
            let mut at = vec![false; n_max as usize + 1];
            for g in 1..=n_max {
                brw.step(&mut arena, rng)?;
                if arena.alive_count() == 0 {
                    return Ok(EscapeRun {
                        escaped: Vec::new(),
                        extinct: true,
                    });
                }
                at[g as usize] = all_outside(&arena);
            }
            Ok(EscapeRun {
                escaped: n_grid.iter().map(|&n| at[n as usize]).collect(),
                extinct: false,
            })
        })?;
        Ok(run.escaped)
    })?;
    let escapes: Vec<usize> = (0..n_grid.len()).map(|j| rows.iter().filter(|r| r[j]).count()).collect();
    let runs = rows.len();
    let frequency: Vec<f64> = escapes.iter().map(|&e| e as f64 / runs as f64).collect();
    let strictly_decreasing = frequency.windows(2).all(|w| w[1] < w[0]);
    let (xs, ys): (Vec<f64>, Vec<f64>) = n_grid
        .iter()
        .zip(&frequency)
        .filter(|(_, f)| **f > 0.0)
        .map(|(&n, f)| ((n as f64).sqrt(), f.ln()))
        .unzip();
    Ok(Escape {
        n_grid: n_grid.to_vec(),
        runs,
        escapes,
        frequency,
        strictly_decreasing,
        sqrt_fit: fit_line(&xs, &ys).ok(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::PrunePolicy;
    use crate::laws::{IncrementLaw, OffspringLaw};

    fn settings(replications: usize) -> RunSettings {
        RunSettings {
            seed: 4,
            replications,
            horizon: 0,
            policy: PrunePolicy::off(),
            max_restarts: 0,
            target_radius: 1.0,
        }
    }

    #[test]
    fn root_is_inside() {
        let m = Model::new(IncrementLaw::isotropic_gaussian(2, 1.0).unwrap(), OffspringLaw::deterministic(2)).unwrap();
        let e = escape_prob(&m, &settings(100), &[0, 1]).unwrap();
        assert_eq!(e.escapes[0], 0);
        assert!(e.escapes[1] > 0);
    }

    #[test]
    fn bounded_jumps_cannot_escape_in_one_step() {
        let m = Model::new(IncrementLaw::uniform_ball(2, 1.0).unwrap(), OffspringLaw::deterministic(2)).unwrap();
        let e = escape_prob(&m, &settings(2000), &[1]).unwrap();
        assert_eq!(e.escapes[0], 0);
    }
}
