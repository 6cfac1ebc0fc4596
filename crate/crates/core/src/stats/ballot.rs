//! Ballot-type probabilities for the plain (non-branching) walk:
//! `P(S_k ≥ −y for all k ≤ n, S_n ∈ [a, a + 1])` along the pivot, optionally
//! also requiring the transverse coordinates to lie in `[−½, ½]`.

use serde::{Deserialize, Serialize};

use super::{bootstrap_ci_with, fit_line, par_map, tag, Model, Summary, TailFit};
use crate::error::{Error, Result};
use crate::rng::RandomStream;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BallotSettings {
    pub seed: u64,
    pub n_grid: Vec<u32>,
    pub y: f64,
    pub a: f64,
    /// Require every transverse coordinate in `[−½, ½]` at step `n`.
    pub boxed: bool,
    pub walks: usize,
    /// Walks per random substream.
    pub chunk: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BallotPoint {
    pub n: u32,
    pub events: usize,
    pub estimate: f64,
    pub std_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ballot {
    pub walks: usize,
    pub points: Vec<BallotPoint>,
    /// Fit of `log p̂` against `log n`.
    pub fit: Option<TailFit>,
    pub summary: Option<Summary>,
}

/// Event counts per grid point for one chunk of walks.
fn run_chunk(model: &Model, s: &BallotSettings, rng: &mut RandomStream, walks: usize) -> Vec<usize> {
    let d = model.dimension();
    let pivot = model.asymptote.pivot();
    let basis = model.asymptote.transverse_basis();
    let n_max = *s.n_grid.iter().max().expect("non-empty grid");
    let mut counts = vec![0usize; s.n_grid.len()];
    let mut jump = vec![0.0; d];
    let mut sum = vec![0.0; d];
    for _ in 0..walks {
        sum.iter_mut().for_each(|x| *x = 0.0);
        let mut next = 0;
        for k in 1..=n_max {
            model.increment.sample_into(rng, &mut jump);
            for (a, b) in sum.iter_mut().zip(&jump) {
                *a += b;
            }
            let p: f64 = sum.iter().zip(&pivot).map(|(a, b)| a * b).sum();
            if p < -s.y {
                break;
            }
            while next < s.n_grid.len() && s.n_grid[next] < k {
                next += 1;
            }
            if next < s.n_grid.len() && s.n_grid[next] == k && p >= s.a && p <= s.a + 1.0 {
                let inside = !s.boxed
                    || basis.iter().all(|b| {
                        let u: f64 = b.iter().zip(&sum).map(|(x, y)| x * y).sum();
                        u.abs() <= 0.5
                    });
                if inside {
                    counts[next] += 1;
                }
            }
        }
    }
    counts
}

pub fn ballot_scaling(model: &Model, settings: &BallotSettings) -> Result<Ballot> {
    if settings.n_grid.is_empty() || settings.n_grid.contains(&0) {
        return Err(Error::InvalidArgument("grid needs positive step counts".into()));
    }
    if settings.y < 0.0 || settings.y + settings.a <= -1.0 {
        return Err(Error::InvalidArgument("need y >= 0 and a + 1 > -y".into()));
    }
    let mut s = settings.clone();
    s.n_grid.sort_unstable();
    s.n_grid.dedup();
    let chunks = s.walks.div_ceil(s.chunk);
    let per_chunk: Vec<Vec<usize>> = par_map(chunks, |c| {
        let mut rng = RandomStream::derive(s.seed, &[tag::BALLOT, c as u64]);
        let walks = s.chunk.min(s.walks - c * s.chunk);
        run_chunk(model, &s, &mut rng, walks)
    });
    let total = s.walks as f64;
    let points: Vec<BallotPoint> = s
        .n_grid
        .iter()
        .enumerate()
        .map(|(j, &n)| {
            let events: usize = per_chunk.iter().map(|c| c[j]).sum();
            let p = events as f64 / total;
            BallotPoint {
                n,
                events,
                estimate: p,
                std_error: (p * (1.0 - p) / total).sqrt(),
            }
        })
        .collect();
    let slope_of = |counts: &dyn Fn(usize) -> usize| -> Option<TailFit> {
        let (xs, ys): (Vec<f64>, Vec<f64>) = s
            .n_grid
            .iter()
            .enumerate()
            .filter(|(j, _)| counts(*j) > 0)
            .map(|(j, &n)| ((n as f64).ln(), (counts(j) as f64).ln()))
            .unzip();
        fit_line(&xs, &ys).ok()
    };
    let fit = slope_of(&|j| points[j].events).map(|mut f| {
        f.intercept -= total.ln();
        f
    });
    let summary = fit.map(|f| {
        let d = model.dimension() as f64;
        let (target, tol) = if s.boxed { (-(d + 2.0) / 2.0, 0.35) } else { (-1.5, 0.25) };
        // chunks are the resampling unit
        let ci = bootstrap_ci_with(per_chunk.len(), s.seed, super::BOOTSTRAP_RESAMPLES, 0.95, f.slope, |idx| {
            slope_of(&|j| idx.iter().map(|&c| per_chunk[c][j]).sum()).map(|f| f.slope)
        });
        Summary::absolute(f.slope, ci, target, tol)
    });
    Ok(Ballot {
        walks: s.walks,
        points,
        fit,
        summary,
    })
}
