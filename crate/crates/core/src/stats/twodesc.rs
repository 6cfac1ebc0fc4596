//! Probability that two generation-`n` particles whose only common ancestor
//! is the root both exceed `m_n − g`.
//!
//! Plain per-run indicators are far too rare for `g ≤ −4`, so the main
//! estimator conditions on the first generation: given the root's children
//! at pivot positions `ξ_j`, their subtrees are independent copies of the
//! process run for `n − 1` generations, and the event needs two of them to
//! have `ξ_j + M^{(j)}_{n−1} ≥ m_n − g`. The tail of `M_{n−1}` is replaced by
//! the empirical tail of all other runs' subtree maxima (leave-one-run-out).

use serde::{Deserialize, Serialize};

use super::{bootstrap_ci, fit_line, tag, try_par_map, Model, RunSettings, Summary, TailFit};
use crate::engine::GenealogyArena;
use crate::error::{Error, Result};
use crate::rng::RandomStream;

/// First-generation data of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RootSplit {
    /// Pivot coordinate of each root child.
    pub children: Vec<f64>,
    /// Subtree maximum at generation `n`, relative to the child; `−∞` if extinct.
    pub subtree_max: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwoDescendantPoint {
    pub g: f64,
    pub level: f64,
    pub estimate: f64,
    /// Fraction of runs where the event occurred outright.
    pub direct: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwoDescendant {
    pub n: u32,
    pub runs: usize,
    pub points: Vec<TwoDescendantPoint>,
    /// Fit of `log p̂ − 2 log(|g| + 1)` against `g`.
    pub fit: Option<TailFit>,
    pub summary: Option<Summary>,
}

fn pivot_of(arena: &GenealogyArena, v: usize, pivot: &[f64]) -> f64 {
    arena
        .position(v as u32)
        .expect("in range")
        .iter()
        .zip(pivot)
        .map(|(a, b)| a * b)
        .sum()
}

/// Splits a completed run by root child.
pub fn root_split(arena: &GenealogyArena, pivot: &[f64], n: u32) -> RootSplit {
    if arena.current_generation() == 0 || n == 0 {
        return RootSplit {
            children: Vec::new(),
            subtree_max: Vec::new(),
        };
    }
    let first = arena.generation(1);
    let children: Vec<f64> = first.clone().map(|v| pivot_of(arena, v, pivot)).collect();
    let mut subtree_max = vec![f64::NEG_INFINITY; children.len()];
    if n <= arena.current_generation() {
        // label every node of generations 1..=n by its root child
        let end = arena.generation(n).end;
        let mut label = vec![usize::MAX; end];
        for v in first.clone() {
            label[v] = v - first.start;
        }
        for v in first.end..end {
            let p = arena.parent(v as u32).expect("in range").expect("non-root") as usize;
            label[v] = label[p];
        }
        for v in arena.generation(n) {
            let j = label[v];
            let rel = pivot_of(arena, v, pivot) - children[j];
            if rel > subtree_max[j] {
                subtree_max[j] = rel;
            }
        }
    }
    RootSplit { children, subtree_max }
}

/// `P(at least two successes)` for independent Bernoulli(`p_j`).
pub fn at_least_two(p: &[f64]) -> f64 {
    // track P(0 successes) and P(exactly 1)
    let (mut none, mut one) = (1.0, 0.0);
    for &q in p {
        one = one * (1.0 - q) + none * q;
        none *= 1.0 - q;
    }
    (1.0 - none - one).max(0.0)
}

/// Sorted pool of relative subtree maxima with a per-run leave-out.
struct TailPool {
    sorted: Vec<f64>,
}

impl TailPool {
    fn new(splits: &[&RootSplit]) -> Self {
        let mut sorted: Vec<f64> = splits.iter().flat_map(|s| s.subtree_max.iter().copied()).collect();
        sorted.sort_by(f64::total_cmp);
        Self { sorted }
    }

    fn count_at_least(&self, y: f64) -> usize {
        self.sorted.len() - self.sorted.partition_point(|&m| m < y)
    }

    /// Tail `P(M ≥ y)` without the samples of `own`.
    fn tail_without(&self, own: &RootSplit, y: f64) -> f64 {
        let total = self.sorted.len() - own.subtree_max.len();
        if total == 0 {
            return 0.0;
        }
        let own_hits = own.subtree_max.iter().filter(|&&m| m >= y).count();
        (self.count_at_least(y) - own_hits) as f64 / total as f64
    }
}

fn conditional_estimate(splits: &[&RootSplit], level: f64) -> f64 {
    let pool = TailPool::new(splits);
    let total: f64 = splits
        .iter()
        .map(|s| {
            if s.children.len() < 2 {
                return 0.0;
            }
            let p: Vec<f64> = s.children.iter().map(|&xi| pool.tail_without(s, level - xi)).collect();
            at_least_two(&p)
        })
        .sum();
    total / splits.len() as f64
}

fn direct_frequency(splits: &[RootSplit], level: f64) -> f64 {
    let hits = splits
        .iter()
        .filter(|s| s.children.iter().zip(&s.subtree_max).filter(|(xi, m)| *xi + *m >= level).count() >= 2)
        .count();
    hits as f64 / splits.len() as f64
}

fn fit_points(gs: &[f64], estimates: &[f64]) -> Option<TailFit> {
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for (&g, &p) in gs.iter().zip(estimates) {
        if p > 0.0 {
            xs.push(g);
            ys.push(p.ln() - 2.0 * (g.abs() + 1.0).ln());
        }
    }
    fit_line(&xs, &ys).ok()
}

/// Unconditioned runs of `n` generations, split by root child.
pub fn collect_root_splits(model: &Model, settings: &RunSettings, n: u32) -> Result<Vec<RootSplit>> {
    let brw = model.brw(settings.policy.clone());
    let pivot = model.asymptote.pivot();
    try_par_map(settings.replications, |rep| {
        let mut rng = RandomStream::derive(settings.seed, &[tag::TWO_DESCENDANTS, rep as u64]);
        let out = brw.run_generations(n, &mut rng)?;
        Ok(root_split(&out.arena, &pivot, n))
    })
}

pub fn two_descendant_prob(model: &Model, settings: &RunSettings, n: u32, g_grid: &[f64]) -> Result<TwoDescendant> {
    if g_grid.iter().any(|&g| g >= 0.0) {
        return Err(Error::InvalidArgument("g must be negative".into()));
    }
    let splits = collect_root_splits(model, settings, n)?;
    summarize(model, settings.seed, n, g_grid, &splits)
}

pub fn summarize(model: &Model, seed: u64, n: u32, g_grid: &[f64], splits: &[RootSplit]) -> Result<TwoDescendant> {
    let m_n = model.asymptote.m_of_n(n as f64);
    let refs: Vec<&RootSplit> = splits.iter().collect();
    let points: Vec<TwoDescendantPoint> = g_grid
        .iter()
        .map(|&g| {
            let level = m_n - g;
            TwoDescendantPoint {
                g,
                level,
                estimate: conditional_estimate(&refs, level),
                direct: direct_frequency(splits, level),
            }
        })
        .collect();
    let est: Vec<f64> = points.iter().map(|p| p.estimate).collect();
    let fit = fit_points(g_grid, &est);
    if g_grid.len() >= 2 && fit.is_none() {
        return Err(Error::InsufficientEvents {
            what: "positive two-descendant estimates".into(),
            found: est.iter().filter(|p| **p > 0.0).count(),
            needed: 2,
        });
    }
    let summary = fit.map(|f| {
        let ci = bootstrap_ci(splits.len(), seed, f.slope, |idx| {
            let sample: Vec<&RootSplit> = idx.iter().map(|&i| &splits[i]).collect();
            let e: Vec<f64> = g_grid.iter().map(|&g| conditional_estimate(&sample, m_n - g)).collect();
            fit_points(g_grid, &e).map(|f| f.slope)
        });
        Summary::relative(f.slope, ci, 2.0 * model.asymptote.pivot_tilt(), 0.30)
    });
    Ok(TwoDescendant {
        n,
        runs: splits.len(),
        points,
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
    fn poisson_binomial_two_or_more() {
        assert_eq!(at_least_two(&[0.5]), 0.0);
        assert!((at_least_two(&[0.5, 0.5]) - 0.25).abs() < 1e-15);
        let p = [0.2, 0.3, 0.6];
        let brute: f64 = (0..8u32)
            .filter(|m| m.count_ones() >= 2)
            .map(|m| (0..3).map(|i| if m >> i & 1 == 1 { p[i] } else { 1.0 - p[i] }).product::<f64>())
            .sum();
        assert!((at_least_two(&p) - brute).abs() < 1e-15);
    }

    #[test]
    fn single_child_law_never_splits() {
        let m = Model::new(IncrementLaw::isotropic_gaussian(1, 1.0).unwrap(), OffspringLaw::deterministic(2)).unwrap();
        let inc = IncrementLaw::isotropic_gaussian(1, 1.0).unwrap();
        let single = Model {
            increment: inc,
            offspring: OffspringLaw::deterministic(1),
            asymptote: m.asymptote.clone(),
        };
        let settings = RunSettings {
            seed: 1,
            replications: 50,
            horizon: 0,
            policy: PrunePolicy::off(),
            max_restarts: 0,
            target_radius: 1.0,
        };
        let splits = collect_root_splits(&single, &settings, 6).unwrap();
        let r = summarize(&single, 1, 6, &[-2.0], &splits).unwrap();
        assert_eq!(r.points[0].estimate, 0.0);
        assert_eq!(r.points[0].direct, 0.0);
    }

    #[test]
    fn split_recovers_subtree_maxima() {
        let mut a = GenealogyArena::new(1);
        a.append_generation(&[0, 0], &[1.0, -1.0]);
        a.append_generation(&[1, 1, 2], &[0.5, 2.0, 3.0]);
        let s = root_split(&a, &[1.0], 2);
        assert_eq!(s.children, vec![1.0, -1.0]);
        assert_eq!(s.subtree_max, vec![2.0, 3.0]);
    }

    #[test]
    fn deeper_levels_are_rarer() {
        let m = Model::new(IncrementLaw::isotropic_gaussian(1, 1.0).unwrap(), OffspringLaw::deterministic(2)).unwrap();
        let settings = RunSettings {
            seed: 2,
            replications: 300,
            horizon: 0,
            policy: PrunePolicy::off(),
            max_restarts: 0,
            target_radius: 1.0,
        };
        let splits = collect_root_splits(&m, &settings, 10).unwrap();
        let near = summarize(&m, 2, 10, &[-2.0], &splits).unwrap();
        let far = summarize(&m, 2, 10, &[-20.0], &splits).unwrap();
        assert!(near.points[0].estimate > 0.0);
        assert_eq!(far.points[0].estimate, 0.0);
        assert!(matches!(
            summarize(&m, 2, 10, &[-20.0, -30.0], &splits),
            Err(Error::InsufficientEvents { .. })
        ));
    }
}
