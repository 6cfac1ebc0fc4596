//! Genealogical observables of a completed arena: common ancestors,
//! production numbers, frontier clusters and barrier crossings.

use serde::{Deserialize, Serialize};

use crate::engine::{GenealogyArena, NodeId, ROOT_PARENT};
use crate::error::{Error, Result};
use crate::ratefn::Asymptote;

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Latest common ancestor, by depth equalisation then lock-step ascent.
pub fn lca(arena: &GenealogyArena, v: NodeId, w: NodeId) -> Result<NodeId> {
    let (mut a, mut b) = (v, w);
    let (mut ga, mut gb) = (arena.birth_gen(a)?, arena.birth_gen(b)?);
    while ga > gb {
        a = arena.parent(a)?.expect("non-root node has a parent");
        ga -= 1;
    }
    while gb > ga {
        b = arena.parent(b)?.expect("non-root node has a parent");
        gb -= 1;
    }
    while a != b {
        a = arena.parent(a)?.expect("distinct nodes below the root");
        b = arena.parent(b)?.expect("distinct nodes below the root");
    }
    Ok(a)
}

/// `t − birth_gen(lca(v, w))` for two particles of generation `t`.
pub fn genealogical_distance(arena: &GenealogyArena, v: NodeId, w: NodeId) -> Result<u32> {
    let t = arena.birth_gen(v)?;
    if arena.birth_gen(w)? != t {
        return Err(Error::InvalidArgument(format!(
            "nodes {v} and {w} belong to different generations"
        )));
    }
    Ok(t - arena.birth_gen(lca(arena, v, w)?)?)
}

/// Nodes of generation `t` with pivot coordinate in `[low, high]`.
pub fn select_generation(arena: &GenealogyArena, pivot: &[f64], t: u32, low: f64, high: f64) -> Vec<NodeId> {
    arena
        .generation(t)
        .filter(|&i| {
            let p = dot(arena.position(i as NodeId).expect("in range"), pivot);
            p >= low && p <= high
        })
        .map(|i| i as NodeId)
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProductionCurve {
    /// `values[n]` = number of distinct generation-`n` ancestors, `n = 0..=t`.
    pub values: Vec<usize>,
    /// False when computed on a pruned forest.
    pub exact: bool,
}

impl ProductionCurve {
    /// `(P[t − s] − P[s]) / P[t]` over the middle interval `[s, t − s]`.
    pub fn middle_growth_share(&self, s: usize) -> Option<f64> {
        let t = self.values.len().checked_sub(1)?;
        let last = *self.values.last()?;
        if last == 0 || 2 * s > t {
            return None;
        }
        Some((self.values[t - s] as f64 - self.values[s] as f64) / last as f64)
    }

    pub fn is_non_decreasing(&self) -> bool {
        self.values.windows(2).all(|w| w[0] <= w[1])
    }
}

/// Marks every ancestor of `nodes` (inclusive) born at or before generation `t`.
fn mark_ancestors(arena: &GenealogyArena, nodes: &[NodeId], t: u32) -> Vec<bool> {
    let end = arena.generation(t).end;
    let mut mark = vec![false; end];
    for &v in nodes {
        mark[v as usize] = true;
    }
    for i in (0..end).rev() {
        if mark[i] {
            let p = arena.parent_raw(i);
            if p != ROOT_PARENT {
                mark[p as usize] = true;
            }
        }
    }
    mark
}

/// Production numbers of an arbitrary hitter set taken from generation `t`.
pub fn production_numbers_of(arena: &GenealogyArena, hitters: &[NodeId], t: u32) -> ProductionCurve {
    let exact = arena.is_exhaustive();
    if hitters.is_empty() {
        return ProductionCurve {
            values: vec![0; t as usize + 1],
            exact,
        };
    }
    let mark = mark_ancestors(arena, hitters, t);
    let values = (0..=t)
        .map(|g| arena.generation(g).filter(|&i| mark[i]).count())
        .collect();
    ProductionCurve { values, exact }
}

/// `P_n`: distinct generation-`n` ancestors of the particles of generation
/// `t` whose pivot coordinate is at least `level`.
pub fn production_numbers(arena: &GenealogyArena, pivot: &[f64], level: f64, t: u32) -> ProductionCurve {
    let hitters = select_generation(arena, pivot, t, level, f64::INFINITY);
    production_numbers_of(arena, &hitters, t)
}

/// `P'_n` with hitters in the band `[x − half_width, x + half_width]`.
pub fn production_numbers_band(
    arena: &GenealogyArena,
    pivot: &[f64],
    x: f64,
    t: u32,
    half_width: f64,
) -> ProductionCurve {
    let hitters = select_generation(arena, pivot, t, x - half_width, x + half_width);
    production_numbers_of(arena, &hitters, t)
}

/// Default anchor lag `⌈(log x)²⌉`.
pub fn default_anchor_lag(x: f64) -> u32 {
    x.ln().powi(2).ceil().max(0.0) as u32
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeterogeneityRecord {
    /// Age of the latest common ancestor of the block, in generations.
    pub h: u32,
    /// Pivot offset: the ancestor sits at `x + g − m_{h−K}`.
    pub g: f64,
    /// Transverse coordinates of the ancestor.
    pub u: Vec<f64>,
    /// Set when `h − K < 2` and `m` was replaced by the linear term.
    pub linear_m: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockStats {
    pub cardinality: usize,
    /// Largest pairwise transverse distance.
    pub dispersion: f64,
    pub lca: NodeId,
    pub lca_age: u32,
    pub heterogeneity: HeterogeneityRecord,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterPartition {
    pub frontier: Vec<NodeId>,
    pub blocks: Vec<Vec<NodeId>>,
    pub anchor_gen: u32,
    pub stats: Vec<BlockStats>,
    pub exact: bool,
}

/// Partition of the frontier `{pivot coordinate ≥ x}` at generation `t`
/// into blocks sharing a generation-`(t − anchor_lag)` ancestor.
pub fn clusters(
    arena: &GenealogyArena,
    asymptote: &Asymptote,
    x: f64,
    t: u32,
    anchor_lag: u32,
    lag_k: u32,
) -> Result<ClusterPartition> {
    if anchor_lag > t {
        return Err(Error::InvalidArgument(format!("anchor lag {anchor_lag} exceeds generation {t}")));
    }
    let pivot = asymptote.pivot();
    let basis = asymptote.transverse_basis();
    let level = asymptote.pivot_level(x);
    let frontier = select_generation(arena, &pivot, t, level, f64::INFINITY);
    let anchor_gen = t - anchor_lag;

    let mut keyed: Vec<(NodeId, NodeId)> = frontier
        .iter()
        .map(|&v| arena.ancestor_at(v, anchor_gen).map(|a| (a, v)))
        .collect::<Result<_>>()?;
    keyed.sort_unstable();
    let mut blocks: Vec<Vec<NodeId>> = Vec::new();
    let mut last = None;
    for (a, v) in keyed {
        if last != Some(a) {
            blocks.push(Vec::new());
            last = Some(a);
        }
        blocks.last_mut().unwrap().push(v);
    }

    let transverse = |v: NodeId| -> Vec<f64> {
        let p = arena.position(v).expect("valid node");
        basis.iter().map(|b| dot(b, p)).collect()
    };
    let mut stats = Vec::with_capacity(blocks.len());
    for block in &blocks {
        let mut anc = block[0];
        for &v in &block[1..] {
            anc = lca(arena, anc, v)?;
        }
        let h = t - arena.birth_gen(anc)?;
        let coords: Vec<Vec<f64>> = block.iter().map(|&v| transverse(v)).collect();
        let mut dispersion: f64 = 0.0;
        for i in 0..coords.len() {
            for j in i + 1..coords.len() {
                let d2: f64 = coords[i].iter().zip(&coords[j]).map(|(a, b)| (a - b) * (a - b)).sum();
                dispersion = dispersion.max(d2.sqrt());
            }
        }
        let age = h as i64 - lag_k as i64;
        let (m, linear_m) = if age < 2 {
            (asymptote.pivot_speed() * age as f64, true)
        } else {
            (asymptote.m_of_n(age as f64), false)
        };
        let g = arena.pivot_coordinate(anc, &pivot)? - level + m;
        stats.push(BlockStats {
            cardinality: block.len(),
            dispersion,
            lca: anc,
            lca_age: h,
            heterogeneity: HeterogeneityRecord {
                h,
                g,
                u: transverse(anc),
                linear_m,
            },
        });
    }
    Ok(ClusterPartition {
        frontier,
        blocks,
        anchor_gen,
        stats,
        exact: arena.is_exhaustive(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BarrierOutcome {
    pub crossed: bool,
    pub first_k: Option<u32>,
    /// False on pruned forests, where a miss is only a lower bound.
    pub exact: bool,
}

/// Barrier `k m_n / n + β + (6/c2) (log min(k, n − k))₊` at step `k`.
pub fn barrier_level(asymptote: &Asymptote, n: u32, beta: f64, k: u32) -> f64 {
    let m = if n >= 2 {
        asymptote.m_of_n(n as f64)
    } else {
        asymptote.pivot_speed() * n as f64
    };
    let j = k.min(n - k);
    let log_term = if j >= 1 { (j as f64).ln() } else { 0.0 };
    k as f64 * m / n as f64 + beta + 6.0 / asymptote.pivot_tilt() * log_term
}

/// Earliest step at which a lineage of a generation-`n` particle reaches the barrier.
pub fn barrier_crossings(arena: &GenealogyArena, asymptote: &Asymptote, beta: f64, n: u32) -> Result<BarrierOutcome> {
    if n == 0 || n > arena.current_generation() {
        return Err(Error::InvalidArgument(format!("generation {n} is not available")));
    }
    let pivot = asymptote.pivot();
    let last: Vec<NodeId> = arena.generation(n).map(|i| i as NodeId).collect();
    let mark = mark_ancestors(arena, &last, n);
    let exact = arena.is_exhaustive();
    for k in 0..=n {
        let level = barrier_level(asymptote, n, beta, k);
        if arena
            .generation(k)
            .any(|i| mark[i] && dot(arena.position(i as NodeId).expect("in range"), &pivot) >= level)
        {
            return Ok(BarrierOutcome {
                crossed: true,
                first_k: Some(k),
                exact,
            });
        }
    }
    Ok(BarrierOutcome {
        crossed: false,
        first_k: None,
        exact,
    })
}

/// `#{v in generation n : pivot coordinate ≥ m_n − x}` for each `x`.
pub fn particle_count_profile(arena: &GenealogyArena, asymptote: &Asymptote, n: u32, x_grid: &[f64]) -> Vec<usize> {
    let pivot = asymptote.pivot();
    let mut coords: Vec<f64> = arena
        .generation(n)
        .map(|i| dot(arena.position(i as NodeId).expect("in range"), &pivot))
        .collect();
    coords.sort_by(f64::total_cmp);
    let m = asymptote.m_of_n(n as f64);
    x_grid
        .iter()
        .map(|&x| {
            let level = m - x;
            coords.len() - coords.partition_point(|&c| c < level)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::laws::{IncrementLaw, OffspringLaw};
    use crate::ratefn::solve_constants;

    fn gaussian_asymptote(d: usize) -> Asymptote {
        Asymptote::new(
            solve_constants(
                &IncrementLaw::isotropic_gaussian(d, 1.0).unwrap(),
                &OffspringLaw::deterministic(2),
            )
            .unwrap(),
        )
    }

    /// Gen 1: a(1), b(2). Gen 2: c(3) from a, e(4) from b, f(5) from b.
    fn small_tree() -> GenealogyArena {
        let mut a = GenealogyArena::new(1);
        a.append_generation(&[0, 0], &[1.0, -1.0]);
        a.append_generation(&[1, 2, 2], &[1.0, 3.0, 0.5]);
        a
    }

    #[test]
    fn lca_basics() {
        let a = small_tree();
        assert_eq!(lca(&a, 4, 4).unwrap(), 4);
        assert_eq!(lca(&a, 1, 2).unwrap(), 0);
        assert_eq!(lca(&a, 4, 5).unwrap(), 2);
        assert_eq!(lca(&a, 3, 5).unwrap(), 0);
        assert_eq!(lca(&a, 5, 2).unwrap(), 2);
        assert!(matches!(lca(&a, 9, 1), Err(Error::InvalidNode(9))));
    }

    #[test]
    fn distance_basics() {
        let a = small_tree();
        assert_eq!(genealogical_distance(&a, 3, 3).unwrap(), 0);
        assert_eq!(genealogical_distance(&a, 4, 5).unwrap(), 1);
        assert_eq!(genealogical_distance(&a, 3, 4).unwrap(), 2);
        assert!(genealogical_distance(&a, 3, 1).is_err());
    }

    #[test]
    fn production_endpoints_and_empty() {
        let a = small_tree();
        let p = production_numbers(&a, &[1.0], 1.0, 2);
        // positions at t = 2: 2.0, 2.0, -0.5
        assert_eq!(p.values, vec![1, 2, 2]);
        assert!(p.exact);
        let none = production_numbers(&a, &[1.0], 10.0, 2);
        assert_eq!(none.values, vec![0, 0, 0]);
        let band = production_numbers_band(&a, &[1.0], 2.0, 2, 0.5);
        assert_eq!(band.values, vec![1, 2, 2]);
    }

    #[test]
    fn growth_share() {
        let p = ProductionCurve {
            values: vec![1, 1, 2, 2, 2, 3, 8],
            exact: true,
        };
        assert_eq!(p.middle_growth_share(2), Some(0.0));
        assert_eq!(p.middle_growth_share(1), Some(2.0 / 8.0));
        assert_eq!(p.middle_growth_share(4), None);
    }

    #[test]
    fn cluster_extremes() {
        let a = small_tree();
        let asy = gaussian_asymptote(1);
        let all = clusters(&a, &asy, -10.0, 2, 0, 0).unwrap();
        assert_eq!(all.blocks, vec![vec![3], vec![4], vec![5]]);
        assert!(all.stats.iter().all(|s| s.lca_age == 0 && s.heterogeneity.linear_m));
        let one = clusters(&a, &asy, -10.0, 2, 2, 0).unwrap();
        assert_eq!(one.blocks, vec![vec![3, 4, 5]]);
        assert_eq!(one.stats[0].lca, 0);
        let mid = clusters(&a, &asy, -10.0, 2, 1, 0).unwrap();
        assert_eq!(mid.blocks.len(), production_numbers(&a, &[1.0], -10.0, 2).values[1]);
        assert!(clusters(&a, &asy, 0.0, 2, 3, 0).is_err());
    }

    #[test]
    fn heterogeneity_location() {
        let mut a = GenealogyArena::new(1);
        a.append_generation(&[0], &[2.0]);
        a.append_generation(&[1], &[1.0]);
        a.append_generation(&[2, 2], &[0.5, 1.5]);
        a.append_generation(&[3, 3, 4], &[0.0, 0.1, 0.2]);
        let asy = gaussian_asymptote(1);
        // block rooted at node 2 (generation 2, position 3), frontier {pivot >= 3}
        let part = clusters(&a, &asy, 3.0, 4, 2, 0).unwrap();
        assert_eq!(part.blocks.len(), 1);
        let s = &part.stats[0];
        assert_eq!((s.lca, s.lca_age), (2, 2));
        let expected = 3.0 - 3.0 + asy.m_of_n(2.0);
        assert!((s.heterogeneity.g - expected).abs() < 1e-12);
        assert!(!s.heterogeneity.linear_m);
    }

    #[test]
    fn dispersion_uses_transverse_coordinates() {
        let mut a = GenealogyArena::new(2);
        a.append_generation(&[0, 0], &[5.0, 1.0, 5.0, -2.0]);
        let asy = gaussian_asymptote(2);
        let part = clusters(&a, &asy, 4.0, 1, 1, 0).unwrap();
        assert_eq!(part.stats[0].cardinality, 2);
        assert!((part.stats[0].dispersion - 3.0).abs() < 1e-12);
    }

    #[test]
    fn barrier_extremes() {
        let a = small_tree();
        let asy = gaussian_asymptote(1);
        let never = barrier_crossings(&a, &asy, 1e9, 2).unwrap();
        assert!(!never.crossed && never.first_k.is_none());
        let always = barrier_crossings(&a, &asy, -1e9, 2).unwrap();
        assert_eq!(always.first_k, Some(0));
        assert!(always.exact);
    }

    #[test]
    fn count_profile_extremes() {
        let a = small_tree();
        let asy = gaussian_asymptote(1);
        let c = particle_count_profile(&a, &asy, 2, &[-1e9, 1e9, asy.m_of_n(2.0) - 2.0]);
        assert_eq!(c, vec![0, 3, 2]);
    }
}
