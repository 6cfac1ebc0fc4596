//! Genealogy analytics on a hand-built tree and on random forests.

use std::collections::HashSet;

use brwlab::engine::frontier_set;
use brwlab::genealogy::{clusters, genealogical_distance, lca, production_numbers, production_numbers_band};
use brwlab::{solve_constants, Asymptote, GenealogyArena, IncrementLaw, NodeId, OffspringLaw};
use proptest::prelude::*;

fn asymptote(d: usize) -> Asymptote {
    let k = solve_constants(&IncrementLaw::isotropic_gaussian(d, 1.0).unwrap(), &OffspringLaw::deterministic(2)).unwrap();
    Asymptote::new(k)
}

/// Four generations; the three hitters (position 5) descend from three
/// generation-3 nodes, two generation-2 nodes and one generation-1 node.
///
/// ```text
/// 0 ┬ 1 ┬ 3 ─ 6 ─ 10*
///   │   └ 4 ┬ 7 ─ 11*
///   │       └ 8 ─ 12*
///   └ 2 ─ 5 ─ 9 ┬ 13
///               └ 14
/// ```
fn fixture() -> GenealogyArena {
    let mut a = GenealogyArena::new(1);
    a.append_generation(&[0, 0], &[1.0, -1.0]);
    a.append_generation(&[1, 1, 2], &[1.0, 1.0, 0.0]);
    a.append_generation(&[3, 4, 4, 5], &[1.0, 1.0, 1.0, 0.0]);
    a.append_generation(&[6, 7, 8, 9, 9], &[2.0, 2.0, 2.0, 0.0, 0.0]);
    a
}

#[test]
fn handmade_production_numbers() {
    let a = fixture();
    let p = production_numbers(&a, &[1.0], 4.5, 4);
    assert_eq!(p.values, vec![1, 1, 2, 3, 3]);
    assert!(p.exact);
    let band = production_numbers_band(&a, &[1.0], 5.0, 4, 0.5);
    assert_eq!(band.values, vec![1, 1, 2, 3, 3]);
    let none = production_numbers_band(&a, &[1.0], 2.0, 4, 0.5);
    assert_eq!(none.values, vec![0; 5]);
    let all = production_numbers_band(&a, &[1.0], 0.0, 4, f64::INFINITY);
    assert_eq!(all.values, vec![1, 2, 3, 4, 5]);
}

#[test]
fn handmade_clusters_match_production() {
    let a = fixture();
    let asym = asymptote(1);
    for lag in 0..=4 {
        let part = clusters(&a, &asym, 4.5, 4, lag, 0).unwrap();
        let p = production_numbers(&a, &[1.0], 4.5, 4);
        assert_eq!(part.blocks.len(), p.values[4 - lag as usize]);
    }
    assert!(clusters(&a, &asym, 4.5, 4, 5, 0).is_err());
}

/// Random forest: each generation picks parents uniformly among the
/// previous generation, with sizes and displacements from the strategy.
fn arena_strategy() -> impl Strategy<Value = GenealogyArena> {
    let gens = prop::collection::vec(prop::collection::vec((0.0f64..1.0, -2.0f64..2.0), 1..7), 1..7);
    gens.prop_map(|gens| {
        let mut a = GenealogyArena::new(1);
        for layer in gens {
            let alive = a.alive();
            let (parents, disp): (Vec<NodeId>, Vec<f64>) = layer
                .iter()
                .map(|(u, x)| {
                    let k = ((u * alive.len() as f64) as usize).min(alive.len() - 1);
                    ((alive.start + k) as NodeId, *x)
                })
                .unzip();
            let mut idx: Vec<usize> = (0..parents.len()).collect();
            idx.sort_by_key(|&i| parents[i]);
            let parents: Vec<NodeId> = idx.iter().map(|&i| parents[i]).collect();
            let disp: Vec<f64> = idx.iter().map(|&i| disp[i]).collect();
            a.append_generation(&parents, &disp);
        }
        a
    })
}

fn ancestors(a: &GenealogyArena, v: NodeId) -> HashSet<NodeId> {
    a.lineage(v).unwrap().into_iter().collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn genealogy_is_sound(a in arena_strategy()) {
        for v in 0..a.len() as NodeId {
            let g = a.birth_gen(v).unwrap();
            let path = a.lineage(v).unwrap();
            prop_assert_eq!(path.len() as u32, g + 1);
            prop_assert_eq!(path[0], 0);
            let sum: f64 = path.iter().skip(1).map(|&u| a.displacement(u).unwrap()[0]).sum();
            prop_assert!((sum - a.position(v).unwrap()[0]).abs() <= 1e-9 * g.max(1) as f64);
        }
    }

    #[test]
    fn lca_matches_set_intersection(a in arena_strategy()) {
        let n = a.len() as NodeId;
        for v in 0..n {
            for w in 0..n {
                let common = ancestors(&a, v).intersection(&ancestors(&a, w)).copied().max_by_key(|&u| a.birth_gen(u).unwrap());
                prop_assert_eq!(Some(lca(&a, v, w).unwrap()), common);
            }
        }
    }

    #[test]
    fn distance_is_ultrametric(a in arena_strategy()) {
        let last: Vec<NodeId> = a.alive().map(|v| v as NodeId).collect();
        for &u in &last {
            for &v in &last {
                for &w in &last {
                    let dvw = genealogical_distance(&a, v, w).unwrap();
                    let dvu = genealogical_distance(&a, v, u).unwrap();
                    let duw = genealogical_distance(&a, u, w).unwrap();
                    prop_assert!(dvw <= dvu.max(duw));
                }
            }
        }
    }

    #[test]
    fn production_and_clusters_agree(a in arena_strategy(), level in -4.0f64..4.0) {
        let asym = asymptote(1);
        let t = a.current_generation();
        let p = production_numbers(&a, &[1.0], level, t);
        prop_assert!(p.is_non_decreasing());
        let frontier = frontier_set(&a, &[1.0], level);
        prop_assert_eq!(p.values[t as usize], frontier.len());
        let scan = a.alive().filter(|&v| a.position(v as NodeId).unwrap()[0] >= level).count();
        prop_assert_eq!(scan, frontier.len());
        for lag in 0..=t {
            let part = clusters(&a, &asym, level, t, lag, 0).unwrap();
            prop_assert_eq!(part.blocks.len(), p.values[(t - lag) as usize]);
            let union: usize = part.blocks.iter().map(Vec::len).sum();
            prop_assert_eq!(union, frontier.len());
            for block in &part.blocks {
                for &v in block {
                    for &w in block {
                        prop_assert!(genealogical_distance(&a, v, w).unwrap() <= lag);
                    }
                }
            }
        }
    }
}
