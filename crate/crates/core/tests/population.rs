//! Population-level laws: extinction probability, restart counts and the
//! mean generation size.

use brwlab::engine::{run_conditioned_on_survival, Brw, PrunePolicy, RunStatus};
use brwlab::{IncrementLaw, OffspringLaw, RandomStream};

/// Smallest fixed point of the generating function, by iteration from 0.
fn extinction_fixed_point(pmf: &[f64]) -> f64 {
    let gf = |s: f64| pmf.iter().enumerate().map(|(k, p)| p * s.powi(k as i32)).sum::<f64>();
    let mut q = 0.0;
    for _ in 0..10_000 {
        q = gf(q);
    }
    q
}

fn law() -> (IncrementLaw, OffspringLaw) {
    (
        IncrementLaw::isotropic_gaussian(1, 1.0).unwrap(),
        OffspringLaw::from_pairs(&[(0, 0.3), (2, 0.7)]).unwrap(),
    )
}

#[test]
fn extinction_frequency_matches_fixed_point() {
    let (inc, off) = law();
    let q = extinction_fixed_point(&[0.3, 0.0, 0.7]);
    assert!((q - 3.0 / 7.0).abs() < 1e-12);
    // a capped population of 200 dies out with probability q^200, so the cap
    // only saves memory
    let mut policy = PrunePolicy::frontier(1.0, 200);
    policy.window_w0 = 1e9;
    let brw = Brw::new(&inc, &off, policy, vec![1.0]).unwrap();
    let runs = 100_000;
    let extinct = (0..runs)
        .filter(|&r| {
            let out = brw.run_generations(40, &mut RandomStream::derive(3, &[r as u64])).unwrap_or_else(|e| panic!("{e}"));
            out.status == RunStatus::Extinct
        })
        .count();
    let freq = extinct as f64 / runs as f64;
    let se = (q * (1.0 - q) / runs as f64).sqrt();
    assert!((freq - q).abs() < 5.0 * se, "{freq} vs {q}");
}

#[test]
fn restarts_per_accepted_run() {
    let (inc, off) = law();
    let mut policy = PrunePolicy::frontier(1.0, 2_000);
    policy.window_w0 = 1e9;
    let brw = Brw::new(&inc, &off, policy, vec![1.0]).unwrap();
    let runs = 20_000;
    let mut restarts = 0usize;
    for r in 0..runs {
        let out = run_conditioned_on_survival(8, &[r], 1_000, |rng| brw.run_generations(20, rng)).unwrap();
        assert!(out.arena.alive_count() >= 1);
        restarts += out.restarts;
    }
    let mean = restarts as f64 / runs as f64;
    // geometric number of failures with success 1 − q: mean 0.75, variance 1.3125
    let se = (1.3125f64 / runs as f64).sqrt();
    assert!((mean - 0.75).abs() < 5.0 * se, "{mean}");
}

#[test]
fn binary_branching_never_restarts() {
    let inc = IncrementLaw::isotropic_gaussian(2, 1.0).unwrap();
    let off = OffspringLaw::deterministic(2);
    let brw = Brw::new(&inc, &off, PrunePolicy::off(), vec![1.0, 0.0]).unwrap();
    for r in 0..50 {
        let out = run_conditioned_on_survival(1, &[r], 0, |rng| brw.run_generations(6, rng)).unwrap();
        assert_eq!(out.restarts, 0);
        assert_eq!(out.arena.alive_count(), 64);
    }
}

#[test]
fn mean_generation_size_is_rho_to_the_n() {
    let inc = IncrementLaw::isotropic_gaussian(1, 1.0).unwrap();
    let off = OffspringLaw::from_pairs(&[(0, 0.2), (1, 0.3), (3, 0.5)]).unwrap();
    let rho = off.rho();
    let brw = Brw::new(&inc, &off, PrunePolicy::off(), vec![1.0]).unwrap();
    let n = 8;
    let runs = 10_000;
    let mut sizes = vec![Vec::with_capacity(runs); n + 1];
    for r in 0..runs {
        let out = brw.run_generations(n as u32, &mut RandomStream::derive(17, &[r as u64])).unwrap();
        let per_gen = out.arena.generation_sizes();
        for g in 0..=n {
            sizes[g].push(per_gen.get(g).copied().unwrap_or(0) as f64);
        }
    }
    for (g, s) in sizes.iter().enumerate() {
        let mean = s.iter().sum::<f64>() / runs as f64;
        let var = s.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (runs - 1) as f64;
        let se = (var / runs as f64).sqrt().max(1e-12);
        let expected = rho.powi(g as i32);
        assert!((mean - expected).abs() <= 5.0 * se + 1e-12, "generation {g}: {mean} vs {expected}");
    }
}
