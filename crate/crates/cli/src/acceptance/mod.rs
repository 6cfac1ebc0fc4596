//! The fifteen acceptance checks, each at a pinned configuration and seed.
//! The quick tier keeps the checks that finish in seconds to a few minutes.

pub mod reference;

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context};
use brwlab::engine::{Brw, PrunePolicy};
use brwlab::stats::{ballot, clt, fpt, frontier, maxima, twodesc, Model};
use brwlab::{solve_constants, IncrementLaw, OffspringLaw, RandomStream};
use serde::Serialize;

use crate::config::Config;
use crate::{output_files, Experiment};

use reference::{uniform_grid_constants, NaiveTree};

pub const SEED: u64 = 20_240_517;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Tier {
    Quick,
    Full,
}

pub const QUICK: [u8; 8] = [1, 2, 3, 11, 12, 13, 14, 15];

impl Tier {
    pub fn criteria(self) -> Vec<u8> {
        match self {
            Tier::Quick => QUICK.to_vec(),
            Tier::Full => (1..=15).collect(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CriterionResult {
    pub id: u8,
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
    pub seconds: f64,
}

impl CriterionResult {
    pub fn line(&self) -> String {
        format!(
            "{} criterion {:>2} {}: {} [{:.1}s]",
            if self.pass { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.detail,
            self.seconds
        )
    }
}

/// Runs one experiment with the given config; used by the determinism check.
pub type Runner<'a> = &'a dyn Fn(Experiment, &Config) -> anyhow::Result<()>;

pub fn name(id: u8) -> &'static str {
    match id {
        1 => "constants oracle",
        2 => "general-case reduction",
        3 => "engine oracle equivalence",
        4 => "maximum tightness",
        5 => "maximum tail exponent",
        6 => "first-passage log correction",
        7 => "first-passage linear speed",
        8 => "first-passage concentration",
        9 => "production plateau",
        10 => "cluster-count scaling",
        11 => "conditional local CLT",
        12 => "two-descendant probability",
        13 => "ballot scaling",
        14 => "asymptote identity",
        15 => "determinism",
        _ => "unknown",
    }
}

struct Check {
    pass: bool,
    detail: String,
}

fn check(pass: bool, detail: String) -> anyhow::Result<Check> {
    Ok(Check { pass, detail })
}

/// Config from `key=value` assignments on top of the defaults and the suite seed.
pub fn config(sets: &[&str]) -> anyhow::Result<Config> {
    let mut all = vec![format!("sim.seed={SEED}")];
    all.extend(sets.iter().map(|s| s.to_string()));
    Ok(Config::from_toml_str("", &all)?)
}

fn binary_gaussian(d: usize) -> anyhow::Result<Model> {
    Ok(Model::new(IncrementLaw::isotropic_gaussian(d, 1.0)?, OffspringLaw::deterministic(2))?)
}

/// Pinned sizes of the Monte Carlo checks.
pub mod budget {
    pub const MAX_REPLICATIONS: usize = 200;
    pub const MAX_CAPACITY: usize = 200_000;
    pub const TAIL_REPLICATIONS: usize = 3000;
    pub const TAIL_CAPACITY: usize = 20_000;
    pub const FPT_REPLICATIONS: usize = 600;
    pub const FPT_MIN_ACCEPTED: usize = 300;
    pub const PRODUCTION_REPLICATIONS: usize = 100;
    pub const CLUSTER_REPLICATIONS: usize = 100;
    pub const CLT_MIN_HITS: usize = 100;
    pub const TWODESC_REPLICATIONS: usize = 5_000;
    pub const BALLOT_WALKS_1D: usize = 4_000_000;
    pub const BALLOT_WALKS_BOXED: usize = 100_000_000;
}

pub const FPT_GRID: [f64; 5] = [20.0, 30.0, 45.0, 65.0, 95.0];

/// Runs the checks in `ids`, calling `report` after each one.
pub fn run(ids: &[u8], runner: Runner<'_>, scratch: &Path, mut report: impl FnMut(&CriterionResult)) -> Vec<CriterionResult> {
    let mut state = State::default();
    let mut results = Vec::new();
    for &id in ids {
        let start = Instant::now();
        let outcome = match id {
            1 => constants_oracle(),
            2 => general_reduction(),
            3 => engine_oracle(),
            4 => max_tightness(),
            5 => max_tail(),
            6 => state.fpt().and_then(fpt_log_correction),
            7 => state.fpt().and_then(fpt_speed),
            8 => state.fpt().and_then(fpt_concentration),
            9 => production_plateau(),
            10 => cluster_scaling(),
            11 => local_clt(),
            12 => two_descendants(),
            13 => ballot_scaling(),
            14 => asymptote_identity(),
            15 => determinism(runner, scratch),
            _ => Err(anyhow::anyhow!("no criterion {id}")),
        };
        let (pass, detail) = match outcome {
            Ok(c) => (c.pass, c.detail),
            Err(e) => (false, format!("error: {e:#}")),
        };
        let result = CriterionResult {
            id,
            name: name(id),
            pass,
            detail,
            seconds: start.elapsed().as_secs_f64(),
        };
        report(&result);
        results.push(result);
    }
    results
}

/// The first-passage sweep is shared by criteria 6 to 8.
#[derive(Default)]
struct State {
    sweep: Option<(Model, fpt::FptSweep)>,
}

impl State {
    fn fpt(&mut self) -> anyhow::Result<&(Model, fpt::FptSweep)> {
        if self.sweep.is_none() {
            let cfg = fpt_config(budget::FPT_REPLICATIONS)?;
            let model = cfg.model()?;
            let sweep = fpt::fpt_sweep(&model, &cfg.run_settings(&model), &FPT_GRID)?;
            self.sweep = Some((model, sweep));
        }
        Ok(self.sweep.as_ref().expect("just set"))
    }
}

fn fpt_config(replications: usize) -> anyhow::Result<Config> {
    config(&[
        "target.dimension=2",
        "offspring.pmf=[0, 0, 1]",
        &format!("sim.replications={replications}"),
        &format!("sim.prune.capacity={}", budget::MAX_CAPACITY),
        "sim.horizon=400",
    ])
}

fn constants_oracle() -> anyhow::Result<Check> {
    let k = solve_constants(&IncrementLaw::isotropic_gaussian(1, 1.0)?, &OffspringLaw::deterministic(2))?;
    let exact = (2.0 * 2f64.ln()).sqrt();
    let gauss = (k.c1 - exact).abs().max((k.c2 - exact).abs());
    let u = solve_constants(&IncrementLaw::uniform_cube(1, 1.0)?, &OffspringLaw::deterministic(2))?;
    let (c1, c2) = uniform_grid_constants(2.0);
    let unif = (u.c1 - c1).abs().max((u.c2 - c2).abs());
    check(
        gauss <= 1e-9 && unif <= 1e-6,
        format!("gaussian error {gauss:.2e} (<= 1e-9), uniform error vs grid {unif:.2e} (<= 1e-6)"),
    )
}

fn general_reduction() -> anyhow::Result<Check> {
    let offspring = [OffspringLaw::deterministic(2), OffspringLaw::from_pairs(&[(0, 0.2), (1, 0.3), (3, 0.5)])?];
    let mut worst: f64 = 0.0;
    let mut laws = 0;
    for d in 1..=3 {
        for inc in [
            IncrementLaw::isotropic_gaussian(d, 1.0)?,
            IncrementLaw::isotropic_gaussian(d, 0.6)?,
            IncrementLaw::uniform_ball(d, 1.0)?,
            IncrementLaw::uniform_ball(d, 2.5)?,
        ] {
            if !inc.spherically_symmetric() {
                bail!("built-in law {:?} is not flagged symmetric", inc.kind());
            }
            for off in &offspring {
                let k = solve_constants(&inc, off)?;
                let mut e = vec![0.0; d];
                e[0] = k.c2;
                let gap = k.frame.c2_vec.iter().zip(&e).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
                worst = worst.max((k.frame.c1_hat - k.c1).abs()).max(gap);
                laws += 1;
            }
        }
    }
    check(worst <= 1e-7, format!("largest gap {worst:.2e} over {laws} law pairs (<= 1e-7)"))
}

fn engine_oracle() -> anyhow::Result<Check> {
    let inc = IncrementLaw::isotropic_gaussian(1, 1.0)?;
    let off = OffspringLaw::from_pairs(&[(0, 0.2), (1, 0.2), (2, 0.3), (3, 0.3)])?;
    let brw = Brw::new(&inc, &off, PrunePolicy::off(), vec![1.0])?;
    let runs = 1000u64;
    let mut nodes = 0;
    for rep in 0..runs {
        let n = (rep % 12 + 1) as u32;
        let out = brw.run_generations(n, &mut RandomStream::derive(SEED, &[rep]))?;
        let tree = NaiveTree::run(n, &inc, &off, &mut RandomStream::derive(SEED, &[rep]));
        if let Some(m) = tree.mismatch(&out.arena) {
            return check(false, format!("run {rep} (n = {n}): {m}"));
        }
        nodes += out.arena.len();
    }
    check(true, format!("{runs} runs, {nodes} nodes identical"))
}

fn max_config(replications: usize, capacity: usize) -> anyhow::Result<Config> {
    config(&[
        "target.dimension=1",
        "offspring.pmf=[0, 0, 1]",
        &format!("sim.replications={replications}"),
        &format!("sim.prune.capacity={capacity}"),
    ])
}

fn max_tightness() -> anyhow::Result<Check> {
    let cfg = max_config(budget::MAX_REPLICATIONS, budget::MAX_CAPACITY)?;
    let model = cfg.model()?;
    let grid: Vec<u32> = (30..=80).step_by(5).collect();
    let t = maxima::max_tightness(&model, &cfg.run_settings(&model), &grid, 2.0, true)?;
    let band = t.band.context("no band")?;
    let shift = t.doubling_shift.context("no doubling shift")?;
    check(
        band <= 2.0 && shift < 0.5,
        format!("band {band:.3} (<= 2.0), capacity-doubling shift {shift:.3} (< 0.5)"),
    )
}

fn max_tail() -> anyhow::Result<Check> {
    let cfg = max_config(budget::TAIL_REPLICATIONS, budget::TAIL_CAPACITY)?;
    let model = cfg.model()?;
    let t = maxima::max_tail(&model, &cfg.run_settings(&model), 60, &[1.0, 2.0, 3.0, 4.0, 5.0])?;
    let s = &t.summary;
    check(
        s.pass,
        format!(
            "slope {:.3} (95% CI [{:.3}, {:.3}]) vs {:.3} +- 30%, R^2 {:.3}",
            s.estimate, s.ci_low, s.ci_high, s.target, t.fit.r_squared
        ),
    )
}

fn fpt_log_correction(state: &(Model, fpt::FptSweep)) -> anyhow::Result<Check> {
    let sweep = &state.1;
    let s = sweep.log_correction.as_ref().context("no log-correction summary")?;
    let accepted = sweep.points.iter().map(|p| p.hits).min().unwrap_or(0);
    let pass = accepted >= budget::FPT_MIN_ACCEPTED && s.pass && s.ci_low > 0.0 && sweep.iqr_increases <= 1;
    check(
        pass,
        format!(
            "slope {:.3} (95% CI [{:.3}, {:.3}]) vs {:.3} +- 35%, IQR increases {} (<= 1) over IQRs {:?}, fewest accepted {} (>= {})",
            s.estimate,
            s.ci_low,
            s.ci_high,
            s.target,
            sweep.iqr_increases,
            sweep.points.iter().map(|p| (p.iqr * 1000.0).round() / 1000.0).collect::<Vec<_>>(),
            accepted,
            budget::FPT_MIN_ACCEPTED
        ),
    )
}

fn fpt_speed(state: &(Model, fpt::FptSweep)) -> anyhow::Result<Check> {
    let s = state.1.inverse_speed.as_ref().context("no inverse-speed summary")?;
    check(
        s.pass,
        format!("coefficient {:.4} (95% CI [{:.4}, {:.4}]) vs 1/c1 = {:.4} +- 5%", s.estimate, s.ci_low, s.ci_high, s.target),
    )
}

fn fpt_concentration(state: &(Model, fpt::FptSweep)) -> anyhow::Result<Check> {
    let sweep = &state.1;
    let j = FPT_GRID.iter().position(|&x| x == 45.0).expect("45 on the grid");
    let taus: Vec<u32> = sweep.samples.iter().filter_map(|s| s.taus[j]).collect();
    let c = fpt::concentration_from_taus(45.0, taus)?;
    check(
        c.fit.slope < 0.0 && c.fit.r_squared >= 0.8,
        format!("slope {:.3} (< 0), R^2 {:.3} (>= 0.8) over {} points", c.fit.slope, c.fit.r_squared, c.fit.points),
    )
}

fn production_plateau() -> anyhow::Result<Check> {
    let cfg = fpt_config(budget::PRODUCTION_REPLICATIONS)?;
    let model = cfg.model()?;
    let x = FPT_GRID[FPT_GRID.len() - 1];
    let r = frontier::production_experiment(&model, &cfg.run_settings(&model), x)?;
    let share = r.median_share.context("no run reached the middle interval")?;
    check(
        share <= 0.25 && r.all_monotone,
        format!("median growth share {share:.3} (<= 0.25), monotone in every run: {} ({} runs, x = {x})", r.all_monotone, r.runs.len()),
    )
}

fn cluster_scaling() -> anyhow::Result<Check> {
    let cfg = config(&[
        "target.dimension=3",
        "offspring.pmf=[0, 0, 1]",
        &format!("sim.replications={}", budget::CLUSTER_REPLICATIONS),
        &format!("sim.prune.capacity={}", budget::MAX_CAPACITY),
    ])?;
    let model = cfg.model()?;
    let r = frontier::cluster_scaling(&model, &cfg.run_settings(&model), &[20.0, 35.0, 60.0], 0)?;
    let s = r.summary.as_ref().context("no cluster fit")?;
    check(
        (0.6..=1.4).contains(&s.estimate),
        format!("slope {:.3} (95% CI [{:.3}, {:.3}]) in [0.6, 1.4]; median blocks {:?}", s.estimate, s.ci_low, s.ci_high, r.median_blocks),
    )
}

/// Log-spaced `x` grid `e^a, …, e^b` with `k` points.
fn exp_grid(a: f64, b: f64, k: usize) -> Vec<f64> {
    (0..k).map(|i| (a + (b - a) * i as f64 / (k - 1) as f64).exp()).collect()
}

fn local_clt() -> anyhow::Result<Check> {
    let settings = clt::CltSettings {
        seed: SEED,
        batch: 2000,
        batches_per_round: 8,
        min_hits: budget::CLT_MIN_HITS,
        max_walks: 100_000_000,
    };
    let mut pass = true;
    let mut parts = Vec::new();
    // the d=3 hit rate falls like n^{-3/2}, so its grid stops earlier
    for (d, grid) in [(2, exp_grid(4.0, 8.0, 5)), (3, exp_grid(3.0, 5.0, 5))] {
        let model = binary_gaussian(d)?;
        let r = clt::conditional_transverse_hit(&model, &settings, &grid)?;
        let s = r.summary.as_ref().context("no transverse fit")?;
        let worst_z = r
            .points
            .iter()
            .filter_map(|p| p.gaussian_exact.map(|e| (p.estimate - e).abs() / p.std_error))
            .fold(0.0, f64::max);
        pass &= s.pass && worst_z <= 3.0;
        parts.push(format!(
            "d={d}: slope {:.3} vs {:.2} +- {:.2}, worst closed-form gap {worst_z:.2} SE (<= 3)",
            s.estimate, s.target, s.tolerance
        ));
    }
    check(pass, parts.join("; "))
}

fn two_descendants() -> anyhow::Result<Check> {
    let cfg = config(&[
        "target.dimension=1",
        "offspring.pmf=[0, 0, 1]",
        &format!("sim.replications={}", budget::TWODESC_REPLICATIONS),
    ])?;
    let model = cfg.model()?;
    let g: Vec<f64> = (1..=6).map(|k| -(k as f64)).collect();
    let r = twodesc::two_descendant_prob(&model, &cfg.run_settings(&model), 16, &g)?;
    let s = r.summary.as_ref().context("no two-descendant fit")?;
    check(
        s.pass,
        format!("slope {:.3} (95% CI [{:.3}, {:.3}]) vs 2c2 = {:.3} +- 30%", s.estimate, s.ci_low, s.ci_high, s.target),
    )
}

fn ballot_scaling() -> anyhow::Result<Check> {
    let grid = vec![32, 64, 128, 256];
    let mut pass = true;
    let mut parts = Vec::new();
    for (d, boxed, walks) in [(1, false, budget::BALLOT_WALKS_1D), (3, true, budget::BALLOT_WALKS_BOXED)] {
        let model = binary_gaussian(d)?;
        let settings = ballot::BallotSettings {
            seed: SEED,
            n_grid: grid.clone(),
            y: 1.0,
            a: 0.0,
            boxed,
            walks,
            chunk: 100_000,
        };
        let r = ballot::ballot_scaling(&model, &settings)?;
        let s = r.summary.as_ref().context("no ballot fit")?;
        pass &= s.pass;
        let events: Vec<usize> = r.points.iter().map(|p| p.events).collect();
        parts.push(format!(
            "d={d}{}: slope {:.3} vs {:.2} +- {:.2} (events {events:?})",
            if boxed { " boxed" } else { "" },
            s.estimate,
            s.target,
            s.tolerance
        ));
    }
    check(pass, parts.join("; "))
}

fn asymptote_identity() -> anyhow::Result<Check> {
    let grid = [1e2, 1e3, 1e4, 1e5, 1e6];
    let mut pass = true;
    let mut parts = Vec::new();
    for d in 1..=3 {
        let a = binary_gaussian(d)?.asymptote;
        let c1 = a.constants.c1;
        let residual = a.mwtx_residual(1e6);
        let remainders: Vec<f64> = grid.iter().map(|&x| a.mwtx_remainder(x).abs()).collect();
        let shrinking = remainders.windows(2).all(|w| w[1] <= w[0]);
        pass &= residual.abs() <= c1 + 0.01 && shrinking;
        parts.push(format!(
            "d={d}: residual at 1e6 {residual:.3} (|.| <= {:.3}), remainder {:.3} -> {:.3} shrinking: {shrinking}",
            c1 + 0.01,
            remainders[0],
            remainders[remainders.len() - 1]
        ));
    }
    check(pass, parts.join("; "))
}

/// Small configurations exercising every experiment.
pub fn determinism_configs(root: &Path) -> anyhow::Result<Vec<(Experiment, Config)>> {
    let e2 = std::f64::consts::E.powi(2);
    let e3 = std::f64::consts::E.powi(3);
    let specs: Vec<(Experiment, Vec<String>)> = vec![
        (Experiment::Constants, vec!["target.dimension=2".into()]),
        (
            Experiment::SimulateMax,
            vec![
                "sim.replications=6".into(),
                "sim.prune.capacity=2000".into(),
                "maxima.n_grid=[10, 20]".into(),
                "maxima.check_doubling=false".into(),
                "maxima.tail_n=20".into(),
                "maxima.tail_replications=40".into(),
                "maxima.z_grid=[-1.0, 0.0, 1.0]".into(),
            ],
        ),
        (
            Experiment::Fpt,
            vec![
                "target.dimension=2".into(),
                "sim.replications=60".into(),
                "sim.prune.capacity=2000".into(),
                "target.x_grid=[5.0, 8.0, 12.0]".into(),
                "fpt.concentration_x=8.0".into(),
            ],
        ),
        (
            Experiment::Production,
            vec!["target.dimension=2".into(), "sim.replications=4".into(), "sim.prune.capacity=2000".into(), "production.x=8.0".into()],
        ),
        (
            Experiment::Clusters,
            vec![
                "target.dimension=2".into(),
                "sim.replications=6".into(),
                "sim.prune.capacity=2000".into(),
                "clusters.x_grid=[5.0, 8.0, 12.0]".into(),
            ],
        ),
        (
            Experiment::Barrier,
            vec!["sim.replications=20".into(), "sim.prune.capacity=2000".into(), "barrier.n=20".into(), "barrier.betas=[1.0, 2.0, 3.0]".into()],
        ),
        (
            Experiment::Counts,
            vec!["sim.replications=10".into(), "sim.prune.capacity=2000".into(), "counts.n=20".into(), "counts.x_grid=[1.0, 2.0, 3.0]".into()],
        ),
        (
            Experiment::Clt,
            vec![
                "target.dimension=2".into(),
                format!("clt.x_grid=[{e2}, {e3}]"),
                "clt.batch=200".into(),
                "clt.batches_per_round=2".into(),
                "clt.min_hits=50".into(),
                "clt.max_walks=20000".into(),
            ],
        ),
        (
            Experiment::Twodesc,
            vec!["sim.replications=200".into(), "twodesc.n=8".into(), "twodesc.g_grid=[-1.0, -2.0, -3.0]".into()],
        ),
        (
            Experiment::Escape,
            vec!["target.dimension=2".into(), "sim.replications=200".into(), "escape.n_grid=[2, 4, 6]".into()],
        ),
        (
            Experiment::Ballot,
            vec!["ballot.n_grid=[4, 8, 16]".into(), "ballot.walks=20000".into(), "ballot.chunk=1000".into()],
        ),
    ];
    specs
        .into_iter()
        .map(|(exp, mut sets)| {
            let dir = root.join(exp_name(exp));
            sets.push(format!("output.dir=\"{}\"", dir.display()));
            sets.push("output.formats=[\"csv\", \"json\", \"svg\"]".into());
            let refs: Vec<&str> = sets.iter().map(String::as_str).collect();
            Ok((exp, config(&refs)?))
        })
        .collect()
}

pub fn exp_name(exp: Experiment) -> String {
    use clap::ValueEnum;
    exp.to_possible_value().expect("no skipped variants").get_name().to_string()
}

fn snapshot(dir: &Path) -> anyhow::Result<BTreeMap<PathBuf, Vec<u8>>> {
    output_files(dir)?
        .into_iter()
        .map(|p| {
            let bytes = fs::read(&p)?;
            Ok((p, bytes))
        })
        .collect()
}

fn determinism(runner: Runner<'_>, scratch: &Path) -> anyhow::Result<Check> {
    let root = scratch.join("determinism");
    if root.exists() {
        fs::remove_dir_all(&root)?;
    }
    let mut files = 0;
    for (exp, cfg) in determinism_configs(&root)? {
        let dir = PathBuf::from(&cfg.output.dir);
        runner(exp, &cfg).with_context(|| format!("first {} run", exp_name(exp)))?;
        let first = snapshot(&dir)?;
        fs::remove_dir_all(&dir)?;
        runner(exp, &cfg).with_context(|| format!("second {} run", exp_name(exp)))?;
        let second = snapshot(&dir)?;
        if first.is_empty() {
            return check(false, format!("{} wrote no files", exp_name(exp)));
        }
        if first.keys().ne(second.keys()) {
            return check(false, format!("{} wrote different file sets", exp_name(exp)));
        }
        for (path, bytes) in &first {
            if second[path] != *bytes {
                return check(false, format!("{} differs between runs", path.display()));
            }
        }
        files += first.len();
    }
    fs::remove_dir_all(&root)?;
    check(true, format!("{files} files from 11 subcommands byte-identical across reruns"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quick_tier_is_a_subset_of_full() {
        let full = Tier::Full.criteria();
        assert!(Tier::Quick.criteria().iter().all(|c| full.contains(c)));
        assert_eq!(full.len(), 15);
    }

    #[test]
    fn determinism_configs_cover_every_experiment() {
        let cfgs = determinism_configs(Path::new("/tmp/x")).unwrap();
        assert_eq!(cfgs.len(), Experiment::ALL.len());
        for (e, c) in &cfgs {
            assert!(c.output.dir.ends_with(&exp_name(*e)));
        }
    }

    #[test]
    fn result_line_starts_with_the_verdict() {
        let r = CriterionResult {
            id: 4,
            name: name(4),
            pass: false,
            detail: "band 3".into(),
            seconds: 1.0,
        };
        assert!(r.line().starts_with("FAIL criterion  4 maximum tightness"));
    }
}
