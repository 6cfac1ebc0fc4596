//! One function per experiment subcommand. Each writes its raw samples as
//! CSV, a JSON summary and, when asked, an SVG plot.

use anyhow::Context;
use brwlab::laws::AssumptionReport;
use brwlab::ratefn::{Case, Provenance as SolverProvenance};
use brwlab::stats::{ballot, clt, escape, fpt, frontier, maxima, median, quantile, twodesc, Model, Summary, TailFit};
use brwlab::check_assumptions;
use serde::Serialize;

use crate::config::Config;
use crate::output::{num, opt_num, OutputSink};
use crate::svg::{Plot, PlotKind, Series};

/// What a command reports back to the dispatcher.
#[derive(Debug, Clone, Default)]
pub struct CommandOutcome {
    /// Pass flags of every summary the command computed.
    pub passes: Vec<(String, bool)>,
    /// Text for stdout.
    pub stdout: Option<String>,
}

impl CommandOutcome {
    fn record(&mut self, name: &str, summary: Option<&Summary>) {
        if let Some(s) = summary {
            self.passes.push((name.to_string(), s.pass));
        }
    }
}

fn line_plot(title: &str, x: &str, y: &str, series: Vec<Series>) -> Plot {
    Plot {
        title: title.into(),
        x_label: x.into(),
        y_label: y.into(),
        kind: PlotKind::Line,
        series,
    }
}

fn scatter_plot(title: &str, x: &str, y: &str, series: Vec<Series>) -> Plot {
    Plot {
        kind: PlotKind::Scatter,
        ..line_plot(title, x, y, series)
    }
}

#[derive(Serialize)]
struct ConstantsReport {
    dimension: usize,
    rho: f64,
    c1: f64,
    c2: f64,
    c1_hat: f64,
    c2_vec: Vec<f64>,
    pivot: Vec<f64>,
    spherically_symmetric: bool,
    case: Case,
    pivot_speed: f64,
    pivot_tilt: f64,
    log_coefficient: f64,
    solver: SolverProvenance,
    assumptions: AssumptionReport,
}

pub fn constants(config: &Config, sink: &mut OutputSink) -> anyhow::Result<CommandOutcome> {
    let inc = config.increment_law()?;
    let off = config.offspring_law()?;
    let model = Model::new(inc.clone(), off.clone())?;
    let a = &model.asymptote;
    let k = &a.constants;
    let report = ConstantsReport {
        dimension: k.dimension,
        rho: k.rho,
        c1: k.c1,
        c2: k.c2,
        c1_hat: k.frame.c1_hat,
        c2_vec: k.frame.c2_vec.clone(),
        pivot: a.pivot(),
        spherically_symmetric: k.spherically_symmetric,
        case: a.case,
        pivot_speed: a.pivot_speed(),
        pivot_tilt: a.pivot_tilt(),
        log_coefficient: a.log_coefficient(),
        solver: k.provenance.clone(),
        assumptions: check_assumptions(&inc, &off),
    };
    let mut rows = vec![
        vec!["dimension".into(), report.dimension.to_string()],
        vec!["rho".into(), num(report.rho)],
        vec!["c1".into(), num(report.c1)],
        vec!["c2".into(), num(report.c2)],
        vec!["c1_hat".into(), num(report.c1_hat)],
    ];
    for (j, c) in report.c2_vec.iter().enumerate() {
        rows.push(vec![format!("c2_vec_{j}"), num(*c)]);
    }
    for (j, c) in report.pivot.iter().enumerate() {
        rows.push(vec![format!("pivot_{j}"), num(*c)]);
    }
    rows.push(vec!["pivot_speed".into(), num(report.pivot_speed)]);
    rows.push(vec!["pivot_tilt".into(), num(report.pivot_tilt)]);
    rows.push(vec!["log_coefficient".into(), num(report.log_coefficient)]);
    sink.csv("constants", &["quantity", "value"], &rows)?;
    sink.json("constants", &report)?;
    let mut text = serde_json::to_string_pretty(&report)?;
    text.push('\n');
    Ok(CommandOutcome {
        passes: Vec::new(),
        stdout: Some(text),
    })
}

#[derive(Serialize)]
struct OffsetRow {
    n: u32,
    m_n: f64,
    median_max: f64,
    offset: f64,
}

#[derive(Serialize)]
struct TailReport {
    n: u32,
    replications: usize,
    z_grid: Vec<f64>,
    frequency: Vec<f64>,
    fit: TailFit,
    summary: Summary,
}

#[derive(Serialize)]
struct MaxReport {
    offsets: Vec<OffsetRow>,
    band: Option<f64>,
    band_limit: f64,
    band_pass: Option<bool>,
    doubling_shift: Option<f64>,
    doubling_pass: Option<bool>,
    /// Median `M_n / n` per `n` next to the speed.
    speed_ratio: Vec<(u32, f64)>,
    speed: f64,
    tail: Option<TailReport>,
}

/// Largest capacity-doubling shift of the median maximum still accepted.
pub const DOUBLING_SHIFT_LIMIT: f64 = 0.5;

pub fn simulate_max(config: &Config, sink: &mut OutputSink, dump_arena: Option<usize>) -> anyhow::Result<CommandOutcome> {
    let model = config.model()?;
    let settings = config.run_settings(&model);
    let mc = &config.maxima;
    let a = &model.asymptote;
    let t = maxima::max_tightness(&model, &settings, &mc.n_grid, mc.band_limit, mc.check_doubling)?;
    let mut rows = Vec::new();
    for (rep, row) in t.maxima.iter().enumerate() {
        for (j, &n) in t.n_grid.iter().enumerate() {
            let m_n = a.m_of_n(n as f64);
            rows.push(vec![rep.to_string(), n.to_string(), num(row[j]), num(m_n), num(row[j] - m_n)]);
        }
    }
    sink.csv("maxima", &["replication", "n", "max", "m_n", "offset"], &rows)?;

    let tail = if mc.z_grid.is_empty() {
        None
    } else {
        let mut ts = settings.clone();
        if let Some(r) = mc.tail_replications {
            ts.replications = r;
        }
        if let Some(c) = mc.tail_capacity {
            ts.policy.capacity = c;
            ts.policy.compact_above = ts.policy.compact_above.map(|_| c.saturating_mul(8).max(1 << 20));
        }
        let tail = maxima::max_tail(&model, &ts, mc.tail_n, &mc.z_grid)?;
        let rows: Vec<Vec<String>> = tail.z_grid.iter().zip(&tail.frequency).map(|(z, f)| vec![num(*z), num(*f)]).collect();
        sink.csv("max_tail", &["z", "frequency"], &rows)?;
        Some(TailReport {
            n: tail.n,
            replications: tail.maxima.len(),
            z_grid: tail.z_grid,
            frequency: tail.frequency,
            fit: tail.fit,
            summary: tail.summary,
        })
    };

    let offsets: Vec<OffsetRow> = t
        .n_grid
        .iter()
        .zip(&t.offsets)
        .map(|(&n, &o)| {
            let m_n = a.m_of_n(n as f64);
            OffsetRow {
                n,
                m_n,
                median_max: m_n + o,
                offset: o,
            }
        })
        .collect();
    let speed_ratio = offsets.iter().map(|r| (r.n, r.median_max / r.n as f64)).collect();
    let report = MaxReport {
        band: t.band,
        band_limit: t.band_limit,
        band_pass: t.band_pass(),
        doubling_shift: t.doubling_shift,
        doubling_pass: t.doubling_shift.map(|s| s < DOUBLING_SHIFT_LIMIT),
        speed_ratio,
        speed: a.pivot_speed(),
        tail,
        offsets,
    };
    let mut outcome = CommandOutcome::default();
    if let Some(p) = report.band_pass {
        outcome.passes.push(("band".into(), p));
    }
    if let Some(p) = report.doubling_pass {
        outcome.passes.push(("capacity_doubling".into(), p));
    }
    outcome.record("tail_slope", report.tail.as_ref().map(|t| &t.summary));
    sink.json("simulate-max", &report)?;
    sink.svg(
        "simulate-max",
        &scatter_plot(
            "median maximum minus m_n",
            "n",
            "median(M_n) - m_n",
            vec![Series::new("offset", report.offsets.iter().map(|r| (r.n as f64, r.offset)).collect())],
        ),
    )?;
    if let Some(rep) = dump_arena {
        let n = mc.n_grid.iter().copied().max().unwrap_or(0);
        let out = maxima::replay_run(&model, &settings, n, 0, rep)?;
        let mut raw = Vec::new();
        out.arena.write_csv(&mut raw)?;
        let mut reader = csv::Reader::from_reader(raw.as_slice());
        let header: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
        let rows = reader
            .records()
            .map(|r| r.map(|r| r.iter().map(str::to_string).collect::<Vec<String>>()))
            .collect::<Result<Vec<_>, _>>()?;
        let header: Vec<&str> = header.iter().map(String::as_str).collect();
        sink.csv_file("arena", &header, &rows)?;
    }
    Ok(outcome)
}

#[derive(Serialize)]
struct ConcentrationReport {
    x: f64,
    median: f64,
    exceedance: Vec<(f64, f64)>,
    fit: TailFit,
}

#[derive(Serialize)]
struct FptReport {
    points: Vec<fpt::FptPoint>,
    log_correction: Option<Summary>,
    inverse_speed: Option<Summary>,
    iqr_increases: usize,
    iqr_trend_pass: bool,
    total_restarts: usize,
    total_dropped: usize,
    concentration: Option<ConcentrationReport>,
}

pub fn fpt(config: &Config, sink: &mut OutputSink) -> anyhow::Result<CommandOutcome> {
    let model = config.model()?;
    let settings = config.run_settings(&model);
    let grid = &config.target.x_grid;
    let sweep = fpt::fpt_sweep(&model, &settings, grid)?;
    let mut rows = Vec::new();
    for (rep, s) in sweep.samples.iter().enumerate() {
        for (j, &x) in grid.iter().enumerate() {
            rows.push(vec![
                rep.to_string(),
                num(x),
                s.taus[j].map(|t| t.to_string()).unwrap_or_default(),
                s.restarts.to_string(),
                s.dropped.to_string(),
            ]);
        }
    }
    sink.csv("fpt", &["replication", "x", "tau", "restarts", "dropped"], &rows)?;
    let concentration = match config.fpt.concentration_x {
        None => None,
        Some(x) => {
            let c = match grid.iter().position(|&g| g == x) {
                Some(j) => fpt::concentration_from_taus(x, sweep.samples.iter().filter_map(|s| s.taus[j]).collect())?,
                None => fpt::concentration_fit(&model, &settings, x)?,
            };
            Some(ConcentrationReport {
                x,
                median: c.median,
                exceedance: c.exceedance,
                fit: c.fit,
            })
        }
    };
    let report = FptReport {
        iqr_increases: sweep.iqr_increases,
        iqr_trend_pass: sweep.iqr_increases <= 1,
        total_restarts: sweep.samples.iter().map(|s| s.restarts).sum(),
        total_dropped: sweep.samples.iter().map(|s| s.dropped).sum(),
        points: sweep.points,
        log_correction: sweep.log_correction,
        inverse_speed: sweep.inverse_speed,
        concentration,
    };
    let mut outcome = CommandOutcome::default();
    outcome.record("log_correction", report.log_correction.as_ref());
    outcome.record("inverse_speed", report.inverse_speed.as_ref());
    sink.json("fpt", &report)?;
    let a = &model.asymptote;
    sink.svg(
        "fpt",
        &line_plot(
            "first passage time",
            "x",
            "generations",
            vec![
                Series::new("median tau", report.points.iter().map(|p| (p.x, p.median)).collect()),
                Series::new("t_x", grid.iter().map(|&x| (x, a.t_of_x(x))).collect()),
            ],
        ),
    )?;
    Ok(outcome)
}

#[derive(Serialize)]
struct ProductionSummary {
    x: f64,
    runs: usize,
    margin: u32,
    median_share: Option<f64>,
    share_limit: f64,
    share_pass: Option<bool>,
    all_monotone: bool,
    /// Set when any run was pruned, so counts are approximate.
    approx: bool,
}

/// Largest accepted median growth share of the middle interval.
pub const GROWTH_SHARE_LIMIT: f64 = 0.25;

pub fn production(config: &Config, sink: &mut OutputSink) -> anyhow::Result<CommandOutcome> {
    let model = config.model()?;
    let settings = config.run_settings(&model);
    let x = config
        .production
        .x
        .or_else(|| config.target.x_grid.iter().copied().reduce(f64::max))
        .context("production needs `production.x` or a non-empty `target.x_grid`")?;
    let r = frontier::production_experiment(&model, &settings, x)?;
    let approx = r.runs.iter().any(|run| !run.halfspace.exact);
    let mut rows = Vec::new();
    for (rep, run) in r.runs.iter().enumerate() {
        for n in 0..=run.tau as usize {
            rows.push(vec![
                rep.to_string(),
                run.tau.to_string(),
                n.to_string(),
                run.halfspace.values[n].to_string(),
                run.band.values[n].to_string(),
                if run.halfspace.exact { "exact" } else { "approx" }.to_string(),
            ]);
        }
    }
    sink.csv("production", &["replication", "tau", "n", "p_n", "p_band_n", "status"], &rows)?;
    // quantiles across runs at each generation reached by at least one run
    let longest = r.runs.iter().map(|run| run.tau as usize).max().unwrap_or(0);
    let mut qrows = Vec::new();
    for n in 0..=longest {
        let vals: Vec<f64> = r
            .runs
            .iter()
            .filter(|run| run.tau as usize >= n)
            .map(|run| run.halfspace.values[n] as f64)
            .collect();
        if vals.is_empty() {
            continue;
        }
        qrows.push(vec![
            n.to_string(),
            vals.len().to_string(),
            num(quantile(&vals, 0.25)),
            num(median(&vals)),
            num(quantile(&vals, 0.75)),
        ]);
    }
    sink.csv("production_quantiles", &["n", "runs", "q25", "median", "q75"], &qrows)?;
    let summary = ProductionSummary {
        x,
        runs: r.runs.len(),
        margin: r.margin,
        median_share: r.median_share,
        share_limit: GROWTH_SHARE_LIMIT,
        share_pass: r.median_share.map(|s| s <= GROWTH_SHARE_LIMIT),
        all_monotone: r.all_monotone,
        approx,
    };
    let mut outcome = CommandOutcome::default();
    if let Some(p) = summary.share_pass {
        outcome.passes.push(("growth_share".into(), p));
    }
    outcome.passes.push(("monotone".into(), summary.all_monotone));
    sink.json("production", &summary)?;
    if let Some(run) = r.runs.first() {
        let curve = |v: &[usize]| v.iter().enumerate().map(|(n, p)| (n as f64, *p as f64)).collect();
        sink.svg(
            "production",
            &line_plot(
                "production numbers, replication 0",
                "generation n",
                "ancestors",
                vec![Series::new("P_n", curve(&run.halfspace.values)), Series::new("P'_n", curve(&run.band.values))],
            ),
        )?;
    }
    Ok(outcome)
}

#[derive(Serialize)]
struct ClusterSummary {
    x_grid: Vec<f64>,
    median_blocks: Vec<f64>,
    fit: Option<TailFit>,
    summary: Option<Summary>,
    approx: bool,
}

pub fn clusters(config: &Config, sink: &mut OutputSink) -> anyhow::Result<CommandOutcome> {
    let model = config.model()?;
    let settings = config.run_settings(&model);
    let grid = config.clusters.x_grid.clone().unwrap_or_else(|| config.target.x_grid.clone());
    let r = frontier::cluster_scaling(&model, &settings, &grid, config.clusters.lag_k)?;
    let mut rows = Vec::new();
    for row in &r.rows {
        for b in 0..row.blocks {
            rows.push(vec![
                num(row.x),
                row.replication.to_string(),
                row.tau.to_string(),
                b.to_string(),
                row.cardinality[b].to_string(),
                row.lca_age[b].to_string(),
                num(row.g[b]),
                num(row.dispersion[b]),
                row.linear_m[b].to_string(),
                if row.exact { "exact" } else { "approx" }.to_string(),
            ]);
        }
    }
    sink.csv(
        "clusters",
        &["x", "replication", "tau", "block_id", "cardinality", "lca_age", "g", "dispersion", "linear_m", "status"],
        &rows,
    )?;
    let summary = ClusterSummary {
        approx: r.rows.iter().any(|row| !row.exact),
        x_grid: r.x_grid,
        median_blocks: r.median_blocks,
        fit: r.fit,
        summary: r.summary,
    };
    let mut outcome = CommandOutcome::default();
    outcome.record("block_slope", summary.summary.as_ref());
    sink.json("clusters", &summary)?;
    sink.svg(
        "clusters",
        &scatter_plot(
            "median number of clusters",
            "log x",
            "log median blocks",
            vec![Series::new(
                "blocks",
                summary.x_grid.iter().zip(&summary.median_blocks).map(|(x, m)| (x.ln(), m.ln())).collect(),
            )],
        ),
    )?;
    Ok(outcome)
}

pub fn barrier(config: &Config, sink: &mut OutputSink) -> anyhow::Result<CommandOutcome> {
    let model = config.model()?;
    let settings = config.run_settings(&model);
    let r = frontier::barrier_frequency(&model, &settings, config.barrier.n, &config.barrier.betas)?;
    let runs = settings.replications;
    let rows: Vec<Vec<String>> = r
        .betas
        .iter()
        .zip(&r.crossings)
        .zip(&r.frequency)
        .map(|((b, c), f)| {
            vec![num(*b), runs.to_string(), c.to_string(), num(*f), if r.exact { "exact" } else { "approx" }.to_string()]
        })
        .collect();
    sink.csv("barrier", &["beta", "runs", "crossings", "frequency", "status"], &rows)?;
    let mut outcome = CommandOutcome::default();
    outcome.record("barrier_slope", r.summary.as_ref());
    sink.json("barrier", &r)?;
    sink.svg(
        "barrier",
        &scatter_plot(
            "barrier crossing frequency",
            "beta",
            "log frequency",
            vec![Series::new(
                "crossings",
                r.betas.iter().zip(&r.frequency).filter(|(_, f)| **f > 0.0).map(|(b, f)| (*b, f.ln())).collect(),
            )],
        ),
    )?;
    Ok(outcome)
}

#[derive(Serialize)]
struct CountSummary {
    n: u32,
    x_grid: Vec<f64>,
    median_counts: Vec<f64>,
    fit: Option<TailFit>,
    summary: Option<Summary>,
}

pub fn counts(config: &Config, sink: &mut OutputSink) -> anyhow::Result<CommandOutcome> {
    let model = config.model()?;
    let settings = config.run_settings(&model);
    let r = frontier::count_profile(&model, &settings, config.counts.n, &config.counts.x_grid)?;
    let mut rows = Vec::new();
    for (rep, c) in r.counts.iter().enumerate() {
        for (x, k) in r.x_grid.iter().zip(c) {
            rows.push(vec![rep.to_string(), num(*x), k.to_string()]);
        }
    }
    sink.csv("counts", &["replication", "x", "count"], &rows)?;
    let summary = CountSummary {
        n: r.n,
        x_grid: r.x_grid,
        median_counts: r.median_counts,
        fit: r.fit,
        summary: r.summary,
    };
    let mut outcome = CommandOutcome::default();
    outcome.record("count_slope", summary.summary.as_ref());
    sink.json("counts", &summary)?;
    sink.svg(
        "counts",
        &scatter_plot(
            "particles above m_n - x",
            "x",
            "log median count",
            vec![Series::new(
                "count",
                summary.x_grid.iter().zip(&summary.median_counts).filter(|(_, m)| **m > 0.0).map(|(x, m)| (*x, m.ln())).collect(),
            )],
        ),
    )?;
    Ok(outcome)
}

pub fn clt(config: &Config, sink: &mut OutputSink) -> anyhow::Result<CommandOutcome> {
    let model = config.model()?;
    let c = &config.clt;
    let settings = clt::CltSettings {
        seed: config.seed(),
        batch: c.batch,
        batches_per_round: c.batches_per_round,
        min_hits: c.min_hits,
        max_walks: c.max_walks,
    };
    let r = clt::conditional_transverse_hit(&model, &settings, &c.x_grid)?;
    let rows: Vec<Vec<String>> = r
        .points
        .iter()
        .map(|p| {
            vec![
                num(p.x),
                p.steps.to_string(),
                p.walks.to_string(),
                p.accepted.to_string(),
                p.hits.to_string(),
                num(p.estimate),
                num(p.std_error),
                opt_num(p.gaussian_exact),
            ]
        })
        .collect();
    sink.csv("clt", &["x", "steps", "walks", "accepted", "hits", "estimate", "std_error", "gaussian_exact"], &rows)?;
    let mut outcome = CommandOutcome::default();
    outcome.record("transverse_slope", r.summary.as_ref());
    sink.json("clt", &r)?;
    sink.svg(
        "clt",
        &scatter_plot(
            "conditional transverse hit",
            "log x",
            "log p",
            vec![Series::new(
                "estimate",
                r.points.iter().filter(|p| p.estimate > 0.0).map(|p| (p.x.ln(), p.estimate.ln())).collect(),
            )],
        ),
    )?;
    Ok(outcome)
}

pub fn twodesc(config: &Config, sink: &mut OutputSink) -> anyhow::Result<CommandOutcome> {
    let model = config.model()?;
    let settings = config.run_settings(&model);
    let r = twodesc::two_descendant_prob(&model, &settings, config.twodesc.n, &config.twodesc.g_grid)?;
    let rows: Vec<Vec<String>> = r
        .points
        .iter()
        .map(|p| vec![num(p.g), num(p.level), num(p.estimate), num(p.direct)])
        .collect();
    sink.csv("twodesc", &["g", "level", "estimate", "direct"], &rows)?;
    let mut outcome = CommandOutcome::default();
    outcome.record("two_descendant_slope", r.summary.as_ref());
    sink.json("twodesc", &r)?;
    sink.svg(
        "twodesc",
        &scatter_plot(
            "two-descendant probability",
            "g",
            "log p - 2 log(|g| + 1)",
            vec![Series::new(
                "estimate",
                r.points
                    .iter()
                    .filter(|p| p.estimate > 0.0)
                    .map(|p| (p.g, p.estimate.ln() - 2.0 * (p.g.abs() + 1.0).ln()))
                    .collect(),
            )],
        ),
    )?;
    Ok(outcome)
}

pub fn escape(config: &Config, sink: &mut OutputSink) -> anyhow::Result<CommandOutcome> {
    let model = config.model()?;
    let settings = config.run_settings(&model);
    let r = escape::escape_prob(&model, &settings, &config.escape.n_grid)?;
    let rows: Vec<Vec<String>> = r
        .n_grid
        .iter()
        .zip(&r.escapes)
        .zip(&r.frequency)
        .map(|((n, e), f)| vec![n.to_string(), r.runs.to_string(), e.to_string(), num(*f)])
        .collect();
    sink.csv("escape", &["n", "runs", "escapes", "frequency"], &rows)?;
    let outcome = CommandOutcome {
        passes: vec![("strictly_decreasing".into(), r.strictly_decreasing)],
        stdout: None,
    };
    sink.json("escape", &r)?;
    sink.svg(
        "escape",
        &scatter_plot(
            "escape from the unit ball",
            "n",
            "log frequency",
            vec![Series::new(
                "escape",
                r.n_grid.iter().zip(&r.frequency).filter(|(_, f)| **f > 0.0).map(|(n, f)| (*n as f64, f.ln())).collect(),
            )],
        ),
    )?;
    Ok(outcome)
}

pub fn ballot(config: &Config, sink: &mut OutputSink) -> anyhow::Result<CommandOutcome> {
    let model = config.model()?;
    let b = &config.ballot;
    let settings = ballot::BallotSettings {
        seed: config.seed(),
        n_grid: b.n_grid.clone(),
        y: b.y,
        a: b.a,
        boxed: b.boxed,
        walks: b.walks,
        chunk: b.chunk,
    };
    let r = ballot::ballot_scaling(&model, &settings)?;
    let rows: Vec<Vec<String>> = r
        .points
        .iter()
        .map(|p| vec![p.n.to_string(), p.events.to_string(), num(p.estimate), num(p.std_error)])
        .collect();
    sink.csv("ballot", &["n", "events", "estimate", "std_error"], &rows)?;
    let mut outcome = CommandOutcome::default();
    outcome.record("ballot_slope", r.summary.as_ref());
    sink.json("ballot", &r)?;
    sink.svg(
        "ballot",
        &scatter_plot(
            "ballot probability",
            "log n",
            "log p",
            vec![Series::new(
                "estimate",
                r.points.iter().filter(|p| p.estimate > 0.0).map(|p| ((p.n as f64).ln(), p.estimate.ln())).collect(),
            )],
        ),
    )?;
    Ok(outcome)
}
