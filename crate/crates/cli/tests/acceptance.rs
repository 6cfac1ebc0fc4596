//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
//! failure. `BRW_ACCEPTANCE=quick` limits the run to the quick tier and
//! `BRW_ACCEPTANCE_ONLY=4,5` to chosen criteria.

use std::path::Path;
use std::process::{Command, ExitCode};

use brwlab_cli::acceptance::{self, exp_name, Tier};
use brwlab_cli::config::Config;
use brwlab_cli::Experiment;

/// Runs the experiment through the built binary, so the determinism check
/// covers config files and argument handling too.
fn run_binary(exp: Experiment, cfg: &Config) -> anyhow::Result<()> {
    let dir = Path::new(&cfg.output.dir);
    let parent = dir.parent().unwrap_or(Path::new("."));
    std::fs::create_dir_all(parent)?;
    let path = parent.join(format!("{}.toml", exp_name(exp)));
    std::fs::write(&path, cfg.to_toml_string())?;
    let out = Command::new(env!("CARGO_BIN_EXE_brwlab"))
        .arg(exp_name(exp))
        .arg("--config")
        .arg(&path)
        .output()?;
    anyhow::ensure!(out.status.success(), "exit {:?}: {}", out.status.code(), String::from_utf8_lossy(&out.stderr));
    Ok(())
}

fn main() -> ExitCode {
    if let Some(n) = std::env::var("BRW_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
    let tier = match std::env::var("BRW_ACCEPTANCE").as_deref() {
        Ok("quick") => Tier::Quick,
        _ => Tier::Full,
    };
    let ids: Vec<u8> = match std::env::var("BRW_ACCEPTANCE_ONLY") {
        Ok(list) => list.split(',').filter_map(|s| s.trim().parse().ok()).collect(),
        Err(_) => tier.criteria(),
    };
    let scratch = tempfile::tempdir().expect("scratch directory");
    println!("acceptance suite ({tier:?} tier, criteria {ids:?})");
    let results = acceptance::run(&ids, &run_binary, scratch.path(), |r| println!("{}", r.line()));
    let failed = results.iter().filter(|r| !r.pass).count();
    println!("{} passed, {failed} failed", results.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
