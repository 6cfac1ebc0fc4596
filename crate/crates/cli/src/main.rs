use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use brwlab_cli::acceptance::{self, Tier};
use brwlab_cli::config::Config;
use brwlab_cli::{check_output_hashes, run_experiment, CliError, Experiment};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "brwlab", version, about = "Branching random walk laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// TOML config file.
    #[arg(long)]
    config: PathBuf,
    /// Override a config key, e.g. `--set sim.replications=50`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    sets: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Large-deviation constants and assumption checks.
    Constants(RunArgs),
    /// Maximum displacement against m_n, its tail, optional arena dump.
    SimulateMax {
        #[command(flatten)]
        run: RunArgs,
        /// Also write the arena of this replication at the largest n.
        #[arg(long, value_name = "REPLICATION")]
        dump_arena: Option<usize>,
    },
    /// First-passage times over the target grid.
    Fpt(RunArgs),
    /// Production numbers of the frontier set.
    Production(RunArgs),
    /// Frontier clusters and their count scaling.
    Clusters(RunArgs),
    /// Barrier-crossing frequencies.
    Barrier(RunArgs),
    /// Particle counts near the maximum.
    Counts(RunArgs),
    /// Conditional transverse hit probabilities of the plain walk.
    Clt(RunArgs),
    /// Two-descendant probabilities.
    Twodesc(RunArgs),
    /// Escape from the unit ball.
    Escape(RunArgs),
    /// Ballot probabilities of the plain walk.
    Ballot(RunArgs),
    /// Run the acceptance suite, or check the hashes of an output directory.
    Validate {
        #[arg(long, value_enum, default_value = "quick")]
        suite: Tier,
        /// Only these criteria (comma separated).
        #[arg(long, value_delimiter = ',')]
        only: Vec<u8>,
        /// Check that every file in this directory carries one config hash.
        #[arg(long)]
        outputs: Option<PathBuf>,
    },
}

fn experiment(exp: Experiment, args: &RunArgs, dump_arena: Option<usize>) -> Result<(), CliError> {
    let config = Config::load(&args.config, &args.sets)?;
    let outcome = run_experiment(exp, &config, dump_arena)?;
    if let Some(text) = outcome.stdout {
        print!("{text}");
    }
    for (name, pass) in &outcome.passes {
        eprintln!("{name}: {}", if *pass { "pass" } else { "fail" });
    }
    Ok(())
}

fn validate(suite: Tier, only: Vec<u8>, outputs: Option<PathBuf>) -> Result<(), CliError> {
    if let Some(dir) = outputs {
        match check_output_hashes(&dir)? {
            Some(hash) => println!("config hash {hash}"),
            None => println!("no hashed outputs in {}", dir.display()),
        }
        return Ok(());
    }
    let ids = if only.is_empty() { suite.criteria() } else { only };
    let scratch = std::env::temp_dir().join(format!("brwlab-validate-{}", std::process::id()));
    let runner = |exp: Experiment, cfg: &Config| run_experiment(exp, cfg, None).map(|_| ()).map_err(anyhow::Error::from);
    let results = acceptance::run(&ids, &runner, &scratch, |r| {
        println!("{}", r.line());
        let _ = std::io::stdout().flush();
    });
    let _ = std::fs::remove_dir_all(&scratch);
    let failed: Vec<String> = results.iter().filter(|r| !r.pass).map(|r| r.id.to_string()).collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Acceptance(format!("criteria {}", failed.join(", "))))
    }
}

fn configure_threads() {
    if let Some(n) = std::env::var("BRW_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
}

fn main() -> ExitCode {
    configure_threads();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Constants(a) => experiment(Experiment::Constants, a, None),
        Command::SimulateMax { run, dump_arena } => experiment(Experiment::SimulateMax, run, *dump_arena),
        Command::Fpt(a) => experiment(Experiment::Fpt, a, None),
        Command::Production(a) => experiment(Experiment::Production, a, None),
        Command::Clusters(a) => experiment(Experiment::Clusters, a, None),
        Command::Barrier(a) => experiment(Experiment::Barrier, a, None),
        Command::Counts(a) => experiment(Experiment::Counts, a, None),
        Command::Clt(a) => experiment(Experiment::Clt, a, None),
        Command::Twodesc(a) => experiment(Experiment::Twodesc, a, None),
        Command::Escape(a) => experiment(Experiment::Escape, a, None),
        Command::Ballot(a) => experiment(Experiment::Ballot, a, None),
        Command::Validate { suite, only, outputs } => validate(*suite, only.clone(), outputs.clone()),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
