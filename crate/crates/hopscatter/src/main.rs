use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use hopscatter::checks::{all_passed, evaluate};
use hopscatter::config::{ScenarioConfig, KINDS};
use hopscatter::{fixtures, scenario, write_outputs};

#[derive(Parser)]
#[command(
    name = "hopscatter",
    version,
    about = "Edge-assisted BLE backscatter hopping simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario config and write its reports.
    Run {
        /// Path to a JSON config, or the file name of a bundled one.
        config: PathBuf,
        /// Override the config's seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Check the config's `expect` thresholds; exit 1 if any fails.
        #[arg(long)]
        assert: bool,
        /// Directory for report files (default: the config's out_dir, or ./out).
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// List the scenario kinds and their bundled configs.
    ListScenarios,
}

fn load(path: &Path) -> Result<ScenarioConfig> {
    if !path.exists() {
        let name = path
            .file_name()
            .and_then(|n| n.to_str())
            .unwrap_or_default();
        if let Some(text) = fixtures::get(name) {
            return Ok(ScenarioConfig::from_json(text, path)?);
        }
    }
    Ok(ScenarioConfig::load(path)?)
}

fn run(config: &Path, seed: Option<u64>, assert: bool, out_dir: Option<&Path>) -> Result<bool> {
    let mut cfg = load(config)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    let outcome = scenario::run(&cfg).with_context(|| format!("scenario {}", cfg.name))?;
    println!("{}: {}", cfg.name, outcome.headline());
    let dir = cfg.out_dir(out_dir);
    let paths = write_outputs(&dir, &cfg.name, &outcome)
        .with_context(|| format!("writing reports to {}", dir.display()))?;
    for p in paths {
        println!("wrote {}", p.display());
    }
    if !assert {
        return Ok(true);
    }
    let Some(expect) = &cfg.expect else {
        bail!("--assert needs an `expect` section in {}", config.display());
    };
    let checks = evaluate(&outcome, expect);
    for c in &checks {
        println!("{c}");
    }
    Ok(all_passed(&checks))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::ListScenarios => {
            for ((kind, description), (_, fixture)) in KINDS.iter().zip(fixtures::BY_KIND) {
                println!("{kind:<14} {description} [{fixture}]");
            }
            ExitCode::SUCCESS
        }
        Command::Run {
            config,
            seed,
            assert,
            out_dir,
        } => match run(&config, seed, assert, out_dir.as_deref()) {
            Ok(true) => ExitCode::SUCCESS,
            Ok(false) => {
                eprintln!("error: assertion failed");
                ExitCode::from(1)
            }
            Err(e) => {
                eprintln!("error: {e:#}");
                ExitCode::from(2)
            }
        },
    }
}
