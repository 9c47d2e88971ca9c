use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};

use lipgeo_cli::{list_corpus_table, parse_config, run_config, TGridConfig};

#[derive(Parser)]
#[command(name = "lipgeo", version, about = "Lipschitz-geometry laboratory on sampled sets")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Execute a run configuration and write reports.
    Run {
        /// Path to the TOML run configuration.
        config: PathBuf,
        /// Output directory (overrides the config's output_dir; default `out`).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Seed override.
        #[arg(long)]
        seed: Option<u64>,
        /// Global density override.
        #[arg(long)]
        density: Option<f64>,
        /// Radius grid override as MIN:MAX:COUNT (log-spaced), applied to
        /// tasks without their own grid.
        #[arg(long, value_name = "MIN:MAX:COUNT")]
        t_grid: Option<String>,
        /// Abort at the first task error.
        #[arg(long)]
        fail_fast: bool,
        /// Discretization slack for embedding bound checks (default 0.1).
        #[arg(long)]
        slack: Option<f64>,
    },
    /// Print the built-in corpus with known verdicts and oracles.
    ListCorpus,
}

fn main() -> ExitCode {
    // LIPGEO_THREADS caps parallelism globally.
    if let Ok(n) = std::env::var("LIPGEO_THREADS") {
        if let Ok(n) = n.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
        }
    }
    match main_inner() {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn main_inner() -> anyhow::Result<ExitCode> {
    let cli = Cli::parse();
    match cli.command {
        Command::Run { config, out, seed, density, t_grid, fail_fast, slack } => {
            let text = std::fs::read_to_string(&config)
                .with_context(|| format!("reading {}", config.display()))?;
            let mut cfg = parse_config(&text)?;
            if let Some(seed) = seed {
                cfg.seed = Some(seed);
            }
            if let Some(density) = density {
                cfg.density = Some(density);
            }
            if let Some(slack) = slack {
                cfg.slack = Some(slack);
            }
            if fail_fast {
                cfg.fail_fast = true;
            }
            if let Some(spec) = t_grid {
                let parts: Vec<&str> = spec.split(':').collect();
                anyhow::ensure!(parts.len() == 3, "--t-grid expects MIN:MAX:COUNT");
                let grid = TGridConfig::Log {
                    min: parts[0].parse()?,
                    max: parts[1].parse()?,
                    count: parts[2].parse()?,
                };
                for task in cfg.tasks.iter_mut() {
                    if task.t_grid.is_none() {
                        task.t_grid = Some(grid.clone());
                    }
                }
            }
            let out_dir = out
                .or_else(|| cfg.output_dir.clone())
                .unwrap_or_else(|| PathBuf::from("out"));
            let outcome = run_config(&cfg, &out_dir)?;
            print!("{}", lipgeo::report::render_summary(&outcome.report));
            println!("report: {}", out_dir.join("report.json").display());
            Ok(ExitCode::from(outcome.exit_code as u8))
        }
        Command::ListCorpus => {
            print!("{}", list_corpus_table());
            Ok(ExitCode::SUCCESS)
        }
    }
}
