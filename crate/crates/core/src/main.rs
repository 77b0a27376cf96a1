//! Command-line entry point for the campaign workbench.

use std::path::PathBuf;

use clap::{Parser, Subcommand};

use lamdrl::allocators::AllocatorKind;
use lamdrl::config::{ScenarioConfig, WeatherKind};
use lamdrl::harness::{run_campaign, summarize_dir, CampaignConfig, ProviderKind};

#[derive(Parser)]
#[command(name = "lamdrl", about = "LEO NTN downlink resource-allocation workbench")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a campaign: train learning allocators, evaluate all allocators,
    /// and write raw CSVs plus summary and plot data.
    Run {
        /// TOML campaign configuration; omitted fields use defaults.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Allocators to run (repeatable): equal, wf, mmf, pc, drl, lamdrl.
        #[arg(long = "allocator")]
        allocators: Vec<AllocatorKind>,
        /// Weather scenarios to run (repeatable): nominal, extreme.
        #[arg(long = "scenario")]
        scenarios: Vec<WeatherKind>,
        /// Campaign seeds (repeatable).
        #[arg(long = "seed")]
        seeds: Vec<u64>,
        /// Strategy provider: mock or remote.
        #[arg(long)]
        provider: Option<ProviderKind>,
        /// Output directory.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Training episodes per learning allocator.
        #[arg(long)]
        train_episodes: Option<usize>,
        /// Evaluation episodes per cell.
        #[arg(long)]
        eval_episodes: Option<usize>,
        /// Scenario profile when no config file is given: desk or paper.
        #[arg(long, default_value = "desk")]
        profile: String,
    },
    /// Recompute the summary from the raw CSVs in a run directory.
    Summarize {
        #[arg(long = "in")]
        input: PathBuf,
    },
    /// Print the default campaign configuration as TOML.
    PrintConfig,
}

fn main() {
    if let Err(e) = run() {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}

fn run() -> Result<(), lamdrl::Error> {
    match Cli::parse().command {
        Command::Run {
            config,
            allocators,
            scenarios,
            seeds,
            provider,
            out,
            train_episodes,
            eval_episodes,
            profile,
        } => {
            let mut cfg = match config {
                Some(path) => CampaignConfig::from_toml_path(&path)?,
                None => CampaignConfig {
                    scenario: match profile.as_str() {
                        "desk" => ScenarioConfig::desk(),
                        "paper" => ScenarioConfig::paper_scale(),
                        other => {
                            return Err(lamdrl::Error::Config(format!(
                                "unknown profile '{other}' (expected desk or paper)"
                            )))
                        }
                    },
                    ..CampaignConfig::default()
                },
            };
            if !allocators.is_empty() {
                cfg.allocators = allocators;
            }
            if !scenarios.is_empty() {
                cfg.weathers = scenarios;
            }
            if !seeds.is_empty() {
                cfg.seeds = seeds;
            }
            if let Some(p) = provider {
                cfg.provider = p;
            }
            if let Some(dir) = out {
                cfg.output_dir = dir;
            }
            if let Some(n) = train_episodes {
                cfg.episodes_train = n;
            }
            if let Some(n) = eval_episodes {
                cfg.episodes_eval = n;
            }
            let report = run_campaign(&cfg)?;
            print!("{}", report.to_summary_csv());
            eprintln!("wrote raw CSVs and summary to {}", cfg.output_dir.display());
            Ok(())
        }
        Command::Summarize { input } => {
            let report = summarize_dir(&input)?;
            print!("{}", report.to_summary_csv());
            Ok(())
        }
        Command::PrintConfig => {
            print!("{}", CampaignConfig::default().to_toml());
            Ok(())
        }
    }
}
