use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ensemble_cli::commands::{self, Mode, Overrides};
use ensemble_cli::config::PipelineConfig;
use ensemble_core::scoring::Strategy;

#[derive(Parser)]
#[command(name = "ensemble", version, about = "Judge-ensemble response selection pipeline")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Pipeline configuration file (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Override the configured RNG seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the configured scoring strategy.
    #[arg(long, value_parser = parse_strategy)]
    strategy: Option<Strategy>,
    /// Override the configured output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_strategy(s: &str) -> Result<Strategy, String> {
    s.parse().map_err(|e| format!("{e}"))
}

fn parse_mode(s: &str) -> Result<Mode, String> {
    s.parse().map_err(|e| format!("{e}"))
}

#[derive(Subcommand)]
enum Command {
    /// Score every response with every configured judge endpoint.
    Score(Common),
    /// Aggregate the score tensor into final per-response scores.
    Infer {
        #[command(flatten)]
        common: Common,
        /// Aggregation mode: plain averaging or the reliability-weighted fit.
        #[arg(long, value_parser = parse_mode, default_value = "weighted")]
        mode: Mode,
    },
    /// Pick the best response per query from the final scores.
    Select(Common),
    /// Compare the selections against correctness labels.
    Eval(Common),
    /// Sample a synthetic score tensor with known ground truth.
    Simulate(Common),
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = Cli::parse();
    let (common, run): (&Common, Box<dyn FnOnce(&PipelineConfig, &Overrides) -> ensemble_core::Result<()>>) =
        match &cli.command {
            Command::Score(c) => (c, Box::new(|cfg, ov| commands::cmd_score(cfg, ov).map(drop))),
            Command::Infer { common, mode } => {
                let mode = *mode;
                (
                    common,
                    Box::new(move |cfg, ov| commands::cmd_infer(cfg, ov, mode).map(drop)),
                )
            }
            Command::Select(c) => (c, Box::new(|cfg, ov| commands::cmd_select(cfg, ov).map(drop))),
            Command::Eval(c) => (
                c,
                Box::new(|cfg, ov| {
                    let report = commands::cmd_eval(cfg, ov)?;
                    print!("{report}");
                    Ok(())
                }),
            ),
            Command::Simulate(c) => (
                c,
                Box::new(|cfg, ov| commands::cmd_simulate(cfg, ov).map(drop)),
            ),
        };
    let overrides = Overrides {
        seed: common.seed,
        strategy: common.strategy,
        out: common.out.clone(),
    };
    let result = PipelineConfig::load(&common.config).and_then(|cfg| run(&cfg, &overrides));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
