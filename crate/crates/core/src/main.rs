use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use portopt::cli::{load_run_config, run_all, run_sector, Mode, Overrides};

#[derive(Parser)]
#[command(name = "portopt", version, about = "Portfolio construction and backtesting toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate and align the input data; print an ingestion summary
    Ingest(CommonArgs),
    /// Compute HRP and CLA weights, the dendrogram, and the frontier cloud
    Build(CommonArgs),
    /// Backtest both portfolios and emit reports and daily-return series
    Backtest(CommonArgs),
    /// Full pipeline: ingest, build, backtest
    Run(CommonArgs),
    /// Run every sector config in a directory and print a summary table
    RunAll(CommonArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Sector config file (a directory of configs for run-all)
    #[arg(long)]
    config: PathBuf,
    /// Master RNG seed for frontier sampling
    #[arg(long)]
    seed: Option<u64>,
    /// Annual risk-free rate
    #[arg(long)]
    rf: Option<f64>,
    /// Monte-Carlo iteration count
    #[arg(long)]
    iterations: Option<usize>,
    /// Trading days per year
    #[arg(long)]
    trading_days: Option<u32>,
    /// Output directory root
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

impl CommonArgs {
    fn overrides(&self) -> Overrides {
        Overrides {
            seed: self.seed,
            rf: self.rf,
            iterations: self.iterations,
            trading_days: self.trading_days,
        }
    }
}

fn single(args: &CommonArgs, mode: Mode) -> portopt::Result<()> {
    let cfg = load_run_config(&args.config, &args.overrides(), &args.out)?;
    let run = run_sector(&cfg, mode)?;
    print!("{}", run.stdout_text);
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Ingest(args) => single(args, Mode::Ingest),
        Command::Build(args) => single(args, Mode::Build),
        Command::Backtest(args) => single(args, Mode::Backtest),
        Command::Run(args) => single(args, Mode::Run),
        Command::RunAll(args) => run_all(&args.config, &args.overrides(), &args.out)
            .map(|batch| {
                for text in &batch.sector_texts {
                    print!("{text}");
                    println!();
                }
                print!("{}", batch.summary);
                if !batch.all_ok {
                    std::process::exit(1);
                }
            }),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_config() { 2 } else { 1 })
        }
    }
}
