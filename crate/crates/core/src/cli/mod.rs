//! Pipeline driver: ingest -> stats -> allocators -> backtest for one
//! sector or a directory of sector configs, emitting all report files.
//!
//! Output layout is fixed: `<output_dir>/<sector>/<artifact>`, with
//! artifacts `cla_weights.csv`, `hrp_weights.csv`, `dendrogram.json`,
//! `frontier.csv`, `daily_returns_train.csv`, `daily_returns_test.csv`,
//! and `report.json`; `run-all` adds `<output_dir>/summary.txt`.

mod config;

pub use config::{
    load_run_config, Overrides, RunConfig, DEFAULT_ITERATIONS, DEFAULT_RF, DEFAULT_SEED,
    DEFAULT_TRADING_DAYS,
};

use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::backtest::{
    self, compare, comparison_table, evaluate, portfolio_daily_returns, report_table,
    SectorComparison,
};
use crate::error::{Error, Result};
use crate::frontier::{frontier_csv, max_sharpe_portfolio, sample_portfolios, weights_csv};
use crate::hrp::{hrp_weights, Dendrogram};
use crate::marketdata::{load_csv_dir, split, PriceTable};
use crate::stats::{correlation, covariance, daily_returns, AnnualizationConvention};

/// How much of the pipeline a subcommand exercises.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Validate and align the inputs; no files written.
    Ingest,
    /// Weights, dendrogram, and frontier cloud.
    Build,
    /// Backtest reports and daily-return series.
    Backtest,
    /// Everything.
    Run,
}

/// One sector's outcome: text for stdout plus the winners (when the
/// backtest ran).
#[derive(Debug)]
pub struct SectorRun {
    pub sector: String,
    pub stdout_text: String,
    pub comparison: Option<SectorComparison>,
}

fn write_file(path: &Path, content: &str) -> Result<()> {
    std::fs::write(path, content).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

fn ingest_summary(sector: &str, table: &PriceTable) -> String {
    let mut out = String::new();
    out.push_str(&format!("sector: {sector}\n"));
    out.push_str(&format!(
        "retained: {} ({} tickers)\n",
        table.tickers().join(", "),
        table.n_tickers()
    ));
    if let (Some(first), Some(last)) = (table.calendar().first(), table.calendar().last()) {
        out.push_str(&format!(
            "calendar: {first} .. {last}, {} dates\n",
            table.n_dates()
        ));
    }
    for ex in table.excluded() {
        out.push_str(&format!("excluded: {} — {}\n", ex.ticker, ex.reason));
    }
    for diag in table.diagnostics() {
        out.push_str(&format!("diagnostic: {diag}\n"));
    }
    out
}

/// Execute one sector through `mode`, writing that mode's artifact files
/// under `<output_dir>/<sector>/`. Errors carry the failing stage name.
pub fn run_sector(cfg: &RunConfig, mode: Mode) -> Result<SectorRun> {
    let table = load_csv_dir(&cfg.ingestion.data_dir, &cfg.ingestion)
        .map_err(|e| e.in_stage("ingest"))?;
    let mut stdout_text = ingest_summary(&cfg.sector, &table);
    if mode == Mode::Ingest {
        return Ok(SectorRun {
            sector: cfg.sector.clone(),
            stdout_text,
            comparison: None,
        });
    }

    let conv = AnnualizationConvention::new(cfg.trading_days).map_err(|e| e.in_stage("stats"))?;
    let (train, test) = split(&table, &cfg.ingestion.window).map_err(|e| e.in_stage("split"))?;
    let train_rm = daily_returns(&train).map_err(|e| e.in_stage("stats"))?;
    let cov = covariance(&train_rm).map_err(|e| e.in_stage("stats"))?;
    let corr = correlation(&cov).map_err(|e| e.in_stage("stats"))?;

    let hrp = hrp_weights(&cov, &corr).map_err(|e| e.in_stage("hrp"))?;
    let cloud = sample_portfolios(&train_rm, &cov, cfg.mc_iterations, cfg.rf, cfg.seed, &conv)
        .map_err(|e| e.in_stage("frontier"))?;
    let cla = max_sharpe_portfolio(&cloud);

    let sector_dir = cfg.output_dir.join(&cfg.sector);
    std::fs::create_dir_all(&sector_dir).map_err(|e| {
        Error::Io {
            path: sector_dir.clone(),
            source: e,
        }
        .in_stage("emit")
    })?;

    if mode != Mode::Backtest {
        let emit = || -> Result<()> {
            write_file(
                &sector_dir.join("cla_weights.csv"),
                &weights_csv(&cla.weights)?,
            )?;
            write_file(
                &sector_dir.join("hrp_weights.csv"),
                &weights_csv(&hrp.weights)?,
            )?;
            let dendro = Dendrogram::new(&hrp.tree, &hrp.order, cov.tickers());
            write_file(&sector_dir.join("dendrogram.json"), &dendro.to_json()?)?;
            write_file(&sector_dir.join("frontier.csv"), &frontier_csv(&cloud)?)?;
            Ok(())
        };
        emit().map_err(|e| e.in_stage("emit"))?;
    }
    if mode == Mode::Build {
        return Ok(SectorRun {
            sector: cfg.sector.clone(),
            stdout_text,
            comparison: None,
        });
    }

    let test_rm = daily_returns(&test).map_err(|e| e.in_stage("stats"))?;
    let backtest_run = || -> Result<(Vec<backtest::PerformanceReport>, String, String)> {
        let cla_train = portfolio_daily_returns(&train_rm, &cla.weights)?;
        let hrp_train = portfolio_daily_returns(&train_rm, &hrp.weights)?;
        let cla_test = portfolio_daily_returns(&test_rm, &cla.weights)?;
        let hrp_test = portfolio_daily_returns(&test_rm, &hrp.weights)?;
        let reports = vec![
            evaluate(&cla_train, &conv, cfg.rf, "CLA", "train")?,
            evaluate(&hrp_train, &conv, cfg.rf, "HRP", "train")?,
            evaluate(&cla_test, &conv, cfg.rf, "CLA", "test")?,
            evaluate(&hrp_test, &conv, cfg.rf, "HRP", "test")?,
        ];
        let train_csv = backtest::daily_returns_csv(&cla_train, &hrp_train)?;
        let test_csv = backtest::daily_returns_csv(&cla_test, &hrp_test)?;
        Ok((reports, train_csv, test_csv))
    };
    let (reports, train_csv, test_csv) = backtest_run().map_err(|e| e.in_stage("backtest"))?;
    let comparison = compare(&reports, &cfg.sector).map_err(|e| e.in_stage("backtest"))?;

    let emit = || -> Result<()> {
        write_file(&sector_dir.join("daily_returns_train.csv"), &train_csv)?;
        write_file(&sector_dir.join("daily_returns_test.csv"), &test_csv)?;
        write_file(
            &sector_dir.join("report.json"),
            &backtest::report_json(&reports)?,
        )?;
        Ok(())
    };
    emit().map_err(|e| e.in_stage("emit"))?;

    stdout_text.push('\n');
    stdout_text.push_str(&report_table(&cfg.sector, &reports));
    stdout_text.push_str(&format!(
        "winner: train {}, test {}\n",
        comparison.train_winner, comparison.test_winner
    ));

    Ok(SectorRun {
        sector: cfg.sector.clone(),
        stdout_text,
        comparison: Some(comparison),
    })
}

/// Outcome of a `run-all` batch: per-sector text in config order, the
/// summary table, and whether every sector succeeded.
#[derive(Debug)]
pub struct BatchRun {
    pub sector_texts: Vec<String>,
    pub summary: String,
    pub all_ok: bool,
}

/// Run every `*.toml` under `config_dir` (sorted by file name) through
/// the full pipeline, isolating per-sector failures, and write
/// `<output_dir>/summary.txt`.
pub fn run_all(config_dir: &Path, overrides: &Overrides, output_dir: &Path) -> Result<BatchRun> {
    if !config_dir.is_dir() {
        return Err(Error::Config(format!(
            "{} is not a config directory",
            config_dir.display()
        )));
    }
    let mut configs: Vec<PathBuf> = std::fs::read_dir(config_dir)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", config_dir.display())))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.extension().map_or(false, |ext| ext == "toml"))
        .collect();
    configs.sort();
    if configs.is_empty() {
        return Err(Error::Config(format!(
            "no sector configs (*.toml) under {}",
            config_dir.display()
        )));
    }

    let outcomes: Vec<(String, Result<SectorRun>)> = configs
        .par_iter()
        .map(|path| {
            let fallback = path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| path.display().to_string());
            match load_run_config(path, overrides, output_dir) {
                Ok(cfg) => (cfg.sector.clone(), run_sector(&cfg, Mode::Run)),
                Err(e) => (fallback, Err(e)),
            }
        })
        .collect();

    let mut sector_texts = Vec::with_capacity(outcomes.len());
    let mut rows = Vec::with_capacity(outcomes.len());
    let mut all_ok = true;
    for (sector, outcome) in outcomes {
        match outcome {
            Ok(run) => {
                rows.push(run.comparison.expect("full run always compares"));
                sector_texts.push(run.stdout_text);
            }
            Err(e) => {
                all_ok = false;
                sector_texts.push(format!("sector {sector} failed: {e}\n"));
                rows.push(SectorComparison {
                    sector,
                    train_winner: "failed".to_string(),
                    test_winner: "failed".to_string(),
                });
            }
        }
    }

    let summary = comparison_table(&rows);
    std::fs::create_dir_all(output_dir).map_err(|e| Error::Io {
        path: output_dir.to_path_buf(),
        source: e,
    })?;
    write_file(&output_dir.join("summary.txt"), &summary)?;

    Ok(BatchRun {
        sector_texts,
        summary,
        all_ok,
    })
}
