//! Sector configuration: one TOML document per sector, resolved against
//! CLI flag overrides into a [`RunConfig`]. Paths inside the file are
//! relative to the file's own directory so config trees are relocatable.

use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::marketdata::{IngestionConfig, WindowSpec};

pub const DEFAULT_RF: f64 = 0.01;
pub const DEFAULT_TRADING_DAYS: u32 = 250;
pub const DEFAULT_ITERATIONS: usize = 10_000;
pub const DEFAULT_SEED: u64 = 42;

/// Fully resolved parameters for one sector run.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub sector: String,
    pub ingestion: IngestionConfig,
    pub rf: f64,
    pub trading_days: u32,
    pub mc_iterations: usize,
    pub seed: u64,
    pub output_dir: PathBuf,
}

/// CLI flag overrides; a `Some` beats the config file, which beats the
/// built-in defaults.
#[derive(Debug, Clone, Copy, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub rf: Option<f64>,
    pub iterations: Option<usize>,
    pub trading_days: Option<u32>,
}

/// A TOML date may be written quoted or as a native date; both arrive
/// here and normalize through Display to ISO-8601.
#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum DateField {
    Text(String),
    Native(toml::value::Datetime),
}

impl DateField {
    fn parse(&self, field: &str) -> Result<NaiveDate> {
        let text = match self {
            DateField::Text(s) => s.clone(),
            DateField::Native(d) => d.to_string(),
        };
        NaiveDate::parse_from_str(&text, "%Y-%m-%d")
            .map_err(|e| Error::Config(format!("{field}: cannot parse date {text:?}: {e}")))
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SectorConfigFile {
    sector: String,
    data_dir: String,
    #[serde(default)]
    tickers: Vec<String>,
    date_format: Option<String>,
    coverage_threshold: Option<f64>,
    window: WindowTable,
    #[serde(default)]
    run: RunTable,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct WindowTable {
    train_start: DateField,
    train_end: DateField,
    test_start: DateField,
    test_end: DateField,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RunTable {
    rf: Option<f64>,
    trading_days: Option<u32>,
    iterations: Option<usize>,
    seed: Option<u64>,
}

/// Read and validate one sector config. Every failure here is a
/// configuration error (CLI exit code 2).
pub fn load_run_config(
    config_path: &Path,
    overrides: &Overrides,
    output_dir: &Path,
) -> Result<RunConfig> {
    let text = std::fs::read_to_string(config_path).map_err(|e| {
        Error::Config(format!("cannot read config {}: {e}", config_path.display()))
    })?;
    let file: SectorConfigFile = toml::from_str(&text).map_err(|e| {
        Error::Config(format!("cannot parse config {}: {e}", config_path.display()))
    })?;

    if file.sector.trim().is_empty() {
        return Err(Error::Config("sector name is empty".to_string()));
    }
    if file.sector.contains(['/', '\\']) {
        return Err(Error::Config(format!(
            "sector name {:?} must not contain path separators",
            file.sector
        )));
    }

    let window = WindowSpec::new(
        file.window.train_start.parse("window.train_start")?,
        file.window.train_end.parse("window.train_end")?,
        file.window.test_start.parse("window.test_start")?,
        file.window.test_end.parse("window.test_end")?,
    )?;

    let base = config_path.parent().unwrap_or_else(|| Path::new("."));
    let mut ingestion = IngestionConfig::new(base.join(&file.data_dir), window);
    ingestion.tickers = file.tickers;
    if let Some(fmt) = file.date_format {
        ingestion.date_format = fmt;
    }
    if let Some(threshold) = file.coverage_threshold {
        if !(threshold > 0.0 && threshold <= 1.0) {
            return Err(Error::Config(format!(
                "coverage_threshold must be in (0, 1], got {threshold}"
            )));
        }
        ingestion.coverage_threshold = threshold;
    }

    let rf = overrides.rf.or(file.run.rf).unwrap_or(DEFAULT_RF);
    if !rf.is_finite() {
        return Err(Error::Config(format!("rf must be finite, got {rf}")));
    }
    let trading_days = overrides
        .trading_days
        .or(file.run.trading_days)
        .unwrap_or(DEFAULT_TRADING_DAYS);
    if trading_days == 0 {
        return Err(Error::Config("trading_days must be at least 1".to_string()));
    }
    let mc_iterations = overrides
        .iterations
        .or(file.run.iterations)
        .unwrap_or(DEFAULT_ITERATIONS);
    if mc_iterations == 0 {
        return Err(Error::Config("iterations must be at least 1".to_string()));
    }
    let seed = overrides.seed.or(file.run.seed).unwrap_or(DEFAULT_SEED);

    Ok(RunConfig {
        sector: file.sector,
        ingestion,
        rf,
        trading_days,
        mc_iterations,
        seed,
        output_dir: output_dir.to_path_buf(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write_config(dir: &Path, name: &str, body: &str) -> PathBuf {
        let path = dir.join(name);
        std::fs::write(&path, body).unwrap();
        path
    }

    const VALID: &str = r#"
sector = "auto"
data_dir = "data/auto"
tickers = ["MARUTI", "TATAMOTORS"]

[window]
train_start = "2016-01-01"
train_end = "2020-12-31"
test_start = "2021-01-01"
test_end = "2021-08-26"

[run]
seed = 7
iterations = 500
"#;

    #[test]
    fn parses_and_resolves_relative_paths() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_config(dir.path(), "auto.toml", VALID);
        let cfg = load_run_config(&path, &Overrides::default(), Path::new("out")).unwrap();
        assert_eq!(cfg.sector, "auto");
        assert_eq!(cfg.ingestion.data_dir, dir.path().join("data/auto"));
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.mc_iterations, 500);
        assert_eq!(cfg.rf, DEFAULT_RF);
        assert_eq!(cfg.trading_days, DEFAULT_TRADING_DAYS);
        assert_eq!(
            cfg.ingestion.window.train_start,
            NaiveDate::from_ymd_opt(2016, 1, 1).unwrap()
        );
    }

    #[test]
    fn flag_overrides_beat_file_values() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_config(dir.path(), "auto.toml", VALID);
        let overrides = Overrides {
            seed: Some(99),
            rf: Some(0.02),
            iterations: Some(1234),
            trading_days: Some(252),
        };
        let cfg = load_run_config(&path, &overrides, Path::new("out")).unwrap();
        assert_eq!(cfg.seed, 99);
        assert_eq!(cfg.rf, 0.02);
        assert_eq!(cfg.mc_iterations, 1234);
        assert_eq!(cfg.trading_days, 252);
    }

    #[test]
    fn unquoted_toml_dates_accepted() {
        let dir = tempfile::tempdir().unwrap();
        let body = VALID.replace("\"2016-01-01\"", "2016-01-01");
        let path = write_config(dir.path(), "auto.toml", &body);
        let cfg = load_run_config(&path, &Overrides::default(), Path::new("out")).unwrap();
        assert_eq!(
            cfg.ingestion.window.train_start,
            NaiveDate::from_ymd_opt(2016, 1, 1).unwrap()
        );
    }

    #[test]
    fn window_violation_is_config_error() {
        let dir = tempfile::tempdir().unwrap();
        let body = VALID
            .replace("train_end = \"2020-12-31\"", "train_end = \"2021-06-30\"")
            .replace("test_start = \"2021-01-01\"", "test_start = \"2021-01-02\"");
        let path = write_config(dir.path(), "auto.toml", &body);
        let err = load_run_config(&path, &Overrides::default(), Path::new("out")).unwrap_err();
        assert!(err.is_config(), "got {err}");
    }

    #[test]
    fn zero_iterations_is_config_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_config(dir.path(), "auto.toml", VALID);
        let overrides = Overrides {
            iterations: Some(0),
            ..Overrides::default()
        };
        let err = load_run_config(&path, &overrides, Path::new("out")).unwrap_err();
        assert!(err.is_config());
    }

    #[test]
    fn unknown_keys_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let body = format!("{VALID}\nbogus_key = 1\n");
        let path = write_config(dir.path(), "auto.toml", &body);
        let err = load_run_config(&path, &Overrides::default(), Path::new("out")).unwrap_err();
        assert!(err.is_config());
    }

    #[test]
    fn missing_config_file_is_config_error() {
        let err = load_run_config(
            Path::new("/nonexistent/auto.toml"),
            &Overrides::default(),
            Path::new("out"),
        )
        .unwrap_err();
        assert!(err.is_config());
    }
}
