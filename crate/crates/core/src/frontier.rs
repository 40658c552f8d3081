//! Monte-Carlo efficient frontier: random long-only portfolios sampled
//! uniformly from the simplex, annualized and ranked. The max-Sharpe
//! pick is reported under the label "CLA" for continuity with the
//! mean-variance literature, though selection here is by sampling, not
//! the exact critical line algorithm.
//!
//! Sampling is deterministic for a fixed seed regardless of thread
//! count: each iteration gets its own ChaCha stream derived from the
//! master seed and the iteration index.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hrp::WeightVector;
use crate::stats::{self, AnnualizationConvention, CovarianceMatrix, ReturnMatrix};

/// One random portfolio with its annualized statistics.
#[derive(Debug, Clone)]
pub struct FrontierSample {
    pub weights: WeightVector,
    pub annual_return: f64,
    pub annual_vol: f64,
    pub sharpe: f64,
}

/// The full point cloud plus the parameters that produced it.
#[derive(Debug, Clone)]
pub struct FrontierCloud {
    samples: Vec<FrontierSample>,
    rf: f64,
    seed: u64,
}

impl FrontierCloud {
    pub fn new(samples: Vec<FrontierSample>, rf: f64, seed: u64) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::InvalidInput("empty frontier cloud".to_string()));
        }
        Ok(FrontierCloud { samples, rf, seed })
    }

    pub fn samples(&self) -> &[FrontierSample] {
        &self.samples
    }

    pub fn rf(&self) -> f64 {
        self.rf
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }
}

/// Draw a weight vector uniformly from the simplex: exponentials from
/// inverse-CDF sampling, normalized (Dirichlet(1,...,1)).
fn simplex_draw(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let mut draws: Vec<f64> = (0..n)
        .map(|_| {
            let u: f64 = rng.gen();
            -(1.0 - u).ln()
        })
        .collect();
    let total: f64 = draws.iter().sum();
    if total > 0.0 {
        for d in &mut draws {
            *d /= total;
        }
    } else {
        // All draws exactly zero is astronomically unlikely but cheap to
        // make well-defined.
        draws = vec![1.0 / n as f64; n];
    }
    draws
}

/// Sample `iterations` random portfolios. Deterministic for a fixed
/// seed: iteration `i` uses the master seed on ChaCha stream `i`, so the
/// cloud is identical however rayon schedules the work.
pub fn sample_portfolios(
    rm: &ReturnMatrix,
    cov: &CovarianceMatrix,
    iterations: usize,
    rf: f64,
    seed: u64,
    conv: &AnnualizationConvention,
) -> Result<FrontierCloud> {
    if iterations == 0 {
        return Err(Error::InvalidInput(
            "frontier sampling needs at least one iteration".to_string(),
        ));
    }
    if rm.tickers() != cov.tickers() {
        return Err(Error::InvalidInput(
            "return matrix and covariance ticker sets differ".to_string(),
        ));
    }
    let n = cov.n();
    if n == 0 {
        return Err(Error::InvalidInput("no assets to sample".to_string()));
    }
    let means = rm.column_means();
    let days = conv.days();

    let samples: Vec<FrontierSample> = (0..iterations as u64)
        .into_par_iter()
        .map(|i| -> Result<FrontierSample> {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i);
            let w = simplex_draw(&mut rng, n);
            let daily_mean: f64 = w.iter().zip(&means).map(|(wi, m)| wi * m).sum();
            let annual_return = daily_mean * days;
            let annual_vol = cov.quadratic_form(&w).max(0.0).sqrt() * days.sqrt();
            let sharpe = stats::sharpe_ratio(annual_return, annual_vol, rf)?;
            Ok(FrontierSample {
                weights: WeightVector::new(cov.tickers().to_vec(), w)?,
                annual_return,
                annual_vol,
                sharpe,
            })
        })
        .collect::<Result<_>>()?;
    FrontierCloud::new(samples, rf, seed)
}

/// The leftmost cloud point: minimal annual_vol, ties broken by higher
/// sharpe, then by lower sample index.
pub fn min_variance_portfolio(cloud: &FrontierCloud) -> &FrontierSample {
    let mut best = &cloud.samples()[0];
    for s in &cloud.samples()[1..] {
        if s.annual_vol < best.annual_vol
            || (s.annual_vol == best.annual_vol && s.sharpe > best.sharpe)
        {
            best = s;
        }
    }
    best
}

/// The optimum-risk cloud point: maximal sharpe, ties broken by lower
/// vol, then by lower sample index.
pub fn max_sharpe_portfolio(cloud: &FrontierCloud) -> &FrontierSample {
    let mut best = &cloud.samples()[0];
    for s in &cloud.samples()[1..] {
        if s.sharpe > best.sharpe || (s.sharpe == best.sharpe && s.annual_vol < best.annual_vol) {
            best = s;
        }
    }
    best
}

/// Exact unconstrained minimum-variance solution `w = S^-1 1 / (1' S^-1 1)`,
/// used as a convergence oracle. May leave the long-only simplex; callers
/// check `is_long_only` before comparing against sampled portfolios.
pub fn closed_form_min_variance(cov: &CovarianceMatrix) -> Result<WeightVector> {
    let n = cov.n();
    if n == 0 {
        return Err(Error::InvalidInput("empty covariance".to_string()));
    }
    let m = nalgebra::DMatrix::from_row_slice(n, n, cov.values());
    let eig = m.symmetric_eigen();
    let mut max_abs: f64 = 0.0;
    let mut min_abs = f64::INFINITY;
    for &l in eig.eigenvalues.iter() {
        max_abs = max_abs.max(l.abs());
        min_abs = min_abs.min(l.abs());
    }
    let cond = if min_abs > 0.0 {
        max_abs / min_abs
    } else {
        f64::INFINITY
    };
    if cond > 1e12 {
        return Err(Error::IllConditioned { cond });
    }
    // S^-1 1 through the eigendecomposition already in hand.
    let ones = nalgebra::DVector::from_element(n, 1.0);
    let projected = eig.eigenvectors.transpose() * &ones;
    let scaled = nalgebra::DVector::from_iterator(
        n,
        projected.iter().zip(eig.eigenvalues.iter()).map(|(p, l)| p / l),
    );
    let raw = &eig.eigenvectors * scaled;
    let denom: f64 = raw.iter().sum();
    if denom.abs() < 1e-12 {
        return Err(Error::IllConditioned { cond: f64::INFINITY });
    }
    let weights: Vec<f64> = raw.iter().map(|x| x / denom).collect();
    Ok(WeightVector::new_unchecked(cov.tickers().to_vec(), weights))
}

#[derive(Debug, Serialize, Deserialize, PartialEq)]
struct FrontierRow {
    vol: f64,
    #[serde(rename = "return")]
    ret: f64,
    sharpe: f64,
}

#[derive(Debug, Serialize, Deserialize, PartialEq)]
struct WeightRow {
    ticker: String,
    weight: f64,
}

fn csv_to_string(write: impl FnOnce(&mut csv::Writer<Vec<u8>>) -> csv::Result<()>) -> Result<String> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    write(&mut writer).map_err(|e| Error::InvalidInput(format!("csv serialization: {e}")))?;
    let bytes = writer
        .into_inner()
        .map_err(|e| Error::InvalidInput(format!("csv flush: {e}")))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// Render the cloud as `vol,return,sharpe` rows, one per sample, in
/// sampling order.
pub fn frontier_csv(cloud: &FrontierCloud) -> Result<String> {
    csv_to_string(|w| {
        for s in cloud.samples() {
            w.serialize(FrontierRow {
                vol: s.annual_vol,
                ret: s.annual_return,
                sharpe: s.sharpe,
            })?;
        }
        Ok(())
    })
}

/// Parse `vol,return,sharpe` rows back into tuples, in file order.
pub fn parse_frontier_csv(content: &str) -> Result<Vec<(f64, f64, f64)>> {
    let mut reader = csv::Reader::from_reader(content.as_bytes());
    let mut rows = Vec::new();
    for record in reader.deserialize::<FrontierRow>() {
        let row = record.map_err(|e| Error::InvalidInput(format!("frontier csv: {e}")))?;
        rows.push((row.vol, row.ret, row.sharpe));
    }
    Ok(rows)
}

/// Render parsed frontier rows; `parse` then this is a fixed point of
/// the emitted bytes.
pub fn frontier_rows_csv(rows: &[(f64, f64, f64)]) -> Result<String> {
    csv_to_string(|w| {
        for &(vol, ret, sharpe) in rows {
            w.serialize(FrontierRow { vol, ret, sharpe })?;
        }
        Ok(())
    })
}

/// Render a weight vector as `ticker,weight` rows in ticker order.
pub fn weights_csv(weights: &WeightVector) -> Result<String> {
    csv_to_string(|w| {
        for (ticker, weight) in weights.tickers().iter().zip(weights.weights()) {
            w.serialize(WeightRow {
                ticker: ticker.clone(),
                weight: *weight,
            })?;
        }
        Ok(())
    })
}

/// Parse `ticker,weight` rows, preserving file order.
pub fn parse_weights_csv(content: &str) -> Result<Vec<(String, f64)>> {
    let mut reader = csv::Reader::from_reader(content.as_bytes());
    let mut rows = Vec::new();
    for record in reader.deserialize::<WeightRow>() {
        let row = record.map_err(|e| Error::InvalidInput(format!("weights csv: {e}")))?;
        rows.push((row.ticker, row.weight));
    }
    Ok(rows)
}

/// Render parsed weight rows; `parse` then this is a fixed point.
pub fn weight_rows_csv(rows: &[(String, f64)]) -> Result<String> {
    csv_to_string(|w| {
        for (ticker, weight) in rows {
            w.serialize(WeightRow {
                ticker: ticker.clone(),
                weight: *weight,
            })?;
        }
        Ok(())
    })
}
