//! Experiments reproducing the empirical-rate, two-sample, counterexample,
//! narrow-convergence and dimension-sweep behaviour of the sliced distance.
//!
//! Every experiment is a pure function of its config (seed included). Work is
//! split into jobs indexed by `(cell, replicate)`; each job derives its own
//! seeds from that index and results are assembled in index order, so reports
//! are identical for any thread count.

use std::fs::File;
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};

mod counterexample;
mod narrow;
mod rate;
mod reference;
mod sweep;
mod two_sample;

pub use counterexample::{counterexample_run, CounterexampleConfig, CounterexampleReport, CounterexampleRow};
pub use narrow::{narrow_convergence_demo, NarrowConfig, NarrowReport, NarrowRow, NarrowVerdict};
pub use rate::{rate_experiment, RateConfig, RateFit, RateReport, RateRow, RateSummaryRow, RefinementCheck};
pub use reference::{ProjectedReference, DEFAULT_REFERENCE_ATOMS};
pub use sweep::{w_vs_sw_dimension_sweep, SweepConfig, SweepReport, SweepRow, SweepSummaryRow, SweepTimingRow};
pub use two_sample::{two_sample_experiment, TwoSampleCell, TwoSampleConfig, TwoSampleReport, TwoSampleRow};

/// How the rate constant is evaluated.
pub const CONSTANT_NOTE: &str =
    "C = (p 2^p (1+M_s)^(1/2) (1 + 1/(s/2 - p)))^(1/p); tail integral of x^(p-1-s/2) over [1,inf) \
     equals 1/(s/2 - p), the printed form 1/(p - s/2) is negative for s > 2p";

/// Constant `C` in `E SW_p(μ^n, μ) ≤ C n^{-1/(2p)}` for `μ` with `M_s(μ) = m_s`.
///
/// The tail integral `∫₁^∞ x^{p−1−s/2} dx` equals `1/(s/2 − p)`, which is what
/// enters here.
pub fn corrected_constant(p: f64, s: f64, m_s: f64) -> Result<f64> {
    if !(p >= 1.0 && s > 2.0 * p) {
        return Err(Error::Input(format!("rate bound needs p >= 1 and s > 2p (p = {p}, s = {s})")));
    }
    if !(m_s.is_finite() && m_s >= 0.0) {
        return Err(Error::Domain(format!("moment M_s must be finite, got {m_s}")));
    }
    let tail = 1.0 + 1.0 / (s / 2.0 - p);
    Ok((p * 2f64.powf(p) * (1.0 + m_s).sqrt() * tail).powf(1.0 / p))
}

/// Least-squares line through `(ln x, ln y)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LogLogFit {
    pub slope: f64,
    pub intercept: f64,
    pub points: usize,
}

/// Fits `ln y = intercept + slope · ln x` over the points with `x, y > 0`;
/// `None` with fewer than two such points or no spread in `x`.
pub fn fit_loglog(xs: &[f64], ys: &[f64]) -> Option<LogLogFit> {
    let pts: Vec<(f64, f64)> = xs
        .iter()
        .zip(ys)
        .filter(|(x, y)| **x > 0.0 && **y > 0.0 && y.is_finite())
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    Some(LogLogFit {
        slope,
        intercept: my - slope * mx,
        points: pts.len(),
    })
}

/// Writes `rows` as a CSV table with a header naming every column.
pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    let mut w = csv::Writer::from_writer(file);
    for row in rows {
        w.serialize(row)
            .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    }
    w.flush().map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

/// Reports that serialize to one or more CSV tables.
pub trait CsvReport {
    /// File stem and writer for each deterministic table.
    fn write_tables(&self, dir: &Path, stem: &str) -> Result<Vec<std::path::PathBuf>>;
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

fn sample_sd(values: &[f64]) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let m = mean(values);
    (values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (values.len() - 1) as f64).sqrt()
}
