use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{mean, sample_sd, write_csv, CsvReport};
use crate::discrete_ot::wasserstein_exact;
use crate::error::{Error, Result};
use crate::hilbert::MeasureSpec;
use crate::rng::{derive_seed, Domain};
use crate::sliced::sw_estimate;
use crate::surface::{default_max_proposals, sample_directions, GaussianReference, DEFAULT_EPS};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub dims: Vec<usize>,
    pub p: f64,
    /// Atoms per empirical measure.
    pub n: usize,
    pub replicates: usize,
    pub directions: usize,
    pub eps: f64,
    pub seed: u64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            dims: vec![2, 4, 8, 16, 32],
            p: 1.0,
            n: 64,
            replicates: 8,
            directions: 256,
            eps: DEFAULT_EPS,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub d: usize,
    pub replicate: usize,
    pub w_exact: f64,
    pub sw: f64,
    pub sw_se: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepSummaryRow {
    pub d: usize,
    pub mean_w: f64,
    pub sd_w: f64,
    pub mean_sw: f64,
    pub sd_sw: f64,
    /// `mean_w` relative to the first dimension of the sweep.
    pub w_ratio: f64,
    pub sw_ratio: f64,
}

/// Wall-clock per evaluation; kept apart from the deterministic tables.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepTimingRow {
    pub d: usize,
    pub n: usize,
    pub directions: usize,
    pub w_seconds: f64,
    pub sw_seconds: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepReport {
    pub config: SweepConfig,
    pub rows: Vec<SweepRow>,
    pub summary: Vec<SweepSummaryRow>,
    pub timing: Vec<SweepTimingRow>,
}

impl SweepReport {
    /// `E W` increases with `d`.
    pub fn w_monotone(&self) -> bool {
        self.summary.windows(2).all(|w| w[1].mean_w > w[0].mean_w)
    }

    /// `E SW` stays within a factor two of its value at the first `d`.
    pub fn sw_stable(&self) -> bool {
        self.summary
            .iter()
            .all(|r| (0.5..=2.0).contains(&r.sw_ratio))
    }

    /// `W` degrades faster with `d` than `SW` does.
    pub fn ordering_holds(&self) -> bool {
        self.w_monotone()
            && self.sw_stable()
            && self
                .summary
                .last()
                .is_some_and(|r| r.w_ratio > r.sw_ratio)
    }
}

struct Timed {
    row: SweepRow,
    w_seconds: f64,
    sw_seconds: f64,
}

/// Exact `W_p` and `SW_p^γ` between two independent `n`-point samples of the
/// standard Gaussian in each dimension, with an isotropic reference.
pub fn w_vs_sw_dimension_sweep(config: &SweepConfig) -> Result<SweepReport> {
    let p = config.p;
    if config.dims.is_empty() || config.dims.contains(&0) {
        return Err(Error::Input("dimension list must be nonempty with d >= 1".into()));
    }
    if config.n == 0 || config.replicates == 0 || config.directions == 0 {
        return Err(Error::Input("n, replicates and directions must be >= 1".into()));
    }
    let reps = config.replicates;
    let jobs: Vec<(usize, usize)> = (0..config.dims.len())
        .flat_map(|di| (0..reps).map(move |r| (di, r)))
        .collect();
    let timed: Vec<Timed> = jobs
        .par_iter()
        .map(|&(di, rep)| {
            let d = config.dims[di];
            let seed = derive_seed(config.seed, Domain::Replicate, (di * reps + rep) as u64);
            let spec = MeasureSpec::GaussianKl {
                eigenvalues: vec![1.0; d],
            };
            let mu = spec.sample(config.n, derive_seed(seed, Domain::MeasureDraw, 0))?;
            let nu = spec.sample(config.n, derive_seed(seed, Domain::MeasureDraw, 1))?;
            let dirs = sample_directions(
                &GaussianReference::isotropic(d)?,
                config.directions,
                config.eps,
                derive_seed(seed, Domain::DirectionProposal, 0),
                default_max_proposals(config.directions),
            )?;
            let start = Instant::now();
            let (w, _) = wasserstein_exact(&mu, &nu, p)?;
            let w_seconds = start.elapsed().as_secs_f64();
            let start = Instant::now();
            let sw = sw_estimate(&mu, &nu, p, &dirs)?;
            let sw_seconds = start.elapsed().as_secs_f64();
            Ok(Timed {
                row: SweepRow {
                    d,
                    replicate: rep,
                    w_exact: w,
                    sw: sw.value,
                    sw_se: sw.value_std_error(),
                },
                w_seconds,
                sw_seconds,
            })
        })
        .collect::<Result<_>>()?;

    let rows: Vec<SweepRow> = timed.iter().map(|t| t.row.clone()).collect();
    let mut summary: Vec<SweepSummaryRow> = rows
        .chunks(reps)
        .map(|chunk| {
            let w: Vec<f64> = chunk.iter().map(|r| r.w_exact).collect();
            let sw: Vec<f64> = chunk.iter().map(|r| r.sw).collect();
            SweepSummaryRow {
                d: chunk[0].d,
                mean_w: mean(&w),
                sd_w: sample_sd(&w),
                mean_sw: mean(&sw),
                sd_sw: sample_sd(&sw),
                w_ratio: 1.0,
                sw_ratio: 1.0,
            }
        })
        .collect();
    let (w0, sw0) = (summary[0].mean_w, summary[0].mean_sw);
    for r in &mut summary {
        r.w_ratio = r.mean_w / w0;
        r.sw_ratio = r.mean_sw / sw0;
    }
    let timing = timed
        .chunks(reps)
        .map(|chunk| SweepTimingRow {
            d: chunk[0].row.d,
            n: config.n,
            directions: config.directions,
            w_seconds: chunk.iter().map(|t| t.w_seconds).sum::<f64>() / reps as f64,
            sw_seconds: chunk.iter().map(|t| t.sw_seconds).sum::<f64>() / reps as f64,
        })
        .collect();
    Ok(SweepReport {
        config: config.clone(),
        rows,
        summary,
        timing,
    })
}

impl CsvReport for SweepReport {
    /// Writes the deterministic tables; see [`SweepReport::write_timing`].
    fn write_tables(&self, dir: &Path, stem: &str) -> Result<Vec<PathBuf>> {
        let rows = dir.join(format!("{stem}.csv"));
        let summary = dir.join(format!("{stem}_summary.csv"));
        write_csv(&rows, &self.rows)?;
        write_csv(&summary, &self.summary)?;
        Ok(vec![rows, summary])
    }
}

impl SweepReport {
    pub fn write_timing(&self, dir: &Path, stem: &str) -> Result<PathBuf> {
        let path = dir.join(format!("{stem}_timing.csv"));
        write_csv(&path, &self.timing)?;
        Ok(path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_sweep_orders_w_above_sw() {
        let cfg = SweepConfig {
            dims: vec![2, 8, 32],
            n: 24,
            replicates: 4,
            directions: 128,
            ..SweepConfig::default()
        };
        let report = w_vs_sw_dimension_sweep(&cfg).unwrap();
        assert_eq!(report.rows.len(), 12);
        assert!(report.rows.iter().all(|r| r.sw <= r.w_exact + 1e-10));
        assert!(report.ordering_holds(), "{:?}", report.summary);
    }
}
