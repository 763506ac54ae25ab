use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{write_csv, CsvReport};
use crate::discrete_ot::wasserstein_exact;
use crate::error::{Error, Result};
use crate::hilbert::{moment_p, CoefficientVector, DiscreteMeasure};
use crate::ot1d::{project_raw, Projected1DMeasure};
use crate::sliced::sw_estimate;
use crate::surface::{default_max_proposals, sample_directions, GaussianReference, DEFAULT_EPS};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NarrowConfig {
    pub reference: GaussianReference,
    pub p: f64,
    pub steps: Vec<usize>,
    pub directions: usize,
    pub eps: f64,
    pub seed: u64,
    /// Points of the CDF comparison grid on `(-1, 1)`.
    pub grid_points: usize,
}

impl NarrowConfig {
    pub fn new(reference: GaussianReference, p: f64) -> Self {
        Self {
            reference,
            p,
            steps: vec![1, 2, 5, 10, 20, 50, 100, 200, 500, 1000],
            directions: 2000,
            eps: DEFAULT_EPS,
            seed: 0,
            grid_points: 200,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NarrowRow {
    pub sequence: &'static str,
    pub n: usize,
    /// `SW_p(δ_{x_n}, δ_0)`
    pub sw: f64,
    pub sw_se: f64,
    /// `W_p(δ_{x_n}, δ_0) = ‖x_n‖` from the flow solver.
    pub w_exact: f64,
    pub moment_p: f64,
    /// Direction average of the largest projected-CDF gap on the grid.
    pub cdf_gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NarrowVerdict {
    pub sequence: &'static str,
    pub sw_to_zero: bool,
    pub cdf_to_zero: bool,
    pub consistent: bool,
    pub sw_le_w: bool,
    pub sup_moment: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NarrowReport {
    pub config: NarrowConfig,
    pub rows: Vec<NarrowRow>,
    pub verdicts: Vec<NarrowVerdict>,
}

impl NarrowReport {
    pub fn consistent(&self) -> bool {
        self.verdicts.iter().all(|v| v.consistent && v.sw_le_w)
    }
}

fn cdf_on_grid(m: &Projected1DMeasure, t: f64) -> f64 {
    let k = m.values().partition_point(|v| *v <= t);
    (0..k).map(|i| m.weights().get(i)).sum()
}

/// Two sequences in the unit ball against `δ_0`: `x_n = e_1/n`, which
/// converges narrowly with bounded moments, and the constant `x_n = e_1`,
/// which does not. Inside a bounded set `SW → 0` should coincide with
/// convergence of the projected CDFs at continuity points of the limit.
pub fn narrow_convergence_demo(config: &NarrowConfig) -> Result<NarrowReport> {
    let d = config.reference.dim();
    let p = config.p;
    if config.steps.is_empty() || config.steps.contains(&0) {
        return Err(Error::Input("steps must be nonempty with n >= 1".into()));
    }
    if config.grid_points == 0 {
        return Err(Error::Input("grid needs at least one point".into()));
    }
    let dirs = sample_directions(
        &config.reference,
        config.directions,
        config.eps,
        config.seed,
        default_max_proposals(config.directions),
    )?;
    let origin = DiscreteMeasure::dirac(CoefficientVector::zeros(d)?);
    let g = config.grid_points as f64;
    let grid: Vec<f64> = (0..config.grid_points)
        .map(|k| -1.0 + (k as f64 + 0.5) * 2.0 / g)
        .collect();

    let e1 = CoefficientVector::basis(d, 0)?;
    let sequences: [(&'static str, fn(usize) -> f64); 2] =
        [("shrinking", |n| 1.0 / n as f64), ("fixed", |_| 1.0)];
    let mut rows = Vec::new();
    let mut verdicts = Vec::new();
    for (name, radius) in sequences {
        let start = rows.len();
        for &n in &config.steps {
            let mu = DiscreteMeasure::dirac(e1.scaled(radius(n))?);
            let est = sw_estimate(&mu, &origin, p, &dirs)?;
            let (w, _) = wasserstein_exact(&mu, &origin, p)?;
            let gap = dirs
                .iter()
                .map(|theta| {
                    let a = project_raw(&mu, theta);
                    let b = project_raw(&origin, theta);
                    grid.iter()
                        .map(|&t| (cdf_on_grid(&a, t) - cdf_on_grid(&b, t)).abs())
                        .fold(0.0, f64::max)
                })
                .sum::<f64>()
                / dirs.len() as f64;
            rows.push(NarrowRow {
                sequence: name,
                n,
                sw: est.value,
                sw_se: est.value_std_error(),
                w_exact: w,
                moment_p: moment_p(&mu, p)?,
                cdf_gap: gap,
            });
        }
        let seq = &rows[start..];
        let (first, last) = (&seq[0], &seq[seq.len() - 1]);
        let vanishes = |a: f64, b: f64| b <= 0.05 * a;
        let sw_to_zero = vanishes(first.sw, last.sw);
        let cdf_to_zero = vanishes(first.cdf_gap, last.cdf_gap);
        verdicts.push(NarrowVerdict {
            sequence: name,
            sw_to_zero,
            cdf_to_zero,
            consistent: sw_to_zero == cdf_to_zero,
            sw_le_w: seq.iter().all(|r| r.sw <= r.w_exact + 3.0 * r.sw_se + 1e-12),
            sup_moment: seq.iter().map(|r| r.moment_p).fold(0.0, f64::max),
        });
    }
    Ok(NarrowReport {
        config: config.clone(),
        rows,
        verdicts,
    })
}

impl CsvReport for NarrowReport {
    fn write_tables(&self, dir: &Path, stem: &str) -> Result<Vec<PathBuf>> {
        let rows = dir.join(format!("{stem}.csv"));
        let verdicts = dir.join(format!("{stem}_verdicts.csv"));
        write_csv(&rows, &self.rows)?;
        write_csv(&verdicts, &self.verdicts)?;
        Ok(vec![rows, verdicts])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shrinking_sequence_converges_fixed_does_not() {
        let mut cfg = NarrowConfig::new(GaussianReference::isotropic(4).unwrap(), 2.0);
        cfg.directions = 500;
        let report = narrow_convergence_demo(&cfg).unwrap();
        assert!(report.consistent(), "{:?}", report.verdicts);
        let shrinking = &report.verdicts[0];
        assert!(shrinking.sw_to_zero && shrinking.cdf_to_zero);
        assert_eq!(shrinking.sup_moment, 1.0);
        let fixed = &report.verdicts[1];
        assert!(!fixed.sw_to_zero && !fixed.cdf_to_zero);
        for row in report.rows.iter().filter(|r| r.sequence == "shrinking") {
            let inv = 1.0 / row.n as f64;
            assert!((row.w_exact - inv).abs() < 1e-15);
            assert!((row.moment_p - inv.powi(2)).abs() < 1e-15);
            // Every direction satisfies |θ_1|/n ≤ 1/n, so no slack is needed.
            assert!(row.sw <= inv);
        }
    }
}
