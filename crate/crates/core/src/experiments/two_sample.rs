use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::reference::{ProjectedReference, DEFAULT_REFERENCE_ATOMS};
use super::{corrected_constant, mean, sample_sd, write_csv, CsvReport};
use crate::error::{check_dims, Error, Result};
use crate::hilbert::MeasureSpec;
use crate::ot1d::{project_raw, wpp_unchecked};
use crate::rng::{derive_seed, Domain};
use crate::sliced::SWEstimate;
use crate::surface::{default_max_proposals, sample_directions, GaussianReference, DEFAULT_EPS};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwoSampleConfig {
    pub spec_mu: MeasureSpec,
    pub spec_nu: MeasureSpec,
    pub reference: GaussianReference,
    pub p: f64,
    pub s: f64,
    /// `(n, m)` sample-size cells.
    pub grid: Vec<(usize, usize)>,
    pub replicates: usize,
    pub directions: usize,
    pub eps: f64,
    pub seed: u64,
    pub reference_atoms: usize,
}

impl TwoSampleConfig {
    pub fn new(
        spec_mu: MeasureSpec,
        spec_nu: MeasureSpec,
        reference: GaussianReference,
        p: f64,
        s: f64,
    ) -> Self {
        Self {
            spec_mu,
            spec_nu,
            reference,
            p,
            s,
            grid: vec![(100, 100), (1000, 1000)],
            replicates: 20,
            directions: 256,
            eps: DEFAULT_EPS,
            seed: 0,
            reference_atoms: DEFAULT_REFERENCE_ATOMS,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TwoSampleRow {
    pub n: usize,
    pub m: usize,
    pub replicate: usize,
    /// `SW_p^γ(μ^n, ν^m)`
    pub sw_empirical: f64,
    /// `SW_p^γ(μ_ref, ν_ref)` on the same directions.
    pub sw_reference: f64,
    pub abs_diff: f64,
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TwoSampleCell {
    pub n: usize,
    pub m: usize,
    pub mean_abs_diff: f64,
    pub se_abs_diff: f64,
    pub bound: f64,
    pub within_bound: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TwoSampleReport {
    pub config: TwoSampleConfig,
    pub constant_mu: f64,
    pub constant_nu: f64,
    pub rows: Vec<TwoSampleRow>,
    pub cells: Vec<TwoSampleCell>,
}

/// `|SW(μ^n, ν^m) − SW(μ, ν)|` against `C_μ n^{-1/(2p)} + C_ν m^{-1/(2p)}`.
///
/// The additive bound follows from the triangle inequality through
/// `SW(μ^n, μ)` and `SW(ν^m, ν)`, each with its own rate constant.
pub fn two_sample_experiment(config: &TwoSampleConfig) -> Result<TwoSampleReport> {
    let p = config.p;
    let dim = config.spec_mu.dim();
    check_dims(dim, config.spec_nu.dim())?;
    check_dims(dim, config.reference.dim())?;
    if config.grid.is_empty() || config.grid.iter().any(|&(n, m)| n == 0 || m == 0) {
        return Err(Error::Input("two-sample grid needs cells with n, m >= 1".into()));
    }
    if config.replicates == 0 || config.directions == 0 {
        return Err(Error::Input("replicates and directions must be >= 1".into()));
    }
    let constant_mu = corrected_constant(p, config.s, config.spec_mu.analytic_moment(config.s)?)?;
    let constant_nu = corrected_constant(p, config.s, config.spec_nu.analytic_moment(config.s)?)?;
    let rate = |k: usize| (k as f64).powf(-1.0 / (2.0 * p));
    let ref_mu = ProjectedReference::new(&config.spec_mu, config.reference_atoms)?;
    let ref_nu = ProjectedReference::new(&config.spec_nu, config.reference_atoms)?;
    let reps = config.replicates;

    let jobs: Vec<(usize, usize)> = (0..config.grid.len())
        .flat_map(|c| (0..reps).map(move |r| (c, r)))
        .collect();
    let rows: Vec<TwoSampleRow> = jobs
        .par_iter()
        .map(|&(cell, rep)| {
            let (n, m) = config.grid[cell];
            let seed = derive_seed(config.seed, Domain::Replicate, (cell * reps + rep) as u64);
            let mu_n = config.spec_mu.sample(n, derive_seed(seed, Domain::MeasureDraw, 0))?;
            let nu_m = config.spec_nu.sample(m, derive_seed(seed, Domain::MeasureDraw, 1))?;
            let dirs = sample_directions(
                &config.reference,
                config.directions,
                config.eps,
                derive_seed(seed, Domain::DirectionProposal, 0),
                default_max_proposals(config.directions),
            )?;
            let mut empirical = Vec::with_capacity(dirs.len());
            let mut reference = Vec::with_capacity(dirs.len());
            for theta in dirs.iter() {
                empirical.push(wpp_unchecked(
                    &project_raw(&mu_n, theta),
                    &project_raw(&nu_m, theta),
                    p,
                ));
                reference.push(ref_nu.wpp_to(&ref_mu.project(theta)?, theta, p));
            }
            let sw_e = SWEstimate::from_per_direction(empirical, p, dirs.meta()).value;
            let sw_r = SWEstimate::from_per_direction(reference, p, dirs.meta()).value;
            Ok(TwoSampleRow {
                n,
                m,
                replicate: rep,
                sw_empirical: sw_e,
                sw_reference: sw_r,
                abs_diff: (sw_e - sw_r).abs(),
                bound: constant_mu * rate(n) + constant_nu * rate(m),
            })
        })
        .collect::<Result<_>>()?;

    let cells = rows
        .chunks(reps)
        .map(|chunk| {
            let diffs: Vec<f64> = chunk.iter().map(|r| r.abs_diff).collect();
            let mean_abs_diff = mean(&diffs);
            TwoSampleCell {
                n: chunk[0].n,
                m: chunk[0].m,
                mean_abs_diff,
                se_abs_diff: sample_sd(&diffs) / (diffs.len() as f64).sqrt(),
                bound: chunk[0].bound,
                within_bound: mean_abs_diff <= chunk[0].bound,
            }
        })
        .collect();

    Ok(TwoSampleReport {
        config: config.clone(),
        constant_mu,
        constant_nu,
        rows,
        cells,
    })
}

impl CsvReport for TwoSampleReport {
    fn write_tables(&self, dir: &Path, stem: &str) -> Result<Vec<PathBuf>> {
        let rows = dir.join(format!("{stem}.csv"));
        let cells = dir.join(format!("{stem}_cells.csv"));
        write_csv(&rows, &self.rows)?;
        write_csv(&cells, &self.cells)?;
        Ok(vec![rows, cells])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn iso(d: usize, sd: f64) -> MeasureSpec {
        MeasureSpec::GaussianKl {
            eigenvalues: vec![sd; d],
        }
    }

    #[test]
    fn identical_laws_shrink_with_sample_size() {
        let mut cfg = TwoSampleConfig::new(
            iso(3, 0.5),
            iso(3, 0.5),
            GaussianReference::isotropic(3).unwrap(),
            1.0,
            4.0,
        );
        cfg.grid = vec![(30, 30), (3000, 3000)];
        cfg.replicates = 6;
        cfg.directions = 64;
        cfg.reference_atoms = 5000;
        let report = two_sample_experiment(&cfg).unwrap();
        assert!(report.rows.iter().all(|r| r.sw_reference == 0.0));
        assert!(report.cells[1].mean_abs_diff < report.cells[0].mean_abs_diff);
        assert!(report.cells.iter().all(|c| c.within_bound));
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let cfg = TwoSampleConfig::new(
            iso(3, 1.0),
            iso(2, 1.0),
            GaussianReference::isotropic(3).unwrap(),
            1.0,
            4.0,
        );
        assert!(two_sample_experiment(&cfg).is_err());
    }
}
