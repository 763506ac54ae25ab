use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::reference::{ProjectedReference, DEFAULT_REFERENCE_ATOMS};
use super::{corrected_constant, fit_loglog, mean, sample_sd, write_csv, CsvReport, CONSTANT_NOTE};
use crate::error::{check_dims, Error, Result};
use crate::hilbert::MeasureSpec;
use crate::ot1d::project_raw;
use crate::rng::{derive_seed, Domain};
use crate::sliced::SWEstimate;
use crate::surface::{default_max_proposals, sample_directions, GaussianReference, DEFAULT_EPS};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateConfig {
    pub spec: MeasureSpec,
    pub reference: GaussianReference,
    pub p: f64,
    pub s: f64,
    pub n_grid: Vec<usize>,
    pub replicates: usize,
    pub directions: usize,
    pub eps: f64,
    pub seed: u64,
    pub reference_atoms: usize,
    pub refine_eps: bool,
    pub refine_reference: bool,
}

impl RateConfig {
    pub fn new(spec: MeasureSpec, reference: GaussianReference, p: f64, s: f64) -> Self {
        Self {
            spec,
            reference,
            p,
            s,
            n_grid: vec![100, 316, 1000, 3162, 10_000],
            replicates: 50,
            directions: 1024,
            eps: DEFAULT_EPS,
            seed: 0,
            reference_atoms: DEFAULT_REFERENCE_ATOMS,
            refine_eps: false,
            refine_reference: false,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.s > 2.0 * self.p) {
            return Err(Error::Input(format!(
                "rate experiment needs s > 2p (p = {}, s = {})",
                self.p, self.s
            )));
        }
        check_dims(self.spec.dim(), self.reference.dim())?;
        if self.n_grid.is_empty() || self.n_grid.contains(&0) {
            return Err(Error::Input("n grid must be nonempty with n >= 1".into()));
        }
        if self.replicates == 0 || self.directions == 0 || self.reference_atoms == 0 {
            return Err(Error::Input(
                "replicates, directions and reference atoms must be >= 1".into(),
            ));
        }
        Ok(())
    }
}

/// One replicate at one sample size.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateRow {
    pub n: usize,
    pub replicate: usize,
    /// `SW_p^γ(μ^n, μ_ref)`
    pub estimate: f64,
    /// Standard error of the per-direction `W_p^p` mean.
    pub std_error: f64,
    /// `C n^{-1/(2p)}`
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateSummaryRow {
    pub n: usize,
    pub mean_estimate: f64,
    pub replicate_sd: f64,
    pub mean_std_error: f64,
    pub bound: f64,
    pub within_bound: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateFit {
    pub p: f64,
    pub s: f64,
    pub d: usize,
    pub seed: u64,
    pub reference_atoms: usize,
    pub moment_s: f64,
    pub constant: f64,
    pub slope: Option<f64>,
    pub intercept: Option<f64>,
    pub fit_points: usize,
    /// Smallest `n`, left out of the fit as transient.
    pub fit_excluded_n: Option<usize>,
    pub degenerate: bool,
    pub constant_note: &'static str,
}

/// Difference between a base estimate and one with a refined discretization.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RefinementCheck {
    pub check: String,
    pub n: usize,
    pub base: f64,
    pub refined: f64,
    pub abs_diff: f64,
    pub combined_std_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateReport {
    pub config: RateConfig,
    pub rows: Vec<RateRow>,
    pub summary: Vec<RateSummaryRow>,
    pub fit: RateFit,
    pub refinements: Vec<RefinementCheck>,
}

impl RateReport {
    pub fn all_within_bound(&self) -> bool {
        self.summary.iter().all(|r| r.within_bound)
    }
}

struct Job<'a> {
    spec: &'a MeasureSpec,
    reference: &'a GaussianReference,
    proj: &'a ProjectedReference,
    p: f64,
    directions: usize,
    eps: f64,
}

impl Job<'_> {
    fn estimate(&self, n: usize, job_seed: u64) -> Result<SWEstimate> {
        let mu_n = self
            .spec
            .sample(n, derive_seed(job_seed, Domain::MeasureDraw, 0))?;
        let dirs = sample_directions(
            self.reference,
            self.directions,
            self.eps,
            derive_seed(job_seed, Domain::DirectionProposal, 0),
            default_max_proposals(self.directions),
        )?;
        let per_direction: Vec<f64> = dirs
            .iter()
            .map(|theta| self.proj.wpp_to(&project_raw(&mu_n, theta), theta, self.p))
            .collect();
        Ok(SWEstimate::from_per_direction(per_direction, self.p, dirs.meta()))
    }
}

/// Estimates `E SW_p^γ(μ^n, μ)` over a grid of sample sizes and compares it
/// with `C n^{-1/(2p)}`.
pub fn rate_experiment(config: &RateConfig) -> Result<RateReport> {
    config.validate()?;
    let (p, reps) = (config.p, config.replicates);
    let moment_s = config.spec.analytic_moment(config.s)?;
    let constant = corrected_constant(p, config.s, moment_s)?;
    let bound = |n: usize| constant * (n as f64).powf(-1.0 / (2.0 * p));
    let proj = ProjectedReference::new(&config.spec, config.reference_atoms)?;
    let job = Job {
        spec: &config.spec,
        reference: &config.reference,
        proj: &proj,
        p,
        directions: config.directions,
        eps: config.eps,
    };
    let job_seed = |ni: usize, rep: usize| derive_seed(config.seed, Domain::Replicate, (ni * reps + rep) as u64);

    let jobs: Vec<(usize, usize)> = (0..config.n_grid.len())
        .flat_map(|ni| (0..reps).map(move |r| (ni, r)))
        .collect();
    let rows: Vec<RateRow> = jobs
        .par_iter()
        .map(|&(ni, rep)| {
            let n = config.n_grid[ni];
            let est = job.estimate(n, job_seed(ni, rep))?;
            Ok(RateRow {
                n,
                replicate: rep,
                estimate: est.value,
                std_error: est.std_error,
                bound: bound(n),
            })
        })
        .collect::<Result<_>>()?;

    let summary: Vec<RateSummaryRow> = rows
        .chunks(reps)
        .map(|chunk| {
            let est: Vec<f64> = chunk.iter().map(|r| r.estimate).collect();
            let ses: Vec<f64> = chunk.iter().map(|r| r.std_error).collect();
            let m = mean(&est);
            let b = chunk[0].bound;
            RateSummaryRow {
                n: chunk[0].n,
                mean_estimate: m,
                replicate_sd: sample_sd(&est),
                mean_std_error: mean(&ses),
                bound: b,
                within_bound: m <= b,
            }
        })
        .collect();

    let degenerate = rows.iter().all(|r| r.estimate == 0.0);
    let smallest = config.n_grid.iter().copied().min();
    let fit_excluded_n = if config.n_grid.len() >= 3 { smallest } else { None };
    let (xs, ys): (Vec<f64>, Vec<f64>) = summary
        .iter()
        .filter(|r| Some(r.n) != fit_excluded_n)
        .map(|r| (r.n as f64, r.mean_estimate))
        .unzip();
    let fit = if degenerate { None } else { fit_loglog(&xs, &ys) };

    let mut refinements = Vec::new();
    if config.refine_reference || config.refine_eps {
        let ni = (0..config.n_grid.len())
            .max_by_key(|&i| config.n_grid[i])
            .expect("nonempty grid");
        let n = config.n_grid[ni];
        let seed = job_seed(ni, 0);
        let base = job.estimate(n, seed)?;
        if config.refine_reference {
            let fine = ProjectedReference::new(&config.spec, 2 * config.reference_atoms)?;
            let refined = Job {
                proj: &fine,
                ..job
            }
            .estimate(n, seed)?;
            refinements.push(refinement("reference-atoms-doubled", n, &base, &refined));
        }
        if config.refine_eps {
            let refined = Job {
                eps: config.eps / 2.0,
                ..job
            }
            .estimate(n, seed)?;
            refinements.push(refinement("shell-width-halved", n, &base, &refined));
        }
    }

    Ok(RateReport {
        config: config.clone(),
        rows,
        summary,
        fit: RateFit {
            p,
            s: config.s,
            d: config.spec.dim(),
            seed: config.seed,
            reference_atoms: config.reference_atoms,
            moment_s,
            constant,
            slope: fit.map(|f| f.slope),
            intercept: fit.map(|f| f.intercept),
            fit_points: fit.map_or(0, |f| f.points),
            fit_excluded_n,
            degenerate,
            constant_note: CONSTANT_NOTE,
        },
        refinements,
    })
}

fn refinement(check: &str, n: usize, base: &SWEstimate, refined: &SWEstimate) -> RefinementCheck {
    RefinementCheck {
        check: check.to_string(),
        n,
        base: base.value,
        refined: refined.value,
        abs_diff: (base.value - refined.value).abs(),
        combined_std_error: base.value_std_error().hypot(refined.value_std_error()),
    }
}

impl CsvReport for RateReport {
    fn write_tables(&self, dir: &Path, stem: &str) -> Result<Vec<PathBuf>> {
        let mut out = vec![
            dir.join(format!("{stem}.csv")),
            dir.join(format!("{stem}_summary.csv")),
            dir.join(format!("{stem}_fit.csv")),
        ];
        write_csv(&out[0], &self.rows)?;
        write_csv(&out[1], &self.summary)?;
        write_csv(&out[2], std::slice::from_ref(&self.fit))?;
        if !self.refinements.is_empty() {
            let path = dir.join(format!("{stem}_refinement.csv"));
            write_csv(&path, &self.refinements)?;
            out.push(path);
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn point_mass_is_degenerate() {
        let spec = MeasureSpec::PointMass {
            point: vec![1.0, 2.0, 0.0],
        };
        let mut cfg = RateConfig::new(spec, GaussianReference::isotropic(3).unwrap(), 1.0, 4.0);
        cfg.n_grid = vec![10, 20, 40];
        cfg.replicates = 3;
        cfg.directions = 32;
        let report = rate_experiment(&cfg).unwrap();
        assert!(report.rows.iter().all(|r| r.estimate == 0.0));
        assert!(report.fit.degenerate);
        assert_eq!(report.fit.slope, None);
    }

    #[test]
    fn rejects_small_s() {
        let spec = MeasureSpec::GaussianKl {
            eigenvalues: vec![1.0; 2],
        };
        let cfg = RateConfig::new(spec, GaussianReference::isotropic(2).unwrap(), 2.0, 4.0);
        assert!(matches!(rate_experiment(&cfg), Err(Error::Input(_))));
    }

    #[test]
    fn small_gaussian_run_is_deterministic_and_bounded() {
        let spec = MeasureSpec::GaussianKl {
            eigenvalues: vec![0.5; 4],
        };
        let mut cfg = RateConfig::new(spec, GaussianReference::isotropic(4).unwrap(), 1.0, 4.0);
        cfg.n_grid = vec![50, 200, 800];
        cfg.replicates = 4;
        cfg.directions = 64;
        cfg.reference_atoms = 4000;
        cfg.refine_reference = true;
        cfg.refine_eps = true;
        let a = rate_experiment(&cfg).unwrap();
        let b = rate_experiment(&cfg).unwrap();
        assert_eq!(a, b);
        assert!(a.all_within_bound());
        assert_eq!(a.fit.fit_excluded_n, Some(50));
        assert_eq!(a.fit.fit_points, 2);
        assert!(a.fit.slope.unwrap() < 0.0);
        assert_eq!(a.refinements.len(), 2);
    }
}
