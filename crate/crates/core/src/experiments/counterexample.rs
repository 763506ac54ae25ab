use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{fit_loglog, write_csv, CsvReport, LogLogFit};
use crate::error::{Error, Result};
use crate::hilbert::{moment_p, CoefficientVector, DiscreteMeasure};
use crate::surface::{default_max_proposals, sample_directions, GaussianReference, DEFAULT_EPS};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CounterexampleConfig {
    pub reference: GaussianReference,
    /// One-based basis indices `n`; each must be at most the dimension.
    pub n_list: Vec<usize>,
    pub directions: usize,
    pub eps: f64,
    pub seed: u64,
}

impl CounterexampleConfig {
    pub fn new(reference: GaussianReference, n_max: usize) -> Self {
        Self {
            reference,
            n_list: (1..=n_max).collect(),
            directions: 20_000,
            eps: DEFAULT_EPS,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CounterexampleRow {
    pub n: usize,
    /// `c_n ≈ E⟨θ, e_n⟩²`
    pub c_n: f64,
    pub c_n_se: f64,
    /// `SW_2(μ^n, δ_0)² = n^{2/3} c_n`
    pub sw2_sq: f64,
    pub sw2_sq_se: f64,
    pub sw2: f64,
    /// Delta-method standard error of `sw2`.
    pub sw2_se: f64,
    /// `M_2(μ^n)` evaluated on the measure itself.
    pub m2: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CounterexampleReport {
    pub config: CounterexampleConfig,
    pub rows: Vec<CounterexampleRow>,
    /// Fit of `ln sw2` against `ln n`.
    pub fit: Option<LogLogFit>,
    pub sup_m2: f64,
}

impl CounterexampleReport {
    /// Fitted `SW_2` trend is decreasing.
    pub fn sw_decreasing(&self) -> bool {
        self.fit.is_some_and(|f| f.slope < 0.0)
    }
}

/// `μ^n = δ_{n^{1/3} e_n}` against `δ_0` with `p = 2`.
///
/// On every direction `W_2²(P_θ#μ^n, P_θ#δ_0) = n^{2/3}⟨θ, e_n⟩²`, so one
/// direction set yields the whole column through the coordinate second
/// moments. `M_2(μ^n) = n^{2/3}` grows without bound while `SW_2` follows
/// `n^{1/3} √c_n`.
pub fn counterexample_run(config: &CounterexampleConfig) -> Result<CounterexampleReport> {
    let d = config.reference.dim();
    if config.n_list.is_empty() {
        return Err(Error::Input("n list must be nonempty".into()));
    }
    if let Some(&bad) = config.n_list.iter().find(|&&n| n == 0 || n > d) {
        return Err(Error::Input(format!(
            "basis index n = {bad} unavailable in truncation dimension {d}"
        )));
    }
    let dirs = sample_directions(
        &config.reference,
        config.directions,
        config.eps,
        config.seed,
        default_max_proposals(config.directions),
    )?;
    let moments = dirs.second_moments();

    let rows: Vec<CounterexampleRow> = config
        .n_list
        .iter()
        .map(|&n| {
            let scale = (n as f64).cbrt();
            let atom = CoefficientVector::basis(d, n - 1)?.scaled(scale)?;
            let m2 = moment_p(&DiscreteMeasure::dirac(atom), 2.0)?;
            let weight = scale * scale;
            let (c, c_se) = (moments.mean[n - 1], moments.std_error[n - 1]);
            let sw2_sq = weight * c;
            let sw2 = sw2_sq.sqrt();
            let sw2_sq_se = weight * c_se;
            Ok(CounterexampleRow {
                n,
                c_n: c,
                c_n_se: c_se,
                sw2_sq,
                sw2_sq_se,
                sw2,
                sw2_se: if sw2 > 0.0 { sw2_sq_se / (2.0 * sw2) } else { 0.0 },
                m2,
            })
        })
        .collect::<Result<_>>()?;

    let xs: Vec<f64> = rows.iter().map(|r| r.n as f64).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.sw2).collect();
    let sup_m2 = rows.iter().map(|r| r.m2).fold(0.0, f64::max);
    Ok(CounterexampleReport {
        config: config.clone(),
        fit: fit_loglog(&xs, &ys),
        rows,
        sup_m2,
    })
}

impl CsvReport for CounterexampleReport {
    fn write_tables(&self, dir: &Path, stem: &str) -> Result<Vec<PathBuf>> {
        let rows = dir.join(format!("{stem}.csv"));
        write_csv(&rows, &self.rows)?;
        #[derive(Serialize)]
        struct Fit {
            d: usize,
            directions: usize,
            eps: f64,
            seed: u64,
            slope: Option<f64>,
            intercept: Option<f64>,
            sup_m2: f64,
        }
        let fit = dir.join(format!("{stem}_fit.csv"));
        write_csv(
            &fit,
            &[Fit {
                d: self.config.reference.dim(),
                directions: self.config.directions,
                eps: self.config.eps,
                seed: self.config.seed,
                slope: self.fit.map(|f| f.slope),
                intercept: self.fit.map(|f| f.intercept),
                sup_m2: self.sup_m2,
            }],
        )?;
        Ok(vec![rows, fit])
    }
}
