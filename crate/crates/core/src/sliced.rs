//! Monte Carlo sliced Wasserstein distance.
//!
//! `SW_p(μ, ν)^p` is the surface-measure average over unit directions `θ` of
//! `W_p^p(P_θ#μ, P_θ#ν)`. Given a [`DirectionSet`] the estimate is the plain
//! mean over its directions; passing the same set to several calls couples the
//! estimates, so inequalities between them hold direction by direction.

use rayon::prelude::*;
use serde::Serialize;

use crate::discrete_ot::wasserstein_exact;
use crate::error::{check_dims, Error, Result};
use crate::hilbert::{check_order, dot, moment_p, DiscreteMeasure};
use crate::ot1d::{project_raw, wpp_unchecked};
use crate::surface::{uniform_directions, DirectionMeta, DirectionSet, MeanEstimate};

/// Absolute slack allowed in deterministic inequality checks.
pub const CHECK_SLACK: f64 = 1e-10;

/// Estimate of `SW_p` from per-direction `W_p^p` values.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SWEstimate {
    pub value: f64,
    pub p: f64,
    pub per_direction: Vec<f64>,
    /// Standard error of the mean of `per_direction`.
    pub std_error: f64,
    pub directions: DirectionMeta,
}

impl SWEstimate {
    pub fn from_per_direction(per_direction: Vec<f64>, p: f64, directions: DirectionMeta) -> Self {
        let m = MeanEstimate::from_samples(&per_direction);
        Self {
            value: m.mean.max(0.0).powf(1.0 / p),
            p,
            per_direction,
            std_error: m.std_error,
            directions,
        }
    }

    /// `mean(per_direction) = value^p`.
    pub fn mean_pow(&self) -> f64 {
        MeanEstimate::from_samples(&self.per_direction).mean
    }

    /// Delta-method standard error of `value`; for reporting only.
    pub fn value_std_error(&self) -> f64 {
        if self.value == 0.0 {
            return 0.0;
        }
        self.std_error / (self.p * self.value.powf(self.p - 1.0))
    }
}

/// Per-direction `W_p^p` between the projections of `mu` and `nu`.
pub fn per_direction_wpp(
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    p: f64,
    dirs: &DirectionSet,
) -> Result<Vec<f64>> {
    check_order(p)?;
    check_dims(mu.dim(), nu.dim())?;
    check_dims(mu.dim(), dirs.dim())?;
    Ok((0..dirs.len())
        .into_par_iter()
        .map(|j| {
            let theta = dirs.direction(j);
            wpp_unchecked(&project_raw(mu, theta), &project_raw(nu, theta), p)
        })
        .collect())
}

/// `SW_p^γ(μ, ν)` over the given directions.
pub fn sw_estimate(
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    p: f64,
    dirs: &DirectionSet,
) -> Result<SWEstimate> {
    let per_direction = per_direction_wpp(mu, nu, p, dirs)?;
    Ok(SWEstimate::from_per_direction(per_direction, p, dirs.meta()))
}

/// The finite-dimensional baseline with directions uniform on the Euclidean sphere.
pub fn sw_finite_uniform(
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    p: f64,
    k: usize,
    seed: u64,
) -> Result<SWEstimate> {
    if mu.dim() < 2 {
        return Err(Error::input("the uniform-sphere baseline needs dimension >= 2"));
    }
    let dirs = uniform_directions(mu.dim(), k, seed)?;
    sw_estimate(mu, nu, p, &dirs)
}

/// Outcome of the θ-Lipschitz and uniform-bound checks.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LipschitzReport {
    pub pairs: usize,
    pub non_unit_directions: usize,
    /// `(M_p(μ))^{1/p} + (M_p(ν))^{1/p}`
    pub lipschitz_w: f64,
    /// `p 2^{p−1} max{M_p(μ), M_p(ν)}^{(p−1)/p} · lipschitz_w`
    pub lipschitz_wpp: f64,
    /// `2^p (M_p(μ) + M_p(ν))`
    pub uniform_bound: f64,
    pub violations_w: usize,
    pub violations_wpp: usize,
    pub violations_bound: usize,
    /// Smallest `rhs − lhs` seen for each inequality.
    pub worst_slack_w: f64,
    pub worst_slack_wpp: f64,
    pub worst_slack_bound: f64,
}

impl LipschitzReport {
    pub fn passed(&self) -> bool {
        self.non_unit_directions == 0
            && self.violations_w == 0
            && self.violations_wpp == 0
            && self.violations_bound == 0
    }
}

/// Checks `|W_p(θ) − W_p(θ')| ≤ L‖θ − θ'‖`, the matching bound for `W_p^p`,
/// and `W_p^p(θ) ≤ 2^p(M_p(μ) + M_p(ν))` on the direction pairs
/// `(first[j], second[j])`.
pub fn check_theta_lipschitz(
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    p: f64,
    first: &DirectionSet,
    second: &DirectionSet,
) -> Result<LipschitzReport> {
    let a = per_direction_wpp(mu, nu, p, first)?;
    let b = per_direction_wpp(mu, nu, p, second)?;
    let m_mu = moment_p(mu, p)?;
    let m_nu = moment_p(nu, p)?;
    let lipschitz_w = m_mu.powf(1.0 / p) + m_nu.powf(1.0 / p);
    let lipschitz_wpp = p * 2f64.powf(p - 1.0) * m_mu.max(m_nu).powf((p - 1.0) / p) * lipschitz_w;
    let uniform_bound = 2f64.powf(p) * (m_mu + m_nu);

    let pairs = a.len().min(b.len());
    let non_unit_directions = first
        .iter()
        .take(pairs)
        .chain(second.iter().take(pairs))
        .filter(|t| (dot(t, t).sqrt() - 1.0).abs() > 1e-12)
        .count();

    let mut report = LipschitzReport {
        pairs,
        non_unit_directions,
        lipschitz_w,
        lipschitz_wpp,
        uniform_bound,
        violations_w: 0,
        violations_wpp: 0,
        violations_bound: 0,
        worst_slack_w: f64::INFINITY,
        worst_slack_wpp: f64::INFINITY,
        worst_slack_bound: f64::INFINITY,
    };
    for j in 0..pairs {
        let (t, u) = (first.direction(j), second.direction(j));
        let dist = t
            .iter()
            .zip(u)
            .map(|(x, y)| (x - y) * (x - y))
            .sum::<f64>()
            .sqrt();
        let slack_w = lipschitz_w * dist - (a[j].powf(1.0 / p) - b[j].powf(1.0 / p)).abs();
        let slack_wpp = lipschitz_wpp * dist - (a[j] - b[j]).abs();
        report.worst_slack_w = report.worst_slack_w.min(slack_w);
        report.worst_slack_wpp = report.worst_slack_wpp.min(slack_wpp);
        report.violations_w += usize::from(slack_w < -CHECK_SLACK);
        report.violations_wpp += usize::from(slack_wpp < -CHECK_SLACK);
        for v in [a[j], b[j]] {
            let slack = uniform_bound - v;
            report.worst_slack_bound = report.worst_slack_bound.min(slack);
            report.violations_bound += usize::from(slack < -CHECK_SLACK);
        }
    }
    Ok(report)
}

/// Outcome of the `SW_p ≤ W_p` check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SwLeqWReport {
    pub w_exact: f64,
    pub sw_value: f64,
    pub sw_std_error: f64,
    pub directions: usize,
    /// Directions with `W_p^p(θ) > W_p^p + slack`.
    pub per_direction_violations: usize,
    /// `W_p^p − max_θ W_p^p(θ)`.
    pub worst_margin: f64,
    /// `sw_value ≤ w_exact + 3·SE`, with the delta-method SE of the value.
    pub aggregate_ok: bool,
}

impl SwLeqWReport {
    pub fn passed(&self) -> bool {
        self.per_direction_violations == 0 && self.aggregate_ok
    }
}

/// Compares every projected `W_p^p` with the exact `W_p^p` from the flow solver.
pub fn check_sw_leq_w(
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    p: f64,
    dirs: &DirectionSet,
) -> Result<SwLeqWReport> {
    let (w, _) = wasserstein_exact(mu, nu, p)?;
    let sw = sw_estimate(mu, nu, p, dirs)?;
    let w_pow = w.powf(p);
    let slack = CHECK_SLACK * w_pow.max(1.0);
    let max_dir = sw.per_direction.iter().copied().fold(0.0, f64::max);
    Ok(SwLeqWReport {
        w_exact: w,
        sw_value: sw.value,
        sw_std_error: sw.std_error,
        directions: sw.per_direction.len(),
        per_direction_violations: sw.per_direction.iter().filter(|v| **v > w_pow + slack).count(),
        worst_margin: w_pow - max_dir,
        aggregate_ok: sw.value <= w + 3.0 * sw.value_std_error() + slack,
    })
}
