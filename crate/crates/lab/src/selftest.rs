//! Fast invariant suite run by `sw-lab selftest`.
//!
//! Every invariant is a deterministic function of the seed. Sizes are small
//! enough for the whole suite to finish in seconds.

use std::f64::consts::PI;

use rand::Rng;
use serde::Serialize;
use sw_core::hilbert::{CoefficientVector, DiscreteMeasure};
use sw_core::ot1d::{bobkov_integral, bobkov_rhs, chebyshev_envelope, w1d_pow, DistributionSpec1D};
use sw_core::rng::{derive_seed, stream, Domain};
use sw_core::sliced::{check_sw_leq_w, check_theta_lipschitz, sw_estimate};
use sw_core::surface::{default_max_proposals, sample_directions, DirectionSet, GaussianReference};

use crate::cli::Fault;
use crate::{Check, LabError};

/// Order in which invariants are reported; the first failure names the exit.
pub const INVARIANTS: [&str; 8] = [
    "metric-axioms",
    "sw-leq-w",
    "unit-norm",
    "lipschitz",
    "uniform-bound",
    "bobkov-integral",
    "bobkov-bound",
    "chebyshev-envelope",
];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SelftestRow {
    pub seed: u64,
    pub invariant: &'static str,
    pub cases: usize,
    pub violations: usize,
    /// Smallest `rhs − lhs` over all cases.
    pub worst_slack: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelftestReport {
    pub rows: Vec<SelftestRow>,
}

impl SelftestReport {
    /// One check per invariant, failed if any seed failed.
    pub fn checks(&self) -> Vec<Check> {
        INVARIANTS
            .iter()
            .map(|&name| {
                let rows: Vec<&SelftestRow> = self.rows.iter().filter(|r| r.invariant == name).collect();
                let violations: usize = rows.iter().map(|r| r.violations).sum();
                let cases: usize = rows.iter().map(|r| r.cases).sum();
                let slack = rows.iter().map(|r| r.worst_slack).fold(f64::INFINITY, f64::min);
                Check::new(
                    name,
                    rows.iter().all(|r| r.passed),
                    format!("{violations} violations in {cases} cases, worst slack {slack:.3e}"),
                )
            })
            .collect()
    }

    pub fn passed(&self) -> bool {
        self.rows.iter().all(|r| r.passed)
    }
}

struct Tally {
    invariant: &'static str,
    cases: usize,
    violations: usize,
    worst_slack: f64,
}

impl Tally {
    fn new(invariant: &'static str) -> Self {
        Self {
            invariant,
            cases: 0,
            violations: 0,
            worst_slack: f64::INFINITY,
        }
    }

    /// Records `slack = rhs − lhs`, a violation when below `-tol`.
    fn record(&mut self, slack: f64, tol: f64) {
        self.cases += 1;
        self.worst_slack = self.worst_slack.min(slack);
        self.violations += usize::from(!(slack >= -tol));
    }

    fn finish(self, seed: u64) -> SelftestRow {
        SelftestRow {
            seed,
            invariant: self.invariant,
            cases: self.cases,
            violations: self.violations,
            worst_slack: self.worst_slack,
            passed: self.violations == 0 && self.cases > 0,
        }
    }
}

/// A measure with 1 to `max_atoms` atoms in `[-2, 2]^dim`; weights are uniform
/// or random with equal probability.
pub fn random_measure(seed: u64, index: u64, dim: usize, max_atoms: usize) -> DiscreteMeasure {
    let mut rng = stream(seed, Domain::Experiment, index);
    let n = rng.random_range(1..=max_atoms);
    let points: Vec<CoefficientVector> = (0..n)
        .map(|_| {
            CoefficientVector::new((0..dim).map(|_| rng.random_range(-2.0..2.0)).collect())
                .expect("finite coordinates")
        })
        .collect();
    if rng.random_bool(0.5) {
        DiscreteMeasure::uniform(points).expect("nonempty")
    } else {
        let w = (0..n).map(|_| rng.random_range(0.05..1.0)).collect();
        DiscreteMeasure::weighted(points, w).expect("positive weights")
    }
}

fn directions(dim: usize, k: usize, seed: u64) -> sw_core::Result<DirectionSet> {
    sample_directions(
        &GaussianReference::isotropic(dim)?,
        k,
        sw_core::surface::DEFAULT_EPS,
        seed,
        default_max_proposals(k),
    )
}

/// Copy of `dirs` with its first direction stretched to norm 1.5.
fn corrupt(dirs: &DirectionSet) -> DirectionSet {
    let mut coords: Vec<f64> = dirs.iter().flatten().copied().collect();
    for x in &mut coords[..dirs.dim()] {
        *x *= 1.5;
    }
    DirectionSet::from_raw_unchecked(dirs.dim(), coords, dirs.seed())
}

fn suite_for_seed(seed: u64, fault: Option<Fault>) -> sw_core::Result<Vec<SelftestRow>> {
    let sub = |i: u64| derive_seed(seed, Domain::Experiment, i);
    let mut rows = Vec::new();
    let mut unit = Tally::new("unit-norm");
    let check_unit = |dirs: &DirectionSet, unit: &mut Tally| {
        for t in dirs.iter() {
            let norm = t.iter().map(|x| x * x).sum::<f64>().sqrt();
            unit.record(1e-12 - (norm - 1.0).abs(), 0.0);
        }
    };

    let mut metric = Tally::new("metric-axioms");
    for (di, dim) in [2usize, 8].into_iter().enumerate() {
        let dirs = directions(dim, 128, sub(100 + di as u64))?;
        check_unit(&dirs, &mut unit);
        for t in 0..15u64 {
            let base = sub(1000 + 100 * di as u64 + t);
            let mu = random_measure(base, 0, dim, 8);
            let nu = random_measure(base, 1, dim, 8);
            let eta = random_measure(base, 2, dim, 8);
            let ab = sw_estimate(&mu, &nu, 2.0, &dirs)?.value;
            let ba = sw_estimate(&nu, &mu, 2.0, &dirs)?.value;
            let aa = sw_estimate(&mu, &mu, 2.0, &dirs)?.value;
            let ae = sw_estimate(&mu, &eta, 2.0, &dirs)?.value;
            let eb = sw_estimate(&eta, &nu, 2.0, &dirs)?.value;
            metric.record(if ab == ba { 0.0 } else { -(ab - ba).abs() }, 0.0);
            metric.record(0.0 - aa, 0.0);
            metric.record(ae + eb - ab, 1e-10);
        }
    }
    rows.push(metric.finish(seed));

    let mut leq = Tally::new("sw-leq-w");
    for t in 0..10u64 {
        let dim = if t % 2 == 0 { 3 } else { 6 };
        let dirs = directions(dim, 128, sub(200 + t))?;
        check_unit(&dirs, &mut unit);
        let mu = random_measure(sub(2000 + t), 0, dim, 8);
        let nu = random_measure(sub(2000 + t), 1, dim, 8);
        for p in [1.0, 2.0] {
            let r = check_sw_leq_w(&mu, &nu, p, &dirs)?;
            leq.cases += r.directions;
            leq.violations += r.per_direction_violations + usize::from(!r.aggregate_ok);
            leq.worst_slack = leq.worst_slack.min(r.worst_margin);
        }
    }
    rows.push(leq.finish(seed));

    let mut lip = Tally::new("lipschitz");
    let mut bound = Tally::new("uniform-bound");
    for t in 0..10u64 {
        let dim = 4;
        let first = directions(dim, 50, sub(300 + t))?;
        let mut second = directions(dim, 50, sub(400 + t))?;
        if fault == Some(Fault::UnitNorm) && t == 0 {
            second = corrupt(&second);
        }
        check_unit(&first, &mut unit);
        check_unit(&second, &mut unit);
        let mu = random_measure(sub(3000 + t), 0, dim, 8);
        let nu = random_measure(sub(3000 + t), 1, dim, 8);
        for p in [1.0, 2.0] {
            let r = check_theta_lipschitz(&mu, &nu, p, &first, &second)?;
            lip.cases += 2 * r.pairs;
            lip.violations += r.violations_w + r.violations_wpp;
            lip.worst_slack = lip.worst_slack.min(r.worst_slack_w.min(r.worst_slack_wpp));
            bound.cases += 2 * r.pairs;
            bound.violations += r.violations_bound;
            bound.worst_slack = bound.worst_slack.min(r.worst_slack_bound);
        }
    }
    rows.push(unit.finish(seed));
    rows.push(lip.finish(seed));
    rows.push(bound.finish(seed));

    let uniform = DistributionSpec1D::Uniform { a: 0.0, b: 1.0 };
    let gaussian = DistributionSpec1D::Gaussian { mean: 0.0, sd: 1.0 };
    let mut integral = Tally::new("bobkov-integral");
    let j = bobkov_integral(&uniform, 1.0)?;
    integral.record(1e-6 - (j.value - PI / 8.0).abs(), 0.0);
    rows.push(integral.finish(seed));

    let mut bobkov = Tally::new("bobkov-bound");
    for (li, law) in [uniform, gaussian].iter().enumerate() {
        let grid = law.quantile_grid(20_000)?;
        for p in [1.0, 2.0] {
            let n = 100;
            let reps = 40;
            let values: Vec<f64> = (0..reps)
                .map(|r| {
                    let sample = law.sample(n, sub(5000 + 100 * li as u64 + r))?;
                    w1d_pow(&sample, &grid, p)
                })
                .collect::<sw_core::Result<_>>()?;
            let mean = values.iter().sum::<f64>() / reps as f64;
            let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (reps as f64 - 1.0);
            let se = (var / reps as f64).sqrt();
            let rhs = bobkov_rhs(law, p)? / (n as f64).sqrt();
            bobkov.record(rhs + 3.0 * se - mean, 0.0);
        }
    }
    rows.push(bobkov.finish(seed));

    let mut envelope = Tally::new("chebyshev-envelope");
    for law in [uniform, gaussian] {
        for s in [2.0, 4.0] {
            let env = chebyshev_envelope(&law, s)?;
            for i in 0..=600 {
                let x = -3.0 + i as f64 * 0.01;
                envelope.record(env.eval(x) - law.cdf_variance(x), 0.0);
            }
        }
    }
    rows.push(envelope.finish(seed));

    rows.sort_by_key(|r| INVARIANTS.iter().position(|n| *n == r.invariant));
    Ok(rows)
}

/// Runs the suite once per seed.
pub fn run_suite(seeds: &[u64], fault: Option<Fault>) -> Result<SelftestReport, LabError> {
    let mut rows = Vec::new();
    for &seed in seeds {
        rows.extend(suite_for_seed(seed, fault)?);
    }
    Ok(SelftestReport { rows })
}
