//! Unit directions drawn from the normalized Gaussian surface measure.
//!
//! The reference Gaussian is `γ = Law(Σ λ_i ξ_i e_i)`. Its surface measure on
//! `S = {‖x‖ = 1}` is the limit of `γ` restricted to the shell
//! `1 − ε ≤ ‖x‖ ≤ 1 + ε` and rescaled by `1/2ε`. Normalized, that is the law
//! of `x/‖x‖` for `x ~ γ` conditioned on the shell, which is what
//! [`sample_directions`] draws. The `1/2ε` factor and the total mass cancel in
//! every normalized average.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_dims, Error, Result};
use crate::hilbert::{dot, CoefficientVector};
use crate::rng::{self, Domain};

/// Default shell half-width.
pub const DEFAULT_EPS: f64 = 0.05;

/// Proposals whose norm falls below this are discarded before normalization.
const DEGENERATE_NORM: f64 = 1e-12;

/// Proposals evaluated per parallel batch.
const BATCH: usize = 4096;

/// Non-degenerate centered Gaussian reference on the truncated space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianReference {
    eigenvalues: Vec<f64>,
}

impl GaussianReference {
    pub fn new(eigenvalues: Vec<f64>) -> Result<Self> {
        if eigenvalues.is_empty() {
            return Err(Error::input("reference needs at least one eigenvalue"));
        }
        if eigenvalues.iter().any(|l| !l.is_finite() || *l <= 0.0) {
            return Err(Error::input("reference eigenvalues must be finite and > 0"));
        }
        Ok(Self { eigenvalues })
    }

    /// `λ_i = 1/√d`.
    pub fn isotropic(dim: usize) -> Result<Self> {
        Decay::Isotropic.resolve(dim)
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// `E‖x‖² = Σ λ_i²`.
    pub fn trace(&self) -> f64 {
        self.eigenvalues.iter().map(|l| l * l).sum()
    }
}

/// Named eigenvalue profiles, all normalized to `Σ λ_i² = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Decay {
    Isotropic,
    /// `λ_i ∝ i^{-a}`
    Poly(f64),
    /// `λ_i ∝ r^{i-1}`
    Geom(f64),
}

impl Decay {
    pub fn resolve(self, dim: usize) -> Result<GaussianReference> {
        if dim == 0 {
            return Err(Error::input("dimension must be >= 1"));
        }
        let raw: Vec<f64> = match self {
            Decay::Isotropic => vec![1.0; dim],
            Decay::Poly(a) => {
                if !a.is_finite() || a < 0.0 {
                    return Err(Error::input(format!("poly exponent must be >= 0, got {a}")));
                }
                (1..=dim).map(|i| (i as f64).powf(-a)).collect()
            }
            Decay::Geom(r) => {
                if !r.is_finite() || r <= 0.0 {
                    return Err(Error::input(format!("geom ratio must be > 0, got {r}")));
                }
                (0..dim).map(|i| r.powi(i as i32)).collect()
            }
        };
        let norm = raw.iter().map(|x| x * x).sum::<f64>().sqrt();
        GaussianReference::new(raw.into_iter().map(|x| x / norm).collect())
    }
}

impl FromStr for Decay {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "isotropic" {
            return Ok(Decay::Isotropic);
        }
        let arg = |prefix: &str| -> Option<Result<f64>> {
            let inner = s.strip_prefix(prefix)?.strip_prefix('(')?.strip_suffix(')')?;
            Some(
                inner
                    .trim()
                    .parse::<f64>()
                    .map_err(|e| Error::input(format!("bad decay parameter in {s:?}: {e}"))),
            )
        };
        if let Some(a) = arg("poly") {
            return Ok(Decay::Poly(a?));
        }
        if let Some(r) = arg("geom") {
            return Ok(Decay::Geom(r?));
        }
        Err(Error::input(format!(
            "unknown decay family {s:?}; expected isotropic, poly(a) or geom(r)"
        )))
    }
}

impl fmt::Display for Decay {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Decay::Isotropic => write!(f, "isotropic"),
            Decay::Poly(a) => write!(f, "poly({a})"),
            Decay::Geom(r) => write!(f, "geom({r})"),
        }
    }
}

/// Reference configuration: a named family or an explicit eigenvalue list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ReferenceSpec {
    Named(String),
    Eigenvalues(Vec<f64>),
}

impl Default for ReferenceSpec {
    fn default() -> Self {
        ReferenceSpec::Named("isotropic".into())
    }
}

impl ReferenceSpec {
    pub fn resolve(&self, dim: usize) -> Result<GaussianReference> {
        match self {
            ReferenceSpec::Named(name) => name.parse::<Decay>()?.resolve(dim),
            ReferenceSpec::Eigenvalues(list) => {
                check_dims(dim, list.len())?;
                GaussianReference::new(list.clone())
            }
        }
    }
}

/// Unit directions together with how they were produced.
#[derive(Debug, Clone, PartialEq)]
pub struct DirectionSet {
    dim: usize,
    coords: Vec<f64>,
    shell_width: Option<f64>,
    proposals_used: usize,
    seed: u64,
}

/// Summary of a [`DirectionSet`] carried by estimates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DirectionMeta {
    pub count: usize,
    pub dim: usize,
    pub shell_width: Option<f64>,
    pub proposals_used: usize,
    pub acceptance_rate: f64,
    pub seed: u64,
}

impl DirectionSet {
    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn direction(&self, j: usize) -> &[f64] {
        &self.coords[j * self.dim..(j + 1) * self.dim]
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.coords.chunks_exact(self.dim)
    }

    pub fn to_vector(&self, j: usize) -> CoefficientVector {
        CoefficientVector::new(self.direction(j).to_vec()).expect("directions are finite")
    }

    /// Shell half-width `ε`; `None` for directions drawn uniformly on the sphere.
    pub fn shell_width(&self) -> Option<f64> {
        self.shell_width
    }

    pub fn proposals_used(&self) -> usize {
        self.proposals_used
    }

    pub fn acceptance_rate(&self) -> f64 {
        self.len() as f64 / self.proposals_used as f64
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn meta(&self) -> DirectionMeta {
        DirectionMeta {
            count: self.len(),
            dim: self.dim,
            shell_width: self.shell_width,
            proposals_used: self.proposals_used,
            acceptance_rate: self.acceptance_rate(),
            seed: self.seed,
        }
    }

    /// Largest `|‖θ‖ − 1|` over the set.
    pub fn max_unit_deviation(&self) -> f64 {
        self.iter()
            .map(|t| (dot(t, t).sqrt() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    /// Builds a set from raw rows without normalizing or validating them.
    /// Used to exercise invariant checks on deliberately broken input.
    #[doc(hidden)]
    pub fn from_raw_unchecked(dim: usize, coords: Vec<f64>, seed: u64) -> Self {
        let k = coords.len() / dim.max(1);
        Self {
            dim,
            coords,
            shell_width: None,
            proposals_used: k.max(1),
            seed,
        }
    }

    /// Mean and standard error of `phi` over the set.
    pub fn average<F>(&self, phi: F) -> MeanEstimate
    where
        F: Fn(&[f64]) -> f64 + Sync,
    {
        let values: Vec<f64> = self.coords.par_chunks_exact(self.dim).map(&phi).collect();
        MeanEstimate::from_samples(&values)
    }

    /// Per-coordinate mean and standard error of `⟨θ, e_i⟩²`.
    pub fn second_moments(&self) -> SecondMoments {
        let k = self.len() as f64;
        let mut sum = vec![0.0; self.dim];
        let mut sum_sq = vec![0.0; self.dim];
        for t in self.iter() {
            for (i, x) in t.iter().enumerate() {
                let v = x * x;
                sum[i] += v;
                sum_sq[i] += v * v;
            }
        }
        let mean: Vec<f64> = sum.iter().map(|s| s / k).collect();
        let std_error = mean
            .iter()
            .zip(&sum_sq)
            .map(|(m, ss)| {
                if k < 2.0 {
                    0.0
                } else {
                    ((ss / k - m * m).max(0.0) * k / (k - 1.0) / k).sqrt()
                }
            })
            .collect();
        SecondMoments { mean, std_error }
    }
}

/// Sample mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeanEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub count: usize,
}

impl MeanEstimate {
    /// Sums in index order so the result does not depend on scheduling.
    pub fn from_samples(values: &[f64]) -> Self {
        let k = values.len();
        if k == 0 {
            return Self {
                mean: f64::NAN,
                std_error: f64::NAN,
                count: 0,
            };
        }
        let mean = values.iter().sum::<f64>() / k as f64;
        let std_error = if k < 2 {
            0.0
        } else {
            let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (k - 1) as f64;
            (var / k as f64).sqrt()
        };
        Self {
            mean,
            std_error,
            count: k,
        }
    }
}

/// `c_i ≈ E⟨θ, e_i⟩²` with standard errors.
#[derive(Debug, Clone, PartialEq)]
pub struct SecondMoments {
    pub mean: Vec<f64>,
    pub std_error: Vec<f64>,
}

/// A generous proposal budget for `k` directions.
pub fn default_max_proposals(k: usize) -> usize {
    k.saturating_mul(2_000).max(1_000_000)
}

fn propose(reference: &GaussianReference, seed: u64, index: usize) -> Vec<f64> {
    let mut rng = rng::stream(seed, Domain::DirectionProposal, index as u64);
    reference
        .eigenvalues
        .iter()
        .map(|l| {
            let xi: f64 = rng.sample(StandardNormal);
            l * xi
        })
        .collect()
}

/// Draws `k` directions by thin-shell rejection.
///
/// Proposal `i` is generated from its own stream, and proposals are accepted
/// in index order, so the output is identical for any thread count.
pub fn sample_directions(
    reference: &GaussianReference,
    k: usize,
    eps: f64,
    seed: u64,
    max_proposals: usize,
) -> Result<DirectionSet> {
    if !(eps > 0.0 && eps <= 0.5) {
        return Err(Error::input(format!("shell width must be in (0, 0.5], got {eps}")));
    }
    if k == 0 {
        return Err(Error::input("direction count must be >= 1"));
    }
    let dim = reference.dim();
    let (lo, hi) = (1.0 - eps, 1.0 + eps);
    let mut coords = Vec::with_capacity(k * dim);
    let mut accepted = 0usize;
    let mut start = 0usize;
    while start < max_proposals {
        let end = (start + BATCH).min(max_proposals);
        let batch: Vec<Option<Vec<f64>>> = (start..end)
            .into_par_iter()
            .map(|i| {
                let x = propose(reference, seed, i);
                let norm = dot(&x, &x).sqrt();
                (norm >= DEGENERATE_NORM && norm >= lo && norm <= hi)
                    .then(|| x.into_iter().map(|v| v / norm).collect())
            })
            .collect();
        for (offset, theta) in batch.into_iter().enumerate() {
            if let Some(theta) = theta {
                coords.extend(theta);
                accepted += 1;
                if accepted == k {
                    return Ok(DirectionSet {
                        dim,
                        coords,
                        shell_width: Some(eps),
                        proposals_used: start + offset + 1,
                        seed,
                    });
                }
            }
        }
        start = end;
    }
    Err(Error::ProposalsExhausted {
        requested: k,
        accepted,
        proposals: max_proposals,
        acceptance_rate: accepted as f64 / max_proposals.max(1) as f64,
    })
}

/// `k` directions uniform on the Euclidean unit sphere of dimension `dim`.
pub fn uniform_directions(dim: usize, k: usize, seed: u64) -> Result<DirectionSet> {
    if dim == 0 || k == 0 {
        return Err(Error::input("dimension and direction count must be >= 1"));
    }
    let rows: Vec<Vec<f64>> = (0..k)
        .into_par_iter()
        .map(|j| {
            let mut rng = rng::stream(seed, Domain::UniformDirection, j as u64);
            loop {
                let g: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
                let norm = dot(&g, &g).sqrt();
                if norm >= DEGENERATE_NORM {
                    return g.into_iter().map(|v| v / norm).collect();
                }
            }
        })
        .collect();
    Ok(DirectionSet {
        dim,
        coords: rows.concat(),
        shell_width: None,
        proposals_used: k,
        seed,
    })
}

/// Normalized surface average of `phi` with its standard error.
pub fn surface_expectation<F>(
    reference: &GaussianReference,
    phi: F,
    eps: f64,
    k: usize,
    seed: u64,
) -> Result<MeanEstimate>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let dirs = sample_directions(reference, k, eps, seed, default_max_proposals(k))?;
    Ok(dirs.average(phi))
}

/// `c_i ≈ (1/γ_S(S)) ∫_S ⟨θ, e_i⟩² γ_S(dθ)` for every coordinate.
pub fn direction_second_moments(
    reference: &GaussianReference,
    eps: f64,
    k: usize,
    seed: u64,
) -> Result<SecondMoments> {
    let dirs = sample_directions(reference, k, eps, seed, default_max_proposals(k))?;
    Ok(dirs.second_moments())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decay_families_are_normalized() {
        for decay in [Decay::Isotropic, Decay::Poly(1.0), Decay::Geom(0.5)] {
            let r = decay.resolve(16).unwrap();
            assert!((r.trace() - 1.0).abs() < 1e-12);
        }
        let r = GaussianReference::isotropic(4).unwrap();
        assert!(r.eigenvalues().iter().all(|l| (l - 0.5).abs() < 1e-15));
        assert_eq!("poly(1.5)".parse::<Decay>().unwrap(), Decay::Poly(1.5));
        assert_eq!("geom( 0.3 )".parse::<Decay>().unwrap(), Decay::Geom(0.3));
        assert!("cubic".parse::<Decay>().is_err());
        assert!(GaussianReference::new(vec![1.0, 0.0]).is_err());
        assert_eq!(Decay::Poly(2.0).to_string(), "poly(2)");
    }

    #[test]
    fn reference_spec_resolution() {
        let named = ReferenceSpec::Named("geom(0.5)".into());
        assert_eq!(named.resolve(3).unwrap().dim(), 3);
        let list = ReferenceSpec::Eigenvalues(vec![1.0, 0.1]);
        assert_eq!(list.resolve(2).unwrap().eigenvalues(), &[1.0, 0.1]);
        assert!(list.resolve(3).is_err());
    }

    #[test]
    fn directions_are_unit_and_counted() {
        let r = GaussianReference::isotropic(5).unwrap();
        let dirs = sample_directions(&r, 300, 0.05, 1, 1_000_000).unwrap();
        assert_eq!(dirs.len(), 300);
        assert!(dirs.max_unit_deviation() < 1e-12);
        assert!(dirs.acceptance_rate() > 0.0 && dirs.acceptance_rate() <= 1.0);
        assert_eq!(
            dirs.acceptance_rate(),
            dirs.len() as f64 / dirs.proposals_used() as f64
        );
    }

    #[test]
    fn exhausted_budget_reports_rate() {
        // Σλ² = 100: the norm almost never lands in the unit shell.
        let r = GaussianReference::new(vec![10.0; 100]).unwrap();
        match sample_directions(&r, 10, 0.01, 0, 5000) {
            Err(Error::ProposalsExhausted {
                requested,
                proposals,
                acceptance_rate,
                ..
            }) => {
                assert_eq!(requested, 10);
                assert_eq!(proposals, 5000);
                assert!(acceptance_rate < 1e-3);
            }
            other => panic!("expected exhaustion, got {other:?}"),
        }
    }

    #[test]
    fn rejects_bad_shell() {
        let r = GaussianReference::isotropic(2).unwrap();
        assert!(sample_directions(&r, 1, 0.0, 0, 10).is_err());
        assert!(sample_directions(&r, 1, 0.6, 0, 10).is_err());
    }

    #[test]
    fn thread_count_does_not_change_output() {
        let r = Decay::Poly(1.0).resolve(6).unwrap();
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| sample_directions(&r, 2000, 0.05, 42, 10_000_000).unwrap())
        };
        let one = run(1);
        assert_eq!(one, run(3));
        assert_eq!(one, run(8));
    }

    #[test]
    fn trivial_surface_expectations() {
        let r = Decay::Geom(0.7).resolve(6).unwrap();
        let one = surface_expectation(&r, |_| 1.0, 0.05, 500, 3).unwrap();
        assert_eq!(one.mean, 1.0);
        assert_eq!(one.std_error, 0.0);
        let norm = surface_expectation(&r, |t| dot(t, t), 0.05, 500, 3).unwrap();
        assert!((norm.mean - 1.0).abs() < 1e-14);
        let c = direction_second_moments(&r, 0.05, 500, 3).unwrap();
        assert!((c.mean.iter().sum::<f64>() - 1.0).abs() < 1e-14);
        assert!(c.mean.iter().all(|x| *x >= 0.0));
    }

    #[test]
    fn isotropic_second_moments_are_flat() {
        let r = GaussianReference::isotropic(4).unwrap();
        let c = direction_second_moments(&r, 0.05, 20_000, 8).unwrap();
        for (m, se) in c.mean.iter().zip(&c.std_error) {
            assert!((m - 0.25).abs() < 4.0 * se, "{m} ± {se}");
        }
    }

    #[test]
    fn sign_symmetry() {
        let r = Decay::Poly(1.0).resolve(5).unwrap();
        let dirs = sample_directions(&r, 20_000, 0.05, 77, 10_000_000).unwrap();
        for i in 0..5 {
            let est = dirs.average(|t| t[i]);
            assert!(est.mean.abs() < 4.0 * est.std_error, "coord {i}: {est:?}");
        }
    }

    #[test]
    fn geometric_decay_orders_second_moments() {
        let r = Decay::Geom(0.5).resolve(6).unwrap();
        let c = direction_second_moments(&r, 0.05, 20_000, 5).unwrap();
        for i in 1..6 {
            assert!(c.mean[i] < c.mean[i - 1], "{:?}", c.mean);
        }
    }

    #[test]
    fn uniform_directions_unit_norm() {
        let dirs = uniform_directions(7, 100, 3).unwrap();
        assert_eq!(dirs.len(), 100);
        assert!(dirs.max_unit_deviation() < 1e-12);
        assert_eq!(dirs.shell_width(), None);
        assert_eq!(dirs.acceptance_rate(), 1.0);
    }
}
