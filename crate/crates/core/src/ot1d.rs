//! One-dimensional optimal transport.
//!
//! On the line the monotone (quantile) coupling is optimal for every convex
//! cost, so `W_p^p(a, b) = ∫₀¹ |F_a⁻¹(u) − F_b⁻¹(u)|^p du`. For discrete
//! measures both quantile functions are step functions and the integral is a
//! finite sum over the merged partition of `[0, 1]`.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};
use statrs::function::gamma::gamma;

use crate::error::{check_dims, Error, Result};
use crate::hilbert::{check_order, dot, CoefficientVector, DiscreteMeasure, Weights};
use crate::quadrature::{integrate, integrate_line, Quadrature, QuadratureOptions};
use crate::rng::{self, Domain};

/// Tolerance on `‖θ‖ = 1` accepted by [`project`].
pub const UNIT_TOLERANCE: f64 = 1e-9;

/// A probability measure on the real line with sorted support.
#[derive(Debug, Clone, PartialEq)]
pub struct Projected1DMeasure {
    values: Vec<f64>,
    weights: Weights,
}

impl Projected1DMeasure {
    /// Sorts `values` (stably) and carries the weights along. Atoms of explicit
    /// weight sharing a location are merged.
    pub fn new(values: Vec<f64>, weights: Weights) -> Result<Self> {
        if values.is_empty() || values.len() != weights.len() {
            return Err(Error::input("values and weights must have equal nonzero length"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::input("non-finite atom location"));
        }
        Ok(Self::from_finite(values, weights))
    }

    fn from_finite(mut values: Vec<f64>, weights: Weights) -> Self {
        match weights {
            Weights::Uniform(n) => {
                values.sort_by(f64::total_cmp);
                Self {
                    values,
                    weights: Weights::Uniform(n),
                }
            }
            Weights::Explicit(w) => {
                let mut pairs: Vec<(f64, f64)> = values.into_iter().zip(w).collect();
                pairs.sort_by(|x, y| x.0.total_cmp(&y.0));
                let mut values = Vec::with_capacity(pairs.len());
                let mut merged: Vec<f64> = Vec::with_capacity(pairs.len());
                for (v, w) in pairs {
                    if values.last() == Some(&v) {
                        *merged.last_mut().expect("parallel vectors") += w;
                    } else {
                        values.push(v);
                        merged.push(w);
                    }
                }
                Self {
                    values,
                    weights: Weights::Explicit(merged),
                }
            }
        }
    }

    /// Uniform measure on already sorted values.
    pub(crate) fn from_sorted_uniform(values: Vec<f64>) -> Self {
        debug_assert!(values.windows(2).all(|w| w[0] <= w[1]));
        let n = values.len();
        Self {
            values,
            weights: Weights::Uniform(n),
        }
    }

    pub fn dirac(a: f64) -> Self {
        Self {
            values: vec![a],
            weights: Weights::Uniform(1),
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn weights(&self) -> &Weights {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `Σ w_k |v_k|^p`.
    pub fn abs_moment(&self, p: f64) -> f64 {
        self.values
            .iter()
            .enumerate()
            .map(|(k, v)| self.weights.get(k) * v.abs().powf(p))
            .sum()
    }
}

/// Pushforward of `mu` under `x ↦ ⟨θ, x⟩`.
pub fn project(mu: &DiscreteMeasure, theta: &CoefficientVector) -> Result<Projected1DMeasure> {
    check_dims(mu.dim(), theta.dim())?;
    let norm = theta.norm();
    if (norm - 1.0).abs() > UNIT_TOLERANCE {
        return Err(Error::input(format!(
            "projection direction must be unit norm, got ‖θ‖ = {norm}"
        )));
    }
    Ok(project_raw(mu, theta.coords()))
}

pub(crate) fn project_raw(mu: &DiscreteMeasure, theta: &[f64]) -> Projected1DMeasure {
    let values: Vec<f64> = mu.points().map(|x| dot(theta, x)).collect();
    Projected1DMeasure::from_finite(values, mu.weights().clone())
}

#[derive(Debug, Clone, Copy)]
enum Power {
    One,
    Two,
    Real(f64),
}

impl Power {
    fn new(p: f64) -> Self {
        if p == 1.0 {
            Power::One
        } else if p == 2.0 {
            Power::Two
        } else {
            Power::Real(p)
        }
    }

    #[inline]
    fn cost(self, x: f64, y: f64) -> f64 {
        let d = (x - y).abs();
        match self {
            Power::One => d,
            Power::Two => d * d,
            Power::Real(p) => d.powf(p),
        }
    }
}

/// `W_p(a, b)` for measures on the line.
pub fn w1d(a: &Projected1DMeasure, b: &Projected1DMeasure, p: f64) -> Result<f64> {
    Ok(w1d_pow(a, b, p)?.powf(1.0 / p))
}

/// `W_p^p(a, b)`; the quantity averaged by the sliced distance.
pub fn w1d_pow(a: &Projected1DMeasure, b: &Projected1DMeasure, p: f64) -> Result<f64> {
    check_order(p)?;
    Ok(wpp_sorted(a, b, Power::new(p)))
}

pub(crate) fn wpp_unchecked(a: &Projected1DMeasure, b: &Projected1DMeasure, p: f64) -> f64 {
    wpp_sorted(a, b, Power::new(p))
}

fn wpp_sorted(a: &Projected1DMeasure, b: &Projected1DMeasure, power: Power) -> f64 {
    match (&a.weights, &b.weights) {
        (Weights::Uniform(n), Weights::Uniform(m)) => {
            wpp_uniform(&a.values, *n as u64, &b.values, *m as u64, power)
        }
        _ => {
            let ca = cumulative(&a.weights);
            let cb = cumulative(&b.weights);
            wpp_general(&a.values, &ca, &b.values, &cb, power)
        }
    }
}

/// Uniform against uniform: breakpoints `i/n` and `j/m` are compared as the
/// integers `i·m` and `j·n`, so every segment mass is an exact multiple of `1/(nm)`.
fn wpp_uniform(av: &[f64], n: u64, bv: &[f64], m: u64, power: Power) -> f64 {
    wpp_uniform_by(n, |i| av[i], m, |j| bv[j], power)
}

#[inline]
fn wpp_uniform_by<A, B>(n: u64, a: A, m: u64, b: B, power: Power) -> f64
where
    A: Fn(usize) -> f64,
    B: Fn(usize) -> f64,
{
    if n == m {
        let total: f64 = (0..n as usize).map(|i| power.cost(a(i), b(i))).sum();
        return total / n as f64;
    }
    let (mut i, mut j) = (0usize, 0usize);
    let mut prev = 0u64;
    let mut total = 0.0;
    while (i as u64) < n && (j as u64) < m {
        let next_a = (i as u64 + 1) * m;
        let next_b = (j as u64 + 1) * n;
        let next = next_a.min(next_b);
        total += power.cost(a(i), b(j)) * (next - prev) as f64;
        prev = next;
        if next_a == next {
            i += 1;
        }
        if next_b == next {
            j += 1;
        }
    }
    total / (n * m) as f64
}

/// `W_p^p` between `a` and the uniform measure on `scale · grid + shift`
/// without materializing the rescaled grid. `grid` must be sorted and `scale ≥ 0`.
pub(crate) fn wpp_against_scaled_grid(
    a: &Projected1DMeasure,
    grid: &[f64],
    scale: f64,
    shift: f64,
    p: f64,
) -> f64 {
    debug_assert!(scale >= 0.0);
    let power = Power::new(p);
    match a.weights {
        Weights::Uniform(n) => wpp_uniform_by(
            n as u64,
            |i| a.values[i],
            grid.len() as u64,
            |j| scale * grid[j] + shift,
            power,
        ),
        Weights::Explicit(_) => {
            let b = Projected1DMeasure::from_sorted_uniform(
                grid.iter().map(|g| scale * g + shift).collect(),
            );
            wpp_sorted(a, &b, power)
        }
    }
}

fn cumulative(w: &Weights) -> Vec<f64> {
    let n = w.len();
    let mut c: Vec<f64> = match w {
        Weights::Uniform(n) => (1..=*n).map(|i| i as f64 / *n as f64).collect(),
        Weights::Explicit(w) => w
            .iter()
            .scan(0.0, |acc, x| {
                *acc += x;
                Some(*acc)
            })
            .collect(),
    };
    c[n - 1] = 1.0;
    c
}

fn wpp_general(av: &[f64], ca: &[f64], bv: &[f64], cb: &[f64], power: Power) -> f64 {
    let (mut i, mut j) = (0usize, 0usize);
    let mut prev = 0.0;
    let mut total = 0.0;
    while i < av.len() && j < bv.len() {
        let next = ca[i].min(cb[j]);
        let mass = next - prev;
        if mass > 0.0 {
            total += power.cost(av[i], bv[j]) * mass;
        }
        prev = next;
        let advance_a = ca[i] == next;
        let advance_b = cb[j] == next;
        if advance_a {
            i += 1;
        }
        if advance_b {
            j += 1;
        }
    }
    total
}

/// Reference laws on the line with closed-form distribution functions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum DistributionSpec1D {
    Uniform { a: f64, b: f64 },
    Gaussian { mean: f64, sd: f64 },
    Point { a: f64 },
}

impl DistributionSpec1D {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            DistributionSpec1D::Uniform { a, b } => a.is_finite() && b.is_finite() && b > a,
            DistributionSpec1D::Gaussian { mean, sd } => {
                mean.is_finite() && sd.is_finite() && sd > 0.0
            }
            DistributionSpec1D::Point { a } => a.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::input(format!("invalid distribution parameters: {self:?}")))
        }
    }

    fn normal(mean: f64, sd: f64) -> Normal {
        Normal::new(mean, sd).expect("validated parameters")
    }

    pub fn cdf(&self, x: f64) -> f64 {
        match *self {
            DistributionSpec1D::Uniform { a, b } => ((x - a) / (b - a)).clamp(0.0, 1.0),
            DistributionSpec1D::Gaussian { mean, sd } => Self::normal(mean, sd).cdf(x),
            DistributionSpec1D::Point { a } => {
                if x >= a {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    /// `1 − F(x)` without cancellation in the upper tail.
    pub fn sf(&self, x: f64) -> f64 {
        match *self {
            DistributionSpec1D::Gaussian { mean, sd } => Self::normal(mean, sd).sf(x),
            _ => 1.0 - self.cdf(x),
        }
    }

    /// `F(x)(1 − F(x))`.
    pub fn cdf_variance(&self, x: f64) -> f64 {
        self.cdf(x) * self.sf(x)
    }

    pub fn quantile(&self, u: f64) -> f64 {
        match *self {
            DistributionSpec1D::Uniform { a, b } => a + (b - a) * u,
            DistributionSpec1D::Gaussian { mean, sd } => Self::normal(mean, sd).inverse_cdf(u),
            DistributionSpec1D::Point { a } => a,
        }
    }

    /// `E|ξ|^s`.
    pub fn abs_moment(&self, s: f64) -> Result<f64> {
        self.validate()?;
        if !s.is_finite() || s < 0.0 {
            return Err(Error::domain(format!("moment order {s} not supported")));
        }
        match *self {
            DistributionSpec1D::Uniform { a, b } => {
                let g = |x: f64| x.signum() * x.abs().powf(s + 1.0) / (s + 1.0);
                Ok((g(b) - g(a)) / (b - a))
            }
            DistributionSpec1D::Gaussian { mean, sd } if mean == 0.0 => Ok(sd.powf(s)
                * 2f64.powf(s / 2.0)
                * gamma((s + 1.0) / 2.0)
                / std::f64::consts::PI.sqrt()),
            DistributionSpec1D::Gaussian { mean, sd } => {
                let norm = Self::normal(mean, sd);
                let q = integrate_line(
                    |x| {
                        use statrs::distribution::Continuous;
                        x.abs().powf(s) * norm.pdf(x)
                    },
                    mean,
                    QuadratureOptions::default(),
                )
                .map_err(|e| Error::domain(format!("moment quadrature failed: {e}")))?;
                Ok(q.value)
            }
            DistributionSpec1D::Point { a } => Ok(a.abs().powf(s)),
        }
    }

    /// Midpoint quantile discretization `F⁻¹((i + ½)/atoms)`, `i < atoms`.
    pub fn quantile_grid(&self, atoms: usize) -> Result<Projected1DMeasure> {
        self.validate()?;
        if atoms == 0 {
            return Err(Error::input("quantile grid needs at least one atom"));
        }
        if let DistributionSpec1D::Point { a } = *self {
            return Ok(Projected1DMeasure::dirac(a));
        }
        let n = atoms as f64;
        let values = (0..atoms).map(|i| self.quantile((i as f64 + 0.5) / n)).collect();
        Ok(Projected1DMeasure::from_sorted_uniform(values))
    }

    /// Empirical measure of `n` i.i.d. draws from one stream selected by `seed`.
    pub fn sample(&self, n: usize, seed: u64) -> Result<Projected1DMeasure> {
        self.validate()?;
        if n == 0 {
            return Err(Error::input("sample size must be >= 1"));
        }
        let mut rng = rng::stream(seed, Domain::Sample1D, 0);
        let values = (0..n)
            .map(|_| match *self {
                DistributionSpec1D::Uniform { a, b } => a + (b - a) * rng.random::<f64>(),
                DistributionSpec1D::Gaussian { mean, sd } => {
                    let z: f64 = rng.sample(StandardNormal);
                    mean + sd * z
                }
                DistributionSpec1D::Point { a } => a,
            })
            .collect();
        Ok(Projected1DMeasure::from_finite(values, Weights::Uniform(n)))
    }
}

/// `J_p = ∫ |x|^{p−1} √(F(x)(1 − F(x))) dx` by adaptive quadrature.
pub fn bobkov_integral(dist: &DistributionSpec1D, p: f64) -> Result<Quadrature> {
    dist.validate()?;
    check_order(p)?;
    let integrand = |x: f64| x.abs().powf(p - 1.0) * dist.cdf_variance(x).sqrt();
    let opts = QuadratureOptions::default();
    let domain_err = |e: Error| Error::domain(format!("J_p diverges or failed to converge: {e}"));
    match *dist {
        DistributionSpec1D::Point { .. } => Ok(Quadrature {
            value: 0.0,
            abs_error: 0.0,
            intervals: 0,
        }),
        DistributionSpec1D::Uniform { a, b } => {
            if a < 0.0 && b > 0.0 {
                let left = integrate(integrand, a, 0.0, opts).map_err(domain_err)?;
                let right = integrate(integrand, 0.0, b, opts).map_err(domain_err)?;
                Ok(Quadrature {
                    value: left.value + right.value,
                    abs_error: left.abs_error + right.abs_error,
                    intervals: left.intervals + right.intervals,
                })
            } else {
                integrate(integrand, a, b, opts).map_err(domain_err)
            }
        }
        DistributionSpec1D::Gaussian { .. } => {
            integrate_line(integrand, 0.0, opts).map_err(domain_err)
        }
    }
}

/// `p · 2^{p−1} · J_p`; multiplied by `n^{-1/2}` it bounds `E W_p^p(μ^n, μ)` on the line.
pub fn bobkov_rhs(dist: &DistributionSpec1D, p: f64) -> Result<f64> {
    let j = bobkov_integral(dist, p)?;
    Ok(p * 2f64.powf(p - 1.0) * j.value)
}

/// The bound `x ↦ (1 + E|ξ|^s)/(1 + |x|^s)` on `F(x)(1 − F(x))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChebyshevEnvelope {
    pub s: f64,
    pub numerator: f64,
}

impl ChebyshevEnvelope {
    pub fn eval(&self, x: f64) -> f64 {
        self.numerator / (1.0 + x.abs().powf(self.s))
    }
}

pub fn chebyshev_envelope(dist: &DistributionSpec1D, s: f64) -> Result<ChebyshevEnvelope> {
    if !s.is_finite() || s < 1.0 {
        return Err(Error::domain(format!("envelope order s must be >= 1, got {s}")));
    }
    let m = dist.abs_moment(s)?;
    if !m.is_finite() {
        return Err(Error::domain("infinite absolute moment"));
    }
    Ok(ChebyshevEnvelope {
        s,
        numerator: 1.0 + m,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn uniform(values: &[f64]) -> Projected1DMeasure {
        Projected1DMeasure::new(values.to_vec(), Weights::Uniform(values.len())).unwrap()
    }

    /// Minimum over all permutation couplings of equal-size uniform measures.
    fn brute_force_wpp(a: &[f64], b: &[f64], p: f64) -> f64 {
        fn rec(a: &[f64], b: &mut Vec<f64>, k: usize, p: f64, acc: f64, best: &mut f64) {
            if k == a.len() {
                *best = best.min(acc);
                return;
            }
            for i in k..b.len() {
                b.swap(k, i);
                rec(a, b, k + 1, p, acc + (a[k] - b[k]).abs().powf(p), best);
                b.swap(k, i);
            }
        }
        let mut best = f64::INFINITY;
        rec(a, &mut b.to_vec(), 0, p, 0.0, &mut best);
        best / a.len() as f64
    }

    #[test]
    fn projection_examples() {
        let mu = DiscreteMeasure::dirac(CoefficientVector::new(vec![3.0, 4.0]).unwrap());
        let e1 = CoefficientVector::basis(2, 0).unwrap();
        let e2 = CoefficientVector::basis(2, 1).unwrap();
        assert_eq!(project(&mu, &e1).unwrap().values(), &[3.0]);

        let nu = DiscreteMeasure::uniform(vec![
            CoefficientVector::new(vec![0.0, 1.0]).unwrap(),
            CoefficientVector::new(vec![0.0, -1.0]).unwrap(),
        ])
        .unwrap();
        let proj = project(&nu, &e2).unwrap();
        assert_eq!(proj.values(), &[-1.0, 1.0]);
        assert_eq!(proj.weights(), &Weights::Uniform(2));

        let not_unit = CoefficientVector::new(vec![1.0, 1.0]).unwrap();
        assert!(project(&mu, &not_unit).is_err());
    }

    #[test]
    fn projected_moment_bounded_by_moment() {
        use crate::hilbert::{moment_p, MeasureSpec};
        let spec = MeasureSpec::GaussianKl {
            eigenvalues: vec![1.0, 0.5, 0.3, 0.2, 0.1],
        };
        let mu = spec.sample(500, 3).unwrap();
        for seed in 0..20u64 {
            let dir = MeasureSpec::GaussianKl {
                eigenvalues: vec![1.0; 5],
            }
            .sample(1, seed + 100)
            .unwrap();
            let theta = CoefficientVector::new(dir.point(0).to_vec())
                .unwrap()
                .normalized()
                .unwrap();
            let proj = project(&mu, &theta).unwrap();
            for p in [1.0, 2.0, 3.0] {
                assert!(proj.abs_moment(p) <= moment_p(&mu, p).unwrap() * (1.0 + 1e-12));
            }
        }
    }

    #[test]
    fn explicit_ties_merge() {
        let m = Projected1DMeasure::new(
            vec![1.0, 0.0, 1.0],
            Weights::explicit(vec![0.2, 0.5, 0.3]).unwrap(),
        )
        .unwrap();
        assert_eq!(m.values(), &[0.0, 1.0]);
        match m.weights() {
            Weights::Explicit(w) => assert!((w[1] - 0.5).abs() < 1e-15),
            _ => panic!("expected explicit weights"),
        }
    }

    #[test]
    fn w1d_examples() {
        let d = w1d(
            &Projected1DMeasure::dirac(1.5),
            &Projected1DMeasure::dirac(-2.0),
            3.0,
        )
        .unwrap();
        assert!((d - 3.5).abs() < 1e-14);

        let a = [1.0, 2.0, 3.0];
        let b = [2.0, 3.0, 4.0];
        for p in [1.0, 1.5, 2.0, 4.0] {
            assert!((brute_force_wpp(&a, &b, p) - 1.0).abs() < 1e-14);
            assert!((w1d(&uniform(&a), &uniform(&b), p).unwrap() - 1.0).abs() < 1e-14);
        }
        assert_eq!(brute_force_wpp(&[0.0, 2.0], &[1.0, 3.0], 1.0), 1.0);
        assert_eq!(w1d(&uniform(&[0.0, 2.0]), &uniform(&[1.0, 3.0]), 1.0).unwrap(), 1.0);
        assert!(w1d(&uniform(&[0.0]), &uniform(&[1.0]), 0.5).is_err());
    }

    #[test]
    fn unequal_sizes_merge_partitions() {
        // uniform{0} vs uniform{-1, 1}: every unit of mass moves by 1.
        let a = uniform(&[0.0]);
        let b = uniform(&[-1.0, 1.0]);
        assert_eq!(w1d_pow(&a, &b, 2.0).unwrap(), 1.0);
        // uniform{0,1,2} vs uniform{0,3}: quantile pieces [0,1/3]:0→0, [1/3,1/2]:1→0,
        // [1/2,2/3]:1→3, [2/3,1]:2→3.
        let a = uniform(&[0.0, 1.0, 2.0]);
        let b = uniform(&[0.0, 3.0]);
        let expected = (1.0 / 6.0) * 1.0 + (1.0 / 6.0) * 2.0 + (1.0 / 3.0) * 1.0;
        assert!((w1d_pow(&a, &b, 1.0).unwrap() - expected).abs() < 1e-15);
        let explicit = Projected1DMeasure::new(
            vec![0.0, 3.0],
            Weights::Explicit(vec![0.5, 0.5]),
        )
        .unwrap();
        assert!((w1d_pow(&a, &explicit, 1.0).unwrap() - expected).abs() < 1e-15);
    }

    #[test]
    fn bobkov_uniform_and_point() {
        let u = DistributionSpec1D::Uniform { a: 0.0, b: 1.0 };
        let j = bobkov_integral(&u, 1.0).unwrap();
        assert!((j.value - PI / 8.0).abs() < 1e-8, "{}", j.value);
        assert!((bobkov_rhs(&u, 1.0).unwrap() - PI / 8.0).abs() < 1e-8);
        // ∫₀¹ x √(x(1−x)) dx = π/16.
        assert!((bobkov_integral(&u, 2.0).unwrap().value - PI / 16.0).abs() < 1e-8);
        assert_eq!(bobkov_rhs(&DistributionSpec1D::Point { a: 2.0 }, 3.0).unwrap(), 0.0);
    }

    #[test]
    fn bobkov_gaussian_against_composite_simpson() {
        let g = DistributionSpec1D::Gaussian { mean: 0.0, sd: 1.0 };
        let simpson = {
            let (lo, hi, n) = (-14.0, 14.0, 200_000usize);
            let h = (hi - lo) / n as f64;
            let f = |x: f64| g.cdf_variance(x).sqrt();
            let mut acc = f(lo) + f(hi);
            for i in 1..n {
                let w = if i % 2 == 1 { 4.0 } else { 2.0 };
                acc += w * f(lo + i as f64 * h);
            }
            acc * h / 3.0
        };
        let j = bobkov_integral(&g, 1.0).unwrap();
        assert!((j.value - simpson).abs() < 1e-6, "{} vs {}", j.value, simpson);
    }

    #[test]
    fn gaussian_cdf_matches_density_quadrature() {
        let g = DistributionSpec1D::Gaussian { mean: 0.0, sd: 1.0 };
        // Φ(1) = 1/2 + ∫₀¹ φ by Simpson.
        let n = 10_000;
        let h = 1.0 / n as f64;
        let phi = |x: f64| (-x * x / 2.0).exp() / (2.0 * PI).sqrt();
        let mut acc = phi(0.0) + phi(1.0);
        for i in 1..n {
            acc += if i % 2 == 1 { 4.0 } else { 2.0 } * phi(i as f64 * h);
        }
        let cdf1 = 0.5 + acc * h / 3.0;
        // statrs' erf carries about 1e-11 absolute error here.
        assert!((g.cdf(1.0) - cdf1).abs() < 1e-10, "{} vs {cdf1}", g.cdf(1.0));
        let fv = cdf1 * (1.0 - cdf1);
        assert!((fv - 0.133_484_1).abs() < 1e-6, "{fv}");
        let env = chebyshev_envelope(&g, 2.0).unwrap();
        assert!((env.eval(0.0) - 2.0).abs() < 1e-14);
        assert!((env.eval(1.0) - 1.0).abs() < 1e-14);
        assert!(g.cdf_variance(0.0) <= env.eval(0.0));
        assert!(fv <= env.eval(1.0));
    }

    #[test]
    fn envelope_dominates_on_grid() {
        let laws = [
            DistributionSpec1D::Uniform { a: 0.0, b: 1.0 },
            DistributionSpec1D::Gaussian { mean: 0.0, sd: 1.0 },
            DistributionSpec1D::Gaussian { mean: 1.0, sd: 0.5 },
            DistributionSpec1D::Uniform { a: -2.0, b: 0.5 },
        ];
        for dist in laws {
            for s in [1.0, 2.0, 4.0, 7.5] {
                let env = chebyshev_envelope(&dist, s).unwrap();
                for i in 0..=600 {
                    let x = -3.0 + i as f64 * 0.01;
                    assert!(dist.cdf_variance(x) <= env.eval(x), "{dist:?} s={s} x={x}");
                }
            }
        }
        assert!(chebyshev_envelope(&laws[0], 0.5).is_err());
    }

    #[test]
    fn abs_moments() {
        let u = DistributionSpec1D::Uniform { a: 0.0, b: 1.0 };
        assert!((u.abs_moment(2.0).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        let u = DistributionSpec1D::Uniform { a: -1.0, b: 1.0 };
        assert!((u.abs_moment(2.0).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        let g = DistributionSpec1D::Gaussian { mean: 0.0, sd: 2.0 };
        assert!((g.abs_moment(2.0).unwrap() - 4.0).abs() < 1e-12);
        assert!((g.abs_moment(4.0).unwrap() - 48.0).abs() < 1e-10);
        let shifted = DistributionSpec1D::Gaussian { mean: 1.0, sd: 1.0 };
        assert!((shifted.abs_moment(2.0).unwrap() - 2.0).abs() < 1e-8);
        assert!(DistributionSpec1D::Gaussian { mean: 0.0, sd: 0.0 }
            .abs_moment(2.0)
            .is_err());
    }

    #[test]
    fn quantile_grid_converges() {
        let g = DistributionSpec1D::Gaussian { mean: 0.0, sd: 1.0 };
        let fine = g.quantile_grid(100_000).unwrap();
        assert!((fine.abs_moment(2.0) - 1.0).abs() < 1e-3);
        let gap = |atoms| w1d(&g.quantile_grid(atoms).unwrap(), &fine, 1.0).unwrap();
        let (w1k, w4k) = (gap(1000), gap(4000));
        assert!(w4k < 0.5 * w1k && w4k < 1e-3, "{w1k} {w4k}");
    }
}
