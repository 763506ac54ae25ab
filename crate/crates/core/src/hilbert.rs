//! Coefficient vectors and discrete measures on a truncated separable Hilbert space.
//!
//! Every element is stored through its first `d` coefficients in a fixed
//! orthonormal basis `e_1, e_2, ...`. Measures are finite weighted point sets;
//! continuous laws enter only through [`MeasureSpec`] samplers and analytic moments.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{check_dims, Error, Result};
use crate::rng::{self, Domain};

/// Tolerance on the total mass of a measure.
pub const MASS_TOLERANCE: f64 = 1e-12;

/// Truncated coefficient sequence of an element of the Hilbert space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct CoefficientVector(Vec<f64>);

impl CoefficientVector {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::input("coefficient vector must have dimension >= 1"));
        }
        if let Some(i) = coords.iter().position(|c| !c.is_finite()) {
            return Err(Error::input(format!("coefficient {i} is not finite")));
        }
        Ok(Self(coords))
    }

    pub fn zeros(dim: usize) -> Result<Self> {
        Self::new(vec![0.0; dim])
    }

    /// The basis vector `e_{index+1}` (zero-based `index`).
    pub fn basis(dim: usize, index: usize) -> Result<Self> {
        if index >= dim {
            return Err(Error::input(format!(
                "basis index {index} out of range for dimension {dim}"
            )));
        }
        let mut coords = vec![0.0; dim];
        coords[index] = 1.0;
        Self::new(coords)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn norm_sq(&self) -> f64 {
        dot(&self.0, &self.0)
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn scaled(&self, c: f64) -> Result<Self> {
        Self::new(self.0.iter().map(|x| c * x).collect())
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        check_dims(self.dim(), other.dim())?;
        Self::new(self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect())
    }

    /// `x / ‖x‖`; fails on the zero vector.
    pub fn normalized(&self) -> Result<Self> {
        let n = self.norm();
        if n == 0.0 {
            return Err(Error::input("cannot normalize the zero vector"));
        }
        Ok(Self(self.0.iter().map(|x| x / n).collect()))
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl TryFrom<Vec<f64>> for CoefficientVector {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<CoefficientVector> for Vec<f64> {
    fn from(v: CoefficientVector) -> Self {
        v.0
    }
}

impl AsRef<[f64]> for CoefficientVector {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Inner product `Σ x_i y_i`.
pub fn inner(x: &CoefficientVector, y: &CoefficientVector) -> Result<f64> {
    check_dims(x.dim(), y.dim())?;
    Ok(dot(x.coords(), y.coords()))
}

/// Atom weights. Empirical measures keep the exact form `1/n`.
#[derive(Debug, Clone, PartialEq)]
pub enum Weights {
    Uniform(usize),
    Explicit(Vec<f64>),
}

impl Weights {
    pub fn len(&self) -> usize {
        match self {
            Weights::Uniform(n) => *n,
            Weights::Explicit(w) => w.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get(&self, i: usize) -> f64 {
        match self {
            Weights::Uniform(n) => 1.0 / *n as f64,
            Weights::Explicit(w) => w[i],
        }
    }

    pub fn to_vec(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.get(i)).collect()
    }

    /// Validates and renormalizes general weights. Weights that are all equal
    /// collapse to the exact uniform form.
    pub fn explicit(mut w: Vec<f64>) -> Result<Self> {
        if w.is_empty() {
            return Err(Error::input("a measure needs at least one atom"));
        }
        if w.iter().any(|x| !x.is_finite() || *x < 0.0) {
            return Err(Error::input("weights must be finite and nonnegative"));
        }
        let total: f64 = w.iter().sum();
        if total <= 0.0 {
            return Err(Error::input("weights must have positive total mass"));
        }
        if w.iter().all(|x| *x == w[0]) {
            return Ok(Weights::Uniform(w.len()));
        }
        for x in &mut w {
            *x /= total;
        }
        Ok(Weights::Explicit(w))
    }
}

/// Weighted finite point set in coefficient space.
///
/// Points are stored row-major in one buffer of length `len * dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteMeasure {
    dim: usize,
    coords: Vec<f64>,
    weights: Weights,
}

impl DiscreteMeasure {
    /// Equally weighted measure on `points`.
    pub fn uniform(points: Vec<CoefficientVector>) -> Result<Self> {
        let n = points.len();
        Self::from_points(points, Weights::Uniform(n))
    }

    pub fn weighted(points: Vec<CoefficientVector>, weights: Vec<f64>) -> Result<Self> {
        if points.len() != weights.len() {
            return Err(Error::input(format!(
                "{} points but {} weights",
                points.len(),
                weights.len()
            )));
        }
        Self::from_points(points, Weights::explicit(weights)?)
    }

    pub fn dirac(x: CoefficientVector) -> Self {
        Self {
            dim: x.dim(),
            coords: x.into_inner(),
            weights: Weights::Uniform(1),
        }
    }

    fn from_points(points: Vec<CoefficientVector>, weights: Weights) -> Result<Self> {
        let first = points
            .first()
            .ok_or_else(|| Error::input("a measure needs at least one atom"))?;
        let dim = first.dim();
        let mut coords = Vec::with_capacity(points.len() * dim);
        for p in &points {
            check_dims(dim, p.dim())?;
            coords.extend_from_slice(p.coords());
        }
        Ok(Self {
            dim,
            coords,
            weights,
        })
    }

    /// Builds a uniform measure from a row-major buffer; every entry must be finite.
    pub fn uniform_from_rows(dim: usize, coords: Vec<f64>) -> Result<Self> {
        if dim == 0 || coords.is_empty() || !coords.len().is_multiple_of(dim) {
            return Err(Error::input("row buffer length must be a positive multiple of dim"));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::input("non-finite coordinate"));
        }
        let n = coords.len() / dim;
        Ok(Self {
            dim,
            coords,
            weights: Weights::Uniform(n),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn points(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.coords.chunks_exact(self.dim)
    }

    pub fn weights(&self) -> &Weights {
        &self.weights
    }

    pub fn weight(&self, i: usize) -> f64 {
        self.weights.get(i)
    }

    /// Scales every atom by `c`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        if !c.is_finite() {
            return Err(Error::input("scale must be finite"));
        }
        Ok(Self {
            dim: self.dim,
            coords: self.coords.iter().map(|x| c * x).collect(),
            weights: self.weights.clone(),
        })
    }
}

/// Same as [`MeasureSpec::sample`].
pub fn sample_measure(spec: &MeasureSpec, n: usize, seed: u64) -> Result<DiscreteMeasure> {
    spec.sample(n, seed)
}

/// `M_p(μ) = Σ_k w_k ‖x_k‖^p`.
pub fn moment_p(mu: &DiscreteMeasure, p: f64) -> Result<f64> {
    check_order(p)?;
    Ok(mu
        .points()
        .enumerate()
        .map(|(k, x)| mu.weight(k) * norm_pow(dot(x, x), p))
        .sum())
}

/// `‖x‖^p` from `‖x‖²`, exact for `p = 2`.
#[inline]
pub(crate) fn norm_pow(norm_sq: f64, p: f64) -> f64 {
    if p == 2.0 {
        norm_sq
    } else {
        norm_sq.sqrt().powf(p)
    }
}

pub(crate) fn check_order(p: f64) -> Result<()> {
    if p.is_finite() && p >= 1.0 {
        Ok(())
    } else {
        Err(Error::input(format!("order p must be finite and >= 1, got {p}")))
    }
}

/// Families of measures used by the experiments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum MeasureSpec {
    /// Dirac mass at `point`.
    PointMass { point: Vec<f64> },
    /// Centered Gaussian `Σ λ_i ξ_i e_i` with i.i.d. standard normal `ξ_i`.
    GaussianKl { eigenvalues: Vec<f64> },
    /// Uniform law on the centered ball of `radius`.
    UniformBall { dimension: usize, radius: f64 },
    /// Dirac mass at `scale · e_index` (one-based index).
    ShiftedBasis {
        dimension: usize,
        index: usize,
        scale: f64,
    },
}

impl MeasureSpec {
    pub fn dim(&self) -> usize {
        match self {
            MeasureSpec::PointMass { point } => point.len(),
            MeasureSpec::GaussianKl { eigenvalues } => eigenvalues.len(),
            MeasureSpec::UniformBall { dimension, .. } => *dimension,
            MeasureSpec::ShiftedBasis { dimension, .. } => *dimension,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim() == 0 {
            return Err(Error::input("measure dimension must be >= 1"));
        }
        match self {
            MeasureSpec::PointMass { point } => {
                if point.iter().any(|x| !x.is_finite()) {
                    return Err(Error::input("point-mass location must be finite"));
                }
            }
            MeasureSpec::GaussianKl { eigenvalues } => {
                if eigenvalues.iter().any(|l| !l.is_finite() || *l == 0.0) {
                    return Err(Error::input(
                        "gaussian-kl eigenvalues must be finite and nonzero",
                    ));
                }
            }
            MeasureSpec::UniformBall { radius, .. } => {
                if !radius.is_finite() || *radius <= 0.0 {
                    return Err(Error::input("uniform-ball radius must be positive"));
                }
            }
            MeasureSpec::ShiftedBasis {
                dimension,
                index,
                scale,
            } => {
                if *index == 0 || index > dimension {
                    return Err(Error::input(format!(
                        "shifted-basis index {index} outside 1..={dimension}"
                    )));
                }
                if !scale.is_finite() {
                    return Err(Error::input("shifted-basis scale must be finite"));
                }
            }
        }
        Ok(())
    }

    /// Analytic `M_s = E‖X‖^s`.
    ///
    /// Exact for every kind except `gaussian-kl` with `s` not an even integer,
    /// where the Lyapunov bound `(E‖X‖^{2m})^{s/2m}`, `m = ⌈s/2⌉`, is returned.
    pub fn analytic_moment(&self, s: f64) -> Result<f64> {
        self.validate()?;
        if !s.is_finite() || s < 0.0 {
            return Err(Error::input(format!("moment order must be >= 0, got {s}")));
        }
        Ok(match self {
            MeasureSpec::PointMass { point } => norm_pow(dot(point, point), s),
            MeasureSpec::ShiftedBasis { scale, .. } => scale.abs().powf(s),
            MeasureSpec::UniformBall { dimension, radius } => {
                let d = *dimension as f64;
                radius.powf(s) * d / (d + s)
            }
            MeasureSpec::GaussianKl { eigenvalues } => {
                let half = s / 2.0;
                let m = half.ceil() as usize;
                let raw = gaussian_norm_sq_moment(eigenvalues, m);
                if half == m as f64 {
                    raw
                } else {
                    raw.powf(half / m as f64)
                }
            }
        })
    }

    /// `n` equally weighted i.i.d. draws; draw `k` uses stream `(seed, k)`.
    pub fn sample(&self, n: usize, seed: u64) -> Result<DiscreteMeasure> {
        self.validate()?;
        if n == 0 {
            return Err(Error::input("sample size must be >= 1"));
        }
        let d = self.dim();
        let mut coords = Vec::with_capacity(n * d);
        match self {
            MeasureSpec::PointMass { point } => {
                for _ in 0..n {
                    coords.extend_from_slice(point);
                }
            }
            MeasureSpec::ShiftedBasis { index, scale, .. } => {
                for _ in 0..n {
                    let start = coords.len();
                    coords.resize(start + d, 0.0);
                    coords[start + index - 1] = *scale;
                }
            }
            MeasureSpec::GaussianKl { eigenvalues } => {
                for k in 0..n {
                    let mut rng = rng::stream(seed, Domain::MeasureDraw, k as u64);
                    coords.extend(eigenvalues.iter().map(|l| {
                        let xi: f64 = rng.sample(StandardNormal);
                        l * xi
                    }));
                }
            }
            MeasureSpec::UniformBall { radius, .. } => {
                for k in 0..n {
                    let mut rng = rng::stream(seed, Domain::MeasureDraw, k as u64);
                    let g: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
                    let norm = dot(&g, &g).sqrt();
                    let u: f64 = rng.random();
                    let r = radius * u.powf(1.0 / d as f64);
                    if norm > 0.0 {
                        coords.extend(g.iter().map(|x| r * x / norm));
                    } else {
                        coords.extend(std::iter::repeat_n(0.0, d));
                    }
                }
            }
        }
        DiscreteMeasure::uniform_from_rows(d, coords)
    }
}

/// `E (Σ a_i ξ_i²)^m` with `a_i = λ_i²`, from the cumulants
/// `κ_r = 2^{r-1} (r-1)! Σ a_i^r` of a weighted chi-square.
fn gaussian_norm_sq_moment(eigenvalues: &[f64], m: usize) -> f64 {
    let a: Vec<f64> = eigenvalues.iter().map(|l| l * l).collect();
    let mut kappa = vec![0.0; m + 1];
    let mut fact = 1.0;
    for (r, k) in kappa.iter_mut().enumerate().skip(1) {
        if r > 1 {
            fact *= (r - 1) as f64;
        }
        let power_sum: f64 = a.iter().map(|x| x.powi(r as i32)).sum();
        *k = 2f64.powi(r as i32 - 1) * fact * power_sum;
    }
    let mut moments = vec![1.0; m + 1];
    for k in 1..=m {
        let mut acc = 0.0;
        let mut binom = 1.0;
        for j in 1..=k {
            if j > 1 {
                binom = binom * (k - j + 1) as f64 / (j - 1) as f64;
            }
            acc += binom * kappa[j] * moments[k - j];
        }
        moments[k] = acc;
    }
    moments[m]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cv(v: &[f64]) -> CoefficientVector {
        CoefficientVector::new(v.to_vec()).unwrap()
    }

    #[test]
    fn inner_examples() {
        let e1 = CoefficientVector::basis(2, 0).unwrap();
        let e2 = CoefficientVector::basis(2, 1).unwrap();
        assert_eq!(inner(&e1, &e1).unwrap(), 1.0);
        assert_eq!(inner(&e1, &e2).unwrap(), 0.0);
        assert_eq!(inner(&cv(&[3.0, 4.0]), &cv(&[1.0, 0.0])).unwrap(), 3.0);
        assert!(matches!(
            inner(&cv(&[1.0]), &cv(&[1.0, 2.0])),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn rejects_nonfinite_and_empty() {
        assert!(CoefficientVector::new(vec![]).is_err());
        assert!(CoefficientVector::new(vec![1.0, f64::NAN]).is_err());
        assert!(CoefficientVector::new(vec![f64::INFINITY]).is_err());
    }

    #[test]
    fn moment_examples() {
        let zero = DiscreteMeasure::dirac(CoefficientVector::zeros(3).unwrap());
        assert_eq!(moment_p(&zero, 1.0).unwrap(), 0.0);
        assert_eq!(moment_p(&zero, 3.5).unwrap(), 0.0);

        let mu = DiscreteMeasure::uniform(vec![cv(&[1.0, 0.0]), cv(&[0.0, 2.0])]).unwrap();
        assert_eq!(moment_p(&mu, 2.0).unwrap(), 2.5);
        assert!(moment_p(&mu, 0.5).is_err());

        for n in [1usize, 2, 7, 64, 200] {
            let x = CoefficientVector::basis(256, n - 1)
                .unwrap()
                .scaled((n as f64).cbrt())
                .unwrap();
            let m2 = moment_p(&DiscreteMeasure::dirac(x), 2.0).unwrap();
            let expected = (n as f64).powf(2.0 / 3.0);
            assert!((m2 - expected).abs() <= 1e-14 * expected, "n={n}: {m2} vs {expected}");
        }
    }

    #[test]
    fn weights_normalize_and_reject_bad_input() {
        let mu = DiscreteMeasure::weighted(vec![cv(&[0.0]), cv(&[1.0])], vec![1.0, 3.0]).unwrap();
        assert_eq!(mu.weight(0), 0.25);
        assert_eq!(mu.weight(1), 0.75);
        assert!(DiscreteMeasure::weighted(vec![cv(&[0.0])], vec![-1.0]).is_err());
        assert!(DiscreteMeasure::weighted(vec![cv(&[0.0])], vec![0.0]).is_err());
        assert!(DiscreteMeasure::uniform(vec![]).is_err());
        assert!(DiscreteMeasure::uniform(vec![cv(&[0.0]), cv(&[0.0, 1.0])]).is_err());
        let eq = DiscreteMeasure::weighted(vec![cv(&[0.0]), cv(&[1.0])], vec![2.0, 2.0]).unwrap();
        assert_eq!(eq.weights(), &Weights::Uniform(2));
    }

    #[test]
    fn point_mass_sample() {
        let spec = MeasureSpec::PointMass {
            point: vec![1.0, -2.0],
        };
        let mu = spec.sample(5, 3).unwrap();
        assert_eq!(mu.len(), 5);
        for (k, x) in mu.points().enumerate() {
            assert_eq!(x, &[1.0, -2.0]);
            assert_eq!(mu.weight(k), 0.2);
        }
    }

    #[test]
    fn gaussian_sample_moments_match_kl_expansion() {
        let n = 10_000;
        let lambdas = [1.0, 0.5, 0.25];
        let spec = MeasureSpec::GaussianKl {
            eigenvalues: lambdas.to_vec(),
        };
        let mu = spec.sample(n, 11).unwrap();
        let sqrt_n = (n as f64).sqrt();
        for (i, l) in lambdas.iter().enumerate() {
            let mean: f64 = mu.points().map(|x| x[i]).sum::<f64>() / n as f64;
            let second: f64 = mu.points().map(|x| x[i] * x[i]).sum::<f64>() / n as f64;
            assert!(mean.abs() <= 4.0 * l / sqrt_n, "coord {i} mean {mean}");
            assert!((second - l * l).abs() <= 5.0 * l * l / sqrt_n, "coord {i} second {second}");
        }

        let iso = MeasureSpec::GaussianKl {
            eigenvalues: vec![1.0; 3],
        };
        let mu = iso.sample(n, 12).unwrap();
        for i in 0..3 {
            let mean: f64 = mu.points().map(|x| x[i]).sum::<f64>() / n as f64;
            assert!(mean.abs() <= 4.0 / sqrt_n);
        }
    }

    #[test]
    fn sampling_is_deterministic() {
        let spec = MeasureSpec::UniformBall {
            dimension: 4,
            radius: 2.0,
        };
        assert_eq!(spec.sample(50, 9).unwrap(), spec.sample(50, 9).unwrap());
        assert_ne!(spec.sample(50, 9).unwrap(), spec.sample(50, 10).unwrap());
        let mu = spec.sample(200, 9).unwrap();
        assert!(mu.points().all(|x| dot(x, x).sqrt() <= 2.0 + 1e-12));
    }

    #[test]
    fn invalid_specs_rejected() {
        let bad = [
            MeasureSpec::GaussianKl {
                eigenvalues: vec![1.0, 0.0],
            },
            MeasureSpec::GaussianKl {
                eigenvalues: vec![],
            },
            MeasureSpec::UniformBall {
                dimension: 3,
                radius: -1.0,
            },
            MeasureSpec::ShiftedBasis {
                dimension: 3,
                index: 4,
                scale: 1.0,
            },
            MeasureSpec::ShiftedBasis {
                dimension: 3,
                index: 0,
                scale: 1.0,
            },
        ];
        for spec in bad {
            assert!(spec.sample(3, 0).is_err(), "{spec:?}");
        }
    }

    #[test]
    fn analytic_moments() {
        // E‖X‖⁴ for X ~ N(0, I_3 / 3): (Σa)² + 2Σa² = 1 + 2/3.
        let spec = MeasureSpec::GaussianKl {
            eigenvalues: vec![(1.0f64 / 3.0).sqrt(); 3],
        };
        assert!((spec.analytic_moment(4.0).unwrap() - 5.0 / 3.0).abs() < 1e-12);
        // χ²_8 / 8 raised to the 4th power: 8·10·12·14 / 8⁴.
        let spec = MeasureSpec::GaussianKl {
            eigenvalues: vec![(1.0f64 / 8.0).sqrt(); 8],
        };
        let m8 = spec.analytic_moment(8.0).unwrap();
        assert!((m8 - 13440.0 / 4096.0).abs() < 1e-12, "{m8}");
        assert!((spec.analytic_moment(2.0).unwrap() - 1.0).abs() < 1e-12);

        let ball = MeasureSpec::UniformBall {
            dimension: 3,
            radius: 2.0,
        };
        assert!((ball.analytic_moment(2.0).unwrap() - 4.0 * 3.0 / 5.0).abs() < 1e-12);
        let sb = MeasureSpec::ShiftedBasis {
            dimension: 5,
            index: 2,
            scale: -3.0,
        };
        assert_eq!(sb.analytic_moment(2.0).unwrap(), 9.0);
    }

    #[test]
    fn analytic_moment_matches_sample_moment() {
        let spec = MeasureSpec::GaussianKl {
            eigenvalues: vec![1.0, 0.7, 0.3, 0.1],
        };
        let mu = spec.sample(40_000, 5).unwrap();
        let empirical = moment_p(&mu, 4.0).unwrap();
        let exact = spec.analytic_moment(4.0).unwrap();
        assert!((empirical - exact).abs() < 0.05 * exact, "{empirical} vs {exact}");
    }
}
