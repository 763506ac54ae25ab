//! Fine quantile discretizations of the projections `P_θ#μ` of a [`MeasureSpec`].
//!
//! A continuous `μ` is not finitely representable, but each of its projections
//! is a known law on the line: `N(0, Σ λ_i² θ_i²)` for `gaussian-kl`, a
//! rescaled symmetric Beta law for `uniform-ball`, and a point for the Dirac
//! kinds. The reference stores one sorted standard grid and rescales it per
//! direction.

use std::sync::Arc;

use statrs::distribution::{Beta, ContinuousCDF};

use crate::error::{check_dims, Result};
use crate::hilbert::{dot, MeasureSpec};
use crate::ot1d::{wpp_against_scaled_grid, DistributionSpec1D, Projected1DMeasure};

/// Default number of atoms in a reference discretization.
pub const DEFAULT_REFERENCE_ATOMS: usize = 100_000;

#[derive(Debug, Clone)]
enum Kind {
    /// Projection is `sqrt(Σ λ_i² θ_i²) · Z`.
    Gaussian { eigen_sq: Vec<f64>, grid: Arc<Vec<f64>> },
    /// Projection law does not depend on `θ`.
    Rotation { grid: Arc<Vec<f64>> },
    /// Projection is the point `⟨θ, x⟩`.
    Point { x: Vec<f64> },
}

#[derive(Debug, Clone)]
pub struct ProjectedReference {
    dim: usize,
    atoms: usize,
    kind: Kind,
}

impl ProjectedReference {
    pub fn new(spec: &MeasureSpec, atoms: usize) -> Result<Self> {
        spec.validate()?;
        let dim = spec.dim();
        let kind = match spec {
            MeasureSpec::GaussianKl { eigenvalues } => {
                let z = DistributionSpec1D::Gaussian { mean: 0.0, sd: 1.0 }.quantile_grid(atoms)?;
                Kind::Gaussian {
                    eigen_sq: eigenvalues.iter().map(|l| l * l).collect(),
                    grid: Arc::new(z.values().to_vec()),
                }
            }
            MeasureSpec::UniformBall { dimension, radius } => {
                // ⟨θ, X⟩ = r (2B − 1), B ~ Beta((d+1)/2, (d+1)/2).
                let shape = (*dimension as f64 + 1.0) / 2.0;
                let beta = Beta::new(shape, shape).expect("positive shape");
                let n = atoms as f64;
                let grid = (0..atoms)
                    .map(|i| radius * (2.0 * beta.inverse_cdf((i as f64 + 0.5) / n) - 1.0))
                    .collect();
                Kind::Rotation {
                    grid: Arc::new(grid),
                }
            }
            MeasureSpec::PointMass { point } => Kind::Point { x: point.clone() },
            MeasureSpec::ShiftedBasis {
                dimension,
                index,
                scale,
            } => {
                let mut x = vec![0.0; *dimension];
                x[index - 1] = *scale;
                Kind::Point { x }
            }
        };
        Ok(Self { dim, atoms, kind })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn atoms(&self) -> usize {
        match self.kind {
            Kind::Point { .. } => 1,
            _ => self.atoms,
        }
    }

    /// `(scale, shift, grid)` with `P_θ#μ ≈ uniform(scale · grid + shift)`.
    fn affine(&self, theta: &[f64]) -> (f64, f64, &[f64]) {
        const ZERO: [f64; 1] = [0.0];
        match &self.kind {
            Kind::Gaussian { eigen_sq, grid } => {
                let var: f64 = eigen_sq.iter().zip(theta).map(|(a, t)| a * t * t).sum();
                (var.sqrt(), 0.0, grid)
            }
            Kind::Rotation { grid } => (1.0, 0.0, grid),
            Kind::Point { x } => (0.0, dot(x, theta), &ZERO),
        }
    }

    /// The discretized projection onto `theta`.
    pub fn project(&self, theta: &[f64]) -> Result<Projected1DMeasure> {
        check_dims(self.dim, theta.len())?;
        let (scale, shift, grid) = self.affine(theta);
        Projected1DMeasure::new(
            grid.iter().map(|g| scale * g + shift).collect(),
            crate::hilbert::Weights::Uniform(grid.len()),
        )
    }

    /// `W_p^p(a, P_θ#μ)` against the discretization.
    pub fn wpp_to(&self, a: &Projected1DMeasure, theta: &[f64], p: f64) -> f64 {
        let (scale, shift, grid) = self.affine(theta);
        wpp_against_scaled_grid(a, grid, scale, shift, p)
    }
}
