//! Maximal weights from the unstable-manifold mass partition.
//!
//! For a direction `A = iv` with eigenvalues `c₀ < … < c_r`, an atom lies in
//! the unstable manifold `Wᵢᵘ` when its highest nonzero spectral component is
//! in `Vᵢ`. The maximal weight is then `λ_ν(e(−v)) = Σ cᵢ·ν(Wᵢᵘ)`.

use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;


use crate::error::{Error, Result};
use crate::geometry::{flow_limit, ProjectivePoint, SpectralDirection};
use crate::linalg::{self, identity, real, CMatrix};
use crate::measure::AtomicMeasure;
use crate::stability::Subspace;
use crate::{DEFAULT_COMPONENT_TOL, SPAN_RANK_TOL};

/// Mass of one unstable manifold `Wᵢᵘ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StratumMass {
    pub critical_value: f64,
    pub mass: f64,
}

#[derive(Debug, Clone)]
pub struct WeightReport {
    pub direction: SpectralDirection,
    pub strata: Vec<StratumMass>,
    /// `λ_ν(e(−v))`; positive for every direction iff `ν` is stable.
    pub lambda: f64,
}

/// Masses `ν(Wᵢᵘ)` for each critical value, in ascending order.
pub fn unstable_partition(nu: &AtomicMeasure, d: &SpectralDirection) -> Result<Vec<StratumMass>> {
    unstable_partition_with_tol(nu, d, DEFAULT_COMPONENT_TOL)
}

pub fn unstable_partition_with_tol(
    nu: &AtomicMeasure,
    d: &SpectralDirection,
    component_tol: f64,
) -> Result<Vec<StratumMass>> {
    if d.dim() != nu.dim() {
        return Err(Error::DimensionMismatch { expected: nu.dim(), found: d.dim() });
    }
    let mut masses = alloc::vec![0.0; d.eigenvalues().len()];
    for atom in nu.atoms() {
        let stratum = flow_limit(&atom.point, d, component_tol)?.stratum;
        masses[stratum] += atom.weight;
    }
    Ok(d
        .eigenvalues()
        .iter()
        .zip(masses)
        .map(|(&critical_value, mass)| StratumMass { critical_value, mass })
        .collect())
}

/// `λ_ν(e(−v)) = Σ cᵢ·ν(Wᵢᵘ)`.
pub fn maximal_weight(nu: &AtomicMeasure, d: &SpectralDirection) -> Result<WeightReport> {
    maximal_weight_with_tol(nu, d, DEFAULT_COMPONENT_TOL)
}

pub fn maximal_weight_with_tol(
    nu: &AtomicMeasure,
    d: &SpectralDirection,
    component_tol: f64,
) -> Result<WeightReport> {
    let strata = unstable_partition_with_tol(nu, d, component_tol)?;
    let lambda = strata.iter().map(|s| s.critical_value * s.mass).sum();
    Ok(WeightReport { direction: d.clone(), strata, lambda })
}

/// `∫ μ^v(exp(t_max·A)·x) dν(x)`, the slope of `t ↦ Ψ^M(ν, exp(tA))` at
/// `t_max`; it increases to the maximal weight as `t_max → ∞`.
///
/// The evolved vector is rescaled by its dominant exponential before
/// normalizing so that large `t_max` cannot overflow.
pub fn lambda_via_flow(nu: &AtomicMeasure, d: &SpectralDirection, t_max: f64) -> Result<f64> {
    if !(t_max > 0.0) || !t_max.is_finite() {
        return Err(Error::InvalidParameter("t_max must be positive"));
    }
    if d.dim() != nu.dim() {
        return Err(Error::DimensionMismatch { expected: nu.dim(), found: d.dim() });
    }
    let a = d.matrix();
    let mut total = 0.0;
    for atom in nu.atoms() {
        let z = atom.point.coeffs();
        let parts: Vec<_> = d.projectors().iter().map(|p| p * z).collect();
        let exponents: Vec<f64> = parts
            .iter()
            .zip(d.eigenvalues())
            .map(|(part, c)| {
                let norm = part.norm();
                if norm > 0.0 {
                    t_max * c + norm.ln()
                } else {
                    f64::NEG_INFINITY
                }
            })
            .collect();
        let top = exponents.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut evolved = z * real(0.0);
        for ((part, c), e) in parts.iter().zip(d.eigenvalues()).zip(&exponents) {
            if e.is_finite() {
                evolved += part * real((t_max * c - top).exp());
            }
        }
        let norm_sqr = evolved.norm_squared();
        if !(norm_sqr > 0.0) {
            return Err(Error::NumericalDegeneracy);
        }
        total += atom.weight * linalg::inner(&evolved, &(a * &evolved)).re / norm_sqr;
    }
    Ok(total)
}

/// Direction acting as `d − n` on the span `L` of `points` (of projective
/// dimension `d`) and as `d + 1` on its orthogonal complement.
///
/// Its maximal weight is `(d+1) − (n+1)·ν(L)` whenever no atom sits
/// ambiguously close to `L`.
pub fn destabilizing_direction(points: &[ProjectivePoint], n: usize) -> Result<SpectralDirection> {
    if points.is_empty() {
        return Err(Error::EmptySpan);
    }
    if let Some(p) = points.iter().find(|p| p.dim() != n) {
        return Err(Error::DimensionMismatch { expected: n, found: p.dim() });
    }
    let vectors: Vec<_> = points.iter().map(|p| p.coeffs().clone()).collect();
    let basis = linalg::orthonormal_basis(&vectors, SPAN_RANK_TOL);
    direction_for_basis(&basis, n)
}

/// [`destabilizing_direction`] for a classifier subspace.
pub fn destabilizing_direction_for(subspace: &Subspace) -> Result<SpectralDirection> {
    direction_for_basis(subspace.basis(), subspace.ambient_dim())
}

fn direction_for_basis(basis: &CMatrix, n: usize) -> Result<SpectralDirection> {
    let rank = basis.ncols();
    if rank == 0 {
        return Err(Error::EmptySpan);
    }
    if rank > n {
        return Err(Error::SpanIsFull);
    }
    let d = (rank - 1) as f64;
    let (low, high) = destabilizing_values(rank - 1, n);
    let p = linalg::projector(basis);
    let a = &p * real(low) + (identity(n + 1) - &p) * real(high);
    debug_assert!((low * (d + 1.0) + high * (n as f64 - d)).abs() < 1e-12);
    SpectralDirection::new(a)
}

/// Eigenvalues `(d − n, d + 1)` of the destabilizing direction of a
/// `d`-dimensional subspace of `ℙⁿ`.
pub fn destabilizing_values(d: usize, n: usize) -> (f64, f64) {
    (d as f64 - n as f64, d as f64 + 1.0)
}

/// Closed form `c₁ − (c₁ − c₀)·mass` of the destabilizing weight.
pub fn destabilizing_weight(d: usize, n: usize, mass: f64) -> f64 {
    let (low, high) = destabilizing_values(d, n);
    high - (high - low) * mass
}
