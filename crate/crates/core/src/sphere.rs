//! Measures on the round sphere `S² ⊂ ℝ³` and conformal centering.
//!
//! The sphere is identified with `ℙ¹` by
//! `(sinθ cosφ, sinθ sinφ, cosθ) ↦ [cos(θ/2) : e^{iφ} sin(θ/2)]`. Under this
//! identification the Euclidean center of mass is the Bloch vector of the
//! measure momentum, so balancing on `ℙ¹` is the same as finding a Möbius
//! transformation that centres the measure.

use alloc::vec::Vec;

use nalgebra::Vector3;

use crate::balance::{balance, BalanceMethod, BalanceOptions, BalanceResult, BalanceVerdict};
use crate::error::{Error, Result};
use crate::geometry::{act_point, GroupElement, MomentumMatrix, ProjectivePoint};
use crate::linalg::{c, CVector};
use crate::measure::{momentum, AtomicMeasure};
use crate::stability::{classify, StabilityKind};
use crate::DEFAULT_TOL_EQ;

const UNIT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct SphereMeasure {
    atoms: Vec<(Vector3<f64>, f64)>,
}

impl SphereMeasure {
    /// Checks that every point is a unit vector (within `1e-12`) and that the
    /// weights are positive and sum to one within `1e-6`. Points are
    /// renormalized exactly and weights rescaled to sum to one.
    pub fn new(atoms: Vec<(Vector3<f64>, f64)>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::EmptyMeasure);
        }
        let total: f64 = atoms.iter().map(|a| a.1).sum();
        if atoms.iter().any(|a| !(a.1 > 0.0) || !a.1.is_finite()) || (total - 1.0).abs() > 1e-6 {
            return Err(Error::InvalidWeights);
        }
        let mut out = Vec::with_capacity(atoms.len());
        for (x, w) in atoms {
            let norm = x.norm();
            if !norm.is_finite() || (norm - 1.0).abs() > UNIT_TOL {
                return Err(Error::InvalidParameter("sphere points must be unit vectors"));
            }
            out.push((x / norm, w / total));
        }
        Ok(SphereMeasure { atoms: out })
    }

    pub fn atoms(&self) -> &[(Vector3<f64>, f64)] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    /// Image under a linear map that preserves the sphere, e.g. a rotation.
    pub fn transformed(&self, r: &nalgebra::Matrix3<f64>) -> Result<Self> {
        SphereMeasure::new(self.atoms.iter().map(|(x, w)| (r * x, *w)).collect())
    }
}

/// `S² → ℙ¹`. Uses the chart away from the south pole when `z > −½` and
/// the one away from the north pole otherwise.
pub fn sphere_to_point(x: &Vector3<f64>) -> ProjectivePoint {
    let coeffs = if x.z > -0.5 {
        CVector::from_vec(alloc::vec![c(1.0 + x.z, 0.0), c(x.x, x.y)])
    } else {
        CVector::from_vec(alloc::vec![c(x.x, -x.y), c(1.0 - x.z, 0.0)])
    };
    ProjectivePoint::new(coeffs).expect("charts never vanish on the sphere")
}

/// `ℙ¹ → S²`, the inverse of [`sphere_to_point`].
pub fn point_to_sphere(p: &ProjectivePoint) -> Vector3<f64> {
    let z = p.coeffs();
    let cross = z[0] * z[1].conj();
    Vector3::new(2.0 * cross.re, -2.0 * cross.im, z[0].norm_sqr() - z[1].norm_sqr())
}

/// `(2 Re m₀₁, −2 Im m₀₁, m₀₀ − m₁₁)` for a traceless Hermitian 2×2 `m`.
pub fn bloch(m: &MomentumMatrix) -> Result<Vector3<f64>> {
    let a = m.matrix();
    if a.nrows() != 2 {
        return Err(Error::DimensionMismatch { expected: 2, found: a.nrows() });
    }
    Ok(Vector3::new(2.0 * a[(0, 1)].re, -2.0 * a[(0, 1)].im, a[(0, 0)].re - a[(1, 1)].re))
}

pub fn to_projective(sm: &SphereMeasure) -> AtomicMeasure {
    AtomicMeasure::new(1, sm.atoms.iter().map(|(x, w)| (sphere_to_point(x), *w)).collect())
        .expect("sphere measures map to valid measures")
}

pub fn center_of_mass(sm: &SphereMeasure) -> Vector3<f64> {
    sm.atoms.iter().fold(Vector3::zeros(), |acc, (x, w)| acc + x * *w)
}

#[derive(Debug, Clone)]
pub struct HerschResult {
    /// The Möbius transformation, as an element of `SL(2, ℂ)`.
    pub mobius: GroupElement,
    pub result: BalanceResult,
    /// Center of mass of the transported sphere measure, recomputed from
    /// the moved atoms.
    pub final_com: Vector3<f64>,
    pub kind: StabilityKind,
}

/// Finds a Möbius transformation centering `sm`. Unstable measures (an
/// atom of mass at least ½, or mass exactly ½ with nothing opposite)
/// report the heavy atom as the certificate.
pub fn hersch_balance(sm: &SphereMeasure, tol: f64, max_iter: usize) -> Result<HerschResult> {
    let nu = to_projective(sm);
    let verdict = classify(&nu, DEFAULT_TOL_EQ)?;
    let options = BalanceOptions { method: BalanceMethod::FixedPoint, tol, max_iter, start: None };
    let mut result = balance(&nu, None, &options)?;
    if verdict.kind == StabilityKind::Unstable {
        if let Some(cert) = verdict.certificate.clone() {
            result.verdict = BalanceVerdict::DivergedWithCertificate(cert);
        }
    }
    let mut final_com = Vector3::zeros();
    for atom in nu.atoms() {
        if let Ok(q) = act_point(&result.g, &atom.point) {
            final_com += point_to_sphere(&q) * atom.weight;
        }
    }
    Ok(HerschResult { mobius: result.g.clone(), result, final_com, kind: verdict.kind })
}

/// The center of mass of `sm` recovered as `bloch(𝔉(ν))` of its `ℙ¹`
/// image.
pub fn center_of_mass_from_momentum(sm: &SphereMeasure) -> Vector3<f64> {
    bloch(&momentum(&to_projective(sm))).expect("ℙ¹ momenta are 2×2")
}
