//! Projective points, the Fubini–Study momentum map, group elements and the
//! spectral decomposition of directions.

use alloc::vec::Vec;


use crate::error::{Error, Result};
use crate::linalg::{
    self, frobenius, hermitian_defect, hermitian_eigen, hermitian_part, identity, real, CMatrix,
    CVector, C64,
};
use crate::{DEFAULT_CLUSTER_TOL, DEFAULT_COMPONENT_TOL};

/// Coordinates with modulus at or below this are skipped when choosing the
/// phase representative.
const PHASE_EPS: f64 = 1e-14;

/// Deviation from unit norm that is left untouched at construction, so that
/// normalizing an already normalized vector is the identity.
const NORM_SLACK: f64 = 1e-15;

/// A point of `ℙⁿ`, stored as a unit vector whose first non-negligible
/// coordinate is real and positive.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectivePoint {
    coeffs: CVector,
}

impl ProjectivePoint {
    /// Normalizes `coeffs` and fixes the phase representative.
    pub fn new(coeffs: CVector) -> Result<Self> {
        if coeffs.is_empty() || coeffs.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::ZeroVector);
        }
        let norm = coeffs.norm();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::ZeroVector);
        }
        let mut z = coeffs;
        if (norm - 1.0).abs() > NORM_SLACK {
            z /= real(norm);
        }
        if let Some(lead) = z.iter().position(|w| w.norm() > PHASE_EPS) {
            let w = z[lead];
            if w.im != 0.0 || w.re < 0.0 {
                let modulus = w.norm();
                z *= w.conj() / real(modulus);
                z[lead] = real(modulus);
            }
        }
        Ok(ProjectivePoint { coeffs: z })
    }

    /// Builds a point from real and imaginary parts.
    pub fn from_parts(parts: &[(f64, f64)]) -> Result<Self> {
        Self::new(CVector::from_iterator(
            parts.len(),
            parts.iter().map(|&(re, im)| C64::new(re, im)),
        ))
    }

    /// Builds a point from real homogeneous coordinates.
    pub fn from_real(coords: &[f64]) -> Result<Self> {
        Self::new(CVector::from_iterator(coords.len(), coords.iter().map(|&x| real(x))))
    }

    /// The `i`-th standard basis point of `ℙⁿ`.
    pub fn basis(n: usize, i: usize) -> Self {
        let mut z = CVector::zeros(n + 1);
        z[i] = real(1.0);
        ProjectivePoint { coeffs: z }
    }

    /// Unit-norm representative.
    pub fn coeffs(&self) -> &CVector {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> CVector {
        self.coeffs
    }

    /// Projective dimension `n` (the vector has `n + 1` entries).
    pub fn dim(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// `|⟨p, q⟩|` for the unit representatives.
    pub fn overlap(&self, other: &ProjectivePoint) -> f64 {
        linalg::inner(&self.coeffs, &other.coeffs).norm()
    }

    /// Fubini–Study distance (angle in `[0, π/2]`).
    pub fn distance(&self, other: &ProjectivePoint) -> f64 {
        linalg::fs_angle(&self.coeffs, &other.coeffs)
    }

    /// Phase-invariant equality: `|⟨p, q⟩| ≥ 1 − tol`.
    pub fn approx_eq(&self, other: &ProjectivePoint, tol: f64) -> bool {
        self.dim() == other.dim() && self.overlap(other) >= 1.0 - tol
    }

    /// Rank-one orthogonal projector `z·z*`.
    pub fn projector(&self) -> CMatrix {
        &self.coeffs * self.coeffs.adjoint()
    }
}

/// A traceless Hermitian matrix representing a momentum value.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentumMatrix {
    m: CMatrix,
}

impl MomentumMatrix {
    /// Projects an arbitrary square matrix onto the traceless Hermitian
    /// matrices.
    pub fn from_matrix(m: &CMatrix) -> Self {
        let mut h = hermitian_part(m);
        let dim = h.nrows();
        if dim > 0 {
            let shift = linalg::trace(&h).re / dim as f64;
            for i in 0..dim {
                h[(i, i)] -= real(shift);
            }
        }
        MomentumMatrix { m: h }
    }

    pub fn zero(n: usize) -> Self {
        MomentumMatrix { m: CMatrix::zeros(n + 1, n + 1) }
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.m
    }

    pub fn into_matrix(self) -> CMatrix {
        self.m
    }

    pub fn frobenius_norm(&self) -> f64 {
        frobenius(&self.m)
    }

    /// The duality pairing with a direction: `tr(m·A)`.
    pub fn pair(&self, a: &CMatrix) -> f64 {
        linalg::trace_pairing(&self.m, a)
    }

    /// `k·m·k*`.
    pub fn conjugated(&self, k: &CMatrix) -> Self {
        MomentumMatrix { m: hermitian_part(&(k * &self.m * k.adjoint())) }
    }
}

impl core::ops::Add for MomentumMatrix {
    type Output = MomentumMatrix;

    fn add(self, rhs: MomentumMatrix) -> MomentumMatrix {
        MomentumMatrix { m: self.m + rhs.m }
    }
}

/// A nonzero traceless Hermitian matrix `A = iv` together with its ordered,
/// clustered eigendecomposition `A = Σ cᵢ Pᵢ`, `c₀ < … < c_r`.
#[derive(Debug, Clone)]
pub struct SpectralDirection {
    a: CMatrix,
    eigenvalues: Vec<f64>,
    bases: Vec<CMatrix>,
    projectors: Vec<CMatrix>,
}

impl SpectralDirection {
    /// Decomposes `a` with the default clustering tolerance.
    pub fn new(a: CMatrix) -> Result<Self> {
        spectral_decompose(&a, DEFAULT_CLUSTER_TOL)
    }

    /// Diagonal direction `diag(values)`; `values` must sum to zero.
    pub fn diagonal(values: &[f64]) -> Result<Self> {
        let d = CVector::from_iterator(values.len(), values.iter().map(|&x| real(x)));
        Self::new(CMatrix::from_diagonal(&d))
    }

    /// The Hermitian matrix `A`.
    pub fn matrix(&self) -> &CMatrix {
        &self.a
    }

    /// Distinct eigenvalues `c₀ < … < c_r`.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Orthogonal projectors onto the eigenspaces `V₀, …, V_r`.
    pub fn projectors(&self) -> &[CMatrix] {
        &self.projectors
    }

    /// Orthonormal eigenvector bases (columns) of `V₀, …, V_r`.
    pub fn bases(&self) -> &[CMatrix] {
        &self.bases
    }

    pub fn multiplicities(&self) -> Vec<usize> {
        self.bases.iter().map(|b| b.ncols()).collect()
    }

    /// Projective dimension of the ambient space.
    pub fn dim(&self) -> usize {
        self.a.nrows() - 1
    }

    /// Index of the top stratum `r`.
    pub fn top(&self) -> usize {
        self.eigenvalues.len() - 1
    }

    /// `s·A` for `s > 0`, reusing the eigenspaces.
    pub fn scaled(&self, s: f64) -> Result<Self> {
        if !(s > 0.0) || !s.is_finite() {
            return Err(Error::InvalidParameter("direction scale must be positive"));
        }
        Ok(SpectralDirection {
            a: &self.a * real(s),
            eigenvalues: self.eigenvalues.iter().map(|c| c * s).collect(),
            bases: self.bases.clone(),
            projectors: self.projectors.clone(),
        })
    }

    /// `k·A·k*` for unitary `k`.
    pub fn conjugated(&self, k: &CMatrix) -> Self {
        let bases: Vec<CMatrix> = self.bases.iter().map(|b| k * b).collect();
        SpectralDirection {
            a: hermitian_part(&(k * &self.a * k.adjoint())),
            eigenvalues: self.eigenvalues.clone(),
            projectors: bases.iter().map(linalg::projector).collect(),
            bases,
        }
    }
}

impl AsRef<CMatrix> for SpectralDirection {
    fn as_ref(&self) -> &CMatrix {
        &self.a
    }
}

impl core::borrow::Borrow<CMatrix> for SpectralDirection {
    fn borrow(&self) -> &CMatrix {
        &self.a
    }
}

/// An element of `SL(n+1, ℂ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupElement {
    g: CMatrix,
}

impl GroupElement {
    /// Rescales an invertible matrix by `det^(−1/(n+1))`.
    pub fn new(g: CMatrix) -> Result<Self> {
        if !g.is_square() || g.nrows() == 0 {
            return Err(Error::DimensionMismatch { expected: g.nrows(), found: g.ncols() });
        }
        let dim = g.nrows();
        let det = g.clone().determinant();
        if !(det.norm() > 1e-300) || !det.re.is_finite() || !det.im.is_finite() {
            return Err(Error::SingularGroupElement);
        }
        if (det - real(1.0)).norm() <= 1e-15 {
            return Ok(GroupElement { g });
        }
        let root = linalg::principal_root(det, dim);
        Ok(GroupElement { g: g / root })
    }

    pub fn identity(n: usize) -> Self {
        GroupElement { g: identity(n + 1) }
    }

    /// `exp(t·A)` for traceless Hermitian `A`.
    pub fn exp_hermitian(a: &CMatrix, t: f64) -> Result<Self> {
        Self::new(linalg::expm_hermitian(a, t))
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.g
    }

    pub fn into_matrix(self) -> CMatrix {
        self.g
    }

    pub fn dim(&self) -> usize {
        self.g.nrows() - 1
    }

    /// `self · other`.
    pub fn compose(&self, other: &GroupElement) -> Result<GroupElement> {
        GroupElement::new(&self.g * &other.g)
    }

    pub fn inverse(&self) -> Result<GroupElement> {
        let inv = self.g.clone().try_inverse().ok_or(Error::SingularGroupElement)?;
        GroupElement::new(inv)
    }

    /// `g*·g`, the positive Hermitian matrix determining the coset `K·g`.
    pub fn gram(&self) -> CMatrix {
        hermitian_part(&(self.g.adjoint() * &self.g))
    }
}

/// Fubini–Study momentum `z·z* − Id/(n+1)` of a point.
pub fn momentum_of_point(p: &ProjectivePoint) -> MomentumMatrix {
    let mut m = p.projector();
    let dim = m.nrows();
    let shift = 1.0 / dim as f64;
    for i in 0..dim {
        m[(i, i)] -= real(shift);
    }
    MomentumMatrix { m: hermitian_part(&m) }
}

/// The component `μ^v(p) = z*·A·z`.
pub fn mu_component(p: &ProjectivePoint, d: &SpectralDirection) -> f64 {
    let z = p.coeffs();
    linalg::inner(z, &(d.matrix() * z)).re
}

/// Image `[g·z]` of a point.
pub fn act_point(g: &GroupElement, p: &ProjectivePoint) -> Result<ProjectivePoint> {
    if g.dim() != p.dim() {
        return Err(Error::DimensionMismatch { expected: g.dim(), found: p.dim() });
    }
    let image = g.matrix() * p.coeffs();
    let norm = image.norm();
    if !(norm >= 1e-150) || !norm.is_finite() {
        return Err(Error::NumericalDegeneracy);
    }
    ProjectivePoint::new(image / real(norm))
}

/// Clustered spectral decomposition of a traceless Hermitian matrix.
///
/// Consecutive eigenvalues whose gap is at most `cluster_tol·‖a‖_F` are
/// merged; the merged critical value is their mean.
pub fn spectral_decompose(a: &CMatrix, cluster_tol: f64) -> Result<SpectralDirection> {
    if !a.is_square() || a.nrows() < 2 {
        return Err(Error::DimensionMismatch { expected: 2, found: a.nrows() });
    }
    if !(cluster_tol >= 0.0) {
        return Err(Error::InvalidParameter("cluster_tol must be nonnegative"));
    }
    let norm = frobenius(a);
    if !norm.is_finite() {
        return Err(Error::NotHermitian);
    }
    if norm <= 1e-14 {
        return Err(Error::ZeroDirection);
    }
    if hermitian_defect(a) > 1e-12 * norm.max(1.0) {
        return Err(Error::NotHermitian);
    }
    if linalg::trace(a).norm() > 1e-12 * norm.max(1.0) {
        return Err(Error::NotTraceless);
    }
    let a = hermitian_part(a);
    let dim = a.nrows();
    let (values, vectors) = hermitian_eigen(&a);

    let gap = cluster_tol * norm;
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for i in 0..dim {
        match groups.last_mut() {
            Some(group) if values[i] - values[*group.last().unwrap()] <= gap => group.push(i),
            _ => groups.push(alloc::vec![i]),
        }
    }

    let mut eigenvalues = Vec::with_capacity(groups.len());
    let mut bases = Vec::with_capacity(groups.len());
    let mut projectors = Vec::with_capacity(groups.len());
    for group in &groups {
        let mean = group.iter().map(|&i| values[i]).sum::<f64>() / group.len() as f64;
        let mut basis = CMatrix::zeros(dim, group.len());
        for (col, &i) in group.iter().enumerate() {
            basis.set_column(col, &vectors.column(i));
        }
        eigenvalues.push(mean);
        projectors.push(linalg::projector(&basis));
        bases.push(basis);
    }
    Ok(SpectralDirection { a, eigenvalues, bases, projectors })
}

/// Limit of a point under the flow `t ↦ [exp(tA)·z]` as `t → +∞`.
#[derive(Debug, Clone)]
pub struct FlowLimit {
    /// Index `i` of the unstable manifold `Wᵢᵘ` containing the point.
    pub stratum: usize,
    /// The limit point `[Pᵢ z]`, which lies in the critical set `ℙ(Vᵢ)`.
    pub limit: ProjectivePoint,
}

/// Closed-form flow limit: the highest eigenspace in which `p` has a
/// component above `component_tol`.
pub fn flow_limit(
    p: &ProjectivePoint,
    d: &SpectralDirection,
    component_tol: f64,
) -> Result<FlowLimit> {
    if !(component_tol > 0.0 && component_tol < 1.0) {
        return Err(Error::InvalidParameter("component_tol must lie in (0, 1)"));
    }
    if p.dim() != d.dim() {
        return Err(Error::DimensionMismatch { expected: d.dim(), found: p.dim() });
    }
    let z = p.coeffs();
    let components: Vec<CVector> = d.bases().iter().map(|b| b * (b.adjoint() * z)).collect();
    let stratum = components
        .iter()
        .rposition(|c| c.norm() > component_tol)
        .unwrap_or_else(|| {
            // unreachable for unit z and a tolerance below 1/√(n+1); take
            // the largest component rather than fail
            let mut best = 0;
            for (i, c) in components.iter().enumerate() {
                if c.norm() > components[best].norm() {
                    best = i;
                }
            }
            best
        });
    let limit = ProjectivePoint::new(components[stratum].clone())?;
    Ok(FlowLimit { stratum, limit })
}

/// [`flow_limit`] with the default component tolerance.
pub fn flow_limit_default(p: &ProjectivePoint, d: &SpectralDirection) -> Result<FlowLimit> {
    flow_limit(p, d, DEFAULT_COMPONENT_TOL)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::c;
    use crate::random;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn close(a: &CMatrix, b: &CMatrix, tol: f64) -> bool {
        frobenius(&(a - b)) <= tol
    }

    fn mat(rows: &[&[f64]]) -> CMatrix {
        CMatrix::from_fn(rows.len(), rows.len(), |i, j| real(rows[i][j]))
    }

    #[test]
    fn construction_normalizes_and_fixes_phase() {
        let p = ProjectivePoint::from_parts(&[(0.0, 3.0), (4.0, 0.0)]).unwrap();
        assert!((p.coeffs().norm() - 1.0).abs() < 1e-14);
        assert_eq!(p.coeffs()[0].im, 0.0);
        assert!(p.coeffs()[0].re > 0.0);
        assert!((p.coeffs()[1] - c(0.0, -0.8)).norm() < 1e-15);
        // idempotent
        let q = ProjectivePoint::new(p.coeffs().clone()).unwrap();
        assert_eq!(p, q);
    }

    #[test]
    fn zero_vector_is_rejected() {
        assert_eq!(ProjectivePoint::from_real(&[0.0, 0.0]), Err(Error::ZeroVector));
        assert_eq!(ProjectivePoint::from_real(&[f64::NAN, 1.0]), Err(Error::ZeroVector));
    }

    #[test]
    fn momentum_examples() {
        let p = ProjectivePoint::from_real(&[1.0, 0.0]).unwrap();
        assert!(close(momentum_of_point(&p).matrix(), &mat(&[&[0.5, 0.0], &[0.0, -0.5]]), 1e-15));
        let q = ProjectivePoint::from_real(&[1.0, 1.0]).unwrap();
        assert!(close(momentum_of_point(&q).matrix(), &mat(&[&[0.0, 0.5], &[0.5, 0.0]]), 1e-15));
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for n in 1..6 {
            let r = random::point(n, &mut rng);
            assert!(linalg::trace(momentum_of_point(&r).matrix()).norm() < 1e-15);
        }
    }

    #[test]
    fn mu_component_examples() {
        let a = SpectralDirection::diagonal(&[1.0, -1.0]).unwrap();
        let e0 = ProjectivePoint::from_real(&[1.0, 0.0]).unwrap();
        let diag = ProjectivePoint::from_real(&[1.0, 1.0]).unwrap();
        let p12 = ProjectivePoint::from_real(&[1.0, 2.0]).unwrap();
        assert!((mu_component(&e0, &a) - 1.0).abs() < 1e-15);
        assert!(mu_component(&diag, &a).abs() < 1e-15);
        assert!((mu_component(&p12, &a) + 0.6).abs() < 1e-15);
    }

    #[test]
    fn act_point_examples() {
        let p = ProjectivePoint::from_real(&[1.0, 1.0]).unwrap();
        let id = GroupElement::identity(1);
        assert_eq!(act_point(&id, &p).unwrap(), p);
        let g = GroupElement::new(mat(&[&[2.0, 0.0], &[0.0, 0.5]])).unwrap();
        let image = act_point(&g, &p).unwrap();
        let expected = ProjectivePoint::from_real(&[4.0, 1.0]).unwrap();
        assert!(image.approx_eq(&expected, 1e-14));
    }

    #[test]
    fn unitary_action_preserves_overlaps() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for n in 1..5 {
            let k = GroupElement::new(random::unitary(n + 1, &mut rng)).unwrap();
            let p = random::point(n, &mut rng);
            let q = random::point(n, &mut rng);
            let before = p.overlap(&q);
            let after = act_point(&k, &p).unwrap().overlap(&act_point(&k, &q).unwrap());
            assert!((before - after).abs() < 1e-13);
        }
    }

    #[test]
    fn group_element_has_unit_determinant() {
        let g = GroupElement::new(mat(&[&[3.0, 1.0], &[0.0, 5.0]])).unwrap();
        assert!((g.matrix().clone().determinant() - real(1.0)).norm() < 1e-12);
        let neg = GroupElement::new(mat(&[&[-1.0, 0.0, 0.0], &[0.0, 2.0, 0.0], &[0.0, 0.0, 1.0]]))
            .unwrap();
        assert!((neg.matrix().clone().determinant() - real(1.0)).norm() < 1e-12);
        assert_eq!(
            GroupElement::new(mat(&[&[1.0, 2.0], &[2.0, 4.0]])),
            Err(Error::SingularGroupElement)
        );
    }

    #[test]
    fn spectral_examples() {
        let d = SpectralDirection::diagonal(&[1.0, -1.0]).unwrap();
        assert_eq!(d.eigenvalues(), &[-1.0, 1.0]);
        assert!(close(&d.projectors()[0], &mat(&[&[0.0, 0.0], &[0.0, 1.0]]), 1e-15));
        assert!(close(&d.projectors()[1], &mat(&[&[1.0, 0.0], &[0.0, 0.0]]), 1e-15));

        let d = SpectralDirection::diagonal(&[1.0, 1.0, -2.0]).unwrap();
        assert_eq!(d.eigenvalues().len(), 2);
        assert!((d.eigenvalues()[0] + 2.0).abs() < 1e-14);
        assert!((d.eigenvalues()[1] - 1.0).abs() < 1e-14);
        assert_eq!(d.multiplicities(), alloc::vec![1, 2]);
    }

    #[test]
    fn spectral_errors() {
        let zero = CMatrix::zeros(2, 2);
        assert!(matches!(spectral_decompose(&zero, 1e-10), Err(Error::ZeroDirection)));
        let skew = CMatrix::from_fn(2, 2, |i, j| if i < j { real(1.0) } else { real(0.0) });
        assert!(matches!(spectral_decompose(&skew, 1e-10), Err(Error::NotHermitian)));
        let traced = mat(&[&[1.0, 0.0], &[0.0, 1.0]]);
        assert!(matches!(spectral_decompose(&traced, 1e-10), Err(Error::NotTraceless)));
    }

    #[test]
    fn spectral_invariants_on_random_directions() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for n in 1..6 {
            let d = random::direction(n, &mut rng);
            let dim = n + 1;
            let weighted: f64 = d
                .eigenvalues()
                .iter()
                .zip(d.multiplicities())
                .map(|(c, m)| c * m as f64)
                .sum();
            assert!(weighted.abs() < 1e-12);
            let mut sum = CMatrix::zeros(dim, dim);
            let mut recon = CMatrix::zeros(dim, dim);
            for (i, p) in d.projectors().iter().enumerate() {
                assert!(close(&(p * p), p, 1e-12));
                for (j, q) in d.projectors().iter().enumerate() {
                    if i != j {
                        assert!(frobenius(&(p * q)) < 1e-12);
                    }
                }
                sum += p;
                recon += p * real(d.eigenvalues()[i]);
            }
            assert!(close(&sum, &identity(dim), 1e-12));
            assert!(close(&recon, d.matrix(), 1e-12));
            assert!(d.eigenvalues().windows(2).all(|w| w[0] < w[1]));
        }
    }

    #[test]
    fn flow_limit_examples() {
        let d = SpectralDirection::diagonal(&[1.0, -1.0]).unwrap();
        let p = ProjectivePoint::from_real(&[1.0, 1.0]).unwrap();
        let lim = flow_limit(&p, &d, 1e-12).unwrap();
        assert_eq!(lim.stratum, 1);
        assert!(lim.limit.approx_eq(&ProjectivePoint::basis(1, 0), 1e-14));

        // independent check: evolve numerically at t = 30
        let evolved = ProjectivePoint::new(linalg::expm_hermitian(d.matrix(), 30.0) * p.coeffs())
            .unwrap();
        assert!(evolved.distance(&lim.limit) < 1e-12);

        let fixed = ProjectivePoint::basis(1, 1);
        let lim = flow_limit(&fixed, &d, 1e-12).unwrap();
        assert_eq!(lim.stratum, 0);
        assert!(lim.limit.approx_eq(&fixed, 1e-14));

        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let d3 = random::direction(3, &mut rng);
        let generic = random::point(3, &mut rng);
        assert_eq!(flow_limit(&generic, &d3, 1e-12).unwrap().stratum, d3.top());

        assert!(flow_limit(&generic, &d3, 0.0).is_err());
    }

    #[test]
    fn conjugated_direction_matches_matrix() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let d = random::direction(3, &mut rng);
        let k = random::unitary(4, &mut rng);
        let conj = d.conjugated(&k);
        let direct = SpectralDirection::new(&k * d.matrix() * k.adjoint()).unwrap();
        for (a, b) in conj.eigenvalues().iter().zip(direct.eigenvalues()) {
            assert!((a - b).abs() < 1e-12);
        }
        for (p, q) in conj.projectors().iter().zip(direct.projectors()) {
            assert!(close(p, q, 1e-10));
        }
    }
}
