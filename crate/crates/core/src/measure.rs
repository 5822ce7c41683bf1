//! Atomic probability measures on `ℙⁿ`, their pushforward under
//! `SL(n+1, ℂ)`, the measure momentum map `𝔉` and the Kempf–Ness functional
//! `Ψ^M(ν, g) = Σᵢ wᵢ·log‖g·zᵢ‖`.

use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;


use crate::error::{Error, Result};
use crate::geometry::{
    act_point, momentum_of_point, GroupElement, MomentumMatrix, ProjectivePoint, SpectralDirection,
};
use crate::linalg::{self, real, CMatrix};
use crate::DEFAULT_MERGE_TOL;

/// Largest accepted deviation of the input weight sum from one.
const WEIGHT_SUM_TOL: f64 = 1e-6;

/// One weighted point mass.
#[derive(Debug, Clone, PartialEq)]
pub struct Atom {
    pub point: ProjectivePoint,
    pub weight: f64,
}

/// A finite probability measure `ν = Σ wᵢ δ_{pᵢ}` on `ℙⁿ`.
///
/// Weights are positive and sum to one; atoms closer than the merge
/// tolerance are combined at construction, keeping the first point.
#[derive(Debug, Clone, PartialEq)]
pub struct AtomicMeasure {
    n: usize,
    atoms: Vec<Atom>,
}

impl AtomicMeasure {
    pub fn new(n: usize, atoms: Vec<(ProjectivePoint, f64)>) -> Result<Self> {
        Self::with_merge_tol(n, atoms, DEFAULT_MERGE_TOL)
    }

    pub fn with_merge_tol(
        n: usize,
        atoms: Vec<(ProjectivePoint, f64)>,
        merge_tol: f64,
    ) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::EmptyMeasure);
        }
        let mut merged: Vec<Atom> = Vec::with_capacity(atoms.len());
        let mut total = 0.0;
        for (point, weight) in atoms {
            if point.dim() != n {
                return Err(Error::DimensionMismatch { expected: n, found: point.dim() });
            }
            if !(weight > 0.0) || !weight.is_finite() {
                return Err(Error::InvalidWeights);
            }
            total += weight;
            match merged.iter_mut().find(|a| a.point.distance(&point) <= merge_tol) {
                Some(existing) => existing.weight += weight,
                None => merged.push(Atom { point, weight }),
            }
        }
        if (total - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(Error::InvalidWeights);
        }
        // leave sums within a few ulps alone so that re-normalizing is the
        // identity
        if (total - 1.0).abs() > 4.0 * f64::EPSILON * merged.len() as f64 {
            for atom in &mut merged {
                atom.weight /= total;
            }
        }
        Ok(AtomicMeasure { n, atoms: merged })
    }

    /// Equal weights on the given points.
    pub fn uniform(n: usize, points: Vec<ProjectivePoint>) -> Result<Self> {
        let w = 1.0 / points.len() as f64;
        Self::new(n, points.into_iter().map(|p| (p, w)).collect())
    }

    /// Unit point mass at `p`.
    pub fn dirac(p: ProjectivePoint) -> Self {
        AtomicMeasure { n: p.dim(), atoms: alloc::vec![Atom { point: p, weight: 1.0 }] }
    }

    /// Projective dimension `n`.
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn weights(&self) -> impl Iterator<Item = f64> + '_ {
        self.atoms.iter().map(|a| a.weight)
    }

    pub fn points(&self) -> impl Iterator<Item = &ProjectivePoint> + '_ {
        self.atoms.iter().map(|a| &a.point)
    }

    /// Total weight of the atoms with the given indices.
    pub fn mass_of(&self, indices: &[usize]) -> f64 {
        indices.iter().map(|&i| self.atoms[i].weight).sum()
    }
}

/// Image measure `g_*ν`.
pub fn pushforward(g: &GroupElement, nu: &AtomicMeasure) -> Result<AtomicMeasure> {
    if g.dim() != nu.dim() {
        return Err(Error::DimensionMismatch { expected: nu.dim(), found: g.dim() });
    }
    let atoms = nu
        .atoms
        .iter()
        .map(|a| Ok((act_point(g, &a.point)?, a.weight)))
        .collect::<Result<Vec<_>>>()?;
    AtomicMeasure::new(nu.dim(), atoms)
}

/// `𝔉(ν) = Σ wᵢ·μ(pᵢ)`, summed pairwise.
pub fn momentum(nu: &AtomicMeasure) -> MomentumMatrix {
    let zero = MomentumMatrix::zero(nu.dim());
    let sum = linalg::tree_sum(nu.len(), &zero, &|i| {
        let atom = &nu.atoms[i];
        let m = momentum_of_point(&atom.point).into_matrix() * real(atom.weight);
        MomentumMatrix::from_matrix(&m)
    });
    MomentumMatrix::from_matrix(sum.matrix())
}

/// `𝔉(g·ν)` without building (and merging) the pushforward.
pub(crate) fn momentum_after(g: &CMatrix, nu: &AtomicMeasure) -> Result<MomentumMatrix> {
    let dim = nu.dim() + 1;
    let terms = nu
        .atoms
        .iter()
        .map(|atom| {
            let y = g * atom.point.coeffs();
            let norm_sqr = y.norm_squared();
            if !(norm_sqr >= 1e-300) || !norm_sqr.is_finite() {
                return Err(Error::NumericalDegeneracy);
            }
            Ok(&y * y.adjoint() * real(atom.weight / norm_sqr))
        })
        .collect::<Result<Vec<CMatrix>>>()?;
    let sum = linalg::tree_sum(terms.len(), &CMatrix::zeros(dim, dim), &|i| terms[i].clone());
    Ok(MomentumMatrix::from_matrix(&sum))
}

/// `Ψ^M(ν, g) = Σᵢ wᵢ·log(‖g·zᵢ‖/‖zᵢ‖)`.
pub fn kempf_ness(nu: &AtomicMeasure, g: &GroupElement) -> Result<f64> {
    if g.dim() != nu.dim() {
        return Err(Error::DimensionMismatch { expected: nu.dim(), found: g.dim() });
    }
    let terms = nu
        .atoms
        .iter()
        .map(|a| {
            let norm = (g.matrix() * a.point.coeffs()).norm();
            if !(norm >= 1e-150) || !norm.is_finite() {
                return Err(Error::NumericalDegeneracy);
            }
            Ok(a.weight * norm.ln())
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(linalg::tree_sum(terms.len(), &0.0, &|i| terms[i]))
}

/// `d/dt Ψ^M(ν, exp(tA)·g)` at `t = 0`, which equals `tr(𝔉(g·ν)·A)`.
pub fn kempf_ness_derivative(
    nu: &AtomicMeasure,
    g: &GroupElement,
    d: &SpectralDirection,
) -> Result<f64> {
    if g.dim() != nu.dim() || d.dim() != nu.dim() {
        return Err(Error::DimensionMismatch { expected: nu.dim(), found: d.dim() });
    }
    Ok(momentum_after(g.matrix(), nu)?.pair(d.matrix()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::frobenius;
    use crate::random;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn pt(x: &[f64]) -> ProjectivePoint {
        ProjectivePoint::from_real(x).unwrap()
    }

    fn three_points() -> AtomicMeasure {
        AtomicMeasure::uniform(1, alloc::vec![pt(&[1.0, 0.0]), pt(&[0.0, 1.0]), pt(&[1.0, 1.0])])
            .unwrap()
    }

    #[test]
    fn construction_validates_weights() {
        let p = pt(&[1.0, 0.0]);
        assert_eq!(AtomicMeasure::new(1, alloc::vec![]), Err(Error::EmptyMeasure));
        assert_eq!(
            AtomicMeasure::new(1, alloc::vec![(p.clone(), 0.5)]),
            Err(Error::InvalidWeights)
        );
        assert_eq!(
            AtomicMeasure::new(1, alloc::vec![(p.clone(), -0.5), (pt(&[0.0, 1.0]), 1.5)]),
            Err(Error::InvalidWeights)
        );
        let nearly = AtomicMeasure::new(1, alloc::vec![(p.clone(), 1.0 + 5e-7)]).unwrap();
        assert_eq!(nearly.atoms()[0].weight, 1.0);
        assert!(matches!(
            AtomicMeasure::new(2, alloc::vec![(p, 1.0)]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn duplicates_are_merged() {
        let p = pt(&[1.0, 2.0]);
        let q = ProjectivePoint::from_parts(&[(0.0, 1.0), (0.0, 2.0)]).unwrap();
        let nu = AtomicMeasure::new(1, alloc::vec![(p, 0.25), (pt(&[1.0, 0.0]), 0.5), (q, 0.25)])
            .unwrap();
        assert_eq!(nu.len(), 2);
        assert!((nu.atoms()[0].weight - 0.5).abs() < 1e-15);
    }

    #[test]
    fn pushforward_examples() {
        let nu = three_points();
        assert_eq!(pushforward(&GroupElement::identity(1), &nu).unwrap(), nu);

        let g = GroupElement::new(CMatrix::from_diagonal(&crate::CVector::from_vec(
            alloc::vec![real(2.0), real(0.5)],
        )))
        .unwrap();
        let image = pushforward(&g, &AtomicMeasure::dirac(pt(&[1.0, 1.0]))).unwrap();
        assert!(image.atoms()[0].point.approx_eq(&pt(&[4.0, 1.0]), 1e-14));
        assert_eq!(image.atoms()[0].weight, 1.0);
    }

    #[test]
    fn momentum_examples() {
        let half = AtomicMeasure::uniform(1, alloc::vec![pt(&[1.0, 0.0]), pt(&[0.0, 1.0])]).unwrap();
        assert!(momentum(&half).frobenius_norm() < 1e-15);

        let dirac = AtomicMeasure::dirac(pt(&[1.0, 0.0]));
        let m = momentum(&dirac);
        assert!((m.matrix()[(0, 0)].re - 0.5).abs() < 1e-15);
        assert!((m.matrix()[(1, 1)].re + 0.5).abs() < 1e-15);

        let m = momentum(&three_points());
        let expected = CMatrix::from_row_slice(
            2,
            2,
            &[real(0.0), real(1.0 / 6.0), real(1.0 / 6.0), real(0.0)],
        );
        assert!(frobenius(&(m.matrix() - expected)) < 1e-15);
    }

    #[test]
    fn momentum_is_unitarily_equivariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        for n in 1..5 {
            let nu = random::weighted_measure(n, 6, &mut rng);
            let k = random::special_unitary(n, &mut rng);
            let lhs = momentum(&pushforward(&k, &nu).unwrap());
            let rhs = momentum(&nu).conjugated(k.matrix());
            assert!(frobenius(&(lhs.matrix() - rhs.matrix())) < 1e-12);
        }
    }

    #[test]
    fn kempf_ness_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let nu = random::weighted_measure(2, 5, &mut rng);
        assert!(kempf_ness(&nu, &GroupElement::identity(2)).unwrap().abs() < 1e-15);
        let k = random::special_unitary(2, &mut rng);
        assert!(kempf_ness(&nu, &k).unwrap().abs() < 1e-13);

        let e = core::f64::consts::E;
        let g = GroupElement::new(CMatrix::from_diagonal(&crate::CVector::from_vec(
            alloc::vec![real(e), real(1.0 / e)],
        )))
        .unwrap();
        let value = kempf_ness(&AtomicMeasure::dirac(pt(&[1.0, 0.0])), &g).unwrap();
        assert!((value - 1.0).abs() < 1e-15);
    }

    #[test]
    fn derivative_examples() {
        let half = AtomicMeasure::uniform(1, alloc::vec![pt(&[1.0, 0.0]), pt(&[0.0, 1.0])]).unwrap();
        let d = SpectralDirection::diagonal(&[1.0, -1.0]).unwrap();
        let id = GroupElement::identity(1);
        assert!(kempf_ness_derivative(&half, &id, &d).unwrap().abs() < 1e-15);
        let dirac = AtomicMeasure::dirac(pt(&[1.0, 0.0]));
        assert!((kempf_ness_derivative(&dirac, &id, &d).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn derivative_matches_central_difference() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let h = 1e-5;
        for trial in 0..20 {
            let n = 1 + trial % 4;
            let nu = random::weighted_measure(n, 3 + trial % 5, &mut rng);
            let g = random::group_element(n, 0.8, &mut rng);
            let d = random::direction(n, &mut rng);
            let plus = GroupElement::exp_hermitian(d.matrix(), h).unwrap().compose(&g).unwrap();
            let minus = GroupElement::exp_hermitian(d.matrix(), -h).unwrap().compose(&g).unwrap();
            let fd = (kempf_ness(&nu, &plus).unwrap() - kempf_ness(&nu, &minus).unwrap()) / (2.0 * h);
            let exact = kempf_ness_derivative(&nu, &g, &d).unwrap();
            assert!((fd - exact).abs() <= 1e-6, "fd {fd} vs {exact}");
        }
    }

    #[test]
    fn critical_points_are_momentum_zeros() {
        // balanced: the derivative vanishes along a spanning set
        let nu = AtomicMeasure::uniform(
            2,
            alloc::vec![
                ProjectivePoint::basis(2, 0),
                ProjectivePoint::basis(2, 1),
                ProjectivePoint::basis(2, 2)
            ],
        )
        .unwrap();
        let id = GroupElement::identity(2);
        for a in crate::balance::hermitian_basis(2) {
            let d = SpectralDirection::new(a).unwrap();
            assert!(kempf_ness_derivative(&nu, &id, &d).unwrap().abs() < 1e-10);
        }
        // unbalanced: some basis direction has a nonzero derivative
        let nu = three_points();
        let id = GroupElement::identity(1);
        let max = crate::balance::hermitian_basis(1)
            .into_iter()
            .map(|a| {
                kempf_ness_derivative(&nu, &id, &SpectralDirection::new(a).unwrap()).unwrap().abs()
            })
            .fold(0.0, f64::max);
        assert!(max > 1e-3);
    }
}
