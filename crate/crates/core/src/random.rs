//! Seeded samplers for points, measures, directions and group elements.
//!
//! All samplers take any [`rand::Rng`]; the command-line front-end uses
//! `ChaCha8Rng::seed_from_u64(seed)` so that runs are reproducible across
//! platforms. Gaussian draws use [`rand_distr::StandardNormal`].

use alloc::vec::Vec;

use nalgebra::Vector3;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::geometry::{GroupElement, ProjectivePoint, SpectralDirection};
use crate::linalg::{self, c, real, CMatrix, CVector};
use crate::measure::AtomicMeasure;
use crate::sphere::SphereMeasure;

fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

/// Complex Gaussian vector with i.i.d. standard normal real and imaginary
/// parts.
pub fn complex_gaussian<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> CVector {
    CVector::from_fn(dim, |_, _| c(gaussian(rng), gaussian(rng)))
}

/// Point of `ℙⁿ` distributed according to the Fubini–Study volume.
pub fn point<R: Rng + ?Sized>(n: usize, rng: &mut R) -> ProjectivePoint {
    loop {
        if let Ok(p) = ProjectivePoint::new(complex_gaussian(n + 1, rng)) {
            return p;
        }
    }
}

/// Haar-distributed unitary matrix (QR of a Ginibre matrix with the phases
/// of `R`'s diagonal divided out).
pub fn unitary<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> CMatrix {
    let ginibre = CMatrix::from_fn(dim, dim, |_, _| c(gaussian(rng), gaussian(rng)));
    let qr = ginibre.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..dim {
        let d = r[(j, j)];
        let norm = d.norm();
        if norm > 0.0 {
            let phase = d / real(norm);
            for i in 0..dim {
                q[(i, j)] *= phase;
            }
        }
    }
    q
}

/// Traceless Hermitian matrix with GUE-style entries, normalized to unit
/// Frobenius norm. Diagonal entries are `N(0,1)`, off-diagonal entries have
/// independent `N(0, 1/2)` real and imaginary parts.
pub fn hermitian_traceless<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> CMatrix {
    loop {
        let mut h = CMatrix::zeros(dim, dim);
        for i in 0..dim {
            h[(i, i)] = real(gaussian(rng));
            for j in (i + 1)..dim {
                let z = c(gaussian(rng), gaussian(rng)) * real(core::f64::consts::FRAC_1_SQRT_2);
                h[(i, j)] = z;
                h[(j, i)] = z.conj();
            }
        }
        let shift = linalg::trace(&h).re / dim as f64;
        for i in 0..dim {
            h[(i, i)] -= real(shift);
        }
        let norm = linalg::frobenius(&h);
        if norm > 1e-8 {
            return h / real(norm);
        }
    }
}

/// Random unit direction in `𝔰𝔲(n+1)`, decomposed.
pub fn direction<R: Rng + ?Sized>(n: usize, rng: &mut R) -> SpectralDirection {
    loop {
        if let Ok(d) = SpectralDirection::new(hermitian_traceless(n + 1, rng)) {
            return d;
        }
    }
}

/// `exp(scale·H)·k` with `H` a unit traceless Hermitian matrix and `k`
/// Haar unitary; the condition number is at most `exp(2·scale)`.
pub fn group_element<R: Rng + ?Sized>(n: usize, scale: f64, rng: &mut R) -> GroupElement {
    let h = hermitian_traceless(n + 1, rng);
    let k = unitary(n + 1, rng);
    GroupElement::new(linalg::expm_hermitian(&h, scale) * k)
        .expect("exp of a traceless matrix times a unitary is invertible")
}

/// Haar unitary rescaled into `SL(n+1, ℂ)`.
pub fn special_unitary<R: Rng + ?Sized>(n: usize, rng: &mut R) -> GroupElement {
    GroupElement::new(unitary(n + 1, rng)).expect("unitary matrices are invertible")
}

/// Measure with `m` Fubini–Study-random atoms and equal weights.
pub fn uniform_measure<R: Rng + ?Sized>(n: usize, m: usize, rng: &mut R) -> AtomicMeasure {
    let points: Vec<ProjectivePoint> = (0..m).map(|_| point(n, rng)).collect();
    AtomicMeasure::uniform(n, points).expect("random atoms are distinct")
}

/// Measure with `m` random atoms and random positive weights bounded away
/// from zero.
pub fn weighted_measure<R: Rng + ?Sized>(n: usize, m: usize, rng: &mut R) -> AtomicMeasure {
    let raw: Vec<f64> = (0..m).map(|_| rng.gen_range(0.2..1.0)).collect();
    let total: f64 = raw.iter().sum();
    let atoms = raw.into_iter().map(|w| (point(n, rng), w / total)).collect();
    AtomicMeasure::new(n, atoms).expect("random atoms are distinct")
}

/// Uniformly distributed point on the unit sphere `S² ⊂ ℝ³`.
pub fn sphere_point<R: Rng + ?Sized>(rng: &mut R) -> Vector3<f64> {
    loop {
        let v = Vector3::new(gaussian(rng), gaussian(rng), gaussian(rng));
        let norm = v.norm();
        if norm > 1e-8 {
            return v / norm;
        }
    }
}

/// Sphere measure with `m` uniform random atoms and equal weights.
pub fn sphere_measure<R: Rng + ?Sized>(m: usize, rng: &mut R) -> SphereMeasure {
    let w = 1.0 / m as f64;
    SphereMeasure::new((0..m).map(|_| (sphere_point(rng), w)).collect())
        .expect("random sphere points are valid")
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn unitary_is_unitary() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let u = unitary(4, &mut rng);
        let err = linalg::frobenius(&(u.adjoint() * &u - CMatrix::identity(4, 4)));
        assert!(err < 1e-13);
    }

    #[test]
    fn directions_are_unit_traceless() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let h = hermitian_traceless(5, &mut rng);
        assert!((linalg::frobenius(&h) - 1.0).abs() < 1e-14);
        assert!(linalg::trace(&h).norm() < 1e-14);
        assert!(linalg::hermitian_defect(&h) == 0.0);
    }

    #[test]
    fn same_seed_same_draws() {
        let a = hermitian_traceless(3, &mut ChaCha8Rng::seed_from_u64(9));
        let b = hermitian_traceless(3, &mut ChaCha8Rng::seed_from_u64(9));
        assert_eq!(a, b);
    }
}
