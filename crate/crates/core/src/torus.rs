//! The diagonal torus `T^ℂ ⊂ SL(n+1, ℂ)` acting on an atomic measure.
//!
//! For `θ ∈ ℝⁿ⁺¹` with `Σθ = 0` the diagonal part of `𝔉(exp(θ)·ν)` is the
//! gradient of the convex function
//! `f(θ) = Σᵢ wᵢ·½·log(Σⱼ e^{2θⱼ}|z_{ij}|²)` minus `1/(n+1)`. Solving for a
//! prescribed diagonal momentum is therefore a smooth convex minimization,
//! solvable exactly when the target lies in the relative interior of the
//! torus momentum polytope.

use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::linalg::real_symmetric_eigen;
use crate::measure::AtomicMeasure;

/// Coordinates with `|z_ij|` at or below this are outside the support.
const SUPPORT_TOL: f64 = 1e-12;
/// Largest `n + 1` for which the polytope interior test enumerates subsets.
const MAX_POLYTOPE_DIM: usize = 20;

#[derive(Debug, Clone)]
pub struct TorusOptions {
    /// Euclidean tolerance on `∇f − 1/(n+1) − β`.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for TorusOptions {
    fn default() -> Self {
        TorusOptions { tol: 1e-10, max_iter: 200 }
    }
}

#[derive(Debug, Clone)]
pub struct TorusSolveResult {
    /// Zero-sum logarithmic torus coordinates.
    pub theta: Vec<f64>,
    pub residual: f64,
    pub iterations: usize,
    /// `false` when `max_iter` was reached first; this happens as the
    /// target approaches the polytope boundary.
    pub converged: bool,
}

/// Solves `∇f(θ) − 1/(n+1) = β` over `Σθ = 0` by damped Newton.
pub fn torus_solve(
    nu: &AtomicMeasure,
    beta: &[f64],
    options: &TorusOptions,
) -> Result<TorusSolveResult> {
    let dim = nu.dim() + 1;
    if beta.len() != dim {
        return Err(Error::DimensionMismatch { expected: dim, found: beta.len() });
    }
    if !(options.tol > 0.0) {
        return Err(Error::InvalidParameter("tol must be positive"));
    }
    if beta.iter().any(|b| !b.is_finite()) || beta.iter().sum::<f64>().abs() > 1e-10 {
        return Err(Error::InvalidParameter("beta must be finite and sum to zero"));
    }
    let target: Vec<f64> = beta.iter().map(|b| b + 1.0 / dim as f64).collect();
    let model = TorusModel::new(nu);
    if !model.target_in_interior(&target)? {
        return Err(Error::TargetOutsidePolytope);
    }

    let target = DVector::from_vec(target);
    let mut theta = DVector::<f64>::zeros(dim);
    let mut iterations = 0;
    loop {
        let (value, grad, hess) = model.evaluate(&theta, &target);
        let residual = grad.norm();
        let done = residual <= options.tol;
        if done || iterations >= options.max_iter {
            let mean = theta.mean();
            theta.add_scalar_mut(-mean);
            return Ok(TorusSolveResult {
                theta: theta.iter().copied().collect(),
                residual,
                iterations,
                converged: done,
            });
        }
        iterations += 1;
        let step = newton_direction(&hess, &grad);
        let slope = grad.dot(&step);
        let mut t = 1.0;
        loop {
            let candidate = &theta + &step * t;
            let (next, next_grad, _) = model.evaluate(&candidate, &target);
            let armijo = next <= value + 1e-4 * t * slope;
            let below_rounding = -slope * t <= 1e-12 * (1.0 + value.abs()) && next_grad.norm() < residual;
            if armijo || below_rounding || t < 1e-12 {
                theta = candidate;
                break;
            }
            t *= 0.5;
        }
    }
}

/// `−H⁺·g` restricted to the zero-sum hyperplane, dropping flat directions.
fn newton_direction(hess: &DMatrix<f64>, grad: &DVector<f64>) -> DVector<f64> {
    let dim = grad.len();
    let proj = DMatrix::<f64>::identity(dim, dim) - DMatrix::from_element(dim, dim, 1.0 / dim as f64);
    let reduced = &proj * hess * &proj;
    let g = &proj * grad;
    let (values, vectors) = real_symmetric_eigen(&reduced);
    let top = values.last().copied().unwrap_or(0.0).max(0.0);
    let mut step = DVector::<f64>::zeros(dim);
    for (k, &v) in values.iter().enumerate() {
        if v > 1e-12 * top && v > 0.0 {
            let u = vectors.column(k);
            step -= u * (u.dot(&g) / v);
        }
    }
    &proj * step
}

struct TorusModel {
    weights: Vec<f64>,
    /// `log|z_ij|²`, `−∞` outside the support.
    log_moduli: Vec<Vec<f64>>,
    supports: Vec<Vec<usize>>,
    dim: usize,
}

impl TorusModel {
    fn new(nu: &AtomicMeasure) -> Self {
        let dim = nu.dim() + 1;
        let mut weights = Vec::with_capacity(nu.len());
        let mut log_moduli = Vec::with_capacity(nu.len());
        let mut supports = Vec::with_capacity(nu.len());
        for atom in nu.atoms() {
            let z = atom.point.coeffs();
            let logs: Vec<f64> = z
                .iter()
                .map(|c| {
                    let m = c.norm();
                    if m > SUPPORT_TOL {
                        (m * m).ln()
                    } else {
                        f64::NEG_INFINITY
                    }
                })
                .collect();
            supports.push((0..dim).filter(|&j| logs[j].is_finite()).collect());
            log_moduli.push(logs);
            weights.push(atom.weight);
        }
        TorusModel { weights, log_moduli, supports, dim }
    }

    /// `(f(θ) − ⟨q, θ⟩, ∇, ∇²)`.
    fn evaluate(
        &self,
        theta: &DVector<f64>,
        target: &DVector<f64>,
    ) -> (f64, DVector<f64>, DMatrix<f64>) {
        let dim = self.dim;
        let mut value = -target.dot(theta);
        let mut grad = -target.clone();
        let mut hess = DMatrix::<f64>::zeros(dim, dim);
        for (i, logs) in self.log_moduli.iter().enumerate() {
            let w = self.weights[i];
            let support = &self.supports[i];
            let exps: Vec<f64> = support.iter().map(|&j| 2.0 * theta[j] + logs[j]).collect();
            let top = exps.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let sum: f64 = exps.iter().map(|e| (e - top).exp()).sum();
            let lse = top + sum.ln();
            value += w * 0.5 * lse;
            let pi: Vec<f64> = exps.iter().map(|e| (e - lse).exp()).collect();
            for (a, &j) in support.iter().enumerate() {
                grad[j] += w * pi[a];
                hess[(j, j)] += 2.0 * w * pi[a];
                for (b, &k) in support.iter().enumerate() {
                    hess[(j, k)] -= 2.0 * w * pi[a] * pi[b];
                }
            }
        }
        (value, grad, hess)
    }

    /// Relative-interior test for `q = β + 1/(n+1)` in the image of the
    /// torus momentum map: on each connected block of coordinates (linked
    /// through atom supports) the block mass must match, and every proper
    /// coordinate subset `J` of the block must satisfy
    /// `q(J) < ν(atoms meeting J)`.
    fn target_in_interior(&self, q: &[f64]) -> Result<bool> {
        let dim = self.dim;
        let mut parent: Vec<usize> = (0..dim).collect();
        fn root(parent: &mut [usize], mut i: usize) -> usize {
            while parent[i] != i {
                parent[i] = parent[parent[i]];
                i = parent[i];
            }
            i
        }
        for support in &self.supports {
            for w in support.windows(2) {
                let (a, b) = (root(&mut parent, w[0]), root(&mut parent, w[1]));
                parent[a] = b;
            }
        }
        let covered: Vec<bool> =
            (0..dim).map(|j| self.supports.iter().any(|s| s.contains(&j))).collect();
        if covered.iter().any(|c| !c) {
            return Ok(false);
        }
        let mut blocks: Vec<Vec<usize>> = Vec::new();
        for j in 0..dim {
            let r = root(&mut parent, j);
            match blocks.iter_mut().find(|b| root(&mut parent, b[0]) == r) {
                Some(b) => b.push(j),
                None => blocks.push(alloc::vec![j]),
            }
        }
        for block in &blocks {
            if block.len() > MAX_POLYTOPE_DIM {
                return Err(Error::InvalidParameter("torus dimension too large for interior test"));
            }
            let atom_mass: f64 = self
                .supports
                .iter()
                .zip(&self.weights)
                .filter(|(s, _)| s.iter().any(|j| block.contains(j)))
                .map(|(_, w)| w)
                .sum();
            let target_mass: f64 = block.iter().map(|&j| q[j]).sum();
            if (atom_mass - target_mass).abs() > 1e-9 {
                return Ok(false);
            }
            let k = block.len();
            for mask in 1u32..((1u32 << k) - 1) {
                let subset: Vec<usize> = (0..k).filter(|b| mask & (1 << b) != 0).map(|b| block[b]).collect();
                let lhs: f64 = subset.iter().map(|&j| q[j]).sum();
                let rhs: f64 = self
                    .supports
                    .iter()
                    .zip(&self.weights)
                    .filter(|(s, _)| s.iter().any(|j| subset.contains(j)))
                    .map(|(_, w)| w)
                    .sum();
                if lhs >= rhs - 1e-12 {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }
}

/// Average of the distinct extreme points among `vertex_images`, the
/// centroid of their convex hull's vertex set. Shifting by it puts the
/// origin in the interior of the hull.
pub fn polytope_centroid_shift(vertex_images: &[Vec<f64>]) -> Result<Vec<f64>> {
    let Some(first) = vertex_images.first() else {
        return Err(Error::DegenerateHull);
    };
    let d = first.len();
    if let Some(v) = vertex_images.iter().find(|v| v.len() != d) {
        return Err(Error::DimensionMismatch { expected: d, found: v.len() });
    }
    let mut distinct: Vec<&Vec<f64>> = Vec::new();
    for v in vertex_images {
        if !distinct.iter().any(|u| distance(u, v) <= 1e-12) {
            distinct.push(v);
        }
    }
    if distinct.len() < 2 {
        return Err(Error::DegenerateHull);
    }
    let scale = distinct.iter().map(|v| v.iter().map(|x| x.abs()).fold(0.0, f64::max)).fold(1.0, f64::max);
    let extreme: Vec<&Vec<f64>> = distinct
        .iter()
        .enumerate()
        .filter(|(i, v)| {
            let others: Vec<Vec<f64>> = distinct
                .iter()
                .enumerate()
                .filter(|(j, _)| j != i)
                .map(|(_, u)| u.iter().zip(v.iter()).map(|(a, b)| a - b).collect())
                .collect();
            min_norm_point(&others).0 > 1e-10 * scale
        })
        .map(|(_, v)| *v)
        .collect();
    let mut centroid = alloc::vec![0.0; d];
    for v in &extreme {
        for (c, x) in centroid.iter_mut().zip(v.iter()) {
            *c += x / extreme.len() as f64;
        }
    }
    Ok(centroid)
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Euclidean distance from `point` to the convex hull of `points`.
pub fn hull_distance(point: &[f64], points: &[Vec<f64>]) -> f64 {
    let shifted: Vec<Vec<f64>> =
        points.iter().map(|u| u.iter().zip(point).map(|(a, b)| a - b).collect()).collect();
    min_norm_point(&shifted).0
}

/// Wolfe's minimum-norm-point algorithm on the convex hull of `points`.
/// Returns the norm of the minimizer and its convex weights.
fn min_norm_point(points: &[Vec<f64>]) -> (f64, Vec<f64>) {
    let m = points.len();
    if m == 0 {
        return (f64::INFINITY, Vec::new());
    }
    let d = points[0].len();
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    let scale = points.iter().map(|p| dot(p, p)).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let eps = 1e-12;

    let start = (0..m).min_by(|&a, &b| dot(&points[a], &points[a]).total_cmp(&dot(&points[b], &points[b]))).unwrap();
    let mut active: Vec<usize> = alloc::vec![start];
    let mut lambda: Vec<f64> = alloc::vec![1.0];
    let combine = |active: &[usize], lambda: &[f64]| {
        let mut x = alloc::vec![0.0; d];
        for (&i, &l) in active.iter().zip(lambda) {
            for (xk, pk) in x.iter_mut().zip(&points[i]) {
                *xk += l * pk;
            }
        }
        x
    };
    let mut x = combine(&active, &lambda);

    for _ in 0..(50 * (m + d) + 100) {
        let xx = dot(&x, &x);
        let (j, best) = (0..m)
            .map(|i| (i, dot(&x, &points[i])))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap();
        if xx - best <= eps * scale || active.contains(&j) {
            break;
        }
        active.push(j);
        lambda.push(0.0);
        loop {
            let alpha = affine_minimizer(points, &active);
            if alpha.iter().all(|&a| a > eps) {
                lambda = alpha;
                break;
            }
            let mut theta = 1.0f64;
            for (l, a) in lambda.iter().zip(&alpha) {
                if *a <= eps && l - a > 0.0 {
                    theta = theta.min(l / (l - a));
                }
            }
            for (l, a) in lambda.iter_mut().zip(&alpha) {
                *l = theta * a + (1.0 - theta) * *l;
            }
            let mut k = 0;
            while k < active.len() {
                if lambda[k] <= eps {
                    active.remove(k);
                    lambda.remove(k);
                } else {
                    k += 1;
                }
            }
            let total: f64 = lambda.iter().sum();
            for l in &mut lambda {
                *l /= total;
            }
        }
        x = combine(&active, &lambda);
    }
    let mut weights = alloc::vec![0.0; m];
    for (&i, &l) in active.iter().zip(&lambda) {
        weights[i] = l;
    }
    (dot(&x, &x).sqrt(), weights)
}

/// Minimizer of `‖Σ αᵢ pᵢ‖` over the affine hull of the active points.
fn affine_minimizer(points: &[Vec<f64>], active: &[usize]) -> Vec<f64> {
    let k = active.len();
    let mut kkt = DMatrix::<f64>::zeros(k + 1, k + 1);
    for a in 0..k {
        for b in 0..k {
            kkt[(a, b)] = points[active[a]].iter().zip(&points[active[b]]).map(|(x, y)| x * y).sum();
        }
        kkt[(a, k)] = 1.0;
        kkt[(k, a)] = 1.0;
    }
    let mut rhs = DVector::<f64>::zeros(k + 1);
    rhs[k] = 1.0;
    let (values, vectors) = real_symmetric_eigen(&kkt);
    let top = values.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let mut sol = DVector::<f64>::zeros(k + 1);
    for (j, &v) in values.iter().enumerate() {
        if v.abs() > 1e-14 * top {
            let u = vectors.column(j);
            sol += u * (u.dot(&rhs) / v);
        }
    }
    let mut alpha: Vec<f64> = sol.iter().take(k).copied().collect();
    let total: f64 = alpha.iter().sum();
    if total.abs() > 0.0 {
        for a in &mut alpha {
            *a /= total;
        }
    }
    alpha
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::ProjectivePoint;
    use crate::random;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn pt(x: &[f64]) -> ProjectivePoint {
        ProjectivePoint::from_real(x).unwrap()
    }

    /// Diagonal of `Σ wᵢ·P_{exp(θ)zᵢ}` computed directly.
    fn diagonal_momentum(nu: &AtomicMeasure, theta: &[f64]) -> Vec<f64> {
        let dim = theta.len();
        let mut out = alloc::vec![0.0; dim];
        for a in nu.atoms() {
            let y: Vec<f64> = (0..dim).map(|j| (theta[j].exp() * a.point.coeffs()[j].norm()).powi(2)).collect();
            let total: f64 = y.iter().sum();
            for j in 0..dim {
                out[j] += a.weight * y[j] / total;
            }
        }
        out
    }

    #[test]
    fn basis_points_need_no_iterations() {
        for n in 1..5 {
            let nu = AtomicMeasure::uniform(n, (0..=n).map(|i| ProjectivePoint::basis(n, i)).collect())
                .unwrap();
            let r = torus_solve(&nu, &alloc::vec![0.0; n + 1], &TorusOptions::default()).unwrap();
            assert!(r.converged);
            assert_eq!(r.iterations, 0);
            assert!(r.theta.iter().all(|&t| t == 0.0));
        }
    }

    #[test]
    fn symmetric_pair_gives_zero() {
        let nu = AtomicMeasure::uniform(1, alloc::vec![pt(&[1.0, 1.0]), pt(&[1.0, -1.0])]).unwrap();
        let r = torus_solve(&nu, &[0.0, 0.0], &TorusOptions::default()).unwrap();
        assert!(r.converged);
        assert!(r.theta.iter().all(|t| t.abs() < 1e-14));
    }

    /// Scalar bisection on `t ↦ p₀(t, −t)`, which increases monotonically.
    fn bisect_p1(nu: &AtomicMeasure, q0: f64) -> f64 {
        let p0 = |t: f64| diagonal_momentum(nu, &[t, -t])[0];
        let (mut lo, mut hi) = (-50.0, 50.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if p0(mid) < q0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn p1_matches_bisection() {
        let nu = AtomicMeasure::uniform(1, alloc::vec![pt(&[1.0, 1.0]), pt(&[1.0, 2.0])]).unwrap();
        let r = torus_solve(&nu, &[0.0, 0.0], &TorusOptions::default()).unwrap();
        assert!(r.converged);
        let p = diagonal_momentum(&nu, &r.theta);
        assert!((p[0] - 0.5).abs() <= 1e-10 && (p[1] - 0.5).abs() <= 1e-10);
        assert!((r.theta[0] - bisect_p1(&nu, 0.5)).abs() < 1e-9);
    }

    #[test]
    fn random_interior_targets() {
        let mut rng = ChaCha8Rng::seed_from_u64(50);
        for n in 1..5 {
            let nu = random::weighted_measure(n, n + 3, &mut rng);
            let mut beta: Vec<f64> = (0..=n).map(|_| rand::Rng::gen_range(&mut rng, -0.5..0.5)).collect();
            let mean = beta.iter().sum::<f64>() / beta.len() as f64;
            // shrink towards the centre so the target is interior
            for b in &mut beta {
                *b = 0.5 * (*b - mean) / (n + 1) as f64;
            }
            let r = torus_solve(&nu, &beta, &TorusOptions::default()).unwrap();
            assert!(r.converged, "n={n}");
            assert!(r.theta.iter().sum::<f64>().abs() < 1e-12);
            let p = diagonal_momentum(&nu, &r.theta);
            for j in 0..=n {
                assert!((p[j] - 1.0 / (n + 1) as f64 - beta[j]).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn outside_targets_are_rejected() {
        let nu = AtomicMeasure::uniform(1, alloc::vec![pt(&[1.0, 1.0]), pt(&[1.0, 2.0])]).unwrap();
        assert!(matches!(
            torus_solve(&nu, &[0.5, -0.5], &TorusOptions::default()),
            Err(Error::TargetOutsidePolytope)
        ));
        // coordinate-supported atoms pin the diagonal momentum
        let split = AtomicMeasure::uniform(1, alloc::vec![pt(&[1.0, 0.0]), pt(&[0.0, 1.0])]).unwrap();
        assert!(matches!(
            torus_solve(&split, &[0.1, -0.1], &TorusOptions::default()),
            Err(Error::TargetOutsidePolytope)
        ));
        assert!(torus_solve(&nu, &[0.1, 0.1], &TorusOptions::default()).is_err());
    }

    #[test]
    fn centroid_examples() {
        let c = polytope_centroid_shift(&[alloc::vec![0.5, -0.5], alloc::vec![-0.5, 0.5]]).unwrap();
        assert!(c.iter().all(|x| x.abs() < 1e-15));
        let c = polytope_centroid_shift(&[alloc::vec![0.0, 0.0], alloc::vec![1.0, 0.0], alloc::vec![0.0, 1.0]])
            .unwrap();
        assert!((c[0] - 1.0 / 3.0).abs() < 1e-15 && (c[1] - 1.0 / 3.0).abs() < 1e-15);
        // interior and repeated points are ignored
        let c = polytope_centroid_shift(&[
            alloc::vec![0.0, 0.0],
            alloc::vec![1.0, 0.0],
            alloc::vec![0.2, 0.2],
            alloc::vec![1.0, 0.0],
            alloc::vec![0.0, 1.0],
        ])
        .unwrap();
        assert!((c[0] - 1.0 / 3.0).abs() < 1e-15);
        assert!(matches!(
            polytope_centroid_shift(&[alloc::vec![1.0, 2.0], alloc::vec![1.0, 2.0]]),
            Err(Error::DegenerateHull)
        ));
    }

    #[test]
    fn hull_distance_examples() {
        let square = [alloc::vec![0.0, 0.0], alloc::vec![1.0, 0.0], alloc::vec![0.0, 1.0], alloc::vec![1.0, 1.0]];
        assert!(hull_distance(&[0.5, 0.5], &square) < 1e-12);
        assert!((hull_distance(&[2.0, 0.5], &square) - 1.0).abs() < 1e-12);
        assert!((hull_distance(&[2.0, 2.0], &square) - 2.0f64.sqrt()).abs() < 1e-12);
    }
}
