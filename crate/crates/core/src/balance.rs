//! Solvers for `𝔉(g·ν) = β`.
//!
//! * [`BalanceMethod::FixedPoint`] runs the Tyler iteration
//!   `S ← c·[Σᵢ wᵢ zᵢzᵢ*/(zᵢ*·S·zᵢ)]⁻¹` with `det S = 1`; its fixed points are
//!   exactly the `S = g*g` with `𝔉(g·ν) = 0`.
//! * [`BalanceMethod::GeodesicDescent`] minimizes the Kempf–Ness functional
//!   along `g ← exp(−s·𝔉(g·ν))·g` with Armijo backtracking.
//! * [`solve_target`] handles general interior targets with a Newton
//!   iteration whose Jacobian is the [`gram_operator`].
//!
//! For `β = 0` the returned group element is the positive square root of
//! `S = g*g`; other elements of the coset `K·g` give the same residual.

use alloc::vec::Vec;
use core::borrow::Borrow;

use nalgebra::DMatrix;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::geometry::{GroupElement, ProjectivePoint};
use crate::linalg::{self, c, frobenius, hermitian_eigen, hermitian_part, real, CMatrix, CVector};
use crate::measure::{kempf_ness, momentum_after, AtomicMeasure};
use crate::stability::{classify, StabilityKind, Subspace};
use crate::{DEFAULT_TOL_EQ, SPAN_RANK_TOL};

/// Condition number of `S = g*g` above which the iteration is declared
/// divergent and a destabilizing subspace is extracted.
pub const DIVERGENCE_CONDITION: f64 = 1e12;

/// Atoms within this distance of the collapsing eigenspace are taken to span
/// the divergence certificate.
const CERTIFICATE_SNAP: f64 = 1e-4;

/// Smallest geodesic damping factor tried before taking the full step.
const MIN_DAMPING: f64 = 1.0 / 16.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BalanceMethod {
    FixedPoint,
    GeodesicDescent,
}

#[derive(Debug, Clone)]
pub struct BalanceOptions {
    pub method: BalanceMethod,
    /// Frobenius tolerance on `𝔉(g·ν) − β`.
    pub tol: f64,
    pub max_iter: usize,
    /// Starting point; the identity when absent.
    pub start: Option<GroupElement>,
}

impl Default for BalanceOptions {
    fn default() -> Self {
        BalanceOptions { method: BalanceMethod::FixedPoint, tol: 1e-10, max_iter: 2000, start: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub iteration: usize,
    pub residual: f64,
    /// `Ψ^M(ν, g_k)` at the current iterate.
    pub kempf_ness: f64,
}

#[derive(Debug, Clone)]
pub enum BalanceVerdict {
    Converged,
    /// The iterates degenerate; the subspace carries too much mass.
    DivergedWithCertificate(Subspace),
    MaxIterations,
}

impl BalanceVerdict {
    pub fn is_converged(&self) -> bool {
        matches!(self, BalanceVerdict::Converged)
    }
}

#[derive(Debug, Clone)]
pub struct BalanceResult {
    pub g: GroupElement,
    pub residual: f64,
    pub iterations: usize,
    pub trace: Vec<TraceRow>,
    pub verdict: BalanceVerdict,
}

impl BalanceResult {
    /// `S = g*·g`.
    pub fn scatter(&self) -> CMatrix {
        self.g.gram()
    }
}

/// Solves `𝔉(g·ν) = ρ − Id/(n+1)`, with `ρ = Id/(n+1)` when no target is
/// given. Non-trivial targets are delegated to [`solve_target`].
pub fn balance(
    nu: &AtomicMeasure,
    target_rho: Option<&CMatrix>,
    options: &BalanceOptions,
) -> Result<BalanceResult> {
    validate_options(nu, options)?;
    if let Some(rho) = target_rho {
        let beta = target_beta(rho, nu.dim())?;
        if frobenius(&beta) > 0.0 {
            return solve_target(nu, rho, options);
        }
    }
    match options.method {
        BalanceMethod::FixedPoint => tyler(nu, options),
        BalanceMethod::GeodesicDescent => descent(nu, options),
    }
}

fn validate_options(nu: &AtomicMeasure, options: &BalanceOptions) -> Result<()> {
    if !(options.tol > 0.0) || !options.tol.is_finite() {
        return Err(Error::InvalidParameter("tol must be positive"));
    }
    if let Some(start) = &options.start {
        if start.dim() != nu.dim() {
            return Err(Error::DimensionMismatch { expected: nu.dim(), found: start.dim() });
        }
    }
    Ok(())
}

/// `ρ − Id/(n+1)` after checking that `ρ` is Hermitian, positive definite
/// (eigenvalues ≥ 1e-10) and of unit trace.
fn target_beta(rho: &CMatrix, n: usize) -> Result<CMatrix> {
    let dim = n + 1;
    if rho.nrows() != dim || rho.ncols() != dim {
        return Err(Error::DimensionMismatch { expected: dim, found: rho.nrows() });
    }
    if rho.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::NotPositiveTarget);
    }
    if linalg::hermitian_defect(rho) > 1e-12 * frobenius(rho).max(1.0) {
        return Err(Error::NotHermitian);
    }
    if (linalg::trace(rho).re - 1.0).abs() > 1e-10 {
        return Err(Error::NotPositiveTarget);
    }
    let (values, _) = hermitian_eigen(rho);
    if values[0] < 1e-10 {
        return Err(Error::NotPositiveTarget);
    }
    let mut beta = hermitian_part(rho);
    for i in 0..dim {
        beta[(i, i)] -= real(1.0 / dim as f64);
    }
    Ok(beta)
}

/// `‖𝔉(g·ν) − β‖_F`.
fn residual_of(g: &CMatrix, nu: &AtomicMeasure, beta: Option<&CMatrix>) -> Result<f64> {
    let m = momentum_after(g, nu)?;
    Ok(match beta {
        Some(b) => frobenius(&(m.matrix() - b)),
        None => m.frobenius_norm(),
    })
}

fn psi(nu: &AtomicMeasure, g: &CMatrix) -> Result<f64> {
    kempf_ness(nu, &GroupElement::new(g.clone())?)
}

/// Normalizes a positive definite matrix to unit determinant.
fn unit_det(s: &CMatrix) -> CMatrix {
    let (values, vectors) = hermitian_eigen(s);
    let mean_log = values.iter().map(|v| v.max(f64::MIN_POSITIVE).ln()).sum::<f64>()
        / values.len() as f64;
    let scaled: Vec<f64> = values.iter().map(|v| v / mean_log.exp()).collect();
    linalg::from_eigen(&scaled, &vectors)
}

fn condition(s: &CMatrix) -> f64 {
    let (values, _) = hermitian_eigen(s);
    let lo = values[0];
    let hi = *values.last().unwrap();
    if lo <= 0.0 {
        f64::INFINITY
    } else {
        hi / lo
    }
}

/// Geodesic interpolation `S #_α T = S^½ (S^-½ T S^-½)^α S^½`.
fn geodesic_step(s: &CMatrix, t: &CMatrix, alpha: f64) -> CMatrix {
    if alpha == 1.0 {
        return t.clone();
    }
    let half = linalg::hermitian_function(s, |x| x.max(0.0).sqrt());
    let inv_half = linalg::hermitian_function(s, |x| 1.0 / x.max(f64::MIN_POSITIVE).sqrt());
    let inner = hermitian_part(&(&inv_half * t * &inv_half));
    let power = linalg::hermitian_function(&inner, |x| x.max(f64::MIN_POSITIVE).powf(alpha));
    hermitian_part(&(&half * power * &half))
}

/// One undamped Tyler update of `S`.
fn tyler_map(nu: &AtomicMeasure, s: &CMatrix) -> CMatrix {
    let dim = s.nrows();
    let mut acc = CMatrix::zeros(dim, dim);
    for atom in nu.atoms() {
        let z = atom.point.coeffs();
        let q = linalg::inner(z, &(s * z)).re.max(f64::MIN_POSITIVE);
        acc += z * z.adjoint() * real(atom.weight / q);
    }
    // the sum is singular when the atoms do not span; flooring its
    // spectrum turns that into an immediately ill-conditioned S
    let (values, vectors) = hermitian_eigen(&acc);
    let top = values.last().copied().unwrap_or(1.0).max(f64::MIN_POSITIVE);
    let inverse: Vec<f64> = values.iter().map(|v| 1.0 / v.max(top * 1e-16)).collect();
    unit_det(&linalg::from_eigen(&inverse, &vectors))
}

fn tyler(nu: &AtomicMeasure, options: &BalanceOptions) -> Result<BalanceResult> {
    let mut s = match &options.start {
        Some(g) => unit_det(&g.gram()),
        None => linalg::identity(nu.dim() + 1),
    };
    let mut g = linalg::sqrtm_psd(&s);
    let mut residual = residual_of(&g, nu, None)?;
    let mut trace = alloc::vec![TraceRow { iteration: 0, residual, kempf_ness: psi(nu, &g)? }];
    let mut iteration = 0;
    loop {
        if residual <= options.tol {
            return finish(nu, g, residual, iteration, trace, BalanceVerdict::Converged);
        }
        if condition(&s) > DIVERGENCE_CONDITION {
            let cert = certificate(nu, &s);
            return finish(nu, g, residual, iteration, trace, BalanceVerdict::DivergedWithCertificate(cert));
        }
        if iteration >= options.max_iter {
            return finish(nu, g, residual, iteration, trace, BalanceVerdict::MaxIterations);
        }
        iteration += 1;
        let target = tyler_map(nu, &s);
        let mut alpha = 1.0;
        let (next_s, next_g, next_residual) = loop {
            let candidate = unit_det(&geodesic_step(&s, &target, alpha));
            let candidate_g = linalg::sqrtm_psd(&candidate);
            let r = match residual_of(&candidate_g, nu, None) {
                Ok(r) => r,
                Err(Error::NumericalDegeneracy) => f64::INFINITY,
                Err(e) => return Err(e),
            };
            // a degenerating S is a divergence signal, not a reason to damp
            if r <= residual || condition(&candidate) > DIVERGENCE_CONDITION {
                break (candidate, candidate_g, r);
            }
            if alpha <= MIN_DAMPING {
                // the undamped map never increases the Kempf-Ness value
                let full = unit_det(&target);
                let full_g = linalg::sqrtm_psd(&full);
                let r = residual_of(&full_g, nu, None).unwrap_or(f64::INFINITY);
                break (full, full_g, r);
            }
            alpha *= 0.5;
        };
        s = next_s;
        g = next_g;
        residual = next_residual;
        let kn = psi(nu, &g).unwrap_or(f64::NAN);
        trace.push(TraceRow { iteration, residual, kempf_ness: kn });
    }
}

fn descent(nu: &AtomicMeasure, options: &BalanceOptions) -> Result<BalanceResult> {
    let mut g = match &options.start {
        Some(g) => g.matrix().clone(),
        None => linalg::identity(nu.dim() + 1),
    };
    let mut value = psi(nu, &g)?;
    let mut m = momentum_after(&g, nu)?;
    let mut residual = m.frobenius_norm();
    let mut trace = alloc::vec![TraceRow { iteration: 0, residual, kempf_ness: value }];
    let mut iteration = 0;
    let mut step = 1.0;
    loop {
        if residual <= options.tol {
            let p = linalg::sqrtm_psd(&unit_det(&hermitian_part(&(g.adjoint() * &g))));
            return finish(nu, p, residual, iteration, trace, BalanceVerdict::Converged);
        }
        let s = hermitian_part(&(g.adjoint() * &g));
        if condition(&s) > DIVERGENCE_CONDITION {
            let cert = certificate(nu, &s);
            let p = linalg::sqrtm_psd(&unit_det(&s));
            return finish(nu, p, residual, iteration, trace, BalanceVerdict::DivergedWithCertificate(cert));
        }
        if iteration >= options.max_iter {
            let p = linalg::sqrtm_psd(&unit_det(&s));
            return finish(nu, p, residual, iteration, trace, BalanceVerdict::MaxIterations);
        }
        iteration += 1;
        let slope = residual * residual;
        let mut s_try = (2.0 * step).min(1e3);
        let (next_g, next_value, next_m) = loop {
            let candidate = linalg::expm_hermitian(m.matrix(), -s_try) * &g;
            let predicted = s_try * slope;
            // below this the Kempf-Ness decrease is lost in rounding and the
            // residual decides instead
            let resolvable = predicted > 1e-12 * (1.0 + value.abs());
            let accepted = match (psi(nu, &candidate), momentum_after(&candidate, nu)) {
                (Ok(v), Ok(cm)) => {
                    let ok = if resolvable {
                        v <= value - 1e-4 * predicted
                    } else {
                        v <= value + 1e-14 * (1.0 + value.abs()) && cm.frobenius_norm() < residual
                    };
                    ok.then_some((v, cm))
                }
                (Err(e), _) | (_, Err(e)) if s_try < 1e-12 => return Err(e),
                _ => None,
            };
            match accepted {
                Some((v, cm)) => break (candidate, v, cm),
                None if s_try < 1e-12 => {
                    let p = linalg::sqrtm_psd(&unit_det(&s));
                    return finish(nu, p, residual, iteration, trace, BalanceVerdict::MaxIterations);
                }
                None => s_try *= 0.5,
            }
        };
        step = s_try;
        g = next_g;
        value = next_value;
        m = next_m;
        residual = m.frobenius_norm();
        trace.push(TraceRow { iteration, residual, kempf_ness: value });
    }
}

fn finish(
    _nu: &AtomicMeasure,
    g: CMatrix,
    residual: f64,
    iterations: usize,
    trace: Vec<TraceRow>,
    verdict: BalanceVerdict,
) -> Result<BalanceResult> {
    Ok(BalanceResult { g: GroupElement::new(g)?, residual, iterations, trace, verdict })
}

/// Subspace on which `S` collapses: the eigenvectors below the largest
/// logarithmic gap of its spectrum, snapped to the span of the atoms close
/// to it when there are any.
fn certificate(nu: &AtomicMeasure, s: &CMatrix) -> Subspace {
    let (values, vectors) = hermitian_eigen(s);
    let dim = values.len();
    let logs: Vec<f64> = values.iter().map(|v| v.max(f64::MIN_POSITIVE).ln()).collect();
    let mut cut = 0;
    let mut widest = f64::NEG_INFINITY;
    for i in 0..dim - 1 {
        let gap = logs[i + 1] - logs[i];
        if gap > widest {
            widest = gap;
            cut = i;
        }
    }
    let mut small = CMatrix::zeros(dim, cut + 1);
    for j in 0..=cut {
        small.set_column(j, &vectors.column(j));
    }
    let near: Vec<usize> = (0..nu.len())
        .filter(|&i| linalg::residual_norm(&small, nu.atoms()[i].point.coeffs()) <= CERTIFICATE_SNAP)
        .collect();
    if !near.is_empty() {
        let span: Vec<CVector> = near.iter().map(|&i| nu.atoms()[i].point.coeffs().clone()).collect();
        let basis = linalg::orthonormal_basis(&span, 1e-6);
        if basis.ncols() < dim {
            // recollect atoms by the snapped span
            let atoms: Vec<usize> = (0..nu.len())
                .filter(|&i| linalg::residual_norm(&basis, nu.atoms()[i].point.coeffs()) <= SPAN_RANK_TOL.max(1e-8))
                .collect();
            let mass = nu.mass_of(&atoms);
            return Subspace::new(basis, atoms, mass);
        }
    }
    let mass = nu.mass_of(&near);
    Subspace::new(small, near, mass)
}

/// `g·ν` without merging atoms.
fn moved_measure(nu: &AtomicMeasure, g: &CMatrix) -> Result<AtomicMeasure> {
    let atoms = nu
        .atoms()
        .iter()
        .map(|a| Ok((ProjectivePoint::new(g * a.point.coeffs())?, a.weight)))
        .collect::<Result<Vec<_>>>()?;
    AtomicMeasure::with_merge_tol(nu.dim(), atoms, 0.0)
}

/// Orthonormal basis of the traceless Hermitian `(n+1)×(n+1)` matrices under
/// the trace form: orthonormalized `E_jj − E_{j+1,j+1}`, then the symmetric
/// and antisymmetric off-diagonal pairs.
pub fn hermitian_basis(n: usize) -> Vec<CMatrix> {
    let dim = n + 1;
    let mut basis: Vec<CMatrix> = Vec::with_capacity(dim * dim - 1);
    for j in 0..n {
        let mut h = CMatrix::zeros(dim, dim);
        h[(j, j)] = real(1.0);
        h[(j + 1, j + 1)] = real(-1.0);
        for b in &basis {
            let proj = linalg::trace_pairing(&h, b);
            h -= b * real(proj);
        }
        let norm = frobenius(&h);
        basis.push(h / real(norm));
    }
    let r = core::f64::consts::FRAC_1_SQRT_2;
    for j in 0..dim {
        for k in (j + 1)..dim {
            let mut sym = CMatrix::zeros(dim, dim);
            sym[(j, k)] = real(r);
            sym[(k, j)] = real(r);
            basis.push(sym);
            let mut anti = CMatrix::zeros(dim, dim);
            anti[(j, k)] = c(0.0, -r);
            anti[(k, j)] = c(0.0, r);
            basis.push(anti);
        }
    }
    basis
}

/// Gram matrix `(j,k) ↦ Σᵢ wᵢ·2·Re[(A_j zᵢ)*(Id − zᵢzᵢ*)(A_k zᵢ)]` of the
/// fundamental vector fields in `L²(ν)`. Entry `(j,k)` is the derivative of
/// `tr(𝔉(exp(tA_j)·ν)·A_k)` at `t = 0`.
pub fn gram_operator<B: Borrow<CMatrix>>(nu: &AtomicMeasure, basis: &[B]) -> Result<DMatrix<f64>> {
    let dim = nu.dim() + 1;
    let basis: Vec<&CMatrix> = basis.iter().map(Borrow::borrow).collect();
    if let Some(b) = basis.iter().find(|b| b.nrows() != dim) {
        return Err(Error::DimensionMismatch { expected: dim, found: b.nrows() });
    }
    let k = basis.len();
    let mut gram = DMatrix::<f64>::zeros(k, k);
    for atom in nu.atoms() {
        let z = atom.point.coeffs();
        // tangential parts (Id − zz*)·A_j·z
        let fields: Vec<CVector> = basis
            .iter()
            .map(|b| {
                let az = *b * z;
                let along = linalg::inner(z, &az);
                az - z * along
            })
            .collect();
        for j in 0..k {
            for l in j..k {
                let v = 2.0 * atom.weight * linalg::inner(&fields[j], &fields[l]).re;
                gram[(j, l)] += v;
                if l != j {
                    gram[(l, j)] += v;
                }
            }
        }
    }
    Ok(gram)
}

/// Newton iteration for `𝔉(g·ν) = ρ − Id/(n+1)` on a stable measure, with
/// backtracking on `‖𝔉 − β‖²` and gradient steps where the Gram matrix is
/// singular. The returned `g` is the actual iterate (targets other than
/// `Id/(n+1)` are not `K`-invariant).
pub fn solve_target(
    nu: &AtomicMeasure,
    rho: &CMatrix,
    options: &BalanceOptions,
) -> Result<BalanceResult> {
    validate_options(nu, options)?;
    let beta = target_beta(rho, nu.dim())?;
    match classify(nu, DEFAULT_TOL_EQ) {
        Ok(v) if v.kind != StabilityKind::Stable => return Err(Error::NotStable),
        // above the enumeration cap the check is skipped
        Ok(_) | Err(Error::TooManyAtoms { .. }) => {}
        Err(e) => return Err(e),
    }
    let basis = hermitian_basis(nu.dim());
    let mut g = match &options.start {
        Some(g) => g.matrix().clone(),
        None => linalg::identity(nu.dim() + 1),
    };
    let mut r = momentum_after(&g, nu)?.matrix() - &beta;
    let mut residual = frobenius(&r);
    let mut trace = alloc::vec![TraceRow { iteration: 0, residual, kempf_ness: psi(nu, &g)? }];
    let mut iteration = 0;
    loop {
        if residual <= options.tol {
            return finish(nu, g, residual, iteration, trace, BalanceVerdict::Converged);
        }
        if iteration >= options.max_iter {
            return finish(nu, g, residual, iteration, trace, BalanceVerdict::MaxIterations);
        }
        iteration += 1;
        let gram = gram_operator(&moved_measure(nu, &g)?, &basis)?;
        let rhs = nalgebra::DVector::from_iterator(
            basis.len(),
            basis.iter().map(|b| -linalg::trace_pairing(&r, b)),
        );
        let (values, _) = linalg::real_symmetric_eigen(&gram);
        let top = values.last().copied().unwrap_or(0.0);
        let newton = if values[0] > 1e-12 * top.max(f64::MIN_POSITIVE) {
            gram.clone().cholesky().map(|ch| ch.solve(&rhs))
        } else {
            None
        };
        let (coeffs, is_newton) = match newton {
            Some(v) => (v, true),
            // gradient of ½‖𝔉 − β‖² in these coordinates is −Gram·rhs
            None => (&gram * &rhs, false),
        };
        let mut direction = CMatrix::zeros(nu.dim() + 1, nu.dim() + 1);
        for (b, &x) in basis.iter().zip(coeffs.iter()) {
            direction += b * real(x);
        }
        let mut step = 1.0;
        let current = residual * residual;
        let accepted = loop {
            let candidate = linalg::expm_hermitian(&direction, step) * &g;
            if let Ok(cm) = momentum_after(&candidate, nu) {
                let cr = cm.matrix() - &beta;
                let value = frobenius(&cr);
                let enough = if is_newton {
                    value * value <= (1.0 - 1e-4 * step) * current
                } else {
                    value < residual
                };
                if enough {
                    break Some((candidate, cr, value));
                }
            }
            step *= 0.5;
            if step < 1e-12 {
                break None;
            }
        };
        let Some((next_g, next_r, next_residual)) = accepted else {
            return finish(nu, g, residual, iteration, trace, BalanceVerdict::MaxIterations);
        };
        g = GroupElement::new(next_g)?.into_matrix();
        r = next_r;
        residual = next_residual;
        trace.push(TraceRow { iteration, residual, kempf_ness: psi(nu, &g)? });
    }
}
