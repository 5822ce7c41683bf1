//! Dense complex linear algebra helpers shared by all modules.

use alloc::vec::Vec;

use nalgebra::{Complex, DMatrix, DVector};
#[allow(unused_imports)]
use num_traits::Float;

pub type C64 = Complex<f64>;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

#[inline]
pub(crate) fn c(re: f64, im: f64) -> C64 {
    Complex::new(re, im)
}

#[inline]
pub(crate) fn real(re: f64) -> C64 {
    Complex::new(re, 0.0)
}

pub fn identity(dim: usize) -> CMatrix {
    CMatrix::identity(dim, dim)
}

pub fn frobenius(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Real part of `tr(a·b)`; the inner product on Hermitian matrices.
pub fn trace_pairing(a: &CMatrix, b: &CMatrix) -> f64 {
    let n = a.nrows();
    let mut acc = 0.0;
    for i in 0..n {
        for k in 0..n {
            acc += (a[(i, k)] * b[(k, i)]).re;
        }
    }
    acc
}

pub fn trace(m: &CMatrix) -> C64 {
    (0..m.nrows()).map(|i| m[(i, i)]).sum()
}

/// `(m + m*)/2`.
pub fn hermitian_part(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()) * real(0.5)
}

/// Frobenius norm of the anti-Hermitian part.
pub fn hermitian_defect(m: &CMatrix) -> f64 {
    frobenius(&(m - m.adjoint()))
}

/// Eigenvalues in ascending order with the matching unit eigenvectors as
/// columns. The input is symmetrized first.
pub fn hermitian_eigen(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let dim = m.nrows();
    let mut a = hermitian_part(m);
    let mut v = identity(dim);
    let scale = frobenius(&a);
    if dim > 1 && scale > 0.0 && scale.is_finite() {
        for _ in 0..MAX_JACOBI_SWEEPS {
            let mut rotated = false;
            for p in 0..dim - 1 {
                for q in p + 1..dim {
                    let b = a[(p, q)];
                    let modulus = b.norm();
                    if modulus <= JACOBI_EPS * scale {
                        continue;
                    }
                    rotated = true;
                    let (c0, s0) = jacobi_angle(a[(p, p)].re, a[(q, q)].re, modulus);
                    let phase = b.unscale(modulus).conj();
                    let u = [[real(c0), real(s0)], [real(-s0) * phase, real(c0) * phase]];
                    rotate_columns(&mut a, p, q, &u);
                    rotate_rows(&mut a, p, q, &u);
                    a[(p, q)] = real(0.0);
                    a[(q, p)] = real(0.0);
                    a[(p, p)] = real(a[(p, p)].re);
                    a[(q, q)] = real(a[(q, q)].re);
                    rotate_columns(&mut v, p, q, &u);
                }
            }
            if !rotated {
                break;
            }
        }
    }
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&i, &j| a[(i, i)].re.total_cmp(&a[(j, j)].re));
    let values = order.iter().map(|&i| a[(i, i)].re).collect();
    let mut vectors = CMatrix::zeros(dim, dim);
    for (col, &i) in order.iter().enumerate() {
        vectors.set_column(col, &v.column(i));
    }
    (values, vectors)
}

/// Off-diagonal entries below this fraction of `‖A‖_F` are treated as zero.
const JACOBI_EPS: f64 = 1e-17;
const MAX_JACOBI_SWEEPS: usize = 64;

/// `(cos θ, sin θ)` of the rotation diagonalizing `[[a, b], [b, d]]`, `b > 0`.
fn jacobi_angle(a: f64, d: f64, b: f64) -> (f64, f64) {
    let tau = (d - a) / (2.0 * b);
    let t = if tau >= 0.0 {
        1.0 / (tau + (1.0 + tau * tau).sqrt())
    } else {
        -1.0 / (-tau + (1.0 + tau * tau).sqrt())
    };
    let c0 = 1.0 / (1.0 + t * t).sqrt();
    (c0, t * c0)
}

/// `M ← M·U` on columns `p, q`.
fn rotate_columns(m: &mut CMatrix, p: usize, q: usize, u: &[[C64; 2]; 2]) {
    for k in 0..m.nrows() {
        let (x, y) = (m[(k, p)], m[(k, q)]);
        m[(k, p)] = x * u[0][0] + y * u[1][0];
        m[(k, q)] = x * u[0][1] + y * u[1][1];
    }
}

/// `M ← U*·M` on rows `p, q`.
fn rotate_rows(m: &mut CMatrix, p: usize, q: usize, u: &[[C64; 2]; 2]) {
    for k in 0..m.ncols() {
        let (x, y) = (m[(p, k)], m[(q, k)]);
        m[(p, k)] = u[0][0].conj() * x + u[1][0].conj() * y;
        m[(q, k)] = u[0][1].conj() * x + u[1][1].conj() * y;
    }
}

/// `U·diag(f(λ))·U*` for Hermitian `m = U·diag(λ)·U*`.
pub fn hermitian_function(m: &CMatrix, f: impl Fn(f64) -> f64) -> CMatrix {
    let (values, vectors) = hermitian_eigen(m);
    from_eigen(&values.iter().map(|&x| f(x)).collect::<Vec<_>>(), &vectors)
}

pub(crate) fn from_eigen(values: &[f64], vectors: &CMatrix) -> CMatrix {
    let dim = vectors.nrows();
    let mut scaled = vectors.clone();
    for (j, &v) in values.iter().enumerate() {
        for i in 0..dim {
            scaled[(i, j)] *= v;
        }
    }
    let mut out = &scaled * vectors.adjoint();
    out = hermitian_part(&out);
    out
}

/// `exp(t·a)` for Hermitian `a`.
pub fn expm_hermitian(a: &CMatrix, t: f64) -> CMatrix {
    hermitian_function(a, |x| (t * x).exp())
}

/// Principal square root of a Hermitian positive semidefinite matrix.
pub fn sqrtm_psd(a: &CMatrix) -> CMatrix {
    hermitian_function(a, |x| x.max(0.0).sqrt())
}

/// Orthonormal basis (as columns) of the span of `vectors`, using singular
/// values above `rel_tol` times the largest one.
pub fn orthonormal_basis(vectors: &[CVector], rel_tol: f64) -> CMatrix {
    let Some(first) = vectors.first() else {
        return CMatrix::zeros(0, 0);
    };
    let dim = first.len();
    let mut m = CMatrix::zeros(dim, vectors.len());
    for (j, v) in vectors.iter().enumerate() {
        m.set_column(j, v);
    }
    orthonormal_columns(&m, rel_tol)
}

pub(crate) fn orthonormal_columns(m: &CMatrix, rel_tol: f64) -> CMatrix {
    let dim = m.nrows();
    let k = m.ncols();
    if k == 0 {
        return CMatrix::zeros(dim, 0);
    }
    // one-sided Jacobi: rotate column pairs until mutually orthogonal; the
    // column norms are then the singular values
    let mut w = m.clone();
    for _ in 0..MAX_JACOBI_SWEEPS {
        let mut rotated = false;
        for p in 0..k.saturating_sub(1) {
            for q in p + 1..k {
                let alpha = w.column(p).norm_squared();
                let beta = w.column(q).norm_squared();
                let gamma = w.column(p).dotc(&w.column(q));
                let modulus = gamma.norm();
                if modulus <= 1e-15 * (alpha * beta).sqrt() || modulus == 0.0 {
                    continue;
                }
                rotated = true;
                let (c0, s0) = jacobi_angle(alpha, beta, modulus);
                let phase = gamma.unscale(modulus).conj();
                let u = [[real(c0), real(s0)], [real(-s0) * phase, real(c0) * phase]];
                rotate_columns(&mut w, p, q, &u);
            }
        }
        if !rotated {
            break;
        }
    }
    let norms: Vec<f64> = (0..k).map(|j| w.column(j).norm()).collect();
    let top = norms.iter().copied().fold(0.0, f64::max);
    if top <= 0.0 || !top.is_finite() {
        return CMatrix::zeros(dim, 0);
    }
    let mut keep: Vec<(usize, f64)> =
        norms.iter().copied().enumerate().filter(|&(_, s)| s > rel_tol * top).collect();
    keep.sort_by(|a, b| b.1.total_cmp(&a.1));
    let mut basis = CMatrix::zeros(dim, keep.len());
    for (col, &(i, s)) in keep.iter().enumerate() {
        basis.set_column(col, &w.column(i).map(|z| z.unscale(s)));
    }
    basis
}

/// Orthogonal projector `B·B*` onto the span of orthonormal columns `B`.
pub fn projector(basis: &CMatrix) -> CMatrix {
    basis * basis.adjoint()
}

/// Norm of the component of `z` orthogonal to the span of the orthonormal
/// columns of `basis`.
pub fn residual_norm(basis: &CMatrix, z: &CVector) -> f64 {
    if basis.ncols() == 0 {
        return z.norm();
    }
    let coords = basis.adjoint() * z;
    (z - basis * coords).norm()
}

/// Hermitian inner product `⟨a, b⟩ = a*·b`.
pub fn inner(a: &CVector, b: &CVector) -> C64 {
    a.dotc(b)
}

/// Fubini–Study angle between two unit vectors, computed stably for both
/// nearly equal and nearly orthogonal inputs.
pub fn fs_angle(a: &CVector, b: &CVector) -> f64 {
    let overlap = inner(a, b);
    let perp = (b - a * overlap).norm();
    perp.atan2(overlap.norm())
}

/// Pairwise (tree) summation; the reduction order depends only on the length.
pub(crate) fn tree_sum<T, F>(len: usize, zero: &T, leaf: &F) -> T
where
    T: Clone + core::ops::Add<Output = T>,
    F: Fn(usize) -> T,
{
    fn go<T, F>(lo: usize, hi: usize, zero: &T, leaf: &F) -> T
    where
        T: Clone + core::ops::Add<Output = T>,
        F: Fn(usize) -> T,
    {
        match hi - lo {
            0 => zero.clone(),
            1 => leaf(lo),
            len => {
                let mid = lo + len / 2;
                go(lo, mid, zero, leaf) + go(mid, hi, zero, leaf)
            }
        }
    }
    go(0, len, zero, leaf)
}

/// Complex principal `k`-th root.
pub(crate) fn principal_root(z: C64, k: usize) -> C64 {
    let r = z.norm().powf(1.0 / k as f64);
    let arg = z.im.atan2(z.re) / k as f64;
    c(r * arg.cos(), r * arg.sin())
}

/// Real matrix helper: eigen-decomposition of a symmetric real matrix with
/// ascending eigenvalues.
pub fn real_symmetric_eigen(m: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let complex = m.map(real);
    let (values, vectors) = hermitian_eigen(&complex);
    (values, vectors.map(|z| z.re))
}
