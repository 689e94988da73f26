//! Dense numerical primitives shared by the rest of the crate.
//!
//! Storage and basic arithmetic come from `nalgebra`; the spectral routines
//! (Jacobi eigensolver, pseudo-inverse, conjugate gradients, power method)
//! are implemented here so that their tolerances and failure modes are
//! explicit and deterministic.

use nalgebra::{ComplexField, DMatrix, DVector};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

pub type CVec = DVector<Complex64>;
pub type CMat = DMatrix<Complex64>;
pub type RVec = DVector<f64>;
pub type RMat = DMatrix<f64>;

/// Default relative tolerance for spectral routines.
pub const DEFAULT_TOL: f64 = 1e-12;
/// Default relative cutoff below which eigenvalues count as zero.
pub const DEFAULT_RANK_TOL: f64 = 1e-10;

const MAX_SWEEPS: usize = 80;

/// Scalars the eigensolver accepts: `f64` (real symmetric) and `Complex64`
/// (Hermitian).
pub trait Field: ComplexField<RealField = f64> + Copy {}
impl<T: ComplexField<RealField = f64> + Copy> Field for T {}

/// Complex inner product, linear in the first argument:
/// `<x, y> = sum_i x_i conj(y_i)`.
pub fn inner(x: &CVec, y: &CVec) -> Complex64 {
    y.dotc(x)
}

/// Spectrum of a self-adjoint matrix, eigenvalues sorted descending.
///
/// Column `k` of `vectors` is the unit eigenvector for `values[k]`, with its
/// largest-modulus entry rotated to be real and positive.
#[derive(Debug, Clone)]
pub struct EigDecomposition<T: Field> {
    pub values: Vec<f64>,
    pub vectors: DMatrix<T>,
}

impl<T: Field> EigDecomposition<T> {
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn vector(&self, k: usize) -> DVector<T> {
        self.vectors.column(k).into_owned()
    }

    /// Largest absolute eigenvalue (the spectral norm).
    pub fn spectral_norm(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
    }

    /// Rebuilds `sum_k g(lambda_k) e_k e_k^*`.
    pub fn reconstruct_with(&self, mut g: impl FnMut(f64) -> f64) -> DMatrix<T> {
        let n = self.dim();
        let mut out = DMatrix::<T>::zeros(n, n);
        for (k, &lam) in self.values.iter().enumerate() {
            let w = g(lam);
            if w == 0.0 {
                continue;
            }
            let e = self.vectors.column(k);
            for j in 0..n {
                let ej = e[j].conjugate().scale(w);
                for i in 0..n {
                    out[(i, j)] += e[i] * ej;
                }
            }
        }
        out
    }
}

/// Frobenius norm of `m - m^*`.
pub fn asymmetry<T: Field>(m: &DMatrix<T>) -> f64 {
    let mut acc = 0.0;
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            acc += (m[(i, j)] - m[(j, i)].conjugate()).modulus_squared();
        }
    }
    acc.sqrt()
}

/// `(m + m^*) / 2`.
pub fn symmetrize<T: Field>(m: &DMatrix<T>) -> DMatrix<T> {
    let adj = m.adjoint();
    (m + adj).unscale(2.0)
}

fn check_square<T: Field>(m: &DMatrix<T>) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(Error::dim(m.nrows(), m.ncols()));
    }
    if m.iter().any(|v| !(v.real().is_finite() && v.imaginary().is_finite())) {
        return Err(Error::NonFinite);
    }
    Ok(())
}

/// Full eigendecomposition of a Hermitian (or real symmetric) matrix by
/// cyclic Jacobi rotations.
///
/// Fails with `NotHermitian` when `||M - M^*||_F > tol * ||M||_F`; the
/// Hermitian part is used otherwise.
pub fn hermitian_eig<T: Field>(m: &DMatrix<T>, tol: f64) -> Result<EigDecomposition<T>> {
    check_square(m)?;
    let scale = m.norm();
    let asym = asymmetry(m);
    let allowed = tol.max(f64::EPSILON) * scale.max(f64::MIN_POSITIVE);
    if asym > allowed {
        return Err(Error::NotHermitian { asymmetry: asym, tolerance: allowed });
    }
    let (values, vectors) = jacobi(symmetrize(m))?;
    Ok(EigDecomposition { values, vectors })
}

/// Eigenvalues only, descending.
pub fn hermitian_eigvals<T: Field>(m: &DMatrix<T>, tol: f64) -> Result<Vec<f64>> {
    hermitian_eig(m, tol).map(|e| e.values)
}

fn jacobi<T: Field>(mut a: DMatrix<T>) -> Result<(Vec<f64>, DMatrix<T>)> {
    let n = a.nrows();
    let mut v = DMatrix::<T>::identity(n, n);
    let total = a.norm();
    let mut converged = n <= 1 || total == 0.0;
    let mut sweep = 0;
    while !converged {
        if sweep == MAX_SWEEPS {
            return Err(Error::NoConvergence { sweeps: MAX_SWEEPS });
        }
        sweep += 1;
        for p in 0..n {
            for q in (p + 1)..n {
                rotate(&mut a, &mut v, p, q);
            }
        }
        let mut off = 0.0;
        for q in 0..n {
            for p in 0..q {
                off += a[(p, q)].modulus_squared();
            }
        }
        converged = off.sqrt() <= 0.25 * f64::EPSILON * total;
    }

    let mut order: Vec<usize> = (0..n).collect();
    let diag: Vec<f64> = (0..n).map(|i| a[(i, i)].real()).collect();
    order.sort_by(|&i, &j| diag[j].total_cmp(&diag[i]));
    let values = order.iter().map(|&i| diag[i]).collect();
    let mut vectors = DMatrix::<T>::zeros(n, n);
    for (k, &i) in order.iter().enumerate() {
        let mut col = v.column(i).into_owned();
        normalize_phase(&mut col);
        vectors.set_column(k, &col);
    }
    Ok((values, vectors))
}

/// One Jacobi rotation zeroing entry (p, q).
fn rotate<T: Field>(a: &mut DMatrix<T>, v: &mut DMatrix<T>, p: usize, q: usize) {
    let apq = a[(p, q)];
    let g = apq.modulus();
    if g == 0.0 {
        return;
    }
    let app = a[(p, p)].real();
    let aqq = a[(q, q)].real();
    // Negligible relative to both diagonal entries: zero it outright.
    if g * 1e18 < app.abs() && g * 1e18 < aqq.abs() {
        a[(p, q)] = T::zero();
        a[(q, p)] = T::zero();
        return;
    }
    let theta = (aqq - app) / (2.0 * g);
    let t = if theta.abs() > 1e150 {
        0.5 / theta
    } else {
        theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
    };
    let t = if theta == 0.0 { 1.0 } else { t };
    let c = 1.0 / (1.0 + t * t).sqrt();
    let s = t * c;
    let omega = apq.unscale(g);
    let omega_bar = omega.conjugate();
    let n = a.nrows();

    // Columns: A <- A U with U_pp = c, U_pq = s, U_qp = -s conj(w), U_qq = c conj(w).
    for k in 0..n {
        let akp = a[(k, p)];
        let akq = a[(k, q)];
        a[(k, p)] = akp.scale(c) - (akq * omega_bar).scale(s);
        a[(k, q)] = akp.scale(s) + (akq * omega_bar).scale(c);
        let vkp = v[(k, p)];
        let vkq = v[(k, q)];
        v[(k, p)] = vkp.scale(c) - (vkq * omega_bar).scale(s);
        v[(k, q)] = vkp.scale(s) + (vkq * omega_bar).scale(c);
    }
    // Rows: A <- U^* A.
    for k in 0..n {
        let apk = a[(p, k)];
        let aqk = a[(q, k)];
        a[(p, k)] = apk.scale(c) - (aqk * omega).scale(s);
        a[(q, k)] = apk.scale(s) + (aqk * omega).scale(c);
    }
    a[(p, q)] = T::zero();
    a[(q, p)] = T::zero();
    a[(p, p)] = T::from_real(app - t * g);
    a[(q, q)] = T::from_real(aqq + t * g);
}

/// Rotates a vector so its largest-modulus entry is real and positive.
pub fn normalize_phase<T: Field>(v: &mut DVector<T>) {
    let mut best = 0;
    let mut best_mod = -1.0;
    for (i, x) in v.iter().enumerate() {
        let m = x.modulus();
        if m > best_mod * (1.0 + 1e-12) {
            best = i;
            best_mod = m;
        }
    }
    if best_mod > 0.0 {
        let phase = v[best].unscale(best_mod).conjugate();
        for x in v.iter_mut() {
            *x *= phase;
        }
    }
}

/// Moore-Penrose pseudo-inverse of a self-adjoint matrix. Eigenvalues with
/// `|lambda| <= rank_tol * |lambda|_max` are treated as zero.
pub fn pseudo_inverse<T: Field>(m: &DMatrix<T>, rank_tol: f64) -> Result<DMatrix<T>> {
    let eig = hermitian_eig(m, DEFAULT_TOL.max(rank_tol * 1e-2))?;
    Ok(pinv_from_eig(&eig, rank_tol))
}

pub fn pinv_from_eig<T: Field>(eig: &EigDecomposition<T>, rank_tol: f64) -> DMatrix<T> {
    let cutoff = rank_tol * eig.spectral_norm();
    eig.reconstruct_with(|lam| if lam.abs() > cutoff && lam != 0.0 { 1.0 / lam } else { 0.0 })
}

/// Numerical rank of a self-adjoint matrix.
pub fn numerical_rank(values: &[f64], rank_tol: f64) -> usize {
    let top = values.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
    if top == 0.0 {
        return 0;
    }
    values.iter().filter(|v| v.abs() > rank_tol * top).count()
}

#[derive(Debug, Clone)]
pub struct CgOutcome {
    pub x: RVec,
    pub iterations: usize,
    /// `||A x - b|| / ||b||` at exit (0 when `b = 0`).
    pub relative_residual: f64,
    pub converged: bool,
}

/// Conjugate gradients for a symmetric positive semidefinite operator,
/// started at zero.
pub fn cg_solve(
    apply: impl FnMut(&RVec) -> RVec,
    b: &RVec,
    tol: f64,
    max_iter: usize,
) -> Result<CgOutcome> {
    cg_solve_from(apply, b, &RVec::zeros(b.len()), tol, max_iter)
}

/// Conjugate gradients started at `x0`. Every iterate has energy
/// `x^T A x / 2 - b^T x` no larger than that of `x0`.
pub fn cg_solve_from(
    mut apply: impl FnMut(&RVec) -> RVec,
    b: &RVec,
    x0: &RVec,
    tol: f64,
    max_iter: usize,
) -> Result<CgOutcome> {
    if x0.len() != b.len() {
        return Err(Error::dim(b.len(), x0.len()));
    }
    let bnorm = b.norm();
    let mut x = x0.clone();
    let ax = apply(&x);
    if ax.len() != b.len() {
        return Err(Error::dim(b.len(), ax.len()));
    }
    let mut r = b - ax;
    let target = tol * bnorm;
    let mut rs = r.norm_squared();
    let mut p = r.clone();
    let mut iterations = 0;
    let mut converged = rs.sqrt() <= target;
    while !converged && iterations < max_iter {
        let ap = apply(&p);
        let pap = p.dot(&ap);
        let slack = 1e3 * f64::EPSILON * p.norm() * ap.norm();
        if pap < -slack {
            return Err(Error::IndefiniteOperator { curvature: pap });
        }
        if pap <= 0.0 {
            break;
        }
        let alpha = rs / pap;
        x.axpy(alpha, &p, 1.0);
        r.axpy(-alpha, &ap, 1.0);
        let rs_new = r.norm_squared();
        iterations += 1;
        if rs_new.sqrt() <= target {
            converged = true;
            rs = rs_new;
            break;
        }
        p = &r + p * (rs_new / rs);
        rs = rs_new;
    }
    let relative_residual = if bnorm > 0.0 { rs.sqrt() / bnorm } else { rs.sqrt() };
    Ok(CgOutcome { x, iterations, relative_residual, converged })
}

#[derive(Debug, Clone)]
pub struct PowerResult {
    pub value: f64,
    pub vector: CVec,
    pub iterations: usize,
    /// Set when `max_iter` ran out before the residual test passed, which
    /// happens when the top eigenvalue gap is tiny.
    pub slow_convergence: bool,
}

/// Power iteration for the principal eigenpair of a Hermitian PSD matrix.
///
/// The start vector is drawn from a ChaCha8 stream seeded with `seed`.
/// Stops when `||M v - lambda v|| <= tol * ||M v||`.
pub fn power_method(m: &CMat, seed: u64, tol: f64, max_iter: usize) -> Result<PowerResult> {
    check_square(m)?;
    let n = m.nrows();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v = CVec::from_fn(n, |_, _| {
        Complex64::new(StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng))
    });
    v.unscale_mut(v.norm());
    let mut value = 0.0;
    let mut iterations = 0;
    let mut done = false;
    while iterations < max_iter {
        let w = m * &v;
        let wn = w.norm();
        iterations += 1;
        if wn == 0.0 {
            value = 0.0;
            done = true;
            break;
        }
        value = inner(&w, &v).re;
        let resid = (&w - &v * Complex64::from(value)).norm();
        v = w.unscale(wn);
        if resid <= tol * wn {
            done = true;
            break;
        }
    }
    if done {
        value = inner(&(m * &v), &v).re;
    }
    normalize_phase(&mut v);
    Ok(PowerResult { value, vector: v, iterations, slow_convergence: !done })
}

/// Singular values of a real matrix, descending (delegates to `nalgebra`'s
/// bidiagonal SVD, which keeps small singular values accurate relative to
/// the largest one).
pub fn singular_values(m: &RMat) -> Vec<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Vec::new();
    }
    let mut s: Vec<f64> = m.clone().svd(false, false).singular_values.iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// `[re, im]` pairs, the on-disk layout for complex vectors.
pub fn to_pairs(v: &CVec) -> Vec<[f64; 2]> {
    v.iter().map(|z| [z.re, z.im]).collect()
}

pub fn from_pairs(p: &[[f64; 2]]) -> CVec {
    CVec::from_iterator(p.len(), p.iter().map(|q| Complex64::new(q[0], q[1])))
}

/// Lower bound on the spectrum of a Hermitian matrix from Gershgorin discs.
pub fn gershgorin_lower(m: &CMat) -> f64 {
    (0..m.nrows())
        .map(|i| {
            let radius: f64 = (0..m.ncols()).filter(|&j| j != i).map(|j| m[(i, j)].norm()).sum();
            m[(i, i)].re - radius
        })
        .fold(f64::INFINITY, f64::min)
}

/// `x y^*` for complex vectors.
pub fn outer(x: &CVec, y: &CVec) -> CMat {
    x * y.adjoint()
}

/// Real `x y^T`.
pub fn outer_real(x: &RVec, y: &RVec) -> RMat {
    x * y.transpose()
}

/// LU determinant of a small complex square matrix (partial pivoting).
pub fn determinant(m: &CMat) -> Complex64 {
    let n = m.nrows();
    let mut a = m.clone();
    let mut det = Complex64::new(1.0, 0.0);
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[(i, col)].norm().total_cmp(&a[(j, col)].norm()))
            .unwrap_or(col);
        if a[(pivot, col)].norm() == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        if pivot != col {
            a.swap_rows(pivot, col);
            det = -det;
        }
        let d = a[(col, col)];
        det *= d;
        for i in (col + 1)..n {
            let f = a[(i, col)] / d;
            for j in col..n {
                let sub = f * a[(col, j)];
                a[(i, j)] -= sub;
            }
        }
    }
    det
}
