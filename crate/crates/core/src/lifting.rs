//! Realification and lifted operators.
//!
//! `xi = j(x) = [Re x; Im x]` identifies `C^n` with `R^{2n}`; `J` is the
//! matrix of multiplication by `i` in that basis. For a frame vector `f_k`
//! with `phi_k = j(f_k)` the rank-two operator
//! `Phi_k = phi_k phi_k^T + J phi_k phi_k^T J^T` satisfies
//! `<Phi_k xi, xi> = |<x, f_k>|^2`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frames::Frame;
use crate::linalg::{self, inner, CMat, CVec, RMat, RVec, DEFAULT_TOL};

/// Relative threshold below which `<Phi_k xi, xi>` counts as zero.
pub const ZERO_TOL: f64 = 1e-12;

pub fn realify(x: &CVec) -> RVec {
    let n = x.len();
    RVec::from_fn(2 * n, |i, _| if i < n { x[i].re } else { x[i - n].im })
}

pub fn complexify(xi: &RVec) -> Result<CVec> {
    if xi.len() % 2 != 0 {
        return Err(Error::OddDimension(xi.len()));
    }
    let n = xi.len() / 2;
    Ok(CVec::from_fn(n, |i, _| Complex64::new(xi[i], xi[i + n])))
}

/// The `2n x 2n` matrix `[[0, -I], [I, 0]]`.
pub fn j_matrix(n: usize) -> RMat {
    let mut j = RMat::zeros(2 * n, 2 * n);
    for i in 0..n {
        j[(i, n + i)] = -1.0;
        j[(n + i, i)] = 1.0;
    }
    j
}

/// `J xi` without forming `J`.
pub fn apply_j(xi: &RVec) -> RVec {
    let n = xi.len() / 2;
    RVec::from_fn(2 * n, |i, _| if i < n { -xi[n + i] } else { xi[i - n] })
}

pub fn phi_operator(f: &CVec) -> RMat {
    let phi = realify(f);
    let jphi = apply_j(&phi);
    linalg::outer_real(&phi, &phi) + linalg::outer_real(&jphi, &jphi)
}

/// Frame vectors in realified form, precomputed for the hot loops.
#[derive(Debug, Clone)]
pub struct RealifiedFrame {
    /// Column `k` is `phi_k`.
    pub phi: RMat,
    /// Column `k` is `J phi_k`.
    pub jphi: RMat,
    pub norms_sq: Vec<f64>,
}

impl RealifiedFrame {
    pub fn new(frame: &Frame) -> Self {
        let m = frame.m();
        let cols: Vec<RVec> = (0..m).map(|k| realify(&frame.vector(k))).collect();
        let jcols: Vec<RVec> = cols.iter().map(apply_j).collect();
        let norms_sq = cols.iter().map(|c| c.norm_squared()).collect();
        RealifiedFrame { phi: RMat::from_columns(&cols), jphi: RMat::from_columns(&jcols), norms_sq }
    }

    pub fn dim(&self) -> usize {
        self.phi.nrows()
    }

    pub fn m(&self) -> usize {
        self.phi.ncols()
    }

    /// `calZ(xi)`: column `k` is `Phi_k xi`.
    pub fn cal_z(&self, xi: &RVec) -> RMat {
        let re = self.phi.tr_mul(xi);
        let im = self.jphi.tr_mul(xi);
        let mut z = RMat::zeros(self.dim(), self.m());
        for k in 0..self.m() {
            let mut col = z.column_mut(k);
            col.axpy(re[k], &self.phi.column(k), 0.0);
            col.axpy(im[k], &self.jphi.column(k), 1.0);
        }
        z
    }

    /// `<Phi_k xi, xi>` for every `k`.
    pub fn quadratic_forms(&self, xi: &RVec) -> Vec<f64> {
        let re = self.phi.tr_mul(xi);
        let im = self.jphi.tr_mul(xi);
        re.iter().zip(im.iter()).map(|(a, b)| a * a + b * b).collect()
    }

    pub fn cal_r(&self, xi: &RVec) -> RMat {
        let z = self.cal_z(xi);
        &z * z.transpose()
    }

    pub fn cal_s(&self, xi: &RVec) -> RMat {
        self.cal_s_parts(xi, ZERO_TOL).0
    }

    /// `calS(xi)` together with the indices whose terms were skipped because
    /// `<Phi_k xi, xi> <= zero_tol * ||f_k||^2 ||xi||^2`.
    pub fn cal_s_parts(&self, xi: &RVec, zero_tol: f64) -> (RMat, Vec<usize>) {
        let xx = xi.norm_squared();
        let q = self.quadratic_forms(xi);
        let z = self.cal_z(xi);
        let d = self.dim();
        let mut s = RMat::zeros(d, d);
        let mut skipped = Vec::new();
        for k in 0..self.m() {
            if q[k] <= zero_tol * self.norms_sq[k] * xx {
                skipped.push(k);
                continue;
            }
            let col = z.column(k);
            s.ger(1.0 / q[k], &col, &col, 1.0);
        }
        (s, skipped)
    }

    pub fn phi_operator(&self, k: usize) -> RMat {
        let p = self.phi.column(k);
        let jp = self.jphi.column(k);
        p * p.transpose() + jp * jp.transpose()
    }
}

/// Symmetric outer product `(x y^* + y x^*) / 2`.
pub fn sym_outer(x: &CVec, y: &CVec) -> Result<CMat> {
    if x.len() != y.len() {
        return Err(Error::dim(x.len(), y.len()));
    }
    let a = linalg::outer(x, y);
    let adj = a.adjoint();
    Ok((a + adj).unscale(2.0))
}

/// Eigenvalues and Schatten norms of an operator with at most one positive
/// and one negative eigenvalue.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct S11Spectrum {
    pub a_plus: f64,
    pub a_minus: f64,
    pub norm1: f64,
    pub norm2: f64,
    pub norm_inf: f64,
}

impl S11Spectrum {
    /// Builds the record from a full spectrum: the largest eigenvalue
    /// (clamped at 0) and the smallest one (clamped at 0).
    pub fn from_eigenvalues(values: &[f64]) -> Self {
        let a_plus = values.iter().cloned().fold(0.0, f64::max);
        let a_minus = values.iter().cloned().fold(0.0, f64::min);
        S11Spectrum {
            a_plus,
            a_minus,
            norm1: values.iter().map(|v| v.abs()).sum(),
            norm2: values.iter().map(|v| v * v).sum::<f64>().sqrt(),
            norm_inf: values.iter().fold(0.0, |a: f64, v| a.max(v.abs())),
        }
    }

    pub fn norm(&self, p: Norm) -> f64 {
        match p {
            Norm::One => self.norm1,
            Norm::Two => self.norm2,
            Norm::Inf => self.norm_inf,
        }
    }
}

/// The three Schatten/vector norms used throughout.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Norm {
    One,
    Two,
    Inf,
}

/// `||x||^2 ||y||^2 - |<x, y>|^2`, summed as `sum_{i<j} |x_i y_j - x_j y_i|^2`
/// so that it stays accurate when `x` and `y` are nearly parallel.
pub fn gram_defect(x: &CVec, y: &CVec) -> f64 {
    let n = x.len();
    let mut acc = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            acc += (x[i] * y[j] - x[j] * y[i]).norm_sqr();
        }
    }
    acc
}

/// Closed-form spectrum of `u (.) v = (u v^* + v u^*) / 2`.
pub fn s11_spectrum_outer(u: &CVec, v: &CVec) -> S11Spectrum {
    let re = inner(u, v).re;
    let g = gram_defect(u, v);
    // ||u||^2 ||v||^2 - Im<u,v>^2 = g + Re<u,v>^2
    let root = (g + re * re).sqrt();
    S11Spectrum {
        a_plus: 0.5 * (re + root),
        a_minus: 0.5 * (re - root),
        norm1: root,
        norm2: (0.5 * (g + 2.0 * re * re)).sqrt(),
        norm_inf: 0.5 * (re.abs() + root),
    }
}

/// Closed-form spectrum of `x x^* - y y^*`.
pub fn s11_spectrum_diff(x: &CVec, y: &CVec) -> S11Spectrum {
    let (xx, yy) = (x.norm_squared(), y.norm_squared());
    let g = gram_defect(x, y);
    let d = xx - yy;
    // (|x|^2 + |y|^2)^2 - 4|<x,y>|^2 = (|x|^2 - |y|^2)^2 + 4 g
    let root = (d * d + 4.0 * g).sqrt();
    S11Spectrum {
        a_plus: 0.5 * (d + root),
        a_minus: 0.5 * (d - root),
        norm1: root,
        norm2: (d * d + 2.0 * g).sqrt(),
        norm_inf: 0.5 * (d.abs() + root),
    }
}

fn check_square_dim(x: &CMat, n: usize) -> Result<()> {
    if x.nrows() != n {
        return Err(Error::dim(n, x.nrows()));
    }
    if x.ncols() != n {
        return Err(Error::dim(n, x.ncols()));
    }
    Ok(())
}

/// `(A X)_k = <X, F_k>_HS = f_k^* X f_k` with `F_k = f_k f_k^*`.
pub fn a_map(frame: &Frame, x: &CMat) -> Result<Vec<f64>> {
    check_square_dim(x, frame.n())?;
    let f = frame.matrix();
    let xf = x * f;
    Ok((0..frame.m()).map(|k| f.column(k).dotc(&xf.column(k)).re).collect())
}

/// `(calA T)_k = <T, Phi_k>_HS` for a real symmetric `2n x 2n` matrix.
pub fn a_map_real(frame: &Frame, t: &RMat) -> Result<Vec<f64>> {
    let d = 2 * frame.n();
    if t.nrows() != d || t.ncols() != d {
        return Err(Error::dim(d, t.nrows().max(t.ncols())));
    }
    let rf = RealifiedFrame::new(frame);
    let tp = t * &rf.phi;
    let tj = t * &rf.jphi;
    Ok((0..frame.m())
        .map(|k| rf.phi.column(k).dot(&tp.column(k)) + rf.jphi.column(k).dot(&tj.column(k)))
        .collect())
}

/// Adjoint of [`a_map`]: `sum_k c_k f_k f_k^*`.
pub fn a_map_adjoint(frame: &Frame, c: &[f64]) -> Result<CMat> {
    if c.len() != frame.m() {
        return Err(Error::dim(frame.m(), c.len()));
    }
    let f = frame.matrix();
    let mut weighted = f.clone();
    for (k, &ck) in c.iter().enumerate() {
        weighted.column_mut(k).scale_mut(ck);
    }
    Ok(linalg::symmetrize(&(weighted * f.adjoint())))
}

/// `R(x) = sum_k |<x, f_k>|^2 f_k f_k^*`.
pub fn r_operator(frame: &Frame, x: &CVec) -> Result<CMat> {
    let b = frame.beta(x)?;
    a_map_adjoint(frame, &b.values)
}

fn check_realified(frame: &Frame, xi: &RVec) -> Result<()> {
    if xi.len() != 2 * frame.n() {
        return Err(Error::dim(2 * frame.n(), xi.len()));
    }
    Ok(())
}

pub fn cal_r(frame: &Frame, xi: &RVec) -> Result<RMat> {
    check_realified(frame, xi)?;
    Ok(RealifiedFrame::new(frame).cal_r(xi))
}

pub fn cal_s(frame: &Frame, xi: &RVec) -> Result<RMat> {
    check_realified(frame, xi)?;
    Ok(RealifiedFrame::new(frame).cal_s(xi))
}

pub fn cal_z(frame: &Frame, xi: &RVec) -> Result<RMat> {
    check_realified(frame, xi)?;
    Ok(RealifiedFrame::new(frame).cal_z(xi))
}

/// `pi(A) = (lambda_1 - lambda_2) P_1`, the rank-one map that is the
/// identity on `{x x^*}`.
pub fn pi_rank_one(a: &CMat) -> Result<CMat> {
    let eig = linalg::hermitian_eig(a, DEFAULT_TOL)?;
    let l2 = eig.values.get(1).copied().unwrap_or(0.0);
    let gap = eig.values[0] - l2;
    if gap <= 0.0 {
        return Ok(CMat::zeros(a.nrows(), a.ncols()));
    }
    let e = eig.vector(0);
    Ok(linalg::outer(&e, &e) * Complex64::from(gap))
}

pub fn kappa_beta(x: &CVec) -> CMat {
    linalg::outer(x, x)
}

pub fn kappa_alpha(x: &CVec) -> CMat {
    let nx = x.norm();
    if nx == 0.0 {
        return CMat::zeros(x.len(), x.len());
    }
    linalg::outer(x, x).unscale(nx)
}
