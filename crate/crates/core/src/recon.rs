//! Reconstruction algorithms: lifted linear inversion, PhaseLift,
//! Gerchberg-Saxton, Wirtinger flow and iterative regularized least squares.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frames::Frame;
use crate::lifting::{self, Norm, RealifiedFrame};
use crate::linalg::{self, CMat, CVec, RMat, RVec, DEFAULT_RANK_TOL, DEFAULT_TOL};
use crate::metrics::{mat_dist, nat_dist};

mod pairs {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &CVec, s: S) -> std::result::Result<S::Ok, S::Error> {
        linalg::to_pairs(v).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<CVec, D::Error> {
        Ok(linalg::from_pairs(&Vec::<[f64; 2]>::deserialize(d)?))
    }

    pub mod opt {
        use super::*;

        pub fn serialize<S: Serializer>(v: &Option<CVec>, s: S) -> std::result::Result<S::Ok, S::Error> {
            v.as_ref().map(linalg::to_pairs).serialize(s)
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Option<CVec>, D::Error> {
            Ok(Option::<Vec<[f64; 2]>>::deserialize(d)?.map(|p| linalg::from_pairs(&p)))
        }
    }

    /// Row-major `[[re, im], ...]` rows.
    pub mod matrix {
        use super::*;

        pub fn serialize<S: Serializer>(m: &Option<CMat>, s: S) -> std::result::Result<S::Ok, S::Error> {
            m.as_ref()
                .map(|m| (0..m.nrows()).map(|i| m.row(i).iter().map(|z| [z.re, z.im]).collect::<Vec<_>>()).collect::<Vec<_>>())
                .serialize(s)
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Option<CMat>, D::Error> {
            let rows = Option::<Vec<Vec<[f64; 2]>>>::deserialize(d)?;
            Ok(rows.map(|rows| {
                let n = rows.len();
                CMat::from_fn(n, n, |i, j| Complex64::new(rows[i][j][0], rows[i][j][1]))
            }))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReconResult {
    #[serde(with = "pairs")]
    pub x_hat: CVec,
    /// Least-squares factor of the lifted estimate (lifted methods only).
    #[serde(with = "pairs::opt", default, skip_serializing_if = "Option::is_none")]
    pub x_ls: Option<CVec>,
    #[serde(rename = "X_hat", with = "pairs::matrix", default, skip_serializing_if = "Option::is_none")]
    pub x_matrix: Option<CMat>,
    pub iterations: usize,
    /// `||A(X) - y||_2` for lifted methods, `||beta(x_hat) - y||_2` otherwise.
    pub residual: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d2_error: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d1_error: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub trace: Vec<f64>,
    pub converged: bool,
    /// Warnings such as `tie_top_eigenvalue` or `a1_nonpositive`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub flags: Vec<String>,
    /// `||X - x_hat x_hat^*||_2` (PhaseLift).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rank_one_gap: Option<f64>,
    /// IRLS: `[J(x^{t+1}, x^t), J(x^t, x^t)]` at `(lambda_t, mu_t)` per step.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub descent: Vec<[f64; 2]>,
    /// IRLS: the last pair `(x^{T}, x^{T-1})`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub last_pair: Option<(Vec<[f64; 2]>, Vec<[f64; 2]>)>,
}

impl ReconResult {
    fn new(x_hat: CVec, iterations: usize, residual: f64, converged: bool) -> Self {
        ReconResult {
            x_hat,
            x_ls: None,
            x_matrix: None,
            iterations,
            residual,
            d2_error: None,
            d1_error: None,
            trace: Vec::new(),
            converged,
            flags: Vec::new(),
            rank_one_gap: None,
            descent: Vec::new(),
            last_pair: None,
        }
    }

    /// Fills `d2_error` and `d1_error` against the ground truth.
    pub fn with_truth(mut self, x: &CVec) -> Result<Self> {
        self.d2_error = Some(nat_dist(&self.x_hat, x, Norm::Two)?);
        self.d1_error = Some(mat_dist(&self.x_hat, x, Norm::One)?);
        Ok(self)
    }

    /// `D_2(x_hat, x) / ||x||`.
    pub fn relative_error(&self, x: &CVec) -> Result<f64> {
        Ok(nat_dist(&self.x_hat, x, Norm::Two)? / x.norm())
    }
}

fn check_y(frame: &Frame, y: &[f64]) -> Result<()> {
    if y.len() != frame.m() {
        return Err(Error::dim(frame.m(), y.len()));
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite);
    }
    Ok(())
}

fn beta_residual(frame: &Frame, x: &CVec, y: &[f64]) -> Result<f64> {
    let b = frame.beta(x)?;
    Ok(b.values.iter().zip(y).map(|(p, q)| (p - q).powi(2)).sum::<f64>().sqrt())
}

fn lifted_residual(frame: &Frame, x: &CMat, y: &[f64]) -> Result<f64> {
    let a = lifting::a_map(frame, x)?;
    Ok(a.iter().zip(y).map(|(p, q)| (p - q).powi(2)).sum::<f64>().sqrt())
}

/// `G_jk = <F_j, F_k>_HS = |<f_j, f_k>|^2`.
fn hs_gram(frame: &Frame) -> RMat {
    let f = frame.matrix();
    let g = f.adjoint() * f;
    RMat::from_fn(frame.m(), frame.m(), |j, k| g[(j, k)].norm_sqr())
}

// ---------------------------------------------------------------------------
// Lifted linear reconstruction
// ---------------------------------------------------------------------------

/// `X = sum_k y_k F~_k` with `{F~_k}` the canonical dual of `{f_k f_k^*}` in
/// `Sym(C^n)`, followed by the rank-one estimators
/// `x_LS = sqrt(lambda_1) e_1` and `x_Lip = sqrt(lambda_1 - lambda_2) e_1`
/// (`lambda_2 = 0` when `n = 1`). `x_hat` is `x_Lip`.
pub fn lifted_linear(frame: &Frame, y: &[f64]) -> Result<ReconResult> {
    check_y(frame, y)?;
    let n = frame.n();
    let gram = hs_gram(frame);
    let eig = linalg::hermitian_eig(&gram, DEFAULT_TOL)?;
    let rank = linalg::numerical_rank(&eig.values, DEFAULT_RANK_TOL);
    // real Hermitian n x n matrices have dimension n^2; real frames only
    // reach the n(n+1)/2 real symmetric ones
    let required = if frame.is_real() { n * (n + 1) / 2 } else { n * n };
    if rank < required {
        return Err(Error::InsufficientRedundancy { rank, required });
    }
    let coeffs = linalg::pinv_from_eig(&eig, DEFAULT_RANK_TOL) * RVec::from_column_slice(y);
    let x_est = lifting::a_map_adjoint(frame, coeffs.as_slice())?;

    let xe = linalg::hermitian_eig(&x_est, DEFAULT_TOL)?;
    let l1 = xe.values[0];
    let l2 = xe.values.get(1).copied().unwrap_or(0.0);
    let e1 = xe.vector(0);
    let x_ls = if l1 >= 0.0 { e1.clone() * Complex64::from(l1.sqrt()) } else { CVec::zeros(n) };
    let tie = l1 - l2 <= 1e-12 * l1.abs();
    let x_lip = if !tie && l1 > l2 { e1 * Complex64::from((l1 - l2).sqrt()) } else { CVec::zeros(n) };

    let residual = lifted_residual(frame, &x_est, y)?;
    let mut out = ReconResult::new(x_lip, 0, residual, true);
    if tie {
        out.flags.push("tie_top_eigenvalue".into());
    }
    out.x_ls = Some(x_ls);
    out.x_matrix = Some(x_est);
    Ok(out)
}

// ---------------------------------------------------------------------------
// PhaseLift
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Fit {
    /// `||A X - y||_2^2`.
    L2,
    /// Reweighted least squares approximating `||A X - y||_1`.
    L1Reweighted,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PhaseLiftOptions {
    /// Initial trace weight as a fraction of `2 lambda_max(A^* y)`, the
    /// smallest weight for which `X = 0` is optimal.
    pub lambda0: f64,
    pub lambda_decay: f64,
    /// Final trace weight relative to the initial one.
    pub lambda_min: f64,
    pub fit: Fit,
    /// Continuation stages.
    pub max_outer: usize,
    /// Proximal-gradient iterations per stage.
    pub max_inner: usize,
    pub tol: f64,
}

impl Default for PhaseLiftOptions {
    fn default() -> Self {
        PhaseLiftOptions {
            lambda0: 0.5,
            lambda_decay: 0.3,
            lambda_min: 1e-10,
            fit: Fit::L2,
            max_outer: 40,
            max_inner: 2000,
            tol: 1e-12,
        }
    }
}

const L1_DELTA: f64 = 1e-6;

/// `argmin_{X >= 0} ||A X - y||_W^2 + lambda trace(X)` by accelerated
/// proximal gradient; the proximal step clips eigenvalues at
/// `step * lambda`.
struct PhaseLiftSolver<'a> {
    frame: &'a Frame,
    y: &'a [f64],
    weights: Vec<f64>,
    step: f64,
}

impl PhaseLiftSolver<'_> {
    fn set_weights(&mut self, weights: Vec<f64>, gram: &RMat) -> Result<()> {
        let sw: Vec<f64> = weights.iter().map(|w| w.sqrt()).collect();
        let wg = RMat::from_fn(gram.nrows(), gram.ncols(), |i, j| sw[i] * gram[(i, j)] * sw[j]);
        let top = linalg::hermitian_eigvals(&wg, DEFAULT_TOL)?[0];
        self.step = if top > 0.0 { 1.0 / (2.0 * top) } else { 1.0 };
        self.weights = weights;
        Ok(())
    }

    fn residual(&self, x: &CMat) -> Result<Vec<f64>> {
        let a = lifting::a_map(self.frame, x)?;
        Ok(a.iter().zip(self.y).map(|(p, q)| p - q).collect())
    }

    fn prox(&self, v: &CMat, lambda: f64) -> Result<CMat> {
        let eig = linalg::hermitian_eig(v, DEFAULT_TOL)?;
        let cut = self.step * lambda;
        Ok(eig.reconstruct_with(|l| (l - cut).max(0.0)))
    }

    fn gradient_step(&self, v: &CMat, lambda: f64) -> Result<CMat> {
        let r = self.residual(v)?;
        let wr: Vec<f64> = r.iter().zip(&self.weights).map(|(r, w)| 2.0 * r * w).collect();
        let g = lifting::a_map_adjoint(self.frame, &wr)?;
        self.prox(&(v - g * Complex64::from(self.step)), lambda)
    }

    fn objective(&self, x: &CMat, lambda: f64) -> Result<f64> {
        let r = self.residual(x)?;
        let fit: f64 = r.iter().zip(&self.weights).map(|(r, w)| w * r * r).sum();
        Ok(fit + lambda * x.trace().re)
    }

    /// FISTA with function-value restart.
    fn solve(&self, x0: &CMat, lambda: f64, max_iter: usize, tol: f64) -> Result<(CMat, usize, bool)> {
        let mut x = x0.clone();
        let mut v = x0.clone();
        let mut t = 1.0_f64;
        let mut f_prev = self.objective(&x, lambda)?;
        for it in 1..=max_iter {
            let next = self.gradient_step(&v, lambda)?;
            let f_next = self.objective(&next, lambda)?;
            if f_next > f_prev {
                // restart the momentum from the last iterate
                t = 1.0;
                v = x.clone();
                continue;
            }
            let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
            let delta = &next - &x;
            let change = delta.norm();
            v = &next + delta * Complex64::from((t - 1.0) / t_next);
            x = next;
            t = t_next;
            f_prev = f_next;
            if change <= tol * x.norm().max(1e-300) {
                return Ok((x, it, true));
            }
        }
        Ok((x, max_iter, false))
    }
}

/// PhaseLift with geometric continuation on the trace weight. The
/// `L1Reweighted` fit reweights residuals by `1 / max(|r_k|, delta)` after
/// every stage.
pub fn phaselift(frame: &Frame, y: &[f64], opts: &PhaseLiftOptions) -> Result<ReconResult> {
    check_y(frame, y)?;
    if !(opts.lambda_decay > 0.0 && opts.lambda_decay < 1.0) || opts.max_outer == 0 || !(opts.tol > 0.0) {
        return Err(Error::InvalidParameter("phaselift needs 0 < lambda_decay < 1, max_outer > 0, tol > 0".into()));
    }
    let n = frame.n();
    let gram = hs_gram(frame);
    let mut solver = PhaseLiftSolver { frame, y, weights: Vec::new(), step: 1.0 };
    solver.set_weights(vec![1.0; frame.m()], &gram)?;

    let aty = lifting::a_map_adjoint(frame, y)?;
    let scale = 2.0 * linalg::hermitian_eigvals(&aty, DEFAULT_TOL)?[0].max(0.0);
    let mut lambda = opts.lambda0 * scale;
    let floor = opts.lambda_min * scale;
    let mut x = CMat::zeros(n, n);
    let mut iterations = 0;
    let mut converged = false;
    let mut trace = Vec::new();
    for stage in 0..opts.max_outer {
        let (next, its, ok) = solver.solve(&x, lambda, opts.max_inner, opts.tol)?;
        iterations += its;
        x = next;
        let r = solver.residual(&x)?;
        trace.push(r.iter().map(|v| v * v).sum::<f64>().sqrt());
        let last = lambda <= floor || stage + 1 == opts.max_outer;
        if opts.fit == Fit::L1Reweighted {
            let w: Vec<f64> = r.iter().map(|v| 1.0 / v.abs().max(L1_DELTA)).collect();
            let top = w.iter().cloned().fold(0.0, f64::max);
            solver.set_weights(w.iter().map(|v| v / top).collect(), &gram)?;
        }
        if last {
            converged = ok;
            break;
        }
        lambda = (lambda * opts.lambda_decay).max(floor);
    }
    let x = linalg::symmetrize(&x);
    let eig = linalg::hermitian_eig(&x, DEFAULT_TOL)?;
    let x_hat = eig.vector(0) * Complex64::from(eig.values[0].max(0.0).sqrt());
    let gap = (&x - linalg::outer(&x_hat, &x_hat)).norm();
    let mut out = ReconResult::new(x_hat, iterations, lifted_residual(frame, &x, y)?, converged);
    out.x_matrix = Some(x);
    out.rank_one_gap = Some(gap);
    out.trace = trace;
    if !converged {
        out.flags.push("no_convergence".into());
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Gerchberg-Saxton
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GsOptions {
    pub max_iter: usize,
    pub tol: f64,
}

impl Default for GsOptions {
    fn default() -> Self {
        GsOptions { max_iter: 1000, tol: 1e-12 }
    }
}

fn alpha_residual(c: &CVec, sqrt_y: &[f64]) -> f64 {
    c.iter().zip(sqrt_y).map(|(c, s)| (c.norm() - s).powi(2)).sum::<f64>().sqrt()
}

/// Alternates between `|c_k| = sqrt(y_k)` and the range of the analysis
/// map. Convergence is not guaranteed; the iterate with the smallest
/// `||alpha(x) - sqrt(y)||` is returned and `trace` logs that residual per
/// iteration. Coefficients `c_k = 0` take phase 1.
pub fn gerchberg_saxton(frame: &Frame, y: &[f64], x0: &CVec, opts: &GsOptions) -> Result<ReconResult> {
    check_y(frame, y)?;
    if x0.len() != frame.n() {
        return Err(Error::dim(frame.n(), x0.len()));
    }
    let sqrt_y: Vec<f64> = y.iter().map(|v| v.max(0.0).sqrt()).collect();
    let s_inv = linalg::pseudo_inverse(&frame.frame_operator(), DEFAULT_RANK_TOL)?;
    let mut x = x0.clone();
    let mut c = frame.analysis(&x)?;
    let mut res = alpha_residual(&c, &sqrt_y);
    let (mut best, mut best_res) = (x.clone(), res);
    let mut trace = vec![res];
    let mut converged = false;
    let mut iterations = 0;
    for _ in 0..opts.max_iter {
        let d = CVec::from_iterator(
            c.len(),
            c.iter().zip(&sqrt_y).map(|(ck, s)| {
                let m = ck.norm();
                if m > 0.0 {
                    ck * (s / m)
                } else {
                    Complex64::new(*s, 0.0)
                }
            }),
        );
        x = &s_inv * frame.synthesis(&d)?;
        iterations += 1;
        c = frame.analysis(&x)?;
        let next = alpha_residual(&c, &sqrt_y);
        trace.push(next);
        if next < best_res {
            best_res = next;
            best = x.clone();
        }
        let scale = sqrt_y.iter().map(|v| v * v).sum::<f64>().sqrt();
        let stalled = (res - next).abs() <= opts.tol * res.max(scale);
        res = next;
        if stalled || next <= opts.tol * scale {
            converged = true;
            break;
        }
    }
    let mut out = ReconResult::new(best.clone(), iterations, beta_residual(frame, &best, y)?, converged);
    out.trace = trace;
    Ok(out)
}

// ---------------------------------------------------------------------------
// Spectral initialisation
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ScaleMode {
    Wirtinger,
    /// IRLS scaling with parameter `rho`.
    Irls,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralInit {
    /// Top eigenvalue of `R_y`.
    pub a1: f64,
    pub e1: CVec,
    pub x0: CVec,
    pub mode: ScaleMode,
    pub slow_convergence: bool,
}

const POWER_SEED: u64 = 0x5eed;

/// Principal eigenpair of `R_y = sum_k y_k f_k f_k^*` by power iteration
/// (shifted when `R_y` may be indefinite) and the scaled start vector:
/// `sqrt(n sum y / sum ||f_k||^2) e_1` for Wirtinger flow and
/// `sqrt((1 - rho) a_1 / sum |<e_1, f_k>|^4) e_1` for IRLS, which returns
/// `x0 = 0` when `a_1 <= 0`.
pub fn spectral_init(frame: &Frame, y: &[f64], mode: ScaleMode, rho: f64) -> Result<SpectralInit> {
    check_y(frame, y)?;
    let ry = lifting::a_map_adjoint(frame, y)?;
    let shift = (-linalg::gershgorin_lower(&ry)).max(0.0);
    let shifted = &ry + CMat::identity(frame.n(), frame.n()) * Complex64::from(shift);
    let p = linalg::power_method(&shifted, POWER_SEED, 1e-13, 50_000)?;
    let a1 = linalg::inner(&(&ry * &p.vector), &p.vector).re;
    let e1 = p.vector;
    let x0 = match mode {
        ScaleMode::Wirtinger => {
            let sy: f64 = y.iter().map(|v| v.max(0.0)).sum();
            e1.clone() * Complex64::from((frame.n() as f64 * sy / frame.sum_norm_sq()).sqrt())
        }
        ScaleMode::Irls => {
            let q: f64 = frame.beta(&e1)?.values.iter().map(|b| b * b).sum();
            if a1 <= 0.0 || q == 0.0 {
                CVec::zeros(frame.n())
            } else {
                e1.clone() * Complex64::from(((1.0 - rho) * a1 / q).sqrt())
            }
        }
    };
    Ok(SpectralInit { a1, e1, x0, mode, slow_convergence: p.slow_convergence })
}

// ---------------------------------------------------------------------------
// Wirtinger flow
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WfOptions {
    pub mu_max: f64,
    pub tau0: f64,
    pub max_iter: usize,
    /// Stop when `||direction|| / (||x^t|| ||x^0||^2) < tol`.
    pub tol: f64,
}

impl Default for WfOptions {
    fn default() -> Self {
        WfOptions { mu_max: 0.2, tau0: 330.0, max_iter: 2500, tol: 1e-12 }
    }
}

/// `(1/m) sum_k (|<x, f_k>|^2 - y_k) <x, f_k> f_k`. Its realification times
/// `4m` is the gradient of `sum_k (y_k - |<x, f_k>|^2)^2` in `j(x)`.
pub fn wirtinger_direction(frame: &Frame, y: &[f64], x: &CVec) -> Result<CVec> {
    check_y(frame, y)?;
    let c = frame.analysis(x)?;
    let w = CVec::from_iterator(c.len(), c.iter().zip(y).map(|(c, y)| c * (c.norm_sqr() - y)));
    Ok(frame.synthesis(&w)? / Complex64::from(frame.m() as f64))
}

/// Gradient descent from the spectral start with step
/// `mu_{t+1} / ||x^0||^2`, `mu_{t+1} = min(mu_max, 1 - exp(-(t+1)/tau0))`.
pub fn wirtinger_flow(frame: &Frame, y: &[f64], opts: &WfOptions) -> Result<ReconResult> {
    let init = spectral_init(frame, y, ScaleMode::Wirtinger, 0.0)?;
    wirtinger_flow_from(frame, y, &init.x0, opts)
}

pub fn wirtinger_flow_from(frame: &Frame, y: &[f64], x0: &CVec, opts: &WfOptions) -> Result<ReconResult> {
    check_y(frame, y)?;
    let x0n = x0.norm_squared();
    if x0n == 0.0 {
        let mut out = ReconResult::new(x0.clone(), 0, beta_residual(frame, x0, y)?, true);
        out.flags.push("zero_start".into());
        return Ok(out);
    }
    let mut x = x0.clone();
    let mut converged = false;
    let mut iterations = 0;
    let mut trace = Vec::new();
    for t in 0..opts.max_iter {
        let d = wirtinger_direction(frame, y, &x)?;
        if d.norm() <= opts.tol * x.norm() * x0n {
            converged = true;
            break;
        }
        let mu = opts.mu_max.min(1.0 - (-((t + 1) as f64) / opts.tau0).exp());
        x -= d * Complex64::from(mu / x0n);
        iterations += 1;
        if t % 10 == 0 {
            trace.push(beta_residual(frame, &x, y)?);
        }
    }
    let mut out = ReconResult::new(x.clone(), iterations, beta_residual(frame, &x, y)?, converged);
    out.trace = trace;
    Ok(out)
}

// ---------------------------------------------------------------------------
// IRLS
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IrlsOptions {
    pub rho: f64,
    /// Decay of `lambda` and `mu`; `1` keeps them fixed.
    pub gamma: f64,
    /// Floor of `mu`, relative to the top eigenvalue `a_1` of `R_y`.
    pub mu_min: f64,
    /// Stop when `J(x, x; 0, 0) < eps ||y||^2`.
    pub eps: f64,
    /// Stop when `||x||^2 / J(x, x; 0, 0) > snr_target` (if set).
    pub snr_target: Option<f64>,
    pub max_outer: usize,
    pub cg_tol: f64,
}

impl Default for IrlsOptions {
    fn default() -> Self {
        IrlsOptions { rho: 0.5, gamma: 0.7, mu_min: 0.05, eps: 1e-10, snr_target: None, max_outer: 200, cg_tol: 1e-12 }
    }
}

/// `J(u, v; lambda, mu)` in realified coordinates.
pub fn irls_criterion(frame: &Frame, y: &[f64], u: &CVec, v: &CVec, lambda: f64, mu: f64) -> Result<f64> {
    check_y(frame, y)?;
    let cu = frame.analysis(u)?;
    let cv = frame.analysis(v)?;
    let fit: f64 = cu.iter().zip(cv.iter()).zip(y).map(|((a, b), y)| ((a * b.conj()).re - y).powi(2)).sum();
    Ok(fit + lambda * u.norm_squared() + mu * (u - v).norm_squared() + lambda * v.norm_squared())
}

/// Iterative regularized least squares. Each step minimises the quadratic
/// `u -> J(u, x^t; lambda_t, mu_t)` by conjugate gradients started at `x^t`,
/// so `J(x^{t+1}, x^t) <= J(x^t, x^t)` at every step. The returned
/// estimate is the iterate with the smallest `J(x^t, x^t; 0, 0)`.
pub fn irls(frame: &Frame, y: &[f64], opts: &IrlsOptions) -> Result<ReconResult> {
    check_y(frame, y)?;
    if !(opts.rho > 0.0 && opts.rho < 1.0) || !(opts.gamma > 0.0 && opts.gamma <= 1.0) || !(opts.mu_min > 0.0) {
        return Err(Error::InvalidParameter("irls needs 0 < rho < 1, 0 < gamma <= 1, mu_min > 0".into()));
    }
    let init = spectral_init(frame, y, ScaleMode::Irls, opts.rho)?;
    let n = frame.n();
    if init.a1 <= 0.0 {
        let zero = CVec::zeros(n);
        let mut out = ReconResult::new(zero.clone(), 0, beta_residual(frame, &zero, y)?, true);
        out.flags.push("a1_nonpositive".into());
        return Ok(out);
    }
    let rf = RealifiedFrame::new(frame);
    let yv = RVec::from_column_slice(y);
    let y2 = yv.norm_squared();
    let mut lambda = opts.rho * init.a1;
    let mut mu = opts.rho * init.a1;
    let mut x = init.x0.clone();
    let mut prev = x.clone();
    let mut j0 = irls_criterion(frame, y, &x, &x, 0.0, 0.0)?;
    let (mut best, mut best_j) = (x.clone(), j0);
    let mut trace = vec![j0];
    let mut descent = Vec::new();
    let mut converged = false;
    let mut t = 0;
    loop {
        if j0 < opts.eps * y2 || opts.snr_target.is_some_and(|s| x.norm_squared() > s * j0) {
            converged = true;
            break;
        }
        if t >= opts.max_outer {
            break;
        }
        // normal equations: (calR(eta) + (lambda + mu) I) xi = sum_k y_k Phi_k eta + mu eta
        let eta = lifting::realify(&x);
        let z = rf.cal_z(&eta);
        let b = &z * &yv + &eta * mu;
        let shift = lambda + mu;
        let apply = |v: &RVec| &z * z.tr_mul(v) + v * shift;
        let cg = linalg::cg_solve_from(apply, &b, &eta, opts.cg_tol, 20 * eta.len())?;
        let u = lifting::complexify(&cg.x)?;
        descent.push([
            irls_criterion(frame, y, &u, &x, lambda, mu)?,
            irls_criterion(frame, y, &x, &x, lambda, mu)?,
        ]);
        prev = std::mem::replace(&mut x, u);
        lambda *= opts.gamma;
        mu = (opts.gamma * mu).max(opts.mu_min * init.a1);
        t += 1;
        j0 = irls_criterion(frame, y, &x, &x, 0.0, 0.0)?;
        trace.push(j0);
        if j0 < best_j {
            best_j = j0;
            best = x.clone();
        }
    }
    let mut out = ReconResult::new(best.clone(), t, beta_residual(frame, &best, y)?, converged);
    out.trace = trace;
    out.descent = descent;
    out.last_pair = Some((linalg::to_pairs(&x), linalg::to_pairs(&prev)));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frames::Ensemble;
    use crate::rng;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn repeated_basis(n: usize, copies: usize) -> Frame {
        let mut vs = Vec::new();
        for _ in 0..copies {
            for i in 0..n {
                let mut v = vec![c(0.0); n];
                v[i] = c(1.0);
                vs.push(v);
            }
        }
        Frame::from_complex(&vs).unwrap()
    }

    fn problem(n: usize, m: usize, seed: u64) -> (Frame, CVec, Vec<f64>) {
        let f = Frame::random(n, m, Ensemble::Gaussian, seed).unwrap();
        let x = rng::complex_gaussian_vec(&mut rng::rng(seed ^ 0xabc), n);
        let y = f.beta(&x).unwrap().values;
        (f, x, y)
    }

    #[test]
    fn lifted_scalar_example() {
        let f = Frame::from_complex(&[vec![c(1.0)], vec![c(1.0)]]).unwrap();
        let r = lifted_linear(&f, &[4.0, 4.0]).unwrap();
        assert!((r.x_matrix.as_ref().unwrap()[(0, 0)] - c(4.0)).norm() < 1e-14);
        assert!((r.x_hat[0] - c(2.0)).norm() < 1e-14);
        assert!((r.x_ls.unwrap()[0] - c(2.0)).norm() < 1e-14);
    }

    #[test]
    fn lifted_exact_and_tie() {
        let (f, x, y) = problem(2, 6, 3);
        let r = lifted_linear(&f, &y).unwrap();
        assert!(r.relative_error(&x).unwrap() * x.norm() <= 1e-8);
        assert!(r.residual < 1e-10 * y.iter().map(|v| v * v).sum::<f64>().sqrt());

        let ident = lifting::a_map(&f, &CMat::identity(2, 2)).unwrap();
        let r = lifted_linear(&f, &ident).unwrap();
        assert_eq!(r.x_hat, CVec::zeros(2));
        assert!(r.flags.contains(&"tie_top_eigenvalue".to_string()));

        let (small, _, y) = problem(2, 3, 4);
        assert!(matches!(lifted_linear(&small, &y), Err(Error::InsufficientRedundancy { .. })));
    }

    #[test]
    fn phaselift_recovers_and_handles_zero() {
        let (f, x, y) = problem(4, 24, 5);
        let r = phaselift(&f, &y, &PhaseLiftOptions::default()).unwrap();
        let xx = linalg::outer(&x, &x);
        let err = (r.x_matrix.as_ref().unwrap() - &xx).norm() / xx.norm();
        assert!(err <= 1e-3, "{err}");

        let z = phaselift(&f, &vec![0.0; 24], &PhaseLiftOptions::default()).unwrap();
        assert_eq!(z.x_matrix.unwrap(), CMat::zeros(4, 4));
        assert_eq!(z.x_hat, CVec::zeros(4));
    }

    #[test]
    fn gs_fixed_point_and_zero() {
        let (f, x, y) = problem(3, 12, 6);
        let r = gerchberg_saxton(&f, &y, &x, &GsOptions { max_iter: 1, tol: 0.0 }).unwrap();
        assert!((&r.x_hat - &x).norm() <= 1e-12 * x.norm());
        let z = gerchberg_saxton(&f, &vec![0.0; 12], &x, &GsOptions { max_iter: 1, tol: 0.0 }).unwrap();
        assert!(z.x_hat.norm() == 0.0 || z.x_hat.norm() < 1e-15);
    }

    #[test]
    fn wirtinger_init_scale_and_gradient() {
        let f = repeated_basis(3, 4);
        let mut x = CVec::zeros(3);
        x[0] = c(1.0);
        let y = f.beta(&x).unwrap().values;
        let init = spectral_init(&f, &y, ScaleMode::Wirtinger, 0.0).unwrap();
        assert!((init.x0.norm_squared() - 1.0).abs() < 1e-12);
        assert!(nat_dist(&init.e1, &x, Norm::Two).unwrap() < 1e-12);

        let (f, _, y) = problem(3, 20, 7);
        let p = rng::complex_gaussian_vec(&mut rng::rng(8), 3);
        let d = lifting::realify(&wirtinger_direction(&f, &y, &p).unwrap());
        let obj = |xi: &RVec| -> f64 {
            let z = lifting::complexify(xi).unwrap();
            f.beta(&z).unwrap().values.iter().zip(&y).map(|(b, y)| (y - b).powi(2)).sum()
        };
        let xi = lifting::realify(&p);
        let h = 1e-5;
        let fd = RVec::from_fn(6, |i, _| {
            let mut a = xi.clone();
            let mut b = xi.clone();
            a[i] += h;
            b[i] -= h;
            (obj(&a) - obj(&b)) / (2.0 * h)
        });
        let scaled = &d * (4.0 * f.m() as f64);
        assert!((&fd - &scaled).norm() <= 1e-5 * fd.norm());
    }

    #[test]
    fn wirtinger_recovers() {
        let (f, x, y) = problem(8, 64, 9);
        let r = wirtinger_flow(&f, &y, &WfOptions::default()).unwrap();
        assert!(r.relative_error(&x).unwrap() <= 1e-5, "{}", r.relative_error(&x).unwrap());
    }

    #[test]
    fn irls_descent_and_recovery() {
        let (f, x, y) = problem(4, 32, 10);
        let r = irls(&f, &y, &IrlsOptions::default()).unwrap();
        for [after, before] in &r.descent {
            assert!(after <= &(before + 1e-12 * before.abs().max(1.0)), "{after} > {before}");
        }
        assert!(r.converged && r.relative_error(&x).unwrap() < 1e-4, "{}", r.relative_error(&x).unwrap());

        let neg = vec![-1.0; 32];
        let z = irls(&f, &neg, &IrlsOptions::default()).unwrap();
        assert_eq!(z.x_hat, CVec::zeros(4));
        assert!(z.flags.contains(&"a1_nonpositive".to_string()));
    }

    #[test]
    fn result_json_roundtrip() {
        let (f, x, y) = problem(2, 6, 11);
        let r = lifted_linear(&f, &y).unwrap().with_truth(&x).unwrap();
        let text = serde_json::to_string(&r).unwrap();
        assert!(text.contains("\"X_hat\""));
        let back: ReconResult = serde_json::from_str(&text).unwrap();
        assert_eq!(back, r);
    }

    #[test]
    fn phase_covariance_of_gs() {
        let (f, x, y) = problem(3, 18, 12);
        let x0 = &x + rng::complex_gaussian_vec(&mut rng::rng(13), 3) * c(0.1);
        let rot = &x0 * Complex64::from_polar(1.0, 0.9);
        let opts = GsOptions { max_iter: 50, tol: 0.0 };
        let a = gerchberg_saxton(&f, &y, &x0, &opts).unwrap();
        let b = gerchberg_saxton(&f, &y, &rot, &opts).unwrap();
        assert!(nat_dist(&a.x_hat, &b.x_hat, Norm::Two).unwrap() < 1e-10);
    }
}
