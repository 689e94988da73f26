//! Noise models, Fisher information and Cramer-Rao bounds.
//!
//! Complex noise convention: `mu_k` is circular Gaussian with
//! `E|mu_k|^2 = rho^2`, i.e. real and imaginary parts are i.i.d.
//! `N(0, rho^2 / 2)`. The `G_1` argument `s / rho^2` is written in this
//! convention; halving the per-component variance would rescale the Fisher
//! matrix.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frames::{Frame, MeasurementVector, ScalarField};
use crate::lifting::{self, RealifiedFrame, ZERO_TOL};
use crate::linalg::{self, to_pairs, CVec, RMat, RVec, DEFAULT_RANK_TOL};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseKind {
    /// `y_k = |<x, f_k>|^2 + nu_k`, `nu_k ~ N(0, sigma^2)`.
    Awgn,
    /// `y_k = |<x, f_k> + mu_k|^2`, `mu_k ~ CN(0, rho^2)`.
    NonAwgn,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    pub kind: NoiseKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho: Option<f64>,
    #[serde(default)]
    pub seed: u64,
}

impl NoiseModel {
    pub fn awgn(sigma: f64, seed: u64) -> Self {
        NoiseModel { kind: NoiseKind::Awgn, sigma: Some(sigma), rho: None, seed }
    }

    pub fn nonawgn(rho: f64, seed: u64) -> Self {
        NoiseModel { kind: NoiseKind::NonAwgn, sigma: None, rho: Some(rho), seed }
    }

    /// Exactly the parameter matching `kind` must be present, finite and
    /// non-negative. Zero is accepted for simulation (noiseless data).
    pub fn validate(&self) -> Result<()> {
        let (wanted, other, name) = match self.kind {
            NoiseKind::Awgn => (self.sigma, self.rho, "sigma"),
            NoiseKind::NonAwgn => (self.rho, self.sigma, "rho"),
        };
        if other.is_some() {
            return Err(Error::InvalidParameter(format!("noise model {:?} takes only {name}", self.kind)));
        }
        match wanted {
            Some(v) if v.is_finite() && v >= 0.0 => Ok(()),
            Some(v) => Err(Error::InvalidParameter(format!("{name} = {v} must be finite and non-negative"))),
            None => Err(Error::InvalidParameter(format!("noise model {:?} requires {name}", self.kind))),
        }
    }

    /// The standard deviation parameter of the active kind.
    pub fn level(&self) -> f64 {
        match self.kind {
            NoiseKind::Awgn => self.sigma.unwrap_or(0.0),
            NoiseKind::NonAwgn => self.rho.unwrap_or(0.0),
        }
    }
}

/// Noisy intensity measurements of `x`, deterministic in `model.seed`.
pub fn simulate_measurements(frame: &Frame, x: &CVec, model: &NoiseModel) -> Result<MeasurementVector> {
    model.validate()?;
    let mut r = rng::rng(model.seed);
    let values = match model.kind {
        NoiseKind::Awgn => {
            let sigma = model.level();
            let mut b = frame.beta(x)?.values;
            for v in b.iter_mut() {
                *v += sigma * rng::normal(&mut r);
            }
            b
        }
        NoiseKind::NonAwgn => {
            let rho2 = model.level().powi(2);
            frame.analysis(x)?.iter().map(|c| (c + rng::complex_normal(&mut r, rho2)).norm_sqr()).collect()
        }
    };
    Ok(MeasurementVector::beta(values))
}

// ---------------------------------------------------------------------------
// Bessel functions
// ---------------------------------------------------------------------------

const SERIES_LIMIT: f64 = 30.0;

/// `e^{-t} I_nu(t)` for `nu` in {0, 1}.
fn bessel_scaled(nu: u32, t: f64) -> f64 {
    let t = t.abs();
    if t <= SERIES_LIMIT {
        // sum_k (t/2)^{2k+nu} / (k! (k+nu)!)
        let q = t * t / 4.0;
        let mut term = if nu == 0 { 1.0 } else { t / 2.0 };
        let mut sum = term;
        let mut k = 0.0;
        loop {
            k += 1.0;
            term *= q / (k * (k + nu as f64));
            sum += term;
            if term <= sum * 1e-17 {
                break;
            }
        }
        sum * (-t).exp()
    } else {
        // e^{-t} I_nu(t) ~ (2 pi t)^{-1/2} sum_k (-1)^k a_k(nu) / t^k
        let mu = 4.0 * (nu * nu) as f64;
        let mut term = 1.0;
        let mut sum = 1.0;
        for k in 1..200 {
            let odd = (2 * k - 1) as f64;
            let next = -term * (mu - odd * odd) / (8.0 * k as f64 * t);
            if next.abs() >= term.abs() {
                break;
            }
            term = next;
            sum += term;
            if term.abs() <= sum.abs() * 1e-17 {
                break;
            }
        }
        sum / (std::f64::consts::TAU * t).sqrt()
    }
}

/// `e^{-t} I_0(t)`.
pub fn bessel_i0e(t: f64) -> f64 {
    bessel_scaled(0, t)
}

/// `e^{-t} I_1(t)` for `t >= 0`.
pub fn bessel_i1e(t: f64) -> f64 {
    bessel_scaled(1, t)
}

fn unscale(scaled: f64, t: f64) -> Result<f64> {
    let v = scaled * t.exp();
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::InvalidParameter(format!("I(t) overflows at t = {t}; use the scaled form")))
    }
}

/// Modified Bessel function `I_0(t)`.
pub fn bessel_i0(t: f64) -> Result<f64> {
    unscale(bessel_i0e(t), t.abs())
}

/// Modified Bessel function `I_1(t)` for `t >= 0`.
pub fn bessel_i1(t: f64) -> Result<f64> {
    unscale(bessel_i1e(t), t.abs())
}

/// `e^{-t} I_1(t)^2 / I_0(t)`.
fn bessel_ratio_scaled(t: f64) -> f64 {
    let i1 = bessel_i1e(t);
    i1 * (i1 / bessel_i0e(t))
}

// ---------------------------------------------------------------------------
// Quadrature
// ---------------------------------------------------------------------------

const KRONROD_NODES: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const KRONROD_WEIGHTS: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const GAUSS_WEIGHTS: [f64; 4] = [0.129_484_966_168_869_7, 0.279_705_391_489_276_7, 0.381_830_050_505_118_9, 0.417_959_183_673_469_4];

/// 15-point Kronrod estimate and its difference to the embedded 7-point
/// Gauss rule.
fn gk15(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = KRONROD_WEIGHTS[7] * fc;
    let mut gauss = GAUSS_WEIGHTS[3] * fc;
    for i in 0..7 {
        let x = h * KRONROD_NODES[i];
        let s = f(c - x) + f(c + x);
        kronrod += KRONROD_WEIGHTS[i] * s;
        if i % 2 == 1 {
            gauss += GAUSS_WEIGHTS[i / 2] * s;
        }
    }
    (kronrod * h, ((kronrod - gauss) * h).abs())
}

/// Adaptive Gauss-Kronrod integration to absolute tolerance `tol`.
fn integrate(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64, argument: f64) -> Result<f64> {
    const MAX_PANELS: usize = 4000;
    let mut panels = vec![(a, b, gk15(f, a, b))];
    loop {
        let total_err: f64 = panels.iter().map(|p| p.2 .1).sum();
        if total_err <= tol {
            return Ok(panels.iter().map(|p| p.2 .0).sum());
        }
        if panels.len() >= MAX_PANELS {
            return Err(Error::NonConvergentQuadrature { argument });
        }
        let worst = (0..panels.len()).max_by(|&i, &j| panels[i].2 .1.total_cmp(&panels[j].2 .1)).unwrap_or(0);
        let (lo, hi, _) = panels.swap_remove(worst);
        let mid = 0.5 * (lo + hi);
        panels.push((lo, mid, gk15(f, lo, mid)));
        panels.push((mid, hi, gk15(f, mid, hi)));
    }
}

const G1_TOL: f64 = 1e-11;

/// `G_1(a) = e^{-a} / (8 a^3) int_0^inf I_1^2(t) / I_0(t) t^3 e^{-t^2/(4a)} dt`
/// with `G_1(0) = 2`.
///
/// Written with scaled Bessel functions the integrand is
/// `r(t) t^3 exp(-(t - 2a)^2 / (4a))` with `r = e^{-t} I_1^2 / I_0`, a bump of
/// width `O(sqrt a)` around `t = 2a`.
pub fn g1(a: f64) -> Result<f64> {
    if !(a >= 0.0) || !a.is_finite() {
        return Err(Error::InvalidParameter(format!("G1 needs a finite a >= 0, got {a}")));
    }
    if a == 0.0 {
        return Ok(2.0);
    }
    let s = a.sqrt();
    let lo = (2.0 * a - 16.0 * s).max(0.0);
    let hi = 2.0 * a + 16.0 * s;
    let f = |t: f64| bessel_ratio_scaled(t) * (t / (2.0 * a)).powi(3) * (-(t - 2.0 * a).powi(2) / (4.0 * a)).exp();
    integrate(&f, lo, hi, G1_TOL, a)
}

/// `G_1` from the other integral representation,
/// `e^{-a} / a int_0^inf I_1^2(2 sqrt(a t)) / I_0(2 sqrt(a t)) t e^{-t} dt`.
pub fn g1_first_form(a: f64) -> Result<f64> {
    if !(a >= 0.0) || !a.is_finite() {
        return Err(Error::InvalidParameter(format!("G1 needs a finite a >= 0, got {a}")));
    }
    if a == 0.0 {
        return Ok(2.0);
    }
    // integrand = r(u) t exp(-(sqrt t - sqrt a)^2), u = 2 sqrt(a t); in
    // v = sqrt t it becomes 2 v^3 r(2 sqrt(a) v) exp(-(v - sqrt a)^2)
    let s = a.sqrt();
    let f = |v: f64| 2.0 * v.powi(3) * bessel_ratio_scaled(2.0 * s * v) * (-(v - s).powi(2)).exp() / a;
    let lo = (s - 9.0).max(0.0);
    integrate(&f, lo, s + 9.0, G1_TOL, a)
}

/// `G_2(a) = a (G_1(a) - 1)`.
pub fn g2(a: f64) -> Result<f64> {
    Ok(a * (g1(a)? - 1.0))
}

// ---------------------------------------------------------------------------
// Fisher information and CRLB
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
pub struct FisherMatrix {
    /// `2n x 2n` real symmetric matrix acting on `j(x)`.
    pub matrix: RMat,
    pub kind: NoiseKind,
    pub field: ScalarField,
    pub x_ref: Vec<[f64; 2]>,
}

/// `I(x) = (4 / sigma^2) calR(j(x))`.
pub fn fisher_awgn(frame: &Frame, x: &CVec, sigma: f64) -> Result<FisherMatrix> {
    if !(sigma > 0.0) {
        return Err(Error::InvalidParameter(format!("sigma must be positive, got {sigma}")));
    }
    let xi = realify_checked(frame, x)?;
    let r = RealifiedFrame::new(frame).cal_r(&xi);
    Ok(FisherMatrix { matrix: r * (4.0 / (sigma * sigma)), kind: NoiseKind::Awgn, field: frame.field(), x_ref: to_pairs(x) })
}

fn realify_checked(frame: &Frame, x: &CVec) -> Result<RVec> {
    if x.len() != frame.n() {
        return Err(Error::dim(frame.n(), x.len()));
    }
    Ok(lifting::realify(x))
}

fn weighted_r(frame: &Frame, xi: &RVec, weight: impl Fn(f64) -> Result<f64>) -> Result<RMat> {
    let rf = RealifiedFrame::new(frame);
    let z = rf.cal_z(xi);
    let q = rf.quadratic_forms(xi);
    let d = rf.dim();
    let mut out = RMat::zeros(d, d);
    for k in 0..rf.m() {
        let col = z.column(k);
        out.ger(weight(q[k])?, &col, &col, 1.0);
    }
    Ok(out)
}

/// `I(x) = (4 / rho^2) sum_k G_2(q_k / rho^2) / q_k Phi_k xi xi^T Phi_k` with
/// `q_k = <Phi_k xi, xi>`. Terms with `q_k` below `ZERO_TOL ||f_k||^2 ||xi||^2`
/// use the limit weight `1 / rho^2`.
pub fn fisher_nonawgn(frame: &Frame, x: &CVec, rho: f64) -> Result<FisherMatrix> {
    if !(rho > 0.0) {
        return Err(Error::InvalidParameter(format!("rho must be positive, got {rho}")));
    }
    let xi = realify_checked(frame, x)?;
    let rho2 = rho * rho;
    let floor = ZERO_TOL * frame.max_norm_sq() * xi.norm_squared();
    let m = weighted_r(frame, &xi, |q| if q <= floor { Ok(1.0 / rho2) } else { Ok(g2(q / rho2)? / q) })?;
    Ok(FisherMatrix { matrix: m * (4.0 / rho2), kind: NoiseKind::NonAwgn, field: frame.field(), x_ref: to_pairs(x) })
}

/// The same matrix from the `(4 / rho^4) sum_k (G_1 - 1) Phi_k xi xi^T Phi_k`
/// representation.
pub fn fisher_nonawgn_g1_form(frame: &Frame, x: &CVec, rho: f64) -> Result<FisherMatrix> {
    if !(rho > 0.0) {
        return Err(Error::InvalidParameter(format!("rho must be positive, got {rho}")));
    }
    let xi = realify_checked(frame, x)?;
    let rho2 = rho * rho;
    let m = weighted_r(frame, &xi, |q| Ok(g1(q / rho2)? - 1.0))?;
    Ok(FisherMatrix { matrix: m * (4.0 / (rho2 * rho2)), kind: NoiseKind::NonAwgn, field: frame.field(), x_ref: to_pairs(x) })
}

/// Orthogonal projection onto the tangent space of the estimator class:
/// `I - J psi psi^T J^T` with `psi = j(z0) / ||z0||` for complex frames and
/// `I_n (+) 0` for real ones.
pub fn anchor_projection(field: ScalarField, z0: &CVec) -> Result<RMat> {
    let n = z0.len();
    if z0.norm() == 0.0 {
        return Err(Error::ZeroVector);
    }
    Ok(match field {
        ScalarField::Real => RMat::from_fn(2 * n, 2 * n, |i, j| if i == j && i < n { 1.0 } else { 0.0 }),
        ScalarField::Complex => {
            let psi = lifting::realify(z0) / z0.norm();
            let jpsi = lifting::apply_j(&psi);
            RMat::identity(2 * n, 2 * n) - &jpsi * jpsi.transpose()
        }
    })
}

/// `(Pi I Pi)^+` with `Pi` from [`anchor_projection`].
pub fn crlb(fisher: &FisherMatrix, z0: &CVec) -> Result<RMat> {
    let d = fisher.matrix.nrows();
    if 2 * z0.len() != d {
        return Err(Error::dim(d / 2, z0.len()));
    }
    let pi = anchor_projection(fisher.field, z0)?;
    let projected = linalg::symmetrize(&(&pi * &fisher.matrix * &pi));
    linalg::pseudo_inverse(&projected, DEFAULT_RANK_TOL)
}

/// Scalar multiple of `Pi_{z0}` dominating the AWGN CRLB when `a0` is a
/// valid lower bound: `sigma^2 ||z0||^2 / (4 a0 |<x, z0>|^2) Pi_{z0}`.
///
/// `x` is the representative with `<x, z0> > 0`.
pub fn crlb_upper_bound_awgn(frame: &Frame, x: &CVec, z0: &CVec, sigma: f64, a0: f64) -> Result<RMat> {
    if !(a0 > 0.0) || !(sigma > 0.0) {
        return Err(Error::InvalidParameter("a0 and sigma must be positive".into()));
    }
    if x.len() != frame.n() || z0.len() != frame.n() {
        return Err(Error::dim(frame.n(), if x.len() != frame.n() { x.len() } else { z0.len() }));
    }
    let pi = anchor_projection(frame.field(), z0)?;
    let overlap = linalg::inner(x, z0).norm_sqr();
    if overlap <= f64::EPSILON * x.norm_squared() * z0.norm_squared() {
        return Err(Error::OrthogonalAnchor);
    }
    Ok(pi * (sigma * sigma * z0.norm_squared() / (4.0 * a0 * overlap)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frames::Ensemble;
    use num_complex::Complex64;

    fn series(nu: u32, t: f64, terms: usize) -> f64 {
        // plain power series, no scaling
        let mut term = (t / 2.0).powi(nu as i32);
        let mut sum = term;
        for k in 1..terms {
            let k = k as f64;
            term *= (t / 2.0).powi(2) / (k * (k + nu as f64));
            sum += term;
        }
        sum
    }

    fn one_dim() -> Frame {
        Frame::from_complex(&[vec![Complex64::new(1.0, 0.0)]]).unwrap()
    }

    #[test]
    fn bessel_values() {
        assert_eq!(bessel_i0(0.0).unwrap(), 1.0);
        assert_eq!(bessel_i1(0.0).unwrap(), 0.0);
        assert!((bessel_i0(1.0).unwrap() - 1.266_065_877_752_008_4).abs() < 1e-15);
        assert!((bessel_i0(1.0).unwrap() - series(0, 1.0, 30)).abs() < 1e-15);
        for t in [0.3, 5.0, 17.0, 29.9, 30.1, 45.0, 60.0] {
            for nu in [0, 1] {
                let want = series(nu, t, 400);
                let got = unscale(bessel_scaled(nu, t), t).unwrap();
                assert!((got - want).abs() <= 1e-13 * want, "nu={nu} t={t}: {got} vs {want}");
            }
        }
        let r50 = bessel_i1e(50.0) / bessel_i0e(50.0);
        let r100 = bessel_i1e(100.0) / bessel_i0e(100.0);
        assert!(r50 < r100 && r100 < 1.0);
        assert!(bessel_i0(800.0).is_err());
        assert!(bessel_i0e(800.0).is_finite());
    }

    #[test]
    fn g1_limits_and_forms() {
        assert_eq!(g1(0.0).unwrap(), 2.0);
        let small = g1(1e-4).unwrap();
        assert!((small - 2.0).abs() < 1e-3, "{small}");
        assert!((g2(1e-6).unwrap() / 1e-6 - 1.0).abs() < 1e-3);
        for a in [1e-3, 0.1, 1.0, 3.0, 20.0, 400.0] {
            let (p, q) = (g1(a).unwrap(), g1_first_form(a).unwrap());
            assert!((p - q).abs() < 1e-8, "a={a}: {p} vs {q}");
        }
        assert!(g1(-1.0).is_err());
        assert!(g1(f64::NAN).is_err());
    }

    #[test]
    fn simulate_noise_statistics() {
        let f = Frame::random(2, 3, Ensemble::Gaussian, 1).unwrap();
        let x = CVec::from_vec(vec![Complex64::new(1.0, 0.5), Complex64::new(-0.3, 0.2)]);
        let clean = f.beta(&x).unwrap().values;
        assert_eq!(simulate_measurements(&f, &x, &NoiseModel::awgn(0.0, 3)).unwrap().values, clean);

        let sigma = 0.7;
        let trials = 100_000;
        let mut mean = [0.0; 3];
        for t in 0..trials {
            let y = simulate_measurements(&f, &x, &NoiseModel::awgn(sigma, t)).unwrap();
            for k in 0..3 {
                mean[k] += (y.values[k] - clean[k]) / trials as f64;
            }
        }
        for m in mean {
            assert!(m.abs() < 3.0 * sigma / (trials as f64).sqrt() * 1.5);
        }

        let rho = 0.8;
        let zero = CVec::zeros(2);
        let mut e = [0.0; 3];
        for t in 0..trials {
            let y = simulate_measurements(&f, &zero, &NoiseModel::nonawgn(rho, t)).unwrap();
            for k in 0..3 {
                e[k] += y.values[k] / trials as f64;
            }
        }
        // the noise enters after the inner product, so E[y_k] = E|mu_k|^2
        for v in e {
            assert!((v - rho * rho).abs() < 0.02 * rho * rho, "{v}");
        }
    }

    #[test]
    fn noise_model_validation() {
        assert!(NoiseModel::awgn(-1.0, 0).validate().is_err());
        let mixed = NoiseModel { kind: NoiseKind::Awgn, sigma: Some(1.0), rho: Some(1.0), seed: 0 };
        assert!(mixed.validate().is_err());
        let missing = NoiseModel { kind: NoiseKind::NonAwgn, sigma: None, rho: None, seed: 0 };
        assert!(missing.validate().is_err());
        let json = serde_json::to_string(&NoiseModel::nonawgn(0.5, 7)).unwrap();
        assert_eq!(json, r#"{"kind":"nonawgn","rho":0.5,"seed":7}"#);
    }

    #[test]
    fn fisher_one_dimensional() {
        let x = CVec::from_vec(vec![Complex64::new(1.0, 0.0)]);
        let fi = fisher_awgn(&one_dim(), &x, 2.0).unwrap();
        assert_eq!(fi.matrix, RMat::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]));
        let c = crlb(&fi, &x).unwrap();
        assert!((c - RMat::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0])).norm() < 1e-15);
        let half = fisher_awgn(&one_dim(), &x, 4.0).unwrap();
        assert_eq!(half.matrix * 4.0, fi.matrix);
        assert!(fisher_awgn(&one_dim(), &x, 0.0).is_err());
    }

    #[test]
    fn fisher_kernel_and_forms() {
        let f = Frame::random(3, 9, Ensemble::Gaussian, 5).unwrap();
        let mut r = rng::rng(6);
        for _ in 0..5 {
            let x = rng::complex_gaussian_vec(&mut r, 3);
            let jxi = lifting::apply_j(&lifting::realify(&x));
            let aw = fisher_awgn(&f, &x, 0.3).unwrap();
            assert!((&aw.matrix * &jxi).norm() < 1e-12 * aw.matrix.norm());
            let g2f = fisher_nonawgn(&f, &x, 0.6).unwrap();
            let g1f = fisher_nonawgn_g1_form(&f, &x, 0.6).unwrap();
            assert!((&g2f.matrix - &g1f.matrix).norm() < 1e-8 * g2f.matrix.norm());
            assert!((&g2f.matrix * &jxi).norm() < 1e-10 * g2f.matrix.norm());
            let vals = linalg::hermitian_eigvals(&g2f.matrix, 1e-12).unwrap();
            assert!(*vals.last().unwrap() > -1e-10 * vals[0]);
            assert!(linalg::numerical_rank(&vals, 1e-9) <= 5);
        }
    }

    #[test]
    fn crlb_anchor_cases() {
        let f = Frame::random(2, 8, Ensemble::Gaussian, 7).unwrap();
        let x = CVec::from_vec(vec![Complex64::new(0.8, -0.1), Complex64::new(0.3, 0.9)]);
        let fi = fisher_awgn(&f, &x, 0.5).unwrap();
        let c = crlb(&fi, &x).unwrap();
        let direct = linalg::pseudo_inverse(&fi.matrix, DEFAULT_RANK_TOL).unwrap();
        assert!((&c - &direct).norm() < 1e-10 * direct.norm());
        assert!(crlb(&fi, &CVec::zeros(2)).is_err());

        let z0 = CVec::from_vec(vec![Complex64::new(1.0, 0.0), Complex64::new(0.2, 0.0)]);
        let c = crlb(&fi, &z0).unwrap();
        let pi = anchor_projection(ScalarField::Complex, &z0).unwrap();
        assert!((&pi * &c - &c).norm() < 1e-10 * c.norm());
        let vals = linalg::hermitian_eigvals(&c, 1e-12).unwrap();
        assert!(*vals.last().unwrap() > -1e-10 * vals[0]);
    }

    #[test]
    fn crlb_real_block() {
        let f = Frame::random(3, 7, Ensemble::RealGaussian, 8).unwrap();
        let x = rng::real_gaussian_vec(&mut rng::rng(9), 3);
        let sigma = 0.4;
        let c = crlb(&fisher_awgn(&f, &x, sigma).unwrap(), &x).unwrap();
        let xr = RVec::from_iterator(3, x.iter().map(|z| z.re));
        let fm = f.matrix().map(|z| z.re);
        let cf = fm.tr_mul(&xr);
        let mut rx = RMat::zeros(3, 3);
        for k in 0..7 {
            rx.ger(cf[k] * cf[k], &fm.column(k), &fm.column(k), 1.0);
        }
        let want = rx.try_inverse().unwrap() * (sigma * sigma / 4.0);
        assert!((c.view((0, 0), (3, 3)) - &want).norm() < 1e-9 * want.norm());
        assert!(c.view((3, 0), (3, 6)).norm() < 1e-12);
    }

    #[test]
    fn crlb_upper_bound_properties() {
        let f = Frame::random(2, 8, Ensemble::Gaussian, 0).unwrap();
        let cert = crate::injectivity::pr_certify_complex(&f, 0.25, 1_000_000).unwrap();
        let a0 = cert.a0_lower.unwrap();
        let mut r = rng::rng(10);
        for _ in 0..5 {
            let z0 = rng::complex_gaussian_vec(&mut r, 2);
            let mut x = rng::complex_gaussian_vec(&mut r, 2);
            // choose the representative with <x, z0> > 0
            let ip = linalg::inner(&x, &z0);
            x *= ip.conj() / ip.norm();
            let sigma = 0.3;
            let c = crlb(&fisher_awgn(&f, &x, sigma).unwrap(), &z0).unwrap();
            let bound = crlb_upper_bound_awgn(&f, &x, &z0, sigma, a0).unwrap();
            let gap = linalg::hermitian_eigvals(&(&bound - &c), 1e-12).unwrap();
            assert!(*gap.last().unwrap() > -1e-9 * bound.norm());
            let looser = crlb_upper_bound_awgn(&f, &x, &z0, sigma, a0 / 2.0).unwrap();
            assert!((looser - &bound * 2.0).norm() < 1e-12 * bound.norm());
        }
        let x = CVec::from_vec(vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)]);
        let z0 = CVec::from_vec(vec![Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)]);
        assert!(matches!(crlb_upper_bound_awgn(&f, &x, &z0, 1.0, a0), Err(Error::OrthogonalAnchor)));
    }

    #[test]
    fn awgn_score_covariance() {
        // n = 1: score = sum_k (y_k - q_k) / sigma^2 * 2 Phi_k xi
        let f = Frame::from_complex(&[vec![Complex64::new(1.0, 0.0)], vec![Complex64::new(0.6, 0.8)], vec![Complex64::new(-0.5, 0.3)]])
            .unwrap();
        let x = CVec::from_vec(vec![Complex64::new(0.7, -0.4)]);
        let sigma = 0.5;
        let rf = RealifiedFrame::new(&f);
        let xi = lifting::realify(&x);
        let q = rf.quadratic_forms(&xi);
        let z = rf.cal_z(&xi);
        let mut cov = RMat::zeros(2, 2);
        let samples = 100_000;
        for s in 0..samples {
            let y = simulate_measurements(&f, &x, &NoiseModel::awgn(sigma, s)).unwrap();
            let mut score = RVec::zeros(2);
            for k in 0..3 {
                score += z.column(k) * (2.0 * (y.values[k] - q[k]) / (sigma * sigma));
            }
            cov += &score * score.transpose() / samples as f64;
        }
        let fi = fisher_awgn(&f, &x, sigma).unwrap().matrix;
        assert!((&cov - &fi).norm() < 0.05 * fi.norm());
    }

    #[test]
    fn nonawgn_score_second_moment() {
        // Rician likelihood: p(y | s) = rho^-2 exp(-(y + s)/rho^2) I_0(2 sqrt(y s)/rho^2);
        // E[(d/ds log p)^2] = (G_1(s/rho^2) - 1) / rho^4
        let rho: f64 = 0.9;
        let c = Complex64::new(1.1, 0.4);
        let s = c.norm_sqr();
        let mut r = rng::rng(12);
        let samples = 200_000;
        let mut acc = 0.0;
        for _ in 0..samples {
            let y = (c + rng::complex_normal(&mut r, rho * rho)).norm_sqr();
            let u = 2.0 * (y * s).sqrt() / (rho * rho);
            let d = -1.0 / (rho * rho) + bessel_i1e(u) / bessel_i0e(u) * (y / s).sqrt() / (rho * rho);
            acc += d * d / samples as f64;
        }
        let want = (g1(s / (rho * rho)).unwrap() - 1.0) / rho.powi(4);
        assert!((acc - want).abs() < 0.03 * want, "{acc} vs {want}");
    }
}
