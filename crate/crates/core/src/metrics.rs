//! Distances on the quotient of `C^n` by the global phase.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::lifting::{s11_spectrum_diff, Norm};
use crate::linalg::{inner, CVec};

/// Grid resolution before golden-section refinement in [`nat_dist`].
const PHASE_GRID: usize = 256;
const GOLDEN_TOL: f64 = 1e-12;

fn vec_norm(v: &CVec, p: Norm) -> f64 {
    match p {
        Norm::One => v.iter().map(|z| z.norm()).sum(),
        Norm::Two => v.norm(),
        Norm::Inf => v.iter().fold(0.0, |a: f64, z| a.max(z.norm())),
    }
}

/// `e^{i phi*} est` with `phi* = arg <ref, est>`, and its `D_2` distance to
/// `reference`.
pub fn align_phase(est: &CVec, reference: &CVec) -> (CVec, f64) {
    let ip = inner(reference, est);
    let aligned = if ip.norm() > 0.0 { est * (ip / ip.norm()) } else { est.clone() };
    let err = (&aligned - reference).norm();
    (aligned, err)
}

/// `D_p(x, y) = min_phi ||x - e^{i phi} y||_p`.
///
/// For `p = 2` the minimiser is `phi = arg <x, y>` and the distance equals
/// `sqrt(||x||^2 + ||y||^2 - 2 |<x, y>|)`; it is evaluated as a vector norm
/// at the minimiser to avoid cancellation for nearby points. Other `p` are
/// minimised numerically (grid plus golden section, accuracy about `1e-9`).
pub fn nat_dist(x: &CVec, y: &CVec, p: Norm) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::dim(x.len(), y.len()));
    }
    if p == Norm::Two {
        return Ok(align_phase(y, x).1);
    }
    let f = |phi: f64| vec_norm(&(x - y * Complex64::from_polar(1.0, phi)), p);
    let h = std::f64::consts::TAU / PHASE_GRID as f64;
    let (mut best_i, mut best) = (0, f64::INFINITY);
    for i in 0..PHASE_GRID {
        let v = f(i as f64 * h);
        if v < best {
            best = v;
            best_i = i;
        }
    }
    let centre = best_i as f64 * h;
    let refined = golden_section(&f, centre - h, centre + h, GOLDEN_TOL);
    Ok(best.min(f(refined)))
}

fn golden_section(f: &impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// `d_p(x, y) = ||x x^* - y y^*||_p` (Schatten norm), from closed forms.
pub fn mat_dist(x: &CVec, y: &CVec, p: Norm) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::dim(x.len(), y.len()));
    }
    Ok(s11_spectrum_diff(x, y).norm(p))
}
