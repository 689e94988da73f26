//! Phase-retrievability certificates and Lipschitz bounds of the `alpha` and
//! `beta` maps.
//!
//! Real frames are decided exactly by enumerating bipartitions. Complex
//! frames are certified by bounding `lambda_{2n-1}(calR(xi))` from below on
//! the whole unit sphere with an adaptive net: every cell of the net carries
//! a Weyl-type bound `lambda(centre) - 2 sqrt(b0 lambda_max(centre)) r`, and
//! the cell with the worst bound is refined first.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frames::Frame;
use crate::lifting::{self, RealifiedFrame, ZERO_TOL};
use crate::linalg::{self, from_pairs, to_pairs, CVec, RMat, RVec, DEFAULT_TOL};
use crate::metrics::nat_dist;
use crate::rng;

/// Largest `m` accepted by the bipartition enumeration (`2^{m-1}` subsets).
pub const DEFAULT_PARTITION_CAP: usize = 24;
/// Relative singular-value threshold for span tests.
pub const SPAN_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Retrievable,
    NotRetrievable,
    Undecided,
}

/// Two vectors with equal magnitude measurements and distinct classes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WitnessPair {
    pub x: Vec<[f64; 2]>,
    pub y: Vec<[f64; 2]>,
}

impl WitnessPair {
    pub fn new(x: &CVec, y: &CVec) -> Self {
        WitnessPair { x: to_pairs(x), y: to_pairs(y) }
    }

    pub fn x(&self) -> CVec {
        from_pairs(&self.x)
    }

    pub fn y(&self) -> CVec {
        from_pairs(&self.y)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PRCertificate {
    pub verdict: Verdict,
    /// Certified lower bound on `min lambda_{2n-1}(calR(xi))` (complex) or
    /// `min lambda_min(R(x))` (real) over unit vectors.
    pub a0_lower: Option<f64>,
    pub witness: Option<WitnessPair>,
    /// Largest covering radius among the final net cells.
    pub epsilon_final: f64,
    /// Smallest covering radius reached by refinement.
    pub epsilon_min: f64,
    /// Number of nets examined: the initial net plus one per refinement.
    pub nets_tested: usize,
    pub evaluations: usize,
    /// Upper bound on `b0` used in the perturbation argument.
    pub b0_upper: Option<f64>,
    /// `min lambda` over the evaluated net points.
    pub lambda_min_net: Option<f64>,
}

impl PRCertificate {
    fn decided(verdict: Verdict) -> Self {
        PRCertificate {
            verdict,
            a0_lower: None,
            witness: None,
            epsilon_final: 0.0,
            epsilon_min: 0.0,
            nets_tested: 0,
            evaluations: 0,
            b0_upper: None,
            lambda_min_net: None,
        }
    }
}

/// Interval known to contain a bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bracket {
    pub lower: f64,
    pub upper: f64,
}

impl Bracket {
    pub fn contains(&self, v: f64, tol: f64) -> bool {
        v >= self.lower - tol && v <= self.upper + tol
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Brackets {
    #[serde(rename = "A0")]
    pub big_a0: Bracket,
    #[serde(rename = "B0")]
    pub big_b0: Bracket,
    pub a0: Bracket,
    pub b0: Bracket,
}

/// Local bounds at a point `z`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalBounds {
    pub z: Vec<[f64; 2]>,
    /// `A(z) = lambda_{2n-1}(calS(j(z)))`, absent at `z = 0`.
    #[serde(rename = "A")]
    pub big_a: Option<f64>,
    #[serde(rename = "A_tilde")]
    pub big_a_tilde: f64,
    #[serde(rename = "B")]
    pub big_b: f64,
    pub a: Option<f64>,
    pub b: Option<f64>,
    /// Indices `k` treated as `<z, f_k> = 0`.
    pub zero_set: Vec<usize>,
    pub zero_tol: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundsReport {
    #[serde(rename = "A0")]
    pub big_a0: f64,
    #[serde(rename = "B0")]
    pub big_b0: f64,
    pub a0: f64,
    pub b0: f64,
    /// True when every value above is exact or certified; false for
    /// multistart or Monte-Carlo estimates.
    pub certified: bool,
    pub brackets: Option<Brackets>,
    pub local: Vec<LocalBounds>,
}

// ---------------------------------------------------------------------------
// Real case
// ---------------------------------------------------------------------------

fn real_matrix(frame: &Frame) -> RMat {
    frame.matrix().map(|z| z.re)
}

fn real_subset(f: &RMat, indices: &[usize]) -> RMat {
    RMat::from_fn(f.nrows(), indices.len(), |i, j| f[(i, indices[j])])
}

fn spans(f: &RMat, indices: &[usize], scale: f64) -> bool {
    let n = f.nrows();
    if indices.len() < n {
        return false;
    }
    let s = linalg::singular_values(&real_subset(f, indices));
    s.len() >= n && s[n - 1] > SPAN_TOL * scale
}

fn sigma_n_sq(f: &RMat, indices: &[usize]) -> f64 {
    let n = f.nrows();
    if indices.len() < n {
        return 0.0;
    }
    let sub = real_subset(f, indices);
    let vals = linalg::hermitian_eigvals(&(&sub * sub.transpose()), DEFAULT_TOL).unwrap_or_default();
    vals.last().copied().unwrap_or(0.0).max(0.0)
}

fn require_real(frame: &Frame) -> Result<()> {
    if !frame.is_real() {
        return Err(Error::InvalidParameter("operation requires a real-tagged frame".into()));
    }
    Ok(())
}

fn partition(m: usize, mask: u64) -> (Vec<usize>, Vec<usize>) {
    // index 0 always lies in I; bit j-1 of mask places index j in I
    let mut inside = vec![0];
    let mut outside = Vec::new();
    for j in 1..m {
        if mask >> (j - 1) & 1 == 1 {
            inside.push(j);
        } else {
            outside.push(j);
        }
    }
    (inside, outside)
}

struct PartitionScan {
    /// Smallest mask whose bipartition has neither side spanning.
    first_failure: Option<u64>,
    /// `min_I sigma_n^2[I] + sigma_n^2[I^c]` and its mask.
    a0_min: Option<(f64, u64)>,
}

fn scan_partitions(frame: &Frame, cap: usize, with_a0: bool) -> Result<PartitionScan> {
    let m = frame.m();
    if m > cap {
        return Err(Error::BudgetExceeded(format!("{} bipartitions exceed the cap m <= {cap}", 1u128 << (m - 1))));
    }
    let f = real_matrix(frame);
    let scale = linalg::singular_values(&f)[0];
    let total: u64 = 1 << (m - 1);
    let chunk = 4096u64;
    let chunks = total.div_ceil(chunk);
    let results: Vec<PartitionScan> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut out = PartitionScan { first_failure: None, a0_min: None };
            for mask in (c * chunk)..((c + 1) * chunk).min(total) {
                let (inside, outside) = partition(m, mask);
                if out.first_failure.is_none() && !spans(&f, &inside, scale) && !spans(&f, &outside, scale) {
                    out.first_failure = Some(mask);
                }
                if with_a0 {
                    let v = sigma_n_sq(&f, &inside) + sigma_n_sq(&f, &outside);
                    if out.a0_min.is_none_or(|(best, _)| v < best) {
                        out.a0_min = Some((v, mask));
                    }
                }
            }
            out
        })
        .collect();
    // chunks are visited in order, so the combination is order independent
    let mut scan = PartitionScan { first_failure: None, a0_min: None };
    for r in results {
        if scan.first_failure.is_none() {
            scan.first_failure = r.first_failure;
        }
        if let Some((v, mask)) = r.a0_min {
            if scan.a0_min.is_none_or(|(best, _)| v < best) {
                scan.a0_min = Some((v, mask));
            }
        }
    }
    Ok(scan)
}

/// Builds `x = u + v`, `y = u - v` with `u` orthogonal to `F[I]` and `v`
/// orthogonal to `F[I^c]`; then `|<x, f_k>| = |<y, f_k>|` for every `k`.
pub fn ambiguous_pair_real(frame: &Frame, inside: &[usize]) -> Result<(CVec, CVec)> {
    require_real(frame)?;
    let m = frame.m();
    if let Some(&bad) = inside.iter().find(|&&k| k >= m) {
        return Err(Error::InvalidPartition(format!("index {bad} out of range for m = {m}")));
    }
    let outside: Vec<usize> = (0..m).filter(|k| !inside.contains(k)).collect();
    let f = real_matrix(frame);
    let scale = linalg::singular_values(&f)[0];
    if spans(&f, inside, scale) || spans(&f, &outside, scale) {
        return Err(Error::InvalidPartition("one side of the partition spans R^n".into()));
    }
    let u = null_vector(&f, inside);
    let v = null_vector(&f, &outside);
    let to_c = |r: &RVec| CVec::from_iterator(r.len(), r.iter().map(|&a| Complex64::new(a, 0.0)));
    Ok((to_c(&(&u + &v)), to_c(&(&u - &v))))
}

/// Unit vector orthogonal to the span of the selected columns.
fn null_vector(f: &RMat, indices: &[usize]) -> RVec {
    let n = f.nrows();
    let sub = real_subset(f, indices);
    let gram = &sub * sub.transpose();
    let eig = linalg::hermitian_eig(&gram, DEFAULT_TOL).expect("Gram matrices are symmetric and finite");
    eig.vector(n - 1)
}

/// Options for [`pr_check_real_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RealCheckOptions {
    pub partition_cap: usize,
    /// Evaluation budget for the net that certifies `a0_lower`.
    pub net_budget: usize,
    pub eps0: f64,
}

impl Default for RealCheckOptions {
    fn default() -> Self {
        RealCheckOptions { partition_cap: DEFAULT_PARTITION_CAP, net_budget: 200_000, eps0: 0.25 }
    }
}

/// Decides phase retrievability of a real frame: for every bipartition one
/// side must span `R^n`.
pub fn pr_check_real(frame: &Frame) -> Result<PRCertificate> {
    pr_check_real_with(frame, &RealCheckOptions::default())
}

pub fn pr_check_real_with(frame: &Frame, opts: &RealCheckOptions) -> Result<PRCertificate> {
    require_real(frame)?;
    let scan = scan_partitions(frame, opts.partition_cap, false)?;
    if let Some(mask) = scan.first_failure {
        let (inside, _) = partition(frame.m(), mask);
        let (x, y) = ambiguous_pair_real(frame, &inside)?;
        let mut cert = PRCertificate::decided(Verdict::NotRetrievable);
        cert.witness = Some(WitnessPair::new(&x, &y));
        return Ok(cert);
    }
    let space = RealSpace::new(frame);
    let out = run_net(&space, &NetOptions { eps0: opts.eps0, budget: opts.net_budget, ..NetOptions::default() }, &mut |_| None);
    let mut cert = PRCertificate::decided(Verdict::Retrievable);
    cert.a0_lower = (out.lower > 0.0).then_some(out.lower);
    fill_net_fields(&mut cert, &out);
    Ok(cert)
}

/// `A(x) = sigma_n^2[supp alpha(x)]` for a real frame.
pub fn local_a_real(frame: &Frame, x: &CVec) -> Result<f64> {
    require_real(frame)?;
    if x.norm() == 0.0 {
        return Err(Error::ZeroVector);
    }
    let alpha = frame.alpha(x)?;
    let tol = ZERO_TOL.sqrt() * x.norm() * frame.max_norm_sq().sqrt();
    let support: Vec<usize> = (0..frame.m()).filter(|&k| alpha.values[k] > tol).collect();
    Ok(sigma_n_sq(&real_matrix(frame), &support))
}

/// Number of starts for the multistart optimisations.
pub const DEFAULT_STARTS: usize = 64;

/// Exact `A0` (partition enumeration) and `B0 = B`, with multistart
/// estimates of `a0` and `b0`.
pub fn global_bounds_real(frame: &Frame, seed: u64) -> Result<BoundsReport> {
    require_real(frame)?;
    let scan = scan_partitions(frame, DEFAULT_PARTITION_CAP, true)?;
    if scan.first_failure.is_some() {
        return Err(Error::NotPhaseRetrievable("a bipartition has neither side spanning R^n".into()));
    }
    let big_a0 = scan.a0_min.map(|(v, _)| v).unwrap_or(0.0);
    let (_, big_b) = frame.frame_bounds()?;
    let a0 = estimate_a0_real(frame, DEFAULT_STARTS, seed)?.0;
    let b0 = estimate_b0(frame, DEFAULT_STARTS, seed)?.0;
    Ok(BoundsReport { big_a0, big_b0: big_b, a0, b0, certified: false, brackets: None, local: Vec::new() })
}

fn real_r(f: &RMat, x: &RVec) -> RMat {
    let c = f.tr_mul(x);
    let mut w = f.clone();
    for k in 0..f.ncols() {
        w.column_mut(k).scale_mut(c[k] * c[k]);
    }
    w * f.transpose()
}

/// `min_{|x|=|y|=1} sum_k <x,f_k>^2 <y,f_k>^2` by alternating bottom
/// eigenvectors from `starts` seeded starting points. Returns the value and
/// a minimising `x`.
pub fn estimate_a0_real(frame: &Frame, starts: usize, seed: u64) -> Result<(f64, RVec)> {
    require_real(frame)?;
    let f = real_matrix(frame);
    let n = frame.n();
    let mut r = rng::rng(seed);
    let mut best = (f64::INFINITY, RVec::zeros(n));
    for _ in 0..starts.max(1) {
        let mut x = rng::real_vec(&mut r, n);
        x.unscale_mut(x.norm());
        let mut value = f64::INFINITY;
        for _ in 0..500 {
            let ey = linalg::hermitian_eig(&real_r(&f, &x), DEFAULT_TOL)?;
            let y = ey.vector(n - 1);
            let ex = linalg::hermitian_eig(&real_r(&f, &y), DEFAULT_TOL)?;
            x = ex.vector(n - 1);
            let v = ex.values[n - 1];
            let done = value - v <= 1e-12 * v.abs().max(f64::MIN_POSITIVE);
            value = v;
            if done {
                break;
            }
        }
        if value < best.0 {
            best = (value, x);
        }
    }
    Ok(best)
}

/// `b0 = max_{|x|=1} sum_k |<x, f_k>|^4` by the fixed-point ascent
/// `x <- normalise(sum_k |c_k|^2 c_k f_k)`, which increases the convex
/// objective monotonically. Real frames stay in `R^n`.
pub fn estimate_b0(frame: &Frame, starts: usize, seed: u64) -> Result<(f64, CVec)> {
    let n = frame.n();
    let mut r = rng::rng(seed);
    let objective = |x: &CVec| -> Result<f64> { Ok(frame.beta(x)?.values.iter().map(|b| b * b).sum()) };
    let mut best = (f64::NEG_INFINITY, CVec::zeros(n));
    for _ in 0..starts.max(1) {
        let mut x = if frame.is_real() { rng::real_gaussian_vec(&mut r, n) } else { rng::complex_gaussian_vec(&mut r, n) };
        x.unscale_mut(x.norm());
        let mut value = objective(&x)?;
        for _ in 0..5000 {
            let c = frame.analysis(&x)?;
            let w = CVec::from_iterator(c.len(), c.iter().map(|z| z * z.norm_sqr()));
            let mut next = frame.synthesis(&w)?;
            let nn = next.norm();
            if nn == 0.0 {
                break;
            }
            next.unscale_mut(nn);
            let v = objective(&next)?;
            x = next;
            let done = v - value <= 1e-13 * v.abs();
            value = v;
            if done {
                break;
            }
        }
        if value > best.0 {
            best = (value, x);
        }
    }
    Ok(best)
}

// ---------------------------------------------------------------------------
// Adaptive nets on projective charts
// ---------------------------------------------------------------------------

/// Net search parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NetOptions {
    /// Covering radius of the initial uniform net.
    pub eps0: f64,
    /// Maximum number of eigenvalue evaluations.
    pub budget: usize,
    /// `lambda <= zero_tol * b0` triggers a search for an ambiguous pair.
    pub zero_tol: f64,
    /// Refinement for `b0` stops once the bound is within this relative
    /// slack of the largest sampled value.
    pub b_slack: f64,
}

impl Default for NetOptions {
    fn default() -> Self {
        NetOptions { eps0: 0.25, budget: 2_000_000, zero_tol: 1e-9, b_slack: 0.05 }
    }
}

/// A sphere modulo a symmetry group, covered by `charts` boxes
/// `[-1, 1]^params`; `eval` returns `(lambda_target, lambda_max)` of the
/// matrix attached to a unit vector.
trait NetSpace {
    fn charts(&self) -> usize;
    fn params(&self) -> usize;
    fn embed(&self, chart: usize, p: &[f64]) -> RVec;
    fn eval(&self, xi: &RVec) -> (f64, f64);
    /// A priori bound `b0 <= B max_k ||f_k||^2`.
    fn b0_apriori(&self) -> f64;
    /// True when every point of the box is covered by another chart.
    fn redundant(&self, _centre: &[f64], _half: f64) -> bool {
        false
    }
}

/// Covering radius of the image of a box under `w -> (1, w) / |(1, w)|`.
/// The map has Lipschitz constant `1 / min |(1, w)|` on the (convex) box.
fn chart_radius(centre: &[f64], half: f64) -> f64 {
    let min_sq: f64 = centre.iter().map(|c| (c.abs() - half).max(0.0).powi(2)).sum();
    half * (centre.len() as f64).sqrt() / (1.0 + min_sq).sqrt()
}

/// Unit sphere of `R^{2n}` modulo `U(1)`; target `lambda_{2n-1}(calR(xi))`.
struct ComplexSpace {
    n: usize,
    rf: RealifiedFrame,
    b0_apriori: f64,
}

impl ComplexSpace {
    fn new(frame: &Frame) -> Result<Self> {
        let (_, big_b) = frame.frame_bounds()?;
        Ok(ComplexSpace { n: frame.n(), rf: RealifiedFrame::new(frame), b0_apriori: big_b * frame.max_norm_sq() })
    }
}

impl NetSpace for ComplexSpace {
    fn charts(&self) -> usize {
        self.n
    }

    fn params(&self) -> usize {
        2 * (self.n - 1)
    }

    fn embed(&self, chart: usize, p: &[f64]) -> RVec {
        let n = self.n;
        let mut xi = RVec::zeros(2 * n);
        xi[chart] = 1.0;
        let mut t = 0;
        for j in (0..n).filter(|&j| j != chart) {
            xi[j] = p[2 * t];
            xi[n + j] = p[2 * t + 1];
            t += 1;
        }
        let nrm = xi.norm();
        xi / nrm
    }

    fn eval(&self, xi: &RVec) -> (f64, f64) {
        let vals = linalg::hermitian_eigvals(&self.rf.cal_r(xi), DEFAULT_TOL).expect("calR is symmetric");
        (vals[2 * self.n - 2], vals[0])
    }

    fn b0_apriori(&self) -> f64 {
        self.b0_apriori
    }

    fn redundant(&self, centre: &[f64], half: f64) -> bool {
        // some |w_j| > 1 on the whole box: the chart of the largest entry
        // covers these points
        centre.chunks(2).any(|w| w.iter().map(|c| (c.abs() - half).max(0.0).powi(2)).sum::<f64>() > 1.0)
    }
}

/// Unit sphere of `R^n` modulo sign; target `lambda_min(R(x))`.
struct RealSpace {
    f: RMat,
    b0_apriori: f64,
}

impl RealSpace {
    fn new(frame: &Frame) -> Self {
        let f = real_matrix(frame);
        let big_b = linalg::singular_values(&f)[0].powi(2);
        RealSpace { b0_apriori: big_b * frame.max_norm_sq(), f }
    }
}

impl NetSpace for RealSpace {
    fn charts(&self) -> usize {
        self.f.nrows()
    }

    fn params(&self) -> usize {
        self.f.nrows() - 1
    }

    fn embed(&self, chart: usize, p: &[f64]) -> RVec {
        let n = self.f.nrows();
        let mut x = RVec::zeros(n);
        x[chart] = 1.0;
        for (t, j) in (0..n).filter(|&j| j != chart).enumerate() {
            x[j] = p[t];
        }
        let nrm = x.norm();
        x / nrm
    }

    fn eval(&self, x: &RVec) -> (f64, f64) {
        let vals = linalg::hermitian_eigvals(&real_r(&self.f, x), DEFAULT_TOL).expect("R(x) is symmetric");
        (vals[vals.len() - 1], vals[0])
    }

    fn b0_apriori(&self) -> f64 {
        self.b0_apriori
    }
}

#[derive(Debug, Clone)]
struct Cell {
    chart: usize,
    centre: Vec<f64>,
    half: f64,
    radius: f64,
    low: f64,
    top: f64,
}

#[derive(Debug, Clone, Copy)]
struct Keyed(f64, usize);

impl PartialEq for Keyed {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Keyed {}
impl PartialOrd for Keyed {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Keyed {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0).then(other.1.cmp(&self.1))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum NetStatus {
    Certified,
    Exhausted,
    Witness,
}

#[derive(Debug, Clone)]
struct NetOutcome {
    status: NetStatus,
    /// Rigorous minimum over cells of the perturbation lower bound (with a small
    /// safety margin for eigenvalue roundoff).
    lower: f64,
    b0_bound: f64,
    min_lambda: f64,
    evaluations: usize,
    splits: usize,
    eps_max: f64,
    eps_min: f64,
    witness: Option<(CVec, CVec)>,
}

struct Net<'a, S: NetSpace> {
    space: &'a S,
    cells: Vec<Cell>,
    alive: Vec<bool>,
    evaluations: usize,
    splits: usize,
    min_lambda: f64,
    min_point: Option<(usize, usize)>,
}

impl<'a, S: NetSpace> Net<'a, S> {
    fn radius(&self, c: &Cell) -> f64 {
        c.radius
    }

    fn push(&mut self, chart: usize, centre: Vec<f64>, half: f64, known: Option<(f64, f64)>) -> Option<usize> {
        if self.space.redundant(&centre, half) {
            return None;
        }
        let (low, top) = known.unwrap_or_else(|| {
            self.evaluations += 1;
            self.space.eval(&self.space.embed(chart, &centre))
        });
        let idx = self.cells.len();
        if low < self.min_lambda {
            self.min_lambda = low;
            self.min_point = Some((idx, chart));
        }
        let radius = chart_radius(&centre, half);
        self.cells.push(Cell { chart, centre, half, radius, low, top });
        self.alive.push(true);
        Some(idx)
    }

    /// Ternary split; the middle child reuses the parent's evaluation.
    fn split(&mut self, idx: usize) -> Vec<usize> {
        self.alive[idx] = false;
        self.splits += 1;
        let parent = self.cells[idx].clone();
        let d = parent.centre.len();
        let h = parent.half / 3.0;
        let mut out = Vec::with_capacity(3usize.pow(d as u32));
        for code in 0..3usize.pow(d as u32) {
            let mut centre = parent.centre.clone();
            let mut c = code;
            let mut middle = true;
            for coord in centre.iter_mut() {
                let digit = c % 3;
                c /= 3;
                if digit != 1 {
                    middle = false;
                }
                *coord += (digit as f64 - 1.0) * 2.0 * h;
            }
            let known = middle.then_some((parent.low, parent.top));
            out.extend(self.push(parent.chart, centre, h, known));
        }
        out
    }

    fn leaves(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.cells.len()).filter(|&i| self.alive[i])
    }
}

fn run_net<S: NetSpace>(
    space: &S,
    opts: &NetOptions,
    on_near_zero: &mut dyn FnMut(&RVec) -> Option<(CVec, CVec)>,
) -> NetOutcome {
    let d = space.params();
    let mut net = Net {
        space,
        cells: Vec::new(),
        alive: Vec::new(),
        evaluations: 0,
        splits: 0,
        min_lambda: f64::INFINITY,
        min_point: None,
    };
    // initial uniform net: k cells per axis, k odd, covering radius <= eps0
    let k = if d == 0 {
        1
    } else {
        let k = ((d as f64).sqrt() / opts.eps0.max(1e-6)).ceil() as usize;
        k + (1 - k % 2)
    };
    let half = 1.0 / k as f64;
    for chart in 0..space.charts() {
        for code in 0..k.pow(d as u32) {
            let mut c = code;
            let centre: Vec<f64> = (0..d)
                .map(|_| {
                    let i = c % k;
                    c /= k;
                    -1.0 + (2 * i + 1) as f64 * half
                })
                .collect();
            net.push(chart, centre, half, None);
        }
    }
    let can_split = d > 0;

    // With M(xi) = sum_k P_k xi xi^T P_k and delta = xi' - xi,
    //   M(xi') - M(xi) = E1 + M(delta),  M(delta) >= 0,
    //   ||E1|| <= 2 sqrt(b0 top(xi)) ||delta||.
    // Hence lambda_j(xi') >= lambda_j(xi) - 2 sqrt(b0 top) r, and
    // top(xi') <= (sqrt(top) + sqrt(b0) r)^2 gives b0 <= top / (1 - r)^2.
    let b_key = |net: &Net<S>, i: usize| {
        let c = &net.cells[i];
        let r = net.radius(c);
        if r < 1.0 {
            c.top / (1.0 - r).powi(2)
        } else {
            f64::INFINITY
        }
    };
    let mut bheap: BinaryHeap<Keyed> = net.leaves().map(|i| Keyed(b_key(&net, i), i)).collect();
    let b_net = |net: &Net<S>| net.cells.iter().fold(0.0_f64, |a, c| a.max(c.top));
    let b_budget = opts.budget / 4;
    loop {
        let Some(&Keyed(key, i)) = bheap.peek() else { break };
        let bound = key.min(space.b0_apriori());
        if !can_split || bound <= (1.0 + opts.b_slack) * b_net(&net) || net.evaluations >= b_budget {
            break;
        }
        bheap.pop();
        for child in net.split(i) {
            bheap.push(Keyed(b_key(&net, child), child));
        }
    }
    let b0 = bheap.peek().map_or(f64::INFINITY, |k| k.0).min(space.b0_apriori());
    drop(bheap);

    let safety = 1e-12 * b0;
    let a_key = |net: &Net<S>, i: usize| {
        let c = &net.cells[i];
        c.low - 2.0 * (b0 * c.top).sqrt() * net.radius(c) - safety
    };
    // min-heap on the lower bound
    let mut aheap: BinaryHeap<std::cmp::Reverse<Keyed>> =
        net.leaves().map(|i| std::cmp::Reverse(Keyed(a_key(&net, i), i))).collect();
    let mut attempts = 0;
    let mut status = NetStatus::Exhausted;
    let mut witness = None;
    loop {
        let Some(&std::cmp::Reverse(Keyed(lower, i))) = aheap.peek() else { break };
        if lower > 0.0 && lower >= 0.5 * net.min_lambda {
            status = NetStatus::Certified;
            break;
        }
        if net.min_lambda <= opts.zero_tol * b0 && attempts < 8 {
            attempts += 1;
            let (idx, chart) = net.min_point.expect("a point was evaluated");
            let p = space.embed(chart, &net.cells[idx].centre);
            if let Some(w) = on_near_zero(&p) {
                witness = Some(w);
                status = NetStatus::Witness;
                break;
            }
        }
        if !can_split || net.evaluations >= opts.budget {
            break;
        }
        aheap.pop();
        for child in net.split(i) {
            aheap.push(std::cmp::Reverse(Keyed(a_key(&net, child), child)));
        }
    }
    let lower = aheap.peek().map_or(f64::NEG_INFINITY, |k| k.0 .0);
    let radii: Vec<f64> = net.leaves().map(|i| net.radius(&net.cells[i])).collect();
    NetOutcome {
        status,
        lower,
        b0_bound: b0,
        min_lambda: net.min_lambda,
        evaluations: net.evaluations,
        splits: net.splits,
        eps_max: radii.iter().cloned().fold(0.0, f64::max),
        eps_min: radii.iter().cloned().fold(f64::INFINITY, f64::min),
        witness,
    }
}

fn fill_net_fields(cert: &mut PRCertificate, out: &NetOutcome) {
    cert.epsilon_final = out.eps_max;
    cert.epsilon_min = out.eps_min;
    cert.nets_tested = out.splits + 1;
    cert.evaluations = out.evaluations;
    cert.b0_upper = Some(out.b0_bound);
    cert.lambda_min_net = Some(out.min_lambda);
}

/// Certifies phase retrievability of a frame for `C^n` by an adaptive net
/// over the unit sphere of `R^{2n}` modulo the global phase.
///
/// `eps0` is the covering radius of the initial net and `budget` caps the
/// number of eigenvalue evaluations; running out of budget gives
/// `Undecided`.
pub fn pr_certify_complex(frame: &Frame, eps0: f64, budget: usize) -> Result<PRCertificate> {
    pr_certify_complex_with(frame, &NetOptions { eps0, budget, ..NetOptions::default() })
}

pub fn pr_certify_complex_with(frame: &Frame, opts: &NetOptions) -> Result<PRCertificate> {
    let frame = frame.as_complex();
    let space = ComplexSpace::new(&frame)?;
    let mut search = |xi: &RVec| find_complex_witness(&frame, &space.rf, xi);
    let out = run_net(&space, opts, &mut search);
    let mut cert = match out.status {
        NetStatus::Witness => {
            let (x, y) = out.witness.clone().expect("witness present");
            let mut c = PRCertificate::decided(Verdict::NotRetrievable);
            c.witness = Some(WitnessPair::new(&x, &y));
            c
        }
        _ if out.lower > 0.0 => {
            let mut c = PRCertificate::decided(Verdict::Retrievable);
            c.a0_lower = Some(out.lower);
            c
        }
        _ => PRCertificate::decided(Verdict::Undecided),
    };
    fill_net_fields(&mut cert, &out);
    Ok(cert)
}

/// Minimiser over unit `eta` orthogonal to `J xi` of `eta^T M eta`, where
/// `J xi` spans (part of) the kernel of `M`.
fn bottom_perp(m: &RMat, xi: &RVec) -> (f64, RVec) {
    let jxi = lifting::apply_j(xi);
    let shift = m.trace().abs() + 1.0;
    let shifted = m + &jxi * jxi.transpose() * shift;
    let eig = linalg::hermitian_eig(&shifted, DEFAULT_TOL).expect("symmetric");
    let d = eig.dim();
    (eig.values[d - 1], eig.vector(d - 1))
}

/// Alternating minimisation of `sum_k <Phi_k xi, eta>^2` over unit
/// `xi, eta` with `eta` orthogonal to `J xi`. Returns the value and the pair.
fn polish_complex(rf: &RealifiedFrame, start: &RVec, iters: usize) -> (f64, RVec, RVec) {
    let mut xi = start.clone();
    let (mut value, mut eta) = bottom_perp(&rf.cal_r(&xi), &xi);
    for _ in 0..iters {
        let (v1, new_xi) = bottom_perp(&rf.cal_r(&eta), &eta);
        xi = new_xi;
        let (v2, new_eta) = bottom_perp(&rf.cal_r(&xi), &xi);
        eta = new_eta;
        let improved = value - v2.min(v1);
        value = v2;
        if value <= 0.0 || improved <= 1e-14 * value.abs() {
            break;
        }
    }
    (value.max(0.0), xi, eta)
}

/// Turns a near-kernel direction of `calR(xi)` into an ambiguous pair and
/// verifies it.
fn find_complex_witness(frame: &Frame, rf: &RealifiedFrame, xi: &RVec) -> Option<(CVec, CVec)> {
    let (_, xi, eta) = polish_complex(rf, xi, 2000);
    let x = lifting::complexify(&xi).ok()?;
    let y = lifting::complexify(&eta).ok()?;
    let u = &x + &y;
    let w = &x - &y;
    let bu = frame.beta(&u).ok()?;
    let bw = frame.beta(&w).ok()?;
    let scale = u.norm_squared().max(w.norm_squared()) * frame.max_norm_sq();
    let mismatch = bu.values.iter().zip(&bw.values).fold(0.0_f64, |a, (p, q)| a.max((p - q).abs()));
    let separated = nat_dist(&u, &w, lifting::Norm::Two).ok()? > 1e-6 * u.norm().max(w.norm());
    (mismatch <= 1e-9 * scale && separated).then_some((u, w))
}

/// Upper estimate of `a0 = min lambda_{2n-1}(calR(xi))` by alternating
/// minimisation from seeded starts.
pub fn estimate_a0_complex(frame: &Frame, starts: usize, seed: u64) -> Result<f64> {
    let frame = frame.as_complex();
    let rf = RealifiedFrame::new(&frame);
    let mut r = rng::rng(seed);
    let mut best = f64::INFINITY;
    for _ in 0..starts.max(1) {
        let mut xi = rng::real_vec(&mut r, 2 * frame.n());
        xi.unscale_mut(xi.norm());
        best = best.min(polish_complex(&rf, &xi, 500).0);
    }
    Ok(best)
}

/// Minimum number of vectors of a phase retrievable frame for `C^n`
/// (the count `4n - 2 - 2b + c` with `b` the number of ones in the binary
/// expansion of `n - 1`).
pub fn min_vector_bound(n: usize) -> Result<usize> {
    if n < 1 {
        return Err(Error::InvalidParameter("n must be at least 1".into()));
    }
    let b = (n - 1).count_ones() as usize;
    let correction = if n % 2 == 1 {
        match b % 4 {
            3 => 2,
            2 => 1,
            _ => 0,
        }
    } else {
        0
    };
    Ok(4 * n - 2 - 2 * b + correction)
}

// ---------------------------------------------------------------------------
// Complex local bounds and sampled global bounds
// ---------------------------------------------------------------------------

/// Local Lipschitz bounds at `z`. `zero_tol` decides which coefficients
/// count as zero: `|<z, f_k>|^2 <= zero_tol ||f_k||^2 ||z||^2`.
pub fn local_bounds_complex(frame: &Frame, z: &CVec, zero_tol: f64) -> Result<LocalBounds> {
    let frame = frame.as_complex();
    if z.len() != frame.n() {
        return Err(Error::dim(frame.n(), z.len()));
    }
    let rf = RealifiedFrame::new(&frame);
    let n2 = 2 * frame.n();
    let xi = lifting::realify(z);
    let zz = z.norm_squared();
    let (s, zero_set) = rf.cal_s_parts(&xi, zero_tol);
    let mut s_tilde = s.clone();
    for &k in &zero_set {
        s_tilde += rf.phi_operator(k);
    }
    let tilde = linalg::hermitian_eigvals(&s_tilde, DEFAULT_TOL)?;
    let (big_a, a, b) = if zz > 0.0 {
        let sv = linalg::hermitian_eigvals(&s, DEFAULT_TOL)?;
        let rv = linalg::hermitian_eigvals(&rf.cal_r(&xi), DEFAULT_TOL)?;
        (Some(sv[n2 - 2]), Some(rv[n2 - 2] / zz), Some(rv[0] / zz))
    } else {
        (None, None, None)
    };
    Ok(LocalBounds {
        z: to_pairs(z),
        big_a,
        big_a_tilde: tilde[n2 - 2],
        big_b: tilde[0],
        a,
        b,
        zero_set,
        zero_tol,
    })
}

/// `(a(z), b(z))`, failing with `ZeroVector` at `z = 0`.
pub fn local_lipschitz_beta(frame: &Frame, z: &CVec) -> Result<(f64, f64)> {
    let lb = local_bounds_complex(frame, z, ZERO_TOL)?;
    match (lb.a, lb.b) {
        (Some(a), Some(b)) => Ok((a, b)),
        _ => Err(Error::ZeroVector),
    }
}

/// Monte-Carlo brackets for the global Lipschitz bounds. The sampled
/// infima are upper estimates of `A0` and `a0`, the sampled suprema lower
/// estimates of `B0` and `b0`; the other bracket ends are the analytic
/// bounds `0`, `B` and `B max ||f_k||^2`.
pub fn empirical_global_bounds(frame: &Frame, samples: usize, seed: u64) -> Result<BoundsReport> {
    let n = frame.n();
    let real = frame.is_real();
    let mut r = rng::rng(seed);
    let draw = |r: &mut rng::Rng| if real { rng::real_gaussian_vec(r, n) } else { rng::complex_gaussian_vec(r, n) };

    let (mut big_a0, mut big_b0, mut a0, mut b0) = (f64::INFINITY, 0.0_f64, f64::INFINITY, 0.0_f64);
    let mut record = |x: &CVec, y: &CVec| -> Result<()> {
        let d2 = nat_dist(x, y, lifting::Norm::Two)?;
        if d2 > 1e-9 * (x.norm() + y.norm()) {
            let ax = frame.alpha(x)?.values;
            let ay = frame.alpha(y)?.values;
            let num: f64 = ax.iter().zip(&ay).map(|(p, q)| (p - q).powi(2)).sum();
            let ratio = num / (d2 * d2);
            big_a0 = big_a0.min(ratio);
            big_b0 = big_b0.max(ratio);
        }
        let d1 = crate::metrics::mat_dist(x, y, lifting::Norm::One)?;
        if d1 > 1e-9 * (x.norm_squared() + y.norm_squared()) {
            let bx = frame.beta(x)?.values;
            let by = frame.beta(y)?.values;
            let num: f64 = bx.iter().zip(&by).map(|(p, q)| (p - q).powi(2)).sum();
            let ratio = num / (d1 * d1);
            a0 = a0.min(ratio);
            b0 = b0.max(ratio);
        }
        Ok(())
    };

    // extreme eigenvectors of the frame operator paired with the origin
    let eig = linalg::hermitian_eig(&frame.frame_operator(), DEFAULT_TOL)?;
    let zero = CVec::zeros(n);
    record(&eig.vector(0), &zero)?;
    record(&eig.vector(n - 1), &zero)?;
    for i in 0..samples {
        let x = draw(&mut r);
        let y = match i % 3 {
            0 => draw(&mut r),
            1 => {
                let scale = 10f64.powf(-(1.0 + (i % 7) as f64));
                &x + draw(&mut r) * Complex64::from(scale)
            }
            _ => CVec::zeros(n),
        };
        record(&x, &y)?;
    }

    let (_, big_b) = frame.frame_bounds()?;
    let b_apriori = big_b * frame.max_norm_sq();
    Ok(BoundsReport {
        big_a0,
        big_b0,
        a0,
        b0,
        certified: false,
        brackets: Some(Brackets {
            big_a0: Bracket { lower: 0.0, upper: big_a0 },
            big_b0: Bracket { lower: big_b0, upper: big_b },
            a0: Bracket { lower: 0.0, upper: a0 },
            b0: Bracket { lower: b0, upper: b_apriori },
        }),
        local: Vec::new(),
    })
}

impl BoundsReport {
    /// Tightens the `a0` and `b0` brackets with a net certificate.
    pub fn with_certificate(mut self, cert: &PRCertificate) -> Self {
        if let Some(br) = self.brackets.as_mut() {
            if let Some(a) = cert.a0_lower {
                br.a0.lower = br.a0.lower.max(a);
            }
            if let Some(b) = cert.b0_upper {
                br.b0.upper = br.b0.upper.min(b);
            }
        }
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frames::Ensemble;

    fn three() -> Frame {
        Frame::from_real(&[vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 1.0]]).unwrap()
    }

    fn repeated() -> Frame {
        Frame::from_real(&[vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap()
    }

    fn as_real(v: &CVec) -> Vec<f64> {
        v.iter().map(|z| z.re).collect()
    }

    #[test]
    fn real_check_examples() {
        let c = pr_check_real(&three()).unwrap();
        assert_eq!(c.verdict, Verdict::Retrievable);
        assert!(c.a0_lower.unwrap() > 0.0);

        let basis = Frame::from_real(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        assert_eq!(pr_check_real(&basis).unwrap().verdict, Verdict::NotRetrievable);

        let c = pr_check_real(&repeated()).unwrap();
        assert_eq!(c.verdict, Verdict::NotRetrievable);
        let w = c.witness.unwrap();
        assert_eq!(as_real(&w.x()), vec![1.0, 1.0]);
        assert_eq!(as_real(&w.y()), vec![-1.0, 1.0]);
        assert_eq!(repeated().alpha(&w.x()).unwrap().values, vec![1.0, 1.0, 1.0]);
        assert_eq!(repeated().alpha(&w.y()).unwrap().values, vec![1.0, 1.0, 1.0]);
    }

    #[test]
    fn ambiguous_pair_examples() {
        let basis = Frame::from_real(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let (x, y) = ambiguous_pair_real(&basis, &[0]).unwrap();
        assert_eq!(as_real(&x), vec![1.0, 1.0]);
        assert_eq!(as_real(&y), vec![-1.0, 1.0]);
        assert!(matches!(ambiguous_pair_real(&three(), &[0]), Err(Error::InvalidPartition(_))));

        let f = Frame::from_real(&[vec![1.0, 2.0, 0.0], vec![0.0, 1.0, 1.0], vec![3.0, 0.0, 1.0], vec![1.0, 1.0, 1.0]])
            .unwrap();
        let (x, y) = ambiguous_pair_real(&f, &[0, 1]).unwrap();
        let (ax, ay) = (f.alpha(&x).unwrap().values, f.alpha(&y).unwrap().values);
        for k in 0..4 {
            assert!((ax[k] - ay[k]).abs() < 1e-13);
        }
        assert!(nat_dist(&x, &y, lifting::Norm::Two).unwrap() > 1e-6);
    }

    #[test]
    fn real_check_requires_real_frame() {
        let g = Frame::random(2, 4, Ensemble::Gaussian, 1).unwrap();
        assert!(pr_check_real(&g).is_err());
    }

    #[test]
    fn partition_cap() {
        let f = Frame::random(2, 6, Ensemble::RealGaussian, 3).unwrap();
        let opts = RealCheckOptions { partition_cap: 5, ..RealCheckOptions::default() };
        assert!(matches!(pr_check_real_with(&f, &opts), Err(Error::BudgetExceeded(_))));
    }

    #[test]
    fn min_vector_bound_examples() {
        assert_eq!(min_vector_bound(4).unwrap(), 10);
        assert_eq!(min_vector_bound(2).unwrap(), 4);
        assert_eq!(min_vector_bound(3).unwrap(), 8);
        assert_eq!(min_vector_bound(1).unwrap(), 2);
        assert!(min_vector_bound(0).is_err());
    }

    #[test]
    fn global_bounds_three_vectors() {
        let rep = global_bounds_real(&three(), 1).unwrap();
        // the four bipartitions, by hand:
        //   {e1} | {e2, e1+e2}        0 + (3 - sqrt 5)/2
        //   {e1, e2} | {e1+e2}        1 + 0
        //   {e1, e1+e2} | {e2}        (3 - sqrt 5)/2 + 0
        //   {e1, e2, e1+e2} | {}      1 + 0
        assert!((rep.big_a0 - (3.0 - 5f64.sqrt()) / 2.0).abs() < 1e-12);
        assert!((rep.big_b0 - 3.0).abs() < 1e-12);
        assert!(global_bounds_real(&repeated(), 1).is_err());

        let basis = Frame::from_real(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        assert!((estimate_b0(&basis, 16, 2).unwrap().0 - 1.0).abs() < 1e-10);
    }

    #[test]
    fn a0_real_against_circle_grid() {
        let s = 0.5f64.sqrt();
        let f = Frame::from_real(&[vec![1.0, 0.0], vec![0.0, 1.0], vec![s, s]]).unwrap();
        let (a0, _) = estimate_a0_real(&f, DEFAULT_STARTS, 5).unwrap();
        let fm = real_matrix(&f);
        let grid = (0..100_000)
            .map(|i| {
                let t = std::f64::consts::PI * i as f64 / 100_000.0;
                let x = RVec::from_vec(vec![t.cos(), t.sin()]);
                *linalg::hermitian_eigvals(&real_r(&fm, &x), 1e-12).unwrap().last().unwrap()
            })
            .fold(f64::INFINITY, f64::min);
        assert!(a0 <= grid + 1e-12 && grid - a0 < 1e-8, "{a0} vs {grid}");
        let cert = pr_check_real(&f).unwrap();
        assert!(cert.a0_lower.unwrap() <= a0 + 1e-12);
    }

    #[test]
    fn certify_one_dimensional() {
        let f = Frame::from_complex(&[vec![Complex64::new(1.0, 0.0)]]).unwrap();
        let c = pr_certify_complex(&f, 0.25, 1000).unwrap();
        assert_eq!(c.verdict, Verdict::Retrievable);
        assert!((c.a0_lower.unwrap() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn certify_generic_eight_vectors() {
        let f = Frame::random(2, 8, Ensemble::Gaussian, 11).unwrap();
        let c = pr_certify_complex(&f, 0.25, 2_000_000).unwrap();
        assert_eq!(c.verdict, Verdict::Retrievable, "{c:?}");
        let a = c.a0_lower.unwrap();
        assert!(a > 0.0);
        let est = estimate_a0_complex(&f, 16, 3).unwrap();
        assert!(a <= est);
    }

    #[test]
    fn certify_three_vectors_finds_ambiguity() {
        let f = three().as_complex();
        let c = pr_certify_complex(&f, 0.25, 200_000).unwrap();
        assert_ne!(c.verdict, Verdict::Retrievable);
        if c.verdict == Verdict::NotRetrievable {
            let w = c.witness.unwrap();
            let (bx, by) = (f.beta(&w.x()).unwrap().values, f.beta(&w.y()).unwrap().values);
            for k in 0..3 {
                assert!((bx[k] - by[k]).abs() < 1e-8);
            }
        }
        assert!(c.lambda_min_net.unwrap() < 1e-6);
    }

    #[test]
    fn local_bounds_cases() {
        let f = Frame::random(2, 6, Ensemble::Gaussian, 4).unwrap();
        let mut r = rng::rng(5);
        let z = rng::complex_gaussian_vec(&mut r, 2);
        let lb = local_bounds_complex(&f, &z, ZERO_TOL).unwrap();
        assert!(lb.zero_set.is_empty());
        assert_eq!(lb.big_a.unwrap(), lb.big_a_tilde);

        let zero = local_bounds_complex(&f, &CVec::zeros(2), ZERO_TOL).unwrap();
        let (a, b) = f.frame_bounds().unwrap();
        assert!((zero.big_a_tilde - a).abs() < 1e-10 * b);
        assert!((zero.big_b - b).abs() < 1e-10 * b);
        assert!(zero.a.is_none());
        assert!(matches!(local_lipschitz_beta(&f, &CVec::zeros(2)), Err(Error::ZeroVector)));
    }

    #[test]
    fn local_beta_ratios_near_z() {
        let f = Frame::random(2, 6, Ensemble::Gaussian, 8).unwrap();
        let mut r = rng::rng(9);
        let z = rng::complex_gaussian_vec(&mut r, 2);
        let (a, b) = local_lipschitz_beta(&f, &z).unwrap();
        let zn = z.norm();
        let mut seen = (f64::INFINITY, 0.0_f64);
        for _ in 0..2000 {
            let x = &z + rng::complex_gaussian_vec(&mut r, 2) * Complex64::from(1e-4 * zn);
            let y = &z + rng::complex_gaussian_vec(&mut r, 2) * Complex64::from(1e-4 * zn);
            let d1 = crate::metrics::mat_dist(&x, &y, lifting::Norm::One).unwrap();
            let bx = f.beta(&x).unwrap().values;
            let by = f.beta(&y).unwrap().values;
            let num: f64 = bx.iter().zip(&by).map(|(p, q)| (p - q).powi(2)).sum();
            let ratio = num / (d1 * d1);
            seen = (seen.0.min(ratio), seen.1.max(ratio));
        }
        assert!(seen.0 >= a * (1.0 - 0.05) && seen.1 <= b * (1.0 + 0.05), "{seen:?} vs [{a}, {b}]");
    }

    #[test]
    fn empirical_bounds_orthonormal_basis() {
        let f = Frame::from_complex(&[
            vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)],
            vec![Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)],
        ])
        .unwrap();
        let rep = empirical_global_bounds(&f, 3000, 1).unwrap();
        assert!(rep.big_a0 < 0.05, "{}", rep.big_a0);
        assert!(rep.big_b0 <= 1.0 + 1e-9);
        assert!((rep.big_b0 - 1.0).abs() < 1e-9);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(24))]

            #[test]
            fn real_a0_inequality(seed in any::<u64>()) {
                let f = Frame::random(3, 7, Ensemble::RealGaussian, seed).unwrap();
                let (a0, _) = estimate_a0_real(&f, 16, seed).unwrap();
                let mut r = rng::rng(seed ^ 1);
                for _ in 0..20 {
                    let x = rng::real_gaussian_vec(&mut r, 3);
                    let y = rng::real_gaussian_vec(&mut r, 3);
                    let bx = f.beta(&x).unwrap().values;
                    let by = f.beta(&y).unwrap().values;
                    let lhs: f64 = bx.iter().zip(&by).map(|(p, q)| p * q).sum();
                    prop_assert!(lhs >= a0 * x.norm_squared() * y.norm_squared() * (1.0 - 1e-8));
                }
            }

            #[test]
            fn complex_a0_inequality(seed in any::<u64>()) {
                let f = Frame::random(2, 8, Ensemble::Gaussian, seed).unwrap();
                let a0 = estimate_a0_complex(&f, 8, seed).unwrap();
                let rf = RealifiedFrame::new(&f);
                let mut r = rng::rng(seed ^ 2);
                for _ in 0..20 {
                    let xi = rng::real_vec(&mut r, 4);
                    let eta = rng::real_vec(&mut r, 4);
                    let z = rf.cal_z(&xi);
                    let lhs = z.tr_mul(&eta).norm_squared();
                    let rhs = xi.norm_squared() * eta.norm_squared() - lifting::apply_j(&xi).dot(&eta).powi(2);
                    prop_assert!(lhs >= a0 * rhs * (1.0 - 1e-8) - 1e-12);
                }
            }
        }
    }
}
