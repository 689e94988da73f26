//! Frames for `C^n` (or `R^n` embedded), their analysis and synthesis maps,
//! and the magnitude measurement maps `alpha` and `beta`.

use std::fmt::Write as _;
use std::path::Path;

use itertools::Itertools;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, CMat, CVec, DEFAULT_RANK_TOL, DEFAULT_TOL};
use crate::rng;

/// Default cap on the number of `n`-subsets examined by the spark test.
pub const DEFAULT_SPARK_CAP: u128 = 1_000_000;
/// Relative determinant threshold for the spark test.
pub const SPARK_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScalarField {
    Real,
    Complex,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Ensemble {
    /// Entries i.i.d. `N(0, 1/2) + i N(0, 1/2)`.
    Gaussian,
    /// Uniform on the complex sphere of radius `sqrt(n)`.
    UniformSphere,
    /// Entries i.i.d. real `N(0, 1)`; yields a real-tagged frame.
    RealGaussian,
}

/// A spanning set `f_1, ..., f_m` of `C^n`, stored as the columns of an
/// `n x m` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    vectors: CMat,
    field: ScalarField,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MeasurementKind {
    /// `|<x, f_k>|`
    Alpha,
    /// `|<x, f_k>|^2`, possibly noisy.
    Beta,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasurementVector {
    pub values: Vec<f64>,
    pub kind: MeasurementKind,
}

impl MeasurementVector {
    pub fn beta(values: Vec<f64>) -> Self {
        MeasurementVector { values, kind: MeasurementKind::Beta }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }
}

impl Frame {
    /// Builds a frame from its vectors, checking `m >= n`, finiteness, the
    /// real tag and that the vectors span.
    pub fn new(vectors: &[CVec], field: ScalarField) -> Result<Self> {
        let n = vectors.first().map(|v| v.len()).ok_or(Error::TooFewVectors { n: 0, m: 0 })?;
        if let Some(bad) = vectors.iter().find(|v| v.len() != n) {
            return Err(Error::dim(n, bad.len()));
        }
        Self::from_columns(CMat::from_columns(vectors), field)
    }

    pub fn from_columns(vectors: CMat, field: ScalarField) -> Result<Self> {
        let (n, m) = vectors.shape();
        if n == 0 || m < n {
            return Err(Error::TooFewVectors { n, m });
        }
        if vectors.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::NonFinite);
        }
        if field == ScalarField::Real && vectors.iter().any(|z| z.im != 0.0) {
            return Err(Error::NotReal);
        }
        let frame = Frame { vectors, field };
        let eig = linalg::hermitian_eigvals(&frame.frame_operator(), DEFAULT_TOL)?;
        let rank = linalg::numerical_rank(&eig, DEFAULT_RANK_TOL);
        if rank < n {
            return Err(Error::RankDeficient { rank, n });
        }
        Ok(frame)
    }

    /// Real frame from row-major real vectors.
    pub fn from_real(vectors: &[Vec<f64>]) -> Result<Self> {
        let cols: Vec<CVec> = vectors
            .iter()
            .map(|v| CVec::from_iterator(v.len(), v.iter().map(|&a| Complex64::new(a, 0.0))))
            .collect();
        Self::new(&cols, ScalarField::Real)
    }

    /// Complex-tagged copy of an arbitrary list of vectors (real entries
    /// allowed).
    pub fn from_complex(vectors: &[Vec<Complex64>]) -> Result<Self> {
        let cols: Vec<CVec> = vectors.iter().map(|v| CVec::from_column_slice(v)).collect();
        Self::new(&cols, ScalarField::Complex)
    }

    pub fn n(&self) -> usize {
        self.vectors.nrows()
    }

    pub fn m(&self) -> usize {
        self.vectors.ncols()
    }

    pub fn field(&self) -> ScalarField {
        self.field
    }

    pub fn is_real(&self) -> bool {
        self.field == ScalarField::Real
    }

    /// The `n x m` matrix whose columns are the frame vectors.
    pub fn matrix(&self) -> &CMat {
        &self.vectors
    }

    pub fn vector(&self, k: usize) -> CVec {
        self.vectors.column(k).into_owned()
    }

    pub fn vectors(&self) -> Vec<CVec> {
        (0..self.m()).map(|k| self.vector(k)).collect()
    }

    /// Same vectors, complex tag. Used to ask complex-case questions about
    /// a real frame.
    pub fn as_complex(&self) -> Frame {
        Frame { vectors: self.vectors.clone(), field: ScalarField::Complex }
    }

    pub fn scaled(&self, factor: f64) -> Result<Frame> {
        Frame::from_columns(&self.vectors * Complex64::from(factor), self.field)
    }

    /// Sub-frame on the given indices (no spanning check).
    pub fn subset_matrix(&self, indices: &[usize]) -> CMat {
        CMat::from_fn(self.n(), indices.len(), |i, j| self.vectors[(i, indices[j])])
    }

    fn check_len(&self, len: usize, expected: usize) -> Result<()> {
        if len != expected {
            Err(Error::dim(expected, len))
        } else {
            Ok(())
        }
    }

    /// Analysis map: `c_k = <x, f_k>`.
    pub fn analysis(&self, x: &CVec) -> Result<CVec> {
        self.check_len(x.len(), self.n())?;
        Ok(self.vectors.ad_mul(x))
    }

    /// Synthesis map: `sum_k c_k f_k`.
    pub fn synthesis(&self, c: &CVec) -> Result<CVec> {
        self.check_len(c.len(), self.m())?;
        Ok(&self.vectors * c)
    }

    pub fn alpha(&self, x: &CVec) -> Result<MeasurementVector> {
        let c = self.analysis(x)?;
        Ok(MeasurementVector { values: c.iter().map(|z| z.norm()).collect(), kind: MeasurementKind::Alpha })
    }

    pub fn beta(&self, x: &CVec) -> Result<MeasurementVector> {
        let c = self.analysis(x)?;
        Ok(MeasurementVector::beta(c.iter().map(|z| z.norm_sqr()).collect()))
    }

    /// Frame operator `S = sum_k f_k f_k^*`.
    pub fn frame_operator(&self) -> CMat {
        &self.vectors * self.vectors.adjoint()
    }

    /// Optimal frame bounds `(A, B)`: extreme eigenvalues of `S`.
    pub fn frame_bounds(&self) -> Result<(f64, f64)> {
        let values = linalg::hermitian_eigvals(&self.frame_operator(), DEFAULT_TOL)?;
        Ok((values[values.len() - 1], values[0]))
    }

    pub fn max_norm_sq(&self) -> f64 {
        (0..self.m()).map(|k| self.vectors.column(k).norm_squared()).fold(0.0, f64::max)
    }

    pub fn sum_norm_sq(&self) -> f64 {
        self.vectors.norm_squared()
    }

    pub fn is_full_spark(&self) -> Result<bool> {
        self.is_full_spark_with_cap(DEFAULT_SPARK_CAP)
    }

    /// True iff every `n`-subset is linearly independent, judged by
    /// `|det| > SPARK_TOL * prod ||f_k||`.
    pub fn is_full_spark_with_cap(&self, cap: u128) -> Result<bool> {
        let (n, m) = (self.n(), self.m());
        let required = binomial(m, n);
        if required > cap {
            return Err(Error::CombinatorialBudgetExceeded { required, cap });
        }
        for subset in (0..m).combinations(n) {
            let sub = self.subset_matrix(&subset);
            let scale: f64 = subset.iter().map(|&k| self.vectors.column(k).norm()).product();
            if linalg::determinant(&sub).norm() <= SPARK_TOL * scale {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Canonical dual frame `S^{-1} f_k`.
    pub fn canonical_dual(&self) -> Result<Frame> {
        let s_inv = linalg::pseudo_inverse(&self.frame_operator(), DEFAULT_RANK_TOL)?;
        Frame::from_columns(s_inv * &self.vectors, self.field)
    }

    pub fn random(n: usize, m: usize, ensemble: Ensemble, seed: u64) -> Result<Frame> {
        if n == 0 || m < n {
            return Err(Error::TooFewVectors { n, m });
        }
        let mut last = None;
        for attempt in 0..4 {
            let s = if attempt == 0 { seed } else { rng::derive_seed(seed, attempt) };
            let mut r = rng::rng(s);
            let (cols, field): (Vec<CVec>, _) = match ensemble {
                Ensemble::Gaussian => {
                    ((0..m).map(|_| rng::complex_gaussian_vec(&mut r, n)).collect(), ScalarField::Complex)
                }
                Ensemble::UniformSphere => (
                    (0..m)
                        .map(|_| {
                            let v = rng::complex_gaussian_vec(&mut r, n);
                            v.unscale(v.norm()) * Complex64::from((n as f64).sqrt())
                        })
                        .collect(),
                    ScalarField::Complex,
                ),
                Ensemble::RealGaussian => {
                    ((0..m).map(|_| rng::real_gaussian_vec(&mut r, n)).collect(), ScalarField::Real)
                }
            };
            match Frame::new(&cols, field) {
                Err(e @ Error::RankDeficient { .. }) => last = Some(e),
                other => return other,
            }
        }
        Err(last.unwrap_or(Error::RankDeficient { rank: 0, n }))
    }

    pub fn to_file_format(&self) -> FrameFile {
        FrameFile {
            n: self.n(),
            m: self.m(),
            field: self.field,
            vectors: (0..self.m())
                .map(|k| self.vectors.column(k).iter().map(|z| [z.re, z.im]).collect())
                .collect(),
        }
    }

    /// JSON with every float written to 17 significant digits.
    pub fn to_json(&self) -> String {
        self.to_file_format().to_json()
    }

    pub fn from_json(text: &str) -> Result<Frame> {
        let file: FrameFile = serde_json::from_str(text)?;
        file.into_frame()
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Frame> {
        Frame::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json())?;
        Ok(())
    }
}

/// On-disk frame layout:
/// `{"n":..,"m":..,"field":"real"|"complex","vectors":[[[re,im],..],..]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameFile {
    pub n: usize,
    pub m: usize,
    pub field: ScalarField,
    pub vectors: Vec<Vec<[f64; 2]>>,
}

impl FrameFile {
    pub fn into_frame(self) -> Result<Frame> {
        if self.vectors.len() != self.m {
            return Err(Error::Config(format!("frame declares m = {} but lists {} vectors", self.m, self.vectors.len())));
        }
        let cols = self
            .vectors
            .iter()
            .map(|v| {
                if v.len() != self.n {
                    return Err(Error::Config(format!("frame vector has length {}, expected n = {}", v.len(), self.n)));
                }
                Ok(CVec::from_iterator(self.n, v.iter().map(|p| Complex64::new(p[0], p[1]))))
            })
            .collect::<Result<Vec<_>>>()?;
        Frame::new(&cols, self.field)
    }

    pub fn to_json(&self) -> String {
        let mut s = String::new();
        let field = match self.field {
            ScalarField::Real => "real",
            ScalarField::Complex => "complex",
        };
        let _ = write!(s, "{{\"n\":{},\"m\":{},\"field\":\"{}\",\"vectors\":[", self.n, self.m, field);
        for (k, v) in self.vectors.iter().enumerate() {
            if k > 0 {
                s.push(',');
            }
            s.push('[');
            for (i, p) in v.iter().enumerate() {
                if i > 0 {
                    s.push(',');
                }
                let _ = write!(s, "[{},{}]", fmt17(p[0]), fmt17(p[1]));
            }
            s.push(']');
        }
        s.push_str("]}");
        s
    }
}

/// 17 significant digits in JSON-compatible exponent notation.
pub fn fmt17(v: f64) -> String {
    if v == 0.0 {
        return if v.is_sign_negative() { "-0.0".into() } else { "0.0".into() };
    }
    format!("{:.16e}", v)
}

pub fn binomial(m: usize, n: usize) -> u128 {
    if n > m {
        return 0;
    }
    let k = n.min(m - n) as u128;
    let m = m as u128;
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.saturating_mul(m - i) / (i + 1);
    }
    acc
}
