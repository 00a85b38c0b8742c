//! Dense complex scalars, vectors and matrices.
//!
//! Every value flowing through a [`Tape`](crate::tape::Tape) is a
//! [`ComplexTensor`] of rank 0, 1 or 2 stored row-major in double precision.
//! Tensors carry a [`Domain`] tag: a `Real` tensor has every imaginary part
//! exactly zero, which lets the backward pass deliver real gradients to real
//! variables.

use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Shorthand for `Complex64::new(re, im)`.
#[inline]
pub fn c64(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Whether the entries of a tensor live on the real line or in the complex plane.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Domain {
    Real,
    Complex,
}

#[derive(Clone, PartialEq)]
pub struct ComplexTensor {
    shape: Vec<usize>,
    data: Vec<C64>,
    domain: Domain,
}

impl fmt::Debug for ComplexTensor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ComplexTensor")
            .field("shape", &self.shape)
            .field("domain", &self.domain)
            .field("data", &self.data)
            .finish()
    }
}

impl ComplexTensor {
    /// Builds a complex-domain tensor. Rank must be at most 2 and `data.len()`
    /// must equal the product of the extents.
    pub fn new(shape: Vec<usize>, data: Vec<C64>) -> Result<Self> {
        Self::with_domain(shape, data, Domain::Complex)
    }

    pub fn with_domain(shape: Vec<usize>, data: Vec<C64>, domain: Domain) -> Result<Self> {
        if shape.len() > 2 {
            return Err(Error::Shape(format!("rank {} exceeds 2", shape.len())));
        }
        let expected: usize = shape.iter().product();
        if expected != data.len() {
            return Err(Error::Shape(format!(
                "shape {:?} needs {} entries, got {}",
                shape,
                expected,
                data.len()
            )));
        }
        if domain == Domain::Real {
            if let Some(z) = data.iter().find(|z| z.im != 0.0) {
                return Err(Error::Domain {
                    op: "tensor",
                    reason: format!("real-domain tensor has entry with imaginary part {}", z.im),
                });
            }
        }
        Ok(Self { shape, data, domain })
    }

    /// Real-domain tensor from real entries.
    pub fn real(shape: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        Self::with_domain(shape, data.into_iter().map(|x| c64(x, 0.0)).collect(), Domain::Real)
    }

    pub fn scalar(z: C64) -> Self {
        Self { shape: vec![], data: vec![z], domain: Domain::Complex }
    }

    pub fn real_scalar(x: f64) -> Self {
        Self { shape: vec![], data: vec![c64(x, 0.0)], domain: Domain::Real }
    }

    pub fn vector(data: Vec<C64>) -> Self {
        Self { shape: vec![data.len()], data, domain: Domain::Complex }
    }

    pub fn real_vector(data: Vec<f64>) -> Self {
        let n = data.len();
        Self { shape: vec![n], data: data.into_iter().map(|x| c64(x, 0.0)).collect(), domain: Domain::Real }
    }

    pub fn matrix(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        Self::new(vec![rows, cols], data)
    }

    /// Matrix from a list of equal-length rows.
    pub fn from_rows(rows: Vec<Vec<C64>>) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::Shape("ragged rows".into()));
        }
        Self::matrix(r, c, rows.into_iter().flatten().collect())
    }

    pub fn zeros(shape: &[usize], domain: Domain) -> Self {
        let n = shape.iter().product();
        Self { shape: shape.to_vec(), data: vec![C64::new(0.0, 0.0); n], domain }
    }

    pub fn identity(n: usize) -> Self {
        let mut data = vec![C64::new(0.0, 0.0); n * n];
        for i in 0..n {
            data[i * n + i] = C64::new(1.0, 0.0);
        }
        Self { shape: vec![n, n], data, domain: Domain::Real }
    }

    /// Square matrix with `diag` on the diagonal.
    pub fn diagonal(diag: &[C64]) -> Self {
        let n = diag.len();
        let mut data = vec![C64::new(0.0, 0.0); n * n];
        for (i, d) in diag.iter().enumerate() {
            data[i * n + i] = *d;
        }
        Self::from_parts_inferred(vec![n, n], data)
    }

    /// Builds a tensor and tags it `Real` when every imaginary part is exactly zero.
    pub(crate) fn from_parts_inferred(shape: Vec<usize>, data: Vec<C64>) -> Self {
        if data.iter().all(|z| z.im == 0.0) {
            let data = data.into_iter().map(|z| c64(z.re, 0.0)).collect();
            Self { shape, data, domain: Domain::Real }
        } else {
            Self { shape, data, domain: Domain::Complex }
        }
    }

    /// Internal constructor for callers that already enforce the invariants.
    pub(crate) fn from_parts(shape: Vec<usize>, data: Vec<C64>, domain: Domain) -> Self {
        debug_assert_eq!(shape.iter().product::<usize>(), data.len());
        debug_assert!(domain == Domain::Complex || data.iter().all(|z| z.im == 0.0));
        Self { shape, data, domain }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn rank(&self) -> usize {
        self.shape.len()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<C64> {
        self.data
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn is_real(&self) -> bool {
        self.domain == Domain::Real
    }

    pub fn rows(&self) -> usize {
        self.shape.first().copied().unwrap_or(1)
    }

    pub fn cols(&self) -> usize {
        match self.shape.len() {
            2 => self.shape[1],
            _ => 1,
        }
    }

    /// Entry `(i, j)` of a matrix.
    pub fn at(&self, i: usize, j: usize) -> C64 {
        self.data[i * self.cols() + j]
    }

    /// The single entry of a rank-0 tensor (or of any one-element tensor).
    pub fn as_scalar(&self) -> Result<C64> {
        if self.data.len() == 1 {
            Ok(self.data[0])
        } else {
            Err(Error::Shape(format!("expected a scalar, got shape {:?}", self.shape)))
        }
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn conj(&self) -> Self {
        Self { shape: self.shape.clone(), data: self.data.iter().map(C64::conj).collect(), domain: self.domain }
    }

    /// Real part as a real-domain tensor.
    pub fn re(&self) -> Self {
        Self { shape: self.shape.clone(), data: self.data.iter().map(|z| c64(z.re, 0.0)).collect(), domain: Domain::Real }
    }

    /// Imaginary part as a real-domain tensor.
    pub fn im(&self) -> Self {
        Self { shape: self.shape.clone(), data: self.data.iter().map(|z| c64(z.im, 0.0)).collect(), domain: Domain::Real }
    }

    /// Same entries retagged as complex.
    pub fn into_complex(mut self) -> Self {
        self.domain = Domain::Complex;
        self
    }

    /// Elementwise map; the result's domain is inferred from its entries.
    pub fn map(&self, f: impl Fn(C64) -> C64) -> Self {
        Self::from_parts_inferred(self.shape.clone(), self.data.iter().map(|z| f(*z)).collect())
    }

    /// Elementwise map that always yields a complex-domain tensor.
    pub fn map_complex(&self, f: impl Fn(C64) -> C64) -> Self {
        Self { shape: self.shape.clone(), data: self.data.iter().map(|z| f(*z)).collect(), domain: Domain::Complex }
    }

    pub fn zip_map(&self, other: &Self, f: impl Fn(C64, C64) -> C64) -> Result<Self> {
        self.expect_same_shape(other, "zip_map")?;
        let data = self.data.iter().zip(&other.data).map(|(a, b)| f(*a, *b)).collect();
        Ok(Self { shape: self.shape.clone(), data, domain: Domain::Complex })
    }

    pub(crate) fn expect_same_shape(&self, other: &Self, op: &str) -> Result<()> {
        if self.shape != other.shape {
            return Err(Error::Shape(format!("{op}: shapes {:?} and {:?} differ", self.shape, other.shape)));
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.expect_same_shape(other, "add")?;
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect();
        Ok(Self::from_parts(self.shape.clone(), data, join(self.domain, other.domain)))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.expect_same_shape(other, "sub")?;
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect();
        Ok(Self::from_parts(self.shape.clone(), data, join(self.domain, other.domain)))
    }

    pub fn scale(&self, c: C64) -> Self {
        let domain = if c.im == 0.0 { self.domain } else { Domain::Complex };
        Self { shape: self.shape.clone(), data: self.data.iter().map(|z| z * c).collect(), domain }
    }

    pub fn transpose(&self) -> Self {
        match self.rank() {
            2 => {
                let (r, c) = (self.shape[0], self.shape[1]);
                let mut data = Vec::with_capacity(r * c);
                for j in 0..c {
                    for i in 0..r {
                        data.push(self.data[i * c + j]);
                    }
                }
                Self { shape: vec![c, r], data, domain: self.domain }
            }
            _ => self.clone(),
        }
    }

    /// Conjugate transpose.
    pub fn dagger(&self) -> Self {
        self.transpose().conj()
    }

    /// Matrix product. Accepts `(n×k)·(k×m) → n×m` and `(n×k)·(k) → n`.
    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.rank() != 2 || !(other.rank() == 1 || other.rank() == 2) {
            return Err(Error::Shape(format!("matmul: unsupported ranks {:?} · {:?}", self.shape, other.shape)));
        }
        let (n, k) = (self.shape[0], self.shape[1]);
        let (k2, m) = (other.shape[0], other.cols());
        if k != k2 {
            return Err(Error::Shape(format!("matmul: inner dimensions {k} and {k2} differ")));
        }
        let mut data = vec![C64::new(0.0, 0.0); n * m];
        for i in 0..n {
            for p in 0..k {
                let a = self.data[i * k + p];
                if a == C64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..m {
                    data[i * m + j] += a * other.data[p * m + j];
                }
            }
        }
        let shape = if other.rank() == 1 { vec![n] } else { vec![n, m] };
        Ok(Self::from_parts(shape, data, join(self.domain, other.domain)))
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// `max_i |a_i − b_i| / max(1, max_i |b_i|)`, the relative error used by
    /// every comparison in this crate.
    pub fn rel_err(&self, reference: &Self) -> Result<f64> {
        self.expect_same_shape(reference, "rel_err")?;
        let diff = self.data.iter().zip(&reference.data).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        Ok(diff / reference.max_abs().max(1.0))
    }
}

fn join(a: Domain, b: Domain) -> Domain {
    if a == Domain::Real && b == Domain::Real {
        Domain::Real
    } else {
        Domain::Complex
    }
}

/// Unnormalized forward DFT matrix, entry `(k, m) = exp(−2πi·k·m/n)`.
pub fn dft_matrix(n: usize) -> Result<ComplexTensor> {
    fourier_matrix(n, -1.0, 1.0)
}

/// Inverse DFT matrix, entry `(n, k) = exp(2πi·n·k/N)/N`.
pub fn idft_matrix(n: usize) -> Result<ComplexTensor> {
    fourier_matrix(n, 1.0, 1.0 / n.max(1) as f64)
}

fn fourier_matrix(n: usize, sign: f64, scale: f64) -> Result<ComplexTensor> {
    if n == 0 {
        return Err(Error::InvalidDimension("DFT length must be at least 1".into()));
    }
    let mut data = Vec::with_capacity(n * n);
    for k in 0..n {
        for m in 0..n {
            // reduce k·m mod n first so the phase stays in [0, 2π)
            let phase = sign * 2.0 * PI * ((k * m) % n) as f64 / n as f64;
            data.push(C64::from_polar(scale, phase));
        }
    }
    Ok(ComplexTensor::from_parts_inferred(vec![n, n], data))
}

/// Solves `a·X = b` by Gaussian elimination with partial pivoting.
pub fn solve_linear(a: &ComplexTensor, b: &ComplexTensor) -> Result<ComplexTensor> {
    if a.rank() != 2 || a.shape[0] != a.shape[1] {
        return Err(Error::Shape(format!("solve_linear: `a` must be square, got {:?}", a.shape)));
    }
    let n = a.shape[0];
    if b.rank() == 0 || b.shape[0] != n {
        return Err(Error::Shape(format!("solve_linear: `b` shape {:?} does not match {n} rows", b.shape)));
    }
    let m = b.cols();
    let threshold = 1e-14 * a.frobenius_norm();
    let mut lu = a.data.clone();
    let mut x = b.data.clone();

    for col in 0..n {
        let (pivot_row, pivot_mag) = (col..n)
            .map(|r| (r, lu[r * n + col].norm()))
            .fold((col, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
        if pivot_mag < threshold || pivot_mag == 0.0 {
            return Err(Error::SingularMatrix { pivot: pivot_mag, threshold });
        }
        if pivot_row != col {
            for j in 0..n {
                lu.swap(col * n + j, pivot_row * n + j);
            }
            for j in 0..m {
                x.swap(col * m + j, pivot_row * m + j);
            }
        }
        let pivot = lu[col * n + col];
        for r in col + 1..n {
            let factor = lu[r * n + col] / pivot;
            if factor == C64::new(0.0, 0.0) {
                continue;
            }
            for j in col..n {
                let v = lu[col * n + j];
                lu[r * n + j] -= factor * v;
            }
            for j in 0..m {
                let v = x[col * m + j];
                x[r * m + j] -= factor * v;
            }
        }
    }

    for col in (0..n).rev() {
        let pivot = lu[col * n + col];
        for j in 0..m {
            let mut acc = x[col * m + j];
            for k in col + 1..n {
                acc -= lu[col * n + k] * x[k * m + j];
            }
            x[col * m + j] = acc / pivot;
        }
    }
    Ok(ComplexTensor::from_parts(b.shape.clone(), x, Domain::Complex))
}

/// `‖W†W − I‖_F`.
pub fn unitarity_defect(w: &ComplexTensor) -> Result<f64> {
    if w.rank() != 2 || w.shape[0] != w.shape[1] {
        return Err(Error::Shape(format!("unitarity_defect: expected a square matrix, got {:?}", w.shape)));
    }
    let gram = w.dagger().matmul(w)?;
    Ok(gram.sub(&ComplexTensor::identity(w.shape[0]))?.frobenius_norm())
}
