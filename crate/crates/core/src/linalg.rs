//! Small dense complex matrices (d <= 8) and Hermitian spectral calculus.
//!
//! Everything here is sized for per-site work on matrix fields: a few
//! dozen flops per call, row-major storage, no external BLAS.

use std::ops::{Add, Index, IndexMut, Mul, Sub};

use num_complex::Complex64;

pub type C64 = Complex64;

/// Row-major square complex matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct CMat {
    d: usize,
    data: Vec<C64>,
}

impl CMat {
    pub fn zeros(d: usize) -> Self {
        Self {
            d,
            data: vec![C64::new(0.0, 0.0); d * d],
        }
    }

    pub fn identity(d: usize) -> Self {
        Self::scalar(d, 1.0)
    }

    pub fn scalar(d: usize, c: f64) -> Self {
        let mut m = Self::zeros(d);
        for i in 0..d {
            m[(i, i)] = C64::new(c, 0.0);
        }
        m
    }

    pub fn from_fn(d: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(d * d);
        for i in 0..d {
            for j in 0..d {
                data.push(f(i, j));
            }
        }
        Self { d, data }
    }

    pub fn from_real_diag(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, &v) in diag.iter().enumerate() {
            m[(i, i)] = C64::new(v, 0.0);
        }
        m
    }

    /// Builds from row-major entries; panics if the length is not a square.
    pub fn from_slice(d: usize, values: &[C64]) -> Self {
        assert_eq!(values.len(), d * d, "expected {} entries", d * d);
        Self {
            d,
            data: values.to_vec(),
        }
    }

    pub fn from_real_rows(rows: &[&[f64]]) -> Self {
        let d = rows.len();
        Self::from_fn(d, |i, j| C64::new(rows[i][j], 0.0))
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [C64] {
        &mut self.data
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.d, |i, j| self[(j, i)].conj())
    }

    pub fn scale(&self, c: f64) -> Self {
        Self {
            d: self.d,
            data: self.data.iter().map(|z| z * c).collect(),
        }
    }

    pub fn scale_c(&self, c: C64) -> Self {
        Self {
            d: self.d,
            data: self.data.iter().map(|z| z * c).collect(),
        }
    }

    pub fn trace(&self) -> C64 {
        (0..self.d).map(|i| self[(i, i)]).sum()
    }

    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Max-norm of `A - A*`.
    pub fn hermitian_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.d {
            for j in i..self.d {
                worst = worst.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        worst
    }

    /// `(A + A*) / 2`.
    pub fn hermitian_part(&self) -> Self {
        Self::from_fn(self.d, |i, j| (self[(i, j)] + self[(j, i)].conj()) * 0.5)
    }

    /// `(A - A*) / (2i)`, so that `A = re + i * im` with both parts Hermitian.
    pub fn skew_part(&self) -> Self {
        let factor = C64::new(0.0, -0.5);
        Self::from_fn(self.d, |i, j| (self[(i, j)] - self[(j, i)].conj()) * factor)
    }

    /// `A* A`.
    pub fn gram(&self) -> Self {
        let d = self.d;
        Self::from_fn(d, |i, j| (0..d).map(|k| self[(k, i)].conj() * self[(k, j)]).sum())
    }
}

impl Index<(usize, usize)> for CMat {
    type Output = C64;
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.d + j]
    }
}

impl IndexMut<(usize, usize)> for CMat {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.d + j]
    }
}

impl Add for &CMat {
    type Output = CMat;
    fn add(self, rhs: &CMat) -> CMat {
        debug_assert_eq!(self.d, rhs.d);
        CMat {
            d: self.d,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &CMat {
    type Output = CMat;
    fn sub(self, rhs: &CMat) -> CMat {
        debug_assert_eq!(self.d, rhs.d);
        CMat {
            d: self.d,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

impl Mul for &CMat {
    type Output = CMat;
    fn mul(self, rhs: &CMat) -> CMat {
        let d = self.d;
        debug_assert_eq!(d, rhs.d);
        let mut out = CMat::zeros(d);
        for i in 0..d {
            for k in 0..d {
                let a = self[(i, k)];
                if a == C64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..d {
                    out.data[i * d + j] += a * rhs.data[k * d + j];
                }
            }
        }
        out
    }
}

/// Spectral decomposition `A = V diag(values) V*` of a Hermitian matrix.
///
/// Eigenvalues are sorted in descending order; ties keep the original
/// diagonal position order.
#[derive(Clone, Debug)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    /// Eigenvectors as columns.
    pub vectors: CMat,
}

const JACOBI_MAX_SWEEPS: usize = 64;

/// Cyclic complex Jacobi eigensolver. The input is symmetrized first.
pub fn eigh(a: &CMat) -> HermitianEigen {
    let d = a.dim();
    let mut m = a.hermitian_part();
    let mut v = CMat::identity(d);
    let scale = m.frobenius();
    if d > 1 && scale > 0.0 {
        for _ in 0..JACOBI_MAX_SWEEPS {
            let off: f64 = (0..d)
                .flat_map(|i| (0..d).filter(move |&j| j != i).map(move |j| (i, j)))
                .map(|(i, j)| m[(i, j)].norm_sqr())
                .sum::<f64>()
                .sqrt();
            if off <= 1e-16 * scale {
                break;
            }
            for p in 0..d - 1 {
                for q in p + 1..d {
                    rotate(&mut m, &mut v, p, q);
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..d).collect();
    let diag: Vec<f64> = (0..d).map(|i| m[(i, i)].re).collect();
    order.sort_by(|&i, &j| diag[j].total_cmp(&diag[i]).then(i.cmp(&j)));
    let values = order.iter().map(|&i| diag[i]).collect();
    let vectors = CMat::from_fn(d, |r, c| v[(r, order[c])]);
    HermitianEigen { values, vectors }
}

fn rotate(m: &mut CMat, v: &mut CMat, p: usize, q: usize) {
    let d = m.dim();
    let apq = m[(p, q)];
    let g = apq.norm();
    if g == 0.0 {
        return;
    }
    let app = m[(p, p)].re;
    let aqq = m[(q, q)].re;
    let phase = apq / g;
    let theta = (aqq - app) / (2.0 * g);
    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
    let t = if theta == 0.0 { 1.0 } else { t };
    let c = 1.0 / (1.0 + t * t).sqrt();
    let s = t * c;
    // V = diag(1, conj(phase)) * [[c, s], [-s, c]] restricted to (p, q).
    let vpp = C64::new(c, 0.0);
    let vpq = C64::new(s, 0.0);
    let vqp = phase.conj() * (-s);
    let vqq = phase.conj() * c;
    for k in 0..d {
        let akp = m[(k, p)];
        let akq = m[(k, q)];
        m[(k, p)] = akp * vpp + akq * vqp;
        m[(k, q)] = akp * vpq + akq * vqq;
    }
    for k in 0..d {
        let apk = m[(p, k)];
        let aqk = m[(q, k)];
        m[(p, k)] = vpp.conj() * apk + vqp.conj() * aqk;
        m[(q, k)] = vpq.conj() * apk + vqq.conj() * aqk;
    }
    m[(p, q)] = C64::new(0.0, 0.0);
    m[(q, p)] = C64::new(0.0, 0.0);
    m[(p, p)] = C64::new(m[(p, p)].re, 0.0);
    m[(q, q)] = C64::new(m[(q, q)].re, 0.0);
    for k in 0..d {
        let vkp = v[(k, p)];
        let vkq = v[(k, q)];
        v[(k, p)] = vkp * vpp + vkq * vqp;
        v[(k, q)] = vkp * vpq + vkq * vqq;
    }
}

impl HermitianEigen {
    /// `V diag(f(values)) V*`.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> CMat {
        let d = self.vectors.dim();
        let fv: Vec<f64> = self.values.iter().map(|&x| f(x)).collect();
        CMat::from_fn(d, |i, j| {
            (0..d)
                .map(|k| self.vectors[(i, k)] * fv[k] * self.vectors[(j, k)].conj())
                .sum()
        })
    }

    pub fn min(&self) -> f64 {
        self.values.last().copied().unwrap_or(0.0)
    }

    pub fn max(&self) -> f64 {
        self.values.first().copied().unwrap_or(0.0)
    }
}

/// Smallest eigenvalue of the Hermitian part of `a`.
pub fn min_eigenvalue(a: &CMat) -> f64 {
    if a.dim() == 2 {
        let (lo, _) = eig2(a);
        return lo;
    }
    eigh(a).min()
}

/// Largest eigenvalue of the Hermitian part of `a`.
pub fn max_eigenvalue(a: &CMat) -> f64 {
    if a.dim() == 2 {
        let (_, hi) = eig2(a);
        return hi;
    }
    eigh(a).max()
}

fn eig2(a: &CMat) -> (f64, f64) {
    let p = a[(0, 0)].re;
    let q = a[(1, 1)].re;
    let off = (a[(0, 1)] + a[(1, 0)].conj()) * 0.5;
    let mean = 0.5 * (p + q);
    let rad = (0.25 * (p - q) * (p - q) + off.norm_sqr()).sqrt();
    (mean - rad, mean + rad)
}

/// Singular values in descending order.
pub fn singular_values(a: &CMat) -> Vec<f64> {
    eigh(&a.gram()).values.into_iter().map(|x| x.max(0.0).sqrt()).collect()
}

/// Principal square root of a PSD matrix (negative eigenvalues clipped).
pub fn psd_sqrt(a: &CMat) -> CMat {
    eigh(a).map(|x| x.max(0.0).sqrt())
}

/// Modulus `|A| = (A* A)^{1/2}`.
pub fn modulus(a: &CMat) -> CMat {
    psd_sqrt(&a.gram())
}

/// `|A|^2 = A* A`, the square modulus used for fields.
pub fn square_modulus(a: &CMat) -> CMat {
    a.gram()
}

/// In-place lower Cholesky factor of a Hermitian positive definite matrix
/// stored row-major in `a`. Returns false if a pivot is not positive.
pub fn cholesky_in_place(d: usize, a: &mut [C64]) -> bool {
    for j in 0..d {
        let mut diag = a[j * d + j].re;
        for k in 0..j {
            diag -= a[j * d + k].norm_sqr();
        }
        if !(diag > 0.0) || !diag.is_finite() {
            return false;
        }
        let ljj = diag.sqrt();
        a[j * d + j] = C64::new(ljj, 0.0);
        for i in j + 1..d {
            let mut s = a[i * d + j];
            for k in 0..j {
                s -= a[i * d + k] * a[j * d + k].conj();
            }
            a[i * d + j] = s / ljj;
        }
        for i in 0..j {
            a[i * d + j] = C64::new(0.0, 0.0);
        }
    }
    true
}

/// `log det` from a Cholesky factor.
pub fn cholesky_logdet(d: usize, l: &[C64]) -> f64 {
    (0..d).map(|i| 2.0 * l[i * d + i].re.ln()).sum()
}

/// Inverse of `L L*` written into `out` (row-major), given the lower factor `l`.
pub fn cholesky_inverse(d: usize, l: &[C64], out: &mut [C64], scratch: &mut [C64]) {
    // scratch <- L^{-1}
    for v in scratch.iter_mut().take(d * d) {
        *v = C64::new(0.0, 0.0);
    }
    for j in 0..d {
        scratch[j * d + j] = C64::new(1.0 / l[j * d + j].re, 0.0);
        for i in j + 1..d {
            let mut s = C64::new(0.0, 0.0);
            for k in j..i {
                s -= l[i * d + k] * scratch[k * d + j];
            }
            scratch[i * d + j] = s / l[i * d + i].re;
        }
    }
    // out <- L^{-*} L^{-1}
    for i in 0..d {
        for j in 0..d {
            let mut s = C64::new(0.0, 0.0);
            for k in i.max(j)..d {
                s += scratch[k * d + i].conj() * scratch[k * d + j];
            }
            out[i * d + j] = s;
        }
    }
}
