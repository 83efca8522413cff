//! Per-site semidefinite programs
//!
//! ```text
//! minimize tr(a^p)  subject to  a >= c_k for every k,  a >= 0
//! ```
//!
//! for small Hermitian `a`. The primary solver is a log-barrier interior
//! point method with damped Newton steps in a real, Frobenius-orthonormal
//! coordinate system of the Hermitian matrices. For `d = 2` the coordinates
//! are the normalized Pauli matrices, in which `a >= c` becomes a Lorentz
//! cone condition and every derivative has a closed form; other sizes go
//! through the matrix-unit basis. Constraints enter through an active set:
//! the problem is solved on a few likely-binding constraints, the most
//! violated ones are added, and the solve repeats until the iterate
//! dominates every constraint.
//!
//! The fallback is a restarted subgradient method on
//! `b -> tr((b + s(b) I)^p)`, `s(b) = max_k lambda_max(c_k - b)`, which
//! never leaves the feasible set.

use std::f64::consts::{FRAC_1_SQRT_2, SQRT_2};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{cholesky_in_place, cholesky_inverse, cholesky_logdet, eigh, CMat, C64};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverMethod {
    InteriorPoint,
    Subgradient,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverOptions {
    pub method: SolverMethod,
    /// Stop when `(barrier parameter) / tau < gap_tol (1 + objective)`.
    pub gap_tol: f64,
    /// Smallest eigenvalue accepted in a certificate.
    pub tol_psd: f64,
    /// Per-outer-step shrink factor of the barrier weight.
    pub mu_factor: f64,
    pub max_newton: usize,
    /// Fall back to the subgradient method if Newton iterations run out.
    pub fallback: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            method: SolverMethod::InteriorPoint,
            gap_tol: 1e-9,
            tol_psd: 1e-8,
            mu_factor: 0.2,
            max_newton: 2000,
            fallback: true,
        }
    }
}

/// Violation below which a constraint counts as satisfied inside the
/// normalized problem.
const ACTIVE_TOL: f64 = 1e-13;

/// Hermitian basis element as at most two weighted matrix units.
#[derive(Clone, Copy, Debug)]
struct BasisElement {
    entries: [(usize, usize, C64); 2],
    len: usize,
}

fn hermitian_basis(d: usize) -> Vec<BasisElement> {
    let zero = (0, 0, C64::new(0.0, 0.0));
    let mut basis = Vec::with_capacity(d * d);
    for i in 0..d {
        basis.push(BasisElement {
            entries: [(i, i, C64::new(1.0, 0.0)), zero],
            len: 1,
        });
    }
    for i in 0..d {
        for j in i + 1..d {
            basis.push(BasisElement {
                entries: [
                    (i, j, C64::new(FRAC_1_SQRT_2, 0.0)),
                    (j, i, C64::new(FRAC_1_SQRT_2, 0.0)),
                ],
                len: 2,
            });
            basis.push(BasisElement {
                entries: [
                    (i, j, C64::new(0.0, FRAC_1_SQRT_2)),
                    (j, i, C64::new(0.0, -FRAC_1_SQRT_2)),
                ],
                len: 2,
            });
        }
    }
    basis
}

impl BasisElement {
    fn iter(&self) -> impl Iterator<Item = &(usize, usize, C64)> {
        self.entries[..self.len].iter()
    }
}

/// `coords_k = tr(M E_k)` for Hermitian `M`.
fn to_coords(d: usize, basis: &[BasisElement], m: &[C64], out: &mut [f64]) {
    for (k, e) in basis.iter().enumerate() {
        out[k] = e.iter().map(|&(i, j, c)| (c * m[j * d + i]).re).sum();
    }
}

fn from_coords(d: usize, basis: &[BasisElement], y: &[f64], out: &mut [C64]) {
    out.iter_mut().for_each(|v| *v = C64::new(0.0, 0.0));
    for (e, &yk) in basis.iter().zip(y) {
        for &(i, j, c) in e.iter() {
            out[i * d + j] += c * yk;
        }
    }
}

/// Real Cholesky factorization of the `m x m` matrix `h` in place (lower
/// triangle); false if `h` is not numerically positive definite.
fn factor_spd(m: usize, h: &mut [f64]) -> bool {
    for j in 0..m {
        let mut diag = h[j * m + j];
        for k in 0..j {
            diag -= h[j * m + k] * h[j * m + k];
        }
        if !(diag > 0.0) {
            return false;
        }
        let l = diag.sqrt();
        h[j * m + j] = l;
        for i in j + 1..m {
            let mut s = h[i * m + j];
            for k in 0..j {
                s -= h[i * m + k] * h[j * m + k];
            }
            h[i * m + j] = s / l;
        }
    }
    true
}

/// Solves `L L^T x = rhs` in place with the factor from [`factor_spd`].
fn solve_factored(m: usize, l: &[f64], rhs: &mut [f64]) {
    for i in 0..m {
        let mut s = rhs[i];
        for k in 0..i {
            s -= l[i * m + k] * rhs[k];
        }
        rhs[i] = s / l[i * m + i];
    }
    for i in (0..m).rev() {
        let mut s = rhs[i];
        for k in i + 1..m {
            s -= l[k * m + i] * rhs[k];
        }
        rhs[i] = s / l[i * m + i];
    }
}

/// `tr(a^p)` for PSD `a` (eigenvalues clipped at zero).
pub fn trace_power(a: &CMat, p: f64) -> f64 {
    if p == 1.0 {
        return a.trace().re;
    }
    if p == 2.0 {
        // a Hermitian: tr(a^2) = sum |a_ij|^2
        return a.as_slice().iter().map(|z| z.norm_sqr()).sum::<f64>();
    }
    eigh(a).values.iter().map(|&l| l.max(0.0).powf(p)).sum()
}

/// Gradient `p a^{p-1}` of `tr(a^p)`.
pub fn trace_power_gradient(a: &CMat, p: f64) -> CMat {
    if p == 1.0 {
        return CMat::identity(a.dim());
    }
    if p == 2.0 {
        return a.hermitian_part().scale(2.0);
    }
    eigh(a).map(|l| p * l.max(0.0).powf(p - 1.0))
}

/// `(x^q - y^q) / (x - y)`, or the derivative `q x^{q-1}` when the two
/// points (numerically) coincide.
fn power_divided_difference(q: f64, x: f64, y: f64) -> f64 {
    if (x - y).abs() <= 1e-9 * (1.0 + x.abs().max(y.abs())) {
        q * (0.5 * (x + y)).powf(q - 1.0)
    } else {
        (x.powf(q) - y.powf(q)) / (x - y)
    }
}

/// One site problem in real coordinates `y` of the Hermitian matrices.
trait SiteModel {
    /// Number of constraints; constraint 0 is `a >= 0`.
    fn count(&self) -> usize;
    fn identity(&self, out: &mut [f64]);
    /// `tr(a^p)` for positive definite `a`.
    fn objective(&mut self, y: &[f64]) -> f64;
    fn objective_derivatives(&mut self, y: &[f64], grad: &mut [f64], hess: &mut [f64]);
    /// `-log det(a - c_k)` up to a constant, or `None` outside the domain.
    fn barrier(&mut self, y: &[f64], k: usize) -> Option<f64>;
    /// Adds gradient and Hessian of [`SiteModel::barrier`]; false outside
    /// the domain.
    fn add_barrier_derivatives(&mut self, y: &[f64], k: usize, grad: &mut [f64], hess: &mut [f64]) -> bool;
    /// `lambda_max(c_k - a)`.
    fn violation(&mut self, y: &[f64], k: usize) -> f64;
    /// Writes the coordinates of `(c_k)_+` and returns `tr((c_k)_+^p)`.
    fn positive_part(&mut self, k: usize, out: &mut [f64]) -> f64;
    fn matrix(&self, y: &[f64]) -> CMat;
}

/// `d = 2` in the basis `I, sigma_x, sigma_y, sigma_z` divided by `sqrt 2`.
/// The eigenvalues of `a` are `(y_0 +- |y'|) / sqrt 2` and
/// `det(a - c) = (z_0^2 - |z'|^2) / 2` with `z = y - c`.
struct QubitModel {
    p: f64,
    cons: Vec<[f64; 4]>,
}

fn pauli_coords(m: &[C64]) -> [f64; 4] {
    [
        (m[0].re + m[3].re) * FRAC_1_SQRT_2,
        (m[1].re + m[2].re) * FRAC_1_SQRT_2,
        (m[2].im - m[1].im) * FRAC_1_SQRT_2,
        (m[0].re - m[3].re) * FRAC_1_SQRT_2,
    ]
}

fn norm3(y: &[f64]) -> f64 {
    (y[0] * y[0] + y[1] * y[1] + y[2] * y[2]).sqrt()
}

impl QubitModel {
    fn load(&mut self, cons: &[C64], p: f64) {
        self.p = p;
        self.cons.clear();
        self.cons.extend(cons.chunks(4).map(pauli_coords));
    }
}

impl SiteModel for QubitModel {
    fn count(&self) -> usize {
        self.cons.len()
    }

    fn identity(&self, out: &mut [f64]) {
        out.copy_from_slice(&[SQRT_2, 0.0, 0.0, 0.0]);
    }

    fn objective(&mut self, y: &[f64]) -> f64 {
        let p = self.p;
        if p == 2.0 {
            return y.iter().map(|v| v * v).sum();
        }
        if p == 1.0 {
            return SQRT_2 * y[0];
        }
        let r = norm3(&y[1..]);
        let hi = ((y[0] + r) * FRAC_1_SQRT_2).max(0.0);
        let lo = ((y[0] - r) * FRAC_1_SQRT_2).max(0.0);
        hi.powf(p) + lo.powf(p)
    }

    fn objective_derivatives(&mut self, y: &[f64], grad: &mut [f64], hess: &mut [f64]) {
        let p = self.p;
        hess.iter_mut().for_each(|v| *v = 0.0);
        if p == 1.0 {
            grad.copy_from_slice(&[SQRT_2, 0.0, 0.0, 0.0]);
            return;
        }
        if p == 2.0 {
            for k in 0..4 {
                grad[k] = 2.0 * y[k];
                hess[k * 4 + k] = 2.0;
            }
            return;
        }
        // F = hi^p + lo^p with hi, lo = (y_0 +- r) / sqrt 2, r = |y'|
        let r = norm3(&y[1..]);
        let hi = ((y[0] + r) * FRAC_1_SQRT_2).max(0.0);
        let lo = ((y[0] - r) * FRAC_1_SQRT_2).max(0.0);
        let s = FRAC_1_SQRT_2;
        let f_y = p * s * (hi.powf(p - 1.0) + lo.powf(p - 1.0));
        let f_r = p * s * (hi.powf(p - 1.0) - lo.powf(p - 1.0));
        let f_yy = 0.5 * p * (p - 1.0) * (hi.powf(p - 2.0) + lo.powf(p - 2.0));
        let f_yr = 0.5 * p * (p - 1.0) * (hi.powf(p - 2.0) - lo.powf(p - 2.0));
        // F_r / r without cancellation
        let f_r_over_r = p * power_divided_difference(p - 1.0, hi, lo);
        let u = if r > 0.0 {
            [y[1] / r, y[2] / r, y[3] / r]
        } else {
            [0.0; 3]
        };
        grad[0] = f_y;
        hess[0] = f_yy;
        for i in 0..3 {
            grad[i + 1] = f_r * u[i];
            hess[i + 1] = f_yr * u[i];
            hess[(i + 1) * 4] = f_yr * u[i];
            for j in 0..3 {
                let delta = if i == j { 1.0 } else { 0.0 };
                hess[(i + 1) * 4 + j + 1] = f_yy * u[i] * u[j] + f_r_over_r * (delta - u[i] * u[j]);
            }
        }
    }

    fn barrier(&mut self, y: &[f64], k: usize) -> Option<f64> {
        let c = &self.cons[k];
        let z0 = y[0] - c[0];
        let r = ((y[1] - c[1]).powi(2) + (y[2] - c[2]).powi(2) + (y[3] - c[3]).powi(2)).sqrt();
        let gap = z0 - r;
        if gap > 0.0 {
            Some(-(gap * (z0 + r)).ln())
        } else {
            None
        }
    }

    fn add_barrier_derivatives(&mut self, y: &[f64], k: usize, grad: &mut [f64], hess: &mut [f64]) -> bool {
        let c = &self.cons[k];
        let z = [y[0] - c[0], y[1] - c[1], y[2] - c[2], y[3] - c[3]];
        let r = norm3(&z[1..]);
        let gap = z[0] - r;
        if !(gap > 0.0) {
            return false;
        }
        // -log q, q = z_0^2 - |z'|^2: gradient -2 J z / q, Hessian
        // 4 (J z)(J z)^T / q^2 - 2 J / q with J = diag(1, -1, -1, -1)
        let q = gap * (z[0] + r);
        let jz = [z[0], -z[1], -z[2], -z[3]];
        for a in 0..4 {
            grad[a] -= 2.0 * jz[a] / q;
            for b in 0..4 {
                hess[a * 4 + b] += 4.0 * jz[a] * jz[b] / (q * q);
            }
        }
        hess[0] -= 2.0 / q;
        for a in 1..4 {
            hess[a * 4 + a] += 2.0 / q;
        }
        true
    }

    fn violation(&mut self, y: &[f64], k: usize) -> f64 {
        let c = &self.cons[k];
        let w = [c[1] - y[1], c[2] - y[2], c[3] - y[3]];
        (c[0] - y[0] + norm3(&w)) * FRAC_1_SQRT_2
    }

    fn positive_part(&mut self, k: usize, out: &mut [f64]) -> f64 {
        let c = self.cons[k];
        let r = norm3(&c[1..]);
        let hi = (c[0] + r) * FRAC_1_SQRT_2;
        let lo = (c[0] - r) * FRAC_1_SQRT_2;
        if lo >= 0.0 {
            out.copy_from_slice(&c);
            hi.powf(self.p) + lo.powf(self.p)
        } else if hi <= 0.0 {
            out.iter_mut().for_each(|v| *v = 0.0);
            0.0
        } else {
            // hi times the spectral projection (I + u.sigma) / 2
            let s = hi * FRAC_1_SQRT_2;
            out[0] = s;
            for i in 0..3 {
                out[i + 1] = s * c[i + 1] / r;
            }
            hi.powf(self.p)
        }
    }

    fn matrix(&self, y: &[f64]) -> CMat {
        let s = FRAC_1_SQRT_2;
        CMat::from_slice(
            2,
            &[
                C64::new((y[0] + y[3]) * s, 0.0),
                C64::new(y[1] * s, -y[2] * s),
                C64::new(y[1] * s, y[2] * s),
                C64::new((y[0] - y[3]) * s, 0.0),
            ],
        )
    }
}

/// General `d` in the matrix-unit basis.
struct MatrixModel {
    d: usize,
    p: f64,
    basis: Vec<BasisElement>,
    cons: Vec<C64>,
    a: Vec<C64>,
    fact: Vec<C64>,
    winv: Vec<C64>,
    scratch: Vec<C64>,
    rotated: Vec<C64>,
    gamma: Vec<f64>,
}

impl MatrixModel {
    fn new(d: usize) -> Self {
        let dd = d * d;
        let zeros = || vec![C64::new(0.0, 0.0); dd];
        Self {
            d,
            p: 1.0,
            basis: hermitian_basis(d),
            cons: Vec::new(),
            a: zeros(),
            fact: zeros(),
            winv: zeros(),
            scratch: zeros(),
            rotated: vec![C64::new(0.0, 0.0); dd * dd],
            gamma: vec![0.0; dd],
        }
    }

    fn load(&mut self, cons: &[C64], p: f64) {
        self.p = p;
        self.cons.clear();
        self.cons.extend_from_slice(cons);
    }

    fn set_point(&mut self, y: &[f64]) {
        from_coords(self.d, &self.basis, y, &mut self.a);
    }

    fn constraint(&self, k: usize) -> &[C64] {
        let dd = self.d * self.d;
        &self.cons[k * dd..(k + 1) * dd]
    }
}

fn mat_square(d: usize, a: &[C64], out: &mut [C64]) {
    for i in 0..d {
        for j in 0..d {
            out[i * d + j] = (0..d).map(|k| a[i * d + k] * a[k * d + j]).sum();
        }
    }
}

/// `lambda_max` of a Hermitian matrix given as a slice.
fn lambda_max_slice(d: usize, m: &[C64]) -> f64 {
    if d == 1 {
        return m[0].re;
    }
    if d == 2 {
        let p = m[0].re;
        let q = m[3].re;
        let off = (m[1] + m[2].conj()) * 0.5;
        return 0.5 * (p + q) + (0.25 * (p - q) * (p - q) + off.norm_sqr()).sqrt();
    }
    eigh(&CMat::from_slice(d, m)).max()
}

impl SiteModel for MatrixModel {
    fn count(&self) -> usize {
        self.cons.len() / (self.d * self.d)
    }

    fn identity(&self, out: &mut [f64]) {
        for (k, e) in self.basis.iter().enumerate() {
            out[k] = e.iter().filter(|&&(i, j, _)| i == j).map(|&(_, _, c)| c.re).sum();
        }
    }

    fn objective(&mut self, y: &[f64]) -> f64 {
        let (d, p) = (self.d, self.p);
        if p == 2.0 {
            return y.iter().map(|v| v * v).sum();
        }
        self.set_point(y);
        if p == 1.0 {
            (0..d).map(|i| self.a[i * d + i].re).sum()
        } else if p == 4.0 {
            mat_square(d, &self.a, &mut self.scratch);
            self.scratch.iter().map(|z| z.norm_sqr()).sum()
        } else {
            trace_power(&CMat::from_slice(d, &self.a), p)
        }
    }

    fn objective_derivatives(&mut self, y: &[f64], grad: &mut [f64], hess: &mut [f64]) {
        let (d, p) = (self.d, self.p);
        let m = d * d;
        hess.iter_mut().for_each(|v| *v = 0.0);
        if p == 1.0 {
            self.identity(grad);
            return;
        }
        if p == 2.0 {
            for k in 0..m {
                grad[k] = 2.0 * y[k];
                hess[k * m + k] = 2.0;
            }
            return;
        }
        self.set_point(y);
        // Daleckii-Krein: Hessian entries are divided differences of
        // f'(x) = p x^{p-1} in the eigenbasis of a.
        let eig = eigh(&CMat::from_slice(d, &self.a));
        let lam: Vec<f64> = eig.values.iter().map(|&l| l.max(0.0)).collect();
        let g = eig.map(|x| p * x.max(0.0).powf(p - 1.0));
        to_coords(d, &self.basis, g.as_slice(), grad);
        for i in 0..d {
            for j in 0..d {
                self.gamma[i * d + j] = p * power_divided_difference(p - 1.0, lam[i], lam[j]);
            }
        }
        let u = &eig.vectors;
        // rotated basis elements U* E_k U
        self.rotated.iter_mut().for_each(|v| *v = C64::new(0.0, 0.0));
        for (k, e) in self.basis.iter().enumerate() {
            let r = &mut self.rotated[k * m..(k + 1) * m];
            for &(i, j, c) in e.iter() {
                for a in 0..d {
                    let left = c * u[(i, a)].conj();
                    for b in 0..d {
                        r[a * d + b] += left * u[(j, b)];
                    }
                }
            }
        }
        for k in 0..m {
            for l in k..m {
                let rk = &self.rotated[k * m..(k + 1) * m];
                let rl = &self.rotated[l * m..(l + 1) * m];
                let h: f64 = (0..m).map(|ab| (rk[ab].conj() * rl[ab]).re * self.gamma[ab]).sum();
                hess[k * m + l] = h;
                hess[l * m + k] = h;
            }
        }
    }

    fn barrier(&mut self, y: &[f64], k: usize) -> Option<f64> {
        self.set_point(y);
        let dd = self.d * self.d;
        for i in 0..dd {
            self.fact[i] = self.a[i] - self.cons[k * dd + i];
        }
        if cholesky_in_place(self.d, &mut self.fact) {
            Some(-cholesky_logdet(self.d, &self.fact))
        } else {
            None
        }
    }

    fn add_barrier_derivatives(&mut self, y: &[f64], k: usize, grad: &mut [f64], hess: &mut [f64]) -> bool {
        self.set_point(y);
        let d = self.d;
        let (dd, m) = (d * d, d * d);
        for i in 0..dd {
            self.fact[i] = self.a[i] - self.cons[k * dd + i];
        }
        if !cholesky_in_place(d, &mut self.fact) {
            return false;
        }
        cholesky_inverse(d, &self.fact, &mut self.winv, &mut self.scratch);
        let w = &self.winv;
        for (k, e) in self.basis.iter().enumerate() {
            // d/dy_k (-log det S) = -tr(W E_k)
            let g: f64 = e.iter().map(|&(i, j, c)| (c * w[j * d + i]).re).sum();
            grad[k] -= g;
        }
        for k in 0..m {
            for l in k..m {
                // tr(W E_k W E_l) = sum c c' W_qi W_jp over entries (i,j) of E_k, (p,q) of E_l
                let mut h = C64::new(0.0, 0.0);
                for &(i, j, c) in self.basis[k].iter() {
                    for &(pp, q, c2) in self.basis[l].iter() {
                        h += c * c2 * w[q * d + i] * w[j * d + pp];
                    }
                }
                hess[k * m + l] += h.re;
                if l != k {
                    hess[l * m + k] += h.re;
                }
            }
        }
        true
    }

    fn violation(&mut self, y: &[f64], k: usize) -> f64 {
        self.set_point(y);
        let dd = self.d * self.d;
        for i in 0..dd {
            self.scratch[i] = self.cons[k * dd + i] - self.a[i];
        }
        lambda_max_slice(self.d, &self.scratch)
    }

    fn positive_part(&mut self, k: usize, out: &mut [f64]) -> f64 {
        let d = self.d;
        let eig = eigh(&CMat::from_slice(d, self.constraint(k)));
        let plus = eig.map(|l| l.max(0.0));
        to_coords(d, &self.basis, plus.as_slice(), out);
        eig.values.iter().map(|&l| l.max(0.0).powf(self.p)).sum()
    }

    fn matrix(&self, y: &[f64]) -> CMat {
        let mut out = vec![C64::new(0.0, 0.0); self.d * self.d];
        from_coords(self.d, &self.basis, y, &mut out);
        CMat::from_slice(self.d, &out)
    }
}

/// Iterate and linear algebra buffers of the path-following method.
struct PathState {
    m: usize,
    y: Vec<f64>,
    trial: Vec<f64>,
    dir: Vec<f64>,
    grad: Vec<f64>,
    hess: Vec<f64>,
    factor: Vec<f64>,
    obj_grad: Vec<f64>,
    obj_hess: Vec<f64>,
}

impl PathState {
    fn new(m: usize) -> Self {
        Self {
            m,
            y: vec![0.0; m],
            trial: vec![0.0; m],
            dir: vec![0.0; m],
            grad: vec![0.0; m],
            hess: vec![0.0; m * m],
            factor: vec![0.0; m * m],
            obj_grad: vec![0.0; m],
            obj_hess: vec![0.0; m * m],
        }
    }
}

/// Scratch space for one site solve.
pub(crate) struct Workspace {
    d: usize,
    qubit: QubitModel,
    general: MatrixModel,
    state: PathState,
}

impl Workspace {
    pub(crate) fn new(d: usize) -> Self {
        Self {
            d,
            qubit: QubitModel {
                p: 1.0,
                cons: Vec::new(),
            },
            general: MatrixModel::new(d),
            state: PathState::new(d * d),
        }
    }
}

/// Outcome of a normalized site solve.
#[derive(Clone, Debug)]
pub(crate) struct SiteSolve {
    pub a: Vec<C64>,
    pub iterations: usize,
}

/// `tau tr(a^p) - sum_k log det(a - c_k)` over the active constraints.
fn barrier_value<M: SiteModel>(model: &mut M, y: &[f64], active: &[usize], tau: f64) -> Option<f64> {
    let mut value = 0.0;
    for &k in active {
        value += model.barrier(y, k)?;
    }
    Some(value + tau * model.objective(y))
}

/// Assembles and factors the Newton system at the current point; false if
/// the point is infeasible or the system cannot be factored.
fn newton_system<M: SiteModel>(model: &mut M, st: &mut PathState, active: &[usize], tau: f64) -> bool {
    let m = st.m;
    model.objective_derivatives(&st.y, &mut st.obj_grad, &mut st.obj_hess);
    for k in 0..m {
        st.grad[k] = tau * st.obj_grad[k];
    }
    for (h, &o) in st.hess.iter_mut().zip(&st.obj_hess) {
        *h = tau * o;
    }
    for &k in active {
        if !model.add_barrier_derivatives(&st.y, k, &mut st.grad, &mut st.hess) {
            return false;
        }
    }
    st.factor.copy_from_slice(&st.hess);
    if factor_spd(m, &mut st.factor) {
        return true;
    }
    // regularize a numerically indefinite Hessian
    st.factor.copy_from_slice(&st.hess);
    let scale = (0..m).map(|k| st.hess[k * m + k].abs()).fold(0.0, f64::max);
    for k in 0..m {
        st.factor[k * m + k] += 1e-12 * scale.max(1.0);
    }
    factor_spd(m, &mut st.factor)
}

/// Damped Newton centering at fixed `tau` until the squared Newton
/// decrement drops below `tol` or below the rounding of the barrier value.
fn center<M: SiteModel>(
    model: &mut M,
    st: &mut PathState,
    active: &[usize],
    tau: f64,
    tol: f64,
    budget: &mut usize,
) -> Option<()> {
    let m = st.m;
    loop {
        if *budget == 0 {
            return None;
        }
        *budget -= 1;
        if !newton_system(model, st, active, tau) {
            return None;
        }
        for k in 0..m {
            st.dir[k] = -st.grad[k];
        }
        solve_factored(m, &st.factor, &mut st.dir);
        let slope: f64 = st.grad.iter().zip(&st.dir).map(|(g, s)| g * s).sum();
        if -slope <= tol {
            return Some(());
        }
        let base = barrier_value(model, &st.y, active, tau)?;
        if -slope <= 1e-13 * base.abs() {
            return Some(());
        }
        let mut step = 1.0;
        let mut accepted = false;
        while step > 1e-14 {
            for k in 0..m {
                st.trial[k] = st.y[k] + step * st.dir[k];
            }
            if let Some(v) = barrier_value(model, &st.trial, active, tau) {
                if v <= base + 0.25 * step * slope {
                    accepted = true;
                    break;
                }
            }
            step *= 0.5;
        }
        if !accepted {
            // no further decrease representable: numerically centered
            return Some(());
        }
        std::mem::swap(&mut st.y, &mut st.trial);
        if -slope * step <= 1e-14 {
            return Some(());
        }
    }
}

/// Barrier path following on the constraint subset `active`, starting from
/// the strictly feasible point in `st.y`.
///
/// Each outer step divides the barrier weight by `mu_factor`, moves along
/// the tangent of the central path and re-centers.
fn interior_point<M: SiteModel>(
    model: &mut M,
    st: &mut PathState,
    active: &[usize],
    opts: &SolverOptions,
    budget: &mut usize,
) -> Option<()> {
    let m = st.m;
    let barrier_dim = (active.len() * (m as f64).sqrt().round() as usize) as f64;
    let mut tau = 1.0;
    center(model, st, active, tau, 1e-3, budget)?;
    loop {
        let objective = model.objective(&st.y);
        if barrier_dim / tau < opts.gap_tol * (1.0 + objective) {
            return center(model, st, active, tau, 1e-10, budget);
        }
        let next = tau / opts.mu_factor;
        // tangent of the central path: (tau F'' + B'') x' = -F'
        if *budget == 0 || !newton_system(model, st, active, tau) {
            return None;
        }
        for k in 0..m {
            st.dir[k] = -st.obj_grad[k];
        }
        solve_factored(m, &st.factor, &mut st.dir);
        let base = barrier_value(model, &st.y, active, next)?;
        // the path is close to linear in 1/tau, so the tangent step is
        // tau (1 - mu) rather than next - tau
        let mut step = tau * (1.0 - opts.mu_factor);
        for _ in 0..8 {
            for k in 0..m {
                st.trial[k] = st.y[k] + step * st.dir[k];
            }
            if matches!(barrier_value(model, &st.trial, active, next), Some(v) if v < base) {
                std::mem::swap(&mut st.y, &mut st.trial);
                break;
            }
            step *= 0.25;
        }
        tau = next;
        center(model, st, active, tau, 1e-3, budget)?;
    }
}

/// Largest violation over all constraints, and its index.
fn worst_violation<M: SiteModel>(model: &mut M, y: &[f64]) -> (f64, usize) {
    let mut worst = (f64::NEG_INFINITY, 0);
    for k in 0..model.count() {
        let v = model.violation(y, k);
        if v > worst.0 {
            worst = (v, k);
        }
    }
    worst
}

/// Active-set driver. Returns the optimal coordinates and the Newton
/// iterations spent, or the iterations and best objective on failure.
fn solve_active_set<M: SiteModel>(
    model: &mut M,
    st: &mut PathState,
    opts: &SolverOptions,
) -> std::result::Result<(Vec<f64>, usize), (usize, f64)> {
    let m = st.m;
    let count = model.count();
    // (c_k)_+ is optimal for the problem restricted to {c_k, 0}; the one
    // with the largest objective is the global optimum if it dominates
    let mut single = vec![0.0; m];
    let mut best = (f64::NEG_INFINITY, 0);
    for k in 1..count {
        let v = model.positive_part(k, &mut st.trial);
        if v > best.0 {
            best = (v, k);
            single.copy_from_slice(&st.trial);
        }
    }
    if best.0 <= 0.0 {
        return Ok((vec![0.0; m], 0));
    }
    let (viol, k1) = worst_violation(model, &single);
    if viol <= ACTIVE_TOL {
        return Ok((single, 0));
    }
    let mut active = vec![0];
    for k in [best.1, k1] {
        if !active.contains(&k) {
            active.push(k);
        }
    }
    let mut budget = opts.max_newton;
    let mut eye = vec![0.0; m];
    model.identity(&mut eye);
    let zero = vec![0.0; m];
    loop {
        // feasible start (max_k lambda_max(c_k) + 1) I
        let top = active.iter().map(|&k| model.violation(&zero, k)).fold(0.0, f64::max);
        for (y, e) in st.y.iter_mut().zip(&eye) {
            *y = (top + 1.0) * e;
        }
        if interior_point(model, st, &active, opts, &mut budget).is_none() {
            return Err((opts.max_newton - budget, model.objective(&st.y)));
        }
        let (viol, k) = worst_violation(model, &st.y);
        if viol <= ACTIVE_TOL || active.len() == count {
            break;
        }
        active.push(k);
        // a second violator speeds up sites with several binding members
        for ((t, y), e) in st.trial.iter_mut().zip(&st.y).zip(&eye) {
            *t = y + viol * e;
        }
        let trial = st.trial.clone();
        let (viol2, k2) = worst_violation(model, &trial);
        if viol2 > ACTIVE_TOL && !active.contains(&k2) {
            active.push(k2);
        }
    }
    Ok((st.y.clone(), opts.max_newton - budget))
}

/// Solves one normalized site problem. `cons[0]` must be the zero matrix.
pub(crate) fn solve_normalized(
    ws: &mut Workspace,
    cons: &[C64],
    p: f64,
    opts: &SolverOptions,
) -> std::result::Result<SiteSolve, (usize, f64)> {
    let d = ws.d;
    if opts.method == SolverMethod::Subgradient {
        return Ok(subgradient(d, cons, p));
    }
    let outcome = if d == 2 {
        ws.qubit.load(cons, p);
        solve_active_set(&mut ws.qubit, &mut ws.state, opts).map(|(y, it)| (ws.qubit.matrix(&y), it))
    } else {
        ws.general.load(cons, p);
        solve_active_set(&mut ws.general, &mut ws.state, opts).map(|(y, it)| (ws.general.matrix(&y), it))
    };
    match outcome {
        Ok((a, iterations)) => Ok(SiteSolve {
            a: a.as_slice().to_vec(),
            iterations,
        }),
        Err(_) if opts.fallback => Ok(subgradient(d, cons, p)),
        Err(e) => Err(e),
    }
}

/// `(lambda_max, unit top eigenvector)` of a Hermitian matrix.
fn top_eigenpair(m: &CMat) -> (f64, Vec<C64>) {
    let eig = eigh(m);
    let d = m.dim();
    (eig.values[0], (0..d).map(|i| eig.vectors[(i, 0)]).collect())
}

/// Restarted subgradient method; always returns a feasible point.
fn subgradient(d: usize, cons: &[C64], p: f64) -> SiteSolve {
    let dd = d * d;
    let count = cons.len() / dd;
    let mats: Vec<CMat> = (0..count)
        .map(|k| CMat::from_slice(d, &cons[k * dd..(k + 1) * dd]).hermitian_part())
        .collect();
    // a(b) = b + s(b) I touches the binding constraint
    let lift = |b: &CMat| -> (CMat, f64, Vec<C64>) {
        let mut best = (f64::NEG_INFINITY, Vec::new());
        for c in &mats {
            let (l, v) = top_eigenpair(&(c - b));
            if l > best.0 {
                best = (l, v);
            }
        }
        let a = b + &CMat::scalar(d, best.0);
        (a, best.0, best.1)
    };
    let top = mats.iter().map(|c| top_eigenpair(c).0).fold(0.0, f64::max);
    let mut best_b = CMat::scalar(d, top + 1.0);
    let (a0, _, _) = lift(&best_b);
    let mut best_val = trace_power(&a0, p);
    let mut iterations = 0;
    let mut step = 0.25 * (1.0 + top);
    for _stage in 0..48 {
        let mut b = best_b.clone();
        for _ in 0..300 {
            iterations += 1;
            let (a, _, v) = lift(&b);
            let val = trace_power(&a, p);
            if val < best_val {
                best_val = val;
                best_b = b.clone();
            }
            let grad_a = trace_power_gradient(&a, p);
            let tr = grad_a.trace().re;
            let vv = CMat::from_fn(d, |i, j| v[i] * v[j].conj());
            let g = &grad_a - &vv.scale(tr);
            let norm = g.frobenius();
            if norm == 0.0 {
                break;
            }
            b = &b - &g.scale(step / norm);
        }
        step *= 0.5;
    }
    let (a, _, _) = lift(&best_b);
    SiteSolve {
        a: a.as_slice().to_vec(),
        iterations,
    }
}

/// Solves `min tr(a^p)` s.t. `a >= c` for every `c` in `constraints`, `a >= 0`,
/// for finite `p >= 1`. Returns the dominator in original units.
pub fn solve_site(constraints: &[CMat], p: f64, opts: &SolverOptions) -> Result<(CMat, f64)> {
    let d = constraints
        .first()
        .map(|c| c.dim())
        .ok_or_else(|| Error::InvalidArgument("empty constraint list".into()))?;
    let mut flat = vec![C64::new(0.0, 0.0); d * d];
    for c in constraints {
        if c.dim() != d {
            return Err(Error::ShapeMismatch("constraints of different sizes".into()));
        }
        flat.extend_from_slice(c.hermitian_part().as_slice());
    }
    let mut ws = Workspace::new(d);
    let (a, _) = solve_scaled(&mut ws, &mut flat, p, opts, 0)?;
    let obj = trace_power(&a, p);
    Ok((a, obj))
}

/// Normalizes, solves and rescales one site. `flat[0..d^2]` is the zero
/// constraint; `flat` is modified in place.
pub(crate) fn solve_scaled(
    ws: &mut Workspace,
    flat: &mut [C64],
    p: f64,
    opts: &SolverOptions,
    site: usize,
) -> Result<(CMat, usize)> {
    let d = ws.d;
    let scale = flat
        .chunks(d * d)
        .map(|c| c.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt())
        .fold(0.0, f64::max);
    if scale == 0.0 {
        return Ok((CMat::zeros(d), 0));
    }
    flat.iter_mut().for_each(|z| *z /= scale);
    match solve_normalized(ws, flat, p, opts) {
        Ok(sol) => Ok((CMat::from_slice(d, &sol.a).scale(scale), sol.iterations)),
        Err((iterations, best)) => Err(Error::SolverNonConvergence {
            site,
            iterations,
            best_value: best * scale.powf(p),
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::min_eigenvalue;

    fn opts(method: SolverMethod) -> SolverOptions {
        SolverOptions {
            method,
            ..SolverOptions::default()
        }
    }

    #[test]
    fn coords_roundtrip() {
        let d = 3;
        let basis = hermitian_basis(d);
        let m = CMat::from_fn(d, |i, j| C64::new((i + 2 * j) as f64, i as f64 - j as f64)).hermitian_part();
        let mut y = vec![0.0; 9];
        to_coords(d, &basis, m.as_slice(), &mut y);
        let mut back = vec![C64::new(0.0, 0.0); 9];
        from_coords(d, &basis, &y, &mut back);
        for (x, z) in back.iter().zip(m.as_slice()) {
            assert!((x - z).norm() < 1e-14);
        }
        let f: f64 = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!((f - m.frobenius()).abs() < 1e-12);
    }

    fn random_constraints(d: usize, count: usize, seed: u64) -> Vec<C64> {
        // deterministic pseudo-random Hermitian matrices, cons[0] = 0
        let mut state = seed;
        let mut next = move || {
            state = state
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            ((state >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        };
        let mut cons = vec![C64::new(0.0, 0.0); d * d];
        for _ in 0..count {
            let m = CMat::from_fn(d, |_, _| C64::new(next(), next())).hermitian_part();
            cons.extend_from_slice(m.as_slice());
        }
        cons
    }

    #[test]
    fn qubit_model_matches_matrix_model() {
        let o = SolverOptions::default();
        for p in [1.5, 2.0, 3.0, 4.0] {
            for seed in 0..20 {
                let cons = random_constraints(2, 6, seed);
                let mut qubit = QubitModel { p, cons: Vec::new() };
                qubit.load(&cons, p);
                let mut general = MatrixModel::new(2);
                general.load(&cons, p);
                let (yq, _) = solve_active_set(&mut qubit, &mut PathState::new(4), &o).unwrap();
                let (yg, _) = solve_active_set(&mut general, &mut PathState::new(4), &o).unwrap();
                let (aq, ag) = (qubit.matrix(&yq), general.matrix(&yg));
                let (vq, vg) = (trace_power(&aq, p), trace_power(&ag, p));
                assert!((vq - vg).abs() <= 1e-7 * (1.0 + vg), "p {p} seed {seed}: {vq} vs {vg}");
            }
        }
    }

    #[test]
    fn qubit_derivatives_match_matrix_model() {
        let cons = random_constraints(2, 1, 5);
        let y = [1.3, 0.2, -0.4, 0.3];
        for p in [1.5, 3.0, 4.0] {
            let mut qubit = QubitModel { p, cons: Vec::new() };
            qubit.load(&cons, p);
            let mut general = MatrixModel::new(2);
            general.load(&cons, p);
            // general model coordinates of the same matrix
            let a = qubit.matrix(&y);
            let mut yg = [0.0; 4];
            to_coords(2, &general.basis, a.as_slice(), &mut yg);
            assert!((qubit.objective(&y) - general.objective(&yg)).abs() < 1e-12);
            let bq = qubit.barrier(&y, 1).unwrap();
            let bg = general.barrier(&yg, 1).unwrap();
            // q = 2 det(a - c)
            assert!((bq + 2f64.ln() - bg).abs() < 1e-12);
            assert!((qubit.violation(&y, 1) - general.violation(&yg, 1)).abs() < 1e-12);
            // Hessian quadratic forms along the same matrix direction agree
            let dir = [0.3, -0.1, 0.7, 0.2];
            let dm = qubit.matrix(&dir);
            let mut dg = [0.0; 4];
            to_coords(2, &general.basis, dm.as_slice(), &mut dg);
            let (mut gq, mut hq, mut gg, mut hg) = ([0.0; 4], [0.0; 16], [0.0; 4], [0.0; 16]);
            qubit.objective_derivatives(&y, &mut gq, &mut hq);
            general.objective_derivatives(&yg, &mut gg, &mut hg);
            assert!(qubit.add_barrier_derivatives(&y, 1, &mut gq, &mut hq));
            assert!(general.add_barrier_derivatives(&yg, 1, &mut gg, &mut hg));
            let form = |g: &[f64], h: &[f64], v: &[f64]| {
                let lin: f64 = g.iter().zip(v).map(|(a, b)| a * b).sum();
                let quad: f64 = (0..4)
                    .map(|i| (0..4).map(|j| v[i] * h[i * 4 + j] * v[j]).sum::<f64>())
                    .sum();
                (lin, quad)
            };
            let (lq, qq) = form(&gq, &hq, &dir);
            let (lg, qg) = form(&gg, &hg, &dg);
            assert!((lq - lg).abs() < 1e-10 * (1.0 + lg.abs()), "p {p}: {lq} vs {lg}");
            assert!((qq - qg).abs() < 1e-10 * (1.0 + qg.abs()), "p {p}: {qq} vs {qg}");
        }
    }

    #[test]
    fn commuting_projections() {
        let cons = [CMat::from_real_diag(&[1.0, 0.0]), CMat::from_real_diag(&[0.0, 1.0])];
        for method in [SolverMethod::InteriorPoint, SolverMethod::Subgradient] {
            for &(p, v) in &[(1.0, 2.0), (2.0, 2.0), (4.0, 2.0)] {
                let (a, obj) = solve_site(&cons, p, &opts(method)).unwrap();
                assert!((obj - v).abs() < 1e-6, "{method:?} p={p}: {obj}");
                for c in &cons {
                    assert!(min_eigenvalue(&(&a - c)) >= -1e-8);
                }
            }
        }
    }

    #[test]
    fn single_constraint_is_its_own_dominator() {
        let x = CMat::from_real_rows(&[&[2.0, 0.5], &[0.5, 1.0]]);
        let (a, obj) = solve_site(std::slice::from_ref(&x), 2.0, &SolverOptions::default()).unwrap();
        assert!((obj - trace_power(&x, 2.0)).abs() < 1e-6);
        assert!((&a - &x).frobenius() < 1e-3);
    }

    #[test]
    fn general_power_gradient_matches_difference() {
        let a = CMat::from_fn(3, |i, j| {
            if i == j {
                C64::new(2.0 + i as f64, 0.0)
            } else {
                C64::new(0.3, 0.1 * (i as f64 - j as f64))
            }
        })
        .hermitian_part();
        let dir = CMat::from_fn(3, |i, j| {
            C64::new((i * j) as f64 * 0.1 + 0.2, (i as f64 - j as f64) * 0.3)
        })
        .hermitian_part();
        for &p in &[1.5, 2.0, 3.0, 4.0] {
            let h = 1e-5;
            let fd = (trace_power(&(&a + &dir.scale(h)), p) - trace_power(&(&a - &dir.scale(h)), p)) / (2.0 * h);
            let g = trace_power_gradient(&a, p);
            let an = (&g * &dir).trace().re;
            assert!((fd - an).abs() <= 1e-5 * an.abs(), "p={p}");
        }
    }

    #[test]
    fn non_integer_power_solves() {
        let cons = [
            CMat::from_real_rows(&[&[1.0, 0.0], &[0.0, 0.0]]),
            CMat::from_real_rows(&[&[0.5, 0.5], &[0.5, 0.5]]),
        ];
        let (_, ip) = solve_site(&cons, 3.0, &SolverOptions::default()).unwrap();
        let (_, sg) = solve_site(&cons, 3.0, &opts(SolverMethod::Subgradient)).unwrap();
        assert!((ip - sg).abs() < 1e-4 * (1.0 + ip), "{ip} vs {sg}");
    }
}
