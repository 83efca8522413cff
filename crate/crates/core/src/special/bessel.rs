//! Bessel functions of the first kind for real order `nu > -1/2`.
//!
//! Below the crossover radius the ascending power series is summed; above
//! it the Hankel asymptotic expansion is used. Construction runs a
//! self-consistency gate comparing both evaluations on a band around the
//! crossover.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::gamma::gamma_unchecked;
use crate::error::{Error, Result};
use crate::linalg::C64;

/// Tolerance of the construction gate, measured against the amplitude
/// envelope `sqrt(2 / (pi r))` since pointwise relative error is undefined
/// at the zeros of `J_nu`.
pub const CROSSOVER_GATE_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BesselParams {
    pub series_terms: usize,
    /// `None` selects `max(14, 2 nu)`.
    pub crossover: Option<f64>,
    pub asymptotic_terms: usize,
}

impl Default for BesselParams {
    fn default() -> Self {
        Self {
            series_terms: 60,
            crossover: None,
            asymptotic_terms: 16,
        }
    }
}

/// Coefficients `a_k(nu) = prod_{m<=k} (4 nu^2 - (2m-1)^2) / (k! 8^k)` of the
/// Hankel expansion, packaged into the complex amplitudes
/// `J_nu(r) ~ r^{-1/2} (e^{ir} A1(r) + e^{-ir} A2(r))`.
///
/// The phase `exp(-i (nu pi/2 + pi/4)) / sqrt(2 pi)` is absorbed into `A1`
/// and `A2 = conj(A1)`.
#[derive(Clone, Debug, PartialEq)]
pub struct HankelExpansion {
    nu: f64,
    coefficients: Vec<f64>,
}

impl HankelExpansion {
    pub fn new(nu: f64, terms: usize) -> Self {
        let terms = terms.max(1);
        let mu = 4.0 * nu * nu;
        let mut coefficients = Vec::with_capacity(terms);
        coefficients.push(1.0);
        for k in 1..terms {
            let odd = (2 * k - 1) as f64;
            let prev = coefficients[k - 1];
            coefficients.push(prev * (mu - odd * odd) / (8.0 * k as f64));
        }
        Self { nu, coefficients }
    }

    pub fn order(&self) -> f64 {
        self.nu
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    fn phase(&self) -> C64 {
        C64::from_polar(1.0 / (2.0 * PI).sqrt(), -(self.nu * PI / 2.0 + PI / 4.0))
    }

    /// `(A1(r), A2(r))`; truncated sums, valid for `r >= 1`.
    pub fn amplitudes(&self, r: f64) -> (C64, C64) {
        let step = C64::new(0.0, 1.0 / r);
        let mut power = C64::new(1.0, 0.0);
        let mut sum = C64::new(0.0, 0.0);
        for &a in &self.coefficients {
            sum += power * a;
            power *= step;
        }
        let a1 = self.phase() * sum;
        (a1, a1.conj())
    }

    /// `d/dr (A1, A2)`.
    pub fn amplitude_derivatives(&self, r: f64) -> (C64, C64) {
        let step = C64::new(0.0, 1.0 / r);
        let mut power = step / r;
        let mut sum = C64::new(0.0, 0.0);
        for (k, &a) in self.coefficients.iter().enumerate().skip(1) {
            // d/dr (i/r)^k = -k (i/r)^k / r
            sum += power * (-(k as f64) * a);
            power *= step;
        }
        let d1 = self.phase() * sum;
        (d1, d1.conj())
    }

    /// `r^{-1/2} (e^{ir} A1 + e^{-ir} A2)`.
    pub fn reconstruct(&self, r: f64) -> f64 {
        let (a1, a2) = self.amplitudes(r);
        let e = C64::from_polar(1.0, r);
        ((e * a1 + e.conj() * a2) / r.sqrt()).re
    }

    /// Magnitude of the first omitted term, `|a_K| r^{-K} / sqrt(2 pi r) * 2`.
    pub fn truncation_bound(&self, r: f64) -> f64 {
        let k = self.coefficients.len();
        let odd = (2 * k - 1) as f64;
        let next = self.coefficients[k - 1] * (4.0 * self.nu * self.nu - odd * odd) / (8.0 * k as f64);
        2.0 * next.abs() * r.powi(-(k as i32)) / (2.0 * PI * r).sqrt()
    }
}

/// Checked construction of the Hankel amplitudes at a radius.
pub fn hankel_amplitudes(nu: f64, r: f64, terms: usize) -> Result<(C64, C64)> {
    if !(r >= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "Hankel amplitudes need r >= 1, got {r}"
        )));
    }
    if !(nu > -0.5) {
        return Err(Error::OrderOutOfRange(nu));
    }
    Ok(HankelExpansion::new(nu, terms).amplitudes(r))
}

/// Evaluator for `J_nu` with a fixed order.
#[derive(Clone, Debug)]
pub struct BesselEvaluator {
    nu: f64,
    series_terms: usize,
    crossover: f64,
    hankel: HankelExpansion,
    /// `1 / Gamma(nu + 1)`
    inv_gamma: f64,
}

impl BesselEvaluator {
    pub fn new(nu: f64) -> Result<Self> {
        Self::with_params(nu, &BesselParams::default())
    }

    pub fn with_params(nu: f64, params: &BesselParams) -> Result<Self> {
        if !(nu > -0.5) || !nu.is_finite() {
            return Err(Error::OrderOutOfRange(nu));
        }
        let crossover = params.crossover.unwrap_or_else(|| (2.0 * nu).max(14.0));
        let ev = Self {
            nu,
            series_terms: params.series_terms.max(1),
            crossover,
            hankel: HankelExpansion::new(nu, params.asymptotic_terms),
            inv_gamma: 1.0 / gamma_unchecked(nu + 1.0),
        };
        let gap = ev.crossover_gap();
        if gap > CROSSOVER_GATE_TOL {
            return Err(Error::InvalidArgument(format!(
                "Bessel J_{nu}: series and asymptotic branches disagree by {gap:e} around r = {crossover}"
            )));
        }
        Ok(ev)
    }

    pub fn order(&self) -> f64 {
        self.nu
    }

    pub fn crossover(&self) -> f64 {
        self.crossover
    }

    pub fn hankel(&self) -> &HankelExpansion {
        &self.hankel
    }

    /// Worst envelope-relative disagreement on `[0.8, 1.2] * crossover`.
    pub fn crossover_gap(&self) -> f64 {
        (0..=64)
            .map(|i| {
                let r = self.crossover * (0.8 + 0.4 * i as f64 / 64.0);
                let env = (2.0 / (PI * r)).sqrt();
                (self.series(r) - self.asymptotic(r)).abs() / env
            })
            .fold(0.0, f64::max)
    }

    /// `J_nu(r)` for `r >= 0`.
    pub fn eval(&self, r: f64) -> f64 {
        if r < self.crossover {
            self.series(r)
        } else {
            self.asymptotic(r)
        }
    }

    /// `(r/2)^{-nu} J_nu(r)` by the ascending series; finite at `r = 0`.
    pub fn scaled_series(&self, r: f64) -> f64 {
        let q = -(r * r) / 4.0;
        let mut term = self.inv_gamma;
        let mut sum = term;
        for k in 1..self.series_terms {
            term *= q / (k as f64 * (k as f64 + self.nu));
            sum += term;
            if term.abs() < 1e-17 * sum.abs() && k as f64 > r {
                break;
            }
        }
        sum
    }

    /// Ascending power series.
    pub fn series(&self, r: f64) -> f64 {
        if r == 0.0 {
            return if self.nu == 0.0 {
                1.0
            } else if self.nu > 0.0 {
                0.0
            } else {
                f64::INFINITY
            };
        }
        (r / 2.0).powf(self.nu) * self.scaled_series(r)
    }

    /// Hankel asymptotic expansion.
    pub fn asymptotic(&self, r: f64) -> f64 {
        self.hankel.reconstruct(r)
    }
}

/// `J_nu(r)` with default evaluator parameters.
///
/// The defaults pass the crossover gate reliably for orders up to about 6.
/// Larger orders can be rejected; pass a larger crossover through
/// [`BesselParams`] for those.
pub fn bessel_j(nu: f64, r: f64) -> Result<f64> {
    if !(r >= 0.0) {
        return Err(Error::InvalidArgument(format!("radius {r} must be >= 0")));
    }
    Ok(BesselEvaluator::new(nu)?.eval(r))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn values_at_origin() {
        assert_eq!(bessel_j(0.0, 0.0).unwrap(), 1.0);
        assert_eq!(bessel_j(1.0, 0.0).unwrap(), 0.0);
        assert_eq!(bessel_j(2.5, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn half_integer_closed_form() {
        for &r in &[0.5, 2.0, 50.0] {
            let exact = (2.0 / (PI * r)).sqrt() * r.sin();
            let got = bessel_j(0.5, r).unwrap();
            assert!((got - exact).abs() <= 1e-12 * exact.abs(), "r={r}");
        }
    }

    #[test]
    fn order_out_of_range() {
        assert!(BesselEvaluator::new(-0.5).is_err());
        assert!(bessel_j(-1.0, 1.0).is_err());
    }

    #[test]
    fn hankel_recurrence_exact() {
        let h = HankelExpansion::new(1.3, 10);
        let a = h.coefficients();
        assert_eq!(a[0], 1.0);
        for k in 1..a.len() {
            let odd = (2 * k - 1) as f64;
            assert_eq!(a[k], a[k - 1] * (4.0 * 1.3 * 1.3 - odd * odd) / (8.0 * k as f64));
        }
    }

    #[test]
    fn hankel_half_order_terminates() {
        let h = HankelExpansion::new(0.5, 6);
        assert!(h.coefficients()[1..].iter().all(|&a| a == 0.0));
        for &r in &[1.0, 3.3, 40.0] {
            let exact = (2.0 / (PI * r)).sqrt() * r.sin();
            assert!((h.reconstruct(r) - exact).abs() < 1e-15);
        }
    }

    #[test]
    fn hankel_conjugate_symmetry() {
        let (a1, a2) = hankel_amplitudes(0.7, 5.0, 8).unwrap();
        assert!((a1.conj() - a2).norm() < 1e-14);
        assert!(hankel_amplitudes(0.7, 0.5, 8).is_err());
    }

    #[test]
    fn hankel_order_zero_against_series() {
        let ev = BesselEvaluator::new(0.0).unwrap();
        let h = HankelExpansion::new(0.0, 6);
        let exact = ev.series(10.0);
        assert!((h.reconstruct(10.0) - exact).abs() <= 1e-6);
        assert!((h.reconstruct(10.0) - exact).abs() <= h.truncation_bound(10.0));
    }

    #[test]
    fn amplitude_derivative_matches_difference() {
        let h = HankelExpansion::new(1.5, 8);
        let r = 7.0;
        let eps = 1e-5;
        let (p, _) = h.amplitudes(r + eps);
        let (m, _) = h.amplitudes(r - eps);
        let (d, _) = h.amplitude_derivatives(r);
        assert!(((p - m) / (2.0 * eps) - d).norm() < 1e-9);
    }

    #[test]
    fn default_gate_passes_for_lab_orders() {
        for &nu in &[-0.4, 0.0, 0.5, 1.0, 1.5, 2.0, 2.5, 3.5, 5.0] {
            let ev = BesselEvaluator::new(nu).unwrap();
            assert!(ev.crossover_gap() < CROSSOVER_GATE_TOL, "nu={nu}");
        }
    }

    #[test]
    fn gate_rejects_poor_parameters() {
        let params = BesselParams {
            series_terms: 60,
            crossover: Some(6.0),
            asymptotic_terms: 4,
        };
        assert!(BesselEvaluator::with_params(0.0, &params).is_err());
    }
}
