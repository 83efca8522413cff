//! The Bessel multiplier `m_hat_alpha` and the spatial kernel `m_alpha`.

use std::f64::consts::PI;

use super::bessel::{BesselEvaluator, BesselParams};
use super::gamma::{gamma_fn, gamma_unchecked};
use crate::error::{Error, Result};

/// Below this radius the removable singularity of `rho^{-nu} J_nu(2 pi rho)`
/// is always evaluated through the scaled power series.
pub const RHO_MIN: f64 = 1e-4;

/// `m_hat_alpha(rho) = pi^{1-alpha} rho^{-nu} J_nu(2 pi rho)` with
/// `nu = n/2 + alpha - 1`, together with its radial derivative
/// `-2 pi^2 rho m_hat_{alpha+1}(rho)`.
#[derive(Clone, Debug)]
pub struct Multiplier {
    alpha: f64,
    n: usize,
    nu: f64,
    main: BesselEvaluator,
    next: BesselEvaluator,
}

impl Multiplier {
    pub fn new(alpha: f64, n: usize) -> Result<Self> {
        Self::with_params(alpha, n, &BesselParams::default())
    }

    pub fn with_params(alpha: f64, n: usize, params: &BesselParams) -> Result<Self> {
        if !(1..=3).contains(&n) {
            return Err(Error::InvalidArgument(format!("dimension {n} not in 1..=3")));
        }
        if !alpha.is_finite() {
            return Err(Error::InvalidArgument(format!("alpha {alpha} is not finite")));
        }
        let nu = n as f64 / 2.0 + alpha - 1.0;
        Ok(Self {
            alpha,
            n,
            nu,
            main: BesselEvaluator::with_params(nu, params)?,
            next: BesselEvaluator::with_params(nu + 1.0, params)?,
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Bessel order `nu`, which is also the decay order `w_bar`.
    pub fn order(&self) -> f64 {
        self.nu
    }

    pub fn w_bar(&self) -> f64 {
        self.nu
    }

    /// `pi^{n/2} / Gamma(n/2 + alpha)`.
    pub fn value_at_origin(&self) -> f64 {
        PI.powf(self.n as f64 / 2.0) / gamma_unchecked(self.nu + 1.0)
    }

    fn eval_with(ev: &BesselEvaluator, alpha: f64, n: usize, rho: f64) -> f64 {
        let rho = rho.abs();
        let r = 2.0 * PI * rho;
        if rho <= RHO_MIN || r < ev.crossover() {
            // rho^{-nu} J_nu(2 pi rho) = pi^nu (r/2)^{-nu} J_nu(r)
            PI.powf(n as f64 / 2.0) * ev.scaled_series(r)
        } else {
            PI.powf(1.0 - alpha) * rho.powf(-ev.order()) * ev.asymptotic(r)
        }
    }

    pub fn value(&self, rho: f64) -> f64 {
        Self::eval_with(&self.main, self.alpha, self.n, rho)
    }

    /// `d/d rho m_hat_alpha(rho)`.
    pub fn derivative(&self, rho: f64) -> f64 {
        -2.0 * PI * PI * rho * Self::eval_with(&self.next, self.alpha + 1.0, self.n, rho)
    }
}

/// `m_hat_alpha(rho)` in dimension `n`.
pub fn m_hat(alpha: f64, n: usize, rho: f64) -> Result<f64> {
    if !(rho >= 0.0) {
        return Err(Error::InvalidArgument(format!("radius {rho} must be >= 0")));
    }
    Ok(Multiplier::new(alpha, n)?.value(rho))
}

/// `Gamma(alpha)^{-1} (1 - |x|^2)_+^{alpha - 1}` for `alpha > 0`.
pub fn m_kernel(alpha: f64, n: usize, x: &[f64]) -> Result<f64> {
    if !(alpha > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "kernel form needs alpha > 0, got {alpha}; use the multiplier"
        )));
    }
    if x.len() != n {
        return Err(Error::ShapeMismatch(format!(
            "point has {} coordinates, dimension is {n}",
            x.len()
        )));
    }
    let r2: f64 = x.iter().map(|v| v * v).sum();
    if r2 >= 1.0 {
        return Ok(0.0);
    }
    Ok((1.0 - r2).powf(alpha - 1.0) / gamma_fn(alpha)?)
}

/// `integral of m_alpha = m_hat_alpha(0) = pi^{n/2} / Gamma(n/2 + alpha)`.
pub fn kernel_mass(alpha: f64, n: usize) -> Result<f64> {
    Ok(PI.powf(n as f64 / 2.0) / gamma_fn(n as f64 / 2.0 + alpha)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ball_indicator_transform_n3() {
        for &rho in &[0.3, 1.0, 4.0] {
            let x = 2.0 * PI * rho;
            let exact = (x.sin() - x * x.cos()) / (2.0 * PI * PI * rho.powi(3));
            let got = m_hat(1.0, 3, rho).unwrap();
            assert!((got - exact).abs() < 1e-12 * exact.abs().max(1e-3), "rho={rho}");
        }
    }

    #[test]
    fn origin_value() {
        let m = Multiplier::new(0.5, 2).unwrap();
        assert!((m.value(0.0) - m.value_at_origin()).abs() < 1e-15);
        assert!((m.value(1e-5) - m.value_at_origin()).abs() < 1e-8);
    }

    #[test]
    fn derivative_matches_difference() {
        let m = Multiplier::new(1.0, 2).unwrap();
        for &rho in &[0.2, 1.7, 2.3, 3.0, 25.0] {
            let h = 1e-6;
            let fd = (m.value(rho + h) - m.value(rho - h)) / (2.0 * h);
            assert!((fd - m.derivative(rho)).abs() < 1e-7, "rho={rho}");
        }
    }

    #[test]
    fn kernel_rejections_and_support() {
        assert!(m_kernel(0.0, 2, &[0.0, 0.0]).is_err());
        assert_eq!(m_kernel(1.0, 2, &[0.3, 0.2]).unwrap(), 1.0);
        assert_eq!(m_kernel(1.5, 2, &[1.0, 0.0]).unwrap(), 0.0);
        assert!(m_kernel(1.0, 2, &[0.0]).is_err());
    }

    #[test]
    fn order_range() {
        assert!(Multiplier::new(0.0, 1).is_err());
        assert!(Multiplier::new(0.01, 1).is_ok());
    }
}
