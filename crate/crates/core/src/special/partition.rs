//! Smooth dyadic partition of unity and the FIO frequency bump.

use serde::{Deserialize, Serialize};

fn g(u: f64) -> f64 {
    if u > 0.0 {
        (-1.0 / u).exp()
    } else {
        0.0
    }
}

fn g_prime(u: f64) -> f64 {
    // e^{-1/u}/u^2 underflows cleanly, but 1/u^2 overflows first for tiny u
    if u > 1e-3 {
        g(u) / (u * u)
    } else {
        0.0
    }
}

/// `eta(s) = 1` for `s <= 1`, `0` for `s >= 2`, and
/// `g(2-s) / (g(2-s) + g(s-1))` in between with `g(u) = exp(-1/u)`.
/// `phi(s) = eta(s) - eta(2s)` is supported in `[1/2, 2]`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PartitionOfUnity;

impl PartitionOfUnity {
    pub fn new() -> Self {
        Self
    }

    pub fn eta(&self, s: f64) -> f64 {
        if s <= 1.0 {
            return 1.0;
        }
        if s >= 2.0 {
            return 0.0;
        }
        let a = g(2.0 - s);
        let b = g(s - 1.0);
        a / (a + b)
    }

    pub fn eta_prime(&self, s: f64) -> f64 {
        if s <= 1.0 || s >= 2.0 {
            return 0.0;
        }
        let a = g(2.0 - s);
        let b = g(s - 1.0);
        let da = -g_prime(2.0 - s);
        let db = g_prime(s - 1.0);
        let den = a + b;
        (da * b - a * db) / (den * den)
    }

    pub fn phi(&self, s: f64) -> f64 {
        self.eta(s) - self.eta(2.0 * s)
    }

    pub fn phi_prime(&self, s: f64) -> f64 {
        self.eta_prime(s) - 2.0 * self.eta_prime(2.0 * s)
    }

    /// `phi_j(rho)`: `eta(rho)` for `j = 0`, else `phi(2^{-j} rho)`.
    pub fn phi_j(&self, j: u32, rho: f64) -> f64 {
        if j == 0 {
            self.eta(rho)
        } else {
            self.phi(rho * 0.5f64.powi(j as i32))
        }
    }

    /// `d/d rho phi_j(rho)`.
    pub fn phi_j_prime(&self, j: u32, rho: f64) -> f64 {
        if j == 0 {
            self.eta_prime(rho)
        } else {
            let scale = 0.5f64.powi(j as i32);
            scale * self.phi_prime(rho * scale)
        }
    }

    /// Largest radius where `phi_j` can be nonzero.
    pub fn support_radius(&self, j: u32) -> f64 {
        2.0f64.powi(j as i32 + 1)
    }
}

/// `rho_0(s) = exp(4 - 1/(s-1) - 1/(2-s))` on `(1, 2)`, zero elsewhere;
/// peaks at `rho_0(3/2) = 1`.
pub fn fio_bump(s: f64) -> f64 {
    if s <= 1.0 || s >= 2.0 {
        return 0.0;
    }
    (4.0 - 1.0 / (s - 1.0) - 1.0 / (2.0 - s)).exp()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eta_plateaus_and_midpoint() {
        let p = PartitionOfUnity::new();
        assert_eq!(p.eta(0.3), 1.0);
        assert_eq!(p.eta(1.0), 1.0);
        assert_eq!(p.eta(2.0), 0.0);
        assert!((p.eta(1.5) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn phi_support() {
        let p = PartitionOfUnity::new();
        for i in 0..=400 {
            let s = 0.01 * i as f64;
            if !(0.5..=2.0).contains(&s) {
                assert_eq!(p.phi(s), 0.0, "s={s}");
            }
        }
    }

    #[test]
    fn eta_derivative_matches_difference() {
        let p = PartitionOfUnity::new();
        for &s in &[1.05, 1.3, 1.5, 1.77, 1.95] {
            let h = 1e-6;
            let fd = (p.eta(s + h) - p.eta(s - h)) / (2.0 * h);
            assert!((fd - p.eta_prime(s)).abs() < 1e-7, "s={s}");
        }
    }

    #[test]
    fn fio_bump_shape() {
        assert_eq!(fio_bump(1.0), 0.0);
        assert_eq!(fio_bump(2.0), 0.0);
        assert!((fio_bump(1.5) - 1.0).abs() < 1e-15);
    }
}
