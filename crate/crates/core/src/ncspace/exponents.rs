//! Exponent arithmetic: decay orders, interpolation exponents and the
//! admissible range of `alpha`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `(n, p, alpha, u)` together with every derived exponent. `p` may be
/// `f64::INFINITY`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParameterSet {
    pub n: usize,
    pub p: f64,
    pub alpha: f64,
    /// Gain exponent of the `p = 4` FIO estimate.
    pub u: f64,
    /// `n/2 + alpha - 1`
    pub w_bar: f64,
    /// `(n - 1) |1/2 - 1/p|`
    pub s_p: f64,
    pub p_bar: f64,
    /// `2 - 4/p`
    pub theta1: f64,
    /// `1 - 4/p`
    pub theta2: f64,
    /// Decay exponent of the maximal norm of the dyadic pieces.
    pub mu: f64,
    /// `max{-(n-3)/p - 1/2, (n-3)/p - n/2 + 1}`
    pub alpha_threshold: f64,
}

fn inv(p: f64) -> f64 {
    if p.is_infinite() {
        0.0
    } else {
        1.0 / p
    }
}

/// `2(n+1)/(n-1)` for odd `n`, `2(n+2)/n` for even `n`.
pub fn p_bar(n: usize) -> f64 {
    let nf = n as f64;
    if n % 2 == 1 {
        if n == 1 {
            f64::INFINITY
        } else {
            2.0 * (nf + 1.0) / (nf - 1.0)
        }
    } else {
        2.0 * (nf + 2.0) / nf
    }
}

pub fn alpha_threshold(n: usize, p: f64) -> f64 {
    let nf = n as f64;
    let q = inv(p);
    (-(nf - 3.0) * q - 0.5).max((nf - 3.0) * q - nf / 2.0 + 1.0)
}

/// Smallest gain the local smoothing estimate allows at exponent `p`:
/// `(n-1)(1/2 - 1/p) - 1/p`, which equals `(n-2)/4` at `p = 4`.
pub fn u_floor(n: usize, p: f64) -> f64 {
    let q = inv(p);
    (n as f64 - 1.0) * (0.5 - q) - q
}

/// Interpolated exponent `mu` for `p >= 2`.
pub fn mu(n: usize, p: f64, alpha: f64, u: f64) -> f64 {
    let w = n as f64 / 2.0 + alpha - 1.0;
    let q = inv(p);
    if p <= 4.0 {
        -w + (u - 0.25) * (2.0 - 4.0 * q)
    } else {
        -w + (u - 0.25) * (4.0 * q)
    }
}

pub fn predicted_exponents(n: usize, p: f64, alpha: f64, u: f64) -> Result<ParameterSet> {
    if !(1..=3).contains(&n) {
        return Err(Error::InvalidArgument(format!("dimension {n} not in 1..=3")));
    }
    if !(p >= 2.0) {
        return Err(Error::InvalidArgument(format!(
            "p = {p} is below 2, outside the range of the decay estimates"
        )));
    }
    let q = inv(p);
    let nf = n as f64;
    Ok(ParameterSet {
        n,
        p,
        alpha,
        u,
        w_bar: nf / 2.0 + alpha - 1.0,
        s_p: (nf - 1.0) * (0.5 - q).abs(),
        p_bar: p_bar(n),
        theta1: 2.0 - 4.0 * q,
        theta2: 1.0 - 4.0 * q,
        mu: mu(n, p, alpha, u),
        alpha_threshold: alpha_threshold(n, p),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn thresholds() {
        assert_eq!(alpha_threshold(3, 2.0), -0.5);
        assert_eq!(alpha_threshold(2, 4.0), -0.25);
        assert_eq!(alpha_threshold(3, f64::INFINITY), -0.5);
        assert_eq!(p_bar(2), 4.0);
        assert_eq!(p_bar(3), 4.0);
    }

    #[test]
    fn p_below_two_rejected() {
        assert!(predicted_exponents(2, 1.5, 0.0, 0.0).is_err());
    }

    #[test]
    fn branches_meet_at_four() {
        let a = predicted_exponents(2, 4.0, 0.3, 0.1).unwrap();
        let lower = -a.w_bar + (a.u - 0.25) * a.theta1;
        let upper = -a.w_bar + (a.u - 0.25) * (1.0 - a.theta2);
        assert!((lower - upper).abs() < 1e-15);
        assert!((a.mu - lower).abs() < 1e-15);
    }
}
