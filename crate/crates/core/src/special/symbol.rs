//! Frequency-side symbols `s(xi, t)` with analytic `d/dt`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::bessel::HankelExpansion;
use super::multiplier::Multiplier;
use super::partition::{fio_bump, PartitionOfUnity};
use crate::error::{Error, Result};
use crate::linalg::C64;

/// Which exponential of the half-wave split: `sigma = 1` carries
/// `e^{+2 pi i t|xi|} A1`, `sigma = 2` carries `e^{-2 pi i t|xi|} A2`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum HalfWaveBranch {
    First,
    Second,
}

impl HalfWaveBranch {
    pub fn from_index(sigma: u8) -> Result<Self> {
        match sigma {
            1 => Ok(Self::First),
            2 => Ok(Self::Second),
            _ => Err(Error::InvalidArgument(format!("sigma must be 1 or 2, got {sigma}"))),
        }
    }

    fn sign(self) -> f64 {
        match self {
            Self::First => 1.0,
            Self::Second => -1.0,
        }
    }
}

/// Degree-zero homogeneous angular factor `a(xi)` of the FIO symbol.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
#[derive(Default)]
pub enum AngularSymbol {
    #[default]
    One,
    /// `1 + strength * xi_1 / |xi|`
    FirstComponent { strength: f64 },
}

impl AngularSymbol {
    pub fn eval(&self, xi: &[f64]) -> f64 {
        match *self {
            Self::One => 1.0,
            Self::FirstComponent { strength } => {
                let r = xi.iter().map(|v| v * v).sum::<f64>().sqrt();
                if r == 0.0 {
                    1.0
                } else {
                    1.0 + strength * xi[0] / r
                }
            }
        }
    }
}

/// Phase of the wave propagator: `e^{2 pi i t|xi|}` or the unit-frequency
/// `e^{i t|xi|}`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhaseConvention {
    #[default]
    TwoPi,
    Unit,
}

impl PhaseConvention {
    pub fn frequency(self) -> f64 {
        match self {
            Self::TwoPi => 2.0 * PI,
            Self::Unit => 1.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum SymbolKind {
    /// `m_hat(t|xi|)`
    Full,
    /// `phi_j(t|xi|) m_hat(t|xi|)`
    Dyadic { j: u32 },
    /// One exponential of the Hankel split of the dyadic piece.
    HalfWave {
        j: u32,
        branch: HalfWaveBranch,
        terms: usize,
    },
    /// `phi(2^{-l}|xi|)`, independent of `t`.
    LpBlock { ell: i32 },
    /// `e^{i k t|xi|} rho_0(2^{-j}|xi|) a(xi)`
    Fio {
        j: u32,
        angular: AngularSymbol,
        convention: PhaseConvention,
    },
}

/// A symbol together with the evaluators it needs.
#[derive(Clone, Debug)]
pub struct RadialSymbol {
    kind: SymbolKind,
    multiplier: Option<Multiplier>,
    hankel: Option<HankelExpansion>,
    partition: PartitionOfUnity,
}

fn radius(xi: &[f64]) -> f64 {
    xi.iter().map(|v| v * v).sum::<f64>().sqrt()
}

impl RadialSymbol {
    pub fn full(alpha: f64, n: usize) -> Result<Self> {
        Ok(Self {
            kind: SymbolKind::Full,
            multiplier: Some(Multiplier::new(alpha, n)?),
            hankel: None,
            partition: PartitionOfUnity,
        })
    }

    pub fn dyadic(alpha: f64, n: usize, j: u32) -> Result<Self> {
        Ok(Self {
            kind: SymbolKind::Dyadic { j },
            multiplier: Some(Multiplier::new(alpha, n)?),
            hankel: None,
            partition: PartitionOfUnity,
        })
    }

    pub fn half_wave(alpha: f64, n: usize, j: u32, branch: HalfWaveBranch, terms: usize) -> Result<Self> {
        if j == 0 {
            return Err(Error::InvalidArgument(
                "half-wave split needs j >= 1 so that t|xi| >= 1 on the support".into(),
            ));
        }
        let multiplier = Multiplier::new(alpha, n)?;
        let hankel = HankelExpansion::new(multiplier.order(), terms);
        Ok(Self {
            kind: SymbolKind::HalfWave { j, branch, terms },
            multiplier: Some(multiplier),
            hankel: Some(hankel),
            partition: PartitionOfUnity,
        })
    }

    pub fn lp_block(ell: i32) -> Self {
        Self {
            kind: SymbolKind::LpBlock { ell },
            multiplier: None,
            hankel: None,
            partition: PartitionOfUnity,
        }
    }

    pub fn fio(j: u32, angular: AngularSymbol, convention: PhaseConvention) -> Self {
        Self {
            kind: SymbolKind::Fio { j, angular, convention },
            multiplier: None,
            hankel: None,
            partition: PartitionOfUnity,
        }
    }

    pub fn kind(&self) -> &SymbolKind {
        &self.kind
    }

    pub fn multiplier(&self) -> Option<&Multiplier> {
        self.multiplier.as_ref()
    }

    /// True when every value is real.
    pub fn is_real(&self) -> bool {
        matches!(
            self.kind,
            SymbolKind::Full | SymbolKind::Dyadic { .. } | SymbolKind::LpBlock { .. }
        )
    }

    /// Largest `|xi|` at which the symbol can be nonzero; `None` when the
    /// symbol is not compactly supported.
    pub fn support_radius(&self, t: f64) -> Option<f64> {
        match self.kind {
            SymbolKind::Full => None,
            SymbolKind::Dyadic { j } | SymbolKind::HalfWave { j, .. } => Some(self.partition.support_radius(j) / t),
            SymbolKind::LpBlock { ell } => Some(2.0f64.powi(ell + 1)),
            SymbolKind::Fio { j, .. } => Some(2.0f64.powi(j as i32 + 1)),
        }
    }

    fn m(&self) -> &Multiplier {
        self.multiplier.as_ref().expect("symbol carries a multiplier")
    }

    /// `(A(s), A'(s))` part of the half-wave factor
    /// `C s^{-k} A_sigma(2 pi s)`, `k = nu + 1/2`.
    fn half_wave_profile(&self, branch: HalfWaveBranch, s: f64) -> (C64, C64) {
        let m = self.m();
        let hankel = self.hankel.as_ref().expect("half-wave symbol carries Hankel data");
        let k = m.order() + 0.5;
        let c = PI.powf(1.0 - m.alpha()) / (2.0 * PI).sqrt();
        let r = 2.0 * PI * s;
        let (a1, a2) = hankel.amplitudes(r);
        let (d1, d2) = hankel.amplitude_derivatives(r);
        let (a, da) = match branch {
            HalfWaveBranch::First => (a1, d1),
            HalfWaveBranch::Second => (a2, d2),
        };
        let sk = s.powf(-k);
        let value = a * (c * sk);
        let deriv = (da * (2.0 * PI) - a * (k / s)) * (c * sk);
        (value, deriv)
    }

    /// `s(xi, t)`.
    pub fn value(&self, xi: &[f64], t: f64) -> C64 {
        let rho = radius(xi);
        match &self.kind {
            SymbolKind::Full => C64::new(self.m().value(t * rho), 0.0),
            SymbolKind::Dyadic { j } => {
                let s = t * rho;
                let p = self.partition.phi_j(*j, s);
                if p == 0.0 {
                    return C64::new(0.0, 0.0);
                }
                C64::new(p * self.m().value(s), 0.0)
            }
            SymbolKind::HalfWave { j, branch, .. } => {
                let s = t * rho;
                let p = self.partition.phi_j(*j, s);
                if p == 0.0 {
                    return C64::new(0.0, 0.0);
                }
                let (prof, _) = self.half_wave_profile(*branch, s);
                C64::from_polar(p, branch.sign() * 2.0 * PI * s) * prof
            }
            SymbolKind::LpBlock { ell } => C64::new(self.partition.phi(rho * 2.0f64.powi(-ell)), 0.0),
            SymbolKind::Fio { j, angular, convention } => {
                let b = fio_bump(rho * 0.5f64.powi(*j as i32));
                if b == 0.0 {
                    return C64::new(0.0, 0.0);
                }
                C64::from_polar(b * angular.eval(xi), convention.frequency() * t * rho)
            }
        }
    }

    /// `d/dt s(xi, t)`.
    pub fn dt(&self, xi: &[f64], t: f64) -> C64 {
        let rho = radius(xi);
        match &self.kind {
            SymbolKind::Full => C64::new(rho * self.m().derivative(t * rho), 0.0),
            SymbolKind::Dyadic { j } => {
                let s = t * rho;
                let p = self.partition.phi_j(*j, s);
                let dp = self.partition.phi_j_prime(*j, s);
                if p == 0.0 && dp == 0.0 {
                    return C64::new(0.0, 0.0);
                }
                let m = self.m();
                C64::new(rho * (dp * m.value(s) + p * m.derivative(s)), 0.0)
            }
            SymbolKind::HalfWave { j, branch, .. } => {
                let s = t * rho;
                let p = self.partition.phi_j(*j, s);
                let dp = self.partition.phi_j_prime(*j, s);
                if p == 0.0 && dp == 0.0 {
                    return C64::new(0.0, 0.0);
                }
                let (prof, dprof) = self.half_wave_profile(*branch, s);
                let w = branch.sign() * 2.0 * PI;
                let e = C64::from_polar(1.0, w * s);
                let ds = e * (prof * dp + dprof * p + C64::new(0.0, w) * prof * p);
                ds * rho
            }
            SymbolKind::LpBlock { .. } => C64::new(0.0, 0.0),
            SymbolKind::Fio { convention, .. } => self.value(xi, t) * C64::new(0.0, convention.frequency() * rho),
        }
    }
}
