//! Scalar special functions and frequency symbols.

pub mod bessel;
pub mod gamma;
pub mod multiplier;
pub mod partition;
pub mod symbol;

pub use bessel::{bessel_j, hankel_amplitudes, BesselEvaluator, BesselParams, HankelExpansion};
pub use gamma::{ball_volume, gamma_fn, sphere_area};
pub use multiplier::{kernel_mass, m_hat, m_kernel, Multiplier, RHO_MIN};
pub use partition::{fio_bump, PartitionOfUnity};
pub use symbol::{AngularSymbol, HalfWaveBranch, PhaseConvention, RadialSymbol, SymbolKind};
