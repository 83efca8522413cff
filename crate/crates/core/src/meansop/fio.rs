//! The frequency-localized wave operator
//! `F_j f(x, t) = rho_1(x, t) int e^{2 pi i (x.xi + t|xi|)} rho_0(|2^{-j} xi|) a(xi) f_hat(xi) dxi`.

use serde::{Deserialize, Serialize};

use super::{check_support, check_t, symbol_table};
use crate::error::Result;
use crate::lattice::{dft_forward, dft_inverse, GridSpec, MatrixField};
use crate::special::{AngularSymbol, PartitionOfUnity, PhaseConvention, RadialSymbol};

/// Space-time cutoff `rho_1`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SpatialCutoff {
    One,
    /// `prod_i eta(|x_i| / radius) * eta(1 + 2 dist(t, [1, 2]))`; `radius`
    /// defaults to a quarter of the box.
    TensorBump {
        radius: Option<f64>,
    },
}

impl Default for SpatialCutoff {
    fn default() -> Self {
        Self::TensorBump { radius: None }
    }
}

impl SpatialCutoff {
    pub fn eval(&self, grid: &GridSpec, x: &[f64], t: f64) -> f64 {
        match *self {
            Self::One => 1.0,
            Self::TensorBump { radius } => {
                let eta = PartitionOfUnity;
                let r = radius.unwrap_or(grid.length() / 4.0);
                let space: f64 = x.iter().map(|v| eta.eta(v.abs() / r)).product();
                let dist = if t < 1.0 {
                    1.0 - t
                } else if t > 2.0 {
                    t - 2.0
                } else {
                    0.0
                };
                space * eta.eta(1.0 + 2.0 * dist)
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FioSpec {
    pub j: u32,
    #[serde(default)]
    pub angular: AngularSymbol,
    #[serde(default)]
    pub cutoff: SpatialCutoff,
    #[serde(default)]
    pub convention: PhaseConvention,
}

impl FioSpec {
    pub fn new(j: u32) -> Self {
        Self {
            j,
            angular: AngularSymbol::One,
            cutoff: SpatialCutoff::default(),
            convention: PhaseConvention::TwoPi,
        }
    }
}

pub fn fio_symbol(spec: &FioSpec) -> RadialSymbol {
    RadialSymbol::fio(spec.j, spec.angular, spec.convention)
}

/// `F_j f(., t)` on the lattice.
pub fn fio_apply(f: &MatrixField, spec: &FioSpec, t: f64) -> Result<MatrixField> {
    if !(t >= 0.0) {
        check_t(t)?;
    }
    let grid = *f.grid();
    let symbol = fio_symbol(spec);
    check_support(&grid, &symbol, t.max(1.0))?;
    let table = symbol_table(&grid, &symbol, t);
    let g = dft_inverse(&dft_forward(f).multiply_by(&table)?);
    if spec.cutoff == SpatialCutoff::One {
        return Ok(g);
    }
    let n = grid.dim();
    Ok(g.map_sites(|s, m| m.scale(spec.cutoff.eval(&grid, &grid.point(s)[..n], t))))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::fio_bump;

    #[test]
    fn cutoff_plateau() {
        let g = GridSpec::new(2, 16, 8.0).unwrap();
        let c = SpatialCutoff::default();
        assert_eq!(c.eval(&g, &[0.5, -1.0], 1.5), 1.0);
        assert_eq!(c.eval(&g, &[0.5, -1.0], 0.4), 0.0);
        assert_eq!(c.eval(&g, &[4.0, 0.0], 1.5), 0.0);
    }

    #[test]
    fn zero_time_is_frequency_cutoff() {
        let g = GridSpec::new(1, 64, 8.0).unwrap();
        let f =
            crate::lattice::sample_function(g, 1, |x| crate::linalg::CMat::scalar(1, (-x[0] * x[0]).exp())).unwrap();
        let mut spec = FioSpec::new(1);
        spec.cutoff = SpatialCutoff::One;
        let out = fio_apply(&f, &spec, 0.0).unwrap();
        let direct = dft_inverse(
            &dft_forward(&f)
                .multiply_by(
                    &(0..64)
                        .map(|s| crate::linalg::C64::new(fio_bump(g.frequency_radius(s) / 2.0), 0.0))
                        .collect::<Vec<_>>(),
                )
                .unwrap(),
        );
        assert!(out.sub(&direct).unwrap().max_abs() < 1e-14);
    }
}
