//! Spherical means, their dyadic pieces and the related multiplier
//! operators. Everything is a pointwise multiplication on the frequency
//! lattice.

mod fio;
mod plan;

pub use fio::{fio_apply, fio_symbol, FioSpec, SpatialCutoff};
pub use plan::OperatorPlan;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::lattice::{dft_forward, dft_inverse, GridSpec, MatrixField, SpectrumField};
use crate::linalg::{psd_sqrt, CMat, C64};
use crate::special::{HalfWaveBranch, RadialSymbol};

/// Largest `j` with `2^{j+1} / t <= limit`, if any.
pub fn max_j_within(limit: f64, t: f64) -> Option<u32> {
    let x = (limit * t).log2() - 1.0 + 1e-12;
    if x < 0.0 {
        None
    } else {
        Some(x.floor() as u32)
    }
}

/// Largest `j` with `2^{j+1} / t_min <= 0.9 * Nyquist`.
pub fn j_max(grid: &GridSpec, t_min: f64) -> Option<u32> {
    max_j_within(0.9 * grid.nyquist(), t_min)
}

/// Evaluates `symbol(xi, t)` at every frequency site.
pub fn symbol_table(grid: &GridSpec, symbol: &RadialSymbol, t: f64) -> Vec<C64> {
    let n = grid.dim();
    (0..grid.num_sites())
        .into_par_iter()
        .map(|s| symbol.value(&grid.frequency(s)[..n], t))
        .collect()
}

/// `d/dt symbol(xi, t)` at every frequency site.
pub fn symbol_dt_table(grid: &GridSpec, symbol: &RadialSymbol, t: f64) -> Vec<C64> {
    let n = grid.dim();
    (0..grid.num_sites())
        .into_par_iter()
        .map(|s| symbol.dt(&grid.frequency(s)[..n], t))
        .collect()
}

fn check_t(t: f64) -> Result<()> {
    if t > 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("t = {t} must be positive")))
    }
}

/// Rejects symbols whose support leaves the Nyquist ball.
pub fn check_support(grid: &GridSpec, symbol: &RadialSymbol, t: f64) -> Result<()> {
    let limit = grid.nyquist();
    match symbol.support_radius(t) {
        Some(r) if r > limit * (1.0 + 1e-12) => Err(Error::SupportExceedsNyquist {
            needed: r,
            limit,
            max_j: max_j_within(limit, t),
        }),
        Some(_) => Ok(()),
        None => {
            // the full multiplier has no compact support; insist that the
            // lattice reaches at least |t xi| = 1
            if t * limit < 1.0 {
                Err(Error::GridTooCoarse(format!(
                    "t = {t} needs Nyquist >= {}, grid has {limit}",
                    1.0 / t
                )))
            } else {
                Ok(())
            }
        }
    }
}

/// `s(., t) F`.
pub fn apply_radial_multiplier(spectrum: &SpectrumField, symbol: &RadialSymbol, t: f64) -> Result<SpectrumField> {
    check_t(t)?;
    check_support(spectrum.grid(), symbol, t)?;
    spectrum.multiply_by(&symbol_table(spectrum.grid(), symbol, t))
}

fn apply(f: &MatrixField, symbol: &RadialSymbol, t: f64) -> Result<MatrixField> {
    check_t(t)?;
    check_support(f.grid(), symbol, t)?;
    let table = symbol_table(f.grid(), symbol, t);
    Ok(dft_inverse(&dft_forward(f).multiply_by(&table)?))
}

/// `M_t^alpha f`, the multiplier `m_hat_alpha(t xi)`.
pub fn spherical_mean(f: &MatrixField, alpha: f64, t: f64) -> Result<MatrixField> {
    apply(f, &RadialSymbol::full(alpha, f.grid().dim())?, t)
}

/// `M_{j,t}^alpha f`, the multiplier `phi_j(t xi) m_hat_alpha(t xi)`.
pub fn dyadic_piece(f: &MatrixField, alpha: f64, j: u32, t: f64) -> Result<MatrixField> {
    apply(f, &RadialSymbol::dyadic(alpha, f.grid().dim(), j)?, t)
}

/// `d/dt M_{j,t}^alpha f` through the analytic derivative symbol.
pub fn dt_dyadic_piece(f: &MatrixField, alpha: f64, j: u32, t: f64) -> Result<MatrixField> {
    check_t(t)?;
    let symbol = RadialSymbol::dyadic(alpha, f.grid().dim(), j)?;
    check_support(f.grid(), &symbol, t)?;
    let table = symbol_dt_table(f.grid(), &symbol, t);
    Ok(dft_inverse(&dft_forward(f).multiply_by(&table)?))
}

/// Dyadic pieces at several `t` sharing one forward transform.
pub fn dyadic_pieces(f: &MatrixField, alpha: f64, j: u32, ts: &[f64]) -> Result<Vec<MatrixField>> {
    let symbol = RadialSymbol::dyadic(alpha, f.grid().dim(), j)?;
    for &t in ts {
        check_t(t)?;
        check_support(f.grid(), &symbol, t)?;
    }
    let spectrum = dft_forward(f);
    ts.iter()
        .map(|&t| {
            Ok(dft_inverse(&spectrum.multiply_by(&symbol_table(
                f.grid(),
                &symbol,
                t,
            ))?))
        })
        .collect()
}

/// Littlewood-Paley block `phi(2^{-l} |xi|) f_hat`.
pub fn lp_block(f: &MatrixField, ell: i32) -> Result<MatrixField> {
    apply(f, &RadialSymbol::lp_block(ell), 1.0)
}

/// `(sum_l |Delta_l f|^2)^{1/2}` with `|A|^2 = A* A`.
pub fn square_function(f: &MatrixField, ells: std::ops::RangeInclusive<i32>) -> Result<MatrixField> {
    let d = f.matrix_dim();
    let mut acc = MatrixField::zeros(*f.grid(), d);
    for ell in ells {
        let block = lp_block(f, ell)?;
        acc = acc.add(&block.map_sites(|_, m| m.gram()))?;
    }
    Ok(acc.map_sites(|_, m| psd_sqrt(m)))
}

/// One exponential of the Hankel split of `M_{j,t}^alpha`.
pub fn half_wave_piece(
    f: &MatrixField,
    alpha: f64,
    j: u32,
    t: f64,
    branch: HalfWaveBranch,
    terms: usize,
) -> Result<MatrixField> {
    apply(f, &RadialSymbol::half_wave(alpha, f.grid().dim(), j, branch, terms)?, t)
}

fn scalar_kernel(grid: &GridSpec, table: Vec<C64>) -> Result<MatrixField> {
    Ok(dft_inverse(&SpectrumField::from_values(*grid, 1, table)?))
}

/// `G_{j,t}^alpha`: inverse transform of `2^{w j} phi_j(t xi) m_hat_alpha(t xi)`.
pub fn kernel_field(alpha: f64, j: u32, t: f64, grid: &GridSpec) -> Result<MatrixField> {
    check_t(t)?;
    let symbol = RadialSymbol::dyadic(alpha, grid.dim(), j)?;
    check_support(grid, &symbol, t)?;
    let w = symbol.multiplier().expect("dyadic symbol").w_bar();
    let gain = 2f64.powf(w * j as f64);
    let table = symbol_table(grid, &symbol, t).into_iter().map(|z| z * gain).collect();
    scalar_kernel(grid, table)
}

/// `Phi_{0,t}`: inverse transform of `phi_0(t xi) m_hat_alpha(t xi)`.
pub fn kernel_phi0(alpha: f64, t: f64, grid: &GridSpec) -> Result<MatrixField> {
    check_t(t)?;
    let symbol = RadialSymbol::dyadic(alpha, grid.dim(), 0)?;
    check_support(grid, &symbol, t)?;
    scalar_kernel(grid, symbol_table(grid, &symbol, t))
}

/// `t^{-n} int_{|x - y| <= t} f(y) dy`, by FFT against the sampled indicator.
pub fn hl_average(f: &MatrixField, t: f64) -> Result<MatrixField> {
    check_t(t)?;
    let grid = *f.grid();
    if t >= grid.length() / 2.0 {
        return Err(Error::InvalidArgument(format!(
            "radius {t} does not fit in the periodic box"
        )));
    }
    let weight = t.powi(-(grid.dim() as i32));
    let kernel: Vec<C64> = (0..grid.num_sites())
        .map(|s| {
            if grid.point_radius(s) <= t {
                C64::new(weight, 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        })
        .collect();
    convolve_scalar(f, &MatrixField::from_values(grid, 1, kernel)?)
}

/// Periodic convolution `(f * k)(x) = sum_y f(x - y) k(y) h^n` with a
/// scalar kernel.
pub fn convolve_scalar(f: &MatrixField, kernel: &MatrixField) -> Result<MatrixField> {
    if kernel.matrix_dim() != 1 || kernel.grid() != f.grid() {
        return Err(Error::ShapeMismatch("kernel must be scalar on the same grid".into()));
    }
    let k_hat = dft_forward(kernel);
    Ok(dft_inverse(&dft_forward(f).multiply_by(k_hat.values())?))
}

/// Integral `sum_x f(x) h^n` of a field.
pub fn field_integral(f: &MatrixField) -> CMat {
    let d = f.matrix_dim();
    let mut acc = CMat::zeros(d);
    for s in 0..f.num_sites() {
        for (a, z) in acc.as_mut_slice().iter_mut().zip(f.site_slice(s)) {
            *a += z;
        }
    }
    acc.scale(f.grid().cell_volume())
}
