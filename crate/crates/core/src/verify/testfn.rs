//! Seeded test fields.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{dft_forward, dft_inverse, sample_function, GridSpec, MatrixField};
use crate::linalg::{CMat, C64};
use crate::special::PartitionOfUnity;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TestFunction {
    /// `exp(-|x|^2 / (2 w^2)) H` with a fixed Hermitian `H`.
    Gaussian {
        width: f64,
    },
    /// Hermitian white noise shaped to equal energy per frequency octave.
    WhiteBand {
        seed: u64,
    },
    /// Independent Hermitian Gaussian matrices at every site.
    MatrixRandom {
        seed: u64,
    },
    /// Random Hermitian trigonometric polynomial with frequency offsets
    /// below `N/4` per axis.
    BandLimited {
        seed: u64,
    },
    /// `(-1)^{sum floor(x_i / cell)} H`.
    Checkerboard {
        cell: f64,
    },
    /// `c I`.
    Constant {
        value: f64,
    },
    Zero,
}

impl TestFunction {
    pub fn build(&self, grid: &GridSpec, d: usize) -> Result<MatrixField> {
        match *self {
            Self::Gaussian { width } => gaussian(grid, d, width),
            Self::WhiteBand { seed } => white_band(grid, d, seed),
            Self::MatrixRandom { seed } => matrix_random(grid, d, seed),
            Self::BandLimited { seed } => band_limited_hermitian(grid, d, seed),
            Self::Checkerboard { cell } => checkerboard(grid, d, cell),
            Self::Constant { value } => sample_function(*grid, d, |_| CMat::scalar(d, value)),
            Self::Zero => Ok(MatrixField::zeros(*grid, d)),
        }
    }
}

/// Fixed Hermitian profile matrix with distinct eigenvalues and complex
/// off-diagonal entries.
pub fn profile_matrix(d: usize) -> CMat {
    CMat::from_fn(d, |i, j| {
        if i == j {
            C64::new(1.0 / (1.0 + i as f64), 0.0)
        } else {
            let (lo, hi) = (i.min(j) as f64, i.max(j) as f64);
            let z = C64::new(0.25 / (1.0 + lo + hi), 0.15 * (hi - lo));
            if i < j {
                z
            } else {
                z.conj()
            }
        }
    })
}

pub fn gaussian(grid: &GridSpec, d: usize, width: f64) -> Result<MatrixField> {
    if !(width > 0.0) {
        return Err(Error::InvalidArgument(format!("width {width} must be positive")));
    }
    let h = profile_matrix(d);
    sample_function(*grid, d, |x| {
        let r2: f64 = x.iter().map(|v| v * v).sum();
        h.scale((-r2 / (2.0 * width * width)).exp())
    })
}

fn random_hermitian(d: usize, rng: &mut ChaCha8Rng) -> CMat {
    let mut m = CMat::from_fn(d, |_, _| {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        C64::new(re, im)
    });
    m = m.hermitian_part();
    m
}

pub fn matrix_random(grid: &GridSpec, d: usize, seed: u64) -> Result<MatrixField> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut values = Vec::with_capacity(grid.num_sites() * d * d);
    for _ in 0..grid.num_sites() {
        values.extend_from_slice(random_hermitian(d, &mut rng).as_slice());
    }
    MatrixField::from_values(*grid, d, values)
}

/// White Hermitian noise times the radial weight
/// `|xi|^{-n/2} (1 - eta(4|xi|))`, so that every dyadic shell
/// `2^{k-1} <= |xi| <= 2^{k+1}` above `1/2` carries the same expected energy.
pub fn white_band(grid: &GridSpec, d: usize, seed: u64) -> Result<MatrixField> {
    let noise = matrix_random(grid, d, seed)?;
    let eta = PartitionOfUnity;
    let half_n = grid.dim() as f64 / 2.0;
    let weight: Vec<C64> = (0..grid.num_sites())
        .map(|s| {
            let r = grid.frequency_radius(s);
            if r == 0.0 {
                C64::new(0.0, 0.0)
            } else {
                C64::new(r.powf(-half_n) * (1.0 - eta.eta(4.0 * r)), 0.0)
            }
        })
        .collect();
    let shaped = dft_inverse(&dft_forward(&noise).multiply_by(&weight)?);
    // radial real weight keeps the field Hermitian up to rounding
    Ok(shaped.map_sites(|_, m| m.hermitian_part()))
}

/// `f = sum_k c_k e^{2 pi i k.x / L}` with Hermitian `c_{-k} = c_k^*`-paired
/// coefficients and `|k_i| < N/4`, so `f` is Hermitian at every site and
/// products of two such fields are still resolved by the lattice.
pub fn band_limited_hermitian(grid: &GridSpec, d: usize, seed: u64) -> Result<MatrixField> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = grid.dim();
    let size = grid.size() as i64;
    let quarter = size / 4;
    // random Gaussian spectrum on the offset box |k_i| < N/4, decaying so
    // the field is smooth-ish
    let mut spectrum = vec![C64::new(0.0, 0.0); grid.num_sites() * d * d];
    let freq_scale = 1.0 / grid.freq_spacing();
    for s in 0..grid.num_sites() {
        let off = grid.offsets(s);
        if off[..n].iter().any(|&k| k.abs() >= quarter) {
            continue;
        }
        let r = grid.frequency_radius(s) * 4.0 / (quarter as f64 / freq_scale).max(1e-300);
        let amp = (-r * r / 8.0).exp();
        let m = random_hermitian(d, &mut rng).scale(amp);
        spectrum[s * d * d..(s + 1) * d * d].copy_from_slice(m.as_slice());
    }
    let field = dft_inverse(&crate::lattice::SpectrumField::from_values(*grid, d, spectrum)?);
    // f(x) = g(x) + g(x)^*: the Hermitian part keeps the band limit
    Ok(field.map_sites(|_, m| m.hermitian_part()))
}

pub fn checkerboard(grid: &GridSpec, d: usize, cell: f64) -> Result<MatrixField> {
    if !(cell > 0.0) {
        return Err(Error::InvalidArgument(format!("cell {cell} must be positive")));
    }
    let h = profile_matrix(d);
    sample_function(*grid, d, |x| {
        let parity: i64 = x.iter().map(|v| (v / cell).floor() as i64).sum();
        if parity.rem_euclid(2) == 0 {
            h.clone()
        } else {
            h.scale(-1.0)
        }
    })
}
