//! Periodic grids on R^n, matrix-valued fields on them, and the centered
//! discrete Fourier transform with the `exp(-2 pi i <x, xi>)` convention.
//!
//! Spatial sites sit at `x = h (i - N/2)` and frequency sites at
//! `xi = (k - N/2) / L` on every axis, so both lattices are centered and the
//! forward transform approximates `int exp(-2 pi i x.xi) f(x) dx`.

use std::marker::PhantomData;
use std::sync::Arc;

use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{CMat, C64};

/// Periodic discretization of R^n.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    n: usize,
    size: usize,
    length: f64,
}

impl GridSpec {
    /// `n` in {1,2,3}, `size` a power of two >= 8, `length > 0`.
    pub fn new(n: usize, size: usize, length: f64) -> Result<Self> {
        if !(1..=3).contains(&n) {
            return Err(Error::InvalidGrid(format!("dimension {n} not in {{1,2,3}}")));
        }
        if size < 8 || !size.is_power_of_two() {
            return Err(Error::InvalidGrid(format!(
                "resolution {size} must be a power of two >= 8"
            )));
        }
        if !(length > 0.0) || !length.is_finite() {
            return Err(Error::InvalidGrid(format!("box length {length} must be positive")));
        }
        Ok(Self { n, size, length })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Points per axis.
    pub fn size(&self) -> usize {
        self.size
    }

    /// Box side length.
    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn spacing(&self) -> f64 {
        self.length / self.size as f64
    }

    pub fn freq_spacing(&self) -> f64 {
        1.0 / self.length
    }

    /// Per-axis Nyquist magnitude `N / (2L)`; also the radius of the largest
    /// ball inside the frequency lattice.
    pub fn nyquist(&self) -> f64 {
        self.freq_spacing() * (self.size / 2) as f64
    }

    pub fn num_sites(&self) -> usize {
        self.size.pow(self.n as u32)
    }

    /// Spatial cell volume `h^n`.
    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.n as i32)
    }

    /// Frequency cell volume `(1/L)^n`.
    pub fn freq_cell_volume(&self) -> f64 {
        self.freq_spacing().powi(self.n as i32)
    }

    /// Per-axis lattice indices of a site (row-major, last axis fastest).
    pub fn multi_index(&self, site: usize) -> [usize; 3] {
        let mut idx = [0usize; 3];
        let mut rest = site;
        for axis in (0..self.n).rev() {
            idx[axis] = rest % self.size;
            rest /= self.size;
        }
        idx
    }

    pub fn site_of(&self, idx: &[usize]) -> usize {
        idx.iter().take(self.n).fold(0, |acc, &i| acc * self.size + i)
    }

    /// Centered integer offsets `i - N/2`.
    pub fn offsets(&self, site: usize) -> [i64; 3] {
        let idx = self.multi_index(site);
        let half = (self.size / 2) as i64;
        let mut off = [0i64; 3];
        for axis in 0..self.n {
            off[axis] = idx[axis] as i64 - half;
        }
        off
    }

    /// Spatial coordinates of a site (unused axes are zero).
    pub fn point(&self, site: usize) -> [f64; 3] {
        let off = self.offsets(site);
        let h = self.spacing();
        [off[0] as f64 * h, off[1] as f64 * h, off[2] as f64 * h]
    }

    /// Frequency coordinates of a site (unused axes are zero).
    pub fn frequency(&self, site: usize) -> [f64; 3] {
        let off = self.offsets(site);
        let dxi = self.freq_spacing();
        [off[0] as f64 * dxi, off[1] as f64 * dxi, off[2] as f64 * dxi]
    }

    pub fn frequency_radius(&self, site: usize) -> f64 {
        let xi = self.frequency(site);
        (xi[0] * xi[0] + xi[1] * xi[1] + xi[2] * xi[2]).sqrt()
    }

    pub fn point_radius(&self, site: usize) -> f64 {
        let x = self.point(site);
        (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt()
    }

    /// `|xi|` for every frequency site.
    pub fn frequency_radii(&self) -> Vec<f64> {
        (0..self.num_sites()).map(|s| self.frequency_radius(s)).collect()
    }

    /// `(-1)^(sum of lattice indices)`, the centering twiddle.
    fn parity(&self, site: usize) -> f64 {
        let idx = self.multi_index(site);
        if idx.iter().take(self.n).sum::<usize>() % 2 == 0 {
            1.0
        } else {
            -1.0
        }
    }
}

/// Representation marker for fields.
pub trait Representation: Clone + Copy + std::fmt::Debug + Send + Sync + 'static {
    const FLAG: u8;
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Spatial;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Frequency;

impl Representation for Spatial {
    const FLAG: u8 = 0;
}

impl Representation for Frequency {
    const FLAG: u8 = 1;
}

/// One `d x d` complex matrix per lattice site, site-major and row-major
/// inside each matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Field<R: Representation> {
    grid: GridSpec,
    d: usize,
    values: Vec<C64>,
    _repr: PhantomData<R>,
}

/// Matrix-valued function sampled on the spatial lattice.
pub type MatrixField = Field<Spatial>;
/// Matrix-valued function sampled on the frequency lattice.
pub type SpectrumField = Field<Frequency>;

pub const MAX_MATRIX_DIM: usize = 8;

impl<R: Representation> Field<R> {
    pub fn zeros(grid: GridSpec, d: usize) -> Self {
        Self {
            grid,
            d,
            values: vec![C64::new(0.0, 0.0); grid.num_sites() * d * d],
            _repr: PhantomData,
        }
    }

    pub fn from_values(grid: GridSpec, d: usize, values: Vec<C64>) -> Result<Self> {
        if d == 0 || d > MAX_MATRIX_DIM {
            return Err(Error::InvalidArgument(format!(
                "matrix dimension {d} outside 1..={MAX_MATRIX_DIM}"
            )));
        }
        let expected = grid.num_sites() * d * d;
        if values.len() != expected {
            return Err(Error::ShapeMismatch(format!(
                "expected {expected} values, got {}",
                values.len()
            )));
        }
        if let Some(pos) = values.iter().position(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::NonFinite { site: pos / (d * d) });
        }
        Ok(Self {
            grid,
            d,
            values,
            _repr: PhantomData,
        })
    }

    pub(crate) fn from_values_unchecked(grid: GridSpec, d: usize, values: Vec<C64>) -> Self {
        debug_assert_eq!(values.len(), grid.num_sites() * d * d);
        Self {
            grid,
            d,
            values,
            _repr: PhantomData,
        }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn matrix_dim(&self) -> usize {
        self.d
    }

    pub fn num_sites(&self) -> usize {
        self.grid.num_sites()
    }

    pub fn values(&self) -> &[C64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<C64> {
        self.values
    }

    pub fn site_slice(&self, site: usize) -> &[C64] {
        let dd = self.d * self.d;
        &self.values[site * dd..(site + 1) * dd]
    }

    pub fn site(&self, site: usize) -> CMat {
        CMat::from_slice(self.d, self.site_slice(site))
    }

    pub fn sites(&self) -> impl Iterator<Item = CMat> + '_ {
        self.values
            .chunks_exact(self.d * self.d)
            .map(move |c| CMat::from_slice(self.d, c))
    }

    /// Applies `f` to every site matrix, preserving grid and representation.
    pub fn map_sites(&self, f: impl Fn(usize, &CMat) -> CMat + Sync) -> Self {
        let d = self.d;
        let values: Vec<C64> = self
            .values
            .par_chunks_exact(d * d)
            .enumerate()
            .flat_map_iter(|(s, chunk)| {
                let out = f(s, &CMat::from_slice(d, chunk));
                debug_assert_eq!(out.dim(), d);
                out.as_slice().to_vec()
            })
            .collect();
        Self::from_values_unchecked(self.grid, d, values)
    }

    /// Same grid and representation, possibly different matrix size.
    pub fn map_sites_resized(&self, d_out: usize, f: impl Fn(usize, &CMat) -> CMat + Sync) -> Self {
        let d = self.d;
        let values: Vec<C64> = self
            .values
            .par_chunks_exact(d * d)
            .enumerate()
            .flat_map_iter(|(s, chunk)| f(s, &CMat::from_slice(d, chunk)).as_slice().to_vec())
            .collect();
        Self::from_values_unchecked(self.grid, d_out, values)
    }

    fn check_compatible(&self, other: &Self) -> Result<()> {
        if self.grid != other.grid || self.d != other.d {
            return Err(Error::ShapeMismatch("fields live on different grids".into()));
        }
        Ok(())
    }

    /// `a * self + b * other`.
    pub fn linear_combination(&self, a: C64, other: &Self, b: C64) -> Result<Self> {
        self.check_compatible(other)?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(x, y)| a * x + b * y)
            .collect();
        Ok(Self::from_values_unchecked(self.grid, self.d, values))
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.linear_combination(C64::new(1.0, 0.0), other, C64::new(1.0, 0.0))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.linear_combination(C64::new(1.0, 0.0), other, C64::new(-1.0, 0.0))
    }

    pub fn scale(&self, c: f64) -> Self {
        let values = self.values.iter().map(|z| z * c).collect();
        Self::from_values_unchecked(self.grid, self.d, values)
    }

    /// Largest `max-norm(A - A*)` over sites.
    pub fn hermitian_defect(&self) -> f64 {
        self.sites().map(|m| m.hermitian_defect()).fold(0.0, f64::max)
    }

    /// `sum_sites tr(|F|^2)`, unweighted.
    pub fn sum_sq(&self) -> f64 {
        self.values.iter().map(|z| z.norm_sqr()).sum()
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

impl MatrixField {
    /// `(sum_sites tr|f|^2 h^n)^{1/2}`.
    pub fn l2_norm(&self) -> f64 {
        (self.sum_sq() * self.grid.cell_volume()).sqrt()
    }
}

impl SpectrumField {
    /// `(sum_sites tr|F|^2 dxi^n)^{1/2}`.
    pub fn l2_norm(&self) -> f64 {
        (self.sum_sq() * self.grid.freq_cell_volume()).sqrt()
    }

    /// Pointwise scalar multiplier `s(site) * F(site)`.
    pub fn multiply_by(&self, symbol: &[C64]) -> Result<Self> {
        if symbol.len() != self.num_sites() {
            return Err(Error::ShapeMismatch(format!(
                "symbol table has {} entries, grid has {} sites",
                symbol.len(),
                self.num_sites()
            )));
        }
        let dd = self.d * self.d;
        let values = self
            .values
            .par_chunks_exact(dd)
            .zip(symbol.par_iter())
            .flat_map_iter(|(chunk, s)| chunk.iter().map(move |z| z * s))
            .collect();
        Ok(Self::from_values_unchecked(self.grid, self.d, values))
    }
}

/// Fills a field by evaluating `generator` at the spatial coordinates of
/// every site, in row-major site order.
pub fn sample_function(grid: GridSpec, d: usize, generator: impl Fn(&[f64]) -> CMat) -> Result<MatrixField> {
    let mut values = Vec::with_capacity(grid.num_sites() * d * d);
    for site in 0..grid.num_sites() {
        let x = grid.point(site);
        let m = generator(&x[..grid.dim()]);
        if m.dim() != d {
            return Err(Error::ShapeMismatch(format!(
                "generator returned a {}x{} matrix, expected {d}x{d}",
                m.dim(),
                m.dim()
            )));
        }
        if !m.is_finite() {
            return Err(Error::NonFinite { site });
        }
        values.extend_from_slice(m.as_slice());
    }
    MatrixField::from_values(grid, d, values)
}

/// Fills a spectrum by evaluating `generator` at the frequency coordinates.
pub fn sample_spectrum(grid: GridSpec, d: usize, generator: impl Fn(&[f64]) -> CMat) -> Result<SpectrumField> {
    let mut values = Vec::with_capacity(grid.num_sites() * d * d);
    for site in 0..grid.num_sites() {
        let xi = grid.frequency(site);
        let m = generator(&xi[..grid.dim()]);
        if m.dim() != d || !m.is_finite() {
            return Err(Error::NonFinite { site });
        }
        values.extend_from_slice(m.as_slice());
    }
    SpectrumField::from_values(grid, d, values)
}

#[derive(Clone, Copy)]
enum Direction {
    Forward,
    Inverse,
}

fn plan(size: usize, direction: Direction) -> Arc<dyn Fft<f64>> {
    let mut planner = FftPlanner::new();
    match direction {
        Direction::Forward => planner.plan_fft_forward(size),
        Direction::Inverse => planner.plan_fft_inverse(size),
    }
}

/// Unnormalized n-dimensional FFT of one row-major plane, in place.
fn fft_plane(grid: &GridSpec, fft: &dyn Fft<f64>, plane: &mut [C64]) {
    let size = grid.size();
    let mut scratch = vec![C64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
    let mut line = vec![C64::new(0.0, 0.0); size];
    for axis in 0..grid.dim() {
        let stride = size.pow((grid.dim() - 1 - axis) as u32);
        if stride == 1 {
            for chunk in plane.chunks_exact_mut(size) {
                fft.process_with_scratch(chunk, &mut scratch);
            }
            continue;
        }
        let block = stride * size;
        for outer in (0..plane.len()).step_by(block) {
            for inner in 0..stride {
                let base = outer + inner;
                for (k, v) in line.iter_mut().enumerate() {
                    *v = plane[base + k * stride];
                }
                fft.process_with_scratch(&mut line, &mut scratch);
                for (k, v) in line.iter().enumerate() {
                    plane[base + k * stride] = *v;
                }
            }
        }
    }
}

fn transform(grid: &GridSpec, d: usize, input: &[C64], direction: Direction) -> Vec<C64> {
    let sites = grid.num_sites();
    let dd = d * d;
    let fft = plan(grid.size(), direction);
    let parity: Vec<f64> = (0..sites).map(|s| grid.parity(s)).collect();
    let weight = match direction {
        Direction::Forward => grid.cell_volume(),
        Direction::Inverse => grid.freq_cell_volume(),
    };
    let planes: Vec<Vec<C64>> = (0..dd)
        .into_par_iter()
        .map(|entry| {
            let mut plane: Vec<C64> = (0..sites).map(|s| input[s * dd + entry] * parity[s]).collect();
            fft_plane(grid, fft.as_ref(), &mut plane);
            for (s, v) in plane.iter_mut().enumerate() {
                *v *= parity[s] * weight;
            }
            plane
        })
        .collect();
    let mut out = vec![C64::new(0.0, 0.0); sites * dd];
    for (entry, plane) in planes.iter().enumerate() {
        for (s, v) in plane.iter().enumerate() {
            out[s * dd + entry] = *v;
        }
    }
    out
}

/// Entrywise continuum-scaled DFT: `F(xi_k) = h^n sum_x exp(-2 pi i x.xi_k) f(x)`.
pub fn dft_forward(f: &MatrixField) -> SpectrumField {
    let values = transform(f.grid(), f.matrix_dim(), f.values(), Direction::Forward);
    SpectrumField::from_values_unchecked(*f.grid(), f.matrix_dim(), values)
}

/// Inverse of [`dft_forward`], weighted by `(1/L)^n`.
pub fn dft_inverse(spectrum: &SpectrumField) -> MatrixField {
    let values = transform(
        spectrum.grid(),
        spectrum.matrix_dim(),
        spectrum.values(),
        Direction::Inverse,
    );
    MatrixField::from_values_unchecked(*spectrum.grid(), spectrum.matrix_dim(), values)
}

/// Result of [`dilate_spectrum`].
#[derive(Clone, Debug)]
pub struct Dilation {
    pub spectrum: SpectrumField,
    /// Fraction of the L2 mass that could not be represented on the grid.
    pub discarded_fraction: f64,
}

pub const DILATION_LOSS_LIMIT: f64 = 1e-8;

/// Spectrum of `f_k(x) = f(2^{-k} x)`, i.e. `2^{kn} F(2^k xi)`.
///
/// For `k > 0` the frequency lattice is sampled at every `2^k`-th site; the
/// stretched function must fit in the box, so spatial mass outside the
/// central `L / 2^k` cube is counted as discarded. For `k < 0` the function
/// is compressed by spatial index remapping; frequencies pushed past the
/// lattice edge are discarded. Errors if more than [`DILATION_LOSS_LIMIT`]
/// of the mass is lost.
pub fn dilate_spectrum(spectrum: &SpectrumField, k: i32) -> Result<Dilation> {
    let grid = *spectrum.grid();
    let size = grid.size();
    let max_k = size.trailing_zeros() as i32 - 2;
    if k.abs() > max_k {
        return Err(Error::InvalidArgument(format!(
            "dilation exponent {k} exceeds log2(N)-2 = {max_k}"
        )));
    }
    if k == 0 {
        return Ok(Dilation {
            spectrum: spectrum.clone(),
            discarded_fraction: 0.0,
        });
    }
    let d = spectrum.matrix_dim();
    let dd = d * d;
    let half = (size / 2) as i64;
    let factor = 1i64 << k.unsigned_abs();
    let total = spectrum.sum_sq();
    let in_range = |o: i64| o >= -half && o < half;

    let (out, discarded) = if k > 0 {
        let spatial = dft_inverse(spectrum);
        let cut = grid.length() / (2.0 * factor as f64);
        let mut outside = 0.0;
        for site in 0..grid.num_sites() {
            let x = grid.point(site);
            if x.iter().take(grid.dim()).any(|c| c.abs() >= cut) {
                outside += spatial.site_slice(site).iter().map(|z| z.norm_sqr()).sum::<f64>();
            }
        }
        let spatial_total = spatial.sum_sq();
        let amp = (factor as f64).powi(grid.dim() as i32);
        let mut values = vec![C64::new(0.0, 0.0); spectrum.values().len()];
        for site in 0..grid.num_sites() {
            let off = grid.offsets(site);
            let mut src = [0usize; 3];
            let mut ok = true;
            for axis in 0..grid.dim() {
                let o = off[axis] * factor;
                ok &= in_range(o);
                src[axis] = (o + half).max(0) as usize;
            }
            if ok {
                let s = grid.site_of(&src[..grid.dim()]);
                for e in 0..dd {
                    values[site * dd + e] = spectrum.values()[s * dd + e] * amp;
                }
            }
        }
        let frac = if spatial_total > 0.0 {
            outside / spatial_total
        } else {
            0.0
        };
        (SpectrumField::from_values_unchecked(grid, d, values), frac)
    } else {
        let mut lost = 0.0;
        for site in 0..grid.num_sites() {
            let off = grid.offsets(site);
            if (0..grid.dim()).any(|a| !in_range(off[a] * factor)) {
                lost += spectrum.site_slice(site).iter().map(|z| z.norm_sqr()).sum::<f64>();
            }
        }
        let spatial = dft_inverse(spectrum);
        let mut values = vec![C64::new(0.0, 0.0); spatial.values().len()];
        for site in 0..grid.num_sites() {
            let off = grid.offsets(site);
            let mut src = [0usize; 3];
            let mut ok = true;
            for axis in 0..grid.dim() {
                let o = off[axis] * factor;
                ok &= in_range(o);
                src[axis] = (o + half).max(0) as usize;
            }
            if ok {
                let s = grid.site_of(&src[..grid.dim()]);
                values[site * dd..(site + 1) * dd].copy_from_slice(spatial.site_slice(s));
            }
        }
        let compressed = MatrixField::from_values_unchecked(grid, d, values);
        let frac = if total > 0.0 { lost / total } else { 0.0 };
        (dft_forward(&compressed), frac)
    };
    if discarded > DILATION_LOSS_LIMIT {
        return Err(Error::DilationLoss { fraction: discarded });
    }
    Ok(Dilation {
        spectrum: out,
        discarded_fraction: discarded,
    })
}
