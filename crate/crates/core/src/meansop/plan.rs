use std::collections::BTreeMap;

use rayon::prelude::*;

use super::{check_support, check_t, symbol_table};
use crate::error::Result;
use crate::lattice::{dft_inverse, GridSpec, MatrixField, SpectrumField};
use crate::linalg::C64;
use crate::special::{Multiplier, PartitionOfUnity, RadialSymbol};

/// Operator data for one grid and one `alpha`, with dyadic symbol tables
/// for a fixed set of `(j, t)` built at construction.
#[derive(Clone, Debug)]
pub struct OperatorPlan {
    grid: GridSpec,
    alpha: f64,
    multiplier: Multiplier,
    partition: PartitionOfUnity,
    symbols: BTreeMap<u32, RadialSymbol>,
    tables: BTreeMap<(u32, u64), Vec<C64>>,
}

impl OperatorPlan {
    pub fn new(grid: GridSpec, alpha: f64, pieces: &[(u32, f64)]) -> Result<Self> {
        let n = grid.dim();
        let mut symbols = BTreeMap::new();
        for &(j, t) in pieces {
            check_t(t)?;
            let sym = match symbols.remove(&j) {
                Some(s) => s,
                None => RadialSymbol::dyadic(alpha, n, j)?,
            };
            check_support(&grid, &sym, t)?;
            symbols.insert(j, sym);
        }
        let tables = pieces
            .par_iter()
            .map(|&(j, t)| ((j, t.to_bits()), symbol_table(&grid, &symbols[&j], t)))
            .collect::<Vec<_>>()
            .into_iter()
            .collect();
        Ok(Self {
            grid,
            alpha,
            multiplier: Multiplier::new(alpha, n)?,
            partition: PartitionOfUnity,
            symbols,
            tables,
        })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn multiplier(&self) -> &Multiplier {
        &self.multiplier
    }

    pub fn partition(&self) -> &PartitionOfUnity {
        &self.partition
    }

    pub fn table(&self, j: u32, t: f64) -> Option<&[C64]> {
        self.tables.get(&(j, t.to_bits())).map(|v| v.as_slice())
    }

    /// Dyadic piece from a precomputed spectrum, using the cached table
    /// when available.
    pub fn dyadic_piece(&self, spectrum: &SpectrumField, j: u32, t: f64) -> Result<MatrixField> {
        let product = match self.table(j, t) {
            Some(table) => spectrum.multiply_by(table)?,
            None => match self.symbols.get(&j) {
                Some(sym) => super::apply_radial_multiplier(spectrum, sym, t)?,
                None => {
                    let sym = RadialSymbol::dyadic(self.alpha, self.grid.dim(), j)?;
                    super::apply_radial_multiplier(spectrum, &sym, t)?
                }
            },
        };
        Ok(dft_inverse(&product))
    }

    /// Largest deviation between the cached tables and fresh evaluation.
    pub fn coherence_defect(&self) -> f64 {
        let n = self.grid.dim();
        self.tables
            .iter()
            .map(|(&(j, bits), table)| {
                let t = f64::from_bits(bits);
                let fresh = RadialSymbol::dyadic(self.alpha, n, j).expect("validated at construction");
                table
                    .par_iter()
                    .enumerate()
                    .map(|(s, z)| (fresh.value(&self.grid.frequency(s)[..n], t) - z).norm())
                    .reduce(|| 0.0, f64::max)
            })
            .fold(0.0, f64::max)
    }
}
