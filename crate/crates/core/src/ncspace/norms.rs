//! Schatten norms, discrete `L_p` norms of matrix fields, Loewner order.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::lattice::MatrixField;
use crate::linalg::{eigh, min_eigenvalue, singular_values, CMat};

/// Sum in a fixed binary-tree order, independent of any thread schedule.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    const LEAF: usize = 64;
    if values.len() <= LEAF {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

fn check_p(p: f64) -> Result<()> {
    if p >= 1.0 || p == f64::INFINITY {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("p = {p} outside [1, inf]")))
    }
}

/// `sum_i sigma_i^p`, the `p`-th power of the Schatten norm (finite `p`).
pub fn schatten_power(a: &CMat, p: f64) -> f64 {
    singular_values(a).iter().map(|s| s.powf(p)).sum()
}

/// `(sum_i sigma_i^p)^{1/p}`; `p = inf` gives the largest singular value.
pub fn schatten_norm(a: &CMat, p: f64) -> Result<f64> {
    check_p(p)?;
    let sv = singular_values(a);
    if p.is_infinite() {
        return Ok(sv.first().copied().unwrap_or(0.0));
    }
    Ok(sv.iter().map(|s| s.powf(p)).sum::<f64>().powf(1.0 / p))
}

/// Per-site `tr |f(x)|^p` (finite `p`) or operator norm (`p = inf`).
pub fn site_norm_profile(f: &MatrixField, p: f64) -> Vec<f64> {
    let d = f.matrix_dim();
    (0..f.num_sites())
        .into_par_iter()
        .map(|site| {
            let a = CMat::from_slice(d, f.site_slice(site));
            let sv = singular_values(&a);
            if p.is_infinite() {
                sv.first().copied().unwrap_or(0.0)
            } else {
                sv.iter().map(|s| s.powf(p)).sum()
            }
        })
        .collect()
}

/// `(sum_x tr |f(x)|^p h^n)^{1/p}`; `p = inf` is the largest site operator norm.
pub fn field_lp_norm(f: &MatrixField, p: f64) -> Result<f64> {
    check_p(p)?;
    let profile = site_norm_profile(f, p);
    if p.is_infinite() {
        return Ok(profile.iter().fold(0.0, |m, &v| f64::max(m, v)));
    }
    Ok((pairwise_sum(&profile) * f.grid().cell_volume()).powf(1.0 / p))
}

/// `A <= B` in the Loewner order up to `tol`, after symmetrizing both sides.
pub fn loewner_leq(a: &CMat, b: &CMat, tol: f64) -> Result<bool> {
    if a.dim() != b.dim() {
        return Err(Error::ShapeMismatch(format!("{} vs {}", a.dim(), b.dim())));
    }
    let defect = a.hermitian_defect().max(b.hermitian_defect());
    if defect > 1e-10 {
        return Err(Error::NotHermitian(defect));
    }
    let diff = &b.hermitian_part() - &a.hermitian_part();
    Ok(min_eigenvalue(&diff) >= -tol)
}

/// Smallest eigenvalue of the Hermitian part (full solver for `d > 2`).
pub fn lambda_min(a: &CMat) -> f64 {
    if a.dim() <= 2 {
        min_eigenvalue(a)
    } else {
        eigh(a).min()
    }
}
