//! Numerical checks of the operator inequalities behind the maximal bounds.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{exponent_serde, json_hash, sample_interval, ExperimentConfig};
use super::experiments::pieces_from_spectrum;
use crate::error::{Error, Result};
use crate::lattice::{dft_forward, dft_inverse, sample_function, MatrixField, SpectrumField};
use crate::linalg::{min_eigenvalue, CMat};
use crate::meansop::{apply_radial_multiplier, convolve_scalar, hl_average, spherical_mean};
use crate::ncspace::{
    alpha_threshold, field_lp_norm, maximal_norm_positive_with, maximal_norm_selfadjoint_with, mu, pairwise_sum,
    u_floor, FamilyKind, MaximalFamily, SolverOptions,
};
use crate::special::RadialSymbol;

/// Relative shortfall tolerated in checks whose left side comes from the
/// semidefinite solver.
pub const SOLVER_REL_TOL: f64 = 1e-6;

/// Composite Simpson weights for `nodes` (odd) points on `[a, b]`.
pub fn simpson_weights(a: f64, b: f64, nodes: usize) -> Result<Vec<f64>> {
    if nodes < 3 || nodes.is_multiple_of(2) {
        return Err(Error::InvalidArgument(format!(
            "Simpson needs an odd node count >= 3, got {nodes}"
        )));
    }
    let h = (b - a) / (nodes - 1) as f64;
    Ok((0..nodes)
        .map(|k| {
            let c = if k == 0 || k + 1 == nodes {
                1.0
            } else if k % 2 == 1 {
                4.0
            } else {
                2.0
            };
            c * h / 3.0
        })
        .collect())
}

/// `|A|^2 = A* A` at every site.
fn square_modulus_field(f: &MatrixField) -> MatrixField {
    f.map_sites(|_, m| m.gram())
}

/// `|x|^{2m}` and its derivative along `x'` at one site:
/// with `G = x* x`, `d G^m = sum_k G^k G' G^{m-1-k}`, `G' = x'* x + x* x'`.
fn power_and_derivative(x: &CMat, dx: &CMat, m: u32) -> (CMat, CMat) {
    let g = x.gram();
    let dg = &(&dx.adjoint() * x) + &(&x.adjoint() * dx);
    let mut powers = vec![CMat::identity(x.dim())];
    for k in 1..=m as usize {
        powers.push(&powers[k - 1] * &g);
    }
    let mut deriv = CMat::zeros(x.dim());
    for k in 0..m as usize {
        deriv = &deriv + &(&(&powers[k] * &dg) * &powers[m as usize - 1 - k]);
    }
    (powers[m as usize].clone(), deriv)
}

struct PieceEvaluator {
    spectrum: SpectrumField,
    symbol: RadialSymbol,
}

impl PieceEvaluator {
    fn new(f: &MatrixField, alpha: f64, j: u32) -> Result<Self> {
        Ok(Self {
            spectrum: dft_forward(f),
            symbol: RadialSymbol::dyadic(alpha, f.grid().dim(), j)?,
        })
    }

    fn piece(&self, t: f64) -> Result<MatrixField> {
        Ok(dft_inverse(&apply_radial_multiplier(&self.spectrum, &self.symbol, t)?))
    }

    fn dt_piece(&self, t: f64) -> Result<MatrixField> {
        crate::meansop::check_support(self.spectrum.grid(), &self.symbol, t)?;
        let grid = self.spectrum.grid();
        let n = grid.dim();
        let table: Vec<_> = (0..grid.num_sites())
            .into_par_iter()
            .map(|s| self.symbol.dt(&grid.frequency(s)[..n], t))
            .collect();
        Ok(dft_inverse(&self.spectrum.multiply_by(&table)?))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FtcReport {
    pub alpha: f64,
    pub j: u32,
    pub m: u32,
    pub t: f64,
    pub nodes: usize,
    /// `||lhs - quadrature||_F / ||lhs||_F` over the whole field.
    pub relative_error: f64,
}

/// Compares `|M_{j,t} f|^{2m} - |M_{j,1} f|^{2m}` with the Simpson quadrature
/// of `s -> d/ds |M_{j,s} f|^{2m}` on `[1, t]`.
pub fn ftc_identity_check(f: &MatrixField, alpha: f64, j: u32, t: f64, m: u32, nodes: usize) -> Result<FtcReport> {
    if m == 0 {
        return Err(Error::InvalidArgument("m must be positive".into()));
    }
    let eval = PieceEvaluator::new(f, alpha, j)?;
    let weights = simpson_weights(1.0, t, nodes)?;
    let ss = sample_interval(1.0, t, nodes);
    let sites = f.num_sites();
    let d = f.matrix_dim();
    let mut integral = vec![CMat::zeros(d); sites];
    for (&s, &w) in ss.iter().zip(&weights) {
        let x = eval.piece(s)?;
        let dx = eval.dt_piece(s)?;
        let derivs: Vec<CMat> = (0..sites)
            .into_par_iter()
            .map(|k| power_and_derivative(&x.site(k), &dx.site(k), m).1)
            .collect();
        for (acc, dv) in integral.iter_mut().zip(&derivs) {
            *acc = &*acc + &dv.scale(w);
        }
    }
    let end = eval.piece(t)?;
    let start = eval.piece(1.0)?;
    let zero = CMat::zeros(d);
    let mut num = Vec::with_capacity(sites);
    let mut den = Vec::with_capacity(sites);
    for (k, int) in integral.iter().enumerate().take(sites) {
        let lhs = &power_and_derivative(&end.site(k), &zero, m).0 - &power_and_derivative(&start.site(k), &zero, m).0;
        num.push((&lhs - int).frobenius().powi(2));
        den.push(lhs.frobenius().powi(2));
    }
    let den = pairwise_sum(&den).sqrt();
    let num = pairwise_sum(&num).sqrt();
    Ok(FtcReport {
        alpha,
        j,
        m,
        t,
        nodes,
        relative_error: if den > 0.0 { num / den } else { num },
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SquareLemmaReport {
    pub alpha: f64,
    pub mass: f64,
    pub ts: Vec<f64>,
    /// Smallest eigenvalue of `mass M_t(|f|^2) - |M_t f|^2` over sites and `t`.
    pub min_eigenvalue: f64,
    pub pass: bool,
}

/// Pointwise Cauchy-Schwarz for the means:
/// `mass * M_t(|f|^2) - |M_t f|^2 >= 0` at every site.
pub fn square_lemma_check(f: &MatrixField, alpha: f64, ts: &[f64], mass: f64, tol: f64) -> Result<SquareLemmaReport> {
    let sq = square_modulus_field(f);
    let mut worst = f64::INFINITY;
    for &t in ts {
        let mean_sq = spherical_mean(&sq, alpha, t)?;
        let mean = spherical_mean(f, alpha, t)?;
        let d = f.matrix_dim();
        let local = (0..f.num_sites())
            .into_par_iter()
            .map(|s| {
                let a = CMat::from_slice(d, mean_sq.site_slice(s)).scale(mass);
                let b = CMat::from_slice(d, mean.site_slice(s)).gram();
                min_eigenvalue(&(&a - &b).hermitian_part())
            })
            .reduce(|| f64::INFINITY, f64::min);
        worst = worst.min(local);
    }
    Ok(SquareLemmaReport {
        alpha,
        mass,
        ts: ts.to_vec(),
        min_eigenvalue: worst,
        pass: worst >= -tol,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SobolevRow {
    pub j: u32,
    /// `||sup+_t M_{j,t} f||_{2m}^{2m}` over the sampled `t`.
    pub lhs: f64,
    pub start_term: f64,
    /// `||M_{j,t} f||_{L_{2m}(B)}` and `||d/dt M_{j,t} f||_{L_{2m}(B)}`.
    pub b_norm: f64,
    pub b_norm_dt: f64,
    pub rhs: f64,
    pub margin: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SobolevReport {
    pub config_hash: String,
    pub m: u32,
    pub t_end: f64,
    pub rows: Vec<SobolevRow>,
    pub pass: bool,
}

/// Simpson nodes of the time integrals in [`sobolev_bound_check`].
pub const SOBOLEV_NODES: usize = 65;

/// Checks
/// `||sup+ M_{j,t} f||_{2m}^{2m} <= ||M_{j,1} f||_{2m}^{2m}
///   + 2m ||M_{j,t} f||_{L_{2m}(B)}^{2m-1} ||d/dt M_{j,t} f||_{L_{2m}(B)}`
/// with `B = space x [1, t_end]`, for every `j` of the configuration.
pub fn sobolev_bound_check(cfg: &ExperimentConfig, m: u32, t_end: f64) -> Result<SobolevReport> {
    cfg.validate()?;
    if m == 0 || !(t_end >= 1.0) {
        return Err(Error::InvalidArgument("need m >= 1 and t_end >= 1".into()));
    }
    let p = 2.0 * m as f64;
    let grid = cfg.grid_spec()?;
    let f = cfg.test_function.build(&grid, cfg.d)?;
    let ts: Vec<f64> = if t_end == 1.0 {
        vec![1.0]
    } else {
        sample_interval(1.0, t_end, cfg.t_samples)
    };
    let mut rows = Vec::new();
    for j in cfg.j_range()? {
        let eval = PieceEvaluator::new(&f, cfg.alpha, j)?;
        let pieces = pieces_from_spectrum(&eval.spectrum, cfg.alpha, j, &ts)?;
        let start_term = field_lp_norm(&pieces[0], p)?.powf(p);
        let fam = MaximalFamily::new(FamilyKind::Selfadjoint, ts.iter().copied().zip(pieces).collect())?;
        let lhs = maximal_norm_selfadjoint_with(&fam, p, &cfg.tolerances.solver)?
            .value
            .powf(p);
        let (b_norm, b_norm_dt) = if t_end > 1.0 {
            let weights = simpson_weights(1.0, t_end, SOBOLEV_NODES)?;
            let mut acc = 0.0;
            let mut acc_dt = 0.0;
            for (s, w) in sample_interval(1.0, t_end, SOBOLEV_NODES).into_iter().zip(weights) {
                acc += w * field_lp_norm(&eval.piece(s)?, p)?.powf(p);
                acc_dt += w * field_lp_norm(&eval.dt_piece(s)?, p)?.powf(p);
            }
            (acc.powf(1.0 / p), acc_dt.powf(1.0 / p))
        } else {
            (0.0, 0.0)
        };
        let rhs = start_term + p * b_norm.powf(p - 1.0) * b_norm_dt;
        rows.push(SobolevRow {
            j,
            lhs,
            start_term,
            b_norm,
            b_norm_dt,
            rhs,
            margin: rhs - lhs,
        });
    }
    let pass = rows.iter().all(|r| r.margin >= -SOLVER_REL_TOL * r.rhs);
    Ok(SobolevReport {
        config_hash: cfg.hash(),
        m,
        t_end,
        rows,
        pass,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitBlock {
    /// Block `I_k = [2^{-k}, 2^{-k+1}]`.
    pub k: i32,
    pub members: usize,
    /// `||sup+_{t in I_k} x_t||_p^p`
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitReport {
    #[serde(with = "exponent_serde")]
    pub p: f64,
    /// `||sup+_t x_t||_p^p` over the whole family.
    pub whole: f64,
    pub blocks: Vec<SplitBlock>,
    pub sum: f64,
    pub margin: f64,
    pub pass: bool,
}

fn in_block(t: f64, k: i32) -> bool {
    let lo = 2f64.powi(-k);
    t >= lo * (1.0 - 1e-12) && t <= 2.0 * lo * (1.0 + 1e-12)
}

fn maximal_power(fam: &MaximalFamily, p: f64, opts: &SolverOptions) -> Result<f64> {
    let norm = match fam.kind() {
        FamilyKind::Positive => maximal_norm_positive_with(fam, p, opts)?,
        FamilyKind::Selfadjoint => maximal_norm_selfadjoint_with(fam, p, opts)?,
        FamilyKind::General => {
            return Err(Error::InvalidArgument(
                "the dyadic split check needs a positive or self-adjoint family".into(),
            ))
        }
    };
    Ok(norm.value.powf(p))
}

/// Checks `||sup+_t x_t||_p^p <= sum_k ||sup+_{t in I_k} x_t||_p^p` over the
/// dyadic blocks met by the family's `t` values.
pub fn dyadic_split_check(fam: &MaximalFamily, p: f64, opts: &SolverOptions) -> Result<SplitReport> {
    if !(p >= 1.0 && p.is_finite()) {
        return Err(Error::InvalidArgument(format!("p = {p} must be finite and >= 1")));
    }
    if fam.ts().iter().any(|&t| !(t > 0.0)) {
        return Err(Error::InvalidArgument("t values must be positive".into()));
    }
    let whole = maximal_power(fam, p, opts)?;
    let t_max = fam.ts().iter().copied().fold(0.0, f64::max);
    let t_min = fam.ts().iter().copied().fold(f64::INFINITY, f64::min);
    let k_lo = (-t_max.log2()).floor() as i32;
    let k_hi = (-t_min.log2()).ceil() as i32 + 1;
    let mut blocks = Vec::new();
    for k in k_lo..=k_hi {
        let idx: Vec<usize> = (0..fam.len()).filter(|&i| in_block(fam.ts()[i], k)).collect();
        if idx.is_empty() {
            continue;
        }
        let value = maximal_power(&fam.subfamily(&idx)?, p, opts)?;
        blocks.push(SplitBlock {
            k,
            members: idx.len(),
            value,
        });
    }
    let sum: f64 = blocks.iter().map(|b| b.value).sum();
    let margin = sum - whole;
    Ok(SplitReport {
        p,
        whole,
        blocks,
        sum,
        margin,
        pass: margin >= -SOLVER_REL_TOL * whole.max(1.0),
    })
}

/// Positive family `x_t = |M_t^alpha f|^2` with `cfg.t_samples` points in each
/// of `[1/4, 1/2]`, `[1/2, 1]` and `[1, 2]`.
pub fn split_family_from_config(cfg: &ExperimentConfig) -> Result<MaximalFamily> {
    let grid = cfg.grid_spec()?;
    let f = cfg.test_function.build(&grid, cfg.d)?;
    let mut ts: Vec<f64> = Vec::new();
    for k in (0..3).rev() {
        let lo = 2f64.powi(-k);
        for t in sample_interval(lo, 2.0 * lo, cfg.t_samples.max(2)) {
            if ts.last().is_none_or(|&last| t > last * (1.0 + 1e-12)) {
                ts.push(t);
            }
        }
    }
    let members = ts
        .iter()
        .map(|&t| Ok((t, spherical_mean(&f, cfg.alpha, t)?.map_sites(|_, m| m.gram()))))
        .collect::<Result<Vec<_>>>()?;
    MaximalFamily::new(FamilyKind::Positive, members)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeResolution {
    pub grid: usize,
    /// `||sup+ psi_t * f||_p / ||f||_p`
    pub ratio_psi: f64,
    /// `||sup+ A_t f||_p / ||f||_p` for the ball averages `A_t`.
    pub ratio_ball: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeReport {
    pub config_hash: String,
    #[serde(with = "exponent_serde")]
    pub p: f64,
    pub ts: Vec<f64>,
    pub resolutions: Vec<EnvelopeResolution>,
    /// Largest ratio between the two resolutions, over both chains.
    pub drift: f64,
    pub bound: f64,
    pub pass: bool,
}

/// `psi_t(x) = t^{-n} (1 + |x|/t)^{-(n+1)}` sampled on the grid.
pub fn psi_kernel(grid: &crate::lattice::GridSpec, t: f64) -> Result<MatrixField> {
    let n = grid.dim() as i32;
    sample_function(*grid, 1, |x| {
        let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        CMat::scalar(1, t.powi(-n) * (1.0 + r / t).powi(-(n + 1)))
    })
}

/// Radii `2^{-4k/(T-1)}`, `k = 0..T`, geometric on `[1/16, 1]`.
pub fn envelope_radii(samples: usize) -> Vec<f64> {
    if samples <= 1 {
        return vec![1.0];
    }
    (0..samples)
        .map(|k| 2f64.powf(-4.0 * k as f64 / (samples - 1) as f64))
        .collect()
}

fn envelope_ratios(cfg: &ExperimentConfig, grid_size: usize, ts: &[f64], p: f64) -> Result<EnvelopeResolution> {
    let grid = crate::lattice::GridSpec::new(cfg.n, grid_size, cfg.length)?;
    let g = cfg.test_function.build(&grid, cfg.d)?;
    let f = square_modulus_field(&g);
    let norm_f = field_lp_norm(&f, p)?;
    if norm_f == 0.0 {
        return Ok(EnvelopeResolution {
            grid: grid_size,
            ratio_psi: 0.0,
            ratio_ball: 0.0,
        });
    }
    let psi_members = ts
        .iter()
        .map(|&t| {
            Ok((
                t,
                convolve_scalar(&f, &psi_kernel(&grid, t)?)?.map_sites(|_, m| m.hermitian_part()),
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    let ball_members = ts
        .iter()
        .map(|&t| Ok((t, hl_average(&f, t)?.map_sites(|_, m| m.hermitian_part()))))
        .collect::<Result<Vec<_>>>()?;
    let opts = &cfg.tolerances.solver;
    let sorted = |mut members: Vec<(f64, MatrixField)>| {
        members.sort_by(|a, b| a.0.total_cmp(&b.0));
        MaximalFamily::new(FamilyKind::Positive, members)
    };
    let psi = maximal_norm_positive_with(&sorted(psi_members)?, p, opts)?.value;
    let ball = maximal_norm_positive_with(&sorted(ball_members)?, p, opts)?.value;
    Ok(EnvelopeResolution {
        grid: grid_size,
        ratio_psi: psi / norm_f,
        ratio_ball: ball / norm_f,
    })
}

/// Maximal norms of `{psi_t * f}` and of the ball averages of the positive
/// field `f = |g|^2` relative to `||f||_p`, at `cfg.grid` and twice that
/// resolution; passes when both chains drift by at most `bound`.
pub fn envelope_domination_check(cfg: &ExperimentConfig, p: f64, bound: f64) -> Result<EnvelopeReport> {
    let ts = envelope_radii(cfg.t_samples);
    let coarse = envelope_ratios(cfg, cfg.grid, &ts, p)?;
    let fine = envelope_ratios(cfg, 2 * cfg.grid, &ts, p)?;
    let ratio = |a: f64, b: f64| {
        if a == 0.0 && b == 0.0 {
            1.0
        } else {
            (a / b).max(b / a)
        }
    };
    let drift = ratio(coarse.ratio_psi, fine.ratio_psi).max(ratio(coarse.ratio_ball, fine.ratio_ball));
    Ok(EnvelopeReport {
        config_hash: cfg.hash(),
        p,
        ts,
        resolutions: vec![coarse, fine],
        drift,
        bound,
        pass: drift <= bound,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdmissibilityRow {
    pub n: usize,
    #[serde(with = "exponent_serde")]
    pub p: f64,
    /// `max{-(n-3)/p - 1/2, (n-3)/p - n/2 + 1}`
    pub alpha_threshold: f64,
    /// Gain exponent floor `(n - 2)/4` of the `p = 4` estimate.
    pub u_floor: f64,
    /// `alpha` at which `mu` vanishes with `u` at its floor; `mu < 0`
    /// exactly above it.
    pub mu_boundary: f64,
}

pub fn admissibility_table(n: usize, ps: &[f64]) -> Vec<AdmissibilityRow> {
    let u = u_floor(n, 4.0);
    ps.iter()
        .map(|&p| {
            // mu is affine in alpha with slope -1
            let boundary = mu(n, p, 0.0, u);
            AdmissibilityRow {
                n,
                p,
                alpha_threshold: alpha_threshold(n, p),
                u_floor: u,
                mu_boundary: boundary + 0.0,
            }
        })
        .collect()
}

pub fn admissibility_json(rows: &[AdmissibilityRow]) -> serde_json::Value {
    serde_json::json!({ "schema": "ncsms.admissible/1", "rows": rows, "hash": json_hash(&rows) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::GridSpec;
    use crate::verify::TestFunction;

    #[test]
    fn simpson_is_exact_on_cubics() {
        let w = simpson_weights(1.0, 2.0, 65).unwrap();
        let xs = sample_interval(1.0, 2.0, 65);
        let integral: f64 = xs.iter().zip(&w).map(|(x, w)| w * x * x * x).sum();
        assert!((integral - 15.0 / 4.0).abs() < 1e-14);
        assert!(simpson_weights(0.0, 1.0, 64).is_err());
    }

    #[test]
    fn power_derivative_matches_difference() {
        let x = CMat::from_fn(2, |i, j| crate::linalg::C64::new(0.3 + i as f64, 0.2 * j as f64 - 0.1)).hermitian_part();
        let dx = CMat::from_fn(2, |i, j| crate::linalg::C64::new(0.5 * j as f64, 0.1 * i as f64)).hermitian_part();
        for m in 1..=3 {
            let h = 1e-5;
            let plus = power_and_derivative(&(&x + &dx.scale(h)), &dx, m).0;
            let minus = power_and_derivative(&(&x - &dx.scale(h)), &dx, m).0;
            let fd = (&plus - &minus).scale(0.5 / h);
            let exact = power_and_derivative(&x, &dx, m).1;
            assert!((&fd - &exact).max_abs() < 1e-8, "m = {m}");
        }
    }

    #[test]
    fn single_t_sobolev_bound_is_tight() {
        let cfg = ExperimentConfig {
            grid: 32,
            j_min: 2,
            j_max: Some(2),
            t_samples: 5,
            test_function: TestFunction::MatrixRandom { seed: 2 },
            ..Default::default()
        };
        let r = sobolev_bound_check(&cfg, 1, 1.0).unwrap();
        let row = &r.rows[0];
        assert_eq!(row.rhs, row.start_term);
        assert!(row.margin.abs() <= 1e-6 * row.rhs);
        assert!(r.pass);
    }

    #[test]
    fn single_block_split_is_equality() {
        let grid = GridSpec::new(1, 16, 4.0).unwrap();
        let members: Vec<(f64, MatrixField)> = [1.1, 1.4, 1.9]
            .iter()
            .enumerate()
            .map(|(i, &t)| {
                let f = sample_function(grid, 2, |x| {
                    CMat::from_real_diag(&[1.0 + (x[0] + i as f64).sin().powi(2), 0.5 + i as f64 * 0.1])
                })
                .unwrap();
                (t, f)
            })
            .collect();
        let fam = MaximalFamily::new(FamilyKind::Positive, members).unwrap();
        let r = dyadic_split_check(&fam, 2.0, &SolverOptions::default()).unwrap();
        assert_eq!(r.blocks.len(), 1);
        assert_eq!(r.blocks[0].k, 0);
        assert_eq!(r.margin, 0.0);
    }

    #[test]
    fn constant_envelope_ratios() {
        // f = c I: psi_t * f = c sum psi_t h^n and the ball average is
        // c t^{-n} #{|x| <= t} h^n, both independent of f
        let cfg = ExperimentConfig {
            n: 1,
            grid: 32,
            length: 4.0,
            d: 2,
            t_samples: 3,
            test_function: TestFunction::Constant { value: 1.5 },
            ..Default::default()
        };
        let ts = envelope_radii(3);
        let r = envelope_ratios(&cfg, 32, &ts, 2.0).unwrap();
        let grid = GridSpec::new(1, 32, 4.0).unwrap();
        let h = grid.spacing();
        let psi_mass = |t: f64| {
            (0..32)
                .map(|s| t.powi(-1) * (1.0 + grid.point_radius(s) / t).powi(-2))
                .sum::<f64>()
                * h
        };
        let ball_mass = |t: f64| (0..32).filter(|&s| grid.point_radius(s) <= t).count() as f64 * h / t;
        let expect_psi = ts.iter().map(|&t| psi_mass(t)).fold(0.0, f64::max);
        let expect_ball = ts.iter().map(|&t| ball_mass(t)).fold(0.0, f64::max);
        assert!(
            (r.ratio_psi - expect_psi).abs() < 1e-6 * expect_psi,
            "{} vs {expect_psi}",
            r.ratio_psi
        );
        assert!((r.ratio_ball - expect_ball).abs() < 1e-6 * expect_ball);
    }

    #[test]
    fn table_hand_values() {
        let rows = admissibility_table(3, &[2.0, f64::INFINITY]);
        assert_eq!(rows[0].alpha_threshold, -0.5);
        assert_eq!(rows[1].alpha_threshold, -0.5);
        let rows = admissibility_table(2, &[4.0]);
        assert_eq!(rows[0].alpha_threshold, -0.25);
        assert_eq!(rows[0].mu_boundary, -0.25);
    }
}
