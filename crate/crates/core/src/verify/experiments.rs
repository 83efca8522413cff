//! Exponent experiments: maximal-norm decay of dyadic pieces, the FIO gain
//! probe and the kernel bounds.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{exponent_serde, json_hash, ExperimentConfig};
use super::report::{fit_rows, least_squares_slope, DecayRow, ExponentReport, Verdict};
use super::TestFunction;
use crate::error::{Error, Result};
use crate::lattice::{dft_forward, dft_inverse, GridSpec, MatrixField, SpectrumField};
use crate::meansop::{
    apply_radial_multiplier, fio_apply, j_max, kernel_field, kernel_phi0, spherical_mean, FioSpec, SpatialCutoff,
};
use crate::ncspace::{
    field_lp_norm, maximal_norm_selfadjoint_with, mu, predicted_exponents, FamilyKind, MaximalFamily, SolverOptions,
};
use crate::special::{m_hat, RadialSymbol};

/// `M_{j,t}^alpha f` for every `t`, from one precomputed spectrum.
pub fn pieces_from_spectrum(spectrum: &SpectrumField, alpha: f64, j: u32, ts: &[f64]) -> Result<Vec<MatrixField>> {
    let symbol = RadialSymbol::dyadic(alpha, spectrum.grid().dim(), j)?;
    ts.iter()
        .map(|&t| Ok(dft_inverse(&apply_radial_multiplier(spectrum, &symbol, t)?)))
        .collect()
}

/// `||sup+_t M_{j,t}^alpha f||_p` over the sampled `t` (self-adjoint family).
pub fn dyadic_maximal_norm(
    spectrum: &SpectrumField,
    alpha: f64,
    j: u32,
    ts: &[f64],
    p: f64,
    opts: &SolverOptions,
) -> Result<f64> {
    let pieces = pieces_from_spectrum(spectrum, alpha, j, ts)?;
    let fam = MaximalFamily::new(FamilyKind::Selfadjoint, ts.iter().copied().zip(pieces).collect())?;
    Ok(maximal_norm_selfadjoint_with(&fam, p, opts)?.value)
}

fn empty_report(cfg: &ExperimentConfig, label: &str, u: f64, predicted: f64) -> ExponentReport {
    ExponentReport {
        label: label.into(),
        config_hash: cfg.hash(),
        n: cfg.n,
        d: cfg.d,
        alpha: cfg.alpha,
        p: cfg.p,
        t_samples: cfg.t_samples,
        u,
        rows: Vec::new(),
        fit_j_min: cfg.tolerances.fit_j_min,
        fitted: None,
        fit_stderr: None,
        predicted,
        slack: cfg.tolerances.slack,
        verdict: Verdict::Fail,
        failure: None,
    }
}

fn fill_decay_rows(cfg: &ExperimentConfig, report: &mut ExponentReport) -> Result<()> {
    let grid = cfg.grid_spec()?;
    let f = cfg.test_function.build(&grid, cfg.d)?;
    let spectrum = dft_forward(&f);
    let ts = cfg.ts();
    for j in cfg.j_range()? {
        let start = Instant::now();
        match dyadic_maximal_norm(&spectrum, cfg.alpha, j, &ts, cfg.p, &cfg.tolerances.solver) {
            Ok(norm) => report.rows.push(DecayRow {
                j,
                norm,
                seconds: start.elapsed().as_secs_f64(),
                skipped: norm == 0.0,
            }),
            Err(e) if e.is_numerical() => {
                report.failure = Some(e.to_string());
                break;
            }
            Err(e) => return Err(e),
        }
    }
    report.finish();
    Ok(())
}

/// Maximal norms of the dyadic pieces over `j` and the fitted decay slope,
/// compared with the exponent `mu(n, p, alpha, u)`.
pub fn decay_experiment(cfg: &ExperimentConfig) -> Result<ExponentReport> {
    cfg.validate()?;
    let u = cfg.u_or_floor();
    let params = predicted_exponents(cfg.n, cfg.p, cfg.alpha, u)?;
    let mut report = empty_report(cfg, "decay", u, params.mu);
    fill_decay_rows(cfg, &mut report)?;
    Ok(report)
}

/// Number of time nodes of the space-time norms, on the support `[1/2, 5/2]`
/// of the time cutoff.
pub const FIO_TIME_NODES: usize = 33;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FioProbeRow {
    pub j: u32,
    /// `||F_j f||_{L_q(space x time)} / ||P_j f||_{L_q}` for q = 2, 4, inf,
    /// with `P_j f` the band the operator sees.
    pub ratio_l2: f64,
    pub ratio_l4: f64,
    pub ratio_linf: f64,
    pub skipped: bool,
}

/// Empirical growth exponents of the frequency-localized wave operator.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FioProbe {
    pub config_hash: String,
    pub rows: Vec<FioProbeRow>,
    /// Fitted `L4` gain exponent.
    pub u_hat: Option<f64>,
    pub u_stderr: Option<f64>,
    pub slope_l2: Option<f64>,
    pub slope_linf: Option<f64>,
}

fn slope_of(rows: &[FioProbeRow], j_min: u32, pick: impl Fn(&FioProbeRow) -> f64) -> Option<(f64, f64)> {
    let (xs, ys): (Vec<f64>, Vec<f64>) = rows
        .iter()
        .filter(|r| r.j >= j_min && !r.skipped)
        .map(|r| (r.j as f64, pick(r).log2()))
        .unzip();
    least_squares_slope(&xs, &ys)
}

/// Space-time `L_q` norm `(int ||g(t)||_q^q dt)^{1/q}` by the trapezoid
/// rule, or the largest `||g(t)||_inf`.
fn space_time_norms(f: &MatrixField, spec: &FioSpec) -> Result<(f64, f64, f64)> {
    let (a, b) = (0.5, 2.5);
    let h = (b - a) / (FIO_TIME_NODES - 1) as f64;
    let mut acc2 = 0.0;
    let mut acc4 = 0.0;
    let mut sup = 0.0f64;
    for k in 0..FIO_TIME_NODES {
        let t = a + h * k as f64;
        let w = if k == 0 || k + 1 == FIO_TIME_NODES { 0.5 * h } else { h };
        let g = fio_apply(f, spec, t)?;
        acc2 += w * field_lp_norm(&g, 2.0)?.powi(2);
        acc4 += w * field_lp_norm(&g, 4.0)?.powi(4);
        sup = sup.max(field_lp_norm(&g, f64::INFINITY)?);
    }
    Ok((acc2.sqrt(), acc4.powf(0.25), sup))
}

/// Measures `||F_j f||` against the band of `f` at frequency `2^j` for each
/// `j` of the configuration; the `L4` growth slope estimates `u`.
pub fn fio_growth_probe(cfg: &ExperimentConfig) -> Result<FioProbe> {
    cfg.validate()?;
    let grid = cfg.grid_spec()?;
    let f = cfg.test_function.build(&grid, cfg.d)?;
    let mut rows = Vec::new();
    for j in cfg.j_range()? {
        let spec = FioSpec::new(j);
        let band_spec = FioSpec {
            cutoff: SpatialCutoff::One,
            ..FioSpec::new(j)
        };
        let band = fio_apply(&f, &band_spec, 0.0)?;
        let b2 = field_lp_norm(&band, 2.0)?;
        let b4 = field_lp_norm(&band, 4.0)?;
        let binf = field_lp_norm(&band, f64::INFINITY)?;
        if b2 == 0.0 {
            rows.push(FioProbeRow {
                j,
                ratio_l2: 0.0,
                ratio_l4: 0.0,
                ratio_linf: 0.0,
                skipped: true,
            });
            continue;
        }
        let (n2, n4, ninf) = space_time_norms(&f, &spec)?;
        rows.push(FioProbeRow {
            j,
            ratio_l2: n2 / b2,
            ratio_l4: n4 / b4,
            ratio_linf: ninf / binf,
            skipped: false,
        });
    }
    let j_min = cfg.tolerances.fit_j_min;
    let l4 = slope_of(&rows, j_min, |r| r.ratio_l4);
    Ok(FioProbe {
        config_hash: cfg.hash(),
        u_hat: l4.map(|s| s.0),
        u_stderr: l4.map(|s| s.1),
        slope_l2: slope_of(&rows, j_min, |r| r.ratio_l2).map(|s| s.0),
        slope_linf: slope_of(&rows, j_min, |r| r.ratio_linf).map(|s| s.0),
        rows,
    })
}

/// Decay experiment at `p = 4` with the prediction
/// `-w_bar + u_hat - 1/4` taken from a measured gain exponent.
pub fn p4_experiment(cfg: &ExperimentConfig, probe: &FioProbe) -> Result<ExponentReport> {
    let cfg = ExperimentConfig { p: 4.0, ..cfg.clone() };
    cfg.validate()?;
    let u_hat = probe
        .u_hat
        .ok_or_else(|| Error::InvalidArgument("the FIO probe produced no gain estimate (too few rows)".into()))?;
    let mut report = empty_report(&cfg, "p4", u_hat, mu(cfg.n, 4.0, cfg.alpha, u_hat));
    fill_decay_rows(&cfg, &mut report)?;
    Ok(report)
}

/// Configuration of the scalar kernel experiments.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct KernelConfig {
    pub n: usize,
    pub grid: usize,
    pub length: f64,
    pub alpha: f64,
    /// Defaults to the largest admissible `j` at the smallest `t`.
    pub j_max: Option<u32>,
    pub ts: Vec<f64>,
    /// Largest accepted ratio.
    pub bound: f64,
}

impl Default for KernelConfig {
    fn default() -> Self {
        Self {
            n: 2,
            grid: 2048,
            length: 6.0,
            alpha: 1.0,
            j_max: None,
            ts: vec![1.0, 1.5, 2.0],
            bound: 10.0,
        }
    }
}

impl KernelConfig {
    /// Defaults of the `Phi_0` envelope check.
    pub fn phi0_default() -> Self {
        Self {
            grid: 256,
            length: 16.0,
            ts: vec![0.5, 1.0, 2.0],
            bound: 2.0,
            ..Self::default()
        }
    }

    pub fn grid_spec(&self) -> Result<GridSpec> {
        GridSpec::new(self.n, self.grid, self.length)
    }

    pub fn hash(&self) -> String {
        json_hash(self)
    }

    fn t_min(&self) -> Result<f64> {
        let t = self.ts.iter().copied().fold(f64::INFINITY, f64::min);
        if self.ts.is_empty() || !(t > 0.0) {
            return Err(Error::InvalidArgument("ts must be nonempty and positive".into()));
        }
        Ok(t)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelL1Row {
    pub j: u32,
    pub t: f64,
    pub l1: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelL1Report {
    pub config_hash: String,
    /// `||G_{1,1}||_1`
    pub reference: f64,
    pub rows: Vec<KernelL1Row>,
    pub sup_ratio: f64,
    pub bound: f64,
    pub pass: bool,
}

fn l1_norm(f: &MatrixField) -> f64 {
    f.values().iter().map(|z| z.norm()).sum::<f64>() * f.grid().cell_volume()
}

/// `sup ||G_{j,t}||_1 / ||G_{1,1}||_1` over `1 <= j <= j_max` and the sampled `t`.
pub fn kernel_l1_experiment(cfg: &KernelConfig) -> Result<KernelL1Report> {
    let grid = cfg.grid_spec()?;
    let limit = j_max(&grid, cfg.t_min()?)
        .filter(|&j| j >= 1)
        .ok_or_else(|| Error::GridTooCoarse("grid admits no kernel with j >= 1".into()))?;
    let top = cfg.j_max.unwrap_or(limit);
    if top > limit {
        return Err(Error::SupportExceedsNyquist {
            needed: 2f64.powi(top as i32 + 1) / cfg.t_min()?,
            limit: grid.nyquist(),
            max_j: Some(limit),
        });
    }
    let reference = l1_norm(&kernel_field(cfg.alpha, 1, 1.0, &grid)?);
    let pairs: Vec<(u32, f64)> = (1..=top).flat_map(|j| cfg.ts.iter().map(move |&t| (j, t))).collect();
    let rows = pairs
        .par_iter()
        .map(|&(j, t)| {
            Ok(KernelL1Row {
                j,
                t,
                l1: l1_norm(&kernel_field(cfg.alpha, j, t, &grid)?),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let sup_ratio = rows.iter().map(|r| r.l1 / reference).fold(0.0, f64::max);
    Ok(KernelL1Report {
        config_hash: cfg.hash(),
        reference,
        rows,
        sup_ratio,
        bound: cfg.bound,
        pass: sup_ratio <= cfg.bound,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeRow {
    pub t: f64,
    /// `max_x |Phi_{0,t}(x)| / (C t^{-n} (1 + |x|/t)^{-4})`
    pub ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Phi0EnvelopeReport {
    pub config_hash: String,
    /// Constant fitted at `t = 1`.
    pub constant: f64,
    pub rows: Vec<EnvelopeRow>,
    pub bound: f64,
    pub pass: bool,
}

fn envelope_ratio(kernel: &MatrixField, t: f64, c: f64) -> f64 {
    let grid = kernel.grid();
    let n = grid.dim() as i32;
    (0..grid.num_sites())
        .map(|s| {
            let env = c * t.powi(-n) * (1.0 + grid.point_radius(s) / t).powi(-4);
            kernel.values()[s].norm() / env
        })
        .fold(0.0, f64::max)
}

/// Fits `C` in `|Phi_{0,1}(x)| <= C (1 + |x|)^{-4}` and checks the scaled
/// envelope at the other `t` within the factor `bound`.
pub fn phi0_envelope_check(cfg: &KernelConfig) -> Result<Phi0EnvelopeReport> {
    let grid = cfg.grid_spec()?;
    cfg.t_min()?;
    let constant = envelope_ratio(&kernel_phi0(cfg.alpha, 1.0, &grid)?, 1.0, 1.0);
    let rows = cfg
        .ts
        .iter()
        .map(|&t| {
            Ok(EnvelopeRow {
                t,
                ratio: envelope_ratio(&kernel_phi0(cfg.alpha, t, &grid)?, t, constant),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let pass = rows.iter().all(|r| r.ratio <= cfg.bound);
    Ok(Phi0EnvelopeReport {
        config_hash: cfg.hash(),
        constant,
        rows,
        bound: cfg.bound,
        pass,
    })
}

/// Configuration of the convergence demonstration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ConvergenceConfig {
    pub n: usize,
    pub grid: usize,
    pub length: f64,
    pub alpha: f64,
    pub d: usize,
    pub test_function: TestFunction,
    /// Decreasing radii.
    pub schedule: Vec<f64>,
    /// Required error at the last radius.
    pub target: f64,
}

impl Default for ConvergenceConfig {
    fn default() -> Self {
        Self {
            n: 2,
            grid: 1024,
            length: 8.0,
            alpha: 1.0,
            d: 2,
            test_function: TestFunction::Gaussian { width: 0.5 },
            schedule: (0..=6).map(|k| 2f64.powi(-k)).collect(),
            target: 1e-2,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub t: f64,
    pub error: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub config_hash: String,
    /// `m_hat_alpha(0)`, the normalization of the means.
    pub normalization: f64,
    pub rows: Vec<ConvergenceRow>,
    pub monotone: bool,
    pub final_error: f64,
    #[serde(with = "exponent_serde")]
    pub target: f64,
    pub pass: bool,
}

/// `e(t) = max_x ||M_t^alpha f(x) / m_hat_alpha(0) - f(x)||_op` along the
/// schedule.
pub fn convergence_experiment(cfg: &ConvergenceConfig) -> Result<ConvergenceReport> {
    if cfg.schedule.is_empty() {
        return Err(Error::InvalidArgument("empty schedule".into()));
    }
    let grid = GridSpec::new(cfg.n, cfg.grid, cfg.length)?;
    let f = cfg.test_function.build(&grid, cfg.d)?;
    let normalization = m_hat(cfg.alpha, cfg.n, 0.0)?;
    let mut rows = Vec::new();
    for &t in &cfg.schedule {
        let mean = spherical_mean(&f, cfg.alpha, t)?;
        let diff = mean.scale(1.0 / normalization).sub(&f)?;
        rows.push(ConvergenceRow {
            t,
            error: field_lp_norm(&diff, f64::INFINITY)?,
        });
    }
    let monotone = rows.windows(2).all(|w| w[1].error <= w[0].error);
    let final_error = rows.last().map(|r| r.error).unwrap_or(f64::NAN);
    Ok(ConvergenceReport {
        config_hash: json_hash(cfg),
        normalization,
        monotone,
        final_error,
        target: cfg.target,
        pass: monotone && final_error < cfg.target,
        rows,
    })
}

/// Fitted slope of `log2 ||M_{j,t} f||_2` against `j` at fixed `t`.
pub fn l2_piece_slope(f: &MatrixField, alpha: f64, js: std::ops::RangeInclusive<u32>, t: f64) -> Result<f64> {
    let spectrum = dft_forward(f);
    let mut rows = Vec::new();
    for j in js {
        let piece = pieces_from_spectrum(&spectrum, alpha, j, &[t])?.remove(0);
        let norm = field_lp_norm(&piece, 2.0)?;
        rows.push(DecayRow {
            j,
            norm,
            seconds: 0.0,
            skipped: norm == 0.0,
        });
    }
    fit_rows(&rows, 0)
        .map(|(s, _)| s)
        .ok_or_else(|| Error::InvalidArgument("too few nonzero pieces to fit".into()))
}
