//! Fast invariant suite behind `ncsms selftest`.

use std::f64::consts::PI;

use serde::Serialize;

use super::{
    admissibility_table, decay_experiment, ftc_identity_check, sobolev_bound_check, square_lemma_check,
    ExperimentConfig, TestFunction,
};
use crate::error::Result;
use crate::lattice::{dft_forward, sample_function, GridSpec, MatrixField};
use crate::linalg::{CMat, C64};
use crate::meansop::{dyadic_piece, spherical_mean};
use crate::ncspace::{maximal_norm_selfadjoint, p_bar, FamilyKind, MaximalFamily};
use crate::special::{bessel_j, gamma_fn, kernel_mass, m_hat};

#[derive(Clone, Debug, Serialize)]
pub struct SelfTestLine {
    pub name: &'static str,
    pub pass: bool,
    pub value: f64,
    pub tolerance: f64,
}

fn line(name: &'static str, value: f64, tolerance: f64) -> SelfTestLine {
    SelfTestLine {
        name,
        pass: value <= tolerance,
        value,
        tolerance,
    }
}

fn bessel_closed_forms() -> Result<f64> {
    let mut worst = 0.0f64;
    for k in 0..400 {
        let r = 0.1 * (2000f64).powf(k as f64 / 399.0);
        let half = (2.0 / (PI * r)).sqrt() * r.sin();
        let three_half = (2.0 / (PI * r)).sqrt() * (r.sin() / r - r.cos());
        let scale = 1e-2 * (2.0 / (PI * r)).sqrt();
        worst = worst.max((bessel_j(0.5, r)? - half).abs() / half.abs().max(scale));
        worst = worst.max((bessel_j(1.5, r)? - three_half).abs() / three_half.abs().max(scale));
    }
    Ok(worst)
}

fn gamma_spots() -> Result<f64> {
    let cases = [
        (0.5, PI.sqrt()),
        (1.0, 1.0),
        (5.0, 24.0),
        (2.5, 0.75 * PI.sqrt()),
        (-0.5, -2.0 * PI.sqrt()),
    ];
    let mut worst = 0.0f64;
    for (x, g) in cases {
        worst = worst.max((gamma_fn(x)? - g).abs() / g.abs());
    }
    Ok(worst)
}

fn mass_at_origin() -> Result<f64> {
    let mut worst = 0.0f64;
    for n in 1..=3 {
        for alpha in [0.0, 0.5, 1.0, 2.0] {
            if n == 1 && alpha == 0.0 {
                // order -1/2 is outside the Bessel range
                continue;
            }
            let exact = PI.powf(n as f64 / 2.0) / gamma_fn(n as f64 / 2.0 + alpha)?;
            worst = worst.max((m_hat(alpha, n, 0.0)? - exact).abs() / exact);
        }
    }
    Ok(worst)
}

fn direct_dft_defect() -> Result<f64> {
    let grid = GridSpec::new(2, 8, 3.0)?;
    let f = TestFunction::MatrixRandom { seed: 11 }.build(&grid, 2)?;
    let fast = dft_forward(&f);
    let h2 = grid.cell_volume();
    let mut worst = 0.0f64;
    for k in 0..grid.num_sites() {
        let xi = grid.frequency(k);
        for e in 0..4 {
            let mut acc = C64::new(0.0, 0.0);
            for s in 0..grid.num_sites() {
                let x = grid.point(s);
                let phase = -2.0 * PI * (x[0] * xi[0] + x[1] * xi[1]);
                acc += f.site_slice(s)[e] * C64::from_polar(h2, phase);
            }
            worst = worst.max((acc - fast.site_slice(k)[e]).norm());
        }
    }
    Ok(worst)
}

fn reassembly_defect() -> Result<f64> {
    let grid = GridSpec::new(2, 128, 8.0)?;
    let f = TestFunction::Gaussian { width: 0.5 }.build(&grid, 2)?;
    let t = 1.3;
    let mut acc = MatrixField::zeros(grid, 2);
    for j in 0..=2 {
        acc = acc.add(&dyadic_piece(&f, 1.0, j, t)?)?;
    }
    Ok(acc.sub(&spherical_mean(&f, 1.0, t)?)?.max_abs())
}

fn commuting_family_defect() -> Result<f64> {
    // diagonal members: the maximal norm is the l_p norm of max_t |x_t|
    let grid = GridSpec::new(1, 16, 4.0)?;
    let members: Vec<(f64, MatrixField)> = (0..4)
        .map(|k| {
            let f = sample_function(grid, 2, |x| {
                CMat::from_real_diag(&[(x[0] + k as f64).sin(), 0.5 * (2.0 * x[0] - k as f64).cos()])
            })?;
            Ok((1.0 + k as f64 * 0.25, f))
        })
        .collect::<Result<_>>()?;
    let fam = MaximalFamily::new(FamilyKind::Selfadjoint, members)?;
    let got = maximal_norm_selfadjoint(&fam, 2.0)?.value;
    let mut sum = 0.0;
    for s in 0..grid.num_sites() {
        for e in [0, 3] {
            let m = fam
                .members()
                .iter()
                .map(|f| f.site_slice(s)[e].re.abs())
                .fold(0.0, f64::max);
            sum += m * m;
        }
    }
    let exact = (sum * grid.cell_volume()).sqrt();
    Ok((got - exact).abs() / exact)
}

fn square_lemma_margin() -> Result<f64> {
    let grid = GridSpec::new(2, 32, 4.0)?;
    let f = TestFunction::BandLimited { seed: 5 }.build(&grid, 2)?;
    let mut worst = 0.0f64;
    for alpha in [0.0, 0.5, 1.0] {
        let r = square_lemma_check(&f, alpha, &[1.0, 1.5], kernel_mass(alpha, 2)?, 1e-8)?;
        worst = worst.max(-r.min_eigenvalue);
    }
    Ok(worst)
}

fn ftc_error() -> Result<f64> {
    let grid = GridSpec::new(2, 32, 1.8)?;
    let f = TestFunction::MatrixRandom { seed: 8 }.build(&grid, 2)?;
    let mut worst = 0.0f64;
    for m in [1, 2] {
        worst = worst.max(ftc_identity_check(&f, 1.0, 2, 2.0, m, 257)?.relative_error);
    }
    Ok(worst)
}

fn small_decay_config() -> ExperimentConfig {
    ExperimentConfig {
        grid: 64,
        j_min: 1,
        t_samples: 5,
        ..Default::default()
    }
}

fn sobolev_shortfall() -> Result<f64> {
    let cfg = ExperimentConfig {
        j_max: Some(3),
        ..small_decay_config()
    };
    let r = sobolev_bound_check(&cfg, 1, 2.0)?;
    Ok(r.rows
        .iter()
        .map(|row| -row.margin / row.rhs)
        .fold(f64::NEG_INFINITY, f64::max))
}

fn exponent_arithmetic() -> f64 {
    let a = admissibility_table(3, &[2.0])[0].alpha_threshold;
    let b = admissibility_table(2, &[4.0])[0].alpha_threshold;
    (a + 0.5).abs() + (b + 0.25).abs() + (p_bar(2) - 4.0).abs() + (p_bar(3) - 4.0).abs()
}

fn determinism() -> Result<f64> {
    let cfg = small_decay_config();
    let a = decay_experiment(&cfg)?.to_csv(false);
    let b = decay_experiment(&cfg)?.to_csv(false);
    Ok(if a == b { 0.0 } else { 1.0 })
}

/// Runs the suite; a check that errors is reported as failed with value
/// infinity.
pub fn selftest() -> Vec<SelfTestLine> {
    type Check = (&'static str, fn() -> Result<f64>, f64);
    let checks: [Check; 11] = [
        ("bessel closed forms J_1/2, J_3/2", bessel_closed_forms, 1e-8),
        ("gamma spot values", gamma_spots, 1e-12),
        ("m_hat(0) = pi^(n/2)/Gamma(n/2+alpha)", mass_at_origin, 1e-12),
        ("FFT vs direct sum", direct_dft_defect, 1e-10),
        ("dyadic pieces reassemble the mean", reassembly_defect, 1e-10),
        ("commuting family closed form", commuting_family_defect, 1e-6),
        ("square lemma PSD defect", square_lemma_margin, 1e-8),
        ("FTC identity m = 1, 2", ftc_error, 1e-3),
        ("Sobolev-type bound shortfall", sobolev_shortfall, 1e-6),
        ("admissibility hand values", || Ok(exponent_arithmetic()), 0.0),
        ("decay CSV rerun identical", determinism, 0.0),
    ];
    checks
        .iter()
        .map(|&(name, run, tol)| line(name, run().unwrap_or(f64::INFINITY), tol))
        .collect()
}
