use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use ncsms::io::{decode_mfld, encode_mfld};
use ncsms::lattice::{dft_forward, dft_inverse, GridSpec, MatrixField};
use ncsms::linalg::{CMat, C64};
use ncsms::meansop::{dyadic_piece, spherical_mean};
use ncsms::ncspace::{
    alpha_threshold, field_lp_norm, maximal_norm_positive, maximal_norm_selfadjoint, mu, u_floor, FamilyKind,
    MaximalFamily,
};
use ncsms::special::bessel_j;

fn random_field(grid: GridSpec, d: usize, seed: u64, psd: bool) -> MatrixField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut values = Vec::with_capacity(grid.num_sites() * d * d);
    for _ in 0..grid.num_sites() {
        let g = CMat::from_fn(d, |_, _| {
            C64::new(StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng))
        });
        let m = if psd { g.gram() } else { g };
        values.extend_from_slice(m.as_slice());
    }
    MatrixField::from_values(grid, d, values).unwrap()
}

fn psd_family(seed: u64, count: usize) -> MaximalFamily {
    let grid = GridSpec::new(1, 8, 4.0).unwrap();
    let members = (0..count)
        .map(|k| (k as f64, random_field(grid, 2, seed * 31 + k as u64, true)))
        .collect();
    MaximalFamily::new(FamilyKind::Positive, members).unwrap()
}

fn exponent() -> impl Strategy<Value = f64> {
    prop_oneof![Just(1.0), Just(2.0), Just(4.0), Just(f64::INFINITY), 1.0..6.0f64]
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1e-300)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn maximal_norm_is_homogeneous(seed in 0u64..1000, c in 0.1..10.0f64, p in exponent()) {
        let fam = psd_family(seed, 3);
        let v = maximal_norm_positive(&fam, p).unwrap().value;
        let w = maximal_norm_positive(&fam.scaled(c), p).unwrap().value;
        prop_assert!(close(w, c * v, 1e-6), "{w} vs {}", c * v);
    }

    #[test]
    fn maximal_norm_sandwich(seed in 0u64..1000, count in 1usize..5, p in exponent()) {
        let fam = psd_family(seed, count);
        let v = maximal_norm_positive(&fam, p).unwrap();
        prop_assert!(v.dominator.min_slack() >= -1e-8);
        let lower = fam.members().iter().map(|x| field_lp_norm(x, p).unwrap()).fold(0.0, f64::max);
        let mut total = fam.members()[0].clone();
        for x in &fam.members()[1..] {
            total = total.add(x).unwrap();
        }
        let upper = field_lp_norm(&total, p).unwrap();
        prop_assert!(lower <= v.value * (1.0 + 1e-6));
        prop_assert!(v.value <= upper * (1.0 + 1e-6));
    }

    #[test]
    fn subfamilies_have_smaller_norm(seed in 0u64..1000, p in exponent(), drop in 0usize..4) {
        let fam = psd_family(seed, 4);
        let keep: Vec<usize> = (0..4).filter(|&k| k != drop).collect();
        let v = maximal_norm_positive(&fam, p).unwrap().value;
        let w = maximal_norm_positive(&fam.subfamily(&keep).unwrap(), p).unwrap().value;
        prop_assert!(w <= v * (1.0 + 1e-6), "{w} > {v}");
    }

    #[test]
    fn selfadjoint_norm_ignores_sign(seed in 0u64..1000, p in exponent()) {
        let grid = GridSpec::new(1, 8, 4.0).unwrap();
        let x = random_field(grid, 2, seed, true).sub(&random_field(grid, 2, seed + 7, true)).unwrap();
        let y = random_field(grid, 2, seed + 13, true);
        let a = MaximalFamily::new(FamilyKind::Selfadjoint, vec![(0.0, x.clone()), (1.0, y.clone())]).unwrap();
        let b = MaximalFamily::new(FamilyKind::Selfadjoint, vec![(0.0, x.scale(-1.0)), (1.0, y)]).unwrap();
        let va = maximal_norm_selfadjoint(&a, p).unwrap().value;
        let vb = maximal_norm_selfadjoint(&b, p).unwrap().value;
        prop_assert!(close(va, vb, 1e-6));
    }
}

proptest! {
    #[test]
    fn dft_roundtrip(seed in any::<u64>(), n in 1usize..=3, d in 1usize..=3) {
        let size = [64, 16, 8][n - 1];
        let grid = GridSpec::new(n, size, 3.0).unwrap();
        let f = random_field(grid, d, seed, false);
        let back = dft_inverse(&dft_forward(&f));
        prop_assert!(back.sub(&f).unwrap().max_abs() < 1e-12);
    }

    #[test]
    fn mfld_roundtrip_is_exact(seed in any::<u64>(), n in 1usize..=2, d in 1usize..=3) {
        let grid = GridSpec::new(n, 8, 2.5).unwrap();
        let f = random_field(grid, d, seed, false);
        let back: MatrixField = decode_mfld(&encode_mfld(&f)).unwrap();
        prop_assert_eq!(back.values(), f.values());
        prop_assert_eq!(back.grid(), f.grid());
    }

    #[test]
    fn dyadic_pieces_are_linear(
        seed in any::<u64>(),
        a in -3.0..3.0f64,
        b in -3.0..3.0f64,
        alpha in 0.0..2.0f64,
        j in 0u32..3,
        t in 0.8..2.0f64,
    ) {
        let grid = GridSpec::new(2, 64, 2.0).unwrap();
        let f = random_field(grid, 2, seed, false);
        let g = random_field(grid, 2, seed ^ 0x5555, false);
        let mix = f.scale(a).add(&g.scale(b)).unwrap();
        let lhs = dyadic_piece(&mix, alpha, j, t).unwrap();
        let rhs = dyadic_piece(&f, alpha, j, t).unwrap().scale(a)
            .add(&dyadic_piece(&g, alpha, j, t).unwrap().scale(b)).unwrap();
        prop_assert!(lhs.sub(&rhs).unwrap().max_abs() <= 1e-10 * (1.0 + lhs.max_abs()));
    }

    #[test]
    fn means_preserve_hermitian_fields(seed in any::<u64>(), alpha in 0.0..2.0f64, t in 0.2..2.0f64) {
        let grid = GridSpec::new(2, 64, 4.0).unwrap();
        let f = random_field(grid, 2, seed, true);
        let m = spherical_mean(&f, alpha, t).unwrap();
        prop_assert!(m.hermitian_defect() <= 1e-12 * (1.0 + m.max_abs()));
    }

    #[test]
    fn bessel_three_term_recurrence(nu in 0.51..4.5f64, r in 0.1..60.0f64) {
        // J_{nu-1} + J_{nu+1} = (2 nu / r) J_nu
        let lhs = bessel_j(nu - 1.0, r).unwrap() + bessel_j(nu + 1.0, r).unwrap();
        let rhs = 2.0 * nu / r * bessel_j(nu, r).unwrap();
        let scale = (2.0 / (std::f64::consts::PI * r)).sqrt() * (1.0 + 2.0 * nu / r);
        prop_assert!((lhs - rhs).abs() <= 1e-8 * scale.max(1.0), "{lhs} vs {rhs}");
    }

    #[test]
    fn mu_sign_matches_threshold(n in 1usize..=3, q in 0.0..1.0f64, alpha in -1.5..1.5f64) {
        let p = if q < 1e-3 { f64::INFINITY } else { 2.0 / q };
        let threshold = alpha_threshold(n, p);
        prop_assume!((alpha - threshold).abs() > 1e-9);
        let negative = mu(n, p, alpha, u_floor(n, 4.0)) < 0.0;
        prop_assert_eq!(negative, alpha > threshold);
    }
}
