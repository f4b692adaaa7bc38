use fracnls_core::dependence::fit_slope;
use fracnls_core::exponents::{admissibility_residual, ExponentSet, ProblemParams};
use fracnls_core::grid::{free_propagate, lebesgue_norm, translate, Grid};
use fracnls_core::nonlinearity::{
    check_pointwise_power, difference_identity_residual, PowerNonlinearity,
};
use fracnls_core::rng::{band_limited_field, seeded};
use fracnls_core::snapshot::{read_field_binary, write_field_binary};
use fracnls_core::solver::nonlinear_flow;
use fracnls_core::spaces::{besov_norm_lp, sobolev_norm, NormSpec};
use num_complex::Complex64;
use proptest::prelude::*;

fn complex() -> impl Strategy<Value = Complex64> {
    (-3.0f64..1.0, 0.0f64..std::f64::consts::TAU)
        .prop_map(|(lg, th)| Complex64::from_polar(10f64.powf(lg), th))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn canonical_pair_is_admissible(dim in 1usize..=3, sf in 0.02f64..0.98, af in 0.02f64..=1.0) {
        let s = sf * (dim as f64 / 2.0).min(1.0);
        let alpha = af * 4.0 / (dim as f64 - 2.0 * s);
        let e = ExponentSet::new(&ProblemParams::power(dim, s, alpha, Complex64::new(1.0, 0.0))).unwrap();
        prop_assert!(admissibility_residual(e.gamma, e.rho, dim).unwrap().abs() < 1e-12);
        prop_assert!((e.nu_rho - e.sigma).abs() < 1e-9 * e.sigma);
    }

    #[test]
    fn multiplier_norms_survive_the_free_flow(seed in any::<u64>(), t in -2.0f64..2.0, y in -5.0f64..5.0) {
        let grid = Grid::new(1, 64, 10.0).unwrap();
        let f = band_limited_field(&mut seeded(seed), &grid, 8.0, 1.0);
        let g = translate(&free_propagate(&f, t), &[y]).unwrap();
        for s in [0.0, 0.3, 0.9] {
            let (a, b) = (sobolev_norm(&f, s, false), sobolev_norm(&g, s, false));
            prop_assert!((a - b).abs() <= 1e-12 * a);
        }
        let spec = NormSpec::besov_lp(0.5, 2.0, 2.0, true);
        let (a, b) = (besov_norm_lp(&f, &spec).unwrap(), besov_norm_lp(&g, &spec).unwrap());
        prop_assert!((a - b).abs() <= 1e-10 * a);
        let l2 = lebesgue_norm(&f, 2.0).unwrap();
        prop_assert!((sobolev_norm(&f, 0.0, true) - l2).abs() <= 1e-12 * l2);
    }

    #[test]
    fn pointwise_bounds_hold(z1 in complex(), z2 in complex(), ai in 0usize..4) {
        let alpha = [0.5, 1.0, 2.0, 3.0][ai];
        prop_assert!(check_pointwise_power(z1, z2, alpha).holds());
    }

    #[test]
    fn difference_identity(z1 in complex(), z2 in complex(), alpha in 0.5f64..3.0) {
        let nl = PowerNonlinearity::new(Complex64::new(1.0, -0.5), alpha).unwrap();
        prop_assert!(difference_identity_residual(z1, z2, &nl, 128).unwrap() < 1e-8);
    }

    #[test]
    fn real_coupling_keeps_the_modulus(z in complex(), a in -3.0f64..3.0, dt in 0.0f64..1.0) {
        let out = nonlinear_flow(z, Complex64::new(a, 0.0), 2.0, dt).unwrap();
        prop_assert!((out.norm() - z.norm()).abs() <= 4.0 * f64::EPSILON * z.norm());
    }

    #[test]
    fn binary_snapshots_round_trip(seed in any::<u64>(), dim in 1usize..=3) {
        let grid = Grid::new(dim, 8, 3.0).unwrap();
        let f = band_limited_field(&mut seeded(seed), &grid, 4.0, 0.0);
        let mut buf = Vec::new();
        write_field_binary(&mut buf, &f).unwrap();
        prop_assert_eq!(read_field_binary(&buf[..]).unwrap(), f);
    }

    #[test]
    fn slope_fit_recovers_power_laws(p in 0.1f64..3.0, c in 0.01f64..100.0) {
        let pts: Vec<(f64, f64)> = (0..9).map(|k| {
            let x = 0.5f64.powi(k);
            (x, c * x.powf(p))
        }).collect();
        let fit = fit_slope(&pts).unwrap();
        prop_assert!((fit.slope - p).abs() < 1e-10);
        prop_assert!((fit.r_squared - 1.0).abs() < 1e-10);
    }
}
