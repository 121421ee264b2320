use approx::assert_relative_eq;
use proptest::prelude::*;

use qcurv::cli::parse_points;
use qcurv::extrapolate::limit_extrapolate;
use qcurv::geometry::{completeness, geometric_radii, radial_sweep};
use qcurv::grid::flat_lattice_length;
use qcurv::oracle::stack_discrepancy;
use qcurv::output::fmt_num;
use qcurv::{build_density, build_field, BumpSpec, DensitySpec, DerivativeStack, PotentialField, Profile, QuadConfig};

fn bump(profile: Profile, center: Vec<f64>, scale: f64, weight: f64) -> BumpSpec {
    BumpSpec { profile, center, scale, weight }
}

fn gaussian_field(n: usize, alpha: f64, scale: f64) -> PotentialField {
    let spec = DensitySpec {
        alpha_target: Some(alpha),
        bumps: vec![bump(Profile::Gaussian, vec![0.0; n], scale, 1.0)],
    };
    build_field(build_density(n, &spec).unwrap(), QuadConfig::default()).unwrap()
}

fn mixture() -> impl Strategy<Value = Vec<BumpSpec>> {
    let one = (
        prop_oneof![Just(Profile::Gaussian), Just(Profile::Polybump)],
        prop::collection::vec(-2.0..2.0f64, 4),
        0.2..3.0f64,
        -2.0..2.0f64,
    )
        .prop_map(|(p, c, s, w)| bump(p, c, s, w));
    prop::collection::vec(one, 1..4)
}

fn stack() -> impl Strategy<Value = DerivativeStack> {
    (prop::collection::vec(-5.0..5.0f64, 11)).prop_map(|v| {
        let mut s = DerivativeStack::zeros(2);
        s.u = v[0];
        s.grad = v[1..3].to_vec();
        s.hess = v[3..7].to_vec();
        s.lap = v[7];
        s.grad_lap = v[8..10].to_vec();
        s.bilap = v[10];
        s
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn alpha_is_linear_in_weights(bumps in mixture(), c in -3.0..3.0f64) {
        let d = build_density(4, &DensitySpec { alpha_target: None, bumps: bumps.clone() }).unwrap();
        let scaled: Vec<BumpSpec> = bumps.into_iter().map(|b| BumpSpec { weight: c * b.weight, ..b }).collect();
        let e = build_density(4, &DensitySpec { alpha_target: None, bumps: scaled }).unwrap();
        let tol = 1e-14 * (1.0 + d.abs_mass() * d.c0() * c.abs());
        prop_assert!((e.alpha() - c * d.alpha()).abs() <= tol, "{} vs {}", e.alpha(), c * d.alpha());
    }

    #[test]
    fn alpha_target_is_hit(bumps in mixture(), target in -2.0..2.0f64) {
        let spec = DensitySpec { alpha_target: Some(target), bumps };
        // A mixture with zero net mass cannot be rescaled to a target.
        if let Ok(d) = build_density(4, &spec) {
            prop_assert!((d.alpha() - target).abs() <= 1e-12);
        }
    }

    #[test]
    fn lattice_length_dominates_euclidean(steps in prop::collection::vec(-40i64..40, 4)) {
        let len = flat_lattice_length(&steps);
        let euclid = steps.iter().map(|&s| (s * s) as f64).sum::<f64>().sqrt();
        prop_assert!(len >= euclid - 1e-12);
        // Off-lattice directions overshoot by about 12% at most.
        prop_assert!(len <= 1.2 * euclid + 1e-12);
    }

    #[test]
    fn stack_discrepancy_is_symmetric(a in stack(), b in stack()) {
        prop_assert_eq!(stack_discrepancy(&a, &b), stack_discrepancy(&b, &a));
        prop_assert_eq!(stack_discrepancy(&a, &a), 0.0);
    }

    #[test]
    fn constant_samples_extrapolate_to_the_constant(c in -1e3..1e3f64, count in 6usize..20) {
        let samples: Vec<(f64, f64)> = geometric_radii(1e2, 1e4, count).into_iter().map(|r| (r, c)).collect();
        let e = limit_extrapolate(&samples).unwrap();
        prop_assert_eq!(e.estimate, c);
    }

    #[test]
    fn points_round_trip_through_text(pts in prop::collection::vec(prop::collection::vec(-1e6..1e6f64, 4), 1..6)) {
        let text: String = pts
            .iter()
            .map(|p| p.iter().map(|&v| fmt_num(v)).collect::<Vec<_>>().join(" ") + "\n")
            .collect();
        prop_assert_eq!(parse_points(&text, "pts", 4).unwrap(), pts);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn flat_isoperimetric_ratio_is_one(count in 8usize..16) {
        let field = build_field(build_density(4, &DensitySpec::default()).unwrap(), QuadConfig::default()).unwrap();
        for row in radial_sweep(&field, &geometric_radii(1.0, 1e4, count)).unwrap().rows {
            assert_relative_eq!(row.iso_ratio, 1.0, max_relative = 1e-12);
        }
    }

    #[test]
    fn sweep_columns_are_monotone(alpha in 0.05..0.95f64, scale in 0.3..3.0f64) {
        let field = gaussian_field(4, alpha, scale);
        let rows = radial_sweep(&field, &geometric_radii(1.0, 1e4, 12)).unwrap().rows;
        for w in rows.windows(2) {
            prop_assert!(w[1].r > w[0].r);
            prop_assert!(w[1].vol_g >= w[0].vol_g);
            prop_assert!(w[1].dist_g.unwrap() >= w[0].dist_g.unwrap());
        }
    }

    #[test]
    fn completeness_follows_the_sign_of_one_minus_alpha(
        alpha in prop_oneof![Just(0.3), Just(0.8), Just(1.0), Just(1.2), 0.1..0.9f64, 1.1..1.9f64],
    ) {
        let field = gaussian_field(4, alpha, 1.0);
        prop_assert_eq!(completeness(&field).unwrap().complete, alpha <= 1.0);
    }

    #[test]
    fn potential_scales_with_alpha(alpha in 0.1..1.5f64, x in prop::collection::vec(-4.0..4.0f64, 4)) {
        // u is linear in the density, so u_alpha = alpha * u_1.
        let unit = gaussian_field(4, 1.0, 1.0);
        let field = gaussian_field(4, alpha, 1.0);
        assert_relative_eq!(field.eval_u(&x), alpha * unit.eval_u(&x), max_relative = 1e-9, epsilon = 1e-12);
    }
}
