//! Direct two-dimensional quadrature of the kernel integrals (radial profile
//! variable times polar angle) compared against the per-bump transfers.

use qcurv::density::{profile_value, Profile};
use qcurv::quad::{integrate, Tolerance};
use qcurv::special::{log_kernel_normalization, sphere_area};
use qcurv::{build_density, build_field, BumpSpec, DensitySpec, QuadConfig};

fn tol() -> Tolerance {
    Tolerance {
        rel: 1e-11,
        abs: 1e-14,
        max_subdivisions: 400,
    }
}

/// `int_{R^n} K(|x - y|, (x - y).e) phi(|y|) dy` with `x = rho e_1`.
fn direct(n: usize, profile: Profile, scale: f64, rho: f64, kernel: impl Fn(f64, f64) -> f64) -> f64 {
    let omega_tail = sphere_area(n - 2);
    let radial = |s: f64| {
        let angular = |th: f64| {
            let (sn, cs) = th.sin_cos();
            let d2 = rho * rho + s * s - 2.0 * rho * s * cs;
            let along = rho - s * cs;
            kernel(d2, along) * sn.powi(n as i32 - 2)
        };
        let a = integrate(angular, 0.0, std::f64::consts::PI, tol()).value[0];
        omega_tail * a * profile_value(profile, n, scale, s) * s.powi(n as i32 - 1)
    };
    let cut = 12.0 * scale;
    let mut total = 0.0;
    for (a, b) in [(0.0, rho.min(cut)), (rho.min(cut), cut)] {
        total += integrate(radial, a, b, tol()).value[0];
    }
    total
}

fn single(n: usize, profile: Profile, scale: f64) -> qcurv::PotentialField {
    let spec = DensitySpec {
        alpha_target: None,
        bumps: vec![BumpSpec {
            profile,
            center: vec![],
            scale,
            weight: 1.0,
        }],
    };
    build_field(build_density(n, &spec).unwrap(), QuadConfig::default()).unwrap()
}

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()).max(1e-12)
}

#[test]
fn transfers_match_direct_quadrature() {
    for (n, profile, scale) in [
        (4, Profile::Gaussian, 1.0),
        (4, Profile::Polybump, 1.5),
        (6, Profile::Gaussian, 0.8),
        (8, Profile::Polybump, 1.0),
    ] {
        let field = single(n, profile, scale);
        let c0 = log_kernel_normalization(n);
        let nf = n as f64;
        for rho in [0.3, 1.0, 2.7] {
            let t = field.bump_transfer(0, rho);
            let u = direct(n, profile, scale, rho, |d2, _| -0.5 * c0 * d2.ln());
            let v = direct(n, profile, scale, rho, |d2, a| -c0 * a / d2);
            let lap = direct(n, profile, scale, rho, |d2, _| -c0 * (nf - 2.0) / d2);
            assert!(close(t.u, u, 1e-8), "n={n} rho={rho} U {} vs {u}", t.u);
            assert!(close(t.v, v, 1e-8), "n={n} rho={rho} V {} vs {v}", t.v);
            assert!(close(t.lap, lap, 1e-8), "n={n} rho={rho} L {} vs {lap}", t.lap);
            if n >= 6 {
                let m = direct(n, profile, scale, rho, |d2, a| 2.0 * c0 * (nf - 2.0) * a / (d2 * d2));
                let p = direct(n, profile, scale, rho, |d2, _| {
                    2.0 * c0 * (nf - 2.0) * (nf - 4.0) / (d2 * d2)
                });
                assert!(close(t.lap_prime, m, 1e-7), "n={n} rho={rho} M {} vs {m}", t.lap_prime);
                assert!(close(t.bilap, p, 1e-7), "n={n} rho={rho} P {} vs {p}", t.bilap);
            }
        }
    }
}

#[test]
fn far_field_is_continuous_with_near_field() {
    let field = single(6, Profile::Gaussian, 1.0);
    // The switch happens near ten scales; straddle it closely.
    let mut prev = field.bump_transfer(0, 9.0);
    let mut rho = 9.0;
    while rho < 12.0 {
        rho += 0.05;
        let t = field.bump_transfer(0, rho);
        let step = 0.05;
        let du = (t.u - prev.u) / step;
        let mid_v = 0.5 * (t.v + prev.v);
        assert!(close(du, mid_v, 1e-4), "rho={rho}: dU {du} vs V {mid_v}");
        prev = t;
    }
}

// Frozen from the direct oracle above (n = 4, unit gaussian, rho = 1). The
// Laplacian also has the closed form -(1 - e^{-1/2}) since |x|^{-2} is harmonic
// in four dimensions.
#[test]
fn frozen_gaussian_transfer_values() {
    let t = single(4, Profile::Gaussian, 1.0).bump_transfer(0, 1.0);
    assert!(close(t.u, FROZEN_U, 1e-10), "{}", t.u);
    assert!(close(t.lap, FROZEN_L, 1e-10), "{}", t.lap);
}

const FROZEN_U: f64 = -3.36678068837723499e-1;
const FROZEN_L: f64 = -0.39346934028736658;

