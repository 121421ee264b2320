//! Prescribed curvature densities: signed mixtures of radial bumps.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad::{integrate, Tolerance};
use crate::special::{
    beta_with_five, factorial, gamma_half_integer, log_kernel_normalization, sphere_area,
    upper_gamma_regularized_int,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Profile {
    Gaussian,
    /// `(1 - rho^2/s^2)^4` inside radius `s`.
    Polybump,
    /// `(n-1)! (2 / (1 + rho^2))^n`, the pulled-back round sphere.
    Spheredensity,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BumpSpec {
    pub profile: Profile,
    #[serde(default)]
    pub center: Vec<f64>,
    #[serde(default = "one")]
    pub scale: f64,
    #[serde(default = "one")]
    pub weight: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DensitySpec {
    #[serde(default)]
    pub alpha_target: Option<f64>,
    #[serde(default)]
    pub bumps: Vec<BumpSpec>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Bump {
    pub profile: Profile,
    pub center: Vec<f64>,
    pub scale: f64,
    pub weight: f64,
}

impl Bump {
    /// Unit-weight profile value at distance `rho` from the center.
    pub fn profile_value(&self, n: usize, rho: f64) -> f64 {
        profile_value(self.profile, n, self.scale, rho)
    }

    /// Mass of the unit-weight profile.
    pub fn unit_mass(&self, n: usize) -> f64 {
        radial_moment(self.profile, n, self.scale, 0)
    }

    pub fn mass(&self, n: usize) -> f64 {
        self.weight * self.unit_mass(n)
    }

    pub fn center_norm(&self) -> f64 {
        self.center.iter().map(|c| c * c).sum::<f64>().sqrt()
    }

    /// Fraction of `|mass|` outside radius `r` around the center.
    pub fn tail_fraction(&self, n: usize, r: f64) -> f64 {
        match self.profile {
            Profile::Gaussian => {
                upper_gamma_regularized_int(n / 2, r * r / (2.0 * self.scale * self.scale))
            }
            Profile::Polybump => {
                if r >= self.scale {
                    0.0
                } else {
                    let t = r / self.scale;
                    let tol = Tolerance::default();
                    let inner = integrate(|s| (1.0 - s * s).powi(4) * s.powi(n as i32 - 1), 0.0, t, tol);
                    1.0 - inner.value[0] / (0.5 * beta_with_five(n as f64 / 2.0))
                }
            }
            Profile::Spheredensity => {
                let theta = 2.0 * r.atan();
                let tol = Tolerance::default();
                let tail = integrate(|t| t.sin().powi(n as i32 - 1), theta, std::f64::consts::PI, tol);
                sphere_area(n - 1) * tail.value[0] / sphere_area(n)
            }
        }
    }

    /// Smallest radius whose tail fraction is at most `tol`.
    pub fn support_radius(&self, n: usize, tol: f64) -> f64 {
        if self.profile == Profile::Polybump {
            return self.scale;
        }
        let mut hi = self.scale;
        while self.tail_fraction(n, hi) > tol {
            hi *= 2.0;
            if hi > 1e300 {
                return f64::INFINITY;
            }
        }
        let mut lo = 0.0;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.tail_fraction(n, mid) > tol {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        hi
    }

    /// Draw a point from the normalized profile.
    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<f64> {
        let mut y: Vec<f64> = match self.profile {
            Profile::Gaussian => (0..n)
                .map(|_| self.scale * rng.sample::<f64, _>(StandardNormal))
                .collect(),
            Profile::Polybump => loop {
                let p = uniform_ball(n, rng);
                let r2: f64 = p.iter().map(|v| v * v).sum();
                if rng.random::<f64>() < (1.0 - r2).powi(4) {
                    break p.into_iter().map(|v| v * self.scale).collect();
                }
            },
            Profile::Spheredensity => {
                // Uniform point on S^n pushed through stereographic projection.
                let xi: Vec<f64> = unit_vector(n + 1, rng);
                let denom = 1.0 + xi[n];
                if denom <= f64::MIN_POSITIVE {
                    vec![1e300; n]
                } else {
                    xi[..n].iter().map(|v| v / denom).collect()
                }
            }
        };
        for (yi, ci) in y.iter_mut().zip(&self.center) {
            *yi += ci;
        }
        y
    }
}

pub(crate) fn unit_vector<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-12 {
            return v.into_iter().map(|x| x / norm).collect();
        }
    }
}

fn uniform_ball<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<f64> {
    let dir = unit_vector(n, rng);
    let r = rng.random::<f64>().powf(1.0 / n as f64);
    dir.into_iter().map(|v| v * r).collect()
}

pub fn profile_value(profile: Profile, n: usize, scale: f64, rho: f64) -> f64 {
    match profile {
        Profile::Gaussian => (-(rho * rho) / (2.0 * scale * scale)).exp(),
        Profile::Polybump => {
            if rho >= scale {
                0.0
            } else {
                (1.0 - rho * rho / (scale * scale)).powi(4)
            }
        }
        Profile::Spheredensity => factorial(n - 1) * (2.0 / (1.0 + rho * rho)).powi(n as i32),
    }
}

/// `|S^{n-1}| * int_0^inf phi(s) s^{n-1+2k} ds` for the unit-weight profile.
///
/// Infinite for the sphere density when `k >= n/2`.
pub fn radial_moment(profile: Profile, n: usize, scale: f64, k: usize) -> f64 {
    let omega = sphere_area(n - 1);
    match profile {
        Profile::Gaussian => {
            let a2 = n + 2 * k;
            omega * 0.5 * (2.0 * scale * scale).powf(a2 as f64 / 2.0) * gamma_half_integer(a2)
        }
        Profile::Polybump => {
            let a = (n + 2 * k) as f64 / 2.0;
            omega * scale.powi((n + 2 * k) as i32) * 0.5 * beta_with_five(a)
        }
        Profile::Spheredensity => {
            if k == 0 {
                factorial(n - 1) * sphere_area(n)
            } else if 2 * k >= n {
                f64::INFINITY
            } else {
                // 2^n (n-1)! |S^{n-1}| * 1/2 B(n/2 + k, n/2 - k)
                let a = n / 2 + k;
                let b = n / 2 - k;
                let beta = factorial(a - 1) * factorial(b - 1) / factorial(n - 1);
                2f64.powi(n as i32) * factorial(n - 1) * omega * 0.5 * beta
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurvatureDensity {
    dimension: usize,
    bumps: Vec<Bump>,
}

pub fn build_density(dimension: usize, spec: &DensitySpec) -> Result<CurvatureDensity> {
    if dimension < 4 || dimension % 2 != 0 {
        return Err(Error::config(format!(
            "dimension must be an even integer >= 4, got {dimension}"
        )));
    }
    let mut bumps = Vec::with_capacity(spec.bumps.len());
    for (i, b) in spec.bumps.iter().enumerate() {
        let center = if b.center.is_empty() {
            vec![0.0; dimension]
        } else {
            b.center.clone()
        };
        if center.len() != dimension {
            return Err(Error::config(format!(
                "bump {i}: center has {} coordinates, dimension is {dimension}",
                center.len()
            )));
        }
        if !center.iter().all(|c| c.is_finite()) {
            return Err(Error::config(format!("bump {i}: center must be finite")));
        }
        if !(b.scale > 0.0 && b.scale.is_finite()) {
            return Err(Error::config(format!(
                "bump {i}: scale must be positive, got {}",
                b.scale
            )));
        }
        if !b.weight.is_finite() {
            return Err(Error::config(format!("bump {i}: weight must be finite")));
        }
        if b.profile == Profile::Spheredensity {
            if center.iter().any(|&c| c != 0.0) {
                return Err(Error::config(format!(
                    "bump {i}: spheredensity must be centered at the origin"
                )));
            }
            if b.scale != 1.0 || b.weight != 1.0 {
                return Err(Error::config(format!(
                    "bump {i}: spheredensity has scale and weight fixed to 1"
                )));
            }
        }
        bumps.push(Bump {
            profile: b.profile,
            center,
            scale: b.scale,
            weight: b.weight,
        });
    }
    let mut density = CurvatureDensity { dimension, bumps };
    if let Some(target) = spec.alpha_target {
        if !target.is_finite() {
            return Err(Error::config("alpha_target must be finite"));
        }
        if density.bumps.iter().any(|b| b.profile == Profile::Spheredensity) {
            return Err(Error::config(
                "alpha_target cannot rescale a spheredensity bump (weight is fixed)",
            ));
        }
        let current = density.alpha();
        if current == 0.0 {
            if target != 0.0 {
                return Err(Error::config(
                    "alpha_target set but the bump mixture has zero total mass",
                ));
            }
        } else {
            let factor = target / current;
            for b in &mut density.bumps {
                b.weight *= factor;
            }
        }
    }
    Ok(density)
}

impl CurvatureDensity {
    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn bumps(&self) -> &[Bump] {
        &self.bumps
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.bumps
            .iter()
            .map(|b| b.weight * b.profile_value(self.dimension, distance(x, &b.center)))
            .sum()
    }

    pub fn mass(&self) -> f64 {
        self.bumps.iter().map(|b| b.mass(self.dimension)).sum()
    }

    /// Upper bound for `int |f|` (exact when no two bumps of opposite sign overlap).
    pub fn abs_mass(&self) -> f64 {
        self.bumps.iter().map(|b| b.mass(self.dimension).abs()).sum()
    }

    /// `2 / ((n-1)! |S^n|)`.
    pub fn c0(&self) -> f64 {
        log_kernel_normalization(self.dimension)
    }

    pub fn alpha(&self) -> f64 {
        self.c0() * self.mass()
    }

    pub fn is_zero(&self) -> bool {
        self.bumps.iter().all(|b| b.weight == 0.0)
    }

    pub fn is_radial(&self) -> bool {
        self.bumps.iter().all(|b| b.center.iter().all(|&c| c == 0.0))
    }

    pub fn is_nonnegative(&self) -> bool {
        self.bumps.iter().all(|b| b.weight >= 0.0)
    }

    pub fn has_spheredensity(&self) -> bool {
        self.bumps.iter().any(|b| b.profile == Profile::Spheredensity)
    }

    /// Smallest bump scale, or 1 for the zero density.
    pub fn min_scale(&self) -> f64 {
        let s = self
            .bumps
            .iter()
            .filter(|b| b.weight != 0.0)
            .map(|b| b.scale)
            .fold(f64::INFINITY, f64::min);
        if s.is_finite() {
            s
        } else {
            1.0
        }
    }

    /// Radius `R` around the origin outside of which at most `tol * int|f|` lives.
    pub fn support_radius(&self, tol: f64) -> f64 {
        assert!(tol > 0.0, "tail tolerance must be positive");
        if self.is_zero() {
            return 0.0;
        }
        self.bumps
            .iter()
            .filter(|b| b.weight != 0.0)
            .map(|b| b.center_norm() + b.support_radius(self.dimension, tol))
            .fold(0.0, f64::max)
    }

    /// Multiply every weight by `factor`.
    pub fn scaled(&self, factor: f64) -> CurvatureDensity {
        let mut out = self.clone();
        for b in &mut out.bumps {
            b.weight *= factor;
        }
        out
    }

    /// Draw from `|f| / int|f|` (all weights must be nonnegative).
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let total: f64 = self.bumps.iter().map(|b| b.mass(self.dimension)).sum();
        let mut pick = rng.random::<f64>() * total;
        for b in &self.bumps {
            let m = b.mass(self.dimension);
            if pick < m {
                return b.sample(self.dimension, rng);
            }
            pick -= m;
        }
        let last = self.bumps.iter().rev().find(|b| b.weight > 0.0).expect("nonempty");
        last.sample(self.dimension, rng)
    }
}

pub(crate) fn distance(x: &[f64], y: &[f64]) -> f64 {
    x.iter()
        .zip(y)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn gaussian(n: usize, weight: f64) -> CurvatureDensity {
        let spec = DensitySpec {
            alpha_target: None,
            bumps: vec![BumpSpec {
                profile: Profile::Gaussian,
                center: vec![],
                scale: 1.0,
                weight,
            }],
        };
        build_density(n, &spec).unwrap()
    }

    #[test]
    fn gaussian_mass_in_four_dimensions() {
        let d = gaussian(4, 3.0);
        assert!((d.mass() - 3.0 * (2.0 * PI).powi(2)).abs() < 1e-12);
        assert_eq!(d.eval(&[0.0; 4]), 3.0);
    }

    #[test]
    fn sphere_density_constants() {
        let spec = DensitySpec {
            alpha_target: None,
            bumps: vec![BumpSpec {
                profile: Profile::Spheredensity,
                center: vec![],
                scale: 1.0,
                weight: 1.0,
            }],
        };
        let d = build_density(4, &spec).unwrap();
        assert!((d.mass() - 16.0 * PI * PI).abs() < 1e-10);
        assert!((d.alpha() - 2.0).abs() < 1e-14);
        assert_eq!(d.eval(&[0.0; 4]), 96.0);
    }

    #[test]
    fn rejects_bad_configurations() {
        let mut spec = DensitySpec::default();
        assert!(build_density(5, &spec).is_err());
        spec.bumps.push(BumpSpec {
            profile: Profile::Spheredensity,
            center: vec![1.0, 0.0, 0.0, 0.0],
            scale: 1.0,
            weight: 1.0,
        });
        assert!(build_density(4, &spec).is_err());
        spec.bumps[0] = BumpSpec {
            profile: Profile::Gaussian,
            center: vec![],
            scale: 0.0,
            weight: 1.0,
        };
        assert!(build_density(4, &spec).is_err());
    }

    #[test]
    fn polybump_support_is_exact() {
        let spec = DensitySpec {
            alpha_target: None,
            bumps: vec![BumpSpec {
                profile: Profile::Polybump,
                center: vec![],
                scale: 2.0,
                weight: 1.0,
            }],
        };
        let d = build_density(4, &spec).unwrap();
        assert_eq!(d.support_radius(1e-3), 2.0);
        assert_eq!(d.support_radius(1e-15), 2.0);
    }

    #[test]
    fn zero_density_has_zero_support() {
        let d = build_density(4, &DensitySpec::default()).unwrap();
        assert_eq!(d.support_radius(1e-12), 0.0);
        assert_eq!(d.alpha(), 0.0);
    }

    #[test]
    fn sphere_moments_match_quadrature() {
        let n = 6;
        for k in 0..3 {
            let exact = radial_moment(Profile::Spheredensity, n, 1.0, k);
            let q = integrate(
                |t: f64| {
                    // s = tan(t), ds = sec^2 t dt
                    let s = t.tan();
                    let c = t.cos();
                    profile_value(Profile::Spheredensity, n, 1.0, s) * s.powi((n - 1 + 2 * k) as i32) / (c * c)
                },
                0.0,
                PI / 2.0,
                Tolerance::default(),
            );
            let numeric = sphere_area(n - 1) * q.value[0];
            assert!((numeric - exact).abs() < 1e-9 * exact, "k={k}: {numeric} vs {exact}");
        }
    }
}
