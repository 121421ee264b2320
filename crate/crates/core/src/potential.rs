//! Logarithmic potential `u = L(f)` and its derivative stack.
//!
//! Each bump contributes a radial transfer function of `rho = |x - c|`. The
//! angular part of every kernel (`log|x-y|`, `|x-y|^{-2}`, `|x-y|^{-4}`) is
//! integrated in closed form: in even dimension the sphere means are
//! terminating hypergeometric polynomials in `min/max` of the two radii. What
//! remains is a 1-D integral over the profile radius, split at `s = rho`, and
//! beyond the profile's effective support the transfers are exact finite
//! moment expansions.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::density::{distance, radial_moment, CurvatureDensity, Profile};
use crate::error::{Error, Result};
use crate::quad::{integrate_vec, Tolerance};
use crate::special::{pochhammer, sphere_area};

/// Relative tail mass beyond which a bump is treated through its moments.
const FAR_FIELD_TAIL: f64 = 1e-20;

fn default_rel_tol() -> f64 {
    1e-12
}
fn default_abs_tol() -> f64 {
    1e-15
}
fn default_max_subdivisions() -> usize {
    200
}
fn default_angular_nodes() -> usize {
    32
}
fn default_table_nodes() -> usize {
    257
}
fn default_table_rho_max() -> f64 {
    1e3
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadConfig {
    #[serde(default = "default_rel_tol")]
    pub rel_tol: f64,
    #[serde(default = "default_abs_tol")]
    pub abs_tol: f64,
    #[serde(default = "default_max_subdivisions")]
    pub max_subdivisions: usize,
    #[serde(default = "default_angular_nodes")]
    pub angular_nodes: usize,
    #[serde(default = "default_table_nodes")]
    pub table_nodes: usize,
    #[serde(default = "default_table_rho_max")]
    pub table_rho_max: f64,
}

impl Default for QuadConfig {
    fn default() -> Self {
        QuadConfig {
            rel_tol: default_rel_tol(),
            abs_tol: default_abs_tol(),
            max_subdivisions: default_max_subdivisions(),
            angular_nodes: default_angular_nodes(),
            table_nodes: default_table_nodes(),
            table_rho_max: default_table_rho_max(),
        }
    }
}

impl QuadConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0 && self.abs_tol > 0.0) {
            return Err(Error::config("quadrature rel_tol and abs_tol must be positive"));
        }
        if self.angular_nodes < 16 {
            return Err(Error::config("quadrature angular_nodes must be at least 16"));
        }
        if self.max_subdivisions == 0 {
            return Err(Error::config("quadrature max_subdivisions must be positive"));
        }
        if self.table_nodes < 2 || !(self.table_rho_max > 0.0) {
            return Err(Error::config(
                "quadrature table needs at least 2 nodes and a positive table_rho_max",
            ));
        }
        Ok(())
    }

    fn tolerance(&self) -> Tolerance {
        Tolerance {
            rel: self.rel_tol,
            abs: self.abs_tol,
            max_subdivisions: self.max_subdivisions,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DerivativeStack {
    pub u: f64,
    pub grad: Vec<f64>,
    /// Row-major `n x n`.
    pub hess: Vec<f64>,
    pub lap: f64,
    pub grad_lap: Vec<f64>,
    pub bilap: f64,
}

impl DerivativeStack {
    pub fn zeros(n: usize) -> Self {
        DerivativeStack {
            u: 0.0,
            grad: vec![0.0; n],
            hess: vec![0.0; n * n],
            lap: 0.0,
            grad_lap: vec![0.0; n],
            bilap: 0.0,
        }
    }

    pub fn dimension(&self) -> usize {
        self.grad.len()
    }

    pub fn hess_at(&self, i: usize, j: usize) -> f64 {
        self.hess[i * self.dimension() + j]
    }

    pub fn grad_sq(&self) -> f64 {
        self.grad.iter().map(|g| g * g).sum()
    }

    pub fn hess_trace(&self) -> f64 {
        (0..self.dimension()).map(|i| self.hess_at(i, i)).sum()
    }

    pub fn hess_frobenius_sq(&self) -> f64 {
        self.hess.iter().map(|h| h * h).sum()
    }

    /// `grad^T hess grad`.
    pub fn hess_quadratic(&self) -> f64 {
        let n = self.dimension();
        let mut acc = 0.0;
        for i in 0..n {
            for j in 0..n {
                acc += self.grad[i] * self.hess[i * n + j] * self.grad[j];
            }
        }
        acc
    }

    pub fn grad_dot_grad_lap(&self) -> f64 {
        self.grad.iter().zip(&self.grad_lap).map(|(a, b)| a * b).sum()
    }
}

/// Radial transfer values of one bump (or of a radial field).
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Transfer {
    pub u: f64,
    pub v: f64,
    pub v_over_rho: f64,
    pub lap: f64,
    pub lap_prime: f64,
    pub bilap: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RadialRow {
    pub rho: f64,
    pub u: f64,
    pub v: f64,
    pub lap: f64,
    pub lap_prime: f64,
    pub bilap: f64,
}

/// Sphere-mean coefficients for the kernels in dimension `n`.
#[derive(Debug, Clone)]
struct Kernels {
    n: usize,
    c0: f64,
    kappa1: f64,
    kappa2: f64,
    /// `d_k`, `k = 1..=mu`, for the logarithm.
    d: Vec<f64>,
    /// `c_{1,k}`, `k = 0..mu`, for `|x-y|^{-2}`.
    c1: Vec<f64>,
    /// `c_{2,k}`, `k = 0..mu-1`, for `|x-y|^{-4}`.
    c2: Vec<f64>,
}

impl Kernels {
    fn new(n: usize, c0: f64) -> Self {
        let mu = n / 2 - 1;
        let muf = mu as f64;
        let coeff = |j: usize, k: usize| {
            let j = j as f64;
            pochhammer(j, k) * pochhammer(j - muf, k)
                / (pochhammer(muf + 1.0, k) * pochhammer(1.0, k))
        };
        let d = (1..=mu)
            .map(|k| pochhammer(-muf, k) / (k as f64 * pochhammer(muf + 1.0, k)))
            .collect();
        let c1 = (0..mu).map(|k| coeff(1, k)).collect();
        let c2 = (0..mu.saturating_sub(1)).map(|k| coeff(2, k)).collect();
        let kappa1 = -c0 * (n as f64 - 2.0);
        let kappa2 = kappa1 * -2.0 * (n as f64 - 4.0);
        Kernels {
            n,
            c0,
            kappa1,
            kappa2,
            d,
            c1,
            c2,
        }
    }

    /// Mean over `|y| = s` of `-c0 log|x - y|`, `|x| = rho`.
    fn mean_log(&self, rho: f64, s: f64) -> f64 {
        let (big, small) = if rho >= s { (rho, s) } else { (s, rho) };
        let t = (small / big).powi(2);
        let series: f64 = self
            .d
            .iter()
            .enumerate()
            .map(|(i, d)| d * t.powi(i as i32 + 1))
            .sum();
        -self.c0 * (big.ln() - 0.5 * series)
    }

    /// Per-`s` integrand of the five transfer components, with the second
    /// slot holding `V` on the inner branch and `V/rho` on the outer one.
    fn integrand(&self, rho: f64, s: f64, inner: bool) -> [f64; 5] {
        let mut out = [0.0; 5];
        if inner {
            let t = (s / rho).powi(2);
            let mut tk = 1.0;
            let mut log_series = 0.0;
            let mut v_series = 1.0;
            for (i, d) in self.d.iter().enumerate() {
                tk *= t;
                let k = (i + 1) as f64;
                log_series += d * tk;
                v_series += k * d * tk;
            }
            out[0] = -self.c0 * (rho.ln() - 0.5 * log_series);
            out[1] = -self.c0 * v_series / rho;
            let rho2 = rho * rho;
            let (mut l, mut m) = (0.0, 0.0);
            let mut tk = 1.0;
            for (k, c) in self.c1.iter().enumerate() {
                l += c * tk;
                m += c * (-2.0 - 2.0 * k as f64) * tk;
                tk *= t;
            }
            out[2] = self.kappa1 * l / rho2;
            out[3] = self.kappa1 * m / (rho2 * rho);
            let mut p = 0.0;
            let mut tk = 1.0;
            for c in &self.c2 {
                p += c * tk;
                tk *= t;
            }
            out[4] = self.kappa2 * p / (rho2 * rho2);
        } else {
            let q = rho / s;
            let t = q * q;
            let mut log_series = 0.0;
            let mut v_series = 0.0;
            let mut tk = 1.0;
            for (i, d) in self.d.iter().enumerate() {
                let k = (i + 1) as f64;
                v_series += k * d * tk;
                tk *= t;
                log_series += d * tk;
            }
            let s2 = s * s;
            out[0] = -self.c0 * (s.ln() - 0.5 * log_series);
            out[1] = self.c0 * v_series / s2;
            let (mut l, mut m) = (0.0, 0.0);
            let mut tk = 1.0;
            let mut odd = q;
            for (k, c) in self.c1.iter().enumerate() {
                l += c * tk;
                if k >= 1 {
                    m += 2.0 * k as f64 * c * odd;
                    odd *= t;
                }
                tk *= t;
            }
            out[2] = self.kappa1 * l / s2;
            out[3] = self.kappa1 * m / (s2 * s);
            let mut p = 0.0;
            let mut tk = 1.0;
            for c in &self.c2 {
                p += c * tk;
                tk *= t;
            }
            out[4] = self.kappa2 * p / (s2 * s2);
        }
        out
    }

    /// Exact transfer of a radial mass distribution with moments `m`
    /// evaluated outside its support.
    fn far_field(&self, rho: f64, m: &[f64]) -> Transfer {
        let mut u = m[0] * rho.ln();
        let mut v = m[0];
        let r2 = rho * rho;
        let mut rk = 1.0;
        for (i, d) in self.d.iter().enumerate() {
            let k = i + 1;
            rk /= r2;
            u -= 0.5 * d * m[k] * rk;
            v += k as f64 * d * m[k] * rk;
        }
        let u = -self.c0 * u;
        let v = -self.c0 * v / rho;
        let (mut lap, mut lap_prime) = (0.0, 0.0);
        let mut rk = 1.0 / r2;
        for (k, c) in self.c1.iter().enumerate() {
            lap += c * m[k] * rk;
            lap_prime += c * m[k] * (-2.0 - 2.0 * k as f64) * rk / rho;
            rk /= r2;
        }
        let mut bilap = 0.0;
        let mut rk = 1.0 / (r2 * r2);
        for (k, c) in self.c2.iter().enumerate() {
            bilap += c * m[k] * rk;
            rk /= r2;
        }
        Transfer {
            u,
            v,
            v_over_rho: v / rho,
            lap: self.kappa1 * lap,
            lap_prime: self.kappa1 * lap_prime,
            bilap: self.kappa2 * bilap,
        }
    }
}

#[derive(Debug, Clone)]
enum BumpTransfer {
    Radial {
        profile: Profile,
        scale: f64,
        weight: f64,
        far_radius: f64,
        moments: Vec<f64>,
    },
    Sphere,
    Zero,
}

/// Outcome of a near-field evaluation.
struct NearField {
    transfer: Transfer,
    converged: bool,
}

impl BumpTransfer {
    fn eval(&self, k: &Kernels, rho: f64, tol: Tolerance) -> NearField {
        match self {
            BumpTransfer::Zero => NearField {
                transfer: Transfer::default(),
                converged: true,
            },
            BumpTransfer::Sphere => NearField {
                transfer: sphere_transfer(k.n, rho),
                converged: true,
            },
            BumpTransfer::Radial {
                profile,
                scale,
                weight,
                far_radius,
                moments,
            } => {
                let (mut t, converged) = if rho >= *far_radius {
                    (k.far_field(rho, moments), true)
                } else {
                    radial_near(k, *profile, *scale, *far_radius, rho, tol)
                };
                t.u *= weight;
                t.v *= weight;
                t.v_over_rho *= weight;
                t.lap *= weight;
                t.lap_prime *= weight;
                t.bilap *= weight;
                NearField {
                    transfer: t,
                    converged,
                }
            }
        }
    }

    fn eval_u(&self, k: &Kernels, rho: f64, tol: Tolerance) -> f64 {
        match self {
            BumpTransfer::Zero => 0.0,
            BumpTransfer::Sphere => -(1.0 + rho * rho).ln(),
            BumpTransfer::Radial {
                profile,
                scale,
                weight,
                far_radius,
                moments,
            } => {
                if rho >= *far_radius {
                    return weight * k.far_field(rho, moments).u;
                }
                let n = k.n;
                let omega = sphere_area(n - 1);
                let w = |s: f64| omega * crate::density::profile_value(*profile, n, *scale, s) * s.powi(n as i32 - 1);
                let inner = integrate_vec(|s| [w(s) * k.mean_log(rho, s)], 0.0, rho, tol);
                let outer = integrate_vec(|s| [w(s) * k.mean_log(rho, s)], rho, *far_radius, tol);
                weight * (inner.value[0] + outer.value[0])
            }
        }
    }
}

fn radial_near(
    k: &Kernels,
    profile: Profile,
    scale: f64,
    far_radius: f64,
    rho: f64,
    tol: Tolerance,
) -> (Transfer, bool) {
    let n = k.n;
    let omega = sphere_area(n - 1);
    let weight = |s: f64| omega * crate::density::profile_value(profile, n, scale, s) * s.powi(n as i32 - 1);
    let integrand = |s: f64, inner: bool| {
        let w = weight(s);
        let mut v = k.integrand(rho, s, inner);
        for c in &mut v {
            *c *= w;
        }
        v
    };
    let inner = integrate_vec(|s| integrand(s, true), 0.0, rho, tol);
    let outer = integrate_vec(|s| integrand(s, false), rho, far_radius, tol);
    let [iu, iv, il, im, ip] = inner.value;
    let [ou, ov, ol, om, op] = outer.value;
    let (v, v_over_rho) = if rho > 0.0 {
        (iv + rho * ov, iv / rho + ov)
    } else {
        (0.0, ov)
    };
    let t = Transfer {
        u: iu + ou,
        v,
        v_over_rho,
        lap: il + ol,
        lap_prime: im + om,
        bilap: if n >= 6 { ip + op } else { 0.0 },
    };
    (t, inner.converged && outer.converged)
}

/// Closed-form transfer of the sphere density, normalized to `U(0) = 0`.
fn sphere_transfer(n: usize, rho: f64) -> Transfer {
    let nf = n as f64;
    let q = 1.0 + rho * rho;
    let (q2, q3) = (q * q, q * q * q);
    Transfer {
        u: -q.ln(),
        v: -2.0 * rho / q,
        v_over_rho: -2.0 / q,
        lap: -2.0 * (nf - 2.0) / q - 4.0 / q2,
        lap_prime: 4.0 * (nf - 2.0) * rho / q2 + 16.0 * rho / q3,
        bilap: if n >= 6 {
            4.0 * (nf - 2.0) * (nf - 4.0) / q2 + (32.0 * nf - 128.0) / q3 + 96.0 / (q2 * q2)
        } else {
            0.0
        },
    }
}

#[derive(Debug, Clone)]
pub struct PotentialField {
    density: CurvatureDensity,
    quad: QuadConfig,
    kernels: Kernels,
    transfers: Vec<BumpTransfer>,
    kappa: f64,
}

pub fn build_field(density: CurvatureDensity, quad: QuadConfig) -> Result<PotentialField> {
    quad.validate()?;
    let n = density.dimension();
    let kernels = Kernels::new(n, density.c0());
    let mu = n / 2 - 1;
    let transfers: Vec<BumpTransfer> = density
        .bumps()
        .iter()
        .map(|b| {
            if b.weight == 0.0 {
                BumpTransfer::Zero
            } else if b.profile == Profile::Spheredensity {
                BumpTransfer::Sphere
            } else {
                BumpTransfer::Radial {
                    profile: b.profile,
                    scale: b.scale,
                    weight: b.weight,
                    far_radius: b.support_radius(n, FAR_FIELD_TAIL),
                    moments: (0..=mu).map(|k| radial_moment(b.profile, n, b.scale, k)).collect(),
                }
            }
        })
        .collect();
    let tol = quad.tolerance();
    let mut kappa = 0.0;
    for (i, (t, b)) in transfers.iter().zip(density.bumps()).enumerate() {
        // Probe the near field across the bump's support so that a
        // non-convergent configuration fails here rather than silently later.
        if let BumpTransfer::Radial { far_radius, .. } = t {
            for frac in [0.0, 0.1, 0.5, 1.0, 2.0] {
                let rho = (frac * b.scale).min(*far_radius);
                if !t.eval(&kernels, rho, tol).converged {
                    return Err(Error::Quadrature {
                        what: format!("radial transfer at rho={rho}"),
                        bump: i,
                        limit: quad.max_subdivisions,
                    });
                }
            }
        }
        let at_origin = t.eval(&kernels, b.center_norm(), tol);
        if !at_origin.converged {
            return Err(Error::Quadrature {
                what: "kappa".into(),
                bump: i,
                limit: quad.max_subdivisions,
            });
        }
        kappa -= at_origin.transfer.u;
    }
    Ok(PotentialField {
        density,
        quad,
        kernels,
        transfers,
        kappa,
    })
}

impl PotentialField {
    pub fn density(&self) -> &CurvatureDensity {
        &self.density
    }

    pub fn quad(&self) -> &QuadConfig {
        &self.quad
    }

    pub fn dimension(&self) -> usize {
        self.density.dimension()
    }

    pub fn alpha(&self) -> f64 {
        self.density.alpha()
    }

    pub fn c0(&self) -> f64 {
        self.kernels.c0
    }

    /// `c0 * int log|y| f(y) dy`, so that `u(0) = 0`.
    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    fn tol(&self) -> Tolerance {
        self.quad.tolerance()
    }

    pub fn eval_u(&self, x: &[f64]) -> f64 {
        let tol = self.tol();
        let mut u = self.kappa;
        for (t, b) in self.transfers.iter().zip(self.density.bumps()) {
            u += t.eval_u(&self.kernels, distance(x, &b.center), tol);
        }
        u
    }

    pub fn eval_stack(&self, x: &[f64]) -> DerivativeStack {
        let n = self.dimension();
        assert_eq!(x.len(), n, "point dimension mismatch");
        let tol = self.tol();
        let mut st = DerivativeStack::zeros(n);
        st.u = self.kappa;
        let mut e = vec![0.0; n];
        for (t, b) in self.transfers.iter().zip(self.density.bumps()) {
            if matches!(t, BumpTransfer::Zero) {
                continue;
            }
            for i in 0..n {
                e[i] = x[i] - b.center[i];
            }
            let rho = e.iter().map(|v| v * v).sum::<f64>().sqrt();
            let tr = t.eval(&self.kernels, rho, tol).transfer;
            st.u += tr.u;
            st.lap += tr.lap;
            st.bilap += tr.bilap;
            if rho > 0.0 {
                for v in &mut e {
                    *v /= rho;
                }
                let tangential = tr.v_over_rho;
                let radial = tr.lap - (n as f64 - 1.0) * tangential;
                for i in 0..n {
                    st.grad[i] += tr.v * e[i];
                    st.grad_lap[i] += tr.lap_prime * e[i];
                    for j in 0..n {
                        st.hess[i * n + j] += (radial - tangential) * e[i] * e[j];
                    }
                    st.hess[i * n + i] += tangential;
                }
            } else {
                for i in 0..n {
                    st.hess[i * n + i] += tr.lap / n as f64;
                }
            }
        }
        if n == 4 {
            st.bilap = self.density.eval(x);
        }
        st
    }

    /// Transfer of one bump at distance `rho` from its center.
    pub fn bump_transfer(&self, bump: usize, rho: f64) -> Transfer {
        self.transfers[bump]
            .eval(&self.kernels, rho, self.tol())
            .transfer
    }

    /// Radial data `(rho, u, u', lap, lap', bilap)` of a radial field.
    pub fn radial_profile(&self, radii: &[f64]) -> Result<Vec<RadialRow>> {
        if !self.density.is_radial() {
            return Err(Error::contract("radial_profile requires a radial density"));
        }
        Ok(radii
            .iter()
            .map(|&rho| {
                let mut row = RadialRow {
                    rho,
                    u: self.kappa,
                    v: 0.0,
                    lap: 0.0,
                    lap_prime: 0.0,
                    bilap: 0.0,
                };
                for i in 0..self.transfers.len() {
                    let t = self.bump_transfer(i, rho);
                    row.u += t.u;
                    row.v += t.v;
                    row.lap += t.lap;
                    row.lap_prime += t.lap_prime;
                    row.bilap += t.bilap;
                }
                if self.dimension() == 4 {
                    let mut x = vec![0.0; 4];
                    x[0] = rho;
                    row.bilap = self.density.eval(&x);
                }
                row
            })
            .collect())
    }

    /// Per-bump transfer table on `[0, table_rho_max]`, log-spaced away from 0.
    pub fn transfer_table(&self, bump: usize) -> Vec<RadialRow> {
        let m = self.quad.table_nodes;
        let rho_max = self.quad.table_rho_max;
        let rho_min = rho_max * 1e-6;
        let mut radii = vec![0.0];
        for i in 0..m - 1 {
            let t = i as f64 / (m - 2).max(1) as f64;
            radii.push(rho_min * (rho_max / rho_min).powf(t));
        }
        radii
            .into_iter()
            .map(|rho| {
                let t = self.bump_transfer(bump, rho);
                RadialRow {
                    rho,
                    u: t.u,
                    v: t.v,
                    lap: t.lap,
                    lap_prime: t.lap_prime,
                    bilap: t.bilap,
                }
            })
            .collect()
    }
}

pub fn write_table_csv<W: Write>(mut w: W, rows: &[RadialRow]) -> std::io::Result<()> {
    writeln!(w, "rho,U,V,L,M,P")?;
    for r in rows {
        writeln!(
            w,
            "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
            r.rho, r.u, r.v, r.lap, r.lap_prime, r.bilap
        )?;
    }
    Ok(())
}
