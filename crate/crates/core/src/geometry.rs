//! Global geometry of the conformal metric: averages, volumes, distances,
//! geodesic balls and curvature growth integrals.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::curvature::{curvature_from_stack, q4_times_e4u, scalar_times_e2u};
use crate::error::{Error, Result};
use crate::potential::{DerivativeStack, PotentialField};
use crate::quad::{doubling_breakpoints, integrate, Tolerance};
use crate::special::{gauss_legendre_unit, sphere_area};

/// Euclidean radius cap for geodesic inversion.
pub const RHO_CAP: f64 = 1e15;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FieldSelector {
    U,
    /// `e^{k u}`.
    ExpU(f64),
    NegLap,
    GradSq,
    /// `R e^{2u}`.
    ScalarE2u,
    Bilap,
    LapSq,
    /// `Q^(4) e^{4u}`.
    Q4E4u,
    /// `e^{q u} |grad u|^p`.
    WeightedGrad { q: f64, p: f64 },
}

impl FieldSelector {
    /// Whether the selector needs derivatives or just `u`.
    pub fn needs_derivatives(&self) -> bool {
        !matches!(self, FieldSelector::U | FieldSelector::ExpU(_))
    }

    pub fn eval(&self, st: &DerivativeStack) -> f64 {
        match *self {
            FieldSelector::U => st.u,
            FieldSelector::ExpU(k) => (k * st.u).exp(),
            FieldSelector::NegLap => -st.lap,
            FieldSelector::GradSq => st.grad_sq(),
            FieldSelector::ScalarE2u => scalar_times_e2u(st),
            FieldSelector::Bilap => st.bilap,
            FieldSelector::LapSq => st.lap * st.lap,
            FieldSelector::Q4E4u => q4_times_e4u(st),
            FieldSelector::WeightedGrad { q, p } => (q * st.u).exp() * st.grad_sq().powf(p / 2.0),
        }
    }
}

/// Product rule on `S^3` in Hopf coordinates
/// `(sqrt(1-t) e^{i a}, sqrt(t) e^{i b})`; the measure is uniform in
/// `(t, a, b)`, so Gauss–Legendre in `t` and trapezoid in the angles.
#[derive(Debug, Clone)]
pub struct SphereRule {
    pub nodes: Vec<[f64; 4]>,
    pub weights: Vec<f64>,
}

impl SphereRule {
    pub fn hopf(t_nodes: usize, angle_nodes: usize) -> Self {
        let (ts, tw) = gauss_legendre_unit(t_nodes);
        let mut nodes = Vec::with_capacity(t_nodes * angle_nodes * angle_nodes);
        let mut weights = Vec::with_capacity(nodes.capacity());
        let da = 2.0 * PI / angle_nodes as f64;
        for (t, w) in ts.iter().zip(&tw) {
            let (c, s) = ((1.0 - t).sqrt(), t.sqrt());
            for i in 0..angle_nodes {
                let a = da * (i as f64 + 0.5);
                for j in 0..angle_nodes {
                    let b = da * j as f64;
                    nodes.push([c * a.cos(), c * a.sin(), s * b.cos(), s * b.sin()]);
                    weights.push(w / (angle_nodes * angle_nodes) as f64);
                }
            }
        }
        SphereRule { nodes, weights }
    }

    /// Rule sized from the quadrature configuration.
    pub fn for_field(field: &PotentialField) -> Self {
        let m = field.quad().angular_nodes;
        SphereRule::hopf(m / 2, m)
    }

    /// Lighter rule for the shells of a volume integral.
    pub fn for_volume(field: &PotentialField) -> Self {
        let m = field.quad().angular_nodes;
        SphereRule::hopf(m / 4, m / 2)
    }
}

/// Averages of several fields over the Euclidean sphere `|x - center| = r`.
pub fn sphere_averages_at(
    field: &PotentialField,
    selectors: &[FieldSelector],
    center: &[f64],
    r: f64,
    rule: &SphereRule,
) -> Result<Vec<f64>> {
    let n = field.dimension();
    if field.density().is_radial() && center.iter().all(|&c| c == 0.0) {
        let mut x = vec![0.0; n];
        x[0] = r;
        let st = field.eval_stack(&x);
        return Ok(selectors.iter().map(|s| s.eval(&st)).collect());
    }
    if n != 4 {
        return Err(Error::contract(
            "non-radial sphere averages are supported only for n = 4",
        ));
    }
    let full = selectors.iter().any(|s| s.needs_derivatives());
    let sums = rule
        .nodes
        .par_iter()
        .zip(&rule.weights)
        .map(|(w_node, w)| {
            let x: Vec<f64> = (0..4).map(|i| center[i] + r * w_node[i]).collect();
            let st = if full {
                field.eval_stack(&x)
            } else {
                let mut st = DerivativeStack::zeros(4);
                st.u = field.eval_u(&x);
                st
            };
            selectors.iter().map(|s| w * s.eval(&st)).collect::<Vec<f64>>()
        })
        .collect::<Vec<_>>();
    let mut out = vec![0.0; selectors.len()];
    for row in sums {
        for (o, v) in out.iter_mut().zip(row) {
            *o += v;
        }
    }
    Ok(out)
}

pub fn sphere_average(field: &PotentialField, selector: FieldSelector, r: f64) -> Result<f64> {
    if !(r > 0.0) {
        return Err(Error::contract("sphere_average needs r > 0"));
    }
    let origin = vec![0.0; field.dimension()];
    let rule = SphereRule::for_field(field);
    Ok(sphere_averages_at(field, &[selector], &origin, r, &rule)?[0])
}

fn radial_tol() -> Tolerance {
    Tolerance {
        rel: 1e-11,
        abs: 1e-300,
        max_subdivisions: 200,
    }
}

/// `int_0^r g(s) ds` over doubling panels anchored at the bump scale.
fn radial_integral(field: &PotentialField, r: f64, g: impl Fn(f64) -> f64) -> f64 {
    let h = 0.25 * field.density().min_scale();
    let pts = doubling_breakpoints(h, r);
    pts.windows(2)
        .map(|w| integrate(&g, w[0], w[1], radial_tol()).value[0])
        .sum()
}

fn on_axis(n: usize, s: f64) -> Vec<f64> {
    let mut x = vec![0.0; n];
    x[0] = s;
    x
}

/// `V_g(B_r) = int_{B_r} e^{nu}`.
pub fn ball_volume(field: &PotentialField, r: f64) -> Result<f64> {
    let n = field.dimension();
    let omega = sphere_area(n - 1);
    if field.density().is_radial() {
        return Ok(radial_integral(field, r, |s| {
            omega * s.powi(n as i32 - 1) * (n as f64 * field.eval_u(&on_axis(n, s))).exp()
        }));
    }
    ball_volume_at(field, &vec![0.0; n], r, &SphereRule::for_volume(field))
}

/// Volume of `B_r(center)` for `n = 4` by panels of Gauss–Legendre in the radius.
fn ball_volume_at(field: &PotentialField, center: &[f64], r: f64, rule: &SphereRule) -> Result<f64> {
    Ok(cumulative_volumes(field, center, &[r], rule)?[0])
}

/// `V_g(B_r(center))` at each of the increasing radii, sharing the shells.
fn cumulative_volumes(
    field: &PotentialField,
    center: &[f64],
    radii: &[f64],
    rule: &SphereRule,
) -> Result<Vec<f64>> {
    if field.dimension() != 4 {
        return Err(Error::contract("non-radial volumes are supported only for n = 4"));
    }
    let omega = sphere_area(3);
    let (gx, gw) = gauss_legendre_unit(8);
    let h = 0.25 * field.density().min_scale();
    let r_max = radii.last().copied().unwrap_or(0.0);
    let mut pts = doubling_breakpoints(h, r_max);
    pts.extend_from_slice(radii);
    pts.sort_by(f64::total_cmp);
    pts.dedup_by(|a, b| (*a - *b).abs() <= 1e-14 * b.abs());
    let mut out = Vec::with_capacity(radii.len());
    let mut next = radii.iter().peekable();
    let mut total = 0.0;
    for w in pts.windows(2) {
        for (x, wt) in gx.iter().zip(&gw) {
            let s = w[0] + (w[1] - w[0]) * x;
            let avg = sphere_averages_at(field, &[FieldSelector::ExpU(4.0)], center, s, rule)?[0];
            total += (w[1] - w[0]) * wt * omega * s.powi(3) * avg;
        }
        while next.peek().is_some_and(|&&r| (r - w[1]).abs() <= 1e-14 * r) {
            next.next();
            out.push(total);
        }
    }
    while next.next().is_some() {
        out.push(total);
    }
    Ok(out)
}

/// `V_g(dB_r) = int_{dB_r} e^{(n-1)u}`.
pub fn sphere_area_g(field: &PotentialField, r: f64) -> Result<f64> {
    let n = field.dimension();
    let avg = sphere_average(field, FieldSelector::ExpU(n as f64 - 1.0), r)?;
    Ok(sphere_area(n - 1) * r.powi(n as i32 - 1) * avg)
}

/// `n |S^{n-1}|^{1/(n-1)}`, making the flat ratio exactly one.
pub fn iso_constant(n: usize) -> f64 {
    n as f64 * sphere_area(n - 1).powf(1.0 / (n as f64 - 1.0))
}

/// `|S^{n-1}|^{n/(n-1)} / |S^n|` as printed alongside the isoperimetric limit.
pub fn iso_constant_alt(n: usize) -> f64 {
    sphere_area(n - 1).powf(n as f64 / (n as f64 - 1.0)) / sphere_area(n)
}

fn iso_from(n: usize, area: f64, vol: f64, constant: f64) -> f64 {
    area.powf(n as f64 / (n as f64 - 1.0)) / (constant * vol)
}

pub fn isoperimetric_ratio(field: &PotentialField, r: f64) -> Result<f64> {
    let n = field.dimension();
    let area = sphere_area_g(field, r)?;
    let vol = ball_volume(field, r)?;
    Ok(iso_from(n, area, vol, iso_constant(n)))
}

/// `(int_{B_{x,y}} e^{nu})^{1/n}` over the smallest ball containing `x, y`.
pub fn measure_distance(field: &PotentialField, x: &[f64], y: &[f64]) -> Result<f64> {
    let n = field.dimension();
    let d = crate::density::distance(x, y);
    if d == 0.0 {
        return Ok(0.0);
    }
    let mid: Vec<f64> = x.iter().zip(y).map(|(a, b)| 0.5 * (a + b)).collect();
    let r = 0.5 * d;
    let vol = if field.density().is_radial() && mid.iter().all(|&m| m == 0.0) {
        ball_volume(field, r)?
    } else {
        ball_volume_at(field, &mid, r, &SphereRule::hopf(6, 12))?
    };
    Ok(vol.powf(1.0 / n as f64))
}

/// `int_{B_r(center)} e^{4u}` for the doubling diagnostic (`n = 4`).
pub fn ball_measure(field: &PotentialField, center: &[f64], r: f64) -> Result<f64> {
    ball_volume_at(field, center, r, &SphereRule::hopf(6, 12))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Completeness {
    pub complete: bool,
    /// Fitted exponent `a` in `e^{u(s)} ~ s^{-a}`.
    pub decay_exponent: f64,
    /// Total length of a ray when incomplete.
    pub total_length: Option<f64>,
}

/// Cumulative radial distances `d_g(0, rho e_1) = int_0^rho e^u`.
#[derive(Debug, Clone)]
pub struct RadialDistance<'a> {
    field: &'a PotentialField,
    breaks: Vec<f64>,
    cumulative: Vec<f64>,
    completeness: Completeness,
}

impl<'a> RadialDistance<'a> {
    pub fn new(field: &'a PotentialField) -> Result<Self> {
        if !field.density().is_radial() {
            return Err(Error::contract("radial distance requires a radial density"));
        }
        let n = field.dimension();
        let breaks = doubling_breakpoints(0.25 * field.density().min_scale(), RHO_CAP);
        let mut cumulative = vec![0.0];
        let mut acc = 0.0;
        for w in breaks.windows(2) {
            acc += integrate(|s| field.eval_u(&on_axis(n, s)).exp(), w[0], w[1], radial_tol()).value[0];
            cumulative.push(acc);
        }
        let (s1, s2) = (RHO_CAP * 1e-3, RHO_CAP);
        let u1 = field.eval_u(&on_axis(n, s1));
        let u2 = field.eval_u(&on_axis(n, s2));
        let a = -(u2 - u1) / (s2 / s1).ln();
        let complete = a <= 1.0 + 1e-9;
        let total_length = (!complete).then(|| acc + u2.exp() * s2 / (a - 1.0));
        Ok(RadialDistance {
            field,
            breaks,
            cumulative,
            completeness: Completeness {
                complete,
                decay_exponent: a,
                total_length,
            },
        })
    }

    pub fn completeness(&self) -> Completeness {
        self.completeness
    }

    fn e_u(&self, s: f64) -> f64 {
        self.field.eval_u(&on_axis(self.field.dimension(), s)).exp()
    }

    pub fn distance(&self, rho: f64) -> Result<f64> {
        if rho <= 0.0 {
            return Ok(0.0);
        }
        if rho > RHO_CAP {
            return Err(Error::OutOfRange(format!("radius {rho} exceeds {RHO_CAP}")));
        }
        let i = self.breaks.partition_point(|&b| b <= rho) - 1;
        let i = i.min(self.breaks.len() - 2);
        let part = integrate(|s| self.e_u(s), self.breaks[i], rho, radial_tol()).value[0];
        Ok(self.cumulative[i] + part)
    }

    /// Euclidean radius whose geodesic distance from the origin is `r_g`.
    pub fn invert(&self, r_g: f64) -> Result<f64> {
        if r_g <= 0.0 {
            return Ok(0.0);
        }
        if let Some(total) = self.completeness.total_length {
            if r_g >= total {
                return Err(Error::IncompleteMetric {
                    total_length: total,
                    requested: r_g,
                });
            }
        }
        let last = *self.cumulative.last().unwrap();
        if r_g > last {
            return Err(Error::OutOfRange(format!(
                "geodesic radius {r_g} needs a Euclidean radius beyond {RHO_CAP}"
            )));
        }
        let i = self.cumulative.partition_point(|&c| c <= r_g) - 1;
        let i = i.min(self.breaks.len() - 2);
        let (mut lo, mut hi) = (self.breaks[i], self.breaks[i + 1]);
        let base = self.cumulative[i];
        let target = r_g - base;
        // Safeguarded Newton on d(rho) - r_g; d' = e^u > 0.
        let mut rho = 0.5 * (lo + hi);
        for _ in 0..200 {
            let f = integrate(|s| self.e_u(s), self.breaks[i], rho, radial_tol()).value[0] - target;
            if f > 0.0 {
                hi = rho;
            } else {
                lo = rho;
            }
            let step = f / self.e_u(rho);
            let mut next = rho - step;
            if !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
            if (next - rho).abs() <= 1e-13 * rho || hi - lo <= 1e-13 * hi {
                return Ok(next);
            }
            rho = next;
        }
        Ok(rho)
    }
}

pub fn geodesic_distance_radial(field: &PotentialField, rho: f64) -> Result<f64> {
    if !field.density().is_radial() {
        return Err(Error::contract("geodesic_distance_radial requires a radial density"));
    }
    let n = field.dimension();
    let pts = doubling_breakpoints(0.25 * field.density().min_scale(), rho);
    Ok(pts
        .windows(2)
        .map(|w| integrate(|s| field.eval_u(&on_axis(n, s)).exp(), w[0], w[1], radial_tol()).value[0])
        .sum())
}

pub fn geodesic_radius_invert(field: &PotentialField, r_g: f64) -> Result<f64> {
    RadialDistance::new(field)?.invert(r_g)
}

pub fn completeness(field: &PotentialField) -> Result<Completeness> {
    Ok(RadialDistance::new(field)?.completeness())
}

fn check_growth_pair(n: usize, k: usize, p: f64) -> Result<()> {
    if k < 1 || 2 * k > n - 2 {
        return Err(Error::contract(format!("k = {k} outside 1..=(n-2)/2")));
    }
    if k > 2 {
        return Err(Error::contract("Q^(2k) is implemented only for k <= 2"));
    }
    if !(p >= 1.0 && p < (n as f64 - 1.0) / (2.0 * k as f64)) {
        return Err(Error::contract(format!(
            "p = {p} outside [1, (n-1)/(2k)) for k = {k}"
        )));
    }
    Ok(())
}

fn q2k_value(st: &DerivativeStack, k: usize) -> f64 {
    let n = st.dimension() as f64;
    match k {
        1 => (n - 2.0) / (4.0 * (n - 1.0)) * scalar_times_e2u(st) * (-2.0 * st.u).exp(),
        _ => q4_times_e4u(st) * (-4.0 * st.u).exp(),
    }
}

/// `int_0^rho |S^{n-1}| s^{n-1} g(stack(s)) e^{nu(s)} ds` for a radial field.
fn metric_ball_integral(field: &PotentialField, rho: f64, g: impl Fn(&DerivativeStack) -> f64) -> f64 {
    let n = field.dimension();
    let omega = sphere_area(n - 1);
    radial_integral(field, rho, |s| {
        let st = field.eval_stack(&on_axis(n, s));
        omega * s.powi(n as i32 - 1) * (n as f64 * st.u).exp() * g(&st)
    })
}

/// `int_{B^g_{r_g}} |Q^(2k)|^p dmu_g`.
pub fn curvature_growth_integral(field: &PotentialField, k: usize, p: f64, r_g: f64) -> Result<f64> {
    check_growth_pair(field.dimension(), k, p)?;
    let rho = geodesic_radius_invert(field, r_g)?;
    Ok(metric_ball_integral(field, rho, |st| q2k_value(st, k).abs().powf(p)))
}

/// `int_{B^g_{r_g}} sigma_k(g^{-1} Ric) dmu_g`.
pub fn sigma_growth_integral(field: &PotentialField, k: usize, r_g: f64) -> Result<f64> {
    let n = field.dimension();
    if k < 1 || 2 * k > n - 2 {
        return Err(Error::contract(format!("k = {k} outside 1..=(n-2)/2")));
    }
    let rho = geodesic_radius_invert(field, r_g)?;
    Ok(sigma_integral_to(field, k, rho))
}

fn sigma_integral_to(field: &PotentialField, k: usize, rho: f64) -> f64 {
    let alpha = field.alpha();
    metric_ball_integral(field, rho, |st| {
        curvature_from_stack(st.clone(), alpha, 0.0).sigma[k - 1]
    })
}

/// `(k, p)` pairs reported for `Q^(2k)` growth in dimension `n`.
pub fn growth_pairs(n: usize) -> Vec<(usize, usize)> {
    (1..=((n - 2) / 2).min(2)).map(|k| (k, 1)).collect()
}

pub fn sigma_orders(n: usize) -> Vec<usize> {
    (1..=(n - 2) / 2).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct RadialSweepRow {
    pub r: f64,
    pub ubar: f64,
    /// `avg(e^{nu}) / e^{n ubar}`.
    pub e_ku_avg: f64,
    pub r2_neglap: f64,
    pub r2_gradsq: f64,
    pub r2_r_e2u: f64,
    pub r4_bilap: Option<f64>,
    pub r4_lapsq: Option<f64>,
    pub r4_q4e4u: Option<f64>,
    pub vol_g: f64,
    pub area_g: f64,
    pub iso_ratio: f64,
    pub iso_ratio_cn_alt: f64,
    /// `None` when undefined (non-radial), `NaN` when truncated.
    pub dist_g: Option<f64>,
    pub growth_q2k: Vec<((usize, usize), Option<f64>)>,
    pub growth_sigma: Vec<(usize, Option<f64>)>,
}

#[derive(Debug, Clone, Default)]
pub struct SweepOutcome {
    pub rows: Vec<RadialSweepRow>,
    pub warnings: Vec<String>,
}

/// One row per radius; geodesic columns are `NaN` past an incomplete end.
pub fn radial_sweep(field: &PotentialField, radii: &[f64]) -> Result<SweepOutcome> {
    if radii.windows(2).any(|w| !(w[1] > w[0])) || radii.iter().any(|&r| !(r > 0.0)) {
        return Err(Error::contract("sweep radii must be positive and strictly increasing"));
    }
    let n = field.dimension();
    let radial = field.density().is_radial();
    let distance = if radial { Some(RadialDistance::new(field)?) } else { None };
    let rule = SphereRule::for_field(field);
    let origin = vec![0.0; n];
    let volumes = if radial {
        None
    } else {
        Some(cumulative_volumes(field, &origin, radii, &SphereRule::for_volume(field))?)
    };
    let selectors = [
        FieldSelector::U,
        FieldSelector::ExpU(n as f64),
        FieldSelector::NegLap,
        FieldSelector::GradSq,
        FieldSelector::ScalarE2u,
        FieldSelector::Bilap,
        FieldSelector::LapSq,
        FieldSelector::Q4E4u,
        FieldSelector::ExpU(n as f64 - 1.0),
    ];
    let rows: Vec<Result<(RadialSweepRow, Vec<String>)>> = radii
        .par_iter()
        .enumerate()
        .map(|(i, &r)| {
            let avg = sphere_averages_at(field, &selectors, &origin, r, &rule)?;
            let mut warnings = Vec::new();
            let ubar = avg[0];
            let vol = match &volumes {
                Some(v) => v[i],
                None => ball_volume(field, r)?,
            };
            let area = sphere_area(n - 1) * r.powi(n as i32 - 1) * avg[8];
            let r2 = r * r;
            let r4 = r2 * r2;
            let six = n >= 6;
            let mut growth_q2k = Vec::new();
            let mut growth_sigma = Vec::new();
            let dist = if let Some(dist) = &distance {
                let d = dist.distance(r)?;
                let rho = match dist.invert(r) {
                    Ok(rho) => Some(rho),
                    Err(e @ (Error::IncompleteMetric { .. } | Error::OutOfRange(_))) => {
                        warnings.push(format!("r={r}: geodesic columns truncated: {e}"));
                        None
                    }
                    Err(e) => return Err(e),
                };
                for (k, p) in growth_pairs(n) {
                    let v = rho.map_or(f64::NAN, |rho| {
                        metric_ball_integral(field, rho, |st| q2k_value(st, k).abs().powi(p as i32))
                    });
                    growth_q2k.push(((k, p), Some(v)));
                }
                for k in sigma_orders(n) {
                    let v = rho.map_or(f64::NAN, |rho| sigma_integral_to(field, k, rho));
                    growth_sigma.push((k, Some(v)));
                }
                Some(d)
            } else {
                growth_q2k = growth_pairs(n).into_iter().map(|kp| (kp, None)).collect();
                growth_sigma = sigma_orders(n).into_iter().map(|k| (k, None)).collect();
                None
            };
            Ok((
                RadialSweepRow {
                    r,
                    ubar,
                    e_ku_avg: avg[1] / (n as f64 * ubar).exp(),
                    r2_neglap: r2 * avg[2],
                    r2_gradsq: r2 * avg[3],
                    r2_r_e2u: r2 * avg[4],
                    r4_bilap: six.then(|| r4 * avg[5]),
                    r4_lapsq: six.then(|| r4 * avg[6]),
                    r4_q4e4u: six.then(|| r4 * avg[7]),
                    vol_g: vol,
                    area_g: area,
                    iso_ratio: iso_from(n, area, vol, iso_constant(n)),
                    iso_ratio_cn_alt: iso_from(n, area, vol, iso_constant_alt(n)),
                    dist_g: dist,
                    growth_q2k,
                    growth_sigma,
                },
                warnings,
            ))
        })
        .collect();
    let mut out = SweepOutcome::default();
    for row in rows {
        let (row, w) = row?;
        out.rows.push(row);
        out.warnings.extend(w);
    }
    Ok(out)
}

/// Geometric radii `r_start * q^i`, `i = 0..count`.
pub fn geometric_radii(r_start: f64, r_stop: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![r_start];
    }
    let ratio = (r_stop / r_start).ln() / (count - 1) as f64;
    (0..count)
        .map(|i| {
            if i == count - 1 {
                r_stop
            } else {
                r_start * (ratio * i as f64).exp()
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hopf_rule_integrates_low_degree_polynomials() {
        let rule = SphereRule::hopf(8, 16);
        let total: f64 = rule.weights.iter().sum();
        assert!((total - 1.0).abs() < 1e-14);
        // E[x1^2] = 1/4, E[x1^2 x3^2] = 1/24 on S^3.
        let m2: f64 = rule.nodes.iter().zip(&rule.weights).map(|(p, w)| w * p[0] * p[0]).sum();
        let m22: f64 = rule
            .nodes
            .iter()
            .zip(&rule.weights)
            .map(|(p, w)| w * p[0] * p[0] * p[2] * p[2])
            .sum();
        assert!((m2 - 0.25).abs() < 1e-14);
        assert!((m22 - 1.0 / 24.0).abs() < 1e-14);
    }

    #[test]
    fn flat_iso_constant() {
        for n in [4, 6, 8] {
            let area = sphere_area(n - 1);
            let vol = area / n as f64;
            assert!((iso_from(n, area, vol, iso_constant(n)) - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn geometric_radii_endpoints() {
        let r = geometric_radii(1.0, 1e4, 41);
        assert_eq!(r[0], 1.0);
        assert_eq!(r[40], 1e4);
        assert!((r[10] - 10.0).abs() < 1e-12);
    }
}
