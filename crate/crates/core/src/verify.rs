//! Named numerical checks over sweeps and point samples.
//!
//! Every check is a pure function of the field and [`VerifySettings`]; the
//! report list is sorted by check id so parallel execution cannot reorder it.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::sync::OnceLock;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::curvature::{
    b_doubleint, b_identity, curvature_from_stack, h_doubleint, h_identity, q4_term_scale,
    structure_inequalities, MonteCarlo,
};
use crate::density::unit_vector;
use crate::error::{Error, Result};
use crate::extrapolate::{limit_extrapolate_with, loglog_slope, Extrapolation, LimitModel};
use crate::geometry::{
    ball_measure, completeness, geometric_radii, growth_pairs, measure_distance, radial_sweep,
    sigma_orders, sphere_average, sphere_averages_at, FieldSelector, RadialDistance,
    RadialSweepRow, SphereRule, SweepOutcome,
};
use crate::grid::{lattice_stretch, DistanceGrid, GridConfig};
use crate::oracle::pde_residual;
use crate::potential::PotentialField;
use crate::quad::{integrate, Tolerance};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Exploratory,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Predicted {
    Limit(f64),
    AtMost(f64),
    AtLeast(f64),
    Within([f64; 2]),
    Statement(String),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckReport {
    pub check_id: String,
    pub scenario_id: String,
    pub samples: Vec<(f64, f64)>,
    pub predicted: Predicted,
    pub deviation: f64,
    pub tolerance: f64,
    pub status: Status,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
    pub details: BTreeMap<String, Value>,
    /// Wall time; off by default so reports stay byte-identical across runs.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub runtime_ms: Option<u64>,
}

#[derive(Debug, Clone)]
pub struct VerifySettings {
    pub scenario_id: String,
    /// Sweep radii shared by all sweep-based checks.
    pub radii: Vec<f64>,
    pub seed: u64,
    pub grid: Option<GridConfig>,
    /// Per-check tolerance overrides.
    pub tolerances: BTreeMap<String, f64>,
    pub timings: bool,
}

impl Default for VerifySettings {
    fn default() -> Self {
        VerifySettings {
            scenario_id: String::new(),
            radii: geometric_radii(1.0, 1e4, 41),
            seed: 0,
            grid: None,
            tolerances: BTreeMap::new(),
            timings: false,
        }
    }
}

type CheckFn = fn(&Ctx) -> Result<Outcome>;
type GateFn = fn(&Ctx) -> Option<Gate>;

/// Unmet hypothesis. `compute` keeps the numbers as an exploratory record.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Gate {
    pub reason: &'static str,
    pub compute: bool,
}

const fn skip(reason: &'static str) -> Option<Gate> {
    Some(Gate { reason, compute: false })
}

const fn explore(reason: &'static str) -> Option<Gate> {
    Some(Gate { reason, compute: true })
}

struct Check {
    id: &'static str,
    tolerance: f64,
    gate: GateFn,
    run: CheckFn,
}

macro_rules! check {
    ($id:literal, $tol:expr, $gate:expr, $run:expr) => {
        Check { id: $id, tolerance: $tol, gate: $gate, run: $run }
    };
}

const REGISTRY: &[Check] = &[
    check!("ALPHA1_BOUNDARY", 1.0, |c| {
        if (c.alpha() - 1.0).abs() > 1e-9 {
            skip("alpha_not_one")
        } else if !c.radial() {
            skip("non_radial")
        } else {
            None
        }
    }, alpha1_boundary),
    check!("BOUND_Q4LIMINF", 0.03, |c| {
        if c.n() < 6 {
            skip("dimension_below_6")
        } else if !c.nonneg() {
            explore("signed_density")
        } else {
            None
        }
    }, bound_q4_liminf),
    check!("B_CONSISTENCY", 3.0, |c| if c.nonneg() { None } else { skip("signed_density") }, b_consistency),
    check!("CV_BOUND", 0.5, |c| {
        if !c.radial() {
            skip("non_radial")
        } else if !c.nonneg() {
            skip("signed_density")
        } else {
            None
        }
    }, cv_bound),
    check!("DOUBLING", f64::INFINITY, |c| {
        if c.n() != 4 {
            skip("ball_measure_requires_n4")
        } else {
            explore("existence_of_constants_only")
        }
    }, doubling),
    check!("EXPAVG", 0.05, sphere_gate, expavg),
    check!("GAP_CONSISTENCY", 0.1, |c| {
        let a = c.alpha();
        growth_gate(c).or_else(|| {
            if a > 0.0 && a < 1.0 {
                None
            } else {
                skip("alpha_outside_open_unit_interval")
            }
        })
    }, gap_consistency),
    check!("H_CONSISTENCY", 3.0, |c| {
        if c.n() < 6 {
            skip("dimension_below_6")
        } else if !c.nonneg() {
            skip("signed_density")
        } else {
            None
        }
    }, h_consistency),
    check!("INEQ_STRUCT", 1e-8, |c| {
        if c.n() < 6 {
            skip("dimension_below_6")
        } else if !c.nonneg() {
            skip("signed_density")
        } else {
            None
        }
    }, ineq_struct),
    check!("KERNEL_MEANVALUE", 1e-6, |_| None, kernel_meanvalue),
    check!("KERNEL_RIESZ", 1e-6, |_| None, kernel_riesz),
    check!("LIMIT_DISTEXP", 0.05, |c| {
        if !c.radial() {
            skip("non_radial")
        } else if !c.nonneg() {
            skip("signed_density")
        } else {
            None
        }
    }, limit_distexp),
    check!("LIMIT_ISO", 0.05, |c| {
        if !c.nonneg() {
            explore("signed_density")
        } else if c.alpha() > 1.0 + 1e-12 {
            explore("alpha_above_one")
        } else {
            None
        }
    }, limit_iso),
    check!("LIMIT_R2GRAD", 0.02, |_| None, limit_r2grad),
    check!("LIMIT_R2LAP", 0.02, |_| None, limit_r2lap),
    check!("LIMIT_R2SCAL", 0.03, |_| None, limit_r2scal),
    check!("LIMIT_R4BILAP", 0.02, six_gate, limit_r4bilap),
    check!("LIMIT_R4LAPSQ", 0.02, six_gate, limit_r4lapsq),
    check!("LIMIT_UBAR", 0.1, |_| None, limit_ubar),
    check!("PDE_RESIDUAL", 1e-3, |_| None, pde_residual_check),
    check!("POS_Q2", 1e-8, |c| positivity_gate(c, 1.0), pos_q2),
    check!("POS_Q4", 1e-8, |c| six_gate(c).or_else(|| positivity_gate(c, 1.0)), pos_q4),
    check!("POS_RIC", 1e-8, |c| positivity_gate(c, 2.0), pos_ric),
    check!("SEMMES", f64::INFINITY, |c| {
        if c.n() != 4 {
            skip("grid_requires_n4")
        } else if c.settings.grid.is_none() {
            skip("no_grid_configured")
        } else {
            explore("existence_of_constants_only")
        }
    }, semmes),
    check!("SLOPE_Q2K", 0.1, growth_gate, slope_q2k),
    check!("SLOPE_SIGMA", 0.1, growth_gate, slope_sigma),
    check!("UBAR_UPPER", 0.05, |c| if c.nonneg() { None } else { explore("signed_density") }, ubar_upper),
    check!("U_LOWER", 0.05, |c| sphere_gate(c).or_else(|| positivity_gate(c, 2.0)), u_lower),
    check!("WEIGHTED_DERIV", 0.1, sphere_gate, weighted_deriv),
];

fn six_gate(c: &Ctx) -> Option<Gate> {
    if c.n() < 6 {
        skip("dimension_below_6")
    } else {
        None
    }
}

/// Sphere averages of non-radial fields exist only for `n = 4`.
fn sphere_gate(c: &Ctx) -> Option<Gate> {
    if !c.radial() && c.n() != 4 {
        skip("non_radial_sphere_average_unsupported")
    } else {
        None
    }
}

fn growth_gate(c: &Ctx) -> Option<Gate> {
    if !c.radial() {
        skip("non_radial")
    } else if !c.nonneg() {
        skip("signed_density")
    } else if c.alpha() > 1.0 + 1e-12 {
        skip("incomplete_metric")
    } else {
        None
    }
}

fn positivity_gate(c: &Ctx, alpha_max: f64) -> Option<Gate> {
    if !c.nonneg() {
        explore("signed_density")
    } else if c.alpha() > alpha_max + 1e-12 {
        explore(if alpha_max == 1.0 { "alpha_above_one" } else { "alpha_above_two" })
    } else {
        None
    }
}

/// All check ids, sorted.
pub fn check_ids() -> Vec<&'static str> {
    REGISTRY.iter().map(|c| c.id).collect()
}

pub fn default_tolerance(id: &str) -> Option<f64> {
    REGISTRY.iter().find(|c| c.id == id).map(|c| c.tolerance)
}

/// Static hypothesis screen per check: `None` when the check applies.
pub fn applicability(field: &PotentialField, settings: &VerifySettings) -> Vec<(&'static str, Option<Gate>)> {
    let ctx = Ctx {
        field,
        settings,
        sweep: OnceLock::new(),
    };
    REGISTRY.iter().map(|c| (c.id, (c.gate)(&ctx))).collect()
}

/// Expands `"all"` and validates ids; the result is sorted and deduplicated.
pub fn resolve_selection<S: AsRef<str>>(selection: &[S]) -> Result<Vec<&'static str>> {
    let mut out = Vec::new();
    for s in selection {
        let s = s.as_ref().trim();
        if s.eq_ignore_ascii_case("all") {
            out.extend(check_ids());
            continue;
        }
        match REGISTRY.iter().find(|c| c.id == s) {
            Some(c) => out.push(c.id),
            None => return Err(Error::config(format!("unknown check id `{s}`"))),
        }
    }
    out.sort_unstable();
    out.dedup();
    Ok(out)
}

pub fn run_checks<S: AsRef<str>>(
    field: &PotentialField,
    selection: &[S],
    settings: &VerifySettings,
) -> Result<Vec<CheckReport>> {
    let ids = resolve_selection(selection)?;
    for (k, v) in &settings.tolerances {
        if default_tolerance(k).is_none() {
            return Err(Error::config(format!("tolerance given for unknown check id `{k}`")));
        }
        if !(*v >= 0.0) {
            return Err(Error::config(format!("tolerance for {k} must be nonnegative")));
        }
    }
    let ctx = Ctx {
        field,
        settings,
        sweep: OnceLock::new(),
    };
    let mut reports: Vec<CheckReport> = ids
        .par_iter()
        .map(|id| {
            let check = REGISTRY.iter().find(|c| c.id == *id).unwrap();
            let tol = settings.tolerances.get(*id).copied().unwrap_or(check.tolerance);
            let start = Instant::now();
            let gate = (check.gate)(&ctx);
            let outcome = match gate {
                Some(Gate { reason, compute: false }) => {
                    Outcome::skipped(reason, Predicted::Statement("not evaluated".into()))
                }
                _ => {
                    let o = (check.run)(&ctx).unwrap_or_else(|e| Outcome::failed(e.to_string()));
                    o.unless(gate.map(|g| g.reason))
                }
            };
            let runtime = start.elapsed().as_millis() as u64;
            outcome.into_report(id, settings, tol, settings.timings.then_some(runtime))
        })
        .collect();
    reports.sort_by(|a, b| a.check_id.cmp(&b.check_id));
    Ok(reports)
}

pub fn summary_line(reports: &[CheckReport]) -> String {
    let passed = reports.iter().filter(|r| r.status == Status::Pass).count();
    let failed = reports.iter().filter(|r| r.status == Status::Fail).count();
    let explored = reports.len() - passed - failed;
    format!("PASS {passed}/{} (fail {failed}, exploratory {explored})", reports.len())
}

struct Ctx<'a> {
    field: &'a PotentialField,
    settings: &'a VerifySettings,
    sweep: OnceLock<std::result::Result<SweepOutcome, String>>,
}

impl Ctx<'_> {
    fn sweep(&self) -> Result<&[RadialSweepRow]> {
        let s = self
            .sweep
            .get_or_init(|| radial_sweep(self.field, &self.settings.radii).map_err(|e| e.to_string()));
        match s {
            Ok(s) => Ok(&s.rows),
            Err(e) => Err(Error::contract(format!("sweep failed: {e}"))),
        }
    }

    fn n(&self) -> usize {
        self.field.dimension()
    }

    fn alpha(&self) -> f64 {
        self.field.alpha()
    }

    fn radial(&self) -> bool {
        self.field.density().is_radial()
    }

    fn nonneg(&self) -> bool {
        self.field.density().is_nonnegative()
    }

    /// Generator private to one check.
    fn rng(&self, check: &str) -> ChaCha20Rng {
        let mut rng = ChaCha20Rng::seed_from_u64(self.settings.seed);
        let stream = check.bytes().fold(0xcbf29ce484222325u64, |h, b| {
            (h ^ b as u64).wrapping_mul(0x100000001b3)
        });
        rng.set_stream(stream);
        rng
    }
}

struct Outcome {
    samples: Vec<(f64, f64)>,
    predicted: Predicted,
    deviation: f64,
    /// Hypotheses unmet: reported exploratory with this reason code.
    skip: Option<String>,
    /// Fails regardless of the deviation.
    forced_fail: Option<String>,
    details: BTreeMap<String, Value>,
}

impl Outcome {
    fn new(samples: Vec<(f64, f64)>, predicted: Predicted, deviation: f64) -> Self {
        Outcome {
            samples,
            predicted,
            deviation,
            skip: None,
            forced_fail: None,
            details: BTreeMap::new(),
        }
    }

    fn skipped(reason: &str, predicted: Predicted) -> Self {
        let mut o = Outcome::new(Vec::new(), predicted, f64::NAN);
        o.skip = Some(reason.to_string());
        o
    }

    fn failed(reason: String) -> Self {
        let mut o = Outcome::new(Vec::new(), Predicted::Statement(String::new()), f64::NAN);
        o.forced_fail = Some(reason);
        o
    }

    fn detail(mut self, key: &str, value: Value) -> Self {
        self.details.insert(key.to_string(), value);
        self
    }

    /// Keeps the computed values but marks the hypotheses as unmet.
    fn unless(mut self, reason: Option<&str>) -> Self {
        if let Some(r) = reason {
            self.skip = Some(r.to_string());
        }
        self
    }

    fn into_report(self, id: &str, settings: &VerifySettings, tol: f64, runtime: Option<u64>) -> CheckReport {
        let (status, reason) = if let Some(r) = self.skip {
            (Status::Exploratory, Some(r))
        } else if let Some(r) = self.forced_fail {
            (Status::Fail, Some(r))
        } else if self.deviation <= tol {
            (Status::Pass, None)
        } else {
            (Status::Fail, None)
        };
        CheckReport {
            check_id: id.to_string(),
            scenario_id: settings.scenario_id.clone(),
            samples: self.samples,
            predicted: self.predicted,
            deviation: self.deviation,
            tolerance: tol,
            status,
            reason,
            details: self.details,
            runtime_ms: runtime,
        }
    }
}

fn limit_deviation(estimate: f64, predicted: f64) -> f64 {
    (estimate - predicted).abs() / predicted.abs().max(1.0)
}

fn extrapolation_details(o: Outcome, e: &Extrapolation) -> Outcome {
    o.detail("estimate", json!(e.estimate))
        .detail("order", json!(e.order))
        .detail("model", json!(e.model))
        .detail("last_value", json!(e.last_value))
}

/// Sweep samples `(r, f(row))` for `r >= r_min`.
fn sweep_samples(
    rows: &[RadialSweepRow],
    r_min: f64,
    f: impl Fn(&RadialSweepRow) -> Option<f64>,
) -> Vec<(f64, f64)> {
    rows.iter()
        .filter(|row| row.r >= r_min)
        .filter_map(|row| f(row).map(|v| (row.r, v)))
        .collect()
}

fn limit_check(
    ctx: &Ctx,
    r_min: f64,
    model: LimitModel,
    predicted: f64,
    f: impl Fn(&RadialSweepRow) -> Option<f64>,
) -> Result<Outcome> {
    let samples = sweep_samples(ctx.sweep()?, r_min, f);
    if samples.iter().any(|s| !s.1.is_finite()) {
        return Ok(Outcome::skipped("non_finite_samples", Predicted::Limit(predicted)));
    }
    let e = limit_extrapolate_with(&samples, model)?;
    let o = Outcome::new(samples, Predicted::Limit(predicted), limit_deviation(e.estimate, predicted));
    Ok(extrapolation_details(o, &e))
}

// ---------------------------------------------------------------- limits

fn limit_ubar(ctx: &Ctx) -> Result<Outcome> {
    // Logarithmic convergence: the last value is the estimate.
    limit_check(ctx, 10.0, LimitModel::LastValue, -ctx.alpha(), |row| Some(row.ubar / row.r.ln()))
}

fn limit_r2lap(ctx: &Ctx) -> Result<Outcome> {
    let p = (ctx.n() as f64 - 2.0) * ctx.alpha();
    limit_check(ctx, 100.0, LimitModel::PowerLaw, p, |row| Some(row.r2_neglap))
}

fn limit_r2grad(ctx: &Ctx) -> Result<Outcome> {
    let a = ctx.alpha();
    limit_check(ctx, 100.0, LimitModel::PowerLaw, a * a, |row| Some(row.r2_gradsq))
}

fn limit_r2scal(ctx: &Ctx) -> Result<Outcome> {
    let n = ctx.n() as f64;
    let a = ctx.alpha();
    let p = (n - 1.0) * (n - 2.0) * a * (2.0 - a);
    limit_check(ctx, 100.0, LimitModel::PowerLaw, p, |row| Some(row.r2_r_e2u))
}

fn limit_r4bilap(ctx: &Ctx) -> Result<Outcome> {
    let n = ctx.n() as f64;
    let p = 2.0 * (n - 2.0) * (n - 4.0) * ctx.alpha();
    limit_check(ctx, 100.0, LimitModel::PowerLaw, p, |row| row.r4_bilap)
}

fn limit_r4lapsq(ctx: &Ctx) -> Result<Outcome> {
    let n = ctx.n() as f64;
    let a = ctx.alpha();
    let p = (n - 2.0) * (n - 2.0) * a * a;
    limit_check(ctx, 100.0, LimitModel::PowerLaw, p, |row| row.r4_lapsq)
}

fn bound_q4_liminf(ctx: &Ctx) -> Result<Outcome> {
    let n = ctx.n() as f64;
    let a = ctx.alpha();
    let bound = (n - 4.0).powi(4) / 16.0
        * (2.0 - a)
        * (2.0 * (n - 2.0) / (n - 4.0) - a)
        * (a + 4.0 / (n - 4.0))
        * a;
    let samples = sweep_samples(ctx.sweep()?, 0.0, |row| row.r4_q4e4u);
    let last = samples.last().map_or(f64::NAN, |s| s.1);
    let deviation = (bound - last).max(0.0) / bound.abs().max(1e-300);
    Ok(Outcome::new(samples, Predicted::AtLeast(bound), deviation)
        .detail("value_at_largest_radius", json!(last)))
}

fn limit_iso(ctx: &Ctx) -> Result<Outcome> {
    let a = ctx.alpha();
    Ok(limit_check(ctx, 10.0, LimitModel::LastValue, 1.0 - a, |row| Some(row.iso_ratio))?
        .detail(
            "alt_constant_last_value",
            json!(ctx.sweep()?.last().map(|r| r.iso_ratio_cn_alt)),
        ))
}

fn limit_distexp(ctx: &Ctx) -> Result<Outcome> {
    let p = (1.0 - ctx.alpha()).max(0.0);
    // The approach is slow near alpha = 1, so sample far beyond the sweep.
    let dist = RadialDistance::new(ctx.field)?;
    let samples: Vec<(f64, f64)> = geometric_radii(1e2, 1e12, 41)
        .into_iter()
        .map(|rho| Ok((rho, dist.distance(rho)?.ln() / rho.ln())))
        .collect::<Result<_>>()?;
    let e = limit_extrapolate_with(&samples, LimitModel::LogRate)?;
    let at_1e4 = dist.distance(1e4)?.ln() / 1e4f64.ln();
    let o = Outcome::new(samples, Predicted::Limit(p), limit_deviation(e.estimate, p))
        .detail("raw_ratio_at_1e4", json!(at_1e4));
    Ok(extrapolation_details(o, &e))
}

fn cv_bound(ctx: &Ctx) -> Result<Outcome> {
    let a = ctx.alpha();
    let predicted = Predicted::Statement("complete iff alpha <= 1".into());
    let c = completeness(ctx.field)?;
    let expected = a <= 1.0 + 1e-12;
    let deviation = if c.complete == expected { 0.0 } else { 1.0 };
    let mut o = Outcome::new(vec![(a, c.decay_exponent)], predicted, deviation)
        .detail("alpha", json!(a))
        .detail("complete", json!(c.complete))
        .detail("decay_exponent", json!(c.decay_exponent))
        .detail("total_length", json!(c.total_length));
    if !(0.0..=1.0).contains(&a) {
        o = o.detail(
            "note",
            json!("alpha outside [0, 1]: a complete metric with these hypotheses cannot exist"),
        );
    }
    Ok(o)
}

// ------------------------------------------------------------ positivity

/// Seeded points with log-uniform radii in `[1e-2, 1e4]` times the bump scale.
fn sample_points(ctx: &Ctx, check: &str, count: usize) -> Vec<Vec<f64>> {
    let mut rng = ctx.rng(check);
    let scale = ctx.field.density().min_scale();
    (0..count)
        .map(|_| {
            let r = scale * 10f64.powf(rng.random_range(-2.0..4.0));
            unit_vector(ctx.n(), &mut rng).into_iter().map(|v| r * v).collect()
        })
        .collect()
}

/// Worst relative negativity over sampled points; `value_and_scale` returns
/// the signed quantity and its natural magnitude.
fn positivity(
    ctx: &Ctx,
    check: &str,
    value_and_scale: impl Fn(&crate::curvature::PointCurvature) -> (f64, f64) + Sync,
) -> Outcome {
    let points = sample_points(ctx, check, 10_000);
    let alpha = ctx.alpha();
    let values: Vec<(f64, f64, f64)> = points
        .par_iter()
        .map(|x| {
            let pc = curvature_from_stack(ctx.field.eval_stack(x), alpha, ctx.field.density().eval(x));
            let (v, s) = value_and_scale(&pc);
            let r = x.iter().map(|c| c * c).sum::<f64>().sqrt();
            let rel = if s > 0.0 { v / s } else { 0.0 };
            (r, v, rel)
        })
        .collect();
    let worst = values.iter().map(|v| v.2).fold(f64::INFINITY, f64::min);
    let min_value = values.iter().map(|v| v.1).fold(f64::INFINITY, f64::min);
    // Report the thirty-two most negative relative values, ordered by radius.
    let mut sorted = values.clone();
    sorted.sort_by(|a, b| a.2.total_cmp(&b.2));
    let mut samples: Vec<(f64, f64)> = sorted.iter().take(32).map(|v| (v.0, v.2)).collect();
    samples.sort_by(|a, b| a.0.total_cmp(&b.0));
    Outcome::new(samples, Predicted::AtLeast(0.0), (-worst).max(0.0))
        .detail("points", json!(values.len()))
        .detail("min_value", json!(min_value))
        .detail("min_relative", json!(worst))
}

fn pos_q2(ctx: &Ctx) -> Result<Outcome> {
    let n = ctx.n() as f64;
    let o = positivity(ctx, "POS_Q2", |pc| {
        let st = &pc.stack;
        let scale = (n - 2.0) / 2.0
            * (st.lap.abs() + 0.5 * (n - 2.0) * st.grad_sq())
            * (-2.0 * st.u).exp();
        (pc.q2, scale)
    });
    Ok(o)
}

fn pos_q4(ctx: &Ctx) -> Result<Outcome> {
    let o = positivity(ctx, "POS_Q4", |pc| {
        let st = &pc.stack;
        (pc.q4.unwrap_or(0.0), q4_term_scale(st) * (-4.0 * st.u).exp())
    });
    Ok(o)
}

fn pos_ric(ctx: &Ctx) -> Result<Outcome> {
    let o = positivity(ctx, "POS_RIC", |pc| {
        let min = pc.ric_eigs.last().copied().unwrap_or(0.0);
        let scale = pc.ric_eigs.iter().fold(0.0f64, |m, e| m.max(e.abs()));
        (min, scale)
    });
    Ok(o)
}

// --------------------------------------------------------------- growth

/// `(label, exponent, k, samples)` over `r_g in [10, 1e3]`.
fn growth_series(ctx: &Ctx) -> Result<Vec<(String, f64, usize, Vec<(f64, f64)>)>> {
    let rows = ctx.sweep()?;
    let n = ctx.n() as f64;
    let window = |row: &&RadialSweepRow| row.r >= 10.0 * (1.0 - 1e-12) && row.r <= 1e3 * (1.0 + 1e-12);
    let mut out = Vec::new();
    for (i, (k, p)) in growth_pairs(ctx.n()).into_iter().enumerate() {
        let samples: Vec<(f64, f64)> = rows
            .iter()
            .filter(window)
            .map(|row| (row.r, row.growth_q2k[i].1.unwrap_or(f64::NAN)))
            .collect();
        out.push((format!("Q2k_{k}_{p}"), n - 2.0 * (k * p) as f64, k, samples));
    }
    for (i, k) in sigma_orders(ctx.n()).into_iter().enumerate() {
        let samples: Vec<(f64, f64)> = rows
            .iter()
            .filter(window)
            .map(|row| (row.r, row.growth_sigma[i].1.unwrap_or(f64::NAN)))
            .collect();
        out.push((format!("sigma_{k}"), n - 2.0 * k as f64, k, samples));
    }
    Ok(out)
}

enum SlopeSide {
    Upper,
    /// Equality when `0 < alpha < 1`, upper bound otherwise.
    UpperOrEqual,
    Lower,
}

fn slope_check(ctx: &Ctx, prefix: &str, side: SlopeSide) -> Result<Outcome> {
    let series: Vec<_> = growth_series(ctx)?
        .into_iter()
        .filter(|s| s.0.starts_with(prefix))
        .collect();
    let predicted = match side {
        SlopeSide::Lower => Predicted::Statement("slope >= n - 2k".into()),
        _ => Predicted::Statement("slope <= n - 2kp".into()),
    };
    if series.iter().any(|s| s.3.len() < 2 || s.3.iter().any(|v| !v.1.is_finite())) {
        return Ok(Outcome::skipped("geodesic_radius_out_of_range", predicted));
    }
    let a = ctx.alpha();
    let interior = a > 0.0 && a < 1.0;
    let mut worst = 0.0f64;
    let mut samples = Vec::new();
    let mut details = BTreeMap::new();
    for (label, exponent, _, s) in &series {
        // The additive offset in r_g biases the lower part of the window.
        let slope = loglog_slope(&s[s.len() / 2..]);
        let dev = match (slope, &side) {
            // Identically zero integrals have no slope and satisfy every bound.
            (None, SlopeSide::Lower) => exponent.max(0.0),
            (None, _) => 0.0,
            (Some(m), SlopeSide::Upper) => (m - exponent).max(0.0),
            (Some(m), SlopeSide::UpperOrEqual) if interior => (m - exponent).abs(),
            (Some(m), SlopeSide::UpperOrEqual) => (m - exponent).max(0.0),
            (Some(m), SlopeSide::Lower) => (exponent - m).max(0.0),
        };
        if dev >= worst || samples.is_empty() {
            worst = worst.max(dev);
            samples = s.clone();
        }
        details.insert(
            label.clone(),
            json!({ "slope": slope, "exponent": exponent, "deviation": dev }),
        );
    }
    let mut o = Outcome::new(samples, predicted, worst);
    o.details = details;
    Ok(o)
}

fn slope_q2k(ctx: &Ctx) -> Result<Outcome> {
    slope_check(ctx, "Q2k", SlopeSide::UpperOrEqual)
}

fn slope_sigma(ctx: &Ctx) -> Result<Outcome> {
    slope_check(ctx, "sigma", SlopeSide::Upper)
}

fn gap_consistency(ctx: &Ctx) -> Result<Outcome> {
    slope_check(ctx, "Q2k", SlopeSide::Lower)
}

fn alpha1_boundary(ctx: &Ctx) -> Result<Outcome> {
    let p = Predicted::Statement("Q2 -> positive constant and iso_ratio -> 0".into());
    let rows = ctx.sweep()?;
    let r_last = rows.last().map_or(1.0, |r| r.r);
    let n = ctx.n();
    let samples: Vec<(f64, f64)> = rows
        .iter()
        .filter(|row| row.r >= r_last / 10.0 * (1.0 - 1e-12))
        .map(|row| {
            let mut x = vec![0.0; n];
            x[0] = row.r;
            let pc = curvature_from_stack(ctx.field.eval_stack(&x), ctx.alpha(), 0.0);
            (row.r, pc.q2)
        })
        .collect();
    let max = samples.iter().map(|s| s.1).fold(f64::NEG_INFINITY, f64::max);
    let min = samples.iter().map(|s| s.1).fold(f64::INFINITY, f64::min);
    let variation = if min > 0.0 { (max - min) / max } else { f64::INFINITY };
    let iso = rows.last().map_or(f64::NAN, |r| r.iso_ratio);
    let deviation = (variation / 0.1).max(iso / 0.05);
    Ok(Outcome::new(samples, p, deviation)
        .detail("q2_relative_variation", json!(variation))
        .detail("q2_min", json!(min))
        .detail("iso_ratio_last", json!(iso)))
}

// -------------------------------------------------------- kernel bounds

fn kernel_tol() -> Tolerance {
    Tolerance {
        rel: 1e-12,
        abs: 1e-15,
        max_subdivisions: 400,
    }
}

/// Mean over `|x| = r` of `|x - y|^{-p}` with `|y| = t`, by the polar angle.
pub fn sphere_mean_inverse_power(n: usize, t: f64, r: f64, p: f64) -> f64 {
    let m = n as i32 - 2;
    let g = |th: f64| {
        let half = (0.5 * th).sin();
        let d2 = (r - t) * (r - t) + 4.0 * r * t * half * half;
        d2.powf(-0.5 * p) * th.sin().powi(m)
    };
    let norm = integrate(|th: f64| th.sin().powi(m), 0.0, PI, kernel_tol()).value[0];
    let singular = p > n as f64 - 2.0 && (t - r).abs() <= 1e-12 * r;
    let num = if singular {
        // theta = pi s^b flattens the theta^{n-2-p} endpoint behaviour.
        let b = 1.0 / (n as f64 - 1.0 - p);
        integrate(
            |s: f64| {
                if s == 0.0 {
                    return 0.0;
                }
                let th = PI * s.powf(b);
                g(th) * PI * b * s.powf(b - 1.0)
            },
            0.0,
            1.0,
            kernel_tol(),
        )
        .value[0]
    } else {
        integrate(g, 0.0, PI, kernel_tol()).value[0]
    };
    num / norm
}

/// Random `(|y|, r, p)` triples; every fifth puts `y` on the sphere.
fn kernel_triples(ctx: &Ctx, check: &str, p_max: f64, open: bool) -> Vec<(f64, f64, f64)> {
    let mut rng = ctx.rng(check);
    (0..50)
        .map(|i| {
            let t = 10f64.powf(rng.random_range(-1.0..1.0));
            let r = if i % 5 == 0 { t } else { 10f64.powf(rng.random_range(-1.0..1.0)) };
            let u: f64 = rng.random();
            let p = if open { p_max * (0.02 + 0.96 * u) } else { p_max * (1.0 - u) };
            (t, r, p)
        })
        .collect()
}

fn kernel_meanvalue(ctx: &Ctx) -> Result<Outcome> {
    let n = ctx.n();
    let triples = kernel_triples(ctx, "KERNEL_MEANVALUE", n as f64 - 2.0, false);
    let values: Vec<f64> = triples
        .par_iter()
        .map(|&(t, r, p)| t.powf(p) * sphere_mean_inverse_power(n, t, r, p))
        .collect();
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let samples = triples.iter().zip(&values).map(|(tr, v)| (tr.2, *v)).collect();
    Ok(Outcome::new(samples, Predicted::AtMost(1.0), (max - 1.0).max(0.0))
        .detail("max_mean", json!(max))
        .detail("triples", json!(triples)))
}

/// Sharp constant for `r^p` times the sphere mean of `|x - y|^{-p}`.
pub fn riesz_constant(n: usize, p: f64) -> f64 {
    if p <= n as f64 - 2.0 {
        1.0
    } else {
        sphere_mean_inverse_power(n, 1.0, 1.0, p)
    }
}

fn kernel_riesz(ctx: &Ctx) -> Result<Outcome> {
    let n = ctx.n();
    let triples = kernel_triples(ctx, "KERNEL_RIESZ", n as f64 - 1.0, true);
    let ratios: Vec<f64> = triples
        .par_iter()
        .map(|&(t, r, p)| r.powf(p) * sphere_mean_inverse_power(n, t, r, p) / riesz_constant(n, p))
        .collect();
    let max = ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let samples = triples.iter().zip(&ratios).map(|(tr, v)| (tr.2, *v)).collect();
    Ok(Outcome::new(samples, Predicted::AtMost(1.0), (max - 1.0).max(0.0))
        .detail("max_ratio_to_constant", json!(max))
        .detail("triples", json!(triples)))
}

fn expavg(ctx: &Ctx) -> Result<Outcome> {
    let predicted = Predicted::Within([1.0, 1.05]);
    let r = 1e3;
    let n = ctx.n() as f64;
    let ks = [1.0, 2.0, n];
    let ubar = sphere_average(ctx.field, FieldSelector::U, r)?;
    let mut samples = Vec::new();
    let mut worst = 0.0f64;
    let mut min_ratio = f64::INFINITY;
    for k in ks {
        let ratio = sphere_average(ctx.field, FieldSelector::ExpU(k), r)? / (k * ubar).exp();
        samples.push((k, ratio));
        worst = worst.max((ratio - 1.0).abs());
        min_ratio = min_ratio.min(ratio);
    }
    let mut o = Outcome::new(samples, predicted, worst)
        .detail("radius", json!(r))
        .detail("min_ratio", json!(min_ratio));
    if min_ratio < 1.0 - 1e-12 {
        o.forced_fail = Some("ratio_below_one".into());
    }
    Ok(o)
}

fn weighted_deriv(ctx: &Ctx) -> Result<Outcome> {
    let predicted = Predicted::Statement("r^p avg(e^{qu}|grad u|^p) / e^{q ubar} bounded".into());
    let (q, p) = (ctx.n() as f64 - 2.0, 2.0);
    let rule = SphereRule::for_field(ctx.field);
    let origin = vec![0.0; ctx.n()];
    let radii: Vec<f64> = ctx.settings.radii.iter().copied().filter(|&r| r >= 10.0).collect();
    let samples: Vec<(f64, f64)> = radii
        .par_iter()
        .map(|&r| {
            let avg = sphere_averages_at(
                ctx.field,
                &[FieldSelector::WeightedGrad { q, p }, FieldSelector::U],
                &origin,
                r,
                &rule,
            )?;
            Ok((r, r.powf(p) * avg[0] / (q * avg[1]).exp()))
        })
        .collect::<Result<_>>()?;
    let tail = &samples[samples.len() / 2..];
    let max = tail.iter().map(|s| s.1).fold(0.0f64, f64::max);
    let min = tail.iter().map(|s| s.1).fold(f64::INFINITY, f64::min);
    let deviation = if max > 0.0 { (max - min) / max } else { 0.0 };
    Ok(Outcome::new(samples, predicted, deviation)
        .detail("q", json!(q))
        .detail("p", json!(p))
        .detail("tail_max", json!(max)))
}

// ------------------------------------------------- structure functions

fn ineq_struct(ctx: &Ctx) -> Result<Outcome> {
    let predicted = Predicted::Statement("lhs1 <= rhs1 and lhs2 >= rhs2".into());
    let mut rng = ctx.rng("INEQ_STRUCT");
    let n = ctx.n();
    let points: Vec<Vec<f64>> = (0..20)
        .map(|_| {
            let r = 5.0 * rng.random::<f64>().powf(1.0 / n as f64);
            unit_vector(n, &mut rng).into_iter().map(|v| r * v).collect()
        })
        .collect();
    let mut samples = Vec::new();
    let mut worst = 0.0f64;
    for x in &points {
        let s = structure_inequalities(ctx.field, x)?;
        let scale1 = (s.lhs1.abs() + s.rhs1.abs()).max(1e-300);
        let scale2 = (s.lhs2.abs() + s.rhs2.abs()).max(1e-300);
        let v1 = (s.lhs1 - s.rhs1).max(0.0) / scale1;
        let v2 = (s.rhs2 - s.lhs2).max(0.0) / scale2;
        let r = x.iter().map(|c| c * c).sum::<f64>().sqrt();
        samples.push((r, v1.max(v2)));
        worst = worst.max(v1).max(v2);
    }
    samples.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(Outcome::new(samples, predicted, worst))
}

/// Points at moderate distance from the bumps, where both sides are sizable.
fn structure_points(ctx: &Ctx, check: &str, count: usize) -> Vec<Vec<f64>> {
    let mut rng = ctx.rng(check);
    let scale = ctx.field.density().min_scale();
    let radii = [0.3, 0.8, 1.5, 2.5, 4.0];
    (0..count)
        .map(|i| {
            let r = scale * radii[i % radii.len()];
            unit_vector(ctx.n(), &mut rng).into_iter().map(|v| r * v).collect()
        })
        .collect()
}

fn mc_consistency(
    ctx: &Ctx,
    check: &str,
    points: usize,
    identity: impl Fn(&[f64]) -> Result<f64>,
    mc: impl Fn(&[f64], MonteCarlo) -> Result<crate::curvature::McEstimate>,
) -> Result<Outcome> {
    let predicted = Predicted::Statement("identity within 3 standard errors of Monte-Carlo".into());
    let mut samples = Vec::new();
    let mut worst = 0.0f64;
    let mut min_identity = f64::INFINITY;
    let mut rows = Vec::new();
    for (i, x) in structure_points(ctx, check, points).iter().enumerate() {
        let id = identity(x)?;
        let est = mc(
            x,
            MonteCarlo {
                samples: 1_000_000,
                seed: ctx.settings.seed.wrapping_add(i as u64),
            },
        )?;
        let z = if est.stderr > 0.0 {
            (id - est.estimate).abs() / est.stderr
        } else if id == est.estimate {
            0.0
        } else {
            f64::INFINITY
        };
        let r = x.iter().map(|c| c * c).sum::<f64>().sqrt();
        samples.push((r, z));
        rows.push(json!({ "radius": r, "identity": id, "mc": est.estimate, "stderr": est.stderr }));
        worst = worst.max(z);
        min_identity = min_identity.min(id);
    }
    let mut o = Outcome::new(samples, predicted, worst)
        .detail("points", json!(rows))
        .detail("min_identity", json!(min_identity));
    if min_identity < -1e-10 {
        o.forced_fail = Some("identity_negative".into());
    }
    Ok(o)
}

fn b_consistency(ctx: &Ctx) -> Result<Outcome> {
    mc_consistency(
        ctx,
        "B_CONSISTENCY",
        5,
        |x| Ok(b_identity(ctx.field, x)),
        |x, mc| b_doubleint(ctx.field.density(), x, mc),
    )
}

fn h_consistency(ctx: &Ctx) -> Result<Outcome> {
    mc_consistency(
        ctx,
        "H_CONSISTENCY",
        3,
        |x| h_identity(ctx.field, x),
        |x, mc| h_doubleint(ctx.field.density(), x, mc),
    )
}

fn pde_residual_check(ctx: &Ctx) -> Result<Outcome> {
    let n = ctx.n();
    let mut rng = ctx.rng("PDE_RESIDUAL");
    let bumps = ctx.field.density().bumps();
    let scale = ctx.field.density().min_scale();
    let points: Vec<Vec<f64>> = (0..5)
        .map(|i| {
            let (center, s) = match bumps.get(i % bumps.len().max(1)) {
                Some(b) => (b.center.clone(), b.scale),
                None => (vec![0.0; n], 1.0),
            };
            let dir = unit_vector(n, &mut rng);
            center.iter().zip(&dir).map(|(c, d)| c + 0.5 * s * d).collect()
        })
        .collect();
    let h = 3e-2 * scale;
    let samples: Vec<(f64, f64)> = points
        .par_iter()
        .map(|x| {
            let r = x.iter().map(|c| c * c).sum::<f64>().sqrt();
            (r, pde_residual(ctx.field, x, h))
        })
        .collect();
    let worst = samples.iter().map(|s| s.1).fold(0.0f64, f64::max);
    Ok(Outcome::new(samples, Predicted::AtMost(0.0), worst).detail("step", json!(h)))
}

// ----------------------------------------------------------- exploratory

fn semmes(ctx: &Ctx) -> Result<Outcome> {
    let predicted = Predicted::Statement("measure/geodesic distance ratio in a bounded band".into());
    let Some(config) = ctx.settings.grid else {
        return Err(Error::config("no grid configured"));
    };
    config.validate()?;
    let grid = DistanceGrid::new(ctx.field, config)?;
    let mut rng = ctx.rng("SEMMES");
    let w = 0.5 * config.half_width;
    let mut pick = || -> Result<usize> {
        let x: Vec<f64> = (0..4).map(|_| rng.random_range(-w..w)).collect();
        grid.snap(&x)
    };
    let sources: Vec<usize> = (0..10).map(|_| pick()).collect::<Result<_>>()?;
    let targets: Vec<usize> = (0..10).map(|_| pick()).collect::<Result<_>>()?;
    let mut samples = Vec::new();
    for &a in &sources {
        let dist = grid.distances_from(a);
        let xa = grid.node_position(a);
        for &b in &targets {
            if a == b {
                continue;
            }
            let xb = grid.node_position(b);
            let d = dist[b] / lattice_stretch(&grid, a, b);
            let delta = measure_distance(ctx.field, &xa, &xb)?;
            let e = crate::density::distance(&xa, &xb);
            samples.push((e, delta / d));
        }
    }
    samples.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let max = samples.iter().map(|s| s.1).fold(f64::NEG_INFINITY, f64::max);
    let min = samples.iter().map(|s| s.1).fold(f64::INFINITY, f64::min);
    Ok(Outcome::new(samples, predicted, max / min)
        .detail("ratio_min", json!(min))
        .detail("ratio_max", json!(max))
        .detail("grid", json!(config)))
}

fn doubling(ctx: &Ctx) -> Result<Outcome> {
    let predicted = Predicted::Statement("V(B_2r(x)) / V(B_r(x)) bounded".into());
    let mut rng = ctx.rng("DOUBLING");
    let scale = ctx.field.density().min_scale();
    let cases: Vec<(Vec<f64>, f64)> = (0..20)
        .map(|_| {
            let rad = 3.0 * scale * rng.random::<f64>().powf(0.25);
            let x: Vec<f64> = unit_vector(4, &mut rng).into_iter().map(|v| rad * v).collect();
            (x, scale * 10f64.powf(rng.random_range(-1.0..1.0)))
        })
        .collect();
    let mut samples: Vec<(f64, f64)> = cases
        .par_iter()
        .map(|(x, r)| Ok((*r, ball_measure(ctx.field, x, 2.0 * r)? / ball_measure(ctx.field, x, *r)?)))
        .collect::<Result<_>>()?;
    samples.sort_by(|a, b| a.0.total_cmp(&b.0));
    let max = samples.iter().map(|s| s.1).fold(f64::NEG_INFINITY, f64::max);
    let min = samples.iter().map(|s| s.1).fold(f64::INFINITY, f64::min);
    Ok(Outcome::new(samples, predicted, max)
        .detail("ratio_min", json!(min))
        .detail("ratio_max", json!(max)))
}

/// Least-squares slope of `value` against `log r` over the last half.
fn log_slope_tail(samples: &[(f64, f64)]) -> f64 {
    let tail = &samples[samples.len() / 2..];
    let m = tail.len() as f64;
    let mx = tail.iter().map(|s| s.0.ln()).sum::<f64>() / m;
    let my = tail.iter().map(|s| s.1).sum::<f64>() / m;
    let sxx: f64 = tail.iter().map(|s| (s.0.ln() - mx).powi(2)).sum();
    let sxy: f64 = tail.iter().map(|s| (s.0.ln() - mx) * (s.1 - my)).sum();
    if sxx > 0.0 {
        sxy / sxx
    } else {
        0.0
    }
}

fn ubar_upper(ctx: &Ctx) -> Result<Outcome> {
    let predicted = Predicted::Statement("ubar bounded above: slope against log r <= 0".into());
    let samples = sweep_samples(ctx.sweep()?, 0.0, |row| Some(row.ubar));
    if samples.len() < 4 {
        return Ok(Outcome::skipped("too_few_radii", predicted));
    }
    let slope = log_slope_tail(&samples);
    Ok(Outcome::new(samples, predicted, slope.max(0.0)).detail("tail_slope", json!(slope)))
}

fn u_lower(ctx: &Ctx) -> Result<Outcome> {
    let predicted =
        Predicted::Statement("min over spheres of u + 2 log(|x|+1) bounded below".into());
    let n = ctx.n();
    let rule = SphereRule::hopf(8, 16);
    let samples: Vec<(f64, f64)> = ctx
        .settings
        .radii
        .par_iter()
        .map(|&r| {
            let shift = 2.0 * (r + 1.0).ln();
            let min = if ctx.radial() {
                let mut x = vec![0.0; n];
                x[0] = r;
                ctx.field.eval_u(&x)
            } else {
                rule.nodes
                    .iter()
                    .map(|p| ctx.field.eval_u(&p.iter().map(|c| r * c).collect::<Vec<_>>()))
                    .fold(f64::INFINITY, f64::min)
            };
            (r, min + shift)
        })
        .collect();
    if samples.len() < 4 {
        return Ok(Outcome::skipped("too_few_radii", predicted));
    }
    let slope = log_slope_tail(&samples);
    Ok(Outcome::new(samples, predicted, (-slope).max(0.0)).detail("tail_slope", json!(slope)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn registry_is_sorted_and_complete() {
        let ids = check_ids();
        assert_eq!(ids.len(), 29);
        let mut sorted = ids.clone();
        sorted.sort_unstable();
        assert_eq!(ids, sorted);
    }

    #[test]
    fn selection_rejects_unknown_ids() {
        assert!(resolve_selection(&["LIMIT_R2LAP", "NOPE"]).is_err());
        assert_eq!(resolve_selection(&["all"]).unwrap().len(), 29);
    }

    #[test]
    fn newton_sphere_mean() {
        // |x - y|^{2-n} averaged over |x| = r with |y| < r equals r^{2-n}.
        let v = sphere_mean_inverse_power(6, 0.4, 1.3, 4.0);
        assert!((v - 1.3f64.powi(-4)).abs() < 1e-12);
        // On the sphere itself the value is still attained.
        let v = sphere_mean_inverse_power(4, 1.0, 1.0, 2.0);
        assert!((v - 1.0).abs() < 1e-10);
    }
}
