//! Acceptance criteria 1-13 on the reference scenarios in `scenarios/`.
//! Prints one PASS/FAIL line per criterion, then fails if any criterion did.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use qcurv::config::Scenario;
use qcurv::curvature::{point_curvature, structure_inequalities};
use qcurv::extrapolate::{limit_extrapolate, limit_extrapolate_with, loglog_slope, LimitModel};
use qcurv::geometry::{
    completeness, curvature_growth_integral, geometric_radii, isoperimetric_ratio, radial_sweep,
    sigma_growth_integral, RadialDistance, RadialSweepRow,
};
use qcurv::oracle::{default_step, fd_oracle, stack_discrepancy};
use qcurv::verify::{run_checks, CheckReport, Status, VerifySettings};
use qcurv::PotentialField;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

const SCENARIOS: [(&str, &str); 7] = [
    ("S0", "s0_flat"),
    ("S1", "s1_round_sphere"),
    ("S2", "s2_gaussian_half"),
    ("S3", "s3_gaussian_one"),
    ("S4", "s4_gaussian_incomplete"),
    ("S5", "s5_gaussian_n6"),
    ("S6", "s6_two_bumps"),
];

fn scenario_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios")
}

fn load(id: &str) -> (Scenario, PotentialField) {
    let stem = SCENARIOS.iter().find(|s| s.0 == id).unwrap().1;
    let scenario = Scenario::load(&scenario_dir().join(format!("{stem}.toml"))).unwrap();
    let field = scenario.build_field().unwrap();
    (scenario, field)
}

fn field(id: &str) -> PotentialField {
    load(id).1
}

fn sweep(id: &str) -> Vec<RadialSweepRow> {
    let (scenario, field) = load(id);
    radial_sweep(&field, &scenario.radii()).unwrap().rows
}

fn rel(value: f64, target: f64) -> f64 {
    (value - target).abs() / target.abs()
}

/// Runs registry checks with the tolerances pinned here rather than defaults.
fn checks(id: &str, selection: &[(&str, f64)]) -> Vec<CheckReport> {
    let (scenario, field) = load(id);
    let mut settings: VerifySettings = scenario.verify_settings();
    let ids: Vec<&str> = selection.iter().map(|s| s.0).collect();
    for (check, tol) in selection {
        settings.tolerances.insert(check.to_string(), *tol);
    }
    run_checks(&field, &ids, &settings).unwrap()
}

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn c1_potential() -> Outcome {
    let f = field("S1");
    let mut diffs = Vec::new();
    for (i, r) in geometric_radii(0.1, 100.0, 10).into_iter().enumerate() {
        let mut x = vec![0.0; 4];
        x[i % 4] = r;
        diffs.push(f.eval_u(&x) - (2.0 / (1.0 + r * r)).ln());
    }
    let spread = diffs.iter().cloned().fold(f64::MIN, f64::max) - diffs.iter().cloned().fold(f64::MAX, f64::min);
    let lap0 = f.eval_stack(&[0.0; 4]).lap;
    let mut worst = 0.0f64;
    for x in [[0.0, 0.0, 0.0, 0.0], [0.5, 0.0, 0.0, 0.0], [0.3, -1.2, 0.7, 0.1], [4.0, 3.0, 0.0, -2.0]] {
        let pc = point_curvature(&f, &x);
        worst = worst.max(rel(pc.scalar, 48.0)).max(rel(pc.q2, 8.0));
        for e in &pc.ric_eigs {
            worst = worst.max(rel(*e, 12.0));
        }
    }
    let qtop = point_curvature(&f, &[0.0; 4]).qtop;
    let pass = spread <= 1e-6 && (lap0 + 8.0).abs() <= 1e-6 && worst <= 1e-6 && rel(qtop, 96.0) <= 1e-6;
    outcome(
        pass,
        format!(
            "S1: u - log(2/(1+r^2)) spread {spread:.1e} (constant {:.12}), lap u(0) = {lap0:.10}, \
             R/ric/Q2 worst rel {worst:.1e}, Qtop(0) = {qtop:.10}",
            diffs[0]
        ),
    )
}

fn c2_pde_residual() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for id in ["S2", "S5", "S6"] {
        let r = &checks(id, &[("PDE_RESIDUAL", 1e-3)])[0];
        pass &= r.status == Status::Pass && r.samples.len() == 5;
        parts.push(format!("{id} max {:.1e}", r.deviation));
    }
    outcome(pass, format!("relative residual at 5 points: {}", parts.join(", ")))
}

fn c3_derivative_oracle() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for (id, _) in SCENARIOS {
        let f = field(id);
        let n = f.dimension();
        let scale = f.density().min_scale();
        let h = default_step(&f);
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        let worst = (0..20)
            .map(|_| {
                let x: Vec<f64> = (0..n).map(|_| scale * rng.random_range(-3.0..3.0)).collect();
                stack_discrepancy(&f.eval_stack(&x), &fd_oracle(&f, &x, h))
            })
            .fold(0.0f64, f64::max);
        pass &= worst <= 1e-4;
        parts.push(format!("{id} {worst:.1e}"));
    }
    outcome(pass, format!("kernel vs FD, worst relative at 20 points: {}", parts.join(", ")))
}

fn limit_of(rows: &[RadialSweepRow], get: impl Fn(&RadialSweepRow) -> Option<f64>) -> f64 {
    let samples: Vec<(f64, f64)> = rows.iter().filter(|r| r.r >= 100.0).map(|r| (r.r, get(r).unwrap())).collect();
    limit_extrapolate(&samples).unwrap().estimate
}

fn c4_limits() -> Outcome {
    let s2 = sweep("S2");
    let lap = limit_of(&s2, |r| Some(r.r2_neglap));
    let grad = limit_of(&s2, |r| Some(r.r2_gradsq));
    let scal = limit_of(&s2, |r| Some(r.r2_r_e2u));
    let s5 = sweep("S5");
    let bilap = limit_of(&s5, |r| r.r4_bilap);
    let lapsq = limit_of(&s5, |r| r.r4_lapsq);
    let q4 = s5.last().unwrap().r4_q4e4u.unwrap();
    let bound = 6.5625 * (1.0 - 0.03);
    let pass = rel(lap, 1.0) <= 0.02
        && rel(grad, 0.25) <= 0.02
        && rel(scal, 4.5) <= 0.03
        && rel(bilap, 8.0) <= 0.02
        && rel(lapsq, 4.0) <= 0.02
        && q4 >= bound;
    outcome(
        pass,
        format!(
            "S2 r^2(-lap u) {lap:.6}, r^2|grad u|^2 {grad:.6}, r^2 avg(R e^2u) {scal:.6}; \
             S5 r^4 bilap {bilap:.6}, r^4 lap^2 {lapsq:.6}, r^4 Q4 e^4u {q4:.6} >= {bound:.6}"
        ),
    )
}

fn c5_ubar_slope() -> Outcome {
    let last = sweep("S2").last().unwrap().clone();
    let v = last.ubar / last.r.ln();
    outcome(rel(v, -0.5) <= 0.1, format!("S2 ubar/log r at r = {:.0}: {v:.6}", last.r))
}

fn c6_positivity() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for (id, ids) in [
        ("S2", vec!["POS_Q2", "POS_RIC"]),
        ("S5", vec!["POS_Q2", "POS_Q4", "POS_RIC"]),
        ("S4", vec!["POS_RIC"]),
    ] {
        let sel: Vec<(&str, f64)> = ids.iter().map(|c| (*c, 1e-8)).collect();
        for r in checks(id, &sel) {
            let points = r.details.get("points").and_then(|v| v.as_u64()).unwrap_or(0);
            pass &= r.status == Status::Pass && points == 10_000;
            parts.push(format!("{id} {} {:.1e}", r.check_id, r.deviation));
        }
    }
    outcome(pass, format!("worst relative negativity over 1e4 points: {}", parts.join(", ")))
}

fn c7_isoperimetric() -> Outcome {
    let flat = sweep("S0").iter().map(|r| (r.iso_ratio - 1.0).abs()).fold(0.0f64, f64::max);
    let s2 = sweep("S2").last().unwrap().iso_ratio;
    let s3 = sweep("S3").last().unwrap().iso_ratio;
    let pass = flat <= 1e-12 && (s2 - 0.5).abs() <= 0.02 * 0.5 && s3 <= 0.05;
    outcome(pass, format!("S0 max |ratio - 1| {flat:.1e}; S2 {s2:.6}; S3 {s3:.6} at r = 1e4"))
}

fn c8_distance_exponent() -> Outcome {
    let f = field("S2");
    let dist = RadialDistance::new(&f).unwrap();
    // Only data up to rho = 1e4; the log C / log rho offset is fitted out.
    let samples: Vec<(f64, f64)> = geometric_radii(1e2, 1e4, 21)
        .into_iter()
        .map(|rho| (rho, dist.distance(rho).unwrap().ln() / rho.ln()))
        .collect();
    let est = limit_extrapolate_with(&samples, LimitModel::LogRate).unwrap().estimate;
    let raw = samples.last().unwrap().1;
    let mut verdicts = Vec::new();
    let mut dichotomy = true;
    for id in ["S2", "S3", "S4"] {
        let f = field(id);
        let c = completeness(&f).unwrap();
        dichotomy &= c.complete == (f.alpha() <= 1.0);
        verdicts.push(format!("{id} complete={}", c.complete));
    }
    outcome(
        rel(est, 0.5) <= 0.05 && dichotomy,
        format!(
            "S2 log d/log rho fitted from rho <= 1e4: {est:.6} (raw at 1e4: {raw:.6}); {}",
            verdicts.join(", ")
        ),
    )
}

/// Log-log slope of `g(r_g)` over the upper half of the window `[10, 1e3]`.
fn growth_slope(g: impl Fn(f64) -> f64) -> f64 {
    let samples: Vec<(f64, f64)> = geometric_radii(1e2, 1e3, 11).into_iter().map(|r| (r, g(r))).collect();
    loglog_slope(&samples).unwrap()
}

fn c9_growth() -> Outcome {
    let s2 = field("S2");
    let q2 = growth_slope(|r| curvature_growth_integral(&s2, 1, 1.0, r).unwrap());
    let sigma = growth_slope(|r| sigma_growth_integral(&s2, 1, r).unwrap());
    let s5 = field("S5");
    let q4 = growth_slope(|r| curvature_growth_integral(&s5, 2, 1.0, r).unwrap());
    let pass = (q2 - 2.0).abs() <= 0.1 && sigma <= 2.1 && (q4 - 2.0).abs() <= 0.15;
    outcome(pass, format!("S2 |Q2| slope {q2:.4}, sigma_1 slope {sigma:.4}; S5 |Q4| slope {q4:.4}"))
}

fn c10_alpha_one() -> Outcome {
    let f = field("S3");
    let q2: Vec<f64> = geometric_radii(1e3, 1e4, 11)
        .into_iter()
        .map(|r| point_curvature(&f, &[r, 0.0, 0.0, 0.0]).q2)
        .collect();
    let max = q2.iter().cloned().fold(f64::MIN, f64::max);
    let min = q2.iter().cloned().fold(f64::MAX, f64::min);
    let variation = (max - min) / max;
    let iso = isoperimetric_ratio(&f, 1e4).unwrap();
    outcome(
        min > 0.0 && variation <= 0.1 && iso <= 0.05,
        format!("S3 Q2(r e1) on [1e3, 1e4] in [{min:.6}, {max:.6}], variation {variation:.1e}; iso_ratio(1e4) {iso:.6}"),
    )
}

fn c11_structure() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for (id, sel) in [
        ("S2", vec![("B_CONSISTENCY", 3.0)]),
        ("S5", vec![("B_CONSISTENCY", 3.0), ("H_CONSISTENCY", 3.0), ("INEQ_STRUCT", 1e-8)]),
    ] {
        for r in checks(id, &sel) {
            let min_id = r.details.get("min_identity").and_then(|v| v.as_f64());
            pass &= r.status == Status::Pass && min_id.is_none_or(|m| m >= -1e-10);
            let unit = if r.check_id == "INEQ_STRUCT" { "rel" } else { "sigma" };
            parts.push(format!("{id} {} {:.2} {unit}", r.check_id, r.deviation));
        }
    }
    // The inequalities involve h, which exists only for n >= 6.
    let s2 = field("S2");
    let undefined = structure_inequalities(&s2, &[0.5, 0.0, 0.0, 0.0]).is_err();
    pass &= undefined;
    parts.push("S2 INEQ_STRUCT undefined for n = 4".into());
    outcome(pass, parts.join(", "))
}

fn c12_kernel_bounds() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for id in ["S2", "S5"] {
        let r = &checks(id, &[("KERNEL_MEANVALUE", 1e-6)])[0];
        pass &= r.status == Status::Pass && r.samples.len() == 50;
        parts.push(format!("{id} mean-value excess {:.1e}", r.deviation));
    }
    let r = &checks("S6", &[("EXPAVG", 0.05)])[0];
    let ratios: Vec<f64> = r.samples.iter().map(|s| s.1).collect();
    pass &= r.status == Status::Pass && ratios.iter().all(|&q| (1.0..=1.05).contains(&q));
    parts.push(format!("S6 EXPAVG ratios {:?}", ratios.iter().map(|q| format!("{q:.9}")).collect::<Vec<_>>()));
    outcome(pass, parts.join(", "))
}

fn c13_determinism() -> Outcome {
    let dir = tempfile::TempDir::new().unwrap();
    for (_, stem) in SCENARIOS {
        let name = format!("{stem}.toml");
        std::fs::copy(scenario_dir().join(&name), dir.path().join(&name)).unwrap();
    }
    let mut runs: Vec<Vec<Vec<u8>>> = Vec::new();
    let mut codes = Vec::new();
    for _ in 0..2 {
        let mut reports = Vec::new();
        for (_, stem) in SCENARIOS {
            let out = Command::new(env!("CARGO_BIN_EXE_qcurv"))
                .arg("verify")
                .arg(dir.path().join(format!("{stem}.toml")))
                .env_remove("QCURV_WORKERS")
                .output()
                .unwrap();
            codes.push(out.status.code());
            reports.push(std::fs::read(dir.path().join(format!("out/{stem}_report.json"))).unwrap());
        }
        runs.push(reports);
    }
    let identical = runs[0] == runs[1];
    let all_zero = codes.iter().all(|c| *c == Some(0));
    outcome(
        identical && all_zero,
        format!("verify on S0-S6 twice: reports identical = {identical}, exit codes {codes:?}"),
    )
}

#[test]
fn acceptance_criteria() {
    let criteria: [(&str, fn() -> Outcome); 13] = [
        ("potential correctness", c1_potential),
        ("PDE residual", c2_pde_residual),
        ("derivative oracle", c3_derivative_oracle),
        ("curvature limits", c4_limits),
        ("ubar slope", c5_ubar_slope),
        ("positivity", c6_positivity),
        ("isoperimetric ratio", c7_isoperimetric),
        ("distance exponent", c8_distance_exponent),
        ("growth exponents", c9_growth),
        ("alpha = 1 boundary", c10_alpha_one),
        ("structure identities", c11_structure),
        ("kernel bounds", c12_kernel_bounds),
        ("determinism", c13_determinism),
    ];
    // Written straight to stderr so the lines show without --nocapture.
    let mut err = std::io::stderr();
    let mut failed = Vec::new();
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let o = run();
        let verdict = if o.pass { "PASS" } else { "FAIL" };
        let _ = writeln!(
            err,
            "criterion {:>2} {verdict} {name} ({:.1} s): {}",
            i + 1,
            start.elapsed().as_secs_f64(),
            o.detail
        );
        if !o.pass {
            failed.push(i + 1);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
