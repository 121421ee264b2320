//! Byte-stable renderings of sweeps, reports and oracle tables.

use std::fmt::Write as _;

use serde::Serialize;

use crate::geometry::{growth_pairs, sigma_orders, RadialSweepRow};
use crate::oracle::{fd_oracle, pde_residual, stack_discrepancy};
use crate::potential::PotentialField;
use crate::verify::{summary_line, CheckReport};

/// 17 significant digits, independent of locale.
pub fn fmt_num(v: f64) -> String {
    format!("{v:.16e}")
}

fn cell(v: Option<f64>) -> String {
    v.map(fmt_num).unwrap_or_default()
}

pub fn sweep_header(n: usize) -> Vec<String> {
    let mut cols: Vec<String> = [
        "r",
        "ubar",
        "r2_neglap",
        "r2_gradsq",
        "r2_R_e2u",
        "r4_bilap",
        "r4_lapsq",
        "r4_Q4e4u",
        "vol_g",
        "area_g",
        "iso_ratio",
        "iso_ratio_cn_alt",
        "dist_g",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    cols.extend(growth_pairs(n).iter().map(|(k, p)| format!("growth_Q2k_{k}_{p}")));
    cols.extend(sigma_orders(n).iter().map(|k| format!("growth_sigma_{k}")));
    cols
}

/// Undefined cells are empty; truncated geodesic cells print `NaN`.
pub fn sweep_csv(n: usize, rows: &[RadialSweepRow]) -> String {
    let mut out = sweep_header(n).join(",");
    out.push('\n');
    for row in rows {
        let mut cells = vec![
            fmt_num(row.r),
            fmt_num(row.ubar),
            fmt_num(row.r2_neglap),
            fmt_num(row.r2_gradsq),
            fmt_num(row.r2_r_e2u),
            cell(row.r4_bilap),
            cell(row.r4_lapsq),
            cell(row.r4_q4e4u),
            fmt_num(row.vol_g),
            fmt_num(row.area_g),
            fmt_num(row.iso_ratio),
            fmt_num(row.iso_ratio_cn_alt),
            cell(row.dist_g),
        ];
        cells.extend(row.growth_q2k.iter().map(|(_, v)| cell(*v)));
        cells.extend(row.growth_sigma.iter().map(|(_, v)| cell(*v)));
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

#[derive(Serialize)]
struct Report<'a> {
    scenario_id: &'a str,
    summary: String,
    checks: &'a [CheckReport],
}

pub fn report_json(scenario_id: &str, reports: &[CheckReport]) -> String {
    let report = Report {
        scenario_id,
        summary: summary_line(reports),
        checks: reports,
    };
    let mut s = serde_json::to_string_pretty(&report).expect("reports serialize");
    s.push('\n');
    s
}

/// Kernel and FD stacks side by side with the top-order PDE residual.
/// Returns the table and the largest relative discrepancy.
pub fn oracle_table(field: &PotentialField, points: &[Vec<f64>], h: f64) -> (String, f64) {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:>4} {:>12} {:>14} {:>14} {:>14} {:>14} {:>14} {:>11} {:>11}",
        "pt", "|x|", "u", "lap_kernel", "lap_fd", "bilap_kernel", "bilap_fd", "max_rel", "pde_resid"
    );
    let mut worst = 0.0f64;
    for (i, x) in points.iter().enumerate() {
        let k = field.eval_stack(x);
        let f = fd_oracle(field, x, h);
        let rel = stack_discrepancy(&k, &f);
        let res = pde_residual(field, x, h);
        worst = worst.max(rel);
        let r = x.iter().map(|c| c * c).sum::<f64>().sqrt();
        let _ = writeln!(
            out,
            "{:>4} {:>12.5e} {:>14.6e} {:>14.6e} {:>14.6e} {:>14.6e} {:>14.6e} {:>11.3e} {:>11.3e}",
            i, r, k.u, k.lap, f.lap, k.bilap, f.bilap, rel, res
        );
    }
    let _ = writeln!(out, "max relative discrepancy: {worst:.3e} (fd step {h:e})");
    (out, worst)
}
