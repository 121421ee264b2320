//! `qcurv` command-line front end. Exit codes: 0 success, 1 check failure,
//! 2 configuration (or other pre-check) error.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::config::{write_atomic, Scenario};
use crate::error::{Error, Result};
use crate::geometry::{completeness, radial_sweep};
use crate::oracle::default_step;
use crate::output::{oracle_table, report_json, sweep_csv};
use crate::potential::PotentialField;
use crate::verify::{applicability, default_tolerance, resolve_selection, run_checks, Status};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "qcurv", version, about = "Curvature and distance checks for normal conformal metrics")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Summarize the scenario: density, alpha, completeness, applicable checks.
    Describe { config: PathBuf },
    /// Write the radial sweep CSV.
    Sweep { config: PathBuf },
    /// Run the check suite and write the JSON report.
    Verify {
        config: PathBuf,
        /// Comma-separated check ids (or `all`), replacing the configured list.
        #[arg(long, value_delimiter = ',')]
        checks: Option<Vec<String>>,
        /// Tolerance override, `CHECK_ID=value`; repeatable.
        #[arg(long = "tol", value_name = "NAME=VALUE")]
        tol: Vec<String>,
        /// Record per-check runtimes in the report (makes it non-reproducible).
        #[arg(long)]
        timings: bool,
    },
    /// Compare kernel derivatives with finite differences at given points.
    Oracle {
        config: PathBuf,
        /// One point per line, coordinates separated by whitespace or commas.
        #[arg(long)]
        points: PathBuf,
    },
}

/// Parses `args`, runs the command and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    if let Err(e) = configure_workers() {
        eprintln!("error: {e}");
        return EXIT_CONFIG;
    }
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_CONFIG
        }
    }
}

fn configure_workers() -> Result<()> {
    let Ok(raw) = std::env::var("QCURV_WORKERS") else {
        return Ok(());
    };
    let workers: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&w| w > 0)
        .ok_or_else(|| Error::Config(format!("QCURV_WORKERS must be a positive integer, got `{raw}`")))?;
    // Fails only if a pool already exists, which keeps its own size.
    let _ = rayon::ThreadPoolBuilder::new().num_threads(workers).build_global();
    Ok(())
}

fn dispatch(command: Command) -> Result<i32> {
    match command {
        Command::Describe { config } => {
            let scenario = Scenario::load(&config)?;
            let field = scenario.build_field()?;
            print!("{}", describe(&scenario, &field)?);
            Ok(EXIT_OK)
        }
        Command::Sweep { config } => {
            let scenario = Scenario::load(&config)?;
            let field = scenario.build_field()?;
            let outcome = radial_sweep(&field, &scenario.radii())?;
            if let Some(first) = outcome.warnings.first() {
                eprintln!("warning: {first}");
                if outcome.warnings.len() > 1 {
                    eprintln!("warning: {} further radii truncated", outcome.warnings.len() - 1);
                }
            }
            let path = scenario.sweep_csv_path();
            write_atomic(&path, sweep_csv(field.dimension(), &outcome.rows).as_bytes())?;
            println!("wrote {} rows to {}", outcome.rows.len(), path.display());
            Ok(EXIT_OK)
        }
        Command::Verify {
            config,
            checks,
            tol,
            timings,
        } => verify(&config, checks, &tol, timings),
        Command::Oracle { config, points } => {
            let scenario = Scenario::load(&config)?;
            let field = scenario.build_field()?;
            let pts = read_points(&points, field.dimension())?;
            let (table, _) = oracle_table(&field, &pts, default_step(&field));
            print!("{table}");
            Ok(EXIT_OK)
        }
    }
}

fn verify(config: &Path, checks: Option<Vec<String>>, tol: &[String], timings: bool) -> Result<i32> {
    let scenario = Scenario::load(config)?;
    let selection: Vec<String> = match checks {
        Some(list) => resolve_selection(&list)?.into_iter().map(String::from).collect(),
        None => scenario.checks.clone(),
    };
    let mut settings = scenario.verify_settings();
    settings.timings = timings;
    for entry in tol {
        let (name, value) = entry
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("--tol expects NAME=VALUE, got `{entry}`")))?;
        let name = name.trim();
        if default_tolerance(name).is_none() {
            return Err(Error::Config(format!("--tol names unknown check id `{name}`")));
        }
        let value: f64 = value
            .trim()
            .parse()
            .map_err(|_| Error::Config(format!("--tol value for {name} is not a number: `{value}`")))?;
        settings.tolerances.insert(name.to_string(), value);
    }
    let field = scenario.build_field()?;
    let reports = run_checks(&field, &selection, &settings)?;
    let path = scenario.report_path();
    write_atomic(&path, report_json(&scenario.id, &reports).as_bytes())?;
    for r in &reports {
        let status = match r.status {
            Status::Pass => "pass",
            Status::Fail => "FAIL",
            Status::Exploratory => "exploratory",
        };
        let reason = r.reason.as_deref().map(|s| format!(" ({s})")).unwrap_or_default();
        println!(
            "{:<17} {:<11} deviation={:.3e} tolerance={:.1e}{}",
            r.check_id, status, r.deviation, r.tolerance, reason
        );
    }
    println!("report: {}", path.display());
    println!("{}", crate::verify::summary_line(&reports));
    let failed = reports.iter().any(|r| r.status == Status::Fail);
    Ok(if failed { EXIT_CHECK_FAILED } else { EXIT_OK })
}

/// Whitespace- or comma-separated coordinates, one point per line; `#` starts
/// a comment.
pub fn parse_points(text: &str, origin: &str, n: usize) -> Result<Vec<Vec<f64>>> {
    let mut points = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let coords: Vec<f64> = line
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|s| !s.is_empty())
            .map(|s| s.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Config(format!("{origin}:{}: {e}", i + 1)))?;
        if coords.len() != n {
            return Err(Error::Config(format!(
                "{origin}:{}: expected {n} coordinates, found {}",
                i + 1,
                coords.len()
            )));
        }
        points.push(coords);
    }
    Ok(points)
}

fn read_points(path: &Path, n: usize) -> Result<Vec<Vec<f64>>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    parse_points(&text, &path.display().to_string(), n)
}

/// Short decimal rendering for summaries: ten decimals, trailing zeros cut.
fn short(v: f64) -> String {
    let s = format!("{v:.10}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".into()
    } else {
        s.into()
    }
}

/// The completeness line: `alpha=..., complete` and variants.
pub fn completeness_summary(field: &PotentialField) -> Result<String> {
    let d = field.density();
    let a = short(field.alpha());
    if d.is_zero() {
        return Ok(format!("alpha={a}, complete, flat"));
    }
    if !d.is_radial() {
        return Ok(format!(
            "alpha={a}, completeness predicted only for radial densities (non-radial)"
        ));
    }
    if !d.is_nonnegative() {
        return Ok(format!(
            "alpha={a}, completeness predicted only for nonnegative densities (signed)"
        ));
    }
    let predicted = field.alpha() <= 1.0 + 1e-12;
    let label = if predicted { "complete" } else { "INCOMPLETE" };
    let mut line = format!("alpha={a}, {label}");
    if d.has_spheredensity() && d.bumps().len() == 1 {
        line.push_str(" (round-sphere model)");
    }
    let measured = completeness(field)?;
    if measured.complete != predicted {
        let _ = write!(line, " [ray integral disagrees: complete={}]", measured.complete);
    }
    Ok(line)
}

pub fn describe(scenario: &Scenario, field: &PotentialField) -> Result<String> {
    let d = field.density();
    let mut out = String::new();
    let _ = writeln!(out, "scenario: {}", scenario.id);
    let _ = writeln!(out, "dimension: {}", field.dimension());
    let _ = writeln!(out, "bumps: {}", d.bumps().len());
    for (i, b) in d.bumps().iter().enumerate() {
        let center = if b.center.iter().all(|&c| c == 0.0) {
            "origin".to_string()
        } else {
            format!("({})", b.center.iter().map(|&c| short(c)).collect::<Vec<_>>().join(", "))
        };
        let profile = format!("{:?}", b.profile).to_lowercase();
        let _ = writeln!(
            out,
            "  [{i}] {profile} center={center} scale={} weight={:.6e}",
            short(b.scale),
            b.weight
        );
    }
    let _ = writeln!(out, "mass: {:.6e}", d.mass() + 0.0);
    let _ = writeln!(out, "{}", completeness_summary(field)?);
    let _ = writeln!(out, "kappa: {:.6e}", field.kappa());
    let radii = scenario.radii();
    let _ = writeln!(
        out,
        "sweep: {} radii, geometric {} .. {}",
        radii.len(),
        short(radii[0]),
        short(radii[radii.len() - 1])
    );
    let settings = scenario.verify_settings();
    let table = applicability(field, &settings);
    let selected: Vec<_> = table
        .iter()
        .filter(|(id, _)| scenario.checks.iter().any(|c| c == id))
        .collect();
    let applicable: Vec<&str> = selected.iter().filter(|(_, g)| g.is_none()).map(|(id, _)| *id).collect();
    let _ = writeln!(out, "applicable checks ({}): {}", applicable.len(), applicable.join(", "));
    let gated: Vec<_> = selected.iter().filter_map(|(id, g)| g.map(|g| (*id, g))).collect();
    let _ = writeln!(out, "exploratory checks ({}):", gated.len());
    for (id, g) in gated {
        let how = if g.compute { "computed" } else { "not evaluated" };
        let _ = writeln!(out, "  {id}: {} ({how})", g.reason);
    }
    Ok(out)
}
