//! Scenario files: TOML with an explicit schema version and no unknown keys.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::density::{build_density, DensitySpec};
use crate::error::{Error, Result};
use crate::geometry::geometric_radii;
use crate::grid::GridConfig;
use crate::potential::{build_field, PotentialField, QuadConfig};
use crate::verify::{default_tolerance, resolve_selection, VerifySettings};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Spacing {
    #[default]
    Geometric,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub r_start: f64,
    pub r_stop: f64,
    pub count: usize,
    #[serde(default)]
    pub spacing: Spacing,
}

/// `checks = "all"` or `checks = ["ID", ...]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CheckList {
    Keyword(String),
    List(Vec<String>),
}

impl Default for CheckList {
    fn default() -> Self {
        CheckList::Keyword("all".into())
    }
}

impl CheckList {
    pub fn entries(&self) -> Vec<String> {
        match self {
            CheckList::Keyword(k) => vec![k.clone()],
            CheckList::List(v) => v.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    pub sweep_csv_path: PathBuf,
    pub report_path: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub schema_version: u32,
    /// Defaults to the file stem.
    #[serde(default)]
    pub scenario_id: Option<String>,
    pub dimension: usize,
    pub density: DensitySpec,
    #[serde(default)]
    pub quadrature: QuadConfig,
    pub sweep: SweepSpec,
    #[serde(default)]
    pub checks: CheckList,
    #[serde(default)]
    pub tolerances: BTreeMap<String, f64>,
    pub seed: u64,
    #[serde(default)]
    pub grid: Option<GridConfig>,
    pub output: OutputSpec,
}

/// A validated configuration together with where it came from.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub config: ScenarioConfig,
    pub id: String,
    /// Output paths are relative to this directory.
    pub base_dir: PathBuf,
    pub checks: Vec<String>,
}

impl Scenario {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config(format!("{}: {e}", path.display())))?;
        let stem = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "scenario".into());
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Scenario::parse(&text, &path.display().to_string(), &stem, base)
    }

    /// Parses and validates; errors read `origin:line:column: message`.
    pub fn parse(text: &str, origin: &str, default_id: &str, base_dir: PathBuf) -> Result<Self> {
        let config: ScenarioConfig = toml::from_str(text).map_err(|e| {
            let (line, col) = e.span().map_or((1, 1), |s| line_col(text, s.start));
            Error::config(format!("{origin}:{line}:{col}: {}", e.message().trim_end()))
        })?;
        let at = |table: Option<&str>, key: &str, msg: String| {
            let line = key_line(text, table, key).unwrap_or(1);
            Error::config(format!("{origin}:{line}: {msg}"))
        };
        if config.schema_version != SCHEMA_VERSION {
            return Err(at(
                None,
                "schema_version",
                format!("unsupported schema_version {} (expected {SCHEMA_VERSION})", config.schema_version),
            ));
        }
        if let Err(e) = build_density(config.dimension, &config.density) {
            let msg = bare(e);
            return Err(if msg.contains("dimension") {
                at(None, "dimension", msg)
            } else if key_line(text, Some("density"), "").is_some() {
                at(Some("density"), "", msg)
            } else {
                at(Some("density.bumps"), "", msg)
            });
        }
        config.quadrature.validate().map_err(|e| at(Some("quadrature"), "", bare(e)))?;
        let s = &config.sweep;
        if !(s.r_start >= 1.0 && s.r_start.is_finite()) {
            return Err(at(Some("sweep"), "r_start", "sweep.r_start must be >= 1".into()));
        }
        if !(s.r_stop > s.r_start && s.r_stop.is_finite()) {
            return Err(at(Some("sweep"), "r_stop", "sweep.r_stop must exceed r_start".into()));
        }
        if s.count < 8 {
            return Err(at(Some("sweep"), "count", "sweep.count must be >= 8".into()));
        }
        let checks = resolve_selection(&config.checks.entries()).map_err(|e| at(None, "checks", bare(e)))?;
        for (k, v) in &config.tolerances {
            if default_tolerance(k).is_none() {
                return Err(at(Some("tolerances"), k, format!("unknown check id `{k}` in tolerances")));
            }
            if !(*v >= 0.0) {
                return Err(at(Some("tolerances"), k, format!("tolerance for {k} must be nonnegative")));
            }
        }
        if let Some(g) = &config.grid {
            g.validate().map_err(|e| at(Some("grid"), "", bare(e)))?;
        }
        let id = config.scenario_id.clone().unwrap_or_else(|| default_id.to_string());
        Ok(Scenario {
            config,
            id,
            base_dir,
            checks: checks.into_iter().map(String::from).collect(),
        })
    }

    pub fn radii(&self) -> Vec<f64> {
        let s = &self.config.sweep;
        geometric_radii(s.r_start, s.r_stop, s.count)
    }

    pub fn build_field(&self) -> Result<PotentialField> {
        let density = build_density(self.config.dimension, &self.config.density)?;
        build_field(density, self.config.quadrature.clone())
    }

    pub fn verify_settings(&self) -> VerifySettings {
        VerifySettings {
            scenario_id: self.id.clone(),
            radii: self.radii(),
            seed: self.config.seed,
            grid: self.config.grid,
            tolerances: self.config.tolerances.clone(),
            timings: false,
        }
    }

    pub fn sweep_csv_path(&self) -> PathBuf {
        self.base_dir.join(&self.config.output.sweep_csv_path)
    }

    pub fn report_path(&self) -> PathBuf {
        self.base_dir.join(&self.config.output.report_path)
    }
}

/// Error text without the variant prefix.
fn bare(e: Error) -> String {
    match e {
        Error::Config(m) | Error::Contract(m) | Error::OutOfRange(m) => m,
        other => other.to_string(),
    }
}

fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let col = before.len() - before.rfind('\n').map_or(0, |i| i + 1) + 1;
    (line, col)
}

/// Line of `key = ...` inside `[table]` (top level when `None`); an empty key
/// finds the table header itself.
fn key_line(text: &str, table: Option<&str>, key: &str) -> Option<usize> {
    let mut current: Option<String> = None;
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.starts_with('[') {
            let name = line.trim_matches(|c| c == '[' || c == ']').trim().to_string();
            if key.is_empty() && table == Some(name.as_str()) {
                return Some(i + 1);
            }
            current = Some(name);
            continue;
        }
        let in_table = match (table, &current) {
            (None, None) => true,
            (Some(t), Some(c)) => c == t,
            _ => false,
        };
        if in_table && !key.is_empty() {
            if let Some(rest) = line.strip_prefix(key) {
                if rest.trim_start().starts_with('=') {
                    return Some(i + 1);
                }
            }
        }
    }
    None
}

/// Writes `bytes` to a sibling temporary file, then renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d.to_path_buf(),
        _ => PathBuf::from("."),
    };
    std::fs::create_dir_all(&dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(&dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const GOOD: &str = r#"
schema_version = 1
dimension = 4
seed = 7
checks = "all"

[density]
alpha_target = 0.5

[[density.bumps]]
profile = "gaussian"

[sweep]
r_start = 1.0
r_stop = 1e4
count = 41

[output]
sweep_csv_path = "out/sweep.csv"
report_path = "out/report.json"
"#;

    fn parse(text: &str) -> Result<Scenario> {
        Scenario::parse(text, "s.toml", "s", PathBuf::from("/base"))
    }

    #[test]
    fn parses_minimal_scenario() {
        let s = parse(GOOD).unwrap();
        assert_eq!(s.id, "s");
        assert_eq!(s.checks.len(), 29);
        assert_eq!(s.radii().len(), 41);
        assert_eq!(s.report_path(), PathBuf::from("/base/out/report.json"));
    }

    #[test]
    fn unknown_keys_are_line_anchored() {
        let text = GOOD.replace("count = 41", "count = 41\nstep = 2");
        let msg = parse(&text).unwrap_err().to_string();
        assert!(msg.contains("s.toml:17:"), "{msg}");
    }

    #[test]
    fn semantic_errors_point_at_the_key() {
        let msg = parse(&GOOD.replace("count = 41", "count = 4")).unwrap_err().to_string();
        assert!(msg.contains("s.toml:16:") && msg.contains("count"), "{msg}");
        let msg = parse(&GOOD.replace("r_start = 1.0", "r_start = 0.5")).unwrap_err().to_string();
        assert!(msg.contains("s.toml:14:"), "{msg}");
        let msg = parse(&GOOD.replace("dimension = 4", "dimension = 5")).unwrap_err().to_string();
        assert!(msg.contains("s.toml:3:"), "{msg}");
        let msg = parse(&GOOD.replace("checks = \"all\"", "checks = [\"NOPE\"]")).unwrap_err().to_string();
        assert!(msg.contains("s.toml:5:") && msg.contains("NOPE"), "{msg}");
        let msg = parse(&GOOD.replace("schema_version = 1", "schema_version = 2")).unwrap_err().to_string();
        assert!(msg.contains("s.toml:2:"), "{msg}");
    }
}
