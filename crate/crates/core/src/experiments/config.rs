//! Scenario files.
//!
//! A scenario is a TOML document with a `[problem]` table and one or more
//! `[[analyses]]` entries; `schema_version` must be present and equal to
//! [`SCHEMA_VERSION`]. See `docs/scenario-schema.md` for the full layout.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::analytic::{critical_time_1d, PParameters};
use crate::error::{Error, Result};
use crate::interface::{DEFAULT_ABS_FLOOR, DEFAULT_REL_THRESHOLD};
use crate::mol::{build_grid, uniform_snapshots, IntegratorSettings, ProblemSpec, Profile};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub schema_version: u32,
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    pub problem: ProblemConfig,
    pub analyses: Vec<AnalysisConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    pub p: f64,
    #[serde(default = "default_x_left")]
    pub x_left: f64,
    #[serde(default = "default_x_right")]
    pub x_right: f64,
    #[serde(default = "default_n_cells")]
    pub n_cells: usize,
    #[serde(default)]
    pub bc_left: f64,
    #[serde(default)]
    pub bc_right: f64,
    pub initial: Profile,
    /// Final time. Exactly one of `t_end` and `t_end_critical` is required.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_end: Option<f64>,
    /// Final time as a multiple of the critical time `ĥt = q^{p-1}`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_end_critical: Option<f64>,
    #[serde(default = "default_snapshots")]
    pub snapshots: usize,
    #[serde(default)]
    pub integrator: IntegratorSettings,
}

fn default_x_left() -> f64 {
    -1.0
}
fn default_x_right() -> f64 {
    1.0
}
fn default_n_cells() -> usize {
    800
}
fn default_snapshots() -> usize {
    400
}
fn default_rel() -> f64 {
    DEFAULT_REL_THRESHOLD
}
fn default_floor() -> f64 {
    DEFAULT_ABS_FLOOR
}
fn default_levels() -> Vec<f64> {
    vec![0.02, 0.05, 0.1]
}
fn default_true() -> bool {
    true
}
fn default_one() -> f64 {
    1.0
}
fn default_every() -> usize {
    1
}
fn default_grad_floor() -> f64 {
    1e-8
}
fn default_offset() -> usize {
    3
}
fn default_window() -> usize {
    12
}
fn default_grids() -> Vec<usize> {
    vec![100, 200, 400]
}

/// Support threshold: `max(rel · max u, floor)` with the max over the trace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThresholdConfig {
    #[serde(default = "default_rel")]
    pub rel: f64,
    #[serde(default = "default_floor")]
    pub floor: f64,
}

impl Default for ThresholdConfig {
    fn default() -> Self {
        Self {
            rel: DEFAULT_REL_THRESHOLD,
            floor: DEFAULT_ABS_FLOOR,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BarrierKind {
    Memory,
    Bracket,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OrderRole {
    /// The companion run starts below the scenario problem.
    Lower,
    Upper,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum AnalysisConfig {
    /// Full space-time solution, every `every`-th snapshot.
    Waterfall {
        #[serde(default = "default_every")]
        every: usize,
    },
    LevelSets {
        #[serde(default = "default_levels")]
        levels: Vec<f64>,
        /// Also emit the support edge as the `M = 0⁺` curve.
        #[serde(default = "default_true")]
        include_edge: bool,
        #[serde(default)]
        threshold: ThresholdConfig,
        #[serde(default = "default_grad_floor")]
        gradient_floor: f64,
    },
    WaitingTime {
        #[serde(default)]
        monitor_x: f64,
        #[serde(default)]
        threshold: ThresholdConfig,
    },
    /// Edge-exponent fits and profile snapshots with reference columns.
    ExponentProfile {
        /// Times as multiples of `ĥt`.
        times_critical: Vec<f64>,
        #[serde(default)]
        threshold: ThresholdConfig,
        #[serde(default = "default_offset")]
        offset_cells: usize,
        #[serde(default = "default_window")]
        window_cells: usize,
        /// Free-edge fit; `false` holds the edge at the detected position.
        #[serde(default = "default_true")]
        refine_edge: bool,
    },
    BarrierCheck {
        check: BarrierKind,
        /// Memory check: decay exponent, defaults to `p/(p-2)`.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        delta: Option<f64>,
        #[serde(default = "default_one")]
        m: f64,
        #[serde(default = "default_one")]
        r: f64,
        /// Memory check: base point, defaults to the left support edge of the data.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        w: Option<f64>,
        /// Bracket check: monitored point and threshold.
        #[serde(default)]
        monitor_x: f64,
        #[serde(default)]
        threshold: ThresholdConfig,
    },
    /// Exact-solution study; the problem must have Barenblatt data.
    Convergence {
        #[serde(default = "default_grids")]
        grids: Vec<usize>,
        /// Translate each grid so the Barenblatt center is a cell midpoint.
        #[serde(default = "default_true")]
        center_at_midpoint: bool,
    },
    /// Solve a companion problem with other initial data and check ordering.
    Comparison {
        companion: Profile,
        #[serde(default = "default_lower")]
        role: OrderRole,
    },
    /// Time at which the support reaches `x`, against the exact Barenblatt
    /// arrival; the problem must have Barenblatt data.
    Arrival {
        x: f64,
        #[serde(default)]
        threshold: ThresholdConfig,
        #[serde(default = "default_arrival_tol")]
        tolerance: f64,
    },
}

fn default_arrival_tol() -> f64 {
    0.05
}

fn default_lower() -> OrderRole {
    OrderRole::Lower
}

impl AnalysisConfig {
    pub fn kind(&self) -> &'static str {
        match self {
            AnalysisConfig::Waterfall { .. } => "waterfall",
            AnalysisConfig::LevelSets { .. } => "level-sets",
            AnalysisConfig::WaitingTime { .. } => "waiting-time",
            AnalysisConfig::ExponentProfile { .. } => "exponent-profile",
            AnalysisConfig::BarrierCheck { .. } => "barrier-check",
            AnalysisConfig::Convergence { .. } => "convergence",
            AnalysisConfig::Comparison { .. } => "comparison",
            AnalysisConfig::Arrival { .. } => "arrival",
        }
    }
}

impl ProblemConfig {
    pub fn params(&self) -> Result<PParameters> {
        PParameters::one_d(self.p).map_err(|e| Error::config(e.to_string()))
    }

    pub fn t_end(&self) -> Result<f64> {
        match (self.t_end, self.t_end_critical) {
            (Some(t), None) => Ok(t),
            (None, Some(f)) => Ok(f * critical_time_1d(self.params()?)?),
            _ => Err(Error::config(
                "exactly one of problem.t_end and problem.t_end_critical must be set",
            )),
        }
    }

    pub fn to_spec(&self) -> Result<ProblemSpec> {
        let params = self.params()?;
        let grid = build_grid(self.x_left, self.x_right, self.n_cells)
            .map_err(|e| Error::config(e.to_string()))?;
        let spec = ProblemSpec {
            params,
            grid,
            bc_left: self.bc_left,
            bc_right: self.bc_right,
            initial: self.initial.clone(),
            t_end: self.t_end()?,
            integrator: self.integrator,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn snapshot_times(&self) -> Result<Vec<f64>> {
        if self.snapshots == 0 {
            return Err(Error::config("problem.snapshots must be >= 1"));
        }
        Ok(uniform_snapshots(self.t_end()?, self.snapshots))
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::config(format!(
                "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        if self.name.is_empty()
            || !self
                .name
                .chars()
                .all(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.'))
            || self.name.starts_with('.')
        {
            return Err(Error::config(format!(
                "scenario name {:?} must be nonempty and use only [A-Za-z0-9._-]",
                self.name
            )));
        }
        if self.analyses.is_empty() {
            return Err(Error::config("a scenario needs at least one analysis"));
        }
        let spec = self.problem.to_spec()?;
        self.problem.snapshot_times()?;
        for a in &self.analyses {
            match a {
                AnalysisConfig::Waterfall { every } if *every == 0 => {
                    return Err(Error::config("waterfall.every must be >= 1"));
                }
                AnalysisConfig::LevelSets { levels, .. } if levels.iter().any(|l| !(*l > 0.0)) => {
                    return Err(Error::config("level-sets levels must all be > 0"));
                }
                AnalysisConfig::ExponentProfile { times_critical, .. }
                    if times_critical.is_empty() || times_critical.iter().any(|t| !(*t >= 0.0)) =>
                {
                    return Err(Error::config("exponent-profile needs times_critical >= 0"));
                }
                AnalysisConfig::Convergence { grids, .. } => {
                    if grids.len() < 2 {
                        return Err(Error::config("convergence needs at least two grids"));
                    }
                    if spec.initial.barenblatt(spec.params)?.is_none() {
                        return Err(Error::config("convergence needs Barenblatt initial data"));
                    }
                }
                AnalysisConfig::Arrival { tolerance, .. } => {
                    if spec.initial.barenblatt(spec.params)?.is_none() {
                        return Err(Error::config("arrival needs Barenblatt initial data"));
                    }
                    if !(*tolerance > 0.0) {
                        return Err(Error::config("arrival tolerance must be > 0"));
                    }
                }
                _ => {}
            }
            let th = match a {
                AnalysisConfig::LevelSets { threshold, .. }
                | AnalysisConfig::WaitingTime { threshold, .. }
                | AnalysisConfig::ExponentProfile { threshold, .. }
                | AnalysisConfig::BarrierCheck { threshold, .. }
                | AnalysisConfig::Arrival { threshold, .. } => Some(threshold),
                _ => None,
            };
            if let Some(th) = th {
                if !(th.rel >= 0.0) || !(th.floor > 0.0) {
                    return Err(Error::config("threshold needs rel >= 0 and floor > 0"));
                }
            }
        }
        Ok(())
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        Self::from_toml_with_overrides(text, &[])
    }

    /// Parses `text`, applying `key.path=value` overrides before validation.
    pub fn from_toml_with_overrides(text: &str, overrides: &[String]) -> Result<Self> {
        let mut doc: toml::Value = toml::from_str(text)
            .map_err(|e| Error::config(format!("invalid scenario file: {e}")))?;
        for o in overrides {
            apply_override(&mut doc, o)?;
        }
        let cfg: ScenarioConfig = doc
            .try_into()
            .map_err(|e| Error::config(format!("invalid scenario file: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path, overrides: &[String]) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_with_overrides(&text, overrides)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("scenario config serializes")
    }
}

/// Sets `a.b.c = value` in a TOML document. The value is parsed as a TOML
/// literal when possible and taken as a string otherwise; array entries are
/// addressed by index (`analyses.0.every=2`).
pub fn apply_override(doc: &mut toml::Value, assignment: &str) -> Result<()> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| Error::config(format!("override {assignment:?} is not key=value")))?;
    let key = key.trim();
    let raw = raw.trim();
    if key.is_empty() {
        return Err(Error::config(format!(
            "override {assignment:?} has an empty key"
        )));
    }
    let value = parse_literal(raw);
    let parts: Vec<&str> = key.split('.').collect();
    let mut node = doc;
    for (i, part) in parts.iter().enumerate() {
        let last = i + 1 == parts.len();
        node = match node {
            toml::Value::Table(t) => {
                if last {
                    t.insert((*part).to_string(), value);
                    return Ok(());
                }
                t.entry((*part).to_string())
                    .or_insert_with(|| toml::Value::Table(Default::default()))
            }
            toml::Value::Array(a) => {
                let idx: usize = part.parse().map_err(|_| {
                    Error::config(format!("override {key}: {part:?} is not an index"))
                })?;
                let len = a.len();
                let slot = a.get_mut(idx).ok_or_else(|| {
                    Error::config(format!("override {key}: index {idx} >= {len}"))
                })?;
                if last {
                    *slot = value;
                    return Ok(());
                }
                slot
            }
            _ => {
                return Err(Error::config(format!(
                    "override {key}: {part:?} is not a table"
                )))
            }
        };
    }
    unreachable!("loop returns on the last key part")
}

fn parse_literal(raw: &str) -> toml::Value {
    let wrapped = format!("v = {raw}");
    match toml::from_str::<toml::Table>(&wrapped) {
        Ok(mut t) => t.remove("v").expect("key v present"),
        Err(_) => toml::Value::String(raw.to_string()),
    }
}
