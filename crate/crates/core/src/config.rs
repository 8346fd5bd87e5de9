//! Experiment configuration files (TOML).
//!
//! ```toml
//! sample_period = 0.02
//!
//! [[agents]]
//! name = "target"
//! plant = { type = "pd", kp = 4.0, kd = 2.8 }
//!
//! [target]
//! agent = "target"
//! reference = { builtin = "fig2-target" }
//!
//! [[trainers]]
//! agent = "target"
//! scenario = { scale = [2.0, 0.5, 0.5] }
//! taps = 16
//! lead = 1
//! ```
//!
//! Everything except `agents` and `target` has a default. After
//! [`parse_config`] every default is filled in, so serializing the result
//! shows the complete experiment.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::agents::{build_agent, AgentModel, PlantSpec, DEFAULT_SAMPLE_PERIOD};
use crate::error::{Error, Result};
use crate::filter_design::{make_alpha, AlphaKind};
use crate::learning::{BoundPolicy, Chaining, DynamicsSource, Experiment, LearningConfig, TrainerSetup};
use crate::lti::{FrequencyGrid, TransferFunction, TransferMatrix, DEFAULT_GRID_LOW, DEFAULT_GRID_POINTS};
use crate::reference::{
    builtin_path, sample_path, SamplingMode, ScenarioMap, WaypointPath, BUILTIN_PATHS,
    DEFAULT_SEGMENT_DURATION,
};
use crate::scalar::Scalar;

const DEFAULT_TAPS: usize = 16;
const DEFAULT_MAP_TAPS: usize = 16;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_sample_period")]
    pub sample_period: f64,
    pub agents: Vec<AgentConfig>,
    pub target: TargetConfig,
    #[serde(default)]
    pub trainers: Vec<TrainerConfig>,
    #[serde(default)]
    pub learning: LearningSection,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

fn default_sample_period() -> f64 {
    DEFAULT_SAMPLE_PERIOD
}

/// A named agent. Give either `plant` (all three axes) or `axes`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentConfig {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub plant: Option<PlantConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub axes: Option<Vec<PlantConfig>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum PlantConfig {
    /// PD-controlled double integrator.
    Pd { kp: f64, kd: f64 },
    /// Open loop `num / den` in powers of z⁻¹.
    Rational { num: Vec<f64>, den: Vec<f64> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SamplingConfig {
    Step,
    #[default]
    Linear,
}

/// A waypoint path: a built-in name or explicit waypoints.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReferenceConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub builtin: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub waypoints: Option<Vec<[f64; 3]>>,
    /// Per-segment durations; uniform `segment_duration` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub durations: Option<Vec<f64>>,
    #[serde(default = "default_segment_duration")]
    pub segment_duration: f64,
    #[serde(default)]
    pub sampling: SamplingConfig,
}

fn default_segment_duration() -> f64 {
    DEFAULT_SEGMENT_DURATION
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetConfig {
    pub agent: String,
    pub reference: ReferenceConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub scale: [f64; 3],
    #[serde(default)]
    pub offset: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase", deny_unknown_fields)]
pub enum DynamicsConfig {
    Identity,
    /// Least-squares FIR fit of `M⁻¹`.
    Derived {
        #[serde(default = "default_map_taps")]
        taps: usize,
        #[serde(default)]
        lead: usize,
    },
    /// Per-axis FIR coefficients of `M̂⁻¹`.
    Explicit {
        x: Vec<f64>,
        y: Vec<f64>,
        z: Vec<f64>,
        #[serde(default)]
        lead: usize,
    },
}

fn default_map_taps() -> usize {
    DEFAULT_MAP_TAPS
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum AlphaConfig {
    #[default]
    Unity,
    Gain {
        value: f64,
    },
    /// First-order low-pass with `cutoff` in rad/sample.
    Lowpass {
        cutoff: f64,
    },
}

/// One trainer. `reference` (a path, related to the target's) and
/// `scenario` (an explicit scale and start point) are alternatives; with
/// neither the trainer flies the target's reference.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainerConfig {
    pub agent: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference: Option<ReferenceConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scenario: Option<ScenarioConfig>,
    /// Filled in by [`parse_config`]: identity for a trainer sharing the
    /// target's plant, otherwise a derived fit.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dynamics: Option<DynamicsConfig>,
    #[serde(default = "default_taps")]
    pub taps: usize,
    #[serde(default = "default_lead")]
    pub lead: usize,
    #[serde(default)]
    pub alpha: AlphaConfig,
}

fn default_taps() -> usize {
    DEFAULT_TAPS
}

fn default_lead() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LearningSection {
    #[serde(default)]
    pub delta_h: f64,
    #[serde(default)]
    pub delta_s: f64,
    #[serde(default = "default_lead")]
    pub head_start: usize,
    #[serde(default)]
    pub enforce: BoundPolicy,
    #[serde(default)]
    pub chaining: Chaining,
}

impl Default for LearningSection {
    fn default() -> Self {
        Self {
            delta_h: 0.0,
            delta_s: 0.0,
            head_start: 1,
            enforce: BoundPolicy::Strict,
            chaining: Chaining::Parallel,
        }
    }
}

/// Log-spaced grid from `low` to π rad/sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    #[serde(default = "default_points")]
    pub points: usize,
    #[serde(default = "default_low")]
    pub low: f64,
}

fn default_points() -> usize {
    DEFAULT_GRID_POINTS
}

fn default_low() -> f64 {
    DEFAULT_GRID_LOW
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            points: DEFAULT_GRID_POINTS,
            low: DEFAULT_GRID_LOW,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_dir")]
    pub dir: String,
    /// Write `convergence.csv`.
    #[serde(default = "default_true")]
    pub convergence: bool,
}

fn default_dir() -> String {
    "out".into()
}

fn default_true() -> bool {
    true
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: default_dir(),
            convergence: true,
        }
    }
}

fn config_err(path: impl Into<String>, message: impl Into<String>) -> Error {
    Error::Config {
        path: path.into(),
        message: message.into(),
    }
}

/// Reads, validates and normalizes a config file.
pub fn parse_config(path: impl AsRef<Path>) -> Result<ExperimentConfig> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    parse_config_str(&text)
}

pub fn parse_config_str(text: &str) -> Result<ExperimentConfig> {
    let de = toml::Deserializer::new(text);
    let mut cfg: ExperimentConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let path = if path == "." {
            "<document>".to_string()
        } else {
            path
        };
        config_err(path, e.into_inner().message().trim().to_string())
    })?;
    cfg.validate()?;
    cfg.fill_defaults();
    Ok(cfg)
}

impl ExperimentConfig {
    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| config_err("<document>", e.to_string()))
    }

    fn agent(&self, name: &str) -> Option<&AgentConfig> {
        self.agents.iter().find(|a| a.name == name)
    }

    fn plants(&self, name: &str) -> Option<Vec<PlantConfig>> {
        let agent = self.agent(name)?;
        match (&agent.plant, &agent.axes) {
            (Some(p), None) => Some(vec![p.clone(); 3]),
            (None, Some(axes)) => Some(axes.clone()),
            _ => None,
        }
    }

    /// Checks everything that can be checked without building models.
    pub fn validate(&self) -> Result<()> {
        if !(self.sample_period > 0.0 && self.sample_period.is_finite()) {
            return Err(config_err("sample_period", "must be positive"));
        }
        if self.agents.is_empty() {
            return Err(config_err("agents", "at least one agent is required"));
        }
        for (i, a) in self.agents.iter().enumerate() {
            let at = format!("agents[{i}]");
            if a.name.trim().is_empty() {
                return Err(config_err(format!("{at}.name"), "must not be empty"));
            }
            if self.agents[..i].iter().any(|b| b.name == a.name) {
                return Err(config_err(
                    format!("{at}.name"),
                    format!("duplicate agent `{}`", a.name),
                ));
            }
            match (&a.plant, &a.axes) {
                (Some(_), Some(_)) => return Err(config_err(&at, "give either `plant` or `axes`, not both")),
                (None, None) => return Err(config_err(&at, "missing `plant` or `axes`")),
                (None, Some(axes)) if axes.len() != 3 => {
                    return Err(config_err(
                        format!("{at}.axes"),
                        format!("expected 3 axes, got {}", axes.len()),
                    ))
                }
                _ => {}
            }
        }
        if self.agent(&self.target.agent).is_none() {
            return Err(config_err(
                "target.agent",
                format!("undefined agent `{}`", self.target.agent),
            ));
        }
        validate_reference(&self.target.reference, "target.reference")?;
        for (i, t) in self.trainers.iter().enumerate() {
            let at = format!("trainers[{i}]");
            if self.agent(&t.agent).is_none() {
                return Err(config_err(
                    format!("{at}.agent"),
                    format!("undefined agent `{}`", t.agent),
                ));
            }
            if t.reference.is_some() && t.scenario.is_some() {
                return Err(config_err(&at, "give either `reference` or `scenario`, not both"));
            }
            if let Some(r) = &t.reference {
                validate_reference(r, &format!("{at}.reference"))?;
            }
            if let Some(s) = &t.scenario {
                if s.scale.iter().any(|v| *v == 0.0 || !v.is_finite()) {
                    return Err(config_err(
                        format!("{at}.scenario.scale"),
                        "entries must be finite and non-zero",
                    ));
                }
            }
            if t.taps == 0 {
                return Err(config_err(format!("{at}.taps"), "must be at least 1"));
            }
            match &t.dynamics {
                Some(DynamicsConfig::Derived { taps: 0, .. }) => {
                    return Err(config_err(format!("{at}.dynamics.taps"), "must be at least 1"))
                }
                Some(DynamicsConfig::Explicit { x, y, z, .. }) => {
                    for (axis, c) in [("x", x), ("y", y), ("z", z)] {
                        if c.is_empty() {
                            return Err(config_err(
                                format!("{at}.dynamics.{axis}"),
                                "needs at least one coefficient",
                            ));
                        }
                    }
                }
                _ => {}
            }
            match t.alpha {
                AlphaConfig::Gain { value } if !value.is_finite() => {
                    return Err(config_err(format!("{at}.alpha.value"), "must be finite"))
                }
                AlphaConfig::Lowpass { cutoff } if !(cutoff > 0.0 && cutoff < std::f64::consts::PI) => {
                    return Err(config_err(
                        format!("{at}.alpha.cutoff"),
                        "must lie in (0, pi) rad/sample",
                    ))
                }
                _ => {}
            }
        }
        let l = &self.learning;
        if !(l.delta_h >= 0.0) {
            return Err(config_err("learning.delta_h", "must be non-negative"));
        }
        if !(l.delta_s >= 0.0) {
            return Err(config_err("learning.delta_s", "must be non-negative"));
        }
        if l.head_start == 0 {
            return Err(config_err("learning.head_start", "must be at least 1 sample"));
        }
        if self.grid.points < 2 {
            return Err(config_err("grid.points", "need at least 2 points"));
        }
        if !(self.grid.low > 0.0 && self.grid.low < std::f64::consts::PI) {
            return Err(config_err("grid.low", "must lie in (0, pi) rad/sample"));
        }
        if self.output.dir.is_empty() {
            return Err(config_err("output.dir", "must not be empty"));
        }
        Ok(())
    }

    /// Makes every implicit choice explicit.
    pub fn fill_defaults(&mut self) {
        let target_plants = self.plants(&self.target.agent);
        for i in 0..self.trainers.len() {
            if self.trainers[i].dynamics.is_none() {
                let same = self.plants(&self.trainers[i].agent) == target_plants;
                self.trainers[i].dynamics = Some(if same {
                    DynamicsConfig::Identity
                } else {
                    DynamicsConfig::Derived {
                        taps: DEFAULT_MAP_TAPS,
                        lead: 0,
                    }
                });
            }
        }
    }

    /// Builds models, samples references and designs nothing yet.
    pub fn resolve<S: Scalar>(&self) -> Result<Experiment<S>> {
        self.validate()?;
        let ts = S::lit(self.sample_period);
        let grid = FrequencyGrid::logspace(self.grid.points, S::lit(self.grid.low), S::PI())
            .map_err(|e| config_err("grid", e.to_string()))?;
        let build = |name: &str| -> Result<AgentModel<S>> {
            let idx = self
                .agents
                .iter()
                .position(|a| a.name == name)
                .expect("validated");
            let plants = self.plants(name).expect("validated");
            let specs: Vec<PlantSpec<S>> = plants.iter().map(plant_spec).collect();
            let specs: [PlantSpec<S>; 3] = specs.try_into().expect("three axes");
            build_agent(name, &specs, ts).map_err(|e| config_err(format!("agents[{idx}]"), e.to_string()))
        };
        let target = build(&self.target.agent)?;
        let target_path = waypoint_path::<S>(&self.target.reference, "target.reference")?;
        let reference = sample_path(&target_path, ts, sampling(self.target.reference.sampling))
            .map_err(|e| config_err("target.reference", e.to_string()))?;

        let mut trainers = Vec::with_capacity(self.trainers.len());
        for (i, t) in self.trainers.iter().enumerate() {
            let at = format!("trainers[{i}]");
            let agent = build(&t.agent)?;
            let scenario = if let Some(r) = &t.reference {
                let path = waypoint_path::<S>(r, &format!("{at}.reference"))?;
                ScenarioMap::relating(&target_path, &path)
                    .map_err(|e| config_err(format!("{at}.reference"), e.to_string()))?
            } else if let Some(s) = &t.scenario {
                ScenarioMap::new(s.scale.map(S::lit), s.offset.map(S::lit))
                    .map_err(|e| config_err(format!("{at}.scenario"), e.to_string()))?
            } else {
                ScenarioMap::identity()
            };
            let dynamics = match &t.dynamics {
                None | Some(DynamicsConfig::Identity) => DynamicsSource::Identity,
                Some(DynamicsConfig::Derived { taps, lead }) => DynamicsSource::Derived {
                    taps: *taps,
                    lead: *lead,
                },
                Some(DynamicsConfig::Explicit { x, y, z, lead }) => {
                    let fir =
                        |c: &Vec<f64>| TransferFunction::fir(c.iter().map(|&v| S::lit(v)).collect(), *lead);
                    let diag = [x, y, z]
                        .into_iter()
                        .map(fir)
                        .collect::<Result<Vec<_>>>()
                        .map_err(|e| config_err(format!("{at}.dynamics"), e.to_string()))?;
                    DynamicsSource::Explicit(TransferMatrix::from_diagonal(diag))
                }
            };
            let kind = match t.alpha {
                AlphaConfig::Unity => AlphaKind::Unity,
                AlphaConfig::Gain { value } => AlphaKind::Gain(S::lit(value)),
                AlphaConfig::Lowpass { cutoff } => AlphaKind::FirstOrderLowpass {
                    cutoff: S::lit(cutoff),
                },
            };
            let alpha = make_alpha(kind).map_err(|e| config_err(format!("{at}.alpha"), e.to_string()))?;
            trainers.push(TrainerSetup {
                agent,
                scenario,
                dynamics,
                alpha,
                taps: t.taps,
                lead: t.lead,
            });
        }

        Ok(Experiment {
            grid,
            target,
            reference,
            trainers,
            learning: LearningConfig {
                delta_h: S::lit(self.learning.delta_h),
                delta_s: S::lit(self.learning.delta_s),
                head_start: self.learning.head_start,
                enforce: self.learning.enforce,
                chaining: self.learning.chaining,
            },
        })
    }
}

fn validate_reference(r: &ReferenceConfig, at: &str) -> Result<()> {
    match (&r.builtin, &r.waypoints) {
        (Some(_), Some(_)) => Err(config_err(at, "give either `builtin` or `waypoints`, not both")),
        (None, None) => Err(config_err(at, "missing `builtin` or `waypoints`")),
        (Some(name), None) => {
            if !BUILTIN_PATHS.contains(&name.as_str()) {
                return Err(config_err(
                    format!("{at}.builtin"),
                    format!("unknown path `{name}`; known: {}", BUILTIN_PATHS.join(", ")),
                ));
            }
            if r.durations.is_some() {
                return Err(config_err(
                    format!("{at}.durations"),
                    "built-in paths use `segment_duration`",
                ));
            }
            check_segment_duration(r, at)
        }
        (None, Some(wps)) => {
            if wps.len() < 2 {
                return Err(config_err(format!("{at}.waypoints"), "need at least 2 waypoints"));
            }
            if let Some(d) = &r.durations {
                if d.len() + 1 != wps.len() {
                    return Err(config_err(
                        format!("{at}.durations"),
                        format!("expected {} durations, got {}", wps.len() - 1, d.len()),
                    ));
                }
            }
            check_segment_duration(r, at)
        }
    }
}

fn check_segment_duration(r: &ReferenceConfig, at: &str) -> Result<()> {
    if r.segment_duration > 0.0 && r.segment_duration.is_finite() {
        Ok(())
    } else {
        Err(config_err(format!("{at}.segment_duration"), "must be positive"))
    }
}

fn waypoint_path<S: Scalar>(r: &ReferenceConfig, at: &str) -> Result<WaypointPath<S>> {
    let seg = S::lit(r.segment_duration);
    if let Some(name) = &r.builtin {
        return builtin_path(name, seg).ok_or_else(|| config_err(format!("{at}.builtin"), "unknown path"));
    }
    let wps: Vec<[S; 3]> = r
        .waypoints
        .as_ref()
        .expect("validated")
        .iter()
        .map(|p| p.map(S::lit))
        .collect();
    let path = match &r.durations {
        Some(d) => WaypointPath::new("waypoints", wps, d.iter().map(|&v| S::lit(v)).collect()),
        None => WaypointPath::uniform("waypoints", wps, seg),
    };
    path.map_err(|e| config_err(at, e.to_string()))
}

fn plant_spec<S: Scalar>(p: &PlantConfig) -> PlantSpec<S> {
    match p {
        PlantConfig::Pd { kp, kd } => PlantSpec::PdDoubleIntegrator {
            kp: S::lit(*kp),
            kd: S::lit(*kd),
        },
        PlantConfig::Rational { num, den } => PlantSpec::Rational {
            num: num.iter().map(|&v| S::lit(v)).collect(),
            den: den.iter().map(|&v| S::lit(v)).collect(),
        },
    }
}

fn sampling(s: SamplingConfig) -> SamplingMode {
    match s {
        SamplingConfig::Step => SamplingMode::Step,
        SamplingConfig::Linear => SamplingMode::Linear,
    }
}
