//! JSON experiment files.
//!
//! Range checks on individual numbers run inside deserialization so that
//! serde_json reports them with a line and column.

use std::fmt;
use std::path::Path;

use anyhow::{Context, Result};
use serde::{Deserialize, Deserializer};

use trajopt_core::{
    BoundaryConditions, Bounds, JointSpec, JointWaypoints, KinematicLimits, PlanningProblem,
    SwarmConfig, SyncMode, Variant,
};

/// Seed used when neither the command line nor the config provides one.
pub const DEFAULT_SEED: u64 = 20_240_601;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Positive(pub f64);

impl<'de> Deserialize<'de> for Positive {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let value = f64::deserialize(d)?;
        if value.is_finite() && value > 0.0 {
            Ok(Self(value))
        } else {
            Err(serde::de::Error::custom(format_args!(
                "expected a positive number, got {value}"
            )))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SyncModeName {
    Shared,
    PerJointMax,
}

impl From<SyncModeName> for SyncMode {
    fn from(name: SyncModeName) -> Self {
        match name {
            SyncModeName::Shared => SyncMode::Shared,
            SyncModeName::PerJointMax => SyncMode::PerJointMax,
        }
    }
}

impl fmt::Display for SyncModeName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Shared => "shared",
            Self::PerJointMax => "per-joint-max",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VariantName {
    Standard,
    Improved,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LimitsSection {
    pub v_max: Positive,
    pub a_max: Positive,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BoundarySection {
    pub v0: f64,
    pub a0: f64,
    pub vf: f64,
    pub af: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JointSection {
    pub waypoints: [f64; 4],
    pub limits: LimitsSection,
    #[serde(default)]
    pub boundary: BoundarySection,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundsSection {
    pub t_min: Positive,
    pub t_max: Positive,
}

impl Default for BoundsSection {
    fn default() -> Self {
        Self {
            t_min: Positive(0.1),
            t_max: Positive(6.0),
        }
    }
}

/// Every field optional; omitted ones take the library defaults.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SwarmSection {
    pub m: Option<usize>,
    #[serde(rename = "N")]
    pub n: Option<usize>,
    pub omega_max: Option<f64>,
    pub omega_min: Option<f64>,
    pub c11: Option<f64>,
    pub c21: Option<f64>,
    pub alpha: Option<f64>,
    pub phi: Option<f64>,
    pub mu: Option<f64>,
    pub penalty: Option<f64>,
    pub stagnation_window: Option<usize>,
    pub v_clamp_fraction: Option<f64>,
    pub variant: Option<VariantName>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub joints: Vec<JointSection>,
    #[serde(default)]
    pub bounds: BoundsSection,
    #[serde(default)]
    pub swarm: SwarmSection,
    pub sync_mode: Option<SyncModeName>,
    pub seed: Option<u64>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("in config {}", path.display()))
    }

    pub fn parse(text: &str) -> Result<Self> {
        let config: Self = serde_json::from_str(text)?;
        if config.joints.is_empty() {
            anyhow::bail!("joints: at least one joint is required");
        }
        Ok(config)
    }

    pub fn problem(&self, sync_override: Option<SyncModeName>) -> Result<PlanningProblem> {
        let mut joints = Vec::with_capacity(self.joints.len());
        for (i, j) in self.joints.iter().enumerate() {
            let waypoints = JointWaypoints::from(j.waypoints);
            let limits = KinematicLimits::new(j.limits.v_max.0, j.limits.a_max.0)
                .with_context(|| format!("joints[{i}].limits"))?;
            let boundary = BoundaryConditions {
                v_start: j.boundary.v0,
                a_start: j.boundary.a0,
                v_end: j.boundary.vf,
                a_end: j.boundary.af,
            };
            joints.push(JointSpec {
                waypoints,
                boundary,
                limits,
            });
        }
        let bounds = Bounds::uniform(3, self.bounds.t_min.0, self.bounds.t_max.0).context("bounds")?;
        let mode = sync_override.or(self.sync_mode).unwrap_or(SyncModeName::Shared);
        Ok(PlanningProblem::new(joints, bounds, mode.into())?)
    }

    pub fn swarm(&self, seed_override: Option<u64>, workers: Option<usize>) -> Result<SwarmConfig> {
        let d = SwarmConfig::default();
        let s = &self.swarm;
        let cfg = SwarmConfig {
            population: s.m.unwrap_or(d.population),
            max_iterations: s.n.unwrap_or(d.max_iterations),
            omega_max: s.omega_max.unwrap_or(d.omega_max),
            omega_min: s.omega_min.unwrap_or(d.omega_min),
            c11: s.c11.unwrap_or(d.c11),
            c21: s.c21.unwrap_or(d.c21),
            v_clamp_fraction: s.v_clamp_fraction.unwrap_or(d.v_clamp_fraction),
            penalty_coefficient: s.penalty.unwrap_or(d.penalty_coefficient),
            stagnation_window: s.stagnation_window.unwrap_or(d.stagnation_window),
            mu: s.mu.unwrap_or(d.mu),
            phi: s.phi.unwrap_or(d.phi),
            alpha: s.alpha.unwrap_or(d.alpha),
            seed: seed_override.or(self.seed).unwrap_or(DEFAULT_SEED),
            variant: match s.variant {
                Some(VariantName::Standard) => Variant::Standard,
                Some(VariantName::Improved) | None => Variant::Improved,
            },
            workers,
        };
        cfg.validate().context("swarm")?;
        Ok(cfg)
    }
}
