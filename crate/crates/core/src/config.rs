//! Run configuration: sectioned TOML with defaults for every key.
//!
//! A missing file or section falls back to the built-in defaults, unknown
//! keys are rejected, and `validate` names the offending key in its error so
//! a bad file is diagnosable from the message alone.

use crate::control_set::{ControlScaling, ExpansionRadii, GeneratorBasis};
use crate::ekf::NoiseConfig;
use crate::error::{Error, Result};
use crate::occupancy::OccupancyConfig;
use crate::reachability::ReachabilityConfig;
use crate::vehicle::ModelParams;
use nalgebra::{SMatrix, SVector};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

#[derive(Clone, Debug, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub run: RunSection,
    pub scenario: ScenarioSection,
    pub estimator: EstimatorSection,
    pub control_set: ControlSetSection,
    pub reachability: ReachabilityConfig,
    pub occupancy: OccupancyConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSection {
    /// Prediction iterations in one experiment.
    pub iterations: usize,
    pub seed: u64,
    /// Sampling interval in seconds.
    pub t_s: f64,
    pub output_dir: PathBuf,
}

impl Default for RunSection {
    fn default() -> Self {
        Self {
            iterations: 150,
            seed: 42,
            t_s: 0.2,
            output_dir: PathBuf::from("out"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioSection {
    /// Straight length of one grid block in meters.
    pub block_length: f64,
    /// Corner radius of the quarter-arc turn blends in meters.
    pub corner_radius: f64,
    /// Turn sequence over the grid, one `L` or `R` per corner.
    pub turns: String,
    /// Extra straight after the last turn, meters.
    pub tail_length: f64,
    /// Target speed on straights, m/s.
    pub cruise_speed: f64,
    /// Target speed through corners, m/s.
    pub corner_speed: f64,
    /// Actuation noise on acceleration, m/s^2.
    pub sigma_a: f64,
    /// Actuation noise on curvature, 1/m.
    pub sigma_kappa: f64,
    /// Measurement noise on each position coordinate, m.
    pub sigma_pos: f64,
    /// Measurement noise on speed, m/s.
    pub sigma_v: f64,
}

impl Default for ScenarioSection {
    fn default() -> Self {
        Self {
            block_length: 65.0,
            corner_radius: 20.0,
            turns: "LRLL".to_string(),
            tail_length: 60.0,
            cruise_speed: 10.0,
            corner_speed: 9.0,
            sigma_a: 0.1,
            sigma_kappa: 0.003,
            sigma_pos: 0.05,
            sigma_v: 0.1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EstimatorSection {
    /// Process noise diagonal `(px, py, theta, v, a, kappa)`.
    pub q_diag: [f64; 6],
    /// Measurement noise diagonal `(px, py, v)`.
    pub r_diag: [f64; 3],
    /// Initial covariance diagonal.
    pub p0_diag: [f64; 6],
}

impl Default for EstimatorSection {
    fn default() -> Self {
        let d = NoiseConfig::default();
        Self {
            q_diag: std::array::from_fn(|i| d.q[(i, i)]),
            r_diag: std::array::from_fn(|i| d.r[(i, i)]),
            p0_diag: std::array::from_fn(|i| d.p0[(i, i)]),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ControlSetSection {
    /// Sliding-window length in samples.
    pub window: usize,
    /// Number of fitted generator directions.
    pub generators: usize,
    /// Acceleration scale used to normalize the fit.
    pub a_scale: f64,
    /// Curvature scale used to normalize the fit.
    pub kappa_scale: f64,
    /// Fixed acceleration expansion radius, m/s^2.
    pub expand_a: f64,
    /// Fixed curvature expansion radius, 1/m.
    pub expand_kappa: f64,
}

impl Default for ControlSetSection {
    fn default() -> Self {
        let scale = ControlScaling::default();
        let expand = ExpansionRadii::default();
        Self {
            window: 5,
            generators: 3,
            a_scale: scale.a,
            kappa_scale: scale.kappa,
            expand_a: expand.a,
            expand_kappa: expand.kappa,
        }
    }
}

impl RunConfig {
    /// Loads from a TOML file or falls back to defaults when no path is
    /// given. Parse errors keep the parser's line/column diagnostic.
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let cfg = match path {
            None => Self::default(),
            Some(p) => {
                let text = std::fs::read_to_string(p)?;
                toml::from_str(&text)
                    .map_err(|e| Error::InvalidConfig(format!("{}: {e}", p.display())))?
            }
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |key: &str, why: &str| Err(Error::InvalidConfig(format!("{key}: {why}")));
        if self.run.iterations == 0 {
            return bad("run.iterations", "must be at least 1");
        }
        if !(self.run.t_s > 0.0) {
            return bad("run.t_s", "must be positive");
        }
        let s = &self.scenario;
        if !(s.block_length > 0.0) {
            return bad("scenario.block_length", "must be positive");
        }
        if !(s.corner_radius > 0.0) {
            return bad("scenario.corner_radius", "must be positive");
        }
        if !(s.tail_length >= 0.0) {
            return bad("scenario.tail_length", "must be non-negative");
        }
        if !(s.cruise_speed > 0.0) {
            return bad("scenario.cruise_speed", "must be positive");
        }
        if !(s.corner_speed > 0.0) || s.corner_speed > s.cruise_speed {
            return bad("scenario.corner_speed", "must be in (0, cruise_speed]");
        }
        if let Some(c) = s.turns.chars().find(|c| *c != 'L' && *c != 'R') {
            return bad("scenario.turns", &format!("unknown turn '{c}', expected L or R"));
        }
        for (key, value) in [
            ("scenario.sigma_a", s.sigma_a),
            ("scenario.sigma_kappa", s.sigma_kappa),
            ("scenario.sigma_pos", s.sigma_pos),
            ("scenario.sigma_v", s.sigma_v),
        ] {
            if !(value >= 0.0) {
                return bad(key, "must be non-negative");
            }
        }
        let diag_ok = |d: &[f64]| d.iter().all(|x| *x >= 0.0 && x.is_finite());
        if !diag_ok(&self.estimator.q_diag) {
            return bad("estimator.q_diag", "entries must be finite and non-negative");
        }
        if !diag_ok(&self.estimator.r_diag) {
            return bad("estimator.r_diag", "entries must be finite and non-negative");
        }
        if !diag_ok(&self.estimator.p0_diag) {
            return bad("estimator.p0_diag", "entries must be finite and non-negative");
        }
        let c = &self.control_set;
        if c.window == 0 {
            return bad("control_set.window", "must be at least 1");
        }
        if c.generators < 2 {
            return bad("control_set.generators", "need at least 2 directions to span the plane");
        }
        if !(c.a_scale > 0.0) || !(c.kappa_scale > 0.0) {
            return bad("control_set.a_scale/kappa_scale", "must be positive");
        }
        if !(c.expand_a >= 0.0) || !(c.expand_kappa >= 0.0) {
            return bad("control_set.expand_a/expand_kappa", "must be non-negative");
        }
        if self.reachability.horizon == 0 {
            return bad("reachability.horizon", "must be at least 1");
        }
        if self.reachability.generator_budget < 4 {
            return bad("reachability.generator_budget", "must be at least the state dimension 4");
        }
        if !(self.reachability.initial_sigma_scale >= 0.0) {
            return bad("reachability.initial_sigma_scale", "must be non-negative");
        }
        if self.reachability.initial_radius_floor.iter().any(|r| !(*r >= 0.0)) {
            return bad("reachability.initial_radius_floor", "entries must be non-negative");
        }
        if self.occupancy.generator_budget < 2 {
            return bad("occupancy.generator_budget", "must be at least the plane dimension 2");
        }
        if self.occupancy.dilation.iter().any(|d| !(*d >= 0.0)) {
            return bad("occupancy.dilation", "entries must be non-negative");
        }
        Ok(())
    }

    pub fn model_params(&self) -> ModelParams {
        ModelParams { t_s: self.run.t_s }
    }

    pub fn noise_config(&self) -> NoiseConfig {
        NoiseConfig {
            q: SMatrix::from_diagonal(&SVector::from(self.estimator.q_diag)),
            r: SMatrix::from_diagonal(&SVector::from(self.estimator.r_diag)),
            p0: SMatrix::from_diagonal(&SVector::from(self.estimator.p0_diag)),
        }
    }

    pub fn control_scaling(&self) -> ControlScaling {
        ControlScaling { a: self.control_set.a_scale, kappa: self.control_set.kappa_scale }
    }

    pub fn expansion_radii(&self) -> ExpansionRadii {
        ExpansionRadii { a: self.control_set.expand_a, kappa: self.control_set.expand_kappa }
    }

    pub fn generator_basis(&self) -> Result<GeneratorBasis> {
        GeneratorBasis::primitive(self.control_set.generators)
    }
}
