//! Zonotopic reachability of the observed vehicle under every control in a
//! control-input set.
//!
//! Per step: the center moves through the nonlinear model under the control
//! center, while the generators are mapped by interval matrices that bound
//! the Jacobians over the current state hull and the control hull. By the
//! mean value theorem every exact one-step successor of a state in the set
//! under a control in the set lies inside the resulting interval-matrix
//! family, so enclosing that family keeps the tube sound. Generator counts
//! are capped after every step to keep the cost per step bounded.

use crate::control_set::ControlInputSet;
use crate::ekf::EkfBelief;
use crate::error::Result;
use crate::vehicle::{interval_matrices, step_nominal, ModelParams, VehicleState, STATE_DIM};
use crate::zonotope::{zonotope_inclusion, Zonotope, NULL_GENERATOR_THRESHOLD};
use nalgebra::DVector;
use serde::ser::SerializeSeq;
use serde::{Deserialize, Serialize, Serializer};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReachabilityConfig {
    /// Prediction horizon in steps.
    pub horizon: usize,
    /// Maximum generators kept per tube step.
    pub generator_budget: usize,
    /// Initial set radius in standard deviations of the belief covariance.
    pub initial_sigma_scale: f64,
    /// Per-coordinate lower bound on the initial radii `(px, py, theta, v)`.
    pub initial_radius_floor: [f64; 4],
}

impl Default for ReachabilityConfig {
    fn default() -> Self {
        Self {
            horizon: 10,
            generator_budget: 10,
            initial_sigma_scale: 2.0,
            initial_radius_floor: [0.0; 4],
        }
    }
}

/// Reachable sets indexed by step; `steps[0]` is the initial set.
#[derive(Clone, Debug, PartialEq)]
pub struct ReachableTube {
    pub steps: Vec<Zonotope>,
    pub t_s: f64,
}

impl ReachableTube {
    pub fn horizon(&self) -> usize {
        self.steps.len().saturating_sub(1)
    }
}

impl Serialize for ReachableTube {
    /// Array of zonotope objects tagged with step index and timestamp.
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Step<'a> {
            step: usize,
            t: f64,
            #[serde(flatten)]
            set: &'a Zonotope,
        }
        let mut seq = serializer.serialize_seq(Some(self.steps.len()))?;
        for (k, set) in self.steps.iter().enumerate() {
            seq.serialize_element(&Step { step: k, t: k as f64 * self.t_s, set })?;
        }
        seq.end()
    }
}

/// Initial radii from the belief: `sigma_scale` standard deviations of the
/// pose block of the covariance, floored per coordinate.
pub fn initial_radii(belief: &EkfBelief, sigma_scale: f64, floor: &[f64; 4]) -> [f64; 4] {
    let mut radii = [0.0; 4];
    for i in 0..STATE_DIM {
        let sigma = belief.covariance[(i, i)].max(0.0).sqrt();
        radii[i] = (sigma_scale * sigma).max(floor[i]);
    }
    radii
}

/// Axis-aligned initial set around the belief mean pose.
pub fn initial_set(belief: &EkfBelief, radii: &[f64; 4]) -> Result<Zonotope> {
    let pose = belief.mean.pose();
    Zonotope::point(DVector::from_row_slice(&[pose.px, pose.py, pose.theta, pose.v]))
        .dilate(radii)
}

/// One sound reachability step under every control in `u`.
pub fn propagate_step(
    z: &Zonotope,
    u: &ControlInputSet,
    p: &ModelParams,
    generator_budget: usize,
) -> Result<Zonotope> {
    let hull = z.interval_hull();
    let (theta, v) = (hull[2], hull[3]);
    let (_, kappa) = u.hull();

    let c = z.center();
    let pose = VehicleState { px: c[0], py: c[1], theta: c[2], v: c[3] };
    let next_center = step_nominal(&pose, &u.center, p);

    let (a, b) = interval_matrices(theta, v, kappa, p);
    let m = a
        .mul_point(z.generators())
        .hconcat(&b.mul_point(u.zonotope.generators()));
    let enclosed = zonotope_inclusion(
        DVector::from_row_slice(&[next_center.px, next_center.py, next_center.theta, next_center.v]),
        &m,
    )?;
    enclosed
        .remove_null_generators(NULL_GENERATOR_THRESHOLD)
        .reduce_generators(generator_budget)
}

/// Propagates an explicit initial set over the configured horizon.
pub fn propagate_set(
    z0: Zonotope,
    u: &ControlInputSet,
    p: &ModelParams,
    cfg: &ReachabilityConfig,
) -> Result<ReachableTube> {
    let mut steps = Vec::with_capacity(cfg.horizon + 1);
    steps.push(z0);
    for _ in 0..cfg.horizon {
        let next = propagate_step(steps.last().unwrap(), u, p, cfg.generator_budget)?;
        steps.push(next);
    }
    Ok(ReachableTube { steps, t_s: p.t_s })
}

/// Propagates from a belief, with the initial set sized by its covariance.
pub fn propagate(
    belief: &EkfBelief,
    u: &ControlInputSet,
    p: &ModelParams,
    cfg: &ReachabilityConfig,
) -> Result<ReachableTube> {
    let radii = initial_radii(belief, cfg.initial_sigma_scale, &cfg.initial_radius_floor);
    propagate_set(initial_set(belief, &radii)?, u, p, cfg)
}
