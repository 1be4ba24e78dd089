//! Planar occupancy sets extracted from a reachable tube.
//!
//! Every tube step past the initial set is projected onto the position
//! plane, tidied (null generators dropped, parallel generators merged, count
//! capped), inflated by the vehicle body dilation, and turned into an
//! explicit convex polygon for export and plotting.

use crate::error::Result;
use crate::reachability::ReachableTube;
use crate::zonotope::{Zonotope, NULL_GENERATOR_THRESHOLD, PARALLEL_ANGLE_TOL};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OccupancyConfig {
    /// Half-extents added along the position axes for the vehicle body.
    pub dilation: [f64; 2],
    /// Maximum generators kept per occupancy set before dilation.
    pub generator_budget: usize,
    /// How the dilation scales across the horizon.
    pub schedule: DilationSchedule,
}

impl Default for OccupancyConfig {
    fn default() -> Self {
        Self {
            dilation: [0.9, 0.9],
            generator_budget: 10,
            schedule: DilationSchedule::Constant,
        }
    }
}

/// Dilation schedule over the prediction horizon.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DilationSchedule {
    /// Full dilation at every step.
    Constant,
    /// Dilation scaled by `step / horizon`, reaching the full value at the
    /// final step.
    LinearRamp,
}

/// Planar occupancy at one prediction step.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OccupancySet {
    /// Prediction step this set covers (1-based; step 0 is the initial set).
    pub step: usize,
    pub set: Zonotope,
    /// Counterclockwise boundary vertices.
    pub polygon: Vec<[f64; 2]>,
}

impl OccupancySet {
    pub fn area(&self) -> f64 {
        polygon_area(&self.polygon)
    }
}

/// Occupancy sets for steps `1..=horizon` of the tube.
pub fn extract_occupancy(tube: &ReachableTube, cfg: &OccupancyConfig) -> Result<Vec<OccupancySet>> {
    let horizon = tube.horizon();
    let mut sets = Vec::with_capacity(horizon);
    for (step, z) in tube.steps.iter().enumerate().skip(1) {
        let planar = z
            .project(&[0, 1])?
            .remove_null_generators(NULL_GENERATOR_THRESHOLD)
            .merge_parallel_generators(PARALLEL_ANGLE_TOL)
            .reduce_generators(cfg.generator_budget)?;
        let scale = match cfg.schedule {
            DilationSchedule::Constant => 1.0,
            DilationSchedule::LinearRamp => step as f64 / horizon as f64,
        };
        let dilated = planar.dilate(&[cfg.dilation[0] * scale, cfg.dilation[1] * scale])?;
        let polygon = polygonize(&dilated);
        sets.push(OccupancySet { step, set: dilated, polygon });
    }
    Ok(sets)
}

/// Boundary polygon of a planar zonotope, counterclockwise.
///
/// Generators are flipped into the upper half-plane and sorted by angle;
/// walking them in order and then in reverse traces the boundary, giving two
/// vertices per nonzero generator. Degenerate sets come back as a single
/// point or a two-vertex segment.
pub fn polygonize(z: &Zonotope) -> Vec<[f64; 2]> {
    assert_eq!(z.dim(), 2, "polygonize expects a planar zonotope");
    let mut gens: Vec<[f64; 2]> = Vec::with_capacity(z.num_generators());
    for j in 0..z.num_generators() {
        let col = z.generators().column(j);
        let (gx, gy) = (col[0], col[1]);
        if gx == 0.0 && gy == 0.0 {
            continue;
        }
        if gy < 0.0 || (gy == 0.0 && gx < 0.0) {
            gens.push([-gx, -gy]);
        } else {
            gens.push([gx, gy]);
        }
    }
    let c = z.center();
    if gens.is_empty() {
        return vec![[c[0], c[1]]];
    }
    gens.sort_by(|a, b| a[1].atan2(a[0]).total_cmp(&b[1].atan2(b[0])));

    let mut vertex = [c[0], c[1]];
    for g in &gens {
        vertex[0] -= g[0];
        vertex[1] -= g[1];
    }
    let mut polygon = Vec::with_capacity(2 * gens.len());
    polygon.push(vertex);
    let moves = gens
        .iter()
        .map(|g| [2.0 * g[0], 2.0 * g[1]])
        .chain(gens.iter().map(|g| [-2.0 * g[0], -2.0 * g[1]]));
    for step in moves.take(2 * gens.len() - 1) {
        vertex[0] += step[0];
        vertex[1] += step[1];
        polygon.push(vertex);
    }
    polygon
}

/// Signed shoelace area; positive for counterclockwise polygons, zero for
/// points and segments.
pub fn polygon_area(polygon: &[[f64; 2]]) -> f64 {
    if polygon.len() < 3 {
        return 0.0;
    }
    let mut twice = 0.0;
    for (i, p) in polygon.iter().enumerate() {
        let q = polygon[(i + 1) % polygon.len()];
        twice += p[0] * q[1] - p[1] * q[0];
    }
    0.5 * twice
}
