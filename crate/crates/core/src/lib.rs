//! Online occupancy prediction for surrounding vehicles.
//!
//! The pipeline turns a stream of noisy position/speed measurements of a
//! surrounding vehicle into short-horizon occupancy sets without assuming a
//! behavior model:
//!
//! 1. an EKF on a kinematic single-track model estimates pose plus the
//!    acceleration and path curvature the vehicle is currently applying,
//! 2. a linear program fits a minimal zonotope over a sliding window of those
//!    control estimates (the control-input set),
//! 3. interval-matrix reachability propagates the state set forward under
//!    every control in that set,
//! 4. each reachable set is projected to the plane, simplified, and dilated
//!    into an occupancy set.
//!
//! [`sim`] provides a closed-loop grid scenario that exercises the whole
//! pipeline and scores it (containment rates, areas, timings).

pub mod config;
pub mod control_set;
pub mod ekf;
pub mod error;
pub mod export;
pub mod interval;
pub mod lp;
pub mod occupancy;
pub mod reachability;
pub mod sim;
pub mod vehicle;
pub mod zonotope;

pub use config::RunConfig;
pub use control_set::{ControlInputSet, ControlWindow, GeneratorBasis};
pub use ekf::{EkfBelief, Measurement, NoiseConfig};
pub use error::{Error, Result};
pub use interval::{Interval, IntervalMatrix};
pub use occupancy::{OccupancyConfig, OccupancySet};
pub use reachability::{ReachabilityConfig, ReachableTube};
pub use sim::{MetricsReport, RunRecord, TimingReport};
pub use vehicle::{AugmentedState, ControlSample, ModelParams, VehicleState};
pub use zonotope::Zonotope;
