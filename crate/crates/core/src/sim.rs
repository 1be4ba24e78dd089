//! Closed-loop experiment: a simulated vehicle tracks a grid path under
//! actuation noise while the estimation pipeline watches it through noisy
//! measurements and predicts its occupancy.
//!
//! The tracked vehicle follows a waypoint path (straight blocks blended by
//! quarter-circle corners) with pure-pursuit steering and proportional speed
//! control. Each iteration the harness advances the world one step, runs the
//! estimator, refits the control-input set over the sliding window, and
//! propagates the occupancy prediction, recording everything with per-stage
//! timings. Metrics mirror the recorded run: containment of the next
//! observed control, per-step occupancy success against the true positions,
//! mean set areas, and a fixed bounding-box baseline for comparison.

use crate::config::{RunConfig, ScenarioSection};
use crate::control_set::{control_set_from_window, ControlInputSet, ControlWindow};
use crate::ekf::{EkfBelief, Measurement};
use crate::error::{Error, Result};
use crate::occupancy::{extract_occupancy, OccupancySet};
use crate::reachability::{propagate, propagate_set, ReachableTube};
use crate::vehicle::{step_nominal, AugmentedState, ControlSample, ModelParams, VehicleState};
use crate::zonotope::{Zonotope, CONTAINMENT_TOL, NULL_GENERATOR_THRESHOLD};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use std::time::Instant;

/// Spacing of the densified path polyline in meters. Small enough that the
/// discretization error is negligible next to the 0.5 m tracking budget.
const PATH_SAMPLE_SPACING: f64 = 0.25;

/// Deceleration assumed when shaping the approach-speed profile ahead of
/// corners. Kept below the controller's acceleration clamp so the
/// proportional law can actually follow the planned slowdown.
const BRAKE_DECEL: f64 = 1.5;

/// Forward search window (in samples) when re-localizing on the path. The
/// vehicle advances at most a couple of meters per step, so 16 m of slack
/// keeps the projection monotone without risking a lock onto a later,
/// geometrically close part of the grid.
const PROGRESS_WINDOW: usize = 64;

/// One densified point of the reference path.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PathSample {
    pub x: f64,
    pub y: f64,
    pub heading: f64,
    /// Target speed after profile smoothing, m/s.
    pub speed: f64,
    /// Cumulative arc length, m.
    pub s: f64,
}

/// Densified reference path with target speeds.
#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioPath {
    pub samples: Vec<PathSample>,
}

impl ScenarioPath {
    pub fn total_length(&self) -> f64 {
        self.samples.last().map_or(0.0, |p| p.s)
    }

    /// Nearest sample index at or after `from`, searched over a bounded
    /// forward window so progress along the path never moves backward.
    fn nearest_from(&self, from: usize, x: f64, y: f64) -> usize {
        let end = (from + PROGRESS_WINDOW).min(self.samples.len());
        let mut best = from.min(self.samples.len() - 1);
        let mut best_d = f64::INFINITY;
        for (i, p) in self.samples.iter().enumerate().take(end).skip(best) {
            let d = (p.x - x).hypot(p.y - y);
            if d < best_d {
                best_d = d;
                best = i;
            }
        }
        best
    }

    /// Point at arc length `s`, linearly interpolated; past the end the
    /// final heading is extrapolated so lookahead targets always exist.
    fn point_at(&self, s: f64) -> (f64, f64) {
        let last = self.samples.last().expect("path has samples");
        if s >= last.s {
            let d = s - last.s;
            return (last.x + d * last.heading.cos(), last.y + d * last.heading.sin());
        }
        let idx = self.samples.partition_point(|p| p.s < s);
        if idx == 0 {
            return (self.samples[0].x, self.samples[0].y);
        }
        let (a, b) = (&self.samples[idx - 1], &self.samples[idx]);
        let span = b.s - a.s;
        let t = if span > 0.0 { (s - a.s) / span } else { 0.0 };
        (a.x + t * (b.x - a.x), a.y + t * (b.y - a.y))
    }
}

enum Segment {
    Straight(f64),
    /// Quarter arc with the given radius; +1 turns left, -1 turns right.
    Arc(f64, f64),
}

/// Builds the grid path: a leading straight, one quarter-circle corner per
/// turn character with connecting straights, and a tail straight, annotated
/// with target speeds (cruise on straights, corner speed on arcs) smoothed
/// by a backward pass at the assumed braking rate.
pub fn generate_scenario(s: &ScenarioSection) -> Result<ScenarioPath> {
    let degenerate = |msg: &str| Error::DegenerateScenario(msg.to_string());
    let r = s.corner_radius;
    let mut segments = Vec::new();
    if s.turns.is_empty() {
        segments.push(Segment::Straight(s.block_length + s.tail_length));
    } else {
        if s.block_length <= 2.0 * r {
            return Err(degenerate("block_length must exceed twice the corner radius"));
        }
        segments.push(Segment::Straight(s.block_length - r));
        let count = s.turns.chars().count();
        for (i, c) in s.turns.chars().enumerate() {
            let sign = match c {
                'L' => 1.0,
                'R' => -1.0,
                _ => return Err(degenerate("turns may only contain L or R")),
            };
            segments.push(Segment::Arc(r, sign));
            let len = if i + 1 == count { s.tail_length } else { s.block_length - 2.0 * r };
            segments.push(Segment::Straight(len));
        }
    }

    let (mut x, mut y, mut heading, mut arc_s) = (0.0, 0.0, 0.0_f64, 0.0);
    let mut samples = vec![PathSample { x, y, heading, speed: s.cruise_speed, s: arc_s }];
    for segment in segments {
        match segment {
            Segment::Straight(len) => {
                if len <= 0.0 {
                    continue;
                }
                let n = (len / PATH_SAMPLE_SPACING).ceil().max(1.0) as usize;
                let (dx, dy) = (heading.cos(), heading.sin());
                for i in 1..=n {
                    let d = len * i as f64 / n as f64;
                    samples.push(PathSample {
                        x: x + d * dx,
                        y: y + d * dy,
                        heading,
                        speed: s.cruise_speed,
                        s: arc_s + d,
                    });
                }
                x += len * dx;
                y += len * dy;
                arc_s += len;
            }
            Segment::Arc(radius, sign) => {
                let arc_len = radius * std::f64::consts::FRAC_PI_2;
                let n = (arc_len / PATH_SAMPLE_SPACING).ceil().max(1.0) as usize;
                let (cx, cy) = (x - sign * radius * heading.sin(), y + sign * radius * heading.cos());
                for i in 1..=n {
                    let phi = std::f64::consts::FRAC_PI_2 * i as f64 / n as f64;
                    let h = heading + sign * phi;
                    samples.push(PathSample {
                        x: cx + sign * radius * h.sin(),
                        y: cy - sign * radius * h.cos(),
                        heading: h,
                        speed: s.corner_speed,
                        s: arc_s + arc_len * i as f64 / n as f64,
                    });
                }
                heading += sign * std::f64::consts::FRAC_PI_2;
                x = cx + sign * radius * heading.sin();
                y = cy - sign * radius * heading.cos();
                arc_s += arc_len;
            }
        }
    }
    if samples.len() < 2 {
        return Err(degenerate("path collapsed to a single point"));
    }
    for i in (0..samples.len() - 1).rev() {
        let ds = samples[i + 1].s - samples[i].s;
        let reachable = (samples[i + 1].speed.powi(2) + 2.0 * BRAKE_DECEL * ds).sqrt();
        samples[i].speed = samples[i].speed.min(reachable);
    }
    Ok(ScenarioPath { samples })
}

/// Tracking-controller gains, clamps, and actuator rate limits.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ControllerParams {
    pub lookahead_gain: f64,
    pub lookahead_min: f64,
    pub lookahead_max: f64,
    pub speed_gain: f64,
    pub a_max: f64,
    pub kappa_max: f64,
    /// Acceleration slew limit, m/s^3. Commands change gradually, like a
    /// comfort-tuned longitudinal controller.
    pub jerk_max: f64,
    /// Curvature slew limit, 1/(m s), the steering-rate analogue.
    pub kappa_rate_max: f64,
}

impl Default for ControllerParams {
    fn default() -> Self {
        Self {
            lookahead_gain: 0.6,
            lookahead_min: 3.0,
            lookahead_max: 8.0,
            speed_gain: 1.2,
            a_max: 3.0,
            kappa_max: 0.2,
            jerk_max: 0.75,
            kappa_rate_max: 0.10,
        }
    }
}

fn wrap_angle(a: f64) -> f64 {
    (a + std::f64::consts::PI).rem_euclid(2.0 * std::f64::consts::PI) - std::f64::consts::PI
}

/// World model: the tracked vehicle, its reference path, and the noise that
/// corrupts its actuation and the measurements of it.
pub struct Simulator {
    pub path: ScenarioPath,
    pub state: VehicleState,
    params: ModelParams,
    ctl: ControllerParams,
    progress: usize,
    /// Previous slew-limited command, the actuator's current setting.
    last_cmd: ControlSample,
    sigma_a: f64,
    sigma_kappa: f64,
    sigma_pos: f64,
    sigma_v: f64,
}

impl Simulator {
    /// Places the vehicle at the path start, aligned with it and already at
    /// the local profile speed, as a vehicle mid-drive.
    pub fn new(scenario: &ScenarioSection, t_s: f64) -> Result<Self> {
        let path = generate_scenario(scenario)?;
        let start = path.samples[0];
        Ok(Self {
            path,
            state: VehicleState { px: start.x, py: start.y, theta: start.heading, v: start.speed },
            params: ModelParams { t_s },
            ctl: ControllerParams::default(),
            progress: 0,
            last_cmd: ControlSample { a: 0.0, kappa: 0.0 },
            sigma_a: scenario.sigma_a,
            sigma_kappa: scenario.sigma_kappa,
            sigma_pos: scenario.sigma_pos,
            sigma_v: scenario.sigma_v,
        })
    }

    /// Noise-free tracking commands at the current state: pure-pursuit
    /// curvature toward a speed-scaled lookahead point and a proportional
    /// speed correction toward the local target speed, both clamped.
    pub fn commands(&mut self) -> ControlSample {
        self.progress = self.path.nearest_from(self.progress, self.state.px, self.state.py);
        let nearest = self.path.samples[self.progress];
        let lookahead = (self.ctl.lookahead_gain * self.state.v)
            .clamp(self.ctl.lookahead_min, self.ctl.lookahead_max);
        let (tx, ty) = self.path.point_at(nearest.s + lookahead);
        let (dx, dy) = (tx - self.state.px, ty - self.state.py);
        let dist = dx.hypot(dy);
        let alpha = wrap_angle(dy.atan2(dx) - self.state.theta);
        let kappa = if dist > 1e-9 { 2.0 * alpha.sin() / dist } else { 0.0 };
        let a = self.ctl.speed_gain * (nearest.speed - self.state.v);
        ControlSample {
            a: a.clamp(-self.ctl.a_max, self.ctl.a_max),
            kappa: kappa.clamp(-self.ctl.kappa_max, self.ctl.kappa_max),
        }
    }

    /// Advances the world one step: clamped tracking commands pass through
    /// the actuator slew limits, Gaussian actuation noise is added, then the
    /// kinematic step runs. Returns the new state and the control that was
    /// actually applied.
    pub fn step(&mut self, rng: &mut impl Rng) -> (VehicleState, ControlSample) {
        let raw = self.commands();
        let da = self.ctl.jerk_max * self.params.t_s;
        let dk = self.ctl.kappa_rate_max * self.params.t_s;
        let cmd = ControlSample {
            a: raw.a.clamp(self.last_cmd.a - da, self.last_cmd.a + da),
            kappa: raw.kappa.clamp(self.last_cmd.kappa - dk, self.last_cmd.kappa + dk),
        };
        self.last_cmd = cmd;
        let na: f64 = rng.sample(StandardNormal);
        let nk: f64 = rng.sample(StandardNormal);
        let applied = ControlSample {
            a: cmd.a + self.sigma_a * na,
            kappa: cmd.kappa + self.sigma_kappa * nk,
        };
        self.state = step_nominal(&self.state, &applied, &self.params);
        (self.state, applied)
    }

    /// Noisy position/speed measurement of the current state.
    pub fn observe(&self, rng: &mut impl Rng) -> Measurement {
        let n1: f64 = rng.sample(StandardNormal);
        let n2: f64 = rng.sample(StandardNormal);
        let n3: f64 = rng.sample(StandardNormal);
        Measurement {
            px: self.state.px + self.sigma_pos * n1,
            py: self.state.py + self.sigma_pos * n2,
            v: self.state.v + self.sigma_v * n3,
        }
    }

    /// Distance from the current position to the reference path, for
    /// tracking-quality checks.
    pub fn cross_track_error(&self) -> f64 {
        self.path
            .samples
            .iter()
            .map(|p| (p.x - self.state.px).hypot(p.y - self.state.py))
            .fold(f64::INFINITY, f64::min)
    }
}

/// Wall-clock cost of one iteration, split by pipeline stage.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageSeconds {
    pub estimator: f64,
    pub control_fit: f64,
    pub reachability: f64,
    pub occupancy: f64,
}

impl StageSeconds {
    pub fn total(&self) -> f64 {
        self.estimator + self.control_fit + self.reachability + self.occupancy
    }
}

/// Everything observed and predicted in one iteration.
#[derive(Clone, Debug, Serialize)]
pub struct IterationRecord {
    /// 1-based iteration index.
    pub k: usize,
    /// True pose after this step together with the control actually applied.
    pub true_state: AugmentedState,
    pub measurement: Measurement,
    /// Estimator mean after the update.
    pub estimate: AugmentedState,
    pub control_set: ControlInputSet,
    /// Whether this iteration's estimated control fell inside the previous
    /// iteration's control set; `None` on the first iteration.
    pub observed_inside_prev: Option<bool>,
    pub tube: ReachableTube,
    pub occupancy: Vec<OccupancySet>,
    pub stage_seconds: StageSeconds,
}

/// Full experiment record: per-iteration data plus the extra true states
/// needed to score the final iterations' predictions.
#[derive(Clone, Debug, Serialize)]
pub struct RunRecord {
    pub config: RunConfig,
    pub initial_state: VehicleState,
    pub iterations: Vec<IterationRecord>,
    /// True states for the `horizon` steps after the last iteration.
    pub truth_tail: Vec<AugmentedState>,
}

/// Aggregate quality metrics of a run. Deliberately excludes wall-clock
/// data so the report is identical across repeated runs of one seed; see
/// [`TimingReport`] for the cost side.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub iterations: usize,
    pub horizon: usize,
    /// Percentage of iterations whose next observed control stayed inside
    /// the current control set.
    pub control_containment_percent: f64,
    /// Occupancy success per prediction step, percent.
    pub occupancy_step_percent: Vec<f64>,
    pub occupancy_overall_percent: f64,
    /// Mean occupancy area per prediction step, m^2.
    pub mean_step_area: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub baseline: Option<BaselineMetrics>,
}

/// Occupancy areas of the fixed bounding-box control set, for comparison
/// against the adaptive sets.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BaselineMetrics {
    pub mean_step_area: Vec<f64>,
    /// Baseline over adaptive mean area at the final prediction step.
    pub final_step_area_ratio: f64,
}

/// Mean per-iteration wall-clock cost of a run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimingReport {
    pub iterations: usize,
    pub horizon: usize,
    pub mean_stage_seconds: StageSeconds,
    pub mean_total_seconds: f64,
}

/// Runs the full closed loop for the configured number of iterations.
///
/// The estimator is seeded from the first two measurements, so iteration 1
/// carries a zero control estimate and no containment flag. Every iteration
/// then advances the world, updates the belief, refits the control set over
/// the sliding window, and predicts the occupancy over the horizon. The
/// estimation pipeline draws nothing from the RNG, so the world trajectory
/// matches [`simulate_world`] for the same config and seed.
pub fn run_experiment(cfg: &RunConfig) -> Result<RunRecord> {
    cfg.validate()?;
    let params = cfg.model_params();
    let noise = cfg.noise_config();
    let basis = cfg.generator_basis()?;
    let scaling = cfg.control_scaling();
    let expansion = cfg.expansion_radii();
    let mut sim = Simulator::new(&cfg.scenario, cfg.run.t_s)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.run.seed);
    let initial_state = sim.state;

    let z0 = sim.observe(&mut rng);
    let mut window = ControlWindow::new(cfg.control_set.window);
    let mut belief: Option<EkfBelief> = None;
    let mut prev_set: Option<ControlInputSet> = None;
    let mut iterations = Vec::with_capacity(cfg.run.iterations);

    for k in 1..=cfg.run.iterations {
        let (state, applied) = sim.step(&mut rng);
        let z = sim.observe(&mut rng);

        let t0 = Instant::now();
        let b = match belief.take() {
            None => EkfBelief::seeded(&z0, &z, &noise),
            Some(mut b) => {
                b.predict(&params, &noise);
                b.update(&z, &noise)?;
                b
            }
        };
        let estimator = t0.elapsed().as_secs_f64();

        let estimate = b.mean;
        let u_hat = b.estimated_control();
        let observed_inside_prev = prev_set.as_ref().map(|s| s.contains(&u_hat, CONTAINMENT_TOL));

        let t1 = Instant::now();
        window.push(u_hat);
        let set = control_set_from_window(&window, &basis, scaling, expansion)?;
        let control_fit = t1.elapsed().as_secs_f64();

        let t2 = Instant::now();
        let tube = propagate(&b, &set, &params, &cfg.reachability)?;
        let reachability = t2.elapsed().as_secs_f64();

        let t3 = Instant::now();
        let occupancy = extract_occupancy(&tube, &cfg.occupancy)?;
        let occupancy_s = t3.elapsed().as_secs_f64();

        iterations.push(IterationRecord {
            k,
            true_state: AugmentedState::new(state, applied),
            measurement: z,
            estimate,
            control_set: set.clone(),
            observed_inside_prev,
            tube,
            occupancy,
            stage_seconds: StageSeconds {
                estimator,
                control_fit,
                reachability,
                occupancy: occupancy_s,
            },
        });
        prev_set = Some(set);
        belief = Some(b);
    }

    let mut truth_tail = Vec::with_capacity(cfg.reachability.horizon);
    for _ in 0..cfg.reachability.horizon {
        let (state, applied) = sim.step(&mut rng);
        truth_tail.push(AugmentedState::new(state, applied));
    }

    Ok(RunRecord { config: cfg.clone(), initial_state, iterations, truth_tail })
}

/// One world step paired with its measurement.
#[derive(Clone, Debug)]
pub struct WorldStep {
    pub state: AugmentedState,
    pub measurement: Measurement,
}

/// World trajectory without the estimation pipeline.
#[derive(Clone, Debug)]
pub struct WorldTrace {
    pub initial_state: VehicleState,
    pub steps: Vec<WorldStep>,
}

/// Simulates only the world loop. An initial measurement is drawn (and
/// discarded) before the first step so the RNG stream, and therefore the
/// trajectory, is identical to [`run_experiment`] under the same config.
pub fn simulate_world(cfg: &RunConfig) -> Result<WorldTrace> {
    cfg.validate()?;
    let mut sim = Simulator::new(&cfg.scenario, cfg.run.t_s)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.run.seed);
    let initial_state = sim.state;
    let _ = sim.observe(&mut rng);
    let steps = (0..cfg.run.iterations)
        .map(|_| {
            let (state, applied) = sim.step(&mut rng);
            let measurement = sim.observe(&mut rng);
            WorldStep { state: AugmentedState::new(state, applied), measurement }
        })
        .collect();
    Ok(WorldTrace { initial_state, steps })
}

/// Axis-aligned bounding box of a set of control samples, as a control set.
pub fn bounding_box_set(samples: &[ControlSample]) -> Result<ControlInputSet> {
    if samples.is_empty() {
        return Err(Error::EmptyRecord("no control samples to bound".to_string()));
    }
    let (mut a_lo, mut a_hi) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut k_lo, mut k_hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for u in samples {
        a_lo = a_lo.min(u.a);
        a_hi = a_hi.max(u.a);
        k_lo = k_lo.min(u.kappa);
        k_hi = k_hi.max(u.kappa);
    }
    let center = ControlSample { a: 0.5 * (a_lo + a_hi), kappa: 0.5 * (k_lo + k_hi) };
    let mut g = DMatrix::zeros(2, 2);
    g[(0, 0)] = 0.5 * (a_hi - a_lo);
    g[(1, 1)] = 0.5 * (k_hi - k_lo);
    let zonotope = Zonotope::new(DVector::from_row_slice(&[center.a, center.kappa]), g)?
        .remove_null_generators(NULL_GENERATOR_THRESHOLD);
    Ok(ControlInputSet { zonotope, alphas: vec![], center, window: samples.to_vec() })
}

/// Fixed control set enclosing every control the estimator observed over
/// the whole run, the non-adaptive comparison point.
pub fn worst_case_baseline(record: &RunRecord) -> Result<ControlInputSet> {
    let samples: Vec<ControlSample> = record
        .iterations
        .iter()
        .map(|it| ControlSample { a: it.estimate.a, kappa: it.estimate.kappa })
        .collect();
    if samples.is_empty() {
        return Err(Error::EmptyRecord("run has no iterations".to_string()));
    }
    bounding_box_set(&samples)
}

/// True planar position at the 1-based absolute step index, falling back to
/// the truth tail past the recorded iterations.
fn true_position(record: &RunRecord, index: usize) -> Option<DVector<f64>> {
    let state = if index == 0 {
        return Some(DVector::from_row_slice(&[record.initial_state.px, record.initial_state.py]));
    } else if index <= record.iterations.len() {
        record.iterations[index - 1].true_state.pose()
    } else {
        record.truth_tail.get(index - record.iterations.len() - 1)?.pose()
    };
    Some(DVector::from_row_slice(&[state.px, state.py]))
}

/// Scores a recorded run: control containment, per-step and overall
/// occupancy success against the true positions, and mean set areas.
pub fn compute_metrics(record: &RunRecord) -> Result<MetricsReport> {
    if record.iterations.is_empty() {
        return Err(Error::EmptyRecord("run has no iterations".to_string()));
    }
    let horizon = record.config.reachability.horizon;

    let checks: Vec<bool> = record
        .iterations
        .iter()
        .filter_map(|it| it.observed_inside_prev)
        .collect();
    // A single-iteration run has no follow-up control to check; count the
    // vacuous case as full containment to keep the rate finite.
    let control_containment_percent = if checks.is_empty() {
        100.0
    } else {
        100.0 * checks.iter().filter(|c| **c).count() as f64 / checks.len() as f64
    };

    let mut successes = vec![0usize; horizon];
    let mut counts = vec![0usize; horizon];
    let mut area_sums = vec![0.0; horizon];
    for it in &record.iterations {
        for occ in &it.occupancy {
            let j = occ.step;
            area_sums[j - 1] += occ.area();
            if let Some(pos) = true_position(record, it.k + j) {
                counts[j - 1] += 1;
                if occ.set.contains_point(&pos, CONTAINMENT_TOL) {
                    successes[j - 1] += 1;
                }
            }
        }
    }
    let occupancy_step_percent: Vec<f64> = successes
        .iter()
        .zip(&counts)
        .map(|(s, c)| if *c == 0 { 100.0 } else { 100.0 * *s as f64 / *c as f64 })
        .collect();
    let (total_s, total_c) = (successes.iter().sum::<usize>(), counts.iter().sum::<usize>());
    let occupancy_overall_percent =
        if total_c == 0 { 100.0 } else { 100.0 * total_s as f64 / total_c as f64 };
    let n = record.iterations.len() as f64;
    let mean_step_area = area_sums.iter().map(|s| s / n).collect();

    Ok(MetricsReport {
        iterations: record.iterations.len(),
        horizon,
        control_containment_percent,
        occupancy_step_percent,
        occupancy_overall_percent,
        mean_step_area,
        baseline: None,
    })
}

/// Re-propagates every recorded initial set under the whole-run bounding
/// box and reports the resulting mean areas against the adaptive ones.
pub fn baseline_metrics(record: &RunRecord, adaptive: &MetricsReport) -> Result<BaselineMetrics> {
    let fixed = worst_case_baseline(record)?;
    let cfg = &record.config;
    let params = cfg.model_params();
    let horizon = cfg.reachability.horizon;
    let mut sums = vec![0.0; horizon];
    for it in &record.iterations {
        let tube = propagate_set(it.tube.steps[0].clone(), &fixed, &params, &cfg.reachability)?;
        for occ in extract_occupancy(&tube, &cfg.occupancy)? {
            sums[occ.step - 1] += occ.area();
        }
    }
    let n = record.iterations.len() as f64;
    let mean_step_area: Vec<f64> = sums.iter().map(|s| s / n).collect();
    let final_step_area_ratio = mean_step_area[horizon - 1] / adaptive.mean_step_area[horizon - 1];
    Ok(BaselineMetrics { mean_step_area, final_step_area_ratio })
}

/// Mean per-iteration stage timings of a recorded run.
pub fn timing_report(record: &RunRecord) -> Result<TimingReport> {
    if record.iterations.is_empty() {
        return Err(Error::EmptyRecord("run has no iterations".to_string()));
    }
    let n = record.iterations.len() as f64;
    let mut sum = StageSeconds { estimator: 0.0, control_fit: 0.0, reachability: 0.0, occupancy: 0.0 };
    for it in &record.iterations {
        sum.estimator += it.stage_seconds.estimator;
        sum.control_fit += it.stage_seconds.control_fit;
        sum.reachability += it.stage_seconds.reachability;
        sum.occupancy += it.stage_seconds.occupancy;
    }
    let mean = StageSeconds {
        estimator: sum.estimator / n,
        control_fit: sum.control_fit / n,
        reachability: sum.reachability / n,
        occupancy: sum.occupancy / n,
    };
    Ok(TimingReport {
        iterations: record.iterations.len(),
        horizon: record.config.reachability.horizon,
        mean_total_seconds: mean.total(),
        mean_stage_seconds: mean,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::RunConfig;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::FRAC_PI_2;

    fn quiet(cfg: &mut RunConfig) {
        cfg.scenario.sigma_a = 0.0;
        cfg.scenario.sigma_kappa = 0.0;
        cfg.scenario.sigma_pos = 0.0;
        cfg.scenario.sigma_v = 0.0;
    }

    #[test]
    fn turnless_scenario_is_a_constant_speed_straight() {
        let section = ScenarioSection {
            turns: String::new(),
            block_length: 40.0,
            tail_length: 10.0,
            ..Default::default()
        };
        let path = generate_scenario(&section).unwrap();
        assert_abs_diff_eq!(path.total_length(), 50.0, epsilon = 1e-9);
        for p in &path.samples {
            assert_eq!(p.heading, 0.0);
            assert_eq!(p.y, 0.0);
            assert_abs_diff_eq!(p.speed, section.cruise_speed, epsilon = 1e-12);
        }
        let last = path.samples.last().unwrap();
        assert_abs_diff_eq!(last.x, 50.0, epsilon = 1e-9);
    }

    #[test]
    fn single_left_turn_is_a_quarter_arc_of_the_corner_radius() {
        let section = ScenarioSection { turns: "L".to_string(), ..Default::default() };
        let path = generate_scenario(&section).unwrap();
        let last = path.samples.last().unwrap();
        assert_abs_diff_eq!(last.heading, FRAC_PI_2, epsilon = 1e-9);
        // Heading rate over arc length equals the corner curvature on the
        // blend, exactly, by construction of the sampling.
        let arc: Vec<&PathSample> = path
            .samples
            .windows(2)
            .filter(|w| w[1].heading != w[0].heading)
            .map(|w| w)
            .flat_map(|w| [&w[0], &w[1]])
            .collect();
        assert!(!arc.is_empty());
        let (a, b) = (arc[0], arc[1]);
        let curvature = (b.heading - a.heading) / (b.s - a.s);
        assert_abs_diff_eq!(curvature, 1.0 / section.corner_radius, epsilon = 1e-9);
        // The approach straight slows toward corner speed; the junction
        // sample sits one spacing ahead of the arc, so its profile speed is
        // bounded by one braking increment above the corner speed.
        let before_arc = path
            .samples
            .iter()
            .take_while(|p| p.heading == 0.0)
            .last()
            .unwrap();
        let bound =
            (section.corner_speed.powi(2) + 2.0 * BRAKE_DECEL * PATH_SAMPLE_SPACING).sqrt();
        assert!(before_arc.speed <= bound + 1e-9, "{} > {bound}", before_arc.speed);
    }

    #[test]
    fn degenerate_geometry_is_rejected() {
        let section = ScenarioSection {
            turns: "L".to_string(),
            block_length: 10.0,
            corner_radius: 6.0,
            ..Default::default()
        };
        assert!(matches!(
            generate_scenario(&section),
            Err(Error::DegenerateScenario(_))
        ));
    }

    #[test]
    fn on_path_at_target_speed_commands_match_the_path_curvature() {
        let section = ScenarioSection { turns: "L".to_string(), ..Default::default() };
        let mut sim = Simulator::new(&section, 0.2).unwrap();
        // Teleport to the middle of the arc, aligned and at its speed.
        let (idx, mid) = sim
            .path
            .samples
            .iter()
            .enumerate()
            .min_by(|(_, a), (_, b)| {
                (a.heading - FRAC_PI_2 / 2.0)
                    .abs()
                    .total_cmp(&(b.heading - FRAC_PI_2 / 2.0).abs())
            })
            .map(|(i, p)| (i, *p))
            .unwrap();
        sim.state = VehicleState { px: mid.x, py: mid.y, theta: mid.heading, v: mid.speed };
        sim.progress = idx.saturating_sub(5);
        let cmd = sim.commands();
        assert_abs_diff_eq!(cmd.kappa, 1.0 / section.corner_radius, epsilon = 5e-3);
        assert!(cmd.a.abs() < 0.1, "unexpected speed correction {}", cmd.a);
    }

    #[test]
    fn below_target_speed_commands_acceleration() {
        let section = ScenarioSection { turns: String::new(), ..Default::default() };
        let mut sim = Simulator::new(&section, 0.2).unwrap();
        sim.state.v = section.cruise_speed / 2.0;
        let cmd = sim.commands();
        assert!(cmd.a > 0.0);
    }

    /// The default grid completes its four maneuvers within the 150-step
    /// run while staying within half a meter of the reference path.
    #[test]
    fn default_scenario_tracks_four_turns_within_budget() {
        let mut cfg = RunConfig::default();
        quiet(&mut cfg);
        let mut sim = Simulator::new(&cfg.scenario, cfg.run.t_s).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut turned = 0.0;
        let mut prev_theta = sim.state.theta;
        let mut worst_cross_track = 0.0_f64;
        for _ in 0..150 {
            let (state, _) = sim.step(&mut rng);
            turned += wrap_angle(state.theta - prev_theta).abs();
            prev_theta = state.theta;
            worst_cross_track = worst_cross_track.max(sim.cross_track_error());
        }
        assert!(
            turned >= 0.9 * 4.0 * FRAC_PI_2,
            "only {turned:.2} rad of heading change in 150 steps"
        );
        assert!(
            worst_cross_track < 0.5,
            "cross-track error reached {worst_cross_track:.3} m"
        );
    }

    #[test]
    fn observation_noise_behaves_as_configured() {
        let section = ScenarioSection::default();
        let mut quiet_section = section.clone();
        quiet_section.sigma_pos = 0.0;
        quiet_section.sigma_v = 0.0;
        let sim = Simulator::new(&quiet_section, 0.2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let z = sim.observe(&mut rng);
        assert_eq!(z.px, sim.state.px);
        assert_eq!(z.py, sim.state.py);
        assert_eq!(z.v, sim.state.v);

        // Same seed, same stream.
        let noisy = Simulator::new(&section, 0.2).unwrap();
        let mut r1 = ChaCha8Rng::seed_from_u64(9);
        let mut r2 = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..10 {
            assert_eq!(noisy.observe(&mut r1), noisy.observe(&mut r2));
        }

        // Sample mean of many observations concentrates at the true value.
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 10_000;
        let mean = (0..n).map(|_| noisy.observe(&mut rng).px).sum::<f64>() / n as f64;
        let tol = 3.0 * section.sigma_pos / (n as f64).sqrt();
        assert!(
            (mean - noisy.state.px).abs() <= tol,
            "sample mean off by {}",
            (mean - noisy.state.px).abs()
        );
    }

    #[test]
    fn single_iteration_run_is_finite_everywhere() {
        let mut cfg = RunConfig::default();
        cfg.run.iterations = 1;
        quiet(&mut cfg);
        let record = run_experiment(&cfg).unwrap();
        assert_eq!(record.iterations.len(), 1);
        let it = &record.iterations[0];
        assert!(it.estimate.to_vector().iter().all(|x| x.is_finite()));
        assert_eq!(it.observed_inside_prev, None);
        assert_eq!(it.tube.steps.len(), cfg.reachability.horizon + 1);
        assert_eq!(it.occupancy.len(), cfg.reachability.horizon);
        assert_eq!(record.truth_tail.len(), cfg.reachability.horizon);
        for occ in &it.occupancy {
            assert!(occ.area().is_finite());
        }
    }

    #[test]
    fn world_trace_and_experiment_share_the_same_trajectory() {
        let mut cfg = RunConfig::default();
        cfg.run.iterations = 40;
        let record = run_experiment(&cfg).unwrap();
        let trace = simulate_world(&cfg).unwrap();
        assert_eq!(trace.steps.len(), 40);
        for (it, ws) in record.iterations.iter().zip(&trace.steps) {
            assert_eq!(it.true_state, ws.state);
            assert_eq!(it.measurement, ws.measurement);
        }
    }

    #[test]
    fn repeated_runs_are_identical() {
        let mut cfg = RunConfig::default();
        cfg.run.iterations = 25;
        let a = run_experiment(&cfg).unwrap();
        let b = run_experiment(&cfg).unwrap();
        let ma = compute_metrics(&a).unwrap();
        let mb = compute_metrics(&b).unwrap();
        assert_eq!(ma, mb);
        assert_eq!(
            serde_json::to_string(&ma).unwrap(),
            serde_json::to_string(&mb).unwrap()
        );
    }

    #[test]
    fn bounding_box_set_covers_exactly_the_sample_ranges() {
        let samples = [
            ControlSample { a: -1.0, kappa: 0.0 },
            ControlSample { a: 1.0, kappa: 0.1 },
        ];
        let set = bounding_box_set(&samples).unwrap();
        let (a, kappa) = set.hull();
        assert_abs_diff_eq!(a.lo, -1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(a.hi, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(kappa.lo, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(kappa.hi, 0.1, epsilon = 1e-12);

        let single = bounding_box_set(&samples[..1]).unwrap();
        assert_eq!(single.zonotope.num_generators(), 0);
        assert!(single.contains(&samples[0], 1e-12));

        assert!(matches!(bounding_box_set(&[]), Err(Error::EmptyRecord(_))));
    }

    #[test]
    fn metrics_are_bounded_and_overall_matches_the_step_mean() {
        let mut cfg = RunConfig::default();
        cfg.run.iterations = 30;
        cfg.reachability.horizon = 5;
        let record = run_experiment(&cfg).unwrap();
        let metrics = compute_metrics(&record).unwrap();
        assert!((0.0..=100.0).contains(&metrics.control_containment_percent));
        assert_eq!(metrics.occupancy_step_percent.len(), 5);
        for rate in &metrics.occupancy_step_percent {
            assert!((0.0..=100.0).contains(rate));
        }
        let mean: f64 =
            metrics.occupancy_step_percent.iter().sum::<f64>() / metrics.horizon as f64;
        assert_abs_diff_eq!(metrics.occupancy_overall_percent, mean, epsilon = 1e-9);
        for area in &metrics.mean_step_area {
            assert!(*area > 0.0);
        }
    }

    #[test]
    fn baseline_areas_dominate_the_adaptive_areas() {
        let mut cfg = RunConfig::default();
        cfg.run.iterations = 40;
        let record = run_experiment(&cfg).unwrap();
        let metrics = compute_metrics(&record).unwrap();
        let baseline = baseline_metrics(&record, &metrics).unwrap();
        for (b, a) in baseline.mean_step_area.iter().zip(&metrics.mean_step_area) {
            assert!(b >= a, "baseline area {b} below adaptive {a}");
        }
        assert!(baseline.final_step_area_ratio >= 1.0);
    }

    #[test]
    fn saturated_occupancy_scores_one_hundred_percent() {
        let mut cfg = RunConfig::default();
        cfg.run.iterations = 15;
        cfg.occupancy.dilation = [50.0, 50.0];
        let record = run_experiment(&cfg).unwrap();
        let metrics = compute_metrics(&record).unwrap();
        assert_eq!(metrics.occupancy_overall_percent, 100.0);
        for rate in &metrics.occupancy_step_percent {
            assert_eq!(*rate, 100.0);
        }
    }

    #[test]
    fn timing_report_averages_the_recorded_stages() {
        let mut cfg = RunConfig::default();
        cfg.run.iterations = 5;
        let record = run_experiment(&cfg).unwrap();
        let timing = timing_report(&record).unwrap();
        assert_eq!(timing.iterations, 5);
        assert!(timing.mean_total_seconds > 0.0);
        assert_abs_diff_eq!(
            timing.mean_total_seconds,
            timing.mean_stage_seconds.total(),
            epsilon = 1e-15
        );
    }
}
