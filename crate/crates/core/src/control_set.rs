//! Control-input sets: zonotopes over `(a, kappa)` fitted to a sliding
//! window of estimated controls.
//!
//! The fit solves, in per-axis scaled coordinates,
//!
//! ```text
//! min sum_i alpha_i   s.t.  u_j = c + sum_i delta_ij g_i   for every sample j,
//!                           |delta_ij| <= alpha_i,  alpha_i >= 0,
//! ```
//!
//! i.e. the smallest (by generator-length sum) zonotope with the fixed basis
//! directions that encloses every sample. Scaling matters because accelerations
//! and curvatures live on axes three orders of magnitude apart; without it the
//! angularly equispaced basis would be useless. The fitted set is then widened
//! by two small axis-aligned expansion generators so that one-step-ahead
//! controls remain covered between window updates.

use crate::error::{Error, Result};
use crate::lp;
use crate::vehicle::ControlSample;
use crate::zonotope::{Zonotope, NULL_GENERATOR_THRESHOLD};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use std::collections::VecDeque;

/// Sliding window over the most recent control estimates, oldest first.
#[derive(Clone, Debug)]
pub struct ControlWindow {
    samples: VecDeque<ControlSample>,
    capacity: usize,
}

impl ControlWindow {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity >= 1, "window capacity must be at least 1");
        Self { samples: VecDeque::with_capacity(capacity), capacity }
    }

    /// Appends a sample, evicting the oldest once the window is full.
    pub fn push(&mut self, sample: ControlSample) {
        if self.samples.len() == self.capacity {
            self.samples.pop_front();
        }
        self.samples.push_back(sample);
    }

    pub fn samples(&self) -> Vec<ControlSample> {
        self.samples.iter().cloned().collect()
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }
}

/// Fixed generator directions for the fit, unit vectors in scaled space.
#[derive(Clone, Debug, PartialEq)]
pub struct GeneratorBasis {
    directions: Vec<[f64; 2]>,
}

impl GeneratorBasis {
    /// `n_g` directions equispaced over the half-circle: angles `i*pi/n_g`.
    /// Two directions recover the coordinate axes.
    pub fn primitive(n_g: usize) -> Result<Self> {
        if n_g < 2 {
            return Err(Error::BasisTooSmall(n_g));
        }
        let directions = (0..n_g)
            .map(|i| {
                let phi = i as f64 * std::f64::consts::PI / n_g as f64;
                [phi.cos(), phi.sin()]
            })
            .collect();
        Ok(Self { directions })
    }

    pub fn directions(&self) -> &[[f64; 2]] {
        &self.directions
    }

    pub fn len(&self) -> usize {
        self.directions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.directions.is_empty()
    }
}

/// Per-axis scaling applied before the fit.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ControlScaling {
    pub a: f64,
    pub kappa: f64,
}

impl Default for ControlScaling {
    fn default() -> Self {
        Self { a: 2.0, kappa: 0.1 }
    }
}

/// Axis-aligned expansion generators appended after the fit. They act as a
/// safety margin so that small excursions of the next estimate beyond the
/// recent window still land inside the set.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExpansionRadii {
    pub a: f64,
    pub kappa: f64,
}

impl Default for ExpansionRadii {
    /// Sized at roughly 1.5x the standard deviation of the estimated control
    /// signals during steady straight-line driving (std is about 0.15 m/s^2
    /// for acceleration and 0.0105 1/m for curvature under the default noise
    /// levels), so routine estimator jitter stays covered with a buffer.
    fn default() -> Self {
        Self { a: 0.22, kappa: 0.016 }
    }
}

/// Raw fit output in control units: center and per-direction extents.
#[derive(Clone, Debug, PartialEq)]
pub struct ZonotopeFit {
    pub center: ControlSample,
    /// Extent along each basis direction, in scaled coordinates.
    pub alphas: Vec<f64>,
    /// LP objective: the sum of the alphas.
    pub objective: f64,
}

/// Fitted and expanded control-input set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ControlInputSetRepr", into = "ControlInputSetRepr")]
pub struct ControlInputSet {
    /// 2-dim zonotope over `(a, kappa)`.
    pub zonotope: Zonotope,
    pub alphas: Vec<f64>,
    pub center: ControlSample,
    /// The window the set was fitted to, oldest first.
    pub window: Vec<ControlSample>,
}

#[derive(Serialize, Deserialize)]
struct ControlInputSetRepr {
    center: Vec<f64>,
    generators: Vec<Vec<f64>>,
    alphas: Vec<f64>,
    window: Vec<[f64; 2]>,
}

impl From<ControlInputSet> for ControlInputSetRepr {
    fn from(s: ControlInputSet) -> Self {
        let center = s.zonotope.center().iter().cloned().collect();
        let generators = s
            .zonotope
            .generators()
            .column_iter()
            .map(|c| c.iter().cloned().collect())
            .collect();
        Self {
            center,
            generators,
            alphas: s.alphas,
            window: s.window.iter().map(|u| [u.a, u.kappa]).collect(),
        }
    }
}

impl TryFrom<ControlInputSetRepr> for ControlInputSet {
    type Error = Error;

    fn try_from(r: ControlInputSetRepr) -> Result<Self> {
        if r.center.len() != 2 {
            return Err(Error::DimensionMismatch(format!(
                "control set center must be 2-dim, got {}",
                r.center.len()
            )));
        }
        let mut g = DMatrix::zeros(2, r.generators.len());
        for (j, col) in r.generators.iter().enumerate() {
            if col.len() != 2 {
                return Err(Error::DimensionMismatch(format!(
                    "control set generator {j} must be 2-dim"
                )));
            }
            g[(0, j)] = col[0];
            g[(1, j)] = col[1];
        }
        let center = ControlSample { a: r.center[0], kappa: r.center[1] };
        let zonotope = Zonotope::new(DVector::from_vec(r.center), g)?;
        Ok(Self {
            zonotope,
            alphas: r.alphas,
            center,
            window: r.window.iter().map(|u| ControlSample { a: u[0], kappa: u[1] }).collect(),
        })
    }
}

impl ControlInputSet {
    /// Interval hull as `(a range, kappa range)`.
    pub fn hull(&self) -> (crate::interval::Interval, crate::interval::Interval) {
        let h = self.zonotope.interval_hull();
        (h[0], h[1])
    }

    pub fn contains(&self, u: &ControlSample, tol: f64) -> bool {
        self.zonotope
            .contains_point(&DVector::from_row_slice(&[u.a, u.kappa]), tol)
    }
}

/// Solves the enclosure LP over the window in scaled coordinates.
///
/// With a single sample the optimum degenerates to that sample with all
/// alphas zero, which is exactly the warm-up behavior wanted before the
/// window fills.
pub fn fit_zonotope(
    samples: &[ControlSample],
    basis: &GeneratorBasis,
    scaling: ControlScaling,
) -> Result<ZonotopeFit> {
    if samples.is_empty() {
        return Err(Error::EmptyWindow);
    }
    assert!(scaling.a > 0.0 && scaling.kappa > 0.0, "scaling must be positive");
    let n_g = basis.len();
    let n_s = samples.len();
    let scaled: Vec<[f64; 2]> = samples
        .iter()
        .map(|u| [u.a / scaling.a, u.kappa / scaling.kappa])
        .collect();

    // Columns: c+ (2), c- (2), alpha (n_g), delta+ (n_g*n_s),
    // delta- (n_g*n_s), slacks for both bound rows (2*n_g*n_s).
    let al = 4;
    let dp = al + n_g;
    let dm = dp + n_g * n_s;
    let s1 = dm + n_g * n_s;
    let s2 = s1 + n_g * n_s;
    let cols = s2 + n_g * n_s;
    let rows = 2 * n_s + 2 * n_g * n_s;
    let didx = |i: usize, j: usize| i * n_s + j;

    let mut a = DMatrix::zeros(rows, cols);
    let mut rhs = vec![0.0; rows];
    for (j, u) in scaled.iter().enumerate() {
        for d in 0..2 {
            let row = 2 * j + d;
            a[(row, d)] = 1.0;
            a[(row, 2 + d)] = -1.0;
            for (i, g) in basis.directions().iter().enumerate() {
                a[(row, dp + didx(i, j))] = g[d];
                a[(row, dm + didx(i, j))] = -g[d];
            }
            rhs[row] = u[d];
        }
    }
    let bound_base = 2 * n_s;
    for i in 0..n_g {
        for j in 0..n_s {
            // delta_ij - alpha_i <= 0
            let row = bound_base + 2 * didx(i, j);
            a[(row, dp + didx(i, j))] = 1.0;
            a[(row, dm + didx(i, j))] = -1.0;
            a[(row, al + i)] = -1.0;
            a[(row, s1 + didx(i, j))] = 1.0;
            // -delta_ij - alpha_i <= 0
            let row = row + 1;
            a[(row, dp + didx(i, j))] = -1.0;
            a[(row, dm + didx(i, j))] = 1.0;
            a[(row, al + i)] = -1.0;
            a[(row, s2 + didx(i, j))] = 1.0;
        }
    }
    let mut objective = vec![0.0; cols];
    for i in 0..n_g {
        objective[al + i] = 1.0;
    }

    let sol = lp::solve(&lp::StandardForm { objective, constraints: a, rhs })?;
    let center = ControlSample {
        a: (sol.x[0] - sol.x[2]) * scaling.a,
        kappa: (sol.x[1] - sol.x[3]) * scaling.kappa,
    };
    let alphas: Vec<f64> = (0..n_g).map(|i| sol.x[al + i]).collect();
    Ok(ZonotopeFit { center, alphas, objective: sol.objective })
}

/// Turns a fit into the final set: basis columns stretched by their alphas,
/// mapped back to control units, plus the two expansion generators. Null
/// columns (alphas or expansions of zero) are dropped.
pub fn expand_control_set(
    fit: &ZonotopeFit,
    basis: &GeneratorBasis,
    scaling: ControlScaling,
    expansion: ExpansionRadii,
    window: Vec<ControlSample>,
) -> Result<ControlInputSet> {
    assert_eq!(fit.alphas.len(), basis.len(), "fit/basis arity mismatch");
    if expansion.a < 0.0 || expansion.kappa < 0.0 {
        return Err(Error::NegativeRadius(expansion.a.min(expansion.kappa)));
    }
    let n_g = basis.len();
    let mut g = DMatrix::zeros(2, n_g + 2);
    for (i, dir) in basis.directions().iter().enumerate() {
        g[(0, i)] = fit.alphas[i] * dir[0] * scaling.a;
        g[(1, i)] = fit.alphas[i] * dir[1] * scaling.kappa;
    }
    g[(0, n_g)] = expansion.a;
    g[(1, n_g + 1)] = expansion.kappa;
    let zonotope = Zonotope::new(
        DVector::from_row_slice(&[fit.center.a, fit.center.kappa]),
        g,
    )?
    .remove_null_generators(NULL_GENERATOR_THRESHOLD);
    Ok(ControlInputSet {
        zonotope,
        alphas: fit.alphas.clone(),
        center: fit.center,
        window,
    })
}

/// Fit plus expansion straight from a window.
pub fn control_set_from_window(
    window: &ControlWindow,
    basis: &GeneratorBasis,
    scaling: ControlScaling,
    expansion: ExpansionRadii,
) -> Result<ControlInputSet> {
    let samples = window.samples();
    let fit = fit_zonotope(&samples, basis, scaling)?;
    expand_control_set(&fit, basis, scaling, expansion, samples)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const UNIT: ControlScaling = ControlScaling { a: 1.0, kappa: 1.0 };
    const NO_EXPANSION: ExpansionRadii = ExpansionRadii { a: 0.0, kappa: 0.0 };

    fn u(a: f64, kappa: f64) -> ControlSample {
        ControlSample { a, kappa }
    }

    #[test]
    fn window_evicts_oldest() {
        let mut w = ControlWindow::new(3);
        for k in 0..5 {
            w.push(u(k as f64, 0.0));
        }
        assert_eq!(w.len(), 3);
        let s = w.samples();
        assert_eq!(s[0].a, 2.0);
        assert_eq!(s[2].a, 4.0);
    }

    #[test]
    fn primitive_basis_small_sizes() {
        let b2 = GeneratorBasis::primitive(2).unwrap();
        assert_abs_diff_eq!(b2.directions()[0][0], 1.0);
        assert_abs_diff_eq!(b2.directions()[1][1], 1.0, epsilon = 1e-15);
        let b3 = GeneratorBasis::primitive(3).unwrap();
        for (i, expect) in [0.0, 60.0, 120.0].iter().enumerate() {
            let phi = b3.directions()[i][1].atan2(b3.directions()[i][0]).to_degrees();
            assert_abs_diff_eq!(phi, *expect, epsilon = 1e-12);
            let norm = (b3.directions()[i][0].powi(2) + b3.directions()[i][1].powi(2)).sqrt();
            assert_abs_diff_eq!(norm, 1.0, epsilon = 1e-15);
        }
        assert!(matches!(GeneratorBasis::primitive(1), Err(Error::BasisTooSmall(1))));
    }

    #[test]
    fn symmetric_pair_uses_one_direction() {
        // Samples {(1,0), (-1,0)} with the 3-direction basis: only the
        // 0-degree generator is needed, at extent 1.
        let basis = GeneratorBasis::primitive(3).unwrap();
        let fit = fit_zonotope(&[u(1.0, 0.0), u(-1.0, 0.0)], &basis, UNIT).unwrap();
        assert_abs_diff_eq!(fit.objective, 1.0, epsilon = 1e-9);
        assert_abs_diff_eq!(fit.center.a, 0.0, epsilon = 1e-9);
        assert_abs_diff_eq!(fit.center.kappa, 0.0, epsilon = 1e-9);
        assert_abs_diff_eq!(fit.alphas[0], 1.0, epsilon = 1e-9);
        assert_abs_diff_eq!(fit.alphas[1], 0.0, epsilon = 1e-9);
        assert_abs_diff_eq!(fit.alphas[2], 0.0, epsilon = 1e-9);
    }

    #[test]
    fn single_sample_degenerates_to_point() {
        let basis = GeneratorBasis::primitive(3).unwrap();
        let fit = fit_zonotope(&[u(0.7, -0.02)], &basis, ControlScaling::default()).unwrap();
        assert_abs_diff_eq!(fit.objective, 0.0, epsilon = 1e-9);
        assert_abs_diff_eq!(fit.center.a, 0.7, epsilon = 1e-9);
        assert_abs_diff_eq!(fit.center.kappa, -0.02, epsilon = 1e-9);
        // Warm-up set: the sample dilated by the expansion generators only.
        let set = expand_control_set(&fit, &basis, ControlScaling::default(), ExpansionRadii::default(), vec![u(0.7, -0.02)]).unwrap();
        assert_eq!(set.zonotope.num_generators(), 2);
        let (ha, hk) = set.hull();
        assert_abs_diff_eq!(ha.rad(), ExpansionRadii::default().a, epsilon = 1e-9);
        assert_abs_diff_eq!(hk.rad(), ExpansionRadii::default().kappa, epsilon = 1e-9);
    }

    #[test]
    fn identical_samples_cost_nothing() {
        let basis = GeneratorBasis::primitive(3).unwrap();
        let fit =
            fit_zonotope(&[u(0.3, 0.01); 5], &basis, ControlScaling::default()).unwrap();
        assert_abs_diff_eq!(fit.objective, 0.0, epsilon = 1e-9);
    }

    #[test]
    fn every_sample_is_enclosed() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        let basis = GeneratorBasis::primitive(3).unwrap();
        let scaling = ControlScaling::default();
        for _ in 0..50 {
            let samples: Vec<ControlSample> = (0..5)
                .map(|_| u(rng.random_range(-2.0..2.0), rng.random_range(-0.15..0.15)))
                .collect();
            let fit = fit_zonotope(&samples, &basis, scaling).unwrap();
            let set =
                expand_control_set(&fit, &basis, scaling, NO_EXPANSION, samples.clone()).unwrap();
            for s in &samples {
                assert!(set.contains(s, 1e-6), "sample {s:?} escaped the fit");
            }
        }
    }

    #[test]
    fn adding_a_sample_never_shrinks_the_objective() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let basis = GeneratorBasis::primitive(3).unwrap();
        let scaling = ControlScaling::default();
        for _ in 0..20 {
            let mut samples: Vec<ControlSample> = (0..3)
                .map(|_| u(rng.random_range(-2.0..2.0), rng.random_range(-0.1..0.1)))
                .collect();
            let before = fit_zonotope(&samples, &basis, scaling).unwrap().objective;
            samples.push(u(rng.random_range(-2.0..2.0), rng.random_range(-0.1..0.1)));
            let after = fit_zonotope(&samples, &basis, scaling).unwrap().objective;
            assert!(after >= before - 1e-9, "objective shrank: {before} -> {after}");
        }
    }

    #[test]
    fn fit_is_scale_equivariant() {
        let basis = GeneratorBasis::primitive(3).unwrap();
        let samples = vec![u(0.5, 0.02), u(-0.8, 0.05), u(0.2, -0.03), u(1.1, 0.0)];
        let scaled: Vec<ControlSample> = samples.iter().map(|s| u(3.0 * s.a, 3.0 * s.kappa)).collect();
        let f1 = fit_zonotope(&samples, &basis, ControlScaling::default()).unwrap();
        let f2 = fit_zonotope(&scaled, &basis, ControlScaling::default()).unwrap();
        assert_abs_diff_eq!(f2.center.a, 3.0 * f1.center.a, epsilon = 1e-7);
        assert_abs_diff_eq!(f2.center.kappa, 3.0 * f1.center.kappa, epsilon = 1e-7);
        for (a1, a2) in f1.alphas.iter().zip(&f2.alphas) {
            assert_abs_diff_eq!(*a2, 3.0 * a1, epsilon = 1e-7);
        }
    }

    #[test]
    fn expansion_widens_hull_by_exactly_the_radii() {
        let basis = GeneratorBasis::primitive(3).unwrap();
        let scaling = ControlScaling::default();
        let samples = vec![u(0.4, 0.01), u(-0.2, 0.04), u(0.9, -0.02)];
        let fit = fit_zonotope(&samples, &basis, scaling).unwrap();
        let tight = expand_control_set(&fit, &basis, scaling, NO_EXPANSION, samples.clone()).unwrap();
        let wide = expand_control_set(
            &fit,
            &basis,
            scaling,
            ExpansionRadii { a: 0.15, kappa: 0.006 },
            samples,
        )
        .unwrap();
        let (ta, tk) = tight.hull();
        let (wa, wk) = wide.hull();
        assert_abs_diff_eq!(wa.rad() - ta.rad(), 0.15, epsilon = 1e-12);
        assert_abs_diff_eq!(wk.rad() - tk.rad(), 0.006, epsilon = 1e-12);
        assert_abs_diff_eq!(wa.mid(), ta.mid(), epsilon = 1e-12);
    }

    #[test]
    fn fits_are_deterministic() {
        let basis = GeneratorBasis::primitive(3).unwrap();
        let samples = vec![u(0.5, 0.02), u(-0.8, 0.05), u(0.2, -0.03)];
        let f1 = fit_zonotope(&samples, &basis, ControlScaling::default()).unwrap();
        let f2 = fit_zonotope(&samples, &basis, ControlScaling::default()).unwrap();
        assert_eq!(f1.objective.to_bits(), f2.objective.to_bits());
        assert_eq!(f1.center, f2.center);
        assert_eq!(f1.alphas, f2.alphas);
    }

    #[test]
    fn serialization_carries_alphas_and_window() {
        let basis = GeneratorBasis::primitive(2).unwrap();
        let samples = vec![u(0.1, 0.0), u(0.3, 0.01)];
        let set = control_set_from_window(
            &{
                let mut w = ControlWindow::new(5);
                for s in &samples {
                    w.push(*s);
                }
                w
            },
            &basis,
            ControlScaling::default(),
            ExpansionRadii::default(),
        )
        .unwrap();
        let json = serde_json::to_value(&set).unwrap();
        assert!(json["center"].is_array());
        assert!(json["generators"].is_array());
        assert_eq!(json["alphas"].as_array().unwrap().len(), 2);
        assert_eq!(json["window"].as_array().unwrap().len(), 2);
        let back: ControlInputSet = serde_json::from_value(json).unwrap();
        assert_eq!(back, set);
    }
}
