//! Kinematic single-track vehicle model, Euler-forward discretized.
//!
//! State `x = (p_x, p_y, theta, v)`, controls `u = (a, kappa)`:
//!
//! ```text
//! p_x'   = p_x   + v cos(theta) T_s
//! p_y'   = p_y   + v sin(theta) T_s
//! theta' = theta + v kappa T_s
//! v'     = v     + a T_s
//! ```
//!
//! Path curvature stands in for the steering angle, which folds the wheelbase
//! into the control and keeps the model free of vehicle-specific geometry.
//! The augmented state appends `(a, kappa)` as random-walk states so the
//! filter can estimate the control the vehicle is currently applying.

use crate::interval::{Interval, IntervalMatrix};
use nalgebra::{SMatrix, SVector};
use serde::{Deserialize, Serialize};

pub const STATE_DIM: usize = 4;
pub const CONTROL_DIM: usize = 2;
pub const AUG_DIM: usize = 6;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    /// Sampling period [s].
    pub t_s: f64,
}

impl Default for ModelParams {
    fn default() -> Self {
        Self { t_s: 0.2 }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct VehicleState {
    pub px: f64,
    pub py: f64,
    pub theta: f64,
    pub v: f64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ControlSample {
    pub a: f64,
    pub kappa: f64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct AugmentedState {
    pub px: f64,
    pub py: f64,
    pub theta: f64,
    pub v: f64,
    pub a: f64,
    pub kappa: f64,
}

impl AugmentedState {
    pub fn new(pose: VehicleState, control: ControlSample) -> Self {
        Self {
            px: pose.px,
            py: pose.py,
            theta: pose.theta,
            v: pose.v,
            a: control.a,
            kappa: control.kappa,
        }
    }

    pub fn pose(&self) -> VehicleState {
        VehicleState { px: self.px, py: self.py, theta: self.theta, v: self.v }
    }

    pub fn control(&self) -> ControlSample {
        ControlSample { a: self.a, kappa: self.kappa }
    }

    pub fn to_vector(&self) -> SVector<f64, AUG_DIM> {
        SVector::from([self.px, self.py, self.theta, self.v, self.a, self.kappa])
    }

    pub fn from_vector(v: &SVector<f64, AUG_DIM>) -> Self {
        Self { px: v[0], py: v[1], theta: v[2], v: v[3], a: v[4], kappa: v[5] }
    }
}

/// One Euler step of the 4-dim model under the given control.
pub fn step_nominal(x: &VehicleState, u: &ControlSample, p: &ModelParams) -> VehicleState {
    VehicleState {
        px: x.px + x.v * x.theta.cos() * p.t_s,
        py: x.py + x.v * x.theta.sin() * p.t_s,
        theta: x.theta + x.v * u.kappa * p.t_s,
        v: x.v + u.a * p.t_s,
    }
}

/// One Euler step of the augmented model; the control states persist.
pub fn augmented_step(s: &AugmentedState, p: &ModelParams) -> AugmentedState {
    let next = step_nominal(&s.pose(), &s.control(), p);
    AugmentedState::new(next, s.control())
}

/// Exact Jacobian of [`augmented_step`] at `s`.
pub fn augmented_jacobian(s: &AugmentedState, p: &ModelParams) -> SMatrix<f64, AUG_DIM, AUG_DIM> {
    let t = p.t_s;
    let (sin_t, cos_t) = s.theta.sin_cos();
    let mut f = SMatrix::<f64, AUG_DIM, AUG_DIM>::identity();
    f[(0, 2)] = -s.v * sin_t * t;
    f[(0, 3)] = cos_t * t;
    f[(1, 2)] = s.v * cos_t * t;
    f[(1, 3)] = sin_t * t;
    f[(2, 3)] = s.kappa * t;
    f[(2, 5)] = s.v * t;
    f[(3, 4)] = t;
    f
}

/// Interval linearization matrices of the 4-dim step over a set of states
/// and controls: `theta` and `v` range over the state set's hull, `kappa`
/// over the control set's hull. Every pointwise Jacobian pair `(A, B)` on
/// those ranges lies entrywise inside the result.
///
/// ```text
///     | 1 0 r13 r14 |        | 0   0  |
/// A = | 0 1 r23 r24 |    B = | 0   0  |
///     | 0 0  1  r34 |        | 0  r_b |
///     | 0 0  0   1  |        | T_s 0  |
/// ```
///
/// with `r13 = -T_s v sin(theta)`, `r14 = T_s cos(theta)`,
/// `r23 = T_s v cos(theta)`, `r24 = T_s sin(theta)`, `r34 = T_s kappa`,
/// `r_b = T_s v`.
pub fn interval_matrices(
    theta: Interval,
    v: Interval,
    kappa: Interval,
    p: &ModelParams,
) -> (IntervalMatrix, IntervalMatrix) {
    let t = p.t_s;
    let sin_t = theta.sin();
    let cos_t = theta.cos();
    let one = Interval::point(1.0);

    let mut a = IntervalMatrix::zeros(STATE_DIM, STATE_DIM);
    for i in 0..STATE_DIM {
        a.set(i, i, one);
    }
    a.set(0, 2, v.mul(&sin_t).scale(-t));
    a.set(0, 3, cos_t.scale(t));
    a.set(1, 2, v.mul(&cos_t).scale(t));
    a.set(1, 3, sin_t.scale(t));
    a.set(2, 3, kappa.scale(t));

    let mut b = IntervalMatrix::zeros(STATE_DIM, CONTROL_DIM);
    b.set(2, 1, v.scale(t));
    b.set(3, 0, Interval::point(t));
    (a, b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const P: ModelParams = ModelParams { t_s: 0.2 };

    #[test]
    fn straight_coasting_advances_x_only() {
        let x = VehicleState { px: 0.0, py: 0.0, theta: 0.0, v: 10.0 };
        let next = step_nominal(&x, &ControlSample::default(), &P);
        assert_eq!(next, VehicleState { px: 2.0, py: 0.0, theta: 0.0, v: 10.0 });
    }

    #[test]
    fn one_step_with_both_controls() {
        let x = VehicleState { px: 0.0, py: 0.0, theta: 0.0, v: 10.0 };
        let u = ControlSample { a: 1.0, kappa: 0.1 };
        let next = step_nominal(&x, &u, &P);
        assert_abs_diff_eq!(next.px, 2.0);
        assert_abs_diff_eq!(next.py, 0.0);
        assert_abs_diff_eq!(next.theta, 0.2);
        assert_abs_diff_eq!(next.v, 10.2);
    }

    #[test]
    fn constant_acceleration_matches_closed_form() {
        // Euler telescoping: v_k = v0 + a k T, p_k = p0 + k v0 T + a T^2 k(k-1)/2.
        let a = 0.7;
        let v0 = 5.0;
        let mut s = AugmentedState::new(
            VehicleState { px: 1.0, py: 0.0, theta: 0.0, v: v0 },
            ControlSample { a, kappa: 0.0 },
        );
        for k in 1..=10 {
            s = augmented_step(&s, &P);
            let kf = k as f64;
            assert_abs_diff_eq!(s.v, v0 + a * kf * P.t_s, epsilon = 1e-12);
            let expect_px = 1.0 + kf * v0 * P.t_s + a * P.t_s * P.t_s * kf * (kf - 1.0) / 2.0;
            assert_abs_diff_eq!(s.px, expect_px, epsilon = 1e-12);
        }
    }

    /// Central finite differences as the derivative oracle.
    #[test]
    fn jacobian_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let h = 1e-5;
        let mut worst: f64 = 0.0;
        for _ in 0..100 {
            let s = AugmentedState {
                px: rng.random_range(-50.0..50.0),
                py: rng.random_range(-50.0..50.0),
                theta: rng.random_range(-3.2..3.2),
                v: rng.random_range(0.0..15.0),
                a: rng.random_range(-3.0..3.0),
                kappa: rng.random_range(-0.2..0.2),
            };
            let jac = augmented_jacobian(&s, &P);
            let base = s.to_vector();
            for j in 0..AUG_DIM {
                let mut plus = base;
                let mut minus = base;
                plus[j] += h;
                minus[j] -= h;
                let fp = augmented_step(&AugmentedState::from_vector(&plus), &P).to_vector();
                let fm = augmented_step(&AugmentedState::from_vector(&minus), &P).to_vector();
                for i in 0..AUG_DIM {
                    let fd = (fp[i] - fm[i]) / (2.0 * h);
                    worst = worst.max((fd - jac[(i, j)]).abs());
                }
            }
        }
        assert!(worst <= 1e-6, "finite-difference deviation {worst}");
    }

    #[test]
    fn degenerate_intervals_reproduce_the_jacobian() {
        let s = AugmentedState {
            px: 3.0,
            py: -1.0,
            theta: 0.4,
            v: 7.5,
            a: 1.0,
            kappa: 0.05,
        };
        let (a, b) = interval_matrices(
            Interval::point(s.theta),
            Interval::point(s.v),
            Interval::point(s.kappa),
            &P,
        );
        let jac = augmented_jacobian(&s, &P);
        for i in 0..STATE_DIM {
            for j in 0..STATE_DIM {
                let iv = a.get(i, j);
                assert_abs_diff_eq!(iv.lo, jac[(i, j)], epsilon = 1e-14);
                assert_abs_diff_eq!(iv.hi, jac[(i, j)], epsilon = 1e-14);
            }
        }
        assert_abs_diff_eq!(b.get(2, 1).mid(), s.v * P.t_s, epsilon = 1e-14);
        assert_eq!(b.get(2, 1).rad(), 0.0);
        assert_eq!(b.get(3, 0), Interval::point(P.t_s));
        assert_eq!(b.get(0, 0), Interval::point(0.0));
        assert_eq!(b.get(1, 1), Interval::point(0.0));
    }

    #[test]
    fn heading_uncertainty_spreads_position_rows() {
        // theta in [-0.1, 0.1], v = 10: the p_x/theta entry is the symmetric
        // range +-(T_s v sin 0.1); endpoint evaluation is exact here.
        let (a, _) = interval_matrices(
            Interval::new(-0.1, 0.1),
            Interval::point(10.0),
            Interval::point(0.0),
            &P,
        );
        let bound = P.t_s * 10.0 * 0.1f64.sin();
        let r13 = a.get(0, 2);
        assert_abs_diff_eq!(r13.lo, -bound, epsilon = 1e-12);
        assert_abs_diff_eq!(r13.hi, bound, epsilon = 1e-12);
        // cos is even, so r14 peaks at the interval midpoint.
        let r14 = a.get(0, 3);
        assert_abs_diff_eq!(r14.hi, P.t_s, epsilon = 1e-12);
        assert_abs_diff_eq!(r14.lo, P.t_s * 0.1f64.cos(), epsilon = 1e-12);
    }

    /// Sampling oracle: pointwise Jacobians over the ranges stay inside the
    /// interval matrices.
    #[test]
    fn interval_matrices_contain_sampled_jacobians() {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        let theta = Interval::new(-0.4, 0.9);
        let v = Interval::new(2.0, 11.0);
        let kappa = Interval::new(-0.15, 0.1);
        let (a, b) = interval_matrices(theta, v, kappa, &P);
        for _ in 0..1000 {
            let s = AugmentedState {
                px: 0.0,
                py: 0.0,
                theta: rng.random_range(theta.lo..=theta.hi),
                v: rng.random_range(v.lo..=v.hi),
                a: 0.0,
                kappa: rng.random_range(kappa.lo..=kappa.hi),
            };
            let jac = augmented_jacobian(&s, &P);
            for i in 0..STATE_DIM {
                for j in 0..STATE_DIM {
                    assert!(
                        a.get(i, j).contains(jac[(i, j)], 1e-12),
                        "A[{i}][{j}] = {} outside {:?}",
                        jac[(i, j)],
                        a.get(i, j)
                    );
                }
                // Control columns of the augmented Jacobian: a then kappa.
                assert!(b.get(i, 0).contains(jac[(i, 4)], 1e-12));
                assert!(b.get(i, 1).contains(jac[(i, 5)], 1e-12));
            }
        }
    }
}
