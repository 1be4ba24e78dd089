//! Extended Kalman filter on the augmented vehicle state.
//!
//! The filter estimates `(p_x, p_y, theta, v, a, kappa)` from noisy
//! `(p_x, p_y, v)` measurements. Acceleration and curvature are random-walk
//! states: their process noise is what lets the filter track control changes
//! it never observes directly. The covariance update uses the Joseph form,
//! which stays symmetric positive semidefinite under roundoff where the
//! textbook `(I - K H) P` form does not.

use crate::error::{Error, Result};
use crate::vehicle::{augmented_jacobian, augmented_step, AugmentedState, ControlSample, ModelParams, AUG_DIM};
use nalgebra::{SMatrix, SVector};
use serde::{Deserialize, Serialize};

pub const MEAS_DIM: usize = 3;

/// Position/speed measurement of the observed vehicle.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Measurement {
    pub px: f64,
    pub py: f64,
    pub v: f64,
}

impl Measurement {
    pub fn to_vector(&self) -> SVector<f64, MEAS_DIM> {
        SVector::from([self.px, self.py, self.v])
    }
}

/// Process/measurement noise and the initial covariance.
#[derive(Clone, Debug, PartialEq)]
pub struct NoiseConfig {
    pub q: SMatrix<f64, AUG_DIM, AUG_DIM>,
    pub r: SMatrix<f64, MEAS_DIM, MEAS_DIM>,
    pub p0: SMatrix<f64, AUG_DIM, AUG_DIM>,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        Self {
            q: SMatrix::from_diagonal(&SVector::from([1e-6, 1e-6, 1e-6, 1e-6, 0.04, 4e-4])),
            r: SMatrix::from_diagonal(&SVector::from([0.0025, 0.0025, 0.01])),
            p0: SMatrix::from_diagonal(&SVector::from([1.0, 1.0, 0.5, 1.0, 1.0, 0.01])),
        }
    }
}

fn measurement_matrix() -> SMatrix<f64, MEAS_DIM, AUG_DIM> {
    let mut h = SMatrix::zeros();
    h[(0, 0)] = 1.0;
    h[(1, 1)] = 1.0;
    h[(2, 3)] = 1.0;
    h
}

#[derive(Clone, Debug, PartialEq)]
pub struct EkfBelief {
    pub mean: AugmentedState,
    pub covariance: SMatrix<f64, AUG_DIM, AUG_DIM>,
}

impl EkfBelief {
    /// Initializes from the first two measurements: position and speed come
    /// from the newer one, the heading from the displacement between them,
    /// and the control states start at zero with the configured covariance.
    pub fn seeded(z0: &Measurement, z1: &Measurement, noise: &NoiseConfig) -> Self {
        let theta = (z1.py - z0.py).atan2(z1.px - z0.px);
        Self {
            mean: AugmentedState {
                px: z1.px,
                py: z1.py,
                theta,
                v: z1.v,
                a: 0.0,
                kappa: 0.0,
            },
            covariance: noise.p0,
        }
    }

    /// Time update: mean through the nonlinear step, covariance through the
    /// Jacobian at the prior mean.
    pub fn predict(&mut self, p: &ModelParams, noise: &NoiseConfig) {
        let f = augmented_jacobian(&self.mean, p);
        self.mean = augmented_step(&self.mean, p);
        self.covariance = f * self.covariance * f.transpose() + noise.q;
        self.symmetrize();
    }

    /// Measurement update (Joseph form). Returns the innovation.
    pub fn update(&mut self, z: &Measurement, noise: &NoiseConfig) -> Result<SVector<f64, MEAS_DIM>> {
        let h = measurement_matrix();
        let s = h * self.covariance * h.transpose() + noise.r;
        let s_inv = s.try_inverse().ok_or(Error::SingularInnovation)?;
        let k = self.covariance * h.transpose() * s_inv;
        let innovation = z.to_vector() - h * self.mean.to_vector();
        let mean = self.mean.to_vector() + k * innovation;
        self.mean = AugmentedState::from_vector(&mean);
        let ikh = SMatrix::<f64, AUG_DIM, AUG_DIM>::identity() - k * h;
        self.covariance = ikh * self.covariance * ikh.transpose() + k * noise.r * k.transpose();
        self.symmetrize();
        Ok(innovation)
    }

    /// Current control estimate: the `(a, kappa)` entries of the mean.
    pub fn estimated_control(&self) -> ControlSample {
        self.mean.control()
    }

    fn symmetrize(&mut self) {
        self.covariance = (self.covariance + self.covariance.transpose()) * 0.5;
    }
}
