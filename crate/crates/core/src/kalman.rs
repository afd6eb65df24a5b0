//! Constant-velocity Kalman filter over `(cx, cy, aspect, h)`.
//!
//! The state is the measurement plus its per-frame velocity. Process and
//! measurement noise are proportional to the box height, so a single pair of
//! weights covers objects at every scale. The aspect ratio uses fixed small
//! standard deviations since it is dimensionless.

use nalgebra::{SMatrix, SVector};

use crate::error::{Error, Result};
use crate::geometry::{BBox, StateVector};

pub type Mean = SVector<f64, 8>;
pub type Covariance = SMatrix<f64, 8, 8>;

const ASPECT_POS_STD: f64 = 1e-2;
const ASPECT_VEL_STD: f64 = 1e-5;
const ASPECT_MEAS_STD: f64 = 1e-1;

/// Filter estimate: `(cx, cy, aspect, h, vcx, vcy, vaspect, vh)` and its covariance.
#[derive(Debug, Clone, PartialEq)]
pub struct KalmanState {
    pub mean: Mean,
    pub covariance: Covariance,
}

impl KalmanState {
    /// The position half of the mean.
    pub fn measurement(&self) -> StateVector {
        [self.mean[0], self.mean[1], self.mean[2], self.mean[3]]
    }

    pub fn to_bbox(&self) -> BBox {
        BBox::from_state_unchecked(self.measurement())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KalmanFilter {
    /// Position noise weight, relative to box height.
    pub weight_position: f64,
    /// Velocity noise weight, relative to box height.
    pub weight_velocity: f64,
}

impl Default for KalmanFilter {
    fn default() -> Self {
        Self {
            weight_position: 1.0 / 20.0,
            weight_velocity: 1.0 / 160.0,
        }
    }
}

fn check_measurement(m: &StateVector) -> Result<()> {
    if m[3] > 0.0 {
        Ok(())
    } else {
        Err(Error::DegenerateMeasurement { height: m[3] })
    }
}

fn symmetrize(p: &Covariance) -> Covariance {
    (p + p.transpose()) * 0.5
}

fn transition() -> Covariance {
    let mut f = Covariance::identity();
    for i in 0..4 {
        f[(i, i + 4)] = 1.0;
    }
    f
}

impl KalmanFilter {
    pub fn new(weight_position: f64, weight_velocity: f64) -> Self {
        Self {
            weight_position,
            weight_velocity,
        }
    }

    pub fn initiate(&self, measurement: StateVector) -> Result<KalmanState> {
        check_measurement(&measurement)?;
        let h = measurement[3];
        let (wp, wv) = (self.weight_position, self.weight_velocity);
        let std = [
            2.0 * wp * h,
            2.0 * wp * h,
            ASPECT_POS_STD,
            2.0 * wp * h,
            10.0 * wv * h,
            10.0 * wv * h,
            ASPECT_VEL_STD,
            10.0 * wv * h,
        ];
        let mut mean = Mean::zeros();
        mean.fixed_rows_mut::<4>(0)
            .copy_from_slice(&measurement);
        Ok(KalmanState {
            mean,
            covariance: Covariance::from_diagonal(&Mean::from_iterator(std.iter().map(|s| s * s))),
        })
    }

    pub fn predict(&self, state: &KalmanState) -> KalmanState {
        let h = state.mean[3];
        let (wp, wv) = (self.weight_position, self.weight_velocity);
        let std = [
            wp * h,
            wp * h,
            ASPECT_POS_STD,
            wp * h,
            wv * h,
            wv * h,
            ASPECT_VEL_STD,
            wv * h,
        ];
        let q = Covariance::from_diagonal(&Mean::from_iterator(std.iter().map(|s| s * s)));
        let f = transition();
        KalmanState {
            mean: f * state.mean,
            covariance: symmetrize(&(f * state.covariance * f.transpose() + q)),
        }
    }

    pub fn update(&self, state: &KalmanState, measurement: StateVector) -> Result<KalmanState> {
        check_measurement(&measurement)?;
        let h = state.mean[3];
        let wp = self.weight_position;
        let r_std = SVector::<f64, 4>::new(wp * h, wp * h, ASPECT_MEAS_STD, wp * h);
        let r = SMatrix::<f64, 4, 4>::from_diagonal(&r_std.component_mul(&r_std));

        let p = &state.covariance;
        // H selects the first four components, so H·P·Hᵀ and P·Hᵀ are blocks of P.
        let innovation_cov = p.fixed_view::<4, 4>(0, 0) + r;
        let p_ht = p.fixed_view::<8, 4>(0, 0).into_owned();
        let chol = innovation_cov.cholesky().ok_or(Error::SingularInnovation)?;
        // K = P·Hᵀ·S⁻¹, solved as S·Kᵀ = H·P.
        let gain = chol.solve(&p_ht.transpose()).transpose();

        let z = SVector::<f64, 4>::from_row_slice(&measurement);
        let innovation = z - state.mean.fixed_rows::<4>(0);
        let mean = state.mean + gain * innovation;
        let covariance = p - gain * innovation_cov * gain.transpose();
        if mean.iter().any(|v| !v.is_finite()) {
            return Err(Error::SingularInnovation);
        }
        Ok(KalmanState {
            mean,
            covariance: symmetrize(&covariance),
        })
    }
}
