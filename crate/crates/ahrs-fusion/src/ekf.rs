//! Extended Kalman Filter baseline fusing gyro propagation with
//! accelerometer/magnetometer attitude measurements.
//!
//! The state is the Euler-angle triple itself; the process model is the
//! Euler rate map discretized with forward Euler, and the measurement model
//! is the per-sensor attitude extraction with identity measurement matrix.
//! Innovations are wrapped to the shortest arc and the covariance update
//! uses the Joseph form with re-symmetrization, which keeps P positive
//! semidefinite in long runs. Degenerate measurements (free fall, vertical
//! field) skip the affected components instead of failing.

use nalgebra::{Matrix3, Vector3};
use thiserror::Error;

use crate::attitude::{
    accel_attitude, integrate_gyro, mag_yaw, wrap, AccelVector, AttitudeError, BodyRates,
    EulerAngles, MagVector,
};
use crate::dataset::LabeledDataset;

#[derive(Debug, Error)]
pub enum EkfError {
    #[error("invalid EKF config: {0}")]
    Config(String),
    #[error(transparent)]
    Attitude(#[from] AttitudeError),
}

#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct EkfConfig {
    /// Process-noise variances (rad²/s) for roll, pitch, yaw.
    pub q_diag: [f64; 3],
    /// Measurement-noise variances (rad²) for the accel roll/pitch and mag yaw.
    pub r_diag: [f64; 3],
    /// Initial state variances (rad²).
    pub p0_diag: [f64; 3],
    pub initial_attitude: EulerAngles,
}

impl Default for EkfConfig {
    /// Hand-tuned starting point, not a claim of optimality.
    fn default() -> Self {
        Self {
            q_diag: [1e-4, 1e-4, 1e-4],
            r_diag: [1e-2, 1e-2, 4e-2],
            p0_diag: [1e-2, 1e-2, 1e-2],
            initial_attitude: EulerAngles::default(),
        }
    }
}

impl EkfConfig {
    pub fn validate(&self) -> Result<(), EkfError> {
        for (name, diag) in [
            ("q_diag", &self.q_diag),
            ("r_diag", &self.r_diag),
            ("p0_diag", &self.p0_diag),
        ] {
            if diag.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
                return Err(EkfError::Config(format!("{name} entries must be > 0")));
            }
        }
        if !self.initial_attitude.is_finite() {
            return Err(EkfError::Config("initial attitude must be finite".into()));
        }
        Ok(())
    }
}

/// Attitude estimate plus its 3×3 error covariance.
#[derive(Debug, Clone, PartialEq)]
pub struct EkfState {
    pub attitude: EulerAngles,
    pub covariance: Matrix3<f64>,
}

/// Which measurement components the last update actually used.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MeasurementUsage {
    pub roll_pitch: bool,
    pub yaw: bool,
}

/// Jacobian of the Euler rate map with respect to the attitude, evaluated
/// at the given state and body rates.
pub fn euler_rate_jacobian(att: EulerAngles, w: BodyRates) -> Result<Matrix3<f64>, AttitudeError> {
    if !att.is_finite() || !w.is_finite() {
        return Err(AttitudeError::NonFinite);
    }
    let (sin_roll, cos_roll) = att.roll.sin_cos();
    let cos_pitch = att.pitch.cos();
    if cos_pitch.abs() <= crate::attitude::GIMBAL_EPS {
        return Err(AttitudeError::GimbalLock);
    }
    let tan_pitch = att.pitch.tan();
    let sec_pitch = 1.0 / cos_pitch;
    let qs_rc = w.q * sin_roll + w.r * cos_roll;
    let qc_rs = w.q * cos_roll - w.r * sin_roll;
    Ok(Matrix3::new(
        qc_rs * tan_pitch,
        qs_rc * sec_pitch * sec_pitch,
        0.0,
        -qs_rc,
        0.0,
        0.0,
        qc_rs * sec_pitch,
        qs_rc * sec_pitch * tan_pitch,
        0.0,
    ))
}

pub struct Ekf {
    state: EkfState,
    q: Matrix3<f64>,
    r: Matrix3<f64>,
}

impl Ekf {
    pub fn new(config: &EkfConfig) -> Result<Self, EkfError> {
        config.validate()?;
        Ok(Self {
            state: EkfState {
                attitude: config.initial_attitude,
                covariance: Matrix3::from_diagonal(&Vector3::from(config.p0_diag)),
            },
            q: Matrix3::from_diagonal(&Vector3::from(config.q_diag)),
            r: Matrix3::from_diagonal(&Vector3::from(config.r_diag)),
        })
    }

    pub fn state(&self) -> &EkfState {
        &self.state
    }

    pub fn state_mut(&mut self) -> &mut EkfState {
        &mut self.state
    }

    /// Propagates the state with the gyro reading over `dt` and grows the
    /// covariance: `P ← F P Fᵀ + Q dt` with `F = I + (∂f/∂x) dt`.
    pub fn predict(&mut self, gyro: BodyRates, dt: f64) -> Result<(), AttitudeError> {
        let jac = euler_rate_jacobian(self.state.attitude, gyro)?;
        let next = integrate_gyro(self.state.attitude, gyro, dt)?;
        let f = Matrix3::identity() + jac * dt;
        let p = f * self.state.covariance * f.transpose() + self.q * dt;
        self.state.attitude = next;
        self.state.covariance = symmetrize(&p);
        Ok(())
    }

    /// Corrects the state with the accel-derived roll/pitch and mag-derived
    /// yaw. Degenerate sensors drop the affected components; the mask of
    /// what was used is returned.
    pub fn update(&mut self, accel: AccelVector, mag: MagVector) -> MeasurementUsage {
        let x = self.state.attitude;
        let mut mask = Vector3::zeros();
        let mut innovation = Vector3::zeros();

        let accel_angles = accel_attitude(accel).ok();
        if let Some((roll, pitch)) = accel_angles {
            mask.x = 1.0;
            mask.y = 1.0;
            innovation.x = wrap(roll - x.roll);
            innovation.y = wrap(pitch - x.pitch);
        }
        // tilt-compensate the compass with the accel angles when available,
        // otherwise with the current estimate
        let (tilt_roll, tilt_pitch) = accel_angles.unwrap_or((x.roll, x.pitch));
        let yaw = mag_yaw(mag, tilt_roll, tilt_pitch).ok();
        if let Some(yaw) = yaw {
            mask.z = 1.0;
            innovation.z = wrap(yaw - x.yaw);
        }

        let usage = MeasurementUsage {
            roll_pitch: accel_angles.is_some(),
            yaw: yaw.is_some(),
        };
        if !usage.roll_pitch && !usage.yaw {
            return usage;
        }

        // H = diag(mask) with zeroed innovations reduces exactly to the
        // partial update: dropped rows contribute nothing to K
        let h = Matrix3::from_diagonal(&mask);
        let p = self.state.covariance;
        let s = h * p * h.transpose() + self.r;
        let s_inv = s.try_inverse().expect("S is positive definite");
        let k = p * h.transpose() * s_inv;
        let dx = k * innovation;
        self.state.attitude = EulerAngles {
            roll: wrap(x.roll + dx.x),
            pitch: wrap(x.pitch + dx.y),
            yaw: wrap(x.yaw + dx.z),
        };
        let ikh = Matrix3::identity() - k * h;
        let joseph = ikh * p * ikh.transpose() + k * self.r * k.transpose();
        self.state.covariance = symmetrize(&joseph);
        usage
    }
}

fn symmetrize(p: &Matrix3<f64>) -> Matrix3<f64> {
    (p + p.transpose()) * 0.5
}

/// Per-sample output of a full filter pass.
#[derive(Debug, Clone)]
pub struct EkfRun {
    pub estimates: Vec<EulerAngles>,
    pub cov_trace: Vec<f64>,
    pub skipped_roll_pitch: usize,
    pub skipped_yaw: usize,
}

/// Runs predict/update over every sample and emits the post-update state.
pub fn run(config: &EkfConfig, ds: &LabeledDataset) -> Result<Vec<EulerAngles>, EkfError> {
    Ok(run_detailed(config, ds)?.estimates)
}

pub fn run_detailed(config: &EkfConfig, ds: &LabeledDataset) -> Result<EkfRun, EkfError> {
    let mut ekf = Ekf::new(config)?;
    let dt = ds.dt();
    let mut estimates = Vec::with_capacity(ds.len());
    let mut cov_trace = Vec::with_capacity(ds.len());
    let mut skipped_roll_pitch = 0;
    let mut skipped_yaw = 0;
    for s in &ds.samples {
        ekf.predict(s.gyro, dt)?;
        let usage = ekf.update(s.accel, s.mag);
        if !usage.roll_pitch {
            skipped_roll_pitch += 1;
        }
        if !usage.yaw {
            skipped_yaw += 1;
        }
        estimates.push(ekf.state().attitude);
        cov_trace.push(ekf.state().covariance.trace());
    }
    Ok(EkfRun {
        estimates,
        cov_trace,
        skipped_roll_pitch,
        skipped_yaw,
    })
}
