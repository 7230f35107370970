//! Euler-angle kinematics and per-sensor attitude extraction.
//!
//! Attitude is represented as ZYX Euler angles: roll about body x, pitch
//! about body y, yaw about body z. The gyroscope measures body rates
//! (p, q, r), which relate to the Euler-angle time derivatives through a
//! nonlinear, attitude-dependent map. The accelerometer observes roll and
//! pitch through the gravity direction, and the magnetometer observes yaw
//! after tilt compensation. Everything here is a pure function; estimators
//! build on these primitives.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Tolerance on |cos(pitch)| below which the Euler rate map is singular.
pub const GIMBAL_EPS: f64 = 1e-6;
/// Accelerometer magnitude (m/s²) below which roll/pitch are unobservable.
pub const ACCEL_EPS: f64 = 0.1;
/// Magnitude below which both arguments of the yaw arctangent are ambiguous.
pub const MAG_EPS: f64 = 1e-9;
/// Standard gravity (m/s²).
pub const STANDARD_GRAVITY: f64 = 9.80665;

#[derive(Debug, Error, Clone, Copy, PartialEq, Eq)]
pub enum AttitudeError {
    #[error("non-finite input")]
    NonFinite,
    #[error("gimbal lock: |cos(pitch)| below tolerance, Euler rate map is singular")]
    GimbalLock,
    #[error("degenerate accelerometer reading: magnitude too small to observe attitude")]
    DegenerateAccel,
    #[error("degenerate magnetometer reading: yaw unobservable")]
    DegenerateMag,
}

/// Roll/pitch/yaw triple in radians. Roll and yaw live in (−π, π], pitch
/// in [−π/2, π/2].
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct EulerAngles {
    pub roll: f64,
    pub pitch: f64,
    pub yaw: f64,
}

impl EulerAngles {
    pub fn new(roll: f64, pitch: f64, yaw: f64) -> Self {
        Self { roll, pitch, yaw }
    }

    pub fn is_finite(&self) -> bool {
        self.roll.is_finite() && self.pitch.is_finite() && self.yaw.is_finite()
    }
}

/// Angular velocity about the body axes (rad/s), as measured by a gyro.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct BodyRates {
    pub p: f64,
    pub q: f64,
    pub r: f64,
}

impl BodyRates {
    pub fn new(p: f64, q: f64, r: f64) -> Self {
        Self { p, q, r }
    }

    pub fn is_finite(&self) -> bool {
        self.p.is_finite() && self.q.is_finite() && self.r.is_finite()
    }
}

/// Time derivatives of the Euler angles (rad/s).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EulerRates {
    pub roll_rate: f64,
    pub pitch_rate: f64,
    pub yaw_rate: f64,
}

impl EulerRates {
    pub fn new(roll_rate: f64, pitch_rate: f64, yaw_rate: f64) -> Self {
        Self {
            roll_rate,
            pitch_rate,
            yaw_rate,
        }
    }
}

/// Specific-force measurement along the body axes (m/s²).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct AccelVector {
    pub ax: f64,
    pub ay: f64,
    pub az: f64,
}

impl AccelVector {
    pub fn new(ax: f64, ay: f64, az: f64) -> Self {
        Self { ax, ay, az }
    }

    pub fn norm(&self) -> f64 {
        (self.ax * self.ax + self.ay * self.ay + self.az * self.az).sqrt()
    }
}

/// Magnetic field measurement along the body axes (normalized field units).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MagVector {
    pub mx: f64,
    pub my: f64,
    pub mz: f64,
}

impl MagVector {
    pub fn new(mx: f64, my: f64, mz: f64) -> Self {
        Self { mx, my, mz }
    }
}

/// Wraps into (−π, π] without validating the input. Callers guarantee
/// finiteness.
pub(crate) fn wrap(x: f64) -> f64 {
    let two_pi = 2.0 * std::f64::consts::PI;
    let y = x.rem_euclid(two_pi);
    if y > std::f64::consts::PI {
        y - two_pi
    } else {
        y
    }
}

/// Reduces an angle to the principal interval (−π, π].
pub fn wrap_angle(x: f64) -> Result<f64, AttitudeError> {
    if !x.is_finite() {
        return Err(AttitudeError::NonFinite);
    }
    Ok(wrap(x))
}

/// Shortest signed arc from `b` to `a`; the result lies in (−π, π].
pub fn angle_diff(a: f64, b: f64) -> Result<f64, AttitudeError> {
    if !a.is_finite() || !b.is_finite() {
        return Err(AttitudeError::NonFinite);
    }
    Ok(wrap(a - b))
}

/// Maps body rates to Euler-angle rates at the given attitude:
///
/// ```text
/// roll_rate  = p + q sin(roll) tan(pitch) + r cos(roll) tan(pitch)
/// pitch_rate = q cos(roll) − r sin(roll)
/// yaw_rate   = q sin(roll) sec(pitch) + r cos(roll) sec(pitch)
/// ```
///
/// Fails with [`AttitudeError::GimbalLock`] when |cos(pitch)| ≤ [`GIMBAL_EPS`].
pub fn euler_rates(att: EulerAngles, w: BodyRates) -> Result<EulerRates, AttitudeError> {
    if !att.is_finite() || !w.is_finite() {
        return Err(AttitudeError::NonFinite);
    }
    let (sin_roll, cos_roll) = att.roll.sin_cos();
    let cos_pitch = att.pitch.cos();
    if cos_pitch.abs() <= GIMBAL_EPS {
        return Err(AttitudeError::GimbalLock);
    }
    let tan_pitch = att.pitch.tan();
    let sec_pitch = 1.0 / cos_pitch;
    Ok(EulerRates {
        roll_rate: w.p + w.q * sin_roll * tan_pitch + w.r * cos_roll * tan_pitch,
        pitch_rate: w.q * cos_roll - w.r * sin_roll,
        yaw_rate: w.q * sin_roll * sec_pitch + w.r * cos_roll * sec_pitch,
    })
}

/// One forward-Euler step of the attitude kinematics: `att + rates · dt`,
/// with roll and yaw wrapped to the principal interval.
///
/// Under the gimbal guard a single step cannot push the wrapped pitch past
/// ±π/2 for physically sampled rates; the reflection below is asserted to
/// be inactive in debug builds.
pub fn integrate_gyro(
    att: EulerAngles,
    w: BodyRates,
    dt: f64,
) -> Result<EulerAngles, AttitudeError> {
    if !dt.is_finite() || dt <= 0.0 {
        return Err(AttitudeError::NonFinite);
    }
    let rates = euler_rates(att, w)?;
    let roll = wrap(att.roll + rates.roll_rate * dt);
    let yaw = wrap(att.yaw + rates.yaw_rate * dt);
    let mut pitch = wrap(att.pitch + rates.pitch_rate * dt);
    debug_assert!(
        pitch.abs() <= std::f64::consts::FRAC_PI_2,
        "pitch left [-pi/2, pi/2] in a single integration step: {pitch}"
    );
    if pitch > std::f64::consts::FRAC_PI_2 {
        pitch = std::f64::consts::PI - pitch;
    } else if pitch < -std::f64::consts::FRAC_PI_2 {
        pitch = -std::f64::consts::PI - pitch;
    }
    Ok(EulerAngles { roll, pitch, yaw })
}

/// Roll and pitch from a specific-force measurement:
///
/// ```text
/// roll  = atan2(ay, az)
/// pitch = atan(−ax / (ay sin(roll) + az cos(roll)))
/// ```
///
/// The single-argument arctangent keeps pitch inside (−π/2, π/2), matching
/// the ZYX pitch range; roll uses the two-argument form for full-circle
/// recovery. Fails when the measured magnitude is below [`ACCEL_EPS`]
/// (free fall: the gravity direction carries no information).
pub fn accel_attitude(a: AccelVector) -> Result<(f64, f64), AttitudeError> {
    if !(a.ax.is_finite() && a.ay.is_finite() && a.az.is_finite()) {
        return Err(AttitudeError::NonFinite);
    }
    if a.norm() <= ACCEL_EPS {
        return Err(AttitudeError::DegenerateAccel);
    }
    let roll = a.ay.atan2(a.az);
    let (sin_roll, cos_roll) = roll.sin_cos();
    let pitch = (-a.ax / (a.ay * sin_roll + a.az * cos_roll)).atan();
    Ok((roll, pitch))
}

/// Tilt-compensated yaw from a magnetometer reading and known roll/pitch:
///
/// ```text
/// yaw = atan2(mz sin(roll) − my cos(roll),
///             mx cos(pitch) + my sin(pitch) sin(roll) + mz sin(pitch) cos(roll))
/// ```
///
/// Fails when both arctangent arguments fall below [`MAG_EPS`] (vertical or
/// vanishing field: heading is ambiguous).
pub fn mag_yaw(m: MagVector, roll: f64, pitch: f64) -> Result<f64, AttitudeError> {
    if !(m.mx.is_finite() && m.my.is_finite() && m.mz.is_finite())
        || !roll.is_finite()
        || !pitch.is_finite()
    {
        return Err(AttitudeError::NonFinite);
    }
    let (sin_roll, cos_roll) = roll.sin_cos();
    let (sin_pitch, cos_pitch) = pitch.sin_cos();
    let y = m.mz * sin_roll - m.my * cos_roll;
    let x = m.mx * cos_pitch + m.my * sin_pitch * sin_roll + m.mz * sin_pitch * cos_roll;
    if y.abs() < MAG_EPS && x.abs() < MAG_EPS {
        return Err(AttitudeError::DegenerateMag);
    }
    Ok(wrap(y.atan2(x)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    #[test]
    fn wrap_angle_identity_and_periodicity() {
        assert_eq!(wrap_angle(0.0).unwrap(), 0.0);
        assert_relative_eq!(wrap_angle(3.0 * PI).unwrap(), PI, epsilon = 1e-12);
        // -3.5π + 4π = 0.5π
        assert_relative_eq!(wrap_angle(-3.5 * PI).unwrap(), 0.5 * PI, epsilon = 1e-12);
        assert_eq!(wrap_angle(f64::NAN), Err(AttitudeError::NonFinite));
        assert_eq!(wrap_angle(f64::INFINITY), Err(AttitudeError::NonFinite));
    }

    #[test]
    fn wrap_angle_boundary_maps_to_positive_pi() {
        assert_relative_eq!(wrap_angle(-PI).unwrap(), PI, epsilon = 1e-12);
        assert_relative_eq!(wrap_angle(PI).unwrap(), PI, epsilon = 1e-12);
    }

    #[test]
    fn angle_diff_small_and_branch_cut() {
        assert_relative_eq!(angle_diff(0.3, 0.1).unwrap(), 0.2, epsilon = 1e-12);
        // shortest arc across the ±π cut
        assert_relative_eq!(
            angle_diff(PI - 0.1, -PI + 0.1).unwrap(),
            -0.2,
            epsilon = 1e-12
        );
        for x in [-2.0, 0.0, 1.5, 3.0] {
            assert_eq!(angle_diff(x, x).unwrap(), 0.0);
        }
        assert_eq!(angle_diff(f64::NAN, 0.0), Err(AttitudeError::NonFinite));
    }

    #[test]
    fn euler_rates_reduce_to_identity_at_level() {
        let att = EulerAngles::default();
        let w = BodyRates::new(0.1, 0.2, 0.3);
        let r = euler_rates(att, w).unwrap();
        assert_eq!(r.roll_rate, 0.1);
        assert_eq!(r.pitch_rate, 0.2);
        assert_eq!(r.yaw_rate, 0.3);
    }

    #[test]
    fn euler_rates_at_quarter_roll() {
        // direct substitution: roll = π/2, pitch = 0
        let att = EulerAngles::new(FRAC_PI_2, 0.0, 0.0);
        let w = BodyRates::new(0.1, 0.2, 0.3);
        let r = euler_rates(att, w).unwrap();
        assert_relative_eq!(r.roll_rate, 0.1, epsilon = 1e-12);
        assert_relative_eq!(r.pitch_rate, -0.3, epsilon = 1e-12);
        assert_relative_eq!(r.yaw_rate, 0.2, epsilon = 1e-12);
    }

    #[test]
    fn euler_rates_gimbal_lock() {
        let att = EulerAngles::new(0.0, FRAC_PI_2, 0.0);
        let w = BodyRates::new(0.1, 0.2, 0.3);
        assert_eq!(euler_rates(att, w), Err(AttitudeError::GimbalLock));
    }

    #[test]
    fn integrate_gyro_fixed_point_and_single_axis() {
        let att = EulerAngles::default();
        let zero = BodyRates::default();
        assert_eq!(integrate_gyro(att, zero, 0.01).unwrap(), att);

        let w = BodyRates::new(0.5, 0.0, 0.0);
        let next = integrate_gyro(att, w, 0.01).unwrap();
        assert_relative_eq!(next.roll, 0.005, epsilon = 1e-15);
        assert_eq!(next.pitch, 0.0);
        assert_eq!(next.yaw, 0.0);
    }

    #[test]
    fn integrate_gyro_pure_roll_is_exact() {
        // level pitch keeps the map diagonal, so 100 steps of p = 0.5 at
        // dt = 0.01 accumulate exactly 0.5 rad of roll
        let mut att = EulerAngles::default();
        let w = BodyRates::new(0.5, 0.0, 0.0);
        for _ in 0..100 {
            att = integrate_gyro(att, w, 0.01).unwrap();
        }
        assert_relative_eq!(att.roll, 0.5, epsilon = 1e-6);
        assert_eq!(att.pitch, 0.0);
        assert_eq!(att.yaw, 0.0);
    }

    #[test]
    fn integrate_gyro_rejects_bad_dt_and_propagates_gimbal() {
        let att = EulerAngles::default();
        let w = BodyRates::default();
        assert!(integrate_gyro(att, w, 0.0).is_err());
        assert!(integrate_gyro(att, w, -0.01).is_err());
        let locked = EulerAngles::new(0.0, FRAC_PI_2, 0.0);
        assert_eq!(
            integrate_gyro(locked, w, 0.01),
            Err(AttitudeError::GimbalLock)
        );
    }

    #[test]
    fn accel_attitude_level_and_rolled() {
        let g = STANDARD_GRAVITY;
        let (roll, pitch) = accel_attitude(AccelVector::new(0.0, 0.0, g)).unwrap();
        assert_eq!((roll, pitch), (0.0, 0.0));

        // gravity on +y means 90° roll
        let (roll, pitch) = accel_attitude(AccelVector::new(0.0, g, 0.0)).unwrap();
        assert_relative_eq!(roll, FRAC_PI_2, epsilon = 1e-12);
        assert_relative_eq!(pitch, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn accel_attitude_inverts_gravity_model() {
        let g = STANDARD_GRAVITY;
        let theta = 0.3_f64;
        let a = AccelVector::new(-g * theta.sin(), 0.0, g * theta.cos());
        let (roll, pitch) = accel_attitude(a).unwrap();
        assert_relative_eq!(roll, 0.0, epsilon = 1e-12);
        assert_relative_eq!(pitch, 0.3, epsilon = 1e-12);
    }

    #[test]
    fn accel_attitude_free_fall_is_degenerate() {
        assert_eq!(
            accel_attitude(AccelVector::new(0.0, 0.0, 0.01)),
            Err(AttitudeError::DegenerateAccel)
        );
    }

    #[test]
    fn mag_yaw_level_cases() {
        assert_eq!(mag_yaw(MagVector::new(1.0, 0.0, 0.0), 0.0, 0.0).unwrap(), 0.0);
        assert_relative_eq!(
            mag_yaw(MagVector::new(0.0, 1.0, 0.0), 0.0, 0.0).unwrap(),
            -FRAC_PI_2,
            epsilon = 1e-12
        );
    }

    #[test]
    fn mag_yaw_round_trip_with_field_model() {
        let att = EulerAngles::new(0.2, -0.1, 1.0);
        let m = crate::sim::field_in_body(att, 0.0, 60f64.to_radians());
        let yaw = mag_yaw(m, att.roll, att.pitch).unwrap();
        assert_relative_eq!(yaw, 1.0, epsilon = 1e-9);
    }

    #[test]
    fn mag_yaw_vertical_field_is_degenerate() {
        assert_eq!(
            mag_yaw(MagVector::new(0.0, 0.0, 1.0), 0.0, 0.0),
            Err(AttitudeError::DegenerateMag)
        );
    }

    proptest! {
        #[test]
        fn wrap_angle_is_idempotent_and_in_range(x in -1e4f64..1e4) {
            let once = wrap_angle(x).unwrap();
            prop_assert!(once > -PI && once <= PI);
            prop_assert_eq!(wrap_angle(once).unwrap(), once);
        }

        #[test]
        fn angle_diff_is_congruent_mod_two_pi(a in -30.0f64..30.0, b in -30.0f64..30.0) {
            let d = angle_diff(a, b).unwrap();
            prop_assert!(d.abs() <= PI);
            // d + b ≡ a (mod 2π)
            let residue = wrap_angle(d + b - a).unwrap();
            prop_assert!(residue.abs() < 1e-9 || (residue - PI).abs() < 1e-9);
        }

        #[test]
        fn euler_rates_identity_at_zero_roll_pitch(p in -5.0f64..5.0, q in -5.0f64..5.0, r in -5.0f64..5.0) {
            let rates = euler_rates(EulerAngles::default(), BodyRates::new(p, q, r)).unwrap();
            prop_assert_eq!(rates.roll_rate, p);
            prop_assert_eq!(rates.pitch_rate, q);
            prop_assert_eq!(rates.yaw_rate, r);
        }

        #[test]
        fn accel_mag_round_trip(
            roll in -1.39f64..1.39,
            pitch in -1.39f64..1.39,
            yaw in -3.1f64..3.1,
        ) {
            let att = EulerAngles::new(roll, pitch, yaw);
            let a = crate::sim::gravity_in_body(att);
            let (roll_a, pitch_a) = accel_attitude(a).unwrap();
            prop_assert!((roll_a - roll).abs() < 1e-9);
            prop_assert!((pitch_a - pitch).abs() < 1e-9);

            let m = crate::sim::field_in_body(att, 0.0, 60f64.to_radians());
            let yaw_m = mag_yaw(m, roll, pitch).unwrap();
            prop_assert!(angle_diff(yaw_m, yaw).unwrap().abs() < 1e-9);
        }
    }
}
