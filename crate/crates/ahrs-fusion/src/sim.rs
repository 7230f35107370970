//! Synthetic trajectory and IMU measurement generation.
//!
//! Ground-truth attitude is a seeded sum of band-limited sinusoids per axis,
//! which keeps the motion smooth, analytically differentiable, and variance-
//! tunable. Two presets mirror the low- and high-dynamic motion regimes used
//! throughout the benchmark. From a ground-truth track, [`synthesize_imu`]
//! produces the 9-axis measurement stream: body rates via the inverse Euler
//! rate map plus bias and white noise, specific force from the gravity
//! model plus transient disturbance pulses, and a magnetic field vector
//! rotated into the body frame.
//!
//! All randomness comes from a ChaCha8 generator seeded explicitly. Each
//! measurement channel draws from its own stream (trajectory 0, gyro 1,
//! accel 2, mag 3, disturbances 4), so enabling one noise term never
//! perturbs another channel's draws.

use nalgebra::{Rotation3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::attitude::{
    self, AccelVector, AttitudeError, BodyRates, EulerAngles, EulerRates, MagVector,
    STANDARD_GRAVITY,
};
use crate::dataset::ImuSample;

const SINUSOIDS_PER_AXIS: usize = 4;
const PITCH_PEAK_LIMIT: f64 = 1.30; // rad, keeps |pitch| < 75°

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid trajectory profile: {0}")]
    InvalidProfile(String),
    #[error("invalid noise model: {0}")]
    InvalidNoise(String),
    #[error(transparent)]
    Attitude(#[from] AttitudeError),
}

/// Motion regime, matching the two dataset families of the benchmark.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    LowDynamic,
    HighDynamic,
}

/// Per-axis generation bands. The sample variance of the generated angle is
/// drawn from `variance`, component frequencies from `frequency`, and the
/// sum of component amplitudes is capped at `peak`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct AxisBand {
    pub variance: (f64, f64),
    pub frequency: (f64, f64),
    pub peak: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrajectoryProfile {
    pub regime: Regime,
    /// seconds
    pub duration: f64,
    /// Hz
    pub rate: f64,
    pub seed: u64,
    pub roll: AxisBand,
    pub pitch: AxisBand,
    pub yaw: AxisBand,
}

impl TrajectoryProfile {
    /// Gentle motion: roll variance lands in [0.05, 0.25] rad².
    pub fn low_dynamic(duration: f64, rate: f64, seed: u64) -> Self {
        Self {
            regime: Regime::LowDynamic,
            duration,
            rate,
            seed,
            roll: AxisBand {
                variance: (0.10, 0.18),
                frequency: (0.05, 0.3),
                peak: f64::INFINITY,
            },
            pitch: AxisBand {
                variance: (0.02, 0.06),
                frequency: (0.05, 0.3),
                peak: PITCH_PEAK_LIMIT,
            },
            yaw: AxisBand {
                variance: (0.03, 0.06),
                frequency: (0.05, 0.3),
                peak: f64::INFINITY,
            },
        }
    }

    /// Aggressive motion: roll variance lands in [1.0, 4.5] rad².
    pub fn high_dynamic(duration: f64, rate: f64, seed: u64) -> Self {
        Self {
            regime: Regime::HighDynamic,
            duration,
            rate,
            seed,
            roll: AxisBand {
                variance: (1.6, 3.2),
                frequency: (0.1, 1.5),
                peak: f64::INFINITY,
            },
            pitch: AxisBand {
                variance: (0.10, 0.30),
                frequency: (0.1, 1.5),
                peak: PITCH_PEAK_LIMIT,
            },
            yaw: AxisBand {
                variance: (0.5, 1.5),
                frequency: (0.1, 1.5),
                peak: f64::INFINITY,
            },
        }
    }

    /// Motionless track, useful for drift and bias experiments.
    pub fn static_level(duration: f64, rate: f64) -> Self {
        let still = AxisBand {
            variance: (0.0, 0.0),
            frequency: (0.05, 0.1),
            peak: f64::INFINITY,
        };
        Self {
            regime: Regime::LowDynamic,
            duration,
            rate,
            seed: 0,
            roll: still,
            pitch: AxisBand {
                peak: PITCH_PEAK_LIMIT,
                ..still
            },
            yaw: still,
        }
    }

    pub fn preset(regime: Regime, duration: f64, rate: f64, seed: u64) -> Self {
        match regime {
            Regime::LowDynamic => Self::low_dynamic(duration, rate, seed),
            Regime::HighDynamic => Self::high_dynamic(duration, rate, seed),
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if !(self.duration > 0.0) || !self.duration.is_finite() {
            return Err(SimError::InvalidProfile("duration must be > 0".into()));
        }
        if !(self.rate > 0.0) || !self.rate.is_finite() {
            return Err(SimError::InvalidProfile("rate must be > 0".into()));
        }
        for (name, band) in [("roll", &self.roll), ("pitch", &self.pitch), ("yaw", &self.yaw)] {
            if band.variance.0 < 0.0 || band.variance.1 < band.variance.0 {
                return Err(SimError::InvalidProfile(format!(
                    "{name}: variance band must satisfy 0 <= lo <= hi"
                )));
            }
            if band.frequency.0 <= 0.0 || band.frequency.1 < band.frequency.0 {
                return Err(SimError::InvalidProfile(format!(
                    "{name}: frequency band must satisfy 0 < lo <= hi"
                )));
            }
            if band.frequency.1 >= self.rate / 2.0 {
                return Err(SimError::InvalidProfile(format!(
                    "{name}: frequency band upper edge must stay below rate/2"
                )));
            }
            if !(band.peak > 0.0) {
                return Err(SimError::InvalidProfile(format!("{name}: peak must be > 0")));
            }
        }
        Ok(())
    }
}

/// Sensor error model applied on top of the ideal measurements.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NoiseModel {
    /// Constant gyro bias (rad/s).
    pub gyro_bias: BodyRates,
    /// Gyro white-noise standard deviation (rad/s).
    pub gyro_sigma: f64,
    /// Accelerometer white-noise standard deviation (m/s²).
    pub accel_sigma: f64,
    /// Magnetometer white-noise standard deviation (field units).
    pub mag_sigma: f64,
    /// Transient linear-acceleration pulses.
    pub disturbance: DisturbancePulses,
    /// Magnetic declination (rad) — horizontal rotation of the reference field.
    pub declination: f64,
    /// Magnetic dip (rad) — downward inclination of the reference field.
    pub dip: f64,
}

/// Short accelerometer disturbances standing in for sudden external forces.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct DisturbancePulses {
    /// Expected pulse starts per second.
    pub rate_per_sec: f64,
    /// Pulse magnitude (m/s²), applied along a random direction.
    pub amplitude: f64,
    /// Pulse length (s).
    pub duration: f64,
}

impl Default for NoiseModel {
    /// Consumer-MEMS order of magnitude.
    fn default() -> Self {
        Self {
            gyro_bias: BodyRates::new(0.01, 0.01, 0.01),
            gyro_sigma: 0.005,
            accel_sigma: 0.05,
            mag_sigma: 0.005,
            disturbance: DisturbancePulses {
                rate_per_sec: 0.05,
                amplitude: 2.0,
                duration: 0.5,
            },
            declination: 0.0,
            dip: 60f64.to_radians(),
        }
    }
}

impl NoiseModel {
    /// No bias, no noise, no disturbances; default field geometry.
    pub fn quiet() -> Self {
        Self {
            gyro_bias: BodyRates::default(),
            gyro_sigma: 0.0,
            accel_sigma: 0.0,
            mag_sigma: 0.0,
            disturbance: DisturbancePulses {
                rate_per_sec: 0.0,
                amplitude: 0.0,
                duration: 0.0,
            },
            declination: 0.0,
            dip: 60f64.to_radians(),
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if self.gyro_sigma < 0.0 || self.accel_sigma < 0.0 || self.mag_sigma < 0.0 {
            return Err(SimError::InvalidNoise("sigmas must be >= 0".into()));
        }
        if !self.gyro_bias.is_finite() {
            return Err(SimError::InvalidNoise("gyro bias must be finite".into()));
        }
        if self.disturbance.rate_per_sec < 0.0
            || self.disturbance.amplitude < 0.0
            || self.disturbance.duration < 0.0
        {
            return Err(SimError::InvalidNoise("disturbance fields must be >= 0".into()));
        }
        if !self.declination.is_finite() || !self.dip.is_finite() {
            return Err(SimError::InvalidNoise("field geometry must be finite".into()));
        }
        Ok(())
    }
}

/// Reference trajectory: attitude and its exact analytic rates at a fixed
/// sample rate.
#[derive(Debug, Clone)]
pub struct GroundTruthTrack {
    pub timestamps: Vec<f64>,
    pub attitude: Vec<EulerAngles>,
    pub euler_rates: Vec<EulerRates>,
    pub rate: f64,
}

impl GroundTruthTrack {
    pub fn len(&self) -> usize {
        self.timestamps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.timestamps.is_empty()
    }
}

#[derive(Debug, Clone, Copy)]
struct Sinusoid {
    amplitude: f64,
    omega: f64,
    phase: f64,
}

#[derive(Debug, Clone)]
struct AxisSignal {
    terms: Vec<Sinusoid>,
}

impl AxisSignal {
    fn value(&self, t: f64) -> f64 {
        self.terms
            .iter()
            .map(|s| s.amplitude * (s.omega * t + s.phase).sin())
            .sum()
    }

    fn rate(&self, t: f64) -> f64 {
        self.terms
            .iter()
            .map(|s| s.amplitude * s.omega * (s.omega * t + s.phase).cos())
            .sum()
    }
}

fn draw_uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    if hi > lo {
        rng.random_range(lo..hi)
    } else {
        lo
    }
}

/// Draws one axis signal. Per component the draw order is amplitude
/// fraction, frequency, phase; the fractions are then rescaled so the
/// long-run variance (half the sum of squared amplitudes) hits a target
/// drawn from the band, and finally capped so the amplitude sum stays
/// below `band.peak`.
fn draw_axis(rng: &mut ChaCha8Rng, band: &AxisBand) -> AxisSignal {
    let target_var = draw_uniform(rng, band.variance.0, band.variance.1);
    let mut fractions = Vec::with_capacity(SINUSOIDS_PER_AXIS);
    let mut freqs = Vec::with_capacity(SINUSOIDS_PER_AXIS);
    let mut phases = Vec::with_capacity(SINUSOIDS_PER_AXIS);
    for _ in 0..SINUSOIDS_PER_AXIS {
        fractions.push(rng.random_range(0.5..1.0));
        freqs.push(draw_uniform(rng, band.frequency.0, band.frequency.1));
        phases.push(rng.random_range(0.0..std::f64::consts::TAU));
    }
    let sq_sum: f64 = fractions.iter().map(|a| a * a).sum();
    let mut scale = (2.0 * target_var / sq_sum).sqrt();
    let amp_sum: f64 = fractions.iter().map(|a| a * scale).sum();
    if amp_sum > band.peak {
        scale *= band.peak / amp_sum;
    }
    AxisSignal {
        terms: (0..SINUSOIDS_PER_AXIS)
            .map(|k| Sinusoid {
                amplitude: fractions[k] * scale,
                omega: std::f64::consts::TAU * freqs[k],
                phase: phases[k],
            })
            .collect(),
    }
}

/// Generates a seeded ground-truth track. The same seed and regime bands
/// describe the same continuous trajectory regardless of `duration` and
/// `rate`, which only control where it is sampled.
pub fn generate_trajectory(profile: &TrajectoryProfile) -> Result<GroundTruthTrack, SimError> {
    profile.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(profile.seed);
    rng.set_stream(0);
    let roll = draw_axis(&mut rng, &profile.roll);
    let pitch = draw_axis(&mut rng, &profile.pitch);
    let yaw = draw_axis(&mut rng, &profile.yaw);

    let n = (profile.duration * profile.rate).round() as usize;
    let mut timestamps = Vec::with_capacity(n);
    let mut attitude = Vec::with_capacity(n);
    let mut euler_rates = Vec::with_capacity(n);
    for i in 0..n {
        let t = i as f64 / profile.rate;
        timestamps.push(t);
        let pitch_val = pitch.value(t);
        debug_assert!(pitch_val.abs() <= PITCH_PEAK_LIMIT + 1e-9);
        attitude.push(EulerAngles {
            roll: attitude_wrap(roll.value(t)),
            pitch: pitch_val,
            yaw: attitude_wrap(yaw.value(t)),
        });
        euler_rates.push(EulerRates {
            roll_rate: roll.rate(t),
            pitch_rate: pitch.rate(t),
            yaw_rate: yaw.rate(t),
        });
    }
    Ok(GroundTruthTrack {
        timestamps,
        attitude,
        euler_rates,
        rate: profile.rate,
    })
}

fn attitude_wrap(x: f64) -> f64 {
    // angles stay finite by construction
    attitude::wrap_angle(x).expect("sinusoid sum is finite")
}

/// Inverse of the Euler rate map: the body rates that produce the given
/// Euler-angle rates at the given attitude.
pub fn body_rates_from_euler(att: EulerAngles, er: EulerRates) -> Result<BodyRates, AttitudeError> {
    if !att.is_finite() {
        return Err(AttitudeError::NonFinite);
    }
    let (sin_roll, cos_roll) = att.roll.sin_cos();
    let (sin_pitch, cos_pitch) = att.pitch.sin_cos();
    if cos_pitch.abs() <= attitude::GIMBAL_EPS {
        return Err(AttitudeError::GimbalLock);
    }
    Ok(BodyRates {
        p: er.roll_rate - er.yaw_rate * sin_pitch,
        q: er.pitch_rate * cos_roll + er.yaw_rate * cos_pitch * sin_roll,
        r: -er.pitch_rate * sin_roll + er.yaw_rate * cos_pitch * cos_roll,
    })
}

/// Specific force measured at rest at the given attitude:
/// `g · (−sin pitch, cos pitch sin roll, cos pitch cos roll)`.
///
/// This sign convention makes the accelerometer roll/pitch extraction an
/// exact inverse of the simulator.
pub fn gravity_in_body(att: EulerAngles) -> AccelVector {
    let (sin_roll, cos_roll) = att.roll.sin_cos();
    let (sin_pitch, cos_pitch) = att.pitch.sin_cos();
    AccelVector {
        ax: -STANDARD_GRAVITY * sin_pitch,
        ay: STANDARD_GRAVITY * cos_pitch * sin_roll,
        az: STANDARD_GRAVITY * cos_pitch * cos_roll,
    }
}

/// Unit-magnitude reference field rotated into the body frame. The field
/// points `declination` east of north in the horizontal plane and dips
/// `dip` below it.
pub fn field_in_body(att: EulerAngles, declination: f64, dip: f64) -> MagVector {
    let (sin_dec, cos_dec) = declination.sin_cos();
    let (sin_dip, cos_dip) = dip.sin_cos();
    let field_ned = Vector3::new(cos_dip * cos_dec, cos_dip * sin_dec, sin_dip);
    // body-to-nav rotation for ZYX Euler angles
    let rot = Rotation3::from_euler_angles(att.roll, att.pitch, att.yaw);
    let body = rot.transpose() * field_ned;
    MagVector {
        mx: body.x,
        my: body.y,
        mz: body.z,
    }
}

/// Synthesizes the 9-axis measurement stream for a track. Per sample, in
/// this fixed order per channel stream: gyro draws (p, q, r), accel draws
/// (ax, ay, az), mag draws (mx, my, mz), then the disturbance trigger.
pub fn synthesize_imu(
    track: &GroundTruthTrack,
    noise: &NoiseModel,
    seed: u64,
) -> Result<Vec<ImuSample>, SimError> {
    noise.validate()?;
    let mut gyro_rng = channel_rng(seed, 1);
    let mut accel_rng = channel_rng(seed, 2);
    let mut mag_rng = channel_rng(seed, 3);
    let mut dist_rng = channel_rng(seed, 4);

    let gyro_noise = Normal::new(0.0, noise.gyro_sigma).expect("validated sigma");
    let accel_noise = Normal::new(0.0, noise.accel_sigma).expect("validated sigma");
    let mag_noise = Normal::new(0.0, noise.mag_sigma).expect("validated sigma");

    let dt = 1.0 / track.rate;
    let trigger_prob = (noise.disturbance.rate_per_sec * dt).min(1.0);
    let pulse_len = (noise.disturbance.duration * track.rate).round() as usize;
    let mut pulse_left = 0usize;
    let mut pulse = Vector3::zeros();

    let mut samples = Vec::with_capacity(track.len());
    for i in 0..track.len() {
        let att = track.attitude[i];
        let ideal = body_rates_from_euler(att, track.euler_rates[i])?;
        let gyro = BodyRates {
            p: ideal.p + noise.gyro_bias.p + gyro_noise.sample(&mut gyro_rng),
            q: ideal.q + noise.gyro_bias.q + gyro_noise.sample(&mut gyro_rng),
            r: ideal.r + noise.gyro_bias.r + gyro_noise.sample(&mut gyro_rng),
        };

        if pulse_left == 0 && dist_rng.random_range(0.0..1.0) < trigger_prob && pulse_len > 0 {
            let dir = Vector3::new(
                dist_rng.sample::<f64, _>(rand_distr::StandardNormal),
                dist_rng.sample::<f64, _>(rand_distr::StandardNormal),
                dist_rng.sample::<f64, _>(rand_distr::StandardNormal),
            );
            let norm = dir.norm();
            let dir = if norm > 1e-12 {
                dir / norm
            } else {
                Vector3::new(0.0, 0.0, 1.0)
            };
            pulse = dir * noise.disturbance.amplitude;
            pulse_left = pulse_len;
        }
        let mut extra = Vector3::zeros();
        if pulse_left > 0 {
            extra = pulse;
            pulse_left -= 1;
        }

        let g = gravity_in_body(att);
        let accel = AccelVector {
            ax: g.ax + extra.x + accel_noise.sample(&mut accel_rng),
            ay: g.ay + extra.y + accel_noise.sample(&mut accel_rng),
            az: g.az + extra.z + accel_noise.sample(&mut accel_rng),
        };

        let f = field_in_body(att, noise.declination, noise.dip);
        let mag = MagVector {
            mx: f.mx + mag_noise.sample(&mut mag_rng),
            my: f.my + mag_noise.sample(&mut mag_rng),
            mz: f.mz + mag_noise.sample(&mut mag_rng),
        };

        samples.push(ImuSample {
            t: track.timestamps[i],
            gyro,
            accel,
            mag,
        });
    }
    Ok(samples)
}

fn channel_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::attitude::{accel_attitude, angle_diff, euler_rates, mag_yaw};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn population_variance(xs: impl Iterator<Item = f64> + Clone) -> f64 {
        let n = xs.clone().count() as f64;
        let mean = xs.clone().sum::<f64>() / n;
        xs.map(|x| (x - mean) * (x - mean)).sum::<f64>() / n
    }

    #[test]
    fn zero_amplitude_profile_is_static() {
        let profile = TrajectoryProfile::static_level(2.0, 100.0);
        let track = generate_trajectory(&profile).unwrap();
        assert_eq!(track.len(), 200);
        for (att, er) in track.attitude.iter().zip(&track.euler_rates) {
            assert_eq!(*att, EulerAngles::default());
            assert_eq!(*er, EulerRates::default());
        }
    }

    #[test]
    fn same_seed_gives_identical_tracks() {
        let profile = TrajectoryProfile::low_dynamic(10.0, 100.0, 42);
        let a = generate_trajectory(&profile).unwrap();
        let b = generate_trajectory(&profile).unwrap();
        assert_eq!(a.attitude, b.attitude);
        assert_eq!(a.euler_rates, b.euler_rates);
        assert_eq!(a.timestamps, b.timestamps);
    }

    #[test]
    fn high_dynamic_roll_variance_in_band() {
        let profile = TrajectoryProfile::high_dynamic(120.0, 100.0, 7);
        let track = generate_trajectory(&profile).unwrap();
        let var = population_variance(track.attitude.iter().map(|a| a.roll));
        assert!((1.0..=4.5).contains(&var), "roll variance {var} out of band");
    }

    #[test]
    fn regime_variance_bands_hold_across_seeds() {
        let mut low_hits = 0;
        let mut high_hits = 0;
        let seeds: Vec<u64> = (0..40).collect();
        for &seed in &seeds {
            let low = generate_trajectory(&TrajectoryProfile::low_dynamic(120.0, 50.0, seed))
                .unwrap();
            let var = population_variance(low.attitude.iter().map(|a| a.roll));
            if (0.05..=0.25).contains(&var) {
                low_hits += 1;
            }
            let high = generate_trajectory(&TrajectoryProfile::high_dynamic(120.0, 50.0, seed))
                .unwrap();
            let var = population_variance(high.attitude.iter().map(|a| a.roll));
            if (1.0..=4.5).contains(&var) {
                high_hits += 1;
            }
        }
        // ≥95% of seeds must land inside the declared bands
        assert!(low_hits >= 38, "low-dynamic hit {low_hits}/40");
        assert!(high_hits >= 38, "high-dynamic hit {high_hits}/40");
    }

    #[test]
    fn pitch_stays_clear_of_gimbal_lock() {
        for seed in 0..10 {
            let track =
                generate_trajectory(&TrajectoryProfile::high_dynamic(60.0, 100.0, seed)).unwrap();
            for att in &track.attitude {
                assert!(att.pitch.abs() <= PITCH_PEAK_LIMIT + 1e-9);
            }
        }
    }

    #[test]
    fn body_rates_identity_at_level() {
        let er = EulerRates::new(0.1, 0.2, 0.3);
        let w = body_rates_from_euler(EulerAngles::default(), er).unwrap();
        assert_eq!(w, BodyRates::new(0.1, 0.2, 0.3));
    }

    #[test]
    fn body_rates_pure_yaw_at_pitch() {
        let att = EulerAngles::new(0.0, std::f64::consts::FRAC_PI_4, 0.0);
        let er = EulerRates::new(0.0, 0.0, 1.0);
        let w = body_rates_from_euler(att, er).unwrap();
        let s = std::f64::consts::SQRT_2 / 2.0;
        assert_relative_eq!(w.p, -s, epsilon = 1e-12);
        assert_relative_eq!(w.q, 0.0, epsilon = 1e-12);
        assert_relative_eq!(w.r, s, epsilon = 1e-12);
    }

    #[test]
    fn quiet_noise_static_track_yields_exact_measurements() {
        let track =
            generate_trajectory(&TrajectoryProfile::static_level(1.0, 100.0)).unwrap();
        let samples = synthesize_imu(&track, &NoiseModel::quiet(), 5).unwrap();
        let field = field_in_body(EulerAngles::default(), 0.0, 60f64.to_radians());
        for s in samples {
            assert_eq!(s.gyro, BodyRates::default());
            assert_eq!(s.accel, AccelVector::new(0.0, 0.0, STANDARD_GRAVITY));
            assert_eq!(s.mag, field);
        }
    }

    #[test]
    fn quiet_noise_measurements_invert_to_truth() {
        let track =
            generate_trajectory(&TrajectoryProfile::low_dynamic(5.0, 100.0, 11)).unwrap();
        let samples = synthesize_imu(&track, &NoiseModel::quiet(), 1).unwrap();
        for (s, att) in samples.iter().zip(&track.attitude) {
            let (roll, pitch) = accel_attitude(s.accel).unwrap();
            assert!(angle_diff(roll, att.roll).unwrap().abs() < 1e-9);
            assert!(angle_diff(pitch, att.pitch).unwrap().abs() < 1e-9);
            let yaw = mag_yaw(s.mag, att.roll, att.pitch).unwrap();
            assert!(angle_diff(yaw, att.yaw).unwrap().abs() < 1e-9);
        }
    }

    #[test]
    fn gyro_bias_passes_through_on_static_track() {
        let track =
            generate_trajectory(&TrajectoryProfile::static_level(1.0, 100.0)).unwrap();
        let mut noise = NoiseModel::quiet();
        noise.gyro_bias = BodyRates::new(0.01, 0.0, 0.0);
        let samples = synthesize_imu(&track, &noise, 3).unwrap();
        for s in samples {
            assert_eq!(s.gyro, BodyRates::new(0.01, 0.0, 0.0));
        }
    }

    #[test]
    fn synthesize_is_deterministic_and_streams_are_isolated() {
        let track =
            generate_trajectory(&TrajectoryProfile::low_dynamic(3.0, 100.0, 2)).unwrap();
        let a = synthesize_imu(&track, &NoiseModel::default(), 9).unwrap();
        let b = synthesize_imu(&track, &NoiseModel::default(), 9).unwrap();
        assert_eq!(a, b);

        // bump only the mag noise: gyro and accel channels must not move
        let mut louder_mag = NoiseModel::default();
        louder_mag.mag_sigma *= 10.0;
        let c = synthesize_imu(&track, &louder_mag, 9).unwrap();
        for (x, y) in a.iter().zip(&c) {
            assert_eq!(x.gyro, y.gyro);
            assert_eq!(x.accel, y.accel);
            assert_ne!(x.mag, y.mag);
        }
    }

    #[test]
    fn integration_error_shrinks_with_step_size() {
        // forward Euler over the quiet gyro stream: halving dt should
        // roughly halve the worst tracking error
        let max_err = |rate: f64| -> f64 {
            let profile = TrajectoryProfile::low_dynamic(20.0, rate, 17);
            let track = generate_trajectory(&profile).unwrap();
            let samples = synthesize_imu(&track, &NoiseModel::quiet(), 0).unwrap();
            let dt = 1.0 / rate;
            let mut att = track.attitude[0];
            let mut worst = 0.0f64;
            for i in 1..track.len() {
                att = crate::attitude::integrate_gyro(att, samples[i - 1].gyro, dt).unwrap();
                let truth = track.attitude[i];
                for (a, b) in [
                    (att.roll, truth.roll),
                    (att.pitch, truth.pitch),
                    (att.yaw, truth.yaw),
                ] {
                    worst = worst.max(angle_diff(a, b).unwrap().abs());
                }
            }
            worst
        };
        let coarse = max_err(100.0);
        let fine = max_err(200.0);
        assert!(coarse < 0.05, "integration diverged: {coarse}");
        assert!(
            fine < 0.75 * coarse,
            "halving dt did not shrink the error: {coarse} -> {fine}"
        );
    }

    proptest! {
        #[test]
        fn euler_rate_round_trip(
            roll in -3.0f64..3.0,
            pitch in -1.3f64..1.3,
            yaw in -3.0f64..3.0,
            rr in -3.0f64..3.0,
            pr in -3.0f64..3.0,
            yr in -3.0f64..3.0,
        ) {
            let att = EulerAngles::new(roll, pitch, yaw);
            let er = EulerRates::new(rr, pr, yr);
            let w = body_rates_from_euler(att, er).unwrap();
            let back = euler_rates(att, w).unwrap();
            prop_assert!((back.roll_rate - er.roll_rate).abs() < 1e-12);
            prop_assert!((back.pitch_rate - er.pitch_rate).abs() < 1e-12);
            prop_assert!((back.yaw_rate - er.yaw_rate).abs() < 1e-12);
        }
    }
}
