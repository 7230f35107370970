//! Per-dataset runners for the estimators that need no training: open-loop
//! gyro integration and the direct per-sensor extraction.

use crate::attitude::{
    accel_attitude, integrate_gyro, mag_yaw, AttitudeError, EulerAngles,
};
use crate::dataset::LabeledDataset;

/// Dead-reckoned attitude: forward-Euler integration of the gyro stream
/// from `init`. The estimate at index i integrates the rates observed up
/// to sample i−1, so it aligns with the reference timestamps.
pub fn run_gyro(
    ds: &LabeledDataset,
    init: EulerAngles,
) -> Result<Vec<EulerAngles>, AttitudeError> {
    let dt = ds.dt();
    let mut estimates = Vec::with_capacity(ds.len());
    let mut att = init;
    estimates.push(att);
    for i in 1..ds.len() {
        att = integrate_gyro(att, ds.samples[i - 1].gyro, dt)?;
        estimates.push(att);
    }
    Ok(estimates)
}

/// Instantaneous per-sensor attitude: accel roll/pitch and tilt-compensated
/// mag yaw at every sample, no filtering. Degenerate readings hold the
/// previous value.
pub fn run_accelmag(ds: &LabeledDataset) -> Vec<EulerAngles> {
    let mut estimates = Vec::with_capacity(ds.len());
    let mut last = EulerAngles::default();
    for s in &ds.samples {
        if let Ok((roll, pitch)) = accel_attitude(s.accel) {
            last.roll = roll;
            last.pitch = pitch;
            if let Ok(yaw) = mag_yaw(s.mag, roll, pitch) {
                last.yaw = yaw;
            }
        }
        estimates.push(last);
    }
    estimates
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::attitude::angle_diff;
    use crate::sim::{generate_trajectory, synthesize_imu, NoiseModel, TrajectoryProfile};

    fn quiet_dataset(duration: f64, seed: u64) -> (LabeledDataset, Vec<EulerAngles>) {
        let profile = TrajectoryProfile::low_dynamic(duration, 100.0, seed);
        let track = generate_trajectory(&profile).unwrap();
        let samples = synthesize_imu(&track, &NoiseModel::quiet(), seed).unwrap();
        let truth = track.attitude.clone();
        (
            LabeledDataset::new(samples, track.attitude, track.rate).unwrap(),
            truth,
        )
    }

    #[test]
    fn gyro_tracks_quiet_data_from_true_init() {
        let (ds, truth) = quiet_dataset(10.0, 21);
        let estimates = run_gyro(&ds, truth[0]).unwrap();
        for (est, tru) in estimates.iter().zip(&truth) {
            for (a, b) in [
                (est.roll, tru.roll),
                (est.pitch, tru.pitch),
                (est.yaw, tru.yaw),
            ] {
                assert!(angle_diff(a, b).unwrap().abs() < 0.03);
            }
        }
    }

    #[test]
    fn accelmag_is_per_sample_definition() {
        let (ds, truth) = quiet_dataset(2.0, 22);
        let estimates = run_accelmag(&ds);
        for (i, est) in estimates.iter().enumerate() {
            let (roll, pitch) = accel_attitude(ds.samples[i].accel).unwrap();
            let yaw = mag_yaw(ds.samples[i].mag, roll, pitch).unwrap();
            assert_eq!(est.roll, roll);
            assert_eq!(est.pitch, pitch);
            assert_eq!(est.yaw, yaw);
            assert!(angle_diff(est.roll, truth[i].roll).unwrap().abs() < 1e-9);
        }
    }

    #[test]
    fn accelmag_holds_previous_value_through_free_fall() {
        let (mut ds, _) = quiet_dataset(1.0, 23);
        // a mid-run free-fall sample
        ds.samples[50].accel = crate::attitude::AccelVector::new(0.0, 0.0, 0.01);
        let estimates = run_accelmag(&ds);
        assert_eq!(estimates[50], estimates[49]);
    }

    #[test]
    fn biased_gyro_drifts_linearly() {
        let track =
            generate_trajectory(&TrajectoryProfile::static_level(60.0, 100.0)).unwrap();
        let mut noise = NoiseModel::quiet();
        noise.gyro_bias = crate::attitude::BodyRates::new(0.01, 0.0, 0.0);
        let samples = synthesize_imu(&track, &noise, 0).unwrap();
        let ds = LabeledDataset::new(samples, track.attitude, track.rate).unwrap();
        let estimates = run_gyro(&ds, EulerAngles::default()).unwrap();
        let drift = estimates.last().unwrap().roll;
        // 0.01 rad/s × 60 s, one step short of the full minute
        assert!((drift - 0.6).abs() < 1e-3, "drift {drift}");
    }
}
