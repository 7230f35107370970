//! RMSE and variance reporting for estimator comparisons.
//!
//! Yaw errors are wrapped to the shortest arc by default; naive differencing
//! across the ±π cut would otherwise report 2π-sized errors. Reports carry
//! full precision and round to two decimals only for display.

use std::fmt::Write as _;

use thiserror::Error;

use crate::attitude::{wrap, EulerAngles};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MetricsError {
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("empty input")]
    Empty,
    #[error("need at least {0} values")]
    TooShort(usize),
}

/// Root mean square error between two angle sequences. With `wrapped` the
/// per-sample error is the shortest signed arc; otherwise it is the raw
/// difference.
pub fn rmse(truth: &[f64], estimate: &[f64], wrapped: bool) -> Result<f64, MetricsError> {
    if truth.len() != estimate.len() {
        return Err(MetricsError::LengthMismatch(truth.len(), estimate.len()));
    }
    if truth.is_empty() {
        return Err(MetricsError::Empty);
    }
    let mut sum_sq = 0.0;
    for (&x, &x_hat) in truth.iter().zip(estimate) {
        let e = if wrapped { wrap(x - x_hat) } else { x - x_hat };
        sum_sq += e * e;
    }
    Ok((sum_sq / truth.len() as f64).sqrt())
}

/// Arithmetic mean of the three axis RMSEs.
pub fn average_rmse(roll: f64, pitch: f64, yaw: f64) -> f64 {
    (roll + pitch + yaw) / 3.0
}

/// Population variance about the sample mean.
pub fn variance(series: &[f64]) -> Result<f64, MetricsError> {
    if series.len() < 2 {
        return Err(MetricsError::TooShort(2));
    }
    let n = series.len() as f64;
    let mean = series.iter().sum::<f64>() / n;
    Ok(series.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n)
}

/// Per-axis and average RMSE for one estimator on one dataset.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RmseReport {
    pub roll_rmse: f64,
    pub pitch_rmse: f64,
    pub yaw_rmse: f64,
    pub average_rmse: f64,
    pub n: usize,
}

impl RmseReport {
    pub fn from_estimates(
        reference: &[EulerAngles],
        estimate: &[EulerAngles],
        wrapped: bool,
    ) -> Result<Self, MetricsError> {
        if reference.len() != estimate.len() {
            return Err(MetricsError::LengthMismatch(
                reference.len(),
                estimate.len(),
            ));
        }
        let collect = |f: fn(&EulerAngles) -> f64, xs: &[EulerAngles]| -> Vec<f64> {
            xs.iter().map(f).collect()
        };
        let roll = rmse(
            &collect(|a| a.roll, reference),
            &collect(|a| a.roll, estimate),
            wrapped,
        )?;
        let pitch = rmse(
            &collect(|a| a.pitch, reference),
            &collect(|a| a.pitch, estimate),
            wrapped,
        )?;
        let yaw = rmse(
            &collect(|a| a.yaw, reference),
            &collect(|a| a.yaw, estimate),
            wrapped,
        )?;
        Ok(Self {
            roll_rmse: roll,
            pitch_rmse: pitch,
            yaw_rmse: yaw,
            average_rmse: average_rmse(roll, pitch, yaw),
            n: reference.len(),
        })
    }
}

/// RMSE table over datasets × estimators, in the layout of the benchmark:
/// one row per dataset, Roll/Pitch/Yaw/Average columns per estimator.
#[derive(Debug, Clone)]
pub struct BenchmarkReport {
    pub estimators: Vec<String>,
    pub rows: Vec<BenchmarkRow>,
}

#[derive(Debug, Clone)]
pub struct BenchmarkRow {
    pub dataset: String,
    pub reports: Vec<RmseReport>,
}

impl BenchmarkReport {
    pub fn new(estimators: Vec<String>) -> Self {
        Self {
            estimators,
            rows: Vec::new(),
        }
    }

    pub fn push_row(
        &mut self,
        dataset: impl Into<String>,
        reports: Vec<RmseReport>,
    ) -> Result<(), MetricsError> {
        if reports.len() != self.estimators.len() {
            return Err(MetricsError::LengthMismatch(
                reports.len(),
                self.estimators.len(),
            ));
        }
        self.rows.push(BenchmarkRow {
            dataset: dataset.into(),
            reports,
        });
        Ok(())
    }

    /// Aligned plain-text table, values in radians at two decimals.
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let width = 10usize;
        let _ = write!(out, "{:<12}", "dataset");
        for metric in ["roll", "pitch", "yaw", "average"] {
            for est in &self.estimators {
                let _ = write!(out, "{:>width$}", format!("{metric}/{est}"), width = width.max(metric.len() + est.len() + 2));
            }
        }
        out.push('\n');
        for row in &self.rows {
            let _ = write!(out, "{:<12}", row.dataset);
            for metric in 0..4 {
                for (est, report) in self.estimators.iter().zip(&row.reports) {
                    let v = match metric {
                        0 => report.roll_rmse,
                        1 => report.pitch_rmse,
                        2 => report.yaw_rmse,
                        _ => report.average_rmse,
                    };
                    let w = width.max(["roll", "pitch", "yaw", "average"][metric].len() + est.len() + 2);
                    let _ = write!(out, "{:>w$.2}", v, w = w);
                }
            }
            out.push('\n');
        }
        out
    }

    /// Full-precision CSV: `dataset,estimator,roll_rmse,pitch_rmse,yaw_rmse,average_rmse,n`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("dataset,estimator,roll_rmse,pitch_rmse,yaw_rmse,average_rmse,n\n");
        for row in &self.rows {
            for (est, r) in self.estimators.iter().zip(&row.reports) {
                let _ = writeln!(
                    out,
                    "{},{},{},{},{},{},{}",
                    row.dataset,
                    est,
                    crate::dataset::fmt_f64(r.roll_rmse),
                    crate::dataset::fmt_f64(r.pitch_rmse),
                    crate::dataset::fmt_f64(r.yaw_rmse),
                    crate::dataset::fmt_f64(r.average_rmse),
                    r.n,
                );
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn rmse_identical_sequences_is_zero() {
        let xs = [0.1, 0.5, -0.3];
        assert_eq!(rmse(&xs, &xs, false).unwrap(), 0.0);
        assert_eq!(rmse(&xs, &xs, true).unwrap(), 0.0);
    }

    #[test]
    fn rmse_hand_arithmetic() {
        let truth = [1.0, 2.0, 3.0];
        let est = [2.0, 2.0, 2.0];
        assert_relative_eq!(
            rmse(&truth, &est, false).unwrap(),
            (2.0f64 / 3.0).sqrt(),
            epsilon = 1e-12
        );
    }

    #[test]
    fn rmse_wrapped_crosses_branch_cut() {
        let truth = [3.1];
        let est = [-3.1];
        let expected = 2.0 * std::f64::consts::PI - 6.2;
        assert_relative_eq!(rmse(&truth, &est, true).unwrap(), expected, epsilon = 1e-12);
        assert_relative_eq!(rmse(&truth, &est, false).unwrap(), 6.2, epsilon = 1e-12);
    }

    #[test]
    fn rmse_rejects_bad_shapes() {
        assert_eq!(
            rmse(&[1.0], &[1.0, 2.0], false),
            Err(MetricsError::LengthMismatch(1, 2))
        );
        assert_eq!(rmse(&[], &[], false), Err(MetricsError::Empty));
    }

    #[test]
    fn average_rmse_matches_reported_rows() {
        // LSTM_inc rows of the reference comparison table
        let d1 = average_rmse(0.05, 0.03, 0.12);
        assert_relative_eq!(d1, 0.2 / 3.0, epsilon = 1e-12);
        assert_eq!(format!("{d1:.2}"), "0.07");
        let d6 = average_rmse(1.52, 0.45, 1.17);
        assert_relative_eq!(d6, 3.14 / 3.0, epsilon = 1e-12);
        assert_eq!(format!("{d6:.2}"), "1.05");
        assert_eq!(average_rmse(0.0, 0.0, 0.0), 0.0);
    }

    #[test]
    fn variance_hand_cases() {
        assert!(variance(&[0.7, 0.7, 0.7]).unwrap() < 1e-30);
        assert_relative_eq!(variance(&[1.0, 3.0]).unwrap(), 1.0);
        assert_relative_eq!(variance(&[-1.0, 0.0, 1.0]).unwrap(), 2.0 / 3.0);
        assert_eq!(variance(&[1.0]), Err(MetricsError::TooShort(2)));
    }

    #[test]
    fn report_has_table_shape() {
        let mut report = BenchmarkReport::new(vec![
            "lstm-inc".into(),
            "lstm".into(),
            "ekf".into(),
        ]);
        let perfect = RmseReport {
            roll_rmse: 0.0,
            pitch_rmse: 0.0,
            yaw_rmse: 0.0,
            average_rmse: 0.0,
            n: 10,
        };
        report.push_row("d1", vec![perfect; 3]).unwrap();
        report.push_row("d2", vec![perfect; 3]).unwrap();
        let csv = report.to_csv();
        assert_eq!(csv.lines().count(), 1 + 2 * 3);
        // 12 numeric RMSE cells per dataset row in the text table
        let table = report.to_table();
        let first_row = table.lines().nth(1).unwrap();
        assert_eq!(first_row.matches("0.00").count(), 12);
        assert!(report.push_row("d3", vec![perfect; 2]).is_err());
    }

    #[test]
    fn csv_round_trips_full_precision() {
        let mut report = BenchmarkReport::new(vec!["ekf".into()]);
        let r = RmseReport {
            roll_rmse: 0.123456789123456789,
            pitch_rmse: 1e-13,
            yaw_rmse: 2.5,
            average_rmse: average_rmse(0.123456789123456789, 1e-13, 2.5),
            n: 3,
        };
        report.push_row("d", vec![r]).unwrap();
        let csv = report.to_csv();
        let line = csv.lines().nth(1).unwrap();
        let fields: Vec<&str> = line.split(',').collect();
        assert_eq!(fields[2].parse::<f64>().unwrap(), r.roll_rmse);
        assert_eq!(fields[3].parse::<f64>().unwrap(), r.pitch_rmse);
        assert_eq!(fields[5].parse::<f64>().unwrap(), r.average_rmse);
    }

    proptest! {
        #[test]
        fn rmse_matches_brute_force_and_is_symmetric(
            pairs in proptest::collection::vec((-10.0f64..10.0, -10.0f64..10.0), 1..200)
        ) {
            let truth: Vec<f64> = pairs.iter().map(|p| p.0).collect();
            let est: Vec<f64> = pairs.iter().map(|p| p.1).collect();
            // independent brute-force loop
            let mut acc = 0.0;
            for i in 0..truth.len() {
                let e = truth[i] - est[i];
                acc += e * e;
            }
            let naive = (acc / truth.len() as f64).sqrt();
            let fast = rmse(&truth, &est, false).unwrap();
            prop_assert!((naive - fast).abs() < 1e-12);
            let swapped = rmse(&est, &truth, false).unwrap();
            prop_assert!((fast - swapped).abs() < 1e-12);
        }

        #[test]
        fn wrapped_and_raw_agree_for_small_errors(
            xs in proptest::collection::vec(-1.0f64..1.0, 1..50),
            noise in proptest::collection::vec(-0.5f64..0.5, 50)
        ) {
            let est: Vec<f64> = xs.iter().zip(&noise).map(|(x, n)| x + n).collect();
            let a = rmse(&xs, &est[..xs.len()], true).unwrap();
            let b = rmse(&xs, &est[..xs.len()], false).unwrap();
            prop_assert!((a - b).abs() < 1e-12);
        }

        #[test]
        fn average_of_equal_values_is_identity(a in 0.0f64..10.0) {
            prop_assert!((average_rmse(a, a, a) - a).abs() < 1e-12);
        }
    }
}
