//! Attitude estimation toolkit for 9-axis IMU streams.
//!
//! Three interchangeable estimators — open-loop gyro integration, an
//! Extended Kalman Filter, and a two-layer LSTM that can retrain itself
//! on a fixed cadence while streaming — plus a seeded IMU simulator,
//! canonical dataset handling, and RMSE reporting to compare them.
//!
//! Modules:
//! - [`attitude`]: Euler-angle kinematics and per-sensor attitude extraction
//! - [`sim`]: ground-truth trajectory generation and IMU synthesis
//! - [`dataset`]: labeled datasets, CSV round-tripping, splits, statistics
//! - [`ekf`]: the Kalman baseline
//! - [`lstm`]: the network, backpropagation through time, Adam, persistence
//! - [`incremental`]: offline training phase and the streaming update loop
//! - [`estimators`]: per-dataset runners for the simple estimators
//! - [`metrics`]: RMSE/variance reports

pub mod attitude;
pub mod dataset;
pub mod ekf;
pub mod estimators;
pub mod incremental;
pub mod lstm;
pub mod metrics;
pub mod sim;
