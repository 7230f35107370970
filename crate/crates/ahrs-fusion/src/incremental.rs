//! Two-phase estimation: offline training on recorded data, then streaming
//! prediction with periodic in-run weight updates.
//!
//! During streaming every sample t ≥ 1 is predicted from the window
//! (x_{t−1}, x_t) using the weights as they are at that moment; the pair is
//! then buffered together with its teacher value. Once the buffer holds
//! `window_len` pairs, the network trains on it for `update_epochs` passes
//! and the buffer is cleared. Predictions are therefore strictly causal:
//! the estimate at t never sees data beyond t.
//!
//! The teacher is either the dataset's reference attitude (mirrors replaying
//! logged ground truth) or a parallel EKF (a deployment-realistic target
//! that needs no ground truth at run time).

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::attitude::{wrap, EulerAngles};
use crate::dataset::{ChannelStats, DatasetError, LabeledDataset};
use crate::ekf::{Ekf, EkfConfig, EkfError};
use crate::lstm::{
    batch_loss, network_forward, train, InputWindow, LstmError, LstmNetwork, TrainConfig,
    TrainingPair,
};

#[derive(Debug, Error)]
pub enum IncrementalError {
    #[error(transparent)]
    Lstm(#[from] LstmError),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Ekf(#[from] EkfError),
    #[error(transparent)]
    Attitude(#[from] crate::attitude::AttitudeError),
    #[error("invalid incremental config: {0}")]
    Config(String),
}

/// Teacher signal for the in-run updates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Teacher {
    Reference,
    Ekf,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IncrementalConfig {
    /// Buffered pairs per update (3000 samples ≙ 30 s at 100 Hz).
    pub window_len: usize,
    /// Training passes over the buffer at each update.
    pub update_epochs: usize,
    /// Learning rate for the in-run updates, lower than offline training to
    /// limit forgetting.
    pub update_learning_rate: f64,
    pub update_batch_size: usize,
    pub teacher: Teacher,
    pub seed: u64,
}

impl Default for IncrementalConfig {
    fn default() -> Self {
        Self {
            window_len: 3000,
            update_epochs: 5,
            update_learning_rate: 3e-4,
            update_batch_size: 64,
            teacher: Teacher::Reference,
            seed: 0,
        }
    }
}

impl IncrementalConfig {
    pub fn validate(&self) -> Result<(), IncrementalError> {
        if self.window_len < 2 {
            return Err(IncrementalError::Config("window_len must be >= 2".into()));
        }
        if !(self.update_learning_rate > 0.0) {
            return Err(IncrementalError::Config(
                "update_learning_rate must be > 0".into(),
            ));
        }
        if self.update_batch_size == 0 {
            return Err(IncrementalError::Config(
                "update_batch_size must be >= 1".into(),
            ));
        }
        Ok(())
    }

    fn update_train_config(&self, event_index: u64) -> TrainConfig {
        TrainConfig {
            learning_rate: self.update_learning_rate,
            epochs: self.update_epochs,
            batch_size: self.update_batch_size,
            seed: self.seed.wrapping_add(event_index),
            ..TrainConfig::default()
        }
    }
}

/// One in-run weight update: where it happened and the buffer loss around it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UpdateEvent {
    /// Index of the last sample whose pair entered the update.
    pub sample_index: usize,
    pub pre_loss: f64,
    pub post_loss: f64,
}

/// Streaming output: one estimate per sample from index 1 on (the first
/// sample only seeds the window), plus the update log.
#[derive(Debug, Clone)]
pub struct StreamReport {
    pub estimates: Vec<EulerAngles>,
    pub events: Vec<UpdateEvent>,
}

/// Builds the standardized (window, reference target) pairs for t ≥ 1.
pub fn build_pairs(ds: &LabeledDataset, stats: &ChannelStats) -> Vec<TrainingPair> {
    (1..ds.len())
        .map(|t| TrainingPair {
            window: window_at(ds, stats, t),
            target: angles_to_vector(ds.reference[t]),
        })
        .collect()
}

fn window_at(ds: &LabeledDataset, stats: &ChannelStats, t: usize) -> InputWindow {
    InputWindow::from_channel_pair(
        stats.standardize(ds.samples[t - 1].channels()),
        stats.standardize(ds.samples[t].channels()),
    )
}

fn angles_to_vector(a: EulerAngles) -> Vector3<f64> {
    Vector3::new(a.roll, a.pitch, a.yaw)
}

fn vector_to_angles(v: Vector3<f64>) -> EulerAngles {
    EulerAngles {
        roll: wrap(v.x),
        pitch: wrap(v.y),
        yaw: wrap(v.z),
    }
}

/// Offline phase: computes the input statistics from the training set
/// (frozen through all later updates), builds the pairs, and trains.
/// Returns the per-epoch loss trace.
pub fn offline_phase(
    net: &mut LstmNetwork,
    train_set: &LabeledDataset,
    config: &TrainConfig,
    normalize: bool,
) -> Result<Vec<f64>, IncrementalError> {
    net.input_stats = if normalize {
        train_set.compute_stats()?
    } else {
        ChannelStats::identity()
    };
    let pairs = build_pairs(train_set, &net.input_stats.clone());
    if config.epochs == 0 {
        return Ok(Vec::new());
    }
    Ok(train(net, &pairs, config)?)
}

/// Frozen-weights estimation: one prediction per sample from index 1 on.
pub fn run_offline(
    net: &LstmNetwork,
    ds: &LabeledDataset,
) -> Result<Vec<EulerAngles>, IncrementalError> {
    let mut estimates = Vec::with_capacity(ds.len().saturating_sub(1));
    for t in 1..ds.len() {
        let pred = network_forward(net, &window_at(ds, &net.input_stats, t))?;
        estimates.push(vector_to_angles(pred));
    }
    Ok(estimates)
}

/// Streaming estimation with periodic weight updates.
pub fn stream(
    net: &mut LstmNetwork,
    ds: &LabeledDataset,
    config: &IncrementalConfig,
    ekf_config: &EkfConfig,
) -> Result<StreamReport, IncrementalError> {
    config.validate()?;
    if ds.len() < config.window_len + 1 {
        return Err(IncrementalError::Config(format!(
            "dataset has {} samples, streaming needs at least window_len + 1 = {}",
            ds.len(),
            config.window_len + 1
        )));
    }
    let stats = net.input_stats;
    let dt = ds.dt();
    let mut teacher_ekf = match config.teacher {
        Teacher::Ekf => {
            let mut ekf = Ekf::new(ekf_config)?;
            // bring the teacher up to date with sample 0
            ekf.predict(ds.samples[0].gyro, dt)?;
            ekf.update(ds.samples[0].accel, ds.samples[0].mag);
            Some(ekf)
        }
        Teacher::Reference => None,
    };

    let mut estimates = Vec::with_capacity(ds.len() - 1);
    let mut events = Vec::new();
    let mut buffer: Vec<TrainingPair> = Vec::with_capacity(config.window_len);
    for t in 1..ds.len() {
        let window = window_at(ds, &stats, t);
        let pred = network_forward(net, &window)?;
        estimates.push(vector_to_angles(pred));

        let target = match &mut teacher_ekf {
            Some(ekf) => {
                ekf.predict(ds.samples[t].gyro, dt)?;
                ekf.update(ds.samples[t].accel, ds.samples[t].mag);
                angles_to_vector(ekf.state().attitude)
            }
            None => angles_to_vector(ds.reference[t]),
        };
        buffer.push(TrainingPair { window, target });

        if buffer.len() == config.window_len {
            let refs: Vec<&TrainingPair> = buffer.iter().collect();
            let pre_loss = batch_loss(net, &refs)?;
            if config.update_epochs > 0 {
                train(net, &buffer, &config.update_train_config(events.len() as u64))?;
            }
            let post_loss = batch_loss(net, &buffer.iter().collect::<Vec<_>>())?;
            events.push(UpdateEvent {
                sample_index: t,
                pre_loss,
                post_loss,
            });
            buffer.clear();
        }
    }
    Ok(StreamReport { estimates, events })
}
