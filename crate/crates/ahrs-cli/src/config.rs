//! TOML run configuration with one section per subsystem. Every field has
//! a default, unknown keys are rejected, and `--seed` reseeds all seeded
//! sections at once.

use std::path::Path;

use serde::Deserialize;

use ahrs_fusion::attitude::{BodyRates, EulerAngles};
use ahrs_fusion::ekf::EkfConfig;
use ahrs_fusion::incremental::{IncrementalConfig, Teacher};
use ahrs_fusion::lstm::TrainConfig;
use ahrs_fusion::sim::{DisturbancePulses, NoiseModel, Regime, TrajectoryProfile};

use crate::CliError;

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub simulate: SimulateSection,
    #[serde(default)]
    pub noise: NoiseSection,
    #[serde(default)]
    pub ekf: EkfSection,
    #[serde(default)]
    pub lstm: LstmSection,
    #[serde(default)]
    pub train: TrainSection,
    #[serde(default)]
    pub incremental: IncrementalSection,
    #[serde(default)]
    pub benchmark: BenchmarkSection,
    #[serde(default)]
    pub convert: Option<ConvertSection>,
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        match path {
            None => Ok(Self::default()),
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| CliError::Io(format!("reading {}: {e}", path.display())))?;
                toml::from_str(&text)
                    .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
            }
        }
    }

    /// `--seed N` reseeds every seeded stage: trajectory, network
    /// initialization, offline shuffling, and incremental updates.
    pub fn override_seed(&mut self, seed: u64) {
        self.simulate.seed = seed;
        self.lstm.init_seed = seed;
        self.train.seed = seed;
        self.incremental.seed = seed;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CliRegime {
    LowDynamic,
    HighDynamic,
    Static,
}

impl std::str::FromStr for CliRegime {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "low_dynamic" | "low" => Ok(Self::LowDynamic),
            "high_dynamic" | "high" => Ok(Self::HighDynamic),
            "static" => Ok(Self::Static),
            other => Err(format!(
                "unknown regime {other:?} (expected low_dynamic, high_dynamic, or static)"
            )),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulateSection {
    pub regime: CliRegime,
    /// seconds
    pub duration: f64,
    /// Hz
    pub rate: f64,
    /// Trajectory seed; the measurement-noise stream uses `seed + 1`.
    pub seed: u64,
}

impl Default for SimulateSection {
    fn default() -> Self {
        Self {
            regime: CliRegime::LowDynamic,
            duration: 60.0,
            rate: 100.0,
            seed: 1,
        }
    }
}

impl SimulateSection {
    pub fn profile(&self) -> TrajectoryProfile {
        match self.regime {
            CliRegime::LowDynamic => {
                TrajectoryProfile::preset(Regime::LowDynamic, self.duration, self.rate, self.seed)
            }
            CliRegime::HighDynamic => {
                TrajectoryProfile::preset(Regime::HighDynamic, self.duration, self.rate, self.seed)
            }
            CliRegime::Static => TrajectoryProfile::static_level(self.duration, self.rate),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NoiseSection {
    pub gyro_bias: [f64; 3],
    pub gyro_sigma: f64,
    pub accel_sigma: f64,
    pub mag_sigma: f64,
    pub disturbance_rate: f64,
    pub disturbance_amplitude: f64,
    pub disturbance_duration: f64,
    /// radians
    pub declination: f64,
    /// radians
    pub dip: f64,
}

impl Default for NoiseSection {
    fn default() -> Self {
        let m = NoiseModel::default();
        Self {
            gyro_bias: [m.gyro_bias.p, m.gyro_bias.q, m.gyro_bias.r],
            gyro_sigma: m.gyro_sigma,
            accel_sigma: m.accel_sigma,
            mag_sigma: m.mag_sigma,
            disturbance_rate: m.disturbance.rate_per_sec,
            disturbance_amplitude: m.disturbance.amplitude,
            disturbance_duration: m.disturbance.duration,
            declination: m.declination,
            dip: m.dip,
        }
    }
}

impl NoiseSection {
    pub fn model(&self) -> NoiseModel {
        NoiseModel {
            gyro_bias: BodyRates::new(self.gyro_bias[0], self.gyro_bias[1], self.gyro_bias[2]),
            gyro_sigma: self.gyro_sigma,
            accel_sigma: self.accel_sigma,
            mag_sigma: self.mag_sigma,
            disturbance: DisturbancePulses {
                rate_per_sec: self.disturbance_rate,
                amplitude: self.disturbance_amplitude,
                duration: self.disturbance_duration,
            },
            declination: self.declination,
            dip: self.dip,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EkfSection {
    pub q_diag: [f64; 3],
    pub r_diag: [f64; 3],
    pub p0_diag: [f64; 3],
    /// roll, pitch, yaw in radians
    pub initial_attitude: [f64; 3],
    /// Start from the dataset's first reference row instead of
    /// `initial_attitude`.
    pub init_from_reference: bool,
    /// Append a covariance-trace column to estimate CSVs.
    pub emit_cov_trace: bool,
}

impl Default for EkfSection {
    fn default() -> Self {
        let c = EkfConfig::default();
        Self {
            q_diag: c.q_diag,
            r_diag: c.r_diag,
            p0_diag: c.p0_diag,
            initial_attitude: [0.0; 3],
            init_from_reference: true,
            emit_cov_trace: false,
        }
    }
}

impl EkfSection {
    pub fn config(&self, reference_init: Option<EulerAngles>) -> EkfConfig {
        let initial_attitude = match (self.init_from_reference, reference_init) {
            (true, Some(init)) => init,
            _ => EulerAngles::new(
                self.initial_attitude[0],
                self.initial_attitude[1],
                self.initial_attitude[2],
            ),
        };
        EkfConfig {
            q_diag: self.q_diag,
            r_diag: self.r_diag,
            p0_diag: self.p0_diag,
            initial_attitude,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LstmSection {
    pub hidden1: usize,
    pub hidden2: usize,
    pub init_seed: u64,
    /// Standardize inputs with training-set statistics (frozen afterwards).
    pub normalize: bool,
}

impl Default for LstmSection {
    fn default() -> Self {
        Self {
            hidden1: 32,
            hidden2: 32,
            init_seed: 42,
            normalize: true,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainSection {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub clip_norm: f64,
}

impl Default for TrainSection {
    fn default() -> Self {
        let c = TrainConfig::default();
        Self {
            learning_rate: c.learning_rate,
            epochs: c.epochs,
            batch_size: c.batch_size,
            seed: 7,
            beta1: c.beta1,
            beta2: c.beta2,
            epsilon: c.epsilon,
            clip_norm: c.clip_norm,
        }
    }
}

impl TrainSection {
    pub fn config(&self) -> TrainConfig {
        TrainConfig {
            learning_rate: self.learning_rate,
            epochs: self.epochs,
            batch_size: self.batch_size,
            seed: self.seed,
            beta1: self.beta1,
            beta2: self.beta2,
            epsilon: self.epsilon,
            clip_norm: self.clip_norm,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IncrementalSection {
    pub window_len: usize,
    pub update_epochs: usize,
    pub update_learning_rate: f64,
    pub update_batch_size: usize,
    /// `reference` or `ekf`
    pub teacher: Teacher,
    pub seed: u64,
}

impl Default for IncrementalSection {
    fn default() -> Self {
        let c = IncrementalConfig::default();
        Self {
            window_len: c.window_len,
            update_epochs: c.update_epochs,
            update_learning_rate: c.update_learning_rate,
            update_batch_size: c.update_batch_size,
            teacher: Teacher::Reference,
            seed: 11,
        }
    }
}

impl IncrementalSection {
    pub fn config(&self) -> IncrementalConfig {
        IncrementalConfig {
            window_len: self.window_len,
            update_epochs: self.update_epochs,
            update_learning_rate: self.update_learning_rate,
            update_batch_size: self.update_batch_size,
            teacher: self.teacher,
            seed: self.seed,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BenchmarkSection {
    /// Contiguous fraction of each dataset used for offline training.
    pub train_fraction: f64,
}

impl Default for BenchmarkSection {
    fn default() -> Self {
        Self {
            train_fraction: 0.5,
        }
    }
}

/// Column mapping for ingesting externally recorded CSVs. Source columns
/// are referenced by header name; `scale` entries multiply a column after
/// reading (unit conversions).
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvertSection {
    /// Hz of the source recording.
    pub rate: f64,
    /// canonical column name -> source header name; `t` may be omitted, in
    /// which case timestamps are synthesized from `rate`.
    pub map: std::collections::BTreeMap<String, String>,
    #[serde(default)]
    pub scale: std::collections::BTreeMap<String, f64>,
}
