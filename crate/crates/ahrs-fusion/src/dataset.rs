//! Labeled dataset container, CSV serialization, splitting, and per-channel
//! standardization statistics.
//!
//! The canonical on-disk format is a UTF-8, LF-terminated CSV with the exact
//! header `t,gx,gy,gz,ax,ay,az,mx,my,mz,roll,pitch,yaw` and values rendered
//! at 17 significant digits, which round-trips `f64` losslessly.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::Path;

use thiserror::Error;

use crate::attitude::{AccelVector, BodyRates, EulerAngles, MagVector};

pub const CSV_HEADER: &str = "t,gx,gy,gz,ax,ay,az,mx,my,mz,roll,pitch,yaw";
const COLUMNS: usize = 13;
/// Channels feeding the estimators, in CSV column order.
pub const CHANNELS: usize = 9;
const STDDEV_FLOOR: f64 = 1e-8;
/// Allowed timestamp deviation from the nominal grid (seconds).
const TIME_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    #[error("line {line}: expected {COLUMNS} columns, found {found}")]
    WrongColumnCount { line: usize, found: usize },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invalid dataset: {0}")]
    Invalid(String),
    #[error("train fraction must lie strictly between 0 and 1, got {0}")]
    SplitFraction(f64),
    #[error("dataset is empty")]
    Empty,
}

/// One timestamped 9-value measurement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImuSample {
    /// seconds
    pub t: f64,
    pub gyro: BodyRates,
    pub accel: AccelVector,
    pub mag: MagVector,
}

impl ImuSample {
    /// The nine input channels in CSV column order:
    /// gx, gy, gz, ax, ay, az, mx, my, mz.
    pub fn channels(&self) -> [f64; CHANNELS] {
        [
            self.gyro.p,
            self.gyro.q,
            self.gyro.r,
            self.accel.ax,
            self.accel.ay,
            self.accel.az,
            self.mag.mx,
            self.mag.my,
            self.mag.mz,
        ]
    }

    pub fn is_finite(&self) -> bool {
        self.t.is_finite() && self.channels().iter().all(|v| v.is_finite())
    }
}

/// Measurement sequence plus reference attitude at a fixed rate.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    pub samples: Vec<ImuSample>,
    pub reference: Vec<EulerAngles>,
    /// Hz
    pub rate: f64,
}

impl LabeledDataset {
    pub fn new(
        samples: Vec<ImuSample>,
        reference: Vec<EulerAngles>,
        rate: f64,
    ) -> Result<Self, DatasetError> {
        let ds = Self {
            samples,
            reference,
            rate,
        };
        ds.validate()?;
        Ok(ds)
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Sample spacing in seconds.
    pub fn dt(&self) -> f64 {
        1.0 / self.rate
    }

    pub fn validate(&self) -> Result<(), DatasetError> {
        if self.samples.len() != self.reference.len() {
            return Err(DatasetError::Invalid(format!(
                "{} samples vs {} reference rows",
                self.samples.len(),
                self.reference.len()
            )));
        }
        if self.samples.len() < 2 {
            return Err(DatasetError::Invalid(
                "datasets need at least 2 samples".into(),
            ));
        }
        if !(self.rate > 0.0) || !self.rate.is_finite() {
            return Err(DatasetError::Invalid("rate must be > 0".into()));
        }
        let t0 = self.samples[0].t;
        for (i, s) in self.samples.iter().enumerate() {
            if !s.is_finite() {
                return Err(DatasetError::Invalid(format!("non-finite sample {i}")));
            }
            let nominal = t0 + i as f64 / self.rate;
            if (s.t - nominal).abs() > TIME_TOLERANCE {
                return Err(DatasetError::Invalid(format!(
                    "timestamp {} at row {i} deviates from the {} Hz grid",
                    s.t, self.rate
                )));
            }
        }
        for (i, r) in self.reference.iter().enumerate() {
            if !r.is_finite() {
                return Err(DatasetError::Invalid(format!("non-finite reference {i}")));
            }
            let pi = std::f64::consts::PI;
            let half_pi = std::f64::consts::FRAC_PI_2;
            if r.roll <= -pi - 1e-9
                || r.roll > pi + 1e-9
                || r.yaw <= -pi - 1e-9
                || r.yaw > pi + 1e-9
                || r.pitch.abs() > half_pi + 1e-9
            {
                return Err(DatasetError::Invalid(format!(
                    "reference angles out of range at row {i}"
                )));
            }
        }
        Ok(())
    }

    /// Contiguous prefix/suffix split; sequence order is preserved.
    pub fn split(&self, train_fraction: f64) -> Result<(Self, Self), DatasetError> {
        if !(train_fraction > 0.0 && train_fraction < 1.0) {
            return Err(DatasetError::SplitFraction(train_fraction));
        }
        let n = self.len();
        let train_len = (n as f64 * train_fraction).floor() as usize;
        if train_len < 2 || n - train_len < 2 {
            return Err(DatasetError::Invalid(format!(
                "split {train_fraction} leaves a side with fewer than 2 samples"
            )));
        }
        let train = Self {
            samples: self.samples[..train_len].to_vec(),
            reference: self.reference[..train_len].to_vec(),
            rate: self.rate,
        };
        let test = Self {
            samples: self.samples[train_len..].to_vec(),
            reference: self.reference[train_len..].to_vec(),
            rate: self.rate,
        };
        Ok((train, test))
    }

    /// Appends another dataset recorded at the same rate. Timestamps of
    /// `other` are rebased to continue this dataset's grid.
    pub fn concat(&self, other: &Self) -> Result<Self, DatasetError> {
        if (self.rate - other.rate).abs() > 1e-9 {
            return Err(DatasetError::Invalid(format!(
                "rate mismatch: {} vs {}",
                self.rate, other.rate
            )));
        }
        let t0 = self.samples[0].t;
        let mut samples = self.samples.clone();
        let mut reference = self.reference.clone();
        let offset = self.len();
        for (i, s) in other.samples.iter().enumerate() {
            let mut s = *s;
            s.t = t0 + (offset + i) as f64 / self.rate;
            samples.push(s);
        }
        reference.extend_from_slice(&other.reference);
        Self::new(samples, reference, self.rate)
    }

    pub fn compute_stats(&self) -> Result<ChannelStats, DatasetError> {
        if self.is_empty() {
            return Err(DatasetError::Empty);
        }
        let n = self.len() as f64;
        let mut mean = [0.0; CHANNELS];
        for s in &self.samples {
            for (m, v) in mean.iter_mut().zip(s.channels()) {
                *m += v;
            }
        }
        for m in &mut mean {
            *m /= n;
        }
        let mut var = [0.0; CHANNELS];
        for s in &self.samples {
            for ((v, m), x) in var.iter_mut().zip(mean).zip(s.channels()) {
                let d = x - m;
                *v += d * d;
            }
        }
        let mut stddev = [0.0; CHANNELS];
        for (s, v) in stddev.iter_mut().zip(var) {
            *s = (v / n).sqrt().max(STDDEV_FLOOR);
        }
        Ok(ChannelStats { mean, stddev })
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<(), DatasetError> {
        self.validate()?;
        fs::write(path, self.to_csv_string())?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut out = String::with_capacity(32 + self.len() * 13 * 25);
        out.push_str(CSV_HEADER);
        out.push('\n');
        for (s, r) in self.samples.iter().zip(&self.reference) {
            let c = s.channels();
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{},{},{}",
                fmt_f64(s.t),
                fmt_f64(c[0]),
                fmt_f64(c[1]),
                fmt_f64(c[2]),
                fmt_f64(c[3]),
                fmt_f64(c[4]),
                fmt_f64(c[5]),
                fmt_f64(c[6]),
                fmt_f64(c[7]),
                fmt_f64(c[8]),
                fmt_f64(r.roll),
                fmt_f64(r.pitch),
                fmt_f64(r.yaw),
            );
        }
        out
    }

    pub fn read_csv(path: impl AsRef<Path>) -> Result<Self, DatasetError> {
        let text = fs::read_to_string(path)?;
        Self::from_csv_string(&text)
    }

    pub fn from_csv_string(text: &str) -> Result<Self, DatasetError> {
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, header)) if header.trim_end() == CSV_HEADER => {}
            Some((_, header)) => {
                return Err(DatasetError::Parse {
                    line: 1,
                    message: format!("unexpected header {header:?}"),
                })
            }
            None => return Err(DatasetError::Empty),
        }
        let mut samples = Vec::new();
        let mut reference = Vec::new();
        for (idx, raw) in lines {
            let line = idx + 1;
            if raw.trim().is_empty() {
                continue;
            }
            let mut values = [0.0f64; COLUMNS];
            let mut count = 0;
            for field in raw.split(',') {
                if count < COLUMNS {
                    values[count] = field.trim().parse::<f64>().map_err(|e| {
                        DatasetError::Parse {
                            line,
                            message: format!("bad number {field:?}: {e}"),
                        }
                    })?;
                }
                count += 1;
            }
            if count != COLUMNS {
                return Err(DatasetError::WrongColumnCount { line, found: count });
            }
            if values.iter().any(|v| !v.is_finite()) {
                return Err(DatasetError::Parse {
                    line,
                    message: "non-finite value".into(),
                });
            }
            samples.push(ImuSample {
                t: values[0],
                gyro: BodyRates::new(values[1], values[2], values[3]),
                accel: AccelVector::new(values[4], values[5], values[6]),
                mag: MagVector::new(values[7], values[8], values[9]),
            });
            reference.push(EulerAngles::new(values[10], values[11], values[12]));
        }
        if samples.len() < 2 {
            return Err(DatasetError::Invalid(
                "datasets need at least 2 samples".into(),
            ));
        }
        let rate = 1.0 / (samples[1].t - samples[0].t);
        Self::new(samples, reference, rate)
    }
}

/// Renders with 17 significant digits; parsing the result recovers the
/// exact bits.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Per-channel mean and population standard deviation over the nine inputs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelStats {
    pub mean: [f64; CHANNELS],
    pub stddev: [f64; CHANNELS],
}

impl ChannelStats {
    /// Mean 0, stddev 1: standardization becomes the identity.
    pub fn identity() -> Self {
        Self {
            mean: [0.0; CHANNELS],
            stddev: [1.0; CHANNELS],
        }
    }

    /// `(x − mean) / stddev` per channel.
    pub fn standardize(&self, channels: [f64; CHANNELS]) -> [f64; CHANNELS] {
        let mut out = [0.0; CHANNELS];
        for i in 0..CHANNELS {
            out[i] = (channels[i] - self.mean[i]) / self.stddev[i];
        }
        out
    }
}
