//! Implementations of the five subcommands.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use ahrs_fusion::attitude::EulerAngles;
use ahrs_fusion::dataset::{fmt_f64, LabeledDataset};
use ahrs_fusion::ekf;
use ahrs_fusion::estimators;
use ahrs_fusion::incremental::{self, StreamReport};
use ahrs_fusion::lstm::{self, LstmNetwork};
use ahrs_fusion::metrics::{variance, BenchmarkReport, RmseReport};
use ahrs_fusion::sim::{generate_trajectory, synthesize_imu};

use crate::config::RunConfig;
use crate::{CliError, EstimatorArg};

pub fn simulate(config: &RunConfig, out: &Path) -> Result<(), CliError> {
    let profile = config.simulate.profile();
    let track = generate_trajectory(&profile)?;
    let samples = synthesize_imu(&track, &config.noise.model(), config.simulate.seed + 1)?;
    let ds = LabeledDataset::new(samples, track.attitude, track.rate)?;
    ds.write_csv(out)?;
    let axis = |f: fn(&EulerAngles) -> f64| -> Result<f64, CliError> {
        Ok(variance(&ds.reference.iter().map(f).collect::<Vec<_>>())?)
    };
    println!(
        "wrote {} samples to {}",
        ds.len(),
        out.display()
    );
    println!(
        "variance (rad^2): roll={:.3} pitch={:.3} yaw={:.3}",
        axis(|a| a.roll)?,
        axis(|a| a.pitch)?,
        axis(|a| a.yaw)?
    );
    Ok(())
}

pub fn train(
    config: &RunConfig,
    data: &Path,
    weights_out: &Path,
    loss_out: Option<&Path>,
) -> Result<(), CliError> {
    let ds = LabeledDataset::read_csv(data)?;
    let mut net = LstmNetwork::with_hidden(
        config.lstm.hidden1,
        config.lstm.hidden2,
        config.lstm.init_seed,
    );
    let trace = incremental::offline_phase(
        &mut net,
        &ds,
        &config.train.config(),
        config.lstm.normalize,
    )?;
    lstm::save_weights(&net, weights_out)?;
    if let Some(path) = loss_out {
        let mut csv = String::from("epoch,loss\n");
        for (epoch, loss) in trace.iter().enumerate() {
            let _ = writeln!(csv, "{},{}", epoch, fmt_f64(*loss));
        }
        fs::write(path, csv).map_err(|e| CliError::Io(e.to_string()))?;
    }
    match trace.last() {
        Some(loss) => println!(
            "trained {} epochs on {} windows, final loss {loss:.6e}",
            trace.len(),
            ds.len() - 1
        ),
        None => println!("0 epochs requested, weights saved unchanged"),
    }
    println!("weights written to {}", weights_out.display());
    Ok(())
}

pub fn run(
    config: &RunConfig,
    estimator: EstimatorArg,
    data: &Path,
    out: &Path,
    weights: Option<&Path>,
) -> Result<(), CliError> {
    let ds = LabeledDataset::read_csv(data)?;
    let timestamps: Vec<f64> = ds.samples.iter().map(|s| s.t).collect();
    match estimator {
        EstimatorArg::Gyro => {
            let estimates = estimators::run_gyro(&ds, ds.reference[0])?;
            write_estimates(out, &timestamps, &estimates, None)?;
        }
        EstimatorArg::Accelmag => {
            let estimates = estimators::run_accelmag(&ds);
            write_estimates(out, &timestamps, &estimates, None)?;
        }
        EstimatorArg::Ekf => {
            let ekf_config = config.ekf.config(Some(ds.reference[0]));
            let run = ekf::run_detailed(&ekf_config, &ds)?;
            let cov = config.ekf.emit_cov_trace.then_some(run.cov_trace.as_slice());
            write_estimates(out, &timestamps, &run.estimates, cov)?;
        }
        EstimatorArg::Lstm => {
            let net = load_required_weights(weights)?;
            let estimates = incremental::run_offline(&net, &ds)?;
            write_estimates(out, &timestamps[1..], &estimates, None)?;
        }
        EstimatorArg::LstmInc => {
            let mut net = load_required_weights(weights)?;
            let ekf_config = config.ekf.config(Some(ds.reference[0]));
            let report =
                incremental::stream(&mut net, &ds, &config.incremental.config(), &ekf_config)?;
            write_estimates(out, &timestamps[1..], &report.estimates, None)?;
            let log = out.with_extension("updates.csv");
            write_update_log(&log, &report)?;
            println!(
                "{} weight updates logged to {}",
                report.events.len(),
                log.display()
            );
        }
    }
    println!("estimates written to {}", out.display());
    Ok(())
}

fn load_required_weights(weights: Option<&Path>) -> Result<LstmNetwork, CliError> {
    let path = weights.ok_or_else(|| {
        CliError::Config("this estimator needs --weights <file> from a prior `train`".into())
    })?;
    Ok(lstm::load_weights(path)?)
}

pub fn benchmark(config: &RunConfig, datasets: &[PathBuf], out_dir: &Path) -> Result<(), CliError> {
    if datasets.is_empty() {
        return Err(CliError::Config("benchmark needs at least one --data".into()));
    }
    fs::create_dir_all(out_dir).map_err(|e| CliError::Io(e.to_string()))?;
    let estimators = vec!["lstm-inc".to_string(), "lstm".to_string(), "ekf".to_string()];
    let mut wrapped_report = BenchmarkReport::new(estimators.clone());
    let mut raw_report = BenchmarkReport::new(estimators);
    let mut failures = Vec::new();
    for path in datasets {
        let name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| path.display().to_string());
        match benchmark_one(config, path, &name, out_dir) {
            Ok(row) => {
                wrapped_report
                    .push_row(name.clone(), row.wrapped)
                    .expect("row arity is fixed");
                raw_report
                    .push_row(name, row.raw)
                    .expect("row arity is fixed");
            }
            Err(err) => {
                eprintln!("warning: dataset {name} skipped: {err}");
                failures.push(name);
            }
        }
    }
    if wrapped_report.rows.is_empty() {
        return Err(CliError::Config(format!(
            "no dataset produced a benchmark row (failures: {failures:?})"
        )));
    }
    let table = wrapped_report.to_table();
    print!("{table}");
    fs::write(out_dir.join("report.txt"), &table).map_err(|e| CliError::Io(e.to_string()))?;
    fs::write(out_dir.join("report.csv"), wrapped_report.to_csv())
        .map_err(|e| CliError::Io(e.to_string()))?;
    fs::write(out_dir.join("report_raw.csv"), raw_report.to_csv())
        .map_err(|e| CliError::Io(e.to_string()))?;
    println!("reports written to {}", out_dir.display());
    Ok(())
}

struct BenchmarkRowResult {
    wrapped: Vec<RmseReport>,
    raw: Vec<RmseReport>,
}

fn benchmark_one(
    config: &RunConfig,
    path: &Path,
    name: &str,
    out_dir: &Path,
) -> Result<BenchmarkRowResult, CliError> {
    let ds = LabeledDataset::read_csv(path)?;
    let (train_ds, test_ds) = ds.split(config.benchmark.train_fraction)?;

    let mut net = LstmNetwork::with_hidden(
        config.lstm.hidden1,
        config.lstm.hidden2,
        config.lstm.init_seed,
    );
    incremental::offline_phase(&mut net, &train_ds, &config.train.config(), config.lstm.normalize)?;

    let lstm_est = incremental::run_offline(&net, &test_ds)?;

    let ekf_config = config.ekf.config(Some(test_ds.reference[0]));
    let mut inc_net = net.clone();
    let stream_report =
        incremental::stream(&mut inc_net, &test_ds, &config.incremental.config(), &ekf_config)?;

    let ekf_run = ekf::run_detailed(&ekf_config, &test_ds)?;

    // estimates from the LSTM paths start at sample 1; align everything there
    let reference = &test_ds.reference[1..];
    let ekf_est = &ekf_run.estimates[1..];
    let series: [(&str, &[EulerAngles]); 3] = [
        ("lstm_inc", &stream_report.estimates),
        ("lstm", &lstm_est),
        ("ekf", ekf_est),
    ];

    let mut wrapped = Vec::new();
    let mut raw = Vec::new();
    for (_, est) in &series {
        wrapped.push(RmseReport::from_estimates(reference, est, true)?);
        raw.push(RmseReport::from_estimates(reference, est, false)?);
    }

    write_timeseries(
        &out_dir.join(format!("{name}_timeseries.csv")),
        &test_ds,
        &series,
    )?;
    write_update_log(&out_dir.join(format!("{name}_updates.csv")), &stream_report)?;
    Ok(BenchmarkRowResult { wrapped, raw })
}

fn write_timeseries(
    path: &Path,
    test_ds: &LabeledDataset,
    series: &[(&str, &[EulerAngles])],
) -> Result<(), CliError> {
    let mut header = String::from("t,ref_roll,ref_pitch,ref_yaw");
    for (name, _) in series {
        let _ = write!(header, ",{name}_roll,{name}_pitch,{name}_yaw");
    }
    header.push('\n');
    let mut out = header;
    for i in 1..test_ds.len() {
        let r = test_ds.reference[i];
        let _ = write!(
            out,
            "{},{},{},{}",
            fmt_f64(test_ds.samples[i].t),
            fmt_f64(r.roll),
            fmt_f64(r.pitch),
            fmt_f64(r.yaw)
        );
        for (_, est) in series {
            let e = est[i - 1];
            let _ = write!(out, ",{},{},{}", fmt_f64(e.roll), fmt_f64(e.pitch), fmt_f64(e.yaw));
        }
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| CliError::Io(e.to_string()))
}

fn write_update_log(path: &Path, report: &StreamReport) -> Result<(), CliError> {
    let mut out = String::from("sample_index,pre_loss,post_loss\n");
    for e in &report.events {
        let _ = writeln!(
            out,
            "{},{},{}",
            e.sample_index,
            fmt_f64(e.pre_loss),
            fmt_f64(e.post_loss)
        );
    }
    fs::write(path, out).map_err(|e| CliError::Io(e.to_string()))
}

fn write_estimates(
    path: &Path,
    timestamps: &[f64],
    estimates: &[EulerAngles],
    cov_trace: Option<&[f64]>,
) -> Result<(), CliError> {
    debug_assert_eq!(timestamps.len(), estimates.len());
    let mut out = String::from(match cov_trace {
        Some(_) => "t,roll,pitch,yaw,cov_trace\n",
        None => "t,roll,pitch,yaw\n",
    });
    for (i, (t, e)) in timestamps.iter().zip(estimates).enumerate() {
        let _ = write!(
            out,
            "{},{},{},{}",
            fmt_f64(*t),
            fmt_f64(e.roll),
            fmt_f64(e.pitch),
            fmt_f64(e.yaw)
        );
        if let Some(cov) = cov_trace {
            let _ = write!(out, ",{}", fmt_f64(cov[i]));
        }
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| CliError::Io(e.to_string()))
}

pub fn convert(config: &RunConfig, input: &Path, out: &Path) -> Result<(), CliError> {
    let section = config.convert.as_ref().ok_or_else(|| {
        CliError::Config("convert needs a [convert] section with rate and column map".into())
    })?;
    if !(section.rate > 0.0) {
        return Err(CliError::Config("[convert] rate must be > 0".into()));
    }
    let text = fs::read_to_string(input).map_err(|e| CliError::Io(e.to_string()))?;
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| CliError::Config("input file is empty".into()))?;
    let source_columns: Vec<&str> = header.split(',').map(str::trim).collect();

    const CANONICAL: [&str; 13] = [
        "t", "gx", "gy", "gz", "ax", "ay", "az", "mx", "my", "mz", "roll", "pitch", "yaw",
    ];
    let mut indices: Vec<Option<usize>> = Vec::with_capacity(CANONICAL.len());
    for canonical in CANONICAL {
        match section.map.get(canonical) {
            Some(source) => {
                let idx = source_columns.iter().position(|c| c == source).ok_or_else(|| {
                    CliError::Config(format!(
                        "column {source:?} (mapped from {canonical}) not in input header"
                    ))
                })?;
                indices.push(Some(idx));
            }
            None if canonical == "t" => indices.push(None), // synthesized from rate
            None => {
                return Err(CliError::Config(format!(
                    "[convert.map] is missing the {canonical} column (reference angles included)"
                )))
            }
        }
    }
    for key in section.map.keys() {
        if !CANONICAL.contains(&key.as_str()) {
            return Err(CliError::Config(format!(
                "[convert.map] has unknown canonical column {key:?}"
            )));
        }
    }

    let mut rows: Vec<[f64; 13]> = Vec::new();
    for (line_no, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        let mut row = [0.0f64; 13];
        for (slot, (canonical, idx)) in CANONICAL.iter().zip(&indices).enumerate() {
            let value = match idx {
                Some(idx) => {
                    let field = fields.get(*idx).ok_or_else(|| {
                        CliError::Config(format!("line {}: too few columns", line_no + 2))
                    })?;
                    field.parse::<f64>().map_err(|e| {
                        CliError::Config(format!("line {}: bad {canonical}: {e}", line_no + 2))
                    })?
                }
                None => rows.len() as f64 / section.rate,
            };
            let scale = section.scale.get(*canonical).copied().unwrap_or(1.0);
            row[slot] = value * scale;
        }
        rows.push(row);
    }
    let samples: Vec<_> = rows
        .iter()
        .map(|r| ahrs_fusion::dataset::ImuSample {
            t: r[0],
            gyro: ahrs_fusion::attitude::BodyRates::new(r[1], r[2], r[3]),
            accel: ahrs_fusion::attitude::AccelVector::new(r[4], r[5], r[6]),
            mag: ahrs_fusion::attitude::MagVector::new(r[7], r[8], r[9]),
        })
        .collect();
    let reference: Vec<_> = rows
        .iter()
        .map(|r| EulerAngles::new(r[10], r[11], r[12]))
        .collect();
    let ds = LabeledDataset::new(samples, reference, section.rate)?;
    ds.write_csv(out)?;
    println!("converted {} rows to {}", ds.len(), out.display());
    Ok(())
}
