use std::time::Instant;

use ahrs_fusion::dataset::LabeledDataset;
use ahrs_fusion::ekf::{run_detailed, EkfConfig};
use ahrs_fusion::incremental::{offline_phase, run_offline, stream, IncrementalConfig};
use ahrs_fusion::lstm::{LstmNetwork, TrainConfig};
use ahrs_fusion::metrics::RmseReport;
use ahrs_fusion::sim::{generate_trajectory, synthesize_imu, NoiseModel, TrajectoryProfile};

fn make(profile: TrajectoryProfile, noise_seed: u64) -> LabeledDataset {
    make_with_pulse_rate(profile, noise_seed, None)
}

fn make_with_pulse_rate(
    profile: TrajectoryProfile,
    noise_seed: u64,
    pulse_rate: Option<f64>,
) -> LabeledDataset {
    let mut noise = NoiseModel::default();
    if std::env::var("NO_PULSES").is_ok() {
        noise.disturbance.rate_per_sec = 0.0;
    }
    if let Some(rate) = pulse_rate {
        noise.disturbance.rate_per_sec = rate;
    }
    let track = generate_trajectory(&profile).unwrap();
    let samples = synthesize_imu(&track, &noise, noise_seed).unwrap();
    LabeledDataset::new(samples, track.attitude, track.rate).unwrap()
}

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let seed: u64 = args.get(1).map(|s| s.parse().unwrap()).unwrap_or(0);
    let epochs: usize = args.get(2).map(|s| s.parse().unwrap()).unwrap_or(20);
    let hidden: usize = args.get(3).map(|s| s.parse().unwrap()).unwrap_or(32);

    let diverse: bool = args.get(4).map(|s| s.parse().unwrap()).unwrap_or(false);
    let train_pulse_rate: Option<f64> = std::env::var("TRAIN_PULSE_RATE")
        .ok()
        .map(|v| v.parse().unwrap());
    let train_ds = if diverse {
        let mut ds = make_with_pulse_rate(
            TrajectoryProfile::low_dynamic(60.0, 100.0, 1000 + seed),
            5000 + seed,
            train_pulse_rate,
        );
        for k in 1..5u64 {
            let part = make_with_pulse_rate(
                TrajectoryProfile::low_dynamic(60.0, 100.0, 1000 + seed + 10 * k),
                5000 + seed + 10 * k,
                train_pulse_rate,
            );
            ds = ds.concat(&part).unwrap();
        }
        ds
    } else {
        make_with_pulse_rate(
            TrajectoryProfile::low_dynamic(300.0, 100.0, 1000 + seed),
            5000 + seed,
            train_pulse_rate,
        )
    };
    let low = make(TrajectoryProfile::low_dynamic(60.0, 100.0, 2000 + seed), 6000 + seed);
    let high = make(TrajectoryProfile::high_dynamic(120.0, 100.0, 3000 + seed), 7000 + seed);
    let eval_ds = low.concat(&high).unwrap();

    let t0 = Instant::now();
    let mut net = LstmNetwork::with_hidden(hidden, hidden, 42 + seed);
    let config = TrainConfig {
        epochs,
        seed: 7 + seed,
        ..TrainConfig::default()
    };
    let trace = offline_phase(&mut net, &train_ds, &config, true).unwrap();
    let train_time = t0.elapsed();

    let t0 = Instant::now();
    let offline_est = run_offline(&net, &eval_ds).unwrap();
    let mut inc_net = net.clone();
    let inc_cfg = IncrementalConfig {
        seed: 11 + seed,
        ..IncrementalConfig::default()
    };
    let mut ekf_cfg = EkfConfig::default();
    ekf_cfg.initial_attitude = eval_ds.reference[0];
    let report = stream(&mut inc_net, &eval_ds, &inc_cfg, &ekf_cfg).unwrap();
    let ekf_run = run_detailed(&ekf_cfg, &eval_ds).unwrap();
    let eval_time = t0.elapsed();

    let n_low = low.len();
    let seg = |est: &[ahrs_fusion::attitude::EulerAngles], from: usize, to: usize| {
        RmseReport::from_estimates(&eval_ds.reference[from + 1..to], &est[from..to - 1], true)
            .unwrap()
    };
    let low_inc = seg(&report.estimates, 0, n_low);
    let low_off = seg(&offline_est, 0, n_low);
    let low_ekf =
        RmseReport::from_estimates(&eval_ds.reference[1..n_low], &ekf_run.estimates[1..n_low], true)
            .unwrap();
    let post_inc = seg(&report.estimates, n_low - 1, eval_ds.len());
    let post_off = seg(&offline_est, n_low - 1, eval_ds.len());
    let post_ekf = RmseReport::from_estimates(
        &eval_ds.reference[n_low..],
        &ekf_run.estimates[n_low..],
        true,
    )
    .unwrap();

    println!(
        "seed={seed} epochs={epochs} hidden={hidden} train={:.1}s eval={:.1}s final_loss={:.2e}",
        train_time.as_secs_f64(),
        eval_time.as_secs_f64(),
        trace.last().unwrap()
    );
    let p = |name: &str, r: &RmseReport| {
        println!(
            "  {name:10} roll={:.4} pitch={:.4} yaw={:.4} avg={:.4}",
            r.roll_rmse, r.pitch_rmse, r.yaw_rmse, r.average_rmse
        );
    };
    println!("low segment:");
    p("lstm-inc", &low_inc);
    p("lstm", &low_off);
    p("ekf", &low_ekf);
    println!(
        "  ratio inc/ekf = {:.3} (need <= 1.5)",
        low_inc.average_rmse / low_ekf.average_rmse
    );
    println!("post-changepoint:");
    p("lstm-inc", &post_inc);
    p("lstm", &post_off);
    p("ekf", &post_ekf);
    println!(
        "  improvement = {:.1}% (need >= 10%)",
        100.0 * (1.0 - post_inc.average_rmse / post_off.average_rmse)
    );
}
