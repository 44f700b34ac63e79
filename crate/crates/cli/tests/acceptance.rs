//! Acceptance suite: one test per release criterion, each printing a
//! PASS line with the measured figures. Run with
//! `cargo test -p freqcast-cli --test acceptance -- --nocapture`.

use std::path::PathBuf;
use std::process::Command;
use std::time::Instant;

use freqcast_core::collection::{run_simulation, CollectionConfig, TruncationCriterion};
use freqcast_core::forecast::{
    bucketize, eval_cgru_rmse, eval_time_rmse, matched_hidden_size, prediction_rmse, time_closure,
    train_cgru, train_time_gru, CGruConfig, CGruModel, SeqView, TimeGruModel, TrainConfig,
    UpdateRule, WindowConfig, WindowSample,
};
use freqcast_core::spectral::{
    dft, reconstruct, signal_energy, spectral_energy, truncate_by_energy, truncate_by_rmse,
    truncation_rmse, TimeSeriesBatch,
};
use freqcast_core::trace::{
    build_hold_baseline, build_time_windows, build_windows, split, synth_trace, SplitSpec,
    SynthConfig, UtilField,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_batch(n: usize, seed: u64) -> TimeSeriesBatch<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    TimeSeriesBatch::new((0..n).map(|_| rng.gen_range(0.0..=1.0)).collect()).unwrap()
}

/// The shared 10,000-batch corpus of criteria 2-4.
fn corpus_batch(i: usize) -> TimeSeriesBatch<f64> {
    const SIZES: [usize; 4] = [8, 16, 72, 128];
    random_batch(SIZES[i % SIZES.len()], 0xC0FFEE + i as u64)
}

/// Criterion 1: Parseval over 1,000 seeded batches across sizes, within
/// 1e-9 relative, in under five seconds.
#[test]
fn criterion_01_parseval_suite() {
    const SIZES: [usize; 5] = [8, 16, 72, 128, 512];
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for i in 0..1000 {
        let n = SIZES[i % SIZES.len()];
        let batch = random_batch(n, 0xAB5E + i as u64);
        let spectrum = dft(&batch);
        // Full-spectrum energy, mirroring the half-spectrum explicitly.
        let half = spectrum.coefficients();
        let mut freq = half[0].norm_sqr() + half[n / 2].norm_sqr();
        for c in &half[1..n / 2] {
            freq += c.norm_sqr() + c.conj().norm_sqr();
        }
        freq /= n as f64;
        let time = signal_energy(&batch);
        let rel = (time - freq).abs() / time.max(1e-300);
        worst = worst.max(rel);
        assert!(rel <= 1e-9, "batch {i} (n={n}): relative error {rel}");
    }
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 5.0, "took {elapsed:?}");
    println!(
        "ACCEPTANCE  1 parseval-suite: PASS (1000 batches, worst rel err {worst:.2e}, {elapsed:.2?})"
    );
}

/// Criterion 2: the truncation-RMSE bound holds on every one of 10,000
/// batches for every eps in the grid, in under thirty seconds.
#[test]
fn criterion_02_truncation_rmse_bound() {
    const EPS: [f64; 4] = [0.005, 0.01, 0.05, 0.1];
    let start = Instant::now();
    let mut worst_margin = f64::INFINITY;
    for i in 0..10_000 {
        let batch = corpus_batch(i);
        let spectrum = dft(&batch);
        for eps in EPS {
            let trunc = truncate_by_rmse(&spectrum, eps).unwrap();
            let realised = truncation_rmse(&batch, &trunc).unwrap();
            assert!(
                realised <= eps,
                "batch {i}, eps {eps}: realised {realised}"
            );
            worst_margin = worst_margin.min(eps - realised);
        }
    }
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 30.0, "took {elapsed:?}");
    println!(
        "ACCEPTANCE  2 truncation-rmse-bound: PASS (40000 cases, min slack {worst_margin:.2e}, {elapsed:.2?})"
    );
}

/// Criterion 3: the energy-threshold rule guarantees E(R)/E(u) >= e with
/// minimal k, against a linear-scan oracle.
#[test]
fn criterion_03_energy_threshold_guarantee() {
    const THRESHOLDS: [f64; 4] = [0.5, 0.7, 0.9, 0.99];
    for i in 0..10_000 {
        let batch = corpus_batch(i);
        let spectrum = dft(&batch);
        let total = signal_energy(&batch);
        for e in THRESHOLDS {
            let trunc = truncate_by_energy(&spectrum, e).unwrap();
            let ratio = trunc.energy() / total;
            assert!(ratio >= e, "batch {i}, e {e}: ratio {ratio}");
            // Linear-scan oracle for minimality.
            let oracle_k = (1..=spectrum.half_len())
                .find(|&k| {
                    spectral_energy(&spectrum.coefficients()[..k], batch.len()) / total >= e
                })
                .unwrap();
            assert_eq!(trunc.k(), oracle_k, "batch {i}, e {e}");
            if trunc.k() > 1 {
                let prev =
                    spectral_energy(&spectrum.coefficients()[..trunc.k() - 1], batch.len()) / total;
                assert!(prev < e, "batch {i}, e {e}: k-1 already satisfies");
            }
        }
    }
    println!("ACCEPTANCE  3 energy-threshold-guarantee: PASS (40000 cases, minimality verified)");
}

/// Criterion 4: e = 1.0 keeps the transform lossless across the corpus.
#[test]
fn criterion_04_lossless_limit() {
    let mut worst: f64 = 0.0;
    for i in 0..10_000 {
        let batch = corpus_batch(i);
        let trunc = truncate_by_energy(&dft(&batch), 1.0).unwrap();
        let recon = reconstruct(&trunc);
        for (a, b) in batch.values().iter().zip(&recon) {
            let err = (a - b).abs();
            worst = worst.max(err);
            assert!(err <= 1e-9, "batch {i}: abs error {err}");
        }
    }
    println!("ACCEPTANCE  4 lossless-limit: PASS (10000 batches, worst abs err {worst:.2e})");
}

/// Criterion 5: on the default synthetic daily trace, e = 0.9 saves at
/// least 60% of the floats and savings never increase with e.
#[test]
fn criterion_05_communication_savings() {
    let trace = synth_trace(&SynthConfig::default()).unwrap();
    let series = trace.node_series(UtilField::Cpu);
    let grid = [0.5, 0.7, 0.9, 0.95];
    let mut savings = Vec::new();
    for e in grid {
        let config = CollectionConfig {
            n: 72,
            tau: trace.sampling_period() as f64,
            p: series.len(),
            criterion: TruncationCriterion::EnergyThreshold(e),
            seed: 0,
        };
        savings.push(run_simulation(&series, &config).unwrap().report.savings);
    }
    let at_09 = savings[2];
    assert!(at_09 >= 0.60, "savings at e=0.9: {at_09}");
    for pair in savings.windows(2) {
        assert!(pair[1] <= pair[0] + 1e-12, "savings not monotone: {savings:?}");
    }
    println!(
        "ACCEPTANCE  5 communication-savings: PASS (e=0.9 savings {:.3}, grid {:?})",
        at_09,
        savings.iter().map(|s| (s * 1000.0).round() / 1000.0).collect::<Vec<_>>()
    );
}

fn fd_check_cgru(rule: UpdateRule, label: &str) {
    let cfg = CGruConfig {
        hidden: 4,
        window: 2,
        horizon: 8,
        rule,
    };
    let mut model = CGruModel::<f64>::seeded(cfg, 2024).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let inputs = (0..2)
        .map(|j| {
            let batch = random_batch(8, 7000 + j);
            truncate_by_energy(&dft(&batch), 0.8).unwrap()
        })
        .collect();
    let target: Vec<f64> = (0..8).map(|_| rng.gen_range(0.0..=1.0)).collect();
    let sample = WindowSample::new(inputs, target).unwrap();

    let fwd = model.forward(&sample).unwrap();
    let (_, grads) = model.backward(&fwd, &sample.target).unwrap();
    let analytic: Vec<Vec<f64>> = grads.tensors().iter().map(|(_, t)| t.to_vec()).collect();
    let loss_of = |m: &CGruModel<f64>| {
        let pred = m.forward(&sample).unwrap().predictions;
        pred.iter()
            .zip(&sample.target)
            .map(|(p, t)| (p - t) * (p - t))
            .sum::<f64>()
            / pred.len() as f64
    };
    let h = 1e-5;
    for (ti, (name, _)) in grads.tensors().iter().enumerate() {
        for i in 0..analytic[ti].len() {
            let orig = model.tensors()[ti].1[i];
            model.tensors_mut()[ti].1[i] = orig + h;
            let lp = loss_of(&model);
            model.tensors_mut()[ti].1[i] = orig - h;
            let lm = loss_of(&model);
            model.tensors_mut()[ti].1[i] = orig;
            let numeric = (lp - lm) / (2.0 * h);
            let a = analytic[ti][i];
            let denom = a.abs().max(numeric.abs());
            if denom > 1e-8 {
                assert!(
                    ((a - numeric) / denom).abs() <= 1e-4,
                    "{label} {name}[{i}]: analytic {a} vs numeric {numeric}"
                );
            } else {
                assert!((a - numeric).abs() < 1e-8, "{label} {name}[{i}]");
            }
        }
    }
}

fn fd_check_time_gru() {
    let mut model = TimeGruModel::<f64>::seeded(4, 8, 303).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(78);
    let window: Vec<f64> = (0..16).map(|_| rng.gen_range(0.0..=1.0)).collect();
    let target: Vec<f64> = (0..8).map(|_| rng.gen_range(0.0..=1.0)).collect();
    let fwd = model.forward(&window).unwrap();
    let (_, grads) = model.backward(&fwd, &target).unwrap();
    let analytic: Vec<Vec<f64>> = grads.tensors().iter().map(|(_, t)| t.to_vec()).collect();
    let loss_of = |m: &TimeGruModel<f64>| {
        let pred = m.forward(&window).unwrap().predictions;
        pred.iter()
            .zip(&target)
            .map(|(p, t)| (p - t) * (p - t))
            .sum::<f64>()
            / pred.len() as f64
    };
    let h = 1e-5;
    for (ti, (name, _)) in grads.tensors().iter().enumerate() {
        for i in 0..analytic[ti].len() {
            let orig = model.tensors()[ti].1[i];
            model.tensors_mut()[ti].1[i] = orig + h;
            let lp = loss_of(&model);
            model.tensors_mut()[ti].1[i] = orig - h;
            let lm = loss_of(&model);
            model.tensors_mut()[ti].1[i] = orig;
            let numeric = (lp - lm) / (2.0 * h);
            let a = analytic[ti][i];
            let denom = a.abs().max(numeric.abs());
            if denom > 1e-8 {
                assert!(
                    ((a - numeric) / denom).abs() <= 1e-4,
                    "time_gru {name}[{i}]: analytic {a} vs numeric {numeric}"
                );
            } else {
                assert!((a - numeric).abs() < 1e-8, "time_gru {name}[{i}]");
            }
        }
    }
}

/// Criterion 6: central finite differences confirm every parameter
/// gradient of all three model variants within 1e-4 relative error,
/// in under a minute.
#[test]
fn criterion_06_gradient_checks() {
    let start = Instant::now();
    fd_check_cgru(UpdateRule::StandardGru, "cgru-standard");
    fd_check_cgru(UpdateRule::SigmoidWrapped, "cgru-sigmoid-wrapped");
    fd_check_time_gru();
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 60.0, "took {elapsed:?}");
    println!("ACCEPTANCE  6 gradient-checks: PASS (3 model variants, {elapsed:.2?})");
}

/// Criterion 7: bucketised padded evaluation equals per-sample evaluation
/// on 100 mixed-length samples within 1e-10.
#[test]
fn criterion_07_padding_equivalence() {
    let model = CGruModel::<f64>::seeded(
        CGruConfig {
            hidden: 4,
            window: 2,
            horizon: 8,
            rule: UpdateRule::StandardGru,
        },
        555,
    )
    .unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(556);
    let samples: Vec<WindowSample<f64>> = (0..100)
        .map(|i| {
            let e = rng.gen_range(0.2..1.0);
            let inputs = (0..2)
                .map(|j| {
                    let batch = random_batch(8, 9000 + 2 * i + j);
                    truncate_by_energy(&dft(&batch), e).unwrap()
                })
                .collect();
            let target = (0..8).map(|_| rng.gen_range(0.0..=1.0)).collect();
            WindowSample::new(inputs, target).unwrap()
        })
        .collect();

    let mut worst: f64 = 0.0;
    let mut padded_seen = 0usize;
    for bucket in bucketize(&samples, 7, 99) {
        for entry in &bucket.entries {
            if entry.true_lens.iter().any(|&l| l < bucket.padded_len) {
                padded_seen += 1;
            }
            let padded = model.forward_views(&entry.views()).unwrap().predictions;
            let unpadded_views: Vec<SeqView<'_, f64>> = entry
                .inputs
                .iter()
                .zip(&entry.true_lens)
                .map(|(coeffs, &len)| SeqView {
                    coeffs: &coeffs[..len],
                    true_len: len,
                })
                .collect();
            let unpadded = model.forward_views(&unpadded_views).unwrap().predictions;
            for (a, b) in padded.iter().zip(&unpadded) {
                worst = worst.max((a - b).abs());
                assert!((a - b).abs() <= 1e-10);
            }
        }
    }
    assert!(padded_seen > 0, "corpus never exercised padding");
    println!(
        "ACCEPTANCE  7 padding-equivalence: PASS (100 samples, {padded_seen} padded, worst diff {worst:.2e})"
    );
}

/// Criterion 8: on the default synthetic trace both trained models beat
/// the repeat-last-batch baseline by at least 25% within a 200-epoch
/// budget, and the frequency model stays within 20% of the benchmark.
#[test]
fn criterion_08_forecast_sanity() {
    let window = WindowConfig { w: 4, n: 72, s: 72 };
    let trace = synth_trace(&SynthConfig::default()).unwrap();
    let (train_part, val_part, test_part) =
        split(&trace, &SplitSpec::halves_and_quarters(), window.l() + window.s).unwrap();
    let mut trainval = train_part.clone();
    trainval.concat_steps(&val_part).unwrap();

    let hold_rmse =
        prediction_rmse(&build_hold_baseline(&test_part, &window, UtilField::Cpu).unwrap())
            .unwrap();

    let criterion = TruncationCriterion::EnergyThreshold(0.9);
    let freq_train = build_windows(&trainval, &window, &criterion, UtilField::Cpu).unwrap();
    let freq_test = build_windows(&test_part, &window, &criterion, UtilField::Cpu).unwrap();
    let time_train = build_time_windows(&trainval, &window, UtilField::Cpu).unwrap();
    let time_test = build_time_windows(&test_part, &window, UtilField::Cpu).unwrap();

    let train_cfg = TrainConfig {
        learning_rate: 2e-3,
        decay: 0.9,
        epsilon: 1e-8,
        batch_size: 16,
        epochs: 200,
        seed: 3,
    };
    let cgru_cfg = CGruConfig {
        hidden: 24,
        window: window.w,
        horizon: window.s,
        rule: UpdateRule::StandardGru,
    };
    let mut freq_model = CGruModel::<f64>::seeded(cgru_cfg, 3).unwrap();
    train_cgru(&mut freq_model, &freq_train, None, &train_cfg).unwrap();
    let freq_rmse = eval_cgru_rmse(&freq_model, &freq_test).unwrap();

    let bench_hidden = matched_hidden_size(freq_model.param_count(), window.s);
    let mut bench = TimeGruModel::<f64>::seeded(bench_hidden, window.s, 4).unwrap();
    train_time_gru(&mut bench, &time_train, None, &train_cfg).unwrap();
    let bench_rmse = eval_time_rmse(&bench, &time_test).unwrap();

    let bar = 0.75 * hold_rmse;
    assert!(
        freq_rmse <= bar,
        "frequency model rmse {freq_rmse:.4} vs required {bar:.4} (hold {hold_rmse:.4})"
    );
    assert!(
        bench_rmse <= bar,
        "benchmark rmse {bench_rmse:.4} vs required {bar:.4} (hold {hold_rmse:.4})"
    );
    assert!(
        freq_rmse <= 1.20 * bench_rmse,
        "frequency rmse {freq_rmse:.4} more than 20% above benchmark {bench_rmse:.4}"
    );
    println!(
        "ACCEPTANCE  8 forecast-sanity: PASS (hold {hold_rmse:.4}, cgru@e=0.9 {freq_rmse:.4}, time_gru {bench_rmse:.4})"
    );
}

/// Criterion 9: single-threaded median inference of the e = 0.5 frequency
/// model beats the parameter-matched time-domain benchmark; the measured
/// ratio is reported, not pinned.
#[test]
fn criterion_09_inference_speed() {
    let window = WindowConfig { w: 4, n: 72, s: 72 };
    let trace = synth_trace(&SynthConfig::default()).unwrap();
    let criterion = TruncationCriterion::EnergyThreshold(0.5);
    let freq_samples = build_windows(&trace, &window, &criterion, UtilField::Cpu).unwrap();
    let time_samples = build_time_windows(&trace, &window, UtilField::Cpu).unwrap();

    let cgru_cfg = CGruConfig {
        hidden: 24,
        window: window.w,
        horizon: window.s,
        rule: UpdateRule::StandardGru,
    };
    let freq_model = CGruModel::<f64>::seeded(cgru_cfg, 11).unwrap();
    let bench_hidden = matched_hidden_size(freq_model.param_count(), window.s);
    let bench = TimeGruModel::<f64>::seeded(bench_hidden, window.s, 12).unwrap();
    let gap = (bench.param_count() as f64 - freq_model.param_count() as f64).abs()
        / freq_model.param_count() as f64;
    assert!(gap <= 0.05, "parameter mismatch {gap:.3}");

    let reps = 150;
    let sample = &freq_samples[0];
    let freq_stats = time_closure(reps, || {
        std::hint::black_box(freq_model.forward(sample).unwrap());
    });
    let tw = &time_samples[0];
    let bench_stats = time_closure(reps, || {
        std::hint::black_box(bench.forward(&tw.window).unwrap());
    });
    assert!(
        freq_stats.median < bench_stats.median,
        "frequency median {:?} not below benchmark {:?}",
        freq_stats.median,
        bench_stats.median
    );
    let ratio = freq_stats.median.as_secs_f64() / bench_stats.median.as_secs_f64();
    println!(
        "ACCEPTANCE  9 inference-speed: PASS (cgru {:.1}us vs time_gru {:.1}us median, ratio {ratio:.3})",
        freq_stats.median_micros(),
        bench_stats.median_micros()
    );
}

/// Criterion 10: two `simulate` runs with the same spec and seed produce
/// byte-identical message streams and reports.
#[test]
fn criterion_10_protocol_determinism() {
    let dir = std::env::temp_dir().join(format!("freqcast-acceptance-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();

    let run = |args: &[&str]| {
        let output = Command::new(env!("CARGO_BIN_EXE_freqcast"))
            .args(args)
            .current_dir(&dir)
            .output()
            .expect("binary runs");
        assert!(output.status.success(), "{output:?}");
    };
    run(&["synth", "--seed", "21", "--out", "."]);
    std::fs::write(
        dir.join("sim.conf"),
        "n = 72\ntau = 300\ncriterion = energy\ne = 0.9\nseed = 21\n",
    )
    .unwrap();
    for out in ["r1", "r2"] {
        run(&["simulate", "--config", "sim.conf", "--trace", "trace.csv", "--out", out]);
    }
    let bytes = |rel: &str| -> Vec<u8> {
        std::fs::read(PathBuf::from(&dir).join(rel)).unwrap()
    };
    let stream = bytes("r1/messages.bin");
    assert!(!stream.is_empty());
    assert_eq!(stream, bytes("r2/messages.bin"), "message streams differ");
    assert_eq!(bytes("r1/report.json"), bytes("r2/report.json"));
    assert_eq!(bytes("r1/report.csv"), bytes("r2/report.csv"));
    println!(
        "ACCEPTANCE 10 protocol-determinism: PASS ({} stream bytes identical across runs)",
        stream.len()
    );
}
