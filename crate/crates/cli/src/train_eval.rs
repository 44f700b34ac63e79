//! `freqcast train-eval`: per threshold, build the spectral dataset, tune
//! (optionally) and train the frequency model, then benchmark it against a
//! parameter-matched time-domain model and a repeat-last-batch baseline on
//! the untouched test portion.
//!
//! Per-threshold trainings run on worker threads; the single benchmark
//! model trains on the main thread and inference timing runs serially at
//! the end so latency numbers are not distorted by concurrent work.

use std::fs;

use anyhow::{anyhow, Context, Result};
use freqcast_core::collection::{run_simulation, CollectionConfig};
use freqcast_core::forecast::{
    eval_cgru_rmse, eval_time_rmse, matched_hidden_size, prediction_rmse, save_cgru,
    save_time_gru, time_closure, train_cgru, train_time_gru, CGruConfig, CGruModel,
    ForecastError, TimeGruModel, TrainConfig,
};
use freqcast_core::trace::{
    build_hold_baseline, build_time_windows, build_windows, split, SplitSpec, Trace,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::experiment::{ensure_out_dir, fmt, CriterionKind, ExperimentSpec};
use crate::TrainEvalCli;

pub const SCHEMA: &str = "freqcast.train_eval.v1";

struct Row {
    threshold: f64,
    savings: f64,
    trunc_rmse: f64,
    test_rmse: Option<f64>,
    hidden: usize,
    params: usize,
    status: String,
    model: Option<CGruModel<f64>>,
    loss_csv: String,
    latency: Option<(f64, f64)>,
}

pub fn run(args: &TrainEvalCli) -> Result<()> {
    let mut spec = ExperimentSpec::resolve(&args.overrides)?;
    if let Some(tune) = args.tune {
        spec.tune_trials = tune;
    }
    if let Some(epochs) = args.epochs {
        spec.train.epochs = epochs;
    }
    let trace = spec.load_trace()?;
    let window = spec.window;
    let need = window.l() + window.s;
    let (train_part, val_part, test_part) =
        split(&trace, &SplitSpec::halves_and_quarters(), need)
            .context("splitting the trace 50/25/25")?;

    // Final models retrain on train+validation, per the tuning protocol.
    let mut trainval = train_part.clone();
    trainval.concat_steps(&val_part)?;

    let hold_pairs = build_hold_baseline(&test_part, &window, spec.field())?;
    let hold_rmse = prediction_rmse(&hold_pairs)?;

    // Per-threshold worker threads; each owns its dataset and model.
    let rows: Vec<Row> = std::thread::scope(|scope| {
        let handles: Vec<_> = spec
            .thresholds
            .iter()
            .map(|&threshold| {
                let spec = &spec;
                let train_part = &train_part;
                let val_part = &val_part;
                let trainval = &trainval;
                let test_part = &test_part;
                scope.spawn(move || {
                    threshold_row(spec, threshold, train_part, val_part, trainval, test_part)
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("worker panicked"))
            .collect()
    });

    // Time-domain benchmark, parameter-matched to the first threshold row.
    let target_params = rows
        .first()
        .map(|r| r.params)
        .ok_or_else(|| anyhow!("no thresholds configured"))?;
    let bench_hidden = matched_hidden_size(target_params, window.s);
    let mut bench = TimeGruModel::<f64>::seeded(bench_hidden, window.s, spec.seed ^ 0x7134)
        .map_err(|e| anyhow!(e))?;
    let bench_train = build_time_windows(&trainval, &window, spec.field())?;
    let bench_test = build_time_windows(&test_part, &window, spec.field())?;
    let bench_report = train_time_gru(&mut bench, &bench_train, None, &spec.train);
    let (bench_status, bench_rmse, bench_curve) = match &bench_report {
        Ok(report) => (
            "ok".to_string(),
            Some(eval_time_rmse(&bench, &bench_test).map_err(|e| anyhow!(e))?),
            report.to_csv(),
        ),
        Err(err) => (status_of(err), None, String::new()),
    };

    // Serial timing pass.
    let mut rows = rows;
    for (row, &threshold) in rows.iter_mut().zip(&spec.thresholds) {
        let Some(model) = &row.model else { continue };
        let criterion = spec.criterion.with(threshold);
        let test_samples = build_windows(&test_part, &window, &criterion, spec.field())?;
        let sample = &test_samples[0];
        let stats = time_closure(spec.latency_reps, || {
            std::hint::black_box(model.forward(sample).expect("timed forward"));
        });
        row.latency = Some((stats.median_micros(), stats.mean_micros()));
    }
    let bench_latency = if bench_report.is_ok() {
        let sample = &bench_test[0];
        let stats = time_closure(spec.latency_reps, || {
            std::hint::black_box(bench.forward(&sample.window).expect("timed forward"));
        });
        Some((stats.median_micros(), stats.mean_micros()))
    } else {
        None
    };

    write_outputs(
        &spec,
        rows,
        hold_rmse,
        &bench,
        bench_hidden,
        bench_status,
        bench_rmse,
        bench_latency,
        &bench_curve,
    )
}

fn status_of(err: &ForecastError) -> String {
    match err {
        ForecastError::Diverged { epoch, .. } => format!("diverged@{epoch}"),
        other => format!("error:{}", other.to_string().replace(',', ";")),
    }
}

fn threshold_row(
    spec: &ExperimentSpec,
    threshold: f64,
    train_part: &Trace,
    val_part: &Trace,
    trainval: &Trace,
    test_part: &Trace,
) -> Row {
    match threshold_row_inner(spec, threshold, train_part, val_part, trainval, test_part) {
        Ok(row) => row,
        Err(err) => Row {
            threshold,
            savings: f64::NAN,
            trunc_rmse: f64::NAN,
            test_rmse: None,
            hidden: spec.hidden,
            params: 0,
            status: format!("error:{}", err.to_string().replace(',', ";")),
            model: None,
            loss_csv: String::new(),
            latency: None,
        },
    }
}

fn threshold_row_inner(
    spec: &ExperimentSpec,
    threshold: f64,
    train_part: &Trace,
    val_part: &Trace,
    trainval: &Trace,
    test_part: &Trace,
) -> Result<Row> {
    let window = spec.window;
    let criterion = spec.criterion.with(threshold);
    let trainval_samples = build_windows(trainval, &window, &criterion, spec.field())?;
    let test_samples = build_windows(test_part, &window, &criterion, spec.field())?;

    // Collection metrics on the test portion: what the protocol would have
    // cost while the trained model is in service.
    let mut comm_trace = test_part.clone();
    let usable = comm_trace.len() - comm_trace.len() % window.n;
    comm_trace.truncate_steps(usable);
    let outcome = run_simulation(
        &comm_trace.node_series(spec.field()),
        &CollectionConfig {
            n: window.n,
            tau: comm_trace.sampling_period() as f64,
            p: comm_trace.machine_count(),
            criterion,
            seed: spec.seed,
        },
    )?;

    let (train_cfg, hidden) = if spec.tune_trials > 0 {
        tune_hyperparams(spec, threshold, train_part, val_part)?
    } else {
        (spec.train, spec.hidden)
    };

    let cfg = CGruConfig {
        hidden,
        window: window.w,
        horizon: window.s,
        rule: spec.rule,
    };
    let mut model = CGruModel::<f64>::seeded(cfg, spec.seed ^ threshold.to_bits())
        .map_err(|e| anyhow!(e))?;
    let params = model.param_count();
    match train_cgru(&mut model, &trainval_samples, None, &train_cfg) {
        Ok(report) => {
            let test_rmse = eval_cgru_rmse(&model, &test_samples).map_err(|e| anyhow!(e))?;
            Ok(Row {
                threshold,
                savings: outcome.report.savings,
                trunc_rmse: outcome.report.mean_truncation_rmse,
                test_rmse: Some(test_rmse),
                hidden,
                params,
                status: "ok".into(),
                model: Some(model),
                loss_csv: report.to_csv(),
                latency: None,
            })
        }
        Err(err) => Ok(Row {
            threshold,
            savings: outcome.report.savings,
            trunc_rmse: outcome.report.mean_truncation_rmse,
            test_rmse: None,
            hidden,
            params,
            status: status_of(&err),
            model: None,
            loss_csv: String::new(),
            latency: None,
        }),
    }
}

/// Seeded random search over {hidden, learning rate, decay, batch size}:
/// short trainings on the train portion scored on the validation portion.
fn tune_hyperparams(
    spec: &ExperimentSpec,
    threshold: f64,
    train_part: &Trace,
    val_part: &Trace,
) -> Result<(TrainConfig, usize)> {
    let window = spec.window;
    let criterion = spec.criterion.with(threshold);
    let train_samples = build_windows(train_part, &window, &criterion, spec.field())?;
    let val_samples = build_windows(val_part, &window, &criterion, spec.field())?;

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed ^ threshold.to_bits() ^ 0xace);
    let hidden_grid = [8usize, 12, 16, 24, 32, 48];
    let decay_grid = [0.9, 0.95, 0.99];
    let batch_grid = [8usize, 16, 32];
    let trial_epochs = (spec.train.epochs / 4).max(10);

    let mut best: Option<(f64, TrainConfig, usize)> = None;
    for _ in 0..spec.tune_trials {
        let hidden = hidden_grid[rng.gen_range(0..hidden_grid.len())];
        let cfg = TrainConfig {
            learning_rate: 10f64.powf(rng.gen_range(-3.7..-2.0)),
            decay: decay_grid[rng.gen_range(0..decay_grid.len())],
            epsilon: spec.train.epsilon,
            batch_size: batch_grid[rng.gen_range(0..batch_grid.len())],
            epochs: trial_epochs,
            seed: spec.seed,
        };
        let model_cfg = CGruConfig {
            hidden,
            window: window.w,
            horizon: window.s,
            rule: spec.rule,
        };
        let mut model = CGruModel::<f64>::seeded(model_cfg, spec.seed ^ threshold.to_bits())
            .map_err(|e| anyhow!(e))?;
        let Ok(_) = train_cgru(&mut model, &train_samples, None, &cfg) else {
            continue; // diverged trial; skip
        };
        let val_rmse = eval_cgru_rmse(&model, &val_samples).map_err(|e| anyhow!(e))?;
        if best.as_ref().map_or(true, |(score, _, _)| val_rmse < *score) {
            best = Some((val_rmse, cfg, hidden));
        }
    }
    let (_, mut cfg, hidden) =
        best.ok_or_else(|| anyhow!("every tuning trial diverged for threshold {threshold}"))?;
    cfg.epochs = spec.train.epochs;
    Ok((cfg, hidden))
}

#[allow(clippy::too_many_arguments)]
fn write_outputs(
    spec: &ExperimentSpec,
    rows: Vec<Row>,
    hold_rmse: f64,
    bench: &TimeGruModel<f64>,
    bench_hidden: usize,
    bench_status: String,
    bench_rmse: Option<f64>,
    bench_latency: Option<(f64, f64)>,
    bench_curve: &str,
) -> Result<()> {
    ensure_out_dir(&spec.out)?;
    let label = |threshold: f64| -> String {
        match spec.criterion {
            CriterionKind::Energy => format!("e{threshold}"),
            CriterionKind::Rmse => format!("eps{threshold}"),
        }
    };

    let mut csv = format!(
        "# schema={SCHEMA}\n# nondeterministic_columns=infer_median_us,infer_mean_us\n\
         model,criterion,threshold,savings,mean_trunc_rmse,test_rmse,hold_rmse,infer_median_us,infer_mean_us,params,hidden,status\n"
    );
    let opt = |v: Option<f64>| v.map(fmt).unwrap_or_default();
    for row in &rows {
        let (median, mean) = row.latency.map_or((None, None), |(md, mn)| (Some(md), Some(mn)));
        csv.push_str(&format!(
            "cgru,{},{},{},{},{},{},{},{},{},{},{}\n",
            spec.criterion.label(),
            row.threshold,
            fmt(row.savings),
            fmt(row.trunc_rmse),
            opt(row.test_rmse),
            fmt(hold_rmse),
            opt(median),
            opt(mean),
            row.params,
            row.hidden,
            row.status
        ));
    }
    let (bmedian, bmean) = bench_latency.map_or((None, None), |(md, mn)| (Some(md), Some(mn)));
    csv.push_str(&format!(
        "time_gru,,,,,{},{},{},{},{},{},{}\n",
        opt(bench_rmse),
        fmt(hold_rmse),
        opt(bmedian),
        opt(bmean),
        bench.param_count(),
        bench_hidden,
        bench_status
    ));
    let metrics_path = spec.out.join("metrics.csv");
    fs::write(&metrics_path, &csv)?;

    for row in &rows {
        if let Some(model) = &row.model {
            let tag = label(row.threshold);
            let mut file = Vec::new();
            save_cgru(model, &mut file).map_err(|e| anyhow!(e))?;
            fs::write(spec.out.join(format!("checkpoint_cgru_{tag}.txt")), file)?;
            fs::write(spec.out.join(format!("loss_cgru_{tag}.csv")), &row.loss_csv)?;
        }
    }
    if bench_status == "ok" {
        let mut file = Vec::new();
        save_time_gru(bench, &mut file).map_err(|e| anyhow!(e))?;
        fs::write(spec.out.join("checkpoint_time_gru.txt"), file)?;
        fs::write(spec.out.join("loss_time_gru.csv"), bench_curve)?;
    }

    println!("wrote {}", metrics_path.display());
    for row in &rows {
        println!(
            "  cgru {} {}: savings {:.4}, test rmse {}, status {}",
            spec.criterion.label(),
            row.threshold,
            row.savings,
            row.test_rmse.map(|v| format!("{v:.4}")).unwrap_or_else(|| "-".into()),
            row.status
        );
    }
    println!(
        "  time_gru: test rmse {}, status {}",
        bench_rmse.map(|v| format!("{v:.4}")).unwrap_or_else(|| "-".into()),
        bench_status
    );
    Ok(())
}
