//! `freqcast truncate`: sweep truncation thresholds over a trace and emit
//! one (threshold, savings, rmse) row per setting.

use std::fs;

use anyhow::{bail, Result};
use freqcast_core::collection::{run_simulation, CollectionConfig};

use crate::experiment::{ensure_out_dir, fmt, ExperimentSpec};
use crate::CommonArgs;

pub const SCHEMA: &str = "freqcast.truncate.v1";

pub fn run(args: &CommonArgs) -> Result<()> {
    let spec = ExperimentSpec::resolve(args)?;
    let mut trace = spec.load_trace()?;

    // The protocol delivers whole batches; trim the tail remainder.
    let usable = trace.len() - trace.len() % spec.window.n;
    if usable == 0 {
        bail!(
            "trace too short: {} steps cannot fill one batch of {}",
            trace.len(),
            spec.window.n
        );
    }
    trace.truncate_steps(usable);
    let series = trace.node_series(spec.field());

    let mut csv = format!("# schema={SCHEMA}\ncriterion,threshold,savings,rmse\n");
    for &threshold in &spec.thresholds {
        let config = CollectionConfig {
            n: spec.window.n,
            tau: trace.sampling_period() as f64,
            p: series.len(),
            criterion: spec.criterion.with(threshold),
            seed: spec.seed,
        };
        let outcome = run_simulation(&series, &config)?;
        csv.push_str(&format!(
            "{},{},{},{}\n",
            spec.criterion.label(),
            threshold,
            fmt(outcome.report.savings),
            fmt(outcome.report.mean_truncation_rmse)
        ));
    }

    ensure_out_dir(&spec.out)?;
    let path = spec.out.join("truncate.csv");
    fs::write(&path, &csv)?;
    println!("wrote {}", path.display());
    Ok(())
}
