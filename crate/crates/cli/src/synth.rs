//! `freqcast synth`: generate and save a synthetic trace.

use std::fs;

use anyhow::{Context, Result};
use freqcast_core::trace::{save_trace, synth_trace, SynthConfig};

use crate::experiment::ensure_out_dir;
use crate::CommonArgs;

pub fn run(args: &CommonArgs) -> Result<()> {
    let mut config = match &args.config {
        Some(path) => SynthConfig::parse_kv(
            &fs::read_to_string(path)
                .with_context(|| format!("reading config {}", path.display()))?,
        )?,
        None => SynthConfig::default(),
    };
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    let trace = synth_trace(&config)?;
    ensure_out_dir(&args.out)?;
    let path = args.out.join("trace.csv");
    save_trace(&trace, &path)?;
    println!(
        "wrote {} ({} machines x {} steps, period {}s)",
        path.display(),
        trace.machine_count(),
        trace.len(),
        trace.sampling_period()
    );
    Ok(())
}
