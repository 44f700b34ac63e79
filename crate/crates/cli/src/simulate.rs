//! `freqcast simulate`: one full collection-protocol run. Writes the
//! communication report (JSON and CSV) and the bit-exact concatenated
//! message stream.

use std::fs;

use anyhow::{bail, Context, Result};
use freqcast_core::collection::{run_simulation, CollectionConfig, CommunicationReport};
use freqcast_core::trace::load_trace;

use crate::experiment::ensure_out_dir;
use crate::CommonArgs;

pub fn run(args: &CommonArgs) -> Result<()> {
    let Some(trace_path) = &args.trace else {
        bail!("simulate requires --trace (or run `freqcast synth` first)");
    };
    let mut trace =
        load_trace(trace_path).with_context(|| format!("loading trace {}", trace_path.display()))?;

    let config_text = match &args.config {
        Some(path) => fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?,
        None => String::new(),
    };
    let mut config = CollectionConfig::parse_kv(&config_text, trace.machine_count())?;
    if let Some(n) = args.n {
        config.n = n;
    }
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if let Some(e) = args.e.as_deref() {
        match e {
            [single] => config.criterion = freqcast_core::collection::TruncationCriterion::EnergyThreshold(*single),
            _ => bail!("simulate takes exactly one --e value"),
        }
    }
    if let Some(eps) = args.eps.as_deref() {
        match eps {
            [single] => config.criterion = freqcast_core::collection::TruncationCriterion::RmseBound(*single),
            _ => bail!("simulate takes exactly one --eps value"),
        }
    }

    let usable = trace.len() - trace.len() % config.n;
    if usable == 0 {
        bail!(
            "trace too short: {} steps cannot fill one batch of {}",
            trace.len(),
            config.n
        );
    }
    trace.truncate_steps(usable);
    let series = trace.node_series(Default::default());

    let outcome = run_simulation(&series, &config)?;

    ensure_out_dir(&args.out)?;
    let json_path = args.out.join("report.json");
    fs::write(&json_path, outcome.report.to_json())?;
    let csv_path = args.out.join("report.csv");
    fs::write(
        &csv_path,
        format!(
            "{}\n{}\n",
            CommunicationReport::csv_header(),
            outcome.report.csv_row()
        ),
    )?;
    let stream_path = args.out.join("messages.bin");
    fs::write(&stream_path, &outcome.encoded_stream)?;

    println!(
        "wrote {}, {}, {} ({} messages, savings {:.4})",
        json_path.display(),
        csv_path.display(),
        stream_path.display(),
        outcome.messages.len(),
        outcome.report.savings
    );
    Ok(())
}
