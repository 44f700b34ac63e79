//! Experiment configuration: config file plus flag overrides resolved into
//! one spec shared by the subcommands.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use freqcast_core::collection::TruncationCriterion;
use freqcast_core::forecast::{TrainConfig, UpdateRule, WindowConfig};
use freqcast_core::kv::KvFile;
use freqcast_core::trace::{
    load_trace, subsample_machines, synth_trace, SynthConfig, Trace, UtilField,
};

use crate::CommonArgs;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CriterionKind {
    Energy,
    Rmse,
}

impl CriterionKind {
    pub fn with(self, threshold: f64) -> TruncationCriterion {
        match self {
            CriterionKind::Energy => TruncationCriterion::EnergyThreshold(threshold),
            CriterionKind::Rmse => TruncationCriterion::RmseBound(threshold),
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            CriterionKind::Energy => "energy",
            CriterionKind::Rmse => "rmse",
        }
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentSpec {
    pub trace_path: Option<PathBuf>,
    pub synth: SynthConfig,
    pub criterion: CriterionKind,
    /// Energy thresholds or RMSE bounds, per `criterion`.
    pub thresholds: Vec<f64>,
    pub window: WindowConfig,
    pub train: TrainConfig,
    pub hidden: usize,
    pub rule: UpdateRule,
    /// Random machine subsample; `None` keeps the whole trace.
    pub machines: Option<usize>,
    pub tune_trials: usize,
    pub latency_reps: usize,
    pub seed: u64,
    pub out: PathBuf,
}

impl ExperimentSpec {
    /// Loads the config file (when given) and applies the flag overrides.
    pub fn resolve(args: &CommonArgs) -> Result<Self> {
        let kv = match &args.config {
            Some(path) => KvFile::parse(
                &fs::read_to_string(path)
                    .with_context(|| format!("reading config {}", path.display()))?,
            )?,
            None => KvFile::parse("")?,
        };

        let criterion = if args.eps.is_some() {
            CriterionKind::Rmse
        } else if args.e.is_some() {
            CriterionKind::Energy
        } else {
            match kv.get("criterion").unwrap_or("energy") {
                "energy" => CriterionKind::Energy,
                "rmse" => CriterionKind::Rmse,
                other => bail!("unknown criterion `{other}` (expected `energy` or `rmse`)"),
            }
        };
        let thresholds = match criterion {
            CriterionKind::Energy => args
                .e
                .clone()
                .or(kv.f64_list("e")?)
                .unwrap_or_else(|| vec![0.5, 0.7, 0.9, 0.95]),
            CriterionKind::Rmse => args
                .eps
                .clone()
                .or(kv.f64_list("eps")?)
                .unwrap_or_else(|| vec![0.005, 0.01, 0.05, 0.1]),
        };
        for &t in &thresholds {
            match criterion {
                CriterionKind::Energy if !(t > 0.0 && t <= 1.0) => {
                    bail!("energy threshold {t} outside (0, 1]")
                }
                CriterionKind::Rmse if !(t > 0.0 && t.is_finite()) => {
                    bail!("RMSE bound {t} must be positive")
                }
                _ => {}
            }
        }

        let n = args.n.or(kv.parsed("n", "integer")?).unwrap_or(72);
        let w = args.w.or(kv.parsed("w", "integer")?).unwrap_or(4);
        let horizon = args
            .horizon
            .or(kv.parsed("horizon", "integer")?)
            .unwrap_or(n);
        let window = WindowConfig { w, n, s: horizon };
        window.validate()?;

        let seed = args.seed.or(kv.parsed("seed", "integer")?).unwrap_or(0);
        let train = TrainConfig {
            learning_rate: kv.f64_or("learning_rate", 2e-3)?,
            decay: kv.f64_or("decay", 0.9)?,
            epsilon: kv.f64_or("epsilon", 1e-8)?,
            batch_size: kv.usize_or("batch_size", 16)?,
            epochs: kv.usize_or("epochs", 150)?,
            seed,
        };
        train.validate()?;

        let rule = match kv.get("rule").unwrap_or("standard") {
            "standard" => UpdateRule::StandardGru,
            "sigmoid-wrapped" => UpdateRule::SigmoidWrapped,
            other => bail!("unknown update rule `{other}`"),
        };

        let trace_path = args
            .trace
            .clone()
            .or_else(|| kv.get("trace").map(PathBuf::from));
        let synth = match kv.get("synth_config") {
            Some(path) => SynthConfig::parse_kv(
                &fs::read_to_string(path)
                    .with_context(|| format!("reading synth config {path}"))?,
            )?,
            None => SynthConfig {
                seed,
                ..SynthConfig::default()
            },
        };

        Ok(Self {
            trace_path,
            synth,
            criterion,
            thresholds,
            window,
            train,
            hidden: kv.usize_or("hidden", 24)?,
            rule,
            machines: kv.parsed("machines", "integer")?,
            tune_trials: kv.usize_or("tune", 0)?,
            latency_reps: kv.usize_or("latency_reps", 200)?,
            seed,
            out: args.out.clone(),
        })
    }

    /// Loads the configured trace (or generates the synthetic default) and
    /// applies the machine subsample.
    pub fn load_trace(&self) -> Result<Trace> {
        let mut trace = match &self.trace_path {
            Some(path) => {
                load_trace(path).with_context(|| format!("loading trace {}", path.display()))?
            }
            None => synth_trace(&self.synth)?,
        };
        if let Some(size) = self.machines {
            trace = subsample_machines(&trace, size, self.seed)?;
        }
        Ok(trace)
    }

    pub fn field(&self) -> UtilField {
        UtilField::Cpu
    }
}

pub fn ensure_out_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).with_context(|| format!("creating output directory {}", path.display()))
}

/// 17 significant digits, the lossless round-trip format used everywhere.
pub fn fmt(v: f64) -> String {
    format!("{v:.16e}")
}
