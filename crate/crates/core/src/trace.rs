//! Trace ingestion and dataset construction: CSV load/save, resampling,
//! chronological splitting, sliding-window dataset building and synthetic
//! seasonal trace generation.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use thiserror::Error;

use crate::collection::TruncationCriterion;
use crate::forecast::{ForecastError, TimeWindowSample, WindowConfig, WindowSample};
use crate::kv::{KvError, KvFile};
use crate::spectral::{dft, SpectralError, TimeSeriesBatch};

#[derive(Debug, Error)]
pub enum TraceError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("line {line}: {reason}")]
    Csv { line: usize, reason: String },
    #[error("machine {machine}: timestamps do not match the common grid")]
    MisalignedGrid { machine: String },
    #[error("trace has no samples")]
    Empty,
    #[error("resample period {period}s is not a positive multiple of the source period {source_period}s")]
    BadPeriod { period: u64, source_period: u64 },
    #[error("invalid split: {0}")]
    BadSplit(String),
    #[error("{portion} portion has {len} steps, need at least {need}")]
    PortionTooShort {
        portion: &'static str,
        len: usize,
        need: usize,
    },
    #[error("series of {len} steps cannot fit one window of l + s = {need} steps")]
    WindowsTooShort { len: usize, need: usize },
    #[error("invalid synthetic config: {0}")]
    BadSynth(String),
    #[error("subsample of {want} machines from {have}")]
    BadSubsample { want: usize, have: usize },
    #[error(transparent)]
    Config(#[from] KvError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error(transparent)]
    Forecast(#[from] ForecastError),
}

/// Which utilisation column to feed downstream. Memory is carried through
/// the pipeline but the default experiments target CPU.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum UtilField {
    #[default]
    Cpu,
    Mem,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct MachineSeries {
    pub cpu: Vec<f64>,
    pub mem: Vec<f64>,
}

impl MachineSeries {
    pub fn field(&self, field: UtilField) -> &[f64] {
        match field {
            UtilField::Cpu => &self.cpu,
            UtilField::Mem => &self.mem,
        }
    }
}

/// Per-machine utilisation series on one uniform timestamp grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    machines: BTreeMap<String, MachineSeries>,
    start_timestamp: u64,
    sampling_period: u64,
}

impl Trace {
    pub fn len(&self) -> usize {
        self.machines.values().next().map_or(0, |s| s.cpu.len())
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn machine_count(&self) -> usize {
        self.machines.len()
    }

    pub fn machine_ids(&self) -> impl Iterator<Item = &str> {
        self.machines.keys().map(|s| s.as_str())
    }

    pub fn machine(&self, id: &str) -> Option<&MachineSeries> {
        self.machines.get(id)
    }

    pub fn sampling_period(&self) -> u64 {
        self.sampling_period
    }

    pub fn start_timestamp(&self) -> u64 {
        self.start_timestamp
    }

    /// Per-node series in machine-id order; node i of the collection
    /// simulator consumes entry i.
    pub fn node_series(&self, field: UtilField) -> Vec<Vec<f64>> {
        self.machines
            .values()
            .map(|s| s.field(field).to_vec())
            .collect()
    }

    /// Drops all but the first `steps` observations of every machine.
    pub fn truncate_steps(&mut self, steps: usize) {
        for series in self.machines.values_mut() {
            series.cpu.truncate(steps);
            series.mem.truncate(steps);
        }
    }

    /// Appends a chronologically adjacent portion (same machines, same
    /// period, timestamps continuing where this trace ends).
    pub fn concat_steps(&mut self, next: &Trace) -> Result<(), TraceError> {
        if next.sampling_period != self.sampling_period
            || !self.machines.keys().eq(next.machines.keys())
        {
            return Err(TraceError::BadSplit(
                "portions disagree on machines or sampling period".into(),
            ));
        }
        let expected_start = self.start_timestamp + self.len() as u64 * self.sampling_period;
        if next.start_timestamp != expected_start {
            return Err(TraceError::BadSplit(format!(
                "next portion starts at {}, expected {expected_start}",
                next.start_timestamp
            )));
        }
        for (series, other) in self.machines.values_mut().zip(next.machines.values()) {
            series.cpu.extend_from_slice(&other.cpu);
            series.mem.extend_from_slice(&other.mem);
        }
        Ok(())
    }
}

const CSV_HEADER: &str = "timestamp,machine_id,cpu_util,mem_util";

pub fn load_trace(path: &Path) -> Result<Trace, TraceError> {
    parse_trace_csv(&std::fs::read_to_string(path)?)
}

pub fn save_trace(trace: &Trace, path: &Path) -> Result<(), TraceError> {
    std::fs::write(path, trace_to_csv(trace))?;
    Ok(())
}

/// Timestamp-major CSV with 17-significant-digit floats, so a save/load
/// cycle is lossless.
pub fn trace_to_csv(trace: &Trace) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for t in 0..trace.len() {
        let ts = trace.start_timestamp + t as u64 * trace.sampling_period;
        for (id, series) in &trace.machines {
            let _ = writeln!(
                out,
                "{ts},{id},{:.16e},{:.16e}",
                series.cpu[t], series.mem[t]
            );
        }
    }
    out
}

pub fn parse_trace_csv(text: &str) -> Result<Trace, TraceError> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header.trim() == CSV_HEADER => {}
        Some((_, header)) => {
            return Err(TraceError::Csv {
                line: 1,
                reason: format!("expected header `{CSV_HEADER}`, found `{header}`"),
            })
        }
        None => return Err(TraceError::Empty),
    }

    // machine -> (timestamp -> (cpu, mem)); BTreeMaps keep everything
    // ordered regardless of row order in the file.
    let mut by_machine: BTreeMap<String, BTreeMap<u64, (f64, f64)>> = BTreeMap::new();
    for (idx, raw) in lines {
        let line_no = idx + 1;
        let row = raw.trim();
        if row.is_empty() {
            continue;
        }
        let fields: Vec<&str> = row.split(',').collect();
        if fields.len() != 4 {
            return Err(TraceError::Csv {
                line: line_no,
                reason: format!("expected 4 fields, found {}", fields.len()),
            });
        }
        let timestamp: u64 = fields[0].trim().parse().map_err(|_| TraceError::Csv {
            line: line_no,
            reason: format!("bad timestamp `{}`", fields[0]),
        })?;
        let machine = fields[1].trim().to_string();
        if machine.is_empty() {
            return Err(TraceError::Csv {
                line: line_no,
                reason: "empty machine id".into(),
            });
        }
        let mut util = [0.0f64; 2];
        for (slot, field) in util.iter_mut().zip(&fields[2..4]) {
            let v: f64 = field.trim().parse().map_err(|_| TraceError::Csv {
                line: line_no,
                reason: format!("bad utilisation `{field}`"),
            })?;
            if !v.is_finite() || !(0.0..=1.0).contains(&v) {
                return Err(TraceError::Csv {
                    line: line_no,
                    reason: format!("utilisation {v} outside [0, 1]"),
                });
            }
            *slot = v;
        }
        let slot = by_machine.entry(machine).or_default();
        if slot.insert(timestamp, (util[0], util[1])).is_some() {
            return Err(TraceError::Csv {
                line: line_no,
                reason: format!("duplicate sample for timestamp {timestamp}"),
            });
        }
    }

    let Some(first) = by_machine.values().next() else {
        return Err(TraceError::Empty);
    };
    let grid: Vec<u64> = first.keys().copied().collect();
    if grid.is_empty() {
        return Err(TraceError::Empty);
    }
    let period = if grid.len() >= 2 {
        grid[1] - grid[0]
    } else {
        1
    };
    if period == 0 || !grid.windows(2).all(|w| w[1] - w[0] == period) {
        let machine = by_machine.keys().next().unwrap().clone();
        return Err(TraceError::MisalignedGrid { machine });
    }

    let mut machines = BTreeMap::new();
    for (id, samples) in &by_machine {
        let timestamps: Vec<u64> = samples.keys().copied().collect();
        if timestamps != grid {
            return Err(TraceError::MisalignedGrid {
                machine: id.clone(),
            });
        }
        let series = MachineSeries {
            cpu: samples.values().map(|&(c, _)| c).collect(),
            mem: samples.values().map(|&(_, m)| m).collect(),
        };
        machines.insert(id.clone(), series);
    }

    Ok(Trace {
        machines,
        start_timestamp: grid[0],
        sampling_period: period,
    })
}

/// Mean-aggregates non-overlapping windows down to the coarser period.
/// A trailing partial window is dropped.
pub fn resample(trace: &Trace, period: u64) -> Result<Trace, TraceError> {
    let source = trace.sampling_period;
    if period == 0 || period % source != 0 {
        return Err(TraceError::BadPeriod {
            period,
            source_period: source,
        });
    }
    let m = (period / source) as usize;
    if m == 1 {
        return Ok(trace.clone());
    }
    let mean_chunks = |values: &[f64]| -> Vec<f64> {
        values
            .chunks_exact(m)
            .map(|chunk| chunk.iter().sum::<f64>() / m as f64)
            .collect()
    };
    let machines = trace
        .machines
        .iter()
        .map(|(id, series)| {
            (
                id.clone(),
                MachineSeries {
                    cpu: mean_chunks(&series.cpu),
                    mem: mean_chunks(&series.mem),
                },
            )
        })
        .collect();
    Ok(Trace {
        machines,
        start_timestamp: trace.start_timestamp,
        sampling_period: period,
    })
}

/// Chronological split fractions; contiguous, no shuffling.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitSpec {
    pub train_frac: f64,
    pub val_frac: f64,
    pub test_frac: f64,
}

impl SplitSpec {
    /// The experiment default: first half trains, next quarter validates,
    /// last quarter tests.
    pub fn halves_and_quarters() -> Self {
        Self {
            train_frac: 0.5,
            val_frac: 0.25,
            test_frac: 0.25,
        }
    }

    pub fn validate(&self) -> Result<(), TraceError> {
        let sum = self.train_frac + self.val_frac + self.test_frac;
        if (sum - 1.0).abs() > 1e-9 {
            return Err(TraceError::BadSplit(format!("fractions sum to {sum}, expected 1")));
        }
        if self.train_frac < 0.0 || self.val_frac < 0.0 || self.test_frac < 0.0 {
            return Err(TraceError::BadSplit("fractions must be nonnegative".into()));
        }
        Ok(())
    }
}

/// Cuts at floor boundaries; remainder steps go to the last portion. Each
/// portion must hold at least `min_len` steps (pass `l + s` to guarantee
/// every portion can build a window).
pub fn split(
    trace: &Trace,
    spec: &SplitSpec,
    min_len: usize,
) -> Result<(Trace, Trace, Trace), TraceError> {
    spec.validate()?;
    let len = trace.len();
    if len == 0 {
        return Err(TraceError::Empty);
    }
    let cut1 = (len as f64 * spec.train_frac).floor() as usize;
    let cut2 = (len as f64 * (spec.train_frac + spec.val_frac)).floor() as usize;
    let portions = [
        ("train", 0, cut1),
        ("validation", cut1, cut2),
        ("test", cut2, len),
    ];
    for (name, from, to) in portions {
        if to - from < min_len {
            return Err(TraceError::PortionTooShort {
                portion: name,
                len: to - from,
                need: min_len,
            });
        }
    }
    let slice = |from: usize, to: usize| -> Trace {
        let machines = trace
            .machines
            .iter()
            .map(|(id, series)| {
                (
                    id.clone(),
                    MachineSeries {
                        cpu: series.cpu[from..to].to_vec(),
                        mem: series.mem[from..to].to_vec(),
                    },
                )
            })
            .collect();
        Trace {
            machines,
            start_timestamp: trace.start_timestamp + from as u64 * trace.sampling_period,
            sampling_period: trace.sampling_period,
        }
    };
    Ok((slice(0, cut1), slice(cut1, cut2), slice(cut2, len)))
}

/// Builds the frequency-domain dataset: windows slide in strides of one
/// batch; each window's batches are truncated per the criterion and the
/// target is the next `s` raw observations.
pub fn build_windows(
    trace: &Trace,
    wc: &WindowConfig,
    criterion: &TruncationCriterion,
    field: UtilField,
) -> Result<Vec<WindowSample<f64>>, TraceError> {
    wc.validate()?;
    let need = wc.l() + wc.s;
    let len = trace.len();
    if len < need {
        return Err(TraceError::WindowsTooShort { len, need });
    }
    let mut samples = Vec::new();
    for series in trace.machines.values() {
        let values = series.field(field);
        let mut offset = 0;
        while offset + need <= len {
            let mut inputs = Vec::with_capacity(wc.w);
            for j in 0..wc.w {
                let from = offset + j * wc.n;
                let batch = TimeSeriesBatch::new(values[from..from + wc.n].to_vec())?;
                inputs.push(criterion.apply(&dft(&batch))?);
            }
            let target = values[offset + wc.l()..offset + need].to_vec();
            samples.push(WindowSample::new(inputs, target)?);
            offset += wc.n;
        }
    }
    Ok(samples)
}

/// Raw-window counterpart for the time-domain benchmark; same geometry and
/// targets, untruncated inputs.
pub fn build_time_windows(
    trace: &Trace,
    wc: &WindowConfig,
    field: UtilField,
) -> Result<Vec<TimeWindowSample<f64>>, TraceError> {
    wc.validate()?;
    let need = wc.l() + wc.s;
    let len = trace.len();
    if len < need {
        return Err(TraceError::WindowsTooShort { len, need });
    }
    let mut samples = Vec::new();
    for series in trace.machines.values() {
        let values = series.field(field);
        let mut offset = 0;
        while offset + need <= len {
            samples.push(TimeWindowSample {
                window: values[offset..offset + wc.l()].to_vec(),
                target: values[offset + wc.l()..offset + need].to_vec(),
            });
            offset += wc.n;
        }
    }
    Ok(samples)
}

/// Per-window hold baseline: repeat the window's last batch as the
/// forecast. Pairs with [`build_windows`] sample order.
pub fn build_hold_baseline(
    trace: &Trace,
    wc: &WindowConfig,
    field: UtilField,
) -> Result<Vec<(Vec<f64>, Vec<f64>)>, TraceError> {
    wc.validate()?;
    let need = wc.l() + wc.s;
    let len = trace.len();
    if len < need {
        return Err(TraceError::WindowsTooShort { len, need });
    }
    let mut pairs = Vec::new();
    for series in trace.machines.values() {
        let values = series.field(field);
        let mut offset = 0;
        while offset + need <= len {
            let last_batch = &values[offset + wc.l() - wc.n..offset + wc.l()];
            let prediction: Vec<f64> = (0..wc.s).map(|i| last_batch[i % wc.n]).collect();
            let target = values[offset + wc.l()..offset + need].to_vec();
            pairs.push((prediction, target));
            offset += wc.n;
        }
    }
    Ok(pairs)
}

/// Synthetic daily-seasonal trace generator.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub machines: usize,
    pub days: usize,
    /// Steps per day; must divide 86400 so the grid has an integer period
    /// in seconds.
    pub steps_per_day: usize,
    /// Amplitude of the daily fundamental and its overtones.
    pub amplitudes: Vec<f64>,
    pub noise_std: f64,
    pub mean: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            machines: 5,
            days: 10,
            steps_per_day: 288,
            amplitudes: vec![0.15, 0.08, 0.04],
            noise_std: 0.05,
            mean: 0.35,
            seed: 42,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<(), TraceError> {
        if self.machines == 0 || self.days == 0 {
            return Err(TraceError::BadSynth("machines and days must be at least 1".into()));
        }
        if self.steps_per_day < 2 || 86_400 % self.steps_per_day != 0 {
            return Err(TraceError::BadSynth(format!(
                "steps_per_day {} must divide 86400",
                self.steps_per_day
            )));
        }
        if !(0.0..=1.0).contains(&self.mean) {
            return Err(TraceError::BadSynth("mean must lie in [0, 1]".into()));
        }
        if self.noise_std < 0.0 || !self.noise_std.is_finite() {
            return Err(TraceError::BadSynth("noise_std must be nonnegative".into()));
        }
        Ok(())
    }

    pub fn parse_kv(text: &str) -> Result<Self, TraceError> {
        let kv = KvFile::parse(text)?;
        let defaults = Self::default();
        let config = Self {
            machines: kv.usize_or("machines", defaults.machines)?,
            days: kv.usize_or("days", defaults.days)?,
            steps_per_day: kv.usize_or("steps_per_day", defaults.steps_per_day)?,
            amplitudes: kv.f64_list("amplitudes")?.unwrap_or(defaults.amplitudes),
            noise_std: kv.f64_or("noise_std", defaults.noise_std)?,
            mean: kv.f64_or("mean", defaults.mean)?,
            seed: kv.u64_or("seed", defaults.seed)?,
        };
        config.validate()?;
        Ok(config)
    }
}

/// value(t) = mean + sum_h A_h sin(2 pi (h+1) t / steps_per_day + phase) +
/// gaussian noise, clipped to [0, 1]. Phases and noise are seeded per
/// machine, so the trace is reproducible and machines are decorrelated.
pub fn synth_trace(config: &SynthConfig) -> Result<Trace, TraceError> {
    config.validate()?;
    let steps = config.days * config.steps_per_day;
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut machines = BTreeMap::new();
    for m in 0..config.machines {
        let mut rng =
            ChaCha8Rng::seed_from_u64(config.seed ^ (m as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
        let noise = Normal::new(0.0, config.noise_std.max(f64::MIN_POSITIVE))
            .expect("validated noise std");
        let one_series = |rng: &mut ChaCha8Rng| -> Vec<f64> {
            let phases: Vec<f64> = config
                .amplitudes
                .iter()
                .map(|_| rng.gen_range(0.0..two_pi))
                .collect();
            (0..steps)
                .map(|t| {
                    let mut v = config.mean;
                    for (h, (&amp, &phase)) in
                        config.amplitudes.iter().zip(&phases).enumerate()
                    {
                        let freq = (h + 1) as f64;
                        v += amp * (two_pi * freq * t as f64 / config.steps_per_day as f64 + phase)
                            .sin();
                    }
                    if config.noise_std > 0.0 {
                        v += noise.sample(rng);
                    }
                    v.clamp(0.0, 1.0)
                })
                .collect()
        };
        let cpu = one_series(&mut rng);
        let mem = one_series(&mut rng);
        machines.insert(format!("m{m:04}"), MachineSeries { cpu, mem });
    }
    Ok(Trace {
        machines,
        start_timestamp: 0,
        sampling_period: (86_400 / config.steps_per_day) as u64,
    })
}

/// Keeps a seeded random subset of machines.
pub fn subsample_machines(trace: &Trace, size: usize, seed: u64) -> Result<Trace, TraceError> {
    let have = trace.machine_count();
    if size == 0 || size > have {
        return Err(TraceError::BadSubsample { want: size, have });
    }
    let mut ids: Vec<&String> = trace.machines.keys().collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // Partial Fisher-Yates: the first `size` entries are the sample.
    for i in 0..size {
        let j = rng.gen_range(i..ids.len());
        ids.swap(i, j);
    }
    let keep: Vec<String> = ids[..size].iter().map(|s| s.to_string()).collect();
    let machines = keep
        .into_iter()
        .map(|id| {
            let series = trace.machines[&id].clone();
            (id, series)
        })
        .collect();
    Ok(Trace {
        machines,
        start_timestamp: trace.start_timestamp,
        sampling_period: trace.sampling_period,
    })
}
