//! Single-threaded wall-clock measurement of model inference.

use std::time::{Duration, Instant};

/// Latency over warm repetitions of one call.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatencyStats {
    pub median: Duration,
    pub mean: Duration,
    pub reps: usize,
}

impl LatencyStats {
    pub fn median_micros(&self) -> f64 {
        self.median.as_secs_f64() * 1e6
    }

    pub fn mean_micros(&self) -> f64 {
        self.mean.as_secs_f64() * 1e6
    }
}

/// Times `reps` calls of `f` after a handful of warmup calls. With
/// `reps == 1` the single measured duration is both median and mean.
pub fn time_closure(reps: usize, mut f: impl FnMut()) -> LatencyStats {
    assert!(reps >= 1, "at least one repetition required");
    let warmup = (reps / 10).clamp(1, 20);
    for _ in 0..warmup {
        f();
    }
    let mut durations: Vec<Duration> = Vec::with_capacity(reps);
    for _ in 0..reps {
        let start = Instant::now();
        f();
        durations.push(start.elapsed());
    }
    durations.sort_unstable();
    let median = if reps % 2 == 1 {
        durations[reps / 2]
    } else {
        (durations[reps / 2 - 1] + durations[reps / 2]) / 2
    };
    let total: Duration = durations.iter().sum();
    LatencyStats {
        median,
        mean: total / reps as u32,
        reps,
    }
}
