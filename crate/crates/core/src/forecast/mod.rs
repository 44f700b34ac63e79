//! Forecasting models over truncated spectra.
//!
//! The frequency-domain model runs a gated recurrent cell over each input
//! batch's coefficient sequence (complex terms fed as real/imaginary
//! pairs), concatenates the per-batch final hidden states, maps them
//! through a linear head to a half-spectrum of the forecast horizon, and
//! inverse-transforms to time-domain predictions. A time-domain GRU over
//! the raw concatenated window serves as the benchmark; both train with
//! mini-batch RMSprop under the same loop.

mod cell;
mod cgru;
mod checkpoint;
mod linalg;
mod time_gru;
mod timing;
mod train;

pub use cgru::{CGruConfig, CGruGradients, CGruModel, ForwardPass, SeqView};
pub use checkpoint::{load_cgru, load_time_gru, save_cgru, save_time_gru};
pub use linalg::Matrix;
pub use time_gru::{matched_hidden_size, time_gru_param_count, TimeGruGradients, TimeGruModel};
pub use timing::{time_closure, LatencyStats};
pub use train::{
    bucketize, eval_cgru_rmse, eval_time_rmse, mse, prediction_rmse, train_cgru, train_time_gru,
    EpochStats, MiniBatch, PaddedSample, RmsProp, TrainConfig, TrainReport,
};

use thiserror::Error;

use crate::scalar::Real;
use crate::spectral::TruncatedSpectrum;

/// How the recurrent cell combines the previous hidden state with the
/// candidate activation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum UpdateRule {
    /// Convex combination `h' = z.h + (1-z).cand`; the conventional GRU
    /// update and the default.
    #[default]
    StandardGru,
    /// The same combination wrapped in an extra sigmoid, which confines
    /// hidden states to (0, 1). Kept selectable for comparison.
    SigmoidWrapped,
}

#[derive(Debug, Error)]
pub enum ForecastError {
    #[error("window holds {got} batches, model expects {expected}")]
    WrongWindowCount { expected: usize, got: usize },
    #[error("input batch {index} has n={got}, expected n={expected}")]
    InconsistentN { index: usize, expected: usize, got: usize },
    #[error("target length {got} does not match horizon {expected}")]
    TargetLength { expected: usize, got: usize },
    #[error("invalid model config: {0}")]
    BadConfig(String),
    #[error("empty dataset")]
    EmptyDataset,
    #[error("training diverged at epoch {epoch}: loss {loss}")]
    Diverged { epoch: usize, loss: f64 },
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Sliding-window geometry: `w` batches of `n` steps feed the model,
/// which forecasts the next `s` steps.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WindowConfig {
    /// Batches per window.
    pub w: usize,
    /// Steps per batch.
    pub n: usize,
    /// Forecast horizon in steps; even, since predictions come out of an
    /// inverse transform.
    pub s: usize,
}

impl WindowConfig {
    /// Total observations in a window.
    pub fn l(&self) -> usize {
        self.n * self.w
    }

    pub fn validate(&self) -> Result<(), ForecastError> {
        if self.w == 0 {
            return Err(ForecastError::BadConfig("window needs w >= 1".into()));
        }
        if self.n < 2 || self.n % 2 != 0 {
            return Err(ForecastError::BadConfig(format!(
                "batch length n={} must be even and at least 2",
                self.n
            )));
        }
        if self.s == 0 || self.s % 2 != 0 {
            return Err(ForecastError::BadConfig(format!(
                "horizon s={} must be even and at least 2",
                self.s
            )));
        }
        Ok(())
    }
}

/// One supervised sample: `w` truncated input spectra and the next `s`
/// raw observations. Targets are always the original series; truncation
/// applies to the input window only.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowSample<T: Real = f64> {
    pub inputs: Vec<TruncatedSpectrum<T>>,
    pub target: Vec<T>,
}

impl<T: Real> WindowSample<T> {
    pub fn new(inputs: Vec<TruncatedSpectrum<T>>, target: Vec<T>) -> Result<Self, ForecastError> {
        if inputs.is_empty() {
            return Err(ForecastError::BadConfig("sample needs at least one input batch".into()));
        }
        let n = inputs[0].n();
        for (index, spec) in inputs.iter().enumerate() {
            if spec.n() != n {
                return Err(ForecastError::InconsistentN {
                    index,
                    expected: n,
                    got: spec.n(),
                });
            }
        }
        if target.is_empty() {
            return Err(ForecastError::BadConfig("sample needs a nonempty target".into()));
        }
        for v in &target {
            if !v.is_finite() || *v < T::zero() || *v > T::one() {
                return Err(ForecastError::BadConfig(
                    "target values must be finite utilisation fractions in [0, 1]".into(),
                ));
            }
        }
        Ok(Self { inputs, target })
    }

    /// Total retained coefficient count over the window; the bucketisation
    /// key.
    pub fn total_terms(&self) -> usize {
        self.inputs.iter().map(|s| s.k()).sum()
    }
}

/// Benchmark-model sample: the raw concatenated window and the same target.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeWindowSample<T: Real = f64> {
    pub window: Vec<T>,
    pub target: Vec<T>,
}
