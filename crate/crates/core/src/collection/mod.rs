//! Batched collection protocol: p nodes buffer observations, compress each
//! full batch to a truncated spectrum and send it to a central controller,
//! which reconstructs per-node state and keeps a communication ledger.
//!
//! The simulator is slotted-time and fully deterministic: identical
//! (trace, config) inputs produce byte-identical message streams.

mod controller;
mod message;
mod node;
mod sim;

pub use controller::{
    CommunicationLedger, CommunicationReport, ControllerState, NodeRecord, SpectrumForecaster,
};
pub use message::{decode_message, encode_message, UpdateMessage};
pub use node::NodeState;
pub use sim::{run_simulation, SimulationOutcome};

use thiserror::Error;

use crate::kv::{KvError, KvFile};
use crate::spectral::{truncate_by_energy, truncate_by_rmse, SpectralError, Spectrum, TruncatedSpectrum};

#[derive(Debug, Error)]
pub enum ProtocolError {
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error(transparent)]
    Config(#[from] KvError),
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("non-finite observation {0}")]
    NonFiniteObservation(f64),
    #[error("observation {0} outside the utilisation range [0, 1]")]
    ObservationOutOfRange(f64),
    #[error("node {node_id}: batch index {got} arrived, expected {expected}")]
    OutOfOrderBatch { node_id: u32, expected: u32, got: u32 },
    #[error("unknown node {0}")]
    UnknownNode(u32),
    #[error("message batch length {got} does not match controller batch length {expected}")]
    BatchLengthMismatch { expected: usize, got: usize },
    #[error("encoded message too short: need {needed} bytes, got {got}")]
    TruncatedBuffer { needed: usize, got: usize },
    #[error("trace is ragged: node {node} has {got} steps, expected {expected}")]
    RaggedTrace { node: usize, expected: usize, got: usize },
    #[error("trace length {len} is not a positive multiple of the batch length {n}")]
    BadTraceLength { len: usize, n: usize },
    #[error("config expects {expected} nodes, trace provides {got}")]
    NodeCountMismatch { expected: usize, got: usize },
}

/// Which truncation rule nodes apply to each batch spectrum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TruncationCriterion {
    /// Keep the minimal prefix capturing at least this fraction of energy.
    EnergyThreshold(f64),
    /// Keep the minimal prefix whose truncation RMSE bound is at most this.
    RmseBound(f64),
}

impl TruncationCriterion {
    pub fn apply(&self, spectrum: &Spectrum) -> Result<TruncatedSpectrum, SpectralError> {
        match *self {
            TruncationCriterion::EnergyThreshold(e) => truncate_by_energy(spectrum, e),
            TruncationCriterion::RmseBound(eps) => truncate_by_rmse(spectrum, eps),
        }
    }

    fn validate(&self) -> Result<(), ProtocolError> {
        match *self {
            TruncationCriterion::EnergyThreshold(e) if e > 0.0 && e <= 1.0 => Ok(()),
            TruncationCriterion::RmseBound(eps) if eps > 0.0 && eps.is_finite() => Ok(()),
            TruncationCriterion::EnergyThreshold(e) => Err(ProtocolError::InvalidConfig(format!(
                "energy threshold {e} outside (0, 1]"
            ))),
            TruncationCriterion::RmseBound(eps) => Err(ProtocolError::InvalidConfig(format!(
                "RMSE bound {eps} must be positive"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CollectionConfig {
    /// Steps per batch; even, at least 2, at most u16::MAX (wire limit).
    pub n: usize,
    /// Slot duration in seconds. Informational only.
    pub tau: f64,
    /// Number of nodes.
    pub p: usize,
    pub criterion: TruncationCriterion,
    pub seed: u64,
}

impl CollectionConfig {
    pub fn validate(&self) -> Result<(), ProtocolError> {
        if self.n < 2 || self.n % 2 != 0 {
            return Err(ProtocolError::InvalidConfig(format!(
                "batch length n={} must be even and at least 2",
                self.n
            )));
        }
        if self.n > u16::MAX as usize {
            return Err(ProtocolError::InvalidConfig(format!(
                "batch length n={} exceeds the wire limit of {}",
                self.n,
                u16::MAX
            )));
        }
        if self.p == 0 {
            return Err(ProtocolError::InvalidConfig("node count p must be >= 1".into()));
        }
        self.criterion.validate()
    }

    /// Parses the plain key-value config format. Recognised keys: `n`,
    /// `tau`, `criterion` (`energy` or `rmse`), `e`, `eps`, `seed`. The
    /// node count comes from the trace, not the file.
    pub fn parse_kv(text: &str, p: usize) -> Result<Self, ProtocolError> {
        let kv = KvFile::parse(text)?;
        let config = Self {
            n: kv.usize_or("n", 72)?,
            tau: kv.f64_or("tau", 300.0)?,
            p,
            criterion: criterion_from_kv(&kv)?,
            seed: kv.u64_or("seed", 0)?,
        };
        config.validate()?;
        Ok(config)
    }
}

fn criterion_from_kv(kv: &KvFile) -> Result<TruncationCriterion, ProtocolError> {
    match kv.get("criterion").unwrap_or("energy") {
        "energy" => Ok(TruncationCriterion::EnergyThreshold(kv.f64_or("e", 0.9)?)),
        "rmse" => match kv.parsed::<f64>("eps", "number")? {
            Some(eps) => Ok(TruncationCriterion::RmseBound(eps)),
            None => Err(ProtocolError::InvalidConfig(
                "criterion rmse requires key `eps`".into(),
            )),
        },
        other => Err(ProtocolError::InvalidConfig(format!(
            "unknown criterion `{other}` (expected `energy` or `rmse`)"
        ))),
    }
}
