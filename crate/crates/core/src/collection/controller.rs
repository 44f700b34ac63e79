//! Controller-side state: reconstructed per-node histories, the
//! communication ledger and state estimation between updates.

use std::collections::BTreeMap;

use super::message::UpdateMessage;
use super::ProtocolError;
use crate::spectral::{reconstruct, TruncatedSpectrum};

/// Forecasting hook the controller can use to estimate state beyond the
/// last received batch. Implemented by the frequency-domain model in the
/// forecast module; anything window-based fits.
pub trait SpectrumForecaster: Send {
    /// Number of most-recent batches the model consumes.
    fn window_batches(&self) -> usize;
    /// Number of future steps a single forecast produces.
    fn horizon(&self) -> usize;
    fn forecast(&self, window: &[TruncatedSpectrum<f64>]) -> Vec<f64>;
}

/// Running totals of floats transmitted versus floats the raw batches
/// would have cost.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CommunicationLedger {
    pub floats_sent: u64,
    pub floats_raw: u64,
}

impl CommunicationLedger {
    pub fn savings(&self) -> f64 {
        if self.floats_raw == 0 {
            return 0.0;
        }
        1.0 - self.floats_sent as f64 / self.floats_raw as f64
    }
}

/// Per-node view the controller maintains from ingested updates.
#[derive(Debug, Clone, Default)]
pub struct NodeRecord {
    /// Reconstructed batches, clamped to [0, 1] for state estimation.
    pub reconstructed: Vec<Vec<f64>>,
    /// Truncated spectra as received, in batch order.
    pub spectra: Vec<TruncatedSpectrum<f64>>,
    /// Global step index of the most recent update.
    pub last_update_step: usize,
    next_batch_index: u32,
}

impl NodeRecord {
    pub fn batches(&self) -> usize {
        self.reconstructed.len()
    }
}

pub struct ControllerState {
    n: usize,
    nodes: BTreeMap<u32, NodeRecord>,
    ledger: CommunicationLedger,
    model: Option<Box<dyn SpectrumForecaster>>,
}

impl std::fmt::Debug for ControllerState {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ControllerState")
            .field("n", &self.n)
            .field("nodes", &self.nodes)
            .field("ledger", &self.ledger)
            .field("model", &self.model.as_ref().map(|_| "attached"))
            .finish()
    }
}

impl ControllerState {
    pub fn new(n: usize) -> Self {
        Self {
            n,
            nodes: BTreeMap::new(),
            ledger: CommunicationLedger::default(),
            model: None,
        }
    }

    /// Attaches a trained forecasting model used by [`estimate`] for steps
    /// beyond the last received batch.
    ///
    /// [`estimate`]: ControllerState::estimate
    pub fn attach_model(&mut self, model: Box<dyn SpectrumForecaster>) {
        self.model = Some(model);
    }

    pub fn batch_len(&self) -> usize {
        self.n
    }

    pub fn ledger(&self) -> &CommunicationLedger {
        &self.ledger
    }

    pub fn node(&self, node_id: u32) -> Option<&NodeRecord> {
        self.nodes.get(&node_id)
    }

    pub fn node_ids(&self) -> impl Iterator<Item = u32> + '_ {
        self.nodes.keys().copied()
    }

    /// Ingests one update: reconstructs the batch, appends it to the node's
    /// history (registering the node on first contact) and charges the
    /// ledger 2k floats sent against n floats represented.
    pub fn ingest(&mut self, msg: &UpdateMessage) -> Result<(), ProtocolError> {
        if msg.n() != self.n {
            return Err(ProtocolError::BatchLengthMismatch {
                expected: self.n,
                got: msg.n(),
            });
        }
        let record = self.nodes.entry(msg.node_id).or_default();
        if msg.batch_index != record.next_batch_index {
            return Err(ProtocolError::OutOfOrderBatch {
                node_id: msg.node_id,
                expected: record.next_batch_index,
                got: msg.batch_index,
            });
        }
        let clamped: Vec<f64> = reconstruct(&msg.spectrum)
            .into_iter()
            .map(|v| v.clamp(0.0, 1.0))
            .collect();
        record.reconstructed.push(clamped);
        record.spectra.push(msg.spectrum.clone());
        record.next_batch_index += 1;
        record.last_update_step = record.reconstructed.len() * self.n;
        self.ledger.floats_sent += 2 * msg.k() as u64;
        self.ledger.floats_raw += self.n as u64;
        Ok(())
    }

    /// State estimate for a node at global step `t`. Inside received
    /// batches this is the clamped reconstruction; beyond the last batch it
    /// is the attached model's forecast when one is available and covers
    /// the step, and otherwise a zero-order hold of the last reconstructed
    /// value.
    pub fn estimate(&self, node_id: u32, t: usize) -> Result<f64, ProtocolError> {
        let record = self
            .nodes
            .get(&node_id)
            .filter(|r| !r.reconstructed.is_empty())
            .ok_or(ProtocolError::UnknownNode(node_id))?;
        let covered = record.reconstructed.len() * self.n;
        if t < covered {
            return Ok(record.reconstructed[t / self.n][t % self.n]);
        }
        let ahead = t - covered;
        if let Some(model) = &self.model {
            let w = model.window_batches();
            if record.spectra.len() >= w && ahead < model.horizon() {
                let window = &record.spectra[record.spectra.len() - w..];
                return Ok(model.forecast(window)[ahead]);
            }
        }
        Ok(*record
            .reconstructed
            .last()
            .and_then(|batch| batch.last())
            .expect("non-empty history"))
    }
}

/// Flat summary of a finished collection run.
#[derive(Debug, Clone, PartialEq)]
pub struct CommunicationReport {
    pub floats_sent: u64,
    pub floats_raw: u64,
    /// `1 - floats_sent / floats_raw`; negative when truncation keeps more
    /// than n/2 terms, since coefficients cost two floats each.
    pub savings: f64,
    /// Mean truncation RMSE over every batch of every node.
    pub mean_truncation_rmse: f64,
    /// Mean truncation RMSE per node.
    pub per_node_rmse: BTreeMap<u32, f64>,
}

impl CommunicationReport {
    pub fn to_json(&self) -> String {
        let per_node: Vec<String> = self
            .per_node_rmse
            .iter()
            .map(|(id, rmse)| format!("\"{id}\":{}", fmt_f64(*rmse)))
            .collect();
        format!(
            "{{\"floats_sent\":{},\"floats_raw\":{},\"savings\":{},\"mean_truncation_rmse\":{},\"per_node_rmse\":{{{}}}}}",
            self.floats_sent,
            self.floats_raw,
            fmt_f64(self.savings),
            fmt_f64(self.mean_truncation_rmse),
            per_node.join(",")
        )
    }

    pub fn csv_header() -> &'static str {
        "floats_sent,floats_raw,savings,mean_truncation_rmse"
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{}",
            self.floats_sent,
            self.floats_raw,
            fmt_f64(self.savings),
            fmt_f64(self.mean_truncation_rmse)
        )
    }
}

/// 17 significant digits: enough for a lossless f64 round-trip.
pub(crate) fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}
