//! Node-side collection loop: buffer observations, and on every n-th step
//! transform, truncate and emit an update.

use super::message::UpdateMessage;
use super::{CollectionConfig, ProtocolError};
use crate::spectral::{dft, TimeSeriesBatch};

#[derive(Debug, Clone)]
pub struct NodeState {
    node_id: u32,
    buffer: Vec<f64>,
    next_batch_index: u32,
    steps_since_update: usize,
}

impl NodeState {
    pub fn new(node_id: u32) -> Self {
        Self {
            node_id,
            buffer: Vec::new(),
            next_batch_index: 0,
            steps_since_update: 0,
        }
    }

    pub fn node_id(&self) -> u32 {
        self.node_id
    }

    pub fn buffered(&self) -> usize {
        self.buffer.len()
    }

    pub fn steps_since_update(&self) -> usize {
        self.steps_since_update
    }

    /// Appends one observation. When the buffer reaches the configured
    /// batch length, the batch is transformed, truncated per the configured
    /// criterion and returned as an update; the buffer is flushed.
    pub fn observe(
        &mut self,
        value: f64,
        config: &CollectionConfig,
    ) -> Result<Option<UpdateMessage>, ProtocolError> {
        if !value.is_finite() {
            return Err(ProtocolError::NonFiniteObservation(value));
        }
        if !(0.0..=1.0).contains(&value) {
            return Err(ProtocolError::ObservationOutOfRange(value));
        }
        self.buffer.push(value);
        self.steps_since_update += 1;
        if self.buffer.len() < config.n {
            return Ok(None);
        }
        let batch = TimeSeriesBatch::new(std::mem::take(&mut self.buffer))?;
        let spectrum = config.criterion.apply(&dft(&batch))?;
        let message = UpdateMessage {
            node_id: self.node_id,
            batch_index: self.next_batch_index,
            spectrum,
        };
        self.next_batch_index += 1;
        self.steps_since_update = 0;
        Ok(Some(message))
    }
}
