//! Wire format for node-to-controller updates.
//!
//! Layout, little-endian throughout:
//!
//! ```text
//! offset  size  field
//! 0       4     node_id      (u32)
//! 4       4     batch_index  (u32)
//! 8       2     n            (u16, originating batch length)
//! 10      2     k            (u16, retained term count)
//! 12      16k   coefficients (k pairs of IEEE-754 binary64: re, im)
//! ```
//!
//! Total length is `12 + 16k` bytes. Encoding followed by decoding is the
//! identity, bit for bit.

use num_complex::Complex;

use super::ProtocolError;
use crate::spectral::TruncatedSpectrum;

pub const HEADER_LEN: usize = 12;

#[derive(Debug, Clone, PartialEq)]
pub struct UpdateMessage {
    pub node_id: u32,
    pub batch_index: u32,
    pub spectrum: TruncatedSpectrum<f64>,
}

impl UpdateMessage {
    pub fn n(&self) -> usize {
        self.spectrum.n()
    }

    pub fn k(&self) -> usize {
        self.spectrum.k()
    }

    pub fn encoded_len(&self) -> usize {
        HEADER_LEN + 16 * self.k()
    }
}

pub fn encode_message(msg: &UpdateMessage) -> Vec<u8> {
    let mut out = Vec::with_capacity(msg.encoded_len());
    out.extend_from_slice(&msg.node_id.to_le_bytes());
    out.extend_from_slice(&msg.batch_index.to_le_bytes());
    out.extend_from_slice(&(msg.n() as u16).to_le_bytes());
    out.extend_from_slice(&(msg.k() as u16).to_le_bytes());
    for c in msg.spectrum.coefficients() {
        out.extend_from_slice(&c.re.to_le_bytes());
        out.extend_from_slice(&c.im.to_le_bytes());
    }
    out
}

pub fn decode_message(bytes: &[u8]) -> Result<UpdateMessage, ProtocolError> {
    if bytes.len() < HEADER_LEN {
        return Err(ProtocolError::TruncatedBuffer {
            needed: HEADER_LEN,
            got: bytes.len(),
        });
    }
    let node_id = u32::from_le_bytes(bytes[0..4].try_into().unwrap());
    let batch_index = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    let n = u16::from_le_bytes(bytes[8..10].try_into().unwrap()) as usize;
    let k = u16::from_le_bytes(bytes[10..12].try_into().unwrap()) as usize;
    let needed = HEADER_LEN + 16 * k;
    if bytes.len() != needed {
        return Err(ProtocolError::TruncatedBuffer {
            needed,
            got: bytes.len(),
        });
    }
    let mut coefficients = Vec::with_capacity(k);
    for i in 0..k {
        let at = HEADER_LEN + 16 * i;
        let re = f64::from_le_bytes(bytes[at..at + 8].try_into().unwrap());
        let im = f64::from_le_bytes(bytes[at + 8..at + 16].try_into().unwrap());
        coefficients.push(Complex::new(re, im));
    }
    let spectrum = TruncatedSpectrum::from_parts(coefficients, n)?;
    Ok(UpdateMessage {
        node_id,
        batch_index,
        spectrum,
    })
}
