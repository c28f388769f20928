//! Records inside NOTIFY payloads.
//!
//! Each NOTIFY payload is one flags byte followed by a chunk of the
//! record's `.pks` encoding. Bit 0 of the flags means more chunks of the
//! same record follow. Every record used by the device fits in one chunk;
//! only oversized raw records are ever split.

use super::packet::MAX_PAYLOAD;
use crate::codec::{decode_record, encode_record, CodecError};
use crate::types::SensorRecord;

pub const FLAG_MORE: u8 = 0x01;
pub const CHUNK_MAX: usize = MAX_PAYLOAD - 1;

/// NOTIFY payloads carrying one record.
pub fn fragment(record: &SensorRecord) -> Result<Vec<Vec<u8>>, CodecError> {
    let mut bytes = Vec::new();
    encode_record(record, &mut bytes)?;
    let n = bytes.len().div_ceil(CHUNK_MAX);
    Ok(bytes
        .chunks(CHUNK_MAX)
        .enumerate()
        .map(|(i, c)| {
            let mut p = Vec::with_capacity(c.len() + 1);
            p.push(if i + 1 < n { FLAG_MORE } else { 0 });
            p.extend_from_slice(c);
            p
        })
        .collect())
}

/// Collects NOTIFY payloads back into records.
#[derive(Debug, Default)]
pub struct Reassembler {
    partial: Vec<u8>,
}

impl Reassembler {
    pub fn new() -> Self {
        Self::default()
    }

    /// Drops a half-built record, after a lost packet.
    pub fn reset(&mut self) {
        self.partial.clear();
    }

    pub fn in_progress(&self) -> bool {
        !self.partial.is_empty()
    }

    /// Feeds one payload. Returns a record once its last chunk arrives.
    pub fn push(&mut self, payload: &[u8]) -> Result<Option<SensorRecord>, CodecError> {
        let Some((&flags, chunk)) = payload.split_first() else {
            return Err(CodecError::TruncatedRecord { offset: 0 });
        };
        self.partial.extend_from_slice(chunk);
        if flags & FLAG_MORE != 0 {
            return Ok(None);
        }
        let bytes = std::mem::take(&mut self.partial);
        let (record, used) = decode_record(&bytes, 0)?;
        if used != bytes.len() {
            return Err(CodecError::MalformedPayload { offset: 0, reason: "trailing bytes after record" });
        }
        Ok(Some(record))
    }
}
