//! The `.pks` sensor-record file.
//!
//! All integers are little-endian.
//!
//! ```text
//! header : "PKLG" | version u16 | session_start_epoch_us u64 | config block
//! config : count u8 | count × { sensor_id u8 | rate_hz u16 | flags u8 }
//! record : sensor_id u8 | timestamp_us u64 | payload_len u16 | payload | crc8
//! ```
//!
//! The config block lists audio under pseudo-id `0x00`. Flag bit 0 is
//! "enabled"; for PPG, bits 1..=3 carry the LED mask. The record CRC covers
//! every record byte before it.
//!
//! Payloads:
//!
//! | sensor  | layout                                       | bytes      |
//! |---------|----------------------------------------------|------------|
//! | ECG/RESP| ch1 i32, ch2 i32 (24-bit values)             | 8          |
//! | PPG     | led_mask u8, then one u32 per set LED bit    | 1 + 4·n    |
//! | IMU     | ax ay az gx gy gz, i16 each                  | 12         |
//! | marker  | code u8                                      | 1          |
//! | other   | opaque                                       | any ≤65535 |

use std::io::{self, Read, Write};

use thiserror::Error;

use crate::config::{validate_config, ConfigError, SensorConfig, ValidatedConfig};
use crate::crc::{crc8, Crc8};
use crate::types::{
    EcgRespSample, ImuSample, Payload, PpgSample, SensorId, SensorRecord, ECG_COUNTS_MAX, ECG_COUNTS_MIN, LED_ALL,
};

pub const MAGIC: [u8; 4] = *b"PKLG";
pub const FORMAT_VERSION: u16 = 1;
/// Header length for the four-entry config block this crate writes.
pub const HEADER_LEN: usize = 4 + 2 + 8 + 1 + 4 * CONFIG_ENTRY_LEN;
/// id + timestamp + length + crc.
pub const RECORD_OVERHEAD: usize = 1 + 8 + 2 + 1;

const CONFIG_ENTRY_LEN: usize = 4;
const AUDIO_PSEUDO_ID: u8 = 0x00;
const FLAG_ENABLED: u8 = 0x01;

#[derive(Debug, Error)]
pub enum CodecError {
    #[error("not a session log (bad magic)")]
    BadMagic,
    #[error("unsupported format version {0}")]
    UnsupportedVersion(u16),
    #[error("header ends early")]
    TruncatedHeader,
    #[error("header config: {0}")]
    InvalidConfig(#[from] ConfigError),
    #[error("record {index} is out of (timestamp, sensor id) order")]
    UnsortedInput { index: usize },
    #[error("payload of {len} bytes exceeds 65535")]
    PayloadTooLarge { len: usize },
    #[error("record cannot be encoded: {0}")]
    InvalidRecord(&'static str),
    #[error("CRC mismatch in record at byte offset {offset}")]
    CrcMismatch { offset: u64 },
    #[error("record at byte offset {offset} is truncated")]
    TruncatedRecord { offset: u64 },
    #[error("record at byte offset {offset} has a malformed payload: {reason}")]
    MalformedPayload { offset: u64, reason: &'static str },
    #[error("i/o: {0}")]
    Io(#[from] io::Error),
}

impl CodecError {
    /// File offset of the offending record, for per-record errors.
    pub fn offset(&self) -> Option<u64> {
        match self {
            CodecError::CrcMismatch { offset }
            | CodecError::TruncatedRecord { offset }
            | CodecError::MalformedPayload { offset, .. } => Some(*offset),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SessionHeader {
    pub session_start_epoch_us: u64,
    pub config: ValidatedConfig,
}

impl SessionHeader {
    pub fn new(session_start_epoch_us: u64, config: ValidatedConfig) -> Self {
        SessionHeader { session_start_epoch_us, config }
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(HEADER_LEN);
        out.extend_from_slice(&MAGIC);
        out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        out.extend_from_slice(&self.session_start_epoch_us.to_le_bytes());
        out.extend_from_slice(&encode_config_block(self.config.get()));
        out
    }

    pub fn read_from<R: Read>(r: &mut R) -> Result<(Self, u64), CodecError> {
        let mut fixed = [0u8; 4 + 2 + 8 + 1];
        if read_full(r, &mut fixed)? < fixed.len() {
            return Err(if fixed[..4] != MAGIC[..] { CodecError::BadMagic } else { CodecError::TruncatedHeader });
        }
        if fixed[..4] != MAGIC {
            return Err(CodecError::BadMagic);
        }
        let version = u16::from_le_bytes([fixed[4], fixed[5]]);
        if version != FORMAT_VERSION {
            return Err(CodecError::UnsupportedVersion(version));
        }
        let epoch = u64::from_le_bytes(fixed[6..14].try_into().unwrap());
        let count = fixed[14] as usize;
        let mut block = vec![0u8; 1 + count * CONFIG_ENTRY_LEN];
        block[0] = fixed[14];
        if read_full(r, &mut block[1..])? < count * CONFIG_ENTRY_LEN {
            return Err(CodecError::TruncatedHeader);
        }
        let (config, used) = decode_config_block(&block)?;
        debug_assert_eq!(used, block.len());
        Ok((SessionHeader { session_start_epoch_us: epoch, config }, (fixed.len() - 1 + block.len()) as u64))
    }
}

/// Count-prefixed config block, shared with the stream protocol's SET_CONFIG.
pub fn encode_config_block(cfg: &SensorConfig) -> Vec<u8> {
    let flag = |enabled: bool| if enabled { FLAG_ENABLED } else { 0 };
    let entries = [
        (SensorId::EcgResp.as_u8(), cfg.ecg.rate_hz, flag(cfg.ecg.enabled)),
        (SensorId::Ppg.as_u8(), cfg.ppg.rate_hz, flag(cfg.ppg.enabled) | ((cfg.ppg_led_mask & LED_ALL) << 1)),
        (SensorId::Imu.as_u8(), cfg.imu.rate_hz, flag(cfg.imu.enabled)),
        (AUDIO_PSEUDO_ID, cfg.audio.sample_rate_hz, flag(cfg.audio.enabled)),
    ];
    let mut out = Vec::with_capacity(1 + entries.len() * CONFIG_ENTRY_LEN);
    out.push(entries.len() as u8);
    for (id, rate, flags) in entries {
        out.push(id);
        out.extend_from_slice(&(rate.min(u16::MAX as u32) as u16).to_le_bytes());
        out.push(flags);
    }
    out
}

/// Parses a config block, returning the config and the bytes consumed.
/// Sensors missing from the block are disabled; unknown ids are skipped.
pub fn decode_config_block(bytes: &[u8]) -> Result<(ValidatedConfig, usize), CodecError> {
    let count = *bytes.first().ok_or(CodecError::TruncatedHeader)? as usize;
    let used = 1 + count * CONFIG_ENTRY_LEN;
    if bytes.len() < used {
        return Err(CodecError::TruncatedHeader);
    }
    let mut cfg = SensorConfig::all_disabled();
    cfg.ppg_led_mask = 0;
    for e in bytes[1..used].chunks_exact(CONFIG_ENTRY_LEN) {
        let rate = u16::from_le_bytes([e[1], e[2]]) as u32;
        let enabled = e[3] & FLAG_ENABLED != 0;
        if e[0] == AUDIO_PSEUDO_ID {
            cfg.audio.enabled = enabled;
            cfg.audio.sample_rate_hz = rate;
            continue;
        }
        let id = SensorId::from_u8(e[0]);
        if id == SensorId::Ppg {
            cfg.ppg_led_mask = (e[3] >> 1) & LED_ALL;
        }
        if let Some(ch) = cfg.channel_mut(id) {
            ch.enabled = enabled;
            ch.rate_hz = rate;
        }
    }
    Ok((validate_config(cfg)?, used))
}

fn payload_bytes(record: &SensorRecord, out: &mut Vec<u8>) -> Result<(), CodecError> {
    match (&record.payload, record.sensor_id) {
        (Payload::EcgResp(s), SensorId::EcgResp) => {
            for c in [s.ch1_counts, s.ch2_counts] {
                if !(ECG_COUNTS_MIN..=ECG_COUNTS_MAX).contains(&c) {
                    return Err(CodecError::InvalidRecord("ECG counts outside 24-bit range"));
                }
                out.extend_from_slice(&c.to_le_bytes());
            }
        }
        (Payload::Ppg(s), SensorId::Ppg) => {
            if s.led_mask & !LED_ALL != 0 || s.counts.len() != s.led_mask.count_ones() as usize {
                return Err(CodecError::InvalidRecord("PPG counts do not match LED mask"));
            }
            out.push(s.led_mask);
            for c in &s.counts {
                out.extend_from_slice(&c.to_le_bytes());
            }
        }
        (Payload::Imu(s), SensorId::Imu) => {
            for v in [s.ax, s.ay, s.az, s.gx, s.gy, s.gz] {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        (Payload::Marker { code }, SensorId::Marker) => out.push(*code),
        (Payload::Raw(bytes), SensorId::Unknown(_)) => out.extend_from_slice(bytes),
        _ => return Err(CodecError::InvalidRecord("payload type does not match sensor id")),
    }
    Ok(())
}

/// Appends one encoded record (with CRC) to `out`.
pub fn encode_record(record: &SensorRecord, out: &mut Vec<u8>) -> Result<(), CodecError> {
    let start = out.len();
    out.push(record.sensor_id.as_u8());
    out.extend_from_slice(&record.timestamp_us.to_le_bytes());
    out.extend_from_slice(&[0, 0]);
    let payload_start = out.len();
    if let Err(e) = payload_bytes(record, out) {
        out.truncate(start);
        return Err(e);
    }
    let len = out.len() - payload_start;
    if len > u16::MAX as usize {
        out.truncate(start);
        return Err(CodecError::PayloadTooLarge { len });
    }
    out[payload_start - 2..payload_start].copy_from_slice(&(len as u16).to_le_bytes());
    let crc = crc8(&out[start..]);
    out.push(crc);
    Ok(())
}

/// Expected payload length for a known sensor, or `None` when it depends on
/// the payload itself (PPG) or the sensor is unknown.
fn fixed_payload_len(id: SensorId) -> Option<usize> {
    match id {
        SensorId::EcgResp => Some(8),
        SensorId::Imu => Some(12),
        SensorId::Marker => Some(1),
        SensorId::Ppg | SensorId::Unknown(_) => None,
    }
}

fn plausible_len(id: SensorId, len: usize) -> bool {
    match fixed_payload_len(id) {
        Some(n) => n == len,
        None if id == SensorId::Ppg => (5..=13).contains(&len) && (len - 1).is_multiple_of(4),
        None => true,
    }
}

fn decode_payload(id: SensorId, p: &[u8]) -> Result<Payload, &'static str> {
    let i32_at = |i: usize| i32::from_le_bytes(p[i..i + 4].try_into().unwrap());
    let i16_at = |i: usize| i16::from_le_bytes([p[i], p[i + 1]]);
    Ok(match id {
        SensorId::EcgResp => {
            let s = EcgRespSample { ch1_counts: i32_at(0), ch2_counts: i32_at(4) };
            let range = ECG_COUNTS_MIN..=ECG_COUNTS_MAX;
            if !range.contains(&s.ch1_counts) || !range.contains(&s.ch2_counts) {
                return Err("ECG counts outside 24-bit range");
            }
            Payload::EcgResp(s)
        }
        SensorId::Ppg => {
            let mask = p[0];
            if mask & !LED_ALL != 0 || 1 + 4 * mask.count_ones() as usize != p.len() {
                return Err("PPG length does not match LED mask");
            }
            let counts = p[1..].chunks_exact(4).map(|c| u32::from_le_bytes(c.try_into().unwrap())).collect();
            Payload::Ppg(PpgSample { led_mask: mask, counts })
        }
        SensorId::Imu => Payload::Imu(ImuSample {
            ax: i16_at(0),
            ay: i16_at(2),
            az: i16_at(4),
            gx: i16_at(6),
            gy: i16_at(8),
            gz: i16_at(10),
        }),
        SensorId::Marker => Payload::Marker { code: p[0] },
        SensorId::Unknown(_) => Payload::Raw(p.to_vec()),
    })
}

/// Decodes one complete encoded record from the front of `bytes`, returning
/// it and its encoded length. `offset` is only used in error values.
pub fn decode_record(bytes: &[u8], offset: u64) -> Result<(SensorRecord, usize), CodecError> {
    if bytes.len() < RECORD_OVERHEAD - 1 {
        return Err(CodecError::TruncatedRecord { offset });
    }
    let len = u16::from_le_bytes([bytes[9], bytes[10]]) as usize;
    let total = RECORD_OVERHEAD + len;
    if bytes.len() < total {
        return Err(CodecError::TruncatedRecord { offset });
    }
    let id = SensorId::from_u8(bytes[0]);
    if !plausible_len(id, len) || crc8(&bytes[..total - 1]) != bytes[total - 1] {
        return Err(CodecError::CrcMismatch { offset });
    }
    let payload =
        decode_payload(id, &bytes[11..11 + len]).map_err(|reason| CodecError::MalformedPayload { offset, reason })?;
    let timestamp_us = u64::from_le_bytes(bytes[1..9].try_into().unwrap());
    Ok((SensorRecord { sensor_id: id, timestamp_us, payload }, total))
}

/// Incremental `.pks` writer. Enforces record order as it goes.
pub struct RecordWriter<W: Write> {
    sink: W,
    last_key: Option<(u64, u8)>,
    index: usize,
    bytes_written: u64,
    buf: Vec<u8>,
}

impl<W: Write> RecordWriter<W> {
    pub fn new(mut sink: W, header: &SessionHeader) -> Result<Self, CodecError> {
        let h = header.encode();
        sink.write_all(&h)?;
        Ok(RecordWriter { sink, last_key: None, index: 0, bytes_written: h.len() as u64, buf: Vec::with_capacity(64) })
    }

    pub fn push(&mut self, record: &SensorRecord) -> Result<(), CodecError> {
        let key = record.sort_key();
        if self.last_key.is_some_and(|last| key < last) {
            return Err(CodecError::UnsortedInput { index: self.index });
        }
        self.buf.clear();
        encode_record(record, &mut self.buf)?;
        self.sink.write_all(&self.buf)?;
        self.bytes_written += self.buf.len() as u64;
        self.last_key = Some(key);
        self.index += 1;
        Ok(())
    }

    pub fn bytes_written(&self) -> u64 {
        self.bytes_written
    }

    pub fn finish(mut self) -> Result<(u64, W), CodecError> {
        self.sink.flush()?;
        Ok((self.bytes_written, self.sink))
    }
}

/// Writes a header and the records, which must be sorted by timestamp with
/// ties broken by ascending sensor id.
pub fn write_session<'a, W, I>(header: &SessionHeader, records: I, sink: W) -> Result<u64, CodecError>
where
    W: Write,
    I: IntoIterator<Item = &'a SensorRecord>,
{
    let mut w = RecordWriter::new(sink, header)?;
    for r in records {
        w.push(r)?;
    }
    Ok(w.finish()?.0)
}

/// Reads the header and returns a streaming iterator over the records.
/// Wrap file handles in a `BufReader`; the iterator reads record by record.
pub fn read_session<R: Read>(mut source: R) -> Result<(SessionHeader, RecordReader<R>), CodecError> {
    let (header, offset) = SessionHeader::read_from(&mut source)?;
    Ok((header, RecordReader { source, offset, buf: Vec::with_capacity(64), done: false }))
}

/// Yields records in file order. After the first error it yields nothing.
pub struct RecordReader<R: Read> {
    source: R,
    offset: u64,
    buf: Vec<u8>,
    done: bool,
}

impl<R: Read> RecordReader<R> {
    /// Byte offset of the next unread record.
    pub fn offset(&self) -> u64 {
        self.offset
    }

    fn next_record(&mut self) -> Result<Option<SensorRecord>, CodecError> {
        let offset = self.offset;
        self.buf.clear();
        self.buf.resize(RECORD_OVERHEAD - 1, 0);
        let got = read_full(&mut self.source, &mut self.buf)?;
        if got == 0 {
            return Ok(None);
        }
        if got < self.buf.len() {
            return Err(CodecError::TruncatedRecord { offset });
        }
        let id = SensorId::from_u8(self.buf[0]);
        let len = u16::from_le_bytes([self.buf[9], self.buf[10]]) as usize;
        // A length that cannot belong to this sensor means the id or length
        // byte is damaged; reading on would desynchronize the stream.
        if !plausible_len(id, len) {
            return Err(CodecError::CrcMismatch { offset });
        }
        let head = self.buf.len();
        self.buf.resize(head + len + 1, 0);
        if read_full(&mut self.source, &mut self.buf[head..])? < len + 1 {
            return Err(CodecError::TruncatedRecord { offset });
        }
        let mut crc = Crc8::new();
        crc.update(&self.buf[..head + len]);
        if crc.value() != self.buf[head + len] {
            return Err(CodecError::CrcMismatch { offset });
        }
        let payload = decode_payload(id, &self.buf[head..head + len])
            .map_err(|reason| CodecError::MalformedPayload { offset, reason })?;
        let timestamp_us = u64::from_le_bytes(self.buf[1..9].try_into().unwrap());
        self.offset += (head + len + 1) as u64;
        Ok(Some(SensorRecord { sensor_id: id, timestamp_us, payload }))
    }
}

impl<R: Read> Iterator for RecordReader<R> {
    type Item = Result<SensorRecord, CodecError>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        match self.next_record() {
            Ok(Some(r)) => Some(Ok(r)),
            Ok(None) => {
                self.done = true;
                None
            }
            Err(e) => {
                self.done = true;
                Some(Err(e))
            }
        }
    }
}

/// Fills `buf` as far as the source allows; returns bytes read.
pub(crate) fn read_full<R: Read>(r: &mut R, buf: &mut [u8]) -> io::Result<usize> {
    let mut n = 0;
    while n < buf.len() {
        match r.read(&mut buf[n..]) {
            Ok(0) => break,
            Ok(k) => n += k,
            Err(e) if e.kind() == io::ErrorKind::Interrupted => {}
            Err(e) => return Err(e),
        }
    }
    Ok(n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::{LED_GREEN, LED_IR};
    use proptest::prelude::*;

    fn header() -> SessionHeader {
        SessionHeader::new(1_700_000_000_000_000, ValidatedConfig::default())
    }

    fn sample_records() -> Vec<SensorRecord> {
        vec![
            SensorRecord::ecg(0, 100, -100),
            SensorRecord::ppg(0, LED_GREEN, vec![123_456]),
            SensorRecord::imu(0, ImuSample { ax: 1, ay: -2, az: 16384, gx: 3, gy: -4, gz: 5 }),
            SensorRecord::marker(0, 1),
            SensorRecord::ecg(8000, ECG_COUNTS_MAX, ECG_COUNTS_MIN),
            SensorRecord::ppg(10_000, LED_GREEN | LED_IR, vec![1, u32::MAX]),
        ]
    }

    fn write_to_vec(records: &[SensorRecord]) -> Vec<u8> {
        let mut out = Vec::new();
        let n = write_session(&header(), records, &mut out).unwrap();
        assert_eq!(n as usize, out.len());
        out
    }

    fn read_all(bytes: &[u8]) -> (Vec<SensorRecord>, Option<CodecError>) {
        let (_, reader) = read_session(bytes).unwrap();
        let mut ok = Vec::new();
        for r in reader {
            match r {
                Ok(r) => ok.push(r),
                Err(e) => return (ok, Some(e)),
            }
        }
        (ok, None)
    }

    #[test]
    fn header_layout() {
        let h = header().encode();
        assert_eq!(h.len(), HEADER_LEN);
        assert_eq!(HEADER_LEN, 31);
        assert_eq!(&h[..4], b"PKLG");
        assert_eq!(&h[4..6], &[1, 0]);
        assert_eq!(h[14], 4);
        // ECG entry: id 1, 125 Hz, enabled.
        assert_eq!(&h[15..19], &[0x01, 125, 0, 0x01]);
        // PPG entry: green mask in bits 1..=3.
        assert_eq!(&h[19..23], &[0x02, 100, 0, 0x03]);
        // audio entry: 8000 = 0x1F40.
        assert_eq!(&h[27..31], &[0x00, 0x40, 0x1F, 0x01]);
    }

    #[test]
    fn empty_session_is_header_only() {
        let bytes = write_to_vec(&[]);
        assert_eq!(bytes.len(), HEADER_LEN);
        let (h, reader) = read_session(&bytes[..]).unwrap();
        assert_eq!(h, header());
        assert_eq!(reader.count(), 0);
    }

    #[test]
    fn imu_record_is_24_bytes() {
        let mut out = Vec::new();
        encode_record(&SensorRecord::imu(5, ImuSample::default()), &mut out).unwrap();
        assert_eq!(out.len(), 1 + 8 + 2 + 12 + 1);
        let mut out = Vec::new();
        encode_record(&SensorRecord::ecg(5, 0, 0), &mut out).unwrap();
        assert_eq!(out.len(), 20);
    }

    #[test]
    fn record_bytes_are_little_endian() {
        let mut out = Vec::new();
        encode_record(&SensorRecord::ecg(0x0102_0304_0506_0708, -1, 2), &mut out).unwrap();
        assert_eq!(out[0], 0x01);
        assert_eq!(&out[1..9], &[8, 7, 6, 5, 4, 3, 2, 1]);
        assert_eq!(&out[9..11], &[8, 0]);
        assert_eq!(&out[11..15], &[0xFF, 0xFF, 0xFF, 0xFF]);
        assert_eq!(&out[15..19], &[2, 0, 0, 0]);
        assert_eq!(out[19], crc8(&out[..19]));
    }

    #[test]
    fn round_trip() {
        let recs = sample_records();
        let (back, err) = read_all(&write_to_vec(&recs));
        assert!(err.is_none());
        assert_eq!(back, recs);
    }

    #[test]
    fn unsorted_input_is_rejected() {
        let recs = vec![SensorRecord::ecg(10, 0, 0), SensorRecord::ecg(5, 0, 0)];
        let err = write_session(&header(), &recs, Vec::new()).unwrap_err();
        assert!(matches!(err, CodecError::UnsortedInput { index: 1 }));
        // same timestamp, descending id
        let recs = vec![SensorRecord::imu(10, ImuSample::default()), SensorRecord::ecg(10, 0, 0)];
        assert!(matches!(write_session(&header(), &recs, Vec::new()), Err(CodecError::UnsortedInput { .. })));
    }

    #[test]
    fn oversized_payload_is_rejected() {
        let r =
            SensorRecord { sensor_id: SensorId::Unknown(0x40), timestamp_us: 0, payload: Payload::Raw(vec![0; 65536]) };
        assert!(matches!(write_session(&header(), [&r], Vec::new()), Err(CodecError::PayloadTooLarge { len: 65536 })));
        let r = SensorRecord { payload: Payload::Raw(vec![7; 65535]), ..r };
        let (back, err) = read_all(&write_to_vec(std::slice::from_ref(&r)));
        assert!(err.is_none());
        assert_eq!(back, vec![r]);
    }

    #[test]
    fn mismatched_payload_is_rejected() {
        let r = SensorRecord { sensor_id: SensorId::Imu, timestamp_us: 0, payload: Payload::Marker { code: 1 } };
        assert!(matches!(encode_record(&r, &mut Vec::new()), Err(CodecError::InvalidRecord(_))));
        let r = SensorRecord::ppg(0, LED_GREEN, vec![1, 2]);
        assert!(matches!(encode_record(&r, &mut Vec::new()), Err(CodecError::InvalidRecord(_))));
        let r = SensorRecord::ecg(0, ECG_COUNTS_MAX + 1, 0);
        assert!(matches!(encode_record(&r, &mut Vec::new()), Err(CodecError::InvalidRecord(_))));
    }

    #[test]
    fn bad_magic_and_version() {
        let mut bytes = write_to_vec(&[]);
        bytes[0] = b'X';
        assert!(matches!(read_session(&bytes[..]), Err(CodecError::BadMagic)));
        let mut bytes = write_to_vec(&[]);
        bytes[4] = 2;
        assert!(matches!(read_session(&bytes[..]), Err(CodecError::UnsupportedVersion(2))));
        assert!(matches!(read_session(&b"PK"[..]), Err(CodecError::BadMagic)));
        assert!(matches!(read_session(&bytes[..20]), Err(CodecError::UnsupportedVersion(2))));
        let good = write_to_vec(&[]);
        assert!(matches!(read_session(&good[..20]), Err(CodecError::TruncatedHeader)));
    }

    #[test]
    fn flipped_payload_byte_reports_that_record() {
        let recs = sample_records();
        let bytes = write_to_vec(&recs);
        let mut offsets = vec![HEADER_LEN as u64];
        for r in &recs {
            let mut v = Vec::new();
            encode_record(r, &mut v).unwrap();
            offsets.push(offsets.last().unwrap() + v.len() as u64);
        }
        // payload byte of the fourth record (IMU)
        let mut bad = bytes.clone();
        bad[offsets[3] as usize + 12] ^= 0x10;
        let (ok, err) = read_all(&bad);
        assert_eq!(ok, recs[..3]);
        assert!(matches!(err, Some(CodecError::CrcMismatch { offset }) if offset == offsets[3]));
    }

    #[test]
    fn truncation_yields_prefix_then_error() {
        let recs = sample_records();
        let bytes = write_to_vec(&recs);
        let cut = bytes.len() - 3;
        let (ok, err) = read_all(&bytes[..cut]);
        assert_eq!(ok, recs[..recs.len() - 1]);
        assert!(matches!(err, Some(CodecError::TruncatedRecord { .. })));
    }

    #[test]
    fn config_block_tolerates_unknown_and_missing_entries() {
        // count 2: unknown id 0x55, then IMU at 200 Hz enabled
        let block = [2u8, 0x55, 1, 0, 1, 0x03, 200, 0, 1];
        let (cfg, used) = decode_config_block(&block).unwrap();
        assert_eq!(used, 9);
        assert!(cfg.imu.enabled && !cfg.ecg.enabled && !cfg.ppg.enabled && !cfg.audio.enabled);
        assert_eq!(cfg.imu.rate_hz, 200);
        // nothing enabled
        assert!(matches!(decode_config_block(&[0]), Err(CodecError::InvalidConfig(ConfigError::NoSensorEnabled))));
    }

    fn arb_record() -> impl Strategy<Value = SensorRecord> {
        let ts = 0u64..1_000_000_000;
        prop_oneof![
            (ts.clone(), ECG_COUNTS_MIN..=ECG_COUNTS_MAX, ECG_COUNTS_MIN..=ECG_COUNTS_MAX)
                .prop_map(|(t, a, b)| SensorRecord::ecg(t, a, b)),
            (ts.clone(), 1u8..8, prop::collection::vec(any::<u32>(), 3))
                .prop_map(|(t, m, c)| { SensorRecord::ppg(t, m, c[..m.count_ones() as usize].to_vec()) }),
            (ts.clone(), any::<[i16; 6]>()).prop_map(|(t, v)| SensorRecord::imu(
                t,
                ImuSample { ax: v[0], ay: v[1], az: v[2], gx: v[3], gy: v[4], gz: v[5] }
            )),
            (ts, any::<u8>()).prop_map(|(t, c)| SensorRecord::marker(t, c)),
        ]
    }

    proptest! {
        #[test]
        fn any_sorted_records_round_trip(mut recs in prop::collection::vec(arb_record(), 0..60)) {
            recs.sort_by_key(|r| r.sort_key());
            let bytes = write_to_vec(&recs);
            let (back, err) = read_all(&bytes);
            prop_assert!(err.is_none());
            prop_assert_eq!(back, recs);
        }

        #[test]
        fn parsing_is_prefix_stable(mut recs in prop::collection::vec(arb_record(), 1..30), cut in 0.0f64..1.0) {
            recs.sort_by_key(|r| r.sort_key());
            let bytes = write_to_vec(&recs);
            let k = HEADER_LEN + ((bytes.len() - HEADER_LEN) as f64 * cut) as usize;
            let (back, _) = read_all(&bytes[..k]);
            prop_assert!(back.len() <= recs.len());
            prop_assert_eq!(&recs[..back.len()], &back[..]);
        }
    }
}
