use thiserror::Error;

use crate::crc::crc8;

pub const SYNC: [u8; 2] = [0xA5, 0x5A];
/// Largest payload in one frame, after BLE 4.2 data length extension
/// (251-byte PDU less L2CAP and ATT headers).
pub const MAX_PAYLOAD: usize = 244;
/// sync + type + seq + len + crc
pub const FRAME_OVERHEAD: usize = 2 + 1 + 2 + 1 + 1;
const HEADER_LEN: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PacketType {
    Cmd,
    Ack,
    Notify,
    Err,
    Unknown(u8),
}

impl PacketType {
    pub fn from_u8(v: u8) -> Self {
        match v {
            0x01 => PacketType::Cmd,
            0x02 => PacketType::Ack,
            0x03 => PacketType::Notify,
            0x04 => PacketType::Err,
            other => PacketType::Unknown(other),
        }
    }

    pub fn as_u8(self) -> u8 {
        match self {
            PacketType::Cmd => 0x01,
            PacketType::Ack => 0x02,
            PacketType::Notify => 0x03,
            PacketType::Err => 0x04,
            PacketType::Unknown(v) => v,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Packet {
    pub kind: PacketType,
    pub seq: u16,
    pub payload: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("payload of {0} bytes exceeds the {MAX_PAYLOAD}-byte frame limit")]
pub struct PayloadTooLarge(pub usize);

impl Packet {
    pub fn new(kind: PacketType, seq: u16, payload: Vec<u8>) -> Self {
        Packet { kind, seq, payload }
    }

    pub fn frame(&self) -> Result<Vec<u8>, PayloadTooLarge> {
        frame(self.kind, self.seq, &self.payload)
    }
}

pub fn frame(kind: PacketType, seq: u16, payload: &[u8]) -> Result<Vec<u8>, PayloadTooLarge> {
    if payload.len() > MAX_PAYLOAD {
        return Err(PayloadTooLarge(payload.len()));
    }
    let mut out = Vec::with_capacity(FRAME_OVERHEAD + payload.len());
    out.extend_from_slice(&SYNC);
    out.push(kind.as_u8());
    out.extend_from_slice(&seq.to_le_bytes());
    out.push(payload.len() as u8);
    out.extend_from_slice(payload);
    out.push(crc8(&out[2..]));
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DeframeItem {
    Packet(Packet),
    /// A sync word was found but what followed did not check out. The
    /// deframer skips one byte and hunts for the next sync word.
    CrcError,
}

/// Incremental frame parser. Feed bytes with [`push`](Deframer::push) and
/// drain items with [`next_item`](Deframer::next_item); call
/// [`finish`](Deframer::finish) at end of stream to flush a trailing partial
/// frame.
#[derive(Debug, Default)]
pub struct Deframer {
    buf: Vec<u8>,
    pos: usize,
    eof: bool,
}

impl Deframer {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, bytes: &[u8]) {
        if self.pos > 4096 && self.pos * 2 > self.buf.len() {
            self.buf.drain(..self.pos);
            self.pos = 0;
        }
        self.buf.extend_from_slice(bytes);
    }

    /// Marks end of input. A partial frame left in the buffer becomes a
    /// `CrcError` and the bytes after its sync word are searched again.
    pub fn finish(&mut self) {
        self.eof = true;
    }

    /// Bytes received but not yet consumed.
    pub fn pending(&self) -> usize {
        self.buf.len() - self.pos
    }

    pub fn next_item(&mut self) -> Option<DeframeItem> {
        let rest = &self.buf[self.pos..];
        let Some(at) = rest.windows(2).position(|w| w == SYNC) else {
            // keep a trailing first sync byte, drop the rest
            let keep = usize::from(rest.last() == Some(&SYNC[0]) && !self.eof);
            self.pos = self.buf.len() - keep;
            return None;
        };
        self.pos += at;
        let rest = &self.buf[self.pos..];
        if rest.len() < HEADER_LEN {
            return self.incomplete();
        }
        let len = rest[5] as usize;
        if len > MAX_PAYLOAD {
            self.pos += 1;
            return Some(DeframeItem::CrcError);
        }
        let total = HEADER_LEN + len + 1;
        if rest.len() < total {
            return self.incomplete();
        }
        if crc8(&rest[2..total - 1]) != rest[total - 1] {
            self.pos += 1;
            return Some(DeframeItem::CrcError);
        }
        let packet = Packet {
            kind: PacketType::from_u8(rest[2]),
            seq: u16::from_le_bytes([rest[3], rest[4]]),
            payload: rest[HEADER_LEN..total - 1].to_vec(),
        };
        self.pos += total;
        Some(DeframeItem::Packet(packet))
    }

    fn incomplete(&mut self) -> Option<DeframeItem> {
        if self.eof {
            self.pos += 1;
            Some(DeframeItem::CrcError)
        } else {
            None
        }
    }
}

impl Iterator for Deframer {
    type Item = DeframeItem;

    fn next(&mut self) -> Option<DeframeItem> {
        self.next_item()
    }
}

/// Deframes a complete byte string.
pub fn deframe(bytes: &[u8]) -> Vec<DeframeItem> {
    let mut d = Deframer::new();
    d.push(bytes);
    d.finish();
    d.collect()
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;

    fn packets(items: &[DeframeItem]) -> Vec<&Packet> {
        items
            .iter()
            .filter_map(|i| match i {
                DeframeItem::Packet(p) => Some(p),
                DeframeItem::CrcError => None,
            })
            .collect()
    }

    #[test]
    fn empty_notify_is_seven_bytes() {
        let f = frame(PacketType::Notify, 9, &[]).unwrap();
        assert_eq!(f.len(), 7);
        assert_eq!(&f[..6], &[0xA5, 0x5A, 0x03, 9, 0, 0]);
    }

    #[test]
    fn payload_bound() {
        assert!(frame(PacketType::Notify, 0, &[0; 244]).is_ok());
        assert_eq!(frame(PacketType::Notify, 0, &[0; 245]), Err(PayloadTooLarge(245)));
    }

    #[test]
    fn garbage_then_frame() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let p = Packet::new(PacketType::Ack, 77, vec![1, 2, 3]);
        for _ in 0..200 {
            let mut bytes: Vec<u8> = (0..rng.random_range(0..300)).map(|_| rng.random()).collect();
            bytes.extend(p.frame().unwrap());
            let items = deframe(&bytes);
            assert_eq!(packets(&items).last(), Some(&&p));
        }
    }

    #[test]
    fn corruption_between_good_frames() {
        let p = Packet::new(PacketType::Notify, 1, (0..40).collect());
        let good = p.frame().unwrap();
        let mut bad = good.clone();
        bad[20] ^= 0x10;
        let mut bytes = bad;
        bytes.extend(&good);
        let items = deframe(&bytes);
        assert_eq!(items, vec![DeframeItem::CrcError, DeframeItem::Packet(p)]);
    }

    #[test]
    fn byte_at_a_time_matches_bulk() {
        let frames: Vec<u8> =
            (0..20u16).flat_map(|i| frame(PacketType::Notify, i, &vec![i as u8; i as usize * 7]).unwrap()).collect();
        let mut d = Deframer::new();
        let mut got = Vec::new();
        for b in &frames {
            d.push(std::slice::from_ref(b));
            got.extend(d.by_ref());
        }
        d.finish();
        got.extend(d);
        assert_eq!(got, deframe(&frames));
        assert_eq!(packets(&got).len(), 20);
    }

    #[test]
    fn truncated_tail_is_reported_at_eof() {
        let f = frame(PacketType::Notify, 0, &[5; 10]).unwrap();
        let items = deframe(&f[..f.len() - 3]);
        assert_eq!(items, vec![DeframeItem::CrcError]);
    }

    proptest! {
        #[test]
        fn frame_round_trip(kind in 1u8..=4, seq: u16, payload in proptest::collection::vec(any::<u8>(), 0..=244)) {
            let p = Packet::new(PacketType::from_u8(kind), seq, payload);
            prop_assert_eq!(deframe(&p.frame().unwrap()), vec![DeframeItem::Packet(p)]);
        }

        #[test]
        fn arbitrary_bytes_never_panic(bytes in proptest::collection::vec(any::<u8>(), 0..2000)) {
            for item in deframe(&bytes) {
                if let DeframeItem::Packet(p) = item {
                    prop_assert!(p.payload.len() <= MAX_PAYLOAD);
                }
            }
        }
    }
}
