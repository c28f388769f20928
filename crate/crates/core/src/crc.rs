//! CRC-8, polynomial 0x07, init 0x00, no reflection, no final xor
//! (the SMBus/ATM HEC flavour without the xor-out).

const fn make_table() -> [u8; 256] {
    let mut table = [0u8; 256];
    let mut i = 0;
    while i < 256 {
        let mut crc = i as u8;
        let mut bit = 0;
        while bit < 8 {
            crc = if crc & 0x80 != 0 { (crc << 1) ^ 0x07 } else { crc << 1 };
            bit += 1;
        }
        table[i] = crc;
        i += 1;
    }
    table
}

static TABLE: [u8; 256] = make_table();

#[derive(Debug, Clone, Copy, Default)]
pub struct Crc8(u8);

impl Crc8 {
    pub fn new() -> Self {
        Crc8(0)
    }

    pub fn update(&mut self, bytes: &[u8]) {
        for &b in bytes {
            self.0 = TABLE[(self.0 ^ b) as usize];
        }
    }

    pub fn value(&self) -> u8 {
        self.0
    }
}

pub fn crc8(bytes: &[u8]) -> u8 {
    let mut c = Crc8::new();
    c.update(bytes);
    c.value()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bitwise(bytes: &[u8]) -> u8 {
        let mut crc = 0u8;
        for &b in bytes {
            crc ^= b;
            for _ in 0..8 {
                crc = if crc & 0x80 != 0 { (crc << 1) ^ 0x07 } else { crc << 1 };
            }
        }
        crc
    }

    #[test]
    fn check_value() {
        // Catalogue check value for CRC-8 (poly 0x07, init 0).
        assert_eq!(crc8(b"123456789"), 0xF4);
        assert_eq!(crc8(&[]), 0x00);
    }

    #[test]
    fn table_matches_bitwise() {
        let data: Vec<u8> = (0..=255u8).chain((0..=255u8).rev()).collect();
        assert_eq!(crc8(&data), bitwise(&data));
    }

    #[test]
    fn every_single_byte_change_is_detected() {
        let data = b"The patch logs a record";
        let good = crc8(data);
        for pos in 0..data.len() {
            for flip in 1..=255u8 {
                let mut d = data.to_vec();
                d[pos] ^= flip;
                assert_ne!(crc8(&d), good, "pos {pos} flip {flip:#x}");
            }
        }
    }
}
