//! MSB-first bit packing used by the wire codecs.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};

#[derive(Debug, Default, Clone)]
pub struct BitWriter {
    bytes: Vec<u8>,
    len: usize,
}

impl BitWriter {
    pub fn with_capacity(bits: usize) -> Self {
        BitWriter {
            bytes: Vec::with_capacity(bits.div_ceil(8)),
            len: 0,
        }
    }

    /// Appends the low `nbits` bits of `value`, most significant first.
    pub fn write(&mut self, value: u64, nbits: u32) {
        debug_assert!(nbits <= 64);
        debug_assert!(nbits == 64 || value >> nbits == 0);
        let mut left = nbits;
        while left > 0 {
            let used = (self.len % 8) as u32;
            if used == 0 {
                self.bytes.push(0);
            }
            let take = left.min(8 - used);
            let chunk = ((value >> (left - take)) & ((1u64 << take) - 1)) as u8;
            let last = self.bytes.len() - 1;
            self.bytes[last] |= chunk << (8 - used - take);
            self.len += take as usize;
            left -= take;
        }
    }

    pub fn bit_len(&self) -> usize {
        self.len
    }

    pub fn finish(self) -> (Vec<u8>, usize) {
        (self.bytes, self.len)
    }
}

#[derive(Debug, Clone)]
pub struct BitReader<'a> {
    bytes: &'a [u8],
    len: usize,
    pos: usize,
}

impl<'a> BitReader<'a> {
    pub fn new(bytes: &'a [u8], len: usize) -> Result<Self> {
        if bytes.len() != len.div_ceil(8) {
            return Err(Error::Malformed(format!(
                "{} payload bytes cannot hold exactly {} bits",
                bytes.len(),
                len
            )));
        }
        Ok(BitReader { bytes, len, pos: 0 })
    }

    pub fn read(&mut self, nbits: u32) -> Result<u64> {
        if self.pos + nbits as usize > self.len {
            return Err(Error::Malformed(format!(
                "read of {nbits} bits past end ({} of {})",
                self.pos, self.len
            )));
        }
        let mut out = 0u64;
        let mut left = nbits;
        while left > 0 {
            let used = (self.pos % 8) as u32;
            let take = left.min(8 - used);
            let byte = self.bytes[self.pos / 8];
            let chunk = (byte >> (8 - used - take)) & (((1u16 << take) - 1) as u8);
            out = (out << take) | u64::from(chunk);
            self.pos += take as usize;
            left -= take;
        }
        Ok(out)
    }

    pub fn remaining(&self) -> usize {
        self.len - self.pos
    }
}

/// Smallest `b` with `2^b >= n` (`0` for `n <= 1`).
pub fn ceil_log2(n: u64) -> u32 {
    if n <= 1 {
        0
    } else {
        64 - (n - 1).leading_zeros()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ceil_log2_values() {
        assert_eq!(ceil_log2(1), 0);
        assert_eq!(ceil_log2(2), 1);
        assert_eq!(ceil_log2(3), 2);
        assert_eq!(ceil_log2(8), 3);
        assert_eq!(ceil_log2(9), 4);
        assert_eq!(ceil_log2(500), 9);
    }

    #[test]
    fn write_then_read() {
        let mut w = BitWriter::default();
        w.write(0b101, 3);
        w.write(0xdead_beef, 32);
        w.write(1, 1);
        w.write(u64::MAX, 64);
        let (bytes, len) = w.finish();
        assert_eq!(len, 100);
        assert_eq!(bytes.len(), 13);
        assert_eq!(bytes[0] >> 5, 0b101);
        let mut r = BitReader::new(&bytes, len).unwrap();
        assert_eq!(r.read(3).unwrap(), 0b101);
        assert_eq!(r.read(32).unwrap(), 0xdead_beef);
        assert_eq!(r.read(1).unwrap(), 1);
        assert_eq!(r.read(64).unwrap(), u64::MAX);
        assert_eq!(r.remaining(), 0);
        assert!(r.read(1).is_err());
    }

    #[test]
    fn length_mismatch_is_malformed() {
        assert!(BitReader::new(&[0, 0], 3).is_err());
    }
}
