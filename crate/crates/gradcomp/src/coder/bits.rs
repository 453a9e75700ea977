//! Bit-level packing shared by the entropy coders.
//!
//! Stream bit `k` lives in byte `k / 8` at position `k % 8` (little-endian
//! bit order within bytes, per the blob wire format). Multi-bit fields are
//! emitted most-significant bit first.

/// Append-only bit sink.
#[derive(Debug, Default, Clone)]
pub struct BitWriter {
    bytes: Vec<u8>,
    bit_len: u64,
}

impl BitWriter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push_bit(&mut self, bit: bool) {
        let byte = (self.bit_len / 8) as usize;
        if byte == self.bytes.len() {
            self.bytes.push(0);
        }
        if bit {
            self.bytes[byte] |= 1 << (self.bit_len % 8);
        }
        self.bit_len += 1;
    }

    /// Write the low `width` bits of `value`, most significant first.
    pub fn push_bits(&mut self, value: u64, width: u32) {
        debug_assert!(width <= 64);
        for i in (0..width).rev() {
            self.push_bit((value >> i) & 1 == 1);
        }
    }

    /// Write a whole byte verbatim; only valid while the stream is
    /// byte-aligned (used for tables at the head of a payload).
    pub fn push_aligned_byte(&mut self, byte: u8) {
        debug_assert_eq!(self.bit_len % 8, 0, "stream must be byte-aligned");
        self.bytes.push(byte);
        self.bit_len += 8;
    }

    pub fn finish(self) -> (Vec<u8>, u64) {
        (self.bytes, self.bit_len)
    }
}

/// Sequential bit source over a packed payload.
#[derive(Debug, Clone)]
pub struct BitReader<'a> {
    bytes: &'a [u8],
    pos: u64,
    bit_len: u64,
}

impl<'a> BitReader<'a> {
    pub fn new(bytes: &'a [u8], bit_len: u64) -> Self {
        debug_assert!(bit_len <= bytes.len() as u64 * 8);
        Self { bytes, pos: 0, bit_len }
    }

    /// Bits consumed so far.
    pub fn position(&self) -> u64 {
        self.pos
    }

    pub fn remaining(&self) -> u64 {
        self.bit_len - self.pos
    }

    pub fn read_bit(&mut self) -> Option<bool> {
        if self.pos >= self.bit_len {
            return None;
        }
        let byte = self.bytes[(self.pos / 8) as usize];
        let bit = byte >> (self.pos % 8) & 1 == 1;
        self.pos += 1;
        Some(bit)
    }

    /// Read `width` bits, most significant first; `None` if the stream is
    /// exhausted mid-field.
    pub fn read_bits(&mut self, width: u32) -> Option<u64> {
        if self.remaining() < width as u64 {
            return None;
        }
        let mut value = 0u64;
        for _ in 0..width {
            value = value << 1 | self.read_bit()? as u64;
        }
        Some(value)
    }

    /// Read a byte-aligned byte (table reads at the head of a payload).
    pub fn read_aligned_byte(&mut self) -> Option<u8> {
        debug_assert_eq!(self.pos % 8, 0, "stream must be byte-aligned");
        if self.remaining() < 8 {
            return None;
        }
        let byte = self.bytes[(self.pos / 8) as usize];
        self.pos += 8;
        Some(byte)
    }
}
