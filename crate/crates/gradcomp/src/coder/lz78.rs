//! LZ78 dictionary coding of symbol streams.
//!
//! Each phrase is emitted as (dictionary index, next symbol). The index
//! width grows with the dictionary — `ceil(log2(dict size + 1))` bits at
//! the time of emission — and the symbol width is fixed at
//! `ceil(log2(alphabet))` bits. The payload starts with an 8-byte
//! little-endian phrase count; the decoder rebuilds the dictionary
//! identically as it reads. Only the final phrase may omit its symbol
//! (when the input ends exactly on a known phrase), which the decoder
//! detects from the header's symbol count.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::quantizer::SymbolStream;

use super::bits::{BitReader, BitWriter};
use super::blob::{BitBlob, BlobHeader};
use super::SourceModel;

/// One parsed phrase: longest known prefix plus the symbol that extended it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct Token {
    pub index: u32,
    pub symbol: Option<u16>,
}

/// Bits needed to distinguish `values` possibilities (0 for a single one).
fn bits_for(values: u64) -> u32 {
    if values <= 1 {
        0
    } else {
        64 - (values - 1).leading_zeros()
    }
}

/// Greedy LZ78 parse of the stream into tokens.
pub(crate) fn parse(indices: &[u16]) -> Vec<Token> {
    let mut dict: HashMap<(u32, u16), u32> = HashMap::new();
    let mut tokens = Vec::new();
    let mut current = 0u32; // 0 = empty root phrase
    for &sym in indices {
        match dict.get(&(current, sym)) {
            Some(&next) => current = next,
            None => {
                tokens.push(Token { index: current, symbol: Some(sym) });
                dict.insert((current, sym), tokens.len() as u32);
                current = 0;
            }
        }
    }
    if current != 0 {
        tokens.push(Token { index: current, symbol: None });
    }
    tokens
}

/// Compress a stream with LZ78.
pub fn lz78_encode(stream: &SymbolStream) -> Result<BitBlob> {
    let alphabet = stream.grid_id.bin_count() as u64;
    let symbol_width = bits_for(alphabet);
    if let Some(pos) = stream.indices.iter().position(|&s| s as u64 >= alphabet) {
        return Err(Error::Coding(format!(
            "symbol {} at position {pos} is outside the alphabet",
            stream.indices[pos]
        )));
    }

    let tokens = parse(&stream.indices);
    let mut writer = BitWriter::new();
    for byte in (tokens.len() as u64).to_le_bytes() {
        writer.push_aligned_byte(byte);
    }
    for (k, token) in tokens.iter().enumerate() {
        writer.push_bits(token.index as u64, bits_for(k as u64 + 1));
        if let Some(sym) = token.symbol {
            writer.push_bits(sym as u64, symbol_width);
        }
    }
    let header = BlobHeader::new(SourceModel::Empirical, true, stream.grid_id, stream.len() as u64);
    let (payload, bit_len) = writer.finish();
    Ok(BitBlob::from_parts(header, payload, bit_len))
}

/// Invert [`lz78_encode`], replaying the dictionary phrase by phrase.
pub fn lz78_decode(blob: &BitBlob) -> Result<SymbolStream> {
    if blob.header.codec != super::CodecTag::Lz78 {
        return Err(Error::Coding("blob is not LZ78-coded".into()));
    }
    let alphabet = blob.header.grid.bin_count() as u64;
    let symbol_width = bits_for(alphabet);
    let target = blob.header.symbol_count as usize;

    let mut reader = BitReader::new(blob.payload(), blob.bit_length());
    let mut count_bytes = [0u8; 8];
    for b in &mut count_bytes {
        *b = reader.read_aligned_byte().ok_or_else(|| {
            Error::corruption_at(reader.position(), "payload too short for phrase count".to_string())
        })?;
    }
    let phrase_count = u64::from_le_bytes(count_bytes);

    // Dictionary entry: (parent phrase, extending symbol, total length).
    let mut dict: Vec<(u32, u16, u64)> = vec![(0, 0, 0)];
    let mut out: Vec<u16> = Vec::with_capacity(target);
    let mut scratch: Vec<u16> = Vec::new();
    for k in 0..phrase_count {
        let index = reader.read_bits(bits_for(k + 1)).ok_or_else(|| {
            Error::corruption_at(reader.position(), "payload truncated mid-token".to_string())
        })? as u32;
        if index as u64 > k {
            return Err(Error::corruption_at(
                reader.position(),
                format!("token references phrase {index} before it exists"),
            ));
        }
        let (_, _, phrase_len) = dict[index as usize];
        let is_last = k + 1 == phrase_count;
        let bare = is_last && out.len() as u64 + phrase_len == blob.header.symbol_count;
        let symbol = if bare {
            None
        } else {
            let sym = reader.read_bits(symbol_width).ok_or_else(|| {
                Error::corruption_at(reader.position(), "payload truncated mid-symbol".to_string())
            })?;
            if sym >= alphabet {
                return Err(Error::corruption_at(
                    reader.position(),
                    format!("decoded symbol {sym} outside the alphabet"),
                ));
            }
            Some(sym as u16)
        };

        scratch.clear();
        let mut walk = index;
        while walk != 0 {
            let (parent, sym, _) = dict[walk as usize];
            scratch.push(sym);
            walk = parent;
        }
        out.extend(scratch.iter().rev());
        if let Some(sym) = symbol {
            out.push(sym);
            dict.push((index, sym, phrase_len + 1));
        }
        if out.len() > target {
            return Err(Error::corruption_at(
                reader.position(),
                format!("decoded {} symbols, header declares {target}", out.len()),
            ));
        }
    }
    if out.len() != target {
        return Err(Error::corruption(format!(
            "decoded {} symbols, header declares {target}",
            out.len()
        )));
    }
    if reader.position() != blob.bit_length() {
        return Err(Error::corruption_at(
            reader.position(),
            format!("{} unread payload bits after the last phrase", reader.remaining()),
        ));
    }
    Ok(SymbolStream {
        indices: out,
        grid_id: blob.header.grid,
        original_length: target,
    })
}
