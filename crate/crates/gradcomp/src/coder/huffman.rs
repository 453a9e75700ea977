//! Canonical Huffman coding over quantization-bin alphabets.
//!
//! Tree construction breaks priority-queue ties by (weight, lowest
//! contained symbol index) so identical PMFs produce bit-identical
//! codebooks everywhere. Codewords are then reassigned canonically in
//! (length, symbol) order, which makes the code reconstructible from its
//! length table alone — that is what lets a decoder rebuild the code from
//! refitted model parameters or from the embedded table of an
//! empirically-coded blob.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};
use crate::quantizer::SymbolStream;

use super::bits::{BitReader, BitWriter};
use super::blob::{BitBlob, BlobHeader, CodecTag};
use super::{BinPmf, SourceModel};

/// Longest admissible codeword. The PMF floor bounds real depths well
/// below this; the cap just keeps codewords in one machine word.
const MAX_CODE_LEN: u8 = 63;

/// A canonical prefix code over the bin alphabet.
#[derive(Debug, Clone, PartialEq)]
pub struct Codebook {
    lengths: Vec<u8>,
    codewords: Vec<u64>,
    source: SourceModel,
    max_len: u8,
    // Canonical decode tables, indexed by codeword length.
    first_code: Vec<u64>,
    first_rank: Vec<usize>,
    counts: Vec<usize>,
    canonical_symbols: Vec<u16>,
}

impl Codebook {
    pub fn alphabet_size(&self) -> usize {
        self.lengths.len()
    }

    /// Codeword length in bits for `symbol`; 0 means the symbol has no
    /// codeword.
    pub fn length_of(&self, symbol: usize) -> u8 {
        self.lengths[symbol]
    }

    pub fn lengths(&self) -> &[u8] {
        &self.lengths
    }

    /// The canonical codeword for `symbol` as (value, bit length).
    pub fn codeword_of(&self, symbol: usize) -> Option<(u64, u8)> {
        match self.lengths[symbol] {
            0 => None,
            l => Some((self.codewords[symbol], l)),
        }
    }

    pub fn source(&self) -> SourceModel {
        self.source
    }

    /// Rebuild a codebook from its length table (the canonical property:
    /// lengths alone determine the code). Rejects tables that violate the
    /// Kraft inequality or the length cap.
    pub fn from_lengths(lengths: &[u8], source: SourceModel) -> Result<Self> {
        if lengths.is_empty() || lengths.len() > u16::MAX as usize + 1 {
            return Err(Error::Coding(format!(
                "alphabet size {} out of range",
                lengths.len()
            )));
        }
        let max_len = *lengths.iter().max().unwrap();
        if max_len == 0 {
            return Err(Error::corruption("length table assigns no codewords".to_string()));
        }
        if max_len > MAX_CODE_LEN {
            return Err(Error::corruption(format!(
                "codeword length {max_len} exceeds the cap of {MAX_CODE_LEN}"
            )));
        }
        // Kraft sum in units of 2^-MAX_CODE_LEN, exactly.
        let kraft: u128 = lengths
            .iter()
            .filter(|&&l| l > 0)
            .map(|&l| 1u128 << (MAX_CODE_LEN - l))
            .sum();
        if kraft > 1u128 << MAX_CODE_LEN {
            return Err(Error::corruption(
                "length table violates the Kraft inequality".to_string(),
            ));
        }

        let mut canonical_symbols: Vec<u16> = (0..lengths.len() as u16)
            .filter(|&s| lengths[s as usize] > 0)
            .collect();
        canonical_symbols.sort_by_key(|&s| (lengths[s as usize], s));

        let mut codewords = vec![0u64; lengths.len()];
        let mut first_code = vec![0u64; max_len as usize + 1];
        let mut first_rank = vec![0usize; max_len as usize + 1];
        let mut counts = vec![0usize; max_len as usize + 1];
        let mut code = 0u64;
        let mut prev_len = 0u8;
        for (rank, &sym) in canonical_symbols.iter().enumerate() {
            let len = lengths[sym as usize];
            if rank > 0 {
                code = (code + 1) << (len - prev_len);
            }
            if counts[len as usize] == 0 {
                first_code[len as usize] = code;
                first_rank[len as usize] = rank;
            }
            counts[len as usize] += 1;
            codewords[sym as usize] = code;
            prev_len = len;
        }

        Ok(Self {
            lengths: lengths.to_vec(),
            codewords,
            source,
            max_len,
            first_code,
            first_rank,
            counts,
            canonical_symbols,
        })
    }
}

#[derive(Debug)]
enum Node {
    Leaf(u16),
    Internal(u32, u32),
}

struct HeapEntry {
    weight: f64,
    min_symbol: u16,
    node: u32,
}

impl PartialEq for HeapEntry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for HeapEntry {}

impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        // Reversed so the max-heap pops the lightest entry; ties fall to
        // the lowest contained symbol index.
        other
            .weight
            .total_cmp(&self.weight)
            .then_with(|| other.min_symbol.cmp(&self.min_symbol))
            .then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Build the optimal prefix code for `pmf`, canonicalized.
///
/// Symbols with zero probability receive no codeword. A single-symbol
/// alphabet gets a 1-bit codeword (bit-addressable storage cannot spend
/// zero bits).
pub fn build_huffman(pmf: &BinPmf) -> Result<Codebook> {
    let probs = pmf.probabilities();
    if probs.is_empty() || probs.len() > u16::MAX as usize + 1 {
        return Err(Error::Coding(format!("alphabet size {} out of range", probs.len())));
    }
    if let Some(bad) = probs.iter().position(|p| !(0.0..=1.0 + 1e-9).contains(p)) {
        return Err(Error::Coding(format!(
            "probability {} at bin {bad} is not in [0, 1]",
            probs[bad]
        )));
    }

    let active: Vec<u16> = (0..probs.len() as u16)
        .filter(|&i| probs[i as usize] > 0.0)
        .collect();
    let mut lengths = vec![0u8; probs.len()];
    match active.len() {
        0 => return Err(Error::Coding("no symbol has positive probability".into())),
        1 => lengths[active[0] as usize] = 1,
        _ => {
            let mut nodes: Vec<Node> = Vec::with_capacity(2 * active.len());
            let mut heap = BinaryHeap::with_capacity(active.len());
            for &sym in &active {
                nodes.push(Node::Leaf(sym));
                heap.push(HeapEntry {
                    weight: probs[sym as usize],
                    min_symbol: sym,
                    node: (nodes.len() - 1) as u32,
                });
            }
            while heap.len() > 1 {
                let a = heap.pop().unwrap();
                let b = heap.pop().unwrap();
                nodes.push(Node::Internal(a.node, b.node));
                heap.push(HeapEntry {
                    weight: a.weight + b.weight,
                    min_symbol: a.min_symbol.min(b.min_symbol),
                    node: (nodes.len() - 1) as u32,
                });
            }
            let root = heap.pop().unwrap().node;
            let mut stack = vec![(root, 0u8)];
            while let Some((idx, depth)) = stack.pop() {
                match nodes[idx as usize] {
                    Node::Leaf(sym) => {
                        if depth > MAX_CODE_LEN {
                            return Err(Error::Coding(format!(
                                "codeword length {depth} exceeds the cap of {MAX_CODE_LEN}"
                            )));
                        }
                        lengths[sym as usize] = depth;
                    }
                    Node::Internal(l, r) => {
                        stack.push((l, depth + 1));
                        stack.push((r, depth + 1));
                    }
                }
            }
        }
    }
    Codebook::from_lengths(&lengths, pmf.source())
}

/// Concatenate the codewords of a stream into a blob. Empirically-modelled
/// codebooks prepend their length table so the blob stays standalone-
/// decodable.
pub fn encode(stream: &SymbolStream, codebook: &Codebook) -> Result<BitBlob> {
    let expected = stream.grid_id.bin_count();
    if codebook.alphabet_size() != expected {
        return Err(Error::Coding(format!(
            "codebook alphabet {} does not match the grid's {expected} bins",
            codebook.alphabet_size()
        )));
    }
    let mut writer = BitWriter::new();
    if codebook.source() == SourceModel::Empirical {
        for &l in codebook.lengths() {
            writer.push_aligned_byte(l);
        }
    }
    for (pos, &sym) in stream.indices.iter().enumerate() {
        let sym = sym as usize;
        if sym >= codebook.alphabet_size() {
            return Err(Error::Coding(format!(
                "symbol {sym} at position {pos} is outside the alphabet"
            )));
        }
        match codebook.codeword_of(sym) {
            Some((code, len)) => writer.push_bits(code, len as u32),
            None => {
                return Err(Error::Coding(format!(
                    "symbol {sym} at position {pos} has no codeword"
                )))
            }
        }
    }
    let header = BlobHeader::new(codebook.source(), false, stream.grid_id, stream.len() as u64);
    let (payload, bit_len) = writer.finish();
    Ok(BitBlob::from_parts(header, payload, bit_len))
}

/// Invert [`encode`]: recover exactly `symbol_count` symbols and insist the
/// payload is consumed to the last bit.
pub fn decode(blob: &BitBlob, codebook: &Codebook) -> Result<SymbolStream> {
    match blob.header.codec {
        CodecTag::Lz78 => {
            return Err(Error::Coding("blob is LZ78-coded; use lz78_decode".into()))
        }
        CodecTag::HuffmanEmpirical | CodecTag::HuffmanGenNorm | CodecTag::HuffmanNorm => {}
    }
    let mut reader = BitReader::new(blob.payload(), blob.bit_length());
    if blob.header.codec == CodecTag::HuffmanEmpirical {
        for (i, &expected) in codebook.lengths().iter().enumerate() {
            match reader.read_aligned_byte() {
                Some(b) if b == expected => {}
                Some(b) => {
                    return Err(Error::corruption_at(
                        i as u64,
                        format!("embedded length table disagrees with codebook ({b} vs {expected})"),
                    ))
                }
                None => {
                    return Err(Error::corruption_at(
                        reader.position(),
                        "payload ends inside the length table".to_string(),
                    ))
                }
            }
        }
    }

    let mut indices = Vec::with_capacity(blob.header.symbol_count as usize);
    for _ in 0..blob.header.symbol_count {
        let mut code = 0u64;
        let mut len = 0u8;
        let symbol = loop {
            let bit = reader.read_bit().ok_or_else(|| {
                Error::corruption_at(reader.position(), "payload truncated mid-codeword".to_string())
            })?;
            code = code << 1 | bit as u64;
            len += 1;
            if len > codebook.max_len {
                return Err(Error::corruption_at(
                    reader.position(),
                    "bit pattern matches no codeword".to_string(),
                ));
            }
            let l = len as usize;
            if codebook.counts[l] > 0 && code >= codebook.first_code[l] {
                let rank = (code - codebook.first_code[l]) as usize;
                if rank < codebook.counts[l] {
                    break codebook.canonical_symbols[codebook.first_rank[l] + rank];
                }
            }
        };
        indices.push(symbol);
    }
    if reader.position() != blob.bit_length() {
        return Err(Error::corruption_at(
            reader.position(),
            format!(
                "decoded {} symbols but {} payload bits remain",
                indices.len(),
                reader.remaining()
            ),
        ));
    }
    Ok(SymbolStream {
        indices,
        grid_id: blob.header.grid,
        original_length: blob.header.symbol_count as usize,
    })
}
