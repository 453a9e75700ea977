//! Lossless coding of quantized symbol streams.
//!
//! Canonical Huffman coding driven by a per-bin PMF — either induced from
//! a fitted distribution's CDF across the bin edges, or empirical — plus
//! an LZ78 baseline, and the self-describing compressed-blob wire format
//! that carries either coder's output.

mod bits;
mod blob;
mod huffman;
mod lz78;

pub use blob::{decode_blob, parse_blob_stream, BitBlob, BlobHeader, CodecTag};
pub use huffman::{build_huffman, decode, encode, Codebook};
pub use lz78::{lz78_decode, lz78_encode};

use crate::error::{Error, Result};
use crate::gennorm::GenNormParams;
use crate::quantizer::{QuantGrid, SymbolStream};

/// Every bin keeps at least this much probability before renormalization,
/// so any symbol stays encodable even when the model puts negligible mass
/// on its bin. Costs under 1e-7 bits/symbol.
pub const PMF_FLOOR: f64 = 2.3283064365386963e-10; // 2^-32

/// Which distribution family produced a model PMF.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelClass {
    GenNorm,
    Norm,
}

/// Provenance of a PMF: fitted model (with parameters) or relative
/// frequencies.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SourceModel {
    Empirical,
    GenNorm(GenNormParams),
    Norm(GenNormParams),
}

/// Probability mass over quantization bins, floored and normalized.
#[derive(Debug, Clone, PartialEq)]
pub struct BinPmf {
    probs: Vec<f64>,
    source: SourceModel,
}

impl BinPmf {
    /// Wrap an explicit probability vector (tagged empirical), used as
    /// given: no flooring or renormalization, so exact dyadic masses stay
    /// exact. [`build_huffman`] still validates the entries.
    pub fn from_probabilities(probs: Vec<f64>) -> Self {
        Self { probs, source: SourceModel::Empirical }
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probs
    }

    pub fn source(&self) -> SourceModel {
        self.source
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    /// Shannon entropy in bits per symbol.
    pub fn entropy_bits(&self) -> f64 {
        -self
            .probs
            .iter()
            .filter(|&&p| p > 0.0)
            .map(|&p| p * p.log2())
            .sum::<f64>()
    }
}

fn floor_and_normalize(mut probs: Vec<f64>) -> Vec<f64> {
    for p in &mut probs {
        if *p < PMF_FLOOR {
            *p = PMF_FLOOR;
        }
    }
    let total: f64 = probs.iter().sum();
    for p in &mut probs {
        *p /= total;
    }
    probs
}

/// Bin probabilities from a fitted model: CDF difference across each bin's
/// edges, with the tail mass outside the grid folded into the extreme bins.
pub fn pmf_from_model(params: &GenNormParams, grid: &QuantGrid, class: ModelClass) -> Result<BinPmf> {
    let edges = grid.edges();
    let n_bins = grid.bin_count();
    let cdf: Vec<f64> = edges.iter().map(|&e| params.cdf(e)).collect();
    let mut probs = Vec::with_capacity(n_bins);
    for i in 0..n_bins {
        let lo = if i == 0 { 0.0 } else { cdf[i] };
        let hi = if i == n_bins - 1 { 1.0 } else { cdf[i + 1] };
        probs.push((hi - lo).max(0.0));
    }
    let source = match class {
        ModelClass::GenNorm => SourceModel::GenNorm(*params),
        ModelClass::Norm => SourceModel::Norm(*params),
    };
    Ok(BinPmf { probs: floor_and_normalize(probs), source })
}

/// Relative bin frequencies of a stream, floored and normalized like the
/// model PMFs.
pub fn pmf_empirical(stream: &SymbolStream, grid: &QuantGrid) -> Result<BinPmf> {
    if stream.is_empty() {
        return Err(Error::Input("cannot build an empirical PMF from an empty stream".into()));
    }
    let n_bins = grid.bin_count();
    let mut counts = vec![0u64; n_bins];
    for (pos, &idx) in stream.indices.iter().enumerate() {
        if idx as usize >= n_bins {
            return Err(Error::corruption_at(
                pos as u64,
                format!("symbol {idx} exceeds bin count {n_bins}"),
            ));
        }
        counts[idx as usize] += 1;
    }
    let n = stream.len() as f64;
    let probs = counts.into_iter().map(|c| c as f64 / n).collect();
    Ok(BinPmf { probs: floor_and_normalize(probs), source: SourceModel::Empirical })
}

/// Expected code length in bits per symbol of `codebook` under the given
/// true distribution: `Σ pmf[i] · length[i]`.
pub fn expected_length(pmf_true: &BinPmf, codebook: &Codebook) -> Result<f64> {
    if pmf_true.len() != codebook.alphabet_size() {
        return Err(Error::Coding(format!(
            "dimension mismatch: pmf has {} bins, codebook {}",
            pmf_true.len(),
            codebook.alphabet_size()
        )));
    }
    let mut bits = 0.0;
    for (i, &p) in pmf_true.probabilities().iter().enumerate() {
        let len = codebook.length_of(i);
        if p > 0.0 && len == 0 {
            return Err(Error::Coding(format!(
                "symbol {i} has positive probability but no codeword"
            )));
        }
        bits += p * len as f64;
    }
    Ok(bits)
}
