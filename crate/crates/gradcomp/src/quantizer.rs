//! Emulated 8-bit sign-exponent-mantissa quantization.
//!
//! The representable values of the float format are used as bin edges; an
//! input is quantized to the arithmetic center of the bin it lands in. The
//! default [1,5,2] layout with exponent bias 16 spans positive magnitudes
//! from exactly 2^-16 up to exactly 2^15.
//!
//! Value set for a `[1, e, m]` layout with bias `B` (all plus sign-mirrored
//! negatives and zero):
//!
//! * normals `(1 + k / 2^m) * 2^(c - 1 - B)` for exponent codes
//!   `c in 1..=2^e - 2`, so the normal exponent range is `[-B, 2^e - 2 - B]`,
//! * the top-of-range anchor `2^(2^e - 1 - B)` for the highest code.
//!
//! Exponent code 0 denotes zero for every mantissa value: there is no
//! subnormal ladder, keeping the magnitude range pinned to its stated
//! extremes.

use std::io::Write;

use crate::error::{Error, Result};

/// Bit layout and bias of an 8-bit float format.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Fp8Format {
    sign_bits: u32,
    exponent_bits: u32,
    mantissa_bits: u32,
    exponent_bias: i32,
}

/// Compact 4-byte wire identifier for a format; also serves as the grid
/// identity carried by symbol streams and blob headers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GridDescriptor {
    pub sign_bits: u8,
    pub exponent_bits: u8,
    pub mantissa_bits: u8,
    pub exponent_bias: u8,
}

impl Fp8Format {
    /// Validates that the fields describe an 8-bit layout with a sign bit.
    pub fn new(sign_bits: u32, exponent_bits: u32, mantissa_bits: u32, exponent_bias: i32) -> Result<Self> {
        if sign_bits + exponent_bits + mantissa_bits != 8 {
            return Err(Error::Parameter(format!(
                "bit widths must sum to 8, got {sign_bits}+{exponent_bits}+{mantissa_bits}"
            )));
        }
        if sign_bits != 1 {
            return Err(Error::Parameter("format requires exactly one sign bit".into()));
        }
        if exponent_bits == 0 || mantissa_bits == 0 {
            return Err(Error::Parameter("exponent and mantissa need at least one bit".into()));
        }
        if !(0..=255).contains(&exponent_bias) {
            return Err(Error::Parameter(format!(
                "exponent bias must fit one byte, got {exponent_bias}"
            )));
        }
        Ok(Self { sign_bits, exponent_bits, mantissa_bits, exponent_bias })
    }

    /// The paper-default [1,5,2] layout with bias 16: positive range
    /// [2^-16, 2^15].
    pub fn e5m2() -> Self {
        Self { sign_bits: 1, exponent_bits: 5, mantissa_bits: 2, exponent_bias: 16 }
    }

    pub fn sign_bits(&self) -> u32 {
        self.sign_bits
    }

    pub fn exponent_bits(&self) -> u32 {
        self.exponent_bits
    }

    pub fn mantissa_bits(&self) -> u32 {
        self.mantissa_bits
    }

    pub fn exponent_bias(&self) -> i32 {
        self.exponent_bias
    }

    /// Smallest normal exponent (`-bias`); 2^min_exponent is the smallest
    /// positive normal magnitude.
    pub fn min_exponent(&self) -> i32 {
        -self.exponent_bias
    }

    /// Exponent of the top-of-range anchor (`2^exp_codes - 1 - bias`).
    pub fn max_exponent(&self) -> i32 {
        (1 << self.exponent_bits) - 1 - self.exponent_bias
    }

    pub fn descriptor(&self) -> GridDescriptor {
        GridDescriptor {
            sign_bits: self.sign_bits as u8,
            exponent_bits: self.exponent_bits as u8,
            mantissa_bits: self.mantissa_bits as u8,
            exponent_bias: self.exponent_bias as u8,
        }
    }

    /// All distinct positive magnitudes of the format, unsorted.
    fn positive_magnitudes(&self) -> Vec<f64> {
        let mant_den = (1u32 << self.mantissa_bits) as f64;
        let max_code: i32 = (1 << self.exponent_bits) - 1;
        let mut out = Vec::new();
        for code in 1..max_code {
            let e = code - 1 - self.exponent_bias;
            for k in 0..(1u32 << self.mantissa_bits) {
                out.push((1.0 + k as f64 / mant_den) * pow2(e));
            }
        }
        out.push(pow2(self.max_exponent()));
        out
    }
}

impl GridDescriptor {
    /// Number of quantization bins the descriptor's grid has, computed in
    /// closed form without materializing the grid: one bin between each
    /// adjacent pair of the `2·(normals + anchor) + 1` edges.
    pub fn bin_count(&self) -> usize {
        let mant = 1usize << self.mantissa_bits;
        let positives = ((1usize << self.exponent_bits) - 2) * mant + 1;
        2 * positives
    }

    pub fn to_format(&self) -> Result<Fp8Format> {
        Fp8Format::new(
            self.sign_bits as u32,
            self.exponent_bits as u32,
            self.mantissa_bits as u32,
            self.exponent_bias as i32,
        )
    }

    pub fn to_bytes(&self) -> [u8; 4] {
        [self.sign_bits, self.exponent_bits, self.mantissa_bits, self.exponent_bias]
    }

    pub fn from_bytes(bytes: [u8; 4]) -> Self {
        Self {
            sign_bits: bytes[0],
            exponent_bits: bytes[1],
            mantissa_bits: bytes[2],
            exponent_bias: bytes[3],
        }
    }
}

fn pow2(e: i32) -> f64 {
    2.0_f64.powi(e)
}

/// Bin edges (every representable value, negatives through positives,
/// including zero) and the midpoint centers between adjacent edges.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantGrid {
    descriptor: GridDescriptor,
    edges: Vec<f64>,
    centers: Vec<f64>,
}

impl QuantGrid {
    pub fn descriptor(&self) -> GridDescriptor {
        self.descriptor
    }

    pub fn edges(&self) -> &[f64] {
        &self.edges
    }

    pub fn centers(&self) -> &[f64] {
        &self.centers
    }

    /// Number of bins, i.e. the coder's alphabet size.
    pub fn bin_count(&self) -> usize {
        self.centers.len()
    }

    /// Audit dump: one CSV row per bin with exact shortest-round-trip
    /// decimal rendering.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "index,lower_edge,upper_edge,center")?;
        for (i, c) in self.centers.iter().enumerate() {
            writeln!(w, "{},{},{},{}", i, self.edges[i], self.edges[i + 1], c)?;
        }
        Ok(())
    }
}

/// Sequence of bin indices produced by quantization, tied to the grid that
/// produced it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SymbolStream {
    pub indices: Vec<u16>,
    pub grid_id: GridDescriptor,
    pub original_length: usize,
}

impl SymbolStream {
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }
}

/// Enumerate the format's representable values and build the edge/center
/// grid. Deterministic for a given format.
pub fn build_grid(format: Fp8Format) -> QuantGrid {
    let positives = format.positive_magnitudes();
    let mut edges = Vec::with_capacity(2 * positives.len() + 1);
    edges.extend(positives.iter().map(|v| -v));
    edges.push(0.0);
    edges.extend(positives.iter().copied());
    edges.sort_by(|a, b| a.partial_cmp(b).unwrap());
    edges.dedup();
    let centers = edges.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
    QuantGrid { descriptor: format.descriptor(), edges, centers }
}

/// Map each value to the index of the half-open bin `[edge[i], edge[i+1])`
/// containing it; out-of-range values saturate to the extreme bins.
pub fn quantize(values: &[f64], grid: &QuantGrid) -> Result<SymbolStream> {
    let n_bins = grid.bin_count();
    let mut indices = Vec::with_capacity(values.len());
    for (pos, &v) in values.iter().enumerate() {
        if !v.is_finite() {
            return Err(Error::Input(format!("non-finite value {v} at position {pos}")));
        }
        let upper = grid.edges.partition_point(|&e| e <= v);
        let bin = upper.saturating_sub(1).min(n_bins - 1);
        indices.push(bin as u16);
    }
    Ok(SymbolStream {
        indices,
        grid_id: grid.descriptor(),
        original_length: values.len(),
    })
}

/// Reconstruct the bin-center representative of every symbol.
pub fn dequantize(stream: &SymbolStream, grid: &QuantGrid) -> Result<Vec<f64>> {
    if stream.grid_id != grid.descriptor() {
        return Err(Error::corruption(format!(
            "stream was quantized against {:?}, not {:?}",
            stream.grid_id,
            grid.descriptor()
        )));
    }
    let n_bins = grid.bin_count();
    let mut out = Vec::with_capacity(stream.indices.len());
    for (pos, &idx) in stream.indices.iter().enumerate() {
        if idx as usize >= n_bins {
            return Err(Error::corruption_at(
                pos as u64,
                format!("symbol {idx} exceeds bin count {n_bins}"),
            ));
        }
        out.push(grid.centers[idx as usize]);
    }
    Ok(out)
}
