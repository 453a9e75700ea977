//! Gradient compression toolkit.
//!
//! Quantizes gradient tensors onto the bin grid induced by an emulated
//! 8-bit [1,5,2] float format and compresses the resulting symbol streams
//! losslessly with canonical Huffman codes driven by fitted generalized
//! normal (or plain normal) distribution models, with LZ78 as the
//! universal-coding baseline. Ships the statistical machinery to validate
//! the distribution fits (Wasserstein distances, kurtosis tracking,
//! moment confidence intervals), a self-describing gradient container
//! format, and a desk-scale federated-averaging harness that meters
//! communication overhead.

pub mod coder;
pub mod error;
pub mod fsutil;
pub mod gennorm;
pub mod harness;
pub mod io;
pub mod quantizer;
pub mod special;
pub mod stats;

pub use error::{Error, Result};
pub use gennorm::{fit, fit_norm, GenNormFit, GenNormParams, MomentSummary};
pub use quantizer::{build_grid, dequantize, quantize, Fp8Format, GridDescriptor, QuantGrid, SymbolStream};
