//! Python bindings: the distribution core, the FP8 bin quantizer, and the
//! compress/decompress pipeline, exposed as the `_gradcomp` module.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::{PyBytes, PyDict};

use gradcomp::coder::{
    build_huffman, decode_blob, encode, lz78_encode, pmf_empirical, pmf_from_model, BitBlob,
    ModelClass,
};
use gradcomp::gennorm::GenNormParams;
use gradcomp::quantizer::{build_grid, dequantize, quantize, Fp8Format, QuantGrid, SymbolStream};
use gradcomp::stats::{self, WassersteinOrder};

fn to_py_err(err: gradcomp::Error) -> PyErr {
    PyValueError::new_err(err.to_string())
}

/// Generalized normal distribution with location, scale, and shape.
#[pyclass(frozen, name = "GenNorm")]
struct PyGenNorm {
    inner: GenNormParams,
}

#[pymethods]
impl PyGenNorm {
    #[new]
    fn new(mu: f64, alpha: f64, beta: f64) -> PyResult<Self> {
        Ok(Self { inner: GenNormParams::new(mu, alpha, beta).map_err(to_py_err)? })
    }

    #[getter]
    fn mu(&self) -> f64 {
        self.inner.mu()
    }

    #[getter]
    fn alpha(&self) -> f64 {
        self.inner.alpha()
    }

    #[getter]
    fn beta(&self) -> f64 {
        self.inner.beta()
    }

    fn pdf(&self, x: f64) -> f64 {
        self.inner.pdf(x)
    }

    fn cdf(&self, x: f64) -> f64 {
        self.inner.cdf(x)
    }

    fn quantile(&self, q: f64) -> PyResult<f64> {
        self.inner.quantile(q).map_err(to_py_err)
    }

    /// (mean, variance, kurtosis), with plain kurtosis (Gaussian = 3).
    fn moments(&self) -> (f64, f64, f64) {
        let m = self.inner.moments();
        (m.mean, m.variance, m.kurtosis)
    }

    /// Draw `n` samples, deterministic for a given seed.
    #[pyo3(signature = (n, seed=0))]
    fn sample(&self, n: usize, seed: u64) -> Vec<f64> {
        self.inner.sample(n, seed)
    }

    fn __repr__(&self) -> String {
        format!(
            "GenNorm(mu={}, alpha={}, beta={})",
            self.inner.mu(),
            self.inner.alpha(),
            self.inner.beta()
        )
    }
}

/// Estimate GenNorm parameters from data (moment-ratio method).
#[pyfunction]
fn fit(data: Vec<f64>) -> PyResult<PyGenNorm> {
    Ok(PyGenNorm { inner: gradcomp::gennorm::fit(&data).map_err(to_py_err)?.params })
}

/// Fit a plain normal, expressed in GenNorm parameters (beta = 2).
#[pyfunction]
fn fit_norm(data: Vec<f64>) -> PyResult<PyGenNorm> {
    Ok(PyGenNorm { inner: gradcomp::gennorm::fit_norm(&data).map_err(to_py_err)? })
}

/// FP8 bin grid: representable values are edges, inputs map to bin centers.
#[pyclass(frozen, name = "QuantGrid")]
struct PyQuantGrid {
    grid: QuantGrid,
}

#[pymethods]
impl PyQuantGrid {
    #[new]
    #[pyo3(signature = (sign_bits=1, exponent_bits=5, mantissa_bits=2, exponent_bias=16))]
    fn new(sign_bits: u32, exponent_bits: u32, mantissa_bits: u32, exponent_bias: i32) -> PyResult<Self> {
        let format = Fp8Format::new(sign_bits, exponent_bits, mantissa_bits, exponent_bias)
            .map_err(to_py_err)?;
        Ok(Self { grid: build_grid(format) })
    }

    fn edges(&self) -> Vec<f64> {
        self.grid.edges().to_vec()
    }

    fn centers(&self) -> Vec<f64> {
        self.grid.centers().to_vec()
    }

    #[getter]
    fn bin_count(&self) -> usize {
        self.grid.bin_count()
    }

    /// Map values to bin indices.
    fn quantize(&self, values: Vec<f64>) -> PyResult<Vec<u16>> {
        Ok(quantize(&values, &self.grid).map_err(to_py_err)?.indices)
    }

    /// Map bin indices back to their center representatives.
    fn dequantize(&self, indices: Vec<u16>) -> PyResult<Vec<f64>> {
        let n = indices.len();
        let stream = SymbolStream { indices, grid_id: self.grid.descriptor(), original_length: n };
        dequantize(&stream, &self.grid).map_err(to_py_err)
    }

    fn __repr__(&self) -> String {
        let d = self.grid.descriptor();
        format!(
            "QuantGrid(sign_bits={}, exponent_bits={}, mantissa_bits={}, exponent_bias={}, bins={})",
            d.sign_bits, d.exponent_bits, d.mantissa_bits, d.exponent_bias,
            self.grid.bin_count()
        )
    }
}

/// Quantize and losslessly compress values into a standalone GCB1 blob.
#[pyfunction]
#[pyo3(signature = (values, model="gennorm", coder="huffman"))]
fn compress<'py>(
    py: Python<'py>,
    values: Vec<f64>,
    model: &str,
    coder: &str,
) -> PyResult<Bound<'py, PyBytes>> {
    let grid = build_grid(Fp8Format::e5m2());
    let stream = quantize(&values, &grid).map_err(to_py_err)?;
    let blob = match coder {
        "lz78" => lz78_encode(&stream).map_err(to_py_err)?,
        "huffman" => {
            let pmf = match model {
                "gennorm" => {
                    let params = gradcomp::gennorm::fit(&values).map_err(to_py_err)?.params;
                    pmf_from_model(&params, &grid, ModelClass::GenNorm).map_err(to_py_err)?
                }
                "norm" => {
                    let params = gradcomp::gennorm::fit_norm(&values).map_err(to_py_err)?;
                    pmf_from_model(&params, &grid, ModelClass::Norm).map_err(to_py_err)?
                }
                "empirical" => pmf_empirical(&stream, &grid).map_err(to_py_err)?,
                other => return Err(PyValueError::new_err(format!("unknown model {other:?}"))),
            };
            let codebook = build_huffman(&pmf).map_err(to_py_err)?;
            encode(&stream, &codebook).map_err(to_py_err)?
        }
        other => return Err(PyValueError::new_err(format!("unknown coder {other:?}"))),
    };
    Ok(PyBytes::new(py, &blob.to_bytes()))
}

/// Decode a GCB1 blob back to the quantized bin-center values.
#[pyfunction]
fn decompress(data: &[u8]) -> PyResult<Vec<f64>> {
    let blob = BitBlob::from_bytes(data).map_err(to_py_err)?;
    let (stream, grid) = decode_blob(&blob).map_err(to_py_err)?;
    dequantize(&stream, &grid).map_err(to_py_err)
}

/// Wasserstein distance between a sample and a GenNorm model (order 1 or 2).
#[pyfunction]
#[pyo3(signature = (sample, model, order=2))]
fn wasserstein(sample: Vec<f64>, model: &PyGenNorm, order: u32) -> PyResult<f64> {
    let order = match order {
        1 => WassersteinOrder::One,
        2 => WassersteinOrder::Two,
        other => return Err(PyValueError::new_err(format!("order must be 1 or 2, got {other}"))),
    };
    stats::wasserstein(&sample, &model.inner, order).map_err(to_py_err)
}

/// Plain sample kurtosis (Gaussian = 3).
#[pyfunction]
fn sample_kurtosis(data: Vec<f64>) -> PyResult<f64> {
    stats::sample_kurtosis(&data).map_err(to_py_err)
}

/// Fit both families and report fit-quality metrics as a dict.
#[pyfunction]
#[pyo3(signature = (data, epoch=0, layer_label="layer"))]
fn fit_report<'py>(
    py: Python<'py>,
    data: Vec<f64>,
    epoch: u64,
    layer_label: &str,
) -> PyResult<Bound<'py, PyDict>> {
    let report = stats::fit_report(&data, epoch, layer_label).map_err(to_py_err)?;
    let out = PyDict::new(py);
    out.set_item("epoch", report.epoch)?;
    out.set_item("layer", &report.layer_label)?;
    out.set_item("w1_gennorm", report.w1_gennorm)?;
    out.set_item("w1_norm", report.w1_norm)?;
    out.set_item("w2_gennorm", report.w2_gennorm)?;
    out.set_item("w2_norm", report.w2_norm)?;
    out.set_item("w2_paper_variant_gennorm", report.w2_paper_gennorm)?;
    out.set_item("w2_paper_variant_norm", report.w2_paper_norm)?;
    out.set_item("sample_kurtosis", report.sample_kurtosis)?;
    out.set_item("model_kurtosis", report.model_kurtosis)?;
    out.set_item("mu", report.gennorm.mu())?;
    out.set_item("alpha", report.gennorm.alpha())?;
    out.set_item("beta", report.gennorm.beta())?;
    Ok(out)
}

#[pymodule]
fn _gradcomp(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_class::<PyGenNorm>()?;
    m.add_class::<PyQuantGrid>()?;
    m.add_function(wrap_pyfunction!(fit, m)?)?;
    m.add_function(wrap_pyfunction!(fit_norm, m)?)?;
    m.add_function(wrap_pyfunction!(compress, m)?)?;
    m.add_function(wrap_pyfunction!(decompress, m)?)?;
    m.add_function(wrap_pyfunction!(wasserstein, m)?)?;
    m.add_function(wrap_pyfunction!(sample_kurtosis, m)?)?;
    m.add_function(wrap_pyfunction!(fit_report, m)?)?;
    Ok(())
}
