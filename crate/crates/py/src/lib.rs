//! Python bindings: images, color conversion, metrics, the block codec and
//! Bjøntegaard deltas.

use std::path::PathBuf;

use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyOSError};
use pyo3::prelude::*;
use pyo3::types::{PyBytes, PyDict, PyList};

use chromabench::bd::{self, BdOptions, Metric, RdCurve as CoreCurve};
use chromabench::codec::{self, CodecConfig, OperatingPoint};
use chromabench::imageio::{self, PlanarImage};
use chromabench::metrics::MetricReport;
use chromabench::{analysis, color, rdo, synth};

create_exception!(chromabench, ChromabenchError, PyException);

fn to_py(e: chromabench::Error) -> PyErr {
    match e {
        chromabench::Error::Io { .. } => PyOSError::new_err(e.to_string()),
        e => ChromabenchError::new_err(e.to_string()),
    }
}

fn parse<T: std::str::FromStr<Err = chromabench::Error>>(s: &str) -> PyResult<T> {
    s.parse().map_err(to_py)
}

/// Three-plane float image tagged with its color space.
#[pyclass(name = "Image", module = "chromabench", frozen, skip_from_py_object)]
#[derive(Clone)]
pub struct Image {
    inner: PlanarImage,
}

#[pymethods]
impl Image {
    /// Interleaved 8-bit RGB bytes to an sRGB image.
    #[staticmethod]
    fn from_rgb8(width: usize, height: usize, data: &[u8]) -> PyResult<Self> {
        let inner = PlanarImage::from_rgb8(width, height, data).map_err(to_py)?;
        Ok(Self { inner })
    }

    /// Builds an image from three planes of `width * height` floats.
    #[staticmethod]
    #[pyo3(signature = (width, height, planes, space = "srgb"))]
    fn from_planes(width: usize, height: usize, planes: [Vec<f32>; 3], space: &str) -> PyResult<Self> {
        let inner = PlanarImage::new(width, height, planes, parse(space)?).map_err(to_py)?;
        Ok(Self { inner })
    }

    /// Reads a PNG or binary PPM file.
    #[staticmethod]
    fn read(path: PathBuf) -> PyResult<Self> {
        let inner = imageio::read_image(path).map_err(to_py)?;
        Ok(Self { inner })
    }

    /// Deterministic textured test image.
    #[staticmethod]
    #[pyo3(signature = (seed, width = 256, height = 256))]
    fn synthetic(seed: u64, width: usize, height: usize) -> Self {
        Self {
            inner: synth::natural_image(seed, width, height),
        }
    }

    fn write(&self, path: PathBuf) -> PyResult<()> {
        imageio::write_image(path, &self.inner).map_err(to_py)
    }

    #[getter]
    fn width(&self) -> usize {
        self.inner.width()
    }

    #[getter]
    fn height(&self) -> usize {
        self.inner.height()
    }

    #[getter]
    fn space(&self) -> &'static str {
        self.inner.space().name()
    }

    fn plane(&self, index: usize) -> PyResult<Vec<f32>> {
        if index > 2 {
            return Err(ChromabenchError::new_err(format!("plane index {index} out of range")));
        }
        Ok(self.inner.plane(index).to_vec())
    }

    fn pixel(&self, x: usize, y: usize) -> PyResult<[f32; 3]> {
        if x >= self.inner.width() || y >= self.inner.height() {
            return Err(ChromabenchError::new_err(format!("pixel ({x}, {y}) out of range")));
        }
        Ok(self.inner.pixel(x, y))
    }

    fn to_rgb8<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyBytes>> {
        let data = self.inner.to_rgb8().map_err(to_py)?;
        Ok(PyBytes::new(py, &data))
    }

    /// Converts to `srgb`, `linear`, `yuv` or `lab`.
    fn convert(&self, space: &str) -> PyResult<Self> {
        let inner = color::convert(&self.inner, parse(space)?).map_err(to_py)?;
        Ok(Self { inner })
    }

    fn __repr__(&self) -> String {
        format!(
            "Image({}x{}, {})",
            self.inner.width(),
            self.inner.height(),
            self.inner.space().name()
        )
    }
}

fn report_dict<'py>(py: Python<'py>, r: &MetricReport) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("psnr_db", r.psnr_db)?;
    d.set_item("psnr_r_db", r.psnr_r_db)?;
    d.set_item("psnr_g_db", r.psnr_g_db)?;
    d.set_item("psnr_b_db", r.psnr_b_db)?;
    d.set_item("mse", r.mse)?;
    d.set_item("msssim", r.msssim)?;
    d.set_item("msssim_db", r.msssim_db)?;
    d.set_item("ciede2000", r.ciede2000)?;
    d.set_item("ciede_quality", r.ciede_quality)?;
    Ok(d)
}

/// PSNR, MS-SSIM and CIEDE2000 of two sRGB images.
#[pyfunction]
fn metrics<'py>(py: Python<'py>, reference: &Image, distorted: &Image) -> PyResult<Bound<'py, PyDict>> {
    let r = MetricReport::compute(&reference.inner, &distorted.inner).map_err(to_py)?;
    report_dict(py, &r)
}

/// CIEDE2000 color difference of two CIELAB triples.
#[pyfunction]
fn delta_e00(lab1: [f64; 3], lab2: [f64; 3]) -> f64 {
    chromabench::metrics::delta_e00(lab1, lab2)
}

/// Block-transform codec configuration.
#[pyclass(name = "CodecConfig", module = "chromabench", frozen, skip_from_py_object)]
#[derive(Clone)]
pub struct PyCodecConfig {
    inner: CodecConfig,
}

#[pymethods]
impl PyCodecConfig {
    /// Preset for `space` in {srgb, yuv, lab} at `q1`..`q4`.
    #[new]
    #[pyo3(signature = (space = "yuv", operating_point = "q2", chroma_channels = None))]
    fn new(space: &str, operating_point: &str, chroma_channels: Option<usize>) -> PyResult<Self> {
        let point: OperatingPoint = parse(operating_point)?;
        let mut inner = CodecConfig::preset(parse(space)?, point).map_err(to_py)?;
        if let Some(c) = chroma_channels {
            inner = inner.with_chroma_channels(c).map_err(to_py)?;
        }
        Ok(Self { inner })
    }

    #[getter]
    fn space(&self) -> &'static str {
        self.inner.space.name()
    }

    #[getter]
    fn operating_point(&self) -> &'static str {
        self.inner.operating_point.label()
    }

    #[getter]
    fn chroma_channels(&self) -> usize {
        self.inner.chroma_channels
    }

    #[getter]
    fn is_dual(&self) -> bool {
        self.inner.is_dual()
    }

    #[getter]
    fn steps(&self) -> (f64, f64, f64) {
        let s = self.inner.steps;
        (s.luma, s.chroma, s.side)
    }

    fn __repr__(&self) -> String {
        format!(
            "CodecConfig(space={:?}, operating_point={:?}, chroma_channels={})",
            self.inner.space.name(),
            self.inner.operating_point.label(),
            self.inner.chroma_channels
        )
    }
}

/// Encoded stream with its rate breakdown.
#[pyclass(name = "Encoded", module = "chromabench", frozen)]
pub struct PyEncoded {
    inner: codec::Encoded,
}

#[pymethods]
impl PyEncoded {
    fn to_bytes<'py>(&self, py: Python<'py>) -> Bound<'py, PyBytes> {
        PyBytes::new(py, &self.inner.to_bytes())
    }

    /// Payload bits per pixel (header excluded).
    #[getter]
    fn bpp(&self) -> f64 {
        self.inner.bitstream.bpp()
    }

    /// Bits per pixel of each stream component.
    fn component_bpp<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let bs = &self.inner.bitstream;
        let d = PyDict::new(py);
        for c in &bs.components {
            d.set_item(c.id.name(), bs.component_bpp(c.id))?;
        }
        Ok(d)
    }

    /// `(branch, channel, bits)` for every latent channel.
    fn channel_bits(&self) -> PyResult<Vec<(String, usize, f64)>> {
        let report = analysis::channel_bit_allocation(&self.inner.trace).map_err(to_py)?;
        Ok(report
            .channels
            .iter()
            .map(|c| (c.branch.to_string(), c.channel, c.bits))
            .collect())
    }
}

#[pyfunction]
fn encode(image: &Image, config: &PyCodecConfig) -> PyResult<PyEncoded> {
    let inner = codec::encode_image(&image.inner, &config.inner).map_err(to_py)?;
    Ok(PyEncoded { inner })
}

#[pyfunction]
fn decode(data: &[u8]) -> PyResult<Image> {
    let inner = codec::decode_image(data).map_err(to_py)?;
    Ok(Image { inner })
}

/// Rate-distortion curve of one codec under one metric.
#[pyclass(name = "RdCurve", module = "chromabench", frozen, skip_from_py_object)]
#[derive(Clone)]
pub struct PyRdCurve {
    inner: CoreCurve,
}

#[pymethods]
impl PyRdCurve {
    /// `points` are `(rate_bpp, quality)` pairs; metric is `psnr`, `msssim_db` or `ciede_quality`.
    #[new]
    fn new(codec: &str, metric: &str, points: Vec<(f64, f64)>) -> PyResult<Self> {
        let metric: Metric = parse(metric)?;
        let inner = CoreCurve::from_pairs(codec, metric, &points).map_err(to_py)?;
        Ok(Self { inner })
    }

    #[getter]
    fn codec(&self) -> &str {
        &self.inner.codec
    }

    #[getter]
    fn metric(&self) -> &'static str {
        self.inner.metric.name()
    }

    #[getter]
    fn points(&self) -> Vec<(f64, f64)> {
        self.inner.points().iter().map(|p| (p.rate, p.distortion)).collect()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!(
            "RdCurve({:?}, {:?}, {} points)",
            self.inner.codec,
            self.inner.metric.name(),
            self.inner.len()
        )
    }
}

/// Reads a `codec,metric,rate_bpp,distortion` CSV.
#[pyfunction]
fn read_curves(path: PathBuf) -> PyResult<Vec<PyRdCurve>> {
    let curves = bd::read_curves_file(path).map_err(to_py)?;
    Ok(curves.into_iter().map(|inner| PyRdCurve { inner }).collect())
}

/// BD-rate (%) and BD-distortion of `test` against `anchor`.
#[pyfunction(name = "bd")]
#[pyo3(signature = (anchor, test, method = "pchip", transform = "quality"))]
fn bd_py<'py>(
    py: Python<'py>,
    anchor: &PyRdCurve,
    test: &PyRdCurve,
    method: &str,
    transform: &str,
) -> PyResult<Bound<'py, PyDict>> {
    let opts = BdOptions {
        interpolation: parse(method)?,
        transform: parse(transform)?,
    };
    let r = bd::bd(&anchor.inner, &test.inner, opts).map_err(to_py)?;
    let d = PyDict::new(py);
    d.set_item("bd_rate_percent", r.bd_rate_percent)?;
    d.set_item("bd_distortion", r.bd_distortion)?;
    d.set_item("distortion_overlap", r.distortion_overlap)?;
    d.set_item("rate_overlap", r.rate_overlap)?;
    d.set_item("method", r.method)?;
    Ok(d)
}

/// The four rate-distortion trade-off presets.
#[pyfunction]
fn lagrangian_presets<'py>(py: Python<'py>) -> PyResult<Bound<'py, PyList>> {
    let list = PyList::empty(py);
    for p in rdo::lagrangian_presets() {
        let d = PyDict::new(py);
        d.set_item("label", p.label)?;
        d.set_item("lambda_mse", p.lambda_mse)?;
        d.set_item("lambda_msssim", p.lambda_msssim)?;
        d.set_item("lambda_ciede", p.lambda_ciede)?;
        list.append(d)?;
    }
    Ok(list)
}

#[pymodule]
#[pyo3(name = "chromabench")]
fn chromabench_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("ChromabenchError", m.py().get_type::<ChromabenchError>())?;
    m.add_class::<Image>()?;
    m.add_class::<PyCodecConfig>()?;
    m.add_class::<PyEncoded>()?;
    m.add_class::<PyRdCurve>()?;
    m.add_function(wrap_pyfunction!(metrics, m)?)?;
    m.add_function(wrap_pyfunction!(delta_e00, m)?)?;
    m.add_function(wrap_pyfunction!(encode, m)?)?;
    m.add_function(wrap_pyfunction!(decode, m)?)?;
    m.add_function(wrap_pyfunction!(read_curves, m)?)?;
    m.add_function(wrap_pyfunction!(bd_py, m)?)?;
    m.add_function(wrap_pyfunction!(lagrangian_presets, m)?)?;
    Ok(())
}
