//! Python bindings: `import pydeltasketch`.

use deltasketch::{ncd, oracle, Error};
use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyBytes;

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Io(io) => PyIOError::new_err(io.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

#[pyclass(name = "SketchParams", frozen, from_py_object)]
#[derive(Clone)]
struct SketchParams(deltasketch::SketchParams);

#[pymethods]
impl SketchParams {
    #[new]
    #[pyo3(signature = (epsilon, n_max, precision = 14, seed = None, modulus = None, alpha = None))]
    fn new(
        epsilon: f64,
        n_max: u64,
        precision: u8,
        seed: Option<u64>,
        modulus: Option<u64>,
        alpha: Option<f64>,
    ) -> PyResult<Self> {
        let p = deltasketch::SketchParams::new(epsilon, n_max).map_err(to_py)?;
        Self::finish(p, precision, seed, modulus, alpha)
    }

    /// Parameters whose pairwise NCD is within `epsilon`; δ sketches use ε/5.
    #[staticmethod]
    #[pyo3(signature = (epsilon, n_max, precision = 14, seed = None, modulus = None))]
    fn for_ncd(epsilon: f64, n_max: u64, precision: u8, seed: Option<u64>, modulus: Option<u64>) -> PyResult<Self> {
        let p = deltasketch::SketchParams::for_ncd(epsilon, n_max).map_err(to_py)?;
        Self::finish(p, precision, seed, modulus, None)
    }

    #[getter]
    fn epsilon(&self) -> f64 {
        self.0.epsilon
    }

    #[getter]
    fn alpha(&self) -> f64 {
        self.0.alpha
    }

    #[getter]
    fn n_max(&self) -> u64 {
        self.0.n_max
    }

    #[getter]
    fn precision(&self) -> u8 {
        self.0.precision
    }

    #[getter]
    fn seed(&self) -> u64 {
        self.0.seed
    }

    #[getter]
    fn modulus(&self) -> u64 {
        self.0.modulus
    }

    fn lengths(&self) -> PyResult<Vec<u64>> {
        deltasketch::sampled_lengths(self.0.alpha, self.0.n_max).map_err(to_py)
    }

    fn __repr__(&self) -> String {
        let p = &self.0;
        format!(
            "SketchParams(epsilon={}, n_max={}, precision={}, seed={}, modulus={}, alpha={})",
            p.epsilon, p.n_max, p.precision, p.seed, p.modulus, p.alpha
        )
    }
}

impl SketchParams {
    fn finish(
        mut p: deltasketch::SketchParams,
        precision: u8,
        seed: Option<u64>,
        modulus: Option<u64>,
        alpha: Option<f64>,
    ) -> PyResult<Self> {
        p = p.with_precision(precision);
        if let Some(s) = seed {
            p = p.with_seed(s);
        }
        if let Some(q) = modulus {
            p = p.with_modulus(q);
        }
        if let Some(a) = alpha {
            p = p.with_alpha(a);
        }
        p.validate().map_err(to_py)?;
        Ok(Self(p))
    }
}

#[pyclass(name = "DeltaSketch", frozen, from_py_object)]
#[derive(Clone)]
struct DeltaSketch(deltasketch::DeltaSketch);

#[pymethods]
impl DeltaSketch {
    #[new]
    fn new(params: &SketchParams) -> PyResult<Self> {
        deltasketch::DeltaSketch::new(params.0.clone()).map(Self).map_err(to_py)
    }

    #[staticmethod]
    fn build(py: Python<'_>, params: &SketchParams, data: &[u8]) -> PyResult<Self> {
        let p = params.0.clone();
        py.detach(|| deltasketch::DeltaSketch::build(p, data))
            .map(Self)
            .map_err(to_py)
    }

    #[staticmethod]
    fn deserialize(data: &[u8]) -> PyResult<Self> {
        deltasketch::DeltaSketch::deserialize(data).map(Self).map_err(to_py)
    }

    fn serialize<'py>(&self, py: Python<'py>) -> Bound<'py, PyBytes> {
        PyBytes::new(py, &self.0.serialize())
    }

    fn estimate(&self) -> f64 {
        self.0.estimate()
    }

    fn merge(&self, other: &DeltaSketch) -> PyResult<Self> {
        self.0.merge(&other.0).map(Self).map_err(to_py)
    }

    fn union_estimate(&self, other: &DeltaSketch) -> PyResult<f64> {
        self.0.union_estimate(&other.0).map_err(to_py)
    }

    /// `(k, estimated distinct k-substrings)` per sampled length.
    fn length_estimates(&self) -> Vec<(u64, f64)> {
        self.0.length_estimates()
    }

    #[getter]
    fn params(&self) -> SketchParams {
        SketchParams(self.0.params().clone())
    }

    #[getter]
    fn stream_len(&self) -> u64 {
        self.0.stream_len()
    }

    #[getter]
    fn lengths(&self) -> Vec<u64> {
        self.0.lengths()
    }

    #[getter]
    fn is_unary(&self) -> bool {
        self.0.is_unary()
    }

    fn __eq__(&self, other: &DeltaSketch) -> bool {
        self.0 == other.0
    }

    fn __repr__(&self) -> String {
        format!(
            "DeltaSketch(stream_len={}, lengths={}, estimate={:.6})",
            self.0.stream_len(),
            self.0.num_lengths(),
            self.0.estimate()
        )
    }
}

/// Feeds bytes in chunks; `finalize` hands back the sketch.
#[pyclass(name = "StreamEstimator")]
struct StreamEstimator(Option<deltasketch::StreamEstimator>);

impl StreamEstimator {
    fn inner(&mut self) -> PyResult<&mut deltasketch::StreamEstimator> {
        self.0
            .as_mut()
            .ok_or_else(|| PyValueError::new_err("estimator already finalized"))
    }
}

#[pymethods]
impl StreamEstimator {
    #[new]
    #[pyo3(signature = (params, window = None, rlbwt = false, block_size = None))]
    fn new(params: &SketchParams, window: Option<u64>, rlbwt: bool, block_size: Option<usize>) -> PyResult<Self> {
        let mut config = deltasketch::StreamConfig {
            window,
            rlbwt,
            ..Default::default()
        };
        if let Some(b) = block_size {
            config.block_size = b;
        }
        deltasketch::StreamEstimator::new(params.0.clone(), config)
            .map(|e| Self(Some(e)))
            .map_err(to_py)
    }

    fn push(&mut self, py: Python<'_>, data: &[u8]) -> PyResult<()> {
        let est = self.inner()?;
        py.detach(|| est.push_slice(data)).map_err(to_py)
    }

    fn estimate(&mut self) -> PyResult<f64> {
        self.inner()?.estimate().map_err(to_py)
    }

    fn finalize(&mut self) -> PyResult<DeltaSketch> {
        let est = self
            .0
            .take()
            .ok_or_else(|| PyValueError::new_err("estimator already finalized"))?;
        est.finalize().map(DeltaSketch).map_err(to_py)
    }

    #[getter]
    fn bytes_seen(&mut self) -> PyResult<u64> {
        Ok(self.inner()?.bytes_seen())
    }

    #[getter]
    fn window(&mut self) -> PyResult<u64> {
        Ok(self.inner()?.window_capacity())
    }

    #[getter]
    fn rlbwt_active(&mut self) -> PyResult<bool> {
        Ok(self.inner()?.rlbwt_active())
    }

    #[getter]
    fn has_dropped(&mut self) -> PyResult<bool> {
        Ok(self.inner()?.has_dropped())
    }

    #[getter]
    fn peak_aux_bytes(&mut self) -> PyResult<usize> {
        Ok(self.inner()?.peak_aux_bytes())
    }
}

/// `(raw, clamped)` NCD between two sketches.
#[pyfunction]
fn ncd_pair(a: &DeltaSketch, b: &DeltaSketch) -> PyResult<(f64, f64)> {
    let v = ncd::ncd_from_sketches(&a.0, &b.0).map_err(to_py)?;
    Ok((v.raw, v.clamped))
}

/// Clamped all-pairs matrix as nested lists.
#[pyfunction]
fn ncd_matrix(py: Python<'_>, sketches: Vec<DeltaSketch>, names: Vec<String>) -> PyResult<Vec<Vec<f64>>> {
    let inner: Vec<_> = sketches.into_iter().map(|s| s.0).collect();
    py.detach(|| ncd::ncd_matrix(&inner, &names))
        .map(|m| m.values)
        .map_err(to_py)
}

/// All-pairs matrix as PHYLIP text.
#[pyfunction]
fn phylip(py: Python<'_>, sketches: Vec<DeltaSketch>, names: Vec<String>) -> PyResult<String> {
    let inner: Vec<_> = sketches.into_iter().map(|s| s.0).collect();
    py.detach(|| ncd::ncd_matrix(&inner, &names))
        .map(|m| m.to_phylip())
        .map_err(to_py)
}

/// Exact `(numerator, denominator, k_hat)`.
#[pyfunction]
fn exact_delta(data: &[u8]) -> (u64, u64, u64) {
    let p = oracle::exact_profile(data);
    (p.delta.num, p.delta.den, p.k_hat)
}

/// Exact distinct-substring counts `[d_1, ..., d_n]`.
#[pyfunction]
fn exact_dk(data: &[u8]) -> Vec<u64> {
    oracle::exact_profile(data).d
}

#[pyfunction]
fn exact_ncd(s: &[u8], t: &[u8]) -> PyResult<f64> {
    oracle::exact_ncd(s, t).map_err(to_py)
}

#[pymodule]
fn pydeltasketch(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<SketchParams>()?;
    m.add_class::<DeltaSketch>()?;
    m.add_class::<StreamEstimator>()?;
    m.add_function(wrap_pyfunction!(ncd_pair, m)?)?;
    m.add_function(wrap_pyfunction!(ncd_matrix, m)?)?;
    m.add_function(wrap_pyfunction!(phylip, m)?)?;
    m.add_function(wrap_pyfunction!(exact_delta, m)?)?;
    m.add_function(wrap_pyfunction!(exact_dk, m)?)?;
    m.add_function(wrap_pyfunction!(exact_ncd, m)?)?;
    Ok(())
}
