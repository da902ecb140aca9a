//! Python bindings for the `idisi` crate.
//!
//! Result records (bounds, estimates, sweep rows) are returned as plain
//! dictionaries with the same snake_case keys as the JSON output of the CLI.

use pyo3::exceptions::{PyOSError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyBool, PyComplex, PyDict, PyFloat, PyList, PyString};
use serde::Serialize;
use serde_json::Value;

use idisi::codebook::{read_codebook_csv, write_codebook_csv};
use idisi::{CirSpec, CodebookSource, PackingConfig, PackingStrategy, TrialConfig};

fn err(e: idisi::Error) -> PyErr {
    match e {
        idisi::Error::Io(io) => PyOSError::new_err(io.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn json_to_py<'py>(py: Python<'py>, v: &Value) -> PyResult<Bound<'py, PyAny>> {
    Ok(match v {
        Value::Null => py.None().into_bound(py),
        Value::Bool(b) => PyBool::new(py, *b).to_owned().into_any(),
        Value::Number(n) => match (n.as_i64(), n.as_u64()) {
            (Some(i), _) => i.into_pyobject(py)?.into_any(),
            (None, Some(u)) => u.into_pyobject(py)?.into_any(),
            _ => PyFloat::new(py, n.as_f64().unwrap_or(f64::NAN)).into_any(),
        },
        Value::String(s) => PyString::new(py, s).into_any(),
        Value::Array(items) => {
            let items = items.iter().map(|x| json_to_py(py, x)).collect::<PyResult<Vec<_>>>()?;
            PyList::new(py, items)?.into_any()
        }
        Value::Object(map) => {
            let d = PyDict::new(py);
            for (k, x) in map {
                d.set_item(k, json_to_py(py, x)?)?;
            }
            d.into_any()
        }
    })
}

fn to_dict<'py, T: Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let v = serde_json::to_value(value).map_err(|e| PyValueError::new_err(e.to_string()))?;
    json_to_py(py, &v)
}

/// Channel impulse response `h_0, ..., h_{K-1}` with nonzero end taps.
#[pyclass(name = "ChannelImpulseResponse", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyCir {
    inner: idisi::ChannelImpulseResponse,
}

#[pymethods]
impl PyCir {
    #[new]
    fn new(taps: Vec<f64>) -> PyResult<Self> {
        Ok(Self {
            inner: idisi::ChannelImpulseResponse::new(taps).map_err(err)?,
        })
    }

    /// Parse a tap list ("1,0.5") or generator ("geometric:3:0.5", "uniform-decay:auto").
    #[staticmethod]
    #[pyo3(signature = (spec, n=1, kappa=0.0))]
    fn parse(spec: &str, n: usize, kappa: f64) -> PyResult<Self> {
        let spec: CirSpec = spec.parse().map_err(err)?;
        Ok(Self {
            inner: spec.resolve(n, kappa).map_err(err)?,
        })
    }

    #[getter]
    fn taps(&self) -> Vec<f64> {
        self.inner.taps().to_vec()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!("ChannelImpulseResponse({:?})", self.inner.taps())
    }

    fn dtft<'py>(&self, py: Python<'py>, phi: f64) -> Bound<'py, PyComplex> {
        let h = idisi::evaluate_dtft(&self.inner, phi);
        PyComplex::from_doubles(py, h.re, h.im)
    }

    fn h_min(&self) -> f64 {
        self.inner.h_min()
    }

    fn reversed(&self) -> Self {
        Self {
            inner: self.inner.reversed(),
        }
    }
}

/// Parameter tuple `(n, kappa, sigma_z2, p_max, a, b)`.
#[pyclass(name = "SystemParameters", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyParams {
    inner: idisi::SystemParameters,
}

#[pymethods]
impl PyParams {
    #[new]
    #[pyo3(signature = (n, kappa=0.0, sigma_z2=1.0, p_max=1.0, a=10.0, b=0.2))]
    fn new(n: usize, kappa: f64, sigma_z2: f64, p_max: f64, a: f64, b: f64) -> PyResult<Self> {
        Ok(Self {
            inner: idisi::SystemParameters::new(n, kappa, sigma_z2, p_max, a, b).map_err(err)?,
        })
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n
    }
    #[getter]
    fn kappa(&self) -> f64 {
        self.inner.kappa
    }
    #[getter]
    fn sigma_z2(&self) -> f64 {
        self.inner.sigma_z2
    }
    #[getter]
    fn p_max(&self) -> f64 {
        self.inner.p_max
    }
    #[getter]
    fn a(&self) -> f64 {
        self.inner.a
    }
    #[getter]
    fn b(&self) -> f64 {
        self.inner.b
    }

    fn __repr__(&self) -> String {
        let p = &self.inner;
        format!(
            "SystemParameters(n={}, kappa={}, sigma_z2={}, p_max={}, a={}, b={})",
            p.n, p.kappa, p.sigma_z2, p.p_max, p.a, p.b
        )
    }
}

#[pyclass(name = "Codebook", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyCodebook {
    inner: idisi::Codebook,
}

#[pymethods]
impl PyCodebook {
    #[new]
    fn new(rows: Vec<Vec<f64>>, p_max: f64) -> PyResult<Self> {
        Ok(Self {
            inner: idisi::Codebook::from_rows(rows, p_max).map_err(err)?,
        })
    }

    #[staticmethod]
    fn from_csv(text: &str) -> PyResult<Self> {
        let (inner, _) = read_codebook_csv(text.as_bytes()).map_err(err)?;
        Ok(Self { inner })
    }

    fn to_csv(&self, r0: f64, seed: u64) -> PyResult<String> {
        let mut buf = Vec::new();
        write_codebook_csv(&self.inner, r0, seed, &mut buf).map_err(err)?;
        String::from_utf8(buf).map_err(|e| PyValueError::new_err(e.to_string()))
    }

    #[getter]
    fn codewords(&self) -> Vec<Vec<f64>> {
        self.inner.codewords().to_vec()
    }

    #[getter]
    fn p_max(&self) -> f64 {
        self.inner.p_max()
    }

    #[getter]
    fn block_length(&self) -> usize {
        self.inner.block_length()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn min_distance(&self) -> PyResult<f64> {
        idisi::min_pairwise_distance(&self.inner).map_err(err)
    }

    fn convolve(&self, cir: &PyCir) -> Vec<Vec<f64>> {
        idisi::convolve_codebook(&self.inner, &cir.inner)
    }

    fn verify<'py>(&self, py: Python<'py>, cir: &PyCir, r0: f64, h_min: f64) -> PyResult<Bound<'py, PyAny>> {
        let rep = idisi::verify_codebook(&self.inner, &cir.inner, r0, h_min).map_err(err)?;
        to_dict(py, &rep)
    }
}

#[pyfunction]
fn taps_count(n: usize, kappa: f64) -> PyResult<usize> {
    idisi::taps_count(n, kappa).map_err(err)
}

#[pyfunction]
fn compute_h_min(cir: &PyCir, grid_points: usize) -> PyResult<f64> {
    idisi::compute_h_min(&cir.inner, grid_points).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (cir, h_min_tolerance=1e-6))]
fn validate_cir<'py>(py: Python<'py>, cir: &PyCir, h_min_tolerance: f64) -> PyResult<Bound<'py, PyAny>> {
    to_dict(py, &idisi::validate_cir(&cir.inner, h_min_tolerance).map_err(err)?)
}

#[pyfunction]
fn convolve(codeword: Vec<f64>, cir: &PyCir) -> PyResult<Vec<f64>> {
    idisi::convolve(&codeword, &cir.inner).map_err(err)
}

/// One channel use. Returns a dict with `input`, `convolved` and `output`.
#[pyfunction]
#[pyo3(signature = (codeword, cir, sigma_z2, seed=0, stream=0))]
fn transmit<'py>(
    py: Python<'py>,
    codeword: Vec<f64>,
    cir: &PyCir,
    sigma_z2: f64,
    seed: u64,
    stream: u64,
) -> PyResult<Bound<'py, PyAny>> {
    let mut rng = idisi::StreamKey::new(seed, idisi::Domain::User).stream(stream);
    let t = idisi::transmit(&codeword, &cir.inner, sigma_z2, &mut rng).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("input", t.input)?;
    d.set_item("convolved", t.convolved)?;
    d.set_item("output", t.output)?;
    Ok(d.into_any())
}

#[pyfunction]
fn decoding_measure(y: Vec<f64>, c_h: Vec<f64>, sigma_z2: f64) -> PyResult<f64> {
    idisi::decoding_measure(&y, &c_h, sigma_z2).map_err(err)
}

/// Returns `(accepted, T)`.
#[pyfunction]
fn identify(y: Vec<f64>, c_h: Vec<f64>, delta_n: f64, sigma_z2: f64) -> PyResult<(bool, f64)> {
    let cfg = idisi::DecoderConfig::new(delta_n, sigma_z2).map_err(err)?;
    let d = idisi::identify(&y, &c_h, &cfg).map_err(err)?;
    Ok((d.accepted(), d.measure))
}

#[pyfunction]
fn achievability_parameters<'py>(
    py: Python<'py>,
    params: &PyParams,
    h_min: f64,
    k: usize,
) -> PyResult<Bound<'py, PyAny>> {
    to_dict(
        py,
        &idisi::achievability_parameters(&params.inner, h_min, k).map_err(err)?,
    )
}

#[pyfunction]
fn capacity_interval(kappa: f64) -> PyResult<(f64, f64)> {
    idisi::capacity_interval(kappa).map_err(err)
}

#[pyfunction]
fn error_probability_bounds<'py>(
    py: Python<'py>,
    params: &PyParams,
    h_min: f64,
    l: f64,
    k: usize,
) -> PyResult<Bound<'py, PyAny>> {
    to_dict(
        py,
        &idisi::error_probability_bounds(&params.inner, h_min, l, k).map_err(err)?,
    )
}

#[pyfunction]
fn sphere_log_volume(dim: usize, r: f64) -> f64 {
    idisi::sphere_log_volume(dim, r)
}

#[pyfunction]
fn counting_bounds<'py>(
    py: Python<'py>,
    params: &PyParams,
    h_min: f64,
    l: f64,
    k: usize,
) -> PyResult<Bound<'py, PyAny>> {
    to_dict(py, &idisi::counting_bounds(&params.inner, h_min, l, k).map_err(err)?)
}

/// Flat dict of every closed-form quantity, as printed by `idisi bounds`.
#[pyfunction]
fn bounds<'py>(py: Python<'py>, params: &PyParams, cir: &PyCir) -> PyResult<Bound<'py, PyAny>> {
    let rep =
        idisi::bounds::bounds_report(&params.inner, &cir.inner, idisi::cir::DEFAULT_H_MIN_TOLERANCE).map_err(err)?;
    to_dict(py, &rep)
}

#[pyfunction]
#[pyo3(signature = (n, p_max, r0, budget=100_000, seed=0, strategy="greedy-uniform"))]
fn greedy_pack(
    py: Python<'_>,
    n: usize,
    p_max: f64,
    r0: f64,
    budget: usize,
    seed: u64,
    strategy: &str,
) -> PyResult<PyCodebook> {
    let strategy: PackingStrategy = strategy.parse().map_err(err)?;
    let cfg = PackingConfig {
        strategy,
        candidate_budget: budget,
        seed,
    };
    let inner = py.detach(|| idisi::codebook::pack(n, p_max, r0, &cfg)).map_err(err)?;
    Ok(PyCodebook { inner })
}

#[pyfunction]
fn stress_pair(n: usize, p_max: f64, r0: f64) -> PyResult<PyCodebook> {
    Ok(PyCodebook {
        inner: idisi::stress_pair(n, p_max, r0).map_err(err)?,
    })
}

#[pyfunction]
#[pyo3(signature = (codebook, cir, delta_n, sigma_z2, trials, seed=0))]
fn estimate_type1<'py>(
    py: Python<'py>,
    codebook: &PyCodebook,
    cir: &PyCir,
    delta_n: f64,
    sigma_z2: f64,
    trials: u64,
    seed: u64,
) -> PyResult<Bound<'py, PyAny>> {
    let cfg = idisi::DecoderConfig::new(delta_n, sigma_z2).map_err(err)?;
    let out = py
        .detach(|| idisi::estimate_type1(&codebook.inner, &cir.inner, &cfg, trials, seed))
        .map_err(err)?;
    to_dict(py, &out)
}

#[pyfunction]
#[pyo3(signature = (codebook, cir, delta_n, sigma_z2, trials, pairs=16, exhaustive=false, seed=0))]
#[allow(clippy::too_many_arguments)]
fn estimate_type2<'py>(
    py: Python<'py>,
    codebook: &PyCodebook,
    cir: &PyCir,
    delta_n: f64,
    sigma_z2: f64,
    trials: u64,
    pairs: usize,
    exhaustive: bool,
    seed: u64,
) -> PyResult<Bound<'py, PyAny>> {
    let cfg = idisi::DecoderConfig::new(delta_n, sigma_z2).map_err(err)?;
    let out = py
        .detach(|| idisi::estimate_type2(&codebook.inner, &cir.inner, &cfg, trials, pairs, exhaustive, seed))
        .map_err(err)?;
    to_dict(py, &out)
}

/// Runs one full configuration and returns its sweep row.
#[pyfunction]
#[pyo3(signature = (params, cir="identity", codebook="greedy-uniform", trials=10_000, pairs=16, budget=100_000, seed=0, exhaustive=false))]
#[allow(clippy::too_many_arguments)]
fn simulate<'py>(
    py: Python<'py>,
    params: &PyParams,
    cir: &str,
    codebook: &str,
    trials: u64,
    pairs: usize,
    budget: usize,
    seed: u64,
    exhaustive: bool,
) -> PyResult<Bound<'py, PyAny>> {
    let source = match codebook {
        "stress-pair" => CodebookSource::StressPair,
        s if s.starts_with("file:") => CodebookSource::File(s["file:".len()..].into()),
        s => CodebookSource::Pack(PackingConfig {
            strategy: s.parse().map_err(err)?,
            candidate_budget: budget,
            seed,
        }),
    };
    let config = TrialConfig {
        params: params.inner,
        cir: cir.parse().map_err(err)?,
        codebook: source,
        trials,
        pair_sample: pairs,
        seed,
        exhaustive,
    };
    let row = py.detach(|| idisi::run_trial(&config)).map_err(err)?;
    to_dict(py, &row)
}

#[pymodule]
#[pyo3(name = "idisi")]
fn idisi_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyCir>()?;
    m.add_class::<PyParams>()?;
    m.add_class::<PyCodebook>()?;
    m.add_function(wrap_pyfunction!(taps_count, m)?)?;
    m.add_function(wrap_pyfunction!(compute_h_min, m)?)?;
    m.add_function(wrap_pyfunction!(validate_cir, m)?)?;
    m.add_function(wrap_pyfunction!(convolve, m)?)?;
    m.add_function(wrap_pyfunction!(transmit, m)?)?;
    m.add_function(wrap_pyfunction!(decoding_measure, m)?)?;
    m.add_function(wrap_pyfunction!(identify, m)?)?;
    m.add_function(wrap_pyfunction!(achievability_parameters, m)?)?;
    m.add_function(wrap_pyfunction!(capacity_interval, m)?)?;
    m.add_function(wrap_pyfunction!(error_probability_bounds, m)?)?;
    m.add_function(wrap_pyfunction!(sphere_log_volume, m)?)?;
    m.add_function(wrap_pyfunction!(counting_bounds, m)?)?;
    m.add_function(wrap_pyfunction!(bounds, m)?)?;
    m.add_function(wrap_pyfunction!(greedy_pack, m)?)?;
    m.add_function(wrap_pyfunction!(stress_pair, m)?)?;
    m.add_function(wrap_pyfunction!(estimate_type1, m)?)?;
    m.add_function(wrap_pyfunction!(estimate_type2, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    Ok(())
}
