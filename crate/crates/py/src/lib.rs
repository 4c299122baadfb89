//! Python bindings: `import permfsk`.
//!
//! Codewords cross the boundary as lists of 1-based symbols; frames as a
//! list of per-slot tone lists. Message indices are 0-based, as in Rust.

use std::time::Duration;

use permfsk_core::channel::{self, ChannelScenario, LinkBudget};
use permfsk_core::codec::{self, DecisionKind, DemodFrame};
use permfsk_core::modem;
use permfsk_core::permcode::{self, Budget, CodeBook, Codeword};
use permfsk_core::sim::{self, Experiment, PointResult};
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn py_err(e: permfsk_core::Error) -> PyErr {
    use permfsk_core::Error::*;
    match e {
        InvalidArgument(_) | UndefinedDistance(_) | Capacity { .. } | Parse { .. } => {
            PyValueError::new_err(e.to_string())
        }
        Overflow(_) => PyRuntimeError::new_err(e.to_string()),
    }
}

fn word(symbols: Vec<u8>) -> PyResult<Codeword> {
    Codeword::new(symbols).map_err(py_err)
}

// Plain ints on the Python side; a Vec<u8> would come back as bytes.
fn symbols(w: &Codeword) -> Vec<u32> {
    w.symbols().iter().map(|&s| s as u32).collect()
}

#[pyclass(name = "CodeBook", module = "permfsk", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyCodeBook {
    inner: CodeBook,
}

#[pymethods]
impl PyCodeBook {
    /// Builds a codebook from 1-based words; `keep_order` preserves message numbering.
    #[new]
    #[pyo3(signature = (words, keep_order = false))]
    fn new(words: Vec<Vec<u8>>, keep_order: bool) -> PyResult<Self> {
        let m = words.first().map_or(0, Vec::len);
        let words = words.into_iter().map(word).collect::<PyResult<Vec<_>>>()?;
        let inner = if keep_order {
            CodeBook::with_order(m, words)
        } else {
            CodeBook::new(m, words)
        }
        .map_err(py_err)?;
        Ok(PyCodeBook { inner })
    }

    #[staticmethod]
    fn from_text(text: &str) -> PyResult<Self> {
        Ok(PyCodeBook {
            inner: CodeBook::from_text(text).map_err(py_err)?,
        })
    }

    /// One of "example4", "table1", "table2-d2", "table2-d3".
    #[staticmethod]
    fn canned(name: &str) -> PyResult<Self> {
        let inner = match name {
            "example4" => permcode::example_code_m4(),
            "table1" => permcode::table1_code(),
            "table2-d2" => permcode::table2_codes().0,
            "table2-d3" => permcode::table2_codes().1,
            _ => return Err(PyValueError::new_err(format!("unknown canned code {name:?}"))),
        };
        Ok(PyCodeBook { inner })
    }

    fn to_text(&self) -> String {
        self.inner.to_text()
    }

    #[getter]
    fn m(&self) -> usize {
        self.inner.m()
    }

    #[getter]
    fn d_min(&self) -> Option<usize> {
        self.inner.d_min()
    }

    #[getter]
    fn words(&self) -> Vec<Vec<u32>> {
        self.inner.words().iter().map(symbols).collect()
    }

    fn encode(&self, message: usize) -> PyResult<Vec<u32>> {
        Ok(symbols(permcode::encode(message, &self.inner).map_err(py_err)?))
    }

    /// Max-agreement decision for a frame given as per-slot tone lists.
    fn decode(&self, frame: Vec<Vec<usize>>) -> PyResult<PyDecision> {
        let lists: Vec<&[usize]> = frame.iter().map(Vec::as_slice).collect();
        let frame = DemodFrame::from_lists(&lists).map_err(py_err)?;
        let d = codec::decode_max_agreement(&frame, &self.inner).map_err(py_err)?;
        Ok(PyDecision {
            kind: match d.kind {
                DecisionKind::Unique => "unique",
                DecisionKind::Tie => "tie",
                DecisionKind::Empty => "empty",
            },
            message: d.message,
            candidates: d.candidates,
            score: d.score,
        })
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        let d = self.inner.d_min().map_or("-".to_string(), |d| d.to_string());
        format!("CodeBook(M={}, d_min={d}, size={})", self.inner.m(), self.inner.len())
    }
}

#[pyclass(name = "Decision", module = "permfsk", frozen, get_all)]
struct PyDecision {
    kind: &'static str,
    message: Option<usize>,
    candidates: Vec<usize>,
    score: usize,
}

#[pymethods]
impl PyDecision {
    fn __repr__(&self) -> String {
        let message = self.message.map_or("None".to_string(), |m| m.to_string());
        format!(
            "Decision(kind={:?}, message={message}, candidates={:?}, score={})",
            self.kind, self.candidates, self.score
        )
    }
}

#[pyclass(name = "SearchReport", module = "permfsk", frozen, get_all)]
struct PySearchReport {
    code: PyCodeBook,
    size: usize,
    upper_bound: u128,
    proven_optimal: bool,
    nodes_explored: u64,
    seconds: f64,
}

#[pymethods]
impl PySearchReport {
    fn __repr__(&self) -> String {
        format!(
            "SearchReport(size={}, upper_bound={}, proven_optimal={})",
            self.size, self.upper_bound, self.proven_optimal
        )
    }
}

#[pyfunction]
fn cardinality_bound(m: usize, d: usize) -> PyResult<u128> {
    permcode::cardinality_bound(m, d).map_err(py_err)
}

#[pyfunction]
fn hamming_distance(a: Vec<u8>, b: Vec<u8>) -> PyResult<usize> {
    permcode::hamming_distance(&word(a)?, &word(b)?).map_err(py_err)
}

/// Exact search; without limits it runs until optimality is proven.
#[pyfunction]
#[pyo3(signature = (m, d, max_seconds = None, max_nodes = None))]
fn search_max_code(
    py: Python<'_>,
    m: usize,
    d: usize,
    max_seconds: Option<f64>,
    max_nodes: Option<u64>,
) -> PyResult<PySearchReport> {
    let mut budget = Budget::unlimited();
    if let Some(s) = max_seconds {
        if !(s > 0.0 && s.is_finite()) {
            return Err(PyValueError::new_err("max_seconds must be positive"));
        }
        budget.max_time = Some(Duration::from_secs_f64(s));
    }
    budget.max_nodes = max_nodes;
    let r = py
        .detach(|| permcode::search_max_code(m, d, budget))
        .map_err(py_err)?;
    Ok(PySearchReport {
        size: r.size,
        upper_bound: r.upper_bound,
        proven_optimal: r.proven_optimal,
        nodes_explored: r.nodes_explored,
        seconds: r.time_spent.as_secs_f64(),
        code: PyCodeBook { inner: r.best_code },
    })
}

/// Symbol duration, tone spacing and bandwidth for an FSK design.
#[pyfunction]
#[pyo3(signature = (m, bit_rate, code_size, f0 = 0.0))]
fn modem_params<'py>(
    py: Python<'py>,
    m: usize,
    bit_rate: f64,
    code_size: usize,
    f0: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let p = modem::derive_params(m, bit_rate, code_size, f0).map_err(py_err)?;
    let out = PyDict::new(py);
    out.set_item("symbol_duration", p.symbol_duration)?;
    out.set_item("tone_spacing", p.tone_spacing)?;
    out.set_item("bandwidth", p.bandwidth())?;
    out.set_item("bandwidth_efficiency", p.bandwidth_efficiency())?;
    Ok(out)
}

#[pyfunction]
fn insertion_deletion_prob_approx(snr: f64) -> f64 {
    modem::insertion_deletion_prob_approx(snr)
}

/// Lower bound on SNR in dB for a signal bandwidth in kHz.
#[pyfunction]
#[pyo3(signature = (bandwidth_khz, power_w = 25.0, length_m = 500.0))]
fn snr_lower_bound_db(bandwidth_khz: f64, power_w: f64, length_m: f64) -> PyResult<f64> {
    let lb = LinkBudget {
        s_in: power_w,
        distance_m: length_m,
        ..LinkBudget::default()
    };
    Ok(channel::to_db(lb.snr_lower_bound(bandwidth_khz).map_err(py_err)?))
}

/// Applies a JSON scenario to a transmitted word and returns the detector frame.
#[pyfunction]
fn apply_scenario(tx: Vec<u8>, scenario_json: &str) -> PyResult<Vec<Vec<usize>>> {
    let s = ChannelScenario::from_json(scenario_json).map_err(py_err)?;
    Ok(channel::apply_scenario_symbolic(&word(tx)?, &s)
        .map_err(py_err)?
        .to_lists())
}

fn point_dict<'py>(py: Python<'py>, r: &PointResult) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("snr_db", r.snr_db)?;
    d.set_item("noise_psd", r.noise_psd)?;
    d.set_item("trials", r.counts.trials)?;
    d.set_item("slots", r.counts.slots)?;
    d.set_item("insertions", r.counts.insertions)?;
    d.set_item("deletions", r.counts.deletions)?;
    d.set_item("word_errors", r.counts.word_errors)?;
    d.set_item("ties", r.counts.ties)?;
    d.set_item("insertion_rate", r.insertion_rate)?;
    d.set_item("deletion_rate", r.deletion_rate)?;
    d.set_item("combined_rate", r.combined_rate)?;
    d.set_item("approx_rate", r.approx_rate)?;
    d.set_item("word_error_rate", r.word_error_rate)?;
    d.set_item("tie_rate", r.tie_rate)?;
    Ok(d)
}

/// Seeded Monte Carlo sweep; one dict per SNR point.
#[pyfunction]
#[pyo3(signature = (code, snr_db, trials, seed = 1, scenario_json = None, noise_margin = 0.0))]
fn simulate<'py>(
    py: Python<'py>,
    code: &PyCodeBook,
    snr_db: Vec<f64>,
    trials: u64,
    seed: u64,
    scenario_json: Option<&str>,
    noise_margin: f64,
) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let scenario = match scenario_json {
        Some(s) => ChannelScenario::from_json(s).map_err(py_err)?,
        None => ChannelScenario::clean(),
    };
    let mut exp = Experiment::new(code.inner.clone(), scenario, trials, seed);
    exp.snr_db = snr_db;
    exp.noise_margin = noise_margin;
    let rows = py.detach(|| exp.run()).map_err(py_err)?;
    rows.iter().map(|r| point_dict(py, r)).collect()
}

/// Exhaustively checks decoding under every pattern of up to `max_events` events.
#[pyfunction]
fn verify_correction_radius<'py>(
    py: Python<'py>,
    code: &PyCodeBook,
    max_events: usize,
) -> PyResult<Bound<'py, PyDict>> {
    let r = sim::verify_correction_radius(&code.inner, max_events).map_err(py_err)?;
    let d = PyDict::new(py);
    d.set_item("cases", r.cases)?;
    d.set_item("failures", r.failures)?;
    Ok(d)
}

#[pymodule]
fn permfsk(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyCodeBook>()?;
    m.add_class::<PyDecision>()?;
    m.add_class::<PySearchReport>()?;
    m.add_function(wrap_pyfunction!(cardinality_bound, m)?)?;
    m.add_function(wrap_pyfunction!(hamming_distance, m)?)?;
    m.add_function(wrap_pyfunction!(search_max_code, m)?)?;
    m.add_function(wrap_pyfunction!(modem_params, m)?)?;
    m.add_function(wrap_pyfunction!(insertion_deletion_prob_approx, m)?)?;
    m.add_function(wrap_pyfunction!(snr_lower_bound_db, m)?)?;
    m.add_function(wrap_pyfunction!(apply_scenario, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(verify_correction_radius, m)?)?;
    Ok(())
}
