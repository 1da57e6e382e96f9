//! Python bindings. Enclosures come back as `(estimate, radius)` with the estimate as a decimal string.

use ellipsephic_core::counting::CountError;
use ellipsephic_core::evaluator::{self, default_depth, format_float, ApproxValue, EvalError, TableParams};
use ellipsephic_core::numeral::{count_occurrences_naive, NumeralError};
use ellipsephic_core::{cli, derive_bw, Block, CountConstraint, CountTable, Method};
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;
use rug::Integer;

pyo3::create_exception!(ellipsephic, CertificationError, PyRuntimeError);

fn numeral_err(e: NumeralError) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn eval_err(e: EvalError) -> PyErr {
    match e {
        EvalError::Count(c @ CountError::CertificationFailure { .. }) => CertificationError::new_err(c.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn block(base: u32, digits: &str) -> PyResult<Block> {
    Block::parse(base, digits).map_err(numeral_err)
}

fn method(name: &str) -> PyResult<Method> {
    match name {
        "accel" => Ok(Method::Accelerated),
        "brute" => Ok(Method::Brute),
        other => Err(PyValueError::new_err(format!("unknown method {other:?}"))),
    }
}

fn pair(v: &ApproxValue) -> (String, f64) {
    (format_float(&v.estimate), v.radius)
}

fn py_int<'py>(py: Python<'py>, n: &Integer) -> PyResult<Bound<'py, PyAny>> {
    py.import("builtins")?.getattr("int")?.call1((n.to_string(),))
}

/// Factored form of `b_w(n)`.
#[pyfunction]
fn derive(base: u32, block_digits: &str) -> PyResult<String> {
    Ok(derive_bw(&block(base, block_digits)?).factored())
}

#[pyfunction]
fn derive_json(base: u32, block_digits: &str) -> PyResult<String> {
    Ok(derive_bw(&block(base, block_digits)?).to_json())
}

#[pyfunction]
fn count_occurrences(n: &str, base: u32, block_digits: &str) -> PyResult<u64> {
    let n: Integer = n.parse().map_err(|_| PyValueError::new_err(format!("not an integer: {n:?}")))?;
    if n < 0 {
        return Err(PyValueError::new_err("n must be non-negative"));
    }
    Ok(count_occurrences_naive(&n, &block(base, block_digits)?))
}

#[pyfunction]
#[pyo3(signature = (base, block_digits, k, depth=None, precision=128))]
fn identity_check(base: u32, block_digits: &str, k: u32, depth: Option<u32>, precision: u32) -> PyResult<(String, f64)> {
    let w = block(base, block_digits)?;
    let v = evaluator::identity_check(&w, k, depth.unwrap_or(default_depth(base)), precision).map_err(eval_err)?;
    Ok(pair(&v))
}

#[pyfunction]
#[pyo3(signature = (base, k, depth=None, precision=128))]
fn digitsum_identity_check(base: u32, k: u32, depth: Option<u32>, precision: u32) -> PyResult<(String, f64)> {
    let v = evaluator::digitsum_identity_check(base, k, depth.unwrap_or(default_depth(base)), precision)
        .map_err(eval_err)?;
    Ok(pair(&v))
}

fn family(base: u32, block_digits: Option<&str>) -> PyResult<CountConstraint> {
    Ok(match block_digits {
        Some(s) => CountConstraint::Block(block(base, s)?),
        None => CountConstraint::DigitSum { base },
    })
}

/// Rows of `S(k)` against its limit; omit `block_digits` for the digit-sum family.
#[pyfunction]
#[pyo3(signature = (base, block_digits, k_min, k_max, method_name="accel", depth=None, limit=1_000_000, precision=128))]
#[allow(clippy::too_many_arguments)]
fn limit_table<'py>(
    py: Python<'py>,
    base: u32,
    block_digits: Option<&str>,
    k_min: u32,
    k_max: u32,
    method_name: &str,
    depth: Option<u32>,
    limit: u64,
    precision: u32,
) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let fam = family(base, block_digits)?;
    let params = TableParams {
        method: method(method_name)?,
        depth: depth.unwrap_or(default_depth(base)),
        cutoff: limit,
        prec: precision,
    };
    let rows = py
        .detach(|| evaluator::limit_table(&fam, k_min..=k_max, params))
        .map_err(eval_err)?;
    rows.iter()
        .map(|r| {
            let d = PyDict::new(py);
            d.set_item("k", r.k)?;
            d.set_item("estimate", format_float(&r.sum.estimate))?;
            d.set_item("radius", r.sum.radius)?;
            d.set_item("limit", format_float(&r.limit))?;
            d.set_item("certified_distance", r.certified_distance)?;
            Ok(d)
        })
        .collect()
}

#[pyfunction]
#[pyo3(signature = (base, block_digits, k, method_name="accel", depth=None, limit=1_000_000, precision=128))]
#[allow(clippy::too_many_arguments)]
fn harmonic_sum(
    py: Python<'_>,
    base: u32,
    block_digits: Option<&str>,
    k: u32,
    method_name: &str,
    depth: Option<u32>,
    limit: u64,
    precision: u32,
) -> PyResult<(String, f64)> {
    let row = limit_table(py, base, block_digits, k, k, method_name, depth, limit, precision)?.remove(0);
    Ok((row.get_item("estimate")?.unwrap().extract()?, row.get_item("radius")?.unwrap().extract()?))
}

/// `N(k, d)` for `0 <= k <= max_k`, `1 <= d <= max_d`, indexed `[k][d - 1]`.
#[pyfunction]
#[pyo3(signature = (base, block_digits, max_k, max_d))]
fn count_table<'py>(
    py: Python<'py>,
    base: u32,
    block_digits: Option<&str>,
    max_k: u32,
    max_d: u32,
) -> PyResult<Vec<Vec<Bound<'py, PyAny>>>> {
    let table = CountTable::build(family(base, block_digits)?, max_k, max_d);
    (0..=max_k)
        .map(|k| (1..=max_d).map(|d| py_int(py, table.get(k, d))).collect())
        .collect()
}

/// Runs the command-line interface in-process; returns `(exit_code, stdout, stderr)`.
#[pyfunction]
fn run_cli(py: Python<'_>, args: Vec<String>) -> (i32, String, String) {
    let out = py.detach(|| cli::run(std::iter::once("ellipsephic".to_string()).chain(args)));
    (out.code, out.stdout, out.stderr)
}

#[pymodule]
fn ellipsephic(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("CertificationError", m.py().get_type::<CertificationError>())?;
    m.add_function(wrap_pyfunction!(derive, m)?)?;
    m.add_function(wrap_pyfunction!(derive_json, m)?)?;
    m.add_function(wrap_pyfunction!(count_occurrences, m)?)?;
    m.add_function(wrap_pyfunction!(identity_check, m)?)?;
    m.add_function(wrap_pyfunction!(digitsum_identity_check, m)?)?;
    m.add_function(wrap_pyfunction!(harmonic_sum, m)?)?;
    m.add_function(wrap_pyfunction!(limit_table, m)?)?;
    m.add_function(wrap_pyfunction!(count_table, m)?)?;
    m.add_function(wrap_pyfunction!(run_cli, m)?)?;
    Ok(())
}
