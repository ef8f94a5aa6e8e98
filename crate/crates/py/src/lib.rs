//! Python bindings. Rationals cross the boundary as strings (`"3/2"`), which
//! `fractions.Fraction` accepts directly; weights may also be given as ints.

use std::collections::{BTreeMap, BTreeSet};

use ample_cone::certify::{build_certificate, certificate_to_json, verify_json};
use ample_cone::cone::{ample_check, epsilon_max, nef_check, ConeReport};
use ample_cone::datum::{EmbeddingId, ShimuraDatum, Signature};
use ample_cone::hasse::{
    hasse_inverse_closed_form, hasse_matrix, lambda_coefficients, HasseMatrix,
};
use ample_cone::strata::{classify_stratum, describe, StratumDescriptor};
use ample_cone::{rational, CoreError, WeightTuple};
use pyo3::create_exception;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

create_exception!(ample_cone_py, AmpleConeError, PyValueError);

fn err(e: CoreError) -> PyErr {
    AmpleConeError::new_err(e.to_string())
}

/// Builds a datum from `(name, signature digits)` rows.
pub fn datum_from_rows(p: u64, blocks: Vec<(String, Vec<u8>)>) -> Result<ShimuraDatum, CoreError> {
    let rows = blocks
        .into_iter()
        .map(|(name, digits)| {
            let row = digits
                .into_iter()
                .map(Signature::from_digit)
                .collect::<Result<Vec<_>, _>>()?;
            Ok((name, row))
        })
        .collect::<Result<Vec<_>, CoreError>>()?;
    ShimuraDatum::new(p, rows)
}

/// Parses `{"p1.1": "3/2", ...}` into a weight tuple.
pub fn weights_from_strings(
    datum: &ShimuraDatum,
    weights: &BTreeMap<String, String>,
) -> Result<WeightTuple, CoreError> {
    let mut map = BTreeMap::new();
    for (k, v) in weights {
        map.insert(datum.parse_token(k)?, rational::parse(v)?);
    }
    WeightTuple::new(datum, map)
}

fn stratum_from_tokens(
    datum: &ShimuraDatum,
    tokens: &[String],
) -> Result<BTreeSet<EmbeddingId>, CoreError> {
    tokens.iter().map(|t| datum.parse_token(t)).collect()
}

fn matrix_rows(h: &HasseMatrix) -> Vec<Vec<String>> {
    h.matrix
        .to_rows()
        .iter()
        .map(|r| r.iter().map(rational::format).collect())
        .collect()
}

/// Accepts `str` or `int` values.
fn extract_weights(weights: &Bound<'_, pyo3::types::PyDict>) -> PyResult<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (k, v) in weights.iter() {
        out.insert(k.extract::<String>()?, v.str()?.to_string());
    }
    Ok(out)
}

#[pyclass(name = "Datum", frozen, eq)]
#[derive(PartialEq)]
struct PyDatum {
    inner: ShimuraDatum,
}

impl PyDatum {
    fn weights(&self, weights: &Bound<'_, pyo3::types::PyDict>) -> PyResult<WeightTuple> {
        weights_from_strings(&self.inner, &extract_weights(weights)?).map_err(err)
    }

    fn tokens(&self, set: &BTreeSet<EmbeddingId>) -> Vec<String> {
        set.iter().map(|t| self.inner.token(*t)).collect()
    }

    fn report(&self, r: ConeReport) -> (bool, Vec<String>) {
        let violated = r.violations().map(|c| c.render(&self.inner)).collect();
        (r.holds, violated)
    }
}

#[pymethods]
impl PyDatum {
    #[new]
    fn new(p: u64, blocks: Vec<(String, Vec<u8>)>) -> PyResult<Self> {
        datum_from_rows(p, blocks)
            .map(|inner| PyDatum { inner })
            .map_err(err)
    }

    #[staticmethod]
    fn hilbert(p: u64, f: usize) -> PyResult<Self> {
        ShimuraDatum::hilbert(p, f)
            .map(|inner| PyDatum { inner })
            .map_err(err)
    }

    #[getter]
    fn p(&self) -> u64 {
        self.inner.p()
    }

    fn block_names(&self) -> Vec<String> {
        self.inner
            .blocks()
            .iter()
            .map(|b| b.label.clone())
            .collect()
    }

    /// Signature-1 embeddings in block order.
    fn signature_one(&self) -> Vec<String> {
        self.inner
            .signature_one()
            .into_iter()
            .map(|t| self.inner.token(t))
            .collect()
    }

    fn n_gap(&self, tau: &str) -> PyResult<u32> {
        let t = self.inner.parse_token(tau).map_err(err)?;
        self.inner.n_gap(t).map_err(err)
    }

    fn successor(&self, tau: &str) -> PyResult<String> {
        let t = self.inner.parse_token(tau).map_err(err)?;
        self.inner
            .successor(t)
            .map(|s| self.inner.token(s))
            .map_err(err)
    }

    fn hasse_matrix(&self, block: &str) -> PyResult<Vec<Vec<String>>> {
        let b = self.inner.block_index(block).map_err(err)?;
        hasse_matrix(&self.inner, b)
            .map(|h| matrix_rows(&h))
            .map_err(err)
    }

    fn hasse_inverse(&self, block: &str) -> PyResult<Vec<Vec<String>>> {
        let b = self.inner.block_index(block).map_err(err)?;
        hasse_inverse_closed_form(&self.inner, b)
            .map(|h| matrix_rows(&h))
            .map_err(err)
    }

    fn lambda_coefficients(
        &self,
        block: &str,
        weights: &Bound<'_, pyo3::types::PyDict>,
    ) -> PyResult<BTreeMap<String, String>> {
        let b = self.inner.block_index(block).map_err(err)?;
        let t = self.weights(weights)?;
        let lambda =
            lambda_coefficients(&self.inner, b, &t.block_values(&self.inner, b)).map_err(err)?;
        Ok(lambda
            .coefficients
            .iter()
            .map(|(k, v)| (self.inner.token(*k), rational::format(v)))
            .collect())
    }

    /// `(holds, violated constraints rendered as text)`.
    fn ample_check(
        &self,
        weights: &Bound<'_, pyo3::types::PyDict>,
    ) -> PyResult<(bool, Vec<String>)> {
        let t = self.weights(weights)?;
        ample_check(&self.inner, &t)
            .map(|r| self.report(r))
            .map_err(err)
    }

    fn nef_check(&self, weights: &Bound<'_, pyo3::types::PyDict>) -> PyResult<(bool, Vec<String>)> {
        let t = self.weights(weights)?;
        nef_check(&self.inner, &t)
            .map(|r| self.report(r))
            .map_err(err)
    }

    fn epsilon_max(&self, weights: &Bound<'_, pyo3::types::PyDict>) -> PyResult<String> {
        let t = self.weights(weights)?;
        epsilon_max(&self.inner, &t)
            .map(|e| rational::format(&e))
            .map_err(err)
    }

    /// One of `"empty"`, `"full"`, `"adjacent"`, `"sparse"`.
    fn classify(&self, block: &str, stratum: Vec<String>) -> PyResult<String> {
        let b = self.inner.block_index(block).map_err(err)?;
        let t = stratum_from_tokens(&self.inner, &stratum).map_err(err)?;
        if t.iter().any(|e| e.block != b) {
            return Err(AmpleConeError::new_err("stratum leaves the block"));
        }
        Ok(classify_stratum(&self.inner, b, &t).to_string())
    }

    fn describe(&self, py: Python<'_>, stratum: Vec<String>) -> PyResult<PyStratum> {
        let t = stratum_from_tokens(&self.inner, &stratum).map_err(err)?;
        let d = describe(&self.inner, &t).map_err(err)?;
        PyStratum::from_descriptor(py, self, &d)
    }

    /// Builds a nefness certificate and returns it as JSON.
    fn certify(&self, weights: &Bound<'_, pyo3::types::PyDict>) -> PyResult<String> {
        let t = self.weights(weights)?;
        build_certificate(&self.inner, &t)
            .map(|c| certificate_to_json(&c))
            .map_err(err)
    }

    fn __repr__(&self) -> String {
        let rows: Vec<String> = self
            .inner
            .blocks()
            .iter()
            .enumerate()
            .map(|(i, b)| {
                let digits: String = self
                    .inner
                    .signature_row(i)
                    .iter()
                    .map(|s| s.digit().to_string())
                    .collect();
                format!("{}:{digits}", b.label)
            })
            .collect();
        format!("Datum(p={}, {})", self.inner.p(), rows.join(" "))
    }
}

#[pyclass(name = "Stratum", frozen, get_all)]
struct PyStratum {
    stratum: Vec<String>,
    cycles: Vec<Vec<String>>,
    t_prime: Vec<String>,
    i_t: Vec<String>,
    delta: Vec<String>,
    induced: Py<PyDatum>,
    bundle_rank: usize,
}

impl PyStratum {
    fn from_descriptor(py: Python<'_>, owner: &PyDatum, d: &StratumDescriptor) -> PyResult<Self> {
        let induced = Py::new(
            py,
            PyDatum {
                inner: d.induced.clone(),
            },
        )?;
        Ok(PyStratum {
            stratum: owner.tokens(&d.stratum),
            cycles: d
                .cycles
                .iter()
                .map(|c| c.iter().map(|t| owner.inner.token(*t)).collect())
                .collect(),
            t_prime: owner.tokens(&d.t_prime),
            i_t: owner.tokens(&d.i_t),
            delta: owner.tokens(&d.delta),
            induced,
            bundle_rank: d.bundle_rank(),
        })
    }
}

/// `(passed, checks, first failure)`; malformed documents raise.
#[pyfunction]
fn verify_certificate(text: &str) -> PyResult<(bool, usize, Option<String>)> {
    let v = verify_json(text).map_err(err)?;
    Ok((v.passed, v.checks, v.failure))
}

#[pymodule]
fn ample_cone_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyDatum>()?;
    m.add_class::<PyStratum>()?;
    m.add_function(wrap_pyfunction!(verify_certificate, m)?)?;
    m.add("AmpleConeError", m.py().get_type::<AmpleConeError>())?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rows_and_weights_convert() {
        let d = datum_from_rows(2, vec![("p1".into(), vec![1, 1])]).unwrap();
        let w = BTreeMap::from([
            ("p1.1".to_string(), "1".to_string()),
            ("p1.2".to_string(), "3/2".to_string()),
        ]);
        let t = weights_from_strings(&d, &w).unwrap();
        assert_eq!(
            t.block_values(&d, 0),
            vec![rational::int(1), rational::frac(3, 2)]
        );
        assert!(datum_from_rows(2, vec![("p1".into(), vec![3])]).is_err());
        let bad = BTreeMap::from([("p1.9".to_string(), "1".to_string())]);
        assert!(weights_from_strings(&d, &bad).is_err());
    }
}
