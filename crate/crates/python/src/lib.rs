//! Python bindings: feature extraction, readability baselines, model
//! scoring and the annotation statistics. Documents are passed as strings,
//! either raw text or CoNLL-U.

use std::collections::BTreeMap;

use clarte::baselines::{compute_counts, Baseline};
use clarte::evaluation::{self, BwsDesign, BwsResponse};
use clarte::indicators::{extract_features, Feature};
use clarte::ingest::{parse_conllu, segment_plain_text};
use clarte::models::{comprehension_score, load_model};
use clarte::{Document, FeatureVector, Lexicons, ScoringModel, N_FEATURES};
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

type Rows = Vec<(String, BTreeMap<String, f64>)>;

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

pub fn documents(text: &str, format: &str) -> Result<Vec<Document>, String> {
    match format {
        "text" => Ok(vec![segment_plain_text(text).map_err(err)?]),
        "conllu" => parse_conllu(text.as_bytes()).map_err(err),
        other => Err(format!("unknown format {other:?}; expected \"text\" or \"conllu\"")),
    }
}

pub fn feature_rows(text: &str, format: &str) -> Result<Rows, String> {
    let lexicons = Lexicons::builtin();
    Ok(documents(text, format)?
        .iter()
        .map(|doc| {
            let fv = extract_features(doc, &lexicons).features;
            (doc.id.clone(), Feature::ALL.iter().map(|f| (f.name().to_string(), fv.get(*f))).collect())
        })
        .collect())
}

pub fn baseline_rows(text: &str, format: &str) -> Result<Rows, String> {
    documents(text, format)?
        .iter()
        .map(|doc| {
            let counts = compute_counts(doc).map_err(err)?;
            Ok((doc.id.clone(), Baseline::ALL.iter().map(|b| (b.name().to_string(), b.apply(&counts))).collect()))
        })
        .collect()
}

pub fn bws_scores_jsonl(design: &str, responses: &str) -> Result<BTreeMap<String, f64>, String> {
    let design = BwsDesign::read_jsonl(design.as_bytes()).map_err(err)?;
    let responses: Vec<BwsResponse> = evaluation::read_jsonl(responses.as_bytes()).map_err(err)?;
    evaluation::bws_scores(&design, &responses).map_err(err)
}

fn py<T>(r: Result<T, String>) -> PyResult<T> {
    r.map_err(PyValueError::new_err)
}

/// Per-document indicator values, as `[(doc_id, {name: value})]`.
#[pyfunction]
#[pyo3(signature = (text, format = "text"))]
fn features(text: &str, format: &str) -> PyResult<Rows> {
    py(feature_rows(text, format))
}

/// Per-document FKGL, SMOG and Gunning fog, as `[(doc_id, {name: value})]`.
#[pyfunction]
#[pyo3(signature = (text, format = "text"))]
fn baselines(text: &str, format: &str) -> PyResult<Rows> {
    py(baseline_rows(text, format))
}

#[pyfunction]
fn feature_names() -> Vec<&'static str> {
    Feature::ALL.iter().map(|f| f.name()).collect()
}

/// A trained model loaded from disk.
#[pyclass(frozen)]
struct Model {
    inner: ScoringModel,
}

#[pymethods]
impl Model {
    #[staticmethod]
    fn load(path: std::path::PathBuf) -> PyResult<Model> {
        py(load_model(&path).map_err(err)).map(|inner| Model { inner })
    }

    #[getter]
    fn kind(&self) -> &'static str {
        self.inner.kind.name()
    }

    /// Comprehension scores in [0, 100], as `[(doc_id, score)]`.
    #[pyo3(signature = (text, format = "text"))]
    fn score(&self, text: &str, format: &str) -> PyResult<Vec<(String, f64)>> {
        let lexicons = Lexicons::builtin();
        let docs = py(documents(text, format))?;
        docs.iter()
            .map(|d| py(comprehension_score(&self.inner, d, &lexicons).map_err(err)).map(|s| (s.doc_id, s.score)))
            .collect()
    }

    /// Probability of the simple class for a raw indicator vector.
    fn predict_proba(&self, values: Vec<f64>) -> PyResult<f64> {
        let arr: [f64; N_FEATURES] = values
            .try_into()
            .map_err(|v: Vec<f64>| PyValueError::new_err(format!("expected {N_FEATURES} values, got {}", v.len())))?;
        py(self.inner.predict_proba(&FeatureVector(arr)).map_err(err))
    }
}

/// A best-worst design as JSONL.
#[pyfunction]
#[pyo3(signature = (text_ids, e, k = 3, a = 3, seed = 0))]
fn bws_design(text_ids: Vec<String>, e: usize, k: usize, a: usize, seed: u64) -> PyResult<String> {
    let design = py(evaluation::generate_bws_design(&text_ids, e, k, a, seed).map_err(err))?;
    let mut out = Vec::new();
    design.write_jsonl(&mut out).map_err(|e| PyValueError::new_err(e.to_string()))?;
    Ok(String::from_utf8(out).expect("JSON is UTF-8"))
}

/// Best-worst scores in [-100, 100] from design and response JSONL.
#[pyfunction]
fn bws_scores(design: &str, responses: &str) -> PyResult<BTreeMap<String, f64>> {
    py(bws_scores_jsonl(design, responses))
}

/// Split-half reliability (x100) of best-worst responses.
#[pyfunction]
#[pyo3(signature = (design, responses, iterations = 1000, seed = 0))]
fn split_half_reliability(design: &str, responses: &str, iterations: usize, seed: u64) -> PyResult<f64> {
    let design = py(BwsDesign::read_jsonl(design.as_bytes()).map_err(err))?;
    let responses: Vec<BwsResponse> = py(evaluation::read_jsonl(responses.as_bytes()).map_err(err))?;
    py(evaluation::split_half_reliability(&design, &responses, iterations, seed).map_err(err)).map(|o| o.shr)
}

/// ICC(2,1) of a targets x raters matrix.
#[pyfunction]
fn icc2(ratings: Vec<Vec<f64>>) -> PyResult<f64> {
    py(evaluation::icc2(&ratings).map_err(err))
}

#[pyfunction]
fn spearman(x: Vec<f64>, y: Vec<f64>) -> PyResult<f64> {
    py(evaluation::spearman(&x, &y).map_err(err))
}

#[pymodule]
fn pyclarte(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(features, m)?)?;
    m.add_function(wrap_pyfunction!(feature_names, m)?)?;
    m.add_function(wrap_pyfunction!(baselines, m)?)?;
    m.add_function(wrap_pyfunction!(bws_design, m)?)?;
    m.add_function(wrap_pyfunction!(bws_scores, m)?)?;
    m.add_function(wrap_pyfunction!(split_half_reliability, m)?)?;
    m.add_function(wrap_pyfunction!(icc2, m)?)?;
    m.add_function(wrap_pyfunction!(spearman, m)?)?;
    m.add_class::<Model>()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const TEXT: &str = "Le chat dort sur le tapis. Il fait beau aujourd'hui.";

    #[test]
    fn plain_text_yields_every_indicator() {
        let rows = feature_rows(TEXT, "text").unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].1.len(), N_FEATURES);
        assert!(rows[0].1.values().all(|v| v.is_finite()));
    }

    #[test]
    fn baselines_match_the_core_formulas() {
        let doc = segment_plain_text(TEXT).unwrap();
        let counts = compute_counts(&doc).unwrap();
        let rows = baseline_rows(TEXT, "text").unwrap();
        assert_eq!(rows[0].1["fkgl"], clarte::baselines::fkgl(&counts));
        assert_eq!(rows[0].1.len(), 3);
    }

    #[test]
    fn unknown_format_is_rejected() {
        assert!(documents(TEXT, "pdf").unwrap_err().contains("unknown format"));
    }
}
