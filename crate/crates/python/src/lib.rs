//! Python bindings: metrics, scoring, probing, sampling, dataset building
//! and recommender training/inference.

use std::collections::BTreeMap;

use embedscope_core::dataset::{self, BuildConfig};
use embedscope_core::learners::{self, Kind, LearnerConfig, SplitSpec, TrainedRecommender};
use embedscope_core::metrics::{metric_vector, MetricConfig, MmdConfig};
use embedscope_core::probe::{train_probe, ProbeConfig};
use embedscope_core::sampler::{stratified_resample as resample, SamplerConfig};
use embedscope_core::tensor_io::{load_set, Manifest};
use embedscope_core::{scoring, EmbeddingMatrix, EmbeddingSet, Error, LabelVector, MetricVector, FEATURE_NAMES};
use pyo3::exceptions::{PyIOError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Io { .. } => PyIOError::new_err(e.to_string()),
        e if e.is_input_error() => PyValueError::new_err(e.to_string()),
        e => PyRuntimeError::new_err(e.to_string()),
    }
}

trait OrPy<T> {
    fn py(self) -> PyResult<T>;
}

impl<T> OrPy<T> for Result<T, Error> {
    fn py(self) -> PyResult<T> {
        self.map_err(to_py)
    }
}

fn features_dict(mv: &MetricVector) -> BTreeMap<&'static str, f64> {
    FEATURE_NAMES.iter().copied().zip(mv.to_array()).collect()
}

fn set_from_rows(
    train: Vec<Vec<f64>>,
    test: Vec<Vec<f64>>,
    train_labels: Vec<u8>,
    test_labels: Vec<u8>,
) -> PyResult<EmbeddingSet> {
    EmbeddingSet::new(
        "python",
        "python",
        EmbeddingMatrix::from_rows(&train).py()?,
        EmbeddingMatrix::from_rows(&test).py()?,
        LabelVector::new(train_labels).py()?,
        LabelVector::new(test_labels).py()?,
    )
    .py()
}

/// The thirteen metrics of a train/test pair of embedding matrices.
#[pyfunction]
#[pyo3(signature = (train, test, seed = 0))]
fn metrics(train: Vec<Vec<f64>>, test: Vec<Vec<f64>>, seed: u64) -> PyResult<BTreeMap<&'static str, f64>> {
    let train_m = EmbeddingMatrix::from_rows(&train).py()?;
    let test_m = EmbeddingMatrix::from_rows(&test).py()?;
    let cfg = MetricConfig {
        mmd: MmdConfig { seed, ..MmdConfig::default() },
        ..MetricConfig::default()
    };
    let all = train_m.vstack(&test_m).py()?;
    let mv = MetricVector::from_parts(
        embedscope_core::metrics::statistics(&all).py()?,
        embedscope_core::metrics::norms(&all, &cfg.norms),
        embedscope_core::metrics::mmd(&train_m, &test_m, &cfg.mmd).py()?,
        embedscope_core::metrics::dot_product(&train_m, &test_m).py()?,
    );
    Ok(features_dict(&mv))
}

/// Metrics of the embedding set described by a manifest file.
#[pyfunction]
fn manifest_metrics(path: &str) -> PyResult<BTreeMap<&'static str, f64>> {
    let set = load_set(&Manifest::load(path).py()?).py()?;
    Ok(features_dict(&metric_vector(&set, &MetricConfig::default()).py()?))
}

#[pyfunction]
fn roc_auc(scores: Vec<f64>, labels: Vec<u8>) -> PyResult<f64> {
    scoring::roc_auc(&scores, &labels).py()
}

/// Train the logistic probe; returns auc, accuracy, f1, mcc and the
/// per-repeat AUCs.
#[pyfunction]
#[pyo3(signature = (train, test, train_labels, test_labels, epochs = 50, learning_rate = 0.01, batch_size = 128, repeats = 1, seed = 0))]
#[allow(clippy::too_many_arguments)]
fn probe(
    py: Python<'_>,
    train: Vec<Vec<f64>>,
    test: Vec<Vec<f64>>,
    train_labels: Vec<u8>,
    test_labels: Vec<u8>,
    epochs: usize,
    learning_rate: f64,
    batch_size: usize,
    repeats: usize,
    seed: u64,
) -> PyResult<Py<PyAny>> {
    let set = set_from_rows(train, test, train_labels, test_labels)?;
    let cfg = ProbeConfig {
        epochs,
        learning_rate,
        batch_size,
        repeats,
        seed,
        ..ProbeConfig::default()
    };
    let r = train_probe(&set, &cfg).py()?;
    let d = pyo3::types::PyDict::new(py);
    d.set_item("auc", r.auc)?;
    d.set_item("accuracy", r.accuracy)?;
    d.set_item("f1", r.f1)?;
    d.set_item("mcc", r.mcc)?;
    d.set_item("per_repeat_auc", r.per_repeat_auc)?;
    Ok(d.into_any().unbind())
}

#[pyfunction]
fn label_by_rank(aucs: Vec<(String, f64)>, top_k: usize) -> Vec<(String, u8)> {
    dataset::label_by_rank(&aucs, top_k)
}

#[pyfunction]
fn stratified_resample(labels: Vec<u8>, size: usize, seed: u64) -> PyResult<Vec<usize>> {
    resample(&LabelVector::new(labels).py()?, size, seed).py()
}

/// Build the recommendation dataset from manifest files and return it as
/// CSV text.
#[pyfunction]
#[pyo3(signature = (manifests, n_samples = 200, top_k = 3, train_size = 2000, test_size = 500, seed = 0))]
fn build_dataset(
    py: Python<'_>,
    manifests: Vec<String>,
    n_samples: usize,
    top_k: usize,
    train_size: usize,
    test_size: usize,
    seed: u64,
) -> PyResult<String> {
    let loaded = manifests
        .iter()
        .map(Manifest::load)
        .collect::<Result<Vec<_>, _>>()
        .py()?;
    let cfg = BuildConfig {
        n_samples,
        top_k,
        seed,
        sampler: SamplerConfig { train_size, test_size },
        ..BuildConfig::default()
    };
    let built = py.detach(|| dataset::build(&loaded, &cfg)).py()?;
    let bytes = dataset::to_csv_bytes(&built.dataset).py()?;
    String::from_utf8(bytes).map_err(|e| PyRuntimeError::new_err(e.to_string()))
}

/// (model, accuracy, f1, auc, mcc)
type ReportTuple = (String, f64, f64, f64, f64);

/// Fit all five classifiers on a group split of a recommendation dataset
/// CSV and score them on the test partition.
#[pyfunction]
#[pyo3(signature = (dataset_csv, seed = 0))]
fn evaluate(py: Python<'_>, dataset_csv: &str, seed: u64) -> PyResult<Vec<ReportTuple>> {
    let ds = dataset::load_csv(dataset_csv).py()?;
    let spec = SplitSpec { seed, ..SplitSpec::default() };
    let report = py.detach(|| learners::evaluate_all(&ds, &spec, &LearnerConfig::default())).py()?;
    Ok(report
        .rows
        .iter()
        .map(|r| (r.kind.to_string(), r.accuracy, r.f1, r.auc, r.mcc))
        .collect())
}

fn metric_vectors(rows: &[Vec<f64>]) -> PyResult<Vec<MetricVector>> {
    rows.iter().map(|r| MetricVector::from_slice(r).py()).collect()
}

/// A trained PTM recommender.
#[pyclass(name = "Recommender", module = "embedscope")]
struct PyRecommender {
    inner: TrainedRecommender,
}

#[pymethods]
impl PyRecommender {
    /// Fit `kind` (lr, rf, nb, dt, knn) on rows of the thirteen features.
    #[staticmethod]
    #[pyo3(signature = (kind, features, labels, seed = 0))]
    fn fit(py: Python<'_>, kind: &str, features: Vec<Vec<f64>>, labels: Vec<u8>, seed: u64) -> PyResult<Self> {
        let kind: Kind = kind.parse().py()?;
        metric_vectors(&features)?;
        let mut cfg = LearnerConfig::default();
        cfg.forest.seed = seed;
        cfg.logistic.seed = seed;
        let names = FEATURE_NAMES.iter().map(|s| s.to_string()).collect();
        let inner = py.detach(|| learners::fit_rows(kind, &features, &labels, names, &cfg)).py()?;
        Ok(Self { inner })
    }

    /// Fit on the training partition of a recommendation dataset CSV.
    #[staticmethod]
    #[pyo3(signature = (kind, dataset_csv, seed = 0))]
    fn fit_csv(py: Python<'_>, kind: &str, dataset_csv: &str, seed: u64) -> PyResult<Self> {
        let kind: Kind = kind.parse().py()?;
        let ds = dataset::load_csv(dataset_csv).py()?;
        let train = learners::split(&ds, &SplitSpec { seed, ..SplitSpec::default() }).py()?.train;
        let mut cfg = LearnerConfig::default();
        cfg.forest.seed = seed;
        cfg.logistic.seed = seed;
        let inner = py.detach(|| learners::fit(kind, &train, &cfg)).py()?;
        Ok(Self { inner })
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        Ok(Self {
            inner: TrainedRecommender::load(path).py()?,
        })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(Self {
            inner: TrainedRecommender::from_json(text).py()?,
        })
    }

    fn to_json(&self) -> PyResult<String> {
        self.inner.to_json().py()
    }

    fn save(&self, path: &str) -> PyResult<()> {
        self.inner.save(path).py()
    }

    #[getter]
    fn kind(&self) -> String {
        self.inner.kind.to_string()
    }

    fn predict_proba(&self, features: Vec<Vec<f64>>) -> PyResult<Vec<f64>> {
        self.inner.predict_proba(&metric_vectors(&features)?).py()
    }

    /// Rank `(ptm_id, features)` candidates; returns
    /// `(rank, ptm_id, score, recommended)` tuples, best first.
    #[pyo3(signature = (candidates, top_k = 3))]
    fn recommend(&self, candidates: Vec<(String, Vec<f64>)>, top_k: usize) -> PyResult<Vec<(usize, String, f64, bool)>> {
        let cands = candidates
            .into_iter()
            .map(|(id, f)| Ok((id, MetricVector::from_slice(&f).py()?)))
            .collect::<PyResult<Vec<_>>>()?;
        Ok(learners::recommend(&self.inner, &cands, top_k)
            .py()?
            .into_iter()
            .map(|r| (r.rank, r.ptm_id, r.score, r.recommended))
            .collect())
    }

    fn __repr__(&self) -> String {
        format!("Recommender(kind={})", self.inner.kind)
    }
}

#[pymodule]
fn embedscope(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("FEATURE_NAMES", FEATURE_NAMES.to_vec())?;
    m.add_function(wrap_pyfunction!(metrics, m)?)?;
    m.add_function(wrap_pyfunction!(manifest_metrics, m)?)?;
    m.add_function(wrap_pyfunction!(roc_auc, m)?)?;
    m.add_function(wrap_pyfunction!(probe, m)?)?;
    m.add_function(wrap_pyfunction!(label_by_rank, m)?)?;
    m.add_function(wrap_pyfunction!(stratified_resample, m)?)?;
    m.add_function(wrap_pyfunction!(build_dataset, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate, m)?)?;
    m.add_class::<PyRecommender>()?;
    Ok(())
}
