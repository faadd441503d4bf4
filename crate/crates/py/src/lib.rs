//! Python bindings: datasets, DRWCC masks, training runs, checkpoints and
//! score reports.

use std::collections::BTreeMap;
use std::path::PathBuf;

use ihards_core::cnn::{repeat_seed as core_repeat_seed, ArchSpec, Checkpoint as CoreCheckpoint, TrainConfig, ARCH_NAMES};
use ihards_core::drwcc::{apply_feature_mask, correlation_matrix, drwcc_prune, FeatureMask as CoreMask};
use ihards_core::integrate::{read_ihds, write_ihds, IhardsDataset};
use ihards_core::metrics::{confusion_matrix, derive_scores, summary_text, Aggregate, ScoreReport};
use ihards_core::pipeline::{split_for_seed, synthetic_dataset, train_eval as core_train_eval, RunResult};
use ihards_core::{ErrorKind, Matrix};
use pyo3::create_exception;
use pyo3::exceptions::PyException;
use pyo3::prelude::*;
use pyo3::types::PyBytes;

create_exception!(ihards, IhardsError, PyException, "Base class for pipeline errors.");
create_exception!(ihards, ConfigError, IhardsError, "Invalid parameter or configuration.");
create_exception!(ihards, DataError, IhardsError, "Unreadable, malformed or inconsistent data.");
create_exception!(ihards, NumericError, IhardsError, "Non-finite values during training or inference.");

fn err(e: ihards_core::Error) -> PyErr {
    let msg = e.to_string();
    match e.kind() {
        ErrorKind::Config => ConfigError::new_err(msg),
        ErrorKind::Data => DataError::new_err(msg),
        ErrorKind::Numeric => NumericError::new_err(msg),
    }
}

trait OrPy<T> {
    fn py(self) -> PyResult<T>;
}

impl<T> OrPy<T> for ihards_core::Result<T> {
    fn py(self) -> PyResult<T> {
        self.map_err(err)
    }
}

/// Labelled feature rows (float32) with class codes 0-4.
#[pyclass(module = "ihards", frozen, skip_from_py_object)]
#[derive(Clone)]
pub struct Dataset {
    inner: IhardsDataset,
}

#[pymethods]
impl Dataset {
    #[new]
    #[pyo3(signature = (features, labels, seed = 0))]
    fn new(features: Vec<Vec<f32>>, labels: Vec<u8>, seed: u64) -> PyResult<Self> {
        let m = if features.is_empty() {
            Matrix::zeros(0, 0)
        } else {
            Matrix::from_rows(&features).py()?
        };
        Ok(Dataset {
            inner: IhardsDataset::new(m, labels, seed).py()?,
        })
    }

    /// Integrated synthetic sources, `per_class` rows per class.
    #[staticmethod]
    #[pyo3(signature = (per_class, sigma = 0.5, seed = 0))]
    fn synthetic(py: Python<'_>, per_class: usize, sigma: f64, seed: u64) -> PyResult<Self> {
        let inner = py.detach(|| synthetic_dataset(per_class, sigma, seed)).py()?;
        Ok(Dataset { inner })
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Ok(Dataset {
            inner: read_ihds(&path).and_then(|c| c.into_dataset(0)).py()?,
        })
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        write_ihds(&path, &self.inner.features, Some(&self.inner.labels)).py()
    }

    #[getter]
    fn rows(&self) -> usize {
        self.inner.rows()
    }

    #[getter]
    fn cols(&self) -> usize {
        self.inner.cols()
    }

    #[getter]
    fn labels(&self) -> Vec<u8> {
        self.inner.labels.clone()
    }

    fn features(&self) -> Vec<Vec<f32>> {
        (0..self.inner.rows()).map(|r| self.inner.features.row(r).to_vec()).collect()
    }

    fn class_counts(&self) -> Vec<usize> {
        self.inner.per_class_counts().to_vec()
    }

    /// Stratified 50/50 split, as used by training with the same seed.
    fn split(&self, seed: u64) -> PyResult<(Dataset, Dataset)> {
        let (a, b) = split_for_seed(&self.inner, seed).py()?;
        Ok((Dataset { inner: a }, Dataset { inner: b }))
    }

    fn __len__(&self) -> usize {
        self.inner.rows()
    }

    fn __repr__(&self) -> String {
        format!("Dataset(rows={}, cols={})", self.inner.rows(), self.inner.cols())
    }
}

#[pyclass(module = "ihards", frozen, skip_from_py_object)]
#[derive(Clone)]
pub struct FeatureMask {
    inner: CoreMask,
}

#[pymethods]
impl FeatureMask {
    #[new]
    fn new(keep: Vec<bool>, threshold: f64) -> PyResult<Self> {
        Ok(FeatureMask {
            inner: CoreMask::new(keep, threshold).py()?,
        })
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Ok(FeatureMask {
            inner: CoreMask::load(&path).py()?,
        })
    }

    #[staticmethod]
    fn parse(text: &str) -> PyResult<Self> {
        Ok(FeatureMask {
            inner: CoreMask::parse(text).py()?,
        })
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        self.inner.save(&path).py()
    }

    fn to_text(&self) -> String {
        self.inner.to_text()
    }

    #[getter]
    fn keep(&self) -> Vec<bool> {
        self.inner.keep().to_vec()
    }

    #[getter]
    fn threshold(&self) -> f64 {
        self.inner.threshold()
    }

    #[getter]
    fn kept_count(&self) -> usize {
        self.inner.kept_count()
    }

    fn kept_indices(&self) -> Vec<usize> {
        self.inner.kept_indices()
    }

    fn apply(&self, data: &Dataset) -> PyResult<Dataset> {
        let d = &data.inner;
        let features = apply_feature_mask(&d.features, &self.inner).py()?;
        Ok(Dataset {
            inner: IhardsDataset::new(features, d.labels.clone(), d.seed_used).py()?,
        })
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!(
            "FeatureMask(kept={}/{}, threshold={})",
            self.inner.kept_count(),
            self.inner.len(),
            self.inner.threshold()
        )
    }
}

/// Greedy keep-first correlation pruning. Fits on the training half of the
/// `seed` split unless `fit_on_all` is set.
#[pyfunction]
#[pyo3(signature = (data, threshold = 0.9, seed = 0, fit_on_all = false))]
fn prune(py: Python<'_>, data: &Dataset, threshold: f64, seed: u64, fit_on_all: bool) -> PyResult<FeatureMask> {
    let d = &data.inner;
    let inner = py
        .detach(|| {
            let corr = if fit_on_all {
                correlation_matrix(&d.features)?
            } else {
                correlation_matrix(&split_for_seed(d, seed)?.0.features)?
            };
            drwcc_prune(&corr, threshold)
        })
        .py()?;
    Ok(FeatureMask { inner })
}

fn aggregate(a: &Aggregate) -> BTreeMap<&'static str, f64> {
    BTreeMap::from([
        ("precision", a.precision),
        ("recall", a.recall),
        ("f1", a.f1),
        ("specificity", a.specificity),
    ])
}

#[pyclass(module = "ihards", frozen, skip_from_py_object)]
#[derive(Clone)]
pub struct Report {
    inner: ScoreReport,
}

#[pymethods]
impl Report {
    #[getter]
    fn accuracy(&self) -> f64 {
        self.inner.accuracy
    }

    #[getter]
    fn loss(&self) -> Option<f64> {
        self.inner.loss
    }

    #[getter]
    fn micro(&self) -> BTreeMap<&'static str, f64> {
        aggregate(&self.inner.micro)
    }

    #[getter(r#macro)]
    fn macro_scores(&self) -> BTreeMap<&'static str, f64> {
        aggregate(&self.inner.macro_avg)
    }

    /// Rows are true classes, columns predicted classes.
    #[getter]
    fn confusion(&self) -> Vec<Vec<u64>> {
        let cm = &self.inner.confusion;
        (0..cm.n_classes()).map(|r| cm.row(r).to_vec()).collect()
    }

    /// Per-class sensitivity, specificity, precision, accuracy and F1.
    fn per_class(&self) -> Vec<BTreeMap<&'static str, f64>> {
        self.inner
            .classes
            .iter()
            .map(|c| {
                BTreeMap::from([
                    ("sensitivity", c.sensitivity),
                    ("specificity", c.specificity),
                    ("precision", c.precision),
                    ("accuracy", c.accuracy),
                    ("f1", c.f1),
                ])
            })
            .collect()
    }

    fn headline(&self) -> BTreeMap<&'static str, f64> {
        self.inner.headline().into_iter().collect()
    }

    fn summary_text(&self) -> String {
        summary_text(&self.inner)
    }

    fn __repr__(&self) -> String {
        format!("Report(accuracy={}, total={})", self.inner.accuracy, self.inner.confusion.total())
    }
}

/// Scores for true labels against predictions, classes 0-4.
#[pyfunction]
fn score(labels: Vec<u8>, predictions: Vec<u8>) -> PyResult<Report> {
    let cm = confusion_matrix(&labels, &predictions).py()?;
    Ok(Report {
        inner: derive_scores(&cm).py()?,
    })
}

/// A trained network with the preprocessing it expects.
#[pyclass(module = "ihards", frozen, skip_from_py_object)]
#[derive(Clone)]
pub struct Checkpoint {
    inner: CoreCheckpoint,
}

#[pymethods]
impl Checkpoint {
    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Ok(Checkpoint {
            inner: CoreCheckpoint::load(&path).py()?,
        })
    }

    #[staticmethod]
    fn from_bytes(data: &[u8]) -> PyResult<Self> {
        Ok(Checkpoint {
            inner: CoreCheckpoint::from_bytes(data).py()?,
        })
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        self.inner.save(&path).py()
    }

    fn to_bytes<'py>(&self, py: Python<'py>) -> Bound<'py, PyBytes> {
        PyBytes::new(py, &self.inner.to_bytes())
    }

    #[getter]
    fn arch(&self) -> String {
        self.inner.arch.name.clone()
    }

    #[getter]
    fn total_features(&self) -> usize {
        self.inner.total_features
    }

    #[getter]
    fn input_features(&self) -> usize {
        self.inner.input_features()
    }

    #[getter]
    fn metrics(&self) -> BTreeMap<String, String> {
        self.inner.metrics.clone()
    }

    fn mask(&self) -> PyResult<FeatureMask> {
        Ok(FeatureMask {
            inner: self.inner.mask().py()?,
        })
    }

    /// Class codes for raw (unmasked, unstandardized) rows.
    fn predict(&self, py: Python<'_>, data: &Dataset) -> PyResult<Vec<u8>> {
        let ck = &self.inner;
        let feats = &data.inner.features;
        py.detach(|| {
            let x = ck.preprocess(feats)?;
            ihards_core::cnn::predict_network(&ck.to_network()?, &x, None).map(|(p, _)| p)
        })
        .py()
    }

    /// Scores on raw rows; the dataset's labels are the truth.
    fn evaluate(&self, py: Python<'_>, data: &Dataset) -> PyResult<Report> {
        let ck = &self.inner;
        let d = &data.inner;
        let inner = py
            .detach(|| {
                let x = IhardsDataset::new(ck.preprocess(&d.features)?, d.labels.clone(), d.seed_used)?;
                let ev = ihards_core::cnn::evaluate_model(ck, &x)?;
                Ok::<_, ihards_core::Error>(
                    derive_scores(&confusion_matrix(&ev.labels, &ev.predictions)?)?.with_loss(ev.loss),
                )
            })
            .py()?;
        Ok(Report { inner })
    }

    fn __repr__(&self) -> String {
        format!(
            "Checkpoint(arch={:?}, input_features={}/{})",
            self.inner.arch.name,
            self.inner.input_features(),
            self.inner.total_features
        )
    }
}

/// One seeded split/train/evaluate run.
#[pyclass(module = "ihards", frozen)]
pub struct Run {
    inner: RunResult,
}

#[pymethods]
impl Run {
    #[getter]
    fn seed(&self) -> u64 {
        self.inner.seed
    }

    #[getter]
    fn checkpoint(&self) -> Checkpoint {
        Checkpoint {
            inner: self.inner.checkpoint.clone(),
        }
    }

    #[getter]
    fn report(&self) -> Report {
        Report {
            inner: self.inner.report.clone(),
        }
    }

    /// `(epoch, loss, accuracy)` per epoch, train mode.
    #[getter]
    fn curve(&self) -> Vec<(usize, f64, f64)> {
        self.inner.curve.iter().map(|e| (e.epoch, e.loss, e.accuracy)).collect()
    }

    #[getter]
    fn train_accuracy(&self) -> f64 {
        self.inner.train_accuracy
    }

    fn __repr__(&self) -> String {
        format!(
            "Run(seed={}, test_accuracy={})",
            self.inner.seed, self.inner.report.accuracy
        )
    }
}

fn run_config(
    arch: &str,
    arch_file: Option<PathBuf>,
    learning_rate: f64,
    batch_size: usize,
    epochs: usize,
    seed: u64,
) -> PyResult<(ArchSpec, TrainConfig)> {
    let spec = match arch_file {
        Some(p) => ArchSpec::from_file(&p).py()?,
        None => ArchSpec::preset(arch).py()?,
    };
    let cfg = TrainConfig {
        learning_rate,
        batch_size,
        epochs,
        repeats: 1,
        seed,
        ..TrainConfig::default()
    };
    cfg.validate().py()?;
    Ok((spec, cfg))
}

/// Split with `seed`, mask, standardize on the train half, train and score
/// the test half. `repeats > 1` returns one run per derived seed.
#[pyfunction]
#[pyo3(signature = (
    data, arch = "arch4", mask = None, epochs = 10, batch_size = 500,
    learning_rate = 0.001, seed = 0, repeats = 1, arch_file = None
))]
#[allow(clippy::too_many_arguments)]
fn train_eval(
    py: Python<'_>,
    data: &Dataset,
    arch: &str,
    mask: Option<&FeatureMask>,
    epochs: usize,
    batch_size: usize,
    learning_rate: f64,
    seed: u64,
    repeats: usize,
    arch_file: Option<PathBuf>,
) -> PyResult<Vec<Run>> {
    if repeats == 0 {
        return Err(ConfigError::new_err("repeats must be >= 1"));
    }
    let (spec, cfg) = run_config(arch, arch_file, learning_rate, batch_size, epochs, seed)?;
    let d = &data.inner;
    let m = mask.map(|m| &m.inner);
    let runs = py
        .detach(|| {
            (0..repeats)
                .map(|r| {
                    let c = TrainConfig {
                        seed: core_repeat_seed(seed, r),
                        ..cfg
                    };
                    core_train_eval(d, m, &spec, &c)
                })
                .collect::<ihards_core::Result<Vec<_>>>()
        })
        .py()?;
    Ok(runs.into_iter().map(|inner| Run { inner }).collect())
}

#[pyfunction]
fn arch_names() -> Vec<&'static str> {
    ARCH_NAMES.to_vec()
}

/// Seed used by repeat `r` of a run rooted at `seed`.
#[pyfunction]
fn repeat_seed(seed: u64, r: usize) -> u64 {
    core_repeat_seed(seed, r)
}

#[pymodule]
fn ihards(m: &Bound<'_, PyModule>) -> PyResult<()> {
    let py = m.py();
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add("IhardsError", py.get_type::<IhardsError>())?;
    m.add("ConfigError", py.get_type::<ConfigError>())?;
    m.add("DataError", py.get_type::<DataError>())?;
    m.add("NumericError", py.get_type::<NumericError>())?;
    m.add_class::<Dataset>()?;
    m.add_class::<FeatureMask>()?;
    m.add_class::<Report>()?;
    m.add_class::<Checkpoint>()?;
    m.add_class::<Run>()?;
    m.add_function(wrap_pyfunction!(prune, m)?)?;
    m.add_function(wrap_pyfunction!(score, m)?)?;
    m.add_function(wrap_pyfunction!(train_eval, m)?)?;
    m.add_function(wrap_pyfunction!(arch_names, m)?)?;
    m.add_function(wrap_pyfunction!(repeat_seed, m)?)?;
    Ok(())
}
