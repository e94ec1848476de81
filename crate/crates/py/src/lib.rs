//! Python bindings. Views come back as plain dicts and lists decoded from the
//! same JSON the HTTP service returns.

use std::collections::HashSet;
use std::path::PathBuf;

use lakemeta::catalog::api::{self, render};
use lakemeta::catalog::Caller;
use lakemeta::fixtures::bundled_corpus_dir;
use lakemeta::graph::NodeId;
use lakemeta::lake::parse_id;
use lakemeta::linker::{self, MinHashSignature};
use lakemeta::{measures, profiler, Config, Error};
use pyo3::exceptions::{PyKeyError, PyPermissionError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyBytes;
use serde_json::Value;

fn py_err(e: Error) -> PyErr {
    match e {
        Error::NotFound(_) | Error::MissingNode(_) => PyKeyError::new_err(e.to_string()),
        Error::Unauthorized(_) => PyPermissionError::new_err(e.to_string()),
        e if e.is_user_error() => PyValueError::new_err(e.to_string()),
        e => PyRuntimeError::new_err(e.to_string()),
    }
}

fn to_py<'py>(py: Python<'py>, value: &Value) -> PyResult<Bound<'py, PyAny>> {
    py.import("json")?.call_method1("loads", (render(value),))
}

fn id(text: &str) -> PyResult<NodeId> {
    parse_id(text).map_err(py_err)
}

/// A catalog rooted at a directory or described by a TOML config file.
#[pyclass(name = "Lake", frozen)]
struct PyLake {
    lake: lakemeta::Lake,
}

impl PyLake {
    fn caller(&self, user: Option<&str>) -> PyResult<Caller> {
        let user = user.unwrap_or(&self.lake.config().default_user);
        self.lake.caller(Some(user)).map_err(py_err)
    }
}

#[pymethods]
impl PyLake {
    #[new]
    #[pyo3(signature = (root=None, config=None, read_only=false, in_memory=false))]
    fn new(root: Option<PathBuf>, config: Option<PathBuf>, read_only: bool, in_memory: bool) -> PyResult<Self> {
        let config = match (root, config) {
            (_, Some(path)) => Config::from_file(path).map_err(py_err)?,
            (Some(root), None) => Config::rooted_at(root),
            (None, None) => Config::load(None).map_err(py_err)?,
        };
        let lake = if in_memory {
            lakemeta::Lake::in_memory(config)
        } else if read_only {
            lakemeta::Lake::open_read_only(config)
        } else {
            lakemeta::Lake::open(config)
        }
        .map_err(py_err)?;
        Ok(PyLake { lake })
    }

    /// Registers a source; returns its id, or None when it cannot be reached.
    #[pyo3(signature = (location, name, r#type, owner=None, administrator=None, scheme=None, user=None))]
    #[allow(clippy::too_many_arguments)]
    fn add_source(
        &self,
        location: String,
        name: String,
        r#type: String,
        owner: Option<String>,
        administrator: Option<String>,
        scheme: Option<String>,
        user: Option<&str>,
    ) -> PyResult<Option<String>> {
        let caller = self.caller(user)?;
        let body = api::SourceBody {
            location,
            scheme,
            name,
            source_type: r#type,
            owner,
            administrator,
            stream_origin: None,
            credentials_ref: None,
        };
        let created = api::add_source(&self.lake, &caller, &body).map_err(py_err)?;
        Ok(created.and_then(|v| v["id"].as_str().map(str::to_string)))
    }

    #[pyo3(signature = (source, mode="batch", comment=None, defined_duration=None, window_count=None, user=None))]
    #[allow(clippy::too_many_arguments)]
    fn ingest<'py>(
        &self,
        py: Python<'py>,
        source: &str,
        mode: &str,
        comment: Option<String>,
        defined_duration: Option<f64>,
        window_count: Option<usize>,
        user: Option<&str>,
    ) -> PyResult<Bound<'py, PyAny>> {
        let caller = self.caller(user)?;
        let source = id(source)?;
        let body = api::IngestBody { mode: Some(mode.to_string()), comment, defined_duration, window_count };
        let value = py.detach(|| api::ingest(&self.lake, &caller, source, &body)).map_err(py_err)?;
        to_py(py, &value)
    }

    /// Registers and ingests a described corpus; the bundled one by default.
    #[pyo3(signature = (dir=None, user=None))]
    fn load_corpus<'py>(&self, py: Python<'py>, dir: Option<PathBuf>, user: Option<&str>) -> PyResult<Bound<'py, PyAny>> {
        let caller = self.caller(user)?;
        let dir = dir.unwrap_or_else(bundled_corpus_dir);
        let loaded = py.detach(|| self.lake.load_corpus(&dir, &caller.name)).map_err(py_err)?;
        to_py(py, &serde_json::to_value(loaded).map_err(|e| py_err(e.into()))?)
    }

    #[pyo3(signature = (keyword="", user=None))]
    fn search<'py>(&self, py: Python<'py>, keyword: &str, user: Option<&str>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &api::search(&self.lake, &self.caller(user)?, keyword).map_err(py_err)?)
    }

    #[pyo3(signature = (dataset, user=None))]
    fn dataset<'py>(&self, py: Python<'py>, dataset: &str, user: Option<&str>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &api::dataset(&self.lake, &self.caller(user)?, id(dataset)?).map_err(py_err)?)
    }

    #[pyo3(signature = (dataset, user=None))]
    fn schema<'py>(&self, py: Python<'py>, dataset: &str, user: Option<&str>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &api::schema(&self.lake, &self.caller(user)?, id(dataset)?).map_err(py_err)?)
    }

    #[pyo3(signature = (dataset, user=None))]
    fn lineage<'py>(&self, py: Python<'py>, dataset: &str, user: Option<&str>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &api::lineage(&self.lake, &self.caller(user)?, id(dataset)?).map_err(py_err)?)
    }

    #[pyo3(signature = (dataset, user=None))]
    fn relationships<'py>(&self, py: Python<'py>, dataset: &str, user: Option<&str>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &api::relationships(&self.lake, &self.caller(user)?, id(dataset)?).map_err(py_err)?)
    }

    #[pyo3(signature = (dataset, tags, description=None, user=None))]
    fn annotate<'py>(
        &self,
        py: Python<'py>,
        dataset: &str,
        tags: Vec<String>,
        description: Option<String>,
        user: Option<&str>,
    ) -> PyResult<Bound<'py, PyAny>> {
        let body = api::AnnotateBody { description, tags };
        to_py(py, &api::annotate(&self.lake, &self.caller(user)?, id(dataset)?, &body).map_err(py_err)?)
    }

    /// Marks the dataset, or one of its entities or attributes, at `level`.
    #[pyo3(signature = (dataset, level, target=None, user=None))]
    fn mark(&self, dataset: &str, level: u32, target: Option<&str>, user: Option<&str>) -> PyResult<String> {
        let target = target.map(id).transpose()?;
        let mark = self.lake.mark_in_dataset(id(dataset)?, target, level, &self.caller(user)?).map_err(py_err)?;
        Ok(mark.to_string())
    }

    #[pyo3(signature = (ds1, ds2, kind, value, name=None, description=None, user=None))]
    #[allow(clippy::too_many_arguments)]
    fn relate(
        &self,
        ds1: &str,
        ds2: &str,
        kind: String,
        value: f64,
        name: Option<String>,
        description: Option<String>,
        user: Option<&str>,
    ) -> PyResult<String> {
        let body = api::RelateBody { ds1: id(ds1)?, ds2: id(ds2)?, kind, value, name, description };
        let created = api::relate(&self.lake, &self.caller(user)?, &body).map_err(py_err)?;
        Ok(created["id"].as_str().unwrap_or_default().to_string())
    }

    /// Computes relationships between `dataset` and every other dataset.
    #[pyo3(signature = (dataset, user=None))]
    fn link<'py>(&self, py: Python<'py>, dataset: &str, user: Option<&str>) -> PyResult<Bound<'py, PyAny>> {
        let caller = self.caller(user)?;
        let dataset = id(dataset)?;
        let value = py.detach(|| api::link(&self.lake, &caller, dataset)).map_err(py_err)?;
        to_py(py, &value)
    }

    fn stats<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &api::stats(&self.lake).map_err(py_err)?)
    }

    fn put_global(&self, key: &str, value: &str) -> PyResult<String> {
        Ok(self.lake.put_global_entry(key, value).map_err(py_err)?.to_string())
    }

    fn global_dict(&self) -> Vec<(String, String)> {
        self.lake.global_entries()
    }

    /// The whole graph in its canonical encoding.
    fn canonical_snapshot<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyBytes>> {
        let bytes = self.lake.store().canonical_bytes().map_err(py_err)?;
        Ok(PyBytes::new(py, &bytes))
    }
}

#[pyfunction]
fn pearson(x: Vec<f64>, y: Vec<f64>) -> PyResult<f64> {
    measures::pearson(&x, &y).map_err(py_err)
}

#[pyfunction]
fn name_similarity(a: &str, b: &str) -> f64 {
    measures::name_similarity(a, b)
}

#[pyfunction]
#[pyo3(signature = (values, k=linker::DEFAULT_K, seed=42))]
fn minhash(values: Vec<u64>, k: usize, seed: u64) -> Vec<u64> {
    let set: HashSet<u64> = values.into_iter().collect();
    linker::minhash(&set, k, seed).values
}

#[pyfunction]
#[pyo3(signature = (a, b, seed=42))]
fn estimate_jaccard(a: Vec<u64>, b: Vec<u64>, seed: u64) -> PyResult<f64> {
    let sig = |values: Vec<u64>| MinHashSignature { k: values.len(), seed, values };
    linker::estimate_jaccard(&sig(a), &sig(b)).map_err(py_err)
}

#[pyfunction]
#[pyo3(signature = (cells, seed=42))]
fn row_hash(cells: Vec<String>, seed: u64) -> u64 {
    lakemeta::hashing::row_hash(&cells, seed)
}

#[pyfunction]
fn detect_dataset_type(path: PathBuf) -> PyResult<String> {
    Ok(profiler::detect_dataset_type(&path).map_err(py_err)?.to_string())
}

#[pyfunction]
fn get_dataset_format(path: PathBuf) -> PyResult<String> {
    profiler::get_dataset_format(&path).map_err(py_err)
}

#[pymodule]
fn lakemeta_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyLake>()?;
    m.add_function(wrap_pyfunction!(pearson, m)?)?;
    m.add_function(wrap_pyfunction!(name_similarity, m)?)?;
    m.add_function(wrap_pyfunction!(minhash, m)?)?;
    m.add_function(wrap_pyfunction!(estimate_jaccard, m)?)?;
    m.add_function(wrap_pyfunction!(row_hash, m)?)?;
    m.add_function(wrap_pyfunction!(detect_dataset_type, m)?)?;
    m.add_function(wrap_pyfunction!(get_dataset_format, m)?)?;
    Ok(())
}
