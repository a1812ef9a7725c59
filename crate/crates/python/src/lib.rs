//! Python bindings. Simulations release the GIL while they run.

use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;

use elr_core::calibration::{self, CalibrationCell, CalibrationTable, TableSettings};
use elr_core::curves::{self, default_alpha_grid, default_n_grid, StandardCurve, TABLE_COVERAGES, TABLE_SAMPLE_SIZES};
use elr_core::distributions::DistributionSpec;
use elr_core::el::{self, Sample};
use elr_core::mc::{self, McConfig, ReplicateBatch, DEFAULT_REPLICATES, DEFAULT_SEED};
use elr_core::rng::RandomStream;
use elr_core::{report, special, zhang, Error};

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Io(io) => PyIOError::new_err(io.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

trait IntoPy<T> {
    fn py(self) -> PyResult<T>;
}

impl<T> IntoPy<T> for elr_core::Result<T> {
    fn py(self) -> PyResult<T> {
        self.map_err(py_err)
    }
}

fn config(replicates: usize, seed: u64, workers: Option<usize>) -> PyResult<McConfig> {
    if replicates < 100 {
        return Err(PyValueError::new_err(format!("B must be at least 100, got {replicates}")));
    }
    let cfg = McConfig::new(replicates, seed);
    Ok(match workers {
        Some(w) => cfg.with_workers(w),
        None => cfg,
    })
}

#[pyclass(name = "Distribution", frozen, from_py_object)]
#[derive(Clone)]
struct PyDistribution {
    inner: DistributionSpec,
}

#[pymethods]
impl PyDistribution {
    /// Parse `family(p1,...)`, e.g. `"normal(0,1)"`, or a preset name.
    #[new]
    fn new(text: &str) -> PyResult<Self> {
        Ok(PyDistribution {
            inner: text.parse().py()?,
        })
    }

    #[getter]
    fn family(&self) -> &'static str {
        self.inner.family().name()
    }

    #[getter]
    fn params(&self) -> Vec<f64> {
        self.inner.params()
    }

    /// `(mean, variance, skewness, kurtosis)`, `None` where undefined.
    fn moments(&self) -> (Option<f64>, Option<f64>, Option<f64>, Option<f64>) {
        let m = self.inner.moments();
        (m.mean, m.variance, m.skewness, m.kurtosis)
    }

    fn density(&self, y: f64) -> f64 {
        self.inner.density(y)
    }

    /// `n` draws from stream `stream` of `seed`.
    #[pyo3(signature = (n, seed = DEFAULT_SEED, stream = 0))]
    fn sample(&self, n: usize, seed: u64, stream: u64) -> Vec<f64> {
        let mut rng = RandomStream::new(seed, stream);
        let mut out = vec![0.0; n];
        self.inner.fill(&mut out, &mut rng);
        out
    }

    fn __str__(&self) -> String {
        self.inner.to_string()
    }

    fn __repr__(&self) -> String {
        format!("Distribution('{}')", self.inner)
    }

    fn __eq__(&self, other: &Self) -> bool {
        self.inner == other.inner
    }
}

fn spec_of(dist: &Bound<'_, PyAny>) -> PyResult<DistributionSpec> {
    if let Ok(d) = dist.cast::<PyDistribution>() {
        return Ok(d.get().inner);
    }
    let text: String = dist.extract()?;
    text.parse().py()
}

#[pyclass(name = "ElResult", frozen, get_all)]
struct PyElResult {
    statistic: f64,
    lambda_: Option<f64>,
    weights: Option<Vec<f64>>,
    status: &'static str,
    p_value: f64,
}

#[pymethods]
impl PyElResult {
    #[getter(lambda)]
    fn lambda(&self) -> Option<f64> {
        self.lambda_
    }

    fn __repr__(&self) -> String {
        format!(
            "ElResult(statistic={}, lambda={:?}, status='{}', p_value={})",
            self.statistic, self.lambda_, self.status, self.p_value
        )
    }
}

/// ELR statistic of `values` at `mu0`.
#[pyfunction]
fn el_statistic(values: Vec<f64>, mu0: f64) -> PyResult<PyElResult> {
    let sample = Sample::new(values).py()?;
    let r = el::el_statistic(&sample, mu0).py()?;
    Ok(PyElResult {
        statistic: r.statistic,
        lambda_: r.lambda,
        p_value: r.p_value(),
        status: r.status.as_str(),
        weights: r.weights,
    })
}

/// `(lower, upper)` of `{mu : l(mu) <= critical_value}`.
#[pyfunction]
fn el_confidence_interval(values: Vec<f64>, critical_value: f64) -> PyResult<(f64, f64)> {
    let sample = Sample::new(values).py()?;
    let ci = el::el_confidence_interval(&sample, critical_value).py()?;
    Ok((ci.lower, ci.upper))
}

#[pyfunction]
fn chisq1_quantile(p: f64) -> PyResult<f64> {
    special::chisq1_quantile(p).py()
}

#[pyfunction]
fn chisq1_cdf(x: f64) -> PyResult<f64> {
    special::chisq1_cdf(x).py()
}

#[pyfunction]
fn std_normal_cdf(x: f64) -> f64 {
    special::std_normal_cdf(x)
}

#[pyfunction]
fn std_normal_quantile(p: f64) -> PyResult<f64> {
    special::std_normal_quantile(p).py()
}

#[pyfunction]
fn hermite_integral(c: f64) -> PyResult<f64> {
    zhang::hermite_integral(c).py()
}

/// Size of the nominal level-`alpha` test predicted by the second-order
/// expansion.
#[pyfunction]
fn predicted_size(dist: &Bound<'_, PyAny>, n: usize, alpha: f64) -> PyResult<f64> {
    zhang::predicted_size(n, alpha, &spec_of(dist)?.moments()).py()
}

#[pyclass(name = "ReplicateBatch", frozen)]
struct PyBatch {
    inner: ReplicateBatch,
}

#[pymethods]
impl PyBatch {
    #[getter]
    fn statistics(&self) -> Vec<f64> {
        self.inner.statistics().to_vec()
    }

    #[getter]
    fn replicates(&self) -> usize {
        self.inner.replicates()
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    #[getter]
    fn hull_violation_rate(&self) -> f64 {
        self.inner.hull_violation_rate()
    }

    /// `(alpha_hat, std_error)`.
    fn empirical_size(&self, alpha: f64) -> PyResult<(f64, f64)> {
        let s = self.inner.empirical_size(alpha).py()?;
        Ok((s.alpha_hat, s.std_error))
    }

    fn empirical_critical_value(&self, alpha: f64) -> PyResult<f64> {
        self.inner.empirical_critical_value(alpha).py()
    }

    fn rejection_rate(&self, critical_value: f64) -> f64 {
        self.inner.rejection_rate(critical_value)
    }
}

#[pyfunction]
#[pyo3(signature = (dist, n, replicates = DEFAULT_REPLICATES, seed = DEFAULT_SEED, workers = None))]
fn run_batch(
    py: Python<'_>,
    dist: &Bound<'_, PyAny>,
    n: usize,
    replicates: usize,
    seed: u64,
    workers: Option<usize>,
) -> PyResult<PyBatch> {
    let spec = spec_of(dist)?;
    let cfg = config(replicates, seed, workers)?;
    let inner = py.detach(|| mc::run_batch(&spec, n, &cfg)).py()?;
    Ok(PyBatch { inner })
}

#[pyclass(name = "StandardCurve", frozen)]
struct PyCurve {
    inner: StandardCurve,
}

#[pymethods]
impl PyCurve {
    #[getter]
    fn kind(&self) -> &'static str {
        self.inner.kind.as_str()
    }

    #[getter]
    fn fixed_value(&self) -> f64 {
        self.inner.fixed_value
    }

    #[getter]
    fn abscissa(&self) -> Vec<f64> {
        self.inner.points.iter().map(|p| p.abscissa).collect()
    }

    #[getter]
    fn alpha_hat(&self) -> Vec<f64> {
        self.inner.points.iter().map(|p| p.alpha_hat).collect()
    }

    #[getter]
    fn std_error(&self) -> Vec<f64> {
        self.inner.points.iter().map(|p| p.std_error).collect()
    }

    #[getter]
    fn zhang_prediction(&self) -> Vec<Option<f64>> {
        self.inner.points.iter().map(|p| p.zhang_prediction).collect()
    }

    #[getter]
    fn hull_violation_rate(&self) -> Option<f64> {
        self.inner.hull_violation_rate
    }

    fn scaled_deviation(&self) -> PyResult<PyCurve> {
        Ok(PyCurve {
            inner: curves::curve_scaled_deviation(&self.inner).py()?,
        })
    }

    /// Calibrated cell for `target_alpha`; the curve must be vs-level.
    #[pyo3(signature = (target_alpha, offset = 0.0))]
    fn calibrate(&self, target_alpha: f64, offset: f64) -> PyResult<PyCell> {
        Ok(PyCell {
            inner: calibration::calibrate(&self.inner, target_alpha, offset).py()?,
        })
    }

    fn to_csv(&self) -> PyResult<String> {
        report::curve_to_csv(&self.inner).py()
    }

    fn to_json(&self) -> String {
        report::curve_to_json(&self.inner)
    }

    fn __len__(&self) -> usize {
        self.inner.points.len()
    }
}

#[pyfunction]
#[pyo3(signature = (dist, alpha = 0.05, n_grid = None, replicates = DEFAULT_REPLICATES, seed = DEFAULT_SEED, workers = None))]
fn curve_vs_n(
    py: Python<'_>,
    dist: &Bound<'_, PyAny>,
    alpha: f64,
    n_grid: Option<Vec<usize>>,
    replicates: usize,
    seed: u64,
    workers: Option<usize>,
) -> PyResult<PyCurve> {
    let spec = spec_of(dist)?;
    let cfg = config(replicates, seed, workers)?;
    let grid = n_grid.unwrap_or_else(default_n_grid);
    let inner = py.detach(|| curves::curve_vs_n(&spec, alpha, &grid, &cfg, None)).py()?;
    Ok(PyCurve { inner })
}

#[pyfunction]
#[pyo3(signature = (dist, n, alpha_grid = None, replicates = DEFAULT_REPLICATES, seed = DEFAULT_SEED, workers = None))]
fn curve_vs_alpha(
    py: Python<'_>,
    dist: &Bound<'_, PyAny>,
    n: usize,
    alpha_grid: Option<Vec<f64>>,
    replicates: usize,
    seed: u64,
    workers: Option<usize>,
) -> PyResult<PyCurve> {
    let spec = spec_of(dist)?;
    let cfg = config(replicates, seed, workers)?;
    let grid = alpha_grid.unwrap_or_else(default_alpha_grid);
    let inner = py.detach(|| curves::curve_vs_alpha(&spec, n, &grid, &cfg, None)).py()?;
    Ok(PyCurve { inner })
}

#[pyclass(name = "CalibrationCell", frozen)]
struct PyCell {
    inner: CalibrationCell,
}

#[pymethods]
impl PyCell {
    #[getter]
    fn n(&self) -> usize {
        self.inner.n
    }

    #[getter]
    fn target_alpha(&self) -> f64 {
        self.inner.target_alpha
    }

    #[getter]
    fn alpha_approx(&self) -> Option<f64> {
        self.inner.alpha_approx
    }

    #[getter]
    fn critical_value(&self) -> Option<f64> {
        self.inner.critical_value
    }

    #[getter]
    fn na_reason(&self) -> &'static str {
        self.inner.na_reason.as_str()
    }

    fn __repr__(&self) -> String {
        format!(
            "CalibrationCell(n={}, target_alpha={}, critical_value={:?}, na_reason='{}')",
            self.inner.n,
            self.inner.target_alpha,
            self.inner.critical_value,
            self.inner.na_reason.as_str()
        )
    }
}

#[pyclass(name = "CalibrationTable", frozen)]
struct PyTable {
    inner: CalibrationTable,
}

#[pymethods]
impl PyTable {
    #[staticmethod]
    fn from_csv(text: &str) -> PyResult<PyTable> {
        Ok(PyTable {
            inner: report::table_from_csv(text).py()?,
        })
    }

    #[getter]
    fn n_values(&self) -> Vec<usize> {
        self.inner.settings.n_values.clone()
    }

    #[getter]
    fn coverages(&self) -> Vec<f64> {
        self.inner.settings.coverages.clone()
    }

    /// Rows by n, columns by coverage, `None` for NA cells.
    #[getter]
    fn critical_values(&self) -> Vec<Vec<Option<f64>>> {
        self.inner
            .cells
            .iter()
            .map(|row| row.iter().map(|c| c.critical_value).collect())
            .collect()
    }

    fn cell(&self, n: usize, coverage: f64) -> Option<PyCell> {
        self.inner.cell(n, coverage).map(|c| PyCell { inner: c.clone() })
    }

    /// Violations found by the consistency checks, as strings.
    fn sanity(&self) -> Vec<String> {
        calibration::table_sanity(&self.inner)
            .violations
            .iter()
            .map(|v| format!("{v:?}"))
            .collect()
    }

    fn to_csv(&self) -> PyResult<String> {
        report::table_to_csv(&self.inner).py()
    }

    fn to_json(&self) -> String {
        report::table_to_json(&self.inner)
    }

    fn to_text(&self) -> String {
        report::table_to_text(&self.inner)
    }

    fn __eq__(&self, other: &Self) -> bool {
        self.inner == other.inner
    }
}

#[pyfunction]
#[pyo3(signature = (
    dist, n_values = None, coverages = None, replicates = DEFAULT_REPLICATES,
    seed = DEFAULT_SEED, offset = 0.0, alpha_grid = None, workers = None
))]
#[allow(clippy::too_many_arguments)]
fn build_table(
    py: Python<'_>,
    dist: &Bound<'_, PyAny>,
    n_values: Option<Vec<usize>>,
    coverages: Option<Vec<f64>>,
    replicates: usize,
    seed: u64,
    offset: f64,
    alpha_grid: Option<Vec<f64>>,
    workers: Option<usize>,
) -> PyResult<PyTable> {
    let spec = spec_of(dist)?;
    let cfg = config(replicates, seed, workers)?;
    let settings = TableSettings {
        n_values: n_values.unwrap_or_else(|| TABLE_SAMPLE_SIZES.to_vec()),
        coverages: coverages.unwrap_or_else(|| TABLE_COVERAGES.to_vec()),
        alpha_grid: alpha_grid.unwrap_or_else(default_alpha_grid),
        offset,
    };
    let inner = py.detach(|| calibration::build_table(&spec, &settings, &cfg, None)).py()?;
    Ok(PyTable { inner })
}

#[pymodule]
fn pyelr(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_class::<PyDistribution>()?;
    m.add_class::<PyElResult>()?;
    m.add_class::<PyBatch>()?;
    m.add_class::<PyCurve>()?;
    m.add_class::<PyCell>()?;
    m.add_class::<PyTable>()?;
    m.add_function(wrap_pyfunction!(el_statistic, m)?)?;
    m.add_function(wrap_pyfunction!(el_confidence_interval, m)?)?;
    m.add_function(wrap_pyfunction!(chisq1_quantile, m)?)?;
    m.add_function(wrap_pyfunction!(chisq1_cdf, m)?)?;
    m.add_function(wrap_pyfunction!(std_normal_cdf, m)?)?;
    m.add_function(wrap_pyfunction!(std_normal_quantile, m)?)?;
    m.add_function(wrap_pyfunction!(hermite_integral, m)?)?;
    m.add_function(wrap_pyfunction!(predicted_size, m)?)?;
    m.add_function(wrap_pyfunction!(run_batch, m)?)?;
    m.add_function(wrap_pyfunction!(curve_vs_n, m)?)?;
    m.add_function(wrap_pyfunction!(curve_vs_alpha, m)?)?;
    m.add_function(wrap_pyfunction!(build_table, m)?)?;
    Ok(())
}
