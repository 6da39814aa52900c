//! Python bindings for the diraclax laboratory: sampled potentials and
//! spinor fields, the gauge transform, operator identity residuals,
//! spectra, and the split-step matrix NLS evolution.

use ndarray::Array2;
use num_complex::Complex64 as C64;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use diraclax_core as core;
use diraclax_core::error::Error as CoreError;

fn convert(e: CoreError) -> PyErr {
    match e {
        CoreError::Domain(msg) => PyValueError::new_err(msg),
        CoreError::Computation(msg) => PyRuntimeError::new_err(msg),
    }
}

fn backend_from(name: &str) -> PyResult<core::DerivativeBackend> {
    match name {
        "spectral" => Ok(core::DerivativeBackend::Spectral),
        "central2" => Ok(core::DerivativeBackend::Central2),
        other => Err(PyValueError::new_err(format!(
            "unknown backend '{other}' (expected 'spectral' or 'central2')"
        ))),
    }
}

fn pack(entries: &Array2<C64>) -> Vec<(f64, f64)> {
    entries.iter().map(|z| (z.re, z.im)).collect()
}

fn unpack_square(entries: &[(f64, f64)], dim: usize) -> PyResult<Array2<C64>> {
    if entries.len() != dim * dim {
        return Err(PyValueError::new_err(format!(
            "expected {} row-major entries, got {}",
            dim * dim,
            entries.len()
        )));
    }
    Ok(Array2::from_shape_fn((dim, dim), |(i, j)| {
        C64::new(entries[i * dim + j].0, entries[i * dim + j].1)
    }))
}

/// Uniform 1-D sampling of an interval.
#[pyclass(name = "Grid", frozen, from_py_object)]
#[derive(Clone)]
struct PyGrid {
    inner: core::Grid,
}

#[pymethods]
impl PyGrid {
    #[new]
    fn new(x_min: f64, x_max: f64, n: usize, periodic: bool) -> PyResult<Self> {
        Ok(PyGrid {
            inner: core::Grid::new(x_min, x_max, n, periodic).map_err(convert)?,
        })
    }

    #[getter]
    fn x_min(&self) -> f64 {
        self.inner.x_min
    }

    #[getter]
    fn x_max(&self) -> f64 {
        self.inner.x_max
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n
    }

    #[getter]
    fn periodic(&self) -> bool {
        self.inner.periodic
    }

    #[getter]
    fn spacing(&self) -> f64 {
        self.inner.spacing()
    }

    fn points(&self) -> Vec<f64> {
        self.inner.points().collect()
    }

    fn __repr__(&self) -> String {
        format!(
            "Grid(x_min={}, x_max={}, n={}, periodic={})",
            self.inner.x_min, self.inner.x_max, self.inner.n, self.inner.periodic
        )
    }
}

/// Sampled symmetric m x m matrix field Q(x).
#[pyclass(name = "MatrixPotential", frozen, from_py_object)]
#[derive(Clone)]
struct PyPotential {
    inner: core::MatrixPotential,
}

#[pymethods]
impl PyPotential {
    #[staticmethod]
    fn zero(grid: PyGrid, m: usize) -> PyResult<Self> {
        Ok(PyPotential {
            inner: core::MatrixPotential::sample(&core::PotentialSpec::Zero, &grid.inner, m)
                .map_err(convert)?,
        })
    }

    #[staticmethod]
    fn sech(grid: PyGrid, amplitudes: Vec<f64>) -> PyResult<Self> {
        let m = amplitudes.len();
        Ok(PyPotential {
            inner: core::MatrixPotential::sample(
                &core::PotentialSpec::Sech { amplitudes },
                &grid.inner,
                m,
            )
            .map_err(convert)?,
        })
    }

    #[staticmethod]
    fn random_bandlimited(
        grid: PyGrid,
        m: usize,
        k_max: usize,
        period: f64,
        seed: u64,
    ) -> PyResult<Self> {
        Ok(PyPotential {
            inner: core::MatrixPotential::sample(
                &core::PotentialSpec::RandomBandlimited { k_max, period, seed },
                &grid.inner,
                m,
            )
            .map_err(convert)?,
        })
    }

    /// Constant matrix given as row-major (re, im) entries.
    #[staticmethod]
    #[pyo3(signature = (grid, m, entries, allow_asymmetric = false))]
    fn constant(
        grid: PyGrid,
        m: usize,
        entries: Vec<(f64, f64)>,
        allow_asymmetric: bool,
    ) -> PyResult<Self> {
        let c = unpack_square(&entries, m)?;
        let samples = vec![c; grid.inner.n];
        let inner = if allow_asymmetric {
            core::MatrixPotential::from_samples_asymmetric(grid.inner, m, samples)
        } else {
            core::MatrixPotential::from_samples(grid.inner, m, samples)
        }
        .map_err(convert)?;
        Ok(PyPotential { inner })
    }

    /// One row-major (re, im) entry list per grid point.
    #[staticmethod]
    #[pyo3(signature = (grid, m, samples, allow_asymmetric = false))]
    fn from_samples(
        grid: PyGrid,
        m: usize,
        samples: Vec<Vec<(f64, f64)>>,
        allow_asymmetric: bool,
    ) -> PyResult<Self> {
        let mats = samples
            .iter()
            .map(|s| unpack_square(s, m))
            .collect::<PyResult<Vec<_>>>()?;
        let inner = if allow_asymmetric {
            core::MatrixPotential::from_samples_asymmetric(grid.inner, m, mats)
        } else {
            core::MatrixPotential::from_samples(grid.inner, m, mats)
        }
        .map_err(convert)?;
        Ok(PyPotential { inner })
    }

    /// The soliton profile a sech(a x) (zero phase) as an m = 1 potential.
    #[staticmethod]
    fn soliton(grid: PyGrid, amplitude: f64) -> PyResult<Self> {
        if !grid.inner.periodic {
            return Err(PyValueError::new_err("soliton runs use a periodic grid"));
        }
        Ok(PyPotential {
            inner: core::solutions::soliton_potential(amplitude, &grid.inner),
        })
    }

    #[getter]
    fn m(&self) -> usize {
        self.inner.m()
    }

    #[getter]
    fn grid(&self) -> PyGrid {
        PyGrid {
            inner: *self.inner.grid(),
        }
    }

    #[getter]
    fn is_symmetric(&self) -> bool {
        self.inner.is_symmetric()
    }

    fn max_asymmetry(&self) -> f64 {
        self.inner.max_asymmetry()
    }

    fn max_abs(&self) -> f64 {
        self.inner.max_abs()
    }

    /// Row-major (re, im) entries, one list per grid point.
    fn samples(&self) -> Vec<Vec<(f64, f64)>> {
        self.inner.samples().iter().map(|s| pack(s)).collect()
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string(&core::io::potential_to_doc(&self.inner))
            .map_err(|e| PyRuntimeError::new_err(e.to_string()))
    }

    #[staticmethod]
    #[pyo3(signature = (text, allow_asymmetric = false))]
    fn from_json(text: &str, allow_asymmetric: bool) -> PyResult<Self> {
        let doc: core::io::FieldDoc =
            serde_json::from_str(text).map_err(|e| PyValueError::new_err(e.to_string()))?;
        Ok(PyPotential {
            inner: core::io::potential_from_doc(&doc, allow_asymmetric).map_err(convert)?,
        })
    }
}

/// Sampled C^{2m}-valued field F = (F1, F2).
#[pyclass(name = "SpinorField", frozen, from_py_object)]
#[derive(Clone)]
struct PySpinor {
    inner: core::SpinorField,
}

#[pymethods]
impl PySpinor {
    #[staticmethod]
    fn zeros(grid: PyGrid, m: usize) -> Self {
        PySpinor {
            inner: core::SpinorField::zeros(grid.inner, m),
        }
    }

    #[staticmethod]
    fn fourier_mode(grid: PyGrid, m: usize, component: usize, mode: i64) -> PyResult<Self> {
        Ok(PySpinor {
            inner: core::SpinorField::fourier_mode(grid.inner, m, component, mode)
                .map_err(convert)?,
        })
    }

    #[staticmethod]
    fn random_bandlimited(grid: PyGrid, m: usize, k_max: usize, seed: u64) -> Self {
        PySpinor {
            inner: core::SpinorField::random_bandlimited(grid.inner, m, k_max, seed),
        }
    }

    /// One (re, im) list of length 2m per grid point.
    #[staticmethod]
    fn from_samples(grid: PyGrid, m: usize, samples: Vec<Vec<(f64, f64)>>) -> PyResult<Self> {
        if samples.len() != grid.inner.n || samples.iter().any(|r| r.len() != 2 * m) {
            return Err(PyValueError::new_err("samples must be n rows of 2m entries"));
        }
        let mut arr = Array2::zeros((grid.inner.n, 2 * m));
        for (k, row) in samples.iter().enumerate() {
            for (j, (re, im)) in row.iter().enumerate() {
                arr[[k, j]] = C64::new(*re, *im);
            }
        }
        Ok(PySpinor {
            inner: core::SpinorField::from_samples(grid.inner, m, arr).map_err(convert)?,
        })
    }

    #[getter]
    fn m(&self) -> usize {
        self.inner.m()
    }

    #[getter]
    fn grid(&self) -> PyGrid {
        PyGrid {
            inner: *self.inner.grid(),
        }
    }

    fn samples(&self) -> Vec<Vec<(f64, f64)>> {
        (0..self.inner.grid().n)
            .map(|k| self.inner.value_at(k).iter().map(|z| (z.re, z.im)).collect())
            .collect()
    }

    fn norm_l2(&self) -> f64 {
        self.inner.norm_l2()
    }

    /// The antilinear conjugation: swap blocks and conjugate entries.
    fn conjugation_j(&self) -> Self {
        PySpinor {
            inner: core::apply_conjugation_j(&self.inner),
        }
    }
}

/// Sampled family of unitary gauge matrices.
#[pyclass(name = "UnitaryFamily", frozen)]
struct PyUnitaryFamily {
    inner: core::gauge::UnitaryFamily,
}

#[pymethods]
impl PyUnitaryFamily {
    #[getter]
    fn m(&self) -> usize {
        self.inner.m()
    }

    #[getter]
    fn anchor_index(&self) -> usize {
        self.inner.anchor_index()
    }

    fn unitarity_deviation(&self) -> f64 {
        core::gauge::unitarity_deviation(&self.inner)
    }

    fn determinant_deviation(&self) -> PyResult<f64> {
        core::gauge::determinant_deviation(&self.inner).map_err(convert)
    }

    fn samples(&self) -> Vec<Vec<(f64, f64)>> {
        self.inner.samples().iter().map(|s| pack(s)).collect()
    }

    fn block_flip(&self) -> Self {
        PyUnitaryFamily {
            inner: core::gauge::build_block_flip(&self.inner),
        }
    }
}

#[pyfunction]
fn compute_gauge_family(q: &PyPotential) -> PyResult<PyUnitaryFamily> {
    Ok(PyUnitaryFamily {
        inner: core::gauge::compute_gauge_family(&q.inner).map_err(convert)?,
    })
}

#[pyfunction]
#[pyo3(signature = (q, g, backend = "spectral"))]
fn diagonalization_residual(q: &PyPotential, g: &PySpinor, backend: &str) -> PyResult<f64> {
    core::gauge::diagonalization_residual(&q.inner, &g.inner, backend_from(backend)?)
        .map_err(convert)
}

#[pyfunction]
#[pyo3(signature = (q, f, backend = "spectral"))]
fn first_order_reduction_residual(q: &PyPotential, f: &PySpinor, backend: &str) -> PyResult<f64> {
    core::gauge::first_order_reduction_residual(&q.inner, &f.inner, backend_from(backend)?)
        .map_err(convert)
}

#[pyfunction]
#[pyo3(signature = (q, f, negate = false, backend = "spectral"))]
fn apply_m(q: &PyPotential, f: &PySpinor, negate: bool, backend: &str) -> PyResult<PySpinor> {
    Ok(PySpinor {
        inner: core::operators::apply_m(&q.inner, &f.inner, negate, backend_from(backend)?)
            .map_err(convert)?,
    })
}

#[pyfunction]
#[pyo3(signature = (q, f, backend = "spectral"))]
fn apply_n(q: &PyPotential, f: &PySpinor, backend: &str) -> PyResult<PySpinor> {
    Ok(PySpinor {
        inner: core::operators::apply_n(&q.inner, &f.inner, backend_from(backend)?)
            .map_err(convert)?,
    })
}

#[pyfunction]
#[pyo3(signature = (q, f, backend = "spectral"))]
fn factorization_residual(q: &PyPotential, f: &PySpinor, backend: &str) -> PyResult<f64> {
    core::operators::factorization_residual(&q.inner, &f.inner, backend_from(backend)?)
        .map_err(convert)
}

#[pyfunction]
#[pyo3(signature = (q, u, v, backend = "spectral"))]
fn j_symmetry_residual(q: &PyPotential, u: &PySpinor, v: &PySpinor, backend: &str) -> PyResult<f64> {
    core::operators::j_symmetry_residual(&q.inner, &u.inner, &v.inner, backend_from(backend)?)
        .map_err(convert)
}

/// Returns (gap, norm_estimate, min_shifted_modulus).
#[pyfunction]
#[pyo3(signature = (q, backend = "spectral"))]
fn positivity_gap(q: &PyPotential, backend: &str) -> PyResult<(f64, f64, f64)> {
    let rep =
        core::operators::positivity_gap(&q.inner, backend_from(backend)?).map_err(convert)?;
    Ok((rep.gap, rep.norm_estimate, rep.min_shifted_modulus))
}

/// Eigenvalues of the assembled expression ("m", "m-neg", or "n").
#[pyfunction]
#[pyo3(signature = (q, expression = "m", backend = "spectral", allow_nonperiodic = false))]
fn dense_spectrum(
    q: &PyPotential,
    expression: &str,
    backend: &str,
    allow_nonperiodic: bool,
) -> PyResult<Vec<(f64, f64)>> {
    let expr = match expression {
        "m" => core::operators::OperatorExpr::M,
        "m-neg" => core::operators::OperatorExpr::MNeg,
        "n" => core::operators::OperatorExpr::N,
        other => {
            return Err(PyValueError::new_err(format!(
                "unknown expression '{other}' (expected 'm', 'm-neg', or 'n')"
            )))
        }
    };
    let op =
        core::operators::assemble_dense(&q.inner, expr, backend_from(backend)?, allow_nonperiodic)
            .map_err(convert)?;
    let sample = core::spectral::dense_spectrum(&op).map_err(convert)?;
    Ok(sample.eigenvalues.iter().map(|z| (z.re, z.im)).collect())
}

/// Discrete eigenvalues of the m = 1 line problem inside a search box.
#[pyfunction]
#[pyo3(signature = (q, re_min, re_max, im_min, im_max, grid_density = 40))]
fn shooting_eigenvalues(
    q: &PyPotential,
    re_min: f64,
    re_max: f64,
    im_min: f64,
    im_max: f64,
    grid_density: usize,
) -> PyResult<Vec<(f64, f64)>> {
    let sample = core::spectral::shooting_discrete_eigenvalues(
        &q.inner,
        core::spectral::SearchBox {
            re_min,
            re_max,
            im_min,
            im_max,
        },
        grid_density,
    )
    .map_err(convert)?;
    Ok(sample.eigenvalues.iter().map(|z| (z.re, z.im)).collect())
}

/// Greedy matching distance between two eigenvalue lists after filtering to
/// Im z > region_min_im; returns (distance, emptiness_flag).
#[pyfunction]
#[pyo3(signature = (first, second, top_k = 8, region_min_im = 0.1))]
fn matching_distance(
    first: Vec<(f64, f64)>,
    second: Vec<(f64, f64)>,
    top_k: usize,
    region_min_im: f64,
) -> PyResult<(f64, bool)> {
    let grid = core::Grid::new(0.0, 1.0, 4, true).map_err(convert)?;
    let wrap = |v: &[(f64, f64)]| core::spectral::SpectrumSample {
        eigenvalues: v.iter().map(|(re, im)| C64::new(*re, *im)).collect(),
        provenance: core::spectral::Provenance::Dense,
        m: 1,
        grid,
        dropped_candidates: 0,
    };
    let report = core::spectral::spectrum_matching_distance(
        &wrap(&first),
        &wrap(&second),
        top_k,
        |z| z.im > region_min_im,
    );
    Ok((report.distance, report.empty))
}

/// Split-step evolution; returns (final_potential, [(t, l2_norm)]).
#[pyfunction]
#[pyo3(signature = (q0, dt, steps, focusing = true))]
fn evolve(
    q0: &PyPotential,
    dt: f64,
    steps: usize,
    focusing: bool,
) -> PyResult<(PyPotential, Vec<(f64, f64)>)> {
    let sign = if focusing {
        core::nls::FlowSign::Focusing
    } else {
        core::nls::FlowSign::Defocusing
    };
    let outcome = core::nls::evolve(q0.inner.clone(), dt, steps, sign).map_err(convert)?;
    if let Some(step) = outcome.failed_at_step {
        return Err(PyRuntimeError::new_err(format!(
            "evolution produced non-finite values at step {step}"
        )));
    }
    let diag = outcome.states.iter().map(|s| (s.t, s.l2_norm)).collect();
    let last = outcome.states.into_iter().next_back().unwrap();
    Ok((PyPotential { inner: last.q }, diag))
}

#[pyfunction]
fn conserved_l2(q: &PyPotential) -> f64 {
    core::nls::conserved_l2(&q.inner)
}

/// Evolve and track the filtered spectrum of the assembled operator;
/// returns (max_drift, [(t, drift)]).
#[pyfunction]
#[pyo3(signature = (q0, dt, steps, snapshot_every, region_min_im = 0.1, top_k = 8, focusing = true))]
fn isospectral_drift(
    q0: &PyPotential,
    dt: f64,
    steps: usize,
    snapshot_every: usize,
    region_min_im: f64,
    top_k: usize,
    focusing: bool,
) -> PyResult<(f64, Vec<(f64, f64)>)> {
    let sign = if focusing {
        core::nls::FlowSign::Focusing
    } else {
        core::nls::FlowSign::Defocusing
    };
    let rep = core::nls::isospectrality_experiment(
        q0.inner.clone(),
        dt,
        steps,
        snapshot_every,
        core::DerivativeBackend::Spectral,
        sign,
        region_min_im,
        top_k,
    )
    .map_err(convert)?;
    Ok((
        rep.max_drift,
        rep.snapshots.iter().map(|s| (s.t, s.drift)).collect(),
    ))
}

#[pymodule]
fn diraclax(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyGrid>()?;
    m.add_class::<PyPotential>()?;
    m.add_class::<PySpinor>()?;
    m.add_class::<PyUnitaryFamily>()?;
    m.add_function(wrap_pyfunction!(compute_gauge_family, m)?)?;
    m.add_function(wrap_pyfunction!(diagonalization_residual, m)?)?;
    m.add_function(wrap_pyfunction!(first_order_reduction_residual, m)?)?;
    m.add_function(wrap_pyfunction!(apply_m, m)?)?;
    m.add_function(wrap_pyfunction!(apply_n, m)?)?;
    m.add_function(wrap_pyfunction!(factorization_residual, m)?)?;
    m.add_function(wrap_pyfunction!(j_symmetry_residual, m)?)?;
    m.add_function(wrap_pyfunction!(positivity_gap, m)?)?;
    m.add_function(wrap_pyfunction!(dense_spectrum, m)?)?;
    m.add_function(wrap_pyfunction!(shooting_eigenvalues, m)?)?;
    m.add_function(wrap_pyfunction!(matching_distance, m)?)?;
    m.add_function(wrap_pyfunction!(evolve, m)?)?;
    m.add_function(wrap_pyfunction!(conserved_l2, m)?)?;
    m.add_function(wrap_pyfunction!(isospectral_drift, m)?)?;
    Ok(())
}
