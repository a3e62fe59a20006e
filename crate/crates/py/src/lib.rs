//! Python bindings exposing the main dirac1d types and operations.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use dirac1d::dynamics::{diagonalize, moment_series, InitialState};
use dirac1d::lattice::{build_dirac, Boundary, LatticeConfig};
use dirac1d::{DisorderKind, DisorderSpec, PotentialRealization};

fn err(e: dirac1d::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// 2×2 transfer matrix T^E_V as nested lists.
#[pyfunction]
fn transfer_matrix(energy: f64, potential: f64, mass: f64, c: f64) -> Vec<Vec<f64>> {
    let t = dirac1d::transfer_matrix(energy, potential, mass, c);
    vec![t.0[0].to_vec(), t.0[1].to_vec()]
}

#[pyfunction]
fn spectral_radius(entries: Vec<Vec<f64>>) -> PyResult<f64> {
    if entries.len() != 2 || entries.iter().any(|r| r.len() != 2) {
        return Err(PyValueError::new_err("expected a 2x2 matrix"));
    }
    let t = dirac1d::TransferMatrix([
        [entries[0][0], entries[0][1]],
        [entries[1][0], entries[1][1]],
    ]);
    Ok(t.spectral_radius())
}

/// Critical-energy catalogue: (energies, regime).
#[pyfunction]
fn critical_energies(mass: f64, c: f64, v: f64) -> PyResult<(Vec<f64>, String)> {
    let set = dirac1d::critical_energies(mass, c, v).map_err(err)?;
    Ok((set.energies, set.regime.to_string()))
}

#[pyclass(get_all, frozen)]
struct LyapunovEstimate {
    energy: f64,
    gamma: f64,
    std_error: f64,
    n_steps: usize,
    n_realizations: usize,
    loc_length: f64,
    resolved_from_zero: bool,
}

#[pyfunction]
#[pyo3(signature = (energy, v, p, mass, c, seed, n_steps, n_realizations, kind="bernoulli"))]
#[allow(clippy::too_many_arguments)]
fn lyapunov_exponent(
    energy: f64,
    v: f64,
    p: f64,
    mass: f64,
    c: f64,
    seed: u64,
    n_steps: usize,
    n_realizations: usize,
    kind: &str,
) -> PyResult<LyapunovEstimate> {
    let kind: DisorderKind = kind.parse().map_err(err)?;
    let spec = DisorderSpec::new(v, p, kind, seed).map_err(err)?;
    let est = dirac1d::lyapunov_exponent(energy, &spec, mass, c, n_steps, n_realizations)
        .map_err(err)?;
    Ok(LyapunovEstimate {
        energy: est.energy,
        gamma: est.gamma,
        std_error: est.std_error,
        n_steps: est.n_steps,
        n_realizations: est.n_realizations,
        loc_length: est.loc_length,
        resolved_from_zero: est.resolved_from_zero,
    })
}

/// One potential realization, deterministic in (seed, stream_index).
#[pyfunction]
#[pyo3(signature = (v, p, kind, seed, n_sites, stream_index=0))]
fn sample_potential(
    v: f64,
    p: f64,
    kind: &str,
    seed: u64,
    n_sites: usize,
    stream_index: u64,
) -> PyResult<Vec<f64>> {
    let kind: DisorderKind = kind.parse().map_err(err)?;
    let spec = DisorderSpec::new(v, p, kind, seed).map_err(err)?;
    Ok(dirac1d::sample_potential(&spec, n_sites, stream_index)
        .map_err(err)?
        .values)
}

/// Sorted eigenvalues of the Dirac Hamiltonian for explicit potential values.
#[pyfunction]
fn dirac_eigenvalues(
    n_sites: usize,
    boundary: &str,
    mass: f64,
    c: f64,
    potential: Vec<f64>,
) -> PyResult<Vec<f64>> {
    let boundary: Boundary = boundary.parse().map_err(err)?;
    let config = LatticeConfig::new(n_sites, boundary, mass, c).map_err(err)?;
    let mut pot = PotentialRealization::constant(0.0, n_sites);
    if potential.len() != n_sites {
        return Err(PyValueError::new_err("potential length must equal n_sites"));
    }
    pot.values = potential;
    let h = build_dirac(&config, &pot).map_err(err)?;
    let plan = diagonalize(&h).map_err(err)?;
    Ok(plan.eigenvalues.to_vec())
}

#[pyclass(get_all, frozen)]
struct MomentSeries {
    times: Vec<f64>,
    values: Vec<f64>,
    std_errors: Vec<f64>,
    edge_weights: Vec<f64>,
}

/// Disorder-averaged time-averaged second moment M(t) from δ_center.
#[pyfunction]
#[pyo3(signature = (n_sites, mass, c, v, p, seed, t_grid, n_realizations, psi0="delta_plus", kind="bernoulli"))]
#[allow(clippy::too_many_arguments)]
fn moment_series_py(
    n_sites: usize,
    mass: f64,
    c: f64,
    v: f64,
    p: f64,
    seed: u64,
    t_grid: Vec<f64>,
    n_realizations: usize,
    psi0: &str,
    kind: &str,
) -> PyResult<MomentSeries> {
    let config = LatticeConfig::new(n_sites, Boundary::Open, mass, c).map_err(err)?;
    let kind: DisorderKind = kind.parse().map_err(err)?;
    let spec = DisorderSpec::new(v, p, kind, seed).map_err(err)?;
    let psi0: InitialState = psi0.parse().map_err(err)?;
    let s = moment_series(&config, &spec, psi0, &t_grid, n_realizations).map_err(err)?;
    Ok(MomentSeries {
        times: s.times,
        values: s.values,
        std_errors: s.std_errors,
        edge_weights: s.edge_weights,
    })
}

/// Least-squares power-law fit on (log t, log M): (exponent, intercept, r²).
#[pyfunction]
fn fit_power_law(
    times: Vec<f64>,
    values: Vec<f64>,
    window_lo: f64,
    window_hi: f64,
) -> PyResult<(f64, f64, f64)> {
    let n = times.len();
    if values.len() != n {
        return Err(PyValueError::new_err("times and values must have equal length"));
    }
    let series = dirac1d::MomentSeries {
        times,
        values,
        std_errors: vec![0.0; n],
        edge_weights: vec![0.0; n],
        mass: 0.0,
        light_speed: 1.0,
        spec: DisorderSpec::constant_zero(0),
        n_realizations: 1,
    };
    let fit = dirac1d::fit_growth_exponent(&series, (window_lo, window_hi)).map_err(err)?;
    Ok((fit.exponent, fit.intercept, fit.r_squared))
}

#[pyfunction]
fn version() -> &'static str {
    env!("CARGO_PKG_VERSION")
}

#[pymodule]
fn dirac1d_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(transfer_matrix, m)?)?;
    m.add_function(wrap_pyfunction!(spectral_radius, m)?)?;
    m.add_function(wrap_pyfunction!(critical_energies, m)?)?;
    m.add_function(wrap_pyfunction!(lyapunov_exponent, m)?)?;
    m.add_function(wrap_pyfunction!(sample_potential, m)?)?;
    m.add_function(wrap_pyfunction!(dirac_eigenvalues, m)?)?;
    m.add_function(wrap_pyfunction!(moment_series_py, m)?)?;
    m.add_function(wrap_pyfunction!(fit_power_law, m)?)?;
    m.add_function(wrap_pyfunction!(version, m)?)?;
    m.add_class::<LyapunovEstimate>()?;
    m.add_class::<MomentSeries>()?;
    Ok(())
}
