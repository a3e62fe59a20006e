//! Exact unitary time evolution on the finite lattice and the
//! time-averaged mean squared displacement M(t).
//!
//! Evolution goes through a full spectral decomposition, so there is no
//! time-integration error: ψ(t) = U e^{-iλt} U† ψ0, and the time average
//! of ⟨ψ(s)|X²|ψ(s)⟩ over [0, t] has the closed form
//! Σ_{jk} c̄_k c_j X_{kj} K(ω_{jk} t) with K(x) = (e^{ix}-1)/(ix).

use ndarray::{Array1, Array2};
use ndarray_linalg::{Eigh, UPLO};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::disorder::{sample_potential, DisorderSpec, PotentialRealization};
use crate::error::{Error, Result};
use crate::lattice::{
    build_dirac, coordinate, edge_weight_of, HermitianOperator, LatticeConfig, OpMatrix,
    SpinorState,
};

/// Moment-series points with boundary leakage above this are flagged as
/// truncation-contaminated.
pub const EDGE_FLAG_THRESHOLD: f64 = 1e-6;

/// Eigenbasis storage; Hamiltonians here are real symmetric, the
/// complex variant covers Hermitian operators like the velocity.
#[derive(Debug, Clone)]
pub enum EigenBasis {
    Real(Array2<f64>),
    Complex(Array2<Complex64>),
}

/// Spectral decomposition of a Hamiltonian plus the per-basis-index
/// position coordinate (shared by the ± spinor components of a site).
#[derive(Debug, Clone)]
pub struct EvolutionPlan {
    pub eigenvalues: Array1<f64>,
    pub basis: EigenBasis,
    /// coord of the site carrying basis index i.
    pub coords: Array1<f64>,
    pub label: String,
    pub n_sites: usize,
}

impl EvolutionPlan {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// Spectral weights |⟨φ_j, ψ0⟩|².
    pub fn spectral_weights(&self, state: &Array1<Complex64>) -> Result<Array1<f64>> {
        let (a, b) = self.project(state)?;
        Ok(Array1::from_shape_fn(self.dim(), |j| a[j] * a[j] + b[j] * b[j]))
    }

    /// Expansion coefficients U†ψ split into real and imaginary parts.
    fn project(&self, state: &Array1<Complex64>) -> Result<(Array1<f64>, Array1<f64>)> {
        if state.len() != self.dim() {
            return Err(Error::invalid(format!(
                "dimension mismatch: plan dim {} vs state dim {}",
                self.dim(),
                state.len()
            )));
        }
        match &self.basis {
            EigenBasis::Real(u) => {
                let re = state.mapv(|z| z.re);
                let im = state.mapv(|z| z.im);
                Ok((u.t().dot(&re), u.t().dot(&im)))
            }
            EigenBasis::Complex(u) => {
                let mut a = Array1::zeros(self.dim());
                let mut b = Array1::zeros(self.dim());
                for j in 0..self.dim() {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for i in 0..self.dim() {
                        acc += u[(i, j)].conj() * state[i];
                    }
                    a[j] = acc.re;
                    b[j] = acc.im;
                }
                Ok((a, b))
            }
        }
    }
}

/// Full spectral decomposition of a Hermitian operator.
pub fn diagonalize(h: &HermitianOperator) -> Result<EvolutionPlan> {
    let dim = h.dim();
    let n = h.n_sites;
    let (eigenvalues, basis) = match &h.matrix {
        OpMatrix::Real(m) => {
            let (e, u) = m
                .clone()
                .eigh(UPLO::Lower)
                .map_err(|err| Error::Numerical(format!("eigh failed for {}: {err}", h.label)))?;
            (e, EigenBasis::Real(u))
        }
        OpMatrix::Complex(m) => {
            let (e, u) = m
                .clone()
                .eigh(UPLO::Lower)
                .map_err(|err| Error::Numerical(format!("eigh failed for {}: {err}", h.label)))?;
            (e, EigenBasis::Complex(u))
        }
    };
    // cheap orthogonality probe: U Uᵀ x = x for a fixed test vector
    if let EigenBasis::Real(u) = &basis {
        let x = Array1::from_shape_fn(dim, |i| ((i as f64) * 0.7312 + 0.2).sin());
        let y = u.dot(&u.t().dot(&x));
        let defect = y
            .iter()
            .zip(x.iter())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        if defect > 1e-9 {
            return Err(Error::Numerical(format!(
                "eigenvector basis not orthogonal for {} (probe defect {defect:.3e})",
                h.label
            )));
        }
    }
    let coords = if dim == 2 * n {
        Array1::from_shape_fn(dim, |i| coordinate(n, i % n))
    } else {
        Array1::from_shape_fn(dim, |i| coordinate(dim, i))
    };
    Ok(EvolutionPlan {
        eigenvalues,
        basis,
        coords,
        label: h.label.clone(),
        n_sites: n,
    })
}

/// ψ(t) = U e^{-iλt} U† ψ0 for a raw complex vector.
pub fn evolve_raw(plan: &EvolutionPlan, state: &Array1<Complex64>, t: f64) -> Result<Array1<Complex64>> {
    let (a, b) = plan.project(state)?;
    let dim = plan.dim();
    let mut cre = Array1::zeros(dim);
    let mut cim = Array1::zeros(dim);
    for j in 0..dim {
        let (s, c) = (plan.eigenvalues[j] * t).sin_cos();
        // (a + ib)(c - is)
        cre[j] = a[j] * c + b[j] * s;
        cim[j] = b[j] * c - a[j] * s;
    }
    Ok(match &plan.basis {
        EigenBasis::Real(u) => {
            let re = u.dot(&cre);
            let im = u.dot(&cim);
            Array1::from_shape_fn(dim, |i| Complex64::new(re[i], im[i]))
        }
        EigenBasis::Complex(u) => {
            let c: Array1<Complex64> =
                Array1::from_shape_fn(dim, |j| Complex64::new(cre[j], cim[j]));
            u.dot(&c)
        }
    })
}

/// Spinor wrapper around [`evolve_raw`].
pub fn evolve_state(plan: &EvolutionPlan, state: &SpinorState, t: f64) -> Result<SpinorState> {
    let amps = evolve_raw(plan, &state.amps, t)?;
    Ok(SpinorState {
        amps,
        n_sites: state.n_sites,
    })
}

/// Σ_n coord(n)² (|ψ⁺_n|² + |ψ⁻_n|²) for a raw vector under a plan's
/// coordinates.
pub fn second_moment_raw(plan: &EvolutionPlan, state: &Array1<Complex64>) -> Result<f64> {
    if state.len() != plan.dim() {
        return Err(Error::invalid("dimension mismatch in second_moment"));
    }
    Ok(state
        .iter()
        .zip(plan.coords.iter())
        .map(|(z, &x)| x * x * z.norm_sqr())
        .sum())
}

pub fn second_moment(plan: &EvolutionPlan, state: &SpinorState) -> Result<f64> {
    second_moment_raw(plan, &state.amps)
}

/// sin(x)/x with a series branch to avoid cancellation at small x.
fn kernel_sinc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        let x2 = x * x;
        1.0 - x2 / 6.0 + x2 * x2 / 120.0
    } else {
        x.sin() / x
    }
}

/// (1 - cos x)/x with a series branch at small x.
fn kernel_hav(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        let x2 = x * x;
        x / 2.0 - x * x2 / 24.0
    } else {
        (1.0 - x.cos()) / x
    }
}

/// Precomputed data for evaluating M(t) at many times for one
/// (Hamiltonian, initial state) pair.
pub struct MomentEvaluator {
    energies: Array1<f64>,
    /// X² in the eigenbasis.
    x_eig: Array2<f64>,
    c_re: Array1<f64>,
    c_im: Array1<f64>,
    has_imag: bool,
}

impl MomentEvaluator {
    pub fn new(plan: &EvolutionPlan, state: &Array1<Complex64>) -> Result<Self> {
        let u = match &plan.basis {
            EigenBasis::Real(u) => u,
            EigenBasis::Complex(_) => {
                return Err(Error::invalid(
                    "moment evaluation requires a real-symmetric Hamiltonian plan",
                ))
            }
        };
        let (c_re, c_im) = plan.project(state)?;
        let dim = plan.dim();
        // X² in the eigenbasis: Uᵀ diag(coord²) U
        let mut weighted = u.clone();
        for i in 0..dim {
            let w = plan.coords[i] * plan.coords[i];
            for j in 0..dim {
                weighted[(i, j)] *= w;
            }
        }
        let x_eig = u.t().dot(&weighted);
        let has_imag = c_im.iter().any(|&b| b != 0.0);
        Ok(MomentEvaluator {
            energies: plan.eigenvalues.clone(),
            x_eig,
            c_re,
            c_im,
            has_imag,
        })
    }

    /// Closed-form M(t); t = 0 returns the plain second moment.
    pub fn eval(&self, t: f64) -> f64 {
        let dim = self.energies.len();
        let e = &self.energies;
        let a = &self.c_re;
        let b = &self.c_im;
        let rows: Vec<f64> = (0..dim)
            .into_par_iter()
            .map(|j| {
                let mut acc = (a[j] * a[j] + b[j] * b[j]) * self.x_eig[(j, j)];
                let row = self.x_eig.row(j);
                if self.has_imag {
                    // time average of Σ c̄_k c_j Xe_{kj} e^{-iω_{jk}s}:
                    // the kernel is sinc(ωt) - i·hav(ωt), so the real
                    // part picks up +Im(c̄_k c_j)·hav
                    for k in (j + 1)..dim {
                        let om = (e[j] - e[k]) * t;
                        let gre = a[j] * a[k] + b[j] * b[k];
                        let gim = a[k] * b[j] - b[k] * a[j];
                        acc += 2.0 * row[k] * (gre * kernel_sinc(om) + gim * kernel_hav(om));
                    }
                } else {
                    for k in (j + 1)..dim {
                        let om = (e[j] - e[k]) * t;
                        acc += 2.0 * row[k] * a[j] * a[k] * kernel_sinc(om);
                    }
                }
                acc
            })
            .collect();
        rows.iter().sum()
    }
}

/// Time-averaged mean squared displacement at a single time.
pub fn time_averaged_moment(plan: &EvolutionPlan, state: &SpinorState, t: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::invalid(format!("t = {t} must be > 0")));
    }
    Ok(MomentEvaluator::new(plan, &state.amps)?.eval(t))
}

/// Initial-state choices for moment runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum InitialState {
    /// δ_center^+ (the default).
    DeltaPlus,
    /// (δ_center^+ + δ_center^-)/√2.
    DeltaSymmetric,
}

impl InitialState {
    pub fn build(&self, n_sites: usize) -> SpinorState {
        let center = n_sites / 2;
        match self {
            InitialState::DeltaPlus => SpinorState::delta_plus(n_sites, center),
            InitialState::DeltaSymmetric => SpinorState::delta_symmetric(n_sites, center),
        }
    }
}

impl std::str::FromStr for InitialState {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "delta_plus" => Ok(InitialState::DeltaPlus),
            "delta_symmetric" => Ok(InitialState::DeltaSymmetric),
            other => Err(Error::invalid(format!(
                "unknown initial state '{other}' (expected delta_plus|delta_symmetric)"
            ))),
        }
    }
}

/// Disorder-averaged M(t) over a time grid, with per-time boundary
/// leakage (max over the ensemble of the running maximum).
#[derive(Debug, Clone, serde::Serialize)]
pub struct MomentSeries {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub std_errors: Vec<f64>,
    pub edge_weights: Vec<f64>,
    pub mass: f64,
    pub light_speed: f64,
    pub spec: DisorderSpec,
    pub n_realizations: usize,
}

impl MomentSeries {
    pub fn unflagged(&self, i: usize) -> bool {
        self.edge_weights[i] < EDGE_FLAG_THRESHOLD
    }
}

fn validate_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::InsufficientData("empty time grid".into()));
    }
    if !(grid[0] > 0.0) {
        return Err(Error::invalid("time grid must be positive"));
    }
    for w in grid.windows(2) {
        if !(w[1] > w[0]) {
            return Err(Error::invalid("time grid must be strictly increasing"));
        }
    }
    Ok(())
}

/// M(t) and running-max edge weight along the grid, one realization.
pub fn moment_profile(
    config: &LatticeConfig,
    potential: &PotentialRealization,
    psi0: InitialState,
    grid: &[f64],
) -> Result<(Vec<f64>, Vec<f64>)> {
    validate_grid(grid)?;
    let h = build_dirac(config, potential)?;
    let plan = diagonalize(&h)?;
    let state = psi0.build(config.n_sites);
    let evaluator = MomentEvaluator::new(&plan, &state.amps)?;
    let values: Vec<f64> = grid.iter().map(|&t| evaluator.eval(t)).collect();
    let mut edges = Vec::with_capacity(grid.len());
    let mut running = 0.0f64;
    for &t in grid {
        let psi_t = evolve_state(&plan, &state, t)?;
        running = running.max(edge_weight_of(&psi_t.site_weights()));
        edges.push(running);
    }
    Ok((values, edges))
}

/// Disorder-averaged series from explicit realizations (used for
/// common-random-number comparisons).
pub fn moment_series_from_potentials(
    config: &LatticeConfig,
    potentials: &[PotentialRealization],
    psi0: InitialState,
    grid: &[f64],
    spec: &DisorderSpec,
) -> Result<MomentSeries> {
    validate_grid(grid)?;
    if potentials.is_empty() {
        return Err(Error::InsufficientData("no realizations".into()));
    }
    let nt = grid.len();
    let mut mean = vec![0.0; nt];
    let mut m2 = vec![0.0; nt];
    let mut edge = vec![0.0f64; nt];
    for (count, pot) in potentials.iter().enumerate() {
        let (vals, edges) = moment_profile(config, pot, psi0, grid)?;
        let k = count as f64 + 1.0;
        for i in 0..nt {
            let delta = vals[i] - mean[i];
            mean[i] += delta / k;
            m2[i] += delta * (vals[i] - mean[i]);
            edge[i] = edge[i].max(edges[i]);
        }
    }
    let n = potentials.len() as f64;
    let std_errors = m2
        .iter()
        .map(|&s| if n > 1.0 { (s / (n - 1.0) / n).sqrt() } else { 0.0 })
        .collect();
    Ok(MomentSeries {
        times: grid.to_vec(),
        values: mean,
        std_errors,
        edge_weights: edge,
        mass: config.mass,
        light_speed: config.light_speed,
        spec: *spec,
        n_realizations: potentials.len(),
    })
}

/// Disorder-averaged M(t): samples `n_realizations` potentials on
/// streams 0..n and averages, one diagonalization each.
pub fn moment_series(
    config: &LatticeConfig,
    spec: &DisorderSpec,
    psi0: InitialState,
    grid: &[f64],
    n_realizations: usize,
) -> Result<MomentSeries> {
    let potentials: Vec<PotentialRealization> = (0..n_realizations as u64)
        .map(|r| sample_potential(spec, config.n_sites, r))
        .collect::<Result<_>>()?;
    moment_series_from_potentials(config, &potentials, psi0, grid, spec)
}

/// Expectation values (⟨n̂⟩, ⟨cA⟩) at time t.
pub fn mean_position_and_velocity(
    plan: &EvolutionPlan,
    psi0: &SpinorState,
    t: f64,
    velocity_op: &HermitianOperator,
) -> Result<(f64, f64)> {
    let psi_t = evolve_state(plan, psi0, t)?;
    let n_mean = psi_t
        .amps
        .iter()
        .zip(plan.coords.iter())
        .map(|(z, &x)| x * z.norm_sqr())
        .sum();
    let v_mean = velocity_op.expectation(&psi_t.amps)?;
    Ok((n_mean, v_mean))
}
