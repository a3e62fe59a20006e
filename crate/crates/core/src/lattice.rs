//! Finite-lattice Hamiltonians for the 1D tight-binding Dirac and
//! Schrödinger models, plus the difference and velocity operators.
//!
//! Spinor vectors use a block layout: indices `0..n` hold the upper
//! components ψ⁺ and `n..2n` the lower components ψ⁻. With the real
//! convention for the difference operators, both Hamiltonians are real
//! symmetric matrices; the velocity operator is complex Hermitian with
//! purely imaginary entries.

use ndarray::{Array1, Array2, ArrayView1};
use num_complex::Complex64;

use crate::disorder::PotentialRealization;
use crate::error::{Error, Result};

/// Boundary rule for the truncated lattice.
///
/// `Open` treats out-of-range amplitudes as zero, which keeps the d and
/// d* blocks exact mutual adjoints; `Periodic` wraps indices mod n and
/// is used for operator-identity validation (dispersion, A² = I).
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Boundary {
    Open,
    Periodic,
}

impl std::str::FromStr for Boundary {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "open" => Ok(Boundary::Open),
            "periodic" => Ok(Boundary::Periodic),
            other => Err(Error::invalid(format!(
                "unknown boundary '{other}' (expected open|periodic)"
            ))),
        }
    }
}

impl std::fmt::Display for Boundary {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Boundary::Open => write!(f, "open"),
            Boundary::Periodic => write!(f, "periodic"),
        }
    }
}

/// Lattice and model parameters (ħ = 1, lattice spacing = 1).
#[derive(Debug, Clone, Copy)]
pub struct LatticeConfig {
    pub n_sites: usize,
    pub boundary: Boundary,
    /// Particle mass m ≥ 0.
    pub mass: f64,
    /// Speed of light c > 0.
    pub light_speed: f64,
}

impl LatticeConfig {
    pub fn new(n_sites: usize, boundary: Boundary, mass: f64, light_speed: f64) -> Result<Self> {
        if n_sites < 4 {
            return Err(Error::invalid(format!("n_sites = {n_sites} < 4")));
        }
        if !(light_speed > 0.0) {
            return Err(Error::invalid(format!("light_speed = {light_speed} must be > 0")));
        }
        if !(mass >= 0.0) {
            return Err(Error::invalid(format!("mass = {mass} must be >= 0")));
        }
        Ok(LatticeConfig {
            n_sites,
            boundary,
            mass,
            light_speed,
        })
    }

    /// Index of the launch site for centered initial states.
    pub fn center_site(&self) -> usize {
        self.n_sites / 2
    }
}

/// Position coordinate of a site: `n - (n_sites-1)/2`, so the central
/// site of an odd lattice sits at coordinate 0.
pub fn coordinate(n_sites: usize, site: usize) -> f64 {
    site as f64 - (n_sites as f64 - 1.0) / 2.0
}

/// Two-component complex amplitudes per site, block layout [ψ⁺; ψ⁻].
#[derive(Debug, Clone)]
pub struct SpinorState {
    pub amps: Array1<Complex64>,
    pub n_sites: usize,
}

impl SpinorState {
    pub fn zeros(n_sites: usize) -> Self {
        SpinorState {
            amps: Array1::zeros(2 * n_sites),
            n_sites,
        }
    }

    pub fn from_amps(amps: Array1<Complex64>) -> Result<Self> {
        if !amps.len().is_multiple_of(2) || amps.is_empty() {
            return Err(Error::invalid("spinor amplitude vector must have even nonzero length"));
        }
        let n_sites = amps.len() / 2;
        Ok(SpinorState { amps, n_sites })
    }

    /// Basis state δ_site^+ (upper component one-hot).
    pub fn delta_plus(n_sites: usize, site: usize) -> Self {
        let mut s = Self::zeros(n_sites);
        s.amps[site] = Complex64::new(1.0, 0.0);
        s
    }

    /// Basis state δ_site^-.
    pub fn delta_minus(n_sites: usize, site: usize) -> Self {
        let mut s = Self::zeros(n_sites);
        s.amps[n_sites + site] = Complex64::new(1.0, 0.0);
        s
    }

    /// (δ_site^+ + δ_site^-)/√2.
    pub fn delta_symmetric(n_sites: usize, site: usize) -> Self {
        let mut s = Self::zeros(n_sites);
        let a = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        s.amps[site] = a;
        s.amps[n_sites + site] = a;
        s
    }

    /// Normalized Gaussian packet in the upper component, optionally
    /// momentum-displaced by `k0`.
    pub fn gaussian_plus(n_sites: usize, center: usize, width: f64, k0: f64) -> Self {
        let mut s = Self::zeros(n_sites);
        for n in 0..n_sites {
            let d = n as f64 - center as f64;
            let env = (-d * d / (4.0 * width * width)).exp();
            s.amps[n] = Complex64::from_polar(env, k0 * n as f64);
        }
        let nrm = s.norm();
        s.amps.mapv_inplace(|z| z / nrm);
        s
    }

    pub fn plus(&self) -> ArrayView1<'_, Complex64> {
        self.amps.slice(ndarray::s![..self.n_sites])
    }

    pub fn minus(&self) -> ArrayView1<'_, Complex64> {
        self.amps.slice(ndarray::s![self.n_sites..])
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Per-site weights |ψ⁺_n|² + |ψ⁻_n|².
    pub fn site_weights(&self) -> Array1<f64> {
        let n = self.n_sites;
        Array1::from_shape_fn(n, |i| self.amps[i].norm_sqr() + self.amps[n + i].norm_sqr())
    }

    /// Probability mass outside the central 90% of sites.
    pub fn edge_weight(&self) -> f64 {
        edge_weight_of(&self.site_weights())
    }
}

/// Mass outside the central 90% of a site-weight profile.
pub fn edge_weight_of(weights: &Array1<f64>) -> f64 {
    let n = weights.len();
    let margin = (0.05 * n as f64).ceil() as usize;
    let mut w = 0.0;
    for i in 0..n {
        if i < margin || i >= n - margin {
            w += weights[i];
        }
    }
    w
}

/// Dense matrix storage for the built operators. The Dirac and
/// Schrödinger Hamiltonians are real symmetric; the velocity operator
/// needs complex entries.
#[derive(Debug, Clone)]
pub enum OpMatrix {
    Real(Array2<f64>),
    Complex(Array2<Complex64>),
}

/// A Hermitian operator on the finite lattice with a label recording
/// which model and potential built it.
#[derive(Debug, Clone)]
pub struct HermitianOperator {
    pub matrix: OpMatrix,
    pub label: String,
    pub n_sites: usize,
    pub boundary: Boundary,
}

impl HermitianOperator {
    pub fn dim(&self) -> usize {
        match &self.matrix {
            OpMatrix::Real(m) => m.nrows(),
            OpMatrix::Complex(m) => m.nrows(),
        }
    }

    /// Max-norm Hermiticity defect ‖H - H†‖_max.
    pub fn hermiticity_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        match &self.matrix {
            OpMatrix::Real(m) => {
                for i in 0..m.nrows() {
                    for j in 0..i {
                        worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
                    }
                }
            }
            OpMatrix::Complex(m) => {
                for i in 0..m.nrows() {
                    worst = worst.max(m[(i, i)].im.abs());
                    for j in 0..i {
                        worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
                    }
                }
            }
        }
        worst
    }

    /// Apply to a complex vector.
    pub fn apply(&self, v: &Array1<Complex64>) -> Result<Array1<Complex64>> {
        if v.len() != self.dim() {
            return Err(Error::invalid(format!(
                "dimension mismatch: operator dim {} vs state dim {}",
                self.dim(),
                v.len()
            )));
        }
        Ok(match &self.matrix {
            OpMatrix::Real(m) => {
                let re = v.mapv(|z| z.re);
                let im = v.mapv(|z| z.im);
                let mre = m.dot(&re);
                let mim = m.dot(&im);
                Array1::from_shape_fn(v.len(), |i| Complex64::new(mre[i], mim[i]))
            }
            OpMatrix::Complex(m) => m.dot(v),
        })
    }

    /// Real expectation ⟨v, H v⟩ for a normalized or general v.
    pub fn expectation(&self, v: &Array1<Complex64>) -> Result<f64> {
        let hv = self.apply(v)?;
        Ok(v.iter().zip(hv.iter()).map(|(a, b)| (a.conj() * b).re).sum())
    }
}

fn check_len(len: usize) -> Result<()> {
    if len < 2 {
        return Err(Error::invalid(format!("sequence length {len} < 2")));
    }
    Ok(())
}

/// Forward difference (dψ)_n = ψ_{n+1} - ψ_n under the boundary rule.
pub fn apply_d(seq: ArrayView1<'_, Complex64>, boundary: Boundary) -> Result<Array1<Complex64>> {
    check_len(seq.len())?;
    let n = seq.len();
    Ok(Array1::from_shape_fn(n, |i| {
        let next = if i + 1 < n {
            seq[i + 1]
        } else {
            match boundary {
                Boundary::Open => Complex64::new(0.0, 0.0),
                Boundary::Periodic => seq[0],
            }
        };
        next - seq[i]
    }))
}

/// Adjoint difference (d*ψ)_n = ψ_{n-1} - ψ_n under the boundary rule.
pub fn apply_d_star(seq: ArrayView1<'_, Complex64>, boundary: Boundary) -> Result<Array1<Complex64>> {
    check_len(seq.len())?;
    let n = seq.len();
    Ok(Array1::from_shape_fn(n, |i| {
        let prev = if i > 0 {
            seq[i - 1]
        } else {
            match boundary {
                Boundary::Open => Complex64::new(0.0, 0.0),
                Boundary::Periodic => seq[n - 1],
            }
        };
        prev - seq[i]
    }))
}

/// Matrix of d: row n has -1 at n and +1 at n+1 (wrapped if periodic).
fn d_matrix(n: usize, boundary: Boundary) -> Array2<f64> {
    let mut d = Array2::zeros((n, n));
    for i in 0..n {
        d[(i, i)] = -1.0;
        if i + 1 < n {
            d[(i, i + 1)] = 1.0;
        } else if boundary == Boundary::Periodic {
            d[(i, 0)] = 1.0;
        }
    }
    d
}

/// Dirac Hamiltonian H_D(m,c) = [[mc² + V, c d*], [c d, -mc² + V]] as a
/// real symmetric 2n × 2n matrix in block layout.
pub fn build_dirac(config: &LatticeConfig, potential: &PotentialRealization) -> Result<HermitianOperator> {
    let n = config.n_sites;
    if potential.values.len() != n {
        return Err(Error::invalid(format!(
            "potential length {} != n_sites {}",
            potential.values.len(),
            n
        )));
    }
    let (m, c) = (config.mass, config.light_speed);
    let rest = m * c * c;
    let d = d_matrix(n, config.boundary);
    let mut h = Array2::zeros((2 * n, 2 * n));
    for i in 0..n {
        h[(i, i)] = rest + potential.values[i];
        h[(n + i, n + i)] = -rest + potential.values[i];
        for j in 0..n {
            // upper-right block c d* = c dᵀ, lower-left block c d
            h[(i, n + j)] = c * d[(j, i)];
            h[(n + i, j)] = c * d[(i, j)];
        }
    }
    Ok(HermitianOperator {
        matrix: OpMatrix::Real(h),
        label: format!("dirac(m={m},c={c},{},{})", config.boundary, potential.label()),
        n_sites: n,
        boundary: config.boundary,
    })
}

/// Schrödinger Hamiltonian (H_S ψ)_n = (1/2m)(-ψ_{n+1} - ψ_{n-1} + 2ψ_n) + V_n ψ_n.
pub fn build_schrodinger(config: &LatticeConfig, potential: &PotentialRealization) -> Result<HermitianOperator> {
    let n = config.n_sites;
    if config.mass == 0.0 {
        return Err(Error::invalid("schrodinger model requires mass > 0 (1/2m singular)"));
    }
    if potential.values.len() != n {
        return Err(Error::invalid(format!(
            "potential length {} != n_sites {}",
            potential.values.len(),
            n
        )));
    }
    let kin = 1.0 / (2.0 * config.mass);
    let mut h = Array2::zeros((n, n));
    for i in 0..n {
        h[(i, i)] = 2.0 * kin + potential.values[i];
        if i + 1 < n {
            h[(i, i + 1)] = -kin;
            h[(i + 1, i)] = -kin;
        } else if config.boundary == Boundary::Periodic {
            h[(i, 0)] = -kin;
            h[(0, i)] = -kin;
        }
    }
    Ok(HermitianOperator {
        matrix: OpMatrix::Real(h),
        label: format!(
            "schrodinger(m={},{},{})",
            config.mass,
            config.boundary,
            potential.label()
        ),
        n_sites: n,
        boundary: config.boundary,
    })
}

/// Velocity operator cA with A = i [[0, -d*-1], [d+1, 0]].
///
/// Since (d+1)ψ_n = ψ_{n+1} and (d*+1)ψ_n = ψ_{n-1}, the action is
/// (cAψ)⁺_n = -ic ψ⁻_{n-1} and (cAψ)⁻_n = +ic ψ⁺_{n+1}. On a periodic
/// ring A² = I exactly and the spectrum of cA is ±c; on an open chain
/// these hold on the interior, with a deviation at the two edge slots.
pub fn velocity_operator(config: &LatticeConfig) -> HermitianOperator {
    let n = config.n_sites;
    let c = config.light_speed;
    let mut a = Array2::<Complex64>::zeros((2 * n, 2 * n));
    let ic = Complex64::new(0.0, c);
    for i in 0..n {
        // upper row i couples to minus component at site i-1
        if i > 0 {
            a[(i, n + i - 1)] = -ic;
        } else if config.boundary == Boundary::Periodic {
            a[(0, n + n - 1)] = -ic;
        }
        // lower row i couples to plus component at site i+1
        if i + 1 < n {
            a[(n + i, i + 1)] = ic;
        } else if config.boundary == Boundary::Periodic {
            a[(n + n - 1, 0)] = ic;
        }
    }
    HermitianOperator {
        matrix: OpMatrix::Complex(a),
        label: format!("velocity(c={c},{})", config.boundary),
        n_sites: n,
        boundary: config.boundary,
    }
}
