//! 1D tight-binding Dirac operator with two-valued random potentials.
//!
//! The crate builds the lattice Dirac and Schrödinger Hamiltonians,
//! samples Bernoulli/dimer disorder reproducibly, estimates Lyapunov
//! exponents from renormalized transfer-matrix products (with an exact
//! reduced route at the critical energies where the naive product is
//! numerically unstable), evolves wavepackets in the exact eigenbasis,
//! and runs the localization/delocalization experiments: moment growth
//! exponents, saturation ratios, the small-mass perturbation envelope,
//! the nonrelativistic limit, velocity-operator oscillations, and
//! eigenfunction decay rates.

// Validation sites use `!(x > 0.0)` on purpose: unlike `x <= 0.0`, the
// negated form also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod config;
pub mod disorder;
pub mod dynamics;
pub mod error;
pub mod grid;
pub mod io;
pub mod lattice;
pub mod runner;
pub mod transfer;

pub use analysis::{fit_growth_exponent, ExperimentReport, GrowthFit};
pub use disorder::{sample_potential, DisorderKind, DisorderSpec, PotentialRealization};
pub use dynamics::{
    diagonalize, evolve_state, moment_series, second_moment, time_averaged_moment, EvolutionPlan,
    InitialState, MomentSeries,
};
pub use error::{Error, Result};
pub use lattice::{
    apply_d, apply_d_star, build_dirac, build_schrodinger, velocity_operator, Boundary,
    HermitianOperator, LatticeConfig, SpinorState,
};
pub use transfer::{
    critical_energies, lyapunov_exponent, propagate_transfer, spectral_radius, transfer_matrix,
    CriticalEnergySet, CriticalRegime, LyapunovEstimate, TransferMatrix,
};
