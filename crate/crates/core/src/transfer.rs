//! Transfer matrices, renormalized products, Lyapunov-exponent
//! estimation, and the catalogue of critical energies.
//!
//! The estimator has two routes. The generic route multiplies 2×2
//! matrices with periodic renormalization. At the critical energies of
//! the massive model the two transfer matrices share an invariant pair
//! of lines which both matrices permute; the exact product log-norm is
//! then a zero-drift alternating walk, and naive floating-point
//! products destroy that cancellation (roundoff injected at step k is
//! amplified by the product norm on both sides of k, which saturates
//! the estimate at γ ≈ 1e-2 after a few hundred steps). When such a
//! pair is detected the product is propagated exactly through its
//! scalar action on the pair, which is stable for any length.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::disorder::{sample_potential, DisorderKind, DisorderSpec, PotentialRealization};
use crate::error::{Error, Result};
use crate::lattice::LatticeConfig;

/// Renormalize the running product once its Frobenius norm exceeds this.
const RENORM_THRESHOLD: f64 = 1e100;

/// Projective residual below which a mapped line is accepted as a member
/// of an invariant pair.
const LINE_PAIR_TOL: f64 = 1e-10;

/// Real 2×2 transfer matrix with unit determinant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransferMatrix(pub [[f64; 2]; 2]);

impl TransferMatrix {
    pub fn identity() -> Self {
        TransferMatrix([[1.0, 0.0], [0.0, 1.0]])
    }

    pub fn det(&self) -> f64 {
        let m = &self.0;
        m[0][0] * m[1][1] - m[0][1] * m[1][0]
    }

    pub fn trace(&self) -> f64 {
        self.0[0][0] + self.0[1][1]
    }

    pub fn frobenius(&self) -> f64 {
        let m = &self.0;
        (m[0][0] * m[0][0] + m[0][1] * m[0][1] + m[1][0] * m[1][0] + m[1][1] * m[1][1]).sqrt()
    }

    pub fn mul(&self, rhs: &TransferMatrix) -> TransferMatrix {
        let a = &self.0;
        let b = &rhs.0;
        TransferMatrix([
            [
                a[0][0] * b[0][0] + a[0][1] * b[1][0],
                a[0][0] * b[0][1] + a[0][1] * b[1][1],
            ],
            [
                a[1][0] * b[0][0] + a[1][1] * b[1][0],
                a[1][0] * b[0][1] + a[1][1] * b[1][1],
            ],
        ])
    }

    pub fn apply(&self, v: [f64; 2]) -> [f64; 2] {
        [
            self.0[0][0] * v[0] + self.0[0][1] * v[1],
            self.0[1][0] * v[0] + self.0[1][1] * v[1],
        ]
    }

    pub fn scale(&self, s: f64) -> TransferMatrix {
        TransferMatrix([
            [self.0[0][0] * s, self.0[0][1] * s],
            [self.0[1][0] * s, self.0[1][1] * s],
        ])
    }

    /// Largest eigenvalue magnitude. For real det-1 matrices this is 1
    /// when |trace| ≤ 2 and (|τ| + √(τ²-4))/2 otherwise.
    pub fn spectral_radius(&self) -> f64 {
        let tau = self.trace();
        let det = self.det();
        let disc = tau * tau - 4.0 * det;
        if disc <= 0.0 {
            det.abs().sqrt()
        } else {
            let s = disc.sqrt();
            ((tau.abs() + s) / 2.0).max(((tau.abs() - s) / 2.0).abs())
        }
    }

    /// Real eigenvectors (normalized), if the eigenvalues are real and
    /// distinct.
    fn real_eigenvectors(&self) -> Option<[[f64; 2]; 2]> {
        let tau = self.trace();
        let det = self.det();
        let disc = tau * tau - 4.0 * det;
        if disc <= 1e-14 * (tau * tau + 4.0 * det.abs()) {
            return None;
        }
        let s = disc.sqrt();
        let l1 = (tau + s) / 2.0;
        let l2 = (tau - s) / 2.0;
        let m = &self.0;
        let vec_for = |l: f64| -> [f64; 2] {
            // rows of (M - λI) are proportional; take the larger one
            let r1 = [m[0][0] - l, m[0][1]];
            let r2 = [m[1][0], m[1][1] - l];
            let (a, b) = if r1[0].hypot(r1[1]) >= r2[0].hypot(r2[1]) {
                (r1[0], r1[1])
            } else {
                (r2[0], r2[1])
            };
            let v = [-b, a];
            let n = v[0].hypot(v[1]);
            [v[0] / n, v[1] / n]
        };
        Some([vec_for(l1), vec_for(l2)])
    }
}

/// Transfer matrix T^E_V of the Dirac eigenvalue equation,
/// [[1 + (m²c⁴ - (E-V)²)/c², (mc² + E - V)/c], [(mc² - E + V)/c, 1]].
pub fn transfer_matrix(energy: f64, potential: f64, mass: f64, light_speed: f64) -> TransferMatrix {
    let c = light_speed;
    let rest = mass * c * c;
    let x = energy - potential;
    TransferMatrix([
        [1.0 + (rest * rest - x * x) / (c * c), (rest + x) / c],
        [(rest - x) / c, 1.0],
    ])
}

/// Free function mirror of [`TransferMatrix::spectral_radius`].
pub fn spectral_radius(t: &TransferMatrix) -> f64 {
    t.spectral_radius()
}

/// Result of a renormalized transfer-matrix product.
#[derive(Debug, Clone, Copy)]
pub struct Propagation {
    /// Total log of the product norm (Frobenius).
    pub log_norm_sum: f64,
    /// Unit-norm residual frame.
    pub frame: TransferMatrix,
}

/// Ordered product T_{V_n}···T_{V_1} with periodic renormalization;
/// overflow-free for arbitrary length.
pub fn propagate_transfer(
    energy: f64,
    potential: &PotentialRealization,
    config: &LatticeConfig,
) -> Result<Propagation> {
    if potential.is_empty() {
        return Err(Error::invalid("empty potential realization"));
    }
    let (m, c) = (config.mass, config.light_speed);
    let mut prod = TransferMatrix::identity();
    let mut log_sum = 0.0;
    for &v in &potential.values {
        let t = transfer_matrix(energy, v, m, c);
        prod = t.mul(&prod);
        let norm = prod.frobenius();
        if norm > RENORM_THRESHOLD {
            log_sum += norm.ln();
            prod = prod.scale(1.0 / norm);
        }
    }
    let norm = prod.frobenius();
    Ok(Propagation {
        log_norm_sum: log_sum + norm.ln(),
        frame: prod.scale(1.0 / norm),
    })
}

fn product_log_norm_from_draws(
    t_minus: &TransferMatrix,
    t_plus: &TransferMatrix,
    draws: impl Iterator<Item = bool>,
) -> f64 {
    let mut prod = TransferMatrix::identity();
    let mut log_sum = 0.0;
    for is_minus in draws {
        let t = if is_minus { t_minus } else { t_plus };
        prod = t.mul(&prod);
        let norm = prod.frobenius();
        if norm > RENORM_THRESHOLD {
            log_sum += norm.ln();
            prod = prod.scale(1.0 / norm);
        }
    }
    log_sum + prod.frobenius().ln()
}

/// Invariant line pair shared by the two transfer matrices, with the
/// permutation and scaling each matrix induces on it.
#[derive(Debug, Clone, Copy)]
pub struct LinePairReduction {
    /// Pair members as unit vectors (columns of the basis change).
    pub basis: [[f64; 2]; 2],
    /// `table[letter][line] = (destination line, log |scale|)`, with
    /// letter 0 = T at -v, letter 1 = T at +v.
    table: [[(usize, f64); 2]; 2],
}

impl LinePairReduction {
    /// Look for a line pair invariant under both matrices. Candidates
    /// come from the real eigenvectors of T₊, T₋, T₊T₋ and (T₊T₋)².
    pub fn detect(t_minus: &TransferMatrix, t_plus: &TransferMatrix) -> Option<Self> {
        let prod = t_plus.mul(t_minus);
        let prod2 = prod.mul(&prod);
        let candidates = [
            t_plus.real_eigenvectors(),
            t_minus.real_eigenvectors(),
            prod.real_eigenvectors(),
            prod2.real_eigenvectors(),
        ];
        for cand in candidates.into_iter().flatten() {
            let [u, w] = cand;
            // reject near-parallel pairs
            if (u[0] * w[1] - u[1] * w[0]).abs() < 1e-6 {
                continue;
            }
            if let Some(table) = Self::action_table(t_minus, t_plus, &u, &w) {
                return Some(LinePairReduction {
                    basis: [u, w],
                    table,
                });
            }
        }
        None
    }

    fn action_table(
        t_minus: &TransferMatrix,
        t_plus: &TransferMatrix,
        u: &[f64; 2],
        w: &[f64; 2],
    ) -> Option<[[(usize, f64); 2]; 2]> {
        let lines = [u, w];
        let mut table = [[(0usize, 0.0f64); 2]; 2];
        for (li, t) in [t_minus, t_plus].into_iter().enumerate() {
            for (xi, x) in lines.iter().enumerate() {
                let y = t.apply(**x);
                let ny = y[0].hypot(y[1]);
                let mut found = None;
                for (di, dvec) in lines.iter().enumerate() {
                    let cross = (y[0] * dvec[1] - y[1] * dvec[0]).abs();
                    if cross <= LINE_PAIR_TOL * ny {
                        found = Some((di, ny.ln()));
                        break;
                    }
                }
                table[li][xi] = found?;
            }
        }
        Some(table)
    }

    /// Log-norm of the product over a draw sequence, computed through
    /// the scalar action on the pair. Exact up to the bounded basis
    /// conversion, and immune to the roundoff amplification that breaks
    /// the direct product.
    pub fn product_log_norm(&self, draws: impl Iterator<Item = bool>) -> f64 {
        let mut line = 0usize;
        let mut acc = 0.0f64;
        for is_minus in draws {
            let (dest, ls) = self.table[if is_minus { 0 } else { 1 }][line];
            acc += ls;
            line = dest;
        }
        // The companion chain starting from the other line accumulates
        // -acc (det = ±1), so in the pair basis log‖P‖ = |acc|. Convert
        // to the standard Frobenius norm.
        self.standard_log_norm(acc, line)
    }

    fn standard_log_norm(&self, acc: f64, dest_of_first: usize) -> f64 {
        let [u, w] = self.basis;
        let binv_det = u[0] * w[1] - u[1] * w[0];
        // Rows of B⁻¹ (without 1/det): [w1, -w0] and [-u1, u0].
        let rows = [[w[1], -w[0]], [-u[1], u[0]]];
        // Materialize P / e^|acc| = C̃ · B⁻¹ with the scales e^(acc-|acc|)
        // and e^(-acc-|acc|), both ≤ 1, so nothing overflows however
        // large the walk gets.
        let s1 = (acc - acc.abs()).exp();
        let s2 = (-acc - acc.abs()).exp();
        let cols = [
            [
                self.basis[dest_of_first][0] * s1,
                self.basis[dest_of_first][1] * s1,
            ],
            [
                self.basis[1 - dest_of_first][0] * s2,
                self.basis[1 - dest_of_first][1] * s2,
            ],
        ];
        let mut p = [[0.0; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                p[i][j] = (cols[0][i] * rows[0][j] + cols[1][i] * rows[1][j]) / binv_det;
            }
        }
        acc.abs() + TransferMatrix(p).frobenius().ln()
    }
}

/// Monte-Carlo estimate of the Lyapunov exponent γ(E).
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct LyapunovEstimate {
    pub energy: f64,
    /// Mean of log-norm/n over realizations, nats per site.
    pub gamma: f64,
    pub std_error: f64,
    pub n_steps: usize,
    pub n_realizations: usize,
    /// 1/γ when γ is resolved from zero, +∞ otherwise.
    pub loc_length: f64,
    /// γ > 3·std_error; when false the estimate is consistent with 0.
    pub resolved_from_zero: bool,
}

fn minus_draws(seed: u64, stream: u64, p: f64, n: usize) -> impl Iterator<Item = bool> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    (0..n).map(move |_| rng.random::<f64>() < p)
}

/// Estimate γ(E) for the given disorder. Realizations use disjoint
/// ChaCha streams and are aggregated in stream order.
pub fn lyapunov_exponent(
    energy: f64,
    spec: &DisorderSpec,
    mass: f64,
    light_speed: f64,
    n_steps: usize,
    n_realizations: usize,
) -> Result<LyapunovEstimate> {
    spec.validate()?;
    if n_steps < 10_000 {
        return Err(Error::invalid(format!("n_steps = {n_steps} < 1e4")));
    }
    if n_realizations == 0 {
        return Err(Error::invalid("n_realizations must be >= 1"));
    }
    let gammas: Vec<f64> = match spec.kind {
        DisorderKind::Bernoulli | DisorderKind::ConstantZero => {
            let (vm, vp) = match spec.kind {
                DisorderKind::Bernoulli => (-spec.v, spec.v),
                _ => (0.0, 0.0),
            };
            let t_minus = transfer_matrix(energy, vm, mass, light_speed);
            let t_plus = transfer_matrix(energy, vp, mass, light_speed);
            let reduction = LinePairReduction::detect(&t_minus, &t_plus);
            (0..n_realizations as u64)
                .into_par_iter()
                .map(|r| {
                    let draws = minus_draws(spec.seed, r, spec.p, n_steps);
                    let log_norm = match &reduction {
                        Some(red) => red.product_log_norm(draws),
                        None => product_log_norm_from_draws(&t_minus, &t_plus, draws),
                    };
                    log_norm / n_steps as f64
                })
                .collect()
        }
        DisorderKind::Dimer => (0..n_realizations as u64)
            .into_par_iter()
            .map(|r| {
                let pot = sample_potential(spec, n_steps.max(4), r).expect("validated spec");
                let t_minus = transfer_matrix(energy, -spec.v, mass, light_speed);
                let t_plus = transfer_matrix(energy, spec.v, mass, light_speed);
                let draws = pot.values.iter().map(|&v| v < 0.0);
                product_log_norm_from_draws(&t_minus, &t_plus, draws) / n_steps as f64
            })
            .collect(),
    };
    let n = gammas.len() as f64;
    let mean = gammas.iter().sum::<f64>() / n;
    let var = if gammas.len() > 1 {
        gammas.iter().map(|g| (g - mean) * (g - mean)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    let std_error = (var / n).sqrt();
    let resolved = mean > 3.0 * std_error && mean > 0.0;
    Ok(LyapunovEstimate {
        energy,
        gamma: mean,
        std_error,
        n_steps,
        n_realizations,
        loc_length: if resolved { 1.0 / mean } else { f64::INFINITY },
        resolved_from_zero: resolved,
    })
}

/// Regime of the critical-energy catalogue.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum CriticalRegime {
    Massless,
    MassiveVEqSpecial,
    MassiveVEqCOverSqrt2,
    None,
}

impl std::fmt::Display for CriticalRegime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CriticalRegime::Massless => write!(f, "massless"),
            CriticalRegime::MassiveVEqSpecial => write!(f, "massive_v_eq_special"),
            CriticalRegime::MassiveVEqCOverSqrt2 => write!(f, "massive_v_eq_c_over_sqrt2"),
            CriticalRegime::None => write!(f, "none"),
        }
    }
}

/// Energies with vanishing Lyapunov exponent for the given (m, c, v).
#[derive(Debug, Clone, serde::Serialize)]
pub struct CriticalEnergySet {
    pub energies: Vec<f64>,
    pub regime: CriticalRegime,
}

fn rel_close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * a.abs().max(b.abs())
}

/// The catalogue: massless (0 < v ≤ c, v ≠ c/√2) has Ẽ = ±v; massive
/// has Ẽ = 0 at v = c√(2+m²c²) and Ẽ = ±c/√2 ± c√(2+m²c²) at v = c/√2.
pub fn critical_energies(mass: f64, light_speed: f64, v: f64) -> Result<CriticalEnergySet> {
    if !(light_speed > 0.0) || !(v > 0.0) || !(mass >= 0.0) {
        return Err(Error::invalid(format!(
            "need c > 0, v > 0, m >= 0 (got c={light_speed}, v={v}, m={mass})"
        )));
    }
    let c = light_speed;
    let v_sqrt2 = c / std::f64::consts::SQRT_2;
    if mass == 0.0 {
        let in_range = v <= c || rel_close(v, c);
        if in_range && !rel_close(v, v_sqrt2) {
            return Ok(CriticalEnergySet {
                energies: vec![-v, v],
                regime: CriticalRegime::Massless,
            });
        }
        return Ok(CriticalEnergySet {
            energies: vec![],
            regime: CriticalRegime::None,
        });
    }
    let w = c * (2.0 + mass * mass * c * c).sqrt();
    if rel_close(v, w) {
        return Ok(CriticalEnergySet {
            energies: vec![0.0],
            regime: CriticalRegime::MassiveVEqSpecial,
        });
    }
    if rel_close(v, v_sqrt2) {
        let s = v_sqrt2;
        let mut energies = vec![-s - w, -s + w, s - w, s + w];
        energies.sort_by(f64::total_cmp);
        return Ok(CriticalEnergySet {
            energies,
            regime: CriticalRegime::MassiveVEqCOverSqrt2,
        });
    }
    Ok(CriticalEnergySet {
        energies: vec![],
        regime: CriticalRegime::None,
    })
}

/// Energy grid for a Lyapunov sweep: uniform base grid plus log-spaced
/// refinement around each catalogue energy in range.
pub fn sweep_energies(
    e_min: f64,
    e_max: f64,
    n_points: usize,
    mass: f64,
    light_speed: f64,
    v: f64,
    refine: bool,
) -> Result<Vec<f64>> {
    if !(e_max > e_min) || n_points < 2 {
        return Err(Error::invalid("sweep needs e_max > e_min and n_points >= 2"));
    }
    let mut grid: Vec<f64> = (0..n_points)
        .map(|i| e_min + (e_max - e_min) * i as f64 / (n_points - 1) as f64)
        .collect();
    if refine {
        let cat = critical_energies(mass, light_speed, v)?;
        for ec in cat.energies {
            if ec >= e_min && ec <= e_max {
                grid.push(ec);
                for k in 1..=5 {
                    let delta = 10f64.powi(-k) * (e_max - e_min).max(1.0) / 10.0;
                    for off in [-delta, delta] {
                        let e = ec + off;
                        if e >= e_min && e <= e_max {
                            grid.push(e);
                        }
                    }
                }
            }
        }
    }
    grid.sort_by(f64::total_cmp);
    grid.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    Ok(grid)
}

/// Run the estimator over an energy grid.
pub fn lyapunov_sweep(
    energies: &[f64],
    spec: &DisorderSpec,
    mass: f64,
    light_speed: f64,
    n_steps: usize,
    n_realizations: usize,
) -> Result<Vec<LyapunovEstimate>> {
    energies
        .iter()
        .map(|&e| lyapunov_exponent(e, spec, mass, light_speed, n_steps, n_realizations))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{build_dirac, Boundary, OpMatrix};
    use approx::assert_abs_diff_eq;
    use rand::Rng;

    #[test]
    fn displayed_massless_matrices() {
        let (v, c) = (0.5, 1.0);
        let t = transfer_matrix(v, -v, 0.0, c);
        let r = 2.0 * v / c;
        assert_eq!(t.0[0][0], 1.0 - r * r);
        assert_eq!(t.0[0][1], r);
        assert_eq!(t.0[1][0], -r);
        assert_eq!(t.0[1][1], 1.0);
        assert_eq!(transfer_matrix(v, v, 0.0, c), TransferMatrix::identity());
    }

    #[test]
    fn determinant_one_over_random_draws() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..10_000 {
            let e = 8.0 * (rng.random::<f64>() - 0.5);
            let v = 4.0 * (rng.random::<f64>() - 0.5);
            let m = 2.0 * rng.random::<f64>();
            let c = 0.2 + 2.0 * rng.random::<f64>();
            let t = transfer_matrix(e, v, m, c);
            assert!((t.det() - 1.0).abs() <= 1e-12, "det {} off", t.det());
        }
    }

    #[test]
    fn spectral_radius_cases() {
        assert_abs_diff_eq!(TransferMatrix::identity().spectral_radius(), 1.0, epsilon = 1e-15);
        // elliptic: v <= c
        let t = transfer_matrix(0.5, -0.5, 0.0, 1.0);
        assert_abs_diff_eq!(t.spectral_radius(), 1.0, epsilon = 1e-12);
        // hyperbolic: v = 1.5c, trace = 2 - 9 = -7
        let t = transfer_matrix(1.5, -1.5, 0.0, 1.0);
        assert_abs_diff_eq!(t.spectral_radius(), (7.0 + 45f64.sqrt()) / 2.0, epsilon = 1e-12);
    }

    #[test]
    fn critical_matrices_commute() {
        let (v, c) = (0.5, 1.0);
        let a = transfer_matrix(v, -v, 0.0, c);
        let b = transfer_matrix(v, v, 0.0, c);
        let ab = a.mul(&b);
        let ba = b.mul(&a);
        assert_eq!(ab, ba);
    }

    #[test]
    fn propagate_all_plus_v_at_critical_energy() {
        let spec = DisorderSpec::constant_zero(0);
        let mut pot = PotentialRealization::constant(0.5, 200);
        pot.spec = spec;
        let cfg = LatticeConfig::new(200, Boundary::Open, 0.0, 1.0).unwrap();
        let prop = propagate_transfer(0.5, &pot, &cfg).unwrap();
        // every factor is the identity; Frobenius of I is √2
        assert_abs_diff_eq!(prop.log_norm_sum, 2f64.sqrt().ln(), epsilon = 1e-12);
    }

    #[test]
    fn propagate_all_minus_v_is_bounded() {
        // at v = 0.5c the critical matrix is a conjugated rotation by
        // π/3, so the sixth power is exactly the identity
        let t = transfer_matrix(0.5, -0.5, 0.0, 1.0);
        let mut p = TransferMatrix::identity();
        for _ in 0..6 {
            p = t.mul(&p);
        }
        for i in 0..2 {
            for j in 0..2 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert_abs_diff_eq!(p.0[i][j], want, epsilon = 1e-12);
            }
        }
        let pot = PotentialRealization::constant(-0.5, 6000);
        let cfg = LatticeConfig::new(6000, Boundary::Open, 0.0, 1.0).unwrap();
        let prop = propagate_transfer(0.5, &pot, &cfg).unwrap();
        assert!(prop.log_norm_sum / 6000.0 < 1e-3);
    }

    #[test]
    fn recursion_solves_eigen_equation() {
        // building (ψ⁺, ψ⁻) through the transfer recursion must satisfy
        // (H_D - E)Ψ = 0 at interior sites
        let n = 64;
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..5 {
            let m = rng.random::<f64>();
            let c = 0.5 + rng.random::<f64>();
            let e = 2.0 * (rng.random::<f64>() - 0.5);
            let spec = DisorderSpec::bernoulli(0.4, 0.5, 99).unwrap();
            let pot = sample_potential(&spec, n, 0).unwrap();
            let cfg = LatticeConfig::new(n, Boundary::Open, m, c).unwrap();

            let mut psi_plus = vec![0.0; n];
            let mut psi_minus = vec![0.0; n];
            psi_plus[1] = 0.7;
            psi_minus[0] = -0.4;
            let mut state = [psi_plus[1], psi_minus[0]];
            for site in 1..n - 1 {
                let t = transfer_matrix(e, pot.values[site], m, c);
                state = t.apply(state);
                psi_plus[site + 1] = state[0];
                psi_minus[site] = state[1];
            }
            let h = build_dirac(&cfg, &pot).unwrap();
            let hm = match &h.matrix {
                OpMatrix::Real(m) => m,
                _ => unreachable!(),
            };
            let mut psi = vec![0.0; 2 * n];
            psi[..n].copy_from_slice(&psi_plus);
            psi[n..].copy_from_slice(&psi_minus);
            let scale = psi.iter().fold(0.0f64, |a, &x| a.max(x.abs()));
            for row in 2..n - 2 {
                for &r in &[row, n + row] {
                    let mut acc = 0.0;
                    for col in 0..2 * n {
                        acc += hm[(r, col)] * psi[col];
                    }
                    acc -= e * psi[r];
                    assert!(
                        acc.abs() <= 1e-10 * scale,
                        "residual {acc} at row {r} (scale {scale})"
                    );
                }
            }
        }
    }

    #[test]
    fn free_band_energy_has_zero_gamma() {
        let spec = DisorderSpec::constant_zero(1);
        let est = lyapunov_exponent(1.0, &spec, 0.0, 1.0, 100_000, 2).unwrap();
        assert!(est.gamma <= 1e-3, "gamma {}", est.gamma);
    }

    #[test]
    fn massless_critical_energy_has_zero_gamma() {
        // bounded products: gamma estimates O(1/n), far below any
        // genuine localization rate
        let spec = DisorderSpec::bernoulli(0.5, 0.5, 7).unwrap();
        let est = lyapunov_exponent(0.5, &spec, 0.0, 1.0, 100_000, 4).unwrap();
        assert!(est.gamma <= 1e-3, "gamma {}", est.gamma);
        assert!(est.gamma < 1e-4);
    }

    #[test]
    fn hyperbolic_case_matches_prediction() {
        // at E = v = 1.5c the factors are I (prob 1-p) and a hyperbolic
        // matrix (prob p) that commute, so γ = p ln((7+√45)/2)
        let spec = DisorderSpec::bernoulli(1.5, 0.5, 7).unwrap();
        let est = lyapunov_exponent(1.5, &spec, 0.0, 1.0, 200_000, 4).unwrap();
        let expect = 0.5 * ((7.0 + 45f64.sqrt()) / 2.0).ln();
        assert!(est.gamma >= 0.5);
        assert!((est.gamma - expect).abs() < 0.02, "gamma {} vs {}", est.gamma, expect);
    }

    #[test]
    fn line_pair_detected_only_at_massive_critical_energies() {
        let w = 3f64.sqrt();
        let tm = transfer_matrix(0.0, -w, 1.0, 1.0);
        let tp = transfer_matrix(0.0, w, 1.0, 1.0);
        assert!(LinePairReduction::detect(&tm, &tp).is_some());

        let s = std::f64::consts::FRAC_1_SQRT_2;
        for e in [s + w, s - w, -s + w, -s - w] {
            let tm = transfer_matrix(e, -s, 1.0, 1.0);
            let tp = transfer_matrix(e, s, 1.0, 1.0);
            assert!(LinePairReduction::detect(&tm, &tp).is_some(), "E = {e}");
        }

        let tm = transfer_matrix(0.3, -w, 1.0, 1.0);
        let tp = transfer_matrix(0.3, w, 1.0, 1.0);
        assert!(LinePairReduction::detect(&tm, &tp).is_none());
        // massless critical: no real eigenvectors, generic path
        let tm = transfer_matrix(0.5, -0.5, 0.0, 1.0);
        let tp = transfer_matrix(0.5, 0.5, 0.0, 1.0);
        assert!(LinePairReduction::detect(&tm, &tp).is_none());
    }

    #[test]
    fn reduced_walk_matches_direct_product_at_short_length() {
        // roundoff in the direct product grows with the walk's range
        // (~e^range relative); at these lengths it is still below 1e-5,
        // so the two routes must agree to that level
        let w = 3f64.sqrt();
        let tm = transfer_matrix(0.0, -w, 1.0, 1.0);
        let tp = transfer_matrix(0.0, w, 1.0, 1.0);
        let red = LinePairReduction::detect(&tm, &tp).unwrap();
        for seed in 0..5u64 {
            for &n in &[30usize, 60, 100] {
                let direct =
                    product_log_norm_from_draws(&tm, &tp, minus_draws(seed, 0, 0.5, n));
                let reduced = red.product_log_norm(minus_draws(seed, 0, 0.5, n));
                assert!(
                    (direct - reduced).abs() <= 1e-5 * (1.0 + direct.abs()),
                    "n={n} seed={seed}: {direct} vs {reduced}"
                );
            }
        }
    }

    #[test]
    fn estimator_consistency_across_streams() {
        let a = lyapunov_exponent(
            0.2,
            &DisorderSpec::bernoulli(0.5, 0.5, 100).unwrap(),
            0.0,
            1.0,
            100_000,
            8,
        )
        .unwrap();
        let b = lyapunov_exponent(
            0.2,
            &DisorderSpec::bernoulli(0.5, 0.5, 200).unwrap(),
            0.0,
            1.0,
            100_000,
            8,
        )
        .unwrap();
        let comb = (a.std_error.powi(2) + b.std_error.powi(2)).sqrt();
        assert!((a.gamma - b.gamma).abs() <= 4.0 * comb);
    }

    #[test]
    fn critical_energy_catalogue() {
        let set = critical_energies(0.0, 1.0, 0.5).unwrap();
        assert_eq!(set.regime, CriticalRegime::Massless);
        assert_eq!(set.energies, vec![-0.5, 0.5]);

        let set = critical_energies(1.0, 1.0, 3f64.sqrt()).unwrap();
        assert_eq!(set.regime, CriticalRegime::MassiveVEqSpecial);
        assert_eq!(set.energies, vec![0.0]);

        let set = critical_energies(1.0, 1.0, std::f64::consts::FRAC_1_SQRT_2).unwrap();
        assert_eq!(set.regime, CriticalRegime::MassiveVEqCOverSqrt2);
        assert_eq!(set.energies.len(), 4);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let w = 3f64.sqrt();
        for (got, want) in set.energies.iter().zip([-s - w, -w + s, w - s, s + w]) {
            assert_abs_diff_eq!(got, &want, epsilon = 1e-12);
        }

        let set = critical_energies(1.0, 1.0, 0.9).unwrap();
        assert_eq!(set.regime, CriticalRegime::None);
        assert!(set.energies.is_empty());

        // massless v = c/√2 exclusion and v > c exclusion
        assert_eq!(
            critical_energies(0.0, 1.0, std::f64::consts::FRAC_1_SQRT_2)
                .unwrap()
                .regime,
            CriticalRegime::None
        );
        assert_eq!(critical_energies(0.0, 1.0, 1.5).unwrap().regime, CriticalRegime::None);
        assert!(critical_energies(0.0, 0.0, 1.0).is_err());
    }

    #[test]
    fn sweep_grid_refines_near_critical() {
        let grid = sweep_energies(-1.0, 1.0, 21, 0.0, 1.0, 0.5, true).unwrap();
        assert!(grid.iter().any(|&e| e == 0.5));
        assert!(grid.iter().any(|&e| e == -0.5));
        assert!(grid.len() > 21);
        for w in grid.windows(2) {
            assert!(w[1] > w[0]);
        }
    }

    #[test]
    fn dimer_kind_is_supported() {
        let spec = DisorderSpec::new(0.5, 0.5, DisorderKind::Dimer, 9).unwrap();
        let a = lyapunov_exponent(0.7, &spec, 0.0, 1.0, 20_000, 2).unwrap();
        let b = lyapunov_exponent(0.7, &spec, 0.0, 1.0, 20_000, 2).unwrap();
        assert_eq!(a.gamma, b.gamma);
        assert!(a.gamma >= 0.0);
    }

    #[test]
    fn lyapunov_preconditions() {
        let spec = DisorderSpec::bernoulli(0.5, 0.5, 0).unwrap();
        assert!(lyapunov_exponent(0.0, &spec, 0.0, 1.0, 100, 2).is_err());
        assert!(lyapunov_exponent(0.0, &spec, 0.0, 1.0, 10_000, 0).is_err());
    }
}
