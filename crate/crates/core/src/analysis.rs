//! Scripted experiments turning the localization/delocalization claims
//! into measured numbers: growth exponents, saturation ratios, the
//! mass-perturbation envelope, the nonrelativistic limit, velocity
//! oscillations, and eigenfunction decay rates.
//!
//! Every experiment is a pure function of its parameter struct; seeds
//! live in the parameters, so re-running reproduces the report exactly.
//! Comparative experiments (masses, speeds, sizes) reuse the same
//! potential realizations so sampling noise cancels in differences.

use std::collections::BTreeMap;

use ndarray::Array1;
use num_complex::Complex64;

use crate::disorder::{sample_potential, DisorderKind, DisorderSpec, PotentialRealization};
use crate::dynamics::{
    diagonalize, evolve_raw, evolve_state, mean_position_and_velocity, moment_profile,
    moment_series, moment_series_from_potentials, InitialState, MomentSeries,
};
use crate::error::{Error, Result};
use crate::lattice::{
    build_dirac, build_schrodinger, velocity_operator, Boundary, LatticeConfig, SpinorState,
};
use crate::transfer::{critical_energies, lyapunov_exponent, CriticalRegime};

/// Least-squares power-law fit on a log-log window.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct GrowthFit {
    pub window: (f64, f64),
    pub exponent: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub n_points: usize,
}

fn ols(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (&x, &y) in xs.iter().zip(ys) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let mut ss_res = 0.0;
    let mut ss_tot = 0.0;
    for (&x, &y) in xs.iter().zip(ys) {
        let yh = slope * x + intercept;
        ss_res += (y - yh) * (y - yh);
        ss_tot += (y - my) * (y - my);
    }
    let scale = ys.iter().map(|y| y * y).sum::<f64>().max(1.0);
    let r2 = if ss_tot <= 1e-14 * scale {
        1.0
    } else {
        (1.0 - ss_res / ss_tot).clamp(0.0, 1.0)
    };
    (slope, intercept, r2)
}

/// Fit M(t) ≈ e^intercept · t^exponent over the unflagged points of a
/// window. Needs at least 8 usable points.
pub fn fit_growth_exponent(series: &MomentSeries, window: (f64, f64)) -> Result<GrowthFit> {
    if !(window.0 < window.1) {
        return Err(Error::invalid("fit window must have t_min < t_max"));
    }
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for i in 0..series.times.len() {
        let t = series.times[i];
        let m = series.values[i];
        if t >= window.0 && t <= window.1 && series.unflagged(i) && m > 0.0 {
            xs.push(t.ln());
            ys.push(m.ln());
        }
    }
    if xs.len() < 8 {
        return Err(Error::InsufficientData(format!(
            "only {} unflagged points in window [{}, {}]; need 8",
            xs.len(),
            window.0,
            window.1
        )));
    }
    let (slope, intercept, r2) = ols(&xs, &ys);
    Ok(GrowthFit {
        window,
        exponent: slope,
        intercept,
        r_squared: r2,
        n_points: xs.len(),
    })
}

/// One threshold comparison inside a report.
#[derive(Debug, Clone, serde::Serialize)]
pub struct CheckResult {
    pub name: String,
    pub value: f64,
    pub threshold: f64,
    /// "<=" or ">=".
    pub cmp: String,
    pub pass: bool,
}

impl CheckResult {
    pub fn le(name: &str, value: f64, threshold: f64) -> Self {
        CheckResult {
            name: name.into(),
            value,
            threshold,
            cmp: "<=".into(),
            pass: value <= threshold,
        }
    }

    pub fn ge(name: &str, value: f64, threshold: f64) -> Self {
        CheckResult {
            name: name.into(),
            value,
            threshold,
            cmp: ">=".into(),
            pass: value >= threshold,
        }
    }
}

/// Measured quantities, declared thresholds, and provenance for one
/// experiment run.
#[derive(Debug, Clone, serde::Serialize)]
pub struct ExperimentReport {
    pub experiment: String,
    pub parameters: BTreeMap<String, String>,
    pub metrics: BTreeMap<String, f64>,
    pub checks: Vec<CheckResult>,
    pub passed: bool,
    pub code_version: String,
}

impl ExperimentReport {
    pub fn new(experiment: &str) -> Self {
        ExperimentReport {
            experiment: experiment.into(),
            parameters: BTreeMap::new(),
            metrics: BTreeMap::new(),
            checks: Vec::new(),
            passed: true,
            code_version: env!("CARGO_PKG_VERSION").into(),
        }
    }

    pub fn param(&mut self, key: &str, value: impl ToString) {
        self.parameters.insert(key.into(), value.to_string());
    }

    pub fn metric(&mut self, key: &str, value: f64) {
        self.metrics.insert(key.into(), value);
    }

    pub fn push_check(&mut self, check: CheckResult) {
        self.passed &= check.pass;
        self.checks.push(check);
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization")
    }
}

/// Report plus the series it was computed from, for CSV emission.
pub struct ExperimentOutput {
    pub report: ExperimentReport,
    pub series: Vec<(String, MomentSeries)>,
}

fn nearest_index(grid: &[f64], t: f64) -> usize {
    let mut best = 0;
    for (i, &g) in grid.iter().enumerate() {
        if (g - t).abs() < (grid[best] - t).abs() {
            best = i;
        }
    }
    best
}

// ---------------------------------------------------------------------------
// delocalization
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct DelocParams {
    pub v: f64,
    pub c: f64,
    pub p: f64,
    pub n_sites: usize,
    pub t_grid: Vec<f64>,
    pub seed: u64,
    pub n_realizations: usize,
    /// Log-log fit window; the lower end should clear ~10 packet
    /// crossing times.
    pub window: (f64, f64),
    pub alpha_min: f64,
    pub r2_min: f64,
    pub psi0: InitialState,
}

/// Massless moment growth at v ≤ c: fits the late-window exponent and
/// checks it against the superdiffusive lower-bound proxy.
pub fn delocalization_experiment(params: &DelocParams) -> Result<ExperimentOutput> {
    let config = LatticeConfig::new(params.n_sites, Boundary::Open, 0.0, params.c)?;
    let spec = DisorderSpec::bernoulli(params.v, params.p, params.seed)?;
    let series = moment_series(&config, &spec, params.psi0, &params.t_grid, params.n_realizations)?;
    let fit = fit_growth_exponent(&series, params.window)?;

    let mut report = ExperimentReport::new("delocalization");
    report.param("v", params.v);
    report.param("c", params.c);
    report.param("p", params.p);
    report.param("mass", 0.0);
    report.param("n_sites", params.n_sites);
    report.param("seed", params.seed);
    report.param("n_realizations", params.n_realizations);
    report.param("t_max", params.t_grid.last().copied().unwrap_or(0.0));
    report.param("window", format!("[{}, {}]", params.window.0, params.window.1));
    report.param("psi0", format!("{:?}", params.psi0));
    report.metric("alpha", fit.exponent);
    report.metric("intercept", fit.intercept);
    report.metric("r_squared", fit.r_squared);
    report.metric("fit_points", fit.n_points as f64);
    report.metric(
        "max_edge_weight",
        series.edge_weights.iter().cloned().fold(0.0, f64::max),
    );
    report.push_check(CheckResult::ge("alpha", fit.exponent, params.alpha_min));
    report.push_check(CheckResult::ge("r_squared", fit.r_squared, params.r2_min));
    Ok(ExperimentOutput {
        report,
        series: vec![("moments".into(), series)],
    })
}

// ---------------------------------------------------------------------------
// localization
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct LocParams {
    pub mass: f64,
    pub v: f64,
    pub c: f64,
    pub p: f64,
    pub n_sites: usize,
    pub t_grid: Vec<f64>,
    pub seed: u64,
    pub n_realizations: usize,
    pub rho_max: f64,
    pub alpha_max: f64,
    pub size_tol: f64,
    pub psi0: InitialState,
}

/// Saturation of M(t) away from the critical set, with a doubled-lattice
/// stability check. Both sizes see the same disorder: each realization
/// is sampled at 2n and the small lattice uses the centered slice, so
/// doubling only adds far sites.
pub fn localization_experiment(params: &LocParams) -> Result<ExperimentOutput> {
    if params.t_grid.len() < 2 {
        return Err(Error::InsufficientData(
            "localization needs a time grid with at least 2 points".into(),
        ));
    }
    let cat = critical_energies(params.mass, params.c, params.v)?;
    if cat.regime != CriticalRegime::None {
        return Err(Error::invalid(format!(
            "(m={}, c={}, v={}) lies in critical regime {}",
            params.mass, params.c, params.v, cat.regime
        )));
    }
    let spec = DisorderSpec::bernoulli(params.v, params.p, params.seed)?;
    let n = params.n_sites;
    let big: Vec<PotentialRealization> = (0..params.n_realizations as u64)
        .map(|r| sample_potential(&spec, 2 * n, r))
        .collect::<Result<_>>()?;
    let small: Vec<PotentialRealization> =
        big.iter().map(|pot| pot.centered_slice(n)).collect::<Result<_>>()?;

    let cfg_small = LatticeConfig::new(n, Boundary::Open, params.mass, params.c)?;
    let cfg_big = LatticeConfig::new(2 * n, Boundary::Open, params.mass, params.c)?;
    let series_small =
        moment_series_from_potentials(&cfg_small, &small, params.psi0, &params.t_grid, &spec)?;
    let series_big =
        moment_series_from_potentials(&cfg_big, &big, params.psi0, &params.t_grid, &spec)?;

    let t_max = *params.t_grid.last().unwrap();
    let i_half = nearest_index(&params.t_grid, t_max / 2.0);
    let late = |s: &MomentSeries| -> f64 {
        let pts: Vec<f64> = s
            .times
            .iter()
            .zip(&s.values)
            .filter(|(t, _)| **t >= t_max / 2.0)
            .map(|(_, v)| *v)
            .collect();
        pts.iter().sum::<f64>() / pts.len() as f64
    };
    let rho_small = series_small.values[params.t_grid.len() - 1] / series_small.values[i_half];
    let rho_big = series_big.values[params.t_grid.len() - 1] / series_big.values[i_half];
    // late window: the last decade of a geometric grid
    let fit_small = fit_growth_exponent(&series_small, (t_max / 10.0, t_max))?;
    let fit_big = fit_growth_exponent(&series_big, (t_max / 10.0, t_max))?;
    let sat_small = late(&series_small);
    let sat_big = late(&series_big);
    let size_dev = (sat_big / sat_small - 1.0).abs();

    let mut report = ExperimentReport::new("localization");
    report.param("mass", params.mass);
    report.param("v", params.v);
    report.param("c", params.c);
    report.param("p", params.p);
    report.param("n_sites", n);
    report.param("seed", params.seed);
    report.param("n_realizations", params.n_realizations);
    report.param("t_max", t_max);
    report.metric("rho", rho_small);
    report.metric("rho_doubled", rho_big);
    report.metric("alpha_late", fit_small.exponent);
    report.metric("alpha_late_doubled", fit_big.exponent);
    report.metric("saturation", sat_small);
    report.metric("saturation_doubled", sat_big);
    report.metric("size_rel_dev", size_dev);
    report.push_check(CheckResult::le("rho", rho_small, params.rho_max));
    report.push_check(CheckResult::le("rho_doubled", rho_big, params.rho_max));
    report.push_check(CheckResult::le("alpha_late", fit_small.exponent, params.alpha_max));
    report.push_check(CheckResult::le(
        "alpha_late_doubled",
        fit_big.exponent,
        params.alpha_max,
    ));
    report.push_check(CheckResult::le("size_rel_dev", size_dev, params.size_tol));
    Ok(ExperimentOutput {
        report,
        series: vec![
            ("moments".into(), series_small),
            ("moments_doubled".into(), series_big),
        ],
    })
}

// ---------------------------------------------------------------------------
// mass gap
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct MassGapParams {
    /// Must contain 0 as the baseline; linearity needs some m and 2m.
    pub masses: Vec<f64>,
    pub c: f64,
    pub v: f64,
    pub p: f64,
    pub n_sites: usize,
    /// Full grid out to 2·t_base; stability compares the sup over
    /// t ≤ t_base with the sup over the whole grid.
    pub t_grid: Vec<f64>,
    pub seed: u64,
    pub n_realizations: usize,
    /// Index of the early grid point t* used for the linearity check.
    pub early_index: usize,
    pub stability_tol: f64,
    pub linearity_range: (f64, f64),
    pub psi0: InitialState,
}

/// Envelope of |M⁰(t) - M^m(t)| against m c² t⁴, with common random
/// numbers across masses.
pub fn mass_gap_experiment(params: &MassGapParams) -> Result<ExperimentOutput> {
    if !params.masses.contains(&0.0) {
        return Err(Error::invalid("mass list must contain the m = 0 baseline"));
    }
    let spec = DisorderSpec::bernoulli(params.v, params.p, params.seed)?;
    let grid = &params.t_grid;
    let nt = grid.len();
    if params.early_index >= nt {
        return Err(Error::invalid("early_index outside the grid"));
    }
    let pots: Vec<PotentialRealization> = (0..params.n_realizations as u64)
        .map(|r| sample_potential(&spec, params.n_sites, r))
        .collect::<Result<_>>()?;

    // per-mass, per-realization profiles with shared realizations
    let mut profiles: BTreeMap<u64, Vec<Vec<f64>>> = BTreeMap::new();
    let mut edge_max = vec![0.0f64; nt];
    let key = |m: f64| (m * 1e12).round() as u64;
    for &m in &params.masses {
        let config = LatticeConfig::new(params.n_sites, Boundary::Open, m, params.c)?;
        let mut per_real = Vec::with_capacity(pots.len());
        for pot in &pots {
            let (vals, edges) = moment_profile(&config, pot, params.psi0, grid)?;
            for i in 0..nt {
                edge_max[i] = edge_max[i].max(edges[i]);
            }
            per_real.push(vals);
        }
        profiles.insert(key(m), per_real);
    }
    let zero = profiles.get(&key(0.0)).unwrap().clone();

    let mean_abs_diff = |m: f64| -> Vec<f64> {
        let pm = profiles.get(&key(m)).unwrap();
        (0..nt)
            .map(|i| {
                pm.iter()
                    .zip(zero.iter())
                    .map(|(a, b)| (a[i] - b[i]).abs())
                    .sum::<f64>()
                    / pm.len() as f64
            })
            .collect()
    };

    let mut report = ExperimentReport::new("mass-gap");
    report.param("masses", format!("{:?}", params.masses));
    report.param("c", params.c);
    report.param("v", params.v);
    report.param("p", params.p);
    report.param("n_sites", params.n_sites);
    report.param("seed", params.seed);
    report.param("n_realizations", params.n_realizations);
    report.param("t_max", grid[nt - 1]);
    report.param("t_star", grid[params.early_index]);

    let mut series_out = Vec::new();
    let t_base = grid[nt - 1] / 2.0;
    let mut positive_masses: Vec<f64> =
        params.masses.iter().cloned().filter(|&m| m > 0.0).collect();
    positive_masses.sort_by(f64::total_cmp);

    let mut d_by_mass: BTreeMap<u64, Vec<f64>> = BTreeMap::new();
    for &m in &params.masses {
        let d = mean_abs_diff(m);
        if m == 0.0 {
            let dmax = d.iter().cloned().fold(0.0, f64::max);
            report.metric("d_zero_max", dmax);
            report.push_check(CheckResult::le("d_zero_max", dmax, 0.0));
        } else {
            let ratio = |upper: f64| -> f64 {
                let mut sup = 0.0f64;
                for i in 0..nt {
                    let t = grid[i];
                    if t <= upper && edge_max[i] < crate::dynamics::EDGE_FLAG_THRESHOLD && t > 0.0 {
                        sup = sup.max(d[i] / (m * params.c * params.c * t.powi(4)));
                    }
                }
                sup
            };
            let c_half = ratio(t_base);
            let c_full = ratio(f64::INFINITY);
            report.metric(&format!("c_hat_m{m:e}"), c_full);
            report.metric(&format!("c_hat_half_m{m:e}"), c_half);
            let stab = (c_full / c_half - 1.0).abs();
            report.metric(&format!("c_stability_m{m:e}"), stab);
            report.push_check(CheckResult::le(
                &format!("c_stability_m{m:e}"),
                stab,
                params.stability_tol,
            ));
        }
        d_by_mass.insert(key(m), d);
    }

    // linearity in m at the early grid point
    if positive_masses.len() >= 2 {
        let m1 = positive_masses[0];
        if let Some(&m2) = positive_masses.iter().find(|&&m| (m - 2.0 * m1).abs() < 1e-12) {
            let d1 = &d_by_mass[&key(m1)];
            let d2 = &d_by_mass[&key(m2)];
            let r = d2[params.early_index] / d1[params.early_index];
            report.metric("linearity_ratio", r);
            report.push_check(CheckResult::ge("linearity_ratio", r, params.linearity_range.0));
            report.push_check(CheckResult::le("linearity_ratio", r, params.linearity_range.1));
        }
    }

    // averaged series per mass, plus the difference envelopes
    for &m in &params.masses {
        let config = LatticeConfig::new(params.n_sites, Boundary::Open, m, params.c)?;
        let s = moment_series_from_potentials(&config, &pots, params.psi0, grid, &spec)?;
        series_out.push((format!("moments_m{m:e}"), s));
        if m > 0.0 {
            let d = &d_by_mass[&key(m)];
            let ds = MomentSeries {
                times: grid.clone(),
                values: d.clone(),
                std_errors: vec![0.0; nt],
                edge_weights: edge_max.clone(),
                mass: m,
                light_speed: params.c,
                spec,
                n_realizations: params.n_realizations,
            };
            series_out.push((format!("gap_m{m:e}"), ds));
        }
    }
    Ok(ExperimentOutput {
        report,
        series: series_out,
    })
}

// ---------------------------------------------------------------------------
// nonrelativistic limit
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct NrlParams {
    pub mass: f64,
    pub c_list: Vec<f64>,
    pub v: f64,
    pub p: f64,
    pub kind: DisorderKind,
    pub n_sites: usize,
    pub t_eval: f64,
    pub seed: u64,
    pub n_realizations: usize,
}

/// Rest-energy-stripped Dirac upper component against Schrödinger
/// evolution of the same potential realization: ε(c, t) should fall as
/// c grows.
pub fn nrl_experiment(params: &NrlParams) -> Result<ExperimentOutput> {
    if params.mass <= 0.0 {
        return Err(Error::invalid("nonrelativistic limit needs mass > 0"));
    }
    if params.c_list.len() < 2 {
        return Err(Error::invalid("need at least two light speeds to compare"));
    }
    let mut c_list = params.c_list.clone();
    c_list.sort_by(f64::total_cmp);
    let spec = DisorderSpec {
        v: params.v,
        p: params.p,
        kind: params.kind,
        seed: params.seed,
    };
    spec.validate()?;
    let n = params.n_sites;
    let center = n / 2;
    let t = params.t_eval;

    let mut eps_mean: Vec<f64> = vec![0.0; c_list.len()];
    for r in 0..params.n_realizations as u64 {
        let pot = sample_potential(&spec, n, r)?;
        // Schrödinger reference: c plays no role in Eq-(1) dynamics
        let cfg_s = LatticeConfig::new(n, Boundary::Open, params.mass, 1.0)?;
        let plan_s = diagonalize(&build_schrodinger(&cfg_s, &pot)?)?;
        let mut delta = Array1::<Complex64>::zeros(n);
        delta[center] = Complex64::new(1.0, 0.0);
        let psi_s = evolve_raw(&plan_s, &delta, t)?;

        for (ci, &c) in c_list.iter().enumerate() {
            let cfg_d = LatticeConfig::new(n, Boundary::Open, params.mass, c)?;
            let plan_d = diagonalize(&build_dirac(&cfg_d, &pot)?)?;
            let psi0 = SpinorState::delta_plus(n, center);
            let psi_d = evolve_state(&plan_d, &psi0, t)?;
            // remove the rest energy and keep the upper component
            let phase = Complex64::from_polar(1.0, params.mass * c * c * t);
            let mut err = 0.0;
            for i in 0..n {
                err += (phase * psi_d.amps[i] - psi_s[i]).norm_sqr();
            }
            eps_mean[ci] += err.sqrt() / params.n_realizations as f64;
        }
    }

    let mut report = ExperimentReport::new("nrl");
    report.param("mass", params.mass);
    report.param("v", params.v);
    report.param("p", params.p);
    report.param("kind", spec.kind);
    report.param("n_sites", n);
    report.param("t_eval", t);
    report.param("seed", params.seed);
    report.param("n_realizations", params.n_realizations);
    report.param("c_list", format!("{c_list:?}"));
    for (ci, &c) in c_list.iter().enumerate() {
        report.metric(&format!("eps_c{c}"), eps_mean[ci]);
    }
    for w in eps_mean.windows(2) {
        // strictly decreasing in c
        let ok = w[1] < w[0];
        report.push_check(CheckResult {
            name: "eps_decreasing".into(),
            value: w[1],
            threshold: w[0],
            cmp: "<".into(),
            pass: ok,
        });
    }
    Ok(ExperimentOutput {
        report,
        series: vec![],
    })
}

// ---------------------------------------------------------------------------
// zitterbewegung
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct ZitterParams {
    pub mass_small: f64,
    pub c: f64,
    pub n_sites: usize,
    pub t_max: f64,
    pub dt: f64,
    pub packet_width: f64,
    pub packet_k0: f64,
    /// Minimum oscillation amplitude, in units of c.
    pub residual_min_frac: f64,
    /// Spectral weights below this fraction of the maximum do not count
    /// as occupied when forming the 2|E| band.
    pub band_weight_cut: f64,
}

/// Cubic least-squares detrend over a normalized abscissa.
#[allow(clippy::needless_range_loop)]
fn detrend_cubic(ts: &[f64], ys: &[f64]) -> Vec<f64> {
    let t_max = ts.last().copied().unwrap_or(1.0);
    let n = ts.len();
    // normal equations for powers 0..3 of τ = 2t/t_max - 1
    let tau: Vec<f64> = ts.iter().map(|&t| 2.0 * t / t_max - 1.0).collect();
    let mut a = [[0.0f64; 4]; 4];
    let mut b = [0.0f64; 4];
    for i in 0..n {
        let pw = [1.0, tau[i], tau[i] * tau[i], tau[i] * tau[i] * tau[i]];
        for r in 0..4 {
            for c in 0..4 {
                a[r][c] += pw[r] * pw[c];
            }
            b[r] += pw[r] * ys[i];
        }
    }
    // 4×4 Gaussian elimination with partial pivoting
    let mut m = a;
    let mut rhs = b;
    for col in 0..4 {
        let mut piv = col;
        for r in col + 1..4 {
            if m[r][col].abs() > m[piv][col].abs() {
                piv = r;
            }
        }
        m.swap(col, piv);
        rhs.swap(col, piv);
        for r in col + 1..4 {
            let f = m[r][col] / m[col][col];
            for c2 in col..4 {
                m[r][c2] -= f * m[col][c2];
            }
            rhs[r] -= f * rhs[col];
        }
    }
    let mut coef = [0.0f64; 4];
    for col in (0..4).rev() {
        let mut acc = rhs[col];
        for c2 in col + 1..4 {
            acc -= m[col][c2] * coef[c2];
        }
        coef[col] = acc / m[col][col];
    }
    (0..n)
        .map(|i| {
            let trend =
                coef[0] + coef[1] * tau[i] + coef[2] * tau[i] * tau[i] + coef[3] * tau[i].powi(3);
            ys[i] - trend
        })
        .collect()
}

/// Peak angular frequency of a Hann-windowed DFT (excluding DC).
fn dominant_frequency(residual: &[f64], dt: f64) -> (f64, f64) {
    let n = residual.len();
    let windowed: Vec<f64> = residual
        .iter()
        .enumerate()
        .map(|(i, &y)| {
            let w = 0.5 * (1.0 - (2.0 * std::f64::consts::PI * i as f64 / (n - 1) as f64).cos());
            y * w
        })
        .collect();
    let mut best_k = 1;
    let mut best_mag = 0.0;
    for k in 1..=n / 2 {
        let mut re = 0.0;
        let mut im = 0.0;
        for (i, &y) in windowed.iter().enumerate() {
            let ph = 2.0 * std::f64::consts::PI * k as f64 * i as f64 / n as f64;
            re += y * ph.cos();
            im -= y * ph.sin();
        }
        let mag = re.hypot(im);
        if mag > best_mag {
            best_mag = mag;
            best_k = k;
        }
    }
    let bin = 2.0 * std::f64::consts::PI / (n as f64 * dt);
    (best_k as f64 * bin, bin)
}

/// Velocity-expectation oscillation of a free packet: zitterbewegung.
pub fn zitterbewegung_experiment(params: &ZitterParams) -> Result<ExperimentOutput> {
    let n = params.n_sites;
    let config = LatticeConfig::new(n, Boundary::Open, params.mass_small, params.c)?;
    let pot = PotentialRealization::constant(0.0, n);
    let plan = diagonalize(&build_dirac(&config, &pot)?)?;
    let vel = velocity_operator(&config);
    let psi0 = SpinorState::gaussian_plus(n, n / 2, params.packet_width, params.packet_k0);

    let nt = (params.t_max / params.dt).round() as usize;
    let ts: Vec<f64> = (0..nt).map(|i| i as f64 * params.dt).collect();
    let mut va = Vec::with_capacity(nt);
    let mut max_edge = 0.0f64;
    for &t in &ts {
        let psi_t = evolve_state(&plan, &psi0, t)?;
        max_edge = max_edge.max(psi_t.edge_weight());
        va.push(vel.expectation(&psi_t.amps)?);
    }
    let resid = detrend_cubic(&ts, &va);
    let resid_amp = resid.iter().cloned().fold(0.0f64, |a, x| a.max(x.abs()));
    let (peak_freq, bin) = dominant_frequency(&resid, params.dt);

    // occupied 2|E| band from the packet's spectral weights
    let weights = plan.spectral_weights(&psi0.amps)?;
    let wmax = weights.iter().cloned().fold(0.0, f64::max);
    let mut emin = f64::INFINITY;
    let mut emax: f64 = 0.0;
    for (j, &w) in weights.iter().enumerate() {
        if w >= params.band_weight_cut * wmax {
            emin = emin.min(plan.eigenvalues[j].abs());
            emax = emax.max(plan.eigenvalues[j].abs());
        }
    }
    let band = (2.0 * emin - bin, 2.0 * emax + bin);

    // Ehrenfest identity at t = 1 via central difference
    let delta = 1e-3;
    let (np_, _) = mean_position_and_velocity(&plan, &psi0, 1.0 + delta, &vel)?;
    let (nm_, _) = mean_position_and_velocity(&plan, &psi0, 1.0 - delta, &vel)?;
    let (_, v1) = mean_position_and_velocity(&plan, &psi0, 1.0, &vel)?;
    let ehrenfest_defect = ((np_ - nm_) / (2.0 * delta) - v1).abs();

    let max_abs_v = va.iter().cloned().fold(0.0f64, |a, x| a.max(x.abs()));
    let v0 = va[0];

    let mut report = ExperimentReport::new("zitter");
    report.param("mass_small", params.mass_small);
    report.param("c", params.c);
    report.param("n_sites", n);
    report.param("t_max", params.t_max);
    report.param("dt", params.dt);
    report.param("packet_width", params.packet_width);
    report.param("packet_k0", params.packet_k0);
    report.metric("v_at_0", v0);
    report.metric("max_abs_v", max_abs_v);
    report.metric("residual_amplitude", resid_amp);
    report.metric("peak_frequency", peak_freq);
    report.metric("band_lo", band.0);
    report.metric("band_hi", band.1);
    report.metric("ehrenfest_defect", ehrenfest_defect);
    report.metric("max_edge_weight", max_edge);
    report.push_check(CheckResult::le("max_abs_v_over_c", max_abs_v / params.c, 1.0 + 1e-12));
    report.push_check(CheckResult::ge(
        "residual_amplitude",
        resid_amp,
        params.residual_min_frac * params.c,
    ));
    report.push_check(CheckResult::ge("peak_freq_above_band_lo", peak_freq, band.0));
    report.push_check(CheckResult::le("peak_freq_below_band_hi", peak_freq, band.1));
    report.push_check(CheckResult::le("ehrenfest_defect", ehrenfest_defect, 1e-5));
    report.push_check(CheckResult::le(
        "max_edge_weight",
        max_edge,
        crate::dynamics::EDGE_FLAG_THRESHOLD,
    ));
    Ok(ExperimentOutput {
        report,
        series: vec![],
    })
}

// ---------------------------------------------------------------------------
// eigenfunction decay
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct EigenDecayParams {
    pub mass: f64,
    pub c: f64,
    pub v: f64,
    pub p: f64,
    pub kind: DisorderKind,
    pub n_sites: usize,
    pub seed: u64,
    pub n_realizations: usize,
    pub target_energies: Vec<f64>,
    pub n_per_target: usize,
    /// Sites this close to the peak are excluded from the fit.
    pub core_exclusion: usize,
    /// Fraction of the chain excluded at each end.
    pub outer_exclusion: f64,
    /// Envelope points below this fraction of the peak are treated as
    /// eigensolver noise floor and excluded.
    pub floor_ratio: f64,
    pub kappa_gamma_tol: f64,
    pub gamma_steps: usize,
    pub gamma_realizations: usize,
}

/// Decay rate of one eigenvector's weight envelope: -slope/2 of
/// ln(window-max weight) against distance from the peak, restricted to
/// points above the noise floor.
fn envelope_decay_rate(
    weights: &[f64],
    core_exclusion: usize,
    outer_exclusion: f64,
    floor_ratio: f64,
) -> Option<(f64, usize)> {
    let n = weights.len();
    let peak = weights
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)?;
    // reject states bound to the edges
    if peak < n / 4 || peak > 3 * n / 4 {
        return None;
    }
    let wpeak = weights[peak];
    let lo = (outer_exclusion * n as f64).floor() as usize;
    let hi = n - lo;
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for i in lo..hi {
        let dist = (i as isize - peak as isize).unsigned_abs();
        if dist <= core_exclusion {
            continue;
        }
        let env = weights[i.saturating_sub(1)..(i + 2).min(n)]
            .iter()
            .cloned()
            .fold(0.0, f64::max);
        if env >= floor_ratio * wpeak && env > 0.0 {
            xs.push(dist as f64);
            ys.push(env.ln());
        }
    }
    if xs.len() < 20 {
        return None;
    }
    let (slope, _, _) = ols(&xs, &ys);
    Some((-slope / 2.0, xs.len()))
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    if n == 0 {
        return f64::NAN;
    }
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        0.5 * (xs[n / 2 - 1] + xs[n / 2])
    }
}

/// Exponential decay rates of eigenvectors near chosen energies,
/// cross-checked against the transfer-matrix Lyapunov exponent.
pub fn eigenfunction_decay(params: &EigenDecayParams) -> Result<ExperimentOutput> {
    let spec = DisorderSpec {
        v: params.v,
        p: params.p,
        kind: params.kind,
        seed: params.seed,
    };
    spec.validate()?;
    let n = params.n_sites;
    let config = LatticeConfig::new(n, Boundary::Open, params.mass, params.c)?;

    let mut kappas_per_target: Vec<Vec<f64>> = vec![Vec::new(); params.target_energies.len()];
    let mut iprs: Vec<f64> = Vec::new();
    for r in 0..params.n_realizations as u64 {
        let pot = sample_potential(&spec, n, r)?;
        let h = build_dirac(&config, &pot)?;
        let plan = diagonalize(&h)?;
        let u = match &plan.basis {
            crate::dynamics::EigenBasis::Real(u) => u,
            _ => unreachable!("dirac hamiltonians are real symmetric"),
        };
        for (ti, &target) in params.target_energies.iter().enumerate() {
            let mut order: Vec<usize> = (0..plan.dim()).collect();
            order.sort_by(|&a, &b| {
                (plan.eigenvalues[a] - target)
                    .abs()
                    .total_cmp(&(plan.eigenvalues[b] - target).abs())
            });
            let mut taken = 0;
            for &j in &order {
                if taken >= params.n_per_target {
                    break;
                }
                let col = u.column(j);
                let weights: Vec<f64> =
                    (0..n).map(|i| col[i] * col[i] + col[n + i] * col[n + i]).collect();
                if let Some((kappa, _)) = envelope_decay_rate(
                    &weights,
                    params.core_exclusion,
                    params.outer_exclusion,
                    params.floor_ratio,
                ) {
                    kappas_per_target[ti].push(kappa);
                    iprs.push(weights.iter().map(|w| w * w).sum());
                    taken += 1;
                }
            }
        }
    }

    let mut report = ExperimentReport::new("eigenfunctions");
    report.param("mass", params.mass);
    report.param("c", params.c);
    report.param("v", params.v);
    report.param("p", params.p);
    report.param("kind", spec.kind);
    report.param("n_sites", n);
    report.param("seed", params.seed);
    report.param("n_realizations", params.n_realizations);
    report.param("targets", format!("{:?}", params.target_energies));

    let all_kappas: Vec<f64> = kappas_per_target.iter().flatten().cloned().collect();
    if all_kappas.is_empty() {
        return Err(Error::InsufficientData(
            "no eigenvectors survived the envelope-fit filters".into(),
        ));
    }
    let kappa_all = median(all_kappas.clone());
    report.metric("kappa_median", kappa_all);
    report.metric("ipr_median", median(iprs));
    report.metric("n_states", all_kappas.len() as f64);

    let free_model = spec.kind == DisorderKind::ConstantZero;
    if free_model {
        // extended states: the envelope should be flat
        report.push_check(CheckResult::le("kappa_abs", kappa_all.abs(), 0.02));
    } else {
        report.push_check(CheckResult::ge("kappa_median", kappa_all, f64::MIN_POSITIVE));
        for (ti, &target) in params.target_energies.iter().enumerate() {
            if kappas_per_target[ti].is_empty() {
                continue;
            }
            let kappa = median(kappas_per_target[ti].clone());
            let gamma = lyapunov_exponent(
                target,
                &spec,
                params.mass,
                params.c,
                params.gamma_steps,
                params.gamma_realizations,
            )?;
            let rel = (kappa - gamma.gamma).abs() / gamma.gamma;
            report.metric(&format!("kappa_E{target}"), kappa);
            report.metric(&format!("gamma_E{target}"), gamma.gamma);
            report.metric(&format!("kappa_gamma_rel_dev_E{target}"), rel);
            report.push_check(CheckResult::le(
                &format!("kappa_gamma_rel_dev_E{target}"),
                rel,
                params.kappa_gamma_tol,
            ));
        }
    }
    Ok(ExperimentOutput {
        report,
        series: vec![],
    })
}
