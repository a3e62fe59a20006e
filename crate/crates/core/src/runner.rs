//! Turns a validated [`RunConfig`](crate::config::RunConfig) into
//! artifacts on disk: manifest, CSV series, and a JSON report.

use std::path::{Path, PathBuf};

use crate::analysis::{
    delocalization_experiment, eigenfunction_decay, localization_experiment, mass_gap_experiment,
    nrl_experiment, zitterbewegung_experiment, CheckResult, DelocParams, EigenDecayParams,
    ExperimentOutput, ExperimentReport, LocParams, MassGapParams, NrlParams, ZitterParams,
};
use crate::config::{Experiment, RunConfig};
use crate::disorder::{sample_potential, DisorderKind, DisorderSpec};
use crate::dynamics::{moment_series, InitialState};
use crate::error::Result;
use crate::grid::{geomspace, linspace};
use crate::io;
use crate::lattice::{Boundary, LatticeConfig};
use crate::transfer::{critical_energies, lyapunov_exponent, lyapunov_sweep, sweep_energies};

/// What a run produced and whether its checks passed.
#[derive(Debug)]
pub struct RunSummary {
    pub passed: bool,
    pub artifacts: Vec<PathBuf>,
    pub report_json: String,
}

fn time_grid(cfg: &RunConfig) -> Result<Vec<f64>> {
    let t_min = cfg.f64("t_min")?;
    let t_max = cfg.f64("t_max")?;
    let n_t = cfg.usize("n_t")?;
    let kind = cfg.str("grid").unwrap_or("geometric");
    match kind {
        "linear" => linspace(t_min, t_max, n_t),
        _ => geomspace(t_min, t_max, n_t),
    }
}

fn lattice(cfg: &RunConfig) -> Result<LatticeConfig> {
    LatticeConfig::new(
        cfg.usize("sites")?,
        cfg.str("boundary")?.parse::<Boundary>()?,
        cfg.f64("mass")?,
        cfg.f64("c")?,
    )
}

fn bernoulli_spec(cfg: &RunConfig) -> Result<DisorderSpec> {
    DisorderSpec::bernoulli(cfg.f64("v")?, cfg.f64("p")?, cfg.u64("seed")?)
}

fn psi0(cfg: &RunConfig) -> Result<InitialState> {
    cfg.str("psi0")?.parse()
}

/// Execute the configured experiment, writing everything under `out`.
pub fn execute(cfg: &RunConfig, out: &Path) -> Result<RunSummary> {
    let mut artifacts = Vec::new();
    let manifest_path = out.join("manifest.txt");
    io::write_text(&manifest_path, &cfg.manifest())?;
    artifacts.push(manifest_path);

    let output: ExperimentOutput = match cfg.experiment {
        Experiment::Moments => {
            let config = lattice(cfg)?;
            let spec = bernoulli_spec(cfg)?;
            let grid = time_grid(cfg)?;
            let n_real = cfg.usize("realizations")?;
            let series = moment_series(&config, &spec, psi0(cfg)?, &grid, n_real)?;
            let pot = sample_potential(&spec, config.n_sites, 0)?;
            let pot_path = out.join("potential_0.csv");
            io::write_potential(&pot_path, &pot)?;
            artifacts.push(pot_path);
            let mut report = ExperimentReport::new("moments");
            report.param("n_sites", config.n_sites);
            report.param("mass", config.mass);
            report.param("c", config.light_speed);
            report.param("v", spec.v);
            report.param("p", spec.p);
            report.param("seed", spec.seed);
            report.param("n_realizations", n_real);
            report.metric("m_at_t_max", *series.values.last().unwrap());
            report.metric(
                "max_edge_weight",
                series.edge_weights.iter().cloned().fold(0.0, f64::max),
            );
            ExperimentOutput {
                report,
                series: vec![("moments".into(), series)],
            }
        }
        Experiment::LyapunovSweep => {
            let spec = bernoulli_spec(cfg)?;
            let energies = sweep_energies(
                cfg.f64("e_min")?,
                cfg.f64("e_max")?,
                cfg.usize("n_e")?,
                cfg.f64("mass")?,
                cfg.f64("c")?,
                spec.v,
                cfg.bool("refine")?,
            )?;
            let estimates = lyapunov_sweep(
                &energies,
                &spec,
                cfg.f64("mass")?,
                cfg.f64("c")?,
                cfg.usize("n_steps")?,
                cfg.usize("realizations")?,
            )?;
            let csv_path = out.join("lyapunov.csv");
            io::write_lyapunov(&csv_path, &estimates)?;
            artifacts.push(csv_path);
            let mut report = ExperimentReport::new("lyapunov-sweep");
            report.param("mass", cfg.f64("mass")?);
            report.param("c", cfg.f64("c")?);
            report.param("v", spec.v);
            report.param("p", spec.p);
            report.param("seed", spec.seed);
            report.param("n_steps", cfg.usize("n_steps")?);
            report.param("n_energies", estimates.len());
            let gmin = estimates.iter().map(|e| e.gamma).fold(f64::INFINITY, f64::min);
            let gmax = estimates.iter().map(|e| e.gamma).fold(0.0f64, f64::max);
            report.metric("gamma_min", gmin);
            report.metric("gamma_max", gmax);
            ExperimentOutput {
                report,
                series: vec![],
            }
        }
        Experiment::CriticalEnergies => {
            let (m, c, v) = (cfg.f64("mass")?, cfg.f64("c")?, cfg.f64("v")?);
            let set = critical_energies(m, c, v)?;
            let mut report = ExperimentReport::new("critical-energies");
            report.param("mass", m);
            report.param("c", c);
            report.param("v", v);
            report.param("regime", set.regime);
            report.param("energies", format!("{:?}", set.energies));
            if cfg.bool("measure")? && !set.energies.is_empty() {
                let spec = bernoulli_spec(cfg)?;
                let n_steps = cfg.usize("n_steps")?;
                let n_real = cfg.usize("realizations")?;
                for &e in &set.energies {
                    let est = lyapunov_exponent(e, &spec, m, c, n_steps, n_real)?;
                    report.metric(&format!("gamma_E{e}"), est.gamma);
                    report.metric(&format!("stderr_E{e}"), est.std_error);
                    report.push_check(CheckResult::le(&format!("gamma_E{e}"), est.gamma, 1e-3));
                }
            }
            ExperimentOutput {
                report,
                series: vec![],
            }
        }
        Experiment::Delocalization => {
            let params = DelocParams {
                v: cfg.f64("v")?,
                c: cfg.f64("c")?,
                p: cfg.f64("p")?,
                n_sites: cfg.usize("sites")?,
                t_grid: time_grid(cfg)?,
                seed: cfg.u64("seed")?,
                n_realizations: cfg.usize("realizations")?,
                window: (cfg.f64("window_lo")?, cfg.f64("window_hi")?),
                alpha_min: cfg.f64("alpha_min")?,
                r2_min: cfg.f64("r2_min")?,
                psi0: psi0(cfg)?,
            };
            delocalization_experiment(&params)?
        }
        Experiment::Localization => {
            let params = LocParams {
                mass: cfg.f64("mass")?,
                v: cfg.f64("v")?,
                c: cfg.f64("c")?,
                p: cfg.f64("p")?,
                n_sites: cfg.usize("sites")?,
                t_grid: time_grid(cfg)?,
                seed: cfg.u64("seed")?,
                n_realizations: cfg.usize("realizations")?,
                rho_max: cfg.f64("rho_max")?,
                alpha_max: cfg.f64("alpha_max")?,
                size_tol: cfg.f64("size_tol")?,
                psi0: psi0(cfg)?,
            };
            localization_experiment(&params)?
        }
        Experiment::MassGap => {
            let params = MassGapParams {
                masses: cfg.f64_list("masses")?,
                c: cfg.f64("c")?,
                v: cfg.f64("v")?,
                p: cfg.f64("p")?,
                n_sites: cfg.usize("sites")?,
                t_grid: time_grid(cfg)?,
                seed: cfg.u64("seed")?,
                n_realizations: cfg.usize("realizations")?,
                early_index: cfg.usize("early_index")?,
                stability_tol: cfg.f64("stability_tol")?,
                linearity_range: (cfg.f64("linearity_lo")?, cfg.f64("linearity_hi")?),
                psi0: psi0(cfg)?,
            };
            mass_gap_experiment(&params)?
        }
        Experiment::Nrl => {
            let params = NrlParams {
                mass: cfg.f64("mass")?,
                c_list: cfg.f64_list("c_list")?,
                v: cfg.f64("v")?,
                p: cfg.f64("p")?,
                kind: cfg.str("kind")?.parse::<DisorderKind>()?,
                n_sites: cfg.usize("sites")?,
                t_eval: cfg.f64("t_eval")?,
                seed: cfg.u64("seed")?,
                n_realizations: cfg.usize("realizations")?,
            };
            nrl_experiment(&params)?
        }
        Experiment::Zitter => {
            let params = ZitterParams {
                mass_small: cfg.f64("mass")?,
                c: cfg.f64("c")?,
                n_sites: cfg.usize("sites")?,
                t_max: cfg.f64("t_max")?,
                dt: cfg.f64("dt")?,
                packet_width: cfg.f64("packet_width")?,
                packet_k0: cfg.f64("packet_k0")?,
                residual_min_frac: cfg.f64("residual_min_frac")?,
                band_weight_cut: 1e-4,
            };
            zitterbewegung_experiment(&params)?
        }
        Experiment::Eigenfunctions => {
            let params = EigenDecayParams {
                mass: cfg.f64("mass")?,
                c: cfg.f64("c")?,
                v: cfg.f64("v")?,
                p: cfg.f64("p")?,
                kind: DisorderKind::Bernoulli,
                n_sites: cfg.usize("sites")?,
                seed: cfg.u64("seed")?,
                n_realizations: cfg.usize("realizations")?,
                target_energies: cfg.f64_list("targets")?,
                n_per_target: cfg.usize("n_per_target")?,
                core_exclusion: 5,
                outer_exclusion: 0.1,
                floor_ratio: cfg.f64("floor_ratio")?,
                kappa_gamma_tol: cfg.f64("kappa_gamma_tol")?,
                gamma_steps: cfg.usize("gamma_steps")?,
                gamma_realizations: cfg.usize("gamma_realizations")?,
            };
            eigenfunction_decay(&params)?
        }
    };

    for (name, series) in &output.series {
        let path = out.join(format!("{name}.csv"));
        io::write_moment_series(&path, series)?;
        artifacts.push(path);
    }
    if !output.series.is_empty() {
        let names: Vec<String> = output.series.iter().map(|(n, _)| n.clone()).collect();
        let plot_path = out.join("plot.py");
        io::write_text(&plot_path, &io::plot_script(&names))?;
        artifacts.push(plot_path);
    }
    let report_path = out.join("report.json");
    io::write_report(&report_path, &output.report)?;
    artifacts.push(report_path);

    Ok(RunSummary {
        passed: output.report.passed,
        artifacts,
        report_json: output.report.to_json(),
    })
}
