//! CSV and report writers. Series CSVs carry full 17-significant-digit
//! values so downstream fits reproduce exactly.

use std::fs;
use std::path::Path;

use crate::analysis::ExperimentReport;
use crate::disorder::PotentialRealization;
use crate::dynamics::MomentSeries;
use crate::error::{Error, Result};
use crate::transfer::LyapunovEstimate;

pub fn write_text(path: &Path, content: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent.display().to_string(), e))?;
    }
    fs::write(path, content).map_err(|e| Error::io(path.display().to_string(), e))
}

/// Columns: t, M_mean, M_stderr, edge_weight_max.
pub fn moment_series_csv(series: &MomentSeries) -> String {
    let mut out = String::from("t,M_mean,M_stderr,edge_weight_max\n");
    for i in 0..series.times.len() {
        out.push_str(&format!(
            "{:.16e},{:.16e},{:.16e},{:.16e}\n",
            series.times[i], series.values[i], series.std_errors[i], series.edge_weights[i]
        ));
    }
    out
}

pub fn write_moment_series(path: &Path, series: &MomentSeries) -> Result<()> {
    write_text(path, &moment_series_csv(series))
}

/// Columns: energy, gamma, std_error, loc_length, n_steps, n_realizations.
pub fn lyapunov_csv(estimates: &[LyapunovEstimate]) -> String {
    let mut out = String::from("energy,gamma,std_error,loc_length,n_steps,n_realizations\n");
    for e in estimates {
        out.push_str(&format!(
            "{:.16e},{:.16e},{:.16e},{:.16e},{},{}\n",
            e.energy, e.gamma, e.std_error, e.loc_length, e.n_steps, e.n_realizations
        ));
    }
    out
}

pub fn write_lyapunov(path: &Path, estimates: &[LyapunovEstimate]) -> Result<()> {
    write_text(path, &lyapunov_csv(estimates))
}

pub fn write_report(path: &Path, report: &ExperimentReport) -> Result<()> {
    write_text(path, &report.to_json())
}

pub fn write_potential(path: &Path, pot: &PotentialRealization) -> Result<()> {
    write_text(path, &pot.to_csv())
}

/// Generic log-log plotting script referencing the run's CSV series.
pub fn plot_script(csv_names: &[String]) -> String {
    let mut out = String::from(
        "#!/usr/bin/env python3\n\
         # Plot the CSV series written next to this script.\n\
         import csv\n\
         import matplotlib.pyplot as plt\n\n\
         series = [\n",
    );
    for name in csv_names {
        out.push_str(&format!("    \"{name}.csv\",\n"));
    }
    out.push_str(
        "]\n\n\
         fig, ax = plt.subplots()\n\
         for path in series:\n\
         \x20   with open(path) as fh:\n\
         \x20       rows = list(csv.DictReader(fh))\n\
         \x20   t = [float(r[\"t\"]) for r in rows]\n\
         \x20   m = [float(r[\"M_mean\"]) for r in rows]\n\
         \x20   ax.loglog(t, m, marker=\"o\", ms=3, label=path)\n\
         ax.set_xlabel(\"t\")\n\
         ax.set_ylabel(\"M(t)\")\n\
         ax.legend()\n\
         fig.savefig(\"moments.png\", dpi=150)\n\
         print(\"wrote moments.png\")\n",
    );
    out
}
