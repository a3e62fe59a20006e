use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use dirac1d::config::{Experiment, RunConfig};
use dirac1d::runner::execute;

/// Numerical laboratory for the 1D Bernoulli Dirac operator.
#[derive(Parser)]
#[command(name = "dirac1d", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Lyapunov exponent over an energy grid, refined near critical energies.
    LyapunovSweep(RunArgs),
    /// Catalogue of critical energies for (m, c, v), optionally measured.
    CriticalEnergies(RunArgs),
    /// Disorder-averaged time-averaged second moment M(t).
    Moments(RunArgs),
    /// Massless moment-growth exponent against the superdiffusive bound.
    Delocalization(RunArgs),
    /// Saturation of M(t) with a doubled-lattice stability check.
    Localization(RunArgs),
    /// |M⁰(t) - M^m(t)| envelope against m c² t⁴ with shared disorder.
    MassGap(RunArgs),
    /// Dirac vs Schrödinger evolution error as c grows.
    Nrl(RunArgs),
    /// Velocity-expectation oscillation of a free packet.
    Zitter(RunArgs),
    /// Eigenfunction decay rates against the Lyapunov exponent.
    Eigenfunctions(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Flat key=value config file; flags override file values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (default: $DIRAC1D_OUT/<experiment> or ./runs/<experiment>).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    realizations: Option<usize>,
    #[arg(long)]
    sites: Option<usize>,
    #[arg(long)]
    mass: Option<f64>,
    #[arg(long)]
    c: Option<f64>,
    #[arg(long)]
    v: Option<f64>,
    #[arg(long)]
    p: Option<f64>,
    /// Exit nonzero if any declared threshold check fails.
    #[arg(long)]
    check: bool,
    /// Worker threads (0 = auto).
    #[arg(long)]
    threads: Option<usize>,
    /// Extra experiment keys, e.g. --set t_max=400 --set n_t=40.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

impl RunArgs {
    fn flag_pairs(&self) -> Result<Vec<(String, String)>, String> {
        let mut pairs = Vec::new();
        let mut push = |k: &str, v: Option<String>| {
            if let Some(v) = v {
                pairs.push((k.to_string(), v));
            }
        };
        push("seed", self.seed.map(|x| x.to_string()));
        push("realizations", self.realizations.map(|x| x.to_string()));
        push("sites", self.sites.map(|x| x.to_string()));
        push("mass", self.mass.map(|x| x.to_string()));
        push("c", self.c.map(|x| x.to_string()));
        push("v", self.v.map(|x| x.to_string()));
        push("p", self.p.map(|x| x.to_string()));
        push("threads", self.threads.map(|x| x.to_string()));
        for kv in &self.set {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| format!("--set expects KEY=VALUE, got '{kv}'"))?;
            pairs.push((k.trim().to_string(), v.trim().to_string()));
        }
        Ok(pairs)
    }
}

fn out_dir(args: &RunArgs, experiment: Experiment) -> PathBuf {
    if let Some(out) = &args.out {
        return out.clone();
    }
    let root = std::env::var("DIRAC1D_OUT").unwrap_or_else(|_| "runs".into());
    PathBuf::from(root).join(experiment.name())
}

fn run(experiment: Experiment, args: &RunArgs) -> Result<ExitCode, String> {
    let file_text = match &args.config {
        Some(path) => Some(
            std::fs::read_to_string(path)
                .map_err(|e| format!("cannot read config {}: {e}", path.display()))?,
        ),
        None => None,
    };
    let flags = args.flag_pairs()?;
    let cfg = RunConfig::build(experiment, file_text.as_deref(), &flags)
        .map_err(|e| e.to_string())?;

    let threads = cfg.usize("threads").map_err(|e| e.to_string())?;
    if threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| format!("thread pool: {e}"))?;
    }

    let out = out_dir(args, experiment);
    let summary = execute(&cfg, &out).map_err(|e| e.to_string())?;
    println!("{}", summary.report_json);
    for path in &summary.artifacts {
        eprintln!("wrote {}", path.display());
    }
    if args.check && !summary.passed {
        eprintln!("check mode: one or more threshold checks failed");
        return Ok(ExitCode::from(2));
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (experiment, args) = match &cli.command {
        Command::LyapunovSweep(a) => (Experiment::LyapunovSweep, a),
        Command::CriticalEnergies(a) => (Experiment::CriticalEnergies, a),
        Command::Moments(a) => (Experiment::Moments, a),
        Command::Delocalization(a) => (Experiment::Delocalization, a),
        Command::Localization(a) => (Experiment::Localization, a),
        Command::MassGap(a) => (Experiment::MassGap, a),
        Command::Nrl(a) => (Experiment::Nrl, a),
        Command::Zitter(a) => (Experiment::Zitter, a),
        Command::Eigenfunctions(a) => (Experiment::Eigenfunctions, a),
    };
    match run(experiment, args) {
        Ok(code) => code,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::FAILURE
        }
    }
}
