//! Run configuration: flat key=value files merged with command-line
//! overrides, validated up front, echoed into a canonical manifest.

use std::collections::BTreeMap;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Experiment {
    LyapunovSweep,
    CriticalEnergies,
    Moments,
    Delocalization,
    Localization,
    MassGap,
    Nrl,
    Zitter,
    Eigenfunctions,
}

impl Experiment {
    pub const ALL: [Experiment; 9] = [
        Experiment::LyapunovSweep,
        Experiment::CriticalEnergies,
        Experiment::Moments,
        Experiment::Delocalization,
        Experiment::Localization,
        Experiment::MassGap,
        Experiment::Nrl,
        Experiment::Zitter,
        Experiment::Eigenfunctions,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Experiment::LyapunovSweep => "lyapunov-sweep",
            Experiment::CriticalEnergies => "critical-energies",
            Experiment::Moments => "moments",
            Experiment::Delocalization => "delocalization",
            Experiment::Localization => "localization",
            Experiment::MassGap => "mass-gap",
            Experiment::Nrl => "nrl",
            Experiment::Zitter => "zitter",
            Experiment::Eigenfunctions => "eigenfunctions",
        }
    }
}

impl std::str::FromStr for Experiment {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Experiment::ALL
            .iter()
            .find(|e| e.name() == s)
            .copied()
            .ok_or_else(|| Error::Config(format!("unknown experiment '{s}'")))
    }
}

impl std::fmt::Display for Experiment {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Source {
    Default,
    File,
    Flag,
}

impl Source {
    fn name(&self) -> &'static str {
        match self {
            Source::Default => "default",
            Source::File => "file",
            Source::Flag => "flag",
        }
    }
}

/// Merged, validated key=value configuration for one run.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub experiment: Experiment,
    values: BTreeMap<String, String>,
    sources: BTreeMap<String, Source>,
    overrides: BTreeMap<String, (String, String)>,
}

/// Keys shared by every experiment, with defaults.
fn common_defaults() -> Vec<(&'static str, String)> {
    vec![
        ("mass", "0".into()),
        ("c", "1".into()),
        ("v", "0.5".into()),
        ("p", "0.5".into()),
        ("sites", "600".into()),
        ("boundary", "open".into()),
        ("seed", "1".into()),
        ("realizations", "8".into()),
        ("threads", "0".into()),
        ("psi0", "delta_plus".into()),
    ]
}

fn experiment_defaults(exp: Experiment) -> Vec<(&'static str, String)> {
    match exp {
        Experiment::LyapunovSweep => vec![
            ("e_min", "-2".into()),
            ("e_max", "2".into()),
            ("n_e", "41".into()),
            ("n_steps", "1000000".into()),
            ("refine", "true".into()),
        ],
        Experiment::CriticalEnergies => vec![
            ("n_steps", "10000000".into()),
            ("measure", "true".into()),
        ],
        Experiment::Moments => vec![
            ("t_min", "1".into()),
            ("t_max", "150".into()),
            ("n_t", "36".into()),
            ("grid", "geometric".into()),
        ],
        Experiment::Delocalization => vec![
            ("t_min", "1".into()),
            ("t_max", "150".into()),
            ("n_t", "36".into()),
            ("window_lo", "50".into()),
            ("window_hi", "150".into()),
            ("alpha_min", "1.2".into()),
            ("r2_min", "0.9".into()),
        ],
        Experiment::Localization => vec![
            ("t_min", "1".into()),
            ("t_max", "6000".into()),
            ("n_t", "36".into()),
            ("sites", "320".into()),
            ("realizations", "40".into()),
            ("mass", "1".into()),
            ("v", "1".into()),
            ("rho_max", "1.1".into()),
            ("alpha_max", "0.3".into()),
            ("size_tol", "0.1".into()),
        ],
        Experiment::MassGap => vec![
            ("masses", "0,0.001,0.002".into()),
            ("t_min", "0.5".into()),
            ("t_max", "40".into()),
            ("n_t", "40".into()),
            ("sites", "500".into()),
            ("early_index", "9".into()),
            ("stability_tol", "0.3".into()),
            ("linearity_lo", "1.6".into()),
            ("linearity_hi", "2.4".into()),
        ],
        Experiment::Nrl => vec![
            ("mass", "1".into()),
            ("c_list", "5,10,20".into()),
            ("t_eval", "5".into()),
            ("sites", "600".into()),
            ("kind", "bernoulli".into()),
            ("realizations", "1".into()),
        ],
        Experiment::Zitter => vec![
            ("mass", "0.05".into()),
            ("sites", "400".into()),
            ("t_max", "40".into()),
            ("dt", "0.25".into()),
            ("packet_width", "10".into()),
            ("packet_k0", "1.5707963267948966".into()),
            ("residual_min_frac", "0.001".into()),
        ],
        Experiment::Eigenfunctions => vec![
            ("mass", "1".into()),
            ("v", "1".into()),
            ("sites", "700".into()),
            ("targets", "1.8".into()),
            ("n_per_target", "8".into()),
            ("realizations", "4".into()),
            ("floor_ratio", "1e-24".into()),
            ("kappa_gamma_tol", "0.3".into()),
            ("gamma_steps", "1000000".into()),
            ("gamma_realizations", "8".into()),
        ],
    }
}

impl RunConfig {
    /// Merge defaults, an optional config file, and flag overrides.
    /// Unknown keys and out-of-range values are rejected up front.
    pub fn build(
        experiment: Experiment,
        file_text: Option<&str>,
        flags: &[(String, String)],
    ) -> Result<RunConfig> {
        let mut values = BTreeMap::new();
        let mut sources = BTreeMap::new();
        for (k, v) in common_defaults().into_iter().chain(experiment_defaults(experiment)) {
            values.insert(k.to_string(), v);
            sources.insert(k.to_string(), Source::Default);
        }
        let mut overrides = BTreeMap::new();

        if let Some(text) = file_text {
            for (lineno, raw) in text.lines().enumerate() {
                let line = raw.trim();
                if line.is_empty() || line.starts_with('#') {
                    continue;
                }
                let (key, value) = line.split_once('=').ok_or_else(|| {
                    Error::Config(format!("line {}: expected key=value, got '{raw}'", lineno + 1))
                })?;
                let key = key.trim();
                let value = value.trim().to_string();
                if key == "experiment" {
                    if value != experiment.name() {
                        return Err(Error::Config(format!(
                            "config file declares experiment '{value}' but the subcommand is '{}'",
                            experiment.name()
                        )));
                    }
                    continue;
                }
                if !values.contains_key(key) {
                    return Err(Error::Config(format!(
                        "line {}: unknown key '{key}' for experiment {}",
                        lineno + 1,
                        experiment.name()
                    )));
                }
                values.insert(key.to_string(), value);
                sources.insert(key.to_string(), Source::File);
            }
        }

        for (key, value) in flags {
            if !values.contains_key(key.as_str()) {
                return Err(Error::Config(format!(
                    "unknown key '{key}' for experiment {}",
                    experiment.name()
                )));
            }
            if sources.get(key) == Some(&Source::File) {
                overrides.insert(key.clone(), (values[key].clone(), value.clone()));
            }
            values.insert(key.clone(), value.clone());
            sources.insert(key.clone(), Source::Flag);
        }

        let cfg = RunConfig {
            experiment,
            values,
            sources,
            overrides,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<()> {
        let p = self.f64("p")?;
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::Config(format!("p = {p} out of range (0,1)")));
        }
        let c = self.f64("c")?;
        if !(c > 0.0) {
            return Err(Error::Config(format!("c = {c} must be > 0")));
        }
        let m = self.f64("mass")?;
        if !(m >= 0.0) {
            return Err(Error::Config(format!("mass = {m} must be >= 0")));
        }
        let v = self.f64("v")?;
        if !(v >= 0.0) {
            return Err(Error::Config(format!("v = {v} must be >= 0")));
        }
        let sites = self.usize("sites")?;
        if sites < 4 {
            return Err(Error::Config(format!("sites = {sites} must be >= 4")));
        }
        self.u64("seed")?;
        self.usize("realizations")?;
        self.usize("threads")?;
        if self.values.contains_key("t_min") {
            let t_min = self.f64("t_min")?;
            let t_max = self.f64("t_max")?;
            if !(t_min > 0.0 && t_max > t_min) {
                return Err(Error::Config(format!(
                    "time grid needs 0 < t_min < t_max (got {t_min}, {t_max})"
                )));
            }
            if self.values.contains_key("n_t") && self.usize("n_t")? < 2 {
                return Err(Error::Config("n_t must be >= 2".into()));
            }
        }
        Ok(())
    }

    pub fn str(&self, key: &str) -> Result<&str> {
        self.values
            .get(key)
            .map(|s| s.as_str())
            .ok_or_else(|| Error::Config(format!("missing key '{key}'")))
    }

    pub fn f64(&self, key: &str) -> Result<f64> {
        self.str(key)?
            .parse()
            .map_err(|_| Error::Config(format!("key '{key}': '{}' is not a number", self.values[key])))
    }

    pub fn usize(&self, key: &str) -> Result<usize> {
        self.str(key)?
            .parse()
            .map_err(|_| Error::Config(format!("key '{key}': '{}' is not an integer", self.values[key])))
    }

    pub fn u64(&self, key: &str) -> Result<u64> {
        self.str(key)?
            .parse()
            .map_err(|_| Error::Config(format!("key '{key}': '{}' is not an integer", self.values[key])))
    }

    pub fn bool(&self, key: &str) -> Result<bool> {
        match self.str(key)? {
            "true" | "1" | "yes" => Ok(true),
            "false" | "0" | "no" => Ok(false),
            other => Err(Error::Config(format!("key '{key}': '{other}' is not a bool"))),
        }
    }

    pub fn f64_list(&self, key: &str) -> Result<Vec<f64>> {
        self.str(key)?
            .split(',')
            .map(|x| {
                x.trim()
                    .parse()
                    .map_err(|_| Error::Config(format!("key '{key}': '{x}' is not a number")))
            })
            .collect()
    }

    /// Canonical manifest: sorted key=value lines plus source notes.
    /// Deliberately timestamp-free so reruns are byte-identical.
    pub fn manifest(&self) -> String {
        let mut out = String::new();
        out.push_str("# dirac1d run manifest\n");
        out.push_str(&format!("# code_version = {}\n", env!("CARGO_PKG_VERSION")));
        out.push_str(&format!("experiment = {}\n", self.experiment.name()));
        for (k, v) in &self.values {
            out.push_str(&format!("{k} = {v}\n"));
        }
        out.push_str("# sources\n");
        for (k, s) in &self.sources {
            out.push_str(&format!("# source {k} = {}\n", s.name()));
        }
        for (k, (file_v, flag_v)) in &self.overrides {
            out.push_str(&format!(
                "# override {k}: file value '{file_v}' replaced by flag value '{flag_v}'\n"
            ));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_without_file_or_flags() {
        let cfg = RunConfig::build(Experiment::LyapunovSweep, None, &[]).unwrap();
        assert_eq!(cfg.f64("p").unwrap(), 0.5);
        assert_eq!(cfg.usize("realizations").unwrap(), 8);
        assert_eq!(cfg.usize("n_steps").unwrap(), 1_000_000);
    }

    #[test]
    fn out_of_range_p_rejected() {
        let flags = vec![("p".to_string(), "1.3".to_string())];
        let err = RunConfig::build(Experiment::Moments, None, &flags).unwrap_err();
        assert!(err.to_string().contains("out of range"));
    }

    #[test]
    fn unknown_keys_rejected() {
        let err = RunConfig::build(Experiment::Moments, Some("wibble = 3\n"), &[]).unwrap_err();
        assert!(err.to_string().contains("unknown key"));
        let flags = vec![("nonsense".to_string(), "1".to_string())];
        assert!(RunConfig::build(Experiment::Moments, None, &flags).is_err());
    }

    #[test]
    fn flag_wins_over_file_and_manifest_records_both() {
        let file = "p = 0.4\nsites = 100\n";
        let flags = vec![("p".to_string(), "0.3".to_string())];
        let cfg = RunConfig::build(Experiment::Moments, Some(file), &flags).unwrap();
        assert_eq!(cfg.f64("p").unwrap(), 0.3);
        assert_eq!(cfg.usize("sites").unwrap(), 100);
        let manifest = cfg.manifest();
        assert!(manifest.contains("p = 0.3"));
        assert!(manifest.contains("# override p: file value '0.4' replaced by flag value '0.3'"));
        assert!(manifest.contains("# source sites = file"));
    }

    #[test]
    fn malformed_lines_carry_line_numbers() {
        let err = RunConfig::build(Experiment::Moments, Some("p: 0.4\n"), &[]).unwrap_err();
        assert!(err.to_string().contains("line 1"));
    }

    #[test]
    fn mismatched_experiment_in_file_rejected() {
        let err =
            RunConfig::build(Experiment::Moments, Some("experiment = nrl\n"), &[]).unwrap_err();
        assert!(err.to_string().contains("subcommand"));
    }
}
