use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use torick::solver::VerdictOptions;
use torick::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub tol: f64,
    pub tau_a: f64,
    pub tau_eq: f64,
    pub creases: usize,
    pub seed: u64,
    pub output: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            tau_a: 1e-7,
            tau_eq: 1e-8,
            creases: 200,
            seed: 42,
            output: None,
        }
    }
}

#[derive(Debug, Clone, Default, clap::Args)]
pub struct ConfigArgs {
    /// JSON file with any subset of the run configuration fields
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Quadrature tolerance [default: 1e-10]
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Threshold on residual_a for condition (a) [default: 1e-7]
    #[arg(long, global = true)]
    pub tau_a: Option<f64>,
    /// Threshold on the relative alternating vertex sum [default: 1e-8]
    #[arg(long, global = true)]
    pub tau_eq: Option<f64>,
    /// Number of crease functions in a scan [default: 200]
    #[arg(long, global = true)]
    pub creases: Option<usize>,
    /// Seed for every random choice [default: 42]
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Write the report here instead of stdout
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::ParameterOutOfRange(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| Error::Json(format!("config {}: {e}", path.display())))
    }

    /// Defaults, then the config file, then individual flags.
    pub fn resolve(args: &ConfigArgs) -> Result<Self> {
        let mut cfg = match &args.config {
            Some(path) => Self::from_file(path)?,
            None => Self::default(),
        };
        if let Some(v) = args.tol {
            cfg.tol = v;
        }
        if let Some(v) = args.tau_a {
            cfg.tau_a = v;
        }
        if let Some(v) = args.tau_eq {
            cfg.tau_eq = v;
        }
        if let Some(v) = args.creases {
            cfg.creases = v;
        }
        if let Some(v) = args.seed {
            cfg.seed = v;
        }
        if args.output.is_some() {
            cfg.output = args.output.clone();
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("tol", self.tol), ("tau_a", self.tau_a), ("tau_eq", self.tau_eq)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::ParameterOutOfRange(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }

    pub fn verdict_options(&self) -> VerdictOptions {
        VerdictOptions {
            tol: self.tol,
            tau_a: self.tau_a,
            tau_eq: self.tau_eq,
            creases: self.creases,
            seed: self.seed,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_file() {
        let dir = std::env::temp_dir().join(format!("torick-config-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("run.json");
        std::fs::write(&path, r#"{"tol": 1e-8, "seed": 7}"#).unwrap();
        let args = ConfigArgs {
            config: Some(path),
            seed: Some(9),
            ..ConfigArgs::default()
        };
        let cfg = RunConfig::resolve(&args).unwrap();
        assert_eq!(cfg.tol, 1e-8);
        assert_eq!(cfg.seed, 9);
        assert_eq!(cfg.creases, 200);
        std::fs::remove_dir_all(dir).unwrap();
    }

    #[test]
    fn rejects_non_positive_tolerance() {
        let args = ConfigArgs {
            tau_eq: Some(0.0),
            ..ConfigArgs::default()
        };
        assert!(RunConfig::resolve(&args).is_err());
    }
}
