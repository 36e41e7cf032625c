use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use cantor_kernel::construction::{RadiiSchedule, ScheduleError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
    Svg,
}

/// Knobs of the individual experiments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub reflectionless_trials: usize,
    pub ctilde_tol: f64,
    pub ctilde_grid: usize,
    pub sweep_per_stratum: usize,
    pub sweep_decompose_per_level: usize,
    pub pv_trials: usize,
    pub c0: f64,
    pub density_samples: usize,
    pub growth_samples: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            reflectionless_trials: 100,
            ctilde_tol: 1e-13,
            ctilde_grid: 1000,
            sweep_per_stratum: 125,
            sweep_decompose_per_level: 20,
            pv_trials: 100,
            c0: 0.01,
            density_samples: 200,
            growth_samples: 10_000,
        }
    }
}

/// Everything a run depends on. Loaded from TOML, then overridden by flags.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Successive ratios `r_{n−1}/r_n`.
    pub schedule: Vec<u64>,
    pub depth: usize,
    pub seed: u64,
    pub tol: f64,
    pub out: PathBuf,
    pub formats: Vec<Format>,
    pub threads: Option<usize>,
    pub experiments: ExperimentConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            schedule: RadiiSchedule::desk_default().ratios().to_vec(),
            depth: 2,
            seed: 1,
            tol: 1e-6,
            out: PathBuf::from("out"),
            formats: vec![Format::Csv, Format::Json],
            threads: None,
            experiments: ExperimentConfig::default(),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("bad config {path}: {source}")]
    Parse { path: PathBuf, source: toml::de::Error },
    #[error("invalid schedule: {0}")]
    Schedule(#[from] ScheduleError),
    #[error("{0}")]
    Invalid(String),
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        toml::from_str(&text).map_err(|source| ConfigError::Parse {
            path: path.to_path_buf(),
            source,
        })
    }

    /// The schedule, validated, and checked deep enough for `depth`.
    pub fn radii(&self) -> Result<RadiiSchedule, ConfigError> {
        let s = RadiiSchedule::from_ratios(&self.schedule)?;
        s.check_depth(self.depth)?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.radii()?;
        if !(self.tol > 0.0) {
            return Err(ConfigError::Invalid(format!("tol must be positive, got {}", self.tol)));
        }
        if self.threads == Some(0) {
            return Err(ConfigError::Invalid("threads must be at least 1".into()));
        }
        let e = &self.experiments;
        if !(e.c0 > 0.0 && e.c0 < 1.0) {
            return Err(ConfigError::Invalid(format!("c0 must lie in (0, 1), got {}", e.c0)));
        }
        if !(e.ctilde_tol > 0.0) {
            return Err(ConfigError::Invalid("ctilde_tol must be positive".into()));
        }
        Ok(())
    }

    pub fn wants(&self, f: Format) -> bool {
        self.formats.contains(&f)
    }
}
