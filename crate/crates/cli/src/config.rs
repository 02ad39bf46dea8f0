//! Run configuration: one TOML file describes a whole pipeline run, and every
//! command reads only the sections it needs. Field defaults match the library
//! defaults so an empty file (or no file at all) is a valid run.

use std::env;
use std::fs;
use std::path::{Path, PathBuf};

use beamwek_core::channel::{ArrayConfig, GenConfig, TraceConfig};
use beamwek_core::metrics::SigmaMode;
use beamwek_core::taxonomy::{self, Taxonomy};
use beamwek_core::wek;
use beamwek_core::{Error, NetConfig, PermittivityTable, Result, TrainConfig};
use serde::Deserialize;

/// Environment override for the working directory, mainly for tests and CI.
pub const WORKDIR_ENV: &str = "BEAMWEK_WORKDIR";

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Master seed; every random purpose derives its own stream from it.
    pub seed: u64,
    /// Training-time weight in the prediction/cost efficiency score.
    pub alpha: f64,
    /// Block sizes to sweep; each gets its own matrices, model and metrics.
    pub block_sizes: Vec<usize>,
    /// "cv" (default) or "std": spread statistic for per-phase timings.
    pub sigma_mode: String,
    pub train_fraction: f64,
    pub paths: PathsConfig,
    pub scene: GenConfig,
    pub array: ArrayConfig,
    pub channel: TraceConfig,
    pub train: TrainConfig,
    pub net: NetConfig,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PathsConfig {
    pub workdir: PathBuf,
    /// Category-to-material table; `None` uses the built-in urban set.
    pub taxonomy: Option<PathBuf>,
    /// Relative permittivity table; `None` uses the built-in values.
    pub permittivity: Option<PathBuf>,
}

impl Default for PathsConfig {
    fn default() -> Self {
        PathsConfig { workdir: PathBuf::from("work"), taxonomy: None, permittivity: None }
    }
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 0,
            alpha: 0.5,
            block_sizes: vec![20, 30, 40, 50],
            sigma_mode: "cv".into(),
            train_fraction: 0.8,
            paths: PathsConfig::default(),
            scene: GenConfig::default(),
            array: ArrayConfig::default(),
            channel: TraceConfig::default(),
            train: TrainConfig::default(),
            net: NetConfig::default(),
        }
    }
}

impl RunConfig {
    /// Reads and validates a config. `None` means "all defaults". The seed
    /// flag, when present, wins over the file.
    pub fn load(path: Option<&Path>, seed_override: Option<u64>) -> Result<RunConfig> {
        let mut cfg = match path {
            None => RunConfig::default(),
            Some(p) => {
                let text = fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
                toml::from_str(&text)
                    .map_err(|e| Error::config(format!("{}: {e}", p.display())))?
            }
        };
        if let Some(s) = seed_override {
            cfg.seed = s;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<()> {
        if !self.alpha.is_finite() || self.alpha < 0.0 {
            return Err(Error::config(format!("alpha must be >= 0, got {}", self.alpha)));
        }
        if self.block_sizes.is_empty() || self.block_sizes.contains(&0) {
            return Err(Error::config("block_sizes must be a non-empty list of positive sizes"));
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(Error::config(format!(
                "train_fraction must lie in (0, 1), got {}",
                self.train_fraction
            )));
        }
        self.sigma_mode()?;
        self.net.validate()?;
        self.train.validate(self.array.n_beams)?;
        if !self.train.k_list.contains(&1) {
            return Err(Error::config("train.k_list must include depth 1"));
        }
        // Referenced files must exist up front, not at first use.
        for p in [&self.paths.taxonomy, &self.paths.permittivity].into_iter().flatten() {
            if !p.is_file() {
                return Err(Error::config(format!("{}: file not found", p.display())));
            }
        }
        Ok(())
    }

    pub fn sigma_mode(&self) -> Result<SigmaMode> {
        match self.sigma_mode.as_str() {
            "cv" => Ok(SigmaMode::Cv),
            "std" => Ok(SigmaMode::Std),
            other => Err(Error::config(format!("sigma_mode must be \"cv\" or \"std\", got {other:?}"))),
        }
    }

    pub fn workdir(&self) -> PathBuf {
        match env::var_os(WORKDIR_ENV) {
            Some(dir) if !dir.is_empty() => PathBuf::from(dir),
            _ => self.paths.workdir.clone(),
        }
    }

    pub fn dataset_dir(&self) -> PathBuf {
        self.workdir().join("dataset")
    }

    pub fn manifest_path(&self) -> PathBuf {
        self.dataset_dir().join(beamwek_core::channel::dataset::MANIFEST_FILE)
    }

    pub fn wek_dir(&self, b: usize) -> PathBuf {
        self.workdir().join("wek").join(format!("B{b}"))
    }

    pub fn run_dir(&self, b: usize) -> PathBuf {
        self.workdir().join("runs").join(format!("B{b}"))
    }

    /// Block sizes selected by the flag, or the whole configured sweep.
    pub fn selected_blocks(&self, flag: Option<usize>) -> Result<Vec<usize>> {
        match flag {
            None => Ok(self.block_sizes.clone()),
            Some(0) => Err(Error::config("block size must be positive")),
            Some(b) => Ok(vec![b]),
        }
    }

    pub fn taxonomy(&self) -> Result<Taxonomy> {
        match &self.paths.taxonomy {
            Some(p) => taxonomy::load_taxonomy(p),
            None => Ok(taxonomy::default_taxonomy()),
        }
    }

    pub fn permittivity(&self) -> Result<PermittivityTable> {
        match &self.paths.permittivity {
            Some(p) => {
                let text = fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
                wek::parse_permittivity(&text)
            }
            None => Ok(PermittivityTable::default()),
        }
    }

    /// Scene generator with the array and channel sections folded in.
    pub fn gen_config(&self, count_override: Option<usize>) -> GenConfig {
        let mut gen = self.scene.clone();
        gen.array = self.array;
        gen.trace = self.channel;
        if let Some(c) = count_override {
            gen.count = c;
        }
        gen
    }
}
