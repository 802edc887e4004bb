use std::path::{Path, PathBuf};

use clap::Args;
use idla_core::potential::{SolverConfig, DEFAULT_SITE_CAP};
use idla_core::DEFAULT_H0;
use serde::{Deserialize, Serialize};

use crate::CliError;

/// Options shared by every subcommand. Flags override values from `--config`.
#[derive(Args, Debug, Clone)]
pub struct Common {
    /// JSON file with default values for any of these options.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Lattice dimension (3 to 6).
    #[arg(long, global = true)]
    pub d: Option<usize>,
    /// Width of the central ball.
    #[arg(long, global = true)]
    pub h0: Option<f64>,
    /// Master seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Number of seeds, counted up from the master seed.
    #[arg(long, global = true)]
    pub seeds: Option<u64>,
    #[arg(long, global = true, env = "IDLA_OUTPUT_DIR")]
    pub output_dir: Option<PathBuf>,
    /// Worker threads (default: available cores).
    #[arg(long, global = true, env = "IDLA_WORKERS")]
    pub workers: Option<usize>,
    /// Largest cluster, in explorers.
    #[arg(long, global = true)]
    pub max_explorers: Option<u64>,
    /// Largest solver domain, in sites.
    #[arg(long, global = true)]
    pub site_cap: Option<usize>,
    /// Scaled residual at which the solver stops.
    #[arg(long, global = true)]
    pub tolerance: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    d: Option<usize>,
    h0: Option<f64>,
    seed: Option<u64>,
    seeds: Option<u64>,
    output_dir: Option<PathBuf>,
    workers: Option<usize>,
    max_explorers: Option<u64>,
    site_cap: Option<usize>,
    tolerance: Option<f64>,
}

/// Fully resolved settings, echoed into every manifest.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub d: usize,
    pub h0: f64,
    pub seed: u64,
    pub seeds: u64,
    pub output_dir: PathBuf,
    pub workers: usize,
    pub max_explorers: u64,
    pub site_cap: usize,
    pub tolerance: f64,
}

impl RunConfig {
    pub fn resolve(c: &Common) -> Result<Self, CliError> {
        let file = match &c.config {
            Some(p) => read_config(p)?,
            None => ConfigFile::default(),
        };
        let cfg = RunConfig {
            d: c.d.or(file.d).unwrap_or(3),
            h0: c.h0.or(file.h0).unwrap_or(DEFAULT_H0),
            seed: c.seed.or(file.seed).unwrap_or(1),
            seeds: c.seeds.or(file.seeds).unwrap_or(1),
            output_dir: c.output_dir.clone().or(file.output_dir).unwrap_or_else(|| PathBuf::from("idla-out")),
            workers: c
                .workers
                .or(file.workers)
                .unwrap_or_else(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)),
            max_explorers: c.max_explorers.or(file.max_explorers).unwrap_or(50_000_000),
            site_cap: c.site_cap.or(file.site_cap).unwrap_or(DEFAULT_SITE_CAP),
            tolerance: c.tolerance.or(file.tolerance).unwrap_or(1e-12),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), CliError> {
        if !(3..=6).contains(&self.d) {
            return Err(CliError::Usage(format!("d = {} is not supported: d >= 3 is required (and d <= 6)", self.d)));
        }
        if !(self.h0 >= 4.0) {
            return Err(CliError::Usage(format!("h0 = {} is too small: h0 >= 4 is required", self.h0)));
        }
        if self.seeds == 0 || self.workers == 0 || self.max_explorers == 0 || self.site_cap == 0 {
            return Err(CliError::Usage("seeds, workers and caps must be positive".into()));
        }
        if !(self.tolerance > 0.0) {
            return Err(CliError::Usage("tolerance must be positive".into()));
        }
        Ok(())
    }

    pub fn solver(&self) -> SolverConfig {
        SolverConfig { tolerance: self.tolerance, site_cap: self.site_cap, ..SolverConfig::default() }
    }

    pub fn seed_list(&self) -> Vec<u64> {
        (0..self.seeds).map(|k| self.seed.wrapping_add(k)).collect()
    }
}

fn read_config(path: &Path) -> Result<ConfigFile, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("bad config {}: {e}", path.display())))
}
