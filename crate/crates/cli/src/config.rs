use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Parser)]
#[command(
    name = "bose3b",
    version,
    about = "Three-body Bose gas scattering energies, bounds and lattice experiments"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub settings: Settings,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Scattering energy of a potential.
    Scatter,
    /// Dyson-lemma certification sweep and no-four-body stress test.
    Dyson,
    /// Temple-inequality lower bound and its exponent bookkeeping.
    Temple,
    /// Lattice exact diagonalization, optionally a universality pair.
    Diag,
    /// Thermodynamic lower and upper bounds on the energy per volume.
    Bounds,
    /// Lattice ground state between the lower and upper bounds.
    Sandwich,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Scatter => "scatter",
            Command::Dyson => "dyson",
            Command::Temple => "temple",
            Command::Diag => "diag",
            Command::Bounds => "bounds",
            Command::Sandwich => "sandwich",
        }
    }
}

/// Every parameter a run can take. The TOML config uses the same keys as the
/// long flags with dashes replaced by underscores; flags override the file.
#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Settings {
    /// TOML file with default values for any of the flags.
    #[arg(long, global = true)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    /// Potential description (TOML).
    #[arg(long, global = true)]
    pub potential: Option<PathBuf>,
    /// Second potential for the universality comparison.
    #[arg(long, global = true)]
    pub potential2: Option<PathBuf>,
    /// Dimension the potential is expected to have.
    #[arg(long, global = true)]
    pub d: Option<usize>,
    #[arg(long, global = true)]
    pub rho: Option<f64>,
    #[arg(long, global = true)]
    pub alpha: Option<f64>,
    #[arg(long, global = true)]
    pub beta: Option<f64>,
    /// α of the upper-bound box construction.
    #[arg(long, global = true)]
    pub alpha_upper: Option<f64>,
    /// Modified scattering energy when no potential is given.
    #[arg(long, global = true)]
    pub b_m: Option<f64>,
    /// ε of the Temple bound; Y^((7α−12β−1)/2) when absent.
    #[arg(long, global = true)]
    pub epsilon: Option<f64>,
    #[arg(long, global = true)]
    pub c_err: Option<f64>,
    /// Diluteness values of a Temple sweep.
    #[arg(long, global = true, value_delimiter = ',')]
    pub y_list: Option<Vec<f64>>,
    /// Particle number.
    #[arg(long, global = true)]
    pub n: Option<usize>,
    /// Lattice sites per side.
    #[arg(long, global = true)]
    pub sites: Option<usize>,
    /// Lattice spacing.
    #[arg(long, global = true)]
    pub spacing: Option<f64>,
    /// neumann, dirichlet or periodic.
    #[arg(long, global = true)]
    pub boundary: Option<String>,
    /// Also continue a wall profile to its hard-core limit.
    #[arg(long, global = true)]
    pub hard_core_limit: Option<bool>,
    /// Inner radii R₁ of the Dyson sweep.
    #[arg(long, global = true, value_delimiter = ',')]
    pub r1_list: Option<Vec<f64>>,
    /// R₂/R₁ of the Dyson sweep.
    #[arg(long, global = true)]
    pub r2_ratio: Option<f64>,
    /// Radial cell size of the Dyson certification.
    #[arg(long, global = true)]
    pub cert_h: Option<f64>,
    /// Random configurations of the no-four-body stress test.
    #[arg(long, global = true)]
    pub configs: Option<usize>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Report path; stdout when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true)]
    pub mem_cap: Option<u64>,
}

macro_rules! overlay {
    ($flags:ident, $file:ident; $($f:ident),*) => {
        Settings {
            config: $flags.config.clone(),
            $($f: $flags.$f.clone().or($file.$f),)*
        }
    };
}

impl Settings {
    /// Flags win over the config file.
    pub fn overlay(&self, file: Settings) -> Settings {
        let flags = self;
        overlay!(flags, file; potential, potential2, d, rho, alpha, beta, alpha_upper, b_m, epsilon, c_err, y_list,
            n, sites, spacing, boundary, hard_core_limit, r1_list, r2_ratio, cert_h, configs, seed, threads, out, mem_cap)
    }

    /// Reads the config file, if any, and merges it under the flags.
    pub fn resolve(&self) -> Result<Settings, CliError> {
        let Some(path) = &self.config else {
            return Ok(self.clone());
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
        let mut file: Settings = toml::from_str(&text)
            .map_err(|e| CliError::Config(format!("config {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        for p in [&mut file.potential, &mut file.potential2, &mut file.out]
            .into_iter()
            .flatten()
        {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(self.overlay(file))
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(DEFAULT_SEED)
    }

    pub fn mem_cap(&self) -> u64 {
        self.mem_cap.unwrap_or(DEFAULT_MEM_CAP)
    }
}

pub const DEFAULT_SEED: u64 = 20240601;
pub const DEFAULT_MEM_CAP: u64 = 8 << 30;
