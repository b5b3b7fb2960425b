//! JSON run configuration with documented defaults.

use std::path::{Path, PathBuf};

use gig_core::dp::GridSpec;
use gig_core::ModelParams;
use serde::Deserialize;

use crate::CliError;

pub const DEFAULT_C: f64 = 1.0;
pub const DEFAULT_GAMMA: f64 = 1.0;
pub const DEFAULT_BETA: f64 = 0.8;
pub const DEFAULT_DELTA: f64 = 0.8;
pub const DEFAULT_SIGMA: f64 = 0.0;
pub const DEFAULT_SEED: u64 = 42;
pub const DEFAULT_ROUNDS: usize = 20;
pub const DEFAULT_PATHS: usize = 10_000;
pub const DEFAULT_TRAJECTORY_R0: [f64; 6] = [0.53, 0.42, 0.34, 0.22, 0.16, 0.1];
pub const DEFAULT_DELTA_LIST: [f64; 2] = [0.7, 0.9];
pub const DEFAULT_GRID_POINTS: usize = 601;
pub const DEFAULT_TOL: f64 = 1e-10;
pub const DEFAULT_MAX_ITER: usize = 10_000;

/// `0.01, 0.02, ..., 0.99`.
pub fn default_beta_grid() -> Vec<f64> {
    (1..=99).map(|i| i as f64 / 100.0).collect()
}

#[derive(Debug, Default, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsConfig {
    pub c: Option<f64>,
    pub gamma: Option<f64>,
    pub beta: Option<f64>,
    pub delta: Option<f64>,
    pub sigma: Option<f64>,
}

#[derive(Debug, Default, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub r_min: Option<f64>,
    pub r_max: Option<f64>,
    pub points: Option<usize>,
}

/// A single number or a list of numbers.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany {
    One(f64),
    Many(Vec<f64>),
}

impl OneOrMany {
    pub fn into_vec(self) -> Vec<f64> {
        match self {
            OneOrMany::One(x) => vec![x],
            OneOrMany::Many(xs) => xs,
        }
    }
}

/// Everything a command may read. Missing keys take the documented defaults.
#[derive(Debug, Default, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub params: ParamsConfig,
    pub r0: Option<OneOrMany>,
    pub rounds: Option<usize>,
    pub paths: Option<usize>,
    pub seed: Option<u64>,
    pub burn_in: Option<usize>,
    pub beta_grid: Option<Vec<f64>>,
    pub delta_list: Option<Vec<f64>>,
    #[serde(default)]
    pub grid: GridConfig,
    pub tol: Option<f64>,
    pub max_iter: Option<usize>,
    pub quad_nodes: Option<usize>,
    /// Tabulated policy written by `solve-dp`.
    pub policy: Option<PathBuf>,
    /// Contract every round with this share, whatever the reference.
    pub fixed_share: Option<f64>,
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("config {}: {e}", path.display())))
    }

    pub fn params(&self) -> Result<ModelParams, CliError> {
        let p = &self.params;
        Ok(ModelParams::new(
            p.c.unwrap_or(DEFAULT_C),
            p.gamma.unwrap_or(DEFAULT_GAMMA),
            p.beta.unwrap_or(DEFAULT_BETA),
            p.delta.unwrap_or(DEFAULT_DELTA),
            p.sigma.unwrap_or(DEFAULT_SIGMA),
        )?)
    }

    pub fn rounds(&self) -> usize {
        self.rounds.unwrap_or(DEFAULT_ROUNDS)
    }

    pub fn paths(&self) -> usize {
        self.paths.unwrap_or(DEFAULT_PATHS)
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(DEFAULT_SEED)
    }

    pub fn r0_list(&self, default: &[f64]) -> Vec<f64> {
        self.r0
            .clone()
            .map(OneOrMany::into_vec)
            .unwrap_or_else(|| default.to_vec())
    }

    /// The single starting reference of a simulation.
    pub fn r0_single(&self) -> Result<f64, CliError> {
        match self.r0_list(&[0.0]).as_slice() {
            [r0] => Ok(*r0),
            other => Err(CliError::Config(format!(
                "expected a single r0, got {} values",
                other.len()
            ))),
        }
    }

    pub fn grid(&self, params: &ModelParams) -> Result<GridSpec, CliError> {
        let points = self.grid.points.unwrap_or(DEFAULT_GRID_POINTS);
        let default = GridSpec::default_for(params, points)?;
        Ok(GridSpec::new(
            self.grid.r_min.unwrap_or(default.r_min()),
            self.grid.r_max.unwrap_or(default.r_max()),
            points,
        )?)
    }
}
