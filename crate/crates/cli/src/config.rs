//! TOML experiment configuration.

use std::fs;
use std::path::{Component, Path, PathBuf};

use muskat_core::spectral::resample;
use muskat_core::{InterfaceState, PhysicalParams, SolverConfig, TorusGrid};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub params: PhysicalParams,
    pub grid: GridConfig,
    pub solver: SolverConfig,
    pub initial_profile: ProfileSpec,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub convergence: ConvergenceConfig,
    /// Written into manifests; ignored when a manifest is loaded as a config.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub run: Option<RunRecord>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum ProfileSpec {
    /// `mean + sum a cos(k x) + b sin(k x)` over `modes = [[k, a, b], ...]`.
    Fourier { mean: f64, modes: Vec<[f64; 3]> },
    /// Samples at `x_j = -pi + 2 pi j / m`, one per line, either `f` or `x,f`;
    /// interpolated onto the configured grid when `m != n`.
    Samples { file: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_dir")]
    pub dir: PathBuf,
    #[serde(default = "default_true")]
    pub snapshots: bool,
    /// Rayon pool size; `MUSKAT_THREADS` takes precedence.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: default_dir(),
            snapshots: true,
            threads: None,
        }
    }
}

fn default_dir() -> PathBuf {
    PathBuf::from("muskat_out")
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvergenceConfig {
    #[serde(default = "default_levels")]
    pub grids: Vec<usize>,
    /// Steps of the coarsest temporal level.
    #[serde(default = "default_steps")]
    pub time_steps: usize,
    #[serde(default = "default_halvings")]
    pub halvings: usize,
}

impl Default for ConvergenceConfig {
    fn default() -> Self {
        Self {
            grids: default_levels(),
            time_steps: default_steps(),
            halvings: default_halvings(),
        }
    }
}

fn default_levels() -> Vec<usize> {
    vec![64, 128, 256, 512]
}

fn default_steps() -> usize {
    8
}

fn default_halvings() -> usize {
    3
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub version: String,
    pub termination: String,
    pub steps: usize,
    pub outputs: Vec<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
}

impl Config {
    /// Parses and validates `path`; relative paths inside are taken relative
    /// to the file's directory and stored as absolute paths.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let mut config: Config =
            toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let base = path
            .parent()
            .map(Path::to_path_buf)
            .unwrap_or_default();
        let base = if base.as_os_str().is_empty() { PathBuf::from(".") } else { base };
        let base = base.canonicalize().map_err(|e| CliError::io(&base, e))?;
        config.output.dir = absolute(&base, &config.output.dir);
        if let ProfileSpec::Samples { file } = &mut config.initial_profile {
            *file = absolute(&base, file);
        }
        config.run = None;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.params.validate()?;
        self.solver.validate()?;
        TorusGrid::new(self.grid.n)?;
        if self.output.threads == Some(0) {
            return Err(CliError::Config("output.threads must be at least 1".into()));
        }
        if let ProfileSpec::Fourier { mean, modes } = &self.initial_profile {
            if !mean.is_finite() {
                return Err(CliError::Config(format!("initial_profile.mean = {mean} is not finite")));
            }
            for m in modes {
                if !(m[0] >= 1.0 && m[0].fract() == 0.0) || !m[1].is_finite() || !m[2].is_finite() {
                    return Err(CliError::Config(format!(
                        "mode {m:?} must be [k, cos_amp, sin_amp] with integer k >= 1"
                    )));
                }
            }
        }
        let c = &self.convergence;
        if c.time_steps == 0 || c.grids.is_empty() {
            return Err(CliError::Config("convergence needs time_steps >= 1 and at least one grid".into()));
        }
        Ok(())
    }

    /// Initial state on a grid of `n` nodes; rejects data with `min f <= 0`.
    pub fn initial_state_on(&self, n: usize) -> Result<InterfaceState, CliError> {
        let grid = TorusGrid::new(n)?;
        let state = match &self.initial_profile {
            ProfileSpec::Fourier { mean, modes } => InterfaceState::from_fn(
                &grid,
                |x| {
                    mean + modes
                        .iter()
                        .map(|[k, a, b]| a * (k * x).cos() + b * (k * x).sin())
                        .sum::<f64>()
                },
                0.0,
            )?,
            ProfileSpec::Samples { file } => {
                let samples = read_samples(file)?;
                let source = TorusGrid::new(samples.len())?;
                let f = if samples.len() == n { samples } else { resample(&source, &samples, &grid) };
                InterfaceState::new(grid, f, 0.0)?
            }
        };
        if !state.is_positive() {
            return Err(CliError::Config(format!(
                "initial profile must satisfy min f > 0, got min f = {:.6e}",
                state.min()
            )));
        }
        Ok(state)
    }

    pub fn initial_state(&self) -> Result<InterfaceState, CliError> {
        self.initial_state_on(self.grid.n)
    }
}

fn absolute(base: &Path, p: &Path) -> PathBuf {
    let joined = if p.is_absolute() { p.to_path_buf() } else { base.join(p) };
    let mut out = PathBuf::new();
    for c in joined.components() {
        match c {
            Component::CurDir => {}
            Component::ParentDir => {
                out.pop();
            }
            other => out.push(other),
        }
    }
    out
}

fn read_samples(path: &Path) -> Result<Vec<f64>, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with(|c: char| c.is_alphabetic()) {
            continue;
        }
        let field = line.rsplit(',').next().unwrap_or(line).trim();
        let v: f64 = field.parse().map_err(|_| {
            CliError::Config(format!("{}:{}: cannot parse {field:?}", path.display(), lineno + 1))
        })?;
        out.push(v);
    }
    Ok(out)
}
