//! Run configurations and the defaults they fall back to.
//!
//! | key                            | default                 |
//! |--------------------------------|-------------------------|
//! | `grid`                         | `64x64`                 |
//! | `element_spacing_wavelengths`  | `0.5`                   |
//! | `noise_power`                  | `1.0`                   |
//! | `method`                       | `annihilate-multi`      |
//! | `methods`                      | `annihilate-multi, smi` |
//! | `target_cell`                  | `50`                    |
//! | `cells`                        | `[target_cell]`         |
//! | `scan`                         | `angle`                 |
//! | `solver`                       | greedy pursuit, residual tolerance 1.1·√(N·L·noise_power), N·L iterations |
//! | `gap.search_limit`             | min(4·N, N_s·N_d/8)     |
//! | `gap.min_ratio`                | `3`                     |
//! | `gap.energy_fallback`          | `0.9`                   |
//! | `robust`                       | `mean`                  |
//! | `training.n_training`          | `16`                    |
//! | `training.guard_cells`         | `5`                     |
//! | `sidelobe.coherence_threshold` | `0.9`                   |
//! | `sidelobe.residue_fraction`    | `0.05`                  |
//! | `sidelobe.max_peaks`           | N_s·N_d                 |
//! | `smi.loading`                  | trace-relative, `1.0`   |
//! | `smi.training`                 | 16 cells, 5 guard cells |
//! | preset `cnr_db` / `snr_db`     | `40` / `10`             |
//! | preset `diffuse_fraction`      | `0.25`                  |
//! | preset `snap_to_grid`          | `true`                  |
//! | preset `seed`                  | `0`                     |

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use cs_stap::eval::{RangeFilter, TrainingWindow};
use cs_stap::scene::{mountaintop, mountaintop_analog_preset_with, ScenarioConfig};
use cs_stap::{AngleDopplerGrid, DiagonalLoading, GapConfig, Robust, SidelobeConfig, SolverConfig};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

pub const DEFAULT_GRID: GridSpec = GridSpec {
    n_spatial: 64,
    n_doppler: 64,
};
pub const DEFAULT_ELEMENT_SPACING: f64 = 0.5;
pub const DEFAULT_NOISE_POWER: f64 = 1.0;
pub const DEFAULT_CNR_DB: f64 = 40.0;
pub const DEFAULT_SNR_DB: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub n_spatial: usize,
    pub n_doppler: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        DEFAULT_GRID
    }
}

impl GridSpec {
    pub fn build(&self) -> CliResult<AngleDopplerGrid> {
        AngleDopplerGrid::uniform(self.n_spatial, self.n_doppler).map_err(|e| CliError::Config(e.to_string()))
    }
}

impl FromStr for GridSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (a, b) = s
            .split_once(['x', 'X'])
            .ok_or_else(|| format!("grid '{s}' is not of the form NSxND"))?;
        let parse = |t: &str| {
            t.trim()
                .parse::<usize>()
                .ok()
                .filter(|v| *v > 0)
                .ok_or_else(|| format!("grid '{s}' needs positive integers"))
        };
        Ok(GridSpec {
            n_spatial: parse(a)?,
            n_doppler: parse(b)?,
        })
    }
}

impl fmt::Display for GridSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}", self.n_spatial, self.n_doppler)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    AnnihilateSingle,
    AnnihilateMulti,
    Sidelobe,
    Smi,
    MatchedFilter,
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::AnnihilateSingle => "annihilate-single",
            Method::AnnihilateMulti => "annihilate-multi",
            Method::Sidelobe => "sidelobe",
            Method::Smi => "smi",
            Method::MatchedFilter => "matched-filter",
        }
    }

    /// Column-safe label used in file names and CSV headers.
    pub fn label(&self) -> String {
        self.name().replace('-', "_")
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        serde_json::from_value(serde_json::Value::String(s.to_string())).map_err(|_| {
            format!("unknown method '{s}' (expected annihilate-single, annihilate-multi, sidelobe, smi or matched-filter)")
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScanKind {
    #[default]
    Angle,
    Range,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PresetName {
    #[default]
    MountaintopAnalog,
}

/// Scene description by preset name and a few knobs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PresetSpec {
    pub preset: PresetName,
    #[serde(default = "default_cnr")]
    pub cnr_db: f64,
    #[serde(default = "default_snr")]
    pub snr_db: f64,
    #[serde(default = "default_diffuse")]
    pub diffuse_fraction: f64,
    /// Moves every scatterer to its nearest grid cell.
    #[serde(default = "default_true")]
    pub snap_to_grid: bool,
    #[serde(default)]
    pub grid: GridSpec,
    #[serde(default)]
    pub seed: u64,
}

fn default_cnr() -> f64 {
    DEFAULT_CNR_DB
}
fn default_snr() -> f64 {
    DEFAULT_SNR_DB
}
fn default_diffuse() -> f64 {
    mountaintop::CLUTTER_DIFFUSE_FRACTION
}
fn default_true() -> bool {
    true
}

impl PresetSpec {
    pub fn resolve(&self) -> CliResult<ScenarioConfig> {
        if !(0.0..=1.0).contains(&self.diffuse_fraction) {
            return Err(CliError::Config("diffuse_fraction must lie in [0, 1]".into()));
        }
        let mut cfg = match self.preset {
            PresetName::MountaintopAnalog => mountaintop_analog_preset_with(self.cnr_db, self.snr_db, self.diffuse_fraction),
        };
        if self.snap_to_grid {
            cfg = cfg.snapped_to_grid(&self.grid.build()?);
        }
        Ok(cfg.with_seed(self.seed))
    }
}

/// Parses JSON text, naming the file, line and column on failure.
pub fn parse_json<T: serde::de::DeserializeOwned>(text: &str, path: &Path) -> CliResult<T> {
    serde_json::from_str(text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

pub fn read_config_text(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))
}

/// Scene for `simulate`: a preset if the JSON has a `preset` key, else an
/// explicit scenario.
pub fn parse_scene(text: &str, path: &Path) -> CliResult<ScenarioConfig> {
    let value: serde_json::Value = parse_json(text, path)?;
    let cfg = if value.get("preset").is_some() {
        parse_json::<PresetSpec>(text, path)?.resolve()?
    } else {
        parse_json::<ScenarioConfig>(text, path)?
    };
    cfg.validate().map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    Ok(cfg)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SmiSection {
    pub loading: DiagonalLoading,
    pub training: TrainingWindow,
}

impl Default for SmiSection {
    fn default() -> Self {
        Self {
            loading: DiagonalLoading::default(),
            training: TrainingWindow::default(),
        }
    }
}

/// Configuration shared by `filter`, `scan` and `compare`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    /// CSC1 cube; relative paths resolve against the config file's directory.
    pub cube: Option<PathBuf>,
    pub element_spacing_wavelengths: f64,
    pub grid: GridSpec,
    pub method: Method,
    pub methods: Vec<Method>,
    pub target_cell: usize,
    pub cells: Option<Vec<usize>>,
    pub scan: ScanKind,
    /// Grid cell `[spatial_bin, doppler_bin]` the angle scan is referenced
    /// to. Defaults to the argmax of the first method's map.
    pub target_bin: Option<[usize; 2]>,
    pub noise_power: f64,
    pub solver: Option<SolverConfig<f64>>,
    pub gap: GapConfig,
    pub robust: Robust,
    pub training: TrainingWindow,
    pub sidelobe: SidelobeConfig,
    pub smi: SmiSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            cube: None,
            element_spacing_wavelengths: DEFAULT_ELEMENT_SPACING,
            grid: DEFAULT_GRID,
            method: Method::AnnihilateMulti,
            methods: vec![Method::AnnihilateMulti, Method::Smi],
            target_cell: mountaintop::TARGET_CELL,
            cells: None,
            scan: ScanKind::Angle,
            target_bin: None,
            noise_power: DEFAULT_NOISE_POWER,
            solver: None,
            gap: GapConfig::default(),
            robust: Robust::default(),
            training: TrainingWindow::default(),
            sidelobe: SidelobeConfig::default(),
            smi: SmiSection::default(),
        }
    }
}

impl RunConfig {
    /// Makes the cube path absolute, resolving a relative one against the
    /// config file's directory.
    pub fn resolve_cube_path(mut self, config_path: &Path) -> CliResult<Self> {
        let cube = self
            .cube
            .take()
            .ok_or_else(|| CliError::Config(format!("{}: missing field `cube`", config_path.display())))?;
        let cube = if cube.is_relative() {
            config_path.parent().unwrap_or(Path::new(".")).join(cube)
        } else {
            cube
        };
        self.cube = Some(std::path::absolute(&cube).unwrap_or(cube));
        Ok(self)
    }

    /// Fills the defaults that depend on the snapshot length and validates.
    pub fn fill_defaults(mut self, snapshot_len: usize) -> CliResult<Self> {
        if self.solver.is_none() {
            self.solver = Some(SolverConfig::greedy_for_noise(self.noise_power, snapshot_len));
        }
        if self.cells.is_none() {
            self.cells = Some(vec![self.target_cell]);
        }
        if self.methods.is_empty() {
            return Err(CliError::Config("`methods` must not be empty".into()));
        }
        let check = |r: cs_stap::Result<()>| r.map_err(|e| CliError::Config(e.to_string()));
        check(self.solver.as_ref().expect("set above").validate())?;
        check(self.gap.validate())?;
        check(self.sidelobe.validate())?;
        Ok(self)
    }

    pub fn cube_path(&self) -> &Path {
        self.cube.as_deref().expect("resolved config has a cube path")
    }

    pub fn solver(&self) -> &SolverConfig<f64> {
        self.solver.as_ref().expect("resolved config has a solver")
    }

    pub fn filter_for(&self, method: Method) -> RangeFilter<f64> {
        let solver = self.solver().clone();
        match method {
            Method::AnnihilateSingle => RangeFilter::AnnihilateSingle {
                solver,
                gap: self.gap.clone(),
            },
            Method::AnnihilateMulti => RangeFilter::AnnihilateMulti {
                solver,
                gap: self.gap.clone(),
                robust: self.robust,
                training: self.training,
            },
            Method::Sidelobe => RangeFilter::Sidelobe {
                solver,
                sidelobe: self.sidelobe.clone(),
                robust: self.robust,
                training: self.training,
            },
            Method::Smi => RangeFilter::Smi {
                loading: self.smi.loading,
                training: self.smi.training,
            },
            Method::MatchedFilter => RangeFilter::MatchedFilter,
        }
    }
}
