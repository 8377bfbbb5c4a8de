//! Run configuration: one TOML file with a table per command.
//!
//! Every table is optional. Relative material paths are resolved against
//! the directory of the configuration file.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::Context;
use num_complex::Complex64;
use poleshift::materials::{DispersionModel, MaterialEntry};
use poleshift::{Block, DispersionMode, GridAxis, LayeredSphere, MaterialLibrary, ParticleModel, SingularityKind};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

const NM: f64 = 1e-9;

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    /// Seed for every random choice (cross-check sampling, random slabs).
    #[serde(default = "default_rng_seed")]
    pub rng_seed: u64,
    #[serde(default)]
    pub materials: BTreeMap<String, MaterialSource>,
    #[serde(default)]
    pub particle: ParticleConfig,
    #[serde(default)]
    pub spectrum: SpectrumConfig,
    #[serde(default)]
    pub polemap: PolemapConfig,
    #[serde(default)]
    pub sweep: SweepConfig,
    #[serde(default)]
    pub shift: ShiftConfig,
    #[serde(default)]
    pub verify: VerifyConfig,
    #[serde(default)]
    pub trajectory: TrajectoryConfig,
    /// Directory used to resolve relative paths; not part of the file.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

fn default_rng_seed() -> u64 {
    1
}

/// A material given by file (`.json` model or `.csv` table) or by a
/// constant complex index.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MaterialSource {
    File(PathBuf),
    Constant {
        n_re: f64,
        #[serde(default)]
        n_im: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum BlockName {
    #[default]
    Electric,
    Magnetic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Target {
    #[default]
    Pole,
    Zero,
}

impl Target {
    pub fn kind(self) -> SingularityKind {
        match self {
            Target::Pole => SingularityKind::Pole,
            Target::Zero => SingularityKind::Zero,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ParticleConfig {
    /// Outer radius of each layer in nm, innermost first.
    pub radii_nm: Vec<f64>,
    pub materials: Vec<String>,
    pub background: String,
    pub block: BlockName,
    pub order: usize,
    pub dispersion: DispersionMode,
}

impl Default for ParticleConfig {
    fn default() -> Self {
        Self {
            radii_nm: vec![60.0, 70.0],
            materials: vec!["silica".into(), "gold".into()],
            background: "water".into(),
            block: BlockName::Electric,
            order: 1,
            dispersion: DispersionMode::Continued,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpectrumConfig {
    pub k_min: f64,
    pub k_max: f64,
    pub steps: usize,
    /// Highest multipole order; chosen from the size parameter when absent.
    pub nu_max: Option<usize>,
}

impl Default for SpectrumConfig {
    fn default() -> Self {
        Self {
            k_min: 0.4e7,
            k_max: 1.3e7,
            steps: 181,
            nu_max: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PolemapConfig {
    pub re_min: f64,
    pub re_max: f64,
    pub re_steps: usize,
    pub im_min: f64,
    pub im_max: f64,
    pub im_steps: usize,
}

impl Default for PolemapConfig {
    fn default() -> Self {
        Self {
            re_min: 0.4e7,
            re_max: 1.4e7,
            re_steps: 201,
            im_min: -0.3e7,
            im_max: 0.05e7,
            im_steps: 71,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    pub target: Target,
    /// Seed wavenumber `[re, im]` for the template particle; defaults depend on the target.
    pub seed: Option<[f64; 2]>,
    pub parameter: String,
    pub r_c_nm: Option<[f64; 2]>,
    pub r_c_steps: Option<usize>,
    pub d_s_nm: Option<[f64; 2]>,
    pub d_s_steps: Option<usize>,
    pub cross_check_fraction: f64,
    pub cross_check_delta: f64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            target: Target::Pole,
            seed: None,
            parameter: "n_b".into(),
            r_c_nm: None,
            r_c_steps: None,
            d_s_nm: None,
            d_s_steps: None,
            cross_check_fraction: 0.05,
            cross_check_delta: 1e-4,
        }
    }
}

/// Resolved sweep grid in metres.
#[derive(Debug, Clone, Copy)]
pub struct SweepGrid {
    pub r_c: GridAxis,
    pub d_s: GridAxis,
    pub seed: Complex64,
}

impl SweepConfig {
    pub fn grid(&self) -> anyhow::Result<SweepGrid> {
        let (r, rs, d, ds, seed) = match self.target {
            Target::Pole => ([1.0, 65.0], 65, [0.5, 6.5], 61, [0.7e7, -0.05e7]),
            Target::Zero => ([1.0, 250.0], 125, [0.2, 5.0], 49, [1.24e7, -0.13e7]),
        };
        let r = self.r_c_nm.unwrap_or(r);
        let d = self.d_s_nm.unwrap_or(d);
        let seed = self.seed.unwrap_or(seed);
        let axis = |b: [f64; 2], n: usize, name: &str| {
            GridAxis::new(b[0] * NM, b[1] * NM, n).map_err(|e| CliError::Config(format!("sweep.{name}: {e}")))
        };
        Ok(SweepGrid {
            r_c: axis(r, self.r_c_steps.unwrap_or(rs), "r_c")?,
            d_s: axis(d, self.d_s_steps.unwrap_or(ds), "d_s")?,
            seed: Complex64::new(seed[0], seed[1]),
        })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ShiftConfig {
    pub target: Target,
    pub seed: [f64; 2],
    pub parameter: String,
    pub delta: f64,
}

impl Default for ShiftConfig {
    fn default() -> Self {
        Self {
            target: Target::Pole,
            seed: [0.7e7, -0.05e7],
            parameter: "n_b".into(),
            delta: 1e-4,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VerifyConfig {
    /// Number of random slabs in the slab and identity suites.
    pub random_slabs: usize,
    /// Optional slab description (JSON list of layers) checked in addition.
    pub slab_file: Option<PathBuf>,
    pub slab_background: f64,
    /// Seeds `[re, im]` of poles checked by the residue suite.
    pub pole_seeds: Vec<[f64; 2]>,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            random_slabs: 100,
            slab_file: None,
            slab_background: 1.0,
            pole_seeds: vec![[0.7e7, -0.05e7]],
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrajectoryConfig {
    pub target: Target,
    pub seed: [f64; 2],
    /// Geometry parameter followed: `r_c` or `d_s`.
    pub parameter: String,
    pub start_nm: f64,
    pub stop_nm: f64,
    pub steps: usize,
}

impl Default for TrajectoryConfig {
    fn default() -> Self {
        Self {
            target: Target::Pole,
            seed: [0.7e7, -0.05e7],
            parameter: "r_c".into(),
            start_nm: 60.0,
            stop_nm: 20.0,
            steps: 41,
        }
    }
}

impl Config {
    pub fn load(path: Option<&Path>) -> anyhow::Result<Self> {
        let Some(path) = path else {
            return Ok(Self {
                rng_seed: default_rng_seed(),
                ..Self::default()
            });
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut config: Config =
            toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        config.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(config)
    }

    pub fn resolve(&self, path: &Path) -> PathBuf {
        if path.is_absolute() {
            path.to_path_buf()
        } else {
            self.base_dir.join(path)
        }
    }

    /// Built-in materials overlaid with the configured ones.
    pub fn library(&self) -> anyhow::Result<MaterialLibrary> {
        let mut lib = MaterialLibrary::builtin();
        for (id, source) in &self.materials {
            let entry = match source {
                MaterialSource::File(p) => MaterialLibrary::load_file(&self.resolve(p))
                    .map_err(|e| CliError::Config(format!("material `{id}`: {e}")))?,
                MaterialSource::Constant { n_re, n_im } => MaterialEntry {
                    model: DispersionModel::Constant {
                        n: Complex64::new(*n_re, *n_im),
                    },
                    source: "constant index from configuration".into(),
                },
            };
            lib.replace(id, entry);
        }
        Ok(lib)
    }

    pub fn particle(&self) -> anyhow::Result<ParticleModel> {
        let p = &self.particle;
        let sphere = LayeredSphere::new(
            p.radii_nm.iter().map(|r| r * NM).collect(),
            p.materials.clone(),
            p.background.clone(),
        )
        .map_err(|e| CliError::Config(format!("particle: {e}")))?;
        let block = match p.block {
            BlockName::Electric => Block::Electric,
            BlockName::Magnetic => Block::Magnetic,
        };
        ParticleModel::new(sphere, Arc::new(self.library()?), p.dispersion, block, p.order)
            .map_err(|e| CliError::Config(format!("particle: {e}")).into())
    }

    /// Canonical text of the configuration, used to tie a sweep journal to
    /// the run that wrote it.
    pub fn fingerprint(&self) -> anyhow::Result<String> {
        serde_json::to_string(&(self.rng_seed, &self.materials, &self.particle, &self.sweep))
            .context("serializing configuration")
    }
}
