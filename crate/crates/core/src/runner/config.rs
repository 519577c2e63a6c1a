//! Experiment configuration files.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::classical::{equilateral_centers, OpenMapSystem};
use crate::error::{LabError, Result};
use crate::fup::FractalSetSpec;
use crate::quantum::ModelCutoff;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Classical,
    Splitting,
    Pressure,
    Dimension,
    Porosity,
    Spectrum,
    Fup,
    Numerology,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 8] = [
        ExperimentKind::Classical,
        ExperimentKind::Splitting,
        ExperimentKind::Pressure,
        ExperimentKind::Dimension,
        ExperimentKind::Porosity,
        ExperimentKind::Spectrum,
        ExperimentKind::Fup,
        ExperimentKind::Numerology,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Classical => "classical",
            ExperimentKind::Splitting => "splitting",
            ExperimentKind::Pressure => "pressure",
            ExperimentKind::Dimension => "dimension",
            ExperimentKind::Porosity => "porosity",
            ExperimentKind::Spectrum => "spectrum",
            ExperimentKind::Fup => "fup",
            ExperimentKind::Numerology => "numerology",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == s)
    }
}

/// The map under study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum SystemSpec {
    Baker {
        base: usize,
        kept: Vec<usize>,
        #[serde(default)]
        shear: f64,
    },
    Cat {
        matrix: [[i64; 2]; 2],
        #[serde(default)]
        shear: f64,
    },
    Linear {
        #[serde(default = "one")]
        hx: f64,
        #[serde(default = "one")]
        hxi: f64,
    },
    Disks {
        centers: Vec<[f64; 2]>,
        radii: Vec<f64>,
    },
    /// Equilateral three-disk system with center distance `separation`.
    ThreeDisk {
        separation: f64,
        radius: f64,
    },
    /// Scaling map x -> 2x truncated by a cutoff; quantum experiments only.
    Model {
        #[serde(default)]
        cutoff: Option<ModelCutoff>,
    },
}

fn one() -> f64 {
    1.0
}

impl SystemSpec {
    pub fn build(&self) -> Result<OpenMapSystem> {
        match self {
            SystemSpec::Baker { base, kept, shear } => OpenMapSystem::sheared_baker(*base, kept, *shear),
            SystemSpec::Cat { matrix, shear } => OpenMapSystem::perturbed_cat_map(*matrix, *shear),
            SystemSpec::Linear { hx, hxi } => OpenMapSystem::linear_model(*hx, *hxi),
            SystemSpec::Disks { centers, radii } => OpenMapSystem::disks(centers.clone(), radii.clone()),
            SystemSpec::ThreeDisk { separation, radius } => {
                OpenMapSystem::three_disk(equilateral_centers(*separation), vec![*radius; 3])
            }
            SystemSpec::Model { .. } => OpenMapSystem::linear_model(1.0, 1.0),
        }
    }

    pub fn is_baker(&self) -> bool {
        matches!(self, SystemSpec::Baker { .. })
    }

    pub fn is_disks(&self) -> bool {
        matches!(self, SystemSpec::Disks { .. } | SystemSpec::ThreeDisk { .. })
    }
}

/// Parameter sweeps; each kind reads the lists it needs.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    pub h: Option<Vec<f64>>,
    pub n: Option<Vec<usize>>,
    pub k: Option<Vec<usize>>,
    pub s: Option<Vec<f64>>,
    pub n_max: Option<usize>,
    /// Smallest and largest scale of a box count or porosity scan.
    pub scales: Option<[f64; 2]>,
    pub depth: Option<usize>,
    pub samples: Option<usize>,
    pub grid: Option<usize>,
    /// Matrix powers for spectrum runs; defaults to 2n+1 for the model and 1 otherwise.
    pub powers: Option<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    #[serde(default = "default_root_tol")]
    pub root: f64,
    #[serde(default = "default_slope_tol")]
    pub slope: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
}

fn default_root_tol() -> f64 {
    1e-10
}

fn default_slope_tol() -> f64 {
    1e-10
}

fn default_max_iter() -> usize {
    200
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            root: default_root_tol(),
            slope: default_slope_tol(),
            max_iter: default_max_iter(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    pub dir: Option<String>,
    /// File name stem; defaults to the experiment kind.
    pub prefix: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NumerologySpec {
    pub lambda0: f64,
    pub lambda1: f64,
    pub beta: f64,
    /// Semiclassical parameters at which N0 and N1 are reported.
    #[serde(default)]
    pub h: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PorositySpec {
    /// Set to scan; when absent the system's Cantor set or trace is used.
    pub set: Option<FractalSetSpec>,
    pub nu: f64,
    #[serde(default = "default_ratio")]
    pub scale_ratio: f64,
}

fn default_ratio() -> f64 {
    2.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FupSpec {
    /// Set on the position side; defined per scale with `depth = 0` meaning full depth for Cantor sets.
    pub minus: FractalSetSpec,
    pub plus: FractalSetSpec,
    /// Torus size is base^k for each k in `sweep.k`.
    #[serde(default = "default_fup_base")]
    pub base: usize,
}

fn default_fup_base() -> usize {
    3
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FrameChoice {
    #[default]
    Canonical,
    /// Constant frame from power iteration of dF at the first trapped sample, or the origin.
    PowerIteration,
    /// Directions at trapped samples, interpolated and mollified.
    Trapped,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplittingSpec {
    #[serde(default)]
    pub frames: FrameChoice,
    #[serde(default = "default_frame_depth")]
    pub frame_depth: usize,
}

fn default_frame_depth() -> usize {
    3
}

/// A complete experiment description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: Option<ExperimentKind>,
    #[serde(default)]
    pub seed: u64,
    pub system: Option<SystemSpec>,
    #[serde(default)]
    pub sweep: Sweep,
    #[serde(default)]
    pub tolerance: Tolerances,
    #[serde(default)]
    pub output: OutputSpec,
    pub numerology: Option<NumerologySpec>,
    pub porosity: Option<PorositySpec>,
    pub fup: Option<FupSpec>,
    pub splitting: Option<SplittingSpec>,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| LabError::Config(e.to_string().trim().to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| LabError::Config(e.to_string()))
    }

    /// Hex SHA-256 of the canonical JSON form, truncated to 16 digits.
    pub fn hash(&self) -> String {
        let canon = serde_json::to_vec(self).expect("config serializes");
        let digest = Sha256::digest(&canon);
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }

    pub fn kind(&self) -> Result<ExperimentKind> {
        self.kind.ok_or_else(|| LabError::Config("missing key `kind`".into()))
    }
}
