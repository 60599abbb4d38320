//! Configuration file schema.
//!
//! A run is described by one TOML file with sections mirroring the library's
//! parameter types. Every frequency is an ordinary frequency in Hz (the
//! f = omega/2pi convention); the mandatory `units = "hz"` field guards the
//! format against silent future change. Unknown keys are rejected with
//! location-precise messages.

use serde::Deserialize;
use std::path::PathBuf;

use nve_squeeze::device::BeamGeometry;
use nve_squeeze::fock::{FockConfig, HamiltonianSource};
use nve_squeeze::model::{SystemParams, SystemParamsHz};
use nve_squeeze::sweep::{AxisParam, Engine};

use crate::CliError;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Must be "hz".
    pub units: String,
    pub system: SystemParamsHz,
    pub geometry: Option<GeometrySection>,
    pub run: RunSection,
    #[serde(default)]
    pub output: OutputSection,
    pub fock: Option<FockSection>,
    pub sweep: Option<SweepSection>,
    pub optimize: Option<OptimizeSection>,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometrySection {
    pub length: f64,
    pub width: f64,
    pub height: f64,
    #[serde(default = "defaults::density")]
    pub density: f64,
    #[serde(default = "defaults::youngs_modulus")]
    pub youngs_modulus: f64,
    #[serde(default = "defaults::quality_factor")]
    pub quality_factor: f64,
    #[serde(default = "defaults::temperature")]
    pub temperature: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    /// Simulated horizon in seconds; 0 emits the single t = 0 sample.
    pub horizon: f64,
    #[serde(default = "defaults::samples")]
    pub samples: usize,
    /// Joint-quadrature angles; the first is the primary trace angle.
    #[serde(default = "defaults::thetas")]
    pub thetas: Vec<f64>,
    #[serde(default)]
    pub engine: EngineChoice,
    #[serde(default)]
    pub model: ModelChoice,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default = "defaults::dir")]
    pub dir: PathBuf,
    #[serde(default = "defaults::formats")]
    pub formats: Vec<Format>,
    /// Add a dB column/field (10 log10(V / 0.25)); output-only conversion.
    #[serde(default)]
    pub db: bool,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self { dir: defaults::dir(), formats: defaults::formats(), db: false }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum EngineChoice {
    #[default]
    Gaussian,
    Fock,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum ModelChoice {
    Full,
    #[default]
    Effective,
    /// Reduced pure-squeeze generator (the Delta = -2A special case).
    SqueezeSpecial,
}

impl ModelChoice {
    pub fn fock_source(self) -> HamiltonianSource {
        match self {
            ModelChoice::Full => HamiltonianSource::Full,
            ModelChoice::Effective => HamiltonianSource::Effective,
            ModelChoice::SqueezeSpecial => HamiltonianSource::PureSqueeze,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            ModelChoice::Full => "full",
            ModelChoice::Effective => "effective",
            ModelChoice::SqueezeSpecial => "squeeze-special",
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FockSection {
    pub cutoffs: Vec<usize>,
    #[serde(default)]
    pub dissipation: bool,
    pub integrator_step: Option<f64>,
}

impl FockSection {
    pub fn to_config(&self, source: HamiltonianSource) -> FockConfig {
        FockConfig {
            cutoffs: self.cutoffs.clone(),
            source,
            dissipation: self.dissipation,
            integrator_step: self.integrator_step,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub axes: Vec<AxisSection>,
    pub horizon: Option<f64>,
    pub samples: Option<usize>,
    pub hp_fraction: Option<f64>,
    pub engine: Option<Engine>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AxisSection {
    pub param: AxisParam,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizeSection {
    pub omega_over_v: [f64; 2],
    pub delta_over_a: [f64; 2],
    pub horizon: Option<f64>,
}

mod defaults {
    use std::path::PathBuf;

    pub fn density() -> f64 {
        nve_squeeze::device::DIAMOND_DENSITY
    }
    pub fn youngs_modulus() -> f64 {
        nve_squeeze::device::DIAMOND_YOUNGS_MODULUS
    }
    pub fn quality_factor() -> f64 {
        1.0e6
    }
    pub fn temperature() -> f64 {
        0.01
    }
    pub fn samples() -> usize {
        400
    }
    pub fn thetas() -> Vec<f64> {
        vec![0.0]
    }
    pub fn dir() -> PathBuf {
        PathBuf::from("out")
    }
    pub fn formats() -> Vec<super::Format> {
        vec![super::Format::Csv, super::Format::Json]
    }
}

impl RunConfig {
    pub fn load(path: &std::path::Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let config: RunConfig = toml::from_str(&text)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        if config.units != "hz" {
            return Err(CliError::Config(format!(
                "{}: units must be \"hz\", got \"{}\"",
                path.display(),
                config.units
            )));
        }
        if config.run.horizon < 0.0 || !config.run.horizon.is_finite() {
            return Err(CliError::Config(format!(
                "{}: run.horizon must be >= 0, got {}",
                path.display(),
                config.run.horizon
            )));
        }
        if config.run.thetas.is_empty() {
            return Err(CliError::Config(format!(
                "{}: run.thetas must not be empty",
                path.display()
            )));
        }
        Ok(config)
    }

    pub fn params(&self) -> Result<SystemParams, CliError> {
        SystemParams::from_hz(self.system).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn beam_geometry(&self) -> Result<BeamGeometry, CliError> {
        let g = self.geometry.ok_or_else(|| {
            CliError::Config("this command needs a [geometry] section".into())
        })?;
        Ok(BeamGeometry {
            length: g.length,
            width: g.width,
            height: g.height,
            density: g.density,
            youngs_modulus: g.youngs_modulus,
            quality_factor: g.quality_factor,
            temperature: g.temperature,
        })
    }

    pub fn fock_section(&self) -> Result<&FockSection, CliError> {
        self.fock.as_ref().ok_or_else(|| {
            CliError::Config("this engine/command needs a [fock] section with cutoffs".into())
        })
    }
}
