//! JSON run configuration. Angles are given in degrees here and converted to
//! radians once, on load.

use std::path::{Path, PathBuf};

use serde::Deserialize;
use sarplan_core::kinematics::{Aabb, ArmModel};
use sarplan_core::sim::{ImageGrid, DEFAULT_N_FREQS};
use sarplan_core::trajectory::{PlanOptions, DEFAULT_ACCEL_DURATION};
use sarplan_core::{RadarSpec, ScanMode, SceneSpec, Window};

use crate::error::{CliError, CliResult};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RadarConfig {
    pub center_frequency: f64,
    pub bandwidth: f64,
    pub prf: f64,
    pub beamwidth_x_deg: f64,
    pub beamwidth_y_deg: f64,
    #[serde(default)]
    pub tx_rx_offset: f64,
}

impl RadarConfig {
    pub fn to_spec(&self) -> RadarSpec {
        RadarSpec {
            center_frequency: self.center_frequency,
            bandwidth: self.bandwidth,
            prf: self.prf,
            beamwidth_x: self.beamwidth_x_deg.to_radians(),
            beamwidth_y: self.beamwidth_y_deg.to_radians(),
            tx_rx_offset: self.tx_rx_offset,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    #[serde(default = "default_dims")]
    pub dims: [usize; 3],
    #[serde(default = "default_spacing")]
    pub spacing: f64,
    /// Defaults to the scene center.
    #[serde(default)]
    pub center: Option<[f64; 3]>,
}

fn default_dims() -> [usize; 3] {
    [200, 200, 1]
}

fn default_spacing() -> f64 {
    0.004
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            dims: default_dims(),
            spacing: default_spacing(),
            center: None,
        }
    }
}

fn default_schema() -> u32 {
    SCHEMA_VERSION
}

fn default_mode() -> ScanMode {
    ScanMode::Stripmap
}

fn default_accel() -> f64 {
    DEFAULT_ACCEL_DURATION
}

fn default_window() -> Window {
    Window::Rectangular
}

fn default_n_freqs() -> usize {
    DEFAULT_N_FREQS
}

fn default_out() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_schema")]
    pub schema_version: u32,
    pub radar: RadarConfig,
    pub scene: SceneSpec,
    #[serde(default = "default_mode")]
    pub mode: ScanMode,
    #[serde(default = "default_accel")]
    pub accel_duration: f64,
    #[serde(default)]
    pub cruise_velocity: Option<f64>,
    #[serde(default)]
    pub single_slice: bool,
    #[serde(default = "default_window")]
    pub window: Window,
    #[serde(default = "default_n_freqs")]
    pub n_freqs: usize,
    #[serde(default)]
    pub image: GridConfig,
    /// Defaults to the built-in approximate arm.
    #[serde(default)]
    pub arm: Option<ArmModel>,
    #[serde(default)]
    pub keepout: Vec<Aabb>,
    #[serde(default = "default_out")]
    pub output_dir: PathBuf,
}

/// Runs serde with path tracking so that errors name the offending field,
/// e.g. `radar.bandwidth`.
fn parse<T: serde::de::DeserializeOwned>(text: &str) -> CliResult<T> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.inner().to_string();
        // serde reports a missing field against its parent; point at the field itself
        let msg = match inner.strip_prefix("missing field `").and_then(|r| r.split('`').next()) {
            Some(field) if path == "." => format!("{field}: missing field"),
            Some(field) => format!("{path}.{field}: missing field"),
            None => format!("{path}: {inner}"),
        };
        CliError::Config(msg)
    })
}

impl RunConfig {
    pub fn from_json(text: &str) -> CliResult<Self> {
        let cfg: RunConfig = parse(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::from_json(&text)
    }

    fn validate(&self) -> CliResult<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(CliError::Config(format!(
                "schema_version: expected {SCHEMA_VERSION}, got {}",
                self.schema_version
            )));
        }
        self.radar().validate()?;
        self.scene.validate()?;
        if !(self.accel_duration > 0.0) {
            return Err(CliError::Config("accel_duration: must be positive".into()));
        }
        if let Some(v) = self.cruise_velocity {
            if !(v > 0.0) {
                return Err(CliError::Config("cruise_velocity: must be positive".into()));
            }
        }
        if self.n_freqs < 2 {
            return Err(CliError::Config("n_freqs: at least 2 are needed".into()));
        }
        self.grid().validate().map_err(|e| CliError::Config(format!("image: {e}")))?;
        Ok(())
    }

    pub fn radar(&self) -> RadarSpec {
        self.radar.to_spec()
    }

    pub fn plan_options(&self) -> PlanOptions {
        PlanOptions {
            accel_duration: self.accel_duration,
            cruise_velocity: self.cruise_velocity,
            single_slice: self.single_slice,
        }
    }

    pub fn grid(&self) -> ImageGrid {
        let center = self.image.center.unwrap_or(self.scene.center);
        ImageGrid::centered(center, self.image.dims, self.image.spacing)
    }

    pub fn arm(&self) -> ArmModel {
        self.arm.clone().unwrap_or_else(ArmModel::r17_like)
    }
}

/// Expected image properties checked by `verify`.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Expectations {
    #[serde(default = "default_schema")]
    pub schema_version: u32,
    #[serde(default)]
    pub peaks: Vec<PeakExpectation>,
    #[serde(default)]
    pub pairs: Vec<PairExpectation>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PeakExpectation {
    pub position: [f64; 3],
    /// Inclusive [min, max] bounds, meters.
    #[serde(default)]
    pub width_x: Option<[f64; 2]>,
    #[serde(default)]
    pub width_range: Option<[f64; 2]>,
    #[serde(default)]
    pub width_y: Option<[f64; 2]>,
    #[serde(default)]
    pub max_peak_sidelobe_ratio: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairExpectation {
    pub a: [f64; 3],
    pub b: [f64; 3],
    pub resolved: bool,
}

impl Expectations {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let exp: Expectations = parse(&text)?;
        if exp.schema_version != SCHEMA_VERSION {
            return Err(CliError::Config(format!(
                "schema_version: expected {SCHEMA_VERSION}, got {}",
                exp.schema_version
            )));
        }
        Ok(exp)
    }
}
