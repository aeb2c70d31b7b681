//! Run configuration: one JSON document, overridden by command line flags.

use std::path::{Path, PathBuf};

use atomtf::drop::SplitFamily;
use atomtf::tfdw::FlowConfig;
use atomtf::{ModelConstants, RadialGrid};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

/// Overrides of the functional's coefficients; unset fields keep the
/// Hartree-unit defaults.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstantsConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c_tf: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c_w: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c_d: Option<f64>,
}

/// Replaces the command's default grid when all three fields are set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub r_min: f64,
    pub r_max: f64,
    pub n: usize,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitChoice {
    Equal,
    #[default]
    Scanned,
}

impl From<SplitChoice> for SplitFamily {
    fn from(s: SplitChoice) -> Self {
        match s {
            SplitChoice::Equal => SplitFamily::Equal,
            SplitChoice::Scanned => SplitFamily::Scanned,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub constants: ConstantsConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridConfig>,
    pub flow: FlowConfig,
    /// Nuclear charges. Single-atom commands use exactly one.
    #[serde(rename = "Z")]
    pub z: Vec<f64>,
    /// Electron numbers; empty means `N = Z`.
    #[serde(rename = "N")]
    pub n: Vec<f64>,
    pub kappa: Vec<f64>,
    /// Radii for the interior-mass identity and the harmonic majorant.
    pub r: Vec<f64>,
    pub scan_step: f64,
    /// Upper end of the screened-potential fit window.
    pub d_fit: f64,
    pub split_family: SplitChoice,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    pub format: Format,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub jobs: Option<usize>,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            constants: ConstantsConfig::default(),
            grid: None,
            flow: FlowConfig::default(),
            z: Vec::new(),
            n: Vec::new(),
            kappa: Vec::new(),
            r: Vec::new(),
            scan_step: 0.25,
            d_fit: atomtf::analysis::D_FIT,
            split_family: SplitChoice::default(),
            out: None,
            format: Format::default(),
            jobs: None,
            seed: 0,
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Config(format!("config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.flow.validate().map_err(|e| CliError::Config(e.to_string()))?;
        if !(self.scan_step > 0.0) {
            return Err(CliError::Config("scan_step must be positive".into()));
        }
        if !(self.d_fit > 0.0) {
            return Err(CliError::Config("d_fit must be positive".into()));
        }
        if matches!(self.jobs, Some(0)) {
            return Err(CliError::Config("jobs must be at least 1".into()));
        }
        Ok(())
    }

    pub fn constants(&self, z: f64, n: f64) -> Result<ModelConstants, CliError> {
        let d = ModelConstants::atomic(z, n)?;
        let c = &self.constants;
        Ok(d.with_coefficients(c.c_tf.unwrap_or(d.c_tf), c.c_w.unwrap_or(d.c_w), c.c_d.unwrap_or(d.c_d))?)
    }

    /// The configured grid, or `default` when none is set.
    pub fn grid_or(
        &self,
        default: impl FnOnce() -> atomtf::Result<std::sync::Arc<RadialGrid>>,
    ) -> Result<std::sync::Arc<RadialGrid>, CliError> {
        Ok(match &self.grid {
            Some(g) => RadialGrid::new(g.r_min, g.r_max, g.n)?,
            None => default()?,
        })
    }

    /// The single `(Z, N)` pair of a one-atom command.
    pub fn single_atom(&self) -> Result<(f64, f64), CliError> {
        let z = match self.z.as_slice() {
            [z] => *z,
            [] => return Err(CliError::Config("this command needs --Z".into())),
            _ => return Err(CliError::Config("this command takes a single Z".into())),
        };
        let n = match self.n.as_slice() {
            [] => z,
            [n] => *n,
            _ => return Err(CliError::Config("this command takes a single N".into())),
        };
        Ok((z, n))
    }
}
