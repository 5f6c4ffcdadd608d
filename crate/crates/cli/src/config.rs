//! JSON design files.
//!
//! ```json
//! {
//!   "name": "varma11",
//!   "dgp": {
//!     "A": [[0.7, 0.1], [0.4, 0.6]],
//!     "Gamma": [[1.0, 0.0], [-0.5, 1.0]],
//!     "ma": {"list": [[[1.0, 0.0], [0.0, 1.0]]]},
//!     "mis_scale": {"power": {"factor": 1.0, "zeta": 0.5}},
//!     "innovations": "gaussian"
//!   },
//!   "T": 200, "n_reps": 200, "p": 10, "q": 8,
//!   "target": {"response": 2, "shock": 1, "h_max": 20},
//!   "bootstrap": {"B1": 100, "B2": 50, "alpha": 0.1},
//!   "seed": 1
//! }
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use tlp_core::bootstrap::BlockLength;
use tlp_core::dgp::{DgpSpec, InnovationLaw, MisScale, DEFAULT_BURN_IN};
use tlp_core::{BootstrapConfig, Centering, ExperimentDesign, Matrix, Method, ShockTarget};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DesignFile {
    pub name: String,
    pub dgp: DgpFile,
    #[serde(rename = "T")]
    pub t: usize,
    pub n_reps: usize,
    pub p: usize,
    pub q: usize,
    pub target: ShockTarget,
    #[serde(default = "all_methods")]
    pub methods: Vec<Method>,
    pub bootstrap: BootstrapFile,
    pub seed: u64,
    /// CSV panel (header row, one column per variable) used by `estimate`
    /// and `msdb` instead of a simulated panel. Relative to the config file.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub data: Option<PathBuf>,
}

fn all_methods() -> Vec<Method> {
    Method::ALL.to_vec()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DgpFile {
    #[serde(rename = "A")]
    pub a: Vec<Vec<f64>>,
    #[serde(rename = "Gamma")]
    pub gamma: Vec<Vec<f64>>,
    #[serde(default)]
    pub ma: MaFile,
    pub mis_scale: MisScaleFile,
    #[serde(default)]
    pub innovations: InnovationsFile,
    #[serde(default = "default_burn_in")]
    pub burn_in: usize,
}

fn default_burn_in() -> usize {
    DEFAULT_BURN_IN
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum MaFile {
    /// Explicit `alpha_1 .. alpha_L`.
    List(Vec<Vec<Vec<f64>>>),
    /// `alpha_l = decay^l * base` for `l = 1..=order`.
    Geometric {
        base: Vec<Vec<f64>>,
        decay: f64,
        order: usize,
    },
}

impl Default for MaFile {
    fn default() -> Self {
        MaFile::List(Vec::new())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum MisScaleFile {
    Fixed(f64),
    /// `factor * T^(-zeta)`.
    Power {
        factor: f64,
        zeta: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum InnovationsFile {
    #[default]
    Gaussian,
    Garch {
        omega: f64,
        alpha: f64,
        beta: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BootstrapFile {
    #[serde(rename = "B1")]
    pub b1: usize,
    #[serde(rename = "B2")]
    pub b2: usize,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_centering")]
    pub centering: Centering,
    /// Fixed block length; the cube-root rule applies when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub block_length: Option<usize>,
    #[serde(default)]
    pub per_replication_weights: bool,
}

fn default_alpha() -> f64 {
    0.1
}

fn default_centering() -> Centering {
    Centering::BootstrapMean
}

fn matrix(name: &str, rows: &[Vec<f64>]) -> Result<Matrix<f64>, CliError> {
    Matrix::from_rows(rows).map_err(|_| CliError::Validation(format!("{name} must be a rectangular matrix")))
}

impl DgpFile {
    pub fn to_spec(&self) -> Result<DgpSpec<f64>, CliError> {
        let a = matrix("A", &self.a)?;
        let gamma = matrix("Gamma", &self.gamma)?;
        let ma_coeffs = match &self.ma {
            MaFile::List(list) => list.iter().map(|m| matrix("ma", m)).collect::<Result<_, _>>()?,
            MaFile::Geometric { base, decay, order } => {
                let base = matrix("ma.geometric.base", base)?;
                (1..=*order).map(|l| base.scale(decay.powi(l as i32))).collect()
            }
        };
        let mis_scale = match self.mis_scale {
            MisScaleFile::Fixed(eta) => MisScale::Fixed(eta),
            MisScaleFile::Power { factor, zeta } => MisScale::Power { factor, zeta },
        };
        let innovations = match self.innovations {
            InnovationsFile::Gaussian => InnovationLaw::GaussianIid,
            InnovationsFile::Garch { omega, alpha, beta } => InnovationLaw::Garch11 { omega, alpha, beta },
        };
        DgpSpec::new(a, gamma, ma_coeffs, mis_scale, innovations, self.burn_in).map_err(validation)
    }
}

fn validation(e: tlp_core::Error) -> CliError {
    match e {
        tlp_core::Error::InvalidSpec(msg) => CliError::Validation(msg),
        other => CliError::Validation(other.to_string()),
    }
}

impl DesignFile {
    pub fn bootstrap_config(&self) -> BootstrapConfig {
        let b = &self.bootstrap;
        BootstrapConfig {
            b1: b.b1,
            b2: b.b2,
            block_length: b.block_length.map_or(BlockLength::CubeRoot, BlockLength::Fixed),
            alpha: b.alpha,
            centering: b.centering,
            p: self.p,
            q: self.q,
            master_seed: self.seed,
            per_replication_weights: b.per_replication_weights,
        }
    }

    /// Validated experiment design with every invariant checked.
    pub fn to_design(&self) -> Result<ExperimentDesign<f64>, CliError> {
        let design = ExperimentDesign {
            name: self.name.clone(),
            dgp: self.dgp.to_spec()?,
            t_len: self.t,
            n_reps: self.n_reps,
            bootstrap: self.bootstrap_config(),
            target: self.target,
            methods: self.methods.clone(),
            master_seed: self.seed,
        };
        design.validate().map_err(validation)?;
        Ok(design)
    }
}

/// Parses a design file without validating it.
pub fn parse_design_str(text: &str, origin: &Path) -> Result<DesignFile, CliError> {
    serde_json::from_str(text).map_err(|e| CliError::Parse {
        path: origin.to_path_buf(),
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })
}

/// Reads, parses and validates a design file. A relative `data` path is
/// resolved against the file's directory.
pub fn parse_config(path: &Path) -> Result<(DesignFile, ExperimentDesign<f64>), CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let mut file = parse_design_str(&text, path)?;
    if let Some(data) = &file.data {
        if data.is_relative() {
            let base = path.parent().unwrap_or_else(|| Path::new("."));
            file.data = Some(base.join(data));
        }
    }
    let design = file.to_design()?;
    Ok((file, design))
}
