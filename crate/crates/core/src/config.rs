//! Run configuration: one strict JSON document per run.

use serde::{Deserialize, Serialize};
use std::path::Path;

use crate::bound::KernelSettings;
use crate::error::{config_err, Error, Result};
use crate::oracle::FdSettings;
use crate::potential::{Grid2D, PotentialSpec};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    #[serde(default = "default_grid_n")]
    pub n: usize,
    /// `None`: the potential's default box.
    #[serde(rename = "L", default)]
    pub half_width: Option<f64>,
}

fn default_grid_n() -> usize {
    64
}

impl Default for GridConfig {
    fn default() -> Self {
        Self { n: default_grid_n(), half_width: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleConfig {
    /// `None`: 1.5 × the kernel grid half-width.
    #[serde(rename = "L_box", default)]
    pub half_width: Option<f64>,
    #[serde(rename = "n_box", default = "default_n_box")]
    pub n: usize,
    /// Couplings for trajectories (multiplying the potential's own coupling).
    #[serde(default)]
    pub g_list: Vec<f64>,
    #[serde(rename = "tol_E", default)]
    pub tol_e: Option<f64>,
    #[serde(default = "default_m_max")]
    pub m_max: u32,
}

fn default_n_box() -> usize {
    128
}

fn default_m_max() -> u32 {
    64
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self { half_width: None, n: default_n_box(), g_list: Vec::new(), tol_e: None, m_max: default_m_max() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanConfig {
    #[serde(default = "default_k0_list")]
    pub k0_list: Vec<f64>,
    #[serde(default = "default_g_list")]
    pub g_list: Vec<f64>,
}

fn default_k0_list() -> Vec<f64> {
    vec![0.1, 0.5, 1.0, 2.0, 10.0]
}

fn default_g_list() -> Vec<f64> {
    vec![0.1, 1.0, 10.0, 100.0]
}

impl Default for ScanConfig {
    fn default() -> Self {
        Self { k0_list: default_k0_list(), g_list: default_g_list() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub potential: PotentialSpec,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub kernel: KernelSettings,
    /// Present: `bound compute` also records a converged oracle count.
    #[serde(default)]
    pub oracle: Option<OracleConfig>,
    #[serde(default)]
    pub scan: ScanConfig,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(format!("invalid config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn kernel_grid(&self) -> Result<Grid2D> {
        let l = match self.grid.half_width {
            Some(l) => l,
            None => self.potential.default_half_width()?,
        };
        Grid2D::new(l, self.grid.n)
    }

    pub fn oracle_config(&self) -> OracleConfig {
        self.oracle.clone().unwrap_or_default()
    }

    pub fn fd_settings(&self, eigenvalues: bool) -> Result<FdSettings> {
        let o = self.oracle_config();
        let l = match o.half_width {
            Some(l) => l,
            None => 1.5 * self.kernel_grid()?.half_width(),
        };
        if !(l.is_finite() && l > 0.0) {
            return config_err(format!("L_box must be > 0, got {l}"));
        }
        Ok(FdSettings { half_width: l, n: o.n, tol_e: o.tol_e, eigenvalues })
    }

    /// SHA-256 of the canonical JSON serialization, lowercase hex.
    pub fn hash(&self) -> String {
        use sha2::{Digest, Sha256};
        let canonical = serde_json::to_vec(self).expect("config serializes");
        Sha256::digest(&canonical).iter().map(|b| format!("{b:02x}")).collect()
    }
}
