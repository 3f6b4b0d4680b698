//! TOML run configuration. Unknown keys are rejected at every level.

use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::certifier::{CertifyMode, CertifyOptions};
use crate::covmodels::{CovKind, IsotropicCovariance, LmcComponent, MatrixCovarianceModel};
use crate::designs::{make_grid_design, make_random_min_dist, Design};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelConfig,
    pub design: DesignConfig,
    #[serde(default)]
    pub certify: CertifyConfig,
    #[serde(default)]
    pub audit: AuditConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub taper: Option<TaperConfig>,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub d: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<usize>,
    #[serde(default, rename = "decay_A", skip_serializing_if = "Option::is_none")]
    pub decay_a: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub decay_tau: Option<f64>,
    pub components: Vec<ComponentConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComponentConfig {
    pub kind: CovKind,
    #[serde(default = "one")]
    pub variance: f64,
    #[serde(default = "one")]
    pub range: f64,
    /// Matérn `ν`; ignored by the other kinds.
    #[serde(default = "default_smoothness")]
    pub smoothness: f64,
    /// Rows of the `p × q` matrix `A_r`; `[[1.0]]` when omitted.
    #[serde(default = "unit_matrix")]
    pub coregionalization: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DesignKind {
    Grid,
    Random,
    File,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DesignConfig {
    pub kind: DesignKind,
    pub d: usize,
    /// Points per process (grid, random).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub counts: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spacing: Option<f64>,
    /// One shift per process (grid).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub offsets: Option<Vec<Vec<f64>>>,
    /// Minimum within-process distance (random).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    /// `[lo, hi]` per axis (random).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub region: Option<Vec<[f64; 2]>>,
    #[serde(default)]
    pub seed: u64,
    /// Design table (file).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CertifyConfig {
    #[serde(default = "default_mode")]
    pub mode: CertifyMode,
    /// Nodes per axis for spectral floors; 0 picks by dimension.
    #[serde(default)]
    pub spectral_resolution: usize,
    #[serde(default = "one")]
    pub support_radius: f64,
    #[serde(default = "default_extra_rungs")]
    pub extra_rungs: usize,
    #[serde(default = "default_max_doublings")]
    pub max_doublings: usize,
    /// Largest `N` for which `λ₁(Σ)` is computed alongside the bound.
    #[serde(default = "default_eigen_cap")]
    pub eigen_cap: usize,
}

impl Default for CertifyConfig {
    fn default() -> Self {
        Self {
            mode: default_mode(),
            spectral_resolution: 0,
            support_radius: 1.0,
            extra_rungs: default_extra_rungs(),
            max_doublings: default_max_doublings(),
            eigen_cap: default_eigen_cap(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AuditConfig {
    #[serde(default = "default_decay_samples")]
    pub decay_samples: usize,
    /// Half-width of the frequency box for the positivity audit.
    #[serde(default = "default_spectral_half_width")]
    pub spectral_half_width: f64,
    /// Scalar lags for the inversion audit (d = 1 only).
    #[serde(default = "default_inversion_lags")]
    pub inversion_lags: Vec<f64>,
    #[serde(default = "default_inversion_tol")]
    pub inversion_tol: f64,
}

impl Default for AuditConfig {
    fn default() -> Self {
        Self {
            decay_samples: default_decay_samples(),
            spectral_half_width: default_spectral_half_width(),
            inversion_lags: default_inversion_lags(),
            inversion_tol: default_inversion_tol(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TaperKind {
    Wendland,
    Identity,
    Ones,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaperConfig {
    pub kind: TaperKind,
    /// Support radius of the Wendland taper.
    #[serde(default = "one")]
    pub range: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_out_dir")]
    pub dir: PathBuf,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { dir: default_out_dir() }
    }
}

fn one() -> f64 {
    1.0
}
fn default_smoothness() -> f64 {
    0.5
}
fn unit_matrix() -> Vec<Vec<f64>> {
    vec![vec![1.0]]
}
fn default_mode() -> CertifyMode {
    CertifyMode::DesignCertified
}
fn default_extra_rungs() -> usize {
    4
}
fn default_max_doublings() -> usize {
    40
}
fn default_eigen_cap() -> usize {
    2000
}
fn default_decay_samples() -> usize {
    2000
}
fn default_spectral_half_width() -> f64 {
    10.0
}
fn default_inversion_lags() -> Vec<f64> {
    vec![0.0, 0.5, 1.0, 2.0, 5.0]
}
fn default_inversion_tol() -> f64 {
    1e-6
}
fn default_out_dir() -> PathBuf {
    PathBuf::from("out")
}

/// Reads, parses and validates a config file. A relative design `path` is
/// resolved against the config file's directory.
pub fn parse_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    let mut cfg = parse_config_str(&text)?;
    if let Some(p) = cfg.design.path.as_mut() {
        if p.is_relative() {
            if let Some(dir) = path.parent() {
                *p = dir.join(&*p);
            }
        }
    }
    Ok(cfg)
}

pub fn parse_config_str(text: &str) -> Result<RunConfig> {
    let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
    cfg.validate()?;
    Ok(cfg)
}

impl RunConfig {
    /// The config with every default filled in, as TOML.
    pub fn echo(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(format!("cannot serialize config: {e}")))
    }

    /// `p` implied by the components (rows of the coregionalization matrices).
    pub fn model_p(&self) -> usize {
        self.model.components.first().map_or(0, |c| c.coregionalization.len())
    }

    fn validate(&self) -> Result<()> {
        let m = &self.model;
        if m.components.is_empty() {
            return Err(Error::Config("model.components must list at least one component".into()));
        }
        let p = self.model_p();
        for (r, c) in m.components.iter().enumerate() {
            if c.coregionalization.len() != p {
                return Err(Error::Config(format!(
                    "model.components[{r}].coregionalization has {} rows, expected p = {p}",
                    c.coregionalization.len()
                )));
            }
            let q = c.coregionalization.first().map_or(0, Vec::len);
            if q == 0 || c.coregionalization.iter().any(|row| row.len() != q) {
                return Err(Error::Config(format!(
                    "model.components[{r}].coregionalization must be a non-empty rectangular matrix"
                )));
            }
        }
        if let Some(pp) = m.p {
            if pp != p {
                return Err(Error::Config(format!("model.p = {pp} but components define p = {p}")));
            }
        }
        if m.d != self.design.d {
            return Err(Error::Config(format!(
                "dimension mismatch: model.d = {} but design.d = {}",
                m.d, self.design.d
            )));
        }
        let dsg = &self.design;
        match dsg.kind {
            DesignKind::Grid | DesignKind::Random => {
                if dsg.counts.len() != p {
                    return Err(Error::Config(format!(
                        "design.counts lists {} processes, model has p = {p}",
                        dsg.counts.len()
                    )));
                }
            }
            DesignKind::File => {
                if dsg.path.is_none() {
                    return Err(Error::Config("design.kind = \"file\" requires design.path".into()));
                }
            }
        }
        match dsg.kind {
            DesignKind::Grid if dsg.spacing.is_none() => {
                return Err(Error::Config("design.kind = \"grid\" requires design.spacing".into()))
            }
            DesignKind::Random if dsg.delta.is_none() || dsg.region.is_none() => {
                return Err(Error::Config("design.kind = \"random\" requires design.delta and design.region".into()))
            }
            _ => {}
        }
        if let Some(offs) = &dsg.offsets {
            if offs.len() != p || offs.iter().any(|o| o.len() != dsg.d) {
                return Err(Error::Config(format!(
                    "design.offsets needs {p} entries of length {}",
                    dsg.d
                )));
            }
        }
        if let Some(region) = &dsg.region {
            if region.len() != dsg.d {
                return Err(Error::Config(format!("design.region needs {} intervals", dsg.d)));
            }
        }
        if self.certify.support_radius <= 0.0 {
            return Err(Error::Config("certify.support_radius must be > 0".into()));
        }
        if self.certify.spectral_resolution != 0 && self.certify.spectral_resolution < 3 {
            return Err(Error::Config("certify.spectral_resolution must be ≥ 3 (or 0 for the default)".into()));
        }
        Ok(())
    }

    pub fn build_model(&self) -> Result<MatrixCovarianceModel> {
        let comps = self
            .model
            .components
            .iter()
            .map(|c| {
                let latent = IsotropicCovariance::new(c.kind, c.variance, c.range, c.smoothness)?;
                let rows = c.coregionalization.len();
                let cols = c.coregionalization[0].len();
                let flat: Vec<f64> = c.coregionalization.iter().flatten().copied().collect();
                LmcComponent::new(DMatrix::from_row_slice(rows, cols, &flat), latent)
            })
            .collect::<Result<Vec<_>>>()?;
        let model = MatrixCovarianceModel::new(comps, self.model.d)?;
        match (self.model.decay_a, self.model.decay_tau) {
            (None, None) => Ok(model),
            (a, tau) => {
                let a = a.unwrap_or(model.decay_a());
                let tau = tau.unwrap_or(model.decay_tau());
                model.with_decay(a, tau)
            }
        }
    }

    /// The design, optionally with the per-process counts replaced.
    pub fn build_design(&self, counts: Option<&[usize]>) -> Result<Design> {
        let dsg = &self.design;
        let counts = counts.unwrap_or(&dsg.counts);
        let design = match dsg.kind {
            DesignKind::Grid => make_grid_design(dsg.d, counts, dsg.spacing.unwrap_or(1.0), dsg.offsets.as_deref())?,
            DesignKind::Random => {
                let region: Vec<(f64, f64)> = dsg.region.iter().flatten().map(|r| (r[0], r[1])).collect();
                make_random_min_dist(dsg.d, counts, dsg.delta.unwrap_or(1.0), &region, dsg.seed)?
            }
            DesignKind::File => {
                let path = dsg.path.as_ref().expect("validated");
                let text = std::fs::read_to_string(path)
                    .map_err(|e| Error::Config(format!("cannot read design table {}: {e}", path.display())))?;
                Design::from_table(&text)?
            }
        };
        if design.d() != self.model.d || design.p() != self.model_p() {
            return Err(Error::Config(format!(
                "design has p = {}, d = {}; model has p = {}, d = {}",
                design.p(),
                design.d(),
                self.model_p(),
                self.model.d
            )));
        }
        Ok(design)
    }

    pub fn certify_options(&self) -> CertifyOptions {
        let c = &self.certify;
        CertifyOptions {
            mode: c.mode,
            support_radius: c.support_radius,
            spectral_resolution: (c.spectral_resolution != 0).then_some(c.spectral_resolution),
            extra_rungs: c.extra_rungs,
            max_doublings: c.max_doublings,
            decay_samples: self.audit.decay_samples,
        }
    }
}
