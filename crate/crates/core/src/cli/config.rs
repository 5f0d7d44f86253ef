//! JSON configuration documents for the `tclass` commands.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::algorithms::{Driver, Schedule, Sequence, StoppingRule};
use crate::convex::ConvexSet;
use crate::crosscheck::Suite;
use crate::hilbert::Vector;
use crate::problems::{catalog, AffineSpec, InstanceSpec};

use super::CliError;

/// An instance given inline, by file (relative to the config file), or by
/// catalog name.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ProblemRef {
    File { file: PathBuf },
    Catalog { catalog: String },
    Inline(Box<InstanceSpec>),
}

pub const CATALOG: &[&str] = &[
    "rotation-scaling-family",
    "axis-projection",
    "translation",
    "skew-vi",
    "composed-skew-vi",
];

impl ProblemRef {
    pub fn resolve(&self, base: &Path) -> Result<InstanceSpec, CliError> {
        match self {
            Self::Inline(spec) => Ok((**spec).clone()),
            Self::File { file } => {
                let path = base.join(file);
                let text = std::fs::read_to_string(&path)
                    .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
                serde_json::from_str(&text)
                    .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
            }
            Self::Catalog { catalog: name } => match name.as_str() {
                "rotation-scaling-family" => Ok(catalog::rotation_scaling_family()),
                "axis-projection" => Ok(catalog::axis_projection()),
                "translation" => Ok(catalog::translation()),
                "skew-vi" => Ok(catalog::skew_vi()),
                "composed-skew-vi" => Ok(catalog::composed_skew_vi(0.3)),
                other => Err(CliError::Config(format!(
                    "unknown catalog instance {other:?}; known: {}",
                    CATALOG.join(", ")
                ))),
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    Spc,
    Extragradient,
    ExtragradientComposed,
}

impl Variant {
    pub fn name(self) -> &'static str {
        match self {
            Self::Spc => "spc",
            Self::Extragradient => "extragradient",
            Self::ExtragradientComposed => "extragradient-composed",
        }
    }
}

fn default_driver() -> Driver {
    Driver::Haugazeau
}

fn default_trace() -> PathBuf {
    PathBuf::from("trace.csv")
}

fn default_sidecar() -> PathBuf {
    PathBuf::from("run.json")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub problem: ProblemRef,
    #[serde(default = "default_driver")]
    pub driver: Driver,
    /// When given, must match the instance kind.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub variant: Option<Variant>,
    pub x0: Vector,

    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<Sequence>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<Sequence>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<Vec<f64>>>,

    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol_step: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol_residual: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_iter: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub divergence_radius: Option<f64>,

    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_trace")]
    pub trace: PathBuf,
    #[serde(default = "default_sidecar")]
    pub sidecar: PathBuf,
}

impl RunConfig {
    pub fn schedule(&self) -> Schedule {
        let mut s = Schedule {
            alpha: self.alpha.clone(),
            lambda: self.lambda.clone(),
            weights: self.weights.clone(),
            ..Schedule::default()
        };
        if let Some(e) = self.epsilon {
            s.epsilon = e;
        }
        s
    }

    pub fn stopping(&self) -> StoppingRule {
        let d = StoppingRule::default();
        StoppingRule {
            tol_step: self.tol_step.unwrap_or(d.tol_step),
            tol_residual: self.tol_residual.unwrap_or(d.tol_residual),
            max_iter: self.max_iter.unwrap_or(d.max_iter),
            divergence_radius: self.divergence_radius.unwrap_or(d.divergence_radius),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Check {
    /// `operator` is a `kappa`-strict pseudocontraction.
    Spc,
    /// `operator` is monotone and `k`-Lipschitz.
    Monotone,
    Nonexpansive,
    /// `operator` is quasi-nonexpansive against every point of `points`.
    FQuasiNonexpansive,
    /// `operator` is in the T-class with fixed points `points`.
    Tclass,
    /// `u` solves VI(`set`, `operator`).
    ViSolution,
}

fn default_samples() -> usize {
    10_000
}

fn default_radius() -> f64 {
    5.0
}

fn default_certify_out() -> PathBuf {
    PathBuf::from("certify.json")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CertifyConfig {
    pub check: Check,
    pub operator: AffineSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa: Option<f64>,
    /// Lipschitz constant; defaults to the spectral norm of the matrix.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<f64>,
    #[serde(default)]
    pub points: Vec<Vector>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub set: Option<ConvexSet>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub u: Option<Vector>,
    #[serde(default = "default_samples")]
    pub n_samples: usize,
    #[serde(default = "default_radius")]
    pub radius: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_certify_out")]
    pub report: PathBuf,
}

fn default_dims() -> Vec<usize> {
    vec![2, 3, 4, 5, 6]
}

fn default_probes() -> usize {
    1000
}

fn default_resolution() -> usize {
    201
}

fn default_crosscheck_out() -> PathBuf {
    PathBuf::from("crosscheck.json")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CrosscheckConfig {
    pub suite: Suite,
    /// Defaults: 10^4 triples, 10^2 CQ steps; ignored by `vi-oracle`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_cases: Option<usize>,
    #[serde(default = "default_probes")]
    pub n_probes: usize,
    #[serde(default = "default_dims")]
    pub dims: Vec<usize>,
    #[serde(default = "default_resolution")]
    pub resolution: usize,
    /// Defaults: 1e-9, or 2 grid cells for `vi-oracle`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_crosscheck_out")]
    pub summary: PathBuf,
}

fn default_oracle_out() -> PathBuf {
    PathBuf::from("oracle.json")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleConfig {
    pub set: ConvexSet,
    pub operator: AffineSpec,
    #[serde(default = "default_resolution")]
    pub resolution: usize,
    #[serde(default = "default_oracle_out")]
    pub report: PathBuf,
}
