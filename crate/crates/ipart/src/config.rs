//! JSON configuration schema for the library's runnable surfaces.  All
//! structures reject unknown keys, so a typo fails validation instead of
//! silently changing the run.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::likelihood::{CsvFormat, Dataset, GaussianModel, Hyperparams};
use crate::partition::Partition;
use crate::priors::{AlphaModel, AlphaRegime, PriorSpec};
use crate::seed::{domain, stream_rng};
use crate::synth::{merge_partition, split_partition, SyntheticSpec};
use crate::temporal::Dependence;

/// A scalar broadcast to every slot, or one value per slot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ScalarOrVec {
    Scalar(f64),
    Vec(Vec<f64>),
}

impl ScalarOrVec {
    pub fn broadcast(&self, n: usize, what: &str) -> Result<Vec<f64>> {
        match self {
            ScalarOrVec::Scalar(v) => Ok(vec![*v; n]),
            ScalarOrVec::Vec(vs) => {
                if vs.len() != n {
                    return Err(Error::Config(format!(
                        "{what}: expected {n} values, got {}",
                        vs.len()
                    )));
                }
                Ok(vs.clone())
            }
        }
    }
}

/// Adherence-probability block: regime plus either fixed values or beta
/// hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlphaConfig {
    pub regime: AlphaRegime,
    #[serde(default)]
    pub fixed: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<ScalarOrVec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<ScalarOrVec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<ScalarOrVec>,
}

impl AlphaConfig {
    pub fn fixed_global(alpha: f64) -> Self {
        AlphaConfig {
            regime: AlphaRegime::Global,
            fixed: true,
            values: Some(ScalarOrVec::Scalar(alpha)),
            a: None,
            b: None,
        }
    }

    pub fn build(&self, t_len: usize, m: usize) -> Result<AlphaModel> {
        let n = self.regime.n_blocks(t_len, m);
        if self.fixed {
            let values = self
                .values
                .as_ref()
                .ok_or_else(|| Error::Config("fixed alpha needs \"values\"".into()))?
                .broadcast(n, "alpha values")?;
            AlphaModel::fixed(self.regime, values, t_len, m)
        } else {
            let a = self
                .a
                .as_ref()
                .ok_or_else(|| Error::Config("random alpha needs \"a\"".into()))?
                .broadcast(n, "alpha a")?;
            let b = self
                .b
                .as_ref()
                .ok_or_else(|| Error::Config("random alpha needs \"b\"".into()))?
                .broadcast(n, "alpha b")?;
            AlphaModel::beta(self.regime, a, b, t_len, m)
        }
    }
}

/// An initial partition: explicit labels, or one of the derived forms
/// (`"true"`, `"merge"`, `"split"`) available with synthetic data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Rho0Config {
    Labels(Vec<i64>),
    Named(String),
}

impl Rho0Config {
    pub fn resolve(&self, rho_true: Option<&Partition>, seed: u64) -> Result<Partition> {
        match self {
            Rho0Config::Labels(labels) => Partition::from_labels(labels),
            Rho0Config::Named(name) => {
                let truth = rho_true.ok_or_else(|| {
                    Error::Config(format!(
                        "initial partition {name:?} requires synthetic data"
                    ))
                })?;
                match name.as_str() {
                    "true" => Ok(truth.clone()),
                    "merge" => Ok(merge_partition(truth)),
                    "split" => {
                        let mut rng = stream_rng(seed, domain::DATA + 1);
                        Ok(split_partition(truth, &mut rng))
                    }
                    other => Err(Error::Config(format!(
                        "unknown initial partition {other:?}; use labels or true/merge/split"
                    ))),
                }
            }
        }
    }
}

fn default_mass() -> f64 {
    1.0
}

/// The prior selector, e.g.
/// `{"type":"icrp","rho0":[1,1,2],"alpha":{"regime":"unit-local","a":[1,1,9],"b":[9,9,1],"fixed":false},"M":1.0}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum PriorConfig {
    Crp {
        #[serde(rename = "M", default = "default_mass")]
        mass: f64,
    },
    Icrp {
        rho0: Rho0Config,
        alpha: AlphaConfig,
        #[serde(rename = "M", default = "default_mass")]
        mass: f64,
    },
    Cpp {
        rho0: Rho0Config,
        psi: f64,
        #[serde(rename = "M", default = "default_mass")]
        mass: f64,
    },
    Lsp {
        rho0: Rho0Config,
        nu: f64,
    },
}

impl PriorConfig {
    pub fn build(
        &self,
        m: usize,
        t_len: usize,
        rho_true: Option<&Partition>,
        seed: u64,
    ) -> Result<PriorSpec> {
        let spec = match self {
            PriorConfig::Crp { mass } => PriorSpec::Crp { mass: *mass },
            PriorConfig::Icrp { rho0, alpha, mass } => PriorSpec::Icrp {
                rho0: rho0.resolve(rho_true, seed)?,
                alpha: alpha.build(t_len, m)?,
                mass: *mass,
            },
            PriorConfig::Cpp { rho0, psi, mass } => PriorSpec::Cpp {
                rho0: rho0.resolve(rho_true, seed)?,
                psi: *psi,
                mass: *mass,
            },
            PriorConfig::Lsp { rho0, nu } => PriorSpec::Lsp {
                rho0: rho0.resolve(rho_true, seed)?,
                nu: *nu,
            },
        };
        spec.validate(m)?;
        Ok(spec)
    }
}

/// Where the observations come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum DataConfig {
    Csv {
        path: String,
        format: CsvFormat,
    },
    Synthetic {
        #[serde(flatten)]
        spec: SyntheticSpec,
    },
}

impl DataConfig {
    /// Loads or generates the data; synthetic data also yields its
    /// generating partition.
    pub fn load(&self, seed: u64) -> Result<(Dataset, Option<Partition>)> {
        match self {
            DataConfig::Csv { path, format } => {
                let d = Dataset::from_csv_path(std::path::Path::new(path), *format)?;
                Ok((d, None))
            }
            DataConfig::Synthetic { spec } => {
                let mut rng = stream_rng(seed, domain::DATA);
                let (d, truth) = spec.generate(&mut rng)?;
                Ok((d, Some(truth)))
            }
        }
    }
}

/// Gaussian-hierarchy settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LikelihoodConfig {
    pub a_sigma: Option<f64>,
    pub a_tau: f64,
    pub a_lambda: f64,
    pub m0: f64,
    pub s0_sq: f64,
    pub known_sigma: Option<f64>,
    /// Fixed (theta, tau): degenerates the mean hierarchy.
    pub fixed_theta: Option<(f64, f64)>,
}

impl Default for LikelihoodConfig {
    fn default() -> Self {
        let hp = Hyperparams::default();
        LikelihoodConfig {
            a_sigma: hp.a_sigma,
            a_tau: hp.a_tau,
            a_lambda: hp.a_lambda,
            m0: hp.m0,
            s0_sq: hp.s0_sq,
            known_sigma: None,
            fixed_theta: None,
        }
    }
}

impl LikelihoodConfig {
    pub fn build(&self) -> Result<GaussianModel> {
        let model = GaussianModel {
            hp: Hyperparams {
                a_sigma: self.a_sigma,
                a_tau: self.a_tau,
                a_lambda: self.a_lambda,
                m0: self.m0,
                s0_sq: self.s0_sq,
            },
            known_sigma: self.known_sigma,
            fixed_theta: self.fixed_theta,
        };
        model.validate()?;
        Ok(model)
    }
}

/// `enumerate`: exact prior table over all partitions of [m], one column per
/// grid value substituted into the prior's shrinkage slot (global adherence
/// for the informed CRP, penalty for the CPP, scale for the LSP).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnumerateConfig {
    pub m: usize,
    pub prior: PriorConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<Vec<ScalarOrVec>>,
    #[serde(default)]
    pub seed: u64,
}

/// `prior-sim`: ensemble simulation of the sequence prior.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PriorSimConfig {
    pub m: usize,
    pub t_len: usize,
    pub dependence: Dependence,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho0: Option<Vec<i64>>,
    pub alpha: AlphaConfig,
    #[serde(rename = "M", default = "default_mass")]
    pub mass: f64,
    pub replicates: usize,
    #[serde(default)]
    pub seed: u64,
}

fn default_point_estimate() -> bool {
    true
}

fn default_restarts() -> usize {
    16
}

/// `fit`: posterior sampling plus summaries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitConfig {
    pub data: DataConfig,
    pub prior: PriorConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dependence: Option<Dependence>,
    #[serde(default)]
    pub likelihood: LikelihoodConfig,
    pub mcmc: crate::mcmc::McmcConfig,
    #[serde(default = "default_point_estimate")]
    pub point_estimate: bool,
    #[serde(default = "default_restarts")]
    pub restarts: usize,
}

/// One prior family with the grid of shrinkage values to sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComparePrior {
    pub family: CompareFamily,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CompareFamily {
    Icrp,
    Cpp,
    Lsp,
}

/// `compare-priors`: replicated synthetic fits across prior families and
/// shrinkage values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompareConfig {
    pub data: SyntheticSpec,
    pub replicates: usize,
    pub rho0: Rho0Config,
    pub priors: Vec<ComparePrior>,
    #[serde(rename = "M", default = "default_mass")]
    pub mass: f64,
    #[serde(default)]
    pub likelihood: LikelihoodConfig,
    pub mcmc: crate::mcmc::McmcConfig,
}
