//! Partition priors: the plain CRP, the informed CRP, and the two rival
//! informed priors used for comparison (CPP and LSP).

mod alpha;
mod cpp;
mod crp;
mod icrp;
mod lsp;

pub use alpha::{AlphaModel, AlphaRegime};
pub use cpp::{cpp_exact, cpp_log_prob, CppExact};
pub use crp::{crp_log_eppf, crp_sample};
pub use icrp::{
    gamma_log_prob, icrp_exact_log_prob, icrp_sample, GAMMA_ENUMERATION_CAP,
};
pub use lsp::{lsp_conditional, lsp_log_prob};

pub(crate) use crp::CrpTables;
pub(crate) use icrp::{restricted_log_eppf, sample_given_gamma};
pub(crate) use lsp::lsp_log_prob_canonical as lsp_log_prob_canonical_labels;

use crate::error::{Error, Result};
use crate::partition::{enumerate_partitions, Partition};

/// One of the four partition priors, fully parameterized for a single
/// partition of m units.
#[derive(Debug, Clone)]
pub enum PriorSpec {
    Crp {
        mass: f64,
    },
    Icrp {
        rho0: Partition,
        alpha: AlphaModel,
        mass: f64,
    },
    Cpp {
        rho0: Partition,
        psi: f64,
        mass: f64,
    },
    Lsp {
        rho0: Partition,
        nu: f64,
    },
}

impl PriorSpec {
    pub fn center(&self) -> Option<&Partition> {
        match self {
            PriorSpec::Crp { .. } => None,
            PriorSpec::Icrp { rho0, .. } | PriorSpec::Cpp { rho0, .. } | PriorSpec::Lsp { rho0, .. } => {
                Some(rho0)
            }
        }
    }

    pub fn validate(&self, m: usize) -> Result<()> {
        let check_mass = |mass: f64| -> Result<()> {
            if mass <= 0.0 || !mass.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "CRP mass must be positive, got {mass}"
                )));
            }
            Ok(())
        };
        if let Some(rho0) = self.center() {
            if rho0.num_units() != m {
                return Err(Error::DimensionMismatch {
                    what: "initial partition",
                    expected: m,
                    got: rho0.num_units(),
                });
            }
        }
        match self {
            PriorSpec::Crp { mass } => check_mass(*mass),
            PriorSpec::Icrp { alpha, mass, .. } => {
                check_mass(*mass)?;
                if alpha.num_units() != m {
                    return Err(Error::DimensionMismatch {
                        what: "alpha model units",
                        expected: m,
                        got: alpha.num_units(),
                    });
                }
                Ok(())
            }
            PriorSpec::Cpp { psi, mass, .. } => {
                check_mass(*mass)?;
                if *psi < 0.0 || !psi.is_finite() {
                    return Err(Error::InvalidParameter(format!(
                        "CPP penalty must be nonnegative, got {psi}"
                    )));
                }
                Ok(())
            }
            PriorSpec::Lsp { nu, .. } => lsp::validate_nu(*nu),
        }
    }

    /// Exact log probabilities over every partition of [m], in enumeration
    /// order.  The informed CRP uses its time-zero probability row.
    pub fn exact_log_probs(&self, m: usize) -> Result<Vec<(Partition, f64)>> {
        self.validate(m)?;
        match self {
            PriorSpec::Crp { mass } => enumerate_partitions(m)?
                .map(|p| {
                    let lp = crp_log_eppf(&p, *mass)?;
                    Ok((p, lp))
                })
                .collect(),
            PriorSpec::Icrp { rho0, alpha, mass } => {
                let row = alpha.row(0);
                enumerate_partitions(m)?
                    .map(|p| {
                        let lp = icrp_exact_log_prob(&p, rho0, &row, *mass)?;
                        Ok((p, lp))
                    })
                    .collect()
            }
            PriorSpec::Cpp { rho0, psi, mass } => {
                let exact = cpp_exact(rho0, *psi, *mass)?;
                Ok(exact
                    .partitions
                    .into_iter()
                    .zip(exact.log_probs)
                    .collect())
            }
            PriorSpec::Lsp { rho0, nu } => enumerate_partitions(m)?
                .map(|p| {
                    let lp = lsp_log_prob(&p, rho0, *nu)?;
                    Ok((p, lp))
                })
                .collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_tables_normalize() {
        let rho0 = Partition::from_labels(&[1, 1, 2, 2, 2]).unwrap();
        let specs = vec![
            PriorSpec::Crp { mass: 1.0 },
            PriorSpec::Icrp {
                rho0: rho0.clone(),
                alpha: AlphaModel::fixed_global(0.6, 1, 5).unwrap(),
                mass: 1.0,
            },
            PriorSpec::Cpp {
                rho0: rho0.clone(),
                psi: 3.0,
                mass: 1.0,
            },
            PriorSpec::Lsp { rho0, nu: 0.5 },
        ];
        for spec in specs {
            let table = spec.exact_log_probs(5).unwrap();
            assert_eq!(table.len(), 52);
            let total: f64 = table.iter().map(|(_, lp)| lp.exp()).sum();
            assert!((total - 1.0).abs() < 1e-10, "{spec:?}: {total}");
        }
    }

    #[test]
    fn validation_catches_bad_dims() {
        let rho0 = Partition::from_labels(&[1, 1, 2]).unwrap();
        let spec = PriorSpec::Icrp {
            rho0,
            alpha: AlphaModel::fixed_global(0.5, 1, 3).unwrap(),
            mass: 1.0,
        };
        assert!(spec.validate(4).is_err());
        assert!(spec.validate(3).is_ok());
    }
}
