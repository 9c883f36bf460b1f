//! The centered partition process: a baseline CRP penalized exponentially
//! in the VI distance from the center.  The normalizing constant is only
//! available by enumeration, so the exact path is capped; MCMC never needs
//! it because only ratios enter the sampler.

use crate::error::{Error, Result};
use crate::numeric::logsumexp;
use crate::partition::{enumerate_partitions, variation_of_information, Partition};
use crate::priors::crp::crp_log_eppf;

/// The exact CPP distribution over all partitions of [m], in enumeration
/// order.
#[derive(Debug, Clone)]
pub struct CppExact {
    pub partitions: Vec<Partition>,
    pub log_probs: Vec<f64>,
}

pub fn cpp_exact(rho0: &Partition, psi: f64, mass: f64) -> Result<CppExact> {
    if psi < 0.0 || !psi.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "CPP penalty must be nonnegative and finite, got {psi}"
        )));
    }
    let m = rho0.num_units();
    let partitions: Vec<Partition> = enumerate_partitions(m)?.collect();
    let unnorm: Vec<f64> = partitions
        .iter()
        .map(|p| {
            let d = variation_of_information(p, rho0)?;
            Ok(crp_log_eppf(p, mass)? - psi * d)
        })
        .collect::<Result<_>>()?;
    let z = logsumexp(&unnorm);
    let log_probs = unnorm.iter().map(|lp| lp - z).collect();
    Ok(CppExact {
        partitions,
        log_probs,
    })
}

/// Exact log probability of one partition under the CPP; enumeration-backed,
/// so every call pays the Bell(m) normalizer.  Use [`cpp_exact`] to evaluate
/// many partitions at once.
pub fn cpp_log_prob(p: &Partition, rho0: &Partition, psi: f64, mass: f64) -> Result<f64> {
    let m = rho0.num_units();
    if p.num_units() != m {
        return Err(Error::DimensionMismatch {
            what: "partition",
            expected: m,
            got: p.num_units(),
        });
    }
    let exact = cpp_exact(rho0, psi, mass)?;
    let idx = exact
        .partitions
        .iter()
        .position(|q| q == p)
        .expect("enumeration covers all partitions");
    Ok(exact.log_probs[idx])
}
