//! The Chinese restaurant process EPPF and sampler.

use rand::Rng;

use crate::error::{Error, Result};
use crate::partition::Partition;

/// Cached log-factorials and log-mass prefix sums for one (m, mass) pair.
/// The log EPPF of any partition or reduced partition over at most `m`
/// units is then a few table lookups per cluster.
#[derive(Debug, Clone)]
pub(crate) struct CrpTables {
    ln_fact: Vec<f64>,
    ln_mass_cum: Vec<f64>,
    pub mass: f64,
}

impl CrpTables {
    pub fn new(m: usize, mass: f64) -> Self {
        let mut ln_fact = Vec::with_capacity(m + 1);
        ln_fact.push(0.0);
        for n in 1..=m {
            ln_fact.push(ln_fact[n - 1] + (n as f64).ln());
        }
        let mut ln_mass_cum = Vec::with_capacity(m + 1);
        ln_mass_cum.push(0.0);
        for i in 0..m {
            ln_mass_cum.push(ln_mass_cum[i] + (mass + i as f64).ln());
        }
        CrpTables {
            ln_fact,
            ln_mass_cum,
            mass,
        }
    }

    /// log EPPF of a partition with the given nonzero cluster sizes over
    /// `r = sizes.sum()` units; `r = 0` (the empty partition) gives 0.
    pub fn log_eppf_sizes<I: IntoIterator<Item = u32>>(&self, sizes: I) -> f64 {
        let mut lp = 0.0;
        let mut r = 0usize;
        let mut k = 0usize;
        for n in sizes {
            if n == 0 {
                continue;
            }
            lp += self.ln_fact[n as usize - 1];
            r += n as usize;
            k += 1;
        }
        lp + k as f64 * self.mass.ln() - self.ln_mass_cum[r]
    }
}

/// log of the CRP exchangeable partition probability function, Eq-style
/// mass^k * prod_j (|S_j|-1)! / prod_i (mass+i-1).  Exponentials over all
/// partitions of [m] sum to 1.
pub fn crp_log_eppf(p: &Partition, mass: f64) -> Result<f64> {
    if mass <= 0.0 || !mass.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "CRP mass must be positive and finite, got {mass}"
        )));
    }
    let tables = CrpTables::new(p.num_units(), mass);
    Ok(tables.log_eppf_sizes(p.cluster_sizes()))
}

/// Draws a partition of `[m]` by sequential seating.
pub fn crp_sample<R: Rng>(m: usize, mass: f64, rng: &mut R) -> Result<Partition> {
    if m == 0 {
        return Err(Error::EmptyInput("partition size"));
    }
    let mut labels: Vec<u32> = Vec::with_capacity(m);
    let mut sizes: Vec<u32> = Vec::new();
    for i in 0..m {
        let total = mass + i as f64;
        let mut u = rng.gen::<f64>() * total;
        let mut chosen = sizes.len();
        for (j, &n) in sizes.iter().enumerate() {
            u -= n as f64;
            if u < 0.0 {
                chosen = j;
                break;
            }
        }
        if chosen == sizes.len() {
            sizes.push(1);
        } else {
            sizes[chosen] += 1;
        }
        labels.push(chosen as u32 + 1);
    }
    Partition::from_labels(&labels)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::partition::enumerate_partitions;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn hand_value_m3() {
        let p = Partition::from_labels(&[1, 1, 1]).unwrap();
        let lp = crp_log_eppf(&p, 1.0).unwrap();
        assert!((lp - (1.0f64 / 3.0).ln()).abs() < 1e-14);
    }

    #[test]
    fn single_unit_has_probability_one() {
        let p = Partition::from_labels(&[1]).unwrap();
        for mass in [0.3, 1.0, 7.5] {
            assert!(crp_log_eppf(&p, mass).unwrap().abs() < 1e-15);
        }
    }

    #[test]
    fn normalizes_over_all_partitions() {
        for mass in [0.5, 1.0, 2.0] {
            let total: f64 = enumerate_partitions(5)
                .unwrap()
                .map(|p| crp_log_eppf(&p, mass).unwrap().exp())
                .sum();
            assert!((total - 1.0).abs() < 1e-12, "mass={mass}: {total}");
        }
    }

    #[test]
    fn rejects_bad_mass() {
        let p = Partition::from_labels(&[1, 2]).unwrap();
        assert!(crp_log_eppf(&p, 0.0).is_err());
        assert!(crp_log_eppf(&p, -1.0).is_err());
    }

    #[test]
    fn sample_frequencies_track_eppf() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut counts = std::collections::HashMap::new();
        let draws = 40_000;
        for _ in 0..draws {
            let p = crp_sample(4, 1.0, &mut rng).unwrap();
            *counts.entry(p.labels().to_vec()).or_insert(0usize) += 1;
        }
        for p in enumerate_partitions(4).unwrap() {
            let expect = crp_log_eppf(&p, 1.0).unwrap().exp();
            let got = *counts.get(p.labels()).unwrap_or(&0) as f64 / draws as f64;
            assert!(
                (got - expect).abs() < 0.01,
                "{p}: got {got}, expected {expect}"
            );
        }
    }
}
