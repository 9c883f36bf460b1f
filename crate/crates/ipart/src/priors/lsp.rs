//! The location-scale partition distribution: sequential allocation with a
//! center partition acting as a covariate and a scale that controls how
//! strongly allocations follow it.  Small scales concentrate on the center.
//!
//! Each unit's conditional is normalized over its support, so the product
//! over units is itself a probability distribution on partitions; the
//! sequential form doubles as the MCMC prior kernel without any global
//! normalizer.  Allocation follows the natural unit order 1..m.

use crate::error::{Error, Result};
use crate::partition::Partition;

/// Log probability of `p` under the location-scale partition law centered
/// at `rho0` with scale `nu`.
pub fn lsp_log_prob(p: &Partition, rho0: &Partition, nu: f64) -> Result<f64> {
    let m = rho0.num_units();
    if p.num_units() != m {
        return Err(Error::DimensionMismatch {
            what: "partition",
            expected: m,
            got: p.num_units(),
        });
    }
    validate_nu(nu)?;
    Ok(lsp_log_prob_canonical(p.labels(), rho0, nu))
}

pub(crate) fn validate_nu(nu: f64) -> Result<()> {
    if nu <= 0.0 || !nu.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "LSP scale must be positive and finite, got {nu}"
        )));
    }
    Ok(())
}

/// Core evaluation over canonical restricted-growth labels.  `labels` must
/// be canonical; use [`lsp_log_prob`] for arbitrary partitions.
pub(crate) fn lsp_log_prob_canonical(labels: &[u32], rho0: &Partition, nu: f64) -> f64 {
    let m = labels.len();
    let k0_max = rho0.num_clusters();
    // counts[k] = units among 1..i in cluster k of `labels`;
    // matches[k][g] = units among 1..i in cluster k whose center label is g.
    let mut counts: Vec<f64> = Vec::with_capacity(m);
    let mut matches: Vec<Vec<f64>> = Vec::with_capacity(m);
    let mut lp = 0.0;
    let mut k_seen = 0usize; // K^{i-1}
    let mut k0_seen = 0usize; // K0^{i-1}
    for i in 0..m {
        let c0i = rho0.cluster_of(i);
        if i > 0 {
            let denom_base = nu * k0_seen as f64 + nu;
            let mut total = 0.0;
            let mut weights = Vec::with_capacity(k_seen + 1);
            for k in 0..k_seen {
                let w = (nu + matches[k][c0i]) / (denom_base + counts[k]);
                weights.push(w);
                total += w;
            }
            // Opening a new cluster earns the bonus only when the unit also
            // opens a new cluster in the center.
            let opens_new_in_center = c0i + 1 > k0_seen;
            let w_new = (nu + if opens_new_in_center { 1.0 } else { 0.0 }) / (denom_base + 1.0);
            weights.push(w_new);
            total += w_new;
            let choice = labels[i] as usize - 1;
            lp += (weights[choice] / total).ln();
        }
        let c = labels[i] as usize - 1;
        if c == k_seen {
            counts.push(0.0);
            matches.push(vec![0.0; k0_max]);
            k_seen += 1;
        }
        counts[c] += 1.0;
        matches[c][c0i] += 1.0;
        k0_seen = k0_seen.max(rho0.labels()[i] as usize);
    }
    lp
}

/// The normalized conditional allocation weights for unit `i` given the
/// first `i` entries of `labels`; exposed for tests of per-step
/// normalization.
pub fn lsp_conditional(labels_prefix: &[u32], rho0: &Partition, nu: f64) -> Result<Vec<f64>> {
    validate_nu(nu)?;
    let i = labels_prefix.len();
    if i == 0 || i >= rho0.num_units() {
        return Err(Error::InvalidParameter(
            "conditional needs a nonempty strict prefix".into(),
        ));
    }
    let k_seen = *labels_prefix.iter().max().unwrap() as usize;
    let k0_seen = rho0.labels()[..i].iter().max().copied().unwrap() as usize;
    let c0i = rho0.cluster_of(i);
    let denom_base = nu * k0_seen as f64 + nu;
    let mut weights = Vec::with_capacity(k_seen + 1);
    for k in 1..=k_seen {
        let count = labels_prefix.iter().filter(|&&c| c as usize == k).count() as f64;
        let matched = (0..i)
            .filter(|&l| labels_prefix[l] as usize == k && rho0.cluster_of(l) == c0i)
            .count() as f64;
        weights.push((nu + matched) / (denom_base + count));
    }
    let opens_new = c0i + 1 > k0_seen;
    weights.push((nu + if opens_new { 1.0 } else { 0.0 }) / (denom_base + 1.0));
    let total: f64 = weights.iter().sum();
    Ok(weights.into_iter().map(|w| w / total).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::partition::enumerate_partitions;

    fn part(labels: &[u32]) -> Partition {
        Partition::from_labels(labels).unwrap()
    }

    #[test]
    fn first_unit_is_certain() {
        // p(c1 = 1) = 1, so a single-unit partition has log prob 0.
        let p = part(&[1]);
        assert_eq!(lsp_log_prob(&p, &p, 0.7).unwrap(), 0.0);
    }

    #[test]
    fn two_unit_hand_value() {
        // rho0 = (1,1): weights are (nu+1)/(2nu+1) for joining and
        // nu/(2nu+1) for a new cluster, so Pr(join) = (nu+1)/(2nu+1).
        let rho0 = part(&[1, 1]);
        for nu in [0.25, 1.0, 4.0] {
            let joined = lsp_log_prob(&part(&[1, 1]), &rho0, nu).unwrap().exp();
            let split = lsp_log_prob(&part(&[1, 2]), &rho0, nu).unwrap().exp();
            let expect = (nu + 1.0) / (2.0 * nu + 1.0);
            assert!((joined - expect).abs() < 1e-14, "nu={nu}");
            assert!((joined + split - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn sequential_product_is_normalized() {
        let rho0 = part(&[1, 1, 2, 2, 2]);
        for nu in [3.0, 1.0, 0.05] {
            let total: f64 = enumerate_partitions(5)
                .unwrap()
                .map(|p| lsp_log_prob(&p, &rho0, nu).unwrap().exp())
                .sum();
            assert!((total - 1.0).abs() < 1e-12, "nu={nu}: {total}");
        }
    }

    #[test]
    fn conditionals_sum_to_one() {
        let rho0 = part(&[1, 2, 1, 3, 2]);
        for prefix in [vec![1u32], vec![1, 2], vec![1, 1, 2], vec![1, 2, 1, 3]] {
            let w = lsp_conditional(&prefix, &rho0, 0.8).unwrap();
            let total: f64 = w.iter().sum();
            assert!((total - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn small_scale_concentrates_on_center() {
        let rho0 = part(&[1, 1, 2, 2, 2]);
        let pr0 = lsp_log_prob(&rho0, &rho0, 1e-4).unwrap().exp();
        assert!(pr0 > 0.999, "Pr(rho0) at tiny scale: {pr0}");
        let mut last = 0.0;
        for nu in [3.0, 1.0, 0.3, 0.05, 0.001] {
            let pr = lsp_log_prob(&rho0, &rho0, nu).unwrap().exp();
            assert!(pr > last, "nu={nu}");
            last = pr;
        }
    }

    #[test]
    fn rejects_bad_scale() {
        let p = part(&[1, 2]);
        assert!(lsp_log_prob(&p, &p, 0.0).is_err());
        assert!(lsp_log_prob(&p, &p, -2.0).is_err());
    }
}
