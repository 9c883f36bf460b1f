//! The informed CRP: a CRP mixed over per-unit reallocation indicators and
//! anchored at an initial partition.
//!
//! Given the indicator vector, the conditional law is the CRP restricted to
//! partitions that agree with the center on the fixed units, renormalized
//! over that compatible set.  Because the CRP is projective, the restricted
//! normalizer is the CRP EPPF of the center reduced to the fixed units, so
//! the exact marginal probability is a sum over indicator vectors rather
//! than over pairs of partitions.

use rand::Rng;

use crate::error::{Error, Result};
use crate::numeric::OnlineLse;
use crate::partition::{restrictions_match, GammaVector, Partition};
use crate::priors::crp::CrpTables;

/// Cap on the number of units with non-degenerate adherence probability in
/// the exact path; the indicator sum has 2^free terms.
pub const GAMMA_ENUMERATION_CAP: usize = 20;

/// log Pr(gamma) = sum_i [gamma_i log alpha_i + (1-gamma_i) log(1-alpha_i)],
/// with the 0*log(0) = 0 convention.
pub fn gamma_log_prob(gamma: &GammaVector, alphas: &[f64]) -> Result<f64> {
    if gamma.len() != alphas.len() {
        return Err(Error::DimensionMismatch {
            what: "alpha vector",
            expected: gamma.len(),
            got: alphas.len(),
        });
    }
    validate_alphas(alphas)?;
    let mut lp = 0.0;
    for (i, &a) in alphas.iter().enumerate() {
        let pr = if gamma.is_fixed(i) { a } else { 1.0 - a };
        if pr == 0.0 {
            return Ok(f64::NEG_INFINITY);
        }
        if pr < 1.0 {
            lp += pr.ln();
        }
    }
    Ok(lp)
}

pub(crate) fn validate_alphas(alphas: &[f64]) -> Result<()> {
    for &a in alphas {
        if !(0.0..=1.0).contains(&a) || !a.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "adherence probability must lie in [0,1], got {a}"
            )));
        }
    }
    Ok(())
}

/// log EPPF of `center` reduced to the units selected by `fixed`, using the
/// cached tables; `scratch` must have room for `center`'s cluster count.
pub(crate) fn restricted_log_eppf<F: Fn(usize) -> bool>(
    center: &[u32],
    fixed: F,
    tables: &CrpTables,
    scratch: &mut [u32],
) -> f64 {
    scratch.iter_mut().for_each(|s| *s = 0);
    for (i, &lab) in center.iter().enumerate() {
        if fixed(i) {
            scratch[lab as usize - 1] += 1;
        }
    }
    tables.log_eppf_sizes(scratch.iter().copied())
}

/// Exact log prior probability of `p` under the informed CRP centered at
/// `rho0` with per-unit adherence probabilities `alphas` and CRP mass.
///
/// At all-zero alphas this equals the plain CRP EPPF; at all-one alphas it
/// is a point mass at `rho0`.  Probabilities over every partition of [m]
/// sum to one.
pub fn icrp_exact_log_prob(
    p: &Partition,
    rho0: &Partition,
    alphas: &[f64],
    mass: f64,
) -> Result<f64> {
    let m = p.num_units();
    if rho0.num_units() != m {
        return Err(Error::DimensionMismatch {
            what: "center partition",
            expected: m,
            got: rho0.num_units(),
        });
    }
    if alphas.len() != m {
        return Err(Error::DimensionMismatch {
            what: "alpha vector",
            expected: m,
            got: alphas.len(),
        });
    }
    validate_alphas(alphas)?;
    if mass <= 0.0 || !mass.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "CRP mass must be positive and finite, got {mass}"
        )));
    }

    // Units with alpha exactly 0 or 1 have a forced indicator; only the
    // rest are enumerated.
    let free: Vec<usize> = (0..m)
        .filter(|&i| alphas[i] > 0.0 && alphas[i] < 1.0)
        .collect();
    if free.len() > GAMMA_ENUMERATION_CAP {
        return Err(Error::CapExceeded {
            m: free.len(),
            cap: GAMMA_ENUMERATION_CAP,
        });
    }
    let forced: Vec<bool> = (0..m).map(|i| alphas[i] >= 1.0).collect();
    let log_a: Vec<f64> = free.iter().map(|&i| alphas[i].ln()).collect();
    let log_1a: Vec<f64> = free.iter().map(|&i| (1.0 - alphas[i]).ln()).collect();

    let tables = CrpTables::new(m, mass);
    let lp_p = tables.log_eppf_sizes(p.cluster_sizes());
    let mut scratch = vec![0u32; rho0.num_clusters()];
    let mut lse = OnlineLse::new();

    for mask in 0u64..(1u64 << free.len()) {
        let fixed = |i: usize| -> bool {
            forced[i]
                || free
                    .iter()
                    .position(|&f| f == i)
                    .is_some_and(|pos| mask >> pos & 1 == 1)
        };
        if !restrictions_match(p.labels(), rho0.labels(), fixed) {
            continue;
        }
        let mut lw = 0.0;
        for pos in 0..free.len() {
            lw += if mask >> pos & 1 == 1 {
                log_a[pos]
            } else {
                log_1a[pos]
            };
        }
        let lz = restricted_log_eppf(rho0.labels(), fixed, &tables, &mut scratch);
        lse.add(lw + lp_p - lz);
    }
    Ok(lse.value())
}

/// Draws (partition, indicators) from the informed CRP: indicators are
/// independent Bernoullis, fixed units are seated according to the center's
/// grouping, and free units are seated sequentially by the CRP predictive
/// rule given everyone already seated.  This realizes exactly the
/// restriction-conditioned CRP, so the marginal partition law matches
/// `icrp_exact_log_prob`.
pub fn icrp_sample<R: Rng>(
    rho0: &Partition,
    alphas: &[f64],
    mass: f64,
    rng: &mut R,
) -> Result<(Partition, GammaVector)> {
    let m = rho0.num_units();
    if alphas.len() != m {
        return Err(Error::DimensionMismatch {
            what: "alpha vector",
            expected: m,
            got: alphas.len(),
        });
    }
    validate_alphas(alphas)?;
    if mass <= 0.0 || !mass.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "CRP mass must be positive and finite, got {mass}"
        )));
    }

    let bits: Vec<bool> = alphas.iter().map(|&a| rng.gen::<f64>() < a).collect();
    let gamma = GammaVector::new(bits);
    let p = sample_given_gamma(rho0, &gamma, mass, rng)?;
    Ok((p, gamma))
}

/// Seats fixed units per the center, then free units by the predictive rule.
pub(crate) fn sample_given_gamma<R: Rng>(
    rho0: &Partition,
    gamma: &GammaVector,
    mass: f64,
    rng: &mut R,
) -> Result<Partition> {
    let m = rho0.num_units();
    // table index per rho0 cluster, allocated lazily as fixed units appear
    let mut rho0_table = vec![usize::MAX; rho0.num_clusters()];
    let mut sizes: Vec<u32> = Vec::new();
    let mut labels = vec![0u32; m];
    let mut seated = 0usize;
    for i in 0..m {
        if !gamma.is_fixed(i) {
            continue;
        }
        let c = rho0.cluster_of(i);
        if rho0_table[c] == usize::MAX {
            rho0_table[c] = sizes.len();
            sizes.push(0);
        }
        let t = rho0_table[c];
        sizes[t] += 1;
        labels[i] = t as u32 + 1;
        seated += 1;
    }
    for i in 0..m {
        if gamma.is_fixed(i) {
            continue;
        }
        let total = mass + seated as f64;
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
        labels[i] = chosen as u32 + 1;
        seated += 1;
    }
    Partition::from_labels(&labels)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::partition::enumerate_partitions;
    use crate::priors::crp::crp_log_eppf;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn part(labels: &[u32]) -> Partition {
        Partition::from_labels(labels).unwrap()
    }

    #[test]
    fn gamma_log_prob_examples() {
        let g = GammaVector::all_fixed(3);
        assert_eq!(gamma_log_prob(&g, &[1.0, 1.0, 1.0]).unwrap(), 0.0);
        let g = GammaVector::new(vec![true, false, true]);
        let lp = gamma_log_prob(&g, &[0.5, 0.5, 0.5]).unwrap();
        assert!((lp - (1.0f64 / 8.0).ln()).abs() < 1e-14);
        let g = GammaVector::new(vec![true, false]);
        let lp = gamma_log_prob(&g, &[0.25, 0.75]).unwrap();
        assert!((lp - (0.25f64 * 0.25).ln()).abs() < 1e-14);
    }

    #[test]
    fn gamma_log_prob_degenerate_zero() {
        let g = GammaVector::new(vec![false]);
        assert_eq!(gamma_log_prob(&g, &[1.0]).unwrap(), f64::NEG_INFINITY);
        let g = GammaVector::new(vec![true]);
        assert_eq!(gamma_log_prob(&g, &[0.0]).unwrap(), f64::NEG_INFINITY);
    }

    #[test]
    fn collapses_to_center_at_alpha_one() {
        let rho0 = part(&[1, 1, 2, 2, 2]);
        let ones = [1.0; 5];
        for p in enumerate_partitions(5).unwrap() {
            let lp = icrp_exact_log_prob(&p, &rho0, &ones, 1.0).unwrap();
            if p == rho0 {
                assert!(lp.abs() < 1e-12);
            } else {
                assert_eq!(lp, f64::NEG_INFINITY);
            }
        }
    }

    #[test]
    fn reduces_to_crp_at_alpha_zero() {
        let rho0 = part(&[1, 1, 2, 2, 2]);
        let zeros = [0.0; 5];
        for p in enumerate_partitions(5).unwrap() {
            let lp = icrp_exact_log_prob(&p, &rho0, &zeros, 1.0).unwrap();
            let crp = crp_log_eppf(&p, 1.0).unwrap();
            assert!((lp - crp).abs() <= 1e-12, "{p}: {lp} vs {crp}");
        }
    }

    #[test]
    fn normalizes_for_heterogeneous_alphas() {
        let rho0 = part(&[1, 2, 2, 3]);
        let alphas = [0.1, 0.9, 0.5, 0.0];
        for mass in [0.5, 1.0, 3.0] {
            let total: f64 = enumerate_partitions(4)
                .unwrap()
                .map(|p| icrp_exact_log_prob(&p, &rho0, &alphas, mass).unwrap().exp())
                .sum();
            assert!((total - 1.0).abs() < 1e-10, "mass={mass}: {total}");
        }
    }

    #[test]
    fn raising_alpha_never_hurts_center() {
        let rho0 = part(&[1, 1, 2, 2, 2]);
        for unit in 0..5 {
            let mut last = f64::NEG_INFINITY;
            for step in 0..=8 {
                let mut alphas = [0.3; 5];
                alphas[unit] = step as f64 / 8.0;
                let lp = icrp_exact_log_prob(&rho0, &rho0, &alphas, 1.0).unwrap();
                assert!(lp >= last - 1e-12, "unit {unit} step {step}");
                last = lp;
            }
        }
    }

    #[test]
    fn sample_is_center_at_alpha_one() {
        let rho0 = part(&[1, 2, 1, 3]);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let (p, g) = icrp_sample(&rho0, &[1.0; 4], 1.0, &mut rng).unwrap();
            assert_eq!(p, rho0);
            assert_eq!(g.count_fixed(), 4);
        }
    }

    #[test]
    fn sampler_matches_exact_law_in_tv() {
        let rho0 = part(&[1, 1, 2, 2, 2]);
        let alphas = [0.5; 5];
        let mut rng = ChaCha8Rng::seed_from_u64(19);
        let draws = 100_000;
        let mut counts = std::collections::HashMap::new();
        for _ in 0..draws {
            let (p, _) = icrp_sample(&rho0, &alphas, 1.0, &mut rng).unwrap();
            *counts.entry(p.labels().to_vec()).or_insert(0usize) += 1;
        }
        let mut tv = 0.0;
        for p in enumerate_partitions(5).unwrap() {
            let exact = icrp_exact_log_prob(&p, &rho0, &alphas, 1.0).unwrap().exp();
            let got = *counts.get(p.labels()).unwrap_or(&0) as f64 / draws as f64;
            tv += 0.5 * (exact - got).abs();
        }
        assert!(tv < 0.02, "TV distance {tv}");
    }
}
