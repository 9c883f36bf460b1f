//! Shared oracles for the integration suites: independent brute-force
//! implementations that the library code is checked against.

#![allow(dead_code)]

use std::collections::HashMap;

use ipart::likelihood::{cluster_log_marginal, Dataset};
use ipart::mcmc::DrawsArchive;
use ipart::numeric::logsumexp;
use ipart::partition::{enumerate_partitions, Partition};
use ipart::priors::PriorSpec;

/// Exact conjugate posterior over all partitions of [m] for a single-time
/// Gaussian problem with known kernel scale and fixed mean hyperprior:
/// posterior(p) proportional to prior(p) * prod_clusters marginal(cluster).
pub fn exact_posterior(
    prior: &PriorSpec,
    data: &Dataset,
    sigma: f64,
    theta: f64,
    tau: f64,
) -> Vec<(Partition, f64)> {
    let m = data.num_units();
    let table = prior.exact_log_probs(m).expect("exact prior");
    let mut logs: Vec<f64> = Vec::with_capacity(table.len());
    for (p, lp) in &table {
        let mut l = *lp;
        for c in 0..p.num_clusters() {
            let ys: Vec<f64> = (0..m)
                .filter(|&i| p.cluster_of(i) == c)
                .map(|i| data.value(0, i))
                .collect();
            l += cluster_log_marginal(&ys, sigma, theta, tau);
        }
        logs.push(l);
    }
    let z = logsumexp(&logs);
    table
        .into_iter()
        .zip(logs)
        .map(|((p, _), l)| (p, (l - z).exp()))
        .collect()
}

/// Empirical partition frequencies of one slice of the archive.
pub fn slice_frequencies(archive: &DrawsArchive, t: usize) -> HashMap<Vec<u32>, f64> {
    let mut counts: HashMap<Vec<u32>, f64> = HashMap::new();
    for d in &archive.draws {
        *counts.entry(d.labels[t].clone()).or_insert(0.0) += 1.0;
    }
    let n = archive.draws.len() as f64;
    counts.values_mut().for_each(|v| *v /= n);
    counts
}

/// Total-variation distance between an exact law over all partitions and an
/// empirical frequency table.
pub fn tv_distance(exact: &[(Partition, f64)], empirical: &HashMap<Vec<u32>, f64>) -> f64 {
    let mut tv = 0.0;
    for (p, prob) in exact {
        let got = empirical.get(p.labels()).copied().unwrap_or(0.0);
        tv += 0.5 * (prob - got).abs();
    }
    tv
}

/// Exact posterior co-clustering probabilities from an enumerated law.
pub fn exact_coclustering(posterior: &[(Partition, f64)], m: usize) -> Vec<f64> {
    let mut cc = vec![0.0f64; m * m];
    for (p, prob) in posterior {
        for i in 0..m {
            cc[i * m + i] += prob;
            for j in i + 1..m {
                if p.cluster_of(i) == p.cluster_of(j) {
                    cc[i * m + j] += prob;
                    cc[j * m + i] += prob;
                }
            }
        }
    }
    cc
}

/// Pair-counting ARI oracle, independent of the contingency-table route.
pub fn ari_pair_counting(p: &Partition, q: &Partition) -> f64 {
    let m = p.num_units();
    let (mut a, mut b, mut c, mut d) = (0f64, 0f64, 0f64, 0f64);
    for i in 0..m {
        for j in i + 1..m {
            let same_p = p.cluster_of(i) == p.cluster_of(j);
            let same_q = q.cluster_of(i) == q.cluster_of(j);
            match (same_p, same_q) {
                (true, true) => a += 1.0,
                (true, false) => b += 1.0,
                (false, true) => c += 1.0,
                (false, false) => d += 1.0,
            }
        }
    }
    let num = 2.0 * (a * d - b * c);
    let den = (a + b) * (b + d) + (a + c) * (c + d);
    if den == 0.0 {
        1.0
    } else {
        num / den
    }
}

/// Entropy-based VI oracle in bits, from scratch.
pub fn vi_entropy_oracle(p: &Partition, q: &Partition) -> f64 {
    let m = p.num_units() as f64;
    let h = |sizes: &[u32]| -> f64 {
        sizes
            .iter()
            .filter(|&&n| n > 0)
            .map(|&n| {
                let f = n as f64 / m;
                -f * f.log2()
            })
            .sum()
    };
    let mut joint: HashMap<(u32, u32), u32> = HashMap::new();
    for i in 0..p.num_units() {
        *joint
            .entry((p.labels()[i], q.labels()[i]))
            .or_insert(0) += 1;
    }
    let mut info = 0.0;
    for (&(a, b), &n) in &joint {
        let pij = n as f64 / m;
        let pi = p.cluster_sizes()[a as usize - 1] as f64 / m;
        let pj = q.cluster_sizes()[b as usize - 1] as f64 / m;
        info += pij * (pij / (pi * pj)).log2();
    }
    h(&p.cluster_sizes()) + h(&q.cluster_sizes()) - 2.0 * info
}

/// Literal three-layer evaluation of the informed-CRP marginal: enumerate
/// indicator vectors, restrict, and renormalize over the compatible set by
/// explicit summation (no projectivity shortcut).
pub fn icrp_triple_sum(p: &Partition, rho0: &Partition, alphas: &[f64], mass: f64) -> f64 {
    let m = p.num_units();
    let all: Vec<Partition> = enumerate_partitions(m).unwrap().collect();
    let crp: Vec<f64> = all
        .iter()
        .map(|q| ipart::priors::crp_log_eppf(q, mass).unwrap().exp())
        .collect();
    let restrict = |q: &Partition, mask: u64| -> Vec<u32> { q.restrict(|i| mask >> i & 1 == 1) };
    let mut total = 0.0;
    let p_idx = all.iter().position(|q| q == p).unwrap();
    for mask in 0u64..(1 << m) {
        let mut w = 1.0;
        for (i, &al) in alphas.iter().enumerate() {
            w *= if mask >> i & 1 == 1 { al } else { 1.0 - al };
        }
        if w == 0.0 {
            continue;
        }
        let r0 = restrict(rho0, mask);
        if restrict(p, mask) != r0 {
            continue;
        }
        let z: f64 = all
            .iter()
            .zip(&crp)
            .filter(|(q, _)| restrict(q, mask) == r0)
            .map(|(_, pr)| pr)
            .sum();
        total += w * crp[p_idx] / z;
    }
    total
}
