//! Sampler validation against exact enumeration: prior recovery with a flat
//! likelihood, posterior recovery on conjugate toys, and the determinism
//! contract.  These run at development scale; the acceptance suite repeats
//! the headline checks at their full pinned sizes.

mod common;

use common::{exact_coclustering, exact_posterior, slice_frequencies, tv_distance};
use ipart::config::{AlphaConfig, ScalarOrVec};
use ipart::likelihood::{Dataset, GaussianModel};
use ipart::mcmc::{run_chain, run_chain_cpp, run_chain_lsp, McmcConfig};
use ipart::partition::Partition;
use ipart::priors::{AlphaModel, AlphaRegime, PriorSpec};
use ipart::temporal::{Dependence, SequenceModel};

fn part(labels: &[u32]) -> Partition {
    Partition::from_labels(labels).unwrap()
}

fn cfg(iters: u64, burnin: u64, seed: u64) -> McmcConfig {
    McmcConfig {
        iters,
        burnin,
        thin: 1,
        n_aux: 3,
        seed,
        chains: 1,
        validate_invariants: true,
    }
}

fn icrp_model(rho0: &Partition, alpha: f64, t_len: usize) -> SequenceModel {
    SequenceModel {
        dependence: Dependence::Markovian,
        rho0: Some(rho0.clone()),
        alpha: AlphaModel::fixed_global(alpha, t_len, rho0.num_units()).unwrap(),
        mass: 1.0,
    }
}

#[test]
fn prior_recovery_icrp_small() {
    let rho0 = part(&[1, 1, 2, 3]);
    let model = icrp_model(&rho0, 0.5, 1);
    let gauss = GaussianModel::simplified(1.0, 0.0, 3.0);
    let archive = run_chain(None, &model, &gauss, &cfg(60_000, 2_000, 11), 0).unwrap();
    let spec = PriorSpec::Icrp {
        rho0,
        alpha: model.alpha.clone(),
        mass: 1.0,
    };
    let exact: Vec<(Partition, f64)> = spec
        .exact_log_probs(4)
        .unwrap()
        .into_iter()
        .map(|(p, lp)| (p, lp.exp()))
        .collect();
    let tv = tv_distance(&exact, &slice_frequencies(&archive, 0));
    assert!(tv < 0.02, "prior-recovery TV {tv}");
}

#[test]
fn prior_recovery_with_random_alpha() {
    // Random adherence integrates out: the partition marginal is the
    // mixture over the beta prior; check against a numerical mixture.
    let rho0 = part(&[1, 1, 2]);
    let alpha = AlphaModel::beta_broadcast(AlphaRegime::Global, 2.0, 2.0, 1, 3).unwrap();
    let model = SequenceModel {
        dependence: Dependence::Markovian,
        rho0: Some(rho0.clone()),
        alpha,
        mass: 1.0,
    };
    let gauss = GaussianModel::simplified(1.0, 0.0, 3.0);
    let archive = run_chain(None, &model, &gauss, &cfg(80_000, 5_000, 13), 0).unwrap();
    // Quadrature over the beta prior of the exact conditional law.
    let grid = 2_000;
    let mut exact: Vec<(Partition, f64)> = ipart::partition::enumerate_partitions(3)
        .unwrap()
        .map(|p| (p, 0.0))
        .collect();
    let mut weight_total = 0.0;
    for g in 0..grid {
        let a = (g as f64 + 0.5) / grid as f64;
        // Beta(2,2) density propto a(1-a).
        let w = a * (1.0 - a);
        weight_total += w;
        let alphas = [a; 3];
        for (p, acc) in exact.iter_mut() {
            *acc += w
                * ipart::priors::icrp_exact_log_prob(p, &rho0, &alphas, 1.0)
                    .unwrap()
                    .exp();
        }
    }
    for (_, acc) in exact.iter_mut() {
        *acc /= weight_total;
    }
    let tv = tv_distance(&exact, &slice_frequencies(&archive, 0));
    assert!(tv < 0.02, "random-alpha prior TV {tv}");
}

#[test]
fn markovian_sequence_marginals_match_enumeration() {
    // T = 2: the second slice's marginal mixes over the first, stressing
    // the forward-compatibility constraint and the indicator updates.
    let rho0 = part(&[1, 1, 2]);
    let model = icrp_model(&rho0, 0.6, 2);
    let gauss = GaussianModel::simplified(1.0, 0.0, 3.0);
    let archive = run_chain(None, &model, &gauss, &cfg(150_000, 5_000, 17), 0).unwrap();

    let all: Vec<Partition> = ipart::partition::enumerate_partitions(3).unwrap().collect();
    let alphas = [0.6; 3];
    // Exact marginals: slice one directly; slice two by mixing.
    let p1: Vec<f64> = all
        .iter()
        .map(|p| {
            ipart::priors::icrp_exact_log_prob(p, &rho0, &alphas, 1.0)
                .unwrap()
                .exp()
        })
        .collect();
    let exact_t0: Vec<(Partition, f64)> = all.iter().cloned().zip(p1.iter().copied()).collect();
    let mut p2 = vec![0.0f64; all.len()];
    for (idx1, q1) in all.iter().enumerate() {
        for (idx2, q2) in all.iter().enumerate() {
            p2[idx2] += p1[idx1]
                * ipart::priors::icrp_exact_log_prob(q2, q1, &alphas, 1.0)
                    .unwrap()
                    .exp();
        }
    }
    let exact_t1: Vec<(Partition, f64)> = all.iter().cloned().zip(p2).collect();

    let tv0 = tv_distance(&exact_t0, &slice_frequencies(&archive, 0));
    let tv1 = tv_distance(&exact_t1, &slice_frequencies(&archive, 1));
    assert!(tv0 < 0.02, "slice-one TV {tv0}");
    assert!(tv1 < 0.02, "slice-two TV {tv1}");
}

#[test]
fn conjugate_posterior_matches_enumeration_m4() {
    // Known-sigma toy: co-clustering from the chain against the exactly
    // enumerated posterior, all fifteen partitions.
    let data = Dataset::from_matrix(vec![-1.2, -0.9, 1.1, 1.4], 1, 4, None, None).unwrap();
    let (sigma, theta, tau) = (0.6, 0.0, 2.0);
    let gauss = GaussianModel::simplified(sigma, theta, tau);
    let rho0 = part(&[1, 2, 2, 1]);
    for alpha in [0.0, 0.5] {
        let model = icrp_model(&rho0, alpha, 1);
        let archive =
            run_chain(Some(&data), &model, &gauss, &cfg(200_000, 10_000, 23), 0).unwrap();
        let spec = PriorSpec::Icrp {
            rho0: rho0.clone(),
            alpha: model.alpha.clone(),
            mass: 1.0,
        };
        let post = exact_posterior(&spec, &data, sigma, theta, tau);
        let cc_exact = exact_coclustering(&post, 4);
        let cc_chain = ipart::summaries::coclustering(&archive).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                let diff = (cc_chain.at(0, i, j) - cc_exact[i * 4 + j]).abs();
                assert!(diff < 0.01, "alpha={alpha} pair ({i},{j}) diff {diff}");
            }
        }
        // Baseline CRP sampler corresponds to alpha = 0; also compare the
        // full partition law.
        let tv = tv_distance(
            &post,
            &slice_frequencies(&archive, 0),
        );
        assert!(tv < 0.02, "alpha={alpha} posterior TV {tv}");
    }
}

#[test]
fn cpp_chain_prior_and_posterior() {
    let rho0 = part(&[1, 1, 2, 2]);
    let gauss = GaussianModel::simplified(0.6, 0.0, 2.0);
    // Prior recovery at two penalties; zero penalty is the plain CRP.
    for psi in [0.0, 3.0] {
        let archive =
            run_chain_cpp(None, &rho0, psi, 1.0, &gauss, &cfg(60_000, 2_000, 29), 0).unwrap();
        let spec = PriorSpec::Cpp {
            rho0: rho0.clone(),
            psi,
            mass: 1.0,
        };
        let exact: Vec<(Partition, f64)> = spec
            .exact_log_probs(4)
            .unwrap()
            .into_iter()
            .map(|(p, lp)| (p, lp.exp()))
            .collect();
        let tv = tv_distance(&exact, &slice_frequencies(&archive, 0));
        assert!(tv < 0.02, "CPP psi={psi} prior TV {tv}");
    }
    // Conjugate posterior.
    let data = Dataset::from_matrix(vec![-1.0, -0.8, 0.9, 1.2], 1, 4, None, None).unwrap();
    let archive =
        run_chain_cpp(Some(&data), &rho0, 4.0, 1.0, &gauss, &cfg(150_000, 10_000, 31), 0).unwrap();
    let spec = PriorSpec::Cpp {
        rho0: rho0.clone(),
        psi: 4.0,
        mass: 1.0,
    };
    let post = exact_posterior(&spec, &data, 0.6, 0.0, 2.0);
    let tv = tv_distance(&post, &slice_frequencies(&archive, 0));
    assert!(tv < 0.02, "CPP posterior TV {tv}");
}

#[test]
fn lsp_chain_prior_and_posterior() {
    let rho0 = part(&[1, 1, 2, 2]);
    let gauss = GaussianModel::simplified(0.6, 0.0, 2.0);
    for nu in [1.0, 0.2] {
        let archive =
            run_chain_lsp(None, &rho0, nu, &gauss, &cfg(120_000, 5_000, 37), 0).unwrap();
        let spec = PriorSpec::Lsp {
            rho0: rho0.clone(),
            nu,
        };
        let exact: Vec<(Partition, f64)> = spec
            .exact_log_probs(4)
            .unwrap()
            .into_iter()
            .map(|(p, lp)| (p, lp.exp()))
            .collect();
        let tv = tv_distance(&exact, &slice_frequencies(&archive, 0));
        assert!(tv < 0.02, "LSP nu={nu} prior TV {tv}");
    }
    let data = Dataset::from_matrix(vec![-1.0, -0.8, 0.9, 1.2], 1, 4, None, None).unwrap();
    let archive =
        run_chain_lsp(Some(&data), &rho0, 0.5, &gauss, &cfg(200_000, 10_000, 41), 0).unwrap();
    let spec = PriorSpec::Lsp { rho0, nu: 0.5 };
    let post = exact_posterior(&spec, &data, 0.6, 0.0, 2.0);
    let tv = tv_distance(&post, &slice_frequencies(&archive, 0));
    assert!(tv < 0.02, "LSP posterior TV {tv}");
}

#[test]
fn chains_are_deterministic_and_distinct() {
    let data = Dataset::from_matrix(vec![0.1, -0.2, 1.9, 2.2, 2.0], 1, 5, None, None).unwrap();
    let rho0 = part(&[1, 1, 2, 2, 2]);
    let model = SequenceModel {
        dependence: Dependence::Markovian,
        rho0: Some(rho0),
        alpha: AlphaModel::beta_broadcast(AlphaRegime::UnitLocal, 1.0, 9.0, 1, 5).unwrap(),
        mass: 1.0,
    };
    let gauss = GaussianModel::full(Default::default());
    let c = cfg(500, 100, 99);
    let a = run_chain(Some(&data), &model, &gauss, &c, 0).unwrap();
    let b = run_chain(Some(&data), &model, &gauss, &c, 0).unwrap();
    assert_eq!(a.draws.len(), b.draws.len());
    for (x, y) in a.draws.iter().zip(&b.draws) {
        assert_eq!(x.labels, y.labels);
        assert_eq!(x.alpha_blocks, y.alpha_blocks);
        assert_eq!(x.obs_loglik, y.obs_loglik);
        assert_eq!(x.log_post, y.log_post);
    }
    let other = run_chain(Some(&data), &model, &gauss, &c, 1).unwrap();
    assert!(a
        .draws
        .iter()
        .zip(&other.draws)
        .any(|(x, y)| x.labels != y.labels));
}

#[test]
fn gamma_all_fixed_freezes_allocations() {
    // Adherence pinned at one keeps every slice equal to the center.
    let data = Dataset::from_matrix(vec![0.0, 5.0, -4.0], 1, 3, None, None).unwrap();
    let rho0 = part(&[1, 1, 2]);
    let model = icrp_model(&rho0, 1.0, 1);
    let gauss = GaussianModel::full(Default::default());
    let archive = run_chain(Some(&data), &model, &gauss, &cfg(300, 100, 3), 0).unwrap();
    for d in &archive.draws {
        assert_eq!(d.labels[0], vec![1, 1, 2]);
    }
}

#[test]
fn config_serialization_round_trip() {
    let c = McmcConfig {
        iters: 1000,
        burnin: 100,
        thin: 9,
        n_aux: 2,
        seed: 5,
        chains: 2,
        validate_invariants: false,
    };
    let text = serde_json::to_string(&c).unwrap();
    let back: McmcConfig = serde_json::from_str(&text).unwrap();
    assert_eq!(c, back);
    assert!(back.validate().is_ok());
    assert!(McmcConfig { thin: 7, ..c.clone() }.validate().is_err());
    assert!(McmcConfig { burnin: 1000, ..c }.validate().is_err());
}

#[test]
fn alpha_config_build_matches_regimes() {
    let cfg = AlphaConfig {
        regime: AlphaRegime::TimeLocal,
        fixed: true,
        values: Some(ScalarOrVec::Vec(vec![0.2, 0.8])),
        a: None,
        b: None,
    };
    let am = cfg.build(2, 4).unwrap();
    assert_eq!(am.value(0, 3), 0.2);
    assert_eq!(am.value(1, 0), 0.8);
}
