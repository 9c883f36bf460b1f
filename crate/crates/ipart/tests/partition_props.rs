//! Property tests and independent oracles for the partition layer.

mod common;

use std::collections::BTreeSet;

use common::{ari_pair_counting, vi_entropy_oracle};
use ipart::partition::{
    adjusted_rand_index, compatible_set, enumerate_partitions, is_compatible,
    variation_of_information, GammaVector, Partition,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_partition<R: Rng>(m: usize, rng: &mut R) -> Partition {
    let labels: Vec<u32> = (0..m).map(|_| rng.gen_range(0..m as u32)).collect();
    Partition::from_labels(&labels).unwrap()
}

#[test]
fn ari_matches_pair_counting_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    for trial in 0..100 {
        let m = rng.gen_range(2..=12);
        let p = random_partition(m, &mut rng);
        let q = random_partition(m, &mut rng);
        let fast = adjusted_rand_index(&p, &q).unwrap();
        let slow = ari_pair_counting(&p, &q);
        assert!(
            (fast - slow).abs() <= 1e-12,
            "trial {trial}: {fast} vs {slow} for {p} / {q}"
        );
    }
}

#[test]
fn vi_matches_entropy_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(43);
    for _ in 0..100 {
        let m = rng.gen_range(2..=12);
        let p = random_partition(m, &mut rng);
        let q = random_partition(m, &mut rng);
        let fast = variation_of_information(&p, &q).unwrap();
        let slow = vi_entropy_oracle(&p, &q);
        assert!((fast - slow).abs() <= 1e-12, "{fast} vs {slow}");
    }
}

#[test]
fn vi_triangle_inequality_sampled() {
    let all: Vec<Partition> = enumerate_partitions(5).unwrap().collect();
    let mut rng = ChaCha8Rng::seed_from_u64(44);
    for _ in 0..10_000 {
        let a = &all[rng.gen_range(0..all.len())];
        let b = &all[rng.gen_range(0..all.len())];
        let c = &all[rng.gen_range(0..all.len())];
        let ab = variation_of_information(a, b).unwrap();
        let bc = variation_of_information(b, c).unwrap();
        let ac = variation_of_information(a, c).unwrap();
        assert!(ac <= ab + bc + 1e-12, "triangle broken: {a} {b} {c}");
    }
}

#[test]
fn center_always_compatible_and_bounded_by_log2m() {
    let mut rng = ChaCha8Rng::seed_from_u64(45);
    for _ in 0..50 {
        let m = rng.gen_range(2..=6);
        let rho0 = random_partition(m, &mut rng);
        let gamma = GammaVector::new((0..m).map(|_| rng.gen_bool(0.5)).collect());
        assert!(is_compatible(&rho0, &rho0, &gamma).unwrap());
        let set = compatible_set(&rho0, &gamma).unwrap();
        assert!(set.contains(&rho0));
        let q = random_partition(m, &mut rng);
        let v = variation_of_information(&rho0, &q).unwrap();
        assert!(v <= (m as f64).log2() + 1e-12);
    }
}

proptest! {
    #[test]
    fn canonicalize_is_idempotent(raw in prop::collection::vec(0u8..20, 1..24)) {
        let p = Partition::from_labels(&raw).unwrap();
        let again = Partition::from_labels(p.labels()).unwrap();
        prop_assert_eq!(p.labels(), again.labels());
        // Canonical form starts at one and grows by at most one.
        let labels = p.labels();
        prop_assert_eq!(labels[0], 1);
        let mut mx = 1;
        for &l in labels {
            prop_assert!(l <= mx + 1);
            mx = mx.max(l);
        }
    }

    #[test]
    fn reduce_composition_over_disjoint_sets(
        raw in prop::collection::vec(0u8..6, 4..14),
        mask_a in prop::collection::vec(any::<bool>(), 14),
        mask_b in prop::collection::vec(any::<bool>(), 14),
    ) {
        let p = Partition::from_labels(&raw).unwrap();
        let m = p.num_units();
        let a: BTreeSet<usize> = (0..m).filter(|&i| mask_a[i]).collect();
        let b: BTreeSet<usize> = (0..m).filter(|&i| mask_b[i] && !mask_a[i]).collect();
        let union: BTreeSet<usize> = a.union(&b).copied().collect();
        prop_assert_eq!(p.reduce(&a).remove_more(&b), p.reduce(&union));
    }

    #[test]
    fn vi_is_symmetric_and_zero_on_equal(
        raw_p in prop::collection::vec(0u8..5, 2..10),
        raw_q in prop::collection::vec(0u8..5, 2..10),
    ) {
        let n = raw_p.len().min(raw_q.len());
        let p = Partition::from_labels(&raw_p[..n]).unwrap();
        let q = Partition::from_labels(&raw_q[..n]).unwrap();
        let pq = variation_of_information(&p, &q).unwrap();
        let qp = variation_of_information(&q, &p).unwrap();
        prop_assert!((pq - qp).abs() < 1e-12);
        prop_assert_eq!(variation_of_information(&p, &p).unwrap(), 0.0);
        prop_assert_eq!(adjusted_rand_index(&p, &p).unwrap(), 1.0);
    }

    #[test]
    fn compatibility_matches_reduction_equality(
        raw_p in prop::collection::vec(0u8..4, 5),
        raw_q in prop::collection::vec(0u8..4, 5),
        bits in prop::collection::vec(any::<bool>(), 5),
    ) {
        let p = Partition::from_labels(&raw_p).unwrap();
        let q = Partition::from_labels(&raw_q).unwrap();
        let gamma = GammaVector::new(bits.clone());
        let removed: BTreeSet<usize> = (0..5).filter(|&i| !bits[i]).collect();
        let direct = p.reduce(&removed) == q.reduce(&removed);
        prop_assert_eq!(is_compatible(&p, &q, &gamma).unwrap(), direct);
    }
}
