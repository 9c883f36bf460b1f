//! Synthetic Gaussian panels with a known generating partition, plus the
//! merged and split initial-partition variants used in the fitting studies.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::likelihood::Dataset;
use crate::partition::Partition;

/// Equal-sized clusters with means spread as (-h, 0, h, 2h, 3h, ...) and a
/// common kernel standard deviation; the same partition generates every
/// time slice.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticSpec {
    pub m: usize,
    #[serde(default = "default_clusters")]
    pub n_clusters: usize,
    pub h: f64,
    #[serde(default = "default_sd")]
    pub sd: f64,
    #[serde(default = "default_t_len")]
    pub t_len: usize,
}

fn default_clusters() -> usize {
    4
}

fn default_sd() -> f64 {
    0.5
}

fn default_t_len() -> usize {
    1
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        if self.m == 0 || self.n_clusters == 0 || self.t_len == 0 {
            return Err(Error::InvalidParameter(
                "synthetic data needs positive m, clusters, and times".into(),
            ));
        }
        if self.m % self.n_clusters != 0 {
            return Err(Error::InvalidParameter(format!(
                "m = {} is not divisible into {} equal clusters",
                self.m, self.n_clusters
            )));
        }
        if self.sd <= 0.0 || !self.sd.is_finite() || !self.h.is_finite() {
            return Err(Error::InvalidParameter(
                "synthetic sd must be positive and h finite".into(),
            ));
        }
        Ok(())
    }

    pub fn cluster_means(&self) -> Vec<f64> {
        (0..self.n_clusters)
            .map(|j| (j as f64 - 1.0) * self.h)
            .collect()
    }

    /// The generating partition: consecutive blocks of equal size.
    pub fn true_partition(&self) -> Partition {
        let per = self.m / self.n_clusters;
        let labels: Vec<u32> = (0..self.m).map(|i| (i / per) as u32 + 1).collect();
        Partition::from_labels(&labels).expect("nonempty")
    }

    pub fn generate<R: Rng>(&self, rng: &mut R) -> Result<(Dataset, Partition)> {
        self.validate()?;
        let rho = self.true_partition();
        let means = self.cluster_means();
        let noise = Normal::new(0.0, self.sd).expect("positive sd");
        let mut y = Vec::with_capacity(self.t_len * self.m);
        for _t in 0..self.t_len {
            for i in 0..self.m {
                y.push(means[rho.cluster_of(i)] + noise.sample(rng));
            }
        }
        let data = Dataset::from_matrix(y, self.t_len, self.m, None, None)?;
        Ok((data, rho))
    }
}

/// Pairs up consecutive clusters of the generating partition: clusters
/// (1,2) merge, (3,4) merge, and so on; a trailing odd cluster stays.
pub fn merge_partition(rho_true: &Partition) -> Partition {
    let labels: Vec<u32> = rho_true
        .labels()
        .iter()
        .map(|&l| (l - 1) / 2 + 1)
        .collect();
    Partition::from_labels(&labels).expect("nonempty")
}

/// Splits every cluster of the generating partition into two random halves.
pub fn split_partition<R: Rng>(rho_true: &Partition, rng: &mut R) -> Partition {
    let k = rho_true.num_clusters();
    let m = rho_true.num_units();
    let mut labels: Vec<u32> = vec![0; m];
    for c in 0..k {
        let members: Vec<usize> = (0..m).filter(|&i| rho_true.cluster_of(i) == c).collect();
        // Random half goes to the companion cluster.
        let mut idx: Vec<usize> = (0..members.len()).collect();
        for j in (1..idx.len()).rev() {
            let r = rng.gen_range(0..=j);
            idx.swap(j, r);
        }
        let half = members.len() / 2;
        for (pos, &mi) in idx.iter().enumerate() {
            let unit = members[mi];
            labels[unit] = if pos < half {
                (2 * c + 1) as u32
            } else {
                (2 * c + 2) as u32
            };
        }
    }
    Partition::from_labels(&labels).expect("nonempty")
}
