//! Posterior samplers for the two rival informed priors at a single time
//! point: Gibbs allocation scans for the penalized prior (the penalty ratio
//! folds into the seating weights, so the intractable normalizer never
//! appears) and Metropolis-Hastings label moves for the sequential prior.

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::likelihood::{
    gibbs_update_cluster_params, obs_log_liks, params_log_prior, ClusterParams, Dataset,
    GaussianModel,
};
use crate::numeric::normal_log_pdf;
use crate::partition::{xlog2x, Partition};
use crate::priors::AlphaRegime;
use crate::seed::{domain, stream_rng};

use super::{sample_log_weights, Draw, DrawsArchive, McmcConfig};

/// Incremental contingency bookkeeping between the working clustering and a
/// fixed reference partition, exposing the VI in bits after O(1) updates.
struct ViTracker {
    counts: Vec<Vec<u32>>,
    row_sums: Vec<u32>,
    s_rows: f64,
    s_cells: f64,
    s_cols: f64,
    k_ref: usize,
    m: f64,
}

impl ViTracker {
    fn new(working: &[usize], n_clusters: usize, reference: &Partition) -> Self {
        let k_ref = reference.num_clusters();
        let mut counts = vec![vec![0u32; k_ref]; n_clusters];
        let mut row_sums = vec![0u32; n_clusters];
        for (i, &c) in working.iter().enumerate() {
            counts[c][reference.cluster_of(i)] += 1;
            row_sums[c] += 1;
        }
        let s_rows = row_sums.iter().map(|&n| xlog2x(n)).sum();
        let s_cells = counts
            .iter()
            .flat_map(|row| row.iter())
            .map(|&n| xlog2x(n))
            .sum();
        let s_cols = reference
            .cluster_sizes()
            .iter()
            .map(|&n| xlog2x(n))
            .sum();
        ViTracker {
            counts,
            row_sums,
            s_rows,
            s_cells,
            s_cols,
            k_ref,
            m: working.len() as f64,
        }
    }

    fn remove(&mut self, cluster: usize, ref_cluster: usize) {
        self.s_rows -= xlog2x(self.row_sums[cluster]);
        self.row_sums[cluster] -= 1;
        self.s_rows += xlog2x(self.row_sums[cluster]);
        let cell = &mut self.counts[cluster][ref_cluster];
        self.s_cells -= xlog2x(*cell);
        *cell -= 1;
        self.s_cells += xlog2x(*cell);
    }

    fn add(&mut self, cluster: usize, ref_cluster: usize) {
        if cluster == self.counts.len() {
            self.counts.push(vec![0u32; self.k_ref]);
            self.row_sums.push(0);
        }
        self.s_rows -= xlog2x(self.row_sums[cluster]);
        self.row_sums[cluster] += 1;
        self.s_rows += xlog2x(self.row_sums[cluster]);
        let cell = &mut self.counts[cluster][ref_cluster];
        self.s_cells -= xlog2x(*cell);
        *cell += 1;
        self.s_cells += xlog2x(*cell);
    }

    /// VI if the removed unit were placed into `cluster` (existing).
    fn vi_if_added(&self, cluster: usize, ref_cluster: usize) -> f64 {
        let s_rows = self.s_rows - xlog2x(self.row_sums[cluster])
            + xlog2x(self.row_sums[cluster] + 1);
        let cell = self.counts[cluster][ref_cluster];
        let s_cells = self.s_cells - xlog2x(cell) + xlog2x(cell + 1);
        (s_rows + self.s_cols - 2.0 * s_cells).max(0.0) / self.m
    }

    /// VI if the removed unit opened a fresh singleton cluster.
    fn vi_if_new(&self) -> f64 {
        (self.s_rows + self.s_cols - 2.0 * self.s_cells).max(0.0) / self.m
    }
}

struct SingleSliceState {
    labels: Vec<usize>,
    sizes: Vec<u32>,
    mu: Vec<f64>,
    sigma: Vec<f64>,
}

impl SingleSliceState {
    fn compact(&mut self) -> Vec<u32> {
        let mut rank = vec![usize::MAX; self.sizes.len()];
        let mut next = 0usize;
        let mut canonical = Vec::with_capacity(self.labels.len());
        for &c in &self.labels {
            if rank[c] == usize::MAX {
                rank[c] = next;
                next += 1;
            }
            canonical.push(rank[c] as u32 + 1);
        }
        let mut mu = vec![0.0; next];
        let mut sigma = vec![0.0; next];
        let mut sizes = vec![0u32; next];
        for c in 0..self.sizes.len() {
            if rank[c] != usize::MAX {
                mu[rank[c]] = self.mu[c];
                sigma[rank[c]] = self.sigma[c];
                sizes[rank[c]] = self.sizes[c];
            }
        }
        for l in &mut self.labels {
            *l = rank[*l];
        }
        self.mu = mu;
        self.sigma = sigma;
        self.sizes = sizes;
        canonical
    }
}

struct ComparisonRun<'a> {
    data: Option<&'a Dataset>,
    gauss: &'a GaussianModel,
    m: usize,
    a_sigma: f64,
    state: SingleSliceState,
    params: ClusterParams,
}

impl<'a> ComparisonRun<'a> {
    fn new(
        data: Option<&'a Dataset>,
        rho0: &Partition,
        gauss: &'a GaussianModel,
        cfg: &McmcConfig,
    ) -> Result<Self> {
        cfg.validate()?;
        gauss.validate()?;
        let m = rho0.num_units();
        if let Some(d) = data {
            if d.t_len() != 1 {
                return Err(Error::Config(
                    "comparison samplers handle a single time point".into(),
                ));
            }
            if d.num_units() != m {
                return Err(Error::DimensionMismatch {
                    what: "dataset units",
                    expected: m,
                    got: d.num_units(),
                });
            }
        }
        let init = Partition::one_cluster(m)?;
        let params = match data {
            Some(d) => ClusterParams::init(d, &[init.clone()], gauss),
            None => ClusterParams {
                mu: vec![vec![0.0]],
                sigma: vec![vec![1.0]],
                theta: vec![0.0],
                tau: vec![1.0],
                phi0: 0.0,
                lambda: 1.0,
            },
        };
        let a_sigma = data.map(|d| gauss.a_sigma(d)).unwrap_or(1.0);
        Ok(ComparisonRun {
            data,
            gauss,
            m,
            a_sigma,
            state: SingleSliceState {
                labels: vec![0; m],
                sizes: vec![m as u32],
                mu: params.mu[0].clone(),
                sigma: params.sigma[0].clone(),
            },
            params,
        })
    }

    fn loglik_term(&self, i: usize, mu: f64, sigma: f64) -> f64 {
        match self.data {
            Some(d) => normal_log_pdf(d.value(0, i), mu, sigma),
            None => 0.0,
        }
    }

    fn draw_aux_params<R: Rng>(&self, rng: &mut R) -> (f64, f64) {
        if self.data.is_none() {
            return (0.0, 1.0);
        }
        let std_norm = Normal::new(0.0, 1.0).expect("unit normal");
        let mu = self.params.theta[0] + std_norm.sample(rng) * self.params.tau[0];
        let sigma = self
            .gauss
            .known_sigma
            .unwrap_or_else(|| rng.gen::<f64>() * self.a_sigma);
        (mu, sigma)
    }

    fn update_params<R: Rng>(&mut self, canonical: &[u32], rng: &mut R) -> Result<()> {
        let p = Partition::from_canonical_labels(canonical.to_vec());
        if let Some(d) = self.data {
            self.params.mu[0] = self.state.mu.clone();
            self.params.sigma[0] = self.state.sigma.clone();
            gibbs_update_cluster_params(d, &[p], &mut self.params, self.gauss, rng)?;
            self.state.mu = self.params.mu[0].clone();
            self.state.sigma = self.params.sigma[0].clone();
        }
        Ok(())
    }

    fn snapshot(&self, chain: u32, iteration: u64, canonical: Vec<u32>, prior_lp: f64) -> Result<Draw> {
        let obs_loglik = match self.data {
            Some(d) => {
                let p = Partition::from_canonical_labels(canonical.clone());
                obs_log_liks(d, &[p], &self.params)?
            }
            None => Vec::new(),
        };
        let mut log_post: f64 = obs_loglik.iter().sum::<f64>() + prior_lp;
        if self.data.is_some() {
            log_post += params_log_prior(&self.params, self.gauss, 1);
        }
        Ok(Draw {
            chain,
            iteration,
            labels: vec![canonical],
            alpha_blocks: Vec::new(),
            obs_loglik,
            log_post,
        })
    }

    fn archive(&self, cfg: &McmcConfig, draws: Vec<Draw>) -> DrawsArchive {
        let (unit_ids, time_ids) = match self.data {
            Some(d) => (d.unit_ids().to_vec(), d.time_ids().to_vec()),
            None => (
                (1..=self.m).map(|i| format!("u{i}")).collect(),
                vec!["t1".to_string()],
            ),
        };
        DrawsArchive {
            t_len: 1,
            m: self.m,
            alpha_regime: AlphaRegime::Global,
            n_alpha_blocks: 0,
            unit_ids,
            time_ids,
            seed: cfg.seed,
            draws,
        }
    }
}

/// Posterior sampler under the penalized (centered) prior: Gibbs allocation
/// scans with the penalty ratio folded into the seating weights, plus the
/// usual parameter sweeps.
pub fn run_chain_cpp(
    data: Option<&Dataset>,
    rho0: &Partition,
    psi: f64,
    mass: f64,
    gauss: &GaussianModel,
    cfg: &McmcConfig,
    chain: u32,
) -> Result<DrawsArchive> {
    if psi < 0.0 || !psi.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "penalty must be nonnegative, got {psi}"
        )));
    }
    if mass <= 0.0 || !mass.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "CRP mass must be positive, got {mass}"
        )));
    }
    let mut run = ComparisonRun::new(data, rho0, gauss, cfg)?;
    let mut rng = stream_rng(cfg.seed, domain::CHAIN + chain as u64);
    let mut tracker = ViTracker::new(&run.state.labels, run.state.sizes.len(), rho0);
    let mut draws = Vec::with_capacity(cfg.n_snapshots() as usize);
    let mut weights: Vec<f64> = Vec::new();
    let mut targets: Vec<usize> = Vec::new();
    let mut aux_params: Vec<(f64, f64)> = Vec::new();

    for it in 1..=cfg.iters {
        for i in 0..run.m {
            let c_old = run.state.labels[i];
            let ref_c = rho0.cluster_of(i);
            run.state.sizes[c_old] -= 1;
            tracker.remove(c_old, ref_c);
            let was_singleton = run.state.sizes[c_old] == 0;

            weights.clear();
            targets.clear();
            aux_params.clear();
            for c in 0..run.state.sizes.len() {
                if run.state.sizes[c] == 0 {
                    continue;
                }
                let lw = (run.state.sizes[c] as f64).ln()
                    - psi * tracker.vi_if_added(c, ref_c)
                    + run.loglik_term(i, run.state.mu[c], run.state.sigma[c]);
                weights.push(lw);
                targets.push(c);
            }
            let lw_new_base = (mass / cfg.n_aux as f64).ln() - psi * tracker.vi_if_new();
            for a in 0..cfg.n_aux {
                let (amu, asig) = if a == 0 && was_singleton {
                    (run.state.mu[c_old], run.state.sigma[c_old])
                } else {
                    run.draw_aux_params(&mut rng)
                };
                aux_params.push((amu, asig));
                weights.push(lw_new_base + run.loglik_term(i, amu, asig));
                targets.push(run.state.sizes.len() + a);
            }

            let choice = sample_log_weights(&weights, &mut rng);
            let tgt = targets[choice];
            let c_new = if tgt >= run.state.sizes.len() {
                let (amu, asig) = aux_params[tgt - run.state.sizes.len()];
                run.state.sizes.push(0);
                run.state.mu.push(amu);
                run.state.sigma.push(asig);
                run.state.sizes.len() - 1
            } else {
                tgt
            };
            run.state.labels[i] = c_new;
            run.state.sizes[c_new] += 1;
            tracker.add(c_new, ref_c);
        }

        let canonical = run.state.compact();
        tracker = ViTracker::new(&run.state.labels, run.state.sizes.len(), rho0);
        run.update_params(&canonical, &mut rng)?;

        if it > cfg.burnin && (it - cfg.burnin) % cfg.thin == 0 {
            let p = Partition::from_canonical_labels(canonical.clone());
            let prior_lp = crate::priors::crp_log_eppf(&p, mass)?
                - psi * crate::partition::variation_of_information(&p, rho0)?;
            draws.push(run.snapshot(chain, it, canonical, prior_lp)?);
        }
    }
    Ok(run.archive(cfg, draws))
}

/// Posterior sampler under the sequential location-scale prior:
/// Metropolis-Hastings single-unit moves with a uniform target proposal;
/// fresh-cluster parameters are drawn from the base measure, which cancels
/// in the acceptance ratio.
pub fn run_chain_lsp(
    data: Option<&Dataset>,
    rho0: &Partition,
    nu: f64,
    gauss: &GaussianModel,
    cfg: &McmcConfig,
    chain: u32,
) -> Result<DrawsArchive> {
    if nu <= 0.0 || !nu.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "LSP scale must be positive, got {nu}"
        )));
    }
    let mut run = ComparisonRun::new(data, rho0, gauss, cfg)?;
    let mut rng = stream_rng(cfg.seed, domain::CHAIN + chain as u64);
    let mut draws = Vec::with_capacity(cfg.n_snapshots() as usize);

    let lsp_of = |labels: &[usize]| -> f64 {
        let canonical = canonical_from_working(labels);
        crate::priors::lsp_log_prob_canonical_labels(&canonical, rho0, nu)
    };
    let mut cur_lsp = lsp_of(&run.state.labels);
    let mut cand_labels: Vec<usize> = Vec::with_capacity(run.m);

    for it in 1..=cfg.iters {
        for i in 0..run.m {
            let c_old = run.state.labels[i];
            let targets: Vec<usize> = (0..run.state.sizes.len())
                .filter(|&c| run.state.sizes[c] > (c == c_old) as u32)
                .collect();
            let n_opts = targets.len() + 1;
            let pick = rng.gen_range(0..n_opts);

            let (c_new, new_params) = if pick < targets.len() {
                (targets[pick], None)
            } else {
                (usize::MAX, Some(run.draw_aux_params(&mut rng)))
            };

            cand_labels.clear();
            cand_labels.extend_from_slice(&run.state.labels);
            let cand_cluster = if c_new == usize::MAX {
                run.state.sizes.len()
            } else {
                c_new
            };
            cand_labels[i] = cand_cluster;

            let cand_lsp = lsp_of(&cand_labels);
            let (mu_new, sig_new) = match new_params {
                Some(p) => p,
                None => (run.state.mu[c_new], run.state.sigma[c_new]),
            };
            let delta = cand_lsp - cur_lsp
                + run.loglik_term(i, mu_new, sig_new)
                - run.loglik_term(i, run.state.mu[c_old], run.state.sigma[c_old]);
            if rng.gen::<f64>().ln() < delta {
                run.state.sizes[c_old] -= 1;
                if let Some((amu, asig)) = new_params {
                    run.state.sizes.push(1);
                    run.state.mu.push(amu);
                    run.state.sigma.push(asig);
                    run.state.labels[i] = run.state.sizes.len() - 1;
                } else {
                    run.state.labels[i] = c_new;
                    run.state.sizes[c_new] += 1;
                }
                cur_lsp = cand_lsp;
            }
        }

        let canonical = run.state.compact();
        run.update_params(&canonical, &mut rng)?;

        if it > cfg.burnin && (it - cfg.burnin) % cfg.thin == 0 {
            draws.push(run.snapshot(chain, it, canonical, cur_lsp)?);
        }
    }
    Ok(run.archive(cfg, draws))
}

fn canonical_from_working(labels: &[usize]) -> Vec<u32> {
    let mx = labels.iter().copied().max().unwrap_or(0);
    let mut rank = vec![u32::MAX; mx + 1];
    let mut next = 0u32;
    let mut out = Vec::with_capacity(labels.len());
    for &c in labels {
        if rank[c] == u32::MAX {
            rank[c] = next;
            next += 1;
        }
        out.push(rank[c] + 1);
    }
    out
}
