//! The posterior sampler for the informed sequence model: auxiliary-variable
//! allocation updates restricted to the compatible set, Bernoulli indicator
//! updates with the restricted-prior mass ratio, beta-binomial adherence
//! updates, and conjugate/slice parameter sweeps.
//!
//! One chain is strictly sequential; chains are independent streams of the
//! master seed and merge deterministically by chain index.

mod comparison;

pub use comparison::{run_chain_cpp, run_chain_lsp};

use std::path::Path;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::likelihood::{
    gibbs_update_cluster_params, obs_log_liks, params_log_prior, ClusterParams, Dataset,
    GaussianModel,
};
use crate::numeric::normal_log_pdf;
use crate::partition::{GammaVector, Partition};
use crate::priors::{gamma_log_prob, restricted_log_eppf, AlphaRegime, CrpTables};
use crate::seed::{domain, stream_rng};
use crate::temporal::{Dependence, SequenceModel};

/// Sampler run-length and bookkeeping configuration.
#[derive(Debug, Clone, PartialEq, Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McmcConfig {
    pub iters: u64,
    pub burnin: u64,
    #[serde(default = "default_thin")]
    pub thin: u64,
    #[serde(default = "default_n_aux")]
    pub n_aux: usize,
    pub seed: u64,
    #[serde(default = "default_chains")]
    pub chains: usize,
    /// Re-check the compatibility invariant after every sweep phase.
    #[serde(default)]
    pub validate_invariants: bool,
}

fn default_thin() -> u64 {
    1
}

fn default_n_aux() -> usize {
    3
}

fn default_chains() -> usize {
    1
}

impl McmcConfig {
    pub fn validate(&self) -> Result<()> {
        if self.iters == 0 || self.iters <= self.burnin {
            return Err(Error::Config(format!(
                "iters ({}) must exceed burnin ({})",
                self.iters, self.burnin
            )));
        }
        if self.thin == 0 || (self.iters - self.burnin) % self.thin != 0 {
            return Err(Error::Config(format!(
                "thin ({}) must divide iters - burnin ({})",
                self.thin,
                self.iters - self.burnin
            )));
        }
        if self.n_aux == 0 {
            return Err(Error::Config("n_aux must be at least 1".into()));
        }
        if self.chains == 0 {
            return Err(Error::Config("chains must be at least 1".into()));
        }
        Ok(())
    }

    pub fn n_snapshots(&self) -> u64 {
        (self.iters - self.burnin) / self.thin
    }
}

/// One thinned state snapshot.
#[derive(Debug, Clone)]
pub struct Draw {
    pub chain: u32,
    pub iteration: u64,
    /// Canonical labels per time slice.
    pub labels: Vec<Vec<u32>>,
    /// Current adherence values, one per tied block.
    pub alpha_blocks: Vec<f64>,
    /// Per-observation log densities, row-major (t, i); empty when the run
    /// had no data (prior-only).
    pub obs_loglik: Vec<f64>,
    /// Unnormalized log posterior (log joint) at the snapshot.
    pub log_post: f64,
}

/// The stored thinned draws of one or more chains.
#[derive(Debug, Clone)]
pub struct DrawsArchive {
    pub t_len: usize,
    pub m: usize,
    pub alpha_regime: AlphaRegime,
    pub n_alpha_blocks: usize,
    pub unit_ids: Vec<String>,
    pub time_ids: Vec<String>,
    pub seed: u64,
    pub draws: Vec<Draw>,
}

impl DrawsArchive {
    pub fn num_draws(&self) -> usize {
        self.draws.len()
    }

    pub fn partition(&self, b: usize, t: usize) -> Partition {
        Partition::from_canonical_labels(self.draws[b].labels[t].clone())
    }

    pub fn has_loglik(&self) -> bool {
        self.draws.first().is_some_and(|d| !d.obs_loglik.is_empty())
    }

    /// Merges per-chain archives; draws are ordered by (chain, iteration).
    pub fn merge(mut archives: Vec<DrawsArchive>) -> Result<DrawsArchive> {
        if archives.is_empty() {
            return Err(Error::EmptyInput("archives"));
        }
        let mut base = archives.remove(0);
        for a in archives {
            if a.t_len != base.t_len || a.m != base.m {
                return Err(Error::DimensionMismatch {
                    what: "archive shapes",
                    expected: base.m,
                    got: a.m,
                });
            }
            base.draws.extend(a.draws);
        }
        base.draws
            .sort_by_key(|d| (d.chain, d.iteration));
        Ok(base)
    }

    /// Persists the archive as a directory of CSV files plus metadata.
    pub fn write_dir(&self, dir: &Path, config_echo: Option<&serde_json::Value>) -> Result<()> {
        std::fs::create_dir_all(dir)?;

        let mut w = csv::Writer::from_path(dir.join("draws.csv"))?;
        w.write_record(["chain", "iteration", "t", "labels"])
            ?;
        for d in &self.draws {
            for t in 0..self.t_len {
                let labels = self.label_string(&d.labels[t]);
                w.write_record([
                    d.chain.to_string(),
                    d.iteration.to_string(),
                    self.time_ids[t].clone(),
                    labels,
                ])
                ?;
            }
        }
        w.flush()?;

        let mut w = csv::Writer::from_path(dir.join("alpha.csv"))?;
        w.write_record(["chain", "iteration", "block", "value"])
            ?;
        for d in &self.draws {
            for (blk, v) in d.alpha_blocks.iter().enumerate() {
                w.write_record([
                    d.chain.to_string(),
                    d.iteration.to_string(),
                    blk.to_string(),
                    v.to_string(),
                ])
                ?;
            }
        }
        w.flush()?;

        if self.has_loglik() {
            let mut w = csv::Writer::from_path(dir.join("loglik.csv"))?;
            let mut header = vec!["chain".to_string(), "iteration".to_string(), "t".to_string()];
            header.extend(self.unit_ids.iter().cloned());
            w.write_record(&header)?;
            for d in &self.draws {
                for t in 0..self.t_len {
                    let mut rec = vec![
                        d.chain.to_string(),
                        d.iteration.to_string(),
                        self.time_ids[t].clone(),
                    ];
                    for i in 0..self.m {
                        rec.push(d.obs_loglik[t * self.m + i].to_string());
                    }
                    w.write_record(&rec)?;
                }
            }
            w.flush()?;
        }

        let mut w = csv::Writer::from_path(dir.join("logpost.csv"))?;
        w.write_record(["chain", "iteration", "value"])?;
        for d in &self.draws {
            w.write_record([
                d.chain.to_string(),
                d.iteration.to_string(),
                d.log_post.to_string(),
            ])
            ?;
        }
        w.flush()?;

        let meta = serde_json::json!({
            "version": env!("CARGO_PKG_VERSION"),
            "seed": self.seed,
            "m": self.m,
            "t_len": self.t_len,
            "alpha": { "regime": self.alpha_regime, "n_blocks": self.n_alpha_blocks },
            "units": self.unit_ids,
            "times": self.time_ids,
            "n_draws": self.draws.len(),
            "config": config_echo,
        });
        let file = std::fs::File::create(dir.join("meta.json"))?;
        serde_json::to_writer_pretty(file, &meta)?;
        Ok(())
    }

    fn label_string(&self, labels: &[u32]) -> String {
        let strs: Vec<String> = labels.iter().map(|l| l.to_string()).collect();
        strs.join(",")
    }
}

/// Full latent state of one chain.
pub struct ChainState {
    pub labels: Vec<Vec<u32>>,
    pub gammas: Vec<GammaVector>,
    pub alpha: crate::priors::AlphaModel,
    pub params: ClusterParams,
    pub iteration: u64,
}

struct Sampler<'a> {
    data: Option<&'a Dataset>,
    model: &'a SequenceModel,
    gauss: &'a GaussianModel,
    n_aux: usize,
    validate: bool,
    m: usize,
    t_len: usize,
    tables: CrpTables,
    a_sigma: f64,
    state: ChainState,
}

impl<'a> Sampler<'a> {
    fn new(
        data: Option<&'a Dataset>,
        model: &'a SequenceModel,
        gauss: &'a GaussianModel,
        cfg: &McmcConfig,
    ) -> Result<Self> {
        model.validate()?;
        gauss.validate()?;
        cfg.validate()?;
        let (t_len, m) = (model.t_len(), model.num_units());
        if let Some(d) = data {
            if d.t_len() != t_len || d.num_units() != m {
                return Err(Error::DimensionMismatch {
                    what: "dataset shape",
                    expected: t_len * m,
                    got: d.t_len() * d.num_units(),
                });
            }
        }
        // Initial sequence: the center when informative, one cluster when not.
        let init = match &model.rho0 {
            Some(r) => r.labels().to_vec(),
            None => vec![1u32; m],
        };
        let labels = vec![init; t_len];
        // Units with adherence pinned at one start (and stay) fixed.
        let gammas: Vec<GammaVector> = (0..t_len)
            .map(|t| {
                GammaVector::new(
                    (0..m)
                        .map(|i| model.rho0.is_some() && model.alpha.value(t, i) >= 1.0)
                        .collect(),
                )
            })
            .collect();
        if model.rho0.is_none() && (0..t_len).any(|t| (0..m).any(|i| model.alpha.value(t, i) >= 1.0))
        {
            return Err(Error::Config(
                "adherence of one requires an initial partition".into(),
            ));
        }
        let params = match data {
            Some(d) => {
                let seq: Vec<Partition> = labels
                    .iter()
                    .map(|l| Partition::from_canonical_labels(l.clone()))
                    .collect();
                ClusterParams::init(d, &seq, gauss)
            }
            None => ClusterParams {
                mu: vec![vec![0.0; m]; t_len],
                sigma: vec![vec![1.0; m]; t_len],
                theta: vec![0.0; t_len],
                tau: vec![1.0; t_len],
                phi0: 0.0,
                lambda: 1.0,
            },
        };
        let a_sigma = data.map(|d| gauss.a_sigma(d)).unwrap_or(1.0);
        Ok(Sampler {
            data,
            model,
            gauss,
            n_aux: cfg.n_aux,
            validate: cfg.validate_invariants,
            m,
            t_len,
            tables: CrpTables::new(m, model.mass),
            a_sigma,
            state: ChainState {
                labels,
                gammas,
                alpha: model.alpha.clone(),
                params,
                iteration: 0,
            },
        })
    }

    fn center_labels(&self, t: usize) -> Option<&[u32]> {
        match self.model.dependence {
            Dependence::ConditionallyIndependent => self.model.rho0.as_ref().map(|r| r.labels()),
            Dependence::Markovian => {
                if t == 0 {
                    self.model.rho0.as_ref().map(|r| r.labels())
                } else {
                    Some(&self.state.labels[t - 1])
                }
            }
        }
    }

    /// First gamma row that actually constrains a slice (the baseline model
    /// has no center at time zero, so its first row carries no information).
    fn first_active_t(&self) -> usize {
        match (self.model.rho0.is_some(), self.model.dependence) {
            (true, _) => 0,
            (false, Dependence::Markovian) => 1,
            (false, Dependence::ConditionallyIndependent) => self.t_len,
        }
    }

    fn check_invariants(&self, phase: &str) {
        for t in 0..self.t_len {
            if let Some(center) = self.center_labels(t) {
                let ok = slice_compatible(&self.state.labels[t], center, &self.state.gammas[t]);
                assert!(ok, "compatibility broken at t={t} after {phase}");
            }
        }
    }

    fn update_allocations<R: Rng>(&mut self, rng: &mut R) -> Result<()> {
        for t in 0..self.t_len {
            self.update_allocations_at(t, rng)?;
        }
        if self.validate {
            self.check_invariants("allocations");
        }
        Ok(())
    }

    fn update_allocations_at<R: Rng>(&mut self, t: usize, rng: &mut R) -> Result<()> {
        let m = self.m;
        // Working copy with stable cluster ids; tombstones keep params slots.
        let mut wl: Vec<usize> = self.state.labels[t].iter().map(|&l| l as usize - 1).collect();
        let k0 = self.state.labels[t].iter().max().copied().unwrap_or(1) as usize;
        let mut sizes = vec![0u32; k0];
        for &c in &wl {
            sizes[c] += 1;
        }
        let prior_only = self.data.is_none();
        let (mut mu, mut sig) = if prior_only {
            (vec![0.0; k0], vec![1.0; k0])
        } else {
            (self.state.params.mu[t].clone(), self.state.params.sigma[t].clone())
        };
        let (theta_t, tau_t) = (self.state.params.theta[t], self.state.params.tau[t]);

        // Forward constraint bookkeeping (Markovian, interior slices): this
        // slice is the next slice's center, so units fixed there must keep
        // their co-clustering pattern here.
        let forward = if self.model.dependence == Dependence::Markovian && t + 1 < self.t_len {
            Some(t + 1)
        } else {
            None
        };
        let mut n_fix = vec![0u32; k0];
        if let Some(tn) = forward {
            for j in 0..m {
                if self.state.gammas[tn].is_fixed(j) {
                    n_fix[wl[j]] += 1;
                }
            }
        }

        let std_norm = Normal::new(0.0, 1.0).expect("unit normal");
        let mut weights: Vec<f64> = Vec::with_capacity(k0 + self.n_aux + 4);
        let mut targets: Vec<usize> = Vec::with_capacity(k0 + self.n_aux + 4);
        let mut aux_mu: Vec<f64> = Vec::with_capacity(self.n_aux);
        let mut aux_sig: Vec<f64> = Vec::with_capacity(self.n_aux);

        for i in 0..m {
            if self.state.gammas[t].is_fixed(i) {
                continue;
            }
            let c_old = wl[i];
            sizes[c_old] -= 1;
            let i_fixed_next = forward.is_some_and(|tn| self.state.gammas[tn].is_fixed(i));
            if i_fixed_next {
                n_fix[c_old] -= 1;
            }
            let was_singleton = sizes[c_old] == 0;

            // Partner cluster: where units tied to i at the next slice sit now.
            let mut partner_cluster: Option<usize> = None;
            if i_fixed_next {
                let tn = forward.unwrap();
                let li_next = self.state.labels[tn][i];
                for j in 0..m {
                    if j != i
                        && self.state.gammas[tn].is_fixed(j)
                        && self.state.labels[tn][j] == li_next
                    {
                        partner_cluster = Some(wl[j]);
                        break;
                    }
                }
            }

            let y = self.data.map(|d| d.value(t, i));
            weights.clear();
            targets.clear();
            aux_mu.clear();
            aux_sig.clear();

            match partner_cluster {
                Some(pc) => {
                    // Only the partners' cluster keeps the pattern intact.
                    let lw = (sizes[pc] as f64).ln()
                        + y.map_or(0.0, |y| normal_log_pdf(y, mu[pc], sig[pc]));
                    weights.push(lw);
                    targets.push(pc);
                }
                None => {
                    for c in 0..sizes.len() {
                        if sizes[c] == 0 || (i_fixed_next && n_fix[c] > 0) {
                            continue;
                        }
                        let lw = (sizes[c] as f64).ln()
                            + y.map_or(0.0, |y| normal_log_pdf(y, mu[c], sig[c]));
                        weights.push(lw);
                        targets.push(c);
                    }
                    let lw_new_base = (self.tables.mass / self.n_aux as f64).ln();
                    for a in 0..self.n_aux {
                        let (amu, asig) = if prior_only {
                            (0.0, 1.0)
                        } else if a == 0 && was_singleton {
                            (mu[c_old], sig[c_old])
                        } else {
                            let amu = theta_t + std_norm.sample(rng) * tau_t;
                            let asig = self
                                .gauss
                                .known_sigma
                                .unwrap_or_else(|| rng.gen::<f64>() * self.a_sigma);
                            (amu, asig)
                        };
                        aux_mu.push(amu);
                        aux_sig.push(asig);
                        let lw = lw_new_base + y.map_or(0.0, |y| normal_log_pdf(y, amu, asig));
                        weights.push(lw);
                        // Sentinel: sizes.len() + a means auxiliary a.
                        targets.push(sizes.len() + a);
                    }
                }
            }

            let choice = sample_log_weights(&weights, rng);
            let tgt = targets[choice];
            let c_new = if tgt >= sizes.len() {
                let a = tgt - sizes.len();
                sizes.push(0);
                mu.push(aux_mu[a]);
                sig.push(aux_sig[a]);
                n_fix.push(0);
                sizes.len() - 1
            } else {
                tgt
            };
            wl[i] = c_new;
            sizes[c_new] += 1;
            if i_fixed_next {
                n_fix[c_new] += 1;
            }
        }

        // Compact tombstones and put labels back in first-appearance order.
        let mut rank = vec![usize::MAX; sizes.len()];
        let mut next = 0usize;
        let mut new_labels = Vec::with_capacity(m);
        for &c in &wl {
            if rank[c] == usize::MAX {
                rank[c] = next;
                next += 1;
            }
            new_labels.push(rank[c] as u32 + 1);
        }
        self.state.labels[t] = new_labels;
        if !prior_only {
            let mut new_mu = vec![0.0; next];
            let mut new_sig = vec![0.0; next];
            for c in 0..sizes.len() {
                if rank[c] != usize::MAX {
                    new_mu[rank[c]] = mu[c];
                    new_sig[rank[c]] = sig[c];
                }
            }
            self.state.params.mu[t] = new_mu;
            self.state.params.sigma[t] = new_sig;
        }
        Ok(())
    }

    fn update_gammas<R: Rng>(&mut self, rng: &mut R) {
        for t in 0..self.t_len {
            let center: Vec<u32> = match self.center_labels(t) {
                Some(c) => c.to_vec(),
                None => continue,
            };
            for i in 0..self.m {
                let a = self.state.alpha.value(t, i);
                if a <= 0.0 {
                    self.state.gammas[t].set(i, false);
                    continue;
                }
                // Joining the fixed set must leave the slice compatible:
                // i's fixed co-members here and in the center must agree.
                let slice = &self.state.labels[t];
                let gamma = &self.state.gammas[t];
                let mut compatible = true;
                let mut n_center_partners = 0u32;
                let mut r0 = 0u32;
                for j in 0..self.m {
                    if j == i || !gamma.is_fixed(j) {
                        continue;
                    }
                    r0 += 1;
                    let same_here = slice[j] == slice[i];
                    let same_center = center[j] == center[i];
                    if same_here != same_center {
                        compatible = false;
                        break;
                    }
                    if same_center {
                        n_center_partners += 1;
                    }
                }
                if !compatible {
                    self.state.gammas[t].set(i, false);
                    continue;
                }
                if a >= 1.0 {
                    self.state.gammas[t].set(i, true);
                    continue;
                }
                // Restricted-prior mass ratio: adding i to the fixed set
                // multiplies the reduced-center normalizer by its predictive
                // seating probability.
                let denom = self.tables.mass + r0 as f64;
                let p_seat = if n_center_partners > 0 {
                    n_center_partners as f64 / denom
                } else {
                    self.tables.mass / denom
                };
                let w1 = a;
                let w0 = (1.0 - a) * p_seat;
                self.state.gammas[t].set(i, rng.gen::<f64>() * (w0 + w1) < w1);
            }
        }
        if self.validate {
            self.check_invariants("gammas");
        }
    }

    fn update_alpha<R: Rng>(&mut self, rng: &mut R) -> Result<()> {
        if self.state.alpha.is_fixed() {
            return Ok(());
        }
        let first = self.first_active_t();
        self.state.alpha.resample(&self.state.gammas, first, rng)
    }

    fn update_params<R: Rng>(&mut self, rng: &mut R) -> Result<()> {
        let data = match self.data {
            Some(d) => d,
            None => return Ok(()),
        };
        let seq: Vec<Partition> = self
            .state
            .labels
            .iter()
            .map(|l| Partition::from_canonical_labels(l.clone()))
            .collect();
        gibbs_update_cluster_params(data, &seq, &mut self.state.params, self.gauss, rng)
    }

    fn sweep<R: Rng>(&mut self, rng: &mut R) -> Result<()> {
        self.update_allocations(rng)?;
        self.update_gammas(rng);
        self.update_alpha(rng)?;
        self.update_params(rng)?;
        self.state.iteration += 1;
        Ok(())
    }

    /// Unnormalized log joint at the current state.
    fn log_post(&self, obs_loglik: &[f64]) -> f64 {
        let mut lp: f64 = obs_loglik.iter().sum();
        let mut scratch = vec![0u32; self.m];
        for t in 0..self.t_len {
            let slice = &self.state.labels[t];
            let mut sizes = vec![0u32; self.m];
            for &l in slice {
                sizes[l as usize - 1] += 1;
            }
            lp += self.tables.log_eppf_sizes(sizes.iter().copied());
            if let Some(center) = self.center_labels(t) {
                let gamma = &self.state.gammas[t];
                lp -= restricted_log_eppf(center, |i| gamma.is_fixed(i), &self.tables, &mut scratch);
                let alphas = self.state.alpha.row(t);
                lp += gamma_log_prob(gamma, &alphas).unwrap_or(f64::NEG_INFINITY);
            }
        }
        lp += self.state.alpha.log_prior();
        if self.data.is_some() {
            lp += params_log_prior(&self.state.params, self.gauss, self.t_len);
        }
        lp
    }

    fn snapshot(&self, chain: u32) -> Result<Draw> {
        let obs_loglik = match self.data {
            Some(d) => {
                let seq: Vec<Partition> = self
                    .state
                    .labels
                    .iter()
                    .map(|l| Partition::from_canonical_labels(l.clone()))
                    .collect();
                obs_log_liks(d, &seq, &self.state.params)?
            }
            None => Vec::new(),
        };
        Ok(Draw {
            chain,
            iteration: self.state.iteration,
            labels: self.state.labels.clone(),
            alpha_blocks: self.state.alpha.block_values().to_vec(),
            obs_loglik: obs_loglik.clone(),
            log_post: self.log_post(&obs_loglik),
        })
    }
}

/// Compatibility of one slice with its center under the slice's indicators.
pub(crate) fn slice_compatible(slice: &[u32], center: &[u32], gamma: &GammaVector) -> bool {
    crate::partition::restrictions_match(slice, center, |i| gamma.is_fixed(i))
}

fn sample_log_weights<R: Rng>(log_weights: &[f64], rng: &mut R) -> usize {
    let mx = log_weights
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    assert!(
        mx.is_finite(),
        "no admissible allocation target; invariant broken"
    );
    let probs: Vec<f64> = log_weights.iter().map(|&w| (w - mx).exp()).collect();
    let total: f64 = probs.iter().sum();
    let mut u = rng.gen::<f64>() * total;
    for (idx, &p) in probs.iter().enumerate() {
        u -= p;
        if u < 0.0 {
            return idx;
        }
    }
    probs.len() - 1
}

/// Runs a single chain; deterministic given (config, chain index).
pub fn run_chain(
    data: Option<&Dataset>,
    model: &SequenceModel,
    gauss: &GaussianModel,
    cfg: &McmcConfig,
    chain: u32,
) -> Result<DrawsArchive> {
    let mut sampler = Sampler::new(data, model, gauss, cfg)?;
    let mut rng: ChaCha8Rng = stream_rng(cfg.seed, domain::CHAIN + chain as u64);
    let mut draws = Vec::with_capacity(cfg.n_snapshots() as usize);
    for it in 1..=cfg.iters {
        sampler.sweep(&mut rng)?;
        if it > cfg.burnin && (it - cfg.burnin) % cfg.thin == 0 {
            draws.push(sampler.snapshot(chain)?);
        }
    }
    let (unit_ids, time_ids) = match data {
        Some(d) => (d.unit_ids().to_vec(), d.time_ids().to_vec()),
        None => (
            (1..=sampler.m).map(|i| format!("u{i}")).collect(),
            (1..=sampler.t_len).map(|t| format!("t{t}")).collect(),
        ),
    };
    Ok(DrawsArchive {
        t_len: sampler.t_len,
        m: sampler.m,
        alpha_regime: model.alpha.regime(),
        n_alpha_blocks: model.alpha.n_blocks(),
        unit_ids,
        time_ids,
        seed: cfg.seed,
        draws,
    })
}

/// Runs `cfg.chains` chains on independent streams and merges them.
pub fn run_chains(
    data: Option<&Dataset>,
    model: &SequenceModel,
    gauss: &GaussianModel,
    cfg: &McmcConfig,
) -> Result<DrawsArchive> {
    let archives: Vec<DrawsArchive> = (0..cfg.chains)
        .map(|c| run_chain(data, model, gauss, cfg, c as u32))
        .collect::<Result<_>>()?;
    DrawsArchive::merge(archives)
}
