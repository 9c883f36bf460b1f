//! Joint priors over partition sequences: each time slice is an informed
//! CRP centered either on the initial partition (conditional independence)
//! or on the previous slice (Markovian dependence).  Includes forward
//! simulation and Monte Carlo sequence diagnostics.

use rand::Rng;

use crate::error::{Error, Result};
use crate::partition::{adjusted_rand_index, GammaVector, Partition};
use crate::priors::{crp_log_eppf, crp_sample, icrp_exact_log_prob, sample_given_gamma, AlphaModel};
use crate::seed::{domain, stream_rng};

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Dependence {
    ConditionallyIndependent,
    Markovian,
}

/// A sequence of partitions over a common unit set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartitionSequence {
    parts: Vec<Partition>,
}

impl PartitionSequence {
    pub fn new(parts: Vec<Partition>) -> Result<Self> {
        if parts.is_empty() {
            return Err(Error::EmptyInput("partition sequence"));
        }
        let m = parts[0].num_units();
        for p in &parts {
            if p.num_units() != m {
                return Err(Error::DimensionMismatch {
                    what: "sequence slice",
                    expected: m,
                    got: p.num_units(),
                });
            }
        }
        Ok(PartitionSequence { parts })
    }

    pub fn t_len(&self) -> usize {
        self.parts.len()
    }

    pub fn num_units(&self) -> usize {
        self.parts[0].num_units()
    }

    pub fn slice(&self, t: usize) -> &Partition {
        &self.parts[t]
    }

    pub fn slices(&self) -> &[Partition] {
        &self.parts
    }
}

/// The sequence prior: dependence structure, optional initial partition
/// (none means the no-information baseline, whose first slice is a plain
/// CRP), adherence model, and CRP mass.
#[derive(Debug, Clone)]
pub struct SequenceModel {
    pub dependence: Dependence,
    pub rho0: Option<Partition>,
    pub alpha: AlphaModel,
    pub mass: f64,
}

impl SequenceModel {
    pub fn num_units(&self) -> usize {
        self.alpha.num_units()
    }

    pub fn t_len(&self) -> usize {
        self.alpha.t_len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.mass <= 0.0 || !self.mass.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "CRP mass must be positive, got {}",
                self.mass
            )));
        }
        if let Some(r) = &self.rho0 {
            if r.num_units() != self.num_units() {
                return Err(Error::DimensionMismatch {
                    what: "initial partition",
                    expected: self.num_units(),
                    got: r.num_units(),
                });
            }
        }
        if self.t_len() == 0 {
            return Err(Error::EmptyInput("time dimension"));
        }
        Ok(())
    }

    /// The partition each slice is centered on, given the previous slice;
    /// `None` means the slice is a plain CRP (baseline at time zero).
    pub(crate) fn center_at<'a>(
        &'a self,
        t: usize,
        prev: Option<&'a Partition>,
    ) -> Option<&'a Partition> {
        match self.dependence {
            Dependence::ConditionallyIndependent => self.rho0.as_ref(),
            Dependence::Markovian => {
                if t == 0 {
                    self.rho0.as_ref()
                } else {
                    prev
                }
            }
        }
    }
}

/// Exact log prior of a sequence: the product over slices of the informed
/// CRP factor with that slice's probability row.  Exact-path cap applies
/// per slice.
pub fn sequence_log_prior(seq: &PartitionSequence, model: &SequenceModel) -> Result<f64> {
    model.validate()?;
    if seq.t_len() != model.t_len() {
        return Err(Error::DimensionMismatch {
            what: "sequence length",
            expected: model.t_len(),
            got: seq.t_len(),
        });
    }
    if seq.num_units() != model.num_units() {
        return Err(Error::DimensionMismatch {
            what: "sequence units",
            expected: model.num_units(),
            got: seq.num_units(),
        });
    }
    let mut lp = 0.0;
    let mut prev: Option<&Partition> = None;
    for t in 0..seq.t_len() {
        let slice = seq.slice(t);
        lp += match model.center_at(t, prev) {
            Some(center) => icrp_exact_log_prob(slice, center, &model.alpha.row(t), model.mass)?,
            None => crp_log_eppf(slice, model.mass)?,
        };
        prev = Some(slice);
    }
    Ok(lp)
}

/// Forward-simulates one sequence with its indicator matrix.  Random
/// adherence models are drawn fresh from their beta priors first, so the
/// output follows the full generative law.
pub fn simulate_sequence<R: Rng>(
    model: &SequenceModel,
    rng: &mut R,
) -> Result<(PartitionSequence, Vec<GammaVector>)> {
    model.validate()?;
    let m = model.num_units();
    let alpha = model.alpha.prior_draw(rng);
    let mut parts: Vec<Partition> = Vec::with_capacity(model.t_len());
    let mut gammas = Vec::with_capacity(model.t_len());
    for t in 0..model.t_len() {
        let center = model.center_at(t, parts.last());
        let (p, g) = match center {
            Some(center) => {
                let alphas = alpha.row(t);
                let bits: Vec<bool> = alphas.iter().map(|&a| rng.gen::<f64>() < a).collect();
                let gamma = GammaVector::new(bits);
                let p = sample_given_gamma(center, &gamma, model.mass, rng)?;
                (p, gamma)
            }
            None => (crp_sample(m, model.mass, rng)?, GammaVector::all_free(m)),
        };
        parts.push(p);
        gammas.push(g);
    }
    Ok((PartitionSequence::new(parts)?, gammas))
}

/// Monte Carlo means of the pairwise lagged ARI.
#[derive(Debug, Clone)]
pub struct LaggedAri {
    /// T x T matrix of mean ARI(rho_t, rho_s), row-major.
    pub matrix: Vec<f64>,
    pub t_len: usize,
    /// Mean ARI of each slice against the initial partition, when one exists.
    pub vs_rho0: Option<Vec<f64>>,
}

impl LaggedAri {
    pub fn at(&self, t: usize, s: usize) -> f64 {
        self.matrix[t * self.t_len + s]
    }
}

/// Mean pairwise lagged ARI across draws, plus the per-slice mean ARI
/// against `rho0` when given.
pub fn lagged_ari_matrix(
    draws: &[PartitionSequence],
    rho0: Option<&Partition>,
) -> Result<LaggedAri> {
    if draws.is_empty() {
        return Err(Error::EmptyInput("sequence draws"));
    }
    let t_len = draws[0].t_len();
    let mut matrix = vec![0.0f64; t_len * t_len];
    let mut vs = vec![0.0f64; t_len];
    for seq in draws {
        if seq.t_len() != t_len {
            return Err(Error::DimensionMismatch {
                what: "sequence length",
                expected: t_len,
                got: seq.t_len(),
            });
        }
        for t in 0..t_len {
            matrix[t * t_len + t] += 1.0;
            for s in t + 1..t_len {
                let a = adjusted_rand_index(seq.slice(t), seq.slice(s))?;
                matrix[t * t_len + s] += a;
                matrix[s * t_len + t] += a;
            }
            if let Some(r0) = rho0 {
                vs[t] += adjusted_rand_index(seq.slice(t), r0)?;
            }
        }
    }
    let n = draws.len() as f64;
    matrix.iter_mut().for_each(|x| *x /= n);
    vs.iter_mut().for_each(|x| *x /= n);
    Ok(LaggedAri {
        matrix,
        t_len,
        vs_rho0: rho0.map(|_| vs),
    })
}

/// Ensemble prior simulation: replicate sequences drawn from deterministic
/// per-replicate RNG streams, accumulated into per-slice co-clustering
/// frequencies, the lagged-ARI matrix, and per-replicate ARI paths against
/// the initial partition.
#[derive(Debug, Clone)]
pub struct PriorSimulation {
    pub t_len: usize,
    pub m: usize,
    pub replicates: usize,
    /// Per slice, an m x m co-clustering frequency matrix (row-major).
    pub cocluster: Vec<Vec<f64>>,
    pub lagged: LaggedAri,
    /// replicate-major: ari_paths[r][t] = ARI(rho_t, rho0); empty without rho0.
    pub ari_paths: Vec<Vec<f64>>,
    /// The simulated sequences themselves, by replicate.
    pub sequences: Vec<PartitionSequence>,
}

pub fn simulate_prior_ensemble(
    model: &SequenceModel,
    replicates: usize,
    seed: u64,
) -> Result<PriorSimulation> {
    if replicates == 0 {
        return Err(Error::InvalidParameter(
            "prior simulation needs at least one replicate".into(),
        ));
    }
    model.validate()?;
    let (t_len, m) = (model.t_len(), model.num_units());
    let mut cocluster = vec![vec![0.0f64; m * m]; t_len];
    let mut sequences = Vec::with_capacity(replicates);
    let mut ari_paths = Vec::new();
    for r in 0..replicates {
        let mut rng = stream_rng(seed, domain::REPLICATE + r as u64);
        let (seq, _) = simulate_sequence(model, &mut rng)?;
        for t in 0..t_len {
            let p = seq.slice(t);
            let acc = &mut cocluster[t];
            for i in 0..m {
                let ci = p.cluster_of(i);
                acc[i * m + i] += 1.0;
                for j in i + 1..m {
                    if p.cluster_of(j) == ci {
                        acc[i * m + j] += 1.0;
                        acc[j * m + i] += 1.0;
                    }
                }
            }
        }
        if let Some(r0) = &model.rho0 {
            let path: Vec<f64> = (0..t_len)
                .map(|t| adjusted_rand_index(seq.slice(t), r0))
                .collect::<Result<_>>()?;
            ari_paths.push(path);
        }
        sequences.push(seq);
    }
    let n = replicates as f64;
    for acc in &mut cocluster {
        acc.iter_mut().for_each(|x| *x /= n);
    }
    let lagged = lagged_ari_matrix(&sequences, model.rho0.as_ref())?;
    Ok(PriorSimulation {
        t_len,
        m,
        replicates,
        cocluster,
        lagged,
        ari_paths,
        sequences,
    })
}
