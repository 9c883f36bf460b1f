//! Adherence-probability models: one Bernoulli probability per (time, unit)
//! cell, tied into blocks by regime.  Global ties everything, time-local
//! ties across units within a time, unit-local ties across times within a
//! unit, and the unrestricted regime ties nothing.  Each block carries a
//! beta prior and updates by beta-binomial conjugacy from the indicator
//! draws it governs.

use rand::Rng;
use rand_distr::{Beta, Distribution};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::partition::GammaVector;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AlphaRegime {
    Global,
    TimeLocal,
    UnitLocal,
    TimeUnitLocal,
}

impl AlphaRegime {
    pub fn n_blocks(&self, t_len: usize, m: usize) -> usize {
        match self {
            AlphaRegime::Global => 1,
            AlphaRegime::TimeLocal => t_len,
            AlphaRegime::UnitLocal => m,
            AlphaRegime::TimeUnitLocal => t_len * m,
        }
    }

    pub fn block_of(&self, t: usize, i: usize, m: usize) -> usize {
        match self {
            AlphaRegime::Global => 0,
            AlphaRegime::TimeLocal => t,
            AlphaRegime::UnitLocal => i,
            AlphaRegime::TimeUnitLocal => t * m + i,
        }
    }
}

#[derive(Debug, Clone)]
pub struct AlphaModel {
    regime: AlphaRegime,
    t_len: usize,
    m: usize,
    /// Per-block beta hyperparameters; empty when the values are fixed.
    a: Vec<f64>,
    b: Vec<f64>,
    /// Current per-block values.
    values: Vec<f64>,
    fixed: bool,
}

impl AlphaModel {
    /// Fixed (non-random) values, one per block of the regime.
    pub fn fixed(regime: AlphaRegime, values: Vec<f64>, t_len: usize, m: usize) -> Result<Self> {
        let n = regime.n_blocks(t_len, m);
        if values.len() != n {
            return Err(Error::DimensionMismatch {
                what: "alpha values",
                expected: n,
                got: values.len(),
            });
        }
        super::icrp::validate_alphas(&values)?;
        Ok(AlphaModel {
            regime,
            t_len,
            m,
            a: Vec::new(),
            b: Vec::new(),
            values,
            fixed: true,
        })
    }

    /// A single fixed probability shared by every cell.
    pub fn fixed_global(alpha: f64, t_len: usize, m: usize) -> Result<Self> {
        AlphaModel::fixed(AlphaRegime::Global, vec![alpha], t_len, m)
    }

    /// Fixed per-unit probabilities shared across times.
    pub fn fixed_unit_local(alphas: Vec<f64>, t_len: usize) -> Result<Self> {
        let m = alphas.len();
        AlphaModel::fixed(AlphaRegime::UnitLocal, alphas, t_len, m)
    }

    /// Beta priors per block; values start at the prior means.
    pub fn beta(
        regime: AlphaRegime,
        a: Vec<f64>,
        b: Vec<f64>,
        t_len: usize,
        m: usize,
    ) -> Result<Self> {
        let n = regime.n_blocks(t_len, m);
        if a.len() != n || b.len() != n {
            return Err(Error::DimensionMismatch {
                what: "alpha hyperparameters",
                expected: n,
                got: if a.len() != n { a.len() } else { b.len() },
            });
        }
        if a.iter().chain(b.iter()).any(|&x| x <= 0.0 || !x.is_finite()) {
            return Err(Error::InvalidParameter(
                "beta hyperparameters must be positive".into(),
            ));
        }
        let values = a.iter().zip(&b).map(|(&ai, &bi)| ai / (ai + bi)).collect();
        Ok(AlphaModel {
            regime,
            t_len,
            m,
            a,
            b,
            values,
            fixed: false,
        })
    }

    /// Beta priors with a single (a, b) broadcast to every block.
    pub fn beta_broadcast(
        regime: AlphaRegime,
        a: f64,
        b: f64,
        t_len: usize,
        m: usize,
    ) -> Result<Self> {
        let n = regime.n_blocks(t_len, m);
        AlphaModel::beta(regime, vec![a; n], vec![b; n], t_len, m)
    }

    pub fn regime(&self) -> AlphaRegime {
        self.regime
    }

    pub fn t_len(&self) -> usize {
        self.t_len
    }

    pub fn num_units(&self) -> usize {
        self.m
    }

    pub fn is_fixed(&self) -> bool {
        self.fixed
    }

    pub fn n_blocks(&self) -> usize {
        self.values.len()
    }

    pub fn block_values(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, t: usize, i: usize) -> f64 {
        self.values[self.regime.block_of(t, i, self.m)]
    }

    /// The per-unit probabilities in force at time `t`.
    pub fn row(&self, t: usize) -> Vec<f64> {
        (0..self.m).map(|i| self.value(t, i)).collect()
    }

    /// Beta-binomial posterior parameters per block, counting indicator
    /// cells from `first_active_t` onward (earlier rows carry no
    /// information, e.g. time one of a model with no initial partition).
    pub fn posterior_params(
        &self,
        gammas: &[GammaVector],
        first_active_t: usize,
    ) -> Result<Vec<(f64, f64)>> {
        if self.fixed {
            return Err(Error::InvalidParameter(
                "alpha model is fixed; no posterior update".into(),
            ));
        }
        if gammas.len() != self.t_len {
            return Err(Error::DimensionMismatch {
                what: "gamma rows",
                expected: self.t_len,
                got: gammas.len(),
            });
        }
        let mut successes = vec![0u64; self.n_blocks()];
        let mut counts = vec![0u64; self.n_blocks()];
        for (t, row) in gammas.iter().enumerate().skip(first_active_t) {
            if row.len() != self.m {
                return Err(Error::DimensionMismatch {
                    what: "gamma row",
                    expected: self.m,
                    got: row.len(),
                });
            }
            for i in 0..self.m {
                let blk = self.regime.block_of(t, i, self.m);
                counts[blk] += 1;
                if row.is_fixed(i) {
                    successes[blk] += 1;
                }
            }
        }
        Ok((0..self.n_blocks())
            .map(|blk| {
                (
                    self.a[blk] + successes[blk] as f64,
                    self.b[blk] + (counts[blk] - successes[blk]) as f64,
                )
            })
            .collect())
    }

    /// Redraws every block from its beta-binomial full conditional.
    pub fn resample<R: Rng>(
        &mut self,
        gammas: &[GammaVector],
        first_active_t: usize,
        rng: &mut R,
    ) -> Result<()> {
        let params = self.posterior_params(gammas, first_active_t)?;
        for (blk, (a, b)) in params.into_iter().enumerate() {
            let dist = Beta::new(a, b).map_err(|e| {
                Error::InvalidParameter(format!("beta({a}, {b}) full conditional: {e}"))
            })?;
            self.values[blk] = dist.sample(rng);
        }
        Ok(())
    }

    /// A copy with every block value drawn fresh from its beta prior; fixed
    /// models are returned unchanged.  Forward simulation of the full
    /// generative model uses this per replicate.
    pub fn prior_draw<R: Rng>(&self, rng: &mut R) -> Self {
        if self.fixed {
            return self.clone();
        }
        let mut out = self.clone();
        for blk in 0..out.values.len() {
            let dist = Beta::new(out.a[blk], out.b[blk]).expect("validated hyperparameters");
            out.values[blk] = dist.sample(rng);
        }
        out
    }

    /// Log density of the current values under their beta priors; zero for
    /// fixed models.
    pub fn log_prior(&self) -> f64 {
        if self.fixed {
            return 0.0;
        }
        let mut lp = 0.0;
        for blk in 0..self.n_blocks() {
            let (a, b) = (self.a[blk], self.b[blk]);
            let x = self.values[blk].clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON);
            lp += (a - 1.0) * x.ln() + (b - 1.0) * (1.0 - x).ln() + ln_gamma(a + b)
                - ln_gamma(a)
                - ln_gamma(b);
        }
        lp
    }
}
