//! Small numeric helpers shared across modules.

/// log(sum(exp(x))) computed stably; -inf for an empty or all -inf input.
pub fn logsumexp(xs: &[f64]) -> f64 {
    let mx = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !mx.is_finite() {
        return mx;
    }
    let s: f64 = xs.iter().map(|&x| (x - mx).exp()).sum();
    mx + s.ln()
}

/// Streaming log-sum-exp accumulator for long sums that should not be
/// materialized.
#[derive(Debug, Clone)]
pub struct OnlineLse {
    max: f64,
    acc: f64,
}

impl OnlineLse {
    pub fn new() -> Self {
        OnlineLse {
            max: f64::NEG_INFINITY,
            acc: 0.0,
        }
    }

    pub fn add(&mut self, term: f64) {
        if term == f64::NEG_INFINITY {
            return;
        }
        if term <= self.max {
            self.acc += (term - self.max).exp();
        } else {
            self.acc = self.acc * (self.max - term).exp() + 1.0;
            self.max = term;
        }
    }

    pub fn value(&self) -> f64 {
        if self.max == f64::NEG_INFINITY {
            f64::NEG_INFINITY
        } else {
            self.max + self.acc.ln()
        }
    }
}

impl Default for OnlineLse {
    fn default() -> Self {
        Self::new()
    }
}

pub const LN_2PI: f64 = 1.8378770664093453;

/// Log density of N(mean, sd^2) at x.
pub fn normal_log_pdf(x: f64, mean: f64, sd: f64) -> f64 {
    let z = (x - mean) / sd;
    -0.5 * (LN_2PI + z * z) - sd.ln()
}
