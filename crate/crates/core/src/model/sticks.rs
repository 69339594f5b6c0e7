//! Truncated stick-breaking statistics and the sense priors derived from them.
//!
//! Each English word carries `T` expected sense counts `n_1..n_T`. The
//! variational posterior over stick `k < T` is `Beta(1 + n_k, α + Σ_{r>k} n_r)`;
//! the last stick takes whatever mass remains.

use statrs::function::gamma::digamma;

/// A normalized distribution over the senses of one word occurrence.
#[derive(Clone, Debug, PartialEq)]
pub struct SenseDistribution(Vec<f64>);

impl SenseDistribution {
    /// Wraps probabilities that are already normalized.
    pub fn new(probs: Vec<f64>) -> Self {
        debug_assert!(probs.iter().all(|p| *p >= 0.0));
        SenseDistribution(probs)
    }

    /// Point mass on `sense`.
    pub fn one_hot(len: usize, sense: usize) -> Self {
        let mut probs = vec![0.0; len];
        probs[sense] = 1.0;
        SenseDistribution(probs)
    }

    pub fn probs(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Most probable sense; the lowest index wins ties.
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (k, &p) in self.0.iter().enumerate() {
            if p > self.0[best] {
                best = k;
            }
        }
        best
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }
}

impl std::ops::Index<usize> for SenseDistribution {
    type Output = f64;

    fn index(&self, k: usize) -> &f64 {
        &self.0[k]
    }
}

/// Beta parameters `(a_k, b_k)` of the first `T - 1` sticks.
pub fn beta_params(counts: &[f64], alpha: f64) -> Vec<(f64, f64)> {
    let t = counts.len();
    let mut tail = 0.0;
    let mut params = vec![(0.0, 0.0); t.saturating_sub(1)];
    for k in (0..t).rev() {
        if k + 1 < t {
            params[k] = (1.0 + counts[k], alpha + tail);
        }
        tail += counts[k];
    }
    params
}

/// `E_q[log p(z = k)]` for every sense `k`, written into `out`.
pub fn expected_log_prior_into(counts: &[f64], alpha: f64, out: &mut [f64]) {
    let t = counts.len();
    debug_assert_eq!(out.len(), t);
    // suffix sums give b_k without a second allocation
    let mut tail: f64 = counts.iter().sum();
    let mut log_rest = 0.0;
    for k in 0..t {
        tail -= counts[k];
        if k + 1 == t {
            out[k] = log_rest;
            break;
        }
        let a = 1.0 + counts[k];
        let b = alpha + tail.max(0.0);
        let log_ab = digamma(a + b);
        out[k] = log_rest + digamma(a) - log_ab;
        log_rest += digamma(b) - log_ab;
    }
}

pub fn expected_log_prior(counts: &[f64], alpha: f64) -> Vec<f64> {
    let mut out = vec![0.0; counts.len()];
    expected_log_prior_into(counts, alpha, &mut out);
    out
}

/// `p_k = E[β_k] Π_{r<k} (1 - E[β_r])`, the last sense taking the remainder.
pub fn expected_sense_prior(counts: &[f64], alpha: f64) -> SenseDistribution {
    let t = counts.len();
    let mut probs = vec![0.0; t];
    let mut rest = 1.0;
    for (k, (a, b)) in beta_params(counts, alpha).into_iter().enumerate() {
        let mean = a / (a + b);
        probs[k] = rest * mean;
        rest *= 1.0 - mean;
    }
    if t > 0 {
        probs[t - 1] = rest;
    }
    SenseDistribution(probs)
}

/// Senses whose expected prior probability exceeds `threshold`.
pub fn active_senses(counts: &[f64], alpha: f64, threshold: f64) -> Vec<usize> {
    expected_sense_prior(counts, alpha)
        .probs()
        .iter()
        .enumerate()
        .filter(|(_, &p)| p > threshold)
        .map(|(k, _)| k)
        .collect()
}

/// Expected sense-assignment counts for every English word.
#[derive(Clone, Debug, PartialEq)]
pub struct StickStats {
    senses: usize,
    counts: Vec<f64>,
}

impl StickStats {
    pub fn new(words: usize, senses: usize) -> Self {
        StickStats {
            senses,
            counts: vec![0.0; words * senses],
        }
    }

    pub(crate) fn from_raw(senses: usize, counts: Vec<f64>) -> Self {
        StickStats { senses, counts }
    }

    pub fn senses(&self) -> usize {
        self.senses
    }

    pub fn words(&self) -> usize {
        self.counts.len() / self.senses.max(1)
    }

    pub fn counts(&self, w: u32) -> &[f64] {
        let start = w as usize * self.senses;
        &self.counts[start..start + self.senses]
    }

    pub fn counts_mut(&mut self, w: u32) -> &mut [f64] {
        let start = w as usize * self.senses;
        &mut self.counts[start..start + self.senses]
    }

    pub fn raw(&self) -> &[f64] {
        &self.counts
    }

    /// Adds one occurrence's posterior to the counts of `w`.
    ///
    /// With `decay = Some(γ)` the old counts are first scaled by `1 - γ`.
    pub fn observe(&mut self, w: u32, posterior: &[f64], decay: Option<f64>) {
        let counts = self.counts_mut(w);
        if let Some(gamma) = decay {
            for c in counts.iter_mut() {
                *c *= 1.0 - gamma;
            }
        }
        for (c, p) in counts.iter_mut().zip(posterior) {
            *c += p;
        }
    }
}
