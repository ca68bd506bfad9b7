/// Output distribution over the vocabulary. Log-probabilities are kept
/// alongside probabilities so that log-ratios stay finite even when a
/// probability underflows.
#[derive(Debug, Clone, PartialEq)]
pub struct SoftmaxDistribution {
    probs: Vec<f64>,
    log_probs: Vec<f64>,
}

impl SoftmaxDistribution {
    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn log_probs(&self) -> &[f64] {
        &self.log_probs
    }

    pub fn p(&self, id: usize) -> f64 {
        self.probs[id]
    }

    pub fn log_p(&self, id: usize) -> f64 {
        self.log_probs[id]
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    /// Wraps an explicit probability vector (test oracles, synthetic models).
    /// Entries must be positive; they are renormalized.
    pub fn from_probs(probs: Vec<f64>) -> Self {
        let total: f64 = probs.iter().sum();
        let log_total = total.ln();
        let log_probs = probs.iter().map(|p| p.ln() - log_total).collect();
        let probs = probs.iter().map(|p| p / total).collect();
        Self { probs, log_probs }
    }

    pub fn into_probs(self) -> Vec<f64> {
        self.probs
    }
}

/// Max-shifted exponential normalization.
pub fn softmax(logits: &[f64]) -> SoftmaxDistribution {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = logits.iter().map(|z| (z - max).exp()).sum();
    let log_norm = max + sum.ln();
    let log_probs: Vec<f64> = logits.iter().map(|z| z - log_norm).collect();
    let probs = log_probs.iter().map(|l| l.exp()).collect();
    SoftmaxDistribution { probs, log_probs }
}
