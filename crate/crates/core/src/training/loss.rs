//! Loss terms: cross-entropy, the pair-equalizing bias loss, and the
//! embedding projection penalty used as the REG comparison method.

use serde::{Deserialize, Serialize};

use crate::corpus::GenderLexicon;
use crate::error::{Error, Result};
use crate::model::{Matrix, SoftmaxDistribution};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LossBreakdown {
    /// Mean cross-entropy over the window.
    pub ce: f64,
    /// Mean bias loss over the window.
    pub bias: f64,
    /// Embedding projection penalty (unweighted).
    pub reg: f64,
    /// `ce + lambda * bias + reg_coeff * reg`
    pub total: f64,
}

impl LossBreakdown {
    pub fn new(ce: f64, bias: f64, reg: f64, lambda: f64, reg_coeff: f64) -> Self {
        Self {
            ce,
            bias,
            reg,
            total: ce + lambda * bias + reg_coeff * reg,
        }
    }
}

/// `-ln p[truth]`.
pub fn cross_entropy(dist: &SoftmaxDistribution, truth: usize) -> f64 {
    -dist.log_p(truth)
}

/// Mean over pairs of `|ln(p[f] / p[m])|`. Zero for an empty lexicon.
pub fn bias_loss(dist: &SoftmaxDistribution, lexicon: &GenderLexicon) -> f64 {
    if lexicon.is_empty() {
        return 0.0;
    }
    let sum: f64 = lexicon
        .pairs()
        .iter()
        .map(|p| (dist.log_p(p.female) - dist.log_p(p.male)).abs())
        .sum();
    sum / lexicon.len() as f64
}

/// Gradient of [`bias_loss`] with respect to the pre-softmax logits.
///
/// The softmax normalizer cancels in each log-ratio, so the gradient is
/// `(1/G) sum_i sign_i (e_f - e_m)`: nonzero only at gendered coordinates.
/// Exactly tied pairs contribute zero.
pub fn bias_loss_grad_logits(dist: &SoftmaxDistribution, lexicon: &GenderLexicon) -> Vec<f64> {
    let mut grad = vec![0.0; dist.len()];
    add_bias_grad(dist, lexicon, 1.0, &mut grad);
    grad
}

pub(crate) fn add_bias_grad(
    dist: &SoftmaxDistribution,
    lexicon: &GenderLexicon,
    scale: f64,
    grad: &mut [f64],
) {
    if lexicon.is_empty() {
        return;
    }
    let w = scale / lexicon.len() as f64;
    for p in lexicon.pairs() {
        let diff = dist.log_p(p.female) - dist.log_p(p.male);
        if diff > 0.0 {
            grad[p.female] += w;
            grad[p.male] -= w;
        } else if diff < 0.0 {
            grad[p.female] -= w;
            grad[p.male] += w;
        }
    }
}

/// Mean over a window of `CE(t) + lambda * L_B(t)`, components reported
/// separately.
pub fn combined_loss(
    window: &[(SoftmaxDistribution, usize)],
    lexicon: &GenderLexicon,
    lambda: f64,
) -> LossBreakdown {
    assert!(!window.is_empty(), "combined_loss needs at least one step");
    let n = window.len() as f64;
    let ce = window.iter().map(|(d, y)| cross_entropy(d, *y)).sum::<f64>() / n;
    let bias = window.iter().map(|(d, _)| bias_loss(d, lexicon)).sum::<f64>() / n;
    LossBreakdown::new(ce, bias, 0.0, lambda, 0.0)
}

/// Unit gender direction: normalized mean of `E[m_i] - E[f_i]`, plus the
/// norm before normalization.
pub fn gender_direction(embedding: &Matrix, lexicon: &GenderLexicon) -> Result<(Vec<f64>, f64)> {
    if lexicon.is_empty() {
        return Err(Error::NoGenderPairs);
    }
    let mut v = vec![0.0; embedding.cols()];
    for p in lexicon.pairs() {
        for ((acc, m), f) in v
            .iter_mut()
            .zip(embedding.row(p.male))
            .zip(embedding.row(p.female))
        {
            *acc += m - f;
        }
    }
    let g = lexicon.len() as f64;
    v.iter_mut().for_each(|x| *x /= g);
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm == 0.0 || !norm.is_finite() {
        return Err(Error::DegenerateDirection);
    }
    v.iter_mut().for_each(|x| *x /= norm);
    Ok((v, norm))
}

/// Mean squared projection of the target words' embeddings onto the gender
/// direction.
pub fn reg_loss(embedding: &Matrix, lexicon: &GenderLexicon, targets: &[usize]) -> Result<f64> {
    let (dir, _) = gender_direction(embedding, lexicon)?;
    if targets.is_empty() {
        return Ok(0.0);
    }
    let sum: f64 = targets
        .iter()
        .map(|&w| {
            let proj: f64 = embedding.row(w).iter().zip(&dir).map(|(a, b)| a * b).sum();
            proj * proj
        })
        .sum();
    Ok(sum / targets.len() as f64)
}

/// [`reg_loss`] and its gradient with respect to the embedding matrix,
/// including the dependence of the direction on the gendered rows.
pub fn reg_loss_grad(
    embedding: &Matrix,
    lexicon: &GenderLexicon,
    targets: &[usize],
) -> Result<(f64, Matrix)> {
    let (dir, norm) = gender_direction(embedding, lexicon)?;
    let mut grad = Matrix::zeros(embedding.rows(), embedding.cols());
    if targets.is_empty() {
        return Ok((0.0, grad));
    }
    let scale = 1.0 / targets.len() as f64;
    let mut loss = 0.0;
    // a = d loss / d dir
    let mut a = vec![0.0; dir.len()];
    for &w in targets {
        let row = embedding.row(w);
        let proj: f64 = row.iter().zip(&dir).map(|(x, y)| x * y).sum();
        loss += proj * proj;
        for (g, d) in grad.row_mut(w).iter_mut().zip(&dir) {
            *g += 2.0 * scale * proj * d;
        }
        for (ak, x) in a.iter_mut().zip(row) {
            *ak += 2.0 * scale * proj * x;
        }
    }
    // d dir / d v = (I - dir dir^T) / |v|
    let a_dot: f64 = a.iter().zip(&dir).map(|(x, y)| x * y).sum();
    let dv: Vec<f64> = a
        .iter()
        .zip(&dir)
        .map(|(ak, dk)| (ak - a_dot * dk) / norm)
        .collect();
    let g = lexicon.len() as f64;
    for p in lexicon.pairs() {
        for (k, d) in dv.iter().enumerate() {
            grad.row_mut(p.male)[k] += d / g;
            grad.row_mut(p.female)[k] -= d / g;
        }
    }
    Ok((loss * scale, grad))
}
