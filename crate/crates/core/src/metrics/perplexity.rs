use crate::error::{Error, Result};
use crate::model::LanguageModel;

/// `exp` of the mean negative log-likelihood of each token given its prefix,
/// with model state threaded through the whole stream. The first token is
/// only consumed, never scored.
pub fn perplexity<M: LanguageModel>(model: &M, heldout: &[usize]) -> Result<f64> {
    if heldout.len() < 2 {
        return Err(Error::undefined(
            "perplexity",
            "held-out text needs at least two tokens",
        ));
    }
    let mut state = model.initial_state();
    let mut nll = 0.0;
    for w in heldout.windows(2) {
        let dist = model.advance(&mut state, w[0])?;
        nll -= dist.log_p(w[1]);
    }
    Ok((nll / (heldout.len() - 1) as f64).exp())
}
