//! Small synthetic corpora with a controlled gender skew, used for
//! desk-scale experiments and tests.
//!
//! Every line is one sentence. Occupation sentences pick the male subject
//! with probability `male_share`; filler sentences lean the other way by the
//! same amount, so both genders are common but occupations are skewed. The
//! subject is repeated later in the sentence.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const OCCUPATIONS: &[&str] = &[
    "doctor", "engineer", "lawyer", "pilot", "scientist", "teacher", "nurse", "chef",
];

pub const FILLERS: &[&str] = &["person", "friend", "neighbour", "citizen", "local", "volunteer"];

const ADJECTIVES: &[&str] = &["good", "hard", "new", "busy", "quiet", "long"];

/// Gender pairs used by the generated text.
pub const PAIRS: &str = "she\the\nwoman\tman\n";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SkewedCorpus {
    /// Stop once at least this many tokens (excluding line ends) exist.
    pub tokens: usize,
    /// Probability that an occupation co-occurs with the male form.
    pub male_share: f64,
    pub seed: u64,
}

impl Default for SkewedCorpus {
    fn default() -> Self {
        Self {
            tokens: 50_000,
            male_share: 0.9,
            seed: 0,
        }
    }
}

impl SkewedCorpus {
    pub fn generate(&self) -> String {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let mut out = String::new();
        let mut count = 0;
        while count < self.tokens {
            let male_lean = rng.gen::<f64>() < self.male_share;
            let (f, m) = if rng.gen::<f64>() < 0.7 { ("she", "he") } else { ("woman", "man") };
            let adj = *ADJECTIVES.choose(&mut rng).unwrap();
            let kind = rng.gen::<f64>();
            let sentence: Vec<&str> = if kind < 0.3 {
                let noun = if rng.gen() {
                    *OCCUPATIONS.choose(&mut rng).unwrap()
                } else {
                    *FILLERS.choose(&mut rng).unwrap()
                };
                vec!["the", noun, "is", adj, "today", "."]
            } else if kind < 0.58 {
                let subj = if male_lean { m } else { f };
                let occ = *OCCUPATIONS.choose(&mut rng).unwrap();
                vec![subj, "is", "a", occ, "and", subj, "is", adj, "."]
            } else if kind < 0.75 {
                let subj = if male_lean { f } else { m };
                let filler = *FILLERS.choose(&mut rng).unwrap();
                vec![subj, "is", "a", filler, "and", subj, "is", adj, "."]
            } else if kind < 0.89 {
                let occ = *OCCUPATIONS.choose(&mut rng).unwrap();
                let noun = if male_lean { "man" } else { "woman" };
                vec!["the", occ, "is", "a", noun, "."]
            } else {
                let filler = *FILLERS.choose(&mut rng).unwrap();
                let noun = if male_lean { "woman" } else { "man" };
                vec!["the", filler, "is", "a", noun, "."]
            };
            count += sentence.len();
            out.push_str(&sentence.join(" "));
            out.push('\n');
        }
        out
    }
}
