//! Word-level tokenization.
//!
//! Text is lowercased, split on whitespace, and every punctuation character is
//! detached into its own token. The reserved markers `<unk>` and `<eos>` are
//! kept intact so that generated corpora survive a write/read cycle.

use super::vocab::{EOS_TOKEN, UNK_TOKEN};

pub fn tokenize(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    for word in text.split_whitespace() {
        let lower = word.to_lowercase();
        if lower == UNK_TOKEN || lower == EOS_TOKEN {
            out.push(lower);
            continue;
        }
        let mut current = String::new();
        for ch in lower.chars() {
            if is_punct(ch) {
                if !current.is_empty() {
                    out.push(std::mem::take(&mut current));
                }
                out.push(ch.to_string());
            } else {
                current.push(ch);
            }
        }
        if !current.is_empty() {
            out.push(current);
        }
    }
    out
}

/// Inverse of [`tokenize`] for already-tokenized text.
pub fn detokenize<S: AsRef<str>>(tokens: &[S]) -> String {
    let mut out = String::new();
    for (i, tok) in tokens.iter().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        out.push_str(tok.as_ref());
    }
    out
}

fn is_punct(ch: char) -> bool {
    !ch.is_alphanumeric() && !ch.is_whitespace()
}
