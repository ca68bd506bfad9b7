//! Corpus ingestion: tokenization, vocabulary, gender lexicon and
//! counterfactual augmentation.

mod cda;
mod lexicon;
mod tokenize;
mod vocab;

pub use cda::cda_augment;
pub use lexicon::{Gender, GenderLexicon, GenderPair, PairFile};
pub use tokenize::{detokenize, tokenize};
pub use vocab::{Vocabulary, EOS_TOKEN, UNK_TOKEN};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    Raw,
    Augmented,
    Generated,
}

/// A sequence of token ids, optionally split into documents. Co-occurrence
/// windows never cross a document start.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenStream {
    pub ids: Vec<usize>,
    pub source: Source,
    doc_starts: Vec<usize>,
}

impl TokenStream {
    pub fn new(ids: Vec<usize>, source: Source) -> Self {
        let doc_starts = if ids.is_empty() { Vec::new() } else { vec![0] };
        Self {
            ids,
            source,
            doc_starts,
        }
    }

    /// Concatenates documents, remembering where each begins. Empty
    /// documents are skipped.
    pub fn from_documents<I>(docs: I, source: Source) -> Self
    where
        I: IntoIterator<Item = Vec<usize>>,
    {
        let mut ids = Vec::new();
        let mut doc_starts = Vec::new();
        for doc in docs {
            if doc.is_empty() {
                continue;
            }
            doc_starts.push(ids.len());
            ids.extend(doc);
        }
        Self {
            ids,
            source,
            doc_starts,
        }
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn documents(&self) -> impl Iterator<Item = &[usize]> + '_ {
        let ends = self
            .doc_starts
            .iter()
            .skip(1)
            .copied()
            .chain(std::iter::once(self.ids.len()));
        self.doc_starts
            .iter()
            .zip(ends)
            .map(move |(&s, e)| &self.ids[s..e])
    }

    pub fn num_documents(&self) -> usize {
        self.doc_starts.len()
    }

    pub fn check_range(&self, vocab_size: usize) -> Result<()> {
        match self.ids.iter().find(|&&id| id >= vocab_size) {
            Some(&id) => Err(Error::TokenOutOfRange { id, vocab_size }),
            None => Ok(()),
        }
    }

    /// Splits off the final `fraction` of tokens as a held-out stream.
    pub fn split_tail(&self, fraction: f64) -> (TokenStream, TokenStream) {
        let held = ((self.ids.len() as f64) * fraction).ceil() as usize;
        let cut = self.ids.len().saturating_sub(held);
        (
            TokenStream::new(self.ids[..cut].to_vec(), self.source),
            TokenStream::new(self.ids[cut..].to_vec(), self.source),
        )
    }
}

/// Tokenizes each line of `text` into one document, appending `<eos>` to
/// every non-empty line.
pub fn encode_lines(text: &str, vocab: &Vocabulary, source: Source) -> TokenStream {
    TokenStream::from_documents(
        text.lines().filter_map(|line| {
            let toks = tokenize(line);
            if toks.is_empty() {
                return None;
            }
            let mut ids = vocab.encode(&toks);
            ids.push(Vocabulary::EOS);
            Some(ids)
        }),
        source,
    )
}

/// All tokens of `text` with an `<eos>` marker after every non-empty line.
pub fn tokenize_lines(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    for line in text.lines() {
        let toks = tokenize(line);
        if toks.is_empty() {
            continue;
        }
        out.extend(toks);
        out.push(EOS_TOKEN.to_string());
    }
    out
}
