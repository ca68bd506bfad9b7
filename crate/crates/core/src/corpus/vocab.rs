use std::collections::HashMap;
use std::path::Path;

use crate::error::{Error, Result};

pub const UNK_TOKEN: &str = "<unk>";
pub const EOS_TOKEN: &str = "<eos>";

/// Bidirectional token/id map. Ids 0 and 1 are reserved for `<unk>` and `<eos>`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    tokens: Vec<String>,
    ids: HashMap<String, usize>,
    min_count: usize,
}

impl Vocabulary {
    pub const UNK: usize = 0;
    pub const EOS: usize = 1;

    /// Builds a vocabulary ordered by descending frequency, ties broken
    /// lexicographically. Tokens rarer than `min_count` resolve to `<unk>`.
    pub fn build<S: AsRef<str>>(tokens: &[S], min_count: usize, max_size: Option<usize>) -> Self {
        let min_count = min_count.max(1);
        let mut counts: HashMap<&str, usize> = HashMap::new();
        for tok in tokens {
            let tok = tok.as_ref();
            if tok == UNK_TOKEN || tok == EOS_TOKEN || tok.is_empty() {
                continue;
            }
            *counts.entry(tok).or_default() += 1;
        }
        let mut ranked: Vec<(&str, usize)> = counts
            .into_iter()
            .filter(|&(_, c)| c >= min_count)
            .collect();
        ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
        if let Some(cap) = max_size {
            ranked.truncate(cap.saturating_sub(2));
        }

        let mut list = vec![UNK_TOKEN.to_string(), EOS_TOKEN.to_string()];
        list.extend(ranked.into_iter().map(|(t, _)| t.to_string()));
        Self::from_list(list, min_count).expect("freshly built vocabulary is well formed")
    }

    /// Rebuilds a vocabulary from its stored token list (reserved tokens first).
    pub fn from_list(tokens: Vec<String>, min_count: usize) -> Result<Self> {
        if tokens.len() < 2 || tokens[Self::UNK] != UNK_TOKEN || tokens[Self::EOS] != EOS_TOKEN {
            return Err(Error::parse(1, "vocabulary must start with <unk> and <eos>"));
        }
        let mut ids = HashMap::with_capacity(tokens.len());
        for (i, tok) in tokens.iter().enumerate() {
            if tok.is_empty() || tok.chars().any(char::is_whitespace) {
                return Err(Error::parse(i + 1, format!("invalid token {tok:?}")));
            }
            if ids.insert(tok.clone(), i).is_some() {
                return Err(Error::parse(i + 1, format!("duplicate token {tok:?}")));
            }
        }
        Ok(Self {
            tokens,
            ids,
            min_count,
        })
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn min_count(&self) -> usize {
        self.min_count
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    /// Id of `token`, or `<unk>` when absent.
    pub fn id(&self, token: &str) -> usize {
        self.ids.get(token).copied().unwrap_or(Self::UNK)
    }

    pub fn get(&self, token: &str) -> Option<usize> {
        self.ids.get(token).copied()
    }

    pub fn token(&self, id: usize) -> Option<&str> {
        self.tokens.get(id).map(String::as_str)
    }

    pub fn contains(&self, token: &str) -> bool {
        self.ids.contains_key(token)
    }

    pub fn encode<S: AsRef<str>>(&self, tokens: &[S]) -> Vec<usize> {
        tokens.iter().map(|t| self.id(t.as_ref())).collect()
    }

    pub fn decode(&self, ids: &[usize]) -> Vec<&str> {
        ids.iter()
            .map(|&id| self.token(id).unwrap_or(UNK_TOKEN))
            .collect()
    }

    /// One token per line; line number is the id.
    pub fn write_to(&self, path: &Path) -> Result<()> {
        let mut text = self.tokens.join("\n");
        text.push('\n');
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn read_from(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_list(text.lines().map(str::to_string).collect(), 1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reserved_then_frequency_order() {
        let v = Vocabulary::build(&["a", "a", "b"], 1, None);
        assert_eq!(v.tokens(), &["<unk>", "<eos>", "a", "b"]);
        assert_ne!(Vocabulary::UNK, Vocabulary::EOS);
    }

    #[test]
    fn min_count_maps_rare_to_unk() {
        let v = Vocabulary::build(&["a", "a", "b"], 2, None);
        assert_eq!(v.len(), 3);
        assert_eq!(v.id("b"), Vocabulary::UNK);
        assert_eq!(v.id("a"), 2);
    }

    #[test]
    fn ties_are_lexicographic_and_builds_deterministic() {
        let toks = ["z", "y", "x", "y", "z"];
        let a = Vocabulary::build(&toks, 1, None);
        let b = Vocabulary::build(&toks, 1, None);
        assert_eq!(a, b);
        assert_eq!(a.tokens(), &["<unk>", "<eos>", "y", "z", "x"]);
    }

    #[test]
    fn ids_are_a_bijection() {
        let v = Vocabulary::build(&["q", "w", "e", "w"], 1, None);
        for (i, t) in v.tokens().iter().enumerate() {
            assert_eq!(v.id(t), i);
        }
    }

    #[test]
    fn cap_counts_reserved_tokens() {
        let v = Vocabulary::build(&["a", "a", "a", "b", "b", "c"], 1, Some(4));
        assert_eq!(v.tokens(), &["<unk>", "<eos>", "a", "b"]);
    }

    #[test]
    fn reserved_strings_in_input_are_not_duplicated() {
        let v = Vocabulary::build(&["<eos>", "a", "<eos>"], 1, None);
        assert_eq!(v.len(), 3);
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("vocab.txt");
        let v = Vocabulary::build(&["he", "is", "a", "doctor", "."], 1, None);
        v.write_to(&path).unwrap();
        let back = Vocabulary::read_from(&path).unwrap();
        assert_eq!(back.tokens(), v.tokens());
    }

    #[test]
    fn rejects_malformed_lists() {
        assert!(Vocabulary::from_list(vec!["a".into()], 1).is_err());
        let dup = vec!["<unk>".into(), "<eos>".into(), "a".into(), "a".into()];
        assert!(Vocabulary::from_list(dup, 1).is_err());
    }
}
