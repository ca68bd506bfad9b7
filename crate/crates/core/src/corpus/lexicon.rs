//! Gender-pair dictionary.
//!
//! File format: `female<TAB>male` per line, `#` comments, blank lines ignored.
//! A `[swap-only]` line opens a section of one-directional `from<TAB>to`
//! entries used by counterfactual augmentation for forms without a clean
//! partner (e.g. `him<TAB>her`). Swap-only tokens are not gendered for metric
//! purposes; only pair members are.

use std::collections::{BTreeSet, HashMap};
use std::path::Path;

use log::warn;

use super::vocab::Vocabulary;
use crate::error::{Error, Result};

const SWAP_ONLY_HEADER: &str = "[swap-only]";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Gender {
    Female,
    Male,
}

impl Gender {
    pub fn index(self) -> usize {
        match self {
            Gender::Female => 0,
            Gender::Male => 1,
        }
    }
}

/// Pair and swap-only entries as written in the dictionary file, before any
/// vocabulary filtering.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PairFile {
    pub pairs: Vec<(String, String)>,
    pub swap_only: Vec<(String, String)>,
}

impl PairFile {
    pub fn parse(text: &str) -> Result<Self> {
        let mut out = PairFile::default();
        let mut in_swap_section = false;
        let mut seen: HashMap<String, usize> = HashMap::new();
        let mut swap_sources: HashMap<String, usize> = HashMap::new();

        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if line == SWAP_ONLY_HEADER {
                in_swap_section = true;
                continue;
            }
            let fields: Vec<&str> = line.split('\t').map(str::trim).collect();
            if fields.len() != 2 || fields.iter().any(|f| f.is_empty() || f.contains(' ')) {
                return Err(Error::parse(
                    line_no,
                    format!("expected two tab-separated words, got {raw:?}"),
                ));
            }
            let (a, b) = (fields[0].to_lowercase(), fields[1].to_lowercase());
            if a == b {
                return Err(Error::DuplicatePairToken {
                    token: a,
                    line: line_no,
                });
            }
            if in_swap_section {
                if seen.contains_key(&a) || swap_sources.insert(a.clone(), line_no).is_some() {
                    return Err(Error::parse(
                        line_no,
                        format!("swap-only source `{a}` already has a mapping"),
                    ));
                }
                out.swap_only.push((a, b));
            } else {
                for tok in [&a, &b] {
                    if seen.insert(tok.clone(), line_no).is_some() {
                        return Err(Error::DuplicatePairToken {
                            token: tok.clone(),
                            line: line_no,
                        });
                    }
                }
                out.pairs.push((a, b));
            }
        }
        for (src, line) in &swap_sources {
            if seen.contains_key(src) {
                return Err(Error::parse(
                    *line,
                    format!("swap-only source `{src}` is already a pair member"),
                ));
            }
        }
        Ok(out)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    /// Every word mentioned anywhere in the file, in file order.
    pub fn words(&self) -> impl Iterator<Item = &str> {
        self.pairs
            .iter()
            .chain(self.swap_only.iter())
            .flat_map(|(a, b)| [a.as_str(), b.as_str()])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GenderPair {
    pub female: usize,
    pub male: usize,
}

/// Gender pairs resolved against a vocabulary.
#[derive(Debug, Clone)]
pub struct GenderLexicon {
    pairs: Vec<GenderPair>,
    swap: HashMap<usize, usize>,
    gender: Vec<Option<Gender>>,
    neutral: Vec<usize>,
    dropped: Vec<(String, String)>,
}

impl GenderLexicon {
    /// Keeps pairs whose words are both in `vocab`; the rest are reported in
    /// [`GenderLexicon::dropped`].
    pub fn resolve(file: &PairFile, vocab: &Vocabulary) -> Self {
        let mut pairs = Vec::new();
        let mut dropped = Vec::new();
        let mut swap = HashMap::new();
        let mut gender = vec![None; vocab.len()];

        for (f, m) in &file.pairs {
            match (vocab.get(f), vocab.get(m)) {
                (Some(fi), Some(mi)) if fi != Vocabulary::UNK && mi != Vocabulary::UNK => {
                    pairs.push(GenderPair {
                        female: fi,
                        male: mi,
                    });
                    swap.insert(fi, mi);
                    swap.insert(mi, fi);
                    gender[fi] = Some(Gender::Female);
                    gender[mi] = Some(Gender::Male);
                }
                _ => {
                    warn!("dropping gender pair {f}/{m}: not in vocabulary");
                    dropped.push((f.clone(), m.clone()));
                }
            }
        }
        for (from, to) in &file.swap_only {
            if let (Some(a), Some(b)) = (vocab.get(from), vocab.get(to)) {
                swap.entry(a).or_insert(b);
            }
        }

        let neutral = (0..vocab.len())
            .filter(|&id| id != Vocabulary::UNK && id != Vocabulary::EOS && gender[id].is_none())
            .collect();

        Self {
            pairs,
            swap,
            gender,
            neutral,
            dropped,
        }
    }

    pub fn load(path: &Path, vocab: &Vocabulary) -> Result<Self> {
        Ok(Self::resolve(&PairFile::read(path)?, vocab))
    }

    /// Builds a lexicon directly from id pairs. Panics on overlapping pairs.
    pub fn from_id_pairs(pairs: &[(usize, usize)], vocab_size: usize) -> Self {
        let mut gender = vec![None; vocab_size];
        let mut swap = HashMap::new();
        let mut out = Vec::new();
        for &(f, m) in pairs {
            assert!(f != m && gender[f].is_none() && gender[m].is_none());
            gender[f] = Some(Gender::Female);
            gender[m] = Some(Gender::Male);
            swap.insert(f, m);
            swap.insert(m, f);
            out.push(GenderPair { female: f, male: m });
        }
        let neutral = (0..vocab_size)
            .filter(|&id| id != Vocabulary::UNK && id != Vocabulary::EOS && gender[id].is_none())
            .collect();
        Self {
            pairs: out,
            swap,
            gender,
            neutral,
            dropped: Vec::new(),
        }
    }

    pub fn pairs(&self) -> &[GenderPair] {
        &self.pairs
    }

    /// Number of retained pairs (G).
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn dropped(&self) -> &[(String, String)] {
        &self.dropped
    }

    pub fn gender_of(&self, id: usize) -> Option<Gender> {
        self.gender.get(id).copied().flatten()
    }

    pub fn is_neutral(&self, id: usize) -> bool {
        id != Vocabulary::UNK && id != Vocabulary::EOS && self.gender_of(id).is_none()
    }

    pub fn neutral(&self) -> &[usize] {
        &self.neutral
    }

    pub fn gendered(&self) -> BTreeSet<usize> {
        self.pairs.iter().flat_map(|p| [p.female, p.male]).collect()
    }

    pub fn swap(&self, id: usize) -> Option<usize> {
        self.swap.get(&id).copied()
    }

    pub fn vocab_size(&self) -> usize {
        self.gender.len()
    }
}
