//! Template probes for causal occupation bias.
//!
//! A template line looks like `{g} is a | {o}`: the part before `|` is the
//! seed fed to the model with one slot, the part after names the slot whose
//! probability is read at the final position. `{g}` is filled with gendered
//! words and `{o}` with occupations.

use log::warn;

use crate::corpus::{tokenize, GenderLexicon, Vocabulary};
use crate::error::{Error, Result};
use crate::model::LanguageModel;

pub const GENDER_SLOT: &str = "{g}";
pub const OCCUPATION_SLOT: &str = "{o}";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SlotKind {
    Gender,
    Occupation,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Part {
    Word(String),
    Slot,
}

/// A parsed template line, not yet tied to a vocabulary.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Template {
    /// Kind of the slot inside the seed.
    pub seed_slot: SlotKind,
    parts: Vec<Part>,
    source: String,
}

impl Template {
    pub fn parse(line: &str) -> std::result::Result<Self, String> {
        let (seed, target) = line
            .split_once('|')
            .ok_or_else(|| format!("missing `|` in template {line:?}"))?;
        let target_kind = match target.trim() {
            GENDER_SLOT => SlotKind::Gender,
            OCCUPATION_SLOT => SlotKind::Occupation,
            other => return Err(format!("target must be {{g}} or {{o}}, got {other:?}")),
        };
        let mut parts = Vec::new();
        let mut seed_slot = None;
        for word in seed.split_whitespace() {
            let kind = match word {
                GENDER_SLOT => Some(SlotKind::Gender),
                OCCUPATION_SLOT => Some(SlotKind::Occupation),
                _ => None,
            };
            match kind {
                Some(k) => {
                    if seed_slot.replace(k).is_some() {
                        return Err(format!("more than one slot in seed of {line:?}"));
                    }
                    parts.push(Part::Slot);
                }
                None => parts.extend(tokenize(word).into_iter().map(Part::Word)),
            }
        }
        let seed_slot = seed_slot.ok_or_else(|| format!("no slot in seed of {line:?}"))?;
        if seed_slot == target_kind {
            return Err(format!("seed and target slots are the same kind in {line:?}"));
        }
        Ok(Self {
            seed_slot,
            parts,
            source: line.trim().to_string(),
        })
    }

    pub fn source(&self) -> &str {
        &self.source
    }
}

pub const DEFAULT_TEMPLATES: &str = "{g} is a | {o}\nthe {o} is a | {g}\n";

/// Parses a template file: one template per line, `#` comments.
pub fn parse_templates(text: &str) -> Result<Vec<Template>> {
    let mut out = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        out.push(Template::parse(line).map_err(|m| Error::parse(idx + 1, m))?);
    }
    Ok(out)
}

/// Parses an occupation list: one word per line, `#` comments.
pub fn parse_word_list(text: &str) -> Vec<String> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_lowercase)
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct ResolvedTemplate {
    prefix: Vec<usize>,
    suffix: Vec<usize>,
}

impl ResolvedTemplate {
    fn seed(&self, filler: usize) -> Vec<usize> {
        let mut s = self.prefix.clone();
        s.push(filler);
        s.extend_from_slice(&self.suffix);
        s
    }
}

/// Templates and occupations resolved to token ids.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TemplateSet {
    gender_templates: Vec<ResolvedTemplate>,
    occupation_templates: Vec<ResolvedTemplate>,
    occupations: Vec<usize>,
    dropped_occupations: Vec<String>,
}

impl TemplateSet {
    /// Every literal template word must be in `vocab` (offenders are listed
    /// in the error). Occupations outside the vocabulary are dropped and
    /// reported; occupations that are gendered words are an error.
    pub fn resolve(
        templates: &[Template],
        occupations: &[String],
        vocab: &Vocabulary,
        lexicon: &GenderLexicon,
    ) -> Result<Self> {
        let mut missing = Vec::new();
        let mut gender_templates = Vec::new();
        let mut occupation_templates = Vec::new();
        for t in templates {
            let slot = t.parts.iter().position(|p| *p == Part::Slot).unwrap();
            let mut ids = |parts: &[Part]| -> Vec<usize> {
                parts
                    .iter()
                    .filter_map(|p| match p {
                        Part::Word(w) => match vocab.get(w) {
                            Some(id) => Some(id),
                            None => {
                                if !missing.contains(w) {
                                    missing.push(w.clone());
                                }
                                None
                            }
                        },
                        Part::Slot => None,
                    })
                    .collect()
            };
            let resolved = ResolvedTemplate {
                prefix: ids(&t.parts[..slot]),
                suffix: ids(&t.parts[slot + 1..]),
            };
            match t.seed_slot {
                SlotKind::Gender => gender_templates.push(resolved),
                SlotKind::Occupation => occupation_templates.push(resolved),
            }
        }

        let mut occ_ids = Vec::new();
        let mut dropped = Vec::new();
        let mut gendered = Vec::new();
        for o in occupations {
            match vocab.get(o) {
                Some(id) if lexicon.gender_of(id).is_some() => gendered.push(o.clone()),
                Some(id) if id != Vocabulary::UNK && id != Vocabulary::EOS => {
                    if !occ_ids.contains(&id) {
                        occ_ids.push(id);
                    }
                }
                _ => dropped.push(o.clone()),
            }
        }
        if !missing.is_empty() {
            return Err(Error::TemplateOutOfVocab(missing));
        }
        if !gendered.is_empty() {
            return Err(Error::parse(
                0,
                format!("occupations must be gender-neutral: {}", gendered.join(", ")),
            ));
        }
        if !dropped.is_empty() {
            warn!(
                "{} occupations not in vocabulary: {}",
                dropped.len(),
                dropped.join(", ")
            );
        }
        Ok(Self {
            gender_templates,
            occupation_templates,
            occupations: occ_ids,
            dropped_occupations: dropped,
        })
    }

    pub fn occupations(&self) -> &[usize] {
        &self.occupations
    }

    pub fn dropped_occupations(&self) -> &[String] {
        &self.dropped_occupations
    }

    pub fn num_gender_templates(&self) -> usize {
        self.gender_templates.len()
    }

    pub fn num_occupation_templates(&self) -> usize {
        self.occupation_templates.len()
    }
}

fn check_defined(
    metric: &'static str,
    lexicon: &GenderLexicon,
    templates: usize,
    occupations: usize,
) -> Result<()> {
    if lexicon.is_empty() {
        return Err(Error::undefined(metric, "no gender pairs"));
    }
    if templates == 0 {
        return Err(Error::undefined(metric, "no templates of this kind"));
    }
    if occupations == 0 {
        return Err(Error::undefined(metric, "no occupations in vocabulary"));
    }
    Ok(())
}

/// Occupation bias conditioned on gender: for every gender template, the
/// mean over occupations and pairs of `|ln(p(o | seed(f)) / p(o | seed(m)))|`,
/// averaged across templates.
pub fn causal_bias_given_gender<M: LanguageModel>(
    model: &M,
    templates: &TemplateSet,
    lexicon: &GenderLexicon,
) -> Result<f64> {
    let occ = &templates.occupations;
    check_defined("cb_g", lexicon, templates.gender_templates.len(), occ.len())?;
    let mut per_template = Vec::with_capacity(templates.gender_templates.len());
    for t in &templates.gender_templates {
        let mut sum = 0.0;
        for pair in lexicon.pairs() {
            let pf = model.next_token_distribution(&t.seed(pair.female))?;
            let pm = model.next_token_distribution(&t.seed(pair.male))?;
            sum += occ
                .iter()
                .map(|&o| (pf.log_p(o) - pm.log_p(o)).abs())
                .sum::<f64>();
        }
        per_template.push(sum / (occ.len() * lexicon.len()) as f64);
    }
    Ok(per_template.iter().sum::<f64>() / per_template.len() as f64)
}

/// Occupation bias conditioned on occupation: for every occupation template,
/// the mean over occupations and pairs of `|ln(p(f | seed(o)) / p(m | seed(o)))|`,
/// averaged across templates.
pub fn causal_bias_given_occupation<M: LanguageModel>(
    model: &M,
    templates: &TemplateSet,
    lexicon: &GenderLexicon,
) -> Result<f64> {
    let occ = &templates.occupations;
    check_defined("cb_o", lexicon, templates.occupation_templates.len(), occ.len())?;
    let mut per_template = Vec::with_capacity(templates.occupation_templates.len());
    for t in &templates.occupation_templates {
        let mut sum = 0.0;
        for &o in occ {
            let p = model.next_token_distribution(&t.seed(o))?;
            sum += lexicon
                .pairs()
                .iter()
                .map(|pair| (p.log_p(pair.female) - p.log_p(pair.male)).abs())
                .sum::<f64>();
        }
        per_template.push(sum / (occ.len() * lexicon.len()) as f64);
    }
    Ok(per_template.iter().sum::<f64>() / per_template.len() as f64)
}
