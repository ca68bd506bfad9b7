//! Co-occurrence statistics over text: the fixed and conditional
//! co-occurrence bias scores and the gender ratio.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::corpus::{Gender, GenderLexicon, TokenStream};
use crate::error::{Error, Result};

/// Counts of neutral words near gendered words, per gender, plus the total
/// number of gendered tokens of each gender.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CooccurrenceTable {
    /// neutral word id -> [female, male] counts
    pub counts: BTreeMap<usize, [u64; 2]>,
    /// [female, male] token totals
    pub gender_totals: [u64; 2],
    pub window: usize,
}

impl CooccurrenceTable {
    pub fn count(&self, word: usize, gender: Gender) -> u64 {
        self.counts.get(&word).map_or(0, |c| c[gender.index()])
    }

    pub fn total(&self, gender: Gender) -> u64 {
        self.gender_totals[gender.index()]
    }
}

/// For every gendered token, each neutral token within `window` positions on
/// either side (same document) adds one to that word's count for the
/// token's gender.
pub fn count_cooccurrence(
    streams: &[TokenStream],
    lexicon: &GenderLexicon,
    window: usize,
) -> CooccurrenceTable {
    let mut table = CooccurrenceTable {
        window,
        ..Default::default()
    };
    for doc in streams.iter().flat_map(TokenStream::documents) {
        for (j, &id) in doc.iter().enumerate() {
            let Some(g) = lexicon.gender_of(id) else {
                continue;
            };
            table.gender_totals[g.index()] += 1;
            let lo = j.saturating_sub(window);
            let hi = (j + window).min(doc.len() - 1);
            for (k, &w) in doc[lo..=hi].iter().enumerate() {
                if lo + k != j && lexicon.is_neutral(w) {
                    table.counts.entry(w).or_default()[g.index()] += 1;
                }
            }
        }
    }
    table
}

/// A co-occurrence score together with how many words it averaged over.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CooccurrenceBias {
    pub value: f64,
    pub retained: usize,
    /// Words above the threshold dropped because one gender count is zero.
    pub excluded_zero: usize,
}

fn retained(table: &CooccurrenceTable, threshold: u64) -> (Vec<(u64, u64)>, usize) {
    let mut kept = Vec::new();
    let mut zero = 0;
    for c in table.counts.values() {
        let (f, m) = (c[0], c[1]);
        if f + m > threshold {
            if f > 0 && m > 0 {
                kept.push((f, m));
            } else {
                zero += 1;
            }
        }
    }
    (kept, zero)
}

/// Mean over retained neutral words of `|ln(c(w,m) / c(w,f))|`. A word is
/// retained when its combined count exceeds `threshold` and both counts are
/// nonzero.
pub fn fixed_bias(table: &CooccurrenceTable, threshold: u64) -> Result<CooccurrenceBias> {
    let (kept, excluded_zero) = retained(table, threshold);
    if kept.is_empty() {
        return Err(Error::undefined(
            "b_n",
            format!("no neutral word co-occurs more than {threshold} times with both genders"),
        ));
    }
    let sum: f64 = kept
        .iter()
        .map(|&(f, m)| ((m as f64) / (f as f64)).ln().abs())
        .sum();
    Ok(CooccurrenceBias {
        value: sum / kept.len() as f64,
        retained: kept.len(),
        excluded_zero,
    })
}

/// As [`fixed_bias`] with each count normalized by its gender's token total.
pub fn conditional_bias(table: &CooccurrenceTable, threshold: u64) -> Result<CooccurrenceBias> {
    let [cf, cm] = table.gender_totals;
    if cf == 0 || cm == 0 {
        return Err(Error::undefined(
            "b_c_n",
            "one gender never occurs in the text",
        ));
    }
    let (kept, excluded_zero) = retained(table, threshold);
    if kept.is_empty() {
        return Err(Error::undefined(
            "b_c_n",
            format!("no neutral word co-occurs more than {threshold} times with both genders"),
        ));
    }
    let sum: f64 = kept
        .iter()
        .map(|&(f, m)| ((m as f64 / cm as f64) / (f as f64 / cf as f64)).ln().abs())
        .sum();
    Ok(CooccurrenceBias {
        value: sum / kept.len() as f64,
        retained: kept.len(),
        excluded_zero,
    })
}

/// Male-to-female token ratio.
pub fn gender_ratio(streams: &[TokenStream], lexicon: &GenderLexicon) -> Result<f64> {
    let mut totals = [0u64; 2];
    for s in streams {
        for &id in &s.ids {
            if let Some(g) = lexicon.gender_of(id) {
                totals[g.index()] += 1;
            }
        }
    }
    ratio_from_totals(totals)
}

pub(crate) fn ratio_from_totals([f, m]: [u64; 2]) -> Result<f64> {
    if f == 0 {
        return Err(Error::undefined("gr", "no female words in the text"));
    }
    Ok(m as f64 / f as f64)
}
