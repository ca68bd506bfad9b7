use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{
    causal_bias_given_gender, causal_bias_given_occupation, conditional_bias, count_cooccurrence,
    embedding_bias, fixed_bias, perplexity, ratio_from_totals, TemplateSet,
};
use crate::corpus::{GenderLexicon, TokenStream};
use crate::error::{Error, Result};
use crate::model::ModelParams;

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ReportMeta {
    pub model: String,
    pub window: usize,
    pub threshold: u64,
    /// Neutral words that entered B^N / B_c^N.
    pub retained_words: usize,
    /// Words over the threshold but with a zero count for one gender.
    pub excluded_zero_words: usize,
    pub gender_pairs: usize,
    pub occupations: usize,
    pub gender_templates: usize,
    pub occupation_templates: usize,
    pub vocab_size: usize,
    pub documents: usize,
    pub tokens: usize,
    pub heldout_tokens: usize,
    /// Metric key -> reason it could not be computed.
    pub undefined: BTreeMap<String, String>,
}

/// Every metric for one model. Undefined metrics serialize as `null`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct MetricsReport {
    pub b_n: Option<f64>,
    pub b_c_n: Option<f64>,
    pub gr: Option<f64>,
    pub cb_g: Option<f64>,
    pub cb_o: Option<f64>,
    pub eb_d: Option<f64>,
    pub perplexity: Option<f64>,
    pub meta: ReportMeta,
}

impl MetricsReport {
    pub fn values(&self) -> [(&'static str, Option<f64>); 7] {
        [
            ("b_n", self.b_n),
            ("b_c_n", self.b_c_n),
            ("gr", self.gr),
            ("ppl", self.perplexity),
            ("cb_o", self.cb_o),
            ("cb_g", self.cb_g),
            ("eb_d", self.eb_d),
        ]
    }

    pub fn all_undefined(&self) -> bool {
        self.values().iter().all(|(_, v)| v.is_none())
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> std::result::Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalSettings {
    /// Positions on each side of a gendered word.
    pub window: usize,
    /// Minimum combined co-occurrence count (exclusive).
    pub threshold: u64,
}

impl Default for EvalSettings {
    fn default() -> Self {
        Self {
            window: 10,
            threshold: 20,
        }
    }
}

fn record<T>(
    meta: &mut ReportMeta,
    key: &str,
    r: Result<T>,
) -> Result<Option<T>> {
    match r {
        Ok(v) => Ok(Some(v)),
        Err(Error::UndefinedMetric { reason, .. }) => {
            meta.undefined.insert(key.to_string(), reason);
            Ok(None)
        }
        Err(e) => Err(e),
    }
}

/// Computes the full report. Text metrics come from `text`, causal metrics
/// from template probes on `params`, and perplexity from `heldout`.
/// Metrics whose preconditions fail are left `None` with the reason in
/// `meta.undefined`; any other error aborts.
pub fn evaluate(
    name: &str,
    params: &ModelParams,
    lexicon: &GenderLexicon,
    templates: &TemplateSet,
    text: &[TokenStream],
    heldout: &[usize],
    settings: EvalSettings,
) -> Result<MetricsReport> {
    let mut meta = ReportMeta {
        model: name.to_string(),
        window: settings.window,
        threshold: settings.threshold,
        gender_pairs: lexicon.len(),
        occupations: templates.occupations().len(),
        gender_templates: templates.num_gender_templates(),
        occupation_templates: templates.num_occupation_templates(),
        vocab_size: params.vocab_size(),
        documents: text.iter().map(TokenStream::num_documents).sum(),
        tokens: text.iter().map(TokenStream::len).sum(),
        heldout_tokens: heldout.len(),
        ..Default::default()
    };
    for s in text {
        s.check_range(params.vocab_size())?;
    }

    let table = count_cooccurrence(text, lexicon, settings.window);
    let b_n = record(&mut meta, "b_n", fixed_bias(&table, settings.threshold))?;
    if let Some(b) = &b_n {
        meta.retained_words = b.retained;
        meta.excluded_zero_words = b.excluded_zero;
    }
    let b_c_n = record(&mut meta, "b_c_n", conditional_bias(&table, settings.threshold))?;
    let gr = record(&mut meta, "gr", ratio_from_totals(table.gender_totals))?;
    let cb_g = record(
        &mut meta,
        "cb_g",
        causal_bias_given_gender(params, templates, lexicon),
    )?;
    let cb_o = record(
        &mut meta,
        "cb_o",
        causal_bias_given_occupation(params, templates, lexicon),
    )?;
    let eb_d = if lexicon.is_empty() || templates.occupations().is_empty() {
        meta.undefined
            .insert("eb_d".into(), "no gender pairs or occupations".into());
        None
    } else {
        Some(embedding_bias(
            &params.embedding,
            lexicon,
            templates.occupations(),
        ))
    };
    let ppl = record(&mut meta, "perplexity", perplexity(params, heldout))?;

    Ok(MetricsReport {
        b_n: b_n.map(|b| b.value),
        b_c_n: b_c_n.map(|b| b.value),
        gr,
        cb_g,
        cb_o,
        eb_d,
        perplexity: ppl,
        meta,
    })
}

/// Reports keyed by model name, in first-seen order. A later report with the
/// same name replaces the earlier one.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Comparison {
    pub models: Vec<MetricsReport>,
}

impl Comparison {
    pub fn merge(&mut self, report: MetricsReport) {
        match self
            .models
            .iter_mut()
            .find(|r| r.meta.model == report.meta.model)
        {
            Some(slot) => *slot = report,
            None => self.models.push(report),
        }
    }

    /// Table with one row per model and a block of differences against the
    /// first row.
    pub fn render(&self) -> String {
        let header = "| Model | B^N | B_c^N | GR | Ppl. | CB\\|o | CB\\|g | EB_d |";
        let rule = "|---|---|---|---|---|---|---|---|";
        let fmt = |v: Option<f64>| v.map_or("-".to_string(), |x| format!("{x:.3}"));
        let mut out = String::new();
        let _ = writeln!(out, "{header}\n{rule}");
        for r in &self.models {
            let cells: Vec<String> = r.values().iter().map(|(_, v)| fmt(*v)).collect();
            let _ = writeln!(out, "| {} | {} |", r.meta.model, cells.join(" | "));
        }
        if let Some(base) = self.models.first() {
            if self.models.len() > 1 {
                let _ = writeln!(out, "\nDifference from {}:\n\n{header}\n{rule}", base.meta.model);
                for r in &self.models[1..] {
                    let cells: Vec<String> = r
                        .values()
                        .iter()
                        .zip(base.values())
                        .map(|((_, v), (_, b))| match (v, b) {
                            (Some(v), Some(b)) => format!("{:+.3}", v - b),
                            _ => "-".to_string(),
                        })
                        .collect();
                    let _ = writeln!(out, "| {} | {} |", r.meta.model, cells.join(" | "));
                }
            }
        }
        out
    }
}
