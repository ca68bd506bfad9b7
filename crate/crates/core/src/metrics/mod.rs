//! Bias metrics: co-occurrence scores and gender ratio from text, causal
//! occupation bias from template probes, embedding bias, and perplexity.

mod causal;
mod cooccurrence;
mod embedding;
mod perplexity;
mod report;

pub use causal::{
    causal_bias_given_gender, causal_bias_given_occupation, parse_templates, parse_word_list,
    SlotKind, Template, TemplateSet, DEFAULT_TEMPLATES, GENDER_SLOT, OCCUPATION_SLOT,
};
pub use cooccurrence::{
    conditional_bias, count_cooccurrence, fixed_bias, gender_ratio, CooccurrenceBias,
    CooccurrenceTable,
};
pub(crate) use cooccurrence::ratio_from_totals;
pub use embedding::embedding_bias;
pub use perplexity::perplexity;
pub use report::{evaluate, Comparison, EvalSettings, MetricsReport, ReportMeta};
