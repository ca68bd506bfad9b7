use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(
    name = "fairlm",
    version,
    about = "Train word-level LSTM language models with gender-bias regularization and measure their bias",
    after_help = "Log verbosity is read from FAIRLM_LOG (error, warn, info, debug, trace)."
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Append a gender-swapped copy of every document to a corpus.
    Augment(AugmentArgs),
    /// Train a model from a `key = value` config file.
    Train(TrainArgs),
    /// Sample documents from a trained checkpoint.
    Generate(GenerateArgs),
    /// Compute bias metrics and perplexity for one model.
    Evaluate(EvaluateArgs),
    /// Merge metric reports into one comparison table.
    Compare(CompareArgs),
    /// Write a synthetic corpus whose occupations are gender-skewed.
    Synth(SynthArgs),
}

#[derive(Debug, Args)]
pub struct AugmentArgs {
    /// Plain-text corpus, one document per line.
    #[arg(long)]
    pub input: PathBuf,
    /// Gender-pair file (defaults to the bundled list).
    #[arg(long)]
    pub pairs: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    /// Hold out the final documents here before augmenting.
    #[arg(long)]
    pub valid_out: Option<PathBuf>,
    /// Fraction of documents held out when --valid-out is given.
    #[arg(long, default_value_t = 0.05)]
    pub valid_fraction: f64,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Overrides `pairs` in the config.
    #[arg(long)]
    pub pairs: Option<PathBuf>,
    /// Overrides `occupations` in the config.
    #[arg(long)]
    pub occupations: Option<PathBuf>,
    /// Overrides `seed` in the config.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Checkpoint path; the log and manifest are written beside it.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    /// `key = value` file with num_docs, doc_len, temperature, seed.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub num_docs: Option<usize>,
    #[arg(long)]
    pub doc_len: Option<usize>,
    #[arg(long)]
    pub temperature: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    /// Text scored by the co-occurrence metrics, one document per line.
    #[arg(long)]
    pub text: PathBuf,
    /// Held-out text for perplexity (defaults to --text).
    #[arg(long)]
    pub heldout: Option<PathBuf>,
    #[arg(long)]
    pub pairs: Option<PathBuf>,
    #[arg(long)]
    pub occupations: Option<PathBuf>,
    #[arg(long)]
    pub templates: Option<PathBuf>,
    /// Positions on each side of a gendered word.
    #[arg(long, default_value_t = 10)]
    pub window: usize,
    /// Minimum combined co-occurrence count (exclusive).
    #[arg(long, default_value_t = 20)]
    pub threshold: u64,
    /// Row name in reports (defaults to the checkpoint file stem).
    #[arg(long)]
    pub name: Option<String>,
    /// Report JSON path.
    #[arg(long)]
    pub out: PathBuf,
    /// Comparison JSON to merge this report into; a markdown table is
    /// written next to it.
    #[arg(long)]
    pub merge: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    /// Report JSON files; later reports replace earlier ones with the same name.
    #[arg(required = true)]
    pub reports: Vec<PathBuf>,
    /// Markdown table path.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 50_000)]
    pub tokens: usize,
    /// Probability that an occupation appears with the male word.
    #[arg(long, default_value_t = 0.9)]
    pub male_share: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
    /// Also write the pair file matching the corpus.
    #[arg(long)]
    pub pairs_out: Option<PathBuf>,
    /// Also write the corpus occupation list.
    #[arg(long)]
    pub occupations_out: Option<PathBuf>,
}
