//! Trains small models at several bias-loss weights on a skewed synthetic
//! corpus and prints the causal and embedding bias of each.
//!
//! Usage: skew_experiment [lambda ...]   (env: EMBED, HIDDEN, EPOCHS, LR, BATCH, SEQ, DROPOUT, SEED)

use std::env;
use std::time::Instant;

use fairlm::corpus::{encode_lines, tokenize_lines, GenderLexicon, PairFile, Source, Vocabulary};
use fairlm::metrics::{
    causal_bias_given_gender, causal_bias_given_occupation, embedding_bias, parse_templates,
    perplexity, TemplateSet, DEFAULT_TEMPLATES,
};
use fairlm::model::ModelHyper;
use fairlm::synthetic::{SkewedCorpus, OCCUPATIONS, PAIRS};
use fairlm::training::{TrainConfig, TrainMode, Trainer};

fn var<T: std::str::FromStr>(name: &str, default: T) -> T {
    env::var(name).ok().and_then(|v| v.parse().ok()).unwrap_or(default)
}

fn main() {
    let lambdas: Vec<f64> = {
        let a: Vec<f64> = env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
        if a.is_empty() { vec![0.0, 0.5, 1.0] } else { a }
    };
    let text = SkewedCorpus { seed: var("SEED", 0), ..Default::default() }.generate();
    let tokens = tokenize_lines(&text);
    let vocab = Vocabulary::build(&tokens, 1, None);
    let stream = encode_lines(&text, &vocab, Source::Raw);
    let (train, valid) = stream.split_tail(0.05);
    let lex = GenderLexicon::resolve(&PairFile::parse(PAIRS).unwrap(), &vocab);
    let occ: Vec<String> = OCCUPATIONS.iter().map(|s| s.to_string()).collect();
    let templates =
        TemplateSet::resolve(&parse_templates(DEFAULT_TEMPLATES).unwrap(), &occ, &vocab, &lex).unwrap();
    let hyper = ModelHyper {
        embed_dim: var("EMBED", 16),
        hidden_units: var("HIDDEN", 32),
        num_layers: var("LAYERS", 1),
        seq_len: var("SEQ", 20),
        dropout: var("DROPOUT", 0.0),
    };
    println!("vocab {} train {} valid {}", vocab.len(), train.len(), valid.len());
    for &lambda in &lambdas {
        let t0 = Instant::now();
        let config = TrainConfig {
            lambda,
            lr: var("LR", 1.0),
            batch_size: var("BATCH", 16),
            max_epochs: var("EPOCHS", 10),
            mode: TrainMode::BiasLoss,
            seed: var("SEED", 0),
            ..Default::default()
        };
        let trainer = Trainer::new(hyper, config, &lex, templates.occupations().to_vec());
        let (params, log) = trainer.fit(vocab.len(), &train, &valid).unwrap();
        let cbg = causal_bias_given_gender(&params, &templates, &lex).unwrap();
        let cbo = causal_bias_given_occupation(&params, &templates, &lex).unwrap();
        let ebd = embedding_bias(&params.embedding, &lex, templates.occupations());
        let ppl = perplexity(&params, &valid.ids).unwrap();
        println!(
            "lambda {lambda}: cb_g {cbg:.4} cb_o {cbo:.4} eb_d {ebd:.4} ppl {ppl:.3} best {} of {} ({:.1}s)",
            log.best_epoch,
            log.epochs.len(),
            t0.elapsed().as_secs_f64()
        );
    }
}
