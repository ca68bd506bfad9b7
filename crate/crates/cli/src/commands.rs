use std::fs;
use std::path::{Path, PathBuf};

use fairlm::corpus::{
    cda_augment, encode_lines, tokenize, tokenize_lines, GenderLexicon, PairFile, Source,
    TokenStream, Vocabulary,
};
use fairlm::data;
use fairlm::generation::{generate, render_documents, GenerationConfig};
use fairlm::metrics::{
    evaluate, parse_templates, parse_word_list, Comparison, EvalSettings, MetricsReport,
    TemplateSet,
};
use fairlm::model::{load_checkpoint, save_checkpoint, ModelParams};
use fairlm::synthetic::SkewedCorpus;
use fairlm::training::{settings_from_config, ConfigFile, RegTargets, TrainMode, Trainer};
use log::{info, warn};

use crate::args::{AugmentArgs, CompareArgs, EvaluateArgs, GenerateArgs, SynthArgs, TrainArgs};
use crate::error::CliError;
use crate::manifest::Run;

/// Config keys read by `train` in addition to the model and training fields.
const TRAIN_FILE_KEYS: &[&str] = &[
    "corpus",
    "validation",
    "min_count",
    "max_vocab",
    "embeddings",
    "pairs",
    "occupations",
];

const GENERATE_KEYS: &[&str] = &["num_docs", "doc_len", "temperature", "seed"];

fn read_text(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::missing(path, e))
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| CliError::missing(path, e))
}

fn pair_file(path: Option<&Path>) -> Result<PairFile, CliError> {
    Ok(match path {
        Some(p) => PairFile::read(p)?,
        None => PairFile::parse(data::GENDER_PAIRS)?,
    })
}

fn word_list(path: Option<&Path>, bundled: &str) -> Result<String, CliError> {
    path.map_or_else(|| Ok(bundled.to_string()), read_text)
}

/// One document per line; the trailing `<eos>` of each document is dropped.
fn render_stream(stream: &TokenStream, vocab: &Vocabulary) -> String {
    let mut out = String::new();
    for doc in stream.documents() {
        let doc = doc.strip_suffix(&[Vocabulary::EOS]).unwrap_or(doc);
        out.push_str(&vocab.decode(doc).join(" "));
        out.push('\n');
    }
    out
}

/// Each non-empty line becomes one document, tokenized the same way as
/// training text but without an appended `<eos>`.
fn text_documents(text: &str, vocab: &Vocabulary) -> TokenStream {
    TokenStream::from_documents(
        text.lines().map(|line| vocab.encode(&tokenize(line))),
        Source::Generated,
    )
}

pub fn augment(args: &AugmentArgs) -> Result<(), CliError> {
    Run::new("augment", &args.out)
        .input(Some(&args.input))
        .input(args.pairs.as_deref())
        .setting("valid_fraction", args.valid_fraction)
        .execute(|_, _| {
            let text = read_text(&args.input)?;
            let pairs = pair_file(args.pairs.as_deref())?;
            if args.valid_out.is_some() && !(0.0..1.0).contains(&args.valid_fraction) {
                return Err(CliError::Validation(format!(
                    "--valid-fraction {} must be in [0, 1)",
                    args.valid_fraction
                )));
            }
            // Partners absent from the input must still be valid swap targets.
            let mut tokens = tokenize_lines(&text);
            tokens.extend(pairs.words().map(str::to_string));
            let vocab = Vocabulary::build(&tokens, 1, None);
            let lexicon = GenderLexicon::resolve(&pairs, &vocab);
            if lexicon.is_empty() {
                return Err(fairlm::Error::NoGenderPairs.into());
            }
            let stream = encode_lines(&text, &vocab, Source::Raw);
            let docs: Vec<Vec<usize>> = stream.documents().map(<[usize]>::to_vec).collect();
            let mut written = vec![args.out.clone()];

            let held = match &args.valid_out {
                Some(_) => (docs.len() as f64 * args.valid_fraction).ceil() as usize,
                None => 0,
            };
            let cut = docs.len() - held.min(docs.len());
            let train = TokenStream::from_documents(docs[..cut].to_vec(), Source::Raw);
            if let Some(valid_out) = &args.valid_out {
                let valid = TokenStream::from_documents(docs[cut..].to_vec(), Source::Raw);
                write_text(valid_out, &render_stream(&valid, &vocab))?;
                written.push(valid_out.clone());
            }
            let augmented = cda_augment(&train, &lexicon);
            info!(
                "augmented {} documents with {} gender pairs",
                train.num_documents(),
                lexicon.len()
            );
            write_text(&args.out, &render_stream(&augmented, &vocab))?;
            Ok(written)
        })
}

fn resolve_relative(base: &Path, value: &str) -> PathBuf {
    let p = Path::new(value);
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

fn read_opt<T: std::str::FromStr>(
    cfg: &ConfigFile,
    key: &str,
    errs: &mut Vec<String>,
) -> Option<T>
where
    T::Err: std::fmt::Display,
{
    let raw = cfg.get(key)?;
    match raw.parse() {
        Ok(v) => Some(v),
        Err(e) => {
            errs.push(format!("{key}: {raw:?}: {e}"));
            None
        }
    }
}

pub fn train(args: &TrainArgs) -> Result<(), CliError> {
    let base = args
        .config
        .parent()
        .map(Path::to_path_buf)
        .unwrap_or_default();
    // Pre-read the config only to learn which files to digest.
    let preview = fs::read_to_string(&args.config)
        .ok()
        .and_then(|t| ConfigFile::parse(&t).ok())
        .unwrap_or_default();
    let path_of = |key: &str| preview.get(key).map(|v| resolve_relative(&base, v));
    let pairs_path = args.pairs.clone().or_else(|| path_of("pairs"));
    let occ_path = args.occupations.clone().or_else(|| path_of("occupations"));

    Run::new("train", &args.out)
        .input(Some(&args.config))
        .input(path_of("corpus").as_deref())
        .input(path_of("validation").as_deref())
        .input(path_of("embeddings").as_deref())
        .input(pairs_path.as_deref())
        .input(occ_path.as_deref())
        .execute(|config, seed| {
            let mut cfg = ConfigFile::parse(&read_text(&args.config)?)?;
            if let Some(s) = args.seed {
                cfg.set("seed", s.to_string());
            }
            *config = cfg.to_map();

            let mut errs = Vec::new();
            if cfg.get("corpus").is_none() {
                errs.push("corpus: required".to_string());
            }
            let min_count: usize = read_opt(&cfg, "min_count", &mut errs).unwrap_or(1);
            if min_count == 0 {
                errs.push("min_count: must be at least 1".to_string());
            }
            let max_vocab: Option<usize> = read_opt(&cfg, "max_vocab", &mut errs);
            if matches!(max_vocab, Some(n) if n < 3) {
                errs.push("max_vocab: must leave room beyond the reserved tokens".to_string());
            }
            let settings = match settings_from_config(&cfg, TRAIN_FILE_KEYS) {
                Ok(s) => Some(s),
                Err(fairlm::Error::Config(e)) => {
                    errs.extend(e);
                    None
                }
                Err(e) => return Err(e.into()),
            };
            let (hyper, train_cfg) = match settings {
                Some(s) if errs.is_empty() => s,
                _ => return Err(fairlm::Error::Config(errs).into()),
            };
            *seed = Some(train_cfg.seed);

            let corpus_path = path_of("corpus").expect("checked above");
            let text = read_text(&corpus_path)?;
            let pairs = pair_file(pairs_path.as_deref())?;
            let occupations =
                parse_word_list(&word_list(occ_path.as_deref(), data::OCCUPATIONS)?);

            let vocab = Vocabulary::build(&tokenize_lines(&text), min_count, max_vocab);
            let full = encode_lines(&text, &vocab, Source::Raw);
            let (train_stream, valid_stream) = match path_of("validation") {
                Some(p) => (full, encode_lines(&read_text(&p)?, &vocab, Source::Raw)),
                None => full.split_tail(0.05),
            };
            let lexicon = GenderLexicon::resolve(&pairs, &vocab);
            info!(
                "vocabulary {} tokens, {} gender pairs, {} train / {} validation tokens",
                vocab.len(),
                lexicon.len(),
                train_stream.len(),
                valid_stream.len()
            );

            let reg_targets = match train_cfg.reg_targets {
                RegTargets::Neutral => lexicon.neutral().to_vec(),
                RegTargets::Occupations => {
                    let set = TemplateSet::resolve(&[], &occupations, &vocab, &lexicon)?;
                    set.occupations().to_vec()
                }
            };
            if train_cfg.mode == TrainMode::Reg && reg_targets.is_empty() {
                return Err(CliError::Validation(
                    "reg_targets: no target words are in the vocabulary".into(),
                ));
            }

            let mut init = ModelParams::init(&hyper, vocab.len(), train_cfg.seed);
            if let Some(p) = path_of("embeddings") {
                let n = init.overlay_embeddings(&p, &vocab)?;
                info!("loaded {n} pretrained embedding rows");
            }
            let trainer = Trainer::new(hyper, train_cfg, &lexicon, reg_targets);
            let (params, log) = trainer.fit_from(init, &train_stream, &valid_stream)?;

            save_checkpoint(&params, &hyper, &vocab, &args.out)?;
            let log_path = suffixed(&args.out, ".log.tsv");
            write_text(&log_path, &log.to_tsv())?;
            Ok(vec![args.out.clone(), log_path])
        })
}

fn suffixed(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

pub fn generate_cmd(args: &GenerateArgs) -> Result<(), CliError> {
    Run::new("generate", &args.out)
        .input(Some(&args.checkpoint))
        .input(args.config.as_deref())
        .execute(|config, seed| {
            let mut gen = GenerationConfig::default();
            let mut errs = Vec::new();
            if let Some(path) = &args.config {
                let cfg = ConfigFile::parse(&read_text(path)?)?;
                for key in cfg.keys() {
                    if !GENERATE_KEYS.contains(&key) {
                        errs.push(format!("{key}: unknown setting"));
                    }
                }
                gen.num_docs = read_opt(&cfg, "num_docs", &mut errs).unwrap_or(gen.num_docs);
                gen.doc_len = read_opt(&cfg, "doc_len", &mut errs).unwrap_or(gen.doc_len);
                gen.temperature =
                    read_opt(&cfg, "temperature", &mut errs).unwrap_or(gen.temperature);
                gen.seed = read_opt(&cfg, "seed", &mut errs).unwrap_or(gen.seed);
            }
            gen.num_docs = args.num_docs.unwrap_or(gen.num_docs);
            gen.doc_len = args.doc_len.unwrap_or(gen.doc_len);
            gen.temperature = args.temperature.unwrap_or(gen.temperature);
            gen.seed = args.seed.unwrap_or(gen.seed);
            if let Err(e) = gen.validate() {
                errs.extend(e);
            }
            if !errs.is_empty() {
                return Err(fairlm::Error::Config(errs).into());
            }
            config.insert("num_docs".into(), gen.num_docs.to_string());
            config.insert("doc_len".into(), gen.doc_len.to_string());
            config.insert("temperature".into(), gen.temperature.to_string());
            *seed = Some(gen.seed);

            let (params, _, vocab) = load_checkpoint(&args.checkpoint)?;
            let docs = generate(&params, &gen)?;
            write_text(&args.out, &render_documents(&docs, &vocab))?;
            Ok(vec![args.out.clone()])
        })
}

pub fn evaluate_cmd(args: &EvaluateArgs) -> Result<(), CliError> {
    let settings = EvalSettings {
        window: args.window,
        threshold: args.threshold,
    };
    let name = args.name.clone().unwrap_or_else(|| {
        args.checkpoint
            .file_stem()
            .map_or_else(|| "model".to_string(), |s| s.to_string_lossy().into_owned())
    });
    Run::new("evaluate", &args.out)
        .input(Some(&args.checkpoint))
        .input(Some(&args.text))
        .input(args.heldout.as_deref())
        .input(args.pairs.as_deref())
        .input(args.occupations.as_deref())
        .input(args.templates.as_deref())
        .setting("model", &name)
        .setting("window", settings.window)
        .setting("threshold", settings.threshold)
        .execute(|_, _| {
            let (params, _, vocab) = load_checkpoint(&args.checkpoint)?;
            let text = read_text(&args.text)?;
            let heldout_text = match &args.heldout {
                Some(p) => read_text(p)?,
                None => text.clone(),
            };
            let lexicon = GenderLexicon::resolve(&pair_file(args.pairs.as_deref())?, &vocab);
            let templates = parse_templates(&word_list(args.templates.as_deref(), data::TEMPLATES)?)?;
            let occupations =
                parse_word_list(&word_list(args.occupations.as_deref(), data::OCCUPATIONS)?);
            let template_set = TemplateSet::resolve(&templates, &occupations, &vocab, &lexicon)?;

            let docs = text_documents(&text, &vocab);
            let heldout = encode_lines(&heldout_text, &vocab, Source::Raw);
            let report = evaluate(
                &name,
                &params,
                &lexicon,
                &template_set,
                &[docs],
                &heldout.ids,
                settings,
            )?;
            for (metric, reason) in &report.meta.undefined {
                warn!("{metric} undefined: {reason}");
            }
            write_text(&args.out, &report.to_json())?;
            let mut written = vec![args.out.clone()];

            if let Some(path) = &args.merge {
                let mut comparison = if path.exists() {
                    read_comparison(path)?
                } else {
                    Comparison::default()
                };
                comparison.merge(report.clone());
                let json = serde_json::to_string_pretty(&comparison).expect("serializes") + "\n";
                write_text(path, &json)?;
                let table = suffixed(path, ".md");
                write_text(&table, &comparison.render())?;
                written.push(path.clone());
                written.push(table);
            }
            if report.all_undefined() {
                return Err(CliError::AllUndefined(format!(
                    "every metric is undefined for {name}"
                )));
            }
            Ok(written)
        })
}

fn read_comparison(path: &Path) -> Result<Comparison, CliError> {
    serde_json::from_str(&read_text(path)?)
        .map_err(|e| CliError::Corrupt(format!("{}: {e}", path.display())))
}

pub fn compare(args: &CompareArgs) -> Result<(), CliError> {
    let mut run = Run::new("compare", &args.out);
    for r in &args.reports {
        run = run.input(Some(r));
    }
    run.execute(|_, _| {
        let mut comparison = Comparison::default();
        for path in &args.reports {
            let text = read_text(path)?;
            let report = MetricsReport::from_json(&text)
                .map_err(|e| CliError::Corrupt(format!("{}: {e}", path.display())))?;
            comparison.merge(report);
        }
        let table = comparison.render();
        print!("{table}");
        write_text(&args.out, &table)?;
        Ok(vec![args.out.clone()])
    })
}

pub fn synth(args: &SynthArgs) -> Result<(), CliError> {
    Run::new("synth", &args.out)
        .setting("tokens", args.tokens)
        .setting("male_share", args.male_share)
        .execute(|_, seed| {
            if !(0.0..=1.0).contains(&args.male_share) {
                return Err(CliError::Validation(format!(
                    "--male-share {} must be in [0, 1]",
                    args.male_share
                )));
            }
            *seed = Some(args.seed);
            let synth = SkewedCorpus {
                tokens: args.tokens,
                male_share: args.male_share,
                seed: args.seed,
            };
            write_text(&args.out, &synth.generate())?;
            let mut written = vec![args.out.clone()];
            if let Some(p) = &args.pairs_out {
                write_text(p, fairlm::synthetic::PAIRS)?;
                written.push(p.clone());
            }
            if let Some(p) = &args.occupations_out {
                let list = fairlm::synthetic::OCCUPATIONS.join("\n") + "\n";
                write_text(p, &list)?;
                written.push(p.clone());
            }
            Ok(written)
        })
}
