use fairlm::corpus::{cda_augment, GenderLexicon, Source, TokenStream};
use fairlm::metrics::{
    conditional_bias, count_cooccurrence, embedding_bias, fixed_bias, gender_ratio, perplexity,
};
use fairlm::model::{Matrix, ModelHyper, ModelParams};
use proptest::prelude::*;
use std::collections::BTreeMap;

const V: usize = 12;

fn lexicon() -> GenderLexicon {
    GenderLexicon::from_id_pairs(&[(2, 3), (4, 5)], V)
}

/// Every ordered (gendered, neutral) position pair within the window.
fn brute_force(docs: &[Vec<usize>], lex: &GenderLexicon, window: usize) -> BTreeMap<usize, [u64; 2]> {
    let mut counts = BTreeMap::new();
    for doc in docs {
        for (i, &a) in doc.iter().enumerate() {
            for (j, &b) in doc.iter().enumerate() {
                if i == j || i.abs_diff(j) > window {
                    continue;
                }
                if let Some(g) = lex.gender_of(a) {
                    if lex.is_neutral(b) {
                        counts.entry(b).or_insert([0u64; 2])[g.index()] += 1;
                    }
                }
            }
        }
    }
    counts
}

fn corpus() -> impl Strategy<Value = Vec<Vec<usize>>> {
    prop::collection::vec(prop::collection::vec(0..V, 1..60), 1..6)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn counts_equal_all_pairs_enumeration(docs in corpus(), window in prop::sample::select(vec![1usize, 2, 5, 10])) {
        let lex = lexicon();
        let stream = TokenStream::from_documents(docs.clone(), Source::Raw);
        let table = count_cooccurrence(&[stream], &lex, window);
        prop_assert_eq!(table.counts, brute_force(&docs, &lex, window));
    }

    #[test]
    fn swapping_genders_preserves_bias_and_inverts_ratio(docs in corpus()) {
        let lex = lexicon();
        let stream = TokenStream::from_documents(docs.clone(), Source::Raw);
        let swapped = TokenStream::from_documents(
            docs.iter().map(|d| d.iter().map(|&t| lex.swap(t).unwrap_or(t)).collect::<Vec<_>>()),
            Source::Raw,
        );
        let a = count_cooccurrence(std::slice::from_ref(&stream), &lex, 3);
        let b = count_cooccurrence(std::slice::from_ref(&swapped), &lex, 3);
        match (fixed_bias(&a, 0), fixed_bias(&b, 0)) {
            (Ok(x), Ok(y)) => prop_assert!((x.value - y.value).abs() < 1e-12),
            (x, y) => prop_assert_eq!(x.is_err(), y.is_err()),
        }
        if let (Ok(x), Ok(y)) = (conditional_bias(&a, 0), conditional_bias(&b, 0)) {
            prop_assert!((x.value - y.value).abs() < 1e-12);
        }
        if let (Ok(x), Ok(y)) = (gender_ratio(&[stream], &lex), gender_ratio(&[swapped], &lex)) {
            prop_assert!((x * y - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn augmentation_balances_every_count(docs in corpus()) {
        let lex = lexicon();
        let aug = cda_augment(&TokenStream::from_documents(docs, Source::Raw), &lex);
        let table = count_cooccurrence(std::slice::from_ref(&aug), &lex, 10);
        for c in table.counts.values() {
            prop_assert_eq!(c[0], c[1]);
        }
        if let Ok(r) = gender_ratio(&[aug], &lex) {
            prop_assert_eq!(r, 1.0);
        }
    }

    #[test]
    fn embedding_bias_is_nonnegative_and_zero_for_shared_rows(seed in 0u64..1000) {
        let hyper = ModelHyper { embed_dim: 4, hidden_units: 2, num_layers: 1, seq_len: 2, dropout: 0.0 };
        let mut e = ModelParams::init(&hyper, V, seed).embedding;
        let lex = lexicon();
        prop_assert!(embedding_bias(&e, &lex, &[8, 9, 10]) >= 0.0);
        for p in lex.pairs() {
            let row = e.row(p.male).to_vec();
            e.row_mut(p.female).copy_from_slice(&row);
        }
        prop_assert_eq!(embedding_bias(&e, &lex, &[8, 9, 10]), 0.0);
    }
}

#[test]
fn zero_weight_model_perplexity_is_vocab_size() {
    let hyper = ModelHyper {
        embed_dim: 6,
        hidden_units: 5,
        num_layers: 2,
        seq_len: 3,
        dropout: 0.0,
    };
    for v in [5, 40, 333] {
        let params = ModelParams::zeros(&hyper, v);
        let heldout: Vec<usize> = (0..200).map(|i| (i * 7 + 3) % v).collect();
        let ppl = perplexity(&params, &heldout).unwrap();
        assert!((ppl - v as f64).abs() < 1e-6, "{ppl} vs {v}");
    }
}

#[test]
fn embedding_bias_sums_rather_than_averages() {
    // unk, eos, f, m, o1, o2 on a line: each occupation adds |d(o,m) - d(o,f)|
    let e = Matrix::from_vec(6, 1, vec![0.0, 0.0, -1.0, 1.0, 3.0, 5.0]);
    let lex = GenderLexicon::from_id_pairs(&[(2, 3)], 6);
    assert!((embedding_bias(&e, &lex, &[4]) - 2.0).abs() < 1e-12);
    assert!((embedding_bias(&e, &lex, &[4, 5]) - 4.0).abs() < 1e-12);
}
