use super::{GenderLexicon, Source, TokenStream};

/// Counterfactual data augmentation: the stream followed by a copy in which
/// every swappable id is replaced by its partner. The copy starts its own
/// documents so windows never straddle the original and its counterfactual.
pub fn cda_augment(stream: &TokenStream, lexicon: &GenderLexicon) -> TokenStream {
    let swapped: Vec<Vec<usize>> = stream
        .documents()
        .map(|doc| {
            doc.iter()
                .map(|&id| lexicon.swap(id).unwrap_or(id))
                .collect()
        })
        .collect();
    let originals = stream.documents().map(<[usize]>::to_vec);
    let docs: Vec<Vec<usize>> = originals.chain(swapped).collect();
    TokenStream::from_documents(docs, Source::Augmented)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{PairFile, Vocabulary};
    use proptest::prelude::*;

    fn setup() -> (Vocabulary, GenderLexicon) {
        let v = Vocabulary::build(&["he", "she", "is", "a", "doctor", "man", "woman"], 1, None);
        let lex = GenderLexicon::resolve(&PairFile::parse("she\the\nwoman\tman").unwrap(), &v);
        (v, lex)
    }

    #[test]
    fn swaps_gendered_words_in_the_copy() {
        let (v, lex) = setup();
        let s = TokenStream::new(v.encode(&["he", "is", "a", "doctor"]), Source::Raw);
        let out = cda_augment(&s, &lex);
        assert_eq!(
            v.decode(&out.ids),
            vec!["he", "is", "a", "doctor", "she", "is", "a", "doctor"]
        );
        assert_eq!(out.source, Source::Augmented);
        assert_eq!(out.num_documents(), 2);
    }

    #[test]
    fn neutral_stream_is_duplicated() {
        let (v, lex) = setup();
        let ids = v.encode(&["is", "a", "doctor"]);
        let out = cda_augment(&TokenStream::new(ids.clone(), Source::Raw), &lex);
        assert_eq!(out.ids, [ids.clone(), ids].concat());
    }

    fn count(ids: &[usize], id: usize) -> usize {
        ids.iter().filter(|&&x| x == id).count()
    }

    proptest! {
        #[test]
        fn pair_counts_equalize(ids in proptest::collection::vec(2usize..9, 0..200)) {
            let (v, lex) = setup();
            let s = TokenStream::new(ids, Source::Raw);
            let once = cda_augment(&s, &lex);
            let twice = cda_augment(&once, &lex);
            prop_assert_eq!(once.len(), 2 * s.len());
            prop_assert_eq!(twice.len(), 4 * s.len());
            for p in lex.pairs() {
                prop_assert_eq!(count(&once.ids, p.female), count(&once.ids, p.male));
                prop_assert_eq!(count(&twice.ids, p.female), count(&twice.ids, p.male));
            }
            prop_assert_eq!(count(&once.ids, v.id("he")), count(&once.ids, v.id("she")));
        }
    }
}
