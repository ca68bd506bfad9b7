//! Bundled word lists: gender pairs, occupations and probe templates.

/// Common English female/male word pairs plus a swap-only section.
pub const GENDER_PAIRS: &str = include_str!("../data/gender_pairs.tsv");

/// Gender-neutral occupations shared by every evaluated model.
pub const OCCUPATIONS: &str = include_str!("../data/occupations.txt");

/// The two probe templates: `{g} is a | {o}` and `the {o} is a | {g}`.
pub const TEMPLATES: &str = include_str!("../data/templates.txt");

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::PairFile;
    use crate::metrics::{parse_templates, parse_word_list};

    #[test]
    fn bundled_lists_parse() {
        let pairs = PairFile::parse(GENDER_PAIRS).unwrap();
        assert!(pairs.pairs.len() >= 50);
        assert!(pairs.pairs.contains(&("she".into(), "he".into())));
        let occ = parse_word_list(OCCUPATIONS);
        assert!(occ.len() >= 40);
        let gendered: Vec<&str> = pairs.words().collect();
        assert!(occ.iter().all(|o| !gendered.contains(&o.as_str())));
        assert_eq!(parse_templates(TEMPLATES).unwrap().len(), 2);
    }
}
