use crate::corpus::GenderLexicon;
use crate::model::Matrix;

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Embedding bias: sum over occupations and pairs of
/// `| ||E(o) - E(m)|| - ||E(o) - E(f)|| |`. A sum, not a mean, so values are
/// only comparable for equal occupation and pair counts.
pub fn embedding_bias(embedding: &Matrix, lexicon: &GenderLexicon, occupations: &[usize]) -> f64 {
    let mut total = 0.0;
    for &o in occupations {
        let eo = embedding.row(o);
        for p in lexicon.pairs() {
            total += (distance(eo, embedding.row(p.male)) - distance(eo, embedding.row(p.female))).abs();
        }
    }
    total
}
