use super::{Extracted, ExtractionWarning};
use crate::ingest::Document;

/// S1 to S3: tokens per sentence, mean dependency tree height and mean
/// constituency tree height.
///
/// S1 counts every token, punctuation included. Sentences without heads are
/// left out of S2; sentences without a tree are left out of S3.
pub fn extract_length(doc: &Document) -> Extracted<3> {
    let mut warnings = Vec::new();
    let n = doc.sentences.len().max(1) as f64;
    let words_per_sentence = doc.token_count() as f64 / n;

    let dep_heights: Vec<usize> = doc
        .sentences
        .iter()
        .filter_map(|s| s.depths())
        .map(|d| d.into_iter().max().unwrap_or(0))
        .collect();
    let dep = mean(&dep_heights);

    let const_heights: Vec<usize> = doc
        .sentences
        .iter()
        .filter_map(|s| s.const_tree.as_ref().map(|t| t.height()))
        .collect();
    if const_heights.is_empty() {
        warnings.push(ExtractionWarning::MissingConstituencyTrees);
    }
    let constituency = mean(&const_heights);

    Extracted {
        values: [words_per_sentence, dep, constituency],
        warnings,
    }
}

fn mean(values: &[usize]) -> f64 {
    if values.is_empty() {
        0.0
    } else {
        values.iter().sum::<usize>() as f64 / values.len() as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::indicators::testutil::doc;
    use crate::ingest::parse_bracketed_tree;

    #[test]
    fn words_per_sentence() {
        let ten: Vec<String> = (0..10).map(|_| "a a X _ _".to_string()).collect();
        let twenty: Vec<String> = (0..20).map(|_| "a a X _ _".to_string()).collect();
        let a: Vec<&str> = ten.iter().map(String::as_str).collect();
        let b: Vec<&str> = twenty.iter().map(String::as_str).collect();
        assert_eq!(extract_length(&doc(&[&a, &b])).values[0], 15.0);
    }

    #[test]
    fn chain_height() {
        let d = doc(&[&[
            "r r VERB 0 root",
            "a a NOUN 1 obj",
            "b b ADJ 2 amod",
            "c c ADV 3 advmod",
        ]]);
        let out = extract_length(&d);
        assert_eq!(out.values[1], 3.0);
        assert_eq!(out.values[2], 0.0);
        assert_eq!(out.warnings, [ExtractionWarning::MissingConstituencyTrees]);
    }

    #[test]
    fn constituency_mean_over_sentences_with_trees() {
        let mut d = doc(&[
            &["Le le DET 2 det", "chat chat NOUN 3 nsubj", "dort dormir VERB 0 root"],
            &["Il il PRON 2 nsubj", "dort dormir VERB 0 root"],
        ]);
        d.sentences[0].const_tree =
            Some(parse_bracketed_tree("(SENT (NP (DET Le) (NC chat)) (VN (V dort)))").unwrap());
        let out = extract_length(&d);
        assert_eq!(out.values[2], 2.0);
        assert!(out.warnings.is_empty());
    }
}
