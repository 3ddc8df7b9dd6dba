//! The 28 linguistic indicators.
//!
//! Counts are normalised per 100 words (non-punctuation tokens); length
//! indicators are plain averages. The catalog order of [`Feature`] is a
//! compatibility contract for every TSV/JSON output and every trained model.

mod lexical;
mod length;
mod structure;
mod syntactic;
mod tense;

use std::fmt;
use std::ops::Index;

use serde::{Deserialize, Serialize};

use crate::ingest::Document;
use crate::lexicons::Lexicons;

pub use lexical::extract_lexical;
pub use length::extract_length;
pub use structure::extract_structure;
pub use syntactic::extract_syntactic;
pub use tense::{clause_tenses, ClauseTense};

pub const N_FEATURES: usize = 28;

macro_rules! catalog {
    ($($variant:ident => $name:literal,)*) => {
        /// Indicator identifiers in catalog order.
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
        pub enum Feature {
            $($variant,)*
        }

        impl Feature {
            pub const ALL: [Feature; N_FEATURES] = [$(Feature::$variant,)*];

            pub fn name(self) -> &'static str {
                match self {
                    $(Feature::$variant => $name,)*
                }
            }
        }

        pub const FEATURE_NAMES: [&str; N_FEATURES] = [$($name,)*];
    };
}

catalog! {
    LexicalDifficulty => "lexical_difficulty",
    AbbreviationRate => "abbreviation_rate",
    AcronymRate => "acronym_rate",
    NamedEntityRate => "named_entity_rate",
    NumericExpressionRate => "numeric_expression_rate",
    WordsPerSentence => "words_per_sentence",
    DependencyTreeHeight => "mean_dependency_tree_height",
    ConstituencyTreeHeight => "mean_constituency_tree_height",
    CoordinateClauseRate => "coordinate_clause_rate",
    RelativeClauseRate => "relative_clause_rate",
    AdverbialClauseRate => "adverbial_clause_rate",
    ParticipleClauseRate => "participle_clause_rate",
    CleftRate => "cleft_rate",
    InterpolatedClauseRate => "interpolated_clause_rate",
    AppositionRate => "apposition_rate",
    EnumerationRate => "enumeration_rate",
    NonfiniteClauseRate => "nonfinite_clause_rate",
    PassiveRate => "passive_rate",
    ComplexTenseRate => "complex_tense_rate",
    ConditionalMoodRate => "conditional_mood_rate",
    NegationRate => "negation_rate",
    ComplexNpRate => "complex_np_rate",
    BracketedSpanRate => "bracketed_span_rate",
    CompletiveClauseRate => "completive_clause_rate",
    InversionRate => "inversion_rate",
    ConnectiveRate => "connective_rate",
    ComplexConnectiveRate => "complex_connective_rate",
    TemporalBreakRate => "temporal_break_rate",
}

impl Feature {
    pub fn index(self) -> usize {
        self as usize
    }

    /// True for count features normalised per 100 words.
    pub fn is_rate(self) -> bool {
        self.name().ends_with("_rate")
    }
}

impl fmt::Display for Feature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// The 28 indicator values of one document, in catalog order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector(pub [f64; N_FEATURES]);

impl FeatureVector {
    pub fn zeros() -> Self {
        FeatureVector([0.0; N_FEATURES])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn get(&self, feature: Feature) -> f64 {
        self.0[feature.index()]
    }

    /// First feature that is NaN or infinite.
    pub fn first_non_finite(&self) -> Option<Feature> {
        Feature::ALL.into_iter().find(|f| !self.get(*f).is_finite())
    }

    /// JSON object keyed by catalog names, in catalog order.
    pub fn to_json(&self) -> serde_json::Value {
        let map: serde_json::Map<String, serde_json::Value> = Feature::ALL
            .iter()
            .map(|f| (f.name().to_string(), serde_json::json!(self.get(*f))))
            .collect();
        serde_json::Value::Object(map)
    }

    /// Tab-separated values in catalog order.
    pub fn to_tsv_fields(&self) -> String {
        self.0
            .iter()
            .map(|v| v.to_string())
            .collect::<Vec<_>>()
            .join("\t")
    }
}

impl Index<Feature> for FeatureVector {
    type Output = f64;

    fn index(&self, feature: Feature) -> &f64 {
        &self.0[feature.index()]
    }
}

impl From<[f64; N_FEATURES]> for FeatureVector {
    fn from(values: [f64; N_FEATURES]) -> Self {
        FeatureVector(values)
    }
}

/// Header line for feature TSV output: `id` followed by the catalog names.
pub fn tsv_header() -> String {
    std::iter::once("id")
        .chain(FEATURE_NAMES)
        .collect::<Vec<_>>()
        .join("\t")
}

/// Degenerate situations met during extraction. Extraction still produces
/// finite values; these explain where a value is a documented default.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ExtractionWarning {
    /// Sentence without dependency heads; it contributes 0 to syntactic counts.
    MissingHeads { sentence: usize },
    /// No sentence has a constituency tree; constituency height is 0.
    MissingConstituencyTrees,
    /// No content word; lexical difficulty set to the out-of-vocabulary level.
    NoContentWords,
    /// No non-punctuation token; every rate is 0.
    NoWords,
}

impl fmt::Display for ExtractionWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtractionWarning::MissingHeads { sentence } => {
                write!(f, "sentence {sentence} has no dependency heads")
            }
            ExtractionWarning::MissingConstituencyTrees => f.write_str("no constituency trees"),
            ExtractionWarning::NoContentWords => f.write_str("no content words"),
            ExtractionWarning::NoWords => f.write_str("no words"),
        }
    }
}

/// Values of one extractor family plus the warnings it raised.
#[derive(Debug, Clone, PartialEq)]
pub struct Extracted<const N: usize> {
    pub values: [f64; N],
    pub warnings: Vec<ExtractionWarning>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FeatureExtraction {
    pub features: FeatureVector,
    pub warnings: Vec<ExtractionWarning>,
}

/// Converts a raw count into occurrences per 100 words.
pub(crate) fn per_hundred(count: usize, words: usize) -> f64 {
    if words == 0 {
        0.0
    } else {
        count as f64 * 100.0 / words as f64
    }
}

/// Computes all 28 indicators of `doc`.
pub fn extract_features(doc: &Document, lexicons: &Lexicons) -> FeatureExtraction {
    let lexical = extract_lexical(doc, lexicons);
    let length = extract_length(doc);
    let syntactic = extract_syntactic(doc);
    let structure = extract_structure(doc, lexicons.connectives());

    let mut values = [0.0; N_FEATURES];
    let parts: [&[f64]; 4] = [
        &lexical.values,
        &length.values,
        &syntactic.values,
        &structure.values,
    ];
    for (slot, v) in values.iter_mut().zip(parts.into_iter().flatten()) {
        *slot = *v;
    }

    let mut warnings = Vec::new();
    for w in lexical
        .warnings
        .into_iter()
        .chain(length.warnings)
        .chain(syntactic.warnings)
        .chain(structure.warnings)
    {
        if !warnings.contains(&w) {
            warnings.push(w);
        }
    }
    FeatureExtraction {
        features: FeatureVector(values),
        warnings,
    }
}

#[cfg(test)]
pub(crate) mod testutil {
    use crate::ingest::{parse_conllu, Document};

    /// Builds a document from compact token rows:
    /// `form lemma UPOS head deprel [feats]`, heads 1-based as in CoNLL-U.
    pub fn doc(sentences: &[&[&str]]) -> Document {
        let mut text = String::new();
        for rows in sentences {
            for (i, row) in rows.iter().enumerate() {
                let cols: Vec<&str> = row.split_whitespace().collect();
                let feats = cols.get(5).copied().unwrap_or("_");
                text.push_str(&format!(
                    "{}\t{}\t{}\t{}\t_\t{}\t{}\t{}\t_\t_\n",
                    i + 1,
                    cols[0],
                    cols[1],
                    cols[2],
                    feats,
                    cols[3],
                    cols[4]
                ));
            }
            text.push('\n');
        }
        parse_conllu(text.as_bytes()).unwrap().remove(0)
    }
}
