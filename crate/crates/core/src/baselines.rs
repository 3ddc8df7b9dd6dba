//! Classical readability formulas with their standard English coefficients.
//! Higher values mean harder text.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::{count_syllables_fr, Document, Upos};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BaselineError {
    #[error("degenerate document: {0}")]
    Degenerate(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReadabilityCounts {
    pub words: usize,
    pub sentences: usize,
    pub syllables: usize,
    /// Words of three syllables or more.
    pub polysyllables: usize,
    /// Polysyllables that are not proper nouns.
    pub complex_words: usize,
}

impl ReadabilityCounts {
    pub fn scaled(self, k: usize) -> Self {
        ReadabilityCounts {
            words: self.words * k,
            sentences: self.sentences * k,
            syllables: self.syllables * k,
            polysyllables: self.polysyllables * k,
            complex_words: self.complex_words * k,
        }
    }
}

/// Counts words (non-punctuation tokens), sentences and syllables. A word
/// without letters, such as a number, counts as one syllable.
pub fn compute_counts(doc: &Document) -> Result<ReadabilityCounts, BaselineError> {
    let mut c = ReadabilityCounts {
        words: 0,
        sentences: 0,
        syllables: 0,
        polysyllables: 0,
        complex_words: 0,
    };
    for sentence in &doc.sentences {
        let mut has_word = false;
        for tok in sentence.tokens.iter().filter(|t| !t.is_punct()) {
            has_word = true;
            let syl = count_syllables_fr(&tok.form).unwrap_or(1);
            c.words += 1;
            c.syllables += syl;
            if syl >= 3 {
                c.polysyllables += 1;
                if tok.upos != Upos::Propn {
                    c.complex_words += 1;
                }
            }
        }
        c.sentences += usize::from(has_word);
    }
    if c.words == 0 {
        return Err(BaselineError::Degenerate("no words"));
    }
    Ok(c)
}

pub fn fkgl(c: &ReadabilityCounts) -> f64 {
    0.39 * (c.words as f64 / c.sentences as f64) + 11.8 * (c.syllables as f64 / c.words as f64)
        - 15.59
}

pub fn smog(c: &ReadabilityCounts) -> f64 {
    1.0430 * (c.polysyllables as f64 * 30.0 / c.sentences as f64).sqrt() + 3.1291
}

pub fn gunning_fog(c: &ReadabilityCounts) -> f64 {
    0.4 * (c.words as f64 / c.sentences as f64 + 100.0 * c.complex_words as f64 / c.words as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Baseline {
    Fkgl,
    Smog,
    GunningFog,
}

impl Baseline {
    pub const ALL: [Baseline; 3] = [Baseline::Fkgl, Baseline::Smog, Baseline::GunningFog];

    pub fn name(self) -> &'static str {
        match self {
            Baseline::Fkgl => "fkgl",
            Baseline::Smog => "smog",
            Baseline::GunningFog => "gunning_fog",
        }
    }

    pub fn apply(self, c: &ReadabilityCounts) -> f64 {
        match self {
            Baseline::Fkgl => fkgl(c),
            Baseline::Smog => smog(c),
            Baseline::GunningFog => gunning_fog(c),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::segment_plain_text;

    fn counts(words: usize, sentences: usize, syllables: usize, poly: usize, complex: usize) -> ReadabilityCounts {
        ReadabilityCounts {
            words,
            sentences,
            syllables,
            polysyllables: poly,
            complex_words: complex,
        }
    }

    #[test]
    fn formula_values() {
        assert!((fkgl(&counts(20, 2, 30, 0, 0)) - 6.01).abs() < 1e-9);
        assert!((fkgl(&counts(30, 3, 30, 0, 0)) - 0.11).abs() < 1e-9);
        assert!((smog(&counts(100, 30, 200, 30, 30)) - 8.841_846_3).abs() < 1e-6);
        assert_eq!(smog(&counts(10, 1, 10, 0, 0)), 3.1291);
        assert!((gunning_fog(&counts(100, 5, 150, 10, 10)) - 12.0).abs() < 1e-9);
        assert!((gunning_fog(&counts(50, 5, 50, 0, 0)) - 4.0).abs() < 1e-9);
    }

    #[test]
    fn counts_of_short_text() {
        let doc = segment_plain_text("Le chat dort.").unwrap();
        let c = compute_counts(&doc).unwrap();
        assert_eq!((c.words, c.sentences, c.syllables), (3, 1, 3));
    }

    #[test]
    fn proper_nouns_are_not_complex_words() {
        let mut doc = segment_plain_text("Napoléon visitait Bordeaux.").unwrap();
        doc.sentences[0].tokens[0].upos = Upos::Propn;
        let c = compute_counts(&doc).unwrap();
        // Napoléon and visitait have three vowel groups, Bordeaux two.
        assert_eq!((c.polysyllables, c.complex_words), (2, 1));
    }

    #[test]
    fn punctuation_only_is_degenerate() {
        let doc = Document::new(
            "p",
            vec![crate::Sentence::new(vec![crate::Token::bare("…")], 0)],
        )
        .unwrap();
        assert!(compute_counts(&doc).is_err());
    }
}
