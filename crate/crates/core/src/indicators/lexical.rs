use super::{per_hundred, Extracted, ExtractionWarning};
use crate::ingest::{Document, Token, Upos};
use crate::lexicons::Lexicons;

/// Abbreviations that are usually written without a final period.
const ABBREVIATIONS: &[&str] = &[
    "mme", "mmes", "mlle", "mlles", "dr", "etc", "cf", "vs", "n°", "ste", "st", "bd",
];

fn is_content(tok: &Token) -> bool {
    matches!(tok.upos, Upos::Noun | Upos::Verb | Upos::Adj | Upos::Adv)
}

fn is_abbreviation(tok: &Token) -> bool {
    let form = tok.form.as_str();
    if form.ends_with('.') && form.chars().count() <= 4 && form.chars().any(char::is_alphabetic) {
        return true;
    }
    ABBREVIATIONS.contains(&form.trim_end_matches('.').to_lowercase().as_str())
}

fn is_acronym(tok: &Token) -> bool {
    let letters: Vec<char> = tok.form.chars().filter(|c| c.is_alphabetic()).collect();
    letters.len() >= 2 && letters.iter().all(|c| c.is_uppercase())
}

fn is_numeric(tok: &Token) -> bool {
    tok.upos == Upos::Num || tok.form.chars().any(|c| c.is_ascii_digit())
}

/// L1 to L5: lexical difficulty, then abbreviation, acronym, named-entity and
/// numeric-expression rates.
pub fn extract_lexical(doc: &Document, lexicons: &Lexicons) -> Extracted<5> {
    let mut warnings = Vec::new();
    let mut level_sum = 0.0;
    let mut content = 0usize;
    let (mut abbr, mut acronyms, mut entities, mut numeric) = (0, 0, 0, 0);

    for sentence in &doc.sentences {
        let mut in_entity = false;
        for tok in &sentence.tokens {
            if is_content(tok) {
                level_sum += lexicons.word_level(&tok.lookup_lemma());
                content += 1;
            }
            if tok.upos == Upos::Propn {
                if !in_entity {
                    entities += 1;
                }
                in_entity = true;
            } else {
                in_entity = false;
            }
            if tok.is_punct() {
                continue;
            }
            abbr += usize::from(is_abbreviation(tok));
            acronyms += usize::from(is_acronym(tok));
            numeric += usize::from(is_numeric(tok));
        }
    }

    let words = doc.word_count();
    let difficulty = if content == 0 {
        warnings.push(ExtractionWarning::NoContentWords);
        lexicons.oov_level()
    } else {
        level_sum / content as f64
    };
    if words == 0 {
        warnings.push(ExtractionWarning::NoWords);
    }
    Extracted {
        values: [
            difficulty,
            per_hundred(abbr, words),
            per_hundred(acronyms, words),
            per_hundred(entities, words),
            per_hundred(numeric, words),
        ],
        warnings,
    }
}
