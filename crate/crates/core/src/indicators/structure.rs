use super::tense::clause_tenses;
use super::{per_hundred, Extracted};
use crate::ingest::{Document, Sentence};
use crate::lexicons::{Complexity, ConnectiveCategory, ConnectiveMatch, ConnectivesLexicon};

fn first_word(s: &Sentence) -> Option<usize> {
    s.tokens.iter().position(|t| !t.is_punct())
}

/// A conjunction is positionally complex when the clause it introduces comes
/// before the clause it depends on ("Bien que X, Y"). Without heads, a
/// sentence-initial conjunction is taken as fronted.
fn fronted_conjunction(s: &Sentence, m: &ConnectiveMatch) -> bool {
    if !s.has_heads() {
        return first_word(s) == Some(m.start);
    }
    let toks = &s.tokens;
    let span = m.start..m.start + m.len;
    // The clause marked by the connective: the head of its first token that
    // lies outside the connective itself.
    let clause = span
        .clone()
        .filter_map(|i| toks[i].head_index())
        .find(|h| !span.contains(h) && *h < toks.len());
    match clause {
        Some(c) => matches!(toks[c].head_index(), Some(g) if c < g),
        None => false,
    }
}

fn is_complex(s: &Sentence, m: &ConnectiveMatch) -> bool {
    if m.info.complexity == Complexity::Complex {
        return true;
    }
    match m.info.category {
        ConnectiveCategory::Conjunction => fronted_conjunction(s, m),
        ConnectiveCategory::Adverbial => first_word(s) != Some(m.start),
        ConnectiveCategory::Other => false,
    }
}

/// T1 to T3: connective rate, complex connective rate and temporal break rate.
///
/// Temporal breaks are changes of clause tense between consecutive finite
/// clauses of the same paragraph, across sentence boundaries.
pub fn extract_structure(doc: &Document, connectives: &ConnectivesLexicon) -> Extracted<3> {
    let mut matches = 0;
    let mut complex = 0;
    for s in &doc.sentences {
        let forms: Vec<&str> = s.tokens.iter().map(|t| t.form.as_str()).collect();
        for m in connectives.find_all(&forms) {
            matches += 1;
            complex += usize::from(is_complex(s, &m));
        }
    }

    let mut breaks = 0;
    let mut previous = None;
    let mut paragraph = None;
    for s in &doc.sentences {
        if paragraph != Some(s.paragraph_id) {
            previous = None;
            paragraph = Some(s.paragraph_id);
        }
        for (_, tense) in clause_tenses(s) {
            if previous.is_some_and(|p| p != tense) {
                breaks += 1;
            }
            previous = Some(tense);
        }
    }

    let words = doc.word_count();
    Extracted {
        values: [
            per_hundred(matches, words),
            per_hundred(complex, words),
            per_hundred(breaks, words),
        ],
        warnings: Vec::new(),
    }
}
