use crate::ingest::{Sentence, Token, Upos};

/// Tense/mood of a finite clause, resolved from auxiliaries and morphology.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ClauseTense {
    Present,
    Imperfect,
    Future,
    PasseCompose,
    Imperative,
    PasseSimple,
    PlusQueParfait,
    FuturAnterieur,
    PasseAnterieur,
    Conditional,
    ConditionalPast,
    Subjunctive,
    SubjunctivePast,
}

impl ClauseTense {
    /// Présent, imparfait, futur simple and passé composé (and the present imperative).
    pub fn is_simple(self) -> bool {
        matches!(
            self,
            ClauseTense::Present
                | ClauseTense::Imperfect
                | ClauseTense::Future
                | ClauseTense::PasseCompose
                | ClauseTense::Imperative
        )
    }
}

fn is_finite(tok: &Token) -> bool {
    match tok.feat("VerbForm") {
        Some(form) => form == "Fin",
        None => tok.feat("Mood").is_some(),
    }
}

/// Tense of a finite verb form on its own.
fn synthetic_tense(tok: &Token) -> Option<ClauseTense> {
    if !is_finite(tok) {
        return None;
    }
    match tok.feat("Mood") {
        Some("Cnd") => return Some(ClauseTense::Conditional),
        Some("Sub") => return Some(ClauseTense::Subjunctive),
        Some("Imp") => return Some(ClauseTense::Imperative),
        _ => {}
    }
    match tok.feat("Tense")? {
        "Pres" => Some(ClauseTense::Present),
        "Imp" => Some(ClauseTense::Imperfect),
        "Fut" => Some(ClauseTense::Future),
        "Past" => Some(ClauseTense::PasseSimple),
        _ => None,
    }
}

/// Compound tense formed by a tense auxiliary and a past participle.
fn compound_tense(aux: &Token) -> Option<ClauseTense> {
    Some(match synthetic_tense(aux)? {
        ClauseTense::Present => ClauseTense::PasseCompose,
        ClauseTense::Imperfect => ClauseTense::PlusQueParfait,
        ClauseTense::Future => ClauseTense::FuturAnterieur,
        ClauseTense::PasseSimple => ClauseTense::PasseAnterieur,
        ClauseTense::Conditional => ClauseTense::ConditionalPast,
        ClauseTense::Subjunctive => ClauseTense::SubjunctivePast,
        other => other,
    })
}

fn is_tense_aux(tok: &Token) -> bool {
    tok.deprel == "aux" || tok.deprel == "aux:tense"
}

/// Tense of the clause headed by token `i`, if it is a finite clause head.
pub(crate) fn clause_tense_at(s: &Sentence, deps: &[Vec<usize>], i: usize) -> Option<ClauseTense> {
    let tok = &s.tokens[i];
    if matches!(tok.deprel_base(), "aux" | "cop") {
        return None;
    }
    let children = &deps[i];
    let find = |pred: &dyn Fn(&Token) -> bool| {
        children
            .iter()
            .map(|&c| &s.tokens[c])
            .find(|t| pred(t) && is_finite(t))
    };
    if let Some(aux) = find(&is_tense_aux) {
        return compound_tense(aux);
    }
    if let Some(aux) = find(&|t: &Token| t.deprel == "aux:pass") {
        return synthetic_tense(aux);
    }
    if let Some(cop) = find(&|t: &Token| t.deprel_base() == "cop") {
        return synthetic_tense(cop);
    }
    if matches!(tok.upos, Upos::Verb | Upos::Aux) {
        return synthetic_tense(tok);
    }
    None
}

/// Finite clauses of a sentence in linear order of their heads. Sentences
/// without dependency heads fall back to one clause per finite verb form.
pub fn clause_tenses(s: &Sentence) -> Vec<(usize, ClauseTense)> {
    if !s.has_heads() {
        return s
            .tokens
            .iter()
            .enumerate()
            .filter_map(|(i, t)| synthetic_tense(t).map(|tense| (i, tense)))
            .collect();
    }
    let deps = s.dependents();
    (0..s.tokens.len())
        .filter_map(|i| clause_tense_at(s, &deps, i).map(|tense| (i, tense)))
        .collect()
}
