use super::tense::clause_tense_at;
use super::{per_hundred, Extracted, ExtractionWarning};
use crate::ingest::{Document, Sentence, Token, Upos};

const Y1: usize = 0;
const Y2: usize = 1;
const Y3: usize = 2;
const Y4: usize = 3;
const Y5: usize = 4;
const Y6: usize = 5;
const Y7: usize = 6;
const Y8: usize = 7;
const Y9: usize = 8;
const Y10: usize = 9;
const Y11: usize = 10;
const Y12: usize = 11;
const Y13: usize = 12;
const Y14: usize = 13;
const Y15: usize = 14;
const Y16: usize = 15;
const Y17: usize = 16;

const RELATIVE_LEMMAS: &[&str] = &["qui", "que", "dont", "où", "lequel", "laquelle", "lesquels", "lesquelles"];

fn is_relative_pronoun(tok: &Token) -> bool {
    tok.has_feat("PronType", "Rel")
        || (tok.upos == Upos::Pron && RELATIVE_LEMMAS.contains(&tok.lookup_lemma().as_str()))
}

fn is_delimiter(tok: &Token) -> bool {
    matches!(tok.form.as_str(), "," | "-" | "–" | "—")
}

fn is_verbal(tok: &Token) -> bool {
    matches!(tok.upos, Upos::Verb | Upos::Aux)
}

/// Raw occurrence counts of the 17 syntactic phenomena in one sentence.
/// The sentence must carry heads.
fn sentence_counts(s: &Sentence) -> [usize; 17] {
    let mut c = [0usize; 17];
    let toks = &s.tokens;
    let deps = s.dependents();
    let head_of = |i: usize| toks[i].head_index().filter(|&h| h < toks.len());
    let finite = |i: usize| clause_tense_at(s, &deps, i);

    for (i, tok) in toks.iter().enumerate() {
        let rel = tok.deprel.as_str();
        let base = tok.deprel_base();
        let children = &deps[i];

        if base == "conj" && tok.upos == Upos::Verb {
            if let Some(h) = head_of(i) {
                if toks[h].upos == Upos::Verb {
                    c[Y1] += 1;
                }
            }
        }
        if rel == "acl:relcl"
            || (rel == "acl" && children.iter().any(|&d| is_relative_pronoun(&toks[d])))
        {
            c[Y2] += 1;
        }
        if base == "advcl" {
            c[Y3] += 1;
        }
        // A bare participle clause: no auxiliary or copula of its own.
        if matches!(base, "acl" | "advcl")
            && tok.has_feat("VerbForm", "Part")
            && !children
                .iter()
                .any(|&d| matches!(toks[d].deprel_base(), "aux" | "cop"))
        {
            c[Y4] += 1;
        }
        if tok.lookup_lemma() == "ce" {
            let etre = (i + 1..toks.len().min(i + 3)).find(|&j| toks[j].lookup_lemma() == "être");
            if let Some(j) = etre {
                if (j + 1..toks.len().min(j + 5)).any(|k| is_relative_pronoun(&toks[k])) {
                    c[Y5] += 1;
                }
            }
        }
        if base == "parataxis"
            || (!matches!(base, "root" | "conj") && finite(i).is_some() && is_interpolated(s, &deps, i))
        {
            c[Y6] += 1;
        }
        if base == "appos" {
            c[Y7] += 1;
        }
        if is_enumeration_head(s, children) {
            c[Y8] += 1;
        }
        if matches!(base, "xcomp" | "ccomp" | "acl") && tok.has_feat("VerbForm", "Inf") {
            c[Y9] += 1;
        }
        if children
            .iter()
            .any(|&d| matches!(toks[d].deprel.as_str(), "nsubj:pass" | "aux:pass"))
        {
            c[Y10] += 1;
        }
        if finite(i).is_some_and(|t| !t.is_simple()) {
            c[Y11] += 1;
        }
        if tok.has_feat("Mood", "Cnd") {
            c[Y12] += 1;
        }
        if tok.upos == Upos::Noun && is_complex_np(s, &deps, i) {
            c[Y14] += 1;
        }
        if rel == "ccomp" && finite(i).is_some() {
            c[Y16] += 1;
        }
        if base == "nsubj" {
            if let Some(h) = head_of(i) {
                if h < i && is_verbal(&toks[h]) {
                    c[Y17] += 1;
                }
            }
        }
    }
    c[Y13] = negation_scopes(s);
    c[Y15] = bracket_spans(toks);
    c
}

/// Contiguous token range covered by the subtree of `i`.
fn subtree_span(deps: &[Vec<usize>], i: usize) -> (usize, usize) {
    let (mut lo, mut hi) = (i, i);
    let mut seen = vec![false; deps.len()];
    let mut stack = vec![i];
    while let Some(n) = stack.pop() {
        if std::mem::replace(&mut seen[n], true) {
            continue;
        }
        lo = lo.min(n);
        hi = hi.max(n);
        stack.extend(&deps[n]);
    }
    (lo, hi)
}

/// The clause headed by `i` is set off by commas or dashes on both sides,
/// whether the delimiters attach inside its subtree or just outside it.
fn is_interpolated(s: &Sentence, deps: &[Vec<usize>], i: usize) -> bool {
    let toks = &s.tokens;
    let (lo, hi) = subtree_span(deps, i);
    let left = (lo != i && is_delimiter(&toks[lo])) || (lo > 0 && is_delimiter(&toks[lo - 1]));
    let right = (hi != i && is_delimiter(&toks[hi]))
        || (hi + 1 < toks.len() && is_delimiter(&toks[hi + 1]));
    left && right
}

/// At least three conjuncts attached to one head, or at least three siblings
/// sharing a relation with commas between them.
fn is_enumeration_head(s: &Sentence, children: &[usize]) -> bool {
    let toks = &s.tokens;
    if children.iter().filter(|&&d| toks[d].deprel_base() == "conj").count() >= 3 {
        return true;
    }
    let args: Vec<usize> = children
        .iter()
        .copied()
        .filter(|&d| !matches!(toks[d].deprel_base(), "punct" | "conj" | "cc"))
        .collect();
    let mut run = 1;
    for w in args.windows(2) {
        let (a, b) = (w[0], w[1]);
        let comma_between = toks[a + 1..b].iter().any(|t| t.form == ",");
        if toks[a].deprel == toks[b].deprel && comma_between {
            run += 1;
            if run >= 3 {
                return true;
            }
        } else {
            run = 1;
        }
    }
    false
}

fn is_negation_marker(tok: &Token) -> bool {
    if tok.has_feat("Polarity", "Neg") {
        return true;
    }
    match tok.lookup_lemma().as_str() {
        "ne" | "pas" | "jamais" => true,
        "rien" | "personne" => tok.upos == Upos::Pron,
        _ => false,
    }
}

/// Negation scopes: markers are grouped by the token they attach to, so
/// `ne ... pas` or `personne ne ...` on one verb is a single scope. `plus`
/// is a marker only next to a `ne` on the same head.
fn negation_scopes(s: &Sentence) -> usize {
    let toks = &s.tokens;
    let scope_of = |i: usize| toks[i].head_index().unwrap_or(i);
    let ne_heads: Vec<usize> = (0..toks.len())
        .filter(|&i| toks[i].lookup_lemma() == "ne")
        .map(scope_of)
        .collect();
    let mut scopes: Vec<usize> = (0..toks.len())
        .filter(|&i| {
            is_negation_marker(&toks[i])
                || (toks[i].lookup_lemma() == "plus" && ne_heads.contains(&scope_of(i)))
        })
        .map(scope_of)
        .collect();
    scopes.sort_unstable();
    scopes.dedup();
    scopes.len()
}

fn is_complex_np(s: &Sentence, deps: &[Vec<usize>], i: usize) -> bool {
    let toks = &s.tokens;
    let modifiers = deps[i]
        .iter()
        .filter(|&&d| matches!(toks[d].deprel_base(), "amod" | "nmod" | "acl"))
        .count();
    if modifiers >= 2 {
        return true;
    }
    deps[i].iter().any(|&d| {
        toks[d].deprel_base() == "nmod" && deps[d].iter().any(|&e| toks[e].deprel_base() == "nmod")
    })
}

/// Matched `(...)` and `[...]` pairs.
fn bracket_spans(toks: &[Token]) -> usize {
    let mut stack = Vec::new();
    let mut matched = 0;
    for t in toks {
        match t.form.as_str() {
            "(" | "[" => stack.push(t.form.as_str()),
            ")" | "]" => {
                let open = if t.form == ")" { "(" } else { "[" };
                if let Some(pos) = stack.iter().rposition(|&o| o == open) {
                    stack.truncate(pos);
                    matched += 1;
                }
            }
            _ => {}
        }
    }
    matched
}

/// Y1 to Y17, per 100 words.
pub fn extract_syntactic(doc: &Document) -> Extracted<17> {
    let mut totals = [0usize; 17];
    let mut warnings = Vec::new();
    for (idx, s) in doc.sentences.iter().enumerate() {
        if !s.has_heads() || s.check_tree().is_err() {
            warnings.push(ExtractionWarning::MissingHeads { sentence: idx });
            continue;
        }
        for (t, c) in totals.iter_mut().zip(sentence_counts(s)) {
            *t += c;
        }
    }
    let words = doc.word_count();
    Extracted {
        values: totals.map(|c| per_hundred(c, words)),
        warnings,
    }
}
