//! Documents and the readers that produce them.
//!
//! Parses are consumed from CoNLL-U (dependencies) and Penn-style bracketed
//! trees (constituency), so the rest of the crate does not depend on any
//! particular NLP pipeline. Plain-text segmentation exists only so the
//! readability baselines can run on unparsed text.

mod conllu;
mod plain;
mod syllables;
mod tree;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::Label;

pub use conllu::{attach_trees, parse_conllu, parse_tree_sidecar, read_conllu_file, write_conllu};
pub use plain::segment_plain_text;
pub use syllables::count_syllables_fr;
pub use tree::parse_bracketed_tree;

#[derive(Debug, Error, PartialEq)]
pub enum IngestError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("malformed dependency structure (line {line}): {message}")]
    Structure { line: usize, message: String },
    #[error("bracketed tree, offset {offset}: {message}")]
    Tree { offset: usize, message: String },
    #[error("empty document")]
    EmptyDocument,
    #[error("empty word")]
    EmptyWord,
    #[error("constituency tree for sentence {sent_id} does not match its tokens")]
    TreeMismatch { sent_id: String },
    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for IngestError {
    fn from(e: std::io::Error) -> Self {
        IngestError::Io(e.to_string())
    }
}

/// Universal POS tags (UD v2).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Upos {
    Adj,
    Adp,
    Adv,
    Aux,
    Cconj,
    Det,
    Intj,
    Noun,
    Num,
    Part,
    Pron,
    Propn,
    Punct,
    Sconj,
    Sym,
    Verb,
    X,
}

impl Upos {
    pub const ALL: [Upos; 17] = [
        Upos::Adj,
        Upos::Adp,
        Upos::Adv,
        Upos::Aux,
        Upos::Cconj,
        Upos::Det,
        Upos::Intj,
        Upos::Noun,
        Upos::Num,
        Upos::Part,
        Upos::Pron,
        Upos::Propn,
        Upos::Punct,
        Upos::Sconj,
        Upos::Sym,
        Upos::Verb,
        Upos::X,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Upos::Adj => "ADJ",
            Upos::Adp => "ADP",
            Upos::Adv => "ADV",
            Upos::Aux => "AUX",
            Upos::Cconj => "CCONJ",
            Upos::Det => "DET",
            Upos::Intj => "INTJ",
            Upos::Noun => "NOUN",
            Upos::Num => "NUM",
            Upos::Part => "PART",
            Upos::Pron => "PRON",
            Upos::Propn => "PROPN",
            Upos::Punct => "PUNCT",
            Upos::Sconj => "SCONJ",
            Upos::Sym => "SYM",
            Upos::Verb => "VERB",
            Upos::X => "X",
        }
    }
}

impl fmt::Display for Upos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Upos {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "_" {
            return Ok(Upos::X);
        }
        Upos::ALL
            .iter()
            .copied()
            .find(|u| u.as_str() == s)
            .ok_or_else(|| format!("unknown UPOS tag {s:?}"))
    }
}

/// Governor of a token.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Head {
    /// The token is the root of its sentence.
    Root,
    /// 0-based index of the governing token in the same sentence.
    Index(usize),
    /// The sentence carries no dependency analysis.
    Missing,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Token {
    pub form: String,
    pub lemma: String,
    pub upos: Upos,
    pub feats: BTreeMap<String, String>,
    pub head: Head,
    pub deprel: String,
}

impl Token {
    /// A token without lemma, tag or head, as produced by plain-text segmentation.
    pub fn bare(form: impl Into<String>) -> Self {
        let form = form.into();
        Token {
            lemma: form.to_lowercase(),
            form,
            upos: Upos::X,
            feats: BTreeMap::new(),
            head: Head::Missing,
            deprel: "_".to_string(),
        }
    }

    pub fn feat(&self, key: &str) -> Option<&str> {
        self.feats.get(key).map(String::as_str)
    }

    pub fn has_feat(&self, key: &str, value: &str) -> bool {
        self.feat(key) == Some(value)
    }

    /// Universal relation without its language-specific subtype (`acl:relcl` -> `acl`).
    pub fn deprel_base(&self) -> &str {
        self.deprel.split(':').next().unwrap_or("")
    }

    pub fn head_index(&self) -> Option<usize> {
        match self.head {
            Head::Index(i) => Some(i),
            _ => None,
        }
    }

    pub fn is_punct(&self) -> bool {
        self.upos == Upos::Punct || !self.form.chars().any(char::is_alphanumeric)
    }

    pub fn is_bracket_open(&self) -> bool {
        matches!(self.form.as_str(), "(" | "[")
    }

    pub fn is_bracket_close(&self) -> bool {
        matches!(self.form.as_str(), ")" | "]")
    }

    /// Lemma for lexicon lookups, falling back to the form when the lemma is absent.
    pub fn lookup_lemma(&self) -> String {
        if self.lemma.is_empty() || self.lemma == "_" {
            self.form.to_lowercase()
        } else {
            self.lemma.to_lowercase()
        }
    }
}

/// A phrase-structure node. Leaves are pre-terminals: they carry the POS
/// label and the word form, and have height 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstituencyNode {
    pub label: String,
    pub children: Vec<ConstituencyNode>,
    pub leaf_form: Option<String>,
}

impl ConstituencyNode {
    pub fn leaf(label: impl Into<String>, form: impl Into<String>) -> Self {
        ConstituencyNode {
            label: label.into(),
            children: Vec::new(),
            leaf_form: Some(form.into()),
        }
    }

    pub fn node(label: impl Into<String>, children: Vec<ConstituencyNode>) -> Self {
        ConstituencyNode {
            label: label.into(),
            children,
            leaf_form: None,
        }
    }

    pub fn is_leaf(&self) -> bool {
        self.children.is_empty()
    }

    pub fn height(&self) -> usize {
        self.children
            .iter()
            .map(|c| c.height() + 1)
            .max()
            .unwrap_or(0)
    }

    pub fn leaves(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.collect_leaves(&mut out);
        out
    }

    fn collect_leaves<'a>(&'a self, out: &mut Vec<&'a str>) {
        match &self.leaf_form {
            Some(form) => out.push(form),
            None => self.children.iter().for_each(|c| c.collect_leaves(out)),
        }
    }

    /// Penn-style rendering, the inverse of [`parse_bracketed_tree`].
    pub fn to_bracketed(&self) -> String {
        let mut out = String::new();
        self.write_bracketed(&mut out);
        out
    }

    fn write_bracketed(&self, out: &mut String) {
        if let Some(form) = &self.leaf_form {
            let form = tree::escape_terminal(form);
            if self.label.is_empty() {
                out.push_str(&form);
            } else {
                out.push('(');
                out.push_str(&self.label);
                out.push(' ');
                out.push_str(&form);
                out.push(')');
            }
            return;
        }
        out.push('(');
        out.push_str(&self.label);
        for child in &self.children {
            out.push(' ');
            child.write_bracketed(out);
        }
        out.push(')');
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sentence {
    pub sent_id: Option<String>,
    pub tokens: Vec<Token>,
    pub const_tree: Option<ConstituencyNode>,
    pub paragraph_id: usize,
}

impl Sentence {
    pub fn new(tokens: Vec<Token>, paragraph_id: usize) -> Self {
        Sentence {
            sent_id: None,
            tokens,
            const_tree: None,
            paragraph_id,
        }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// True when every token has a head (the sentence carries a dependency tree).
    pub fn has_heads(&self) -> bool {
        !self.tokens.is_empty() && self.tokens.iter().all(|t| t.head != Head::Missing)
    }

    pub fn root(&self) -> Option<usize> {
        self.tokens.iter().position(|t| t.head == Head::Root)
    }

    /// Dependents of every token, in linear order.
    pub fn dependents(&self) -> Vec<Vec<usize>> {
        let mut deps = vec![Vec::new(); self.tokens.len()];
        for (i, tok) in self.tokens.iter().enumerate() {
            if let Head::Index(h) = tok.head {
                if h < deps.len() {
                    deps[h].push(i);
                }
            }
        }
        deps
    }

    /// Depth of every token below the root (root = 0). `None` unless the
    /// sentence holds a well-formed tree.
    pub fn depths(&self) -> Option<Vec<usize>> {
        if !self.has_heads() || self.check_tree().is_err() {
            return None;
        }
        let root = self.root()?;
        let deps = self.dependents();
        let mut depth = vec![0usize; self.tokens.len()];
        let mut stack = vec![root];
        while let Some(node) = stack.pop() {
            for &child in &deps[node] {
                depth[child] = depth[node] + 1;
                stack.push(child);
            }
        }
        Some(depth)
    }

    /// Checks that heads, when present, form a single-rooted tree.
    pub fn check_tree(&self) -> Result<(), String> {
        let n = self.tokens.len();
        if n == 0 {
            return Err("sentence has no tokens".into());
        }
        let missing = self.tokens.iter().filter(|t| t.head == Head::Missing).count();
        if missing == n {
            return Ok(());
        }
        if missing > 0 {
            return Err("some tokens have a head and others do not".into());
        }
        let roots = self.tokens.iter().filter(|t| t.head == Head::Root).count();
        if roots != 1 {
            return Err(format!("expected exactly one root, found {roots}"));
        }
        for (i, tok) in self.tokens.iter().enumerate() {
            if let Head::Index(h) = tok.head {
                if h >= n {
                    return Err(format!("token {} points to nonexistent head {}", i + 1, h + 1));
                }
                if h == i {
                    return Err(format!("token {} is its own head", i + 1));
                }
            }
        }
        // Every token must reach the root within n steps.
        for start in 0..n {
            let mut cur = start;
            let mut steps = 0;
            while let Head::Index(h) = self.tokens[cur].head {
                cur = h;
                steps += 1;
                if steps > n {
                    return Err(format!("cycle through token {}", start + 1));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Document {
    pub id: String,
    pub sentences: Vec<Sentence>,
    pub source_label: Option<Label>,
}

impl Document {
    /// Builds a document, enforcing that it has sentences and that
    /// paragraph ids never decrease.
    pub fn new(id: impl Into<String>, sentences: Vec<Sentence>) -> Result<Self, IngestError> {
        if sentences.is_empty() || sentences.iter().all(Sentence::is_empty) {
            return Err(IngestError::EmptyDocument);
        }
        if sentences.windows(2).any(|w| w[1].paragraph_id < w[0].paragraph_id) {
            return Err(IngestError::Structure {
                line: 0,
                message: "paragraph ids must be non-decreasing".into(),
            });
        }
        Ok(Document {
            id: id.into(),
            sentences,
            source_label: None,
        })
    }

    pub fn tokens(&self) -> impl Iterator<Item = &Token> {
        self.sentences.iter().flat_map(|s| s.tokens.iter())
    }

    pub fn token_count(&self) -> usize {
        self.sentences.iter().map(Sentence::len).sum()
    }

    /// Tokens that are not punctuation.
    pub fn word_count(&self) -> usize {
        self.tokens().filter(|t| !t.is_punct()).count()
    }

    /// The document repeated `times` times, with paragraph ids of each copy
    /// shifted past the previous one.
    pub fn repeated(&self, times: usize) -> Document {
        let span = self.sentences.last().map_or(0, |s| s.paragraph_id) + 1;
        let sentences = (0..times)
            .flat_map(|copy| {
                self.sentences.iter().map(move |s| {
                    let mut s = s.clone();
                    s.paragraph_id += copy * span;
                    if let Some(id) = &s.sent_id {
                        s.sent_id = Some(format!("{id}#{copy}"));
                    }
                    s
                })
            })
            .collect();
        Document {
            id: self.id.clone(),
            sentences,
            source_label: self.source_label,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tok(form: &str, head: Head) -> Token {
        Token {
            head,
            deprel: "dep".into(),
            ..Token::bare(form)
        }
    }

    #[test]
    fn upos_parsing() {
        assert_eq!("PROPN".parse::<Upos>(), Ok(Upos::Propn));
        assert_eq!("_".parse::<Upos>(), Ok(Upos::X));
        assert!("NC".parse::<Upos>().is_err());
        for u in Upos::ALL {
            assert_eq!(u.as_str().parse::<Upos>(), Ok(u));
        }
    }

    #[test]
    fn chain_depths() {
        let s = Sentence::new(
            vec![
                tok("root", Head::Root),
                tok("a", Head::Index(0)),
                tok("b", Head::Index(1)),
                tok("c", Head::Index(2)),
            ],
            0,
        );
        assert_eq!(s.depths(), Some(vec![0, 1, 2, 3]));
    }

    #[test]
    fn cycle_detected() {
        let s = Sentence::new(
            vec![
                tok("a", Head::Root),
                tok("b", Head::Index(2)),
                tok("c", Head::Index(1)),
            ],
            0,
        );
        assert!(s.check_tree().unwrap_err().contains("cycle"));
        assert_eq!(s.depths(), None);
    }

    #[test]
    fn two_roots_rejected() {
        let s = Sentence::new(vec![tok("a", Head::Root), tok("b", Head::Root)], 0);
        assert!(s.check_tree().is_err());
    }

    #[test]
    fn document_rejects_decreasing_paragraphs() {
        let a = Sentence::new(vec![Token::bare("a")], 1);
        let b = Sentence::new(vec![Token::bare("b")], 0);
        assert!(Document::new("d", vec![a, b]).is_err());
        assert_eq!(Document::new("d", vec![]), Err(IngestError::EmptyDocument));
    }

    #[test]
    fn brackets_and_punct() {
        assert!(Token::bare("(").is_bracket_open());
        assert!(Token::bare("]").is_bracket_close());
        assert!(Token::bare("…").is_punct());
        assert!(!Token::bare("l'").is_punct());
    }
}
