//! Graded word-difficulty and connectives lexicons.
//!
//! Both are TSV files with a mandatory header row. The crate embeds small
//! fixture lexicons ([`GradedLexicon::builtin`], [`ConnectivesLexicon::builtin`])
//! covering the vocabulary of the synthetic corpus generator.

use std::collections::HashMap;
use std::fs;
use std::io::{BufRead, BufReader, Read};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const DEFAULT_LEVELS: u8 = 6;

const BUILTIN_GRADED: &str = include_str!("../data/graded_lexicon.tsv");
const BUILTIN_CONNECTIVES: &str = include_str!("../data/connectives.tsv");

#[derive(Debug, Error, PartialEq)]
pub enum LexiconError {
    #[error("{source_name}: missing or wrong header, expected {expected:?}")]
    Header {
        source_name: String,
        expected: &'static str,
    },
    #[error("{source_name}, line {line}: {message}")]
    Row {
        source_name: String,
        line: usize,
        message: String,
    },
    #[error("at least one graded lexicon is required")]
    NoGradedLexicon,
    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for LexiconError {
    fn from(e: std::io::Error) -> Self {
        LexiconError::Io(e.to_string())
    }
}

/// Lemma -> lowest level at which the word is attested.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradedLexicon {
    entries: HashMap<String, u8>,
    n_levels: u8,
    source_name: String,
}

impl GradedLexicon {
    pub fn from_reader<R: Read>(
        input: R,
        n_levels: u8,
        source_name: &str,
    ) -> Result<Self, LexiconError> {
        const HEADER: &str = "lemma\tlevel";
        let mut lines = BufReader::new(input).lines();
        let header = lines.next().transpose()?;
        if header.as_deref().map(str::trim_end) != Some(HEADER) {
            return Err(LexiconError::Header {
                source_name: source_name.to_string(),
                expected: HEADER,
            });
        }
        let row_err = |line: usize, message: String| LexiconError::Row {
            source_name: source_name.to_string(),
            line,
            message,
        };
        let mut entries: HashMap<String, u8> = HashMap::new();
        for (idx, line) in lines.enumerate() {
            let line_no = idx + 2;
            let line = line?;
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() {
                continue;
            }
            let (lemma, level) = line
                .split_once('\t')
                .ok_or_else(|| row_err(line_no, "expected lemma<TAB>level".into()))?;
            let lemma = lemma.trim().to_lowercase();
            if lemma.is_empty() {
                return Err(row_err(line_no, "empty lemma".into()));
            }
            let level: u8 = level
                .trim()
                .parse()
                .map_err(|_| row_err(line_no, format!("level {level:?} is not an integer")))?;
            if level < 1 || level > n_levels {
                return Err(row_err(
                    line_no,
                    format!("level {level} outside [1, {n_levels}]"),
                ));
            }
            entries
                .entry(lemma)
                .and_modify(|l| *l = (*l).min(level))
                .or_insert(level);
        }
        Ok(GradedLexicon {
            entries,
            n_levels,
            source_name: source_name.to_string(),
        })
    }

    /// Loads a `lemma<TAB>level` file with the default number of levels.
    pub fn load(path: &Path) -> Result<Self, LexiconError> {
        Self::load_with_levels(path, DEFAULT_LEVELS)
    }

    pub fn load_with_levels(path: &Path, n_levels: u8) -> Result<Self, LexiconError> {
        let name = path.display().to_string();
        Self::from_reader(fs::File::open(path)?, n_levels, &name)
    }

    pub fn builtin() -> Self {
        Self::from_reader(BUILTIN_GRADED.as_bytes(), DEFAULT_LEVELS, "builtin")
            .expect("embedded graded lexicon is valid")
    }

    /// Attested level of `lemma`, or `n_levels + 1` when it is unknown.
    pub fn word_level(&self, lemma: &str) -> u8 {
        self.entries
            .get(&lemma.to_lowercase())
            .copied()
            .unwrap_or(self.n_levels + 1)
    }

    pub fn n_levels(&self) -> u8 {
        self.n_levels
    }

    pub fn source_name(&self) -> &str {
        &self.source_name
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, u8)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), *v))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConnectiveCategory {
    Conjunction,
    Adverbial,
    Other,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Complexity {
    Simple,
    Complex,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConnectiveInfo {
    pub category: ConnectiveCategory,
    pub complexity: Complexity,
}

/// A connective found in a token sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConnectiveMatch {
    pub start: usize,
    pub len: usize,
    pub info: ConnectiveInfo,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConnectivesLexicon {
    entries: HashMap<String, ConnectiveInfo>,
    max_words: usize,
}

impl ConnectivesLexicon {
    pub fn from_reader<R: Read>(input: R, source_name: &str) -> Result<Self, LexiconError> {
        const HEADER: &str = "connective\tcategory\tcomplexity";
        let mut lines = BufReader::new(input).lines();
        let header = lines.next().transpose()?;
        if header.as_deref().map(str::trim_end) != Some(HEADER) {
            return Err(LexiconError::Header {
                source_name: source_name.to_string(),
                expected: HEADER,
            });
        }
        let row_err = |line: usize, message: String| LexiconError::Row {
            source_name: source_name.to_string(),
            line,
            message,
        };
        let mut entries = HashMap::new();
        let mut max_words = 0;
        for (idx, line) in lines.enumerate() {
            let line_no = idx + 2;
            let line = line?;
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() {
                continue;
            }
            let cols: Vec<&str> = line.split('\t').collect();
            let [connective, category, complexity] = cols[..] else {
                return Err(row_err(line_no, "expected 3 tab-separated columns".into()));
            };
            let key = normalize(connective);
            if key.is_empty() {
                return Err(row_err(line_no, "empty connective".into()));
            }
            let category = match category.trim() {
                "conjunction" => ConnectiveCategory::Conjunction,
                "adverbial" => ConnectiveCategory::Adverbial,
                "other" => ConnectiveCategory::Other,
                other => return Err(row_err(line_no, format!("unknown category {other:?}"))),
            };
            let complexity = match complexity.trim() {
                "simple" => Complexity::Simple,
                "complex" => Complexity::Complex,
                other => return Err(row_err(line_no, format!("unknown complexity {other:?}"))),
            };
            max_words = max_words.max(key.split(' ').count());
            entries.insert(
                key,
                ConnectiveInfo {
                    category,
                    complexity,
                },
            );
        }
        Ok(ConnectivesLexicon { entries, max_words })
    }

    pub fn load(path: &Path) -> Result<Self, LexiconError> {
        let name = path.display().to_string();
        Self::from_reader(fs::File::open(path)?, &name)
    }

    pub fn builtin() -> Self {
        Self::from_reader(BUILTIN_CONNECTIVES.as_bytes(), "builtin")
            .expect("embedded connectives lexicon is valid")
    }

    pub fn get(&self, connective: &str) -> Option<ConnectiveInfo> {
        self.entries.get(&normalize(connective)).copied()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, ConnectiveInfo)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), *v))
    }

    /// Longest connective starting at `start` in `forms`.
    pub fn match_at<S: AsRef<str>>(&self, forms: &[S], start: usize) -> Option<ConnectiveMatch> {
        let max = self.max_words.min(forms.len().saturating_sub(start));
        (1..=max).rev().find_map(|len| {
            let key = forms[start..start + len]
                .iter()
                .map(|f| f.as_ref())
                .collect::<Vec<_>>()
                .join(" ");
            let key = normalize(&key);
            self.entries
                .get(&key)
                .map(|&info| ConnectiveMatch { start, len, info })
        })
    }

    /// Non-overlapping longest matches, scanning left to right.
    pub fn find_all<S: AsRef<str>>(&self, forms: &[S]) -> Vec<ConnectiveMatch> {
        let mut out = Vec::new();
        let mut i = 0;
        while i < forms.len() {
            match self.match_at(forms, i) {
                Some(m) => {
                    i += m.len;
                    out.push(m);
                }
                None => i += 1,
            }
        }
        out
    }
}

/// Lowercases, splits clitics the way the tokenizer does and restores the
/// elided vowel (`d'ailleurs` -> `de ailleurs`, `qu'` -> `que`), then joins
/// words with single spaces.
fn normalize(s: &str) -> String {
    s.replace(['’', '\''], "' ")
        .split_whitespace()
        .map(|w| {
            let w = w.to_lowercase();
            match w.strip_suffix('\'') {
                Some(stem) => format!("{stem}e"),
                None => w,
            }
        })
        .collect::<Vec<_>>()
        .join(" ")
}

/// The lexicon resources indicator extraction needs. Lexical difficulty is
/// averaged over every configured graded lexicon.
#[derive(Debug, Clone, PartialEq)]
pub struct Lexicons {
    graded: Vec<GradedLexicon>,
    connectives: ConnectivesLexicon,
}

impl Lexicons {
    pub fn new(
        graded: Vec<GradedLexicon>,
        connectives: ConnectivesLexicon,
    ) -> Result<Self, LexiconError> {
        if graded.is_empty() {
            return Err(LexiconError::NoGradedLexicon);
        }
        Ok(Lexicons {
            graded,
            connectives,
        })
    }

    pub fn builtin() -> Self {
        Lexicons {
            graded: vec![GradedLexicon::builtin()],
            connectives: ConnectivesLexicon::builtin(),
        }
    }

    pub fn graded(&self) -> &[GradedLexicon] {
        &self.graded
    }

    pub fn connectives(&self) -> &ConnectivesLexicon {
        &self.connectives
    }

    /// Mean level of `lemma` across the graded lexicons.
    pub fn word_level(&self, lemma: &str) -> f64 {
        let sum: f64 = self.graded.iter().map(|g| f64::from(g.word_level(lemma))).sum();
        sum / self.graded.len() as f64
    }

    /// Largest out-of-vocabulary level among the graded lexicons.
    pub fn oov_level(&self) -> f64 {
        self.graded
            .iter()
            .map(|g| f64::from(g.n_levels) + 1.0)
            .fold(1.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn graded(body: &str) -> Result<GradedLexicon, LexiconError> {
        GradedLexicon::from_reader(format!("lemma\tlevel\n{body}").as_bytes(), 6, "test")
    }

    #[test]
    fn two_entries() {
        let lex = graded("chat\t1\nabroger\t6\n").unwrap();
        assert_eq!(lex.len(), 2);
        assert_eq!(lex.word_level("abroger"), 6);
    }

    #[test]
    fn duplicates_keep_minimum() {
        let lex = graded("chat\t3\nchat\t1\nchat\t2\n").unwrap();
        assert_eq!(lex.word_level("chat"), 1);
    }

    #[test]
    fn bad_level_reports_line() {
        match graded("chat\tx\n") {
            Err(LexiconError::Row { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(graded("chat\t7\n"), Err(LexiconError::Row { line: 2, .. })));
        assert!(matches!(graded("chat\t0\n"), Err(LexiconError::Row { .. })));
    }

    #[test]
    fn missing_header() {
        let err = GradedLexicon::from_reader("chat\t1\n".as_bytes(), 6, "t").unwrap_err();
        assert!(matches!(err, LexiconError::Header { .. }));
    }

    #[test]
    fn oov_and_case() {
        let lex = graded("chat\t1\n").unwrap();
        assert_eq!(lex.word_level("xyloglotte"), 7);
        assert_eq!(lex.word_level("Chat"), lex.word_level("chat"));
    }

    #[test]
    fn connectives_multiword() {
        let body = "connective\tcategory\tcomplexity\nmais\tconjunction\tsimple\nen revanche\tadverbial\tcomplex\nen\tother\tsimple\n";
        let lex = ConnectivesLexicon::from_reader(body.as_bytes(), "t").unwrap();
        assert_eq!(lex.len(), 3);
        let m = lex.match_at(&["En", "revanche", ",", "il"], 0).unwrap();
        assert_eq!(m.len, 2);
        assert_eq!(m.info.complexity, Complexity::Complex);
        let all = lex.find_all(&["il", "dort", "mais", "en", "revanche"]);
        assert_eq!(all.iter().map(|m| (m.start, m.len)).collect::<Vec<_>>(), [(2, 1), (3, 2)]);
    }

    #[test]
    fn connectives_reject_unknown_category() {
        let body = "connective\tcategory\tcomplexity\nmais\tverb\tsimple\n";
        assert!(matches!(
            ConnectivesLexicon::from_reader(body.as_bytes(), "t"),
            Err(LexiconError::Row { line: 2, .. })
        ));
        let body = "connective\tcategory\tcomplexity\nmais\tconjunction\teasy\n";
        assert!(ConnectivesLexicon::from_reader(body.as_bytes(), "t").is_err());
    }

    #[test]
    fn every_loaded_row_looks_up_exactly() {
        let rows: Vec<(String, u8)> = (0..200)
            .map(|i| (format!("mot{i}"), (i % 6 + 1) as u8))
            .collect();
        let body: String = rows.iter().map(|(w, l)| format!("{w}\t{l}\n")).collect();
        let lex = graded(&body).unwrap();
        for (w, l) in &rows {
            assert_eq!(lex.word_level(w), *l);
        }

        let builtin_text = BUILTIN_CONNECTIVES;
        let lex = ConnectivesLexicon::builtin();
        for line in builtin_text.lines().skip(1).filter(|l| !l.is_empty()) {
            let cols: Vec<&str> = line.split('\t').collect();
            let info = lex.get(cols[0]).unwrap();
            assert_eq!(serde_json::to_value(info.category).unwrap(), cols[1]);
            assert_eq!(serde_json::to_value(info.complexity).unwrap(), cols[2]);
        }
    }

    #[test]
    fn lexicon_set_averages() {
        let a = graded("chat\t1\nloi\t4\n").unwrap();
        let b = graded("chat\t3\n").unwrap();
        let set = Lexicons::new(vec![a, b], ConnectivesLexicon::builtin()).unwrap();
        assert_eq!(set.word_level("chat"), 2.0);
        assert_eq!(set.word_level("loi"), 5.5);
        assert!(Lexicons::new(vec![], ConnectivesLexicon::builtin()).is_err());
    }
}
