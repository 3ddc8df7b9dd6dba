//! Labeled simple/complex datasets for the classification proxy task.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::indicators::{extract_features, ExtractionWarning, FeatureVector, FEATURE_NAMES, N_FEATURES};
use crate::ingest::{read_conllu_file, Document, IngestError};
use crate::lexicons::Lexicons;
use crate::rng;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("directory {0} contains no .conllu files")]
    EmptyDirectory(PathBuf),
    #[error("unmatched files in aligned corpus: {}", .0.join(", "))]
    Orphans(Vec<String>),
    #[error("{path}: {source}")]
    Ingest { path: PathBuf, source: IngestError },
    #[error("{path}: expected exactly one document, found {found}")]
    MultipleDocuments { path: PathBuf, found: usize },
    #[error("dataset line {line}: {message}")]
    Format { line: usize, message: String },
    #[error("invalid dataset: {0}")]
    Invalid(String),
    #[error("invalid split: {0}")]
    Split(String),
    #[error("corpus has no documents")]
    NoDocuments,
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Complex,
    Simple,
}

impl Label {
    /// 1 for simple, 0 for complex.
    pub fn as_int(self) -> u8 {
        match self {
            Label::Simple => 1,
            Label::Complex => 0,
        }
    }

    pub fn as_f64(self) -> f64 {
        f64::from(self.as_int())
    }

    pub fn from_int(v: u8) -> Option<Label> {
        match v {
            1 => Some(Label::Simple),
            0 => Some(Label::Complex),
            _ => None,
        }
    }

    pub fn flipped(self) -> Label {
        match self {
            Label::Simple => Label::Complex,
            Label::Complex => Label::Simple,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Label::Simple => "simple",
            Label::Complex => "complex",
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledItem {
    pub doc_id: String,
    pub features: FeatureVector,
    pub label: Label,
    pub pair_id: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LabeledDataset {
    pub items: Vec<LabeledItem>,
    pub provenance: Vec<String>,
}

impl LabeledDataset {
    pub fn new(items: Vec<LabeledItem>) -> Self {
        LabeledDataset {
            items,
            provenance: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn count(&self, label: Label) -> usize {
        self.items.iter().filter(|i| i.label == label).count()
    }

    pub fn has_both_labels(&self) -> bool {
        self.count(Label::Simple) > 0 && self.count(Label::Complex) > 0
    }

    /// Checks that every pair id is carried by exactly one simple and one
    /// complex item, and that every feature is finite.
    pub fn validate(&self) -> Result<(), CorpusError> {
        let mut pairs: BTreeMap<&str, Vec<Label>> = BTreeMap::new();
        for item in &self.items {
            if let Some(f) = item.features.first_non_finite() {
                return Err(CorpusError::Invalid(format!(
                    "{}: feature {f} is not finite",
                    item.doc_id
                )));
            }
            if let Some(p) = &item.pair_id {
                pairs.entry(p).or_default().push(item.label);
            }
        }
        for (pair, mut labels) in pairs {
            labels.sort();
            if labels != [Label::Complex, Label::Simple] {
                return Err(CorpusError::Invalid(format!(
                    "pair {pair} must hold one simple and one complex item"
                )));
            }
        }
        Ok(())
    }

    /// The same dataset with every label flipped.
    pub fn with_swapped_labels(&self) -> LabeledDataset {
        let mut out = self.clone();
        for item in &mut out.items {
            item.label = item.label.flipped();
        }
        out
    }

    /// Writes the dataset as TSV: provenance comment lines, a header, then
    /// `doc_id, label, pair_id` and the 28 features. Absent pair ids are `_`.
    pub fn write_tsv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for source in &self.provenance {
            writeln!(out, "# source: {source}")?;
        }
        writeln!(out, "doc_id\tlabel\tpair_id\t{}", FEATURE_NAMES.join("\t"))?;
        for item in &self.items {
            writeln!(
                out,
                "{}\t{}\t{}\t{}",
                item.doc_id,
                item.label.as_int(),
                item.pair_id.as_deref().unwrap_or("_"),
                item.features.to_tsv_fields()
            )?;
        }
        Ok(())
    }

    pub fn read_tsv<R: Read>(input: R) -> Result<Self, CorpusError> {
        let mut ds = LabeledDataset::default();
        let mut header_seen = false;
        for (idx, line) in BufReader::new(input).lines().enumerate() {
            let line = line?;
            let lineno = idx + 1;
            if let Some(source) = line.strip_prefix("# source: ") {
                ds.provenance.push(source.to_string());
                continue;
            }
            if line.trim().is_empty() {
                continue;
            }
            let cols: Vec<&str> = line.split('\t').collect();
            if !header_seen {
                let expected: Vec<&str> = ["doc_id", "label", "pair_id"]
                    .into_iter()
                    .chain(FEATURE_NAMES)
                    .collect();
                if cols != expected {
                    return Err(CorpusError::Format {
                        line: lineno,
                        message: "header does not match the feature catalog".into(),
                    });
                }
                header_seen = true;
                continue;
            }
            if cols.len() != 3 + N_FEATURES {
                return Err(CorpusError::Format {
                    line: lineno,
                    message: format!("expected {} columns, found {}", 3 + N_FEATURES, cols.len()),
                });
            }
            let label = cols[1]
                .parse::<u8>()
                .ok()
                .and_then(Label::from_int)
                .ok_or_else(|| CorpusError::Format {
                    line: lineno,
                    message: format!("label must be 0 or 1, found {:?}", cols[1]),
                })?;
            let mut values = [0.0; N_FEATURES];
            for (k, (slot, raw)) in values.iter_mut().zip(&cols[3..]).enumerate() {
                *slot = raw.parse().map_err(|_| CorpusError::Format {
                    line: lineno,
                    message: format!("{}: not a number: {raw:?}", FEATURE_NAMES[k]),
                })?;
            }
            ds.items.push(LabeledItem {
                doc_id: cols[0].to_string(),
                features: FeatureVector(values),
                label,
                pair_id: (cols[2] != "_").then(|| cols[2].to_string()),
            });
        }
        if !header_seen {
            return Err(CorpusError::Format {
                line: 1,
                message: "missing header".into(),
            });
        }
        ds.validate()?;
        Ok(ds)
    }

    pub fn load(path: &Path) -> Result<Self, CorpusError> {
        Self::read_tsv(std::fs::File::open(path)?)
    }

    pub fn save(&self, path: &Path) -> Result<(), CorpusError> {
        let mut buf = Vec::new();
        self.write_tsv(&mut buf)?;
        std::fs::write(path, buf)?;
        Ok(())
    }
}

/// `.conllu` files of a directory, sorted by name.
pub fn conllu_files(dir: &Path) -> Result<Vec<PathBuf>, CorpusError> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "conllu"))
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(CorpusError::EmptyDirectory(dir.to_path_buf()));
    }
    Ok(files)
}

fn stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}

/// Reads every `.conllu` file of `dir`, one document per file. Document ids
/// become `<prefix>/<file stem>`.
pub fn load_documents(dir: &Path, prefix: &str) -> Result<Vec<Document>, CorpusError> {
    conllu_files(dir)?
        .par_iter()
        .map(|path| {
            let mut docs = read_conllu_file(path).map_err(|source| CorpusError::Ingest {
                path: path.clone(),
                source,
            })?;
            if docs.len() != 1 {
                return Err(CorpusError::MultipleDocuments {
                    path: path.clone(),
                    found: docs.len(),
                });
            }
            let mut doc = docs.remove(0);
            doc.id = format!("{prefix}/{}", stem(path));
            Ok(doc)
        })
        .collect()
}

/// Featurizes labeled documents in parallel; output order follows input order.
pub fn featurize(
    docs: &[(Document, Label, Option<String>)],
    lexicons: &Lexicons,
) -> (LabeledDataset, Vec<(String, ExtractionWarning)>) {
    let extracted: Vec<_> = docs
        .par_iter()
        .map(|(doc, label, pair)| {
            let out = extract_features(doc, lexicons);
            let item = LabeledItem {
                doc_id: doc.id.clone(),
                features: out.features,
                label: *label,
                pair_id: pair.clone(),
            };
            (item, doc.id.clone(), out.warnings)
        })
        .collect();
    let mut warnings = Vec::new();
    let mut items = Vec::with_capacity(extracted.len());
    for (item, id, ws) in extracted {
        items.push(item);
        warnings.extend(ws.into_iter().map(|w| (id.clone(), w)));
    }
    (LabeledDataset::new(items), warnings)
}

/// A featurized dataset together with the extraction warnings per document.
#[derive(Debug, Clone)]
pub struct BuiltDataset {
    pub dataset: LabeledDataset,
    pub warnings: Vec<(String, ExtractionWarning)>,
}

/// Builds a labeled dataset from a directory of simple and a directory of
/// complex CoNLL-U files. In aligned mode the file stems must match one to one
/// and become pair ids.
pub fn build_dataset(
    simple_dir: &Path,
    complex_dir: &Path,
    aligned: bool,
    lexicons: &Lexicons,
) -> Result<BuiltDataset, CorpusError> {
    let simple_files = conllu_files(simple_dir)?;
    let complex_files = conllu_files(complex_dir)?;
    if aligned {
        let s: BTreeSet<String> = simple_files.iter().map(|p| stem(p)).collect();
        let c: BTreeSet<String> = complex_files.iter().map(|p| stem(p)).collect();
        let mut orphans: Vec<String> = simple_files
            .iter()
            .filter(|p| !c.contains(&stem(p)))
            .chain(complex_files.iter().filter(|p| !s.contains(&stem(p))))
            .map(|p| p.display().to_string())
            .collect();
        if !orphans.is_empty() {
            orphans.sort();
            return Err(CorpusError::Orphans(orphans));
        }
    }
    let simple = load_documents(simple_dir, "simple")?;
    let complex = load_documents(complex_dir, "complex")?;
    let pair = |doc: &Document| {
        aligned.then(|| doc.id.split_once('/').map_or(doc.id.clone(), |(_, s)| s.to_string()))
    };
    let labeled: Vec<(Document, Label, Option<String>)> = simple
        .into_iter()
        .map(|d| {
            let p = pair(&d);
            (d, Label::Simple, p)
        })
        .chain(complex.into_iter().map(|d| {
            let p = pair(&d);
            (d, Label::Complex, p)
        }))
        .collect();
    let (mut dataset, warnings) = featurize(&labeled, lexicons);
    dataset.provenance = vec![
        simple_dir.display().to_string(),
        complex_dir.display().to_string(),
    ];
    Ok(BuiltDataset { dataset, warnings })
}

/// Table-style corpus statistics: number of texts, words per text and words
/// per sentence. Words exclude punctuation tokens.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub n_texts: usize,
    pub mean_words_per_text: f64,
    pub mean_words_per_sentence: f64,
}

pub fn corpus_stats(docs: &[Document]) -> Result<CorpusStats, CorpusError> {
    if docs.is_empty() {
        return Err(CorpusError::NoDocuments);
    }
    let words: usize = docs.iter().map(Document::word_count).sum();
    let sentences: usize = docs.iter().map(|d| d.sentences.len()).sum();
    if words == 0 {
        return Err(CorpusError::Invalid("corpus has no words".into()));
    }
    Ok(CorpusStats {
        n_texts: docs.len(),
        mean_words_per_text: words as f64 / docs.len() as f64,
        mean_words_per_sentence: words as f64 / sentences as f64,
    })
}

/// Splits a dataset into train and validation folds. Aligned pairs stay in
/// the same fold; within that constraint each label contributes
/// `round(valid_fraction * count)` items to validation. Both folds keep the
/// dataset's item order.
pub fn split_train_valid(
    ds: &LabeledDataset,
    valid_fraction: f64,
    seed: u64,
) -> Result<(LabeledDataset, LabeledDataset), CorpusError> {
    if !(valid_fraction > 0.0 && valid_fraction < 0.5) {
        return Err(CorpusError::Split(format!(
            "valid fraction must lie in (0, 0.5), got {valid_fraction}"
        )));
    }
    if ds.len() < 10 {
        return Err(CorpusError::Split(format!(
            "need at least 10 items, got {}",
            ds.len()
        )));
    }
    ds.validate()?;

    let mut pairs: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    let mut singles: [Vec<usize>; 2] = [Vec::new(), Vec::new()];
    for (i, item) in ds.items.iter().enumerate() {
        match &item.pair_id {
            Some(p) => pairs.entry(p).or_default().push(i),
            None => singles[usize::from(item.label.as_int())].push(i),
        }
    }
    let mut pair_units: Vec<Vec<usize>> = pairs.into_values().collect();

    let target = |label: Label| (valid_fraction * ds.count(label) as f64).round() as usize;
    let (t_simple, t_complex) = (target(Label::Simple), target(Label::Complex));
    if t_simple == 0 || t_complex == 0 {
        return Err(CorpusError::Split(
            "too few items to place both labels in the validation fold".into(),
        ));
    }
    let n_pairs = ((valid_fraction * pair_units.len() as f64).round() as usize)
        .min(t_simple)
        .min(t_complex);

    let mut rng = rng::seeded(seed);
    pair_units.shuffle(&mut rng);
    let mut valid: BTreeSet<usize> = pair_units[..n_pairs].iter().flatten().copied().collect();
    for (label, t) in [(Label::Complex, t_complex), (Label::Simple, t_simple)] {
        let pool = &mut singles[usize::from(label.as_int())];
        pool.shuffle(&mut rng);
        let need = t.saturating_sub(n_pairs).min(pool.len());
        valid.extend(pool[..need].iter().copied());
    }

    let fold = |in_valid: bool| LabeledDataset {
        items: ds
            .items
            .iter()
            .enumerate()
            .filter(|(i, _)| valid.contains(i) == in_valid)
            .map(|(_, item)| item.clone())
            .collect(),
        provenance: ds.provenance.clone(),
    };
    let (train, valid) = (fold(false), fold(true));
    if !train.has_both_labels() || !valid.has_both_labels() {
        return Err(CorpusError::Split(
            "stratification leaves a fold without one of the labels".into(),
        ));
    }
    Ok((train, valid))
}
