use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::EvaluationError;
use crate::baselines::{compute_counts, Baseline};
use crate::ingest::Document;
use crate::lexicons::Lexicons;
use crate::models::{comprehension_score, ScoringModel};

/// Ranks starting at 1; tied values share the mean of their positions.
pub fn average_ranks(v: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..v.len()).collect();
    order.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut ranks = vec![0.0; v.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && v[order[j + 1]] == v[order[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &o in &order[i..=j] {
            ranks[o] = rank;
        }
        i = j + 1;
    }
    ranks
}

fn check_pair(x: &[f64], y: &[f64]) -> Result<(), EvaluationError> {
    if x.len() != y.len() {
        return Err(EvaluationError::LengthMismatch(x.len(), y.len()));
    }
    if x.len() < 3 {
        return Err(EvaluationError::TooFew { what: "observations", needed: 3, got: x.len() });
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(EvaluationError::Parameter("non-finite value in correlation input".into()));
    }
    Ok(())
}

pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64, EvaluationError> {
    check_pair(x, y)?;
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let syy: f64 = y.iter().map(|v| (v - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(EvaluationError::UndefinedCorrelation("x"));
    }
    if syy == 0.0 {
        return Err(EvaluationError::UndefinedCorrelation("y"));
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Pearson correlation of average ranks.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<f64, EvaluationError> {
    check_pair(x, y)?;
    pearson(&average_ranks(x), &average_ranks(y))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub scorer: String,
    /// Spearman ρ against human scores, ×100.
    pub rho: f64,
    pub n: usize,
    /// Validation accuracy in percent, for trained models.
    pub valid_accuracy: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct CorrelationReport {
    pub rows: Vec<ReportRow>,
}

/// Spearman row for precomputed scores; only ids present in both maps count.
pub fn scorer_row(
    name: &str,
    scores: &BTreeMap<String, f64>,
    human: &BTreeMap<String, f64>,
) -> Result<ReportRow, EvaluationError> {
    let (x, y): (Vec<f64>, Vec<f64>) = scores
        .iter()
        .filter_map(|(id, s)| human.get(id).map(|h| (*s, *h)))
        .unzip();
    let rho = spearman(&x, &y).map_err(|e| EvaluationError::Scorer {
        scorer: name.to_string(),
        message: e.to_string(),
    })?;
    Ok(ReportRow {
        scorer: name.to_string(),
        rho: 100.0 * rho,
        n: x.len(),
        valid_accuracy: None,
    })
}

/// Correlates every baseline and model with the human scores over the
/// documents that have one. Baselines come first, in the order given.
pub fn correlation_report(
    models: &[(String, &ScoringModel)],
    baselines: &[Baseline],
    docs: &[Document],
    human: &BTreeMap<String, f64>,
    lexicons: &Lexicons,
) -> Result<CorrelationReport, EvaluationError> {
    let judged: Vec<&Document> = docs.iter().filter(|d| human.contains_key(&d.id)).collect();
    let mut rows = Vec::new();
    for &b in baselines {
        let scores = judged
            .iter()
            .map(|d| {
                let counts = compute_counts(d).map_err(|e| EvaluationError::Scorer {
                    scorer: b.name().to_string(),
                    message: format!("{}: {e}", d.id),
                })?;
                Ok((d.id.clone(), b.apply(&counts)))
            })
            .collect::<Result<BTreeMap<_, _>, EvaluationError>>()?;
        rows.push(scorer_row(b.name(), &scores, human)?);
    }
    for (name, model) in models {
        let scores = judged
            .iter()
            .map(|d| {
                let s = comprehension_score(model, d, lexicons).map_err(|e| EvaluationError::Scorer {
                    scorer: name.clone(),
                    message: format!("{}: {e}", d.id),
                })?;
                Ok((d.id.clone(), s.score))
            })
            .collect::<Result<BTreeMap<_, _>, EvaluationError>>()?;
        rows.push(scorer_row(name, &scores, human)?);
    }
    Ok(CorrelationReport { rows })
}

fn fmt_acc(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_string(), |a| format!("{a:.2}"))
}

impl CorrelationReport {
    pub fn row(&self, scorer: &str) -> Option<&ReportRow> {
        self.rows.iter().find(|r| r.scorer == scorer)
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::from("scorer\trho\tn\tvalid_acc\n");
        for r in &self.rows {
            let _ = writeln!(out, "{}\t{:.2}\t{}\t{}", r.scorer, r.rho, r.n, fmt_acc(r.valid_accuracy));
        }
        out
    }

    /// Plain-text table with right-aligned numeric columns.
    pub fn to_table(&self) -> String {
        let header = ["Scorer", "ρ", "n", "Valid acc%"];
        let cells: Vec<[String; 4]> = self
            .rows
            .iter()
            .map(|r| [r.scorer.clone(), format!("{:.2}", r.rho), r.n.to_string(), fmt_acc(r.valid_accuracy)])
            .collect();
        let mut widths = header.map(|h| h.chars().count());
        for row in &cells {
            for (w, c) in widths.iter_mut().zip(row) {
                *w = (*w).max(c.chars().count());
            }
        }
        let line = |row: [&str; 4]| {
            let mut s = format!("{:<w$}", row[0], w = widths[0]);
            for (c, w) in row[1..].iter().zip(&widths[1..]) {
                let pad = w - c.chars().count();
                let _ = write!(s, "  {}{c}", " ".repeat(pad));
            }
            s.push('\n');
            s
        };
        let mut out = line(header);
        for row in &cells {
            out.push_str(&line([&row[0], &row[1], &row[2], &row[3]]));
        }
        out
    }
}
