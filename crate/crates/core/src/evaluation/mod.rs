//! Human-annotation statistics: best-worst scaling designs and scores,
//! split-half reliability, ICC(2,1), Spearman correlations and the
//! model-vs-human correlation report.

use std::io::{self, BufRead, BufReader, Read, Write};

use serde::de::DeserializeOwned;
use serde::Serialize;
use thiserror::Error;

mod bws;
mod correlation;
mod reliability;

pub use bws::{
    annotator_agreement, bws_scores, generate_bws_design, AnnotatorAgreement, BwsDesign,
    BwsParameters, BwsResponse, BwsTuple, DESIGN_SCHEMA,
};
pub use correlation::{
    average_ranks, correlation_report, pearson, scorer_row, spearman, CorrelationReport, ReportRow,
};
pub use reliability::{
    icc2, mean_ratings, random_halves, rating_matrix, split_half_reliability, split_half_reliability_with,
    RatingMatrix, RatingResponse, ShrOutcome,
};

#[derive(Debug, Error)]
pub enum EvaluationError {
    #[error("T·e = {t}·{e} = {product} is not divisible by k = {k}")]
    Divisibility { t: usize, e: usize, k: usize, product: usize },
    #[error("infeasible design: tuple size k = {k} exceeds the number of texts T = {t}")]
    Infeasible { t: usize, k: usize },
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("invalid design: {0}")]
    InvalidDesign(String),
    #[error("response references unknown tuple {0:?}")]
    UnknownTuple(String),
    #[error("invalid response to tuple {tuple_id:?}: {reason}")]
    InvalidResponse { tuple_id: String, reason: String },
    #[error("rating {rating} of text {text_id:?} by {rater_id:?} is outside [0, 100]")]
    RatingOutOfRange { text_id: String, rater_id: String, rating: f64 },
    #[error("missing rating for target {target:?}, rater {rater:?}")]
    MissingCell { target: String, rater: String },
    #[error("degenerate ratings: zero total variance")]
    DegenerateRatings,
    #[error("undefined correlation: {0} is constant")]
    UndefinedCorrelation(&'static str),
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("need at least {needed} {what}, got {got}")]
    TooFew { what: &'static str, needed: usize, got: usize },
    #[error("all {0} split-half iterations were skipped")]
    AllIterationsSkipped(usize),
    #[error("scorer {scorer}: {message}")]
    Scorer { scorer: String, message: String },
    #[error("line {line}: {message}")]
    Format { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Reads one JSON record per line; blank lines are skipped.
pub fn read_jsonl<T: DeserializeOwned, R: Read>(input: R) -> Result<Vec<T>, EvaluationError> {
    let mut out = Vec::new();
    for (i, line) in BufReader::new(input).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record = serde_json::from_str(&line).map_err(|e| EvaluationError::Format {
            line: i + 1,
            message: e.to_string(),
        })?;
        out.push(record);
    }
    Ok(out)
}

pub fn write_jsonl<T: Serialize, W: Write>(items: &[T], mut out: W) -> io::Result<()> {
    for item in items {
        serde_json::to_writer(&mut out, item)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}
