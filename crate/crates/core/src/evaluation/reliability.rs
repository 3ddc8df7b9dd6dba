use std::collections::{BTreeMap, BTreeSet, HashMap};

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::bws::bws_scores_of;
use super::correlation::spearman;
use super::{BwsDesign, BwsResponse, EvaluationError};
use crate::rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatingResponse {
    pub text_id: String,
    pub rater_id: String,
    pub rating: f64,
    /// Milliseconds since the Unix epoch.
    pub timestamp: u64,
}

impl RatingResponse {
    pub fn validate(&self) -> Result<(), EvaluationError> {
        if !(0.0..=100.0).contains(&self.rating) {
            return Err(EvaluationError::RatingOutOfRange {
                text_id: self.text_id.clone(),
                rater_id: self.rater_id.clone(),
                rating: self.rating,
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShrOutcome {
    /// Mean split-half Spearman over the iterations used, ×100.
    pub shr: f64,
    pub iterations: usize,
    pub used: usize,
    pub warnings: Vec<String>,
}

/// Random halves of `n` responses: `true` marks the first half. With an odd
/// count the extra response goes to a random half.
pub fn random_halves(n: usize, rng: &mut ChaCha8Rng) -> Vec<bool> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let first = n / 2 + usize::from(n % 2 == 1 && rng.random_bool(0.5));
    let mut mask = vec![false; n];
    for &i in &order[..first] {
        mask[i] = true;
    }
    mask
}

/// Split-half reliability with random response-level halves.
pub fn split_half_reliability(
    design: &BwsDesign,
    responses: &[BwsResponse],
    iterations: usize,
    seed: u64,
) -> Result<ShrOutcome, EvaluationError> {
    split_half_reliability_with(design, responses, iterations, seed, random_halves)
}

/// Split-half reliability with an injected partitioner. Iteration `i` draws
/// from its own derived stream, so the result is the same whether the
/// iterations run in parallel or not.
pub fn split_half_reliability_with<P>(
    design: &BwsDesign,
    responses: &[BwsResponse],
    iterations: usize,
    seed: u64,
    partition: P,
) -> Result<ShrOutcome, EvaluationError>
where
    P: Fn(usize, &mut ChaCha8Rng) -> Vec<bool> + Sync,
{
    if iterations == 0 {
        return Err(EvaluationError::Parameter("iterations must be at least 1".into()));
    }
    let all = bws_scores_of(design, responses)?;
    let mut warnings = Vec::new();
    let judged = responses.len() * design.parameters.k;
    if !all.is_empty() && (judged as f64) < 2.0 * all.len() as f64 {
        warnings.push(format!(
            "fewer than 2 judgments per text on average ({judged} judgments, {} texts)",
            all.len()
        ));
    }

    let results: Vec<Result<f64, String>> = (0..iterations)
        .into_par_iter()
        .map(|i| {
            let mut rng = rng::derived(seed, i as u64);
            let mask = partition(responses.len(), &mut rng);
            let a = responses.iter().zip(&mask).filter(|(_, m)| **m).map(|(r, _)| r);
            let b = responses.iter().zip(&mask).filter(|(_, m)| !**m).map(|(r, _)| r);
            let sa = bws_scores_of(design, a).map_err(|e| e.to_string())?;
            let sb = bws_scores_of(design, b).map_err(|e| e.to_string())?;
            let (x, y): (Vec<f64>, Vec<f64>) = sa
                .iter()
                .filter_map(|(id, v)| sb.get(id).map(|w| (*v, *w)))
                .unzip();
            if x.len() < 3 {
                return Err(format!("iteration {i}: only {} shared texts", x.len()));
            }
            spearman(&x, &y).map_err(|e| format!("iteration {i}: {e}"))
        })
        .collect();

    let mut sum = 0.0;
    let mut used = 0;
    for r in results {
        match r {
            Ok(rho) => {
                sum += rho;
                used += 1;
            }
            Err(w) => warnings.push(format!("{w}; skipped")),
        }
    }
    if used == 0 {
        return Err(EvaluationError::AllIterationsSkipped(iterations));
    }
    Ok(ShrOutcome {
        shr: 100.0 * sum / used as f64,
        iterations,
        used,
        warnings,
    })
}

/// Two-way random-effects, absolute-agreement, single-rater ICC(2,1) of a
/// complete `n targets × k raters` matrix. Missing cells are NaN or short
/// rows; both are errors.
pub fn icc2(ratings: &[Vec<f64>]) -> Result<f64, EvaluationError> {
    let n = ratings.len();
    if n < 2 {
        return Err(EvaluationError::TooFew { what: "targets", needed: 2, got: n });
    }
    let k = ratings.iter().map(Vec::len).max().unwrap_or(0);
    if k < 2 {
        return Err(EvaluationError::TooFew { what: "raters", needed: 2, got: k });
    }
    for (i, row) in ratings.iter().enumerate() {
        for j in 0..k {
            if row.get(j).is_none_or(|v| !v.is_finite()) {
                return Err(EvaluationError::MissingCell {
                    target: i.to_string(),
                    rater: j.to_string(),
                });
            }
        }
    }
    let (nf, kf) = (n as f64, k as f64);
    let grand = ratings.iter().flatten().sum::<f64>() / (nf * kf);
    let row_means: Vec<f64> = ratings.iter().map(|r| r.iter().sum::<f64>() / kf).collect();
    let col_means: Vec<f64> = (0..k)
        .map(|j| ratings.iter().map(|r| r[j]).sum::<f64>() / nf)
        .collect();
    let sst: f64 = ratings.iter().flatten().map(|v| (v - grand).powi(2)).sum();
    if sst == 0.0 {
        return Err(EvaluationError::DegenerateRatings);
    }
    let ssr = kf * row_means.iter().map(|m| (m - grand).powi(2)).sum::<f64>();
    let ssc = nf * col_means.iter().map(|m| (m - grand).powi(2)).sum::<f64>();
    let sse: f64 = ratings
        .iter()
        .enumerate()
        .flat_map(|(i, row)| {
            let (row_means, col_means) = (&row_means, &col_means);
            row.iter()
                .enumerate()
                .map(move |(j, v)| (v - row_means[i] - col_means[j] + grand).powi(2))
        })
        .sum();
    let msr = ssr / (nf - 1.0);
    let msc = ssc / (kf - 1.0);
    let mse = sse / ((nf - 1.0) * (kf - 1.0));
    Ok((msr - mse) / (msr + (kf - 1.0) * mse + kf * (msc - mse) / nf))
}

/// Ratings arranged as a complete target × rater matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct RatingMatrix {
    pub targets: Vec<String>,
    pub raters: Vec<String>,
    pub values: Vec<Vec<f64>>,
}

/// Builds the matrix for [`icc2`]. Every rater must rate every text once.
pub fn rating_matrix(responses: &[RatingResponse]) -> Result<RatingMatrix, EvaluationError> {
    let mut cells: HashMap<(&str, &str), f64> = HashMap::new();
    let mut targets = BTreeSet::new();
    let mut raters = BTreeSet::new();
    for r in responses {
        r.validate()?;
        if cells.insert((&r.text_id, &r.rater_id), r.rating).is_some() {
            return Err(EvaluationError::Parameter(format!(
                "rater {:?} rated text {:?} twice",
                r.rater_id, r.text_id
            )));
        }
        targets.insert(r.text_id.as_str());
        raters.insert(r.rater_id.as_str());
    }
    let mut values = Vec::with_capacity(targets.len());
    for t in &targets {
        let mut row = Vec::with_capacity(raters.len());
        for r in &raters {
            let v = cells.get(&(*t, *r)).ok_or_else(|| EvaluationError::MissingCell {
                target: t.to_string(),
                rater: r.to_string(),
            })?;
            row.push(*v);
        }
        values.push(row);
    }
    Ok(RatingMatrix {
        targets: targets.into_iter().map(String::from).collect(),
        raters: raters.into_iter().map(String::from).collect(),
        values,
    })
}

/// Mean rating per text.
pub fn mean_ratings(responses: &[RatingResponse]) -> BTreeMap<String, f64> {
    let mut acc: BTreeMap<String, (f64, usize)> = BTreeMap::new();
    for r in responses {
        let e = acc.entry(r.text_id.clone()).or_default();
        e.0 += r.rating;
        e.1 += 1;
    }
    acc.into_iter().map(|(k, (s, n))| (k, s / n as f64)).collect()
}
