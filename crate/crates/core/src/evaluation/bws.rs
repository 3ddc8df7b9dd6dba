use std::collections::{BTreeMap, HashMap, HashSet};
use std::io::{Read, Write};

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{read_jsonl, write_jsonl, EvaluationError};
use crate::rng;

pub const DESIGN_SCHEMA: &str = "bws-design/1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BwsParameters {
    /// Number of texts.
    pub t: usize,
    /// Tuples each text appears in.
    pub e: usize,
    /// Texts per tuple.
    pub k: usize,
    /// Annotators per tuple.
    pub a: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BwsTuple {
    pub id: String,
    pub texts: Vec<String>,
}

/// A best-worst scaling experiment: `E = T·e/k` tuples of `k` distinct
/// texts, every text in exactly `e` tuples, each tuple judged by `a`
/// annotators.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BwsDesign {
    pub texts: Vec<String>,
    pub tuples: Vec<BwsTuple>,
    /// Annotator slots per tuple id, numbered `0..a`.
    pub assignments: BTreeMap<String, Vec<usize>>,
    pub parameters: BwsParameters,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BwsResponse {
    pub tuple_id: String,
    pub annotator_id: String,
    pub best: String,
    pub worst: String,
    /// Milliseconds since the Unix epoch.
    pub timestamp: u64,
    /// Text ids in the left-to-right order the annotator saw them.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub panel_order: Option<Vec<String>>,
}

impl BwsResponse {
    pub fn validate(&self, tuple: &BwsTuple) -> Result<(), EvaluationError> {
        let invalid = |reason: String| EvaluationError::InvalidResponse {
            tuple_id: self.tuple_id.clone(),
            reason,
        };
        if self.best == self.worst {
            return Err(invalid(format!("best and worst are both {:?}", self.best)));
        }
        for (role, id) in [("best", &self.best), ("worst", &self.worst)] {
            if !tuple.texts.contains(id) {
                return Err(invalid(format!("{role} {id:?} is not in the tuple")));
            }
        }
        if let Some(order) = &self.panel_order {
            let mut seen = order.clone();
            seen.sort();
            let mut texts = tuple.texts.clone();
            texts.sort();
            if seen != texts {
                return Err(invalid(format!("panel order {order:?} is not a permutation of the tuple")));
            }
        }
        Ok(())
    }
}

fn tuple_id(i: usize, total: usize) -> String {
    let width = total.to_string().len().max(3);
    format!("t{:0width$}", i + 1)
}

/// Builds a design by greedy sampling: each tuple takes the texts with the
/// most remaining appearances, breaking ties by fewest co-occurrences with
/// the texts already chosen and then at random. A swap repair pass removes
/// any within-tuple duplicate the greedy step was forced into.
pub fn generate_bws_design(
    text_ids: &[String],
    e: usize,
    k: usize,
    a: usize,
    seed: u64,
) -> Result<BwsDesign, EvaluationError> {
    let t = text_ids.len();
    if e < 1 {
        return Err(EvaluationError::Parameter("e must be at least 1".into()));
    }
    if k < 2 {
        return Err(EvaluationError::Parameter("k must be at least 2".into()));
    }
    if a < 1 {
        return Err(EvaluationError::Parameter("a must be at least 1".into()));
    }
    if k > t {
        return Err(EvaluationError::Infeasible { t, k });
    }
    if (t * e) % k != 0 {
        return Err(EvaluationError::Divisibility { t, e, k, product: t * e });
    }
    let mut seen = HashSet::new();
    if let Some(dup) = text_ids.iter().find(|id| !seen.insert(id.as_str())) {
        return Err(EvaluationError::Parameter(format!("duplicate text id {dup:?}")));
    }

    let n_tuples = t * e / k;
    let mut rng = rng::seeded(seed);
    let mut remaining = vec![e; t];
    let mut co: HashMap<(usize, usize), u32> = HashMap::new();
    let pair = |x: usize, y: usize| if x < y { (x, y) } else { (y, x) };
    let mut tuples: Vec<Vec<usize>> = Vec::with_capacity(n_tuples);
    for _ in 0..n_tuples {
        let mut chosen: Vec<usize> = Vec::with_capacity(k);
        for _ in 0..k {
            let mut best: Option<(usize, u32, u64, usize)> = None;
            for id in 0..t {
                if remaining[id] == 0 || chosen.contains(&id) {
                    continue;
                }
                let overlap: u32 = chosen.iter().map(|&c| co.get(&pair(c, id)).copied().unwrap_or(0)).sum();
                let tie: u64 = rng.random();
                let better = best.is_none_or(|(r, o, tb, _)| {
                    (remaining[id], std::cmp::Reverse(overlap), tie) > (r, std::cmp::Reverse(o), tb)
                });
                if better {
                    best = Some((remaining[id], overlap, tie, id));
                }
            }
            // Only duplicates are left: take one anyway and repair below.
            let id = match best {
                Some((_, _, _, id)) => id,
                None => (0..t).max_by_key(|&i| remaining[i]).expect("t >= k >= 2"),
            };
            chosen.push(id);
            remaining[id] -= 1;
        }
        for i in 0..k {
            for j in i + 1..k {
                *co.entry(pair(chosen[i], chosen[j])).or_insert(0) += 1;
            }
        }
        tuples.push(chosen);
    }
    repair(&mut tuples)?;
    for tuple in &mut tuples {
        tuple.shuffle(&mut rng);
    }

    let tuples: Vec<BwsTuple> = tuples
        .into_iter()
        .enumerate()
        .map(|(i, members)| BwsTuple {
            id: tuple_id(i, n_tuples),
            texts: members.into_iter().map(|m| text_ids[m].clone()).collect(),
        })
        .collect();
    let assignments = tuples.iter().map(|q| (q.id.clone(), (0..a).collect())).collect();
    let design = BwsDesign {
        texts: text_ids.to_vec(),
        tuples,
        assignments,
        parameters: BwsParameters { t, e, k, a, seed },
    };
    debug_assert!(design.validate().is_ok());
    Ok(design)
}

/// Swaps members between tuples until no tuple holds a text twice. Swaps
/// keep every text's appearance count unchanged.
fn repair(tuples: &mut [Vec<usize>]) -> Result<(), EvaluationError> {
    for i in 0..tuples.len() {
        loop {
            let dup = tuples[i]
                .iter()
                .enumerate()
                .find(|(p, x)| tuples[i][..*p].contains(x))
                .map(|(p, &x)| (p, x));
            let Some((p, x)) = dup else { break };
            let mut swapped = false;
            'search: for j in 0..tuples.len() {
                if j == i || tuples[j].contains(&x) {
                    continue;
                }
                for q in 0..tuples[j].len() {
                    let y = tuples[j][q];
                    if !tuples[i].contains(&y) {
                        tuples[i][p] = y;
                        tuples[j][q] = x;
                        swapped = true;
                        break 'search;
                    }
                }
            }
            if !swapped {
                return Err(EvaluationError::InvalidDesign(
                    "no swap removes a duplicate; the design is infeasible".into(),
                ));
            }
        }
    }
    Ok(())
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "record", rename_all = "snake_case")]
enum DesignRecord {
    Design {
        schema: String,
        parameters: BwsParameters,
        texts: Vec<String>,
    },
    Tuple {
        id: String,
        texts: Vec<String>,
        slots: Vec<usize>,
    },
}

impl BwsDesign {
    pub fn n_tuples(&self) -> usize {
        self.tuples.len()
    }

    pub fn tuple(&self, id: &str) -> Option<&BwsTuple> {
        self.tuples.iter().find(|q| q.id == id)
    }

    /// Checks every design invariant.
    pub fn validate(&self) -> Result<(), EvaluationError> {
        let BwsParameters { t, e, k, a, .. } = self.parameters;
        let bad = |m: String| Err(EvaluationError::InvalidDesign(m));
        if self.texts.len() != t {
            return bad(format!("{} texts, parameters say T = {t}", self.texts.len()));
        }
        if k == 0 || self.tuples.len() * k != t * e {
            return bad(format!("{} tuples, expected T·e/k = {t}·{e}/{k}", self.tuples.len()));
        }
        let mut counts: HashMap<&str, usize> = self.texts.iter().map(|x| (x.as_str(), 0)).collect();
        if counts.len() != t {
            return bad("duplicate text ids".into());
        }
        let mut ids = HashSet::new();
        for q in &self.tuples {
            if !ids.insert(q.id.as_str()) {
                return bad(format!("duplicate tuple id {:?}", q.id));
            }
            if q.texts.len() != k {
                return bad(format!("tuple {:?} has {} texts, expected {k}", q.id, q.texts.len()));
            }
            let distinct: HashSet<&String> = q.texts.iter().collect();
            if distinct.len() != k {
                return bad(format!("tuple {:?} repeats a text", q.id));
            }
            for x in &q.texts {
                match counts.get_mut(x.as_str()) {
                    Some(c) => *c += 1,
                    None => return bad(format!("tuple {:?} references unknown text {x:?}", q.id)),
                }
            }
            match self.assignments.get(&q.id) {
                Some(slots) if slots.len() == a => {}
                _ => return bad(format!("tuple {:?} does not have {a} annotator slots", q.id)),
            }
        }
        if let Some((x, c)) = counts.iter().find(|(_, c)| **c != e) {
            return bad(format!("text {x:?} appears in {c} tuples, expected {e}"));
        }
        Ok(())
    }

    /// One header record, then one record per tuple.
    pub fn write_jsonl<W: Write>(&self, out: W) -> std::io::Result<()> {
        let mut records = vec![DesignRecord::Design {
            schema: DESIGN_SCHEMA.into(),
            parameters: self.parameters,
            texts: self.texts.clone(),
        }];
        records.extend(self.tuples.iter().map(|q| DesignRecord::Tuple {
            id: q.id.clone(),
            texts: q.texts.clone(),
            slots: self.assignments.get(&q.id).cloned().unwrap_or_default(),
        }));
        write_jsonl(&records, out)
    }

    pub fn read_jsonl<R: Read>(input: R) -> Result<BwsDesign, EvaluationError> {
        let records: Vec<DesignRecord> = read_jsonl(input)?;
        let mut iter = records.into_iter();
        let Some(DesignRecord::Design { schema, parameters, texts }) = iter.next() else {
            return Err(EvaluationError::Format {
                line: 1,
                message: "expected a design header record".into(),
            });
        };
        if schema != DESIGN_SCHEMA {
            return Err(EvaluationError::Format {
                line: 1,
                message: format!("unsupported schema {schema:?}, expected {DESIGN_SCHEMA:?}"),
            });
        }
        let mut tuples = Vec::new();
        let mut assignments = BTreeMap::new();
        for (i, record) in iter.enumerate() {
            match record {
                DesignRecord::Tuple { id, texts, slots } => {
                    assignments.insert(id.clone(), slots);
                    tuples.push(BwsTuple { id, texts });
                }
                DesignRecord::Design { .. } => {
                    return Err(EvaluationError::Format {
                        line: i + 2,
                        message: "second design header".into(),
                    })
                }
            }
        }
        let design = BwsDesign {
            texts,
            tuples,
            assignments,
            parameters,
        };
        design.validate()?;
        Ok(design)
    }
}

#[derive(Default, Clone, Copy)]
struct Tally {
    seen: u32,
    best: u32,
    worst: u32,
}

/// Validates responses and counts, per text, judgments containing it and
/// best and worst choices.
fn tally<'a>(
    design: &'a BwsDesign,
    responses: impl IntoIterator<Item = &'a BwsResponse>,
) -> Result<BTreeMap<&'a str, Tally>, EvaluationError> {
    let by_id: HashMap<&str, &BwsTuple> = design.tuples.iter().map(|q| (q.id.as_str(), q)).collect();
    let mut tallies: BTreeMap<&str, Tally> = BTreeMap::new();
    for r in responses {
        let tuple = by_id
            .get(r.tuple_id.as_str())
            .ok_or_else(|| EvaluationError::UnknownTuple(r.tuple_id.clone()))?;
        r.validate(tuple)?;
        for x in &tuple.texts {
            let t = tallies.entry(x.as_str()).or_default();
            t.seen += 1;
            if *x == r.best {
                t.best += 1;
            }
            if *x == r.worst {
                t.worst += 1;
            }
        }
    }
    Ok(tallies)
}

fn score(t: Tally) -> f64 {
    let n = f64::from(t.seen);
    100.0 * f64::from(t.best) / n - 100.0 * f64::from(t.worst) / n
}

/// `score(i) = best%(i) − worst%(i)`, percentages of the judgments that
/// contain text `i`. Texts never judged are left out.
pub fn bws_scores(
    design: &BwsDesign,
    responses: &[BwsResponse],
) -> Result<BTreeMap<String, f64>, EvaluationError> {
    Ok(tally(design, responses)?
        .into_iter()
        .map(|(id, t)| (id.to_string(), score(t)))
        .collect())
}

pub(super) fn bws_scores_of<'a>(
    design: &'a BwsDesign,
    responses: impl IntoIterator<Item = &'a BwsResponse>,
) -> Result<BTreeMap<&'a str, f64>, EvaluationError> {
    Ok(tally(design, responses)?
        .into_iter()
        .map(|(id, t)| (id, score(t)))
        .collect())
}

/// How often an annotator's best and worst choices match the plurality
/// choice of the other annotators on the same tuples. A diagnostic only:
/// nothing is filtered on it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotatorAgreement {
    pub annotator_id: String,
    pub responses: usize,
    /// Fraction of matching choices; `None` when no tuple had other annotators.
    pub agreement: Option<f64>,
}

pub fn annotator_agreement(
    design: &BwsDesign,
    responses: &[BwsResponse],
) -> Result<Vec<AnnotatorAgreement>, EvaluationError> {
    tally(design, responses)?;
    let mut by_tuple: HashMap<&str, Vec<&BwsResponse>> = HashMap::new();
    for r in responses {
        by_tuple.entry(r.tuple_id.as_str()).or_default().push(r);
    }
    // annotator -> (responses, matched choices, compared choices)
    let mut stats: BTreeMap<&str, (usize, usize, usize)> = BTreeMap::new();
    for r in responses {
        let entry = stats.entry(r.annotator_id.as_str()).or_default();
        entry.0 += 1;
        let others: Vec<&&BwsResponse> = by_tuple[r.tuple_id.as_str()]
            .iter()
            .filter(|o| o.annotator_id != r.annotator_id)
            .collect();
        if others.is_empty() {
            continue;
        }
        for (mine, pick) in [
            (&r.best, &(|o: &BwsResponse| o.best.clone()) as &dyn Fn(&BwsResponse) -> String),
            (&r.worst, &|o: &BwsResponse| o.worst.clone()),
        ] {
            let mut votes: HashMap<String, usize> = HashMap::new();
            for o in &others {
                *votes.entry(pick(o)).or_insert(0) += 1;
            }
            let top = votes.values().copied().max().unwrap_or(0);
            entry.2 += 1;
            if votes.get(mine).copied().unwrap_or(0) == top {
                entry.1 += 1;
            }
        }
    }
    Ok(stats
        .into_iter()
        .map(|(id, (n, matched, compared))| AnnotatorAgreement {
            annotator_id: id.to_string(),
            responses: n,
            agreement: (compared > 0).then(|| matched as f64 / compared as f64),
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ids(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("x{i:02}")).collect()
    }

    fn resp(tuple: &str, who: &str, best: &str, worst: &str) -> BwsResponse {
        BwsResponse {
            tuple_id: tuple.into(),
            annotator_id: who.into(),
            best: best.into(),
            worst: worst.into(),
            timestamp: 0,
            panel_order: None,
        }
    }

    #[test]
    fn panel_order_must_permute_the_tuple() {
        let d = generate_bws_design(&ids(3), 1, 3, 1, 0).unwrap();
        let q = &d.tuples[0];
        let mut r = resp(&q.id, "a", &q.texts[0], &q.texts[1]);
        r.panel_order = Some(q.texts.iter().rev().cloned().collect());
        r.validate(q).unwrap();
        let line = serde_json::to_string(&r).unwrap();
        assert_eq!(serde_json::from_str::<BwsResponse>(&line).unwrap(), r);
        r.panel_order = Some(vec![q.texts[0].clone(), q.texts[0].clone(), q.texts[1].clone()]);
        assert!(r.validate(q).is_err());
        r.panel_order = None;
        assert!(!serde_json::to_string(&r).unwrap().contains("panel_order"));
    }

    #[test]
    fn full_size_design() {
        let d = generate_bws_design(&ids(48), 12, 3, 3, 7).unwrap();
        assert_eq!(d.n_tuples(), 192);
        d.validate().unwrap();
    }

    #[test]
    fn forced_design() {
        let d = generate_bws_design(&ids(3), 1, 3, 1, 0).unwrap();
        assert_eq!(d.tuples.len(), 1);
        let mut texts = d.tuples[0].texts.clone();
        texts.sort();
        assert_eq!(texts, ids(3));
    }

    #[test]
    fn design_errors_state_the_arithmetic() {
        let err = generate_bws_design(&ids(10), 1, 3, 1, 0).unwrap_err();
        assert_eq!(err.to_string(), "T·e = 10·1 = 10 is not divisible by k = 3");
        assert!(matches!(
            generate_bws_design(&ids(2), 3, 3, 1, 0),
            Err(EvaluationError::Infeasible { t: 2, k: 3 })
        ));
    }

    #[test]
    fn repair_removes_duplicates() {
        let mut tuples = vec![vec![0, 0, 1], vec![2, 3, 4]];
        repair(&mut tuples).unwrap();
        assert!(tuples.iter().all(|q| q.iter().collect::<HashSet<_>>().len() == 3));
        let mut all: Vec<usize> = tuples.concat();
        all.sort();
        assert_eq!(all.iter().filter(|&&x| x == 0).count(), 2);
    }

    #[test]
    fn design_jsonl_round_trip() {
        let d = generate_bws_design(&ids(6), 2, 3, 2, 1).unwrap();
        let mut buf = Vec::new();
        d.write_jsonl(&mut buf).unwrap();
        assert_eq!(BwsDesign::read_jsonl(&buf[..]).unwrap(), d);
    }

    #[test]
    fn scores_from_counts() {
        let d = generate_bws_design(&ids(3), 1, 3, 1, 0).unwrap();
        let q = &d.tuples[0];
        let (a, b, c) = (&q.texts[0], &q.texts[1], &q.texts[2]);
        let responses = vec![resp(&q.id, "u1", a, b), resp(&q.id, "u2", a, c)];
        let s = bws_scores(&d, &responses).unwrap();
        assert_eq!(s[a], 100.0);
        assert_eq!(s[b], -50.0);
        assert_eq!(s[c], -50.0);
    }

    #[test]
    fn invalid_responses() {
        let d = generate_bws_design(&ids(3), 1, 3, 1, 0).unwrap();
        let q = &d.tuples[0];
        let same = resp(&q.id, "u", &q.texts[0], &q.texts[0]);
        assert!(matches!(bws_scores(&d, &[same]), Err(EvaluationError::InvalidResponse { .. })));
        let unknown = resp("nope", "u", &q.texts[0], &q.texts[1]);
        assert!(matches!(bws_scores(&d, &[unknown]), Err(EvaluationError::UnknownTuple(_))));
        let outside = resp(&q.id, "u", "zzz", &q.texts[1]);
        assert!(bws_scores(&d, &[outside]).is_err());
    }

    #[test]
    fn agreement_diagnostic() {
        let d = generate_bws_design(&ids(3), 1, 3, 3, 0).unwrap();
        let q = &d.tuples[0];
        let (a, b, c) = (&q.texts[0], &q.texts[1], &q.texts[2]);
        let r = vec![resp(&q.id, "u1", a, b), resp(&q.id, "u2", a, b), resp(&q.id, "u3", c, a)];
        let stats = annotator_agreement(&d, &r).unwrap();
        assert_eq!(stats[0].agreement, Some(1.0));
        assert_eq!(stats[2].agreement, Some(0.0));
    }
}
