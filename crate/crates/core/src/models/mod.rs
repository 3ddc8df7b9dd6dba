//! Simple-vs-complex classifiers. The comprehension score of a document is
//! 100 times the model's probability that it is simple.

mod forest;
mod io;
mod linalg;
mod linear;
mod mlp;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{Label, LabeledDataset};
use crate::indicators::{extract_features, ExtractionWarning, Feature, FeatureVector};
use crate::ingest::Document;
use crate::lexicons::Lexicons;
use crate::rng;

pub use forest::{best_threshold, bootstrap_sample, fit_forest, forest_predict, ForestParams, Node, Tree, TreeParams};
pub use io::{load_model, read_model, save_model, write_model, FORMAT_VERSION};
pub use linear::{fit_linear_svc, fit_platt, fit_ridge, hinge_loss, Calibration, LinearParams};
pub use mlp::{fit_mlp, Gradients, Mlp, MlpFit, MlpParams};

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("training diverged at epoch {epoch}")]
    Divergence { epoch: usize },
    #[error("feature {0} is not finite")]
    NonFinite(Feature),
    #[error("expected {expected} features, got {found}")]
    Dimension { expected: usize, found: usize },
    #[error("unsupported model format version {found} (this build reads version {expected})")]
    Version { found: u32, expected: u32 },
    #[error("corrupt model file: {0}")]
    Corrupt(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Ridge,
    LinearSvc,
    RandomForest,
    Mlp,
}

impl ModelKind {
    pub const ALL: [ModelKind; 4] = [
        ModelKind::Ridge,
        ModelKind::LinearSvc,
        ModelKind::RandomForest,
        ModelKind::Mlp,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Ridge => "ridge",
            ModelKind::LinearSvc => "linear_svc",
            ModelKind::RandomForest => "random_forest",
            ModelKind::Mlp => "mlp",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "ridge" => Ok(ModelKind::Ridge),
            "svc" | "linear_svc" => Ok(ModelKind::LinearSvc),
            "forest" | "random_forest" => Ok(ModelKind::RandomForest),
            "mlp" => Ok(ModelKind::Mlp),
            other => Err(format!("unknown model kind {other:?} (ridge, svc, forest, mlp)")),
        }
    }
}

/// Per-feature standardisation fitted on training data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Standardizer {
    /// Fits means and population standard deviations. Zero-variance columns
    /// get std 1; their indices are returned alongside.
    pub fn fit(x: &[Vec<f64>]) -> (Standardizer, Vec<usize>) {
        let n = x.len() as f64;
        let d = x.first().map_or(0, Vec::len);
        let mut mean = vec![0.0; d];
        let mut std = vec![0.0; d];
        let mut constant = Vec::new();
        for j in 0..d {
            let m = x.iter().map(|r| r[j]).sum::<f64>() / n;
            let var = x.iter().map(|r| (r[j] - m).powi(2)).sum::<f64>() / n;
            mean[j] = m;
            std[j] = if var > 0.0 {
                var.sqrt()
            } else {
                constant.push(j);
                1.0
            };
        }
        (Standardizer { mean, std }, constant)
    }

    pub fn transform(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(self.mean.iter().zip(&self.std))
            .map(|(v, (m, s))| (v - m) / s)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Hyperparameters {
    Ridge { lambda: f64 },
    LinearSvc { c: f64, epochs: usize },
    RandomForest(ForestParams),
    Mlp(MlpParams),
}

impl Hyperparameters {
    pub fn kind(&self) -> ModelKind {
        match self {
            Hyperparameters::Ridge { .. } => ModelKind::Ridge,
            Hyperparameters::LinearSvc { .. } => ModelKind::LinearSvc,
            Hyperparameters::RandomForest(_) => ModelKind::RandomForest,
            Hyperparameters::Mlp(_) => ModelKind::Mlp,
        }
    }

    pub fn default_for(kind: ModelKind) -> Hyperparameters {
        match kind {
            ModelKind::Ridge => Hyperparameters::Ridge { lambda: 1.0 },
            ModelKind::LinearSvc => Hyperparameters::LinearSvc { c: 1.0, epochs: 100 },
            ModelKind::RandomForest => Hyperparameters::RandomForest(ForestParams::default()),
            ModelKind::Mlp => Hyperparameters::Mlp(MlpParams::default()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "head", rename_all = "snake_case")]
pub enum Params {
    Linear(LinearParams),
    Forest { trees: Vec<Tree> },
    Mlp(Mlp),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingStats {
    pub n_items: usize,
    pub n_simple: usize,
    pub n_complex: usize,
    pub epochs_run: Option<usize>,
    pub final_loss: Option<f64>,
    /// Features with zero variance in training data (std set to 1).
    pub constant_features: Vec<String>,
}

/// A trained classifier mapping a feature vector to the probability that the
/// text is simple.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoringModel {
    pub kind: ModelKind,
    pub seed: u64,
    pub hyperparameters: Hyperparameters,
    pub standardizer: Standardizer,
    pub params: Params,
    pub calibration: Option<Calibration>,
    pub training: TrainingStats,
}

fn design(ds: &LabeledDataset) -> (Vec<Vec<f64>>, Vec<f64>) {
    let x = ds.items.iter().map(|i| i.features.0.to_vec()).collect();
    let y = ds.items.iter().map(|i| i.label.as_f64()).collect();
    (x, y)
}

fn check_trainable(ds: &LabeledDataset) -> Result<(), ModelError> {
    if ds.len() < 2 || !ds.has_both_labels() {
        return Err(ModelError::Precondition(
            "training needs at least two items and both labels".into(),
        ));
    }
    if let Some((item, f)) = ds
        .items
        .iter()
        .find_map(|i| i.features.first_non_finite().map(|f| (i, f)))
    {
        return Err(ModelError::Precondition(format!(
            "{}: feature {f} is not finite",
            item.doc_id
        )));
    }
    Ok(())
}

/// Trains the model described by `hp`. `valid` is only used by the MLP, for
/// early stopping.
pub fn train(
    hp: &Hyperparameters,
    train: &LabeledDataset,
    valid: Option<&LabeledDataset>,
    seed: u64,
) -> Result<ScoringModel, ModelError> {
    check_trainable(train)?;
    let (raw_x, y) = design(train);
    let (standardizer, constant) = Standardizer::fit(&raw_x);
    let x: Vec<Vec<f64>> = raw_x.iter().map(|r| standardizer.transform(r)).collect();
    let mut epochs_run = None;
    let mut final_loss = None;
    let mut calibration = None;
    let params = match hp {
        Hyperparameters::Ridge { lambda } => Params::Linear(fit_ridge(&x, &y, *lambda)?),
        Hyperparameters::LinearSvc { c, epochs } => {
            let mut rng = rng::seeded(seed);
            let p = fit_linear_svc(&x, &y, *c, *epochs, &mut rng)?;
            let margins: Vec<f64> = x.iter().map(|r| p.decision(r)).collect();
            calibration = Some(fit_platt(&margins, &y));
            epochs_run = Some(*epochs);
            final_loss = Some(hinge_loss(&p, &x, &y));
            Params::Linear(p)
        }
        Hyperparameters::RandomForest(fp) => Params::Forest {
            trees: fit_forest(&x, &y, fp, seed)?,
        },
        Hyperparameters::Mlp(mp) => {
            let valid_xy = valid.map(|v| {
                let (vx, vy) = design(v);
                let vx: Vec<Vec<f64>> = vx.iter().map(|r| standardizer.transform(r)).collect();
                (vx, vy)
            });
            let mut rng = rng::seeded(seed);
            let fit = fit_mlp(
                &x,
                &y,
                valid_xy.as_ref().map(|(a, b)| (a.as_slice(), b.as_slice())),
                mp,
                &mut rng,
            )?;
            epochs_run = Some(fit.epochs_run);
            final_loss = Some(fit.final_loss);
            Params::Mlp(fit.network)
        }
    };
    Ok(ScoringModel {
        kind: hp.kind(),
        seed,
        hyperparameters: hp.clone(),
        standardizer,
        params,
        calibration,
        training: TrainingStats {
            n_items: train.len(),
            n_simple: train.count(Label::Simple),
            n_complex: train.count(Label::Complex),
            epochs_run,
            final_loss,
            constant_features: constant
                .into_iter()
                .map(|j| Feature::ALL[j].name().to_string())
                .collect(),
        },
    })
}

pub fn train_ridge(ds: &LabeledDataset, lambda: f64) -> Result<ScoringModel, ModelError> {
    train(&Hyperparameters::Ridge { lambda }, ds, None, 0)
}

pub fn train_linear_svc(
    ds: &LabeledDataset,
    c: f64,
    epochs: usize,
    seed: u64,
) -> Result<ScoringModel, ModelError> {
    train(&Hyperparameters::LinearSvc { c, epochs }, ds, None, seed)
}

pub fn train_random_forest(
    ds: &LabeledDataset,
    params: ForestParams,
    seed: u64,
) -> Result<ScoringModel, ModelError> {
    train(&Hyperparameters::RandomForest(params), ds, None, seed)
}

pub fn train_mlp(
    ds: &LabeledDataset,
    params: MlpParams,
    valid: Option<&LabeledDataset>,
    seed: u64,
) -> Result<ScoringModel, ModelError> {
    train(&Hyperparameters::Mlp(params), ds, valid, seed)
}

impl ScoringModel {
    /// Probability of the simple class for a raw (unstandardised) vector of
    /// the model's input dimension.
    pub fn predict_raw(&self, x: &[f64]) -> Result<f64, ModelError> {
        if x.len() != self.standardizer.mean.len() {
            return Err(ModelError::Dimension {
                expected: self.standardizer.mean.len(),
                found: x.len(),
            });
        }
        let z = self.standardizer.transform(x);
        let p = match &self.params {
            Params::Linear(lin) => {
                let raw = lin.decision(&z);
                match &self.calibration {
                    Some(cal) => cal.apply(raw),
                    None => raw.clamp(0.0, 1.0),
                }
            }
            Params::Forest { trees } => forest_predict(trees, &z),
            Params::Mlp(net) => net.predict(&z),
        };
        Ok(p)
    }

    /// Probability that the text described by `fv` is simple.
    pub fn predict_proba(&self, fv: &FeatureVector) -> Result<f64, ModelError> {
        if let Some(f) = fv.first_non_finite() {
            return Err(ModelError::NonFinite(f));
        }
        self.predict_raw(&fv.0)
    }

    /// Raw decision value before any clamp or calibration: the regression
    /// output for ridge and the margin for the SVC.
    pub fn decision_value(&self, fv: &FeatureVector) -> Option<f64> {
        match &self.params {
            Params::Linear(lin) => Some(lin.decision(&self.standardizer.transform(&fv.0))),
            _ => None,
        }
    }
}

/// A comprehension score in [0, 100] and the extraction warnings behind it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Score {
    pub doc_id: String,
    pub score: f64,
    pub warnings: Vec<ExtractionWarning>,
}

pub fn comprehension_score(
    model: &ScoringModel,
    doc: &Document,
    lexicons: &Lexicons,
) -> Result<Score, ModelError> {
    let out = extract_features(doc, lexicons);
    let p = model.predict_proba(&out.features)?;
    Ok(Score {
        doc_id: doc.id.clone(),
        score: 100.0 * p,
        warnings: out.warnings,
    })
}

/// Fraction of items whose predicted class (simple when p >= 0.5) matches the label.
pub fn validation_accuracy(model: &ScoringModel, valid: &LabeledDataset) -> Result<f64, ModelError> {
    if valid.is_empty() {
        return Err(ModelError::Precondition("empty validation set".into()));
    }
    let mut correct = 0;
    for item in &valid.items {
        let p = model.predict_proba(&item.features)?;
        let predicted = if p >= 0.5 { Label::Simple } else { Label::Complex };
        correct += usize::from(predicted == item.label);
    }
    Ok(correct as f64 / valid.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::LabeledItem;

    fn toy(n: usize) -> LabeledDataset {
        LabeledDataset::new(
            (0..n)
                .map(|i| {
                    let simple = i % 2 == 0;
                    let mut fv = FeatureVector::zeros();
                    fv.0[0] = if simple { 1.0 } else { 4.0 } + (i % 7) as f64 * 0.1;
                    fv.0[5] = if simple { 8.0 } else { 25.0 } + (i % 3) as f64;
                    fv.0[9] = (i % 5) as f64;
                    LabeledItem {
                        doc_id: format!("d{i}"),
                        features: fv,
                        label: if simple { Label::Simple } else { Label::Complex },
                        pair_id: None,
                    }
                })
                .collect(),
        )
    }

    #[test]
    fn kinds_parse_aliases() {
        assert_eq!("svc".parse::<ModelKind>().unwrap(), ModelKind::LinearSvc);
        assert_eq!("forest".parse::<ModelKind>().unwrap(), ModelKind::RandomForest);
        assert!("tree".parse::<ModelKind>().is_err());
    }

    #[test]
    fn every_kind_learns_a_separable_toy() {
        let ds = toy(60);
        for kind in ModelKind::ALL {
            let hp = match kind {
                ModelKind::Mlp => Hyperparameters::Mlp(MlpParams {
                    lr: 0.5,
                    ..Default::default()
                }),
                k => Hyperparameters::default_for(k),
            };
            let model = train(&hp, &ds, None, 1).unwrap();
            assert_eq!(validation_accuracy(&model, &ds).unwrap(), 1.0, "{kind}");
        }
    }

    #[test]
    fn ridge_clamps_raw_output() {
        let model = train_ridge(&toy(20), 1.0).unwrap();
        let mut far = FeatureVector::zeros();
        far.0[0] = -50.0;
        far.0[5] = -100.0;
        assert!(model.decision_value(&far).unwrap() > 1.0);
        assert_eq!(model.predict_proba(&far).unwrap(), 1.0);
    }

    #[test]
    fn constant_features_are_reported() {
        let model = train_ridge(&toy(20), 1.0).unwrap();
        assert!(model.training.constant_features.contains(&"abbreviation_rate".to_string()));
        assert_eq!(model.standardizer.std[1], 1.0);
    }

    #[test]
    fn single_label_is_rejected() {
        let mut ds = toy(10);
        for i in &mut ds.items {
            i.label = Label::Simple;
        }
        for kind in ModelKind::ALL {
            assert!(matches!(
                train(&Hyperparameters::default_for(kind), &ds, None, 0),
                Err(ModelError::Precondition(_))
            ));
        }
    }

    #[test]
    fn non_finite_feature_is_named() {
        let model = train_ridge(&toy(20), 1.0).unwrap();
        let mut fv = FeatureVector::zeros();
        fv.0[3] = f64::NAN;
        match model.predict_proba(&fv) {
            Err(ModelError::NonFinite(f)) => assert_eq!(f.name(), "named_entity_rate"),
            other => panic!("unexpected {other:?}"),
        }
    }
}
