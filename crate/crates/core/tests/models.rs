mod oracles;

use std::path::Path;

use clarte::corpus::featurize;
use clarte::indicators::extract_features;
use clarte::ingest::read_conllu_file;
use clarte::models::{
    comprehension_score, fit_forest, fit_mlp, fit_ridge, load_model, read_model, train, validation_accuracy,
    write_model, ForestParams, Hyperparameters, Mlp, MlpParams, ModelError, ModelKind, Node, Tree, TreeParams,
};
use clarte::synth::{generate_corpus, SynthConfig};
use clarte::{FeatureVector, LabeledDataset, Lexicons, ScoringModel, N_FEATURES};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn synthetic_dataset(per_class: usize, seed: u64) -> LabeledDataset {
    let docs = generate_corpus(&SynthConfig { docs_per_class: per_class, seed, ..Default::default() });
    let labeled: Vec<_> = docs.iter().map(|d| (d.doc.clone(), d.label, Some(d.pair_id.clone()))).collect();
    featurize(&labeled, &Lexicons::builtin()).0
}

fn random_matrix(rng: &mut ChaCha8Rng, n: usize, d: usize) -> Vec<Vec<f64>> {
    (0..n).map(|_| (0..d).map(|_| rng.random_range(-3.0..3.0)).collect()).collect()
}

fn fast(kind: ModelKind) -> Hyperparameters {
    match kind {
        ModelKind::RandomForest => Hyperparameters::RandomForest(ForestParams { n_trees: 20, ..Default::default() }),
        ModelKind::Mlp => Hyperparameters::Mlp(MlpParams { epochs: 60, lr: 0.1, ..Default::default() }),
        k => Hyperparameters::default_for(k),
    }
}

#[test]
fn ridge_matches_normal_equations() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..50 {
        let n = rng.random_range(3..=50);
        let d = rng.random_range(1..=10);
        let lambda = rng.random_range(0.05..5.0);
        let x = random_matrix(&mut rng, n, d);
        let y: Vec<f64> = (0..n).map(|_| f64::from(rng.random_range(0..2u8))).collect();
        let fit = fit_ridge(&x, &y, lambda).unwrap();
        let (w, b) = oracles::ridge_normal_equations(&x, &y, lambda);
        for (got, want) in fit.weights.iter().zip(&w) {
            assert!((got - want).abs() <= 1e-8, "{got} vs {want}");
        }
        assert!((fit.intercept - b).abs() <= 1e-8);
    }
}

#[test]
fn ridge_on_duplicated_rows_equals_doubled_penalty() {
    // Stacking the data twice doubles XᵀX and Xᵀy, so λ must double too.
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let x = random_matrix(&mut rng, 30, 6);
    let y: Vec<f64> = (0..30).map(|i| f64::from(i % 2 == 0)).collect();
    let once = fit_ridge(&x, &y, 0.7).unwrap();
    let x2: Vec<Vec<f64>> = x.iter().chain(&x).cloned().collect();
    let y2: Vec<f64> = y.iter().chain(&y).copied().collect();
    let twice = fit_ridge(&x2, &y2, 1.4).unwrap();
    for (a, b) in once.weights.iter().zip(&twice.weights) {
        assert!((a - b).abs() < 1e-10);
    }
    assert!((once.intercept - twice.intercept).abs() < 1e-10);
}

#[test]
fn mlp_gradients_match_finite_differences() {
    for seed in 0..5u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = random_matrix(&mut rng, 12, 5);
        let y: Vec<f64> = (0..12).map(|i| f64::from(i % 3 == 0)).collect();
        let mut net = Mlp::init(5, 7, &mut rng);
        // Move away from the symmetric start so every parameter matters.
        let mut theta = net.flat_params();
        for v in &mut theta {
            *v += rng.random_range(-0.3..0.3);
        }
        net.set_flat_params(&theta);
        let (_, grad) = net.loss_and_gradient(&x, &y);
        let numeric = oracles::finite_difference(&theta, 1e-6, |p| {
            let mut probe = net.clone();
            probe.set_flat_params(p);
            probe.loss(&x, &y)
        });
        let err = oracles::max_relative_error(&grad.flat(), &numeric, 1e-6);
        assert!(err < 1e-4, "seed {seed}: {err}");
    }
}

#[test]
fn mlp_learns_xor() {
    let x: Vec<Vec<f64>> = [[0.0, 0.0], [0.0, 1.0], [1.0, 0.0], [1.0, 1.0]]
        .iter()
        .flat_map(|r| std::iter::repeat_n(r.to_vec(), 5))
        .collect();
    let y: Vec<f64> = x.iter().map(|r| f64::from((r[0] > 0.5) != (r[1] > 0.5))).collect();
    let params = MlpParams { hidden: 8, lr: 0.5, epochs: 3000, patience: 20 };
    let fit = fit_mlp(&x, &y, None, &params, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
    for (row, t) in x.iter().zip(&y) {
        assert_eq!(fit.network.predict(row) >= 0.5, *t == 1.0, "{row:?}");
    }
}

#[test]
fn depth_one_tree_is_the_best_stump() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..200 {
        let n = rng.random_range(2..40);
        let x: Vec<f64> = (0..n).map(|_| f64::from(rng.random_range(0..12u8)) / 2.0).collect();
        let y: Vec<f64> = (0..n).map(|_| f64::from(rng.random_range(0..2u8))).collect();
        let rows: Vec<Vec<f64>> = x.iter().map(|v| vec![*v]).collect();
        let params = TreeParams { max_depth: Some(1), max_features: None };
        let all: Vec<usize> = (0..n).collect();
        let tree = Tree::grow(&rows, &y, &all, &params, &mut ChaCha8Rng::seed_from_u64(0));
        let pure = y.iter().all(|v| *v == y[0]);
        match (pure, oracles::best_stump(&x, &y)) {
            (false, Some((threshold, left, right))) => {
                assert_eq!(tree.nodes.len(), 3);
                let Node::Split { threshold: t, .. } = tree.nodes[0] else { panic!("root is a leaf") };
                assert_eq!(t, threshold);
                assert_eq!(tree.predict(&[threshold]), left);
                assert_eq!(tree.predict(&[threshold + 1.0]), right);
            }
            _ => assert_eq!(tree.nodes.len(), 1),
        }
        // The same stump through the forest entry point.
        let forest = fit_forest(&rows, &y, &ForestParams { n_trees: 1, max_depth: Some(1), max_features: None, bootstrap: false }, 5).unwrap();
        assert_eq!(forest[0], tree);
    }
}

#[test]
fn one_tree_forest_is_a_cart_tree_on_its_bootstrap() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let x = random_matrix(&mut rng, 60, 4);
    let y: Vec<f64> = x.iter().map(|r| f64::from(r[0] + r[1] > 0.0)).collect();
    let params = ForestParams { n_trees: 1, max_depth: None, max_features: Some(4), bootstrap: true };
    let forest = fit_forest(&x, &y, &params, 9).unwrap();
    let (rows, mut tree_rng) = clarte::models::bootstrap_sample(60, 9, 0);
    let tree = Tree::grow(&x, &y, &rows, &TreeParams { max_depth: None, max_features: Some(4) }, &mut tree_rng);
    assert_eq!(forest, vec![tree]);
}

#[test]
fn label_swap_mirrors_probabilities() {
    let ds = synthetic_dataset(60, 4);
    let swapped = ds.with_swapped_labels();
    for kind in ModelKind::ALL {
        let hp = fast(kind);
        let m = train(&hp, &ds, None, 1).unwrap();
        let s = train(&hp, &swapped, None, 1).unwrap();
        for item in &ds.items {
            let p = m.predict_proba(&item.features).unwrap();
            let q = s.predict_proba(&item.features).unwrap();
            match kind {
                ModelKind::Ridge => {
                    let raw = m.decision_value(&item.features).unwrap();
                    assert!((q - (1.0 - raw).clamp(0.0, 1.0)).abs() < 1e-12);
                }
                ModelKind::RandomForest | ModelKind::Mlp => assert!((p + q - 1.0).abs() <= 0.05, "{kind:?}"),
                ModelKind::LinearSvc => {}
            }
        }
    }
}

#[test]
fn saved_models_predict_identically() {
    let ds = synthetic_dataset(20, 6);
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let dir = tempfile::tempdir().unwrap();
    for kind in ModelKind::ALL {
        let m = train(&fast(kind), &ds, None, 2).unwrap();
        let path = dir.path().join(format!("{}.model", kind.name()));
        clarte::models::save_model(&m, &path).unwrap();
        let back = load_model(&path).unwrap();
        assert_eq!(back, m);
        for _ in 0..100 {
            let mut fv = FeatureVector::zeros();
            for v in fv.0.iter_mut() {
                *v = rng.random_range(0.0..40.0);
            }
            let (a, b) = (m.predict_proba(&fv).unwrap(), back.predict_proba(&fv).unwrap());
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }
}

#[test]
fn damaged_model_files_are_rejected() {
    let m = train(&fast(ModelKind::Ridge), &synthetic_dataset(10, 1), None, 0).unwrap();
    let mut bytes = Vec::new();
    write_model(&m, &mut bytes).unwrap();
    assert!(matches!(read_model(&bytes[..bytes.len() - 10]), Err(ModelError::Corrupt(_))));
    let future = String::from_utf8(bytes).unwrap().replacen(" v1 ", " v2 ", 1);
    assert!(matches!(read_model(future.as_bytes()), Err(ModelError::Version { found: 2, expected: 1 })));
}

#[test]
fn training_is_deterministic() {
    let ds = synthetic_dataset(20, 7);
    for kind in ModelKind::ALL {
        let bytes = || {
            let mut out = Vec::new();
            write_model(&train(&fast(kind), &ds, None, 5).unwrap(), &mut out).unwrap();
            out
        };
        assert_eq!(bytes(), bytes(), "{kind:?}");
    }
}

#[test]
fn probabilities_stay_in_the_unit_interval() {
    let ds = synthetic_dataset(20, 8);
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for kind in ModelKind::ALL {
        let m = train(&fast(kind), &ds, None, 0).unwrap();
        for _ in 0..500 {
            let scale = 10f64.powi(rng.random_range(-3..6));
            let mut fv = FeatureVector::zeros();
            for v in fv.0.iter_mut() {
                *v = rng.random_range(0.0..1.0) * scale;
            }
            let p = m.predict_proba(&fv).unwrap();
            assert!((0.0..=1.0).contains(&p), "{kind:?} {p}");
        }
        let mut bad = FeatureVector::zeros();
        bad.0[N_FEATURES - 1] = f64::NAN;
        assert!(matches!(m.predict_proba(&bad), Err(ModelError::NonFinite(_))));
    }
}

fn fixture_path(name: &str) -> std::path::PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

#[test]
fn golden_probabilities_of_the_fixture_model() {
    let model = load_model(&fixture_path("svc_small.model")).unwrap();
    let mid: Vec<f64> = serde_json::from_str(&std::fs::read_to_string(fixture_path("mid.features.json")).unwrap()).unwrap();
    assert_eq!(model.predict_raw(&mid).unwrap(), 0.5745883138290079);
    let doc = read_conllu_file(&fixture_path("complex_01.conllu")).unwrap().remove(0);
    let score = comprehension_score(&model, &doc, &Lexicons::builtin()).unwrap();
    assert_eq!(score.score, 100.0 * 0.0033869312814862234);
}

fn reference_model() -> (ScoringModel, LabeledDataset) {
    let ds = synthetic_dataset(150, 0);
    let (tr, va) = clarte::corpus::split_train_valid(&ds, 0.1, 0).unwrap();
    (train(&Hyperparameters::default_for(ModelKind::RandomForest), &tr, None, 0).unwrap(), va)
}

#[test]
fn very_complex_fixture_scores_low() {
    let (model, valid) = reference_model();
    assert!(validation_accuracy(&model, &valid).unwrap() >= 0.9);
    let doc = read_conllu_file(&fixture_path("very_complex.conllu")).unwrap().remove(0);
    let lex = Lexicons::builtin();
    assert!(extract_features(&doc, &lex).warnings.is_empty());
    let score = comprehension_score(&model, &doc, &lex).unwrap().score;
    assert!(score < 20.0, "{score}");
}
