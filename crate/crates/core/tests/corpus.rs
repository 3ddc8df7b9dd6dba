use std::collections::{BTreeMap, HashSet};

use clarte::corpus::{build_dataset, corpus_stats, split_train_valid};
use clarte::ingest::segment_plain_text;
use clarte::synth::{generate_corpus, write_corpus, SynthConfig};
use clarte::{FeatureVector, Label, LabeledDataset, LabeledItem, Lexicons};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn dataset(n_singles: usize, n_pairs: usize) -> LabeledDataset {
    let mut items = Vec::new();
    for i in 0..n_singles {
        let label = if i % 2 == 0 { Label::Simple } else { Label::Complex };
        items.push(LabeledItem {
            doc_id: format!("s{i}"),
            features: FeatureVector::zeros(),
            label,
            pair_id: None,
        });
    }
    for p in 0..n_pairs {
        for label in [Label::Simple, Label::Complex] {
            items.push(LabeledItem {
                doc_id: format!("{}/p{p}", label.as_str()),
                features: FeatureVector::zeros(),
                label,
                pair_id: Some(format!("p{p}")),
            });
        }
    }
    LabeledDataset::new(items)
}

#[test]
fn hundred_unpaired_items() {
    let (train, valid) = split_train_valid(&dataset(100, 0), 0.1, 3).unwrap();
    assert_eq!((train.len(), valid.len()), (90, 10));
    assert_eq!((valid.count(Label::Simple), valid.count(Label::Complex)), (5, 5));
}

#[test]
fn ten_pairs_put_one_pair_in_valid() {
    let (train, valid) = split_train_valid(&dataset(0, 10), 0.1, 3).unwrap();
    assert_eq!((train.len(), valid.len()), (18, 2));
    assert_eq!(valid.items[0].pair_id, valid.items[1].pair_id);
}

#[test]
fn too_small_to_stratify() {
    assert!(split_train_valid(&dataset(8, 0), 0.1, 0).is_err());
    assert!(split_train_valid(&dataset(10, 0), 0.04, 0).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn folds_partition_and_keep_pairs(singles in 0usize..60, pairs in 5usize..60, seed in any::<u64>()) {
        let ds = dataset(singles, pairs);
        let (train, valid) = split_train_valid(&ds, 0.1, seed).unwrap();
        let ids = |d: &LabeledDataset| d.items.iter().map(|i| i.doc_id.clone()).collect::<HashSet<_>>();
        let (t, v) = (ids(&train), ids(&valid));
        prop_assert!(t.is_disjoint(&v));
        prop_assert_eq!(t.len() + v.len(), ds.len());
        let mut fold_of: BTreeMap<&str, Vec<bool>> = BTreeMap::new();
        for item in &ds.items {
            if let Some(p) = &item.pair_id {
                fold_of.entry(p).or_default().push(v.contains(&item.doc_id));
            }
        }
        for folds in fold_of.values() {
            prop_assert!(folds.iter().all(|f| *f == folds[0]));
        }
        let again = split_train_valid(&ds, 0.1, seed).unwrap();
        prop_assert_eq!(again.1, valid);
    }
}

#[test]
fn hand_counted_stats() {
    // words / sentences per text: 3/1, 7/2, 4/1, 2/1, 5/1.
    let texts = [
        "Le chat dort.",
        "Il pleut. Nous restons à la maison.",
        "Marie mange une pomme.",
        "Viens ici !",
        "Le train part à midi.",
    ];
    let docs: Vec<_> = texts.iter().map(|t| segment_plain_text(t).unwrap()).collect();
    let stats = corpus_stats(&docs).unwrap();
    assert_eq!(stats.n_texts, 5);
    assert_eq!(stats.mean_words_per_text, 21.0 / 5.0);
    assert_eq!(stats.mean_words_per_sentence, 21.0 / 6.0);

    let mut shuffled = docs.clone();
    shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(1));
    shuffled.reverse();
    assert_eq!(corpus_stats(&shuffled).unwrap(), stats);
}

#[test]
fn built_dataset_pairs_simple_and_complex_files() {
    let dir = tempfile::tempdir().unwrap();
    let docs = generate_corpus(&SynthConfig { docs_per_class: 6, seed: 2, ..Default::default() });
    write_corpus(dir.path(), &docs).unwrap();
    let built = build_dataset(&dir.path().join("simple"), &dir.path().join("complex"), true, &Lexicons::builtin()).unwrap();
    let ds = built.dataset;
    ds.validate().unwrap();
    assert_eq!((ds.count(Label::Simple), ds.count(Label::Complex)), (6, 6));
    for item in &ds.items {
        let pair = item.pair_id.as_deref().unwrap();
        assert_eq!(item.doc_id, format!("{}/{pair}", item.label.as_str()));
    }
}
