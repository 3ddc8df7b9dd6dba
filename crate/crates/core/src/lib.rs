//! Reference-less comprehension scoring for French text.
//!
//! The crate is organised as a pipeline:
//!
//! * [`ingest`] reads CoNLL-U dependency parses, bracketed constituency trees
//!   and plain text into [`Document`]s.
//! * [`lexicons`] loads the graded word-difficulty and connectives lexicons.
//! * [`indicators`] turns a document into a 28-value [`FeatureVector`].
//! * [`baselines`] computes FKGL, SMOG and Gunning Fog.
//! * [`corpus`] assembles labeled simple/complex datasets and splits them;
//!   [`synth`] generates a self-contained synthetic corpus.
//! * [`models`] trains ridge, linear SVC, random forest and MLP classifiers
//!   whose probability-of-simple, times 100, is the comprehension score.
//! * [`evaluation`] holds the human-annotation statistics: best-worst scaling
//!   designs and scores, split-half reliability, ICC(2,1) and Spearman.

pub mod baselines;
pub mod corpus;
pub mod evaluation;
pub mod indicators;
pub mod ingest;
pub mod lexicons;
pub mod models;
pub mod synth;

mod rng;

pub use corpus::{Label, LabeledDataset, LabeledItem};
pub use indicators::{FeatureVector, N_FEATURES};
pub use ingest::{ConstituencyNode, Document, Head, Sentence, Token, Upos};
pub use lexicons::{ConnectivesLexicon, GradedLexicon, Lexicons};
pub use models::{ModelKind, ScoringModel};
