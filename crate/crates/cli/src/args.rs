use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Debug, Parser, Serialize)]
#[command(name = "clarte", version, about = "Reference-less comprehension scoring for French text")]
pub struct Cli {
    /// Seed for every random choice; recorded in the run manifest.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Config file of `key = value` lines; `[command]` sections scope keys to one subcommand. Command-line flags win.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Suppress diagnostics on stderr.
    #[arg(long, global = true)]
    pub quiet: bool,
    /// Where to write the run manifest. Defaults to `<out>.manifest.json` next to a file output, `<out>/manifest.json` for a directory, else stderr.
    #[arg(long, global = true, value_name = "PATH")]
    pub manifest: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum Command {
    /// Extract the 28 linguistic indicators of each document as TSV.
    Features(FeaturesArgs),
    /// Compute FKGL, SMOG and Gunning fog for each document as TSV.
    Baselines(DocsArgs),
    /// Featurize a simple and a complex directory of CoNLL-U files into a labeled dataset.
    BuildCorpus(BuildCorpusArgs),
    /// Generate a synthetic labeled corpus with planted difficulty.
    SynthCorpus(SynthArgs),
    /// Split a labeled dataset into train and validation folds.
    Split(SplitArgs),
    /// Train a classifier on a labeled dataset.
    Train(TrainArgs),
    /// Report the accuracy of a model on a labeled dataset.
    Validate(ValidateArgs),
    /// Score documents with a trained model (0 = hard, 100 = easy).
    Score(ScoreArgs),
    /// Generate a best-worst scaling design.
    BwsDesign(BwsDesignArgs),
    /// Compute best-worst scores from a design and its responses.
    BwsScore(BwsScoreArgs),
    /// Split-half reliability of best-worst annotations.
    Shr(ShrArgs),
    /// Intraclass correlation ICC(2,1) of direct ratings.
    Icc(IccArgs),
    /// Spearman correlation between two score files.
    Spearman(SpearmanArgs),
    /// Correlate models and baselines with human scores.
    Report(ReportArgs),
    /// Run the annotation HTTP service.
    Serve(ServeArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct LexiconArgs {
    /// Graded-vocabulary TSV (lemma, level); repeat to average several. Defaults to the built-in list.
    #[arg(long = "graded-lexicon", value_name = "PATH")]
    pub graded: Vec<PathBuf>,
    /// Connectives TSV (connective, category, complexity). Defaults to the built-in list.
    #[arg(long = "connectives-lexicon", value_name = "PATH")]
    pub connectives: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct DocsArgs {
    /// Input documents: `.conllu` files (with optional `.trees` sidecars), `.txt` files, or directories of them.
    #[arg(long = "in", value_name = "PATH", required = true)]
    pub inputs: Vec<PathBuf>,
    /// Output file; stdout when absent.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct FeaturesArgs {
    #[command(flatten)]
    pub docs: DocsArgs,
    #[command(flatten)]
    pub lexicons: LexiconArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct BuildCorpusArgs {
    /// Directory of simple-class CoNLL-U files.
    #[arg(long, value_name = "DIR")]
    pub simple: PathBuf,
    /// Directory of complex-class CoNLL-U files.
    #[arg(long, value_name = "DIR")]
    pub complex: PathBuf,
    /// Files with the same name in both directories are aligned versions of one text.
    #[arg(long)]
    pub aligned: bool,
    /// Output dataset TSV.
    #[arg(long, value_name = "PATH")]
    pub out: PathBuf,
    #[command(flatten)]
    pub lexicons: LexiconArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct SynthArgs {
    /// Output directory; receives `simple/`, `complex/` and `planted.tsv`.
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
    /// Documents per class.
    #[arg(long, default_value_t = 500)]
    pub docs_per_class: usize,
    /// Multiplier on difficulty-driven construction rates.
    #[arg(long, default_value_t = 1.0)]
    pub injection_rate: f64,
    /// Half-width of per-document style offsets around the planted difficulty.
    #[arg(long, default_value_t = 0.25)]
    pub style_spread: f64,
}

#[derive(Debug, Args, Serialize)]
pub struct SplitArgs {
    /// Labeled dataset TSV.
    #[arg(long, value_name = "PATH")]
    pub dataset: PathBuf,
    /// Fraction of each label held out for validation.
    #[arg(long, default_value_t = 0.1)]
    pub valid_fraction: f64,
    /// Training fold output.
    #[arg(long, value_name = "PATH")]
    pub train_out: PathBuf,
    /// Validation fold output.
    #[arg(long, value_name = "PATH")]
    pub valid_out: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelArg {
    Ridge,
    Svc,
    Forest,
    Mlp,
}

#[derive(Debug, Args, Serialize)]
pub struct TrainArgs {
    /// Classifier family.
    #[arg(long, value_enum)]
    pub model: ModelArg,
    /// Training dataset TSV.
    #[arg(long, value_name = "PATH")]
    pub train: PathBuf,
    /// Validation dataset TSV, used for MLP early stopping and reported accuracy.
    #[arg(long, value_name = "PATH")]
    pub valid: Option<PathBuf>,
    /// Output model file.
    #[arg(long, value_name = "PATH")]
    pub out: PathBuf,
    /// Ridge penalty.
    #[arg(long)]
    pub lambda: Option<f64>,
    /// SVC inverse regularization strength.
    #[arg(long)]
    pub c: Option<f64>,
    /// SVC or MLP epochs.
    #[arg(long)]
    pub epochs: Option<usize>,
    /// Forest size.
    #[arg(long)]
    pub n_trees: Option<usize>,
    /// Maximum tree depth; unlimited when absent.
    #[arg(long)]
    pub max_depth: Option<usize>,
    /// Features tried per split; ceil(sqrt(28)) when absent.
    #[arg(long)]
    pub max_features: Option<usize>,
    /// Grow every tree on the full training set instead of a bootstrap sample.
    #[arg(long)]
    pub no_bootstrap: bool,
    /// MLP hidden units.
    #[arg(long)]
    pub hidden: Option<usize>,
    /// MLP learning rate.
    #[arg(long)]
    pub lr: Option<f64>,
    /// MLP early-stopping patience in epochs.
    #[arg(long)]
    pub patience: Option<usize>,
}

#[derive(Debug, Args, Serialize)]
pub struct ValidateArgs {
    /// Model file.
    #[arg(long, value_name = "PATH")]
    pub model: PathBuf,
    /// Labeled dataset TSV.
    #[arg(long, value_name = "PATH")]
    pub dataset: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct ScoreArgs {
    /// Model file.
    #[arg(long, value_name = "PATH")]
    pub model: PathBuf,
    #[command(flatten)]
    pub docs: DocsArgs,
    #[command(flatten)]
    pub lexicons: LexiconArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct BwsDesignArgs {
    /// Text ids, one per line.
    #[arg(long, value_name = "PATH")]
    pub texts: PathBuf,
    /// Tuples each text appears in.
    #[arg(long)]
    pub e: usize,
    /// Texts per tuple.
    #[arg(long, default_value_t = 3)]
    pub k: usize,
    /// Annotators per tuple.
    #[arg(long, default_value_t = 3)]
    pub a: usize,
    /// Output JSONL; stdout when absent.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct BwsScoreArgs {
    /// Design JSONL.
    #[arg(long, value_name = "PATH")]
    pub design: PathBuf,
    /// Responses JSONL.
    #[arg(long, value_name = "PATH")]
    pub responses: PathBuf,
    /// Output TSV; stdout when absent.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct ShrArgs {
    /// Design JSONL.
    #[arg(long, value_name = "PATH")]
    pub design: PathBuf,
    /// Responses JSONL.
    #[arg(long, value_name = "PATH")]
    pub responses: PathBuf,
    /// Random half splits to average.
    #[arg(long, default_value_t = 1000)]
    pub iterations: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct IccArgs {
    /// Rating responses JSONL (text_id, rater_id, rating, timestamp).
    #[arg(long, value_name = "PATH")]
    pub ratings: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct SpearmanArgs {
    /// First score TSV: header, then id and value columns.
    #[arg(long, value_name = "PATH")]
    pub x: PathBuf,
    /// Second score TSV.
    #[arg(long, value_name = "PATH")]
    pub y: PathBuf,
    /// Value column name in both files; the last column when absent.
    #[arg(long)]
    pub column: Option<String>,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportFormat {
    Table,
    Tsv,
}

#[derive(Debug, Args, Serialize)]
pub struct ReportArgs {
    /// Model to evaluate, as `name=path` or a path (named after the file stem); repeatable.
    #[arg(long = "model", value_name = "[NAME=]PATH")]
    pub models: Vec<String>,
    /// Leave the readability baselines out.
    #[arg(long)]
    pub no_baselines: bool,
    /// Human (or planted) scores TSV: header, then id and value columns.
    #[arg(long, value_name = "PATH")]
    pub human: PathBuf,
    /// Value column of the human file; the last column when absent.
    #[arg(long)]
    pub human_column: Option<String>,
    /// Labeled dataset on which to report each model's accuracy.
    #[arg(long, value_name = "PATH")]
    pub valid: Option<PathBuf>,
    /// Output layout.
    #[arg(long, value_enum, default_value_t = ReportFormat::Tsv)]
    pub format: ReportFormat,
    #[command(flatten)]
    pub docs: DocsArgs,
    #[command(flatten)]
    pub lexicons: LexiconArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct ServeArgs {
    /// Port to listen on.
    #[arg(long, default_value_t = 8080)]
    pub port: u16,
    /// Address to bind.
    #[arg(long, default_value = "127.0.0.1")]
    pub host: String,
    /// Directory holding campaigns and responses.
    #[arg(long, value_name = "DIR")]
    pub data_dir: PathBuf,
    /// Directory of static UI files served outside `/api`.
    #[arg(long, value_name = "DIR")]
    pub static_dir: Option<PathBuf>,
    /// Minutes a served task stays reserved for its annotator.
    #[arg(long, default_value_t = 30)]
    pub lease_minutes: u64,
    /// fsync every accepted response.
    #[arg(long)]
    pub sync: bool,
}
