use std::collections::{BTreeMap, HashSet};
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use clarte::baselines::{compute_counts, Baseline};
use clarte::corpus::{build_dataset, split_train_valid};
use clarte::evaluation::{
    bws_scores, correlation_report, generate_bws_design, icc2, rating_matrix, read_jsonl, spearman,
    split_half_reliability, BwsDesign, BwsResponse, RatingResponse,
};
use clarte::indicators::{extract_features, tsv_header};
use clarte::ingest::{read_conllu_file, segment_plain_text};
use clarte::lexicons::{ConnectivesLexicon, GradedLexicon};
use clarte::models::{
    comprehension_score, load_model, save_model, train, validation_accuracy, ForestParams, Hyperparameters,
    MlpParams, ModelKind,
};
use clarte::synth::{generate_corpus, write_corpus, SynthConfig};
use clarte::{Document, LabeledDataset, Lexicons, ScoringModel};
use serde_json::json;

use crate::args::*;
use crate::manifest::Tracker;
use crate::CliError;

/// Where a command's primary output went, for placing the manifest.
pub enum Primary {
    Stdout,
    File(PathBuf),
    Dir(PathBuf),
}

pub struct Ctx {
    pub seed: u64,
    pub quiet: bool,
    pub tracker: Tracker,
}

impl Ctx {
    fn note(&self, msg: impl std::fmt::Display) {
        if !self.quiet {
            eprintln!("{msg}");
        }
    }

    fn read(&mut self, path: &Path) -> Result<Vec<u8>, CliError> {
        let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
        self.tracker.input(path)?;
        Ok(bytes)
    }

    /// Writes to `out`, or stdout when `None`.
    fn emit(&mut self, out: Option<&Path>, bytes: &[u8]) -> Result<Primary, CliError> {
        match out {
            Some(path) => {
                self.write(path, bytes)?;
                Ok(Primary::File(path.to_path_buf()))
            }
            None => {
                let mut stdout = std::io::stdout().lock();
                stdout.write_all(bytes).and_then(|_| stdout.flush()).map_err(|e| CliError::Internal(e.to_string()))?;
                Ok(Primary::Stdout)
            }
        }
    }

    fn write(&mut self, path: &Path, bytes: &[u8]) -> Result<(), CliError> {
        std::fs::write(path, bytes).map_err(|e| CliError::io(path, e))?;
        self.tracker.output(path)
    }
}

fn input<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Input(e.to_string())
}

/// Every file under `dir`, recursively, in sorted order.
pub fn files_under(dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    let mut out = Vec::new();
    let mut entries: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| CliError::io(dir, e))?
        .map(|e| e.map(|e| e.path()))
        .collect::<Result<_, _>>()
        .map_err(|e| CliError::io(dir, e))?;
    entries.sort();
    for path in entries {
        if path.is_dir() {
            out.extend(files_under(&path)?);
        } else {
            out.push(path);
        }
    }
    Ok(out)
}

fn has_ext(path: &Path, ext: &str) -> bool {
    path.extension().is_some_and(|e| e == ext)
}

fn read_documents(ctx: &mut Ctx, inputs: &[PathBuf]) -> Result<Vec<Document>, CliError> {
    let mut files = Vec::new();
    for p in inputs {
        if p.is_dir() {
            files.extend(files_under(p)?.into_iter().filter(|f| has_ext(f, "conllu") || has_ext(f, "txt")));
        } else {
            files.push(p.clone());
        }
    }
    let mut docs = Vec::new();
    for f in &files {
        if has_ext(f, "txt") {
            let text = String::from_utf8(ctx.read(f)?).map_err(|_| CliError::Input(format!("{}: not UTF-8", f.display())))?;
            let mut doc = segment_plain_text(&text).map_err(|e| CliError::Input(format!("{}: {e}", f.display())))?;
            doc.id = f.file_stem().map_or_else(String::new, |s| s.to_string_lossy().into_owned());
            docs.push(doc);
        } else {
            ctx.tracker.input(f)?;
            docs.extend(read_conllu_file(f).map_err(|e| CliError::Input(format!("{}: {e}", f.display())))?);
        }
    }
    if docs.is_empty() {
        return Err(CliError::Input("no documents found in the inputs".into()));
    }
    let mut seen = HashSet::new();
    if let Some(dup) = docs.iter().find(|d| !seen.insert(d.id.as_str())) {
        return Err(CliError::Input(format!("duplicate document id {:?}", dup.id)));
    }
    Ok(docs)
}

fn lexicons(ctx: &mut Ctx, args: &LexiconArgs) -> Result<Lexicons, CliError> {
    let graded = if args.graded.is_empty() {
        vec![GradedLexicon::builtin()]
    } else {
        args.graded
            .iter()
            .map(|p| {
                ctx.tracker.input(p)?;
                GradedLexicon::load(p).map_err(input)
            })
            .collect::<Result<_, _>>()?
    };
    let connectives = match &args.connectives {
        Some(p) => {
            ctx.tracker.input(p)?;
            ConnectivesLexicon::load(p).map_err(input)?
        }
        None => ConnectivesLexicon::builtin(),
    };
    Lexicons::new(graded, connectives).map_err(input)
}

fn load_dataset(ctx: &mut Ctx, path: &Path) -> Result<LabeledDataset, CliError> {
    LabeledDataset::read_tsv(&ctx.read(path)?[..]).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn load_scoring_model(ctx: &mut Ctx, path: &Path) -> Result<ScoringModel, CliError> {
    ctx.tracker.input(path)?;
    load_model(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn load_design(ctx: &mut Ctx, path: &Path) -> Result<BwsDesign, CliError> {
    BwsDesign::read_jsonl(&ctx.read(path)?[..]).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn load_jsonl<T: serde::de::DeserializeOwned>(ctx: &mut Ctx, path: &Path) -> Result<Vec<T>, CliError> {
    read_jsonl(&ctx.read(path)?[..]).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

/// Reads an `id<TAB>...<TAB>value` file with a header row.
fn load_scores(ctx: &mut Ctx, path: &Path, column: Option<&str>) -> Result<BTreeMap<String, f64>, CliError> {
    let text = String::from_utf8(ctx.read(path)?).map_err(|_| CliError::Input(format!("{}: not UTF-8", path.display())))?;
    let bad = |line: usize, msg: String| CliError::Input(format!("{}:{line}: {msg}", path.display()));
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines.next().ok_or_else(|| bad(1, "empty file".into()))?;
    let header: Vec<&str> = header.split('\t').collect();
    let col = match column {
        Some(name) => header.iter().position(|h| *h == name).ok_or_else(|| bad(1, format!("no column {name:?}")))?,
        None => header.len() - 1,
    };
    if col == 0 {
        return Err(bad(1, "need an id column and a value column".into()));
    }
    let mut out = BTreeMap::new();
    for (i, line) in lines {
        let cells: Vec<&str> = line.split('\t').collect();
        let cell = cells.get(col).ok_or_else(|| bad(i + 1, format!("expected {} columns", header.len())))?;
        let value: f64 = cell.trim().parse().map_err(|_| bad(i + 1, format!("bad number {cell:?}")))?;
        if out.insert(cells[0].to_string(), value).is_some() {
            return Err(bad(i + 1, format!("duplicate id {:?}", cells[0])));
        }
    }
    Ok(out)
}

pub fn features(ctx: &mut Ctx, a: &FeaturesArgs) -> Result<Primary, CliError> {
    let lex = lexicons(ctx, &a.lexicons)?;
    let docs = read_documents(ctx, &a.docs.inputs)?;
    let mut out = tsv_header();
    out.push('\n');
    for doc in &docs {
        let x = extract_features(doc, &lex);
        for w in &x.warnings {
            ctx.note(format_args!("{}: {w}", doc.id));
        }
        let _ = writeln!(out, "{}\t{}", doc.id, x.features.to_tsv_fields());
    }
    ctx.emit(a.docs.out.as_deref(), out.as_bytes())
}

pub fn baselines(ctx: &mut Ctx, a: &DocsArgs) -> Result<Primary, CliError> {
    let docs = read_documents(ctx, &a.inputs)?;
    let mut out = String::from("id");
    for b in Baseline::ALL {
        let _ = write!(out, "\t{}", b.name());
    }
    out.push('\n');
    for doc in &docs {
        let counts = compute_counts(doc).map_err(|e| CliError::Input(format!("{}: {e}", doc.id)))?;
        out.push_str(&doc.id);
        for b in Baseline::ALL {
            let _ = write!(out, "\t{}", b.apply(&counts));
        }
        out.push('\n');
    }
    ctx.emit(a.out.as_deref(), out.as_bytes())
}

pub fn build_corpus(ctx: &mut Ctx, a: &BuildCorpusArgs) -> Result<Primary, CliError> {
    let lex = lexicons(ctx, &a.lexicons)?;
    for dir in [&a.simple, &a.complex] {
        for f in files_under(dir)?.into_iter().filter(|f| has_ext(f, "conllu")) {
            ctx.tracker.input(&f)?;
        }
    }
    let built = build_dataset(&a.simple, &a.complex, a.aligned, &lex).map_err(input)?;
    for (id, w) in &built.warnings {
        ctx.note(format_args!("{id}: {w}"));
    }
    let mut buf = Vec::new();
    built.dataset.write_tsv(&mut buf).map_err(|e| CliError::Internal(e.to_string()))?;
    ctx.write(&a.out, &buf)?;
    ctx.note(format_args!("{} documents -> {}", built.dataset.len(), a.out.display()));
    Ok(Primary::File(a.out.clone()))
}

pub fn synth_corpus(ctx: &mut Ctx, a: &SynthArgs) -> Result<Primary, CliError> {
    if a.docs_per_class == 0 || !(a.injection_rate >= 0.0) || !(0.0..=1.0).contains(&a.style_spread) {
        return Err(CliError::Input("need docs-per-class > 0, injection-rate >= 0, style-spread in [0, 1]".into()));
    }
    let config = SynthConfig {
        docs_per_class: a.docs_per_class,
        seed: ctx.seed,
        injection_rate: a.injection_rate,
        style_spread: a.style_spread,
    };
    write_corpus(&a.out, &generate_corpus(&config)).map_err(|e| CliError::io(&a.out, e))?;
    ctx.tracker.output_tree(&a.out)?;
    Ok(Primary::Dir(a.out.clone()))
}

pub fn split(ctx: &mut Ctx, a: &SplitArgs) -> Result<Primary, CliError> {
    let ds = load_dataset(ctx, &a.dataset)?;
    let (train_set, valid) = split_train_valid(&ds, a.valid_fraction, ctx.seed).map_err(input)?;
    for (set, path) in [(&train_set, &a.train_out), (&valid, &a.valid_out)] {
        let mut buf = Vec::new();
        set.write_tsv(&mut buf).map_err(|e| CliError::Internal(e.to_string()))?;
        ctx.write(path, &buf)?;
    }
    ctx.note(format_args!("train {} / valid {}", train_set.len(), valid.len()));
    Ok(Primary::File(a.train_out.clone()))
}

fn hyperparameters(a: &TrainArgs) -> Result<Hyperparameters, CliError> {
    let kind = match a.model {
        ModelArg::Ridge => ModelKind::Ridge,
        ModelArg::Svc => ModelKind::LinearSvc,
        ModelArg::Forest => ModelKind::RandomForest,
        ModelArg::Mlp => ModelKind::Mlp,
    };
    let allowed: &[&str] = match kind {
        ModelKind::Ridge => &["lambda"],
        ModelKind::LinearSvc => &["c", "epochs"],
        ModelKind::RandomForest => &["n-trees", "max-depth", "max-features", "no-bootstrap"],
        ModelKind::Mlp => &["hidden", "lr", "epochs", "patience"],
    };
    for (set, name) in [
        (a.lambda.is_some(), "lambda"),
        (a.c.is_some(), "c"),
        (a.epochs.is_some(), "epochs"),
        (a.n_trees.is_some(), "n-trees"),
        (a.max_depth.is_some(), "max-depth"),
        (a.max_features.is_some(), "max-features"),
        (a.no_bootstrap, "no-bootstrap"),
        (a.hidden.is_some(), "hidden"),
        (a.lr.is_some(), "lr"),
        (a.patience.is_some(), "patience"),
    ] {
        if set && !allowed.contains(&name) {
            return Err(CliError::Input(format!("--{name} does not apply to {kind} models")));
        }
    }
    Ok(match Hyperparameters::default_for(kind) {
        Hyperparameters::Ridge { lambda } => Hyperparameters::Ridge { lambda: a.lambda.unwrap_or(lambda) },
        Hyperparameters::LinearSvc { c, epochs } => {
            Hyperparameters::LinearSvc { c: a.c.unwrap_or(c), epochs: a.epochs.unwrap_or(epochs) }
        }
        Hyperparameters::RandomForest(d) => Hyperparameters::RandomForest(ForestParams {
            n_trees: a.n_trees.unwrap_or(d.n_trees),
            max_depth: a.max_depth.or(d.max_depth),
            max_features: a.max_features.or(d.max_features),
            bootstrap: d.bootstrap && !a.no_bootstrap,
        }),
        Hyperparameters::Mlp(d) => Hyperparameters::Mlp(MlpParams {
            hidden: a.hidden.unwrap_or(d.hidden),
            lr: a.lr.unwrap_or(d.lr),
            epochs: a.epochs.unwrap_or(d.epochs),
            patience: a.patience.unwrap_or(d.patience),
        }),
    })
}

pub fn train_model(ctx: &mut Ctx, a: &TrainArgs) -> Result<Primary, CliError> {
    let hp = hyperparameters(a)?;
    let train_set = load_dataset(ctx, &a.train)?;
    let valid = a.valid.as_ref().map(|p| load_dataset(ctx, p)).transpose()?;
    let model = train(&hp, &train_set, valid.as_ref(), ctx.seed).map_err(input)?;
    if !model.training.constant_features.is_empty() {
        ctx.note(format_args!("constant features: {}", model.training.constant_features.join(", ")));
    }
    save_model(&model, &a.out).map_err(|e| CliError::Input(format!("{}: {e}", a.out.display())))?;
    ctx.tracker.output(&a.out)?;
    let accuracy = valid.as_ref().map(|v| validation_accuracy(&model, v)).transpose().map_err(input)?;
    let summary = json!({ "model": model.kind.name(), "n_train": train_set.len(), "valid_accuracy": accuracy });
    println!("{summary}");
    Ok(Primary::File(a.out.clone()))
}

pub fn validate(ctx: &mut Ctx, a: &ValidateArgs) -> Result<Primary, CliError> {
    let model = load_scoring_model(ctx, &a.model)?;
    let ds = load_dataset(ctx, &a.dataset)?;
    let acc = validation_accuracy(&model, &ds).map_err(input)?;
    let out = json!({ "model": model.kind.name(), "n": ds.len(), "accuracy": acc });
    ctx.emit(None, format!("{out}\n").as_bytes())
}

pub fn score(ctx: &mut Ctx, a: &ScoreArgs) -> Result<Primary, CliError> {
    let lex = lexicons(ctx, &a.lexicons)?;
    let model = load_scoring_model(ctx, &a.model)?;
    let docs = read_documents(ctx, &a.docs.inputs)?;
    let mut out = String::new();
    for doc in &docs {
        let s = comprehension_score(&model, doc, &lex).map_err(|e| CliError::Input(format!("{}: {e}", doc.id)))?;
        for w in &s.warnings {
            ctx.note(format_args!("{}: {w}", doc.id));
        }
        let _ = writeln!(out, "{}\t{}", s.doc_id, s.score);
    }
    ctx.emit(a.docs.out.as_deref(), out.as_bytes())
}

pub fn bws_design(ctx: &mut Ctx, a: &BwsDesignArgs) -> Result<Primary, CliError> {
    let text = String::from_utf8(ctx.read(&a.texts)?).map_err(|_| CliError::Input("text id file is not UTF-8".into()))?;
    let ids: Vec<String> = text.lines().map(str::trim).filter(|l| !l.is_empty()).map(String::from).collect();
    let design = generate_bws_design(&ids, a.e, a.k, a.a, ctx.seed).map_err(input)?;
    let mut buf = Vec::new();
    design.write_jsonl(&mut buf).map_err(|e| CliError::Internal(e.to_string()))?;
    ctx.emit(a.out.as_deref(), &buf)
}

pub fn bws_score(ctx: &mut Ctx, a: &BwsScoreArgs) -> Result<Primary, CliError> {
    let design = load_design(ctx, &a.design)?;
    let responses: Vec<BwsResponse> = load_jsonl(ctx, &a.responses)?;
    let scores = bws_scores(&design, &responses).map_err(input)?;
    let mut out = String::from("text_id\tscore\n");
    for (id, s) in &scores {
        let _ = writeln!(out, "{id}\t{s}");
    }
    ctx.emit(a.out.as_deref(), out.as_bytes())
}

pub fn shr(ctx: &mut Ctx, a: &ShrArgs) -> Result<Primary, CliError> {
    let design = load_design(ctx, &a.design)?;
    let responses: Vec<BwsResponse> = load_jsonl(ctx, &a.responses)?;
    let o = split_half_reliability(&design, &responses, a.iterations, ctx.seed).map_err(input)?;
    for w in &o.warnings {
        ctx.note(w);
    }
    let out = json!({ "shr": o.shr, "iterations": o.iterations, "used": o.used, "warnings": o.warnings });
    ctx.emit(None, format!("{out}\n").as_bytes())
}

pub fn icc(ctx: &mut Ctx, a: &IccArgs) -> Result<Primary, CliError> {
    let ratings: Vec<RatingResponse> = load_jsonl(ctx, &a.ratings)?;
    let m = rating_matrix(&ratings).map_err(input)?;
    let v = icc2(&m.values).map_err(input)?;
    let out = json!({ "icc": v, "icc_x100": 100.0 * v, "targets": m.targets.len(), "raters": m.raters.len() });
    ctx.emit(None, format!("{out}\n").as_bytes())
}

pub fn spearman_cmd(ctx: &mut Ctx, a: &SpearmanArgs) -> Result<Primary, CliError> {
    let x = load_scores(ctx, &a.x, a.column.as_deref())?;
    let y = load_scores(ctx, &a.y, a.column.as_deref())?;
    let (xs, ys): (Vec<f64>, Vec<f64>) = x.iter().filter_map(|(id, v)| y.get(id).map(|w| (*v, *w))).unzip();
    let rho = spearman(&xs, &ys).map_err(input)?;
    let out = json!({ "rho": rho, "rho_x100": 100.0 * rho, "n": xs.len() });
    ctx.emit(None, format!("{out}\n").as_bytes())
}

pub fn report(ctx: &mut Ctx, a: &ReportArgs) -> Result<Primary, CliError> {
    let lex = lexicons(ctx, &a.lexicons)?;
    let mut models = Vec::new();
    for spec in &a.models {
        let (name, path) = match spec.split_once('=') {
            Some((n, p)) => (n.to_string(), PathBuf::from(p)),
            None => {
                let p = PathBuf::from(spec);
                (p.file_stem().map_or_else(|| spec.clone(), |s| s.to_string_lossy().into_owned()), p)
            }
        };
        models.push((name, load_scoring_model(ctx, &path)?));
    }
    let baselines: &[Baseline] = if a.no_baselines { &[] } else { &Baseline::ALL };
    if models.is_empty() && baselines.is_empty() {
        return Err(CliError::Input("nothing to report: give --model or keep the baselines".into()));
    }
    let human = load_scores(ctx, &a.human, a.human_column.as_deref())?;
    let docs = read_documents(ctx, &a.docs.inputs)?;
    let refs: Vec<(String, &ScoringModel)> = models.iter().map(|(n, m)| (n.clone(), m)).collect();
    let mut report = correlation_report(&refs, baselines, &docs, &human, &lex).map_err(input)?;
    if let Some(path) = &a.valid {
        let valid = load_dataset(ctx, path)?;
        for (name, m) in &models {
            let acc = validation_accuracy(m, &valid).map_err(input)?;
            if let Some(row) = report.rows.iter_mut().find(|r| &r.scorer == name) {
                row.valid_accuracy = Some(100.0 * acc);
            }
        }
    }
    let text = match a.format {
        ReportFormat::Table => report.to_table(),
        ReportFormat::Tsv => report.to_tsv(),
    };
    ctx.emit(a.docs.out.as_deref(), text.as_bytes())
}

pub fn serve(ctx: &mut Ctx, a: &ServeArgs) -> Result<Primary, CliError> {
    use clarte_annotation::{http, Store, StoreOptions};
    let options = StoreOptions { lease_ttl: Duration::from_secs(60 * a.lease_minutes), sync: a.sync };
    let store = Store::open(&a.data_dir, options).map_err(input)?;
    let runtime = tokio::runtime::Runtime::new().map_err(|e| CliError::Internal(e.to_string()))?;
    runtime.block_on(async {
        let listener = tokio::net::TcpListener::bind((a.host.as_str(), a.port))
            .await
            .map_err(|e| CliError::Input(format!("cannot bind {}:{}: {e}", a.host, a.port)))?;
        ctx.note(format_args!("listening on http://{}", listener.local_addr().map_err(input)?));
        http::serve(listener, http::router(Arc::new(store), a.static_dir.clone()))
            .await
            .map_err(|e| CliError::Internal(e.to_string()))
    })?;
    Ok(Primary::Stdout)
}
