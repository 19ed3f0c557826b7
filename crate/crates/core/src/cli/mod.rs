//! The `pendency` command line. Subcommands compose through files in an
//! output directory; each run also writes a manifest of its inputs and
//! outputs.

mod manifest;

use std::ffi::OsString;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

pub use manifest::{sha256_file, FileDigest, Manifest};

use crate::court_data::{
    clean, generate_synthetic, impute_missing, join_metadata, parse_case_csv, record, write_case_csv, AuxTable,
    CaseRecord, RowError, SyntheticSpec,
};
use crate::error::{Error, Result};
use crate::eval::{
    evaluate, importance_svg, write_accuracy_csv, write_comparative_csv, write_confusion_csv, EvaluationReport,
};
use crate::features::{
    build_dataset, default_feature_columns, Dataset, DatasetConfig, EncoderChoice, SvdOptions, TargetKind,
};
use crate::forest::{
    ranked_importance, tree_shap, ForestParams, GbdtParams, MaxFeatures, Model, ModelKind, ModelParams, TreeParams,
};
use crate::search::{run_search, write_leaderboard, Budget, Objective, SearchConfig, SearchSpace};

pub const DATA_DIR_ENV: &str = "PENDENCY_DATA_DIR";

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "pendency", version, about = "Court-case pendency prediction pipeline")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Directory for outputs [default: $PENDENCY_DATA_DIR or .]
    #[arg(long, global = true)]
    output_dir: Option<PathBuf>,

    #[arg(long, global = true, default_value_t = 42)]
    seed: u64,

    /// Worker threads; results do not depend on this
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic case file with a planted signal
    Synth(SynthArgs),
    /// Parse, join, clean and impute a case file
    Ingest(IngestArgs),
    /// Label, split and encode a cleaned case file
    Featurize(FeaturizeArgs),
    /// Train a model on the training part of a dataset
    Train(TrainArgs),
    /// Score a model on one part of a dataset
    Evaluate(EvaluateArgs),
    /// Feature importance and per-row attributions
    Explain(ExplainArgs),
    /// Random search over models and encoders
    Search(SearchArgs),
    /// Render report tables from evaluation JSON files
    Report(ReportArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
enum TargetArg {
    Multi5,
    Binary3y,
}

impl From<TargetArg> for TargetKind {
    fn from(t: TargetArg) -> Self {
        match t {
            TargetArg::Multi5 => TargetKind::Multi5,
            TargetArg::Binary3y => TargetKind::Binary3y,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
enum EncoderArg {
    Label,
    OnehotSvd,
    Hashing,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
enum MaxFeaturesArg {
    All,
    Sqrt,
}

#[derive(Debug, Args, Serialize)]
struct SynthArgs {
    #[arg(long, default_value_t = 5000)]
    rows: usize,
    /// Probability that the planted class is the true class
    #[arg(long, default_value_t = 0.85)]
    signal: f64,
    /// Fraction of cases left undecided
    #[arg(long, default_value_t = 0.05)]
    ongoing: f64,
}

#[derive(Debug, Args, Serialize)]
struct IngestArgs {
    /// Case CSV [default: $PENDENCY_DATA_DIR/cases.csv]
    #[arg(long)]
    input: Option<PathBuf>,
    /// Auxiliary metadata CSV keyed by case_id; may be repeated
    #[arg(long)]
    aux: Vec<PathBuf>,
    /// Drop cases filed or decided before this date
    #[arg(long, default_value = "2010-01-01", value_parser = parse_date)]
    cutoff: NaiveDate,
}

#[derive(Debug, Args, Serialize)]
struct FeaturizeArgs {
    /// Cleaned case CSV [default: $PENDENCY_DATA_DIR/clean.csv]
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = TargetArg::Binary3y)]
    target: TargetArg,
    #[arg(long, value_enum, default_value_t = EncoderArg::Label)]
    encoder: EncoderArg,
    /// SVD components for onehot-svd
    #[arg(long, default_value_t = 200)]
    k: usize,
    /// Buckets for the hashing encoder (power of two)
    #[arg(long, default_value_t = 256)]
    hash_width: usize,
    /// Part fractions; part 0 trains, the last part is held out
    #[arg(long, value_delimiter = ',', default_value = "0.8,0.2")]
    split: Vec<f64>,
    /// Leave undecided cases out instead of labelling them long-pending
    #[arg(long)]
    exclude_ongoing: bool,
    /// Subspace iterations for the SVD
    #[arg(long, default_value_t = 200)]
    svd_iters: usize,
}

#[derive(Debug, Args, Serialize)]
struct ModelArgs {
    #[arg(long, default_value = "rf", value_parser = parse_model)]
    model: ModelKind,
    #[arg(long, default_value_t = 100)]
    n_trees: usize,
    /// Tree depth [default: 10, or 6 for gbdt]
    #[arg(long)]
    max_depth: Option<usize>,
    #[arg(long, default_value_t = 0.3)]
    eta: f64,
    #[arg(long, default_value_t = 1.0)]
    lambda: f64,
    /// Features tried per split for rf
    #[arg(long, value_enum, default_value_t = MaxFeaturesArg::Sqrt)]
    max_features: MaxFeaturesArg,
}

#[derive(Debug, Args, Serialize)]
struct TrainArgs {
    /// Dataset JSON [default: $PENDENCY_DATA_DIR/dataset.json]
    #[arg(long)]
    input: Option<PathBuf>,
    #[command(flatten)]
    model: ModelArgs,
}

#[derive(Debug, Args, Serialize)]
struct EvaluateArgs {
    /// Dataset JSON [default: $PENDENCY_DATA_DIR/dataset.json]
    #[arg(long)]
    input: Option<PathBuf>,
    /// Model JSON [default: $PENDENCY_DATA_DIR/model.json]
    #[arg(long)]
    model_file: Option<PathBuf>,
    /// Part to score [default: the last part]
    #[arg(long)]
    part: Option<usize>,
}

#[derive(Debug, Args, Serialize)]
struct ExplainArgs {
    /// Dataset JSON [default: $PENDENCY_DATA_DIR/dataset.json]
    #[arg(long)]
    input: Option<PathBuf>,
    /// Model JSON [default: $PENDENCY_DATA_DIR/model.json]
    #[arg(long)]
    model_file: Option<PathBuf>,
    /// Held-out rows to attribute
    #[arg(long, default_value_t = 20)]
    rows: usize,
    /// Class whose probability is explained [default: the last class]
    #[arg(long)]
    class: Option<usize>,
}

#[derive(Debug, Args, Serialize)]
struct SearchArgs {
    /// Cleaned case CSV [default: $PENDENCY_DATA_DIR/clean.csv]
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = TargetArg::Binary3y)]
    target: TargetArg,
    #[arg(long, default_value_t = 20)]
    trials: usize,
    /// Wall-clock budget; the search stops at whichever bound hits first
    #[arg(long)]
    time_budget_s: Option<f64>,
    /// Encoders to search over
    #[arg(long, value_enum, value_delimiter = ',', default_value = "label")]
    encoder: Vec<EncoderArg>,
    #[arg(long, default_value_t = 200)]
    k: usize,
    #[arg(long, default_value_t = 256)]
    hash_width: usize,
    #[arg(long)]
    exclude_ongoing: bool,
}

#[derive(Debug, Args, Serialize)]
struct ReportArgs {
    /// Evaluation JSON files; the first one drives the per-class tables
    #[arg(long, value_delimiter = ',')]
    input: Vec<PathBuf>,
}

fn parse_date(s: &str) -> std::result::Result<NaiveDate, String> {
    record::parse_iso_date(s).ok_or_else(|| format!("`{s}` is not a YYYY-MM-DD date"))
}

fn parse_model(s: &str) -> std::result::Result<ModelKind, String> {
    s.parse::<ModelKind>().map_err(|e| e.to_string())
}

fn data_dir() -> Option<PathBuf> {
    std::env::var_os(DATA_DIR_ENV).map(PathBuf::from)
}

/// Explicit path, else `$PENDENCY_DATA_DIR/<default_name>`. A relative path
/// that does not exist is also looked up under the data directory.
fn resolve_input(given: Option<&Path>, default_name: &str) -> Result<PathBuf> {
    let path = match given {
        Some(p) if p.exists() || p.is_absolute() => p.to_path_buf(),
        Some(p) => match data_dir() {
            Some(d) if d.join(p).exists() => d.join(p),
            _ => p.to_path_buf(),
        },
        None => match data_dir() {
            Some(d) => d.join(default_name),
            None => {
                return Err(Error::Usage(format!(
                    "no --input given and {DATA_DIR_ENV} is not set (expected {default_name})"
                )))
            }
        },
    };
    if !path.exists() {
        return Err(Error::Io(std::io::Error::new(
            std::io::ErrorKind::NotFound,
            format!("{} not found", path.display()),
        )));
    }
    Ok(path)
}

fn config_json<T: Serialize>(args: &T) -> Result<serde_json::Value> {
    Ok(serde_json::to_value(args)?)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    Ok(serde_json::from_reader(BufReader::new(File::open(path)?))?)
}

fn create<W>(path: &Path, f: impl FnOnce(BufWriter<File>) -> Result<W>) -> Result<()> {
    f(BufWriter::new(File::create(path)?))?;
    Ok(())
}

fn read_cases(path: &Path) -> Result<(Vec<CaseRecord>, Vec<RowError>)> {
    let schema = [record::CASE_ID, record::DATE_OF_FILING, record::DATE_OF_DECISION];
    let outcome = parse_case_csv(BufReader::new(File::open(path)?), &schema)?;
    Ok((outcome.records, outcome.errors))
}

struct Ctx {
    out: PathBuf,
    seed: u64,
}

#[derive(Serialize)]
struct IngestStats {
    rows_parsed: usize,
    row_errors: usize,
    /// The first few parse errors, for diagnosis.
    first_errors: Vec<RowError>,
    clean: crate::court_data::CleanStats,
}

fn cmd_synth(ctx: &Ctx, a: &SynthArgs) -> Result<()> {
    let mut spec = SyntheticSpec::new(a.rows, ctx.seed);
    spec.signal_strength = a.signal;
    spec.ongoing_fraction = a.ongoing;
    let records = generate_synthetic(&spec)?;
    let path = ctx.out.join("cases.csv");
    create(&path, |w| write_case_csv(&records, w))?;
    Manifest::new("synth", ctx.seed, config_json(&spec)?).write(&ctx.out, &[path])?;
    Ok(())
}

fn cmd_ingest(ctx: &Ctx, a: &IngestArgs) -> Result<()> {
    let input = resolve_input(a.input.as_deref(), "cases.csv")?;
    let mut manifest = Manifest::new("ingest", ctx.seed, config_json(a)?);
    manifest.input(&input)?;
    let (mut records, errors) = read_cases(&input)?;
    let rows_parsed = records.len();
    for aux_path in &a.aux {
        let aux_path = resolve_input(Some(aux_path), "")?;
        manifest.input(&aux_path)?;
        let aux = AuxTable::from_csv(BufReader::new(File::open(&aux_path)?))?;
        records = join_metadata(records, &aux)?;
    }
    let (kept, stats) = clean(records, a.cutoff);
    let kept = impute_missing(kept);
    let clean_path = ctx.out.join("clean.csv");
    create(&clean_path, |w| write_case_csv(&kept, w))?;
    let stats_path = ctx.out.join("clean_stats.json");
    write_json(
        &stats_path,
        &IngestStats {
            rows_parsed,
            row_errors: errors.len(),
            first_errors: errors.iter().take(20).cloned().collect(),
            clean: stats,
        },
    )?;
    manifest.write(&ctx.out, &[clean_path, stats_path])?;
    Ok(())
}

fn encoder_choice(kind: EncoderArg, k: usize, m: usize) -> EncoderChoice {
    match kind {
        EncoderArg::Label => EncoderChoice::Label,
        EncoderArg::OnehotSvd => EncoderChoice::OnehotSvd { k },
        EncoderArg::Hashing => EncoderChoice::Hashing { m },
    }
}

fn cmd_featurize(ctx: &Ctx, a: &FeaturizeArgs) -> Result<()> {
    let input = resolve_input(a.input.as_deref(), "clean.csv")?;
    let mut manifest = Manifest::new("featurize", ctx.seed, config_json(a)?);
    manifest.input(&input)?;
    let (records, errors) = read_cases(&input)?;
    if let Some(e) = errors.first() {
        return Err(Error::InvalidParam(format!(
            "cleaned input has {} bad rows; first at row {}: {}",
            errors.len(),
            e.row,
            e.cause
        )));
    }
    let config = DatasetConfig {
        target: a.target.into(),
        encoder: encoder_choice(a.encoder, a.k, a.hash_width),
        columns: default_feature_columns(),
        fractions: a.split.clone(),
        seed: ctx.seed,
        exclude_ongoing: a.exclude_ongoing,
        svd_options: SvdOptions {
            max_iter: a.svd_iters,
            ..SvdOptions::default()
        },
    };
    let (dataset, pipeline) = build_dataset(&records, &config)?;
    let ds_path = ctx.out.join("dataset.json");
    write_json(&ds_path, &dataset)?;
    let enc_path = ctx.out.join("encoder.json");
    write_json(&enc_path, &pipeline)?;
    manifest.write(&ctx.out, &[ds_path, enc_path])?;
    Ok(())
}

fn model_params(a: &ModelArgs, seed: u64) -> ModelParams {
    let tree = TreeParams {
        max_depth: a.max_depth.unwrap_or(10),
        seed,
        ..TreeParams::default()
    };
    let forest = |max_features| ForestParams {
        n_trees: a.n_trees,
        tree: TreeParams { max_features, ..tree },
        bootstrap: true,
    };
    match a.model {
        ModelKind::Tree => ModelParams::Tree(tree),
        ModelKind::Bagging => ModelParams::Bagging(forest(MaxFeatures::All)),
        ModelKind::RandomForest => ModelParams::RandomForest(forest(match a.max_features {
            MaxFeaturesArg::All => MaxFeatures::All,
            MaxFeaturesArg::Sqrt => MaxFeatures::Sqrt,
        })),
        ModelKind::Gbdt => ModelParams::Gbdt(GbdtParams {
            n_rounds: a.n_trees,
            eta: a.eta,
            lambda: a.lambda,
            max_depth: a.max_depth.unwrap_or(GbdtParams::default().max_depth),
            ..GbdtParams::default()
        }),
    }
}

fn cmd_train(ctx: &Ctx, a: &TrainArgs) -> Result<()> {
    let input = resolve_input(a.input.as_deref(), "dataset.json")?;
    let mut manifest = Manifest::new("train", ctx.seed, config_json(a)?);
    manifest.input(&input)?;
    let ds: Dataset = read_json(&input)?;
    let (x, y) = ds.rows(&ds.part(0));
    let model = Model::train(&x, &y, ds.class_labels.len(), &model_params(&a.model, ctx.seed))?;
    let path = ctx.out.join("model.json");
    model.save(&path)?;
    manifest.write(&ctx.out, &[path])?;
    Ok(())
}

fn load_pair(input: Option<&Path>, model_file: Option<&Path>, m: &mut Manifest) -> Result<(Dataset, Model)> {
    let ds_path = resolve_input(input, "dataset.json")?;
    let model_path = resolve_input(model_file, "model.json")?;
    m.input(&ds_path)?;
    m.input(&model_path)?;
    Ok((read_json(&ds_path)?, Model::load(&model_path)?))
}

fn report_tables(dir: &Path, report: &EvaluationReport) -> Result<Vec<PathBuf>> {
    let confusion = dir.join("confusion.csv");
    create(&confusion, |w| write_confusion_csv(&report.confusion, w))?;
    let accuracy = dir.join("accuracy.csv");
    create(&accuracy, |w| write_accuracy_csv(report, w))?;
    Ok(vec![confusion, accuracy])
}

fn cmd_evaluate(ctx: &Ctx, a: &EvaluateArgs) -> Result<()> {
    let mut manifest = Manifest::new("evaluate", ctx.seed, config_json(a)?);
    let (ds, model) = load_pair(a.input.as_deref(), a.model_file.as_deref(), &mut manifest)?;
    let part = a.part.unwrap_or(ds.fractions.len() - 1);
    if part >= ds.fractions.len() {
        return Err(Error::Usage(format!("dataset has {} parts", ds.fractions.len())));
    }
    let (x, y) = ds.rows(&ds.part(part));
    let report = evaluate(model.kind().display_name(), &model.predict_proba(&x)?, &y, &ds.class_labels)?;
    let path = ctx.out.join("report.json");
    write_json(&path, &report)?;
    let mut outputs = vec![path];
    outputs.extend(report_tables(&ctx.out, &report)?);
    manifest.write(&ctx.out, &outputs)?;
    Ok(())
}

fn cmd_explain(ctx: &Ctx, a: &ExplainArgs) -> Result<()> {
    let mut manifest = Manifest::new("explain", ctx.seed, config_json(a)?);
    let (ds, model) = load_pair(a.input.as_deref(), a.model_file.as_deref(), &mut manifest)?;
    let ranked = ranked_importance(&model);
    let imp_csv = ctx.out.join("importance.csv");
    create(&imp_csv, |w| {
        let mut w = csv::Writer::from_writer(w);
        w.write_record(["feature", "importance"])?;
        for (name, v) in &ranked {
            w.write_record([name.clone(), format!("{v}")])?;
        }
        w.flush()?;
        Ok(())
    })?;
    let svg = ctx.out.join("importance.svg");
    fs::write(&svg, importance_svg("Feature Importance", &ranked))?;

    let class = a.class.unwrap_or(model.n_classes - 1);
    let held_out = ds.part(ds.fractions.len() - 1);
    let attr = ctx.out.join("attributions.csv");
    create(&attr, |w| {
        let mut w = csv::Writer::from_writer(w);
        let header: Vec<String> = ["case_id", "base_value", "output"]
            .into_iter()
            .map(String::from)
            .chain(model.feature_names.iter().cloned())
            .collect();
        w.write_record(&header)?;
        for &i in held_out.iter().take(a.rows) {
            let at = tree_shap(&model, &ds.matrix.row_dense(i), class)?;
            let mut rec = vec![ds.case_ids[i].clone(), format!("{}", at.base_value), format!("{}", at.output)];
            rec.extend(at.contributions.iter().map(|c| format!("{c}")));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    })?;
    manifest.write(&ctx.out, &[imp_csv, svg, attr])?;
    Ok(())
}

fn cmd_search(ctx: &Ctx, a: &SearchArgs, threads: Option<usize>) -> Result<()> {
    let input = resolve_input(a.input.as_deref(), "clean.csv")?;
    let mut manifest = Manifest::new("search", ctx.seed, config_json(a)?);
    manifest.input(&input)?;
    let (records, _) = read_cases(&input)?;
    let target: TargetKind = a.target.into();
    let config = SearchConfig {
        target,
        columns: default_feature_columns(),
        space: SearchSpace {
            encoders: a.encoder.iter().map(|e| encoder_choice(*e, a.k, a.hash_width)).collect(),
            ..SearchSpace::default()
        },
        budget: Budget {
            trials: Some(a.trials),
            time_s: a.time_budget_s,
        },
        objective: Objective::default_for(target),
        seed: ctx.seed,
        exclude_ongoing: a.exclude_ongoing,
        svd_options: SvdOptions::default(),
        workers: threads.unwrap_or(0),
    };
    let outcome = run_search(&records, &config)?;
    let board = ctx.out.join("leaderboard.jsonl");
    create(&board, |w| write_leaderboard(&outcome.leaderboard, w))?;
    let model = ctx.out.join("best_model.json");
    outcome.model.save(&model)?;
    let pipe = ctx.out.join("best_encoder.json");
    write_json(&pipe, &outcome.pipeline)?;
    let report = ctx.out.join("test_report.json");
    write_json(&report, &outcome.test_report)?;
    let mut outputs = vec![board, model, pipe, report];
    outputs.extend(report_tables(&ctx.out, &outcome.test_report)?);
    manifest.write(&ctx.out, &outputs)?;
    Ok(())
}

fn cmd_report(ctx: &Ctx, a: &ReportArgs) -> Result<()> {
    let mut manifest = Manifest::new("report", ctx.seed, config_json(a)?);
    let inputs = if a.input.is_empty() {
        vec![resolve_input(None, "report.json")?]
    } else {
        a.input
            .iter()
            .map(|p| resolve_input(Some(p), "report.json"))
            .collect::<Result<Vec<_>>>()?
    };
    let mut reports: Vec<EvaluationReport> = Vec::new();
    for p in &inputs {
        manifest.input(p)?;
        reports.push(read_json(p)?);
    }
    let mut outputs = report_tables(&ctx.out, &reports[0])?;
    let comparative = ctx.out.join("comparative.csv");
    create(&comparative, |w| write_comparative_csv(&reports, w))?;
    outputs.push(comparative);
    manifest.write(&ctx.out, &outputs)?;
    Ok(())
}

fn dispatch(cli: Cli) -> Result<()> {
    let out = cli.output_dir.clone().or_else(data_dir).unwrap_or_else(|| PathBuf::from("."));
    fs::create_dir_all(&out)?;
    let ctx = Ctx { out, seed: cli.seed };
    match &cli.command {
        Command::Synth(a) => cmd_synth(&ctx, a),
        Command::Ingest(a) => cmd_ingest(&ctx, a),
        Command::Featurize(a) => cmd_featurize(&ctx, a),
        Command::Train(a) => cmd_train(&ctx, a),
        Command::Evaluate(a) => cmd_evaluate(&ctx, a),
        Command::Explain(a) => cmd_explain(&ctx, a),
        Command::Search(a) => cmd_search(&ctx, a, cli.threads),
        Command::Report(a) => cmd_report(&ctx, a),
    }
}

/// Run the command line and return the process exit code: 0 on success,
/// 1 for usage errors, 2 for data or contract errors.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let result = match cli.threads {
        Some(0) => Err(Error::Usage("--threads must be >= 1".into())),
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(|| dispatch(cli)),
            Err(e) => Err(Error::Usage(e.to_string())),
        },
        None => dispatch(cli),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Usage(_) => EXIT_USAGE,
                _ => EXIT_DATA,
            }
        }
    }
}
