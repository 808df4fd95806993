//! The `autotune` command line.

use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use autotune_core::eval::{evaluate_series, EvalReport, EvalRow};
use autotune_core::shape::synth::{default_specs, eval_suite, DEFAULT_CORRUPTIONS};
use autotune_core::shape::{merge_samples, synth_corpus, train_scorer, ScorerModel, ShapeSample, TrainingMeta};
use autotune_core::tuner::{auto, TuneReport};
use autotune_core::{AnomalyMask, Boundary, ParamSet, PatternLabel, SensitivityTarget};
use clap::{Parser, Subcommand};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::Config;
use crate::error::{AppError, Result};
use crate::formats::{read_corpus, read_model, to_json, write_atomic, write_json, write_jsonl};
use crate::ingest::{load_series, write_csv};
use crate::service::Service;
use crate::store::{Store, STORE_ENV};

#[derive(Debug, Parser)]
#[command(name = "autotune", version, about = "Self-tuning univariate anomaly detection")]
pub struct Cli {
    /// Machine-readable output only; errors go to stdout as JSON.
    #[arg(long, global = true)]
    pub json: bool,
    /// JSON config with grids, lambda, classifier thresholds and training settings.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// State directory. AUTOTUNE_STORE takes precedence when set.
    #[arg(long, global = true)]
    pub store: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Classify, tune and detect; prints mask, boundary and parameters.
    Detect {
        file: PathBuf,
        #[arg(long)]
        sensitivity: f64,
        #[arg(long)]
        model: Option<PathBuf>,
        /// Also write an SVG plot here.
        #[arg(long)]
        svg: Option<PathBuf>,
    },
    /// Print the full tuning report.
    Tune {
        file: PathBuf,
        #[arg(long)]
        sensitivity: f64,
        #[arg(long)]
        model: Option<PathBuf>,
    },
    /// Write a shape corpus and a labelled series suite.
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = DEFAULT_CORRUPTIONS)]
        corruptions: usize,
    },
    /// Train the shape scorer on a JSONL corpus.
    TrainShape {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Walk the feedback queue: a(ccept), s(core) <v>, r(eject), k(eep), q(uit).
    ReviewFeedback {
        /// Corpus receiving accepted samples; defaults to the store's corpus.
        #[arg(long)]
        corpus: Option<PathBuf>,
    },
    /// Before/after evaluation over a directory of labelled CSV files.
    Eval {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        model: Option<PathBuf>,
    },
    /// Run the HTTP API.
    Serve {
        #[arg(long, default_value = "127.0.0.1:8080")]
        addr: String,
        #[arg(long)]
        model: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectOutput {
    pub series: String,
    pub label: PatternLabel,
    pub params: ParamSet,
    pub mask: AnomalyMask,
    pub boundary: Boundary,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub forecast: Option<Vec<f64>>,
    pub realized_ratio: f64,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuneOutput {
    pub series: String,
    pub label: PatternLabel,
    pub report: TuneReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthOutput {
    pub shape_corpus: PathBuf,
    pub shape_samples: usize,
    pub series_dir: PathBuf,
    pub series: usize,
}

struct Ctx {
    json: bool,
    config: Config,
    store_dir: PathBuf,
}

impl Ctx {
    fn note(&self, msg: impl AsRef<str>) {
        if !self.json {
            eprintln!("{}", msg.as_ref());
        }
    }

    fn model(&self, flag: Option<&Path>) -> Result<ScorerModel> {
        let path = flag.map_or_else(|| self.store_dir.join("scorer.json"), Path::to_path_buf);
        read_model(&path)
    }
}

fn store_dir(flag: Option<&Path>) -> PathBuf {
    match std::env::var_os(STORE_ENV) {
        Some(dir) if !dir.is_empty() => PathBuf::from(dir),
        _ => flag.map_or_else(|| PathBuf::from("autotune-store"), Path::to_path_buf),
    }
}

fn print(s: &str) -> Result<()> {
    let mut out = std::io::stdout().lock();
    out.write_all(s.as_bytes()).and_then(|_| out.flush()).map_err(|e| AppError::io("stdout", e))
}

fn detect(ctx: &Ctx, file: &Path, p: f64, model: Option<&Path>, svg: Option<&Path>) -> Result<()> {
    let x = load_series(file)?;
    let target = SensitivityTarget::new(p)?;
    let scorer = ctx.model(model)?;
    let t = Instant::now();
    let r = auto(&x, target, &scorer, &ctx.config.tune)?;
    ctx.note(format!("{}: {:?}, {} anomalies in {:.2?}", x.id(), r.label, r.outcome.anomalies.count(), t.elapsed()));
    if let Some(path) = svg {
        write_atomic(path, crate::svg::render(x.values(), &r.outcome).as_bytes())?;
    }
    let out = DetectOutput {
        series: x.id().to_string(),
        label: r.label,
        params: r.report.best,
        mask: r.outcome.anomalies,
        boundary: r.outcome.boundary,
        forecast: r.outcome.forecast,
        realized_ratio: r.outcome.realized_ratio,
        notes: r.outcome.notes,
    };
    print(&to_json(&out)?)
}

fn tune(ctx: &Ctx, file: &Path, p: f64, model: Option<&Path>) -> Result<()> {
    let x = load_series(file)?;
    let target = SensitivityTarget::new(p)?;
    let scorer = ctx.model(model)?;
    let t = Instant::now();
    let r = auto(&x, target, &scorer, &ctx.config.tune)?;
    ctx.note(format!("tuned {} in {:.2?}", x.id(), t.elapsed()));
    print(&to_json(&TuneOutput { series: x.id().to_string(), label: r.label, report: r.report })?)
}

fn synth(ctx: &Ctx, out: &Path, n: usize, seed: u64, corruptions: usize) -> Result<()> {
    if n == 0 {
        return Err(AppError::BadRequest("--n must be positive".into()));
    }
    let corpus = synth_corpus(&default_specs(n, seed), corruptions);
    let corpus_path = out.join("shape_corpus.jsonl");
    write_jsonl(&corpus_path, &corpus)?;
    let series_dir = out.join("series");
    let suite = eval_suite(n, seed);
    for x in &suite {
        let mut buf = Vec::new();
        write_csv(x, &mut buf).map_err(|e| AppError::io(&series_dir, e))?;
        write_atomic(&series_dir.join(format!("{}.csv", x.id())), &buf)?;
    }
    ctx.note(format!("wrote {} shape samples and {} series under {}", corpus.len(), suite.len(), out.display()));
    print(&to_json(&SynthOutput {
        shape_corpus: corpus_path,
        shape_samples: corpus.len(),
        series_dir,
        series: suite.len(),
    })?)
}

fn train(ctx: &Ctx, corpus: &Path, out: &Path) -> Result<()> {
    let samples = read_corpus(corpus)?;
    let t = Instant::now();
    let model = train_scorer(&samples, &ctx.config.train)?;
    ctx.note(format!(
        "trained on {} samples in {:.2?}; best epoch {} val loss {:.4} (untrained {:.4})",
        samples.len(),
        t.elapsed(),
        model.meta.best_epoch,
        model.meta.val_loss.get(model.meta.best_epoch.wrapping_sub(1)).copied().unwrap_or(model.meta.initial_val_loss),
        model.meta.initial_val_loss
    ));
    write_json(out, &model)?;
    let meta: &TrainingMeta = &model.meta;
    print(&to_json(meta)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReviewSummary {
    pub accepted: usize,
    pub rejected: usize,
    pub remaining: usize,
    pub corpus_size: usize,
}

/// Applies one review session read from `input` to the store's queue.
pub fn review(store: &Store, corpus_path: &Path, input: &mut impl BufRead, prompt: &mut impl Write) -> Result<ReviewSummary> {
    let queue = store.queue()?;
    let mut corpus: Vec<ShapeSample> = if corpus_path.exists() { read_corpus(corpus_path)? } else { Vec::new() };
    let mut keep = Vec::new();
    let (mut accepted, mut rejected) = (0, 0);
    let mut items = queue.into_iter();
    let mut line = String::new();
    let mut pending = items.next();
    while let Some(sample) = pending.take() {
        let (lo, hi) = sample.x.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(*v), b.max(*v)));
        let _ = writeln!(prompt, "sample: {} points, range [{lo:.3}, {hi:.3}], score {}", sample.x.len(), sample.score);
        let _ = write!(prompt, "[a]ccept, [s]core <v>, [r]eject, [k]eep, [q]uit > ");
        let _ = prompt.flush();
        line.clear();
        if input.read_line(&mut line).map_err(|e| AppError::io("stdin", e))? == 0 {
            keep.push(sample);
            break;
        }
        let mut words = line.split_whitespace();
        match (words.next(), words.next().map(str::parse::<f64>)) {
            (Some("a"), None) => {
                accepted += merge_samples(&mut corpus, [sample]);
            }
            (Some("s"), Some(Ok(v))) if (0.0..=1.0).contains(&v) => {
                accepted += merge_samples(&mut corpus, [ShapeSample { score: v, ..sample }]);
            }
            (Some("r"), None) => rejected += 1,
            (Some("k"), None) => keep.push(sample),
            (Some("q"), None) => {
                keep.push(sample);
                break;
            }
            _ => {
                let _ = writeln!(prompt, "unrecognised answer");
                pending = Some(sample);
                continue;
            }
        }
        pending = items.next();
    }
    keep.extend(items);
    write_jsonl(corpus_path, &corpus)?;
    store.set_queue(&keep)?;
    Ok(ReviewSummary { accepted, rejected, remaining: keep.len(), corpus_size: corpus.len() })
}

fn format_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "-".into(), |v| format!("{v:.3}"))
}

fn eval(ctx: &Ctx, dir: &Path, model: Option<&Path>) -> Result<()> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| AppError::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv") || e.eq_ignore_ascii_case("json")))
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(AppError::BadRequest(format!("no .csv or .json series in {}", dir.display())));
    }
    let corpus = files.iter().map(|p| load_series(p)).collect::<Result<Vec<_>>>()?;
    if let Some(x) = corpus.iter().find(|x| x.labels().is_none()) {
        return Err(autotune_core::Error::Unlabeled(x.id().to_string()).into());
    }
    let scorer = ctx.model(model)?;
    let t = Instant::now();
    let rows: Vec<EvalRow> = corpus
        .par_iter()
        .map(|x| evaluate_series(x, &scorer, &ctx.config.tune, ctx.config.train_fraction))
        .collect::<std::result::Result<_, _>>()?;
    let report = EvalReport::from_rows(rows);
    if !ctx.json {
        eprintln!("{:<24} {:<9} {:>8} {:>8} {:>8} {:>8}", "series", "method", "f1 pre", "f1 post", "auc pre", "auc post");
        for r in &report.rows {
            let method = r.method.map_or("-", |m| m.name());
            eprintln!(
                "{:<24} {:<9} {:>8} {:>8} {:>8} {:>8}{}",
                r.id,
                method,
                format_opt(r.f1_before),
                format_opt(r.f1_after),
                format_opt(r.auc_before),
                format_opt(r.auc_after),
                r.skipped.as_deref().map(|s| format!("  skipped: {s}")).unwrap_or_default()
            );
        }
        for (name, a) in [("f1", report.f1), ("auc", report.auc)] {
            eprintln!(
                "{name}: mean {:.3} -> {:.3}, not worse on {}/{}, improved on {}",
                a.mean_before, a.mean_after, a.not_worse, a.rows, a.improved
            );
        }
        eprintln!("{} skipped, {:.2?}", report.skipped, t.elapsed());
    }
    print(&to_json(&report)?)
}

fn serve(ctx: &Ctx, addr: &str, model: Option<&Path>) -> Result<()> {
    let scorer = ctx.model(model)?;
    let store = Store::open(&ctx.store_dir)?;
    let svc = Arc::new(Service::new(store, scorer, ctx.config.tune.clone()));
    let rt = tokio::runtime::Builder::new_multi_thread().enable_all().build().map_err(|e| AppError::io("runtime", e))?;
    rt.block_on(crate::http::serve(svc, addr)).map_err(|e| AppError::io(addr, e))
}

pub fn run(cli: Cli) -> Result<()> {
    let ctx = Ctx { json: cli.json, config: Config::load(cli.config.as_deref())?, store_dir: store_dir(cli.store.as_deref()) };
    match &cli.command {
        Command::Detect { file, sensitivity, model, svg } => detect(&ctx, file, *sensitivity, model.as_deref(), svg.as_deref()),
        Command::Tune { file, sensitivity, model } => tune(&ctx, file, *sensitivity, model.as_deref()),
        Command::Synth { out, n, seed, corruptions } => synth(&ctx, out, *n, *seed, *corruptions),
        Command::TrainShape { corpus, out } => train(&ctx, corpus, out),
        Command::ReviewFeedback { corpus } => {
            let store = Store::open(&ctx.store_dir)?;
            let corpus = corpus.clone().unwrap_or_else(|| store.corpus_path());
            let stdin = std::io::stdin();
            let summary = if ctx.json {
                review(&store, &corpus, &mut stdin.lock(), &mut std::io::sink())?
            } else {
                review(&store, &corpus, &mut stdin.lock(), &mut std::io::stderr())?
            };
            print(&to_json(&summary)?)
        }
        Command::Eval { corpus, model } => eval(&ctx, corpus, model.as_deref()),
        Command::Serve { addr, model } => serve(&ctx, addr, model.as_deref()),
    }
}

/// Entry point; returns the process exit code.
pub fn main() -> i32 {
    let cli = Cli::parse();
    let json = cli.json;
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            if json {
                let body = serde_json::json!({ "code": e.code(), "message": e.to_string() });
                println!("{body}");
            } else {
                eprintln!("error: {e}");
            }
            1
        }
    }
}
