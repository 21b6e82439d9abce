use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::Context;
use career_forge::analysis::{
    accumulation_distribution, alpha_change, attention_fragments, coauthor_evolution,
    field_quartile_table, gender_trajectories, CohortSpec,
};
use career_forge::data::{apply_noise_filter, corpus_stats, save_corpus_dir, Corpus, Society};
use career_forge::datasets::{normalize_examples, DatasetManifest, Mode, StoredDataset};
use career_forge::factors::{
    assemble_series, series_to_csv, BagOfWordsClassifier, NormalizationStats,
};
use career_forge::nn::{load_checkpoint, ExampleView};
use career_forge::synth::{generate, GeneratorSpec};
use career_forge::CareerModel64;
use clap::ValueEnum;
use log::info;
use serde::Serialize;

use crate::artifacts::{csv_table, text_table, OutDir};
use crate::config::RunConfig;
use crate::pipeline::{feature_context, fit, last_year, load_corpus, ModelKind, Split};
use crate::UsageError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Preset {
    Default,
    Inequality,
    FieldOffsets,
    PlantedElection,
    RemainingYears,
}

impl Preset {
    fn spec(self) -> GeneratorSpec {
        match self {
            Preset::Default => GeneratorSpec::default(),
            Preset::Inequality => GeneratorSpec::inequality(),
            Preset::FieldOffsets => GeneratorSpec::field_offsets(),
            Preset::PlantedElection => GeneratorSpec::planted_election(),
            Preset::RemainingYears => GeneratorSpec::remaining_years(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, ValueEnum)]
pub enum Analysis {
    /// Counts and averages per society and gender.
    CorpusStats,
    /// Median Fellow neighbors and collaboration weight by accumulation year.
    Evolution,
    /// Normalized cumulative-output trajectories by gender.
    Trajectory,
    /// Productivity exponent before and after election.
    AlphaChange,
    /// Third quartile of citations at election, by field and period.
    FieldQuartiles,
    /// Accumulation-time distribution by gender.
    Accumulation,
    /// Factor slots singled out by first-layer attention (needs --model-dir).
    Attention,
}

fn societies(cfg: &RunConfig) -> Vec<Society> {
    match cfg.society {
        Some(s) => vec![s],
        None => vec![Society::Acm, Society::Ieee],
    }
}

fn label(s: Society) -> String {
    s.label().to_ascii_lowercase()
}

pub fn ingest(cfg: &RunConfig) -> anyhow::Result<PathBuf> {
    let dir = cfg.corpus_dir()?;
    let corpus = career_forge::data::load_corpus_dir(dir)?;
    let (filtered, removed) = apply_noise_filter(&corpus)?;
    let mut out = OutDir::create(cfg.out_dir()?, "ingest")?;
    let chosen = if cfg.filter.unwrap_or(false) {
        &filtered
    } else {
        &corpus
    };
    let stats = corpus_stats(chosen)?;
    out.write("corpus_stats.txt", stats.to_text())?;
    out.write("corpus_stats.csv", stats.to_csv())?;
    let mut removals = String::from("scholar_id,reason\n");
    for r in &removed {
        let reasons: Vec<String> = r.reasons.iter().map(|x| format!("{x:?}")).collect();
        removals.push_str(&format!("{},{}\n", r.scholar_id, reasons.join(";")));
    }
    out.write("noise_filter.csv", removals)?;
    #[derive(Serialize)]
    struct Summary {
        scholars: usize,
        publications: usize,
        fellows: usize,
        removed_by_filter: usize,
        filtered: bool,
    }
    out.write_json(
        "summary.json",
        &Summary {
            scholars: chosen.scholars().len(),
            publications: chosen.publications().len(),
            fellows: chosen.scholars().iter().filter(|s| s.is_fellow()).count(),
            removed_by_filter: removed.len(),
            filtered: cfg.filter.unwrap_or(false),
        },
    )?;
    if cfg.filter.unwrap_or(false) {
        save_corpus_dir(&filtered, &out.path("corpus"))?;
        out.adopt("corpus/scholars.jsonl")?;
        out.adopt("corpus/publications.jsonl")?;
    }
    print!("{}", stats.to_text());
    out.finish(cfg)
}

pub fn synth(cfg: &RunConfig, preset: Option<Preset>) -> anyhow::Result<PathBuf> {
    let mut spec = match (preset, &cfg.generator) {
        (Some(p), _) => p.spec(),
        (None, Some(g)) => g.clone(),
        (None, None) => GeneratorSpec::default(),
    };
    if let Some(seed) = cfg.seed {
        spec.seed = seed;
    }
    spec.validate().map_err(|e| UsageError(e.to_string()))?;
    let (corpus, ledger) = generate(&spec)?;
    let mut out = OutDir::create(cfg.out_dir()?, "synth")?;
    save_corpus_dir(&corpus, out.path("").as_path())?;
    out.adopt("scholars.jsonl")?;
    out.adopt("publications.jsonl")?;
    out.write("ledger.json", ledger.to_json()? + "\n")?;
    println!(
        "{} scholars, {} publications, {} Fellows",
        corpus.scholars().len(),
        corpus.publications().len(),
        ledger.fellows
    );
    out.finish(cfg)
}

pub fn features(cfg: &RunConfig, scholars: &[String]) -> anyhow::Result<PathBuf> {
    let corpus = load_corpus(cfg)?;
    let horizon = match cfg.year()? {
        Some(y) => y,
        None => last_year(&corpus)?,
    };
    let ctx = feature_context(&corpus, cfg, horizon)?;
    let ids: Vec<&str> = if scholars.is_empty() {
        corpus
            .scholars()
            .iter()
            .filter(|s| s.first_pub_year <= horizon)
            .filter(|s| {
                cfg.society
                    .is_none_or(|soc| s.society == soc || s.society == Society::Non)
            })
            .map(|s| s.id.as_str())
            .collect()
    } else {
        scholars.iter().map(String::as_str).collect()
    };
    let series = ids
        .iter()
        .map(|id| {
            assemble_series(&ctx, id, horizon).with_context(|| format!("factor series of {id}"))
        })
        .collect::<anyhow::Result<Vec<_>>>()?;
    let mut out = OutDir::create(cfg.out_dir()?, "features")?;
    out.write("factors.csv", series_to_csv(&series))?;
    println!("{} series through {horizon}", series.len());
    out.finish(cfg)
}

fn require_year(cfg: &RunConfig) -> anyhow::Result<i32> {
    cfg.year()?
        .ok_or_else(|| UsageError("this command needs --cy YEAR".into()).into())
}

pub fn dataset(cfg: &RunConfig, mode: Mode) -> anyhow::Result<PathBuf> {
    let cy = require_year(cfg)?;
    let corpus = load_corpus(cfg)?;
    let horizon = horizon_for(&corpus, mode, &[cy])?;
    let ctx = feature_context(&corpus, cfg, horizon)?;
    let split = Split::raw(&ctx, cfg, mode, cy)?;
    let t_max = split.t_max();
    let mut out = OutDir::create(cfg.out_dir()?, "dataset")?;
    for (name, examples) in [("train", &split.train), ("test", &split.test)] {
        let file = format!("{name}.cfds");
        StoredDataset {
            t_max,
            examples: examples.clone(),
        }
        .save(&out.path(&file))?;
        out.adopt(&file)?;
        let m = DatasetManifest::describe(examples, mode, Some(cy), cfg.seed(), t_max, cfg.society);
        out.write_json(&format!("{name}.json"), &m)?;
    }
    out.write_json("normalization.json", &split.stats)?;
    println!(
        "{} dataset at {cy}: {} train, {} test examples",
        mode.label(),
        split.train.len(),
        split.test.len()
    );
    out.finish(cfg)
}

/// Classification series stop at the calendar year; regression examples run
/// up to each Fellow's election, so they need the whole record.
fn horizon_for(corpus: &Corpus, mode: Mode, years: &[i32]) -> anyhow::Result<i32> {
    Ok(match mode {
        Mode::Classification => *years.iter().max().expect("at least one year"),
        Mode::Regression => last_year(corpus)?,
    })
}

#[derive(Serialize)]
struct TrainSummary {
    model: ModelKind,
    cy: i32,
    train_examples: usize,
    test_examples: usize,
    metric: &'static str,
    test_score: f64,
}

pub fn train_model(cfg: &RunConfig, kind: ModelKind) -> anyhow::Result<PathBuf> {
    let cy = require_year(cfg)?;
    let corpus = load_corpus(cfg)?;
    let ctx = feature_context(&corpus, cfg, horizon_for(&corpus, kind.mode(), &[cy])?)?;
    let split = Split::normalized(&ctx, cfg, kind.mode(), cy)?;
    let model = fit(kind, &split, cfg)?;
    let score = model.score(split.mode, &split.test)?;
    let mut out = OutDir::create(cfg.out_dir()?, "train")?;
    model.save(&mut out, &split)?;
    out.write_json("normalization.json", &split.stats)?;
    out.write_json(
        "metrics.json",
        &TrainSummary {
            model: kind,
            cy,
            train_examples: split.train.len(),
            test_examples: split.test.len(),
            metric: kind.metric(),
            test_score: score,
        },
    )?;
    println!("{} at {cy}: test {} {score:.4}", kind.name(), kind.metric());
    out.finish(cfg)
}

pub fn evaluate(cfg: &RunConfig, kind: ModelKind, timing: bool) -> anyhow::Result<PathBuf> {
    let years = cfg
        .years()?
        .ok_or_else(|| UsageError("evaluate needs --cy YEAR or FIRST..LAST".into()))?;
    let corpus = load_corpus(cfg)?;
    let started = Instant::now();
    let ctx = feature_context(&corpus, cfg, horizon_for(&corpus, kind.mode(), &years)?)?;
    let feature_seconds = started.elapsed().as_secs_f64();
    let metric = kind.metric();
    let mut rows = Vec::new();
    let mut timings = Vec::new();
    let mut scores = Vec::new();
    for &cy in &years {
        let split = Split::normalized(&ctx, cfg, kind.mode(), cy)?;
        let t0 = Instant::now();
        let model = fit(kind, &split, cfg)?;
        let train_s = t0.elapsed().as_secs_f64();
        let t1 = Instant::now();
        let score = model.score(split.mode, &split.test)?;
        let test_s = t1.elapsed().as_secs_f64();
        info!("{} at {cy}: {metric} {score:.4}", kind.name());
        scores.push(score);
        rows.push(vec![
            cy.to_string(),
            split.train.len().to_string(),
            split.test.len().to_string(),
            format!("{score:.4}"),
        ]);
        timings.push(vec![
            cy.to_string(),
            format!("{train_s:.3}"),
            format!("{test_s:.3}"),
        ]);
    }
    let avg = scores.iter().sum::<f64>() / scores.len() as f64;
    rows.push(vec![
        "AVG".into(),
        "".into(),
        "".into(),
        format!("{avg:.4}"),
    ]);
    let header = ["cy", "train", "test", metric];
    let mut out = OutDir::create(cfg.out_dir()?, "evaluate")?;
    let text = format!("model {}\n{}", kind.name(), text_table(&header, &rows));
    out.write("evaluate.txt", &text)?;
    out.write("evaluate.csv", csv_table(&header, &rows))?;
    print!("{text}");
    if timing {
        timings.push(vec![
            "features".into(),
            format!("{feature_seconds:.3}"),
            "".into(),
        ]);
        let header = ["cy", "train_seconds", "test_seconds"];
        out.write("timing.txt", text_table(&header, &timings))?;
        out.write("timing.csv", csv_table(&header, &timings))?;
        print!("{}", text_table(&header, &timings));
    }
    out.finish(cfg)
}

/// Options only some analyses use.
pub struct AnalysisOptions {
    pub hops: Vec<usize>,
    pub model_dir: Option<PathBuf>,
}

fn run_analysis(
    name: Analysis,
    corpus: &Corpus,
    cfg: &RunConfig,
    opts: &AnalysisOptions,
    out: &mut OutDir,
) -> anyhow::Result<()> {
    let horizon = last_year(corpus)?;
    match name {
        Analysis::CorpusStats => {
            let stats = corpus_stats(corpus)?;
            out.write("corpus_stats.txt", stats.to_text())?;
            out.write("corpus_stats.csv", stats.to_csv())?;
        }
        Analysis::Evolution => {
            let spec = CohortSpec {
                society: cfg.society,
                ..CohortSpec::default()
            };
            let comparisons = coauthor_evolution(corpus, &spec, &opts.hops, horizon)?;
            for c in &comparisons {
                out.write(
                    &format!("evolution_hop{}_neighbors.csv", c.hops),
                    c.neighbors_csv(),
                )?;
                out.write(
                    &format!("evolution_hop{}_collab.csv", c.hops),
                    c.collab_csv(),
                )?;
            }
        }
        Analysis::Trajectory => {
            let report = gender_trajectories(corpus, cfg.society, horizon)?;
            out.write("trajectory.csv", report.to_csv())?;
            out.write_json("trajectory.json", &report)?;
        }
        Analysis::AlphaChange => {
            let fellows: Vec<&str> = corpus
                .scholars()
                .iter()
                .filter(|s| s.is_fellow() && cfg.society.is_none_or(|soc| s.society == soc))
                .map(|s| s.id.as_str())
                .collect();
            let report = alpha_change(corpus, &fellows, horizon)?;
            out.write("alpha_change.csv", report.to_csv())?;
            out.write_json("alpha_change.json", &report.summary)?;
        }
        Analysis::FieldQuartiles => {
            let classifier = BagOfWordsClassifier::bundled();
            for s in societies(cfg) {
                let table = field_quartile_table(corpus, s, &classifier)?;
                out.write(&format!("field_q3_{}.csv", label(s)), table.to_csv())?;
            }
        }
        Analysis::Accumulation => {
            for s in societies(cfg) {
                let report = accumulation_distribution(corpus, s)?;
                out.write(&format!("accumulation_{}.csv", label(s)), report.to_csv())?;
                out.write_json(&format!("accumulation_{}.json", label(s)), &report)?;
            }
        }
        Analysis::Attention => {
            let dir = opts
                .model_dir
                .as_deref()
                .ok_or_else(|| UsageError("the attention analysis needs --model-dir".into()))?;
            let table = attention_table(corpus, cfg, dir)?;
            out.write("attention_slots.csv", table.slots_csv())?;
            out.write("attention_families.csv", table.families_csv())?;
        }
    }
    Ok(())
}

/// Layer-0 attention of a trained classifier over the test examples of the
/// calendar year it was trained for.
fn attention_table(
    corpus: &Corpus,
    cfg: &RunConfig,
    dir: &Path,
) -> anyhow::Result<career_forge::analysis::FragmentTable> {
    let model: CareerModel64 = load_checkpoint(&dir.join("model.cfck"))
        .with_context(|| format!("loading a network checkpoint from {}", dir.display()))?;
    let stats: NormalizationStats =
        serde_json::from_str(&std::fs::read_to_string(dir.join("normalization.json"))?)?;
    let metrics: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("metrics.json"))?)?;
    let cy = match cfg.year()? {
        Some(y) => y,
        None => metrics["cy"].as_i64().context("metrics.json lacks cy")? as i32,
    };
    let ctx = feature_context(corpus, cfg, cy)?;
    let mut split = Split::raw(&ctx, cfg, Mode::Classification, cy)?;
    normalize_examples(&mut split.test, &stats);
    let views: Vec<ExampleView<'_, f64>> = split.test.iter().map(|e| e.view()).collect();
    Ok(attention_fragments(&model, &views)?)
}

pub fn analyze(cfg: &RunConfig, name: Analysis, opts: &AnalysisOptions) -> anyhow::Result<PathBuf> {
    let corpus = load_corpus(cfg)?;
    let mut out = OutDir::create(cfg.out_dir()?, "analyze")?;
    run_analysis(name, &corpus, cfg, opts, &mut out)?;
    println!("{name:?} written to {}", out.path("").display());
    out.finish(cfg)
}

/// Every corpus analysis into one directory, plus attention when a trained
/// model is given. Analyses that cannot run on this corpus are listed in
/// `skipped.json` rather than failing the report.
pub fn report(cfg: &RunConfig, opts: &AnalysisOptions) -> anyhow::Result<PathBuf> {
    let corpus = load_corpus(cfg)?;
    let mut out = OutDir::create(cfg.out_dir()?, "report")?;
    let mut skipped = BTreeMap::new();
    for name in Analysis::value_variants() {
        if *name == Analysis::Attention && opts.model_dir.is_none() {
            continue;
        }
        if let Err(e) = run_analysis(*name, &corpus, cfg, opts, &mut out) {
            if e.downcast_ref::<career_forge::Error>().is_some() {
                log::warn!("{name:?} skipped: {e:#}");
                skipped.insert(format!("{name:?}"), format!("{e:#}"));
            } else {
                return Err(e);
            }
        }
    }
    out.write_json("skipped.json", &skipped)?;
    println!("report written to {}", out.path("").display());
    out.finish(cfg)
}
