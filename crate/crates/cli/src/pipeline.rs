//! Shared steps: corpus loading, feature contexts, calendar-year datasets,
//! and fitting/scoring every named model.

use std::time::Instant;

use anyhow::Context;
use career_forge::baselines::{
    flattened_feature_names, flattened_slot, logistic_probability, train_linear, train_logistic,
    train_ridge, Criterion, DecisionTree, ForestParams, LinearModel, LogisticParams, RandomForest,
    TreeParams,
};
use career_forge::data::{apply_noise_filter, load_corpus_dir, Corpus, Year};
use career_forge::datasets::{
    build_classification, build_regression, fit_normalization, normalize_examples, split_by_year,
    Mode, SequenceExample,
};
use career_forge::factors::{BagOfWordsClassifier, FeatureContext, NormalizationStats};
use career_forge::metrics::{f1_score, mean_absolute_error};
use career_forge::nn::{save_checkpoint, train, ModelConfig, Sample, TrainReport};
use career_forge::CareerModel64;
use clap::ValueEnum;
use log::info;
use serde::Serialize;

use crate::artifacts::OutDir;
use crate::config::RunConfig;

pub const RIDGE_ALPHA: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    /// Transformer encoder, Fellow classification.
    ClsFellow,
    /// Transformer encoder, remaining years until election.
    RegFellow,
    /// Decision tree classifier on flattened sequences.
    DtCls,
    /// Decision tree regressor on flattened sequences.
    DtReg,
    /// Random forest classifier.
    RfCls,
    /// Random forest regressor.
    RfReg,
    /// Logistic regression.
    LrCls,
    /// Ordinary least squares on the as-of year's factors.
    LrReg,
    /// Ridge regression, alpha 0.1.
    Ridge,
}

impl ModelKind {
    pub fn mode(self) -> Mode {
        match self {
            ModelKind::ClsFellow | ModelKind::DtCls | ModelKind::RfCls | ModelKind::LrCls => {
                Mode::Classification
            }
            _ => Mode::Regression,
        }
    }

    pub fn name(self) -> String {
        self.to_possible_value()
            .expect("no skipped variants")
            .get_name()
            .to_string()
    }

    pub fn metric(self) -> &'static str {
        match self.mode() {
            Mode::Classification => "f1",
            Mode::Regression => "mae",
        }
    }
}

pub fn load_corpus(cfg: &RunConfig) -> anyhow::Result<Corpus> {
    let dir = cfg.corpus_dir()?;
    let corpus =
        load_corpus_dir(dir).with_context(|| format!("loading corpus from {}", dir.display()))?;
    if cfg.filter.unwrap_or(false) {
        let (filtered, removed) = apply_noise_filter(&corpus)?;
        info!("noise filter removed {} Fellows", removed.len());
        return Ok(filtered);
    }
    Ok(corpus)
}

pub fn last_year(corpus: &Corpus) -> anyhow::Result<Year> {
    corpus
        .year_range()
        .map(|(_, last)| last)
        .context("corpus has no publications")
}

pub fn feature_context<'c>(
    corpus: &'c Corpus,
    cfg: &RunConfig,
    horizon: Year,
) -> anyhow::Result<FeatureContext<'c>> {
    let started = Instant::now();
    let classifier = BagOfWordsClassifier::bundled();
    let ctx = FeatureContext::for_corpus(corpus, cfg.features(), &classifier, horizon)?;
    info!(
        "feature context through {horizon} built in {:.1?}",
        started.elapsed()
    );
    Ok(ctx)
}

/// Normalized train/test examples for one calendar year.
pub struct Split {
    pub mode: Mode,
    pub train: Vec<SequenceExample>,
    pub test: Vec<SequenceExample>,
    pub stats: NormalizationStats,
}

impl Split {
    pub fn raw(
        ctx: &FeatureContext<'_>,
        cfg: &RunConfig,
        mode: Mode,
        cy: Year,
    ) -> anyhow::Result<Self> {
        let opts = cfg.dataset();
        let examples = match mode {
            Mode::Classification => build_classification(ctx, cy, &opts)?,
            Mode::Regression => build_regression(ctx, &opts)?,
        };
        let (train, test) = split_by_year(examples, cy, mode, cfg.seed())?;
        let stats = fit_normalization(&train)?;
        Ok(Split {
            mode,
            train,
            test,
            stats,
        })
    }

    pub fn normalized(
        ctx: &FeatureContext<'_>,
        cfg: &RunConfig,
        mode: Mode,
        cy: Year,
    ) -> anyhow::Result<Self> {
        let mut s = Self::raw(ctx, cfg, mode, cy)?;
        normalize_examples(&mut s.train, &s.stats);
        normalize_examples(&mut s.test, &s.stats);
        Ok(s)
    }

    pub fn t_max(&self) -> usize {
        self.train[0].mask.len()
    }
}

pub enum Trained {
    Network(Box<CareerModel64>, TrainReport),
    Tree(DecisionTree),
    Forest(RandomForest),
    Logistic(LinearModel),
    Linear(LinearModel),
    /// Weights over the last real row only.
    LastRowLinear(LinearModel),
}

fn flat(examples: &[SequenceExample]) -> (Vec<Vec<f64>>, Vec<f64>) {
    let x = examples.iter().map(|e| e.flattened().to_vec()).collect();
    let y = examples.iter().map(|e| e.label).collect();
    (x, y)
}

/// Least squares without a penalty has no solution on the padded, flattened
/// sequence (far more columns than examples, many identically zero), so it
/// sees the as-of year only. Columns that add no rank after centering (the
/// field shares sum to one, for instance) are dropped, scanning left to
/// right, and get weight zero.
fn last_row_ols(examples: &[SequenceExample]) -> anyhow::Result<LinearModel> {
    let rows: Vec<&[f64]> = examples.iter().map(|e| e.last_row()).collect();
    let width = rows.first().map_or(0, |r| r.len());
    let n = rows.len() as f64;
    let mut basis: Vec<Vec<f64>> = Vec::new();
    let mut kept = Vec::new();
    for j in 0..width {
        let mean = rows.iter().map(|r| r[j]).sum::<f64>() / n;
        let mut col: Vec<f64> = rows.iter().map(|r| r[j] - mean).collect();
        let norm = col.iter().map(|v| v * v).sum::<f64>().sqrt();
        for q in &basis {
            let dot: f64 = col.iter().zip(q).map(|(a, b)| a * b).sum();
            col.iter_mut().zip(q).for_each(|(c, b)| *c -= dot * b);
        }
        let residual = col.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 0.0 && residual > 1e-8 * norm {
            col.iter_mut().for_each(|c| *c /= residual);
            basis.push(col);
            kept.push(j);
        }
    }
    let x: Vec<Vec<f64>> = rows
        .iter()
        .map(|r| kept.iter().map(|&j| r[j]).collect())
        .collect();
    let y: Vec<f64> = examples.iter().map(|e| e.label).collect();
    let fitted = train_linear(&x, &y).context("least squares on the as-of year factors")?;
    let mut weights = vec![0.0; width];
    for (&j, &w) in kept.iter().zip(&fitted.weights) {
        weights[j] = w;
    }
    Ok(LinearModel {
        weights,
        intercept: fitted.intercept,
    })
}

pub fn fit(kind: ModelKind, split: &Split, cfg: &RunConfig) -> anyhow::Result<Trained> {
    let seed = cfg.seed();
    let tree = TreeParams {
        criterion: match split.mode {
            Mode::Classification => Criterion::Gini,
            Mode::Regression => Criterion::Mse,
        },
        ..TreeParams::default()
    };
    Ok(match kind {
        ModelKind::ClsFellow | ModelKind::RegFellow => {
            let base = match kind {
                ModelKind::ClsFellow => ModelConfig::classification(),
                _ => ModelConfig::regression(),
            };
            let mut mc = cfg.model(base)?;
            mc.t_max = split.t_max();
            let mut model = CareerModel64::new(mc)?;
            let samples: Vec<Sample<'_, f64>> = split.train.iter().map(|e| e.sample()).collect();
            let report = train(&mut model, &samples, None, &cfg.train())?;
            Trained::Network(Box::new(model), report)
        }
        ModelKind::DtCls | ModelKind::DtReg => {
            let (x, y) = flat(&split.train);
            Trained::Tree(DecisionTree::fit(&x, &y, &tree)?)
        }
        ModelKind::RfCls | ModelKind::RfReg => {
            let (x, y) = flat(&split.train);
            let params = ForestParams {
                tree,
                seed,
                ..ForestParams::default()
            };
            Trained::Forest(RandomForest::fit(&x, &y, &params)?)
        }
        ModelKind::LrCls => {
            let (x, y) = flat(&split.train);
            Trained::Logistic(train_logistic(&x, &y, &LogisticParams::default())?)
        }
        ModelKind::LrReg => Trained::LastRowLinear(last_row_ols(&split.train)?),
        ModelKind::Ridge => {
            let (x, y) = flat(&split.train);
            Trained::Linear(train_ridge(&x, &y, RIDGE_ALPHA)?)
        }
    })
}

impl Trained {
    pub fn predict(&self, e: &SequenceExample) -> anyhow::Result<f64> {
        Ok(match self {
            Trained::Network(m, _) => m.predict(&e.view())?,
            Trained::Tree(t) => t.predict(e.flattened()),
            Trained::Forest(f) => f.predict(e.flattened()),
            Trained::Logistic(m) => f64::from(logistic_probability(m, e.flattened()) >= 0.5),
            Trained::Linear(m) => m.predict(e.flattened()),
            Trained::LastRowLinear(m) => m.predict(e.last_row()),
        })
    }

    /// F1 (classification) or MAE (regression) on `examples`.
    pub fn score(&self, mode: Mode, examples: &[SequenceExample]) -> anyhow::Result<f64> {
        let predicted = examples
            .iter()
            .map(|e| self.predict(e))
            .collect::<anyhow::Result<Vec<f64>>>()?;
        Ok(match mode {
            Mode::Classification => {
                let truth: Vec<u8> = examples.iter().map(|e| u8::from(e.label > 0.5)).collect();
                let pred: Vec<u8> = predicted.iter().map(|&p| u8::from(p > 0.5)).collect();
                f1_score(&truth, &pred)
            }
            Mode::Regression => {
                let truth: Vec<f64> = examples.iter().map(|e| e.label).collect();
                mean_absolute_error(&truth, &predicted)
            }
        })
    }

    /// Writes the fitted parameters (plus readable rules for trees).
    pub fn save(&self, out: &mut OutDir, split: &Split) -> anyhow::Result<()> {
        match self {
            Trained::Network(m, report) => {
                save_checkpoint(m.as_ref(), &out.path("model.cfck"))?;
                out.adopt("model.cfck")?;
                out.write_json("train_report.json", report)?;
            }
            Trained::Tree(t) => {
                out.write_json("model.json", t)?;
                let names = flattened_feature_names(split.t_max());
                let unscale = |f: usize, v: f64| split.stats.invert(flattened_slot(f), v);
                out.write("tree.txt", t.to_text(&names, &unscale))?;
                out.write("tree.graph", t.to_graph_description(&names, &unscale))?;
            }
            Trained::Forest(f) => out.write_json("model.json", f)?,
            Trained::Logistic(m) | Trained::Linear(m) | Trained::LastRowLinear(m) => {
                out.write_json("model.json", m)?
            }
        }
        Ok(())
    }
}
