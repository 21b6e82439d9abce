use std::collections::HashMap;

use crate::data::Publication;
use crate::error::{Error, Result};

pub const FIELD_COUNT: usize = 8;

pub const FIELD_NAMES: [&str; FIELD_COUNT] = [
    "theory",
    "systems",
    "networking",
    "ai",
    "graphics_vision",
    "data",
    "software",
    "signal_control",
];

const SEED_FILE: &str = include_str!("../../data/field_seed.tsv");

/// Maps a publication's text to a probability vector over the field categories.
pub trait FieldClassifier: Send + Sync {
    fn classify(&self, text: &str) -> [f64; FIELD_COUNT];
}

pub fn tokenize(text: &str) -> impl Iterator<Item = String> + '_ {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|w| w.len() >= 2)
        .map(str::to_lowercase)
}

/// Multinomial naive Bayes over word counts with add-one smoothing.
#[derive(Debug, Clone)]
pub struct BagOfWordsClassifier {
    log_prior: [f64; FIELD_COUNT],
    log_likelihood: HashMap<String, [f64; FIELD_COUNT]>,
}

impl BagOfWordsClassifier {
    pub fn train(samples: &[(String, usize)]) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::InsufficientData(
                "field classifier needs training text".into(),
            ));
        }
        let mut docs = [0usize; FIELD_COUNT];
        let mut totals = [0usize; FIELD_COUNT];
        let mut counts: HashMap<String, [usize; FIELD_COUNT]> = HashMap::new();
        for (text, cat) in samples {
            if *cat >= FIELD_COUNT {
                return Err(Error::InvalidArgument(format!(
                    "field category {cat} out of range"
                )));
            }
            docs[*cat] += 1;
            for tok in tokenize(text) {
                counts.entry(tok).or_default()[*cat] += 1;
                totals[*cat] += 1;
            }
        }
        let vocab = counts.len() as f64;
        let n_docs = samples.len() as f64;
        let mut log_prior = [0.0; FIELD_COUNT];
        for c in 0..FIELD_COUNT {
            log_prior[c] = ((docs[c] as f64 + 1.0) / (n_docs + FIELD_COUNT as f64)).ln();
        }
        let log_likelihood = counts
            .into_iter()
            .map(|(tok, per_cat)| {
                let mut ll = [0.0; FIELD_COUNT];
                for c in 0..FIELD_COUNT {
                    ll[c] = ((per_cat[c] as f64 + 1.0) / (totals[c] as f64 + vocab)).ln();
                }
                (tok, ll)
            })
            .collect();
        Ok(BagOfWordsClassifier {
            log_prior,
            log_likelihood,
        })
    }

    /// Parses `category<TAB>text` lines; `#` starts a comment.
    pub fn parse_seed(contents: &str) -> Result<Vec<(String, usize)>> {
        let mut out = Vec::new();
        for (i, line) in contents.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (cat, text) = line.split_once('\t').ok_or_else(|| Error::Parse {
                file: "field seed".into(),
                line: i + 1,
                message: "expected category<TAB>text".into(),
            })?;
            let cat = cat.trim().parse().map_err(|_| Error::Parse {
                file: "field seed".into(),
                line: i + 1,
                message: format!("bad category {cat:?}"),
            })?;
            out.push((text.to_string(), cat));
        }
        Ok(out)
    }

    /// Labeled texts of the bundled seed file.
    pub fn bundled_samples() -> Vec<(String, usize)> {
        Self::parse_seed(SEED_FILE).expect("bundled seed parses")
    }

    /// Classifier trained on the bundled seed file.
    pub fn bundled() -> Self {
        Self::train(&Self::bundled_samples()).expect("bundled seed is non-empty")
    }
}

impl FieldClassifier for BagOfWordsClassifier {
    fn classify(&self, text: &str) -> [f64; FIELD_COUNT] {
        // out-of-vocabulary tokens are ignored
        let mut score = self.log_prior;
        for tok in tokenize(text) {
            if let Some(ll) = self.log_likelihood.get(&tok) {
                for c in 0..FIELD_COUNT {
                    score[c] += ll[c];
                }
            }
        }
        let max = score.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut out = [0.0; FIELD_COUNT];
        let mut z = 0.0;
        for c in 0..FIELD_COUNT {
            out[c] = (score[c] - max).exp();
            z += out[c];
        }
        out.iter_mut().for_each(|p| *p /= z);
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldVector {
    pub values: [f64; FIELD_COUNT],
    /// No publications to average over; `values` is all zeros.
    pub undefined: bool,
}

impl FieldVector {
    pub fn argmax(&self) -> Option<usize> {
        if self.undefined {
            return None;
        }
        let mut best = 0;
        for c in 1..FIELD_COUNT {
            if self.values[c] > self.values[best] {
                best = c;
            }
        }
        Some(best)
    }
}

/// Mean of per-publication classifier outputs.
pub fn field_vector<'a>(
    pubs: impl IntoIterator<Item = &'a Publication>,
    classifier: &dyn FieldClassifier,
) -> FieldVector {
    mean_field(pubs.into_iter().map(|p| classifier.classify(&p.text())))
}

pub(crate) fn mean_field(outputs: impl IntoIterator<Item = [f64; FIELD_COUNT]>) -> FieldVector {
    let mut sum = [0.0; FIELD_COUNT];
    let mut n = 0usize;
    for o in outputs {
        for c in 0..FIELD_COUNT {
            sum[c] += o[c];
        }
        n += 1;
    }
    if n == 0 {
        return FieldVector {
            values: sum,
            undefined: true,
        };
    }
    sum.iter_mut().for_each(|v| *v /= n as f64);
    FieldVector {
        values: sum,
        undefined: false,
    }
}
