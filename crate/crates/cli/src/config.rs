use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use career_forge::data::{Society, Year};
use career_forge::datasets::DatasetOptions;
use career_forge::factors::FeatureConfig;
use career_forge::nn::{ModelConfig, TrainConfig};
use career_forge::synth::GeneratorSpec;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::UsageError;

pub const DEFAULT_SEED: u64 = 42;

/// Everything a command may read. Loaded from the `--config` JSON file, then
/// overridden field by field by command-line flags.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub corpus: Option<PathBuf>,
    /// Where artifacts go; not part of the recorded configuration, so the
    /// same run into two directories yields identical manifests.
    #[serde(skip_serializing)]
    pub out: Option<PathBuf>,
    pub society: Option<Society>,
    /// A single year (`2016`) or an inclusive range (`2015..2019`).
    pub cy: Option<String>,
    pub seed: Option<u64>,
    /// Run the noise filter after loading a corpus.
    pub filter: Option<bool>,
    pub generator: Option<GeneratorSpec>,
    pub features: Option<FeatureConfig>,
    pub dataset: Option<DatasetOptions>,
    /// Overrides for the classification and regression model defaults.
    pub model: Option<serde_json::Value>,
    pub train: Option<TrainConfig>,
}

impl RunConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        serde_json::from_str(&text)
            .map_err(|e| UsageError(format!("config {}: {e}", path.display())).into())
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(DEFAULT_SEED)
    }

    pub fn corpus_dir(&self) -> anyhow::Result<&Path> {
        match &self.corpus {
            Some(p) if p.is_dir() => Ok(p),
            Some(p) => {
                Err(UsageError(format!("corpus directory {} does not exist", p.display())).into())
            }
            None => Err(UsageError("this command needs --corpus".into()).into()),
        }
    }

    pub fn out_dir(&self) -> anyhow::Result<&Path> {
        self.out
            .as_deref()
            .ok_or_else(|| UsageError("this command needs --out".into()).into())
    }

    pub fn years(&self) -> anyhow::Result<Option<Vec<Year>>> {
        self.cy.as_deref().map(parse_years).transpose()
    }

    /// The single calendar year of a command that takes one.
    pub fn year(&self) -> anyhow::Result<Option<Year>> {
        match self.years()? {
            None => Ok(None),
            Some(v) if v.len() == 1 => Ok(Some(v[0])),
            Some(_) => Err(UsageError("this command takes a single --cy year".into()).into()),
        }
    }

    pub fn features(&self) -> FeatureConfig {
        self.features.clone().unwrap_or_default()
    }

    pub fn dataset(&self) -> DatasetOptions {
        let mut d = self.dataset.clone().unwrap_or_default();
        if self.society.is_some() {
            d.society = self.society;
        }
        d
    }

    pub fn train(&self) -> TrainConfig {
        let mut t = self.train.clone().unwrap_or_default();
        t.seed = self.seed();
        t
    }

    /// `base` with the `model` section merged over it and the run seed.
    pub fn model(&self, base: ModelConfig) -> anyhow::Result<ModelConfig> {
        let mut cfg = match &self.model {
            None => base,
            Some(overrides) => {
                let mut v = serde_json::to_value(&base)?;
                let (serde_json::Value::Object(target), serde_json::Value::Object(src)) =
                    (&mut v, overrides)
                else {
                    bail!(UsageError("config `model` must be an object".into()));
                };
                for (k, val) in src {
                    target.insert(k.clone(), val.clone());
                }
                serde_json::from_value(v).map_err(|e| UsageError(format!("config `model`: {e}")))?
            }
        };
        cfg.seed = self.seed();
        Ok(cfg)
    }

    /// SHA-256 of the resolved configuration, recorded in every manifest.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(bytes))
    }
}

/// `2016` or `2015..2019` (inclusive).
pub fn parse_years(s: &str) -> anyhow::Result<Vec<Year>> {
    let bad = || UsageError(format!("--cy expects YEAR or FIRST..LAST, got {s:?}"));
    let years = match s.split_once("..") {
        Some((a, b)) => {
            let a: Year = a.trim().parse().map_err(|_| bad())?;
            let b: Year = b
                .trim()
                .trim_start_matches('=')
                .parse()
                .map_err(|_| bad())?;
            if b < a {
                return Err(bad().into());
            }
            (a..=b).collect()
        }
        None => vec![s.trim().parse().map_err(|_| bad())?],
    };
    Ok(years)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn year_ranges() {
        assert_eq!(parse_years("2016").unwrap(), vec![2016]);
        assert_eq!(parse_years("2015..2017").unwrap(), vec![2015, 2016, 2017]);
        assert_eq!(parse_years("2015..=2016").unwrap(), vec![2015, 2016]);
        assert!(parse_years("2017..2015").is_err());
        assert!(parse_years("soon").is_err());
    }

    #[test]
    fn model_overrides_merge() {
        let cfg = RunConfig {
            model: Some(serde_json::json!({ "n_layers": 2, "ffn_dim": 16 })),
            seed: Some(9),
            ..RunConfig::default()
        };
        let m = cfg.model(ModelConfig::classification()).unwrap();
        assert_eq!(m.n_layers, 2);
        assert_eq!(m.ffn_dim, 16);
        assert_eq!(m.n_heads, ModelConfig::classification().n_heads);
        assert_eq!(m.seed, 9);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.json");
        std::fs::write(&p, r#"{"sed": 3}"#).unwrap();
        assert!(RunConfig::load(&p)
            .unwrap_err()
            .downcast_ref::<UsageError>()
            .is_some());
    }

    #[test]
    fn hash_tracks_content() {
        let a = RunConfig::default();
        let b = RunConfig {
            seed: Some(7),
            ..RunConfig::default()
        };
        assert_eq!(a.hash(), RunConfig::default().hash());
        assert_ne!(a.hash(), b.hash());
    }
}
