//! Minibatch training with a deterministic gradient reduction order.

use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::model::{CareerModel, ExampleView, HeadType};
use super::optim::{Adam, AdamConfig};
use super::params::Gradients;
use super::tape::Tape;
use crate::error::{Error, Result};
use crate::metrics::{f1_score, mean_absolute_error};
use crate::scalar::Scalar;

/// Examples per parallel work unit. Fixed so that the summation order, and
/// therefore the result, does not depend on the thread count.
const CHUNK: usize = 8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub seed: u64,
    /// Record wall-clock seconds in the report. Off by default so reports
    /// are byte-reproducible.
    pub record_timing: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 1e-3,
            batch_size: 128,
            epochs: 20,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            seed: 42,
            record_timing: false,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0) || self.batch_size == 0 || self.epochs == 0 {
            return Err(Error::Config(
                "learning rate, batch size and epochs must be positive".into(),
            ));
        }
        if !(0.0..1.0).contains(&self.beta1)
            || !(0.0..1.0).contains(&self.beta2)
            || !(self.epsilon > 0.0)
        {
            return Err(Error::Config("invalid Adam coefficients".into()));
        }
        Ok(())
    }

    fn adam(&self) -> AdamConfig {
        AdamConfig {
            learning_rate: self.learning_rate,
            beta1: self.beta1,
            beta2: self.beta2,
            epsilon: self.epsilon,
        }
    }
}

/// One training input with its label (0/1) or regression target.
#[derive(Debug, Clone, Copy)]
pub struct Sample<'a, T> {
    pub view: ExampleView<'a, T>,
    pub target: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub loss: f64,
    /// F1 (classification) or MAE (regression) of the predictions made while
    /// training, i.e. with dropout active.
    pub train_metric: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub valid_metric: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seconds: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub metric: String,
    pub epochs: Vec<EpochRecord>,
    /// Epoch whose weights were kept (1-based).
    pub best_epoch: usize,
    pub steps: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub total_seconds: Option<f64>,
}

impl TrainReport {
    pub fn final_loss(&self) -> f64 {
        self.epochs.last().map_or(f64::NAN, |e| e.loss)
    }
}

fn mix(a: u64, b: u64) -> u64 {
    let mut z = a ^ b.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Loss and parameter gradient for one example. `dropout_seed = None` runs
/// the deterministic (evaluation) forward pass.
pub fn example_gradient<T: Scalar>(
    model: &CareerModel<T>,
    sample: &Sample<'_, T>,
    dropout_seed: Option<u64>,
) -> Result<(T, Gradients<T>, Vec<T>)> {
    let mut tape = Tape::new(model.params());
    let mut rng = dropout_seed.map(ChaCha8Rng::seed_from_u64);
    let trace = model.forward_tape(&mut tape, &sample.view, rng.as_mut())?;
    let output = tape.value(trace.output).data().to_vec();
    let loss = match model.config().head {
        HeadType::Classification => {
            let class = if sample.target > 0.5 { 1 } else { 0 };
            tape.cross_entropy(trace.output, class)
        }
        HeadType::Regression => tape.abs_error(trace.output, T::lit(sample.target)),
    };
    let value = tape.value(loss).data()[0];
    Ok((value, tape.backward(loss), output))
}

fn metric_name(head: HeadType) -> &'static str {
    match head {
        HeadType::Classification => "f1",
        HeadType::Regression => "mae",
    }
}

fn score(head: HeadType, truth: &[f64], outputs: &[Vec<f64>]) -> f64 {
    match head {
        HeadType::Classification => {
            let t: Vec<u8> = truth.iter().map(|&y| u8::from(y > 0.5)).collect();
            let p: Vec<u8> = outputs.iter().map(|o| u8::from(o[1] > o[0])).collect();
            f1_score(&t, &p)
        }
        HeadType::Regression => {
            let p: Vec<f64> = outputs.iter().map(|o| o[0]).collect();
            mean_absolute_error(truth, &p)
        }
    }
}

/// F1 or MAE of `model` on `samples` without dropout.
pub fn evaluate<T: Scalar>(model: &CareerModel<T>, samples: &[Sample<'_, T>]) -> Result<f64> {
    let outputs = samples
        .par_iter()
        .map(|s| {
            model
                .forward(&s.view)
                .map(|o| o.iter().map(|v| v.as_f64()).collect())
        })
        .collect::<Result<Vec<Vec<f64>>>>()?;
    let truth: Vec<f64> = samples.iter().map(|s| s.target).collect();
    Ok(score(model.config().head, &truth, &outputs))
}

fn better(head: HeadType, candidate: f64, incumbent: f64) -> bool {
    match head {
        HeadType::Classification => candidate > incumbent,
        HeadType::Regression => candidate < incumbent,
    }
}

/// Trains `model` in place. With a validation set, the weights of the best
/// validation epoch are restored at the end.
pub fn train<T: Scalar>(
    model: &mut CareerModel<T>,
    samples: &[Sample<'_, T>],
    valid: Option<&[Sample<'_, T>]>,
    config: &TrainConfig,
) -> Result<TrainReport> {
    config.validate()?;
    if samples.is_empty() {
        return Err(Error::InsufficientData("empty training set".into()));
    }
    let head = model.config().head;
    let started = Instant::now();
    let mut adam = Adam::new(config.adam(), model.params());
    let mut order: Vec<usize> = (0..samples.len()).collect();
    let mut epochs = Vec::with_capacity(config.epochs);
    let mut best: Option<(f64, usize, _)> = None;

    for epoch in 1..=config.epochs {
        let epoch_start = Instant::now();
        let mut shuffle = ChaCha8Rng::seed_from_u64(mix(config.seed, epoch as u64));
        order.shuffle(&mut shuffle);
        let mut loss_sum = 0.0;
        let mut outputs = vec![Vec::new(); samples.len()];

        for (batch_no, batch) in order.chunks(config.batch_size).enumerate() {
            let model_ref = &*model;
            let parts = batch
                .par_chunks(CHUNK)
                .map(
                    |chunk| -> Result<(T, Gradients<T>, Vec<(usize, Vec<f64>)>)> {
                        let mut acc = Gradients::zeros_like(model_ref.params());
                        let mut loss = T::zero();
                        let mut outs = Vec::with_capacity(chunk.len());
                        for &i in chunk {
                            let seed = mix(mix(config.seed, epoch as u64), i as u64 + 1);
                            let (l, g, o) = example_gradient(model_ref, &samples[i], Some(seed))?;
                            loss = loss + l;
                            acc.add_assign(&g);
                            outs.push((i, o.iter().map(|v| v.as_f64()).collect()));
                        }
                        Ok((loss, acc, outs))
                    },
                )
                .collect::<Result<Vec<_>>>()?;

            let mut grads = Gradients::zeros_like(model.params());
            let mut batch_loss = T::zero();
            for (l, g, outs) in parts {
                batch_loss = batch_loss + l;
                grads.add_assign(&g);
                for (i, o) in outs {
                    outputs[i] = o;
                }
            }
            let n = T::from_usize_lossy(batch.len());
            grads.scale(n.recip());
            let batch_loss = (batch_loss / n).as_f64();
            let grad_norm = grads.norm().as_f64();
            if !batch_loss.is_finite() || !grad_norm.is_finite() {
                let norms: Vec<String> = model
                    .params()
                    .iter()
                    .zip(&grads.grads)
                    .map(|((_, name, _), g)| {
                        format!("{name}={:.3e}", g.squared_norm().as_f64().sqrt())
                    })
                    .collect();
                return Err(Error::Diverged {
                    epoch,
                    batch: batch_no,
                    detail: format!("loss {batch_loss}, grad norms [{}]", norms.join(", ")),
                });
            }
            loss_sum += batch_loss * batch.len() as f64;
            adam.update(model.params_mut(), &grads);
        }

        let truth: Vec<f64> = samples.iter().map(|s| s.target).collect();
        let train_metric = score(head, &truth, &outputs);
        let valid_metric = match valid {
            Some(v) if !v.is_empty() => Some(evaluate(model, v)?),
            _ => None,
        };
        let loss = loss_sum / samples.len() as f64;
        log::info!(
            "epoch {epoch}: loss {loss:.5} train {} {train_metric:.4}{}",
            metric_name(head),
            valid_metric.map_or(String::new(), |m| format!(" valid {m:.4}"))
        );
        if let Some(m) = valid_metric {
            if best.as_ref().is_none_or(|(b, _, _)| better(head, m, *b)) {
                best = Some((m, epoch, model.params().clone()));
            }
        }
        epochs.push(EpochRecord {
            epoch,
            loss,
            train_metric,
            valid_metric,
            seconds: config
                .record_timing
                .then(|| epoch_start.elapsed().as_secs_f64()),
        });
    }

    let best_epoch = match best {
        Some((_, epoch, params)) => {
            *model.params_mut() = params;
            epoch
        }
        None => config.epochs,
    };
    Ok(TrainReport {
        metric: metric_name(head).to_string(),
        epochs,
        best_epoch,
        steps: adam.steps() as usize,
        total_seconds: config
            .record_timing
            .then(|| started.elapsed().as_secs_f64()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::model::ModelConfig;
    use crate::tensor::Tensor;
    use rand::Rng;

    fn config(head: HeadType) -> ModelConfig {
        ModelConfig {
            n_layers: 1,
            n_heads: 2,
            ffn_dim: 8,
            dropout: 0.0,
            t_max: 4,
            ..ModelConfig::for_head(head)
        }
    }

    fn planted(n: usize, seed: u64) -> Vec<(Tensor<f64>, Vec<bool>, f64)> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| {
                let m = Tensor::from_fn(4, 36, |_, _| rng.random_range(-1.0..1.0));
                let s: f64 = (0..4).map(|r| m.at(r, 0)).sum();
                (m, vec![true; 4], s)
            })
            .collect()
    }

    #[test]
    fn learns_separable_classes() {
        let data: Vec<_> = planted(256, 1)
            .into_iter()
            .filter(|(_, _, s)| s.abs() > 0.3)
            .collect();
        let samples: Vec<Sample<f64>> = data
            .iter()
            .map(|(m, mask, s)| Sample {
                view: ExampleView::new(m, mask),
                target: f64::from(u8::from(*s > 0.0)),
            })
            .collect();
        let mut model = CareerModel::new(config(HeadType::Classification)).unwrap();
        let cfg = TrainConfig {
            learning_rate: 1e-2,
            batch_size: 32,
            epochs: 30,
            ..TrainConfig::default()
        };
        train(&mut model, &samples, None, &cfg).unwrap();
        assert!(evaluate(&model, &samples).unwrap() >= 0.99);
    }

    #[test]
    fn same_seed_same_loss() {
        let data = planted(40, 2);
        let samples: Vec<Sample<f64>> = data
            .iter()
            .map(|(m, mask, s)| Sample {
                view: ExampleView::new(m, mask),
                target: *s,
            })
            .collect();
        let cfg = TrainConfig {
            batch_size: 16,
            epochs: 2,
            ..TrainConfig::default()
        };
        let run = || {
            let mut model = CareerModel::new(ModelConfig {
                dropout: 0.1,
                ..config(HeadType::Regression)
            })
            .unwrap();
            train(&mut model, &samples, None, &cfg).unwrap()
        };
        let (a, b) = (run(), run());
        assert_eq!(a.final_loss().to_bits(), b.final_loss().to_bits());
        assert_eq!(a, b);
    }

    #[test]
    fn divergence_is_reported() {
        let data = planted(8, 3);
        let samples: Vec<Sample<f64>> = data
            .iter()
            .map(|(m, mask, _)| Sample {
                view: ExampleView::new(m, mask),
                target: f64::NAN,
            })
            .collect();
        let mut model = CareerModel::new(config(HeadType::Regression)).unwrap();
        let err = train(&mut model, &samples, None, &TrainConfig::default()).unwrap_err();
        assert!(matches!(
            err,
            Error::Diverged {
                epoch: 1,
                batch: 0,
                ..
            }
        ));
    }
}
