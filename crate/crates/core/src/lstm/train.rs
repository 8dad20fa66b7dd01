use std::io::Write;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::backprop::run_batch;
use super::SequenceClassifier;
use crate::error::{Error, Result};
use crate::landmark::{Dataset, WindowMatrix};

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub beta1: f64,
    pub beta2: f64,
    pub adam_epsilon: f64,
    pub seed: u64,
    /// Fraction of each class held out for validation, in `[0, 1)`.
    pub validation_fraction: f64,
    /// Stop once training accuracy reaches this value.
    pub target_accuracy: Option<f64>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 200,
            learning_rate: 1e-3,
            batch_size: 16,
            beta1: 0.9,
            beta2: 0.999,
            adam_epsilon: 1e-8,
            seed: 0,
            validation_fraction: 0.0,
            target_accuracy: None,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if self.epochs == 0 {
            return bad("epochs must be >= 1".into());
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return bad(format!("learning rate must be > 0, got {}", self.learning_rate));
        }
        if self.batch_size == 0 {
            return bad("batch size must be >= 1".into());
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return bad("adam betas must lie in [0, 1)".into());
        }
        if !(0.0..1.0).contains(&self.validation_fraction) {
            return bad(format!(
                "validation fraction {} outside [0, 1)",
                self.validation_fraction
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochStats {
    pub epoch: usize,
    /// Mean cross-entropy over the epoch's mini-batches.
    pub loss: f64,
    /// Fraction of training samples classified correctly by the mini-batch
    /// forward passes during the epoch.
    pub accuracy: f64,
    pub validation_accuracy: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: SequenceClassifier,
    pub history: Vec<EpochStats>,
}

impl TrainOutcome {
    /// `epoch,loss,accuracy` rows with a header line.
    pub fn write_history_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "epoch,loss,accuracy")?;
        for s in &self.history {
            writeln!(out, "{},{},{}", s.epoch, s.loss, s.accuracy)?;
        }
        Ok(())
    }
}

struct Adam {
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
    step: i32,
}

impl Adam {
    fn new(model: &mut SequenceClassifier) -> Self {
        let sizes: Vec<usize> = model.parameters_mut().iter().map(|t| t.len()).collect();
        Adam {
            m: sizes.iter().map(|&n| vec![0.0; n]).collect(),
            v: sizes.iter().map(|&n| vec![0.0; n]).collect(),
            step: 0,
        }
    }

    fn update(&mut self, model: &mut SequenceClassifier, grads: [&[f64]; 5], cfg: &TrainConfig) {
        self.step += 1;
        let c1 = 1.0 - cfg.beta1.powi(self.step);
        let c2 = 1.0 - cfg.beta2.powi(self.step);
        for (k, params) in model.parameters_mut().into_iter().enumerate() {
            let (m, v, g) = (&mut self.m[k], &mut self.v[k], grads[k]);
            for i in 0..params.len() {
                m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
                v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
                let m_hat = m[i] / c1;
                let v_hat = v[i] / c2;
                params[i] -= cfg.learning_rate * m_hat / (v_hat.sqrt() + cfg.adam_epsilon);
            }
        }
    }
}

fn labelled(dataset: &Dataset) -> Vec<(&WindowMatrix, usize)> {
    dataset
        .samples()
        .iter()
        .map(|s| (&s.matrix, dataset.class_index(s)))
        .collect()
}

/// Accuracy of `model` on `samples`, evaluated in batches.
pub(crate) fn batch_accuracy(model: &SequenceClassifier, samples: &[(&WindowMatrix, usize)]) -> Result<f64> {
    if samples.is_empty() {
        return Ok(0.0);
    }
    let mut correct = 0;
    for chunk in samples.chunks(64) {
        correct += run_batch(model, chunk)?.correct;
    }
    Ok(correct as f64 / samples.len() as f64)
}

/// Mini-batch Adam on mean cross-entropy. Fully determined by `model`,
/// `dataset` and `config.seed`.
pub fn train(mut model: SequenceClassifier, dataset: &Dataset, config: &TrainConfig) -> Result<TrainOutcome> {
    config.validate()?;
    if dataset.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if dataset.vocabulary() != model.vocabulary() {
        return Err(Error::InvalidArgument("dataset and model vocabularies differ".into()));
    }
    if let Some((_, d)) = dataset.shape() {
        if d != model.input_dim() {
            return Err(Error::DimensionMismatch {
                expected: model.input_dim(),
                actual: d,
            });
        }
    }
    model.check_consistent()?;

    let (train_set, validation_set) = if config.validation_fraction > 0.0 {
        let (a, b) = dataset.split(config.validation_fraction, config.seed)?;
        (a, Some(b))
    } else {
        (dataset.clone(), None)
    };
    if train_set.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let samples = labelled(&train_set);
    let validation = validation_set.as_ref().map(labelled);

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut adam = Adam::new(&mut model);
    let mut order: Vec<usize> = (0..samples.len()).collect();
    let mut history = Vec::with_capacity(config.epochs);

    for epoch in 1..=config.epochs {
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        let mut correct = 0;
        for chunk in order.chunks(config.batch_size) {
            let batch: Vec<(&WindowMatrix, usize)> = chunk.iter().map(|&i| samples[i]).collect();
            let result = match run_batch(&model, &batch) {
                Ok(r) => r,
                Err(Error::NonFiniteIntermediate { .. }) => return Err(Error::Diverged { epoch }),
                Err(e) => return Err(e),
            };
            loss_sum += result.loss_sum;
            correct += result.correct;
            adam.update(&mut model, result.gradients.slices(), config);
        }
        let loss = loss_sum / samples.len() as f64;
        if !loss.is_finite() {
            return Err(Error::Diverged { epoch });
        }
        let accuracy = correct as f64 / samples.len() as f64;
        let validation_accuracy = match &validation {
            Some(v) if !v.is_empty() => Some(batch_accuracy(&model, v)?),
            _ => None,
        };
        tracing::debug!(epoch, loss, accuracy, "epoch finished");
        history.push(EpochStats {
            epoch,
            loss,
            accuracy,
            validation_accuracy,
        });
        if config.target_accuracy.is_some_and(|target| accuracy >= target) {
            break;
        }
    }
    Ok(TrainOutcome { model, history })
}

#[cfg(test)]
mod tests {
    use ndarray::Array2;
    use rand::Rng;

    use super::*;
    use crate::landmark::{GestureSample, Vocabulary};

    fn toy_dataset(per_class: usize, classes: &[&str]) -> Dataset {
        let vocab = Vocabulary::from_names(&["idle", "up", "down"], "idle").unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let mut ds = Dataset::new(vocab);
        for &label in classes {
            let slope = match label {
                "up" => 1.0,
                "down" => -1.0,
                _ => 0.0,
            };
            for _ in 0..per_class {
                let m = Array2::from_shape_fn((6, 4), |(t, j)| {
                    slope * t as f64 / 6.0 + 0.1 * j as f64 + rng.random_range(-0.05..0.05)
                });
                ds.push(GestureSample {
                    label: label.into(),
                    matrix: WindowMatrix::new(m).unwrap(),
                })
                .unwrap();
            }
        }
        ds
    }

    fn config(epochs: usize, seed: u64) -> TrainConfig {
        TrainConfig {
            epochs,
            learning_rate: 1e-2,
            batch_size: 4,
            seed,
            ..TrainConfig::default()
        }
    }

    #[test]
    fn learns_toy_problem() {
        let ds = toy_dataset(10, &["idle", "up", "down"]);
        let model = SequenceClassifier::init(4, 8, ds.vocabulary().clone(), 1);
        let out = train(model, &ds, &config(60, 2)).unwrap();
        assert_eq!(out.history.len(), 60);
        let last = out.history.last().unwrap();
        assert_eq!(last.accuracy, 1.0);
        assert!(last.loss < out.history[0].loss);
        assert!(out.history.iter().all(|s| s.loss.is_finite()));
    }

    #[test]
    fn seeded_runs_are_identical() {
        let ds = toy_dataset(5, &["idle", "up", "down"]);
        let run = || {
            let model = SequenceClassifier::init(4, 5, ds.vocabulary().clone(), 3);
            train(model, &ds, &config(5, 9)).unwrap()
        };
        let (a, b) = (run(), run());
        assert_eq!(a.history, b.history);
        assert_eq!(a.model, b.model);
    }

    #[test]
    fn single_class_is_memorised() {
        let ds = toy_dataset(8, &["down"]);
        let model = SequenceClassifier::init(4, 5, ds.vocabulary().clone(), 4);
        let out = train(model, &ds, &config(30, 1)).unwrap();
        for s in ds.samples() {
            assert_eq!(out.model.predict(&s.matrix).unwrap().label.as_str(), "down");
        }
    }

    #[test]
    fn early_stop_at_target() {
        let ds = toy_dataset(10, &["idle", "up", "down"]);
        let model = SequenceClassifier::init(4, 8, ds.vocabulary().clone(), 1);
        let cfg = TrainConfig {
            target_accuracy: Some(0.9),
            ..config(200, 2)
        };
        let out = train(model, &ds, &cfg).unwrap();
        assert!(out.history.len() < 200);
        assert!(out.history.last().unwrap().accuracy >= 0.9);
    }

    #[test]
    fn empty_dataset_is_rejected() {
        let ds = Dataset::new(Vocabulary::from_names(&["idle", "up", "down"], "idle").unwrap());
        let model = SequenceClassifier::init(4, 5, ds.vocabulary().clone(), 0);
        assert!(matches!(train(model, &ds, &config(1, 0)), Err(Error::EmptyDataset)));
    }

    #[test]
    fn divergence_reports_epoch() {
        let ds = toy_dataset(2, &["up"]);
        let mut model = SequenceClassifier::init(4, 5, ds.vocabulary().clone(), 0);
        model.output_bias[0] = f64::INFINITY;
        // check_consistent catches the poisoned parameter before epoch 1
        assert!(train(model, &ds, &config(3, 0)).is_err());

        let model = SequenceClassifier::init(4, 5, ds.vocabulary().clone(), 0);
        let cfg = TrainConfig {
            learning_rate: 1e300,
            ..config(5, 0)
        };
        match train(model, &ds, &cfg) {
            Err(Error::Diverged { epoch }) => assert!(epoch >= 1),
            Ok(_) => {}
            Err(e) => panic!("unexpected {e:?}"),
        }
    }

    #[test]
    fn invalid_config_is_rejected() {
        assert!(TrainConfig { epochs: 0, ..TrainConfig::default() }.validate().is_err());
        assert!(TrainConfig { learning_rate: 0.0, ..TrainConfig::default() }.validate().is_err());
        assert!(TrainConfig { validation_fraction: 1.0, ..TrainConfig::default() }.validate().is_err());
    }

    #[test]
    fn history_csv_has_three_columns() {
        let ds = toy_dataset(2, &["up", "down"]);
        let model = SequenceClassifier::init(4, 3, ds.vocabulary().clone(), 0);
        let out = train(model, &ds, &config(2, 0)).unwrap();
        let mut buf = Vec::new();
        out.write_history_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "epoch,loss,accuracy");
        assert_eq!(lines.len(), 3);
        assert!(lines[1].starts_with("1,"));
    }
}
