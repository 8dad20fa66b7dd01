//! Single-layer LSTM sequence classifier.
//!
//! The four gates are stored stacked along the first axis in the order
//! input, forget, candidate, output, so `input_weights` is `4H x D`,
//! `recurrent_weights` is `4H x H` and `bias` has `4H` entries. The final
//! hidden state feeds a dense `C x H` layer followed by softmax.

mod backprop;
mod gradcheck;
mod io;
mod train;

use ndarray::{s, Array1, Array2, ArrayView1, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::landmark::{Label, Vocabulary, WindowMatrix};

pub use backprop::{batch_gradients, Gradients};
pub use gradcheck::{gradient_check, GradientCheckReport};
pub use io::{load_model, parse_model, save_model, write_model, MODEL_FORMAT_VERSION};
pub use train::{train, EpochStats, TrainConfig, TrainOutcome};

pub const DEFAULT_HIDDEN: usize = 64;

pub(crate) const GATE_NAMES: [&str; 4] = ["input", "forget", "candidate", "output"];

#[derive(Debug, Clone, PartialEq)]
pub struct SequenceClassifier {
    pub(crate) input_weights: Array2<f64>,
    pub(crate) recurrent_weights: Array2<f64>,
    pub(crate) bias: Array1<f64>,
    pub(crate) output_weights: Array2<f64>,
    pub(crate) output_bias: Array1<f64>,
    pub(crate) vocabulary: Vocabulary,
}

/// Softmax output over the model vocabulary.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbDistribution(Vec<f64>);

impl ProbDistribution {
    pub fn from_logits(logits: ArrayView1<'_, f64>) -> Self {
        let max = logits.fold(f64::NEG_INFINITY, |m, &v| m.max(v));
        let exps: Vec<f64> = logits.iter().map(|&v| (v - max).exp()).collect();
        let sum: f64 = exps.iter().sum();
        ProbDistribution(exps.into_iter().map(|e| e / sum).collect())
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.0
    }

    /// Index and value of the largest probability; ties go to the lowest index.
    pub fn argmax(&self) -> (usize, f64) {
        let mut best = (0, self.0[0]);
        for (i, &p) in self.0.iter().enumerate().skip(1) {
            if p > best.1 {
                best = (i, p);
            }
        }
        best
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub class: usize,
    pub label: Label,
    pub confidence: f64,
}

impl SequenceClassifier {
    pub fn zeros(input_dim: usize, hidden: usize, vocabulary: Vocabulary) -> Self {
        let classes = vocabulary.len();
        SequenceClassifier {
            input_weights: Array2::zeros((4 * hidden, input_dim)),
            recurrent_weights: Array2::zeros((4 * hidden, hidden)),
            bias: Array1::zeros(4 * hidden),
            output_weights: Array2::zeros((classes, hidden)),
            output_bias: Array1::zeros(classes),
            vocabulary,
        }
    }

    /// Gate weights drawn from `U(-1/sqrt(D+H), 1/sqrt(D+H))`, output weights
    /// from `U(-1/sqrt(H), 1/sqrt(H))`; biases zero except the forget gate at 1.
    pub fn init(input_dim: usize, hidden: usize, vocabulary: Vocabulary, seed: u64) -> Self {
        let mut model = Self::zeros(input_dim, hidden, vocabulary);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let gate_scale = 1.0 / ((input_dim + hidden) as f64).sqrt();
        let out_scale = 1.0 / (hidden as f64).sqrt();
        model
            .input_weights
            .mapv_inplace(|_| rng.random_range(-gate_scale..gate_scale));
        model
            .recurrent_weights
            .mapv_inplace(|_| rng.random_range(-gate_scale..gate_scale));
        model
            .output_weights
            .mapv_inplace(|_| rng.random_range(-out_scale..out_scale));
        model.bias.slice_mut(s![hidden..2 * hidden]).fill(1.0);
        model
    }

    pub fn input_dim(&self) -> usize {
        self.input_weights.ncols()
    }

    pub fn hidden(&self) -> usize {
        self.recurrent_weights.ncols()
    }

    pub fn classes(&self) -> usize {
        self.output_bias.len()
    }

    pub fn vocabulary(&self) -> &Vocabulary {
        &self.vocabulary
    }

    /// Assembles a model from explicit parameters, checking shapes and finiteness.
    pub fn from_parameters(
        input_weights: Array2<f64>,
        recurrent_weights: Array2<f64>,
        bias: Array1<f64>,
        output_weights: Array2<f64>,
        output_bias: Array1<f64>,
        vocabulary: Vocabulary,
    ) -> Result<Self> {
        if !input_weights.nrows().is_multiple_of(4) || input_weights.nrows() == 0 || input_weights.ncols() == 0 {
            return Err(Error::Shape(format!(
                "input weights are {}x{}, expected 4H x D",
                input_weights.nrows(),
                input_weights.ncols()
            )));
        }
        let model = SequenceClassifier {
            input_weights: input_weights.as_standard_layout().into_owned(),
            recurrent_weights: recurrent_weights.as_standard_layout().into_owned(),
            bias,
            output_weights: output_weights.as_standard_layout().into_owned(),
            output_bias,
            vocabulary,
        };
        model.check_consistent()?;
        Ok(model)
    }

    pub fn parameter_count(&self) -> usize {
        self.input_weights.len()
            + self.recurrent_weights.len()
            + self.bias.len()
            + self.output_weights.len()
            + self.output_bias.len()
    }

    /// Flat view over all parameters in a fixed order.
    pub(crate) fn parameters_mut(&mut self) -> [&mut [f64]; 5] {
        [
            self.input_weights.as_slice_mut().expect("standard layout"),
            self.recurrent_weights.as_slice_mut().expect("standard layout"),
            self.bias.as_slice_mut().expect("standard layout"),
            self.output_weights.as_slice_mut().expect("standard layout"),
            self.output_bias.as_slice_mut().expect("standard layout"),
        ]
    }

    pub(crate) fn check_consistent(&self) -> Result<()> {
        let h = self.hidden();
        let d = self.input_dim();
        let c = self.vocabulary.len();
        let ok = self.input_weights.dim() == (4 * h, d)
            && self.recurrent_weights.dim() == (4 * h, h)
            && self.bias.len() == 4 * h
            && self.output_weights.dim() == (c, h)
            && self.output_bias.len() == c;
        if !ok {
            return Err(Error::Shape("parameter shapes are mutually inconsistent".into()));
        }
        let finite = self
            .input_weights
            .iter()
            .chain(&self.recurrent_weights)
            .chain(&self.bias)
            .chain(&self.output_weights)
            .chain(&self.output_bias)
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::NonFiniteIntermediate { what: "parameter" });
        }
        Ok(())
    }

    /// Final hidden state after running the recurrence over rows oldest to newest.
    fn final_hidden(&self, matrix: &WindowMatrix) -> Result<Array1<f64>> {
        if matrix.dim() != self.input_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.input_dim(),
                actual: matrix.dim(),
            });
        }
        let h = self.hidden();
        let projected = matrix.data().dot(&self.input_weights.t());
        let mut hidden = Array1::<f64>::zeros(h);
        let mut cell = Array1::<f64>::zeros(h);
        for row in projected.axis_iter(Axis(0)) {
            let z = &row + &self.bias + self.recurrent_weights.dot(&hidden);
            for j in 0..h {
                let i = sigmoid(z[j]);
                let f = sigmoid(z[h + j]);
                let g = z[2 * h + j].tanh();
                let o = sigmoid(z[3 * h + j]);
                cell[j] = f * cell[j] + i * g;
                hidden[j] = o * cell[j].tanh();
            }
        }
        Ok(hidden)
    }

    pub fn logits(&self, matrix: &WindowMatrix) -> Result<Array1<f64>> {
        let hidden = self.final_hidden(matrix)?;
        let logits = self.output_weights.dot(&hidden) + &self.output_bias;
        if logits.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteIntermediate { what: "logit" });
        }
        Ok(logits)
    }

    pub fn forward(&self, matrix: &WindowMatrix) -> Result<ProbDistribution> {
        Ok(ProbDistribution::from_logits(self.logits(matrix)?.view()))
    }

    pub fn predict(&self, matrix: &WindowMatrix) -> Result<Prediction> {
        let dist = self.forward(matrix)?;
        let (class, confidence) = dist.argmax();
        Ok(Prediction {
            class,
            label: self.vocabulary.label(class).clone(),
            confidence,
        })
    }
}

#[inline]
pub(crate) fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}
