use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::backprop::{batch_gradients, sample_loss};
use super::SequenceClassifier;
use crate::error::{Error, Result};
use crate::landmark::WindowMatrix;

/// Minimum number of parameters compared (all of them for smaller models).
pub const MIN_CHECKED_PARAMETERS: usize = 200;

/// Denominator floor for the relative error, so that two near-zero gradients
/// do not produce a huge ratio out of rounding noise.
const RELATIVE_FLOOR: f64 = 1e-7;

#[derive(Debug, Clone)]
pub struct GradientCheckReport {
    pub max_relative_error: f64,
    pub checked: usize,
    /// Flat parameter index of the worst disagreement.
    pub worst_index: usize,
    pub worst_analytic: f64,
    pub worst_numeric: f64,
}

/// Compares BPTT gradients with central differences `(L(p+e) - L(p-e)) / 2e`
/// on a seeded random subset of at least [`MIN_CHECKED_PARAMETERS`] parameters.
pub fn gradient_check(
    model: &SequenceClassifier,
    matrix: &WindowMatrix,
    class: usize,
    epsilon: f64,
    seed: u64,
) -> Result<GradientCheckReport> {
    if epsilon.is_nan() || epsilon <= 0.0 {
        return Err(Error::InvalidArgument(format!("epsilon must be positive, got {epsilon}")));
    }
    let (_, grads) = batch_gradients(model, &[(matrix, class)])?;
    let analytic: Vec<f64> = grads.slices().concat();

    let total = model.parameter_count();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picked = index::sample(&mut rng, total, total.min(MIN_CHECKED_PARAMETERS)).into_vec();
    picked.sort_unstable();

    let mut probe = model.clone();
    let mut report = GradientCheckReport {
        max_relative_error: 0.0,
        checked: picked.len(),
        worst_index: 0,
        worst_analytic: 0.0,
        worst_numeric: 0.0,
    };
    for &flat in &picked {
        let original = read_param(&mut probe, flat);
        write_param(&mut probe, flat, original + epsilon);
        let plus = sample_loss(&probe, matrix, class)?;
        write_param(&mut probe, flat, original - epsilon);
        let minus = sample_loss(&probe, matrix, class)?;
        write_param(&mut probe, flat, original);

        let numeric = (plus - minus) / (2.0 * epsilon);
        let a = analytic[flat];
        let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(RELATIVE_FLOOR);
        if rel > report.max_relative_error {
            report.max_relative_error = rel;
            report.worst_index = flat;
            report.worst_analytic = a;
            report.worst_numeric = numeric;
        }
    }
    Ok(report)
}

fn locate(model: &mut SequenceClassifier, mut flat: usize) -> (&mut [f64], usize) {
    for tensor in model.parameters_mut() {
        if flat < tensor.len() {
            return (tensor, flat);
        }
        flat -= tensor.len();
    }
    panic!("parameter index out of range");
}

fn read_param(model: &mut SequenceClassifier, flat: usize) -> f64 {
    let (t, i) = locate(model, flat);
    t[i]
}

fn write_param(model: &mut SequenceClassifier, flat: usize, value: f64) {
    let (t, i) = locate(model, flat);
    t[i] = value;
}
