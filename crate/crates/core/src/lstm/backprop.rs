use ndarray::{s, Array1, Array2, Axis, Zip};

use super::{sigmoid, SequenceClassifier};
use crate::error::{Error, Result};
use crate::landmark::WindowMatrix;

/// Gradients of the mean cross-entropy over a batch, shaped like the model.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub input_weights: Array2<f64>,
    pub recurrent_weights: Array2<f64>,
    pub bias: Array1<f64>,
    pub output_weights: Array2<f64>,
    pub output_bias: Array1<f64>,
}

impl Gradients {
    pub(crate) fn slices(&self) -> [&[f64]; 5] {
        [
            self.input_weights.as_slice().expect("standard layout"),
            self.recurrent_weights.as_slice().expect("standard layout"),
            self.bias.as_slice().expect("standard layout"),
            self.output_weights.as_slice().expect("standard layout"),
            self.output_bias.as_slice().expect("standard layout"),
        ]
    }
}

pub(crate) struct BatchResult {
    /// Sum (not mean) of per-sample cross-entropy.
    pub loss_sum: f64,
    pub correct: usize,
    pub gradients: Gradients,
}

/// Mean cross-entropy loss and its gradient for `batch`, each entry a window
/// and its true class index. All windows must share `T` and `D`.
pub fn batch_gradients(
    model: &SequenceClassifier,
    batch: &[(&WindowMatrix, usize)],
) -> Result<(f64, Gradients)> {
    let r = run_batch(model, batch)?;
    Ok((r.loss_sum / batch.len() as f64, r.gradients))
}

pub(crate) fn run_batch(
    model: &SequenceClassifier,
    batch: &[(&WindowMatrix, usize)],
) -> Result<BatchResult> {
    let b = batch.len();
    if b == 0 {
        return Err(Error::EmptyInput("batch"));
    }
    let d = model.input_dim();
    let h = model.hidden();
    let c = model.classes();
    let t_len = batch[0].0.frames();
    for (m, class) in batch {
        if m.dim() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                actual: m.dim(),
            });
        }
        if m.frames() != t_len {
            return Err(Error::Shape("batch windows differ in length".into()));
        }
        if *class >= c {
            return Err(Error::InvalidArgument(format!("class index {class} >= {c}")));
        }
    }

    // Row t * B + b holds frame t of sample b.
    let mut inputs = Array2::<f64>::zeros((t_len * b, d));
    for (bi, (m, _)) in batch.iter().enumerate() {
        for t in 0..t_len {
            inputs.row_mut(t * b + bi).assign(&m.row(t));
        }
    }
    let projected = inputs.dot(&model.input_weights.t());

    // Activated gates per step: [i | f | g | o], B x 4H.
    let mut gates: Vec<Array2<f64>> = Vec::with_capacity(t_len);
    let mut cells: Vec<Array2<f64>> = Vec::with_capacity(t_len + 1);
    let mut hiddens: Vec<Array2<f64>> = Vec::with_capacity(t_len + 1);
    cells.push(Array2::zeros((b, h)));
    hiddens.push(Array2::zeros((b, h)));

    for t in 0..t_len {
        let mut z = projected.slice(s![t * b..(t + 1) * b, ..]).to_owned();
        z += &model.bias;
        z += &hiddens[t].dot(&model.recurrent_weights.t());
        let mut cell = Array2::<f64>::zeros((b, h));
        let mut hidden = Array2::<f64>::zeros((b, h));
        {
            let zs = z.as_slice_mut().expect("standard layout");
            let prev = cells[t].as_slice().expect("standard layout");
            let cs = cell.as_slice_mut().expect("standard layout");
            let hs = hidden.as_slice_mut().expect("standard layout");
            for bi in 0..b {
                let zr = &mut zs[bi * 4 * h..(bi + 1) * 4 * h];
                let (zi, rest) = zr.split_at_mut(h);
                let (zf, rest) = rest.split_at_mut(h);
                let (zg, zo) = rest.split_at_mut(h);
                let prev = &prev[bi * h..(bi + 1) * h];
                let cr = &mut cs[bi * h..(bi + 1) * h];
                let hr = &mut hs[bi * h..(bi + 1) * h];
                for j in 0..h {
                    let i = sigmoid(zi[j]);
                    let f = sigmoid(zf[j]);
                    let g = zg[j].tanh();
                    let o = sigmoid(zo[j]);
                    zi[j] = i;
                    zf[j] = f;
                    zg[j] = g;
                    zo[j] = o;
                    let cv = f * prev[j] + i * g;
                    cr[j] = cv;
                    hr[j] = o * cv.tanh();
                }
            }
        }
        gates.push(z);
        cells.push(cell);
        hiddens.push(hidden);
    }

    let last = &hiddens[t_len];
    let mut logits = last.dot(&model.output_weights.t());
    logits += &model.output_bias;
    if logits.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteIntermediate { what: "logit" });
    }

    // d(mean CE)/d(logits) = (p - y) / B
    let mut loss_sum = 0.0;
    let mut correct = 0;
    let mut dlogits = Array2::<f64>::zeros((b, c));
    for (bi, (_, class)) in batch.iter().enumerate() {
        let row = logits.row(bi);
        let max = row.fold(f64::NEG_INFINITY, |m, &v| m.max(v));
        let sum: f64 = row.iter().map(|&v| (v - max).exp()).sum();
        let log_norm = max + sum.ln();
        loss_sum += log_norm - row[*class];
        let mut best = 0;
        for k in 0..c {
            let p = (row[k] - log_norm).exp();
            dlogits[[bi, k]] = (p - if k == *class { 1.0 } else { 0.0 }) / b as f64;
            if row[k] > row[best] {
                best = k;
            }
        }
        if best == *class {
            correct += 1;
        }
    }

    let d_output_weights = dlogits.t().dot(last);
    let d_output_bias = dlogits.sum_axis(Axis(0));
    let mut dh = dlogits.dot(&model.output_weights);
    let mut dc = Array2::<f64>::zeros((b, h));

    let mut dz_all = Array2::<f64>::zeros((t_len * b, 4 * h));
    let mut d_recurrent = Array2::<f64>::zeros((4 * h, h));
    for t in (0..t_len).rev() {
        let g = &gates[t];
        let c_prev = &cells[t];
        let c_cur = &cells[t + 1];
        {
            let gs = g.as_slice().expect("standard layout");
            let cp = c_prev.as_slice().expect("standard layout");
            let cc = c_cur.as_slice().expect("standard layout");
            let dhs = dh.as_slice().expect("standard layout");
            let dcs = dc.as_slice_mut().expect("standard layout");
            let dzs = &mut dz_all.as_slice_mut().expect("standard layout")[t * b * 4 * h..(t + 1) * b * 4 * h];
            for bi in 0..b {
                let gr = &gs[bi * 4 * h..(bi + 1) * 4 * h];
                let dzr = &mut dzs[bi * 4 * h..(bi + 1) * 4 * h];
                let row = bi * h..(bi + 1) * h;
                let (cp, cc, dhr) = (&cp[row.clone()], &cc[row.clone()], &dhs[row.clone()]);
                let dcr = &mut dcs[row];
                for j in 0..h {
                    let i = gr[j];
                    let f = gr[h + j];
                    let cand = gr[2 * h + j];
                    let o = gr[3 * h + j];
                    let tc = cc[j].tanh();
                    let dhv = dhr[j];
                    let dcv = dcr[j] + dhv * o * (1.0 - tc * tc);
                    dzr[j] = dcv * cand * i * (1.0 - i);
                    dzr[h + j] = dcv * cp[j] * f * (1.0 - f);
                    dzr[2 * h + j] = dcv * i * (1.0 - cand * cand);
                    dzr[3 * h + j] = dhv * tc * o * (1.0 - o);
                    dcr[j] = dcv * f;
                }
            }
        }
        let dz = dz_all.slice(s![t * b..(t + 1) * b, ..]);
        ndarray::linalg::general_mat_mul(1.0, &dz.t(), &hiddens[t], 1.0, &mut d_recurrent);
        dh = dz.dot(&model.recurrent_weights);
    }
    let d_input = dz_all.t().dot(&inputs);
    let d_bias = dz_all.sum_axis(Axis(0));

    let gradients = Gradients {
        input_weights: d_input,
        recurrent_weights: d_recurrent,
        bias: d_bias,
        output_weights: d_output_weights,
        output_bias: d_output_bias,
    };
    let finite = gradients.slices().iter().all(|s| s.iter().all(|v| v.is_finite()));
    if !finite || !loss_sum.is_finite() {
        return Err(Error::NonFiniteIntermediate { what: "gradient" });
    }
    Ok(BatchResult {
        loss_sum,
        correct,
        gradients,
    })
}

/// Cross-entropy of one window under `model`.
pub(crate) fn sample_loss(model: &SequenceClassifier, matrix: &WindowMatrix, class: usize) -> Result<f64> {
    let logits = model.logits(matrix)?;
    let max = logits.fold(f64::NEG_INFINITY, |m, &v| m.max(v));
    let mut sum = 0.0;
    Zip::from(&logits).for_each(|&v| sum += (v - max).exp());
    Ok(max + sum.ln() - logits[class])
}
