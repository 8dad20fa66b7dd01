//! Versioned text format for [`SequenceClassifier`].
//!
//! ```text
//! signlink-lstm v1
//! input_dim <D>
//! hidden <H>
//! classes <C>
//! vocabulary <label_0> ... <label_C-1>
//! idle <label>
//! matrix <gate>.input <H> <D>          then H rows of D values
//! matrix <gate>.recurrent <H> <H>      then H rows of H values
//! vector <gate>.bias <H>               then one row of H values
//! ...                                  for gate in input, forget, candidate, output
//! matrix output.weights <C> <H>
//! vector output.bias <C>
//! ```
//!
//! Floats use shortest round-trip formatting, so a loaded model is
//! bit-identical to the saved one.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use ndarray::{s, Array1, Array2, ArrayView2};

use super::{SequenceClassifier, GATE_NAMES};
use crate::error::{Error, Result};
use crate::landmark::{Label, Vocabulary};

pub const MODEL_FORMAT_VERSION: &str = "signlink-lstm v1";

fn push_row<'a>(out: &mut String, values: impl Iterator<Item = &'a f64>) {
    let mut first = true;
    for v in values {
        if !first {
            out.push(' ');
        }
        first = false;
        let _ = write!(out, "{v}");
    }
    out.push('\n');
}

fn push_matrix(out: &mut String, name: &str, m: ArrayView2<'_, f64>) {
    let _ = writeln!(out, "matrix {name} {} {}", m.nrows(), m.ncols());
    for row in m.rows() {
        push_row(out, row.iter());
    }
}

pub fn write_model(model: &SequenceClassifier) -> String {
    let h = model.hidden();
    let mut out = String::new();
    let _ = writeln!(out, "{MODEL_FORMAT_VERSION}");
    let _ = writeln!(out, "input_dim {}", model.input_dim());
    let _ = writeln!(out, "hidden {h}");
    let _ = writeln!(out, "classes {}", model.classes());
    let names: Vec<&str> = model.vocabulary.labels().iter().map(Label::as_str).collect();
    let _ = writeln!(out, "vocabulary {}", names.join(" "));
    let _ = writeln!(out, "idle {}", model.vocabulary.idle_label());
    for (k, gate) in GATE_NAMES.iter().enumerate() {
        let rows = s![k * h..(k + 1) * h, ..];
        push_matrix(&mut out, &format!("{gate}.input"), model.input_weights.slice(rows));
        push_matrix(&mut out, &format!("{gate}.recurrent"), model.recurrent_weights.slice(rows));
        let _ = writeln!(out, "vector {gate}.bias {h}");
        push_row(&mut out, model.bias.slice(s![k * h..(k + 1) * h]).iter());
    }
    push_matrix(&mut out, "output.weights", model.output_weights.view());
    let _ = writeln!(out, "vector output.bias {}", model.classes());
    push_row(&mut out, model.output_bias.iter());
    out
}

pub fn save_model(model: &SequenceClassifier, path: &Path) -> Result<()> {
    fs::write(path, write_model(model)).map_err(|e| Error::io(path, e))
}

pub fn load_model(path: &Path) -> Result<SequenceClassifier> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_model(&text)
}

struct Lines<'a> {
    inner: std::iter::Peekable<Box<dyn Iterator<Item = (usize, &'a str)> + 'a>>,
}

impl<'a> Lines<'a> {
    fn new(text: &'a str) -> Self {
        let it: Box<dyn Iterator<Item = (usize, &'a str)> + 'a> = Box::new(
            text.lines()
                .enumerate()
                .map(|(i, l)| (i + 1, l.trim()))
                .filter(|(_, l)| !l.is_empty() && !l.starts_with('#')),
        );
        Lines { inner: it.peekable() }
    }

    fn next(&mut self, what: &str) -> Result<(usize, &'a str)> {
        self.inner
            .next()
            .ok_or_else(|| Error::Truncated(format!("file ends before {what}")))
    }

    fn keyed(&mut self, key: &str) -> Result<(usize, &'a str)> {
        let (n, line) = self.next(key)?;
        match line.split_once(' ') {
            Some((k, rest)) if k == key => Ok((n, rest.trim())),
            _ => Err(Error::Shape(format!("line {n}: expected `{key} ...`"))),
        }
    }

    fn keyed_usize(&mut self, key: &str) -> Result<usize> {
        let (n, v) = self.keyed(key)?;
        v.parse()
            .map_err(|_| Error::Shape(format!("line {n}: `{key}` is not a count")))
    }

    /// Values of one row; a block header here means the previous block
    /// had fewer rows than declared.
    fn row(&mut self, name: &str, expected: usize) -> Result<Vec<f64>> {
        let (n, line) = self.next(&format!("all rows of `{name}`"))?;
        if line.starts_with("matrix ") || line.starts_with("vector ") {
            return Err(Error::Shape(format!(
                "line {n}: `{name}` has fewer rows than declared"
            )));
        }
        let values: Vec<f64> = line
            .split_whitespace()
            .map(|t| t.parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|_| Error::Shape(format!("line {n}: non-numeric value in `{name}`")))?;
        if values.len() != expected {
            return Err(Error::Shape(format!(
                "line {n}: `{name}` row has {} values, expected {expected}",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Shape(format!("line {n}: non-finite value in `{name}`")));
        }
        Ok(values)
    }

    fn header(&mut self, kind: &str, name: &str, dims: &[usize]) -> Result<()> {
        let (n, line) = self.next(&format!("`{name}`"))?;
        let mut parts = line.split_whitespace();
        if parts.next() != Some(kind) || parts.next() != Some(name) {
            return Err(Error::Shape(format!("line {n}: expected `{kind} {name}`")));
        }
        let declared: Vec<usize> = parts
            .map(str::parse)
            .collect::<Result<_, _>>()
            .map_err(|_| Error::Shape(format!("line {n}: bad dimensions for `{name}`")))?;
        if declared != dims {
            return Err(Error::Shape(format!(
                "line {n}: `{name}` declared {declared:?}, header implies {dims:?}"
            )));
        }
        Ok(())
    }

    fn matrix(&mut self, name: &str, rows: usize, cols: usize) -> Result<Array2<f64>> {
        self.header("matrix", name, &[rows, cols])?;
        let mut data = Vec::with_capacity(rows * cols);
        for _ in 0..rows {
            data.extend(self.row(name, cols)?);
        }
        Ok(Array2::from_shape_vec((rows, cols), data).expect("row lengths checked"))
    }

    fn vector(&mut self, name: &str, len: usize) -> Result<Array1<f64>> {
        self.header("vector", name, &[len])?;
        Ok(Array1::from(self.row(name, len)?))
    }
}

pub fn parse_model(text: &str) -> Result<SequenceClassifier> {
    let mut lines = Lines::new(text);
    let (_, version) = lines.next("version tag")?;
    if version != MODEL_FORMAT_VERSION {
        return Err(Error::VersionMismatch {
            expected: MODEL_FORMAT_VERSION.into(),
            found: version.into(),
        });
    }
    let d = lines.keyed_usize("input_dim")?;
    let h = lines.keyed_usize("hidden")?;
    let c = lines.keyed_usize("classes")?;
    if d == 0 || h == 0 {
        return Err(Error::Shape("input_dim and hidden must be positive".into()));
    }
    let (_, names) = lines.keyed("vocabulary")?;
    let names: Vec<&str> = names.split_whitespace().collect();
    if names.len() != c {
        return Err(Error::Shape(format!(
            "vocabulary lists {} labels, classes is {c}",
            names.len()
        )));
    }
    let (_, idle) = lines.keyed("idle")?;
    let vocabulary = Vocabulary::from_names(&names, idle)?;

    let mut model = SequenceClassifier::zeros(d, h, vocabulary);
    for (k, gate) in GATE_NAMES.iter().enumerate() {
        let rows = s![k * h..(k + 1) * h, ..];
        let wx = lines.matrix(&format!("{gate}.input"), h, d)?;
        model.input_weights.slice_mut(rows).assign(&wx);
        let wh = lines.matrix(&format!("{gate}.recurrent"), h, h)?;
        model.recurrent_weights.slice_mut(rows).assign(&wh);
        let b = lines.vector(&format!("{gate}.bias"), h)?;
        model.bias.slice_mut(s![k * h..(k + 1) * h]).assign(&b);
    }
    model.output_weights = lines.matrix("output.weights", c, h)?;
    model.output_bias = lines.vector("output.bias", c)?;
    if let Some((n, _)) = lines.inner.next() {
        return Err(Error::Shape(format!("line {n}: unexpected trailing content")));
    }
    model.check_consistent()?;
    Ok(model)
}
