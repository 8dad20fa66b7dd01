//! Frame, window and dataset data model.
//!
//! A frame is one flattened landmark vector `[x1, y1, x2, y2, ...]`; a window
//! is the FIFO of the most recent `capacity` frames, and its matrix view stacks
//! them oldest-first into a `T x D` matrix. Training samples share that shape.

use std::collections::VecDeque;
use std::fmt;

use ndarray::{Array2, ArrayView1};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Landmarks per frame used when the stream does not configure one.
pub const DEFAULT_LANDMARKS: usize = 129;
/// Coordinates per frame (`2 * DEFAULT_LANDMARKS`).
pub const DEFAULT_DIM: usize = 2 * DEFAULT_LANDMARKS;
/// Frames per classification window.
pub const DEFAULT_WINDOW: usize = 30;

pub const DEFAULT_LABELS: [&str; 8] = [
    "not_signing",
    "blood",
    "medicine",
    "allergy",
    "emergency",
    "hospital",
    "bandage",
    "pain",
];

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Label(String);

impl Label {
    pub fn new(name: impl Into<String>) -> Self {
        Label(name.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for Label {
    fn from(s: &str) -> Self {
        Label(s.to_owned())
    }
}

/// Ordered, duplicate-free label set with one designated idle label.
///
/// Class indices used by the classifiers are positions in this list.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    labels: Vec<Label>,
    idle: usize,
}

impl Vocabulary {
    pub fn new(labels: Vec<Label>, idle: &str) -> Result<Self> {
        if labels.len() < 2 {
            return Err(Error::InvalidVocabulary(
                "at least two labels are required".into(),
            ));
        }
        for (i, l) in labels.iter().enumerate() {
            if l.as_str().is_empty() || l.as_str().chars().any(char::is_whitespace) {
                return Err(Error::InvalidVocabulary(format!(
                    "label `{l}` must be non-empty and contain no whitespace"
                )));
            }
            if labels[..i].contains(l) {
                return Err(Error::InvalidVocabulary(format!("duplicate label `{l}`")));
            }
        }
        let idle = labels
            .iter()
            .position(|l| l.as_str() == idle)
            .ok_or_else(|| Error::InvalidVocabulary(format!("idle label `{idle}` not in vocabulary")))?;
        Ok(Vocabulary { labels, idle })
    }

    pub fn from_names<S: AsRef<str>>(names: &[S], idle: &str) -> Result<Self> {
        Self::new(names.iter().map(|s| Label::new(s.as_ref())).collect(), idle)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn label(&self, index: usize) -> &Label {
        &self.labels[index]
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.labels.iter().position(|l| l.as_str() == name)
    }

    pub fn resolve(&self, name: &str) -> Result<usize> {
        self.index_of(name)
            .ok_or_else(|| Error::UnknownLabel(name.to_owned()))
    }

    pub fn idle_index(&self) -> usize {
        self.idle
    }

    pub fn idle_label(&self) -> &Label {
        &self.labels[self.idle]
    }

    pub fn is_idle(&self, index: usize) -> bool {
        index == self.idle
    }
}

impl Default for Vocabulary {
    fn default() -> Self {
        Vocabulary::from_names(&DEFAULT_LABELS, "not_signing").expect("default vocabulary is valid")
    }
}

/// One timestamped feature vector of alternating x/y landmark coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct LandmarkFrame {
    pub timestamp_ms: i64,
    pub coords: Vec<f64>,
}

impl LandmarkFrame {
    pub fn new(timestamp_ms: i64, coords: Vec<f64>) -> Self {
        LandmarkFrame {
            timestamp_ms,
            coords,
        }
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        if self.coords.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                actual: self.coords.len(),
            });
        }
        check_finite(&self.coords)
    }
}

pub(crate) fn check_finite(values: &[f64]) -> Result<()> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(index) => Err(Error::NonFinite { index }),
        None => Ok(()),
    }
}

/// Fixed-capacity FIFO of frames.
#[derive(Debug, Clone)]
pub struct SlidingWindow {
    capacity: usize,
    dim: Option<usize>,
    frames: VecDeque<LandmarkFrame>,
}

impl SlidingWindow {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "window capacity must be positive");
        SlidingWindow {
            capacity,
            dim: None,
            frames: VecDeque::with_capacity(capacity + 1),
        }
    }

    /// A window whose coordinate dimension is fixed up front rather than by
    /// the first push.
    pub fn with_dim(capacity: usize, dim: usize) -> Self {
        let mut w = Self::new(capacity);
        w.dim = Some(dim);
        w
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn dim(&self) -> Option<usize> {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.frames.len() == self.capacity
    }

    pub fn frames(&self) -> impl Iterator<Item = &LandmarkFrame> {
        self.frames.iter()
    }

    /// Appends a frame, evicting the oldest one at capacity. Returns whether
    /// the window is full afterwards.
    pub fn push(&mut self, frame: LandmarkFrame) -> Result<bool> {
        let dim = self.dim.unwrap_or(frame.dim());
        frame.validate(dim)?;
        self.dim = Some(dim);
        self.frames.push_back(frame);
        if self.frames.len() > self.capacity {
            self.frames.pop_front();
        }
        Ok(self.is_full())
    }

    /// Drops all frames; the established dimension is kept.
    pub fn clear(&mut self) {
        self.frames.clear();
    }

    /// Oldest frame is row 0.
    pub fn matrix(&self) -> Result<WindowMatrix> {
        if !self.is_full() {
            return Err(Error::WindowNotFull {
                len: self.frames.len(),
                capacity: self.capacity,
            });
        }
        let dim = self.dim.expect("full window has a dimension");
        let mut data = Array2::zeros((self.capacity, dim));
        for (mut row, frame) in data.rows_mut().into_iter().zip(&self.frames) {
            row.assign(&ArrayView1::from(&frame.coords[..]));
        }
        Ok(WindowMatrix { data })
    }
}

/// `T x D` matrix; row `i` is the `i`-th oldest frame.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowMatrix {
    data: Array2<f64>,
}

impl WindowMatrix {
    pub fn new(data: Array2<f64>) -> Result<Self> {
        if data.nrows() == 0 || data.ncols() == 0 {
            return Err(Error::EmptyInput("window matrix"));
        }
        if let Some(index) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        let data = if data.is_standard_layout() {
            data
        } else {
            data.as_standard_layout().into_owned()
        };
        Ok(WindowMatrix { data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let t = rows.len();
        let d = rows.first().map_or(0, Vec::len);
        let mut flat = Vec::with_capacity(t * d);
        for r in rows {
            if r.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    actual: r.len(),
                });
            }
            flat.extend_from_slice(r);
        }
        let data = Array2::from_shape_vec((t, d), flat).map_err(|e| Error::Shape(e.to_string()))?;
        Self::new(data)
    }

    pub fn frames(&self) -> usize {
        self.data.nrows()
    }

    pub fn dim(&self) -> usize {
        self.data.ncols()
    }

    pub fn data(&self) -> &Array2<f64> {
        &self.data
    }

    pub fn row(&self, i: usize) -> ArrayView1<'_, f64> {
        self.data.row(i)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GestureSample {
    pub label: Label,
    pub matrix: WindowMatrix,
}

#[derive(Debug, Clone)]
pub struct Dataset {
    vocabulary: Vocabulary,
    samples: Vec<GestureSample>,
}

impl Dataset {
    pub fn new(vocabulary: Vocabulary) -> Self {
        Dataset {
            vocabulary,
            samples: Vec::new(),
        }
    }

    pub fn vocabulary(&self) -> &Vocabulary {
        &self.vocabulary
    }

    pub fn samples(&self) -> &[GestureSample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// `(T, D)` shared by every sample, if any.
    pub fn shape(&self) -> Option<(usize, usize)> {
        self.samples
            .first()
            .map(|s| (s.matrix.frames(), s.matrix.dim()))
    }

    pub fn push(&mut self, sample: GestureSample) -> Result<()> {
        self.vocabulary.resolve(sample.label.as_str())?;
        if let Some((t, d)) = self.shape() {
            if sample.matrix.frames() != t {
                return Err(Error::Shape(format!(
                    "sample has {} frames, dataset has {t}",
                    sample.matrix.frames()
                )));
            }
            if sample.matrix.dim() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    actual: sample.matrix.dim(),
                });
            }
        }
        self.samples.push(sample);
        Ok(())
    }

    pub fn class_index(&self, sample: &GestureSample) -> usize {
        self.vocabulary
            .index_of(sample.label.as_str())
            .expect("dataset samples carry vocabulary labels")
    }

    pub fn counts_per_label(&self) -> Vec<usize> {
        let mut counts = vec![0; self.vocabulary.len()];
        for s in &self.samples {
            counts[self.class_index(s)] += 1;
        }
        counts
    }

    /// Seeded, per-class stratified split. `fraction` of each class (rounded
    /// down) goes to the second part.
    pub fn split(&self, fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
        use rand::seq::SliceRandom;
        use rand::SeedableRng;

        if !(0.0..1.0).contains(&fraction) {
            return Err(Error::InvalidArgument(format!(
                "split fraction {fraction} outside [0, 1)"
            )));
        }
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut first = Dataset::new(self.vocabulary.clone());
        let mut second = Dataset::new(self.vocabulary.clone());
        for class in 0..self.vocabulary.len() {
            let mut idx: Vec<usize> = (0..self.samples.len())
                .filter(|&i| self.class_index(&self.samples[i]) == class)
                .collect();
            idx.shuffle(&mut rng);
            let n_second = (idx.len() as f64 * fraction).floor() as usize;
            let (a, b) = idx.split_at(idx.len() - n_second);
            for &i in a {
                first.samples.push(self.samples[i].clone());
            }
            for &i in b {
                second.samples.push(self.samples[i].clone());
            }
        }
        Ok((first, second))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn frame(t: i64, value: f64, dim: usize) -> LandmarkFrame {
        LandmarkFrame::new(t, vec![value; dim])
    }

    #[test]
    fn push_onto_empty_window() {
        let mut w = SlidingWindow::new(DEFAULT_WINDOW);
        let full = w.push(frame(0, 0.5, DEFAULT_DIM)).unwrap();
        assert_eq!(w.len(), 1);
        assert!(!full);
    }

    #[test]
    fn push_past_capacity_evicts_oldest() {
        let mut w = SlidingWindow::new(30);
        let mut full = false;
        for k in 1..=31 {
            full = w.push(frame(k, k as f64, DEFAULT_DIM)).unwrap();
        }
        assert!(full);
        assert_eq!(w.len(), 30);
        assert_eq!(w.frames().next().unwrap().timestamp_ms, 2);
    }

    #[test]
    fn dimension_is_fixed_by_first_push() {
        let mut w = SlidingWindow::new(30);
        w.push(frame(0, 0.0, 258)).unwrap();
        let err = w.push(frame(1, 0.0, 257)).unwrap_err();
        assert!(matches!(
            err,
            Error::DimensionMismatch {
                expected: 258,
                actual: 257
            }
        ));
        assert_eq!(w.len(), 1);
    }

    #[test]
    fn non_finite_coordinates_are_rejected() {
        let mut w = SlidingWindow::new(3);
        let mut coords = vec![0.0; 4];
        coords[2] = f64::NAN;
        let err = w.push(LandmarkFrame::new(0, coords)).unwrap_err();
        assert!(matches!(err, Error::NonFinite { index: 2 }));
        assert!(w.is_empty());
    }

    #[test]
    fn out_of_frame_values_are_accepted() {
        let mut w = SlidingWindow::new(1);
        assert!(w.push(LandmarkFrame::new(0, vec![-1.5, 2.5])).unwrap());
    }

    #[test]
    fn matrix_of_full_window() {
        let mut w = SlidingWindow::new(30);
        for k in 1..=30 {
            w.push(frame(k, k as f64, 258)).unwrap();
        }
        let m = w.matrix().unwrap();
        assert_eq!((m.frames(), m.dim()), (30, 258));
        for i in 0..30 {
            assert!(m.row(i).iter().all(|&v| v == (i + 1) as f64));
        }
    }

    #[test]
    fn matrix_requires_full_window() {
        let mut w = SlidingWindow::new(30);
        for k in 0..29 {
            w.push(frame(k, 0.0, 258)).unwrap();
        }
        assert!(matches!(
            w.matrix(),
            Err(Error::WindowNotFull {
                len: 29,
                capacity: 30
            })
        ));
    }

    #[test]
    fn default_vocabulary() {
        let v = Vocabulary::default();
        assert_eq!(v.len(), 8);
        assert_eq!(v.idle_index(), 0);
        assert_eq!(v.idle_label().as_str(), "not_signing");
        assert_eq!(v.index_of("pain"), Some(7));
    }

    #[test]
    fn vocabulary_rejects_duplicates_and_missing_idle() {
        assert!(Vocabulary::from_names(&["a", "b", "a"], "a").is_err());
        assert!(Vocabulary::from_names(&["a", "b"], "c").is_err());
        assert!(Vocabulary::from_names(&["a"], "a").is_err());
    }

    #[test]
    fn dataset_rejects_foreign_labels_and_shapes() {
        let mut ds = Dataset::new(Vocabulary::default());
        let m = WindowMatrix::from_rows(&vec![vec![0.0; 4]; 3]).unwrap();
        ds.push(GestureSample {
            label: "blood".into(),
            matrix: m.clone(),
        })
        .unwrap();
        assert!(ds
            .push(GestureSample {
                label: "cough".into(),
                matrix: m,
            })
            .is_err());
        let short = WindowMatrix::from_rows(&vec![vec![0.0; 4]; 2]).unwrap();
        assert!(ds
            .push(GestureSample {
                label: "pain".into(),
                matrix: short,
            })
            .is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn window_holds_last_frames_in_order(cap in 1usize..12, n in 0usize..40) {
                let mut w = SlidingWindow::new(cap);
                for k in 0..n {
                    w.push(LandmarkFrame::new(k as i64, vec![k as f64, 0.0])).unwrap();
                }
                let kept: Vec<i64> = w.frames().map(|f| f.timestamp_ms).collect();
                let expected: Vec<i64> = (n.saturating_sub(cap)..n).map(|k| k as i64).collect();
                prop_assert_eq!(kept, expected);
                prop_assert!(w.len() <= cap);
            }

            #[test]
            fn identical_pushes_give_identical_matrices(values in proptest::collection::vec(-2.0f64..2.0, 20)) {
                let build = || {
                    let mut w = SlidingWindow::new(5);
                    for (k, pair) in values.chunks(2).enumerate() {
                        w.push(LandmarkFrame::new(k as i64, pair.to_vec())).unwrap();
                    }
                    w.matrix().unwrap()
                };
                prop_assert_eq!(build(), build());
            }
        }
    }
}
