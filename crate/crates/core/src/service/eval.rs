//! Per-class confusion reports.

use std::fmt;

use crate::dtw::DtwKnn;
use crate::error::{Error, Result};
use crate::landmark::{Dataset, GestureSample, Vocabulary};
use crate::lstm::SequenceClassifier;

/// Anything that maps a sample to a vocabulary index.
pub trait Classifier {
    fn classify(&self, sample: &GestureSample) -> Result<usize>;
}

impl Classifier for SequenceClassifier {
    fn classify(&self, sample: &GestureSample) -> Result<usize> {
        Ok(self.predict(&sample.matrix)?.class)
    }
}

impl Classifier for DtwKnn {
    fn classify(&self, sample: &GestureSample) -> Result<usize> {
        Ok(DtwKnn::classify(self, &sample.matrix)?.class)
    }
}

impl<F: Fn(&GestureSample) -> Result<usize>> Classifier for F {
    fn classify(&self, sample: &GestureSample) -> Result<usize> {
        self(sample)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConfusionReport {
    pub vocabulary: Vocabulary,
    /// `confusion[actual][predicted]`.
    pub confusion: Vec<Vec<usize>>,
}

impl ConfusionReport {
    pub fn total(&self, class: usize) -> usize {
        self.confusion[class].iter().sum()
    }

    pub fn true_positives(&self, class: usize) -> usize {
        self.confusion[class][class]
    }

    /// Samples of other classes predicted as `class`.
    pub fn false_positives(&self, class: usize) -> usize {
        (0..self.confusion.len())
            .filter(|&a| a != class)
            .map(|a| self.confusion[a][class])
            .sum()
    }

    pub fn samples(&self) -> usize {
        self.confusion.iter().flatten().sum()
    }

    pub fn accuracy(&self) -> f64 {
        let correct: usize = (0..self.confusion.len()).map(|c| self.confusion[c][c]).sum();
        correct as f64 / self.samples() as f64
    }
}

fn display_name(label: &str) -> String {
    label
        .split('_')
        .map(|w| {
            let mut cs = w.chars();
            match cs.next() {
                Some(c) => c.to_uppercase().chain(cs).collect(),
                None => String::new(),
            }
        })
        .collect::<Vec<_>>()
        .join(" ")
}

impl fmt::Display for ConfusionReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<String> = self.vocabulary.labels().iter().map(|l| display_name(l.as_str())).collect();
        let w = names.iter().map(String::len).max().unwrap_or(0).max("Class".len());
        writeln!(
            f,
            "{:<w$}  {:>13}  {:>14}  {:>15}",
            "Class", "Total Samples", "True Positives", "False Positives"
        )?;
        for (c, name) in names.iter().enumerate() {
            writeln!(
                f,
                "{:<w$}  {:>13}  {:>14}  {:>15}",
                name,
                self.total(c),
                self.true_positives(c),
                self.false_positives(c)
            )?;
        }
        write!(f, "Overall accuracy: {:.2}% ({} samples)", 100.0 * self.accuracy(), self.samples())
    }
}

pub fn run_eval<C: Classifier + ?Sized>(classifier: &C, dataset: &Dataset) -> Result<ConfusionReport> {
    if dataset.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let n = dataset.vocabulary().len();
    let mut confusion = vec![vec![0; n]; n];
    for sample in dataset.samples() {
        let actual = dataset.class_index(sample);
        let predicted = classifier.classify(sample)?;
        if predicted >= n {
            return Err(Error::InvalidArgument(format!("classifier returned class {predicted} of {n}")));
        }
        confusion[actual][predicted] += 1;
    }
    Ok(ConfusionReport {
        vocabulary: dataset.vocabulary().clone(),
        confusion,
    })
}
