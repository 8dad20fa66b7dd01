//! Latency and accuracy comparison between the LSTM and DTW-kNN classifiers.

use std::fmt;
use std::time::Instant;

use crate::dtw::{DtwKnn, DtwOptions};
use crate::error::{Error, Result};
use crate::landmark::{Dataset, GestureSample};
use crate::lstm::SequenceClassifier;

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub classifier: String,
    pub accuracy: f64,
    pub mean_latency_ms: f64,
    pub median_latency_ms: f64,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkReport {
    pub rows: Vec<BenchRow>,
    pub environment: String,
}

impl BenchmarkReport {
    pub fn row(&self, classifier: &str) -> Option<&BenchRow> {
        self.rows.iter().find(|r| r.classifier == classifier)
    }
}

impl fmt::Display for BenchmarkReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{:<12} {:>9} {:>16} {:>18} {:>6}",
            "classifier", "accuracy", "mean_latency_ms", "median_latency_ms", "n"
        )?;
        for r in &self.rows {
            writeln!(
                f,
                "{:<12} {:>9.4} {:>16.4} {:>18.4} {:>6}",
                r.classifier, r.accuracy, r.mean_latency_ms, r.median_latency_ms, r.n
            )?;
        }
        writeln!(f, "# {}", self.environment)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct BenchOptions {
    pub k: usize,
    pub dtw: DtwOptions,
    /// Warm-up predictions per classifier, excluded from timing.
    pub warmup: usize,
}

impl Default for BenchOptions {
    fn default() -> Self {
        BenchOptions {
            k: 1,
            dtw: DtwOptions::default(),
            warmup: 2,
        }
    }
}

fn summarize(name: &str, correct: usize, mut latencies: Vec<f64>) -> BenchRow {
    let n = latencies.len();
    let mean = latencies.iter().sum::<f64>() / n as f64;
    latencies.sort_by(f64::total_cmp);
    let median = if n % 2 == 1 {
        latencies[n / 2]
    } else {
        0.5 * (latencies[n / 2 - 1] + latencies[n / 2])
    };
    BenchRow {
        classifier: name.to_owned(),
        accuracy: correct as f64 / n as f64,
        mean_latency_ms: mean,
        median_latency_ms: median,
        n,
    }
}

/// Times every query against both classifiers, one prediction at a time.
/// `reference` is the kNN training set and supplies the vocabulary.
pub fn benchmark(
    reference: &Dataset,
    queries: &[GestureSample],
    model: &SequenceClassifier,
    opts: &BenchOptions,
) -> Result<BenchmarkReport> {
    if queries.is_empty() {
        return Err(Error::EmptyInput("benchmark query set"));
    }
    if let Some((_, d)) = reference.shape() {
        if d != model.input_dim() {
            return Err(Error::DimensionMismatch {
                expected: model.input_dim(),
                actual: d,
            });
        }
    }
    for q in queries {
        if q.matrix.dim() != model.input_dim() {
            return Err(Error::DimensionMismatch {
                expected: model.input_dim(),
                actual: q.matrix.dim(),
            });
        }
    }
    let knn = DtwKnn::new(reference.clone(), opts.k, opts.dtw)?;
    let vocab = reference.vocabulary();

    for q in queries.iter().cycle().take(opts.warmup) {
        model.predict(&q.matrix)?;
        knn.classify(&q.matrix)?;
    }

    let mut lstm_ms = Vec::with_capacity(queries.len());
    let mut lstm_correct = 0;
    for q in queries {
        let start = Instant::now();
        let p = model.predict(&q.matrix)?;
        lstm_ms.push(start.elapsed().as_secs_f64() * 1e3);
        if p.label == q.label {
            lstm_correct += 1;
        }
    }

    let mut knn_ms = Vec::with_capacity(queries.len());
    let mut knn_correct = 0;
    for q in queries {
        let start = Instant::now();
        let r = knn.classify(&q.matrix)?;
        knn_ms.push(start.elapsed().as_secs_f64() * 1e3);
        if vocab.label(r.class) == &q.label {
            knn_correct += 1;
        }
    }

    Ok(BenchmarkReport {
        rows: vec![
            summarize("dtw-knn", knn_correct, knn_ms),
            summarize("lstm", lstm_correct, lstm_ms),
        ],
        environment: format!(
            "{} {} threads={} reference={} queries={} k={}",
            std::env::consts::OS,
            std::env::consts::ARCH,
            std::thread::available_parallelism().map_or(1, |n| n.get()),
            reference.len(),
            queries.len(),
            opts.k
        ),
    })
}
