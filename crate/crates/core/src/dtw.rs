//! Dynamic time warping and a DTW nearest-neighbour classifier.
//!
//! Step pattern is symmetric with unit weights: `D(i, j) = cost(i, j) +
//! min(D(i-1, j-1), D(i-1, j), D(i, j-1))`, local cost is the squared
//! Euclidean distance between frames.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::landmark::{Dataset, GestureSample, Label, WindowMatrix};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct DtwOptions {
    /// Sakoe-Chiba half-width; `None` is unconstrained.
    pub band: Option<usize>,
}

impl DtwOptions {
    pub fn banded(width: usize) -> Self {
        DtwOptions { band: Some(width) }
    }
}

#[inline]
pub fn squared_euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

pub fn dtw_distance(a: &WindowMatrix, b: &WindowMatrix, opts: &DtwOptions) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            actual: b.dim(),
        });
    }
    let rows_a: Vec<&[f64]> = (0..a.frames()).map(|i| row_slice(a, i)).collect();
    let rows_b: Vec<&[f64]> = (0..b.frames()).map(|i| row_slice(b, i)).collect();
    dtw_rows(&rows_a, &rows_b, opts)
}

fn row_slice(m: &WindowMatrix, i: usize) -> &[f64] {
    let d = m.dim();
    let flat = m.data().as_slice().expect("window matrices are contiguous");
    &flat[i * d..(i + 1) * d]
}

/// DTW over two frame sequences given as row slices.
pub fn dtw_rows(a: &[&[f64]], b: &[&[f64]], opts: &DtwOptions) -> Result<f64> {
    let (n, m) = (a.len(), b.len());
    if n == 0 || m == 0 {
        return Err(Error::EmptyInput("dtw sequence"));
    }
    let band = match opts.band {
        Some(0) => return Err(Error::InvalidArgument("dtw band must be >= 1".into())),
        Some(w) => {
            if n.abs_diff(m) > w {
                return Err(Error::InvalidArgument(format!(
                    "length difference {} exceeds band {w}",
                    n.abs_diff(m)
                )));
            }
            w
        }
        None => usize::MAX,
    };

    let mut prev = vec![f64::INFINITY; m];
    let mut cur = vec![f64::INFINITY; m];
    for (i, ai) in a.iter().enumerate() {
        let lo = i.saturating_sub(band);
        let hi = i.saturating_add(band).min(m - 1);
        cur.fill(f64::INFINITY);
        for j in lo..=hi {
            let cost = squared_euclidean(ai, b[j]);
            let best = if i == 0 && j == 0 {
                0.0
            } else {
                let diag = if i > 0 && j > 0 { prev[j - 1] } else { f64::INFINITY };
                let up = if i > 0 { prev[j] } else { f64::INFINITY };
                let left = if j > 0 { cur[j - 1] } else { f64::INFINITY };
                diag.min(up).min(left)
            };
            cur[j] = best + cost;
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    Ok(prev[m - 1])
}

#[derive(Debug, Clone, PartialEq)]
pub struct KnnResult {
    pub class: usize,
    pub label: Label,
    /// `(class, votes)` for every class that received a vote, by class index.
    pub votes: Vec<(usize, usize)>,
    /// `(dataset index, distance)` of the k nearest samples, nearest first.
    pub neighbors: Vec<(usize, f64)>,
}

/// k-nearest-neighbour vote under DTW. Distance ties are broken by dataset
/// order; vote ties by smallest mean neighbour distance, then lowest class
/// index. Distances are computed serially.
pub fn knn_classify(dataset: &Dataset, query: &WindowMatrix, k: usize, opts: &DtwOptions) -> Result<KnnResult> {
    if dataset.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if k == 0 || k > dataset.len() {
        return Err(Error::InvalidArgument(format!(
            "k = {k} outside 1..={}",
            dataset.len()
        )));
    }
    let mut distances = Vec::with_capacity(dataset.len());
    for (i, s) in dataset.samples().iter().enumerate() {
        distances.push((i, dtw_distance(&s.matrix, query, opts)?));
    }
    Ok(vote(dataset, distances, k))
}

fn vote(dataset: &Dataset, mut distances: Vec<(usize, f64)>, k: usize) -> KnnResult {
    distances.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
    distances.truncate(k);

    let classes = dataset.vocabulary().len();
    let mut count = vec![0usize; classes];
    let mut dist_sum = vec![0.0f64; classes];
    for &(i, d) in &distances {
        let c = dataset.class_index(&dataset.samples()[i]);
        count[c] += 1;
        dist_sum[c] += d;
    }
    let mut best = None::<(usize, usize, f64)>;
    for c in 0..classes {
        if count[c] == 0 {
            continue;
        }
        let mean = dist_sum[c] / count[c] as f64;
        let better = match best {
            None => true,
            Some((_, bc, bm)) => count[c] > bc || (count[c] == bc && mean < bm),
        };
        if better {
            best = Some((c, count[c], mean));
        }
    }
    let class = best.expect("k >= 1 gives at least one vote").0;
    KnnResult {
        class,
        label: dataset.vocabulary().label(class).clone(),
        votes: (0..classes).filter(|&c| count[c] > 0).map(|c| (c, count[c])).collect(),
        neighbors: distances,
    }
}

/// DTW-kNN classifier over a reference dataset.
#[derive(Debug, Clone)]
pub struct DtwKnn {
    reference: Dataset,
    k: usize,
    opts: DtwOptions,
}

impl DtwKnn {
    pub fn new(reference: Dataset, k: usize, opts: DtwOptions) -> Result<Self> {
        if reference.is_empty() {
            return Err(Error::EmptyDataset);
        }
        if k == 0 || k > reference.len() {
            return Err(Error::InvalidArgument(format!(
                "k = {k} outside 1..={}",
                reference.len()
            )));
        }
        Ok(DtwKnn { reference, k, opts })
    }

    pub fn reference(&self) -> &Dataset {
        &self.reference
    }

    pub fn classify(&self, query: &WindowMatrix) -> Result<KnnResult> {
        knn_classify(&self.reference, query, self.k, &self.opts)
    }

    /// Classifies many queries in parallel; each query is computed serially.
    pub fn classify_all(&self, queries: &[GestureSample]) -> Result<Vec<KnnResult>> {
        queries.par_iter().map(|q| self.classify(&q.matrix)).collect()
    }
}
