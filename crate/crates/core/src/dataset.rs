//! On-disk dataset layout.
//!
//! ```text
//! <root>/<label>/<label>_<nnnn>.sample
//! ```
//!
//! Each sample file is a single text record:
//!
//! ```text
//! signlink-sample v1
//! label <name>
//! shape <T> <D>
//! <D space-separated decimals>      (T lines, oldest frame first)
//! ```
//!
//! Values are written with Rust's shortest round-trip float formatting, so a
//! save/load cycle reproduces every matrix bit for bit. Blank lines and lines
//! starting with `#` are ignored.

use std::fs;
use std::path::{Path, PathBuf};

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::landmark::{Dataset, GestureSample, Label, Vocabulary, WindowMatrix};

pub const SAMPLE_MAGIC: &str = "signlink-sample v1";
pub const SAMPLE_EXT: &str = "sample";

/// Expected `(frames, dim)` for every sample; `None` lets the first file decide.
pub type ExpectedShape = Option<(usize, usize)>;

pub fn format_sample(sample: &GestureSample) -> String {
    let m = sample.matrix.data();
    let mut out = String::with_capacity(m.len() * 20 + 64);
    out.push_str(SAMPLE_MAGIC);
    out.push('\n');
    out.push_str(&format!("label {}\n", sample.label));
    out.push_str(&format!("shape {} {}\n", m.nrows(), m.ncols()));
    for row in m.rows() {
        let mut first = true;
        for v in row {
            if !first {
                out.push(' ');
            }
            first = false;
            out.push_str(&v.to_string());
        }
        out.push('\n');
    }
    out
}

pub fn parse_sample(text: &str, path: &Path, expected: ExpectedShape) -> Result<GestureSample> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
    let bad = |line: usize, msg: String| Error::malformed(path, line, msg);

    let (n, magic) = lines.next().ok_or_else(|| bad(1, "empty sample file".into()))?;
    if magic != SAMPLE_MAGIC {
        return Err(bad(n, format!("expected `{SAMPLE_MAGIC}` header")));
    }
    let (n, label_line) = lines.next().ok_or_else(|| bad(n, "missing label record".into()))?;
    let label = label_line
        .strip_prefix("label ")
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .ok_or_else(|| bad(n, "expected `label <name>`".into()))?;
    let (n, shape_line) = lines.next().ok_or_else(|| bad(n, "missing shape record".into()))?;
    let dims: Vec<usize> = shape_line
        .strip_prefix("shape ")
        .map(|s| s.split_whitespace().map(str::parse).collect::<Result<Vec<_>, _>>())
        .transpose()
        .ok()
        .flatten()
        .filter(|d| d.len() == 2)
        .ok_or_else(|| bad(n, "expected `shape <T> <D>`".into()))?;
    let (t, d) = (dims[0], dims[1]);
    if t == 0 || d == 0 {
        return Err(bad(n, "shape must be positive".into()));
    }
    if let Some((et, ed)) = expected {
        if (t, d) != (et, ed) {
            return Err(bad(n, format!("shape {t}x{d} does not match expected {et}x{ed}")));
        }
    }

    let mut data = Vec::with_capacity(t * d);
    let mut rows = 0;
    let mut last_line = n;
    for (n, line) in lines {
        last_line = n;
        if rows == t {
            return Err(bad(n, format!("more than {t} matrix rows")));
        }
        let before = data.len();
        for (col, tok) in line.split_whitespace().enumerate() {
            let v: f64 = tok
                .parse()
                .map_err(|_| bad(n, format!("non-numeric entry `{tok}` in column {}", col + 1)))?;
            if !v.is_finite() {
                return Err(bad(n, format!("non-finite entry in column {}", col + 1)));
            }
            data.push(v);
        }
        if data.len() - before != d {
            return Err(bad(n, format!("row has {} values, expected {d}", data.len() - before)));
        }
        rows += 1;
    }
    if rows != t {
        return Err(bad(last_line, format!("found {rows} matrix rows, expected {t}")));
    }
    let matrix = Array2::from_shape_vec((t, d), data).map_err(|e| Error::Shape(e.to_string()))?;
    Ok(GestureSample {
        label: Label::new(label),
        matrix: WindowMatrix::new(matrix)?,
    })
}

/// Writes `sample` as `<root>/<label>/<label>_<index>.sample` and returns the path.
pub fn save_sample(root: &Path, sample: &GestureSample, index: usize) -> Result<PathBuf> {
    let dir = root.join(sample.label.as_str());
    fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    let path = dir.join(format!("{}_{index:04}.{SAMPLE_EXT}", sample.label));
    fs::write(&path, format_sample(sample)).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

pub fn save_dataset(root: &Path, dataset: &Dataset) -> Result<()> {
    let mut next = vec![0usize; dataset.vocabulary().len()];
    for sample in dataset.samples() {
        let class = dataset.class_index(sample);
        save_sample(root, sample, next[class])?;
        next[class] += 1;
    }
    Ok(())
}

/// Loads every sample under `root`. Samples are ordered by vocabulary order,
/// then by file name.
pub fn load_dataset(root: &Path, vocabulary: &Vocabulary, expected: ExpectedShape) -> Result<Dataset> {
    let mut dataset = Dataset::new(vocabulary.clone());
    if !root.is_dir() {
        return Err(Error::io(
            root,
            std::io::Error::new(std::io::ErrorKind::NotFound, "dataset directory not found"),
        ));
    }
    let mut subdirs = Vec::new();
    for entry in fs::read_dir(root).map_err(|e| Error::io(root, e))? {
        let entry = entry.map_err(|e| Error::io(root, e))?;
        let path = entry.path();
        if !path.is_dir() {
            continue;
        }
        let name = entry.file_name().to_string_lossy().into_owned();
        let class = vocabulary
            .index_of(&name)
            .ok_or_else(|| Error::malformed(&path, 0, format!("directory for unknown label `{name}`")))?;
        subdirs.push((class, path));
    }
    subdirs.sort();

    let mut shape = expected;
    for (_, dir) in subdirs {
        let mut files: Vec<PathBuf> = fs::read_dir(&dir)
            .map_err(|e| Error::io(&dir, e))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == SAMPLE_EXT))
            .collect();
        files.sort();
        let dir_label = dir.file_name().unwrap_or_default().to_string_lossy().into_owned();
        for path in files {
            let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
            let sample = parse_sample(&text, &path, shape)?;
            if sample.label.as_str() != dir_label {
                return Err(Error::malformed(
                    &path,
                    2,
                    format!("label `{}` filed under `{dir_label}`", sample.label),
                ));
            }
            if vocabulary.index_of(sample.label.as_str()).is_none() {
                return Err(Error::malformed(&path, 2, format!("unknown label `{}`", sample.label)));
            }
            shape = Some((sample.matrix.frames(), sample.matrix.dim()));
            dataset.push(sample)?;
        }
    }
    Ok(dataset)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(label: &str, t: usize, d: usize, offset: f64) -> GestureSample {
        let rows: Vec<Vec<f64>> = (0..t)
            .map(|i| (0..d).map(|j| offset + i as f64 * 0.1 + j as f64 / 3.0).collect())
            .collect();
        GestureSample {
            label: label.into(),
            matrix: WindowMatrix::from_rows(&rows).unwrap(),
        }
    }

    #[test]
    fn sample_round_trip_is_bit_exact() {
        let s = sample("pain", 4, 5, 1e-17);
        let text = format_sample(&s);
        let back = parse_sample(&text, Path::new("x"), None).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn empty_directory_loads_empty_dataset() {
        let dir = tempfile::tempdir().unwrap();
        let ds = load_dataset(dir.path(), &Vocabulary::default(), Some((30, 258))).unwrap();
        assert!(ds.is_empty());
        assert_eq!(ds.vocabulary(), &Vocabulary::default());
    }

    #[test]
    fn short_matrix_names_the_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = save_sample(dir.path(), &sample("blood", 29, 258, 0.0), 0).unwrap();
        let err = load_dataset(dir.path(), &Vocabulary::default(), Some((30, 258))).unwrap_err();
        match err {
            Error::Malformed { path: p, .. } => assert_eq!(p, path),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn non_numeric_entry_is_reported_with_line() {
        let text = "signlink-sample v1\nlabel pain\nshape 2 2\n1 2\n3 x\n";
        match parse_sample(text, Path::new("f.sample"), None).unwrap_err() {
            Error::Malformed { line, message, .. } => {
                assert_eq!(line, 5);
                assert!(message.contains("`x`"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unknown_label_directory_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        save_sample(dir.path(), &sample("cough", 2, 2, 0.0), 0).unwrap();
        assert!(load_dataset(dir.path(), &Vocabulary::default(), None).is_err());
    }

    #[test]
    fn mislabelled_file_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = save_sample(dir.path(), &sample("pain", 2, 2, 0.0), 0).unwrap();
        let text = std::fs::read_to_string(&path).unwrap().replace("label pain", "label blood");
        std::fs::write(&path, text).unwrap();
        assert!(load_dataset(dir.path(), &Vocabulary::default(), None).is_err());
    }

    #[test]
    fn dataset_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let vocab = Vocabulary::default();
        let mut ds = Dataset::new(vocab.clone());
        for (k, l) in vocab.labels().iter().enumerate() {
            for i in 0..3 {
                ds.push(sample(l.as_str(), 3, 4, (k * 10 + i) as f64 * 0.37)).unwrap();
            }
        }
        save_dataset(dir.path(), &ds).unwrap();
        let back = load_dataset(dir.path(), &vocab, Some((3, 4))).unwrap();
        assert_eq!(back.samples(), ds.samples());
    }
}
