#![allow(dead_code)]

use std::path::PathBuf;
use std::sync::Arc;

use ndarray::{Array1, Array2};

use signlink::lstm::load_model;
use signlink::service::{Engine, PipelineConfig};
use signlink::{SequenceClassifier, SentenceTable, Vocabulary};

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

/// Set to regenerate frozen fixtures instead of comparing against them.
pub fn blessing() -> bool {
    std::env::var_os("SIGNLINK_BLESS").is_some()
}

pub fn reference_model() -> SequenceClassifier {
    load_model(&fixture("reference_model.lstm")).expect("reference model fixture loads")
}

pub fn reference_engine() -> Arc<Engine> {
    Arc::new(
        Engine::new(
            reference_model(),
            Box::new(SentenceTable::bundled()),
            PipelineConfig::default(),
        )
        .unwrap(),
    )
}

/// Hand-built LSTM whose prediction is read off the newest frame: class `c`
/// wins when coordinate `c` is positive and the others negative. Uses
/// `ceil(C / 2)` landmarks and one hidden unit per class.
pub fn label_reader(vocabulary: Vocabulary) -> SequenceClassifier {
    let c = vocabulary.len();
    let d = 2 * c.div_ceil(2);
    let h = c;
    let mut wx = Array2::<f64>::zeros((4 * h, d));
    let mut bias = Array1::<f64>::zeros(4 * h);
    for j in 0..h {
        wx[[2 * h + j, j]] = 10.0;
        bias[j] = 20.0;
        bias[h + j] = -20.0;
        bias[3 * h + j] = 20.0;
    }
    let wo = Array2::<f64>::eye(c) * 10.0;
    SequenceClassifier::from_parameters(wx, Array2::zeros((4 * h, h)), bias, wo, Array1::zeros(c), vocabulary)
        .unwrap()
}

/// Coordinates that make [`label_reader`] predict `class`.
pub fn reader_frame(model: &SequenceClassifier, class: usize) -> Vec<f64> {
    (0..model.input_dim())
        .map(|i| if i == class { 1.0 } else { -1.0 })
        .collect()
}

pub fn reader_engine(labels: &[&str], config: PipelineConfig) -> Arc<Engine> {
    let vocabulary = Vocabulary::from_names(labels, labels[0]).unwrap();
    let model = label_reader(vocabulary);
    let config = PipelineConfig {
        landmarks: model.input_dim() / 2,
        ..config
    };
    Arc::new(Engine::new(model, Box::new(SentenceTable::bundled()), config).unwrap())
}
