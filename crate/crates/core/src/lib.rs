//! Streaming sign-language keyword interpretation.
//!
//! Landmark frames flow through a sliding window into an LSTM classifier;
//! per-window predictions are stabilised into keywords by an idle-timer
//! segmenter, and keyword sets are turned into sentences by an
//! order-invariant lookup table. A DTW nearest-neighbour classifier is kept
//! as a slow, exact baseline.

pub mod bench;
pub mod dataset;
pub mod dtw;
pub mod error;
pub mod landmark;
pub mod lstm;
pub mod segmentation;
pub mod sentence;
pub mod service;
pub mod synth;

pub use error::{Error, Result};
pub use landmark::{Dataset, GestureSample, Label, LandmarkFrame, SlidingWindow, Vocabulary, WindowMatrix};
pub use lstm::{ProbDistribution, SequenceClassifier, TrainConfig};
pub use segmentation::{KeywordEvent, SegmentationConfig, SegmentationState};
pub use sentence::{canonical_key, SentenceGenerator, SentenceTable};
