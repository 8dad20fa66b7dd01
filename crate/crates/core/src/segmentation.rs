//! Turns a stream of per-window predictions into a duplicate-free keyword
//! sequence.
//!
//! Signing predictions vote into a frequency counter. Once idle predictions
//! have persisted for `time_threshold_s` of event time, the counter's most
//! frequent label becomes a keyword (if it has at least `min_count` votes and
//! is not already a keyword) and the counter and idle timer are reset.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::landmark::{Label, Vocabulary};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SegmentationConfig {
    pub time_threshold_s: f64,
    pub min_count: u32,
    pub confidence_floor: f64,
}

impl Default for SegmentationConfig {
    fn default() -> Self {
        SegmentationConfig {
            time_threshold_s: 5.0,
            min_count: 5,
            confidence_floor: 0.0,
        }
    }
}

impl SegmentationConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.time_threshold_s.is_finite() && self.time_threshold_s > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "time threshold must be > 0, got {}",
                self.time_threshold_s
            )));
        }
        if self.min_count < 1 {
            return Err(Error::InvalidArgument("min_count must be >= 1".into()));
        }
        if !(0.0..=1.0).contains(&self.confidence_floor) {
            return Err(Error::InvalidArgument(format!(
                "confidence floor {} outside [0, 1]",
                self.confidence_floor
            )));
        }
        Ok(())
    }

    pub fn threshold_ms(&self) -> i64 {
        (self.time_threshold_s * 1000.0).round() as i64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KeywordEvent {
    pub label: Label,
    pub emitted_at_ms: i64,
    /// Counter contents at emission, in vocabulary order.
    pub counts: Vec<(Label, u32)>,
}

#[derive(Debug, Clone)]
pub struct SegmentationState {
    config: SegmentationConfig,
    vocabulary: Vocabulary,
    /// Votes keyed by vocabulary index; never holds the idle index.
    counter: BTreeMap<usize, u32>,
    idle_since: Option<i64>,
    keywords: Vec<usize>,
    last_t: Option<i64>,
}

impl SegmentationState {
    pub fn new(vocabulary: Vocabulary, config: SegmentationConfig) -> Result<Self> {
        config.validate()?;
        Ok(SegmentationState {
            config,
            vocabulary,
            counter: BTreeMap::new(),
            idle_since: None,
            keywords: Vec::new(),
            last_t: None,
        })
    }

    pub fn config(&self) -> &SegmentationConfig {
        &self.config
    }

    pub fn vocabulary(&self) -> &Vocabulary {
        &self.vocabulary
    }

    pub fn keywords(&self) -> Vec<Label> {
        self.keywords.iter().map(|&i| self.vocabulary.label(i).clone()).collect()
    }

    pub fn counts(&self) -> Vec<(Label, u32)> {
        self.counter
            .iter()
            .map(|(&i, &n)| (self.vocabulary.label(i).clone(), n))
            .collect()
    }

    pub fn idle_since(&self) -> Option<i64> {
        self.idle_since
    }

    /// Feeds one prediction by label name.
    pub fn on_prediction(&mut self, label: &str, confidence: f64, t_ms: i64) -> Result<Option<KeywordEvent>> {
        let class = self.vocabulary.resolve(label)?;
        self.on_class(class, confidence, t_ms)
    }

    /// Feeds one prediction by vocabulary index.
    pub fn on_class(&mut self, class: usize, confidence: f64, t_ms: i64) -> Result<Option<KeywordEvent>> {
        if class >= self.vocabulary.len() {
            return Err(Error::InvalidArgument(format!("class index {class} out of range")));
        }
        if let Some(last) = self.last_t {
            if t_ms < last {
                return Err(Error::TimestampRegression { last_ms: last, t_ms });
            }
        }
        self.last_t = Some(t_ms);

        let idle = self.vocabulary.is_idle(class) || confidence < self.config.confidence_floor;
        if !idle {
            *self.counter.entry(class).or_insert(0) += 1;
            self.idle_since = None;
            return Ok(None);
        }

        let since = *self.idle_since.get_or_insert(t_ms);
        if t_ms - since < self.config.threshold_ms() {
            return Ok(None);
        }
        let event = self.leading_label().and_then(|(best, votes)| {
            if votes < self.config.min_count || self.keywords.contains(&best) {
                return None;
            }
            self.keywords.push(best);
            Some(KeywordEvent {
                label: self.vocabulary.label(best).clone(),
                emitted_at_ms: t_ms,
                counts: self.counts(),
            })
        });
        self.counter.clear();
        self.idle_since = None;
        Ok(event)
    }

    /// Counter argmax; ties go to the lowest vocabulary index.
    fn leading_label(&self) -> Option<(usize, u32)> {
        let mut best: Option<(usize, u32)> = None;
        for (&class, &votes) in &self.counter {
            if best.is_none_or(|(_, v)| votes > v) {
                best = Some((class, votes));
            }
        }
        best
    }

    /// Clears counter, idle timer and keywords. The timestamp watermark is
    /// kept, so event time must still not go backwards.
    pub fn reset(&mut self) {
        self.counter.clear();
        self.idle_since = None;
        self.keywords.clear();
    }

    /// Returns the keywords in detection order and clears the keyword buffer.
    pub fn take_keywords(&mut self) -> Vec<Label> {
        let out = self.keywords();
        self.keywords.clear();
        out
    }
}
