use std::sync::Arc;

use crate::error::{Error, Result};
use crate::landmark::{LandmarkFrame, SlidingWindow, DEFAULT_LANDMARKS, DEFAULT_WINDOW};
use crate::lstm::SequenceClassifier;
use crate::segmentation::{SegmentationConfig, SegmentationState};
use crate::sentence::SentenceGenerator;

use super::protocol::{parse_inbound, ControlAction, ErrorCode, Inbound, Outbound, PROTOCOL_VERSION};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PipelineConfig {
    pub landmarks: usize,
    pub window: usize,
    /// Classify every `stride`-th frame once the window is full.
    pub stride: usize,
    pub segmentation: SegmentationConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            landmarks: DEFAULT_LANDMARKS,
            window: DEFAULT_WINDOW,
            stride: 1,
            segmentation: SegmentationConfig::default(),
        }
    }
}

/// Read-only state shared by all sessions.
pub struct Engine {
    model: SequenceClassifier,
    generator: Box<dyn SentenceGenerator>,
    config: PipelineConfig,
}

impl Engine {
    pub fn new(model: SequenceClassifier, generator: Box<dyn SentenceGenerator>, config: PipelineConfig) -> Result<Self> {
        if config.window == 0 || config.stride == 0 {
            return Err(Error::Config("window and stride must be >= 1".into()));
        }
        if 2 * config.landmarks != model.input_dim() {
            return Err(Error::Config(format!(
                "{} landmarks give D = {}, model expects {}",
                config.landmarks,
                2 * config.landmarks,
                model.input_dim()
            )));
        }
        config.segmentation.validate()?;
        Ok(Engine {
            model,
            generator,
            config,
        })
    }

    pub fn model(&self) -> &SequenceClassifier {
        &self.model
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.config
    }

    pub fn generator(&self) -> &dyn SentenceGenerator {
        self.generator.as_ref()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunState {
    Idle,
    Interpreting,
}

pub struct Session {
    id: u64,
    engine: Arc<Engine>,
    run_state: RunState,
    greeted: bool,
    window: SlidingWindow,
    segmentation: SegmentationState,
    /// Pushes since the window last became full.
    since_full: usize,
    clock: Option<i64>,
    log: Option<Vec<Outbound>>,
}

impl Session {
    /// Session that keeps its full outbound log.
    pub fn new(engine: Arc<Engine>, id: u64) -> Self {
        let mut s = Self::unlogged(engine, id);
        s.log = Some(Vec::new());
        s
    }

    pub fn unlogged(engine: Arc<Engine>, id: u64) -> Self {
        let cfg = *engine.config();
        let segmentation = SegmentationState::new(engine.model().vocabulary().clone(), cfg.segmentation)
            .expect("engine validated segmentation config");
        Session {
            id,
            window: SlidingWindow::with_dim(cfg.window, engine.model().input_dim()),
            segmentation,
            engine,
            run_state: RunState::Idle,
            greeted: false,
            since_full: 0,
            clock: None,
            log: None,
        }
    }

    pub fn id(&self) -> u64 {
        self.id
    }

    pub fn run_state(&self) -> RunState {
        self.run_state
    }

    pub fn segmentation(&self) -> &SegmentationState {
        &self.segmentation
    }

    /// Outbound records so far; empty for unlogged sessions.
    pub fn log(&self) -> &[Outbound] {
        self.log.as_deref().unwrap_or(&[])
    }

    /// Latest frame timestamp seen.
    pub fn clock(&self) -> Option<i64> {
        self.clock
    }

    /// Parses and handles one wire line.
    pub fn handle_line(&mut self, line: &str) -> Vec<Outbound> {
        match parse_inbound(line) {
            Ok(msg) => self.handle_message(msg),
            Err(e) => self.emit(vec![e]),
        }
    }

    pub fn handle_message(&mut self, msg: Inbound) -> Vec<Outbound> {
        let out = match msg {
            Inbound::Hello {
                version,
                landmarks,
                vocabulary,
            } => self.on_hello(version, landmarks, vocabulary),
            Inbound::Frame { .. } | Inbound::Control { .. } if !self.greeted => {
                vec![Outbound::error(ErrorCode::Protocol, format!("{} before hello", msg.kind()))]
            }
            Inbound::Frame { t, coords } => self.on_frame(t, coords),
            Inbound::Control { action } => self.on_control(action),
        };
        self.emit(out)
    }

    fn emit(&mut self, out: Vec<Outbound>) -> Vec<Outbound> {
        if let Some(log) = &mut self.log {
            log.extend(out.iter().cloned());
        }
        out
    }

    fn on_hello(&mut self, version: u32, landmarks: Option<usize>, vocabulary: Option<Vec<String>>) -> Vec<Outbound> {
        if version != PROTOCOL_VERSION {
            return vec![Outbound::error(
                ErrorCode::Version,
                format!("protocol version {version} not supported, engine speaks {PROTOCOL_VERSION}"),
            )];
        }
        let model = self.engine.model();
        if let Some(f) = landmarks {
            if 2 * f != model.input_dim() {
                return vec![Outbound::error(
                    ErrorCode::Dimension,
                    format!("stream has {f} landmarks, model expects {}", model.input_dim() / 2),
                )];
            }
        }
        if let Some(names) = vocabulary {
            let ours: Vec<&str> = model.vocabulary().labels().iter().map(|l| l.as_str()).collect();
            if names.iter().map(String::as_str).ne(ours.iter().copied()) {
                return vec![Outbound::error(
                    ErrorCode::Vocabulary,
                    format!("stream vocabulary {names:?} differs from model vocabulary {ours:?}"),
                )];
            }
        }
        self.greeted = true;
        self.run_state = RunState::Idle;
        self.reset_pipeline();
        vec![Outbound::ack("hello")]
    }

    fn on_frame(&mut self, t: i64, coords: Vec<f64>) -> Vec<Outbound> {
        if let Some(last) = self.clock {
            if t < last {
                return vec![Outbound::error(
                    ErrorCode::Timestamp,
                    format!("frame at {t} ms after frame at {last} ms"),
                )];
            }
        }
        let frame = LandmarkFrame::new(t, coords);
        if let Err(e) = frame.validate(self.engine.model().input_dim()) {
            let code = match e {
                Error::DimensionMismatch { .. } => ErrorCode::Dimension,
                _ => ErrorCode::Malformed,
            };
            return vec![Outbound::error(code, e.to_string())];
        }
        self.clock = Some(t);
        if self.run_state == RunState::Idle {
            return vec![Outbound::ack("frame")];
        }

        let was_full = self.window.is_full();
        let full = match self.window.push(frame) {
            Ok(f) => f,
            Err(e) => return vec![Outbound::error(ErrorCode::Dimension, e.to_string())],
        };
        if !full {
            return Vec::new();
        }
        self.since_full = if was_full { self.since_full + 1 } else { 0 };
        if !self.since_full.is_multiple_of(self.engine.config().stride) {
            return Vec::new();
        }

        let prediction = match self.window.matrix().and_then(|m| self.engine.model().predict(&m)) {
            Ok(p) => p,
            Err(e) => return vec![Outbound::error(ErrorCode::Model, e.to_string())],
        };
        let mut out = vec![Outbound::Prediction {
            t,
            label: prediction.label.to_string(),
            confidence: prediction.confidence,
            window_full: true,
        }];
        match self.segmentation.on_class(prediction.class, prediction.confidence, t) {
            Ok(Some(event)) => out.push(Outbound::Keyword {
                t,
                label: event.label.to_string(),
                keywords: self.segmentation.keywords().iter().map(|l| l.to_string()).collect(),
            }),
            Ok(None) => {}
            Err(e) => out.push(Outbound::error(ErrorCode::Timestamp, e.to_string())),
        }
        out
    }

    fn on_control(&mut self, action: ControlAction) -> Vec<Outbound> {
        match action {
            ControlAction::Start => self.run_state = RunState::Interpreting,
            ControlAction::Stop => {
                self.run_state = RunState::Idle;
                self.window.clear();
            }
            ControlAction::Reset => self.reset_pipeline(),
            ControlAction::Generate => {
                let keywords = self.segmentation.take_keywords();
                if keywords.is_empty() {
                    return vec![Outbound::error(ErrorCode::EmptyKeywords, "no keywords to generate from")];
                }
                let words: Vec<&str> = keywords.iter().map(|l| l.as_str()).collect();
                let sentence = match self.engine.generator().generate(&words) {
                    Ok(s) => s,
                    Err(e) => return vec![Outbound::error(ErrorCode::Model, e.to_string())],
                };
                return vec![Outbound::Sentence {
                    t: self.clock.unwrap_or(0),
                    text: sentence.text,
                    matched: sentence.matched,
                }];
            }
        }
        vec![Outbound::ack(action.as_str())]
    }

    fn reset_pipeline(&mut self) {
        self.window.clear();
        self.segmentation.reset();
        self.since_full = 0;
    }
}
