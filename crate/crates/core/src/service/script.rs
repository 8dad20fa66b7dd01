//! Scripted inbound streams built from synthetic gestures.
//!
//! A script is a comma-separated list of steps. `label:seconds` streams that
//! many seconds of the label's synthetic motion; `start`, `stop`, `generate`
//! and `reset` insert control records. A `hello` record always comes first.
//!
//! ```text
//! start,blood:3,not_signing:6,generate
//! ```

use std::str::FromStr;

use crate::error::{Error, Result};
use crate::synth::SynthSpec;

use super::protocol::{ControlAction, Inbound, PROTOCOL_VERSION};

/// Sample indices used for streamed segments start here, clear of any
/// training set drawn from the same spec.
pub const STREAM_INDEX_BASE: u64 = 1_000_000;

/// Coordinates are rounded to this many decimals when recorded.
pub const RECORD_DECIMALS: i32 = 5;

#[derive(Debug, Clone, PartialEq)]
pub enum Step {
    Gesture { label: String, seconds: f64 },
    Control(ControlAction),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Script {
    pub steps: Vec<Step>,
}

impl FromStr for Script {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut steps = Vec::new();
        for raw in s.split(',') {
            let item = raw.trim();
            if item.is_empty() {
                continue;
            }
            let step = match item {
                "start" => Step::Control(ControlAction::Start),
                "stop" => Step::Control(ControlAction::Stop),
                "generate" => Step::Control(ControlAction::Generate),
                "reset" => Step::Control(ControlAction::Reset),
                _ => {
                    let (label, secs) = item
                        .split_once(':')
                        .ok_or_else(|| Error::InvalidArgument(format!("script step `{item}` is not `label:seconds`")))?;
                    let seconds: f64 = secs
                        .trim()
                        .parse()
                        .map_err(|_| Error::InvalidArgument(format!("bad duration in script step `{item}`")))?;
                    if !(seconds.is_finite() && seconds > 0.0) {
                        return Err(Error::InvalidArgument(format!("duration must be > 0 in `{item}`")));
                    }
                    Step::Gesture {
                        label: label.trim().to_owned(),
                        seconds,
                    }
                }
            };
            steps.push(step);
        }
        if steps.is_empty() {
            return Err(Error::EmptyInput("script"));
        }
        Ok(Script { steps })
    }
}

/// Renders `script` at `fps` frames per second. Frame `k` of the whole stream
/// is stamped `round(k * 1000 / fps)` ms.
pub fn render(spec: &SynthSpec, script: &Script, fps: f64) -> Result<Vec<Inbound>> {
    if !(fps.is_finite() && fps > 0.0) {
        return Err(Error::InvalidArgument(format!("fps must be > 0, got {fps}")));
    }
    spec.validate()?;
    let vocabulary = spec.vocabulary();
    let scale = 10f64.powi(RECORD_DECIMALS);
    let mut out = vec![Inbound::Hello {
        version: PROTOCOL_VERSION,
        landmarks: Some(spec.landmarks),
        vocabulary: Some(vocabulary.labels().iter().map(|l| l.to_string()).collect()),
    }];
    let mut frame_no: u64 = 0;
    for (j, step) in script.steps.iter().enumerate() {
        match step {
            Step::Control(action) => out.push(Inbound::Control { action: *action }),
            Step::Gesture { label, seconds } => {
                let class = vocabulary.resolve(label)?;
                let count = (seconds * fps).round().max(1.0) as usize;
                for coords in spec.gesture_frames(class, STREAM_INDEX_BASE + j as u64, count) {
                    let t = (frame_no as f64 * 1000.0 / fps).round() as i64;
                    out.push(Inbound::Frame {
                        t,
                        coords: coords.into_iter().map(|v| (v * scale).round() / scale).collect(),
                    });
                    frame_no += 1;
                }
            }
        }
    }
    Ok(out)
}

/// Newline-terminated wire lines.
pub fn format_stream(records: &[Inbound]) -> String {
    let mut s = String::new();
    for r in records {
        s.push_str(&r.to_line());
        s.push('\n');
    }
    s
}
