//! Wire records. Every record is one JSON object on one line with a `type`
//! discriminator.
//!
//! Inbound:
//!
//! ```text
//! {"type":"hello","version":1,"landmarks":129,"vocabulary":["not_signing", ...]}
//! {"type":"frame","t":1033,"coords":[0.51,0.42, ...]}
//! {"type":"control","action":"start"|"stop"|"generate"|"reset"}
//! ```
//!
//! Outbound:
//!
//! ```text
//! {"type":"prediction","t":1033,"label":"blood","confidence":0.97,"window_full":true}
//! {"type":"keyword","t":7100,"label":"blood","keywords":["blood"]}
//! {"type":"sentence","t":7200,"text":"I am bleeding.","matched":true}
//! {"type":"error","code":"protocol","message":"..."}
//! {"type":"ack","of":"start"}
//! ```
//!
//! `landmarks` and `vocabulary` in `hello` are optional; when present they
//! must agree with the loaded model. `hello`, `start`, `stop` and `reset` are
//! answered with an `ack`; `generate` is answered with a `sentence`, or an
//! `empty_keywords` error when nothing has been detected. Frames are
//! acknowledged only while the session is not interpreting.

use std::fmt;

use serde::{Deserialize, Serialize};

pub const PROTOCOL_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ControlAction {
    Start,
    Stop,
    Generate,
    Reset,
}

impl ControlAction {
    pub fn as_str(self) -> &'static str {
        match self {
            ControlAction::Start => "start",
            ControlAction::Stop => "stop",
            ControlAction::Generate => "generate",
            ControlAction::Reset => "reset",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum Inbound {
    Hello {
        version: u32,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        landmarks: Option<usize>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        vocabulary: Option<Vec<String>>,
    },
    Frame {
        t: i64,
        coords: Vec<f64>,
    },
    Control {
        action: ControlAction,
    },
}

impl Inbound {
    pub fn kind(&self) -> &'static str {
        match self {
            Inbound::Hello { .. } => "hello",
            Inbound::Frame { .. } => "frame",
            Inbound::Control { .. } => "control",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorCode {
    /// Record is not valid JSON or does not match its type's schema.
    Malformed,
    UnknownType,
    /// Message not allowed in the current session state.
    Protocol,
    Version,
    Dimension,
    Vocabulary,
    Timestamp,
    EmptyKeywords,
    Model,
}

impl fmt::Display for ErrorCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = serde_json::to_value(self).expect("codes serialize");
        f.write_str(s.as_str().expect("codes are strings"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum Outbound {
    Prediction {
        t: i64,
        label: String,
        confidence: f64,
        window_full: bool,
    },
    Keyword {
        t: i64,
        label: String,
        keywords: Vec<String>,
    },
    Sentence {
        t: i64,
        text: String,
        matched: bool,
    },
    Error {
        code: ErrorCode,
        message: String,
    },
    Ack {
        of: String,
    },
}

impl Outbound {
    pub fn error(code: ErrorCode, message: impl Into<String>) -> Self {
        Outbound::Error {
            code,
            message: message.into(),
        }
    }

    pub fn ack(of: &str) -> Self {
        Outbound::Ack { of: of.to_owned() }
    }

    /// Single-line JSON encoding.
    pub fn to_line(&self) -> String {
        serde_json::to_string(self).expect("outbound records serialize")
    }
}

const INBOUND_TYPES: [&str; 3] = ["hello", "frame", "control"];

/// Parses one inbound record, classifying failures into wire error codes.
pub fn parse_inbound(line: &str) -> Result<Inbound, Outbound> {
    let value: serde_json::Value = serde_json::from_str(line)
        .map_err(|e| Outbound::error(ErrorCode::Malformed, format!("invalid JSON: {e}")))?;
    let kind = value
        .get("type")
        .and_then(|t| t.as_str())
        .map(str::to_owned)
        .ok_or_else(|| Outbound::error(ErrorCode::Malformed, "record has no string `type` field"))?;
    if !INBOUND_TYPES.contains(&kind.as_str()) {
        return Err(Outbound::error(
            ErrorCode::UnknownType,
            format!("unknown inbound type `{kind}`"),
        ));
    }
    serde_json::from_value(value)
        .map_err(|e| Outbound::error(ErrorCode::Malformed, format!("invalid `{kind}` record: {e}")))
}

impl Inbound {
    pub fn to_line(&self) -> String {
        serde_json::to_string(self).expect("inbound records serialize")
    }
}
