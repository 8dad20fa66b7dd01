//! Deterministic replay of recorded inbound streams.

use std::io::BufRead;
use std::path::Path;
use std::str::FromStr;
use std::sync::Arc;
use std::thread;
use std::time::Duration;

use crate::error::{Error, Result};

use super::protocol::{parse_inbound, ErrorCode, Inbound, Outbound};
use super::session::{Engine, Session};

/// Real-time pacing of a replay. Never affects the produced log.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Speed {
    Max,
    /// Multiple of real time.
    Factor(f64),
}

impl FromStr for Speed {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.eq_ignore_ascii_case("max") {
            return Ok(Speed::Max);
        }
        match s.parse::<f64>() {
            Ok(f) if f > 0.0 && f.is_finite() => Ok(Speed::Factor(f)),
            _ => Err(Error::InvalidArgument(format!("speed must be `max` or a positive number, got `{s}`"))),
        }
    }
}

/// Feeds every line of `input` through a fresh session and returns the
/// outbound log. Blank lines are skipped. Lines that do not parse, and frames
/// whose timestamp goes backwards, abort the replay.
pub fn replay_reader<R: BufRead>(engine: Arc<Engine>, input: R, origin: &Path, speed: Speed) -> Result<Vec<Outbound>> {
    let mut session = Session::new(engine, 0);
    let mut paced_from: Option<i64> = None;
    for (i, line) in input.lines().enumerate() {
        let n = i + 1;
        let line = line.map_err(|e| Error::io(origin, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let msg = parse_inbound(&line).map_err(|e| match e {
            Outbound::Error { message, .. } => Error::malformed(origin, n, message),
            _ => unreachable!("parse failures are error records"),
        })?;
        let frame_t = match &msg {
            Inbound::Frame { t, .. } => Some(*t),
            _ => None,
        };
        if let (Speed::Factor(f), Some(t)) = (speed, frame_t) {
            if let Some(prev) = paced_from {
                let gap_ms = (t - prev).max(0) as f64 / f;
                thread::sleep(Duration::from_secs_f64(gap_ms / 1000.0));
            }
            paced_from = Some(t);
        }
        let last = session.clock();
        let out = session.handle_message(msg);
        let regressed = out
            .iter()
            .any(|o| matches!(o, Outbound::Error { code: ErrorCode::Timestamp, .. }));
        if regressed {
            return Err(Error::TimestampRegression {
                last_ms: last.unwrap_or(0),
                t_ms: frame_t.unwrap_or(0),
            });
        }
    }
    Ok(session.log().to_vec())
}

pub fn replay(engine: Arc<Engine>, path: &Path, speed: Speed) -> Result<Vec<Outbound>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    replay_reader(engine, std::io::BufReader::new(file), path, speed)
}

/// One JSON record per line, each line newline-terminated.
pub fn format_log(log: &[Outbound]) -> String {
    let mut s = String::new();
    for o in log {
        s.push_str(&o.to_line());
        s.push('\n');
    }
    s
}
