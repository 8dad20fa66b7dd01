//! Sessions, wire protocol, replay and the network front end.

pub mod config;
pub mod eval;
pub mod protocol;
pub mod replay;
pub mod script;
pub mod server;
pub mod session;

pub use config::ServiceConfig;
pub use eval::{run_eval, Classifier, ConfusionReport};
pub use protocol::{parse_inbound, ControlAction, ErrorCode, Inbound, Outbound, PROTOCOL_VERSION};
pub use replay::{format_log, replay, replay_reader, Speed};
pub use session::{Engine, PipelineConfig, RunState, Session};
