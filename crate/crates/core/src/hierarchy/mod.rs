//! Leveled models of macs with overlapping receptive fields, activation gating, code
//! persistence and memory traces.

mod config;
mod model;
mod trace;

pub use config::{LevelConfig, MacTemplate, ModelConfig, Placement};
pub use model::{FrameOutput, Level, Model, ModelStats, RunState};
pub use trace::{recognition_match, ActiveMac, BinaryVector, Trace, TraceStep};
