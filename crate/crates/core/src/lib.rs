//! Core vocabulary and pure logic for prepline, a preparation-learning
//! service for flipped classrooms.
//!
//! * [`domain`] holds the records shared by every layer (videos, users,
//!   responses, replies, watch events, teacher annotations) together with
//!   their validity rules.
//! * [`subtitle`] parses WebVTT and SRT documents and extracts the cue window
//!   around a question's timeline position.
//! * [`prompt`] turns a question plus its subtitle window into the message
//!   envelope sent to a chat-completion provider.
//! * [`analytics`] computes response histograms and watch coverage.
//!
//! Everything here is free of I/O.

pub mod analytics;
pub mod domain;
pub mod prompt;
pub mod subtitle;

pub use domain::*;
