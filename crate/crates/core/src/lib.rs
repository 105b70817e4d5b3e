//! Protomeme-based sliding-window clustering of social media streams, with a
//! sequential reference clusterer and a parallel generator/worker/coordinator
//! engine.

pub mod error;
pub mod ingest;
pub mod cluster;
pub mod protomeme;
pub mod textproc;
pub mod parallel;
pub mod eval;
pub mod cli;

pub use error::{Error, Result};
