//! Privacy-preserving inference toolkit: a leveled CKKS-style scheme over
//! RNS polynomials, a compiler from small ML models to encrypted circuits,
//! an instrumented execution engine, and a discrete-event simulator of an
//! autoscaled inference cluster.

pub mod bench;
pub mod compiler;
pub mod engine;
pub mod error;
pub mod format;
pub mod models;
pub mod ring;
pub mod scheme;
pub mod sim;

pub use error::{Error, ErrorCategory, Result};
