//! Collaborative inference between a Kolmogorov-Arnold network small model
//! and an expensive large model.
//!
//! A judgment network answers the samples it is confident about, a
//! distilled copy of it answers the next tier, and only the rest reach the
//! large model, whose requests carry the small model's confidence and
//! ranking. See the `examples/` directory for one runnable program per
//! capability.

pub mod backends;
pub mod cli;
pub mod collab;
pub mod config;
pub mod data;
pub mod eval;
pub mod kan;
pub mod models;
