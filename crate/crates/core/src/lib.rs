//! Pre-learning assessment engine.
//!
//! A knowledge graph of parent concepts and their leaf sub-concepts drives short pre-assessments.
//! Outcomes turn into difference-of-probability fail weights and relearn/progress recommendations;
//! cohort data feeds Bayes fail posteriors, entropy/gain analytics and a decision tree.

pub mod dtree;
pub mod graph;
pub mod infotheory;
mod outcome;
pub mod probability;
pub mod session;
pub mod store;

pub use outcome::{Outcome, ParseOutcomeError};

/// Stable machine-readable error codes shared by the CLI and HTTP layers.
pub trait ErrorCode {
    fn code(&self) -> &'static str;
}
