//! Analysis and reward toolkit for reasoning-trace corpora: span
//! segmentation, nine-way primitive labels, break-aware k-gram motif
//! statistics, depth and pass@k metrics, constraint-puzzle verifier rewards,
//! and the frozen-reference top-k NLL novelty bonus.
//!
//! The `tracekit` binary front-ends the same operations over JSONL/CSV
//! files; see the crate README for the file formats.

pub mod cli;
pub mod corpus;
pub mod metrics;
pub mod motifs;
pub mod novelty;
pub mod primitives;
pub mod report;
pub mod segmenter;
pub mod verifiers;

pub use corpus::{Corpus, RolloutRecord, TraceKey};
pub use primitives::{Primitive, PrimitiveSequence};
