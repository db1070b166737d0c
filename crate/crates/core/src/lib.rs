//! Algorithms for differential testing of static bug finders.
//!
//! The crate pairs rules from two bug finders by description similarity and
//! warning overlap, diffs the warnings of confirmed pairs, and aggregates
//! human verdicts into findings. Everything here is pure computation over
//! in-memory values; file formats, parallel scoring and the review API live
//! in the `rulediff` crate.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod agreement;
pub mod catalog;
pub mod diff;
pub mod findings;
pub mod id;
pub mod mapping;
pub mod similarity;
pub mod text;
pub mod triage;
pub mod warnings;

pub use catalog::{CodeExample, ExampleKind, RuleCatalog, RuleDescriptor, RuleRef};
pub use diff::{
    ConfirmedPair, Criterion, DiffOutcome, Granularity, GranularityMap, InconsistencyRecord,
    Location, MethodSpanIndex, Side,
};
pub use findings::{BugCategory, BugFinding, FindingStatus, FindingsReport};
pub use id::{InconsistencyId, PairId};
pub use mapping::{MappingConfig, MappingReport, PairCandidate, PipelineOutcome};
pub use similarity::{EmbeddingModel, IdfMode, SimilarityIndex, SimilarityScores, TermVector};
pub use triage::{BugPattern, Consensus, TriageStore, TriageVerdict, Verdict};
pub use warnings::{MethodSpan, WarningIndex, WarningRecord, WarningStore};
