//! Human verdicts on candidate pairs and inconsistencies.
//!
//! The store keeps an append-only history; derived state (latest verdict per
//! reviewer, pair consensus, agreed labels) is recomputed from it.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TriageError {
    #[error("unknown {kind} {id:?}")]
    NotFound { kind: SubjectKind, id: String },
    #[error("verdict {verdict:?} does not apply to a {kind}")]
    WrongVerdictKind { kind: SubjectKind, verdict: Verdict },
    #[error("a bug pattern is not allowed with verdict {0:?}")]
    PatternNotAllowed(Verdict),
    #[error("reviewer must not be empty")]
    EmptyReviewer,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SubjectKind {
    Pair,
    Inconsistency,
}

impl core::fmt::Display for SubjectKind {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(match self {
            SubjectKind::Pair => "pair",
            SubjectKind::Inconsistency => "inconsistency",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Subject {
    pub kind: SubjectKind,
    pub id: String,
}

impl Subject {
    pub fn pair(id: impl Into<String>) -> Self {
        Self {
            kind: SubjectKind::Pair,
            id: id.into(),
        }
    }

    pub fn inconsistency(id: impl Into<String>) -> Self {
        Self {
            kind: SubjectKind::Inconsistency,
            id: id.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Accept,
    Reject,
    FalseNegativeImpl,
    FalseNegativeDef,
    FalsePositive,
    NotABug,
    Undecided,
}

impl Verdict {
    pub fn applies_to(self, kind: SubjectKind) -> bool {
        matches!(
            (kind, self),
            (SubjectKind::Pair, Verdict::Accept | Verdict::Reject)
                | (
                    SubjectKind::Inconsistency,
                    Verdict::FalseNegativeImpl
                        | Verdict::FalseNegativeDef
                        | Verdict::FalsePositive
                        | Verdict::NotABug
                        | Verdict::Undecided
                )
        )
    }

    /// Whether a bug pattern may accompany this verdict.
    pub fn admits_pattern(self) -> bool {
        matches!(
            self,
            Verdict::FalseNegativeImpl | Verdict::FalseNegativeDef | Verdict::FalsePositive
        )
    }
}

/// Root-cause taxonomy of buggy rules.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum BugPattern {
    P1,
    P2,
    P3,
    P4,
    P5,
    P6,
    P7,
    P8,
    P9,
    P10,
    P11,
    P12,
    P13,
    #[serde(rename = "other")]
    Other,
}

impl BugPattern {
    pub const ALL: [BugPattern; 14] = [
        BugPattern::P1,
        BugPattern::P2,
        BugPattern::P3,
        BugPattern::P4,
        BugPattern::P5,
        BugPattern::P6,
        BugPattern::P7,
        BugPattern::P8,
        BugPattern::P9,
        BugPattern::P10,
        BugPattern::P11,
        BugPattern::P12,
        BugPattern::P13,
        BugPattern::Other,
    ];

    pub fn code(self) -> &'static str {
        match self {
            BugPattern::P1 => "P1",
            BugPattern::P2 => "P2",
            BugPattern::P3 => "P3",
            BugPattern::P4 => "P4",
            BugPattern::P5 => "P5",
            BugPattern::P6 => "P6",
            BugPattern::P7 => "P7",
            BugPattern::P8 => "P8",
            BugPattern::P9 => "P9",
            BugPattern::P10 => "P10",
            BugPattern::P11 => "P11",
            BugPattern::P12 => "P12",
            BugPattern::P13 => "P13",
            BugPattern::Other => "other",
        }
    }

    pub fn parse(code: &str) -> Option<Self> {
        Self::ALL
            .into_iter()
            .find(|p| p.code().eq_ignore_ascii_case(code))
    }

    pub fn name(self) -> &'static str {
        match self {
            BugPattern::P1 => "Fail in special data type",
            BugPattern::P2 => "Fail in compound expression",
            BugPattern::P3 => "Fail in implicit operation",
            BugPattern::P4 => "Fail in multiple calling operations",
            BugPattern::P5 => "Fail in separated expressions",
            BugPattern::P6 => "Fail in unnecessary brackets",
            BugPattern::P7 => "Fail in variables",
            BugPattern::P8 => "Miss comparable method",
            BugPattern::P9 => "Miss comparable data type or operation",
            BugPattern::P10 => "Miss subclass or superclass",
            BugPattern::P11 => "Poor handling of method with same name",
            BugPattern::P12 => "Setting over-sized scope",
            BugPattern::P13 => "Neglecting corner case",
            BugPattern::Other => "Other",
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            BugPattern::P1 => {
                "misses the defect when it involves arrays or other less common types"
            }
            BugPattern::P2 => "misses the defect inside a compound expression",
            BugPattern::P3 => "misses an implicit form of the targeted operation",
            BugPattern::P4 => "misses the defect in chained or nested calls",
            BugPattern::P5 => "misses the defect when it is split over several statements",
            BugPattern::P6 => "misses the defect when redundant parentheses alter the syntax tree",
            BugPattern::P7 => "detects constants but misses the same defect through variables",
            BugPattern::P8 => "definition omits methods equivalent to the targeted one",
            BugPattern::P9 => "definition omits equivalent types or operators",
            BugPattern::P10 => "definition omits related classes in the type hierarchy",
            BugPattern::P11 => "confuses methods that share a name",
            BugPattern::P12 => "warns on code outside the defined suspicious case",
            BugPattern::P13 => "warns on a legitimate corner case of the defined pattern",
            BugPattern::Other => "pattern not in the catalogued taxonomy",
        }
    }

    /// The finding category the pattern was catalogued under, if any.
    pub fn category(self) -> Option<crate::findings::BugCategory> {
        use crate::findings::BugCategory::*;
        match self {
            BugPattern::P1
            | BugPattern::P2
            | BugPattern::P3
            | BugPattern::P4
            | BugPattern::P5
            | BugPattern::P6
            | BugPattern::P7 => Some(FnImplementation),
            BugPattern::P8 | BugPattern::P9 | BugPattern::P10 => Some(FnDefinition),
            BugPattern::P11 | BugPattern::P12 | BugPattern::P13 => Some(FalsePositive),
            BugPattern::Other => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TriageVerdict {
    pub subject: Subject,
    pub reviewer: String,
    pub verdict: Verdict,
    #[serde(default)]
    pub pattern: Option<BugPattern>,
    #[serde(default)]
    pub note: String,
}

impl TriageVerdict {
    pub fn validate(&self) -> Result<(), TriageError> {
        if self.reviewer.trim().is_empty() {
            return Err(TriageError::EmptyReviewer);
        }
        if !self.verdict.applies_to(self.subject.kind) {
            return Err(TriageError::WrongVerdictKind {
                kind: self.subject.kind,
                verdict: self.verdict,
            });
        }
        if self.pattern.is_some() && !self.verdict.admits_pattern() {
            return Err(TriageError::PatternNotAllowed(self.verdict));
        }
        Ok(())
    }

    fn same_decision(&self, other: &TriageVerdict) -> bool {
        self.verdict == other.verdict && self.pattern == other.pattern && self.note == other.note
    }
}

/// One appended verdict.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerdictEntry {
    pub seq: u64,
    pub timestamp: u64,
    pub verdict: TriageVerdict,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecordOutcome {
    pub seq: u64,
    /// The reviewer's latest verdict was already identical; nothing appended.
    pub duplicate: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Consensus {
    /// Not every reviewer has voted and nobody disagrees yet.
    Pending,
    Confirmed,
    Rejected,
    NeedsDiscussion,
}

/// Agreed label of an inconsistency.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LabelState {
    Unlabeled,
    Agreed(Verdict, Option<BugPattern>),
    Disputed,
}

#[derive(Debug, Clone, Default)]
pub struct TriageStore {
    pairs: BTreeSet<String>,
    inconsistencies: BTreeSet<String>,
    reviewers: BTreeSet<String>,
    history: Vec<VerdictEntry>,
    latest: BTreeMap<Subject, BTreeMap<String, usize>>,
}

impl TriageStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn register_pair(&mut self, id: impl Into<String>) {
        self.pairs.insert(id.into());
    }

    pub fn register_inconsistency(&mut self, id: impl Into<String>) {
        self.inconsistencies.insert(id.into());
    }

    /// Registers a reviewer whose vote is required for pair consensus.
    pub fn register_reviewer(&mut self, reviewer: impl Into<String>) {
        self.reviewers.insert(reviewer.into());
    }

    pub fn reviewers(&self) -> &BTreeSet<String> {
        &self.reviewers
    }

    pub fn pair_ids(&self) -> impl Iterator<Item = &str> {
        self.pairs.iter().map(String::as_str)
    }

    pub fn inconsistency_ids(&self) -> impl Iterator<Item = &str> {
        self.inconsistencies.iter().map(String::as_str)
    }

    pub fn contains(&self, subject: &Subject) -> bool {
        match subject.kind {
            SubjectKind::Pair => self.pairs.contains(&subject.id),
            SubjectKind::Inconsistency => self.inconsistencies.contains(&subject.id),
        }
    }

    pub fn history(&self) -> &[VerdictEntry] {
        &self.history
    }

    /// Validates a verdict and returns the entry that recording it would
    /// append, or `None` when it repeats the reviewer's current decision.
    /// Nothing is modified; persist the entry, then [`TriageStore::restore`] it.
    pub fn prepare(
        &self,
        verdict: TriageVerdict,
        timestamp: u64,
    ) -> Result<Option<VerdictEntry>, TriageError> {
        verdict.validate()?;
        if !self.contains(&verdict.subject) {
            return Err(TriageError::NotFound {
                kind: verdict.subject.kind,
                id: verdict.subject.id.clone(),
            });
        }
        if let Some(i) = self.current_index(&verdict.subject, &verdict.reviewer) {
            if self.history[i].verdict.same_decision(&verdict) {
                return Ok(None);
            }
        }
        let seq = self.history.last().map_or(1, |e| e.seq + 1);
        Ok(Some(VerdictEntry {
            seq,
            timestamp,
            verdict,
        }))
    }

    fn current_index(&self, subject: &Subject, reviewer: &str) -> Option<usize> {
        self.latest
            .get(subject)
            .and_then(|m| m.get(reviewer))
            .copied()
    }

    /// Validates and appends a verdict. Repeating a reviewer's current
    /// decision is a no-op that returns the existing sequence number.
    pub fn record_verdict(
        &mut self,
        verdict: TriageVerdict,
        timestamp: u64,
    ) -> Result<RecordOutcome, TriageError> {
        let (subject, reviewer) = (verdict.subject.clone(), verdict.reviewer.clone());
        match self.prepare(verdict, timestamp)? {
            Some(entry) => {
                let seq = entry.seq;
                self.push(entry);
                Ok(RecordOutcome {
                    seq,
                    duplicate: false,
                })
            }
            None => {
                let i = self
                    .current_index(&subject, &reviewer)
                    .expect("duplicate implies a current verdict");
                Ok(RecordOutcome {
                    seq: self.history[i].seq,
                    duplicate: true,
                })
            }
        }
    }

    /// Replays a previously persisted entry, keeping its sequence number.
    pub fn restore(&mut self, entry: VerdictEntry) -> Result<(), TriageError> {
        entry.verdict.validate()?;
        if !self.contains(&entry.verdict.subject) {
            return Err(TriageError::NotFound {
                kind: entry.verdict.subject.kind,
                id: entry.verdict.subject.id.clone(),
            });
        }
        self.push(entry);
        Ok(())
    }

    fn push(&mut self, entry: VerdictEntry) {
        let i = self.history.len();
        self.latest
            .entry(entry.verdict.subject.clone())
            .or_default()
            .insert(entry.verdict.reviewer.clone(), i);
        self.history.push(entry);
    }

    /// Latest verdict of every reviewer on `subject`, by reviewer.
    pub fn latest(&self, subject: &Subject) -> impl Iterator<Item = (&str, &TriageVerdict)> {
        self.latest
            .get(subject)
            .into_iter()
            .flat_map(|m| m.iter())
            .map(|(r, &i)| (r.as_str(), &self.history[i].verdict))
    }

    /// Unanimous accept confirms, unanimous reject rejects, any split needs
    /// discussion; otherwise pending. Without registered reviewers the
    /// reviewers who voted on the pair decide.
    pub fn pair_consensus(&self, pair_id: &str) -> Consensus {
        let votes: BTreeMap<&str, Verdict> = self
            .latest(&Subject::pair(pair_id))
            .map(|(r, v)| (r, v.verdict))
            .collect();
        if votes.is_empty() {
            return Consensus::Pending;
        }
        let accepts = votes.values().filter(|v| **v == Verdict::Accept).count();
        let rejects = votes.len() - accepts;
        if accepts > 0 && rejects > 0 {
            return Consensus::NeedsDiscussion;
        }
        let complete = self.reviewers.is_empty()
            || self
                .reviewers
                .iter()
                .all(|r| votes.contains_key(r.as_str()));
        match (complete, accepts > 0) {
            (false, _) => Consensus::Pending,
            (true, true) => Consensus::Confirmed,
            (true, false) => Consensus::Rejected,
        }
    }

    pub fn confirmed_pairs(&self) -> impl Iterator<Item = &str> {
        self.pairs
            .iter()
            .map(String::as_str)
            .filter(|id| self.pair_consensus(id) == Consensus::Confirmed)
    }

    /// The label all reviewers of the inconsistency agree on.
    pub fn inconsistency_label(&self, id: &str) -> LabelState {
        let mut labels = self
            .latest(&Subject::inconsistency(id))
            .map(|(_, v)| (v.verdict, v.pattern));
        match labels.next() {
            None => LabelState::Unlabeled,
            Some(first) if labels.all(|l| l == first) => LabelState::Agreed(first.0, first.1),
            Some(_) => LabelState::Disputed,
        }
    }
}
