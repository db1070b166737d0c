//! Review state shared by the `report` and `diff` commands and the review
//! server: candidates, inconsistencies and the replayed verdict log.

use std::collections::BTreeMap;

use serde::Serialize;

use rulediff_core::diff::{ConfirmedPair, InconsistencyRecord, PairDiffSummary};
use rulediff_core::findings::{summarize_findings, FindingKey, PatternRow};
use rulediff_core::mapping::{MappingReport, PairCandidate};
use rulediff_core::triage::{Consensus, LabelState, Subject, TriageError, VerdictEntry};
use rulediff_core::{BugCategory, FindingStatus, FindingsReport, TriageStore};

#[derive(Debug, Clone, Default)]
pub struct ReviewState {
    pub candidates: Vec<PairCandidate>,
    pub inconsistencies: Vec<InconsistencyRecord>,
    pub store: TriageStore,
    pub funnel: Option<MappingReport>,
    pub statuses: BTreeMap<FindingKey, FindingStatus>,
    pub pair_counts: Vec<PairDiffSummary>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CategoryTable {
    pub category: BugCategory,
    pub title: &'static str,
    pub rows: Vec<PatternRow>,
}

/// Everything `GET /report` and `rulediff report` emit.
#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub findings: FindingsReport,
    pub tables: Vec<CategoryTable>,
    /// Confirmed pairs that `diff` will process, in candidate order.
    pub diff_eligible: Vec<ConfirmedPair>,
    pub pair_counts: Vec<PairDiffSummary>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct PairProgress {
    pub total: usize,
    pub pending: usize,
    pub confirmed: usize,
    pub rejected: usize,
    pub needs_discussion: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct LabelProgress {
    pub total: usize,
    pub unlabeled: usize,
    pub agreed: usize,
    pub disputed: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Progress {
    pub pairs: PairProgress,
    pub inconsistencies: LabelProgress,
    pub reviewers: Vec<String>,
    pub verdicts: usize,
}

impl ReviewState {
    pub fn new(
        candidates: Vec<PairCandidate>,
        inconsistencies: Vec<InconsistencyRecord>,
        reviewers: &[String],
    ) -> Self {
        let mut store = TriageStore::new();
        for c in &candidates {
            store.register_pair(c.id.as_str());
        }
        for i in &inconsistencies {
            store.register_inconsistency(i.id.as_str());
        }
        for r in reviewers {
            store.register_reviewer(r.clone());
        }
        Self {
            candidates,
            inconsistencies,
            store,
            ..Self::default()
        }
    }

    /// Replays a verdict log. Entries about subjects this state does not hold
    /// are skipped and counted.
    pub fn replay(&mut self, entries: Vec<VerdictEntry>) -> Result<usize, TriageError> {
        let mut skipped = 0;
        for e in entries {
            if self.store.contains(&e.verdict.subject) {
                self.store.restore(e)?;
            } else {
                skipped += 1;
            }
        }
        Ok(skipped)
    }

    pub fn candidate(&self, id: &str) -> Option<&PairCandidate> {
        self.candidates.iter().find(|c| c.id.as_str() == id)
    }

    pub fn inconsistency(&self, id: &str) -> Option<&InconsistencyRecord> {
        self.inconsistencies.iter().find(|i| i.id.as_str() == id)
    }

    pub fn consensus(&self, id: &str) -> Consensus {
        self.store.pair_consensus(id)
    }

    pub fn confirmed(&self) -> Vec<ConfirmedPair> {
        self.candidates
            .iter()
            .filter(|c| self.consensus(c.id.as_str()) == Consensus::Confirmed)
            .map(ConfirmedPair::from)
            .collect()
    }

    pub fn report(&self) -> Report {
        let confirmed = self.confirmed();
        let funnel = self.funnel.map(|f| MappingReport {
            confirmed: Some(confirmed.len()),
            ..f
        });
        let findings =
            summarize_findings(&self.store, &self.inconsistencies, &self.statuses, funnel);
        let tables = BugCategory::ALL
            .iter()
            .map(|&category| CategoryTable {
                category,
                title: category.title(),
                rows: findings.pattern_rows(category),
            })
            .collect();
        Report {
            findings,
            tables,
            diff_eligible: confirmed,
            pair_counts: self.pair_counts.clone(),
        }
    }

    pub fn progress(&self) -> Progress {
        let mut pairs = PairProgress {
            total: self.candidates.len(),
            ..PairProgress::default()
        };
        for c in &self.candidates {
            match self.consensus(c.id.as_str()) {
                Consensus::Pending => pairs.pending += 1,
                Consensus::Confirmed => pairs.confirmed += 1,
                Consensus::Rejected => pairs.rejected += 1,
                Consensus::NeedsDiscussion => pairs.needs_discussion += 1,
            }
        }
        let mut labels = LabelProgress {
            total: self.inconsistencies.len(),
            ..LabelProgress::default()
        };
        for i in &self.inconsistencies {
            match self.store.inconsistency_label(i.id.as_str()) {
                LabelState::Unlabeled => labels.unlabeled += 1,
                LabelState::Agreed(..) => labels.agreed += 1,
                LabelState::Disputed => labels.disputed += 1,
            }
        }
        Progress {
            pairs,
            inconsistencies: labels,
            reviewers: self.store.reviewers().iter().cloned().collect(),
            verdicts: self.store.history().len(),
        }
    }

    /// Latest verdict per reviewer on a subject.
    pub fn votes(&self, subject: &Subject) -> BTreeMap<String, rulediff_core::Verdict> {
        self.store
            .latest(subject)
            .map(|(r, v)| (r.to_string(), v.verdict))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rulediff_core::triage::TriageVerdict;
    use rulediff_core::{RuleRef, SimilarityScores, Verdict};

    fn candidate(a: &str, b: &str) -> PairCandidate {
        PairCandidate::new(
            RuleRef::new("x", a),
            RuleRef::new("y", b),
            SimilarityScores::ZERO,
        )
    }

    #[test]
    fn replay_skips_foreign_subjects() {
        let mut s = ReviewState::new(vec![candidate("a", "b")], vec![], &[]);
        let id = s.candidates[0].id.to_string();
        let entry = |seq, subject: Subject| VerdictEntry {
            seq,
            timestamp: 0,
            verdict: TriageVerdict {
                subject,
                reviewer: "r".into(),
                verdict: Verdict::Accept,
                pattern: None,
                note: String::new(),
            },
        };
        let skipped = s
            .replay(vec![
                entry(1, Subject::pair(&id)),
                entry(2, Subject::pair("gone")),
            ])
            .unwrap();
        assert_eq!(skipped, 1);
        assert_eq!(s.confirmed().len(), 1);
        let p = s.progress();
        assert_eq!((p.pairs.total, p.pairs.confirmed, p.verdicts), (1, 1, 1));
        assert_eq!(s.report().diff_eligible[0].id.as_str(), id);
    }
}
