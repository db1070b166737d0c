//! Four-stage retrieval of candidate rule pairs.
//!
//! Stage a keeps pairs that are in each other's top-N by description
//! similarity. Stage b locks pairs whose warned lines overlap by at least the
//! lock threshold on both sides and removes every other candidate touching a
//! locked rule. Stage c prunes pairs whose trigger counts differ too much, and
//! stage d prunes pairs whose warned files barely overlap. Locked pairs skip
//! stages c and d; pairs with an untriggered rule are not examined by b and d.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::catalog::{RuleCatalog, RuleRef};
use crate::id::PairId;
use crate::similarity::{ScoreMatrix, SimilarityScores};
use crate::warnings::{LineLoc, WarningIndex};

/// Number of co-warned lines attached to each candidate for reviewers.
pub const SAMPLE_LOCATIONS: usize = 5;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MappingError {
    #[error("top_n must be positive")]
    TopN,
    #[error("lock_threshold must be in (0, 1], got {0}")]
    LockThreshold(f64),
    #[error("trigger_ratio_max must exceed 1, got {0}")]
    TriggerRatio(f64),
    #[error("file_overlap_min must be in [0, 1], got {0}")]
    FileOverlap(f64),
    #[error("both catalogs belong to tool {0:?}")]
    SameTool(String),
}

/// How stage c compares trigger counts.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TriggerMode {
    /// `max / max(1, min)` must not exceed the threshold.
    #[default]
    Ratio,
    /// `|a - b|` must not exceed the threshold.
    AbsoluteDifference,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MappingConfig {
    pub top_n: usize,
    pub lock_threshold: f64,
    pub trigger_ratio_max: f64,
    pub file_overlap_min: f64,
    pub idf_log: bool,
    pub stopwords: bool,
    pub trigger_mode: TriggerMode,
}

impl Default for MappingConfig {
    fn default() -> Self {
        Self {
            top_n: 3,
            lock_threshold: 0.80,
            trigger_ratio_max: 20.0,
            file_overlap_min: 0.02,
            idf_log: false,
            stopwords: false,
            trigger_mode: TriggerMode::Ratio,
        }
    }
}

impl MappingConfig {
    pub fn validate(&self) -> Result<(), MappingError> {
        if self.top_n == 0 {
            return Err(MappingError::TopN);
        }
        if !(self.lock_threshold > 0.0 && self.lock_threshold <= 1.0) {
            return Err(MappingError::LockThreshold(self.lock_threshold));
        }
        if self.trigger_ratio_max.is_nan() || self.trigger_ratio_max <= 1.0 {
            return Err(MappingError::TriggerRatio(self.trigger_ratio_max));
        }
        if !(0.0..=1.0).contains(&self.file_overlap_min) {
            return Err(MappingError::FileOverlap(self.file_overlap_min));
        }
        Ok(())
    }

    pub fn idf_mode(&self) -> crate::similarity::IdfMode {
        if self.idf_log {
            crate::similarity::IdfMode::LogRatio
        } else {
            crate::similarity::IdfMode::Ratio
        }
    }

    pub fn text_options(&self) -> crate::text::TextOptions {
        crate::text::TextOptions {
            remove_stopwords: self.stopwords,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StageId {
    A,
    B,
    C,
    D,
}

/// Why a candidate left the pipeline, with the measured value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PruneReason {
    /// Shares a rule with a pair locked in stage b.
    LockConflict {
        locked_with: PairId,
    },
    TriggerDisparity {
        measured: f64,
        threshold: f64,
    },
    FileOverlap {
        measured: f64,
        threshold: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum CandidateStage {
    AfterA,
    LockedB,
    AfterC,
    AfterD,
    Pruned { stage: StageId, reason: PruneReason },
}

impl CandidateStage {
    pub fn is_pruned(&self) -> bool {
        matches!(self, CandidateStage::Pruned { .. })
    }
}

/// Warning overlap of a candidate whose two rules are both triggered.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OverlapMetrics {
    pub ratio_a: f64,
    pub ratio_b: f64,
    pub file_jaccard: f64,
    pub trigger_a: usize,
    pub trigger_b: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairCandidate {
    pub id: PairId,
    pub rule_a: RuleRef,
    pub rule_b: RuleRef,
    pub scores: SimilarityScores,
    pub stage: CandidateStage,
    pub overlap: Option<OverlapMetrics>,
    /// A few lines warned by both rules, for reviewers.
    pub samples: Vec<LineLoc>,
}

impl PairCandidate {
    pub fn new(rule_a: RuleRef, rule_b: RuleRef, scores: SimilarityScores) -> Self {
        Self {
            id: PairId::new(&rule_a, &rule_b),
            rule_a,
            rule_b,
            scores,
            stage: CandidateStage::AfterA,
            overlap: None,
            samples: Vec::new(),
        }
    }

    fn key(&self) -> (&RuleRef, &RuleRef) {
        (&self.rule_a, &self.rule_b)
    }

    fn prune(mut self, stage: StageId, reason: PruneReason) -> Self {
        self.stage = CandidateStage::Pruned { stage, reason };
        self
    }
}

/// Candidate counts through the pipeline.
///
/// `after_b`, `after_c` and `after_d` include the locked pairs, which survive
/// to the end; `locked` reports them on their own.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MappingReport {
    pub total_candidates: usize,
    pub after_a: usize,
    pub after_b: usize,
    pub locked: usize,
    pub after_c: usize,
    pub after_d: usize,
    pub confirmed: Option<usize>,
}

impl MappingReport {
    /// Confirmed pairs per surviving candidate.
    pub fn hitting_rate(&self) -> Option<f64> {
        match self.confirmed {
            Some(c) if self.after_d > 0 => Some(c as f64 / self.after_d as f64),
            _ => None,
        }
    }
}

fn ranked_top_n<'a>(
    scores: impl Iterator<Item = (usize, &'a SimilarityScores)>,
    ids: &[RuleRef],
    n: usize,
) -> BTreeSet<usize> {
    let mut ranked: Vec<(usize, f64)> = scores
        .map(|(i, s)| (i, s.description_sim))
        .filter(|(_, s)| *s > 0.0)
        .collect();
    ranked.sort_by(|(ia, sa), (ib, sb)| {
        sb.total_cmp(sa)
            .then_with(|| ids[*ia].rule_id.cmp(&ids[*ib].rule_id))
            .then_with(|| ids[*ia].cmp(&ids[*ib]))
    });
    ranked.into_iter().take(n).map(|(i, _)| i).collect()
}

/// Pairs that rank in each other's top-N by description similarity.
///
/// Ties at the cut are broken by ascending rule id; zero scores never rank.
pub fn stage_a_mutual_top_n(matrix: &ScoreMatrix, config: &MappingConfig) -> Vec<PairCandidate> {
    let (rows, cols) = (matrix.rows(), matrix.cols());
    let top_of_row: Vec<BTreeSet<usize>> = (0..rows.len())
        .map(|i| {
            ranked_top_n(
                (0..cols.len()).map(|j| (j, matrix.get(i, j))),
                cols,
                config.top_n,
            )
        })
        .collect();
    let top_of_col: Vec<BTreeSet<usize>> = (0..cols.len())
        .map(|j| {
            ranked_top_n(
                (0..rows.len()).map(|i| (i, matrix.get(i, j))),
                rows,
                config.top_n,
            )
        })
        .collect();
    let mut out = Vec::new();
    for (i, top) in top_of_row.iter().enumerate() {
        for &j in top {
            if top_of_col[j].contains(&i) {
                out.push(PairCandidate::new(
                    rows[i].clone(),
                    cols[j].clone(),
                    *matrix.get(i, j),
                ));
            }
        }
    }
    out.sort_by(|x, y| x.key().cmp(&y.key()));
    out
}

fn attach_overlap(candidate: &mut PairCandidate, index: &WarningIndex) {
    let (a, b) = (&candidate.rule_a, &candidate.rule_b);
    if let (Ok((ratio_a, ratio_b)), Ok(file_jaccard)) =
        (index.line_overlap(a, b), index.file_overlap(a, b))
    {
        candidate.overlap = Some(OverlapMetrics {
            ratio_a,
            ratio_b,
            file_jaccard,
            trigger_a: index.trigger_count(a),
            trigger_b: index.trigger_count(b),
        });
        candidate.samples = index.co_warned_lines(a, b, SAMPLE_LOCATIONS);
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct StageOutcome {
    pub kept: Vec<PairCandidate>,
    pub pruned: Vec<PairCandidate>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct LockOutcome {
    pub locked: Vec<PairCandidate>,
    pub remaining: Vec<PairCandidate>,
    pub pruned: Vec<PairCandidate>,
}

/// Locks one-to-one pairs with high mutual line overlap.
///
/// Qualifying candidates are taken in descending `min(ratio_a, ratio_b)`;
/// each lock removes every other candidate sharing one of its rules. Must run
/// sequentially.
pub fn stage_b_lock_one_to_one(
    mut candidates: Vec<PairCandidate>,
    index: &WarningIndex,
    config: &MappingConfig,
) -> LockOutcome {
    for c in &mut candidates {
        attach_overlap(c, index);
    }
    let qualifies = |c: &PairCandidate| {
        c.overlap.is_some_and(|o| {
            o.ratio_a >= config.lock_threshold && o.ratio_b >= config.lock_threshold
        })
    };
    let strength = |c: &PairCandidate| c.overlap.map_or(0.0, |o| o.ratio_a.min(o.ratio_b));

    let mut order: Vec<usize> = (0..candidates.len())
        .filter(|&i| qualifies(&candidates[i]))
        .collect();
    order.sort_by(|&x, &y| {
        strength(&candidates[y])
            .total_cmp(&strength(&candidates[x]))
            .then_with(|| candidates[x].key().cmp(&candidates[y].key()))
    });

    let mut locked_idx: BTreeSet<usize> = BTreeSet::new();
    let mut lock_by_a: BTreeMap<RuleRef, PairId> = BTreeMap::new();
    let mut lock_by_b: BTreeMap<RuleRef, PairId> = BTreeMap::new();
    for i in order {
        let c = &candidates[i];
        if lock_by_a.contains_key(&c.rule_a) || lock_by_b.contains_key(&c.rule_b) {
            continue;
        }
        lock_by_a.insert(c.rule_a.clone(), c.id.clone());
        lock_by_b.insert(c.rule_b.clone(), c.id.clone());
        locked_idx.insert(i);
    }

    let mut outcome = LockOutcome::default();
    for (i, mut c) in candidates.into_iter().enumerate() {
        if locked_idx.contains(&i) {
            c.stage = CandidateStage::LockedB;
            outcome.locked.push(c);
            continue;
        }
        let conflict = lock_by_a
            .get(&c.rule_a)
            .or_else(|| lock_by_b.get(&c.rule_b))
            .cloned();
        match conflict {
            Some(locked_with) => outcome
                .pruned
                .push(c.prune(StageId::B, PruneReason::LockConflict { locked_with })),
            None => outcome.remaining.push(c),
        }
    }
    outcome
}

/// Prunes pairs whose trigger counts differ by more than the configured bound.
pub fn stage_c_trigger_ratio(
    candidates: Vec<PairCandidate>,
    index: &WarningIndex,
    config: &MappingConfig,
) -> StageOutcome {
    let mut outcome = StageOutcome::default();
    for mut c in candidates {
        let (ta, tb) = (
            index.trigger_count(&c.rule_a),
            index.trigger_count(&c.rule_b),
        );
        let measured = match config.trigger_mode {
            TriggerMode::Ratio => ta.max(tb) as f64 / ta.min(tb).max(1) as f64,
            TriggerMode::AbsoluteDifference => ta.abs_diff(tb) as f64,
        };
        if measured > config.trigger_ratio_max {
            outcome.pruned.push(c.prune(
                StageId::C,
                PruneReason::TriggerDisparity {
                    measured,
                    threshold: config.trigger_ratio_max,
                },
            ));
        } else {
            c.stage = CandidateStage::AfterC;
            outcome.kept.push(c);
        }
    }
    outcome
}

/// Prunes pairs whose warned-file Jaccard index is below the configured minimum.
/// Pairs with an untriggered rule pass unexamined.
pub fn stage_d_file_overlap(
    candidates: Vec<PairCandidate>,
    index: &WarningIndex,
    config: &MappingConfig,
) -> StageOutcome {
    let mut outcome = StageOutcome::default();
    for mut c in candidates {
        match index.file_overlap(&c.rule_a, &c.rule_b) {
            Ok(measured) if measured < config.file_overlap_min => {
                outcome.pruned.push(c.prune(
                    StageId::D,
                    PruneReason::FileOverlap {
                        measured,
                        threshold: config.file_overlap_min,
                    },
                ));
            }
            _ => {
                c.stage = CandidateStage::AfterD;
                outcome.kept.push(c);
            }
        }
    }
    outcome
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineOutcome {
    /// Locked pairs and stage d survivors, sorted by rule pair; awaiting review.
    pub survivors: Vec<PairCandidate>,
    /// Stage a candidates removed later, sorted by rule pair.
    pub pruned: Vec<PairCandidate>,
    pub report: MappingReport,
}

/// Runs stages a through d over a precomputed score matrix.
pub fn run_pipeline(
    matrix: &ScoreMatrix,
    index: &WarningIndex,
    config: &MappingConfig,
) -> Result<PipelineOutcome, MappingError> {
    config.validate()?;
    if let (Some(a), Some(b)) = (matrix.rows().first(), matrix.cols().first()) {
        if a.tool == b.tool {
            return Err(MappingError::SameTool(a.tool.clone()));
        }
    }
    let after_a = stage_a_mutual_top_n(matrix, config);
    let mut report = MappingReport {
        total_candidates: matrix.len(),
        after_a: after_a.len(),
        ..MappingReport::default()
    };
    let lock = stage_b_lock_one_to_one(after_a, index, config);
    report.locked = lock.locked.len();
    report.after_b = lock.locked.len() + lock.remaining.len();
    let c = stage_c_trigger_ratio(lock.remaining, index, config);
    report.after_c = report.locked + c.kept.len();
    let d = stage_d_file_overlap(c.kept, index, config);
    report.after_d = report.locked + d.kept.len();

    let mut survivors = lock.locked;
    survivors.extend(d.kept);
    survivors.sort_by(|x, y| x.key().cmp(&y.key()));
    let mut pruned = lock.pruned;
    pruned.extend(c.pruned);
    pruned.extend(d.pruned);
    pruned.sort_by(|x, y| x.key().cmp(&y.key()));
    Ok(PipelineOutcome {
        survivors,
        pruned,
        report,
    })
}

/// A rule pair selected purely from warning evidence, for recall estimation.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct GroundTruthCandidate {
    pub id: PairId,
    pub rule_a: RuleRef,
    pub rule_b: RuleRef,
    pub trigger_a: usize,
    pub trigger_b: usize,
}

/// Minimum trigger count (exclusive) for ground-truth candidates.
pub const GROUND_TRUTH_MIN_TRIGGERS: usize = 10;

/// Cross-tool pairs with identical warned-file sets and both trigger counts
/// above [`GROUND_TRUTH_MIN_TRIGGERS`].
pub fn ground_truth_candidates(
    index: &WarningIndex,
    catalog_a: &RuleCatalog,
    catalog_b: &RuleCatalog,
) -> Vec<GroundTruthCandidate> {
    let eligible = |cat: &RuleCatalog| -> Vec<(RuleRef, usize)> {
        cat.rule_refs()
            .map(|r| {
                let n = index.trigger_count(&r);
                (r, n)
            })
            .filter(|(_, n)| *n > GROUND_TRUTH_MIN_TRIGGERS)
            .collect()
    };
    let (side_a, side_b) = (eligible(catalog_a), eligible(catalog_b));
    let mut out = Vec::new();
    for (a, ta) in &side_a {
        for (b, tb) in &side_b {
            if index.warned_files(a) == index.warned_files(b) {
                out.push(GroundTruthCandidate {
                    id: PairId::new(a, b),
                    rule_a: a.clone(),
                    rule_b: b.clone(),
                    trigger_a: *ta,
                    trigger_b: *tb,
                });
            }
        }
    }
    out
}

/// Fraction of confirmed ground-truth pairs found among the survivors.
pub fn recall(
    survivors: &[PairCandidate],
    confirmed_ground_truth: &[(RuleRef, RuleRef)],
) -> Option<f64> {
    if confirmed_ground_truth.is_empty() {
        return None;
    }
    let found: BTreeSet<(&RuleRef, &RuleRef)> = survivors.iter().map(PairCandidate::key).collect();
    let hits = confirmed_ground_truth
        .iter()
        .filter(|(a, b)| found.contains(&(a, b)))
        .count();
    Some(hits as f64 / confirmed_ground_truth.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::warnings::WarningRecord;
    use alloc::format;
    use alloc::vec;
    use alloc::vec::Vec;

    fn refs(tool: &str, n: usize) -> Vec<RuleRef> {
        (1..=n)
            .map(|i| RuleRef::new(tool, format!("{tool}{i}")))
            .collect()
    }

    fn matrix(a: usize, b: usize, sims: &[f64]) -> ScoreMatrix {
        let scores = sims
            .iter()
            .map(|&s| SimilarityScores {
                description_sim: s,
                ..SimilarityScores::ZERO
            })
            .collect();
        ScoreMatrix::from_parts(refs("a", a), refs("b", b), scores)
    }

    fn pairs(c: &[PairCandidate]) -> Vec<(String, String)> {
        c.iter()
            .map(|c| (c.rule_a.rule_id.clone(), c.rule_b.rule_id.clone()))
            .collect()
    }

    fn p(a: &str, b: &str) -> (String, String) {
        (a.into(), b.into())
    }

    /// Brute-force reference for stage a: rank by scanning every score.
    fn brute_mutual(m: &ScoreMatrix, n: usize) -> Vec<(String, String)> {
        let rank_row = |i: usize, j: usize| {
            let s = m.get(i, j).description_sim;
            (0..m.cols().len())
                .filter(|&k| {
                    let t = m.get(i, k).description_sim;
                    t > s || (t == s && m.cols()[k].rule_id < m.cols()[j].rule_id)
                })
                .count()
        };
        let rank_col = |i: usize, j: usize| {
            let s = m.get(i, j).description_sim;
            (0..m.rows().len())
                .filter(|&k| {
                    let t = m.get(k, j).description_sim;
                    t > s || (t == s && m.rows()[k].rule_id < m.rows()[i].rule_id)
                })
                .count()
        };
        let mut out = vec![];
        for i in 0..m.rows().len() {
            for j in 0..m.cols().len() {
                if m.get(i, j).description_sim > 0.0 && rank_row(i, j) < n && rank_col(i, j) < n {
                    out.push((m.rows()[i].rule_id.clone(), m.cols()[j].rule_id.clone()));
                }
            }
        }
        out
    }

    #[test]
    fn mutual_top_one() {
        // a1 -> b1 best; b1 -> a1 best; a2 -> b1 second best.
        let m = matrix(2, 2, &[0.9, 0.1, 0.5, 0.2]);
        let cfg = MappingConfig {
            top_n: 1,
            ..MappingConfig::default()
        };
        assert_eq!(pairs(&stage_a_mutual_top_n(&m, &cfg)), vec![p("a1", "b1")]);
        assert_eq!(brute_mutual(&m, 1), vec![p("a1", "b1")]);
    }

    #[test]
    fn asymmetric_top_one_excluded() {
        // a1's best is b1, but b1 prefers a2.
        let m = matrix(2, 2, &[0.6, 0.1, 0.9, 0.2]);
        let cfg = MappingConfig {
            top_n: 1,
            ..MappingConfig::default()
        };
        let got = pairs(&stage_a_mutual_top_n(&m, &cfg));
        assert!(!got.contains(&p("a1", "b1")));
        assert_eq!(got, brute_mutual(&m, 1));
    }

    #[test]
    fn zero_scores_never_pair() {
        let m = matrix(2, 2, &[0.0, 0.0, 0.0, 0.0]);
        assert!(stage_a_mutual_top_n(&m, &MappingConfig::default()).is_empty());
    }

    #[test]
    fn ties_cut_by_rule_id() {
        let m = matrix(1, 3, &[0.5, 0.5, 0.5]);
        let cfg = MappingConfig {
            top_n: 2,
            ..MappingConfig::default()
        };
        assert_eq!(
            pairs(&stage_a_mutual_top_n(&m, &cfg)),
            vec![p("a1", "b1"), p("a1", "b2")]
        );
    }

    fn lines(
        tool: &str,
        rule: &str,
        file: &str,
        range: core::ops::RangeInclusive<u32>,
    ) -> Vec<WarningRecord> {
        range
            .map(|l| WarningRecord {
                tool: tool.into(),
                rule_id: rule.into(),
                project: "p".into(),
                file: file.into(),
                start_line: l,
                end_line: l,
                method: None,
            })
            .collect()
    }

    fn cand(a: &str, b: &str) -> PairCandidate {
        PairCandidate::new(
            RuleRef::new("a", a),
            RuleRef::new("b", b),
            SimilarityScores::ZERO,
        )
    }

    #[test]
    fn lock_requires_both_ratios() {
        // a1: 1..=20, b1: 3..=20 + 3 extra -> ratios (18/20, 18/21) = (0.9, 0.857)
        let mut recs = lines("a", "a1", "f", 1..=20);
        recs.extend(lines("b", "b1", "f", 3..=20));
        recs.extend(lines("b", "b1", "g", 1..=3));
        // a2: 1..=10, b2: 1..=7 + 3 extra -> (0.7, 0.7)
        recs.extend(lines("a", "a2", "h", 1..=10));
        recs.extend(lines("b", "b2", "h", 1..=7));
        recs.extend(lines("b", "b2", "k", 1..=3));
        let idx = WarningIndex::from_records(recs).unwrap();
        let out = stage_b_lock_one_to_one(
            vec![cand("a1", "b1"), cand("a2", "b2")],
            &idx,
            &MappingConfig::default(),
        );
        assert_eq!(pairs(&out.locked), vec![p("a1", "b1")]);
        assert_eq!(pairs(&out.remaining), vec![p("a2", "b2")]);
    }

    #[test]
    fn one_sided_ratio_is_not_locked() {
        // b covers 9 of a's 10 lines (0.9) but has 13 lines in total (9/13 < 0.8).
        let mut recs = lines("a", "a1", "f", 1..=10);
        recs.extend(lines("b", "b1", "f", 2..=10));
        recs.extend(lines("b", "b1", "g", 1..=4));
        let idx = WarningIndex::from_records(recs).unwrap();
        let out = stage_b_lock_one_to_one(vec![cand("a1", "b1")], &idx, &MappingConfig::default());
        assert!(out.locked.is_empty());
        assert_eq!(out.remaining.len(), 1);
    }

    #[test]
    fn strongest_lock_wins_and_removes_rivals() {
        // a1 ~ b1: 19/20 on both sides (0.95); a1 ~ b2: 17/20 (0.85).
        let mut recs = lines("a", "a1", "f", 1..=20);
        recs.extend(lines("b", "b1", "f", 1..=19));
        recs.extend(lines("b", "b1", "g", 1..=1));
        recs.extend(lines("b", "b2", "f", 1..=17));
        recs.extend(lines("b", "b2", "g", 2..=4));
        let idx = WarningIndex::from_records(recs).unwrap();
        let out = stage_b_lock_one_to_one(
            vec![cand("a1", "b1"), cand("a1", "b2"), cand("a9", "b1")],
            &idx,
            &MappingConfig::default(),
        );
        assert_eq!(pairs(&out.locked), vec![p("a1", "b1")]);
        assert!(out.remaining.is_empty());
        assert_eq!(pairs(&out.pruned), vec![p("a1", "b2"), p("a9", "b1")]);
        assert!(out.pruned.iter().all(|c| matches!(
            &c.stage,
            CandidateStage::Pruned { stage: StageId::B, reason: PruneReason::LockConflict { locked_with } }
                if *locked_with == out.locked[0].id
        )));
    }

    fn counts_index(ta: u32, tb: u32) -> WarningIndex {
        let mut recs = lines("a", "a1", "f", 1..=ta);
        recs.extend(lines("b", "b1", "f", 1..=tb));
        WarningIndex::from_records(recs).unwrap()
    }

    #[test]
    fn trigger_ratio_cases() {
        let cfg = MappingConfig::default();
        let run =
            |ta, tb| stage_c_trigger_ratio(vec![cand("a1", "b1")], &counts_index(ta, tb), &cfg);
        let out = run(100, 3);
        assert_eq!(out.pruned.len(), 1);
        match &out.pruned[0].stage {
            CandidateStage::Pruned {
                reason: PruneReason::TriggerDisparity { measured, .. },
                ..
            } => {
                assert!((measured - 100.0 / 3.0).abs() < 1e-12)
            }
            other => panic!("unexpected {other:?}"),
        }
        assert_eq!(run(100, 10).kept.len(), 1);
        assert_eq!(run(7, 7).kept.len(), 1);
        // untriggered side counts as 1
        let recs = lines("a", "a1", "f", 1..=21);
        let idx = WarningIndex::from_records(recs).unwrap();
        assert_eq!(
            stage_c_trigger_ratio(vec![cand("a1", "b1")], &idx, &cfg)
                .pruned
                .len(),
            1
        );
        assert_eq!(
            stage_c_trigger_ratio(vec![cand("a7", "b7")], &idx, &cfg)
                .kept
                .len(),
            1
        );
    }

    #[test]
    fn absolute_difference_mode() {
        let cfg = MappingConfig {
            trigger_mode: TriggerMode::AbsoluteDifference,
            ..MappingConfig::default()
        };
        let out = stage_c_trigger_ratio(vec![cand("a1", "b1")], &counts_index(30, 5), &cfg);
        assert_eq!(out.pruned.len(), 1);
        let out = stage_c_trigger_ratio(vec![cand("a1", "b1")], &counts_index(100, 90), &cfg);
        assert_eq!(out.kept.len(), 1);
    }

    fn file_index(shared: usize, only_a: usize, only_b: usize) -> WarningIndex {
        let mut recs = vec![];
        for i in 0..shared {
            recs.extend(lines("a", "a1", &format!("s{i}"), 1..=1));
            recs.extend(lines("b", "b1", &format!("s{i}"), 1..=1));
        }
        for i in 0..only_a {
            recs.extend(lines("a", "a1", &format!("x{i}"), 1..=1));
        }
        for i in 0..only_b {
            recs.extend(lines("b", "b1", &format!("y{i}"), 1..=1));
        }
        WarningIndex::from_records(recs).unwrap()
    }

    #[test]
    fn file_overlap_cases() {
        let cfg = MappingConfig::default();
        let out = stage_d_file_overlap(vec![cand("a1", "b1")], &file_index(1, 50, 49), &cfg);
        assert_eq!(out.pruned.len(), 1, "Jaccard 0.01");
        let out = stage_d_file_overlap(vec![cand("a1", "b1")], &file_index(2, 1, 1), &cfg);
        assert_eq!(out.kept.len(), 1, "Jaccard 0.5");
        let out = stage_d_file_overlap(vec![cand("a1", "b1")], &file_index(3, 0, 0), &cfg);
        assert_eq!(out.kept.len(), 1, "Jaccard 1");
    }

    #[test]
    fn empty_index_keeps_stage_a() {
        let m = matrix(2, 2, &[0.9, 0.1, 0.1, 0.9]);
        let out = run_pipeline(&m, &WarningIndex::default(), &MappingConfig::default()).unwrap();
        assert_eq!(out.report.after_a, out.survivors.len());
        assert_eq!(out.report.after_d, out.report.after_a);
        assert!(out.pruned.is_empty());
        assert_eq!(out.report.total_candidates, 4);
    }

    #[test]
    fn same_tool_is_rejected() {
        let s = SimilarityScores::ZERO;
        let m = ScoreMatrix::from_parts(refs("a", 1), refs("a", 1), vec![s]);
        assert!(matches!(
            run_pipeline(&m, &WarningIndex::default(), &MappingConfig::default()),
            Err(MappingError::SameTool(_))
        ));
    }

    #[test]
    fn config_validation() {
        let bad = [
            MappingConfig {
                top_n: 0,
                ..MappingConfig::default()
            },
            MappingConfig {
                lock_threshold: 0.0,
                ..MappingConfig::default()
            },
            MappingConfig {
                trigger_ratio_max: 1.0,
                ..MappingConfig::default()
            },
            MappingConfig {
                file_overlap_min: 1.5,
                ..MappingConfig::default()
            },
        ];
        for cfg in bad {
            assert!(cfg.validate().is_err());
        }
        assert!(MappingConfig::default().validate().is_ok());
    }

    #[test]
    fn ground_truth_filter() {
        let mut recs = vec![];
        for f in ["f1", "f2", "f3"] {
            recs.extend(lines("a", "a1", f, 1..=5));
            recs.extend(lines("b", "b1", f, 1..=4));
        }
        // b2 shares a1's files but only triggers 3 times.
        recs.extend(lines("b", "b2", "f1", 1..=3));
        let idx = WarningIndex::from_records(recs).unwrap();
        let mk = |tool: &str, ids: &[&str]| {
            let rules = ids
                .iter()
                .map(|id| crate::catalog::RuleDescriptor::new(tool, *id, "t", "d", vec![]).unwrap())
                .collect();
            RuleCatalog::new(tool, rules).unwrap()
        };
        let gt = ground_truth_candidates(&idx, &mk("a", &["a1"]), &mk("b", &["b1", "b2"]));
        assert_eq!(gt.len(), 1);
        assert_eq!((gt[0].trigger_a, gt[0].trigger_b), (15, 12));

        let survivors = vec![cand("a1", "b1")];
        let truth = vec![
            (RuleRef::new("a", "a1"), RuleRef::new("b", "b1")),
            (RuleRef::new("a", "a2"), RuleRef::new("b", "b2")),
        ];
        assert_eq!(recall(&survivors, &truth), Some(0.5));
        assert_eq!(recall(&survivors, &[]), None);
    }

    #[test]
    fn hitting_rate() {
        let r = MappingReport {
            after_d: 145,
            confirmed: Some(74),
            ..MappingReport::default()
        };
        assert!((r.hitting_rate().unwrap() - 74.0 / 145.0).abs() < 1e-12);
    }
}
