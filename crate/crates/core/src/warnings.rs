//! Normalized warnings, their per-rule index, and trigger statistics.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::catalog::{RuleCatalog, RuleRef};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum WarningError {
    #[error("record {index}: line numbers start at 1")]
    ZeroLine { index: usize },
    #[error("record {index}: end_line {end} precedes start_line {start}")]
    InvertedSpan { index: usize, start: u32, end: u32 },
    #[error("record {index}: warning lines {start}-{end} are not inside method {name:?} ({m_start}-{m_end})")]
    OutsideMethod {
        index: usize,
        name: String,
        start: u32,
        end: u32,
        m_start: u32,
        m_end: u32,
    },
    #[error("rule {0} has no warnings")]
    Untriggered(RuleRef),
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum StatsError {
    #[error("catalog is empty")]
    EmptyCatalog,
    #[error("no rule of the catalog was triggered")]
    NoTriggeredRules,
}

/// Enclosing method of a warning, with its line span.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct MethodSpan {
    pub name: String,
    pub start: u32,
    pub end: u32,
}

/// One warning reported by one rule.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct WarningRecord {
    pub tool: String,
    pub rule_id: String,
    pub project: String,
    pub file: String,
    pub start_line: u32,
    pub end_line: u32,
    pub method: Option<MethodSpan>,
}

impl WarningRecord {
    pub fn rule_ref(&self) -> RuleRef {
        RuleRef::new(self.tool.clone(), self.rule_id.clone())
    }

    pub fn file_loc(&self) -> FileLoc {
        FileLoc {
            project: self.project.clone(),
            file: self.file.clone(),
        }
    }

    /// Checks the span invariants. `index` is only used for error reporting.
    pub fn validate(&self, index: usize) -> Result<(), WarningError> {
        if self.start_line == 0 {
            return Err(WarningError::ZeroLine { index });
        }
        if self.end_line < self.start_line {
            return Err(WarningError::InvertedSpan {
                index,
                start: self.start_line,
                end: self.end_line,
            });
        }
        if let Some(m) = &self.method {
            if m.start == 0 || m.start > self.start_line || self.start_line > m.end {
                return Err(WarningError::OutsideMethod {
                    index,
                    name: m.name.clone(),
                    start: self.start_line,
                    end: self.end_line,
                    m_start: m.start,
                    m_end: m.end,
                });
            }
        }
        Ok(())
    }

    /// Every line of the span, as project/file/line locations.
    pub fn lines(&self) -> impl Iterator<Item = LineLoc> + '_ {
        (self.start_line..=self.end_line).map(move |line| LineLoc {
            project: self.project.clone(),
            file: self.file.clone(),
            line,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct FileLoc {
    pub project: String,
    pub file: String,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct LineLoc {
    pub project: String,
    pub file: String,
    pub line: u32,
}

/// Result of one ingestion call.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct IngestSummary {
    pub accepted: usize,
    pub duplicates: usize,
    /// Records whose rule is not in any known catalog.
    pub rejected: Vec<WarningRecord>,
}

/// Mutable accumulation of warnings. Call [`WarningStore::freeze`] to obtain
/// the read-only [`WarningIndex`].
#[derive(Debug, Clone, Default)]
pub struct WarningStore {
    dedup: bool,
    seen: BTreeSet<WarningRecord>,
    by_rule: BTreeMap<RuleRef, Vec<WarningRecord>>,
    rejected: Vec<WarningRecord>,
}

impl WarningStore {
    /// A store that drops exact duplicate records.
    pub fn new() -> Self {
        Self::with_dedup(true)
    }

    pub fn with_dedup(dedup: bool) -> Self {
        Self {
            dedup,
            ..Self::default()
        }
    }

    /// Validates then merges a batch of records. Nothing is merged when any
    /// record fails validation.
    pub fn ingest(
        &mut self,
        records: Vec<WarningRecord>,
        catalogs: &[&RuleCatalog],
    ) -> Result<IngestSummary, WarningError> {
        for (i, r) in records.iter().enumerate() {
            r.validate(i)?;
        }
        let mut summary = IngestSummary::default();
        for record in records {
            let rule = record.rule_ref();
            if !catalogs.iter().any(|c| c.contains(&rule)) {
                summary.rejected.push(record);
                continue;
            }
            if self.dedup && !self.seen.insert(record.clone()) {
                summary.duplicates += 1;
                continue;
            }
            self.by_rule.entry(rule).or_default().push(record);
            summary.accepted += 1;
        }
        self.rejected.extend(summary.rejected.iter().cloned());
        Ok(summary)
    }

    pub fn rejected(&self) -> &[WarningRecord] {
        &self.rejected
    }

    pub fn freeze(self) -> WarningIndex {
        let mut warned_lines: BTreeMap<RuleRef, BTreeSet<LineLoc>> = BTreeMap::new();
        let mut warned_files: BTreeMap<RuleRef, BTreeSet<FileLoc>> = BTreeMap::new();
        for (rule, records) in &self.by_rule {
            let lines = warned_lines.entry(rule.clone()).or_default();
            let files = warned_files.entry(rule.clone()).or_default();
            for r in records {
                lines.extend(r.lines());
                files.insert(r.file_loc());
            }
        }
        WarningIndex {
            by_rule: self.by_rule,
            warned_lines,
            warned_files,
            rejected: self.rejected,
        }
    }
}

/// Frozen per-rule view of a warning corpus.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct WarningIndex {
    by_rule: BTreeMap<RuleRef, Vec<WarningRecord>>,
    warned_lines: BTreeMap<RuleRef, BTreeSet<LineLoc>>,
    warned_files: BTreeMap<RuleRef, BTreeSet<FileLoc>>,
    rejected: Vec<WarningRecord>,
}

impl WarningIndex {
    /// Builds an index directly from records, skipping catalog resolution.
    pub fn from_records(records: Vec<WarningRecord>) -> Result<Self, WarningError> {
        let mut store = WarningStore::new();
        for (i, r) in records.iter().enumerate() {
            r.validate(i)?;
        }
        for r in records {
            if store.seen.insert(r.clone()) {
                store.by_rule.entry(r.rule_ref()).or_default().push(r);
            }
        }
        Ok(store.freeze())
    }

    pub fn is_empty(&self) -> bool {
        self.by_rule.is_empty()
    }

    pub fn rules(&self) -> impl Iterator<Item = &RuleRef> {
        self.by_rule.keys()
    }

    pub fn records(&self, rule: &RuleRef) -> &[WarningRecord] {
        self.by_rule.get(rule).map_or(&[], Vec::as_slice)
    }

    pub fn all_records(&self) -> impl Iterator<Item = &WarningRecord> {
        self.by_rule.values().flatten()
    }

    pub fn trigger_count(&self, rule: &RuleRef) -> usize {
        self.records(rule).len()
    }

    pub fn is_triggered(&self, rule: &RuleRef) -> bool {
        self.trigger_count(rule) > 0
    }

    pub fn warned_lines(&self, rule: &RuleRef) -> Option<&BTreeSet<LineLoc>> {
        self.warned_lines.get(rule)
    }

    pub fn warned_files(&self, rule: &RuleRef) -> Option<&BTreeSet<FileLoc>> {
        self.warned_files.get(rule)
    }

    pub fn rejected(&self) -> &[WarningRecord] {
        &self.rejected
    }

    fn lines_of(&self, rule: &RuleRef) -> Result<&BTreeSet<LineLoc>, WarningError> {
        self.warned_lines
            .get(rule)
            .ok_or_else(|| WarningError::Untriggered(rule.clone()))
    }

    fn files_of(&self, rule: &RuleRef) -> Result<&BTreeSet<FileLoc>, WarningError> {
        self.warned_files
            .get(rule)
            .ok_or_else(|| WarningError::Untriggered(rule.clone()))
    }

    /// Shared warned lines as a fraction of each rule's own warned lines.
    pub fn line_overlap(&self, a: &RuleRef, b: &RuleRef) -> Result<(f64, f64), WarningError> {
        let (la, lb) = (self.lines_of(a)?, self.lines_of(b)?);
        let shared = la.intersection(lb).count() as f64;
        Ok((shared / la.len() as f64, shared / lb.len() as f64))
    }

    /// Jaccard index of the two rules' warned file sets.
    pub fn file_overlap(&self, a: &RuleRef, b: &RuleRef) -> Result<f64, WarningError> {
        let (fa, fb) = (self.files_of(a)?, self.files_of(b)?);
        let shared = fa.intersection(fb).count();
        Ok(shared as f64 / (fa.len() + fb.len() - shared) as f64)
    }

    /// Up to `limit` lines warned by both rules, in location order.
    pub fn co_warned_lines(&self, a: &RuleRef, b: &RuleRef, limit: usize) -> Vec<LineLoc> {
        match (self.warned_lines.get(a), self.warned_lines.get(b)) {
            (Some(la), Some(lb)) => la.intersection(lb).take(limit).cloned().collect(),
            _ => Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quartiles {
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
}

impl Quartiles {
    /// Quartiles by linear interpolation between closest ranks, i.e. the
    /// value at fractional rank `p * (n - 1)`. `values` must be nonempty.
    pub fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        Some(Self {
            min: sorted[0],
            q1: quantile_sorted(&sorted, 0.25),
            median: quantile_sorted(&sorted, 0.5),
            q3: quantile_sorted(&sorted, 0.75),
            max: sorted[sorted.len() - 1],
        })
    }
}

fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let h = p * (sorted.len() - 1) as f64;
    let lo = libm::floor(h) as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Trigger statistics of one catalog (or several, for the overall row).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuleStats {
    pub label: String,
    pub total_rules: usize,
    pub triggered_rules: usize,
    pub pct_triggered: f64,
    pub quartiles: Quartiles,
}

pub fn compute_stats(index: &WarningIndex, catalog: &RuleCatalog) -> Result<RuleStats, StatsError> {
    compute_stats_over(index, &[catalog], catalog.tool())
}

/// Pools the rules of several catalogs into one statistics row.
pub fn compute_stats_over(
    index: &WarningIndex,
    catalogs: &[&RuleCatalog],
    label: &str,
) -> Result<RuleStats, StatsError> {
    let total_rules: usize = catalogs.iter().map(|c| c.len()).sum();
    if total_rules == 0 {
        return Err(StatsError::EmptyCatalog);
    }
    let counts: Vec<f64> = catalogs
        .iter()
        .flat_map(|c| c.rule_refs())
        .map(|r| index.trigger_count(&r))
        .filter(|&n| n > 0)
        .map(|n| n as f64)
        .collect();
    let quartiles = Quartiles::of(&counts).ok_or(StatsError::NoTriggeredRules)?;
    Ok(RuleStats {
        label: String::from(label),
        total_rules,
        triggered_rules: counts.len(),
        pct_triggered: counts.len() as f64 / total_rules as f64,
        quartiles,
    })
}
