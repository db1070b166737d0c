//! Inconsistencies between the warnings of confirmed rule pairs.
//!
//! Line-granular pairs are compared on span-expanded warned lines. When either
//! rule marks whole methods, every warning is resolved to its enclosing method
//! and the pair is compared on methods instead.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::catalog::RuleRef;
use crate::id::{InconsistencyId, PairId};
use crate::mapping::PairCandidate;
use crate::warnings::{LineLoc, MethodSpan, WarningIndex, WarningRecord};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DiffError {
    #[error("pair {pair}: rule {rule} is method-granular, line criterion does not apply")]
    Granularity { pair: PairId, rule: RuleRef },
    #[error("pair {pair}: {} warning(s) lie outside every known method", warnings.len())]
    UnresolvedLocation {
        pair: PairId,
        warnings: Vec<WarningRecord>,
    },
    #[error("pair {pair} has no granularity entry for {rule}")]
    MissingGranularity { pair: PairId, rule: RuleRef },
    #[error("{project}/{file}: method {name:?} ({start}-{end}) partially overlaps another method")]
    CrossingSpans {
        project: String,
        file: String,
        name: String,
        start: u32,
        end: u32,
    },
    #[error("{project}/{file}: method {name:?} has an invalid span {start}-{end}")]
    InvalidSpan {
        project: String,
        file: String,
        name: String,
        start: u32,
        end: u32,
    },
}

/// Whether a rule marks single lines or whole methods.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Granularity {
    #[default]
    Line,
    Method,
}

pub type Criterion = Granularity;

/// Per-rule granularity. Rules without an entry are line-granular unless the
/// map is strict.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct GranularityMap {
    entries: BTreeMap<RuleRef, Granularity>,
    strict: bool,
}

impl GranularityMap {
    pub fn new() -> Self {
        Self::default()
    }

    /// A map in which every rule of a diffed pair must have an entry.
    pub fn strict() -> Self {
        Self {
            strict: true,
            ..Self::default()
        }
    }

    pub fn insert(&mut self, rule: RuleRef, granularity: Granularity) {
        self.entries.insert(rule, granularity);
    }

    pub fn lookup(&self, rule: &RuleRef) -> Option<Granularity> {
        match self.entries.get(rule) {
            Some(g) => Some(*g),
            None if self.strict => None,
            None => Some(Granularity::Line),
        }
    }

    pub fn get(&self, rule: &RuleRef) -> Granularity {
        self.lookup(rule).unwrap_or_default()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&RuleRef, Granularity)> {
        self.entries.iter().map(|(r, g)| (r, *g))
    }

    fn criterion(&self, pair: &ConfirmedPair) -> Result<Criterion, DiffError> {
        let side = |rule: &RuleRef| {
            self.lookup(rule)
                .ok_or_else(|| DiffError::MissingGranularity {
                    pair: pair.id.clone(),
                    rule: rule.clone(),
                })
        };
        let (ga, gb) = (side(&pair.rule_a)?, side(&pair.rule_b)?);
        Ok(if ga == Granularity::Method || gb == Granularity::Method {
            Granularity::Method
        } else {
            Granularity::Line
        })
    }
}

/// Method spans per (project, file), used when warnings carry no method.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MethodSpanIndex {
    files: BTreeMap<(String, String), Vec<MethodSpan>>,
}

impl MethodSpanIndex {
    pub fn new() -> Self {
        Self::default()
    }

    /// Sets the spans of one file. Spans may nest but must not cross.
    pub fn insert_file(
        &mut self,
        project: impl Into<String>,
        file: impl Into<String>,
        mut spans: Vec<MethodSpan>,
    ) -> Result<(), DiffError> {
        let (project, file) = (project.into(), file.into());
        spans.sort_by(|x, y| {
            x.start
                .cmp(&y.start)
                .then(y.end.cmp(&x.end))
                .then(x.name.cmp(&y.name))
        });
        let mut open: Vec<&MethodSpan> = Vec::new();
        for span in &spans {
            if span.start == 0 || span.end < span.start {
                return Err(DiffError::InvalidSpan {
                    project,
                    file,
                    name: span.name.clone(),
                    start: span.start,
                    end: span.end,
                });
            }
            while open.last().is_some_and(|o| o.end < span.start) {
                open.pop();
            }
            if open.last().is_some_and(|o| span.end > o.end) {
                return Err(DiffError::CrossingSpans {
                    project,
                    file,
                    name: span.name.clone(),
                    start: span.start,
                    end: span.end,
                });
            }
            open.push(span);
        }
        self.files.insert((project, file), spans);
        Ok(())
    }

    /// The smallest span enclosing lines `start..=end`.
    pub fn innermost(
        &self,
        project: &str,
        file: &str,
        start: u32,
        end: u32,
    ) -> Option<&MethodSpan> {
        self.files
            .get(&(String::from(project), String::from(file)))?
            .iter()
            .filter(|s| s.start <= start && end <= s.end)
            .min_by_key(|s| (s.end - s.start, core::cmp::Reverse(s.start)))
    }

    pub fn len(&self) -> usize {
        self.files.len()
    }

    pub fn is_empty(&self) -> bool {
        self.files.is_empty()
    }
}

/// A pair confirmed by reviewers (or auto-accepted), ready for diffing.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ConfirmedPair {
    pub id: PairId,
    pub rule_a: RuleRef,
    pub rule_b: RuleRef,
}

impl ConfirmedPair {
    pub fn new(rule_a: RuleRef, rule_b: RuleRef) -> Self {
        Self {
            id: PairId::new(&rule_a, &rule_b),
            rule_a,
            rule_b,
        }
    }

    /// The same pair with sides exchanged.
    pub fn swapped(&self) -> Self {
        Self::new(self.rule_b.clone(), self.rule_a.clone())
    }
}

impl From<&PairCandidate> for ConfirmedPair {
    fn from(c: &PairCandidate) -> Self {
        Self {
            id: c.id.clone(),
            rule_a: c.rule_a.clone(),
            rule_b: c.rule_b.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    SideAOnly,
    SideBOnly,
}

impl Side {
    pub fn flipped(self) -> Self {
        match self {
            Side::SideAOnly => Side::SideBOnly,
            Side::SideBOnly => Side::SideAOnly,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Location {
    Line { line: u32 },
    Method { name: String, start: u32, end: u32 },
}

impl Location {
    fn sort_key(&self) -> (u32, u32, &str) {
        match self {
            Location::Line { line } => (*line, *line, ""),
            Location::Method { name, start, end } => (*start, *end, name),
        }
    }
}

/// One location warned by exactly one rule of a confirmed pair.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InconsistencyRecord {
    pub id: InconsistencyId,
    pub pair: PairId,
    pub rule_a: RuleRef,
    pub rule_b: RuleRef,
    pub project: String,
    pub file: String,
    pub location: Location,
    pub warned_by: Side,
    pub criterion: Criterion,
}

impl InconsistencyRecord {
    fn new(
        pair: &ConfirmedPair,
        project: String,
        file: String,
        location: Location,
        warned_by: Side,
        criterion: Criterion,
    ) -> Self {
        let loc = match &location {
            Location::Line { line } => alloc::format!("L{line}"),
            Location::Method { name, start, end } => alloc::format!("M{start}-{end}:{name}"),
        };
        let side = match warned_by {
            Side::SideAOnly => "a",
            Side::SideBOnly => "b",
        };
        let id = InconsistencyId::from_fields(&[
            pair.id.as_str().as_bytes(),
            project.as_bytes(),
            file.as_bytes(),
            loc.as_bytes(),
            side.as_bytes(),
        ]);
        Self {
            id,
            pair: pair.id.clone(),
            rule_a: pair.rule_a.clone(),
            rule_b: pair.rule_b.clone(),
            project,
            file,
            location,
            warned_by,
            criterion,
        }
    }

    /// The rule that reported the warning.
    pub fn warning_rule(&self) -> &RuleRef {
        match self.warned_by {
            Side::SideAOnly => &self.rule_a,
            Side::SideBOnly => &self.rule_b,
        }
    }

    /// The rule that stayed silent.
    pub fn silent_rule(&self) -> &RuleRef {
        match self.warned_by {
            Side::SideAOnly => &self.rule_b,
            Side::SideBOnly => &self.rule_a,
        }
    }

    fn sort_key(&self) -> (&RuleRef, &RuleRef, &str, &str, (u32, u32, &str)) {
        (
            &self.rule_a,
            &self.rule_b,
            &self.project,
            &self.file,
            self.location.sort_key(),
        )
    }
}

fn one_sided<T: Ord + Clone>(a: &BTreeSet<T>, b: &BTreeSet<T>) -> Vec<(T, Side)> {
    let mut out: Vec<(T, Side)> = a
        .difference(b)
        .cloned()
        .map(|x| (x, Side::SideAOnly))
        .collect();
    out.extend(b.difference(a).cloned().map(|x| (x, Side::SideBOnly)));
    out
}

/// Criterion 1: compare warned lines of two line-granular rules.
pub fn diff_pair_line(
    pair: &ConfirmedPair,
    index: &WarningIndex,
    granularity: &GranularityMap,
) -> Result<Vec<InconsistencyRecord>, DiffError> {
    for rule in [&pair.rule_a, &pair.rule_b] {
        if granularity.get(rule) == Granularity::Method {
            return Err(DiffError::Granularity {
                pair: pair.id.clone(),
                rule: rule.clone(),
            });
        }
    }
    let empty = BTreeSet::new();
    let la = index.warned_lines(&pair.rule_a).unwrap_or(&empty);
    let lb = index.warned_lines(&pair.rule_b).unwrap_or(&empty);
    let mut out: Vec<InconsistencyRecord> = one_sided(la, lb)
        .into_iter()
        .map(
            |(
                LineLoc {
                    project,
                    file,
                    line,
                },
                side,
            )| {
                InconsistencyRecord::new(
                    pair,
                    project,
                    file,
                    Location::Line { line },
                    side,
                    Granularity::Line,
                )
            },
        )
        .collect();
    out.sort_by(|x, y| x.sort_key().cmp(&y.sort_key()));
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
struct MethodLoc {
    project: String,
    file: String,
    start: u32,
    end: u32,
    name: String,
}

fn resolve_methods(
    records: &[WarningRecord],
    spans: &MethodSpanIndex,
    unresolved: &mut Vec<WarningRecord>,
) -> BTreeSet<MethodLoc> {
    let mut out = BTreeSet::new();
    for r in records {
        let span = r
            .method
            .as_ref()
            .or_else(|| spans.innermost(&r.project, &r.file, r.start_line, r.end_line));
        match span {
            Some(m) => {
                out.insert(MethodLoc {
                    project: r.project.clone(),
                    file: r.file.clone(),
                    start: m.start,
                    end: m.end,
                    name: m.name.clone(),
                });
            }
            None => unresolved.push(r.clone()),
        }
    }
    out
}

/// Criterion 2: compare the enclosing methods of the two rules' warnings.
pub fn diff_pair_method(
    pair: &ConfirmedPair,
    index: &WarningIndex,
    spans: &MethodSpanIndex,
) -> Result<Vec<InconsistencyRecord>, DiffError> {
    let mut unresolved = Vec::new();
    let ma = resolve_methods(index.records(&pair.rule_a), spans, &mut unresolved);
    let mb = resolve_methods(index.records(&pair.rule_b), spans, &mut unresolved);
    if !unresolved.is_empty() {
        return Err(DiffError::UnresolvedLocation {
            pair: pair.id.clone(),
            warnings: unresolved,
        });
    }
    let mut out: Vec<InconsistencyRecord> = one_sided(&ma, &mb)
        .into_iter()
        .map(|(m, side)| {
            let location = Location::Method {
                name: m.name,
                start: m.start,
                end: m.end,
            };
            InconsistencyRecord::new(pair, m.project, m.file, location, side, Granularity::Method)
        })
        .collect();
    out.sort_by(|x, y| x.sort_key().cmp(&y.sort_key()));
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairDiffSummary {
    pub pair: PairId,
    pub rule_a: RuleRef,
    pub rule_b: RuleRef,
    pub criterion: Criterion,
    pub side_a_only: usize,
    pub side_b_only: usize,
    pub total: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DiffOutcome {
    /// Sorted by pair, project, file and location.
    pub records: Vec<InconsistencyRecord>,
    /// One entry per pair, in pair order.
    pub per_pair: Vec<PairDiffSummary>,
}

/// Diffs a single pair with the criterion its granularity calls for.
pub fn diff_pair(
    pair: &ConfirmedPair,
    index: &WarningIndex,
    spans: &MethodSpanIndex,
    granularity: &GranularityMap,
) -> Result<(Vec<InconsistencyRecord>, PairDiffSummary), DiffError> {
    let criterion = granularity.criterion(pair)?;
    let records = match criterion {
        Granularity::Line => diff_pair_line(pair, index, granularity)?,
        Granularity::Method => diff_pair_method(pair, index, spans)?,
    };
    let side_a_only = records
        .iter()
        .filter(|r| r.warned_by == Side::SideAOnly)
        .count();
    let summary = PairDiffSummary {
        pair: pair.id.clone(),
        rule_a: pair.rule_a.clone(),
        rule_b: pair.rule_b.clone(),
        criterion,
        side_a_only,
        side_b_only: records.len() - side_a_only,
        total: records.len(),
    };
    Ok((records, summary))
}

/// Assembles per-pair results into the canonical output order.
pub fn collect_outcome(
    results: impl IntoIterator<Item = (Vec<InconsistencyRecord>, PairDiffSummary)>,
) -> DiffOutcome {
    let mut outcome = DiffOutcome::default();
    for (records, summary) in results {
        outcome.records.extend(records);
        outcome.per_pair.push(summary);
    }
    outcome
        .records
        .sort_by(|x, y| x.sort_key().cmp(&y.sort_key()));
    outcome
        .per_pair
        .sort_by(|x, y| (&x.rule_a, &x.rule_b).cmp(&(&y.rule_a, &y.rule_b)));
    outcome
}

/// Diffs every confirmed pair.
pub fn diff_all(
    pairs: &[ConfirmedPair],
    index: &WarningIndex,
    spans: &MethodSpanIndex,
    granularity: &GranularityMap,
) -> Result<DiffOutcome, DiffError> {
    let results = pairs
        .iter()
        .map(|p| diff_pair(p, index, spans, granularity))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(collect_outcome(results))
}
