//! Aggregation of labeled inconsistencies into bug findings.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::catalog::RuleRef;
use crate::diff::InconsistencyRecord;
use crate::mapping::MappingReport;
use crate::triage::{BugPattern, LabelState, TriageStore, Verdict};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BugCategory {
    FnImplementation,
    FnDefinition,
    #[serde(rename = "fp")]
    FalsePositive,
}

impl BugCategory {
    pub const ALL: [BugCategory; 3] = [
        BugCategory::FnImplementation,
        BugCategory::FnDefinition,
        BugCategory::FalsePositive,
    ];

    pub fn from_verdict(v: Verdict) -> Option<Self> {
        match v {
            Verdict::FalseNegativeImpl => Some(BugCategory::FnImplementation),
            Verdict::FalseNegativeDef => Some(BugCategory::FnDefinition),
            Verdict::FalsePositive => Some(BugCategory::FalsePositive),
            _ => None,
        }
    }

    pub fn title(self) -> &'static str {
        match self {
            BugCategory::FnImplementation => "False negative (rule implementation)",
            BugCategory::FnDefinition => "False negative (rule definition)",
            BugCategory::FalsePositive => "False positive",
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FindingStatus {
    Reported,
    ConfirmedFixed,
    #[default]
    Awaiting,
}

/// Grouping key of a finding.
pub type FindingKey = (RuleRef, BugCategory, BugPattern);

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BugFinding {
    pub rule: RuleRef,
    pub category: BugCategory,
    pub pattern: BugPattern,
    pub occurrence_count: usize,
    pub status: FindingStatus,
}

/// Findings per tool and category.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ToolBugCounts {
    pub tool: String,
    pub fn_implementation: usize,
    pub fn_definition: usize,
    pub false_positive: usize,
    pub overall: usize,
}

/// One row of a per-category findings table: a pattern and its rules.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PatternRow {
    pub pattern: BugPattern,
    pub name: String,
    pub description: String,
    pub rules: Vec<PatternRule>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PatternRule {
    pub rule: RuleRef,
    pub occurrence_count: usize,
    pub status: FindingStatus,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FindingsReport {
    /// Sorted by category, pattern, then rule.
    pub findings: Vec<BugFinding>,
    pub tools: Vec<ToolBugCounts>,
    pub overall: ToolBugCounts,
    pub labeled: usize,
    pub not_a_bug: usize,
    pub undecided: usize,
    pub disputed: usize,
    pub unlabeled: usize,
    pub funnel: Option<MappingReport>,
    pub confirmed_pairs: Vec<String>,
}

impl FindingsReport {
    pub fn by_category(&self, category: BugCategory) -> impl Iterator<Item = &BugFinding> {
        self.findings.iter().filter(move |f| f.category == category)
    }

    /// Table rows for one category, one row per pattern.
    pub fn pattern_rows(&self, category: BugCategory) -> Vec<PatternRow> {
        let mut rows: Vec<PatternRow> = Vec::new();
        for f in self.by_category(category) {
            if rows.last().is_none_or(|r| r.pattern != f.pattern) {
                rows.push(PatternRow {
                    pattern: f.pattern,
                    name: String::from(f.pattern.name()),
                    description: String::from(f.pattern.description()),
                    rules: Vec::new(),
                });
            }
            if let Some(row) = rows.last_mut() {
                row.rules.push(PatternRule {
                    rule: f.rule.clone(),
                    occurrence_count: f.occurrence_count,
                    status: f.status,
                });
            }
        }
        rows
    }
}

/// Groups agreed inconsistency labels by (buggy rule, category, pattern).
///
/// A false negative is charged to the rule that stayed silent, a false
/// positive to the rule that warned. Labels without a pattern count as
/// [`BugPattern::Other`]. `funnel.confirmed` is filled from pair consensus.
pub fn summarize_findings(
    store: &TriageStore,
    inconsistencies: &[InconsistencyRecord],
    statuses: &BTreeMap<FindingKey, FindingStatus>,
    funnel: Option<MappingReport>,
) -> FindingsReport {
    let mut report = FindingsReport::default();
    let mut groups: BTreeMap<(BugCategory, BugPattern, RuleRef), usize> = BTreeMap::new();
    for inc in inconsistencies {
        match store.inconsistency_label(inc.id.as_str()) {
            LabelState::Unlabeled => report.unlabeled += 1,
            LabelState::Disputed => report.disputed += 1,
            LabelState::Agreed(Verdict::NotABug, _) => report.not_a_bug += 1,
            LabelState::Agreed(verdict, pattern) => match BugCategory::from_verdict(verdict) {
                Some(category) => {
                    let rule = match category {
                        BugCategory::FalsePositive => inc.warning_rule(),
                        _ => inc.silent_rule(),
                    };
                    let pattern = pattern.unwrap_or(BugPattern::Other);
                    *groups.entry((category, pattern, rule.clone())).or_default() += 1;
                    report.labeled += 1;
                }
                None => report.undecided += 1,
            },
        }
    }
    let mut tools: BTreeMap<String, ToolBugCounts> = BTreeMap::new();
    for ((category, pattern, rule), count) in groups {
        let status = statuses
            .get(&(rule.clone(), category, pattern))
            .copied()
            .unwrap_or_default();
        for counts in [
            tools
                .entry(rule.tool.clone())
                .or_insert_with(|| ToolBugCounts {
                    tool: rule.tool.clone(),
                    ..ToolBugCounts::default()
                }),
            &mut report.overall,
        ] {
            match category {
                BugCategory::FnImplementation => counts.fn_implementation += 1,
                BugCategory::FnDefinition => counts.fn_definition += 1,
                BugCategory::FalsePositive => counts.false_positive += 1,
            }
            counts.overall += 1;
        }
        report.findings.push(BugFinding {
            rule,
            category,
            pattern,
            occurrence_count: count,
            status,
        });
    }
    report.overall.tool = String::from("overall");
    report.tools = tools.into_values().collect();
    report.confirmed_pairs = store.confirmed_pairs().map(String::from).collect();
    report.funnel = funnel.map(|mut f| {
        if store.pair_ids().next().is_some() {
            f.confirmed = Some(report.confirmed_pairs.len());
        }
        f
    });
    report
}
