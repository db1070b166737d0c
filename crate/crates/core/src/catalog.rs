//! Rule catalogs: one bug finder's rules with their descriptions and code examples.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::text;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CatalogError {
    #[error("rule id must not be empty (tool {tool})")]
    EmptyRuleId { tool: String },
    #[error("duplicate rule id {rule_id:?} in catalog for tool {tool:?}")]
    DuplicateRule { tool: String, rule_id: String },
    #[error("rule {rule_id:?} belongs to tool {found:?}, catalog is for {expected:?}")]
    ToolMismatch {
        expected: String,
        found: String,
        rule_id: String,
    },
    #[error("rule {rule_id:?} has empty title and description")]
    EmptyText { rule_id: String },
    #[error("rule {rule_id:?} has an empty code example")]
    EmptyExample { rule_id: String },
}

/// Globally unique reference to a rule: the tool plus its rule id.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct RuleRef {
    pub tool: String,
    pub rule_id: String,
}

impl RuleRef {
    pub fn new(tool: impl Into<String>, rule_id: impl Into<String>) -> Self {
        Self {
            tool: tool.into(),
            rule_id: rule_id.into(),
        }
    }
}

impl fmt::Display for RuleRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.tool, self.rule_id)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExampleKind {
    Compliant,
    Noncompliant,
    Unspecified,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CodeExample {
    pub kind: ExampleKind,
    pub source: String,
}

impl CodeExample {
    pub fn new(kind: ExampleKind, source: impl Into<String>) -> Self {
        Self {
            kind,
            source: source.into(),
        }
    }
}

/// Terms of the class and method identifiers found in a rule's code examples.
///
/// Both compliant and noncompliant examples contribute.
pub fn extract_code_terms(examples: &[CodeExample]) -> BTreeSet<String> {
    text::code_terms(examples.iter().map(|e| e.source.as_str()))
}

/// One static-analysis rule.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RuleDescriptor {
    pub tool: String,
    pub rule_id: String,
    pub title: String,
    pub description: String,
    pub code_examples: Vec<CodeExample>,
    pub code_terms: BTreeSet<String>,
}

impl RuleDescriptor {
    pub fn new(
        tool: impl Into<String>,
        rule_id: impl Into<String>,
        title: impl Into<String>,
        description: impl Into<String>,
        code_examples: Vec<CodeExample>,
    ) -> Result<Self, CatalogError> {
        let tool = tool.into();
        let rule_id = rule_id.into();
        let title = title.into();
        let description = description.into();
        if rule_id.is_empty() {
            return Err(CatalogError::EmptyRuleId { tool });
        }
        if title.trim().is_empty() && description.trim().is_empty() {
            return Err(CatalogError::EmptyText { rule_id });
        }
        if code_examples.iter().any(|e| e.source.is_empty()) {
            return Err(CatalogError::EmptyExample { rule_id });
        }
        let code_terms = extract_code_terms(&code_examples);
        Ok(Self {
            tool,
            rule_id,
            title,
            description,
            code_examples,
            code_terms,
        })
    }

    pub fn rule_ref(&self) -> RuleRef {
        RuleRef::new(self.tool.clone(), self.rule_id.clone())
    }

    /// Title and description joined by a single space.
    pub fn text_content(&self) -> String {
        let mut s = self.title.clone();
        s.push(' ');
        s.push_str(&self.description);
        s
    }
}

/// All rules of one tool, in file order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RuleCatalog {
    tool: String,
    rules: Vec<RuleDescriptor>,
    #[serde(skip)]
    by_id: BTreeMap<String, usize>,
}

impl RuleCatalog {
    pub fn new(tool: impl Into<String>, rules: Vec<RuleDescriptor>) -> Result<Self, CatalogError> {
        let tool = tool.into();
        let mut by_id = BTreeMap::new();
        for (i, rule) in rules.iter().enumerate() {
            if rule.tool != tool {
                return Err(CatalogError::ToolMismatch {
                    expected: tool,
                    found: rule.tool.clone(),
                    rule_id: rule.rule_id.clone(),
                });
            }
            if by_id.insert(rule.rule_id.clone(), i).is_some() {
                return Err(CatalogError::DuplicateRule {
                    tool,
                    rule_id: rule.rule_id.to_string(),
                });
            }
        }
        Ok(Self { tool, rules, by_id })
    }

    pub fn tool(&self) -> &str {
        &self.tool
    }

    pub fn rules(&self) -> &[RuleDescriptor] {
        &self.rules
    }

    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    pub fn get(&self, rule_id: &str) -> Option<&RuleDescriptor> {
        self.by_id.get(rule_id).map(|&i| &self.rules[i])
    }

    /// True when `rule` names a rule of this catalog.
    pub fn contains(&self, rule: &RuleRef) -> bool {
        rule.tool == self.tool && self.by_id.contains_key(&rule.rule_id)
    }

    pub fn rule_refs(&self) -> impl Iterator<Item = RuleRef> + '_ {
        self.rules.iter().map(RuleDescriptor::rule_ref)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn rule(id: &str, examples: Vec<CodeExample>) -> RuleDescriptor {
        RuleDescriptor::new("pmd", id, "Title", "Some description", examples).unwrap()
    }

    #[test]
    fn duplicate_rule_id_rejected() {
        let err = RuleCatalog::new("pmd", vec![rule("S1234", vec![]), rule("S1234", vec![])])
            .unwrap_err();
        assert!(
            matches!(err, CatalogError::DuplicateRule { ref rule_id, .. } if rule_id == "S1234")
        );
    }

    #[test]
    fn empty_examples_yield_empty_terms() {
        let r = rule("R1", vec![]);
        assert!(r.code_terms.is_empty());
    }

    #[test]
    fn terms_use_every_example_kind() {
        let r = rule(
            "R1",
            vec![
                CodeExample::new(ExampleKind::Noncompliant, "e.printStackTrace();"),
                CodeExample::new(ExampleKind::Compliant, "LOGGER.log(e);"),
            ],
        );
        let terms: Vec<&str> = r.code_terms.iter().map(String::as_str).collect();
        assert_eq!(terms, vec!["e", "log", "logger", "print", "stack", "trace"]);
    }

    #[test]
    fn text_must_be_nonempty() {
        let err = RuleDescriptor::new("pmd", "R", " ", "", vec![]).unwrap_err();
        assert!(matches!(err, CatalogError::EmptyText { .. }));
    }

    #[test]
    fn empty_example_source_rejected() {
        let err = RuleDescriptor::new(
            "pmd",
            "R",
            "t",
            "d",
            vec![CodeExample::new(ExampleKind::Unspecified, "")],
        )
        .unwrap_err();
        assert!(matches!(err, CatalogError::EmptyExample { .. }));
    }

    #[test]
    fn lookup_by_ref() {
        let cat = RuleCatalog::new("pmd", vec![rule("A", vec![]), rule("B", vec![])]).unwrap();
        assert_eq!(cat.len(), 2);
        assert!(cat.contains(&RuleRef::new("pmd", "B")));
        assert!(!cat.contains(&RuleRef::new("sonar", "B")));
        assert_eq!(cat.get("A").unwrap().rule_id, "A");
    }
}
