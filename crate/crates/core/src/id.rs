//! Stable, URL-safe identifiers for candidate pairs and inconsistencies.

use alloc::string::String;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::catalog::RuleRef;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

/// 64-bit FNV-1a over a sequence of fields, each terminated by a NUL byte.
pub(crate) fn fnv1a(fields: &[&[u8]]) -> u64 {
    let mut hash = FNV_OFFSET;
    for field in fields {
        for byte in field.iter().chain(core::iter::once(&0u8)) {
            hash ^= u64::from(*byte);
            hash = hash.wrapping_mul(FNV_PRIME);
        }
    }
    hash
}

fn hex16(value: u64) -> String {
    alloc::format!("{value:016x}")
}

/// Identifier of a cross-tool rule pair, derived from the two rule references.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PairId(pub String);

impl PairId {
    pub fn new(rule_a: &RuleRef, rule_b: &RuleRef) -> Self {
        Self(hex16(fnv1a(&[
            rule_a.tool.as_bytes(),
            rule_a.rule_id.as_bytes(),
            rule_b.tool.as_bytes(),
            rule_b.rule_id.as_bytes(),
        ])))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for PairId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Identifier of one inconsistency: the pair plus the one-sided location.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct InconsistencyId(pub String);

impl InconsistencyId {
    pub(crate) fn from_fields(fields: &[&[u8]]) -> Self {
        Self(hex16(fnv1a(fields)))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for InconsistencyId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}
