//! Machine-checkable identity ledgers. Every operation that asserts an exact
//! equality can record the two sides here so reports stay re-verifiable.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LedgerEntry {
    pub label: String,
    pub lhs: String,
    pub rhs: String,
    pub equal: bool,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct IdentityLedger {
    pub entries: Vec<LedgerEntry>,
}

impl IdentityLedger {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn record<L: ToString, R: ToString>(&mut self, label: &str, lhs: L, rhs: R, equal: bool) {
        self.entries.push(LedgerEntry {
            label: label.to_string(),
            lhs: lhs.to_string(),
            rhs: rhs.to_string(),
            equal,
        });
    }

    /// Record an equality of printable values, deciding equality by `==`.
    pub fn check<T: PartialEq + std::fmt::Debug>(&mut self, label: &str, lhs: &T, rhs: &T) -> bool {
        let equal = lhs == rhs;
        self.entries.push(LedgerEntry {
            label: label.to_string(),
            lhs: format!("{lhs:?}"),
            rhs: format!("{rhs:?}"),
            equal,
        });
        equal
    }

    pub fn all_equal(&self) -> bool {
        self.entries.iter().all(|e| e.equal)
    }

    pub fn first_failure(&self) -> Option<&LedgerEntry> {
        self.entries.iter().find(|e| !e.equal)
    }

    pub fn merge(&mut self, other: IdentityLedger) {
        self.entries.extend(other.entries);
    }
}
