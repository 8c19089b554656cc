//! Transactions, operations, and histories.
//!
//! A history is a finite set of committed transactions; each transaction is a
//! set of read/write operations over integer-valued objects, plus optional
//! markers. Transactions enjoy atomic visibility: within one transaction all
//! reads of an object agree on the value, and so do all writes.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rel::Universe;

/// Transaction identifier. Opaque, ordered lexicographically.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TxId(String);

impl TxId {
    pub fn new(id: impl Into<String>) -> Self {
        TxId(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for TxId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for TxId {
    fn from(s: &str) -> Self {
        TxId::new(s)
    }
}

impl From<String> for TxId {
    fn from(s: String) -> Self {
        TxId(s)
    }
}

/// Object name. Opaque, ordered lexicographically.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Object(String);

impl Object {
    pub fn new(name: impl Into<String>) -> Self {
        Object(name.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Object {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for Object {
    fn from(s: &str) -> Self {
        Object::new(s)
    }
}

/// Marker tags form a closed set; only the serialisable marker exists today.
/// The wire format reserves room for more tags.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MarkerTag {
    Ser,
}

impl fmt::Display for MarkerTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MarkerTag::Ser => f.write_str("ser"),
        }
    }
}

/// A single operation inside a transaction.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Operation {
    Read { object: Object, value: i64 },
    Write { object: Object, value: i64 },
    Marker(MarkerTag),
}

impl Operation {
    pub fn read(object: impl Into<Object>, value: i64) -> Self {
        Operation::Read {
            object: object.into(),
            value,
        }
    }

    pub fn write(object: impl Into<Object>, value: i64) -> Self {
        Operation::Write {
            object: object.into(),
            value,
        }
    }

    pub fn marker(tag: MarkerTag) -> Self {
        Operation::Marker(tag)
    }
}

impl fmt::Display for Operation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Operation::Read { object, value } => write!(f, "RD {object}:{value}"),
            Operation::Write { object, value } => write!(f, "WR {object}:{value}"),
            Operation::Marker(tag) => write!(f, "<{tag}>"),
        }
    }
}

/// A transaction: an id plus the set of operations it performed. Internal
/// operation order is not modeled; a set suffices for every definition the
/// toolkit computes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Transaction {
    id: TxId,
    ops: BTreeSet<Operation>,
}

impl Transaction {
    pub fn new(id: impl Into<TxId>, ops: impl IntoIterator<Item = Operation>) -> Self {
        Transaction {
            id: id.into(),
            ops: ops.into_iter().collect(),
        }
    }

    pub fn id(&self) -> &TxId {
        &self.id
    }

    pub fn ops(&self) -> impl Iterator<Item = &Operation> {
        self.ops.iter()
    }

    pub fn writes(&self, x: &Object) -> bool {
        self.ops
            .iter()
            .any(|o| matches!(o, Operation::Write { object, .. } if object == x))
    }

    pub fn reads(&self, x: &Object) -> bool {
        self.ops
            .iter()
            .any(|o| matches!(o, Operation::Read { object, .. } if object == x))
    }

    /// The value this transaction reads for `x`. Meaningful on valid
    /// transactions, where all reads of `x` agree; returns the smallest
    /// recorded value otherwise.
    pub fn read_value(&self, x: &Object) -> Option<i64> {
        self.ops
            .iter()
            .filter_map(|o| match o {
                Operation::Read { object, value } if object == x => Some(*value),
                _ => None,
            })
            .next()
    }

    /// The value this transaction writes to `x`; see [`Self::read_value`].
    pub fn written_value(&self, x: &Object) -> Option<i64> {
        self.ops
            .iter()
            .filter_map(|o| match o {
                Operation::Write { object, value } if object == x => Some(*value),
                _ => None,
            })
            .next()
    }

    pub fn is_marked(&self, tag: MarkerTag) -> bool {
        self.ops.contains(&Operation::Marker(tag))
    }

    /// All objects this transaction reads or writes.
    pub fn objects(&self) -> BTreeSet<Object> {
        self.ops
            .iter()
            .filter_map(|o| match o {
                Operation::Read { object, .. } | Operation::Write { object, .. } => {
                    Some(object.clone())
                }
                Operation::Marker(_) => None,
            })
            .collect()
    }
}

/// A violation found while validating a history. Violations are data, not
/// failures: validation always runs to completion and reports all of them.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum HistoryViolation {
    #[error("duplicate transaction id {id}")]
    DuplicateId { id: TxId },
    #[error("transaction {id} reads two different values of {object}")]
    ReadAtomicity { id: TxId, object: Object },
    #[error("transaction {id} writes two different values of {object}")]
    WriteAtomicity { id: TxId, object: Object },
}

/// A finite set of committed transactions.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct History {
    transactions: Vec<Transaction>,
}

impl History {
    pub fn new(transactions: impl IntoIterator<Item = Transaction>) -> Self {
        History {
            transactions: transactions.into_iter().collect(),
        }
    }

    pub fn transactions(&self) -> &[Transaction] {
        &self.transactions
    }

    pub fn len(&self) -> usize {
        self.transactions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.transactions.is_empty()
    }

    pub fn transaction(&self, id: &TxId) -> Option<&Transaction> {
        self.transactions.iter().find(|t| t.id() == id)
    }

    /// Every atomic-visibility or duplicate-id violation, with the offending
    /// transaction id and object. Empty iff the history is valid. Idempotent
    /// and insensitive to the order of the transaction set.
    pub fn validate(&self) -> Vec<HistoryViolation> {
        let mut violations = Vec::new();
        let mut seen: BTreeSet<&TxId> = BTreeSet::new();
        for t in &self.transactions {
            if !seen.insert(t.id()) {
                violations.push(HistoryViolation::DuplicateId { id: t.id().clone() });
            }
            let mut read: BTreeMap<&Object, i64> = BTreeMap::new();
            let mut written: BTreeMap<&Object, i64> = BTreeMap::new();
            let mut read_bad: BTreeSet<&Object> = BTreeSet::new();
            let mut write_bad: BTreeSet<&Object> = BTreeSet::new();
            for op in t.ops() {
                match op {
                    Operation::Read { object, value } => {
                        if *read.entry(object).or_insert(*value) != *value {
                            read_bad.insert(object);
                        }
                    }
                    Operation::Write { object, value } => {
                        if *written.entry(object).or_insert(*value) != *value {
                            write_bad.insert(object);
                        }
                    }
                    Operation::Marker(_) => {}
                }
            }
            for object in read_bad {
                violations.push(HistoryViolation::ReadAtomicity {
                    id: t.id().clone(),
                    object: object.clone(),
                });
            }
            for object in write_bad {
                violations.push(HistoryViolation::WriteAtomicity {
                    id: t.id().clone(),
                    object: object.clone(),
                });
            }
        }
        violations
    }

    pub fn is_valid(&self) -> bool {
        self.validate().is_empty()
    }

    /// Ids of the transactions containing a write on `x`.
    pub fn writers_of(&self, x: &Object) -> BTreeSet<TxId> {
        self.transactions
            .iter()
            .filter(|t| t.writes(x))
            .map(|t| t.id().clone())
            .collect()
    }

    /// Ids of the transactions containing a read of `x`.
    pub fn readers_of(&self, x: &Object) -> BTreeSet<TxId> {
        self.transactions
            .iter()
            .filter(|t| t.reads(x))
            .map(|t| t.id().clone())
            .collect()
    }

    /// All objects read or written anywhere in the history.
    pub fn objects(&self) -> BTreeSet<Object> {
        self.transactions.iter().flat_map(|t| t.objects()).collect()
    }

    /// Ids of the transactions carrying the given marker.
    pub fn marked(&self, tag: MarkerTag) -> BTreeSet<TxId> {
        self.transactions
            .iter()
            .filter(|t| t.is_marked(tag))
            .map(|t| t.id().clone())
            .collect()
    }

    /// The transaction universe: ids in lexicographic order. Only meaningful
    /// when ids are distinct.
    pub fn universe(&self) -> Universe {
        let ids: BTreeSet<TxId> = self.transactions.iter().map(|t| t.id().clone()).collect();
        Universe::new(ids.into_iter().collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fig1() -> History {
        History::new([
            Transaction::new("t0", [Operation::write("acct", 0)]),
            Transaction::new(
                "t1",
                [Operation::read("acct", 0), Operation::write("acct", 50)],
            ),
            Transaction::new(
                "t2",
                [Operation::read("acct", 0), Operation::write("acct", 25)],
            ),
            Transaction::new("s", [Operation::read("acct", 25)]),
        ])
    }

    #[test]
    fn read_atomicity_violation_is_reported() {
        let h = History::new([Transaction::new(
            "t",
            [Operation::read("x", 0), Operation::read("x", 1)],
        )]);
        assert_eq!(
            h.validate(),
            vec![HistoryViolation::ReadAtomicity {
                id: "t".into(),
                object: "x".into()
            }]
        );
    }

    #[test]
    fn fig1_history_is_valid() {
        assert_eq!(fig1().validate(), vec![]);
    }

    #[test]
    fn duplicate_ids_are_reported() {
        let h = History::new([
            Transaction::new("t1", [Operation::write("x", 0)]),
            Transaction::new("t1", [Operation::write("y", 0)]),
        ]);
        assert_eq!(
            h.validate(),
            vec![HistoryViolation::DuplicateId { id: "t1".into() }]
        );
    }

    #[test]
    fn writers_of_fig1() {
        let h = fig1();
        let writers: Vec<String> = h
            .writers_of(&"acct".into())
            .iter()
            .map(|t| t.as_str().to_owned())
            .collect();
        assert_eq!(writers, ["t0", "t1", "t2"]);
    }

    #[test]
    fn writers_of_empty_history() {
        let h = History::default();
        assert!(h.writers_of(&"x".into()).is_empty());
    }

    #[test]
    fn writers_of_write_skew_y() {
        let h = History::new([
            Transaction::new("t0", [Operation::write("x", 0), Operation::write("y", 0)]),
            Transaction::new("t1", [Operation::read("x", 0), Operation::write("y", 1)]),
            Transaction::new("t2", [Operation::read("y", 0), Operation::write("x", 1)]),
        ]);
        let writers = h.writers_of(&"y".into());
        assert!(writers.contains(&"t1".into()));
        assert!(!writers.contains(&"t2".into()));
    }

    #[test]
    fn validation_is_order_insensitive() {
        let mut txs = fig1().transactions().to_vec();
        txs.reverse();
        let h = History::new(txs);
        assert!(h.validate().is_empty());
        assert_eq!(h.universe(), fig1().universe());
    }

    #[test]
    fn readers_and_writers_may_overlap() {
        let h = fig1();
        let readers = h.readers_of(&"acct".into());
        let writers = h.writers_of(&"acct".into());
        assert!(readers.intersection(&writers).count() > 0);
    }
}
