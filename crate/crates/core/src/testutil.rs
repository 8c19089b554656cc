//! Shared builders for the worked examples used across the unit tests.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::axec::AbstractExecution;
use crate::depgraph::DependencyGraph;
use crate::history::{History, MarkerTag, Object, Operation, Transaction, TxId};
use crate::rel::Relation;

pub fn edges(pairs: &[(&str, &str)]) -> Vec<(TxId, TxId)> {
    pairs
        .iter()
        .map(|(a, b)| ((*a).into(), (*b).into()))
        .collect()
}

fn relation_from(h: &History, pairs: &[(&str, &str)]) -> Relation {
    let u = Arc::new(h.universe());
    Relation::from_pairs(
        &u,
        pairs
            .iter()
            .map(|(a, b)| (u.expect_index(&(*a).into()), u.expect_index(&(*b).into()))),
    )
}

pub fn fig1_history() -> History {
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

pub fn marked_lost_update_history() -> History {
    History::new([
        Transaction::new("t0", [Operation::write("acct", 0)]),
        Transaction::new(
            "t1",
            [
                Operation::read("acct", 0),
                Operation::write("acct", 50),
                Operation::marker(MarkerTag::Ser),
            ],
        ),
        Transaction::new(
            "t2",
            [
                Operation::read("acct", 0),
                Operation::write("acct", 25),
                Operation::marker(MarkerTag::Ser),
            ],
        ),
        Transaction::new("s", [Operation::read("acct", 25)]),
    ])
}

/// VIS as drawn plus the transitive t0 → s edge; AR completed to
/// t0 < t1 < t2 < s.
pub fn fig1_execution() -> AbstractExecution {
    let h = fig1_history();
    let vis = relation_from(
        &h,
        &[
            ("t0", "t1"),
            ("t0", "t2"),
            ("t1", "s"),
            ("t2", "s"),
            ("t0", "s"),
        ],
    );
    let ar = relation_from(
        &h,
        &[
            ("t0", "t1"),
            ("t0", "t2"),
            ("t0", "s"),
            ("t1", "t2"),
            ("t1", "s"),
            ("t2", "s"),
        ],
    );
    AbstractExecution::new(h, vis, ar)
}

pub fn graph(
    h: History,
    wr: &[(&str, &[(&str, &str)])],
    ww: &[(&str, &[(&str, &str)])],
) -> DependencyGraph {
    let to_map = |families: &[(&str, &[(&str, &str)])]| {
        families
            .iter()
            .map(|(x, pairs)| (Object::from(*x), edges(pairs)))
            .collect::<BTreeMap<_, _>>()
    };
    DependencyGraph::from_edges(h, &to_map(wr), &to_map(ww), None).unwrap()
}

pub fn fig1_graph() -> DependencyGraph {
    graph(
        fig1_history(),
        &[("acct", &[("t0", "t1"), ("t0", "t2"), ("t2", "s")])],
        &[("acct", &[("t0", "t1"), ("t0", "t2"), ("t1", "t2")])],
    )
}

pub fn marked_lost_update_graph() -> DependencyGraph {
    graph(
        marked_lost_update_history(),
        &[("acct", &[("t0", "t1"), ("t0", "t2"), ("t2", "s")])],
        &[("acct", &[("t0", "t1"), ("t0", "t2"), ("t1", "t2")])],
    )
}

pub fn write_skew_history() -> History {
    History::new([
        Transaction::new("t0", [Operation::write("x", 0), Operation::write("y", 0)]),
        Transaction::new("t1", [Operation::read("x", 0), Operation::write("y", 1)]),
        Transaction::new("t2", [Operation::read("y", 0), Operation::write("x", 1)]),
    ])
}

pub fn write_skew_graph() -> DependencyGraph {
    graph(
        write_skew_history(),
        &[("x", &[("t0", "t1")]), ("y", &[("t0", "t2")])],
        &[("x", &[("t0", "t2")]), ("y", &[("t0", "t1")])],
    )
}

pub fn long_fork_history() -> History {
    History::new([
        Transaction::new("t0", [Operation::write("x", 0), Operation::write("y", 0)]),
        Transaction::new("t1", [Operation::write("x", 1)]),
        Transaction::new("t2", [Operation::write("y", 1)]),
        Transaction::new("t3", [Operation::read("x", 1), Operation::read("y", 0)]),
        Transaction::new("t4", [Operation::read("y", 1), Operation::read("x", 0)]),
    ])
}

pub fn long_fork_graph() -> DependencyGraph {
    graph(
        long_fork_history(),
        &[
            ("x", &[("t1", "t3"), ("t0", "t4")]),
            ("y", &[("t0", "t3"), ("t2", "t4")]),
        ],
        &[("x", &[("t0", "t1")]), ("y", &[("t0", "t2")])],
    )
}
