//! The shipped fixture corpus: the classic anomalies with their
//! allow/forbid matrix, the worked lost-update example as history, execution,
//! and graph, and the five-transaction graph on which the naive inequality
//! system for a non-simple model goes wrong.
//!
//! Every anomaly carries an explicit initializer transaction t0 writing the
//! initial value of the relevant objects; graphs order writers initializer
//! first and readers take their value from the matching writer.

use std::collections::BTreeMap;
use std::sync::Arc;

use ck_core::axec::AbstractExecution;
use ck_core::codec::Document;
use ck_core::depgraph::DependencyGraph;
use ck_core::history::{History, MarkerTag, Object, Operation, Transaction, TxId};
use ck_core::rel::Relation;
use ck_core::spec::Model;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Expectation {
    Allowed,
    Forbidden,
}

impl Expectation {
    pub fn as_str(&self) -> &'static str {
        match self {
            Expectation::Allowed => "allowed",
            Expectation::Forbidden => "forbidden",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FixtureKind {
    History,
    Execution,
    Graph,
}

impl FixtureKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            FixtureKind::History => "history",
            FixtureKind::Execution => "execution",
            FixtureKind::Graph => "graph",
        }
    }
}

pub struct FixtureEntry {
    pub name: &'static str,
    pub kind: FixtureKind,
    pub doc: Document,
    /// The allow/forbid matrix, present on the history fixtures.
    pub expected: BTreeMap<Model, Expectation>,
}

fn matrix(rows: [(Model, Expectation); 5]) -> BTreeMap<Model, Expectation> {
    rows.into_iter().collect()
}

fn all_forbidden() -> BTreeMap<Model, Expectation> {
    use Expectation::Forbidden;
    matrix([
        (Model::Cc, Forbidden),
        (Model::CcSer, Forbidden),
        (Model::Psi, Forbidden),
        (Model::Si, Forbidden),
        (Model::Ser, Forbidden),
    ])
}

fn lost_update_matrix() -> BTreeMap<Model, Expectation> {
    use Expectation::*;
    matrix([
        (Model::Cc, Allowed),
        (Model::CcSer, Allowed),
        (Model::Psi, Forbidden),
        (Model::Si, Forbidden),
        (Model::Ser, Forbidden),
    ])
}

fn tx(id: &str, ops: Vec<Operation>) -> Transaction {
    Transaction::new(id, ops)
}

fn rd(x: &str, v: i64) -> Operation {
    Operation::read(x, v)
}

fn wr(x: &str, v: i64) -> Operation {
    Operation::write(x, v)
}

fn ser() -> Operation {
    Operation::marker(MarkerTag::Ser)
}

pub fn lost_update_history(marked: bool) -> History {
    let mark = |mut ops: Vec<Operation>| {
        if marked {
            ops.push(ser());
        }
        ops
    };
    History::new([
        tx("t0", vec![wr("acct", 0)]),
        tx("t1", mark(vec![rd("acct", 0), wr("acct", 50)])),
        tx("t2", mark(vec![rd("acct", 0), wr("acct", 25)])),
        tx("s", vec![rd("acct", 25)]),
    ])
}

pub fn long_fork_history(marked: bool) -> History {
    let mark = |mut ops: Vec<Operation>| {
        if marked {
            ops.push(ser());
        }
        ops
    };
    History::new([
        tx("t0", vec![wr("x", 0), wr("y", 0)]),
        tx("t1", mark(vec![wr("x", 1)])),
        tx("t2", mark(vec![wr("y", 1)])),
        tx("t3", vec![rd("x", 1), rd("y", 0)]),
        tx("t4", vec![rd("y", 1), rd("x", 0)]),
    ])
}

pub fn write_skew_history() -> History {
    History::new([
        tx("t0", vec![wr("x", 0), wr("y", 0)]),
        tx("t1", vec![rd("x", 0), wr("y", 1)]),
        tx("t2", vec![rd("y", 0), wr("x", 1)]),
    ])
}

pub fn fractured_reads_history() -> History {
    History::new([
        tx("t0", vec![wr("x", 0), wr("y", 0)]),
        tx("t1", vec![wr("x", 1), wr("y", 1)]),
        tx("t2", vec![rd("x", 1), rd("y", 0)]),
    ])
}

pub fn causality_violation_history() -> History {
    // t1 reads the initial value before overwriting it; this pins the
    // initializer before t1 in arbitration, standing in for the convention
    // that the initializer is visible to every other transaction.
    History::new([
        tx("t0", vec![wr("x", 0), wr("y", 0)]),
        tx("t1", vec![rd("x", 0), wr("x", 1)]),
        tx("t2", vec![rd("x", 1), wr("y", 1)]),
        tx("t3", vec![rd("x", 0), rd("y", 1)]),
    ])
}

/// The canonical graph of a fixture history: each reader takes its value
/// from the unique matching writer, and writers are ordered initializer
/// first, then by id.
fn canonical_graph(h: &History) -> DependencyGraph {
    let u = Arc::new(h.universe());
    let mut wr_map: BTreeMap<Object, Relation> = BTreeMap::new();
    let mut ww_map: BTreeMap<Object, Relation> = BTreeMap::new();
    for x in h.objects() {
        let mut writers: Vec<TxId> = h.writers_of(&x).into_iter().collect();
        writers.sort_by_key(|id| (id.as_str() != "t0", id.clone()));
        let mut ww_x = Relation::empty(&u);
        for i in 0..writers.len() {
            for j in i + 1..writers.len() {
                ww_x.insert(u.expect_index(&writers[i]), u.expect_index(&writers[j]));
            }
        }
        let mut wr_x = Relation::empty(&u);
        for reader in h.readers_of(&x) {
            let value = h.transaction(&reader).and_then(|t| t.read_value(&x));
            let sources: Vec<&TxId> = writers
                .iter()
                .filter(|w| {
                    *w != &reader && h.transaction(w).and_then(|t| t.written_value(&x)) == value
                })
                .collect();
            assert_eq!(sources.len(), 1, "fixture reads must be unambiguous");
            wr_x.insert(u.expect_index(sources[0]), u.expect_index(&reader));
        }
        wr_map.insert(x.clone(), wr_x);
        ww_map.insert(x, ww_x);
    }
    DependencyGraph::new(h.clone(), wr_map, ww_map).expect("fixture graphs are well-formed")
}

/// The worked example execution: visibility as drawn (with its transitive
/// edge) and arbitration completed to t0 < t1 < t2 < s.
pub fn fig1_execution() -> AbstractExecution {
    let h = lost_update_history(false);
    let u = Arc::new(h.universe());
    let i = |s: &str| u.expect_index(&s.into());
    let vis = Relation::from_pairs(
        &u,
        [
            (i("t0"), i("t1")),
            (i("t0"), i("t2")),
            (i("t1"), i("s")),
            (i("t2"), i("s")),
            (i("t0"), i("s")),
        ],
    );
    let ar = Relation::from_pairs(
        &u,
        [
            (i("t0"), i("t1")),
            (i("t0"), i("t2")),
            (i("t0"), i("s")),
            (i("t1"), i("t2")),
            (i("t1"), i("s")),
            (i("t2"), i("s")),
        ],
    );
    AbstractExecution::new(h, vis, ar)
}

/// The five-transaction graph witnessing that the naive inequality system is
/// incomplete for non-simple models: its least arbitration is acyclic under
/// the marked prefix-consistency model, yet no execution of that model (nor
/// of SI with serialisable markers) has this graph.
pub fn incompleteness_graph() -> DependencyGraph {
    let h = History::new([
        tx("t0", vec![wr("x", 0), wr("v", 0)]),
        tx("t1", vec![rd("x", 0), wr("y", 2), ser()]),
        tx("t2", vec![wr("x", 1), wr("z", 1)]),
        tx("t3", vec![rd("v", 0), wr("z", 2), ser()]),
        tx("t4", vec![wr("v", 1), wr("y", 1)]),
    ]);
    let u = Arc::new(h.universe());
    let i = |s: &str| u.expect_index(&s.into());
    let rel =
        |pairs: &[(&str, &str)]| Relation::from_pairs(&u, pairs.iter().map(|(a, b)| (i(a), i(b))));
    let mut wr_map = BTreeMap::new();
    wr_map.insert(Object::from("x"), rel(&[("t0", "t1")]));
    wr_map.insert(Object::from("v"), rel(&[("t0", "t3")]));
    let mut ww_map = BTreeMap::new();
    ww_map.insert(Object::from("x"), rel(&[("t0", "t2")]));
    ww_map.insert(Object::from("v"), rel(&[("t0", "t4")]));
    ww_map.insert(Object::from("y"), rel(&[("t4", "t1")]));
    ww_map.insert(Object::from("z"), rel(&[("t2", "t3")]));
    DependencyGraph::new(h, wr_map, ww_map).expect("incompleteness graph is well-formed")
}

/// The whole corpus, in emission order.
pub fn all() -> Vec<FixtureEntry> {
    let mut out = Vec::new();
    let mut history = |name: &'static str, h: &History, expected: BTreeMap<Model, Expectation>| {
        out.push(FixtureEntry {
            name,
            kind: FixtureKind::History,
            doc: Document::from_history(h),
            expected,
        });
    };
    history(
        "fractured-reads",
        &fractured_reads_history(),
        all_forbidden(),
    );
    history(
        "causality-violation",
        &causality_violation_history(),
        all_forbidden(),
    );
    history(
        "lost-update",
        &lost_update_history(false),
        lost_update_matrix(),
    );
    history("serialisable-lost-update", &lost_update_history(true), {
        use Expectation::*;
        matrix([
            (Model::Cc, Allowed),
            (Model::CcSer, Forbidden),
            (Model::Psi, Forbidden),
            (Model::Si, Forbidden),
            (Model::Ser, Forbidden),
        ])
    });
    history("long-fork", &long_fork_history(false), {
        use Expectation::*;
        matrix([
            (Model::Cc, Allowed),
            (Model::CcSer, Allowed),
            (Model::Psi, Allowed),
            (Model::Si, Forbidden),
            (Model::Ser, Forbidden),
        ])
    });
    history("long-fork-ser-updates", &long_fork_history(true), {
        use Expectation::*;
        matrix([
            (Model::Cc, Allowed),
            (Model::CcSer, Forbidden),
            (Model::Psi, Allowed),
            (Model::Si, Forbidden),
            (Model::Ser, Forbidden),
        ])
    });
    history("write-skew", &write_skew_history(), {
        use Expectation::*;
        matrix([
            (Model::Cc, Allowed),
            (Model::CcSer, Allowed),
            (Model::Psi, Allowed),
            (Model::Si, Allowed),
            (Model::Ser, Forbidden),
        ])
    });
    history("fig1", &lost_update_history(false), lost_update_matrix());

    out.push(FixtureEntry {
        name: "fig1-execution",
        kind: FixtureKind::Execution,
        doc: Document::from_execution(&fig1_execution()),
        expected: BTreeMap::new(),
    });

    let graphs: [(&'static str, DependencyGraph); 8] = [
        (
            "fractured-reads-graph",
            canonical_graph(&fractured_reads_history()),
        ),
        (
            "causality-violation-graph",
            canonical_graph(&causality_violation_history()),
        ),
        (
            "lost-update-graph",
            canonical_graph(&lost_update_history(false)),
        ),
        (
            "serialisable-lost-update-graph",
            canonical_graph(&lost_update_history(true)),
        ),
        (
            "long-fork-graph",
            canonical_graph(&long_fork_history(false)),
        ),
        (
            "long-fork-ser-updates-graph",
            canonical_graph(&long_fork_history(true)),
        ),
        ("write-skew-graph", canonical_graph(&write_skew_history())),
        ("fig1-graph", canonical_graph(&lost_update_history(false))),
    ];
    for (name, g) in graphs {
        out.push(FixtureEntry {
            name,
            kind: FixtureKind::Graph,
            doc: Document::from_graph(&g),
            expected: BTreeMap::new(),
        });
    }
    out.push(FixtureEntry {
        name: "appd-incompleteness",
        kind: FixtureKind::Graph,
        doc: Document::from_graph(&incompleteness_graph()),
        expected: BTreeMap::new(),
    });
    out
}
