//! Abstract executions and pre-executions.
//!
//! An abstract execution augments a history with a visibility relation VIS
//! and an arbitration relation AR. VIS ⊆ AR, AR is a strict total order, VIS
//! is transitive (causality), and every read returns the value written by the
//! AR-maximal visible writer (Last Write Wins). A pre-execution relaxes
//! totality of AR: it only has to be total among the writers of each object.
//!
//! `graphof` extracts the dependency graph underlying a valid execution.

use std::sync::Arc;

use thiserror::Error;

use crate::depgraph::DependencyGraph;
use crate::history::{History, HistoryViolation, Object, TxId};
use crate::rel::{Relation, Universe};

/// Anything that looks like an execution: a history plus VIS/AR relations
/// over its universe.
pub trait ExecutionLike {
    fn history(&self) -> &History;
    fn vis(&self) -> &Relation;
    fn ar(&self) -> &Relation;
    /// Whether AR must be total over the whole universe (abstract executions)
    /// or only over the writers of each object (pre-executions).
    fn requires_total_ar(&self) -> bool;
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AbstractExecution {
    history: History,
    vis: Relation,
    ar: Relation,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PreExecution {
    history: History,
    vis: Relation,
    ar: Relation,
}

fn check_universes(history: &History, vis: &Relation, ar: &Relation) {
    let u = history.universe();
    assert!(
        **vis.universe() == u && **ar.universe() == u,
        "execution relations must be indexed by the history's universe"
    );
}

impl AbstractExecution {
    /// Panics if the relations are not over the history's universe; the
    /// semantic clauses are checked by [`validate_execution`], not here.
    pub fn new(history: History, vis: Relation, ar: Relation) -> Self {
        check_universes(&history, &vis, &ar);
        AbstractExecution { history, vis, ar }
    }

    pub fn universe(&self) -> &Arc<Universe> {
        self.vis.universe()
    }
}

impl PreExecution {
    pub fn new(history: History, vis: Relation, ar: Relation) -> Self {
        check_universes(&history, &vis, &ar);
        PreExecution { history, vis, ar }
    }

    pub fn universe(&self) -> &Arc<Universe> {
        self.vis.universe()
    }
}

impl ExecutionLike for AbstractExecution {
    fn history(&self) -> &History {
        &self.history
    }
    fn vis(&self) -> &Relation {
        &self.vis
    }
    fn ar(&self) -> &Relation {
        &self.ar
    }
    fn requires_total_ar(&self) -> bool {
        true
    }
}

impl ExecutionLike for PreExecution {
    fn history(&self) -> &History {
        &self.history
    }
    fn vis(&self) -> &Relation {
        &self.vis
    }
    fn ar(&self) -> &Relation {
        &self.ar
    }
    fn requires_total_ar(&self) -> bool {
        false
    }
}

/// A violated execution clause, named. Reports are exhaustive: validation
/// never stops at the first violation.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExecutionViolation {
    #[error("history: {0}")]
    History(HistoryViolation),
    #[error("vis-not-in-ar: {from} -> {to}")]
    VisNotInAr { from: TxId, to: TxId },
    #[error("ar-not-total: {a} and {b} unrelated")]
    ArNotTotal { a: TxId, b: TxId },
    #[error("ar-not-total-on-writers({object}): {a} and {b} unrelated")]
    ArNotTotalOnWriters { object: Object, a: TxId, b: TxId },
    #[error("ar-not-transitive: {from} -> {to} missing")]
    ArNotTransitive { from: TxId, to: TxId },
    #[error("ar-cyclic")]
    ArCyclic,
    #[error("vis-not-transitive: {from} -> {to} missing")]
    VisNotTransitive { from: TxId, to: TxId },
    #[error("lww-empty-visible-set({tx},{object})")]
    LwwEmptyVisibleSet { tx: TxId, object: Object },
    #[error("lww-wrong-value({tx},{object})")]
    LwwWrongValue { tx: TxId, object: Object },
}

/// Reports each violated clause by name; empty iff the execution is valid.
pub fn validate_execution<E: ExecutionLike>(e: &E) -> Vec<ExecutionViolation> {
    let mut out = Vec::new();
    let h = e.history();
    let vis = e.vis();
    let ar = e.ar();
    let u = vis.universe();
    let n = u.len();

    for v in h.validate() {
        out.push(ExecutionViolation::History(v));
    }

    if let Some((a, b)) = first_pair(&vis.difference(ar)) {
        out.push(ExecutionViolation::VisNotInAr {
            from: u.id(a).clone(),
            to: u.id(b).clone(),
        });
    }

    if e.requires_total_ar() {
        'total: for a in 0..n {
            for b in a + 1..n {
                if !ar.contains(a, b) && !ar.contains(b, a) {
                    out.push(ExecutionViolation::ArNotTotal {
                        a: u.id(a).clone(),
                        b: u.id(b).clone(),
                    });
                    break 'total;
                }
            }
        }
    } else {
        'writers: for x in h.objects() {
            let writers = indices_of(u, &h.writers_of(&x));
            for (i, &a) in writers.iter().enumerate() {
                for &b in &writers[i + 1..] {
                    if !ar.contains(a, b) && !ar.contains(b, a) {
                        out.push(ExecutionViolation::ArNotTotalOnWriters {
                            object: x.clone(),
                            a: u.id(a).clone(),
                            b: u.id(b).clone(),
                        });
                        continue 'writers;
                    }
                }
            }
        }
    }

    if let Some((a, b)) = first_pair(&ar.compose(ar).difference(ar)) {
        out.push(ExecutionViolation::ArNotTransitive {
            from: u.id(a).clone(),
            to: u.id(b).clone(),
        });
    }
    if ar.transitive_closure().find_cycle().is_some() {
        out.push(ExecutionViolation::ArCyclic);
    }
    if let Some((a, b)) = first_pair(&vis.compose(vis).difference(vis)) {
        out.push(ExecutionViolation::VisNotTransitive {
            from: u.id(a).clone(),
            to: u.id(b).clone(),
        });
    }

    // LWW only makes sense once AR orders the writers; report it regardless,
    // picking the smallest AR-maximal element deterministically.
    for t in h.transactions() {
        let ti = match u.index_of(t.id()) {
            Some(i) => i,
            None => continue,
        };
        for x in t.objects() {
            let Some(read) = t.read_value(&x) else {
                continue;
            };
            let writers = indices_of(u, &h.writers_of(&x));
            let visible: Vec<usize> = writers
                .iter()
                .copied()
                .filter(|&w| vis.contains(w, ti))
                .collect();
            if visible.is_empty() {
                out.push(ExecutionViolation::LwwEmptyVisibleSet {
                    tx: t.id().clone(),
                    object: x.clone(),
                });
                continue;
            }
            let max = ar_maximal(ar, &visible);
            let winner = h.transaction(u.id(max)).and_then(|w| w.written_value(&x));
            if winner != Some(read) {
                out.push(ExecutionViolation::LwwWrongValue {
                    tx: t.id().clone(),
                    object: x.clone(),
                });
            }
        }
    }

    out
}

/// Fast-path equivalent of `validate_execution(..).is_empty()` for a total
/// AR candidate, used by the enumeration oracle. Assumes the history itself
/// is valid and AR is a strict total order by construction.
pub(crate) fn candidate_is_valid(ctx: &CandidateContext, vis: &Relation, ar: &Relation) -> bool {
    if !vis.is_subset_of(ar) || !vis.is_transitive() {
        return false;
    }
    for &(ti, oi, value) in &ctx.reads {
        let mut best: Option<usize> = None;
        for &w in &ctx.writers[oi] {
            if vis.contains(w, ti) && best.is_none_or(|b| ar.contains(b, w)) {
                best = Some(w);
            }
        }
        match best {
            None => return false,
            Some(w) => {
                if ctx.written[w][oi] != Some(value) {
                    return false;
                }
            }
        }
    }
    true
}

/// Per-object reader/writer tables precomputed for the enumeration loop.
pub(crate) struct CandidateContext {
    /// (reader index, object table index, value read), one entry per read.
    reads: Vec<(usize, usize, i64)>,
    /// Writer indices per object table index.
    writers: Vec<Vec<usize>>,
    /// `written[tx][object table index]` = value written, if any.
    written: Vec<Vec<Option<i64>>>,
}

impl CandidateContext {
    pub(crate) fn new(h: &History, u: &Arc<Universe>) -> Self {
        let objects: Vec<Object> = h.objects().into_iter().collect();
        let writers: Vec<Vec<usize>> = objects
            .iter()
            .map(|x| indices_of(u, &h.writers_of(x)))
            .collect();
        let mut reads = Vec::new();
        let mut written = vec![vec![None; objects.len()]; u.len()];
        for t in h.transactions() {
            let ti = u.expect_index(t.id());
            for (oi, x) in objects.iter().enumerate() {
                if let Some(v) = t.read_value(x) {
                    reads.push((ti, oi, v));
                }
                written[ti][oi] = t.written_value(x);
            }
        }
        CandidateContext {
            reads,
            writers,
            written,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("execution is not valid: {0:?}")]
pub struct InvalidExecution(pub Vec<ExecutionViolation>);

/// Extracts the dependency graph of a valid execution: per object, WR edges
/// from the AR-maximal visible writer to each reader, WW as AR restricted to
/// the writers, and RW derived from the two. Fails if the execution is
/// invalid (the maximal visible writer is only guaranteed to exist then).
pub fn graphof<E: ExecutionLike>(e: &E) -> Result<DependencyGraph, InvalidExecution> {
    let violations = validate_execution(e);
    if !violations.is_empty() {
        return Err(InvalidExecution(violations));
    }
    Ok(compute_graph(e.history(), e.vis(), e.ar()))
}

/// The extraction itself, for callers that have established Last Write Wins
/// by other means (the sessions module validates without causality).
pub(crate) fn compute_graph(h: &History, vis: &Relation, ar: &Relation) -> DependencyGraph {
    let u = vis.universe();
    let mut wr = std::collections::BTreeMap::new();
    let mut ww = std::collections::BTreeMap::new();
    for x in h.objects() {
        let writers = indices_of(u, &h.writers_of(&x));
        let mut wr_x = Relation::empty(u);
        for reader in h.readers_of(&x) {
            let ri = u.expect_index(&reader);
            let visible: Vec<usize> = writers
                .iter()
                .copied()
                .filter(|&w| vis.contains(w, ri))
                .collect();
            let max = ar_maximal(ar, &visible);
            wr_x.insert(max, ri);
        }
        let mut ww_x = Relation::empty(u);
        for &a in &writers {
            for &b in &writers {
                if ar.contains(a, b) {
                    ww_x.insert(a, b);
                }
            }
        }
        wr.insert(x.clone(), wr_x);
        ww.insert(x, ww_x);
    }
    DependencyGraph::new(h.clone(), wr, ww)
        .expect("graph extracted from a validated execution must be well-formed")
}

/// The anti-visibility relation `{(t, s) | ¬(s →vis→ t)}`, the complement of
/// the inverted visibility over the full universe. Contains the diagonal
/// whenever VIS is irreflexive.
pub fn anti_visibility<E: ExecutionLike>(e: &E) -> Relation {
    e.vis().inverse().complement()
}

pub(crate) fn indices_of(u: &Arc<Universe>, ids: &std::collections::BTreeSet<TxId>) -> Vec<usize> {
    ids.iter().filter_map(|id| u.index_of(id)).collect()
}

/// The AR-supremum of a non-empty index set; ties broken by universe order
/// (only reachable when AR is not total over the set).
fn ar_maximal(ar: &Relation, set: &[usize]) -> usize {
    let mut best = set[0];
    for &w in &set[1..] {
        if ar.contains(best, w) {
            best = w;
        }
    }
    best
}

fn first_pair(r: &Relation) -> Option<(usize, usize)> {
    r.pairs().into_iter().next()
}
