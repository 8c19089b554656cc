//! Extended histories with client sessions.
//!
//! Clients submit transactions within sessions; the session order PO is the
//! disjoint union of the per-session submission orders. Extended
//! specifications combine three clause families over an extended execution
//! (history + PO + VIS + AR):
//!
//! * session guarantees σ, requiring σ(PO) ⊆ VIS (read-your-writes,
//!   monotonic writes, strong session);
//! * causality guarantees (γ, β), requiring γ(H,VIS) ; β(H,VIS) ⊆ VIS —
//!   full causality recovers transitive visibility, and per-object causality
//!   confines it to the transactions touching one object;
//! * consistency guarantees (ρ, π) over extended specification functions,
//!   requiring ρ(H,VIS) ; AR ; π(H,VIS) ⊆ VIS.
//!
//! Causality is NOT assumed here: base validity only asks for Def-2 shape
//! (VIS ⊆ AR, AR a strict total order) plus Last Write Wins. Any ordinary
//! model lifts to an extended one with singleton sessions and the full
//! causality guarantee, and conformance then coincides with plain
//! membership.

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::axec::{
    validate_execution, AbstractExecution, ExecutionLike, ExecutionViolation, InvalidExecution,
    PreExecution,
};
use crate::depgraph::DependencyGraph;
use crate::history::{History, Object, TxId};
use crate::oracle::{audit_fig_laws, CausalityLaws, GuaranteeInstance, LawReport, LawStatus};
use crate::rel::{Relation, Universe};
use crate::spec::{SpecFunction, XSpecification};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SessionError {
    #[error("sessions must partition the transaction ids; {id} is {problem}")]
    NotAPartition { id: TxId, problem: &'static str },
}

/// A history plus a partition of its transactions into ordered sessions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExtendedHistory {
    history: History,
    sessions: Vec<Vec<TxId>>,
}

impl ExtendedHistory {
    pub fn new(history: History, sessions: Vec<Vec<TxId>>) -> Result<Self, SessionError> {
        let mut seen: BTreeSet<&TxId> = BTreeSet::new();
        for session in &sessions {
            for id in session {
                if history.transaction(id).is_none() {
                    return Err(SessionError::NotAPartition {
                        id: id.clone(),
                        problem: "not a transaction of the history",
                    });
                }
                if !seen.insert(id) {
                    return Err(SessionError::NotAPartition {
                        id: id.clone(),
                        problem: "listed twice",
                    });
                }
            }
        }
        for t in history.transactions() {
            if !seen.contains(t.id()) {
                return Err(SessionError::NotAPartition {
                    id: t.id().clone(),
                    problem: "missing from every session",
                });
            }
        }
        Ok(ExtendedHistory { history, sessions })
    }

    /// Each transaction in its own session; PO is empty.
    pub fn singleton_sessions(history: History) -> Self {
        let sessions = history
            .transactions()
            .iter()
            .map(|t| vec![t.id().clone()])
            .collect();
        ExtendedHistory { history, sessions }
    }

    pub fn history(&self) -> &History {
        &self.history
    }

    pub fn sessions(&self) -> &[Vec<TxId>] {
        &self.sessions
    }

    /// The session order: the union of the per-session strict total orders.
    pub fn po(&self, u: &Arc<Universe>) -> Relation {
        let mut po = Relation::empty(u);
        for session in &self.sessions {
            for i in 0..session.len() {
                for j in i + 1..session.len() {
                    po.insert(u.expect_index(&session[i]), u.expect_index(&session[j]));
                }
            }
        }
        po
    }
}

/// An extended history with visibility and arbitration.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExtendedExecution {
    ehistory: ExtendedHistory,
    vis: Relation,
    ar: Relation,
}

impl ExtendedExecution {
    pub fn new(ehistory: ExtendedHistory, vis: Relation, ar: Relation) -> Self {
        let u = ehistory.history().universe();
        assert!(
            **vis.universe() == u && **ar.universe() == u,
            "execution relations must be indexed by the history's universe"
        );
        ExtendedExecution { ehistory, vis, ar }
    }

    pub fn ehistory(&self) -> &ExtendedHistory {
        &self.ehistory
    }

    pub fn history(&self) -> &History {
        self.ehistory.history()
    }

    pub fn vis(&self) -> &Relation {
        &self.vis
    }

    pub fn ar(&self) -> &Relation {
        &self.ar
    }

    pub fn universe(&self) -> &Arc<Universe> {
        self.vis.universe()
    }

    pub fn po(&self) -> Relation {
        self.ehistory.po(self.vis.universe())
    }
}

/// The closed catalog of session and causality guarantees. Every kind
/// denotes a function σ with σ(R) ⊆ R? for all R.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum SessionGuarantee {
    /// σ_RYW(x)(R) = ⟨writers(x)⟩ ; R ; ⟨readers(x)⟩, for every object x:
    /// a client sees the writes of its own earlier transactions.
    ReadYourWrites,
    /// σ_MW(R) = ⟨writers⟩ ; R ; ⟨writers⟩: a client's writing transactions
    /// become visible in submission order.
    MonotonicWrites,
    /// σ_SS(R) = R: the database processes each session in submission order.
    StrongSession,
    /// γ_x(R) = (⟨writers(x) ∪ readers(x)⟩ ; R ; ⟨writers(x) ∪ readers(x)⟩) \ Id:
    /// causality among the transactions accessing x.
    PerObjectCausal(Object),
    /// γ_CC(R) = R \ Id: full causal consistency.
    FullCausal,
}

impl SessionGuarantee {
    /// Whether the guarantee constrains the session order (clause 1) or
    /// visibility itself (clause 2).
    pub fn is_causality(&self) -> bool {
        matches!(
            self,
            SessionGuarantee::PerObjectCausal(_) | SessionGuarantee::FullCausal
        )
    }

    /// The underlying relation transformer; satisfies `apply(h, r) ⊆ r?`.
    pub fn apply(&self, h: &History, r: &Relation) -> Relation {
        let u = r.universe();
        match self {
            SessionGuarantee::ReadYourWrites => {
                let mut out = Relation::empty(u);
                for x in h.objects() {
                    out = out.union(&self.ryw_one(h, r, &x));
                }
                out
            }
            SessionGuarantee::MonotonicWrites => {
                let writers = test_of(
                    u,
                    h.objects()
                        .iter()
                        .flat_map(|x| h.writers_of(x))
                        .collect::<BTreeSet<_>>(),
                );
                writers.compose(r).compose(&writers)
            }
            SessionGuarantee::StrongSession => r.clone(),
            SessionGuarantee::PerObjectCausal(x) => {
                let touching = test_of(
                    u,
                    h.writers_of(x)
                        .into_iter()
                        .chain(h.readers_of(x))
                        .collect::<BTreeSet<_>>(),
                );
                touching
                    .compose(r)
                    .compose(&touching)
                    .difference(&Relation::identity(u))
            }
            SessionGuarantee::FullCausal => r.difference(&Relation::identity(u)),
        }
    }

    fn ryw_one(&self, h: &History, r: &Relation, x: &Object) -> Relation {
        let u = r.universe();
        let writers = test_of(u, h.writers_of(x));
        let readers = test_of(u, h.readers_of(x));
        writers.compose(r).compose(&readers)
    }
}

impl fmt::Display for SessionGuarantee {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SessionGuarantee::ReadYourWrites => f.write_str("ryw"),
            SessionGuarantee::MonotonicWrites => f.write_str("mw"),
            SessionGuarantee::StrongSession => f.write_str("ss"),
            SessionGuarantee::PerObjectCausal(x) => write!(f, "causal({x})"),
            SessionGuarantee::FullCausal => f.write_str("causal"),
        }
    }
}

fn test_of(u: &Arc<Universe>, ids: BTreeSet<TxId>) -> Relation {
    Relation::test(u, ids.iter().filter_map(|id| u.index_of(id)))
}

/// Extended specification functions: the plain catalog plus the
/// session-order-dependent R \ PO?.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ExtendedSpecFunction {
    Plain(SpecFunction),
    /// ρ(H, R) = R \ PO?.
    MinusSessionOrder,
}

impl ExtendedSpecFunction {
    pub fn apply(&self, eh: &ExtendedHistory, r: &Relation) -> Relation {
        match self {
            ExtendedSpecFunction::Plain(f) => f.apply(eh.history(), r),
            ExtendedSpecFunction::MinusSessionOrder => {
                let po = eh.po(r.universe());
                r.difference(&po.reflexive_closure())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExtendedGuarantee {
    pub rho: ExtendedSpecFunction,
    pub pi: ExtendedSpecFunction,
}

/// Session guarantees, causality guarantees, and extended consistency
/// guarantees, checked together by [`conforms`].
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ExtendedSpecification {
    pub session: BTreeSet<SessionGuarantee>,
    pub consistency: Vec<ExtendedGuarantee>,
}

impl ExtendedSpecification {
    pub fn new(
        guarantees: impl IntoIterator<Item = SessionGuarantee>,
        consistency: impl IntoIterator<Item = ExtendedGuarantee>,
    ) -> Self {
        ExtendedSpecification {
            session: guarantees.into_iter().collect(),
            consistency: consistency.into_iter().collect(),
        }
    }

    fn session_clauses(&self) -> impl Iterator<Item = &SessionGuarantee> {
        self.session.iter().filter(|g| !g.is_causality())
    }

    fn causality_clauses(&self) -> impl Iterator<Item = &SessionGuarantee> {
        self.session.iter().filter(|g| g.is_causality())
    }

    pub fn assumes_causality(&self) -> bool {
        self.session.contains(&SessionGuarantee::FullCausal)
    }
}

/// Lifts an ordinary model to the extended setting: no session guarantees,
/// full causality, and the plain guarantees applied pointwise. A valid
/// execution is in the model iff its singleton-session lift conforms.
pub fn lift_spec(sigma: &XSpecification) -> ExtendedSpecification {
    ExtendedSpecification::new(
        [SessionGuarantee::FullCausal],
        sigma.guarantees.iter().map(|g| ExtendedGuarantee {
            rho: ExtendedSpecFunction::Plain(g.rho.clone()),
            pi: ExtendedSpecFunction::Plain(g.pi.clone()),
        }),
    )
}

pub fn lift_execution(e: &AbstractExecution) -> ExtendedExecution {
    ExtendedExecution::new(
        ExtendedHistory::singleton_sessions(e.history().clone()),
        e.vis().clone(),
        e.ar().clone(),
    )
}

/// A violated conformance clause.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConformanceViolation {
    #[error("base: {0}")]
    Base(ExecutionViolation),
    #[error("session clause {guarantee}: ({from}, {to}) not in vis")]
    SessionClause {
        guarantee: String,
        from: TxId,
        to: TxId,
    },
    #[error("causality clause {guarantee}: ({from}, {to}) not in vis")]
    CausalityClause {
        guarantee: String,
        from: TxId,
        to: TxId,
    },
    #[error("consistency clause {index}: ({from}, {to}) not in vis")]
    ConsistencyClause { index: usize, from: TxId, to: TxId },
}

/// Checks base validity (visibility inside arbitration, strict total
/// arbitration, Last Write Wins — transitivity of visibility is NOT assumed)
/// and then the three clause families. Empty report iff the execution
/// conforms.
pub fn conforms(e: &ExtendedExecution, spec: &ExtendedSpecification) -> Vec<ConformanceViolation> {
    let mut out = Vec::new();
    let base = PreExecution::new(e.history().clone(), e.vis.clone(), e.ar.clone());
    for v in validate_execution(&base) {
        match v {
            // Causality is what extended specifications relax.
            ExecutionViolation::VisNotTransitive { .. } => {}
            other => out.push(ConformanceViolation::Base(other)),
        }
    }
    // Def-2 totality over the whole universe.
    let u = e.universe();
    'total: for a in 0..u.len() {
        for b in a + 1..u.len() {
            if !e.ar.contains(a, b) && !e.ar.contains(b, a) {
                out.push(ConformanceViolation::Base(ExecutionViolation::ArNotTotal {
                    a: u.id(a).clone(),
                    b: u.id(b).clone(),
                }));
                break 'total;
            }
        }
    }

    let h = e.history();
    let po = e.po();
    for g in spec.session_clauses() {
        let lhs = g.apply(h, &po);
        if let Some((a, b)) = lhs.difference(&e.vis).pairs().first() {
            out.push(ConformanceViolation::SessionClause {
                guarantee: g.to_string(),
                from: u.id(*a).clone(),
                to: u.id(*b).clone(),
            });
        }
    }
    for g in spec.causality_clauses() {
        let gamma = g.apply(h, &e.vis);
        let lhs = gamma.compose(&gamma);
        if let Some((a, b)) = lhs.difference(&e.vis).pairs().first() {
            out.push(ConformanceViolation::CausalityClause {
                guarantee: g.to_string(),
                from: u.id(*a).clone(),
                to: u.id(*b).clone(),
            });
        }
    }
    for (index, g) in spec.consistency.iter().enumerate() {
        let lhs = g
            .rho
            .apply(&e.ehistory, &e.vis)
            .compose(&e.ar)
            .compose(&g.pi.apply(&e.ehistory, &e.vis));
        if let Some((a, b)) = lhs.difference(&e.vis).pairs().first() {
            out.push(ConformanceViolation::ConsistencyClause {
                index,
                from: u.id(*a).clone(),
                to: u.id(*b).clone(),
            });
        }
    }
    out
}

/// The dependency graph of an extended execution, with the session order
/// carried through unchanged.
pub fn graphof_extended(
    e: &ExtendedExecution,
) -> Result<(DependencyGraph, Relation), InvalidExecution> {
    let base = PreExecution::new(e.history().clone(), e.vis.clone(), e.ar.clone());
    let violations: Vec<ExecutionViolation> = validate_execution(&base)
        .into_iter()
        .filter(|v| !matches!(v, ExecutionViolation::VisNotTransitive { .. }))
        .collect();
    if !violations.is_empty() {
        return Err(InvalidExecution(violations));
    }
    let graph = crate::axec::compute_graph(e.history(), &e.vis, &e.ar);
    Ok((graph, e.po()))
}

/// Verifies the session-law variants on a conforming execution: the derived
/// inequalities
///
/// ```text
/// (e.1) ⋃ σ_i(PO) ⊆ VIS
/// (e.2) (β(H,VIS) ; antiVIS) ∩ γ(H,T×T)⁻¹ ⊆ antiVIS
/// (e.3) (antiVIS ; γ(H,VIS)) ∩ β(H,T×T)⁻¹ ⊆ antiVIS
/// ```
///
/// plus every algebraic law that survives without causality. The laws that
/// need transitive visibility (c.4, c.8, c.9) are reported as not-applicable
/// unless the specification contains the full causality guarantee.
pub fn audit_session_laws(e: &ExtendedExecution, spec: &ExtendedSpecification) -> LawReport {
    let mut report = LawReport::default();
    let h = e.history();
    let u = e.universe();
    let po = e.po();
    let avis = e.vis.inverse().complement();
    let full = Relation::full(u);

    let mut sigma_union = Relation::empty(u);
    for g in spec.session_clauses() {
        sigma_union = sigma_union.union(&g.apply(h, &po));
    }
    report.containment("e.1", &sigma_union, &e.vis);

    let mut e2 = true;
    let mut e3 = true;
    let mut any_causality = false;
    for g in spec.causality_clauses() {
        any_causality = true;
        let gamma_v = g.apply(h, &e.vis);
        let gamma_full = g.apply(h, &full);
        e2 &= gamma_v
            .compose(&avis)
            .intersect(&gamma_full.inverse())
            .is_subset_of(&avis);
        e3 &= avis
            .compose(&gamma_v)
            .intersect(&gamma_full.inverse())
            .is_subset_of(&avis);
    }
    let status = |ok: bool| {
        if ok {
            LawStatus::Pass
        } else {
            LawStatus::Fail("causality instance failed".into())
        }
    };
    if any_causality {
        report.entries.insert("e.2".into(), status(e2));
        report.entries.insert("e.3".into(), status(e3));
    } else {
        report
            .entries
            .insert("e.2".into(), LawStatus::NotApplicable);
        report
            .entries
            .insert("e.3".into(), LawStatus::NotApplicable);
    }

    let Ok((graph, _)) = graphof_extended(e) else {
        report
            .entries
            .insert("base".into(), LawStatus::Fail("execution invalid".into()));
        return report;
    };
    let satisfied: Vec<GuaranteeInstance> = spec
        .consistency
        .iter()
        .filter(|g| {
            g.rho
                .apply(&e.ehistory, &e.vis)
                .compose(&e.ar)
                .compose(&g.pi.apply(&e.ehistory, &e.vis))
                .is_subset_of(&e.vis)
        })
        .map(|g| GuaranteeInstance {
            rho_v: g.rho.apply(&e.ehistory, &e.vis),
            pi_v: g.pi.apply(&e.ehistory, &e.vis),
            rho_full: g.rho.apply(&e.ehistory, &full),
            pi_full: g.pi.apply(&e.ehistory, &full),
        })
        .collect();
    let causality = if spec.assumes_causality() {
        CausalityLaws::Checked
    } else {
        CausalityLaws::NotAssumed
    };
    audit_fig_laws(&mut report, h, &e.vis, &e.ar, &graph, &satisfied, causality);
    report
}
