//! Dependency graphs, graph-based specifications, and robustness checking.
//!
//! A dependency graph records, per object, write-read dependencies (WR, also
//! called RF), write-write dependencies (WW/VO, a strict total order over the
//! writers), and the anti-dependencies (RW/AD) they induce: S →RW(x)→ T holds
//! exactly when S read a version of x that T later overwrote. RW is always
//! derived, never user-supplied; inputs carrying RW edges are cross-checked
//! and rejected on mismatch.
//!
//! A g-specification is a set of relation-valued functions over graphs, each
//! required to be irreflexive; a reflexive pair is reported back as a
//! concrete edge-labeled cycle. The robustness checker evaluates the named
//! per-model criterion relations and, when a critical cycle exists, labels
//! every edge with its kind and object and marks the protected (fenced)
//! edges.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::history::{History, HistoryViolation, MarkerTag, Object, TxId};
use crate::rel::{Relation, Universe};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DepKind {
    Wr,
    Ww,
    Rw,
}

impl fmt::Display for DepKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DepKind::Wr => f.write_str("wr"),
            DepKind::Ww => f.write_str("ww"),
            DepKind::Rw => f.write_str("rw"),
        }
    }
}

/// One labeled edge of a critical cycle. `fenced` marks edges that are
/// protected in the sense of the marker-based criteria (the anti-dependency
/// inside a fenced segment, or the write-write dependencies of a fenced
/// segment).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CycleEdge {
    pub from: TxId,
    pub to: TxId,
    pub kind: DepKind,
    pub object: Object,
    pub fenced: bool,
}

impl fmt::Display for CycleEdge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mark = if self.fenced { "!" } else { "" };
        write!(
            f,
            "{} -{}{}({})-> {}",
            self.from, self.kind, mark, self.object, self.to
        )
    }
}

/// An edge-labeled cycle: `edges[i].to == edges[i+1].from` and the last edge
/// closes back to the first.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CriticalCycle {
    pub edges: Vec<CycleEdge>,
}

impl CriticalCycle {
    pub fn through(&self, id: &TxId) -> bool {
        self.edges.iter().any(|e| &e.from == id || &e.to == id)
    }
}

impl fmt::Display for CriticalCycle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.edges.iter().map(|e| e.to_string()).collect();
        f.write_str(&parts.join(" ; "))
    }
}

/// A violated clause of the dependency-graph well-formedness conditions.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphViolation {
    #[error(
        "clause 1a: wr({object}) edge {from} -> {to} is not writer-to-reader of a matching value"
    )]
    WrEdgeShape {
        object: Object,
        from: TxId,
        to: TxId,
    },
    #[error("clause 1b: reader {reader} of {object} has no wr({object}) predecessor")]
    ReaderWithoutSource { object: Object, reader: TxId },
    #[error("clause 1c: reader {reader} of {object} has more than one wr({object}) predecessor")]
    ReaderWithTwoSources { object: Object, reader: TxId },
    #[error("clause 2: ww({object}) is not a strict total order over the writers of {object}")]
    WwNotTotalOrder { object: Object },
    #[error("clause 3: declared rw({object}) differs from the derived anti-dependencies")]
    RwMismatch { object: Object },
    #[error("edge references {id}, which is not a transaction of the history")]
    UnknownTransaction { id: TxId },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("history is invalid: {0:?}")]
    InvalidHistory(Vec<HistoryViolation>),
    #[error("dependency graph is malformed: {0:?}")]
    Invalid(Vec<GraphViolation>),
}

/// Per-object WR/WW/RW edge families over a history.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DependencyGraph {
    history: History,
    universe: Arc<Universe>,
    wr: BTreeMap<Object, Relation>,
    ww: BTreeMap<Object, Relation>,
    rw: BTreeMap<Object, Relation>,
    rf_all: Relation,
    vo_all: Relation,
    ad_all: Relation,
    empty: Relation,
}

impl DependencyGraph {
    /// Builds and validates a graph from per-object WR and WW families,
    /// deriving RW. Every well-formedness clause is checked; violations are
    /// reported by clause name.
    pub fn new(
        history: History,
        wr: BTreeMap<Object, Relation>,
        ww: BTreeMap<Object, Relation>,
    ) -> Result<Self, GraphError> {
        Self::build(history, wr, ww, None)
    }

    /// Like [`Self::new`] but additionally cross-checks a declared RW family
    /// against the derived one.
    pub fn with_declared_rw(
        history: History,
        wr: BTreeMap<Object, Relation>,
        ww: BTreeMap<Object, Relation>,
        declared_rw: BTreeMap<Object, Relation>,
    ) -> Result<Self, GraphError> {
        Self::build(history, wr, ww, Some(declared_rw))
    }

    fn build(
        history: History,
        wr: BTreeMap<Object, Relation>,
        ww: BTreeMap<Object, Relation>,
        declared_rw: Option<BTreeMap<Object, Relation>>,
    ) -> Result<Self, GraphError> {
        let history_violations = history.validate();
        if !history_violations.is_empty() {
            return Err(GraphError::InvalidHistory(history_violations));
        }
        let universe = Arc::new(history.universe());
        let mut violations = Vec::new();

        let objects = history.objects();
        let mut all_keys: Vec<Object> = objects.iter().cloned().collect();
        for key in wr.keys().chain(ww.keys()) {
            if !all_keys.contains(key) {
                all_keys.push(key.clone());
            }
        }

        let empty = Relation::empty(&universe);
        let mut wr_norm: BTreeMap<Object, Relation> = BTreeMap::new();
        let mut ww_norm: BTreeMap<Object, Relation> = BTreeMap::new();
        let mut rw_norm: BTreeMap<Object, Relation> = BTreeMap::new();

        for x in &all_keys {
            let wr_x = wr.get(x).unwrap_or(&empty).clone();
            let ww_x = ww.get(x).unwrap_or(&empty).clone();
            let writers: Vec<usize> = history
                .writers_of(x)
                .iter()
                .map(|id| universe.expect_index(id))
                .collect();

            // Clause 1a: writer -> reader of a matching value, no self-edges.
            for (a, b) in wr_x.pairs() {
                let (from, to) = (universe.id(a), universe.id(b));
                let writer = history.transaction(from).and_then(|t| t.written_value(x));
                let reader = history.transaction(to).and_then(|t| t.read_value(x));
                let matching = writer.is_some() && writer == reader;
                if a == b || !matching {
                    violations.push(GraphViolation::WrEdgeShape {
                        object: x.clone(),
                        from: from.clone(),
                        to: to.clone(),
                    });
                }
            }
            // Clauses 1b/1c: each reader has exactly one source.
            for reader in history.readers_of(x) {
                let ri = universe.expect_index(&reader);
                let sources = (0..universe.len())
                    .filter(|&w| wr_x.contains(w, ri))
                    .count();
                if sources == 0 {
                    violations.push(GraphViolation::ReaderWithoutSource {
                        object: x.clone(),
                        reader,
                    });
                } else if sources > 1 {
                    violations.push(GraphViolation::ReaderWithTwoSources {
                        object: x.clone(),
                        reader,
                    });
                }
            }
            // Clause 2: ww(x) is a strict total order over the writers of x.
            let endpoints_ok = ww_x
                .pairs()
                .into_iter()
                .all(|(a, b)| writers.contains(&a) && writers.contains(&b));
            if !endpoints_ok || !ww_x.is_strict_total_order_over(&writers) {
                violations.push(GraphViolation::WwNotTotalOrder { object: x.clone() });
            }

            // Clause 3: RW is the derived relation (WR(x)⁻¹ ; WW(x)) \ Id.
            let derived = wr_x
                .inverse()
                .compose(&ww_x)
                .difference(&Relation::identity(&universe));
            if let Some(declared) = declared_rw.as_ref().and_then(|m| m.get(x)) {
                if *declared != derived {
                    violations.push(GraphViolation::RwMismatch { object: x.clone() });
                }
            }

            if objects.contains(x) {
                wr_norm.insert(x.clone(), wr_x);
                ww_norm.insert(x.clone(), ww_x);
                rw_norm.insert(x.clone(), derived);
            }
        }
        if let Some(declared) = &declared_rw {
            for x in declared.keys() {
                if !all_keys.contains(x) && !declared[x].is_empty() {
                    violations.push(GraphViolation::RwMismatch { object: x.clone() });
                }
            }
        }

        if !violations.is_empty() {
            return Err(GraphError::Invalid(violations));
        }

        let union_of = |map: &BTreeMap<Object, Relation>| {
            map.values()
                .fold(Relation::empty(&universe), |acc, r| acc.union(r))
        };
        let rf_all = union_of(&wr_norm);
        let vo_all = union_of(&ww_norm);
        let ad_all = union_of(&rw_norm);
        let empty = Relation::empty(&universe);
        Ok(DependencyGraph {
            history,
            universe,
            wr: wr_norm,
            ww: ww_norm,
            rw: rw_norm,
            rf_all,
            vo_all,
            ad_all,
            empty,
        })
    }

    /// Builds a graph from id-labeled edge lists, the shape the JSON codec
    /// produces.
    pub fn from_edges(
        history: History,
        wr: &BTreeMap<Object, Vec<(TxId, TxId)>>,
        ww: &BTreeMap<Object, Vec<(TxId, TxId)>>,
        rw: Option<&BTreeMap<Object, Vec<(TxId, TxId)>>>,
    ) -> Result<Self, GraphError> {
        let history_violations = history.validate();
        if !history_violations.is_empty() {
            return Err(GraphError::InvalidHistory(history_violations));
        }
        let universe = Arc::new(history.universe());
        let mut convert = |edges: &BTreeMap<Object, Vec<(TxId, TxId)>>| {
            let mut out = BTreeMap::new();
            let mut unknown = Vec::new();
            for (x, pairs) in edges {
                let mut r = Relation::empty(&universe);
                for (a, b) in pairs {
                    match (universe.index_of(a), universe.index_of(b)) {
                        (Some(i), Some(j)) => r.insert(i, j),
                        (i, j) => {
                            if i.is_none() {
                                unknown.push(GraphViolation::UnknownTransaction { id: a.clone() });
                            }
                            if j.is_none() {
                                unknown.push(GraphViolation::UnknownTransaction { id: b.clone() });
                            }
                        }
                    }
                }
                out.insert(x.clone(), r);
            }
            (out, unknown)
        };
        let (wr_rel, mut unknown) = convert(wr);
        let (ww_rel, more) = convert(ww);
        unknown.extend(more);
        let rw_rel = rw.map(&mut convert).map(|(m, more)| {
            unknown.extend(more);
            m
        });
        if !unknown.is_empty() {
            return Err(GraphError::Invalid(unknown));
        }
        match rw_rel {
            Some(declared) => Self::with_declared_rw(history, wr_rel, ww_rel, declared),
            None => Self::new(history, wr_rel, ww_rel),
        }
    }

    pub fn history(&self) -> &History {
        &self.history
    }

    pub fn universe(&self) -> &Arc<Universe> {
        &self.universe
    }

    pub fn objects(&self) -> impl Iterator<Item = &Object> {
        self.wr.keys()
    }

    pub fn wr(&self, x: &Object) -> &Relation {
        self.wr.get(x).unwrap_or(&self.empty)
    }

    pub fn ww(&self, x: &Object) -> &Relation {
        self.ww.get(x).unwrap_or(&self.empty)
    }

    pub fn rw(&self, x: &Object) -> &Relation {
        self.rw.get(x).unwrap_or(&self.empty)
    }

    /// Union of the per-object write-read dependencies.
    pub fn rf(&self) -> &Relation {
        &self.rf_all
    }

    /// Union of the per-object write-write dependencies.
    pub fn vo(&self) -> &Relation {
        &self.vo_all
    }

    /// Union of the per-object anti-dependencies.
    pub fn ad(&self) -> &Relation {
        &self.ad_all
    }
}

/// The closed catalog of graph-based specification functions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Delta {
    /// (RF ∪ VO ∪ AD)⁺: serialisability.
    Ser,
    /// ((RF ∪ VO) ; AD?)⁺: snapshot isolation.
    Si,
    /// (RF ∪ VO)⁺: the anti-dependency-free part of the PSI criterion.
    Psi0,
    /// ((RF ∪ VO)* ; AD(x))⁺: single-object anti-dependency cycles.
    PsiOn(Object),
    /// (RF ∪ VO)⁺ ∪ ⋃_x (⟨writers(x)⟩ ; (RF ∪ VO)* ; AD(x))⁺: the merged
    /// single-delta form of the PSI criterion.
    PsiMerged,
}

impl fmt::Display for Delta {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Delta::Ser => f.write_str("ser"),
            Delta::Si => f.write_str("si"),
            Delta::Psi0 => f.write_str("psi0"),
            Delta::PsiOn(x) => write!(f, "psi({x})"),
            Delta::PsiMerged => f.write_str("psi-merged"),
        }
    }
}

/// Evaluates a delta function on a graph.
pub fn evaluate_delta(delta: &Delta, g: &DependencyGraph) -> Relation {
    let rfvo = g.rf().union(g.vo());
    match delta {
        Delta::Ser => rfvo.union(g.ad()).transitive_closure(),
        Delta::Si => rfvo
            .compose(&g.ad().reflexive_closure())
            .transitive_closure(),
        Delta::Psi0 => rfvo.transitive_closure(),
        Delta::PsiOn(x) => rfvo
            .reflexive_transitive_closure()
            .compose(g.rw(x))
            .transitive_closure(),
        Delta::PsiMerged => {
            let mut out = rfvo.transitive_closure();
            let star = rfvo.reflexive_transitive_closure();
            for x in g.history.objects() {
                let writers = Relation::test(
                    &g.universe,
                    g.history
                        .writers_of(&x)
                        .iter()
                        .map(|id| g.universe.expect_index(id)),
                );
                out = out.union(
                    &writers
                        .compose(&star)
                        .compose(g.rw(&x))
                        .transitive_closure(),
                );
            }
            out
        }
    }
}

/// A set of delta functions, all required to be irreflexive on a conforming
/// graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GSpecification {
    pub name: String,
    pub deltas: Vec<Delta>,
}

impl GSpecification {
    pub fn ser() -> Self {
        GSpecification {
            name: "ser".into(),
            deltas: vec![Delta::Ser],
        }
    }

    pub fn si() -> Self {
        GSpecification {
            name: "si".into(),
            deltas: vec![Delta::Si],
        }
    }

    pub fn psi(objects: impl IntoIterator<Item = Object>) -> Self {
        let mut deltas = vec![Delta::Psi0];
        deltas.extend(objects.into_iter().map(Delta::PsiOn));
        GSpecification {
            name: "psi".into(),
            deltas,
        }
    }

    pub fn psi_merged() -> Self {
        GSpecification {
            name: "psi-merged".into(),
            deltas: vec![Delta::PsiMerged],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GspecVerdict {
    Pass,
    Fail { delta: Delta, cycle: CriticalCycle },
}

impl GspecVerdict {
    pub fn passed(&self) -> bool {
        matches!(self, GspecVerdict::Pass)
    }
}

/// Pass iff every delta's relation is irreflexive; on failure returns the
/// first failing delta together with a concrete edge-labeled cycle realizing
/// the reflexive pair.
pub fn check_gspec(spec: &GSpecification, g: &DependencyGraph) -> GspecVerdict {
    for delta in &spec.deltas {
        if !evaluate_delta(delta, g).is_irreflexive() {
            let cycle =
                delta_cycle(delta, g).expect("reflexive delta relation must yield a witness cycle");
            return GspecVerdict::Fail {
                delta: delta.clone(),
                cycle,
            };
        }
    }
    GspecVerdict::Pass
}

/// The robustness models with a named critical-cycle criterion.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RobustModel {
    Ser,
    Si,
    Psi,
    CcSer,
    Cp,
}

impl RobustModel {
    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ser" => Some(RobustModel::Ser),
            "si" => Some(RobustModel::Si),
            "psi" => Some(RobustModel::Psi),
            "ccser" | "redblue" => Some(RobustModel::CcSer),
            "cp" => Some(RobustModel::Cp),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            RobustModel::Ser => "ser",
            RobustModel::Si => "si",
            RobustModel::Psi => "psi",
            RobustModel::CcSer => "ccser",
            RobustModel::Cp => "cp",
        }
    }
}

/// One evaluated criterion: the relation is named, and a critical cycle is
/// attached when the check fails.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CriterionReport {
    pub name: String,
    pub acyclic: bool,
    pub cycle: Option<CriticalCycle>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RobustnessReport {
    pub model: RobustModel,
    pub certified: bool,
    pub criteria: Vec<CriterionReport>,
}

/// Evaluates the model's criterion relations and reports acyclicity.
/// "Certified" means no critical cycle of the model's shape exists, so the
/// graph is consistent with an execution of that model.
pub fn robustness_check(model: RobustModel, g: &DependencyGraph) -> RobustnessReport {
    let mut criteria = Vec::new();
    match model {
        RobustModel::Ser => {
            criteria.push(criterion_from_delta("rf+vo+ad", &Delta::Ser, g));
        }
        RobustModel::Si => {
            criteria.push(criterion_from_delta("(rf+vo);ad?", &Delta::Si, g));
        }
        RobustModel::Psi => {
            criteria.push(criterion_from_delta("(rf+vo)+", &Delta::Psi0, g));
            for x in g.history.objects() {
                criteria.push(criterion_from_delta(
                    &format!("(rf+vo)*;ad({x})"),
                    &Delta::PsiOn(x.clone()),
                    g,
                ));
            }
        }
        RobustModel::CcSer => {
            criteria.push(ccser_fenced_criterion(g));
            criteria.push(ccser_strong_criterion(g));
        }
        RobustModel::Cp => {
            criteria.push(cp_criterion(g));
        }
    }
    RobustnessReport {
        model,
        certified: criteria.iter().all(|c| c.acyclic),
        criteria,
    }
}

fn criterion_from_delta(name: &str, delta: &Delta, g: &DependencyGraph) -> CriterionReport {
    let acyclic = evaluate_delta(delta, g).is_irreflexive();
    let cycle = if acyclic { None } else { delta_cycle(delta, g) };
    CriterionReport {
        name: name.to_owned(),
        acyclic,
        cycle,
    }
}

/// ⟨SER⟩ ; RF* ; R ; RF* ; ⟨SER⟩, the fenced form of a relation.
fn fenced(g: &DependencyGraph, r: &Relation) -> Relation {
    let ser = marked_test(g);
    let rf_star = g.rf().reflexive_transitive_closure();
    ser.compose(&rf_star)
        .compose(r)
        .compose(&rf_star)
        .compose(&ser)
}

fn marked_test(g: &DependencyGraph) -> Relation {
    Relation::test(
        &g.universe,
        g.history
            .marked(MarkerTag::Ser)
            .iter()
            .map(|id| g.universe.expect_index(id)),
    )
}

/// RF ∪ VO ∪ Fenced(AD) must be acyclic: every cycle of a red-blue graph has
/// an unprotected anti-dependency.
fn ccser_fenced_criterion(g: &DependencyGraph) -> CriterionReport {
    let base = g.rf().union(g.vo()).union(&fenced(g, g.ad()));
    let cycle = base
        .find_cycle()
        .map(|vs| expand_cycle(g, &vs, StepShape::CcserFenced));
    CriterionReport {
        name: "rf+vo+fenced(ad)".into(),
        acyclic: cycle.is_none(),
        cycle,
    }
}

/// The strengthened criterion: (RF ∪ Fenced((RF∪VO)⁺) ∪ Fenced(AD))⁺ ; AD
/// must be irreflexive: every cycle has an unprotected anti-dependency and
/// another unprotected anti- or write-write dependency.
fn ccser_strong_criterion(g: &DependencyGraph) -> CriterionReport {
    let rfvo_plus = g.rf().union(g.vo()).transitive_closure();
    let base = g
        .rf()
        .union(&fenced(g, &rfvo_plus))
        .union(&fenced(g, g.ad()));
    let composed = base.transitive_closure().compose(g.ad());
    let reflexive = (0..g.universe.len()).find(|&t| composed.contains(t, t));
    let cycle = reflexive.map(|t| {
        // t -base⁺-> s -ad-> t; pick the smallest such s.
        let base_plus = base.transitive_closure();
        let s = (0..g.universe.len())
            .find(|&s| base_plus.contains(t, s) && g.ad().contains(s, t))
            .expect("reflexive pair must decompose");
        let mut edges = path_in_step_graph(g, &base, t, s, StepShape::CcserStrong);
        edges.push(labeled_edge(g, s, t, &[DepKind::Rw], false).expect("ad edge"));
        CriticalCycle { edges }
    });
    CriterionReport {
        name: "(rf+fenced((rf+vo)+)+fenced(ad))+;ad".into(),
        acyclic: cycle.is_none(),
        cycle,
    }
}

/// RF ∪ VO ∪ CSub must be acyclic, where CSub are the critical sub-paths
/// (⟨SER⟩ ; RF* ; AD ; (VO ∪ RF)* ; ⟨SER⟩) \ Id.
fn cp_criterion(g: &DependencyGraph) -> CriterionReport {
    let ser = marked_test(g);
    let rf_star = g.rf().reflexive_transitive_closure();
    let vorf_star = g.vo().union(g.rf()).reflexive_transitive_closure();
    let csub = ser
        .compose(&rf_star)
        .compose(g.ad())
        .compose(&vorf_star)
        .compose(&ser)
        .difference(&Relation::identity(&g.universe));
    let base = g.rf().union(g.vo()).union(&csub);
    let cycle = base
        .find_cycle()
        .map(|vs| expand_cycle(g, &vs, StepShape::Cp));
    CriterionReport {
        name: "rf+vo+csub".into(),
        acyclic: cycle.is_none(),
        cycle,
    }
}

/// How the steps of a cycle in a derived step-relation expand into labeled
/// base edges.
#[derive(Clone, Copy)]
enum StepShape {
    /// Edges of RF ∪ VO ∪ AD directly.
    Union,
    /// (RF ∪ VO) ; AD? steps.
    Si,
    /// Edges of RF ∪ VO.
    RfVo,
    /// (RF ∪ VO)* ; AD(x) steps.
    PsiObj(usize),
    /// RF, VO, or fenced-AD steps.
    CcserFenced,
    /// RF, fenced-(RF∪VO)⁺, or fenced-AD steps.
    CcserStrong,
    /// RF, VO, or critical-sub-path steps.
    Cp,
}

fn delta_cycle(delta: &Delta, g: &DependencyGraph) -> Option<CriticalCycle> {
    let rfvo = g.rf().union(g.vo());
    match delta {
        Delta::Ser => {
            let union = rfvo.union(g.ad());
            union
                .find_cycle()
                .map(|vs| expand_cycle(g, &vs, StepShape::Union))
        }
        Delta::Si => {
            let step = rfvo.compose(&g.ad().reflexive_closure());
            step.find_cycle()
                .map(|vs| expand_cycle(g, &vs, StepShape::Si))
        }
        Delta::Psi0 => rfvo
            .find_cycle()
            .map(|vs| expand_cycle(g, &vs, StepShape::RfVo)),
        Delta::PsiOn(x) => {
            let step = rfvo.reflexive_transitive_closure().compose(g.rw(x));
            let ox = object_index(g, x)?;
            step.find_cycle()
                .map(|vs| expand_cycle(g, &vs, StepShape::PsiObj(ox)))
        }
        Delta::PsiMerged => {
            if !rfvo.transitive_closure().is_irreflexive() {
                return rfvo
                    .find_cycle()
                    .map(|vs| expand_cycle(g, &vs, StepShape::RfVo));
            }
            let star = rfvo.reflexive_transitive_closure();
            for (ox, x) in g.history.objects().iter().enumerate() {
                let writers = Relation::test(
                    &g.universe,
                    g.history
                        .writers_of(x)
                        .iter()
                        .map(|id| g.universe.expect_index(id)),
                );
                let step = writers.compose(&star).compose(g.rw(x));
                if let Some(vs) = step.find_cycle() {
                    return Some(expand_cycle(g, &vs, StepShape::PsiObj(ox)));
                }
            }
            None
        }
    }
}

fn object_index(g: &DependencyGraph, x: &Object) -> Option<usize> {
    g.history.objects().iter().position(|o| o == x)
}

fn object_at(g: &DependencyGraph, ox: usize) -> Object {
    g.history
        .objects()
        .into_iter()
        .nth(ox)
        .expect("object index")
}

/// Expands a cycle over a derived step-relation into labeled base edges.
fn expand_cycle(g: &DependencyGraph, vertices: &[usize], shape: StepShape) -> CriticalCycle {
    let mut edges = Vec::new();
    for w in vertices.windows(2) {
        edges.extend(expand_step(g, w[0], w[1], shape));
    }
    CriticalCycle { edges }
}

/// Shortest path from u to v in a derived step relation, with every step
/// expanded into labeled base edges.
fn path_in_step_graph(
    g: &DependencyGraph,
    step: &Relation,
    u: usize,
    v: usize,
    shape: StepShape,
) -> Vec<CycleEdge> {
    if u == v {
        return Vec::new();
    }
    let path = bfs_path(step, u, v).expect("step path must exist");
    let mut edges = Vec::new();
    for w in path.windows(2) {
        edges.extend(expand_step(g, w[0], w[1], shape));
    }
    edges
}

fn expand_step(g: &DependencyGraph, u: usize, v: usize, shape: StepShape) -> Vec<CycleEdge> {
    match shape {
        StepShape::Union => {
            vec![
                labeled_edge(g, u, v, &[DepKind::Wr, DepKind::Ww, DepKind::Rw], false)
                    .expect("union edge"),
            ]
        }
        StepShape::RfVo => {
            vec![labeled_edge(g, u, v, &[DepKind::Wr, DepKind::Ww], false).expect("rf/vo edge")]
        }
        StepShape::Si => {
            if let Some(e) = labeled_edge(g, u, v, &[DepKind::Wr, DepKind::Ww], false) {
                return vec![e];
            }
            let rfvo = g.rf().union(g.vo());
            let w = (0..g.universe.len())
                .find(|&w| rfvo.contains(u, w) && g.ad().contains(w, v))
                .expect("si step must decompose");
            vec![
                labeled_edge(g, u, w, &[DepKind::Wr, DepKind::Ww], false).expect("rf/vo edge"),
                labeled_edge(g, w, v, &[DepKind::Rw], false).expect("ad edge"),
            ]
        }
        StepShape::PsiObj(ox) => {
            let x = object_at(g, ox);
            let rfvo = g.rf().union(g.vo());
            let star = rfvo.reflexive_transitive_closure();
            let w = (0..g.universe.len())
                .find(|&w| star.contains(u, w) && g.rw(&x).contains(w, v))
                .expect("psi step must decompose");
            let mut edges = rfvo_path(g, u, w);
            edges.push(CycleEdge {
                from: g.universe.id(w).clone(),
                to: g.universe.id(v).clone(),
                kind: DepKind::Rw,
                object: x,
                fenced: false,
            });
            edges
        }
        StepShape::CcserFenced => {
            if let Some(e) = labeled_edge(g, u, v, &[DepKind::Wr, DepKind::Ww], false) {
                return vec![e];
            }
            expand_fenced_ad(g, u, v)
        }
        StepShape::CcserStrong => {
            if let Some(e) = labeled_edge(g, u, v, &[DepKind::Wr], false) {
                return vec![e];
            }
            let rfvo_plus = g.rf().union(g.vo()).transitive_closure();
            if fenced(g, &rfvo_plus).contains(u, v) {
                // Fenced (RF∪VO)⁺ segment; its write-write edges are the
                // protected ones.
                return family_loop_or_path(g, &[DepKind::Wr, DepKind::Ww], u, v)
                    .into_iter()
                    .map(|mut e| {
                        e.fenced = e.kind == DepKind::Ww;
                        e
                    })
                    .collect();
            }
            expand_fenced_ad(g, u, v)
        }
        StepShape::Cp => {
            if let Some(e) = labeled_edge(g, u, v, &[DepKind::Wr, DepKind::Ww], false) {
                return vec![e];
            }
            // Critical sub-path: u -rf*-> a -ad-> b -(vo∪rf)*-> v.
            let rf_star = g.rf().reflexive_transitive_closure();
            let vorf_star = g.vo().union(g.rf()).reflexive_transitive_closure();
            let (a, b) = decompose_pivot(g, u, v, &rf_star, &vorf_star).expect("csub step");
            let mut edges = family_path(g, &[DepKind::Wr], u, a);
            edges.push(labeled_edge(g, a, b, &[DepKind::Rw], true).expect("ad edge"));
            edges.extend(family_path(g, &[DepKind::Ww, DepKind::Wr], b, v));
            edges
        }
    }
}

fn expand_fenced_ad(g: &DependencyGraph, u: usize, v: usize) -> Vec<CycleEdge> {
    let rf_star = g.rf().reflexive_transitive_closure();
    let (a, b) = decompose_pivot(g, u, v, &rf_star, &rf_star).expect("fenced ad step");
    let mut edges = family_path(g, &[DepKind::Wr], u, a);
    edges.push(labeled_edge(g, a, b, &[DepKind::Rw], true).expect("ad edge"));
    edges.extend(family_path(g, &[DepKind::Wr], b, v));
    edges
}

/// Finds the anti-dependency pivot (a, b) of a step u → v with shape
/// `left* ; ad ; right*`.
fn decompose_pivot(
    g: &DependencyGraph,
    u: usize,
    v: usize,
    left_star: &Relation,
    right_star: &Relation,
) -> Option<(usize, usize)> {
    let n = g.universe.len();
    for a in 0..n {
        if !left_star.contains(u, a) {
            continue;
        }
        for b in g.ad().successors(a) {
            if right_star.contains(b, v) {
                return Some((a, b));
            }
        }
    }
    None
}

/// Shortest path from u to v through edges of the given families, labeled.
/// Empty when u == v: star-connector semantics.
fn family_path(g: &DependencyGraph, kinds: &[DepKind], u: usize, v: usize) -> Vec<CycleEdge> {
    if u == v {
        return Vec::new();
    }
    family_loop_or_path(g, kinds, u, v)
}

/// Like [`family_path`], but u == v yields a shortest nonempty cycle:
/// plus-segment semantics.
fn family_loop_or_path(
    g: &DependencyGraph,
    kinds: &[DepKind],
    u: usize,
    v: usize,
) -> Vec<CycleEdge> {
    let rel = kinds
        .iter()
        .fold(Relation::empty(&g.universe), |acc, k| match k {
            DepKind::Wr => acc.union(g.rf()),
            DepKind::Ww => acc.union(g.vo()),
            DepKind::Rw => acc.union(g.ad()),
        });
    let path = bfs_path(&rel, u, v).expect("path must exist in step expansion");
    path.windows(2)
        .map(|w| labeled_edge(g, w[0], w[1], kinds, false).expect("path edge"))
        .collect()
}

fn rfvo_path(g: &DependencyGraph, u: usize, v: usize) -> Vec<CycleEdge> {
    family_path(g, &[DepKind::Wr, DepKind::Ww], u, v)
}

/// Vertex path u → v (inclusive); with u == v, a minimal nonempty cycle
/// through u.
fn bfs_path(rel: &Relation, u: usize, v: usize) -> Option<Vec<usize>> {
    let n = rel.universe().len();
    if u == v && rel.contains(u, u) {
        return Some(vec![u, u]);
    }
    let mut parent: Vec<Option<usize>> = vec![None; n];
    let mut seen = vec![false; n];
    let mut queue = std::collections::VecDeque::new();
    seen[u] = true;
    queue.push_back(u);
    let chain_to_start = |a: usize, parent: &[Option<usize>]| {
        let mut rev = Vec::new();
        let mut cur = a;
        while cur != u {
            rev.push(cur);
            cur = parent[cur].expect("BFS parent chain broken");
        }
        rev.push(u);
        rev.reverse();
        rev
    };
    while let Some(a) = queue.pop_front() {
        for b in rel.successors(a) {
            if b == v && (u != v || a != u) {
                let mut path = chain_to_start(a, &parent);
                path.push(v);
                return Some(path);
            }
            if !seen[b] {
                seen[b] = true;
                parent[b] = Some(a);
                queue.push_back(b);
            }
        }
    }
    None
}

/// Labels the pair (u, v) with the first matching edge family, searching the
/// requested kinds in order and objects in lexicographic order.
fn labeled_edge(
    g: &DependencyGraph,
    u: usize,
    v: usize,
    kinds: &[DepKind],
    fenced: bool,
) -> Option<CycleEdge> {
    for kind in kinds {
        let map = match kind {
            DepKind::Wr => &g.wr,
            DepKind::Ww => &g.ww,
            DepKind::Rw => &g.rw,
        };
        for (x, r) in map {
            if r.contains(u, v) {
                return Some(CycleEdge {
                    from: g.universe.id(u).clone(),
                    to: g.universe.id(v).clone(),
                    kind: *kind,
                    object: x.clone(),
                    fenced,
                });
            }
        }
    }
    None
}
