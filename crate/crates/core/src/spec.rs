//! Specification functions, consistency guarantees, and the model catalog.
//!
//! A consistency guarantee is a pair of specification functions (ρ, π); an
//! execution satisfies it when ρ(VIS) ; AR ; π(VIS) ⊆ VIS. A model is a set
//! of guarantees; its model set is the histories of executions satisfying all
//! of them. Specification functions form a closed catalog so the fixpoint
//! solver can evaluate them monotonically and the locality law
//! ρ(R) = ρ(T×T) ∩ R? stays checkable.

use std::collections::BTreeSet;
use std::fmt;

use crate::axec::ExecutionLike;
use crate::history::{History, MarkerTag, Object, TxId};
use crate::rel::Relation;

/// The closed catalog of specification functions.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum SpecFunction {
    /// ρ_Id: always the identity relation.
    IdFun,
    /// ρ_SI: R \ Id.
    SiFun,
    /// ρ_x: the sub-identity on the writers of `x`.
    WriteSet(Object),
    /// ρ_S: the sub-identity on transactions carrying the marker.
    Marked(MarkerTag),
}

impl SpecFunction {
    pub fn apply(&self, h: &History, r: &Relation) -> Relation {
        let u = r.universe();
        match self {
            SpecFunction::IdFun => Relation::identity(u),
            SpecFunction::SiFun => r.difference(&Relation::identity(u)),
            SpecFunction::WriteSet(x) => {
                Relation::test(u, h.writers_of(x).iter().filter_map(|id| u.index_of(id)))
            }
            SpecFunction::Marked(tag) => {
                Relation::test(u, h.marked(*tag).iter().filter_map(|id| u.index_of(id)))
            }
        }
    }
}

impl fmt::Display for SpecFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SpecFunction::IdFun => f.write_str("id"),
            SpecFunction::SiFun => f.write_str("si"),
            SpecFunction::WriteSet(x) => write!(f, "writers({x})"),
            SpecFunction::Marked(tag) => write!(f, "marked({tag})"),
        }
    }
}

/// A pair (ρ, π) inducing the axiom ρ(VIS) ; AR ; π(VIS) ⊆ VIS.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct ConsistencyGuarantee {
    pub rho: SpecFunction,
    pub pi: SpecFunction,
}

impl ConsistencyGuarantee {
    pub fn new(rho: SpecFunction, pi: SpecFunction) -> Self {
        ConsistencyGuarantee { rho, pi }
    }

    /// The write-conflict guarantee (ρ_x, ρ_x) for some object, if so shaped.
    pub fn write_conflict_object(&self) -> Option<&Object> {
        match (&self.rho, &self.pi) {
            (SpecFunction::WriteSet(a), SpecFunction::WriteSet(b)) if a == b => Some(a),
            _ => None,
        }
    }
}

impl fmt::Display for ConsistencyGuarantee {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.rho, self.pi)
    }
}

/// A set of consistency guarantees.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct XSpecification {
    pub name: Option<String>,
    pub guarantees: BTreeSet<ConsistencyGuarantee>,
}

impl XSpecification {
    pub fn new(
        name: Option<&str>,
        guarantees: impl IntoIterator<Item = ConsistencyGuarantee>,
    ) -> Self {
        XSpecification {
            name: name.map(str::to_owned),
            guarantees: guarantees.into_iter().collect(),
        }
    }

    /// Simple means: at most one guarantee besides the per-object
    /// write-conflict guarantees (ρ_x, ρ_x).
    pub fn is_simple(&self) -> bool {
        self.guarantees
            .iter()
            .filter(|g| g.write_conflict_object().is_none())
            .count()
            <= 1
    }

    /// Objects guarded by a write-conflict guarantee.
    pub fn write_conflict_objects(&self) -> BTreeSet<Object> {
        self.guarantees
            .iter()
            .filter_map(|g| g.write_conflict_object().cloned())
            .collect()
    }

    /// The guarantees that are not write-conflict guarantees.
    pub fn extra_guarantees(&self) -> Vec<&ConsistencyGuarantee> {
        self.guarantees
            .iter()
            .filter(|g| g.write_conflict_object().is_none())
            .collect()
    }

    pub fn display_name(&self) -> &str {
        self.name.as_deref().unwrap_or("anonymous")
    }
}

/// Returns `None` if the execution satisfies the guarantee, otherwise one
/// violating (T, S) pair, i.e. an edge of ρ(vis) ; ar ; π(vis) outside vis.
pub fn guarantee_counterexample<E: ExecutionLike>(
    e: &E,
    g: &ConsistencyGuarantee,
) -> Option<(TxId, TxId)> {
    let h = e.history();
    let lhs = g
        .rho
        .apply(h, e.vis())
        .compose(e.ar())
        .compose(&g.pi.apply(h, e.vis()));
    let u = e.vis().universe();
    lhs.difference(e.vis())
        .pairs()
        .into_iter()
        .next()
        .map(|(a, b)| (u.id(a).clone(), u.id(b).clone()))
}

pub fn satisfies_guarantee<E: ExecutionLike>(e: &E, g: &ConsistencyGuarantee) -> bool {
    guarantee_counterexample(e, g).is_none()
}

/// True iff the execution satisfies every guarantee of the specification.
pub fn satisfies_spec<E: ExecutionLike>(e: &E, sigma: &XSpecification) -> bool {
    sigma.guarantees.iter().all(|g| satisfies_guarantee(e, g))
}

/// The named consistency models of the catalog.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Model {
    Cc,
    CcSer,
    Psi,
    Si,
    SiSer,
    Ser,
    Cp,
}

impl Model {
    pub const ALL: [Model; 7] = [
        Model::Cc,
        Model::CcSer,
        Model::Psi,
        Model::Si,
        Model::SiSer,
        Model::Ser,
        Model::Cp,
    ];

    /// CLI names; `redblue` is an alias for `ccser`.
    pub fn parse(s: &str) -> Option<Model> {
        match s.to_ascii_lowercase().as_str() {
            "cc" => Some(Model::Cc),
            "ccser" | "redblue" => Some(Model::CcSer),
            "psi" => Some(Model::Psi),
            "si" => Some(Model::Si),
            "si+ser" | "siser" => Some(Model::SiSer),
            "ser" => Some(Model::Ser),
            "cp" => Some(Model::Cp),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Model::Cc => "cc",
            Model::CcSer => "ccser",
            Model::Psi => "psi",
            Model::Si => "si",
            Model::SiSer => "si+ser",
            Model::Ser => "ser",
            Model::Cp => "cp",
        }
    }

    /// Instantiates the model over the given objects (the objects of the
    /// history under analysis; the per-object write-conflict guarantees are
    /// only materialized for objects that actually occur).
    pub fn spec(&self, objects: &BTreeSet<Object>) -> XSpecification {
        use SpecFunction::*;
        let conflict = |objects: &BTreeSet<Object>| {
            objects
                .iter()
                .map(|x| ConsistencyGuarantee::new(WriteSet(x.clone()), WriteSet(x.clone())))
                .collect::<Vec<_>>()
        };
        let guarantees = match self {
            Model::Cc => vec![],
            Model::CcSer => vec![ConsistencyGuarantee::new(
                Marked(MarkerTag::Ser),
                Marked(MarkerTag::Ser),
            )],
            Model::Psi => conflict(objects),
            Model::Si => {
                let mut g = conflict(objects);
                g.push(ConsistencyGuarantee::new(IdFun, SiFun));
                g
            }
            Model::SiSer => {
                let mut g = conflict(objects);
                g.push(ConsistencyGuarantee::new(IdFun, SiFun));
                g.push(ConsistencyGuarantee::new(
                    Marked(MarkerTag::Ser),
                    Marked(MarkerTag::Ser),
                ));
                g
            }
            Model::Ser => vec![ConsistencyGuarantee::new(IdFun, IdFun)],
            Model::Cp => vec![
                ConsistencyGuarantee::new(IdFun, SiFun),
                ConsistencyGuarantee::new(Marked(MarkerTag::Ser), Marked(MarkerTag::Ser)),
            ],
        };
        XSpecification::new(Some(self.name()), guarantees)
    }
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::axec::{validate_execution, AbstractExecution};
    use crate::history::{Operation, Transaction};
    use crate::rel::Universe;
    use proptest::prelude::*;
    use std::sync::Arc;

    fn fig1() -> AbstractExecution {
        let h = History::new([
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
        ]);
        let u = Arc::new(h.universe());
        let e = |a: &str, b: &str| (u.expect_index(&a.into()), u.expect_index(&b.into()));
        let vis = Relation::from_pairs(
            &u,
            [
                e("t0", "t1"),
                e("t0", "t2"),
                e("t1", "s"),
                e("t2", "s"),
                e("t0", "s"),
            ],
        );
        let ar = Relation::from_pairs(
            &u,
            [
                e("t0", "t1"),
                e("t0", "t2"),
                e("t0", "s"),
                e("t1", "t2"),
                e("t1", "s"),
                e("t2", "s"),
            ],
        );
        AbstractExecution::new(h, vis, ar)
    }

    #[test]
    fn si_fun_on_identity_is_empty() {
        let e = fig1();
        let id = Relation::identity(e.universe());
        assert!(SpecFunction::SiFun.apply(e.history(), &id).is_empty());
    }

    #[test]
    fn write_set_fun_is_writers_test() {
        let e = fig1();
        let u = e.universe();
        let r = SpecFunction::WriteSet("acct".into()).apply(e.history(), e.vis());
        let expected = Relation::test(u, ["t0", "t1", "t2"].map(|s| u.expect_index(&s.into())));
        assert_eq!(r, expected);
    }

    #[test]
    fn fig1_fails_ser_with_t1_t2_witness() {
        let e = fig1();
        let g = ConsistencyGuarantee::new(SpecFunction::IdFun, SpecFunction::IdFun);
        assert_eq!(
            guarantee_counterexample(&e, &g),
            Some(("t1".into(), "t2".into()))
        );
    }

    #[test]
    fn fig1_satisfies_cc_vacuously() {
        let e = fig1();
        let sigma = Model::Cc.spec(&e.history().objects());
        assert!(sigma.guarantees.is_empty());
        assert!(satisfies_spec(&e, &sigma));
    }

    #[test]
    fn marked_lost_update_fails_ccser() {
        let h = History::new([
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
        ]);
        let u = Arc::new(h.universe());
        let e = |a: &str, b: &str| (u.expect_index(&a.into()), u.expect_index(&b.into()));
        let vis = Relation::from_pairs(
            &u,
            [
                e("t0", "t1"),
                e("t0", "t2"),
                e("t1", "s"),
                e("t2", "s"),
                e("t0", "s"),
            ],
        );
        let ar = Relation::from_pairs(
            &u,
            [
                e("t0", "t1"),
                e("t0", "t2"),
                e("t0", "s"),
                e("t1", "t2"),
                e("t1", "s"),
                e("t2", "s"),
            ],
        );
        let exec = AbstractExecution::new(h, vis, ar);
        assert!(validate_execution(&exec).is_empty());
        let g = ConsistencyGuarantee::new(
            SpecFunction::Marked(MarkerTag::Ser),
            SpecFunction::Marked(MarkerTag::Ser),
        );
        assert!(!satisfies_guarantee(&exec, &g));
    }

    #[test]
    fn catalog_shapes() {
        let objects: BTreeSet<Object> = ["x", "y"].map(Object::from).into_iter().collect();
        assert!(Model::Cc.spec(&objects).guarantees.is_empty());
        let psi = Model::Psi.spec(&objects);
        assert_eq!(psi.guarantees.len(), 2);
        assert!(psi.is_simple());
        assert!(Model::Si.spec(&objects).is_simple());
        assert!(Model::Ser.spec(&objects).is_simple());
        assert!(Model::CcSer.spec(&objects).is_simple());
        assert!(!Model::SiSer.spec(&objects).is_simple());
        assert!(!Model::Cp.spec(&objects).is_simple());
    }

    #[test]
    fn model_names_round_trip() {
        for m in Model::ALL {
            assert_eq!(Model::parse(m.name()), Some(m));
        }
        assert_eq!(Model::parse("redblue"), Some(Model::CcSer));
        assert_eq!(Model::parse("nope"), None);
    }

    fn arb_relation(n: usize) -> impl Strategy<Value = Relation> {
        proptest::collection::vec(proptest::bool::ANY, n * n).prop_map(move |bits| {
            let u = Arc::new(Universe::new(
                (0..n).map(|i| TxId::new(format!("t{i}"))).collect(),
            ));
            Relation::from_pairs(
                &u,
                bits.iter()
                    .enumerate()
                    .filter(|(_, b)| **b)
                    .map(|(k, _)| (k / n, k % n)),
            )
        })
    }

    fn sample_functions() -> Vec<SpecFunction> {
        vec![
            SpecFunction::IdFun,
            SpecFunction::SiFun,
            SpecFunction::WriteSet("acct".into()),
            SpecFunction::Marked(MarkerTag::Ser),
        ]
    }

    proptest! {
        #[test]
        fn locality(r in arb_relation(4)) {
            // ρ(R) = ρ(T×T) ∩ R?
            let e = fig1();
            let h = e.history();
            // Rebuild r over fig1's universe so WriteSet/Marked are exercised.
            let u = e.universe();
            let r = Relation::from_pairs(u, r.pairs());
            for f in sample_functions() {
                let local = f.apply(h, &r);
                let global = f
                    .apply(h, &Relation::full(u))
                    .intersect(&r.reflexive_closure());
                prop_assert_eq!(local, global);
            }
        }

        #[test]
        fn union_distribution(r1 in arb_relation(4), r2 in arb_relation(4)) {
            // ρ(R1 ∪ R2) = ρ(R1) ∪ ρ(R2)
            let e = fig1();
            let h = e.history();
            let u = e.universe();
            let r1 = Relation::from_pairs(u, r1.pairs());
            let r2 = Relation::from_pairs(u, r2.pairs());
            for f in sample_functions() {
                prop_assert_eq!(
                    f.apply(h, &r1.union(&r2)),
                    f.apply(h, &r1).union(&f.apply(h, &r2))
                );
            }
        }

        #[test]
        fn global_restriction(r in arb_relation(4)) {
            // ρ(T×T) ∩ R ⊆ ρ(R)
            let e = fig1();
            let h = e.history();
            let u = e.universe();
            let r = Relation::from_pairs(u, r.pairs());
            for f in sample_functions() {
                prop_assert!(f
                    .apply(h, &Relation::full(u))
                    .intersect(&r)
                    .is_subset_of(&f.apply(h, &r)));
            }
        }
    }

    #[test]
    fn guarantee_lhs_is_always_inside_ar() {
        // ρ(VIS);AR;π(VIS) ⊆ AR for every guarantee on a valid execution.
        let e = fig1();
        let h = e.history();
        for m in Model::ALL {
            for g in &m.spec(&h.objects()).guarantees {
                let lhs = g
                    .rho
                    .apply(h, e.vis())
                    .compose(e.ar())
                    .compose(&g.pi.apply(h, e.vis()));
                assert!(lhs.is_subset_of(e.ar()), "{g} escapes AR");
            }
        }
    }
}
