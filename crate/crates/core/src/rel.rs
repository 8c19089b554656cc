//! Finite binary relations over a fixed transaction universe.
//!
//! Relations are dense boolean adjacency matrices stored as bitset rows;
//! universes stay small (at most a few hundred transactions), and closures
//! and compositions dominate the solver's inner loop, so the dense encoding
//! wins. All operations are pure; relations are immutable values once built.
//!
//! Combining two relations built over different universes is a contract
//! violation and panics.

use std::fmt;
use std::sync::Arc;

use crate::history::TxId;

const WORD_BITS: usize = 64;

/// An ordered sequence of distinct transaction ids; the index ↔ id mapping is
/// a bijection.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Universe {
    members: Vec<TxId>,
}

impl Universe {
    /// Panics if the members are not distinct.
    pub fn new(members: Vec<TxId>) -> Self {
        for (i, id) in members.iter().enumerate() {
            assert!(
                !members[..i].contains(id),
                "universe members must be distinct: {id}"
            );
        }
        Universe { members }
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn id(&self, index: usize) -> &TxId {
        &self.members[index]
    }

    pub fn index_of(&self, id: &TxId) -> Option<usize> {
        self.members.iter().position(|m| m == id)
    }

    /// Panics on unknown ids (contract violation).
    pub fn expect_index(&self, id: &TxId) -> usize {
        self.index_of(id)
            .unwrap_or_else(|| panic!("transaction {id} is not in the universe"))
    }

    pub fn ids(&self) -> &[TxId] {
        &self.members
    }
}

/// A binary relation over a [`Universe`], semantically a boolean adjacency
/// matrix. Row `i` holds the successors of member `i`.
#[derive(Clone, PartialEq, Eq)]
pub struct Relation {
    universe: Arc<Universe>,
    words_per_row: usize,
    bits: Vec<u64>,
}

impl fmt::Debug for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let pairs: Vec<String> = self
            .id_pairs()
            .into_iter()
            .map(|(a, b)| format!("{a}->{b}"))
            .collect();
        write!(f, "Relation{{{}}}", pairs.join(", "))
    }
}

impl Relation {
    pub fn empty(universe: &Arc<Universe>) -> Self {
        let n = universe.len();
        let words_per_row = n.div_ceil(WORD_BITS).max(1);
        Relation {
            universe: universe.clone(),
            words_per_row,
            bits: vec![0; n * words_per_row],
        }
    }

    /// The full relation `universe × universe`.
    pub fn full(universe: &Arc<Universe>) -> Self {
        let mut r = Relation::empty(universe);
        let n = universe.len();
        for i in 0..n {
            for j in 0..n {
                r.insert(i, j);
            }
        }
        r
    }

    pub fn identity(universe: &Arc<Universe>) -> Self {
        let mut r = Relation::empty(universe);
        for i in 0..universe.len() {
            r.insert(i, i);
        }
        r
    }

    pub fn from_pairs(
        universe: &Arc<Universe>,
        pairs: impl IntoIterator<Item = (usize, usize)>,
    ) -> Self {
        let mut r = Relation::empty(universe);
        for (a, b) in pairs {
            r.insert(a, b);
        }
        r
    }

    /// The sub-identity relation `{(t, t) | t ∈ ids}`. Panics on indices
    /// outside the universe.
    pub fn test(universe: &Arc<Universe>, ids: impl IntoIterator<Item = usize>) -> Self {
        let mut r = Relation::empty(universe);
        for i in ids {
            r.insert(i, i);
        }
        r
    }

    pub fn universe(&self) -> &Arc<Universe> {
        &self.universe
    }

    fn row(&self, i: usize) -> &[u64] {
        &self.bits[i * self.words_per_row..(i + 1) * self.words_per_row]
    }

    pub fn insert(&mut self, a: usize, b: usize) {
        let n = self.universe.len();
        assert!(a < n && b < n, "relation pair ({a},{b}) outside universe");
        self.bits[a * self.words_per_row + b / WORD_BITS] |= 1 << (b % WORD_BITS);
    }

    pub fn contains(&self, a: usize, b: usize) -> bool {
        let n = self.universe.len();
        a < n
            && b < n
            && self.bits[a * self.words_per_row + b / WORD_BITS] & (1 << (b % WORD_BITS)) != 0
    }

    pub fn is_empty(&self) -> bool {
        self.bits.iter().all(|w| *w == 0)
    }

    pub fn count(&self) -> usize {
        self.bits.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// Pairs in row-major order.
    pub fn pairs(&self) -> Vec<(usize, usize)> {
        let n = self.universe.len();
        let mut out = Vec::new();
        for a in 0..n {
            for b in self.successors(a) {
                out.push((a, b));
            }
        }
        out
    }

    pub fn id_pairs(&self) -> Vec<(TxId, TxId)> {
        self.pairs()
            .into_iter()
            .map(|(a, b)| (self.universe.id(a).clone(), self.universe.id(b).clone()))
            .collect()
    }

    pub fn successors(&self, a: usize) -> BitIter<'_> {
        BitIter {
            words: self.row(a),
            word_index: 0,
            current: self.row(a).first().copied().unwrap_or(0),
            limit: self.universe.len(),
        }
    }

    fn check_compat(&self, other: &Relation) {
        let same = Arc::ptr_eq(&self.universe, &other.universe) || self.universe == other.universe;
        assert!(same, "relations built over different universes");
    }

    pub fn union(&self, other: &Relation) -> Relation {
        self.check_compat(other);
        let mut out = self.clone();
        for (w, o) in out.bits.iter_mut().zip(&other.bits) {
            *w |= o;
        }
        out
    }

    pub fn intersect(&self, other: &Relation) -> Relation {
        self.check_compat(other);
        let mut out = self.clone();
        for (w, o) in out.bits.iter_mut().zip(&other.bits) {
            *w &= o;
        }
        out
    }

    pub fn difference(&self, other: &Relation) -> Relation {
        self.check_compat(other);
        let mut out = self.clone();
        for (w, o) in out.bits.iter_mut().zip(&other.bits) {
            *w &= !o;
        }
        out
    }

    /// Complement relative to `universe × universe`.
    pub fn complement(&self) -> Relation {
        Relation::full(&self.universe).difference(self)
    }

    pub fn inverse(&self) -> Relation {
        let mut out = Relation::empty(&self.universe);
        for (a, b) in self.pairs() {
            out.insert(b, a);
        }
        out
    }

    /// Relational composition: `(a,c)` present iff `∃b. (a,b) ∈ self ∧ (b,c) ∈ other`.
    pub fn compose(&self, other: &Relation) -> Relation {
        self.check_compat(other);
        let mut out = Relation::empty(&self.universe);
        let n = self.universe.len();
        let wpr = self.words_per_row;
        for a in 0..n {
            for b in self.successors(a) {
                let dst = a * wpr;
                let src = b * wpr;
                for k in 0..wpr {
                    out.bits[dst + k] |= other.bits[src + k];
                }
            }
        }
        out
    }

    /// `R?` — reflexive closure.
    pub fn reflexive_closure(&self) -> Relation {
        self.union(&Relation::identity(&self.universe))
    }

    /// `R⁺` — transitive closure, by Warshall's algorithm on bitset rows.
    pub fn transitive_closure(&self) -> Relation {
        let mut out = self.clone();
        let n = self.universe.len();
        let wpr = self.words_per_row;
        for k in 0..n {
            let krow: Vec<u64> = out.row(k).to_vec();
            for i in 0..n {
                if out.contains(i, k) {
                    let dst = i * wpr;
                    for (w, kw) in krow.iter().enumerate() {
                        out.bits[dst + w] |= kw;
                    }
                }
            }
        }
        out
    }

    /// `R*` — reflexive transitive closure.
    pub fn reflexive_transitive_closure(&self) -> Relation {
        self.transitive_closure().reflexive_closure()
    }

    pub fn is_subset_of(&self, other: &Relation) -> bool {
        self.check_compat(other);
        self.bits.iter().zip(&other.bits).all(|(w, o)| w & !o == 0)
    }

    pub fn is_irreflexive(&self) -> bool {
        (0..self.universe.len()).all(|i| !self.contains(i, i))
    }

    pub fn is_transitive(&self) -> bool {
        self.compose(self).is_subset_of(self)
    }

    /// Totality of the relation restricted to `set`: any two distinct members
    /// are related one way or the other.
    pub fn is_total_over(&self, set: &[usize]) -> bool {
        for (i, &a) in set.iter().enumerate() {
            for &b in &set[i + 1..] {
                if !self.contains(a, b) && !self.contains(b, a) {
                    return false;
                }
            }
        }
        true
    }

    /// Irreflexivity, transitivity, and totality of the relation restricted
    /// to `set`.
    pub fn is_strict_total_order_over(&self, set: &[usize]) -> bool {
        let members: Vec<usize> = set.to_vec();
        let restricted = Relation::from_pairs(
            &self.universe,
            self.pairs()
                .into_iter()
                .filter(|(a, b)| members.contains(a) && members.contains(b)),
        );
        restricted.is_irreflexive() && restricted.is_transitive() && restricted.is_total_over(set)
    }

    /// Some reflexive pair of `self⁺`, if any.
    pub fn is_acyclic(&self) -> bool {
        self.find_cycle().is_none()
    }

    /// A minimal-length witness cycle `v0..vk` with `v0 = vk` and every step
    /// in the relation, or `None` iff `R⁺ ∩ Id = ∅`. Breadth-first search from
    /// each vertex in universe order, so reported cycles are reproducible.
    pub fn find_cycle(&self) -> Option<Vec<usize>> {
        let n = self.universe.len();
        let mut best: Option<Vec<usize>> = None;
        for start in 0..n {
            if self.contains(start, start) {
                return Some(vec![start, start]);
            }
            // BFS for the shortest path start → ... → u with (u, start) an edge.
            let mut parent: Vec<Option<usize>> = vec![None; n];
            let mut dist: Vec<Option<usize>> = vec![None; n];
            let mut queue = std::collections::VecDeque::new();
            dist[start] = Some(0);
            queue.push_back(start);
            let mut found: Option<usize> = None;
            'bfs: while let Some(u) = queue.pop_front() {
                for v in self.successors(u) {
                    if v == start {
                        found = Some(u);
                        break 'bfs;
                    }
                    if dist[v].is_none() {
                        dist[v] = Some(dist[u].unwrap() + 1);
                        parent[v] = Some(u);
                        queue.push_back(v);
                    }
                }
            }
            if let Some(mut u) = found {
                let mut path = vec![start];
                let mut rev = Vec::new();
                while u != start {
                    rev.push(u);
                    u = parent[u].expect("BFS parent chain broken");
                }
                path.extend(rev.into_iter().rev());
                path.push(start);
                if best.as_ref().is_none_or(|b| path.len() < b.len()) {
                    best = Some(path);
                }
            }
        }
        best
    }
}

/// Iterator over the set bits of one adjacency row.
pub struct BitIter<'a> {
    words: &'a [u64],
    word_index: usize,
    current: u64,
    limit: usize,
}

impl Iterator for BitIter<'_> {
    type Item = usize;

    fn next(&mut self) -> Option<usize> {
        loop {
            if self.current != 0 {
                let bit = self.current.trailing_zeros() as usize;
                self.current &= self.current - 1;
                let j = self.word_index * WORD_BITS + bit;
                if j < self.limit {
                    return Some(j);
                }
                continue;
            }
            self.word_index += 1;
            if self.word_index >= self.words.len() {
                return None;
            }
            self.current = self.words[self.word_index];
        }
    }
}
