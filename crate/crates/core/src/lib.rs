//! Checking toolkit for weakly consistent transactional databases.
//!
//! The toolkit implements both of the standard styles for specifying
//! transactional consistency models and the machinery connecting them:
//!
//! * [`history`]: transactions, read/write/marker operations, and histories
//!   with atomic-visibility validation;
//! * [`rel`]: a dense bitset algebra of binary relations over a fixed
//!   transaction universe (union, composition, closures, cycle search);
//! * [`axec`]: abstract executions and pre-executions (visibility plus
//!   arbitration), Last-Write-Wins validation, and extraction of the
//!   underlying dependency graph;
//! * [`spec`]: specification functions, consistency guarantees, and the
//!   named model catalog (causal consistency, red-blue, PSI, SI, SI+SER,
//!   serialisability, consistent prefix);
//! * [`depgraph`]: dependency graphs, graph-based specifications, and the
//!   per-model critical-cycle detectors used for robustness checking;
//! * [`solver`]: the least-fixpoint solver for the inequality system of a
//!   simple model over a dependency graph, membership decision, and witness
//!   synthesis by incremental totalization;
//! * [`oracle`]: brute-force ground truth by exhaustive enumeration of valid
//!   abstract executions, plus the algebraic-law auditor;
//! * [`sessions`]: extended histories with client sessions, session
//!   guarantees (read-your-writes, monotonic writes, strong session), and
//!   per-object causal consistency;
//! * [`codec`]: the JSON wire formats for histories, executions, and
//!   dependency graphs.
//!
//! With the `parallel` feature (on by default) the oracle shards its
//! permutation search across threads with rayon; the sequential fallback
//! produces identical verdicts and witnesses.

pub mod axec;
pub mod codec;
pub mod depgraph;
pub mod history;
pub mod oracle;
pub mod rel;
pub mod sessions;
pub mod solver;
pub mod spec;
#[cfg(test)]
pub(crate) mod testutil;
