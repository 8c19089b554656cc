//! JSON wire formats for histories, executions, and dependency graphs.
//!
//! One permissive document shape covers all three kinds:
//!
//! ```json
//! {
//!   "transactions": [
//!     {"id": "t1", "ops": [
//!       {"kind": "write", "obj": "x", "val": 1},
//!       {"kind": "read", "obj": "y", "val": 0},
//!       {"kind": "marker", "tag": "ser"}
//!     ]}
//!   ],
//!   "sessions": [["t1", "t2"], ["t3"]],
//!   "vis": [["t0", "t1"]], "ar": [["t0", "t1"]],
//!   "wr": {"x": [["t0", "t1"]]}, "ww": {"x": [["t0", "t1"]]}
//! }
//! ```
//!
//! `vis`/`ar` make it an execution document (edge lists are explicit —
//! closures are not implied, so the file must carry the transitive
//! visibility), `wr`/`ww` make it a graph document, and `sessions`
//! optionally attaches the session partition. Emitted graphs also carry the
//! derived `rw`; on input, `rw` is cross-checked and rejected on mismatch.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::axec::{AbstractExecution, ExecutionLike};
use crate::depgraph::{DependencyGraph, GraphError};
use crate::history::{History, MarkerTag, Object, Operation, Transaction, TxId};
use crate::rel::Relation;
use crate::sessions::{ExtendedHistory, SessionError};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum OpDoc {
    Read { obj: String, val: i64 },
    Write { obj: String, val: i64 },
    Marker { tag: String },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransactionDoc {
    pub id: String,
    pub ops: Vec<OpDoc>,
}

/// The one document shape; see the module docs for which keys mean what.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Document {
    pub transactions: Vec<TransactionDoc>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sessions: Option<Vec<Vec<String>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub vis: Option<Vec<(String, String)>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ar: Option<Vec<(String, String)>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wr: Option<BTreeMap<String, Vec<(String, String)>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ww: Option<BTreeMap<String, Vec<(String, String)>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rw: Option<BTreeMap<String, Vec<(String, String)>>>,
}

/// What a document describes, judged by the keys it carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DocumentKind {
    History,
    Execution,
    Graph,
}

#[derive(Debug, Error)]
pub enum CodecError {
    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unknown marker tag {0:?} (known: \"ser\")")]
    UnknownMarker(String),
    #[error("edge references unknown transaction {0}")]
    UnknownTransaction(String),
    #[error("document has {has:?} but needs {needs}")]
    WrongKind {
        has: DocumentKind,
        needs: &'static str,
    },
    #[error("graph: {0}")]
    Graph(#[from] GraphError),
    #[error("sessions: {0}")]
    Sessions(#[from] SessionError),
}

impl Document {
    pub fn parse(text: &str) -> Result<Document, CodecError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn kind(&self) -> DocumentKind {
        if self.vis.is_some() || self.ar.is_some() {
            DocumentKind::Execution
        } else if self.wr.is_some() || self.ww.is_some() {
            DocumentKind::Graph
        } else {
            DocumentKind::History
        }
    }

    pub fn to_history(&self) -> Result<History, CodecError> {
        let mut txs = Vec::new();
        for t in &self.transactions {
            let mut ops = Vec::new();
            for op in &t.ops {
                ops.push(match op {
                    OpDoc::Read { obj, val } => Operation::read(obj.as_str(), *val),
                    OpDoc::Write { obj, val } => Operation::write(obj.as_str(), *val),
                    OpDoc::Marker { tag } => match tag.as_str() {
                        "ser" => Operation::marker(MarkerTag::Ser),
                        other => return Err(CodecError::UnknownMarker(other.to_owned())),
                    },
                });
            }
            txs.push(Transaction::new(t.id.as_str(), ops));
        }
        Ok(History::new(txs))
    }

    pub fn to_extended_history(&self) -> Result<ExtendedHistory, CodecError> {
        let history = self.to_history()?;
        match &self.sessions {
            None => Ok(ExtendedHistory::singleton_sessions(history)),
            Some(sessions) => {
                let sessions = sessions
                    .iter()
                    .map(|s| s.iter().map(|id| TxId::new(id.clone())).collect())
                    .collect();
                Ok(ExtendedHistory::new(history, sessions)?)
            }
        }
    }

    /// Requires `vis` and `ar`. Only shape is checked here; semantic
    /// validation is the caller's separate step.
    pub fn to_execution(&self) -> Result<AbstractExecution, CodecError> {
        let (Some(vis), Some(ar)) = (&self.vis, &self.ar) else {
            return Err(CodecError::WrongKind {
                has: self.kind(),
                needs: "an execution document (vis and ar)",
            });
        };
        let history = self.to_history()?;
        let u = Arc::new(history.universe());
        let to_rel = |edges: &Vec<(String, String)>| -> Result<Relation, CodecError> {
            let mut r = Relation::empty(&u);
            for (a, b) in edges {
                let ia = u
                    .index_of(&TxId::new(a.clone()))
                    .ok_or_else(|| CodecError::UnknownTransaction(a.clone()))?;
                let ib = u
                    .index_of(&TxId::new(b.clone()))
                    .ok_or_else(|| CodecError::UnknownTransaction(b.clone()))?;
                r.insert(ia, ib);
            }
            Ok(r)
        };
        let vis = to_rel(vis)?;
        let ar = to_rel(ar)?;
        Ok(AbstractExecution::new(history, vis, ar))
    }

    /// Requires `wr` and `ww`; builds and fully validates the graph,
    /// cross-checking `rw` when present.
    pub fn to_graph(&self) -> Result<DependencyGraph, CodecError> {
        if self.wr.is_none() && self.ww.is_none() {
            return Err(CodecError::WrongKind {
                has: self.kind(),
                needs: "a graph document (wr and ww)",
            });
        }
        let history = self.to_history()?;
        let convert = |m: &Option<BTreeMap<String, Vec<(String, String)>>>| {
            m.as_ref()
                .map(|m| {
                    m.iter()
                        .map(|(x, edges)| {
                            (
                                Object::new(x.clone()),
                                edges
                                    .iter()
                                    .map(|(a, b)| (TxId::new(a.clone()), TxId::new(b.clone())))
                                    .collect::<Vec<_>>(),
                            )
                        })
                        .collect::<BTreeMap<_, _>>()
                })
                .unwrap_or_default()
        };
        let wr = convert(&self.wr);
        let ww = convert(&self.ww);
        let rw = self.rw.as_ref().map(|_| convert(&self.rw));
        Ok(DependencyGraph::from_edges(history, &wr, &ww, rw.as_ref())?)
    }

    pub fn from_history(h: &History) -> Document {
        Document {
            transactions: h
                .transactions()
                .iter()
                .map(|t| TransactionDoc {
                    id: t.id().as_str().to_owned(),
                    ops: t
                        .ops()
                        .map(|op| match op {
                            Operation::Read { object, value } => OpDoc::Read {
                                obj: object.as_str().to_owned(),
                                val: *value,
                            },
                            Operation::Write { object, value } => OpDoc::Write {
                                obj: object.as_str().to_owned(),
                                val: *value,
                            },
                            Operation::Marker(tag) => OpDoc::Marker {
                                tag: tag.to_string(),
                            },
                        })
                        .collect(),
                })
                .collect(),
            ..Document::default()
        }
    }

    pub fn from_execution(e: &AbstractExecution) -> Document {
        let mut doc = Document::from_history(e.history());
        doc.vis = Some(edge_list(e.vis()));
        doc.ar = Some(edge_list(e.ar()));
        doc
    }

    pub fn from_graph(g: &DependencyGraph) -> Document {
        let mut doc = Document::from_history(g.history());
        let family = |pick: &dyn Fn(&Object) -> Relation| {
            let mut out = BTreeMap::new();
            for x in g.history().objects() {
                let r = pick(&x);
                if !r.is_empty() {
                    out.insert(x.as_str().to_owned(), edge_list(&r));
                }
            }
            out
        };
        doc.wr = Some(family(&|x| g.wr(x).clone()));
        doc.ww = Some(family(&|x| g.ww(x).clone()));
        doc.rw = Some(family(&|x| g.rw(x).clone()));
        doc
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("documents always serialize")
    }

    pub fn to_pretty_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("documents always serialize")
    }
}

fn edge_list(r: &Relation) -> Vec<(String, String)> {
    let u = r.universe();
    r.pairs()
        .into_iter()
        .map(|(a, b)| (u.id(a).as_str().to_owned(), u.id(b).as_str().to_owned()))
        .collect()
}
